//! Flag value formats.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use lcmp::measures::{AmplitudeLaw, EmpiricalSpectrum, SpectralMeasure};
use lcmp::{Error, Result};

/// Inward nudge of the grid endpoints.
pub const GRID_NUDGE: f64 = 1e-9;

fn number(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

/// `a:b:count` into `count` uniform points of [a + 1e-9, b - 1e-9].
pub fn grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, k] = parts[..] else {
        return Err(Error::Parse(format!("grid must be a:b:count, got {s:?}")));
    };
    let (a, b) = (number(a)? + GRID_NUDGE, number(b)? - GRID_NUDGE);
    let k: usize = k.trim().parse().map_err(|e| Error::Parse(format!("grid count {k:?}: {e}")))?;
    if k < 2 || !(a < b) {
        return Err(Error::InvalidArgument(format!("grid {s:?} needs a < b and at least 2 points")));
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}

/// `a:b`.
pub fn interval(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(':').ok_or_else(|| Error::Parse(format!("interval must be a:b, got {s:?}")))?;
    Ok((number(a)?, number(b)?))
}

/// Comma-separated list.
pub fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
        .collect()
}

/// `re,im` or algebraic forms such as `i`, `-2i`, `1+0.1i`, `0.5-0.5i`.
pub fn complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    if let Some((re, im)) = s.split_once(',') {
        return Ok(Complex64::new(number(re)?, number(im)?));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(number(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (number(&body[..k])?, &body[k..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        t => number(t)?,
    };
    Ok(Complex64::new(re, im))
}

fn read(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

/// `atoms:t:w,...` or a JSON file.
pub fn amplitude_law(s: &str) -> Result<AmplitudeLaw> {
    if s.trim_start().starts_with("atoms:") {
        s.parse()
    } else {
        AmplitudeLaw::from_json(&read(Path::new(s))?)
    }
}

/// `atoms:x:w,...`, a measure JSON file or a `lambda,rho` density CSV.
pub fn measure(s: &str) -> Result<SpectralMeasure> {
    if s.trim_start().starts_with("atoms:") {
        return s.parse();
    }
    let path = Path::new(s);
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "csv") {
        SpectralMeasure::from_density_csv(&text)
    } else {
        SpectralMeasure::from_json(&text)
    }
}

/// Counting measure of an eigenvalue file.
pub fn spectrum_measure(path: &Path) -> Result<SpectralMeasure> {
    Ok(EmpiricalSpectrum::from_csv(&read(path)?)?.to_measure())
}
