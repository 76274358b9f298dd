//! Measures on the real line: atoms plus a piecewise-linear density.
//!
//! Everything here is an immutable value. Stieltjes transforms, CDFs and
//! moments are exact for the atomic part and use trapezoid quadrature on the
//! density grid.

use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_on;

/// Total mass may exceed one by at most this much.
pub const MASS_SLACK: f64 = 1e-6;

/// Piecewise-linear density on a strictly increasing grid, zero outside.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    grid: Vec<f64>,
    values: Vec<f64>,
    /// Running integral of the density at each grid node.
    cumulative: Vec<f64>,
}

impl Density {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidMeasure(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.is_empty() {
            return Err(Error::InvalidMeasure("empty density grid".into()));
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) || grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMeasure("density grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidMeasure("density values must be finite and non-negative".into()));
        }
        let mut cumulative = Vec::with_capacity(grid.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for i in 1..grid.len() {
            acc += 0.5 * (values[i] + values[i - 1]) * (grid[i] - grid[i - 1]);
            cumulative.push(acc);
        }
        Ok(Self { grid, values, cumulative })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    /// Linear interpolation, zero outside the grid.
    pub fn value_at(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x < g[0] || x > g[g.len() - 1] {
            return 0.0;
        }
        let i = g.partition_point(|&t| t <= x);
        if i == g.len() {
            return self.values[g.len() - 1];
        }
        let (x0, x1) = (g[i - 1], g[i]);
        let t = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - t) + self.values[i] * t
    }

    /// Integral of the density over (-inf, x].
    pub fn integral_to(&self, x: f64) -> f64 {
        let g = &self.grid;
        if x <= g[0] {
            return 0.0;
        }
        if x >= g[g.len() - 1] {
            return self.mass();
        }
        let i = g.partition_point(|&t| t <= x) - 1;
        let h = g[i + 1] - g[i];
        let t = x - g[i];
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        self.cumulative[i] + v0 * t + (v1 - v0) * t * t / (2.0 * h)
    }

    /// Trapezoid weights of the grid nodes.
    fn trapezoid_weights(&self) -> Vec<f64> {
        let g = &self.grid;
        let n = g.len();
        let mut w = vec![0.0; n];
        for i in 1..n {
            let h = 0.5 * (g[i] - g[i - 1]);
            w[i - 1] += h;
            w[i] += h;
        }
        w
    }
}

/// A finite measure on the real line: atoms plus an optional density.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMeasure {
    atoms: Vec<(f64, f64)>,
    atom_cumulative: Vec<f64>,
    density: Option<Density>,
    probability: bool,
}

impl SpectralMeasure {
    /// Validates the invariants: strictly increasing atom locations,
    /// non-negative masses, total mass at most `1 + MASS_SLACK`.
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        let m = Self::assemble(atoms, density)?;
        let total = m.total_mass();
        if total > 1.0 + MASS_SLACK {
            return Err(Error::InvalidMeasure(format!("total mass {total} exceeds 1")));
        }
        Ok(m)
    }

    /// Like [`SpectralMeasure::new`] but without the mass cap; the
    /// probability flag is set by the caller. Used for numerically
    /// reconstructed measures whose mass is only known to a tolerance.
    pub(crate) fn with_flag(
        atoms: Vec<(f64, f64)>,
        density: Option<Density>,
        probability: bool,
    ) -> Result<Self> {
        let mut m = Self::assemble(atoms, density)?;
        m.probability = probability;
        Ok(m)
    }

    fn assemble(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        if !atoms.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::InvalidMeasure("atom locations must be strictly increasing".into()));
        }
        if atoms.iter().any(|&(x, w)| !x.is_finite() || !(w.is_finite() && w >= 0.0)) {
            return Err(Error::InvalidMeasure("atoms need finite locations and non-negative masses".into()));
        }
        let mut atom_cumulative = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        for &(_, w) in &atoms {
            acc += w;
            atom_cumulative.push(acc);
        }
        let mut m = Self { atoms, atom_cumulative, density, probability: false };
        m.probability = (m.total_mass() - 1.0).abs() <= MASS_SLACK;
        Ok(m)
    }

    /// Sorts the atoms and merges coincident locations.
    pub fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|a| a.0.is_nan()) {
            return Err(Error::InvalidMeasure("NaN atom location".into()));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += w,
                _ => merged.push((x, w)),
            }
        }
        Self::new(merged, None)
    }

    pub fn dirac(location: f64) -> Self {
        Self::new(vec![(location, 1.0)], None).expect("unit atom is a valid measure")
    }

    pub fn from_density(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(Vec::new(), Some(Density::new(grid, values)?))
    }

    /// Discretizes a density on [a, b] into `order` Gauss–Legendre atoms,
    /// renormalized to unit mass.
    pub fn atoms_from_density<F: Fn(f64) -> f64>(pdf: F, a: f64, b: f64, order: usize) -> Result<Self> {
        let atoms = quadrature_atoms(pdf, a, b, order)?;
        Self::new(atoms, None)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atom_cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_mass() + self.density.as_ref().map_or(0.0, Density::mass)
    }

    pub fn is_probability(&self) -> bool {
        self.probability
    }

    /// f(z) = sum_j m_j / (x_j - z) + trapezoid of rho(l) / (l - z).
    ///
    /// The density part is only accurate once the grid spacing is small
    /// compared with |Im z|.
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 {
            return Err(Error::RealAxisEvaluation { re: z.re, im: z.im });
        }
        let mut f = Complex64::new(0.0, 0.0);
        for &(x, w) in &self.atoms {
            f += w / (x - z);
        }
        if let Some(d) = &self.density {
            for ((x, v), w) in d.grid.iter().zip(&d.values).zip(d.trapezoid_weights()) {
                if *v != 0.0 {
                    f += v * w / (x - z);
                }
            }
        }
        Ok(f)
    }

    /// Right-continuous distribution function F(x) = N((-inf, x]).
    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.0 <= x);
        self.atoms_below(k) + self.density.as_ref().map_or(0.0, |d| d.integral_to(x))
    }

    /// Left limit F(x-) = N((-inf, x)).
    pub fn cdf_left(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|a| a.0 < x);
        self.atoms_below(k) + self.density.as_ref().map_or(0.0, |d| d.integral_to(x))
    }

    fn atoms_below(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.atom_cumulative[k - 1]
        }
    }

    /// Generalized inverse of the CDF, inf { x : F(x) >= u }, for u in (0, 1].
    pub fn quantile(&self, u: f64) -> Result<f64> {
        let total = self.total_mass();
        if !(u > 0.0 && u <= total + MASS_SLACK) {
            return Err(Error::InvalidArgument(format!("quantile level {u} outside (0, {total}]")));
        }
        let u = u.min(total);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, _) in &self.atoms {
            lo = lo.min(x);
            hi = hi.max(x);
        }
        if let Some(d) = &self.density {
            lo = lo.min(d.grid[0]);
            hi = hi.max(d.grid[d.grid.len() - 1]);
        }
        // an atom that reaches level u is the answer exactly
        let k = self.atom_cumulative.partition_point(|&c| c < u);
        if self.density.is_none() {
            return Ok(self.atoms[k.min(self.atoms.len() - 1)].0);
        }
        lo -= 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        // snap onto an atom location reached from the left
        if let Some(&(x, _)) = self.atoms.iter().find(|a| a.0 >= lo && a.0 <= hi) {
            return Ok(x);
        }
        Ok(hi)
    }

    /// k-th moment, k <= 4.
    pub fn moment(&self, k: u32) -> Result<f64> {
        if k > 4 {
            return Err(Error::UnsupportedOrder(k));
        }
        let k = k as i32;
        let mut s: f64 = self.atoms.iter().map(|&(x, w)| w * x.powi(k)).sum();
        if let Some(d) = &self.density {
            s += d
                .grid
                .iter()
                .zip(&d.values)
                .zip(d.trapezoid_weights())
                .map(|((x, v), w)| v * w * x.powi(k))
                .sum::<f64>();
        }
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&MeasureJson::from(self)).expect("measure serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MeasureJson = serde_json::from_str(text)?;
        raw.try_into()
    }

    /// Two-column `lambda,rho` CSV of the density part.
    pub fn density_csv(&self) -> String {
        let mut out = String::from("lambda,rho\n");
        if let Some(d) = &self.density {
            for (x, v) in d.grid.iter().zip(&d.values) {
                let _ = writeln!(out, "{x},{v}");
            }
        }
        out
    }

    /// Reads the CSV written by [`SpectralMeasure::density_csv`] into a
    /// measure with no atoms.
    pub fn from_density_csv(text: &str) -> Result<Self> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let mut cols = line.split(',');
            let (Some(a), Some(b), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(Error::Parse(format!("expected two columns: {line:?}")));
            };
            match (a.trim().parse::<f64>(), b.trim().parse::<f64>()) {
                (Ok(x), Ok(v)) => {
                    grid.push(x);
                    values.push(v);
                }
                _ if grid.is_empty() => continue, // header
                _ => return Err(Error::Parse(format!("bad CSV row {line:?}"))),
            }
        }
        if grid.is_empty() {
            return Self::new(Vec::new(), None);
        }
        Self::from_density(grid, values)
    }
}

/// `atoms:x1:w1,x2:w2,...`
impl FromStr for SpectralMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_atoms(parse_atom_list(s)?)
    }
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    atoms: Vec<[f64; 2]>,
    #[serde(default)]
    grid: Vec<f64>,
    #[serde(default)]
    values: Vec<f64>,
}

impl From<&SpectralMeasure> for MeasureJson {
    fn from(m: &SpectralMeasure) -> Self {
        let (grid, values) = match &m.density {
            Some(d) => (d.grid.clone(), d.values.clone()),
            None => (Vec::new(), Vec::new()),
        };
        Self { atoms: m.atoms.iter().map(|&(x, w)| [x, w]).collect(), grid, values }
    }
}

impl TryFrom<MeasureJson> for SpectralMeasure {
    type Error = Error;

    fn try_from(raw: MeasureJson) -> Result<Self> {
        let density = if raw.grid.is_empty() && raw.values.is_empty() {
            None
        } else {
            Some(Density::new(raw.grid, raw.values)?)
        };
        let atoms = raw.atoms.into_iter().map(|[x, w]| (x, w)).collect();
        // Measures read back from disk may be numerically reconstructed limits.
        let m = SpectralMeasure::assemble(atoms, density)?;
        if m.total_mass() > 1.0 + 1e-2 {
            return Err(Error::InvalidMeasure(format!("total mass {} exceeds 1", m.total_mass())));
        }
        Ok(m)
    }
}

impl Serialize for SpectralMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpectralMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MeasureJson::deserialize(d)?;
        raw.try_into().map_err(serde::de::Error::custom)
    }
}

/// The amplitude law: a finite list of weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeLaw {
    atoms: Vec<(f64, f64)>,
}

impl AmplitudeLaw {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("amplitude law needs at least one atom".into()));
        }
        if atoms.iter().any(|&(t, w)| !t.is_finite() || !(w.is_finite() && w >= 0.0)) {
            return Err(Error::InvalidMeasure("amplitude atoms need finite tau and non-negative weight".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMeasure(format!("amplitude weights sum to {total}, not 1")));
        }
        Ok(Self { atoms })
    }

    pub fn dirac(tau: f64) -> Self {
        Self { atoms: vec![(tau, 1.0)] }
    }

    /// Gauss–Legendre discretization of a density on [a, b], renormalized.
    pub fn from_density<F: Fn(f64) -> f64>(pdf: F, a: f64, b: f64, order: usize) -> Result<Self> {
        let mut atoms = quadrature_atoms(pdf, a, b, order)?;
        // exact unit sum after renormalization rounding
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if let Some(last) = atoms.last_mut() {
            last.1 += 1.0 - total;
        }
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn max_abs_tau(&self) -> f64 {
        self.atoms.iter().fold(0.0, |m, a| m.max(a.0.abs()))
    }

    /// The first absolute moment, sum |tau_k| w_k.
    pub fn mean_abs(&self) -> f64 {
        self.atoms.iter().map(|&(t, w)| t.abs() * w).sum()
    }

    pub fn has_atom_at_zero(&self) -> bool {
        self.atoms.iter().any(|&(t, w)| t == 0.0 && w > 0.0)
    }

    /// Atoms with |tau| >= level are sent to zero, keeping their weight.
    pub fn truncated(&self, level: f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|&(t, w)| if t.abs() < level { (t, w) } else { (0.0, w) })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("amplitude law serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `atoms:t1:w1,t2:w2,...`
impl FromStr for AmplitudeLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_atom_list(s)?)
    }
}

impl std::fmt::Display for AmplitudeLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("atoms:")?;
        for (i, (t, w)) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{t}:{w}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct AmplitudeJson {
    atoms: Vec<[f64; 2]>,
}

impl Serialize for AmplitudeLaw {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AmplitudeJson { atoms: self.atoms.iter().map(|&(t, w)| [t, w]).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for AmplitudeLaw {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = AmplitudeJson::deserialize(d)?;
        AmplitudeLaw::new(raw.atoms.into_iter().map(|[t, w]| (t, w)).collect())
            .map_err(serde::de::Error::custom)
    }
}

fn parse_atom_list(s: &str) -> Result<Vec<(f64, f64)>> {
    let body = s
        .trim()
        .strip_prefix("atoms:")
        .ok_or_else(|| Error::Parse(format!("expected 'atoms:x:w,...', got {s:?}")))?;
    body.split(',')
        .map(|pair| {
            let (x, w) = pair
                .trim()
                .rsplit_once(':')
                .ok_or_else(|| Error::Parse(format!("atom {pair:?} is not 'x:w'")))?;
            let x = x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{x:?}: {e}")))?;
            let w = w.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{w:?}: {e}")))?;
            Ok((x, w))
        })
        .collect()
}

fn quadrature_atoms<F: Fn(f64) -> f64>(pdf: F, a: f64, b: f64, order: usize) -> Result<Vec<(f64, f64)>> {
    if !(a < b) || order == 0 {
        return Err(Error::InvalidArgument(format!("bad quadrature interval [{a}, {b}] / order {order}")));
    }
    let (x, w) = gauss_legendre_on(a, b, order);
    let raw: Vec<f64> = x.iter().zip(&w).map(|(x, w)| w * pdf(*x).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidMeasure("density integrates to zero on the interval".into()));
    }
    Ok(x.into_iter().zip(raw).map(|(x, m)| (x, m / total)).filter(|a| a.1 > 0.0).collect())
}

/// Sorted eigenvalues of an n x n matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSpectrum {
    eigenvalues: Vec<f64>,
}

impl EmpiricalSpectrum {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::EmptySpectrum);
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self { eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.eigenvalues.partition_point(|&l| l <= x) as f64 / self.n() as f64
    }

    pub fn cdf_left(&self, x: f64) -> f64 {
        self.eigenvalues.partition_point(|&l| l < x) as f64 / self.n() as f64
    }

    /// n^{-1} sum_l 1/(lambda_l - z).
    pub fn stieltjes(&self, z: Complex64) -> Result<Complex64> {
        if z.im == 0.0 {
            return Err(Error::RealAxisEvaluation { re: z.re, im: z.im });
        }
        let s: Complex64 = self.eigenvalues.iter().map(|&l| 1.0 / (l - z)).sum();
        Ok(s / self.n() as f64)
    }

    /// The normalized counting measure as an atomic measure.
    pub fn to_measure(&self) -> SpectralMeasure {
        let w = 1.0 / self.n() as f64;
        SpectralMeasure::from_atoms(self.eigenvalues.iter().map(|&l| (l, w)).collect())
            .expect("counting measure is valid")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for l in &self.eigenvalues {
            let _ = writeln!(out, "{l}");
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let vals = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.parse::<f64>().map_err(|e| Error::Parse(format!("{l:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vals)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "n": self.n(), "eigenvalues": self.eigenvalues }).to_string()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            eigenvalues: Vec<f64>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        if raw.n != raw.eigenvalues.len() {
            return Err(Error::ShapeMismatch(format!("n = {} but {} eigenvalues", raw.n, raw.eigenvalues.len())));
        }
        Self::new(raw.eigenvalues)
    }
}

pub fn stieltjes_of_measure(measure: &SpectralMeasure, z: Complex64) -> Result<Complex64> {
    measure.stieltjes(z)
}

pub fn cdf(measure: &SpectralMeasure, x: f64) -> f64 {
    measure.cdf(x)
}

pub fn moment(measure: &SpectralMeasure, k: u32) -> Result<f64> {
    measure.moment(k)
}

/// Density rho_eps(l) = Im f(l + i eps) / pi on the grid, no atoms.
pub fn invert_stieltjes<F>(f_eval: F, grid: &[f64], eps: f64) -> Result<SpectralMeasure>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let values = grid
        .iter()
        .map(|&l| f_eval(Complex64::new(l, eps)).map(|f| (f.im / std::f64::consts::PI).max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    let density = Density::new(grid.to_vec(), values)?;
    let total = density.mass();
    SpectralMeasure::with_flag(Vec::new(), Some(density), (total - 1.0).abs() <= MASS_SLACK)
}

/// Kolmogorov–Smirnov distance sup_x |F_emp(x) - F(x)|.
///
/// Checked at every eigenvalue from both sides, which covers the supremum
/// because F_emp is constant between eigenvalues. The tail term
/// |1 - F(+inf)| accounts for measures with mass below one.
pub fn ks_distance(spec: &EmpiricalSpectrum, measure: &SpectralMeasure) -> Result<f64> {
    let eig = spec.eigenvalues();
    if eig.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let n = eig.len() as f64;
    let mut sup = (1.0 - measure.total_mass()).abs();
    let mut i = 0;
    while i < eig.len() {
        let x = eig[i];
        let mut j = i;
        while j < eig.len() && eig[j] == x {
            j += 1;
        }
        let below = i as f64 / n;
        let upto = j as f64 / n;
        sup = sup.max((upto - measure.cdf(x)).abs()).max((below - measure.cdf_left(x)).abs());
        i = j;
    }
    Ok(sup)
}
