//! Monte Carlo checks of the variance and concentration bounds and of the
//! convergence of empirical spectra to the solved limit.
//!
//! Every check aggregates trials in trial-index order, so a report is a pure
//! function of the configuration and the master seed.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::ensemble::{counting_measure, sample_spectrum, EnsembleConfig, H0Spec};
use crate::error::{Error, Result};
use crate::measures::{ks_distance, AmplitudeLaw, EmpiricalSpectrum, SpectralMeasure};
use crate::rng::RngStream;
use crate::samplers::{fill_real, sample_vector, RandomVector, VectorLaw};
use crate::solver::{limit_density, ModelSpec, SolverOptions};

/// Standard errors of slack granted to every stochastic criterion.
pub const SE_SLACK: f64 = 3.0;
/// Decay exponent that a quadratic-form variance must beat.
pub const QUADFORM_SLOPE_LIMIT: f64 = -0.2;
/// Variances below this are treated as exactly zero.
pub const ZERO_VARIANCE: f64 = 1e-20;

/// The serialized form shared by all checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub kind: String,
    pub params: Value,
    pub estimate: f64,
    pub bound: f64,
    pub se: f64,
    pub pass: bool,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceReport {
    pub estimate: f64,
    pub bound: f64,
    pub trials: usize,
    pub standard_error: f64,
}

impl VarianceReport {
    pub fn passes(&self) -> bool {
        self.estimate <= self.bound + SE_SLACK * self.standard_error
    }

    fn from_squared_deviations(dev2: &[f64], bound: f64) -> Self {
        let t = dev2.len() as f64;
        let estimate = dev2.iter().sum::<f64>() / (t - 1.0);
        // asymptotic standard error of a sample variance, sqrt((mu4 - var^2) / T)
        let mu4 = dev2.iter().map(|d| d * d).sum::<f64>() / t;
        let standard_error = ((mu4 - estimate * estimate).max(0.0) / t).sqrt();
        Self { estimate, bound, trials: dev2.len(), standard_error }
    }

    fn of_real(xs: &[f64], bound: f64) -> Self {
        if xs.iter().all(|x| *x == xs[0]) {
            return Self::from_squared_deviations(&vec![0.0; xs.len()], bound);
        }
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let dev2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        Self::from_squared_deviations(&dev2, bound)
    }

    fn of_complex(zs: &[Complex64], bound: f64) -> Self {
        if zs.iter().all(|z| *z == zs[0]) {
            return Self::from_squared_deviations(&vec![0.0; zs.len()], bound);
        }
        let mean = zs.iter().sum::<Complex64>() / zs.len() as f64;
        let dev2: Vec<f64> = zs.iter().map(|z| (z - mean).norm_sqr()).collect();
        Self::from_squared_deviations(&dev2, bound)
    }

    pub fn to_check(&self, kind: &str, params: Value) -> CheckReport {
        CheckReport {
            kind: kind.to_string(),
            params,
            estimate: self.estimate,
            bound: self.bound,
            se: self.standard_error,
            pass: self.passes(),
        }
    }
}

fn require_trials(trials: usize) -> Result<()> {
    if trials < 100 {
        return Err(Error::InvalidArgument(format!("variance checks need at least 100 trials, got {trials}")));
    }
    Ok(())
}

/// Sample variance of N_{n,m}((a, b]) over trials 0..trials against 4m/n^2.
pub fn verify_counting_variance(config: &EnsembleConfig, interval: (f64, f64), trials: usize) -> Result<VarianceReport> {
    require_trials(trials)?;
    config.validate()?;
    let counts = (0..trials as u64)
        .map(|t| counting_measure(&sample_spectrum(config, t)?, interval.0, interval.1))
        .collect::<Result<Vec<_>>>()?;
    let n = config.n as f64;
    Ok(VarianceReport::of_real(&counts, 4.0 * config.m as f64 / (n * n)))
}

/// Sample variance E|g - Eg|^2 of g_{n,m}(z) against 4m/(n^2 |Im z|^2).
pub fn verify_stieltjes_variance(config: &EnsembleConfig, z: Complex64, trials: usize) -> Result<VarianceReport> {
    require_trials(trials)?;
    if z.im == 0.0 {
        return Err(Error::RealAxisEvaluation { re: z.re, im: z.im });
    }
    config.validate()?;
    let gs = (0..trials as u64)
        .map(|t| sample_spectrum(config, t)?.stieltjes(z))
        .collect::<Result<Vec<_>>>()?;
    let n = config.n as f64;
    Ok(VarianceReport::of_complex(&gs, 4.0 * config.m as f64 / (n * n * z.im * z.im)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadFormRow {
    pub n: usize,
    /// Var |Y|^2.
    pub var_identity: f64,
    /// Var (AY, Y) for A = diag(+1, -1, +1, ...).
    pub var_alternating: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadFormReport {
    pub law: String,
    pub samples: usize,
    pub rows: Vec<QuadFormRow>,
    /// Least-squares slope of log Var against log n; `None` when some
    /// variance vanishes, which satisfies any decay requirement.
    pub slope_identity: Option<f64>,
    pub slope_alternating: Option<f64>,
}

impl QuadFormReport {
    pub fn passes(&self) -> bool {
        let ok = |s: Option<f64>| s.is_none_or(|s| s <= QUADFORM_SLOPE_LIMIT);
        ok(self.slope_identity) && ok(self.slope_alternating)
    }

    pub fn to_check(&self) -> CheckReport {
        let worst = [self.slope_identity, self.slope_alternating]
            .into_iter()
            .flatten()
            .fold(f64::NEG_INFINITY, f64::max);
        CheckReport {
            kind: "quadform".into(),
            params: json!({
                "law": self.law,
                "samples": self.samples,
                "rows": self.rows,
                "slope_identity": self.slope_identity,
                "slope_alternating": self.slope_alternating,
            }),
            estimate: if worst.is_finite() { worst } else { QUADFORM_SLOPE_LIMIT.min(-1.0) },
            bound: QUADFORM_SLOPE_LIMIT,
            se: 0.0,
            pass: self.passes(),
        }
    }
}

/// Least-squares slope of y on x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn log_slope(dims: &[usize], vars: &[f64]) -> Option<f64> {
    if vars.iter().any(|&v| v < ZERO_VARIANCE) {
        return None;
    }
    let x: Vec<f64> = dims.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = vars.iter().map(|v| v.ln()).collect();
    Some(fit_slope(&x, &y))
}

fn sample_variance(xs: &[f64]) -> f64 {
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn check_dims(dims: &[usize]) -> Result<()> {
    let lo = dims.iter().copied().min().unwrap_or(0);
    let hi = dims.iter().copied().max().unwrap_or(0);
    if dims.len() < 3 || lo == 0 || hi < 8 * lo {
        return Err(Error::InvalidArgument("need at least 3 dimensions spanning a factor of 8".into()));
    }
    Ok(())
}

/// Variance of (AY, Y) for A = I and the alternating-sign diagonal, across
/// dimensions, with the fitted decay exponents.
pub fn verify_quadratic_form(law: VectorLaw, dims: &[usize], samples: usize, rng: &mut RngStream) -> Result<QuadFormReport> {
    check_dims(dims)?;
    law.validate()?;
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let mut rows = Vec::with_capacity(dims.len());
    for &n in dims {
        let mut id = Vec::with_capacity(samples);
        let mut alt = Vec::with_capacity(samples);
        for _ in 0..samples {
            let y = sample_vector(law, n, rng)?;
            let sq: Vec<f64> = match &y {
                RandomVector::Real(v) => v.iter().map(|x| x * x).collect(),
                RandomVector::Complex(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            };
            id.push(sq.iter().sum());
            alt.push(sq.iter().enumerate().map(|(i, s)| if i % 2 == 0 { *s } else { -s }).sum());
        }
        rows.push(QuadFormRow { n, var_identity: sample_variance(&id), var_alternating: sample_variance(&alt) });
    }
    let slope_identity = log_slope(dims, &rows.iter().map(|r| r.var_identity).collect::<Vec<_>>());
    let slope_alternating = log_slope(dims, &rows.iter().map(|r| r.var_alternating).collect::<Vec<_>>());
    Ok(QuadFormReport { law: law.to_string(), samples, rows, slope_identity, slope_alternating })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub t: f64,
    /// Fraction of samples with |Y| >= C t.
    pub empirical: f64,
    /// exp(-t sqrt n).
    pub envelope: f64,
    /// Binomial standard error at the envelope probability.
    pub se: f64,
}

impl TailRow {
    pub fn passes(&self) -> bool {
        self.empirical <= self.envelope + SE_SLACK * self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub law: String,
    pub n: usize,
    pub samples: usize,
    /// C = 2 median |Y|.
    pub calibration: f64,
    pub rows: Vec<TailRow>,
    pub note: String,
}

impl TailReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(TailRow::passes)
    }

    pub fn to_check(&self) -> CheckReport {
        let worst = self
            .rows
            .iter()
            .max_by(|a, b| (a.empirical - a.envelope).total_cmp(&(b.empirical - b.envelope)))
            .copied();
        let (estimate, bound, se) = worst.map_or((0.0, 0.0, 0.0), |r| (r.empirical, r.envelope, r.se));
        CheckReport {
            kind: "tail".into(),
            params: json!({
                "law": self.law,
                "n": self.n,
                "samples": self.samples,
                "calibration": self.calibration,
                "rows": self.rows,
                "note": self.note,
            }),
            estimate,
            bound,
            se,
            pass: self.passes(),
        }
    }
}

/// Empirical P{|Y| >= C t} with C = 2 median |Y| against exp(-t sqrt n).
pub fn verify_norm_tail(law: VectorLaw, n: usize, samples: usize, t_values: &[f64], rng: &mut RngStream) -> Result<TailReport> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    law.validate()?;
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if let Some(t) = t_values.iter().find(|&&t| !(t >= 1.0)) {
        return Err(Error::InvalidArgument(format!("tail levels must be >= 1, got {t}")));
    }
    let mut norms = Vec::with_capacity(samples);
    let mut buf = vec![0.0; n];
    for _ in 0..samples {
        let r2 = if law.is_complex() {
            sample_vector(law, n, rng)?.norm_sqr()
        } else {
            fill_real(law, rng, &mut buf)?;
            buf.iter().map(|x| x * x).sum()
        };
        norms.push(r2.sqrt());
    }
    norms.sort_by(f64::total_cmp);
    let median = if samples % 2 == 1 {
        norms[samples / 2]
    } else {
        0.5 * (norms[samples / 2 - 1] + norms[samples / 2])
    };
    let calibration = 2.0 * median;
    let s = samples as f64;
    let rows = t_values
        .iter()
        .map(|&t| {
            let above = samples - norms.partition_point(|&r| r < calibration * t);
            let envelope = (-t * (n as f64).sqrt()).exp();
            TailRow {
                t,
                empirical: above as f64 / s,
                envelope,
                se: (envelope * (1.0 - envelope) / s).sqrt(),
            }
        })
        .collect();
    Ok(TailReport {
        law: law.to_string(),
        n,
        samples,
        calibration,
        rows,
        note: "envelope exp(-t sqrt n) with C calibrated from the sample; the large-deviation \
               inequality as printed has no constant in the exponent, while its later use \
               carries exp(-t sqrt n / C)"
            .into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub m: usize,
    pub seeds: usize,
    pub mean_ks: f64,
    pub std_ks: f64,
}

impl ConvergenceRow {
    /// Standard error of `mean_ks`.
    pub fn se(&self) -> f64 {
        self.std_ks / (self.seeds as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub law: String,
    pub c: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Mean KS at the smallest n scaled by sqrt(n_min / n_max).
    pub threshold: f64,
}

impl ConvergenceReport {
    /// Mean KS strictly decreasing along n; a column that has reached zero
    /// counts as decreasing.
    pub fn decreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].mean_ks < w[0].mean_ks || (w[0].mean_ks == 0.0 && w[1].mean_ks == 0.0))
    }

    pub fn below_threshold(&self) -> bool {
        self.rows.last().is_some_and(|r| r.mean_ks <= self.threshold)
    }

    pub fn passes(&self) -> bool {
        self.decreasing() && self.below_threshold()
    }

    /// Header of the study table written by [`ConvergenceReport::csv_rows`].
    pub const CSV_HEADER: &'static str = "law,n,m,seeds,mean_ks,std_ks\n";

    pub fn csv_rows(&self) -> String {
        self.rows
            .iter()
            .map(|r| format!("{},{},{},{},{},{}\n", self.law, r.n, r.m, r.seeds, r.mean_ks, r.std_ks))
            .collect()
    }

    pub fn csv(&self) -> String {
        format!("{}{}", Self::CSV_HEADER, self.csv_rows())
    }

    pub fn to_check(&self) -> CheckReport {
        let last = self.rows.last();
        CheckReport {
            kind: "convergence".into(),
            params: json!({
                "law": self.law,
                "c": self.c,
                "rows": self.rows,
                "decreasing": self.decreasing(),
                "threshold": self.threshold,
            }),
            estimate: last.map_or(0.0, |r| r.mean_ks),
            bound: self.threshold,
            se: last.map_or(0.0, |r| r.se()),
            pass: self.passes(),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Master seed of one (law, n) cell of a study, so that cells draw from
/// unrelated streams.
pub fn study_seed(master_seed: u64, law: VectorLaw, n: usize) -> u64 {
    let tag = law.to_string().bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
    splitmix64(master_seed ^ splitmix64(tag ^ splitmix64(n as u64)))
}

/// Grid for reconstructing a limit between `lo` and `hi`, clustered at both
/// ends like Chebyshev nodes.
pub fn clustered_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| {
            let t = PI * (k as f64 + 0.5) / points as f64;
            0.5 * (lo + hi) - 0.5 * (hi - lo) * t.cos()
        })
        .collect()
}

/// The limit measure of `model` over the range spanned by `spectra`.
///
/// With c = 0 the limit is N0 itself and is returned unchanged.
pub fn study_limit(model: &ModelSpec, spectra: &[&EmpiricalSpectrum], opts: &SolverOptions, points: usize) -> Result<SpectralMeasure> {
    if model.c == 0.0 {
        return Ok(model.n0.clone());
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in spectra {
        let e = s.eigenvalues();
        lo = lo.min(e[0]);
        hi = hi.max(e[e.len() - 1]);
    }
    if !lo.is_finite() {
        return Err(Error::EmptySpectrum);
    }
    let pad = 0.1 * (hi - lo) + 1e-2;
    limit_density(model, &clustered_grid(lo - pad, hi + pad, points), opts)
}

/// Moves eigenvalues within `1e-8 max(1, |lambda|)` of an atom of the limit
/// onto the atom.
pub fn snap_to_atoms(spec: &EmpiricalSpectrum, limit: &SpectralMeasure) -> Result<EmpiricalSpectrum> {
    let scale = spec.eigenvalues().iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let tol = 1e-8 * scale;
    let snapped = spec
        .eigenvalues()
        .iter()
        .map(|&x| limit.atoms().iter().find(|a| (a.0 - x).abs() <= tol).map_or(x, |a| a.0))
        .collect();
    EmpiricalSpectrum::new(snapped)
}

/// Inputs of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub law: VectorLaw,
    pub sigma: AmplitudeLaw,
    pub h0: H0Spec,
    pub c: f64,
    pub dims: Vec<usize>,
    pub seeds: usize,
    pub master_seed: u64,
}

impl StudySpec {
    fn config(&self, n: usize) -> Result<EnsembleConfig> {
        let m = (self.c * n as f64).round() as usize;
        EnsembleConfig::new(n, m, self.law, self.sigma.clone(), self.h0.clone(), study_seed(self.master_seed, self.law, n))
    }

    /// Spectra of every (n, seed) cell, trial index = seed.
    pub fn spectra(&self) -> Result<Vec<Vec<EmpiricalSpectrum>>> {
        if self.dims.is_empty() || self.seeds == 0 {
            return Err(Error::InvalidArgument("a study needs dimensions and seeds".into()));
        }
        if !self.dims.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("study dimensions must increase".into()));
        }
        self.dims
            .iter()
            .map(|&n| {
                let config = self.config(n)?;
                (0..self.seeds as u64).map(|s| sample_spectrum(&config, s)).collect()
            })
            .collect()
    }
}

/// KS distances of every spectrum to `limit`, summarized per n.
pub fn convergence_report(study: &StudySpec, spectra: &[Vec<EmpiricalSpectrum>], limit: &SpectralMeasure) -> Result<ConvergenceReport> {
    let mut rows = Vec::with_capacity(study.dims.len());
    for (&n, cell) in study.dims.iter().zip(spectra) {
        let ks = cell
            .iter()
            .map(|s| ks_distance(&snap_to_atoms(s, limit)?, limit))
            .collect::<Result<Vec<_>>>()?;
        let k = ks.len() as f64;
        let mean_ks = ks.iter().sum::<f64>() / k;
        let std_ks = if ks.len() > 1 { sample_variance(&ks).sqrt() } else { 0.0 };
        rows.push(ConvergenceRow { n, m: (study.c * n as f64).round() as usize, seeds: ks.len(), mean_ks, std_ks });
    }
    let (first, last) = (rows[0], rows[rows.len() - 1]);
    let threshold = first.mean_ks * (first.n as f64 / last.n as f64).sqrt();
    Ok(ConvergenceReport { law: study.law.to_string(), c: study.c, rows, threshold })
}

/// Mean KS distance between sampled spectra and the limit of `model`, per
/// dimension m = round(c n).
pub fn convergence_study(study: &StudySpec, model: &ModelSpec, opts: &SolverOptions) -> Result<ConvergenceReport> {
    let spectra = study.spectra()?;
    let all: Vec<&EmpiricalSpectrum> = spectra.iter().flatten().collect();
    let limit = study_limit(model, &all, opts, 4000)?;
    convergence_report(study, &spectra, &limit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LawComparison {
    pub n: usize,
    pub laws: Vec<String>,
    pub mean_ks: Vec<f64>,
    pub se: Vec<f64>,
    /// Largest |mean_a - mean_b| / sqrt(se_a^2 + se_b^2) over pairs.
    pub max_gap: f64,
}

impl LawComparison {
    pub fn passes(&self) -> bool {
        self.max_gap <= 2.0
    }

    pub fn to_check(&self) -> CheckReport {
        CheckReport {
            kind: "law-independence".into(),
            params: json!({ "n": self.n, "laws": self.laws, "mean_ks": self.mean_ks, "se": self.se }),
            estimate: self.max_gap,
            bound: 2.0,
            se: 0.0,
            pass: self.passes(),
        }
    }
}

/// Pairwise agreement of mean KS at dimension n across studies of
/// different laws, measured in pooled standard errors.
pub fn law_independence(reports: &[ConvergenceReport], n: usize) -> Result<LawComparison> {
    let mut laws = Vec::new();
    let mut means = Vec::new();
    let mut ses = Vec::new();
    for r in reports {
        let row = r
            .rows
            .iter()
            .find(|row| row.n == n)
            .ok_or_else(|| Error::InvalidArgument(format!("report for {} has no row n = {n}", r.law)))?;
        laws.push(r.law.clone());
        means.push(row.mean_ks);
        ses.push(row.se());
    }
    let mut max_gap: f64 = 0.0;
    for a in 0..means.len() {
        for b in a + 1..means.len() {
            let diff = (means[a] - means[b]).abs();
            let pooled = (ses[a].powi(2) + ses[b].powi(2)).sqrt();
            let gap = if pooled > 0.0 { diff / pooled } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
            max_gap = max_gap.max(gap);
        }
    }
    Ok(LawComparison { n, laws, mean_ks: means, se: ses, max_gap })
}
