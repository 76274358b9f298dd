//! The self-consistent equation for the limiting Stieltjes transform,
//!
//!   f(z) = f0(z + zeta(f(z))),   zeta(f) = -c sum_k tau_k w_k / (1 + tau_k f),
//!
//! solved pointwise by damped Picard iteration and along the real axis by
//! continuation in Im z. f0 is the Stieltjes transform of N0 and (tau_k, w_k)
//! are the atoms of the amplitude law.

use std::borrow::Cow;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{AmplitudeLaw, Density, SpectralMeasure};

/// Mass window in which a reconstructed limit is flagged as a probability measure.
pub const LIMIT_MASS_TOLERANCE: f64 = 5e-3;
/// Below this total mass the reconstruction grid is assumed to miss the support.
pub const MASS_DEFICIT_THRESHOLD: f64 = 0.9;

/// The triple (c, sigma, N0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub c: f64,
    pub sigma: AmplitudeLaw,
    pub n0: SpectralMeasure,
}

impl ModelSpec {
    pub fn new(c: f64, sigma: AmplitudeLaw, n0: SpectralMeasure) -> Result<Self> {
        let m = Self { c, sigma, n0 };
        m.validate()?;
        Ok(m)
    }

    /// H0 = 0 with the given ratio and amplitude law.
    pub fn with_zero_h0(c: f64, sigma: AmplitudeLaw) -> Result<Self> {
        Self::new(c, sigma, SpectralMeasure::dirac(0.0))
    }

    /// The Marchenko–Pastur case: H0 = 0, tau = 1.
    pub fn marchenko_pastur(c: f64) -> Result<Self> {
        Self::with_zero_h0(c, AmplitudeLaw::dirac(1.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("ratio c must be finite and >= 0, got {}", self.c)));
        }
        if !self.n0.is_probability() {
            return Err(Error::InvalidMeasure(format!("N0 has total mass {}, not 1", self.n0.total_mass())));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    fn n0_is_origin(&self) -> bool {
        self.n0.density().is_none() && self.n0.atoms() == [(0.0, 1.0)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Picard damping eta in (0, 1].
    pub damping: f64,
    /// Fixed-point residual tolerance.
    pub tol: f64,
    /// Iteration cap per (lambda, eps) stage.
    pub max_iter: usize,
    /// Starting height of the continuation; defaults to 1 + 2 max|tau|^2.
    pub eps_start: Option<f64>,
    pub eps_final: f64,
    pub eps_factor: f64,
    /// Amplitudes with |tau| >= T are replaced by 0.
    pub tau_truncation: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 100_000,
            eps_start: None,
            eps_final: 1e-4,
            eps_factor: 0.5,
            tau_truncation: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.eps_final > 0.0) {
            return bad("eps_final must be positive");
        }
        if let Some(e) = self.eps_start {
            if !(e >= self.eps_final) {
                return bad("eps_start must be >= eps_final");
            }
        }
        if !(self.eps_factor > 0.0 && self.eps_factor < 1.0) {
            return bad("eps_factor must lie in (0, 1)");
        }
        if let Some(t) = self.tau_truncation {
            if !(t > 0.0) {
                return bad("truncation level must be positive");
            }
        }
        Ok(())
    }

    fn effective_sigma<'a>(&self, model: &'a ModelSpec) -> Cow<'a, AmplitudeLaw> {
        match self.tau_truncation {
            Some(t) => Cow::Owned(model.sigma.truncated(t)),
            None => Cow::Borrowed(&model.sigma),
        }
    }

    /// Starting height of the continuation for this model.
    pub fn eps_start_for(&self, model: &ModelSpec) -> f64 {
        let t = self.effective_sigma(model).max_abs_tau();
        self.eps_start.unwrap_or(1.0 + 2.0 * t * t).max(self.eps_final)
    }
}

/// One pointwise solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSolution {
    pub f: Complex64,
    pub iterations: usize,
    pub residual: f64,
}

fn zeta_with(f: Complex64, c: f64, sigma: &AmplitudeLaw) -> Result<Complex64> {
    if c == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut s = Complex64::new(0.0, 0.0);
    for &(tau, w) in sigma.atoms() {
        if tau == 0.0 || w == 0.0 {
            continue;
        }
        let d = 1.0 + tau * f;
        if d.norm() < 1e-14 {
            return Err(Error::PoleHit(d.norm()));
        }
        s += tau * w / d;
    }
    Ok(-c * s)
}

/// zeta(f) = -c sum_k tau_k w_k / (1 + tau_k f); the shifted argument is z + zeta.
pub fn zeta(f: Complex64, model: &ModelSpec) -> Result<Complex64> {
    zeta_with(f, model.c, &model.sigma)
}

fn fixed_point_map(f: Complex64, z: Complex64, model: &ModelSpec, sigma: &AmplitudeLaw) -> Result<Complex64> {
    let w = z + zeta_with(f, model.c, sigma)?;
    model.n0.stieltjes(w)
}

/// Residual |f - f0(z + zeta(f))|, with the truncation of `opts` applied.
pub fn residual(f: Complex64, z: Complex64, model: &ModelSpec, opts: &SolverOptions) -> Result<f64> {
    let sigma = opts.effective_sigma(model);
    Ok((fixed_point_map(f, z, model, &sigma)? - f).norm())
}

fn reflect_into_class(f: Complex64, z: Complex64) -> Complex64 {
    if f.im * z.im < 0.0 {
        f.conj()
    } else {
        f
    }
}

/// Damped Picard iteration f <- (1 - eta) f + eta f0(z + zeta(f)), started at
/// `init` or at f0(z). Iterates that leave the half plane of z are reflected
/// back to their conjugate.
pub fn solve_mpe_at_detailed(
    z: Complex64,
    model: &ModelSpec,
    opts: &SolverOptions,
    init: Option<Complex64>,
) -> Result<PointSolution> {
    if z.im == 0.0 {
        return Err(Error::RealAxisEvaluation { re: z.re, im: z.im });
    }
    opts.validate()?;
    if model.c == 0.0 {
        let f = model.n0.stieltjes(z)?;
        return Ok(PointSolution { f, iterations: 1, residual: 0.0 });
    }
    let sigma = opts.effective_sigma(model);
    let eta = opts.damping;
    let mut f = match init {
        Some(f) => f,
        None => model.n0.stieltjes(z)?,
    };
    f = reflect_into_class(f, z);
    let mut res = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let mapped = fixed_point_map(f, z, model, &sigma)?;
        res = (mapped - f).norm();
        if res <= opts.tol {
            let branch = f.im * z.im;
            if branch < -opts.tol {
                return Err(Error::BranchViolation(branch));
            }
            return Ok(PointSolution { f, iterations: it, residual: res });
        }
        f = reflect_into_class((1.0 - eta) * f + eta * mapped, z);
    }
    Err(Error::NonConvergence { lambda: z.re, eps: z.im, residual: res, iterations: opts.max_iter })
}

pub fn solve_mpe_at(z: Complex64, model: &ModelSpec, opts: &SolverOptions, init: Option<Complex64>) -> Result<Complex64> {
    solve_mpe_at_detailed(z, model, opts, init).map(|s| s.f)
}

/// Boundary values f(lambda + i eps_final) along a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub lambdas: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Picard iterations summed over the continuation chain of each point.
    pub iterations: Vec<usize>,
}

/// Continuation from lambda + i eps_start down to lambda + i eps_final by
/// factors of `eps_factor`, warm-starting every stage from the previous one;
/// each lambda starts from its left neighbour's solution at eps_start.
pub fn solve_mpe_grid_detailed(lambdas: &[f64], model: &ModelSpec, opts: &SolverOptions) -> Result<GridSolution> {
    opts.validate()?;
    if !lambdas.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidArgument("lambda grid must be strictly increasing".into()));
    }
    let eps0 = opts.eps_start_for(model);
    let mut values = Vec::with_capacity(lambdas.len());
    let mut iterations = Vec::with_capacity(lambdas.len());
    let mut neighbour: Option<Complex64> = None;
    for &lambda in lambdas {
        let stage = |eps: f64, init: Option<Complex64>| {
            solve_mpe_at_detailed(Complex64::new(lambda, eps), model, opts, init).map_err(|e| match e {
                Error::NonConvergence { residual, iterations, .. } => {
                    Error::NonConvergence { lambda, eps, residual, iterations }
                }
                other => other,
            })
        };
        let start = stage(eps0, neighbour)?;
        neighbour = Some(start.f);
        let mut f = start.f;
        let mut count = start.iterations;
        let mut eps = eps0;
        while eps > opts.eps_final {
            eps = (eps * opts.eps_factor).max(opts.eps_final);
            let s = stage(eps, Some(f))?;
            f = s.f;
            count += s.iterations;
        }
        values.push(f);
        iterations.push(count);
    }
    Ok(GridSolution { lambdas: lambdas.to_vec(), values, iterations })
}

pub fn solve_mpe_grid(lambdas: &[f64], model: &ModelSpec, opts: &SolverOptions) -> Result<Vec<Complex64>> {
    solve_mpe_grid_detailed(lambdas, model, opts).map(|g| g.values)
}

/// The reconstructed limit together with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitDensity {
    pub measure: SpectralMeasure,
    pub iterations: Vec<usize>,
}

/// Density Im f(lambda + i eps_final) / pi on the grid.
///
/// When N0 = delta_0, c < 1 and sigma has no atom at zero, the limit carries
/// the atom (0, 1 - c); it is reported as an atom and its Poisson-kernel
/// contribution is removed from the density values.
pub fn limit_density_detailed(model: &ModelSpec, grid: &[f64], opts: &SolverOptions) -> Result<LimitDensity> {
    let sol = solve_mpe_grid_detailed(grid, model, opts)?;
    let eps = opts.eps_final;
    let sigma = opts.effective_sigma(model);
    let atom = (model.n0_is_origin() && model.c < 1.0 && !sigma.has_atom_at_zero()).then(|| 1.0 - model.c);
    let values: Vec<f64> = grid
        .iter()
        .zip(&sol.values)
        .map(|(&l, f)| {
            let mut im = f.im;
            if let Some(mass) = atom {
                im -= mass * eps / (l * l + eps * eps);
            }
            (im / PI).max(0.0)
        })
        .collect();
    let density = Density::new(grid.to_vec(), values)?;
    let atoms = atom.map(|m| vec![(0.0, m)]).unwrap_or_default();
    let total = density.mass() + atoms.iter().map(|a| a.1).sum::<f64>();
    if total < MASS_DEFICIT_THRESHOLD {
        return Err(Error::MassDeficit(total));
    }
    let measure =
        SpectralMeasure::with_flag(atoms, Some(density), (total - 1.0).abs() <= LIMIT_MASS_TOLERANCE)?;
    Ok(LimitDensity { measure, iterations: sol.iterations })
}

pub fn limit_density(model: &ModelSpec, grid: &[f64], opts: &SolverOptions) -> Result<SpectralMeasure> {
    limit_density_detailed(model, grid, opts).map(|l| l.measure)
}

/// Marchenko–Pastur density of the continuous part,
/// sqrt((a+ - l)(l - a-)) / (2 pi l) on [a-, a+], a+- = (1 +- sqrt c)^2.
///
/// Together with the atom (1 - c) delta_0 for c < 1 it has unit mass. At
/// exactly l = 0 with c = 1 the integrable singularity is reported as +inf.
pub fn mp_closed_form(c: f64, lambda: f64) -> f64 {
    assert!(c > 0.0, "Marchenko–Pastur ratio must be positive");
    let lo = (1.0 - c.sqrt()).powi(2);
    let hi = (1.0 + c.sqrt()).powi(2);
    if lambda == 0.0 && lo == 0.0 {
        return f64::INFINITY;
    }
    if lambda < lo || lambda > hi || lambda <= 0.0 {
        return 0.0;
    }
    ((hi - lambda) * (lambda - lo)).max(0.0).sqrt() / (2.0 * PI * lambda)
}

/// Support edges (a-, a+) of the Marchenko–Pastur density.
pub fn mp_support(c: f64) -> (f64, f64) {
    ((1.0 - c.sqrt()).powi(2), (1.0 + c.sqrt()).powi(2))
}

/// Root of z f^2 + (z - c + 1) f + 1 = 0 in the half plane of z: the
/// Stieltjes transform of the limit for N0 = delta_0, sigma = delta_1.
pub fn mp_stieltjes_oracle(c: f64, z: Complex64) -> Complex64 {
    let b = z - c + 1.0;
    let disc = (b * b - 4.0 * z).sqrt();
    let r1 = (-b + disc) / (2.0 * z);
    let r2 = (-b - disc) / (2.0 * z);
    let bound = 1.0 / z.im.abs();
    let score = |f: Complex64| {
        let in_half = f.im * z.im > 0.0;
        let bounded = f.norm() <= bound * (1.0 + 1e-12);
        (in_half as u8 + bounded as u8, -f.norm())
    };
    let (s1, s2) = (score(r1), score(r2));
    if s1.0 > s2.0 || (s1.0 == s2.0 && s1.1 >= s2.1) {
        r1
    } else {
        r2
    }
}

/// y |f(iy)|, which tends to the total mass of the measure as y grows.
pub fn normalization_check<F>(f_eval: F, y: f64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(y >= 1e3) {
        return Err(Error::InvalidArgument(format!("normalization height must be >= 1e3, got {y}")));
    }
    Ok(y * f_eval(Complex64::new(0.0, y))?.norm())
}
