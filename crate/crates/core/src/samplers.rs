//! Isotropic log-concave vector laws and amplitude draws.
//!
//! Every real law is normalized so that E (Y, X) = 0 and
//! E (Y, X)^2 = |X|^2 / n. The complex Gaussian law has independent real and
//! imaginary parts, each isotropic with variance 1/(2n) per coordinate.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::measures::AmplitudeLaw;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VectorLaw {
    /// Uniform on the unit sphere.
    Sphere,
    /// i.i.d. N(0, 1/n) coordinates.
    GaussianIso,
    /// Uniform on a scaled unit l_p ball, p >= 1.
    LpBall(f64),
    /// Uniform on the cube [-a, a]^n, a = sqrt(3/n).
    CubeIso,
    /// i.i.d. symmetric exponential coordinates of variance 1/n.
    LaplaceIso,
    /// Independent N(0, 1/(2n)) real and imaginary parts.
    ComplexGaussianIso,
}

impl VectorLaw {
    /// Every law shipped by [`FromStr`], with l_1 standing in for the l_p family.
    pub const SHIPPED: [VectorLaw; 6] = [
        VectorLaw::Sphere,
        VectorLaw::GaussianIso,
        VectorLaw::LpBall(1.0),
        VectorLaw::CubeIso,
        VectorLaw::LaplaceIso,
        VectorLaw::ComplexGaussianIso,
    ];

    pub fn is_complex(&self) -> bool {
        matches!(self, VectorLaw::ComplexGaussianIso)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            VectorLaw::LpBall(p) if !(p >= 1.0 && p.is_finite()) => Err(Error::InvalidP(p)),
            _ => Ok(()),
        }
    }
}

impl FromStr for VectorLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let law = match s.trim() {
            "sphere" => VectorLaw::Sphere,
            "gauss" => VectorLaw::GaussianIso,
            "cube" => VectorLaw::CubeIso,
            "laplace" => VectorLaw::LaplaceIso,
            "cgauss" => VectorLaw::ComplexGaussianIso,
            other => match other.strip_prefix("lp:") {
                Some(p) => {
                    let p = p.parse::<f64>().map_err(|e| Error::Parse(format!("lp exponent {p:?}: {e}")))?;
                    VectorLaw::LpBall(p)
                }
                None => return Err(Error::Parse(format!("unknown vector law {other:?}"))),
            },
        };
        law.validate()?;
        Ok(law)
    }
}

impl fmt::Display for VectorLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorLaw::Sphere => f.write_str("sphere"),
            VectorLaw::GaussianIso => f.write_str("gauss"),
            VectorLaw::LpBall(p) => write!(f, "lp:{p}"),
            VectorLaw::CubeIso => f.write_str("cube"),
            VectorLaw::LaplaceIso => f.write_str("laplace"),
            VectorLaw::ComplexGaussianIso => f.write_str("cgauss"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RandomVector {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl RandomVector {
    pub fn len(&self) -> usize {
        match self {
            RandomVector::Real(v) => v.len(),
            RandomVector::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm_sqr(&self) -> f64 {
        match self {
            RandomVector::Real(v) => v.iter().map(|x| x * x).sum(),
            RandomVector::Complex(v) => v.iter().map(|x| x.norm_sqr()).sum(),
        }
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            RandomVector::Real(v) => v.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            RandomVector::Complex(v) => v.clone(),
        }
    }
}

pub fn sample_vector(law: VectorLaw, n: usize, rng: &mut RngStream) -> Result<RandomVector> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    law.validate()?;
    if law.is_complex() {
        let sd = (0.5 / n as f64).sqrt();
        let re: Vec<f64> = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        let im: Vec<f64> = (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect();
        return Ok(RandomVector::Complex(re.into_iter().zip(im).map(|(a, b)| Complex64::new(a, b)).collect()));
    }
    let mut out = vec![0.0; n];
    fill_real(law, rng, &mut out)?;
    Ok(RandomVector::Real(out))
}

/// Fills `out` with one draw of a real law in dimension `out.len()`.
pub fn fill_real(law: VectorLaw, rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
    let n = out.len();
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let nf = n as f64;
    match law {
        VectorLaw::Sphere => loop {
            for x in out.iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                out.iter_mut().for_each(|x| *x /= norm);
                break;
            }
        },
        VectorLaw::GaussianIso => {
            let sd = nf.recip().sqrt();
            for x in out.iter_mut() {
                *x = sd * rng.sample::<f64, _>(StandardNormal);
            }
        }
        VectorLaw::LpBall(p) => {
            let s = lp_scale(p, n)?;
            lp_ball_fill(p, rng, out)?;
            out.iter_mut().for_each(|x| *x *= s);
        }
        VectorLaw::CubeIso => {
            let a = (3.0 / nf).sqrt();
            for x in out.iter_mut() {
                *x = rng.random_range(-a..=a);
            }
        }
        VectorLaw::LaplaceIso => {
            let b = (2.0 * nf).recip().sqrt();
            for x in out.iter_mut() {
                let e: f64 = rng.sample(Exp1);
                *x = if rng.random::<bool>() { b * e } else { -b * e };
            }
        }
        VectorLaw::ComplexGaussianIso => {
            return Err(Error::InvalidArgument("complex law has no real draw".into()));
        }
    }
    Ok(())
}

/// Uniform point of the unit l_p ball {sum |x_i|^p <= 1}.
///
/// Coordinates g_i have density proportional to exp(-|t|^p), W is standard
/// exponential, and g / (sum |g_i|^p + W)^(1/p) is uniform on the ball.
pub fn lp_ball_point(p: f64, n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    let mut out = vec![0.0; n];
    lp_ball_fill(p, rng, &mut out)?;
    Ok(out)
}

fn lp_ball_fill(p: f64, rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidP(p));
    }
    let gamma = Gamma::new(1.0 / p, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut sum = 0.0;
    for x in out.iter_mut() {
        let g: f64 = gamma.sample(rng);
        sum += g;
        let mag = g.powf(1.0 / p);
        *x = if rng.random::<bool>() { mag } else { -mag };
    }
    let w: f64 = rng.sample(Exp1);
    let r = (sum + w).powf(1.0 / p);
    out.iter_mut().for_each(|x| *x /= r);
    Ok(())
}

/// Second coordinate moment of the uniform law on the unit l_p ball,
/// Gamma(3/p) Gamma(n/p + 1) / (Gamma(1/p) Gamma((n + 2)/p + 1)).
pub fn lp_second_moment(p: f64, n: usize) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidP(p));
    }
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    let nf = n as f64;
    let log = ln_gamma(3.0 / p) + ln_gamma(nf / p + 1.0) - ln_gamma(1.0 / p) - ln_gamma((nf + 2.0) / p + 1.0);
    Ok(log.exp())
}

/// Scale s with s^2 m2(p, n) = 1/n, making the scaled ball law isotropic.
pub fn lp_scale(p: f64, n: usize) -> Result<f64> {
    let m2 = lp_second_moment(p, n)?;
    Ok((1.0 / (n as f64 * m2)).sqrt())
}

/// Draws tau_k with probability w_k by inverting the cumulative weights.
pub fn sample_tau(sigma: &AmplitudeLaw, rng: &mut RngStream) -> f64 {
    let atoms = sigma.atoms();
    if atoms.len() == 1 {
        return atoms[0].0;
    }
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &(t, w) in atoms {
        acc += w;
        if u < acc {
            return t;
        }
    }
    atoms[atoms.len() - 1].0
}

/// Sample mean and covariance diagnostics of a vector law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotropyReport {
    /// Real dimension of the draws (2n for complex laws).
    pub dimension: usize,
    pub samples: usize,
    /// |sample mean|.
    pub mean_norm: f64,
    /// Standard error of `mean_norm` under isotropy, sqrt(tr Cov / samples).
    pub mean_norm_se: f64,
    /// max_ij |sample Cov_ij - target_ij|.
    pub max_cov_deviation: f64,
    /// max_ij of the deviation in units of its own standard error.
    pub max_cov_z: f64,
}

impl IsotropyReport {
    /// Both statistics below `k` standard errors.
    pub fn passes(&self, k: f64) -> bool {
        self.mean_norm <= k * self.mean_norm_se && self.max_cov_z <= k
    }
}

pub fn isotropy_estimate(law: VectorLaw, n: usize, samples: usize, rng: &mut RngStream) -> Result<IsotropyReport> {
    if n == 0 {
        return Err(Error::InvalidDimension(n));
    }
    law.validate()?;
    if law.is_complex() {
        // (Re Y, Im Y) in R^{2n} must have covariance I / (2n)
        let target = 0.5 / n as f64;
        isotropy_estimate_with(2 * n, target, samples, rng, |rng, out| {
            let v = sample_vector(law, n, rng)?;
            if let RandomVector::Complex(v) = v {
                for (i, z) in v.iter().enumerate() {
                    out[i] = z.re;
                    out[n + i] = z.im;
                }
            }
            Ok(())
        })
    } else {
        isotropy_estimate_with(n, 1.0 / n as f64, samples, rng, |rng, out| fill_real(law, rng, out))
    }
}

/// Isotropy statistics of an arbitrary sampler against covariance
/// `target_var * I` in dimension `dim`.
pub fn isotropy_estimate_with<F>(
    dim: usize,
    target_var: f64,
    samples: usize,
    rng: &mut RngStream,
    mut draw: F,
) -> Result<IsotropyReport>
where
    F: FnMut(&mut RngStream, &mut [f64]) -> Result<()>,
{
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 samples, got {samples}")));
    }
    let packed = dim * (dim + 1) / 2;
    let mut sum = vec![0.0; dim];
    let mut prod = vec![0.0; packed];
    let mut prod_sq = vec![0.0; packed];
    let mut y = vec![0.0; dim];
    for _ in 0..samples {
        draw(rng, &mut y)?;
        let mut k = 0;
        for i in 0..dim {
            let yi = y[i];
            sum[i] += yi;
            let row = &y[i..];
            let p = &mut prod[k..k + row.len()];
            let q = &mut prod_sq[k..k + row.len()];
            for ((pj, qj), yj) in p.iter_mut().zip(q.iter_mut()).zip(row) {
                let v = yi * yj;
                *pj += v;
                *qj += v * v;
            }
            k += row.len();
        }
    }
    let s = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|v| v / s).collect();
    let mean_norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt();
    let mut trace = 0.0;
    let mut max_dev: f64 = 0.0;
    let mut max_z: f64 = 0.0;
    let mut k = 0;
    for i in 0..dim {
        for j in i..dim {
            let raw = prod[k] / s;
            let cov = (prod[k] - s * mean[i] * mean[j]) / (s - 1.0);
            let var_prod = (prod_sq[k] / s - raw * raw).max(0.0);
            let se = (var_prod / s).sqrt();
            let target = if i == j { target_var } else { 0.0 };
            let dev = (cov - target).abs();
            max_dev = max_dev.max(dev);
            if se > 0.0 {
                max_z = max_z.max(dev / se);
            } else if dev > 1e-12 {
                max_z = f64::INFINITY;
            }
            if i == j {
                trace += cov;
            }
            k += 1;
        }
    }
    Ok(IsotropyReport {
        dimension: dim,
        samples,
        mean_norm,
        mean_norm_se: (trace.max(0.0) / s).sqrt(),
        max_cov_deviation: max_dev,
        max_cov_z: max_z,
    })
}
