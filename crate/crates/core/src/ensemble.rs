//! Finite random matrices H = H0 + sum_a tau_a Y_a Y_a^*, their spectra,
//! the streaming resolvent trace and the Gram dual.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::eigen::{hermitian_eigenvalues, Scalar};
use crate::error::{Error, Result};
use crate::measures::{AmplitudeLaw, EmpiricalSpectrum, SpectralMeasure};
use crate::rng::RngStream;
use crate::samplers::{sample_tau, sample_vector, RandomVector, VectorLaw};

/// The deterministic part H0.
#[derive(Debug, Clone, PartialEq)]
pub enum H0Spec {
    Zero,
    Diagonal(Vec<f64>),
    /// Dense symmetric matrix, row-major.
    Dense { n: usize, data: Vec<f64> },
    /// Diagonal of the quantiles F^{-1}((l + 1/2)/n) of a measure; realizes
    /// a prescribed limit N0 at every n.
    Quantiles(SpectralMeasure),
}

impl H0Spec {
    /// Plain-text format: first line n, then n rows of n reals. The upper
    /// triangle is trusted and mirrored.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty H0 file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("H0 order: {e}")))?;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            let row = lines.next().ok_or_else(|| Error::Parse(format!("H0 file has fewer than {n} rows")))?;
            let vals = row
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != n {
                return Err(Error::Parse(format!("H0 row {i} has {} entries, expected {n}", vals.len())));
            }
            data[i * n..(i + 1) * n].copy_from_slice(&vals);
        }
        for i in 0..n {
            for j in 0..i {
                data[i * n + j] = data[j * n + i];
            }
        }
        Ok(H0Spec::Dense { n, data })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }

    /// Dense matrix of order n.
    pub fn realize(&self, n: usize) -> Result<Vec<f64>> {
        let mut a = vec![0.0; n * n];
        match self {
            H0Spec::Zero => {}
            H0Spec::Diagonal(d) => {
                if d.len() != n {
                    return Err(Error::H0Mismatch { expected: n, got: d.len() });
                }
                for (i, v) in d.iter().enumerate() {
                    a[i * n + i] = *v;
                }
            }
            H0Spec::Dense { n: m, data } => {
                if *m != n {
                    return Err(Error::H0Mismatch { expected: n, got: *m });
                }
                a.copy_from_slice(data);
            }
            H0Spec::Quantiles(_) => {
                for (i, v) in self.diagonal(n)?.unwrap().into_iter().enumerate() {
                    a[i * n + i] = v;
                }
            }
        }
        Ok(a)
    }

    /// The diagonal when H0 is diagonal (`None` for dense H0).
    pub fn diagonal(&self, n: usize) -> Result<Option<Vec<f64>>> {
        match self {
            H0Spec::Zero => Ok(Some(vec![0.0; n])),
            H0Spec::Diagonal(d) if d.len() == n => Ok(Some(d.clone())),
            H0Spec::Diagonal(d) => Err(Error::H0Mismatch { expected: n, got: d.len() }),
            H0Spec::Dense { n: m, .. } if *m != n => Err(Error::H0Mismatch { expected: n, got: *m }),
            H0Spec::Dense { .. } => Ok(None),
            H0Spec::Quantiles(measure) => (0..n)
                .map(|l| measure.quantile((l as f64 + 0.5) / n as f64))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        match self {
            H0Spec::Diagonal(d) if d.len() != n => Err(Error::H0Mismatch { expected: n, got: d.len() }),
            H0Spec::Dense { n: m, .. } if *m != n => Err(Error::H0Mismatch { expected: n, got: *m }),
            H0Spec::Dense { n, data } => {
                for i in 0..*n {
                    for j in 0..i {
                        if (data[i * n + j] - data[j * n + i]).abs() > 1e-12 {
                            return Err(Error::InvalidArgument(format!("H0 not symmetric at ({i}, {j})")));
                        }
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// `zero` | `diag:x1,x2,...` | `file:<path>` | `quantiles:atoms:x1:w1,...`
impl FromStr for H0Spec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(H0Spec::Zero);
        }
        if let Some(list) = s.strip_prefix("diag:") {
            let d = list
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            return Ok(H0Spec::Diagonal(d));
        }
        if let Some(path) = s.strip_prefix("file:") {
            return H0Spec::from_file(path);
        }
        if let Some(m) = s.strip_prefix("quantiles:") {
            return Ok(H0Spec::Quantiles(m.parse()?));
        }
        Err(Error::Parse(format!("unknown H0 spec {s:?}")))
    }
}

/// Writes a dense matrix in the H0 text format.
pub fn matrix_to_text(n: usize, data: &[f64]) -> String {
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = data[i * n..(i + 1) * n].iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n: usize,
    pub m: usize,
    pub law: VectorLaw,
    pub sigma: AmplitudeLaw,
    pub h0: H0Spec,
    pub seed: u64,
}

impl EnsembleConfig {
    pub fn new(n: usize, m: usize, law: VectorLaw, sigma: AmplitudeLaw, h0: H0Spec, seed: u64) -> Result<Self> {
        let c = Self { n, m, law, sigma, h0, seed };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        self.law.validate()?;
        self.h0.check(self.n)
    }

    /// Draws (tau_a, Y_a) from the streams keyed by (trial, a).
    pub fn draw(&self, trial: u64, alpha: usize) -> Result<(f64, RandomVector)> {
        let tau = sample_tau(&self.sigma, &mut RngStream::for_tau(self.seed, trial, alpha as u64));
        let y = sample_vector(self.law, self.n, &mut RngStream::for_vector(self.seed, trial, alpha as u64))?;
        Ok((tau, y))
    }
}

/// Dense symmetric (hermitian) matrix, both triangles stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> SymMatrix<T> {
    pub fn from_dense(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::ShapeMismatch(format!("{} entries for order {n}", data.len())));
        }
        for i in 0..n {
            if data[i * n + i].norm_sqr() > 0.0 && (data[i * n + i] - data[i * n + i].conj()).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("diagonal entry {i} is not real")));
            }
            for j in 0..i {
                if (data[i * n + j] - data[j * n + i].conj()).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!("matrix not hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re()).sum()
    }

    /// Tr H^2 = sum |h_ij|^2.
    pub fn frobenius_sqr(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Result<EmpiricalSpectrum> {
        EmpiricalSpectrum::new(hermitian_eigenvalues(self.data.clone(), self.n)?)
    }
}

/// A realized ensemble member: real symmetric or complex hermitian.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleMatrix {
    Real(SymMatrix<f64>),
    Hermitian(SymMatrix<Complex64>),
}

impl EnsembleMatrix {
    pub fn n(&self) -> usize {
        match self {
            EnsembleMatrix::Real(a) => a.n(),
            EnsembleMatrix::Hermitian(a) => a.n(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            EnsembleMatrix::Real(a) => a.trace(),
            EnsembleMatrix::Hermitian(a) => a.trace(),
        }
    }

    pub fn frobenius_sqr(&self) -> f64 {
        match self {
            EnsembleMatrix::Real(a) => a.frobenius_sqr(),
            EnsembleMatrix::Hermitian(a) => a.frobenius_sqr(),
        }
    }
}

/// H0 plus the given rank-one terms tau Y Y^*.
pub fn build_matrix_from_vectors(h0: &H0Spec, n: usize, terms: &[(f64, RandomVector)]) -> Result<EnsembleMatrix> {
    let base = h0.realize(n)?;
    if let Some((_, y)) = terms.iter().find(|(_, y)| y.len() != n) {
        return Err(Error::ShapeMismatch(format!("vector of length {} for order {n}", y.len())));
    }
    let complex = terms.iter().any(|(_, y)| matches!(y, RandomVector::Complex(_)));
    if !complex {
        let mut a = base;
        for (tau, y) in terms {
            let RandomVector::Real(y) = y else { unreachable!() };
            if *tau == 0.0 {
                continue;
            }
            // upper triangle only, mirrored below
            for i in 0..n {
                let s = tau * y[i];
                let row = &mut a[i * n + i..(i + 1) * n];
                for (h, yj) in row.iter_mut().zip(&y[i..]) {
                    *h += s * yj;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                a[i * n + j] = a[j * n + i];
            }
        }
        Ok(EnsembleMatrix::Real(SymMatrix { n, data: a }))
    } else {
        let mut a: Vec<Complex64> = base.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        for (tau, y) in terms {
            let y = y.to_complex();
            if *tau == 0.0 {
                continue;
            }
            for i in 0..n {
                let s = y[i] * *tau;
                let row = &mut a[i * n + i..(i + 1) * n];
                for (h, yj) in row.iter_mut().zip(&y[i..]) {
                    *h += s * yj.conj();
                }
            }
        }
        for i in 0..n {
            a[i * n + i].im = 0.0;
            for j in 0..i {
                a[i * n + j] = a[j * n + i].conj();
            }
        }
        Ok(EnsembleMatrix::Hermitian(SymMatrix { n, data: a }))
    }
}

/// H = H0 + sum_{a < m} tau_a Y_a Y_a^* for trial `trial`.
pub fn build_matrix(config: &EnsembleConfig, trial: u64) -> Result<EnsembleMatrix> {
    config.validate()?;
    let terms = (0..config.m).map(|a| config.draw(trial, a)).collect::<Result<Vec<_>>>()?;
    let mut h = build_matrix_from_vectors(&config.h0, config.n, &terms)?;
    if config.law.is_complex() {
        if let EnsembleMatrix::Real(r) = h {
            h = EnsembleMatrix::Hermitian(SymMatrix {
                n: r.n,
                data: r.data.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            });
        }
    }
    Ok(h)
}

pub fn eigenvalues_sym(matrix: &EnsembleMatrix) -> Result<EmpiricalSpectrum> {
    match matrix {
        EnsembleMatrix::Real(a) => a.eigenvalues(),
        EnsembleMatrix::Hermitian(a) => a.eigenvalues(),
    }
}

/// Eigenvalues of one trial; diagonal ensembles with m = 0 skip the solve.
pub fn sample_spectrum(config: &EnsembleConfig, trial: u64) -> Result<EmpiricalSpectrum> {
    if config.m == 0 {
        if let Some(d) = config.h0.diagonal(config.n)? {
            return EmpiricalSpectrum::new(d);
        }
    }
    eigenvalues_sym(&build_matrix(config, trial)?)
}

/// N_n((a, b]) = #{l : a < lambda_l <= b} / n.
pub fn counting_measure(spec: &EmpiricalSpectrum, a: f64, b: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidArgument(format!("empty interval ({a}, {b}]")));
    }
    Ok(spec.cdf(b) - spec.cdf(a))
}

/// g(z) = n^{-1} Tr (H - z)^{-1} by streaming rank-one resolvent updates.
///
/// The full resolvent G of H0 is formed once; each term then applies
/// G <- G - tau (G Y)(Y^* G) / (1 + tau Y^* G Y) and updates the trace by
/// -tau (Y^* G G Y) / (1 + tau Y^* G Y). For real vectors G stays complex
/// symmetric, so Y^* G = (G Y)^T and only one product is needed.
pub fn resolvent_trace_stream(config: &EnsembleConfig, z: Complex64, trial: u64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Err(Error::RealAxisEvaluation { re: z.re, im: z.im });
    }
    config.validate()?;
    let n = config.n;
    let mut g = initial_resolvent(&config.h0, n, z)?;
    let mut trace: Complex64 = (0..n).map(|i| g[i * n + i]).sum();
    let mut u = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for alpha in 0..config.m {
        let (tau, y) = config.draw(trial, alpha)?;
        if tau == 0.0 {
            continue;
        }
        match &y {
            RandomVector::Real(y) => {
                for (i, ui) in u.iter_mut().enumerate() {
                    let row = &g[i * n..(i + 1) * n];
                    *ui = row.iter().zip(y).map(|(gij, yj)| gij * yj).sum();
                }
                let quad: Complex64 = u.iter().zip(y).map(|(ui, yi)| ui * yi).sum();
                let denom = 1.0 + tau * quad;
                if denom.norm() < 1e-12 {
                    return Err(Error::NearSingularDenominator(denom.norm()));
                }
                let coef = tau / denom;
                trace -= coef * u.iter().map(|ui| ui * ui).sum::<Complex64>();
                for i in 0..n {
                    let s = coef * u[i];
                    let row = &mut g[i * n..(i + 1) * n];
                    for (gij, uj) in row.iter_mut().zip(&u) {
                        *gij -= s * uj;
                    }
                }
            }
            RandomVector::Complex(y) => {
                for (i, ui) in u.iter_mut().enumerate() {
                    let row = &g[i * n..(i + 1) * n];
                    *ui = row.iter().zip(y).map(|(gij, yj)| gij * yj).sum();
                }
                w.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
                for (i, yi) in y.iter().enumerate() {
                    let yc = yi.conj();
                    let row = &g[i * n..(i + 1) * n];
                    for (wj, gij) in w.iter_mut().zip(row) {
                        *wj += yc * gij;
                    }
                }
                let quad: Complex64 = y.iter().zip(&u).map(|(yi, ui)| yi.conj() * ui).sum();
                let denom = 1.0 + tau * quad;
                if denom.norm() < 1e-12 {
                    return Err(Error::NearSingularDenominator(denom.norm()));
                }
                let coef = tau / denom;
                trace -= coef * w.iter().zip(&u).map(|(wi, ui)| wi * ui).sum::<Complex64>();
                for i in 0..n {
                    let s = coef * u[i];
                    let row = &mut g[i * n..(i + 1) * n];
                    for (gij, wj) in row.iter_mut().zip(&w) {
                        *gij -= s * wj;
                    }
                }
            }
        }
    }
    Ok(trace / n as f64)
}

fn initial_resolvent(h0: &H0Spec, n: usize, z: Complex64) -> Result<Vec<Complex64>> {
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    match h0.diagonal(n)? {
        Some(d) => {
            for (i, v) in d.iter().enumerate() {
                g[i * n + i] = 1.0 / (v - z);
            }
            Ok(g)
        }
        None => {
            let a: Vec<Complex64> = h0
                .realize(n)?
                .into_iter()
                .enumerate()
                .map(|(k, x)| if k / n == k % n { x - z } else { Complex64::new(x, 0.0) })
                .collect();
            invert(a, n)
        }
    }
}

/// Gauss–Jordan inverse with partial pivoting.
fn invert(mut a: Vec<Complex64>, n: usize) -> Result<Vec<Complex64>> {
    let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        inv[i * n + i] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
            .unwrap();
        if a[piv * n + col].norm() == 0.0 {
            return Err(Error::NearSingularDenominator(0.0));
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
                inv.swap(piv * n + k, col * n + k);
            }
        }
        let p = 1.0 / a[col * n + col];
        for k in 0..n {
            a[col * n + k] *= p;
            inv[col * n + k] *= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..n {
                let (ac, ic) = (a[col * n + k], inv[col * n + k]);
                a[r * n + k] -= f * ac;
                inv[r * n + k] -= f * ic;
            }
        }
    }
    Ok(inv)
}

/// The m x m Gram matrix (Y_a, Y_b) = Y_a^* Y_b of the same draws that
/// [`build_matrix`] uses.
pub fn gram_matrix(config: &EnsembleConfig, trial: u64) -> Result<EnsembleMatrix> {
    config.validate()?;
    let m = config.m;
    let vectors = (0..m).map(|a| config.draw(trial, a).map(|d| d.1)).collect::<Result<Vec<_>>>()?;
    if config.law.is_complex() {
        let v: Vec<Vec<Complex64>> = vectors.iter().map(RandomVector::to_complex).collect();
        let mut g = vec![Complex64::new(0.0, 0.0); m * m];
        for a in 0..m {
            for b in a..m {
                let s: Complex64 = v[a].iter().zip(&v[b]).map(|(x, y)| x.conj() * y).sum();
                g[a * m + b] = s;
                g[b * m + a] = s.conj();
            }
            g[a * m + a].im = 0.0;
        }
        Ok(EnsembleMatrix::Hermitian(SymMatrix { n: m, data: g }))
    } else {
        let v: Vec<&Vec<f64>> = vectors
            .iter()
            .map(|y| match y {
                RandomVector::Real(y) => y,
                RandomVector::Complex(_) => unreachable!(),
            })
            .collect();
        let mut g = vec![0.0; m * m];
        for a in 0..m {
            for b in a..m {
                let s: f64 = v[a].iter().zip(v[b].iter()).map(|(x, y)| x * y).sum();
                g[a * m + b] = s;
                g[b * m + a] = s;
            }
        }
        Ok(EnsembleMatrix::Real(SymMatrix { n: m, data: g }))
    }
}

/// Largest violation of F_G(x) = (n/m) F_M(x) - ((n - m)/m) 1[x >= 0] over
/// all eigenvalue locations of either spectrum.
///
/// Eigenvalues within `1e-9 max(1, max |lambda|)` of each other (or of
/// zero) are identified before comparing the step functions, so rounding
/// in two separate eigensolves does not register as a discrepancy.
pub fn gram_counting_relation(n: usize, m: usize, spec_m: &EmpiricalSpectrum, spec_g: &EmpiricalSpectrum) -> Result<f64> {
    if spec_m.n() != n || spec_g.n() != m {
        return Err(Error::ShapeMismatch(format!(
            "expected spectra of length {n} and {m}, got {} and {}",
            spec_m.n(),
            spec_g.n()
        )));
    }
    if m > n {
        return Err(Error::ShapeMismatch(format!("Gram relation needs n >= m, got n = {n}, m = {m}")));
    }
    let scale = spec_m
        .eigenvalues()
        .iter()
        .chain(spec_g.eigenvalues())
        .fold(1.0f64, |s, x| s.max(x.abs()));
    let tol = 1e-9 * scale;
    let snap = |x: f64| if x.abs() <= tol { 0.0 } else { x };
    let mut points: Vec<f64> = spec_m.eigenvalues().iter().chain(spec_g.eigenvalues()).map(|&x| snap(x)).collect();
    points.sort_by(f64::total_cmp);
    // cluster representatives
    let mut reps: Vec<f64> = Vec::new();
    for x in points {
        match reps.last() {
            Some(&r) if x - r <= tol => {}
            _ => reps.push(x),
        }
    }
    let rep_of = |x: f64| {
        let x = snap(x);
        let k = reps.partition_point(|&r| r <= x + tol) - 1;
        reps[k]
    };
    let m_vals: Vec<f64> = spec_m.eigenvalues().iter().map(|&x| rep_of(x)).collect();
    let g_vals: Vec<f64> = spec_g.eigenvalues().iter().map(|&x| rep_of(x)).collect();
    let (nf, mf) = (n as f64, m as f64);
    let mut sup: f64 = 0.0;
    for &x in &reps {
        let fm = m_vals.partition_point(|&v| v <= x) as f64 / nf;
        let fg = g_vals.partition_point(|&v| v <= x) as f64 / mf;
        let zero_mass = if x >= 0.0 { (nf - mf) / mf } else { 0.0 };
        sup = sup.max((fg - (nf / mf * fm - zero_mass)).abs());
    }
    Ok(sup)
}
