//! Dense symmetric / hermitian eigenvalues.
//!
//! Householder reduction to real symmetric tridiagonal form followed by
//! implicit-shift QL. Only eigenvalues are computed.

use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Field element of a symmetric (real) or hermitian (complex) matrix.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + PartialEq
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
    + SubAssign
{
    const ZERO: Self;
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn re(self) -> f64;
    fn from_re(x: f64) -> Self;

    fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// x / |x|, or one at zero.
    fn phase(self) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;

    fn conj(self) -> Self {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn phase(self) -> Self {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);

    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn phase(self) -> Self {
        let r = self.norm();
        if r == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            self / r
        }
    }
}

/// Reduces a hermitian matrix (row-major, both triangles stored) to a real
/// symmetric tridiagonal matrix with the same eigenvalues.
///
/// Returns `(diagonal, off_diagonal)` with `off_diagonal.len() == n - 1`.
/// The input is consumed as workspace.
pub fn tridiagonalize<T: Scalar>(mut a: Vec<T>, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![T::ZERO; n];
    let mut p = vec![T::ZERO; n];
    for k in 0..n.saturating_sub(2) {
        diag[k] = a[k * n + k].re();
        let m = n - k - 1;
        // column k below the diagonal is the conjugate of row k
        let x0 = a[k * n + k + 1].conj();
        let tail: f64 = (k + 2..n).map(|i| a[k * n + i].norm_sqr()).sum();
        if tail == 0.0 {
            off[k] = x0.abs();
            continue;
        }
        let xnorm = (x0.norm_sqr() + tail).sqrt();
        let phase = x0.phase();
        let v = &mut v[..m];
        v[0] = x0 + phase * xnorm;
        for (j, i) in (k + 2..n).enumerate() {
            v[j + 1] = a[k * n + i].conj();
        }
        let vnorm2: f64 = v.iter().map(|x| x.norm_sqr()).sum();
        let tau = 2.0 / vnorm2;
        off[k] = xnorm;

        // p = tau B v on the trailing block B = A[k+1.., k+1..]
        let p = &mut p[..m];
        for (r, pr) in p.iter_mut().enumerate() {
            let row = &a[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            let mut s = T::ZERO;
            for (b, x) in row.iter().zip(v.iter()) {
                s += *b * *x;
            }
            *pr = s * tau;
        }
        // w = p - (tau/2)(v* p) v, then B <- B - v w* - w v*
        let vp: T = v.iter().zip(p.iter()).fold(T::ZERO, |acc, (x, y)| acc + x.conj() * *y);
        let kcoef = vp.re() * (0.5 * tau);
        for (pr, x) in p.iter_mut().zip(v.iter()) {
            *pr -= *x * kcoef;
        }
        for r in 0..m {
            let vr = v[r];
            let wr = p[r];
            let row = &mut a[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            for ((b, vc), wc) in row.iter_mut().zip(v.iter()).zip(p.iter()) {
                *b -= vr * wc.conj() + wr * vc.conj();
            }
        }
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2].re();
        off[n - 2] = a[(n - 2) * n + n - 1].abs();
    }
    if n >= 1 {
        diag[n - 1] = a[(n - 1) * n + n - 1].re();
    }
    (diag, off)
}

/// Eigenvalues of the symmetric tridiagonal matrix (diag, off), ascending.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    if n == 0 {
        return Ok(d);
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    const MAX_SWEEPS: usize = 60;
    let norm = (0..n).fold(0.0f64, |a, i| a.max(d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 }));
    let floor = f64::EPSILON * norm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::NoConvergence(l));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// All eigenvalues of a dense hermitian matrix, ascending.
pub fn hermitian_eigenvalues<T: Scalar>(a: Vec<T>, n: usize) -> Result<Vec<f64>> {
    let (d, e) = tridiagonalize(a, n);
    tridiagonal_eigenvalues(d, &e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    #[test]
    fn rank_deficient_gram_converges() {
        // B B^T with B of size 128 x 64 leaves a block of rounding-level
        // diagonal entries after tridiagonalization
        let (n, k) = (128, 64);
        let mut rng = RngStream::new(21, 1);
        let b: Vec<f64> = (0..n * k).map(|_| rng.random::<f64>() - 0.5).collect();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = (0..k).map(|l| b[i * k + l] * b[j * k + l]).sum();
            }
        }
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        let ev = hermitian_eigenvalues(a, n).unwrap();
        let scale = ev[n - 1];
        assert_eq!(ev.iter().filter(|x| x.abs() < 1e-12 * scale).count(), n - k);
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-10 * trace);
    }

    fn random_symmetric(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        a
    }

    /// Faddeev-LeVerrier characteristic polynomial, highest degree first.
    fn char_poly(a: &[f64], n: usize) -> Vec<f64> {
        let mut coeffs = vec![1.0];
        let mut m = vec![0.0; n * n];
        let mut c_prev = 1.0;
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{k-1} I
            let mut next = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for t in 0..n {
                        s += a[i * n + t] * m[t * n + j];
                    }
                    next[i * n + j] = s + if i == j { c_prev } else { 0.0 };
                }
            }
            m = next;
            let mut tr = 0.0;
            for i in 0..n {
                for t in 0..n {
                    tr += a[i * n + t] * m[t * n + i];
                }
            }
            c_prev = -tr / k as f64;
            coeffs.push(c_prev);
        }
        coeffs
    }

    fn horner(c: &[f64], x: f64) -> f64 {
        c.iter().fold(0.0, |acc, v| acc * x + v)
    }

    /// Real roots by a fine sign-change scan plus bisection.
    fn poly_roots(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        let mut roots = Vec::new();
        let mut x0 = lo;
        let mut f0 = horner(c, x0);
        for s in 1..=steps {
            let x1 = lo + s as f64 * h;
            let f1 = horner(c, x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0 * f1 < 0.0 {
                let (mut a, mut b, mut fa) = (x0, x1, f0);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    let fm = horner(c, mid);
                    if fm * fa <= 0.0 {
                        b = mid;
                    } else {
                        a = mid;
                        fa = fm;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }

    #[test]
    fn diagonal_input() {
        let a = vec![3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0];
        assert_eq!(hermitian_eigenvalues(a, 3).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rank_one_projector() {
        let y = [0.5, -0.5, 0.5, 0.5];
        let n = 4;
        let a: Vec<f64> = (0..n * n).map(|k| y[k / n] * y[k % n]).collect();
        let ev = hermitian_eigenvalues(a, n).unwrap();
        for (got, want) in ev.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-14, "{ev:?}");
        }
    }

    #[test]
    fn matches_characteristic_polynomial_roots() {
        for seed in 0..5 {
            let n = 5;
            let a = random_symmetric(n, seed);
            let ev = hermitian_eigenvalues(a.clone(), n).unwrap();
            let bound = (0..n).map(|i| (0..n).map(|j| a[i * n + j].abs()).sum::<f64>()).fold(0.0, f64::max);
            let roots = poly_roots(&char_poly(&a, n), -bound - 0.1, bound + 0.1);
            assert_eq!(roots.len(), n, "seed {seed}: {roots:?}");
            for (x, r) in ev.iter().zip(&roots) {
                assert!((x - r).abs() < 1e-8, "seed {seed}: {ev:?} vs {roots:?}");
            }
        }
    }

    #[test]
    fn trace_identities_on_larger_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (17, 3), (120, 4)] {
            let a = random_symmetric(n, seed);
            let tr: f64 = (0..n).map(|i| a[i * n + i]).sum();
            let tr2: f64 = a.iter().map(|x| x * x).sum();
            let norm = tr2.sqrt();
            let ev = hermitian_eigenvalues(a, n).unwrap();
            assert!(ev.windows(2).all(|w| w[0] <= w[1]));
            let s1: f64 = ev.iter().sum();
            let s2: f64 = ev.iter().map(|x| x * x).sum();
            assert!((s1 - tr).abs() <= 1e-8 * n as f64 * norm);
            assert!((s2 - tr2).abs() <= 1e-6 * n as f64 * norm * norm);
        }
    }

    #[test]
    fn hermitian_matches_real_embedding() {
        // eigenvalues of H = A + iB equal those of [[A, -B], [B, A]] with multiplicity two
        let n = 6;
        let mut rng = RngStream::new(9, 0);
        let mut h = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            h[i * n + i] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                h[i * n + j] = z;
                h[j * n + i] = z.conj();
            }
        }
        let m = 2 * n;
        let mut emb = vec![0.0; m * m];
        for i in 0..n {
            for j in 0..n {
                let z = h[i * n + j];
                emb[i * m + j] = z.re;
                emb[(i + n) * m + j + n] = z.re;
                emb[i * m + j + n] = -z.im;
                emb[(i + n) * m + j] = z.im;
            }
        }
        let ev = hermitian_eigenvalues(h, n).unwrap();
        let doubled = hermitian_eigenvalues(emb, m).unwrap();
        for (k, x) in ev.iter().enumerate() {
            assert!((x - doubled[2 * k]).abs() < 1e-12 && (x - doubled[2 * k + 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn already_tridiagonal_and_tiny() {
        assert_eq!(hermitian_eigenvalues(Vec::<f64>::new(), 0).unwrap(), Vec::<f64>::new());
        assert_eq!(hermitian_eigenvalues(vec![4.0], 1).unwrap(), vec![4.0]);
        let ev = hermitian_eigenvalues(vec![2.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] - 3.0).abs() < 1e-15);
    }
}
