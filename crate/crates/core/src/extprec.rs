//! Extended-precision dense linear algebra on top of MPFR floats.
//!
//! Everything here is sized for the small (N <= 100) extremely
//! ill-conditioned matrices this crate produces, where precision rather
//! than speed is the binding constraint. The eigensolver is cyclic
//! Jacobi: precision-agnostic and unconditionally stable on symmetric
//! matrices.

use crate::error::{Error, Result};
use rug::Float;

/// Dense row-major matrix of MPFR floats with a uniform precision.
#[derive(Debug, Clone)]
pub struct MpMat {
    pub rows: usize,
    pub cols: usize,
    pub prec: u32,
    data: Vec<Float>,
}

impl MpMat {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        MpMat {
            rows,
            cols,
            prec,
            data: vec![Float::new(prec); rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &Float {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Float {
        &mut self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Float) {
        self.data[i * self.cols + j] = v;
    }

    pub fn section(&self, n: usize) -> MpMat {
        let mut out = MpMat::zeros(n, n, self.prec);
        for i in 0..n {
            for j in 0..n {
                *out.at_mut(i, j) = self.at(i, j).clone();
            }
        }
        out
    }

    pub fn transpose(&self) -> MpMat {
        let mut out = MpMat::zeros(self.cols, self.rows, self.prec);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).clone();
            }
        }
        out
    }

    pub fn mul(&self, other: &MpMat) -> MpMat {
        assert_eq!(self.cols, other.rows);
        let prec = self.prec;
        let mut out = MpMat::zeros(self.rows, other.cols, prec);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Float::new(prec);
                for k in 0..self.cols {
                    acc += Float::with_val(prec, self.at(i, k) * other.at(k, j));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    /// Gram matrix A^T A.
    pub fn gram(&self) -> MpMat {
        let prec = self.prec;
        let mut out = MpMat::zeros(self.cols, self.cols, prec);
        for i in 0..self.cols {
            for j in i..self.cols {
                let mut acc = Float::new(prec);
                for k in 0..self.rows {
                    acc += Float::with_val(prec, self.at(k, i) * self.at(k, j));
                }
                *out.at_mut(j, i) = acc.clone();
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn frobenius(&self) -> Float {
        let mut acc = Float::new(self.prec);
        for v in &self.data {
            acc += Float::with_val(self.prec, v * v);
        }
        acc.sqrt()
    }
}

pub fn mpf(prec: u32, v: f64) -> Float {
    Float::with_val(prec, v)
}

/// Natural log of a positive Float as f64, robust to values far outside
/// the f64 exponent range.
pub fn ln_f64(v: &Float) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (m, e) = v.to_f64_exp();
    m.abs().ln() + e as f64 * std::f64::consts::LN_2
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// descending. Convergence threshold is 2^{-(prec-12)} relative to the
/// Frobenius norm.
pub fn jacobi_eigenvalues(mat: &MpMat) -> Result<Vec<Float>> {
    assert_eq!(mat.rows, mat.cols);
    let n = mat.rows;
    let prec = mat.prec;
    if n == 0 {
        return Ok(vec![]);
    }
    if n == 1 {
        return Ok(vec![mat.at(0, 0).clone()]);
    }
    let mut a = mat.clone();
    let frob = a.frobenius();
    let mut tol = Float::with_val(prec, 1u32);
    tol >>= prec.saturating_sub(12);
    tol *= &frob;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = Float::new(prec);
        for i in 0..n {
            for j in (i + 1)..n {
                off += Float::with_val(prec, a.at(i, j) * a.at(i, j));
            }
        }
        let off = off.sqrt();
        if off <= tol {
            let mut eig: Vec<Float> = (0..n).map(|i| a.at(i, i).clone()).collect();
            eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
            return Ok(eig);
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                if a.at(p, q).is_zero() {
                    continue;
                }
                let apq = a.at(p, q).clone();
                let diff = Float::with_val(prec, a.at(q, q) - a.at(p, p));
                let theta = Float::with_val(prec, &diff / (2.0 * apq.clone()));
                let t = {
                    let mut denom = Float::with_val(prec, &theta * &theta);
                    denom += 1u32;
                    let denom = denom.sqrt() + theta.clone().abs();
                    let mut t = Float::with_val(prec, 1u32) / denom;
                    if theta.is_sign_negative() && !theta.is_zero() {
                        t = -t;
                    }
                    t
                };
                let mut c = Float::with_val(prec, &t * &t);
                c += 1u32;
                let c = Float::with_val(prec, 1u32) / c.sqrt();
                let s = Float::with_val(prec, &t * &c);
                let tau = Float::with_val(prec, &s / Float::with_val(prec, 1u32 + c.clone()));
                let h = Float::with_val(prec, &t * &apq);
                *a.at_mut(p, p) -= &h;
                *a.at_mut(q, q) += &h;
                a.set(p, q, Float::new(prec));
                a.set(q, p, Float::new(prec));
                for j in 0..n {
                    if j == p || j == q {
                        continue;
                    }
                    let g = a.at(j, p).clone();
                    let hjq = a.at(j, q).clone();
                    let new_jp =
                        Float::with_val(prec, &g - &s * Float::with_val(prec, &hjq + &g * &tau));
                    let new_jq =
                        Float::with_val(prec, &hjq + &s * Float::with_val(prec, &g - &hjq * &tau));
                    a.set(j, p, new_jp.clone());
                    a.set(p, j, new_jp);
                    a.set(j, q, new_jq.clone());
                    a.set(q, j, new_jq);
                }
            }
        }
    }
    Err(Error::NonConvergence(
        "Jacobi eigenvalue iteration did not reach the off-diagonal threshold".into(),
    ))
}

/// Cholesky factor L (lower) of a symmetric positive definite matrix.
/// Returns None when a pivot is non-positive at working precision.
pub fn cholesky(mat: &MpMat) -> Option<MpMat> {
    assert_eq!(mat.rows, mat.cols);
    let n = mat.rows;
    let prec = mat.prec;
    let mut l = MpMat::zeros(n, n, prec);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = mat.at(i, j).clone();
            for k in 0..j {
                sum -= Float::with_val(prec, l.at(i, k) * l.at(j, k));
            }
            if i == j {
                if sum <= 0 {
                    return None;
                }
                l.set(i, j, sum.sqrt());
            } else {
                let v = Float::with_val(prec, &sum / l.at(j, j));
                l.set(i, j, v);
            }
        }
    }
    Some(l)
}

/// ln det of an SPD matrix via Cholesky.
pub fn ln_det_spd(mat: &MpMat) -> Option<Float> {
    let l = cholesky(mat)?;
    let prec = mat.prec;
    let mut acc = Float::new(prec);
    for i in 0..mat.rows {
        acc += l.at(i, i).clone().ln();
    }
    Some(acc * 2u32)
}

/// Solve L x = b with L lower triangular (in-place on a copy of b).
pub fn solve_lower(l: &MpMat, b: &[Float]) -> Vec<Float> {
    let n = l.rows;
    let prec = l.prec;
    let mut x: Vec<Float> = b.to_vec();
    for i in 0..n {
        let mut v = x[i].clone();
        for k in 0..i {
            v -= Float::with_val(prec, l.at(i, k) * &x[k]);
        }
        x[i] = Float::with_val(prec, &v / l.at(i, i));
    }
    x
}

/// Solve L^T x = b with L lower triangular.
pub fn solve_lower_transposed(l: &MpMat, b: &[Float]) -> Vec<Float> {
    let n = l.rows;
    let prec = l.prec;
    let mut x: Vec<Float> = b.to_vec();
    for i in (0..n).rev() {
        let mut v = x[i].clone();
        for k in (i + 1)..n {
            v -= Float::with_val(prec, l.at(k, i) * &x[k]);
        }
        x[i] = Float::with_val(prec, &v / l.at(i, i));
    }
    x
}

/// Inverse of an SPD matrix via Cholesky. None if not positive definite.
pub fn spd_inverse(mat: &MpMat) -> Option<MpMat> {
    let n = mat.rows;
    let prec = mat.prec;
    let l = cholesky(mat)?;
    let mut inv = MpMat::zeros(n, n, prec);
    for j in 0..n {
        let mut e = vec![Float::new(prec); n];
        e[j] = Float::with_val(prec, 1u32);
        let y = solve_lower(&l, &e);
        let x = solve_lower_transposed(&l, &y);
        for i in 0..n {
            inv.set(i, j, x[i].clone());
        }
    }
    Some(inv)
}

/// Gauss-Legendre nodes and weights on [-1, 1] at the given precision.
pub fn gauss_legendre_mp(n: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let seed = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut x = Float::with_val(prec, seed);
        for _ in 0..200 {
            let (p, dp) = legendre_mp(n, &x, prec);
            let dx = Float::with_val(prec, &p / &dp);
            x -= &dx;
            let mut small = Float::with_val(prec, 1u32);
            small >>= prec - 4;
            if dx.abs() < small {
                break;
            }
        }
        let (_, dp) = legendre_mp(n, &x, prec);
        let mut w = Float::with_val(prec, &x * &x);
        w = Float::with_val(prec, 1u32 - w);
        w *= Float::with_val(prec, &dp * &dp);
        let w = Float::with_val(prec, 2u32) / w;
        nodes.push(x);
        weights.push(w);
    }
    (nodes, weights)
}

/// (P_n(x), P_n'(x)) at extended precision.
pub fn legendre_mp(n: usize, x: &Float, prec: u32) -> (Float, Float) {
    if n == 0 {
        return (Float::with_val(prec, 1u32), Float::new(prec));
    }
    let mut p0 = Float::with_val(prec, 1u32);
    let mut p1 = x.clone();
    for k in 2..=n {
        let mut p2 = Float::with_val(prec, x * &p1);
        p2 *= 2 * k as u32 - 1;
        p2 -= Float::with_val(prec, &p0 * (k as u32 - 1));
        p2 /= k as u32;
        p0 = p1;
        p1 = p2;
    }
    let mut dp = Float::with_val(prec, x * &p1);
    dp -= &p0;
    dp *= n as u32;
    let mut denom = Float::with_val(prec, x * x);
    denom -= 1u32;
    dp /= denom;
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_f64(rows: usize, cols: usize, prec: u32, vals: &[f64]) -> MpMat {
        let mut m = MpMat::zeros(rows, cols, prec);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, mpf(prec, vals[i * cols + j]));
            }
        }
        m
    }

    #[test]
    fn jacobi_matches_known_3x3() {
        let m = from_f64(3, 3, 128, &[2.0, 0.0, 0.0, 0.0, 3.0, 4.0, 0.0, 4.0, 9.0]);
        let eig = jacobi_eigenvalues(&m).unwrap();
        let got: Vec<f64> = eig.iter().map(|v| v.to_f64()).collect();
        assert!((got[0] - 11.0).abs() < 1e-30);
        assert!((got[1] - 2.0).abs() < 1e-30);
        assert!((got[2] - 1.0).abs() < 1e-30);
    }

    #[test]
    fn jacobi_resolves_tiny_eigenvalue_of_spd_matrix() {
        // Hilbert 6x6: smallest eigenvalue ~ 1e-7, huge condition number
        let prec = 256;
        let mut m = MpMat::zeros(6, 6, prec);
        for i in 0..6 {
            for j in 0..6 {
                m.set(
                    i,
                    j,
                    Float::with_val(prec, 1u32) / (i as u32 + j as u32 + 1),
                );
            }
        }
        let eig = jacobi_eigenvalues(&m).unwrap();
        // reference from high-precision computation of Hilbert(6)
        let smallest = eig[5].to_f64();
        assert!((smallest - 1.0827994788152389e-7).abs() < 1e-15);
    }

    #[test]
    fn cholesky_recovers_determinant() {
        let m = from_f64(2, 2, 128, &[4.0, 2.0, 2.0, 3.0]);
        let ld = ln_det_spd(&m).unwrap();
        assert!((ld.to_f64() - (8.0f64).ln()).abs() < 1e-30);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = from_f64(2, 2, 128, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky(&m).is_none());
    }

    #[test]
    fn spd_inverse_roundtrip() {
        let m = from_f64(3, 3, 192, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let inv = spd_inverse(&m).unwrap();
        let prod = m.mul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod.at(i, j).to_f64() - expect).abs() < 1e-40);
            }
        }
    }

    #[test]
    fn mp_gauss_legendre_integrates_high_degree() {
        let prec = 256;
        let (x, w) = gauss_legendre_mp(24, prec);
        // int_{-1}^{1} t^30 dt = 2/31, degree 30 < 2*24-1
        let mut acc = Float::new(prec);
        for (xi, wi) in x.iter().zip(&w) {
            let mut t = Float::with_val(prec, 1u32);
            for _ in 0..30 {
                t *= xi;
            }
            acc += Float::with_val(prec, &t * wi);
        }
        let expect = Float::with_val(prec, 2u32) / 31u32;
        let diff = Float::with_val(prec, &acc - &expect).abs();
        assert!(diff.to_f64() < 1e-70);
    }

    #[test]
    fn ln_f64_handles_extreme_exponents() {
        let v = Float::with_val(256, Float::parse("1e-500").unwrap());
        let l = ln_f64(&v);
        assert!((l - (-500.0 * std::f64::consts::LN_10)).abs() < 1e-9);
    }
}
