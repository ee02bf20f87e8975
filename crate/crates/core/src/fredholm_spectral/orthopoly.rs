//! Orthonormal polynomials of the Hankel measure, the inverse-moment
//! matrix identity, and the determinant-ratio asymptotics.

use super::{build_pure_hankel, hankel_moment, SlownessGeometry};
use crate::error::{Error, Result};
use crate::extprec::{ln_det_spd, solve_lower, spd_inverse, MpMat};
use rug::Float;

/// Orthonormal polynomials L_0..L_n of the measure mu, as a three-term
/// recurrence b_k L_{k+1} = (x - a_k) L_k - b_{k-1} L_{k-1} plus the
/// lower-triangular monomial coefficient matrix.
#[derive(Debug, Clone)]
pub struct OrthopolyRecurrence {
    pub prec: u32,
    /// a_k = <x L_k, L_k>, k = 0..n-1.
    pub a: Vec<Float>,
    /// b_k = || (x - a_k) L_k - b_{k-1} L_{k-1} ||, k = 0..n-1.
    pub b: Vec<Float>,
    /// Row k holds the monomial coefficients of L_k (lower triangular).
    pub coefficients: MpMat,
}

impl OrthopolyRecurrence {
    pub fn degree(&self) -> usize {
        self.coefficients.rows - 1
    }

    /// Evaluate L_k at a real point via the recurrence.
    pub fn eval(&self, k: usize, x: &Float) -> Float {
        let prec = self.prec;
        let mut prev = Float::new(prec);
        let mut curr = self.l0();
        for i in 0..k {
            let mut next = Float::with_val(prec, x - &self.a[i]);
            next *= &curr;
            if i > 0 {
                next -= Float::with_val(prec, &self.b[i - 1] * &prev);
            }
            next /= &self.b[i];
            prev = curr;
            curr = next;
        }
        curr
    }

    /// Evaluate L_k at a complex point (re, im) via the recurrence.
    pub fn eval_complex(&self, k: usize, re: &Float, im: &Float) -> (Float, Float) {
        let prec = self.prec;
        let mut prev = (Float::new(prec), Float::new(prec));
        let mut curr = (self.l0(), Float::new(prec));
        for i in 0..k {
            // (x - a_i) * curr
            let xr = Float::with_val(prec, re - &self.a[i]);
            let mut nr = Float::with_val(prec, &xr * &curr.0);
            nr -= Float::with_val(prec, im * &curr.1);
            let mut ni = Float::with_val(prec, &xr * &curr.1);
            ni += Float::with_val(prec, im * &curr.0);
            if i > 0 {
                nr -= Float::with_val(prec, &self.b[i - 1] * &prev.0);
                ni -= Float::with_val(prec, &self.b[i - 1] * &prev.1);
            }
            nr /= &self.b[i];
            ni /= &self.b[i];
            prev = curr;
            curr = (nr, ni);
        }
        curr
    }

    fn l0(&self) -> Float {
        self.coefficients.at(0, 0).clone()
    }
}

/// Build the orthonormal polynomials of the geometry's measure from its
/// extended-precision moments (moment-driven Stieltjes orthogonalization
/// on the monomial basis).
///
/// Errors with `PrecisionExhausted` at the first degree whose computed
/// squared norm loses positivity.
pub fn orthopoly_mu(
    geometry: &SlownessGeometry,
    n: usize,
    prec: u32,
) -> Result<OrthopolyRecurrence> {
    let moments: Vec<Float> = (0..=2 * n + 2)
        .map(|k| hankel_moment(k, geometry, prec))
        .collect();
    let inner = |u: &[Float], v: &[Float]| -> Float {
        let mut acc = Float::new(prec);
        for (i, ui) in u.iter().enumerate() {
            if ui.is_zero() {
                continue;
            }
            for (j, vj) in v.iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                acc += Float::with_val(prec, ui * vj) * &moments[i + j];
            }
        }
        acc
    };
    let shift = |u: &[Float]| -> Vec<Float> {
        let mut out = vec![Float::new(prec)];
        out.extend(u.iter().cloned());
        out
    };
    let m0 = moments[0].clone();
    if !(m0 > 0) {
        return Err(Error::Domain("zeroth moment must be positive".into()));
    }
    let mut coeffs = MpMat::zeros(n + 1, n + 1, prec);
    let l0 = Float::with_val(prec, 1u32) / m0.sqrt();
    coeffs.set(0, 0, l0.clone());
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut l_prev: Vec<Float> = vec![];
    let mut l_curr: Vec<Float> = vec![l0];
    for k in 0..n {
        let t = shift(&l_curr);
        let mut padded_curr = l_curr.clone();
        padded_curr.push(Float::new(prec));
        let ak = inner(&t, &padded_curr);
        // r = t - a_k L_k - b_{k-1} L_{k-1}
        let mut r = t;
        for (i, c) in padded_curr.iter().enumerate() {
            r[i] -= Float::with_val(prec, &ak * c);
        }
        if k > 0 {
            let bk1: &Float = &b[k - 1];
            for (i, c) in l_prev.iter().enumerate() {
                r[i] -= Float::with_val(prec, bk1 * c);
            }
        }
        let norm2 = inner(&r, &r);
        if !(norm2 > 0) {
            return Err(Error::PrecisionExhausted { last_valid: k });
        }
        let bk = norm2.sqrt();
        for c in r.iter_mut() {
            *c /= &bk;
        }
        for (i, c) in r.iter().enumerate() {
            coeffs.set(k + 1, i, c.clone());
        }
        a.push(ak);
        b.push(bk);
        l_prev = padded_curr;
        l_curr = r;
    }
    Ok(OrthopolyRecurrence {
        prec,
        a,
        b,
        coefficients: coeffs,
    })
}

/// Max entrywise relative deviation between H^{-1} computed directly and
/// the circle-integral matrix G_{m,n} = (1/2pi) int L_m(e^{i t})
/// conj(L_n(e^{i t})) dt transported back through the similarity
/// H^{-1} = B^{-1} G B (B = triangular coefficient matrix of the L_k).
pub fn aitken_inverse_check(geometry: &SlownessGeometry, n: usize, prec: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("need n >= 1".into()));
    }
    let h = build_pure_hankel(n, geometry, prec);
    let h_inv = spd_inverse(&h).ok_or_else(|| {
        Error::Singular("Hankel section not positive definite at this precision; raise it".into())
    })?;
    let rec = orthopoly_mu(geometry, n.saturating_sub(1), prec)?;
    // G by the trapezoid rule on the circle: exact for trigonometric
    // polynomials once the node count exceeds the bandwidth
    let m_nodes = 4 * n.max(2);
    let mut g = MpMat::zeros(n, n, prec);
    let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
    for knode in 0..m_nodes {
        let theta = Float::with_val(prec, &two_pi * Float::with_val(prec, knode as u32))
            / Float::with_val(prec, m_nodes as u32);
        let (sin_t, cos_t) = theta.sin_cos(Float::new(prec));
        let vals: Vec<(Float, Float)> = (0..n)
            .map(|k| rec.eval_complex(k, &cos_t, &sin_t))
            .collect();
        for a in 0..n {
            for bcol in 0..n {
                // Re(L_a conj(L_b)) = re_a re_b + im_a im_b
                let mut term = Float::with_val(prec, &vals[a].0 * &vals[bcol].0);
                term += Float::with_val(prec, &vals[a].1 * &vals[bcol].1);
                *g.at_mut(a, bcol) += term;
            }
        }
    }
    for a in 0..n {
        for bcol in 0..n {
            *g.at_mut(a, bcol) /= m_nodes as u32;
        }
    }
    // Y = B^{-1} G B
    let bmat = rec.coefficients.section(n);
    let mut x = MpMat::zeros(n, n, prec);
    for col in 0..n {
        let rhs: Vec<Float> = (0..n).map(|r| g.at(r, col).clone()).collect();
        let sol = solve_lower(&bmat, &rhs);
        for r in 0..n {
            x.set(r, col, sol[r].clone());
        }
    }
    let y = x.mul(&bmat);
    let mut worst = Float::new(prec);
    for i in 0..n {
        for j in 0..n {
            let denom = h_inv.at(i, j).clone().abs();
            if denom.is_zero() {
                continue;
            }
            let mut dev = Float::with_val(prec, y.at(i, j) - h_inv.at(i, j));
            dev = dev.abs();
            dev /= denom;
            if dev > worst {
                worst = dev;
            }
        }
    }
    Ok(worst.to_f64())
}

/// Szego determinant-ratio sequence r_N = c^{-2N-1} D_N / D_{N-1} with
/// c the transfinite diameter, plus the quadrature value of its limit.
#[derive(Debug, Clone)]
pub struct SzegoRatios {
    /// r_N for N = 1..=n_reached, as f64.
    pub ratios: Vec<f64>,
    /// |r_{N+1} - r_N| convergence diagnostics.
    pub diffs: Vec<f64>,
    /// 2 pi exp((1/2pi) int ln mu'(h(theta)) dtheta) with the cosine map
    /// h(theta) = midpoint + half-width cos(theta).
    pub limit: f64,
    /// Set when precision ran out before n_max (the sequence is
    /// truncated at the last computable determinant).
    pub truncated: bool,
}

/// Determinant ratios of the pure Hankel sections, via Cholesky ln-dets
/// at the given precision.
pub fn szego_determinant_ratio(
    geometry: &SlownessGeometry,
    n_max: usize,
    prec: u32,
) -> Result<SzegoRatios> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    let c = geometry.transfinite_diameter();
    if !(c > 0.0) {
        return Err(Error::Domain("degenerate measure support".into()));
    }
    let ln_c = Float::with_val(prec, c).ln();
    let mut ln_dets = Vec::with_capacity(n_max + 1);
    let mut truncated = false;
    for size in 1..=(n_max + 1) {
        let h = build_pure_hankel(size, geometry, prec);
        match ln_det_spd(&h) {
            Some(v) => ln_dets.push(v),
            None => {
                truncated = true;
                break;
            }
        }
    }
    let mut ratios = Vec::new();
    for n in 1..ln_dets.len() {
        // ln r_N = ln D_N - ln D_{N-1} - (2N+1) ln c
        let mut v = Float::with_val(prec, &ln_dets[n] - &ln_dets[n - 1]);
        v -= Float::with_val(prec, &ln_c * Float::with_val(prec, (2 * n + 1) as u32));
        ratios.push(v.exp().to_f64());
    }
    let diffs: Vec<f64> = ratios.windows(2).map(|w| (w[1] - w[0]).abs()).collect();

    // quadrature of the limit expression (periodic trapezoid)
    let mid = 0.5 * (geometry.rho_upper + geometry.rho_lower);
    let hw = 0.5 * (geometry.rho_upper - geometry.rho_lower);
    let m = 2048;
    let mut acc = 0.0;
    for k in 0..m {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let rho = mid + hw * theta.cos();
        acc += (1.0 / rho - rho).ln();
    }
    let limit = 2.0 * std::f64::consts::PI * (acc / m as f64).exp();

    Ok(SzegoRatios {
        ratios,
        diffs,
        limit,
        truncated,
    })
}
