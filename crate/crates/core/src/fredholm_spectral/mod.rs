//! Spectral conditioning analysis of reflected-ray traveltime inversion.
//!
//! In squared-slowness variables the normal operator of the reflected
//! problem is unitarily equivalent, in the rescaled Legendre basis, to
//! a normalized Hankel matrix of moments
//!
//! K_{m,n} = Delta ((m+1/2)(n+1/2))^{-1/2} int rho^{m+n} dmu(rho),
//! dmu = (1/rho - rho) drho on [rho_*, rho^*],
//!
//! whose finite sections this module builds and diagonalizes in
//! extended precision. The interval [rho_*, rho^*] is the image of the
//! data window under the elliptical (Bernstein) map, and the decay rates
//! alpha, beta of the condition-number bounds are elementary functions
//! of it.

pub mod eigen;
pub mod oracle;
pub mod orthopoly;
pub mod schedule;

pub use eigen::{bound_curves, eigen_decay, BoundCurves, CurveAlignment, LineFit, SpectralReport};
pub use oracle::{quadrature_oracle_a, OracleBasis, OracleResult};
pub use orthopoly::{
    aitken_inverse_check, orthopoly_mu, szego_determinant_ratio, OrthopolyRecurrence, SzegoRatios,
};
pub use schedule::{
    optimize_delta, schedule_rate, subinterval_schedule, weyl_check, DeltaOptimum,
    SubintervalBlock, SubintervalSchedule, ROOT_EXP_RATE,
};

use crate::error::{Error, Result};
use crate::extprec::MpMat;
use rug::Float;

/// Floor applied to rho_* = 0 requests: the k = 0 moment diverges
/// logarithmically as rho_* -> 0, while every eigenvalue of interest is
/// insensitive to the floor (the divergence only inflates the (0,0)
/// entry, and eigenvalue interlacing caps its influence at one index
/// shift).
pub const RHO_FLOOR: f64 = 1e-30;

/// The four remarkable slownesses of a reflected-ray dataset.
#[derive(Debug, Clone, Copy)]
pub struct SlownessBounds {
    /// Smallest physical slowness, min 1/c.
    pub p_min: f64,
    /// Largest physical slowness, max 1/c.
    pub p_max: f64,
    /// Smallest observed horizontal slowness.
    pub p_data_min: f64,
    /// Largest observed horizontal slowness.
    pub p_data_max: f64,
}

/// Slowness geometry with every derived quantity of the conditioning
/// analysis.
#[derive(Debug, Clone)]
pub struct SlownessGeometry {
    pub slownesses: SlownessBounds,
    /// x-bounds: squared slownesses.
    pub x_lower: f64,
    pub x_upper: f64,
    pub x_data_lower: f64,
    pub x_data_upper: f64,
    /// Midpoint and half-width of [x_lower, x_upper].
    pub sigma: f64,
    pub delta: f64,
    /// Elliptical radii of the data window: 0 < rho_lower < rho_upper <= 1.
    pub rho_lower: f64,
    pub rho_upper: f64,
    /// Squared slowness contrast e = (p_max / p_min)^2.
    pub contrast: f64,
    /// Smallest ray angle against the layering; cos(psi) = p^*/p_min.
    pub grazing_angle: f64,
    /// Lower-bound rate alpha = 1/rho_upper (= 1 iff psi = 0).
    pub alpha: f64,
    /// Upper-bound rate beta.
    pub beta: f64,
}

/// rho = x_tilde - sqrt(x_tilde^2 - 1), evaluated in the stable
/// reciprocal form; inverse of x_tilde = (rho + 1/rho)/2 on (0, 1].
pub fn elliptical_radius(x_tilde: f64) -> Result<f64> {
    if !(x_tilde >= 1.0) {
        return Err(Error::Domain(format!(
            "elliptical radius needs x_tilde >= 1, got {x_tilde}"
        )));
    }
    Ok(1.0 / (x_tilde + (x_tilde * x_tilde - 1.0).sqrt()))
}

/// x_tilde = (rho + 1/rho) / 2.
pub fn x_tilde_of_rho(rho: f64) -> f64 {
    0.5 * (rho + 1.0 / rho)
}

fn beta_of(rho_lower: f64, rho_upper: f64) -> f64 {
    let t = (rho_upper + rho_lower + 2.0) / (rho_upper - rho_lower);
    t + (t * t - 1.0).sqrt()
}

impl SlownessGeometry {
    /// Build from the four slownesses, 0 < p_* < p^* <= p_min < p_max.
    pub fn from_slownesses(
        p_min: f64,
        p_max: f64,
        p_data_min: f64,
        p_data_max: f64,
    ) -> Result<Self> {
        if !(p_data_min > 0.0 && p_data_min < p_data_max && p_data_max <= p_min && p_min < p_max) {
            return Err(Error::Domain(format!(
                "slowness ordering must be 0 < p_* < p^* <= p_min < p_max, got \
                 ({p_data_min}, {p_data_max}, {p_min}, {p_max})"
            )));
        }
        let contrast = (p_max / p_min) * (p_max / p_min);
        let rho_of = |p: f64| -> Result<f64> {
            let ratio = p / p_min;
            let w = 1.0 + 2.0 * (1.0 - ratio * ratio) / (contrast - 1.0);
            elliptical_radius(w)
        };
        let rho_lower = rho_of(p_data_min)?;
        let rho_upper = rho_of(p_data_max)?;
        let x_lower = p_min * p_min;
        let x_upper = p_max * p_max;
        let sigma = 0.5 * (x_upper + x_lower);
        let delta = 0.5 * (x_upper - x_lower);
        Ok(SlownessGeometry {
            slownesses: SlownessBounds {
                p_min,
                p_max,
                p_data_min,
                p_data_max,
            },
            x_lower,
            x_upper,
            x_data_lower: p_data_min * p_data_min,
            x_data_upper: p_data_max * p_data_max,
            sigma,
            delta,
            rho_lower,
            rho_upper,
            contrast,
            grazing_angle: (p_data_max / p_min).min(1.0).acos(),
            alpha: 1.0 / rho_upper,
            beta: beta_of(rho_lower, rho_upper),
        })
    }

    /// Build directly from the elliptical radii (the Hankel-measure
    /// parametrization). A representative slowness realization with
    /// Delta = 1 and x_* = 1 is synthesized so every derived field is
    /// populated; rho_lower = 0 is clamped to `RHO_FLOOR`.
    pub fn from_rho(rho_lower: f64, rho_upper: f64) -> Result<Self> {
        if !(rho_lower >= 0.0 && rho_lower < rho_upper && rho_upper <= 1.0) {
            return Err(Error::Domain(format!(
                "need 0 <= rho_* < rho^* <= 1, got ({rho_lower}, {rho_upper})"
            )));
        }
        let rho_lower = rho_lower.max(RHO_FLOOR);
        // x_tilde images of the data-window ends
        let xt_hi = x_tilde_of_rho(rho_lower); // image of x_*
        let xt_lo = x_tilde_of_rho(rho_upper); // image of x^*
        let delta = 1.0;
        let x_lower = xt_hi; // makes x_* = sigma - delta * xt_hi = 1
        let sigma = x_lower + delta;
        let x_upper = x_lower + 2.0 * delta;
        let x_data_lower = sigma - delta * xt_hi;
        let x_data_upper = sigma - delta * xt_lo;
        Ok(SlownessGeometry {
            slownesses: SlownessBounds {
                p_min: x_lower.sqrt(),
                p_max: x_upper.sqrt(),
                p_data_min: x_data_lower.sqrt(),
                p_data_max: x_data_upper.sqrt(),
            },
            x_lower,
            x_upper,
            x_data_lower,
            x_data_upper,
            sigma,
            delta,
            rho_lower,
            rho_upper,
            contrast: x_upper / x_lower,
            grazing_angle: (x_data_upper / x_lower).sqrt().min(1.0).acos(),
            alpha: 1.0 / rho_upper,
            beta: beta_of(rho_lower, rho_upper),
        })
    }

    /// Transfinite diameter (rho_upper - rho_lower) / 4 of the measure
    /// support.
    pub fn transfinite_diameter(&self) -> f64 {
        0.25 * (self.rho_upper - self.rho_lower)
    }
}

/// Moment int rho^k dmu over [rho_lower, rho_upper] with density
/// 1/rho - rho, by the closed-form antiderivative at the given
/// precision.
pub fn hankel_moment_rho(k: usize, rho_lower: f64, rho_upper: f64, prec: u32) -> Float {
    let lo = Float::with_val(prec, rho_lower);
    let hi = Float::with_val(prec, rho_upper);
    if rho_lower == rho_upper {
        return Float::new(prec);
    }
    if k == 0 {
        // log(hi/lo) - (hi^2 - lo^2)/2
        let mut v = Float::with_val(prec, &hi / &lo);
        v = v.ln();
        let sq = Float::with_val(prec, &hi * &hi) - Float::with_val(prec, &lo * &lo);
        v - sq / 2u32
    } else {
        let kk = k as u32;
        let hi_k = Float::with_val(prec, rug::ops::Pow::pow(&hi, kk));
        let lo_k = Float::with_val(prec, rug::ops::Pow::pow(&lo, kk));
        let hi_k2 = Float::with_val(prec, rug::ops::Pow::pow(&hi, kk + 2));
        let lo_k2 = Float::with_val(prec, rug::ops::Pow::pow(&lo, kk + 2));
        let first = Float::with_val(prec, &hi_k - &lo_k) / kk;
        let second = Float::with_val(prec, &hi_k2 - &lo_k2) / (kk + 2);
        first - second
    }
}

/// Moment of the geometry's measure.
pub fn hankel_moment(k: usize, geometry: &SlownessGeometry, prec: u32) -> Float {
    hankel_moment_rho(k, geometry.rho_lower, geometry.rho_upper, prec)
}

/// A finite section of the normalized Hankel matrix K.
#[derive(Debug, Clone)]
pub struct HankelSection {
    pub order: usize,
    pub prec_bits: u32,
    mat: MpMat,
}

impl HankelSection {
    pub fn matrix(&self) -> &MpMat {
        &self.mat
    }

    pub fn entry(&self, m: usize, n: usize) -> &Float {
        self.mat.at(m, n)
    }
}

/// Build the order-n section of K:
/// K_{m,n} = Delta ((m+1/2)(n+1/2))^{-1/2} moment(m+n).
pub fn build_hankel_section(n: usize, geometry: &SlownessGeometry, prec: u32) -> HankelSection {
    assert!(n >= 1, "section order must be at least 1");
    let moments: Vec<Float> = (0..=2 * n - 2)
        .map(|k| hankel_moment(k, geometry, prec))
        .collect();
    let mut mat = MpMat::zeros(n, n, prec);
    let delta = Float::with_val(prec, geometry.delta);
    let halves: Vec<Float> = (0..n)
        .map(|m| {
            let mut v = Float::with_val(prec, 2 * m as u32 + 1);
            v /= 2u32;
            v.sqrt()
        })
        .collect();
    for m in 0..n {
        for k in m..n {
            let mut v = Float::with_val(prec, &delta * &moments[m + k]);
            v /= Float::with_val(prec, &halves[m] * &halves[k]);
            mat.set(m, k, v.clone());
            mat.set(k, m, v);
        }
    }
    HankelSection {
        order: n,
        prec_bits: prec,
        mat,
    }
}

/// Pure Hankel section H_{m,n} = moment(m+n) without normalization; the
/// object of the inverse-moment and determinant asymptotics.
pub fn build_pure_hankel(n: usize, geometry: &SlownessGeometry, prec: u32) -> MpMat {
    let moments: Vec<Float> = (0..=2 * n - 2)
        .map(|k| hankel_moment(k, geometry, prec))
        .collect();
    let mut mat = MpMat::zeros(n, n, prec);
    for m in 0..n {
        for k in 0..n {
            mat.set(m, k, moments[m + k].clone());
        }
    }
    mat
}

/// Result of a truncated Legendre expansion of the 1/sqrt(y - x) kernel.
#[derive(Debug, Clone, Copy)]
pub struct KernelExpansion {
    /// Partial sum sqrt(2/Delta) sum_{k<n} rho^{k+1/2} P_k(y_tilde).
    pub partial_sum: f64,
    /// Direct kernel value 1/sqrt(Delta (x_tilde - y_tilde)).
    pub direct: f64,
    /// Geometric bound on the dropped tail.
    pub tail_bound: f64,
    /// Set when x_tilde = 1 (rho = 1): the series converges slowly.
    pub slow_convergence: bool,
}

/// Evaluate the Legendre expansion of the kernel at (x_tilde, y_tilde)
/// truncated to `n_terms` terms, for an interval of half-width `delta`.
pub fn legendre_kernel_expansion(
    delta: f64,
    x_tilde: f64,
    y_tilde: f64,
    n_terms: usize,
) -> Result<KernelExpansion> {
    if !(delta > 0.0) {
        return Err(Error::Domain("half-width delta must be positive".into()));
    }
    if !(-1.0..=1.0).contains(&y_tilde) {
        return Err(Error::Domain(format!(
            "y_tilde = {y_tilde} outside [-1, 1]"
        )));
    }
    let rho = elliptical_radius(x_tilde)?;
    let scale = (2.0 / delta).sqrt();
    let mut sum = 0.0;
    let mut rho_pow = rho.sqrt(); // rho^{k+1/2}, starting at k = 0
    let mut p_prev = 1.0; // P_{k-2}
    let mut p_curr = y_tilde; // P_{k-1}
    for k in 0..n_terms {
        let pk = match k {
            0 => 1.0,
            1 => y_tilde,
            _ => {
                let kf = k as f64;
                let p_next = ((2.0 * kf - 1.0) * y_tilde * p_curr - (kf - 1.0) * p_prev) / kf;
                p_prev = p_curr;
                p_curr = p_next;
                p_next
            }
        };
        sum += rho_pow * pk;
        rho_pow *= rho;
    }
    let tail = if rho < 1.0 {
        scale * rho.powf(n_terms as f64 + 0.5) / (1.0 - rho)
    } else {
        f64::INFINITY
    };
    Ok(KernelExpansion {
        partial_sum: scale * sum,
        direct: 1.0 / (delta * (x_tilde - y_tilde)).sqrt(),
        tail_bound: tail,
        slow_convergence: rho >= 1.0 - 1e-14,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extprec::{gauss_legendre_mp, mpf};

    #[test]
    fn grazing_limit_gives_unit_radius_and_alpha() {
        let g = SlownessGeometry::from_slownesses(0.5, 1.0, 0.1, 0.5).unwrap();
        assert!((g.rho_upper - 1.0).abs() < 1e-15);
        assert!((g.alpha - 1.0).abs() < 1e-15);
        assert!(g.grazing_angle.abs() < 1e-7);
    }

    #[test]
    fn alpha_and_beta_increase_with_grazing_angle() {
        // psi grows as p^* decreases below p_min
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..10 {
            let p_data_max = 0.5 - 0.03 * i as f64;
            let g = SlownessGeometry::from_slownesses(0.5, 1.0, 0.05, p_data_max).unwrap();
            if let Some((a0, b0)) = prev {
                assert!(g.alpha > a0, "alpha must increase with psi");
                assert!(g.beta > b0, "beta must increase with psi");
            }
            prev = Some((g.alpha, g.beta));
        }
    }

    #[test]
    fn contrast_formula_matches_elliptical_route() {
        let g = SlownessGeometry::from_slownesses(0.62, 1.13, 0.21, 0.55).unwrap();
        // rho_upper from the x_tilde image of x^* directly
        let xt = (g.sigma - g.x_data_upper) / g.delta;
        let direct = elliptical_radius(xt).unwrap();
        assert!(
            (g.rho_upper - direct).abs() < 1e-13 * direct,
            "{} vs {direct}",
            g.rho_upper
        );
        let xt_lo = (g.sigma - g.x_data_lower) / g.delta;
        let direct_lo = elliptical_radius(xt_lo).unwrap();
        assert!((g.rho_lower - direct_lo).abs() < 1e-13 * direct_lo);
        // invariants
        assert!(g.rho_lower > 0.0 && g.rho_lower < g.rho_upper && g.rho_upper <= 1.0);
        assert!(g.beta > 1.0);
    }

    #[test]
    fn geometry_rejects_bad_ordering() {
        assert!(SlownessGeometry::from_slownesses(0.5, 1.0, 0.5, 0.4).is_err());
        assert!(SlownessGeometry::from_slownesses(0.5, 0.5, 0.1, 0.4).is_err());
        assert!(SlownessGeometry::from_slownesses(0.5, 1.0, 0.0, 0.4).is_err());
        assert!(SlownessGeometry::from_rho(0.5, 0.4).is_err());
        assert!(SlownessGeometry::from_rho(0.5, 1.1).is_err());
    }

    #[test]
    fn from_rho_synthesizes_consistent_geometry() {
        let g = SlownessGeometry::from_rho(0.2, 0.9).unwrap();
        assert_eq!(g.delta, 1.0);
        assert!((g.x_data_lower - 1.0).abs() < 1e-12);
        // the elliptical images reproduce the requested radii
        let xt_hi = (g.sigma - g.x_data_lower) / g.delta;
        assert!((elliptical_radius(xt_hi).unwrap() - 0.2).abs() < 1e-13);
        let xt_lo = (g.sigma - g.x_data_upper) / g.delta;
        assert!((elliptical_radius(xt_lo).unwrap() - 0.9).abs() < 1e-13);
        assert!(g.x_data_upper <= g.x_lower);
    }

    #[test]
    fn elliptical_map_roundtrip_is_stable() {
        for &xt in &[1.0, 1.0 + 1e-12, 1.5, 7.0, 1e6, 3e14] {
            let rho = elliptical_radius(xt).unwrap();
            let back = x_tilde_of_rho(rho);
            assert!((back - xt).abs() <= 1e-14 * xt, "xt = {xt}: back = {back}");
        }
        assert!(elliptical_radius(0.999).is_err());
    }

    #[test]
    fn moment_of_empty_interval_is_zero() {
        for k in 0..6 {
            assert!(hankel_moment_rho(k, 0.37, 0.37, 128).is_zero());
        }
    }

    #[test]
    fn first_moment_full_interval() {
        // int_0^1 rho (1/rho - rho) drho = 1 - 1/3 = 2/3
        let v = hankel_moment_rho(1, 0.0, 1.0, 128);
        let expect = mpf(128, 2.0) / 3u32;
        let diff = Float::with_val(128, &v - &expect).abs();
        assert!(diff.to_f64() < 1e-35);
    }

    #[test]
    fn seventh_moment_matches_quadrature_oracle() {
        let prec = 128;
        let v = hankel_moment_rho(7, 0.2, 0.9, prec);
        // independent oracle: 16-node Gauss rule is exact for degree 9
        let (nodes, weights) = gauss_legendre_mp(16, prec);
        let lo = mpf(prec, 0.2);
        let hi = mpf(prec, 0.9);
        let half = Float::with_val(prec, &hi - &lo) / 2u32;
        let mid = Float::with_val(prec, &hi + &lo) / 2u32;
        let mut acc = Float::new(prec);
        for (x, w) in nodes.iter().zip(&weights) {
            let rho = Float::with_val(prec, &mid + Float::with_val(prec, &half * x));
            let mut f = Float::with_val(prec, 1u32) / &rho;
            f -= &rho;
            let mut r7 = Float::with_val(prec, 1u32);
            for _ in 0..7 {
                r7 *= &rho;
            }
            acc += Float::with_val(prec, &r7 * &f) * Float::with_val(prec, w * &half);
        }
        let diff = Float::with_val(prec, &v - &acc).abs();
        assert!(diff.to_f64() < 1e-25, "diff = {:e}", diff.to_f64());
    }

    #[test]
    fn hankel_section_order_one_entry() {
        let g = SlownessGeometry::from_rho(0.2, 0.9).unwrap();
        let sec = build_hankel_section(1, &g, 192);
        // normalization (1/2 * 1/2)^{-1/2} = 2
        let expect = Float::with_val(192, 2.0 * g.delta) * hankel_moment(0, &g, 192);
        let diff = Float::with_val(192, sec.entry(0, 0) - &expect).abs();
        assert!(diff.to_f64() < 1e-40);
    }

    #[test]
    fn hankel_section_is_symmetric_and_positive() {
        let g = SlownessGeometry::from_rho(0.15, 0.85).unwrap();
        let sec = build_hankel_section(6, &g, 256);
        for m in 0..6 {
            for n in 0..6 {
                assert_eq!(sec.entry(m, n), sec.entry(n, m));
                assert!(*sec.entry(m, n) > 0);
            }
        }
    }

    #[test]
    fn hankel_section_matches_log_kernel_double_integral() {
        // direct route: K_{m,n} = int int p_m(y') k(y', y) p_n(y) dy' dy
        // with k the antiderivative of the 1/sqrt product over the data
        // window
        let g = SlownessGeometry::from_rho(0.2, 0.9).unwrap();
        let prec = 192;
        let sec = build_hankel_section(3, &g, prec);
        let (x_lo, x_hi) = (g.x_data_lower, g.x_data_upper);
        let kernel = |yp: f64, y: f64| -> f64 {
            let num = (yp - x_lo).sqrt() + (y - x_lo).sqrt();
            let den = (yp - x_hi).sqrt() + (y - x_hi).sqrt();
            2.0 * (num / den).ln()
        };
        let p_basis = |n: usize, y: f64| -> f64 {
            let yt = (g.sigma - y) / g.delta;
            ((n as f64 + 0.5) / g.delta).sqrt() * crate::quad::legendre(n, yt)
        };
        let (nodes, weights) = crate::quad::gauss_legendre(96);
        let mid = g.sigma;
        let half = g.delta;
        for m in 0..3 {
            for n in 0..3 {
                let mut acc = 0.0;
                for (ty, wy) in nodes.iter().zip(&weights) {
                    let y = mid + half * ty;
                    let mut inner = 0.0;
                    for (tp, wp) in nodes.iter().zip(&weights) {
                        let yp = mid + half * tp;
                        inner += wp * half * p_basis(m, yp) * kernel(yp, y);
                    }
                    acc += wy * half * p_basis(n, y) * inner;
                }
                let got = sec.entry(m, n).to_f64();
                assert!(
                    (acc - got).abs() < 1e-8 * got.abs().max(1.0),
                    "K[{m}][{n}]: quadrature {acc} vs moments {got}"
                );
            }
        }
    }

    #[test]
    fn kernel_expansion_at_ytilde_one_sums_geometric_series() {
        let delta = 1.0f64;
        let xt = 1.3;
        let rho = elliptical_radius(xt).unwrap();
        let closed = (2.0 / delta).sqrt() * rho.sqrt() / (1.0 - rho);
        let long = legendre_kernel_expansion(delta, xt, 1.0, 200).unwrap();
        assert!((long.partial_sum - closed).abs() < 1e-12 * closed);
        // and the direct kernel value agrees there too
        assert!((long.direct - closed).abs() < 1e-12 * closed);
    }

    #[test]
    fn kernel_expansion_matches_direct_value() {
        let e = legendre_kernel_expansion(1.0, 1.25, 0.3, 60).unwrap();
        assert!(
            (e.partial_sum - e.direct).abs() < 1e-12,
            "partial {} vs direct {}",
            e.partial_sum,
            e.direct
        );
        assert!(!e.slow_convergence);
    }

    #[test]
    fn kernel_expansion_tail_shrinks_geometrically() {
        let (delta, xt, yt) = (1.0, 1.4, -0.2);
        let rho = elliptical_radius(xt).unwrap();
        let e10 = legendre_kernel_expansion(delta, xt, yt, 10).unwrap();
        let e20 = legendre_kernel_expansion(delta, xt, yt, 20).unwrap();
        let err10 = (e10.partial_sum - e10.direct).abs();
        let err20 = (e20.partial_sum - e20.direct).abs();
        assert!(err10 < e10.tail_bound);
        assert!(err20 < e20.tail_bound);
        let expected_factor = rho.powi(10);
        assert!(
            err20 < 10.0 * expected_factor * err10,
            "tail did not shrink geometrically: {err10} -> {err20}"
        );
        assert!(err20 > 0.01 * expected_factor * err10);
    }

    #[test]
    fn kernel_expansion_flags_slow_convergence() {
        let e = legendre_kernel_expansion(1.0, 1.0, 0.5, 30).unwrap();
        assert!(e.slow_convergence);
        assert!(e.tail_bound.is_infinite());
        assert!(legendre_kernel_expansion(1.0, 0.9, 0.5, 10).is_err());
        assert!(legendre_kernel_expansion(1.0, 1.5, 1.5, 10).is_err());
    }
}
