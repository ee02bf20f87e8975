//! Traveltimes and offsets of reflected and diving rays, the slowness
//! parametrization of traveltime branches, and the cross-check of the
//! depth-domain ray integrals against their q-domain (slowness
//! distribution) form.
//!
//! Depth-domain integrals use the vertical velocity
//! v(z, p) = c(z) sqrt(1 - p^2 c^2(z)). For diving rays the integrable
//! 1/sqrt singularity at the turning depth is removed by the
//! substitution z = Z(p) - u^2, with the cancellation-prone factor
//! 1 - p^2 c^2 rebuilt from the exact Taylor expansion of the local
//! cubic piece around Z(p).

use crate::error::{Error, Result};
use crate::interp::CubicHermite;
use crate::quad;
use crate::velocity_model::{sdf_density_at, VelocityProfile};

const QUAD_REL_TOL: f64 = 1e-10;

/// Which wave type a ray solution describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayKind {
    Diving,
    Reflected,
}

impl std::fmt::Display for RayKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RayKind::Diving => write!(f, "diving"),
            RayKind::Reflected => write!(f, "reflected"),
        }
    }
}

/// A single ray traced through a profile.
#[derive(Debug, Clone)]
pub struct RaySolution {
    pub p: f64,
    pub kind: RayKind,
    pub traveltime: f64,
    pub offset: f64,
    /// Turning depth Z(p); present only for diving rays.
    pub turning_depth: Option<f64>,
    /// Takeoff angle with cos(theta_0) = p c_0.
    pub takeoff_angle: f64,
}

fn check_reflected_pre(profile: &VelocityProfile, p: f64) -> Result<()> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!(
            "slowness p = {p} must be finite and >= 0"
        )));
    }
    let (p_min, _) = profile.slowness_extrema();
    if p >= p_min {
        return Err(Error::NotTransmitted { p, p_min });
    }
    Ok(())
}

/// Two-way traveltime of the ray reflecting at z = h.
pub fn traveltime_reflected(profile: &VelocityProfile, p: f64) -> Result<f64> {
    check_reflected_pre(profile, p)?;
    quad::adaptive(
        |z| {
            let c = profile.speed_clamped(z);
            2.0 / (c * (1.0 - p * p * c * c).sqrt())
        },
        0.0,
        profile.depth_extent(),
        QUAD_REL_TOL,
        1e-300,
    )
}

/// Horizontal offset of the ray reflecting at z = h.
pub fn offset_reflected(profile: &VelocityProfile, p: f64) -> Result<f64> {
    check_reflected_pre(profile, p)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    quad::adaptive(
        |z| {
            let c = profile.speed_clamped(z);
            2.0 * p * c / (1.0 - p * p * c * c).sqrt()
        },
        0.0,
        profile.depth_extent(),
        QUAD_REL_TOL,
        1e-300,
    )
}

/// Full reflected-ray solution.
pub fn reflected_solution(profile: &VelocityProfile, p: f64) -> Result<RaySolution> {
    let traveltime = traveltime_reflected(profile, p)?;
    let offset = offset_reflected(profile, p)?;
    Ok(RaySolution {
        p,
        kind: RayKind::Reflected,
        traveltime,
        offset,
        turning_depth: None,
        takeoff_angle: (p * profile.surface_speed()).min(1.0).acos(),
    })
}

/// Stable evaluator of w(z) = 1 - p^2 c^2(z) near the turning depth.
///
/// Within the cubic piece containing Z the difference c(Z) - c(z) is
/// reconstructed from the exact Taylor coefficients at Z, avoiding the
/// catastrophic cancellation of forming 1 - p^2 c^2 directly.
struct TurningEvaluator<'a> {
    profile: &'a VelocityProfile,
    p: f64,
    z_turn: f64,
    /// residual 1 - p^2 c(Z)^2 left by the root solve
    residual: f64,
    /// derivatives of c at Z: (c', c'', c''')
    deriv: (f64, f64, f64),
    /// lower depth bound of the cubic piece containing Z
    piece_floor: f64,
    c_turn: f64,
}

impl<'a> TurningEvaluator<'a> {
    fn new(profile: &'a VelocityProfile, p: f64, z_turn: f64) -> Self {
        let spline = profile.spline();
        let knots = spline.knots();
        let seg = knots
            .partition_point(|&v| v <= z_turn)
            .saturating_sub(1)
            .min(spline.segment_count() - 1);
        let [c0, c1, c2, c3] = spline.segment_coefficients(seg);
        let u = z_turn - knots[seg];
        let c_turn = c0 + u * (c1 + u * (c2 + u * c3));
        let d1 = c1 + u * (2.0 * c2 + 3.0 * c3 * u);
        let d2 = 2.0 * c2 + 6.0 * c3 * u;
        let d3 = 6.0 * c3;
        TurningEvaluator {
            profile,
            p,
            z_turn,
            residual: 1.0 - p * p * c_turn * c_turn,
            deriv: (d1, d2, d3),
            piece_floor: knots[seg],
            c_turn,
        }
    }

    /// w = 1 - p^2 c^2 at depth z = Z - t, t >= 0.
    fn w_at(&self, t: f64) -> f64 {
        let z = self.z_turn - t;
        if z >= self.piece_floor {
            // exact within the cubic piece
            let (d1, d2, d3) = self.deriv;
            let dc = t * (d1 - t * (0.5 * d2 - d3 * t / 6.0));
            let csum = 2.0 * self.c_turn - dc;
            let w = self.p * self.p * dc * csum + self.residual;
            if w > 0.0 {
                w
            } else {
                (self.p * self.p * dc * csum).max(0.0)
            }
        } else {
            let c = self.profile.speed_clamped(z);
            1.0 - self.p * self.p * c * c
        }
    }
}

/// Diving-ray solution (traveltime, offset, turning depth). The ray must
/// actually turn: c(0) < 1/p and c reaches 1/p inside (0, h].
pub fn diving_solution(profile: &VelocityProfile, p: f64) -> Result<RaySolution> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::Domain(format!(
            "slowness p = {p} must be finite and > 0"
        )));
    }
    if profile.surface_speed() * p >= 1.0 {
        return Err(Error::NoDivingRay { p });
    }
    let z_turn = profile.turning_depth(p).ok_or(Error::NoDivingRay { p })?;
    if z_turn <= 0.0 {
        return Err(Error::NoDivingRay { p });
    }
    let eval = TurningEvaluator::new(profile, p, z_turn);
    let u_max = z_turn.sqrt();
    let traveltime = quad::adaptive(
        |u| {
            let t = u * u;
            let c = profile.speed_clamped(z_turn - t);
            4.0 * u / (c * eval.w_at(t).sqrt())
        },
        0.0,
        u_max,
        QUAD_REL_TOL,
        1e-300,
    )?;
    let offset = quad::adaptive(
        |u| {
            let t = u * u;
            let c = profile.speed_clamped(z_turn - t);
            4.0 * p * u * c / eval.w_at(t).sqrt()
        },
        0.0,
        u_max,
        QUAD_REL_TOL,
        1e-300,
    )?;
    Ok(RaySolution {
        p,
        kind: RayKind::Diving,
        traveltime,
        offset,
        turning_depth: Some(z_turn),
        takeoff_angle: (p * profile.surface_speed()).min(1.0).acos(),
    })
}

/// Traveltime of a diving ray.
pub fn traveltime_diving(profile: &VelocityProfile, p: f64) -> Result<RaySolution> {
    diving_solution(profile, p)
}

/// Offset of a diving ray.
pub fn offset_diving(profile: &VelocityProfile, p: f64) -> Result<RaySolution> {
    diving_solution(profile, p)
}

/// One point of a traveltime branch re-parametrized by slowness.
#[derive(Debug, Clone, Copy)]
pub struct SlownessPoint {
    pub p: f64,
    pub offset: f64,
    pub traveltime: f64,
}

/// Convert a single-valued traveltime branch T(x) into the pair
/// (x(p), tau(p)) with p = T'(x), reported on the caller's p grid where
/// that grid lies inside the attained slowness range.
pub fn traveltime_curve_to_slowness(
    x: &[f64],
    t: &[f64],
    p_grid: &[f64],
) -> Result<Vec<SlownessPoint>> {
    if x.len() < 3 {
        return Err(Error::Domain("need at least three samples of T(x)".into()));
    }
    let spline = CubicHermite::pchip(x.to_vec(), t.to_vec())?;
    let p_samples: Vec<f64> = x.iter().map(|&xi| spline.derivative(xi)).collect();
    let increasing = p_samples[1] > p_samples[0];
    for i in 1..p_samples.len() {
        let ok = if increasing {
            p_samples[i] > p_samples[i - 1]
        } else {
            p_samples[i] < p_samples[i - 1]
        };
        if !ok {
            return Err(Error::BranchNotMonotone { index: i });
        }
    }
    // invert p(x): build x(p) on ascending p
    let (mut ps, mut xs) = (p_samples.clone(), x.to_vec());
    if !increasing {
        ps.reverse();
        xs.reverse();
    }
    let inverse = CubicHermite::pchip(ps.clone(), xs)?;
    let (p_lo, p_hi) = (ps[0], *ps.last().unwrap());
    let mut out = Vec::new();
    for &p in p_grid {
        if p < p_lo || p > p_hi {
            continue;
        }
        let xi = inverse.value(p);
        out.push(SlownessPoint {
            p,
            offset: xi,
            traveltime: spline.value(xi),
        });
    }
    Ok(out)
}

/// Relative residuals between the depth-domain ray integrals and their
/// q-domain (slowness distribution) form.
#[derive(Debug, Clone, Copy)]
pub struct QIntegralResidual {
    pub traveltime: f64,
    pub offset: f64,
}

/// Evaluate tau(p) and x(p) through the slowness distribution function
/// and compare with the depth-domain quadratures.
///
/// With F the depth-per-slowness density and atoms for exactly constant
/// layers, the q-domain forms are
/// tau = 2 int q^2 F(q) / sqrt(q^2 - p^2) dq and
/// x   = 2 p int F(q) / sqrt(q^2 - p^2) dq.
pub fn q_integral_check(
    profile: &VelocityProfile,
    p: f64,
    kind: RayKind,
) -> Result<QIntegralResidual> {
    let (tau_z, x_z, z_limit) = match kind {
        RayKind::Reflected => {
            let tau = traveltime_reflected(profile, p)?;
            let x = offset_reflected(profile, p)?;
            (tau, x, profile.depth_extent())
        }
        RayKind::Diving => {
            let sol = diving_solution(profile, p)?;
            (sol.traveltime, sol.offset, sol.turning_depth.unwrap())
        }
    };

    // atoms from exactly constant layers inside [0, z_limit]
    let mut tau_q = 0.0;
    let mut x_q = 0.0;
    for (za, zb, c) in profile.constant_runs() {
        let mass = (zb.min(z_limit) - za).max(0.0);
        if mass == 0.0 {
            continue;
        }
        let q = 1.0 / c;
        let root = (q * q - p * p).sqrt();
        tau_q += 2.0 * q * q * mass / root;
        x_q += 2.0 * p * mass / root;
    }

    let (c_lo, c_hi) = profile.speed_extrema_to(z_limit);
    let (q_lo, q_hi) = (1.0 / c_hi, 1.0 / c_lo);
    let q_start = match kind {
        RayKind::Reflected => q_lo,
        // for diving rays the weight is singular at q = p = q_lo;
        // substitute u^2 = q^2 - p^2
        RayKind::Diving => q_lo.max(p),
    };
    if q_hi > q_start {
        match kind {
            RayKind::Diving => {
                let u_max = (q_hi * q_hi - p * p).max(0.0).sqrt();
                tau_q += quad::adaptive(
                    |u| {
                        let q = (p * p + u * u).sqrt();
                        let f = finite_density(profile, q, z_limit);
                        2.0 * q * f
                    },
                    0.0,
                    u_max,
                    1e-8,
                    1e-12,
                )?;
                x_q += quad::adaptive(
                    |u| {
                        let q = (p * p + u * u).sqrt();
                        let f = finite_density(profile, q, z_limit);
                        2.0 * p * f / q
                    },
                    0.0,
                    u_max,
                    1e-8,
                    1e-12,
                )?;
            }
            RayKind::Reflected => {
                // q = q_hi - u^2 removes the density singularity that an
                // interior velocity minimum puts at the upper endpoint
                let u_max = (q_hi - q_start).sqrt();
                tau_q += quad::adaptive(
                    |u| {
                        let q = q_hi - u * u;
                        let f = finite_density(profile, q, z_limit);
                        4.0 * u * q * q * f / (q * q - p * p).sqrt()
                    },
                    0.0,
                    u_max,
                    1e-8,
                    1e-12,
                )?;
                x_q += quad::adaptive(
                    |u| {
                        let q = q_hi - u * u;
                        let f = finite_density(profile, q, z_limit);
                        4.0 * u * p * f / (q * q - p * p).sqrt()
                    },
                    0.0,
                    u_max,
                    1e-8,
                    1e-12,
                )?;
            }
        }
    }

    Ok(QIntegralResidual {
        traveltime: (tau_q - tau_z).abs() / tau_z.abs(),
        offset: if x_z == 0.0 {
            (x_q - x_z).abs()
        } else {
            (x_q - x_z).abs() / x_z.abs()
        },
    })
}

/// Density with concentration points masked off (they are handled as
/// atoms by the caller; isolated infinities at critical slownesses are
/// integrable and never hit by interior quadrature nodes).
fn finite_density(profile: &VelocityProfile, q: f64, z_limit: f64) -> f64 {
    let f = sdf_density_at(profile, q, z_limit);
    if f.is_finite() {
        f
    } else {
        0.0
    }
}
