//! The Abel operator behind diving-ray traveltimes, its explicit
//! Herglotz-Wiechert inverse, and its singular system.
//!
//! In squared-slowness variables x = p^2, y = q^2 the diving-ray
//! traveltime relation is g(x) = A f(x) = int_x^inf f(y) / sqrt(y - x) dy
//! with g(x) = tau(sqrt(x)) and f(y) = sqrt(y) F(sqrt(y)) for the
//! depth-per-slowness density F. A is a half-order integration: A^2 has
//! the constant kernel pi, which yields both the inversion formula
//! A^{-1} = -(1/pi) A d/dx and the Laplace symbol sqrt(-pi/s).

use crate::error::{Error, Result};
use crate::interp::CubicHermite;
use crate::quad;
use crate::velocity_model::VelocityProfile;

/// Grids and data of an Abel-transform pair in squared-slowness
/// variables.
#[derive(Debug, Clone)]
pub struct AbelFunctionPair {
    /// x = p^2 grid (sorted ascending) with g(x) = tau(sqrt(x)).
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    /// y = q^2 grid (sorted ascending) with f(y) = sqrt(y) F(sqrt(y)).
    pub y: Vec<f64>,
    pub f: Vec<f64>,
}

/// Forward Abel transform g(x) = int_x^{support_end} f(y)/sqrt(y-x) dy.
///
/// The square-root singularity is removed by y = x + u^2; `f` must be
/// finite on [x, support_end].
pub fn abel_forward<F: Fn(f64) -> f64>(
    f: F,
    support_end: f64,
    x: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(support_end.is_finite() && x.is_finite()) {
        return Err(Error::Domain("abel_forward needs finite bounds".into()));
    }
    if x >= support_end {
        return Ok(0.0);
    }
    let u_max = (support_end - x).sqrt();
    quad::adaptive(|u| 2.0 * f(x + u * u), 0.0, u_max, rel_tol, 1e-300)
}

/// Numerically evaluate int_{x0}^{y0} dz / sqrt((z - x0)(y0 - z)), which
/// equals pi for every x0 < y0. Both endpoint singularities are removed
/// by z = midpoint + radius sin(theta).
pub fn abel_square_kernel_check(x0: f64, y0: f64) -> Result<f64> {
    if !(x0 < y0) {
        return Err(Error::Domain(format!("need x0 < y0, got ({x0}, {y0})")));
    }
    let mid = 0.5 * (x0 + y0);
    let radius = 0.5 * (y0 - x0);
    quad::adaptive(
        |theta| {
            let z = mid + radius * theta.sin();
            radius * theta.cos() / ((z - x0) * (y0 - z)).sqrt()
        },
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        1e-12,
        1e-300,
    )
}

/// Chebyshev polynomial of the second kind U_n(x).
pub fn chebyshev_u(n: usize, x: f64) -> f64 {
    let mut u0 = 1.0;
    if n == 0 {
        return u0;
    }
    let mut u1 = 2.0 * x;
    for _ in 1..n {
        let u2 = 2.0 * x * u1 - u0;
        u0 = u1;
        u1 = u2;
    }
    u1
}

/// Jacobi polynomial P_n^{(0,1)}(x) by its three-term recurrence.
pub fn jacobi_p01(n: usize, x: f64) -> f64 {
    let mut p0 = 1.0;
    if n == 0 {
        return p0;
    }
    let mut p1 = (3.0 * x - 1.0) / 2.0;
    for k in 2..=n {
        let kf = k as f64;
        // (k+1)(2k-1) P_k = [(2k+1)(2k-1)x - 1] P_{k-1} - (k-1)(2k+1) P_{k-2}
        let p2 = (((2.0 * kf + 1.0) * (2.0 * kf - 1.0) * x - 1.0) * p1
            - (kf - 1.0) * (2.0 * kf + 1.0) * p0)
            / ((kf + 1.0) * (2.0 * kf - 1.0));
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// One triple of the singular system of A on [-1, 1].
#[derive(Debug, Clone, Copy)]
pub struct SingularTriple {
    pub n: usize,
    /// sigma_n = ((n+1)/2)^{-1/2}.
    pub sigma: f64,
}

impl SingularTriple {
    /// Right singular function v_n(x) = ((n+1)/2)^{1/2} P_n^{(0,1)}(x),
    /// orthonormal under the weight (1 + x).
    pub fn right(&self, x: f64) -> f64 {
        ((self.n as f64 + 1.0) / 2.0).sqrt() * jacobi_p01(self.n, x)
    }

    /// Left singular function u_n(x) = (1 - x)^{1/2} U_n(x), orthonormal
    /// under the weight (2/pi) ((1+x)/(1-x))^{1/2}.
    pub fn left(&self, x: f64) -> f64 {
        (1.0 - x).max(0.0).sqrt() * chebyshev_u(self.n, x)
    }
}

/// The singular triples (sigma_n, u_n, v_n) for n = 0..=n_max.
pub fn js_singular_system(n_max: usize) -> Vec<SingularTriple> {
    (0..=n_max)
        .map(|n| SingularTriple {
            n,
            sigma: ((n as f64 + 1.0) / 2.0).powf(-0.5),
        })
        .collect()
}

/// Inner product with weight (1 + x) on [-1, 1] (the "right" product).
pub fn inner_product_right<F, G>(f: F, g: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let (nodes, weights) = quad::gauss_legendre(128);
    nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| w * f(x) * g(x) * (1.0 + x))
        .sum()
}

/// Inner product with weight (2/pi)((1+x)/(1-x))^{1/2} on [-1, 1] (the
/// "left" product). x = cos(phi) turns the weight into the smooth
/// (2/pi)(1 + cos phi), so a plain Gauss rule converges spectrally.
pub fn inner_product_left<F, G>(f: F, g: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let (nodes, weights) = quad::gauss_legendre(160);
    let half = 0.5 * std::f64::consts::PI;
    nodes
        .iter()
        .zip(&weights)
        .map(|(&t, &w)| {
            let phi = half + half * t;
            let x = phi.cos();
            half * w * f(x) * g(x) * (2.0 / std::f64::consts::PI) * (1.0 + x)
        })
        .sum()
}

/// Singular values of the Galerkin discretization of A between the
/// weighted spaces spanned by the first `n_basis` left and right
/// singular-function bases, computed by quadrature. Returned descending.
pub fn js_discretized_singular_values(n_basis: usize) -> Result<Vec<f64>> {
    let triples = js_singular_system(n_basis - 1);
    // columns: A v_n evaluated by the substitution quadrature; rows:
    // left-product against u_m
    let (gl_nodes, gl_weights) = quad::gauss_legendre(96);
    let apply_a = |vn: &SingularTriple, x: f64| -> f64 {
        // int_x^1 v_n(y) / sqrt(y - x) dy, y = x + u^2
        let u_max = (1.0 - x).max(0.0).sqrt();
        let mid = 0.5 * u_max;
        gl_nodes
            .iter()
            .zip(&gl_weights)
            .map(|(&t, &w)| {
                let u = mid + mid * t;
                w * 2.0 * vn.right(x + u * u)
            })
            .sum::<f64>()
            * mid
    };
    let mut mat = vec![vec![0.0; n_basis]; n_basis];
    let (phi_nodes, phi_weights) = quad::gauss_legendre(192);
    let half = 0.5 * std::f64::consts::PI;
    for (kn, (&t, &w)) in phi_nodes.iter().zip(&phi_weights).enumerate() {
        let _ = kn;
        let phi = half + half * t;
        let x = phi.cos();
        let col_vals: Vec<f64> = triples.iter().map(|v| apply_a(v, x)).collect();
        let weight = half * w * (2.0 / std::f64::consts::PI) * (1.0 + x);
        for (m, tri) in triples.iter().enumerate() {
            let um = tri.left(x);
            for n in 0..n_basis {
                mat[m][n] += weight * um * col_vals[n];
            }
        }
    }
    // singular values via the Gram matrix at extended precision
    let prec = 192;
    let mut b = crate::extprec::MpMat::zeros(n_basis, n_basis, prec);
    for i in 0..n_basis {
        for j in 0..n_basis {
            b.set(i, j, crate::extprec::mpf(prec, mat[i][j]));
        }
    }
    let eig = crate::extprec::jacobi_eigenvalues(&b.gram())?;
    Ok(eig.iter().map(|l| l.to_f64().max(0.0).sqrt()).collect())
}

/// Options for the Herglotz-Wiechert inversion.
#[derive(Debug, Clone, Copy)]
pub struct HerglotzOptions {
    /// Number of slowness nodes the density is tabulated on.
    pub density_samples: usize,
    /// Quadrature tolerance for the depth integrals.
    pub tolerance: f64,
}

impl Default for HerglotzOptions {
    fn default() -> Self {
        HerglotzOptions {
            density_samples: 600,
            tolerance: 1e-8,
        }
    }
}

/// Recover a monotone-increasing velocity profile from diving-ray
/// traveltime samples tau(p).
///
/// Stages: monotone spline of tau(p); the depth-per-slowness density
/// F(q) = -(1/(pi q)) int_q^{p0} tau'(p) (p^2 - q^2)^{-1/2} dp with the
/// singular integral regularized by p = q cosh t; the depth function
/// Z(q) = int_q^{p0} F(s) ds; and c(z) as the inverse of Z.
pub fn herglotz_invert(
    p: &[f64],
    tau: &[f64],
    options: HerglotzOptions,
) -> Result<VelocityProfile> {
    if p.len() != tau.len() || p.len() < 4 {
        return Err(Error::Domain(
            "need at least four (p, tau) samples of equal length".into(),
        ));
    }
    for i in 1..p.len() {
        if !(p[i] > p[i - 1]) {
            return Err(Error::Domain(
                "slowness samples must be strictly ascending".into(),
            ));
        }
        if !(tau[i] < tau[i - 1]) {
            return Err(Error::NonMonotoneData(format!(
                "tau must strictly decrease with p; violation at index {i}"
            )));
        }
    }
    let spline = CubicHermite::pchip(p.to_vec(), tau.to_vec())?;
    let p0 = *p.last().unwrap();
    let p_lo = p[0];
    let tau_slope = |pp: f64| -> f64 {
        if pp >= p0 {
            0.0
        } else {
            spline.derivative(pp).min(0.0)
        }
    };
    // density F(q) = -(1/(pi q)) int_0^{acosh(p0/q)} tau'(q cosh t) dt
    let density_at = |q: f64| -> Result<f64> {
        let t_max = (p0 / q).acosh();
        let val = quad::adaptive(
            |t| tau_slope(q * t.cosh()),
            0.0,
            t_max,
            options.tolerance,
            1e-14,
        )?;
        Ok(-val / (std::f64::consts::PI * q))
    };
    // tabulate F on a grid clustered toward p0 where the data run out
    let m = options.density_samples.max(32);
    let mut q_grid = Vec::with_capacity(m);
    let mut f_grid = Vec::with_capacity(m);
    for i in 0..m {
        let s = i as f64 / (m - 1) as f64;
        // quadratic clustering toward the upper end
        let q = p_lo + (p0 - p_lo) * (1.0 - (1.0 - s) * (1.0 - s)).max(s * 1e-3);
        let q = q.min(p0 * (1.0 - 1e-12));
        q_grid.push(q);
        f_grid.push(density_at(q)?);
    }
    q_grid.push(p0);
    f_grid.push(0.0);
    dedup_sorted(&mut q_grid, &mut f_grid);
    let density = CubicHermite::pchip(q_grid.clone(), f_grid)?;
    // depth function Z(q) = int_q^{p0} F(s) ds, accumulated from p0 down
    let mut depths = vec![0.0f64; q_grid.len()];
    for i in (0..q_grid.len() - 1).rev() {
        let seg = quad::adaptive(
            |s| density.value(s),
            q_grid[i],
            q_grid[i + 1],
            options.tolerance,
            1e-14,
        )?;
        depths[i] = depths[i + 1] + seg;
    }
    // c(z) knots: z = Z(q), c = 1/q, ordered by increasing depth
    let mut knots: Vec<(f64, f64)> = Vec::with_capacity(q_grid.len());
    for i in (0..q_grid.len()).rev() {
        let z = depths[i];
        let c = 1.0 / q_grid[i];
        if let Some(&(z_prev, _)) = knots.last() {
            if !(z > z_prev + 1e-14) {
                continue;
            }
        }
        knots.push((z, c));
    }
    if let Some(first) = knots.first_mut() {
        first.0 = 0.0;
    }
    if knots.len() < 2 {
        return Err(Error::NonMonotoneData(
            "recovered depth function is degenerate".into(),
        ));
    }
    VelocityProfile::from_knots(&knots)
}

fn dedup_sorted(x: &mut Vec<f64>, y: &mut Vec<f64>) {
    let mut i = 1;
    while i < x.len() {
        if x[i] <= x[i - 1] {
            x.remove(i);
            y.remove(i);
        } else {
            i += 1;
        }
    }
}

/// Build the Abel pair of a diving-ray dataset for diagnostics: the
/// traveltime side on the x = p^2 grid and the density side on y = q^2.
pub fn abel_pair_from_profile(
    profile: &VelocityProfile,
    p_grid: &[f64],
) -> Result<AbelFunctionPair> {
    let mut x = Vec::with_capacity(p_grid.len());
    let mut g = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let sol = crate::ray_kinematics::diving_solution(profile, p)?;
        x.push(p * p);
        g.push(sol.traveltime);
    }
    let z_limit = profile.depth_extent();
    let y: Vec<f64> = p_grid.iter().map(|&p| p * p).collect();
    let f: Vec<f64> = p_grid
        .iter()
        .map(|&q| q * crate::velocity_model::sdf_density_at(profile, q, z_limit))
        .collect();
    Ok(AbelFunctionPair { x, g, y, f })
}
