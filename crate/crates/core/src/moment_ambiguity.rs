//! Small-slowness asymptotics: the binomial traveltime expansion in odd
//! speed moments, construction of kinematically near-equivalent profile
//! pairs, and the per-moment tolerance calculus of the ambiguity region.

use crate::error::{Error, Result};
use crate::quad;
use crate::velocity_model::VelocityProfile;

/// Odd speed moments m_n = int_0^h c^{2n-1}(z) dz, n = 0..degree-1.
#[derive(Debug, Clone)]
pub struct MomentVector {
    pub degree: usize,
    pub values: Vec<f64>,
    /// Surface speed c_0, carried for the dimensionless remainder.
    pub reference_speed: f64,
}

/// Generalized binomial coefficient (-1/2 choose n).
pub fn binomial_half(n: usize) -> f64 {
    // (-1/2 choose n) = (-1)^n (2n)! / (4^n (n!)^2)
    let mut magnitude = 1.0;
    for k in 1..=n {
        magnitude *= (2.0 * k as f64 - 1.0) / (2.0 * k as f64);
    }
    if n % 2 == 0 {
        magnitude
    } else {
        -magnitude
    }
}

/// Compute the first `degree` odd moments of the profile by adaptive
/// quadrature at 1e-12 relative tolerance.
pub fn odd_moments(profile: &VelocityProfile, degree: usize) -> Result<MomentVector> {
    if degree == 0 {
        return Err(Error::Domain("moment degree must be at least 1".into()));
    }
    let h = profile.depth_extent();
    let mut values = Vec::with_capacity(degree);
    for n in 0..degree {
        let power = 2 * n as i32 - 1;
        let v = quad::adaptive(
            |z| profile.speed_clamped(z).powi(power),
            0.0,
            h,
            1e-12,
            1e-16,
        )?;
        values.push(v);
    }
    Ok(MomentVector {
        degree,
        values,
        reference_speed: profile.surface_speed(),
    })
}

/// Truncated one-way vertical-incidence expansion of the reflected
/// traveltime and its remainder bound.
#[derive(Debug, Clone, Copy)]
pub struct TaylorTraveltime {
    pub value: f64,
    pub remainder_bound: f64,
    pub degree: usize,
}

/// One-way traveltime to depth h expanded in powers of p^2:
/// sum_{n<d} (-1/2 choose n)(-1)^n p^{2n} m_n, with remainder bound
/// |(-1/2 choose d)| (p max c)^{2d} h / min c.
pub fn traveltime_taylor(
    profile: &VelocityProfile,
    p: f64,
    degree: usize,
) -> Result<TaylorTraveltime> {
    if degree == 0 {
        return Err(Error::Domain("expansion degree must be at least 1".into()));
    }
    let (c_min, c_max) = profile.speed_extrema();
    let x = p * c_max;
    if x >= 1.0 {
        return Err(Error::ExpansionInvalid { p_cmax: x });
    }
    let moments = odd_moments(profile, degree)?;
    let mut value = 0.0;
    let mut p2n = 1.0;
    for n in 0..degree {
        let coeff = binomial_half(n) * if n % 2 == 0 { 1.0 } else { -1.0 };
        value += coeff * p2n * moments.values[n];
        p2n *= p * p;
    }
    let remainder_bound = if p == 0.0 {
        0.0
    } else {
        binomial_half(degree).abs() * x.powi(2 * degree as i32) * profile.depth_extent() / c_min
    };
    Ok(TaylorTraveltime {
        value,
        remainder_bound,
        degree,
    })
}

/// A family of smooth perturbation shapes vanishing at z = 0 and z = h.
pub trait PerturbationBasis {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn eval(&self, k: usize, z: f64) -> f64;
    fn derivative(&self, k: usize, z: f64) -> f64;
}

/// Default basis: low-order shifted Legendre polynomials windowed by
/// (z/h)(1 - z/h), so perturbations carry only low wavenumbers.
#[derive(Debug, Clone)]
pub struct PolyBumpBasis {
    pub h: f64,
    pub count: usize,
}

impl PerturbationBasis for PolyBumpBasis {
    fn len(&self) -> usize {
        self.count
    }

    fn eval(&self, k: usize, z: f64) -> f64 {
        let t = z / self.h;
        let window = t * (1.0 - t);
        window * quad::legendre(k, 2.0 * t - 1.0)
    }

    fn derivative(&self, k: usize, z: f64) -> f64 {
        let t = z / self.h;
        let window = t * (1.0 - t);
        let dwindow = (1.0 - 2.0 * t) / self.h;
        let (pk, dpk) = quad::legendre_with_derivative(k, 2.0 * t - 1.0);
        dwindow * pk + window * dpk * 2.0 / self.h
    }
}

/// Options for the equivalent-profile construction.
#[derive(Debug, Clone, Copy)]
pub struct EquivalentProfileOptions {
    /// Required sup-norm separation from the base profile.
    pub min_separation: f64,
    /// Knot count of the returned profile.
    pub knots: usize,
}

impl Default for EquivalentProfileOptions {
    fn default() -> Self {
        EquivalentProfileOptions {
            min_separation: 0.01,
            knots: 2001,
        }
    }
}

/// Find a distinct profile whose first `degree` odd moments match the
/// base profile's to 1e-10 relative.
///
/// The perturbation is c_2 = c_1 + sum_k a_k phi_k over `degree + 1`
/// basis members; the last coefficient parametrizes the one-dimensional
/// solution family and is raised until the requested separation is
/// reached, with the remaining coefficients solved by damped Newton.
pub fn construct_equivalent_profile(
    base: &VelocityProfile,
    degree: usize,
    basis: &dyn PerturbationBasis,
    options: EquivalentProfileOptions,
) -> Result<VelocityProfile> {
    if degree == 0 {
        return Err(Error::Domain("degree must be at least 1".into()));
    }
    if basis.len() < degree + 1 {
        return Err(Error::Domain(format!(
            "perturbation basis needs at least {} members, has {}",
            degree + 1,
            basis.len()
        )));
    }
    let h = base.depth_extent();
    let target = odd_moments(base, degree)?.values;
    // fixed Gauss rule per knot interval: exact for the polynomial parts
    // and spectrally accurate for the c^{-1} moment
    let (gl_nodes, gl_weights) = quad::gauss_legendre(24);
    let knot_depths: Vec<f64> = base.knot_depths().to_vec();
    let speed_at = |coeffs: &[f64], z: f64| -> f64 {
        let mut c = base.speed_clamped(z);
        for (k, a) in coeffs.iter().enumerate() {
            c += a * basis.eval(k, z);
        }
        c
    };
    let moments_of = |coeffs: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; degree];
        for w in knot_depths.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            for (t, gw) in gl_nodes.iter().zip(&gl_weights) {
                let z = mid + half * t;
                let c = speed_at(coeffs, z);
                let weight = gw * half;
                let mut cp = 1.0 / c; // c^{2n-1} starting at n = 0
                for slot in out.iter_mut() {
                    *slot += weight * cp;
                    cp *= c * c;
                }
            }
        }
        out
    };
    // analytic Jacobian d m_n / d a_k = (2n-1) int c^{2n-2} phi_k dz
    let jacobian = |coeffs: &[f64]| -> Vec<Vec<f64>> {
        let mut jac = vec![vec![0.0; degree]; degree];
        for w in knot_depths.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let half = 0.5 * (w[1] - w[0]);
            for (t, gw) in gl_nodes.iter().zip(&gl_weights) {
                let z = mid + half * t;
                let c = speed_at(coeffs, z);
                let weight = gw * half;
                for (k, row) in jac.iter_mut().enumerate() {
                    let phi = basis.eval(k, z);
                    let mut cp = 1.0 / (c * c); // c^{2n-2} at n = 0
                    for (n, slot) in row.iter_mut().enumerate() {
                        *slot += weight * (2.0 * n as f64 - 1.0) * cp * phi;
                        cp *= c * c;
                    }
                }
            }
        }
        // jac[k][n] built above; transpose to [n][k]
        let mut out = vec![vec![0.0; degree]; degree];
        for k in 0..degree {
            for n in 0..degree {
                out[n][k] = jac[k][n];
            }
        }
        out
    };

    let sup_diff = |coeffs: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..=400 {
            let z = h * i as f64 / 400.0;
            worst = worst.max((speed_at(coeffs, z) - base.speed_clamped(z)).abs());
        }
        worst
    };

    let moment_scale: Vec<f64> = target.iter().map(|m| m.abs().max(1e-300)).collect();
    let mut family_amplitude = options.min_separation;
    for _attempt in 0..40 {
        // coefficients a_0..a_{degree-1} unknown, a_degree fixed
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = family_amplitude;
        let mut converged = false;
        for _iter in 0..100 {
            let m = moments_of(&coeffs);
            let residual: Vec<f64> = (0..degree).map(|n| m[n] - target[n]).collect();
            let worst: f64 = residual
                .iter()
                .zip(&moment_scale)
                .map(|(r, s)| (r / s).abs())
                .fold(0.0, f64::max);
            if worst < 1e-11 {
                converged = true;
                break;
            }
            let jac = jacobian(&coeffs);
            let step = solve_dense(&jac, &residual)?;
            // damped update with backtracking
            let mut factor = 1.0;
            let mut accepted = false;
            for _bt in 0..30 {
                let mut trial = coeffs.clone();
                for k in 0..degree {
                    trial[k] -= factor * step[k];
                }
                // require positivity of the trial speed
                let positive = (0..=200).all(|i| speed_at(&trial, h * i as f64 / 200.0) > 0.0);
                if positive {
                    let mt = moments_of(&trial);
                    let wt: f64 = (0..degree)
                        .map(|n| ((mt[n] - target[n]) / moment_scale[n]).abs())
                        .fold(0.0, f64::max);
                    if wt < worst {
                        coeffs = trial;
                        accepted = true;
                        break;
                    }
                }
                factor *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if converged {
            if sup_diff(&coeffs) >= options.min_separation {
                // build the profile with exact values and tangents
                let n_knots = options.knots.max(64);
                let mut z = Vec::with_capacity(n_knots);
                let mut c = Vec::with_capacity(n_knots);
                let mut d = Vec::with_capacity(n_knots);
                for i in 0..n_knots {
                    let zi = h * i as f64 / (n_knots - 1) as f64;
                    z.push(zi);
                    c.push(speed_at(&coeffs, zi));
                    let mut dv = base.derivative_clamped(zi);
                    for (k, a) in coeffs.iter().enumerate() {
                        dv += a * basis.derivative(k, zi);
                    }
                    d.push(dv);
                }
                return VelocityProfile::from_hermite_parts(z, c, d);
            }
            family_amplitude *= 1.5;
        } else {
            return Err(Error::NonConvergence(
                "moment matching did not converge; try a smaller separation".into(),
            ));
        }
    }
    Err(Error::NonConvergence(
        "could not reach the requested separation; try a smaller one".into(),
    ))
}

/// Solve a small dense linear system by Gaussian elimination with
/// partial pivoting.
fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-300 {
            return Err(Error::Singular("moment Jacobian is singular".into()));
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut v = rhs[row];
        for k in (row + 1)..n {
            v -= m[row][k] * x[k];
        }
        x[row] = v / m[row][row];
    }
    Ok(x)
}

/// The smallest expansion degree hiding perturbations below `epsilon`,
/// with the per-moment tolerance list.
#[derive(Debug, Clone)]
pub struct AmbiguityTolerances {
    pub degree: usize,
    /// Tolerance on |m_n(c_1) - m_n(c_2)| for n = 0..degree-1.
    pub tolerances: Vec<f64>,
}

/// Smallest d with (c_0 p_star)^{2d} <= epsilon, and per-moment
/// tolerances epsilon p_star^{-2n} / (d |(-1/2 choose n)|).
pub fn ambiguity_tolerances(epsilon: f64, p_star: f64, c0: f64) -> Result<AmbiguityTolerances> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    let x = c0 * p_star;
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("need 0 < c0 p_star < 1, got {x}")));
    }
    let mut degree = 1usize;
    while x.powi(2 * degree as i32) > epsilon {
        degree += 1;
        if degree > 10_000 {
            return Err(Error::NonConvergence(
                "epsilon unreachable: c0 p_star too close to 1".into(),
            ));
        }
    }
    let tolerances = (0..degree)
        .map(|n| epsilon * p_star.powi(-2 * (n as i32)) / (degree as f64 * binomial_half(n).abs()))
        .collect();
    Ok(AmbiguityTolerances { degree, tolerances })
}
