//! Independent quadrature oracles for unit tests. These deliberately use
//! different algorithms from `crate::quad` so that agreement is evidence
//! rather than tautology.

/// Romberg integration (Richardson-extrapolated trapezoid) for smooth
/// integrands.
pub fn romberg<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let max_levels = 22;
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut n = 1usize;
    let mut trap = 0.5 * (b - a) * (f(a) + f(b));
    table.push(vec![trap]);
    for k in 1..max_levels {
        n *= 2;
        let h = (b - a) / n as f64;
        let mut sum = 0.0;
        for i in (1..n).step_by(2) {
            sum += f(a + i as f64 * h);
        }
        trap = 0.5 * table[k - 1][0] + h * sum;
        let mut row = vec![trap];
        let mut factor = 1.0;
        for j in 1..=k {
            factor *= 4.0;
            let v = (factor * row[j - 1] - table[k - 1][j - 1]) / (factor - 1.0);
            row.push(v);
        }
        let err = (row[k] - table[k - 1][k - 1]).abs();
        table.push(row);
        if k > 3 && err < tol * table[k][k].abs().max(1.0) {
            return table[k][k];
        }
    }
    table.last().unwrap().last().copied().unwrap()
}

/// Tanh-sinh (double exponential) quadrature; robust to integrable
/// endpoint singularities. The integrand receives the distances from the
/// two endpoints, (x - a, b - x), so callers can form singular factors
/// without catastrophic cancellation.
pub fn tanh_sinh<F: Fn(f64, f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let half = 0.5 * (b - a);
    let width = b - a;
    let mut result = 0.0;
    let mut prev = f64::INFINITY;
    let mut h = 1.0;
    for iter in 0..14 {
        h *= 0.5;
        let mut sum = 0.0;
        let mut k = 0.0f64;
        loop {
            let t = k * h;
            let g = std::f64::consts::FRAC_PI_2 * t.sinh();
            let e = (-2.0 * g).exp();
            let omu = 2.0 * e / (1.0 + e); // 1 - tanh(g), stable
            let sech = 2.0 * (-g).exp() / (1.0 + e);
            let w = std::f64::consts::FRAC_PI_2 * t.cosh() * sech * sech;
            let d = half * omu; // distance from the nearer endpoint
            if w == 0.0 || d == 0.0 {
                break;
            }
            let mut term = 0.0;
            let v = f(width - d, d); // node near b
            if v.is_finite() {
                term += v * w;
            }
            if k > 0.0 {
                let v = f(d, width - d); // node near a
                if v.is_finite() {
                    term += v * w;
                }
            }
            sum += term;
            if t > 7.5 {
                break;
            }
            k += 1.0;
        }
        result = sum * h * half;
        if iter >= 4 && (result - prev).abs() < 0.1 * tol * result.abs().max(1.0) {
            return result;
        }
        prev = result;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn romberg_smooth() {
        let v = romberg(|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn tanh_sinh_endpoint_singularity() {
        // int_0^1 (1-x)^{-1/2} dx = 2, integrand expressed via the
        // distance from the singular endpoint
        let v = tanh_sinh(|_, db: f64| db.powf(-0.5), 0.0, 1.0, 1e-12);
        assert!((v - 2.0).abs() < 1e-12, "got {v}");
    }
}
