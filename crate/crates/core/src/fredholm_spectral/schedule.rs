//! The geometric subinterval machinery behind the root-exponential
//! lower bound: the delta-optimized decay rate, the block schedule, and
//! the Weyl singular-value inequality used to recombine blocks.

use super::SlownessGeometry;
use crate::error::{Error, Result};
use crate::extprec::{jacobi_eigenvalues, mpf, MpMat};

/// The optimized root-exponential rate exponent
/// sqrt(ln(eta) ln(delta)) at the optimal delta = 3 - 2 sqrt(2):
/// sqrt(2) ln(1 + sqrt(2)) = 1.2465...
pub const ROOT_EXP_RATE: f64 = 1.246_450_480_280_461;

/// Per-sqrt(N) decay constant delta^{1 / sqrt(log_eta delta)} with
/// eta = (1 - sqrt(delta)) / (1 + sqrt(delta)).
pub fn schedule_rate(delta: f64) -> f64 {
    let s = delta.sqrt();
    let eta = (1.0 - s) / (1.0 + s);
    let log_eta_delta = delta.ln() / eta.ln();
    (delta.ln() / log_eta_delta.sqrt()).exp()
}

/// Result of the delta optimization.
#[derive(Debug, Clone, Copy)]
pub struct DeltaOptimum {
    /// Minimizing delta (0.1716...).
    pub delta: f64,
    /// Decay constant per sqrt(N) (0.2875...).
    pub rate_constant: f64,
    /// Exponent -ln(rate_constant) (1.2465...).
    pub exponent: f64,
}

/// Minimize the per-sqrt(N) decay constant over delta in (0, 1) by
/// golden-section search to 1e-6.
pub fn optimize_delta() -> DeltaOptimum {
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-4, 0.999);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = schedule_rate(c);
    let mut fd = schedule_rate(d);
    while (b - a) > 1e-6 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = schedule_rate(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = schedule_rate(d);
        }
    }
    let delta = 0.5 * (a + b);
    let rate_constant = schedule_rate(delta);
    DeltaOptimum {
        delta,
        rate_constant,
        exponent: -rate_constant.ln(),
    }
}

/// One block of the geometric subdivision.
#[derive(Debug, Clone, Copy)]
pub struct SubintervalBlock {
    /// Block index j (may be negative).
    pub index: i32,
    /// Actual block interval, clipped to [x_lower, x_upper].
    pub lower: f64,
    pub upper: f64,
    /// Nominal center Sigma_j = x_lower (1 + (delta^j + delta^{j+1})/2).
    pub center: f64,
    /// Nominal half-width Delta_j = x_lower (delta^j - delta^{j+1})/2.
    pub half_width: f64,
    /// Per-block elliptical radius (1 - sqrt(delta)) / (1 + sqrt(delta)),
    /// identical for every block.
    pub rho_upper: f64,
    /// Polynomial degrees allotted to the block.
    pub count: usize,
}

/// The full schedule.
#[derive(Debug, Clone)]
pub struct SubintervalSchedule {
    pub delta: f64,
    pub j_first: i32,
    pub k_last: i32,
    pub blocks: Vec<SubintervalBlock>,
    /// Set when the budget was too small for the geometric construction
    /// and a single block covering the whole interval is returned.
    pub single_block: bool,
}

impl SubintervalSchedule {
    pub fn total_count(&self) -> usize {
        self.blocks.iter().map(|b| b.count).sum()
    }
}

/// Split [x_lower, x_upper] into the geometric blocks
/// I_j = [x_lower, x_upper] cap [(1 + delta^{j+1}) x_lower,
/// (1 + delta^j) x_lower] with degree counts
/// n_j = floor((K - j)/2 log_eta(delta)), j = J..=K.
pub fn subinterval_schedule(
    n: usize,
    delta: f64,
    geometry: &SlownessGeometry,
) -> Result<SubintervalSchedule> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!(
            "delta must be in (0, 1), got {delta}"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("degree budget must be positive".into()));
    }
    let x_lo = geometry.x_lower;
    let x_hi = geometry.x_upper;
    let s = delta.sqrt();
    let eta = (1.0 - s) / (1.0 + s);
    let log_eta_delta = delta.ln() / eta.ln();
    let rho_block = eta;

    // largest J with (1 + delta^J) x_lo >= x_hi
    let ratio = (x_hi - x_lo) / x_lo;
    let mut j_first = (ratio.ln() / delta.ln()).floor() as i32;
    while (1.0 + delta.powi(j_first)) * x_lo >= x_hi {
        j_first += 1;
    }
    j_first -= 1;

    // largest integer strictly below J - 1 + 2 sqrt(N / log_eta(delta))
    let bound = j_first as f64 - 1.0 + 2.0 * (n as f64 / log_eta_delta).sqrt();
    let mut k_last = bound.floor() as i32;
    if k_last as f64 >= bound {
        k_last -= 1;
    }

    let single = |j_first: i32, k_last: i32| SubintervalSchedule {
        delta,
        j_first,
        k_last,
        blocks: vec![SubintervalBlock {
            index: j_first,
            lower: x_lo,
            upper: x_hi,
            center: 0.5 * (x_lo + x_hi),
            half_width: 0.5 * (x_hi - x_lo),
            rho_upper: rho_block,
            count: n,
        }],
        single_block: true,
    };
    if k_last < j_first {
        return Ok(single(j_first, k_last));
    }
    let mut blocks = Vec::new();
    for j in j_first..=k_last {
        let lo = (1.0 + delta.powi(j + 1)) * x_lo;
        let hi = (1.0 + delta.powi(j)) * x_lo;
        let lower = lo.max(x_lo);
        let upper = hi.min(x_hi);
        if !(upper > lower) {
            continue;
        }
        let count = ((k_last - j) as f64 / 2.0 * log_eta_delta).floor().max(0.0) as usize;
        blocks.push(SubintervalBlock {
            index: j,
            lower,
            upper,
            center: x_lo * (1.0 + 0.5 * (delta.powi(j) + delta.powi(j + 1))),
            half_width: x_lo * 0.5 * (delta.powi(j) - delta.powi(j + 1)),
            rho_upper: rho_block,
            count,
        });
    }
    if blocks.iter().all(|b| b.count == 0) {
        return Ok(single(j_first, k_last));
    }
    Ok(SubintervalSchedule {
        delta,
        j_first,
        k_last,
        blocks,
        single_block: false,
    })
}

/// Squared singular values of a real matrix given as rows, descending,
/// through the extended-precision Gram route.
pub(crate) fn squared_singular_values(rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    let r = rows.len();
    let c = rows[0].len();
    let prec = 128;
    let mut m = MpMat::zeros(r, c, prec);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != c {
            return Err(Error::Domain("ragged matrix".into()));
        }
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, mpf(prec, v));
        }
    }
    let gram = if r <= c {
        m.transpose().gram()
    } else {
        m.gram()
    };
    let eig = jacobi_eigenvalues(&gram)?;
    Ok(eig.iter().map(|v| v.to_f64().max(0.0)).collect())
}

/// Weyl inequality for a column split A = (B | C):
/// sigma^2_{i+j+1}(A) <= sigma^2_{i+1}(B) + sigma^2_{j+1}(C), with i, j
/// zero-based here. Returns whether the inequality holds (with a small
/// floating-point slack).
pub fn weyl_check(matrix: &[Vec<f64>], split_col: usize, i: usize, j: usize) -> Result<bool> {
    let rows = matrix.len();
    if rows == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    let cols = matrix[0].len();
    if split_col == 0 || split_col >= cols {
        return Err(Error::Domain(format!(
            "split column {split_col} must be inside (0, {cols})"
        )));
    }
    let max_index = rows.min(cols);
    if i + j + 1 > max_index {
        return Err(Error::Domain(format!(
            "singular value index {} out of range (max {max_index})",
            i + j + 1
        )));
    }
    let s2_full = squared_singular_values(matrix)?;
    let left: Vec<Vec<f64>> = matrix.iter().map(|r| r[..split_col].to_vec()).collect();
    let right: Vec<Vec<f64>> = matrix.iter().map(|r| r[split_col..].to_vec()).collect();
    let s2_left = squared_singular_values(&left)?;
    let s2_right = squared_singular_values(&right)?;
    let pick = |v: &[f64], k: usize| v.get(k).copied().unwrap_or(0.0);
    let lhs = pick(&s2_full, i + j);
    let rhs = pick(&s2_left, i) + pick(&s2_right, j);
    let slack = 1e-12 * s2_full[0].max(1e-300);
    Ok(lhs <= rhs + slack)
}
