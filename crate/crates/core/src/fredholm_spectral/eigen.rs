//! Eigenvalue decay of the Hankel sections and the condition-number
//! bound curves.

use super::{build_hankel_section, SlownessGeometry};
use crate::error::{Error, Result};
use crate::extprec::{jacobi_eigenvalues, ln_f64};
use rug::Float;

/// Spectrum of one section order.
#[derive(Debug, Clone)]
pub struct SectionSpectrum {
    pub order: usize,
    /// Eigenvalues, descending, at working precision.
    pub eigenvalues: Vec<Float>,
    /// Natural logs of the eigenvalues as f64 (safe far outside the f64
    /// range).
    pub ln_eigenvalues: Vec<f64>,
}

/// Eigenvalue decay report across section orders 1..=n_max.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub prec_bits: u32,
    pub sections: Vec<SectionSpectrum>,
}

/// Simple least-squares line fit.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub(crate) fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    LineFit {
        slope,
        intercept,
        r_squared: 1.0 - ss_res / ss_tot,
    }
}

impl SpectralReport {
    pub fn section(&self, order: usize) -> &SectionSpectrum {
        &self.sections[order - 1]
    }

    pub fn max_order(&self) -> usize {
        self.sections.len()
    }

    /// ln of the smallest eigenvalue of the order-n section.
    pub fn ln_lambda_min(&self, order: usize) -> f64 {
        *self.section(order).ln_eigenvalues.last().unwrap()
    }

    /// ln of the largest eigenvalue of the order-n section.
    pub fn ln_lambda_max(&self, order: usize) -> f64 {
        self.section(order).ln_eigenvalues[0]
    }

    /// ln kappa_N = (ln lambda_1 - ln lambda_N) / 2.
    pub fn ln_kappa(&self, order: usize) -> f64 {
        0.5 * (self.ln_lambda_max(order) - self.ln_lambda_min(order))
    }

    /// Fit ln lambda_N^{(N)} against N over orders [lo, hi]: geometric
    /// decay diagnostics.
    pub fn fit_geometric(&self, lo: usize, hi: usize) -> LineFit {
        let xs: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
        let ys: Vec<f64> = (lo..=hi).map(|n| self.ln_lambda_min(n)).collect();
        line_fit(&xs, &ys)
    }

    /// Fit ln sigma_N^{(N)} = ln lambda_N^{(N)} / 2 against sqrt(N):
    /// root-exponential decay diagnostics.
    pub fn fit_root_exponential(&self, lo: usize, hi: usize) -> LineFit {
        let xs: Vec<f64> = (lo..=hi).map(|n| (n as f64).sqrt()).collect();
        let ys: Vec<f64> = (lo..=hi).map(|n| 0.5 * self.ln_lambda_min(n)).collect();
        line_fit(&xs, &ys)
    }

    /// Cauchy interlacing across consecutive section orders, within the
    /// eigen-solver tolerance.
    pub fn interlacing_ok(&self) -> bool {
        for w in self.sections.windows(2) {
            let small = &w[0].eigenvalues;
            let big = &w[1].eigenvalues;
            let mut tol = Float::with_val(self.prec_bits, 1u32);
            tol >>= self.prec_bits.saturating_sub(14);
            tol *= &big[0];
            for j in 0..small.len() {
                // lambda_j^{(N+1)} >= lambda_j^{(N)} >= lambda_{j+1}^{(N+1)}
                let upper = Float::with_val(self.prec_bits, &big[j] + &tol);
                let lower = Float::with_val(self.prec_bits, &big[j + 1] - &tol);
                if small[j] > upper || small[j] < lower {
                    return false;
                }
            }
        }
        true
    }
}

/// Diagonalize every section order 1..=n_max of the geometry's K matrix
/// at the given precision.
///
/// Fails with `PrecisionExhausted` when the smallest eigenvalue of some
/// section sinks below 2^{-(prec-20)} relative to the largest; the error
/// names the largest trustworthy order.
pub fn eigen_decay(geometry: &SlownessGeometry, n_max: usize, prec: u32) -> Result<SpectralReport> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if prec < 53 {
        return Err(Error::Domain(
            "mantissa precision must be at least 53 bits".into(),
        ));
    }
    let mut sections = Vec::with_capacity(n_max);
    let mut floor = Float::with_val(prec, 1u32);
    floor >>= prec.saturating_sub(20);
    for n in 1..=n_max {
        let sec = build_hankel_section(n, geometry, prec);
        let eig = jacobi_eigenvalues(sec.matrix())?;
        let smallest = eig.last().unwrap();
        let threshold = Float::with_val(prec, &floor * &eig[0]);
        if smallest <= &threshold {
            return Err(Error::PrecisionExhausted { last_valid: n - 1 });
        }
        let ln_eig: Vec<f64> = eig.iter().map(ln_f64).collect();
        sections.push(SectionSpectrum {
            order: n,
            eigenvalues: eig,
            ln_eigenvalues: ln_eig,
        });
    }
    Ok(SpectralReport {
        prec_bits: prec,
        sections,
    })
}

/// How the bound curves are pinned vertically.
#[derive(Debug, Clone, Copy)]
pub struct CurveAlignment {
    /// Order the curves are matched at.
    pub at_order: usize,
    /// ln kappa value to match there.
    pub ln_kappa: f64,
}

impl Default for CurveAlignment {
    fn default() -> Self {
        // kappa_1 = 1 for any 1x1 section
        CurveAlignment {
            at_order: 1,
            ln_kappa: 0.0,
        }
    }
}

/// The four condition-number curves, in ln scale, for orders 1..=n_max.
#[derive(Debug, Clone)]
pub struct BoundCurves {
    /// C_alpha N alpha^N.
    pub lower1_ln: Vec<f64>,
    /// C N^{-1/4} e^{1.2465 sqrt(N)}.
    pub lower2_ln: Vec<f64>,
    /// C_beta N^{1/4} beta^N.
    pub upper_ln: Vec<f64>,
    /// C_s ((rho^* - rho_*)/4)^{-N/2}.
    pub szego_ln: Vec<f64>,
}

impl BoundCurves {
    pub fn lower1(&self, order: usize) -> f64 {
        self.lower1_ln[order - 1].exp()
    }

    pub fn lower2(&self, order: usize) -> f64 {
        self.lower2_ln[order - 1].exp()
    }

    pub fn upper(&self, order: usize) -> f64 {
        self.upper_ln[order - 1].exp()
    }

    pub fn szego(&self, order: usize) -> f64 {
        self.szego_ln[order - 1].exp()
    }
}

/// Evaluate the four bound curves, aligned at the given order/value.
pub fn bound_curves(
    geometry: &SlownessGeometry,
    n_max: usize,
    align: CurveAlignment,
) -> Result<BoundCurves> {
    if align.at_order < 1 || align.at_order > n_max {
        return Err(Error::Domain("alignment order outside curve range".into()));
    }
    let n0 = align.at_order as f64;
    let ln_alpha = geometry.alpha.ln();
    let ln_beta = geometry.beta.ln();
    let ln_c = geometry.transfinite_diameter().ln();
    let rate = super::schedule::ROOT_EXP_RATE;
    let shape_lower1 = |n: f64| n.ln() + n * ln_alpha;
    let shape_lower2 = |n: f64| -0.25 * n.ln() + rate * n.sqrt();
    let shape_upper = |n: f64| 0.25 * n.ln() + n * ln_beta;
    let shape_szego = |n: f64| -0.5 * n * ln_c;
    let mut curves = BoundCurves {
        lower1_ln: Vec::with_capacity(n_max),
        lower2_ln: Vec::with_capacity(n_max),
        upper_ln: Vec::with_capacity(n_max),
        szego_ln: Vec::with_capacity(n_max),
    };
    for n in 1..=n_max {
        let nf = n as f64;
        curves
            .lower1_ln
            .push(align.ln_kappa + shape_lower1(nf) - shape_lower1(n0));
        curves
            .lower2_ln
            .push(align.ln_kappa + shape_lower2(nf) - shape_lower2(n0));
        curves
            .upper_ln
            .push(align.ln_kappa + shape_upper(nf) - shape_upper(n0));
        curves
            .szego_ln
            .push(align.ln_kappa + shape_szego(nf) - shape_szego(n0));
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fredholm_spectral::SlownessGeometry;

    #[test]
    fn interlacing_holds_across_sections() {
        let g = SlownessGeometry::from_rho(0.3, 0.8).unwrap();
        let report = eigen_decay(&g, 14, 256).unwrap();
        assert!(report.interlacing_ok());
    }

    #[test]
    fn kappa_is_monotone_in_section_order() {
        let g = SlownessGeometry::from_rho(0.25, 0.75).unwrap();
        let report = eigen_decay(&g, 12, 256).unwrap();
        for n in 2..=12 {
            assert!(report.ln_kappa(n) >= report.ln_kappa(n - 1) - 1e-12);
        }
    }

    #[test]
    fn precision_exhaustion_names_last_valid_order() {
        let g = SlownessGeometry::from_rho(0.05, 0.5).unwrap();
        match eigen_decay(&g, 25, 64) {
            Err(crate::error::Error::PrecisionExhausted { last_valid }) => {
                assert!(
                    last_valid >= 3 && last_valid < 25,
                    "last_valid = {last_valid}"
                );
            }
            other => panic!("expected PrecisionExhausted, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn geometric_decay_slope_tracks_beta() {
        // lambda_N^{(N)} ~ beta^{-2N}: the fitted slope over a modest
        // window is within 10% of -2 ln beta
        let g = SlownessGeometry::from_rho(0.2, 0.5).unwrap();
        let report = eigen_decay(&g, 16, 320).unwrap();
        let fit = report.fit_geometric(8, 16);
        let target = -2.0 * g.beta.ln();
        assert!(
            (fit.slope - target).abs() < 0.1 * target.abs(),
            "slope {} vs -2 ln beta {}",
            fit.slope,
            target
        );
    }

    #[test]
    fn grazing_regime_kappa_tracks_upper_bound_rate() {
        // rho^* = 1 with rho_* = 0.5: ln kappa_N grows like N ln beta
        let g = SlownessGeometry::from_rho(0.5, 1.0).unwrap();
        let report = eigen_decay(&g, 20, 320).unwrap();
        let xs: Vec<f64> = (10..=20).map(|n| n as f64).collect();
        let ys: Vec<f64> = (10..=20).map(|n| report.ln_kappa(n)).collect();
        let fit = line_fit(&xs, &ys);
        let target = g.beta.ln();
        assert!(
            (fit.slope - target).abs() < 0.1 * target,
            "kappa slope {} vs ln beta {}",
            fit.slope,
            target
        );
    }

    #[test]
    fn grazing_regime_decays_faster_than_squared_bound_rate() {
        // fitted d in lambda_N ~ c e^{-2 d sqrt(N)} stays above the
        // non-sharp bound constant 1.2465
        let g = SlownessGeometry::from_rho(0.5, 1.0).unwrap();
        let report = eigen_decay(&g, 24, 320).unwrap();
        let fit = report.fit_root_exponential(9, 24);
        let d = -fit.slope;
        assert!(d >= 1.2, "fitted root-exponential exponent {d}");
    }

    #[test]
    fn tail_block_top_eigenvalue_below_frobenius_norm() {
        // Hilbert-Schmidt tail bound: lambda_1 of the (m, n >= N) block
        // is at most its Frobenius norm
        let g = SlownessGeometry::from_rho(0.25, 0.75).unwrap();
        let prec = 320;
        let big = 24usize;
        let section = crate::fredholm_spectral::build_hankel_section(big, &g, prec);
        for n in 1..=10usize {
            let m = big - n;
            let mut tail = crate::extprec::MpMat::zeros(m, m, prec);
            for i in 0..m {
                for j in 0..m {
                    *tail.at_mut(i, j) = section.entry(n + i, n + j).clone();
                }
            }
            let top = crate::extprec::jacobi_eigenvalues(&tail).unwrap()[0].clone();
            let frob = tail.frobenius();
            assert!(top <= frob, "tail block N = {n}");
        }
    }

    #[test]
    fn sections_are_positive_definite_via_cholesky() {
        let g = SlownessGeometry::from_rho(0.3, 0.9).unwrap();
        for n in [1usize, 4, 9, 16] {
            let sec = crate::fredholm_spectral::build_hankel_section(n, &g, 512);
            assert!(
                crate::extprec::cholesky(sec.matrix()).is_some(),
                "Cholesky failed at N = {n}"
            );
            let eig = crate::extprec::jacobi_eigenvalues(sec.matrix()).unwrap();
            assert!(eig.last().unwrap() > &0, "negative eigenvalue at N = {n}");
        }
    }

    #[test]
    fn curves_align_at_kappa_one() {
        let g = SlownessGeometry::from_rho(0.2, 0.8).unwrap();
        let c = bound_curves(&g, 10, CurveAlignment::default()).unwrap();
        assert!((c.lower1(1) - 1.0).abs() < 1e-12);
        assert!((c.lower2(1) - 1.0).abs() < 1e-12);
        assert!((c.upper(1) - 1.0).abs() < 1e-12);
        assert!((c.szego(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower1_degenerates_to_linear_growth_when_alpha_is_one() {
        let g = SlownessGeometry::from_slownesses(0.5, 1.0, 0.1, 0.5).unwrap();
        assert!((g.alpha - 1.0).abs() < 1e-14);
        let c = bound_curves(&g, 25, CurveAlignment::default()).unwrap();
        for n in 1..=25 {
            // pure polynomial: C * N with C = 1 from the alignment
            assert!(
                (c.lower1(n) - n as f64).abs() < 1e-9 * n as f64,
                "lower1({n}) = {}",
                c.lower1(n)
            );
        }
        // the root-exponential lower bound overtakes the linear one
        assert!(c.lower2(25) > c.lower1(25));
    }

    #[test]
    fn sandwich_holds_on_separated_geometry() {
        let g = SlownessGeometry::from_rho(0.2, 0.8).unwrap();
        let report = eigen_decay(&g, 14, 320).unwrap();
        let curves = bound_curves(&g, 14, CurveAlignment::default()).unwrap();
        for n in 1..=14 {
            let lk = report.ln_kappa(n);
            assert!(
                curves.lower1_ln[n - 1] <= lk + 1e-9,
                "lower1 exceeded kappa at N = {n}"
            );
            assert!(
                lk <= curves.upper_ln[n - 1] + 1e-9,
                "kappa exceeded upper at N = {n}"
            );
        }
    }
}
