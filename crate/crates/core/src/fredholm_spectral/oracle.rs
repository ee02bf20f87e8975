//! Independent verification route: assemble the projected operator
//! P_M A Q_N by direct quadrature of the 1/sqrt(y - x) kernel against
//! explicit orthonormal bases, then take its singular values at extended
//! precision. Requires a strictly separated data window (psi > 0).

use super::SlownessGeometry;
use crate::error::{Error, Result};
use crate::extprec::{gauss_legendre_mp, jacobi_eigenvalues, legendre_mp, MpMat};
use rug::Float;

/// Row-space basis choice for the projector P_M.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleBasis {
    /// Orthonormalized span of rho(x_tilde(x))^{n+1/2}: the choice that
    /// reduces the projected operator exactly to the Hankel matrix K.
    RhoSpan,
    /// Rescaled Legendre polynomials on the data window.
    Legendre,
}

/// Singular values of the quadrature-assembled P_M A Q_N.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub rows: usize,
    pub cols: usize,
    pub basis: OracleBasis,
    /// Descending singular values at working precision.
    pub singular_values: Vec<Float>,
}

/// Assemble and decompose the projected operator by 2D Gauss quadrature
/// with `quad_order` nodes per direction.
pub fn quadrature_oracle_a(
    geometry: &SlownessGeometry,
    m_rank: usize,
    n_rank: usize,
    basis: OracleBasis,
    prec: u32,
    quad_order: usize,
) -> Result<OracleResult> {
    if m_rank == 0 || n_rank == 0 {
        return Err(Error::Domain("ranks must be positive".into()));
    }
    if !(geometry.x_data_upper < geometry.x_lower) {
        return Err(Error::Domain(
            "oracle quadrature requires a strictly separated data window (psi > 0)".into(),
        ));
    }
    let (t_nodes, t_weights) = gauss_legendre_mp(quad_order, prec);

    // y-side quadrature on [x_lower, x_upper]
    let y_mid = Float::with_val(prec, geometry.sigma);
    let y_half = Float::with_val(prec, geometry.delta);
    // x-side quadrature on [x_data_lower, x_data_upper]
    let x_mid = Float::with_val(prec, 0.5 * (geometry.x_data_lower + geometry.x_data_upper));
    let x_half = Float::with_val(prec, 0.5 * (geometry.x_data_upper - geometry.x_data_lower));

    let y_at = |k: usize| -> Float {
        let mut y = Float::with_val(prec, &y_half * &t_nodes[k]);
        y += &y_mid;
        y
    };
    let x_at = |k: usize| -> Float {
        let mut x = Float::with_val(prec, &x_half * &t_nodes[k]);
        x += &x_mid;
        x
    };

    // inner integrals I_n(x_i) = int p_n(y) / sqrt(y - x_i) dy
    let norm_y: Vec<Float> = (0..n_rank)
        .map(|n| {
            let mut v = Float::with_val(prec, 2 * n as u32 + 1);
            v /= 2u32;
            v /= &y_half;
            v.sqrt()
        })
        .collect();
    let mut inner = vec![vec![Float::new(prec); n_rank]; quad_order];
    for (i, row) in inner.iter_mut().enumerate() {
        let xi = x_at(i);
        for (k, tw) in t_weights.iter().enumerate() {
            let yk = y_at(k);
            let mut dy = Float::with_val(prec, &yk - &xi);
            dy = dy.sqrt();
            // rescaled Legendre p_n(y) = norm_y[n] P_n((sigma - y)/delta)
            let mut y_tilde = Float::with_val(prec, &y_mid - &yk);
            y_tilde /= &y_half;
            let mut p_prev = Float::with_val(prec, 1u32);
            let mut p_curr = y_tilde.clone();
            for n in 0..n_rank {
                let pn = match n {
                    0 => p_prev.clone(),
                    1 => p_curr.clone(),
                    _ => {
                        let nf = n as u32;
                        let mut pnext = Float::with_val(prec, &y_tilde * &p_curr);
                        pnext *= 2 * nf - 1;
                        pnext -= Float::with_val(prec, &p_prev * (nf - 1));
                        pnext /= nf;
                        p_prev = p_curr.clone();
                        p_curr = pnext.clone();
                        pnext
                    }
                };
                let mut term = Float::with_val(prec, tw * &y_half);
                term *= &pn;
                term *= &norm_y[n];
                term /= &dy;
                row[n] += term;
            }
        }
    }

    // row basis values at the x nodes
    let basis_vals: Vec<Vec<Float>> = match basis {
        OracleBasis::Legendre => {
            let norm_x: Vec<Float> = (0..m_rank)
                .map(|m| {
                    let mut v = Float::with_val(prec, 2 * m as u32 + 1);
                    v /= 2u32;
                    v /= &x_half;
                    v.sqrt()
                })
                .collect();
            (0..m_rank)
                .map(|m| {
                    (0..quad_order)
                        .map(|i| {
                            let (p, _) = legendre_mp(m, &t_nodes[i], prec);
                            Float::with_val(prec, &p * &norm_x[m])
                        })
                        .collect()
                })
                .collect()
        }
        OracleBasis::RhoSpan => {
            // e_n(x) = rho(x_tilde(x))^{n+1/2}, orthonormalized by
            // modified Gram-Schmidt in the quadrature inner product
            let mut fams: Vec<Vec<Float>> = Vec::with_capacity(m_rank);
            for n in 0..m_rank {
                let vals: Vec<Float> = (0..quad_order)
                    .map(|i| {
                        let xi = x_at(i);
                        let mut xt = Float::with_val(prec, &y_mid - &xi);
                        xt /= &y_half;
                        // stable rho = 1/(xt + sqrt(xt^2 - 1))
                        let mut s = Float::with_val(prec, &xt * &xt);
                        s -= 1u32;
                        let s = s.sqrt();
                        let denom = Float::with_val(prec, &xt + &s);
                        let rho = Float::with_val(prec, 1u32) / denom;
                        let mut v = rho.clone().sqrt();
                        for _ in 0..n {
                            v *= &rho;
                        }
                        v
                    })
                    .collect();
                fams.push(vals);
            }
            let dot = |u: &[Float], v: &[Float]| -> Float {
                let mut acc = Float::new(prec);
                for i in 0..quad_order {
                    let mut t = Float::with_val(prec, &u[i] * &v[i]);
                    t *= &t_weights[i];
                    t *= &x_half;
                    acc += t;
                }
                acc
            };
            let mut ortho: Vec<Vec<Float>> = Vec::with_capacity(m_rank);
            for mut v in fams {
                for w in &ortho {
                    let c = dot(&v, w);
                    for i in 0..quad_order {
                        v[i] -= Float::with_val(prec, &c * &w[i]);
                    }
                }
                let norm = dot(&v, &v).sqrt();
                if norm.is_zero() {
                    return Err(Error::PrecisionExhausted {
                        last_valid: ortho.len(),
                    });
                }
                for vi in v.iter_mut() {
                    *vi /= &norm;
                }
                ortho.push(v);
            }
            ortho
        }
    };

    // B_{m,n} = sum_i w_i basis_m(x_i) I_n(x_i)
    let mut b = MpMat::zeros(m_rank, n_rank, prec);
    for m in 0..m_rank {
        for n in 0..n_rank {
            let mut acc = Float::new(prec);
            for i in 0..quad_order {
                let mut t = Float::with_val(prec, &basis_vals[m][i] * &inner[i][n]);
                t *= &t_weights[i];
                t *= &x_half;
                acc += t;
            }
            b.set(m, n, acc);
        }
    }

    let gram = if m_rank <= n_rank {
        b.transpose().gram()
    } else {
        b.gram()
    };
    let eig = jacobi_eigenvalues(&gram)?;
    let singular_values = eig
        .iter()
        .map(|l| {
            let v = if *l < 0 { Float::new(prec) } else { l.clone() };
            v.sqrt()
        })
        .collect();
    Ok(OracleResult {
        rows: m_rank,
        cols: n_rank,
        basis,
        singular_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extprec::jacobi_eigenvalues;
    use crate::fredholm_spectral::{build_hankel_section, SlownessGeometry};

    fn top_eigen_ln(geometry: &SlownessGeometry, n: usize, prec: u32, k: usize) -> Vec<f64> {
        let sec = build_hankel_section(n, geometry, prec);
        let eig = jacobi_eigenvalues(sec.matrix()).unwrap();
        eig.iter().take(k).map(crate::extprec::ln_f64).collect()
    }

    #[test]
    fn rho_span_oracle_reproduces_hankel_spectrum() {
        for (rl, rh) in [(0.2, 0.8), (0.35, 0.65)] {
            let g = SlownessGeometry::from_rho(rl, rh).unwrap();
            let n = 12;
            let prec = 384;
            let out = quadrature_oracle_a(&g, n, n, OracleBasis::RhoSpan, prec, 128).unwrap();
            let kvals = top_eigen_ln(&g, n, prec, 5);
            for (rank, lk) in kvals.iter().enumerate() {
                let ln_sq = 2.0 * crate::extprec::ln_f64(&out.singular_values[rank]);
                let rel = (ln_sq - lk).abs();
                // ln-difference below 1e-6 means relative agreement below
                // 1e-6 for the eigenvalues themselves
                assert!(
                    rel < 1e-6,
                    "({rl}, {rh}) rank {rank}: sigma^2 mismatch {rel:.2e}"
                );
            }
        }
    }

    #[test]
    fn legendre_oracle_eigenvalues_grow_with_row_resolution() {
        // Lemma 1: enlarging the row projector can only raise each
        // eigenvalue of the projected normal operator
        let g = SlownessGeometry::from_rho(0.25, 0.75).unwrap();
        let prec = 320;
        let coarse = quadrature_oracle_a(&g, 6, 8, OracleBasis::Legendre, prec, 96).unwrap();
        let fine = quadrature_oracle_a(&g, 20, 8, OracleBasis::Legendre, prec, 96).unwrap();
        for j in 0..6 {
            let a = &coarse.singular_values[j];
            let b = &fine.singular_values[j];
            let slack = rug::Float::with_val(prec, b >> 60u32);
            assert!(
                *a <= rug::Float::with_val(prec, b + &slack),
                "sigma_{j} decreased with finer rows"
            );
        }
    }

    #[test]
    fn legendre_oracle_is_reasonable_for_modest_ranks() {
        // the projected norm keeps at least half of the reference norm
        let g = SlownessGeometry::from_rho(0.3, 0.7).unwrap();
        let prec = 256;
        let reference = quadrature_oracle_a(&g, 40, 40, OracleBasis::Legendre, prec, 128)
            .unwrap()
            .singular_values[0]
            .to_f64();
        for &(m, n) in &[(4usize, 4usize), (6, 4), (4, 8), (8, 8)] {
            let got = quadrature_oracle_a(&g, m, n, OracleBasis::Legendre, prec, 128)
                .unwrap()
                .singular_values[0]
                .to_f64();
            assert!(
                got >= 0.5 * reference,
                "({m}, {n}): norm {got} below half of {reference}"
            );
        }
    }

    #[test]
    fn oracle_rejects_grazing_geometry() {
        let g = SlownessGeometry::from_rho(0.5, 1.0).unwrap();
        assert!(quadrature_oracle_a(&g, 4, 4, OracleBasis::Legendre, 192, 64).is_err());
    }
}
