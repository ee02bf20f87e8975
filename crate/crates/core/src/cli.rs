//! Command-line front end: argument parsing, run configuration, and the
//! CSV/JSON report writers tying the library together.

use crate::error::{Error, Result};
use crate::fredholm_spectral::{
    bound_curves, eigen_decay, optimize_delta, CurveAlignment, SlownessGeometry,
};
use crate::ray_kinematics::{self, RayKind};
use crate::velocity_model::VelocityProfile;
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Default extended-precision mantissa width, overridable with the
/// LAYERTOMO_BITS environment variable or --bits.
pub const DEFAULT_BITS: u32 = 512;

#[derive(Debug, Parser)]
#[command(
    name = "layertomo",
    version,
    about = "Traveltime kinematics of layered media: forward ray sweeps, \
             Herglotz-Wiechert inversion, and the spectral conditioning of \
             reflected-ray tomography"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Mantissa bits for extended-precision stages.
    #[arg(long, global = true)]
    pub bits: Option<u32>,
    /// Seed recorded for randomized property sweeps.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep reflected or diving rays of a profile over a slowness grid.
    Forward {
        #[arg(long)]
        profile: PathBuf,
        /// Ray kind: reflected | diving.
        #[arg(long)]
        kind: String,
        /// Slowness grid as start,stop,count (inclusive).
        #[arg(long)]
        p: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Recover a monotone profile from (p, tau) diving-ray data.
    InvertDiving {
        /// CSV with a header row and columns p, tau.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Singular values of the diving-ray Abel operator against the
    /// closed form.
    AbelSvd {
        #[arg(long, default_value_t = 20)]
        n_max: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Eigenvalue decay and condition-number bound curves of the
    /// reflected-ray Hankel sections.
    Conditioning {
        /// Data-window radii rho_*,rho^* (mutually exclusive with
        /// --p-bounds).
        #[arg(long)]
        rho_lower: Option<f64>,
        #[arg(long)]
        rho_star: Option<f64>,
        /// Slownesses p_min,p_max,p_*,p^*.
        #[arg(long)]
        p_bounds: Option<String>,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Print the optimized subdivision parameter and decay rate.
    DeltaOpt,
    /// Construct a moment-matched near-equivalent profile pair.
    Equivalent {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, default_value_t = 0.02)]
        separation: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Tabulate the slowness distribution function of a profile.
    Sdf {
        #[arg(long)]
        profile: PathBuf,
        /// Reference horizontal slowness.
        #[arg(long)]
        p: f64,
        /// Slowness grid as start,stop,count; defaults to the physical
        /// range.
        #[arg(long)]
        q: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
}

/// Validated run configuration.
#[derive(Debug, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub bits: u32,
    pub seed: u64,
    pub arguments: serde_json::Value,
    #[serde(skip)]
    pub outputs: Vec<PathBuf>,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<RunConfig> {
        let bits = cli
            .bits
            .or_else(|| {
                std::env::var("LAYERTOMO_BITS")
                    .ok()
                    .and_then(|v| v.parse().ok())
            })
            .unwrap_or(DEFAULT_BITS);
        if bits < 53 {
            return Err(Error::Config(format!(
                "mantissa bits must be at least 53, got {bits}"
            )));
        }
        let (subcommand, arguments, outputs) = describe(&cli.command)?;
        Ok(RunConfig {
            subcommand,
            bits,
            seed: cli.seed.unwrap_or(0),
            arguments,
            outputs,
        })
    }
}

fn describe(cmd: &Command) -> Result<(String, serde_json::Value, Vec<PathBuf>)> {
    let v = |s: &str, val: serde_json::Value, outs: Vec<PathBuf>| (s.to_string(), val, outs);
    Ok(match cmd {
        Command::Forward {
            profile,
            kind,
            p,
            output,
        } => v(
            "forward",
            serde_json::json!({"profile": profile, "kind": kind, "p": p, "output": output}),
            vec![output.clone()],
        ),
        Command::InvertDiving { input, output } => v(
            "invert-diving",
            serde_json::json!({"input": input, "output": output}),
            vec![output.clone()],
        ),
        Command::AbelSvd { n_max, output } => v(
            "abel-svd",
            serde_json::json!({"n_max": n_max, "output": output}),
            vec![output.clone()],
        ),
        Command::Conditioning {
            rho_lower,
            rho_star,
            p_bounds,
            n_max,
            output,
        } => v(
            "conditioning",
            serde_json::json!({
                "rho_lower": rho_lower, "rho_star": rho_star,
                "p_bounds": p_bounds, "n_max": n_max, "output": output
            }),
            vec![output.clone()],
        ),
        Command::DeltaOpt => v("delta-opt", serde_json::json!({}), vec![]),
        Command::Equivalent {
            profile,
            degree,
            separation,
            output,
        } => v(
            "equivalent",
            serde_json::json!({
                "profile": profile, "degree": degree,
                "separation": separation, "output": output
            }),
            vec![output.clone()],
        ),
        Command::Sdf {
            profile,
            p,
            q,
            output,
        } => v(
            "sdf",
            serde_json::json!({"profile": profile, "p": p, "q": q, "output": output}),
            vec![output.clone()],
        ),
    })
}

/// Parse an inclusive "start,stop,count" grid without accumulation.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "grid spec must be start,stop,count; got '{spec}'"
        )));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad grid start '{}'", parts[0])))?;
    let stop: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad grid stop '{}'", parts[1])))?;
    let count: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad grid count '{}'", parts[2])))?;
    if count == 0 {
        return Err(Error::Config("grid count must be positive".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
        .collect())
}

/// 17-significant-digit formatting: round-trip safe for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_mpf(v: &rug::Float) -> String {
    let digits = (v.prec() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2;
    let mut s = v.to_string_radix(10, Some(digits));
    if !s.contains('e') && !s.contains('@') {
        s.push_str("e0");
    }
    s.replace('@', "e")
}

/// Execute a run and write every artifact. Returns the paths written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let config = RunConfig::from_cli(cli)?;
    let started = std::time::Instant::now();
    let mut written = Vec::new();
    match &cli.command {
        Command::Forward {
            profile,
            kind,
            p,
            output,
        } => {
            let prof = VelocityProfile::load(profile)?;
            let kind = match kind.as_str() {
                "reflected" => RayKind::Reflected,
                "diving" => RayKind::Diving,
                other => {
                    return Err(Error::Config(format!(
                        "unknown ray kind '{other}' (expected reflected | diving)"
                    )))
                }
            };
            let grid = parse_grid(p)?;
            let mut csv = String::from("p,tau,x,kind,Z\n");
            for &ps in &grid {
                let sol = match kind {
                    RayKind::Reflected => ray_kinematics::reflected_solution(&prof, ps)?,
                    RayKind::Diving => ray_kinematics::diving_solution(&prof, ps)?,
                };
                writeln!(
                    csv,
                    "{},{},{},{},{}",
                    fmt_f64(sol.p),
                    fmt_f64(sol.traveltime),
                    fmt_f64(sol.offset),
                    sol.kind,
                    sol.turning_depth.map_or(String::new(), fmt_f64)
                )
                .unwrap();
            }
            std::fs::write(output, csv)?;
            written.push(output.clone());
        }
        Command::InvertDiving { input, output } => {
            let text = std::fs::read_to_string(input)?;
            let (mut ps, mut taus) = (Vec::new(), Vec::new());
            for (i, line) in text.lines().enumerate() {
                if i == 0 || line.trim().is_empty() {
                    continue;
                }
                let mut it = line.split(',');
                let p: f64 = it
                    .next()
                    .and_then(|t| t.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad CSV line {}", i + 1)))?;
                let tau: f64 = it
                    .next()
                    .and_then(|t| t.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad CSV line {}", i + 1)))?;
                ps.push(p);
                taus.push(tau);
            }
            let prof = crate::abel_diving::herglotz_invert(
                &ps,
                &taus,
                crate::abel_diving::HerglotzOptions::default(),
            )?;
            prof.save(output)?;
            written.push(output.clone());
        }
        Command::AbelSvd { n_max, output } => {
            let computed = crate::abel_diving::js_discretized_singular_values(n_max + 4)?;
            let system = crate::abel_diving::js_singular_system(*n_max);
            let mut csv = String::from("n,sigma,sigma_computed\n");
            for tri in &system {
                writeln!(
                    csv,
                    "{},{},{}",
                    tri.n,
                    fmt_f64(tri.sigma),
                    fmt_f64(computed[tri.n])
                )
                .unwrap();
            }
            std::fs::write(output, csv)?;
            written.push(output.clone());
        }
        Command::Conditioning {
            rho_lower,
            rho_star,
            p_bounds,
            n_max,
            output,
        } => {
            let geometry = match (rho_lower, rho_star, p_bounds) {
                (Some(lo), Some(hi), None) => SlownessGeometry::from_rho(*lo, *hi)?,
                (None, None, Some(spec)) => {
                    let parts: Vec<f64> = spec
                        .split(',')
                        .map(|t| t.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| Error::Config(format!("bad p-bounds '{spec}'")))?;
                    if parts.len() != 4 {
                        return Err(Error::Config("p-bounds must be p_min,p_max,p_*,p^*".into()));
                    }
                    SlownessGeometry::from_slownesses(parts[0], parts[1], parts[2], parts[3])?
                }
                _ => {
                    return Err(Error::Config(
                        "give either --rho-lower with --rho-star, or --p-bounds".into(),
                    ))
                }
            };
            if *n_max == 0 {
                return Err(Error::Config("n-max must be positive".into()));
            }
            let report = eigen_decay(&geometry, *n_max, config.bits)?;
            let curves = bound_curves(&geometry, *n_max, CurveAlignment::default())?;
            let mut csv = String::from("N,lambda_min,lambda_max,kappa,lower1,lower2,upper,szego\n");
            for n in 1..=*n_max {
                let sec = report.section(n);
                writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    n,
                    fmt_mpf(sec.eigenvalues.last().unwrap()),
                    fmt_mpf(&sec.eigenvalues[0]),
                    fmt_f64(report.ln_kappa(n).exp()),
                    fmt_f64(curves.lower1(n)),
                    fmt_f64(curves.lower2(n)),
                    fmt_f64(curves.upper(n)),
                    fmt_f64(curves.szego(n)),
                )
                .unwrap();
            }
            std::fs::write(output, csv)?;
            written.push(output.clone());
        }
        Command::DeltaOpt => {
            let opt = optimize_delta();
            println!(
                "delta = {:.6}\nrate = {:.6}\nexponent = {:.6}",
                opt.delta, opt.rate_constant, opt.exponent
            );
        }
        Command::Equivalent {
            profile,
            degree,
            separation,
            output,
        } => {
            let base = VelocityProfile::load(profile)?;
            let basis = crate::moment_ambiguity::PolyBumpBasis {
                h: base.depth_extent(),
                count: degree + 1,
            };
            let pair = crate::moment_ambiguity::construct_equivalent_profile(
                &base,
                *degree,
                &basis,
                crate::moment_ambiguity::EquivalentProfileOptions {
                    min_separation: *separation,
                    knots: 2001,
                },
            )?;
            pair.save(output)?;
            written.push(output.clone());
            let m1 = crate::moment_ambiguity::odd_moments(&base, *degree)?;
            let m2 = crate::moment_ambiguity::odd_moments(&pair, *degree)?;
            for n in 0..*degree {
                println!(
                    "moment {}: residual {:.3e}",
                    n,
                    (m1.values[n] - m2.values[n]).abs() / m1.values[n].abs()
                );
            }
            let (p_min, _) = base.slowness_extrema();
            let mut worst = 0.0f64;
            for i in 0..=24 {
                let p = 0.5 * p_min * i as f64 / 24.0;
                let t1 = ray_kinematics::traveltime_reflected(&base, p)?;
                let t2 = ray_kinematics::traveltime_reflected(&pair, p)?;
                worst = worst.max((t1 - t2).abs());
            }
            println!("max traveltime discrepancy over the p grid: {worst:.6e}");
        }
        Command::Sdf {
            profile,
            p,
            q,
            output,
        } => {
            let prof = VelocityProfile::load(profile)?;
            let grid = match q {
                Some(spec) => parse_grid(spec)?,
                None => {
                    let (lo, hi) = prof.slowness_extrema();
                    (0..200)
                        .map(|i| lo + (hi - lo) * i as f64 / 199.0)
                        .collect()
                }
            };
            let table = crate::velocity_model::sdf(&prof, *p, &grid)?;
            let mut csv = String::from("q,F,G\n");
            for i in 0..table.q.len() {
                writeln!(
                    csv,
                    "{},{},{}",
                    fmt_f64(table.q[i]),
                    if table.density[i].is_finite() {
                        fmt_f64(table.density[i])
                    } else {
                        "inf".to_string()
                    },
                    fmt_f64(table.cumulative[i]),
                )
                .unwrap();
            }
            std::fs::write(output, csv)?;
            written.push(output.clone());
        }
    }

    // run manifest next to the first output (stdout-only commands skip it)
    if let Some(first) = written.first() {
        let manifest = serde_json::json!({
            "subcommand": config.subcommand,
            "bits": config.bits,
            "seed": config.seed,
            "arguments": config.arguments,
            "version": env!("CARGO_PKG_VERSION"),
            "wall_time_seconds": started.elapsed().as_secs_f64(),
            "outputs": written,
        });
        let path = manifest_path(first);
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        written.push(path);
    }
    Ok(written)
}

/// Manifest file path for a given output artifact.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut os = output.as_os_str().to_owned();
    os.push(".manifest.json");
    PathBuf::from(os)
}
