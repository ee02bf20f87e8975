//! End-to-end checks of the command-line surface: artifact layout,
//! determinism, and exit codes.

use clap::Parser;
use layertomo::cli::{manifest_path, parse_grid, run, Cli};
use std::path::Path;
use std::process::Command;

fn run_args(args: &[&str]) -> layertomo::Result<Vec<std::path::PathBuf>> {
    let mut argv = vec!["layertomo"];
    argv.extend_from_slice(args);
    let cli = Cli::try_parse_from(argv).expect("argument parsing");
    run(&cli)
}

fn write_const_profile(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("const2.json");
    std::fs::write(
        &p,
        r#"{"h": 1.0, "knots": [{"z": 0.0, "c": 2.0}, {"z": 1.0, "c": 2.0}]}"#,
    )
    .unwrap();
    p
}

#[test]
fn forward_constant_profile_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let profile = write_const_profile(dir.path());
    let out = dir.path().join("fwd.csv");
    run_args(&[
        "forward",
        "--profile",
        profile.to_str().unwrap(),
        "--kind",
        "reflected",
        "--p",
        "0,0.4,9",
        "--output",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "p,tau,x,kind,Z");
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let p: f64 = cols[0].parse().unwrap();
        let tau: f64 = cols[1].parse().unwrap();
        let expect = 1.0 / (1.0 - 4.0 * p * p).sqrt();
        assert!((tau - expect).abs() < 1e-10 * expect, "p = {p}");
    }
    // manifest written and parseable
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(manifest_path(&out)).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "forward");
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn conditioning_kappa_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cond.csv");
    run_args(&[
        "conditioning",
        "--p-bounds",
        "0.5,1.0,0.1,0.5",
        "--n-max",
        "30",
        "--bits",
        "512",
        "--output",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let mut kappas = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        kappas.push(cols[3].parse::<f64>().unwrap());
    }
    assert_eq!(kappas.len(), 30);
    for w in kappas.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - 1e-12), "kappa must not decrease");
    }
}

#[test]
fn runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        run_args(&[
            "conditioning",
            "--rho-lower",
            "0.2",
            "--rho-star",
            "0.7",
            "--n-max",
            "10",
            "--bits",
            "256",
            "--output",
            out.to_str().unwrap(),
        ])
        .unwrap();
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "identical configs must produce identical bytes");
}

#[test]
fn invert_diving_roundtrip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    // forward-model diving data for c = 1 + z and write the CSV by hand
    let profile = layertomo::VelocityProfile::from_function(1.0, 1001, |z| 1.0 + z).unwrap();
    let mut csv = String::from("p,tau\n");
    let m = 240;
    for i in 0..m {
        let s = i as f64 / (m - 1) as f64;
        let t = 1.0 - (1.0 - s) * (1.0 - s) * (1.0 - s);
        let p = 0.55 + (1.0 - 1e-6 - 0.55) * t;
        let sol = layertomo::ray_kinematics::diving_solution(&profile, p).unwrap();
        csv.push_str(&format!("{p},{}\n", sol.traveltime));
    }
    let input = dir.path().join("tau.csv");
    std::fs::write(&input, csv).unwrap();
    let output = dir.path().join("recovered.json");
    run_args(&[
        "invert-diving",
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ])
    .unwrap();
    let recovered = layertomo::VelocityProfile::load(&output).unwrap();
    let zmax = recovered.depth_extent();
    for i in 0..=50 {
        let z = (0.05 + 0.9 * i as f64 / 50.0) * zmax;
        let c = recovered.eval_speed(z).unwrap();
        assert!(
            ((c - (1.0 + z)) / (1.0 + z)).abs() < 2e-3,
            "z = {z}: c = {c}"
        );
    }
}

#[test]
fn abel_svd_table_matches_formula() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("svd.csv");
    run_args(&[
        "abel-svd",
        "--n-max",
        "12",
        "--output",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        let sigma: f64 = cols[1].parse().unwrap();
        let computed: f64 = cols[2].parse().unwrap();
        assert!((sigma - computed).abs() < 0.01 * sigma);
    }
}

#[test]
fn sdf_table_for_bump_profile() {
    let dir = tempfile::tempdir().unwrap();
    let profile = layertomo::VelocityProfile::from_function(1.0, 801, |z| {
        2.0 - (std::f64::consts::PI * z).sin()
    })
    .unwrap();
    let path = dir.path().join("bump.json");
    profile.save(&path).unwrap();
    let out = dir.path().join("sdf.csv");
    run_args(&[
        "sdf",
        "--profile",
        path.to_str().unwrap(),
        "--p",
        "0.2",
        "--q",
        "0.55,0.95,41",
        "--output",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 41);
    // cumulative must be nondecreasing
    let mut prev = -1.0;
    for row in rows {
        let g: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!(g >= prev - 1e-12);
        prev = g;
    }
}

#[test]
fn exit_codes_for_failure_classes() {
    let bin = env!("CARGO_BIN_EXE_layertomo");
    // missing input file -> 3
    let st = Command::new(bin)
        .args([
            "forward",
            "--profile",
            "/nonexistent.json",
            "--kind",
            "reflected",
            "--p",
            "0,0.1,3",
            "--output",
            "/tmp/nope.csv",
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&st.stderr);
    assert!(
        stderr.starts_with("error code=3 kind=io"),
        "stderr: {stderr}"
    );

    // bad config -> 2
    let st = Command::new(bin)
        .args(["conditioning", "--n-max", "5", "--output", "/tmp/nope.csv"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2));

    // domain violation (slowness above the physical minimum) -> 5
    let dir = tempfile::tempdir().unwrap();
    let profile = write_const_profile(dir.path());
    let st = Command::new(bin)
        .args([
            "forward",
            "--profile",
            profile.to_str().unwrap(),
            "--kind",
            "reflected",
            "--p",
            "0,0.9,4",
            "--output",
            dir.path().join("x.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(5));

    // numerical failure (precision exhausted) -> 4
    let st = Command::new(bin)
        .args([
            "conditioning",
            "--rho-lower",
            "0.05",
            "--rho-star",
            "0.5",
            "--n-max",
            "25",
            "--bits",
            "64",
            "--output",
            dir.path().join("y.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(4));
}

#[test]
fn grid_spec_is_inclusive_and_validated() {
    let g = parse_grid("0,1,5").unwrap();
    assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert!(parse_grid("0,1").is_err());
    assert!(parse_grid("0,1,0").is_err());
    assert!(parse_grid("a,1,3").is_err());
}

#[test]
fn environment_variable_sets_default_bits() {
    // 64 bits from the environment cannot resolve this decay: exit 4
    let bin = env!("CARGO_BIN_EXE_layertomo");
    let dir = tempfile::tempdir().unwrap();
    let st = Command::new(bin)
        .env("LAYERTOMO_BITS", "64")
        .args([
            "conditioning",
            "--rho-lower",
            "0.05",
            "--rho-star",
            "0.5",
            "--n-max",
            "25",
            "--output",
            dir.path().join("z.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(4));
    // and an explicit --bits overrides the environment back to workable
    let st = Command::new(bin)
        .env("LAYERTOMO_BITS", "64")
        .args([
            "conditioning",
            "--rho-lower",
            "0.05",
            "--rho-star",
            "0.5",
            "--n-max",
            "25",
            "--bits",
            "512",
            "--output",
            dir.path().join("z.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0));
}
