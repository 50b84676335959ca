use std::fs;
use std::path::Path;
use std::process::Command;

use proxconnect::cli::{checkpoint, cmd_quantize, cmd_run, cmd_sweep, ExperimentConfig, METRICS_COLUMNS};
use proxconnect::quantizers::QuantizationGrid;
use proxconnect::Error;

const GOLDEN_HEADER: &str = "t,eta,lambda,pi,sharpness,loss_continuous,loss_quantized,grad_norm,accuracy_quantized";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_proxconnect"))
}

fn quad_bc(steps: u64) -> ExperimentConfig {
    ExperimentConfig::parse(&format!(
        "problem.kind = quadratic\nproblem.dim = 3\noptimizer.kind = bc\nquantizer.kind = projector\nrun.steps = {steps}"
    ))
    .unwrap()
}

#[test]
fn csv_header_is_golden() {
    assert_eq!(METRICS_COLUMNS.join(","), GOLDEN_HEADER);
    let dir = tempfile::tempdir().unwrap();
    cmd_run(&quad_bc(100), Some(dir.path())).unwrap();
    let text = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(GOLDEN_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101);
    assert!(rows[0].starts_with("0,"));
    assert!(rows[100].starts_with("100,"));
    assert!(rows.iter().all(|r| r.split(',').count() == 9));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quad_bc(50);
    cmd_run(&cfg, Some(&dir.path().join("a"))).unwrap();
    cmd_run(&cfg, Some(&dir.path().join("b"))).unwrap();
    for f in ["metrics.csv", "checkpoint.pckpt", "final.txt"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn divergence_flushes_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quad_bc(100);
    cfg.set("quantizer.kind", "identity").unwrap();
    cfg.set("schedule.eta0", "50").unwrap();
    let err = cmd_run(&cfg, Some(dir.path())).unwrap_err();
    assert!(matches!(err, Error::Diverged { .. }), "{err:?}");
    let rows = fs::read_to_string(dir.path().join("metrics.csv")).unwrap().lines().count();
    assert!(rows > 1 && rows < 102, "{rows}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ok");
    let st = bin().args(["run", "--set", "run.steps=5", "--out"]).arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(0));

    let st = bin().args(["run", "--set", "quantizer.rho=1", "--out"]).arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("quantizer.rho"));

    let st = bin().args(["run", "--set", "quantizer.kind=identity", "--set", "schedule.eta0=50", "--out"]).arg(&out).output().unwrap().status;
    assert_eq!(st.code(), Some(2));

    let st = bin().args(["verify", "--suite", "axioms", "--mutation", "slope-sign"]).output().unwrap();
    assert_eq!(st.status.code(), Some(3));

    let st = bin().args(["verify", "--suite", "nope"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    let err = String::from_utf8_lossy(&st.stderr);
    assert!(err.contains("axioms") && err.contains("example43"), "{err}");

    assert_eq!(bin().args(["frobnicate"]).output().unwrap().status.code(), Some(1));
}

#[test]
fn verify_all_passes() {
    let out = bin().args(["verify", "--suite", "all"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn config_file_and_seed_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# small run\nproblem.dim = 2\nrun.steps = 3\n").unwrap();
    let st = bin().arg("run").arg("--config").arg(&cfg).args(["--seed", "9", "--out"]).arg(dir.path().join("o")).output().unwrap().status;
    assert_eq!(st.code(), Some(0));
    let state = checkpoint::load(&dir.path().join("o").join("checkpoint.pckpt")).unwrap();
    assert_eq!(state.rng_seed, 9);
    assert_eq!(state.step, 3);
}

fn run_to(dir: &Path, extra: &[(&str, &str)]) -> std::path::PathBuf {
    let mut cfg = ExperimentConfig::parse("problem.kind = mlp\ndata.samples = 60\nmlp.hidden = 4\nrun.steps = 20").unwrap();
    for (k, v) in extra {
        cfg.set(k, v).unwrap();
    }
    cmd_run(&cfg, Some(dir)).unwrap();
    dir.join("checkpoint.pckpt")
}

#[test]
fn quantize_hard_gives_grid_values() {
    let dir = tempfile::tempdir().unwrap();
    let ck = run_to(&dir.path().join("r"), &[("quantizer.grid", "ternary")]);
    let cfg = ExperimentConfig::parse("problem.kind = mlp\ndata.samples = 60\nmlp.hidden = 4\nquantizer.grid = ternary").unwrap();
    let out = dir.path().join("q.pckpt");
    let st = cmd_quantize(&cfg, &ck, &out).unwrap();
    let g = QuantizationGrid::ternary();
    for group in st.w_star.groups.iter().filter(|g| g.name.starts_with('W')) {
        assert!(group.values.iter().all(|v| g.levels().contains(v)), "{}", group.name);
    }
    assert_eq!(checkpoint::load(&out).unwrap(), st);
}

#[test]
fn quantize_identity_is_noop() {
    let dir = tempfile::tempdir().unwrap();
    let ck = run_to(&dir.path().join("r"), &[]);
    let cfg = ExperimentConfig::parse("problem.kind = mlp\ndata.samples = 60\nmlp.hidden = 4\nquantizer.kind = identity").unwrap();
    let out = dir.path().join("q.pckpt");
    cmd_quantize(&cfg, &ck, &out).unwrap();
    assert_eq!(fs::read(&ck).unwrap(), fs::read(&out).unwrap());
}

#[test]
fn quantize_binary_matches_project() {
    let dir = tempfile::tempdir().unwrap();
    let ck = run_to(&dir.path().join("r"), &[]);
    let before = checkpoint::load(&ck).unwrap();
    let cfg = ExperimentConfig::parse(
        "problem.kind = mlp\ndata.samples = 60\nmlp.hidden = 4\nquantizer.kind = projector\nquantizer.grid = binary",
    )
    .unwrap();
    let after = cmd_quantize(&cfg, &ck, &dir.path().join("q.pckpt")).unwrap();
    let g = QuantizationGrid::binary();
    for (a, b) in before.w_star.groups.iter().zip(&after.w_star.groups) {
        for (x, y) in a.values.iter().zip(&b.values) {
            let want = if a.name.starts_with('W') { g.project(*x).unwrap() } else { *x };
            assert_eq!(*y, want);
        }
    }
}

#[test]
fn sweep_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(
        "problem.kind = logistic\ndata.samples = 60\nrun.steps = 20\nsweep.rho0 = 0.01, 0.1, 1\nsweep.seeds = 1, 2, 3",
    )
    .unwrap();
    let rows = cmd_sweep(&cfg, Some(dir.path()), 2).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.runs == 3 && r.acc_mean.is_some()));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(dir.path().join("pc_rho0.1_seed2").join("metrics.csv").exists());
    // thread count does not change the numbers
    assert_eq!(cmd_sweep(&cfg, None, 1).unwrap(), rows);
}

#[test]
fn sweep_empty_grid_is_an_error() {
    let cfg = ExperimentConfig::parse("run.steps = 5").unwrap();
    assert!(cmd_sweep(&cfg, None, 1).is_err());
    let cfg = ExperimentConfig::parse("run.steps = 5\nsweep.rho0 =").unwrap();
    assert!(matches!(cmd_sweep(&cfg, None, 1), Err(Error::Config { .. })));
}

#[test]
fn config_errors_name_the_key() {
    let e = ExperimentConfig::parse("run.steps = lots").and_then(|c| cmd_run(&c, None)).unwrap_err();
    assert!(e.to_string().contains("run.steps"), "{e}");
    let e = ExperimentConfig::parse("quantizer.grids = binary").unwrap_err();
    assert!(e.to_string().contains("quantizer.grids"), "{e}");
}
