use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quasineutral::io::{read_diagnostics_csv, read_error_series_csv, read_mhd_diagnostics_csv, read_report, read_snapshots, SystemTag};
use quasineutral::limit::LambdaStatus;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quasineutral"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], config: Option<&Path>, output: Option<&Path>) -> Output {
    let mut cmd = bin();
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = output {
        cmd.arg("--output").arg(o);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

const SMALL_EP: &str = r#"
system = "ep"
[grid]
n = 16
[model]
lambda = 0.2
[solve]
t_end = 0.05
sample_interval = 0.025
"#;

#[test]
fn run_ep_writes_readable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ep.toml", SMALL_EP);
    let out_dir = dir.path().join("out");
    let out = run(&["run-ep"], Some(&cfg), Some(&out_dir));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let snaps = read_snapshots(&out_dir.join("ep_snapshots.qns")).unwrap();
    assert_eq!(snaps.header.system, SystemTag::Ep);
    assert_eq!(snaps.header.n, 16);
    assert_eq!(snaps.records.len(), 3);
    assert_eq!(snaps.records[2].time, 0.05);
    let diag = read_diagnostics_csv(&out_dir.join("ep_diagnostics.csv")).unwrap();
    assert_eq!(diag.len(), 3);
    assert!((diag[2].mass - diag[0].mass).abs() < 1e-12);
}

#[test]
fn run_ep_rejects_isothermal_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ep.toml", "[model]\ngamma = 1.0\n");
    let out = run(&["run-ep"], Some(&cfg), Some(dir.path()));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
}

#[test]
fn run_ep_reports_solvability() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_EP}[init]\ndensity_offset = 0.01\n");
    let cfg = write_config(dir.path(), "ep.toml", &text);
    let out = run(&["run-ep"], Some(&cfg), Some(dir.path()));
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_ep_band_violation_keeps_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = "[grid]\nn = 16\n[model]\nlambda = 0.5\n[solve]\nt_end = 0.5\ndensity_band = [0.99, 1.01]\n";
    let cfg = write_config(dir.path(), "ep.toml", text);
    let out = run(&["run-ep"], Some(&cfg), Some(dir.path()));
    assert_eq!(code(&out), 4);
    let snaps = read_snapshots(&dir.path().join("ep_snapshots.qns")).unwrap();
    assert!(snaps.records.last().unwrap().time < 0.5);
}

#[test]
fn config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "a.toml", "[grid]\nresolution = 32\n");
    assert_eq!(code(&run(&["run-ep"], Some(&unknown), None)), 2);
    let mismatch = write_config(dir.path(), "b.toml", "system = \"mhd\"\n");
    assert_eq!(code(&run(&["run-ep"], Some(&mismatch), Some(dir.path()))), 2);
    let two = write_config(dir.path(), "c.toml", "[model]\nlambda_list = [0.2, 0.1]\n");
    assert_eq!(code(&run(&["sweep"], Some(&two), Some(dir.path()))), 2);
    let missing = dir.path().join("missing.toml");
    assert_eq!(code(&run(&["run-ep"], Some(&missing), None)), 1);
}

#[test]
fn run_mhd_writes_readable_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mhd.toml", "[grid]\nn = 16\n[solve]\nt_end = 0.05\nsample_interval = 0.025\n");
    let out = run(&["run-mhd"], Some(&cfg), Some(dir.path()));
    assert_eq!(code(&out), 0);
    let snaps = read_snapshots(&dir.path().join("mhd_snapshots.qns")).unwrap();
    assert_eq!(snaps.header.system, SystemTag::Mhd);
    assert_eq!(snaps.header.fields.last().unwrap(), "p");
    let diag = read_mhd_diagnostics_csv(&dir.path().join("mhd_diagnostics.csv")).unwrap();
    assert!((diag[2].energy - diag[0].energy).abs() < 1e-8 * diag[0].energy);
}

const BAND_SWEEP: &str = r#"
system = "sweep"
[grid]
n = 32
[model]
lambda_list = [0.4, 0.1, 0.05, 0.025]
[solve]
t_end = 0.5
sample_interval = 0.025
density_band = [0.9, 1.1]
"#;

#[test]
fn sweep_records_band_exit_and_fits_survivors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", BAND_SWEEP);
    let out = run(&["sweep", "--workers", "2"], Some(&cfg), Some(dir.path()));
    let c = code(&out);
    assert!(c == 0 || c == 6, "{}", String::from_utf8_lossy(&out.stderr));

    let report = read_report(&dir.path().join("rate_report.json")).unwrap();
    assert_eq!(report.lambdas, vec![0.4, 0.1, 0.05, 0.025]);
    assert!(matches!(report.status[0], LambdaStatus::BandExit { .. }));
    assert!(report.sup_errors[0].is_none());
    assert!(report.sup_errors[1..].iter().all(|e| e.is_some()));
    assert!(report.slope.is_finite());
    assert_eq!(c == 0, report.pass);

    let rows = read_error_series_csv(&dir.path().join("errors_lambda_0.1.csv")).unwrap();
    assert_eq!(rows.len(), 21);
    let svg = std::fs::read_to_string(dir.path().join("rate_plot.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let text = "[grid]\nn = 16\n[model]\nlambda_list = [0.2, 0.1, 0.05]\n[solve]\nt_end = 0.1\nsample_interval = 0.025\n";
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sweep.toml", text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run(&["sweep", "--workers", "1"], Some(&cfg), Some(&a));
    run(&["sweep", "--workers", "3"], Some(&cfg), Some(&b));
    for name in ["errors_lambda_0.2.csv", "errors_lambda_0.1.csv", "errors_lambda_0.05.csv", "mhd_diagnostics.csv", "rate_report.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn check_passes_and_catches_mutations() {
    let out = run(&["check"], None, None);
    assert_eq!(code(&out), 0);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("12 of 12 checks passed"));

    let out = run(&["check", "--mutation", "flip-g2"], None, None);
    assert_eq!(code(&out), 7);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().any(|l| l.starts_with("symmetrizer symmetry") && l.ends_with("FAIL")));

    let out = run(&["check", "--mutation", "skip-dealias"], None, None);
    assert_eq!(code(&out), 7);
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().any(|l| l.starts_with("quasilinear form, high-amplitude state") && l.ends_with("FAIL")));
}

#[test]
fn order_on_equilibrium_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "order.toml", "[grid]\nn = 16\n[solve]\nt_end = 0.05\nsample_interval = 0.05\n[init]\npreset = \"uniform\"\n");
    let out = run(&["order"], Some(&cfg), None);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("degenerate"));
}

#[test]
fn bundled_configs_parse_and_validate() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for (file, system) in [
        ("sweep.toml", quasineutral_cli::System::Sweep),
        ("sweep-relaxed.toml", quasineutral_cli::System::Sweep),
        ("ep.toml", quasineutral_cli::System::Ep),
        ("mhd.toml", quasineutral_cli::System::Mhd),
        ("order.toml", quasineutral_cli::System::Order),
        ("check.toml", quasineutral_cli::System::Check),
    ] {
        let cfg = quasineutral_cli::RunConfig::load(&root.join(file)).unwrap();
        cfg.validate(system).unwrap_or_else(|e| panic!("{file}: {e}"));
    }
}
