//! Subcommand implementations behind the `quasineutral` binary.

pub mod config;

use std::path::{Path, PathBuf};

use quasineutral::checks::{run_checks, Mutation};
use quasineutral::io;
use quasineutral::limit::{temporal_order_check, well_prepared_init, OrderEstimate};
use quasineutral::{run_ep, run_mhd, sweep, Error, PlasmaState, Result, RunStatus, SweepConfig};

pub use config::{RunConfig, System};

/// Stable process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const SOLVABILITY: u8 = 3;
    pub const BAND_VIOLATION: u8 = 4;
    pub const BLOW_UP: u8 = 5;
    pub const RATE_FAIL: u8 = 6;
    pub const CHECK_FAIL: u8 = 7;
}

pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Format(_) => exit::IO,
        Error::Solvability { .. } => exit::SOLVABILITY,
        Error::Vacuum { .. } => exit::BAND_VIOLATION,
        Error::BlowUp { .. } => exit::BLOW_UP,
        Error::Fit(_) => exit::RATE_FAIL,
        Error::Config(_)
        | Error::Parameter(_)
        | Error::Axis { .. }
        | Error::GridMismatch(_)
        | Error::Precondition(_) => exit::CONFIG,
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

fn output_dir(cfg: &RunConfig, o: &Overrides) -> Result<PathBuf> {
    let dir = o.output.clone().unwrap_or_else(|| cfg.output.dir.clone());
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn initial_state(cfg: &RunConfig) -> Result<(quasineutral::Grid, PlasmaState)> {
    let grid = cfg.grid()?;
    let (u0, b0) = cfg.initial_fields(&grid);
    let mut w = well_prepared_init(&grid, &u0, &b0, cfg.lambda(), cfg.init.mode)?;
    let offset = cfg.init.density_offset;
    if offset != 0.0 {
        w.n = w.n.map(|v| v + offset);
    }
    Ok((grid, w))
}

fn written(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn cmd_run_ep(cfg: &RunConfig, o: &Overrides) -> Result<u8> {
    cfg.validate(System::Ep)?;
    let (grid, init) = initial_state(cfg)?;
    let params = cfg.params();
    let solve = cfg.solve();
    let traj = run_ep(&grid, &init, &params, &solve)?;
    let dir = output_dir(cfg, o)?;
    let snapshots = dir.join("ep_snapshots.qns");
    io::write_ep_snapshots(&snapshots, &grid, &params, &solve, &traj)?;
    written(&snapshots);
    let diag = dir.join("ep_diagnostics.csv");
    io::write_diagnostics_csv(&diag, &traj.diagnostics)?;
    written(&diag);
    match traj.status {
        RunStatus::Completed => {
            println!("completed t = {} in {} steps", solve.t_end, traj.steps);
            Ok(exit::OK)
        }
        RunStatus::BandExit { time, n_min, n_max } => {
            eprintln!("density left the band at t = {time}: n in [{n_min}, {n_max}]");
            Ok(exit::BAND_VIOLATION)
        }
    }
}

pub fn cmd_run_mhd(cfg: &RunConfig, o: &Overrides) -> Result<u8> {
    cfg.validate(System::Mhd)?;
    let grid = cfg.grid()?;
    let (u0, b0) = cfg.initial_fields(&grid);
    let solve = cfg.solve();
    let traj = run_mhd(&grid, &u0, &b0, &solve, cfg.model.dealias)?;
    let dir = output_dir(cfg, o)?;
    let snapshots = dir.join("mhd_snapshots.qns");
    io::write_mhd_snapshots(&snapshots, &grid, &solve, &traj)?;
    written(&snapshots);
    let diag = dir.join("mhd_diagnostics.csv");
    io::write_mhd_diagnostics_csv(&diag, &traj.diagnostics)?;
    written(&diag);
    println!("completed t = {} in {} steps", solve.t_end, traj.steps);
    Ok(exit::OK)
}

pub fn cmd_sweep(cfg: &RunConfig, o: &Overrides) -> Result<u8> {
    cfg.validate(System::Sweep)?;
    let grid = cfg.grid()?;
    let (u0, b0) = cfg.initial_fields(&grid);
    let lambdas = cfg.lambdas();
    let workers = o
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, lambdas.len());
    let sc = SweepConfig {
        lambdas,
        params: cfg.params(),
        solve: cfg.solve(),
        mode: cfg.init.mode,
        max_order: cfg.metrics.max_order,
        window: cfg.window(),
        workers,
    };
    let out = sweep(&grid, &u0, &b0, &sc)?;
    let dir = output_dir(cfg, o)?;
    for s in &out.series {
        if s.times.is_empty() {
            continue;
        }
        let path = dir.join(format!("errors_lambda_{}.csv", s.lambda));
        io::write_error_series_csv(&path, s)?;
        written(&path);
    }
    let mhd = dir.join("mhd_diagnostics.csv");
    io::write_mhd_diagnostics_csv(&mhd, &out.reference.diagnostics)?;
    written(&mhd);
    let report = dir.join("rate_report.json");
    io::write_report(&report, &out.report)?;
    written(&report);
    let plot = dir.join("rate_plot.svg");
    io::write_rate_plot(&plot, &out.report)?;
    written(&plot);

    let r = &out.report;
    for ((l, e), st) in r.lambdas.iter().zip(&r.sup_errors).zip(&r.status) {
        match e {
            Some(e) => println!("lambda {l:<8} sup_err {e:.6e}"),
            None => println!("lambda {l:<8} failed: {st:?}"),
        }
    }
    println!(
        "slope {:.4} intercept {:.4} R^2 {:.4} window [{}, {}] -> {}",
        r.slope,
        r.intercept,
        r.r_squared,
        r.window.0,
        r.window.1,
        if r.pass { "pass" } else { "fail" }
    );
    Ok(if r.pass { exit::OK } else { exit::RATE_FAIL })
}

pub fn cmd_check(cfg: &RunConfig, mutation: Option<Mutation>) -> Result<u8> {
    cfg.validate(System::Check)?;
    let results = run_checks(mutation, cfg.seed())?;
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    println!("{:<width$}  {:>10}  {:>10}  result", "check", "value", "tolerance");
    for r in &results {
        println!(
            "{:<width$}  {:>10.3e}  {:>10.1e}  {}",
            r.name,
            r.value,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" }
        );
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} checks passed", results.len() - failed, results.len());
    Ok(if failed == 0 { exit::OK } else { exit::CHECK_FAIL })
}

/// Accepted observed order for smooth data.
pub const ORDER_WINDOW: (f64, f64) = (3.5, 4.5);

pub fn cmd_order(cfg: &RunConfig) -> Result<u8> {
    cfg.validate(System::Order)?;
    let (grid, init) = initial_state(cfg)?;
    match temporal_order_check(&grid, &init, &cfg.params(), &cfg.solve())? {
        OrderEstimate::Degenerate => {
            println!("degenerate (exact): step-size differences vanish");
            Ok(exit::OK)
        }
        OrderEstimate::Order {
            order,
            coarse_diff,
            fine_diff,
        } => {
            println!("observed order {order:.4} (differences {coarse_diff:.3e}, {fine_diff:.3e})");
            let ok = order >= ORDER_WINDOW.0 && order <= ORDER_WINDOW.1;
            Ok(if ok { exit::OK } else { exit::CHECK_FAIL })
        }
    }
}
