//! Well-prepared data, distance to the limit, and the λ sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ep::{advance_fixed, poisson_grad_phi, run_ep, stable_dt, RunStatus, SolveConfig};
use crate::error::{Error, Result};
use crate::mhd::{run_mhd, MhdTrajectory};
use crate::models::{enthalpy_derivative, relative_divergence, MhdState, ModelParams, PlasmaState};
use crate::spectral::{Grid, ScalarField, VectorField};
use crate::time::RkState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// `n = 1`, `u = u⁰`, `B = B⁰`.
    Exact,
    /// `n = 1 + λ² δn`, `u = u⁰ + λ δu`, `B = B⁰ + λ δB`.
    Relaxed,
}

/// Fixed perturbation used by [`InitMode::Relaxed`].
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub dn: ScalarField,
    pub du: VectorField,
    pub db: VectorField,
}

impl Perturbation {
    /// Smooth low-mode perturbation, each part scaled to unit `H^s` norm.
    pub fn standard(grid: &Grid, s: u32) -> Self {
        let dn = grid.field_from_fn(|x| (x[0] + x[1]).cos());
        let du = grid.vector_from_fn(|x| [x[1].cos(), x[0].sin(), 0.5 * (x[0] + x[1]).cos()]);
        let db = grid.vector_from_fn(|x| [(2.0 * x[1]).sin(), x[0].cos(), 0.5 * (x[0] - x[1]).sin()]);
        Self {
            dn: dn.scale(1.0 / grid.sobolev_norm(&dn, s)),
            du: du.scale(1.0 / grid.sobolev_norm(&du, s)),
            db: db.scale(1.0 / grid.sobolev_norm(&db, s)),
        }
    }
}

/// Taylor-Green velocity and an Orszag-Tang-type field, both solenoidal.
pub fn default_initial_fields(grid: &Grid) -> (VectorField, VectorField) {
    let u0 = grid.vector_from_fn(|x| [-x[0].cos() * x[1].sin(), x[0].sin() * x[1].cos(), 0.0]);
    let b0 = grid.vector_from_fn(|x| [-0.5 * x[1].sin(), 0.5 * (2.0 * x[0]).sin(), 0.0]);
    (u0, b0)
}

fn require_solenoidal(grid: &Grid, v: &VectorField, name: &str) -> Result<()> {
    let div = relative_divergence(grid, v);
    if div > 1e-12 {
        return Err(Error::Precondition(format!("{name} is not solenoidal (relative divergence {div:e})")));
    }
    Ok(())
}

/// Initial data for the compressible run aligned with the limit data.
///
/// Relaxed mode uses [`Perturbation::standard`] at `H²`.
pub fn well_prepared_init(grid: &Grid, u0: &VectorField, b0: &VectorField, lambda: f64, mode: InitMode) -> Result<PlasmaState> {
    match mode {
        InitMode::Exact => {
            require_solenoidal(grid, u0, "initial velocity")?;
            require_solenoidal(grid, b0, "initial magnetic field")?;
            Ok(PlasmaState {
                n: ScalarField::constant(grid.shape(), 1.0),
                u: u0.clone(),
                b: b0.clone(),
            })
        }
        InitMode::Relaxed => well_prepared_relaxed(grid, u0, b0, lambda, &Perturbation::standard(grid, 2)),
    }
}

/// Relaxed data with an explicit perturbation.
pub fn well_prepared_relaxed(
    grid: &Grid,
    u0: &VectorField,
    b0: &VectorField,
    lambda: f64,
    pert: &Perturbation,
) -> Result<PlasmaState> {
    require_solenoidal(grid, u0, "initial velocity")?;
    require_solenoidal(grid, b0, "initial magnetic field")?;
    require_solenoidal(grid, &pert.du, "velocity perturbation")?;
    require_solenoidal(grid, &pert.db, "field perturbation")?;
    let mean = pert.dn.mean();
    if mean.abs() > 1e-12 {
        return Err(Error::Precondition(format!("density perturbation has mean {mean:e}")));
    }
    let mut u = u0.clone();
    u.axpy(lambda, &pert.du);
    let mut b = b0.clone();
    b.axpy(lambda, &pert.db);
    let state = PlasmaState {
        n: pert.dn.map(|v| 1.0 + lambda * lambda * v),
        u,
        b,
    };
    state.check_invariants(grid)?;
    Ok(state)
}

/// `H^s` distances `‖n−1‖`, `‖u−u⁰‖`, `‖B−B⁰‖` and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub n: f64,
    pub u: f64,
    pub b: f64,
    pub total: f64,
}

fn same_grid(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

pub fn error_norms(grid: &Grid, w: &PlasmaState, reference: &MhdState, s: u32) -> Result<ErrorNorms> {
    same_grid(&w.n, &reference.p)?;
    if w.n.shape() != grid.shape() {
        return Err(Error::GridMismatch("state does not live on the grid".into()));
    }
    let n = grid.sobolev_norm(&w.n.map(|v| v - 1.0), s);
    let u = grid.sobolev_norm(&w.u.sub(&reference.u), s);
    let b = grid.sobolev_norm(&w.b.sub(&reference.b), s);
    Ok(ErrorNorms { n, u, b, total: n + u + b })
}

/// `∇Φ = λ(∇φ + ∇p⁰)`.
pub fn modulated_potential_gradient(grid: &Grid, grad_phi: &VectorField, reference: &MhdState, lambda: f64) -> VectorField {
    grad_phi.add(&grid.gradient(&reference.p)).scale(lambda)
}

fn multi_indices(dim: usize, max_order: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in 0..=max_order {
        for b in 0..=max_order - a {
            if dim == 2 {
                out.push([a, b, 0]);
            } else {
                for c in 0..=max_order - a - b {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// `Σ_{|α|≤m} ∫ ∂^αEᵀ A₀(n) ∂^αE + |∂^α∇Φ|² dx` with `E = (n−1, u−u⁰, B−B⁰)`.
pub fn modulated_energy(
    grid: &Grid,
    w: &PlasmaState,
    reference: &MhdState,
    grad_phi: &VectorField,
    params: &ModelParams,
    max_order: u32,
) -> Result<f64> {
    if max_order > params.sobolev_index {
        return Err(Error::Parameter(format!(
            "max_order {max_order} exceeds the Sobolev index {}",
            params.sobolev_index
        )));
    }
    same_grid(&w.n, &reference.p)?;
    let hp = w
        .n
        .as_slice()
        .iter()
        .map(|&n| enthalpy_derivative(n, params.gamma))
        .collect::<Result<Vec<_>>>()?;
    let hp = ScalarField::from_vec(w.n.shape(), hp);

    let en = w.n.map(|v| v - 1.0);
    let eu = w.u.sub(&reference.u);
    let eb = w.b.sub(&reference.b);
    let gp = modulated_potential_gradient(grid, grad_phi, reference, params.lambda);

    let mut total = 0.0;
    for alpha in multi_indices(grid.dim(), max_order) {
        let d = |f: &ScalarField| grid.partial(f, alpha);
        let dn = d(&en);
        total += grid.integrate(&dn.mul(&dn).mul(&hp));
        for k in 0..3 {
            let du = d(&eu.c[k]);
            total += grid.integrate(&du.mul(&du).mul(&w.n));
            let db = d(&eb.c[k]);
            total += grid.integrate(&db.mul(&db));
            let dg = d(&gp.c[k]);
            total += grid.integrate(&dg.mul(&dg));
        }
    }
    Ok(total)
}

/// `(‖E‖_s + ‖∇Φ‖_s) / λ`.
pub fn distance_ratio(grid: &Grid, w: &PlasmaState, reference: &MhdState, grad_phi: &VectorField, lambda: f64, s: u32) -> f64 {
    let en = w.n.map(|v| v - 1.0);
    let eu = w.u.sub(&reference.u);
    let eb = w.b.sub(&reference.b);
    let e = [&en, &eu.c[0], &eu.c[1], &eu.c[2], &eb.c[0], &eb.c[1], &eb.c[2]];
    let gp = modulated_potential_gradient(grid, grad_phi, reference, lambda);
    (grid.sobolev_norm(&e, s) + grid.sobolev_norm(&gp, s)) / lambda
}

/// Outcome of one λ run inside a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LambdaStatus {
    Completed,
    BandExit { time: f64, n_min: f64, n_max: f64 },
    BlowUp { time: f64 },
    Failed { message: String },
}

impl LambdaStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, LambdaStatus::Completed)
    }
}

/// Distance to the limit along one compressible run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSeries {
    pub lambda: f64,
    pub times: Vec<f64>,
    pub err_n: Vec<f64>,
    pub err_u: Vec<f64>,
    pub err_b: Vec<f64>,
    pub err_total: Vec<f64>,
    pub sup_err: f64,
    pub energy_series: Vec<f64>,
    pub d_series: Vec<f64>,
    pub status: LambdaStatus,
}

impl ErrorSeries {
    pub fn empty(lambda: f64, status: LambdaStatus) -> Self {
        Self {
            lambda,
            times: Vec::new(),
            err_n: Vec::new(),
            err_u: Vec::new(),
            err_b: Vec::new(),
            err_total: Vec::new(),
            sup_err: 0.0,
            energy_series: Vec::new(),
            d_series: Vec::new(),
            status,
        }
    }

    pub fn d_max(&self) -> f64 {
        self.d_series.iter().copied().fold(0.0, f64::max)
    }

    fn push(&mut self, time: f64, e: ErrorNorms, energy: f64, d: f64) {
        self.times.push(time);
        self.err_n.push(e.n);
        self.err_u.push(e.u);
        self.err_b.push(e.b);
        self.err_total.push(e.total);
        self.sup_err = self.sup_err.max(e.total);
        self.energy_series.push(energy);
        self.d_series.push(d);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_loglog(pairs: &[(f64, f64)]) -> Result<LogLogFit> {
    if pairs.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 points, got {}", pairs.len())));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Fit(format!("nonpositive point ({x}, {y})")));
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(LogLogFit { slope, intercept, r_squared })
}

/// Fitted rate of `sup_err` against `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Sorted by decreasing λ.
    pub lambdas: Vec<f64>,
    /// `None` for runs that did not complete.
    pub sup_errors: Vec<Option<f64>>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub pass: bool,
    pub window: (f64, f64),
    /// `sup_err` strictly decreases along the surviving λ.
    pub monotone: bool,
    pub status: Vec<LambdaStatus>,
}

/// Minimum number of completed runs for a rate fit.
pub const MIN_FIT_POINTS: usize = 3;

impl RateReport {
    pub fn from_entries(entries: &[(f64, Option<f64>, LambdaStatus)], window: (f64, f64)) -> Result<Self> {
        let mut entries = entries.to_vec();
        entries.sort_by(|a, b| b.0.total_cmp(&a.0));
        let survivors: Vec<(f64, f64)> = entries.iter().filter_map(|(l, e, _)| e.map(|e| (*l, e))).collect();
        if survivors.len() < MIN_FIT_POINTS {
            return Err(Error::Fit(format!(
                "{} surviving runs, at least {MIN_FIT_POINTS} required",
                survivors.len()
            )));
        }
        let fit = fit_loglog(&survivors)?;
        let monotone = survivors.windows(2).all(|w| w[1].1 < w[0].1);
        Ok(Self {
            lambdas: entries.iter().map(|e| e.0).collect(),
            sup_errors: entries.iter().map(|e| e.1).collect(),
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            pass: fit.slope.is_finite() && fit.slope >= window.0 && fit.slope <= window.1,
            window,
            monotone,
            status: entries.into_iter().map(|e| e.2).collect(),
        })
    }
}

/// Everything a sweep needs besides the grid and the limit data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambdas: Vec<f64>,
    /// `lambda` is overwritten per run; `sobolev_index` sets the error norm.
    pub params: ModelParams,
    pub solve: SolveConfig,
    pub mode: InitMode,
    pub max_order: u32,
    pub window: (f64, f64),
    pub workers: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.len() < MIN_FIT_POINTS {
            return Err(Error::Config(format!("a sweep needs at least {MIN_FIT_POINTS} lambda values")));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0 && l <= 1.0)) {
            return Err(Error::Config("lambda values must lie in (0, 1]".into()));
        }
        if self.lambdas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("lambda_list must be strictly decreasing".into()));
        }
        if self.max_order > self.params.sobolev_index {
            return Err(Error::Config("max_order must not exceed the Sobolev index".into()));
        }
        if !(self.window.0 < self.window.1) {
            return Err(Error::Config("rate window must be an increasing pair".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        self.params.validate()?;
        self.solve.validate()
    }
}

pub struct SweepOutcome {
    pub report: RateReport,
    pub series: Vec<ErrorSeries>,
    pub reference: MhdTrajectory,
}

/// Errors, modulated energy and `D` along one compressible run.
pub fn measure_run(
    grid: &Grid,
    u0: &VectorField,
    b0: &VectorField,
    reference: &MhdTrajectory,
    params: &ModelParams,
    solve: &SolveConfig,
    mode: InitMode,
    max_order: u32,
) -> Result<ErrorSeries> {
    let initial = well_prepared_init(grid, u0, b0, params.lambda, mode)?;
    let solve = SolveConfig {
        snapshot_stride: 1,
        ..*solve
    };
    let traj = run_ep(grid, &initial, params, &solve)?;
    let status = match traj.status {
        RunStatus::Completed => LambdaStatus::Completed,
        RunStatus::BandExit { time, n_min, n_max } => LambdaStatus::BandExit { time, n_min, n_max },
    };
    let mut series = ErrorSeries::empty(params.lambda, status);
    let s = params.sobolev_index;
    for snap in &traj.snapshots {
        let Some(r) = reference.at_time(snap.time) else {
            continue;
        };
        let e = error_norms(grid, &snap.state, &r.state, s)?;
        let energy = modulated_energy(grid, &snap.state, &r.state, &snap.grad_phi, params, max_order)?;
        let d = distance_ratio(grid, &snap.state, &r.state, &snap.grad_phi, params.lambda, s);
        series.push(snap.time, e, energy, d);
    }
    Ok(series)
}

/// One reference run, then one compressible run per λ on `workers` threads.
pub fn sweep(grid: &Grid, u0: &VectorField, b0: &VectorField, config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let reference_solve = SolveConfig {
        snapshot_stride: 1,
        ..config.solve
    };
    let reference = run_mhd(grid, u0, b0, &reference_solve, config.params.dealias)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let series: Vec<ErrorSeries> = pool.install(|| {
        config
            .lambdas
            .par_iter()
            .map(|&lambda| {
                let params = config.params.with_lambda(lambda);
                match measure_run(grid, u0, b0, &reference, &params, &config.solve, config.mode, config.max_order) {
                    Ok(s) => s,
                    Err(Error::BlowUp { time }) => ErrorSeries::empty(lambda, LambdaStatus::BlowUp { time }),
                    Err(e) => ErrorSeries::empty(
                        lambda,
                        LambdaStatus::Failed {
                            message: e.to_string(),
                        },
                    ),
                }
            })
            .collect()
    });

    let entries: Vec<_> = series
        .iter()
        .map(|s| {
            let sup = s.status.is_completed().then_some(s.sup_err);
            (s.lambda, sup, s.status.clone())
        })
        .collect();
    let report = RateReport::from_entries(&entries, config.window)?;
    Ok(SweepOutcome {
        report,
        series,
        reference,
    })
}

/// Result of the dt, dt/2, dt/4 self-convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderEstimate {
    Order { order: f64, coarse_diff: f64, fine_diff: f64 },
    /// Step-size differences vanish: the data evolve exactly.
    Degenerate,
}

fn state_distance(grid: &Grid, a: &PlasmaState, b: &PlasmaState) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    grid.sobolev_norm(&d.components(), 0)
}

/// Observed RK4 order on `[0, t_end]` starting from the stable step of
/// `initial`.
pub fn temporal_order_check(grid: &Grid, initial: &PlasmaState, params: &ModelParams, config: &SolveConfig) -> Result<OrderEstimate> {
    params.validate()?;
    config.validate()?;
    poisson_grad_phi(grid, &initial.n, params.lambda)?;
    let dt0 = stable_dt(initial, params, grid, config)?;
    let steps = (config.t_end / dt0 - 1e-9).ceil().max(1.0) as usize;
    let dt = config.t_end / steps as f64;
    let x1 = advance_fixed(grid, initial, params, dt, steps)?;
    let x2 = advance_fixed(grid, initial, params, dt / 2.0, 2 * steps)?;
    let x4 = advance_fixed(grid, initial, params, dt / 4.0, 4 * steps)?;
    let coarse_diff = state_distance(grid, &x1, &x2);
    let fine_diff = state_distance(grid, &x2, &x4);
    let scale = grid.sobolev_norm(&x4.components(), 0);
    let floor = 1e-13 * scale.max(1.0);
    if coarse_diff <= floor || fine_diff <= floor {
        return Ok(OrderEstimate::Degenerate);
    }
    Ok(OrderEstimate::Order {
        order: (coarse_diff / fine_diff).log2(),
        coarse_diff,
        fine_diff,
    })
}
