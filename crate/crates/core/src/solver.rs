//! Explicit time integration of
//! `d_t f = div(A grad f - b f) + (1/n) Lap f` in flux form.
//!
//! The Landau flux is evaluated as `F = f (A a - B)` at cell centres, where
//! `a` is the gated central log-gradient and `B = (K_n Pi) * (f a)`. For
//! smooth positive `f` this is `A grad f - b f` up to `O(h^2)`; in discrete
//! form it conserves mass exactly, keeps the Maxwellian a fixed point of the
//! collision part and dissipates the discrete entropy at exactly the rate
//! [`crate::functionals::dissipation_single`]. Face fluxes are averages of
//! the two adjacent centre fluxes, boundary faces carry none, and the
//! diffusion uses the compact no-flux Laplacian.

use crate::coefficients::{log_gradient, CoefficientEngine, FluxCoefficients};
use crate::config::{RunConfig, Scheme};
use crate::error::{LandauError, Result};
use crate::estimates::{Provenance, TimeSeries};
use crate::functionals::{record, DiagnosticsRecord};
use crate::grid::{ScalarField, VelocityGrid};
use crate::initial_data::{mollify_and_floor, sample_datum};
use crate::io::Snapshot;
use crate::linalg::Sym3;

/// Relative negativity tolerated before aborting.
pub const POSITIVITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub scheme: Scheme,
    pub cfl_safety: f64,
    pub max_dt: f64,
    /// Steps between recomputations of `A` and `B`.
    pub refresh: usize,
    pub f_tol: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            scheme: Scheme::Rk2,
            cfl_safety: 0.5,
            max_dt: 0.01,
            refresh: 1,
            f_tol: 1e-14,
        }
    }
}

impl StepperConfig {
    pub fn from_run(c: &RunConfig) -> Self {
        StepperConfig {
            scheme: c.scheme,
            cfl_safety: c.cfl_safety,
            max_dt: c.max_dt,
            refresh: c.refresh,
            f_tol: c.f_tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub t: f64,
    pub f: ScalarField,
    /// Step size of the last step taken, 0 before the first.
    pub dt: f64,
    pub step_count: usize,
    /// Flux coefficients of `f`, with the step at which `A`, `B` were last
    /// recomputed.
    cache: Option<(usize, FluxCoefficients)>,
}

impl SolverState {
    pub fn new(f: ScalarField, t: f64) -> Self {
        SolverState {
            t,
            f,
            dt: 0.0,
            step_count: 0,
            cache: None,
        }
    }

    /// Flux coefficients of the current field, computing them if needed.
    pub fn flux(&mut self, engine: &CoefficientEngine, cfg: &StepperConfig) -> Result<&FluxCoefficients> {
        self.ensure_flux(engine, cfg)?;
        Ok(&self.cache.as_ref().expect("cached").1)
    }

    fn ensure_flux(&mut self, engine: &CoefficientEngine, cfg: &StepperConfig) -> Result<()> {
        if self.cache.is_none() {
            let fresh = engine.flux_coefficients(&self.f, cfg.f_tol)?;
            self.cache = Some((self.step_count, fresh));
        }
        Ok(())
    }
}

/// `div F_landau + (1/n) Lap f` for a field and its flux coefficients.
pub fn rhs(f: &ScalarField, flux: &FluxCoefficients, n: u32) -> Result<ScalarField> {
    let grid = *f.grid();
    if flux.a[0].len() != grid.len() {
        return Err(LandauError::GridMismatch(
            "flux coefficients do not match the field".into(),
        ));
    }
    let mut out = landau_divergence(f, flux);
    let diffusion = compact_laplacian(f);
    let inv_n = 1.0 / n as f64;
    for (o, d) in out.iter_mut().zip(&diffusion) {
        *o += inv_n * d;
    }
    Ok(ScalarField::from_vec_unchecked(grid, out))
}

/// Centre fluxes `f (A a - B)` per axis; zero where the log-gradient is
/// gated off.
pub fn center_fluxes(f: &ScalarField, flux: &FluxCoefficients) -> [Vec<f64>; 3] {
    let len = f.values().len();
    let mut out: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; len]);
    for i in 0..len {
        if !flux.log_grad.active[i] {
            continue;
        }
        let a = flux.log_grad.at(i);
        let m = Sym3::from_components(std::array::from_fn(|s| flux.a[s][i]));
        let aa = m.mul_vec(a);
        let fi = f.values()[i];
        for axis in 0..3 {
            out[axis][i] = fi * (aa[axis] - flux.drift[axis][i]);
        }
    }
    out
}

/// Discrete divergence of the Landau flux alone.
pub fn landau_divergence(f: &ScalarField, flux: &FluxCoefficients) -> Vec<f64> {
    let grid = *f.grid();
    let n = grid.cells();
    let h = grid.spacing();
    let fluxes = center_fluxes(f, flux);
    let strides = [1, n, n * n];
    let mut out = vec![0.0; grid.len()];
    for (idx, o) in out.iter_mut().enumerate() {
        let ijk = grid.unravel(idx);
        let mut div = 0.0;
        for axis in 0..3 {
            let s = strides[axis];
            let fl = &fluxes[axis];
            let plus = if ijk[axis] + 1 < n { 0.5 * (fl[idx] + fl[idx + s]) } else { 0.0 };
            let minus = if ijk[axis] > 0 { 0.5 * (fl[idx - s] + fl[idx]) } else { 0.0 };
            div += plus - minus;
        }
        *o = div / h;
    }
    out
}

/// Seven-point Laplacian with no flux through the boundary faces.
pub fn compact_laplacian(f: &ScalarField) -> Vec<f64> {
    let grid = *f.grid();
    let n = grid.cells();
    let values = f.values();
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let strides = [1, n, n * n];
    (0..grid.len())
        .map(|idx| {
            let ijk = grid.unravel(idx);
            let fi = values[idx];
            let mut acc = 0.0;
            for axis in 0..3 {
                let s = strides[axis];
                if ijk[axis] + 1 < n {
                    acc += values[idx + s] - fi;
                }
                if ijk[axis] > 0 {
                    acc += values[idx - s] - fi;
                }
            }
            acc * inv_h2
        })
        .collect()
}

/// `cfl_safety h^2 / (6 max lambda_max(A) + 6/n + h max |B|)`.
pub fn cfl_dt(flux: &FluxCoefficients, n: u32, h: f64, cfl_safety: f64) -> f64 {
    let len = flux.a[0].len();
    let mut lambda = 0.0f64;
    let mut drift = 0.0f64;
    for i in 0..len {
        let m = Sym3::from_components(std::array::from_fn(|s| flux.a[s][i]));
        lambda = lambda.max(m.eigenvalues()[2]);
        let b2: f64 = (0..3).map(|a| flux.drift[a][i].powi(2)).sum();
        drift = drift.max(b2.sqrt());
    }
    cfl_safety * h * h / (6.0 * lambda + 6.0 / n as f64 + h * drift)
}

fn check_state(f: &ScalarField, t: f64) -> Result<()> {
    let (min, max) = (f.min(), f.max());
    if !min.is_finite() || !max.is_finite() {
        return Err(LandauError::NonFinite { t });
    }
    if min < -POSITIVITY_TOL * max {
        return Err(LandauError::PositivityLost { t, min, max });
    }
    Ok(())
}

fn axpy(f: &ScalarField, dt: f64, k: &ScalarField) -> ScalarField {
    let values = f
        .values()
        .iter()
        .zip(k.values())
        .map(|(a, b)| a + dt * b)
        .collect();
    ScalarField::from_vec_unchecked(*f.grid(), values)
}

/// Flux coefficients for a stage field: fresh when `refresh` says so,
/// otherwise `A` and `B` are reused and only the log-gradient is updated.
fn stage_flux(
    engine: &CoefficientEngine,
    cfg: &StepperConfig,
    f: &ScalarField,
    stale: &FluxCoefficients,
    refresh_now: bool,
) -> Result<FluxCoefficients> {
    if refresh_now {
        engine.flux_coefficients(f, cfg.f_tol)
    } else {
        Ok(FluxCoefficients {
            a: stale.a.clone(),
            drift: stale.drift.clone(),
            log_grad: log_gradient(f, cfg.f_tol),
        })
    }
}

/// CFL step for the current state, capped by `max_dt`.
pub fn stable_dt(state: &mut SolverState, cfg: &StepperConfig, engine: &CoefficientEngine) -> Result<f64> {
    let h = engine.grid().spacing();
    let n = engine.n();
    let flux = state.flux(engine, cfg)?;
    Ok(cfl_dt(flux, n, h, cfg.cfl_safety).min(cfg.max_dt))
}

/// One step of size `min(cfl, max_dt, t_stop - t)`; a step cut short by
/// `t_stop` lands on it exactly.
pub fn advance(
    state: SolverState,
    cfg: &StepperConfig,
    engine: &CoefficientEngine,
    t_stop: f64,
) -> Result<SolverState> {
    let mut state = state;
    let dt = stable_dt(&mut state, cfg, engine)?;
    let remaining = t_stop - state.t;
    // absorb a rounding-sized remainder instead of leaving it for a next step
    if remaining <= dt + 1e-12 * t_stop.abs().max(1.0) {
        let mut next = advance_with_dt(state, cfg, engine, remaining)?;
        next.t = t_stop;
        Ok(next)
    } else {
        advance_with_dt(state, cfg, engine, dt)
    }
}

/// One step with a prescribed `dt`.
pub fn advance_with_dt(
    mut state: SolverState,
    cfg: &StepperConfig,
    engine: &CoefficientEngine,
    dt: f64,
) -> Result<SolverState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(LandauError::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let n = engine.n();
    let refresh = cfg.refresh.max(1);
    let refresh_step = state.step_count.is_multiple_of(refresh);
    if refresh_step {
        if let Some((at, _)) = &state.cache {
            if *at != state.step_count {
                state.cache = None;
            }
        }
    }
    state.flux(engine, cfg)?;
    let (base_step, flux0) = state.cache.take().expect("flux computed");
    let k1 = rhs(&state.f, &flux0, n)?;
    let stage = axpy(&state.f, dt, &k1);
    let (f_next, last_refresh, last_flux) = match cfg.scheme {
        Scheme::ExplicitEuler => (stage, base_step, flux0),
        Scheme::Rk2 => {
            let flux1 = stage_flux(engine, cfg, &stage, &flux0, refresh_step)?;
            let k2 = rhs(&stage, &flux1, n)?;
            let values = state
                .f
                .values()
                .iter()
                .zip(k1.values().iter().zip(k2.values()))
                .map(|(f, (a, b))| f + 0.5 * dt * (a + b))
                .collect();
            (
                ScalarField::from_vec_unchecked(*state.f.grid(), values),
                base_step,
                flux0,
            )
        }
    };
    let t = state.t + dt;
    check_state(&f_next, t)?;
    let step_count = state.step_count + 1;
    let cache = if step_count.is_multiple_of(refresh) {
        None
    } else {
        Some((
            last_refresh,
            stage_flux(engine, cfg, &f_next, &last_flux, false)?,
        ))
    };
    Ok(SolverState {
        t,
        f: f_next,
        dt,
        step_count,
        cache,
    })
}

/// Diagnostics and snapshots of a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub series: TimeSeries,
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
}

/// A run that stopped early, with everything produced before the failure.
#[derive(Debug)]
pub struct RunAborted {
    pub partial: Box<RunOutput>,
    pub error: LandauError,
}

impl std::fmt::Display for RunAborted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (after {} steps, {} records kept)",
            self.error,
            self.partial.steps,
            self.partial.series.records.len()
        )
    }
}

impl std::error::Error for RunAborted {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<LandauError> for RunAborted {
    fn from(error: LandauError) -> Self {
        RunAborted {
            partial: Box::new(RunOutput {
                series: TimeSeries {
                    k_list: Vec::new(),
                    records: Vec::new(),
                    provenance: Provenance::default(),
                },
                snapshots: Vec::new(),
                steps: 0,
            }),
            error,
        }
    }
}

/// Initial field of a run: sampled datum, optionally regularized.
pub fn initial_field(config: &RunConfig) -> Result<ScalarField> {
    let grid = config.grid()?;
    let f = sample_datum(&config.datum, &grid)?;
    if config.mollify {
        mollify_and_floor(&f, config.n)
    } else {
        Ok(f)
    }
}

pub fn provenance_for(config: &RunConfig) -> Provenance {
    let mut p = Provenance::default();
    p.insert("fingerprint", config.fingerprint());
    p.insert("n", config.n);
    p.insert("N", config.cells);
    p.insert("L", config.half_width);
    p.insert("scheme", config.scheme.name());
    p
}

/// Integrates the configured problem to `t_final`, recording every
/// `every` steps, at the start and at the end, and snapshotting at the
/// configured times (steps are shortened to land on them).
pub fn run(config: &RunConfig) -> std::result::Result<RunOutput, RunAborted> {
    config.validate()?;
    let grid = config.grid()?;
    let engine = CoefficientEngine::new(&grid, config.n)?;
    let f0 = initial_field(config)?;
    run_with_engine(config, &engine, f0)
}

/// As [`run`], with a prebuilt engine and initial field.
pub fn run_with_engine(
    config: &RunConfig,
    engine: &CoefficientEngine,
    f0: ScalarField,
) -> std::result::Result<RunOutput, RunAborted> {
    let cfg = StepperConfig::from_run(config);
    let mut out = RunOutput {
        series: TimeSeries {
            k_list: config.k_list.clone(),
            records: Vec::new(),
            provenance: provenance_for(config),
        },
        snapshots: Vec::new(),
        steps: 0,
    };
    let abort = |out: RunOutput, error: LandauError| RunAborted { partial: Box::new(out), error };
    let grid: VelocityGrid = *engine.grid();
    if let Err(e) = grid.ensure_same(f0.grid(), "initial field vs engine") {
        return Err(abort(out, e));
    }
    let mut state = SolverState::new(f0, 0.0);
    let mut pending_snaps: std::collections::VecDeque<f64> =
        config.snapshot_times.iter().cloned().collect();

    let take_record = |state: &mut SolverState, out: &mut RunOutput| -> Result<()> {
        let dt = stable_dt(state, &cfg, engine)?;
        let t = state.t;
        state.ensure_flux(engine, &cfg)?;
        let flux = &state.cache.as_ref().expect("cached").1;
        let r: DiagnosticsRecord = record(&state.f, t, dt, flux, &config.k_list, config.f_tol)?;
        out.series.records.push(r);
        Ok(())
    };
    let take_snapshots =
        |state: &SolverState, pending: &mut std::collections::VecDeque<f64>, out: &mut RunOutput| {
            while let Some(&ts) = pending.front() {
                if ts <= state.t + 1e-12 * state.t.abs().max(1.0) {
                    out.snapshots
                        .push(Snapshot::from_field(&state.f, config.n, state.t));
                    pending.pop_front();
                } else {
                    break;
                }
            }
        };

    if let Err(e) = take_record(&mut state, &mut out) {
        return Err(abort(out, e));
    }
    take_snapshots(&state, &mut pending_snaps, &mut out);
    let t_final = config.t_final;
    let min_step = 1e-12 * t_final.max(1.0);
    while t_final - state.t > min_step {
        let next_stop = pending_snaps.front().copied().unwrap_or(t_final).min(t_final);
        state = match advance(state, &cfg, engine, next_stop) {
            Ok(s) => s,
            Err(e) => return Err(abort(out, e)),
        };
        out.steps = state.step_count;
        take_snapshots(&state, &mut pending_snaps, &mut out);
        let done = t_final - state.t <= min_step;
        if state.step_count.is_multiple_of(config.every) || done {
            if let Err(e) = take_record(&mut state, &mut out) {
                return Err(abort(out, e));
            }
        }
    }
    Ok(out)
}

/// Worker count requested through `LANDAU_THREADS`, if any.
pub fn env_threads() -> Option<usize> {
    std::env::var("LANDAU_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
}

/// Runs `job` on a dedicated pool of `threads` workers.
pub fn with_threads<R: Send>(threads: usize, job: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

/// Runs `job` on a pool sized by `LANDAU_THREADS` when that is set.
pub fn with_thread_pool<R: Send>(job: impl FnOnce() -> R + Send) -> R {
    match env_threads() {
        Some(t) => with_threads(t, job),
        None => job(),
    }
}
