//! Closed-loop orchestration: plant stepping, triggering, identification,
//! gain recomputation and logging.

mod batch;
mod config;

pub use batch::{run_batch, x2_sin_family, BatchOutcome, Histogram};
pub use config::{ControlMode, InitialCondition, ScenarioConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identifier::{assemble_modes, estimate, maybe_fix_initial_estimate, window_start, Batch, GainContext};
use crate::kernels::{compute_gains, solve_h, GainSet, KernelParams};
use crate::plant::{l2_norm, CrankNicolson, PlantState};
use crate::scalar::Real;
use crate::theta::Estimate;
use crate::trigger::{check_trigger, deviation, step_m, TriggerState};

/// One logged plant step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow<T> {
    pub t: T,
    pub zeta: T,
    pub u_norm: T,
    pub u0: T,
    pub u1: T,
    pub ud: T,
    pub uc: T,
    pub d2: T,
    /// Threshold `−ξ m`.
    pub xi_m: T,
    pub m: T,
    /// Estimate in force after this step.
    pub estimate: Estimate<T>,
}

/// What fired an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerCause {
    Threshold,
    MaxDwell,
}

/// Identifier diagnostics at an event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentifierDiagnostics<T> {
    pub mu: T,
    pub samples: usize,
    pub rank: usize,
    pub sigma_max: T,
    pub sigma_min: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord<T> {
    /// Event index `i ≥ 1` (`t_0 = 0` is the initial sample, not an event).
    pub index: usize,
    pub t: T,
    pub dwell: T,
    pub cause: TriggerCause,
    /// `d²` just before the resample.
    pub d2_before: T,
    /// `−ξm` at the event.
    pub threshold: T,
    pub estimate: Estimate<T>,
    pub held_input: T,
    pub gains_recomputed: bool,
    pub identifier: IdentifierDiagnostics<T>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryLog<T> {
    pub rows: Vec<TrajectoryRow<T>>,
    pub events: Vec<EventRecord<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub event_count: usize,
    pub min_dwell: Option<T>,
    pub mean_dwell: Option<T>,
    pub final_u_norm: T,
    pub final_abs_zeta: T,
    /// `max_t (‖u[t]‖ + |ζ(t)|)`.
    pub peak_state: T,
    pub initial_estimate: Estimate<T>,
    pub initial_estimate_fixed: bool,
    /// `(t, estimate)` whenever the estimate changed, starting at `t = 0`.
    pub estimate_history: Vec<(T, Estimate<T>)>,
    /// Number of kernel solves, including the initial one.
    pub kernel_solves: usize,
    /// `Ω(t)` at every logged row.
    pub omega: Vec<T>,
}

struct GainCache<T: Real> {
    entries: Vec<GainSet<T>>,
    solves: usize,
}

impl<T: Real> GainCache<T> {
    fn get(&mut self, cfg: &ScenarioConfig<T>, est: Estimate<T>) -> Result<GainSet<T>> {
        if cfg.control == ControlMode::OpenLoop {
            return Ok(GainSet::zero(cfg.grid.nx, est));
        }
        if let Some(g) = self.entries.iter().find(|g| g.estimate == est) {
            return Ok(g.clone());
        }
        let p = KernelParams::new(est, cfg.plant.eps, cfg.plant.b, cfg.plant.q, cfg.kappa)?;
        let h = solve_h(&p, cfg.kernel_nx, cfg.kernel_scheme)?;
        let g = compute_gains(&p, &h)?.resampled(cfg.grid.nx)?;
        self.solves += 1;
        self.entries.push(g.clone());
        Ok(g)
    }
}

/// Runs one closed-loop scenario to its horizon.
pub fn run<T: Real>(cfg: &ScenarioConfig<T>) -> Result<(TrajectoryLog<T>, Summary<T>)> {
    cfg.check()?;
    let stepper = CrankNicolson::new(cfg.plant, cfg.grid)?;
    let dt = cfg.grid.dt;
    let etm = &cfg.etm;
    let truth = Estimate::new(cfg.plant.lambda, cfg.plant.a);

    let mut state = PlantState::new(cfg.initial.u0.sample(cfg.grid.nx), cfg.initial.zeta0);
    let ctx = GainContext {
        eps: cfg.plant.eps,
        b: cfg.plant.b,
        q: cfg.plant.q,
        kappa: cfg.kappa,
        kernel_nx: cfg.kernel_nx,
        scheme: cfg.kernel_scheme,
    };
    let (mut current, fixed) = if cfg.control == ControlMode::ClosedLoop {
        maybe_fix_initial_estimate(&state.u, state.zeta, cfg.initial_estimate, &cfg.bounds, &ctx)?
    } else {
        (cfg.initial_estimate, false)
    };
    let mut cache = GainCache { entries: Vec::new(), solves: 0 };
    let mut ts = TriggerState::resample(etm.m0, &state, cache.get(cfg, current)?);

    let mut batch = Batch::new();
    batch.push(state.t, &state.u, state.zeta);
    let mut event_times = vec![T::zero()];
    let mut log = TrajectoryLog::default();
    let mut history = vec![(T::zero(), current)];
    log.rows.push(row(&state, &ts, T::zero(), etm.xi, current));

    let window_len = T::from_usize_lossy(cfg.identifier.n_tilde) * etm.t_max;
    let mut d_prev = T::zero();
    for k in 1..=cfg.n_steps() {
        let mut next = stepper.step(&state, ts.held_input).map_err(|e| match e {
            Error::Overflow { time, detail } => {
                Error::Overflow { time, detail: format!("{detail} after {} events", log.events.len()) }
            }
            other => other,
        })?;
        next.t = T::from_usize_lossy(k) * dt;
        let m = step_m(ts.m, &state, d_prev, etm, dt)?;
        let mut d = deviation(&next, &ts);
        batch.push(next.t, &next.u, next.zeta);

        if check_trigger(d, m, next.t, ts.t_last, etm) {
            let d2_before = d * d;
            let threshold = -etm.xi * m;
            let cause = if d2_before >= threshold { TriggerCause::Threshold } else { TriggerCause::MaxDwell };
            let mu = window_start(&event_times, next.t, cfg.identifier.n_tilde, etm.t_max)?;
            let window = batch.since(mu);
            let systems = assemble_modes(
                &window,
                cfg.identifier.n_modes,
                cfg.plant.b,
                cfg.plant.eps,
                cfg.identifier.coefficients,
            )?;
            let outcome = estimate(&systems, current, &cfg.bounds, cfg.identifier.rank_tol)?;
            let changed = outcome.estimate != current;
            if changed {
                current = outcome.estimate;
                history.push((next.t, current));
            }
            let solves_before = cache.solves;
            let gains = if changed { cache.get(cfg, current)? } else { ts.gains.clone() };
            let dwell = next.t - ts.t_last;
            ts = TriggerState::resample(m, &next, gains);
            d = T::zero();
            log.events.push(EventRecord {
                index: log.events.len() + 1,
                t: next.t,
                dwell,
                cause,
                d2_before,
                threshold,
                estimate: current,
                held_input: ts.held_input,
                gains_recomputed: cache.solves > solves_before,
                identifier: IdentifierDiagnostics {
                    mu,
                    samples: window.len(),
                    rank: outcome.rank,
                    sigma_max: outcome.sigma_max,
                    sigma_min: outcome.sigma_min,
                },
            });
            event_times.push(next.t);
            // later windows start no earlier than t − Ñ·T
            batch.discard_before(next.t - window_len - dt);
        } else {
            ts.m = m;
        }
        log.rows.push(row(&next, &ts, d, etm.xi, current));
        state = next;
        d_prev = d;
    }

    let summary = summarize(&log, truth, fixed, history, cache.solves);
    Ok((log, summary))
}

fn row<T: Real>(s: &PlantState<T>, ts: &TriggerState<T>, d: T, xi: T, est: Estimate<T>) -> TrajectoryRow<T> {
    TrajectoryRow {
        t: s.t,
        zeta: s.zeta,
        u_norm: l2_norm(s),
        u0: s.u_left(),
        u1: s.u_right(),
        ud: ts.held_input,
        uc: ts.held_input + d,
        d2: d * d,
        xi_m: -xi * ts.m,
        m: ts.m,
        estimate: est,
    }
}

fn summarize<T: Real>(
    log: &TrajectoryLog<T>,
    truth: Estimate<T>,
    fixed: bool,
    history: Vec<(T, Estimate<T>)>,
    solves: usize,
) -> Summary<T> {
    let dwells: Vec<T> = log.events.iter().map(|e| e.dwell).collect();
    let min_dwell = dwells.iter().copied().reduce(T::min);
    let mean_dwell =
        (!dwells.is_empty()).then(|| dwells.iter().copied().sum::<T>() / T::from_usize_lossy(dwells.len()));
    let last = log.rows.last().expect("at least the initial row");
    Summary {
        event_count: log.events.len(),
        min_dwell,
        mean_dwell,
        final_u_norm: last.u_norm,
        final_abs_zeta: last.zeta.abs(),
        peak_state: log.rows.iter().map(|r| r.u_norm + r.zeta.abs()).fold(T::zero(), T::max),
        initial_estimate: history[0].1,
        initial_estimate_fixed: fixed,
        estimate_history: history,
        kernel_solves: solves,
        omega: omega(log, truth),
    }
}

/// `Ω(t) = ‖u[t]‖² + ζ(t)² + |m(t)| + |θ − θ̂(t)|` at every logged row.
pub fn omega<T: Real>(log: &TrajectoryLog<T>, truth: Estimate<T>) -> Vec<T> {
    log.rows.iter().map(|r| r.u_norm * r.u_norm + r.zeta * r.zeta + r.m.abs() + truth.distance(&r.estimate)).collect()
}

/// Least-squares slope of `ln(values)` against `times` over `[from, to]`.
pub fn log_linear_rate<T: Real>(times: &[T], values: &[T], from: T, to: T) -> Option<T> {
    let pts: Vec<(T, T)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= from && **t <= to && **v > T::zero())
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mt = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    let sxy: T = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > T::zero()).then(|| sxy / sxx)
}
