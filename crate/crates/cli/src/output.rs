//! CSV and JSON artifacts. Every JSON document carries `"schema": 1`.

use std::path::Path;

use etbc_core::simulator::{BatchOutcome, TriggerCause};
use etbc_core::trigger::{DwellReport, Lemma1Constants};
use etbc_core::{Estimate, GainSet, Summary, TrajectoryLog};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA: u32 = 1;

/// One trajectory CSV line, in column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub t: f64,
    pub zeta: f64,
    pub u_norm: f64,
    pub u0: f64,
    pub u1: f64,
    #[serde(rename = "Ud")]
    pub ud: f64,
    #[serde(rename = "Uc")]
    pub uc: f64,
    pub d2: f64,
    pub xi_m: f64,
    pub m: f64,
}

pub fn write_trajectory(path: &Path, log: &TrajectoryLog<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &log.rows {
        w.serialize(CsvRow {
            t: r.t,
            zeta: r.zeta,
            u_norm: r.u_norm,
            u0: r.u0,
            u1: r.u1,
            ud: r.ud,
            uc: r.uc,
            d2: r.d2,
            xi_m: r.xi_m,
            m: r.m,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: &Path) -> Result<Vec<CsvRow>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<CsvRow>, _>>()?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventJson {
    pub index: usize,
    pub t_i: f64,
    pub dwell: f64,
    pub cause: TriggerCause,
    /// Start of the identifier window.
    pub mu_i: f64,
    pub lambda_hat: f64,
    pub a_hat: f64,
    pub rank: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub samples: usize,
    pub d2_before: f64,
    pub threshold: f64,
    pub held_input: f64,
    pub gains_recomputed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventsFile {
    pub schema: u32,
    pub events: Vec<EventJson>,
}

impl EventsFile {
    pub fn from_log(log: &TrajectoryLog<f64>) -> Self {
        let events = log
            .events
            .iter()
            .map(|e| EventJson {
                index: e.index,
                t_i: e.t,
                dwell: e.dwell,
                cause: e.cause,
                mu_i: e.identifier.mu,
                lambda_hat: e.estimate.lambda_hat,
                a_hat: e.estimate.a_hat,
                rank: e.identifier.rank,
                sigma_min: e.identifier.sigma_min,
                sigma_max: e.identifier.sigma_max,
                samples: e.identifier.samples,
                d2_before: e.d2_before,
                threshold: e.threshold,
                held_input: e.held_input,
                gains_recomputed: e.gains_recomputed,
            })
            .collect();
        Self { schema: SCHEMA, events }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateAt {
    pub t: f64,
    pub lambda_hat: f64,
    pub a_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub schema: u32,
    pub event_count: usize,
    pub min_dwell: Option<f64>,
    pub mean_dwell: Option<f64>,
    pub final_u_norm: f64,
    pub final_abs_zeta: f64,
    pub peak_state: f64,
    pub initial_estimate: Estimate<f64>,
    pub initial_estimate_fixed: bool,
    pub estimate_history: Vec<EstimateAt>,
    pub kernel_solves: usize,
    pub omega_initial: f64,
    pub omega_final: f64,
    /// Least-squares slope of `ln Ω` over the second half onwards; absent for short runs.
    pub omega_log_slope: Option<f64>,
}

impl SummaryFile {
    pub fn new(s: &Summary<f64>, log: &TrajectoryLog<f64>, horizon: f64) -> Self {
        let times: Vec<f64> = log.rows.iter().map(|r| r.t).collect();
        let from = horizon.min(1.0);
        let slope = etbc_core::simulator::log_linear_rate(&times, &s.omega, from, horizon);
        Self {
            schema: SCHEMA,
            event_count: s.event_count,
            min_dwell: s.min_dwell,
            mean_dwell: s.mean_dwell,
            final_u_norm: s.final_u_norm,
            final_abs_zeta: s.final_abs_zeta,
            peak_state: s.peak_state,
            initial_estimate: s.initial_estimate,
            initial_estimate_fixed: s.initial_estimate_fixed,
            estimate_history: s
                .estimate_history
                .iter()
                .map(|(t, e)| EstimateAt { t: *t, lambda_hat: e.lambda_hat, a_hat: e.a_hat })
                .collect(),
            kernel_solves: s.kernel_solves,
            omega_initial: s.omega.first().copied().unwrap_or(f64::NAN),
            omega_final: s.omega.last().copied().unwrap_or(f64::NAN),
            omega_log_slope: slope,
        }
    }
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_json<D: for<'de> Deserialize<'de>>(path: &Path) -> Result<D, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHeader {
    pub schema: u32,
    pub lambda_hat: f64,
    pub a_hat: f64,
    pub r: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    pub nx: usize,
}

pub fn write_kernels(dir: &Path, g: &GainSet<f64>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(dir.join("kernels.csv"))?;
    w.write_record(["y", "K1"])?;
    let dy = g.dx();
    for (j, k) in g.k1_profile.iter().enumerate() {
        w.write_record([(j as f64 * dy).to_string(), k.to_string()])?;
    }
    w.flush()?;
    let header = KernelHeader {
        schema: SCHEMA,
        lambda_hat: g.estimate.lambda_hat,
        a_hat: g.estimate.a_hat,
        r: g.r,
        k2: g.k2,
        nx: g.nx(),
    };
    write_json(&dir.join("kernels.json"), &header)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DwellFile {
    pub schema: u32,
    pub constants: Lemma1Constants<f64>,
    pub report: DwellReport<f64>,
    pub suggested_kappas: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Excluded {
    pub member: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchFile {
    pub schema: u32,
    pub members: usize,
    pub excluded: Vec<Excluded>,
    pub dwell_count: usize,
    pub bins: usize,
    pub mode: f64,
    pub min_dwell: f64,
    pub mean_dwell: f64,
}

/// Writes `histogram.csv` (`lo,hi,count`) and `batch.json`.
pub fn write_batch(dir: &Path, out: &BatchOutcome<f64>) -> Result<BatchFile, CliError> {
    let h = &out.histogram;
    let mut w = csv::Writer::from_path(dir.join("histogram.csv"))?;
    w.write_record(["lo", "hi", "count"])?;
    for (k, c) in h.counts.iter().enumerate() {
        w.write_record([h.edges[k].to_string(), h.edges[k + 1].to_string(), c.to_string()])?;
    }
    w.flush()?;
    let file = BatchFile {
        schema: SCHEMA,
        members: out.members,
        excluded: out.failures.iter().map(|(m, e)| Excluded { member: *m, error: e.clone() }).collect(),
        dwell_count: out.dwells.len(),
        bins: h.counts.len(),
        mode: h.mode(),
        min_dwell: out.dwells.iter().copied().fold(f64::INFINITY, f64::min),
        mean_dwell: out.dwells.iter().sum::<f64>() / out.dwells.len() as f64,
    };
    write_json(&dir.join("batch.json"), &file)?;
    Ok(file)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

pub fn read_histogram(path: &Path) -> Result<Vec<HistogramRow>, CliError> {
    let mut r = csv::Reader::from_path(path)?;
    let rows = r.deserialize().collect::<Result<Vec<HistogramRow>, _>>()?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use etbc_core::{run, ScenarioConfig64};

    #[test]
    fn trajectory_csv_round_trips_with_fixed_header() {
        let mut cfg = ScenarioConfig64::paper_vi();
        cfg.horizon = 0.2;
        let (log, _) = run(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectory(&path, &log).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,zeta,u_norm,u0,u1,Ud,Uc,d2,xi_m,m");
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back.len(), log.rows.len());
        for (a, b) in back.iter().zip(&log.rows) {
            assert_eq!((a.t, a.zeta, a.ud, a.m), (b.t, b.zeta, b.ud, b.m));
        }
    }

    #[test]
    fn events_carry_identifier_diagnostics() {
        let (log, _) = run(&ScenarioConfig64::paper_vi()).unwrap();
        let f = EventsFile::from_log(&log);
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["schema"], 1);
        let e = &v["events"][0];
        for key in ["t_i", "mu_i", "lambda_hat", "a_hat", "rank", "sigma_min"] {
            assert!(e.get(key).is_some(), "missing {key}");
        }
    }
}
