//! Ordered design-parameter checks.
//!
//! The order follows the design sequence: box, `q`, `κ`, trigger parameters,
//! then the advisory state weights and `λ_d`.

use std::fmt;

use etbc_core::trigger::{lemma1_constants, suggest_kappas, DesignConstants, SearchGrid};
use etbc_core::{Estimate, ScenarioConfig64};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    fn push(&mut self, name: &'static str, ok: bool, soft: bool, detail: String) {
        let status = match (ok, soft) {
            (true, _) => Status::Pass,
            (false, true) => Status::Warn,
            (false, false) => Status::Fail,
        };
        self.checks.push(Check { name, status, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "pass",
                Status::Warn => "warn",
                Status::Fail => "FAIL",
            };
            writeln!(f, "[{tag}] {}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

fn holds(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "violated"
    }
}

pub fn validate(cfg: &ScenarioConfig64) -> ValidationReport {
    let mut r = ValidationReport { checks: Vec::new() };
    let b = cfg.bounds;
    let p = cfg.plant;

    let box_ok = b.check().is_ok();
    r.push(
        "parameter box",
        box_ok,
        false,
        format!("λ ∈ [{}, {}], a ∈ [{}, {}]: {}", b.lambda_lo, b.lambda_hi, b.a_lo, b.a_hi, holds(box_ok)),
    );
    let plant_ok = p.check().is_ok();
    r.push(
        "plant coefficients",
        plant_ok,
        false,
        format!("ε = {} > 0, b = {} ≠ 0, all finite: {}", p.eps, p.b, holds(plant_ok)),
    );
    let truth = Estimate::new(p.lambda, p.a);
    let inside = box_ok && b.contains(&truth);
    r.push(
        "true parameters in box",
        inside,
        false,
        format!("(λ, a) = ({}, {}) inside the box: {}", p.lambda, p.a, holds(inside)),
    );
    let est_inside = box_ok && b.contains(&cfg.initial_estimate);
    r.push(
        "initial estimate in box",
        est_inside,
        false,
        format!(
            "(λ̂, â) = ({}, {}) inside the box: {}",
            cfg.initial_estimate.lambda_hat,
            cfg.initial_estimate.a_hat,
            holds(est_inside)
        ),
    );

    let q_min = 0.25 + b.lambda_hi / (2.0 * p.eps);
    let q_ok = p.q > q_min;
    r.push("Robin coefficient", q_ok, false, format!("q = {} > 1/4 + λ̄/(2ε) = {q_min}: {}", p.q, holds(q_ok)));
    let k_min = b.a_hi / p.b;
    let k_ok = cfg.kappa > k_min;
    r.push("design gain", k_ok, false, format!("κ = {} > ā/b = {k_min}: {}", cfg.kappa, holds(k_ok)));

    let etm_ok = cfg.etm.check();
    r.push(
        "trigger parameters",
        etm_ok.is_ok(),
        false,
        match etm_ok {
            Ok(()) => format!(
                "ξ = {}, T = {}, η = {}, λ_d = {}, m(0) = {}: positive (m(0) negative)",
                cfg.etm.xi, cfg.etm.t_max, cfg.etm.eta, cfg.etm.lambda_d, cfg.etm.m0
            ),
            Err(e) => e.to_string(),
        },
    );
    let numerics = cfg.grid.check().map_err(|e| e.to_string()).and_then(|()| {
        let id = &cfg.identifier;
        if cfg.kernel_nx < 3 {
            Err("kernel grid needs at least 3 nodes".into())
        } else if id.n_modes < 1 || id.n_tilde < 1 {
            Err("identifier needs at least one mode and Ñ ≥ 1".into())
        } else if !(id.rank_tol >= 0.0) {
            Err("rank tolerance must be non-negative".into())
        } else if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) {
            Err(format!("horizon must be positive, got {}", cfg.horizon))
        } else {
            Ok(())
        }
    });
    r.push(
        "numerics",
        numerics.is_ok(),
        false,
        numerics.err().unwrap_or_else(|| {
            format!(
                "nx = {}, dt = {}, kernel nx = {}, {} modes",
                cfg.grid.nx, cfg.grid.dt, cfg.kernel_nx, cfg.identifier.n_modes
            )
        }),
    );

    if r.failed() {
        r.push("state weights", false, true, "not evaluated: earlier checks failed".into());
        r.push("λ_d advisory", false, true, "not evaluated: earlier checks failed".into());
        return r;
    }

    let design = DesignConstants { bounds: b, q: p.q, eps: p.eps, b: p.b, kappa: cfg.kappa };
    let grid = SearchGrid { kernel_nx: cfg.kernel_nx, scheme: cfg.kernel_scheme, ..SearchGrid::default() };
    match lemma1_constants(&design, grid).and_then(|c| suggest_kappas(&c, cfg.etm.xi)) {
        Ok(suggested) => {
            let ok = cfg.etm.kappas.iter().zip(&suggested).all(|(k, s)| k >= s);
            let pairs: Vec<String> = cfg
                .etm
                .kappas
                .iter()
                .zip(&suggested)
                .enumerate()
                .map(|(j, (k, s))| format!("κ{} = {k} vs {s:.4e}", j + 1))
                .collect();
            r.push("state weights", ok, true, format!("κⱼ ≥ 2ε_(j+1)/ξ: {} ({})", holds(ok), pairs.join(", ")));
        }
        Err(e) => r.push("state weights", false, true, format!("bounds not computable: {e}")),
    }

    // λ_d ≥ r₁ r_a ε with r₁ ≥ 1/(q − λ̄/(2ε) − 1/4); r_a is an analysis constant.
    let r1 = 1.0 / (p.q - b.lambda_hi / (2.0 * p.eps) - 0.25);
    let ra_max = cfg.etm.lambda_d / (r1 * p.eps);
    r.push(
        "λ_d advisory",
        true,
        true,
        format!("λ_d = {} ≥ r₁ r_a ε with r₁ ≥ {r1:.4} leaves room for r_a ≤ {ra_max:.4}", cfg.etm.lambda_d),
    );
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn status(r: &ValidationReport, name: &str) -> Status {
        r.checks.iter().find(|c| c.name == name).unwrap().status
    }

    #[test]
    fn reference_scenario_passes_hard_checks() {
        let r = validate(&ScenarioConfig64::paper_vi());
        assert!(!r.failed(), "{r}");
        let q = r.checks.iter().find(|c| c.name == "Robin coefficient").unwrap();
        assert!(q.detail.contains("5 > 1/4 + λ̄/(2ε) = 2.75"), "{}", q.detail);
    }

    #[test]
    fn small_design_gain_fails() {
        let mut cfg = ScenarioConfig64::paper_vi();
        cfg.kappa = 2.0;
        let r = validate(&cfg);
        assert_eq!(status(&r, "design gain"), Status::Fail);
        assert!(r.checks.iter().any(|c| c.detail.contains("κ = 2 > ā/b = 3: violated")));
    }

    #[test]
    fn small_robin_coefficient_fails() {
        let mut cfg = ScenarioConfig64::paper_vi();
        cfg.plant.q = 2.75;
        assert_eq!(status(&validate(&cfg), "Robin coefficient"), Status::Fail);
    }

    #[test]
    fn state_weights_never_fail() {
        let mut cfg = ScenarioConfig64::paper_vi();
        cfg.etm.kappas = [1e-6; 4];
        let r = validate(&cfg);
        assert_eq!(status(&r, "state weights"), Status::Warn);
        assert!(!r.failed());
    }

    #[test]
    fn checks_keep_their_order() {
        let names: Vec<_> = validate(&ScenarioConfig64::paper_vi()).checks.iter().map(|c| c.name).collect();
        let pos = |n: &str| names.iter().position(|m| *m == n).unwrap();
        assert!(pos("true parameters in box") < pos("Robin coefficient"));
        assert!(pos("Robin coefficient") < pos("design gain"));
        assert!(pos("design gain") < pos("state weights"));
        assert_eq!(names.last(), Some(&"λ_d advisory"));
    }

    #[test]
    fn truth_outside_box_fails() {
        let mut cfg = ScenarioConfig64::paper_vi();
        cfg.plant.lambda = 6.0;
        assert_eq!(status(&validate(&cfg), "true parameters in box"), Status::Fail);
    }
}
