//! TOML scenario files.

use std::path::Path;

use etbc_core::identifier::{IdentifierConfig, ModeCoefficients};
use etbc_core::simulator::{ControlMode, InitialCondition};
use etbc_core::{Estimate, EtmParams, GridSpec, InitialProfile, KernelScheme, PlantParams, ScenarioConfig64, ThetaBox};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Final time of the run in seconds.
    pub horizon: f64,
    /// Design gain κ of the ODE pole placement.
    pub kappa: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub control: ControlMode,
    pub plant: PlantSection,
    pub bounds: BoundsSection,
    pub etm: EtmSection,
    pub identifier: IdentifierSection,
    pub grid: GridSection,
    pub initial: InitialSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    pub lambda: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub a_lo: f64,
    pub a_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtmSection {
    pub xi: f64,
    pub t_max: f64,
    pub eta: f64,
    pub lambda_d: f64,
    pub kappas: [f64; 4],
    pub m0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifierSection {
    pub n_modes: usize,
    pub n_tilde: usize,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default)]
    pub coefficients: ModeCoefficients,
    /// `[λ̂(0), â(0)]`; the box midpoint when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_estimate: Option<[f64; 2]>,
}

fn default_rank_tol() -> f64 {
    IdentifierConfig::<f64>::default().rank_tol
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub dt: f64,
    /// Kernel grid nodes; the plant grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_nx: Option<usize>,
    #[serde(default)]
    pub kernel_scheme: KernelScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub zeta0: f64,
    pub u0: InitialProfile<f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Unreadable files are runtime errors; malformed ones fail validation.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario values are representable in TOML")
    }

    pub fn to_config(&self) -> ScenarioConfig64 {
        let bounds = ThetaBox {
            lambda_lo: self.bounds.lambda_lo,
            lambda_hi: self.bounds.lambda_hi,
            a_lo: self.bounds.a_lo,
            a_hi: self.bounds.a_hi,
        };
        let initial_estimate = match self.identifier.initial_estimate {
            Some([l, a]) => Estimate::new(l, a),
            None => Estimate::new(0.5 * (bounds.lambda_lo + bounds.lambda_hi), 0.5 * (bounds.a_lo + bounds.a_hi)),
        };
        let p = self.plant;
        let e = self.etm;
        ScenarioConfig64 {
            plant: PlantParams { a: p.a, b: p.b, eps: p.eps, lambda: p.lambda, q: p.q },
            bounds,
            initial_estimate,
            grid: GridSpec { nx: self.grid.nx, dt: self.grid.dt },
            etm: EtmParams { xi: e.xi, t_max: e.t_max, eta: e.eta, lambda_d: e.lambda_d, kappas: e.kappas, m0: e.m0 },
            identifier: IdentifierConfig {
                n_modes: self.identifier.n_modes,
                n_tilde: self.identifier.n_tilde,
                rank_tol: self.identifier.rank_tol,
                coefficients: self.identifier.coefficients,
            },
            kappa: self.kappa,
            kernel_nx: self.grid.kernel_nx.unwrap_or(self.grid.nx),
            kernel_scheme: self.grid.kernel_scheme,
            horizon: self.horizon,
            initial: InitialCondition { u0: self.initial.u0, zeta0: self.initial.zeta0 },
            seed: self.seed,
            control: self.control,
        }
    }

    pub fn from_config(cfg: &ScenarioConfig64) -> Self {
        let p = cfg.plant;
        let e = cfg.etm;
        Self {
            horizon: cfg.horizon,
            kappa: cfg.kappa,
            seed: cfg.seed,
            control: cfg.control,
            plant: PlantSection { a: p.a, b: p.b, eps: p.eps, lambda: p.lambda, q: p.q },
            bounds: BoundsSection {
                lambda_lo: cfg.bounds.lambda_lo,
                lambda_hi: cfg.bounds.lambda_hi,
                a_lo: cfg.bounds.a_lo,
                a_hi: cfg.bounds.a_hi,
            },
            etm: EtmSection { xi: e.xi, t_max: e.t_max, eta: e.eta, lambda_d: e.lambda_d, kappas: e.kappas, m0: e.m0 },
            identifier: IdentifierSection {
                n_modes: cfg.identifier.n_modes,
                n_tilde: cfg.identifier.n_tilde,
                rank_tol: cfg.identifier.rank_tol,
                coefficients: cfg.identifier.coefficients,
                initial_estimate: Some([cfg.initial_estimate.lambda_hat, cfg.initial_estimate.a_hat]),
            },
            grid: GridSection {
                nx: cfg.grid.nx,
                dt: cfg.grid.dt,
                kernel_nx: Some(cfg.kernel_nx),
                kernel_scheme: cfg.kernel_scheme,
            },
            initial: InitialSection { zeta0: cfg.initial.zeta0, u0: cfg.initial.u0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BUNDLED: &str = include_str!("../scenarios/paper_vi.toml");

    #[test]
    fn bundled_file_matches_reference_config() {
        let file = ScenarioFile::parse(BUNDLED).unwrap();
        assert_eq!(file.to_config(), ScenarioConfig64::paper_vi());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = ScenarioConfig64::paper_vi();
        cfg.initial.u0 = InitialProfile::Constant { value: -0.25 };
        cfg.kernel_nx = 41;
        cfg.kernel_scheme = KernelScheme::Refined;
        cfg.control = ControlMode::OpenLoop;
        cfg.identifier.coefficients = ModeCoefficients::Continuum;
        cfg.etm.kappas = [1.0, 2.0, 3.0, 4.0];
        let text = ScenarioFile::from_config(&cfg).to_toml();
        assert_eq!(ScenarioFile::parse(&text).unwrap().to_config(), cfg);
    }

    #[test]
    fn optional_keys_take_defaults() {
        let text = BUNDLED.replace("kernel_nx = 21\n", "").replace("initial_estimate = [2.5, 1.5]\n", "");
        let cfg = ScenarioFile::parse(&text).unwrap().to_config();
        assert_eq!(cfg.kernel_nx, cfg.grid.nx);
        assert_eq!(cfg.initial_estimate, Estimate::new(2.5, 1.5));
    }

    #[test]
    fn unknown_key_names_the_field() {
        let text = BUNDLED.replace("eta = 15.0", "etta = 15.0");
        let err = ScenarioFile::parse(&text).unwrap_err().to_string();
        assert!(err.contains("etta"), "{err}");
    }

    #[test]
    fn missing_key_is_reported() {
        let text = BUNDLED.replace("q = 5.0\n", "");
        let err = ScenarioFile::parse(&text).unwrap_err().to_string();
        assert!(err.contains("missing field `q`"), "{err}");
    }
}
