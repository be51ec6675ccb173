use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identifier::IdentifierConfig;
use crate::kernels::KernelScheme;
use crate::plant::{GridSpec, InitialProfile, PlantParams};
use crate::scalar::Real;
use crate::theta::{Estimate, ThetaBox};
use crate::trigger::EtmParams;

/// Initial plant state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition<T> {
    pub u0: InitialProfile<T>,
    pub zeta0: T,
}

/// Whether the computed gains drive the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    #[default]
    ClosedLoop,
    /// Gains forced to zero: `U ≡ 0`, events only from the maximum dwell time.
    OpenLoop,
}

/// Everything a closed-loop run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig<T> {
    /// True plant; only the plant integrator reads `lambda` and `a`.
    pub plant: PlantParams<T>,
    pub bounds: ThetaBox<T>,
    pub initial_estimate: Estimate<T>,
    pub grid: GridSpec<T>,
    pub etm: EtmParams<T>,
    pub identifier: IdentifierConfig<T>,
    /// Design gain κ of the ODE pole placement.
    pub kappa: T,
    pub kernel_nx: usize,
    pub kernel_scheme: KernelScheme,
    pub horizon: T,
    pub initial: InitialCondition<T>,
    pub seed: u64,
    pub control: ControlMode,
}

impl<T: Real> ScenarioConfig<T> {
    /// Reference scenario: `a = 1.5, b = 1, ε = 1, λ = 3, q = 5`, box `[0,5]×[0,3]`,
    /// `ξ = 1.1, Ñ = 5, T = 1.2, η = 15, κ = 16, κᵢ = 100, λ_d = 20, m(0) = −500`,
    /// `dt = 0.004`, 21 nodes, 15 modes, `u(x,0) = x² sin(2πx)`, `ζ(0) = 5`.
    pub fn paper_vi() -> Self {
        let l = T::lit;
        Self {
            plant: PlantParams { a: l(1.5), b: l(1.0), eps: l(1.0), lambda: l(3.0), q: l(5.0) },
            bounds: ThetaBox { lambda_lo: l(0.0), lambda_hi: l(5.0), a_lo: l(0.0), a_hi: l(3.0) },
            initial_estimate: Estimate::new(l(2.5), l(1.5)),
            grid: GridSpec { nx: 21, dt: l(0.004) },
            etm: EtmParams {
                xi: l(1.1),
                t_max: l(1.2),
                eta: l(15.0),
                lambda_d: l(20.0),
                kappas: [l(100.0); 4],
                m0: l(-500.0),
            },
            identifier: IdentifierConfig::default(),
            kappa: l(16.0),
            kernel_nx: 21,
            kernel_scheme: KernelScheme::Paper,
            horizon: l(4.0),
            initial: InitialCondition { u0: InitialProfile::X2Sin { n: 2 }, zeta0: l(5.0) },
            seed: 0,
            control: ControlMode::ClosedLoop,
        }
    }

    /// Number of plant steps covering the horizon.
    pub fn n_steps(&self) -> usize {
        (self.horizon / self.grid.dt).round().to_usize().unwrap_or(0)
    }

    /// Structural checks every run needs; advisory checks live with the CLI.
    pub fn check(&self) -> Result<()> {
        self.plant.check()?;
        self.bounds.check()?;
        self.grid.check()?;
        self.etm.check()?;
        let truth = Estimate::new(self.plant.lambda, self.plant.a);
        if !self.bounds.contains(&truth) {
            return Err(Error::Config("true parameters lie outside the parameter box".into()));
        }
        if !self.bounds.contains(&self.initial_estimate) {
            return Err(Error::Config("initial estimate lies outside the parameter box".into()));
        }
        if !(self.kappa > self.bounds.a_hi / self.plant.b) {
            return Err(Error::Config(format!(
                "κ = {} must exceed ā/b = {}",
                self.kappa,
                self.bounds.a_hi / self.plant.b
            )));
        }
        let q_min = T::lit(0.25) + self.bounds.lambda_hi / (T::lit(2.0) * self.plant.eps);
        if !(self.plant.q > q_min) {
            return Err(Error::Config(format!("q = {} must exceed {q_min}", self.plant.q)));
        }
        if self.kernel_nx < 3 {
            return Err(Error::Config("kernel grid needs at least 3 nodes".into()));
        }
        if self.identifier.n_modes < 1 || self.identifier.n_tilde < 1 {
            return Err(Error::Config("identifier needs ≥ 1 mode and Ñ ≥ 1".into()));
        }
        if !(self.identifier.rank_tol >= T::zero()) {
            return Err(Error::Config("rank tolerance must be non-negative".into()));
        }
        if !(self.horizon > T::zero()) || !self.horizon.is_finite() {
            return Err(Error::Config("horizon must be positive".into()));
        }
        Ok(())
    }
}
