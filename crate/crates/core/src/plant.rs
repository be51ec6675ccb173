//! Reaction-diffusion PDE in cascade with a scalar ODE, driven by a held boundary input.
//!
//! `ζ' = aζ + b·u(0,t)`, `u_t = ε u_xx + λu`, `u_x(0,t) = 0`, `u_x(1,t) + q·u(1,t) = U`.
//! Space: uniform nodes with ghost-node closures at both ends. Time: Crank–Nicolson
//! for `u`, trapezoidal rule for `ζ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{trapezoid, trapezoid_product};
use crate::scalar::Real;

/// Entries beyond this magnitude abort the integration.
pub const BLOW_UP_LIMIT: f64 = 1e12;

/// True plant coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams<T> {
    pub a: T,
    pub b: T,
    pub eps: T,
    pub lambda: T,
    pub q: T,
}

impl<T: Real> PlantParams<T> {
    pub fn check(&self) -> Result<()> {
        if !(self.eps > T::zero()) {
            return Err(Error::Config(format!("diffusivity must be positive, got {}", self.eps)));
        }
        if self.b == T::zero() {
            return Err(Error::Config("input gain b must be nonzero".into()));
        }
        let all_finite = [self.a, self.b, self.eps, self.lambda, self.q].iter().all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config("plant coefficients must be finite".into()));
        }
        Ok(())
    }
}

/// Spatial resolution and time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub nx: usize,
    pub dt: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(nx: usize, dt: T) -> Result<Self> {
        let g = Self { nx, dt };
        g.check()?;
        Ok(g)
    }

    pub fn check(&self) -> Result<()> {
        if self.nx < 3 {
            return Err(Error::Argument(format!("grid needs nx ≥ 3, got {}", self.nx)));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::Argument(format!("time step must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn dx(&self) -> T {
        T::one() / T::from_usize_lossy(self.nx - 1)
    }

    pub fn nodes(&self) -> Vec<T> {
        crate::kernels::unit_grid(self.nx)
    }
}

/// `u` on the grid, `ζ`, and the time they refer to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState<T> {
    pub u: Vec<T>,
    pub zeta: T,
    pub t: T,
}

impl<T: Real> PlantState<T> {
    pub fn new(u: Vec<T>, zeta: T) -> Self {
        Self { u, zeta, t: T::zero() }
    }

    pub fn zeros(nx: usize) -> Self {
        Self::new(vec![T::zero(); nx], T::zero())
    }

    pub fn nx(&self) -> usize {
        self.u.len()
    }

    pub fn dx(&self) -> T {
        T::one() / T::from_usize_lossy(self.nx() - 1)
    }

    /// `u(0, t)`.
    pub fn u_left(&self) -> T {
        self.u[0]
    }

    /// `u(1, t)`.
    pub fn u_right(&self) -> T {
        self.u[self.u.len() - 1]
    }
}

/// Closed-form initial profiles for `u(·, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialProfile<T> {
    Zero,
    /// `x² sin(nπx)`.
    X2Sin {
        n: u32,
    },
    /// `sin(nπx)`.
    Sin {
        n: u32,
    },
    Constant {
        value: T,
    },
}

impl<T: Real> InitialProfile<T> {
    pub fn sample(&self, nx: usize) -> Vec<T> {
        let xs: Vec<T> = crate::kernels::unit_grid(nx);
        xs.into_iter()
            .map(|x| match *self {
                Self::Zero => T::zero(),
                Self::X2Sin { n } => x * x * (T::from_u32(n).unwrap() * T::PI() * x).sin(),
                Self::Sin { n } => (T::from_u32(n).unwrap() * T::PI() * x).sin(),
                Self::Constant { value } => value,
            })
            .collect()
    }
}

/// `‖u[t]‖` by trapezoid.
pub fn l2_norm<T: Real>(s: &PlantState<T>) -> T {
    let sq: Vec<T> = s.u.iter().map(|v| *v * *v).collect();
    trapezoid(&sq, s.dx()).sqrt()
}

/// `∫₀¹ sin(nπx) u(x,t) dx` by trapezoid.
pub fn mode_projection<T: Real>(s: &PlantState<T>, n: usize) -> Result<T> {
    if n < 1 {
        return Err(Error::Argument("mode index must be ≥ 1".into()));
    }
    Ok(project_profile(&s.u, n))
}

pub(crate) fn project_profile<T: Real>(u: &[T], n: usize) -> T {
    let nx = u.len();
    let xs: Vec<T> = crate::kernels::unit_grid(nx);
    let k = T::from_usize_lossy(n) * T::PI();
    let basis: Vec<T> = xs.iter().map(|&x| (k * x).sin()).collect();
    trapezoid_product(&basis, u, T::one() / T::from_usize_lossy(nx - 1))
}

/// Crank–Nicolson stepper with the implicit tridiagonal system factored once.
#[derive(Debug, Clone)]
pub struct CrankNicolson<T> {
    params: PlantParams<T>,
    grid: GridSpec<T>,
    // explicit operator (I + dt/2·A) as three diagonals
    ex_lower: Vec<T>,
    ex_diag: Vec<T>,
    ex_upper: Vec<T>,
    // Thomas factorisation of (I − dt/2·A)
    im_lower: Vec<T>,
    im_upper_mod: Vec<T>,
    im_diag_inv: Vec<T>,
    /// Boundary source coefficient multiplying `U` in the last row.
    source_coeff: T,
    zeta_gain: T,
    zeta_drive: T,
}

impl<T: Real> CrankNicolson<T> {
    pub fn new(params: PlantParams<T>, grid: GridSpec<T>) -> Result<Self> {
        params.check()?;
        grid.check()?;
        let n = grid.nx;
        let dx = grid.dx();
        let half_dt = grid.dt * T::lit(0.5);
        let two = T::lit(2.0);
        let k = params.eps / (dx * dx);

        // A = εL + λI as (lower, diag, upper)
        let mut lower = vec![T::zero(); n];
        let mut diag = vec![T::zero(); n];
        let mut upper = vec![T::zero(); n];
        for j in 0..n {
            diag[j] = -two * k + params.lambda;
            if j > 0 {
                lower[j] = k;
            }
            if j + 1 < n {
                upper[j] = k;
            }
        }
        upper[0] = two * k;
        lower[n - 1] = two * k;
        diag[n - 1] = -two * k * (T::one() + dx * params.q) + params.lambda;

        let ex_lower: Vec<T> = lower.iter().map(|v| half_dt * *v).collect();
        let ex_upper: Vec<T> = upper.iter().map(|v| half_dt * *v).collect();
        let ex_diag: Vec<T> = diag.iter().map(|v| T::one() + half_dt * *v).collect();

        let im_lower: Vec<T> = lower.iter().map(|v| -half_dt * *v).collect();
        let im_upper: Vec<T> = upper.iter().map(|v| -half_dt * *v).collect();
        let im_diag: Vec<T> = diag.iter().map(|v| T::one() - half_dt * *v).collect();
        let mut im_upper_mod = vec![T::zero(); n];
        let mut im_diag_inv = vec![T::zero(); n];
        let mut d = im_diag[0];
        for j in 0..n {
            if j > 0 {
                d = im_diag[j] - im_lower[j] * im_upper_mod[j - 1];
            }
            if d == T::zero() {
                return Err(Error::Config("singular Crank–Nicolson system".into()));
            }
            im_diag_inv[j] = T::one() / d;
            im_upper_mod[j] = im_upper[j] * im_diag_inv[j];
        }

        let denom = T::one() - half_dt * params.a;
        if denom == T::zero() {
            return Err(Error::Config("trapezoidal ODE update is singular (a·dt = 2)".into()));
        }
        Ok(Self {
            params,
            grid,
            ex_lower,
            ex_diag,
            ex_upper,
            im_lower,
            im_upper_mod,
            im_diag_inv,
            // dt · (2ε/dx) · U in the boundary row
            source_coeff: grid.dt * two * params.eps / dx,
            zeta_gain: (T::one() + half_dt * params.a) / denom,
            zeta_drive: half_dt * params.b / denom,
        })
    }

    pub fn params(&self) -> &PlantParams<T> {
        &self.params
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    /// Advances `s` by one time step with the boundary input held at `held_input`.
    pub fn step(&self, s: &PlantState<T>, held_input: T) -> Result<PlantState<T>> {
        let n = self.grid.nx;
        if s.u.len() != n {
            return Err(Error::Argument(format!("state has {} nodes, grid has {n}", s.u.len())));
        }
        let u = &s.u;
        let mut rhs = vec![T::zero(); n];
        for j in 0..n {
            let mut v = self.ex_diag[j] * u[j];
            if j > 0 {
                v += self.ex_lower[j] * u[j - 1];
            }
            if j + 1 < n {
                v += self.ex_upper[j] * u[j + 1];
            }
            rhs[j] = v;
        }
        rhs[n - 1] += self.source_coeff * held_input;

        // forward sweep
        let mut y = rhs;
        y[0] *= self.im_diag_inv[0];
        for j in 1..n {
            y[j] = (y[j] - self.im_lower[j] * y[j - 1]) * self.im_diag_inv[j];
        }
        // back substitution
        for j in (0..n - 1).rev() {
            let next = y[j + 1];
            y[j] -= self.im_upper_mod[j] * next;
        }

        let zeta = self.zeta_gain * s.zeta + self.zeta_drive * (u[0] + y[0]);
        let t = s.t + self.grid.dt;
        let next = PlantState { u: y, zeta, t };
        guard(&next)?;
        Ok(next)
    }
}

fn guard<T: Real>(s: &PlantState<T>) -> Result<()> {
    let limit = T::lit(BLOW_UP_LIMIT);
    let bad = |v: &T| !v.is_finite() || v.abs() > limit;
    if bad(&s.zeta) || s.u.iter().any(bad) {
        return Err(Error::Overflow {
            time: s.t.to_f64_lossy(),
            detail: format!("state magnitude exceeded {BLOW_UP_LIMIT:e}"),
        });
    }
    Ok(())
}

/// One step with a freshly factored stepper; prefer [`CrankNicolson`] in loops.
pub fn step<T: Real>(s: &PlantState<T>, p: &PlantParams<T>, g: &GridSpec<T>, held_input: T) -> Result<PlantState<T>> {
    CrankNicolson::new(*p, *g)?.step(s, held_input)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_params() -> PlantParams<f64> {
        PlantParams { a: 1.5, b: 1.0, eps: 1.0, lambda: 3.0, q: 5.0 }
    }

    #[test]
    fn equilibrium_stays_zero() {
        let cn = CrankNicolson::new(reference_params(), GridSpec::new(21, 0.004).unwrap()).unwrap();
        let mut s = PlantState::zeros(21);
        for _ in 0..100 {
            s = cn.step(&s, 0.0).unwrap();
        }
        assert!(s.u.iter().all(|v| *v == 0.0));
        assert_eq!(s.zeta, 0.0);
    }

    #[test]
    fn norms_of_simple_profiles() {
        assert_eq!(l2_norm(&PlantState::<f64>::zeros(11)), 0.0);
        let ones = PlantState::new(vec![1.0f64; 11], 0.0);
        assert!((l2_norm(&ones) - 1.0).abs() < 1e-15);
        let sine = PlantState::new(InitialProfile::Sin { n: 1 }.sample(201), 0.0);
        assert!((l2_norm(&sine) - 0.5_f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn mode_projection_orthogonality() {
        let s1 = PlantState::new(InitialProfile::<f64>::Sin { n: 1 }.sample(201), 0.0);
        assert!((mode_projection(&s1, 1).unwrap() - 0.5).abs() < 1e-12);
        let s2 = PlantState::new(InitialProfile::<f64>::Sin { n: 2 }.sample(201), 0.0);
        assert!(mode_projection(&s2, 1).unwrap().abs() < 1e-12);
        assert!(mode_projection(&s2, 0).is_err());
    }

    #[test]
    fn wrong_dimension_rejected() {
        let cn = CrankNicolson::new(reference_params(), GridSpec::new(21, 0.004).unwrap()).unwrap();
        assert!(cn.step(&PlantState::zeros(11), 0.0).is_err());
    }

    #[test]
    fn blow_up_is_reported_with_time() {
        let mut p = reference_params();
        p.a = 400.0;
        let cn = CrankNicolson::new(p, GridSpec::new(11, 0.001).unwrap()).unwrap();
        let mut s = PlantState::new(vec![0.0; 11], 1.0);
        let err = loop {
            match cn.step(&s, 0.0) {
                Ok(next) => s = next,
                Err(e) => break e,
            }
        };
        match err {
            Error::Overflow { time, .. } => assert!(time > 0.0 && time < 1.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(2, 0.1).is_err());
        assert!(GridSpec::new(5, 0.0).is_err());
        assert!(GridSpec::new(5, -1.0).is_err());
    }
}
