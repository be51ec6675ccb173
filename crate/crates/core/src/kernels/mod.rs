//! Backstepping kernels `Ψ`, `γ`, `h` and the boundary feedback gains built from them.

mod bessel;
mod gains;
mod goursat;

pub use bessel::{bessel_i1_ratio, bessel_i1_ratio_deriv};
pub use gains::{compute_gains, GainSet};
pub use goursat::{kernel_residuals, solve_h, KernelGrid, KernelResiduals, KernelScheme};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::theta::{Estimate, ThetaBox};

/// Inputs to the kernel pipeline: an estimate plus the known plant/design constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams<T> {
    pub lambda_hat: T,
    pub a_hat: T,
    /// Diffusivity ε.
    pub eps: T,
    /// ODE input gain.
    pub b: T,
    /// Robin coefficient at `x = 1`.
    pub q: T,
    /// Design gain κ.
    pub kappa: T,
}

impl<T: Real> KernelParams<T> {
    pub fn new(estimate: Estimate<T>, eps: T, b: T, q: T, kappa: T) -> Result<Self> {
        let p = Self { lambda_hat: estimate.lambda_hat, a_hat: estimate.a_hat, eps, b, q, kappa };
        if !(eps > T::zero()) {
            return Err(Error::Config(format!("diffusivity must be positive, got {eps}")));
        }
        if b == T::zero() || !b.is_finite() {
            return Err(Error::Config(format!("input gain b must be finite and nonzero, got {b}")));
        }
        if p.a_m() <= T::zero() {
            return Err(Error::Config(format!("a_m = b·κ − â = {} must be positive (κ = {kappa} too small)", p.a_m())));
        }
        Ok(p)
    }

    pub fn with_estimate(&self, estimate: Estimate<T>) -> Result<Self> {
        Self::new(estimate, self.eps, self.b, self.q, self.kappa)
    }

    pub fn estimate(&self) -> Estimate<T> {
        Estimate::new(self.lambda_hat, self.a_hat)
    }

    /// Pole of the intermediate ODE, `b·κ − â`.
    pub fn a_m(&self) -> T {
        self.b * self.kappa - self.a_hat
    }

    /// Robin coefficient of the target system, `q − λ̂/(2ε)`.
    pub fn r(&self) -> T {
        self.q - self.lambda_hat / (T::lit(2.0) * self.eps)
    }

    /// Checks the estimate against the box and the box-wide design inequalities.
    pub fn check_admissible(&self, bounds: &ThetaBox<T>) -> Result<()> {
        if !bounds.contains(&self.estimate()) {
            return Err(Error::Config(format!(
                "estimate ({}, {}) outside the parameter box",
                self.lambda_hat, self.a_hat
            )));
        }
        if !(self.kappa > bounds.a_hi / self.b) {
            return Err(Error::Config(format!("κ = {} must exceed ā/b = {}", self.kappa, bounds.a_hi / self.b)));
        }
        let q_min = T::lit(0.25) + bounds.lambda_hi / (T::lit(2.0) * self.eps);
        if !(self.q > q_min) {
            return Err(Error::Config(format!("q = {} must exceed 1/4 + λ̄/(2ε) = {q_min}", self.q)));
        }
        Ok(())
    }

    fn omega(&self) -> Result<T> {
        let am = self.a_m();
        if am <= T::zero() {
            return Err(Error::Config(format!("a_m = {am} ≤ 0: κ violates κ > ā/b")));
        }
        Ok((am / self.eps).sqrt())
    }
}

fn check_triangle<T: Real>(x: T, y: T) -> Result<()> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::Domain(format!("kernel evaluated at non-finite point ({x}, {y})")));
    }
    if y < T::zero() || y > x || x > T::one() {
        return Err(Error::Domain(format!("kernel needs 0 ≤ y ≤ x ≤ 1, got ({x}, {y})")));
    }
    Ok(())
}

/// `Ψ(x, y) = −(λ̂/ε)·x·I₁(√z)/√z` with `z = λ̂(x²−y²)/ε`.
pub fn psi<T: Real>(x: T, y: T, p: &KernelParams<T>) -> Result<T> {
    check_triangle(x, y)?;
    let z = p.lambda_hat * (x * x - y * y) / p.eps;
    Ok(-(p.lambda_hat / p.eps) * x * bessel_i1_ratio(z)?)
}

/// `∂Ψ/∂x`.
pub fn psi_x<T: Real>(x: T, y: T, p: &KernelParams<T>) -> Result<T> {
    check_triangle(x, y)?;
    let c = p.lambda_hat / p.eps;
    let z = c * (x * x - y * y);
    let f = bessel_i1_ratio(z)?;
    let df = bessel_i1_ratio_deriv(z)?;
    Ok(-c * (f + T::lit(2.0) * c * x * x * df))
}

fn check_unit<T: Real>(x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::Domain(format!("γ needs 0 ≤ x ≤ 1, got {x}")));
    }
    Ok(())
}

/// `γ(x) = −κ cos(√(a_m/ε)·x)`.
pub fn gamma<T: Real>(x: T, p: &KernelParams<T>) -> Result<T> {
    check_unit(x)?;
    let w = p.omega()?;
    Ok(-p.kappa * (w * x).cos())
}

/// `γ'(x) = κ √(a_m/ε) sin(√(a_m/ε)·x)`.
pub fn gamma_prime<T: Real>(x: T, p: &KernelParams<T>) -> Result<T> {
    check_unit(x)?;
    let w = p.omega()?;
    Ok(p.kappa * w * (w * x).sin())
}

/// `γ''(x) = κ (a_m/ε) cos(√(a_m/ε)·x)`.
pub fn gamma_second<T: Real>(x: T, p: &KernelParams<T>) -> Result<T> {
    check_unit(x)?;
    let w = p.omega()?;
    Ok(p.kappa * w * w * (w * x).cos())
}

/// Uniform nodes `x_i = i/(n−1)`; the last node is exactly 1.
pub(crate) fn unit_grid<T: Real>(n: usize) -> Vec<T> {
    let denom = T::from_usize_lossy(n - 1);
    (0..n).map(|i| T::from_usize_lossy(i) / denom).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda_hat: f64, a_hat: f64) -> KernelParams<f64> {
        KernelParams::new(Estimate::new(lambda_hat, a_hat), 1.0, 1.0, 5.0, 16.0).unwrap()
    }

    #[test]
    fn psi_on_corner() {
        let p = params(3.0, 1.5);
        assert!((psi(1.0, 1.0, &p).unwrap() + 1.5).abs() < 1e-15);
    }

    #[test]
    fn psi_vanishes_without_reaction() {
        let p = params(0.0, 1.5);
        for &(x, y) in &[(0.3, 0.1), (1.0, 0.0), (0.7, 0.7)] {
            assert_eq!(psi(x, y, &p).unwrap(), 0.0);
            assert_eq!(psi_x(x, y, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn psi_rejects_upper_triangle() {
        let p = params(3.0, 1.5);
        assert!(matches!(psi(0.2, 0.5, &p), Err(Error::Domain(_))));
        assert!(matches!(psi_x(0.2, 0.5, &p), Err(Error::Domain(_))));
        assert!(psi(1.2, 0.5, &p).is_err());
    }

    #[test]
    fn psi_diagonal_closed_form() {
        let p = params(3.0, 1.5);
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let expect = -3.0 * x / 2.0;
            assert!((psi(x, x, &p).unwrap() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_boundary_values() {
        let p = params(3.0, 1.5);
        assert_eq!(gamma(0.0, &p).unwrap(), -16.0);
        assert_eq!(gamma_prime(0.0, &p).unwrap(), 0.0);
        let expect = -16.0 * 14.5_f64.sqrt().cos();
        assert!((gamma(1.0, &p).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 12.58).abs() < 0.01);
    }

    #[test]
    fn gamma_rejects_small_kappa() {
        let mut p = params(3.0, 1.5);
        assert!(KernelParams::new(Estimate::new(3.0, 1.5), 1.0, 1.0, 5.0, 1.0).is_err());
        p.kappa = 1.0;
        assert!(matches!(gamma(0.5, &p), Err(Error::Config(_))));
        assert!(matches!(gamma_prime(0.5, &p), Err(Error::Config(_))));
    }

    #[test]
    fn r_on_reference_estimate() {
        assert_eq!(params(3.0, 1.5).r(), 3.5);
    }

    #[test]
    fn admissibility_checks() {
        let bounds = ThetaBox::new(0.0, 5.0, 0.0, 3.0).unwrap();
        assert!(params(3.0, 1.5).check_admissible(&bounds).is_ok());
        let mut low_q = params(3.0, 1.5);
        low_q.q = 2.7;
        assert!(low_q.check_admissible(&bounds).is_err());
        assert!(params(6.0, 1.5).check_admissible(&bounds).is_err());
    }
}
