//! Parameter estimates and the admissible parameter box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Estimate of the reaction coefficient and the ODE pole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub lambda_hat: T,
    pub a_hat: T,
}

impl<T: Real> Estimate<T> {
    pub fn new(lambda_hat: T, a_hat: T) -> Self {
        Self { lambda_hat, a_hat }
    }

    /// Euclidean distance to another estimate.
    pub fn distance(&self, other: &Self) -> T {
        (self.lambda_hat - other.lambda_hat).hypot(self.a_hat - other.a_hat)
    }
}

/// Axis-aligned box `[λ̲, λ̄] × [a̲, ā]` known to contain the true parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaBox<T> {
    pub lambda_lo: T,
    pub lambda_hi: T,
    pub a_lo: T,
    pub a_hi: T,
}

impl<T: Real> ThetaBox<T> {
    pub fn new(lambda_lo: T, lambda_hi: T, a_lo: T, a_hi: T) -> Result<Self> {
        let b = Self { lambda_lo, lambda_hi, a_lo, a_hi };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<()> {
        let finite = [self.lambda_lo, self.lambda_hi, self.a_lo, self.a_hi].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::Argument("parameter box has non-finite bounds".into()));
        }
        if self.lambda_lo > self.lambda_hi || self.a_lo > self.a_hi {
            return Err(Error::Argument(format!(
                "empty parameter box: λ ∈ [{}, {}], a ∈ [{}, {}]",
                self.lambda_lo, self.lambda_hi, self.a_lo, self.a_hi
            )));
        }
        Ok(())
    }

    pub fn contains(&self, e: &Estimate<T>) -> bool {
        e.lambda_hat >= self.lambda_lo && e.lambda_hat <= self.lambda_hi && e.a_hat >= self.a_lo && e.a_hat <= self.a_hi
    }

    /// Coordinate-wise projection onto the box.
    pub fn clamp(&self, e: Estimate<T>) -> Estimate<T> {
        Estimate {
            lambda_hat: e.lambda_hat.max(self.lambda_lo).min(self.lambda_hi),
            a_hat: e.a_hat.max(self.a_lo).min(self.a_hi),
        }
    }

    pub fn midpoint(&self) -> Estimate<T> {
        let half = T::lit(0.5);
        Estimate { lambda_hat: half * (self.lambda_lo + self.lambda_hi), a_hat: half * (self.a_lo + self.a_hi) }
    }

    /// `n_lambda × n_a` tensor grid of sample points (endpoints included).
    pub fn samples(&self, n_lambda: usize, n_a: usize) -> Vec<Estimate<T>> {
        let axis = |lo: T, hi: T, n: usize| -> Vec<T> {
            if n <= 1 || lo == hi {
                return vec![lo];
            }
            let step = (hi - lo) / T::from_usize_lossy(n - 1);
            (0..n).map(|k| if k + 1 == n { hi } else { lo + step * T::from_usize_lossy(k) }).collect()
        };
        let ls = axis(self.lambda_lo, self.lambda_hi, n_lambda);
        let as_ = axis(self.a_lo, self.a_hi, n_a);
        ls.iter().flat_map(|&l| as_.iter().map(move |&a| Estimate::new(l, a))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_box_rejected() {
        assert!(ThetaBox::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(ThetaBox::new(0.0, 0.0, 2.0, 2.0).is_ok());
    }

    #[test]
    fn samples_include_corners_and_collapse() {
        let b = ThetaBox::new(0.0, 5.0, 0.0, 3.0).unwrap();
        let s = b.samples(11, 11);
        assert_eq!(s.len(), 121);
        assert_eq!(s[0], Estimate::new(0.0, 0.0));
        assert_eq!(s[120], Estimate::new(5.0, 3.0));
        let point = ThetaBox::new(3.0, 3.0, 1.5, 1.5).unwrap();
        assert_eq!(point.samples(11, 11), vec![Estimate::new(3.0, 1.5)]);
    }
}
