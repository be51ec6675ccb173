//! Power series for `I₁(√z)/√z` and its derivative in `z`.
//!
//! `f(z) = Σ_{m≥0} ½ (z/4)^m / (m! (m+1)!)` is entire, so negative arguments
//! continue onto the `J₁(√−z)/√−z` branch without a special case.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_TERMS: usize = 60;
const REL_TOL: f64 = 1e-16;

/// `I₁(√z)/√z`, equal to ½ at `z = 0`.
pub fn bessel_i1_ratio<T: Real>(z: T) -> Result<T> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("bessel_i1_ratio: non-finite argument {z}")));
    }
    let quarter = T::lit(0.25);
    let tol = T::lit(REL_TOL);
    let mut term = T::lit(0.5);
    let mut sum = term;
    for m in 0..MAX_TERMS - 1 {
        let k = T::from_usize_lossy(m + 1);
        term = term * z * quarter / (k * (k + T::one()));
        sum += term;
        if term.abs() <= tol * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// `d/dz [I₁(√z)/√z]`, by term-wise differentiation of the same series.
pub fn bessel_i1_ratio_deriv<T: Real>(z: T) -> Result<T> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("bessel_i1_ratio_deriv: non-finite argument {z}")));
    }
    // Σ_{m≥1} m c_m z^{m-1} = Σ_{k≥0} (k+1) c_{k+1} z^k with c_1 = 1/16.
    let quarter = T::lit(0.25);
    let tol = T::lit(REL_TOL);
    let mut coeff = T::lit(0.0625); // c_1
    let mut zpow = T::one();
    let mut sum = coeff;
    for k in 1..MAX_TERMS - 1 {
        let m = T::from_usize_lossy(k + 1);
        coeff = coeff * quarter / (m * (m + T::one()));
        zpow *= z;
        let term = m * coeff * zpow;
        sum += term;
        if term.abs() <= tol * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_at_origin() {
        assert_eq!(bessel_i1_ratio(0.0_f64).unwrap(), 0.5);
        assert_eq!(bessel_i1_ratio_deriv(0.0_f64).unwrap(), 0.0625);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(bessel_i1_ratio(f64::NAN).is_err());
        assert!(bessel_i1_ratio(f64::INFINITY).is_err());
        assert!(bessel_i1_ratio_deriv(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn continuous_through_zero() {
        let a = bessel_i1_ratio(1e-12_f64).unwrap();
        let b = bessel_i1_ratio(-1e-12_f64).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((a - 0.5).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_central_difference() {
        for &z in &[-4.0_f64, -0.5, 0.3, 2.0, 5.0] {
            let h = 1e-5;
            let fd = (bessel_i1_ratio(z + h).unwrap() - bessel_i1_ratio(z - h).unwrap()) / (2.0 * h);
            let an = bessel_i1_ratio_deriv(z).unwrap();
            assert!((fd - an).abs() < 1e-9, "z={z}: fd={fd} an={an}");
        }
    }

    #[test]
    fn single_precision_agrees() {
        let d = bessel_i1_ratio(4.0_f64).unwrap();
        let s = bessel_i1_ratio(4.0_f32).unwrap();
        assert!((d - s as f64).abs() < 1e-6);
    }
}
