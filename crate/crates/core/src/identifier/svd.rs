//! Thin SVD of a tall two-column matrix by a single one-sided Jacobi rotation.

use crate::scalar::Real;

/// `A = U Σ Vᵀ` for `A` with two columns. `U` is not stored; only its
/// action on one right-hand side is kept.
#[derive(Debug, Clone)]
pub(crate) struct TwoColumnSvd<T> {
    /// Singular values, descending.
    pub sigma: [T; 2],
    /// Right singular vectors (columns of V), matching `sigma`.
    pub v: [[T; 2]; 2],
    /// `(A vₖ)·z = σₖ (uₖ·z)` for the right-hand side `z`.
    pub scaled_projection: [T; 2],
}

impl<T: Real> TwoColumnSvd<T> {
    pub fn new(col0: &[T], col1: &[T], rhs: &[T]) -> Self {
        let dot = |a: &[T], b: &[T]| a.iter().zip(b).map(|(x, y)| *x * *y).sum::<T>();
        let alpha = dot(col0, col0);
        let beta = dot(col1, col1);
        let gamma = dot(col0, col1);
        let (cs, sn) = if gamma == T::zero() {
            (T::one(), T::zero())
        } else {
            let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
            let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
            let cs = T::one() / (T::one() + t * t).sqrt();
            (cs, cs * t)
        };
        // rotated columns a0' = cs·a0 − sn·a1, a1' = sn·a0 + cs·a1
        let mut n0 = T::zero();
        let mut n1 = T::zero();
        let mut p0 = T::zero();
        let mut p1 = T::zero();
        for k in 0..col0.len() {
            let r0 = cs * col0[k] - sn * col1[k];
            let r1 = sn * col0[k] + cs * col1[k];
            n0 += r0 * r0;
            n1 += r1 * r1;
            p0 += r0 * rhs[k];
            p1 += r1 * rhs[k];
        }
        let (s0, s1) = (n0.sqrt(), n1.sqrt());
        let v0 = [cs, -sn];
        let v1 = [sn, cs];
        if s0 >= s1 {
            Self { sigma: [s0, s1], v: [v0, v1], scaled_projection: [p0, p1] }
        } else {
            Self { sigma: [s1, s0], v: [v1, v0], scaled_projection: [p1, p0] }
        }
    }
}
