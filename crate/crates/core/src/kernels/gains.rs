//! Boundary feedback gains `K₁(1,·)` and `K₂(1)`.

use serde::{Deserialize, Serialize};

use super::{gamma, gamma_prime, psi, psi_x, unit_grid, KernelGrid, KernelParams};
use crate::error::{Error, Result};
use crate::quadrature::{trapezoid, trapezoid_product};
use crate::scalar::Real;
use crate::theta::Estimate;

/// Sampled gains for one parameter estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSet<T> {
    /// The estimate these gains were computed from.
    pub estimate: Estimate<T>,
    /// `K₁(1, y_j)` on the uniform grid `y_j = j/(n−1)`.
    pub k1_profile: Vec<T>,
    pub k2: T,
    /// Target-system Robin coefficient `q − λ̂/(2ε)`.
    pub r: T,
}

impl<T: Real> GainSet<T> {
    /// Gains that produce a zero input for every state.
    pub fn zero(nx: usize, estimate: Estimate<T>) -> Self {
        Self { estimate, k1_profile: vec![T::zero(); nx], k2: T::zero(), r: T::zero() }
    }

    pub fn nx(&self) -> usize {
        self.k1_profile.len()
    }

    pub fn dx(&self) -> T {
        T::one() / T::from_usize_lossy(self.nx() - 1)
    }

    /// `∫₀¹ K₁(1,y) u(y) dy + K₂ ζ` by trapezoid; `u` must live on the same grid.
    pub fn apply(&self, u: &[T], zeta: T) -> T {
        debug_assert_eq!(u.len(), self.k1_profile.len());
        trapezoid_product(&self.k1_profile, u, self.dx()) + self.k2 * zeta
    }

    /// Linear interpolation of the `K₁` profile onto an `nx`-node grid.
    pub fn resampled(&self, nx: usize) -> Result<Self> {
        if nx < 2 {
            return Err(Error::Argument(format!("cannot resample gains onto {nx} nodes")));
        }
        if nx == self.nx() {
            return Ok(self.clone());
        }
        let src_n = self.nx() - 1;
        let ys: Vec<T> = unit_grid(nx);
        let k1 = ys
            .iter()
            .map(|&y| {
                let s = y * T::from_usize_lossy(src_n);
                let k = s.floor().to_usize().unwrap_or(0).min(src_n - 1);
                let w = s - T::from_usize_lossy(k);
                self.k1_profile[k] * (T::one() - w) + self.k1_profile[k + 1] * w
            })
            .collect();
        Ok(Self { estimate: self.estimate, k1_profile: k1, k2: self.k2, r: self.r })
    }

    /// `∂_y K₁(1,y)` by second-order differences (one-sided at the ends).
    pub fn k1_y(&self) -> Vec<T> {
        let k = &self.k1_profile;
        let n = k.len();
        let dx = self.dx();
        let two = T::lit(2.0);
        let (three, four) = (T::lit(3.0), T::lit(4.0));
        (0..n)
            .map(|j| {
                if j == 0 {
                    (-three * k[0] + four * k[1] - k[2]) / (two * dx)
                } else if j == n - 1 {
                    (three * k[n - 1] - four * k[n - 2] + k[n - 3]) / (two * dx)
                } else {
                    (k[j + 1] - k[j - 1]) / (two * dx)
                }
            })
            .collect()
    }

    /// `∂²_y K₁(1,y)`: central in the interior, second-order one-sided at the ends.
    pub fn k1_yy(&self) -> Vec<T> {
        let k = &self.k1_profile;
        let n = k.len();
        let dx2 = self.dx() * self.dx();
        let two = T::lit(2.0);
        let (four, five) = (T::lit(4.0), T::lit(5.0));
        (0..n)
            .map(|j| {
                if n < 4 {
                    let c = j.clamp(1, n - 2);
                    (k[c + 1] - two * k[c] + k[c - 1]) / dx2
                } else if j == 0 {
                    (two * k[0] - five * k[1] + four * k[2] - k[3]) / dx2
                } else if j == n - 1 {
                    (two * k[n - 1] - five * k[n - 2] + four * k[n - 3] - k[n - 4]) / dx2
                } else {
                    (k[j + 1] - two * k[j] + k[j - 1]) / dx2
                }
            })
            .collect()
    }

    /// `∫₀¹ K₁(1,y)² dy`.
    pub fn k1_l2_squared(&self) -> T {
        let sq: Vec<T> = self.k1_profile.iter().map(|v| *v * *v).collect();
        trapezoid(&sq, self.dx())
    }
}

/// `h_x(1, y_j)` from the boundary rows of the kernel grid.
///
/// Three-point backward difference where three rows exist; at `j = n−2` the
/// missing row is replaced through `h_xx = h_yy`; at the corner `h_x = −h_y`.
fn h_x_boundary<T: Real>(h: &KernelGrid<T>) -> Vec<T> {
    let n = h.nx();
    let dx = h.dx();
    let last = n - 1;
    let two = T::lit(2.0);
    let (three, four) = (T::lit(3.0), T::lit(4.0));
    (0..n)
        .map(|j| {
            if j + 2 <= last {
                (three * h.get(last, j) - four * h.get(last - 1, j) + h.get(last - 2, j)) / (two * dx)
            } else if j + 1 == last {
                let one_sided = (h.get(last, j) - h.get(last - 1, j)) / dx;
                let hyy = h.get(last, j + 1) - two * h.get(last, j) + h.get(last, j - 1);
                one_sided + hyy / (two * dx)
            } else {
                let hy =
                    (three * h.get(last, last) - four * h.get(last, last - 1) + h.get(last, last - 2)) / (two * dx);
                -hy
            }
        })
        .collect()
}

/// Assembles `K₁(1,·)`, `K₂` and `r` from the series kernels and the grid kernel `h`.
pub fn compute_gains<T: Real>(p: &KernelParams<T>, h: &KernelGrid<T>) -> Result<GainSet<T>> {
    let n = h.nx();
    let dx = h.dx();
    let ys: Vec<T> = unit_grid(n);
    let r = p.r();
    let one = T::one();

    let hx = h_x_boundary(h);
    let h_top = h.row(n - 1);
    // w(y) = h_x(1,y) + r·h(1,y)
    let w: Vec<T> = hx.iter().zip(h_top).map(|(&a, &b)| a + r * b).collect();

    let mut k1 = Vec::with_capacity(n);
    let mut integrand = Vec::with_capacity(n);
    for j in 0..n {
        let y = ys[j];
        integrand.clear();
        for k in j..n {
            integrand.push(w[k] * psi(ys[k], y, p)?);
        }
        let tail = trapezoid(&integrand, dx);
        k1.push(psi_x(one, y, p)? + w[j] + r * psi(one, y, p)? - tail);
    }

    let gam: Vec<T> = ys.iter().map(|&y| gamma(y, p)).collect::<Result<_>>()?;
    let k2 = gamma_prime(one, p)? + r * gamma(one, p)? - trapezoid_product(&w, &gam, dx);

    Ok(GainSet { estimate: p.estimate(), k1_profile: k1, k2, r })
}
