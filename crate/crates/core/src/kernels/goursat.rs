//! Finite-difference solution of the kernel `h` on the triangle `0 ≤ y ≤ x ≤ 1`.
//!
//! `h` satisfies `h_yy = h_xx`, vanishes on the diagonal and carries the
//! integral Neumann condition `ε h_y(x,0) + bγ(x) − b∫₀ˣ h(x,y)γ(y)dy = 0`.
//! Rows are filled marching in `x` with the wave stencil
//! `h[i+1][j] = h[i][j+1] + h[i][j-1] − h[i-1][j]`; the `y = 0` column uses a
//! ghost value eliminated through the Neumann condition.

use serde::{Deserialize, Serialize};

use super::{gamma, gamma_prime, gamma_second, unit_grid, KernelParams};
use crate::error::{Error, Result};
use crate::quadrature::trapezoid_product;
use crate::scalar::Real;

/// How the first sub-diagonal `h[i][i-1]` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelScheme {
    /// `h[i][i-1] = h[1][0]`, with `h[1][0]` from a one-sided difference of the Neumann condition.
    #[default]
    Paper,
    /// `h[1][0]` by trapezoid integration of the Neumann condition along the
    /// characteristic `x − y = dx`, then propagated along it.
    Refined,
}

impl std::str::FromStr for KernelScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "refined" => Ok(Self::Refined),
            other => Err(Error::Argument(format!("unknown kernel scheme `{other}`"))),
        }
    }
}

/// Lower-triangular grid values `h(x_i, y_j)`, `j ≤ i`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid<T> {
    nx: usize,
    dx: T,
    values: Vec<T>,
}

impl<T: Real> KernelGrid<T> {
    fn zeros(nx: usize) -> Self {
        Self { nx, dx: T::one() / T::from_usize_lossy(nx - 1), values: vec![T::zero(); nx * (nx + 1) / 2] }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    #[inline]
    fn offset(i: usize, j: usize) -> usize {
        i * (i + 1) / 2 + j
    }

    /// `h(x_i, y_j)`; panics unless `j ≤ i < nx`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        assert!(j <= i && i < self.nx, "({i}, {j}) outside the triangle");
        self.values[Self::offset(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: T) {
        self.values[Self::offset(i, j)] = v;
    }

    /// Row `i` as a slice, `h(x_i, y_0..=y_i)`.
    pub fn row(&self, i: usize) -> &[T] {
        let start = Self::offset(i, 0);
        &self.values[start..start + i + 1]
    }
}

/// Solves the kernel problem for `h` on an `nx × nx` triangular grid.
pub fn solve_h<T: Real>(p: &KernelParams<T>, nx: usize, scheme: KernelScheme) -> Result<KernelGrid<T>> {
    if nx < 3 {
        return Err(Error::Argument(format!("kernel grid needs nx ≥ 3, got {nx}")));
    }
    let xs: Vec<T> = unit_grid(nx);
    let gam: Vec<T> = xs.iter().map(|&x| gamma(x, p)).collect::<Result<_>>()?;
    let mut grid = KernelGrid::zeros(nx);
    let dx = grid.dx;
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (b, eps) = (p.b, p.eps);

    let h10 = match scheme {
        KernelScheme::Paper => {
            // −ε h10/dx + bγ(x₁) − b·(dx/2)·h10·γ(0) = 0
            let denom = eps / dx + b * dx * half * gam[0];
            if denom == T::zero() {
                return Err(Error::Config("singular first kernel step (b·κ·dx² = 2ε)".into()));
            }
            b * gam[1] / denom
        }
        KernelScheme::Refined => {
            // g(dx) = dx/2·(g'(0) + g'(dx)), g'(x) = (b/ε)(γ(x) − ∫₀ˣ g(x−y)γ(y)dy)
            let denom = T::one() + dx * dx * b * gam[0] / (T::lit(4.0) * eps);
            if denom == T::zero() {
                return Err(Error::Config("singular first kernel step (b·κ·dx² = 4ε)".into()));
            }
            b * dx * (gam[0] + gam[1]) / (two * eps * denom)
        }
    };
    for i in 1..nx {
        grid.set(i, i - 1, h10);
    }

    let mut prod = Vec::with_capacity(nx);
    for i in 1..nx - 1 {
        // ghost h[i][-1] from the centred Neumann condition at x_i
        prod.clear();
        prod.extend_from_slice(grid.row(i));
        let integral = trapezoid_product(&prod, &gam[..=i], dx);
        let ghost = grid.get(i, 1) + two * dx / eps * b * (gam[i] - integral);
        let below = grid.get(i - 1, 0);
        grid.set(i + 1, 0, grid.get(i, 1) + ghost - below);
        for j in 1..i {
            let v = grid.get(i, j + 1) + grid.get(i, j - 1) - grid.get(i - 1, j);
            grid.set(i + 1, j, v);
        }
    }
    Ok(grid)
}

/// Max-norm residuals of the `γ` and `h` defining conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelResiduals<T> {
    /// `max |εγ'' + a_m γ|` over the grid.
    pub gamma_ode: T,
    /// `|γ(0) + κ|`.
    pub gamma_value: T,
    /// `|γ'(0)|`.
    pub gamma_slope: T,
    /// `max |ε h_y(x,0) + bγ(x) − b∫₀ˣ hγ|`, rows with `i ≥ 2`.
    pub h_neumann: T,
    /// `max |h_xx − h_yy|` at interior nodes with a full five-point stencil.
    pub h_wave: T,
    /// `max_i |h(x_i, x_i)|`.
    pub h_diagonal: T,
    /// `|h(0, 0)|`.
    pub h_origin: T,
}

pub fn kernel_residuals<T: Real>(p: &KernelParams<T>, h: &KernelGrid<T>) -> Result<KernelResiduals<T>> {
    let nx = h.nx();
    let dx = h.dx();
    let xs: Vec<T> = unit_grid(nx);
    let gam: Vec<T> = xs.iter().map(|&x| gamma(x, p)).collect::<Result<_>>()?;

    let mut gamma_ode = T::zero();
    for &x in &xs {
        let r = p.eps * gamma_second(x, p)? + p.a_m() * gamma(x, p)?;
        gamma_ode = gamma_ode.max(r.abs());
    }
    let gamma_value = (gamma(T::zero(), p)? + p.kappa).abs();
    let gamma_slope = gamma_prime(T::zero(), p)?.abs();

    let two = T::lit(2.0);
    let mut h_neumann = T::zero();
    for i in 2..nx {
        let hy0 = (-T::lit(3.0) * h.get(i, 0) + T::lit(4.0) * h.get(i, 1) - h.get(i, 2)) / (two * dx);
        let integral = trapezoid_product(h.row(i), &gam[..=i], dx);
        let r = p.eps * hy0 + p.b * gam[i] - p.b * integral;
        h_neumann = h_neumann.max(r.abs());
    }

    let mut h_wave = T::zero();
    let dx2 = dx * dx;
    for i in 1..nx - 1 {
        for j in 1..i.saturating_sub(1) {
            let hxx = h.get(i + 1, j) - two * h.get(i, j) + h.get(i - 1, j);
            let hyy = h.get(i, j + 1) - two * h.get(i, j) + h.get(i, j - 1);
            h_wave = h_wave.max(((hxx - hyy) / dx2).abs());
        }
    }

    let h_diagonal = (0..nx).map(|i| h.get(i, i).abs()).fold(T::zero(), T::max);
    Ok(KernelResiduals {
        gamma_ode,
        gamma_value,
        gamma_slope,
        h_neumann,
        h_wave,
        h_diagonal,
        h_origin: h.get(0, 0).abs(),
    })
}
