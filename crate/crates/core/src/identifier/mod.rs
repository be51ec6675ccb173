//! Batch least-squares identification of `(λ, a)` from logged trajectory data.
//!
//! For each sine mode `n`, the projected dynamics give the linear relation
//! `f_n(t) = λ g_{n,1}(t) + a g_{n,2}(t)` on the data window. The normal
//! equations of every mode are stacked and solved on their identifiable
//! subspace; unidentifiable directions keep the previous estimate.

mod svd;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{compute_gains, solve_h, KernelParams, KernelScheme};
use crate::quadrature::{cumulative_trapezoid, trapezoid_nonuniform};
use crate::scalar::Real;
use crate::theta::{Estimate, ThetaBox};
use svd::TwoColumnSvd;

/// Logged samples on `[μ_{i+1}, t_{i+1}]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Batch<T> {
    pub times: Vec<T>,
    pub u_samples: Vec<Vec<T>>,
    pub zeta_samples: Vec<T>,
}

impl<T: Real> Batch<T> {
    pub fn new() -> Self {
        Self { times: Vec::new(), u_samples: Vec::new(), zeta_samples: Vec::new() }
    }

    pub fn push(&mut self, t: T, u: &[T], zeta: T) {
        self.times.push(t);
        self.u_samples.push(u.to_vec());
        self.zeta_samples.push(zeta);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Samples with `t ≥ start`, as a new batch.
    pub fn since(&self, start: T) -> Self {
        let k = self.times.partition_point(|t| *t < start);
        Self {
            times: self.times[k..].to_vec(),
            u_samples: self.u_samples[k..].to_vec(),
            zeta_samples: self.zeta_samples[k..].to_vec(),
        }
    }

    /// Drops samples strictly before `start`.
    pub fn discard_before(&mut self, start: T) {
        let k = self.times.partition_point(|t| *t < start);
        if k > 0 {
            self.times.drain(..k);
            self.u_samples.drain(..k);
            self.zeta_samples.drain(..k);
        }
    }

    fn check(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::Argument(format!("batch needs at least 2 samples, got {}", self.len())));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Argument("batch times must be strictly increasing".into()));
        }
        let nx = self.u_samples[0].len();
        if nx < 2 || self.u_samples.iter().any(|u| u.len() != nx) {
            return Err(Error::Argument("batch profiles must share one grid of ≥ 2 nodes".into()));
        }
        Ok(())
    }
}

/// Identifier design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentifierConfig<T> {
    /// Number of sine modes stacked.
    pub n_modes: usize,
    /// Window length in units of the maximum dwell time.
    pub n_tilde: usize,
    /// Singular values at or below `rank_tol · σ_max` count as unidentifiable.
    pub rank_tol: T,
    #[serde(default)]
    pub coefficients: ModeCoefficients,
}

/// Mode coefficients in the regressors.
///
/// `Continuum` uses `επn` and `επ²n²`. `Grid` uses the exact sine-mode
/// eigenpairs of the three-point Laplacian, `ε sin(nπΔx)/Δx` and
/// `ε(2 − 2cos(nπΔx))/Δx²`, for which the relation holds to roundoff on
/// Crank–Nicolson data sampled at every step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeCoefficients {
    Continuum,
    #[default]
    Grid,
}

impl std::str::FromStr for ModeCoefficients {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "continuum" => Ok(Self::Continuum),
            "grid" => Ok(Self::Grid),
            other => Err(Error::Argument(format!("unknown mode coefficients `{other}`"))),
        }
    }
}

impl ModeCoefficients {
    /// `(boundary coefficient, decay rate)` of mode `n` on an `nx`-node grid, before the `ε` factor.
    pub fn of<T: Real>(self, n: usize, nx: usize) -> (T, T) {
        let k = T::from_usize_lossy(n) * T::PI();
        match self {
            Self::Continuum => (k, k * k),
            Self::Grid => {
                let dx = T::one() / T::from_usize_lossy(nx - 1);
                let two = T::lit(2.0);
                ((k * dx).sin() / dx, (two - two * (k * dx).cos()) / (dx * dx))
            }
        }
    }
}

impl<T: Real> Default for IdentifierConfig<T> {
    fn default() -> Self {
        Self { n_modes: 15, n_tilde: 5, rank_tol: T::lit(1e-8), coefficients: ModeCoefficients::Grid }
    }
}

/// `μ_{i+1} = min{ t_d : d ≤ i, t_d ≥ t_{i+1} − Ñ·T }`.
///
/// `event_times` holds `t_0..=t_i`; `t_next` is the candidate `t_{i+1}`.
pub fn window_start<T: Real>(event_times: &[T], t_next: T, n_tilde: usize, t_max: T) -> Result<T> {
    if n_tilde < 1 {
        return Err(Error::Argument("Ñ must be at least 1".into()));
    }
    let earliest = t_next - T::from_usize_lossy(n_tilde) * t_max;
    // tolerate rounding of step-aligned event clocks
    let slack = T::lit(1e-9) * t_max.max(T::one());
    event_times
        .iter()
        .copied()
        .filter(|t| *t >= earliest - slack && *t <= t_next)
        .fold(None, |acc: Option<T>, t| Some(acc.map_or(t, |a| a.min(t))))
        .ok_or_else(|| Error::Internal(format!("no event in the identification window [{earliest}, {t_next}]")))
}

/// `f_n`, `g_{n,1}`, `g_{n,2}` evaluated at every batch sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Regressors<T> {
    pub f: Vec<T>,
    pub g1: Vec<T>,
    pub g2: Vec<T>,
}

/// Mode projections `∫₀¹ sin(nπx) u(x,t) dx` for every sample.
fn projections<T: Real>(batch: &Batch<T>, n: usize) -> Vec<T> {
    let nx = batch.u_samples[0].len();
    let xs: Vec<T> = crate::kernels::unit_grid(nx);
    let k = T::from_usize_lossy(n) * T::PI();
    let basis: Vec<T> = xs.iter().map(|&x| (k * x).sin()).collect();
    let dx = T::one() / T::from_usize_lossy(nx - 1);
    batch.u_samples.iter().map(|u| crate::quadrature::trapezoid_product(&basis, u, dx)).collect()
}

/// Regressors with the continuum coefficients `επn`, `επ²n²`.
pub fn regressors<T: Real>(batch: &Batch<T>, n: usize, b: T, eps: T) -> Result<Regressors<T>> {
    regressors_with(batch, n, b, eps, ModeCoefficients::Continuum)
}

pub fn regressors_with<T: Real>(
    batch: &Batch<T>,
    n: usize,
    b: T,
    eps: T,
    coefficients: ModeCoefficients,
) -> Result<Regressors<T>> {
    batch.check()?;
    if n < 1 {
        return Err(Error::Argument("mode index must be ≥ 1".into()));
    }
    if b == T::zero() {
        return Err(Error::Argument("input gain b must be nonzero".into()));
    }
    let nx = batch.u_samples[0].len();
    let (k, mu): (T, T) = coefficients.of(n, nx);
    let c = eps * k;
    let sign = if n.is_multiple_of(2) { T::one() } else { -T::one() };
    let proj = projections(batch, n);
    let drift: Vec<T> = batch.u_samples.iter().zip(&proj).map(|(u, p)| c * sign * u[nx - 1] + eps * mu * *p).collect();
    let drift_int = cumulative_trapezoid(&batch.times, &drift);
    let g1 = cumulative_trapezoid(&batch.times, &proj);
    let zeta_int = cumulative_trapezoid(&batch.times, &batch.zeta_samples);
    let g2: Vec<T> = zeta_int.iter().map(|z| -c / b * *z).collect();
    let (p0, z0) = (proj[0], batch.zeta_samples[0]);
    let f = (0..batch.len()).map(|k| proj[k] - p0 - c / b * (batch.zeta_samples[k] - z0) + drift_int[k]).collect();
    Ok(Regressors { f, g1, g2 })
}

/// Normal equations `Z_n = G_n θ` of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSystem<T> {
    pub n: usize,
    /// `(H_{n,1}, H_{n,2})`.
    pub z: [T; 2],
    /// `[[Q_{n,1}, Q_{n,2}], [Q_{n,2}, Q_{n,3}]]`.
    pub g: [[T; 2]; 2],
}

impl<T: Real> ModeSystem<T> {
    pub fn q1(&self) -> T {
        self.g[0][0]
    }
    pub fn q2(&self) -> T {
        self.g[0][1]
    }
    pub fn q3(&self) -> T {
        self.g[1][1]
    }
}

pub fn assemble<T: Real>(
    batch: &Batch<T>,
    n: usize,
    b: T,
    eps: T,
    coefficients: ModeCoefficients,
) -> Result<ModeSystem<T>> {
    let r = regressors_with(batch, n, b, eps, coefficients)?;
    let integral = |x: &[T], y: &[T]| {
        let prod: Vec<T> = x.iter().zip(y).map(|(a, c)| *a * *c).collect();
        trapezoid_nonuniform(&batch.times, &prod)
    };
    let q2 = integral(&r.g1, &r.g2);
    Ok(ModeSystem {
        n,
        z: [integral(&r.g1, &r.f), integral(&r.g2, &r.f)],
        g: [[integral(&r.g1, &r.g1), q2], [q2, integral(&r.g2, &r.g2)]],
    })
}

/// Systems for modes `1..=n_modes`.
pub fn assemble_modes<T: Real>(
    batch: &Batch<T>,
    n_modes: usize,
    b: T,
    eps: T,
    coefficients: ModeCoefficients,
) -> Result<Vec<ModeSystem<T>>> {
    (1..=n_modes).map(|n| assemble(batch, n, b, eps, coefficients)).collect()
}

/// Estimate plus the conditioning of the stacked system that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateOutcome<T> {
    pub estimate: Estimate<T>,
    /// Number of singular values above the rank tolerance (0, 1 or 2).
    pub rank: usize,
    pub sigma_max: T,
    pub sigma_min: T,
}

/// Minimum-distance estimate on the least-squares solution set, projected onto the box.
pub fn estimate<T: Real>(
    systems: &[ModeSystem<T>],
    prev: Estimate<T>,
    bounds: &ThetaBox<T>,
    rank_tol: T,
) -> Result<EstimateOutcome<T>> {
    if systems.is_empty() {
        return Err(Error::Argument("no mode systems to estimate from".into()));
    }
    bounds.check()?;
    let col0: Vec<T> = systems.iter().flat_map(|s| [s.g[0][0], s.g[1][0]]).collect();
    let col1: Vec<T> = systems.iter().flat_map(|s| [s.g[0][1], s.g[1][1]]).collect();
    let rhs: Vec<T> = systems.iter().flat_map(|s| s.z).collect();
    let svd = TwoColumnSvd::new(&col0, &col1, &rhs);
    let [s_max, s_min] = svd.sigma;

    let identifiable = |s: T| s_max > T::zero() && s > rank_tol * s_max;
    let rank = svd.sigma.iter().filter(|s| identifiable(**s)).count();
    let prev_v = [prev.lambda_hat, prev.a_hat];
    let dot = |a: [T; 2], b: [T; 2]| a[0] * b[0] + a[1] * b[1];

    let point = match rank {
        0 => bounds.clamp(prev),
        2 => {
            let mut th = [T::zero(); 2];
            for k in 0..2 {
                let coef = svd.scaled_projection[k] / (svd.sigma[k] * svd.sigma[k]);
                th[0] += coef * svd.v[k][0];
                th[1] += coef * svd.v[k][1];
            }
            bounds.clamp(Estimate::new(th[0], th[1]))
        }
        _ => {
            let dir = svd.v[0];
            let null = svd.v[1];
            let level = svd.scaled_projection[0] / (s_max * s_max);
            closest_on_line(level, dir, null, dot(null, prev_v), bounds)
        }
    };
    Ok(EstimateOutcome { estimate: bounds.clamp(point), rank, sigma_max: s_max, sigma_min: s_min })
}

/// Point of `{level·dir + s·null}` inside the box nearest to parameter `s_star`.
fn closest_on_line<T: Real>(level: T, dir: [T; 2], null: [T; 2], s_star: T, bounds: &ThetaBox<T>) -> Estimate<T> {
    let lo = [bounds.lambda_lo, bounds.a_lo];
    let hi = [bounds.lambda_hi, bounds.a_hi];
    let base = [level * dir[0], level * dir[1]];
    let tiny = T::epsilon() * T::lit(16.0);
    let mut s_lo = T::neg_infinity();
    let mut s_hi = T::infinity();
    let mut feasible = true;
    for i in 0..2 {
        if null[i].abs() <= tiny {
            if base[i] < lo[i] || base[i] > hi[i] {
                feasible = false;
            }
        } else {
            let a = (lo[i] - base[i]) / null[i];
            let b = (hi[i] - base[i]) / null[i];
            s_lo = s_lo.max(a.min(b));
            s_hi = s_hi.min(a.max(b));
        }
    }
    let s = if feasible && s_lo <= s_hi { s_star.max(s_lo).min(s_hi) } else { s_star };
    Estimate::new(base[0] + s * null[0], base[1] + s * null[1])
}

/// Known constants needed to evaluate `K₂` for a candidate initial estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainContext<T> {
    pub eps: T,
    pub b: T,
    pub q: T,
    pub kappa: T,
    pub kernel_nx: usize,
    pub scheme: KernelScheme,
}

impl<T: Real> GainContext<T> {
    pub fn k2(&self, e: Estimate<T>) -> Result<T> {
        let p = KernelParams::new(e, self.eps, self.b, self.q, self.kappa)?;
        let h = solve_h(&p, self.kernel_nx, self.scheme)?;
        Ok(compute_gains(&p, &h)?.k2)
    }
}

/// Threshold below which `K₂(1; θ̂(0))` counts as zero.
pub const K2_ZERO_TOL: f64 = 1e-9;

/// Replaces `λ̂(0)` when a zero PDE profile and a vanishing `K₂` would leave
/// the ODE unregulated forever. Returns the estimate and whether it changed.
pub fn maybe_fix_initial_estimate<T: Real>(
    u0: &[T],
    zeta0: T,
    est0: Estimate<T>,
    bounds: &ThetaBox<T>,
    ctx: &GainContext<T>,
) -> Result<(Estimate<T>, bool)> {
    let u_zero = u0.iter().all(|v| *v == T::zero());
    if !u_zero || zeta0 == T::zero() {
        return Ok((est0, false));
    }
    if ctx.k2(est0)?.abs() >= T::lit(K2_ZERO_TOL) {
        return Ok((est0, false));
    }
    let mid = T::lit(0.5) * (bounds.lambda_lo + bounds.lambda_hi);
    let lambda_hat = if mid != est0.lambda_hat { mid } else { bounds.lambda_lo };
    let fixed = Estimate::new(lambda_hat, est0.a_hat);
    log::info!("K2 vanishes at the initial estimate; λ̂(0) moved from {} to {}", est0.lambda_hat, lambda_hat);
    Ok((fixed, fixed != est0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds() -> ThetaBox<f64> {
        ThetaBox::new(0.0, 5.0, 0.0, 3.0).unwrap()
    }

    #[test]
    fn window_examples() {
        assert_eq!(window_start(&[0.0, 1.2], 2.4, 5, 1.2).unwrap(), 0.0);
        let events: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert_eq!(window_start(&events, 10.0, 5, 1.2).unwrap(), 4.0);
        assert!(matches!(window_start(&[0.0], 5.0, 1, 1.2), Err(Error::Internal(_))));
        assert!(window_start(&[0.0], 1.0, 0, 1.2).is_err());
    }

    #[test]
    fn window_length_one() {
        let events = [0.0, 0.7, 1.5, 2.1, 3.0];
        let mu = window_start(&events, 3.5, 1, 1.2).unwrap();
        assert!(3.5 - mu <= 1.2);
    }

    fn exp_batch(zeta: impl Fn(f64) -> f64, nx: usize) -> Batch<f64> {
        let mut b = Batch::new();
        for k in 0..=250 {
            let t = k as f64 * 0.004;
            b.push(t, &vec![0.0; nx], zeta(t));
        }
        b
    }

    #[test]
    fn regressors_without_pde_state() {
        let batch = exp_batch(|t| 5.0 * (1.5 * t).exp(), 21);
        for n in [1, 2, 7] {
            let r = regressors(&batch, n, 1.0, 1.0).unwrap();
            let c = std::f64::consts::PI * n as f64;
            let zint = cumulative_trapezoid(&batch.times, &batch.zeta_samples);
            for k in 0..batch.len() {
                assert_eq!(r.g1[k], 0.0);
                let f = -c * (batch.zeta_samples[k] - batch.zeta_samples[0]);
                assert!((r.f[k] - f).abs() <= 1e-12 * f.abs().max(1.0));
                assert!((r.g2[k] + c * zint[k]).abs() <= 1e-12 * zint[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn regressors_without_ode_state() {
        let mut batch = Batch::new();
        for k in 0..10 {
            let t = k as f64 * 0.01;
            let u: Vec<f64> = (0..11).map(|j| (j as f64 * 0.1 + t).cos()).collect();
            batch.push(t, &u, 0.0);
        }
        let r = regressors(&batch, 3, 1.0, 1.0).unwrap();
        assert!(r.g2.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn batch_validation() {
        let mut b = Batch::new();
        b.push(0.0, &[0.0, 0.0, 0.0], 0.0);
        assert!(regressors(&b, 1, 1.0, 1.0).is_err());
        b.push(0.0, &[0.0, 0.0, 0.0], 0.0);
        assert!(regressors(&b, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn zero_batch_gives_zero_system_and_keeps_prev() {
        let batch = exp_batch(|_| 0.0, 11);
        let systems = assemble_modes(&batch, 15, 1.0, 1.0, ModeCoefficients::Continuum).unwrap();
        for s in &systems {
            assert_eq!(s.z, [0.0, 0.0]);
            assert_eq!(s.g, [[0.0, 0.0], [0.0, 0.0]]);
        }
        let prev = Estimate::new(2.5, 1.0);
        let out = estimate(&systems, prev, &bounds(), 1e-8).unwrap();
        assert_eq!(out.estimate, prev);
        assert_eq!(out.rank, 0);
    }

    #[test]
    fn ode_only_batch_identifies_pole_alone() {
        let batch = exp_batch(|t| 5.0 * (1.5 * t).exp(), 21);
        let systems = assemble_modes(&batch, 15, 1.0, 1.0, ModeCoefficients::Continuum).unwrap();
        for s in &systems {
            assert_eq!(s.q1(), 0.0);
            assert_eq!(s.q2(), 0.0);
            assert_eq!(s.z[0], 0.0);
            assert!(s.q3() > 0.0);
        }
        let prev = Estimate::new(2.5, 0.5);
        let out = estimate(&systems, prev, &bounds(), 1e-8).unwrap();
        assert_eq!(out.rank, 1);
        assert!((out.estimate.lambda_hat - 2.5).abs() < 1e-12);
        // trapezoid in time on an exponential: O(dt²) relative error
        assert!((out.estimate.a_hat - 1.5).abs() < 1e-4, "{:?}", out.estimate);
    }

    #[test]
    fn estimate_rejects_empty() {
        assert!(estimate::<f64>(&[], Estimate::new(0.0, 0.0), &bounds(), 1e-8).is_err());
    }

    #[test]
    fn full_rank_solution_is_clamped() {
        // exact systems for θ = (7, 1.5); λ exceeds the box
        let mk = |g: [[f64; 2]; 2]| {
            let th = [7.0, 1.5];
            ModeSystem { n: 1, z: [g[0][0] * th[0] + g[0][1] * th[1], g[1][0] * th[0] + g[1][1] * th[1]], g }
        };
        let systems = [mk([[2.0, 0.3], [0.3, 1.0]]), mk([[1.0, -0.2], [-0.2, 4.0]])];
        let out = estimate(&systems, Estimate::new(1.0, 1.0), &bounds(), 1e-8).unwrap();
        assert_eq!(out.rank, 2);
        assert_eq!(out.estimate.lambda_hat, 5.0);
        assert!((out.estimate.a_hat - 1.5).abs() < 1e-12);
    }

    #[test]
    fn rank_one_line_intersects_box_nearest_prev() {
        // constraint λ + a = 4 only; prev (0, 0) projects to (2, 2)
        let g = [[1.0, 1.0], [1.0, 1.0]];
        let systems = [ModeSystem { n: 1, z: [4.0, 4.0], g }];
        let out = estimate(&systems, Estimate::new(0.0, 0.0), &bounds(), 1e-8).unwrap();
        assert_eq!(out.rank, 1);
        assert!((out.estimate.lambda_hat - 2.0).abs() < 1e-12);
        assert!((out.estimate.a_hat - 2.0).abs() < 1e-12);
        // prev (5, 0) projects to (4.5, -0.5): outside, nearest feasible point on the
        // segment is (4, 0)
        let out = estimate(&systems, Estimate::new(5.0, 0.0), &bounds(), 1e-8).unwrap();
        assert!((out.estimate.lambda_hat - 4.0).abs() < 1e-12);
        assert!(out.estimate.a_hat.abs() < 1e-12);
    }

    #[test]
    fn fix_leaves_nonzero_profile_alone() {
        let ctx = GainContext { eps: 1.0, b: 1.0, q: 5.0, kappa: 16.0, kernel_nx: 21, scheme: KernelScheme::Paper };
        let est = Estimate::new(3.0, 1.5);
        let mut u = vec![0.0; 21];
        u[3] = 1e-3;
        assert_eq!(maybe_fix_initial_estimate(&u, 5.0, est, &bounds(), &ctx).unwrap(), (est, false));
        assert_eq!(maybe_fix_initial_estimate(&[0.0; 21], 0.0, est, &bounds(), &ctx).unwrap(), (est, false));
    }
}
