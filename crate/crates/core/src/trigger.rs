//! Event-triggering mechanism: deviation signal, dynamic threshold variable,
//! trigger rule, and the dwell-time diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{compute_gains, solve_h, GainSet, KernelParams, KernelScheme};
use crate::plant::{l2_norm, PlantState};
use crate::quadrature::{adaptive_simpson, trapezoid};
use crate::scalar::Real;
use crate::theta::{Estimate, ThetaBox};

/// Design parameters of the triggering rule and of the `m` dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtmParams<T> {
    /// Threshold gain ξ.
    pub xi: T,
    /// Maximum dwell time.
    pub t_max: T,
    /// Decay rate η of `m`.
    pub eta: T,
    /// Weight of `d²` in `ṁ`.
    pub lambda_d: T,
    /// Weights of `u(1)²`, `u(0)²`, `‖u‖²`, `ζ²` in `ṁ`.
    pub kappas: [T; 4],
    /// Initial value of `m`, negative.
    pub m0: T,
}

impl<T: Real> EtmParams<T> {
    pub fn check(&self) -> Result<()> {
        let pos = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("xi", self.xi)?;
        pos("T", self.t_max)?;
        pos("eta", self.eta)?;
        pos("lambda_d", self.lambda_d)?;
        for (k, v) in self.kappas.iter().enumerate() {
            pos(&format!("kappa{}", k + 1), *v)?;
        }
        if !(self.m0 < T::zero()) {
            return Err(Error::Config(format!("m0 must be negative, got {}", self.m0)));
        }
        Ok(())
    }
}

/// State carried between events: threshold variable, last sample and the input it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerState<T> {
    pub m: T,
    pub t_last: T,
    pub u_sampled: Vec<T>,
    pub zeta_sampled: T,
    /// Held input `U_d` in force since `t_last`.
    pub held_input: T,
    pub gains: GainSet<T>,
}

impl<T: Real> TriggerState<T> {
    /// Samples `s` and computes the held input from `gains`; `m` is carried over.
    pub fn resample(m: T, s: &PlantState<T>, gains: GainSet<T>) -> Self {
        let held_input = held_input(&s.u, s.zeta, &gains);
        Self { m, t_last: s.t, u_sampled: s.u.clone(), zeta_sampled: s.zeta, held_input, gains }
    }
}

/// `U_d = ∫₀¹ K₁(1,y) u(y,t_i) dy + K₂ ζ(t_i)`.
pub fn held_input<T: Real>(u_sampled: &[T], zeta_sampled: T, gains: &GainSet<T>) -> T {
    gains.apply(u_sampled, zeta_sampled)
}

/// Continuous-in-state control signal `U_c(t)` with the gains frozen at the last event.
pub fn continuous_input<T: Real>(s: &PlantState<T>, ts: &TriggerState<T>) -> T {
    ts.gains.apply(&s.u, s.zeta)
}

/// `d(t) = ∫K₁(1,y)(u(y,t) − u(y,t_i))dy + K₂(ζ(t) − ζ(t_i))`.
pub fn deviation<T: Real>(s: &PlantState<T>, ts: &TriggerState<T>) -> T {
    let diff: Vec<T> = s.u.iter().zip(&ts.u_sampled).map(|(a, b)| *a - *b).collect();
    let d = ts.gains.apply(&diff, s.zeta - ts.zeta_sampled);
    debug_assert!({
        let via_inputs = continuous_input(s, ts) - ts.held_input;
        let scale = T::one() + via_inputs.abs() + ts.held_input.abs();
        (via_inputs - d).abs() <= T::lit(1e3) * T::epsilon() * scale
    });
    d
}

/// Right-hand side of `ṁ` without the `−ηm` term.
pub fn m_forcing<T: Real>(s: &PlantState<T>, d: T, p: &EtmParams<T>) -> T {
    let [k1, k2, k3, k4] = p.kappas;
    let u1 = s.u_right();
    let u0 = s.u_left();
    let norm = l2_norm(s);
    p.lambda_d * d * d - k1 * u1 * u1 - k2 * u0 * u0 - k3 * norm * norm - k4 * s.zeta * s.zeta
}

/// Exact-exponential update of `m` over `dt` with the forcing frozen at `(s, d)`.
pub fn step_m<T: Real>(m: T, s: &PlantState<T>, d: T, p: &EtmParams<T>, dt: T) -> Result<T> {
    if !(m < T::zero()) {
        return Err(Error::Internal(format!("m = {m} must be negative before the update")));
    }
    let forcing = m_forcing(s, d, p);
    let decay = (-p.eta * dt).exp();
    let next = m * decay + forcing * (T::one() - decay) / p.eta;
    if !(next < T::zero()) {
        return Err(Error::Internal(format!(
            "m became non-negative ({next}) at t = {}; the m integrator lost the sign",
            s.t
        )));
    }
    Ok(next)
}

/// `d² ≥ −ξm` or the maximum dwell time has elapsed.
pub fn check_trigger<T: Real>(d: T, m: T, t: T, t_last: T, p: &EtmParams<T>) -> bool {
    let slack = T::lit(1e-9) * p.t_max.max(T::one());
    d * d >= -p.xi * m || t - t_last >= p.t_max - slack
}

/// Worst-case constants bounding `ḋ²` over the parameter box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Constants<T> {
    pub eps1: T,
    pub eps2: T,
    pub eps3: T,
    pub eps4: T,
    pub eps5: T,
}

/// Known quantities the dwell-time constants depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignConstants<T> {
    pub bounds: ThetaBox<T>,
    pub q: T,
    pub eps: T,
    pub b: T,
    pub kappa: T,
}

/// Box search resolution and kernel discretisation for [`lemma1_constants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub n_lambda: usize,
    pub n_a: usize,
    pub kernel_nx: usize,
    pub scheme: KernelScheme,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self { n_lambda: 11, n_a: 11, kernel_nx: 21, scheme: KernelScheme::Paper }
    }
}

struct SampleGains<T> {
    gains: GainSet<T>,
    k11: T,
    k1y_end: T,
    k1y_start: T,
    k1yy: Vec<T>,
}

/// Maximises the five `ḋ²` bounding expressions over a grid of box samples.
///
/// The unknown true `λ` inside the `K₁_yy ε + K₁ λ` term is bounded by its worst
/// endpoint of `[λ̲, λ̄]` (the square is convex in `λ`).
pub fn lemma1_constants<T: Real>(c: &DesignConstants<T>, grid: SearchGrid) -> Result<Lemma1Constants<T>> {
    c.bounds.check()?;
    if grid.n_lambda == 0 || grid.n_a == 0 {
        return Err(Error::Argument("search grid needs at least one sample per axis".into()));
    }
    let samples = c.bounds.samples(grid.n_lambda, grid.n_a);
    let mut per_sample = Vec::with_capacity(samples.len());
    for est in &samples {
        let p = KernelParams::new(*est, c.eps, c.b, c.q, c.kappa)?;
        let h = solve_h(&p, grid.kernel_nx, grid.scheme)?;
        let gains = compute_gains(&p, &h)?;
        let k1y = gains.k1_y();
        per_sample.push(SampleGains {
            k11: *gains.k1_profile.last().unwrap(),
            k1y_end: *k1y.last().unwrap(),
            k1y_start: k1y[0],
            k1yy: gains.k1_yy(),
            gains,
        });
    }

    let eps = c.eps;
    let sq = |v: T| v * v;
    let max_of = |f: &dyn Fn(&SampleGains<T>) -> T| per_sample.iter().map(f).fold(T::neg_infinity(), T::max);

    let max_k11_sq = max_of(&|s| sq(s.k11));
    let max_k2_sq = max_of(&|s| sq(s.gains.k2));
    let max_k1_l2 = max_of(&|s| s.gains.k1_l2_squared());
    let dx = per_sample[0].gains.dx();
    let max_reaction = max_of(&|s| {
        [c.bounds.lambda_lo, c.bounds.lambda_hi]
            .iter()
            .map(|&lam| {
                let v: Vec<T> =
                    s.k1yy.iter().zip(&s.gains.k1_profile).map(|(yy, k)| sq(*yy * eps + *k * lam)).collect();
                trapezoid(&v, dx)
            })
            .fold(T::neg_infinity(), T::max)
    });

    let mut max_k1_gap = T::zero();
    let mut max_k2_gap = T::zero();
    let mut diff = vec![T::zero(); per_sample[0].gains.nx()];
    for (i, a) in per_sample.iter().enumerate() {
        for b in &per_sample[i + 1..] {
            for (d, (x, y)) in diff.iter_mut().zip(a.gains.k1_profile.iter().zip(&b.gains.k1_profile)) {
                *d = sq(*x - *y);
            }
            max_k1_gap = max_k1_gap.max(trapezoid(&diff, dx));
            max_k2_gap = max_k2_gap.max(sq(a.gains.k2 - b.gains.k2));
        }
    }

    let (six, twelve) = (T::lit(6.0), T::lit(12.0));
    let eps_sq = eps * eps;
    Ok(Lemma1Constants {
        eps1: six * eps_sq * max_k11_sq,
        eps2: six * max_of(&|s| sq(c.q * s.k11 * eps + s.k1y_end * eps)),
        eps3: six * max_of(&|s| sq(s.k1y_start * eps + s.gains.k2 * c.b)),
        eps4: twelve * max_reaction
            + twelve * eps_sq * max_k11_sq * max_k1_l2
            + twelve * eps_sq * max_k11_sq * max_k1_gap,
        eps5: twelve * sq(c.bounds.a_hi) * max_k2_sq
            + twelve * eps_sq * max_k11_sq * max_k2_sq
            + twelve * eps_sq * max_k11_sq * max_k2_gap,
    })
}

/// Lower bound on the inter-event time implied by the `ḋ²` constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellReport<T> {
    pub eps1: T,
    pub eps2: T,
    pub eps3: T,
    pub eps4: T,
    pub eps5: T,
    pub n1: T,
    pub n2: T,
    pub n3: T,
    pub tau_a: T,
    pub tau_min: T,
}

/// `∫₀¹ ds / (n₁ + n₂ s + n₃ s²)` by adaptive Simpson, relative accuracy ≈ 1e−10.
pub fn dwell_integral<T: Real>(n1: T, n2: T, n3: T) -> Result<T> {
    if !(n1 > T::zero()) || n2 < T::zero() || n3 < T::zero() {
        return Err(Error::Argument(format!("dwell integral needs n1 > 0 and n2, n3 ≥ 0; got ({n1}, {n2}, {n3})")));
    }
    let floor = T::one() / (n1 + n2 + n3);
    let tol = T::lit(1e-10) * floor;
    Ok(adaptive_simpson(|s: T| T::one() / (n1 + n2 * s + n3 * s * s), T::zero(), T::one(), tol))
}

pub fn dwell_bound<T: Real>(c: &Lemma1Constants<T>, p: &EtmParams<T>) -> Result<DwellReport<T>> {
    if !(c.eps1 > T::zero()) {
        return Err(Error::Argument(format!("eps1 must be positive, got {}", c.eps1)));
    }
    let half = T::lit(0.5);
    let n1 = half * p.xi * p.lambda_d;
    let n2 = T::one() + c.eps1 + p.xi * p.lambda_d + p.eta;
    let n3 = T::one() + p.eta + c.eps1 + half * p.xi * p.lambda_d;
    let tau_a = dwell_integral(n1, n2, n3)?;
    Ok(DwellReport {
        eps1: c.eps1,
        eps2: c.eps2,
        eps3: c.eps3,
        eps4: c.eps4,
        eps5: c.eps5,
        n1,
        n2,
        n3,
        tau_a,
        tau_min: tau_a.min(p.t_max),
    })
}

/// Smallest state weights `κ_j = 2ε_{j+1}/ξ` that the dwell-time argument admits.
pub fn suggest_kappas<T: Real>(c: &Lemma1Constants<T>, xi: T) -> Result<[T; 4]> {
    if !(xi > T::zero()) {
        return Err(Error::Argument(format!("xi must be positive, got {xi}")));
    }
    let two = T::lit(2.0);
    Ok([c.eps2, c.eps3, c.eps4, c.eps5].map(|e| two * e / xi))
}

/// Dwell-time constants at a single estimate (collapsed box).
pub fn point_constants<T: Real>(
    estimate: Estimate<T>,
    c: &DesignConstants<T>,
    grid: SearchGrid,
) -> Result<Lemma1Constants<T>> {
    let collapsed = ThetaBox {
        lambda_lo: estimate.lambda_hat,
        lambda_hi: estimate.lambda_hat,
        a_lo: estimate.a_hat,
        a_hi: estimate.a_hat,
    };
    lemma1_constants(&DesignConstants { bounds: collapsed, ..*c }, grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn etm() -> EtmParams<f64> {
        EtmParams { xi: 1.1, t_max: 1.2, eta: 15.0, lambda_d: 20.0, kappas: [100.0; 4], m0: -500.0 }
    }

    #[test]
    fn trigger_rule_cases() {
        let p = etm();
        let m = -3.0 / 1.1;
        assert!(check_trigger(2.0, m, 0.5, 0.0, &p));
        assert!(check_trigger(1.0, m, 1.2, 0.0, &p));
        assert!(!check_trigger(1.0, m, 0.5, 0.0, &p));
        // equality fires
        assert!(check_trigger(2.0, -4.0, 0.1, 0.0, &EtmParams { xi: 1.0, ..p }));
    }

    #[test]
    fn m_decays_without_forcing() {
        let p = etm();
        let s = PlantState::zeros(11);
        let mut m = p.m0;
        for k in 1..=100 {
            m = step_m(m, &s, 0.0, &p, 0.004).unwrap();
            let expect = p.m0 * (-15.0 * 0.004 * k as f64).exp();
            assert!((m - expect).abs() <= 1e-10 * expect.abs());
        }
    }

    #[test]
    fn state_forcing_pushes_m_down() {
        let p = etm();
        let s = PlantState::new(vec![1.0; 11], 2.0);
        let pure = step_m(p.m0, &PlantState::zeros(11), 0.0, &p, 0.004).unwrap();
        let forced = step_m(p.m0, &s, 0.0, &p, 0.004).unwrap();
        assert!(forced < pure);
    }

    #[test]
    fn m_sign_loss_is_an_error() {
        let p = etm();
        let s = PlantState::zeros(11);
        assert!(matches!(step_m(-1e-6, &s, 100.0, &p, 0.004), Err(Error::Internal(_))));
        assert!(step_m(0.0, &s, 0.0, &p, 0.004).is_err());
    }

    #[test]
    fn dwell_integral_constant_integrand() {
        assert!((dwell_integral(4.0f64, 0.0, 0.0).unwrap() - 0.25).abs() < 1e-14);
        assert!(dwell_integral(0.0, 1.0, 1.0).is_err());
        assert!(dwell_integral(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn kappa_suggestions() {
        let c = Lemma1Constants { eps1: 1.0, eps2: 0.55, eps3: 1.0, eps4: 2.0, eps5: 3.0 };
        let k: [f64; 4] = suggest_kappas(&c, 1.1).unwrap();
        assert!((k[0] - 1.0).abs() < 1e-15);
        let k2: [f64; 4] = suggest_kappas(&c, 2.2).unwrap();
        for j in 0..4 {
            assert!((k2[j] - 0.5 * k[j]).abs() < 1e-15);
        }
        assert!(suggest_kappas(&c, 0.0).is_err());
    }

    #[test]
    fn etm_validation() {
        assert!(etm().check().is_ok());
        assert!(EtmParams { m0: 1.0, ..etm() }.check().is_err());
        assert!(EtmParams { kappas: [1.0, 0.0, 1.0, 1.0], ..etm() }.check().is_err());
    }
}
