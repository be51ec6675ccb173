mod common;

use common::simpson;
use etbc_core::plant::{l2_norm, mode_projection};
use etbc_core::{CrankNicolson, GridSpec, InitialProfile, PlantParams, PlantState};
use proptest::prelude::*;

fn reference() -> PlantParams<f64> {
    PlantParams { a: 1.5, b: 1.0, eps: 1.0, lambda: 3.0, q: 5.0 }
}

/// Profiles at every `stride`-th step, restricted to every `node_stride`-th node.
fn trajectory(
    p: PlantParams<f64>,
    u0: &dyn Fn(f64) -> f64,
    zeta0: f64,
    nx: usize,
    dt: f64,
    horizon: f64,
    stride: usize,
    node_stride: usize,
) -> Vec<(Vec<f64>, f64)> {
    let cn = CrankNicolson::new(p, GridSpec::new(nx, dt).unwrap()).unwrap();
    let xs: Vec<f64> = (0..nx).map(|i| i as f64 / (nx - 1) as f64).collect();
    let mut s = PlantState::new(xs.iter().map(|x| u0(*x)).collect(), zeta0);
    let steps = (horizon / dt).round() as usize;
    let mut out = vec![(s.u.iter().step_by(node_stride).copied().collect(), s.zeta)];
    for k in 1..=steps {
        s = cn.step(&s, 0.0).unwrap();
        if k % stride == 0 {
            out.push((s.u.iter().step_by(node_stride).copied().collect(), s.zeta));
        }
    }
    out
}

fn trajectory_distance(a: &[(Vec<f64>, f64)], b: &[(Vec<f64>, f64)]) -> (f64, f64) {
    assert_eq!(a.len(), b.len());
    let (mut num, mut den) = (0.0, 0.0);
    for ((ua, za), (ub, zb)) in a.iter().zip(b) {
        num += ua.iter().zip(ub).map(|(x, y)| (x - y).powi(2)).sum::<f64>() + (za - zb).powi(2);
        den += ub.iter().map(|y| y * y).sum::<f64>() + zb * zb;
    }
    (num.sqrt(), den.sqrt())
}

fn x2sin2(x: f64) -> f64 {
    x * x * (2.0 * std::f64::consts::PI * x).sin()
}

#[test]
fn open_loop_matches_refined_oracle() {
    let coarse = trajectory(reference(), &x2sin2, 5.0, 21, 0.004, 4.0, 1, 1);
    let fine = trajectory(reference(), &x2sin2, 5.0, 81, 0.001, 4.0, 4, 4);
    let (err, scale) = trajectory_distance(&coarse, &fine);
    assert!(err / scale < 0.02, "relative trajectory error {}", err / scale);
}

#[test]
fn second_order_self_convergence() {
    // cos(kx) with k tan k = q is compatible with both boundary conditions
    let mut k: f64 = 1.3;
    for _ in 0..50 {
        k -= (k * k.tan() - 5.0) / (k.tan() + k / k.cos().powi(2));
    }
    let u0 = move |x: f64| (k * x).cos() + 0.3 * x * x * (1.0 - x).powi(2) * (2.0 * x - 1.0).powi(2);
    let run = |level: usize| {
        let m = 1usize << level;
        trajectory(reference(), &u0, 1.0, 20 * m + 1, 0.004 / m as f64, 0.5, m * 25, m)
    };
    let (t0, t1, t2) = (run(0), run(1), run(2));
    let (e0, _) = trajectory_distance(&t0, &t1);
    let (e1, _) = trajectory_distance(&t1, &t2);
    let ratio = e0 / e1;
    assert!((3.0..=5.0).contains(&ratio), "convergence ratio {ratio}");
}

#[test]
fn ode_without_pde_coupling_is_exponential() {
    let cn = CrankNicolson::new(reference(), GridSpec::new(21, 0.004).unwrap()).unwrap();
    let mut s = PlantState::new(vec![0.0; 21], 5.0);
    for k in 1..=1000 {
        s = cn.step(&s, 0.0).unwrap();
        let exact = 5.0 * (1.5 * k as f64 * 0.004).exp();
        assert!((s.zeta - exact).abs() < 3e-5 * exact, "step {k}");
        assert!(s.u.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn open_loop_is_unstable() {
    let cn = CrankNicolson::new(reference(), GridSpec::new(21, 0.004).unwrap()).unwrap();
    let mut s = PlantState::new(InitialProfile::X2Sin { n: 2 }.sample(21), 5.0);
    let mut norms = vec![l2_norm(&s)];
    for _ in 0..1000 {
        s = cn.step(&s, 0.0).unwrap();
        norms.push(l2_norm(&s));
    }
    // growth is monotone once the fast modes have decayed
    assert!(norms[250..].windows(2).all(|w| w[1] > w[0]));
    assert!(norms[1000] > 10.0 * norms[0]);
}

#[test]
fn step_is_deterministic() {
    let cn = CrankNicolson::new(reference(), GridSpec::new(21, 0.004).unwrap()).unwrap();
    let s = PlantState::new(InitialProfile::X2Sin { n: 3 }.sample(21), 0.7);
    let a = cn.step(&s, 1.25).unwrap();
    let b = cn.step(&s, 1.25).unwrap();
    assert_eq!(a, b);
}

#[test]
fn quadrature_functionals() {
    let s = PlantState::new(InitialProfile::Sin { n: 1 }.sample(201), 0.0);
    assert!((l2_norm(&s) - 0.5f64.sqrt()).abs() < 1e-4);
    assert!((mode_projection(&s, 1).unwrap() - 0.5).abs() < 1e-4);
    let s2 = PlantState::<f64>::new(InitialProfile::Sin { n: 2 }.sample(201), 0.0);
    assert!(mode_projection(&s2, 1).unwrap().abs() < 1e-12);
    assert!(mode_projection(&s2, 0).is_err());
}

#[test]
fn projection_matches_fine_simpson() {
    let oracle = simpson(|x| (2.0 * std::f64::consts::PI * x).sin() * x2sin2(x), 0.0, 1.0, 10_000);
    let mut prev = f64::INFINITY;
    for nx in [21, 41, 81, 161] {
        let s = PlantState::new(InitialProfile::X2Sin { n: 2 }.sample(nx), 0.0);
        let err = (mode_projection(&s, 2).unwrap() - oracle).abs();
        assert!(err < prev / 3.5, "nx={nx}: {err}");
        prev = err;
    }
    assert!(prev < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn diffusion_alone_is_dissipative(coeffs in prop::collection::vec(-2.0f64..2.0, 6), q in 0.1f64..10.0) {
        let p = PlantParams { a: 0.0, b: 1.0, eps: 1.0, lambda: 0.0, q };
        let cn = CrankNicolson::new(p, GridSpec::new(21, 0.004).unwrap()).unwrap();
        let u: Vec<f64> = (0..21)
            .map(|i| {
                let x = i as f64 / 20.0;
                coeffs.iter().enumerate().map(|(k, c)| c * (k as f64 * std::f64::consts::PI * x).cos()).sum()
            })
            .collect();
        let mut s = PlantState::new(u, 0.0);
        let mut prev = l2_norm(&s);
        for _ in 0..100 {
            s = cn.step(&s, 0.0).unwrap();
            let now = l2_norm(&s);
            prop_assert!(now <= prev * (1.0 + 1e-12));
            prev = now;
        }
    }
}
