//! Composite trapezoid rules and an adaptive Simpson integrator.

use crate::scalar::Real;

/// Composite trapezoid over samples on a uniform grid with spacing `dx`.
pub fn trapezoid<T: Real>(values: &[T], dx: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let half = T::lit(0.5);
            let inner: T = values[1..n - 1].iter().copied().sum();
            dx * (inner + half * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoid of the pointwise product `f·g` on a uniform grid.
pub fn trapezoid_product<T: Real>(f: &[T], g: &[T], dx: T) -> T {
    debug_assert_eq!(f.len(), g.len());
    let n = f.len().min(g.len());
    if n < 2 {
        return T::zero();
    }
    let half = T::lit(0.5);
    let mut acc = half * (f[0] * g[0] + f[n - 1] * g[n - 1]);
    for i in 1..n - 1 {
        acc += f[i] * g[i];
    }
    acc * dx
}

/// Running (cumulative) trapezoid integral over arbitrary abscissae.
/// `out[0] = 0`, `out[k] = ∫_{t_0}^{t_k}`.
pub fn cumulative_trapezoid<T: Real>(times: &[T], values: &[T]) -> Vec<T> {
    debug_assert_eq!(times.len(), values.len());
    let mut out = Vec::with_capacity(values.len());
    let mut acc = T::zero();
    let half = T::lit(0.5);
    for k in 0..values.len() {
        if k > 0 {
            acc += half * (times[k] - times[k - 1]) * (values[k] + values[k - 1]);
        }
        out.push(acc);
    }
    out
}

/// Trapezoid integral over arbitrary abscissae.
pub fn trapezoid_nonuniform<T: Real>(times: &[T], values: &[T]) -> T {
    let half = T::lit(0.5);
    times.windows(2).zip(values.windows(2)).map(|(t, v)| half * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * T::lit(0.5);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, fa: T, fm: T, fb: T, whole: T, tol: T, depth: u32) -> T {
    let half = T::lit(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= T::lit(15.0) * tol {
        return left + right + delta / T::lit(15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol * half, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol * half, depth - 1)
}
