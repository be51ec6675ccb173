//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's kernel code.

#![allow(dead_code)]

/// `I_ν(s)` for ν = 1, 2 by its power series.
pub fn bessel_i(nu: u32, s: f64) -> f64 {
    let half = 0.5 * s;
    let mut term = half.powi(nu as i32) / (1..=nu).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= half * half / (k * (k + nu as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// `J₁(s)` by its power series.
pub fn bessel_j1(s: f64) -> f64 {
    let half = 0.5 * s;
    let mut term = half;
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= -half * half / (k * (k + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

pub struct Design {
    pub lambda: f64,
    pub a: f64,
    pub eps: f64,
    pub b: f64,
    pub q: f64,
    pub kappa: f64,
}

impl Design {
    pub fn reference(lambda: f64, a: f64) -> Self {
        Self { lambda, a, eps: 1.0, b: 1.0, q: 5.0, kappa: 16.0 }
    }

    pub fn r(&self) -> f64 {
        self.q - self.lambda / (2.0 * self.eps)
    }

    pub fn psi(&self, x: f64, y: f64) -> f64 {
        let c = self.lambda / self.eps;
        let s = (c * (x * x - y * y)).sqrt();
        if s < 1e-8 {
            return -c * x * 0.5;
        }
        -c * x * bessel_i(1, s) / s
    }

    pub fn psi_x(&self, x: f64, y: f64) -> f64 {
        let c = self.lambda / self.eps;
        let s = (c * (x * x - y * y)).sqrt();
        if s < 1e-6 {
            return -c * (0.5 + c * x * x / 8.0);
        }
        -c * (bessel_i(1, s) / s + c * x * x * bessel_i(2, s) / (s * s))
    }

    pub fn omega(&self) -> f64 {
        ((self.b * self.kappa - self.a) / self.eps).sqrt()
    }

    pub fn gamma(&self, x: f64) -> f64 {
        -self.kappa * (self.omega() * x).cos()
    }

    pub fn gamma_prime(&self, x: f64) -> f64 {
        self.kappa * self.omega() * (self.omega() * x).sin()
    }

    /// `h(x, y) = g(x − y)`.
    pub fn g(&self, s: f64) -> f64 {
        let k = -self.b * self.kappa / self.eps;
        if self.a == 0.0 {
            return k * s;
        }
        let w = (self.a / self.eps).sqrt();
        k * (w * s).sinh() / w
    }

    pub fn g_prime(&self, s: f64) -> f64 {
        let w = (self.a / self.eps).sqrt();
        -self.b * self.kappa / self.eps * (w * s).cosh()
    }

    /// `h_x(1, y) + r h(1, y)`.
    pub fn w(&self, y: f64) -> f64 {
        self.g_prime(1.0 - y) + self.r() * self.g(1.0 - y)
    }

    pub fn k1(&self, y: f64) -> f64 {
        let tail = simpson(|z| self.w(z) * self.psi(z, y), y, 1.0, 400);
        self.psi_x(1.0, y) + self.w(y) + self.r() * self.psi(1.0, y) - tail
    }

    pub fn k2(&self) -> f64 {
        self.gamma_prime(1.0) + self.r() * self.gamma(1.0) - simpson(|y| self.w(y) * self.gamma(y), 0.0, 1.0, 2000)
    }
}

/// Composite Simpson with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * k as f64);
    }
    s * h / 3.0
}
