//! Minimal Chebyshev interpolation with exact term-wise antidifferentiation.
//!
//! Used to evaluate the smooth-but-non-elementary antiderivatives that the
//! bump constructions need (integrals of flat-topped mollifiers). Fitting a
//! `C^∞` function whose derivatives vanish at the interval ends converges
//! superalgebraically, so modest degrees reach machine precision.

/// A Chebyshev series `p(x) = Σ c_j T_j(u)` on `[a, b]`, `u = (2x−a−b)/(b−a)`.
#[derive(Debug, Clone)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    c: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` on `[a, b]` at `n` Chebyshev nodes of the first kind.
    pub fn fit(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 2 && b > a);
        let ys: Vec<f64> = (0..n)
            .map(|k| {
                let u = (std::f64::consts::PI * (k as f64 + 0.5) / n as f64).cos();
                f(0.5 * (a + b) + 0.5 * (b - a) * u)
            })
            .collect();
        let mut c = vec![0.0; n];
        for (j, cj) in c.iter_mut().enumerate() {
            let mut s = 0.0;
            for (k, yk) in ys.iter().enumerate() {
                s += yk * (std::f64::consts::PI * j as f64 * (k as f64 + 0.5) / n as f64).cos();
            }
            *cj = s * if j == 0 { 1.0 } else { 2.0 } / n as f64;
        }
        Self { a, b, c }
    }

    /// Evaluates the series by Clenshaw recurrence. Outside `[a, b]` the
    /// polynomial extension is returned; callers clamp as appropriate.
    pub fn eval(&self, x: f64) -> f64 {
        let u = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &cj in self.c.iter().skip(1).rev() {
            let t = 2.0 * u * b1 - b2 + cj;
            b2 = b1;
            b1 = t;
        }
        u * b1 - b2 + self.c[0]
    }

    /// The antiderivative `F` with `F(a) = 0`, computed exactly term-wise:
    /// `∫T_0 = T_1`, `∫T_1 = T_2/4`, `∫T_n = T_{n+1}/(2(n+1)) − T_{n−1}/(2(n−1))`.
    pub fn antiderivative(&self) -> Self {
        let n = self.c.len();
        let scale = 0.5 * (self.b - self.a);
        let mut c = vec![0.0; n + 1];
        c[1] += self.c[0];
        if n > 1 {
            c[2] += self.c[1] / 4.0;
        }
        for j in 2..n {
            c[j + 1] += self.c[j] / (2.0 * (j as f64 + 1.0));
            c[j - 1] -= self.c[j] / (2.0 * (j as f64 - 1.0));
        }
        for cj in &mut c {
            *cj *= scale;
        }
        let mut out = Self {
            a: self.a,
            b: self.b,
            c,
        };
        let at_a = out.eval(out.a);
        out.c[0] -= at_a;
        out
    }
}
