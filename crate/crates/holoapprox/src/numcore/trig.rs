use std::f64::consts::TAU;

/// Default node count for the composite Simpson fallback (2¹⁴).
pub const DEFAULT_QUADRATURE_NODES: usize = 1 << 14;

/// A real 1-periodic trigonometric polynomial
/// `c₀ + Σₗ aₗ cos(2πl t) + bₗ sin(2πl t)`.
///
/// Harmonic `l` lives at index `l − 1` of the coefficient vectors. Integrals
/// and derivatives are exact, which is what makes corrugation reproduce the
/// closed forms to machine precision.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        TrigPoly {
            constant: c,
            cos: vec![],
            sin: vec![],
        }
    }

    pub fn new(constant: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        TrigPoly { constant, cos, sin }
    }

    pub fn degree(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = self.constant;
        for (i, a) in self.cos.iter().enumerate() {
            acc += a * (TAU * (i + 1) as f64 * t).cos();
        }
        for (i, b) in self.sin.iter().enumerate() {
            acc += b * (TAU * (i + 1) as f64 * t).sin();
        }
        acc
    }

    /// Exact integral over `[a, b]` from the termwise antiderivative.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut acc = self.constant * (b - a);
        for (i, c) in self.cos.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            acc += c * ((w * b).sin() - (w * a).sin()) / w;
        }
        for (i, s) in self.sin.iter().enumerate() {
            let w = TAU * (i + 1) as f64;
            acc += s * ((w * a).cos() - (w * b).cos()) / w;
        }
        acc
    }

    /// Mean over one period; only the constant term survives.
    pub fn mean(&self) -> f64 {
        self.constant
    }

    pub fn derivative(&self) -> TrigPoly {
        let deg = self.degree();
        let mut cos = vec![0.0; deg];
        let mut sin = vec![0.0; deg];
        for (i, a) in self.cos.iter().enumerate() {
            sin[i] = -a * TAU * (i + 1) as f64;
        }
        for (i, b) in self.sin.iter().enumerate() {
            cos[i] = b * TAU * (i + 1) as f64;
        }
        TrigPoly {
            constant: 0.0,
            cos,
            sin,
        }
    }
}

/// Exact integral of a trigonometric polynomial over `[a, b]`.
pub fn integrate_trigpoly(p: &TrigPoly, a: f64, b: f64) -> f64 {
    p.integral(a, b)
}

/// Composite Simpson quadrature for callables that are not trigonometric
/// polynomials. `nodes` is rounded up to the next even number.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, nodes: usize) -> f64 {
    let n = nodes.max(2) + nodes % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn full_period_identities() {
        // ∫₀¹ 2 sin²(2πt) dt = 1, written as 1 − cos(4πt)
        let p = TrigPoly::new(1.0, vec![0.0, -1.0], vec![]);
        assert!((p.integral(0.0, 1.0) - 1.0).abs() < 1e-15);
        // ∫₀¹ sin(2πt) dt = 0
        let s = TrigPoly::new(0.0, vec![], vec![1.0]);
        assert!(s.integral(0.0, 1.0).abs() < 1e-15);
    }

    #[test]
    fn partial_period_matches_corrugation_closed_form() {
        // (1/N) ∫₀^{Nx} (4/ε) sin(2πs) ds = 2 (1 − cos(2πNx)) / (ε π N)
        let eps = 0.7;
        let n = 5.0;
        let p = TrigPoly::new(0.0, vec![], vec![4.0 / eps]);
        for &x in &[0.0, 0.1, 0.37, 0.5, 0.93, 1.0] {
            let lhs = p.integral(0.0, n * x) / n;
            let rhs = 2.0 * (1.0 - (TAU * n * x).cos()) / (eps * std::f64::consts::PI * n);
            assert!((lhs - rhs).abs() < 1e-13, "x={x}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn exact_integral_matches_quadrature() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..40 {
            let deg = rng.gen_range(1..=8);
            let cos: Vec<f64> = (0..deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sin: Vec<f64> = (0..deg).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = TrigPoly::new(rng.gen_range(-1.0..1.0), cos, sin);
            let (a, b) = (rng.gen_range(-1.0..0.0), rng.gen_range(0.0..1.0));
            let exact = integrate_trigpoly(&p, a, b);
            let quad = simpson(|t| p.eval(t), a, b, DEFAULT_QUADRATURE_NODES);
            assert!((exact - quad).abs() < 1e-12, "deg {deg}: {exact} vs {quad}");
        }
    }

    #[test]
    fn derivative_is_termwise() {
        let p = TrigPoly::new(2.0, vec![0.5], vec![-0.25, 1.0]);
        let d = p.derivative();
        let h = 1e-6;
        for &t in &[0.0, 0.2, 0.61] {
            let fd = (p.eval(t + h) - p.eval(t - h)) / (2.0 * h);
            assert!((d.eval(t) - fd).abs() < 1e-6);
        }
    }
}
