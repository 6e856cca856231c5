use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic shared by `f64` and [`Dual`], so expression evaluation and the
/// closed forms produced by the pipeline can be evaluated either plainly or
/// with exact forward-mode first derivatives.
pub trait Scalar:
    Clone
    + std::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(c: f64) -> Self;

    /// The underlying value (drops derivative information).
    fn value(&self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Scalar for f64 {
    fn from_f64(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Forward-mode dual number: a value together with its partial derivatives
/// with respect to a fixed set of active variables.
///
/// An empty gradient means "constant": it broadcasts against any number of
/// active slots, which is what `Scalar::from_f64` produces inside generic
/// code. Arithmetic satisfies the product and chain rules exactly; the unit
/// tests cross-check against central finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub re: f64,
    pub grad: Vec<f64>,
}

impl Dual {
    pub fn constant(v: f64, actives: usize) -> Self {
        Dual {
            re: v,
            grad: vec![0.0; actives],
        }
    }

    /// A variable seeded in slot `slot` of `actives` active variables.
    pub fn variable(v: f64, slot: usize, actives: usize) -> Self {
        let mut grad = vec![0.0; actives];
        grad[slot] = 1.0;
        Dual { re: v, grad }
    }

    pub fn partial(&self, slot: usize) -> f64 {
        if self.grad.is_empty() {
            0.0
        } else {
            self.grad[slot]
        }
    }

    fn zip(a: &Dual, b: &Dual, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        match (a.grad.is_empty(), b.grad.is_empty()) {
            (true, true) => vec![],
            (true, false) => b.grad.iter().map(|y| f(0.0, *y)).collect(),
            (false, true) => a.grad.iter().map(|x| f(*x, 0.0)).collect(),
            (false, false) => {
                assert_eq!(
                    a.grad.len(),
                    b.grad.len(),
                    "dual numbers with different active variable counts"
                );
                a.grad.iter().zip(&b.grad).map(|(x, y)| f(*x, *y)).collect()
            }
        }
    }

    fn scaled(&self, factor: f64) -> Vec<f64> {
        self.grad.iter().map(|g| g * factor).collect()
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re + rhs.re,
            grad: Dual::zip(&self, &rhs, |a, b| a + b),
        }
    }
}

impl Sub for Dual {
    type Output = Dual;
    fn sub(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re - rhs.re,
            grad: Dual::zip(&self, &rhs, |a, b| a - b),
        }
    }
}

impl Mul for Dual {
    type Output = Dual;
    fn mul(self, rhs: Dual) -> Dual {
        Dual {
            re: self.re * rhs.re,
            grad: Dual::zip(&self, &rhs, |a, b| a * rhs.re + self.re * b),
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    fn div(self, rhs: Dual) -> Dual {
        let d2 = rhs.re * rhs.re;
        Dual {
            re: self.re / rhs.re,
            grad: Dual::zip(&self, &rhs, |a, b| (a * rhs.re - self.re * b) / d2),
        }
    }
}

impl Neg for Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Dual {
            re: -self.re,
            grad: self.grad.iter().map(|g| -g).collect(),
        }
    }
}

impl Scalar for Dual {
    fn from_f64(c: f64) -> Self {
        Dual { re: c, grad: vec![] }
    }

    fn value(&self) -> f64 {
        self.re
    }

    fn sin(self) -> Self {
        let c = self.re.cos();
        Dual {
            re: self.re.sin(),
            grad: self.scaled(c),
        }
    }

    fn cos(self) -> Self {
        let s = -self.re.sin();
        Dual {
            re: self.re.cos(),
            grad: self.scaled(s),
        }
    }

    fn exp(self) -> Self {
        let e = self.re.exp();
        Dual {
            re: e,
            grad: self.scaled(e),
        }
    }

    fn ln(self) -> Self {
        let inv = 1.0 / self.re;
        Dual {
            re: self.re.ln(),
            grad: self.scaled(inv),
        }
    }

    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        Dual {
            re: r,
            grad: self.scaled(0.5 / r),
        }
    }

    fn abs(self) -> Self {
        let s = if self.re > 0.0 {
            1.0
        } else if self.re < 0.0 {
            -1.0
        } else {
            0.0
        };
        Dual {
            re: self.re.abs(),
            grad: self.scaled(s),
        }
    }

    fn powi(self, n: i32) -> Self {
        let f = n as f64 * self.re.powi(n - 1);
        Dual {
            re: self.re.powi(n),
            grad: self.scaled(f),
        }
    }
}
