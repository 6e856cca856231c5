use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }
}

/// Expression over named real variables. Subtrees are shared, so clones are
/// cheap and the solver pipeline can reuse pieces freely.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

pub fn num(v: f64) -> Expr {
    Expr::Num(v)
}

pub fn var(name: &str) -> Expr {
    Expr::Var(name.to_string())
}

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

fn fold2(a: f64, b: f64, f: impl Fn(f64, f64) -> f64) -> Option<Expr> {
    let v = f(a, b);
    v.is_finite().then_some(Expr::Num(v))
}

// The constructors below fold constants and drop units/zeros. The parser does
// NOT use them (parse must return the written tree); they are for closed
// forms built programmatically, where the folding keeps printouts readable.

pub fn add(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(0.0), _) => return b,
        (_, Some(0.0)) => return a,
        (Some(x), Some(y)) => {
            if let Some(e) = fold2(x, y, |x, y| x + y) {
                return e;
            }
        }
        _ => {}
    }
    Expr::Add(Arc::new(a), Arc::new(b))
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (_, Some(0.0)) => return a,
        (Some(0.0), _) => return neg(b),
        (Some(x), Some(y)) => {
            if let Some(e) = fold2(x, y, |x, y| x - y) {
                return e;
            }
        }
        _ => {}
    }
    Expr::Sub(Arc::new(a), Arc::new(b))
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(0.0), _) | (_, Some(0.0)) => return Expr::Num(0.0),
        (Some(1.0), _) => return b,
        (_, Some(1.0)) => return a,
        (Some(x), Some(y)) => {
            if let Some(e) = fold2(x, y, |x, y| x * y) {
                return e;
            }
        }
        _ => {}
    }
    Expr::Mul(Arc::new(a), Arc::new(b))
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(0.0), _) => return Expr::Num(0.0),
        (_, Some(1.0)) => return a,
        (Some(x), Some(y)) if y != 0.0 => {
            if let Some(e) = fold2(x, y, |x, y| x / y) {
                return e;
            }
        }
        _ => {}
    }
    Expr::Div(Arc::new(a), Arc::new(b))
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => inner.as_ref().clone(),
        other => Expr::Neg(Arc::new(other)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (_, Some(1.0)) => return a,
        (Some(x), Some(y)) => {
            if let Some(e) = fold2(x, y, |x, y| x.powf(y)) {
                return e;
            }
        }
        _ => {}
    }
    Expr::Pow(Arc::new(a), Arc::new(b))
}

pub fn call(f: Func, a: Expr) -> Expr {
    if let Some(x) = as_num(&a) {
        let v = match f {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        };
        if v.is_finite() {
            return Expr::Num(v);
        }
    }
    Expr::Call(f, Arc::new(a))
}

pub fn sin(a: Expr) -> Expr {
    call(Func::Sin, a)
}

pub fn cos(a: Expr) -> Expr {
    call(Func::Cos, a)
}

pub fn sqrt(a: Expr) -> Expr {
    call(Func::Sqrt, a)
}

impl Expr {
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut set = BTreeSet::new();
        self.collect_vars(&mut set);
        set
    }

    fn collect_vars(&self, set: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(v) => {
                set.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(set),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.collect_vars(set);
                b.collect_vars(set);
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => v == name,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(name),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on(name) || b.depends_on(name),
        }
    }

    /// Simultaneous substitution of variables by expressions, folding
    /// constants as it rebuilds.
    pub fn substitute(&self, map: &[(&str, &Expr)]) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(*v),
            Expr::Var(name) => map
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, e)| (*e).clone())
                .unwrap_or_else(|| Expr::Var(name.clone())),
            Expr::Neg(a) => neg(a.substitute(map)),
            Expr::Add(a, b) => add(a.substitute(map), b.substitute(map)),
            Expr::Sub(a, b) => sub(a.substitute(map), b.substitute(map)),
            Expr::Mul(a, b) => mul(a.substitute(map), b.substitute(map)),
            Expr::Div(a, b) => div(a.substitute(map), b.substitute(map)),
            Expr::Pow(a, b) => pow(a.substitute(map), b.substitute(map)),
            Expr::Call(f, a) => call(*f, a.substitute(map)),
        }
    }

    /// Symbolic partial derivative with respect to `name`.
    ///
    /// `a ^ b` is differentiated only when the exponent does not depend on
    /// `name`; `abs` is differentiated as `u/|u|`, valid away from zero.
    pub fn partial(&self, name: &str) -> Result<Expr> {
        Ok(match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(v) => Expr::Num(if v == name { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.partial(name)?),
            Expr::Add(a, b) => add(a.partial(name)?, b.partial(name)?),
            Expr::Sub(a, b) => sub(a.partial(name)?, b.partial(name)?),
            Expr::Mul(a, b) => {
                let da = a.partial(name)?;
                let db = b.partial(name)?;
                add(
                    mul(da, b.as_ref().clone()),
                    mul(a.as_ref().clone(), db),
                )
            }
            Expr::Div(a, b) => {
                let da = a.partial(name)?;
                let db = b.partial(name)?;
                div(
                    sub(
                        mul(da, b.as_ref().clone()),
                        mul(a.as_ref().clone(), db),
                    ),
                    mul(b.as_ref().clone(), b.as_ref().clone()),
                )
            }
            Expr::Pow(a, b) => {
                if b.depends_on(name) {
                    return Err(Error::InvalidInput(format!(
                        "cannot differentiate `{self}`: exponent depends on {name}"
                    )));
                }
                // d(a^b) = b · a^(b−1) · a'
                let da = a.partial(name)?;
                mul(
                    mul(
                        b.as_ref().clone(),
                        pow(a.as_ref().clone(), sub(b.as_ref().clone(), num(1.0))),
                    ),
                    da,
                )
            }
            Expr::Call(f, a) => {
                let da = a.partial(name)?;
                let inner = a.as_ref().clone();
                let outer = match f {
                    Func::Sin => cos(inner),
                    Func::Cos => neg(sin(inner)),
                    Func::Exp => call(Func::Exp, inner),
                    Func::Sqrt => div(num(1.0), mul(num(2.0), sqrt(inner))),
                    Func::Abs => div(inner.clone(), call(Func::Abs, inner)),
                };
                mul(outer, da)
            }
        })
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Num(v) if *v < 0.0 => 3,
        Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
        Expr::Pow(..) => 4,
        Expr::Neg(_) => 3,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Add(..) | Expr::Sub(..) => 1,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(name) => write!(f, "{name}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Expr::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "*")?;
                write_child(f, b, 3)
            }
            Expr::Div(a, b) => {
                write_child(f, a, 2)?;
                write!(f, "/")?;
                write_child(f, b, 3)
            }
            Expr::Pow(a, b) => {
                write_child(f, a, 5)?;
                write!(f, "^")?;
                write_child(f, b, 4)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
