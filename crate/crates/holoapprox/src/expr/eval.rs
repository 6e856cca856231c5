use super::ast::{Expr, Func};
use crate::error::{Error, Result};
use crate::numcore::{Dual, Scalar};

fn domain(message: impl Into<String>, at: &Expr) -> Error {
    Error::Domain {
        message: message.into(),
        subexpr: at.to_string(),
    }
}

/// Evaluates an expression over any [`Scalar`], so the same tree yields plain
/// values (`f64`) or values with exact forward-mode partials ([`Dual`]).
///
/// Division by exact zero, square roots of negative numbers and powers of
/// nonpositive bases with non-integer exponents are reported as domain errors
/// naming the offending subexpression.
pub fn eval<T: Scalar>(e: &Expr, vars: &[(&str, T)]) -> Result<T> {
    Ok(match e {
        Expr::Num(v) => T::from_f64(*v),
        Expr::Var(name) => vars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::UnboundVariable { name: name.clone() })?,
        Expr::Neg(a) => -eval(a, vars)?,
        Expr::Add(a, b) => eval(a, vars)? + eval(b, vars)?,
        Expr::Sub(a, b) => eval(a, vars)? - eval(b, vars)?,
        Expr::Mul(a, b) => eval(a, vars)? * eval(b, vars)?,
        Expr::Div(a, b) => {
            let den = eval(b, vars)?;
            if den.value() == 0.0 {
                return Err(domain("division by zero", e));
            }
            eval(a, vars)? / den
        }
        Expr::Pow(a, b) => {
            let base = eval(a, vars)?;
            // Integer constant exponents keep the full base domain.
            if let Expr::Num(c) = b.as_ref() {
                if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
                    let n = *c as i32;
                    if base.value() == 0.0 && n < 0 {
                        return Err(domain("zero base with negative exponent", e));
                    }
                    return Ok(base.powi(n));
                }
            }
            let exp = eval(b, vars)?;
            if base.value() <= 0.0 {
                return Err(domain(
                    "nonpositive base with non-integer exponent",
                    e,
                ));
            }
            (exp * base.ln()).exp()
        }
        Expr::Call(f, a) => {
            let x = eval(a, vars)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Sqrt => {
                    if x.value() < 0.0 {
                        return Err(domain("square root of a negative number", e));
                    }
                    x.sqrt()
                }
                Func::Abs => x.abs(),
            }
        }
    })
}

/// Plain `f64` evaluation.
pub fn eval_f64(e: &Expr, vars: &[(&str, f64)]) -> Result<f64> {
    eval(e, vars)
}

/// Evaluates with exact partials with respect to `active` (in slot order).
pub fn eval_dual(e: &Expr, vars: &[(&str, f64)], active: &[&str]) -> Result<Dual> {
    let n = active.len();
    let seeded: Vec<(&str, Dual)> = vars
        .iter()
        .map(|(name, v)| {
            let d = match active.iter().position(|a| a == name) {
                Some(slot) => Dual::variable(*v, slot, n),
                None => Dual::constant(*v, n),
            };
            (*name, d)
        })
        .collect();
    eval(e, &seeded)
}
