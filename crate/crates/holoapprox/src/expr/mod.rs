//! The input expression language: scalar fields in the variables
//! `x1..xm, y, z1..zk` (or any other names), with parsing, printing,
//! substitution, symbolic partials and dual-number evaluation.
//!
//! Sections σ = (f, φ) are specified as one expression per component of `f`
//! and per entry of `φ`; the solver also uses this language internally to
//! carry every closed form it produces (deformations, corrugated maps,
//! extensions), which is why derivatives of solutions are exact rather than
//! numeric.
//!
//! ```
//! use holoapprox::expr::{parse, eval_f64, eval_dual};
//!
//! let e = parse("sin(2*pi*x1)^2").unwrap();
//! assert!((eval_f64(&e, &[("x1", 0.25)]).unwrap() - 1.0).abs() < 1e-15);
//!
//! // exact forward-mode partials: d/dx1 (x1·x1) at 3 is 6
//! let sq = parse("x1*x1").unwrap();
//! let d = eval_dual(&sq, &[("x1", 3.0)], &["x1"]).unwrap();
//! assert_eq!((d.re, d.partial(0)), (9.0, 6.0));
//! ```

mod ast;
mod eval;
mod parse;

pub use ast::{add, call, cos, div, mul, neg, num, pow, sin, sqrt, sub, var, Expr, Func};
pub use eval::{eval, eval_dual, eval_f64};
pub use parse::parse;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn parses_single_tokens() {
        assert_eq!(parse("x1").unwrap(), var("x1"));
        assert_eq!(parse("2.5").unwrap(), num(2.5));
        assert_eq!(parse("pi").unwrap(), num(PI));
    }

    #[test]
    fn parses_powers_of_calls() {
        let e = parse("sin(2*pi*x1)^2").unwrap();
        match &e {
            Expr::Pow(base, exp) => {
                assert!(matches!(base.as_ref(), Expr::Call(Func::Sin, _)));
                assert_eq!(exp.as_ref(), &num(2.0));
            }
            other => panic!("expected power, got {other:?}"),
        }
        let v = eval_f64(&e, &[("x1", 0.25)]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        // -x^2 must read as -(x^2)
        let e = parse("-x^2").unwrap();
        let v = eval_f64(&e, &[("x", 3.0)]).unwrap();
        assert_eq!(v, -9.0);
    }

    #[test]
    fn incomplete_input_is_a_positioned_error() {
        match parse("x1 + ") {
            Err(Error::Syntax { line, col, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(col, 6);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
        assert!(parse("(x1").is_err());
        assert!(parse("x1 x2").is_err());
    }

    #[test]
    fn unknown_function_is_reported() {
        match parse("foo(x1)") {
            Err(Error::UnknownIdentifier { name, .. }) => assert_eq!(name, "foo"),
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn guarded_division() {
        let e = parse("x1 / (x1 - x1)").unwrap();
        match eval_f64(&e, &[("x1", 1.0)]) {
            Err(Error::Domain { subexpr, .. }) => assert!(subexpr.contains("/")),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn guarded_sqrt_and_pow() {
        assert!(matches!(
            eval_f64(&parse("sqrt(0 - x)").unwrap(), &[("x", 2.0)]),
            Err(Error::Domain { .. })
        ));
        assert!(matches!(
            eval_f64(&parse("(0-2)^0.5").unwrap(), &[]),
            Err(Error::Domain { .. })
        ));
        // integer exponents keep negative bases
        assert_eq!(eval_f64(&parse("(0-2)^3").unwrap(), &[]).unwrap(), -8.0);
    }

    #[test]
    fn dual_eval_of_square() {
        let e = parse("x1*x1").unwrap();
        let d = eval_dual(&e, &[("x1", 3.0)], &["x1"]).unwrap();
        assert_eq!(d.re, 9.0);
        assert_eq!(d.partial(0), 6.0);
    }

    #[test]
    fn unbound_variable_is_reported() {
        assert!(matches!(
            eval_f64(&parse("x1 + q").unwrap(), &[("x1", 1.0)]),
            Err(Error::UnboundVariable { .. })
        ));
    }

    fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
        // guard-free corpus: sin/cos/exp over +,-,* combinations
        if depth == 0 {
            return match rng.gen_range(0..3) {
                0 => var("x"),
                1 => var("w"),
                _ => num(rng.gen_range(-2.0..2.0)),
            };
        }
        let a = random_expr(rng, depth - 1);
        let b = random_expr(rng, depth - 1);
        match rng.gen_range(0..6) {
            0 => Expr::Add(a.into(), b.into()),
            1 => Expr::Sub(a.into(), b.into()),
            2 => Expr::Mul(a.into(), b.into()),
            3 => Expr::Call(Func::Sin, a.into()),
            4 => Expr::Call(Func::Cos, a.into()),
            _ => Expr::Neg(a.into()),
        }
    }

    #[test]
    fn dual_partials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..120 {
            let e = random_expr(&mut rng, 4);
            let x = rng.gen_range(-1.0..1.0);
            let w = rng.gen_range(-1.0..1.0);
            let d = eval_dual(&e, &[("x", x), ("w", w)], &["x", "w"]).unwrap();
            let h = 1e-6;
            for (slot, hx, hw) in [(0usize, h, 0.0), (1usize, 0.0, h)] {
                let plus = eval_f64(&e, &[("x", x + hx), ("w", w + hw)]).unwrap();
                let minus = eval_f64(&e, &[("x", x - hx), ("w", w - hw)]).unwrap();
                let fd = (plus - minus) / (2.0 * h);
                let scale = fd.abs().max(1.0);
                assert!(
                    (d.partial(slot) - fd).abs() / scale < 1e-6,
                    "{e}: slot {slot} dual {} fd {fd}",
                    d.partial(slot)
                );
            }
        }
    }

    #[test]
    fn symbolic_partial_agrees_with_dual() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..80 {
            let e = random_expr(&mut rng, 4);
            let de = e.partial("x").unwrap();
            let x = rng.gen_range(-1.0..1.0);
            let w = rng.gen_range(-1.0..1.0);
            let sym = eval_f64(&de, &[("x", x), ("w", w)]).unwrap();
            let dual = eval_dual(&e, &[("x", x), ("w", w)], &["x"]).unwrap();
            let scale = sym.abs().max(1.0);
            assert!((sym - dual.partial(0)).abs() / scale < 1e-12);
        }
    }

    #[test]
    fn substitution_folds() {
        let e = parse("y*x1 + z1^2").unwrap();
        let zero = num(0.0);
        let s = e.substitute(&[("y", &zero), ("z1", &zero)]);
        assert_eq!(s, num(0.0));
    }

    // Strategy producing parse-shaped trees (nonnegative literals; negation
    // is an explicit node), for which parse ∘ print is the identity.
    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0.0..100.0f64).prop_map(num),
            Just(var("x1")),
            Just(var("y")),
            Just(var("z1")),
        ];
        leaf.prop_recursive(4, 64, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(a.into(), b.into())),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(a.into(), b.into())),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(a.into(), b.into())),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Div(a.into(), b.into())),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Pow(a.into(), b.into())),
                inner.clone().prop_map(|a| Expr::Neg(a.into())),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, a.into())),
                inner.clone().prop_map(|a| Expr::Call(Func::Abs, a.into())),
                inner.prop_map(|a| Expr::Call(Func::Sqrt, a.into())),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_roundtrip(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = parse(&printed).unwrap();
            prop_assert_eq!(reparsed, e);
        }
    }
}
