//! Extension of `(x, δ(x), 0) ↦ h(x)` to a map `f₁` near the deformed cube,
//! with a fully explicit closed form and exact 1-jet.
//!
//! The ansatz is `f₁(x, y, z) = h(x) + (y − δ(x))·g(x) + φ(x, y, z)(0, 0, z)`
//! with
//!
//! `g(x) = (dh(x)∇δ(x) − φ(x, δ(x), 0)(∇δ(x) − ∂_y)) / (1 + ‖∇δ(x)‖²)`,
//!
//! which makes `df₁` agree with φ on the orthogonal complement
//! `Span(∇δ − ∂_y) ⊕ ℝᵏ` of the tangent space at every point of the graph,
//! while the restriction to the graph is `h∘pₘ` on the nose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::jetmodel::{bindings, HolonomicPair, JetSection};
use crate::numcore::{dot, euclid_norm, sup_norm, Matrix};

/// A closed-form extension `f₁` with its defining field `g`; the Jacobian is
/// evaluated by dual numbers through the closed form, so it is analytic.
#[derive(Debug, Clone)]
pub struct ExtendedSolution {
    pub dims: crate::jetmodel::Dims,
    pub delta: Expr,
    pub g: Vec<Expr>,
    /// `n` expressions in the variables `x1..xm, y, z1..zk`.
    pub f1: Vec<Expr>,
}

/// The transversal slope field `g` of the extension ansatz, as closed forms
/// over `x`.
pub fn extension_field(section: &JetSection, pair: &HolonomicPair) -> Result<Vec<Expr>> {
    let dims = section.dims;
    if dims != pair.dims {
        return Err(Error::InvalidInput(
            "section and pair dimensions disagree".into(),
        ));
    }
    let x_names = dims.x_names();
    let grad_delta: Vec<Expr> = x_names
        .iter()
        .map(|nm| pair.delta.partial(nm))
        .collect::<Result<Vec<_>>>()?;

    // 1 + ‖∇δ‖²
    let denom = grad_delta.iter().fold(expr::num(1.0), |acc, d| {
        expr::add(acc, expr::mul(d.clone(), d.clone()))
    });

    (0..dims.n)
        .map(|i| {
            // dh_i · ∇δ
            let mut acc = expr::num(0.0);
            for (j, nm) in x_names.iter().enumerate() {
                let dh = pair.h[i].partial(nm)?;
                acc = expr::add(acc, expr::mul(dh, grad_delta[j].clone()));
            }
            // − φ_i(x, δ, 0)(∇δ − ∂_y) = −(Σ_j φ_{i,j}·∂_jδ − φ_{i,y})
            for j in 0..dims.m {
                let phi_ij = section.phi_entry_on_graph(i, j, &pair.delta);
                acc = expr::sub(acc, expr::mul(phi_ij, grad_delta[j].clone()));
            }
            let phi_iy = section.phi_entry_on_graph(i, dims.m, &pair.delta);
            acc = expr::add(acc, phi_iy);
            Ok(expr::div(acc, denom.clone()))
        })
        .collect()
}

/// Evaluates `g(x)` with analytic `∇δ` and `dh`.
pub fn extension_field_at(
    section: &JetSection,
    pair: &HolonomicPair,
    x: &[f64],
) -> Result<Vec<f64>> {
    let g = extension_field(section, pair)?;
    let names = pair.dims.x_names();
    let vars = bindings(&names, x);
    g.iter().map(|e| expr::eval_f64(e, &vars)).collect()
}

/// Builds the explicit extension `f₁` of `(x, δ(x), 0) ↦ h(x)`.
///
/// ```
/// use holoapprox::corrugation::{corrugate, mountain_loop, Frequency};
/// use holoapprox::extension::extend;
/// use holoapprox::jetmodel::{Dims, FormalSolutionState, HolonomicPair, JetSection};
/// use holoapprox::expr;
///
/// let sigma = JetSection::from_sources(
///     Dims::new(1, 0, 1).unwrap(), &["x1"], &[vec!["0", "0"]], 0.1,
/// ).unwrap();
/// let state = FormalSolutionState::canonical(&sigma);
/// let family = mountain_loop(1.0).unwrap();
/// let (next, _) = corrugate(&state, 0, &family, Frequency::new(6).unwrap(), 0.1).unwrap();
/// let pair = HolonomicPair::new(sigma.dims, next.value_y, next.value_w).unwrap();
/// let ext = extend(&sigma, &pair).unwrap();
///
/// // restriction identity: f₁(x, δ(x)) = h(x), exactly
/// let x = 0.37;
/// let d = expr::eval_f64(&pair.delta, &[("x1", x)]).unwrap();
/// let h = expr::eval_f64(&pair.h[0], &[("x1", x)]).unwrap();
/// assert_eq!(ext.value_at(&[x, d]).unwrap()[0], h);
/// ```
pub fn extend(section: &JetSection, pair: &HolonomicPair) -> Result<ExtendedSolution> {
    let dims = section.dims;
    let g = extension_field(section, pair)?;
    let y_minus_delta = expr::sub(expr::var("y"), pair.delta.clone());
    let f1 = (0..dims.n)
        .map(|i| {
            let mut e = expr::add(
                pair.h[i].clone(),
                expr::mul(y_minus_delta.clone(), g[i].clone()),
            );
            // φ(x, y, z) applied to (0, 0, z): the raw entries, not restricted
            // to the graph
            for q in 0..dims.k {
                e = expr::add(
                    e,
                    expr::mul(
                        section.phi[i][dims.m + 1 + q].clone(),
                        expr::var(&format!("z{}", q + 1)),
                    ),
                );
            }
            e
        })
        .collect();
    Ok(ExtendedSolution {
        dims,
        delta: pair.delta.clone(),
        g,
        f1,
    })
}

impl ExtendedSolution {
    /// `f₁` at a full source point `(x, y, z)`.
    pub fn value_at(&self, point: &[f64]) -> Result<Vec<f64>> {
        let names = self.dims.var_names();
        let vars = bindings(&names, point);
        self.f1.iter().map(|e| expr::eval_f64(e, &vars)).collect()
    }

    /// Exact 1-jet at a source point: values and the `n × (m+1+k)` Jacobian,
    /// by dual-number evaluation of the closed form.
    pub fn jet_at(&self, point: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        let names = self.dims.var_names();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let vars = bindings(&names, point);
        let mut values = Vec::with_capacity(self.dims.n);
        let mut rows = Vec::with_capacity(self.dims.n);
        for e in &self.f1 {
            let d = expr::eval_dual(e, &vars, &name_refs)?;
            values.push(d.re);
            rows.push((0..self.dims.source()).map(|i| d.partial(i)).collect());
        }
        Ok((values, Matrix::from_rows(rows)?))
    }
}

/// Jet distance data at one source point near the deformed cube.
#[derive(Debug, Clone, Copy)]
pub struct FiberDistance {
    /// `max_j ‖row_j(df₁ − φ)‖₂`: the exact operator norm from the Euclidean
    /// source to the sup-norm target.
    pub operator_norm: f64,
    /// Supremum of `‖(df₁ − φ)ū‖∞ / ‖ū‖₂` over the sampled directions;
    /// bounded by `operator_norm`.
    pub sampled_sup: f64,
    /// `‖f₁ − f‖∞` at the point.
    pub zeroth_gap: f64,
}

/// First- and zeroth-order distance of `j¹f₁` to σ at a point, with the
/// first-order part both as the exact operator norm and as a sampled sup
/// over unit directions (seeded, reproducible).
pub fn jet_distance_on_fiber(
    section: &JetSection,
    ext: &ExtendedSolution,
    point: &[f64],
    samples: usize,
    seed: u64,
) -> Result<FiberDistance> {
    let dims = section.dims;
    let src = dims.source();
    if point.len() != src {
        return Err(Error::DimMismatch {
            context: "jet_distance_on_fiber",
            expected: src,
            got: point.len(),
        });
    }
    let names = dims.var_names();
    let (x, rest) = point.split_at(dims.m);
    let (y, z) = (rest[0], &rest[1..]);

    let (f1_val, jac) = ext.jet_at(point)?;
    let f_val = section.eval_f(&names, x, y, z)?;
    let phi = section.eval_phi(&names, x, y, z)?;

    let diff: Vec<f64> = f1_val.iter().zip(&f_val).map(|(a, b)| a - b).collect();
    let zeroth_gap = sup_norm(&diff);

    let residual_rows: Vec<Vec<f64>> = (0..dims.n)
        .map(|r| (0..src).map(|c| jac.get(r, c) - phi.get(r, c)).collect())
        .collect();
    let operator_norm = residual_rows
        .iter()
        .map(|r| euclid_norm(r))
        .fold(0.0f64, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampled_sup = 0.0f64;
    for _ in 0..samples {
        let u: Vec<f64> = (0..src).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = euclid_norm(&u);
        if norm < 1e-12 {
            continue;
        }
        let image: Vec<f64> = residual_rows.iter().map(|r| dot(r, &u)).collect();
        sampled_sup = sampled_sup.max(sup_norm(&image) / norm);
    }
    Ok(FiberDistance {
        operator_norm,
        sampled_sup,
        zeroth_gap,
    })
}
