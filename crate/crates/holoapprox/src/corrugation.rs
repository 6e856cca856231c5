//! Loops with prescribed base point and average, the one-dimensional
//! corrugation step, and the iterated convex-integration pipeline.
//!
//! A corrugation in direction `j` replaces the value map `F` by
//! `F + (1/N) ∫₀^{N xⱼ} (γ_x(s) − ḡ(x)) ds` where `γ_x` is a loop in the
//! direction-`j` slice based at the formal derivative with average `ḡ(x)`,
//! the actual partial `∂ⱼF(x)`. The new formal derivative column is
//! `γ_x(N xⱼ)`; the map moves by `O(1/N)` and the freshly corrugated partial
//! tracks the loop up to `O(1/N)` coefficient drift, which is measured and
//! reported rather than assumed.
//!
//! All loops are trigonometric polynomials in `t` with closed-form
//! coefficients in `x`, so the corrugation integral stays a closed form and
//! the produced `(δ, h)` have exact derivatives.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::jetmodel::{bindings, Dims, FormalSolutionState, Grid, HolonomicPair, JetSection};
use crate::numcore::{sup_norm, Matrix, TrigPoly};
use crate::relation::{
    hyperbola_m0_expr, hyperbola_params, membership, Clause, HyperbolaParams, JetPoint,
};

/// Corrugation frequency: a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Frequency(u32);

impl Frequency {
    pub fn new(n: u32) -> Result<Frequency> {
        if n == 0 {
            return Err(Error::InvalidInput("frequency must be ≥ 1".into()));
        }
        Ok(Frequency(n))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// A smooth family of 1-periodic loops `t ↦ γ_x(t) ∈ ℝ^d`: trigonometric
/// polynomials in `t` whose coefficients are closed forms in `x`.
///
/// The constant coefficient is exactly the average over one period and
/// `γ_x(0) = mean + Σₗ cosₗ`, so base and average identities are trig
/// algebra, not numerics.
#[derive(Debug, Clone)]
pub struct LoopFamily {
    pub dim: usize,
    pub mean: Vec<Expr>,
    /// `cos[l-1][component]` for harmonic `l`.
    pub cos: Vec<Vec<Expr>>,
    pub sin: Vec<Vec<Expr>>,
}

impl LoopFamily {
    pub fn constant(mean: Vec<Expr>) -> LoopFamily {
        LoopFamily {
            dim: mean.len(),
            mean,
            cos: vec![],
            sin: vec![],
        }
    }

    pub fn harmonics(&self) -> usize {
        self.cos.len().max(self.sin.len())
    }

    /// `γ_x(0)` as closed forms.
    pub fn base_exprs(&self) -> Vec<Expr> {
        let mut base = self.mean.clone();
        for l in &self.cos {
            for (c, e) in l.iter().enumerate() {
                base[c] = expr::add(base[c].clone(), e.clone());
            }
        }
        base
    }

    /// Instantiates the numeric trig polynomials at a point `x`.
    pub fn numeric_at(&self, names: &[String], x: &[f64]) -> Result<Vec<TrigPoly>> {
        let vars = bindings(names, x);
        (0..self.dim)
            .map(|cmp| {
                let constant = expr::eval_f64(&self.mean[cmp], &vars)?;
                let cos = self
                    .cos
                    .iter()
                    .map(|l| expr::eval_f64(&l[cmp], &vars))
                    .collect::<Result<Vec<_>>>()?;
                let sin = self
                    .sin
                    .iter()
                    .map(|l| expr::eval_f64(&l[cmp], &vars))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TrigPoly::new(constant, cos, sin))
            })
            .collect()
    }

    /// `γ_x(arg)` as closed forms, for an argument expression like `N·xⱼ`.
    pub fn value_exprs(&self, arg: &Expr) -> Vec<Expr> {
        let mut out = self.mean.clone();
        for (li, l) in self.cos.iter().enumerate() {
            let w = TAU * (li + 1) as f64;
            let c = expr::cos(expr::mul(expr::num(w), arg.clone()));
            for (cmp, e) in l.iter().enumerate() {
                out[cmp] = expr::add(out[cmp].clone(), expr::mul(e.clone(), c.clone()));
            }
        }
        for (li, l) in self.sin.iter().enumerate() {
            let w = TAU * (li + 1) as f64;
            let s = expr::sin(expr::mul(expr::num(w), arg.clone()));
            for (cmp, e) in l.iter().enumerate() {
                out[cmp] = expr::add(out[cmp].clone(), expr::mul(e.clone(), s.clone()));
            }
        }
        out
    }

    /// The corrugation increment `(1/N) ∫₀^{N xⱼ} (γ_x(s) − mean(x)) ds`
    /// as closed forms; exact termwise antiderivatives.
    pub fn corrugation_term_exprs(&self, n: Frequency, j: usize) -> Vec<Expr> {
        let x = expr::var(&format!("x{}", j + 1));
        let nf = n.get() as f64;
        let mut out = vec![expr::num(0.0); self.dim];
        for (li, l) in self.cos.iter().enumerate() {
            let w = TAU * (li + 1) as f64 * nf;
            let integ = expr::div(expr::sin(expr::mul(expr::num(w), x.clone())), expr::num(w));
            for (cmp, e) in l.iter().enumerate() {
                out[cmp] = expr::add(out[cmp].clone(), expr::mul(e.clone(), integ.clone()));
            }
        }
        for (li, l) in self.sin.iter().enumerate() {
            let w = TAU * (li + 1) as f64 * nf;
            let integ = expr::div(
                expr::sub(
                    expr::num(1.0),
                    expr::cos(expr::mul(expr::num(w), x.clone())),
                ),
                expr::num(w),
            );
            for (cmp, e) in l.iter().enumerate() {
                out[cmp] = expr::add(out[cmp].clone(), expr::mul(e.clone(), integ.clone()));
            }
        }
        out
    }
}

/// The explicit loop for the standard mountain slice
/// `Ω = {(Y, W) | W² < ε²(1 + Y²)}`: `t ↦ (4 sin(2πt)/ε, 2 sin²(2πt))`,
/// based at (0, 0) with average (0, 1).
///
/// ```
/// use holoapprox::corrugation::mountain_loop;
///
/// let family = mountain_loop(1.0).unwrap();
/// let polys = family.numeric_at(&[], &[]).unwrap();
/// assert_eq!((polys[0].eval(0.0), polys[1].eval(0.0)), (0.0, 0.0)); // base
/// assert_eq!((polys[0].mean(), polys[1].mean()), (0.0, 1.0));       // average
/// ```
pub fn mountain_loop(eps: f64) -> Result<LoopFamily> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    Ok(LoopFamily {
        dim: 2,
        mean: vec![expr::num(0.0), expr::num(1.0)],
        // 2 sin²(2πt) = 1 − cos(4πt)
        cos: vec![
            vec![expr::num(0.0), expr::num(0.0)],
            vec![expr::num(0.0), expr::num(-1.0)],
        ],
        sin: vec![vec![expr::num(4.0 / eps), expr::num(0.0)]],
    })
}

/// Global loop shape parameters: the `sin(2πt)` amplitude `s` on the
/// `a`-component and the duty threshold `s0` splitting the two containment
/// regimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopShape {
    pub s: f64,
    pub s0: f64,
}

/// Worst-case slice data a loop shape must accommodate.
#[derive(Debug, Clone, Copy)]
pub struct ShapeData {
    pub kappa_min: f64,
    pub eta_min: f64,
    pub max_base_a: f64,
    /// Sup norm of the sheared base `β_b − β_a·m₀`.
    pub max_base_b: f64,
    pub max_da: f64,
    /// Sup norm of the sheared average offset `Δb′`.
    pub max_db: f64,
}

const ZERO_AMPLITUDE: f64 = 1e-12;
const SHAPE_CAP: f64 = 1e9;

/// Picks `(s, s0)` from the two closed-form sufficient conditions
///
/// 1. `‖β′_b‖∞ + 2‖Δb′‖∞ s0² < η`  (near the base the tube suffices),
/// 2. `κ(s·s0 − |β_a| − 2|Δa|) > ‖β′_b‖∞ + 2‖Δb′‖∞`  (away from the base
///    the `a`-amplitude dominates),
///
/// with a `safety`-fold factor on each. Errors when the base is not strictly
/// inside the inner tube or no amplitude below the cap works.
pub fn choose_shape(data: &ShapeData, safety: f64) -> Result<LoopShape> {
    if !(data.eta_min > data.max_base_b) {
        return Err(Error::BaseOutsideTube(format!(
            "‖β′_b‖∞ = {} ≥ η = {}",
            data.max_base_b, data.eta_min
        )));
    }
    if data.max_db < ZERO_AMPLITUDE {
        // nothing oscillates in b: a pure a-translation stays inside
        return Ok(LoopShape { s: 0.0, s0: 0.7 });
    }
    let s0 = ((data.eta_min - data.max_base_b) / (2.0 * safety * data.max_db))
        .sqrt()
        .min(0.7);
    let s_min = ((data.max_base_b + 2.0 * data.max_db) / data.kappa_min
        + data.max_base_a
        + 2.0 * data.max_da)
        / s0;
    let s = safety * s_min;
    if !s.is_finite() || s > SHAPE_CAP {
        return Err(Error::LoopShapeSearch(format!(
            "required amplitude {s} exceeds cap {SHAPE_CAP} (s0 = {s0})"
        )));
    }
    Ok(LoopShape { s, s0 })
}

/// Builds the loop family in slice coordinates `(a, b)` from closed-form
/// base `β`, average `ḡ` and per-component shear `m₀`:
///
/// * `a(t) = ḡ_a − Δa cos(2πt) + s sin(2πt)` with `Δa = ḡ_a − β_a`,
/// * sheared `b′ᵢ(t) = ḡ′_{b,i} − Δb′ᵢ cos(4πt)`, un-sheared by
///   `bᵢ = b′ᵢ + a·m₀ᵢ`.
///
/// Means equal `ḡ` and bases equal `β` exactly by construction.
pub fn build_slice_family(
    m0: &[Expr],
    base_a: &Expr,
    base_b: &[Expr],
    avg_a: &Expr,
    avg_b: &[Expr],
    shape: LoopShape,
) -> LoopFamily {
    let n = m0.len();
    let dim = 1 + n;
    let da = expr::sub(avg_a.clone(), base_a.clone());

    let mut mean = vec![avg_a.clone()];
    let mut cos1 = vec![expr::neg(da.clone())];
    let mut sin1 = vec![expr::num(shape.s)];
    let mut cos2 = vec![expr::num(0.0)];

    for i in 0..n {
        // sheared offsets: Δb′ = (ḡ_b − ḡ_a m₀) − (β_b − β_a m₀)
        let db = expr::sub(
            expr::sub(avg_b[i].clone(), expr::mul(avg_a.clone(), m0[i].clone())),
            expr::sub(base_b[i].clone(), expr::mul(base_a.clone(), m0[i].clone())),
        );
        mean.push(avg_b[i].clone());
        cos1.push(expr::neg(expr::mul(da.clone(), m0[i].clone())));
        sin1.push(expr::mul(expr::num(shape.s), m0[i].clone()));
        cos2.push(expr::neg(db));
    }

    LoopFamily {
        dim,
        mean,
        cos: vec![cos1, cos2],
        sin: vec![sin1],
    }
}

/// Checks `γ_x(t)` against the per-component hyperbola tests on a dense `t`
/// sample; the loop lives in slice coordinates.
pub fn check_containment(
    params: &[HyperbolaParams],
    polys: &[TrigPoly],
    t_samples: usize,
    label: &str,
) -> Result<()> {
    for i in 0..t_samples {
        let t = i as f64 / t_samples as f64;
        let a = polys[0].eval(t);
        for (cmp, p) in params.iter().enumerate() {
            if p.empty {
                return Err(Error::EmptySlice { at: label.into() });
            }
            let b = polys[1 + cmp].eval(t);
            let centered = b - p.m0 * a;
            let slack = p.eta * p.eta + p.kappa * p.kappa * a * a - centered * centered;
            if !(slack > 0.0) {
                return Err(Error::ContainmentViolation(format!(
                    "{label}: component {cmp} at t = {t}: slack {slack}"
                )));
            }
        }
    }
    Ok(())
}

/// A single numeric loop in slice coordinates: component 0 is `a(t)`, the
/// rest are `b(t)`.
#[derive(Debug, Clone)]
pub struct NumericLoop {
    pub polys: Vec<TrigPoly>,
    pub shape: Option<LoopShape>,
}

impl NumericLoop {
    pub fn base(&self) -> Vec<f64> {
        self.polys.iter().map(|p| p.eval(0.0)).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.polys.iter().map(|p| p.mean()).collect()
    }
}

/// Synthesizes one loop in a slice with the given per-component hyperbola
/// data, based at `base` with average `target` (slice coordinates), choosing
/// shape parameters by the closed-form conditions unless provided. The
/// result is verified by dense sampling and the operation fails loudly on
/// violation.
pub fn synthesize_loop(
    params: &[HyperbolaParams],
    base: (f64, &[f64]),
    target: (f64, &[f64]),
    shape: Option<LoopShape>,
    safety: f64,
    t_samples: usize,
) -> Result<NumericLoop> {
    let n = params.len();
    if base.1.len() != n || target.1.len() != n {
        return Err(Error::DimMismatch {
            context: "synthesize_loop",
            expected: n,
            got: base.1.len(),
        });
    }
    if params.iter().any(|p| p.empty) {
        return Err(Error::EmptySlice {
            at: "synthesize_loop".into(),
        });
    }
    let m0: Vec<f64> = params.iter().map(|p| p.m0).collect();
    let sheared =
        |a: f64, b: &[f64]| -> Vec<f64> { b.iter().zip(&m0).map(|(v, m)| v - m * a).collect() };
    let base_bp = sheared(base.0, base.1);
    let target_bp = sheared(target.0, target.1);
    let da = target.0 - base.0;
    let db: Vec<f64> = target_bp.iter().zip(&base_bp).map(|(t, b)| t - b).collect();

    let degenerate = da.abs() < ZERO_AMPLITUDE && sup_norm(&db) < ZERO_AMPLITUDE;
    let (family, shape_used) = if degenerate {
        let mean: Vec<Expr> = std::iter::once(target.0)
            .chain(target.1.iter().copied())
            .map(expr::num)
            .collect();
        (LoopFamily::constant(mean), None)
    } else {
        let shape = match shape {
            Some(s) => s,
            None => {
                let data = ShapeData {
                    kappa_min: params.iter().map(|p| p.kappa).fold(f64::INFINITY, f64::min),
                    eta_min: params.iter().map(|p| p.eta).fold(f64::INFINITY, f64::min),
                    max_base_a: base.0.abs(),
                    max_base_b: sup_norm(&base_bp),
                    max_da: da.abs(),
                    max_db: sup_norm(&db),
                };
                choose_shape(&data, safety)?
            }
        };
        let m0_e: Vec<Expr> = m0.iter().copied().map(expr::num).collect();
        let base_b_e: Vec<Expr> = base.1.iter().copied().map(expr::num).collect();
        let avg_b_e: Vec<Expr> = target.1.iter().copied().map(expr::num).collect();
        (
            build_slice_family(
                &m0_e,
                &expr::num(base.0),
                &base_b_e,
                &expr::num(target.0),
                &avg_b_e,
                shape,
            ),
            Some(shape),
        )
    };

    let polys = family.numeric_at(&[], &[])?;
    check_containment(params, &polys, t_samples.max(16), "synthesize_loop")?;
    Ok(NumericLoop {
        polys,
        shape: shape_used,
    })
}

/// Report of one corrugation step: the sampled `C⁰` displacement bound
/// `(2/N)·max‖γ − ḡ‖∞` and the measured drift the `x`-dependence of the
/// coefficients induces on the other partial derivatives.
#[derive(Debug, Clone)]
pub struct CorrugationReport {
    pub direction: usize,
    pub frequency: u32,
    pub displacement_bound: f64,
    pub cross_partial_drift: f64,
    pub mean_mismatch: f64,
}

fn coarse_grid(dims: Dims, margin: f64) -> Result<Grid> {
    let res = match dims.m {
        1 => 64,
        2 => 24,
        _ => 8,
    };
    Grid::thickened_cube(dims.m, margin, res)
}

/// One corrugation step in direction `j` (0-based).
///
/// Requires the family's declared average to equal the state's actual
/// `∂ⱼ value` within 1e-9 at coarse grid points, and `j` not yet holonomic.
/// Returns the new state and the measured report.
///
/// On the standard mountain data this reproduces the closed forms
/// `δ(x) = 2(1 − cos 2πNx)/(επN)` and `h(x) = x − sin(4πNx)/(4πN)`:
///
/// ```
/// use holoapprox::corrugation::{corrugate, mountain_loop, Frequency};
/// use holoapprox::jetmodel::{Dims, FormalSolutionState, JetSection};
///
/// let sigma = JetSection::from_sources(
///     Dims::new(1, 0, 1).unwrap(), &["x1"], &[vec!["0", "0"]], 0.1,
/// ).unwrap();
/// let state = FormalSolutionState::canonical(&sigma);
/// let family = mountain_loop(1.0).unwrap();
/// let (next, _) = corrugate(&state, 0, &family, Frequency::new(6).unwrap(), 0.1).unwrap();
///
/// let (delta, h) = next.value_at(&[0.25]).unwrap();
/// let n = 6.0f64;
/// let pi = std::f64::consts::PI;
/// let expect_delta = 2.0 * (1.0 - (2.0 * pi * n * 0.25).cos()) / (pi * n);
/// let expect_h = 0.25 - (4.0 * pi * n * 0.25).sin() / (4.0 * pi * n);
/// assert!((delta - expect_delta).abs() < 1e-12);
/// assert!((h[0] - expect_h).abs() < 1e-12);
/// ```
pub fn corrugate(
    state: &FormalSolutionState,
    j: usize,
    family: &LoopFamily,
    n: Frequency,
    margin: f64,
) -> Result<(FormalSolutionState, CorrugationReport)> {
    let dims = state.dims;
    if j >= dims.m {
        return Err(Error::InvalidInput(format!(
            "direction {j} out of range for m = {}",
            dims.m
        )));
    }
    if state.holonomic.contains(&j) {
        return Err(Error::DirectionAlreadyHolonomic(j));
    }
    if family.dim != 1 + dims.n {
        return Err(Error::DimMismatch {
            context: "corrugate loop family",
            expected: 1 + dims.n,
            got: family.dim,
        });
    }

    let names = dims.x_names();
    let grid = coarse_grid(dims, margin)?;

    // precondition: declared average == actual ∂ⱼ value (dual-number route)
    let mut mean_mismatch = 0.0f64;
    for x in grid.points() {
        let vars = bindings(&names, &x);
        let (yrow, wmat) = state.actual_deriv_at(&x)?;
        let declared: Vec<f64> = family
            .mean
            .iter()
            .map(|e| expr::eval_f64(e, &vars))
            .collect::<Result<Vec<_>>>()?;
        let mut actual = vec![yrow[j]];
        actual.extend(wmat.col(j));
        let gap = declared
            .iter()
            .zip(&actual)
            .map(|(d, a)| (d - a).abs())
            .fold(0.0f64, f64::max);
        mean_mismatch = mean_mismatch.max(gap);
        if gap > 1e-9 {
            return Err(Error::AverageMismatch(format!(
                "direction {j} at x = {x:?}: declared {declared:?}, actual {actual:?}"
            )));
        }
    }

    let terms = family.corrugation_term_exprs(n, j);
    let arg = expr::mul(
        expr::num(n.get() as f64),
        expr::var(&format!("x{}", j + 1)),
    );
    let new_col = family.value_exprs(&arg);

    let mut next = state.clone();
    next.value_y = expr::add(next.value_y, terms[0].clone());
    for (i, t) in terms.iter().enumerate().skip(1) {
        next.value_w[i - 1] = expr::add(next.value_w[i - 1].clone(), t.clone());
    }
    for (row, e) in new_col.into_iter().enumerate() {
        next.deriv[row][j] = e;
    }
    next.holonomic = {
        let mut h = state.holonomic.clone();
        h.insert(j);
        h
    };

    // measured report: C⁰ displacement bound and cross-partial drift
    let mut sup_dev = 0.0f64;
    let t_probe = 128;
    for x in grid.points() {
        let polys = family.numeric_at(&names, &x)?;
        for ti in 0..t_probe {
            let t = ti as f64 / t_probe as f64;
            let dev: Vec<f64> = polys.iter().map(|p| p.eval(t) - p.mean()).collect();
            sup_dev = sup_dev.max(sup_norm(&dev));
        }
    }
    let mut drift = 0.0f64;
    let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    for x in grid.points() {
        let vars = bindings(&names, &x);
        for term in &terms {
            let d = expr::eval_dual(term, &vars, &name_refs)?;
            for i in 0..dims.m {
                if i != j {
                    drift = drift.max(d.partial(i).abs());
                }
            }
        }
    }

    Ok((
        next,
        CorrugationReport {
            direction: j,
            frequency: n.get(),
            displacement_bound: 2.0 * sup_dev / n.get() as f64,
            cross_partial_drift: drift,
            mean_mismatch,
        },
    ))
}

/// Options for [`solve`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Verification grid resolution per axis; default scales with `m`.
    pub x_res: Option<usize>,
    /// Frequency cap for the doubling search.
    pub n_cap: u32,
    /// First candidate frequency for the first direction.
    pub n_start: u32,
    /// Later directions start at `ratio × previous N`.
    pub freq_ratio: u32,
    /// Safety factor on the loop shape conditions.
    pub safety: f64,
    /// Required strict lower bound for all membership margins.
    pub margin_floor: f64,
    /// Force the explicit mountain loop ansatz (requires the standard
    /// mountain data: m = n = 1, zero base, unit average).
    pub mountain_ansatz: bool,
    /// Pin the frequency instead of searching (direction `j` gets
    /// `n × ratio^j`); verification still runs and failures are errors.
    pub forced_frequency: Option<u32>,
    /// Dense `t`-samples per point for loop containment.
    pub t_samples: usize,
    /// At most this many grid points in the containment sweep.
    pub containment_x_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            x_res: None,
            n_cap: 8192,
            n_start: 1,
            freq_ratio: 4,
            safety: 2.0,
            margin_floor: 0.0,
            mountain_ansatz: false,
            forced_frequency: None,
            t_samples: 10_000,
            containment_x_cap: 256,
        }
    }
}

pub fn default_resolution(m: usize) -> usize {
    match m {
        1 => 512,
        2 => 64,
        _ => 16,
    }
}

/// Per-direction solve report.
#[derive(Debug, Clone)]
pub struct DirectionReport {
    pub direction: usize,
    pub frequency: u32,
    pub kappa_min: f64,
    pub eta_min: f64,
    pub base_tube_margin: f64,
    pub shape: Option<LoopShape>,
    pub margin_after: f64,
    pub displacement_bound: f64,
    pub cross_partial_drift: f64,
}

/// Full solve report: one entry per corrugated direction plus the final
/// membership margins of the actual jet of `(δ, h)` over the grid.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub directions: Vec<DirectionReport>,
    pub final_margin: f64,
    pub final_worst_point: Vec<f64>,
    pub final_worst_clause: Clause,
    pub grid_res: usize,
}

/// Membership margins of the hybrid jet of a state over a grid: corrugated
/// columns carry the actual partial derivatives (dual numbers), the others
/// the formal ones. After the last direction this is the actual jet.
pub fn hybrid_margins(
    section: &JetSection,
    eps: f64,
    state: &FormalSolutionState,
    grid: &Grid,
) -> Result<(f64, Vec<f64>, Clause)> {
    let dims = section.dims;
    let mut worst = f64::INFINITY;
    let mut worst_point = vec![];
    let mut worst_clause = Clause::DeltaBound;
    for x in grid.points() {
        let (y, w) = state.value_at(&x)?;
        let (f_yrow, f_wmat) = state.deriv_at(&x)?;
        let (a_yrow, a_wmat) = state.actual_deriv_at(&x)?;
        let mut yrow = vec![0.0; dims.m];
        let mut wmat = Matrix::zeros(dims.n, dims.m);
        for c in 0..dims.m {
            let actual = state.holonomic.contains(&c);
            yrow[c] = if actual { a_yrow[c] } else { f_yrow[c] };
            for r in 0..dims.n {
                wmat.set(
                    r,
                    c,
                    if actual {
                        a_wmat.get(r, c)
                    } else {
                        f_wmat.get(r, c)
                    },
                );
            }
        }
        let p = JetPoint {
            x: x.clone(),
            y,
            w,
            yrow,
            wmat,
        };
        let v = membership(section, eps, &p)?;
        if v.margin < worst {
            worst = v.margin;
            worst_point = x;
            worst_clause = v.worst_clause;
        }
    }
    Ok((worst, worst_point, worst_clause))
}

struct DirectionData {
    lambda: Vec<Expr>,
    psi: Vec<Vec<Expr>>,
    m0: Vec<Expr>,
    base_a: Expr,
    base_b: Vec<Expr>,
    avg_a: Expr,
    avg_b: Vec<Expr>,
    avg_c: Vec<Expr>,
    phi_y: Vec<Expr>,
}

fn direction_data(
    section: &JetSection,
    state: &FormalSolutionState,
    eps: f64,
    j: usize,
) -> Result<DirectionData> {
    let dims = section.dims;
    let y_cur = state.value_y.clone();
    let phi_y: Vec<Expr> = (0..dims.n)
        .map(|i| section.phi_entry_on_graph(i, dims.m, &y_cur))
        .collect();
    let phi_xj: Vec<Expr> = (0..dims.n)
        .map(|i| section.phi_entry_on_graph(i, j, &y_cur))
        .collect();
    let tau_cols: Vec<usize> = (0..dims.m).filter(|c| *c != j).collect();
    let lambda: Vec<Expr> = tau_cols
        .iter()
        .map(|&c| state.deriv[0][c].clone())
        .collect();
    let psi: Vec<Vec<Expr>> = (0..dims.n)
        .map(|i| {
            tau_cols
                .iter()
                .enumerate()
                .map(|(p, &c)| {
                    expr::sub(
                        state.deriv[1 + i][c].clone(),
                        expr::add(
                            section.phi_entry_on_graph(i, c, &y_cur),
                            expr::mul(lambda[p].clone(), phi_y[i].clone()),
                        ),
                    )
                })
                .collect()
        })
        .collect();
    let m0: Vec<Expr> = (0..dims.n)
        .map(|i| hyperbola_m0_expr(&lambda, &psi[i], eps))
        .collect();

    let base_a = state.deriv[0][j].clone();
    let base_c: Vec<Expr> = (0..dims.n)
        .map(|i| state.deriv[1 + i][j].clone())
        .collect();
    let (avg_a, avg_c) = state.value_partial(j)?;

    let to_slice = |a: &Expr, c: &Expr, i: usize| -> Expr {
        expr::sub(
            c.clone(),
            expr::add(expr::mul(a.clone(), phi_y[i].clone()), phi_xj[i].clone()),
        )
    };
    let base_b: Vec<Expr> = base_c
        .iter()
        .enumerate()
        .map(|(i, c)| to_slice(&base_a, c, i))
        .collect();
    let avg_b: Vec<Expr> = avg_c
        .iter()
        .enumerate()
        .map(|(i, c)| to_slice(&avg_a, c, i))
        .collect();

    Ok(DirectionData {
        lambda,
        psi,
        m0,
        base_a,
        base_b,
        avg_a,
        avg_b,
        avg_c,
        phi_y,
    })
}

/// Maps a slice-coordinate family through the affine chart to jet-column
/// coordinates `(a, c)`. The mean is replaced by the exact column average
/// `(ḡ_a, ḡ_c)`; harmonics pick up the linear part `c = b + a·φ∂_y`.
fn family_to_columns(slice_family: &LoopFamily, data: &DirectionData) -> LoopFamily {
    let n = data.phi_y.len();
    let mut mean = vec![data.avg_a.clone()];
    mean.extend(data.avg_c.iter().cloned());
    let map_harm = |l: &Vec<Expr>| -> Vec<Expr> {
        let mut out = vec![l[0].clone()];
        for i in 0..n {
            out.push(expr::add(
                l[1 + i].clone(),
                expr::mul(l[0].clone(), data.phi_y[i].clone()),
            ));
        }
        out
    };
    LoopFamily {
        dim: slice_family.dim,
        mean,
        cos: slice_family.cos.iter().map(map_harm).collect(),
        sin: slice_family.sin.iter().map(map_harm).collect(),
    }
}

/// Solves the approximation problem on the pair level: starting from the
/// canonical formal solution, corrugates each coordinate direction in turn,
/// choosing each frequency by doubling until the hybrid membership margins
/// clear the floor on the verification grid. Returns `(δ, h)` and the
/// report; the final margins use the exact jet of the returned pair.
pub fn solve(
    section: &JetSection,
    eps: f64,
    opts: &SolveOptions,
) -> Result<(HolonomicPair, SolveReport)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let dims = section.dims;
    let res = opts.x_res.unwrap_or_else(|| default_resolution(dims.m));
    let grid = Grid::thickened_cube(dims.m, section.margin, res)?;
    let names = dims.x_names();

    let mut state = FormalSolutionState::canonical(section);
    let mut reports = Vec::new();
    let mut prev_n: u32 = 0;

    for j in 0..dims.m {
        let data = direction_data(section, &state, eps, j)?;

        // numeric sweep: emptiness, base-in-tube, worst-case shape data
        let mut kappa_min = f64::INFINITY;
        let mut eta_min = f64::INFINITY;
        let mut tube_margin = f64::INFINITY;
        let mut max_base_a = 0.0f64;
        let mut max_base_b = 0.0f64;
        let mut max_da = 0.0f64;
        let mut max_db = 0.0f64;
        let stride = (grid.len() / opts.containment_x_cap.max(1)).max(1);
        let mut containment_points = Vec::new();
        for (idx, x) in grid.points().enumerate() {
            let vars = bindings(&names, &x);
            let lambda: Vec<f64> = data
                .lambda
                .iter()
                .map(|e| expr::eval_f64(e, &vars))
                .collect::<Result<Vec<_>>>()?;
            let mut params = Vec::with_capacity(dims.n);
            for i in 0..dims.n {
                let mu: Vec<f64> = data.psi[i]
                    .iter()
                    .map(|e| expr::eval_f64(e, &vars))
                    .collect::<Result<Vec<_>>>()?;
                let p = hyperbola_params(&lambda, &mu, eps)?;
                if p.empty {
                    return Err(Error::EmptySlice {
                        at: format!("direction {j}, x = {x:?}"),
                    });
                }
                params.push(p);
            }
            kappa_min =
                kappa_min.min(params.iter().map(|p| p.kappa).fold(f64::INFINITY, f64::min));
            eta_min = eta_min.min(params.iter().map(|p| p.eta).fold(f64::INFINITY, f64::min));

            let base_a = expr::eval_f64(&data.base_a, &vars)?;
            let avg_a = expr::eval_f64(&data.avg_a, &vars)?;
            max_base_a = max_base_a.max(base_a.abs());
            max_da = max_da.max((avg_a - base_a).abs());
            for i in 0..dims.n {
                let base_b = expr::eval_f64(&data.base_b[i], &vars)?;
                let avg_b = expr::eval_f64(&data.avg_b[i], &vars)?;
                let sheared_base = base_b - base_a * params[i].m0;
                let sheared_avg = avg_b - avg_a * params[i].m0;
                max_base_b = max_base_b.max(sheared_base.abs());
                max_db = max_db.max((sheared_avg - sheared_base).abs());
                tube_margin = tube_margin.min(params[i].eta - sheared_base.abs());
            }
            if idx % stride == 0 {
                containment_points.push((x, params));
            }
        }
        if !(tube_margin > 0.0) {
            return Err(Error::BaseOutsideTube(format!(
                "direction {j}: worst tube margin {tube_margin}"
            )));
        }

        // loop family in slice coordinates
        let degenerate = max_da < ZERO_AMPLITUDE && max_db < ZERO_AMPLITUDE;
        let (slice_family, shape) = if opts.mountain_ansatz {
            if dims.m != 1 || dims.n != 1 {
                return Err(Error::InvalidInput(
                    "the mountain ansatz needs m = n = 1".into(),
                ));
            }
            let mut data_ok = max_base_a < 1e-9 && max_base_b < 1e-9;
            for x in grid.points() {
                let vars = bindings(&names, &x);
                let aa = expr::eval_f64(&data.avg_a, &vars)?;
                let ab = expr::eval_f64(&data.avg_b[0], &vars)?;
                if aa.abs() > 1e-9 || (ab - 1.0).abs() > 1e-9 {
                    data_ok = false;
                    break;
                }
            }
            if !data_ok {
                return Err(Error::InvalidInput(
                    "the mountain ansatz needs base (0,0) and average (0,1)".into(),
                ));
            }
            let family = mountain_loop(eps)?;
            let shape = LoopShape {
                s: 4.0 / eps,
                s0: (eps / 2.0).sqrt().min(0.7),
            };
            (family, Some(shape))
        } else if degenerate {
            let mut mean = vec![data.avg_a.clone()];
            mean.extend(data.avg_b.iter().cloned());
            (LoopFamily::constant(mean), None)
        } else {
            let shape = choose_shape(
                &ShapeData {
                    kappa_min,
                    eta_min,
                    max_base_a,
                    max_base_b,
                    max_da,
                    max_db,
                },
                opts.safety,
            )?;
            (
                build_slice_family(
                    &data.m0,
                    &data.base_a,
                    &data.base_b,
                    &data.avg_a,
                    &data.avg_b,
                    shape,
                ),
                Some(shape),
            )
        };

        // containment sweep over the x subset, dense in t
        for (x, params) in &containment_points {
            let polys = slice_family.numeric_at(&names, x)?;
            check_containment(
                params,
                &polys,
                opts.t_samples,
                &format!("direction {j}, x = {x:?}"),
            )?;
        }

        let col_family = family_to_columns(&slice_family, &data);

        // frequency search by doubling
        let start = match opts.forced_frequency {
            Some(f) => {
                let mut v = f.max(1);
                for _ in 0..j {
                    v = v.saturating_mul(opts.freq_ratio.max(1));
                }
                v
            }
            None => {
                if prev_n == 0 {
                    opts.n_start.max(1)
                } else {
                    prev_n.saturating_mul(opts.freq_ratio.max(1))
                }
            }
        };
        let mut n = start;
        let accepted = loop {
            let (cand, rep) =
                corrugate(&state, j, &col_family, Frequency::new(n)?, section.margin)?;
            let (margin, wpoint, wclause) = hybrid_margins(section, eps, &cand, &grid)?;
            if margin > opts.margin_floor {
                break (cand, rep, margin);
            }
            if opts.forced_frequency.is_some() || n >= opts.n_cap {
                return Err(Error::FrequencyCapExceeded {
                    cap: opts.n_cap,
                    direction: j,
                    detail: format!(
                        "margin {margin} ({}) at x = {wpoint:?} with N = {n}",
                        wclause.name()
                    ),
                });
            }
            n = (n * 2).min(opts.n_cap);
        };
        let (cand, rep, margin) = accepted;
        reports.push(DirectionReport {
            direction: j,
            frequency: rep.frequency,
            kappa_min,
            eta_min,
            base_tube_margin: tube_margin,
            shape,
            margin_after: margin,
            displacement_bound: rep.displacement_bound,
            cross_partial_drift: rep.cross_partial_drift,
        });
        prev_n = rep.frequency;
        state = cand;
    }

    debug_assert_eq!(state.holonomic, (0..dims.m).collect::<BTreeSet<_>>());
    let pair = HolonomicPair::new(dims, state.value_y.clone(), state.value_w.clone())?;
    let (final_margin, final_worst_point, final_worst_clause) =
        hybrid_margins(section, eps, &state, &grid)?;
    Ok((
        pair,
        SolveReport {
            directions: reports,
            final_margin,
            final_worst_point,
            final_worst_clause,
            grid_res: res,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetmodel::Dims;
    use std::f64::consts::PI;

    fn mountain_section() -> JetSection {
        JetSection::from_sources(Dims::new(1, 0, 1).unwrap(), &["x1"], &[vec!["0", "0"]], 0.1)
            .unwrap()
    }

    #[test]
    fn mountain_loop_base_average_containment() {
        let eps = 1.0;
        let family = mountain_loop(eps).unwrap();
        let polys = family.numeric_at(&[], &[]).unwrap();
        // base (0, 0)
        assert!(polys[0].eval(0.0).abs() < 1e-15);
        assert!(polys[1].eval(0.0).abs() < 1e-15);
        // average (0, 1), exact trig algebra
        assert_eq!(polys[0].mean(), 0.0);
        assert_eq!(polys[1].mean(), 1.0);
        // containment in {W² < ε²(1+Y²)} at 10⁴ samples
        let p = hyperbola_params(&[], &[], eps).unwrap();
        check_containment(&[p], &polys, 10_000, "mountain").unwrap();
    }

    #[test]
    fn loop_matches_the_explicit_ansatz() {
        let eps = 0.5;
        let family = mountain_loop(eps).unwrap();
        let polys = family.numeric_at(&[], &[]).unwrap();
        for i in 0..32 {
            let t = i as f64 / 32.0;
            let expect_a = 4.0 * (TAU * t).sin() / eps;
            let expect_w = 2.0 * (TAU * t).sin().powi(2);
            assert!((polys[0].eval(t) - expect_a).abs() < 1e-14);
            assert!((polys[1].eval(t) - expect_w).abs() < 1e-13);
        }
    }

    #[test]
    fn synthesized_loops_hit_base_and_average_exactly() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut done = 0;
        while done < 25 {
            let dim = rng.gen_range(0..=2usize);
            let n = rng.gen_range(1..=3usize);
            let lambda: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let eps = rng.gen_range(0.3..1.5);
            let mut params = Vec::new();
            let mut ok = true;
            for _ in 0..n {
                let mu: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.4..0.4)).collect();
                let p = hyperbola_params(&lambda, &mu, eps).unwrap();
                ok &= !p.empty;
                params.push(p);
            }
            if !ok {
                continue;
            }
            // base strictly inside the inner tube, random target
            let base_a = rng.gen_range(-0.5..0.5);
            let base_b: Vec<f64> = params
                .iter()
                .map(|p| p.m0 * base_a + rng.gen_range(-0.5..0.5) * p.eta * 0.8)
                .collect();
            let avg_a = rng.gen_range(-2.0..2.0);
            let avg_b: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let lp = synthesize_loop(
                &params,
                (base_a, &base_b),
                (avg_a, &avg_b),
                None,
                2.0,
                2_000,
            )
            .unwrap();
            let got_base = lp.base();
            let got_mean = lp.mean();
            assert!((got_base[0] - base_a).abs() < 1e-12);
            assert!((got_mean[0] - avg_a).abs() < 1e-12);
            for i in 0..n {
                assert!((got_base[1 + i] - base_b[i]).abs() < 1e-12);
                assert!((got_mean[1 + i] - avg_b[i]).abs() < 1e-12);
            }
            done += 1;
        }
    }

    #[test]
    fn degenerate_target_gives_constant_loop() {
        let p = hyperbola_params(&[], &[], 1.0).unwrap();
        let lp = synthesize_loop(&[p], (0.2, &[0.3]), (0.2, &[0.3]), None, 2.0, 100).unwrap();
        assert!(lp.shape.is_none());
        assert_eq!(lp.polys[0].degree(), 0);
        assert_eq!(lp.base(), lp.mean());
    }

    #[test]
    fn base_outside_tube_is_surfaced() {
        let p = hyperbola_params(&[], &[], 0.5).unwrap();
        // η = 0.5 but base b = 0.6
        let err = synthesize_loop(&[p], (0.0, &[0.6]), (0.0, &[1.0]), None, 2.0, 100);
        assert!(matches!(err, Err(Error::BaseOutsideTube(_))));
    }

    #[test]
    fn corrugate_reproduces_mountain_closed_forms() {
        let s = mountain_section();
        let state = FormalSolutionState::canonical(&s);
        let (eps, n) = (1.0, 6u32);
        let family = mountain_loop(eps).unwrap();
        let (next, rep) = corrugate(&state, 0, &family, Frequency::new(n).unwrap(), 0.1).unwrap();
        assert!(rep.mean_mismatch < 1e-12);
        let nf = n as f64;
        for i in 0..=1024 {
            let x = i as f64 / 1024.0;
            let (y, w) = next.value_at(&[x]).unwrap();
            let delta = 2.0 * (1.0 - (TAU * nf * x).cos()) / (eps * PI * nf);
            let h = x - (2.0 * TAU * nf * x).sin() / (4.0 * PI * nf);
            assert!((y - delta).abs() < 1e-12, "x {x}: δ {y} vs {delta}");
            assert!((w[0] - h).abs() < 1e-12, "x {x}: h {} vs {h}", w[0]);
        }
        // formal derivative column = loop at N x, and it matches the actual
        let x = 0.3717;
        let (yrow, wmat) = next.deriv_at(&[x]).unwrap();
        assert!((yrow[0] - 4.0 * (TAU * nf * x).sin() / eps).abs() < 1e-12);
        assert!((wmat.get(0, 0) - (1.0 - (2.0 * TAU * nf * x).cos())).abs() < 1e-12);
        let (a_yrow, a_wmat) = next.actual_deriv_at(&[x]).unwrap();
        assert!((yrow[0] - a_yrow[0]).abs() < 1e-10);
        assert!((wmat.get(0, 0) - a_wmat.get(0, 0)).abs() < 1e-10);
    }

    #[test]
    fn constant_loop_is_a_no_op() {
        let s = JetSection::from_sources(
            Dims::new(1, 0, 1).unwrap(),
            &["sin(x1)"],
            &[vec!["cos(x1)", "0"]],
            0.1,
        )
        .unwrap();
        let state = FormalSolutionState::canonical(&s);
        let (avg_a, avg_w) = state.value_partial(0).unwrap();
        let mut mean = vec![avg_a];
        mean.extend(avg_w);
        let family = LoopFamily::constant(mean);
        let (next, _) = corrugate(&state, 0, &family, Frequency::new(7).unwrap(), 0.1).unwrap();
        let (y, w) = next.value_at(&[0.42]).unwrap();
        assert_eq!(y, 0.0);
        assert!((w[0] - 0.42f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn doubling_frequency_halves_displacement() {
        let s = mountain_section();
        let state = FormalSolutionState::canonical(&s);
        let family = mountain_loop(1.0).unwrap();
        let (_, r1) = corrugate(&state, 0, &family, Frequency::new(4).unwrap(), 0.1).unwrap();
        let (_, r2) = corrugate(&state, 0, &family, Frequency::new(8).unwrap(), 0.1).unwrap();
        assert!((r1.displacement_bound / r2.displacement_bound - 2.0).abs() < 1e-9);
    }

    #[test]
    fn corrugate_rejects_wrong_average_and_repeat_direction() {
        let s = mountain_section();
        let state = FormalSolutionState::canonical(&s);
        let bad = LoopFamily::constant(vec![expr::num(0.0), expr::num(0.5)]);
        assert!(matches!(
            corrugate(&state, 0, &bad, Frequency::new(2).unwrap(), 0.1),
            Err(Error::AverageMismatch(_))
        ));
        let family = mountain_loop(1.0).unwrap();
        let (next, _) = corrugate(&state, 0, &family, Frequency::new(2).unwrap(), 0.1).unwrap();
        assert!(matches!(
            corrugate(&next, 0, &family, Frequency::new(2).unwrap(), 0.1),
            Err(Error::DirectionAlreadyHolonomic(0))
        ));
    }

    #[test]
    fn solve_mountain_at_unit_eps_needs_n_two() {
        let s = mountain_section();
        let opts = SolveOptions {
            mountain_ansatz: true,
            ..SolveOptions::default()
        };
        let (pair, report) = solve(&s, 1.0, &opts).unwrap();
        assert_eq!(report.directions.len(), 1);
        // N = 1 fails on |δ| (4/π > 1); N = 2 passes
        assert_eq!(report.directions[0].frequency, 2);
        assert!(report.final_margin > 0.0);
        let (delta, _, h, _) = pair.jet(&[0.25]).unwrap();
        let nf = 2.0;
        assert!((delta - 2.0 * (1.0 - (TAU * nf * 0.25).cos()) / (PI * nf)).abs() < 1e-12);
        assert!(
            (h[0] - (0.25 - (2.0 * TAU * nf * 0.25).sin() / (4.0 * PI * nf))).abs() < 1e-12
        );
    }

    #[test]
    fn solve_already_holonomic_returns_the_input() {
        let s = JetSection::from_sources(
            Dims::new(1, 0, 1).unwrap(),
            &["sin(x1)"],
            &[vec!["cos(x1)", "0"]],
            0.1,
        )
        .unwrap();
        let (pair, report) = solve(&s, 0.25, &SolveOptions::default()).unwrap();
        assert_eq!(pair.delta, expr::num(0.0));
        assert_eq!(report.directions[0].frequency, 1);
        assert!(report.directions[0].shape.is_none());
        for x in [0.0, 0.5, 1.0] {
            let (d, _, h, _) = pair.jet(&[x]).unwrap();
            assert_eq!(d, 0.0);
            assert!((h[0] - x.sin()).abs() < 1e-15);
        }
        assert!(report.final_margin > 0.2);
    }

    #[test]
    fn solve_auto_loop_mountain_small_eps() {
        let s = mountain_section();
        let (pair, report) = solve(&s, 0.5, &SolveOptions::default()).unwrap();
        assert!(report.final_margin > 0.0, "margin {}", report.final_margin);
        // the pair really is a solution on a fine independent grid
        let g = Grid::thickened_cube(1, 0.1, 2048).unwrap();
        let (worst, _, _) = crate::relation::pair_margins(&s, 0.5, &pair, g.points()).unwrap();
        assert!(worst > 0.0, "independent margin {worst}");
    }
}
