//! The first-order approximation relation on jets of pairs
//! `(δ, h) : ℝᵐ → ℝ × ℝⁿ`, its principal slices in coordinate directions,
//! and their closed-form hyperbola geometry.
//!
//! A jet `(x, (y, w), (Y, W))` belongs to the relation for a section
//! σ = (f, φ) and tolerance ε when
//!
//! * `|y| < ε`,
//! * `‖w − f(x, y, 0)‖∞ < ε`,
//! * `‖(W∘pₘ − φ(x, y, 0))|_{Γ_Y × 0}‖ < ε`,
//!
//! where `Γ_Y` is the graph of `Y`. The restricted norm decomposes per
//! target component through the sup norm, and each component reduces to a
//! rank-one inverse quadratic, so all three clauses are exact closed forms.
//!
//! Slicing along a coordinate direction `j` with the other columns frozen
//! identifies the slice with a subset `Ω ⊂ ℝ × ℝⁿ` cut out per component by
//! hyperbola interiors `(b − m₀ a)² − κ² a² < η²`; the parameters `(m₀, κ, η)`
//! come from explicit 2×2 data on the span of the two linear forms involved.

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::jetmodel::JetSection;
use crate::numcore::{
    dot, point_in_hull, rank_one_inverse_quadratic, sup_norm, Matrix,
};

/// A point of `J¹(ℝᵐ, ℝ×ℝⁿ)` in coordinates: base point `x`, value `(y, w)`,
/// derivative `(Y, W)` with `Y` a row and `W` an `n × m` matrix.
#[derive(Debug, Clone)]
pub struct JetPoint {
    pub x: Vec<f64>,
    pub y: f64,
    pub w: Vec<f64>,
    pub yrow: Vec<f64>,
    pub wmat: Matrix,
}

/// Which clause of the relation attains the worst margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    DeltaBound,
    ValueBound,
    DerivativeBound,
}

impl Clause {
    pub fn name(self) -> &'static str {
        match self {
            Clause::DeltaBound => "delta-bound",
            Clause::ValueBound => "value-bound",
            Clause::DerivativeBound => "derivative-bound",
        }
    }
}

/// Membership verdict with per-clause margins `ε − attained value`; the jet
/// belongs to the relation iff every margin is strictly positive.
#[derive(Debug, Clone)]
pub struct Membership {
    pub member: bool,
    pub margin: f64,
    pub clause_margins: [f64; 3],
    pub worst_clause: Clause,
}

/// Tests the three clauses at a jet point and reports the worst margin.
///
/// The restricted first-order norm is computed exactly per target component
/// `j` as `√(rank_one_inverse_quadratic(r_j, Y))` where
/// `r_j = W_j − φ_x-block row j − φ_y[j]·Y`, then maximized over components.
///
/// ```
/// use holoapprox::jetmodel::{Dims, FormalSolutionState, JetSection};
/// use holoapprox::relation::{membership, JetPoint};
///
/// let sigma = JetSection::from_sources(
///     Dims::new(1, 0, 1).unwrap(),
///     &["x1"],
///     &[vec!["0", "0"]],
///     0.1,
/// ).unwrap();
/// let state = FormalSolutionState::canonical(&sigma);
/// let (y, w) = state.value_at(&[0.3]).unwrap();
/// let (yrow, wmat) = state.deriv_at(&[0.3]).unwrap();
/// let p = JetPoint { x: vec![0.3], y, w, yrow, wmat };
///
/// // the canonical formal solution is a member with zero residual
/// let v = membership(&sigma, 1e-9, &p).unwrap();
/// assert!(v.member);
/// assert!((v.clause_margins[1] - 1e-9).abs() < 1e-24);
/// assert!((v.clause_margins[2] - 1e-9).abs() < 1e-24);
/// ```
pub fn membership(section: &JetSection, eps: f64, p: &JetPoint) -> Result<Membership> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let dims = section.dims;
    if p.x.len() != dims.m || p.w.len() != dims.n || p.yrow.len() != dims.m {
        return Err(Error::DimMismatch {
            context: "membership jet point",
            expected: dims.m,
            got: p.x.len(),
        });
    }
    let names = dims.var_names();
    let z = vec![0.0; dims.k];
    let f_val = section.eval_f(&names, &p.x, p.y, &z)?;
    let phi = section.eval_phi(&names, &p.x, p.y, &z)?;

    let m1 = eps - p.y.abs();

    let diff: Vec<f64> = p.w.iter().zip(&f_val).map(|(a, b)| a - b).collect();
    let m2 = eps - sup_norm(&diff);

    let mut worst_sq = 0.0f64;
    for row in 0..dims.n {
        let r: Vec<f64> = (0..dims.m)
            .map(|c| p.wmat.get(row, c) - phi.get(row, c) - phi.get(row, dims.m) * p.yrow[c])
            .collect();
        worst_sq = worst_sq.max(rank_one_inverse_quadratic(&r, &p.yrow)?);
    }
    let m3 = eps - worst_sq.sqrt();

    let clause_margins = [m1, m2, m3];
    let (idx, &margin) = clause_margins
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let worst_clause = [Clause::DeltaBound, Clause::ValueBound, Clause::DerivativeBound][idx];
    Ok(Membership {
        member: margin > 0.0,
        margin,
        clause_margins,
        worst_clause,
    })
}

/// A principal slice in affine coordinates: the set of `(a, b) ∈ ℝ × ℝⁿ`
/// with `‖u'b + ψu‖² < ε²((u')² + ‖u‖² + (au' + λu)²)` for all nonzero
/// `(u, u') ∈ ℝ^{m−1} × ℝ`.
#[derive(Debug, Clone)]
pub struct SliceSpec {
    pub lambda: Vec<f64>,
    /// `n × (m−1)`; row `j` is the component ψⱼ.
    pub psi: Matrix,
    pub eps: f64,
}

/// Closed-form data of one scalar slice component:
/// `{(a, b) | (b − m₀a)² − κ²a² < η²}`, or empty.
#[derive(Debug, Clone, Copy)]
pub struct HyperbolaParams {
    pub empty: bool,
    pub m0: f64,
    pub kappa: f64,
    pub eta: f64,
    /// The stretch invariant `K`; equals `1/(1 + ‖λ‖²)` whenever nonempty.
    pub k_value: f64,
}

impl HyperbolaParams {
    fn empty() -> Self {
        HyperbolaParams {
            empty: true,
            m0: 0.0,
            kappa: 0.0,
            eta: 0.0,
            k_value: 0.0,
        }
    }
}

/// Relative threshold below which (λ, μ) are treated as collinear and the
/// degenerate closed form is used. The two branches compute the same
/// rational functions on the nonempty set; the switch is purely about
/// floating-point conditioning near the degenerate locus.
pub const COLLINEARITY_THRESHOLD: f64 = 1e-10;

/// Closed-form slice data for one target component.
///
/// The condition is first rescaled to ε = 1 via `(a, b) ↦ (a, b/ε)`, decided
/// nonempty iff `A = Id + λ⊗λ♯ − μ⊗μ♯` is positive definite (a 2×2 test on
/// the span of λ♯ and μ♯), and the inner products `⟨·, A⁻¹·⟩` are evaluated
/// from the explicit rank-two inverse, then everything is scaled back.
///
/// ```
/// use holoapprox::relation::hyperbola_params;
///
/// // the trivial slice: Ω = {b² < ε²(1 + a²)}
/// let p = hyperbola_params(&[], &[], 0.7).unwrap();
/// assert_eq!((p.m0, p.kappa, p.eta), (0.0, 0.7, 0.7));
///
/// // K = 1/(1 + ‖λ‖²) = 1/26 for λ = (3, 4), whatever μ
/// let p = hyperbola_params(&[3.0, 4.0], &[0.3, -0.4], 1.0).unwrap();
/// assert!((p.k_value - 1.0 / 26.0).abs() < 1e-12);
///
/// // μ too large empties the slice
/// assert!(hyperbola_params(&[0.0, 0.0], &[1.1, 0.0], 1.0).unwrap().empty);
/// ```
pub fn hyperbola_params(lambda: &[f64], mu: &[f64], eps: f64) -> Result<HyperbolaParams> {
    if lambda.len() != mu.len() {
        return Err(Error::DimMismatch {
            context: "hyperbola_params",
            expected: lambda.len(),
            got: mu.len(),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let nl2 = dot(lambda, lambda);
    let mu_t: Vec<f64> = mu.iter().map(|v| v / eps).collect();
    let nm2 = dot(&mu_t, &mu_t);
    let dlm = dot(lambda, &mu_t);

    let gram_gap = nl2 * nm2 - dlm * dlm; // Cauchy-Schwarz defect, ≥ 0
    let collinear = nl2 == 0.0 || nm2 == 0.0 || gram_gap <= COLLINEARITY_THRESHOLD * nl2 * nm2;

    let (ip_ll, ip_mm, ip_lm) = if collinear {
        let det = 1.0 + nl2 - nm2;
        if det <= 0.0 {
            return Ok(HyperbolaParams::empty());
        }
        (nl2 / det, nm2 / det, dlm / det)
    } else {
        let det = (1.0 + nl2) * (1.0 - nm2) + dlm * dlm;
        let tr = 2.0 + nl2 - nm2;
        if det <= 0.0 || tr <= 0.0 {
            return Ok(HyperbolaParams::empty());
        }
        (
            ((1.0 - nm2) * nl2 + dlm * dlm) / det,
            ((1.0 + nl2) * nm2 - dlm * dlm) / det,
            dlm / det,
        )
    };

    let n2 = 1.0 + ip_mm;
    let k_value = 1.0 + ip_lm * ip_lm / n2 - ip_ll;
    Ok(HyperbolaParams {
        empty: false,
        m0: eps * ip_lm / n2,
        kappa: eps * (k_value.max(0.0) / n2).sqrt(),
        eta: eps / n2.sqrt(),
        k_value,
    })
}

impl SliceSpec {
    pub fn n(&self) -> usize {
        self.psi.rows()
    }

    /// Hyperbola data of component `j` (the row ψⱼ against λ).
    pub fn component_params(&self, j: usize) -> Result<HyperbolaParams> {
        hyperbola_params(&self.lambda, self.psi.row(j), self.eps)
    }

    pub fn all_params(&self) -> Result<Vec<HyperbolaParams>> {
        (0..self.n()).map(|j| self.component_params(j)).collect()
    }
}

/// Verdict of the closed-form slice membership test.
#[derive(Debug, Clone)]
pub struct SliceVerdict {
    pub member: bool,
    pub empty: bool,
    /// Worst per-component slack `η² − ((b−m₀a)² − κ²a²)`; membership is
    /// `slack > 0`. `−∞` when the slice is empty.
    pub slack: f64,
    /// Slack divided by `1 + a² + ‖b‖²`, for boundary-band comparisons.
    pub normalized_slack: f64,
}

/// Closed-form membership of `(a, b)` in the slice: per component
/// `(bⱼ − m₀ⱼ a)² − κⱼ² a² < ηⱼ²`.
pub fn slice_member(spec: &SliceSpec, a: f64, b: &[f64]) -> Result<SliceVerdict> {
    if b.len() != spec.n() {
        return Err(Error::DimMismatch {
            context: "slice_member",
            expected: spec.n(),
            got: b.len(),
        });
    }
    let mut slack = f64::INFINITY;
    let mut empty = false;
    for (j, bj) in b.iter().enumerate() {
        let p = spec.component_params(j)?;
        if p.empty {
            empty = true;
            slack = f64::NEG_INFINITY;
            break;
        }
        let centered = bj - p.m0 * a;
        slack = slack.min(p.eta * p.eta - (centered * centered - p.kappa * p.kappa * a * a));
    }
    let scale = 1.0 + a * a + dot(b, b);
    Ok(SliceVerdict {
        member: slack > 0.0,
        empty,
        slack,
        normalized_slack: slack / scale,
    })
}

/// Affine chart between slice coordinates `(a, b)` and the jet data of the
/// principal subspace: the direction-`j` column of `(Y, W)` is
/// `(a, c)` with `c = b + a·φ∂_y + φ(eⱼ, 0, 0)`, the other columns are fixed.
#[derive(Debug, Clone)]
pub struct Chart {
    pub dir: usize,
    pub y0: Vec<f64>,
    pub w0: Matrix,
    pub phi_y: Vec<f64>,
    pub phi_xj: Vec<f64>,
}

impl Chart {
    /// Slice coordinates → direction-j column `(a, c)`.
    pub fn column_from_slice(&self, a: f64, b: &[f64]) -> (f64, Vec<f64>) {
        let c = b
            .iter()
            .zip(self.phi_y.iter().zip(&self.phi_xj))
            .map(|(bj, (py, pxj))| bj + a * py + pxj)
            .collect();
        (a, c)
    }

    /// Direction-j column `(a, c)` → slice coordinates.
    pub fn slice_from_column(&self, a: f64, c: &[f64]) -> (f64, Vec<f64>) {
        let b = c
            .iter()
            .zip(self.phi_y.iter().zip(&self.phi_xj))
            .map(|(cj, (py, pxj))| cj - a * py - pxj)
            .collect();
        (a, b)
    }

    /// Rebuilds the full `(Y, W)` from slice coordinates.
    pub fn embed(&self, a: f64, b: &[f64]) -> (Vec<f64>, Matrix) {
        let (_, c) = self.column_from_slice(a, b);
        let m = self.y0.len() + 1;
        let n = self.w0.rows();
        let mut yrow = Vec::with_capacity(m);
        let mut wmat = Matrix::zeros(n, m);
        let mut p = 0;
        for col in 0..m {
            if col == self.dir {
                yrow.push(a);
                for row in 0..n {
                    wmat.set(row, col, c[row]);
                }
            } else {
                yrow.push(self.y0[p]);
                for row in 0..n {
                    wmat.set(row, col, self.w0.get(row, p));
                }
                p += 1;
            }
        }
        (yrow, wmat)
    }

    /// Reads the slice coordinates of a full `(Y, W)` (which must agree with
    /// the frozen columns; only the direction-j column is read).
    pub fn project(&self, yrow: &[f64], wmat: &Matrix) -> (f64, Vec<f64>) {
        let a = yrow[self.dir];
        let c = wmat.col(self.dir);
        self.slice_from_column(a, c.as_slice())
    }
}

/// Extracts the direction-`j` slice of the relation through a base jet:
/// `λ` and `ψ` of the slice plus the affine chart back to jet coordinates.
///
/// The base fixes the frozen data: the restriction `(Y₀, W₀)` to
/// `τ = eⱼ^⊥` comes from its columns ≠ j, and φ is evaluated at
/// `(x, base.y, 0)`. Everything φ-dependent is folded into ψ:
/// `ψ u = W₀u − φ(x,y,0)(u, Y₀u, 0)`.
pub fn slice_from_state(
    section: &JetSection,
    eps: f64,
    x: &[f64],
    base: &JetPoint,
    j: usize,
) -> Result<(SliceSpec, Chart)> {
    let dims = section.dims;
    if j >= dims.m {
        return Err(Error::InvalidInput(format!(
            "direction {j} out of range for m = {}",
            dims.m
        )));
    }
    let names = dims.var_names();
    let z = vec![0.0; dims.k];
    let phi = section.eval_phi(&names, x, base.y, &z)?;

    let phi_y = phi.col(dims.m);
    let phi_xj = phi.col(j);
    let y0: Vec<f64> = base
        .yrow
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != j)
        .map(|(_, v)| *v)
        .collect();
    let w0 = base.wmat.drop_col(j);

    let tau_cols: Vec<usize> = (0..dims.m).filter(|c| *c != j).collect();
    let mut psi = Matrix::zeros(dims.n, dims.m - 1);
    for row in 0..dims.n {
        for (p, &col) in tau_cols.iter().enumerate() {
            psi.set(
                row,
                p,
                w0.get(row, p) - phi.get(row, col) - y0[p] * phi_y[row],
            );
        }
    }

    Ok((
        SliceSpec {
            lambda: y0.clone(),
            psi,
            eps,
        },
        Chart {
            dir: j,
            y0,
            w0,
            phi_y,
            phi_xj,
        },
    ))
}

/// Expression-level slice center `m₀` for one component, as a closed form in
/// whatever the λ and ψ entries depend on. Uses the generic-branch rational
/// formulas, which agree with the degenerate branch wherever the slice is
/// nonempty.
pub fn hyperbola_m0_expr(lambda: &[Expr], psi_row: &[Expr], eps: f64) -> Expr {
    let mut nl2 = expr::num(0.0);
    let mut nm2 = expr::num(0.0);
    let mut dlm = expr::num(0.0);
    for (l, m) in lambda.iter().zip(psi_row) {
        let mt = expr::div(m.clone(), expr::num(eps));
        nl2 = expr::add(nl2, expr::mul(l.clone(), l.clone()));
        nm2 = expr::add(nm2, expr::mul(mt.clone(), mt.clone()));
        dlm = expr::add(dlm, expr::mul(l.clone(), mt));
    }
    let det = expr::add(
        expr::mul(
            expr::add(expr::num(1.0), nl2),
            expr::sub(expr::num(1.0), nm2.clone()),
        ),
        expr::mul(dlm.clone(), dlm.clone()),
    );
    // ip_mm = ((1+nl2)·nm2 − dlm²)/det, folded as (1 − (1−nm2)·... ) is not
    // worth it; keep the direct quotient.
    let one_plus_ipmm = expr::add(
        expr::num(1.0),
        expr::div(
            expr::sub(
                expr::mul(
                    expr::add(
                        expr::num(1.0),
                        lambda
                            .iter()
                            .fold(expr::num(0.0), |acc, l| expr::add(acc, expr::mul(l.clone(), l.clone()))),
                    ),
                    nm2,
                ),
                expr::mul(dlm.clone(), dlm.clone()),
            ),
            det.clone(),
        ),
    );
    let ip_lm = expr::div(dlm, det);
    expr::mul(expr::num(eps), expr::div(ip_lm, one_plus_ipmm))
}

/// A verified ampleness certificate for a nonempty slice: the merged inner
/// hyperbola data, a finite point set inside the slice, and the linear
/// feasibility check that the convex hull of that set contains the requested
/// ball.
#[derive(Debug, Clone)]
pub struct AmplenessCertificate {
    pub m0: Vec<f64>,
    pub kappa: f64,
    pub eta: f64,
    /// Points of the slice whose hull is certified to contain the ball.
    pub hull_points: Vec<Vec<f64>>,
    pub target: Vec<f64>,
    pub radius: f64,
    pub hull_verified: bool,
}

/// Builds an explicit hull certificate around `target = (a, b)` of sup-norm
/// radius `radius`, with points placed along the near-asymptote directions
/// `(±1, ±m₀ ± κ′ eⱼ)` of the inner hyperbolic set
/// `{‖b − a m₀‖∞² − κ²a² < η²}` (κ = minⱼ κⱼ, η = minⱼ ηⱼ).
///
/// ```
/// use holoapprox::numcore::Matrix;
/// use holoapprox::relation::{ampleness_certificate, SliceSpec};
///
/// let spec = SliceSpec { lambda: vec![], psi: Matrix::zeros(1, 0), eps: 1.0 };
/// let cert = ampleness_certificate(&spec, 0.0, &[1.0], 0.5).unwrap();
/// assert!(cert.hull_verified);
/// ```
pub fn ampleness_certificate(
    spec: &SliceSpec,
    target_a: f64,
    target_b: &[f64],
    radius: f64,
) -> Result<AmplenessCertificate> {
    let n = spec.n();
    if target_b.len() != n {
        return Err(Error::DimMismatch {
            context: "ampleness_certificate",
            expected: n,
            got: target_b.len(),
        });
    }
    let params = spec.all_params()?;
    if params.iter().any(|p| p.empty) {
        return Err(Error::EmptySlice {
            at: "ampleness_certificate".into(),
        });
    }
    let kappa = params.iter().map(|p| p.kappa).fold(f64::INFINITY, f64::min);
    let eta = params.iter().map(|p| p.eta).fold(f64::INFINITY, f64::min);
    let m0: Vec<f64> = params.iter().map(|p| p.m0).collect();

    let kp = 0.9 * kappa;
    let centered: Vec<f64> = target_b.iter().zip(&m0).map(|(b, m)| b - m * target_a).collect();
    let reach = sup_norm(&centered) + radius * (1.0 + sup_norm(&m0));
    let a_star = 1.0 + 1.1 * (target_a.abs() + radius).max(reach / kp);

    // hull vertices: two fans of box corners on the asymptote cone
    let mut hull_points = Vec::with_capacity(2 << n);
    for sign in [1.0f64, -1.0] {
        let a = sign * a_star;
        for corner in 0..(1usize << n) {
            let b: Vec<f64> = (0..n)
                .map(|jbit| {
                    let s = if corner >> jbit & 1 == 1 { 1.0 } else { -1.0 };
                    a * m0[jbit] + s * kp * a_star
                })
                .collect();
            let mut pt = vec![a];
            pt.extend(b);
            hull_points.push(pt);
        }
    }

    // every certificate point must itself lie in the slice (strictly)
    for pt in &hull_points {
        let verdict = slice_member(spec, pt[0], &pt[1..])?;
        if !verdict.member {
            return Err(Error::ContainmentViolation(format!(
                "certificate point {pt:?} escaped the slice (slack {})",
                verdict.slack
            )));
        }
    }

    // hull ⊇ sup-norm ball(target, radius) iff it contains the ball corners
    let mut hull_verified = true;
    for corner in 0..(1usize << (n + 1)) {
        let mut q = Vec::with_capacity(n + 1);
        let sa = if corner & 1 == 1 { 1.0 } else { -1.0 };
        q.push(target_a + sa * radius);
        for jbit in 0..n {
            let s = if corner >> (jbit + 1) & 1 == 1 { 1.0 } else { -1.0 };
            q.push(target_b[jbit] + s * radius);
        }
        if !point_in_hull(&hull_points, &q) {
            hull_verified = false;
            break;
        }
    }

    Ok(AmplenessCertificate {
        m0,
        kappa,
        eta,
        hull_points,
        target: {
            let mut t = vec![target_a];
            t.extend_from_slice(target_b);
            t
        },
        radius,
        hull_verified,
    })
}

/// Evaluates a jet point from closed forms: value and exact derivative of a
/// pair (δ, h) at `x`.
pub fn jet_point_of_pair(
    pair: &crate::jetmodel::HolonomicPair,
    x: &[f64],
) -> Result<JetPoint> {
    let (y, grad, w, jac) = pair.jet(x)?;
    Ok(JetPoint {
        x: x.to_vec(),
        y,
        w,
        yrow: grad,
        wmat: jac,
    })
}

/// Worst membership margin of the actual jet of a pair over a set of grid
/// points. Returns the margin, the worst point and the clause attaining it.
pub fn pair_margins(
    section: &JetSection,
    eps: f64,
    pair: &crate::jetmodel::HolonomicPair,
    points: impl Iterator<Item = Vec<f64>>,
) -> Result<(f64, Vec<f64>, Clause)> {
    let mut worst = f64::INFINITY;
    let mut worst_point = vec![];
    let mut worst_clause = Clause::DeltaBound;
    for x in points {
        let p = jet_point_of_pair(pair, &x)?;
        let v = membership(section, eps, &p)?;
        if v.margin < worst {
            worst = v.margin;
            worst_point = x;
            worst_clause = v.worst_clause;
        }
    }
    Ok((worst, worst_point, worst_clause))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jetmodel::{Dims, FormalSolutionState};
    use std::f64::consts::{PI, TAU};

    fn mountain_section() -> JetSection {
        JetSection::from_sources(Dims::new(1, 0, 1).unwrap(), &["x1"], &[vec!["0", "0"]], 0.1)
            .unwrap()
    }

    fn formal_jet(state: &FormalSolutionState, x: &[f64]) -> JetPoint {
        let (y, w) = state.value_at(x).unwrap();
        let (yrow, wmat) = state.deriv_at(x).unwrap();
        JetPoint {
            x: x.to_vec(),
            y,
            w,
            yrow,
            wmat,
        }
    }

    #[test]
    fn canonical_formal_solution_is_a_member_with_zero_residual() {
        let s = mountain_section();
        let state = FormalSolutionState::canonical(&s);
        for eps in [1.0, 0.25, 1e-6] {
            for x in [0.0, 0.31, 1.0] {
                let v = membership(&s, eps, &formal_jet(&state, &[x])).unwrap();
                assert!(v.member, "eps {eps}, x {x}");
                // zeroth and first order residuals vanish identically
                assert!((v.clause_margins[1] - eps).abs() < 1e-15);
                assert!((v.clause_margins[2] - eps).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn canonical_member_for_general_section() {
        let d = Dims::new(2, 1, 2).unwrap();
        let s = JetSection::from_sources(
            d,
            &["sin(x1)*x2", "x1"],
            &[
                vec!["y + 1", "x1", "x2", "z1"],
                vec!["cos(x2)", "0", "1", "x1*z1"],
            ],
            0.1,
        )
        .unwrap();
        let state = FormalSolutionState::canonical(&s);
        for x in [[0.0, 0.0], [0.5, 0.7], [1.0, 0.2]] {
            let v = membership(&s, 1e-9, &formal_jet(&state, &x)).unwrap();
            assert!(v.member, "x {x:?}, margin {}", v.margin);
        }
    }

    #[test]
    fn mountain_closed_forms_are_members_at_unit_eps() {
        let s = mountain_section();
        let (eps, n) = (1.0, 6.0);
        for i in 0..=128 {
            let x = i as f64 / 128.0;
            let delta = 2.0 * (1.0 - (TAU * n * x).cos()) / (eps * PI * n);
            let h = x - (2.0 * TAU * n * x).sin() / (4.0 * PI * n);
            let dd = 4.0 * (TAU * n * x).sin() / eps;
            let dh = 1.0 - (2.0 * TAU * n * x).cos();
            let p = JetPoint {
                x: vec![x],
                y: delta,
                w: vec![h],
                yrow: vec![dd],
                wmat: Matrix::from_rows(vec![vec![dh]]).unwrap(),
            };
            let v = membership(&s, eps, &p).unwrap();
            assert!(v.member, "x {x}: margins {:?}", v.clause_margins);
        }
    }

    #[test]
    fn flat_guess_violates_the_derivative_clause() {
        let s = mountain_section();
        let p = JetPoint {
            x: vec![0.5],
            y: 0.0,
            w: vec![0.5],
            yrow: vec![0.0],
            wmat: Matrix::from_rows(vec![vec![1.0]]).unwrap(),
        };
        let v = membership(&s, 0.5, &p).unwrap();
        assert!(!v.member);
        assert_eq!(v.worst_clause, Clause::DerivativeBound);
        assert!((v.clause_margins[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn hyperbola_trivial_slice() {
        let p = hyperbola_params(&[], &[], 0.7).unwrap();
        assert!(!p.empty);
        assert_eq!(p.m0, 0.0);
        assert!((p.kappa - 0.7).abs() < 1e-15);
        assert!((p.eta - 0.7).abs() < 1e-15);
        assert!((p.k_value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn k_identity_for_fixed_lambda() {
        // K = 1/(1+‖λ‖²) = 1/26 for λ = (3,4), any admissible μ
        for mu in [[0.1, 0.0], [0.0, 0.5], [0.3, -0.4], [2.0, 1.5]] {
            let p = hyperbola_params(&[3.0, 4.0], &mu, 1.0).unwrap();
            assert!(!p.empty, "mu {mu:?}");
            assert!((p.k_value - 1.0 / 26.0).abs() < 1e-12, "mu {mu:?}: {}", p.k_value);
        }
    }

    #[test]
    fn too_large_mu_empties_the_slice() {
        let p = hyperbola_params(&[0.0, 0.0], &[1.1, 0.0], 1.0).unwrap();
        assert!(p.empty);
        // direct evaluation of the defining inequality at u = μ♯ fails:
        // (μ·μ♯)² = 1.1⁴ ≥ ‖μ♯‖² + 0 = 1.1²
        assert!(1.1f64.powi(4) >= 1.1f64.powi(2));
    }

    #[test]
    fn branch_agreement_near_the_collinearity_threshold() {
        // μ nearly parallel to λ: both closed forms must agree to 1e-6
        let lambda = [1.0, 2.0];
        for tilt in [1e-3, 1e-5, 1e-7] {
            let mu = [0.4 + tilt, 0.8];
            let generic = {
                let nl2 = dot(&lambda, &lambda);
                let nm2 = dot(&mu, &mu);
                let dlm = dot(&lambda, &mu);
                let det = (1.0 + nl2) * (1.0 - nm2) + dlm * dlm;
                let ip_mm = ((1.0 + nl2) * nm2 - dlm * dlm) / det;
                let ip_lm = dlm / det;
                let n2 = 1.0 + ip_mm;
                (ip_lm / n2, 1.0 / n2.sqrt())
            };
            let collinear = {
                let nl2 = dot(&lambda, &lambda);
                let nm2 = dot(&mu, &mu);
                let dlm = dot(&lambda, &mu);
                let det = 1.0 + nl2 - nm2;
                let ip_mm = nm2 / det;
                let ip_lm = dlm / det;
                let n2 = 1.0 + ip_mm;
                (ip_lm / n2, 1.0 / n2.sqrt())
            };
            assert!(
                (generic.0 - collinear.0).abs() < 1e-5 * (1.0 + tilt / 1e-7),
                "tilt {tilt}: m0 {} vs {}",
                generic.0,
                collinear.0
            );
            let p = hyperbola_params(&lambda, &mu, 1.0).unwrap();
            assert!(!p.empty);
            assert!((p.k_value - 1.0 / 6.0).abs() < 1e-10, "tilt {tilt}");
        }
    }

    #[test]
    fn slice_membership_basics() {
        let spec = SliceSpec {
            lambda: vec![],
            psi: Matrix::zeros(1, 0),
            eps: 1.0,
        };
        // Ω = {b² < 1 + a²}
        assert!(slice_member(&spec, 0.0, &[0.0]).unwrap().member);
        assert!(!slice_member(&spec, 0.0, &[1.0]).unwrap().member); // boundary is excluded
        assert!(slice_member(&spec, 1.0, &[1.0]).unwrap().member); // 1 < 2
        assert!(!slice_member(&spec, 1.0, &[1.5]).unwrap().member);
    }

    #[test]
    fn origin_in_every_nonempty_slice_and_star_shaped() {
        let spec = SliceSpec {
            lambda: vec![0.5, -1.0],
            psi: Matrix::from_rows(vec![vec![0.3, 0.2], vec![-0.1, 0.4]]).unwrap(),
            eps: 0.8,
        };
        assert!(slice_member(&spec, 0.0, &[0.0, 0.0]).unwrap().member);
        let member = (1.3, [0.4, -0.2]);
        assert!(slice_member(&spec, member.0, &member.1).unwrap().member);
        for t in [0.01, 0.3, 0.99, 1.0] {
            let b: Vec<f64> = member.1.iter().map(|v| v * t).collect();
            assert!(slice_member(&spec, t * member.0, &b).unwrap().member, "t {t}");
        }
    }

    #[test]
    fn chart_roundtrip_is_exact() {
        let d = Dims::new(3, 1, 2).unwrap();
        let s = JetSection::from_sources(
            d,
            &["x1*x2", "x3"],
            &[
                vec!["y", "x1", "1", "z1", "x2"],
                vec!["0", "sin(x1)", "x3", "2", "1"],
            ],
            0.1,
        )
        .unwrap();
        let base = JetPoint {
            x: vec![0.2, 0.4, 0.6],
            y: 0.05,
            w: vec![0.1, 0.2],
            yrow: vec![0.3, -0.1, 0.7],
            wmat: Matrix::from_rows(vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap(),
        };
        for j in 0..3 {
            let (_, chart) = slice_from_state(&s, 0.5, &base.x.clone(), &base, j).unwrap();
            let (a, b) = (0.37, vec![-0.9, 1.8]);
            let (yrow, wmat) = chart.embed(a, &b);
            let (a2, b2) = chart.project(&yrow, &wmat);
            assert!((a - a2).abs() < 1e-12);
            for (u, v) in b.iter().zip(&b2) {
                assert!((u - v).abs() < 1e-12);
            }
            // frozen columns untouched
            for col in 0..3 {
                if col != j {
                    assert_eq!(yrow[col], base.yrow[col]);
                }
            }
        }
    }

    #[test]
    fn m1_slice_has_empty_lambda_and_offset_chart() {
        let d = Dims::new(1, 0, 1).unwrap();
        let s = JetSection::from_sources(d, &["x1"], &[vec!["x1", "2"]], 0.1).unwrap();
        let base = JetPoint {
            x: vec![0.5],
            y: 0.0,
            w: vec![0.5],
            yrow: vec![0.0],
            wmat: Matrix::from_rows(vec![vec![0.0]]).unwrap(),
        };
        let (spec, chart) = slice_from_state(&s, 1.0, &[0.5], &base, 0).unwrap();
        assert!(spec.lambda.is_empty());
        assert_eq!(spec.psi.cols(), 0);
        // chart sends (a, b) to (Y, W) = (a, b + a·φ∂_y + φ(e₁))
        let (a, c) = chart.column_from_slice(0.25, &[1.0]);
        assert_eq!(a, 0.25);
        assert!((c[0] - (1.0 + 0.25 * 2.0 + 0.5)).abs() < 1e-15);
        let (_, b) = chart.slice_from_column(a, &c);
        assert!((b[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn m0_expr_matches_numeric_params() {
        let lambda_e = vec![expr::parse("x1").unwrap(), expr::num(0.4)];
        let psi_e = vec![expr::parse("0.3*x1").unwrap(), expr::num(-0.2)];
        let eps = 0.7;
        let m0e = hyperbola_m0_expr(&lambda_e, &psi_e, eps);
        for x in [0.0, 0.33, -0.8, 1.0] {
            let lambda = [x, 0.4];
            let psi = [0.3 * x, -0.2];
            let p = hyperbola_params(&lambda, &psi, eps).unwrap();
            assert!(!p.empty);
            let v = expr::eval_f64(&m0e, &[("x1", x)]).unwrap();
            assert!((v - p.m0).abs() < 1e-12, "x {x}: {v} vs {}", p.m0);
        }
    }

    #[test]
    fn ampleness_certificate_reaches_far_targets() {
        // the mountain slice: hull of Ω must contain any ball
        let spec = SliceSpec {
            lambda: vec![],
            psi: Matrix::zeros(1, 0),
            eps: 1.0,
        };
        for (a, b, r) in [(0.0, 1.0, 0.5), (3.0, -8.0, 2.0), (0.0, 0.0, 10.0)] {
            let cert = ampleness_certificate(&spec, a, &[b], r).unwrap();
            assert!(cert.hull_verified, "target ({a}, {b}), r {r}");
        }
        // empty slice refuses
        let empty_spec = SliceSpec {
            lambda: vec![0.0],
            psi: Matrix::from_rows(vec![vec![2.0]]).unwrap(),
            eps: 1.0,
        };
        assert!(matches!(
            ampleness_certificate(&empty_spec, 0.0, &[0.0], 1.0),
            Err(Error::EmptySlice { .. })
        ));
    }

    #[test]
    fn ampleness_certificate_two_targets() {
        let spec = SliceSpec {
            lambda: vec![1.0, -0.5],
            psi: Matrix::from_rows(vec![vec![0.2, 0.1], vec![0.0, -0.3]]).unwrap(),
            eps: 0.9,
        };
        let cert = ampleness_certificate(&spec, -1.5, &[2.0, 4.0], 1.0).unwrap();
        assert!(cert.hull_verified);
        assert!(cert.kappa > 0.0 && cert.eta > 0.0);
        assert_eq!(cert.hull_points.len(), 8);
    }
}
