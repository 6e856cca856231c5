//! Geometric data model: the cube `A = [0,1]^m × {0} × {0} ⊂ ℝᵐ×ℝ×ℝᵏ`, its
//! graph deformations, jet sections over a neighborhood of `A`, formal
//! solutions of the approximation relation, and evaluation grids.
//!
//! Source coordinates are named `x1..xm, y, z1..zk`; the target is `ℝⁿ` with
//! the sup norm, the source carries the Euclidean norm.

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::numcore::Matrix;
use std::collections::BTreeSet;

/// Hard cap on each dimension; the closed forms here are meant for desk
/// scale, not bulk linear algebra.
pub const MAX_DIM: usize = 8;

/// Problem dimensions: `m` cube directions, one distinguished normal
/// direction `y`, `k` extra normal directions, target dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub m: usize,
    pub k: usize,
    pub n: usize,
}

impl Dims {
    pub fn new(m: usize, k: usize, n: usize) -> Result<Dims> {
        if m < 1 || m > MAX_DIM || n < 1 || n > MAX_DIM || k > MAX_DIM {
            return Err(Error::InvalidInput(format!(
                "dimensions out of range: m={m}, k={k}, n={n} (1 ≤ m,n ≤ {MAX_DIM}, 0 ≤ k ≤ {MAX_DIM})"
            )));
        }
        Ok(Dims { m, k, n })
    }

    /// Total source dimension `m + 1 + k`.
    pub fn source(&self) -> usize {
        self.m + 1 + self.k
    }

    /// Source variable names in evaluation order: `x1..xm, y, z1..zk`.
    pub fn var_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.m).map(|i| format!("x{i}")).collect();
        names.push("y".to_string());
        names.extend((1..=self.k).map(|i| format!("z{i}")));
        names
    }

    pub fn x_names(&self) -> Vec<String> {
        (1..=self.m).map(|i| format!("x{i}")).collect()
    }
}

/// Builds an owned binding list from names and values.
pub fn bindings<'a>(names: &'a [String], values: &[f64]) -> Vec<(&'a str, f64)> {
    names
        .iter()
        .map(|s| s.as_str())
        .zip(values.iter().copied())
        .collect()
}

/// The input section σ = (f, φ) of `J¹(ℝᵐ×ℝ×ℝᵏ, ℝⁿ)` over a neighborhood of
/// `A`: `n` expressions for `f` and an `n × (m+1+k)` expression matrix for φ,
/// plus the half-width of the neighborhood the expressions must cover.
#[derive(Debug, Clone)]
pub struct JetSection {
    pub dims: Dims,
    pub f: Vec<Expr>,
    pub phi: Vec<Vec<Expr>>,
    pub margin: f64,
}

impl JetSection {
    pub fn new(dims: Dims, f: Vec<Expr>, phi: Vec<Vec<Expr>>, margin: f64) -> Result<JetSection> {
        if f.len() != dims.n {
            return Err(Error::DimMismatch {
                context: "JetSection f components",
                expected: dims.n,
                got: f.len(),
            });
        }
        if phi.len() != dims.n {
            return Err(Error::DimMismatch {
                context: "JetSection phi rows",
                expected: dims.n,
                got: phi.len(),
            });
        }
        for row in &phi {
            if row.len() != dims.source() {
                return Err(Error::DimMismatch {
                    context: "JetSection phi columns",
                    expected: dims.source(),
                    got: row.len(),
                });
            }
        }
        if !(margin > 0.0) {
            return Err(Error::InvalidInput(format!("margin must be positive, got {margin}")));
        }
        let allowed: BTreeSet<String> = dims.var_names().into_iter().collect();
        let check = |e: &Expr| -> Result<()> {
            for v in e.free_vars() {
                if !allowed.contains(&v) {
                    return Err(Error::UnboundVariable { name: v });
                }
            }
            Ok(())
        };
        for e in &f {
            check(e)?;
        }
        for row in &phi {
            for e in row {
                check(e)?;
            }
        }
        Ok(JetSection { dims, f, phi, margin })
    }

    /// Parses `f` and `phi` from source strings.
    pub fn from_sources(dims: Dims, f: &[&str], phi: &[Vec<&str>], margin: f64) -> Result<JetSection> {
        let f = f.iter().map(|s| expr::parse(s)).collect::<Result<Vec<_>>>()?;
        let phi = phi
            .iter()
            .map(|row| row.iter().map(|s| expr::parse(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        JetSection::new(dims, f, phi, margin)
    }

    fn full_bindings<'a>(&self, names: &'a [String], x: &[f64], y: f64, z: &[f64]) -> Vec<(&'a str, f64)> {
        let mut vals = Vec::with_capacity(self.dims.source());
        vals.extend_from_slice(x);
        vals.push(y);
        vals.extend_from_slice(z);
        bindings(names, &vals)
    }

    /// `f(x, y, z)` as a vector in ℝⁿ.
    pub fn eval_f(&self, names: &[String], x: &[f64], y: f64, z: &[f64]) -> Result<Vec<f64>> {
        let vars = self.full_bindings(names, x, y, z);
        self.f.iter().map(|e| expr::eval_f64(e, &vars)).collect()
    }

    /// `φ(x, y, z)` as an `n × (m+1+k)` matrix.
    pub fn eval_phi(&self, names: &[String], x: &[f64], y: f64, z: &[f64]) -> Result<Matrix> {
        let vars = self.full_bindings(names, x, y, z);
        let rows = self
            .phi
            .iter()
            .map(|row| row.iter().map(|e| expr::eval_f64(e, &vars)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_rows(rows)
    }

    /// Substitutes `y ↦ y_expr, z ↦ 0` into a φ entry, leaving a closed form
    /// in `x` alone.
    pub fn phi_entry_on_graph(&self, row: usize, col: usize, y_expr: &Expr) -> Expr {
        let zero = expr::num(0.0);
        let mut map: Vec<(String, &Expr)> = vec![("y".to_string(), y_expr)];
        for i in 1..=self.dims.k {
            map.push((format!("z{i}"), &zero));
        }
        let map_ref: Vec<(&str, &Expr)> = map.iter().map(|(s, e)| (s.as_str(), *e)).collect();
        self.phi[row][col].substitute(&map_ref)
    }
}

/// The deformed cube `A_δ = {(x, δ(x), 0)}`, the graph of δ over `[0,1]^m`.
#[derive(Debug, Clone)]
pub struct DeformedCube {
    pub dims: Dims,
    pub delta: Expr,
}

impl DeformedCube {
    pub fn new(dims: Dims, delta: Expr) -> DeformedCube {
        DeformedCube { dims, delta }
    }

    /// The point `(x, δ(x), 0)` in source coordinates.
    pub fn point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let names = self.dims.x_names();
        let vars = bindings(&names, x);
        let y = expr::eval_f64(&self.delta, &vars)?;
        let mut p = x.to_vec();
        p.push(y);
        p.extend(std::iter::repeat(0.0).take(self.dims.k));
        Ok(p)
    }

    /// Basis of the tangent space `Γ_{dδ(x)} × {0}`: the m vectors
    /// `(eᵢ, ∂ᵢδ(x), 0)`.
    pub fn tangent_basis(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        let names = self.dims.x_names();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let vars = bindings(&names, x);
        let d = expr::eval_dual(&self.delta, &vars, &name_refs)?;
        let src = self.dims.source();
        Ok((0..self.dims.m)
            .map(|i| {
                let mut v = vec![0.0; src];
                v[i] = 1.0;
                v[self.dims.m] = d.partial(i);
                v
            })
            .collect())
    }
}

/// A pair (δ, h) of closed forms over a neighborhood of `[0,1]^m`, the
/// candidate solution of the approximation relation. Gradients come from
/// dual-number evaluation of the defining expressions, so they are exact.
#[derive(Debug, Clone)]
pub struct HolonomicPair {
    pub dims: Dims,
    pub delta: Expr,
    pub h: Vec<Expr>,
}

impl HolonomicPair {
    pub fn new(dims: Dims, delta: Expr, h: Vec<Expr>) -> Result<HolonomicPair> {
        if h.len() != dims.n {
            return Err(Error::DimMismatch {
                context: "HolonomicPair h components",
                expected: dims.n,
                got: h.len(),
            });
        }
        Ok(HolonomicPair { dims, delta, h })
    }

    /// Values and exact first derivatives at `x`:
    /// `(δ, ∇δ, h, dh)` with `dh` as an `n × m` matrix.
    pub fn jet(&self, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>, Matrix)> {
        let names = self.dims.x_names();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let vars = bindings(&names, x);
        let d = expr::eval_dual(&self.delta, &vars, &name_refs)?;
        let grad = (0..self.dims.m).map(|i| d.partial(i)).collect();
        let mut h_vals = Vec::with_capacity(self.dims.n);
        let mut rows = Vec::with_capacity(self.dims.n);
        for e in &self.h {
            let hd = expr::eval_dual(e, &vars, &name_refs)?;
            h_vals.push(hd.re);
            rows.push((0..self.dims.m).map(|i| hd.partial(i)).collect());
        }
        Ok((d.re, grad, h_vals, Matrix::from_rows(rows)?))
    }
}

/// Formal solution state of the iterated corrugation: a current value map
/// `x ↦ (y-part, w-part)`, a formal derivative matrix field, and the set of
/// directions already made holonomic. For a corrugated direction the formal
/// derivative column agrees with the actual partial derivative up to the
/// pipeline tolerance; this is re-verified, never assumed.
#[derive(Debug, Clone)]
pub struct FormalSolutionState {
    pub dims: Dims,
    pub value_y: Expr,
    pub value_w: Vec<Expr>,
    /// `(1+n) × m` expression matrix; row 0 is the Y-row.
    pub deriv: Vec<Vec<Expr>>,
    pub holonomic: BTreeSet<usize>,
}

impl FormalSolutionState {
    /// The canonical formal solution `x ↦ ((0, f(x,0,0)), (0, φ(x,0,0)∘ι))`
    /// with `ι(u) = (u, 0, 0)`.
    ///
    /// ```
    /// use holoapprox::jetmodel::{Dims, FormalSolutionState, JetSection};
    ///
    /// let sigma = JetSection::from_sources(
    ///     Dims::new(1, 0, 1).unwrap(),
    ///     &["x1"],
    ///     &[vec!["0", "0"]],
    ///     0.1,
    /// ).unwrap();
    /// let state = FormalSolutionState::canonical(&sigma);
    ///
    /// // value x ↦ (0, f(x,0,0)) = (0, x)
    /// let (y, w) = state.value_at(&[0.3]).unwrap();
    /// assert_eq!((y, w[0]), (0.0, 0.3));
    ///
    /// // formal derivative x ↦ (0, φ(x,0,0)∘ι) = the zero column here
    /// let (yrow, wmat) = state.deriv_at(&[0.3]).unwrap();
    /// assert_eq!((yrow[0], wmat.get(0, 0)), (0.0, 0.0));
    /// assert!(state.holonomic.is_empty());
    /// ```
    pub fn canonical(section: &JetSection) -> FormalSolutionState {
        let dims = section.dims;
        let zero = expr::num(0.0);
        let mut map: Vec<(String, &Expr)> = vec![("y".to_string(), &zero)];
        for i in 1..=dims.k {
            map.push((format!("z{i}"), &zero));
        }
        let map_ref: Vec<(&str, &Expr)> = map.iter().map(|(s, e)| (s.as_str(), *e)).collect();

        let value_w: Vec<Expr> = section.f.iter().map(|e| e.substitute(&map_ref)).collect();
        let mut deriv = vec![vec![expr::num(0.0); dims.m]];
        for row in 0..dims.n {
            deriv.push(
                (0..dims.m)
                    .map(|j| section.phi[row][j].substitute(&map_ref))
                    .collect(),
            );
        }
        FormalSolutionState {
            dims,
            value_y: expr::num(0.0),
            value_w,
            deriv,
            holonomic: BTreeSet::new(),
        }
    }

    /// Symbolic partial of the value map in direction `j` (0-based):
    /// `(∂ⱼ value_y, ∂ⱼ value_w)`.
    pub fn value_partial(&self, j: usize) -> Result<(Expr, Vec<Expr>)> {
        let name = format!("x{}", j + 1);
        let dy = self.value_y.partial(&name)?;
        let dw = self
            .value_w
            .iter()
            .map(|e| e.partial(&name))
            .collect::<Result<Vec<_>>>()?;
        Ok((dy, dw))
    }

    /// Value `(y, w)` at `x`.
    pub fn value_at(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let names = self.dims.x_names();
        let vars = bindings(&names, x);
        let y = expr::eval_f64(&self.value_y, &vars)?;
        let w = self
            .value_w
            .iter()
            .map(|e| expr::eval_f64(e, &vars))
            .collect::<Result<Vec<_>>>()?;
        Ok((y, w))
    }

    /// Formal derivative `(Y-row, W-matrix)` at `x`.
    pub fn deriv_at(&self, x: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        let names = self.dims.x_names();
        let vars = bindings(&names, x);
        let yrow = self.deriv[0]
            .iter()
            .map(|e| expr::eval_f64(e, &vars))
            .collect::<Result<Vec<_>>>()?;
        let rows = self.deriv[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| expr::eval_f64(e, &vars))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((yrow, Matrix::from_rows(rows)?))
    }

    /// Actual derivative of the value map at `x`, via dual numbers:
    /// `(∇value_y, Jacobian of value_w)`.
    pub fn actual_deriv_at(&self, x: &[f64]) -> Result<(Vec<f64>, Matrix)> {
        let names = self.dims.x_names();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let vars = bindings(&names, x);
        let dy = expr::eval_dual(&self.value_y, &vars, &name_refs)?;
        let yrow = (0..self.dims.m).map(|i| dy.partial(i)).collect();
        let rows = self
            .value_w
            .iter()
            .map(|e| {
                let d = expr::eval_dual(e, &vars, &name_refs)?;
                Ok((0..self.dims.m).map(|i| d.partial(i)).collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((yrow, Matrix::from_rows(rows)?))
    }
}

/// A rectangular evaluation grid, uniform per axis with inclusive endpoints.
#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
}

impl Grid {
    pub fn uniform(bounds: &[(f64, f64)], res: &[usize]) -> Result<Grid> {
        if bounds.len() != res.len() {
            return Err(Error::DimMismatch {
                context: "Grid::uniform",
                expected: bounds.len(),
                got: res.len(),
            });
        }
        let axes = bounds
            .iter()
            .zip(res)
            .map(|(&(lo, hi), &r)| {
                if !(hi > lo) || r == 0 {
                    return Err(Error::InvalidInput(format!(
                        "bad grid axis: [{lo}, {hi}] at resolution {r}"
                    )));
                }
                Ok((0..=r)
                    .map(|i| lo + (hi - lo) * i as f64 / r as f64)
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Grid { axes })
    }

    /// Grid over `[-margin, 1+margin]^m`.
    pub fn thickened_cube(m: usize, margin: f64, res: usize) -> Result<Grid> {
        Grid::uniform(&vec![(-margin, 1.0 + margin); m], &vec![res; m])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest spacing over all axes.
    pub fn max_spacing(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| {
                a.windows(2)
                    .map(|w| w[1] - w[0])
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max)
    }

    pub fn point(&self, mut index: usize) -> Vec<f64> {
        let mut coords = vec![0.0; self.axes.len()];
        for (i, axis) in self.axes.iter().enumerate().rev() {
            coords[i] = axis[index % axis.len()];
            index /= axis.len();
        }
        coords
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Neighbor pairs along each axis, used for numerical Lipschitz bounds.
    pub fn axis_neighbors(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let strides: Vec<usize> = {
            let mut s = vec![1usize; self.axes.len()];
            for i in (0..self.axes.len().saturating_sub(1)).rev() {
                s[i] = s[i + 1] * self.axes[i + 1].len();
            }
            s
        };
        let total = self.len();
        (0..total).flat_map(move |idx| {
            let strides = strides.clone();
            (0..self.axes.len()).filter_map(move |axis| {
                let pos = (idx / strides[axis]) % self.axes[axis].len();
                (pos + 1 < self.axes[axis].len()).then_some((idx, idx + strides[axis]))
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn mountain_section() -> JetSection {
        JetSection::from_sources(
            Dims::new(1, 0, 1).unwrap(),
            &["x1"],
            &[vec!["0", "0"]],
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn var_names_layout() {
        let d = Dims::new(2, 1, 1).unwrap();
        assert_eq!(d.var_names(), vec!["x1", "x2", "y", "z1"]);
        assert_eq!(d.source(), 4);
        assert!(Dims::new(0, 0, 1).is_err());
        assert!(Dims::new(9, 0, 1).is_err());
    }

    #[test]
    fn section_validates_shapes_and_vars() {
        let d = Dims::new(1, 0, 1).unwrap();
        assert!(JetSection::from_sources(d, &["x1"], &[vec!["0"]], 0.1).is_err());
        assert!(JetSection::from_sources(d, &["x3"], &[vec!["0", "0"]], 0.1).is_err());
        assert!(JetSection::from_sources(d, &["x1"], &[vec!["0", "0"]], 0.0).is_err());
    }

    #[test]
    fn canonical_formal_solution_mountain() {
        let s = mountain_section();
        let state = FormalSolutionState::canonical(&s);
        // value x ↦ (0, x), formal derivative x ↦ column (0, 0)
        let (y, w) = state.value_at(&[0.3]).unwrap();
        assert_eq!(y, 0.0);
        assert_eq!(w, vec![0.3]);
        let (yrow, wmat) = state.deriv_at(&[0.3]).unwrap();
        assert_eq!(yrow, vec![0.0]);
        assert_eq!(wmat.get(0, 0), 0.0);
        assert!(state.holonomic.is_empty());
    }

    #[test]
    fn canonical_value_at_origin_is_f() {
        let d = Dims::new(2, 1, 2).unwrap();
        let s = JetSection::from_sources(
            d,
            &["x1 + x2", "sin(x1)"],
            &[
                vec!["1", "1", "0", "0"],
                vec!["cos(x1)", "0", "0", "0"],
            ],
            0.1,
        )
        .unwrap();
        let state = FormalSolutionState::canonical(&s);
        let (y, w) = state.value_at(&[0.0, 0.0]).unwrap();
        assert_eq!(y, 0.0);
        assert_eq!(w, vec![0.0, 0.0]);
        // φ = const identity-ish block: formal derivative picks the x-block
        let (yrow, wmat) = state.deriv_at(&[0.5, 0.25]).unwrap();
        assert_eq!(yrow, vec![0.0, 0.0]);
        assert_eq!(wmat.get(0, 0), 1.0);
        assert_eq!(wmat.get(0, 1), 1.0);
        assert!((wmat.get(1, 0) - 0.5f64.cos()).abs() < 1e-15);
        assert_eq!(wmat.get(1, 1), 0.0);
    }

    #[test]
    fn tangent_basis_cases() {
        let d = Dims::new(1, 0, 1).unwrap();
        // flat cube
        let flat = DeformedCube::new(d, parse("0").unwrap());
        assert_eq!(flat.tangent_basis(&[0.5]).unwrap(), vec![vec![1.0, 0.0]]);
        // graph of slope 1
        let slope = DeformedCube::new(d, parse("x1").unwrap());
        assert_eq!(slope.tangent_basis(&[0.5]).unwrap(), vec![vec![1.0, 1.0]]);
        // mountain δ: δ'(x) = 4 sin(2πN x)/ε
        let (n, eps) = (6.0, 1.0);
        let delta = parse("2*(1 - cos(2*pi*6*x1)) / (1*pi*6)").unwrap();
        let cube = DeformedCube::new(d, delta);
        let x = 0.123;
        let basis = cube.tangent_basis(&[x]).unwrap();
        let expect = 4.0 * (std::f64::consts::TAU * n * x).sin() / eps;
        assert!((basis[0][1] - expect).abs() < 1e-12);
    }

    #[test]
    fn tangent_basis_kills_z_and_is_independent() {
        let d = Dims::new(2, 2, 1).unwrap();
        let cube = DeformedCube::new(d, parse("x1*x2").unwrap());
        let basis = cube.tangent_basis(&[0.3, 0.7]).unwrap();
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert_eq!(v.len(), 5);
            assert_eq!(&v[3..], &[0.0, 0.0]);
        }
        // e₁/e₂ components make independence immediate
        assert_eq!(basis[0][0], 1.0);
        assert_eq!(basis[0][1], 0.0);
        assert_eq!(basis[1][1], 1.0);
    }

    #[test]
    fn grid_iteration_and_spacing() {
        let g = Grid::uniform(&[(0.0, 1.0), (0.0, 2.0)], &[2, 4]).unwrap();
        assert_eq!(g.len(), 15);
        let pts: Vec<_> = g.points().collect();
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[1], vec![0.0, 0.5]);
        assert_eq!(pts[14], vec![1.0, 2.0]);
        assert!((g.max_spacing() - 0.5).abs() < 1e-15);
        let neighbor_count = g.axis_neighbors().count();
        // 2 axes: 3·4 vertical + 2·5 horizontal pairs
        assert_eq!(neighbor_count, 3 * 4 + 2 * 5);
    }
}
