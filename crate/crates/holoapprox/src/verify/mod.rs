//! Certification harness: grid sup-norm checks of the approximation problem
//! definition with Lipschitz inflation, machine-readable certificates, and
//! the sampling oracle suite cross-checking every closed form.
//!
//! Strict inequalities on compact sets cannot be certified by grids alone:
//! the harness reports the worst margin `ε − attained`, a numerical
//! Lipschitz bound `L` of each margin function, and only passes when
//! `worst margin > L·s·√d` for grid spacing `s` in ambient dimension `d`,
//! so margins stay positive between grid points.

mod certificate;
mod oracles;

pub use certificate::Certificate;
pub use oracles::{oracle_suite, sampled_restricted_norm_sq, sampled_slice_excess, OracleReport};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{self, Expr};
use crate::extension::ExtendedSolution;
use crate::jetmodel::{bindings, Grid, JetSection};
use crate::numcore::{euclid_norm, sup_norm};

/// Grid specification for [`certify_solution`].
#[derive(Debug, Clone, Copy)]
pub struct CertifyGrid {
    /// Resolution per cube axis.
    pub x_res: usize,
    /// Resolution per normal fiber axis.
    pub fiber_res: usize,
    /// Half-width of the verified tube around the deformed cube.
    pub tube_radius: f64,
}

impl Default for CertifyGrid {
    fn default() -> Self {
        CertifyGrid {
            x_res: 512,
            fiber_res: 8,
            tube_radius: 0.05,
        }
    }
}

struct MarginSweep {
    worst: f64,
    worst_point: Vec<f64>,
    lipschitz: f64,
    max_step: f64,
}

/// One margin function sampled on a grid: worst value, Lipschitz estimate
/// and the largest neighbor distance. Distances live in the grid parameter
/// space (the space the inflation rule speaks about); `report_points` only
/// localizes the worst margin, e.g. in embedded tube coordinates.
fn sweep(
    param_points: &[Vec<f64>],
    report_points: &[Vec<f64>],
    margins: &[f64],
    neighbors: impl Iterator<Item = (usize, usize)>,
) -> MarginSweep {
    let mut worst = f64::INFINITY;
    let mut worst_point = vec![];
    for (p, &m) in report_points.iter().zip(margins) {
        if m < worst {
            worst = m;
            worst_point = p.clone();
        }
    }
    let mut lipschitz = 0.0f64;
    let mut max_step = 0.0f64;
    for (i, j) in neighbors {
        let dist: f64 = param_points[i]
            .iter()
            .zip(&param_points[j])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dist > 0.0 {
            lipschitz = lipschitz.max((margins[i] - margins[j]).abs() / dist);
            max_step = max_step.max(dist);
        }
    }
    MarginSweep {
        worst,
        worst_point,
        lipschitz,
        max_step,
    }
}

/// Certifies `(δ, f₁)` as a solution of the approximation problem for σ and
/// ε: `‖δ‖₀ < ε` over the cube grid, and `‖j¹f₁ − σ‖₀ < ε` (zeroth order in
/// the sup norm, first order as the Euclidean-to-sup operator norm, per
/// component) over a tubular grid of half-width `grid.tube_radius` around
/// the deformed cube. Failures localize the violated clause; the inflation
/// rule is enforced before a PASS.
///
/// ```
/// use holoapprox::corrugation::{solve, SolveOptions};
/// use holoapprox::extension::extend;
/// use holoapprox::jetmodel::{Dims, JetSection};
/// use holoapprox::verify::{certify_solution, CertifyGrid};
///
/// let sigma = JetSection::from_sources(
///     Dims::new(1, 0, 1).unwrap(), &["x1"], &[vec!["0", "0"]], 0.1,
/// ).unwrap();
/// let opts = SolveOptions { mountain_ansatz: true, ..SolveOptions::default() };
/// let (pair, report) = solve(&sigma, 1.0, &opts).unwrap();
/// let ext = extend(&sigma, &pair).unwrap();
/// let grid = CertifyGrid { x_res: 1024, fiber_res: 8, tube_radius: 0.005 };
/// let n = report.directions[0].frequency;
/// let cert = certify_solution(&sigma, 1.0, &pair.delta, &ext, &grid, &[n], 0).unwrap();
/// assert!(cert.pass);
/// ```
pub fn certify_solution(
    section: &JetSection,
    eps: f64,
    delta: &Expr,
    ext: &ExtendedSolution,
    grid: &CertifyGrid,
    freqs: &[u32],
    seed: u64,
) -> Result<Certificate> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "eps must be positive, got {eps}"
        )));
    }
    if !(grid.tube_radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tube radius must be positive, got {}",
            grid.tube_radius
        )));
    }
    let dims = section.dims;
    let names = dims.var_names();
    let x_names = dims.x_names();

    // ── clause 1: ‖δ‖₀ < ε over the cube grid
    let cube = Grid::uniform(&vec![(0.0, 1.0); dims.m], &vec![grid.x_res; dims.m])?;
    let cube_points: Vec<Vec<f64>> = cube.points().collect();
    let delta_vals = cube_points
        .par_iter()
        .map(|x| {
            let vars = bindings(&x_names, x);
            expr::eval_f64(delta, &vars)
        })
        .collect::<Result<Vec<_>>>()?;
    let delta_margins: Vec<f64> = delta_vals.iter().map(|d| eps - d.abs()).collect();
    let delta_sweep = sweep(&cube_points, &cube_points, &delta_margins, cube.axis_neighbors());
    let delta_sup = delta_vals.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));

    // ── clauses on j¹f₁ − σ over the tube grid
    let r = grid.tube_radius;
    let overhang = r.min(section.margin);
    let mut bounds = vec![(-overhang, 1.0 + overhang); dims.m];
    let mut res = vec![grid.x_res; dims.m];
    for _ in 0..=dims.k {
        bounds.push((-r, r));
        res.push(grid.fiber_res);
    }
    let tube = Grid::uniform(&bounds, &res)?;
    let tube_raw: Vec<Vec<f64>> = tube.points().collect();
    // embed (x, s, z) ↦ (x, δ(x) + s, z)
    let embedded = tube_raw
        .par_iter()
        .map(|p| {
            let (x, rest) = p.split_at(dims.m);
            let vars = bindings(&x_names, x);
            let d = expr::eval_f64(delta, &vars)?;
            let mut q = x.to_vec();
            q.push(d + rest[0]);
            q.extend_from_slice(&rest[1..]);
            Ok(q)
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;

    let jet_margins = embedded
        .par_iter()
        .map(|p| {
            let (x, rest) = p.split_at(dims.m);
            let (y, z) = (rest[0], &rest[1..]);
            let (f1_val, jac) = ext.jet_at(p)?;
            let f_val = section.eval_f(&names, x, y, z)?;
            let phi = section.eval_phi(&names, x, y, z)?;
            let diff: Vec<f64> = f1_val.iter().zip(&f_val).map(|(a, b)| a - b).collect();
            let zeroth = eps - sup_norm(&diff);
            let first = eps
                - (0..dims.n)
                    .map(|row| {
                        let r: Vec<f64> = (0..dims.source())
                            .map(|c| jac.get(row, c) - phi.get(row, c))
                            .collect();
                        euclid_norm(&r)
                    })
                    .fold(0.0f64, f64::max);
            Ok((zeroth, first))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let zeroth_margins: Vec<f64> = jet_margins.iter().map(|m| m.0).collect();
    let first_margins: Vec<f64> = jet_margins.iter().map(|m| m.1).collect();
    let combined: Vec<f64> = jet_margins.iter().map(|m| m.0.min(m.1)).collect();
    let jet_sweep = sweep(&tube_raw, &embedded, &combined, tube.axis_neighbors());
    let zeroth_worst = zeroth_margins.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let first_worst = first_margins.iter().fold(f64::INFINITY, |a, &b| a.min(b));

    // ── inflation rule
    let dim_cube = dims.m as f64;
    let dim_tube = dims.source() as f64;
    let inflation_delta = delta_sweep.lipschitz * delta_sweep.max_step * dim_cube.sqrt();
    let inflation_jet = jet_sweep.lipschitz * jet_sweep.max_step * dim_tube.sqrt();
    let margins_positive = delta_sweep.worst > 0.0 && jet_sweep.worst > 0.0;
    let inflation_ok =
        delta_sweep.worst > inflation_delta && jet_sweep.worst > inflation_jet;

    let (worst_clause, worst_point) = if delta_sweep.worst <= jet_sweep.worst {
        ("delta-bound".to_string(), delta_sweep.worst_point.clone())
    } else if zeroth_worst <= first_worst {
        ("value-bound".to_string(), jet_sweep.worst_point.clone())
    } else {
        ("derivative-bound".to_string(), jet_sweep.worst_point.clone())
    };

    Ok(Certificate {
        pass: margins_positive && inflation_ok,
        eps,
        m: dims.m,
        k: dims.k,
        n: dims.n,
        x_res: grid.x_res,
        fiber_res: grid.fiber_res,
        tube_radius: grid.tube_radius,
        x_margin: section.margin,
        freqs: freqs.to_vec(),
        delta_sup,
        delta_margin: delta_sweep.worst,
        zeroth_margin: zeroth_worst,
        first_margin: first_worst,
        worst_clause,
        worst_point,
        lipschitz_delta: delta_sweep.lipschitz,
        lipschitz_jet: jet_sweep.lipschitz,
        inflation_delta,
        inflation_jet,
        inflation_ok,
        seed,
    })
}

/// Bisects on the tube radius for the largest width at which
/// [`certify_solution`] passes, starting from `r_max`. Returns the best
/// passing certificate, or the certificate at the smallest tried radius
/// when everything fails.
pub fn certify_with_max_radius(
    section: &JetSection,
    eps: f64,
    delta: &Expr,
    ext: &ExtendedSolution,
    x_res: usize,
    fiber_res: usize,
    r_max: f64,
    freqs: &[u32],
    seed: u64,
) -> Result<Certificate> {
    let make = |r: f64| -> Result<Certificate> {
        certify_solution(
            section,
            eps,
            delta,
            ext,
            &CertifyGrid {
                x_res,
                fiber_res,
                tube_radius: r,
            },
            freqs,
            seed,
        )
    };
    let first = make(r_max)?;
    if first.pass {
        return Ok(first);
    }
    let mut lo = 0.0f64;
    let mut hi = r_max;
    let mut best: Option<Certificate> = None;
    let mut last = first;
    for _ in 0..10 {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 {
            break;
        }
        let cert = make(mid)?;
        if cert.pass {
            lo = mid;
            best = Some(cert);
        } else {
            hi = mid;
            last = cert;
        }
    }
    Ok(best.unwrap_or(last))
}
