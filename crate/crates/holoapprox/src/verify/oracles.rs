//! Brute-force sampling oracles for the closed forms, and the aggregated
//! oracle suite. The oracles never feed the solver; they exist to falsify
//! the exact formulas independently.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{self, Expr, Func};
use crate::numcore::{dot, rank_one_inverse_quadratic, Matrix};
use crate::relation::{ampleness_certificate, hyperbola_params, slice_member, SliceSpec};

/// Maximizes `f` over directions of ℝ^dim by dense random sampling followed
/// by shrinking-neighborhood refinement around the incumbent. Derivative
/// free and independent of any closed form.
fn refine_max(dim: usize, f: impl Fn(&[f64]) -> f64, samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    if dim == 0 {
        return f(&[]);
    }
    let coarse = samples.max(64);
    let mut best_val = f64::NEG_INFINITY;
    let mut best = vec![0.0; dim];
    for _ in 0..coarse {
        let u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if u.iter().all(|v| v.abs() < 1e-12) {
            continue;
        }
        let v = f(&u);
        if v > best_val {
            best_val = v;
            best = u;
        }
    }
    let mut sigma = 0.3;
    for _ in 0..14 {
        for _ in 0..(coarse / 16).max(64) {
            let u: Vec<f64> = best
                .iter()
                .map(|b| b + sigma * rng.gen_range(-1.0..1.0))
                .collect();
            if u.iter().all(|v| v.abs() < 1e-12) {
                continue;
            }
            let v = f(&u);
            if v > best_val {
                best_val = v;
                best = u;
            }
        }
        sigma *= 0.5;
    }
    best_val
}

/// Sampling oracle for the restricted norm square: the supremum of
/// `⟨m, u⟩² / (‖u‖² + ⟨y, u⟩²)` over nonzero directions.
pub fn sampled_restricted_norm_sq(
    m: &[f64],
    y: &[f64],
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    refine_max(
        m.len(),
        |u| {
            let mu = dot(m, u);
            let yu = dot(y, u);
            let den = dot(u, u) + yu * yu;
            if den == 0.0 {
                f64::NEG_INFINITY
            } else {
                mu * mu / den
            }
        },
        samples,
        rng,
    )
}

/// Sampling oracle for the quantified slice definition: the maximum over
/// unit `(u, u')` of
/// `max_j (u'bⱼ + ψⱼu)² − ε²((u')² + ‖u‖² + (au' + λu)²)`;
/// the point is a member iff this excess is negative.
pub fn sampled_slice_excess(
    spec: &SliceSpec,
    a: f64,
    b: &[f64],
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mdim = spec.lambda.len();
    let e2 = spec.eps * spec.eps;
    refine_max(
        mdim + 1,
        |uu| {
            let (u, up) = uu.split_at(mdim);
            let up = up[0];
            let norm2 = dot(u, u) + up * up;
            if norm2 == 0.0 {
                return f64::NEG_INFINITY;
            }
            let lam_u = dot(&spec.lambda, u);
            let mut worst = f64::NEG_INFINITY;
            for j in 0..spec.n() {
                let psi_u = dot(spec.psi.row(j), u);
                let lhs = up * b[j] + psi_u;
                let rhs = e2 * (up * up + dot(u, u) + (a * up + lam_u) * (a * up + lam_u));
                worst = worst.max(lhs * lhs - rhs);
            }
            // homogeneous of degree 2: normalize to the unit sphere
            worst / norm2
        },
        samples,
        rng,
    )
}

/// Aggregated report of the oracle suite; deterministic given the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub seed: u64,
    pub trials: usize,
    /// Worst relative deviation of the closed-form restricted norm from the
    /// sampled supremum.
    pub restricted_norm_dev: f64,
    /// Disagreements between closed-form slice membership and the sampled
    /// quantifier outside the boundary band.
    pub slice_disagreements: usize,
    /// Worst `|K − 1/(1+‖λ‖²)|` over nonempty slices, both branches.
    pub k_identity_dev: f64,
    /// Worst relative deviation of dual-number partials from central finite
    /// differences on the random expression corpus.
    pub jet_fd_dev: f64,
    /// Hull feasibility failures of ampleness certificates.
    pub hull_failures: usize,
}

const BOUNDARY_BAND: f64 = 1e-6;

impl OracleReport {
    pub fn to_text(&self) -> String {
        format!(
            "holoapprox-oracle-report v1\n\
             seed: {}\n\
             trials: {}\n\
             restricted_norm_dev: {}\n\
             slice_disagreements: {}\n\
             k_identity_dev: {}\n\
             jet_fd_dev: {}\n\
             hull_failures: {}\n",
            self.seed,
            self.trials,
            self.restricted_norm_dev,
            self.slice_disagreements,
            self.k_identity_dev,
            self.jet_fd_dev,
            self.hull_failures,
        )
    }
}

fn trial_rng(seed: u64, salt: u64, idx: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(
        seed ^ salt.wrapping_mul(0x9E3779B97F4A7C15)
            ^ (idx as u64).wrapping_mul(0xD1B54A32D192ED03),
    )
}

fn random_corpus_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 {
        return match rng.gen_range(0..3) {
            0 => expr::var("x"),
            1 => expr::var("w"),
            _ => expr::num(rng.gen_range(-2.0..2.0)),
        };
    }
    let a = random_corpus_expr(rng, depth - 1);
    let b = random_corpus_expr(rng, depth - 1);
    match rng.gen_range(0..6) {
        0 => Expr::Add(a.into(), b.into()),
        1 => Expr::Sub(a.into(), b.into()),
        2 => Expr::Mul(a.into(), b.into()),
        3 => Expr::Call(Func::Sin, a.into()),
        4 => Expr::Call(Func::Cos, a.into()),
        _ => Expr::Neg(a.into()),
    }
}

fn random_nonempty_spec(rng: &mut ChaCha8Rng) -> SliceSpec {
    loop {
        let mdim = rng.gen_range(0..=3usize);
        let n = rng.gen_range(1..=3usize);
        let eps = rng.gen_range(0.3..1.5);
        let lambda: Vec<f64> = (0..mdim).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..mdim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let spec = SliceSpec {
            lambda,
            psi: Matrix::from_rows(rows).unwrap(),
            eps,
        };
        if spec.all_params().unwrap().iter().all(|p| !p.empty) {
            return spec;
        }
    }
}

/// Runs every sampling oracle against its closed form and reports the worst
/// deviation per oracle. Reproducible given the seed; `trials ≥ 1`.
pub fn oracle_suite(seed: u64, trials: usize) -> Result<OracleReport> {
    if trials == 0 {
        return Err(Error::InvalidInput("trials must be ≥ 1".into()));
    }

    // restricted norm closed form vs sampled supremum
    let restricted_norm_dev = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, 1, i);
            let dim = rng.gen_range(1..=3usize);
            let m: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let exact = rank_one_inverse_quadratic(&m, &y).unwrap();
            let sampled = sampled_restricted_norm_sq(&m, &y, 2_000, &mut rng);
            (exact - sampled).abs() / exact.abs().max(1e-9)
        })
        .reduce(|| 0.0, f64::max);

    // closed-form slice membership vs sampled quantifier, outside the band
    let slice_disagreements = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, 2, i);
            let spec = random_nonempty_spec(&mut rng);
            let a = rng.gen_range(-2.0..2.0);
            let b: Vec<f64> = (0..spec.n()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let closed = slice_member(&spec, a, &b).unwrap();
            let excess = sampled_slice_excess(&spec, a, &b, 2_000, &mut rng);
            let scale = 1.0 + a * a + dot(&b, &b);
            if closed.normalized_slack.abs() < BOUNDARY_BAND
                || (excess / scale).abs() < BOUNDARY_BAND
            {
                0
            } else {
                usize::from(closed.member != (excess < 0.0))
            }
        })
        .reduce(|| 0, |a, b| a + b);

    // K identity on both branches
    let k_identity_dev = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, 3, i);
            let dim = rng.gen_range(1..=4usize);
            let lambda: Vec<f64> = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let collinear = i % 2 == 0;
            let mu: Vec<f64> = if collinear {
                let k = rng.gen_range(-1.5..1.5);
                lambda.iter().map(|l| k * l).collect()
            } else {
                (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
            };
            let eps = rng.gen_range(0.5..2.0);
            let p = hyperbola_params(&lambda, &mu, eps).unwrap();
            if p.empty {
                0.0
            } else {
                (p.k_value - 1.0 / (1.0 + dot(&lambda, &lambda))).abs()
            }
        })
        .reduce(|| 0.0, f64::max);

    // dual-number jets vs central finite differences
    let jet_fd_dev = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, 4, i);
            let e = random_corpus_expr(&mut rng, 4);
            let x = rng.gen_range(-1.0..1.0);
            let w = rng.gen_range(-1.0..1.0);
            let d = expr::eval_dual(&e, &[("x", x), ("w", w)], &["x", "w"]).unwrap();
            let h = 1e-6;
            let mut worst: f64 = 0.0;
            for (slot, hx, hw) in [(0usize, h, 0.0), (1usize, 0.0, h)] {
                let plus = expr::eval_f64(&e, &[("x", x + hx), ("w", w + hw)]).unwrap();
                let minus = expr::eval_f64(&e, &[("x", x - hx), ("w", w - hw)]).unwrap();
                let fd = (plus - minus) / (2.0 * h);
                worst = worst.max((d.partial(slot) - fd).abs() / fd.abs().max(1.0));
            }
            worst
        })
        .reduce(|| 0.0, f64::max);

    // hull feasibility of ampleness certificates
    let hull_trials = (trials / 10).max(10);
    let hull_failures = (0..hull_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, 5, i);
            let spec = random_nonempty_spec(&mut rng);
            let a = rng.gen_range(-3.0..3.0);
            let b: Vec<f64> = (0..spec.n()).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let radius = rng.gen_range(0.1..2.0);
            match ampleness_certificate(&spec, a, &b, radius) {
                Ok(cert) => usize::from(!cert.hull_verified),
                Err(_) => 1,
            }
        })
        .reduce(|| 0, |a, b| a + b);

    Ok(OracleReport {
        seed,
        trials,
        restricted_norm_dev,
        slice_disagreements,
        k_identity_dev,
        jet_fd_dev,
        hull_failures,
    })
}
