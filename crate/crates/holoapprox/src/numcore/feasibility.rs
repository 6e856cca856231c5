//! Small linear feasibility solver: is a point inside the convex hull of a
//! finite point set? Solved as a phase-one simplex on
//! `Σ wᵢ pᵢ = q, Σ wᵢ = 1, w ≥ 0`, with Bland's rule so it cannot cycle.
//!
//! Dimensions here are tiny (hull certificates in ℝ^{1+n} with n ≤ 8), so a
//! dense tableau is the right tool.

const FEAS_TOL: f64 = 1e-9;

/// Returns true when `target` lies in the convex hull of `points`.
pub fn point_in_hull(points: &[Vec<f64>], target: &[f64]) -> bool {
    let d = target.len();
    if points.is_empty() || points.iter().any(|p| p.len() != d) {
        return false;
    }
    let k = points.len();
    let rows = d + 1;

    // Tableau columns: k weight variables, `rows` artificials, then the rhs.
    let cols = k + rows + 1;
    let mut t = vec![vec![0.0; cols]; rows];
    for (j, p) in points.iter().enumerate() {
        for i in 0..d {
            t[i][j] = p[i];
        }
        t[d][j] = 1.0;
    }
    for i in 0..d {
        t[i][cols - 1] = target[i];
    }
    t[d][cols - 1] = 1.0;
    // Flip rows so every rhs is nonnegative, then add artificials.
    for i in 0..rows {
        if t[i][cols - 1] < 0.0 {
            for v in t[i].iter_mut() {
                *v = -*v;
            }
        }
        t[i][k + i] = 1.0;
    }

    // Phase-one objective: minimize the sum of artificials.
    let mut obj = vec![0.0; cols];
    for i in 0..rows {
        for j in 0..cols {
            obj[j] += t[i][j];
        }
    }
    let mut basis: Vec<usize> = (k..k + rows).collect();

    loop {
        // Bland: entering variable = lowest index with positive reduced cost.
        let mut enter = None;
        for (j, &c) in obj.iter().enumerate().take(cols - 1) {
            if c > FEAS_TOL {
                enter = Some(j);
                break;
            }
        }
        let Some(enter) = enter else { break };

        // Ratio test, ties broken by lowest basis index.
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for i in 0..rows {
            if t[i][enter] > FEAS_TOL {
                let ratio = t[i][cols - 1] / t[i][enter];
                if ratio < best - FEAS_TOL
                    || (ratio < best + FEAS_TOL
                        && leave.map_or(true, |l| basis[i] < basis[l]))
                {
                    best = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            // Unbounded phase-one objective cannot happen; bail out safely.
            return false;
        };

        let piv = t[leave][enter];
        for v in t[leave].iter_mut() {
            *v /= piv;
        }
        for i in 0..rows {
            if i != leave && t[i][enter].abs() > 0.0 {
                let f = t[i][enter];
                for j in 0..cols {
                    t[i][j] -= f * t[leave][j];
                }
            }
        }
        let f = obj[enter];
        for j in 0..cols {
            obj[j] -= f * t[leave][j];
        }
        basis[leave] = enter;
    }

    // Feasible iff every artificial ended at (numerical) zero.
    let mut infeasibility = 0.0;
    for i in 0..rows {
        if basis[i] >= k {
            infeasibility += t[i][cols - 1];
        }
    }
    infeasibility.abs() < 1e-7
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull() {
        let pts = vec![
            vec![-1.0, -1.0],
            vec![1.0, -1.0],
            vec![1.0, 1.0],
            vec![-1.0, 1.0],
        ];
        assert!(point_in_hull(&pts, &[0.0, 0.0]));
        assert!(point_in_hull(&pts, &[0.99, -0.5]));
        assert!(point_in_hull(&pts, &[1.0, 1.0]));
        assert!(!point_in_hull(&pts, &[1.2, 0.0]));
        assert!(!point_in_hull(&pts, &[0.0, -1.01]));
    }

    #[test]
    fn degenerate_segment() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 2.0]];
        assert!(point_in_hull(&pts, &[1.0, 1.0]));
        assert!(!point_in_hull(&pts, &[1.0, 1.1]));
    }

    #[test]
    fn dimension_mismatch_is_not_contained() {
        assert!(!point_in_hull(&[vec![1.0]], &[1.0, 2.0]));
        assert!(!point_in_hull(&[], &[0.0]));
    }

    #[test]
    fn simplex_in_three_dimensions() {
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert!(point_in_hull(&pts, &[0.25, 0.25, 0.25]));
        assert!(!point_in_hull(&pts, &[0.4, 0.4, 0.4]));
    }
}
