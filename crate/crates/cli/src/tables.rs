//! CSV sample tables. Columns are fixed: `x1..xm, delta, h1..hn` for the
//! core table and `x1..xm, y, z1..zk, f1_1..f1_n` for the tubular table.

use holoapprox::error::{Error, Result};
use holoapprox::expr;
use holoapprox::extension::ExtendedSolution;
use holoapprox::jetmodel::{bindings, Grid, HolonomicPair, JetSection};

pub fn core_table(section: &JetSection, pair: &HolonomicPair, res: usize) -> Result<String> {
    let dims = section.dims;
    let names = dims.x_names();
    let mut out = String::new();
    for nm in &names {
        out.push_str(nm);
        out.push(',');
    }
    out.push_str("delta");
    for i in 1..=dims.n {
        out.push_str(&format!(",h{i}"));
    }
    out.push('\n');

    let per_axis = scale_res(res, dims.m);
    let grid = Grid::uniform(&vec![(0.0, 1.0); dims.m], &vec![per_axis; dims.m])?;
    for x in grid.points() {
        let vars = bindings(&names, &x);
        let d = expr::eval_f64(&pair.delta, &vars)?;
        for v in &x {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&d.to_string());
        for h in &pair.h {
            out.push_str(&format!(",{}", expr::eval_f64(h, &vars)?));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn tube_table(
    section: &JetSection,
    pair: &HolonomicPair,
    ext: &ExtendedSolution,
    radius: f64,
    x_res: usize,
    fiber_res: usize,
) -> Result<String> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tube radius must be positive, got {radius}"
        )));
    }
    let dims = section.dims;
    let x_names = dims.x_names();
    let mut out = String::new();
    for nm in &x_names {
        out.push_str(nm);
        out.push(',');
    }
    out.push('y');
    for q in 1..=dims.k {
        out.push_str(&format!(",z{q}"));
    }
    for i in 1..=dims.n {
        out.push_str(&format!(",f1_{i}"));
    }
    out.push('\n');

    let per_axis = scale_res(x_res, dims.m);
    let mut bounds = vec![(0.0, 1.0); dims.m];
    let mut res = vec![per_axis; dims.m];
    for _ in 0..=dims.k {
        bounds.push((-radius, radius));
        res.push(fiber_res);
    }
    let grid = Grid::uniform(&bounds, &res)?;
    for p in grid.points() {
        let (x, rest) = p.split_at(dims.m);
        let vars = bindings(&x_names, x);
        let d = expr::eval_f64(&pair.delta, &vars)?;
        let mut point = x.to_vec();
        point.push(d + rest[0]);
        point.extend_from_slice(&rest[1..]);
        let f1 = ext.value_at(&point)?;
        for v in &point {
            out.push_str(&format!("{v},"));
        }
        let row: Vec<String> = f1.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

// keep multi-dimensional tables bounded
fn scale_res(res: usize, m: usize) -> usize {
    match m {
        1 => res.max(1),
        2 => res.min(96).max(1),
        _ => res.min(24).max(1),
    }
}
