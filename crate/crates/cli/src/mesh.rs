//! OBJ surface export for m = 1, k = 0, n = 1: the graph of the extended
//! solution over a tubular strip around the deformed cube, plus the input
//! reference line `(x, 0, f(x, 0))` as a polyline object.

use holoapprox::error::{Error, Result};
use holoapprox::expr;
use holoapprox::extension::ExtendedSolution;
use holoapprox::jetmodel::{bindings, HolonomicPair, JetSection};

/// Builds the OBJ text. Vertices are `(x, y, f₁(x, y))` on a structured
/// `(res_x+1) × (res_y+1)` grid with `y ∈ [δ(x) − width, δ(x) + width]`,
/// joined by quad faces; `width = 0` degenerates to the core curve
/// `(x, δ(x), h(x))` emitted as a polyline.
pub fn surface_obj(
    section: &JetSection,
    pair: &HolonomicPair,
    ext: &ExtendedSolution,
    width: f64,
    res: (usize, usize),
) -> Result<String> {
    let dims = section.dims;
    if dims.m != 1 || dims.k != 0 || dims.n != 1 {
        return Err(Error::InvalidInput(
            "OBJ surface export needs m = 1, k = 0, n = 1".into(),
        ));
    }
    let (rx, ry) = (res.0.max(1), res.1.max(1));
    if width < 0.0 {
        return Err(Error::InvalidInput(format!(
            "width must be nonnegative, got {width}"
        )));
    }
    let names = dims.x_names();
    let mut out = String::new();
    out.push_str("# extended solution surface\n");

    if width == 0.0 {
        out.push_str("o core_curve\n");
        for i in 0..=rx {
            let x = i as f64 / rx as f64;
            let vars = bindings(&names, &[x]);
            let d = expr::eval_f64(&pair.delta, &vars)?;
            let h = expr::eval_f64(&pair.h[0], &vars)?;
            out.push_str(&format!("v {x} {d} {h}\n"));
        }
        out.push('l');
        for i in 1..=rx + 1 {
            out.push_str(&format!(" {i}"));
        }
        out.push('\n');
    } else {
        out.push_str("o f1_surface\n");
        for i in 0..=rx {
            let x = i as f64 / rx as f64;
            let vars = bindings(&names, &[x]);
            let d = expr::eval_f64(&pair.delta, &vars)?;
            for j in 0..=ry {
                let y = d - width + 2.0 * width * j as f64 / ry as f64;
                let f1 = ext.value_at(&[x, y])?;
                out.push_str(&format!("v {x} {y} {}\n", f1[0]));
            }
        }
        let stride = ry + 1;
        for i in 0..rx {
            for j in 0..ry {
                let a = i * stride + j + 1;
                let b = a + stride;
                out.push_str(&format!("f {a} {b} {} {}\n", b + 1, a + 1));
            }
        }
    }

    // the input path: (x, 0, f(x, 0)) — straight for the standard mountain
    let base = (rx + 1) * (if width == 0.0 { 1 } else { ry + 1 });
    out.push_str("o reference_line\n");
    let var_names = dims.var_names();
    for i in 0..=rx {
        let x = i as f64 / rx as f64;
        let f = section.eval_f(&var_names, &[x], 0.0, &[])?;
        out.push_str(&format!("v {x} 0 {}\n", f[0]));
    }
    out.push('l');
    for i in 1..=rx + 1 {
        out.push_str(&format!(" {}", base + i));
    }
    out.push('\n');
    Ok(out)
}

/// Parses `v`-records back out of an OBJ string, grouped by object name.
pub fn obj_vertices(obj: &str) -> Vec<(String, Vec<[f64; 3]>)> {
    let mut groups: Vec<(String, Vec<[f64; 3]>)> = Vec::new();
    for line in obj.lines() {
        if let Some(name) = line.strip_prefix("o ") {
            groups.push((name.trim().to_string(), Vec::new()));
        } else if let Some(rest) = line.strip_prefix("v ") {
            let coords: Vec<f64> = rest
                .split_whitespace()
                .filter_map(|t| t.parse().ok())
                .collect();
            if coords.len() == 3 {
                if let Some(last) = groups.last_mut() {
                    last.1.push([coords[0], coords[1], coords[2]]);
                }
            }
        }
    }
    groups
}
