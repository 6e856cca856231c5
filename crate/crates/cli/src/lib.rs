//! Command implementations behind the `holoapprox` binary, importable so
//! integration tests can drive them directly.
//!
//! Exit code contract: 0 = PASS, 1 = FAIL certificate, 2 = input error,
//! 3 = solver error.

pub mod config;
pub mod mesh;
pub mod tables;

use std::fs;
use std::path::Path;

use serde::Serialize;

use holoapprox::corrugation::{solve, SolveReport};
use holoapprox::error::Error;
use holoapprox::expr;
use holoapprox::extension::extend;
use holoapprox::jetmodel::HolonomicPair;
use holoapprox::numcore::Matrix;
use holoapprox::relation::{ampleness_certificate, hyperbola_params, SliceSpec};
use holoapprox::verify::{certify_with_max_radius, oracle_suite, Certificate};

pub use config::Config;

/// Exit code for a library error: inputs are 2, solver trouble is 3.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Syntax { .. }
        | Error::UnknownIdentifier { .. }
        | Error::UnboundVariable { .. }
        | Error::DimMismatch { .. }
        | Error::InvalidInput(_) => 2,
        Error::Domain { .. }
        | Error::EmptySlice { .. }
        | Error::BaseOutsideTube(_)
        | Error::LoopShapeSearch(_)
        | Error::ContainmentViolation(_)
        | Error::AverageMismatch(_)
        | Error::DirectionAlreadyHolonomic(_)
        | Error::FrequencyCapExceeded { .. } => 3,
    }
}

#[derive(Serialize)]
struct DirectionForms {
    direction: usize,
    frequency: u32,
    kappa_min: f64,
    eta_min: f64,
    base_tube_margin: f64,
    shape_s: Option<f64>,
    shape_s0: Option<f64>,
    margin_after: f64,
    displacement_bound: f64,
    cross_partial_drift: f64,
}

#[derive(Serialize)]
struct FormsDump {
    schema: &'static str,
    eps: f64,
    m: usize,
    k: usize,
    n: usize,
    delta: String,
    h: Vec<String>,
    g: Vec<String>,
    f1: Vec<String>,
    directions: Vec<DirectionForms>,
    final_margin: f64,
}

fn forms_json(
    eps: f64,
    pair: &HolonomicPair,
    g: &[expr::Expr],
    f1: &[expr::Expr],
    report: &SolveReport,
) -> String {
    let dump = FormsDump {
        schema: "holoapprox-forms v1",
        eps,
        m: pair.dims.m,
        k: pair.dims.k,
        n: pair.dims.n,
        delta: pair.delta.to_string(),
        h: pair.h.iter().map(|e| e.to_string()).collect(),
        g: g.iter().map(|e| e.to_string()).collect(),
        f1: f1.iter().map(|e| e.to_string()).collect(),
        directions: report
            .directions
            .iter()
            .map(|d| DirectionForms {
                direction: d.direction + 1,
                frequency: d.frequency,
                kappa_min: d.kappa_min,
                eta_min: d.eta_min,
                base_tube_margin: d.base_tube_margin,
                shape_s: d.shape.map(|s| s.s),
                shape_s0: d.shape.map(|s| s.s0),
                margin_after: d.margin_after,
                displacement_bound: d.displacement_bound,
                cross_partial_drift: d.cross_partial_drift,
            })
            .collect(),
        final_margin: report.final_margin,
    };
    serde_json::to_string_pretty(&dump).expect("forms serialization cannot fail")
}

/// `solve <config>`: solve, extend, certify, write the sample tables, the
/// closed-form dump and the certificate into `out_dir`. Returns the
/// certificate; PASS/FAIL maps to exit 0/1.
pub fn cmd_solve(cfg: &Config, out_dir: &Path) -> Result<Certificate, Error> {
    let section = cfg.section()?;
    let eps = cfg.eps()?;
    let opts = cfg.solve_options()?;
    let (pair, report) = solve(&section, eps, &opts)?;
    let ext = extend(&section, &pair)?;

    let grid = cfg.certify_grid(section.dims.m);
    let freqs: Vec<u32> = report.directions.iter().map(|d| d.frequency).collect();
    let cert = certify_with_max_radius(
        &section,
        eps,
        &pair.delta,
        &ext,
        grid.x_res,
        grid.fiber_res,
        grid.tube_radius,
        &freqs,
        cfg.seed(),
    )?;

    fs::create_dir_all(out_dir)
        .map_err(|e| Error::InvalidInput(format!("cannot create {}: {e}", out_dir.display())))?;
    let write = |name: &str, data: &str| -> Result<(), Error> {
        fs::write(out_dir.join(name), data)
            .map_err(|e| Error::InvalidInput(format!("cannot write {name}: {e}")))
    };
    write(
        "core_samples.csv",
        &tables::core_table(&section, &pair, grid.x_res.min(1024))?,
    )?;
    write(
        "tube_samples.csv",
        &tables::tube_table(&section, &pair, &ext, cert.tube_radius, 128, 8)?,
    )?;
    write("forms.json", &forms_json(eps, &pair, &ext.g, &ext.f1, &report))?;
    write("certificate.txt", &cert.to_text())?;
    Ok(cert)
}

/// `slice --lambda ... --psi ... --eps ...`: closed-form hyperbola data per
/// target component plus an ampleness certificate summary, as a structured
/// text record.
pub fn cmd_slice(
    lambda: &[f64],
    psi_rows: &[Vec<f64>],
    eps: f64,
    target: (f64, &[f64]),
    radius: f64,
) -> Result<String, Error> {
    if psi_rows.is_empty() {
        return Err(Error::InvalidInput("psi needs at least one row".into()));
    }
    for row in psi_rows {
        if row.len() != lambda.len() {
            return Err(Error::DimMismatch {
                context: "slice psi row",
                expected: lambda.len(),
                got: row.len(),
            });
        }
    }
    let mut out = String::from("holoapprox-slice-report v1\n");
    out.push_str(&format!("eps: {eps}\n"));
    out.push_str(&format!(
        "lambda: {}\n",
        lambda
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    let mut any_empty = false;
    for (j, row) in psi_rows.iter().enumerate() {
        let p = hyperbola_params(lambda, row, eps)?;
        out.push_str(&format!("component: {}\n", j + 1));
        if p.empty {
            any_empty = true;
            out.push_str("  empty: true\n");
        } else {
            out.push_str("  empty: false\n");
            out.push_str(&format!("  m0: {}\n", p.m0));
            out.push_str(&format!("  kappa: {}\n", p.kappa));
            out.push_str(&format!("  eta: {}\n", p.eta));
            out.push_str(&format!("  K: {}\n", p.k_value));
        }
    }
    if any_empty {
        out.push_str("verdict: empty\n");
        return Ok(out);
    }
    out.push_str("verdict: nonempty\n");
    let spec = SliceSpec {
        lambda: lambda.to_vec(),
        psi: Matrix::from_rows(psi_rows.to_vec())?,
        eps,
    };
    let cert = ampleness_certificate(&spec, target.0, target.1, radius)?;
    out.push_str(&format!(
        "ample_target: {}\n",
        std::iter::once(target.0)
            .chain(target.1.iter().copied())
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    ));
    out.push_str(&format!("ample_radius: {radius}\n"));
    out.push_str(&format!("hull_points: {}\n", cert.hull_points.len()));
    out.push_str(&format!("hull_verified: {}\n", cert.hull_verified));
    Ok(out)
}

/// `mesh <config> --n --eps --width --res`: solve and export the extended
/// solution over a tubular strip. Surfaces (m = 1, k = 0, n = 1) become OBJ
/// meshes with the reference line as a polyline; other dimensions fall back
/// to a CSV point cloud with a warning on stderr.
pub struct MeshOutcome {
    pub content: String,
    pub is_obj: bool,
}

pub fn cmd_mesh(
    cfg: &Config,
    n_override: Option<u32>,
    eps_override: Option<f64>,
    width: f64,
    res: (usize, usize),
) -> Result<MeshOutcome, Error> {
    let section = cfg.section()?;
    let eps = match eps_override {
        Some(e) if e > 0.0 => e,
        Some(e) => {
            return Err(Error::InvalidInput(format!(
                "eps must be positive, got {e}"
            )))
        }
        None => cfg.eps()?,
    };
    if width < 0.0 {
        return Err(Error::InvalidInput(format!(
            "tubular width must be nonnegative, got {width}"
        )));
    }
    let mut opts = cfg.solve_options()?;
    if n_override.is_some() {
        opts.forced_frequency = n_override;
    }
    let (pair, _) = solve(&section, eps, &opts)?;
    let ext = extend(&section, &pair)?;
    let dims = section.dims;
    if dims.m == 1 && dims.k == 0 && dims.n == 1 {
        Ok(MeshOutcome {
            content: mesh::surface_obj(&section, &pair, &ext, width, res)?,
            is_obj: true,
        })
    } else {
        Ok(MeshOutcome {
            content: tables::tube_table(&section, &pair, &ext, width.max(1e-9), res.0, res.1)?,
            is_obj: false,
        })
    }
}

/// `oracle --seed --trials`: run the oracle suite, return the report text.
pub fn cmd_oracle(seed: u64, trials: usize) -> Result<String, Error> {
    Ok(oracle_suite(seed, trials)?.to_text())
}

/// Parses a comma-separated float list (`"0.5,-1"`), empty string allowed.
pub fn parse_float_list(s: &str) -> Result<Vec<f64>, Error> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("malformed number `{tok}`")))
        })
        .collect()
}

/// Parses semicolon-separated rows of comma-separated floats.
pub fn parse_rows(s: &str) -> Result<Vec<Vec<f64>>, Error> {
    s.split(';').map(parse_float_list).collect()
}
