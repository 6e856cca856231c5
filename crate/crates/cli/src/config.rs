//! Config file schema: flat `key = value` sections `[dims]`, `[sigma]`,
//! `[solver]`, `[grid]` (TOML), expressions quoted. `f` takes a single
//! string when n = 1 or a list; `phi` takes a single string broadcast to
//! every entry or a full n × (m+1+k) list of rows.

use serde::Deserialize;

use holoapprox::corrugation::SolveOptions;
use holoapprox::error::{Error, Result};
use holoapprox::jetmodel::{Dims, JetSection};
use holoapprox::verify::CertifyGrid;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PhiSpec {
    Broadcast(String),
    Rows(Vec<Vec<String>>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsSection {
    pub m: usize,
    #[serde(default)]
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SigmaSection {
    pub f: OneOrMany,
    pub phi: PhiSpec,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub eps: Option<f64>,
    /// "auto" (default) or "mountain".
    #[serde(rename = "loop")]
    pub loop_ansatz: Option<String>,
    /// Forced corrugation frequency.
    pub n: Option<u32>,
    pub n_cap: Option<u32>,
    pub freq_ratio: Option<u32>,
    pub safety: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_res: Option<usize>,
    pub fiber_res: Option<usize>,
    pub tube_radius: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dims: DimsSection,
    pub sigma: SigmaSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub grid: GridSection,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config parse error: {e}")))
    }

    pub fn dims(&self) -> Result<Dims> {
        Dims::new(self.dims.m, self.dims.k, self.dims.n)
    }

    pub fn section(&self) -> Result<JetSection> {
        let dims = self.dims()?;
        let f: Vec<String> = match &self.sigma.f {
            OneOrMany::One(s) => vec![s.clone(); dims.n],
            OneOrMany::Many(v) => v.clone(),
        };
        if f.len() != dims.n {
            return Err(Error::DimMismatch {
                context: "config sigma.f",
                expected: dims.n,
                got: f.len(),
            });
        }
        let phi: Vec<Vec<String>> = match &self.sigma.phi {
            PhiSpec::Broadcast(s) => vec![vec![s.clone(); dims.source()]; dims.n],
            PhiSpec::Rows(rows) => rows.clone(),
        };
        let f_refs: Vec<&str> = f.iter().map(|s| s.as_str()).collect();
        let phi_refs: Vec<Vec<&str>> = phi
            .iter()
            .map(|row| row.iter().map(|s| s.as_str()).collect())
            .collect();
        JetSection::from_sources(dims, &f_refs, &phi_refs, self.sigma.margin)
    }

    pub fn eps(&self) -> Result<f64> {
        let eps = self.solver.eps.unwrap_or(1.0);
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "eps must be positive, got {eps}"
            )));
        }
        Ok(eps)
    }

    pub fn solve_options(&self) -> Result<SolveOptions> {
        let mut opts = SolveOptions::default();
        match self.solver.loop_ansatz.as_deref() {
            None | Some("auto") => {}
            Some("mountain") => opts.mountain_ansatz = true,
            Some(other) => {
                return Err(Error::InvalidInput(format!(
                    "unknown loop ansatz `{other}` (expected `auto` or `mountain`)"
                )))
            }
        }
        opts.forced_frequency = self.solver.n;
        if let Some(cap) = self.solver.n_cap {
            opts.n_cap = cap;
        }
        if let Some(r) = self.solver.freq_ratio {
            opts.freq_ratio = r;
        }
        if let Some(s) = self.solver.safety {
            opts.safety = s;
        }
        opts.x_res = self.grid.x_res;
        Ok(opts)
    }

    pub fn certify_grid(&self, m: usize) -> CertifyGrid {
        CertifyGrid {
            x_res: self
                .grid
                .x_res
                .unwrap_or_else(|| holoapprox::corrugation::default_resolution(m)),
            fiber_res: self.grid.fiber_res.unwrap_or(8),
            tube_radius: self.grid.tube_radius.unwrap_or(0.05),
        }
    }

    pub fn seed(&self) -> u64 {
        self.solver.seed.unwrap_or(0)
    }
}
