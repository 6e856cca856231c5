use crate::error::{Error, Result};

/// Machine-readable verification certificate, serialized as a fixed-order
/// `key: value` text document (schema `holoapprox-certificate v1`).
///
/// A PASS certificate has every margin strictly positive and the inflation
/// rule satisfied: worst margin > Lipschitz · spacing · √dimension, so the
/// grid result extends between grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub pass: bool,
    pub eps: f64,
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub x_res: usize,
    pub fiber_res: usize,
    pub tube_radius: f64,
    pub x_margin: f64,
    pub freqs: Vec<u32>,
    pub delta_sup: f64,
    pub delta_margin: f64,
    pub zeroth_margin: f64,
    pub first_margin: f64,
    pub worst_clause: String,
    pub worst_point: Vec<f64>,
    pub lipschitz_delta: f64,
    pub lipschitz_jet: f64,
    pub inflation_delta: f64,
    pub inflation_jet: f64,
    pub inflation_ok: bool,
    pub seed: u64,
}

const HEADER: &str = "holoapprox-certificate v1";

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl Certificate {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(HEADER);
        out.push('\n');
        let mut field = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(": ");
            out.push_str(&v);
            out.push('\n');
        };
        field("pass", self.pass.to_string());
        field("eps", self.eps.to_string());
        field("m", self.m.to_string());
        field("k", self.k.to_string());
        field("n", self.n.to_string());
        field("x_res", self.x_res.to_string());
        field("fiber_res", self.fiber_res.to_string());
        field("tube_radius", self.tube_radius.to_string());
        field("x_margin", self.x_margin.to_string());
        field("freqs", join(&self.freqs));
        field("delta_sup", self.delta_sup.to_string());
        field("delta_margin", self.delta_margin.to_string());
        field("zeroth_margin", self.zeroth_margin.to_string());
        field("first_margin", self.first_margin.to_string());
        field("worst_clause", self.worst_clause.clone());
        field("worst_point", join(&self.worst_point));
        field("lipschitz_delta", self.lipschitz_delta.to_string());
        field("lipschitz_jet", self.lipschitz_jet.to_string());
        field("inflation_delta", self.inflation_delta.to_string());
        field("inflation_jet", self.inflation_jet.to_string());
        field("inflation_ok", self.inflation_ok.to_string());
        field("seed", self.seed.to_string());
        out
    }

    pub fn from_text(text: &str) -> Result<Certificate> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header.trim() != HEADER {
            return Err(Error::InvalidInput(format!(
                "unrecognized certificate header `{header}`"
            )));
        }
        let mut get = std::collections::BTreeMap::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once(':').ok_or_else(|| {
                Error::InvalidInput(format!("malformed certificate line `{line}`"))
            })?;
            get.insert(k.trim().to_string(), v.trim().to_string());
        }
        let want = |k: &str| -> Result<String> {
            get.get(k)
                .cloned()
                .ok_or_else(|| Error::InvalidInput(format!("certificate missing field `{k}`")))
        };
        let parse_f = |k: &str| -> Result<f64> {
            want(k)?
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad float in field `{k}`")))
        };
        let parse_u = |k: &str| -> Result<usize> {
            want(k)?
                .parse()
                .map_err(|_| Error::InvalidInput(format!("bad integer in field `{k}`")))
        };
        let parse_list = |k: &str| -> Result<Vec<f64>> {
            let raw = want(k)?;
            if raw.is_empty() {
                return Ok(vec![]);
            }
            raw.split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidInput(format!("bad list in field `{k}`")))
                })
                .collect()
        };
        let freqs_raw = want("freqs")?;
        let freqs = if freqs_raw.is_empty() {
            vec![]
        } else {
            freqs_raw
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| Error::InvalidInput("bad freqs list".into()))
                })
                .collect::<Result<Vec<u32>>>()?
        };
        Ok(Certificate {
            pass: want("pass")? == "true",
            eps: parse_f("eps")?,
            m: parse_u("m")?,
            k: parse_u("k")?,
            n: parse_u("n")?,
            x_res: parse_u("x_res")?,
            fiber_res: parse_u("fiber_res")?,
            tube_radius: parse_f("tube_radius")?,
            x_margin: parse_f("x_margin")?,
            freqs,
            delta_sup: parse_f("delta_sup")?,
            delta_margin: parse_f("delta_margin")?,
            zeroth_margin: parse_f("zeroth_margin")?,
            first_margin: parse_f("first_margin")?,
            worst_clause: want("worst_clause")?,
            worst_point: parse_list("worst_point")?,
            lipschitz_delta: parse_f("lipschitz_delta")?,
            lipschitz_jet: parse_f("lipschitz_jet")?,
            inflation_delta: parse_f("inflation_delta")?,
            inflation_jet: parse_f("inflation_jet")?,
            inflation_ok: want("inflation_ok")? == "true",
            seed: want("seed")?
                .parse()
                .map_err(|_| Error::InvalidInput("bad seed".into()))?,
        })
    }
}
