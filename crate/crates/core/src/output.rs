//! CSV and JSON rendering.
//!
//! CSV files start with `#`-prefixed metadata lines: the crate version, then
//! one `# key=value` line per resolved configuration entry. Numbers are
//! written with Rust's shortest round-trip formatting, so identical inputs
//! give byte-identical files.

use serde::Serialize;

use crate::closedform::ClosedFormCoefficients;
use crate::profile::Profile;
use crate::simulate::SimulationEstimate;
use crate::solver::{CorrelationMatrix, MomentMatrix, PairIndex};
use crate::VERSION;

/// Ordered `key=value` pairs describing how an output was produced.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Metadata(pub Vec<(String, String)>);

impl Metadata {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Renders a CSV document with the metadata header.
pub fn csv_document(meta: &Metadata, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("# nesslab {VERSION}\n");
    for (k, v) in &meta.0 {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    let body = w.into_inner().expect("flushing to memory");
    out.push_str(std::str::from_utf8(&body).expect("csv output is utf-8"));
    out
}

/// `{"version", "config", ...payload}` as pretty JSON.
pub fn json_document<T: Serialize>(meta: &Metadata, payload: &T) -> String {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        version: &'a str,
        config: serde_json::Map<String, serde_json::Value>,
        result: &'a T,
    }
    let config = meta
        .0
        .iter()
        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
        .collect();
    let doc = Doc {
        version: VERSION,
        config,
        result: payload,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("outputs serialize");
    s.push('\n');
    s
}

pub fn profile_rows(profile: &Profile) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let rows = profile
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), fmt_f64(*v)])
        .collect();
    (vec!["i", "e_n"], rows)
}

/// One row per `0 <= i <= j <= N+1`, ghost entries filled by convention.
pub fn moment_rows(m: &MomentMatrix, c: &CorrelationMatrix) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let n = m.n_sites();
    let mut rows = Vec::new();
    for i in 0..=n + 1 {
        for j in i..=n + 1 {
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(m.extended(i, j)),
                fmt_f64(c.get(i, j)),
            ]);
        }
    }
    (vec!["i", "j", "mu", "corr"], rows)
}

/// Same layout as [`moment_rows`] from dense `(N+2)²` tables.
pub fn table_rows(mu: &[Vec<f64>], corr: &[Vec<f64>]) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let size = mu.len();
    let mut rows = Vec::new();
    for i in 0..size {
        for j in i..size {
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(mu[i][j]),
                fmt_f64(corr[i][j]),
            ]);
        }
    }
    (vec!["i", "j", "mu", "corr"], rows)
}

pub fn coefficient_metadata(meta: &mut Metadata, c: &ClosedFormCoefficients) {
    for (k, v) in [
        ("coef.a", c.a),
        ("coef.b", c.b),
        ("coef.c", c.c),
        ("coef.d", c.d),
        ("coef.e", c.e),
        ("coef.f", c.f),
        ("coef.g", c.g),
        ("coef.D", c.d_factor),
        ("coef.S", c.s_factor),
    ] {
        meta.push(k, fmt_f64(v));
    }
}

/// Profile and moment estimates with their standard errors.
pub fn simulation_rows(est: &SimulationEstimate) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let n = est.params.n_sites;
    let mut rows = Vec::new();
    let row = |kind: &str, i: usize, j: Option<usize>, e: &crate::simulate::MomentEstimate| {
        vec![
            kind.to_string(),
            i.to_string(),
            j.map(|j| j.to_string()).unwrap_or_default(),
            fmt_f64(e.mean),
            fmt_f64(e.std_error),
            e.n_batches.to_string(),
            fmt_f64(e.sim_time),
        ]
    };
    for i in 1..=n {
        rows.push(row("profile", i, None, est.profile_at(i)));
    }
    for (i, j) in PairIndex::new(n).pairs() {
        rows.push(row("moment", i, Some(j), est.moment(i, j)));
    }
    (
        vec!["observable", "i", "j", "mean", "std_error", "n_batches", "sim_time"],
        rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_rows() {
        let mut meta = Metadata::default();
        meta.push("n", 3);
        meta.push("seed", 7);
        let doc = csv_document(&meta, &["i", "v"], &[vec!["0".into(), fmt_f64(0.1)]]);
        let lines: Vec<&str> = doc.lines().collect();
        assert_eq!(lines[0], format!("# nesslab {VERSION}"));
        assert_eq!(&lines[1..], &["# n=3", "# seed=7", "i,v", "0,0.1"]);
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-20, 12345.678, 0.0] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn json_embeds_config() {
        let mut meta = Metadata::default();
        meta.push("lambda", 0.3);
        let doc = json_document(&meta, &vec![1.0, 2.0]);
        let v: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["config"]["lambda"], "0.3");
        assert_eq!(v["result"][1], 2.0);
    }
}
