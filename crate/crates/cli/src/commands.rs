//! One function per subcommand; each returns the rendered output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::anyhow;
use nesslab::closedform::{correlation_table, moment_table, theorem_coefficients, ClosedFormCoefficients};
use nesslab::output::{
    coefficient_metadata, csv_document, fmt_f64, json_document, moment_rows, profile_rows, simulation_rows, table_rows,
    Metadata,
};
use nesslab::simulate::run as run_simulation;
use nesslab::verify::{remark_suite, Remark, RemarkGrid, RemarkReport, Status};
use nesslab::{correlations, profile_closed_form, profile_solve, solve_two_point, ModelParams};
use serde::Serialize;

use crate::config::{Command, OutFormat, ReportFormat, RunConfig};
use crate::{sweep, Failure, Outcome};

pub fn run(config: &RunConfig) -> Result<Outcome, Failure> {
    match config.command {
        Command::Profile => profile(config),
        Command::Solve => solve(config),
        Command::ClosedForm => closed_form(config),
        Command::Simulate => simulate(config),
        Command::Verify => verify(config),
        Command::Sweep => sweep::run(config),
    }
}

pub fn usage<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

pub fn compute<T, E: Into<anyhow::Error>>(r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::classify(e.into()))
}

fn document<T: Serialize>(
    config: &RunConfig,
    meta: &Metadata,
    header: &[&str],
    rows: &[Vec<String>],
    payload: &T,
) -> Outcome {
    let (body, extension) = match config.out {
        OutFormat::Csv => (csv_document(meta, header, rows), "csv"),
        OutFormat::Json => (json_document(meta, payload), "json"),
    };
    Outcome {
        body,
        extension,
        ok: true,
    }
}

fn with_resolved(config: &RunConfig, p: &ModelParams, alpha: Option<f64>) -> Metadata {
    let mut meta = config.metadata();
    if let Some(a) = alpha {
        meta.push("resolved.alpha", fmt_f64(a));
    }
    meta.push("resolved.l2", fmt_f64(p.l2));
    meta.push("resolved.r2", fmt_f64(p.r2));
    meta
}

#[derive(Serialize)]
struct Entry {
    i: usize,
    j: usize,
    mu: f64,
    corr: f64,
}

fn entries(rows: &[Vec<String>]) -> Vec<Entry> {
    rows.iter()
        .map(|r| Entry {
            i: r[0].parse().expect("index column"),
            j: r[1].parse().expect("index column"),
            mu: r[2].parse().expect("round-trip float"),
            corr: r[3].parse().expect("round-trip float"),
        })
        .collect()
}

fn profile(config: &RunConfig) -> Result<Outcome, Failure> {
    let p = usage(config.profile_params())?;
    let (prof, method) = if p.has_unit_rates() {
        (compute(profile_closed_form(&p))?, "closed-form")
    } else {
        (profile_solve(&p), "tridiagonal-solve")
    };
    let mut meta = config.metadata();
    meta.push("resolved.method", method);
    let (header, rows) = profile_rows(&prof);

    #[derive(Serialize)]
    struct Payload<'a> {
        params: ModelParams,
        method: &'a str,
        profile: &'a [f64],
    }
    let payload = Payload {
        params: p,
        method,
        profile: &prof.values,
    };
    Ok(document(config, &meta, &header, &rows, &payload))
}

fn solve(config: &RunConfig) -> Result<Outcome, Failure> {
    let alpha = usage(config.resolve_alpha())?;
    let p = usage(config.model_params(Some(alpha)))?;
    let m = compute(solve_two_point(&p, alpha))?;
    let c = correlations(&m);
    let meta = with_resolved(config, &p, Some(alpha));
    let (header, rows) = moment_rows(&m, &c);

    #[derive(Serialize)]
    struct Payload<'a> {
        params: ModelParams,
        alpha: f64,
        profile: &'a [f64],
        entries: Vec<Entry>,
    }
    let payload = Payload {
        params: p,
        alpha,
        profile: &m.profile.values,
        entries: entries(&rows),
    };
    Ok(document(config, &meta, &header, &rows, &payload))
}

fn closed_form(config: &RunConfig) -> Result<Outcome, Failure> {
    if !config.prescribed && (config.l2.is_some() || config.r2.is_some()) {
        return Err(Failure::Usage(anyhow!(
            "closed-form always uses the prescribed second moments; drop --l2/--r2"
        )));
    }
    let alpha = usage(config.resolve_alpha())?;
    let mut prescribed = config.clone();
    prescribed.prescribed = true;
    let p = usage(prescribed.model_params(Some(alpha)))?;
    let coeffs = compute(theorem_coefficients(&p, alpha))?;
    let mu = compute(moment_table(&p, alpha))?;
    let corr = compute(correlation_table(&p, alpha))?;
    let mut meta = with_resolved(config, &p, Some(alpha));
    coefficient_metadata(&mut meta, &coeffs);
    let (header, rows) = table_rows(&mu, &corr);

    #[derive(Serialize)]
    struct Payload {
        params: ModelParams,
        alpha: f64,
        coefficients: ClosedFormCoefficients,
        entries: Vec<Entry>,
    }
    let payload = Payload {
        params: p,
        alpha,
        coefficients: coeffs,
        entries: entries(&rows),
    };
    Ok(document(config, &meta, &header, &rows, &payload))
}

fn simulate(config: &RunConfig) -> Result<Outcome, Failure> {
    let nu = config
        .nu
        .ok_or_else(|| Failure::Usage(anyhow!("simulate needs the full law: missing --nu")))?;
    let alpha = usage(config.resolve_alpha())?;
    let p = usage(config.model_params(Some(alpha)))?;
    let (left, right) = usage(config.reservoirs(&p))?;
    let controls = config.controls();
    let est = compute(run_simulation(&p, &nu, &left, &right, &controls))?;
    let mut meta = with_resolved(config, &p, Some(alpha));
    meta.push("resolved.burn-in", controls.burn_in);
    let (header, rows) = simulation_rows(&est);
    Ok(document(config, &meta, &header, &rows, &est))
}

fn remark_name(r: Remark) -> &'static str {
    match r {
        Remark::Theorem => "theorem",
        Remark::Kmp => "kmp",
        Remark::ZeroCorrelations => "zero-correlations",
        Remark::PositiveCorrelations => "positive-correlations",
        Remark::BoundaryRates => "boundary-rates",
    }
}

fn text_report(report: &RemarkReport) -> String {
    let mut counts: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for item in &report.items {
        let slot = match item.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Info => 2,
        };
        counts.entry(remark_name(item.remark)).or_default()[slot] += 1;
    }
    let mut s = format!("{:<22} {:>5} {:>5} {:>5}\n", "check", "pass", "fail", "info");
    for (name, [pass, fail, info]) in &counts {
        let _ = writeln!(s, "{name:<22} {pass:>5} {fail:>5} {info:>5}");
    }
    let _ = writeln!(s, "baseline fit residual (relative): {:e}", report.baseline_residual);
    for item in report.failures() {
        let p = &item.params;
        let _ = writeln!(
            s,
            "FAIL {} n={} lambda={} alpha={} tl={} tr={} gamma=({}, {}): value {:e}, threshold {:e}: {}",
            remark_name(item.remark),
            p.n_sites,
            p.lambda,
            item.alpha,
            p.t_left,
            p.t_right,
            p.gamma_left,
            p.gamma_right,
            item.value,
            item.threshold,
            item.detail
        );
    }
    s.push_str(if report.passed() {
        "verify: passed\n"
    } else {
        "verify: FAILED\n"
    });
    s
}

fn verify(config: &RunConfig) -> Result<Outcome, Failure> {
    let report = remark_suite(&RemarkGrid::default());
    let ok = report.passed();
    let (body, extension) = match config.report {
        ReportFormat::Text => {
            let mut s = format!("# nesslab {}\n", nesslab::VERSION);
            for (k, v) in &config.metadata().0 {
                let _ = writeln!(s, "# {k}={v}");
            }
            s.push_str(&text_report(&report));
            (s, "txt")
        }
        ReportFormat::Json => (json_document(&config.metadata(), &report), "json"),
    };
    Ok(Outcome { body, extension, ok })
}
