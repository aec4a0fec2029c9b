//! Parameter sweeps over one or two axes.
//!
//! Grid points run in parallel; rows come out in grid order with the first
//! axis outermost. A point whose parameters are invalid, or whose
//! computation fails, still produces a row with the message in `error`.

use anyhow::bail;
use nesslab::closedform::correlation_amplitude;
use nesslab::output::{csv_document, fmt_f64, json_document};
use nesslab::verify::fit_multilinear;
use nesslab::{correlations, solve_two_point};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::commands::usage;
use crate::config::{OutFormat, RunConfig, SweepAxis, SweepObservable, SweepParam};
use crate::{Failure, Outcome};

/// Rejects combinations that would fail at every grid point.
fn check(config: &RunConfig) -> anyhow::Result<()> {
    let axes = &config.sweep;
    if axes.is_empty() {
        bail!("sweep needs at least one --sweep axis");
    }
    if axes.len() > 2 {
        bail!("sweep supports at most two axes, got {}", axes.len());
    }
    if axes.len() == 2 && axes[0].param == axes[1].param {
        bail!("`{}` is swept twice", axes[0].param.key());
    }
    let swept = |p: SweepParam| axes.iter().any(|a| a.param == p);
    if swept(SweepParam::Alpha) && config.nu.is_some() {
        bail!("cannot sweep alpha while --nu fixes it");
    }
    if config.prescribed && (swept(SweepParam::L2) || swept(SweepParam::R2)) {
        bail!("cannot sweep l2/r2 together with --prescribed");
    }
    for (param, set) in [
        (SweepParam::N, config.n.is_some()),
        (SweepParam::Lambda, config.lambda.is_some()),
        (SweepParam::Tl, config.tl.is_some()),
        (SweepParam::Tr, config.tr.is_some()),
        (SweepParam::Alpha, config.alpha.is_some() || config.nu.is_some()),
    ] {
        if !set && !swept(param) {
            bail!("missing required parameter: --{} (set it or sweep it)", param.key());
        }
    }
    if !config.prescribed {
        for (param, set) in [
            (SweepParam::L2, config.l2.is_some()),
            (SweepParam::R2, config.r2.is_some()),
        ] {
            if !set && !swept(param) {
                bail!("missing required parameter: --{} (or --prescribed)", param.key());
            }
        }
    }
    Ok(())
}

fn apply(config: &mut RunConfig, param: SweepParam, v: f64) {
    match param {
        SweepParam::N => config.n = Some(v as usize),
        SweepParam::Lambda => config.lambda = Some(v),
        SweepParam::Alpha => config.alpha = Some(v),
        SweepParam::Tl => config.tl = Some(v),
        SweepParam::Tr => config.tr = Some(v),
        SweepParam::L2 => config.l2 = Some(v),
        SweepParam::R2 => config.r2 = Some(v),
        SweepParam::GammaL => config.gamma_left = v,
        SweepParam::GammaR => config.gamma_right = v,
    }
}

fn grid(axes: &[SweepAxis]) -> Vec<Vec<f64>> {
    let mut points: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Observables in request order. Each is computed independently; on any
/// failure `Err` carries the values that did succeed and the first message.
/// A failed point keeps the observables computed before the error.
type PointResult = Result<Vec<f64>, (Vec<Option<f64>>, String)>;

fn evaluate(config: &RunConfig, observables: &[SweepObservable]) -> PointResult {
    let setup = config
        .resolve_alpha()
        .and_then(|alpha| Ok((alpha, config.model_params(Some(alpha))?)));
    let (alpha, p) = match setup {
        Ok(v) => v,
        Err(e) => return Err((vec![None; observables.len()], format!("{e:#}"))),
    };
    let needs_solver = observables
        .iter()
        .any(|o| matches!(o, SweepObservable::CorrMid | SweepObservable::FitResidual));
    let solved = needs_solver.then(|| solve_two_point(&p, alpha));

    let mut first_error: Option<String> = None;
    let values: Vec<Option<f64>> = observables
        .iter()
        .map(|o| {
            let v: anyhow::Result<f64> = match (o, &solved) {
                (SweepObservable::Prefactor, _) => Ok(correlation_amplitude(p.n_sites, p.lambda, alpha)),
                (SweepObservable::L2, _) => Ok(p.l2),
                (SweepObservable::R2, _) => Ok(p.r2),
                (_, Some(Err(e))) => Err(anyhow::anyhow!("{e}")),
                (SweepObservable::CorrMid, Some(Ok(m))) => {
                    let mid = p.n_sites / 2;
                    Ok(correlations(m).get(mid, mid + 1))
                }
                (SweepObservable::FitResidual, Some(Ok(m))) => fit_multilinear(m)
                    .map(|fit| fit.max_residual() / m.scale())
                    .map_err(Into::into),
                (_, None) => unreachable!("solver runs whenever a solver observable is requested"),
            };
            v.map_err(|e| {
                first_error.get_or_insert_with(|| format!("{}: {e:#}", o.name()));
            })
            .ok()
        })
        .collect();
    match first_error {
        None => Ok(values.into_iter().map(|v| v.expect("no failures")).collect()),
        Some(msg) => Err((values, msg)),
    }
}

fn axis_cell(param: SweepParam, v: f64) -> String {
    if param == SweepParam::N {
        (v as usize).to_string()
    } else {
        fmt_f64(v)
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome, Failure> {
    usage(check(config))?;
    let axes = &config.sweep;
    let observables = &config.observables;
    let points = grid(axes);

    let results: Vec<(Vec<f64>, PointResult)> = points
        .into_par_iter()
        .map(|point| {
            let mut c = config.clone();
            for (axis, &v) in axes.iter().zip(&point) {
                apply(&mut c, axis.param, v);
            }
            let r = evaluate(&c, observables);
            (point, r)
        })
        .collect();

    let mut header: Vec<&str> = axes.iter().map(|a| a.param.key()).collect();
    header.extend(observables.iter().map(|o| o.name()));
    header.push("error");

    let meta = config.metadata();
    let (body, extension) = match config.out {
        OutFormat::Csv => {
            let rows: Vec<Vec<String>> = results
                .iter()
                .map(|(point, r)| {
                    let mut row: Vec<String> = axes.iter().zip(point).map(|(a, &v)| axis_cell(a.param, v)).collect();
                    match r {
                        Ok(vals) => {
                            row.extend(vals.iter().map(|&v| fmt_f64(v)));
                            row.push(String::new());
                        }
                        Err((partial, msg)) => {
                            row.extend(partial.iter().map(|v| v.map(fmt_f64).unwrap_or_default()));
                            row.push(msg.clone());
                        }
                    }
                    row
                })
                .collect();
            (csv_document(&meta, &header, &rows), "csv")
        }
        OutFormat::Json => {
            let rows: Vec<Value> = results
                .iter()
                .map(|(point, r)| {
                    let mut obj = Map::new();
                    for (a, &v) in axes.iter().zip(point) {
                        let cell = if a.param == SweepParam::N {
                            Value::from(v as usize)
                        } else {
                            Value::from(v)
                        };
                        obj.insert(a.param.key().to_string(), cell);
                    }
                    let (vals, err): (Vec<Option<f64>>, Option<&String>) = match r {
                        Ok(vals) => (vals.iter().copied().map(Some).collect(), None),
                        Err((partial, msg)) => (partial.clone(), Some(msg)),
                    };
                    for (o, v) in observables.iter().zip(vals) {
                        obj.insert(o.name().to_string(), v.map_or(Value::Null, Value::from));
                    }
                    obj.insert("error".into(), err.map_or(Value::Null, |m| Value::from(m.as_str())));
                    Value::Object(obj)
                })
                .collect();
            (json_document(&meta, &rows), "json")
        }
    };
    Ok(Outcome {
        body,
        extension,
        ok: true,
    })
}
