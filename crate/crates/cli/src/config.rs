//! Run configuration shared by every subcommand.
//!
//! A configuration is a flat list of `key=value` entries. The same keys are
//! accepted in a config file and, under the same names, as `--key value`
//! flags; flags are applied after the file. [`RunConfig::to_pairs`] renders
//! a configuration so that [`RunConfig::from_pairs`] gives it back exactly.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use nesslab::closedform::second_moment_prescription;
use nesslab::model::validate_alpha;
use nesslab::output::{fmt_f64, Metadata};
use nesslab::simulate::SimulationControls;
use nesslab::{ModelParams, RedistributionLaw, ReservoirKind, ReservoirLaw};

/// Largest disagreement tolerated between `--alpha` and the α of `--nu`.
pub const ALPHA_CONSISTENCY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Profile,
    Solve,
    ClosedForm,
    Simulate,
    Verify,
    Sweep,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Profile,
        Command::Solve,
        Command::ClosedForm,
        Command::Simulate,
        Command::Verify,
        Command::Sweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Profile => "profile",
            Command::Solve => "solve",
            Command::ClosedForm => "closed-form",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

impl FromStr for Command {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| anyhow!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutFormat {
    Csv,
    Json,
}

impl FromStr for OutFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => bail!("unknown output format `{s}` (expected csv or json)"),
        }
    }
}

impl fmt::Display for OutFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

impl FromStr for ReportFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            _ => bail!("unknown report format `{s}` (expected text or json)"),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Text => "text",
            Self::Json => "json",
        })
    }
}

/// Parameters a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    N,
    Lambda,
    Alpha,
    Tl,
    Tr,
    L2,
    R2,
    GammaL,
    GammaR,
}

impl SweepParam {
    pub const ALL: [SweepParam; 9] = [
        SweepParam::N,
        SweepParam::Lambda,
        SweepParam::Alpha,
        SweepParam::Tl,
        SweepParam::Tr,
        SweepParam::L2,
        SweepParam::R2,
        SweepParam::GammaL,
        SweepParam::GammaR,
    ];

    pub fn key(self) -> &'static str {
        match self {
            SweepParam::N => "n",
            SweepParam::Lambda => "lambda",
            SweepParam::Alpha => "alpha",
            SweepParam::Tl => "tl",
            SweepParam::Tr => "tr",
            SweepParam::L2 => "l2",
            SweepParam::R2 => "r2",
            SweepParam::GammaL => "gamma-l",
            SweepParam::GammaR => "gamma-r",
        }
    }
}

impl FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        SweepParam::ALL
            .into_iter()
            .find(|p| p.key() == s)
            .ok_or_else(|| anyhow!("`{s}` cannot be swept"))
    }
}

/// One swept parameter: `name=start:stop:step` or `name=v1,v2,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub param: SweepParam,
    /// The text after `=`, kept so the axis renders back unchanged.
    pub spec: String,
    pub values: Vec<f64>,
}

impl FromStr for SweepAxis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let (name, spec) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("sweep axis `{s}` is not of the form name=values"))?;
        let param: SweepParam = name.trim().parse()?;
        let spec = spec.trim().to_string();
        let values = parse_values(&spec).with_context(|| format!("sweep axis `{s}`"))?;
        if param == SweepParam::N {
            if let Some(v) = values.iter().find(|v| v.fract() != 0.0 || **v < 0.0) {
                bail!("sweep axis `{s}`: n must be a nonnegative integer, got {v}");
            }
        }
        Ok(Self { param, spec, values })
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.param.key(), self.spec)
    }
}

/// Expands `start:stop:step` (inclusive of `stop` up to rounding) or a comma
/// list. An empty string, or a range whose step points away from `stop`,
/// gives no values.
pub fn parse_values(spec: &str) -> anyhow::Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let number = |t: &str| -> anyhow::Result<f64> {
        let v: f64 = t
            .trim()
            .parse()
            .with_context(|| format!("`{}` is not a number", t.trim()))?;
        if !v.is_finite() {
            bail!("`{}` is not finite", t.trim());
        }
        Ok(v)
    };
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, stop, step] = parts[..] else {
            bail!("range `{spec}` must be start:stop:step");
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step == 0.0 {
            bail!("range `{spec}` has zero step");
        }
        let span = (stop - start) / step;
        if span < -1e-9 {
            return Ok(Vec::new());
        }
        let count = (span + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|k| start + k as f64 * step).collect())
    } else {
        spec.split(',').map(number).collect()
    }
}

/// Scalar quantities a sweep can record per grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepObservable {
    /// `(1−4α)(1−λ)/D`.
    Prefactor,
    /// Exact `C_N(m, m+1)` with `m = ⌊N/2⌋`.
    CorrMid,
    /// Largest multilinear fit residual of the exact `μ`, relative to its scale.
    FitResidual,
    L2,
    R2,
}

impl SweepObservable {
    pub const ALL: [SweepObservable; 5] = [
        SweepObservable::Prefactor,
        SweepObservable::CorrMid,
        SweepObservable::FitResidual,
        SweepObservable::L2,
        SweepObservable::R2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepObservable::Prefactor => "prefactor",
            SweepObservable::CorrMid => "corr_mid",
            SweepObservable::FitResidual => "fit_residual",
            SweepObservable::L2 => "l2",
            SweepObservable::R2 => "r2",
        }
    }
}

impl FromStr for SweepObservable {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        SweepObservable::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| anyhow!("unknown observable `{s}`"))
    }
}

/// Every key a configuration may contain, in rendering order.
pub const KEYS: [&str; 26] = [
    "command",
    "n",
    "lambda",
    "alpha",
    "nu",
    "tl",
    "tr",
    "l2",
    "r2",
    "prescribed",
    "gamma-l",
    "gamma-r",
    "reservoir-left",
    "reservoir-right",
    "events",
    "burn-in",
    "batches",
    "seed",
    "replicas",
    "out",
    "report",
    "output",
    "max-n",
    "sweep",
    "observables",
    "reservoir",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub n: Option<usize>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub nu: Option<RedistributionLaw>,
    pub tl: Option<f64>,
    pub tr: Option<f64>,
    pub l2: Option<f64>,
    pub r2: Option<f64>,
    pub prescribed: bool,
    pub gamma_left: f64,
    pub gamma_right: f64,
    pub reservoir_left: ReservoirKind,
    pub reservoir_right: ReservoirKind,
    pub events: u64,
    /// `None` means 20% of `events`.
    pub burn_in: Option<u64>,
    pub batches: usize,
    pub seed: u64,
    pub replicas: usize,
    pub out: OutFormat,
    pub report: ReportFormat,
    pub output: Option<PathBuf>,
    pub max_n: usize,
    pub sweep: Vec<SweepAxis>,
    pub observables: Vec<SweepObservable>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            n: None,
            lambda: None,
            alpha: None,
            nu: None,
            tl: None,
            tr: None,
            l2: None,
            r2: None,
            prescribed: false,
            gamma_left: 1.0,
            gamma_right: 1.0,
            reservoir_left: ReservoirKind::TwoAtom,
            reservoir_right: ReservoirKind::TwoAtom,
            events: 1_000_000,
            burn_in: None,
            batches: 64,
            seed: 0,
            replicas: 1,
            out: OutFormat::Csv,
            report: ReportFormat::Text,
            output: None,
            max_n: 200,
            sweep: Vec::new(),
            observables: SweepObservable::ALL.to_vec(),
        }
    }

    /// Applies one entry. Later entries override earlier ones.
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let v = value.trim();
        let ctx = || format!("invalid value `{v}` for `{key}`");
        fn num<T: FromStr>(v: &str) -> anyhow::Result<T>
        where
            T::Err: std::error::Error + Send + Sync + 'static,
        {
            Ok(v.parse::<T>()?)
        }
        match key {
            "command" => self.command = v.parse().with_context(ctx)?,
            "n" => self.n = Some(num(v).with_context(ctx)?),
            "lambda" => self.lambda = Some(num(v).with_context(ctx)?),
            "alpha" => self.alpha = Some(num(v).with_context(ctx)?),
            "nu" => self.nu = Some(v.parse().with_context(ctx)?),
            "tl" => self.tl = Some(num(v).with_context(ctx)?),
            "tr" => self.tr = Some(num(v).with_context(ctx)?),
            "l2" => self.l2 = Some(num(v).with_context(ctx)?),
            "r2" => self.r2 = Some(num(v).with_context(ctx)?),
            "prescribed" => self.prescribed = num(v).with_context(ctx)?,
            "gamma-l" => self.gamma_left = num(v).with_context(ctx)?,
            "gamma-r" => self.gamma_right = num(v).with_context(ctx)?,
            "reservoir-left" => self.reservoir_left = v.parse().with_context(ctx)?,
            "reservoir-right" => self.reservoir_right = v.parse().with_context(ctx)?,
            "reservoir" => {
                let kind: ReservoirKind = v.parse().with_context(ctx)?;
                self.reservoir_left = kind;
                self.reservoir_right = kind;
            }
            "events" => self.events = num(v).with_context(ctx)?,
            "burn-in" => self.burn_in = Some(num(v).with_context(ctx)?),
            "batches" => self.batches = num(v).with_context(ctx)?,
            "seed" => self.seed = num(v).with_context(ctx)?,
            "replicas" => self.replicas = num(v).with_context(ctx)?,
            "out" => self.out = v.parse()?,
            "report" => self.report = v.parse()?,
            "output" => self.output = Some(PathBuf::from(v)),
            "max-n" => self.max_n = num(v).with_context(ctx)?,
            "sweep" => {
                self.sweep = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(';').map(str::parse).collect::<anyhow::Result<_>>()?
                };
            }
            "observables" => {
                self.observables = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|o| o.trim().parse()).collect::<anyhow::Result<_>>()?
                };
            }
            _ => bail!("unknown configuration key `{key}`"),
        }
        Ok(())
    }

    pub fn from_pairs<'a>(
        command: Command,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> anyhow::Result<Self> {
        let mut c = Self::new(command);
        for (k, v) in pairs {
            c.set(k, v)?;
        }
        Ok(c)
    }

    /// Unset options are omitted and everything else is written, so the
    /// pairs alone reproduce the run.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push("command", self.command.name().to_string());
        if let Some(n) = self.n {
            push("n", n.to_string());
        }
        for (k, v) in [("lambda", self.lambda), ("alpha", self.alpha)] {
            if let Some(v) = v {
                push(k, fmt_f64(v));
            }
        }
        if let Some(nu) = &self.nu {
            push("nu", render_law(nu));
        }
        for (k, v) in [("tl", self.tl), ("tr", self.tr), ("l2", self.l2), ("r2", self.r2)] {
            if let Some(v) = v {
                push(k, fmt_f64(v));
            }
        }
        push("prescribed", self.prescribed.to_string());
        push("gamma-l", fmt_f64(self.gamma_left));
        push("gamma-r", fmt_f64(self.gamma_right));
        push("reservoir-left", self.reservoir_left.to_string());
        push("reservoir-right", self.reservoir_right.to_string());
        push("events", self.events.to_string());
        if let Some(b) = self.burn_in {
            push("burn-in", b.to_string());
        }
        push("batches", self.batches.to_string());
        push("seed", self.seed.to_string());
        push("replicas", self.replicas.to_string());
        push("out", self.out.to_string());
        push("report", self.report.to_string());
        if let Some(p) = &self.output {
            push("output", p.display().to_string());
        }
        push("max-n", self.max_n.to_string());
        push(
            "sweep",
            self.sweep.iter().map(ToString::to_string).collect::<Vec<_>>().join(";"),
        );
        push(
            "observables",
            self.observables.iter().map(|o| o.name()).collect::<Vec<_>>().join(","),
        );
        out
    }

    /// The config file text for this configuration.
    #[cfg(test)]
    pub fn to_file_string(&self) -> String {
        self.to_pairs().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// The pairs embedded in output headers. The destination path is left
    /// out so that a file's contents do not depend on where it was written.
    pub fn metadata(&self) -> Metadata {
        Metadata(self.to_pairs().into_iter().filter(|(k, _)| k != "output").collect())
    }

    /// α from `--alpha`, `--nu`, or both when they agree.
    pub fn resolve_alpha(&self) -> anyhow::Result<f64> {
        let alpha = match (self.alpha, &self.nu) {
            (Some(a), Some(nu)) => {
                if (a - nu.alpha()).abs() > ALPHA_CONSISTENCY {
                    bail!("--alpha {a} is inconsistent with --nu {nu} (alpha {})", nu.alpha());
                }
                a
            }
            (Some(a), None) => a,
            (None, Some(nu)) => nu.alpha(),
            (None, None) => bail!("missing required parameter: --alpha or --nu"),
        };
        Ok(validate_alpha(alpha)?)
    }

    fn required<T: Copy>(value: Option<T>, flag: &str) -> anyhow::Result<T> {
        value.ok_or_else(|| anyhow!("missing required parameter: --{flag}"))
    }

    pub fn n_sites(&self) -> anyhow::Result<usize> {
        let n = Self::required(self.n, "n")?;
        if n < 3 {
            bail!("--n must be at least 3, got {n}");
        }
        if n > self.max_n {
            bail!("--n {n} exceeds --max-n {}", self.max_n);
        }
        Ok(n)
    }

    /// Validated parameters with the second moments resolved. `alpha` is
    /// needed only when the moments are prescribed.
    pub fn model_params(&self, alpha: Option<f64>) -> anyhow::Result<ModelParams> {
        let n = self.n_sites()?;
        let lambda = Self::required(self.lambda, "lambda")?;
        let tl = Self::required(self.tl, "tl")?;
        let tr = Self::required(self.tr, "tr")?;
        let base = ModelParams::new(n, lambda, tl, tr, 0.0, 0.0).with_gammas(self.gamma_left, self.gamma_right);
        let (l2, r2) = if self.prescribed {
            if self.l2.is_some() || self.r2.is_some() {
                bail!("--l2/--r2 cannot be combined with --prescribed");
            }
            let alpha = alpha.ok_or_else(|| anyhow!("--prescribed needs --alpha or --nu"))?;
            second_moment_prescription(&base, alpha)?
        } else {
            (
                self.l2
                    .ok_or_else(|| anyhow!("missing required parameter: --l2 (or --prescribed)"))?,
                self.r2
                    .ok_or_else(|| anyhow!("missing required parameter: --r2 (or --prescribed)"))?,
            )
        };
        Ok(base.with_second_moments(l2, r2).validate()?)
    }

    /// Parameters for the profile, which depends on neither λ nor the second
    /// moments. Unset values default to λ = 0 and deterministic reservoirs.
    pub fn profile_params(&self) -> anyhow::Result<ModelParams> {
        let n = self.n_sites()?;
        let tl = Self::required(self.tl, "tl")?;
        let tr = Self::required(self.tr, "tr")?;
        let p = ModelParams::new(
            n,
            self.lambda.unwrap_or(0.0),
            tl,
            tr,
            self.l2.unwrap_or(tl * tl),
            self.r2.unwrap_or(tr * tr),
        )
        .with_gammas(self.gamma_left, self.gamma_right);
        Ok(p.validate()?)
    }

    pub fn controls(&self) -> SimulationControls {
        let mut c = SimulationControls::new(self.events, self.seed);
        if let Some(b) = self.burn_in {
            c.burn_in = b;
        }
        c.batches = self.batches;
        c.replicas = self.replicas;
        c
    }

    /// Reservoir laws of the configured kinds carrying the moments of `p`.
    pub fn reservoirs(&self, p: &ModelParams) -> anyhow::Result<(ReservoirLaw, ReservoirLaw)> {
        let left = ReservoirLaw::new(self.reservoir_left, p.t_left, p.l2).context("left reservoir")?;
        let right = ReservoirLaw::new(self.reservoir_right, p.t_right, p.r2).context("right reservoir")?;
        Ok((left, right))
    }
}

/// Law names with their argument in round-trip float formatting.
fn render_law(nu: &RedistributionLaw) -> String {
    use nesslab::RedistributionKind as K;
    match nu.kind() {
        K::BetaSymmetric { k } => format!("beta:{}", fmt_f64(k)),
        K::TwoAtomSymmetric { p } => format!("two-atom:{}", fmt_f64(p)),
        _ => nu.to_string(),
    }
}

/// Reads `key=value` lines. Blank lines and lines starting with `#` are
/// skipped; the first `=` separates key from value.
pub fn parse_config_text(text: &str) -> anyhow::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value, got `{line}`", lineno + 1))?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            bail!("line {}: unknown configuration key `{k}`", lineno + 1);
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranges_and_lists() {
        let v = parse_values("0:0.9:0.1").unwrap();
        assert_eq!(v.len(), 10);
        assert!((v[9] - 0.9).abs() < 1e-12);
        assert_eq!(parse_values("1,2.5,4").unwrap(), vec![1.0, 2.5, 4.0]);
        assert!(parse_values("").unwrap().is_empty());
        assert!(parse_values("1:0:0.1").unwrap().is_empty());
        assert_eq!(parse_values("1:0:-0.5").unwrap(), vec![1.0, 0.5, 0.0]);
        assert!(parse_values("0:1:0").is_err());
        assert!(parse_values("0:1").is_err());
        assert!(parse_values("a,b").is_err());
    }

    #[test]
    fn sweep_axis_parses() {
        let a: SweepAxis = "lambda=0:0.5:0.25".parse().unwrap();
        assert_eq!(a.param, SweepParam::Lambda);
        assert_eq!(a.values, vec![0.0, 0.25, 0.5]);
        assert_eq!(a.to_string(), "lambda=0:0.5:0.25");
        assert!("n=3,4.5".parse::<SweepAxis>().is_err());
        assert!("nu=1,2".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn alpha_resolution() {
        let mut c = RunConfig::new(Command::Solve);
        assert!(c.resolve_alpha().is_err());
        c.nu = Some("uniform".parse().unwrap());
        assert_eq!(c.resolve_alpha().unwrap(), 1.0 / 6.0);
        c.alpha = Some(0.166666);
        assert_eq!(c.resolve_alpha().unwrap(), 0.166666);
        c.alpha = Some(0.2);
        assert!(c.resolve_alpha().is_err());
        c.nu = None;
        c.alpha = Some(0.3);
        assert!(c.resolve_alpha().is_err());
    }

    #[test]
    fn params_need_their_inputs() {
        let mut c = RunConfig::new(Command::Solve);
        c.n = Some(2);
        assert!(c.model_params(None).unwrap_err().to_string().contains("at least 3"));
        c.n = Some(5);
        assert!(c.model_params(None).unwrap_err().to_string().contains("--lambda"));
        c.lambda = Some(0.3);
        c.tl = Some(1.0);
        c.tr = Some(2.0);
        assert!(c.model_params(None).unwrap_err().to_string().contains("--l2"));
        c.prescribed = true;
        let p = c.model_params(Some(1.0 / 6.0)).unwrap();
        assert!(p.l2 > 1.0 && p.r2 > 4.0);
        c.l2 = Some(1.0);
        assert!(c.model_params(Some(1.0 / 6.0)).is_err());
        c.n = Some(201);
        c.l2 = None;
        assert!(c
            .model_params(Some(1.0 / 6.0))
            .unwrap_err()
            .to_string()
            .contains("max-n"));
    }

    #[test]
    fn config_text_skips_comments() {
        let pairs = parse_config_text("# header\n\nn=5\nnu=beta:2.0\nreservoir=two-atom\n").unwrap();
        assert_eq!(pairs.len(), 3);
        let c = RunConfig::from_pairs(Command::Simulate, pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))).unwrap();
        assert_eq!(c.n, Some(5));
        assert_eq!(c.nu.unwrap().alpha(), 2.0 / 10.0);
        assert!(parse_config_text("bogus=1").is_err());
        assert!(parse_config_text("n 5").is_err());
    }

    fn float() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6..1e6f64,
            (0.0..1.0f64).prop_map(|x| x * 1e-12),
            Just(0.0),
            Just(1.0 / 3.0),
        ]
    }

    fn law() -> impl Strategy<Value = RedistributionLaw> {
        prop_oneof![
            Just("uniform".to_string()),
            Just("delta-half".to_string()),
            (1e-3..50.0f64).prop_map(|k| format!("beta:{}", fmt_f64(k))),
            (1e-3..0.5f64).prop_map(|p| format!("two-atom:{}", fmt_f64(p))),
        ]
        .prop_map(|s| s.parse().unwrap())
    }

    fn kind() -> impl Strategy<Value = ReservoirKind> {
        prop_oneof![
            Just(ReservoirKind::Deterministic),
            Just(ReservoirKind::Gamma),
            Just(ReservoirKind::TwoAtom),
        ]
    }

    fn axis() -> impl Strategy<Value = SweepAxis> {
        prop_oneof![
            Just("lambda=0:0.9:0.1"),
            Just("alpha=0.1,0.2,0.25"),
            Just("n=3:12:3"),
            Just("tr="),
        ]
        .prop_map(|s| s.parse().unwrap())
    }

    fn config() -> impl Strategy<Value = RunConfig> {
        let model = (
            0..6usize,
            proptest::option::of(0..500usize),
            proptest::option::of(float()),
            proptest::option::of(float()),
            proptest::option::of(law()),
            proptest::option::of(float()),
            proptest::option::of(float()),
            proptest::option::of(float()),
            proptest::option::of(float()),
            any::<bool>(),
            float(),
            float(),
        );
        let run = (
            kind(),
            kind(),
            any::<u64>(),
            proptest::option::of(any::<u64>()),
            0..1000usize,
            any::<u64>(),
            0..64usize,
            any::<bool>(),
            any::<bool>(),
            proptest::option::of("[a-z0-9_/.]{1,20}"),
            0..10_000usize,
        );
        let sweep = (
            proptest::collection::vec(axis(), 0..3),
            proptest::sample::subsequence(SweepObservable::ALL.to_vec(), 0..=5),
        );
        (model, run, sweep).prop_map(|(m, r, s)| RunConfig {
            command: Command::ALL[m.0],
            n: m.1,
            lambda: m.2,
            alpha: m.3,
            nu: m.4,
            tl: m.5,
            tr: m.6,
            l2: m.7,
            r2: m.8,
            prescribed: m.9,
            gamma_left: m.10,
            gamma_right: m.11,
            reservoir_left: r.0,
            reservoir_right: r.1,
            events: r.2,
            burn_in: r.3,
            batches: r.4,
            seed: r.5,
            replicas: r.6,
            out: if r.7 { OutFormat::Json } else { OutFormat::Csv },
            report: if r.8 { ReportFormat::Json } else { ReportFormat::Text },
            output: r.9.map(PathBuf::from),
            max_n: r.10,
            sweep: s.0,
            observables: s.1,
        })
    }

    proptest! {
        #[test]
        fn config_round_trips(c in config()) {
            let text = c.to_file_string();
            let pairs = parse_config_text(&text).unwrap();
            let back = RunConfig::from_pairs(
                Command::Profile,
                pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())),
            )
            .unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
