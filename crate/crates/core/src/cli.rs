//! The `puritylab` command line.
//!
//! Every output embeds the parsed command line as a [`RunConfig`] together with
//! [`SCHEMA_VERSION`]; `puritylab replay FILE` reruns the configuration stored
//! in a JSON output. Exit codes: 0 when nothing is violated, 2 when some report
//! is violated (exploratory reports excluded), 1 on usage or input errors.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::channels::{identity_map, random_channel, CPMap, ChannelSpec};
use crate::error::{Error, Result};
use crate::matlin::{exponent_serde, NormParams};
use crate::purity::{potential_lower, purity, purity_by_method, Method, PurityConfig, PurityEstimate};
use crate::semigroup::lsc_report;
use crate::verify::{
    alpha_factor, check_multiplicativity, check_thm1, check_thm2, hunt_gap, run_suite, suite_config, BoundReport,
    Suite, Verdict,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "PURITYLAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum MethodArg {
    #[default]
    Auto,
    Oracle,
    Gradient,
    FixedPoint,
    Analytic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Auto => Method::Dispatch,
            MethodArg::Oracle => Method::Oracle,
            MethodArg::Gradient => Method::Gradient,
            MethodArg::FixedPoint => Method::FixedPoint,
            MethodArg::Analytic => Method::Analytic,
        }
    }
}

/// The full command line; serialized into every output.
#[derive(Clone, Debug, PartialEq, Parser, Serialize, Deserialize)]
#[command(name = "puritylab", version, about = "Output purity of completely positive maps", long_about = None)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Output format
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,

    /// Write to FILE instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Args, Serialize, Deserialize)]
pub struct Exponents {
    /// Input exponent q ≥ 1 (`inf` allowed)
    #[arg(long)]
    #[serde(with = "exponent_serde")]
    pub q: f64,
    /// Output exponent p ≥ 1 (`inf` allowed)
    #[arg(long)]
    #[serde(with = "exponent_serde")]
    pub p: f64,
}

/// Optimizer budget. Unset fields keep the command's default.
#[derive(Clone, Debug, Default, PartialEq, Args, Serialize, Deserialize)]
pub struct Budget {
    #[arg(long, value_enum, default_value = "auto")]
    #[serde(default)]
    pub method: MethodArg,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Oracle samples
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    #[serde(default)]
    pub seed: u64,
}

impl Budget {
    fn apply(&self, base: PurityConfig) -> PurityConfig {
        let mut c = base.with_seed(self.seed);
        if let Some(r) = self.restarts {
            c.restarts = r;
        }
        if let Some(s) = self.samples {
            c.oracle_samples = s;
        }
        if let Some(m) = self.max_iter {
            c.max_iter = m;
        }
        if let Some(t) = self.tol {
            c.tol = t;
        }
        c
    }

    fn config(&self) -> PurityConfig {
        self.apply(PurityConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Estimate ‖Φ‖_{q→p}
    Norm {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        exponents: Exponents,
        #[command(flatten)]
        budget: Budget,
    },
    /// Print the Choi matrix
    Choi {
        #[arg(long)]
        channel: PathBuf,
    },
    /// Potential purity lower bound checked against the closed-form upper bounds
    Bound {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        exponents: Exponents,
        /// Largest ancilla dimension
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        /// Ancilla maps tried per dimension
        #[arg(long, default_value_t = 4)]
        omegas: usize,
        #[command(flatten)]
        budget: Budget,
    },
    /// Run a verification suite (or `all`)
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        budget: Budget,
    },
    /// Sweep the depolarizing parameter and/or exponent grids
    Scan {
        #[arg(long)]
        channel: PathBuf,
        /// `start:stop:step`, depolarizing specs only
        #[arg(long)]
        lambda: Option<String>,
        /// Comma-separated q values
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        #[serde(with = "exponent_list")]
        q: Vec<f64>,
        /// Comma-separated p values
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        #[serde(with = "exponent_list")]
        p: Vec<f64>,
        #[command(flatten)]
        budget: Budget,
    },
    /// Search for ‖Φ⊗Φ̄‖_{1→p} > ‖Φ‖²_{1→p} among random channels
    Hunt {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        #[serde(with = "exponent_serde")]
        p: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[command(flatten)]
        budget: Budget,
    },
    /// Log-Sobolev constants of the depolarizing semigroup
    Lsc {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        budget: Budget,
    },
    /// Rerun the configuration stored in a JSON output
    Replay { file: PathBuf },
}

mod exponent_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct E(#[serde(with = "super::exponent_serde")] f64);

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|x| E(*x)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<E>::deserialize(d)?.into_iter().map(|e| e.0).collect())
    }
}

/// Result of one command before rendering.
#[derive(Clone, Debug)]
pub struct Emission {
    pub result: Value,
    pub csv: String,
    pub text: String,
    /// Some non-exploratory report is violated.
    pub violated: bool,
}

fn load_spec(path: &Path) -> Result<ChannelSpec> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    ChannelSpec::from_json_str(&s).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn load_map(path: &Path) -> Result<(ChannelSpec, CPMap)> {
    let spec = load_spec(path)?;
    let map = spec.build()?;
    Ok((spec, map))
}

fn csv_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v > 0.0 {
        "inf".into()
    } else {
        String::new()
    }
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated => "violated",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn any_violated(reports: &[BoundReport]) -> bool {
    reports.iter().any(|r| r.is_violated() && !r.exploratory)
}

fn reports_csv(reports: &[BoundReport]) -> String {
    let mut s = String::from("claim_id,q,p,lhs,rhs,slack,tolerance,verdict,exploratory\n");
    for r in reports {
        let claim = serde_json::to_value(r.claim_id).unwrap();
        let (q, p) = r.params.map_or((String::new(), String::new()), |np| (csv_num(np.q()), csv_num(np.p())));
        let _ = writeln!(
            s,
            "{},{q},{p},{},{},{},{},{},{}",
            claim.as_str().unwrap_or_default(),
            csv_num(r.lhs),
            csv_num(r.rhs),
            csv_num(r.slack),
            csv_num(r.tolerance),
            verdict_name(r.verdict),
            r.exploratory
        );
    }
    s
}

fn reports_text(reports: &[BoundReport]) -> String {
    let mut s = String::new();
    for r in reports {
        let _ = writeln!(
            s,
            "{:<20} {:<12} lhs={:.10} rhs={:.10} slack={:+.3e}{}",
            serde_json::to_value(r.claim_id).unwrap().as_str().unwrap_or_default(),
            verdict_name(r.verdict),
            r.lhs,
            r.rhs,
            r.slack,
            if r.exploratory { " (exploratory)" } else { "" }
        );
    }
    let v = reports.iter().filter(|r| r.is_violated()).count();
    let i = reports.iter().filter(|r| r.verdict == Verdict::Inconclusive).count();
    let _ = writeln!(s, "{} reports: {} holds, {i} inconclusive, {v} violated", reports.len(), reports.len() - v - i);
    s
}

fn reports_emission(reports: Vec<BoundReport>, extra: Value) -> Emission {
    let violated = any_violated(&reports);
    let csv = reports_csv(&reports);
    let text = reports_text(&reports);
    let mut result = json!({ "reports": reports });
    if let (Value::Object(m), Value::Object(e)) = (&mut result, extra) {
        m.extend(e);
    }
    Emission { result, csv, text, violated }
}

fn params(e: &Exponents) -> Result<NormParams> {
    NormParams::new(e.q, e.p)
}

fn cmd_norm(channel: &Path, exponents: &Exponents, budget: &Budget) -> Result<Emission> {
    let (spec, phi) = load_map(channel)?;
    let params = params(exponents)?;
    let est: PurityEstimate = purity_by_method(&phi, params, budget.method.into(), &budget.config())?;
    let csv = format!(
        "q,p,estimate,method,restarts_used,iterations,converged,dispersion,seed\n{},{},{},{},{},{},{},{},{}\n",
        csv_num(params.q()),
        csv_num(params.p()),
        csv_num(est.value),
        serde_json::to_value(est.method).unwrap().as_str().unwrap_or_default(),
        est.restarts_used,
        est.iterations,
        est.converged,
        csv_num(est.dispersion),
        est.seed
    );
    let text = format!(
        "‖Φ‖_{{{}→{}}} ≥ {:.12}  ({:?}, {} restarts, converged = {})\n",
        params.q(),
        params.p(),
        est.value,
        est.method,
        est.restarts_used,
        est.converged
    );
    Ok(Emission {
        result: json!({ "channel": spec, "notes": spec.notes(), "estimate": est }),
        csv,
        text,
        violated: false,
    })
}

fn cmd_choi(channel: &Path) -> Result<Emission> {
    let (spec, phi) = load_map(channel)?;
    let x = phi.choi().as_matrix();
    let mut csv = String::from("row,col,re,im\n");
    let mut text = format!("Choi matrix, d_in = {}, d_out = {}\n", phi.d_in(), phi.d_out());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let z = x[(i, j)];
            let _ = writeln!(csv, "{i},{j},{},{}", csv_num(z.re), csv_num(z.im));
            let _ = write!(text, "{:>9.5}{:+.5}i ", z.re, z.im);
        }
        text.push('\n');
    }
    Ok(Emission {
        result: json!({ "channel": spec, "d_in": phi.d_in(), "d_out": phi.d_out(), "choi": x }),
        csv,
        text,
        violated: false,
    })
}

fn cmd_bound(channel: &Path, exponents: &Exponents, n_max: usize, omegas: usize, budget: &Budget) -> Result<Emission> {
    let (spec, phi) = load_map(channel)?;
    let params = params(exponents)?;
    let config = budget.config();
    let mut reports = Vec::new();
    let potential = if params.q() < params.p() {
        let pot = potential_lower(&phi, params, n_max, omegas, &config)?;
        reports.push(check_thm1(&phi, params, &pot)?);
        if params.q() <= 2.0 && params.p() >= 2.0 {
            reports.push(check_thm2(&phi, params, &pot, &config)?);
        }
        Some(pot)
    } else {
        // q ≥ p: potential purity equals purity; check it on two ancillas
        let n = phi.d_in().min(3);
        for omega in [identity_map(n), random_channel(n, n, n, config.seed)?] {
            reports.push(check_multiplicativity(&phi, &omega, params, &config)?);
        }
        None
    };
    let extra = json!({
        "channel": spec,
        "alpha": alpha_factor(params, phi.d_in(), phi.d_out()).ok(),
        "choi_frobenius": phi.choi_frobenius(),
        "potential": potential,
    });
    Ok(reports_emission(reports, extra))
}

fn suites_from(name: &str) -> Result<Vec<Suite>> {
    if name == "all" {
        Ok(Suite::ALL.to_vec())
    } else {
        name.split(',').map(|s| Suite::parse(s.trim())).collect()
    }
}

fn cmd_verify(suite: &str, trials: usize, budget: &Budget) -> Result<Emission> {
    let config = budget.apply(suite_config(budget.seed));
    let mut reports = Vec::new();
    let mut per_suite = Vec::new();
    for s in suites_from(suite)? {
        let r = run_suite(s, trials, budget.seed, &config)?;
        per_suite.push(json!({
            "suite": s.name(),
            "reports": r.len(),
            "violated": r.iter().filter(|x| x.is_violated()).count(),
            "inconclusive": r.iter().filter(|x| x.verdict == Verdict::Inconclusive).count(),
        }));
        reports.extend(r);
    }
    Ok(reports_emission(reports, json!({ "summary": per_suite })))
}

/// `start:stop:step`, endpoints included.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>().map_err(|e| Error::InvalidInput(format!("range {s:?}: {e}"))))
        .collect::<Result<_>>()?;
    let (a, b, step) = match parts[..] {
        [a] => (a, a, 1.0),
        [a, b, step] => (a, b, step),
        _ => return Err(Error::InvalidInput(format!("range {s:?} must be start:stop:step"))),
    };
    if step.is_nan() || step <= 0.0 || b < a || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInput(format!("range {s:?} needs step > 0 and start <= stop")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    // rounded to 12 decimals so that 0.1 steps print as typed
    Ok((0..=n).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
}

#[derive(Clone, Debug, Serialize)]
struct ScanRow {
    lambda: Option<f64>,
    #[serde(with = "exponent_serde")]
    q: f64,
    #[serde(with = "exponent_serde")]
    p: f64,
    estimate: f64,
    thm1_bound: Option<f64>,
    thm2_bound: Option<f64>,
    slack: Option<f64>,
    verdict: Verdict,
    estimate_certificate: PurityEstimate,
}

fn cmd_scan(channel: &Path, lambda: Option<&str>, qs: &[f64], ps: &[f64], budget: &Budget) -> Result<Emission> {
    let spec = load_spec(channel)?;
    let lambdas: Vec<Option<f64>> = match lambda {
        None => vec![None],
        Some(r) => {
            if !matches!(spec, ChannelSpec::Depolarizing { .. }) {
                return Err(Error::InvalidInput("--lambda needs a depolarizing channel spec".into()));
            }
            parse_range(r)?.into_iter().map(Some).collect()
        }
    };
    if qs.is_empty() || ps.is_empty() {
        return Err(Error::InvalidInput("--q and --p need at least one value".into()));
    }
    let config = budget.config();
    let mut rows = Vec::new();
    for lam in &lambdas {
        let phi = match (&spec, lam) {
            (ChannelSpec::Depolarizing { d, .. }, Some(l)) => {
                ChannelSpec::Depolarizing { d: *d, lambda: *l }.build()?
            }
            _ => spec.build()?,
        };
        for &q in qs {
            for &p in ps {
                let params = NormParams::new(q, p)?;
                let est = purity_by_method(&phi, params, budget.method.into(), &config)?;
                let frob = phi.choi_frobenius();
                let thm1 = alpha_factor(params, phi.d_in(), phi.d_out()).ok().map(|a| a * frob);
                let thm2 = if q <= 2.0 && p >= 2.0 {
                    Some(purity(&phi, NormParams::new(p, p)?, &config)?.value.min(frob))
                } else {
                    None
                };
                let bound = match (thm1, thm2) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                };
                let (slack, verdict) = match bound {
                    Some(b) => {
                        let r = BoundReport::one_sided(
                            crate::verify::ClaimId::Thm1,
                            est.value,
                            b,
                            crate::verify::BOUND_TOL,
                        );
                        (Some(r.slack), r.verdict)
                    }
                    None => (None, Verdict::Holds),
                };
                rows.push(ScanRow {
                    lambda: *lam,
                    q,
                    p,
                    estimate: est.value,
                    thm1_bound: thm1,
                    thm2_bound: thm2,
                    slack,
                    verdict,
                    estimate_certificate: est,
                });
            }
        }
    }
    let opt = |v: Option<f64>| v.map(csv_num).unwrap_or_default();
    let mut csv = String::from("lambda,q,p,estimate,thm1_bound,thm2_bound,slack,verdict\n");
    let mut text = String::new();
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            opt(r.lambda),
            csv_num(r.q),
            csv_num(r.p),
            csv_num(r.estimate),
            opt(r.thm1_bound),
            opt(r.thm2_bound),
            opt(r.slack),
            verdict_name(r.verdict)
        );
        let _ = writeln!(
            text,
            "lambda={:<6} q={:<4} p={:<4} estimate={:.10} verdict={}",
            opt(r.lambda),
            r.q,
            r.p,
            r.estimate,
            verdict_name(r.verdict)
        );
    }
    let violated = rows.iter().any(|r| r.verdict == Verdict::Violated);
    Ok(Emission { result: json!({ "channel": spec, "rows": rows }), csv, text, violated })
}

fn cmd_hunt(d: usize, p: f64, trials: usize, budget: &Budget) -> Result<Emission> {
    let config = budget.apply(suite_config(budget.seed));
    let findings = hunt_gap(d, p, trials, budget.seed, &config)?;
    let mut e = reports_emission(findings, json!({ "trials": trials, "d": d, "p": p }));
    if let Value::Object(m) = &mut e.result {
        let reports = m.remove("reports").unwrap_or(Value::Null);
        m.insert("findings".into(), reports);
    }
    Ok(e)
}

fn cmd_lsc(d: usize, budget: &Budget) -> Result<Emission> {
    let config = budget.apply(suite_config(budget.seed));
    let r = lsc_report(d, &config)?;
    let csv = format!(
        "d,alpha2_single,alpha2_product_bound,choi_nonnegative,sound\n{},{},{},{},{}\n",
        r.d,
        csv_num(r.alpha2_single),
        csv_num(r.alpha2_product_bound),
        r.choi_nonnegative,
        r.sound
    );
    let text = format!(
        "d = {}\nalpha2 (single)        = {:.6}\nalpha2 (product bound) = {:.6}\nmultiplicativity sound = {}\n(natural logarithms)\n{}",
        r.d,
        r.alpha2_single,
        r.alpha2_product_bound,
        r.sound,
        reports_text(&r.multiplicativity_checks)
    );
    Ok(Emission { violated: !r.sound, result: serde_json::to_value(&r).expect("report serializes"), csv, text })
}

fn read_replay(file: &Path) -> Result<RunConfig> {
    let s = std::fs::read_to_string(file).map_err(|e| Error::InvalidInput(format!("{}: {e}", file.display())))?;
    let v: Value = serde_json::from_str(&s).map_err(|e| Error::Parse(format!("{}: {e}", file.display())))?;
    let config = v.get("config").cloned().ok_or_else(|| Error::Parse("no \"config\" field".into()))?;
    let rc: RunConfig = serde_json::from_value(config).map_err(|e| Error::Parse(format!("config: {e}")))?;
    if matches!(rc.command, Command::Replay { .. }) {
        return Err(Error::InvalidInput("nested replay".into()));
    }
    Ok(rc)
}

/// Runs a parsed command line. `replay` returns the stored configuration's
/// emission together with that configuration.
pub fn execute(config: &RunConfig) -> Result<(RunConfig, Emission)> {
    let e = match &config.command {
        Command::Norm { channel, exponents, budget } => cmd_norm(channel, exponents, budget)?,
        Command::Choi { channel } => cmd_choi(channel)?,
        Command::Bound { channel, exponents, n_max, omegas, budget } => {
            cmd_bound(channel, exponents, *n_max, *omegas, budget)?
        }
        Command::Verify { suite, trials, budget } => cmd_verify(suite, *trials, budget)?,
        Command::Scan { channel, lambda, q, p, budget } => cmd_scan(channel, lambda.as_deref(), q, p, budget)?,
        Command::Hunt { d, p, trials, budget } => cmd_hunt(*d, *p, *trials, budget)?,
        Command::Lsc { d, budget } => cmd_lsc(*d, budget)?,
        Command::Replay { file } => {
            let mut stored = read_replay(file)?;
            stored.format = config.format;
            stored.out = config.out.clone();
            return execute(&stored);
        }
    };
    Ok((config.clone(), e))
}

/// Output text for `format`, with the schema version and configuration.
pub fn render(config: &RunConfig, e: &Emission) -> String {
    match config.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&json!({
                "schema_version": SCHEMA_VERSION,
                "config": config,
                "result": e.result,
            }))
            .expect("output serializes");
            s.push('\n');
            s
        }
        Format::Csv => format!(
            "# puritylab schema_version={SCHEMA_VERSION} config={}\n{}",
            serde_json::to_string(config).expect("config serializes"),
            e.csv
        ),
        Format::Text => e.text.clone(),
    }
}

/// Sets the global thread pool size from [`THREADS_ENV`] if present.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| Error::InvalidInput(format!("{THREADS_ENV}={v:?} is not a count")))?;
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses `args`, runs, writes the output and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let run = init_threads().and_then(|_| execute(&config));
    let (used, emission) = match run {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let out = render(&used, &emission);
    match &config.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, out) {
                eprintln!("error: {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{out}"),
    }
    if emission.violated {
        2
    } else {
        0
    }
}
