//! `trigmoment` — trigonometric-moment goodness-of-fit tests from the command
//! line.
//!
//! Exit codes: 0 success, 2 data or numerical failure, 64 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use trigmoment::estimate::KnownMask;
use trigmoment::families::{EstimatorKind, FamilyId};
use trigmoment::gof::{ellipse, evaluate, run_test, McConfig};
use trigmoment::power::{empirical_power, power_curve, LocalAlternative, PowerCase};
use trigmoment::quadconst::{arity, h, logistic_constants};
use trigmoment::scaling::{matrices, sigma, MatrixSet, Sigma};
use trigmoment::simharness::{
    level_study, parse_bindings, parse_config, parse_family, parse_list, power_snapshot, report_csv, StudyReport,
};
use trigmoment::Error;

/// Environment variable holding the default seed of every random computation.
const SEED_ENV: &str = "TRIGMOMENT_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Parser)]
#[command(name = "trigmoment", version, about = "Trigonometric-moment goodness-of-fit tests")]
struct Cli {
    /// Round every printed number to this many significant digits
    /// (default: shortest representation that round-trips exactly).
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..=17))]
    digits: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a one-column data file against a family.
    Test(TestArgs),
    /// Evaluate a numerically computed constant h_i.
    Constants(ConstantsArgs),
    /// Print G, R, J and Σ for a family at θ, or verify a saved matrices file.
    Matrices(MatricesArgs),
    /// Asymptotic (and optionally empirical) power curves of the local alternatives.
    Power(PowerArgs),
    /// Confidence ellipse of √n·(Cₙ, Sₙ).
    Ellipse(EllipseArgs),
    /// Run a level or power study described by a configuration file.
    Study(StudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Ml,
    Mm,
}

impl From<Estimator> for EstimatorKind {
    fn from(e: Estimator) -> Self {
        match e {
            Estimator::Ml => EstimatorKind::Ml,
            Estimator::Mm => EstimatorKind::Mm,
        }
    }
}

#[derive(Args)]
struct FamilyArgs {
    /// Family name, e.g. normal, laplace, student-t, weibull.
    #[arg(long)]
    family: String,
    /// Estimator of the unknown parameters.
    #[arg(long, value_enum, default_value = "ml")]
    estimator: Estimator,
    /// Known parameter, as name=value (repeatable or comma separated).
    #[arg(long = "known", value_name = "NAME=VALUE")]
    known: Vec<String>,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    /// Significance level reported alongside the decision.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Parametric-bootstrap replications for a Monte-Carlo p-value (0 = none).
    #[arg(long, default_value_t = 0)]
    mc_reps: usize,
    /// Seed of the Monte-Carlo p-value.
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the JSON result here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Data file: one number per line, '#' starts a comment.
    input: PathBuf,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Index i of h_i.
    #[arg(long = "h", required_unless_present = "logistic")]
    index: Option<u8>,
    /// Comma-separated arguments of h_i.
    #[arg(long, allow_hyphen_values = true)]
    args: Option<String>,
    /// Print the four logistic integrals instead.
    #[arg(long, conflicts_with = "index")]
    logistic: bool,
}

#[derive(Args)]
struct MatricesArgs {
    /// Family name.
    #[arg(long, required_unless_present = "verify")]
    family: Option<String>,
    /// Parameter vector, comma separated.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "verify")]
    theta: Option<String>,
    /// Estimator.
    #[arg(long, value_enum, default_value = "ml")]
    estimator: Estimator,
    /// Known parameter, as name=value.
    #[arg(long = "known", value_name = "NAME=VALUE")]
    known: Vec<String>,
    /// Re-ingest a saved matrices file and check that it reproduces its Σ.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["family", "theta"])]
    verify: Option<PathBuf>,
    /// Write the JSON here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseName {
    Gamma,
    Weibull,
    Epd,
}

#[derive(Args)]
struct PowerArgs {
    /// Embedding: gamma vs GG, Weibull vs GG, or EPD vs APD.
    #[arg(long, value_enum)]
    case: CaseName,
    /// Shape λ₀ (gamma and EPD).
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Scale β₀ (gamma and Weibull).
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Shape ρ₀ (Weibull).
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Location μ₀ (EPD).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    /// Scale σ₀ (EPD).
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Estimator (EPD only; the GG cases use ML).
    #[arg(long, value_enum, default_value = "ml")]
    estimator: Estimator,
    /// δ grid for the scalar cases: a value, a list, or start:stop:step.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<String>,
    /// δ₁ (asymmetry) grid for the EPD case.
    #[arg(long, allow_hyphen_values = true)]
    delta1: Option<String>,
    /// δ₂ (shape) grid for the EPD case.
    #[arg(long, allow_hyphen_values = true)]
    delta2: Option<String>,
    /// Significance level.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Also simulate the rejection rate at this sample size.
    #[arg(long)]
    empirical_n: Option<usize>,
    /// Replications per δ of the simulation.
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    /// Seed of the simulation.
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Write the CSV here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EllipseArgs {
    #[command(flatten)]
    fam: FamilyArgs,
    /// Parameter at which Σ is evaluated (instead of fitting a data file).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "input")]
    theta: Option<String>,
    /// Coverage level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Emit only the boundary points as CSV.
    #[arg(long)]
    csv: bool,
    /// Write the output here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Data file; the ellipse then uses the fitted Σ and reports the sample point.
    #[arg(required_unless_present = "theta")]
    input: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyMode {
    Level,
    Power,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct StudyArgs {
    /// Study description (key = value with [cell] and [alternative] sections).
    config: PathBuf,
    /// Which cells to run.
    #[arg(long, value_enum, default_value = "both")]
    mode: StudyMode,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Override the seed of the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Failure of a subcommand, split by exit code.
enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    let out = Output { digits: cli.digits };
    let result = match cli.command {
        Command::Test(a) => cmd_test(a, &out),
        Command::Constants(a) => cmd_constants(a, &out),
        Command::Matrices(a) => cmd_matrices(a, &out),
        Command::Power(a) => cmd_power(a, &out),
        Command::Ellipse(a) => cmd_ellipse(a, &out),
        Command::Study(a) => cmd_study(a, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(64)
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

/// Number formatting and output destination.
struct Output {
    digits: Option<u32>,
}

impl Output {
    fn round(&self, x: f64) -> f64 {
        match self.digits {
            Some(d) if x.is_finite() => format!("{:.*e}", d as usize - 1, x).parse().unwrap_or(x),
            _ => x,
        }
    }

    fn num(&self, x: f64) -> String {
        format!("{}", self.round(x))
    }

    fn round_json(&self, v: &mut Value) {
        match v {
            Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
                if let Some(x) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(self.round(x)) {
                        *n = r;
                    }
                }
            }
            Value::Array(a) => a.iter_mut().for_each(|x| self.round_json(x)),
            Value::Object(o) => o.values_mut().for_each(|x| self.round_json(x)),
            _ => {}
        }
    }

    fn json<T: Serialize>(&self, value: &T, path: Option<&Path>) -> CmdResult {
        let mut v = serde_json::to_value(value).map_err(|e| Failure::Data(e.to_string()))?;
        self.round_json(&mut v);
        let text = serde_json::to_string_pretty(&v).map_err(|e| Failure::Data(e.to_string()))?;
        self.write(&(text + "\n"), path)
    }

    fn write(&self, text: &str, path: Option<&Path>) -> CmdResult {
        match path {
            Some(p) => fs::write(p, text).map_err(|e| Failure::Data(format!("cannot write {}: {e}", p.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn family(name: &str) -> Result<FamilyId, Failure> {
    parse_family(name).map_err(|_| {
        let names: Vec<&str> = FamilyId::ALL.iter().map(|f| f.name()).collect();
        Failure::Usage(format!("unknown family '{name}' (known: {})", names.join(", ")))
    })
}

fn usage_list(text: &str) -> Result<Vec<f64>, Failure> {
    parse_list(text).map_err(|e| Failure::Usage(e.to_string()))
}

fn mask_for(fam: FamilyId, known: &[String]) -> Result<KnownMask, Failure> {
    let mut bindings = Vec::new();
    for k in known {
        bindings.extend(parse_bindings(k).map_err(|e| Failure::Usage(e.to_string()))?);
    }
    KnownMask::from_bindings(fam, &bindings).map_err(|e| Failure::Usage(e.to_string()))
}

fn theta_for(fam: FamilyId, text: &str) -> Result<Vec<f64>, Failure> {
    let theta = usage_list(text)?;
    if theta.len() != fam.arity() {
        return Err(Failure::Usage(format!(
            "{} takes {} parameters ({}), got {}",
            fam.name(),
            fam.arity(),
            fam.param_names().join(", "),
            theta.len()
        )));
    }
    fam.validate(&theta).map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(theta)
}

/// Reads one number per line; blank lines and '#' comments are skipped.
fn read_data(path: &Path) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut x = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Failure::Data(format!("{}:{}: not a number: '{line}'", path.display(), i + 1)))?;
        if !v.is_finite() {
            return Err(Failure::Data(format!("{}:{}: value is not finite", path.display(), i + 1)));
        }
        x.push(v);
    }
    if x.is_empty() {
        return Err(Failure::Data(format!("{}: no data", path.display())));
    }
    Ok(x)
}

#[derive(Serialize)]
struct TestOutput {
    #[serde(flatten)]
    result: trigmoment::gof::TestResult,
    n: usize,
    alpha: f64,
    reject: bool,
}

fn cmd_test(a: TestArgs, out: &Output) -> CmdResult {
    let fam = family(&a.fam.family)?;
    let kind = a.fam.estimator.into();
    let mask = mask_for(fam, &a.fam.known)?;
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(Failure::Usage(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let x = read_data(&a.input)?;
    let mc = (a.mc_reps > 0).then_some(McConfig { reps: a.mc_reps, seed: a.seed });
    let result = run_test(fam, kind, &mask, &x, mc)?;
    let reject = result.p_chi2 < a.alpha;
    out.json(&TestOutput { n: x.len(), alpha: a.alpha, reject, result }, a.output.as_deref())
}

fn cmd_constants(a: ConstantsArgs, out: &Output) -> CmdResult {
    if a.logistic {
        let c = logistic_constants()?;
        let v = serde_json::json!({ "c_cos": c.c_cos, "c_sin": c.c_sin, "m_cos": c.m_cos, "m_sin": c.m_sin });
        return out.json(&v, None);
    }
    let index = a.index.unwrap_or(0);
    let n = arity(index).ok_or_else(|| Failure::Usage(format!("no constant h{index} (valid: 1 to 37)")))?;
    let args = match &a.args {
        Some(t) => usage_list(t)?,
        None => Vec::new(),
    };
    if args.len() != n {
        return Err(Failure::Usage(format!("h{index} takes {n} argument(s), got {}", args.len())));
    }
    let v = h(index, &args)?;
    out.write(&format!("{}\n", out.num(v)), None)
}

/// Saved form of the `matrices` output.
#[derive(Serialize, Deserialize)]
struct MatricesFile {
    matrices: MatrixSet,
    known: KnownMask,
    sigma: Sigma,
}

fn cmd_matrices(a: MatricesArgs, out: &Output) -> CmdResult {
    if let Some(path) = a.verify {
        let text = fs::read_to_string(&path).map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
        let saved: MatricesFile =
            serde_json::from_str(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let recomputed = sigma(&saved.matrices, &saved.known, saved.matrices.kind)?;
        let identical = recomputed == saved.sigma;
        out.json(&serde_json::json!({ "identical": identical, "sigma": recomputed }), a.output.as_deref())?;
        return if identical {
            Ok(())
        } else {
            Err(Failure::Data(format!("{}: stored Σ is not reproduced", path.display())))
        };
    }
    let fam = family(a.family.as_deref().unwrap_or_default())?;
    let theta = theta_for(fam, a.theta.as_deref().unwrap_or_default())?;
    let kind = a.estimator.into();
    let known = mask_for(fam, &a.known)?;
    let ms = matrices(fam, kind, &theta)?;
    let s = sigma(&ms, &known, kind)?;
    let file = MatricesFile { matrices: ms, known, sigma: s };
    if out.digits.is_some() {
        out.json(&file, a.output.as_deref())
    } else {
        // Exact output so that --verify reproduces Σ bit for bit.
        let text = serde_json::to_string_pretty(&file).map_err(|e| Failure::Data(e.to_string()))?;
        out.write(&(text + "\n"), a.output.as_deref())
    }
}

/// Parses "v", "v1,v2,…" or "start:stop:step".
fn grid(text: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [_] => usage_list(text),
        [a, b, s] => {
            let [a, b, s] = [a, b, s].map(|t| t.trim().parse::<f64>());
            let (a, b, s) = match (a, b, s) {
                (Ok(a), Ok(b), Ok(s)) if s > 0.0 && b >= a && a.is_finite() && b.is_finite() => (a, b, s),
                _ => return Err(Failure::Usage(format!("invalid range '{text}' (start:stop:step, step > 0)"))),
            };
            let k = ((b - a) / s + 1e-9).floor() as usize;
            if k > 1_000_000 {
                return Err(Failure::Usage(format!("range '{text}' has too many points")));
            }
            Ok((0..=k).map(|i| a + i as f64 * s).collect())
        }
        _ => Err(Failure::Usage(format!("invalid grid '{text}'"))),
    }
}

fn cmd_power(a: PowerArgs, out: &Output) -> CmdResult {
    let (case, theta0) = match a.case {
        CaseName::Gamma => (PowerCase::GammaVsGg, vec![a.lambda, a.beta]),
        CaseName::Weibull => (PowerCase::WeibullVsGg, vec![a.beta, a.rho]),
        CaseName::Epd => (PowerCase::EpdVsApd(a.estimator.into()), vec![a.lambda, a.mu, a.sigma]),
    };
    case.null_family().validate(&theta0).map_err(|e| Failure::Usage(e.to_string()))?;
    let deltas: Vec<Vec<f64>> = if case.n_delta() == 1 {
        if a.delta1.is_some() || a.delta2.is_some() {
            return Err(Failure::Usage("--delta1/--delta2 apply to the epd case only".into()));
        }
        grid(a.delta.as_deref().unwrap_or("0:30:0.5"))?.into_iter().map(|d| vec![d]).collect()
    } else {
        if a.delta.is_some() {
            return Err(Failure::Usage("the epd case takes --delta1 and --delta2".into()));
        }
        let d1 = grid(a.delta1.as_deref().unwrap_or("0"))?;
        let d2 = grid(a.delta2.as_deref().unwrap_or("0"))?;
        d1.iter().flat_map(|&x| d2.iter().map(move |&y| vec![x, y])).collect()
    };
    let points = power_curve(case, &theta0, &deltas, a.alpha)?;
    let scalar = case.n_delta() == 1;
    let mut csv = String::from(if scalar { "delta" } else { "delta1,delta2" });
    csv.push_str(if a.empirical_n.is_some() { ",ncp,asymptotic,empirical,std_error,failed\n" } else { ",ncp,power\n" });
    for p in &points {
        let mut fields: Vec<String> = p.delta.iter().map(|&d| out.num(d)).collect();
        fields.push(out.num(p.ncp));
        fields.push(out.num(p.power));
        if let Some(n) = a.empirical_n {
            let alt = LocalAlternative { case, theta0: theta0.clone(), delta: p.delta.clone(), alpha_level: a.alpha };
            let e = empirical_power(&alt, n, a.reps, a.seed)?;
            fields.push(out.num(e.rate));
            fields.push(out.num(e.std_error));
            fields.push(e.failed.to_string());
        }
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    out.write(&csv, a.output.as_deref())
}

fn cmd_ellipse(a: EllipseArgs, out: &Output) -> CmdResult {
    let fam = family(&a.fam.family)?;
    let kind = a.fam.estimator.into();
    let mask = mask_for(fam, &a.fam.known)?;
    if !(a.level > 0.0 && a.level < 1.0) {
        return Err(Failure::Usage(format!("level must lie in (0, 1), got {}", a.level)));
    }
    let (sig, point, theta) = match (&a.theta, &a.input) {
        (Some(t), _) => {
            let theta = theta_for(fam, t)?;
            (trigmoment::scaling::sigma_for(fam, kind, &theta, &mask)?, None, theta)
        }
        (None, Some(path)) => {
            let x = read_data(path)?;
            let ev = evaluate(fam, kind, &mask, &x)?;
            let r = (x.len() as f64).sqrt();
            (ev.sigma, Some([r * ev.moments.cn, r * ev.moments.sn]), ev.fit.theta)
        }
        (None, None) => return Err(Failure::Usage("give --theta or a data file".into())),
    };
    let e = ellipse(&sig, a.level)?;
    if a.csv {
        let mut csv = String::from("c,s\n");
        for p in &e.points {
            csv.push_str(&format!("{},{}\n", out.num(p[0]), out.num(p[1])));
        }
        return out.write(&csv, a.output.as_deref());
    }
    let inside = point.map(|p| trigmoment::gof::statistic(&trigmoment::gof::TrigMoments { cn: p[0], sn: p[1], n: 1 }, &sig))
        .transpose()?
        .map(|t| t <= e.q);
    let v = serde_json::json!({
        "family": fam,
        "estimator": kind,
        "theta": theta,
        "sigma": sig,
        "ellipse": e,
        "point": point,
        "inside": inside,
    });
    out.json(&v, a.output.as_deref())
}

fn cmd_study(a: StudyArgs, out: &Output) -> CmdResult {
    let text = fs::read_to_string(&a.config)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", a.config.display())))?;
    let mut cfg = parse_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", a.config.display())))?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let run_level = matches!(a.mode, StudyMode::Level | StudyMode::Both) && !cfg.cells.is_empty();
    let run_power = matches!(a.mode, StudyMode::Power | StudyMode::Both) && !cfg.alternatives.is_empty();
    if !run_level && !run_power {
        return Err(Failure::Usage("the configuration has no cells for the requested mode".into()));
    }
    let mut report = StudyReport { rows: Vec::new(), wall_time_secs: 0.0 };
    for (run, f) in [(run_level, level_study as fn(_) -> _), (run_power, power_snapshot as fn(_) -> _)] {
        if run {
            let r: StudyReport = f(&cfg)?;
            report.rows.extend(r.rows);
            report.wall_time_secs += r.wall_time_secs;
        }
    }
    for row in &mut report.rows {
        row.rate = out.round(row.rate);
        row.std_error = out.round(row.std_error);
    }
    match a.format {
        Format::Csv => out.write(&report_csv(&report), a.output.as_deref()),
        Format::Json => out.json(&report, a.output.as_deref()),
    }
}
