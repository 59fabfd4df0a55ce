//! `klbound`: moment-based KL lower bounds from the command line.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use klbound::divergence::kl_closed_form;
use klbound::estimate::{bound_from_samples_with, FoIOutcome};
use klbound::sweep::write_table;
use klbound::verify::Suite;
use klbound::{
    alpha_divergence, chi_sq, hellinger_sq, ingest_path, kl_exact, kl_lower_bound, BoundResult,
    Distribution, Error, FoIBank, InputFormat, MomentSummary, QuadratureSpec, SweepFamily,
    SweepSpec, VarianceConvention,
};

#[derive(Parser)]
#[command(
    name = "klbound",
    version,
    about = "Moment-based lower bounds on the KL divergence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lower-bound KL(P‖Q) from moments or from two sample files.
    Bound(BoundArgs),
    /// Evaluate an exact divergence between two distributions.
    Exact(ExactArgs),
    /// Tabulate exact KL against the bound over a one-parameter family.
    Sweep(SweepArgs),
    /// Run the verification suites.
    Check(CheckArgs),
}

#[derive(Args)]
struct BoundArgs {
    /// Mean of the statistic under P.
    #[arg(long, allow_hyphen_values = true)]
    ep: Option<f64>,
    /// Mean of the statistic under Q.
    #[arg(long, allow_hyphen_values = true)]
    eq: Option<f64>,
    /// Variance of the statistic under P.
    #[arg(long, allow_hyphen_values = true)]
    vp: Option<f64>,
    /// Variance of the statistic under Q.
    #[arg(long, allow_hyphen_values = true)]
    vq: Option<f64>,
    /// Samples from P.
    #[arg(long)]
    p_file: Option<PathBuf>,
    /// Samples from Q.
    #[arg(long)]
    q_file: Option<PathBuf>,
    /// Comma-separated functions of interest: identity, square, poly:c0:c1:...
    #[arg(long, default_value = "identity,square")]
    foi: String,
    /// Read this 1-based column of delimited rows instead of one value per line.
    #[arg(long)]
    column: Option<usize>,
    /// Column delimiter used with --column.
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// Use the 1/(N-1) variance instead of 1/N.
    #[arg(long)]
    unbiased: bool,
    /// One JSON record per line.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Divergence {
    Kl,
    Hellinger,
    Chi2,
    Alpha,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Discrete,
    Bernoulli,
    Normal,
    Exponential,
}

#[derive(Args)]
struct ExactArgs {
    divergence: Divergence,
    family: Family,
    /// P's pmf (discrete) or success probability (bernoulli).
    #[arg(long)]
    p: Option<String>,
    /// Q's pmf (discrete) or success probability (bernoulli).
    #[arg(long)]
    q: Option<String>,
    /// Atoms of a discrete pair; defaults to 1, 2, ..., n.
    #[arg(long, allow_hyphen_values = true)]
    support: Option<String>,
    /// Means `mu_p,mu_q` of a normal pair.
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<String>,
    /// Standard deviations `sigma_p,sigma_q` of a normal pair.
    #[arg(long)]
    sigma: Option<String>,
    /// Means `nu_p,nu_q` of an exponential pair.
    #[arg(long)]
    nu: Option<String>,
    /// Order of the alpha-divergence.
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_parser = parse_family)]
    family: SweepFamily,
    #[arg(long, allow_hyphen_values = true)]
    start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    stop: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Output path, or `-` for stdout.
    #[arg(long, short, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct CheckArgs {
    /// `all` or one of the suite names.
    #[arg(default_value = "all")]
    suite: String,
    #[arg(long)]
    json: bool,
}

fn parse_family(s: &str) -> Result<SweepFamily, String> {
    s.parse().map_err(|_| {
        let names: Vec<String> = SweepFamily::ALL.iter().map(|f| f.to_string()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

/// A failure tied to the flag that caused it.
#[derive(Debug)]
struct Failure {
    flag: String,
    message: String,
}

impl Failure {
    fn new(flag: impl Into<String>, message: impl ToString) -> Self {
        Self {
            flag: flag.into(),
            message: message.to_string(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

trait Context<T> {
    fn flag(self, flag: &str) -> Outcome<T>;
}

impl<T> Context<T> for klbound::Result<T> {
    fn flag(self, flag: &str) -> Outcome<T> {
        self.map_err(|e| Failure::new(flag, e))
    }
}

fn moment_flag(field: &str) -> &'static str {
    match field {
        "e_p" => "--ep",
        "e_q" => "--eq",
        "v_p" => "--vp",
        _ => "--vq",
    }
}

fn print_json<T: Serialize>(out: &mut impl Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(io::Error::other)?;
    writeln!(out)
}

#[derive(Serialize)]
struct BoundRecord<'a> {
    #[serde(flatten)]
    bound: &'a BoundResult,
    e_p: f64,
    e_q: f64,
    v_p: f64,
    v_q: f64,
}

fn run_bound(args: &BoundArgs, out: &mut impl Write) -> Outcome<()> {
    let stats = [
        ("--ep", args.ep),
        ("--eq", args.eq),
        ("--vp", args.vp),
        ("--vq", args.vq),
    ];
    let any_stats = stats.iter().any(|(_, v)| v.is_some());
    let any_files = args.p_file.is_some() || args.q_file.is_some();
    match (any_stats, any_files) {
        (true, true) => Err(Failure::new(
            "--p-file",
            "give either --ep/--eq/--vp/--vq or --p-file/--q-file, not both",
        )),
        (false, false) => Err(Failure::new(
            "--ep",
            "give either --ep/--eq/--vp/--vq or --p-file/--q-file",
        )),
        (true, false) => {
            if let Some((flag, _)) = stats.iter().find(|(_, v)| v.is_none()) {
                return Err(Failure::new(
                    *flag,
                    "missing; all four moments are required",
                ));
            }
            let [ep, eq, vp, vq] = stats.map(|(_, v)| v.unwrap_or_default());
            bound_from_stats(
                MomentSummary {
                    e_p: ep,
                    e_q: eq,
                    v_p: vp,
                    v_q: vq,
                },
                args.json,
                out,
            )
        }
        (false, true) => bound_from_files(args, out),
    }
}

fn bound_from_stats(m: MomentSummary, json: bool, out: &mut impl Write) -> Outcome<()> {
    let b = kl_lower_bound(&m).map_err(|e| match &e {
        Error::InvalidInput { field, .. } => Failure::new(moment_flag(field), e),
        _ => Failure::new("--ep", e),
    })?;
    let written = if json {
        print_json(
            out,
            &BoundRecord {
                bound: &b,
                e_p: m.e_p,
                e_q: m.e_q,
                v_p: m.v_p,
                v_q: m.v_q,
            },
        )
    } else {
        writeln!(
            out,
            "value: {}\nA: {}\nD: {}\nD/A: {}\nregime: {}\nlog-term: {}",
            b.value, b.a_term, b.d_term, b.ratio, b.regime, b.log_term
        )
    };
    written.map_err(|e| Failure::new("stdout", e))
}

#[derive(Serialize)]
struct FoIRecord<'a> {
    foi: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    standard_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    summary: Option<&'a MomentSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    regime: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl<'a> From<&'a FoIOutcome> for FoIRecord<'a> {
    fn from(o: &'a FoIOutcome) -> Self {
        match &o.result {
            Ok(b) => Self {
                foi: o.foi.to_string(),
                value: Some(b.bound.value),
                standard_error: Some(b.standard_error),
                summary: Some(&b.summary),
                regime: Some(b.bound.regime.to_string()),
                error: None,
            },
            Err(e) => Self {
                foi: o.foi.to_string(),
                value: None,
                standard_error: None,
                summary: None,
                regime: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Serialize)]
struct MaxRecord<'a> {
    max_bound: f64,
    best_foi: &'a str,
}

fn bound_from_files(args: &BoundArgs, out: &mut impl Write) -> Outcome<()> {
    let p_file = args
        .p_file
        .as_ref()
        .ok_or_else(|| Failure::new("--p-file", "missing; --q-file needs --p-file"))?;
    let q_file = args
        .q_file
        .as_ref()
        .ok_or_else(|| Failure::new("--q-file", "missing; --p-file needs --q-file"))?;
    let bank: FoIBank = args.foi.parse().flag("--foi")?;
    let format = match args.column {
        None => InputFormat::Lines,
        Some(column) => {
            let mut chars = args.delimiter.chars();
            let delimiter = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(Failure::new("--delimiter", "must be a single character")),
            };
            if column == 0 {
                return Err(Failure::new("--column", "columns are numbered from 1"));
            }
            InputFormat::Delimited { delimiter, column }
        }
    };
    let xs = ingest_path(p_file, format).flag("--p-file")?;
    let ys = ingest_path(q_file, format).flag("--q-file")?;
    let convention = if args.unbiased {
        VarianceConvention::Sample
    } else {
        VarianceConvention::Population
    };
    let report = bound_from_samples_with(&xs, &ys, &bank, convention)
        .map_err(|e| no_bound_reason(&xs, &ys, &bank).unwrap_or(Failure::new("--foi", e)))?;
    let written: io::Result<()> = (|| {
        if args.json {
            for o in &report.outcomes {
                print_json(out, &FoIRecord::from(o))?;
            }
            print_json(
                out,
                &MaxRecord {
                    max_bound: report.max_bound,
                    best_foi: &report.best_foi().to_string(),
                },
            )
        } else {
            writeln!(out, "foi,bound,standard_error,e_p,e_q,v_p,v_q,regime")?;
            for o in &report.outcomes {
                match &o.result {
                    Ok(b) => {
                        let m = &b.summary;
                        writeln!(
                            out,
                            "{},{},{},{},{},{},{},{}",
                            o.foi,
                            b.bound.value,
                            b.standard_error,
                            m.e_p,
                            m.e_q,
                            m.v_p,
                            m.v_q,
                            b.bound.regime
                        )?
                    }
                    Err(e) => writeln!(out, "{},,,,,,,skipped: {e}", o.foi)?,
                }
            }
            writeln!(out, "max: {} ({})", report.max_bound, report.best_foi())
        }
    })();
    written.map_err(|e| Failure::new("stdout", e))
}

/// Names the input that kept the first FoI from producing a bound.
fn no_bound_reason(xs: &[f64], ys: &[f64], bank: &FoIBank) -> Option<Failure> {
    let f = bank.fois().first()?;
    if let Err(e) = klbound::stream_moments(xs.iter().copied(), f) {
        return Some(Failure::new("--p-file", e));
    }
    if let Err(e) = klbound::stream_moments(ys.iter().copied(), f) {
        return Some(Failure::new("--q-file", e));
    }
    None
}

fn parse_list(flag: &str, raw: Option<&String>) -> Outcome<Vec<f64>> {
    let raw = raw.ok_or_else(|| Failure::new(flag, "missing"))?;
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::new(flag, format!("cannot parse `{}` as a number", s.trim())))
        })
        .collect()
}

fn parse_pair(flag: &str, raw: Option<&String>) -> Outcome<(f64, f64)> {
    match parse_list(flag, raw)?.as_slice() {
        &[a, b] => Ok((a, b)),
        v => Err(Failure::new(
            flag,
            format!("expected two comma-separated values, got {}", v.len()),
        )),
    }
}

fn parse_scalar(flag: &str, raw: Option<&String>) -> Outcome<f64> {
    match parse_list(flag, raw)?.as_slice() {
        &[a] => Ok(a),
        v => Err(Failure::new(
            flag,
            format!("expected one value, got {}", v.len()),
        )),
    }
}

fn exact_pair(args: &ExactArgs) -> Outcome<(Distribution, Distribution)> {
    let unused = |flags: &[(&str, bool)]| -> Outcome<()> {
        match flags.iter().find(|(_, set)| *set) {
            Some((flag, _)) => Err(Failure::new(*flag, "not used by this family")),
            None => Ok(()),
        }
    };
    match args.family {
        Family::Discrete => {
            unused(&[
                ("--mu", args.mu.is_some()),
                ("--sigma", args.sigma.is_some()),
                ("--nu", args.nu.is_some()),
            ])?;
            let p = parse_list("--p", args.p.as_ref())?;
            let q = parse_list("--q", args.q.as_ref())?;
            if p.len() != q.len() {
                return Err(Failure::new(
                    "--q",
                    format!("has {} entries but --p has {}", q.len(), p.len()),
                ));
            }
            let support = match &args.support {
                Some(_) => parse_list("--support", args.support.as_ref())?,
                None => (1..=p.len()).map(|i| i as f64).collect(),
            };
            if support.len() != p.len() {
                return Err(Failure::new(
                    "--support",
                    format!("has {} entries but --p has {}", support.len(), p.len()),
                ));
            }
            Ok((
                Distribution::discrete(support.clone(), p).flag("--p")?,
                Distribution::discrete(support, q).flag("--q")?,
            ))
        }
        Family::Bernoulli => {
            unused(&[
                ("--support", args.support.is_some()),
                ("--mu", args.mu.is_some()),
                ("--sigma", args.sigma.is_some()),
                ("--nu", args.nu.is_some()),
            ])?;
            Ok((
                Distribution::bernoulli(parse_scalar("--p", args.p.as_ref())?).flag("--p")?,
                Distribution::bernoulli(parse_scalar("--q", args.q.as_ref())?).flag("--q")?,
            ))
        }
        Family::Normal => {
            unused(&[
                ("--p", args.p.is_some()),
                ("--q", args.q.is_some()),
                ("--support", args.support.is_some()),
                ("--nu", args.nu.is_some()),
            ])?;
            let (mp, mq) = parse_pair("--mu", args.mu.as_ref())?;
            let (sp, sq) = parse_pair("--sigma", args.sigma.as_ref())?;
            let p = Distribution::normal(mp, sp).flag(if mp.is_finite() {
                "--sigma"
            } else {
                "--mu"
            })?;
            let q = Distribution::normal(mq, sq).flag(if mq.is_finite() {
                "--sigma"
            } else {
                "--mu"
            })?;
            Ok((p, q))
        }
        Family::Exponential => {
            unused(&[
                ("--p", args.p.is_some()),
                ("--q", args.q.is_some()),
                ("--support", args.support.is_some()),
                ("--mu", args.mu.is_some()),
                ("--sigma", args.sigma.is_some()),
            ])?;
            let (np, nq) = parse_pair("--nu", args.nu.as_ref())?;
            Ok((
                Distribution::exponential(np).flag("--nu")?,
                Distribution::exponential(nq).flag("--nu")?,
            ))
        }
    }
}

#[derive(Serialize)]
struct ExactRecord {
    divergence: &'static str,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    quadrature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    discrepancy: Option<f64>,
}

fn run_exact(args: &ExactArgs, out: &mut impl Write) -> Outcome<()> {
    let alpha = match (args.divergence, args.alpha) {
        (Divergence::Alpha, Some(a)) if a.is_finite() => a,
        (Divergence::Alpha, Some(a)) => {
            return Err(Failure::new("--alpha", format!("{a} is not finite")))
        }
        (Divergence::Alpha, None) => {
            return Err(Failure::new("--alpha", "required for the alpha divergence"))
        }
        (Divergence::Kl, _) => 1.0,
        (_, Some(_)) => {
            return Err(Failure::new(
                "--alpha",
                "only used with the alpha divergence",
            ))
        }
        _ => f64::NAN,
    };
    let (p, q) = exact_pair(args)?;
    let quad = QuadratureSpec::default();
    let family = match args.family {
        Family::Discrete => "--p",
        Family::Bernoulli => "--p",
        Family::Normal => "--sigma",
        Family::Exponential => "--nu",
    };
    let (name, record) = match args.divergence {
        Divergence::Kl | Divergence::Alpha if alpha == 1.0 => {
            let closed = kl_closed_form(&p, &q);
            let numeric = if p.is_discrete() && closed.is_none() {
                None
            } else {
                Some(alpha_divergence(1.0, &p, &q, &quad).flag(family)?)
            };
            let value = match closed {
                Some(c) => c,
                None => kl_exact(&p, &q, &quad).flag(family)?,
            };
            let discrepancy = closed.zip(numeric).map(|(c, n)| (c - n).abs());
            (
                "kl",
                ExactRecord {
                    divergence: "kl",
                    value,
                    closed_form: closed,
                    quadrature: numeric,
                    discrepancy,
                },
            )
        }
        Divergence::Kl => unreachable!("KL always uses alpha = 1"),
        Divergence::Alpha => {
            let v = alpha_divergence(alpha, &p, &q, &quad).flag(family)?;
            (
                "alpha",
                ExactRecord {
                    divergence: "alpha",
                    value: v,
                    closed_form: None,
                    quadrature: None,
                    discrepancy: None,
                },
            )
        }
        Divergence::Hellinger => {
            let v = hellinger_sq(&p, &q, &quad).flag(family)?;
            (
                "hellinger",
                ExactRecord {
                    divergence: "hellinger",
                    value: v,
                    closed_form: None,
                    quadrature: None,
                    discrepancy: None,
                },
            )
        }
        Divergence::Chi2 => {
            let v = chi_sq(&p, &q, &quad).flag(family)?;
            (
                "chi2",
                ExactRecord {
                    divergence: "chi2",
                    value: v,
                    closed_form: None,
                    quadrature: None,
                    discrepancy: None,
                },
            )
        }
    };
    let written: io::Result<()> = (|| {
        if args.json {
            return print_json(out, &record);
        }
        writeln!(out, "{name}: {}", record.value)?;
        if let Some(c) = record.closed_form {
            writeln!(out, "closed-form: {c}")?;
        }
        if let Some(n) = record.quadrature {
            writeln!(out, "quadrature: {n}")?;
        }
        if let Some(d) = record.discrepancy {
            writeln!(out, "discrepancy: {d:e}")?;
        }
        Ok(())
    })();
    written.map_err(|e| Failure::new("stdout", e))
}

fn run_sweep(args: &SweepArgs, out: &mut impl Write) -> Outcome<()> {
    let (start, stop, steps) = args.family.default_range();
    let spec = SweepSpec::new(
        args.family,
        args.start.unwrap_or(start),
        args.stop.unwrap_or(stop),
        args.steps.unwrap_or(steps),
    )
    .map_err(|e| match &e {
        Error::InvalidInput { field, .. } => Failure::new(format!("--{field}"), e),
        _ => Failure::new("--start", e),
    })?;
    let rows = klbound::sweep(&spec).flag("--start")?;
    if args.output == "-" {
        write_table(&rows, &mut *out).map_err(|e| Failure::new("--output", e))
    } else {
        let file = File::create(&args.output)
            .map_err(|e| Failure::new("--output", format!("{}: {e}", args.output)))?;
        let mut w = BufWriter::new(file);
        write_table(&rows, &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Failure::new("--output", format!("{}: {e}", args.output)))
    }
}

fn run_check(args: &CheckArgs, out: &mut impl Write) -> Outcome<bool> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![args.suite.parse().map_err(|_| {
            let names: Vec<String> = Suite::ALL.iter().map(|s| s.to_string()).collect();
            Failure::new(
                "suite",
                format!(
                    "unknown suite `{}`; expected all, {}",
                    args.suite,
                    names.join(", ")
                ),
            )
        })?]
    };
    let mut all = true;
    for s in suites {
        let r = s.run();
        all &= r.passed;
        let written = if args.json {
            print_json(out, &r)
        } else {
            writeln!(
                out,
                "[{}] {}: {} (worst {:.3e}, tolerance {:.0e}, {} cases)",
                if r.passed { "PASS" } else { "FAIL" },
                r.suite,
                r.detail,
                r.worst,
                r.tolerance,
                r.cases
            )
        };
        written.map_err(|e| Failure::new("stdout", e))?;
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let result = match &cli.command {
        Command::Bound(a) => run_bound(a, &mut out).map(|_| true),
        Command::Exact(a) => run_exact(a, &mut out).map(|_| true),
        Command::Sweep(a) => run_sweep(a, &mut out).map(|_| true),
        Command::Check(a) => run_check(a, &mut out),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            let _ = out.flush();
            eprintln!("error: {}: {}", f.flag, f.message);
            ExitCode::from(2)
        }
    }
}
