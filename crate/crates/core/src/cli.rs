//! Command-line front end for the `uent` binary.
//!
//! Exit codes: 0 when a gate survives (or a command simply succeeds), 10 when
//! a gate is shown not to be a universal entangler, 2 for usage errors and 1
//! for any other failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::gates::{builtin, UnitaryGate, BUILTIN_NAMES};
use crate::report::{
    append_record, distribution_report, format_sig17, gate_to_string, read_gate_file, write_distribution,
    DistributionReport, RunRecord, DEFAULT_BINS,
};
use crate::search::{counterexample_search_detailed, min_entanglement_search, DeConfig};
use crate::separability::{
    column_separability_filter, kappa_state, multipartite_split_residual, split_coefficient_matrix, FilterOutcome,
    SplitMask, TOL_SEPARABLE,
};
use crate::states::{entropy_from_schmidt, BipartiteShape};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_UNIVERSAL: i32 = 10;

#[derive(Debug, Parser)]
#[command(name = "uent", version, about = "Universal entangler checks for bipartite qudit gates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search for a product input mapped to a product state
    Check(SearchArgs),
    /// Entanglement distribution over random product inputs
    Distribution(DistributionArgs),
    /// Minimize output entanglement over product inputs
    MinEnt(SearchArgs),
    /// Gate file utilities
    Gate {
        #[command(subcommand)]
        action: GateAction,
    },
    /// Split residuals and entropies of the three-qutrit kappa state
    Kappa(KappaArgs),
    /// Check whether any column of the gate is a product vector
    Filter(GateArgs),
}

#[derive(Debug, Subcommand)]
pub enum GateAction {
    /// Write a builtin gate to a gate file
    Emit {
        /// Builtin gate name
        name: String,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// Output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct GateArgs {
    /// Builtin gate name or path to a gate file
    #[arg(long)]
    pub gate: String,
    #[arg(long, requires = "n")]
    pub m: Option<usize>,
    #[arg(long, requires = "m")]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub gate: GateArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Evaluation budget of each restart
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
    #[arg(long, default_value_t = 8)]
    pub restarts: u32,
    #[arg(long, default_value_t = 40)]
    pub population: usize,
    #[arg(long, default_value_t = 0.7)]
    pub weight_f: f64,
    #[arg(long, default_value_t = 0.9)]
    pub crossover_cr: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub residual_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub entropy_tol: f64,
    /// `e`, `2`, or any positive number other than 1
    #[arg(long, default_value = "e", value_parser = parse_log_base)]
    pub log_base: f64,
    /// Append the run record to this file
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run the search even when the column filter already rejects the gate
    #[arg(long)]
    pub skip_filter: bool,
}

impl SearchArgs {
    pub fn config(&self) -> DeConfig {
        DeConfig {
            population: self.population,
            weight_f: self.weight_f,
            crossover_cr: self.crossover_cr,
            max_evals: self.budget,
            restarts: self.restarts,
            seed: self.seed,
            residual_tol: self.residual_tol,
            entropy_tol: self.entropy_tol,
            skip_filter: self.skip_filter,
            ..DeConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DistributionArgs {
    #[command(flatten)]
    pub gate: GateArgs,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value = "e", value_parser = parse_log_base)]
    pub log_base: f64,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Histogram CSV path; the summary goes next to it
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct KappaArgs {
    #[arg(long, default_value = "e", value_parser = parse_log_base)]
    pub log_base: f64,
}

pub fn parse_log_base(s: &str) -> std::result::Result<f64, String> {
    let v = match s.trim() {
        "e" | "E" => std::f64::consts::E,
        other => other.parse::<f64>().map_err(|e| format!("invalid log base '{s}': {e}"))?,
    };
    if !v.is_finite() || v <= 0.0 || v == 1.0 {
        return Err(format!("log base must be positive and not 1, got {s}"));
    }
    Ok(v)
}

/// Resolves `--gate` as a builtin name first, then as a gate file path.
pub fn load_gate(arg: &str) -> Result<UnitaryGate> {
    if BUILTIN_NAMES.iter().any(|n| n.eq_ignore_ascii_case(arg)) {
        return builtin(arg);
    }
    let path = Path::new(arg);
    if path.exists() {
        return read_gate_file(path);
    }
    Err(Error::UnknownGate(arg.to_string()))
}

fn explicit_shape(m: Option<usize>, n: Option<usize>) -> Result<Option<BipartiteShape>> {
    match (m, n) {
        (Some(m), Some(n)) => Ok(Some(BipartiteShape::new(m, n)?)),
        (None, None) => Ok(None),
        _ => Err(Error::InvalidConfig("--m and --n must be given together".into())),
    }
}

fn resolve(args: &GateArgs) -> Result<(UnitaryGate, BipartiteShape)> {
    let gate = load_gate(&args.gate)?;
    let shape = gate.resolve_shape(explicit_shape(args.m, args.n)?)?;
    if shape.dim() != gate.dim() {
        return Err(Error::ShapeMismatch(format!(
            "shape {shape} does not match gate dimension {}",
            gate.dim()
        )));
    }
    Ok((gate, shape))
}

fn emit_record(record: &RunRecord, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => append_record(path, record),
        None => {
            writeln!(stdout, "{}", record.to_json_line()?)?;
            Ok(())
        }
    }
}

fn opt(v: Option<crate::report::Sig17>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format_sig17(x.0))
}

pub fn cmd_check(args: &SearchArgs, stdout: &mut dyn Write) -> Result<(i32, RunRecord)> {
    let (gate, shape) = resolve(&args.gate)?;
    let config = args.config();
    let report = counterexample_search_detailed(&gate, shape, &config)?;
    let record = RunRecord::from_search(&gate, shape, &config, &report);
    writeln!(stdout, "gate {} ({shape}): {}", record.gate_label, record.verdict)?;
    if let Some(col) = record.filter_column {
        writeln!(stdout, "separable column: {col}")?;
    }
    writeln!(
        stdout,
        "best residual {}  best entanglement {}  evals {}",
        opt(record.best_residual),
        opt(record.best_entanglement),
        record.evals_used
    )?;
    emit_record(&record, args.out.as_deref(), stdout)?;
    let code = if report.verdict.is_counterexample() {
        EXIT_NOT_UNIVERSAL
    } else {
        EXIT_OK
    };
    Ok((code, record))
}

pub fn cmd_min_ent(args: &SearchArgs, stdout: &mut dyn Write) -> Result<(i32, RunRecord)> {
    let (gate, shape) = resolve(&args.gate)?;
    let config = args.config();
    if !args.skip_filter {
        if let FilterOutcome::Fail { column, .. } = column_separability_filter(&gate, shape, TOL_SEPARABLE)? {
            let record = RunRecord::rejected("min-ent", &gate, shape, &config, column, args.log_base);
            writeln!(stdout, "gate {} ({shape}): {}", record.gate_label, record.verdict)?;
            writeln!(stdout, "separable column: {column}")?;
            emit_record(&record, args.out.as_deref(), stdout)?;
            return Ok((EXIT_NOT_UNIVERSAL, record));
        }
    }
    let result = min_entanglement_search(&gate, shape, &config, args.log_base)?;
    let record = RunRecord::from_min_entanglement(&gate, shape, &config, &result);
    writeln!(
        stdout,
        "gate {} ({shape}): min entanglement {}  residual {}  evals {}",
        record.gate_label,
        format_sig17(result.best_entanglement),
        format_sig17(result.best_residual),
        record.evals_used
    )?;
    emit_record(&record, args.out.as_deref(), stdout)?;
    Ok((EXIT_OK, record))
}

pub fn cmd_distribution(args: &DistributionArgs, stdout: &mut dyn Write) -> Result<DistributionReport> {
    let (gate, shape) = resolve(&args.gate)?;
    let report = distribution_report(&gate, shape, args.samples, args.log_base, args.bins, args.seed)?;
    writeln!(
        stdout,
        "gate {} ({shape}): {} samples  mean {}  std {}  min {}  max {}",
        report.gate_label,
        report.sample_count,
        format_sig17(report.mean.0),
        format_sig17(report.std_dev.0),
        format_sig17(report.min.0),
        format_sig17(report.max.0)
    )?;
    match &args.out {
        Some(path) => {
            let summary = write_distribution(&report, path)?;
            writeln!(stdout, "wrote {} and {}", path.display(), summary.display())?;
        }
        None => writeln!(stdout, "{}", serde_json::to_string(&report)?)?,
    }
    Ok(report)
}

pub fn cmd_gate_emit(
    name: &str,
    m: Option<usize>,
    n: Option<usize>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<String> {
    if !BUILTIN_NAMES.iter().any(|b| b.eq_ignore_ascii_case(name)) {
        return Err(Error::UnknownGate(name.to_string()));
    }
    let gate = builtin(name)?;
    let shape = gate.resolve_shape(explicit_shape(m, n)?)?;
    let text = gate_to_string(&gate, shape)?;
    match out {
        Some(path) => std::fs::write(path, &text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(text)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitSummary {
    pub label: String,
    pub total: f64,
    pub max_minor: f64,
    pub entropy: f64,
}

pub fn cmd_kappa(args: &KappaArgs, stdout: &mut dyn Write) -> Result<Vec<SplitSummary>> {
    let kappa = kappa_state();
    let mut rows = Vec::new();
    for side_a in [vec![0], vec![1], vec![0, 1]] {
        let split = SplitMask::new(vec![3, 3, 3], side_a)?;
        let residual = multipartite_split_residual(&kappa, &split)?;
        let sigma = crate::linalg::singular_values(&split_coefficient_matrix(&kappa, &split)?)?;
        let entropy = entropy_from_schmidt(&sigma, args.log_base);
        writeln!(
            stdout,
            "{:<6} residual {}  max_minor {}  entropy {}",
            split.label(),
            format_sig17(residual.total),
            format_sig17(residual.max_minor),
            format_sig17(entropy)
        )?;
        rows.push(SplitSummary {
            label: split.label(),
            total: residual.total,
            max_minor: residual.max_minor,
            entropy,
        });
    }
    Ok(rows)
}

pub fn cmd_filter(args: &GateArgs, stdout: &mut dyn Write) -> Result<(i32, FilterOutcome)> {
    let (gate, shape) = resolve(args)?;
    let outcome = column_separability_filter(&gate, shape, TOL_SEPARABLE)?;
    match &outcome {
        FilterOutcome::Pass => {
            writeln!(stdout, "gate {} ({shape}): pass", gate.label())?;
            Ok((EXIT_OK, outcome))
        }
        FilterOutcome::Fail { column, residual } => {
            writeln!(
                stdout,
                "gate {} ({shape}): fail, column {column} residual {}",
                gate.label(),
                format_sig17(*residual)
            )?;
            Ok((EXIT_NOT_UNIVERSAL, outcome))
        }
    }
}

/// Errors caused by how the command was invoked rather than by its inputs' contents.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) | Error::InvalidShape { .. } | Error::ShapeUnknown(_) | Error::ShapeMismatch(_) => {
            EXIT_USAGE
        }
        _ => EXIT_RUNTIME,
    }
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Check(args) => cmd_check(&args, stdout).map(|(code, _)| code),
        Command::MinEnt(args) => cmd_min_ent(&args, stdout).map(|(code, _)| code),
        Command::Distribution(args) => cmd_distribution(&args, stdout).map(|_| EXIT_OK),
        Command::Gate {
            action: GateAction::Emit { name, m, n, out },
        } => cmd_gate_emit(&name, m, n, out.as_deref(), stdout).map(|_| EXIT_OK),
        Command::Kappa(args) => cmd_kappa(&args, stdout).map(|_| EXIT_OK),
        Command::Filter(args) => cmd_filter(&args, stdout).map(|(code, _)| code),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("uent").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn log_base_parsing() {
        assert_eq!(parse_log_base("e").unwrap(), std::f64::consts::E);
        assert_eq!(parse_log_base("2").unwrap(), 2.0);
        assert_eq!(parse_log_base("10").unwrap(), 10.0);
        assert!(parse_log_base("1").is_err());
        assert!(parse_log_base("-2").is_err());
        assert!(parse_log_base("two").is_err());
    }

    #[test]
    fn search_defaults() {
        let Command::Check(args) = parse(&["check", "--gate", "UE1"]).command else {
            panic!("expected check");
        };
        let c = args.config();
        assert_eq!((c.population, c.max_evals, c.restarts, c.seed), (40, 1_000_000, 8, 0));
        assert_eq!((c.weight_f, c.crossover_cr, c.residual_tol), (0.7, 0.9, 1e-9));
        assert!(!c.skip_filter);
    }

    #[test]
    fn lone_dimension_is_a_usage_error() {
        let err = Cli::try_parse_from(["uent", "filter", "--gate", "UH", "--m", "3"]).unwrap_err();
        assert!(err.use_stderr());
    }

    #[test]
    fn filter_command() {
        let mut out = Vec::new();
        let (code, outcome) = cmd_filter(
            &GateArgs {
                gate: "uh".into(),
                m: None,
                n: None,
            },
            &mut out,
        )
        .unwrap();
        assert_eq!(code, EXIT_NOT_UNIVERSAL);
        assert!(matches!(outcome, FilterOutcome::Fail { column: 0, .. }));
        assert!(String::from_utf8(out).unwrap().contains("fail, column 0"));
    }

    #[test]
    fn unknown_gate_is_a_runtime_error() {
        let err = load_gate("no-such-gate-or-file").unwrap_err();
        assert!(matches!(err, Error::UnknownGate(_)));
        assert_eq!(exit_code_for(&err), EXIT_RUNTIME);
        assert!(cmd_gate_emit("NOPE", None, None, None, &mut Vec::new()).is_err());
    }

    #[test]
    fn kappa_rows() {
        let rows = cmd_kappa(&KappaArgs { log_base: std::f64::consts::E }, &mut Vec::new()).unwrap();
        let labels: Vec<_> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["A|BC", "B|AC", "AB|C"]);
        for r in rows {
            assert!((r.max_minor - 1.0 / 6.0).abs() < 1e-12);
            assert!((r.entropy - 3f64.ln()).abs() < 1e-10);
        }
    }
}
