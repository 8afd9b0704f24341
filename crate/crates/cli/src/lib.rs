//! The `commute-embed` command-line tool: argument parsing, input loading and
//! the subcommand handlers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use commute_core::io::{self as cio, LabelledMatrix};
use commute_core::nalgebra::DMatrix;
use commute_core::structure::MonotonicityConfig;
use commute_core::{
    default_psd_tol, embed, estimate_commute_paint, estimate_hitting, fundamental_matrix,
    minimax_verify_with_commute, monotonicity_experiment, realizability_check, reversibility_check,
    simulate, validate_chain, CommuteStructure, CrossPotential, ErgodicChain, NumericSettings,
    Start,
};
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(
    name = "commute-embed",
    version,
    about = "Commuting times of ergodic Markov chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check that the input is an ergodic chain.
    Validate,
    /// Equilibrium measure.
    Stationary,
    /// Fundamental matrix Z (lowered).
    Fundamental,
    /// Expected hitting times M.
    Hitting,
    /// Commuting times T.
    Commute,
    /// Cross-potential entries N_abcd for the given pairs.
    CrossPotential,
    /// Euclidean coordinates whose squared distances are the commuting times.
    Embed,
    /// Gram spectrum of a squared-distance table.
    Realizability,
    /// Compare the three reversibility tests.
    Reversibility,
    /// Check the saddle-point characterization of 1/T_ab.
    MinimaxCheck,
    /// Check that added circulations never increase commuting times.
    MonotonicityCheck,
    /// Simulate a trajectory and Monte Carlo estimates.
    Simulate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Chain JSON (`{"labels": [...], "P": [[...]]}`), distance JSON (`"T"` instead of `"P"`) or bare CSV.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Reference (or ground) state, by label or zero-based index.
    #[arg(long = "ref", global = true)]
    pub ref_state: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol_psd: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol_rev: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub episodes: Option<usize>,
    /// Number of monotonicity trials or minimax perturbations.
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,
    /// State pairs `a,b;c,d`.
    #[arg(long, global = true)]
    pub pairs: Option<String>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    #[arg(long, global = true, hide = true)]
    pub invert_comparison: bool,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub input_path: PathBuf,
    pub output_path: Option<PathBuf>,
    pub ref_state: Option<String>,
    pub psd_tol: Option<f64>,
    pub settings: NumericSettings,
    pub seed: u64,
    pub steps: usize,
    pub episodes: usize,
    pub trials: usize,
    pub pairs: Option<String>,
    pub format: Option<Format>,
    pub invert_comparison: bool,
}

impl AnalysisConfig {
    pub fn from_options(options: &Options) -> Result<Self, CliError> {
        let input_path = options
            .input
            .clone()
            .ok_or_else(|| CliError::InvalidConfig("--input is required".into()))?;
        let mut settings = NumericSettings::default();
        for (name, value) in [
            ("--tol-psd", options.tol_psd),
            ("--tol-rev", options.tol_rev),
        ] {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::InvalidConfig(format!(
                        "{name} must be positive, got {v}"
                    )));
                }
            }
        }
        if let Some(v) = options.tol_rev {
            settings.rev_tol = v;
        }
        Ok(Self {
            input_path,
            output_path: options.output.clone(),
            ref_state: options.ref_state.clone(),
            psd_tol: options.tol_psd,
            settings,
            seed: options.seed,
            steps: options.steps.unwrap_or(100_000),
            episodes: options.episodes.unwrap_or(10_000),
            trials: options.trials,
            pairs: options.pairs.clone(),
            format: options.format,
            invert_comparison: options.invert_comparison,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown state: {0}")]
    UnknownState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{context}: {source}")]
    Core {
        context: &'static str,
        source: commute_core::Error,
    },
    #[error("property violated: {0}")]
    PropertyViolation(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::FileNotFound(_) => "file_not_found",
            CliError::Parse { .. } => "parse_error",
            CliError::UnknownState(_) => "unknown_state",
            CliError::InvalidConfig(_) => "invalid_config",
            CliError::Usage(_) => "usage_error",
            CliError::Io(_) => "io_error",
            CliError::Core { source, .. } => source.code(),
            CliError::PropertyViolation(_) => "property_violation",
        }
    }

    /// 1 for bad input, 2 for numerical failure, 3 for a violated property.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } if source.is_numerical() => 2,
            CliError::PropertyViolation(_) => 3,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut obj = json!({ "code": self.code(), "message": self.to_string() });
        match self {
            CliError::Parse { line, .. } => obj["line"] = json!(line),
            CliError::UnknownState(s) => obj["state"] = json!(s),
            CliError::Core { context, .. } => obj["subcommand"] = json!(context),
            _ => {}
        }
        obj
    }
}

fn core(context: &'static str) -> impl Fn(commute_core::Error) -> CliError {
    move |source| match source {
        commute_core::Error::Parse { line, reason } => CliError::Parse { line, reason },
        source => CliError::Core { context, source },
    }
}

enum Input {
    Chain(ErgodicChain),
    Distances(LabelledMatrix),
}

fn read_input(path: &Path) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::FileNotFound(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load(config: &AnalysisConfig, context: &'static str) -> Result<Input, CliError> {
    let text = read_input(&config.input_path)?;
    let is_distance = text.trim_start().starts_with('{')
        && serde_json::from_str::<Value>(&text).is_ok_and(|v| v.get("T").is_some());
    if is_distance {
        let table = cio::parse_distance_json(&text).map_err(core(context))?;
        return Ok(Input::Distances(table));
    }
    let table = cio::parse_chain_auto(&text).map_err(core(context))?;
    let matrix =
        validate_chain(&table.rows, Some(table.labels), &config.settings).map_err(core(context))?;
    let chain = ErgodicChain::with_settings(matrix, config.settings).map_err(core(context))?;
    Ok(Input::Chain(chain))
}

fn load_chain(config: &AnalysisConfig, context: &'static str) -> Result<ErgodicChain, CliError> {
    match load(config, context)? {
        Input::Chain(c) => Ok(c),
        Input::Distances(_) => Err(CliError::InvalidConfig(format!(
            "{context} needs a transition matrix, got a distance table"
        ))),
    }
}

fn resolve(labels: &[String], reference: &str) -> Result<usize, CliError> {
    cio::resolve_state(labels, reference).ok_or_else(|| CliError::UnknownState(reference.into()))
}

/// Parses `a,b;c,d`; with no list, every unordered pair `a < b`.
pub fn parse_pairs(labels: &[String], list: Option<&str>) -> Result<Vec<(usize, usize)>, CliError> {
    let Some(list) = list else {
        let n = labels.len();
        return Ok((0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .collect());
    };
    list.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
            match parts.as_slice() {
                [a, b] => Ok((resolve(labels, a)?, resolve(labels, b)?)),
                _ => Err(CliError::InvalidConfig(format!(
                    "bad pair {pair:?}, expected a,b"
                ))),
            }
        })
        .collect()
}

fn commute_table(chain: &ErgodicChain, context: &'static str) -> Result<DMatrix<f64>, CliError> {
    let z = fundamental_matrix(chain).map_err(core(context))?;
    Ok(CommuteStructure::new(&z).commute().clone())
}

fn json_text(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// What a subcommand produced: text for stdout (or `--output`) and an
/// optional property violation to report after the text is written.
pub struct Outcome {
    pub text: String,
    pub violation: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self {
            text,
            violation: None,
        }
    }
}

fn matrix_output(
    config: &AnalysisConfig,
    labels: &[String],
    name: &str,
    m: &DMatrix<f64>,
) -> Result<Outcome, CliError> {
    match config.format.unwrap_or(Format::Csv) {
        Format::Csv => Ok(Outcome::ok(cio::matrix_to_csv(labels, m))),
        Format::Json => Ok(Outcome::ok(json_text(&json!({
            "labels": labels,
            name: cio::matrix_rows(m),
        })))),
        Format::Svg => Err(CliError::InvalidConfig(
            "svg output is only available for embed".into(),
        )),
    }
}

pub fn execute(command: Command, config: &AnalysisConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Validate => {
            let chain = load_chain(config, "validate")?;
            Ok(Outcome::ok(json_text(&json!({
                "valid": true,
                "n": chain.n(),
                "labels": chain.labels(),
                "reversible": chain.detailed_balance_defect() <= config.settings.rev_tol,
            }))))
        }
        Command::Stationary => {
            let chain = load_chain(config, "stationary")?;
            let w = chain.w().as_vector();
            match config.format.unwrap_or(Format::Json) {
                Format::Csv => {
                    let mut out = String::from("state,w\n");
                    for (l, x) in chain.labels().iter().zip(w.iter()) {
                        out.push_str(&format!("{l},{}\n", cio::fmt_f64(*x)));
                    }
                    Ok(Outcome::ok(out))
                }
                Format::Json => Ok(Outcome::ok(json_text(&json!({
                    "labels": chain.labels(),
                    "w": w.as_slice(),
                })))),
                Format::Svg => Err(CliError::InvalidConfig(
                    "svg output is only available for embed".into(),
                )),
            }
        }
        Command::Fundamental => {
            let chain = load_chain(config, "fundamental")?;
            let z = fundamental_matrix(&chain).map_err(core("fundamental"))?;
            if config.format == Some(Format::Json) {
                return Ok(Outcome::ok(json_text(&json!({
                    "labels": chain.labels(),
                    "Z": cio::matrix_rows(z.lowered()),
                    "Z_raised": cio::matrix_rows(z.raised()),
                    "condition": z.condition(),
                }))));
            }
            matrix_output(config, chain.labels(), "Z", z.lowered())
        }
        Command::Hitting => {
            let chain = load_chain(config, "hitting")?;
            let z = fundamental_matrix(&chain).map_err(core("hitting"))?;
            matrix_output(
                config,
                chain.labels(),
                "M",
                CommuteStructure::new(&z).hitting(),
            )
        }
        Command::Commute => {
            let chain = load_chain(config, "commute")?;
            let t = commute_table(&chain, "commute")?;
            matrix_output(config, chain.labels(), "T", &t)
        }
        Command::CrossPotential => cross_potential(config),
        Command::Embed => run_embed(config),
        Command::Realizability => run_realizability(config),
        Command::Reversibility => run_reversibility(config),
        Command::MinimaxCheck => run_minimax(config),
        Command::MonotonicityCheck => run_monotonicity(config),
        Command::Simulate => run_simulate(config),
    }
}

fn cross_potential(config: &AnalysisConfig) -> Result<Outcome, CliError> {
    let chain = load_chain(config, "cross-potential")?;
    let labels = chain.labels().to_vec();
    let pairs = parse_pairs(&labels, config.pairs.as_deref())?;
    let z = fundamental_matrix(&chain).map_err(core("cross-potential"))?;
    let n_form = CrossPotential::new(&z);
    let mut entries = Vec::new();
    for &(a, b) in &pairs {
        for &(c, d) in &pairs {
            let value = n_form.get(a, b, c, d).map_err(core("cross-potential"))?;
            entries.push(json!({
                "a": labels[a], "b": labels[b], "c": labels[c], "d": labels[d], "N": value,
            }));
        }
    }
    Ok(Outcome::ok(json_text(
        &json!({ "labels": labels, "entries": entries }),
    )))
}

fn distances(config: &AnalysisConfig, context: &'static str) -> Result<LabelledMatrix, CliError> {
    match load(config, context)? {
        Input::Distances(t) => Ok(t),
        Input::Chain(chain) => {
            let t = commute_table(&chain, context)?;
            Ok(LabelledMatrix {
                labels: chain.labels().to_vec(),
                rows: cio::matrix_rows(&t),
            })
        }
    }
}

fn reference(config: &AnalysisConfig, labels: &[String]) -> Result<usize, CliError> {
    config
        .ref_state
        .as_deref()
        .map_or(Ok(0), |r| resolve(labels, r))
}

fn to_matrix(table: &LabelledMatrix, context: &'static str) -> Result<DMatrix<f64>, CliError> {
    let n = table.rows.len();
    if let Some(row) = table.rows.iter().position(|r| r.len() != n) {
        return Err(CliError::Core {
            context,
            source: commute_core::Error::NotSquare {
                rows: n,
                row,
                cols: table.rows[row].len(),
            },
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| table.rows[i][j]))
}

fn run_embed(config: &AnalysisConfig) -> Result<Outcome, CliError> {
    let table = distances(config, "embed")?;
    let t = to_matrix(&table, "embed")?;
    let r = reference(config, &table.labels)?;
    let tol = config.psd_tol.unwrap_or_else(|| default_psd_tol(&t));
    let e = embed(&t, r, tol).map_err(core("embed"))?;
    let text = match config.format.unwrap_or(Format::Csv) {
        Format::Csv => cio::embedding_to_csv(&table.labels, &e),
        Format::Svg => cio::embedding_to_svg(&table.labels, &e),
        Format::Json => json_text(&json!({
            "labels": table.labels,
            "ref_state": table.labels[e.ref_state],
            "eigenvalues": e.eigenvalues,
            "coords": cio::matrix_rows(&e.coords),
            "max_distance_error": e.max_distance_error(&t),
        })),
    };
    Ok(Outcome::ok(text))
}

fn run_realizability(config: &AnalysisConfig) -> Result<Outcome, CliError> {
    let table = distances(config, "realizability")?;
    let t = to_matrix(&table, "realizability")?;
    let r = reference(config, &table.labels)?;
    let tol = config.psd_tol.unwrap_or_else(|| default_psd_tol(&t));
    let report = realizability_check(&t, r, tol).map_err(core("realizability"))?;
    Ok(Outcome::ok(json_text(&json!({
        "realizable": report.realizable,
        "min_eigenvalue": report.min_eigenvalue,
        "eigenvalues": report.eigenvalues,
        "psd_tol": report.psd_tol,
        "ref_state": table.labels[report.ref_state],
        "gram_states": report.states.iter().map(|&i| &table.labels[i]).collect::<Vec<_>>(),
        "gram": cio::matrix_rows(&report.gram),
        "witness": report.witness,
    }))))
}

fn run_reversibility(config: &AnalysisConfig) -> Result<Outcome, CliError> {
    let chain = load_chain(config, "reversibility")?;
    let n = chain.n();
    let ground = match config.ref_state.as_deref() {
        Some(r) => resolve(chain.labels(), r)?,
        None => n - 1,
    };
    let z = fundamental_matrix(&chain).map_err(core("reversibility"))?;
    let s = CommuteStructure::new(&z);
    let report = reversibility_check(&chain, s.hitting(), &z, ground, config.settings.rev_tol)
        .map_err(core("reversibility"))?;
    let text = json_text(&json!({
        "reversible": report.reversible,
        "criteria_agree": report.criteria_agree(),
        "max_cycle_defect": report.max_cycle_defect,
        "detailed_balance": report.detailed_balance,
        "detailed_balance_defect": report.detailed_balance_defect,
        "obstruction_vanishes": report.obstruction_vanishes,
        "max_obstruction": report.max_obstruction,
        "obstruction": cio::matrix_rows(&report.obstruction),
        "ground_state": chain.labels()[ground],
        "rev_tol": report.rev_tol,
    }));
    let violation = (!report.criteria_agree()).then(|| "reversibility tests disagree".to_string());
    Ok(Outcome { text, violation })
}

fn run_minimax(config: &AnalysisConfig) -> Result<Outcome, CliError> {
    let chain = load_chain(config, "minimax-check")?;
    let labels = chain.labels().to_vec();
    let pairs = parse_pairs(&labels, config.pairs.as_deref())?;
    let t = commute_table(&chain, "minimax-check")?;
    let mut reports = Vec::new();
    let mut failed = Vec::new();
    for (k, &(a, b)) in pairs.iter().enumerate() {
        if a == b {
            return Err(core("minimax-check")(commute_core::Error::SameState(a)));
        }
        let seed = config.seed.wrapping_add(k as u64);
        let report = minimax_verify_with_commute(&chain, a, b, t[(a, b)], config.trials, seed)
            .map_err(core("minimax-check"))?;
        if !report.passed() {
            failed.push(format!("{},{}", labels[a], labels[b]));
        }
        let mut value = serde_json::to_value(&report).expect("serializable");
        value["passed"] = json!(report.passed());
        value["max_violation"] = json!(report.max_violation());
        reports.push(value);
    }
    let text = json_text(&json!({ "labels": labels, "pairs": reports }));
    let violation =
        (!failed.is_empty()).then(|| format!("minimax check failed for {}", failed.join("; ")));
    Ok(Outcome { text, violation })
}

fn run_monotonicity(config: &AnalysisConfig) -> Result<Outcome, CliError> {
    let chain = load_chain(config, "monotonicity-check")?;
    let mut mc = MonotonicityConfig::new(config.trials, config.seed);
    mc.invert_comparison = config.invert_comparison;
    let report = monotonicity_experiment(&chain, mc).map_err(core("monotonicity-check"))?;
    let text = json_text(&serde_json::to_value(&report).expect("serializable"));
    let violation = (report.violations > 0)
        .then(|| format!("{} pairs with increased commuting time", report.violations));
    Ok(Outcome { text, violation })
}

fn run_simulate(config: &AnalysisConfig) -> Result<Outcome, CliError> {
    let chain = load_chain(config, "simulate")?;
    let labels = chain.labels().to_vec();
    let start = match config.ref_state.as_deref() {
        Some(r) => Start::State(resolve(&labels, r)?),
        None => Start::Stationary,
    };
    let sample = simulate(&chain, config.steps, config.seed, start).map_err(core("simulate"))?;
    let mut value = json!({ "labels": labels, "trajectory": sample });
    if let Some(list) = config.pairs.as_deref() {
        let pairs = parse_pairs(&labels, Some(list))?;
        let z = fundamental_matrix(&chain).map_err(core("simulate"))?;
        let s = CommuteStructure::new(&z);
        let mut estimates = Vec::new();
        for &(a, b) in &pairs {
            let paint = estimate_commute_paint(&chain, a, b, config.steps, config.seed)
                .map_err(core("simulate"))?;
            let hitting = estimate_hitting(&chain, a, b, config.episodes, config.seed)
                .map_err(core("simulate"))?;
            estimates.push(json!({
                "a": labels[a],
                "b": labels[b],
                "commute": { "analytic": s.commute()[(a, b)], "paint": paint },
                "hitting": { "analytic": s.hitting()[(a, b)], "estimate": hitting },
            }));
        }
        value["estimates"] = json!(estimates);
    }
    Ok(Outcome::ok(json_text(&value)))
}

/// Runs the parsed command line, writing results to `--output` or `stdout`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = AnalysisConfig::from_options(&cli.options)?;
    let outcome = execute(cli.command, &config)?;
    match &config.output_path {
        Some(path) => fs::write(path, &outcome.text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => stdout
            .write_all(outcome.text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    match outcome.violation {
        Some(v) => Err(CliError::PropertyViolation(v)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        ["a", "b", "2", "c"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn pairs_resolve_labels_before_indices() {
        let pairs = parse_pairs(&labels(), Some("a,b; 2,0 ;3,c")).unwrap();
        assert_eq!(pairs, [(0, 1), (2, 0), (3, 3)]);
        assert_eq!(parse_pairs(&labels(), None).unwrap().len(), 6);
    }

    #[test]
    fn bad_pairs() {
        assert!(matches!(
            parse_pairs(&labels(), Some("a")),
            Err(CliError::InvalidConfig(_))
        ));
        assert!(matches!(
            parse_pairs(&labels(), Some("a,q")),
            Err(CliError::UnknownState(_))
        ));
    }

    #[test]
    fn exit_codes() {
        let numerical = CliError::Core {
            context: "commute",
            source: commute_core::Error::SolverFailure("singular".into()),
        };
        assert_eq!(numerical.exit_code(), 2);
        assert_eq!(CliError::PropertyViolation("x".into()).exit_code(), 3);
        assert_eq!(CliError::UnknownState("x".into()).exit_code(), 1);
        let err = CliError::Parse {
            line: 4,
            reason: "bad".into(),
        };
        assert_eq!(err.to_json()["line"], 4);
    }
}
