//! The three commands behind the binary. Everything here is a thin shell
//! over the library: simulate, serialize, summarize, and run the invariant
//! suites. Exit codes: 0 success, 1 usage/config error, 2 invariant failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_rational::BigRational;

use ringavg_core::{
    check_conservation, check_window_invariant, coloring_for, even_round_plan, metrics_of,
    odd_round_plan, perturbation_sensitivity, run_even, run_odd, simulate, verify_matching,
    Algorithm, AnyTrace, ColoringChoice, EngineError, Mode, RingSize, Scalar, SimulationConfig,
    Verbosity,
};

use crate::experiment::{
    CheckerKind, ExperimentError, ExperimentSpec, FileFormat, LabeledConfig,
};
use crate::formats::{trace_to_csv, trace_to_json, FormatError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_CHECK: i32 = 2;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "RINGAVG_OUT";

#[derive(Debug)]
pub enum CliError {
    Experiment(ExperimentError),
    Engine(EngineError),
    Format(FormatError),
    Io(std::io::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Experiment(e) => write!(f, "{e}"),
            CliError::Engine(e) => write!(f, "{e}"),
            CliError::Format(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        CliError::Experiment(e)
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        CliError::Engine(e)
    }
}

impl From<ringavg_core::ProtocolError> for CliError {
    fn from(e: ringavg_core::ProtocolError) -> Self {
        CliError::Engine(e.into())
    }
}

impl From<ringavg_core::ScheduleError> for CliError {
    fn from(e: ringavg_core::ScheduleError) -> Self {
        CliError::Engine(e.into())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Format(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// `--out` flag, then spec file, then env var, then `./ringavg-out`.
pub fn resolve_out_dir(from_spec: Option<&Path>) -> PathBuf {
    if let Some(dir) = from_spec {
        return dir.to_path_buf();
    }
    if let Some(dir) = std::env::var_os(OUT_DIR_ENV) {
        return PathBuf::from(dir);
    }
    PathBuf::from("ringavg-out")
}

struct RunOutcome {
    m: usize,
    n: usize,
    algorithm: String,
    mode: Mode,
    rounds: usize,
    messages: usize,
    exact: bool,
}

fn outcome_of(trace: &AnyTrace) -> Result<RunOutcome, CliError> {
    let (rounds_to_exact, messages) = match trace {
        AnyTrace::Exact(t) => {
            let m = metrics_of(t)?;
            (m.rounds_to_exact, m.total_messages)
        }
        AnyTrace::Float(t) => {
            let m = metrics_of(t)?;
            (m.rounds_to_exact, m.total_messages)
        }
    };
    let meta = trace.meta();
    let totals = trace.totals();
    Ok(RunOutcome {
        m: meta.m,
        n: meta.m / 2,
        algorithm: meta.algorithm.to_string(),
        mode: meta.mode,
        rounds: rounds_to_exact.unwrap_or(totals.comm_rounds),
        messages,
        exact: rounds_to_exact.is_some(),
    })
}

fn summary_line(outcome: &RunOutcome) -> String {
    format!(
        "m={} n={} algorithm={} mode={} rounds={} messages={} exact={}",
        outcome.m,
        outcome.n,
        outcome.algorithm,
        outcome.mode,
        outcome.rounds,
        outcome.messages,
        outcome.exact
    )
}

fn write_trace_files(
    out_dir: &Path,
    label: &str,
    trace: &AnyTrace,
    formats: &[FileFormat],
) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    for format in formats {
        match format {
            FileFormat::Json => {
                fs::write(out_dir.join(format!("trace_{label}.json")), trace_to_json(trace))?;
            }
            FileFormat::Csv => {
                fs::write(out_dir.join(format!("trace_{label}.csv")), trace_to_csv(trace))?;
            }
        }
    }
    Ok(())
}

/// Executes every run of the spec, writes traces and the summary, then runs
/// any checkers the spec enables on the same configs.
pub fn cmd_run(spec: &ExperimentSpec, verbosity: Verbosity) -> Result<i32, CliError> {
    let runs = spec.expand(verbosity)?;
    let out_dir = resolve_out_dir(spec.out_dir.as_deref());
    let formats = if spec.formats.is_empty() {
        vec![FileFormat::Json]
    } else {
        spec.formats.clone()
    };

    let mut outcomes = Vec::with_capacity(runs.len());
    for run in &runs {
        let trace = simulate(&run.config)?;
        write_trace_files(&out_dir, &run.label, &trace, &formats)?;
        outcomes.push(outcome_of(&trace)?);
    }

    let mut summary_csv = String::from("m,n,algorithm,mode,rounds,messages,exact\n");
    for outcome in &outcomes {
        println!("{}", summary_line(outcome));
        summary_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            outcome.m,
            outcome.n,
            outcome.algorithm,
            outcome.mode,
            outcome.rounds,
            outcome.messages,
            outcome.exact
        ));
    }
    fs::create_dir_all(&out_dir)?;
    fs::write(out_dir.join("summary.csv"), summary_csv)?;

    if !spec.checkers.is_empty() {
        let report = run_checker_suites(&runs, &spec.checkers)?;
        print_check_report(&report);
        if !report.all_passed() {
            return Ok(EXIT_CHECK);
        }
    }
    Ok(EXIT_OK)
}

/// One row of the pass/fail matrix.
pub struct CheckRow {
    pub checker: CheckerKind,
    pub passed: usize,
    pub failed: usize,
    pub first_failure: Option<String>,
}

pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|row| row.failed == 0)
    }
}

fn exact_initial(config: &SimulationConfig) -> Result<Option<Vec<BigRational>>, CliError> {
    if config.mode != Mode::Exact {
        return Ok(None);
    }
    let values = config.resolve_initial()?;
    Ok(Some(
        values
            .iter()
            .map(|v| BigRational::from_value(v).expect("mode checked"))
            .collect(),
    ))
}

fn check_conservation_suite(run: &LabeledConfig) -> Result<Option<bool>, CliError> {
    if run.config.algorithm == Algorithm::Flooding {
        return Ok(None);
    }
    let mut config = run.config.clone();
    config.verbosity = Verbosity::PerIteration;
    let ok = match simulate(&config)? {
        AnyTrace::Exact(trace) => check_conservation(&trace)?,
        AnyTrace::Float(trace) => check_conservation(&trace)?,
    };
    Ok(Some(ok))
}

fn check_matching_suite(run: &LabeledConfig) -> Result<Option<bool>, CliError> {
    let ring = RingSize::new(run.config.m)?;
    let algorithm = run.config.resolve_algorithm(ring)?;
    let (plan, expected_classes) = match algorithm {
        Algorithm::Even | Algorithm::ConstantGossip => (even_round_plan(ring)?, 2),
        Algorithm::Odd => {
            let choice = run.config.coloring.unwrap_or(ColoringChoice::Canonical);
            (odd_round_plan(ring, &coloring_for(ring, choice)?)?, 3)
        }
        Algorithm::Flooding => return Ok(None),
        Algorithm::Auto => unreachable!("resolved above"),
    };
    let all_valid = plan
        .entries
        .iter()
        .all(|entry| verify_matching(entry.matching.edges(), run.config.m));
    Ok(Some(
        all_valid && plan.distinct_real_matchings().len() == expected_classes,
    ))
}

fn check_window_suite(run: &LabeledConfig) -> Result<Option<bool>, CliError> {
    let ring = RingSize::new(run.config.m)?;
    if run.config.resolve_algorithm(ring)? != Algorithm::Even {
        return Ok(None);
    }
    let Some(values) = exact_initial(&run.config)? else {
        return Ok(None);
    };
    let trace = run_even(ring, &values, Verbosity::PerIteration)?;
    let n = ring.half();
    for i in 1..=ring.get() {
        if (i + n) % 2 != 0 {
            continue;
        }
        for s in 1..n {
            if !check_window_invariant(&trace, i, s)? {
                return Ok(Some(false));
            }
        }
    }
    Ok(Some(true))
}

fn check_locality_suite(run: &LabeledConfig) -> Result<Option<bool>, CliError> {
    let ring = RingSize::new(run.config.m)?;
    if run.config.resolve_algorithm(ring)? != Algorithm::Even {
        return Ok(None);
    }
    let Some(values) = exact_initial(&run.config)? else {
        return Ok(None);
    };
    let m = ring.get();
    for j in [1, 1 + m / 4, 1 + m / 2] {
        let report = perturbation_sensitivity(ring, &values, j, &BigRational::from_int(1))?;
        for (agent, first) in report {
            if let Some(first) = first {
                if first < ring.distance(agent, j)? {
                    return Ok(Some(false));
                }
            }
        }
    }
    Ok(Some(true))
}

fn check_coloring_suite(run: &LabeledConfig) -> Result<Option<bool>, CliError> {
    let ring = RingSize::new(run.config.m)?;
    if run.config.resolve_algorithm(ring)? != Algorithm::Odd {
        return Ok(None);
    }
    let Some(values) = exact_initial(&run.config)? else {
        return Ok(None);
    };
    let canonical = coloring_for(ring, ColoringChoice::Canonical)?;
    let reference = run_odd(ring, &values, &canonical, None, Verbosity::FinalOnly)?.final_estimates;

    for order in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let coloring = canonical.reordered(order).map_err(EngineError::from)?;
        let result = run_odd(ring, &values, &coloring, None, Verbosity::FinalOnly)?.final_estimates;
        if result != reference {
            return Ok(Some(false));
        }
    }
    if ring.get() == 7 {
        for choice in [ColoringChoice::Fig2a, ColoringChoice::Fig2b] {
            let coloring = coloring_for(ring, choice)?;
            let result =
                run_odd(ring, &values, &coloring, Some(choice), Verbosity::FinalOnly)?
                    .final_estimates;
            if result != reference {
                return Ok(Some(false));
            }
        }
    }
    Ok(Some(true))
}

/// Runs the selected invariant suites over every run of the sweep.
pub fn run_checker_suites(
    runs: &[LabeledConfig],
    checkers: &[CheckerKind],
) -> Result<CheckReport, CliError> {
    let mut rows = Vec::new();
    for &checker in checkers {
        let mut passed = 0;
        let mut failed = 0;
        let mut first_failure = None;
        for run in runs {
            let verdict = match checker {
                CheckerKind::Conservation => check_conservation_suite(run)?,
                CheckerKind::Matching => check_matching_suite(run)?,
                CheckerKind::WindowIdentity => check_window_suite(run)?,
                CheckerKind::Locality => check_locality_suite(run)?,
                CheckerKind::Coloring => check_coloring_suite(run)?,
            };
            match verdict {
                Some(true) => passed += 1,
                Some(false) => {
                    failed += 1;
                    if first_failure.is_none() {
                        first_failure = Some(run.label.clone());
                    }
                }
                None => {}
            }
        }
        rows.push(CheckRow {
            checker,
            passed,
            failed,
            first_failure,
        });
    }
    Ok(CheckReport { rows })
}

pub fn print_check_report(report: &CheckReport) {
    println!("{:<18} {:>6} {:>6}  result", "checker", "passed", "failed");
    for row in &report.rows {
        let result = if row.failed == 0 { "ok" } else { "FAIL" };
        println!(
            "{:<18} {:>6} {:>6}  {}",
            row.checker.name(),
            row.passed,
            row.failed,
            result
        );
        if let Some(label) = &row.first_failure {
            println!("  first counterexample: {label}");
        }
    }
}

/// Runs the invariant suites over a sweep and prints the pass/fail matrix.
pub fn cmd_check(spec: &ExperimentSpec) -> Result<i32, CliError> {
    let runs = spec.expand(Verbosity::PerIteration)?;
    let checkers = if spec.checkers.is_empty() {
        CheckerKind::ALL.to_vec()
    } else {
        spec.checkers.clone()
    };
    let report = run_checker_suites(&runs, &checkers)?;
    print_check_report(&report);
    Ok(if report.all_passed() { EXIT_OK } else { EXIT_CHECK })
}

/// Runs several algorithms on the same input and emits the comparison CSV:
/// rounds to exact (or the horizon), messages, and peak per-agent memory.
pub fn cmd_compare(runs: &[LabeledConfig], out_dir: Option<&Path>) -> Result<i32, CliError> {
    if runs.len() < 2 {
        return Err(CliError::Usage(
            "compare needs at least two algorithms".to_string(),
        ));
    }
    let mut csv = String::from("algorithm,m,mode,rounds,messages,peak_agent_values,exact\n");
    println!(
        "{:<16} {:>4} {:>7} {:>9} {:>10} {:>6}",
        "algorithm", "m", "rounds", "messages", "peak_vals", "exact"
    );
    for run in runs {
        let trace = simulate(&run.config)?;
        let outcome = outcome_of(&trace)?;
        let peak = trace.totals().peak_agent_values;
        println!(
            "{:<16} {:>4} {:>7} {:>9} {:>10} {:>6}",
            outcome.algorithm, outcome.m, outcome.rounds, outcome.messages, peak, outcome.exact
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            outcome.algorithm,
            outcome.m,
            outcome.mode,
            outcome.rounds,
            outcome.messages,
            peak,
            outcome.exact
        ));
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        let m = runs[0].config.m;
        fs::write(dir.join(format!("compare_m{m}.csv")), csv)?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{AlgorithmArg, ExperimentSpec, ModeArg, RunSpec, SweepSpec};

    fn spec_for(m: usize, seed: u64) -> ExperimentSpec {
        ExperimentSpec {
            configs: vec![RunSpec {
                m,
                values: None,
                seed: Some(seed),
                mode: ModeArg::Exact,
                algorithm: AlgorithmArg::Auto,
                coloring: None,
                horizon: None,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn checker_suites_pass_on_a_small_sweep() {
        let spec = ExperimentSpec {
            sweeps: vec![SweepSpec {
                m_from: 3,
                m_to: 10,
                m_step: 1,
                seeds: vec![1],
                mode: ModeArg::Exact,
                algorithm: AlgorithmArg::Auto,
                horizon: None,
            }],
            ..Default::default()
        };
        let runs = spec.expand(Verbosity::PerIteration).unwrap();
        let report = run_checker_suites(&runs, &CheckerKind::ALL).unwrap();
        assert!(report.all_passed());
        // four even sizes in 3..=10 feed the even-only suites
        let locality = report
            .rows
            .iter()
            .find(|row| row.checker == CheckerKind::Locality)
            .unwrap();
        assert_eq!(locality.passed, 4);
        assert_eq!(locality.failed, 0);
    }

    #[test]
    fn a_failed_row_flips_the_report_and_exit_code() {
        let report = CheckReport {
            rows: vec![CheckRow {
                checker: CheckerKind::Conservation,
                passed: 3,
                failed: 1,
                first_failure: Some("m6_even_exact_seed1".to_string()),
            }],
        };
        assert!(!report.all_passed());
        // cmd_run and cmd_check turn a failed report into the check exit code
        let code = if report.all_passed() { EXIT_OK } else { EXIT_CHECK };
        assert_eq!(code, EXIT_CHECK);
    }

    #[test]
    fn run_errors_are_config_errors() {
        assert!(matches!(
            cmd_run(&spec_for(2, 1), Verbosity::FinalOnly),
            Err(CliError::Engine(_))
        ));
    }
}
