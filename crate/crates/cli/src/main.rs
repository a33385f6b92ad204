use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gwnorm::analysis::{convergence_table, property_suite, AnalysisError};
use gwnorm::dynamics::{simulate, DynamicsError, Scenario};
use gwnorm::flatnorm::{dual_value, signed_solution, FlatNormError, NormParams};
use gwnorm::SignedMeasure;
use serde::Serialize;

/// Largest duality gap tolerated before `--check-dual` reports a failure.
const GAP_TOLERANCE: f64 = 1e-6;
/// Relative excess over the refinement bound tolerated by `converge`.
const BOUND_SLACK: f64 = 0.05;

#[derive(Parser)]
#[command(
    name = "gwnorm",
    version,
    about = "Generalized Wasserstein norms and a particle scheme for transport with a source"
)]
struct Cli {
    /// Cancellation cost per unit mass.
    #[arg(long, global = true, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Transport cost per unit mass and distance.
    #[arg(long, global = true, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Write the main output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Norm of a signed measure.
    Norm {
        measure: PathBuf,
        /// Also solve the dual problem and report the gap.
        #[arg(long)]
        check_dual: bool,
    },
    /// Distance between two signed measures.
    Distance {
        first: PathBuf,
        second: PathBuf,
        #[arg(long)]
        check_dual: bool,
    },
    /// Run the scheme and write the trajectory.
    Simulate { scenario: PathBuf },
    /// Compare consecutive refinement levels against the error bound.
    Converge {
        scenario: PathBuf,
        #[arg(long)]
        k_min: u32,
        #[arg(long)]
        k_max: u32,
    },
    /// Seeded randomized checks of the metric and norm identities.
    Proptest {
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<FlatNormError> for Failure {
    fn from(e: FlatNormError) -> Self {
        match e {
            FlatNormError::InvalidParams { .. }
            | FlatNormError::Measure(_)
            | FlatNormError::InvalidInput(_)
            | FlatNormError::TooLarge(_) => Failure::usage(e.to_string()),
            _ => Failure::runtime(e.to_string()),
        }
    }
}

impl From<DynamicsError> for Failure {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidScenario(_) | DynamicsError::InvalidModel(_) => {
                Failure::usage(e.to_string())
            }
            DynamicsError::FlatNorm(inner) => inner.into(),
            _ => Failure::runtime(e.to_string()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::InvalidArgument(m) => Failure::usage(m),
            AnalysisError::Dynamics(inner) => inner.into(),
            AnalysisError::FlatNorm(inner) => inner.into(),
        }
    }
}

#[derive(Serialize)]
struct NormRecord {
    value: f64,
    moved_mass: f64,
    cancelled_mass: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duality_gap: Option<f64>,
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_measure(path: &Path) -> Result<SignedMeasure, Failure> {
    serde_json::from_str(&read(path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Loads a scenario, replacing its norm parameters by any given on the
/// command line.
fn load_scenario(path: &Path, a: Option<f64>, b: Option<f64>) -> Result<Scenario, Failure> {
    let s = Scenario::from_json(&read(path)?)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if a.is_none() && b.is_none() {
        return Ok(s);
    }
    let mut file = s.file().clone();
    file.norm = NormParams::new(a.unwrap_or(file.norm.a), b.unwrap_or(file.norm.b))?;
    Ok(Scenario::new(file)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))
        }
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::runtime(e.to_string())),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes") + "\n"
}

fn distance_record(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    p: NormParams,
    check_dual: bool,
) -> Result<(NormRecord, bool), Failure> {
    let sol = signed_solution(mu, nu, p)?;
    let mut record = NormRecord {
        value: sol.value,
        moved_mass: sol.moved_mass(),
        cancelled_mass: sol.cancelled_mass(),
        dual_value: None,
        duality_gap: None,
    };
    let mut ok = true;
    if check_dual {
        let (dual, _) = dual_value(mu, nu, p)?;
        let gap = (sol.value - dual).abs();
        record.dual_value = Some(dual);
        record.duality_gap = Some(gap);
        ok = gap <= GAP_TOLERANCE;
    }
    Ok((record, ok))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let params = || NormParams::new(cli.a.unwrap_or(1.0), cli.b.unwrap_or(1.0));
    match &cli.command {
        Command::Norm {
            measure,
            check_dual,
        } => {
            let mu = load_measure(measure)?;
            let empty = SignedMeasure::empty(mu.dim());
            let (record, ok) = distance_record(&mu, &empty, params()?, *check_dual)?;
            emit(&cli.out, &to_json(&record))?;
            Ok(if ok { 0 } else { 3 })
        }
        Command::Distance {
            first,
            second,
            check_dual,
        } => {
            let (mu, nu) = (load_measure(first)?, load_measure(second)?);
            let (record, ok) = distance_record(&mu, &nu, params()?, *check_dual)?;
            emit(&cli.out, &to_json(&record))?;
            Ok(if ok { 0 } else { 3 })
        }
        Command::Simulate { scenario } => {
            let s = load_scenario(scenario, cli.a, cli.b)?;
            let traj = simulate(&s)?;
            let body = match cli.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&traj),
                Format::Csv => {
                    let mut buf = Vec::new();
                    traj.write_csv(&mut buf)
                        .map_err(|e| Failure::runtime(e.to_string()))?;
                    String::from_utf8(buf).expect("csv output is ascii")
                }
            };
            emit(&cli.out, &body)?;
            let last = traj.final_state();
            let summary = format!(
                "steps={} final_mass={:?} final_support_radius={:?} atoms={}",
                1u64 << s.level(),
                last.mass(),
                last.support_radius(),
                last.len()
            );
            // Keep stdout clean when it carries the trajectory.
            if cli.out.is_some() {
                println!("{summary}");
            } else {
                eprintln!("{summary}");
            }
            Ok(0)
        }
        Command::Converge {
            scenario,
            k_min,
            k_max,
        } => {
            let s = load_scenario(scenario, cli.a, cli.b)?;
            let report = convergence_table(&s, *k_min, *k_max, s.snapshot_times())?;
            let body = match cli.format {
                Some(Format::Json) => to_json(&report),
                Some(Format::Csv) => {
                    let mut csv = String::from("k,sup_distance,ratio,bound\n");
                    for r in &report.rows {
                        let ratio = r.ratio.map_or(String::new(), |v| format!("{v:?}"));
                        csv.push_str(&format!(
                            "{},{:?},{ratio},{:?}\n",
                            r.k, r.sup_distance, r.bound
                        ));
                    }
                    csv
                }
                None => report.to_text(),
            };
            emit(&cli.out, &body)?;
            let violations = report.violations(BOUND_SLACK);
            for r in &violations {
                eprintln!(
                    "k={}: sup distance {:e} exceeds bound {:e} by more than {}%",
                    r.k,
                    r.sup_distance,
                    r.bound,
                    BOUND_SLACK * 100.0
                );
            }
            Ok(if violations.is_empty() { 0 } else { 3 })
        }
        Command::Proptest { trials } => {
            let report = property_suite(cli.seed, *trials, params()?)?;
            let body = match cli.format {
                Some(Format::Json) => report.to_json() + "\n",
                Some(Format::Csv) => {
                    return Err(Failure::usage("proptest reports are json or text"))
                }
                None => report.to_text(),
            };
            emit(&cli.out, &body)?;
            Ok(if report.all_pass() { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
