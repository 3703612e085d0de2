//! `backflow`: command-line front end for the ring backflow simulator.

use std::fmt::Write as _;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use backflow_core::circuit::{backflow_angles, prepare_backflow_circuit, Plan};
use backflow_core::experiment::{
    ingest_measurements, run_exact, run_simulation, ExperimentReport, MeasuredData, Mode,
    SimulationConfig, DEFAULT_SHOTS_PER_SETTING,
};
use backflow_core::pauli::{current_decomposition, dense_current_matrix, WeightedPauliSum};
use backflow_core::statevector::{Statevector, MAX_QUBITS};
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_HELP: &str = "\
Exit status:
  0  success
  2  usage error (bad flags or invalid flag combination)
  3  engine error (simulation or arithmetic failure, unwritable output)
  4  data error (unreadable or malformed input file)

Environment variables set defaults for the matching flags; explicit flags win.";

/// Largest register for which `decompose --dense` prints the matrix.
const DENSE_PRINT_MAX: usize = 8;

#[derive(Parser, Debug)]
#[command(
    name = "backflow",
    version,
    about = "Quantum backflow on a ring: Pauli decomposition, state preparation, \
             exact and shot-based current estimation, and measurement-data analysis",
    after_help = EXIT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print λ0 and the weighted Pauli strings of the current operator
    #[command(after_help = EXIT_HELP)]
    Decompose {
        /// Number of qubits
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=30))]
        n: u32,
        /// Also print the dense integer matrix (n ≤ 8)
        #[arg(long)]
        dense: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Print the preparation circuit of the backflowing state (n = 1 or 2)
    #[command(after_help = EXIT_HELP)]
    Prepare {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
        n: u32,
        #[command(flatten)]
        out: Output,
    },
    /// Compute the current exactly, from simulated shots, or from measured data
    #[command(after_help = EXIT_HELP)]
    Current(CurrentArgs),
    /// Estimate the current from measured probabilities, counts or expectations
    #[command(after_help = EXIT_HELP)]
    Analyze {
        /// Measurement file (JSON); `-` reads standard input
        #[arg(long, env = "BACKFLOW_INPUT")]
        input: PathBuf,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args, Debug)]
struct CurrentArgs {
    /// Number of qubits
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=30),
          required_unless_present_any = ["range", "input"], conflicts_with = "range")]
    n: Option<u32>,
    /// Sweep of qubit counts, e.g. `1..8` (inclusive)
    #[arg(long, value_parser = parse_range)]
    range: Option<(usize, usize)>,
    #[arg(long, value_enum, env = "BACKFLOW_MODE", default_value = "exact")]
    mode: ModeArg,
    /// Shots per measurement setting
    #[arg(long, env = "BACKFLOW_SHOTS", default_value_t = DEFAULT_SHOTS_PER_SETTING,
          value_parser = clap::value_parser!(u64).range(1..))]
    shots: u64,
    /// Base seed of the shot sampler
    #[arg(long, env = "BACKFLOW_SEED", default_value_t = 0)]
    seed: u64,
    /// One setting per commuting group (default)
    #[arg(long, conflicts_with = "per_term")]
    grouped: bool,
    /// One setting per Pauli string
    #[arg(long, env = "BACKFLOW_PER_TERM")]
    per_term: bool,
    /// Independent bit-flip probability applied to every readout bit
    #[arg(long, env = "BACKFLOW_READOUT_FLIP", default_value_t = 0.0, value_parser = parse_flip)]
    readout_flip: f64,
    /// Ring angle at which the exact current is evaluated (exact mode)
    #[arg(long, allow_negative_numbers = true, value_parser = parse_finite)]
    theta0: Option<f64>,
    /// Measurement file for ingest mode; `-` reads standard input
    #[arg(long, env = "BACKFLOW_INPUT")]
    input: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct Output {
    /// Write the report here instead of standard output
    #[arg(long, env = "BACKFLOW_OUTPUT")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, env = "BACKFLOW_FORMAT")]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Shots,
    Ingest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected LO..HI, got {s:?}"))?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let lo: usize = a
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound {a:?}"))?;
    let hi: usize = b
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound {b:?}"))?;
    if lo == 0 || lo > hi || hi > MAX_QUBITS {
        return Err(format!("range must satisfy 1 ≤ LO ≤ HI ≤ {MAX_QUBITS}"));
    }
    Ok((lo, hi))
}

fn parse_finite(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s}"))
    }
}

fn parse_flip(s: &str) -> Result<f64, String> {
    let p = parse_finite(s)?;
    if (0.0..0.5).contains(&p) {
        Ok(p)
    } else {
        Err(format!("readout flip must be in [0, 0.5), got {p}"))
    }
}

enum Failure {
    Usage(String),
    Engine(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Engine(_) => 3,
            Failure::Data(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Engine(m) | Failure::Data(m) => m,
        }
    }
}

impl From<backflow_core::Error> for Failure {
    fn from(e: backflow_core::Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else {
            Failure::Engine(e.to_string())
        }
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("backflow: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli, matches: &ArgMatches) -> Outcome<()> {
    match cli.command {
        Command::Decompose { n, dense, out } => {
            let n = n as usize;
            if dense && n > DENSE_PRINT_MAX {
                return Err(Failure::Usage(format!(
                    "--dense is limited to n ≤ {DENSE_PRINT_MAX}"
                )));
            }
            let sum = current_decomposition(n)?;
            let dense = if dense {
                Some(dense_current_matrix(n)?)
            } else {
                None
            };
            let rows = dense.map(|m| (0..m.dim()).map(|r| m.row(r).to_vec()).collect::<Vec<_>>());
            let text =
                render_decomposition(&sum, rows.as_deref(), out.format.unwrap_or(Format::Table));
            emit(&out, &text)
        }
        Command::Prepare { n, out } => {
            let n = n as usize;
            let circuit = prepare_backflow_circuit(n)?;
            let state: Statevector = circuit.simulate()?;
            #[derive(Serialize)]
            struct Prepared {
                n_qubits: usize,
                angles: backflow_core::circuit::PrepAngles,
                gates: serde_json::Value,
                amplitudes: Vec<f64>,
            }
            let prepared = Prepared {
                n_qubits: n,
                angles: backflow_angles(n)?,
                gates: circuit.to_json(),
                amplitudes: state.amplitudes().iter().map(|a| a.re).collect(),
            };
            let text = match out.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&prepared)?,
                Format::Csv => {
                    let mut s = String::from("index,amplitude\n");
                    for (i, a) in prepared.amplitudes.iter().enumerate() {
                        let _ = writeln!(s, "{i},{a}");
                    }
                    s
                }
                Format::Table => {
                    let mut s = String::new();
                    for g in circuit.gates() {
                        let _ = writeln!(s, "{g:?}");
                    }
                    for (i, a) in prepared.amplitudes.iter().enumerate() {
                        let _ = writeln!(s, "amplitude[{i}] = {a:.9}");
                    }
                    s
                }
            };
            emit(&out, &text)
        }
        Command::Analyze { input, out } => {
            let report = analyze(&input)?;
            emit(
                &out,
                &render_report(&report, out.format.unwrap_or(Format::Json))?,
            )
        }
        Command::Current(args) => {
            let sub = matches
                .subcommand_matches("current")
                .expect("current subcommand matched");
            current(args, sub)
        }
    }
}

fn from_command_line(m: &ArgMatches, id: &str) -> bool {
    m.value_source(id) == Some(ValueSource::CommandLine)
}

fn current(args: CurrentArgs, m: &ArgMatches) -> Outcome<()> {
    let explicit = |id: &str| from_command_line(m, id);
    let usage = |msg: &str| Err(Failure::Usage(msg.to_string()));
    match args.mode {
        ModeArg::Exact => {
            for id in [
                "shots",
                "seed",
                "readout_flip",
                "grouped",
                "per_term",
                "input",
            ] {
                if explicit(id) {
                    return usage(&format!(
                        "--{} does not apply to exact mode",
                        id.replace('_', "-")
                    ));
                }
            }
        }
        ModeArg::Shots => {
            if args.theta0.is_some() {
                return usage("--theta0 applies to exact mode only");
            }
            if explicit("input") {
                return usage("--input applies to ingest mode only");
            }
        }
        ModeArg::Ingest => {
            if args.theta0.is_some() || args.range.is_some() || args.n.is_some() {
                return usage("ingest mode takes only --input (n comes from the file)");
            }
            for id in ["shots", "seed", "readout_flip", "grouped", "per_term"] {
                if explicit(id) {
                    return usage(&format!(
                        "--{} does not apply to ingest mode",
                        id.replace('_', "-")
                    ));
                }
            }
            let Some(input) = args.input.as_ref() else {
                return usage("ingest mode requires --input");
            };
            let report = analyze(input)?;
            return emit(
                &args.out,
                &render_report(&report, args.out.format.unwrap_or(Format::Json))?,
            );
        }
    }
    if args.n.is_none() && args.range.is_none() {
        return usage("either --n or --range is required");
    }

    let plan = if args.per_term {
        Plan::PerTerm
    } else {
        Plan::Grouped
    };
    let run_one = |n: usize| -> Outcome<ExperimentReport> {
        match args.mode {
            ModeArg::Exact => Ok(run_exact(n, args.theta0.unwrap_or(0.0))?),
            _ => {
                let config = SimulationConfig {
                    n_qubits: n,
                    shots_per_setting: args.shots,
                    seed: args.seed,
                    plan,
                    readout_flip: args.readout_flip,
                };
                Ok(run_simulation(&config)?)
            }
        }
    };

    let format = args.out.format.unwrap_or(Format::Json);
    let text = match (args.n, args.range) {
        (Some(n), _) => render_report(&run_one(n as usize)?, format)?,
        (None, Some((lo, hi))) => {
            let mut rows = Vec::new();
            for n in lo..=hi {
                eprintln!("backflow: n = {n}");
                rows.push(SweepRow::from(&run_one(n)?));
            }
            render_rows(&rows, format)?
        }
        (None, None) => unreachable!("checked above"),
    };
    emit(&args.out, &text)
}

fn analyze(input: &PathBuf) -> Outcome<ExperimentReport> {
    let text = if input.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Failure::Data(format!("reading standard input: {e}")))?;
        s
    } else {
        std::fs::read_to_string(input)
            .map_err(|e| Failure::Data(format!("reading {}: {e}", input.display())))?
    };
    let data = MeasuredData::from_json(&text)?;
    Ok(ingest_measurements(&data)?)
}

fn emit(out: &Output, text: &str) -> Outcome<()> {
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Engine(format!("writing {}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| Failure::Engine(format!("writing standard output: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Outcome<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Engine(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn render_decomposition(
    sum: &WeightedPauliSum,
    dense: Option<&[Vec<i64>]>,
    format: Format,
) -> String {
    match format {
        Format::Table => {
            let mut s = format!("{sum}\n");
            for row in dense.into_iter().flatten() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:>4}")).collect();
                let _ = writeln!(s, "{}", cells.join(""));
            }
            s
        }
        Format::Csv => {
            let mut s = format!(
                "word,lambda\n{},{}\n",
                "I".repeat(sum.n_qubits()),
                sum.identity_weight()
            );
            for t in sum.terms() {
                let _ = writeln!(s, "{},{}", t.word(), t.coefficient());
            }
            s
        }
        Format::Json => {
            let mut v = serde_json::to_value(sum).expect("sum serializes");
            if let Some(rows) = dense {
                v["dense"] = serde_json::json!(rows);
            }
            format!(
                "{}\n",
                serde_json::to_string_pretty(&v).expect("value serializes")
            )
        }
    }
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    mode: Mode,
    terms: usize,
    j_estimate: f64,
    j_std_error: Option<f64>,
    j_exact: f64,
    j_closed_form: f64,
    relative_error: f64,
}

impl From<&ExperimentReport> for SweepRow {
    fn from(r: &ExperimentReport) -> Self {
        SweepRow {
            n: r.n_qubits,
            mode: r.mode,
            terms: r.terms.len(),
            j_estimate: r.j_estimate,
            j_std_error: r.j_std_error,
            j_exact: r.j_exact,
            j_closed_form: r.j_closed_form,
            relative_error: r.relative_error,
        }
    }
}

const ROW_HEADER: [&str; 8] = [
    "n",
    "mode",
    "terms",
    "j_estimate",
    "j_std_error",
    "j_exact",
    "j_closed_form",
    "relative_error",
];

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Exact => "exact",
        Mode::Shots => "shots",
        Mode::Ingest => "ingest",
    }
}

fn render_rows(rows: &[SweepRow], format: Format) -> Outcome<String> {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    Ok(match format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut s = ROW_HEADER.join(",") + "\n";
            for r in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{:?},{},{:?},{:?},{:?}",
                    r.n,
                    mode_name(r.mode),
                    r.terms,
                    r.j_estimate,
                    opt(r.j_std_error),
                    r.j_exact,
                    r.j_closed_form,
                    r.relative_error
                );
            }
            s
        }
        Format::Table => {
            let mut s = format!(
                "{:>3} {:>6} {:>8} {:>18} {:>12} {:>18} {:>18} {:>12}\n",
                ROW_HEADER[0],
                ROW_HEADER[1],
                ROW_HEADER[2],
                ROW_HEADER[3],
                ROW_HEADER[4],
                ROW_HEADER[5],
                ROW_HEADER[6],
                ROW_HEADER[7]
            );
            for r in rows {
                let se = r
                    .j_std_error
                    .map(|v| format!("{v:.3e}"))
                    .unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{:>3} {:>6} {:>8} {:>18.9} {:>12} {:>18.9} {:>18.9} {:>12.3e}",
                    r.n,
                    mode_name(r.mode),
                    r.terms,
                    r.j_estimate,
                    se,
                    r.j_exact,
                    r.j_closed_form,
                    r.relative_error
                );
            }
            s
        }
    })
}

fn render_report(report: &ExperimentReport, format: Format) -> Outcome<String> {
    match format {
        Format::Json => to_json(report),
        Format::Csv => render_rows(&[SweepRow::from(report)], Format::Csv),
        Format::Table => {
            let mut s = render_rows(&[SweepRow::from(report)], Format::Table)?;
            let _ = writeln!(s);
            let _ = writeln!(
                s,
                "{:<10} {:>8} {:>8} {:>14} {:>12}",
                "word", "lambda", "setting", "expectation", "std_error"
            );
            for t in &report.terms {
                let _ = writeln!(
                    s,
                    "{:<10} {:>8} {:>8} {:>14.9} {:>12}",
                    t.word,
                    t.lambda,
                    t.setting.as_deref().unwrap_or("-"),
                    t.expectation,
                    t.std_error
                        .map(|v| format!("{v:.3e}"))
                        .unwrap_or_else(|| "-".into())
                );
            }
            Ok(s)
        }
    }
}
