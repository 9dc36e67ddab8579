use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

mod commands;

#[derive(Parser, Debug)]
#[command(name = "starq", version, about = "Exact star products, s'Darboux coordinates and second-order EBK spectra")]
struct Cli {
    /// JSON run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write the JSON report here as well as to stdout.
    #[arg(long, global = true)]
    json_out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ChartArg {
    /// Built-in chart (identity, shear, double-shear) or a chart JSON file.
    #[arg(long)]
    pub chart: Option<String>,

    /// Number of degrees of freedom M (built-in charts only).
    #[arg(long = "M")]
    pub m: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the Darboux and inverse conditions of a chart.
    CheckChart {
        #[command(flatten)]
        chart: ChartArg,
        /// Grid points per axis for the action non-negativity sample.
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
    /// Star-commutator defect of the (corrected) s'Darboux coordinates.
    CheckSdarboux {
        #[command(flatten)]
        chart: ChartArg,
        /// Truncation order; passes when the defect vanishes below it.
        #[arg(long)]
        order: Option<usize>,
        /// Use the bare chart coordinates (no second-order correction).
        #[arg(long)]
        bare: bool,
        /// Apply homotopy steps until the defect reaches the order.
        #[arg(long)]
        extend: bool,
    },
    /// Residual of the third-derivative identity for a chart.
    CheckMagic {
        #[command(flatten)]
        chart: ChartArg,
    },
    /// Residual of the covariant identity for a connection.
    CheckGmagic {
        #[command(flatten)]
        chart: ChartArg,
        /// Connection JSON file (otherwise the flat connection of the chart).
        #[arg(long)]
        connection: Option<PathBuf>,
    },
    /// Ladder and number symbols with their Dirac-algebra defect.
    BuildNumber {
        #[command(flatten)]
        chart: ChartArg,
        #[arg(long)]
        order: Option<usize>,
    },
    /// Second-order quantization rule and its spectrum.
    Ebk {
        #[command(flatten)]
        chart: ChartArg,
        /// Hamiltonian(s) as expressions in x1.., p1.. (ambient) or I1..
        #[arg(long = "H", required = true)]
        h: Vec<String>,
        #[arg(long)]
        hbar: Option<f64>,
        /// Quantum numbers: a range `a..b` (inclusive) or a list `0,2,5`;
        /// applies to every mode.
        #[arg(long, default_value = "0..5")]
        n: String,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Compare the rule for a one-mode H with matrix eigenvalues.
    OracleCompare {
        #[arg(long = "H")]
        h: String,
        /// Comma-separated ℏ values.
        #[arg(long, value_delimiter = ',')]
        hbars: Option<Vec<f64>>,
        /// Matrix truncation D.
        #[arg(long = "D")]
        d: Option<usize>,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        /// Report the log-log slope of the worst difference against ℏ.
        #[arg(long)]
        fit: bool,
        /// Fail unless the fitted slope reaches this value.
        #[arg(long)]
        min_slope: Option<f64>,
        /// Fail if any difference exceeds this bound.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Binary dump of the matrix at the first ℏ.
        #[arg(long)]
        dump_matrix: Option<PathBuf>,
    },
    /// Fedosov product checks: covariant identity and the s'Darboux defect at ℏ³.
    FedosovCheck {
        #[command(flatten)]
        chart: ChartArg,
        #[arg(long)]
        connection: Option<PathBuf>,
        /// Curvature coefficient (exact rational).
        #[arg(long = "c-R")]
        c_r: Option<String>,
    },
}

/// Outcome of a command: the report and whether every check passed.
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

/// Writes the report; a closed pipe on the reader side is not an error.
fn print_stdout(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::run_config(cli.config.as_deref()).and_then(|cfg| {
        use commands::*;
        match cli.command {
            Command::CheckChart { chart, samples } => check_chart(&cfg, &chart, samples),
            Command::CheckSdarboux {
                chart,
                order,
                bare,
                extend,
            } => check_sdarboux(&cfg, &chart, order, bare, extend),
            Command::CheckMagic { chart } => check_magic(&cfg, &chart),
            Command::CheckGmagic { chart, connection } => check_gmagic(&cfg, &chart, connection.as_deref()),
            Command::BuildNumber { chart, order } => build_number(&cfg, &chart, order),
            Command::Ebk {
                chart,
                h,
                hbar,
                n,
                order,
                csv,
            } => ebk(&cfg, &chart, &h, hbar, &n, order, csv.as_deref()),
            Command::OracleCompare {
                h,
                hbars,
                d,
                n_max,
                fit,
                min_slope,
                tol,
                csv,
                dump_matrix,
            } => oracle_compare(
                &cfg,
                &OracleArgs {
                    h,
                    hbars,
                    d,
                    n_max,
                    fit,
                    min_slope,
                    tol,
                    csv,
                    dump_matrix,
                },
            ),
            Command::FedosovCheck {
                chart,
                connection,
                c_r,
            } => fedosov_check(&cfg, &chart, connection.as_deref(), c_r.as_deref()),
        }
    });
    match result {
        Ok(out) => {
            let text = serde_json::to_string_pretty(&out.report).expect("serializable");
            print_stdout(&text);
            if let Some(path) = cli.json_out.as_ref() {
                if let Err(e) = std::fs::write(path, format!("{text}\n")) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            let (code, violation) = match e.downcast_ref::<commands::CheckFailure>() {
                Some(f) => (1, json!({ "invariant": f.invariant })),
                None => (2, Value::Null),
            };
            let kind = if code == 1 { "check" } else { "usage" };
            let report = json!({
                "pass": false,
                "error": kind,
                "message": format!("{e:#}"),
                "first_violation": violation,
            });
            print_stdout(&serde_json::to_string_pretty(&report).expect("serializable"));
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
