use std::path::PathBuf;
use std::process::ExitCode;

use anderloc::model::Severity;
use anderloc_cli::experiments::{findings, oracle_table, OracleKind, OracleQuery};
use anderloc_cli::{run, CliError, ExperimentSpec, Overrides};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "anderloc", version, about = "Localization experiments for multi-particle random Schrodinger operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment spec and write `<output>.csv` and `<output>.json`.
    Run {
        spec: PathBuf,
        /// Worker threads (default: ANDERLOC_THREADS, then the spec, then all cores).
        #[arg(long, env = "ANDERLOC_THREADS")]
        threads: Option<usize>,
        /// Master seed, replacing `experiment.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a spec without running it.
    Validate { spec: PathBuf },
    /// Evaluate a reference oracle and print CSV to standard output.
    Oracle {
        kind: OracleArg,
        /// Energies for the Lyapunov oracle.
        #[arg(long, value_delimiter = ',')]
        energy: Vec<f64>,
        #[arg(long)]
        eta_max: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        length: usize,
        #[arg(long, default_value_t = 8)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Chain length for the free-chain oracle.
        #[arg(long)]
        m: Option<usize>,
        /// Configurations as JSON arrays of points, e.g. `[[0],[5]]`.
        #[arg(long)]
        x: Option<String>,
        #[arg(long)]
        y: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Lyapunov,
    FreeChain,
    Hausdorff,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.class.exit_code() as u8)
}

fn parse_conf(s: Option<String>) -> Result<Option<anderloc::Configuration>, CliError> {
    s.map(|s| serde_json::from_str(&s).map_err(|e| CliError::parse(format!("configuration {s}: {e}")))).transpose()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { spec, threads, seed } => {
            let mut parsed = match ExperimentSpec::from_file(&spec) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            parsed.apply(&Overrides { seed, threads: None });
            let threads = threads.or(parsed.experiment.threads).unwrap_or(0);
            match run(&parsed, threads) {
                Ok(r) => {
                    println!("{}", r.summary);
                    println!("wrote {} and {}", r.csv.display(), r.json.display());
                    match r.verdict {
                        Some(false) => {
                            eprintln!("{}", serde_json::json!({ "error_class": "hypothesis", "message": r.summary }));
                            ExitCode::from(4)
                        }
                        _ => ExitCode::SUCCESS,
                    }
                }
                Err(e) => fail(&e),
            }
        }
        Command::Validate { spec } => {
            let parsed = match ExperimentSpec::from_file(&spec) {
                Ok(s) => s,
                Err(e) => return fail(&e),
            };
            let found = findings(&parsed);
            for f in &found {
                let tag = if f.severity == Severity::Hard { "hard" } else { "warning" };
                println!("{tag}: {}", f.message);
            }
            if found.iter().any(|f| f.severity == Severity::Hard) {
                ExitCode::from(2)
            } else {
                println!("ok: {} experiment", parsed.kind().name());
                ExitCode::SUCCESS
            }
        }
        Command::Oracle { kind, energy, eta_max, length, replicas, seed, m, x, y } => {
            let (x, y) = match (parse_conf(x), parse_conf(y)) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(e), _) | (_, Err(e)) => return fail(&e),
            };
            let oracle = match kind {
                OracleArg::Lyapunov => OracleKind::Lyapunov,
                OracleArg::FreeChain => OracleKind::FreeChain,
                OracleArg::Hausdorff => OracleKind::Hausdorff,
            };
            let q = OracleQuery { oracle, energies: energy, length, replicas, eta_max, m, x, y };
            if oracle == OracleKind::Lyapunov && q.energies.is_empty() {
                return fail(&CliError::parse("lyapunov oracle needs --energy"));
            }
            match oracle_table(&q, None, seed).and_then(|o| o.table.to_csv()) {
                Ok(bytes) => {
                    print!("{}", String::from_utf8_lossy(&bytes));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
