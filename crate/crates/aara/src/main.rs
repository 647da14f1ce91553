//! Command-line interface: analyze bounds, evaluate programs, check inferred
//! bounds against measured costs, and dump constraint systems.
//!
//! Exit codes: 0 success, 2 parse/type error, 3 no bound at this degree,
//! 4 bound violation found.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aara::basis::{BasisConfig, BasisKind};
use aara::frontend::elaborate;
use aara::harness::{check_bound, enumerate_inputs, parse_value};
use aara::interp::{eval, EvalResult};
use aara::pipeline::{analyze_elaborated, AnalysisError};
use aara::report::render_report;

#[derive(Parser)]
#[command(
    name = "aara",
    about = "Resource-bound analysis for a small first-order functional language"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Binomial,
    Stirling,
    Mixed,
}

#[derive(Args, Clone)]
struct BasisOpts {
    /// Potential basis family.
    #[arg(long, value_enum, default_value = "binomial")]
    basis: BasisArg,
    /// Maximum binomial degree K (binomial and mixed bases).
    #[arg(long, default_value_t = 1)]
    poly_degree: u32,
    /// Maximum exponential degree B (stirling and mixed bases).
    #[arg(long, default_value_t = 1)]
    exp_degree: u32,
    /// Allow demoting exponential potential into the binomial row (mixed).
    #[arg(long)]
    demotion: bool,
}

impl BasisOpts {
    fn config(&self) -> Result<BasisConfig, String> {
        let kind = match self.basis {
            BasisArg::Binomial => BasisKind::Binomial,
            BasisArg::Stirling => BasisKind::Stirling,
            BasisArg::Mixed => BasisKind::Mixed,
        };
        BasisConfig::new(kind, self.poly_degree, self.exp_degree, self.demotion)
            .map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Infer cost bounds for every function in the file.
    Analyze {
        file: String,
        #[command(flatten)]
        basis: BasisOpts,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a function on an input value, reporting cost.
    Eval {
        file: String,
        /// Function to run.
        #[arg(long)]
        entry: String,
        /// Input literal, e.g. `[1,2,3]`, `(1,[2])`, `true`, `42`.
        #[arg(long)]
        input: String,
        /// Evaluation step budget.
        #[arg(long, default_value_t = 10_000_000)]
        fuel: u64,
    },
    /// Infer bounds, then check them against measured costs on enumerated
    /// inputs.
    CheckBound {
        file: String,
        /// Function to check.
        #[arg(long)]
        entry: String,
        #[command(flatten)]
        basis: BasisOpts,
        /// Largest list length to enumerate.
        #[arg(long, default_value_t = 8)]
        max_size: usize,
        /// Integer components range over [-value-bound, value-bound].
        #[arg(long, default_value_t = 3)]
        value_bound: i64,
        /// Seed for sampled inputs beyond the exhaustive limit.
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Evaluation step budget per input.
        #[arg(long, default_value_t = 10_000_000)]
        fuel: u64,
    },
    /// Dump the generated constraint system in LP text format.
    DumpLp {
        file: String,
        #[command(flatten)]
        basis: BasisOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

enum ExitOr {
    Code(ExitCode),
    Msg(String),
}

fn load(file: &str) -> Result<(String, aara::frontend::Elaborated), ExitOr> {
    let source = std::fs::read_to_string(file)
        .map_err(|e| ExitOr::Msg(format!("cannot read `{file}`: {e}")))?;
    match elaborate(&source) {
        Ok(elab) => Ok((source, elab)),
        Err(diags) => {
            for d in &diags {
                eprintln!("{}", d.render(&source));
            }
            Err(ExitOr::Code(ExitCode::from(2)))
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Analyze { file, basis, json } => {
            let cfg = basis.config()?;
            let (_, elab) = match load(&file) {
                Ok(x) => x,
                Err(ExitOr::Code(c)) => return Ok(c),
                Err(ExitOr::Msg(m)) => return Err(m),
            };
            match analyze_elaborated(&elab, &cfg) {
                Ok(analysis) => {
                    println!("{}", render_report(&analysis.reports, json));
                    Ok(ExitCode::SUCCESS)
                }
                Err(AnalysisError::Infeasible { details }) => {
                    eprintln!("no bound derivable at this degree");
                    for d in details {
                        eprintln!("  {d}");
                    }
                    Ok(ExitCode::from(3))
                }
                Err(AnalysisError::Diagnostics(ds)) => {
                    for d in ds {
                        eprintln!("{d}");
                    }
                    Ok(ExitCode::from(2))
                }
                Err(AnalysisError::Unbounded) => Err("objective unbounded".into()),
            }
        }
        Command::Eval {
            file,
            entry,
            input,
            fuel,
        } => {
            let (_, elab) = match load(&file) {
                Ok(x) => x,
                Err(ExitOr::Code(c)) => return Ok(c),
                Err(ExitOr::Msg(m)) => return Err(m),
            };
            let arg = parse_value(&input)?;
            match eval(&elab.program, &entry, arg, fuel).map_err(|e| e.to_string())? {
                EvalResult::Done(out) => {
                    println!(
                        "value: {}\nhigh-water: {}\nleftover: {}\nsteps: {}",
                        out.value, out.high_water, out.leftover, out.steps
                    );
                    Ok(ExitCode::SUCCESS)
                }
                EvalResult::FuelExhausted(p) => {
                    println!("fuel exhausted; watermark: {}", p.watermark);
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::CheckBound {
            file,
            entry,
            basis,
            max_size,
            value_bound,
            seed,
            fuel,
        } => {
            let cfg = basis.config()?;
            let (_, elab) = match load(&file) {
                Ok(x) => x,
                Err(ExitOr::Code(c)) => return Ok(c),
                Err(ExitOr::Msg(m)) => return Err(m),
            };
            let analysis = match analyze_elaborated(&elab, &cfg) {
                Ok(a) => a,
                Err(AnalysisError::Infeasible { details }) => {
                    eprintln!("no bound derivable at this degree");
                    for d in details {
                        eprintln!("  {d}");
                    }
                    return Ok(ExitCode::from(3));
                }
                Err(e) => return Err(e.to_string()),
            };
            let report = analysis
                .report_for(&entry)
                .ok_or_else(|| format!("no function named `{entry}`"))?;
            let inputs =
                enumerate_inputs(&report.arg_type.erase(), max_size, value_bound, 100, seed);
            let check = check_bound(&analysis.elaborated.program, report, &inputs, fuel)
                .map_err(|e| e.to_string())?;
            println!("{}", report.to_text());
            println!("{}", check.summary());
            if check.violations > 0 {
                for c in check.checks.iter().filter(|c| c.violation).take(5) {
                    println!(
                        "  violated on {}: measured {} vs bound {}",
                        c.input, c.measured_high, c.bound
                    );
                }
                Ok(ExitCode::from(4))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::DumpLp { file, basis } => {
            let cfg = basis.config()?;
            let (_, elab) = match load(&file) {
                Ok(x) => x,
                Err(ExitOr::Code(c)) => return Ok(c),
                Err(ExitOr::Msg(m)) => return Err(m),
            };
            let system = aara::constraints::generate(&elab, &cfg);
            print!("{}", system.dump_lp());
            Ok(ExitCode::SUCCESS)
        }
    }
}
