//! `mhroots` command-line front end. Every subcommand prints one JSON report
//! to stdout.

mod report;
mod verify;

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use mhroots::bkk::{self, Pivot};
use mhroots::empirical::{self, Ensemble, SimulationConfig, DEFAULT_TAU};
use mhroots::expectation::{self, McConfig, DEFAULT_SIGMAS};
use mhroots::gaussian::{mc_abs_det, VarianceProfile};
use mhroots::permanent::PermanentError;
use mhroots::ShapeSpec;
use serde_json::{json, Value};

use report::{Failure, RunReport, Tolerances};

#[derive(Parser, Debug)]
#[command(name = "mhroots", version, about = "Real and complex root counts of random multihomogeneous systems")]
struct Cli {
    /// Worker threads (0 = all cores). MHROOTS_THREADS takes precedence.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Standard errors allowed between an estimate and a bound.
    #[arg(long, global = true, default_value_t = DEFAULT_SIGMAS)]
    sigmas: f64,
    /// Relative imaginary-part tolerance for real eigenvalues.
    #[arg(long, global = true, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Fraction of statistical checks allowed to miss before `verify` fails.
    #[arg(long, global = true, default_value_t = 0.05)]
    miss_budget: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generic complex root count, derivation and simple reducibility.
    Bkk {
        shape: PathBuf,
        #[arg(long, value_enum, default_value_t = BkkMethod::Recursion)]
        method: BkkMethod,
    },
    /// Expected number of real roots.
    Expect {
        shape: PathBuf,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Permanent bounds on the expected number of real roots.
    Bounds {
        shape: PathBuf,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Monte Carlo mean |det| of the structured Gaussian matrix.
    McDet {
        shape: PathBuf,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Draw random systems and count their real roots.
    Simulate {
        shape: PathBuf,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, value_enum, default_value_t = EnsembleArg::Kostlan)]
        ensemble: EnsembleArg,
        /// Per-sample CSV (index, count, flags).
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Batch verification over a random shape corpus.
    Verify {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 5)]
        n_max: usize,
        #[arg(long, default_value_t = 3)]
        delta_max: u32,
        #[arg(long, value_enum, default_value_t = verify::CorpusFamily::Random)]
        family: verify::CorpusFamily,
        #[command(flatten)]
        mc: McArgs,
        /// One-line-per-check CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct McArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum BkkMethod {
    Recursion,
    Permanent,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum EnsembleArg {
    Kostlan,
    Unit,
}

fn workers(flag: usize) -> usize {
    std::env::var("MHROOTS_THREADS").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(flag)
}

fn read_shape(path: &Path) -> Result<ShapeSpec, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::BadInput(format!("stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| Failure::BadInput(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| Failure::BadInput(format!("{}: {e}", path.display())))
}

fn cap_error(e: PermanentError) -> Failure {
    match e {
        PermanentError::TooLarge { .. } => Failure::Cap(e.to_string()),
        other => Failure::BadInput(other.to_string()),
    }
}

fn run(cli: &Cli) -> Result<(RunReport, Option<Failure>), Failure> {
    let threads = workers(cli.workers);
    let tol = Tolerances::new(cli.sigmas, cli.tau, cli.miss_budget);
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Bkk { shape, method } => {
            let spec = read_shape(shape)?;
            let value = match method {
                BkkMethod::Permanent => bkk::bkk_permanent(&spec).map_err(cap_error)?,
                BkkMethod::Recursion if spec.n() == 0 => bkk::BkkValue {
                    count: bkk::bkk(&spec),
                    derivation: bkk::Derivation::RowRecursion,
                },
                BkkMethod::Recursion => bkk::bkk_recursive(&spec, Pivot::Row(0)).map_err(|e| Failure::BadInput(e.to_string()))?,
            };
            let reduc = bkk::is_simply_reducible(&spec);
            let split = bkk::product_split(&spec);
            let result = json!({
                "bkk": value,
                "provenance": "exact_integer",
                "simply_reducible": reduc.reducible,
                "witness": reduc.witness,
                "split": split.split.map(|s| json!({
                    "first_rows": s.first_rows,
                    "first_blocks": s.first_blocks,
                    "found_by": s.found_by,
                })),
                "split_search_exhaustive": split.exhaustive,
            });
            RunReport::new("bkk", Some(spec), None, tol, result)
        }
        Command::Expect { shape, mc } => {
            let spec = read_shape(shape)?;
            let cfg = McConfig { samples: mc.samples, seed: mc.seed, workers: threads };
            let r = expectation::expectation(&spec, &cfg);
            let result = json!({ "provenance": report::provenance(&r), "expectation": r });
            RunReport::new("expect", Some(spec), Some(*mc), tol, result)
        }
        Command::Bounds { shape, mc } => {
            let spec = read_shape(shape)?;
            let cfg = McConfig { samples: mc.samples, seed: mc.seed, workers: threads };
            let b = expectation::bounds(&spec, &cfg).map_err(cap_error)?;
            let holds = b.holds(cli.sigmas);
            let result = json!({
                "provenance": report::provenance(&b.estimate),
                "margins_nonnegative": holds,
                "bounds": b,
            });
            let rep = RunReport::new("bounds", Some(spec), Some(*mc), tol, result);
            let failure = (!holds).then(|| Failure::Verification("estimate lies outside the permanent bounds".into()));
            return Ok((rep.finish(start), failure));
        }
        Command::McDet { shape, mc } => {
            let spec = read_shape(shape)?;
            let est = mc_abs_det(&VarianceProfile::from_shape(&spec), mc.samples, mc.seed, threads);
            let pre = expectation::prefactor(&spec);
            let result = json!({
                "provenance": "monte_carlo",
                "abs_det": est,
                "prefactor": pre,
                "expectation": pre * est.mean,
                "expectation_stderr": pre * est.stderr,
            });
            RunReport::new("mc-det", Some(spec), Some(*mc), tol, result)
        }
        Command::Simulate { shape, mc, ensemble, dump } => {
            let spec = read_shape(shape)?;
            let cfg = SimulationConfig {
                samples: mc.samples,
                seed: mc.seed,
                workers: threads,
                tau: cli.tau,
                ensemble: match ensemble {
                    EnsembleArg::Kostlan => Ensemble::Kostlan,
                    EnsembleArg::Unit => Ensemble::Unit,
                },
            };
            let sim = empirical::simulate(&spec, &cfg).map_err(|e| Failure::BadInput(e.to_string()))?;
            if let Some(path) = dump {
                report::write_outcomes(path, &sim.outcomes).map_err(|e| Failure::Io(e.to_string()))?;
            }
            let result = json!({ "provenance": "monte_carlo", "ensemble": cfg.ensemble, "simulation": sim });
            RunReport::new("simulate", Some(spec), Some(*mc), tol, result)
        }
        Command::Verify { count, n_max, delta_max, family, mc, dump } => {
            let cfg = McConfig { samples: mc.samples, seed: mc.seed, workers: threads };
            let opts = verify::Options { count: *count, n_max: *n_max, delta_max: *delta_max, family: *family };
            let outcome = verify::run(&opts, &cfg, &tol).map_err(|e| Failure::BadInput(e.to_string()))?;
            if let Some(path) = dump {
                verify::write_csv(path, &outcome.checks).map_err(|e| Failure::Io(e.to_string()))?;
            }
            let failed = outcome.summary.failed > 0;
            let result: Value = serde_json::to_value(&outcome).expect("serializable");
            let rep = RunReport::new("verify", None, Some(*mc), tol, result);
            let failure = failed.then(|| Failure::Verification("verification checks failed".into()));
            return Ok((rep.finish(start), failure));
        }
    };
    report = report.finish(start);
    Ok((report, None))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((rep, failure)) => {
            println!("{}", serde_json::to_string_pretty(&rep).expect("serializable report"));
            match failure {
                None => ExitCode::SUCCESS,
                Some(f) => {
                    eprintln!("mhroots: {f}");
                    f.exit_code()
                }
            }
        }
        Err(f) => {
            eprintln!("mhroots: {f}");
            f.exit_code()
        }
    }
}
