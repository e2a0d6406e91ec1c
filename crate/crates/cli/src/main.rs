//! `lifteval` command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 point not covered, 4 numerical
//! failure, 5 oracle mismatch. Tolerances can be overridden through
//! `LIFTEVAL_TOL_FEAS`, `LIFTEVAL_TOL_INT` and `LIFTEVAL_TOL_OBJ`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lifteval::pipeline::{CompileOptions, MergeDepth};
use lifteval::{
    bench::BenchConfig, compile, evaluate, example_1d, generate, read_evaluator, read_solution,
    run_bench, write_evaluator, write_solution, Error, GeneratorSpec, Tolerances,
};

const EXIT_INPUT: u8 = 2;
const EXIT_NOT_COVERED: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;
const EXIT_ORACLE: u8 = 5;

#[derive(Parser)]
#[command(name = "lifteval", version, about = "Compile and evaluate piecewise quadratic value functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce, lift, merge and build search trees; writes an evaluator file.
    Compile {
        input: PathBuf,
        /// Pairwise merge sweeps, or "full".
        #[arg(long = "nm", default_value = "0")]
        depth: MergeDepth,
        #[arg(long)]
        no_reduce: bool,
        /// Random partition pairings to try in addition to index order.
        #[arg(long, default_value_t = 0)]
        greedy_permutations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate a compiled evaluator at one point.
    Eval {
        evaluator: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Oracle-verified sweep over merge depths; writes `<out>.csv`, `<out>.json`
    /// and `<out>.timings.json`.
    Bench {
        input: PathBuf,
        #[arg(long, default_value = "0,full", value_delimiter = ',')]
        nm_list: Vec<MergeDepth>,
        #[arg(long, default_value_t = 1000)]
        queries: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_reduce: bool,
        #[arg(long, default_value_t = 0)]
        greedy_permutations: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Generate a synthetic instance from a JSON spec file or flags.
    Gen {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        flags: GenFlags,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write the two-partition one-dimensional example.
    #[command(name = "example-1d")]
    Example1d {
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct GenFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_part: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    curvature: Option<f64>,
    #[arg(long)]
    linear: Option<f64>,
    #[arg(long)]
    constant: Option<f64>,
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long)]
    half_width: Option<f64>,
}

enum Failure {
    Lib(Error),
    NotCovered,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::OracleMismatch { .. } => EXIT_ORACLE,
        _ => EXIT_INPUT,
    }
}

fn input(msg: String) -> Failure {
    Failure::Lib(Error::Input(msg))
}

fn tolerances_from_env() -> Result<(), Failure> {
    let mut t = Tolerances::current();
    for (var, slot) in [
        ("LIFTEVAL_TOL_FEAS", &mut t.feas),
        ("LIFTEVAL_TOL_INT", &mut t.int),
        ("LIFTEVAL_TOL_OBJ", &mut t.obj),
    ] {
        if let Ok(v) = std::env::var(var) {
            match v.trim().parse::<f64>() {
                Ok(x) if x.is_finite() && x > 0.0 => *slot = x,
                _ => return Err(input(format!("{var}: expected a positive number, got {v:?}"))),
            }
        }
    }
    t.install();
    Ok(())
}

fn parse_point(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| input(format!("malformed coordinate {v:?} in --point")))
        })
        .collect()
}

/// `report.csv` and `report` both name the prefix `report`.
fn report_prefix(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some("csv" | "json") => out.with_extension(""),
        _ => out.to_path_buf(),
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Lib(e.into()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    tolerances_from_env()?;
    match cli.command {
        Command::Compile {
            input,
            depth,
            no_reduce,
            greedy_permutations,
            seed,
            output,
        } => {
            let s = read_solution(&input)?;
            let opts = CompileOptions {
                depth,
                reduce: !no_reduce,
                greedy_permutations,
                seed,
            };
            let (e, log) = compile(&s, &opts)?;
            write_evaluator(&e, &output)?;
            println!("{}", serde_json::to_string_pretty(&log).map_err(Error::from)?);
        }
        Command::Eval { evaluator, point } => {
            let e = read_evaluator(&evaluator)?;
            let x = parse_point(&point)?;
            let Some(r) = evaluate(&e, &x)? else {
                println!("not covered");
                return Err(Failure::NotCovered);
            };
            println!("partition {}", r.partition);
            println!("region {}", r.region);
            println!("value {}", r.value);
            if let Some(u) = e.control_action(&r, &x) {
                let u: Vec<String> = u.iter().map(f64::to_string).collect();
                println!("control {}", u.join(","));
            }
            println!("ops {}", r.ops);
        }
        Command::Bench {
            input,
            nm_list,
            queries,
            seed,
            no_reduce,
            greedy_permutations,
            output,
        } => {
            let s = read_solution(&input)?;
            let cfg = BenchConfig {
                depths: nm_list,
                queries,
                seed,
                reduce: !no_reduce,
                greedy_permutations,
            };
            let (report, timings) = run_bench(&s, &cfg)?;
            let prefix = report_prefix(&output);
            let csv = report.to_csv()?;
            write(&with_suffix(&prefix, ".csv"), &csv)?;
            write(&with_suffix(&prefix, ".json"), &(report.to_json()? + "\n"))?;
            let t = serde_json::to_string_pretty(&timings).map_err(Error::from)?;
            write(&with_suffix(&prefix, ".timings.json"), &(t + "\n"))?;
            print!("{csv}");
        }
        Command::Gen {
            spec,
            flags,
            output,
        } => {
            let mut g = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(Error::from)?;
                    serde_json::from_str::<GeneratorSpec>(&text)
                        .map_err(|e| input(format!("{}: {e}", path.display())))?
                }
                None => GeneratorSpec::default(),
            };
            let GenFlags {
                n,
                n_part,
                grid,
                seed,
                curvature,
                linear,
                constant,
                shift,
                half_width,
            } = flags;
            g.n = n.unwrap_or(g.n);
            g.n_part = n_part.unwrap_or(g.n_part);
            g.grid = grid.unwrap_or(g.grid);
            g.seed = seed.unwrap_or(g.seed);
            g.curvature = curvature.unwrap_or(g.curvature);
            g.linear = linear.unwrap_or(g.linear);
            g.constant = constant.unwrap_or(g.constant);
            g.shift = shift.unwrap_or(g.shift);
            g.half_width = half_width.unwrap_or(g.half_width);
            write_solution(&generate(&g)?, &output)?;
        }
        Command::Example1d { output } => write_solution(&example_1d(), &output)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NotCovered) => ExitCode::from(EXIT_NOT_COVERED),
        Err(Failure::Lib(e)) => {
            eprintln!("lifteval: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
