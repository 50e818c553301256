use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value as Json;

use behametric::coalgebra::{load_lift, load_system_with, System};
use behametric::fixpoint::{iterate, FixpointRun, IterationOptions};
use behametric::lifting::{lift_dist, LiftMethod};
use behametric::numerics::{parse_rational, NumericMode, Rational};
use behametric::suites::{run_suite, Suite, SuiteConfig};

/// Behavioral distances of finite coalgebras via Kantorovich and
/// Wasserstein liftings.
#[derive(Debug, Parser)]
#[command(name = "behametric", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the behavioral distance matrix of a system.
    Dist {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Print JSON instead of CSV.
        #[arg(long)]
        json: bool,
        /// Write the matrix to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print every iterate of the fixed-point computation as CSV.
    Trace {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Lift the distance of a space to two elements of `F(space)`.
    Lift {
        file: PathBuf,
        /// First element, as JSON; defaults to the document's `t1`.
        #[arg(long)]
        t1: Option<String>,
        /// Second element, as JSON; defaults to the document's `t2`.
        #[arg(long)]
        t2: Option<String>,
        #[arg(long, default_value = "wasserstein")]
        method: LiftMethod,
        /// Print both liftings and their gap.
        #[arg(long)]
        both: bool,
    },
    /// Run seeded property suites.
    Check {
        /// A suite name or `all`.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances per node kind or system class.
        #[arg(long, default_value_t = 500)]
        n: usize,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Override the `c` parameter.
    #[arg(long, value_name = "P/Q")]
    c: Option<String>,
    /// Override the `eps` parameter.
    #[arg(long, value_name = "P/Q")]
    eps: Option<String>,
    /// Override any parameter, as `name=p/q`.
    #[arg(long = "param", value_name = "NAME=P/Q")]
    params: Vec<String>,
    /// Exact rational arithmetic.
    #[arg(long, conflicts_with = "float")]
    exact: bool,
    /// Floating point with the given stopping tolerance.
    #[arg(long, value_name = "TOL")]
    float: Option<f64>,
    #[arg(long, default_value = "wasserstein")]
    method: LiftMethod,
    /// Exit with status 3 unless the iteration converges.
    #[arg(long)]
    strict: bool,
    /// Worker threads; BEHAMETRIC_THREADS takes precedence.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
}

/// A failed command: the exit status and the message for stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn invalid(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Dist { file, run, json, out } => {
            let result = compute(&file, &run, false)?;
            let text = if json {
                let mut s = serde_json::to_string_pretty(&result.matrix.to_json()).expect("JSON values serialize");
                s.push('\n');
                s
            } else {
                result.matrix.to_csv()
            };
            match out {
                Some(path) => fs::write(&path, text)
                    .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            finish(&result, run.strict)
        }
        Command::Trace { file, run } => {
            let result = compute(&file, &run, true)?;
            print!("{}", result.trace_csv());
            finish(&result, run.strict)
        }
        Command::Lift {
            file,
            t1,
            t2,
            method,
            both,
        } => {
            let doc = read_json(&file)?;
            let element = |flag: &str, s: Option<String>| {
                s.map(|s| serde_json::from_str::<Json>(&s).map_err(|e| Failure::invalid(format!("--{flag}: {e}"))))
                    .transpose()
            };
            let (t1, t2) = (element("t1", t1)?, element("t2", t2)?);
            let lift = load_lift(&doc, t1.as_ref(), t2.as_ref())
                .map_err(|e| Failure::invalid(format!("{}: {e}", file.display())))?;
            let value = |m| {
                lift_dist(&lift.expr, &lift.table, m, &lift.t1, &lift.t2).map_err(Failure::invalid)
            };
            if both {
                let k = value(LiftMethod::Kantorovich)?;
                let w = value(LiftMethod::Wasserstein)?;
                println!("kantorovich {k}");
                println!("wasserstein {w}");
                println!("gap {}", w.saturating_sub(&k));
            } else {
                println!("{}", value(method)?);
            }
            Ok(())
        }
        Command::Check { suite, seed, n } => {
            let suites = if suite == "all" {
                Suite::ALL.to_vec()
            } else {
                vec![suite.parse::<Suite>().map_err(Failure::invalid)?]
            };
            let cfg = SuiteConfig { seed, n };
            let mut passed = true;
            for s in suites {
                let report = run_suite(s, &cfg);
                println!("{report}");
                passed &= report.passed();
            }
            if passed {
                Ok(())
            } else {
                Err(Failure {
                    code: 2,
                    message: String::new(),
                })
            }
        }
    }
}

fn read_json(path: &Path) -> Result<Json, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))
}

fn overrides(run: &RunArgs) -> Result<BTreeMap<String, Rational>, Failure> {
    let mut out = BTreeMap::new();
    let mut set = |name: &str, value: &str, flag: &str| -> Result<(), Failure> {
        let q = parse_rational(value).map_err(|e| Failure::invalid(format!("{flag}: {e}")))?;
        out.insert(name.to_string(), q);
        Ok(())
    };
    for p in &run.params {
        let (name, value) = p
            .split_once('=')
            .ok_or_else(|| Failure::invalid(format!("--param: expected NAME=P/Q, got `{p}`")))?;
        set(name.trim(), value.trim(), "--param")?;
    }
    if let Some(c) = &run.c {
        set("c", c, "--c")?;
    }
    if let Some(eps) = &run.eps {
        set("eps", eps, "--eps")?;
    }
    Ok(out)
}

fn threads(run: &RunArgs) -> Result<Option<usize>, Failure> {
    match std::env::var("BEHAMETRIC_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::invalid(format!("BEHAMETRIC_THREADS: expected a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(run.threads),
    }
}

fn load(file: &Path, run: &RunArgs) -> Result<System, Failure> {
    let doc = read_json(file)?;
    let sys = load_system_with(&doc, &overrides(run)?)
        .map_err(|e| Failure::invalid(format!("{}: {e}", file.display())))?;
    let mode = match (run.exact, run.float) {
        (true, _) => NumericMode::Exact,
        (false, Some(tol)) => NumericMode::float(tol).map_err(|e| Failure::invalid(format!("--float: {e}")))?,
        (false, None) => sys.mode,
    };
    Ok(sys.with_mode(mode))
}

fn compute(file: &Path, run: &RunArgs, trace: bool) -> Result<FixpointRun, Failure> {
    let sys = load(file, run)?;
    let opts = IterationOptions {
        max_iter: run.max_iter,
        method: run.method,
        trace,
        threads: threads(run)?,
    };
    iterate(&sys, &opts).map_err(Failure::invalid)
}

fn finish(result: &FixpointRun, strict: bool) -> Result<(), Failure> {
    let m = &result.matrix;
    if m.converged {
        return Ok(());
    }
    let message = format!(
        "no fixed point after {} iterations (last change {})",
        m.iterations, m.residual
    );
    if strict {
        Err(Failure { code: 3, message })
    } else {
        eprintln!("warning: {message}");
        Ok(())
    }
}
