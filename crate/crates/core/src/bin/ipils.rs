use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ipils::bounds::compute_bound_sets;
use ipils::exact::{dp_front, enumerate_front, exact_front, DEFAULT_STATE_CAP};
use ipils::experiment::{
    knee_and_extremes, load_oracle, parse_reference, parse_references, run_experiment, summary, ExperimentSpec,
};
use ipils::fixtures::random_instance;
use ipils::instance_io::{load_instance, write_instance};
use ipils::service::{Delivery, Service};
use ipils::{Error, Result};

#[derive(Parser)]
#[command(
    name = "ipils",
    version,
    about = "Interactive Pareto iterated local search for multi-objective knapsacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Batch runs with fixed reference points; writes M curves as CSV.
    Experiment(ExperimentArgs),
    /// Computes the exact Pareto front of an instance.
    Front {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints the weighted-sum lower and upper bound sets.
    Bounds {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 101)]
        weights: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generates a random instance with costs and profits in 1..=100.
    Generate {
        #[arg(long)]
        items: usize,
        #[arg(long, default_value_t = 2)]
        objectives: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serves the JSON session protocol on stdin/stdout, one message per line.
    Serve,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Enumerate,
    Dp,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Reference point such as `1807,1924`; repeatable.
    #[arg(long = "ref", value_name = "R")]
    references: Vec<String>,
    /// File with one reference point per line.
    #[arg(long)]
    refs_file: Option<PathBuf>,
    /// Derive knee and extreme reference points whose cones each hold this
    /// many exact front points.
    #[arg(long, value_name = "WINDOW")]
    knee_refs: Option<usize>,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, default_value_t = 100_000)]
    evals: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact front file; required for more than two objectives.
    #[arg(long)]
    oracle: Option<PathBuf>,
    #[arg(long, default_value_t = 101)]
    weights: usize,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Drop archive candidates outside the reference cone.
    #[arg(long)]
    strict_cone: bool,
    #[arg(long, default_value_t = 100)]
    failure_budget: u32,
    #[arg(long, default_value_t = 1000)]
    checkpoint_interval: u64,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.kind());
            ExitCode::from(match e {
                Error::InvalidArgument(_) => 2,
                Error::Parse { .. } => 3,
                Error::NotFound(_) => 4,
                Error::NoOracle(_) => 5,
                Error::Resource(_) => 6,
                Error::Io(_) => 7,
                _ => 1,
            })
        }
    }
}

fn emit(out: Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => Ok(std::fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Experiment(args) => experiment(args),
        Command::Front {
            instance,
            method,
            state_cap,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let front = match method {
                Method::Auto => exact_front(&inst)?,
                Method::Enumerate => enumerate_front(&inst)?,
                Method::Dp => dp_front(&inst, state_cap)?,
            };
            eprintln!("{} Pareto-optimal outcomes", front.len());
            emit(out, &front.to_text())
        }
        Command::Bounds {
            instance,
            weights,
            seed,
        } => {
            let inst = load_instance(&instance)?;
            let bounds = compute_bound_sets(&inst, weights, &mut ChaCha8Rng::seed_from_u64(seed))?;
            println!("lower bounds ({}):", bounds.lower.len());
            for s in &bounds.lower {
                println!("  {} {}", s.objectives(), s.bitstring());
            }
            println!("upper bounds ({}):", bounds.upper.len());
            for u in &bounds.upper {
                let point: Vec<String> = u.point.iter().map(|v| format!("{v:.3}")).collect();
                println!(
                    "  w={:?} value={:.3} point=({})",
                    u.weights.weights(),
                    u.value,
                    point.join(",")
                );
            }
            Ok(())
        }
        Command::Generate {
            items,
            objectives,
            seed,
            out,
        } => {
            if objectives < 1 {
                return Err(Error::InvalidArgument("at least one objective is required".into()));
            }
            emit(out, &write_instance(&random_instance(items, objectives, seed)))
        }
        Command::Serve => serve(),
    }
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let mut spec = ExperimentSpec::new(&args.instance, &args.out);
    for r in &args.references {
        spec.references.push(parse_reference(r)?);
    }
    if let Some(path) = &args.refs_file {
        spec.references
            .extend(parse_references(&std::fs::read_to_string(path)?)?);
    }
    if let Some(window) = args.knee_refs {
        let inst = load_instance(&args.instance)?;
        let front = load_oracle(&inst, args.oracle.as_deref())?;
        spec.references.extend(knee_and_extremes(&front, window)?);
    }
    spec.runs = args.runs;
    spec.max_evaluations = args.evals;
    spec.base_seed = args.seed;
    spec.oracle_path = args.oracle;
    spec.weight_count = args.weights;
    spec.strict_cone = args.strict_cone;
    spec.failure_budget = args.failure_budget;
    spec.checkpoint_interval = args.checkpoint_interval;
    let report = run_experiment(&spec)?;
    print!("{}", summary(&report));
    eprintln!("results written to {}", spec.out_dir.display());
    Ok(())
}

fn serve() -> Result<()> {
    let service = Arc::new(Service::new());
    let stdout = Arc::new(Mutex::new(std::io::stdout()));
    let closing = Arc::new(AtomicBool::new(false));
    let mut forwarders = Vec::new();
    let write_line = |out: &Mutex<std::io::Stdout>, line: &str| {
        let mut out = out.lock().unwrap_or_else(|e| e.into_inner());
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    };
    for line in std::io::stdin().lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = service.handle_value(&line);
        write_line(&stdout, &response.to_string());
        // Subscriptions opened over stdio are pushed rather than polled.
        let is_subscribe =
            serde_json::from_str::<serde_json::Value>(&line).is_ok_and(|v| v["method"] == "session.subscribe");
        if let Some(id) = response["result"]["subscription"].as_u64().filter(|_| is_subscribe) {
            let (session, sub) = service.subscription(id)?;
            let out = stdout.clone();
            let service = service.clone();
            let closing = closing.clone();
            forwarders.push(std::thread::spawn(move || loop {
                if let Some(event) = sub.next_timeout(Duration::from_millis(50)) {
                    let d = Delivery {
                        subscription: id,
                        session: session.clone(),
                        event,
                    };
                    if let Ok(text) = serde_json::to_string(&d) {
                        write_line(&out, &text);
                    }
                } else if closing.load(Ordering::Acquire) || service.subscription(id).is_err() {
                    break;
                }
            }));
        }
    }
    // End of input: let running searches reach their budget, then flush.
    for id in service.session_ids() {
        if let Ok(s) = service.session(&id) {
            while !s.wait_idle(Duration::from_secs(3600)) {}
        }
    }
    closing.store(true, Ordering::Release);
    for f in forwarders {
        let _ = f.join();
    }
    Ok(())
}
