mod config;
mod experiments;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

use config::{ConfigFile, Resolver};
use experiments::{Ctx, RunError, MAPPING};

#[derive(Parser, Debug)]
#[command(name = "oneshot-qit", version, about = "Verification experiments for one-shot quantum coding bounds")]
struct Cli {
    /// Global seed; every experiment draws from its own stream split from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Multiplies every check tolerance.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
    /// key = value file with [global] and per-subcommand sections; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit without running.
    #[arg(long, global = true)]
    dump: bool,
    /// Add wall-clock seconds to every record.
    #[arg(long, global = true)]
    timing: bool,
    /// List subcommands and the results they verify.
    #[arg(long)]
    list: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Entropy fixtures (--demo) and seeded fact checks (--facts N).
    Entropy(EntropyArgs),
    /// Heisenberg-Weyl (default) or classical (--prime) convex splits over an N ladder.
    Convexsplit(SplitArgs),
    /// Synthesize and verify the classical decoupling circuit.
    Circuit(CircuitArgs),
    /// Embezzlement claims (--mode claims) or flattened splits (--mode split|classical).
    Flatten(FlattenArgs),
    /// Position-based decoding (--mode classical|flat) over a ladder of |S|.
    Decode(DecodeArgs),
    /// Exact simulation of the entanglement-assisted channel code.
    Code(CodeArgs),
    /// Redistribution and merging resource bounds.
    Bounds(BoundsArgs),
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[arg(long)]
    demo: bool,
    #[arg(long, value_name = "N")]
    facts: Option<String>,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long)]
    dim_c: Option<String>,
    #[arg(long)]
    dim_r: Option<String>,
    #[arg(long)]
    prime: Option<String>,
    #[arg(long, value_name = "N,N,...")]
    ladder: Option<String>,
    #[arg(long)]
    states: Option<String>,
    /// random, pure, phi or product.
    #[arg(long)]
    state: Option<String>,
}

#[derive(Args, Debug)]
struct CircuitArgs {
    #[arg(long)]
    dim_c: Option<String>,
    #[arg(long)]
    prime: Option<String>,
    #[arg(long)]
    l_size: Option<String>,
    /// exhaustive or none.
    #[arg(long)]
    verify: Option<String>,
}

#[derive(Args, Debug)]
struct FlattenArgs {
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, value_name = "A,A,...")]
    a: Option<String>,
    #[arg(long, value_name = "B,B,...")]
    b: Option<String>,
    #[arg(long, value_name = "N,N,...")]
    n: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long)]
    states: Option<String>,
    #[arg(long)]
    state: Option<String>,
    /// psi or mu.
    #[arg(long)]
    omega: Option<String>,
}

#[derive(Args, Debug)]
struct DecodeArgs {
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long, value_name = "S,S,...")]
    sizes: Option<String>,
    /// phi or random.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    dim_c: Option<String>,
    #[arg(long)]
    prime: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d_size: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    /// Skip the cap on |S|.
    #[arg(long)]
    unchecked: bool,
}

#[derive(Args, Debug)]
struct CodeArgs {
    /// identity, depolarizing:p, dephasing:p or amplitude-damping:g.
    #[arg(long)]
    channel: Option<String>,
    #[arg(long)]
    dim_a: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    delta_prime: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d_size: Option<String>,
    /// Simulate above the rate cap.
    #[arg(long)]
    unchecked: bool,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    /// product, phi-rc or random.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
}

const GLOBAL_KEYS: [&str; 7] = ["seed", "out", "format", "tolerance_scale", "config", "dump", "timing"];

/// Subcommand flags given on the command line, keyed by their long names.
fn explicit_flags(m: &ArgMatches) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for id in m.ids().map(|i| i.as_str()).filter(|i| !GLOBAL_KEYS.contains(i)) {
        if m.value_source(id) != Some(ValueSource::CommandLine) {
            continue;
        }
        let value = match (m.try_get_one::<String>(id), m.try_get_one::<bool>(id)) {
            (Ok(Some(s)), _) => s.clone(),
            (_, Ok(Some(b))) => b.to_string(),
            _ => continue,
        };
        out.insert(id.replace('_', "-"), value);
    }
    out
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("oneshot-qit: {msg}");
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ONESHOT_QIT_THREADS") else { return Ok(()) };
    let n: usize =
        v.parse().ok().filter(|&n| n > 0).ok_or(format!("ONESHOT_QIT_THREADS={v:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let matches = Cli::command().get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if cli.list {
        for (name, what) in MAPPING {
            println!("{name:<12} {what}");
        }
        return ExitCode::SUCCESS;
    }
    let Some((command, sub)) = matches.subcommand() else {
        return fail(2, "no subcommand given; see --help or --list");
    };
    if let Err(e) = configure_threads() {
        return fail(2, &e);
    }
    let file = match &cli.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(text) => match ConfigFile::parse(&text) {
                Ok(f) => f,
                Err(e) => return fail(2, &e.0),
            },
            Err(e) => return fail(2, &format!("cannot read {}: {e}", p.display())),
        },
        None => ConfigFile::default(),
    };

    let mut global = BTreeMap::new();
    if let Some(s) = cli.seed {
        global.insert("seed".to_string(), s.to_string());
    }
    if let Some(f) = cli.format {
        global.insert("format".to_string(), if f == Format::Csv { "csv" } else { "json" }.to_string());
    }
    if let Some(t) = cli.tolerance_scale {
        global.insert("tolerance-scale".to_string(), t.to_string());
    }
    let mut g = Resolver::new(file.section("global"), global);
    let resolved_global = (|| {
        let seed: u64 = g.get("seed", 0)?;
        let format: String = g.get("format", "json".to_string())?;
        let scale: f64 = g.get("tolerance-scale", 1.0)?;
        if format != "json" && format != "csv" {
            return Err(config::usage(format!("format {format:?} is not one of json, csv")));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(config::usage("tolerance-scale must be positive"));
        }
        Ok((seed, format, scale))
    })();
    let (seed, format, scale) = match resolved_global {
        Ok(v) => v,
        Err(e) => return fail(2, &e.0),
    };
    let global_echo = match g.finish() {
        Ok(v) => v,
        Err(e) => return fail(2, &e.0),
    };

    let mut resolver = Resolver::new(file.section(command), explicit_flags(sub));
    let job = match experiments::build(command, &mut resolver) {
        Ok(j) => j,
        Err(e) => return fail(2, &e.0),
    };
    let params = match resolver.finish() {
        Ok(p) => p,
        Err(e) => return fail(2, &e.0),
    };
    let echo: Vec<(String, String)> = global_echo.into_iter().chain(params.iter().cloned()).collect();
    if cli.dump {
        println!("[global]");
        for (k, v) in echo.iter().filter(|(k, _)| !params.iter().any(|(p, _)| p == k)) {
            println!("{k} = {v}");
        }
        println!("[{command}]");
        for (k, v) in &params {
            println!("{k} = {v}");
        }
        return ExitCode::SUCCESS;
    }

    let ctx = Ctx { seed, tol_scale: scale, timing: cli.timing };
    let records = match job(&ctx) {
        Ok(r) => r,
        Err(RunError::Usage(m)) => return fail(2, &m),
        Err(RunError::Failure(m)) => return fail(1, &m),
    };
    if records.is_empty() {
        return fail(2, "configuration produced no records");
    }
    let text = if format == "csv" { report::to_csv(&records) } else { report::to_json(command, &echo, &records) };
    match &cli.out {
        Some(path) => {
            if let Err(e) = report::write_atomic(path, &text) {
                return fail(1, &format!("cannot write {}: {e}", path.display()));
            }
        }
        None => print!("{text}"),
    }
    let failed: Vec<&str> = records.iter().filter(|r| !r.pass).map(|r| r.id.as_str()).collect();
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        fail(1, &format!("{} of {} checks failed: {}", failed.len(), records.len(), failed.join(", ")))
    }
}
