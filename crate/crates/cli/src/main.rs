use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use nplcs::format::{emit_model, parse_builtin_scheduler, parse_event, parse_model, parse_query, parse_set, parse_sets};
use nplcs::model::Nplcs;
use nplcs::qualitative::{check, Answer};
use nplcs::sched::{synth_eventuality_chain, synth_round_robin, synth_safe, synth_stubborn, WitnessScheduler};
use nplcs::{fixtures, sim, Error};

#[derive(Parser)]
#[command(name = "nplcs", version, about = "Qualitative model checking for probabilistic lossy channel systems")]
struct Cli {
    /// Output format for results on stdout.
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Safe,
    Stubborn,
    Roundrobin,
    Chain,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide a qualitative query, e.g. `BUCHI{=1}[fm] from 1 {6}`.
    Check {
        model: PathBuf,
        query: String,
        /// Write the witness scheduler, if any, to this file.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Build a witness scheduler for a target set (or sets, separated by `;`).
    Synth {
        model: PathBuf,
        #[arg(value_enum)]
        kind: Kind,
        targets: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the probability of an event under a scheduler.
    Simulate {
        model: PathBuf,
        /// Scheduler file, or a builtin such as `stubborn:{6}`.
        #[arg(long)]
        scheduler: String,
        /// Start configuration, e.g. `in : "ab"`.
        #[arg(long)]
        start: String,
        /// Event, e.g. `reach {out}` or `visits {6} 3`.
        #[arg(long)]
        event: String,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed horizon; adaptive when omitted.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Summarize a model file.
    Info { model: PathBuf },
    /// Print a builtin model: `run6` or `gadget a,b`.
    Fixtures { name: String, params: Option<String> },
}

enum Failure {
    /// Exit 1: a synthesis precondition fails.
    Empty(Error),
    /// Exit 3.
    Error(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<Nplcs, Failure> {
    parse_model(&read(path)?).map_err(|e| Failure::Error(format!("{}: {e}", path.display())))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn cmd_check(format: Format, model: &Path, query: &str, witness_out: Option<&Path>) -> Result<ExitCode, Failure> {
    let n = load_model(model)?;
    let base = model.parent().unwrap_or(Path::new("."));
    let load = |p: &str| {
        let path = base.join(p);
        let path = if Path::new(p).is_absolute() || !path.exists() { PathBuf::from(p) } else { path };
        fs::read_to_string(&path).map_err(|e| Error::Parse { line: 0, msg: format!("{}: {e}", path.display()) })
    };
    let q = parse_query(&n.lcs, query, &load)?;
    let v = check(&n.lcs, &q)?;
    if let (Some(path), Some(w)) = (witness_out, &v.witness) {
        write(path, &w.to_json(&n.lcs))?;
    }
    match format {
        Format::Json => print_json(&v.to_json()),
        Format::Text => {
            let answer = match v.answer {
                Answer::Yes => "yes",
                Answer::No => "no",
                Answer::Undecidable => "undecidable",
            };
            println!("{answer}");
            for (name, set) in &v.certificate.sets {
                println!("  {name} = {{{}}}", set.join(","));
            }
            if let Some(id) = &v.witness_id {
                println!("  witness {id}");
            }
            println!("  {}", v.citation);
        }
    }
    Ok(ExitCode::from(match v.answer {
        Answer::Yes => 0,
        Answer::No => 1,
        Answer::Undecidable => 2,
    }))
}

fn cmd_synth(format: Format, model: &Path, kind: Kind, targets: &str, out: Option<&Path>) -> Result<ExitCode, Failure> {
    let n = load_model(model)?;
    let lcs = &n.lcs;
    let s = match kind {
        Kind::Safe => synth_safe(lcs, &parse_set(lcs, targets)?),
        Kind::Stubborn => synth_stubborn(lcs, &parse_set(lcs, targets)?),
        Kind::Roundrobin => synth_round_robin(lcs, &parse_sets(lcs, targets)?),
        Kind::Chain => synth_eventuality_chain(lcs, &parse_sets(lcs, targets)?),
    }
    .map_err(|e| match e {
        Error::EmptySafe | Error::EmptyProm | Error::EmptyCore => Failure::Empty(e),
        e => e.into(),
    })?;
    let text = s.to_json(lcs);
    if let Some(path) = out {
        write(path, &text)?;
    }
    let stats = json!({
        "id": s.id(lcs),
        "modes": s.modes.len(),
        "on_path": s.on_path.len(),
        "recovery": s.recovery.len(),
        "advance": s.advance.len(),
    });
    match (format, out) {
        (Format::Json, None) => println!("{text}"),
        (Format::Json, Some(_)) => print_json(&stats),
        (Format::Text, _) => println!(
            "{} modes={} on_path={} recovery={}",
            stats["id"].as_str().unwrap_or_default(),
            s.modes.len(),
            s.on_path.len(),
            s.recovery.len()
        ),
    }
    eprintln!("scheduler {}: {} modes, {} table entries", s.id(lcs), s.modes.len(), s.on_path.len() + s.recovery.len());
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    format: Format,
    model: &Path,
    scheduler: &str,
    start: &str,
    event: &str,
    trials: usize,
    seed: u64,
    horizon: Option<usize>,
) -> Result<ExitCode, Failure> {
    if trials == 0 {
        return Err(Failure::Error("--trials must be at least 1".into()));
    }
    let n = load_model(model)?;
    let lcs = &n.lcs;
    let sched = match parse_builtin_scheduler(lcs, scheduler) {
        Some(r) => r?,
        None => WitnessScheduler::from_json(lcs, &read(Path::new(scheduler))?)?,
    };
    let start = lcs.parse_config(start)?;
    let event = parse_event(lcs, event)?;
    let e = sim::estimate(&n, &sched, &start, &event, trials, seed, horizon)?;
    match format {
        Format::Json => print_json(&serde_json::to_value(&e).expect("json")),
        Format::Text => println!(
            "{}: {:.4} [{:.4}, {:.4}] over {} trials, horizon {}",
            e.event, e.point, e.ci_low, e.ci_high, e.trials, e.horizon
        ),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_info(format: Format, model: &Path) -> Result<ExitCode, Failure> {
    let n = load_model(model)?;
    let lcs = &n.lcs;
    let v = json!({
        "locations": lcs.locations,
        "channels": lcs.channels,
        "messages": lcs.messages,
        "rules": lcs.rules.len(),
        "fault_rate": n.fault_rate.to_string(),
    });
    match format {
        Format::Json => print_json(&v),
        Format::Text => {
            println!("{} locations, {} channels, {} messages, {} rules", lcs.locations.len(), lcs.channels.len(), lcs.messages.len(), lcs.rules.len());
            println!("fault rate {}", n.fault_rate);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fixtures(name: &str, params: Option<&str>) -> Result<ExitCode, Failure> {
    let n = match name {
        "run6" => fixtures::run6(),
        "gadget" => {
            let alphabet: Vec<&str> = params.unwrap_or("").split(',').map(str::trim).filter(|m| !m.is_empty()).collect();
            fixtures::gadget(&alphabet)?
        }
        other => return Err(Failure::Error(format!("unknown fixture `{other}` (expected run6 or gadget)"))),
    };
    print!("{}", emit_model(&n));
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("NPLCS_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    let f = cli.format;
    let r = match &cli.cmd {
        Cmd::Check { model, query, witness_out } => cmd_check(f, model, query, witness_out.as_deref()),
        Cmd::Synth { model, kind, targets, out } => cmd_synth(f, model, *kind, targets, out.as_deref()),
        Cmd::Simulate { model, scheduler, start, event, trials, seed, horizon } => {
            cmd_simulate(f, model, scheduler, start, event, *trials, *seed, *horizon)
        }
        Cmd::Info { model } => cmd_info(f, model),
        Cmd::Fixtures { name, params } => cmd_fixtures(name, params.as_deref()),
    };
    match r {
        Ok(code) => code,
        Err(Failure::Empty(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Error(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
