use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fairpsi::adversary::ExtractorBehaviour;
use fairpsi::ane::{self, PayoffRow};
use fairpsi::binning::{overflow_log2_bound, size_table};
use fairpsi::config::{ConfigError, ScenarioConfig};
use fairpsi::dec::Dec;
use fairpsi::ledger::Address;
use fairpsi::ole::OleMode;
use fairpsi::{report, scenarios, selftest};

#[derive(Parser)]
#[command(name = "fairpsi", version, about = "Fair multi-party PSI simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its transcript.
    Run {
        /// Path to a JSON scenario config, or the name of a built-in scenario.
        #[arg(long)]
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Transcript path. Defaults to `<name>-<seed>.jsonl` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        ole: Option<OleArg>,
        #[arg(long, env = "FAIRPSI_OUT_DIR", default_value = "transcripts")]
        out_dir: PathBuf,
    },
    /// Smallest bin count keeping the overflow probability below 2^-exp.
    SizeTable {
        #[arg(long)]
        elements: u64,
        #[arg(long)]
        bin_capacity: u64,
        #[arg(long, default_value_t = 40)]
        overflow_exp: u32,
    },
    /// Net payoff of every extractor profile under one extraction config.
    PayoffMatrix {
        #[arg(long)]
        config: String,
        #[arg(long)]
        json: bool,
    },
    /// Exhaustive checks over a 13-element field.
    Selftest,
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Clone, Copy, ValueEnum)]
enum OleArg {
    Constructed,
    Ideal,
}

impl From<OleArg> for OleMode {
    fn from(a: OleArg) -> Self {
        match a {
            OleArg::Constructed => OleMode::Constructed,
            OleArg::Ideal => OleMode::Ideal,
        }
    }
}

/// Malformed config files exit with this code.
const EXIT_PARSE: u8 = 2;

fn load(source: &str) -> Result<(String, ScenarioConfig)> {
    let path = Path::new(source);
    if !path.exists() {
        if let Some(s) = scenarios::get(source) {
            return Ok((s.name.to_string(), s.config()?));
        }
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config = ScenarioConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let stem = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
    Ok((config.name.clone().unwrap_or(stem), config))
}

fn cmd_run(source: &str, seed: Option<u64>, out: Option<PathBuf>, ole: Option<OleArg>, out_dir: PathBuf) -> Result<()> {
    let (name, mut config) = load(source)?;
    if let Some(seed) = seed {
        config.seed = Dec(seed);
    }
    if let Some(ole) = ole {
        config.ole_mode = ole.into();
    }
    let rep = report::run(&config).with_context(|| format!("running {name}"))?;
    let out = out.unwrap_or_else(|| out_dir.join(format!("{name}-{}.jsonl", config.seed.0)));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
    rep.transcript().write_jsonl(BufWriter::new(file)).with_context(|| format!("writing {}", out.display()))?;

    println!("{}", serde_json::to_string_pretty(&rep.summary())?);
    println!();
    println!("{:<12} {:>14}", "party", "net change");
    for (addr, net) in rep.net_changes() {
        println!("{:<12} {:>14}", addr.to_string(), net);
    }
    println!();
    println!("transcript: {}", out.display());
    Ok(())
}

fn cmd_size_table(elements: u64, capacity: u64, exp: u32) -> Result<()> {
    let bins = size_table(elements, capacity, exp)?;
    let bound = overflow_log2_bound(elements, capacity, bins).context("bound undefined at the chosen size")?;
    println!("bins: {bins}");
    println!("log2 overflow bound: {bound:.6}");
    if bins > 1 {
        match overflow_log2_bound(elements, capacity, bins - 1) {
            Some(b) => println!("log2 overflow bound at {} bins: {b:.6}", bins - 1),
            None => println!("bound undefined at {} bins", bins - 1),
        }
    }
    Ok(())
}

fn behaviour(b: ExtractorBehaviour) -> String {
    serde_json::to_value(b).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn cmd_payoff_matrix(source: &str, json: bool) -> Result<()> {
    let (_, config) = load(source)?;
    let rows: Vec<PayoffRow> = ane::payoff_matrix(&config)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&rows)?);
        return Ok(());
    }
    let parties: BTreeSet<Address> =
        rows.iter().flat_map(|r| r.payoffs.iter().filter(|(_, &v)| v != 0).map(|(&a, _)| a)).collect();
    print!("{:<24} {:<24} {:<32}", "A1", "A2", "case");
    for p in &parties {
        print!(" {:>10}", p.to_string());
    }
    println!();
    for row in &rows {
        let case = row.case.map_or("-", |c| c.name());
        print!("{:<24} {:<24} {:<32}", behaviour(row.profile.first), behaviour(row.profile.second), case);
        for p in &parties {
            print!(" {:>10}", row.payoffs.get(p).copied().unwrap_or(0));
        }
        println!();
    }
    Ok(())
}

fn cmd_selftest() -> Result<()> {
    let checks = selftest::run();
    for c in &checks {
        match &c.failure {
            None => println!("ok    {} ({} cases)", c.name, c.cases),
            Some(why) => println!("FAIL  {}: {why}", c.name),
        }
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        bail!("{failed} self-test checks failed");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, out, ole, out_dir } => cmd_run(&config, seed, out, ole, out_dir),
        Command::SizeTable { elements, bin_capacity, overflow_exp } => cmd_size_table(elements, bin_capacity, overflow_exp),
        Command::PayoffMatrix { config, json } => cmd_payoff_matrix(&config, json),
        Command::Selftest => cmd_selftest(),
        Command::Scenarios => {
            for s in scenarios::LIBRARY {
                println!("{}", s.name);
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let parse = e.chain().any(|c| matches!(c.downcast_ref::<ConfigError>(), Some(ConfigError::Parse(_))));
            ExitCode::from(if parse { EXIT_PARSE } else { 1 })
        }
    }
}
