use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use concord_core::combinatorial::serialize_cpnet;
use concord_core::matching::MatchingInstance;
use concord_core::{
    margin_of_victory, mixture_report, parse_cpnet, parse_profile, results_table, stable_match,
    PreferenceProfile, Rule, RuleResult,
};
use concord_service::{Service, ServiceOptions};

#[derive(Parser)]
#[command(name = "concord", version, about = "Group decision tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Winners and scores of each rule on a profile file.
    Compute {
        #[arg(long)]
        profile: PathBuf,
        /// Comma-separated rule names; defaults to the standard set.
        #[arg(long, value_delimiter = ',')]
        rules: Vec<Rule>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Margin of victory and a Plackett-Luce mixture fit, as JSON.
    Analyze {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_delimiter = ',')]
        mov: Vec<Rule>,
        /// Number of mixture components; 0 skips the fit.
        #[arg(long, default_value_t = 0)]
        mixture: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Checks a CP-net file and prints its violations.
    ValidateCpnet { file: PathBuf },
    /// Runs stable matching on a JSON instance and prints the outcome.
    Match {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Serves the HTTP API backed by an event log in `--data-dir`.
    Serve {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, default_value_t = ServiceOptions::default().checkpoint_every)]
        checkpoint_every: u64,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_profile(path: &Path) -> Result<PreferenceProfile> {
    parse_profile(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn print_table(profile: &PreferenceProfile, results: &[RuleResult]) {
    let ids: Vec<&str> = profile.alternatives().iter().map(|a| a.id.as_str()).collect();
    let width = ids.iter().map(|s| s.len()).max().unwrap_or(0).max(8);
    print!("{:<18}", "rule");
    for id in &ids {
        print!(" {id:>width$}");
    }
    println!("  winners");
    for r in results {
        print!("{:<18}", r.rule.to_string());
        for id in &ids {
            let cell = r
                .scores
                .as_ref()
                .and_then(|s| s.iter().find(|(a, _)| a.as_str() == *id))
                .map(|(_, v)| v.to_string())
                .unwrap_or_else(|| "-".into());
            print!(" {cell:>width$}");
        }
        let winners: Vec<&str> = r.winners.iter().map(|w| w.as_str()).collect();
        println!("  {}", winners.join(", "));
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compute { profile, rules, format } => {
            let profile = load_profile(&profile)?;
            let rules = if rules.is_empty() {
                let m = profile.alternatives().len();
                Rule::default_set().into_iter().filter(|r| r.score_vector(m).is_ok()).collect()
            } else {
                rules
            };
            let results = results_table(&profile, &rules)?;
            match format {
                Format::Table => print_table(&profile, &results),
                Format::Json => {
                    for r in &results {
                        println!("{}", serde_json::to_string(r)?);
                    }
                }
            }
        }
        Command::Analyze { profile, mov, mixture, seed } => {
            let profile = load_profile(&profile)?;
            let mut out = serde_json::Map::new();
            let mut movs = Vec::new();
            for rule in mov {
                movs.push(serde_json::to_value(margin_of_victory(&profile, rule)?)?);
            }
            out.insert("mov".into(), movs.into());
            if mixture > 0 {
                let report = mixture_report(&profile.normalize(), mixture, seed)?;
                out.insert("mixture".into(), serde_json::to_value(report)?);
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::ValidateCpnet { file } => {
            let net = parse_cpnet(&read(&file)?).with_context(|| format!("parsing {}", file.display()))?;
            let report = net.validate();
            if !report.is_valid() {
                for v in &report.violations {
                    eprintln!("{v}");
                }
                bail!("{} violation(s)", report.violations.len());
            }
            print!("{}", serialize_cpnet(&net));
        }
        Command::Match { instance } => {
            let inst: MatchingInstance = serde_json::from_str(&read(&instance)?)
                .with_context(|| format!("parsing {}", instance.display()))?;
            let outcome = stable_match(&inst)?;
            println!("{}", serde_json::to_string_pretty(&outcome)?);
        }
        Command::Serve { data_dir, listen, checkpoint_every } => {
            let service = Service::open(&data_dir, ServiceOptions { checkpoint_every })?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(concord_service::serve(Arc::new(service), listen))?;
        }
    }
    Ok(())
}

fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
