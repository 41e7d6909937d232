use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use govroom_core::analytics;
use govroom_core::lint::{lint_scenario, FindingSeverity};
use govroom_core::scenario::ZoneKind;

use crate::bot::{self, RandomBot, ReferenceBot};
use crate::gateway::{self, Gateway, SystemClock};
use crate::scenario_file;
use crate::telemetry::EventStore;

#[derive(Parser)]
#[command(
    name = "govroom",
    version,
    about = "Cybersecurity governance escape room"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file for schema errors and solvability.
    Lint {
        file: PathBuf,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Play a scenario headlessly.
    Play {
        /// Use a bot player. Follow with `random` for the seeded random bot.
        #[arg(long)]
        bot: bool,
        /// `FILE` or `random FILE`.
        #[arg(num_args = 1..=2, required = true, value_name = "[random] FILE")]
        args: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Probability that the random bot takes the next reference step.
        #[arg(long, default_value_t = 0.5)]
        guided: f64,
        #[arg(long, default_value_t = 10_000)]
        max_steps: usize,
    },
    /// Run the HTTP gateway.
    Serve {
        #[arg(long, env = "GOVROOM_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value = "scenarios")]
        scenarios: PathBuf,
        #[arg(long, default_value = "govroom-events.ndjson")]
        log: PathBuf,
        /// Bearer token for GET /api/analytics. Analytics are disabled without it.
        #[arg(long)]
        instructor_token: Option<String>,
    },
    /// Print the cohort report for an event log as JSON.
    ExportAnalytics {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value = "scenarios")]
        scenarios: PathBuf,
    },
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Lint { file, json } => lint(file, json),
        Command::Play {
            bot,
            args,
            seed,
            guided,
            max_steps,
        } => play(bot, args, seed, guided, max_steps),
        Command::Serve {
            addr,
            scenarios,
            log,
            instructor_token,
        } => serve(addr, scenarios, log, instructor_token),
        Command::ExportAnalytics { log, scenarios } => export_analytics(log, scenarios),
    }
}

fn lint(file: PathBuf, json: bool) -> anyhow::Result<ExitCode> {
    let scenario = match scenario_file::load_scenario(&file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}: {e}", file.display());
            return Ok(ExitCode::FAILURE);
        }
    };
    let report = lint_scenario(&scenario);
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for f in &report.findings {
            let level = match f.severity {
                FindingSeverity::Error => "error",
                FindingSeverity::Warning => "warning",
            };
            println!("{level}[{}] {}: {}", f.code, f.location, f.message);
        }
        let verdict = if report.pass { "pass" } else { "fail" };
        println!(
            "{}: {verdict} ({} errors, {} warnings)",
            file.display(),
            report.errors().count(),
            report.warnings().count()
        );
    }
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn play(
    bot: bool,
    args: Vec<String>,
    seed: u64,
    guided: f64,
    max_steps: usize,
) -> anyhow::Result<ExitCode> {
    if !bot {
        bail!("interactive play is not supported; pass --bot");
    }
    let (random, file) = match args.as_slice() {
        [file] => (false, file),
        [kind, file] if kind == "random" => (true, file),
        [kind, _] => bail!("unknown bot kind {kind:?}; expected `random`"),
        _ => unreachable!("clap enforces 1..=2 arguments"),
    };
    let scenario = scenario_file::load_scenario(file.as_ref())?;
    let (report, _) = if random {
        bot::play(
            &scenario,
            &mut RandomBot::new(&scenario, seed, guided),
            max_steps,
            1,
        )?
    } else {
        bot::play(&scenario, &mut ReferenceBot::new(&scenario), max_steps, 1)?
    };
    for zone in ZoneKind::ALL {
        match report
            .zone_results
            .iter()
            .find(|z| usize::from(z.zone_index) == zone.index())
        {
            Some(z) => println!(
                "zone {} ({}): {:.3} (hints {})",
                zone.index() + 1,
                zone.as_str(),
                z.zone_score,
                z.hints_used
            ),
            None => println!("zone {} ({}): not passed", zone.index() + 1, zone.as_str()),
        }
    }
    match report.total_score {
        Some(total) => println!("total: {total:.3}"),
        None => println!("total: -"),
    }
    println!(
        "phase: {} after {} actions ({} rejected)",
        report.phase, report.actions, report.rejected
    );
    Ok(if report.phase == govroom_core::Phase::Completed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn serve(
    addr: SocketAddr,
    scenarios: PathBuf,
    log: PathBuf,
    instructor_token: Option<String>,
) -> anyhow::Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let scenarios = scenario_file::load_dir(&scenarios)?;
    for s in &scenarios {
        let report = lint_scenario(s);
        if !report.pass {
            bail!(
                "scenario {} fails lint; run `govroom lint` for details",
                s.id
            );
        }
    }
    let store = EventStore::open(&log).with_context(|| format!("opening {}", log.display()))?;
    let gateway = Arc::new(Gateway::new(
        scenarios,
        Arc::new(store),
        Arc::new(SystemClock),
        instructor_token,
    ));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(gateway::serve(gateway, addr))?;
    Ok(ExitCode::SUCCESS)
}

fn export_analytics(log: PathBuf, scenarios: PathBuf) -> anyhow::Result<ExitCode> {
    let scenarios = scenario_file::load_dir(&scenarios)?;
    let store = EventStore::open(&log).with_context(|| format!("opening {}", log.display()))?;
    let report = analytics::cohort_report(&store.logs(), &scenarios, &store.surveys())?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}
