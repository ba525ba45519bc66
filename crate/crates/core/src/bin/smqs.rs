//! Scenario runner.
//!
//!   smqs --list-scenarios
//!   smqs run --scenario iqft-attack --d 10 --n 3 --m 1 --trials 100 --seed 1 \
//!       --secrets 4,5,6 --fake-r 2 --out report.json
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use smqs_core::harness::{run_scenario, write_report, Scenario, ScenarioConfig};
use smqs_core::protocol::{ProtocolConfig, SecretString, DEFAULT_DECOY_COUNT};
use smqs_core::Error;

#[derive(Parser, Debug)]
#[command(name = "smqs", version, about = "Quantum summation protocol scenarios")]
struct Cli {
    /// Print scenario tags with a one-line description and exit.
    #[arg(long)]
    list_scenarios: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario for a number of seeded trials and write a JSON report.
    Run(RunArgs),
}

#[derive(Parser, Debug)]
struct RunArgs {
    #[arg(long, value_parser = parse_scenario)]
    scenario: Scenario,
    /// Qudit dimension.
    #[arg(long, default_value_t = 10)]
    d: usize,
    /// Number of participants.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Secret string length.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Checking states (modified protocol only).
    #[arg(long, default_value_t = 0)]
    eta: usize,
    /// Decoys per transmitted sequence.
    #[arg(long, default_value_t = DEFAULT_DECOY_COUNT)]
    decoys: usize,
    /// Maximum tolerated decoy error rate.
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed secrets: participants separated by ',', digits within one
    /// participant by ':' (e.g. "4,5,6" or "1:2,0:3").
    #[arg(long)]
    secrets: Option<String>,
    /// Fixed fabrication value for the attack scenarios.
    #[arg(long)]
    fake_r: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_secrets(raw: &str, level: usize) -> Result<Vec<SecretString>, Error> {
    raw.split(',')
        .map(|participant| {
            let digits = participant
                .split(':')
                .map(|d| {
                    d.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidConfig(format!("bad secret digit '{d}'")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            SecretString::new(digits, level)
        })
        .collect()
}

fn build_config(args: &RunArgs) -> Result<ScenarioConfig, Error> {
    let protocol = ProtocolConfig::new(args.d, args.n, args.m)
        .with_checks(args.eta)
        .with_decoys(args.decoys)
        .with_error_threshold(args.threshold);
    let mut cfg = ScenarioConfig::new(args.scenario, protocol, args.trials, args.seed);
    cfg.secrets = args
        .secrets
        .as_deref()
        .map(|raw| parse_secrets(raw, args.d))
        .transpose()?;
    cfg.fake_r = args.fake_r;
    cfg.output = Some(args.out.clone());
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } => 3,
        _ => 2,
    }
}

fn run(args: &RunArgs) -> Result<(), Error> {
    let cfg = build_config(args)?;
    let doc = run_scenario(&cfg)?;
    write_report(&doc, &args.out)?;

    println!(
        "{} | d={} n={} m={} eta={} trials={} seed={} | {:.3}s",
        doc.scenario,
        doc.params.d,
        doc.params.n,
        doc.params.m,
        doc.params.eta,
        doc.params.trials,
        doc.params.seed,
        doc.wall_clock_seconds
    );
    let agg = &doc.aggregates;
    for (name, rate) in [
        ("sum_correct_rate", &agg.sum_correct_rate),
        ("recovery_success_rate", &agg.recovery_success_rate),
        ("detection_rate", &agg.detection_rate),
        ("mean_decoy_error_rate", &agg.mean_decoy_error_rate),
        ("check_pass_rate", &agg.check_pass_rate),
    ] {
        if let Some(r) = rate {
            println!(
                "  {name:<22} {:.6}  [{:.6}, {:.6}]  ({}/{})",
                r.rate, r.ci_low, r.ci_high, r.successes, r.trials
            );
        }
    }
    for p in &doc.oracle_predictions {
        println!(
            "  oracle {:<22} expected {:.6} observed {:.6} {}",
            p.metric,
            p.expected,
            p.observed,
            if p.within_band {
                "ok"
            } else {
                "OUTSIDE 4-sigma"
            }
        );
    }
    println!("report written to {}", args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_scenarios {
        for sc in Scenario::ALL {
            println!("{:<16} {}", sc.tag(), sc.description());
        }
        return ExitCode::SUCCESS;
    }
    match cli.command {
        Some(Command::Run(args)) => match run(&args) {
            Ok(()) => ExitCode::SUCCESS,
            Err(err) => {
                eprintln!("error: {err}");
                ExitCode::from(exit_code(&err))
            }
        },
        None => {
            eprintln!("error: no command given; try `smqs run --help` or `smqs --list-scenarios`");
            ExitCode::from(2)
        }
    }
}
