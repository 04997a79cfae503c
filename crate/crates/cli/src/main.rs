use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ftmp_cli::config::{FileConfig, RunFlags, RunSettings, OUT_DIR_ENV};
use ftmp_cli::{audit_run, execute_run, CliError, EXIT_CHECK_FAILED, EXIT_OK};
use ftmp_core::analysis::{all_pass, verify_lemmas};

#[derive(Parser)]
#[command(
    name = "ftmp",
    version,
    about = "Finite-time barrier motion planner: run, audit and verify"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write a run directory
    Run {
        /// example1, example2 or random
        #[arg(long)]
        scenario: Option<String>,
        /// Number of agents (random scenarios only)
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Integration step in seconds
        #[arg(long)]
        dt: Option<f64>,
        /// Simulated time limit in seconds
        #[arg(long = "t-max")]
        t_max: Option<f64>,
        /// Output directory (default: $FTMP_OUT_DIR/<scenario>_seed<seed>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// TOML file with [scenario], [sim], [world], [barrier], [control] and [output] sections
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write every k-th sample to the CSV files
        #[arg(long)]
        stride: Option<usize>,
        /// Snapshot times as comma-separated fractions of the run
        #[arg(long, value_delimiter = ',')]
        snapshots: Option<Vec<f64>>,
    },
    /// Re-check a run directory; exits 1 if any check fails
    Audit {
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulation-free checks of the barrier and controller; exits 1 on failure
    VerifyLemmas {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn run(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Run {
            scenario,
            n,
            seed,
            dt,
            t_max,
            out,
            config,
            stride,
            snapshots,
        } => {
            let file = match &config {
                Some(path) => FileConfig::load(path)?,
                None => FileConfig::default(),
            };
            let flags = RunFlags {
                scenario,
                n,
                seed,
                dt,
                t_max,
                out,
                stride,
                snapshots,
            };
            let env_out = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
            let settings = RunSettings::resolve(&file, &flags, env_out)?;
            let (manifest, _) = execute_run(&settings)?;
            let s = &manifest.summary;
            println!("wrote {}", settings.out_dir.display());
            println!(
                "{} seed={} steps={} t={} termination={}{}",
                manifest.label,
                manifest.seed,
                s.steps,
                s.simulated_time,
                s.termination,
                if s.fault.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", s.fault)
                }
            );
            println!(
                "converged {}/{} min_distance={} max_radius={} collisions={} breaches={}",
                s.converged_agents,
                s.kinetic_agents,
                s.min_distance,
                s.max_radius,
                s.collisions,
                s.containment_breaches
            );
            println!("digest {}", manifest.record_digest);
            Ok(EXIT_OK)
        }
        Command::Audit { out } => {
            let report = audit_run(&out)?;
            print!("{}", report.render());
            Ok(if report.passed() { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::VerifyLemmas { seed } => {
            let findings = verify_lemmas(seed)?;
            for f in &findings {
                println!("{f}");
            }
            let ok = all_pass(&findings);
            println!("overall {}", if ok { "PASS" } else { "FAIL" });
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match run(args.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
