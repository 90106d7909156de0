use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cbf_synth::runner::{
    check, monitor, read_trace_csv, run_pipeline, write_trace_csv, Overrides, RunError, Scenario,
    EXIT_MONITOR_VIOLATION, EXIT_STATIC, EXIT_SUCCESS,
};
use cbf_synth::sim::{Trace, TraceMeta};

/// Barrier-function safety filters from bounded-time STL missions.
///
/// Exit codes: 0 success, 1 monitor violation, 2 static incompatibility,
/// 3 runtime infeasibility, 4 configuration or input error.
/// Log verbosity is read from SYNTH_LOG (error, warn, info, debug, trace).
#[derive(Parser)]
#[command(name = "synth", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check, simulate and monitor a scenario.
    Run {
        /// Scenario file, or a preset name such as `paper_sec6`.
        config: String,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Static compatibility check only.
    Check { config: String },
    /// Monitor a recorded trace against the scenario's mission.
    Monitor { trace: PathBuf, config: String },
}

fn fail(e: &RunError) -> i32 {
    eprintln!("synth: {e}");
    e.exit_code()
}

fn run(
    config: &str,
    trace_path: Option<PathBuf>,
    report_path: Option<PathBuf>,
    o: Overrides,
) -> Result<i32, RunError> {
    let sc = Scenario::load(config, &o)?;
    let result = run_pipeline(&sc)?;
    if let Some(p) = &trace_path {
        let empty = Trace::new(Vec::new(), TraceMeta::default());
        write_trace_csv(result.trace.as_ref().unwrap_or(&empty), &sc, p)?;
    }
    let text = result.report.to_string();
    match &report_path {
        Some(p) => std::fs::write(p, &text)
            .map_err(|e| RunError::Io(format!("{}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    if let Some(msg) = &result.report.failure {
        eprintln!("synth: {}: {msg}", result.report.outcome);
    }
    if report_path.is_some() {
        println!(
            "status={} outcome={}",
            if result.report.is_success() { "success" } else { "failure" },
            result.report.outcome
        );
    }
    Ok(result.report.exit_code())
}

fn check_only(config: &str) -> Result<i32, RunError> {
    let sc = Scenario::load(config, &Overrides::default())?;
    match check(&sc) {
        Ok(contracts) => {
            for c in &contracts {
                for r in c.reports() {
                    print!("{r}");
                }
            }
            println!("compatible=true groups={}", contracts.len());
            Ok(EXIT_SUCCESS)
        }
        Err(RunError::Static { message, report }) => {
            print!("{report}");
            println!("compatible=false");
            eprintln!("synth: {message}");
            Ok(EXIT_STATIC)
        }
        Err(e) => Err(e),
    }
}

fn monitor_only(trace: &PathBuf, config: &str) -> Result<i32, RunError> {
    let sc = Scenario::load(config, &Overrides::default())?;
    let text = std::fs::read_to_string(trace)
        .map_err(|e| RunError::Io(format!("{}: {e}", trace.display())))?;
    let tr = read_trace_csv(&text)?;
    let rep = monitor(&sc, &tr)?;
    for v in &rep.verdicts {
        println!(
            "task=\"{}\" satisfied={} worst_margin={}",
            v.formula,
            v.satisfied,
            v.worst_margin.map_or("none".into(), |m| format!("{m:.6}"))
        );
    }
    println!("all_satisfied={}", rep.satisfied);
    Ok(if rep.satisfied {
        EXIT_SUCCESS
    } else {
        EXIT_MONITOR_VIOLATION
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYNTH_LOG", "warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run {
            config,
            trace,
            report,
            dt,
            seed,
        } => run(&config, trace, report, Overrides { dt, seed }),
        Command::Check { config } => check_only(&config),
        Command::Monitor { trace, config } => monitor_only(&trace, &config),
    };
    let code = res.unwrap_or_else(|e| fail(&e));
    ExitCode::from(code as u8)
}
