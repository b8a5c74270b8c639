use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fhv::bench::{
    compare_strategies, parse_resolution, report_memory, run_build, run_render, with_thread_pool, BenchError, BenchReport,
    MemoryTableSizes, PartialConfig, RunConfig, EXIT_OVERFLOW,
};

#[derive(Parser)]
#[command(name = "fhv", version, about = "Build and render fragment-history volumes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML file with the same keys as the flags; flags win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: PartialConfig,
}

#[derive(Subcommand)]
enum Command {
    /// Capture a scene into a volume snapshot
    Build(Common),
    /// Render a camera path with deferred shading, splatting or ray casting
    Render(Common),
    /// Print the memory table for DS, PPFL, POFL and POFA
    ReportMemory(Common),
    /// Count fragments for the four capture strategies
    CompareStrategies(Common),
}

fn resolve(common: Common) -> Result<(RunConfig, PartialConfig), BenchError> {
    let merged = match &common.config {
        Some(path) => common.settings.or(PartialConfig::from_toml_file(path)?),
        None => common.settings,
    };
    Ok((RunConfig::resolve(merged.clone())?, merged))
}

fn run(cli: Cli) -> Result<BenchReport, BenchError> {
    match cli.command {
        Command::Build(c) => {
            let (cfg, _) = resolve(c)?;
            with_thread_pool(&cfg, || run_build(&cfg))?
        }
        Command::Render(c) => {
            let (cfg, _) = resolve(c)?;
            with_thread_pool(&cfg, || run_render(&cfg))?
        }
        Command::ReportMemory(c) => {
            let (cfg, raw) = resolve(c)?;
            let sizes = MemoryTableSizes {
                out_res: raw.out_res.as_deref().map(parse_resolution).transpose()?,
                capture_res: raw.capture_res,
            };
            with_thread_pool(&cfg, || report_memory(&cfg, sizes))?
        }
        Command::CompareStrategies(c) => {
            let (cfg, _) = resolve(c)?;
            with_thread_pool(&cfg, || compare_strategies(&cfg))?
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(report) => {
            let json = serde_json::to_string_pretty(&report).expect("reports always serialize");
            let _ = writeln!(std::io::stdout().lock(), "{json}");
            if report.overflowed {
                eprintln!(
                    "fhv: fragment pool overflowed, {} slots needed",
                    report.required_capacity.unwrap_or_default()
                );
                ExitCode::from(EXIT_OVERFLOW as u8)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("fhv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
