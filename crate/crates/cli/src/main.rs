use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use wnc_cli::{format_report, init_threads, run, Command, ExperimentConfig, Report};

/// Simulate, trace, extract and verify scattering data of radial
/// quasilinear wave equations.
#[derive(Parser)]
#[command(name = "wnc-scatter", version)]
struct Args {
    /// One of simulate, scatter, verify-interior, verify-kirchhoff, decay,
    /// classify, scan, report.
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `io.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = init_threads().and_then(|_| {
        let cfg = ExperimentConfig::load(&args.config)?;
        let out = args.out.clone().unwrap_or_else(|| cfg.io.output_dir.clone());
        let summary = run(args.command, &cfg, Some(&out))?;
        if args.command == Command::Report {
            let text = std::fs::read_to_string(out.join(wnc_cli::commands::REPORT))?;
            let rep: Report = serde_json::from_str(&text)?;
            print!("{}", format_report(&rep));
            Ok(rep.all_passed)
        } else {
            for (name, passed) in &summary.verdicts {
                println!("{}.{name}  {}", args.command, if *passed { "pass" } else { "FAIL" });
            }
            Ok(true)
        }
    });
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
