use clap::{Parser, Subcommand};
use npsense_cli::{export_curve, list_experiments, run, ExperimentConfig, OUTPUT_ROOT_ENV};
use std::path::PathBuf;
use std::process::ExitCode;

/// Boundary-integral experiments on 2D inclusions.
#[derive(Parser)]
#[command(name = "npsense", version, about)]
struct Cli {
    /// Directory under which each experiment's output directory is created.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = ".")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config. Exit code 2 if a check fails.
    Run { config: PathBuf },
    /// List experiment kinds.
    List,
    /// Write the configured shape as curve.csv (t, x, y, nx, ny, H, w).
    ExportCurve { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            return ExitCode::SUCCESS;
        }
        Command::ExportCurve { config } => ExperimentConfig::from_path(&config)
            .map_err(anyhow::Error::from)
            .and_then(|cfg| export_curve(&cfg, &cli.output_root))
            .map(|path| {
                println!("wrote {}", path.display());
                true
            }),
        Command::Run { config } => ExperimentConfig::from_path(&config).map_err(anyhow::Error::from).and_then(|cfg| {
            let report = run(&cfg, &cli.output_root)?;
            let dir = cli.output_root.join(cfg.output_dir());
            for c in &report.checks {
                println!("{:<6} {:<28} {:<14.6e} {}", if c.pass { "ok" } else { "FAIL" }, c.name, c.value, c.condition);
            }
            println!("outputs in {}", dir.display());
            Ok(report.passed())
        }),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
