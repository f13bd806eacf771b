//! Experiment driver for `npsense`: reads a TOML config, runs one experiment, writes CSV
//! tables plus a `report.json`, and maps built-in checks to exit codes.

pub mod config;
pub mod experiments;
pub mod report;

use anyhow::{Context, Result};
pub use config::{ExperimentConfig, ExperimentKind};
pub use report::ExperimentReport;
use std::fs;
use std::path::{Path, PathBuf};

/// Environment variable naming the directory under which output directories are created.
pub const OUTPUT_ROOT_ENV: &str = "NPSENSE_OUTPUT_ROOT";

/// Runs the experiment and writes all outputs below `output_root`.
pub fn run(cfg: &ExperimentConfig, output_root: &Path) -> Result<ExperimentReport> {
    let dir = output_root.join(cfg.output_dir());
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let mut report = ExperimentReport::new(cfg.kind.name(), serde_json::to_value(cfg)?, cfg.seed);
    match cfg.kind {
        ExperimentKind::Spectrum => experiments::spectrum(cfg, &dir, &mut report),
        ExperimentKind::Gpt => experiments::gpt(cfg, &dir, &mut report),
        ExperimentKind::SensitivityMap => experiments::sensitivity(cfg, &dir, &mut report),
        ExperimentKind::LowFreqLimit => experiments::low_freq(cfg, &dir, &mut report),
        ExperimentKind::ConditionNumber => experiments::condition(cfg, &dir, &mut report),
        ExperimentKind::Recover => experiments::recover(cfg, &dir, &mut report),
        ExperimentKind::Newton => experiments::newton(cfg, &dir, &mut report),
    }?;
    report.files.push("report.json".into());
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)?).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(report)
}

pub fn run_file(path: &Path, output_root: &Path) -> Result<ExperimentReport> {
    let cfg = ExperimentConfig::from_path(path)?;
    run(&cfg, output_root)
}

/// Writes the discretized shape of the config as `curve.csv`.
pub fn export_curve(cfg: &ExperimentConfig, output_root: &Path) -> Result<PathBuf> {
    let dir = output_root.join(cfg.output_dir());
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let curve = npsense::make_shape(&cfg.shape, cfg.n)?;
    let path = dir.join("curve.csv");
    curve.write_csv(std::io::BufWriter::new(fs::File::create(&path)?))?;
    Ok(path)
}

pub fn list_experiments() -> String {
    ExperimentKind::ALL.iter().map(|k| format!("{:<17} {}\n", k.name(), k.doc())).collect()
}
