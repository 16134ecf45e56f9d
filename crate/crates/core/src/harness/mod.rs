//! Experiment runner: configuration, the four NMSEE experiments, the
//! complexity benchmark, CSV output and plot data.

mod bench;
pub mod config;
mod experiments;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

pub use bench::{loglog_slope, run_bench, time_median};
pub use config::{ExperimentConfig, ExperimentKind};
pub use experiments::{elevation_bins, run_fig1, run_fig2, run_fig3, run_fig4};
pub use output::{emit_plotdata, read_csv, to_csv_string, write_csv, CsvRow};

use crate::error::Result;

pub fn run(config: &ExperimentConfig, kind: ExperimentKind) -> Result<Vec<CsvRow>> {
    match kind {
        ExperimentKind::Fig1 => run_fig1(config),
        ExperimentKind::Fig2 => run_fig2(config),
        ExperimentKind::Fig3 => run_fig3(config),
        ExperimentKind::Fig4 => run_fig4(config),
        ExperimentKind::Bench => run_bench(config),
    }
}

/// Runs `kind` and writes `<out_dir>/<kind>.csv` plus its plot data.
pub fn run_to_dir(config: &ExperimentConfig, kind: ExperimentKind, out_dir: &Path) -> Result<PathBuf> {
    let rows = run(config, kind)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(format!("{}.csv", kind.name()));
    write_csv(&rows, fs::File::create(&path)?)?;
    emit_plotdata(&rows, &out_dir.join("plot"))?;
    Ok(path)
}
