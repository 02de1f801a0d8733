//! Command-line harness around `peh-core`: run configuration, presets,
//! subcommands and deterministic CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod presets;

use std::path::{Path, PathBuf};

pub use commands::{Command, PointSpec};
pub use config::RunConfig;
pub use error::CliError;

/// Validates `cfg`, runs `cmd` and returns the artifact paths written under `out`.
pub fn run(cmd: &Command, cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let mut sink = output::ArtifactSink::new(out)?;
    let result = commands::execute(cmd, cfg, &mut sink);
    result.map(|()| sink.into_paths())
}
