//! Command-line experiments over the `fiid` library: factor densities,
//! coupled copies, first-moment bounds and the PGW transfer, each writing a
//! CSV or JSON artifact plus a manifest that [`run`] can replay exactly.

pub mod args;
pub mod commands;
pub mod error;
pub mod manifest;
pub mod table;

pub use args::{Cli, Command, Common, Format};
pub use commands::execute;
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;
pub use table::{Report, Table};

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

fn configure_workers(workers: usize) {
    if workers > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
}

fn absolute(p: &std::path::Path) -> PathBuf {
    std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf())
}

/// Executes a parsed command line, writing output and manifest.
pub fn run(cli: &Cli) -> CliResult<()> {
    configure_workers(cli.common.workers);
    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest, r.check, cli.common.out.clone());
    }
    let start = Instant::now();
    let report = execute(&cli.command, &cli.common)?;
    let text = report.render(cli.common.format)?;
    match &cli.common.out {
        Some(path) => std::fs::write(path, &text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    let manifest_path = cli
        .common
        .manifest
        .clone()
        .or_else(|| cli.common.out.as_deref().map(RunManifest::default_path));
    if let Some(mp) = manifest_path {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: cli.command.name().into(),
            params: cli.command.clone(),
            seed: cli.common.seed,
            trials: cli.common.trials,
            format: cli.common.format,
            workers: cli.common.workers,
            rng: manifest::RNG_SCHEME.into(),
            outputs: cli.common.out.iter().map(|p| absolute(p)).collect(),
            wall_clock_seconds: start.elapsed().as_secs_f64(),
        }
        .write(&mp)?;
    }
    match report.guard {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

/// Reruns a manifest. The output goes to `out` if given, otherwise over the
/// recorded file; with `check` the recorded file is compared instead.
pub fn replay(manifest: &std::path::Path, check: bool, out: Option<PathBuf>) -> CliResult<()> {
    let m = RunManifest::read(manifest)?;
    let common = Common {
        seed: m.seed,
        trials: m.trials,
        workers: 0,
        format: m.format,
        out: None,
        manifest: None,
    };
    let text = execute(&m.params, &common)?.render(m.format)?;
    let recorded = m.outputs.first();
    if check {
        let Some(path) = recorded else {
            return Err(CliError::Manifest("no recorded output to compare".into()));
        };
        let old = std::fs::read(path)?;
        if old != text.as_bytes() {
            return Err(CliError::Numerical(format!(
                "replay of {} differs from {}",
                manifest.display(),
                path.display()
            )));
        }
        return Ok(());
    }
    match out.as_ref().or(recorded) {
        Some(path) => std::fs::write(path, &text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
