//! Subcommands. Each takes a serialisable spec, so that any run can be
//! replayed from its manifest.

pub mod bench;
pub mod fit;
pub mod replicate;
pub mod simulate;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{Manifest, OutDir};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunSpec {
    Simulate(simulate::SimulateSpec),
    Fit(fit::FitSpec),
    NormconstBench(bench::BenchSpec),
    Replicate(replicate::ReplicateSpec),
}

impl RunSpec {
    pub fn command(&self) -> &'static str {
        match self {
            RunSpec::Simulate(_) => "simulate",
            RunSpec::Fit(_) => "fit",
            RunSpec::NormconstBench(_) => "normconst_bench",
            RunSpec::Replicate(_) => "replicate",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            RunSpec::Simulate(s) => Some(s.seed),
            RunSpec::Fit(s) => Some(s.settings.mcmc.seed),
            RunSpec::NormconstBench(s) => Some(s.seed),
            RunSpec::Replicate(s) => Some(s.seed),
        }
    }
}

/// Runs `spec` into `out_dir` and writes its manifest.
pub fn execute(spec: &RunSpec, out_dir: &Path) -> CliResult<Manifest> {
    let start = Instant::now();
    let mut out = OutDir::create(out_dir)?;
    match spec {
        RunSpec::Simulate(s) => simulate::run(s, &mut out)?,
        RunSpec::Fit(s) => fit::run(s, &mut out)?,
        RunSpec::NormconstBench(s) => bench::run(s, &mut out)?,
        RunSpec::Replicate(s) => replicate::run(s, &mut out)?,
    }
    out.finish(spec.clone(), start.elapsed().as_nanos())
}

/// Replays the run recorded in `from` into `out_dir` (default: `from`
/// itself) and lists the outputs whose digests changed.
pub fn rerun(from: &Path, out_dir: Option<PathBuf>) -> CliResult<(Manifest, Vec<String>)> {
    let old = Manifest::load(from)?;
    let dir = match out_dir {
        Some(d) => d,
        None if from.is_dir() => from.to_path_buf(),
        None => from
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let new = execute(&old.spec, &dir)?;
    let diff = new.mismatches(&old);
    Ok((new, diff))
}

/// Runs `f` on a pool of `threads` workers (rayon's default when `None`).
pub fn with_pool<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> CliResult<R> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Usage("thread count must be positive".into()));
        }
        b = b.num_threads(t);
    }
    let pool = b.build().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pool.install(f))
}

pub(crate) fn fmt(x: f64) -> String {
    egw::io::fmt_f64(x)
}
