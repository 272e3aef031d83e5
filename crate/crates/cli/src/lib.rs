//! Library half of the `cyclos` binary: argument types, the run context,
//! the pipelines and the SVG emitter.

pub mod args;
pub mod pipelines;
pub mod run;
pub mod svg;

use std::path::Path;

use anyhow::{bail, Context, Result};

use args::Pipeline;
use run::{verify_inputs, Manifest, Run, Status};

pub const SEED_ENV: &str = "CYCLOS_SEED";

/// The seed in effect: `CYCLOS_SEED` if set, else the flag, else 0.
pub fn effective_seed(flag: Option<u64>) -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(flag.unwrap_or(0)),
    }
}

/// Runs one pipeline into `out` and writes its manifest.
pub fn run_pipeline(p: &Pipeline, out: &Path, seed: u64) -> Result<Manifest> {
    let mut run = Run::new(out, seed)?;
    let status = pipelines::execute(p, &mut run)?;
    run.finish(p, status)
}

/// Replays a manifest into `out` and checks that every recorded output is
/// reproduced byte for byte. Returns the property status of the replay.
pub fn rerun(manifest: &Path, out: &Path) -> Result<Status> {
    let text = std::fs::read(manifest).with_context(|| format!("reading {}", manifest.display()))?;
    let recorded: Manifest = serde_json::from_slice(&text).with_context(|| format!("parsing {}", manifest.display()))?;
    if recorded.tool != "cyclos" {
        bail!("manifest was not written by cyclos");
    }
    verify_inputs(&recorded)?;
    let replay = run_pipeline(&recorded.pipeline, out, recorded.seed)?;
    let mut same = replay.outputs == recorded.outputs && replay.status == recorded.status;
    if !same {
        for (a, b) in recorded.outputs.iter().zip(&replay.outputs) {
            if a != b {
                eprintln!("output {} differs: recorded {} replayed {} ({})", a.path, a.sha256, b.sha256, b.path);
            }
        }
        if recorded.outputs.len() != replay.outputs.len() {
            eprintln!("recorded {} outputs, replay wrote {}", recorded.outputs.len(), replay.outputs.len());
        }
    }
    if replay.version != recorded.version {
        eprintln!("note: recorded with version {}, replayed with {}", recorded.version, replay.version);
        same = false;
    }
    println!("reproduced: {same}");
    Ok(Status::from_check(same))
}
