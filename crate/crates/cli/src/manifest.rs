use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::commands::sibling;
use crate::Failure;

pub const VERSION_TAG: &str = concat!("dtr ", env!("CARGO_PKG_VERSION"));

/// Everything needed to re-run a command bit for bit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// The fully resolved command, defaults included.
    pub command: Command,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Io(format!("{}: malformed manifest: {e}", path.display())))
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
    }
}

/// Explicit `--manifest`, else `<stem>.manifest.json` beside the primary output.
pub fn manifest_path(cmd: &Command) -> Option<PathBuf> {
    let (explicit, primary) = match cmd {
        Command::Synth(a) => (&a.manifest, Some(&a.out)),
        Command::Mask(a) => (&a.manifest, Some(&a.out)),
        Command::Recover(a) => (&a.manifest, Some(&a.out)),
        Command::Metrics(a) => (&a.manifest, a.out.as_ref()),
        Command::Gradcheck(a) => (&a.manifest, None),
        Command::Export(a) => (&a.manifest, Some(&a.out)),
        Command::Bench(a) => (&a.manifest, Some(&a.out)),
        Command::Replay(_) => return None,
    };
    explicit.clone().or_else(|| primary.map(|p| sibling(p, "manifest.json")))
}

fn relocate(path: &mut PathBuf, dir: &Path) {
    if let Some(name) = path.file_name() {
        *path = dir.join(name);
    }
}

/// Points every output of `cmd` (manifest included) into `dir`.
pub fn redirect_outputs(cmd: &mut Command, dir: &Path) {
    let manifest = manifest_path(cmd);
    let mut outs: Vec<&mut PathBuf> = Vec::new();
    let slot = match cmd {
        Command::Synth(a) => {
            outs.push(&mut a.out);
            &mut a.manifest
        }
        Command::Mask(a) => {
            outs.push(&mut a.out);
            &mut a.manifest
        }
        Command::Recover(a) => {
            if a.loss_csv.is_none() {
                a.loss_csv = Some(sibling(&a.out, "loss.csv"));
            }
            outs.push(&mut a.out);
            outs.extend(a.loss_csv.as_mut());
            &mut a.manifest
        }
        Command::Metrics(a) => {
            outs.extend(a.out.as_mut());
            &mut a.manifest
        }
        Command::Gradcheck(a) => &mut a.manifest,
        Command::Export(a) => {
            outs.push(&mut a.out);
            &mut a.manifest
        }
        Command::Bench(a) => {
            outs.push(&mut a.out);
            &mut a.manifest
        }
        Command::Replay(_) => return,
    };
    *slot = manifest;
    outs.extend(slot.as_mut());
    for p in outs {
        relocate(p, dir);
    }
}
