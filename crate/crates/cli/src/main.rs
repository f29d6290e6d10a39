//! `dtr`: synthesize data, generate masks, run completions, score them.

mod args;
mod commands;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};
use manifest::{manifest_path, redirect_outputs, RunManifest, VERSION_TAG};

/// A failed run, grouped by exit code.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numeric(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    pub fn from_core(e: dtr_core::Error, path: Option<&Path>) -> Self {
        use dtr_core::Error as E;
        let msg = match path {
            Some(p) => format!("{}: {e}", p.display()),
            None => e.to_string(),
        };
        match e {
            E::Config(_) => Failure::Usage(msg),
            E::Io(_) | E::Format(_) => Failure::Io(msg),
            E::Dimension(_) | E::Numerical(_) | E::Contract(_) => Failure::Numeric(msg),
        }
    }
}

impl From<dtr_core::Error> for Failure {
    fn from(e: dtr_core::Error) -> Self {
        Failure::from_core(e, None)
    }
}

/// Splices `--key value` pairs from a `--config` file in front of the
/// explicit subcommand flags, so the explicit ones override them.
fn expand_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, Failure> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config=")) else {
        return Ok(argv);
    };
    let flag = argv.remove(pos).to_string_lossy().into_owned();
    let path = match flag.strip_prefix("--config=") {
        Some(p) => p.to_owned(),
        None if pos < argv.len() => argv.remove(pos).to_string_lossy().into_owned(),
        None => return Err(Failure::Usage("--config needs a file path".into())),
    };
    let text = fs::read_to_string(&path).map_err(|e| Failure::Io(format!("{path}: {e}")))?;
    let mut extra = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| Failure::Usage(format!("{path}:{}: expected key=value", n + 1)))?;
        let key = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => extra.push(OsString::from(key)),
            "false" => {}
            v => {
                extra.push(OsString::from(key));
                extra.push(OsString::from(v));
            }
        }
    }
    let sub = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|i| i + 2);
    let at = sub.unwrap_or(argv.len()).min(argv.len());
    argv.splice(at..at, extra);
    Ok(argv)
}

/// Runs `cmd` and records its manifest.
fn execute(cmd: Command) -> Result<(), Failure> {
    let start = Instant::now();
    let touched = match &cmd {
        Command::Synth(a) => commands::synth(a)?,
        Command::Mask(a) => commands::mask(a)?,
        Command::Recover(a) => commands::recover_cmd(a)?,
        Command::Metrics(a) => commands::metrics_cmd(a)?,
        Command::Gradcheck(a) => commands::gradcheck(a)?,
        Command::Export(a) => commands::export(a)?,
        Command::Bench(a) => commands::bench(a)?,
        Command::Replay(a) => {
            let mut recorded = RunManifest::read(&a.manifest)?.command;
            if matches!(recorded, Command::Replay(_)) {
                return Err(Failure::Usage("a manifest cannot record a replay".into()));
            }
            if let Some(dir) = &a.out_dir {
                fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
                redirect_outputs(&mut recorded, dir);
            }
            return execute(recorded);
        }
    };
    if let Some(path) = manifest_path(&cmd) {
        let manifest = RunManifest {
            version: VERSION_TAG.into(),
            command: cmd,
            inputs: touched.inputs,
            outputs: touched.outputs,
            wall_seconds: start.elapsed().as_secs_f64(),
        };
        manifest.write(&path)?;
    }
    Ok(())
}

fn run(argv: Vec<OsString>) -> Result<(), Failure> {
    let argv = expand_config(argv)?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let _ = e.print();
            return Err(Failure::Usage(String::new()));
        }
    };
    execute(cli.command)
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string();
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_pairs_precede_explicit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "# comment\nsr = 0.5\nseed=3\n\ncsv=true\nverbose=false\n").unwrap();
        let argv = os(&["dtr", "mask", "--config", cfg.to_str().unwrap(), "--seed", "9"]);
        let out = expand_config(argv).unwrap();
        assert_eq!(out, os(&["dtr", "mask", "--sr", "0.5", "--seed", "3", "--csv", "--seed", "9"]));
    }

    #[test]
    fn explicit_flag_wins_after_expansion() {
        let cli =
            Cli::try_parse_from(os(&["dtr", "mask", "--sr", "0.5", "--dims", "2x2x2", "--out", "m", "--sr", "0.25"]))
                .unwrap();
        match cli.command {
            Command::Mask(a) => assert_eq!(a.sr, 0.25),
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn malformed_config_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.cfg");
        fs::write(&cfg, "no equals sign\n").unwrap();
        let err = expand_config(os(&["dtr", "mask", "--config", cfg.to_str().unwrap()])).unwrap_err();
        assert_eq!(err.code(), 1);
        let err = expand_config(os(&["dtr", "mask", "--config", "/nonexistent/x.cfg"])).unwrap_err();
        assert_eq!(err.code(), 2);
    }

    #[test]
    fn number_formatting() {
        assert_eq!(commands::fmt_num(f64::INFINITY), "Inf");
        assert_eq!(commands::fmt_num(20.0), "20");
        assert_eq!(commands::fmt_num(0.1), "0.1");
    }
}
