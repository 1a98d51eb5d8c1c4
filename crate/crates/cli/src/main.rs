//! `rislink` command-line runner. Every command writes its outputs and a
//! `manifest.json` into `--out`; `replay` re-runs a manifest and checks the
//! outputs are bit-identical.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input.

mod args;
mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use rislink::{io, Error, Result};

use crate::args::{Cli, Command, ReplayArgs};
use crate::manifest::{sha256_hex, OutputRecord, RunManifest, SCHEMA_VERSION};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.threads {
        Some(0) => Err(Error::Validation("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Validation(format!("--threads: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli.command))),
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 1 } else { 2 })
        }
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Replay(a) => replay(a),
        other => {
            let out = other.out().expect("non-replay commands have --out").clone();
            run_and_write(other, &out).map(|_| ())
        }
    }
}

fn run_and_write(command: &Command, out: &Path) -> Result<RunManifest> {
    let run = commands::execute(command)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let mut outputs = Vec::with_capacity(run.files.len());
    for (name, contents) in &run.files {
        io::write_text(&out.join(name), contents)?;
        outputs.push(OutputRecord {
            file: name.clone(),
            sha256: sha256_hex(contents.as_bytes()),
        });
    }
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        tool: manifest::tool(),
        command: command.name().to_string(),
        invocation: command.clone(),
        inputs: run.inputs,
        seed: run.seed,
        settings: run.settings,
        out_dir: out.display().to_string(),
        outputs,
    };
    io::write_text(&out.join("manifest.json"), &io::to_json_pretty(&manifest))?;
    print!("{}", run.summary);
    println!("wrote {} files to {}", manifest.outputs.len() + 1, out.display());
    Ok(manifest)
}

fn replay(a: &ReplayArgs) -> Result<()> {
    let original = RunManifest::load(&a.manifest)?;
    let out: PathBuf = a.out.clone().unwrap_or_else(|| PathBuf::from(&original.out_dir));
    let mut command = original.invocation.clone();
    command.set_out(out.clone());
    let rerun = run_and_write(&command, &out)?;

    let mut problems = Vec::new();
    if rerun.inputs != original.inputs {
        for (was, now) in original.inputs.iter().zip(&rerun.inputs) {
            if was.sha256 != now.sha256 {
                problems.push(format!("input {} ({}) changed since the original run", was.role, was.source));
            }
        }
    }
    if rerun.outputs != original.outputs {
        for was in &original.outputs {
            match rerun.outputs.iter().find(|o| o.file == was.file) {
                Some(now) if now.sha256 == was.sha256 => {}
                Some(_) => problems.push(format!("{} differs", was.file)),
                None => problems.push(format!("{} was not produced", was.file)),
            }
        }
    }
    if problems.is_empty() {
        println!("replay reproduced {} outputs bit-identically", original.outputs.len());
        Ok(())
    } else {
        Err(Error::Validation(format!("replay mismatch: {}", problems.join("; "))))
    }
}
