mod args;
mod commands;
mod config_file;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use golde_core::Error;

use args::{Cli, Command};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const DATA: u8 = 2;
    pub const NUMERIC: u8 = 3;
    pub const SELFCHECK: u8 = 4;
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Io { .. } | Error::Checkpoint(_) | Error::IdOutOfRange { .. } => exit::DATA,
        Error::Numeric(_) | Error::OffManifold { .. } | Error::DegenerateReflector { .. } | Error::NotOrthogonal { .. } => {
            exit::NUMERIC
        }
        _ => exit::USAGE,
    }
}

/// Value of `--config` given to the train subcommand, if any.
fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let start = argv.iter().position(|a| a == "train")?;
    let mut it = argv[start + 1..].iter();
    while let Some(a) = it.next() {
        let a = a.to_str()?;
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

fn parse(argv: &[OsString]) -> Result<Cli, ExitCode> {
    let argv = match config_path(argv) {
        None => argv.to_vec(),
        Some(path) => {
            let tokens = std::fs::read_to_string(&path)
                .map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })
                .and_then(|text| config_file::tokens(&text, &path))
                .map_err(|e| {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e))
                })?;
            config_file::splice(argv, "train", tokens)
        }
    };
    Cli::try_parse_from(&argv).map_err(|e| {
        let _ = e.print();
        ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OK })
    })
}

fn main() -> ExitCode {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(exit::USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::USAGE);
        }
    }
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Diagnose(a) => commands::diagnose(a),
        Command::Selfcheck(a) => commands::selfcheck(a),
        Command::MakeToy(a) => commands::make_toy(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
