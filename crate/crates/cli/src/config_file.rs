//! `key=value` run files. Keys are long flag names without the dashes.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use golde_core::{Error, Result};

use crate::args::TrainArgs;

/// Turns a run file into `--key value` tokens. Blank lines and `#` comments are skipped.
pub fn tokens(text: &str, source: &Path) -> Result<Vec<OsString>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: &str| Error::Parse {
            path: source.display().to_string(),
            line: i + 1,
            msg: msg.to_string(),
        };
        let (key, value) = line.split_once('=').ok_or_else(|| parse_err("expected key=value"))?;
        let key = key.trim();
        if key.is_empty() || key.starts_with('-') {
            return Err(parse_err("key must be a flag name without dashes"));
        }
        if key == "config" {
            return Err(parse_err("run files cannot include other run files"));
        }
        out.push(format!("--{key}").into());
        out.push(value.trim().into());
    }
    Ok(out)
}

/// Rebuilds argv with the file's tokens placed right after the subcommand, so
/// flags given on the command line come later and take precedence.
pub fn splice(argv: &[OsString], subcommand: &str, file_tokens: Vec<OsString>) -> Vec<OsString> {
    let at = argv.iter().position(|a| a == subcommand).map_or(argv.len(), |p| p + 1);
    let mut out = argv[..at].to_vec();
    out.extend(file_tokens);
    out.extend_from_slice(&argv[at..]);
    out
}

/// Serializes resolved train flags; replaying the file gives the same run.
pub fn render(a: &TrainArgs) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k}={v}");
    };
    kv("data", a.data.display().to_string());
    kv("out", a.out.display().to_string());
    kv("dim", a.dim.to_string());
    if let Some(k) = a.kstar {
        kv("kstar", k.to_string());
    }
    kv("mp", a.mp.to_string());
    kv("mq", a.mq.to_string());
    if let Some(c) = &a.components {
        kv("components", c.clone());
    }
    kv("norm", a.norm.to_string());
    kv("batch-size", a.batch_size.to_string());
    kv("alpha", a.alpha.to_string());
    kv("gamma", a.gamma.to_string());
    kv("lr", a.lr.to_string());
    kv("neg-size", a.neg_size.to_string());
    kv("steps", a.steps.to_string());
    kv("valid-every", a.valid_every.to_string());
    if let Some(v) = a.valid_max {
        kv("valid-max", v.to_string());
    }
    kv("seed", a.seed.to_string());
    kv("precision", a.precision.to_string());
    kv("filter-negatives", a.filter_negatives.to_string());
    kv("freeze-elliptic", a.freeze_elliptic.to_string());
    s
}
