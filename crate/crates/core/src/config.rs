//! `key = value` config files whose keys are the long flag names of a
//! subcommand. Values are spliced in as flags ahead of the command line, so
//! explicit flags win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Parses `key = value` lines. `#` starts a comment; blank lines are ignored.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::load("config", i + 1, format!("expected key = value, got {line:?}")));
        };
        let key = k.trim().trim_start_matches("--");
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(Error::load("config", i + 1, format!("bad key {k:?}")));
        }
        if key == "config" {
            return Err(Error::load("config", i + 1, "config files cannot include other config files"));
        }
        out.push((key.to_string(), v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

/// `true` turns into a bare switch and `false` drops the key.
pub fn config_to_args(entries: &[(String, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => args.push(format!("--{k}")),
            "false" => {}
            _ => args.push(format!("--{k}={v}")),
        }
    }
    args
}

pub fn load_config(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::File { path: path.to_path_buf(), source })?;
    parse_config(&text)
}

/// Removes `--config PATH` (or `--config=PATH`) from `argv` and inserts the
/// file's flags right after the subcommand, which is `argv[1]`.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path: Option<PathBuf> = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => {
                let p = it.next().ok_or_else(|| Error::invalid("--config needs a path"))?;
                path = Some(p.into());
            }
            Some(s) if s.starts_with("--config=") => path = Some(s["--config=".len()..].into()),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else { return Ok(rest) };
    if rest.len() < 2 {
        return Ok(rest);
    }
    let injected = config_to_args(&load_config(&path)?);
    let mut out: Vec<OsString> = rest.drain(..2).collect();
    out.extend(injected.into_iter().map(OsString::from));
    out.extend(rest);
    Ok(out)
}
