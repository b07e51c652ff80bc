//! Merging a `key=value` config file into the command line.
//!
//! Config entries become `--key value` arguments placed right after the
//! subcommand name, ahead of the user's own flags. Since every flag overrides
//! itself, anything given explicitly wins.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, Command};

#[derive(Debug)]
pub struct ConfigError(pub String);

/// Value of `--config` if present (before or after the subcommand).
fn find_config(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn parse_entries(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("{}:{}: expected key=value", path.display(), i + 1)))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Returns `argv` with config entries for the chosen subcommand spliced in.
///
/// Keys accepted by no subcommand are errors; keys that belong only to other
/// subcommands are skipped so one file can serve a whole pipeline.
pub fn merge(argv: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>, ConfigError> {
    let Some(path) = find_config(&argv) else {
        return Ok(argv);
    };
    let entries = parse_entries(Path::new(&path))?;
    let Some(pos) = argv
        .iter()
        .position(|a| cmd.find_subcommand(a.to_string_lossy().as_ref()).is_some())
    else {
        return Ok(argv);
    };
    let sub = cmd.find_subcommand(argv[pos].to_string_lossy().as_ref()).unwrap();
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(ConfigError("config files cannot include other config files".into()));
        }
        match sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) {
            Some(arg) => {
                if matches!(arg.get_action(), ArgAction::SetTrue) {
                    match value.as_str() {
                        "true" => injected.push(format!("--{key}").into()),
                        "false" => {}
                        _ => return Err(ConfigError(format!("{key}: expected true or false, got {value:?}"))),
                    }
                } else {
                    injected.push(format!("--{key}={value}").into());
                }
            }
            None => {
                let known = cmd
                    .get_subcommands()
                    .any(|s| s.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
                if !known {
                    return Err(ConfigError(format!("unknown config key {key:?}")));
                }
            }
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}
