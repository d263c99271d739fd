//! Optional TOML config. Keys mirror long flags (`_` or `-`). Top-level keys
//! apply to every subcommand that has the flag; a `[name]` table applies to
//! subcommand `name` only. Flags given on the command line win.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::Command;
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

fn scalar(v: &Value) -> CliResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(format!("{f:e}")),
        Value::Boolean(b) => Ok(b.to_string()),
        other => Err(CliError::config(format!("unsupported config value `{other}`"))),
    }
}

fn given_on_command_line(argv: &[OsString], flag: &str) -> bool {
    let eq = format!("{flag}=");
    argv.iter()
        .filter_map(|a| a.to_str())
        .any(|a| a == flag || a.starts_with(&eq))
}

/// Finds the subcommand name and the index right after it.
fn subcommand_position(argv: &[OsString], root: &Command) -> Option<(String, usize)> {
    argv.iter().enumerate().skip(1).find_map(|(i, a)| {
        let s = a.to_str()?;
        root.find_subcommand(s).map(|_| (s.to_string(), i + 1))
    })
}

fn extract_config_path(argv: &[OsString]) -> Option<String> {
    let mut it = argv.iter().filter_map(|a| a.to_str());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(str::to_string);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Returns argv with config values inserted as flags for any key the user
/// did not pass explicitly.
pub fn merge(argv: Vec<OsString>, root: &Command) -> CliResult<Vec<OsString>> {
    let Some(path) = extract_config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(Path::new(&path)).map_err(|e| CliError::config(format!("cannot read config {path}: {e}")))?;
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config(format!("config {path}: {}", e.message())))?;
    let Some((name, insert_at)) = subcommand_position(&argv, root) else {
        return Ok(argv);
    };
    let sub = root.find_subcommand(&name).expect("subcommand exists");
    let known: Vec<String> = sub.get_arguments().filter_map(|a| a.get_long().map(str::to_string)).collect();

    let mut entries: Vec<(String, &Value)> = Vec::new();
    for (k, v) in &table {
        if v.is_table() {
            continue;
        }
        let long = k.replace('_', "-");
        if known.contains(&long) {
            entries.push((long, v));
        }
    }
    if let Some(Value::Table(section)) = table.get(&name) {
        for (k, v) in section {
            let long = k.replace('_', "-");
            if !known.contains(&long) {
                return Err(CliError::config(format!("config [{name}]: unknown key `{k}`")));
            }
            entries.retain(|(l, _)| *l != long);
            entries.push((long, v));
        }
    }

    let mut extra: Vec<OsString> = Vec::new();
    for (long, v) in entries {
        let flag = format!("--{long}");
        if given_on_command_line(&argv, &flag) {
            continue;
        }
        let arg = sub.get_arguments().find(|a| a.get_long() == Some(long.as_str())).expect("known flag");
        let takes_value = arg.get_num_args().map(|r| r.takes_values()).unwrap_or(true);
        match v {
            Value::Boolean(b) if !takes_value => {
                if *b {
                    extra.push(flag.into());
                }
            }
            Value::Array(items) => {
                for item in items {
                    extra.push(flag.clone().into());
                    extra.push(scalar(item)?.into());
                }
            }
            _ => {
                extra.push(flag.into());
                extra.push(scalar(v)?.into());
            }
        }
    }
    let mut out = argv;
    out.splice(insert_at..insert_at, extra);
    Ok(out)
}
