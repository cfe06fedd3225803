//! Config files: a TOML document whose top-level keys are global flags and
//! whose tables, named after subcommands, hold that subcommand's flags.
//! Values are spliced into the argument list ahead of the user's own flags,
//! so anything given on the command line wins.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Global flags that take a value and may appear before the subcommand.
const GLOBAL_VALUE_FLAGS: [&str; 3] = ["--config", "--seed", "--jobs"];

fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
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

fn subcommand_position(argv: &[OsString], subcommands: &[&str]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let s = argv[i].to_string_lossy();
        if subcommands.contains(&s.as_ref()) {
            return Some(i);
        }
        if GLOBAL_VALUE_FLAGS.contains(&s.as_ref()) {
            i += 1;
        } else if !s.starts_with('-') {
            return None;
        }
        i += 1;
    }
    None
}

fn flag_args(key: &str, value: &toml::Value, out: &mut Vec<OsString>) -> CliResult<()> {
    let flag = format!("--{}", key.replace('_', "-"));
    match value {
        toml::Value::Boolean(true) => out.push(flag.into()),
        toml::Value::Boolean(false) => {}
        toml::Value::String(s) => {
            out.push(flag.into());
            out.push(s.into());
        }
        toml::Value::Integer(i) => {
            out.push(flag.into());
            out.push(i.to_string().into());
        }
        toml::Value::Float(f) => {
            out.push(flag.into());
            out.push(f.to_string().into());
        }
        toml::Value::Array(items) => {
            for item in items {
                flag_args(key, item, out)?;
            }
        }
        other => {
            return Err(CliError::format(
                format!("config.{key}"),
                format!("unsupported value type {}", other.type_str()),
            ))
        }
    }
    Ok(())
}

/// Returns `argv` with the config file's flags spliced in after the subcommand.
pub fn expand(argv: Vec<OsString>, subcommands: &[&str]) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::format("config", e.message().to_string()).with("path", path.display().to_string()))?;
    let Some(pos) = subcommand_position(&argv, subcommands) else {
        return Ok(argv);
    };
    let sub = argv[pos].to_string_lossy().into_owned();
    let mut injected = Vec::new();
    for (key, value) in &doc {
        match value {
            toml::Value::Table(table) => {
                if !subcommands.contains(&key.as_str()) {
                    return Err(CliError::format(format!("config.{key}"), "not a subcommand"));
                }
                if *key == sub {
                    for (k, v) in table {
                        flag_args(k, v, &mut injected)?;
                    }
                }
            }
            _ => flag_args(key, value, &mut injected)?,
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}
