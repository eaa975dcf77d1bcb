//! `--config` files: a JSON object whose keys mirror command flags.
//!
//! Keys become `--key value` arguments inserted right after the command
//! path, ahead of everything typed on the command line, so explicit flags
//! win. Underscores in keys map to hyphens, arrays are comma-joined, `true`
//! becomes a bare flag and `false` or `null` drops the key.

use std::path::Path;

use serde_json::Value;

use crate::error::{param, CliError, CliResult};

/// Commands whose first positional argument selects a variant.
const NESTED: [&str; 2] = ["maskgen", "validate"];

fn scalar(v: &Value) -> CliResult<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => param(format!("unsupported config value {v}")),
    }
}

pub fn config_to_args(obj: &serde_json::Map<String, Value>) -> CliResult<Vec<String>> {
    let mut out = Vec::new();
    for (k, v) in obj {
        let flag = format!("--{}", k.replace('_', "-"));
        match v {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag),
            Value::Array(items) => {
                let parts = items.iter().map(scalar).collect::<CliResult<Vec<_>>>()?;
                out.push(flag);
                out.push(parts.join(","));
            }
            other => {
                out.push(flag);
                out.push(scalar(other)?);
            }
        }
    }
    Ok(out)
}

/// Returns the config path given on the command line, if any.
fn find_config(args: &[String]) -> Option<(usize, usize, String)> {
    for (i, a) in args.iter().enumerate() {
        if a == "--config" {
            return args.get(i + 1).map(|p| (i, 2, p.clone()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some((i, 1, p.to_string()));
        }
    }
    None
}

/// Expands `--config FILE` into explicit arguments.
pub fn expand(args: Vec<String>) -> CliResult<Vec<String>> {
    let Some((at, width, path)) = find_config(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Io(format!("cannot read config {path}: {e}")))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("config {path} is not valid JSON: {e}")))?;
    let Value::Object(obj) = value else {
        return param(format!("config {path} must hold a JSON object"));
    };
    let extra = config_to_args(&obj)?;
    let mut rest: Vec<String> = args[..at].to_vec();
    rest.extend_from_slice(&args[at + width..]);
    // Insert after the program name, the command and any nested selector.
    let mut pos = 1;
    if let Some(cmd) = rest.get(pos) {
        if !cmd.starts_with('-') {
            pos += 1;
            if NESTED.contains(&cmd.as_str()) && rest.get(pos).is_some_and(|s| !s.starts_with('-'))
            {
                pos += 1;
            }
        }
    }
    let mut out = rest[..pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&rest[pos..]);
    Ok(out)
}
