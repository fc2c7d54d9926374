//! Optional `key = value` configuration files.
//!
//! A configuration file supplies defaults for long options of the chosen
//! subcommand: `seed = 3` behaves like `--seed 3` unless the option is also
//! given on the command line, which always wins. `true` enables a switch and
//! `false` leaves it off. Blank lines and lines starting with `#` are
//! ignored; values may be wrapped in double quotes.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Context, Result};

/// Parse configuration text into `(key, value)` pairs in file order.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", i + 1);
        };
        let key = key.trim();
        if key.is_empty() || key.starts_with('-') {
            bail!("config line {}: bad key {key:?}", i + 1);
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        pairs.push((key.to_string(), value.to_string()));
    }
    Ok(pairs)
}

/// Remove `--config FILE` (or `--config=FILE`) from `args` and append the
/// file's settings for every option not already present on the line.
pub fn expand(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(pos) = args
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
    else {
        return Ok(args);
    };
    let flag = args.remove(pos).to_string_lossy().into_owned();
    let path = match flag.strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None if pos < args.len() => args.remove(pos).to_string_lossy().into_owned(),
        None => bail!("--config requires a file"),
    };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    for (key, value) in parse(&text)? {
        let long = format!("--{key}");
        let given = args.iter().any(|a| {
            let a = a.to_string_lossy();
            a == long || a.starts_with(&format!("{long}="))
        });
        if given {
            continue;
        }
        match value.as_str() {
            "true" => args.push(long.into()),
            "false" => {}
            _ => {
                args.push(long.into());
                args.push(value.into());
            }
        }
    }
    Ok(args)
}
