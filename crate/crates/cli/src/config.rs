//! Flat `key = value` config files and the echoed run configuration.
//!
//! Keys are the long flag names without dashes (`mean-y = 0.6`); repeated
//! keys give repeated flags. Lines starting with `#` are comments. A key
//! given on the command line replaces every value of that key from the file.

use std::collections::HashSet;
use std::ffi::{OsStr, OsString};
use std::fs;

use clap::{ArgMatches, Command};

use crate::error::{CliError, Result};

const SKIPPED_ARGS: [&str; 3] = ["help", "version", "config"];

/// Parses config text into ordered `(key, value)` pairs.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("config line {}: expected `key = value`, got '{line}'", i + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() {
            return Err(CliError::config(format!("config line {}: empty key", i + 1)));
        }
        out.push((key, value.trim().to_string()));
    }
    Ok(out)
}

fn flag_name(arg: &OsStr) -> Option<String> {
    let s = arg.to_str()?;
    let name = s.strip_prefix("--")?;
    Some(name.split_once('=').map_or(name, |(k, _)| k).to_string())
}

/// Replaces `--config PATH` in `args` by the file's entries as flags,
/// skipping keys that also appear on the command line.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path = None;
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        match arg.to_str() {
            Some("--config") => {
                path = Some(iter.next().ok_or_else(|| CliError::config("--config needs a file path"))?);
            }
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(arg),
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::config(format!("cannot read config file {}: {e}", path.to_string_lossy())))?;
    let entries = parse_config(&text)?;
    let sub_pos = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1);
    let Some(sub_pos) = sub_pos else {
        return Err(CliError::config("--config needs a command"));
    };
    let command = rest[sub_pos].to_string_lossy().into_owned();
    let given: HashSet<String> = rest.iter().filter_map(|a| flag_name(a)).collect();
    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "command" {
            if value != command {
                return Err(CliError::config(format!("config file is for command '{value}', not '{command}'")));
            }
        } else if !given.contains(&key) {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    rest.splice(sub_pos + 1..sub_pos + 1, injected);
    Ok(rest)
}

/// The effective configuration of a run: command name and every flag value
/// in declaration order, defaults included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandConfig {
    pub command: String,
    pub params: Vec<(String, String)>,
}

impl CommandConfig {
    pub fn from_matches(name: &str, matches: &ArgMatches, command: &Command) -> Self {
        let mut params = Vec::new();
        for arg in command.get_arguments() {
            let id = arg.get_id().as_str();
            let Some(long) = arg.get_long() else { continue };
            if SKIPPED_ARGS.contains(&id) {
                continue;
            }
            if let Ok(Some(values)) = matches.try_get_raw(id) {
                for v in values {
                    params.push((long.to_string(), v.to_string_lossy().into_owned()));
                }
            }
        }
        Self { command: name.to_string(), params }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn seed(&self) -> Option<u64> {
        self.get("seed").and_then(|s| s.parse().ok())
    }

    /// Command-line arguments reproducing this configuration.
    pub fn to_args(&self) -> Vec<String> {
        let mut args = vec!["glmpss".to_string(), self.command.clone()];
        args.extend(self.params.iter().map(|(k, v)| format!("--{k}={v}")));
        args
    }

    /// `#` comment lines: program version, then the config in file syntax.
    pub fn metadata_lines(&self) -> Vec<String> {
        let mut lines =
            vec![format!("# glmpss {}", env!("CARGO_PKG_VERSION")), format!("# command = {}", self.command)];
        lines.extend(self.params.iter().map(|(k, v)| format!("# {k} = {v}")));
        lines
    }

    /// Reads the metadata header written by [`CommandConfig::metadata_lines`].
    pub fn from_metadata(text: &str) -> Result<Self> {
        let body: Vec<&str> =
            text.lines().take_while(|l| l.starts_with('#')).skip(1).map(|l| l.trim_start_matches('#')).collect();
        let mut entries = parse_config(&body.join("\n"))?.into_iter();
        match entries.next() {
            Some((k, command)) if k == "command" => Ok(Self { command, params: entries.collect() }),
            _ => Err(CliError::config("metadata header does not name a command")),
        }
    }
}
