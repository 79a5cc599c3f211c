//! Flat `key=value` run configuration files.
//!
//! Keys are the long flag names without the leading dashes (`seed`,
//! `d-ego-hand`, ...). Blank lines and lines starting with `#` are ignored.
//! Command-line flags take precedence over file values, and any key the
//! command does not consume is an error.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Default)]
pub struct ConfigFile {
    source: String,
    values: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
        let Some(path) = path else { return Ok(ConfigFile::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        ConfigFile::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<ConfigFile, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("{source}:{}: expected key=value", i + 1)))?;
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Input(format!("{source}:{}: empty key", i + 1)));
            }
            if values.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(CliError::Input(format!("{source}:{}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(ConfigFile { source: source.to_string(), values })
    }

    /// Resolves one setting: the flag if given, else the file value.
    pub fn take<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let from_file = self.values.remove(key);
        if flag.is_some() {
            return Ok(flag);
        }
        match from_file {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Input(format!("{}:{line}: bad value for `{key}`: {e}", self.source))),
        }
    }

    /// Boolean switches: a set flag wins, otherwise `true`/`false` from file.
    pub fn switch(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        Ok(self.take(key, flag.then_some(true))?.unwrap_or(false))
    }

    /// Fails on keys nobody consumed.
    pub fn finish(self) -> Result<(), CliError> {
        match self.values.iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(CliError::Input(format!("{}:{line}: unknown key `{k}`", self.source))),
        }
    }
}
