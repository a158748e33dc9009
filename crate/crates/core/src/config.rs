//! Flat `key = value` run configuration. Every key has a default; a config
//! file overrides defaults and command-line overrides win over both.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// `(key, default, description)`
pub const KEYS: &[(&str, &str, &str)] = &[
    ("seed", "1", "master seed for data generation, initialisation, shuffling and self-play"),
    ("profile", "toy", "dimension profile: toy or paper"),
    ("out", "runs/toy", "working directory"),
    ("data_dir", "", "game files and feature table (default <out>/data)"),
    ("checkpoint_dir", "", "checkpoints and vocabulary (default <out>/checkpoints)"),
    ("n_games", "5000", "toy training games; validation and test get n_games/10 each"),
    ("n_categories", "10", "toy object categories"),
    ("feature_dim", "32", "toy image feature width"),
    ("min_objects", "3", "toy objects per image, lower bound"),
    ("max_objects", "8", "toy objects per image, upper bound"),
    ("min_freq", "3", "minimum training-split frequency for a vocabulary word"),
    ("lr", "0.001", "Adam learning rate"),
    ("batch_size", "", "mini-batch size (default from profile)"),
    ("max_epochs", "30", "epoch cap"),
    ("patience", "5", "early-stopping patience in epochs"),
    ("clip_norm", "5.0", "global gradient-norm clip"),
    ("dm1_labels", "gt-label", "DM1 label scheme (gt-label only)"),
    ("dm2_labels", "guess-label", "DM2 label scheme: gt-label or guess-label"),
    ("dm_weighting", "uniform", "decider class weighting: uniform or inverse"),
    ("hybrid", "false", "allow the hybrid decider"),
    ("maxq", "10", "question cap for selfplay and play"),
    ("sweep_maxq", "5,8,10", "caps evaluated by eval-sweep"),
    ("modes", "baseline,dm1,dm2", "play modes for selfplay and eval-sweep"),
    ("split", "test", "split used for selfplay, eval-sweep and play"),
    ("jobs", "0", "worker threads (0 = all cores)"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Default,
    File,
    Flag,
}

impl Source {
    fn as_str(self) -> &'static str {
        match self {
            Source::Default => "default",
            Source::File => "file",
            Source::Flag => "flag",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: BTreeMap<String, (String, Source)>,
}

fn known(key: &str) -> Result<()> {
    if KEYS.iter().any(|(k, _, _)| *k == key) {
        Ok(())
    } else {
        Err(Error::Config(format!("unknown configuration key {key:?}")))
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
        let k = k.trim();
        known(k).map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Splits a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    known(k.trim())?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

impl Default for Config {
    fn default() -> Self {
        Self {
            values: KEYS
                .iter()
                .map(|(k, v, _)| (k.to_string(), (v.to_string(), Source::Default)))
                .collect(),
        }
    }
}

impl Config {
    pub fn resolve(file: Option<&Path>, flags: &[(String, String)]) -> Result<Self> {
        let mut c = Config::default();
        if let Some(p) = file {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", p.display())))?;
            for (k, v) in parse_config_text(&text)? {
                c.values.insert(k, (v, Source::File));
            }
        }
        for (k, v) in flags {
            known(k)?;
            c.values.insert(k.clone(), (v.clone(), Source::Flag));
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        known(key)?;
        self.values.insert(key.to_string(), (value.into(), Source::Flag));
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(|(v, _)| v.as_str()).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let v = self.raw(key);
        v.parse()
            .map_err(|e| Error::Config(format!("bad value {v:?} for {key}: {e}")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| Error::Config(format!("bad element {s:?} in {key}: {e}")))
            })
            .collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out"))
    }

    pub fn data_dir(&self) -> PathBuf {
        match self.raw("data_dir") {
            "" => self.out_dir().join("data"),
            d => PathBuf::from(d),
        }
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        match self.raw("checkpoint_dir") {
            "" => self.out_dir().join("checkpoints"),
            d => PathBuf::from(d),
        }
    }

    /// Effective values, one `key = value` line each.
    pub fn echo(&self) -> String {
        self.values.iter().map(|(k, (v, _))| format!("{k} = {v}\n")).collect()
    }

    /// Like `echo`, with the source of each value.
    pub fn echo_sources(&self) -> String {
        self.values
            .iter()
            .map(|(k, (v, s))| format!("{k} = {v}  [{}]\n", s.as_str()))
            .collect()
    }

    pub fn as_map(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, (v, _))| (k.clone(), v.clone())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "# comment\nseed = 7\nlr=0.01\n").unwrap();
        let c = Config::resolve(Some(&p), &[("seed".into(), "9".into())]).unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), 9);
        assert_eq!(c.get::<f64>("lr").unwrap(), 0.01);
        assert_eq!(c.get::<usize>("patience").unwrap(), 5);
        assert!(c.echo_sources().contains("seed = 9  [flag]"));
        assert!(c.echo_sources().contains("lr = 0.01  [file]"));
        assert_eq!(c.list::<usize>("sweep_maxq").unwrap(), vec![5, 8, 10]);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(parse_config_text("bogus = 1"), Err(Error::Config(_))));
        assert!(parse_override("seed").is_err());
        assert!(Config::default().get::<u64>("profile").is_err());
    }

    #[test]
    fn derived_dirs() {
        let mut c = Config::default();
        c.set("out", "x").unwrap();
        assert_eq!(c.data_dir(), PathBuf::from("x/data"));
        c.set("data_dir", "d").unwrap();
        assert_eq!(c.data_dir(), PathBuf::from("d"));
    }
}
