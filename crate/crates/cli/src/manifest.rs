//! Flat `key=value` run manifests.
//!
//! ```text
//! command=simulate
//! version=0.1.0
//! seed=none
//! param.init-soc=80
//! input.load.csv=<sha256 hex>
//! ```
//!
//! `param.*` entries are the fully resolved command-line flags, so a manifest
//! can be turned back into an argument list and re-run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Flag name (without dashes) and value, in command-line order.
    pub params: Vec<(String, String)>,
    /// File name and SHA-256 digest of every input read.
    pub inputs: Vec<(String, String)>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            version: VERSION.into(),
            seed,
            ..Self::default()
        }
    }

    pub fn param(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.params.push((name.into(), value.to_string()));
        self
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let digest = sha256_file(path)?;
        self.inputs.push((path.display().to_string(), digest));
        Ok(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "command={}", self.command);
        let _ = writeln!(out, "version={}", self.version);
        match self.seed {
            Some(s) => {
                let _ = writeln!(out, "seed={s}");
            }
            None => {
                let _ = writeln!(out, "seed=none");
            }
        }
        for (k, v) in &self.params {
            let _ = writeln!(out, "param.{k}={v}");
        }
        for (k, v) in &self.inputs {
            let _ = writeln!(out, "input.{k}={v}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Self::default();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("manifest line {}: expected key=value, got `{line}`", n + 1);
            };
            match key {
                "command" => m.command = value.into(),
                "version" => m.version = value.into(),
                "seed" => {
                    m.seed = match value {
                        "none" => None,
                        s => Some(s.parse().with_context(|| format!("bad seed `{s}`"))?),
                    }
                }
                _ => {
                    if let Some(name) = key.strip_prefix("param.") {
                        m.params.push((name.into(), value.into()));
                    } else if let Some(path) = key.strip_prefix("input.") {
                        m.inputs.push((path.into(), value.into()));
                    } else {
                        bail!("manifest line {}: unknown key `{key}`", n + 1);
                    }
                }
            }
        }
        if m.command.is_empty() {
            bail!("manifest has no command");
        }
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).with_context(|| format!("writing {}", path.display()))
    }

    /// Argument list reproducing the run. Boolean flags are stored as
    /// `true`/`false` and become bare switches.
    pub fn argv(&self) -> Vec<String> {
        let mut argv = vec!["mgpt".to_string(), self.command.clone()];
        for (k, v) in &self.params {
            match v.as_str() {
                "true" => argv.push(format!("--{k}")),
                "false" => {}
                _ => {
                    argv.push(format!("--{k}"));
                    argv.push(v.clone());
                }
            }
        }
        argv
    }

    /// Fails if any recorded input changed since the manifest was written.
    pub fn verify_inputs(&self) -> Result<()> {
        for (path, digest) in &self.inputs {
            let now = sha256_file(Path::new(path))?;
            if &now != digest {
                bail!("input {path} changed since the run (sha256 {now}, manifest {digest})");
            }
        }
        Ok(())
    }
}

/// `<output>.manifest`, next to the primary output.
pub fn manifest_path(output: &Path) -> PathBuf {
    let trimmed = output.to_string_lossy().trim_end_matches('/').to_string();
    PathBuf::from(format!("{trimmed}.manifest"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut m = RunManifest::new("train", Some(7));
        m.param("episodes", 10).param("force-off", true).param("out", "a b.txt");
        m.inputs.push(("x/load.csv".into(), "00ff".into()));
        assert_eq!(RunManifest::parse(&m.to_text()).unwrap(), m);
    }

    #[test]
    fn argv_expands_switches() {
        let mut m = RunManifest::new("simulate", None);
        m.param("init-soc", 80).param("force-off", true).param("quiet", false);
        assert_eq!(m.argv(), ["mgpt", "simulate", "--init-soc", "80", "--force-off"]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(RunManifest::parse("hello").is_err());
        assert!(RunManifest::parse("version=1\n").is_err());
        assert!(RunManifest::parse("command=x\nwhat=1\n").is_err());
    }

    #[test]
    fn manifest_next_to_output() {
        assert_eq!(manifest_path(Path::new("out/trace.csv")), PathBuf::from("out/trace.csv.manifest"));
        assert_eq!(manifest_path(Path::new("s/")), PathBuf::from("s.manifest"));
    }
}
