//! Optional TOML config file. Keys mirror the long flag names; a flag given on
//! the command line always wins over the same key in the file. Relative paths
//! in the file are resolved against the file's directory.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use qoetm_core::{ClipProfile, VmafModel};
use serde::Deserialize;

/// A value that may be written as a TOML number or string (`50e6`, `"50M"`).
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum Loose {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for Loose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loose::Int(v) => write!(f, "{v}"),
            Loose::Float(v) => write!(f, "{v:e}"),
            Loose::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,

    pub clips: Option<usize>,
    pub windows: Option<usize>,
    pub seed: Option<u64>,
    pub crfs: Option<Vec<u32>>,
    pub profiles: Option<Vec<ClipProfile>>,
    pub vmaf: Option<VmafModel>,

    pub ladder: Option<PathBuf>,
    pub targets: Option<Loose>,
    pub scc: Option<bool>,
    pub sessions: Option<usize>,
    pub len: Option<usize>,
    pub curve: Option<PathBuf>,
    pub mode: Option<String>,
    pub cap: Option<Loose>,
    pub methods: Option<Loose>,
    pub target: Option<u32>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.out, &mut cfg.ladder, &mut cfg.curve]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loose_values() {
        let cfg: FileConfig =
            toml::from_str("cap = 50e6\ntargets = \"10:95\"\nmethods = \"all\"\nsessions = 30")
                .unwrap();
        assert_eq!(cfg.cap.unwrap().to_string(), "5e7");
        assert_eq!(cfg.targets.unwrap().to_string(), "10:95");
        assert_eq!(cfg.sessions, Some(30));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(toml::from_str::<FileConfig>("capacity = 5").is_err());
    }

    #[test]
    fn relative_paths_follow_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "ladder = \"corpus\"\nout = \"/abs/out\"\n").unwrap();
        let cfg = FileConfig::load(&path).unwrap();
        assert_eq!(cfg.ladder.unwrap(), dir.path().join("corpus"));
        assert_eq!(cfg.out.unwrap(), PathBuf::from("/abs/out"));
    }
}
