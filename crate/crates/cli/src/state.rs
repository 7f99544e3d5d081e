//! Saved-state store: the best rule tuple found for a dataset, keyed by a
//! content fingerprint so renamed files reuse state and edited files do
//! not. One text record file per fingerprint, written atomically by the
//! search coordinator only.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};

use crate::output;

pub const STATE_DIR_ENV: &str = "RCA_CLUSTER_STATE_DIR";
pub const DEFAULT_STATE_DIR: &str = "rca_state";

/// Content digest of the inputs that determine a search: the raw dataset
/// bytes, the encoding plan, the split size and the cluster count.
pub fn fingerprint(
    input_bytes: &[u8],
    plan_text: &str,
    split_size: usize,
    clusters: usize,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(input_bytes);
    hasher.update([0]);
    hasher.update(plan_text.as_bytes());
    hasher.update([0]);
    hasher.update(split_size.to_string().as_bytes());
    hasher.update([0]);
    hasher.update(clusters.to_string().as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavedState {
    pub fingerprint: String,
    pub rules: Vec<u32>,
    pub silhouette: String,
    pub davies_bouldin: String,
    pub calinski_harabasz: String,
    pub created_unix: u64,
    pub tool_version: String,
}

impl SavedState {
    pub fn new(
        fingerprint: String,
        rules: Vec<u32>,
        silhouette: String,
        davies_bouldin: String,
        calinski_harabasz: String,
    ) -> Self {
        SavedState {
            fingerprint,
            rules,
            silhouette,
            davies_bouldin,
            calinski_harabasz,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn to_text(&self) -> String {
        let rules: Vec<String> = self.rules.iter().map(|r| r.to_string()).collect();
        format!(
            "rca-cluster state v1\nfingerprint {}\nrules {}\nsilhouette {}\n\
             davies_bouldin {}\ncalinski_harabasz {}\ncreated-unix {}\ntool-version {}\n",
            self.fingerprint,
            rules.join(","),
            self.silhouette,
            self.davies_bouldin,
            self.calinski_harabasz,
            self.created_unix,
            self.tool_version,
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some("rca-cluster state v1") {
            bail!("not a state file (missing header)");
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .with_context(|| format!("state file missing {key}"))?;
            line.strip_prefix(key)
                .and_then(|r| r.strip_prefix(' '))
                .map(str::to_string)
                .with_context(|| format!("state file line {line:?} does not start with {key}"))
        };
        let fingerprint = field("fingerprint")?;
        let rules = field("rules")?
            .split(',')
            .map(|s| s.trim().parse::<u32>().context("bad rule in state file"))
            .collect::<Result<Vec<_>>>()?;
        let silhouette = field("silhouette")?;
        let davies_bouldin = field("davies_bouldin")?;
        let calinski_harabasz = field("calinski_harabasz")?;
        let created_unix = field("created-unix")?.parse().context("bad created-unix")?;
        let tool_version = field("tool-version")?;
        Ok(SavedState {
            fingerprint,
            rules,
            silhouette,
            davies_bouldin,
            calinski_harabasz,
            created_unix,
            tool_version,
        })
    }
}

pub fn state_dir(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Ok(env) = std::env::var(STATE_DIR_ENV) {
        if !env.is_empty() {
            return PathBuf::from(env);
        }
    }
    PathBuf::from(DEFAULT_STATE_DIR)
}

pub fn state_path(dir: &Path, fingerprint: &str) -> PathBuf {
    dir.join(format!("{fingerprint}.state"))
}

pub fn load(dir: &Path, fingerprint: &str) -> Result<Option<SavedState>> {
    let path = state_path(dir, fingerprint);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading state file {}", path.display()))?;
    let state = SavedState::parse(&text)
        .with_context(|| format!("parsing state file {}", path.display()))?;
    if state.fingerprint != fingerprint {
        bail!(
            "state file {} carries fingerprint {} (expected {fingerprint})",
            path.display(),
            state.fingerprint
        );
    }
    Ok(Some(state))
}

pub fn store(dir: &Path, state: &SavedState) -> Result<()> {
    output::atomic_write(&state_path(dir, &state.fingerprint), &state.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_depends_on_every_component() {
        let base = fingerprint(b"abc", "plan", 12, 3);
        assert_ne!(base, fingerprint(b"abd", "plan", 12, 3));
        assert_ne!(base, fingerprint(b"abc", "plan2", 12, 3));
        assert_ne!(base, fingerprint(b"abc", "plan", 13, 3));
        assert_ne!(base, fingerprint(b"abc", "plan", 12, 4));
        assert_eq!(base, fingerprint(b"abc", "plan", 12, 3));
    }

    #[test]
    fn state_round_trip() {
        let state = SavedState::new(
            "deadbeef".into(),
            vec![252691440, 265482450],
            "0.621799".into(),
            "0.586064".into(),
            "569.640104".into(),
        );
        let parsed = SavedState::parse(&state.to_text()).unwrap();
        assert_eq!(parsed, state);
    }

    #[test]
    fn store_and_load() {
        let dir = std::env::temp_dir().join(format!("rca_state_test_{}", std::process::id()));
        let state = SavedState::new(
            "f00d".into(),
            vec![1, 2],
            "0.5".into(),
            "1".into(),
            "2".into(),
        );
        store(&dir, &state).unwrap();
        let loaded = load(&dir, "f00d").unwrap().unwrap();
        assert_eq!(loaded, state);
        assert!(load(&dir, "beef").unwrap().is_none());
        std::fs::remove_dir_all(&dir).ok();
    }
}
