use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::propagator::NormTrace;

/// One artifact of a run directory.
#[derive(Clone, Debug, PartialEq)]
pub struct RunFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl RunFile {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Self {
            name: name.into(),
            bytes,
        }
    }

    /// One `<metric>.csv` per metric of `trace`.
    pub fn from_trace(trace: &NormTrace) -> Result<Vec<Self>, HarnessError> {
        trace
            .metrics
            .keys()
            .map(|name| {
                let mut bytes = Vec::new();
                trace.write_metric_csv(name, &mut bytes)?;
                Ok(Self::new(format!("{name}.csv"), bytes))
            })
            .collect()
    }

    pub fn json<T: serde::Serialize>(name: impl Into<String>, value: &T) -> Result<Self, HarnessError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self::new(name, bytes))
    }
}

/// SHA-256 of the compact JSON encoding (object keys sorted).
pub fn config_digest(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("JSON values always serialize");
    hex::encode(Sha256::digest(&bytes))
}

/// Writes `files` into `<out>/<experiment>-<first 16 digest chars>/`. The
/// directory is assembled under a temporary name and renamed into place, so
/// readers never see a partial run.
pub fn write_run(out: &Path, experiment: &str, digest: &str, files: &[RunFile]) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(out)?;
    let name = format!("{experiment}-{}", &digest[..digest.len().min(16)]);
    let target = out.join(&name);
    let staging = out.join(format!(".{name}.partial-{}", std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging)?;
    }
    fs::create_dir(&staging)?;
    for file in files {
        if file.name.contains('/') || file.name.starts_with('.') {
            return Err(HarnessError::Config(format!("bad artifact name {}", file.name)));
        }
        fs::write(staging.join(&file.name), &file.bytes)?;
    }
    if target.exists() {
        fs::remove_dir_all(&target)?;
    }
    fs::rename(&staging, &target)?;
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_key_order() {
        let a: serde_json::Value = serde_json::from_str(r#"{"a": 1, "b": [1, 2]}"#).unwrap();
        let b: serde_json::Value = serde_json::from_str(r#"{"b": [1, 2], "a": 1}"#).unwrap();
        assert_eq!(config_digest(&a), config_digest(&b));
        assert_eq!(config_digest(&a).len(), 64);
    }

    #[test]
    fn run_directory_is_replaced_whole() {
        let dir = tempfile::tempdir().unwrap();
        let digest = "0123456789abcdef0123";
        let first = write_run(dir.path(), "decay", digest, &[RunFile::new("a.csv", b"1".to_vec())]).unwrap();
        assert!(first.ends_with("decay-0123456789abcdef"));
        write_run(dir.path(), "decay", digest, &[RunFile::new("b.csv", b"2".to_vec())]).unwrap();
        assert!(!first.join("a.csv").exists());
        assert_eq!(fs::read(first.join("b.csv")).unwrap(), b"2");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(write_run(dir.path(), "x", digest, &[RunFile::new("../evil", vec![])]).is_err());
    }
}
