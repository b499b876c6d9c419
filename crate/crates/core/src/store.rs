//! Content-addressed result cache.
//!
//! Records are JSON files named by the SHA-256 of a tag and the canonical JSON
//! of everything the result depends on. A record is written once, atomically,
//! and never modified afterwards.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Environment variable that overrides the cache directory.
pub const CACHE_ENV: &str = "STA_COOL_CACHE";

#[derive(Debug)]
pub struct ResultStore {
    root: PathBuf,
    writes: Mutex<()>,
}

impl ResultStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        Ok(Self {
            root,
            writes: Mutex::new(()),
        })
    }

    /// Opens the directory named by [`CACHE_ENV`] if set, else `default`.
    pub fn from_env(default: impl AsRef<Path>) -> Result<Self> {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => Self::open(dir),
            _ => Self::open(default),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Hex digest identifying `(tag, value)`.
    pub fn key<K: Serialize + ?Sized>(tag: &str, value: &K) -> Result<String> {
        let mut h = Sha256::new();
        h.update(tag.as_bytes());
        h.update([0u8]);
        h.update(serde_json::to_vec(value)?);
        Ok(hex::encode(h.finalize()))
    }

    fn path(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match fs::read(self.path(key)) {
            Ok(bytes) => Ok(Some(serde_json::from_slice(&bytes)?)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Stores `value` under `key` unless a record already exists.
    pub fn put<T: Serialize + ?Sized>(&self, key: &str, value: &T) -> Result<()> {
        let bytes = serde_json::to_vec(value)?;
        let path = self.path(key);
        let _guard = self.writes.lock().unwrap_or_else(|e| e.into_inner());
        if path.exists() {
            return Ok(());
        }
        let dir = path.parent().expect("record paths have a parent");
        fs::create_dir_all(dir)?;
        let tmp = dir.join(format!(".{key}.{}.tmp", std::process::id()));
        let mut f = fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Returns the cached record for `(tag, inputs)` or computes and stores it.
    pub fn get_or_compute<K, T, F>(&self, tag: &str, inputs: &K, compute: F) -> Result<T>
    where
        K: Serialize + ?Sized,
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let key = Self::key(tag, inputs)?;
        if let Some(v) = self.get(&key)? {
            return Ok(v);
        }
        let v = compute()?;
        self.put(&key, &v)?;
        Ok(v)
    }
}

/// Uses `store` when present, otherwise just computes.
pub fn cached<K, T, F>(store: Option<&ResultStore>, tag: &str, inputs: &K, compute: F) -> Result<T>
where
    K: Serialize + ?Sized,
    T: Serialize + DeserializeOwned,
    F: FnOnce() -> Result<T>,
{
    match store {
        Some(s) => s.get_or_compute(tag, inputs, compute),
        None => compute(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_immutability() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResultStore::open(dir.path()).unwrap();
        let key = ResultStore::key("demo", &(1, 2.5)).unwrap();
        assert_eq!(store.get::<Vec<f64>>(&key).unwrap(), None);
        store.put(&key, &vec![1.0, 2.0]).unwrap();
        store.put(&key, &vec![3.0]).unwrap();
        assert_eq!(store.get::<Vec<f64>>(&key).unwrap(), Some(vec![1.0, 2.0]));
    }

    #[test]
    fn keys_depend_on_tag_and_inputs() {
        let a = ResultStore::key("x", &1.0).unwrap();
        assert_eq!(a, ResultStore::key("x", &1.0).unwrap());
        assert_ne!(a, ResultStore::key("y", &1.0).unwrap());
        assert_ne!(a, ResultStore::key("x", &1.000_000_000_000_1).unwrap());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn compute_runs_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResultStore::open(dir.path()).unwrap();
        let mut calls = 0;
        for _ in 0..3 {
            let v: f64 = store
                .get_or_compute("sq", &3.0, || {
                    calls += 1;
                    Ok(9.0)
                })
                .unwrap();
            assert_eq!(v, 9.0);
        }
        assert_eq!(calls, 1);
    }
}
