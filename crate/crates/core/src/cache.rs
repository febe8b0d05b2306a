//! Memoisation of periodic classifications, in memory or on disk, keyed by a
//! content hash of everything that determines the run.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::periodic_solver::{ClassifySettings, LimitClassification};
use crate::profiles::{PeriodVector, PeriodicProfile};

/// Bumped whenever the numerics behind a classification change.
pub const CACHE_VERSION: u32 = 1;

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Serialize)]
struct KeyMaterial<'a> {
    version: u32,
    reaction: &'a crate::nonlinearity::ReactionKind,
    theta: f64,
    rho: f64,
    profile: &'a crate::profiles::ProfileSpec,
    xi: Vec<f64>,
    lambda: f64,
    n: usize,
    dt: Option<f64>,
    horizon: f64,
    fit_rate: bool,
}

/// Hex SHA-256 of the run parameters, with `ξ` and `λ` rounded to 1e−9.
pub fn classification_key(
    f: &Nonlinearity,
    v0: &PeriodicProfile,
    period: &PeriodVector,
    settings: &ClassifySettings,
) -> String {
    let material = KeyMaterial {
        version: CACHE_VERSION,
        reaction: f.kind(),
        theta: f.theta(),
        rho: f.rho(),
        profile: v0.spec(),
        xi: period.xi().iter().map(|&x| round9(x)).collect(),
        lambda: round9(period.lambda()),
        n: settings.n,
        dt: settings.dt,
        horizon: settings.physical_horizon,
        fit_rate: settings.fit_rate,
    };
    let bytes = serde_json::to_vec(&material).expect("key material serialises");
    let digest = Sha256::digest(&bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub trait ClassificationCache: Send + Sync {
    fn get(&self, key: &str) -> Option<LimitClassification>;
    fn put(&self, key: &str, value: &LimitClassification) -> Result<()>;
    fn hits(&self) -> usize;
}

#[derive(Default)]
pub struct MemoryCache {
    map: Mutex<HashMap<String, LimitClassification>>,
    hits: AtomicUsize,
}

impl MemoryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ClassificationCache for MemoryCache {
    fn get(&self, key: &str) -> Option<LimitClassification> {
        let hit = self.map.lock().unwrap().get(key).cloned();
        if hit.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        hit
    }

    fn put(&self, key: &str, value: &LimitClassification) -> Result<()> {
        self.map.lock().unwrap().insert(key.to_string(), value.clone());
        Ok(())
    }

    fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }
}

#[derive(Serialize, Deserialize)]
struct DiskEntry {
    version: u32,
    key: String,
    value: LimitClassification,
    /// Seconds since the Unix epoch at write time; informational only.
    #[serde(default)]
    written_at: u64,
}

/// One JSON file per key under a directory, fronted by a [`MemoryCache`].
/// Entries written by another cache version are ignored.
pub struct DiskCache {
    dir: PathBuf,
    memory: MemoryCache,
    lock: Mutex<()>,
}

impl DiskCache {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(DiskCache { dir, memory: MemoryCache::new(), lock: Mutex::new(()) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }
}

impl ClassificationCache for DiskCache {
    fn get(&self, key: &str) -> Option<LimitClassification> {
        if let Some(v) = self.memory.get(key) {
            return Some(v);
        }
        let _guard = self.lock.lock().unwrap();
        let text = fs::read_to_string(self.path(key)).ok()?;
        let entry: DiskEntry = serde_json::from_str(&text).ok()?;
        if entry.version != CACHE_VERSION || entry.key != key {
            return None;
        }
        self.memory.hits.fetch_add(1, Ordering::Relaxed);
        self.memory.map.lock().unwrap().insert(key.to_string(), entry.value.clone());
        Some(entry.value)
    }

    fn put(&self, key: &str, value: &LimitClassification) -> Result<()> {
        self.memory.put(key, value)?;
        let written_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let entry = DiskEntry { version: CACHE_VERSION, key: key.to_string(), value: value.clone(), written_at };
        let text = serde_json::to_string_pretty(&entry).map_err(|e| Error::Cache(e.to_string()))?;
        let _guard = self.lock.lock().unwrap();
        let tmp = self.dir.join(format!("{key}.tmp"));
        fs::write(&tmp, text)?;
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }

    fn hits(&self) -> usize {
        self.memory.hits()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic_solver::{Certificate, LimitOutcome};
    use crate::profiles::ProfileSpec;

    fn sample() -> LimitClassification {
        LimitClassification {
            outcome: LimitOutcome::ConvergedToConstant { value: 0.3 },
            certificate: Certificate::MaxBelowTheta { t: 1.5, max: 0.39, mean: 0.3 },
            rate: None,
            lambda: 2.0,
            dt: 1e-5,
            clamp_max: 0.0,
            lyapunov_max_increase: 0.0,
        }
    }

    #[test]
    fn key_ignores_sub_nano_lambda_changes() {
        let f = Nonlinearity::power(1.0, 1.0, 0.4, 0.1).unwrap();
        let p = PeriodicProfile::new(ProfileSpec::stripe(2, 0.4)).unwrap();
        let s = ClassifySettings::default();
        let xi = vec![0.6, 0.8];
        let a = classification_key(&f, &p, &PeriodVector::new(xi.clone(), 2.0).unwrap(), &s);
        let b = classification_key(&f, &p, &PeriodVector::new(xi.clone(), 2.0 + 1e-12).unwrap(), &s);
        let c = classification_key(&f, &p, &PeriodVector::new(xi, 2.001).unwrap(), &s);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn disk_round_trip_and_hits() {
        let dir = tempfile::tempdir().unwrap();
        {
            let c = DiskCache::open(dir.path()).unwrap();
            assert!(c.get("k").is_none());
            c.put("k", &sample()).unwrap();
        }
        let c = DiskCache::open(dir.path()).unwrap();
        assert_eq!(c.get("k"), Some(sample()));
        assert_eq!(c.get("k"), Some(sample()));
        assert_eq!(c.hits(), 2);
    }

    #[test]
    fn stale_version_is_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let entry = serde_json::json!({"version": CACHE_VERSION + 1, "key": "k", "value": sample()});
        fs::write(dir.path().join("k.json"), entry.to_string()).unwrap();
        let c = DiskCache::open(dir.path()).unwrap();
        assert!(c.get("k").is_none());
    }
}
