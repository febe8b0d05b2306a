use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiments::Failure;
use crate::output::OutputFile;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub enabled: bool,
    pub lookups: usize,
    pub hits: usize,
    /// Classifications actually simulated.
    pub simulations: usize,
}

/// Everything needed to reproduce a run: the resolved configuration,
/// the tolerances in force and the hashes of every emitted file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub config: ExperimentConfig,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<OutputFile>,
    pub cache: CacheStats,
    pub failures: Vec<Failure>,
    pub jobs: usize,
    pub seedless: bool,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut b = serde_json::to_vec_pretty(self).expect("manifest serialises");
        b.push(b'\n');
        std::fs::write(dir.join(MANIFEST_FILE), b)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        m.config.validate()?;
        Ok(m)
    }

    /// Files whose hash differs between `self` and `other`, or that only
    /// one of them lists.
    pub fn differences(&self, other: &Manifest) -> Vec<String> {
        let a: BTreeMap<_, _> = self.outputs.iter().map(|o| (&o.file, &o.sha256)).collect();
        let b: BTreeMap<_, _> = other.outputs.iter().map(|o| (&o.file, &o.sha256)).collect();
        let mut out: Vec<String> = a.iter().filter(|(k, v)| b.get(*k) != Some(*v)).map(|(k, _)| (*k).clone()).collect();
        out.extend(b.keys().filter(|k| !a.contains_key(*k)).map(|k| (*k).clone()));
        out
    }
}
