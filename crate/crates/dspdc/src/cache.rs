//! On-disk cache of certified reference solutions.
//!
//! Entries are keyed by a SHA-256 digest of the problem's provenance and
//! contents. Concurrent sweeps serialize on a per-key advisory lock, so each
//! reference is certified once.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use dspdc_core::metrics::certify_reference;
use dspdc_core::{GeneratedProblem, ReferenceSolution};
use sha2::{Digest, Sha256};

use crate::error::{io_err, json_err, Result};
use crate::formats::{read_reference, write_json_atomic, ReferenceDocument, FORMAT_VERSION, REFERENCE_FORMAT};

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "DSPDC_REFERENCE_CACHE";

/// Where a reference came from on this call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    ClosedForm,
    CacheHit,
    Certified,
}

#[derive(Debug, Clone)]
pub struct ReferenceCache {
    dir: PathBuf,
}

pub fn problem_key(g: &GeneratedProblem) -> Result<String> {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(&g.provenance).map_err(json_err("provenance"))?);
    h.update([0u8]);
    h.update(serde_json::to_vec(&g.problem).map_err(json_err("problem"))?);
    Ok(format!("{:x}", h.finalize()))
}

impl ReferenceCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(ReferenceCache { dir })
    }

    /// The cache named by [`CACHE_ENV`], if set.
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var_os(CACHE_ENV) {
            Some(d) if !d.is_empty() => Ok(Some(Self::new(PathBuf::from(d))?)),
            _ => Ok(None),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Cached reference for `g`, certifying and storing it on a miss.
    pub fn get_or_certify(&self, g: &GeneratedProblem, budget: u64) -> Result<(ReferenceSolution, Origin)> {
        let key = problem_key(g)?;
        let lock_path = self.dir.join(format!("{key}.lock"));
        let lock = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&lock_path)
            .map_err(io_err(&lock_path))?;
        lock.lock().map_err(io_err(&lock_path))?;
        let path = self.entry_path(&key);
        if path.exists() {
            let doc = read_reference(&path)?;
            return Ok((doc.reference, Origin::CacheHit));
        }
        let reference = certify_reference(&g.problem, None, budget)?;
        let doc = ReferenceDocument {
            format: REFERENCE_FORMAT.into(),
            version: FORMAT_VERSION,
            key,
            provenance: g.provenance.clone(),
            reference,
        };
        write_json_atomic(&path, &doc)?;
        log::info!("cached reference at {}", path.display());
        Ok((doc.reference, Origin::Certified))
        // the lock is released when `lock` drops
    }
}

/// Closed form when the problem has one, else the cache (when given), else a
/// fresh certification.
pub fn resolve_reference(
    g: &GeneratedProblem,
    cache: Option<&ReferenceCache>,
    budget: u64,
) -> Result<(ReferenceSolution, Origin)> {
    if let Some(r) = &g.closed_form {
        return Ok((r.clone(), Origin::ClosedForm));
    }
    match cache {
        Some(c) => c.get_or_certify(g, budget),
        None => Ok((certify_reference(&g.problem, None, budget)?, Origin::Certified)),
    }
}
