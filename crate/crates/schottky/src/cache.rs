//! On-disk cache for the per-length factors `g_n`.
//!
//! One file per `(p, m, n)`, holding the series at the highest precision
//! computed so far plus a content hash; higher-precision reruns reuse and
//! truncate, corrupted or stale files are detected by the hash and silently
//! recomputed.

use crate::field::{FieldDescriptor, FqElement};
use crate::series::LaurentSeries;
use crate::textform::{series_from_json_fq, series_to_json_fq, SeriesJson};
use crate::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

/// Bumped when the factor computation changes meaning; stale entries are
/// then recomputed rather than trusted.
const CODE_VERSION: &str = "1";

#[derive(Serialize, Deserialize, PartialEq, Eq, Debug)]
struct CacheKey {
    p: u64,
    m: u32,
    n: usize,
    precision: i64,
    version: String,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    key: CacheKey,
    sha256: String,
    series: SeriesJson,
}

fn series_hash(series: &SeriesJson, key: &CacheKey) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(key).expect("key serializes").as_bytes());
    hasher.update(serde_json::to_string(series).expect("series serializes").as_bytes());
    format!("{:x}", hasher.finalize())
}

/// A directory of cached `g_n` series.
pub struct SeriesCache {
    dir: PathBuf,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl SeriesCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(SeriesCache {
            dir: dir.as_ref().to_path_buf(),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    fn path_for(&self, field: &FieldDescriptor, n: usize) -> PathBuf {
        self.dir.join(format!("g_p{}_m{}_n{}.json", field.p(), field.m(), n))
    }

    /// Fetch `g_n` if a valid entry with at least `min_prec` exists;
    /// truncates to the requested precision.
    pub fn load_gn(
        &self,
        field: &Arc<FieldDescriptor>,
        n: usize,
        min_prec: i64,
    ) -> Option<LaurentSeries<FqElement>> {
        let path = self.path_for(field, n);
        let text = std::fs::read_to_string(&path).ok()?;
        let file: CacheFile = match serde_json::from_str(&text) {
            Ok(f) => f,
            Err(_) => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                return None;
            }
        };
        let key_ok = file.key.p == field.p()
            && file.key.m == field.m()
            && file.key.n == n
            && file.key.version == CODE_VERSION
            && file.key.precision >= min_prec;
        if !key_ok || series_hash(&file.series, &file.key) != file.sha256 {
            self.misses.fetch_add(1, Ordering::Relaxed);
            return None;
        }
        match series_from_json_fq(&file.series) {
            Ok(series) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(series.truncate(min_prec))
            }
            Err(_) => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    /// Persist `g_n`, superseding lower-precision entries.
    pub fn store_gn(
        &self,
        field: &Arc<FieldDescriptor>,
        n: usize,
        series: &LaurentSeries<FqElement>,
    ) -> Result<()> {
        // Keep the better entry if one is already present.
        if let Some(existing) = self.load_gn(field, n, series.precision()) {
            let _ = existing;
            return Ok(());
        }
        let json = series_to_json_fq(series);
        let key = CacheKey {
            p: field.p(),
            m: field.m(),
            n,
            precision: series.precision(),
            version: CODE_VERSION.to_string(),
        };
        let sha256 = series_hash(&json, &key);
        let file = CacheFile { key, sha256, series: json };
        let path = self.path_for(field, n);
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, serde_json::to_string_pretty(&file)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }
}

impl From<serde_json::Error> for crate::Error {
    fn from(e: serde_json::Error) -> Self {
        crate::Error::Cache(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::fq_make;

    fn sample_series(prec: i64) -> LaurentSeries<FqElement> {
        let f3 = fq_make(3, 1).unwrap();
        let coeffs: Vec<FqElement> = (0..prec + 2).map(|k| f3.from_int(k % 3)).collect();
        LaurentSeries::from_coeffs("t", -2, coeffs, prec)
    }

    #[test]
    fn roundtrip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SeriesCache::new(dir.path()).unwrap();
        let f3 = fq_make(3, 1).unwrap();
        let s = sample_series(12);
        cache.store_gn(&f3, 3, &s).unwrap();
        let loaded = cache.load_gn(&f3, 3, 12).unwrap();
        assert_eq!(loaded, s);
        // A lower-precision request reuses the entry, truncated.
        let truncated = cache.load_gn(&f3, 3, 8).unwrap();
        assert_eq!(truncated, s.truncate(8));
        // A higher-precision request misses.
        assert!(cache.load_gn(&f3, 3, 20).is_none());
        assert_eq!(cache.hits(), 2);
    }

    #[test]
    fn corruption_detected_by_hash() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SeriesCache::new(dir.path()).unwrap();
        let f3 = fq_make(3, 1).unwrap();
        let s = sample_series(10);
        cache.store_gn(&f3, 1, &s).unwrap();
        let path = dir.path().join("g_p3_m1_n1.json");
        let text = std::fs::read_to_string(&path).unwrap();
        // Flip one coefficient inside the payload.
        let corrupted = text.replacen("\"1\"", "\"2\"", 1);
        assert_ne!(text, corrupted);
        std::fs::write(&path, corrupted).unwrap();
        assert!(cache.load_gn(&f3, 1, 10).is_none());
        assert!(cache.misses() >= 1);
    }

    #[test]
    fn store_keeps_higher_precision_entry() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SeriesCache::new(dir.path()).unwrap();
        let f3 = fq_make(3, 1).unwrap();
        cache.store_gn(&f3, 2, &sample_series(16)).unwrap();
        // Storing a lower-precision version must not clobber the better one.
        cache.store_gn(&f3, 2, &sample_series(8)).unwrap();
        assert!(cache.load_gn(&f3, 2, 16).is_some());
    }
}
