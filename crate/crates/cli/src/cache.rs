//! On-disk cache under `<dir>/<poly-hash>/`.
//!
//! Entries are advisory: a missing, unreadable or corrupt entry is
//! recomputed, and write failures only produce a warning.

use std::fs;
use std::path::{Path, PathBuf};

use circlekit::counting::MangoldtTable;
use circlekit::localdensity::{NuStrategy, SeriesEstimate};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    pub fn new(root: Option<&Path>, poly_hash: &str) -> Self {
        Cache {
            dir: root.map(|r| r.join(poly_hash)),
        }
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(name))
    }

    fn store(&self, name: &str, bytes: &[u8]) {
        let Some(path) = self.path(name) else {
            return;
        };
        let write = || -> std::io::Result<()> {
            fs::create_dir_all(path.parent().unwrap())?;
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, bytes)?;
            fs::rename(&tmp, &path)
        };
        if let Err(e) = write() {
            eprintln!("warning: could not write cache entry {}: {e}", path.display());
        }
    }

    fn load_json<T: DeserializeOwned>(&self, name: &str) -> Option<T> {
        let bytes = fs::read(self.path(name)?).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    fn store_json<T: Serialize>(&self, name: &str, value: &T) {
        if let Ok(bytes) = serde_json::to_vec(value) {
            self.store(name, &bytes);
        }
    }

    pub fn mangoldt(&self, n: u64) -> circlekit::Result<MangoldtTable> {
        let name = format!("mangoldt-{n}.bin");
        if let Some(t) = self
            .path(&name)
            .and_then(|p| fs::read(p).ok())
            .and_then(|b| MangoldtTable::from_bytes(&b).ok())
            .filter(|t| t.bound() == n && !t.is_primes_only())
        {
            return Ok(t);
        }
        let t = MangoldtTable::new(n)?;
        self.store(&name, &t.to_bytes());
        Ok(t)
    }

    pub fn series(
        &self,
        prime_bound: u64,
        t_max: u32,
        strategy: NuStrategy,
        compute: impl FnOnce() -> circlekit::Result<SeriesEstimate>,
    ) -> circlekit::Result<SeriesEstimate> {
        let tag = serde_json::to_value(strategy)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let name = format!("localfactors-P{prime_bound}-t{t_max}-{tag}.json");
        if let Some(s) = self.load_json::<SeriesEstimate>(&name) {
            if s.prime_bound == prime_bound && s.t_max == t_max {
                return Ok(s);
            }
        }
        let s = compute()?;
        self.store_json(&name, &s);
        Ok(s)
    }
}
