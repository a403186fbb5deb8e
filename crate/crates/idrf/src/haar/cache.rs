//! On-disk store for FWT input vectors, keyed by kernel, target, finest
//! level and precision. Corrupt or mismatched files are treated as cache
//! misses, never as errors.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"IDRFC01\0";

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Clone, Debug)]
pub struct CoefficientStore {
    dir: PathBuf,
}

impl CoefficientStore {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(CoefficientStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, kernel_id: &str, t: &[f64], z: u32, delta: f64) -> PathBuf {
        let mut key = Vec::new();
        key.extend_from_slice(kernel_id.as_bytes());
        key.push(0);
        for v in t {
            key.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        key.extend_from_slice(&z.to_le_bytes());
        key.extend_from_slice(&delta.to_bits().to_le_bytes());
        self.dir.join(format!("{:016x}.coef", fnv1a(&key)))
    }

    /// Best-effort load; any read problem or checksum mismatch is a miss.
    pub fn load(&self, kernel_id: &str, t: &[f64], z: u32, delta: f64) -> Option<Vec<f64>> {
        let path = self.path_for(kernel_id, t, z, delta);
        let mut bytes = Vec::new();
        fs::File::open(&path).ok()?.read_to_end(&mut bytes).ok()?;
        if bytes.len() < 8 + 8 + 8 || &bytes[..8] != MAGIC {
            return None;
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().ok()?) as usize;
        let payload_end = 16 + len.checked_mul(8)?;
        if bytes.len() != payload_end + 8 {
            return None;
        }
        let checksum = u64::from_le_bytes(bytes[payload_end..].try_into().ok()?);
        if fnv1a(&bytes[..payload_end]) != checksum {
            return None;
        }
        let mut out = Vec::with_capacity(len);
        for chunk in bytes[16..payload_end].chunks_exact(8) {
            out.push(f64::from_le_bytes(chunk.try_into().ok()?));
        }
        Some(out)
    }

    pub fn save(
        &self,
        kernel_id: &str,
        t: &[f64],
        z: u32,
        delta: f64,
        values: &[f64],
    ) -> Result<()> {
        let path = self.path_for(kernel_id, t, z, delta);
        let mut bytes = Vec::with_capacity(24 + values.len() * 8);
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let checksum = fnv1a(&bytes);
        bytes.extend_from_slice(&checksum.to_le_bytes());
        let tmp = path.with_extension("tmp");
        let write = || -> std::io::Result<()> {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
            fs::rename(&tmp, &path)
        };
        write().map_err(|e| Error::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_store(tag: &str) -> CoefficientStore {
        let dir = std::env::temp_dir().join(format!("idrf-store-test-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        CoefficientStore::new(dir).unwrap()
    }

    #[test]
    fn roundtrip() {
        let store = tmp_store("roundtrip");
        let t = [0.25, -0.5];
        let values = vec![1.0, -2.5, 0.0, f64::MIN_POSITIVE];
        store.save("pyramid-a1-b1", &t, 3, 1e-6, &values).unwrap();
        let back = store.load("pyramid-a1-b1", &t, 3, 1e-6).unwrap();
        assert_eq!(back, values);
        // different key parameters miss
        assert!(store.load("pyramid-a1-b1", &t, 4, 1e-6).is_none());
        assert!(store.load("pyramid-a1-b1", &t, 3, 1e-7).is_none());
        assert!(store.load("other", &t, 3, 1e-6).is_none());
    }

    #[test]
    fn corrupt_file_is_a_miss() {
        let store = tmp_store("corrupt");
        let t = [0.0];
        store.save("k", &t, 1, 1e-3, &[1.0, 2.0]).unwrap();
        let path = store.path_for("k", &t, 1, 1e-3);
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        fs::write(&path, &bytes).unwrap();
        assert!(store.load("k", &t, 1, 1e-3).is_none());
        // truncated file
        fs::write(&path, &bytes[..10]).unwrap();
        assert!(store.load("k", &t, 1, 1e-3).is_none());
        // wrong magic
        let mut ok = Vec::from(*b"BADMAGIC");
        ok.extend_from_slice(&2u64.to_le_bytes());
        fs::write(&path, &ok).unwrap();
        assert!(store.load("k", &t, 1, 1e-3).is_none());
    }
}
