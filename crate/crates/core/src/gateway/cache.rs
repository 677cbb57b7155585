use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DecodeParams, Usage};
use crate::error::{Error, Result};
use crate::seed::sha256_hex;

/// Content address of one generated sample.
pub fn cache_key(
    model_name: &str,
    template_hash: &str,
    image_hashes: &[&str],
    decode: &DecodeParams,
    sample_index: u32,
) -> String {
    let mut buf = String::new();
    let mut field = |name: &str, value: &str| {
        buf.push_str(name);
        buf.push('=');
        buf.push_str(&value.len().to_string());
        buf.push(':');
        buf.push_str(value);
        buf.push('\n');
    };
    field("model", model_name);
    field("template", template_hash);
    field("images", &image_hashes.join(","));
    field("temperature", &format!("{:?}", decode.temperature));
    field("max_new_tokens", &decode.max_new_tokens.to_string());
    field(
        "seed",
        &decode.seed.map(|s| s.to_string()).unwrap_or_default(),
    );
    field("sample_index", &sample_index.to_string());
    sha256_hex(buf.as_bytes())
}

/// Stored response envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub text: String,
    #[serde(default)]
    pub finish_reason: Option<String>,
    #[serde(default)]
    pub usage: Usage,
}

/// One JSON file per key under `{dir}/{first two hex chars}/{key}.json`.
/// Writes go through a temporary file and an atomic rename, so concurrent
/// readers never observe partial entries.
#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DiskCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        let prefix = key.get(..2).unwrap_or(key);
        self.dir.join(prefix).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Result<Option<CacheEntry>> {
        let path = self.path_for(key);
        match std::fs::read_to_string(&path) {
            Ok(text) => match serde_json::from_str::<CacheEntry>(&text) {
                Ok(e) if e.key == key => Ok(Some(e)),
                // A foreign or corrupt entry is treated as a miss and overwritten.
                _ => Ok(None),
            },
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn put(&self, entry: &CacheEntry) -> Result<()> {
        let path = self.path_for(&entry.key);
        let parent = path.parent().expect("cache path has a parent");
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| Error::io(parent, e))?;
        serde_json::to_writer(&mut tmp, entry)?;
        tmp.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }
}
