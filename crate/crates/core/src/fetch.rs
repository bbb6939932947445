//! Download client for PDB-format entries with a local file cache.

use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use crate::error::{Error, Result};

pub const DEFAULT_BASE_URL: &str = "https://files.rcsb.org/download";
/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "RDCDYN_CACHE_DIR";

static CACHE_WRITE: Mutex<()> = Mutex::new(());

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub base_url: String,
    pub cache_dir: PathBuf,
    pub allow_network: bool,
    pub timeout: Duration,
}

impl Default for FetchConfig {
    fn default() -> Self {
        let cache_dir = std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("rdcdyn-pdb-cache"));
        Self {
            base_url: DEFAULT_BASE_URL.to_string(),
            cache_dir,
            allow_network: true,
            timeout: Duration::from_secs(30),
        }
    }
}

/// Four-character accession: a digit followed by three alphanumerics.
pub fn validate_accession(id: &str) -> Result<String> {
    let ok = id.len() == 4
        && id.chars().next().is_some_and(|c| c.is_ascii_digit())
        && id.chars().all(|c| c.is_ascii_alphanumeric());
    if ok {
        Ok(id.to_ascii_uppercase())
    } else {
        Err(Error::Validation(format!("{id:?} is not a 4-character PDB accession")))
    }
}

pub fn cache_path(cache_dir: &Path, id: &str) -> PathBuf {
    cache_dir.join(format!("{id}.pdb"))
}

/// Returns the PDB text for `id`, reading the cache first.
pub fn fetch_structure(id: &str, config: &FetchConfig) -> Result<String> {
    let id = validate_accession(id)?;
    let cached = cache_path(&config.cache_dir, &id);
    if let Ok(text) = std::fs::read_to_string(&cached) {
        log::debug!("cache hit for {id} at {}", cached.display());
        return Ok(text);
    }
    if !config.allow_network {
        return Err(Error::Offline(id));
    }
    let url = format!("{}/{}.pdb", config.base_url.trim_end_matches('/'), id);
    log::info!("downloading {url}");
    let client = reqwest::blocking::Client::builder()
        .timeout(config.timeout)
        .build()
        .map_err(|e| Error::Network(e.to_string()))?;
    let response = client.get(&url).send().map_err(|e| Error::Network(e.to_string()))?;
    let status = response.status();
    if status == reqwest::StatusCode::NOT_FOUND {
        return Err(Error::NotFound(id));
    }
    if !status.is_success() {
        return Err(Error::Network(format!("{url} returned HTTP {status}")));
    }
    let text = response.text().map_err(|e| Error::Network(e.to_string()))?;
    store(&config.cache_dir, &id, &text)?;
    Ok(text)
}

fn store(cache_dir: &Path, id: &str, text: &str) -> Result<()> {
    let _guard = CACHE_WRITE.lock().unwrap_or_else(|e| e.into_inner());
    std::fs::create_dir_all(cache_dir)?;
    let final_path = cache_path(cache_dir, id);
    let tmp = cache_dir.join(format!(".{id}.pdb.partial"));
    std::fs::write(&tmp, text)?;
    std::fs::rename(tmp, final_path)?;
    Ok(())
}
