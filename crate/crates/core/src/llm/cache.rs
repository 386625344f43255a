use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use sha2::{Digest, Sha256};

use super::{complete, Backend, CompletionRequest};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

const DIGEST_PREFIX: &str = "sha256:";

/// Hex SHA-256 over model name, temperature and prompt.
pub fn cache_key(req: &CompletionRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(req.model.as_bytes());
    hasher.update([0]);
    hasher.update(format!("{:?}", req.temperature).as_bytes());
    hasher.update([0]);
    hasher.update(req.prompt.as_bytes());
    hex::encode(hasher.finalize())
}

fn body_digest(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

/// One text file per request under a directory. Each file starts with a
/// digest line of its body; an entry whose digest does not match is
/// treated as missing.
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ResponseCache {
            dir,
            locks: Mutex::new(HashMap::new()),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, req: &CompletionRequest) -> PathBuf {
        self.dir.join(format!("{}.txt", cache_key(req)))
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::SeqCst)
    }

    fn read(&self, path: &Path) -> Option<String> {
        let text = fs::read_to_string(path).ok()?;
        let (header, body) = text.split_once('\n')?;
        let digest = header.strip_prefix(DIGEST_PREFIX)?;
        (digest == body_digest(body)).then(|| body.to_string())
    }

    /// Stored completion for `req`, or a fresh one from `backend` that is
    /// then stored. Concurrent callers with the same key are serialized so
    /// the backend sees the request once.
    pub fn complete(&self, backend: &dyn Backend, req: &CompletionRequest) -> Result<String> {
        let key = cache_key(req);
        let lock = self.locks.lock().unwrap().entry(key.clone()).or_default().clone();
        let _guard = lock.lock().unwrap();

        let path = self.dir.join(format!("{key}.txt"));
        if let Some(body) = self.read(&path) {
            self.hits.fetch_add(1, Ordering::SeqCst);
            return Ok(body);
        }
        self.misses.fetch_add(1, Ordering::SeqCst);
        let body = complete(backend, req)?;
        let entry = format!("{DIGEST_PREFIX}{}\n{body}", body_digest(&body));
        write_atomic(&path, entry.as_bytes())?;
        Ok(body)
    }
}

/// One-off cached completion against `cache_dir`.
pub fn cached_complete(
    cache_dir: impl Into<PathBuf>,
    backend: &dyn Backend,
    req: &CompletionRequest,
) -> Result<String> {
    ResponseCache::new(cache_dir)?.complete(backend, req)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{Counting, EchoMock};

    fn req(model: &str, prompt: &str) -> CompletionRequest {
        CompletionRequest::new(model, prompt)
    }

    #[test]
    fn identical_requests_hit_backend_once() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let backend = Counting::new(EchoMock);
        let r = req("m", "Choices: a; b\nAnswer:");
        assert_eq!(cache.complete(&backend, &r).unwrap(), "a; b");
        assert_eq!(cache.complete(&backend, &r).unwrap(), "a; b");
        assert_eq!(backend.calls(), 1);
        assert_eq!((cache.hits(), cache.misses()), (1, 1));
    }

    #[test]
    fn key_covers_model_and_temperature() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let backend = Counting::new(EchoMock);
        let a = req("model-a", "Choices: x\nAnswer:");
        let b = req("model-b", "Choices: x\nAnswer:");
        let warm = CompletionRequest {
            temperature: 0.7,
            ..a.clone()
        };
        for r in [&a, &b, &warm] {
            cache.complete(&backend, r).unwrap();
        }
        assert_eq!(backend.calls(), 3);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 3);
        assert_ne!(cache_key(&a), cache_key(&b));
    }

    #[test]
    fn cleared_cache_calls_again() {
        let dir = tempfile::tempdir().unwrap();
        let backend = Counting::new(EchoMock);
        let r = req("m", "Choices: x\nAnswer:");
        cached_complete(dir.path().join("c"), &backend, &r).unwrap();
        fs::remove_dir_all(dir.path().join("c")).unwrap();
        cached_complete(dir.path().join("c"), &backend, &r).unwrap();
        assert_eq!(backend.calls(), 2);
    }

    #[test]
    fn corrupted_entry_is_a_miss_and_gets_rewritten() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let backend = Counting::new(EchoMock);
        let r = req("m", "Choices: x; y\nAnswer:");
        cache.complete(&backend, &r).unwrap();
        let path = cache.path_for(&r);
        for junk in ["sha256:deadbeef\nx; y", "garbage without header", ""] {
            fs::write(&path, junk).unwrap();
            assert_eq!(cache.complete(&backend, &r).unwrap(), "x; y");
        }
        assert_eq!(backend.calls(), 4);
        assert_eq!(cache.complete(&backend, &r).unwrap(), "x; y");
        assert_eq!(backend.calls(), 4);
    }

    #[test]
    fn concurrent_same_key_calls_once() {
        let dir = tempfile::tempdir().unwrap();
        let cache = ResponseCache::new(dir.path()).unwrap();
        let backend = Counting::new(EchoMock);
        let r = req("m", "Choices: p; q\nAnswer:");
        std::thread::scope(|s| {
            for _ in 0..8 {
                s.spawn(|| assert_eq!(cache.complete(&backend, &r).unwrap(), "p; q"));
            }
        });
        assert_eq!(backend.calls(), 1);
    }
}
