use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::cache::{cache_key, CacheEntry, DiskCache};
use super::http::{
    parse_completion, request_body, send_with_retry, Choice, Transport, UreqTransport,
};
use super::image::{prepare_image, ResizeMode};
use super::mock::{mock_complete, MockBehavior, TruthOracle};
use super::{DecodeParams, ModelEndpoint, RawResponse, Usage};
use crate::error::{Error, Result};
use crate::prompting::{CoordScale, RenderedPrompt};
use crate::seed::{derive_seed, sha256_hex};

pub enum Backend {
    Http {
        endpoint: ModelEndpoint,
        transport: Arc<dyn Transport>,
        resize: ResizeMode,
        image_root: PathBuf,
    },
    Mock {
        behavior: MockBehavior,
        oracle: Arc<TruthOracle>,
        scale: CoordScale,
    },
}

impl Backend {
    pub fn http(
        endpoint: ModelEndpoint,
        resize: ResizeMode,
        image_root: impl Into<PathBuf>,
    ) -> Self {
        let transport = Arc::new(UreqTransport::new(Duration::from_secs(
            endpoint.timeout_seconds,
        )));
        Backend::Http {
            endpoint,
            transport,
            resize,
            image_root: image_root.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GatewayStats {
    /// Backend calls that produced responses (HTTP requests or mock calls).
    pub requests: u64,
    /// HTTP attempts including retries.
    pub attempts: u64,
    pub cache_hits: u64,
    /// Responses cut off by the token limit.
    pub truncated: u64,
}

#[derive(Default)]
struct Counters {
    requests: AtomicU64,
    attempts: AtomicU64,
    cache_hits: AtomicU64,
    truncated: AtomicU64,
}

/// Prepared image plus the hash that identifies it in cache keys.
struct ImageEntry {
    key_hash: String,
    uri: String,
}

pub struct Gateway {
    backend: Backend,
    cache: Option<DiskCache>,
    images: Mutex<HashMap<String, Arc<ImageEntry>>>,
    counters: Counters,
}

impl Gateway {
    pub fn new(backend: Backend, cache: Option<DiskCache>) -> Self {
        Gateway {
            backend,
            cache,
            images: Mutex::new(HashMap::new()),
            counters: Counters::default(),
        }
    }

    /// Model identity used in cache keys and fingerprints.
    pub fn model_name(&self) -> String {
        match &self.backend {
            Backend::Http { endpoint, .. } => endpoint.model_name.clone(),
            Backend::Mock {
                behavior, scale, ..
            } => format!("mock:{behavior}:{scale}"),
        }
    }

    pub fn max_parallel(&self) -> usize {
        match &self.backend {
            Backend::Http { endpoint, .. } => endpoint.max_parallel_requests.max(1),
            Backend::Mock { .. } => 1,
        }
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            requests: self.counters.requests.load(Ordering::Relaxed),
            attempts: self.counters.attempts.load(Ordering::Relaxed),
            cache_hits: self.counters.cache_hits.load(Ordering::Relaxed),
            truncated: self.counters.truncated.load(Ordering::Relaxed),
        }
    }

    fn image(&self, r: &str) -> Result<Arc<ImageEntry>> {
        if let Some(e) = self.images.lock().expect("image map poisoned").get(r) {
            return Ok(e.clone());
        }
        let entry = match &self.backend {
            Backend::Mock { .. } => ImageEntry {
                key_hash: sha256_hex(r.as_bytes()),
                uri: String::new(),
            },
            Backend::Http {
                resize, image_root, ..
            } => {
                if r.starts_with("http://") || r.starts_with("https://") || r.starts_with("data:") {
                    ImageEntry {
                        key_hash: sha256_hex(r.as_bytes()),
                        uri: r.to_string(),
                    }
                } else {
                    let path = image_root.join(r);
                    let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
                    let prepared = prepare_image(&bytes, *resize)?;
                    ImageEntry {
                        key_hash: sha256_hex(
                            format!("{}|{resize}", prepared.source_hash).as_bytes(),
                        ),
                        uri: prepared.data_uri(),
                    }
                }
            }
        };
        let entry = Arc::new(entry);
        self.images
            .lock()
            .expect("image map poisoned")
            .insert(r.to_string(), entry.clone());
        Ok(entry)
    }

    /// Cache keys for samples `0..n_samples` of a prompt.
    pub fn keys(&self, prompt: &RenderedPrompt, decode: &DecodeParams) -> Result<Vec<String>> {
        let images = prompt
            .image_refs()
            .into_iter()
            .map(|r| self.image(r))
            .collect::<Result<Vec<_>>>()?;
        let hashes: Vec<&str> = images.iter().map(|e| e.key_hash.as_str()).collect();
        let model = self.model_name();
        Ok((0..decode.n_samples)
            .map(|i| cache_key(&model, &prompt.template_hash, &hashes, decode, i))
            .collect())
    }

    /// Returns `decode.n_samples` responses in sample-index order, serving
    /// cached samples from disk and requesting only the missing ones.
    pub fn complete(
        &self,
        sample_id: &str,
        prompt: &RenderedPrompt,
        decode: &DecodeParams,
    ) -> Result<Vec<RawResponse>> {
        decode.validate()?;
        let keys = self.keys(prompt, decode)?;
        let mut out: Vec<Option<RawResponse>> = vec![None; keys.len()];
        if let Some(cache) = &self.cache {
            for (i, key) in keys.iter().enumerate() {
                if let Some(e) = cache.get(key)? {
                    self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
                    out[i] = Some(RawResponse {
                        text: e.text,
                        finish_reason: e.finish_reason,
                        usage: e.usage,
                        latency_ms: 0,
                        from_cache: true,
                        request_fingerprint: key.clone(),
                        sample_index: i as u32,
                        attempts: Vec::new(),
                    });
                }
            }
        }
        let missing: Vec<u32> = (0..keys.len() as u32)
            .filter(|&i| out[i as usize].is_none())
            .collect();
        if !missing.is_empty() {
            let fresh = self.request(sample_id, prompt, decode, &missing, &keys)?;
            for r in fresh {
                if r.truncated() {
                    self.counters.truncated.fetch_add(1, Ordering::Relaxed);
                }
                if let Some(cache) = &self.cache {
                    cache.put(&CacheEntry {
                        key: r.request_fingerprint.clone(),
                        text: r.text.clone(),
                        finish_reason: r.finish_reason.clone(),
                        usage: r.usage,
                    })?;
                }
                let i = r.sample_index as usize;
                out[i] = Some(r);
            }
        }
        Ok(out
            .into_iter()
            .map(|r| r.expect("every sample index is filled"))
            .collect())
    }

    fn request(
        &self,
        sample_id: &str,
        prompt: &RenderedPrompt,
        decode: &DecodeParams,
        missing: &[u32],
        keys: &[String],
    ) -> Result<Vec<RawResponse>> {
        let run_seed = decode.seed.unwrap_or(0);
        let sample_seed = |i: u32| derive_seed(run_seed, &[sample_id, &i.to_string()]);
        match &self.backend {
            Backend::Mock {
                behavior,
                oracle,
                scale,
            } => missing
                .iter()
                .map(|&i| {
                    self.counters.requests.fetch_add(1, Ordering::Relaxed);
                    let text = mock_complete(oracle, sample_id, *behavior, *scale, run_seed, i)?;
                    Ok(RawResponse {
                        text,
                        finish_reason: Some("stop".into()),
                        usage: Usage::default(),
                        latency_ms: 0,
                        from_cache: false,
                        request_fingerprint: keys[i as usize].clone(),
                        sample_index: i,
                        attempts: Vec::new(),
                    })
                })
                .collect(),
            Backend::Http {
                endpoint,
                transport,
                ..
            } => {
                let token = match &endpoint.auth_token_env {
                    Some(var) => {
                        Some(std::env::var(var).map_err(|_| Error::MissingAuthToken(var.clone()))?)
                    }
                    None => None,
                };
                let mut uris = HashMap::new();
                for r in prompt.image_refs() {
                    uris.insert(r.to_string(), self.image(r)?.uri.clone());
                }
                let url = endpoint.completions_url();
                let send = |n: u32, seed: Option<u64>| -> Result<(Vec<Choice>, Usage, u64, Vec<super::AttemptRecord>)> {
                    let body = request_body(&endpoint.model_name, prompt, &uris, decode, n, seed)?;
                    let started = Instant::now();
                    let (reply, log) =
                        send_with_retry(transport.as_ref(), &url, token.as_deref(), &body, &endpoint.retry)
                            .inspect_err(|e| {
                                if let Error::Transport { attempts, .. } = e {
                                    self.counters
                                        .attempts
                                        .fetch_add(attempts.len() as u64, Ordering::Relaxed);
                                }
                            })?;
                    self.counters.attempts.fetch_add(log.len() as u64, Ordering::Relaxed);
                    self.counters.requests.fetch_add(1, Ordering::Relaxed);
                    let (choices, usage) = parse_completion(&reply.body)?;
                    Ok((choices, usage, started.elapsed().as_millis() as u64, log))
                };
                let batched =
                    endpoint.supports_n && missing.len() > 1 && missing.len() == keys.len();
                let mut out = Vec::with_capacity(missing.len());
                if batched {
                    let seed = endpoint.send_seed.then(|| sample_seed(0));
                    let (choices, usage, latency_ms, log) = send(missing.len() as u32, seed)?;
                    if choices.len() < missing.len() {
                        return Err(Error::Http {
                            status: 200,
                            body: format!(
                                "asked for {} choices, got {}",
                                missing.len(),
                                choices.len()
                            ),
                        });
                    }
                    for (&i, c) in missing.iter().zip(choices) {
                        out.push(RawResponse {
                            text: c.text,
                            finish_reason: c.finish_reason,
                            usage,
                            latency_ms,
                            from_cache: false,
                            request_fingerprint: keys[i as usize].clone(),
                            sample_index: i,
                            attempts: log.clone(),
                        });
                    }
                } else {
                    for &i in missing {
                        let seed = endpoint.send_seed.then(|| sample_seed(i));
                        let (choices, usage, latency_ms, log) = send(1, seed)?;
                        let c = choices.into_iter().next().unwrap_or(Choice {
                            text: String::new(),
                            finish_reason: None,
                        });
                        out.push(RawResponse {
                            text: c.text,
                            finish_reason: c.finish_reason,
                            usage,
                            latency_ms,
                            from_cache: false,
                            request_fingerprint: keys[i as usize].clone(),
                            sample_index: i,
                            attempts: log,
                        });
                    }
                }
                Ok(out)
            }
        }
    }
}
