//! Model access: chat-completions over HTTP or a scripted mock, image
//! preparation, response caching, retries and a bounded worker pool.

mod cache;
mod client;
mod http;
mod image;
mod mock;
mod pool;

use serde::{Deserialize, Serialize};

pub use self::image::{prepare_image, target_dims, PreparedImage, ResizeMode, DEFAULT_PIXEL_CAP};
pub use cache::{cache_key, CacheEntry, DiskCache};
pub use client::{Backend, Gateway, GatewayStats};
pub use http::{
    parse_completion, request_body, send_with_retry, Choice, HttpReply, Transport, UreqTransport,
};
pub use mock::{mock_complete, MockBehavior, Truth, TruthOracle};
pub use pool::run_bounded;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            backoff_base_ms: 500,
        }
    }
}

fn default_timeout() -> u64 {
    120
}
fn default_parallel() -> usize {
    4
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub model_name: String,
    /// Environment variable holding the bearer token, if the endpoint needs one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
    #[serde(default = "default_parallel")]
    pub max_parallel_requests: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
    /// Whether one request may ask for several choices via `n`.
    #[serde(default)]
    pub supports_n: bool,
    /// Whether to send a per-sample `seed` field.
    #[serde(default = "default_true")]
    pub send_seed: bool,
}

impl ModelEndpoint {
    pub fn new(base_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        ModelEndpoint {
            base_url: base_url.into(),
            model_name: model_name.into(),
            auth_token_env: None,
            timeout_seconds: default_timeout(),
            max_parallel_requests: default_parallel(),
            retry: RetryPolicy::default(),
            supports_n: false,
            send_seed: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_parallel_requests == 0 {
            return Err(Error::Config(
                "max_parallel_requests must be at least 1".into(),
            ));
        }
        if self.retry.max_attempts == 0 {
            return Err(Error::Config(
                "retry.max_attempts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn completions_url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

fn default_max_tokens() -> u32 {
    1024
}
fn default_n() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_n")]
    pub n_samples: u32,
    #[serde(default = "default_max_tokens")]
    pub max_new_tokens: u32,
    /// Run seed from which per-sample seeds are derived.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for DecodeParams {
    fn default() -> Self {
        DecodeParams {
            temperature: 0.0,
            n_samples: 1,
            max_new_tokens: default_max_tokens(),
            seed: None,
        }
    }
}

impl DecodeParams {
    pub fn validate(&self) -> Result<()> {
        if !self.temperature.is_finite() || self.temperature < 0.0 {
            return Err(Error::Config(format!(
                "invalid temperature {}",
                self.temperature
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("n_samples must be at least 1".into()));
        }
        if self.temperature == 0.0 && self.n_samples != 1 {
            return Err(Error::Config(
                "temperature 0 is deterministic; n_samples must be 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    #[serde(default)]
    pub prompt_tokens: u64,
    #[serde(default)]
    pub completion_tokens: u64,
}

/// One HTTP attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub attempt: u32,
    pub status: Option<u16>,
    pub error: Option<String>,
    pub latency_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub text: String,
    pub finish_reason: Option<String>,
    pub usage: Usage,
    pub latency_ms: u64,
    pub from_cache: bool,
    pub request_fingerprint: String,
    pub sample_index: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempts: Vec<AttemptRecord>,
}

impl RawResponse {
    pub fn truncated(&self) -> bool {
        self.finish_reason.as_deref() == Some("length")
    }
}
