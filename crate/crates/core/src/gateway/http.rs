use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::{AttemptRecord, DecodeParams, RetryPolicy, Usage};
use crate::error::{Error, Result};
use crate::prompting::{Part, RenderedPrompt, Role};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub body: String,
}

/// Minimal HTTP seam so tests can substitute an instrumented transport.
pub trait Transport: Send + Sync {
    /// POSTs a JSON body. `Err` means no HTTP response was obtained.
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
    ) -> std::result::Result<HttpReply, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        UreqTransport { agent }
    }
}

impl Transport for UreqTransport {
    fn post_json(
        &self,
        url: &str,
        bearer: Option<&str>,
        body: &Value,
    ) -> std::result::Result<HttpReply, String> {
        let mut req = self.agent.post(url);
        if let Some(t) = bearer {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| e.to_string())?;
        Ok(HttpReply { status, body })
    }
}

/// Chat-completions request body. `images` maps image references to data URIs.
pub fn request_body(
    model: &str,
    prompt: &RenderedPrompt,
    images: &HashMap<String, String>,
    decode: &DecodeParams,
    n: u32,
    seed: Option<u64>,
) -> Result<Value> {
    let mut messages = Vec::with_capacity(prompt.messages.len());
    for m in &prompt.messages {
        let role = m.role.to_string();
        let text_only = m.parts.iter().all(|p| matches!(p, Part::Text(_)));
        let content = if text_only && m.role != Role::User {
            let s: String = m
                .parts
                .iter()
                .map(|p| match p {
                    Part::Text(t) => t.as_str(),
                    Part::ImageRef(_) => "",
                })
                .collect();
            json!(s)
        } else {
            let parts = m
                .parts
                .iter()
                .map(|p| match p {
                    Part::Text(t) => Ok(json!({"type": "text", "text": t})),
                    Part::ImageRef(r) => {
                        let uri = images
                            .get(r)
                            .ok_or_else(|| Error::Image(format!("image `{r}` was not prepared")))?;
                        Ok(json!({"type": "image_url", "image_url": {"url": uri}}))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            json!(parts)
        };
        messages.push(json!({"role": role, "content": content}));
    }
    let mut body = json!({
        "model": model,
        "messages": messages,
        "temperature": decode.temperature,
        "n": n,
        "max_tokens": decode.max_new_tokens,
    });
    if let Some(s) = seed {
        body["seed"] = json!(s);
    }
    Ok(body)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub text: String,
    pub finish_reason: Option<String>,
}

/// Extracts choices (ordered by `index`) and usage from a response body.
pub fn parse_completion(body: &str) -> Result<(Vec<Choice>, Usage)> {
    let v: Value = serde_json::from_str(body)?;
    let choices = v
        .get("choices")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Http {
            status: 200,
            body: format!("response without choices: {}", truncate(body)),
        })?;
    let mut out: Vec<(u64, Choice)> = choices
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let idx = c.get("index").and_then(Value::as_u64).unwrap_or(i as u64);
            let content = c.get("message").and_then(|m| m.get("content"));
            let text = match content {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Array(parts)) => parts
                    .iter()
                    .filter_map(|p| p.get("text").and_then(Value::as_str))
                    .collect(),
                _ => String::new(),
            };
            let finish_reason = c
                .get("finish_reason")
                .and_then(Value::as_str)
                .map(str::to_string);
            (
                idx,
                Choice {
                    text,
                    finish_reason,
                },
            )
        })
        .collect();
    out.sort_by_key(|(i, _)| *i);
    let usage = v
        .get("usage")
        .and_then(|u| serde_json::from_value::<Usage>(u.clone()).ok())
        .unwrap_or_default();
    Ok((out.into_iter().map(|(_, c)| c).collect(), usage))
}

fn truncate(s: &str) -> String {
    s.chars().take(512).collect()
}

/// POSTs with retries on transport failures, 5xx and 429. Other statuses
/// are returned or raised without retrying.
pub fn send_with_retry(
    transport: &dyn Transport,
    url: &str,
    bearer: Option<&str>,
    body: &Value,
    policy: &RetryPolicy,
) -> Result<(HttpReply, Vec<AttemptRecord>)> {
    let mut log = Vec::new();
    let max = policy.max_attempts.max(1);
    let mut last = String::new();
    for attempt in 1..=max {
        if attempt > 1 && policy.backoff_base_ms > 0 {
            let factor = 1u64 << (attempt - 2).min(16);
            std::thread::sleep(Duration::from_millis(
                policy.backoff_base_ms.saturating_mul(factor),
            ));
        }
        let started = Instant::now();
        let result = transport.post_json(url, bearer, body);
        let latency_ms = started.elapsed().as_millis() as u64;
        match result {
            Err(msg) => {
                log.push(AttemptRecord {
                    attempt,
                    status: None,
                    error: Some(msg.clone()),
                    latency_ms,
                });
                last = msg;
            }
            Ok(reply) => {
                log.push(AttemptRecord {
                    attempt,
                    status: Some(reply.status),
                    error: None,
                    latency_ms,
                });
                match reply.status {
                    200..=299 => return Ok((reply, log)),
                    429 | 500..=599 => last = format!("HTTP {}", reply.status),
                    status => {
                        return Err(Error::Http {
                            status,
                            body: truncate(&reply.body),
                        })
                    }
                }
            }
        }
    }
    Err(Error::Transport {
        message: last,
        attempts: log,
    })
}
