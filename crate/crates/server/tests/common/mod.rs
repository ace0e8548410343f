#![allow(dead_code)]

use std::pin::Pin;
use std::time::Duration;

use futures::{Stream, StreamExt};
use serde_json::Value;

/// One server-sent event.
#[derive(Debug, Clone)]
pub struct Message {
    pub id: Option<u64>,
    pub data: String,
}

impl Message {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.data).expect("event data is JSON")
    }

    pub fn kind(&self) -> String {
        self.json()["type"].as_str().unwrap_or_default().to_string()
    }
}

/// Minimal event-stream reader over a streaming HTTP response.
pub struct SseClient {
    body: Pin<Box<dyn Stream<Item = reqwest::Result<Vec<u8>>> + Send>>,
    buf: String,
}

impl SseClient {
    pub async fn connect(url: &str, last_event_id: Option<u64>) -> Self {
        let mut req = reqwest::Client::new().get(url);
        if let Some(id) = last_event_id {
            req = req.header("Last-Event-ID", id.to_string());
        }
        let resp = req.send().await.expect("connect to event stream");
        assert!(resp.status().is_success(), "{}", resp.status());
        let ctype = resp.headers()["content-type"].to_str().unwrap().to_string();
        assert!(ctype.starts_with("text/event-stream"), "{ctype}");
        Self {
            body: Box::pin(resp.bytes_stream().map(|r| r.map(|b| b.to_vec()))),
            buf: String::new(),
        }
    }

    /// Next data-bearing message, or `None` on timeout or end of stream.
    pub async fn next(&mut self, timeout: Duration) -> Option<Message> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            while let Some(end) = self.buf.find("\n\n") {
                let block: String = self.buf.drain(..end + 2).collect();
                let (mut id, mut data) = (None, Vec::new());
                for line in block.lines() {
                    if let Some(v) = line.strip_prefix("data:") {
                        data.push(v.strip_prefix(' ').unwrap_or(v).to_string());
                    } else if let Some(v) = line.strip_prefix("id:") {
                        id = v.trim().parse().ok();
                    }
                }
                if !data.is_empty() {
                    return Some(Message { id, data: data.join("\n") });
                }
            }
            let chunk = tokio::time::timeout_at(deadline, self.body.next()).await.ok()??;
            self.buf.push_str(&String::from_utf8(chunk.ok()?).expect("utf-8 stream"));
        }
    }

    /// Reads until a message satisfies `stop` (inclusive).
    pub async fn until(&mut self, timeout: Duration, stop: impl Fn(&Message) -> bool) -> Vec<Message> {
        let mut out = Vec::new();
        while let Some(m) = self.next(timeout).await {
            let done = stop(&m);
            out.push(m);
            if done {
                return out;
            }
        }
        panic!("stream ended or timed out after {} messages: {:?}", out.len(), out.last());
    }
}
