//! Transport layer for frequency lookups: the HTTP client against a
//! Google-Books-Ngram-style JSON endpoint, and a seeded in-memory mock
//! with a call counter for tests.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use async_trait::async_trait;
use serde::Deserialize;
use thiserror::Error;

/// Environment variable overriding the endpoint base URL.
pub const BASE_URL_ENV: &str = "DIALIGN_NGRAM_URL";
/// Public JSON endpoint of the Google Books Ngram Viewer.
pub const DEFAULT_BASE_URL: &str = "https://books.google.com/ngrams/json";

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("http status {0}")]
    Status(u16),
    #[error("network: {0}")]
    Network(String),
    #[error("protocol: {0}")]
    Protocol(String),
}

impl TransportError {
    /// Throttling and server-side failures are worth a retry; malformed
    /// responses and client errors are not.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Network(_) => true,
            TransportError::Status(code) => *code == 429 || (500..=599).contains(code),
            TransportError::Protocol(_) => false,
        }
    }
}

impl From<reqwest::Error> for TransportError {
    fn from(e: reqwest::Error) -> Self {
        TransportError::Network(e.to_string())
    }
}

/// One endpoint answer: the case-insensitive aggregate mean over the
/// requested years.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FetchOutcome {
    pub mean_freq: f64,
    pub found: bool,
}

/// A single round trip for one (gram, corpus) pair. Implementations do
/// not retry; the provider owns backoff, rate limiting, and caching.
#[async_trait]
pub trait NgramTransport: Send + Sync {
    async fn fetch(
        &self,
        gram: &str,
        corpus: u16,
        year_start: u16,
        year_end: u16,
        smoothing: u32,
    ) -> Result<FetchOutcome, TransportError>;

    /// Network round trips performed so far. Tests assert on this.
    fn calls(&self) -> usize;
}

#[derive(Debug, Deserialize)]
struct Series {
    #[serde(default, rename = "type")]
    kind: String,
    #[serde(default)]
    timeseries: Vec<f64>,
}

/// Reduces the endpoint's series array to one mean frequency. Prefers the
/// explicit case-insensitive aggregate series; with a single series uses
/// it directly; otherwise sums the case variants element-wise. An empty
/// array means the gram is unattested.
fn reduce_series(series: &[Series]) -> Result<FetchOutcome, TransportError> {
    if series.is_empty() {
        return Ok(FetchOutcome { mean_freq: 0.0, found: false });
    }
    let aggregate: Vec<f64> = match series.iter().find(|s| s.kind == "CASE_INSENSITIVE") {
        Some(s) => s.timeseries.clone(),
        None if series.len() == 1 => series[0].timeseries.clone(),
        None => {
            let len = series.iter().map(|s| s.timeseries.len()).max().unwrap_or(0);
            let mut sum = vec![0.0; len];
            for s in series {
                for (acc, v) in sum.iter_mut().zip(&s.timeseries) {
                    *acc += v;
                }
            }
            sum
        }
    };
    if aggregate.is_empty() {
        return Ok(FetchOutcome { mean_freq: 0.0, found: false });
    }
    let mean = aggregate.iter().sum::<f64>() / aggregate.len() as f64;
    if !mean.is_finite() || !(0.0..1.0).contains(&mean) {
        return Err(TransportError::Protocol(format!("frequency out of range: {mean}")));
    }
    Ok(FetchOutcome { mean_freq: mean, found: true })
}

/// reqwest-backed client for the JSON endpoint.
pub struct HttpTransport {
    client: reqwest::Client,
    base_url: String,
    calls: AtomicUsize,
}

impl HttpTransport {
    pub fn new(base_url: impl Into<String>) -> HttpTransport {
        HttpTransport {
            client: reqwest::Client::new(),
            base_url: base_url.into(),
            calls: AtomicUsize::new(0),
        }
    }

    /// Uses `DIALIGN_NGRAM_URL` when set, else the public endpoint.
    pub fn from_env() -> HttpTransport {
        let url = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        HttpTransport::new(url)
    }
}

#[async_trait]
impl NgramTransport for HttpTransport {
    async fn fetch(
        &self,
        gram: &str,
        corpus: u16,
        year_start: u16,
        year_end: u16,
        smoothing: u32,
    ) -> Result<FetchOutcome, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let response = self
            .client
            .get(&self.base_url)
            .query(&[("content", gram)])
            .query(&[
                ("year_start", u32::from(year_start)),
                ("year_end", u32::from(year_end)),
                ("corpus", u32::from(corpus)),
                ("smoothing", smoothing),
            ])
            .query(&[("case_insensitive", "true")])
            .send()
            .await?;
        let status = response.status();
        if !status.is_success() {
            return Err(TransportError::Status(status.as_u16()));
        }
        let body = response.text().await?;
        let series: Vec<Series> = serde_json::from_str(&body)
            .map_err(|e| TransportError::Protocol(format!("bad series JSON: {e}")))?;
        reduce_series(&series)
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Seeded in-memory transport. Unseeded (gram, corpus) pairs read as
/// unattested; scripted failures are consumed before any lookup.
#[derive(Default)]
pub struct MockTransport {
    responses: Mutex<HashMap<(String, u16), f64>>,
    failures: Mutex<VecDeque<TransportError>>,
    calls: AtomicUsize,
}

impl MockTransport {
    pub fn new() -> MockTransport {
        MockTransport::default()
    }

    pub fn seed(&self, gram: &str, corpus: u16, mean_freq: f64) {
        assert!((0.0..1.0).contains(&mean_freq), "relative frequency out of range");
        self.responses.lock().unwrap().insert((gram.to_string(), corpus), mean_freq);
    }

    /// Seeds both dialect corpora (AmE 17, BrE 6) for one gram.
    pub fn seed_pair(&self, gram: &str, f_ame: f64, f_bre: f64) {
        self.seed(gram, super::DEFAULT_CORPUS_AME, f_ame);
        self.seed(gram, super::DEFAULT_CORPUS_BRE, f_bre);
    }

    /// Queues an error returned (once) ahead of the next fetch.
    pub fn fail_next(&self, error: TransportError) {
        self.failures.lock().unwrap().push_back(error);
    }
}

#[async_trait]
impl NgramTransport for MockTransport {
    async fn fetch(
        &self,
        gram: &str,
        corpus: u16,
        _year_start: u16,
        _year_end: u16,
        _smoothing: u32,
    ) -> Result<FetchOutcome, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        if let Some(e) = self.failures.lock().unwrap().pop_front() {
            return Err(e);
        }
        match self.responses.lock().unwrap().get(&(gram.to_string(), corpus)) {
            Some(&mean_freq) => Ok(FetchOutcome { mean_freq, found: true }),
            None => Ok(FetchOutcome { mean_freq: 0.0, found: false }),
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}
