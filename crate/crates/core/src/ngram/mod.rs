//! Frequency lookups with a persistent cache in front of a remote
//! endpoint: cache-first reads, in-flight deduplication, token-bucket
//! rate limiting, and exponential-backoff retries.

mod cache;
mod transport;

pub use cache::{CacheKey, CacheRecord, CacheStats, DiskCache};
pub use transport::{
    FetchOutcome, HttpTransport, MockTransport, NgramTransport, TransportError, BASE_URL_ENV,
    DEFAULT_BASE_URL,
};

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use dashmap::DashMap;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::retry::Backoff;

pub const DEFAULT_CORPUS_AME: u16 = 17;
pub const DEFAULT_CORPUS_BRE: u16 = 6;
pub const DEFAULT_YEAR_START: u16 = 1950;
pub const DEFAULT_YEAR_END: u16 = 2022;
pub const DEFAULT_SMOOTHING: u32 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Ame,
    Bre,
}

/// One frequency question: an n-gram, a dialect corpus, a year range,
/// and the endpoint's smoothing setting.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyQuery {
    pub ngram: Vec<String>,
    pub dialect: Dialect,
    pub year_start: u16,
    pub year_end: u16,
    pub smoothing: u32,
}

impl FrequencyQuery {
    pub fn validate(&self) -> Result<(), NgramError> {
        if self.ngram.is_empty() || self.ngram.len() > 5 {
            return Err(NgramError::InvalidQuery(format!(
                "n-gram must have 1..=5 tokens, got {}",
                self.ngram.len()
            )));
        }
        if let Some(t) = self.ngram.iter().find(|t| t.is_empty() || t.contains(char::is_whitespace)) {
            return Err(NgramError::InvalidQuery(format!("bad token {t:?}")));
        }
        if self.year_start > self.year_end {
            return Err(NgramError::InvalidQuery(format!(
                "year range {}..{} is inverted",
                self.year_start, self.year_end
            )));
        }
        Ok(())
    }

    /// Lowercased space-joined form, the wire and cache identity.
    pub fn joined(&self) -> String {
        self.ngram.join(" ").to_lowercase()
    }
}

/// A resolved lookup. `mean_freq` is the arithmetic mean of normalized
/// yearly frequencies, zero whenever the gram is unattested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramFrequency {
    pub query: FrequencyQuery,
    pub mean_freq: f64,
    pub found: bool,
}

#[derive(Debug, Error)]
pub enum NgramError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("transport failed after {attempts} attempt(s): {source}")]
    Transport {
        attempts: u32,
        #[source]
        source: TransportError,
    },
    #[error("cache i/o: {0}")]
    Cache(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub corpus_ame: u16,
    pub corpus_bre: u16,
    pub backoff: Backoff,
    /// Token-bucket rate toward the endpoint; `None` disables limiting.
    pub rate_limit_per_sec: Option<f64>,
    /// Concurrent in-flight lookups inside `batch_lookup`.
    pub batch_concurrency: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            corpus_ame: DEFAULT_CORPUS_AME,
            corpus_bre: DEFAULT_CORPUS_BRE,
            backoff: Backoff::default(),
            rate_limit_per_sec: Some(2.0),
            batch_concurrency: 8,
        }
    }
}

impl ProviderConfig {
    /// Mock-friendly config: no rate limit, no retry waits.
    pub fn unthrottled() -> Self {
        ProviderConfig {
            rate_limit_per_sec: None,
            backoff: Backoff { initial: Duration::from_millis(1), ..Backoff::default() },
            ..ProviderConfig::default()
        }
    }

    fn corpus_for(&self, dialect: Dialect) -> u16 {
        match dialect {
            Dialect::Ame => self.corpus_ame,
            Dialect::Bre => self.corpus_bre,
        }
    }
}

// Token bucket; burst capacity is one second of tokens.
struct RateLimiter {
    rate: f64,
    burst: f64,
    state: tokio::sync::Mutex<LimiterState>,
}

struct LimiterState {
    tokens: f64,
    last: tokio::time::Instant,
}

impl RateLimiter {
    fn new(rate: f64) -> RateLimiter {
        let burst = rate.max(1.0);
        RateLimiter {
            rate,
            burst,
            state: tokio::sync::Mutex::new(LimiterState {
                tokens: burst,
                last: tokio::time::Instant::now(),
            }),
        }
    }

    async fn acquire(&self) {
        loop {
            let wait = {
                let mut s = self.state.lock().await;
                let now = tokio::time::Instant::now();
                s.tokens = (s.tokens + (now - s.last).as_secs_f64() * self.rate).min(self.burst);
                s.last = now;
                if s.tokens >= 1.0 {
                    s.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - s.tokens) / self.rate)
            };
            tokio::time::sleep(wait).await;
        }
    }
}

/// Cache-backed frequency source. Shareable across tasks; identical
/// concurrent queries collapse to one network call.
pub struct FrequencyProvider {
    transport: Arc<dyn NgramTransport>,
    cache: DiskCache,
    cfg: ProviderConfig,
    limiter: Option<Arc<RateLimiter>>,
    inflight: DashMap<CacheKey, Arc<tokio::sync::Mutex<()>>>,
}

impl FrequencyProvider {
    pub fn new(transport: Arc<dyn NgramTransport>, cache: DiskCache, cfg: ProviderConfig) -> Self {
        let limiter = cfg.rate_limit_per_sec.map(|r| Arc::new(RateLimiter::new(r)));
        FrequencyProvider { transport, cache, cfg, limiter, inflight: DashMap::new() }
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.cache.stats()
    }

    pub fn purge_cache(&self) -> std::io::Result<usize> {
        self.cache.purge()
    }

    /// Network round trips the underlying transport has made.
    pub fn transport_calls(&self) -> usize {
        self.transport.calls()
    }

    fn key_for(&self, q: &FrequencyQuery) -> CacheKey {
        CacheKey {
            gram: q.joined(),
            corpus: self.cfg.corpus_for(q.dialect),
            year_start: q.year_start,
            year_end: q.year_end,
            smoothing: q.smoothing,
        }
    }

    /// Cache probe only; `None` signals a miss, never an error.
    pub fn cache_get(&self, q: &FrequencyQuery) -> Option<NgramFrequency> {
        self.cache.get(&self.key_for(q)).map(|rec| NgramFrequency {
            query: q.clone(),
            mean_freq: rec.mean_freq,
            found: rec.found,
        })
    }

    /// Cache-first resolution; a miss goes to the network (rate limited,
    /// retried with backoff) and the answer is persisted before return.
    pub async fn fetch_frequency(&self, q: &FrequencyQuery) -> Result<NgramFrequency, NgramError> {
        q.validate()?;
        let key = self.key_for(q);
        if let Some(rec) = self.cache.get(&key) {
            return Ok(NgramFrequency { query: q.clone(), mean_freq: rec.mean_freq, found: rec.found });
        }
        let gate = self
            .inflight
            .entry(key.clone())
            .or_insert_with(|| Arc::new(tokio::sync::Mutex::new(())))
            .clone();
        let guard = gate.lock().await;
        // A concurrent holder may have resolved the key while we waited.
        let result = match self.cache.get(&key) {
            Some(rec) => Ok(rec),
            None => match self.fetch_remote(&key).await {
                Ok(outcome) => {
                    let rec = CacheRecord { mean_freq: outcome.mean_freq, found: outcome.found };
                    self.cache.put(key.clone(), rec).map(|()| rec).map_err(NgramError::from)
                }
                Err(e) => Err(e),
            },
        };
        drop(guard);
        self.inflight.remove(&key);
        result.map(|rec| NgramFrequency { query: q.clone(), mean_freq: rec.mean_freq, found: rec.found })
    }

    async fn fetch_remote(&self, key: &CacheKey) -> Result<FetchOutcome, NgramError> {
        self.cfg
            .backoff
            .run(TransportError::is_retryable, || {
                let transport = Arc::clone(&self.transport);
                let limiter = self.limiter.clone();
                let key = key.clone();
                async move {
                    if let Some(l) = &limiter {
                        l.acquire().await;
                    }
                    transport
                        .fetch(&key.gram, key.corpus, key.year_start, key.year_end, key.smoothing)
                        .await
                }
            })
            .await
            .map_err(|(attempts, source)| NgramError::Transport { attempts, source })
    }

    /// Resolves both dialect frequencies for every distinct gram. In
    /// strict mode the first failure aborts; otherwise failed grams land
    /// in `errors` and the rest of the map is still returned.
    pub async fn batch_lookup(
        &self,
        grams: &[Vec<String>],
        year_start: u16,
        year_end: u16,
        smoothing: u32,
        strict: bool,
    ) -> Result<BatchLookup, NgramError> {
        let mut distinct: Vec<&Vec<String>> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for g in grams {
            if seen.insert(g) {
                distinct.push(g);
            }
        }

        // Futures are built in a plain loop: a closure taking `&Vec<_>`
        // here trips the compiler's higher-ranked lifetime inference
        // once callers need the returned future to be `'static`-checked.
        let mut pending = Vec::with_capacity(distinct.len());
        for gram in distinct {
            pending.push(async move {
                let mut freqs = [0.0f64; 2];
                for (slot, dialect) in freqs.iter_mut().zip([Dialect::Ame, Dialect::Bre]) {
                    let q = FrequencyQuery {
                        ngram: gram.clone(),
                        dialect,
                        year_start,
                        year_end,
                        smoothing,
                    };
                    match self.fetch_frequency(&q).await {
                        Ok(f) => *slot = f.mean_freq,
                        Err(e) => return (gram.clone(), Err(e)),
                    }
                }
                (gram.clone(), Ok((freqs[0], freqs[1])))
            });
        }
        let lookups =
            stream::iter(pending).buffer_unordered(self.cfg.batch_concurrency.max(1));

        let mut out = BatchLookup::default();
        let mut results = std::pin::pin!(lookups);
        while let Some((gram, res)) = results.next().await {
            match res {
                Ok(pair) => {
                    out.freqs.insert(gram, pair);
                }
                Err(e) if strict => return Err(e),
                Err(e) => {
                    out.errors.insert(gram, e.to_string());
                }
            }
        }
        Ok(out)
    }
}

/// Batch result: per-gram (f_ame, f_bre) plus error markers for grams
/// that could not be resolved in non-strict mode.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct BatchLookup {
    pub freqs: HashMap<Vec<String>, (f64, f64)>,
    pub errors: HashMap<Vec<String>, String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn query(tokens: &[&str], dialect: Dialect) -> FrequencyQuery {
        FrequencyQuery {
            ngram: tokens.iter().map(|t| t.to_string()).collect(),
            dialect,
            year_start: DEFAULT_YEAR_START,
            year_end: DEFAULT_YEAR_END,
            smoothing: DEFAULT_SMOOTHING,
        }
    }

    fn provider_with(mock: Arc<MockTransport>) -> FrequencyProvider {
        let dir = tempfile::tempdir().unwrap();
        let cache = DiskCache::open(dir.path().join("cache.jsonl")).unwrap();
        // leak the tempdir so the cache file outlives the constructor
        std::mem::forget(dir);
        FrequencyProvider::new(mock, cache, ProviderConfig::unthrottled())
    }

    #[tokio::test]
    async fn seeded_mock_roundtrip() {
        let mock = Arc::new(MockTransport::new());
        mock.seed("colour", DEFAULT_CORPUS_BRE, 4e-6);
        let p = provider_with(mock);
        let f = p.fetch_frequency(&query(&["colour"], Dialect::Bre)).await.unwrap();
        assert_eq!(f.mean_freq, 4e-6);
        assert!(f.found);
    }

    #[tokio::test]
    async fn unseeded_gram_reads_as_unattested() {
        let p = provider_with(Arc::new(MockTransport::new()));
        let f = p.fetch_frequency(&query(&["zxqv", "blorp"], Dialect::Ame)).await.unwrap();
        assert_eq!(f.mean_freq, 0.0);
        assert!(!f.found);
    }

    #[tokio::test]
    async fn second_lookup_is_served_from_cache() {
        let mock = Arc::new(MockTransport::new());
        mock.seed("fizzy drink", DEFAULT_CORPUS_AME, 4e-7);
        let p = provider_with(Arc::clone(&mock));
        let q = query(&["fizzy", "drink"], Dialect::Ame);
        let first = p.fetch_frequency(&q).await.unwrap();
        let second = p.fetch_frequency(&q).await.unwrap();
        assert_eq!(first, second);
        assert_eq!(mock.calls(), 1);
        assert_eq!(p.cache_get(&q).unwrap().mean_freq, 4e-7);
    }

    #[tokio::test]
    async fn concurrent_identical_queries_share_one_network_call() {
        let mock = Arc::new(MockTransport::new());
        mock.seed("at the weekend", DEFAULT_CORPUS_BRE, 2e-6);
        let p = Arc::new(provider_with(Arc::clone(&mock)));
        let q = query(&["at", "the", "weekend"], Dialect::Bre);
        let fetches = (0..16).map(|_| {
            let p = Arc::clone(&p);
            let q = q.clone();
            async move { p.fetch_frequency(&q).await.unwrap().mean_freq }
        });
        let results = futures::future::join_all(fetches).await;
        assert!(results.iter().all(|m| *m == 2e-6));
        assert_eq!(mock.calls(), 1);
    }

    #[tokio::test(start_paused = true)]
    async fn throttled_failures_are_retried_until_success() {
        let mock = Arc::new(MockTransport::new());
        mock.seed("the team are", DEFAULT_CORPUS_BRE, 9e-7);
        mock.fail_next(TransportError::Status(429));
        mock.fail_next(TransportError::Status(503));
        let p = provider_with(Arc::clone(&mock));
        let f = p.fetch_frequency(&query(&["the", "team", "are"], Dialect::Bre)).await.unwrap();
        assert_eq!(f.mean_freq, 9e-7);
        assert_eq!(mock.calls(), 3);
    }

    #[tokio::test(start_paused = true)]
    async fn exhausted_retries_surface_the_transport_error() {
        let mock = Arc::new(MockTransport::new());
        for _ in 0..5 {
            mock.fail_next(TransportError::Status(500));
        }
        let p = provider_with(Arc::clone(&mock));
        let err = p.fetch_frequency(&query(&["x"], Dialect::Ame)).await.unwrap_err();
        match err {
            NgramError::Transport { attempts, source } => {
                assert_eq!(attempts, 5);
                assert!(matches!(source, TransportError::Status(500)));
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert_eq!(mock.calls(), 5);
    }

    #[tokio::test]
    async fn client_errors_fail_without_retry() {
        let mock = Arc::new(MockTransport::new());
        mock.fail_next(TransportError::Status(404));
        let p = provider_with(Arc::clone(&mock));
        let err = p.fetch_frequency(&query(&["x"], Dialect::Ame)).await.unwrap_err();
        assert!(matches!(err, NgramError::Transport { attempts: 1, .. }));
        assert_eq!(mock.calls(), 1);
    }

    #[tokio::test]
    async fn batch_lookup_counts_network_calls() {
        let mock = Arc::new(MockTransport::new());
        mock.seed_pair("gram one", 1e-6, 2e-6);
        mock.seed_pair("gram two", 3e-6, 4e-6);
        let p = provider_with(Arc::clone(&mock));
        // pre-resolve both dialects of the first gram
        for dialect in [Dialect::Ame, Dialect::Bre] {
            p.fetch_frequency(&query(&["gram", "one"], dialect)).await.unwrap();
        }
        assert_eq!(mock.calls(), 2);
        let grams: Vec<Vec<String>> = vec![
            vec!["gram".into(), "one".into()],
            vec!["gram".into(), "two".into()],
            vec!["gram".into(), "three".into()],
        ];
        let out = p.batch_lookup(&grams, 1950, 2022, 0, true).await.unwrap();
        // 2 dialects x 2 uncached grams
        assert_eq!(mock.calls(), 6);
        assert_eq!(out.freqs[&grams[0]], (1e-6, 2e-6));
        assert_eq!(out.freqs[&grams[1]], (3e-6, 4e-6));
        assert_eq!(out.freqs[&grams[2]], (0.0, 0.0));
        assert!(out.errors.is_empty());
    }

    #[tokio::test]
    async fn batch_lookup_dedups_repeated_grams() {
        let mock = Arc::new(MockTransport::new());
        let p = provider_with(Arc::clone(&mock));
        let gram: Vec<String> = vec!["same".into(), "gram".into()];
        let out = p
            .batch_lookup(&[gram.clone(), gram.clone(), gram.clone()], 1950, 2022, 0, true)
            .await
            .unwrap();
        assert_eq!(out.freqs.len(), 1);
        assert_eq!(mock.calls(), 2);
    }

    #[tokio::test]
    async fn empty_batch_is_empty() {
        let p = provider_with(Arc::new(MockTransport::new()));
        let out = p.batch_lookup(&[], 1950, 2022, 0, true).await.unwrap();
        assert!(out.freqs.is_empty() && out.errors.is_empty());
    }

    #[tokio::test]
    async fn non_strict_batch_marks_failed_grams() {
        let mock = Arc::new(MockTransport::new());
        mock.fail_next(TransportError::Protocol("bad json".into()));
        let p = {
            let dir = tempfile::tempdir().unwrap();
            let cache = DiskCache::open(dir.path().join("cache.jsonl")).unwrap();
            std::mem::forget(dir);
            let cfg = ProviderConfig { batch_concurrency: 1, ..ProviderConfig::unthrottled() };
            FrequencyProvider::new(Arc::clone(&mock) as Arc<dyn NgramTransport>, cache, cfg)
        };
        let grams: Vec<Vec<String>> = vec![vec!["bad".into()], vec!["good".into()]];
        let out = p.batch_lookup(&grams, 1950, 2022, 0, false).await.unwrap();
        assert_eq!(out.errors.len(), 1);
        assert!(out.errors[&grams[0]].contains("protocol"));
        assert_eq!(out.freqs.len(), 1);
    }

    #[tokio::test]
    async fn strict_batch_propagates_the_first_error() {
        let mock = Arc::new(MockTransport::new());
        mock.fail_next(TransportError::Protocol("bad json".into()));
        let p = {
            let dir = tempfile::tempdir().unwrap();
            let cache = DiskCache::open(dir.path().join("cache.jsonl")).unwrap();
            std::mem::forget(dir);
            let cfg = ProviderConfig { batch_concurrency: 1, ..ProviderConfig::unthrottled() };
            FrequencyProvider::new(Arc::clone(&mock) as Arc<dyn NgramTransport>, cache, cfg)
        };
        let grams: Vec<Vec<String>> = vec![vec!["bad".into()]];
        assert!(p.batch_lookup(&grams, 1950, 2022, 0, true).await.is_err());
    }

    #[tokio::test]
    async fn invalid_queries_are_rejected_before_any_io() {
        let mock = Arc::new(MockTransport::new());
        let p = provider_with(Arc::clone(&mock));
        let too_long = query(&["a", "b", "c", "d", "e", "f"], Dialect::Ame);
        assert!(matches!(p.fetch_frequency(&too_long).await, Err(NgramError::InvalidQuery(_))));
        let mut inverted = query(&["a"], Dialect::Ame);
        inverted.year_start = 2000;
        inverted.year_end = 1990;
        assert!(matches!(p.fetch_frequency(&inverted).await, Err(NgramError::InvalidQuery(_))));
        let empty = query(&[], Dialect::Ame);
        assert!(matches!(p.fetch_frequency(&empty).await, Err(NgramError::InvalidQuery(_))));
        assert_eq!(mock.calls(), 0);
    }

    #[tokio::test(start_paused = true)]
    async fn rate_limiter_spaces_out_requests() {
        let limiter = RateLimiter::new(2.0);
        let start = tokio::time::Instant::now();
        for _ in 0..6 {
            limiter.acquire().await;
        }
        // burst of 2 goes through instantly, then 4 more at 0.5s spacing
        let elapsed = start.elapsed();
        assert!(elapsed >= Duration::from_millis(1900), "elapsed {elapsed:?}");
        assert!(elapsed <= Duration::from_millis(2200), "elapsed {elapsed:?}");
    }

    #[tokio::test]
    async fn http_transport_parses_a_canned_endpoint_response() {
        use tokio::io::{AsyncReadExt, AsyncWriteExt};
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let body = r#"[{"ngram":"fizzy drink","type":"CASE_INSENSITIVE","timeseries":[1e-7,3e-7]}]"#;
        let server = tokio::spawn(async move {
            let (mut sock, _) = listener.accept().await.unwrap();
            let mut buf = vec![0u8; 4096];
            let n = sock.read(&mut buf).await.unwrap();
            let request = String::from_utf8_lossy(&buf[..n]).to_string();
            let response = format!(
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            );
            sock.write_all(response.as_bytes()).await.unwrap();
            request
        });
        let transport = HttpTransport::new(format!("http://{addr}/ngrams/json"));
        let out = transport.fetch("fizzy drink", 17, 1950, 2022, 0).await.unwrap();
        assert_eq!(out, FetchOutcome { mean_freq: 2e-7, found: true });
        assert_eq!(transport.calls(), 1);
        let request = server.await.unwrap();
        let query_line = request.lines().next().unwrap();
        for expected in [
            "content=fizzy+drink",
            "year_start=1950",
            "year_end=2022",
            "corpus=17",
            "smoothing=0",
            "case_insensitive=true",
        ] {
            assert!(query_line.contains(expected), "{query_line} missing {expected}");
        }
    }

    #[tokio::test]
    async fn http_transport_maps_status_codes() {
        use tokio::io::{AsyncReadExt, AsyncWriteExt};
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(async move {
            let (mut sock, _) = listener.accept().await.unwrap();
            let mut buf = vec![0u8; 4096];
            let _ = sock.read(&mut buf).await.unwrap();
            sock.write_all(b"HTTP/1.1 429 Too Many Requests\r\ncontent-length: 0\r\nconnection: close\r\n\r\n")
                .await
                .unwrap();
        });
        let transport = HttpTransport::new(format!("http://{addr}/ngrams/json"));
        let err = transport.fetch("x", 17, 1950, 2022, 0).await.unwrap_err();
        assert!(matches!(err, TransportError::Status(429)));
    }

    /// Requires outbound network access; run manually with
    /// `cargo test -- --ignored live_endpoint`.
    #[tokio::test]
    #[ignore = "hits the public endpoint; sandbox networking is usually closed"]
    async fn live_endpoint_smoke() {
        let transport = HttpTransport::from_env();
        let out = transport.fetch("the quick", DEFAULT_CORPUS_AME, 1950, 2022, 0).await.unwrap();
        assert!(out.found);
        assert!(out.mean_freq > 0.0 && out.mean_freq < 1.0);
    }
}
