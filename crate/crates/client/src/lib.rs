//! Typed client for the dialign HTTP service. Response bodies
//! deserialize straight into the core result types, so a caller sees the
//! same structures whether it runs the analyses in-process or remotely.

use std::collections::BTreeMap;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use dialign_core::alignment::{AlignmentResult, ScoringConfig};
use dialign_core::audit::{AuditReport, Method, WilcoxonResult};
use dialign_core::lexicon::{Category, Side, VariantPair};
use dialign_core::ngram::CacheStats;
use dialign_core::subword::FertilityReport;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("http: {0}")]
    Http(#[from] reqwest::Error),
    /// Non-2xx reply; `message` carries the server's error body.
    #[error("service returned {status}: {message}")]
    Api { status: u16, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedPair {
    pub ame: String,
    pub bre: String,
    pub group: u8,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainsReport {
    pub token: String,
    pub present: bool,
    pub occurrences: Vec<Occurrence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occurrence {
    pub side: Side,
    #[serde(flatten)]
    pub pair: VariantPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconStats {
    pub pairs: usize,
    pub distinct_words: usize,
    pub rows_skipped: usize,
    pub by_category: BTreeMap<String, usize>,
    pub by_group: BTreeMap<u8, usize>,
}

#[derive(Debug, Serialize)]
struct AuditSample {
    limit: usize,
    seed: u64,
}

pub struct ServiceClient {
    http: reqwest::Client,
    base: String,
}

impl ServiceClient {
    /// `base_url` like `http://127.0.0.1:8787`; a trailing slash is fine.
    pub fn new(base_url: impl Into<String>) -> ServiceClient {
        let mut base = base_url.into();
        while base.ends_with('/') {
            base.pop();
        }
        ServiceClient { http: reqwest::Client::new(), base }
    }

    pub async fn health(&self) -> Result<Health, ClientError> {
        self.get("/health").await
    }

    pub async fn score(
        &self,
        text: &str,
        config: Option<&ScoringConfig>,
    ) -> Result<AlignmentResult, ClientError> {
        self.post("/v1/score", &serde_json::json!({ "text": text, "config": config })).await
    }

    pub async fn score_batch(
        &self,
        texts: &[String],
        config: Option<&ScoringConfig>,
    ) -> Result<Vec<AlignmentResult>, ClientError> {
        #[derive(Deserialize)]
        struct BatchResponse {
            results: Vec<AlignmentResult>,
        }
        let body = serde_json::json!({ "texts": texts, "config": config });
        let r: BatchResponse = self.post("/v1/score/batch", &body).await?;
        Ok(r.results)
    }

    pub async fn classify(&self, ame: &str, bre: &str) -> Result<ClassifiedPair, ClientError> {
        self.post("/v1/lexicon/classify", &serde_json::json!({ "ame": ame, "bre": bre })).await
    }

    pub async fn contains(&self, token: &str) -> Result<ContainsReport, ClientError> {
        self.get(&format!("/v1/lexicon/contains/{token}")).await
    }

    pub async fn lexicon_stats(&self) -> Result<LexiconStats, ClientError> {
        self.get("/v1/lexicon/stats").await
    }

    /// `sample` is (limit, seed) for the optional scored subsample.
    pub async fn audit(
        &self,
        documents: &[String],
        strict: bool,
        sample: Option<(usize, u64)>,
    ) -> Result<AuditReport, ClientError> {
        let sample = sample.map(|(limit, seed)| AuditSample { limit, seed });
        let body = serde_json::json!({
            "documents": documents,
            "strict": strict,
            "sample": sample,
        });
        self.post("/v1/audit", &body).await
    }

    pub async fn wilcoxon(
        &self,
        differences: &[f64],
        method: Option<Method>,
    ) -> Result<WilcoxonResult, ClientError> {
        let body = serde_json::json!({ "differences": differences, "method": method });
        self.post("/v1/wilcoxon", &body).await
    }

    /// `tokenizer` is the combined JSON description (vocab, merges,
    /// optional normalization and boundary marker).
    pub async fn tokfair(
        &self,
        tokenizer: &serde_json::Value,
    ) -> Result<FertilityReport, ClientError> {
        self.post("/v1/tokfair", &serde_json::json!({ "tokenizer": tokenizer })).await
    }

    pub async fn cache_stats(&self) -> Result<CacheStats, ClientError> {
        self.get("/v1/cache/stats").await
    }

    pub async fn cache_purge(&self) -> Result<usize, ClientError> {
        #[derive(Deserialize)]
        struct Purged {
            purged: usize,
        }
        let r: Purged = self.post_empty("/v1/cache/purge").await?;
        Ok(r.purged)
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let res = self.http.get(format!("{}{path}", self.base)).send().await?;
        Self::decode(res).await
    }

    async fn post<T: DeserializeOwned>(
        &self,
        path: &str,
        body: &impl Serialize,
    ) -> Result<T, ClientError> {
        let res = self.http.post(format!("{}{path}", self.base)).json(body).send().await?;
        Self::decode(res).await
    }

    async fn post_empty<T: DeserializeOwned>(&self, path: &str) -> Result<T, ClientError> {
        let res = self.http.post(format!("{}{path}", self.base)).send().await?;
        Self::decode(res).await
    }

    async fn decode<T: DeserializeOwned>(res: reqwest::Response) -> Result<T, ClientError> {
        let status = res.status();
        if status.is_success() {
            return Ok(res.json().await?);
        }
        #[derive(Deserialize)]
        struct ErrorBody {
            error: String,
        }
        let message = match res.text().await {
            Ok(text) => match serde_json::from_str::<ErrorBody>(&text) {
                Ok(b) => b.error,
                Err(_) => text,
            },
            Err(e) => e.to_string(),
        };
        Err(ClientError::Api { status: status.as_u16(), message })
    }
}
