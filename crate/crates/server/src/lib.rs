//! HTTP/JSON service over the core analyses: text scoring, variant
//! lexicon queries, corpus audits, signed-rank tests, tokenizer fairness
//! reports, and frequency-cache management. Generation evaluation stays
//! in the CLI because it needs endpoint credentials and writes run
//! directories; everything here is side-effect-free per request apart
//! from the shared frequency cache.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use dialign_core::alignment::{score_text, AlignmentError, AlignmentResult, ScoringConfig};
use dialign_core::audit::{
    audit_corpus, wilcoxon_signed_rank, wilcoxon_with_method, AuditError, AuditOptions,
    AuditReport, Method, SampleOptions, WilcoxonError, WilcoxonResult,
};
use dialign_core::lexicon::{classify_pair, Category, Lexicon, LexiconError, Side, VariantPair};
use dialign_core::ngram::{CacheStats, FrequencyProvider, NgramError};
use dialign_core::subword::{analyze_tokenizer, FertilityReport, SubwordError, SubwordTokenizer};

/// Upper bound on texts per batch-scoring request.
pub const MAX_BATCH: usize = 256;

pub struct AppState {
    pub lexicon: Lexicon,
    pub provider: FrequencyProvider,
    pub scoring: ScoringConfig,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/score", post(score))
        .route("/v1/score/batch", post(score_batch))
        .route("/v1/lexicon/classify", post(lexicon_classify))
        .route("/v1/lexicon/contains/{token}", get(lexicon_contains))
        .route("/v1/lexicon/stats", get(lexicon_stats))
        .route("/v1/audit", post(audit))
        .route("/v1/wilcoxon", post(wilcoxon))
        .route("/v1/tokfair", post(tokfair))
        .route("/v1/cache/stats", get(cache_stats))
        .route("/v1/cache/purge", post(cache_purge))
        .with_state(state)
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    Unprocessable(String),
    Upstream(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::Unprocessable(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
            ApiError::Upstream(m) => (StatusCode::BAD_GATEWAY, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(serde_json::json!({ "error": message }))).into_response()
    }
}

impl From<AlignmentError> for ApiError {
    fn from(e: AlignmentError) -> ApiError {
        match e {
            AlignmentError::InvalidConfig(m) => ApiError::BadRequest(m),
            AlignmentError::Ngram(inner) => inner.into(),
        }
    }
}

impl From<NgramError> for ApiError {
    fn from(e: NgramError) -> ApiError {
        match e {
            NgramError::InvalidQuery(m) => ApiError::BadRequest(m),
            NgramError::Transport { .. } => ApiError::Upstream(e.to_string()),
            NgramError::Cache(io) => ApiError::Internal(io.to_string()),
        }
    }
}

impl From<AuditError> for ApiError {
    fn from(e: AuditError) -> ApiError {
        match e {
            AuditError::Alignment(inner) => inner.into(),
            AuditError::Record { .. } | AuditError::LexiconMismatch => {
                ApiError::BadRequest(e.to_string())
            }
            AuditError::Io(io) => ApiError::Internal(io.to_string()),
        }
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

#[derive(Debug, Deserialize)]
struct ScoreRequest {
    text: String,
    /// Full scoring-config override; the server default applies when
    /// absent.
    #[serde(default)]
    config: Option<ScoringConfig>,
}

async fn score(
    State(state): State<Arc<AppState>>,
    Json(req): Json<ScoreRequest>,
) -> Result<Json<AlignmentResult>, ApiError> {
    let cfg = req.config.as_ref().unwrap_or(&state.scoring);
    let result = score_text(&req.text, &state.lexicon, &state.provider, cfg).await?;
    Ok(Json(result))
}

#[derive(Debug, Deserialize)]
struct BatchScoreRequest {
    texts: Vec<String>,
    #[serde(default)]
    config: Option<ScoringConfig>,
}

#[derive(Debug, Serialize)]
struct BatchScoreResponse {
    results: Vec<AlignmentResult>,
}

async fn score_batch(
    State(state): State<Arc<AppState>>,
    Json(req): Json<BatchScoreRequest>,
) -> Result<Json<BatchScoreResponse>, ApiError> {
    if req.texts.len() > MAX_BATCH {
        return Err(ApiError::BadRequest(format!(
            "batch of {} exceeds the {MAX_BATCH}-text limit",
            req.texts.len()
        )));
    }
    let cfg = req.config.as_ref().unwrap_or(&state.scoring);
    let mut results = Vec::with_capacity(req.texts.len());
    for text in &req.texts {
        results.push(score_text(text, &state.lexicon, &state.provider, cfg).await?);
    }
    Ok(Json(BatchScoreResponse { results }))
}

#[derive(Debug, Deserialize)]
struct ClassifyRequest {
    ame: String,
    bre: String,
}

#[derive(Debug, Serialize)]
struct ClassifyResponse {
    ame: String,
    bre: String,
    group: u8,
    category: Category,
}

async fn lexicon_classify(
    Json(req): Json<ClassifyRequest>,
) -> Result<Json<ClassifyResponse>, ApiError> {
    let (group, category) =
        classify_pair(&req.ame, &req.bre).map_err(|e: LexiconError| match e {
            LexiconError::Io(io) => ApiError::Internal(io.to_string()),
            other => ApiError::BadRequest(other.to_string()),
        })?;
    Ok(Json(ClassifyResponse { ame: req.ame, bre: req.bre, group, category }))
}

#[derive(Debug, Serialize)]
struct ContainsResponse {
    token: String,
    present: bool,
    /// Every pair the token occupies, with the side it sits on.
    occurrences: Vec<Occurrence>,
}

#[derive(Debug, Serialize)]
struct Occurrence {
    side: Side,
    #[serde(flatten)]
    pair: VariantPair,
}

async fn lexicon_contains(
    State(state): State<Arc<AppState>>,
    Path(token): Path<String>,
) -> Json<ContainsResponse> {
    let token = token.to_lowercase();
    let occurrences: Vec<Occurrence> = state
        .lexicon
        .occurrences(&token)
        .iter()
        .map(|&(idx, side)| Occurrence { side, pair: state.lexicon.pairs()[idx as usize].clone() })
        .collect();
    Json(ContainsResponse { token, present: !occurrences.is_empty(), occurrences })
}

#[derive(Debug, Serialize)]
struct LexiconStats {
    pairs: usize,
    distinct_words: usize,
    rows_skipped: usize,
    by_category: BTreeMap<String, usize>,
    by_group: BTreeMap<u8, usize>,
}

async fn lexicon_stats(State(state): State<Arc<AppState>>) -> Json<LexiconStats> {
    let mut by_category = BTreeMap::new();
    let mut by_group = BTreeMap::new();
    for pair in state.lexicon.pairs() {
        *by_category.entry(pair.category.to_string()).or_insert(0) += 1;
        *by_group.entry(pair.group).or_insert(0) += 1;
    }
    Json(LexiconStats {
        pairs: state.lexicon.len(),
        distinct_words: state.lexicon.words().count(),
        rows_skipped: state.lexicon.rows_skipped(),
        by_category,
        by_group,
    })
}

#[derive(Debug, Deserialize)]
struct AuditRequest {
    documents: Vec<String>,
    #[serde(default)]
    strict: bool,
    /// When present, a seeded uniform sample of documents is also run
    /// through the text scorer.
    #[serde(default)]
    sample: Option<AuditSample>,
}

#[derive(Debug, Deserialize)]
struct AuditSample {
    limit: usize,
    seed: u64,
}

async fn audit(
    State(state): State<Arc<AppState>>,
    Json(req): Json<AuditRequest>,
) -> Result<Json<AuditReport>, ApiError> {
    let dialign = req.sample.map(|s| SampleOptions {
        provider: &state.provider,
        lexicon: &state.lexicon,
        scoring: state.scoring.clone(),
        sample_limit: s.limit,
        seed: s.seed,
    });
    let documents = req.documents.into_iter().map(Ok::<String, AuditError>);
    let report =
        audit_corpus(documents, &state.lexicon, AuditOptions { strict: req.strict, dialign })
            .await?;
    Ok(Json(report))
}

#[derive(Debug, Deserialize)]
struct WilcoxonRequest {
    differences: Vec<f64>,
    /// Forces the exact or normal-approximation path; the size-based
    /// default applies when absent.
    #[serde(default)]
    method: Option<Method>,
}

async fn wilcoxon(Json(req): Json<WilcoxonRequest>) -> Result<Json<WilcoxonResult>, ApiError> {
    let result = match req.method {
        Some(method) => wilcoxon_with_method(&req.differences, method),
        None => wilcoxon_signed_rank(&req.differences),
    };
    result.map(Json).map_err(|e: WilcoxonError| ApiError::Unprocessable(e.to_string()))
}

#[derive(Debug, Deserialize)]
struct TokfairRequest {
    /// Combined tokenizer description: {"vocab": {...}, "merges": [...],
    /// optional "normalization" and "boundary_marker"}.
    tokenizer: serde_json::Value,
}

async fn tokfair(
    State(state): State<Arc<AppState>>,
    Json(req): Json<TokfairRequest>,
) -> Result<Json<FertilityReport>, ApiError> {
    let tokenizer =
        SubwordTokenizer::from_json_str(&req.tokenizer.to_string()).map_err(|e| match e {
            SubwordError::Io(io) => ApiError::Internal(io.to_string()),
            other => ApiError::BadRequest(other.to_string()),
        })?;
    Ok(Json(analyze_tokenizer(&tokenizer, &state.lexicon)))
}

async fn cache_stats(State(state): State<Arc<AppState>>) -> Json<CacheStats> {
    Json(state.provider.cache_stats())
}

#[derive(Debug, Serialize)]
struct PurgeResponse {
    purged: usize,
}

async fn cache_purge(
    State(state): State<Arc<AppState>>,
) -> Result<Json<PurgeResponse>, ApiError> {
    let purged = state.provider.purge_cache().map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(PurgeResponse { purged }))
}
