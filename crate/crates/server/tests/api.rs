//! Router-level tests: every endpoint exercised in-process through
//! `tower::ServiceExt::oneshot` against a mock frequency transport.

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use dialign_core::alignment::ScoringConfig;
use dialign_core::lexicon::Lexicon;
use dialign_core::ngram::{
    DiskCache, FrequencyProvider, MockTransport, NgramTransport, ProviderConfig,
};
use dialign_server::{router, AppState};

fn app() -> (Router, Arc<MockTransport>, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let mock = Arc::new(MockTransport::new());
    mock.seed_pair("color scheme", 9e-7, 1e-7);
    mock.seed_pair("colour scheme", 1e-7, 8e-7);
    let provider = FrequencyProvider::new(
        Arc::clone(&mock) as Arc<_>,
        DiskCache::open(dir.path().join("freqs.jsonl")).unwrap(),
        ProviderConfig::unthrottled(),
    );
    let state = AppState {
        lexicon: Lexicon::seed(),
        provider,
        scoring: ScoringConfig::default(),
    };
    (router(Arc::new(state)), mock, dir)
}

async fn request(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(v) => builder
            .header("content-type", "application/json")
            .body(Body::from(v.to_string()))
            .unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

#[tokio::test]
async fn health_reports_ok() {
    let (app, _, _dir) = app();
    let (status, body) = request(&app, "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
}

#[tokio::test]
async fn score_returns_the_alignment_result() {
    let (app, _, _dir) = app();
    let (status, body) =
        request(&app, "POST", "/v1/score", Some(json!({ "text": "color scheme" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["label"], "ame");
    assert_eq!(body["p_ame"], 1.0);
    assert_eq!(body["retained"], 1);
}

#[tokio::test]
async fn score_rejects_an_invalid_config_override() {
    let (app, _, _dir) = app();
    let config = json!({
        "n_min": 3, "n_max": 2, "year_start": 1950, "year_end": 2022,
        "smoothing": 0, "beta": 1.5
    });
    let (status, body) = request(
        &app,
        "POST",
        "/v1/score",
        Some(json!({ "text": "color scheme", "config": config })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("1..=5"));
}

#[tokio::test]
async fn batch_scores_in_order_and_enforces_the_limit() {
    let (app, _, _dir) = app();
    let (status, body) = request(
        &app,
        "POST",
        "/v1/score/batch",
        Some(json!({ "texts": ["color scheme", "colour scheme"] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let results = body["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["label"], "ame");
    assert_eq!(results[1]["label"], "bre");

    let texts: Vec<String> = (0..300).map(|i| format!("text {i}")).collect();
    let (status, body) =
        request(&app, "POST", "/v1/score/batch", Some(json!({ "texts": texts }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("256"));
}

#[tokio::test]
async fn classify_labels_pairs_and_rejects_identical_forms() {
    let (app, _, _dir) = app();
    let (status, body) = request(
        &app,
        "POST",
        "/v1/lexicon/classify",
        Some(json!({ "ame": "color", "bre": "colour" })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["group"], 1);
    assert_eq!(body["category"], "orthographic");

    let (status, _) = request(
        &app,
        "POST",
        "/v1/lexicon/classify",
        Some(json!({ "ame": "color", "bre": "color" })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn contains_is_case_lenient_and_reports_sides() {
    let (app, _, _dir) = app();
    let (status, body) = request(&app, "GET", "/v1/lexicon/contains/Colour", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["token"], "colour");
    assert_eq!(body["present"], true);
    assert_eq!(body["occurrences"][0]["side"], "bre");
    assert_eq!(body["occurrences"][0]["ame"], "color");

    let (_, body) = request(&app, "GET", "/v1/lexicon/contains/zzz", None).await;
    assert_eq!(body["present"], false);
}

#[tokio::test]
async fn lexicon_stats_cover_all_pairs() {
    let (app, _, _dir) = app();
    let (status, body) = request(&app, "GET", "/v1/lexicon/stats", None).await;
    assert_eq!(status, StatusCode::OK);
    let pairs = body["pairs"].as_u64().unwrap();
    assert!(pairs > 50);
    let by_category: u64 =
        body["by_category"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(by_category, pairs);
    assert!(body["by_group"]["1"].as_u64().unwrap() > 0);
}

#[tokio::test]
async fn audit_counts_a_small_corpus() {
    let (app, _, _dir) = app();
    let (status, body) = request(
        &app,
        "POST",
        "/v1/audit",
        Some(json!({ "documents": ["the colour of the centre", "color color centre"] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["documents_seen"], 2);
    let orthographic = &body["per_category"]["orthographic"];
    assert_eq!(orthographic["pairs_counted"], 2);
    assert!(body["per_pair"].as_array().unwrap().iter().any(|p| p["f_bre"] == 1 && p["f_ame"] == 2));
}

#[tokio::test]
async fn wilcoxon_reports_the_exact_tail_and_rejects_degenerate_input() {
    let (app, _, _dir) = app();
    let (status, body) = request(
        &app,
        "POST",
        "/v1/wilcoxon",
        Some(json!({ "differences": [1.0, 2.0, 3.0, 4.0, 5.0] })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["p_one_sided"], 0.03125);
    assert_eq!(body["method"], "exact");

    let (status, _) =
        request(&app, "POST", "/v1/wilcoxon", Some(json!({ "differences": [0.0, 0.0] }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn tokfair_analyzes_an_inline_tokenizer() {
    let (app, _, _dir) = app();
    let tokenizer: Value =
        serde_json::from_str(include_str!("../../core/tests/fixtures/toy_tokenizer.json"))
            .unwrap();
    let (status, body) =
        request(&app, "POST", "/v1/tokfair", Some(json!({ "tokenizer": tokenizer }))).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["per_category"]["orthographic"]["fertility_ame"].as_f64().unwrap() >= 1.0);
    assert_eq!(body["alpha"], 0.01);

    let (status, _) =
        request(&app, "POST", "/v1/tokfair", Some(json!({ "tokenizer": { "merges": [] } }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn cache_endpoints_report_and_purge() {
    let (app, mock, _dir) = app();
    let (_, body) = request(&app, "GET", "/v1/cache/stats", None).await;
    assert_eq!(body["entries"], 0);

    request(&app, "POST", "/v1/score", Some(json!({ "text": "color scheme" }))).await;
    let calls_after_first = mock.calls();
    assert!(calls_after_first > 0);
    let (_, body) = request(&app, "GET", "/v1/cache/stats", None).await;
    assert!(body["entries"].as_u64().unwrap() > 0);

    // Warm cache: scoring the same text again stays off the network.
    request(&app, "POST", "/v1/score", Some(json!({ "text": "color scheme" }))).await;
    assert_eq!(mock.calls(), calls_after_first);

    let (status, body) = request(&app, "POST", "/v1/cache/purge", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body["purged"].as_u64().unwrap() > 0);
    let (_, body) = request(&app, "GET", "/v1/cache/stats", None).await;
    assert_eq!(body["entries"], 0);
}
