mod common;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use ermcda_core::pipeline::{apply_patch, load_value, run_with, PatchOp, RunOptions};
use ermcda_service::api::router;
use ermcda_service::SessionStore;
use http_body_util::BodyExt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client(axum::Router);

impl Client {
    fn new() -> Self {
        Client(router(Arc::new(SessionStore::new())))
    }

    async fn send(&self, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
        let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_default()).unwrap();
        let resp = self.0.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
        (status, value)
    }

    async fn create(&self, name: &str) -> String {
        let (status, body) = self.send(Method::POST, "/api/scenarios", Some(common::scenario_doc(name))).await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        body["id"].as_str().unwrap().to_string()
    }
}

#[tokio::test]
async fn crud_round_trip() {
    let c = Client::new();
    let id = c.create("reference.json").await;
    let (status, doc) = c.send(Method::GET, &format!("/api/scenarios/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(doc["name"], "avalanche-sensitivity");
    let mut changed = doc.clone();
    changed["name"] = "renamed".into();
    let (status, _) = c.send(Method::PUT, &format!("/api/scenarios/{id}"), Some(changed)).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (_, doc) = c.send(Method::GET, &format!("/api/scenarios/{id}"), None).await;
    assert_eq!(doc["name"], "renamed");
}

#[tokio::test]
async fn error_statuses() {
    let c = Client::new();
    let (status, body) = c.send(Method::POST, "/api/scenarios", Some(common::scenario_doc("broken.json"))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["issues"].as_array().unwrap().len(), 3);
    assert_eq!(c.send(Method::GET, "/api/scenarios/missing", None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(c.send(Method::POST, "/api/scenarios/missing/run", None).await.0, StatusCode::NOT_FOUND);

    let id = c.create("reference-dsmt.json").await;
    let (status, body) = c.send(Method::POST, &format!("/api/scenarios/{id}/run"), Some(json!({"rule": "dempster"}))).await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");
    assert_eq!(c.send(Method::GET, &format!("/api/scenarios/{id}/report"), None).await.0, StatusCode::NOT_FOUND);
    let bad = json!({"patch": [{"path": "/no/such/field", "value": 1}]});
    assert_eq!(c.send(Method::POST, &format!("/api/scenarios/{id}/whatif"), Some(bad)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn run_on_invalid_draft_lists_issues() {
    let c = Client::new();
    let id = c.create("reference.json").await;
    let (status, body) = c.send(Method::PUT, &format!("/api/scenarios/{id}"), Some(common::scenario_doc("broken.json"))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["issues"].as_array().unwrap().len(), 3);
    let (status, run) = c.send(Method::POST, &format!("/api/scenarios/{id}/run"), Some(json!({}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(run["issues"], body["issues"]);
}

#[tokio::test]
async fn empty_whatif_equals_run() {
    let c = Client::new();
    let id = c.create("reference.json").await;
    let (_, run) = c.send(Method::POST, &format!("/api/scenarios/{id}/run"), Some(json!({"rule": "pcr6"}))).await;
    let (status, w) = c.send(Method::POST, &format!("/api/scenarios/{id}/whatif"), Some(json!({"patch": [], "rule": "pcr6"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(w, run);
    let (_, last) = c.send(Method::GET, &format!("/api/scenarios/{id}/report"), None).await;
    assert_eq!(last, run);
}

#[tokio::test]
async fn lower_reliability_moves_mass_to_ignorance() {
    let c = Client::new();
    let id = c.create("single-leaf.json").await;
    let (_, doc) = c.send(Method::GET, &format!("/api/scenarios/{id}"), None).await;
    assert_eq!(doc["sources"][0]["reliability"], 1.0);
    let (_, base) = c.send(Method::POST, &format!("/api/scenarios/{id}/run"), Some(json!({}))).await;
    let patch = json!({"patch": [{"path": "/sources/0/reliability", "value": 0.5}]});
    let (status, w) = c.send(Method::POST, &format!("/api/scenarios/{id}/whatif"), Some(patch)).await;
    assert_eq!(status, StatusCode::OK);
    let theta = |r: &Value| {
        let masses = r["source_fusion"][0]["bba"]["masses"].as_array().unwrap();
        masses.iter().find(|e| e["element"] == "NoS+LS+MS+HS").map(|e| e["mass"].as_f64().unwrap()).unwrap_or(0.0)
    };
    assert!(theta(&w) > theta(&base) + 0.49, "{} vs {}", theta(&w), theta(&base));
    let (_, after) = c.send(Method::GET, &format!("/api/scenarios/{id}"), None).await;
    assert_eq!(after, doc);
}

#[tokio::test]
async fn schema_is_served() {
    let c = Client::new();
    let (status, schema) = c.send(Method::GET, "/api/schema", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(schema["properties"]["schema"]["const"], "ermcda/1");
}

#[test]
fn random_whatifs_match_full_runs() {
    let store = SessionStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for name in ["reference.json", "reference-dsmt.json", "high-conflict.json"] {
        let id = store.create(common::scenario_doc(name)).unwrap();
        let doc = store.get(&id).unwrap();
        for _ in 0..40 {
            let op = common::random_patch(&mut rng, &doc);
            let opts = RunOptions::default();
            let w = store.whatif(&id, std::slice::from_ref(&op), &opts);
            let patched = load_value(apply_patch(&doc, &[op.clone()]).unwrap()).unwrap();
            let full = run_with(&patched, &opts);
            match (w, full) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap(), "{name}: {op:?}")
                }
                (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
                (a, b) => panic!("{name}: {op:?}: whatif {:?} vs run {:?}", a.err(), b.err()),
            }
            assert_eq!(store.get(&id).unwrap(), doc);
        }
    }
}

#[test]
fn multi_field_whatif_matches_full_run() {
    let store = SessionStore::new();
    let id = store.create(common::scenario_doc("reference.json")).unwrap();
    let ops = vec![
        PatchOp { path: "/hierarchy/children/0/judgments/0".into(), value: json!(0.2) },
        PatchOp { path: "/sources/1/reliability".into(), value: json!(0.3) },
        PatchOp { path: "/decision/strategy".into(), value: json!("max-pl") },
    ];
    let opts = RunOptions { rule: Some(ermcda_core::Rule::Pcr5), ..Default::default() };
    let w = store.whatif(&id, &ops, &opts).unwrap();
    let doc = store.get(&id).unwrap();
    let full = run_with(&load_value(apply_patch(&doc, &ops).unwrap()).unwrap(), &opts).unwrap();
    assert_eq!(serde_json::to_string(&w).unwrap(), serde_json::to_string(&full).unwrap());
}
