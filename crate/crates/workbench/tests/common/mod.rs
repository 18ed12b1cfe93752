#![allow(dead_code)]

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use grammar_forge::style::StyleRegistry;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;
use workbench::service::router;
use workbench::session::Workbench;

pub fn fixture_path(name: &str) -> String {
    format!("{}/../core/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> String {
    let path = fixture_path(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// A service whose style registry lives in `dir`.
pub fn app(dir: &std::path::Path) -> Router {
    router(Arc::new(Workbench::new(StyleRegistry::open(dir).unwrap())))
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into_owned()))
    };
    (status, v)
}

/// Creates a session on the fixture metamodel and returns its id.
pub async fn session(app: &Router) -> String {
    let (status, v) = call(
        app,
        Method::POST,
        "/sessions",
        Some(serde_json::json!({ "metamodel": fixture("mini_eatxt.mm.json"), "seed": 7, "count": 4 })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}
