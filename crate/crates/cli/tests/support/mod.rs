//! Helpers for driving the binary and the router from tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;

pub const BOUNDARY: &str = "jointvip-test-boundary";

pub fn lalonde_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/lalonde")
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn jointvip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jointvip")).args(args).output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

pub fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    let line = text.lines().last().expect("error JSON on stderr");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

pub fn multipart(fields: &[(&str, &str)]) -> (String, Vec<u8>) {
    let mut body = String::new();
    for (name, value) in fields {
        body.push_str(&format!(
            "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"{name}\"\r\n\r\n{value}\r\n"
        ));
    }
    body.push_str(&format!("--{BOUNDARY}--\r\n"));
    (format!("multipart/form-data; boundary={BOUNDARY}"), body.into_bytes())
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: String,
    pub headers: axum::http::HeaderMap,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn text(&self) -> String {
        String::from_utf8(self.body.clone()).unwrap()
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.text()))
    }
}

pub async fn send(app: &Router, req: Request<Body>) -> Reply {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let headers = resp.headers().clone();
    let content_type = headers.get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, content_type, headers, body }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

pub async fn post_form(app: &Router, uri: &str, fields: &[(&str, &str)]) -> Reply {
    let (ct, body) = multipart(fields);
    send(app, Request::post(uri).header("content-type", ct).body(Body::from(body)).unwrap()).await
}

pub fn roles_json(treatment: &str, outcome: &str, covariates: &[String]) -> String {
    serde_json::json!({ "treatment": treatment, "outcome": outcome, "covariates": covariates }).to_string()
}

/// Creates a session and returns its id.
pub async fn upload(app: &Router, pilot: &str, analysis: &str, roles: &str) -> String {
    let reply = post_form(app, "/api/sessions", &[("pilot", pilot), ("analysis", analysis), ("roles", roles)]).await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.text());
    reply.json()["session_id"].as_str().unwrap().to_string()
}

pub async fn upload_lalonde(app: &Router) -> String {
    let dir = lalonde_dir();
    let covariates: Vec<String> = ["age", "educ", "black", "hisp", "marr", "nodegree", "log_re74", "log_re75"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    upload(
        app,
        &read(&dir.join("pilot.csv")),
        &read(&dir.join("analysis.csv")),
        &roles_json("treat", "log_re78", &covariates),
    )
    .await
}

/// The `model` member of a measures response, as raw bytes.
pub fn raw_model(body: &[u8]) -> String {
    #[derive(serde::Deserialize)]
    struct Envelope<'a> {
        #[serde(borrow)]
        model: &'a serde_json::value::RawValue,
    }
    let env: Envelope = serde_json::from_slice(body).unwrap();
    env.model.get().to_string()
}
