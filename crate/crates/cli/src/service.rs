//! HTTP service: studies are uploaded once into an in-memory session and then
//! queried with different report options.

use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};
use std::time::SystemTime;

use axum::body::Bytes;
use axum::extract::multipart::{Multipart, MultipartError, MultipartRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use jointvip::{
    post_summarize, post_tabulate, round3, summarize, tabulate, PlotSpec, RoleSpec, SmdFlavor, TransformSpec,
};
use lru::LruCache;
use serde::{Deserialize, Serialize};
use serde_json::json;
use serde_json::value::RawValue;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::cli::plot_text;
use crate::error::CliError;
use crate::pipeline::{Analysis, Options};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub cors_origins: Vec<String>,
    pub max_sessions: usize,
    pub max_body_bytes: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig { cors_origins: vec!["http://localhost:5173".into()], max_sessions: 64, max_body_bytes: 64 << 20 }
    }
}

#[derive(Debug)]
pub struct SessionRecord {
    pub session_id: String,
    pub created_at: SystemTime,
    pub analysis: Analysis,
}

pub struct AppState {
    sessions: Mutex<LruCache<String, Arc<SessionRecord>>>,
}

impl AppState {
    fn new(cap: NonZeroUsize) -> Self {
        AppState { sessions: Mutex::new(LruCache::new(cap)) }
    }

    fn sessions(&self) -> std::sync::MutexGuard<'_, LruCache<String, Arc<SessionRecord>>> {
        // records are immutable Arcs, so a panic elsewhere cannot leave one half-written
        self.sessions.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    fn get(&self, id: &str) -> Result<Arc<SessionRecord>, ApiError> {
        self.sessions().get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    fn put(&self, record: SessionRecord) {
        self.sessions().put(record.session_id.clone(), Arc::new(record));
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "code": code, "message": message.into() }) }
    }

    fn not_found(id: &str) -> Self {
        let mut err = Self::new(StatusCode::NOT_FOUND, "SessionNotFound", format!("no session `{id}`"));
        err.body["detail"] = json!({ "session_id": id });
        err
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", message)
    }
}

impl From<jointvip::Error> for ApiError {
    fn from(e: jointvip::Error) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, body: e.to_json() }
    }
}

impl From<MultipartError> for ApiError {
    fn from(e: MultipartError) -> Self {
        let status = e.status();
        if status == StatusCode::PAYLOAD_TOO_LARGE {
            Self::new(status, "PayloadTooLarge", e.body_text())
        } else {
            Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", e.body_text())
        }
    }
}

impl From<MultipartRejection> for ApiError {
    fn from(e: MultipartRejection) -> Self {
        Self::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn raw(text: String) -> Box<RawValue> {
    RawValue::from_string(text).expect("model serializer emits valid JSON")
}

async fn read_fields(multipart: Result<Multipart, MultipartRejection>, names: &[&str]) -> ApiResult<Vec<Bytes>> {
    let mut multipart = multipart?;
    let mut found: Vec<Option<Bytes>> = vec![None; names.len()];
    while let Some(field) = multipart.next_field().await? {
        let name = field.name().unwrap_or_default().to_string();
        let data = field.bytes().await?;
        if let Some(i) = names.iter().position(|n| *n == name) {
            found[i] = Some(data);
        }
    }
    names
        .iter()
        .zip(found)
        .map(|(name, data)| data.ok_or_else(|| ApiError::bad_request(format!("missing multipart field `{name}`"))))
        .collect()
}

fn utf8(name: &str, data: Bytes) -> ApiResult<String> {
    String::from_utf8(data.to_vec()).map_err(|_| ApiError::bad_request(format!("field `{name}` is not UTF-8 text")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> jointvip::Result<T> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(result) => Ok(result?),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string())),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RolesBody {
    treatment: String,
    outcome: String,
    covariates: Vec<String>,
    #[serde(default)]
    weight: Option<String>,
    #[serde(default)]
    transforms: TransformSpec,
}

#[derive(Serialize)]
struct SessionResponse {
    session_id: String,
    model: Box<RawValue>,
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    multipart: Result<Multipart, MultipartRejection>,
) -> ApiResult<Json<SessionResponse>> {
    let mut fields = read_fields(multipart, &["pilot", "analysis", "roles"]).await?.into_iter();
    let pilot = utf8("pilot", fields.next().unwrap())?;
    let analysis = utf8("analysis", fields.next().unwrap())?;
    let roles: RolesBody = serde_json::from_slice(&fields.next().unwrap())
        .map_err(|e| jointvip::Error::InvalidRoles(format!("roles JSON: {e}")))?;
    let spec = RoleSpec::new(roles.treatment, roles.outcome, roles.covariates, roles.weight)?;
    let transforms = roles.transforms;
    let analysis = blocking(move || Analysis::from_csv(&pilot, &analysis, spec, transforms)).await?;
    let session_id = uuid::Uuid::new_v4().to_string();
    let model = raw(analysis.model_json(SmdFlavor::default()));
    state.put(SessionRecord { session_id: session_id.clone(), created_at: SystemTime::now(), analysis });
    Ok(Json(SessionResponse { session_id, model }))
}

async fn attach_post(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    multipart: Result<Multipart, MultipartRejection>,
) -> ApiResult<Json<SessionResponse>> {
    let record = state.get(&id)?;
    let post_csv = utf8("post", read_fields(multipart, &["post"]).await?.remove(0))?;
    let base = record.analysis.clone();
    let analysis = blocking(move || base.with_post(&post_csv)).await?;
    let model = raw(analysis.model_json(SmdFlavor::default()));
    state.put(SessionRecord { session_id: id.clone(), created_at: record.created_at, analysis });
    Ok(Json(SessionResponse { session_id: id, model }))
}

fn parse_bool(key: &str, value: &str) -> ApiResult<bool> {
    match value {
        "true" | "1" => Ok(true),
        "false" | "0" => Ok(false),
        _ => Err(jointvip::Error::InvalidOption(format!("{key} must be true or false, got `{value}`")).into()),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> ApiResult<T> {
    value.parse().map_err(|_| jointvip::Error::InvalidOption(format!("{key} is not a number: `{value}`")).into())
}

fn parse_options(params: &[(String, String)]) -> ApiResult<Options> {
    let mut opts = Options::default();
    for (key, value) in params {
        match key.as_str() {
            "smd" => opts.report.smd_flavor = value.parse()?,
            "abs" => opts.report.use_abs = parse_bool(key, value)?,
            "bias_tol" => opts.report.bias_tol = parse_num(key, value)?,
            "post_bias_tol" => opts.post_bias_tol = parse_num(key, value)?,
            _ => {}
        }
    }
    Ok(Options::new(opts.report.smd_flavor, opts.report.use_abs, opts.report.bias_tol, opts.post_bias_tol)?)
}

fn measures_body(analysis: &Analysis, opts: &Options) -> ApiResult<String> {
    let report = &opts.report;
    let summary = summarize(&analysis.model, report);
    let rows = tabulate(&analysis.model, report);
    let mut body = json!({
        "options": {
            "smd": report.smd_flavor.as_str(),
            "abs": report.use_abs,
            "bias_tol": report.bias_tol,
            "post_bias_tol": opts.post_bias_tol,
        },
        "summary": {
            "max_abs_bias": round3(summary.max_abs_bias),
            "n_above_tol": summary.n_above_tol,
            "n_plottable": summary.n_plottable,
            "bias_tol": summary.bias_tol,
            "lines": summary.lines(),
        },
        "table": rows.iter().map(|r| json!({ "name": r.name, "bias": round3(r.bias) })).collect::<Vec<_>>(),
        "labels": rows.iter().map(|r| r.name.as_str()).collect::<Vec<_>>(),
    });
    if let Some(post) = &analysis.post {
        let report = post_summarize(post, report, opts.post_bias_tol)?;
        let rows = post_tabulate(post, &opts.report);
        body["post"] = json!({
            "max_abs_post_bias": round3(report.max_abs_post_bias),
            "n_post_above_tol": report.n_post_above_tol,
            "post_bias_tol": report.post_bias_tol,
            "lines": report.post_lines(),
            "table": rows
                .iter()
                .map(|r| json!({ "name": r.name, "bias": round3(r.bias), "post_bias": round3(r.post_bias) }))
                .collect::<Vec<_>>(),
        });
    }
    // the model goes in verbatim so its bytes match the CLI output
    let rest = serde_json::to_string(&body).expect("report values are finite");
    Ok(format!("{{\"model\":{},{}", analysis.model_json(report.smd_flavor), &rest[1..]))
}

async fn measures(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<Vec<(String, String)>>,
) -> ApiResult<Response> {
    let opts = parse_options(&params)?;
    let record = state.get(&id)?;
    let body = measures_body(&record.analysis, &opts)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

fn plot_spec(params: &[(String, String)]) -> ApiResult<PlotSpec> {
    let opts = parse_options(params)?;
    let mut spec = PlotSpec::with_options(opts.report);
    let mut levels = Vec::new();
    for (key, value) in params {
        match key.as_str() {
            "trails" => spec.show_post_trails = parse_bool(key, value)?,
            "label_all" => spec.label_above_tol_only = !parse_bool(key, value)?,
            "width" => spec.width_px = parse_num(key, value)?,
            "height" => spec.height_px = parse_num(key, value)?,
            "level" => levels.push(parse_num(key, value)?),
            _ => {}
        }
    }
    if !levels.is_empty() {
        spec.curve_levels = Some(levels);
    }
    spec.validate()?;
    Ok(spec)
}

async fn plot(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(params): Query<Vec<(String, String)>>,
) -> ApiResult<Response> {
    let spec = plot_spec(&params)?;
    let record = state.get(&id)?;
    let svg = plot_text(&record.analysis, &spec).map_err(|e| match e {
        CliError::Validation(e) => ApiError::from(e),
        other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", other.to_string()),
    })?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

fn cors(origins: &[String]) -> Result<CorsLayer, CliError> {
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        let values = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| CliError::Usage(format!("invalid CORS origin `{o}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(values)
    };
    Ok(CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE]))
}

pub fn router(config: &ServiceConfig) -> Result<Router, CliError> {
    let cap = NonZeroUsize::new(config.max_sessions)
        .ok_or_else(|| CliError::Usage("max sessions must be at least 1".into()))?;
    let state = Arc::new(AppState::new(cap));
    Ok(Router::new()
        .route("/api/health", get(health))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}/measures", get(measures))
        .route("/api/sessions/{id}/post", post(attach_post))
        .route("/api/sessions/{id}/plot.svg", get(plot))
        .layer(DefaultBodyLimit::max(config.max_body_bytes))
        .layer(cors(&config.cors_origins)?)
        .with_state(state))
}

pub fn serve(addr: SocketAddr, config: ServiceConfig) -> Result<(), CliError> {
    let app = router(&config)?;
    let runtime = tokio::runtime::Runtime::new()
        .map_err(|e| CliError::io("start runtime for", std::path::Path::new("service"), e))?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::io("bind", std::path::Path::new(&addr.to_string()), e))?;
        eprintln!("listening on http://{}", listener.local_addr().map(|a| a.to_string()).unwrap_or_default());
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::io("serve on", std::path::Path::new(&addr.to_string()), e))
    })
}
