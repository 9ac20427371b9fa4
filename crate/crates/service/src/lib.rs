//! HTTP/JSON front end for the interactive planning loop.
//!
//! One planning state per process; every mutating request takes the state
//! lock for its whole duration, so requests are applied one at a time.

use std::future::Future;
use std::io::{Cursor, Write};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use plateforge::baseline::{adjust_marker, BaselineError, DEFAULT_STEP_MM};
use plateforge::catalog::CatalogError;
use plateforge::implant::{generate_implant, CanonicalRings, ImplantError};
use plateforge::pipeline::{seed, PlanError};
use plateforge::session::SessionError;
use plateforge::stl::{save_stl, StlFormat};
use plateforge::{Anatomy, Baseline, Catalog, PlanRequest, SeedFrame, Session, Vec3};

pub const DEFAULT_WHEEL_STEP_DEG: f64 = 5.0;

/// Mutable part of the service.
#[derive(Debug)]
pub struct PlanningState {
    pub session: Session,
    pub click: Option<Vec3>,
    pub frame: Option<SeedFrame>,
    pub baseline: Option<Baseline>,
    pub model_id: Option<String>,
    pub angle_deg: f64,
    pub step_mm: f64,
    pub wheel_step_deg: f64,
}

impl PlanningState {
    pub fn new(mesh_ref: &str) -> Self {
        Self {
            session: Session::new(mesh_ref),
            click: None,
            frame: None,
            baseline: None,
            model_id: None,
            angle_deg: 0.0,
            step_mm: DEFAULT_STEP_MM,
            wheel_step_deg: DEFAULT_WHEEL_STEP_DEG,
        }
    }
}

pub struct AppState {
    anatomy: Option<Anatomy>,
    mesh_stl: Vec<u8>,
    catalog: Catalog,
    planning: Mutex<PlanningState>,
}

impl AppState {
    pub fn new(anatomy: Option<Anatomy>, catalog: Catalog, mesh_ref: &str) -> Arc<Self> {
        let mesh_stl = anatomy.as_ref().map(|a| save_stl(&a.mesh, StlFormat::Binary)).unwrap_or_default();
        Arc::new(Self {
            anatomy,
            mesh_stl,
            catalog,
            planning: Mutex::new(PlanningState::new(mesh_ref)),
        })
    }

    fn lock(&self) -> MutexGuard<'_, PlanningState> {
        self.planning.lock().unwrap_or_else(|p| p.into_inner())
    }
}

/// Error response with a JSON body.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.body[key] = value;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<PlanError> for ApiError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Catalog(CatalogError::UnknownModel { ref available, .. }) => {
                let ids = json!(available);
                ApiError::new(StatusCode::BAD_REQUEST, e.to_string()).with("available", ids)
            }
            PlanError::Catalog(c) => ApiError::new(StatusCode::BAD_REQUEST, c.to_string()),
            PlanError::Baseline(b) => b.into(),
            PlanError::Implant(i) => i.into(),
        }
    }
}

impl From<BaselineError> for ApiError {
    fn from(e: BaselineError) -> Self {
        let status = match e {
            BaselineError::IndexOutOfRange { .. } | BaselineError::InvalidStep { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<ImplantError> for ApiError {
    fn from(e: ImplantError) -> Self {
        let err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string());
        match e {
            ImplantError::BaselineTooShort { required, available } => err
                .with("required_mm", json!(required))
                .with("available_mm", json!(available)),
            _ => err,
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::NothingToSave | SessionError::EmptySession => StatusCode::CONFLICT,
            SessionError::Malformed(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn anatomy(state: &AppState) -> ApiResult<&Anatomy> {
    state
        .anatomy
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no mesh loaded"))
}

fn conflict(message: &str) -> ApiError {
    ApiError::new(StatusCode::CONFLICT, message)
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/mesh", get(get_mesh))
        .route("/catalog", get(get_catalog))
        .route("/seed", post(post_seed))
        .route("/rotate", post(post_rotate))
        .route("/wheel_step", post(post_wheel_step))
        .route("/adjust_marker", post(post_adjust_marker))
        .route("/generate", post(post_generate))
        .route("/save", post(post_save))
        .route("/export", post(post_export))
        .with_state(state)
}

/// Serves `app` on `listener` until `shutdown` resolves.
pub async fn run<F>(listener: tokio::net::TcpListener, app: Router, shutdown: F) -> std::io::Result<()>
where
    F: Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

fn header_value(v: impl ToString) -> HeaderValue {
    HeaderValue::from_str(&v.to_string()).expect("ascii header")
}

fn binary(body: Vec<u8>, content_type: &'static str, extra: Vec<(&'static str, String)>) -> Response {
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    for (k, v) in extra {
        headers.insert(HeaderName::from_static(k), header_value(v));
    }
    (headers, body).into_response()
}

async fn get_mesh(State(state): State<Arc<AppState>>) -> ApiResult<Response> {
    let a = anatomy(&state)?;
    let bb = a.mesh.bounding_box();
    let bbox = json!([bb.min, bb.max]).to_string();
    Ok(binary(
        state.mesh_stl.clone(),
        "application/octet-stream",
        vec![("x-face-count", a.mesh.face_count().to_string()), ("x-bbox", bbox)],
    ))
}

async fn get_catalog(State(state): State<Arc<AppState>>) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], state.catalog.to_json()).into_response()
}

fn baseline_response(b: &Baseline) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], b.to_json()).into_response()
}

/// Recomputes frame and baseline from the stored click, angle, model and step.
fn recompute(state: &AppState, p: &mut PlanningState) -> ApiResult<Response> {
    let anatomy = anatomy(state)?;
    let (click, model_id) = match (p.click, &p.model_id) {
        (Some(c), Some(m)) => (c, m.clone()),
        _ => return Err(conflict("no seed placed")),
    };
    let req = PlanRequest {
        click,
        wheel_angle: p.angle_deg.to_radians(),
        model_id,
        step: p.step_mm,
    };
    let (frame, baseline) = seed(anatomy, &state.catalog, &req)?;
    let resp = baseline_response(&baseline);
    p.frame = Some(frame);
    p.baseline = Some(baseline);
    Ok(resp)
}

#[derive(Deserialize)]
struct SeedBody {
    point: [f64; 3],
    #[serde(default)]
    angle_deg: f64,
    model_id: String,
    step_mm: Option<f64>,
}

async fn post_seed(State(state): State<Arc<AppState>>, Json(body): Json<SeedBody>) -> ApiResult<Response> {
    anatomy(&state)?;
    state.catalog.find(&body.model_id).map_err(PlanError::from)?;
    let [x, y, z] = body.point;
    let angle = body.angle_deg;
    if !(angle.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "point and angle must be finite"));
    }
    let mut p = state.lock();
    let previous = (p.click, p.model_id.clone(), p.angle_deg, p.step_mm);
    p.click = Some(Vec3::new(x, y, z));
    p.model_id = Some(body.model_id);
    p.angle_deg = angle.rem_euclid(360.0);
    p.step_mm = body.step_mm.unwrap_or(DEFAULT_STEP_MM);
    // A failed seed leaves the previous one in place.
    recompute(&state, &mut p).inspect_err(|_| {
        (p.click, p.model_id, p.angle_deg, p.step_mm) = previous;
    })
}

#[derive(Deserialize)]
struct RotateBody {
    delta_ticks: i64,
}

async fn post_rotate(State(state): State<Arc<AppState>>, Json(body): Json<RotateBody>) -> ApiResult<Response> {
    let mut p = state.lock();
    if p.frame.is_none() {
        return Err(conflict("no seed placed"));
    }
    let previous = p.angle_deg;
    p.angle_deg = (previous + body.delta_ticks as f64 * p.wheel_step_deg).rem_euclid(360.0);
    recompute(&state, &mut p).inspect_err(|_| p.angle_deg = previous)
}

#[derive(Deserialize)]
struct WheelStepBody {
    degrees: f64,
}

async fn post_wheel_step(State(state): State<Arc<AppState>>, Json(body): Json<WheelStepBody>) -> ApiResult<Json<Value>> {
    if !(body.degrees.is_finite() && body.degrees > 0.0) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "wheel step must be a positive number of degrees"));
    }
    let mut p = state.lock();
    p.wheel_step_deg = body.degrees;
    Ok(Json(json!({ "wheel_step_deg": body.degrees })))
}

#[derive(Deserialize)]
struct AdjustBody {
    index: usize,
    point: [f64; 3],
}

async fn post_adjust_marker(State(state): State<Arc<AppState>>, Json(body): Json<AdjustBody>) -> ApiResult<Response> {
    let a = anatomy(&state)?;
    let mut p = state.lock();
    let b = p.baseline.as_ref().ok_or_else(|| conflict("no baseline"))?;
    let [x, y, z] = body.point;
    let moved = adjust_marker(b, &a.index, body.index, Vec3::new(x, y, z))?;
    let resp = baseline_response(&moved);
    p.baseline = Some(moved);
    Ok(resp)
}

async fn post_generate(State(state): State<Arc<AppState>>) -> ApiResult<Response> {
    let mut p = state.lock();
    let b = p.baseline.as_ref().ok_or_else(|| conflict("no baseline"))?;
    let model = state.catalog.find(&b.model_id).map_err(PlanError::from)?;
    let implant = generate_implant(b, model, &CanonicalRings)?;
    let report = json!({
        "ring_count": implant.placements.len(),
        "triangle_count": implant.mesh.face_count(),
        "span_mm": b.arc_length(),
    });
    let body = save_stl(&implant.mesh, StlFormat::Binary);
    p.session.set_current(implant);
    Ok(binary(
        body,
        "application/octet-stream",
        vec![
            ("x-ring-count", report["ring_count"].to_string()),
            ("x-triangle-count", report["triangle_count"].to_string()),
            ("x-span-mm", report["span_mm"].to_string()),
            ("x-plan-report", report.to_string()),
        ],
    ))
}

async fn post_save(State(state): State<Arc<AppState>>) -> ApiResult<Json<Value>> {
    let mut p = state.lock();
    p.session.save_current()?;
    Ok(Json(json!({ "saved": p.session.saved().len() })))
}

#[derive(Deserialize, Default, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum ExportMode {
    #[default]
    Combined,
    PerImplant,
}

#[derive(Deserialize, Default)]
struct ExportBody {
    #[serde(default)]
    mode: ExportMode,
}

async fn post_export(State(state): State<Arc<AppState>>, body: Option<Json<ExportBody>>) -> ApiResult<Response> {
    let mode = body.map(|Json(b)| b.mode).unwrap_or_default();
    let export = state.lock().session.export_all(StlFormat::Binary)?;
    let count = export.files.len().to_string();
    Ok(match mode {
        ExportMode::Combined => binary(export.combined, "application/octet-stream", vec![("x-implant-count", count)]),
        ExportMode::PerImplant => {
            let zip = zip_files(&export.files)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            binary(zip, "application/zip", vec![("x-implant-count", count)])
        }
    })
}

/// Uncompressed archive with fixed timestamps, so identical input gives identical bytes.
pub fn zip_files(files: &[(String, Vec<u8>)]) -> zip::result::ZipResult<Vec<u8>> {
    let mut w = zip::ZipWriter::new(Cursor::new(Vec::new()));
    let opts = zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Stored);
    for (name, bytes) in files {
        w.start_file(name.as_str(), opts)?;
        w.write_all(bytes)?;
    }
    Ok(w.finish()?.into_inner())
}
