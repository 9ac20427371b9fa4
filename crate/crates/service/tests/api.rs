use std::io::Read;

use axum::body::Body;
use axum::http::{HeaderMap, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use plateforge::stl::load_stl;
use plateforge::surfaces::{plane, right_angle_wedge, unit_cube};
use plateforge::{Anatomy, Baseline, Catalog, Mesh};
use plateforge_service::{router, AppState};

fn app(mesh: Option<Mesh>) -> Router {
    let anatomy = mesh.map(|m| Anatomy::new(m).unwrap());
    router(AppState::new(anatomy, Catalog::default(), "test"))
}

fn plane_app() -> Router {
    app(Some(plane(25.0, 50)))
}

struct Reply {
    status: StatusCode,
    headers: HeaderMap,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&self.body)))
    }

    fn baseline(&self) -> Baseline {
        serde_json::from_slice(&self.body).unwrap()
    }

    fn header(&self, name: &str) -> &str {
        self.headers[name].to_str().unwrap()
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
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
    let headers = resp.headers().clone();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, headers, body }
}

async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    call(app, Method::POST, uri, Some(body)).await
}

async fn seed(app: &Router, angle: f64, model: &str) -> Reply {
    post(app, "/seed", json!({"point": [0.0, 0.0, 5.0], "angle_deg": angle, "model_id": model})).await
}

fn assert_same_points(a: &Baseline, b: &Baseline, tol: f64) {
    assert_eq!(a.points.len(), b.points.len());
    for (p, q) in a.points.iter().zip(&b.points) {
        assert!(p.position.distance(q.position) < tol);
        assert!(p.normal.distance(q.normal) < tol);
    }
}

#[tokio::test]
async fn mesh_endpoint_serves_binary_stl() {
    let app = app(Some(unit_cube()));
    let a = call(&app, Method::GET, "/mesh", None).await;
    assert_eq!(a.status, StatusCode::OK);
    assert_eq!(a.body.len(), 684);
    assert_eq!(a.header("x-face-count"), "12");
    assert_eq!(a.header("content-type"), "application/octet-stream");
    let b = call(&app, Method::GET, "/mesh", None).await;
    assert_eq!(a.body, b.body);
}

#[tokio::test]
async fn missing_mesh_is_unavailable() {
    let app = app(None);
    assert_eq!(call(&app, Method::GET, "/mesh", None).await.status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(seed(&app, 0.0, "M-4138").await.status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn catalog_lists_three_models() {
    let r = call(&plane_app(), Method::GET, "/catalog", None).await;
    assert_eq!(r.status, StatusCode::OK);
    let models = r.json()["models"].as_array().unwrap().clone();
    let summary: Vec<(String, f64)> = models
        .iter()
        .map(|m| (m["id"].as_str().unwrap().to_string(), m["overall_length_mm"].as_f64().unwrap()))
        .collect();
    assert_eq!(
        summary,
        [("M-4138".into(), 23.0), ("M-4320".into(), 29.0), ("M-4322".into(), 35.0)]
    );
}

#[tokio::test]
async fn seed_returns_baseline() {
    let app = plane_app();
    let r = seed(&app, 0.0, "M-4138").await;
    assert_eq!(r.status, StatusCode::OK);
    let doc = r.json();
    assert_eq!(doc["points"].as_array().unwrap().len(), 47);
    assert_eq!(doc["model_id"], "M-4138");
    assert_eq!(doc["truncated"], json!([false, false]));

    let full_turn = seed(&app, 360.0, "M-4138").await.baseline();
    assert_same_points(&r.baseline(), &full_turn, 1e-9);

    let bad = seed(&app, 0.0, "M-9999").await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
    let ids = bad.json()["available"].clone();
    assert_eq!(ids, json!(["M-4138", "M-4320", "M-4322"]));
}

#[tokio::test]
async fn state_machine_conflicts_before_seed() {
    let app = plane_app();
    assert_eq!(post(&app, "/rotate", json!({"delta_ticks": 1})).await.status, StatusCode::CONFLICT);
    assert_eq!(call(&app, Method::POST, "/generate", None).await.status, StatusCode::CONFLICT);
    assert_eq!(
        post(&app, "/adjust_marker", json!({"index": 0, "point": [0, 0, 0]})).await.status,
        StatusCode::CONFLICT
    );
    assert_eq!(call(&app, Method::POST, "/save", None).await.status, StatusCode::CONFLICT);
    assert_eq!(post(&app, "/export", json!({"mode": "combined"})).await.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn rotate_uses_wheel_step() {
    let app = plane_app();
    let start = seed(&app, 0.0, "M-4138").await.baseline();
    let one = post(&app, "/rotate", json!({"delta_ticks": 1})).await.baseline();
    assert!((one.seed.wheel_angle - 5f64.to_radians()).abs() < 1e-15);
    let back = post(&app, "/rotate", json!({"delta_ticks": 71})).await.baseline();
    assert_same_points(&start, &back, 1e-9);

    assert_eq!(post(&app, "/wheel_step", json!({"degrees": 90.0})).await.status, StatusCode::OK);
    let quarter = post(&app, "/rotate", json!({"delta_ticks": 1})).await.baseline();
    let d = quarter.seed.direction;
    assert!((d.y - 1.0).abs() < 1e-12, "{d:?}");
    assert_eq!(post(&app, "/wheel_step", json!({"degrees": -1.0})).await.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn generate_is_deterministic() {
    let app = plane_app();
    seed(&app, 0.0, "M-4138").await;
    let a = call(&app, Method::POST, "/generate", None).await;
    assert_eq!(a.status, StatusCode::OK);
    assert_eq!(a.header("x-ring-count"), "4");
    let report: Value = serde_json::from_str(a.header("x-plan-report")).unwrap();
    let stl = load_stl::<f64>(&a.body).unwrap();
    assert_eq!(report["triangle_count"].as_u64().unwrap() as usize, stl.mesh.face_count());
    let b = call(&app, Method::POST, "/generate", None).await;
    assert_eq!(a.body, b.body);
}

#[tokio::test]
async fn short_baseline_is_unprocessable() {
    let app = app(Some(plane(7.5, 15)));
    let r = post(&app, "/seed", json!({"point": [0, 0, 1], "angle_deg": 0, "model_id": "M-4322"})).await;
    assert_eq!(r.baseline().truncated, (true, true));
    let g = call(&app, Method::POST, "/generate", None).await;
    assert_eq!(g.status, StatusCode::UNPROCESSABLE_ENTITY);
    let body = g.json();
    assert!((body["required_mm"].as_f64().unwrap() - 30.0).abs() < 1e-9);
    assert!((body["available_mm"].as_f64().unwrap() - 15.0).abs() < 1e-9);
}

#[tokio::test]
async fn save_and_export() {
    let app = plane_app();
    seed(&app, 0.0, "M-4138").await;
    let first = call(&app, Method::POST, "/generate", None).await;
    // Only an unsaved current implant: export still succeeds.
    let only = post(&app, "/export", json!({"mode": "combined"})).await;
    assert_eq!(only.status, StatusCode::OK);
    assert_eq!(only.body, first.body);

    assert_eq!(call(&app, Method::POST, "/save", None).await.json()["saved"], 1);
    assert_eq!(call(&app, Method::POST, "/save", None).await.status, StatusCode::CONFLICT);

    seed(&app, 30.0, "M-4322").await;
    let second = call(&app, Method::POST, "/generate", None).await;
    let combined = post(&app, "/export", json!({"mode": "combined"})).await;
    let faces = |b: &[u8]| load_stl::<f64>(b).unwrap().mesh.face_count();
    assert_eq!(faces(&combined.body), faces(&first.body) + faces(&second.body));
    assert_eq!(combined.header("x-implant-count"), "2");

    let zipped = post(&app, "/export", json!({"mode": "per_implant"})).await;
    assert_eq!(zipped.header("content-type"), "application/zip");
    let mut archive = zip::ZipArchive::new(std::io::Cursor::new(zipped.body.clone())).unwrap();
    let names: Vec<String> = (0..archive.len())
        .map(|i| archive.by_index(i).unwrap().name().unwrap().to_string())
        .collect();
    assert_eq!(names, ["implant_1_M-4138.stl", "implant_2_M-4322.stl"]);
    let mut bytes = Vec::new();
    archive.by_name("implant_2_M-4322.stl").unwrap().read_to_end(&mut bytes).unwrap();
    assert_eq!(bytes, second.body);
    let again = post(&app, "/export", json!({"mode": "per_implant"})).await;
    assert_eq!(again.body, zipped.body);

    // Export did not consume the current implant.
    assert_eq!(call(&app, Method::POST, "/save", None).await.json()["saved"], 2);
}

#[tokio::test]
async fn adjust_marker_reprojects() {
    let app = plane_app();
    let before = seed(&app, 0.0, "M-4138").await.baseline();
    let r = post(&app, "/adjust_marker", json!({"index": 2, "point": [-10.5, 0.5, 2.0]})).await;
    assert_eq!(r.status, StatusCode::OK);
    let after = r.baseline();
    assert!(after.points[2].position.distance(plateforge::Vec3::new(-10.5, 0.5, 0.0)) < 1e-12);
    assert_eq!(after.points[3], before.points[3]);
    let bad = post(&app, "/adjust_marker", json!({"index": 99, "point": [0, 0, 0]})).await;
    assert_eq!(bad.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn adjust_marker_across_wedge_crease() {
    let app = app(Some(right_angle_wedge(20.0, 10.0, 40, false)));
    let b = post(&app, "/seed", json!({"point": [5, 0, 3], "angle_deg": 0, "model_id": "M-4138"})).await.baseline();
    let i = b.points.iter().position(|p| p.position.x > 2.0).unwrap();
    let moved = post(&app, "/adjust_marker", json!({"index": i, "point": [1.0, 0.0, 4.0]})).await.baseline();
    let n = moved.points[i].normal;
    assert!((n.x - 1.0).abs() < 1e-12, "{n:?}");
}

#[tokio::test]
async fn serves_over_tcp_and_shuts_down() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(plateforge_service::run(listener, plane_app(), async {
        rx.await.ok();
    }));
    let stream = tokio::net::TcpStream::connect(addr).await.unwrap();
    drop(stream);
    tx.send(()).unwrap();
    server.await.unwrap().unwrap();
}
