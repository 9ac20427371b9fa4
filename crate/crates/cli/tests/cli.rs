use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::Value;
use tempfile::TempDir;
use tower::ServiceExt;

use plateforge::stl::{load_stl, save_stl, StlFormat};
use plateforge::surfaces::{plane, unit_cube};
use plateforge::{Anatomy, Catalog, Mesh};
use plateforge_service::{router, AppState};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_plateforge"));
    c.env_remove("PLATEFORGE_CATALOG");
    c
}

fn write_mesh(dir: &TempDir, name: &str, mesh: &Mesh) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, save_stl(mesh, StlFormat::Binary)).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn plan_cmd(mesh: &Path, seed: &str, model: &str, out: &Path) -> Command {
    let mut c = bin();
    c.args(["plan", "--mesh"]).arg(mesh);
    c.args(["--seed", seed, "--angle", "0", "--model", model, "--report", "--out"]).arg(out);
    c
}

#[test]
fn plan_on_plane_writes_stl_and_report() {
    let dir = TempDir::new().unwrap();
    let mesh = write_mesh(&dir, "plane.stl", &plane(25.0, 50));
    let out = dir.path().join("implant.stl");
    let o = run(&mut plan_cmd(&mesh, "0,0,5", "M-4138", &out));
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["ring_count"], 4);
    assert_eq!(report["point_count"], 47);
    assert_eq!(report["truncated"], serde_json::json!([false, false]));
    assert!((report["span_mm"].as_f64().unwrap() - 23.0).abs() < 1e-9);
    let stl = load_stl::<f64>(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(report["triangle_count"].as_u64().unwrap() as usize, stl.mesh.face_count());
}

#[test]
fn far_seed_snaps_to_surface() {
    let dir = TempDir::new().unwrap();
    let mesh = write_mesh(&dir, "plane.stl", &plane(25.0, 50));
    let out = dir.path().join("far.stl");
    let o = run(&mut plan_cmd(&mesh, "-3,2,500", "M-4138", &out));
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.stl");
    let good = write_mesh(&dir, "plane.stl", &plane(25.0, 50));
    let small = write_mesh(&dir, "small.stl", &plane(7.5, 15));
    let bad = dir.path().join("bad.stl");
    std::fs::write(&bad, b"solid nope\nfacet normal 0 0 1\n").unwrap();

    let unknown = run(&mut plan_cmd(&good, "0,0,5", "M-0000", &out));
    assert_eq!(unknown.status.code(), Some(3));
    let msg = stderr(&unknown);
    assert!(msg.contains("M-4138") && msg.contains("M-4320") && msg.contains("M-4322"), "{msg}");

    assert_eq!(run(&mut plan_cmd(&bad, "0,0,5", "M-4138", &out)).status.code(), Some(1));
    let short = run(&mut plan_cmd(&small, "0,0,1", "M-4322", &out));
    assert_eq!(short.status.code(), Some(2), "{}", stderr(&short));
    assert!(stderr(&short).contains("30.000"));

    let usage = run(bin().args(["plan", "--mesh"]).arg(&good));
    assert_eq!(usage.status.code(), Some(64));
}

#[test]
fn info_reports() {
    let dir = TempDir::new().unwrap();
    let o = run(bin().args(["info", "--catalog"]));
    assert!(o.status.success());
    let cat: Value = serde_json::from_slice(&o.stdout).unwrap();
    let lengths: Vec<(String, f64)> = cat["models"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| (m["id"].as_str().unwrap().into(), m["overall_length_mm"].as_f64().unwrap()))
        .collect();
    assert_eq!(lengths, [("M-4138".into(), 23.0), ("M-4320".into(), 29.0), ("M-4322".into(), 35.0)]);

    let cube = write_mesh(&dir, "cube.stl", &unit_cube());
    let o = run(bin().args(["info", "--mesh"]).arg(&cube));
    let info: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(info["faces"], 12);
    assert_eq!(info["dropped_degenerate"], 0);

    let bytes = std::fs::read(&cube).unwrap();
    let cut = dir.path().join("truncated.stl");
    std::fs::write(&cut, &bytes[..bytes.len() - 10]).unwrap();
    assert_eq!(run(bin().args(["info", "--mesh"]).arg(&cut)).status.code(), Some(1));
    assert_eq!(run(bin().args(["info", "--mesh"]).arg(dir.path().join("nope.stl"))).status.code(), Some(1));
}

#[test]
fn catalog_override_from_environment() {
    let dir = TempDir::new().unwrap();
    let mut cat = Catalog::default();
    cat.models.truncate(1);
    cat.models[0].id = "X-1".into();
    let path = dir.path().join("catalog.json");
    std::fs::write(&path, cat.to_json()).unwrap();
    let o = run(bin().env("PLATEFORGE_CATALOG", &path).args(["info", "--catalog"]));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["models"].as_array().unwrap().len(), 1);

    let mesh = write_mesh(&dir, "plane.stl", &plane(25.0, 50));
    let out = dir.path().join("x.stl");
    assert!(run(plan_cmd(&mesh, "0,0,5", "X-1", &out).env("PLATEFORGE_CATALOG", &path)).status.success());
    assert_eq!(
        run(plan_cmd(&mesh, "0,0,5", "M-4138", &out).env("PLATEFORGE_CATALOG", &path)).status.code(),
        Some(3)
    );
    std::fs::write(&path, b"{not json").unwrap();
    assert_eq!(run(bin().env("PLATEFORGE_CATALOG", &path).args(["info", "--catalog"])).status.code(), Some(3));
}

#[tokio::test(flavor = "multi_thread")]
async fn cli_and_service_produce_identical_stl() {
    let dir = TempDir::new().unwrap();
    let path = write_mesh(&dir, "plane.stl", &plane(25.0, 50));
    let out = dir.path().join("cli.stl");
    let mut cmd = bin();
    cmd.args(["plan", "--mesh"]).arg(&path);
    cmd.args(["--seed", "1.5,-2,4", "--angle", "37", "--model", "M-4320", "--out"]).arg(&out);
    assert!(run(&mut cmd).status.success());
    let cli_bytes = std::fs::read(&out).unwrap();

    let mesh = load_stl::<f64>(&std::fs::read(&path).unwrap()).unwrap().mesh;
    let app = router(AppState::new(Some(Anatomy::new(mesh).unwrap()), Catalog::default(), "plane"));
    let seed = serde_json::json!({"point": [1.5, -2.0, 4.0], "angle_deg": 37.0, "model_id": "M-4320"});
    let send = |uri: &str, body: String| {
        Request::post(uri)
            .header("content-type", "application/json")
            .body(Body::from(body))
            .unwrap()
    };
    let r = app.clone().oneshot(send("/seed", seed.to_string())).await.unwrap();
    assert!(r.status().is_success());
    let r = app.oneshot(send("/generate", String::new())).await.unwrap();
    let body = r.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(body.as_ref(), cli_bytes.as_slice());
}

fn http_get(port: u16, path: &str) -> String {
    let mut s = TcpStream::connect(("127.0.0.1", port)).unwrap();
    write!(s, "GET {path} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut text = String::new();
    s.read_to_string(&mut text).unwrap();
    text
}

fn free_port() -> u16 {
    std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn serve_answers_and_stops_on_interrupt() {
    let dir = TempDir::new().unwrap();
    let mesh = write_mesh(&dir, "cube.stl", &unit_cube());
    let port = free_port();
    let mut child = bin()
        .args(["serve", "--mesh"])
        .arg(&mesh)
        .args(["--port", &port.to_string()])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    assert!(line.contains("listening"), "{line}");

    let resp = http_get(port, "/catalog");
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    let body = &resp[resp.find("\r\n\r\n").unwrap() + 4..];
    let doc: Value = serde_json::from_str(body).unwrap();
    assert_eq!(doc["models"].as_array().unwrap().len(), 3);

    // A second server on the same port must fail.
    let clash = run(bin().args(["serve", "--mesh"]).arg(&mesh).args(["--port", &port.to_string()]));
    assert_eq!(clash.status.code(), Some(1));

    let killed = Command::new("kill").args(["-INT", &child.id().to_string()]).status().unwrap();
    assert!(killed.success());
    assert_eq!(child.wait().unwrap().code(), Some(0));
}

#[test]
fn serve_rejects_bad_mesh() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.stl");
    std::fs::write(&bad, b"garbage").unwrap();
    let o = run(bin().args(["serve", "--mesh"]).arg(&bad).args(["--port", "0"]));
    assert_eq!(o.status.code(), Some(1));
    assert!(!stderr(&o).contains("listening"));
}
