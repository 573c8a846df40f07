use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use toon25_core::{project, Vec3, ViewRotation};
use toon25_service::router;

const ANCHORS: [(&str, [f64; 3]); 2] = [("a", [0.5, 0.2, -0.3]), ("b", [-0.4, 0.6, 0.8])];

fn key_view(yaw: f64, pitch: f64, roll: f64) -> Value {
    let r = ViewRotation::from_euler(yaw, pitch, roll);
    let mut parts = serde_json::Map::new();
    for (id, p) in ANCHORS {
        let c = project(r.apply(Vec3::new(p[0], p[1], p[2])));
        let s = 0.2;
        let vertices = if id == "a" {
            json!([[c.x - s, c.y - s], [c.x + s, c.y - s], [c.x + s, c.y + s], [c.x - s, c.y + s]])
        } else {
            json!([[c.x - s, c.y - s], [c.x + s, c.y - s], [c.x, c.y + s]])
        };
        parts.insert(
            id.into(),
            json!({"anchor": [c.x, c.y], "vertices": vertices, "color": [yaw.abs() / 90.0, 0.5, 0.25, 1.0]}),
        );
    }
    json!({"euler": {"yaw": yaw, "pitch": pitch, "roll": roll}, "parts": parts})
}

fn model_doc(views: &[(f64, f64, f64)]) -> Value {
    json!({
        "format_version": 1,
        "parts": [
            {"part_id": "a", "vertex_count": 4, "triangles": [[0, 1, 2], [0, 2, 3]]},
            {"part_id": "b", "vertex_count": 3, "triangles": [[0, 1, 2]]}
        ],
        "key_views": views.iter().map(|&(y, p, r)| key_view(y, p, r)).collect::<Vec<_>>(),
    })
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value, Vec<u8>) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value, bytes)
}

async fn new_session(app: &Router, views: &[(f64, f64, f64)]) -> String {
    let (status, body, _) = call(app, Method::POST, "/session", Some(model_doc(views))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

const THREE: [(f64, f64, f64); 3] = [(0.0, 0.0, 0.0), (90.0, 0.0, 0.0), (30.0, 40.0, 0.0)];

#[tokio::test]
async fn create_session_statuses() {
    let app = router(None);
    new_session(&app, &THREE).await;

    let (status, body, _) = call(&app, Method::POST, "/session", Some(model_doc(&[(0.0, 0.0, 0.0), (0.0, 0.0, 0.0)]))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "DuplicateKeyView");

    let req = Request::post("/session").body(Body::empty()).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    let body: Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(body["error"], "ParseError");
}

#[tokio::test]
async fn add_and_delete_key_views() {
    let app = router(None);
    let id = new_session(&app, &THREE[..2]).await;
    let (_, _, original) = call(&app, Method::GET, &format!("/session/{id}/model"), None).await;

    let (status, body, _) = call(&app, Method::POST, &format!("/session/{id}/keyview"), Some(key_view(30.0, 40.0, 0.0))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["key_view_count"], 3);

    let (status, body, _) = call(&app, Method::POST, &format!("/session/{id}/keyview"), Some(key_view(90.0, 0.0, 0.0))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "DuplicateKeyView");

    let (status, _, _) = call(&app, Method::DELETE, &format!("/session/{id}/keyview/latest"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, _, after) = call(&app, Method::GET, &format!("/session/{id}/model"), None).await;
    assert_eq!(after, original);

    let (status, _, _) = call(&app, Method::POST, "/session/nope/keyview", Some(key_view(10.0, 0.0, 0.0))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn empty_model_conflicts() {
    let app = router(None);
    let id = new_session(&app, &THREE[..1]).await;
    let uri = format!("/session/{id}/keyview/latest");
    assert_eq!(call(&app, Method::DELETE, &uri, None).await.0, StatusCode::OK);
    let (status, body, _) = call(&app, Method::DELETE, &uri, None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "EmptyModel");
    let (status, _, _) = call(&app, Method::POST, &format!("/session/{id}/solve"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn solve_is_idempotent_and_tracks_edits() {
    let app = router(None);
    let id = new_session(&app, &THREE).await;
    let uri = format!("/session/{id}/solve");
    let (status, first, bytes1) = call(&app, Method::POST, &uri, None).await;
    assert_eq!(status, StatusCode::OK);
    for r in first["residuals"].as_array().unwrap() {
        assert!(r.as_f64().unwrap() < 1e-9);
    }
    assert_eq!(first["distortion_norms"].as_array().unwrap().len(), 2);
    let (_, _, bytes2) = call(&app, Method::POST, &uri, None).await;
    assert_eq!(bytes1, bytes2);

    let mut edited = key_view(90.0, 0.0, 0.0)["parts"]["b"].clone();
    edited["anchor"][0] = json!(edited["anchor"][0].as_f64().unwrap() + 0.3);
    let (status, _, _) = call(&app, Method::PUT, &format!("/session/{id}/part/b/keyview/1"), Some(edited)).await;
    assert_eq!(status, StatusCode::OK);
    let (_, after, _) = call(&app, Method::POST, &uri, None).await;
    assert!(after["residuals"][1].as_f64().unwrap() > 1e-3);
}

#[tokio::test]
async fn frames_follow_the_state_machine() {
    let app = router(None);
    let id = new_session(&app, &THREE).await;
    let frame_uri = |q: &str| format!("/session/{id}/frame?{q}");

    let (status, body, _) = call(&app, Method::GET, &frame_uri("yaw=90"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "needs_solve");

    call(&app, Method::POST, &format!("/session/{id}/solve"), None).await;
    let (status, frame, _) = call(&app, Method::GET, &frame_uri("yaw=90"), None).await;
    assert_eq!(status, StatusCode::OK);
    let authored = key_view(90.0, 0.0, 0.0);
    for part in frame["parts"].as_array().unwrap() {
        let id = part["part_id"].as_str().unwrap();
        let want = &authored["parts"][id];
        for k in 0..2 {
            let d = part["position"][k].as_f64().unwrap() - want["anchor"][k].as_f64().unwrap();
            assert!(d.abs() < 1e-12);
        }
        for (v, w) in part["vertices"].as_array().unwrap().iter().zip(want["vertices"].as_array().unwrap()) {
            for k in 0..2 {
                assert!((v[k].as_f64().unwrap() - w[k].as_f64().unwrap()).abs() < 1e-6);
            }
        }
        assert_eq!(part["color"], want["color"]);
    }

    let (_, _, a) = call(&app, Method::GET, &frame_uri("yaw=34&quantize=10"), None).await;
    let (_, _, b) = call(&app, Method::GET, &frame_uri("yaw=30&quantize=10"), None).await;
    let (_, _, c) = call(&app, Method::GET, &frame_uri("yaw=34"), None).await;
    assert_eq!(a, b);
    assert_ne!(a, c);

    let (status, _, _) = call(&app, Method::GET, &frame_uri("yaw=left"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = call(&app, Method::GET, &frame_uri("yaw=NaN"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _, _) = call(&app, Method::GET, &frame_uri("quantize=-1"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, body, _) = call(&app, Method::GET, &frame_uri("weight_method=delaunay"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");

    call(&app, Method::POST, &format!("/session/{id}/keyview"), Some(key_view(-90.0, 0.0, 0.0))).await;
    let (status, _, _) = call(&app, Method::GET, &frame_uri("yaw=0"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn baseline_methods_over_http() {
    let app = router(None);
    let id = new_session(&app, &[(0.0, 0.0, 0.0), (0.0, 0.0, 90.0), (0.0, 0.0, 180.0)]).await;
    call(&app, Method::POST, &format!("/session/{id}/solve"), None).await;
    let (status, _, _) = call(&app, Method::GET, &format!("/session/{id}/frame?roll=135&weight_method=ray-angle"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, body, _) = call(&app, Method::GET, &format!("/session/{id}/frame?roll=135&weight_method=yaw-pitch-knn"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"], "DegenerateConfiguration");
}

#[tokio::test]
async fn part_edits() {
    let app = router(None);
    let id = new_session(&app, &THREE).await;
    call(&app, Method::POST, &format!("/session/{id}/solve"), None).await;
    let base = key_view(0.0, 0.0, 0.0)["parts"]["a"].clone();

    let mut moved = base.clone();
    for v in moved["vertices"].as_array_mut().unwrap() {
        v[0] = json!(v[0].as_f64().unwrap() + 0.1);
    }
    let (status, body, _) = call(&app, Method::PUT, &format!("/session/{id}/part/a/keyview/0"), Some(moved)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["dirty"], true);
    let (status, _, _) = call(&app, Method::GET, &format!("/session/{id}/frame"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    let mut short = base.clone();
    short["vertices"].as_array_mut().unwrap().pop();
    let (status, body, _) = call(&app, Method::PUT, &format!("/session/{id}/part/a/keyview/0"), Some(short)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "VertexCountMismatch");

    let mut flipped = base.clone();
    let vs = flipped["vertices"].as_array_mut().unwrap();
    vs.swap(1, 3);
    let (status, body, _) = call(&app, Method::PUT, &format!("/session/{id}/part/a/keyview/0"), Some(flipped)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "DegenerateTriangle");

    let (status, _, _) = call(&app, Method::PUT, &format!("/session/{id}/part/zz/keyview/0"), Some(base.clone())).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _, _) = call(&app, Method::PUT, &format!("/session/{id}/part/a/keyview/9"), Some(base)).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn session_info_and_default_view() {
    let app = router(None);
    let id = new_session(&app, &THREE).await;
    call(&app, Method::POST, &format!("/session/{id}/solve"), None).await;
    let (status, _, _) = call(&app, Method::PUT, &format!("/session/{id}/view"), Some(json!({"yaw": 90.0, "pitch": 0.0, "roll": 0.0, "quantize": 0.0}))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, _, implicit) = call(&app, Method::GET, &format!("/session/{id}/frame"), None).await;
    let (_, _, explicit) = call(&app, Method::GET, &format!("/session/{id}/frame?yaw=90"), None).await;
    assert_eq!(implicit, explicit);

    let (_, info, _) = call(&app, Method::GET, &format!("/session/{id}"), None).await;
    assert_eq!(info["dirty"], false);
    assert_eq!(info["key_views"].as_array().unwrap().len(), 3);
    assert_eq!(info["reference_view"], 0);
    assert_eq!(info["part_ids"], json!(["a", "b"]));
}

#[tokio::test]
async fn cors_and_concurrent_frames() {
    let app = router(None);
    let id = new_session(&app, &THREE).await;
    call(&app, Method::POST, &format!("/session/{id}/solve"), None).await;
    let req = Request::get(format!("/session/{id}/frame?yaw=12"))
        .header(header::ORIGIN, "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert!(resp.headers().contains_key(header::ACCESS_CONTROL_ALLOW_ORIGIN));

    let uri = format!("/session/{id}/frame?yaw=12&pitch=-7");
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let app = app.clone();
            let uri = uri.clone();
            tokio::spawn(async move { call(&app, Method::GET, &uri, None).await.2 })
        })
        .collect();
    let mut bodies = Vec::new();
    for h in handles {
        bodies.push(h.await.unwrap());
    }
    assert!(bodies.windows(2).all(|w| w[0] == w[1]));
}

#[tokio::test]
async fn translated_part_is_stored_and_exported() {
    let app = router(None);
    let id = new_session(&app, &THREE).await;
    let mut moved = key_view(90.0, 0.0, 0.0)["parts"]["a"].clone();
    let shift = |p: &mut Value| p[0] = json!(p[0].as_f64().unwrap() + 10.0);
    shift(&mut moved["anchor"]);
    for v in moved["vertices"].as_array_mut().unwrap() {
        shift(v);
    }
    let (status, _, _) = call(&app, Method::PUT, &format!("/session/{id}/part/a/keyview/1"), Some(moved.clone())).await;
    assert_eq!(status, StatusCode::OK);
    let (_, model, _) = call(&app, Method::GET, &format!("/session/{id}/model"), None).await;
    let stored = &model["key_views"][1]["parts"]["a"];
    assert_eq!(stored["anchor"], moved["anchor"]);
    assert_eq!(stored["vertices"], moved["vertices"]);
    assert_eq!(model["key_views"][0]["parts"]["a"], key_view(0.0, 0.0, 0.0)["parts"]["a"]);
}
