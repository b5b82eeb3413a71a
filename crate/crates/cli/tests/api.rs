use std::fmt::Write as _;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use mstlens::experiments::gaussian_mixture;
use mstlens::{build_mst, medoids, simplified_medoid_tree, Dataset};
use mstlens_cli::api::{router, AppState, CreateSession};
use serde_json::{json, Value};
use tower::ServiceExt;

fn inputs(n: usize) -> (CreateSession, Dataset) {
    let (data, clustering) = gaussian_mixture(n, 5, 3, 9.0, 77).unwrap();
    let (mut d, mut e, mut l, mut m) = (
        String::from("id,a,b,c,d,e\n"),
        String::from("id,x,y\n"),
        String::from("id,cluster\n"),
        String::from("id,batch,depth\n"),
    );
    for i in 0..n {
        let row = data.row(i);
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(d, "p{i},{}", cells.join(",")).unwrap();
        writeln!(e, "p{i},{},{}", row[0], row[1]).unwrap();
        writeln!(l, "p{i},c{}", clustering.label(i)).unwrap();
        writeln!(m, "p{i},{},{}", ["x", "y"][i % 2], i).unwrap();
    }
    (
        CreateSession {
            data: d,
            embedding: e,
            labels: l,
            meta: Some(m),
            pca_dims: None,
        },
        data,
    )
}

fn ordered(a: String, b: String) -> (String, String) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn raw(app: &Router, method: &str, uri: &str, body: Value) -> Vec<u8> {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    resp.into_body().collect().await.unwrap().to_bytes().to_vec()
}

async fn session(app: &Router, n: usize) -> (String, Value, Dataset) {
    let (req, data) = inputs(n);
    let (status, body) = call(app, "POST", "/session", Some(serde_json::to_value(&req).unwrap())).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    (body["id"].as_str().unwrap().to_string(), body, data)
}

#[tokio::test]
async fn full_workflow() {
    let app = router(AppState::new());
    let (id, created, data) = session(&app, 90).await;
    assert_eq!(created["ids"].as_array().unwrap().len(), 90);

    // Overlay edges equal the simplified medoid tree rebuilt from scratch.
    let (_, clustering) = gaussian_mixture(90, 5, 3, 9.0, 77).unwrap();
    let mst = build_mst(&data).unwrap();
    let tree = simplified_medoid_tree(&mst, &medoids(&data, &clustering).unwrap()).unwrap();
    let mut expected: Vec<(String, String)> =
        tree.edges().iter().map(|e| ordered(format!("p{}", e.u), format!("p{}", e.v))).collect();
    let mut got: Vec<(String, String)> = created["overlay"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| ordered(e["from"].as_str().unwrap().to_string(), e["to"].as_str().unwrap().to_string()))
        .collect();
    expected.sort();
    got.sort();
    assert_eq!(got, expected);

    let (status, sel) = call(&app, "POST", &format!("/session/{id}/path"), Some(json!({"a": "p0", "b": "p89"}))).await;
    assert_eq!(status, StatusCode::OK, "{sel}");
    assert_eq!(sel["path"][0], "p0");
    assert_eq!(sel["group1"].as_array().unwrap().len(), 30);

    let proj = json!({"pca_dims": 3, "degree": 2, "bandwidth": 1.5});
    let a = raw(&app, "POST", &format!("/session/{id}/project"), proj.clone()).await;
    let b = raw(&app, "POST", &format!("/session/{id}/project"), proj).await;
    assert_eq!(a, b);
    let view: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(view["result"]["coords"].as_array().unwrap().len(), view["points"].as_array().unwrap().len());
    assert!(view["density"]["z"].is_array());

    let t1 = raw(&app, "POST", &format!("/session/{id}/test"), json!({"replicates": 40, "seed": 3})).await;
    let t2 = raw(&app, "POST", &format!("/session/{id}/test"), json!({"replicates": 40, "seed": 3})).await;
    assert_eq!(t1, t2);
    let (_, unseeded) = call(&app, "POST", &format!("/session/{id}/test"), Some(json!({}))).await;
    assert!(unseeded["result"]["seed"].is_u64());

    let (status, heat) = call(&app, "GET", &format!("/session/{id}/heatmap?features=b,d"), None).await;
    assert_eq!(status, StatusCode::OK, "{heat}");
    assert_eq!(heat["order"].as_array().unwrap().len(), 2);
    let (status, meta) = call(&app, "GET", &format!("/session/{id}/meta"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(meta["columns"][0]["kind"], "categorical");
    assert_eq!(meta["columns"][1]["kind"], "numeric");
}

#[tokio::test]
async fn errors_map_to_statuses() {
    let app = router(AppState::new());
    let (status, body) = call(&app, "GET", "/session/nope/meta", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert!(body["error"].as_str().unwrap().contains("nope"));

    let (id, _, _) = session(&app, 60).await;
    let path = format!("/session/{id}/path");
    let (status, _) = call(&app, "POST", &path, Some(json!({"a": "p3", "b": "p3"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "POST", &path, Some(json!({"a": "p3", "b": "zzz"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", &format!("/session/{id}/test"), Some(json!({}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "test before selection");

    let groups = format!("/session/{id}/groups");
    let overlap = json!({"kind": "ids", "group1": ["p1", "p2"], "group2": ["p2", "p3"]});
    assert_eq!(call(&app, "POST", &groups, Some(overlap)).await.0, StatusCode::BAD_REQUEST);
    let bad_polygon = json!({"kind": "lasso", "group1": [[0.0, 0.0], [1.0, 1.0]], "group2": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]});
    assert_eq!(call(&app, "POST", &groups, Some(bad_polygon)).await.0, StatusCode::BAD_REQUEST);

    let mut bad = inputs(10).0;
    bad.labels = "id,cluster\np0,a\n".into();
    let (status, _) = call(&app, "POST", "/session", Some(serde_json::to_value(&bad).unwrap())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn lasso_groups_match_even_odd_rule() {
    let app = router(AppState::new());
    let (id, created, _) = session(&app, 90).await;
    let emb: Vec<[f64; 2]> = created["embedding"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| [p[0].as_f64().unwrap(), p[1].as_f64().unwrap()])
        .collect();
    // A concave "C" shape and a triangle, disjoint.
    let c_shape = vec![[-99.0, -99.0], [0.0, -99.0], [0.0, -2.0], [-6.0, -2.0], [-6.0, 2.0], [0.0, 2.0], [0.0, 99.0], [-99.0, 99.0]];
    let triangle = vec![[0.5, -199.0], [199.0, 0.0], [0.5, 199.0]];
    let inside = |poly: &[[f64; 2]], p: [f64; 2]| {
        let mut c = false;
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            let (lo, hi) = if a[1] <= b[1] { (a, b) } else { (b, a) };
            if p[1] >= lo[1] && p[1] < hi[1] && lo[0] + (p[1] - lo[1]) / (hi[1] - lo[1]) * (hi[0] - lo[0]) > p[0] {
                c = !c;
            }
        }
        c
    };
    let pick = |poly: &[[f64; 2]]| -> Vec<String> {
        (0..emb.len()).filter(|&i| inside(poly, emb[i])).map(|i| format!("p{i}")).collect()
    };
    let (g1, g2) = (pick(&c_shape), pick(&triangle));
    let body = json!({"kind": "lasso", "group1": c_shape, "group2": triangle});
    let (status, sel) = call(&app, "POST", &format!("/session/{id}/groups"), Some(body)).await;
    assert!(!g1.is_empty() && !g2.is_empty());
    assert_eq!(status, StatusCode::OK, "{sel}");
    let ids = |v: &Value| -> Vec<String> { v.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect() };
    assert_eq!(ids(&sel["group1"]), g1);
    assert_eq!(ids(&sel["group2"]), g2);
}

#[tokio::test]
async fn snapshots_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::with_snapshot_dir(dir.path()).unwrap());
    let (id, _, _) = session(&app, 60).await;
    call(&app, "POST", &format!("/session/{id}/path"), Some(json!({"a": "p0", "b": "p59"}))).await;
    let before = raw(&app, "POST", &format!("/session/{id}/test"), json!({"replicates": 20, "seed": 9})).await;

    let restarted = router(AppState::with_snapshot_dir(dir.path()).unwrap());
    let after = raw(&restarted, "POST", &format!("/session/{id}/test"), json!({"replicates": 20, "seed": 9})).await;
    assert_eq!(before, after);
}
