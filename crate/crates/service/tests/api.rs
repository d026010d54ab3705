use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use fractile::analysis::analyze;
use fractile::export::export_record;
use fractile::ifs::fixtures::*;
use fractile::neighbor::Limits;
use fractile_service::{app, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Harness {
    _dir: tempfile::TempDir,
    state: Arc<AppState>,
}

impl Harness {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let config = ServiceConfig {
            collection_path: dir.path().join("examples.jsonl"),
            max_workers: 2,
            ..ServiceConfig::default()
        };
        let state = Arc::new(AppState::new(&config).unwrap());
        Harness { _dir: dir, state }
    }

    fn router(&self) -> Router {
        app(self.state.clone())
    }

    async fn call(&self, method: &str, uri: &str, body: impl Into<String>) -> (StatusCode, Vec<u8>) {
        let req = Request::builder()
            .method(method)
            .uri(format!("/api/v1{uri}"))
            .header("content-type", "application/json")
            .body(Body::from(body.into()))
            .unwrap();
        let res = self.router().oneshot(req).await.unwrap();
        let status = res.status();
        let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    async fn json(&self, method: &str, uri: &str, body: impl Into<String>) -> (StatusCode, Value) {
        let (status, bytes) = self.call(method, uri, body).await;
        (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
    }

    fn seed(&self, specs: &[fractile::ifs::IfsSpec]) -> Vec<String> {
        let records = specs.iter().map(|s| analyze(s, Limits::default()).unwrap()).collect();
        self.state.collection.append(records).unwrap().into_iter().map(|r| r.id).collect()
    }

    async fn wait(&self, id: &str) -> Value {
        for _ in 0..2000 {
            let (_, job) = self.json("GET", &format!("/search/{id}"), "").await;
            if ["Done", "Cancelled", "Failed"].contains(&job["state"].as_str().unwrap()) {
                return job;
            }
            tokio::time::sleep(Duration::from_millis(20)).await;
        }
        panic!("job {id} did not finish");
    }
}

fn search_config(budget: usize, seed: u64) -> Value {
    json!({
        "field": {"a": "0"},
        "expansion": {"b": "-1", "c": "2"},
        "generators": [{"x": "3/5", "y": "4/5", "reflected": false}],
        "m_range": [2, 4],
        "translation_box": 1,
        "caps": {"max_types": 30, "max_candidates": 5000},
        "budget": budget,
        "seed": seed,
        "generation_size": 8
    })
}

#[tokio::test]
async fn analyze_the_fixture() {
    let h = Harness::new();
    let spec = pythagorean_carpet();
    let (status, body) = h.call("POST", "/analyze", spec.to_json()).await;
    assert_eq!(status, StatusCode::OK);
    let record: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(record["neighbor_count"], 5);
    assert_eq!(record["fli"], 3);
    assert_eq!(record["created_at"], Value::Null);
    let local = export_record(&analyze(&spec, Limits::default()).unwrap());
    assert_eq!(String::from_utf8(body).unwrap(), local);
    assert!(h.state.collection.is_empty());
}

#[tokio::test]
async fn analyze_rejections() {
    let h = Harness::new();
    let mut crowded = pythagorean_carpet();
    crowded.maps.extend(crowded.maps.clone());
    let (status, body) = h.json("POST", "/analyze", crowded.to_json()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let violations: Vec<String> = serde_json::from_value(body["violations"].clone()).unwrap();
    assert!(violations.iter().any(|v| v.contains("m ≤ det M")), "{violations:?}");

    let broken = pythagorean_carpet().to_json().replacen("\"-1\"", "\"1/0\"", 1);
    assert_eq!(h.call("POST", "/analyze", broken).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(h.call("POST", "/analyze", "{").await.0, StatusCode::BAD_REQUEST);
    let extra = pythagorean_carpet().to_json().replacen('{', "{\"x\":1,", 1);
    assert_eq!(h.call("POST", "/analyze", extra).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn analyze_over_the_caps_is_unprocessable() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        collection_path: dir.path().join("c.jsonl"),
        limits: Limits {
            max_types: 3,
            max_candidates: 1000,
        },
        ..ServiceConfig::default()
    };
    let h = Harness {
        state: Arc::new(AppState::new(&config).unwrap()),
        _dir: dir,
    };
    let (status, body) = h.json("POST", "/analyze", pythagorean_carpet().to_json()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["candidates"].as_u64().unwrap() > 0);
    assert_eq!(body["record"]["outcome"]["kind"], "too_complex");
}

#[tokio::test]
async fn search_runs_to_done_and_persists() {
    let h = Harness::new();
    let (status, job) = h.json("POST", "/search", search_config(16, 3).to_string()).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let id = job["id"].as_str().unwrap().to_string();
    let done = h.wait(&id).await;
    assert_eq!(done["state"], "Done");
    assert_eq!(done["progress"]["tried"], 16);
    for rid in done["result_ids"].as_array().unwrap() {
        assert!(h.state.collection.contains(rid.as_str().unwrap()));
    }
    let (status, _) = h.json("POST", &format!("/search/{id}/cancel"), "").await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn same_config_same_finds() {
    let h = Harness::new();
    let mut found = Vec::new();
    for _ in 0..2 {
        let (_, job) = h.json("POST", "/search", search_config(40, 7).to_string()).await;
        let done = h.wait(job["id"].as_str().unwrap()).await;
        found.push(done["result_ids"].clone());
    }
    assert_eq!(found[0], found[1]);
    assert!(!found[0].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn cancelling_keeps_partial_results() {
    let h = Harness::new();
    let mut cfg = search_config(100_000, 5);
    cfg["generation_size"] = json!(4);
    let (_, job) = h.json("POST", "/search", cfg.to_string()).await;
    let id = job["id"].as_str().unwrap().to_string();
    // let a few generations finish first
    for _ in 0..500 {
        let (_, j) = h.json("GET", &format!("/search/{id}"), "").await;
        if j["progress"]["tried"].as_u64().unwrap() >= 8 {
            break;
        }
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
    let (status, j) = h.json("POST", &format!("/search/{id}/cancel"), "").await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(j["cancel_requested"], true);
    let done = h.wait(&id).await;
    assert_eq!(done["state"], "Cancelled");
    let tried = done["progress"]["tried"].as_u64().unwrap();
    assert!(tried >= 8 && tried < 100_000);
    for rid in done["result_ids"].as_array().unwrap() {
        assert!(h.state.collection.contains(rid.as_str().unwrap()));
    }
}

#[tokio::test]
async fn jobs_queue_one_at_a_time() {
    let h = Harness::new();
    let (_, first) = h.json("POST", "/search", search_config(100_000, 1).to_string()).await;
    let (_, second) = h.json("POST", "/search", search_config(4, 2).to_string()).await;
    let (a, b) = (first["id"].as_str().unwrap(), second["id"].as_str().unwrap());
    tokio::time::sleep(Duration::from_millis(50)).await;
    let (_, s) = h.json("GET", &format!("/search/{b}"), "").await;
    assert_eq!(s["state"], "Pending");
    let (status, s) = h.json("POST", &format!("/search/{b}/cancel"), "").await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(s["state"], "Cancelled");
    h.json("POST", &format!("/search/{a}/cancel"), "").await;
    assert_eq!(h.wait(a).await["state"], "Cancelled");
    let (_, s) = h.json("GET", &format!("/search/{b}"), "").await;
    assert_eq!(s["progress"]["tried"], 0);
    let (_, list) = h.json("GET", "/search", "").await;
    assert_eq!(list["jobs"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn unknown_jobs_and_bad_configs() {
    let h = Harness::new();
    assert_eq!(h.call("GET", "/search/77", "").await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call("GET", "/search/nope", "").await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call("POST", "/search/77/cancel", "").await.0, StatusCode::NOT_FOUND);
    let mut cfg = search_config(10, 1);
    cfg["m_range"] = json!([2, 9]);
    assert_eq!(h.call("POST", "/search", cfg.to_string()).await.0, StatusCode::BAD_REQUEST);
    cfg["m_range"] = json!([2, 4]);
    cfg["colour"] = json!(1);
    assert_eq!(h.call("POST", "/search", cfg.to_string()).await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn listing_sorts_filters_and_pages() {
    let h = Harness::new();
    h.seed(&[sierpinski_carpet(), pythagorean_carpet(), interval(), cantor_pair(5), sierpinski_triangle()]);
    let (status, page) = h.json("GET", "/examples?sort=complexity", "").await;
    assert_eq!(status, StatusCode::OK);
    let counts: Vec<Value> = page["items"].as_array().unwrap().iter().map(|r| r["neighbor_count"].clone()).collect();
    assert_eq!(counts, vec![json!(2), json!(5), json!(6), json!(8), Value::Null]);
    assert_eq!(page["next_cursor"], Value::Null);

    let (_, carpets) = h.json("GET", "/examples?class=UncountableCarpet", "").await;
    assert_eq!(carpets["total"], 2);
    let (_, connected) = h.json("GET", "/examples?connected=true&max_types=6", "").await;
    assert_eq!(connected["total"], 3);
    let (_, empty) = h.json("GET", "/examples?outcome=empty", "").await;
    assert_eq!(empty["total"], 1);

    // walk the pages while new records arrive
    let mut seen = Vec::new();
    let mut cursor: Option<String> = None;
    loop {
        let uri = match &cursor {
            Some(c) => format!("/examples?sort=complexity&limit=2&cursor={c}"),
            None => "/examples?sort=complexity&limit=2".to_string(),
        };
        let (_, page) = h.json("GET", &uri, "").await;
        for r in page["items"].as_array().unwrap() {
            seen.push(r["id"].as_str().unwrap().to_string());
        }
        if seen.len() == 2 {
            h.seed(&[full_square(2)]);
        }
        match page["next_cursor"].as_str() {
            Some(c) => cursor = Some(c.to_string()),
            None => break,
        }
    }
    let unique: std::collections::HashSet<_> = seen.iter().collect();
    assert_eq!(unique.len(), seen.len());
    assert!(seen.len() >= 5);

    assert_eq!(h.call("GET", "/examples?limit=0", "").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(h.call("GET", "/examples?sort=sideways", "").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(h.call("GET", "/examples?cursor=zzz", "").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn get_and_graph_exports() {
    let h = Harness::new();
    let ids = h.seed(&[pythagorean_carpet(), cantor_pair(5)]);
    let (status, body) = h.call("GET", &format!("/examples/{}", ids[0]), "").await;
    assert_eq!(status, StatusCode::OK);
    let stored = h.state.collection.get(&ids[0]).unwrap();
    assert_eq!(String::from_utf8(body).unwrap(), export_record(&stored));
    assert_eq!(h.call("GET", "/examples/abc", "").await.0, StatusCode::NOT_FOUND);

    let (status, dot) = h.call("GET", &format!("/examples/{}/neighborgraph.dot", ids[0]), "").await;
    assert_eq!(status, StatusCode::OK);
    let dot = String::from_utf8(dot).unwrap();
    assert!(dot.contains("  n4 -> n5 [label=\"2,4\"];") && dot.contains("  n4 -> n5 [label=\"4,2\"];"));
    assert_eq!(dot.lines().filter(|l| l.contains("->") && !l.contains("id ->")).count(), 6);
    let (_, empty_dot) = h.call("GET", &format!("/examples/{}/neighborgraph.dot", ids[1]), "").await;
    assert_eq!(String::from_utf8(empty_dot).unwrap(), "digraph neighbors {\n  id [shape=point];\n}\n");

    let (status, g) = h.json("GET", &format!("/examples/{}/neighborgraph.json", ids[0]), "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(g["type_count"], 5);
    assert_eq!(g["fli"], 3);
    let (status, _) = h.json("GET", &format!("/examples/{}/neighborgraph.json", ids[1]), "").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(h.call("GET", "/examples/abc/neighborgraph.dot", "").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn renders() {
    let h = Harness::new();
    let id = h.seed(&[pythagorean_carpet()]).remove(0);
    let (status, ppm) = h.call("GET", &format!("/examples/{id}/render?w=64"), "").await;
    assert_eq!(status, StatusCode::OK);
    assert!(ppm.starts_with(b"P6\n64 64\n255\n"));
    assert_eq!(ppm.len(), "P6\n64 64\n255\n".len() + 64 * 64 * 3);
    let (status, png) = h
        .call("GET", &format!("/examples/{id}/render?w=48&h=32&format=png&coloring=first&window=0.1,0.2,1.5"), "")
        .await;
    assert_eq!(status, StatusCode::OK);
    assert!(png.starts_with(b"\x89PNG"));
    for bad in ["window=1,2", "window=a,b,c", "window=0,0,-1", "w=4", "w=100000", "coloring=plaid", "format=gif", "w=-3", "zoom=2"] {
        let (status, _) = h.call("GET", &format!("/examples/{id}/render?{bad}"), "").await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{bad}");
    }
    assert_eq!(h.call("GET", "/examples/abc/render", "").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn mutation_persists_a_linked_child() {
    let h = Harness::new();
    let parent = h.seed(&[pythagorean_carpet()]).remove(0);
    let (status, child) = h.json("POST", &format!("/examples/{parent}/mutate"), "{\"seed\": 4}").await;
    assert!(status == StatusCode::CREATED || status == StatusCode::UNPROCESSABLE_ENTITY, "{status}");
    if status == StatusCode::CREATED {
        assert_eq!(child["parent"], parent.as_str());
        assert!(child["created_at"].is_u64());
        let id = child["id"].as_str().unwrap();
        let stored = h.state.collection.get(id).unwrap();
        let again = analyze(&stored.spec, Limits::default()).unwrap();
        assert_eq!(again.outcome, stored.outcome);
        assert_eq!(again.topology, stored.topology);
        assert_eq!(again.dimension, stored.dimension);
        let before = pythagorean_carpet();
        let maps_changed = before.maps.iter().zip(&stored.spec.maps).filter(|(a, b)| a != b).count();
        assert!(
            (stored.spec.m() == before.m() && maps_changed == 1) || stored.spec.m().abs_diff(before.m()) == 1,
            "{}",
            stored.spec.to_json()
        );
    }
    assert_eq!(h.call("POST", "/examples/abc/mutate", "").await.0, StatusCode::NOT_FOUND);
    assert_eq!(h.call("POST", &format!("/examples/{parent}/mutate"), "{\"x\":1}").await.0, StatusCode::BAD_REQUEST);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_mutations_are_all_kept() {
    let h = Harness::new();
    let parent = h.seed(&[full_square(2)]).remove(0);
    let tasks: Vec<_> = (0..6)
        .map(|_| {
            let router = h.router();
            let uri = format!("/api/v1/examples/{parent}/mutate");
            tokio::spawn(async move {
                let req = Request::builder().method("POST").uri(uri).body(Body::empty()).unwrap();
                let res = router.oneshot(req).await.unwrap();
                let status = res.status();
                let bytes = res.into_body().collect().await.unwrap().to_bytes();
                (status, serde_json::from_slice::<Value>(&bytes).unwrap())
            })
        })
        .collect();
    let mut ids = Vec::new();
    for t in tasks {
        let (status, child) = t.await.unwrap();
        if status == StatusCode::CREATED {
            ids.push(child["id"].as_str().unwrap().to_string());
        } else {
            assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        }
    }
    let unique: std::collections::HashSet<_> = ids.iter().collect();
    assert_eq!(unique.len(), ids.len());
    assert!(!ids.is_empty());
    assert_eq!(h.state.collection.len(), 1 + ids.len());
}

#[tokio::test]
async fn health_reports_the_collection() {
    let h = Harness::new();
    let (status, body) = h.json("GET", "/health", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["collection"]["name"], "examples");
    assert_eq!(body["records"], 0);
}
