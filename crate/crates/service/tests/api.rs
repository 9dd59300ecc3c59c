use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tahp_core::fixture::{infosec_skeleton, INFOSEC_DOCUMENT};
use tahp_core::{parse, serialize};
use tahp_service::{router, AppState, Config};
use tower::ServiceExt;

struct Reply {
    status: StatusCode,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap()
    }
}

async fn call(app: &axum::Router, method: Method, uri: &str, body: Option<String>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, bytes }
}

fn app_with(config: Config) -> axum::Router {
    router(AppState::new(config))
}

async fn create(app: &axum::Router, doc: &str) -> String {
    let r = call(app, Method::POST, "/sessions", Some(doc.to_owned())).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.bytes));
    assert_eq!(r.json()["revision"], 0);
    r.json()["id"].as_str().unwrap().to_owned()
}

fn judgment(context: &str, i: &str, j: &str, value: &str) -> String {
    json!({ "context": context, "i": i, "j": j, "value": value }).to_string()
}

#[tokio::test]
async fn fixture_results_and_cache() {
    let app = app_with(Config::default());
    let id = create(&app, INFOSEC_DOCUMENT).await;
    let a = call(&app, Method::GET, &format!("/sessions/{id}/results"), None).await;
    assert_eq!(a.status, StatusCode::OK);
    let body = a.json();
    let scores = body["result"]["alternative_scores"].as_array().unwrap();
    for (s, target) in scores.iter().zip([0.409, 0.314, 0.277]) {
        assert!((s["score"].as_f64().unwrap() - target).abs() <= 0.005);
    }
    assert!(body["result"]["overall_inconsistency"].as_f64().unwrap() <= 0.1);
    let b = call(&app, Method::GET, &format!("/sessions/{id}/results"), None).await;
    assert_eq!(a.bytes, b.bytes);
}

#[tokio::test]
async fn incomplete_session_reports_missing_pairs() {
    let app = app_with(Config::default());
    let id = create(&app, &serialize(&infosec_skeleton())).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/results"), None).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    let body = r.json();
    assert_eq!(body["code"], "incomplete_model");
    assert_eq!(body["missing"].as_array().unwrap().len(), 15);
    assert!(body["message"].is_string());

    let s = call(&app, Method::GET, &format!("/sessions/{id}/sensitivity/culture"), None).await;
    assert_eq!(s.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn completing_the_criteria_context_reports_cr_and_gate() {
    let app = app_with(Config::default());
    let id = create(&app, &serialize(&infosec_skeleton())).await;
    let fixture = parse(INFOSEC_DOCUMENT).unwrap();
    let pairs = fixture.judgments_in("infosec").unwrap();
    let uri = format!("/sessions/{id}/judgments");
    let mut last = None;
    for (n, (i, j, v)) in pairs.iter().enumerate() {
        let r = call(
            &app,
            Method::PUT,
            &uri,
            Some(judgment("infosec", i.as_str(), j.as_str(), v.code())),
        )
        .await;
        assert_eq!(r.status, StatusCode::OK);
        let body = r.json();
        assert_eq!(body["revision"], n as u64 + 1);
        let done = n + 1 == pairs.len();
        assert_eq!(body["context_complete"], done);
        assert_eq!(body.get("priority").is_some(), done);
        last = Some(body);
    }
    let body = last.unwrap();
    let cr = body["priority"]["cr"].as_f64().unwrap();
    assert!((cr - 0.0572).abs() < 1e-3);
    assert_eq!(body["gate"]["passes"], true);
    assert_eq!(body["priority"]["weights"].as_array().unwrap().len(), 4);

    // Resubmitting the same judgment is a mutation like any other.
    let (i, j, v) = &pairs[0];
    let again = call(
        &app,
        Method::PUT,
        &uri,
        Some(judgment("infosec", i.as_str(), j.as_str(), v.code())),
    )
    .await;
    assert_eq!(again.json()["revision"], pairs.len() as u64 + 1);
    assert_eq!(again.json()["priority"], body["priority"]);
}

#[tokio::test]
async fn judgment_errors() {
    let app = app_with(Config::default());
    let id = create(&app, &serialize(&infosec_skeleton())).await;
    let uri = format!("/sessions/{id}/judgments");

    let r = call(
        &app,
        Method::PUT,
        &uri,
        Some(judgment("infosec", "culture", "culture", "gt")),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["code"], "self_comparison");

    let r = call(
        &app,
        Method::PUT,
        &uri,
        Some(judgment("infosec", "culture", "integrity", "gt")),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);

    let r = call(
        &app,
        Method::PUT,
        &uri,
        Some(judgment("infosec", "culture", "economy", "maybe")),
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.json()["locus"], "value");

    let r = call(&app, Method::PUT, &uri, Some("{\"context\": ".into())).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let r = call(
        &app,
        Method::PUT,
        "/sessions/nope/judgments",
        Some(judgment("infosec", "culture", "economy", "gt")),
    )
    .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.json()["code"], "unknown_session");

    let stale = json!({ "context": "infosec", "i": "culture", "j": "economy", "value": "gt", "expected_revision": 7 });
    let r = call(&app, Method::PUT, &uri, Some(stale.to_string())).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.json()["code"], "revision_conflict");
}

#[tokio::test]
async fn create_errors() {
    let app = app_with(Config::default());
    let r = call(&app, Method::POST, "/sessions", Some("{ not json".into())).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(r.json()["locus"].as_str().unwrap().starts_with("line 1"));

    let bad = INFOSEC_DOCUMENT.replacen("\"value\": \"gt\"", "\"value\": \"maybe\"", 1);
    let r = call(&app, Method::POST, "/sessions", Some(bad)).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert!(r.json()["locus"].as_str().unwrap().ends_with(".value"));
}

#[tokio::test]
async fn sensitivity_endpoint() {
    let app = app_with(Config::default());
    let id = create(&app, INFOSEC_DOCUMENT).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/sensitivity/culture"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let report = &r.json()["report"];
    let zero: Vec<&str> = report["ranking_at_zero"]["order"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(zero, ["confidentiality", "availability", "integrity"]);

    let r = call(
        &app,
        Method::GET,
        &format!("/sessions/{id}/sensitivity/technology"),
        None,
    )
    .await;
    assert_eq!(r.json()["report"]["rank_one_changes"], false);

    let r = call(
        &app,
        Method::GET,
        &format!("/sessions/{id}/sensitivity/integrity"),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn symmetric_model_has_no_crossovers() {
    let mut model = infosec_skeleton();
    for ctx in model.contexts().to_vec() {
        for (i, j) in model.missing_pairs(ctx.id.as_str()).unwrap() {
            model
                .set_judgment(ctx.id.as_str(), i.as_str(), j.as_str(), tahp_core::TernaryValue::Equal)
                .unwrap();
        }
    }
    let app = app_with(Config::default());
    let id = create(&app, &serialize(&model)).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}/sensitivity/culture"), None).await;
    assert!(r.json()["report"]["crossovers"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn save_writes_the_document() {
    let dir = std::env::temp_dir().join(format!("tahp-service-test-{}", std::process::id()));
    let app = app_with(Config {
        snapshot_dir: Some(dir.clone()),
        ..Config::default()
    });
    let id = create(&app, INFOSEC_DOCUMENT).await;
    let r = call(&app, Method::POST, &format!("/sessions/{id}/save"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    let path = r.json()["path"].as_str().unwrap().to_owned();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), INFOSEC_DOCUMENT);
    std::fs::remove_dir_all(dir).unwrap();

    let r = call(&app_with(Config::default()), Method::POST, "/sessions/x/save", None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn session_view() {
    let app = app_with(Config::default());
    let id = create(&app, INFOSEC_DOCUMENT).await;
    let r = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    let body = r.json();
    assert_eq!(body["complete"], true);
    assert_eq!(body["schema_version"], "1");
    assert_eq!(body["document"]["name"], "infosec-evaluation");
}

#[tokio::test]
async fn concurrent_writes_serialize() {
    let app = app_with(Config::default());
    let id = create(&app, &serialize(&infosec_skeleton())).await;
    let uri = format!("/sessions/{id}/judgments");
    let mut handles = Vec::new();
    for k in 0..32 {
        let app = app.clone();
        let uri = uri.clone();
        let value = ["eq", "gt", "lt"][k % 3];
        handles.push(tokio::spawn(async move {
            call(
                &app,
                Method::PUT,
                &uri,
                Some(judgment("infosec", "management", "technology", value)),
            )
            .await
        }));
    }
    let mut revisions = Vec::new();
    for h in handles {
        revisions.push(h.await.unwrap().json()["revision"].as_u64().unwrap());
    }
    revisions.sort();
    assert_eq!(revisions, (1..=32).collect::<Vec<_>>());
}
