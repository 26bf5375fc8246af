use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use concord_service::{router, ErrorBody, Service, ServiceOptions};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &std::path::Path) -> Router {
    router(Arc::new(Service::open(dir, ServiceOptions::default()).unwrap()))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
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
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn error_code(v: &Value) -> String {
    serde_json::from_value::<ErrorBody>(v.clone()).unwrap().code
}

#[tokio::test]
async fn poll_lifecycle_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, poll) = call(
        &app,
        "POST",
        "/polls",
        Some(json!({
            "title": "fruit", "kind": "single", "ui_mode": "two_column",
            "alternatives": ["apple", {"id": "banana", "label": "Banana"}, "cherry"],
            "config": {"rules": ["plurality", "borda", "veto", "stv_put", "ranked_pairs_put"], "mixture_k": 2}
        })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{poll}");
    let id = poll["id"].as_str().unwrap().to_string();

    let (status, joined) = call(&app, "POST", &format!("/polls/{id}/join"), None).await;
    assert_eq!(status, StatusCode::OK);
    let token = joined["voter"].as_str().unwrap().to_string();
    assert_eq!(token.len(), 32);

    let ballots = [(3, ["cherry", "apple", "banana"]), (2, ["apple", "banana", "cherry"]), (2, ["banana", "apple", "cherry"])];
    let mut n = 0;
    for (count, order) in ballots {
        for _ in 0..count {
            n += 1;
            let groups: Vec<Vec<&str>> = order.iter().map(|a| vec![*a]).collect();
            let (status, rec) = call(
                &app,
                "POST",
                &format!("/polls/{id}/ballots"),
                Some(json!({"voter": format!("v{n}"), "payload": {"type": "ranking", "order": groups}})),
            )
            .await;
            assert_eq!(status, StatusCode::CREATED, "{rec}");
        }
    }
    let (status, snap) = call(&app, "GET", &format!("/polls/{id}/results?seed=4"), None).await;
    assert_eq!(status, StatusCode::OK, "{snap}");
    let winners = |rule: &str| -> Vec<String> {
        snap["body"]["results"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["rule"] == rule)
            .unwrap()["winners"]
            .as_array()
            .unwrap()
            .iter()
            .map(|w| w.as_str().unwrap().to_string())
            .collect()
    };
    assert_eq!(winners("plurality"), ["cherry"]);
    assert_eq!(winners("borda"), ["apple"]);
    assert_eq!(winners("veto"), ["apple"]);
    assert_eq!(winners("stv_put"), ["apple", "banana"]);
    assert_eq!(snap["seed"], 4);
    assert!(snap["body"]["mixture"]["weights"].is_array(), "{snap}");

    let (_, again) = call(&app, "GET", &format!("/polls/{id}/results?seed=4"), None).await;
    assert_eq!(again, snap);

    let (status, _) = call(&app, "POST", &format!("/polls/{id}/close"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (status, err) = call(
        &app,
        "POST",
        &format!("/polls/{id}/ballots"),
        Some(json!({"voter": "late", "payload": {"type": "ranking", "order": [["apple"]]}})),
    )
    .await;
    assert_eq!((status, error_code(&err)), (StatusCode::CONFLICT, "poll_closed".into()));
    let (_, view) = call(&app, "GET", &format!("/polls/{id}"), None).await;
    assert_eq!(view["poll"]["status"], "closed");
    assert_eq!(view["voters"], 7);
}

#[tokio::test]
async fn errors_are_json_with_codes() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, err) = call(&app, "GET", "/polls/poll-404", None).await;
    assert_eq!((status, error_code(&err)), (StatusCode::NOT_FOUND, "not_found".into()));

    let (status, err) = call(&app, "POST", "/polls", Some(json!({"title": "x"}))).await;
    assert_eq!((status, error_code(&err)), (StatusCode::BAD_REQUEST, "bad_request".into()));

    let (status, err) = call(
        &app,
        "POST",
        "/polls",
        Some(json!({"title": "x", "kind": "single", "alternatives": ["only"]})),
    )
    .await;
    assert_eq!((status, error_code(&err)), (StatusCode::UNPROCESSABLE_ENTITY, "invalid_definition".into()));

    let (status, err) = call(&app, "GET", "/polls/poll-1/results?seed=abc", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{err}");
}

#[tokio::test]
async fn bearer_token_identifies_the_voter() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (_, poll) = call(
        &app,
        "POST",
        "/polls",
        Some(json!({"title": "t", "kind": "single", "ui_mode": "yes_no", "alternatives": ["a", "b", "c"]})),
    )
    .await;
    let id = poll["id"].as_str().unwrap();
    let req = Request::builder()
        .method("POST")
        .uri(format!("/polls/{id}/ballots"))
        .header("content-type", "application/json")
        .header("authorization", "Bearer tok-1")
        .body(Body::from(json!({"payload": {"type": "approval", "approved": ["a", "c"]}}).to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    let rec: Value = serde_json::from_slice(&resp.into_body().collect().await.unwrap().to_bytes()).unwrap();
    assert_eq!(rec["voter"], "tok-1");
    assert_eq!(rec["derived"], json!([["a", "c"], ["b"]]));
}

#[tokio::test]
async fn multipoll_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, poll) = call(
        &app,
        "POST",
        "/polls",
        Some(json!({
            "title": "budget", "kind": "multi_issue",
            "config": {"multipoll": {
                "issues": [{"id": "x", "values": ["yes", "no"]}, {"id": "y", "values": ["yes", "no"]}],
                "issue_order": ["x", "y"]
            }}
        })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{poll}");
    let id = poll["id"].as_str().unwrap();
    let vote = |voter: &str, issue: &str, value: &str| {
        json!({"voter": voter, "payload": {"type": "issue_vote", "issue": issue, "value": value}})
    };
    call(&app, "POST", &format!("/polls/{id}/ballots"), Some(vote("a", "x", "yes"))).await;
    let (_, issue) = call(&app, "GET", &format!("/polls/{id}/issues/x"), None).await;
    assert_eq!(issue["status"], "open");
    let (_, d) = call(&app, "POST", &format!("/polls/{id}/advance"), None).await;
    assert_eq!(d["tally"]["outcome"], "yes");
    let (status, err) = call(&app, "POST", &format!("/polls/{id}/advance"), Some(json!({}))).await;
    assert_eq!((status, error_code(&err)), (StatusCode::CONFLICT, "missing_votes".into()));
    let (status, d) = call(&app, "POST", &format!("/polls/{id}/advance"), Some(json!({"force": true}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(d["forced"], true);
    let (_, issue) = call(&app, "GET", &format!("/polls/{id}/issues/y"), None).await;
    assert_eq!(issue["status"], "decided");
}

#[tokio::test]
async fn matching_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, m) = call(&app, "POST", "/matchings", Some(json!({"title": "fall"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    let id = m["id"].as_str().unwrap();
    let instance = json!({
        "schema": {"features": [{"name": "gpa", "min": 0.0, "max": 4.0}]},
        "courses": [
            {"course": "algo", "weights": [1.0], "capacity": 1},
            {"course": "data", "weights": [1.0], "capacity": 2}
        ],
        "students": [
            {"student": "top", "features": [3.9], "course_ranking": ["algo", "data"]},
            {"student": "mid", "features": [3.1], "course_ranking": ["algo", "data"]},
            {"student": "low", "features": [2.0], "course_ranking": ["algo"]}
        ]
    });
    let (status, _) = call(&app, "PUT", &format!("/matchings/{id}/instance"), Some(instance)).await;
    assert_eq!(status, StatusCode::OK);
    let (status, run) = call(&app, "POST", &format!("/matchings/{id}/run"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(run["run"], 1);
    assert_eq!(run["outcome"]["assignment"]["mid"], "data");
    let (_, e) = call(&app, "GET", &format!("/matchings/{id}/explanations/mid"), None).await;
    assert_eq!(e["courses"][0]["reason"], "CAPACITY_FILLED");
    assert_eq!(e["courses"][0]["cutoff"]["student"], "top");
    let (_, e) = call(&app, "GET", &format!("/matchings/{id}/explanations/top"), None).await;
    assert_eq!(e["courses"][1]["reason"], "ASSIGNED_HIGHER_RANKED");
    assert_eq!(e["courses"][1]["assigned_course"], "algo");

    let (status, _) = call(
        &app,
        "POST",
        &format!("/matchings/{id}/edits"),
        Some(json!([{"op": "pin", "student": "low", "course": "algo"}])),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let (_, run) = call(&app, "POST", &format!("/matchings/{id}/run"), None).await;
    assert_eq!(run["run"], 2);
    assert_eq!(run["outcome"]["assignment"]["low"], "algo");
    let (_, first) = call(&app, "GET", &format!("/matchings/{id}/outcome?run=1"), None).await;
    assert_eq!(first["outcome"]["assignment"]["top"], "algo");

    let (status, err) = call(
        &app,
        "POST",
        &format!("/matchings/{id}/edits"),
        Some(json!([{"op": "set_capacity", "course": "algo", "capacity": 0}])),
    )
    .await;
    assert_eq!((status, error_code(&err)), (StatusCode::UNPROCESSABLE_ENTITY, "invalid_instance".into()));
    assert!(err["message"].as_str().unwrap().contains("algo"));
}
