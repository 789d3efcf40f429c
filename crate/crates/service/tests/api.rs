// SPDX-License-Identifier: Apache-2.0

mod common;

use std::fs;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use common::{send, TestApp, TOKEN};
use retention_core::query::{self, CategoryGroup, CrMode, DisciplineOrder, FailureKind, RankOrder};
use retention_core::{Attribute, FilterSet, Situation};
use retention_service::{ApiError, SNAPSHOT_HEADERS};
use serde_json::{json, Value};

fn value(v: impl serde::Serialize) -> Value {
    serde_json::to_value(v).unwrap()
}

#[tokio::test]
async fn health_reports_version_and_headers() {
    let app = TestApp::new(1);
    let reply = app.get("/api/v1/health").await;
    assert_eq!(reply.status, StatusCode::OK);
    assert_eq!(reply.body, json!({"status": "ok", "version": 1}));
    let report = app.state.store.current().report().clone();
    assert_eq!(reply.header("x-ingest-rows-read"), report.rows_read);
    assert_eq!(reply.header("x-ingest-rows-rejected"), report.rows_rejected);
    for name in SNAPSHOT_HEADERS {
        assert!(reply.headers.contains_key(name), "{name}");
    }
}

#[tokio::test]
async fn endpoints_equal_engine_calls() {
    let app = TestApp::new(2);
    let snap = app.state.store.current();
    let course = snap.courses()[1].to_owned();
    let city = snap.students()[0].attributes.get(Attribute::BirthCity).to_owned();
    let city_q = city.replace(' ', "%20");
    let cases: Vec<(String, Value)> = vec![
        ("meta".into(), value(query::dataset_meta(&snap))),
        ("overview/situations".into(), value(query::situation_counts(&snap, &FilterSet::default()))),
        (
            format!("overview/situations?course={course}&birth_city={city_q}"),
            value(query::situation_counts(
                &snap,
                &FilterSet { course_id: Some(course.clone()), birth_city: Some(city.clone()), ..Default::default() },
            )),
        ),
        (
            "overview/situations?course=NOPE".into(),
            value(query::situation_counts(&snap, &FilterSet::course("NOPE"))),
        ),
        (
            "overview/course-ranking".into(),
            value(query::course_situation_ranking(&snap, Situation::Dropout, RankOrder::Top, 15).unwrap()),
        ),
        (
            "overview/course-ranking?situation=graduated&order=bottom&limit=2".into(),
            value(query::course_situation_ranking(&snap, Situation::Graduated, RankOrder::Bottom, 2).unwrap()),
        ),
        ("tda/histogram".into(), value(query::tda_histogram(&snap))),
        ("dropouts/attendance-bands".into(), value(query::attendance_bands(&snap, None))),
        (format!("dropouts/attendance-bands?course={course}"), value(query::attendance_bands(&snap, Some(&course)))),
        ("dropouts/cr-bands?mode=absolute".into(), value(query::cr_bands(&snap, None, CrMode::Absolute))),
        ("dropouts/cr-bands".into(), value(query::cr_bands(&snap, None, CrMode::Percent))),
        (
            "dropouts/failure-histogram?kind=frequency".into(),
            value(query::failure_histogram(&snap, None, FailureKind::Frequency)),
        ),
        (
            "dropouts/categories?group=socioeconomic&index=income_band".into(),
            value(query::category_breakdown(&snap, CategoryGroup::Socioeconomic, Attribute::IncomeBand, None).unwrap()),
        ),
        (
            format!("dropouts/categories?group=geographic&index=0&course={course}"),
            value(query::category_breakdown(&snap, CategoryGroup::Geographic, Attribute::BirthCity, Some(&course)).unwrap()),
        ),
        (
            "disciplines/ranking?limit=20&order=lowest".into(),
            value(query::discipline_failure_ranking(&snap, None, DisciplineOrder::Lowest, 20).unwrap()),
        ),
        (
            format!("disciplines/ranking?course={course}"),
            value(query::discipline_failure_ranking(&snap, Some(&course), DisciplineOrder::Highest, 10).unwrap()),
        ),
    ];
    for (path, expected) in cases {
        let reply = app.get(&format!("/api/v1/{path}")).await;
        assert_eq!(reply.status, StatusCode::OK, "{path}: {}", reply.body);
        assert_eq!(reply.body, expected, "{path}");
        assert_eq!(reply.version(), 1);
    }
}

#[tokio::test]
async fn percents_have_one_decimal_and_counts_are_integers() {
    let app = TestApp::new(3);
    let reply = app.get("/api/v1/overview/situations").await;
    for entry in reply.body["entries"].as_array().unwrap() {
        assert!(entry["count"].is_u64());
        let percent = entry["percent"].as_f64().unwrap();
        assert_eq!((percent * 10.0).round() / 10.0, percent);
    }
}

#[tokio::test]
async fn errors_carry_one_api_error() {
    let app = TestApp::new(1);
    for (uri, status) in [
        ("/api/v1/nowhere", StatusCode::NOT_FOUND),
        ("/", StatusCode::NOT_FOUND),
        ("/api/v1/dropouts/cr-bands?mode=relative", StatusCode::BAD_REQUEST),
        ("/api/v1/dropouts/failure-histogram?kind=late", StatusCode::BAD_REQUEST),
        ("/api/v1/overview/course-ranking?situation=deceased", StatusCode::BAD_REQUEST),
        ("/api/v1/overview/course-ranking?limit=-1", StatusCode::BAD_REQUEST),
        ("/api/v1/disciplines/ranking?limit=4", StatusCode::BAD_REQUEST),
        ("/api/v1/dropouts/categories?group=academic&index=9", StatusCode::BAD_REQUEST),
        ("/api/v1/overview/situations?entry_year=x", StatusCode::BAD_REQUEST),
        ("/api/v1/overview/situations?shoe_size=4", StatusCode::BAD_REQUEST),
    ] {
        let reply = app.get(uri).await;
        assert_eq!(reply.status, status, "{uri}");
        let err: ApiError = serde_json::from_value(reply.body.clone()).unwrap();
        assert_eq!(err.status, status.as_u16());
        assert!(!err.message.is_empty());
        assert_eq!(reply.version(), 1, "{uri}");
    }
    let reply = send(&app.app, Request::delete("/api/v1/health").body(Body::empty()).unwrap()).await;
    assert_eq!(reply.status, StatusCode::METHOD_NOT_ALLOWED);
    assert_eq!(reply.body["code"], "method_not_allowed");
}

#[tokio::test]
async fn reload_requires_the_token() {
    let app = TestApp::new(1);
    assert_eq!(app.reload(None).await.status, StatusCode::UNAUTHORIZED);
    let reply = app.reload(Some("wrong")).await;
    assert_eq!(reply.status, StatusCode::UNAUTHORIZED);
    assert_eq!(reply.body["code"], "unauthorized");
    assert_eq!(app.state.store.version(), 1);
}

#[tokio::test]
async fn reload_identical_files_bumps_version_only() {
    let app = TestApp::new(4);
    let before = app.get("/api/v1/dropouts/categories?group=academic&index=quota_type").await;
    let reply = app.reload(Some(TOKEN)).await;
    assert_eq!(reply.status, StatusCode::OK);
    assert_eq!(reply.body["version"], 2);
    let after = app.get("/api/v1/dropouts/categories?group=academic&index=quota_type").await;
    assert_eq!(after.version(), 2);
    assert_eq!(before.body, after.body);
}

#[tokio::test]
async fn corrupt_reload_is_422_and_keeps_serving() {
    let app = TestApp::new(5);
    let before = app.get("/api/v1/overview/situations").await;
    fs::write(&app.activity, "student_id;course_id\n1;2\n").unwrap();
    let reply = app.reload(Some(TOKEN)).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(reply.body["code"], "ingest_failed");
    assert!(reply.body["message"].as_str().unwrap().contains("missing required column"));
    assert_eq!(reply.version(), 1);
    let after = app.get("/api/v1/overview/situations").await;
    assert_eq!(after.version(), 1);
    assert_eq!(after.body, before.body);
}

#[tokio::test]
async fn reload_one_student_change_moves_one_count() {
    let app = TestApp::new(6);
    let before = app.get("/api/v1/overview/situations").await;
    let truth = &app.fixture.manifest.students;
    let target = truth.iter().find(|s| s.situation == Situation::Dropout).unwrap();
    // Rewrite the situation column of every line of that student.
    let text = fs::read_to_string(&app.activity).unwrap();
    let mut out = String::new();
    for (i, line) in text.lines().enumerate() {
        let mut fields: Vec<String> = line.split(',').map(str::to_owned).collect();
        if i > 0 && fields.len() == 22 && fields[0].trim() == target.student_id && fields[1].trim() == target.course_id {
            fields[10] = "graduated".to_owned();
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    fs::write(&app.activity, out).unwrap();
    assert_eq!(app.reload(Some(TOKEN)).await.status, StatusCode::OK);
    let after = app.get("/api/v1/overview/situations").await;
    assert_eq!(after.version(), 2);
    let count = |reply: &common::Reply, label: &str| {
        reply.body["entries"].as_array().unwrap().iter().find(|e| e["label"] == label).unwrap()["count"].as_u64().unwrap()
    };
    assert_eq!(count(&after, "Dropout") + 1, count(&before, "Dropout"));
    assert_eq!(count(&after, "Graduated"), count(&before, "Graduated") + 1);
    assert_eq!(count(&after, "InProgress"), count(&before, "InProgress"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn reads_during_reload_see_one_whole_snapshot() {
    let app = TestApp::new(7);
    let original = fs::read_to_string(&app.activity).unwrap();
    let body = original.split_once('\n').unwrap().1;
    let variant = format!("{original}{}", body.lines().take(40).map(|l| format!("{l}\n")).collect::<String>());
    let expected_for = |text: &str| {
        let snap = retention_core::Snapshot::from_readers(
            text.as_bytes(),
            app.fixture.cohort_csv.as_bytes(),
            &Default::default(),
            *app.state.store.current().reference(),
            0,
        )
        .unwrap();
        (value(snap.report().rows_read), value(query::situation_counts(&snap, &FilterSet::default())))
    };
    // Odd versions serve the original file, even versions the variant.
    let odd = expected_for(&original);
    let even = expected_for(&variant);
    assert_ne!(odd.0, even.0);

    let reader = |app: axum::Router| async move {
        let mut seen = Vec::new();
        for _ in 0..60 {
            let reply = send(&app, Request::get("/api/v1/overview/situations").body(Body::empty()).unwrap()).await;
            seen.push((reply.version(), reply.header("x-ingest-rows-read"), reply.body));
        }
        seen
    };
    let readers: Vec<_> = (0..4).map(|_| tokio::spawn(reader(app.app.clone()))).collect();
    for i in 0..6 {
        fs::write(&app.activity, if i % 2 == 0 { &variant } else { &original }).unwrap();
        assert_eq!(app.reload(Some(TOKEN)).await.status, StatusCode::OK);
    }
    for handle in readers {
        for (version, rows_read, body) in handle.await.unwrap() {
            let (rows, counts) = if version % 2 == 1 { &odd } else { &even };
            assert_eq!(&value(rows_read), rows, "version {version}");
            assert_eq!(&body, counts, "version {version}");
        }
    }
    assert_eq!(app.state.store.version(), 7);
}

#[tokio::test]
async fn cors_allows_the_dashboard_origin() {
    let app = TestApp::new(1);
    let request = Request::get("/api/v1/health").header("origin", "http://localhost:5173").body(Body::empty()).unwrap();
    let reply = send(&app.app, request).await;
    assert_eq!(reply.headers.get("access-control-allow-origin").unwrap(), "http://localhost:5173");
    let exposed = reply.headers.get("access-control-expose-headers").unwrap().to_str().unwrap();
    assert!(exposed.contains("x-snapshot-version"));

    let preflight = Request::options("/api/v1/admin/reload")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let reply = send(&app.app, preflight).await;
    assert!(reply.headers.contains_key("access-control-allow-methods"));
}
