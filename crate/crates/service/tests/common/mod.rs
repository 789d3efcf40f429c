// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use retention_core::fixtures::{generate, Fixture, FixtureSpec};
use retention_core::DataSources;
use retention_service::{router, AppState, ServiceConfig};
use serde_json::Value;
use tower::ServiceExt;

pub const TOKEN: &str = "s3cret";

pub struct TestApp {
    pub dir: tempfile::TempDir,
    pub fixture: Fixture,
    pub activity: PathBuf,
    pub state: AppState,
    pub app: Router,
}

impl TestApp {
    pub fn new(seed: u64) -> Self {
        Self::with_spec(FixtureSpec::with_seed(seed))
    }

    pub fn with_spec(spec: FixtureSpec) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let fixture = generate(&spec);
        let paths = fixture.write(dir.path()).unwrap();
        let mut config = ServiceConfig::new(DataSources::new(&paths.activity, &paths.cohort));
        config.admin_token = Some(TOKEN.to_owned());
        let state = AppState::open(&config).unwrap();
        let app = router(state.clone(), Some("http://localhost:5173")).unwrap();
        Self { dir, fixture, activity: paths.activity, state, app }
    }

    pub async fn get(&self, uri: &str) -> Reply {
        send(&self.app, Request::get(uri).body(Body::empty()).unwrap()).await
    }

    pub async fn reload(&self, token: Option<&str>) -> Reply {
        let mut request = Request::post("/api/v1/admin/reload");
        if let Some(token) = token {
            request = request.header("authorization", format!("Bearer {token}"));
        }
        send(&self.app, request.body(Body::empty()).unwrap()).await
    }
}

pub struct Reply {
    pub status: StatusCode,
    pub headers: axum::http::HeaderMap,
    pub body: Value,
}

impl Reply {
    pub fn header(&self, name: &str) -> u64 {
        self.headers.get(name).unwrap_or_else(|| panic!("missing {name}")).to_str().unwrap().parse().unwrap()
    }

    pub fn version(&self) -> u64 {
        self.header("x-snapshot-version")
    }
}

pub async fn send(app: &Router, request: Request<Body>) -> Reply {
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let headers = response.headers().clone();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    Reply { status, headers, body }
}
