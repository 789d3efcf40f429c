// SPDX-License-Identifier: Apache-2.0

//! HTTP JSON API serving every retention-core query from a hot-swappable
//! snapshot.

mod config;
mod error;
mod report;
mod routes;

pub use config::{ConfigError, ServiceConfig, ENV_PREFIX};
pub use error::{ApiError, ServiceError};
pub use report::{Report, ReportOutput, REPORT_PATHS};
pub use routes::{router, AppState, API_PREFIX, SNAPSHOT_HEADERS};

/// Builds the initial snapshot, binds `config.listen` and serves until
/// ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = AppState::open(&config)?;
    let app = router(state, config.cors_origin.as_deref())?;
    let listener = tokio::net::TcpListener::bind(&config.listen)
        .await
        .map_err(|source| ServiceError::Bind { addr: config.listen.clone(), source })?;
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}
