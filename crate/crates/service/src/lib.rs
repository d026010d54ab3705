//! HTTP JSON API over the analysis engine, a persistent collection of
//! example records and background search jobs. Everything lives under
//! `/api/v1`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;
use fractile::neighbor::Limits;

mod api;
pub mod collection;
pub mod jobs;

pub use collection::{Collection, StoreError};
pub use jobs::{JobState, Jobs, SearchJob};

pub struct AppState {
    pub collection: Arc<Collection>,
    pub jobs: Jobs,
    /// Caps for `/analyze`, mutation and graph export.
    pub limits: Limits,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub collection_path: PathBuf,
    pub bind: SocketAddr,
    pub max_workers: usize,
    pub max_running_jobs: usize,
    pub limits: Limits,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            collection_path: PathBuf::from("collection.jsonl"),
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            max_workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            max_running_jobs: 1,
            limits: Limits::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{var}: cannot parse {value:?}")]
    Bad { var: &'static str, value: String },
}

impl ServiceConfig {
    /// Defaults overridden by `COLLECTION_PATH`, `BIND_ADDR`, `MAX_WORKERS`
    /// and `MAX_JOBS`.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        fn parse<T: std::str::FromStr>(var: &'static str, value: String) -> Result<T, ConfigError> {
            value.trim().parse().map_err(|_| ConfigError::Bad { var, value })
        }
        let mut c = ServiceConfig::default();
        if let Some(v) = get("COLLECTION_PATH") {
            c.collection_path = PathBuf::from(v);
        }
        if let Some(v) = get("BIND_ADDR") {
            c.bind = parse("BIND_ADDR", v)?;
        }
        if let Some(v) = get("MAX_WORKERS") {
            c.max_workers = parse("MAX_WORKERS", v)?;
        }
        if let Some(v) = get("MAX_JOBS") {
            c.max_running_jobs = parse("MAX_JOBS", v)?;
        }
        Ok(c)
    }
}

impl AppState {
    pub fn new(config: &ServiceConfig) -> Result<Self, StoreError> {
        Ok(AppState {
            collection: Arc::new(Collection::open(&config.collection_path)?),
            jobs: Jobs::new(config.max_running_jobs, config.max_workers),
            limits: config.limits,
        })
    }
}

pub fn app(state: Arc<AppState>) -> Router {
    Router::new().nest("/api/v1", api::routes()).with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let state = Arc::new(AppState::new(&config)?);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, collection = %config.collection_path.display(), "serving");
    axum::serve(listener, app(state)).await?;
    Ok(())
}
