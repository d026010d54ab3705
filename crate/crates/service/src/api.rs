use std::cmp::Reverse;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fractile::analysis::{analyze, ExampleRecord, OutcomeSummary};
use fractile::export::{export_outcome_dot, export_record, graph_json};
use fractile::ifs::IfsSpec;
use fractile::neighbor::build;
use fractile::render::{render, Coloring, Depth, RenderRequest, Window};
use fractile::search::{mutate, Family, Filters, SearchConfig};
use fractile::topology::AttractorClass;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::jobs::CancelError;
use crate::AppState;

/// Attempts at drawing a child whose id is not in the collection yet.
const MUTATE_ATTEMPTS: usize = 64;
const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 500;

pub fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/health", get(health))
        .route("/analyze", post(analyze_spec))
        .route("/search", post(start_search).get(list_jobs))
        .route("/search/{id}", get(job_status))
        .route("/search/{id}/cancel", post(cancel_job))
        .route("/examples", get(list_examples))
        .route("/examples/{id}", get(get_example))
        .route("/examples/{id}/mutate", post(mutate_example))
        .route("/examples/{id}/render", get(render_example))
        .route("/examples/{id}/neighborgraph.dot", get(example_dot))
        .route("/examples/{id}/neighborgraph.json", get(example_graph_json))
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no {what} with id {id}"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }

    fn with(mut self, key: &str, value: serde_json::Value) -> Self {
        self.body[key] = value;
        self
    }
}

impl From<fractile::Error> for ApiError {
    fn from(e: fractile::Error) -> Self {
        use fractile::Error::*;
        match &e {
            Invalid(violations) => ApiError::bad_request(e.to_string()).with(
                "violations",
                json!(violations.iter().map(|v| v.to_string()).collect::<Vec<_>>()),
            ),
            Io(_) => ApiError::internal(e),
            _ => ApiError::bad_request(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Records go out through the same serialiser as the CLI, byte for byte.
fn record_response(status: StatusCode, record: &ExampleRecord) -> Response {
    (
        status,
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        export_record(record),
    )
        .into_response()
}

fn too_complex(record: &ExampleRecord) -> Option<ApiError> {
    match record.outcome {
        OutcomeSummary::TooComplex { candidates, .. } => Some(
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "neighbor graph exceeds the caps")
                .with("candidates", json!(candidates))
                .with("record", serde_json::to_value(record).unwrap_or_default()),
        ),
        _ => None,
    }
}

fn parse_body<T>(body: &Bytes, parse: impl FnOnce(&str) -> Result<T, fractile::Error>) -> ApiResult<T> {
    let text = std::str::from_utf8(body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    Ok(parse(text)?)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "collection": state.collection.meta(),
        "records": state.collection.len(),
    }))
}

async fn analyze_spec(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let spec = parse_body(&body, IfsSpec::from_json)?;
    let limits = state.limits;
    let record = tokio::task::spawn_blocking(move || analyze(&spec, limits))
        .await
        .map_err(ApiError::internal)??;
    if let Some(e) = too_complex(&record) {
        return Err(e);
    }
    Ok(record_response(StatusCode::OK, &record))
}

async fn start_search(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let config = parse_body(&body, SearchConfig::from_json)?;
    Family::new(&config)?;
    for (i, s) in config.initial_specs.iter().enumerate() {
        fractile::ifs::ensure_valid(s).map_err(|e| ApiError::from(e).with("initial_spec", json!(i + 1)))?;
    }
    let job = state.jobs.start(config, state.collection.clone());
    Ok((StatusCode::ACCEPTED, Json(job)).into_response())
}

async fn list_jobs(State(state): State<Arc<AppState>>) -> Response {
    Json(json!({ "jobs": state.jobs.list() })).into_response()
}

async fn job_status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let job = state.jobs.get(&id).ok_or_else(|| ApiError::not_found("job", &id))?;
    Ok(Json(job).into_response())
}

async fn cancel_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    match state.jobs.cancel(&id) {
        Ok(job) => Ok((StatusCode::ACCEPTED, Json(job)).into_response()),
        Err(CancelError::Unknown) => Err(ApiError::not_found("job", &id)),
        Err(CancelError::AlreadyFinished(s)) => Err(ApiError::new(
            StatusCode::CONFLICT,
            format!("job {id} already finished ({s:?})"),
        )),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Sort {
    /// Insertion order.
    #[default]
    Created,
    /// Fewest neighbor types first, then more first-level intersections.
    Complexity,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ListQuery {
    #[serde(default)]
    sort: Sort,
    limit: Option<usize>,
    /// Id of the last record on the previous page.
    cursor: Option<String>,
    connected: Option<bool>,
    class: Option<AttractorClass>,
    min_types: Option<usize>,
    max_types: Option<usize>,
    min_fli: Option<usize>,
    max_fli: Option<usize>,
    outcome: Option<String>,
}

impl ListQuery {
    fn filters(&self) -> Option<Filters> {
        let f = Filters {
            connected: self.connected,
            min_types: self.min_types,
            max_types: self.max_types,
            attractor_class: self.class,
            min_fli: self.min_fli,
            max_fli: self.max_fli,
        };
        (f != Filters::default()).then_some(f)
    }
}

#[derive(Serialize)]
struct Page {
    items: Vec<ExampleRecord>,
    next_cursor: Option<String>,
    total: usize,
}

type ComplexityKey = (usize, Reverse<usize>, String);

fn complexity_key(r: &ExampleRecord) -> ComplexityKey {
    (
        r.neighbor_count.unwrap_or(usize::MAX),
        Reverse(r.fli.unwrap_or(0)),
        r.id.clone(),
    )
}

async fn list_examples(
    State(state): State<Arc<AppState>>,
    query: Result<Query<ListQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Response> {
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let limit = q.limit.unwrap_or(DEFAULT_PAGE);
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::bad_request(format!("limit must be in 1..={MAX_PAGE}")));
    }
    let filters = q.filters();
    let mut records: Vec<(usize, ExampleRecord)> = state
        .collection
        .records()
        .into_iter()
        .enumerate()
        .filter(|(_, r)| filters.as_ref().is_none_or(|f| f.accepts(r)))
        .filter(|(_, r)| q.outcome.as_deref().is_none_or(|k| r.outcome.kind() == k))
        .collect();
    let total = records.len();
    if q.sort == Sort::Complexity {
        records.sort_by_cached_key(|(_, r)| complexity_key(r));
    }
    // records never change, so the cursor's sort key is stable
    let start = match &q.cursor {
        None => 0,
        Some(c) => {
            let all = state.collection.records();
            let (at, anchor) = all
                .iter()
                .enumerate()
                .find(|(_, r)| &r.id == c)
                .ok_or_else(|| ApiError::bad_request(format!("unknown cursor {c}")))?;
            match q.sort {
                Sort::Created => records.partition_point(|(i, _)| *i <= at),
                Sort::Complexity => {
                    let key = complexity_key(anchor);
                    records.partition_point(|(_, r)| complexity_key(r) <= key)
                }
            }
        }
    };
    let items: Vec<ExampleRecord> = records.into_iter().skip(start).take(limit).map(|(_, r)| r).collect();
    let next_cursor = (start + items.len() < total)
        .then(|| items.last().map(|r| r.id.clone()))
        .flatten();
    Ok(Json(Page {
        items,
        next_cursor,
        total,
    })
    .into_response())
}

fn lookup(state: &AppState, id: &str) -> ApiResult<ExampleRecord> {
    state.collection.get(id).ok_or_else(|| ApiError::not_found("example", id))
}

async fn get_example(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(record_response(StatusCode::OK, &lookup(&state, &id)?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct MutateBody {
    seed: Option<u64>,
}

async fn mutate_example(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let parent = lookup(&state, &id)?;
    let opts: MutateBody = if body.iter().all(u8::is_ascii_whitespace) {
        MutateBody::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    let seed = opts.seed.unwrap_or_else(|| rand::rng().random());
    let limits = state.limits;
    let collection = state.collection.clone();
    let child = tokio::task::spawn_blocking(move || -> ApiResult<ExampleRecord> {
        let family = Family::new(&SearchConfig::family_of(&parent.spec))?;
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        for _ in 0..MUTATE_ATTEMPTS {
            let spec = mutate(&parent.spec, &family, &mut rng)?;
            if collection.contains(&fractile::analysis::spec_id(&spec)) {
                continue;
            }
            let mut record = analyze(&spec, limits)?;
            if let Some(e) = too_complex(&record) {
                return Err(e);
            }
            record.parent = Some(parent.id.clone());
            // another request may have stored the same child meanwhile
            if let Some(stored) = collection.insert_new(record).map_err(ApiError::internal)? {
                return Ok(stored);
            }
        }
        Err(ApiError::new(
            StatusCode::CONFLICT,
            "every mutation drawn is already in the collection",
        ))
    })
    .await
    .map_err(ApiError::internal)??;
    Ok(record_response(StatusCode::CREATED, &child))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RenderQuery {
    w: Option<u32>,
    h: Option<u32>,
    /// `auto` or `cx,cy,half_width` in standard coordinates.
    window: Option<String>,
    coloring: Option<String>,
    depth: Option<u32>,
    format: Option<String>,
}

fn parse_window(s: &str) -> ApiResult<Window> {
    if s == "auto" {
        return Ok(Window::Auto);
    }
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| ApiError::bad_request(format!("window must be auto or cx,cy,half_width, got {s:?}")))?;
    match parts[..] {
        [cx, cy, half_width] => Ok(Window::Explicit { cx, cy, half_width }),
        _ => Err(ApiError::bad_request(format!("window needs three numbers, got {}", parts.len()))),
    }
}

fn parse_coloring(s: &str) -> ApiResult<Coloring> {
    match s {
        "mono" => Ok(Coloring::Mono),
        "first" | "first_index" => Ok(Coloring::FirstIndex),
        "second" | "second_index" => Ok(Coloring::SecondIndex),
        _ => Err(ApiError::bad_request(format!("unknown coloring {s:?}"))),
    }
}

async fn render_example(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<RenderQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Response> {
    let record = lookup(&state, &id)?;
    let Query(q) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let defaults = RenderRequest::default();
    let width = q.w.unwrap_or(defaults.width);
    let req = RenderRequest {
        window: q.window.as_deref().map(parse_window).transpose()?.unwrap_or_default(),
        width,
        height: q.h.unwrap_or(width),
        coloring: q.coloring.as_deref().map(parse_coloring).transpose()?.unwrap_or_default(),
        depth: q.depth.map(Depth::Fixed).unwrap_or_default(),
    };
    let png = match q.format.as_deref() {
        None | Some("ppm") => false,
        Some("png") => true,
        Some(other) => return Err(ApiError::bad_request(format!("unknown format {other:?}"))),
    };
    let (bytes, mime) = tokio::task::spawn_blocking(move || -> ApiResult<(Vec<u8>, &'static str)> {
        let raster = render(&record.spec, &req)?;
        Ok(if png {
            (raster.to_png()?, "image/png")
        } else {
            (raster.to_ppm(), "image/x-portable-pixmap")
        })
    })
    .await
    .map_err(ApiError::internal)??;
    Ok(([(header::CONTENT_TYPE, HeaderValue::from_static(mime))], bytes).into_response())
}

async fn rebuild(state: &AppState, id: &str) -> ApiResult<fractile::neighbor::BuildOutcome> {
    let record = lookup(state, id)?;
    let limits = state.limits;
    Ok(tokio::task::spawn_blocking(move || build(&record.spec, limits))
        .await
        .map_err(ApiError::internal)??)
}

fn no_graph(kind: &str) -> ApiError {
    ApiError::new(
        StatusCode::UNPROCESSABLE_ENTITY,
        format!("no neighbor graph for outcome {kind}"),
    )
}

async fn example_dot(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let outcome = rebuild(&state, &id).await?;
    let dot = export_outcome_dot(&outcome).ok_or_else(|| no_graph(outcome.kind()))?;
    Ok(([(header::CONTENT_TYPE, HeaderValue::from_static("text/vnd.graphviz"))], dot).into_response())
}

async fn example_graph_json(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let outcome = rebuild(&state, &id).await?;
    let g = outcome.graph().ok_or_else(|| no_graph(outcome.kind()))?;
    Ok(Json(graph_json(g)).into_response())
}
