//! HTTP backend for the labeling study.
//!
//! A session walks one labeler through a deck of histograms in a fixed order,
//! records a verdict per item and derives personal acceptance thresholds from
//! the answers. Sessions survive restarts; see [`session`] for the layout.
//!
//! | method | path | body / query |
//! |--------|------|--------------|
//! | `POST` | `/sessions` | `{deck_spec?, deck_file?, labeler_id?}` |
//! | `GET`  | `/sessions/{id}/next` | |
//! | `POST` | `/sessions/{id}/labels` | `{histogram_id, verdict}` |
//! | `GET`  | `/sessions/{id}/results` | `?alpha&n&mc_samples&seed&delta` |

pub mod error;
pub mod session;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use rankbins::bin_selection::{optimal_bin_count, BinSearchResult, BinSearchSpec};
use rankbins::study::{analyze, DeckSpec, LabelRecord, StudyAnalysis, StudyDeck, DEFAULT_DELTA};
use rankbins::{McConfig, Verdict};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub use error::{ServiceError, ServiceResult};
pub use session::{Progress, Registry, Session, SessionMeta};

/// Monte-Carlo replications for optimal-`k` requests when the client sets none.
pub const DEFAULT_RESULTS_MC_SAMPLES: usize = 100_000;
/// Upper bound on client-requested replications.
pub const MAX_RESULTS_MC_SAMPLES: usize = 10_000_000;
/// Upper bound on items per category for generated decks.
pub const MAX_PER_CATEGORY: usize = 1000;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Directory with the labeling UI bundle, served for non-API paths.
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct AppState {
    registry: Arc<Registry>,
}

impl AppState {
    pub fn open(data_dir: impl AsRef<Path>) -> ServiceResult<Self> {
        Ok(AppState { registry: Arc::new(Registry::open(data_dir)?) })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }
}

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_item))
        .route("/sessions/{id}/labels", post(submit_label))
        .route("/sessions/{id}/results", get(session_results))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> ServiceResult<()> {
    let data_dir = config.data_dir.clone();
    let state = blocking(move || AppState::open(data_dir)).await?;
    let app = router(state, config.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(rankbins::Error::from)?;
    let local = listener.local_addr().map_err(rankbins::Error::from)?;
    tracing::info!(%local, data_dir = %config.data_dir.display(), "study service listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(rankbins::Error::from)?;
    Ok(())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ServiceResult<T> + Send + 'static) -> ServiceResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ServiceError::Internal(e.to_string()))?
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSessionRequest {
    pub deck_spec: Option<DeckSpec>,
    pub deck_file: Option<PathBuf>,
    pub labeler_id: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
    pub total: usize,
}

fn build_deck(req: &CreateSessionRequest) -> ServiceResult<StudyDeck> {
    match (&req.deck_spec, &req.deck_file) {
        (Some(_), Some(_)) => Err(ServiceError::Validation("give either deck_spec or deck_file, not both".into())),
        (_, Some(path)) => StudyDeck::load(path)
            .map_err(|e| ServiceError::Validation(format!("cannot load deck {}: {e}", path.display()))),
        (spec, None) => {
            let spec = spec.clone().unwrap_or_default();
            if spec.per_category > MAX_PER_CATEGORY {
                return Err(ServiceError::Validation(format!("per_category may not exceed {MAX_PER_CATEGORY}")));
            }
            Ok(spec.build()?)
        }
    }
}

async fn create_session(
    State(state): State<AppState>,
    body: Option<Json<CreateSessionRequest>>,
) -> ServiceResult<(StatusCode, Json<CreateSessionResponse>)> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let response = blocking(move || {
        let deck = build_deck(&req)?;
        let labeler = req.labeler_id.unwrap_or_else(|| "anonymous".to_string());
        let session = state.registry.create(deck, labeler, now())?;
        let s = session.lock().expect("session lock");
        Ok(CreateSessionResponse { session_id: s.meta().session_id.clone(), total: s.deck().len() })
    })
    .await?;
    tracing::info!(session = %response.session_id, total = response.total, "session created");
    Ok((StatusCode::CREATED, Json(response)))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NextResponse {
    Item { histogram_id: u32, k: usize, heights: Vec<f64>, progress: usize, total: usize },
    Done { done: bool, progress: usize, total: usize },
}

async fn next_item(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> ServiceResult<Json<NextResponse>> {
    let session = state.registry.get(&id)?;
    let s = session.lock().expect("session lock");
    let p = s.progress();
    Ok(Json(match s.next_item() {
        Some(item) => NextResponse::Item {
            histogram_id: item.histogram_id,
            k: item.k,
            heights: item.heights,
            progress: p.progress,
            total: p.total,
        },
        None => NextResponse::Done { done: true, progress: p.progress, total: p.total },
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct LabelRequest {
    pub histogram_id: u32,
    pub verdict: String,
}

async fn submit_label(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<LabelRequest>,
) -> ServiceResult<Json<Progress>> {
    let verdict: Verdict = req
        .verdict
        .parse()
        .map_err(|_| ServiceError::Validation(format!("unknown verdict {:?}; use accept or reject", req.verdict)))?;
    let session = state.registry.get(&id)?;
    blocking(move || {
        let mut s = session.lock().expect("session lock");
        s.submit(req.histogram_id, verdict, now())
    })
    .await
    .map(Json)
}

#[derive(Debug, Default, Deserialize)]
pub struct ResultsQuery {
    pub alpha: Option<f64>,
    pub n: Option<usize>,
    pub mc_samples: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ResultsResponse {
    #[serde(flatten)]
    pub analysis: StudyAnalysis,
    /// Optimal bin count per distance for the personal `c_acc`, when `alpha`
    /// and `n` were requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimal_k: Option<Vec<BinSearchResult>>,
}

fn results(deck: &StudyDeck, labels: &[LabelRecord], q: &ResultsQuery) -> ServiceResult<ResultsResponse> {
    let analysis = analyze(deck, labels, q.delta.unwrap_or(DEFAULT_DELTA))?;
    let optimal_k = match (q.alpha, q.n) {
        (None, None) => None,
        (Some(alpha), Some(n)) => {
            let reps = q.mc_samples.unwrap_or(DEFAULT_RESULTS_MC_SAMPLES);
            if reps > MAX_RESULTS_MC_SAMPLES {
                return Err(ServiceError::Validation(format!("mc_samples may not exceed {MAX_RESULTS_MC_SAMPLES}")));
            }
            let mc = McConfig::new(reps, q.seed.unwrap_or(0));
            let rows = analysis
                .kinds
                .iter()
                .map(|ka| optimal_bin_count(&BinSearchSpec::new(ka.kind, alpha, n, ka.thresholds.thresholds.c_acc, mc)))
                .collect::<rankbins::Result<Vec<_>>>()?;
            Some(rows)
        }
        _ => return Err(ServiceError::Validation("alpha and n must be given together".into())),
    };
    Ok(ResultsResponse { analysis, optimal_k })
}

async fn session_results(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ResultsQuery>,
) -> ServiceResult<Json<ResultsResponse>> {
    let session = state.registry.get(&id)?;
    // Analyse a snapshot so labeling in the same session is not blocked.
    let (deck, labels) = {
        let s = session.lock().expect("session lock");
        (s.deck().clone(), s.labels().to_vec())
    };
    blocking(move || results(&deck, &labels, &q))
    .await
    .map(Json)
}
