use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::oneshot;

use super::assign::AssignmentView;
use super::report::{aggregate_ratings, collection_stats, pairwise_report, qe_summary, GroupKey};
use super::store::{AnnotationStore, Choice, QeRecord};
use super::{AnnotationError, SCHEMA_VERSION};
use crate::lang::Lang;

pub type SharedStore = Arc<Mutex<AnnotationStore>>;

impl IntoResponse for AnnotationError {
    fn into_response(self) -> Response {
        let status = match &self {
            Self::UnknownSurvey(_) | Self::UnknownTask(_) | Self::UnknownItem(_) => {
                StatusCode::NOT_FOUND
            }
            Self::Closed(_) | Self::StillOpen(_) => StatusCode::CONFLICT,
            Self::OutOfRange { .. } | Self::BadToken | Self::Version(_) | Self::Config(_) => {
                StatusCode::BAD_REQUEST
            }
            Self::Io { .. } | Self::Log { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = json!({ "v": SCHEMA_VERSION, "error": self.to_string(), "field": self.field() });
        (status, Json(body)).into_response()
    }
}

type ApiResult = Result<Json<Value>, AnnotationError>;

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn check_version(v: u32) -> Result<(), AnnotationError> {
    if v == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(AnnotationError::Version(v))
    }
}

fn lock(store: &SharedStore) -> std::sync::MutexGuard<'_, AnnotationStore> {
    // a panicked handler cannot leave the store half-written: events are
    // applied only after the log write succeeds
    store.lock().unwrap_or_else(|e| e.into_inner())
}

#[derive(Deserialize)]
struct AnnotatorQuery {
    annotator: String,
}

#[derive(Deserialize)]
struct RatingBody {
    v: u32,
    annotator: String,
    question_id: String,
    helpfulness: u8,
    naturalness: u8,
}

#[derive(Deserialize)]
struct VoteBody {
    v: u32,
    annotator: String,
    item: String,
    choice: Choice,
}

#[derive(Deserialize)]
struct QeBody {
    v: u32,
    #[serde(default)]
    system: String,
    item: String,
    lang: Lang,
    annotator: String,
    fluency: u8,
    consistency: u8,
    incorrect_instruction: bool,
}

#[derive(Deserialize)]
struct GroupQuery {
    #[serde(default)]
    group_by: String,
}

async fn survey_next(
    State(s): State<SharedStore>,
    Path(id): Path<String>,
    Query(q): Query<AnnotatorQuery>,
) -> ApiResult {
    let store = lock(&s);
    Ok(Json(match store.next_assignment(&id, &q.annotator)? {
        Some(a) => {
            json!({ "v": SCHEMA_VERSION, "done": false, "assignment": AssignmentView::from(&a) })
        }
        None => json!({ "v": SCHEMA_VERSION, "done": true }),
    }))
}

async fn survey_rating(
    State(s): State<SharedStore>,
    Path(id): Path<String>,
    Json(b): Json<RatingBody>,
) -> ApiResult {
    check_version(b.v)?;
    let seq = lock(&s).submit_rating(
        &id,
        &b.annotator,
        &b.question_id,
        b.helpfulness,
        b.naturalness,
        now_ms(),
    )?;
    Ok(Json(json!({ "v": SCHEMA_VERSION, "seq": seq })))
}

async fn survey_close(State(s): State<SharedStore>, Path(id): Path<String>) -> ApiResult {
    let seq = lock(&s).close_survey(&id, now_ms())?;
    Ok(Json(json!({ "v": SCHEMA_VERSION, "seq": seq })))
}

async fn pairwise_next(
    State(s): State<SharedStore>,
    Path(id): Path<String>,
    Query(q): Query<AnnotatorQuery>,
) -> ApiResult {
    let store = lock(&s);
    Ok(Json(match store.next_pair(&id, &q.annotator)? {
        Some((item, left, right)) => {
            json!({ "v": SCHEMA_VERSION, "done": false, "item": { "id": item, "left": left, "right": right } })
        }
        None => json!({ "v": SCHEMA_VERSION, "done": true }),
    }))
}

async fn pairwise_vote(
    State(s): State<SharedStore>,
    Path(id): Path<String>,
    Json(b): Json<VoteBody>,
) -> ApiResult {
    check_version(b.v)?;
    let seq = lock(&s).submit_vote(&id, &b.annotator, &b.item, b.choice, now_ms())?;
    Ok(Json(json!({ "v": SCHEMA_VERSION, "seq": seq })))
}

async fn qe_rating(State(s): State<SharedStore>, Json(b): Json<QeBody>) -> ApiResult {
    check_version(b.v)?;
    let seq = lock(&s).submit_qe(QeRecord {
        system: b.system,
        item: b.item,
        lang: b.lang,
        annotator: b.annotator,
        fluency: b.fluency,
        consistency: b.consistency,
        incorrect_instruction: b.incorrect_instruction,
        received_at: now_ms(),
    })?;
    Ok(Json(json!({ "v": SCHEMA_VERSION, "seq": seq })))
}

/// Grouping by model is refused while any survey is still collecting, so
/// nothing client-visible links answers to models before close.
async fn report_ratings(State(s): State<SharedStore>, Query(q): Query<GroupQuery>) -> ApiResult {
    let keys = GroupKey::parse_list(&q.group_by)?;
    let store = lock(&s);
    if keys.contains(&GroupKey::Model) {
        if let Some(open) = store
            .config()
            .surveys
            .iter()
            .find(|sv| !store.is_closed(&sv.id))
        {
            return Err(AnnotationError::StillOpen(open.id.clone()));
        }
    }
    let rows = aggregate_ratings(store.config(), store.state(), &keys);
    Ok(Json(json!({ "v": SCHEMA_VERSION, "rows": rows })))
}

async fn report_qe(State(s): State<SharedStore>) -> ApiResult {
    let store = lock(&s);
    Ok(Json(
        json!({ "v": SCHEMA_VERSION, "rows": qe_summary(store.state()) }),
    ))
}

async fn report_pairwise(State(s): State<SharedStore>) -> ApiResult {
    let store = lock(&s);
    let rows = store
        .config()
        .pairwise
        .iter()
        .map(|t| pairwise_report(store.config(), store.state(), &t.id))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Json(json!({ "v": SCHEMA_VERSION, "rows": rows })))
}

async fn report_collection(State(s): State<SharedStore>) -> ApiResult {
    let store = lock(&s);
    Ok(Json(
        json!({ "v": SCHEMA_VERSION, "rows": collection_stats(store.config(), store.state()) }),
    ))
}

pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/survey/{id}/next", get(survey_next))
        .route("/survey/{id}/rating", post(survey_rating))
        .route("/survey/{id}/close", post(survey_close))
        .route("/pairwise/{id}/next", get(pairwise_next))
        .route("/pairwise/{id}/vote", post(pairwise_vote))
        .route("/qe/rating", post(qe_rating))
        .route("/reports/ratings", get(report_ratings))
        .route("/reports/qe", get(report_qe))
        .route("/reports/pairwise", get(report_pairwise))
        .route("/reports/collection", get(report_collection))
        .with_state(store)
}

/// Runs the service on the current thread until the process exits.
pub fn serve(store: SharedStore, addr: SocketAddr) -> std::io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(addr = %listener.local_addr()?, "annotation service listening");
        axum::serve(listener, router(store)).await
    })
}

/// Background server; stops when dropped.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Starts the service on its own runtime thread. Use port 0 for an
/// ephemeral port.
pub fn spawn(store: SharedStore, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    let listener = std::net::TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let rt = tokio::runtime::Builder::new_multi_thread()
        .worker_threads(4)
        .enable_all()
        .build()?;
    let (tx, rx) = oneshot::channel();
    let thread = std::thread::spawn(move || {
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener from std");
            let _ = axum::serve(listener, router(store))
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
    });
    Ok(ServerHandle {
        addr,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures;
    use super::*;

    fn start() -> (ServerHandle, SharedStore) {
        let store = Arc::new(Mutex::new(
            AnnotationStore::in_memory(fixtures::config()).unwrap(),
        ));
        (
            spawn(store.clone(), "127.0.0.1:0".parse().unwrap()).unwrap(),
            store,
        )
    }

    fn agent() -> ureq::Agent {
        ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(std::time::Duration::from_secs(10)))
            .build()
            .into()
    }

    fn get_json(a: &ureq::Agent, url: &str) -> (u16, Value) {
        let mut r = a.get(url).call().unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap())
    }

    fn post_json(a: &ureq::Agent, url: &str, body: Value) -> (u16, Value) {
        let mut r = a.post(url).send_json(body).unwrap();
        (r.status().as_u16(), r.body_mut().read_json().unwrap())
    }

    #[test]
    fn survey_round_trip_over_http() {
        let (srv, store) = start();
        let a = agent();
        let base = srv.url();
        let mut n = 0;
        loop {
            let (code, body) = get_json(&a, &format!("{base}/survey/vro/next?annotator=web1"));
            assert_eq!(code, 200);
            assert_eq!(body["v"], 1);
            if body["done"] == true {
                break;
            }
            let text = body.to_string();
            for m in &store.lock().unwrap().config().surveys[0].models {
                assert!(
                    !text.contains(&format!("\"{m}\"")),
                    "model id leaked: {text}"
                );
            }
            let q = body["assignment"]["question_id"]
                .as_str()
                .unwrap()
                .to_owned();
            let (code, _) = post_json(
                &a,
                &format!("{base}/survey/vro/rating"),
                json!({"v": 1, "annotator": "web1", "question_id": q, "helpfulness": 4, "naturalness": 5}),
            );
            assert_eq!(code, 200);
            n += 1;
        }
        assert_eq!(n, 8);
        assert_eq!(store.lock().unwrap().state().rating_records().count(), 8);
    }

    #[test]
    fn errors_name_the_field() {
        let (srv, _) = start();
        let a = agent();
        let (code, body) = post_json(
            &a,
            &format!("{}/survey/vro/rating", srv.url()),
            json!({"v": 1, "annotator": "w", "question_id": "q000", "helpfulness": 6, "naturalness": 5}),
        );
        assert_eq!(code, 400);
        assert_eq!(body["field"], "helpfulness");
        let (code, body) = post_json(
            &a,
            &format!("{}/survey/vro/rating", srv.url()),
            json!({"v": 2, "annotator": "w", "question_id": "q000", "helpfulness": 3, "naturalness": 5}),
        );
        assert_eq!((code, body["field"].as_str()), (400, Some("v")));
        let (code, _) = get_json(&a, &format!("{}/survey/nope/next?annotator=w", srv.url()));
        assert_eq!(code, 404);
    }

    #[test]
    fn model_reports_wait_for_close() {
        let (srv, _) = start();
        let a = agent();
        let (code, _) = get_json(&a, &format!("{}/reports/ratings?group_by=model", srv.url()));
        assert_eq!(code, 409);
        let (code, _) = get_json(
            &a,
            &format!("{}/reports/ratings?group_by=category", srv.url()),
        );
        assert_eq!(code, 200);
        post_json(&a, &format!("{}/survey/vro/close", srv.url()), json!({}));
        let (code, body) = get_json(&a, &format!("{}/reports/ratings?group_by=model", srv.url()));
        assert_eq!(code, 200);
        assert_eq!(body["rows"].as_array().unwrap().len(), 4);
    }

    #[test]
    fn pairwise_and_qe_endpoints() {
        let (srv, _) = start();
        let a = agent();
        let (_, body) = get_json(
            &a,
            &format!("{}/pairwise/liv-qe/next?annotator=p", srv.url()),
        );
        let item = body["item"]["id"].as_str().unwrap().to_owned();
        let (code, _) = post_json(
            &a,
            &format!("{}/pairwise/liv-qe/vote", srv.url()),
            json!({"v": 1, "annotator": "p", "item": item, "choice": "tie"}),
        );
        assert_eq!(code, 200);
        let (code, _) = post_json(
            &a,
            &format!("{}/pairwise/liv-qe/vote", srv.url()),
            json!({"v": 1, "annotator": "p", "item": "ghost", "choice": "left"}),
        );
        assert_eq!(code, 404);
        let (_, body) = get_json(&a, &format!("{}/reports/pairwise", srv.url()));
        assert_eq!(body["rows"][0]["tie"], 1);
        let (code, _) = post_json(
            &a,
            &format!("{}/qe/rating", srv.url()),
            json!({"v": 1, "system": "nt", "item": "x", "lang": "kpv", "annotator": "q", "fluency": 4, "consistency": 3, "incorrect_instruction": false}),
        );
        assert_eq!(code, 200);
        let (_, body) = get_json(&a, &format!("{}/reports/qe", srv.url()));
        assert_eq!(body["rows"][0]["fluency"], 4.0);
    }
}
