//! HTTP front end for a trained model bundle.
//!
//! Endpoints:
//!
//! - `GET /health`: status and a description of the loaded models.
//! - `GET /api/schema`: the raw fields the models need, for building forms.
//! - `POST /api/recommend`: one [`RecommendRequest`] in, one
//!   [`RecommendResponse`] out.
//! - `POST /api/whatif`: a [`WhatIfRequest`] sweeping one field over a list
//!   of values.
//!
//! Bodies are JSON. A body that does not parse or holds an out-of-range
//! value gets a 400 listing each bad field; a request missing a field the
//! models need gets a 422 naming it.

pub mod api;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use serde_json::Value;
use tower_http::cors::{Any, CorsLayer};

pub use api::{
    Advisor, ApiError, ErrorKind, FieldError, RecommendRequest, RecommendResponse, SchemaResponse, WhatIfField,
    WhatIfRequest, WhatIfResponse,
};

fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match serde_json::to_vec(body) {
        Ok(bytes) => (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.kind {
            ErrorKind::Malformed => StatusCode::BAD_REQUEST,
            ErrorKind::MissingFeature => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        json_response(status, &self.body())
    }
}

fn parse_body(body: &[u8]) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError {
        kind: ErrorKind::Malformed,
        message: "malformed request".into(),
        fields: vec![FieldError {
            field: "body".into(),
            message: format!("invalid JSON: {e}"),
        }],
    })
}

async fn health(State(a): State<Arc<Advisor>>) -> Response {
    json_response(StatusCode::OK, &a.health())
}

async fn schema(State(a): State<Arc<Advisor>>) -> Response {
    json_response(StatusCode::OK, &a.schema())
}

async fn recommend(State(a): State<Arc<Advisor>>, body: Bytes) -> Result<Response, ApiError> {
    let req = RecommendRequest::from_json(&parse_body(&body)?)?;
    Ok(json_response(StatusCode::OK, &a.recommend(&req)?))
}

async fn whatif(State(a): State<Arc<Advisor>>, body: Bytes) -> Result<Response, ApiError> {
    let req = WhatIfRequest::from_json(&parse_body(&body)?)?;
    Ok(json_response(StatusCode::OK, &a.whatif(&req)?))
}

/// CORS for the UI: a single origin, or any origin when `None`.
pub fn cors(origin: Option<&str>) -> Result<CorsLayer, String> {
    let layer = CorsLayer::new()
        .allow_methods(Any)
        .allow_headers([header::CONTENT_TYPE]);
    Ok(match origin {
        None => layer.allow_origin(Any),
        Some(o) => layer.allow_origin(HeaderValue::from_str(o).map_err(|e| format!("bad origin `{o}`: {e}"))?),
    })
}

pub fn router(advisor: Arc<Advisor>, cors: CorsLayer) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/api/schema", get(schema))
        .route("/api/recommend", post(recommend))
        .route("/api/whatif", post(whatif))
        .layer(cors)
        .with_state(advisor)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(advisor: Arc<Advisor>, bind: SocketAddr, origin: Option<&str>) -> std::io::Result<()> {
    let app = router(advisor, cors(origin).map_err(std::io::Error::other)?);
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
