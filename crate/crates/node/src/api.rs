//! HTTP query/submit surface over a running chain.
//!
//! Reads never mutate state and are served from the live chain under a
//! mutex; writes (`POST /tx`, `POST /mine`) funnel through the same lock,
//! keeping the sequencer single-writer.

use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Json, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;

use caretrust_core::crypto::Address;
use caretrust_core::mempool::RejectReason;
use caretrust_core::trust::TrustKind;
use caretrust_core::tx::SignedTransaction;
use caretrust_core::Chain;

/// Server settings.
#[derive(Clone, Copy, Debug)]
pub struct ApiConfig {
    pub port: u16,
    /// Read-only servers reject `POST /tx` and `POST /mine`.
    pub read_only: bool,
}

impl Default for ApiConfig {
    fn default() -> ApiConfig {
        ApiConfig {
            port: 8545,
            read_only: false,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    pub chain: Arc<Mutex<Chain>>,
    pub read_only: bool,
}

type Locked<'a> = std::sync::MutexGuard<'a, Chain>;

fn lock(state: &AppState) -> Locked<'_> {
    state.chain.lock().expect("chain lock poisoned")
}

pub fn router(chain: Arc<Mutex<Chain>>, config: ApiConfig) -> Router {
    let state = AppState {
        chain,
        read_only: config.read_only,
    };
    Router::new()
        .route("/account/{addr}", get(account))
        .route("/trust/{kind}/{addr}", get(trust))
        .route("/license/{addr}", get(license))
        .route("/treatments/{addr}", get(treatments))
        .route("/evidence/{addr}", get(evidence))
        .route("/block/{number}", get(block))
        .route("/tx", post(submit_tx))
        .route("/mine", post(mine))
        .with_state(state)
}

struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn bad_request(error: impl Into<String>, kind: &str) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: json!({ "error": error.into(), "kind": kind }),
        }
    }

    fn not_found(error: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::NOT_FOUND,
            body: json!({ "error": error.into() }),
        }
    }

    fn read_only() -> ApiError {
        ApiError {
            status: StatusCode::FORBIDDEN,
            body: json!({ "error": "server is read-only" }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn parse_address(text: &str) -> Result<Address, ApiError> {
    Address::from_hex(text)
        .map_err(|e| ApiError::bad_request(format!("bad address: {e}"), "bad_address"))
}

async fn account(
    State(state): State<AppState>,
    Path(addr): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let address = parse_address(&addr)?;
    let chain = lock(&state);
    let account = chain.state().account(&address);
    Ok(Json(json!({
        "address": address,
        "nonce": account.nonce,
        "balance": account.balance.to_string(),
    })))
}

async fn trust(
    State(state): State<AppState>,
    Path((kind, addr)): Path<(String, String)>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let kind = TrustKind::parse(&kind).ok_or_else(|| {
        ApiError::bad_request(
            "kind must be treatment-provider, license-issuer, or license-provider",
            "bad_kind",
        )
    })?;
    let address = parse_address(&addr)?;
    let chain = lock(&state);
    Ok(Json(json!({
        "subject": address,
        "kind": kind,
        "registered": chain.trust().is_registered(kind, &address),
        "trusted": chain.trust().query_trust(&address, kind),
    })))
}

async fn license(
    State(state): State<AppState>,
    Path(addr): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let address = parse_address(&addr)?;
    let chain = lock(&state);
    let view = match chain.trust().license(&address) {
        Some(license) => json!({
            "exists": true,
            "holder": license.holder,
            "issuer": license.issuer,
            "provider": license.provider,
            "trusted": chain.trust().query_license_trust(&address),
        }),
        None => json!({ "exists": false, "holder": address, "trusted": false }),
    };
    Ok(Json(view))
}

async fn treatments(
    State(state): State<AppState>,
    Path(addr): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let address = parse_address(&addr)?;
    let chain = lock(&state);
    let rows: Vec<serde_json::Value> = chain
        .trust()
        .treatments_for_license(&address)
        .into_iter()
        .map(|t| serde_json::to_value(t).expect("treatment serializes"))
        .collect();
    Ok(Json(json!({ "license_holder": address, "treatments": rows })))
}

async fn evidence(
    State(state): State<AppState>,
    Path(addr): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let address = parse_address(&addr)?;
    let chain = lock(&state);
    let evidence = chain.trust().query_evidence(&address);
    Ok(Json(serde_json::to_value(evidence).expect("serializes")))
}

async fn block(
    State(state): State<AppState>,
    Path(number): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let number: u64 = number
        .parse()
        .map_err(|_| ApiError::bad_request("block number must be an integer", "bad_number"))?;
    let chain = lock(&state);
    match chain.block(number) {
        Some(record) => Ok(Json(serde_json::to_value(record).expect("serializes"))),
        None => Err(ApiError::not_found(format!("no block {number}"))),
    }
}

#[derive(Debug, Deserialize)]
struct SubmitBody {
    raw: String,
}

#[derive(Debug, Serialize)]
struct SubmitResponse {
    tx_hash: String,
}

fn reject_kind(reason: &RejectReason) -> &'static str {
    match reason {
        RejectReason::InvalidSignature(_) => "invalid_signature",
        RejectReason::NonceTooLow { .. } => "nonce_too_low",
        RejectReason::NonceGap { .. } => "nonce_gap",
        RejectReason::InsufficientBalanceForGas { .. } => "insufficient_balance_for_gas",
        RejectReason::GasLimitBelowIntrinsic { .. } => "gas_limit_below_intrinsic",
        RejectReason::ReplacementUnderpriced => "replacement_underpriced",
        RejectReason::CreationUnsupported => "creation_unsupported",
    }
}

async fn submit_tx(
    State(state): State<AppState>,
    Json(body): Json<SubmitBody>,
) -> Result<Json<SubmitResponse>, ApiError> {
    if state.read_only {
        return Err(ApiError::read_only());
    }
    let raw = body.raw.trim();
    let bytes = hex::decode(raw.strip_prefix("0x").unwrap_or(raw))
        .map_err(|e| ApiError::bad_request(format!("parse error: {e}"), "parse_error"))?;
    let tx = SignedTransaction::from_wire(&bytes)
        .map_err(|e| ApiError::bad_request(format!("parse error: {e}"), "parse_error"))?;
    // Reject undecodable call payloads at the door.
    if !tx.is_transfer() {
        tx.contract_call()
            .map_err(|e| ApiError::bad_request(format!("parse error: {e}"), "parse_error"))?;
    }
    let mut chain = lock(&state);
    match chain.submit_transaction(tx) {
        Ok(hash) => Ok(Json(SubmitResponse {
            tx_hash: hash.to_hex(),
        })),
        Err(reason) => Err(ApiError::bad_request(reason.to_string(), reject_kind(&reason))),
    }
}

async fn mine(State(state): State<AppState>) -> Result<Json<serde_json::Value>, ApiError> {
    if state.read_only {
        return Err(ApiError::read_only());
    }
    let mut chain = lock(&state);
    let record = chain.produce_block();
    Ok(Json(json!({
        "number": record.block.number,
        "hash": record.block.hash,
        "transactions": record.block.transactions.len(),
    })))
}

/// Serve until the process is stopped. When `timer_mining` is set, a block
/// is produced every `block_interval_seconds`; otherwise mining happens only
/// through `POST /mine`.
pub async fn serve(
    chain: Arc<Mutex<Chain>>,
    config: ApiConfig,
    timer_mining: bool,
) -> std::io::Result<()> {
    let interval_seconds = {
        let chain = chain.lock().expect("chain lock poisoned");
        chain.config().block_interval_seconds
    };
    if timer_mining {
        let miner_chain = Arc::clone(&chain);
        tokio::spawn(async move {
            let mut ticker =
                tokio::time::interval(std::time::Duration::from_secs(interval_seconds.max(1)));
            ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
            ticker.tick().await; // the first tick fires immediately
            loop {
                ticker.tick().await;
                let mut chain = miner_chain.lock().expect("chain lock poisoned");
                chain.produce_block();
            }
        });
    }
    let app = router(chain, config);
    let listener =
        tokio::net::TcpListener::bind(std::net::SocketAddr::from(([0, 0, 0, 0], config.port)))
            .await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}
