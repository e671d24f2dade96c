use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::State;
use axum::routing::post;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use super::Simulator;
use crate::strategy::Message;

#[derive(Deserialize)]
struct Request {
    #[serde(default)]
    model: Option<String>,
    messages: Vec<Message>,
}

async fn chat(State(sim): State<Arc<Simulator>>, Json(req): Json<Request>) -> Json<Value> {
    let (_, text) = sim.respond(&req.messages);
    Json(json!({
        "object": "chat.completion",
        "model": req.model.unwrap_or_else(|| "simulator".into()),
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": text},
            "finish_reason": "stop"
        }]
    }))
}

/// Router answering `POST /chat/completions` with simulator output.
pub fn simulator_router(sim: Arc<Simulator>) -> Router {
    Router::new().route("/chat/completions", post(chat)).with_state(sim)
}

/// Serves the simulator on `addr` (port 0 picks a free port) and returns the
/// bound address together with the server task.
pub async fn serve_simulator(
    sim: Arc<Simulator>,
    addr: SocketAddr,
) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<std::io::Result<()>>)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let app = simulator_router(sim);
    let handle = tokio::spawn(async move { axum::serve(listener, app).await });
    Ok((local, handle))
}
