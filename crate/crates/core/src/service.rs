//! JSON request/response protocol over a registry of sessions.
//!
//! Requests are `{"id": any, "method": "...", "params": {...}}`; responses
//! echo `id` with either `result` or `error: {kind, message}`. Subscription
//! events are delivered by the transport as `{"subscription": n, "event": ...}`
//! or collected with `session.poll`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::session::{Session, SessionConfig, SessionEvent, Subscription};

#[derive(Debug, Deserialize)]
struct Request {
    #[serde(default)]
    id: Value,
    method: String,
    #[serde(default)]
    params: Value,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateParams {
    instance: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    config: SessionConfig,
}

#[derive(Debug, Deserialize)]
struct SessionParams {
    session: String,
}

#[derive(Debug, Deserialize)]
struct ReferenceParams {
    session: String,
    r: Vec<i64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ScheduleParams {
    session: String,
    r: Vec<i64>,
    at_evaluations: u64,
}

#[derive(Debug, Deserialize)]
struct AcceptParams {
    session: String,
    solution: u64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct PollParams {
    subscription: u64,
    #[serde(default)]
    timeout_ms: u64,
    #[serde(default = "default_poll_max")]
    max: usize,
}

fn default_poll_max() -> usize {
    256
}

/// An event tagged with the subscription it was delivered to.
#[derive(Debug, Clone, Serialize)]
pub struct Delivery {
    pub subscription: u64,
    pub session: String,
    pub event: SessionEvent,
}

#[derive(Debug, Default)]
pub struct Service {
    sessions: Mutex<HashMap<String, Arc<Session>>>,
    subscriptions: Mutex<HashMap<u64, (String, Arc<Subscription>)>>,
    next_session: AtomicU64,
    next_subscription: AtomicU64,
}

impl Service {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn session(&self, id: &str) -> Result<Arc<Session>> {
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("no session {id:?}")))
    }

    pub fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self
            .sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }

    pub fn subscription(&self, id: u64) -> Result<(String, Arc<Subscription>)> {
        self.subscriptions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("no subscription {id}")))
    }

    pub fn create_session(&self, source: &str, name: Option<&str>, config: SessionConfig) -> Result<Arc<Session>> {
        let id = format!("s{}", self.next_session.fetch_add(1, Ordering::Relaxed) + 1);
        let session = Arc::new(Session::create(id.clone(), source, name.unwrap_or(&id), config)?);
        self.sessions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, session.clone());
        Ok(session)
    }

    pub fn subscribe(&self, session: &str) -> Result<(u64, Arc<Subscription>)> {
        let s = self.session(session)?;
        let sub = s.subscribe();
        let id = self.next_subscription.fetch_add(1, Ordering::Relaxed) + 1;
        self.subscriptions
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .insert(id, (session.to_string(), sub.clone()));
        Ok((id, sub))
    }

    /// Handles one request line and returns the response line.
    pub fn handle_line(&self, line: &str) -> String {
        self.handle_value(line).to_string()
    }

    pub fn handle_value(&self, line: &str) -> Value {
        let request: Request = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => return error_response(Value::Null, &Error::from(e)),
        };
        match self.dispatch(&request.method, request.params) {
            Ok(result) => json!({ "id": request.id, "result": result }),
            Err(e) => error_response(request.id, &e),
        }
    }

    fn dispatch(&self, method: &str, params: Value) -> Result<Value> {
        match method {
            "session.create" => {
                let p: CreateParams = params_of(params)?;
                let s = self.create_session(&p.instance, p.name.as_deref(), p.config)?;
                let bounds = match s.bounds_event() {
                    SessionEvent::Bounds { payload, .. } => payload,
                    _ => unreachable!(),
                };
                Ok(json!({
                    "session": s.id(),
                    "items": s.instance().num_items(),
                    "objectives": s.instance().num_objectives(),
                    "warnings": s.instance().warnings(),
                    "bounds": bounds,
                }))
            }
            "session.setReference" => {
                let p: ReferenceParams = params_of(params)?;
                let s = self.session(&p.session)?;
                s.set_reference(p.r)?;
                Ok(json!({ "state": s.state() }))
            }
            "session.scheduleReference" => {
                let p: ScheduleParams = params_of(params)?;
                let s = self.session(&p.session)?;
                s.schedule_reference(p.at_evaluations, p.r)?;
                Ok(json!({ "state": s.state() }))
            }
            "session.start" | "session.pause" => {
                let p: SessionParams = params_of(params)?;
                let s = self.session(&p.session)?;
                if method == "session.start" {
                    s.start()?;
                } else {
                    s.pause()?;
                }
                Ok(json!({ "state": s.state() }))
            }
            "session.accept" => {
                let p: AcceptParams = params_of(params)?;
                let s = self.session(&p.session)?;
                Ok(serde_json::to_value(s.accept(p.solution)?)?)
            }
            "session.subscribe" => {
                let p: SessionParams = params_of(params)?;
                let (id, _) = self.subscribe(&p.session)?;
                Ok(json!({ "subscription": id }))
            }
            "session.poll" => {
                let p: PollParams = params_of(params)?;
                let (_, sub) = self.subscription(p.subscription)?;
                let mut events = Vec::new();
                if let Some(first) = sub.next_timeout(Duration::from_millis(p.timeout_ms)) {
                    events.push(first);
                    while events.len() < p.max {
                        match sub.try_next() {
                            Some(e) => events.push(e),
                            None => break,
                        }
                    }
                }
                Ok(json!({ "events": events }))
            }
            "session.snapshot" => {
                let p: SessionParams = params_of(params)?;
                let s = self.session(&p.session)?;
                Ok(json!({
                    "state": s.state(),
                    "evaluations": s.evaluations(),
                    "archive": s.latest_snapshot(),
                }))
            }
            "session.eventLog" => {
                let p: SessionParams = params_of(params)?;
                Ok(serde_json::to_value(self.session(&p.session)?.event_log())?)
            }
            "session.close" => {
                let p: SessionParams = params_of(params)?;
                let removed = self
                    .sessions
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .remove(&p.session)
                    .ok_or_else(|| Error::NotFound(format!("no session {:?}", p.session)))?;
                self.subscriptions
                    .lock()
                    .unwrap_or_else(|e| e.into_inner())
                    .retain(|_, (s, _)| *s != p.session);
                drop(removed);
                Ok(json!({}))
            }
            other => Err(Error::NotFound(format!("unknown method {other:?}"))),
        }
    }
}

fn params_of<T: serde::de::DeserializeOwned>(params: Value) -> Result<T> {
    serde_json::from_value(params).map_err(|e| Error::invalid(format!("bad params: {e}")))
}

fn error_response(id: Value, e: &Error) -> Value {
    json!({ "id": id, "error": { "kind": e.kind(), "message": e.to_string() } })
}
