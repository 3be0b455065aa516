//! Interactive sessions: bounds first, then a search worker that the decision
//! maker steers with reference points until a solution is accepted.
//!
//! Commands on one session are totally ordered by a per-session command
//! lock. The search runs on its own thread and only observes commands
//! between engine steps. Subscribers each own a bounded mailbox; when it
//! fills up the oldest snapshot is dropped, never a state, reference or
//! acceptance event.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::archive::{ArchiveSnapshot, ParetoArchive, ReferencePoint};
use crate::bounds::{BoundSets, UpperBound, DEFAULT_WEIGHT_COUNT};
use crate::engine::{
    Engine, RefchangePayload, RunEvent, ScriptedControl, SearchConfig, SearchControl, StopReason, Trigger,
};
use crate::error::{Error, Result};
use crate::instance_io::parse_instance;
use crate::model::{Instance, ObjectiveVector};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    #[serde(flatten)]
    pub search: SearchConfig,
    pub weight_count: usize,
    /// Snapshots a subscriber mailbox holds before dropping the oldest.
    pub snapshot_buffer: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            search: SearchConfig::default(),
            weight_count: DEFAULT_WEIGHT_COUNT,
            snapshot_buffer: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Idle,
    Searching,
    Paused,
    Done,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsPayload {
    pub lower: Vec<ObjectiveVector>,
    pub upper: Vec<UpperBound>,
    /// The initial approximation seeded from the lower bounds.
    pub archive: ArchiveSnapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatePayload {
    pub state: SessionState,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptedPayload {
    pub id: u64,
    pub selection: String,
    pub objectives: ObjectiveVector,
    pub in_cone: bool,
}

/// Event pushed to subscribers:
/// `{"type": ..., "evaluations": ..., "payload": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SessionEvent {
    Bounds {
        evaluations: u64,
        payload: Box<BoundsPayload>,
    },
    Snapshot {
        evaluations: u64,
        payload: ArchiveSnapshot,
    },
    State {
        evaluations: u64,
        payload: StatePayload,
    },
    Refchange {
        evaluations: u64,
        payload: RefchangePayload,
    },
    Accepted {
        evaluations: u64,
        payload: AcceptedPayload,
    },
}

impl SessionEvent {
    pub fn kind(&self) -> &'static str {
        match self {
            SessionEvent::Bounds { .. } => "bounds",
            SessionEvent::Snapshot { .. } => "snapshot",
            SessionEvent::State { .. } => "state",
            SessionEvent::Refchange { .. } => "refchange",
            SessionEvent::Accepted { .. } => "accepted",
        }
    }

    pub fn evaluations(&self) -> u64 {
        match self {
            SessionEvent::Bounds { evaluations, .. }
            | SessionEvent::Snapshot { evaluations, .. }
            | SessionEvent::State { evaluations, .. }
            | SessionEvent::Refchange { evaluations, .. }
            | SessionEvent::Accepted { evaluations, .. } => *evaluations,
        }
    }
}

/// Append-only record of everything that changed the session. Together with
/// the configuration (which carries the seed) it replays the search exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LogEntry {
    Created {
        instance: String,
        config: SessionConfig,
    },
    Refchange {
        evaluations: u64,
        step: u64,
        reference: ReferencePoint,
    },
    State {
        evaluations: u64,
        step: u64,
        state: SessionState,
    },
    Accepted {
        evaluations: u64,
        step: u64,
        id: u64,
        objectives: ObjectiveVector,
    },
}

/// A subscriber's mailbox.
#[derive(Debug)]
pub struct Subscription {
    queue: Mutex<VecDeque<SessionEvent>>,
    ready: Condvar,
    snapshot_cap: usize,
    dropped: Mutex<u64>,
}

impl Subscription {
    fn new(snapshot_cap: usize) -> Self {
        Subscription {
            queue: Mutex::new(VecDeque::new()),
            ready: Condvar::new(),
            snapshot_cap: snapshot_cap.max(1),
            dropped: Mutex::new(0),
        }
    }

    fn push(&self, event: SessionEvent) {
        let mut q = lock(&self.queue);
        if matches!(event, SessionEvent::Snapshot { .. }) {
            let snapshots = q.iter().filter(|e| matches!(e, SessionEvent::Snapshot { .. })).count();
            if snapshots >= self.snapshot_cap {
                if let Some(i) = q.iter().position(|e| matches!(e, SessionEvent::Snapshot { .. })) {
                    q.remove(i);
                    *lock(&self.dropped) += 1;
                }
            }
        }
        q.push_back(event);
        self.ready.notify_all();
    }

    pub fn try_next(&self) -> Option<SessionEvent> {
        lock(&self.queue).pop_front()
    }

    /// Waits up to `timeout` for the next event.
    pub fn next_timeout(&self, timeout: Duration) -> Option<SessionEvent> {
        let deadline = Instant::now() + timeout;
        let mut q = lock(&self.queue);
        loop {
            if let Some(e) = q.pop_front() {
                return Some(e);
            }
            let now = Instant::now();
            if now >= deadline {
                return None;
            }
            q = self
                .ready
                .wait_timeout(q, deadline - now)
                .unwrap_or_else(|e| e.into_inner())
                .0;
        }
    }

    /// Snapshots discarded because the mailbox was full.
    pub fn dropped_snapshots(&self) -> u64 {
        *lock(&self.dropped)
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// Commands the worker picks up between engine steps.
#[derive(Debug, Default)]
struct LiveControl {
    stop: AtomicBool,
    pending: Mutex<VecDeque<ReferencePoint>>,
    /// Reference changes due once the evaluation count reaches the key.
    scheduled: Mutex<Vec<(u64, ReferencePoint)>>,
}

impl SearchControl for &LiveControl {
    fn pending_reference(&mut self, _: u64, evaluations: u64) -> Option<ReferencePoint> {
        if let Some(r) = lock(&self.pending).pop_front() {
            return Some(r);
        }
        let mut scheduled = lock(&self.scheduled);
        let due = scheduled.iter().position(|(at, _)| *at <= evaluations)?;
        Some(scheduled.remove(due).1)
    }

    fn should_stop(&mut self, _: u64, _: u64) -> bool {
        self.stop.load(Ordering::Acquire)
    }
}

#[derive(Debug)]
struct Shared {
    state: SessionState,
    /// `None` while the worker owns the engine.
    engine: Option<Engine>,
    evaluations: u64,
    steps: u64,
    event_log: Vec<LogEntry>,
    subscribers: Vec<Arc<Subscription>>,
    latest_snapshot: ArchiveSnapshot,
    accepted: Option<AcceptedPayload>,
    worker: Option<JoinHandle<()>>,
}

impl Shared {
    fn broadcast(&self, event: SessionEvent) {
        for s in &self.subscribers {
            s.push(event.clone());
        }
    }

    fn publish_snapshot(&mut self, evaluations: u64, snapshot: &ArchiveSnapshot) {
        if snapshot.generation <= self.latest_snapshot.generation {
            return;
        }
        self.latest_snapshot = snapshot.clone();
        self.broadcast(SessionEvent::Snapshot {
            evaluations,
            payload: snapshot.clone(),
        });
    }

    fn set_state(&mut self, state: SessionState, reason: Option<String>) {
        self.state = state;
        self.event_log.push(LogEntry::State {
            evaluations: self.evaluations,
            step: self.steps,
            state,
        });
        self.broadcast(SessionEvent::State {
            evaluations: self.evaluations,
            payload: StatePayload { state, reason },
        });
    }

    fn record_refchange(&mut self, evaluations: u64, payload: &RefchangePayload) {
        self.event_log.push(LogEntry::Refchange {
            evaluations,
            step: payload.step,
            reference: payload.reference.clone(),
        });
        self.broadcast(SessionEvent::Refchange {
            evaluations,
            payload: payload.clone(),
        });
    }
}

/// One decision maker's optimization session.
#[derive(Debug)]
pub struct Session {
    id: String,
    instance: Arc<Instance>,
    config: SessionConfig,
    bounds: BoundSets,
    initial: ArchiveSnapshot,
    commands: Mutex<()>,
    control: Arc<LiveControl>,
    shared: Arc<Mutex<Shared>>,
}

impl Session {
    /// Parses the instance, computes the bound sets and seeds the archive.
    pub fn create(id: impl Into<String>, source: &str, name: &str, config: SessionConfig) -> Result<Self> {
        let instance = parse_instance(source, name)?;
        Self::from_instance(id, Arc::new(instance), config)
    }

    pub fn from_instance(id: impl Into<String>, instance: Arc<Instance>, config: SessionConfig) -> Result<Self> {
        let (engine, bounds) = Engine::with_bounds(instance.clone(), config.search.clone(), config.weight_count)?;
        let initial = engine.archive().snapshot();
        let shared = Shared {
            state: SessionState::Idle,
            engine: Some(engine),
            evaluations: 0,
            steps: 0,
            event_log: vec![LogEntry::Created {
                instance: instance.name().to_string(),
                config: config.clone(),
            }],
            subscribers: Vec::new(),
            latest_snapshot: initial.clone(),
            accepted: None,
            worker: None,
        };
        Ok(Session {
            id: id.into(),
            instance,
            config,
            bounds,
            initial,
            commands: Mutex::new(()),
            control: Arc::new(LiveControl::default()),
            shared: Arc::new(Mutex::new(shared)),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn bounds(&self) -> &BoundSets {
        &self.bounds
    }

    pub fn state(&self) -> SessionState {
        lock(&self.shared).state
    }

    pub fn evaluations(&self) -> u64 {
        lock(&self.shared).evaluations
    }

    pub fn event_log(&self) -> Vec<LogEntry> {
        lock(&self.shared).event_log.clone()
    }

    pub fn latest_snapshot(&self) -> ArchiveSnapshot {
        lock(&self.shared).latest_snapshot.clone()
    }

    pub fn accepted(&self) -> Option<AcceptedPayload> {
        lock(&self.shared).accepted.clone()
    }

    /// The engine's archive; waits for the worker to stop first if needed.
    pub fn archive(&self) -> Option<ParetoArchive> {
        lock(&self.shared).engine.as_ref().map(|e| e.archive().clone())
    }

    pub fn bounds_event(&self) -> SessionEvent {
        SessionEvent::Bounds {
            evaluations: 0,
            payload: Box::new(BoundsPayload {
                lower: self.bounds.lower_points().cloned().collect(),
                upper: self.bounds.upper.clone(),
                archive: self.initial.clone(),
            }),
        }
    }

    pub fn subscribe(&self) -> Arc<Subscription> {
        let sub = Arc::new(Subscription::new(self.config.snapshot_buffer));
        let mut shared = lock(&self.shared);
        sub.push(self.bounds_event());
        sub.push(SessionEvent::Snapshot {
            evaluations: shared.evaluations,
            payload: shared.latest_snapshot.clone(),
        });
        sub.push(SessionEvent::State {
            evaluations: shared.evaluations,
            payload: StatePayload {
                state: shared.state,
                reason: None,
            },
        });
        if let Some(a) = &shared.accepted {
            sub.push(SessionEvent::Accepted {
                evaluations: shared.evaluations,
                payload: a.clone(),
            });
        }
        shared.subscribers.push(sub.clone());
        sub
    }

    pub fn set_reference(&self, values: Vec<i64>) -> Result<()> {
        let _cmd = lock(&self.commands);
        self.check_reference(&values)?;
        let reference = ReferencePoint::new(values);
        let mut shared = lock(&self.shared);
        match shared.state {
            SessionState::Done => Err(Error::state("session is done")),
            SessionState::Searching => {
                lock(&self.control.pending).push_back(reference);
                Ok(())
            }
            SessionState::Idle | SessionState::Paused => {
                let engine = shared
                    .engine
                    .as_mut()
                    .ok_or_else(|| Error::state("engine unavailable"))?;
                engine.set_reference(reference)?;
                let (evaluations, snapshot) = (engine.evaluations(), engine.archive().snapshot());
                let payload = match engine.log().events.last() {
                    Some(RunEvent::Refchange { payload, .. }) => payload.clone(),
                    _ => unreachable!("set_reference records a refchange"),
                };
                shared.record_refchange(evaluations, &payload);
                shared.publish_snapshot(evaluations, &snapshot);
                Ok(())
            }
        }
    }

    /// Queues a reference change that the search applies at the first step
    /// boundary where the evaluation count reaches `at_evaluations`. This is
    /// how a scripted decision maker steers a headless session.
    pub fn schedule_reference(&self, at_evaluations: u64, values: Vec<i64>) -> Result<()> {
        let _cmd = lock(&self.commands);
        self.check_reference(&values)?;
        if lock(&self.shared).state == SessionState::Done {
            return Err(Error::state("session is done"));
        }
        let mut scheduled = lock(&self.control.scheduled);
        scheduled.push((at_evaluations, ReferencePoint::new(values)));
        scheduled.sort_by_key(|(at, _)| *at);
        Ok(())
    }

    fn check_reference(&self, values: &[i64]) -> Result<()> {
        if values.len() != self.instance.num_objectives() {
            return Err(Error::invalid(format!(
                "reference point has {} components, instance has {} objectives",
                values.len(),
                self.instance.num_objectives()
            )));
        }
        Ok(())
    }

    pub fn start(&self) -> Result<()> {
        let _cmd = lock(&self.commands);
        let mut shared = lock(&self.shared);
        match shared.state {
            SessionState::Idle | SessionState::Paused => {}
            other => return Err(Error::state(format!("cannot start a {other:?} session"))),
        }
        if let Some(w) = shared.worker.take() {
            drop(shared);
            let _ = w.join();
            shared = lock(&self.shared);
        }
        let mut engine = shared.engine.take().ok_or_else(|| Error::state("engine unavailable"))?;
        self.control.stop.store(false, Ordering::Release);
        shared.set_state(SessionState::Searching, None);

        let control = self.control.clone();
        let shared_ref = self.shared.clone();
        let handle = std::thread::Builder::new()
            .name(format!("search-{}", self.id))
            .spawn(move || {
                let mut ctl: &LiveControl = &control;
                let mut emit = |e: &RunEvent| {
                    let mut s = lock(&shared_ref);
                    match e {
                        RunEvent::Snapshot { evaluations, payload } => {
                            s.evaluations = *evaluations;
                            s.publish_snapshot(*evaluations, &payload.archive);
                        }
                        RunEvent::Refchange { evaluations, payload } => {
                            s.evaluations = *evaluations;
                            s.record_refchange(*evaluations, payload);
                        }
                        _ => {}
                    }
                };
                let reason = engine.run(&mut ctl, &mut emit);

                let mut s = lock(&shared_ref);
                s.evaluations = engine.evaluations();
                s.steps = engine.steps();
                // Commands that raced with the end of the run. Scheduled
                // changes stay queued for the next start.
                let late: Vec<_> = lock(&control.pending).drain(..).collect();
                for r in late {
                    if engine.set_reference(r).is_ok() {
                        if let Some(RunEvent::Refchange { evaluations, payload }) = engine.log().events.last() {
                            s.record_refchange(*evaluations, &payload.clone());
                        }
                    }
                }
                let snapshot = engine.archive().snapshot();
                let evaluations = engine.evaluations();
                s.publish_snapshot(evaluations, &snapshot);
                s.engine = Some(engine);
                if reason == StopReason::Budget && s.state == SessionState::Searching {
                    s.set_state(SessionState::Paused, Some("evaluation budget reached".to_string()));
                }
            })?;
        shared.worker = Some(handle);
        Ok(())
    }

    /// Stops the worker at its next step boundary and waits for it.
    pub fn pause(&self) -> Result<()> {
        let _cmd = lock(&self.commands);
        self.pause_locked()
    }

    fn pause_locked(&self) -> Result<()> {
        let worker = {
            let mut shared = lock(&self.shared);
            match shared.state {
                SessionState::Searching => {}
                SessionState::Paused if shared.worker.is_some() => {}
                other => return Err(Error::state(format!("cannot pause a {other:?} session"))),
            }
            self.control.stop.store(true, Ordering::Release);
            shared.worker.take()
        };
        if let Some(w) = worker {
            let _ = w.join();
        }
        let mut shared = lock(&self.shared);
        if shared.state == SessionState::Searching {
            shared.set_state(SessionState::Paused, None);
        }
        Ok(())
    }

    /// Records `id` (an archive member) as the most-preferred solution and
    /// ends the session.
    pub fn accept(&self, id: u64) -> Result<AcceptedPayload> {
        let _cmd = lock(&self.commands);
        let state = lock(&self.shared).state;
        match state {
            SessionState::Done => return Err(Error::state("session is already done")),
            SessionState::Searching => self.pause_locked()?,
            _ => {}
        }
        if let Some(w) = lock(&self.shared).worker.take() {
            let _ = w.join();
        }
        let mut shared = lock(&self.shared);
        let engine = shared
            .engine
            .as_ref()
            .ok_or_else(|| Error::state("engine unavailable"))?;
        let entry = engine
            .archive()
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("solution {id} is not in the archive")))?;
        let payload = AcceptedPayload {
            id,
            selection: entry.solution.bitstring(),
            objectives: entry.solution.objectives().clone(),
            in_cone: engine.archive().reference().contains(entry.solution.objectives()),
        };
        let (evaluations, steps) = (engine.evaluations(), engine.steps());
        shared.evaluations = evaluations;
        shared.steps = steps;
        shared.event_log.push(LogEntry::Accepted {
            evaluations,
            step: steps,
            id,
            objectives: payload.objectives.clone(),
        });
        shared.accepted = Some(payload.clone());
        shared.broadcast(SessionEvent::Accepted {
            evaluations,
            payload: payload.clone(),
        });
        shared.set_state(SessionState::Done, None);
        Ok(payload)
    }

    /// Blocks until the worker has finished (budget reached or paused).
    pub fn wait_idle(&self, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        loop {
            {
                let shared = lock(&self.shared);
                if shared.engine.is_some() {
                    return true;
                }
            }
            if Instant::now() >= deadline {
                return false;
            }
            std::thread::sleep(Duration::from_millis(2));
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        self.control.stop.store(true, Ordering::Release);
        if let Some(w) = lock(&self.shared).worker.take() {
            let _ = w.join();
        }
    }
}

/// Rebuilds the archive from a session's configuration and event log.
pub fn replay(instance: Arc<Instance>, log: &[LogEntry]) -> Result<ParetoArchive> {
    let config = match log.first() {
        Some(LogEntry::Created { config, .. }) => config.clone(),
        _ => return Err(Error::invalid("event log must start with the creation record")),
    };
    let (mut engine, _) = Engine::with_bounds(instance, config.search, config.weight_count)?;
    let mut control = ScriptedControl::new();
    let mut final_step = 0;
    for entry in log {
        match entry {
            LogEntry::Refchange { step, reference, .. } => {
                control = control.reference_at(Trigger::Step(*step), reference.clone());
            }
            LogEntry::State { step, .. } | LogEntry::Accepted { step, .. } => final_step = final_step.max(*step),
            LogEntry::Created { .. } => {}
        }
    }
    let mut control = control.stop_at(Trigger::Step(final_step));
    engine.run(&mut control, &mut |_| {});
    // References recorded at the final step are applied after the stop.
    while let Some(r) = control.pending_reference(engine.steps(), engine.evaluations()) {
        engine.set_reference(r)?;
    }
    Ok(engine.archive().clone())
}
