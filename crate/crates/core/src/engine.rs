//! Pareto iterated local search restricted to the reference-point cone.
//!
//! The engine is a resumable step machine. Each step is one of
//!
//! * scanning one cone member with the drop-one/refill neighborhood until a
//!   dominating neighbor appears or the failure budget is spent,
//! * starting a new pass over the not yet explored cone members,
//! * perturbing a random cone member (drop two, refill), or
//! * one descent segment from a perturbed alternative that the archive
//!   rejected.
//!
//! Control (stop requests, reference-point changes) is only observed between
//! steps. Steps are numbered; a step index together with the seed fully
//! determines the engine state, which is what makes session replay exact.

use std::collections::{HashSet, VecDeque};
use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::archive::{ArchiveSnapshot, InsertOutcome, ParetoArchive, ReferencePoint};
use crate::bounds::{compute_bound_sets, BoundSets};
use crate::error::{Error, Result};
use crate::model::{Instance, ObjectiveVector, Solution};

pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Consecutive unsuccessful neighbors tried on one cone member.
    pub failure_budget: u32,
    /// Evaluation budget (one evaluation per generated alternative).
    pub max_evaluations: u64,
    pub seed: u64,
    /// Offer only in-cone alternatives to the archive.
    pub strict_cone: bool,
    /// Evaluations between checkpoint snapshots.
    pub checkpoint_interval: u64,
    /// Record every archive change as a snapshot in the run log, not only
    /// checkpoints.
    pub log_change_snapshots: bool,
    /// Record one log event per evaluation.
    pub trace_evaluations: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            failure_budget: 100,
            max_evaluations: 100_000,
            seed: 0,
            strict_cone: false,
            checkpoint_interval: 1000,
            log_change_snapshots: true,
            trace_evaluations: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.failure_budget == 0 {
            return Err(Error::invalid("failure budget must be at least 1"));
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::invalid("checkpoint interval must be at least 1"));
        }
        Ok(())
    }
}

/// Drops one selected item chosen uniformly at random, then refills.
pub fn neighborhood_move<R: Rng + ?Sized>(instance: &Instance, x: &Solution, rng: &mut R) -> Solution {
    drop_and_refill(instance, x, 1, rng)
}

/// Drops two distinct selected items chosen uniformly at random (fewer if
/// fewer are selected), then refills.
pub fn perturb<R: Rng + ?Sized>(instance: &Instance, x: &Solution, rng: &mut R) -> Solution {
    drop_and_refill(instance, x, 2, rng)
}

fn drop_and_refill<R: Rng + ?Sized>(instance: &Instance, x: &Solution, count: usize, rng: &mut R) -> Solution {
    let selected: Vec<usize> = x.selected_items().collect();
    let mut y = x.clone();
    let count = count.min(selected.len());
    if count > 0 {
        for pos in sample(rng, selected.len(), count) {
            instance.remove_item(&mut y, selected[pos]);
        }
    }
    instance.maximal_fill(y, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    LocalSearch,
    Perturbation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Budget,
    Stopped,
    ReferenceChanged,
}

/// What happened to one generated alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Offer {
    Added,
    Dominated,
    Duplicate,
    /// Outside the cone in strict mode; never shown to the archive.
    OutsideCone,
}

impl From<InsertOutcome> for Offer {
    fn from(o: InsertOutcome) -> Self {
        match o {
            InsertOutcome::Added { .. } => Offer::Added,
            InsertOutcome::Dominated => Offer::Dominated,
            InsertOutcome::Duplicate => Offer::Duplicate,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassReport {
    pub elements: usize,
    pub successes: usize,
    pub failures: u64,
    pub evaluations: u64,
    pub empty_cone: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunHeader {
    pub instance: String,
    pub seed: u64,
    pub rng: String,
    pub config: SearchConfig,
}

/// One record of the run log. Serialized as
/// `{"type": ..., "evaluations": ..., "payload": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RunEvent {
    Snapshot {
        evaluations: u64,
        payload: SnapshotPayload,
    },
    Refchange {
        evaluations: u64,
        payload: RefchangePayload,
    },
    Evaluation {
        evaluations: u64,
        payload: EvaluationPayload,
    },
    Done {
        evaluations: u64,
        payload: DonePayload,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotPayload {
    pub checkpoint: bool,
    pub archive: ArchiveSnapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefchangePayload {
    /// Number of steps executed before the change took effect.
    pub step: u64,
    pub reference: ReferencePoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluationPayload {
    pub objectives: ObjectiveVector,
    pub offer: Offer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DonePayload {
    pub step: u64,
    pub reason: StopReason,
    pub archive_size: usize,
}

impl RunEvent {
    pub fn evaluations(&self) -> u64 {
        match self {
            RunEvent::Snapshot { evaluations, .. }
            | RunEvent::Refchange { evaluations, .. }
            | RunEvent::Evaluation { evaluations, .. }
            | RunEvent::Done { evaluations, .. } => *evaluations,
        }
    }
}

/// Seeded record of a search: header, then events in the order they occurred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub header: RunHeader,
    pub events: Vec<RunEvent>,
}

impl RunLog {
    /// Newline-delimited JSON: the header record first, one event per line.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        #[derive(Serialize)]
        struct HeaderLine<'a> {
            #[serde(rename = "type")]
            kind: &'static str,
            payload: &'a RunHeader,
        }
        let header = HeaderLine {
            kind: "header",
            payload: &self.header,
        };
        out.push_str(&serde_json::to_string(&header).expect("header serializes"));
        out.push('\n');
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| Error::parse(1, "empty run log"))?;
        let mut value: serde_json::Value = serde_json::from_str(first).map_err(|e| Error::parse(1, e.to_string()))?;
        if value["type"] != "header" {
            return Err(Error::parse(1, "first record must be the header"));
        }
        let header: RunHeader =
            serde_json::from_value(value["payload"].take()).map_err(|e| Error::parse(1, e.to_string()))?;
        let events = lines
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(i + 1, e.to_string())))
            .collect::<Result<_>>()?;
        Ok(RunLog { header, events })
    }

    pub fn snapshots(&self) -> impl Iterator<Item = (u64, &SnapshotPayload)> {
        self.events.iter().filter_map(|e| match e {
            RunEvent::Snapshot { evaluations, payload } => Some((*evaluations, payload)),
            _ => None,
        })
    }

    pub fn evaluation_count(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, RunEvent::Evaluation { .. }))
            .count()
    }
}

/// Stop requests and reference-point changes, observed between steps.
pub trait SearchControl {
    /// Reference point to apply before step `step`, if any. Called
    /// repeatedly until it returns `None`.
    fn pending_reference(&mut self, step: u64, evaluations: u64) -> Option<ReferencePoint>;

    /// Whether to stop before executing step `step`.
    fn should_stop(&mut self, step: u64, evaluations: u64) -> bool;
}

/// Runs until the budget is spent.
#[derive(Debug, Default, Clone, Copy)]
pub struct Unattended;

impl SearchControl for Unattended {
    fn pending_reference(&mut self, _: u64, _: u64) -> Option<ReferencePoint> {
        None
    }

    fn should_stop(&mut self, _: u64, _: u64) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "at", content = "value")]
pub enum Trigger {
    /// Before the given step index.
    Step(u64),
    /// At the first boundary where the evaluation count reaches the value.
    Evaluations(u64),
}

impl Trigger {
    fn fired(self, step: u64, evaluations: u64) -> bool {
        match self {
            Trigger::Step(s) => step >= s,
            Trigger::Evaluations(e) => evaluations >= e,
        }
    }
}

/// A scripted decision maker: reference changes and an optional stop, each
/// fired by step index or evaluation count.
#[derive(Debug, Clone, Default)]
pub struct ScriptedControl {
    references: VecDeque<(Trigger, ReferencePoint)>,
    stop: Option<Trigger>,
}

impl ScriptedControl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reference_at(mut self, at: Trigger, reference: ReferencePoint) -> Self {
        self.references.push_back((at, reference));
        self
    }

    pub fn stop_at(mut self, at: Trigger) -> Self {
        self.stop = Some(at);
        self
    }
}

impl SearchControl for ScriptedControl {
    fn pending_reference(&mut self, step: u64, evaluations: u64) -> Option<ReferencePoint> {
        match self.references.front() {
            Some((t, _)) if t.fired(step, evaluations) => self.references.pop_front().map(|(_, r)| r),
            _ => None,
        }
    }

    fn should_stop(&mut self, step: u64, evaluations: u64) -> bool {
        self.stop.is_some_and(|t| t.fired(step, evaluations))
    }
}

/// The search state: archive, generator, counters and pass bookkeeping.
#[derive(Debug, Clone)]
pub struct Engine {
    instance: Arc<Instance>,
    config: SearchConfig,
    archive: ParetoArchive,
    rng: ChaCha8Rng,
    evaluations: u64,
    steps: u64,
    /// Archive ids whose neighborhood scan exhausted the failure budget.
    explored: HashSet<u64>,
    /// Ids still to scan in the current pass.
    queue: VecDeque<u64>,
    /// Alternative to descend from (perturbed and rejected, or a cone seed).
    descent: Option<Solution>,
    /// The out-of-cone start point has been descended from already.
    seed_used: bool,
    phase: Phase,
    last_snapshot_generation: Option<u64>,
    log: RunLog,
}

impl Engine {
    /// An engine whose archive is seeded with `seeds`.
    pub fn new(instance: Arc<Instance>, config: SearchConfig, seeds: &[Solution]) -> Result<Self> {
        config.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut engine = Self::with_rng(instance, config, rng);
        for s in seeds {
            engine.seed(s.clone())?;
        }
        Ok(engine)
    }

    /// Computes the bound sets with the engine's generator and seeds the
    /// archive with the lower-bound solutions.
    pub fn with_bounds(
        instance: Arc<Instance>,
        config: SearchConfig,
        weight_count: usize,
    ) -> Result<(Self, BoundSets)> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bounds = compute_bound_sets(&instance, weight_count, &mut rng)?;
        let mut engine = Self::with_rng(instance, config, rng);
        for s in &bounds.lower {
            engine.seed(s.clone())?;
        }
        Ok((engine, bounds))
    }

    fn with_rng(instance: Arc<Instance>, config: SearchConfig, rng: ChaCha8Rng) -> Self {
        let k = instance.num_objectives();
        let log = RunLog {
            header: RunHeader {
                instance: instance.name().to_string(),
                seed: config.seed,
                rng: RNG_NAME.to_string(),
                config: config.clone(),
            },
            events: Vec::new(),
        };
        Engine {
            instance,
            config,
            archive: ParetoArchive::new(k),
            rng,
            evaluations: 0,
            steps: 0,
            explored: HashSet::new(),
            queue: VecDeque::new(),
            descent: None,
            seed_used: false,
            phase: Phase::LocalSearch,
            last_snapshot_generation: None,
            log,
        }
    }

    fn seed(&mut self, s: Solution) -> Result<()> {
        if s.selection().len() != self.instance.num_items() || !self.instance.is_feasible(&s) {
            return Err(Error::invalid("seed solutions must be feasible for the instance"));
        }
        self.archive.try_insert(s);
        Ok(())
    }

    pub fn instance(&self) -> &Arc<Instance> {
        &self.instance
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn archive(&self) -> &ParetoArchive {
        &self.archive
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn log(&self) -> &RunLog {
        &self.log
    }

    pub fn budget_exhausted(&self) -> bool {
        self.evaluations >= self.config.max_evaluations
    }

    /// Raises the evaluation budget, e.g. when a session is resumed with a
    /// larger cap.
    pub fn set_max_evaluations(&mut self, max: u64) {
        self.config.max_evaluations = max;
    }

    /// Replaces the reference point and restarts the pass over the new cone.
    pub fn set_reference(&mut self, reference: ReferencePoint) -> Result<()> {
        self.archive.set_reference(reference.clone())?;
        self.queue.clear();
        self.descent = None;
        self.seed_used = false;
        self.phase = Phase::LocalSearch;
        self.log.events.push(RunEvent::Refchange {
            evaluations: self.evaluations,
            payload: RefchangePayload {
                step: self.steps,
                reference,
            },
        });
        Ok(())
    }

    /// Start point for an empty cone: the member with the smallest Chebyshev
    /// shortfall to the reference point (ties: smaller summed shortfall, then
    /// insertion order). `None` when the cone is non-empty or unrestricted.
    pub fn seed_cone(&self) -> Result<Option<Solution>> {
        let reference = self.archive.reference();
        if !reference.active || self.archive.cone_view().next().is_some() {
            return Ok(None);
        }
        let best = self
            .archive
            .entries()
            .iter()
            .min_by_key(|e| (reference.shortfall(e.solution.objectives()), e.id))
            .ok_or_else(|| Error::state("archive is empty; compute the bound sets first"))?;
        Ok(Some(best.solution.clone()))
    }

    /// Appends the terminal record and returns the log.
    pub fn finish(&mut self, reason: StopReason) -> RunLog {
        self.log.events.push(RunEvent::Done {
            evaluations: self.evaluations,
            payload: DonePayload {
                step: self.steps,
                reason,
                archive_size: self.archive.len(),
            },
        });
        self.log.clone()
    }

    /// Executes steps until the budget is spent, `control` asks to stop, or
    /// the reference point changes. Every recorded event is also passed to
    /// `emit` as it happens.
    pub fn run_until(&mut self, control: &mut dyn SearchControl, emit: &mut dyn FnMut(&RunEvent)) -> StopReason {
        loop {
            let mut changed = false;
            while let Some(r) = control.pending_reference(self.steps, self.evaluations) {
                match self.set_reference(r) {
                    Ok(()) => {
                        changed = true;
                        emit(self.log.events.last().expect("refchange recorded"));
                    }
                    Err(e) => log::warn!("ignoring reference point: {e}"),
                }
            }
            if changed {
                self.snapshot_if_changed(emit);
                return StopReason::ReferenceChanged;
            }
            if control.should_stop(self.steps, self.evaluations) {
                return StopReason::Stopped;
            }
            if self.budget_exhausted() {
                return StopReason::Budget;
            }
            self.step(emit);
        }
    }

    /// The outer loop: re-enters the search after every reference change
    /// until the budget is spent or `control` stops it.
    pub fn run(&mut self, control: &mut dyn SearchControl, emit: &mut dyn FnMut(&RunEvent)) -> StopReason {
        loop {
            match self.run_until(control, emit) {
                StopReason::ReferenceChanged => continue,
                other => return other,
            }
        }
    }

    /// One scheduling unit of the search.
    pub fn step(&mut self, emit: &mut dyn FnMut(&RunEvent)) {
        self.steps += 1;
        if let Some(start) = self.descent.take() {
            self.phase = Phase::Perturbation;
            self.descend(start, emit);
        } else if let Some(id) = self.queue.pop_front() {
            self.phase = Phase::LocalSearch;
            self.scan_member(id, emit);
        } else {
            self.queue = self.unexplored_cone();
            if self.queue.is_empty() {
                self.phase = Phase::Perturbation;
                self.perturbation(emit);
            }
        }
        self.snapshot_if_changed(emit);
    }

    fn unexplored_cone(&self) -> VecDeque<u64> {
        self.archive
            .cone_view()
            .filter(|e| !self.explored.contains(&e.id))
            .map(|e| e.id)
            .collect()
    }

    /// Runs one full pass over the unexplored cone members.
    pub fn local_search_pass(&mut self, emit: &mut dyn FnMut(&RunEvent)) -> PassReport {
        let mut report = PassReport::default();
        self.queue = self.unexplored_cone();
        report.empty_cone = self.archive.cone_view().next().is_none();
        while let Some(id) = self.queue.pop_front() {
            if self.budget_exhausted() {
                self.queue.push_front(id);
                break;
            }
            self.steps += 1;
            self.phase = Phase::LocalSearch;
            let before = self.evaluations;
            if let Some(success) = self.scan_member(id, emit) {
                report.elements += 1;
                let used = self.evaluations - before;
                report.evaluations += used;
                if success {
                    report.successes += 1;
                    report.failures += used - 1;
                } else {
                    report.failures += used;
                }
            }
            self.snapshot_if_changed(emit);
        }
        report
    }

    /// Perturbs a random cone member (or the cone seed when the cone is
    /// empty), offers the result, and continues the search from it.
    pub fn perturbation_step(&mut self, emit: &mut dyn FnMut(&RunEvent)) -> Result<Solution> {
        let base = match self.pick_cone_member() {
            Some(x) => x,
            None => self.seed_cone()?.ok_or_else(|| Error::state("archive is empty"))?,
        };
        self.steps += 1;
        self.phase = Phase::Perturbation;
        let x = self.perturb_from(&base, emit);
        self.snapshot_if_changed(emit);
        Ok(x)
    }

    fn pick_cone_member(&mut self) -> Option<Solution> {
        let cone: Vec<&Solution> = self.archive.cone_view().map(|e| &e.solution).collect();
        if cone.is_empty() {
            return None;
        }
        let i = self.rng.gen_range(0..cone.len());
        Some(cone[i].clone())
    }

    fn perturbation(&mut self, emit: &mut dyn FnMut(&RunEvent)) {
        let base = match self.pick_cone_member() {
            Some(x) => x,
            None => match self.seed_cone() {
                Ok(Some(seed)) if !self.seed_used => {
                    self.seed_used = true;
                    self.descent = Some(seed);
                    return;
                }
                Ok(Some(seed)) => seed,
                // Nothing archived yet: start from a random saturated solution.
                _ => {
                    let x = self
                        .instance
                        .maximal_fill(self.instance.empty_solution(), &mut self.rng);
                    if self.offer(&x, emit) != Offer::Added {
                        self.descent = Some(x);
                    }
                    return;
                }
            },
        };
        self.perturb_from(&base, emit);
    }

    fn perturb_from(&mut self, base: &Solution, emit: &mut dyn FnMut(&RunEvent)) -> Solution {
        let x = perturb(&self.instance, base, &mut self.rng);
        let offer = self.offer(&x, emit);
        if !self.joins_cone(offer, &x) {
            self.descent = Some(x.clone());
        }
        x
    }

    /// Returns `Some(true)` if a dominating neighbor replaced the member,
    /// `Some(false)` if the budget ran out, `None` if the member is gone or
    /// outside the cone.
    fn scan_member(&mut self, id: u64, emit: &mut dyn FnMut(&RunEvent)) -> Option<bool> {
        let entry = self.archive.get(id)?;
        if !self.archive.reference().contains(entry.solution.objectives()) || self.explored.contains(&id) {
            return None;
        }
        let current = entry.solution.clone();
        let mut failures = 0;
        while failures < self.config.failure_budget {
            if self.budget_exhausted() {
                // Resume this member in the next pass.
                return Some(false);
            }
            let y = neighborhood_move(&self.instance, &current, &mut self.rng);
            self.offer(&y, emit);
            if y.objectives().dominates(current.objectives()) {
                return Some(true);
            }
            failures += 1;
        }
        self.explored.insert(id);
        Some(false)
    }

    fn descend(&mut self, start: Solution, emit: &mut dyn FnMut(&RunEvent)) {
        let mut failures = 0;
        while failures < self.config.failure_budget && !self.budget_exhausted() {
            let y = neighborhood_move(&self.instance, &start, &mut self.rng);
            let offer = self.offer(&y, emit);
            if y.objectives().dominates(start.objectives()) {
                if !self.joins_cone(offer, &y) {
                    self.descent = Some(y);
                }
                return;
            }
            failures += 1;
        }
    }

    /// Whether `y` became a cone member that a later pass will scan.
    fn joins_cone(&self, offer: Offer, y: &Solution) -> bool {
        offer == Offer::Added && self.archive.reference().contains(y.objectives())
    }

    fn offer(&mut self, y: &Solution, emit: &mut dyn FnMut(&RunEvent)) -> Offer {
        debug_assert!(self.instance.is_feasible(y));
        debug_assert!(self.instance.is_saturated(y));
        self.evaluations += 1;
        let offer = if self.config.strict_cone && !self.archive.reference().contains(y.objectives()) {
            Offer::OutsideCone
        } else {
            self.archive.try_insert(y.clone()).into()
        };
        if self.config.trace_evaluations {
            self.log.events.push(RunEvent::Evaluation {
                evaluations: self.evaluations,
                payload: EvaluationPayload {
                    objectives: y.objectives().clone(),
                    offer,
                },
            });
        }
        if self.evaluations.is_multiple_of(self.config.checkpoint_interval) {
            self.record_snapshot(true, emit);
        }
        offer
    }

    fn snapshot_if_changed(&mut self, emit: &mut dyn FnMut(&RunEvent)) {
        if self.last_snapshot_generation != Some(self.archive.generation()) {
            self.record_snapshot(false, emit);
        }
    }

    fn record_snapshot(&mut self, checkpoint: bool, emit: &mut dyn FnMut(&RunEvent)) {
        self.last_snapshot_generation = Some(self.archive.generation());
        let event = RunEvent::Snapshot {
            evaluations: self.evaluations,
            payload: SnapshotPayload {
                checkpoint,
                archive: self.archive.snapshot(),
            },
        };
        emit(&event);
        if checkpoint || self.config.log_change_snapshots {
            self.log.events.push(event);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::enumerate_front;
    use crate::fixtures::{random_instance, t1};

    fn sel(inst: &Instance, items: &[usize]) -> Solution {
        let mut s = vec![false; inst.num_items()];
        for &j in items {
            s[j - 1] = true;
        }
        inst.evaluate(&s).unwrap()
    }

    fn points(a: &ParetoArchive) -> Vec<Vec<i64>> {
        let mut p: Vec<_> = a.solutions().map(|s| s.objectives().values().to_vec()).collect();
        p.sort();
        p
    }

    fn no_emit() -> impl FnMut(&RunEvent) {
        |_| {}
    }

    #[test]
    fn neighborhood_outputs_on_t1_are_saturated() {
        let t1 = t1();
        let x = sel(&t1, &[1, 2]);
        let mut seen = HashSet::new();
        for seed in 0..200 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = neighborhood_move(&t1, &x, &mut rng);
            assert!(t1.is_feasible(&y) && t1.is_saturated(&y));
            seen.insert(y.bitstring());
        }
        // Dropping item 1 leaves {2}, refill can only re-add item 1. Dropping
        // item 2 leaves {1}: residual 4 admits item 2 or item 3.
        let expected: HashSet<String> = ["1100", "1010"].iter().map(|s| s.to_string()).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn degenerate_moves() {
        let t1 = t1();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = neighborhood_move(&t1, &t1.empty_solution(), &mut rng);
        assert!(t1.is_saturated(&y));

        let one = Instance::new("one", 5, vec![5], vec![vec![1], vec![2]]).unwrap();
        let x = one.evaluate(&[true]).unwrap();
        assert_eq!(neighborhood_move(&one, &x, &mut rng), x);
        assert_eq!(perturb(&one, &x, &mut rng), x);
    }

    #[test]
    fn perturbation_outputs_on_t1() {
        let t1 = t1();
        let x = sel(&t1, &[1, 2]);
        let mut seen = HashSet::new();
        for seed in 0..300 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = perturb(&t1, &x, &mut rng);
            assert!(t1.is_feasible(&y) && t1.is_saturated(&y));
            seen.insert(y.bitstring());
        }
        // Every maximal feasible subset of T1 is reachable from the empty
        // knapsack: {1,2}, {1,3}, {4}, {2} is not maximal (item 1 fits).
        let expected: HashSet<String> = ["1100", "1010", "0001"].iter().map(|s| s.to_string()).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn pass_on_single_pareto_member_exhausts_budget() {
        let t1 = Arc::new(t1());
        let x = sel(&t1, &[1, 2]);
        let mut e = Engine::new(t1.clone(), SearchConfig::default(), &[x]).unwrap();
        e.set_reference(ReferencePoint::new(vec![5, 0])).unwrap();
        let report = e.local_search_pass(&mut no_emit());
        assert_eq!(report.elements, 1);
        assert_eq!(report.evaluations, 100);
        assert_eq!(report.failures, 100);
        assert_eq!(report.successes, 0);
        assert_eq!(e.evaluations(), 100);
    }

    #[test]
    fn pass_on_empty_cone() {
        let t1 = Arc::new(t1());
        let mut e = Engine::new(t1.clone(), SearchConfig::default(), &[sel(&t1, &[1, 2])]).unwrap();
        e.set_reference(ReferencePoint::new(vec![50, 50])).unwrap();
        let report = e.local_search_pass(&mut no_emit());
        assert!(report.empty_cone);
        assert_eq!(report.evaluations, 0);
    }

    #[test]
    fn perturbation_of_single_cone_member() {
        let t1 = Arc::new(t1());
        let x = sel(&t1, &[1, 2]);
        let mut found_other = false;
        for seed in 0..50 {
            let config = SearchConfig {
                seed,
                ..SearchConfig::default()
            };
            let mut e = Engine::new(t1.clone(), config, std::slice::from_ref(&x)).unwrap();
            let y = e.perturbation_step(&mut no_emit()).unwrap();
            assert_eq!(e.evaluations(), 1);
            match y.bitstring().as_str() {
                "1010" => {
                    found_other = true;
                    assert_eq!(points(e.archive()), vec![vec![4, 9], vec![8, 6]]);
                }
                "0001" => {
                    // (4,3) is dominated: archive unchanged, search continues from it
                    assert_eq!(points(e.archive()), vec![vec![8, 6]]);
                    assert_eq!(e.descent.as_ref(), Some(&y));
                }
                _ => assert_eq!(points(e.archive()), vec![vec![8, 6]]),
            }
        }
        assert!(found_other);
    }

    #[test]
    fn seed_cone_picks_smallest_shortfall() {
        let t1 = Arc::new(t1());
        let seeds = [sel(&t1, &[1, 2]), sel(&t1, &[1, 3])];
        let mut e = Engine::new(t1.clone(), SearchConfig::default(), &seeds).unwrap();
        assert_eq!(e.seed_cone().unwrap(), None);
        e.set_reference(ReferencePoint::new(vec![5, 8])).unwrap();
        let s = e.seed_cone().unwrap().unwrap();
        assert_eq!(s.objectives().values(), &[4, 9]);
        e.set_reference(ReferencePoint::new(vec![4, 6])).unwrap();
        assert_eq!(e.seed_cone().unwrap(), None);

        let empty = Engine::new(t1.clone(), SearchConfig::default(), &[]).unwrap();
        let mut empty = empty;
        empty.set_reference(ReferencePoint::new(vec![1, 1])).unwrap();
        assert_eq!(empty.seed_cone().unwrap_err().kind(), "invalid-state");
    }

    #[test]
    fn zero_budget_returns_immediately() {
        let t1 = Arc::new(t1());
        let config = SearchConfig {
            max_evaluations: 0,
            ..SearchConfig::default()
        };
        let (mut e, _) = Engine::with_bounds(t1, config, 11).unwrap();
        assert_eq!(e.run(&mut Unattended, &mut no_emit()), StopReason::Budget);
        assert_eq!(e.evaluations(), 0);
        assert!(e.log().events.is_empty());
    }

    #[test]
    fn t1_finds_the_full_front() {
        let t1 = Arc::new(t1());
        let config = SearchConfig {
            max_evaluations: 1000,
            seed: 11,
            ..SearchConfig::default()
        };
        // Seed with a dominated solution only.
        let mut e = Engine::new(t1.clone(), config, &[sel(&t1, &[4])]).unwrap();
        e.run(&mut Unattended, &mut no_emit());
        assert_eq!(points(e.archive()), vec![vec![4, 9], vec![8, 6]]);
        assert_eq!(e.evaluations(), 1000);
    }

    #[test]
    fn evaluation_trace_is_exact() {
        let inst = Arc::new(random_instance(12, 2, 3));
        let config = SearchConfig {
            max_evaluations: 2500,
            trace_evaluations: true,
            seed: 5,
            ..SearchConfig::default()
        };
        let (mut e, _) = Engine::with_bounds(inst, config, 5).unwrap();
        e.run(&mut Unattended, &mut no_emit());
        assert_eq!(e.log().evaluation_count() as u64, e.evaluations());
        let checkpoints: Vec<u64> = e
            .log()
            .snapshots()
            .filter(|(_, s)| s.checkpoint)
            .map(|(ev, _)| ev)
            .collect();
        assert_eq!(checkpoints, vec![1000, 2000]);
    }

    #[test]
    fn strict_mode_keeps_archive_inside_cone() {
        let inst = Arc::new(random_instance(12, 2, 8));
        let front = enumerate_front(&inst).unwrap();
        let mid = &front.points[front.len() / 2].objectives;
        let config = SearchConfig {
            max_evaluations: 3000,
            strict_cone: true,
            seed: 2,
            ..SearchConfig::default()
        };
        let mut e = Engine::new(inst.clone(), config, &[]).unwrap();
        e.set_reference(ReferencePoint::new(mid.values().to_vec())).unwrap();
        e.seed(inst.maximal_fill(inst.empty_solution(), &mut ChaCha8Rng::seed_from_u64(0)))
            .unwrap();
        let before: Vec<u64> = e.archive().entries().iter().map(|x| x.id).collect();
        e.run(&mut Unattended, &mut no_emit());
        for entry in e.archive().entries() {
            assert!(before.contains(&entry.id) || e.archive().reference().contains(entry.solution.objectives()));
        }
        assert!(e.archive().cone_len() > 0);
    }

    #[test]
    fn run_log_ndjson_round_trip() {
        let inst = Arc::new(random_instance(10, 2, 1));
        let config = SearchConfig {
            max_evaluations: 1500,
            seed: 9,
            ..SearchConfig::default()
        };
        let (mut e, _) = Engine::with_bounds(inst, config, 5).unwrap();
        let mut control =
            ScriptedControl::new().reference_at(Trigger::Evaluations(700), ReferencePoint::new(vec![100, 100]));
        e.run(&mut control, &mut no_emit());
        let log = e.finish(StopReason::Budget);
        let text = log.to_ndjson();
        assert!(text.starts_with("{\"type\":\"header\""));
        let back = RunLog::from_ndjson(&text).unwrap();
        assert_eq!(back, log);
        assert!(text.lines().any(|l| l.contains("\"type\":\"refchange\"")));
        assert!(text.lines().last().unwrap().contains("\"type\":\"done\""));
    }
}
