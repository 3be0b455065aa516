use std::collections::BTreeSet;
use std::sync::Arc;

use ipils::engine::{RunEvent, ScriptedControl, StopReason, Trigger, Unattended};
use ipils::exact::{enumerate_front, exact_front};
use ipils::fixtures::{random_instance, t1};
use ipils::{Engine, ExactFront, Instance, ObjectiveVector, ParetoArchive, ReferencePoint, RunLog, SearchConfig};

fn config(max: u64, seed: u64) -> SearchConfig {
    SearchConfig {
        max_evaluations: max,
        seed,
        ..SearchConfig::default()
    }
}

fn points(archive: &ParetoArchive) -> BTreeSet<ObjectiveVector> {
    archive.solutions().map(|s| s.objectives().clone()).collect()
}

fn front_set(front: &ExactFront) -> BTreeSet<ObjectiveVector> {
    front.objectives().cloned().collect()
}

fn run(inst: &Arc<Instance>, cfg: SearchConfig) -> Engine {
    let (mut e, _) = Engine::with_bounds(inst.clone(), cfg, 101).unwrap();
    e.run(&mut Unattended, &mut |_| {});
    e
}

#[test]
fn small_instances_reach_the_exact_front() {
    // Unrestricted cone, 10^4 evaluations, 100 seeded runs per instance.
    let mut instances = vec![Arc::new(t1())];
    for seed in 0..4 {
        instances.push(Arc::new(random_instance(8 + seed as usize, 2, 100 + seed)));
    }
    for inst in &instances {
        let front = front_set(&enumerate_front(inst).unwrap());
        let hits = (0..100)
            .filter(|&seed| points(run(inst, config(10_000, seed)).archive()) == front)
            .count();
        assert!(hits >= 95, "{}: exact front in only {hits}/100 runs", inst.name());
    }
}

#[test]
fn identical_seeds_give_identical_logs() {
    let inst = Arc::new(random_instance(30, 2, 5));
    let cfg = SearchConfig {
        trace_evaluations: true,
        ..config(5_000, 77)
    };
    let a = run(&inst, cfg.clone()).finish(StopReason::Budget);
    let b = run(&inst, cfg).finish(StopReason::Budget);
    assert_eq!(a.to_ndjson(), b.to_ndjson());
    assert_eq!(a.evaluation_count(), 5_000);
    let parsed = RunLog::from_ndjson(&a.to_ndjson()).unwrap();
    assert_eq!(parsed, a);

    let other = run(&inst, config(5_000, 78)).finish(StopReason::Budget);
    assert_ne!(other.to_ndjson(), a.to_ndjson());
}

#[test]
fn oracle_hits_never_decrease_across_snapshots() {
    let inst = Arc::new(random_instance(14, 2, 9));
    let front = enumerate_front(&inst).unwrap();
    let (mut e, _) = Engine::with_bounds(inst.clone(), config(20_000, 3), 101).unwrap();
    let mut hits = Vec::new();
    e.run(&mut Unattended, &mut |ev| {
        if let RunEvent::Snapshot { payload, .. } = ev {
            hits.push(payload.archive.points().filter(|z| front.contains(z)).count());
        }
    });
    assert!(hits.len() > 2);
    assert!(hits.windows(2).all(|w| w[0] <= w[1]), "{hits:?}");
}

#[test]
fn snapshot_generations_increase_and_checkpoints_align() {
    let inst = Arc::new(random_instance(25, 2, 4));
    let (mut e, _) = Engine::with_bounds(inst, config(7_500, 1), 101).unwrap();
    let mut generations = Vec::new();
    let mut checkpoints = Vec::new();
    e.run(&mut Unattended, &mut |ev| {
        if let RunEvent::Snapshot { evaluations, payload } = ev {
            if payload.checkpoint {
                checkpoints.push(*evaluations);
            } else {
                generations.push(payload.archive.generation);
            }
        }
    });
    assert!(generations.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(checkpoints, (1..=7).map(|i| i * 1000).collect::<Vec<u64>>());
}

#[test]
fn reference_change_restricts_the_cone_and_is_logged() {
    let inst = Arc::new(random_instance(30, 2, 8));
    let front = exact_front(&inst).unwrap();
    let extreme = front.points.last().unwrap().objectives.clone();
    let r = ReferencePoint::new(vec![extreme.values()[0] - 50, extreme.values()[1] - 10]);
    let (mut e, _) = Engine::with_bounds(inst, config(10_000, 2), 101).unwrap();
    let mut control = ScriptedControl::new().reference_at(Trigger::Evaluations(4_000), r.clone());
    let mut after = Vec::new();
    let mut switched = false;
    e.run(&mut control, &mut |ev| match ev {
        RunEvent::Refchange { evaluations, payload } => {
            assert!(*evaluations >= 4_000 && *evaluations < 4_000 + 200);
            assert_eq!(payload.reference, r);
            switched = true;
        }
        RunEvent::Snapshot { payload, .. } if switched => after.push(payload.archive.clone()),
        _ => {}
    });
    assert!(!after.is_empty());
    for snap in &after {
        assert_eq!(snap.reference, r);
        for z in snap.cone_points() {
            assert!(r.contains(z));
        }
    }
    let log = e.finish(StopReason::Budget);
    assert_eq!(
        log.events
            .iter()
            .filter(|ev| matches!(ev, RunEvent::Refchange { .. }))
            .count(),
        1
    );
}

#[test]
fn strict_cone_mode_discards_outside_points() {
    let inst = Arc::new(random_instance(25, 2, 3));
    let cfg = SearchConfig {
        strict_cone: true,
        ..config(5_000, 4)
    };
    let (mut strict, _) = Engine::with_bounds(inst.clone(), cfg, 101).unwrap();
    let front = enumerate_front(&inst).unwrap();
    let mid = &front.points[front.len() / 2].objectives;
    let r = ReferencePoint::new(mid.values().to_vec());
    strict.set_reference(r.clone()).unwrap();
    let outside_before = strict.archive().len() - strict.archive().cone_len();
    strict.run(&mut Unattended, &mut |_| {});
    let outside_after = strict.archive().len() - strict.archive().cone_len();
    // Seeds outside the cone may only disappear, never be joined by others.
    assert!(outside_after <= outside_before);
}

#[test]
fn empty_cone_is_seeded_from_the_nearest_member() {
    let inst = Arc::new(random_instance(20, 2, 6));
    let front = enumerate_front(&inst).unwrap();
    let (mut e, _) = Engine::with_bounds(inst, config(20_000, 5), 101).unwrap();
    // A cone holding exactly the front points no bound solution reached.
    let missing: Vec<_> = front
        .objectives()
        .filter(|z| !e.archive().solutions().any(|s| s.objectives() == *z))
        .cloned()
        .collect();
    let Some(target) = missing.first() else { return };
    e.set_reference(ReferencePoint::new(target.values().to_vec())).unwrap();
    assert_eq!(e.archive().cone_len(), 0);
    assert!(e.seed_cone().unwrap().is_some());
    e.run(&mut Unattended, &mut |_| {});
    assert!(e.archive().cone_len() > 0, "search never reached the cone");
}

#[test]
fn replaying_steps_reproduces_the_archive() {
    let inst = Arc::new(random_instance(30, 2, 11));
    let r1 = ReferencePoint::new(vec![800, 700]);
    let r2 = ReferencePoint::new(vec![600, 900]);
    let (mut live, _) = Engine::with_bounds(inst.clone(), config(30_000, 9), 101).unwrap();
    let mut control = ScriptedControl::new()
        .reference_at(Trigger::Evaluations(5_000), r1)
        .reference_at(Trigger::Evaluations(12_345), r2)
        .stop_at(Trigger::Evaluations(25_000));
    live.run(&mut control, &mut |_| {});
    let log = live.finish(StopReason::Stopped);

    let mut script = ScriptedControl::new();
    for ev in &log.events {
        if let RunEvent::Refchange { payload, .. } = ev {
            script = script.reference_at(Trigger::Step(payload.step), payload.reference.clone());
        }
    }
    script = script.stop_at(Trigger::Step(live.steps()));
    let (mut replay, _) = Engine::with_bounds(inst, config(30_000, 9), 101).unwrap();
    replay.run(&mut script, &mut |_| {});
    assert_eq!(replay.archive(), live.archive());
    assert_eq!(replay.evaluations(), live.evaluations());
}
