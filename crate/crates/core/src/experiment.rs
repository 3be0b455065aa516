//! Batch experiments with a simulated decision maker: every run keeps one
//! reference point fixed and records M at a fixed checkpoint grid.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::ReferencePoint;
use crate::bounds::DEFAULT_WEIGHT_COUNT;
use crate::engine::{Engine, RunEvent, SearchConfig, Unattended};
use crate::error::{Error, Result};
use crate::exact::{dp_front, ExactFront, DEFAULT_STATE_CAP};
use crate::instance_io::load_instance;
use crate::metrics::{aggregate, aggregate_csv, m_metric, mean_curve, AggregatePoint, MCurve};
use crate::model::Instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub instance_path: PathBuf,
    pub references: Vec<ReferencePoint>,
    pub runs: usize,
    pub max_evaluations: u64,
    pub base_seed: u64,
    pub oracle_path: Option<PathBuf>,
    pub weight_count: usize,
    pub out_dir: PathBuf,
    pub strict_cone: bool,
    pub failure_budget: u32,
    pub checkpoint_interval: u64,
}

impl ExperimentSpec {
    pub fn new(instance_path: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentSpec {
            instance_path: instance_path.into(),
            references: Vec::new(),
            runs: 100,
            max_evaluations: 100_000,
            base_seed: 0,
            oracle_path: None,
            weight_count: DEFAULT_WEIGHT_COUNT,
            out_dir: out_dir.into(),
            strict_cone: false,
            failure_budget: 100,
            checkpoint_interval: 1000,
        }
    }

    fn search_config(&self, seed: u64) -> SearchConfig {
        SearchConfig {
            failure_budget: self.failure_budget,
            max_evaluations: self.max_evaluations,
            seed,
            strict_cone: self.strict_cone,
            checkpoint_interval: self.checkpoint_interval,
            log_change_snapshots: false,
            trace_evaluations: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if self.references.is_empty() {
            return Err(Error::invalid("at least one reference point is required"));
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::invalid("checkpoint interval must be positive"));
        }
        Ok(())
    }
}

/// Results for one reference point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceReport {
    pub reference: ReferencePoint,
    /// Exact front points inside the cone.
    pub cone_front_size: usize,
    pub curves: Vec<MCurve>,
    pub mean: MCurve,
    pub aggregate: Vec<AggregatePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub instance: String,
    pub front_size: usize,
    pub references: Vec<ReferenceReport>,
}

/// Checkpoint grid `0, interval, 2*interval, ..., max` (the budget is
/// always the last point).
pub fn checkpoint_grid(max_evaluations: u64, interval: u64) -> Vec<u64> {
    let interval = interval.max(1);
    let mut grid: Vec<u64> = (0..=max_evaluations).step_by(interval as usize).collect();
    if grid.last() != Some(&max_evaluations) {
        grid.push(max_evaluations);
    }
    grid
}

/// One run with a fixed reference point. Returns M at every grid point.
pub fn run_once(
    instance: &Arc<Instance>,
    front: &ExactFront,
    reference: &ReferencePoint,
    spec: &ExperimentSpec,
    seed: u64,
    run_id: String,
) -> Result<MCurve> {
    let config = spec.search_config(seed);
    let (mut engine, _) = Engine::with_bounds(instance.clone(), config, spec.weight_count)?;
    engine.set_reference(reference.clone())?;

    let mut curve = MCurve::new(run_id, reference.clone());
    let initial = m_metric(engine.archive().solutions().map(|s| s.objectives()), front, reference);
    curve.push(0, initial)?;

    let mut checkpoints: Vec<(u64, f64)> = Vec::new();
    let mut emit = |e: &RunEvent| {
        if let RunEvent::Snapshot { evaluations, payload } = e {
            if payload.checkpoint {
                let m = m_metric(payload.archive.points(), front, reference);
                checkpoints.push((*evaluations, m));
            }
        }
    };
    engine.run(&mut Unattended, &mut emit);
    for (e, m) in checkpoints {
        curve.push(e, m)?;
    }
    if curve.checkpoints.last().map(|c| c.0) != Some(engine.evaluations()) {
        let m = m_metric(engine.archive().solutions().map(|s| s.objectives()), front, reference);
        curve.push(engine.evaluations(), m)?;
    }
    Ok(curve)
}

/// Runs every reference point `spec.runs` times with seeds
/// `base_seed + r`. Runs execute in parallel; results are ordered by
/// reference index, then run index.
pub fn run_experiment_on(
    instance: Arc<Instance>,
    front: &ExactFront,
    spec: &ExperimentSpec,
) -> Result<ExperimentReport> {
    spec.validate()?;
    let k = instance.num_objectives();
    if let Some(r) = spec.references.iter().find(|r| r.len() != k) {
        return Err(Error::invalid(format!(
            "reference point {:?} has {} components, instance has {k} objectives",
            r.values,
            r.len()
        )));
    }
    let jobs: Vec<(usize, usize)> = (0..spec.references.len())
        .flat_map(|i| (0..spec.runs).map(move |r| (i, r)))
        .collect();
    log::info!(
        "{} reference points x {} runs, {} evaluations each",
        spec.references.len(),
        spec.runs,
        spec.max_evaluations
    );
    let curves: Vec<MCurve> = jobs
        .par_iter()
        .map(|&(i, r)| {
            run_once(
                &instance,
                front,
                &spec.references[i],
                spec,
                spec.base_seed.wrapping_add(r as u64),
                format!("{}_{}", i + 1, r),
            )
        })
        .collect::<Result<_>>()?;

    let mut references = Vec::new();
    for (i, chunk) in curves.chunks(spec.runs).enumerate() {
        let reference = spec.references[i].clone();
        log::info!(
            "reference {:?}: final mean M {:.4}",
            reference.values,
            chunk.iter().filter_map(MCurve::final_value).sum::<f64>() / chunk.len() as f64
        );
        references.push(ReferenceReport {
            cone_front_size: front.objectives().filter(|z| reference.contains(z)).count(),
            mean: mean_curve(chunk)?,
            aggregate: aggregate(chunk)?,
            curves: chunk.to_vec(),
            reference,
        });
    }
    Ok(ExperimentReport {
        instance: instance.name().to_string(),
        front_size: front.len(),
        references,
    })
}

/// Loads the oracle: an imported front file if given, else the dynamic
/// program for two objectives.
pub fn load_oracle(instance: &Instance, oracle_path: Option<&Path>) -> Result<ExactFront> {
    match oracle_path {
        Some(p) => ExactFront::from_text(&std::fs::read_to_string(p)?, Some(instance)),
        None if instance.num_objectives() == 2 => dp_front(instance, DEFAULT_STATE_CAP),
        None => Err(Error::NoOracle(format!(
            "no front file given and no exact method for {} objectives",
            instance.num_objectives()
        ))),
    }
}

/// Loads inputs, runs the experiment, and writes `run_<ref>_<r>.csv`,
/// `mean_<ref>.csv` and `summary.txt` to the output directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let instance = Arc::new(load_instance(&spec.instance_path)?);
    let front = load_oracle(&instance, spec.oracle_path.as_deref())?;
    let report = run_experiment_on(instance, &front, spec)?;
    write_outputs(&report, &spec.out_dir)?;
    Ok(report)
}

pub fn write_outputs(report: &ExperimentReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    for (i, r) in report.references.iter().enumerate() {
        for (run, c) in r.curves.iter().enumerate() {
            std::fs::write(out_dir.join(format!("run_{}_{run}.csv", i + 1)), c.to_csv())?;
        }
        std::fs::write(out_dir.join(format!("mean_{}.csv", i + 1)), aggregate_csv(&r.aggregate))?;
    }
    std::fs::write(out_dir.join("summary.txt"), summary(report))?;
    Ok(())
}

pub fn summary(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "instance: {}", report.instance);
    let _ = writeln!(out, "exact front size: {}", report.front_size);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "ref  reference          |P_R|  runs  final mean M  stddev    evals to mean M >= 0.9"
    );
    for (i, r) in report.references.iter().enumerate() {
        let last = r.aggregate.last().expect("non-empty grid");
        let reach = r
            .aggregate
            .iter()
            .find(|p| p.mean >= 0.9)
            .map(|p| p.evaluations.to_string())
            .unwrap_or_else(|| "-".to_string());
        let _ = writeln!(
            out,
            "#{:<3} {:<18} {:>5}  {:>4}  {:>12.4}  {:>8.4}  {:>10}",
            i + 1,
            format!("{:?}", r.reference.values),
            r.cone_front_size,
            last.n,
            last.mean,
            last.stddev,
            reach
        );
    }
    out
}

/// Parses reference points, one per line: `r1,r2[,...]` (commas or
/// whitespace). `#` starts a comment.
pub fn parse_references(text: &str) -> Result<Vec<ReferencePoint>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(parse_reference(line).map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub fn parse_reference(text: &str) -> Result<ReferencePoint> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<i64>()
                .map_err(|_| Error::invalid(format!("invalid reference value {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::invalid("empty reference point"));
    }
    Ok(ReferencePoint::new(values))
}

/// Three reference points in the style of a knee/extremes study on a
/// biobjective front: one around the knee and one at each end. Each cone
/// holds a contiguous window of `window` front points.
pub fn knee_and_extremes(front: &ExactFront, window: usize) -> Result<[ReferencePoint; 3]> {
    if front.objectives().any(|z| z.len() != 2) {
        return Err(Error::invalid("knee placement needs a biobjective front"));
    }
    let n = front.len();
    if n < window.max(3) || window == 0 {
        return Err(Error::invalid(format!(
            "front of {n} points is too small for windows of {window}"
        )));
    }
    // Points sorted by z1 descending, z2 ascending.
    let z: Vec<(f64, f64)> = front
        .objectives()
        .map(|v| (v.values()[0] as f64, v.values()[1] as f64))
        .collect();
    let (a, b) = (z[0], z[n - 1]);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let norm = (dx * dx + dy * dy).sqrt().max(f64::MIN_POSITIVE);
    let knee = (0..n)
        .max_by(|&i, &j| {
            let d = |p: (f64, f64)| ((p.0 - a.0) * dy - (p.1 - a.1) * dx).abs() / norm;
            d(z[i]).total_cmp(&d(z[j])).then(j.cmp(&i))
        })
        .expect("non-empty");
    let window_ref = |start: usize| {
        let start = start.min(n - window);
        let end = start + window - 1;
        let p = front.points[start].objectives.values();
        let q = front.points[end].objectives.values();
        ReferencePoint::new(vec![q[0], p[1]])
    };
    let knee_start = knee.saturating_sub(window / 2);
    Ok([window_ref(knee_start), window_ref(0), window_ref(n - window)])
}
