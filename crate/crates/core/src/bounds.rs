//! Lower and upper bound sets computed from weighted-sum scalarizations.
//!
//! The lower set holds feasible outcomes of a greedy constructive heuristic,
//! one per weight vector; the upper set holds the Dantzig bound of each
//! scalarized LP relaxation together with the relaxed outcome that attains it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, Solution};

/// Default number of weight vectors used for the bound sets.
pub const DEFAULT_WEIGHT_COUNT: usize = 101;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| w.is_nan() || w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {sum}, expected 1")));
        }
        Ok(WeightVector(weights))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scalarize(&self, values: &[i64]) -> f64 {
        self.0.iter().zip(values).map(|(w, &z)| w * z as f64).sum()
    }

    fn item_profit(&self, instance: &Instance, item: usize) -> f64 {
        self.0
            .iter()
            .enumerate()
            .map(|(k, w)| w * instance.profit(k, item) as f64)
            .sum()
    }
}

/// Uniform simplex lattice with `count - 1` divisions per axis. For two
/// objectives this is `(i/(count-1), 1 - i/(count-1))` for `i = 0..count`.
pub fn make_weight_set(objectives: usize, count: usize) -> Result<Vec<WeightVector>> {
    if count < 2 {
        return Err(Error::invalid("weight count must be at least 2"));
    }
    if objectives < 2 {
        return Err(Error::invalid("weight sets need at least 2 objectives"));
    }
    let divisions = count - 1;
    let mut out = Vec::new();
    let mut parts = Vec::with_capacity(objectives);
    compositions(divisions, objectives, &mut parts, &mut |p| {
        let w = p.iter().map(|&a| a as f64 / divisions as f64).collect();
        out.push(WeightVector(w));
    });
    Ok(out)
}

fn compositions(remaining: usize, slots: usize, prefix: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if slots == 1 {
        prefix.push(remaining);
        emit(prefix);
        prefix.pop();
        return;
    }
    for a in 0..=remaining {
        prefix.push(a);
        compositions(remaining - a, slots - 1, prefix, emit);
        prefix.pop();
    }
}

/// Items ordered by scalarized profit per unit cost, best first, ties by
/// lower index. Zero-cost items come first.
fn ratio_order(instance: &Instance, w: &WeightVector) -> Vec<usize> {
    let ratio: Vec<f64> = (0..instance.num_items())
        .map(|j| {
            let c = instance.cost(j);
            if c == 0 {
                f64::INFINITY
            } else {
                w.item_profit(instance, j) / c as f64
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..instance.num_items()).collect();
    order.sort_by(|&a, &b| ratio[b].total_cmp(&ratio[a]).then(a.cmp(&b)));
    order
}

/// Greedy feasible solution for one weight vector, completed by a random
/// maximal fill.
pub fn lower_bound_solution<R: Rng + ?Sized>(instance: &Instance, w: &WeightVector, rng: &mut R) -> Solution {
    let mut x = instance.empty_solution();
    let mut residual = instance.capacity();
    for j in ratio_order(instance, w) {
        if instance.cost(j) <= residual {
            instance.add_item(&mut x, j);
            residual -= instance.cost(j);
        }
    }
    instance.maximal_fill(x, rng)
}

/// Dantzig bound of the scalarized LP relaxation and the relaxed outcome
/// vector attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperBound {
    pub weights: WeightVector,
    pub value: f64,
    pub point: Vec<f64>,
}

pub fn upper_bound(instance: &Instance, w: &WeightVector) -> f64 {
    relaxation(instance, w).value
}

pub fn relaxation(instance: &Instance, w: &WeightVector) -> UpperBound {
    let mut point = vec![0.0; instance.num_objectives()];
    let mut residual = instance.capacity();
    for j in ratio_order(instance, w) {
        let c = instance.cost(j);
        let fraction = if c <= residual {
            residual -= c;
            1.0
        } else {
            residual as f64 / c as f64
        };
        for (k, z) in point.iter_mut().enumerate() {
            *z += fraction * instance.profit(k, j) as f64;
        }
        if fraction < 1.0 {
            break;
        }
    }
    UpperBound {
        value: w.weights().iter().zip(&point).map(|(a, b)| a * b).sum(),
        weights: w.clone(),
        point,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSets {
    /// Mutually nondominated greedy solutions, in weight order of first
    /// appearance.
    pub lower: Vec<Solution>,
    pub upper: Vec<UpperBound>,
}

impl BoundSets {
    pub fn lower_points(&self) -> impl Iterator<Item = &crate::model::ObjectiveVector> {
        self.lower.iter().map(|s| s.objectives())
    }
}

pub fn compute_bound_sets<R: Rng + ?Sized>(instance: &Instance, weight_count: usize, rng: &mut R) -> Result<BoundSets> {
    let weights = make_weight_set(instance.num_objectives(), weight_count)?;
    let mut lower: Vec<Solution> = Vec::new();
    let mut upper = Vec::with_capacity(weights.len());
    for w in &weights {
        let x = lower_bound_solution(instance, w, rng);
        let z = x.objectives();
        if !lower.iter().any(|l| l.objectives().covers(z)) {
            lower.retain(|l| !z.dominates(l.objectives()));
            lower.push(x);
        }
        upper.push(relaxation(instance, w));
    }
    Ok(BoundSets { lower, upper })
}
