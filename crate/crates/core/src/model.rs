//! Problem data, evaluation, feasibility and dominance.
//!
//! All objectives are maximized. Coefficients are non-negative integers and
//! every sum is accumulated in `i64`, so dominance comparisons are exact.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A multi-objective 0/1 knapsack instance with `n` items and `K` objectives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    name: String,
    capacity: i64,
    costs: Vec<i64>,
    /// `profits[k][j]` is the profit of item `j` in objective `k`.
    profits: Vec<Vec<i64>>,
    #[serde(skip)]
    warnings: Vec<String>,
}

impl Instance {
    pub fn new(name: impl Into<String>, capacity: i64, costs: Vec<i64>, profits: Vec<Vec<i64>>) -> Result<Self> {
        let n = costs.len();
        if profits.is_empty() {
            return Err(Error::invalid("at least one objective is required"));
        }
        if capacity < 0 {
            return Err(Error::invalid("capacity must be non-negative"));
        }
        for (k, row) in profits.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "objective {} has {} profits, expected {n}",
                    k + 1,
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|&p| p < 0) {
                return Err(Error::invalid(format!(
                    "negative profit for item {} in objective {}",
                    j + 1,
                    k + 1
                )));
            }
        }
        if let Some(j) = costs.iter().position(|&c| c < 0) {
            return Err(Error::invalid(format!("negative cost for item {}", j + 1)));
        }

        let mut warnings = Vec::new();
        for (j, &c) in costs.iter().enumerate() {
            if c > capacity {
                warnings.push(format!("item {} costs {c}, more than the capacity {capacity}", j + 1));
            }
        }
        let total: i64 = costs.iter().sum();
        if n > 0 && total <= capacity {
            warnings.push(format!(
                "all items fit: total cost {total} does not exceed the capacity {capacity}"
            ));
        }
        for w in &warnings {
            log::warn!("{w}");
        }

        Ok(Instance {
            name: name.into(),
            capacity,
            costs,
            profits,
            warnings,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_items(&self) -> usize {
        self.costs.len()
    }

    pub fn num_objectives(&self) -> usize {
        self.profits.len()
    }

    pub fn capacity(&self) -> i64 {
        self.capacity
    }

    pub fn costs(&self) -> &[i64] {
        &self.costs
    }

    pub fn cost(&self, item: usize) -> i64 {
        self.costs[item]
    }

    pub fn profit(&self, objective: usize, item: usize) -> i64 {
        self.profits[objective][item]
    }

    pub fn profits(&self) -> &[Vec<i64>] {
        &self.profits
    }

    /// Violations of the usual coefficient relations (`c_j <= C`, `sum c_j > C`).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Evaluates an arbitrary selection. Infeasible selections are evaluated
    /// too; use [`Instance::is_feasible`] to check the capacity.
    pub fn evaluate(&self, selection: &[bool]) -> Result<Solution> {
        if selection.len() != self.num_items() {
            return Err(Error::invalid(format!(
                "selection has {} entries, instance has {} items",
                selection.len(),
                self.num_items()
            )));
        }
        let mut objectives = vec![0i64; self.num_objectives()];
        let mut cost = 0i64;
        for (j, _) in selection.iter().enumerate().filter(|(_, &x)| x) {
            cost += self.costs[j];
            for (k, z) in objectives.iter_mut().enumerate() {
                *z += self.profits[k][j];
            }
        }
        Ok(Solution {
            selection: selection.to_vec(),
            objectives: ObjectiveVector(objectives),
            cost,
        })
    }

    pub fn is_feasible(&self, solution: &Solution) -> bool {
        solution.cost <= self.capacity
    }

    /// The solution with no item selected.
    pub fn empty_solution(&self) -> Solution {
        Solution {
            selection: vec![false; self.num_items()],
            objectives: ObjectiveVector(vec![0; self.num_objectives()]),
            cost: 0,
        }
    }

    pub fn residual(&self, solution: &Solution) -> i64 {
        self.capacity - solution.cost
    }

    /// True if no unselected item fits into the residual capacity.
    pub fn is_saturated(&self, solution: &Solution) -> bool {
        let residual = self.residual(solution);
        solution
            .selection
            .iter()
            .zip(&self.costs)
            .all(|(&x, &c)| x || c > residual)
    }

    /// Adds unselected items one at a time, each drawn uniformly among the
    /// items that still fit, until the knapsack is saturated.
    pub fn maximal_fill<R: Rng + ?Sized>(&self, solution: Solution, rng: &mut R) -> Solution {
        self.maximal_fill_with(solution, |fitting| rng.gen_range(0..fitting.len()))
    }

    /// [`Instance::maximal_fill`] with an explicit chooser. `choose` receives
    /// the currently fitting items (ascending index order) and returns a
    /// position in that slice.
    pub fn maximal_fill_with<F>(&self, mut solution: Solution, mut choose: F) -> Solution
    where
        F: FnMut(&[usize]) -> usize,
    {
        let mut residual = self.residual(&solution);
        let mut fitting: Vec<usize> = (0..self.num_items())
            .filter(|&j| !solution.selection[j] && self.costs[j] <= residual)
            .collect();
        while !fitting.is_empty() {
            let pos = choose(&fitting);
            let item = fitting.remove(pos);
            self.add_item(&mut solution, item);
            residual -= self.costs[item];
            fitting.retain(|&j| self.costs[j] <= residual);
        }
        solution
    }

    pub(crate) fn add_item(&self, solution: &mut Solution, item: usize) {
        debug_assert!(!solution.selection[item]);
        solution.selection[item] = true;
        solution.cost += self.costs[item];
        for (k, z) in solution.objectives.0.iter_mut().enumerate() {
            *z += self.profits[k][item];
        }
    }

    pub(crate) fn remove_item(&self, solution: &mut Solution, item: usize) {
        debug_assert!(solution.selection[item]);
        solution.selection[item] = false;
        solution.cost -= self.costs[item];
        for (k, z) in solution.objectives.0.iter_mut().enumerate() {
            *z -= self.profits[k][item];
        }
    }
}

/// Outcome of a solution in objective space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<i64>);

impl ObjectiveVector {
    pub fn new(values: Vec<i64>) -> Self {
        ObjectiveVector(values)
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Pareto dominance for maximization. Vectors must have equal length.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        dominates_slice(&self.0, &other.0)
    }

    /// [`ObjectiveVector::dominates`], rejecting vectors of different length.
    pub fn try_dominates(&self, other: &ObjectiveVector) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "cannot compare vectors of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.dominates(other))
    }

    /// `self >= other` componentwise (dominates or equal).
    pub fn covers(&self, other: &ObjectiveVector) -> bool {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).all(|(a, b)| a >= b)
    }
}

impl From<Vec<i64>> for ObjectiveVector {
    fn from(v: Vec<i64>) -> Self {
        ObjectiveVector(v)
    }
}

impl fmt::Display for ObjectiveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

pub(crate) fn dominates_slice(a: &[i64], b: &[i64]) -> bool {
    debug_assert_eq!(a.len(), b.len());
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        strict |= x > y;
    }
    strict
}

/// A binary selection together with its cached outcome and cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Solution {
    selection: Vec<bool>,
    objectives: ObjectiveVector,
    cost: i64,
}

impl Solution {
    pub fn selection(&self) -> &[bool] {
        &self.selection
    }

    pub fn objectives(&self) -> &ObjectiveVector {
        &self.objectives
    }

    pub fn cost(&self) -> i64 {
        self.cost
    }

    pub fn is_selected(&self, item: usize) -> bool {
        self.selection[item]
    }

    pub fn selected_items(&self) -> impl Iterator<Item = usize> + '_ {
        self.selection.iter().enumerate().filter_map(|(j, &x)| x.then_some(j))
    }

    pub fn num_selected(&self) -> usize {
        self.selection.iter().filter(|&&x| x).count()
    }

    /// `'1'`/`'0'` per item, item 1 first.
    pub fn bitstring(&self) -> String {
        bitstring(&self.selection)
    }
}

pub fn bitstring(selection: &[bool]) -> String {
    selection.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::invalid(format!("invalid selection character {other:?}"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn select(inst: &Instance, items: &[usize]) -> Vec<bool> {
        let mut s = vec![false; inst.num_items()];
        for &j in items {
            s[j - 1] = true;
        }
        s
    }

    #[test]
    fn evaluate_t1_examples() {
        let t1 = t1();
        let a = t1.evaluate(&select(&t1, &[1, 2])).unwrap();
        assert_eq!(a.objectives().values(), &[8, 6]);
        assert_eq!(a.cost(), 5);
        let b = t1.evaluate(&select(&t1, &[1, 3])).unwrap();
        assert_eq!(b.objectives().values(), &[4, 9]);
        assert_eq!(b.cost(), 6);
        let e = t1.evaluate(&[false; 4]).unwrap();
        assert_eq!(e.objectives().values(), &[0, 0]);
        assert_eq!(e.cost(), 0);
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let err = t1().evaluate(&[true, false]).unwrap_err();
        assert_eq!(err.kind(), "invalid-argument");
    }

    #[test]
    fn feasibility_boundaries() {
        let t1 = t1();
        assert!(t1.is_feasible(&t1.evaluate(&select(&t1, &[1, 3])).unwrap()));
        assert!(!t1.is_feasible(&t1.evaluate(&select(&t1, &[2, 3])).unwrap()));
        assert!(t1.is_feasible(&t1.empty_solution()));
    }

    #[test]
    fn dominance_examples() {
        let v = |a: i64, b: i64| ObjectiveVector(vec![a, b]);
        assert!(v(3, 4).dominates(&v(2, 4)));
        assert!(!v(3, 4).dominates(&v(3, 4)));
        assert!(!v(8, 6).dominates(&v(4, 9)));
        assert!(!v(4, 9).dominates(&v(8, 6)));
        assert!(ObjectiveVector(vec![1]).try_dominates(&v(0, 0)).is_err());
    }

    #[test]
    fn maximal_fill_leaves_saturated_solution_unchanged() {
        let t1 = t1();
        let x = t1.evaluate(&select(&t1, &[1, 2])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(t1.maximal_fill(x.clone(), &mut rng), x);
    }

    #[test]
    fn maximal_fill_forced_order() {
        let t1 = t1();
        // Draw item 2 first, then item 1.
        let order = [1usize, 0];
        let mut step = 0;
        let filled = t1.maximal_fill_with(t1.empty_solution(), |fitting| {
            let want = order[step];
            step += 1;
            fitting.iter().position(|&j| j == want).unwrap()
        });
        assert_eq!(filled.selection(), &select(&t1, &[1, 2])[..]);
        assert_eq!(filled.objectives().values(), &[8, 6]);
        assert_eq!(step, 2);
    }

    #[test]
    fn maximal_fill_single_item_of_full_capacity() {
        let inst = Instance::new("one", 7, vec![7], vec![vec![3], vec![2]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = inst.maximal_fill(inst.empty_solution(), &mut rng);
        assert_eq!(x.selection(), &[true]);
    }

    #[test]
    fn instance_validation() {
        assert!(Instance::new("bad", 5, vec![1, 2], vec![vec![1]]).is_err());
        assert!(Instance::new("neg", 5, vec![-1], vec![vec![1]]).is_err());
        let loose = Instance::new("loose", 100, vec![1, 2], vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(loose.warnings().len(), 1);
        let big = Instance::new("big", 1, vec![5, 1], vec![vec![1, 1], vec![1, 1]]).unwrap();
        assert!(big.warnings()[0].contains("item 1"));
    }

    #[test]
    fn bitstring_round_trip() {
        let t1 = t1();
        let x = t1.evaluate(&select(&t1, &[2, 4])).unwrap();
        assert_eq!(x.bitstring(), "0101");
        assert_eq!(parse_bitstring("0101").unwrap(), x.selection());
        assert!(parse_bitstring("01x").is_err());
    }
}
