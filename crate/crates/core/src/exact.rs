//! Exact Pareto fronts: exhaustive enumeration for small instances and a
//! biobjective dynamic program for desk-scale ones.
//!
//! Both methods return, for every efficient outcome, the lexicographically
//! smallest selection reaching it (item 1 compared first, unselected before
//! selected), so their outputs are directly comparable.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{parse_bitstring, Instance, ObjectiveVector, Solution};

/// Largest instance [`enumerate_front`] accepts.
pub const MAX_ENUMERATION_ITEMS: usize = 25;

/// Default cap on live dynamic-programming states.
pub const DEFAULT_STATE_CAP: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontMethod {
    Enumeration,
    Dp,
    Imported,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub objectives: ObjectiveVector,
    /// Absent only for imported fronts that carry no selections.
    pub witness: Option<Solution>,
}

/// The complete set of efficient outcomes, sorted lexicographically by
/// objectives, descending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactFront {
    pub method: FrontMethod,
    pub points: Vec<FrontPoint>,
}

impl ExactFront {
    fn from_points(method: FrontMethod, mut points: Vec<FrontPoint>) -> Self {
        points.sort_by(|a, b| b.objectives.cmp(&a.objectives));
        ExactFront { method, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objectives(&self) -> impl Iterator<Item = &ObjectiveVector> {
        self.points.iter().map(|p| &p.objectives)
    }

    pub fn contains(&self, z: &ObjectiveVector) -> bool {
        self.points.binary_search_by(|p| z.cmp(&p.objectives)).is_ok()
    }

    /// Serializes to the front file format: one line per point,
    /// `z1 z2 ... zK selection`, sorted by objectives descending.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            for v in p.objectives.values() {
                let _ = write!(out, "{v} ");
            }
            match &p.witness {
                Some(w) => out.push_str(&w.bitstring()),
                None => out.push('-'),
            }
            out.push('\n');
        }
        out
    }

    /// Parses the front file format. Selections (or `-` for none) are
    /// optional; when an instance is given they are evaluated and must
    /// reproduce the listed objectives.
    pub fn from_text(text: &str, instance: Option<&Instance>) -> Result<Self> {
        let mut points = Vec::new();
        let mut width = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let known_width = instance
                .map(Instance::num_objectives)
                .filter(|&k| tokens.len() == k + 1);
            let (numbers, selection) = match tokens.last() {
                Some(&"-") => (&tokens[..tokens.len() - 1], None),
                Some(t) if known_width.is_some() => (&tokens[..tokens.len() - 1], Some(*t)),
                Some(t) if t.len() > 1 && t.chars().all(|c| c == '0' || c == '1') && tokens.len() > 1 => {
                    (&tokens[..tokens.len() - 1], Some(*t))
                }
                _ => (&tokens[..], None),
            };
            let values: Vec<i64> = numbers
                .iter()
                .map(|t| {
                    t.parse::<i64>()
                        .map_err(|_| Error::parse(line_no, format!("invalid objective value {t:?}")))
                })
                .collect::<Result<_>>()?;
            if let Some(k) = instance.map(Instance::num_objectives) {
                if values.len() != k {
                    return Err(Error::parse(
                        line_no,
                        format!("expected {k} objective values, found {}", values.len()),
                    ));
                }
            }
            if *width.get_or_insert(values.len()) != values.len() || values.is_empty() {
                return Err(Error::parse(line_no, "inconsistent number of objective values"));
            }
            let objectives = ObjectiveVector(values);
            let witness = match (selection, instance) {
                (Some(bits), Some(inst)) => {
                    let sel = parse_bitstring(bits).map_err(|e| Error::parse(line_no, e.to_string()))?;
                    let sol = inst.evaluate(&sel).map_err(|e| Error::parse(line_no, e.to_string()))?;
                    if !inst.is_feasible(&sol) || sol.objectives() != &objectives {
                        return Err(Error::parse(
                            line_no,
                            format!("selection does not evaluate to {objectives}"),
                        ));
                    }
                    Some(sol)
                }
                _ => None,
            };
            points.push(FrontPoint { objectives, witness });
        }
        for (i, a) in points.iter().enumerate() {
            if points[i + 1..]
                .iter()
                .any(|b| a.objectives.covers(&b.objectives) || b.objectives.covers(&a.objectives))
            {
                return Err(Error::invalid(format!(
                    "imported front is not mutually nondominated at {}",
                    a.objectives
                )));
            }
        }
        Ok(ExactFront::from_points(FrontMethod::Imported, points))
    }
}

/// Exhaustive enumeration of all feasible selections (Gray-code order).
pub fn enumerate_front(instance: &Instance) -> Result<ExactFront> {
    let n = instance.num_items();
    if n > MAX_ENUMERATION_ITEMS {
        return Err(Error::Resource(format!(
            "enumeration refused for {n} items (limit {MAX_ENUMERATION_ITEMS}); use the dynamic program"
        )));
    }
    let k = instance.num_objectives();
    let mut current = instance.empty_solution();
    // (objectives, lexicographically smallest selection)
    let mut front: Vec<(Vec<i64>, Vec<bool>)> = Vec::new();
    let offer = |x: &Solution, front: &mut Vec<(Vec<i64>, Vec<bool>)>| {
        if !instance.is_feasible(x) {
            return;
        }
        let z = x.objectives().values();
        let mut i = 0;
        while i < front.len() {
            let (m, sel) = &mut front[i];
            if m.as_slice() == z {
                if x.selection() < sel.as_slice() {
                    *sel = x.selection().to_vec();
                }
                return;
            }
            if crate::model::dominates_slice(m, z) {
                return;
            }
            if crate::model::dominates_slice(z, m) {
                front.swap_remove(i);
            } else {
                i += 1;
            }
        }
        front.push((z.to_vec(), x.selection().to_vec()));
    };
    offer(&current, &mut front);
    let total: u64 = 1u64 << n;
    for step in 1..total {
        let item = step.trailing_zeros() as usize;
        if current.is_selected(item) {
            instance.remove_item(&mut current, item);
        } else {
            instance.add_item(&mut current, item);
        }
        offer(&current, &mut front);
    }
    let points = front
        .into_iter()
        .map(|(z, sel)| {
            debug_assert_eq!(z.len(), k);
            FrontPoint {
                objectives: ObjectiveVector(z),
                witness: Some(instance.evaluate(&sel).expect("length matches")),
            }
        })
        .collect();
    Ok(ExactFront::from_points(FrontMethod::Enumeration, points))
}

/// One layer of the dynamic program: states sorted by cost ascending, then
/// objectives descending, then selection lexicographically ascending.
struct Layer {
    words: usize,
    cost: Vec<i64>,
    z: Vec<(i64, i64)>,
    bits: Vec<u64>,
}

impl Layer {
    fn new(words: usize) -> Self {
        Layer {
            words,
            cost: Vec::new(),
            z: Vec::new(),
            bits: Vec::new(),
        }
    }

    fn len(&self) -> usize {
        self.cost.len()
    }

    fn bits(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn push(&mut self, cost: i64, z: (i64, i64), bits: &[u64]) {
        self.cost.push(cost);
        self.z.push(z);
        self.bits.extend_from_slice(bits);
    }
}

/// Bit for item `j`, placed so that comparing words numerically matches the
/// lexicographic order on selections.
fn item_bit(j: usize) -> (usize, u64) {
    (j / 64, 1u64 << (63 - (j % 64)))
}

fn bits_to_selection(bits: &[u64], n: usize) -> Vec<bool> {
    (0..n)
        .map(|j| {
            let (w, b) = item_bit(j);
            bits[w] & b != 0
        })
        .collect()
}

/// Biobjective capacity dynamic program.
///
/// Each layer keeps the states `(cost, z1, z2)` that no other state with
/// lower-or-equal cost dominates in profit. States with identical profits
/// survive only if their selection is lexicographically smaller than every
/// cheaper survivor with the same profits, which keeps the witness choice
/// identical to [`enumerate_front`].
pub fn dp_front(instance: &Instance, state_cap: usize) -> Result<ExactFront> {
    if instance.num_objectives() != 2 {
        return Err(Error::invalid(format!(
            "the dynamic program handles 2 objectives, instance has {}",
            instance.num_objectives()
        )));
    }
    let n = instance.num_items();
    let words = n.div_ceil(64).max(1);
    let capacity = instance.capacity();

    let mut layer = Layer::new(words);
    layer.push(0, (0, 0), &vec![0u64; words]);

    let mut merged: Vec<(usize, bool)> = Vec::new();
    let mut scratch = vec![0u64; words];
    for j in 0..n {
        let cj = instance.cost(j);
        let pj = (instance.profit(0, j), instance.profit(1, j));
        let (word, bit) = item_bit(j);

        // Merge the "skip item" and "take item" streams; both are sorted.
        let take_count = layer.cost.iter().take_while(|&&c| c + cj <= capacity).count();
        merged.clear();
        let (mut a, mut b) = (0usize, 0usize);
        let key = |i: usize, take: bool| {
            let (z1, z2) = layer.z[i];
            if take {
                (layer.cost[i] + cj, -(z1 + pj.0), -(z2 + pj.1))
            } else {
                (layer.cost[i], -z1, -z2)
            }
        };
        while a < layer.len() || b < take_count {
            let pick_take = if a == layer.len() {
                true
            } else if b == take_count {
                false
            } else {
                let ka = key(a, false);
                let kb = key(b, true);
                match ka.cmp(&kb) {
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Greater => true,
                    // Same cost and profits: smaller selection first.
                    std::cmp::Ordering::Equal => {
                        scratch.copy_from_slice(layer.bits(b));
                        scratch[word] |= bit;
                        scratch.as_slice() < layer.bits(a)
                    }
                }
            };
            if pick_take {
                merged.push((b, true));
                b += 1;
            } else {
                merged.push((a, false));
                a += 1;
            }
        }

        let mut next = Layer::new(words);
        // Staircase of surviving profit pairs: z2 strictly decreasing in z1.
        let mut stairs: BTreeMap<i64, i64> = BTreeMap::new();
        // Lexicographically smallest selection kept per exact profit pair.
        let mut best_tie: HashMap<(i64, i64), usize> = HashMap::new();
        for &(i, take) in &merged {
            let (cost, z) = if take {
                (layer.cost[i] + cj, (layer.z[i].0 + pj.0, layer.z[i].1 + pj.1))
            } else {
                (layer.cost[i], layer.z[i])
            };
            scratch.copy_from_slice(layer.bits(i));
            if take {
                scratch[word] |= bit;
            }
            if let Some((&k1, &k2)) = stairs.range(z.0..).next() {
                if k2 >= z.1 {
                    if (k1, k2) != z {
                        continue;
                    }
                    let kept = best_tie[&z];
                    if scratch.as_slice() >= next.bits(kept) {
                        continue;
                    }
                }
            }
            let idx = next.len();
            next.push(cost, z, &scratch);
            best_tie.insert(z, idx);
            let dominated: Vec<i64> = stairs
                .range(..=z.0)
                .rev()
                .take_while(|(_, &v)| v <= z.1)
                .map(|(&k, _)| k)
                .collect();
            for k in dominated {
                stairs.remove(&k);
            }
            stairs.insert(z.0, z.1);
            if next.len() > state_cap {
                return Err(Error::Resource(format!(
                    "dynamic program exceeded {state_cap} states at item {}",
                    j + 1
                )));
            }
        }
        layer = next;
    }

    // Biobjective front of the final layer, lexicographically smallest
    // selection per point.
    let mut order: Vec<usize> = (0..layer.len()).collect();
    order.sort_by(|&a, &b| {
        let (za, zb) = (layer.z[a], layer.z[b]);
        zb.cmp(&za).then_with(|| layer.bits(a).cmp(layer.bits(b)))
    });
    let mut points = Vec::new();
    let mut best_z2 = i64::MIN;
    for i in order {
        let (z1, z2) = layer.z[i];
        if z2 > best_z2 {
            best_z2 = z2;
            let sel = bits_to_selection(layer.bits(i), n);
            let witness = instance.evaluate(&sel).expect("length matches");
            debug_assert_eq!(witness.objectives().values(), &[z1, z2]);
            points.push(FrontPoint {
                objectives: ObjectiveVector(vec![z1, z2]),
                witness: Some(witness),
            });
        }
    }
    Ok(ExactFront::from_points(FrontMethod::Dp, points))
}

/// Exact front by whichever method applies: the dynamic program for two
/// objectives, enumeration otherwise.
pub fn exact_front(instance: &Instance) -> Result<ExactFront> {
    if instance.num_objectives() == 2 {
        dp_front(instance, DEFAULT_STATE_CAP)
    } else {
        enumerate_front(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_instance, t1};

    fn pts(f: &ExactFront) -> Vec<Vec<i64>> {
        f.objectives().map(|z| z.values().to_vec()).collect()
    }

    #[test]
    fn t1_front_by_both_methods() {
        let e = enumerate_front(&t1()).unwrap();
        assert_eq!(pts(&e), vec![vec![8, 6], vec![4, 9]]);
        let d = dp_front(&t1(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(e.points, d.points);
        assert_eq!(d.points[0].witness.as_ref().unwrap().bitstring(), "1100");
        assert_eq!(d.points[1].witness.as_ref().unwrap().bitstring(), "1010");
    }

    #[test]
    fn zero_capacity() {
        let inst = Instance::new("z", 0, vec![1, 2], vec![vec![5, 5], vec![1, 1]]).unwrap();
        assert_eq!(pts(&enumerate_front(&inst).unwrap()), vec![vec![0, 0]]);
        assert_eq!(pts(&dp_front(&inst, 100).unwrap()), vec![vec![0, 0]]);
    }

    #[test]
    fn single_fitting_item() {
        let inst = Instance::new("one", 3, vec![3], vec![vec![2], vec![7]]).unwrap();
        assert_eq!(pts(&enumerate_front(&inst).unwrap()), vec![vec![2, 7]]);
    }

    #[test]
    fn empty_instance() {
        let inst = Instance::new("empty", 5, vec![], vec![vec![], vec![]]).unwrap();
        assert_eq!(pts(&enumerate_front(&inst).unwrap()), vec![vec![0, 0]]);
        assert_eq!(pts(&dp_front(&inst, 10).unwrap()), vec![vec![0, 0]]);
    }

    #[test]
    fn equal_objectives_collapse_to_scalar_optimum() {
        let p = vec![6, 5, 4, 3];
        let inst = Instance::new("eq", 7, vec![4, 3, 2, 5], vec![p.clone(), p]).unwrap();
        let f = dp_front(&inst, DEFAULT_STATE_CAP).unwrap();
        // best scalar value under capacity 7: items 1+2 (11) or 2+3 (9) or 1+3 (10)
        assert_eq!(pts(&f), vec![vec![11, 11]]);
    }

    #[test]
    fn enumeration_guard() {
        let inst = random_instance(26, 2, 1);
        assert_eq!(enumerate_front(&inst).unwrap_err().kind(), "resource");
    }

    #[test]
    fn dp_state_cap() {
        let inst = random_instance(30, 2, 5);
        assert_eq!(dp_front(&inst, 10).unwrap_err().kind(), "resource");
    }

    #[test]
    fn dp_rejects_three_objectives() {
        let inst = random_instance(5, 3, 5);
        assert!(dp_front(&inst, 100).is_err());
        assert!(exact_front(&inst).is_ok());
    }

    #[test]
    fn witnesses_agree_with_enumeration() {
        for seed in 0..30 {
            let inst = random_instance(4 + (seed as usize % 9), 2, seed);
            let e = enumerate_front(&inst).unwrap();
            let d = dp_front(&inst, DEFAULT_STATE_CAP).unwrap();
            assert_eq!(e.points, d.points, "seed {seed}");
        }
    }

    #[test]
    fn front_file_round_trip() {
        let inst = t1();
        let f = enumerate_front(&inst).unwrap();
        let text = f.to_text();
        assert_eq!(text, "8 6 1100\n4 9 1010\n");
        let back = ExactFront::from_text(&text, Some(&inst)).unwrap();
        assert_eq!(back.points, f.points);
        assert_eq!(back.method, FrontMethod::Imported);

        let bare = ExactFront::from_text("# published\n4 9\n8 6\n", None).unwrap();
        assert_eq!(pts(&bare), vec![vec![8, 6], vec![4, 9]]);
        assert!(bare.points[0].witness.is_none());
    }

    #[test]
    fn front_file_errors() {
        let inst = t1();
        let err = ExactFront::from_text("8 6 1100\n4 9 1011\n", Some(&inst)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = ExactFront::from_text("8 x\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(ExactFront::from_text("8 6\n4 9\n5 5\n4 4\n", None).is_err());
    }
}
