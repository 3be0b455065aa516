//! The nondominated archive and its reference-point cone view.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ObjectiveVector, Solution};

/// Aspiration levels `r_k` of the decision maker. An inactive reference
/// point places no restriction on the cone.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub values: Vec<i64>,
    pub active: bool,
}

impl ReferencePoint {
    pub fn new(values: Vec<i64>) -> Self {
        ReferencePoint { values, active: true }
    }

    pub fn inactive(objectives: usize) -> Self {
        ReferencePoint {
            values: vec![0; objectives],
            active: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `z_k >= r_k` for every `k`, or always when inactive.
    pub fn contains(&self, z: &ObjectiveVector) -> bool {
        in_cone(z, self)
    }

    /// Chebyshev shortfall `max_k (r_k - z_k)+` and the summed shortfall.
    pub fn shortfall(&self, z: &ObjectiveVector) -> (i64, i64) {
        if !self.active {
            return (0, 0);
        }
        self.values
            .iter()
            .zip(z.values())
            .map(|(r, z)| (r - z).max(0))
            .fold((0, 0), |(max, sum), d| (max.max(d), sum + d))
    }
}

pub fn in_cone(z: &ObjectiveVector, reference: &ReferencePoint) -> bool {
    !reference.active || z.values().iter().zip(&reference.values).all(|(z, r)| z >= r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InsertOutcome {
    /// Candidate stored; `removed` members it dominated were evicted.
    Added {
        removed: usize,
    },
    Dominated,
    Duplicate,
}

impl InsertOutcome {
    pub fn is_added(self) -> bool {
        matches!(self, InsertOutcome::Added { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArchiveEntry {
    /// Unique for the lifetime of the archive, increasing with insertion.
    pub id: u64,
    pub solution: Solution,
}

/// Mutually nondominated set of solutions kept in insertion order.
///
/// Objective-space duplicates are collapsed: only the first solution reaching
/// an outcome is stored. The cone view never removes anything from the
/// global set, so changing the reference point never loses work.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParetoArchive {
    entries: Vec<ArchiveEntry>,
    reference: ReferencePoint,
    generation: u64,
    next_id: u64,
}

impl ParetoArchive {
    pub fn new(objectives: usize) -> Self {
        ParetoArchive {
            entries: Vec::new(),
            reference: ReferencePoint::inactive(objectives),
            generation: 0,
            next_id: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn reference(&self) -> &ReferencePoint {
        &self.reference
    }

    pub fn entries(&self) -> &[ArchiveEntry] {
        &self.entries
    }

    pub fn solutions(&self) -> impl Iterator<Item = &Solution> {
        self.entries.iter().map(|e| &e.solution)
    }

    pub fn get(&self, id: u64) -> Option<&ArchiveEntry> {
        self.entries
            .binary_search_by_key(&id, |e| e.id)
            .ok()
            .map(|i| &self.entries[i])
    }

    pub fn try_insert(&mut self, candidate: Solution) -> InsertOutcome {
        let z = candidate.objectives();
        for e in &self.entries {
            let m = e.solution.objectives();
            if m == z {
                return InsertOutcome::Duplicate;
            }
            if m.dominates(z) {
                return InsertOutcome::Dominated;
            }
        }
        let before = self.entries.len();
        self.entries.retain(|e| !z.dominates(e.solution.objectives()));
        let removed = before - self.entries.len();
        self.entries.push(ArchiveEntry {
            id: self.next_id,
            solution: candidate,
        });
        self.next_id += 1;
        self.generation += 1;
        InsertOutcome::Added { removed }
    }

    /// Members inside the cone of the current reference point, in insertion
    /// order.
    pub fn cone_view(&self) -> impl Iterator<Item = &ArchiveEntry> {
        self.entries
            .iter()
            .filter(move |e| self.reference.contains(e.solution.objectives()))
    }

    pub fn cone_len(&self) -> usize {
        self.cone_view().count()
    }

    pub fn set_reference(&mut self, reference: ReferencePoint) -> Result<()> {
        if reference.len() != self.reference.len() {
            return Err(Error::invalid(format!(
                "reference point has {} components, expected {}",
                reference.len(),
                self.reference.len()
            )));
        }
        self.reference = reference;
        self.generation += 1;
        Ok(())
    }

    pub fn snapshot(&self) -> ArchiveSnapshot {
        ArchiveSnapshot {
            generation: self.generation,
            reference: self.reference.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| SnapshotEntry {
                    id: e.id,
                    selection: e.solution.bitstring(),
                    objectives: e.solution.objectives().clone(),
                    cone: self.reference.contains(e.solution.objectives()),
                })
                .collect(),
        }
    }
}

/// Immutable, serializable copy of the archive at one generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchiveSnapshot {
    pub generation: u64,
    pub reference: ReferencePoint,
    pub entries: Vec<SnapshotEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub id: u64,
    pub selection: String,
    pub objectives: ObjectiveVector,
    pub cone: bool,
}

impl ArchiveSnapshot {
    pub fn cone_points(&self) -> impl Iterator<Item = &ObjectiveVector> {
        self.entries.iter().filter(|e| e.cone).map(|e| &e.objectives)
    }

    pub fn points(&self) -> impl Iterator<Item = &ObjectiveVector> {
        self.entries.iter().map(|e| &e.objectives)
    }
}
