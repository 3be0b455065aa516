//! The M metric: fraction of the cone's efficient outcomes that an
//! approximation has identified, and its aggregation over runs.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::archive::ReferencePoint;
use crate::error::{Error, Result};
use crate::exact::ExactFront;
use crate::model::ObjectiveVector;

/// `|approx ∩ P_R| / |P_R|` where `P_R` is the part of the exact front inside
/// the cone of `reference`. Membership is by objective vector. With an empty
/// `P_R` the value is 1 when the approximation has no point in the cone
/// either, and 0 otherwise.
pub fn m_metric<'a, I>(approx: I, front: &ExactFront, reference: &ReferencePoint) -> f64
where
    I: IntoIterator<Item = &'a ObjectiveVector>,
{
    let target: HashSet<&ObjectiveVector> = front.objectives().filter(|z| reference.contains(z)).collect();
    let approx_cone: HashSet<&ObjectiveVector> = approx.into_iter().filter(|z| reference.contains(z)).collect();
    if target.is_empty() {
        return if approx_cone.is_empty() { 1.0 } else { 0.0 };
    }
    let hits = approx_cone.iter().filter(|z| target.contains(*z)).count();
    hits as f64 / target.len() as f64
}

/// M over the checkpoints of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCurve {
    pub run_id: String,
    pub reference: ReferencePoint,
    /// `(evaluations, M)`, evaluations strictly increasing.
    pub checkpoints: Vec<(u64, f64)>,
}

impl MCurve {
    pub fn new(run_id: impl Into<String>, reference: ReferencePoint) -> Self {
        MCurve {
            run_id: run_id.into(),
            reference,
            checkpoints: Vec::new(),
        }
    }

    pub fn push(&mut self, evaluations: u64, m: f64) -> Result<()> {
        if let Some(&(last, _)) = self.checkpoints.last() {
            if evaluations <= last {
                return Err(Error::invalid(format!(
                    "checkpoint {evaluations} does not follow {last}"
                )));
            }
        }
        self.checkpoints.push((evaluations, m));
        Ok(())
    }

    pub fn final_value(&self) -> Option<f64> {
        self.checkpoints.last().map(|&(_, m)| m)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.checkpoints.windows(2).all(|w| w[1].1 >= w[0].1)
    }

    /// `evaluations,M` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("evaluations,M\n");
        for (e, m) in &self.checkpoints {
            let _ = writeln!(out, "{e},{m:.6}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatePoint {
    pub evaluations: u64,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub stddev: f64,
    pub n: usize,
}

fn check_grid(curves: &[MCurve]) -> Result<()> {
    let first = curves.first().ok_or_else(|| Error::invalid("no curves to aggregate"))?;
    for c in &curves[1..] {
        let same = c.checkpoints.len() == first.checkpoints.len()
            && c.checkpoints.iter().zip(&first.checkpoints).all(|(a, b)| a.0 == b.0);
        if !same {
            return Err(Error::invalid(format!(
                "curve {} does not share the checkpoint grid of {}",
                c.run_id, first.run_id
            )));
        }
    }
    Ok(())
}

/// Pointwise arithmetic mean of curves sharing one checkpoint grid.
pub fn mean_curve(curves: &[MCurve]) -> Result<MCurve> {
    let agg = aggregate(curves)?;
    Ok(MCurve {
        run_id: "mean".to_string(),
        reference: curves[0].reference.clone(),
        checkpoints: agg.iter().map(|p| (p.evaluations, p.mean)).collect(),
    })
}

pub fn aggregate(curves: &[MCurve]) -> Result<Vec<AggregatePoint>> {
    check_grid(curves)?;
    let n = curves.len();
    Ok((0..curves[0].checkpoints.len())
        .map(|i| {
            let values: Vec<f64> = curves.iter().map(|c| c.checkpoints[i].1).collect();
            let mean = values.iter().sum::<f64>() / n as f64;
            let stddev = if n > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            AggregatePoint {
                evaluations: curves[0].checkpoints[i].0,
                mean,
                stddev,
                n,
            }
        })
        .collect())
}

/// `evaluations,meanM,stddev,n` with a header line.
pub fn aggregate_csv(points: &[AggregatePoint]) -> String {
    let mut out = String::from("evaluations,meanM,stddev,n\n");
    for p in points {
        let _ = writeln!(out, "{},{:.6},{:.6},{}", p.evaluations, p.mean, p.stddev, p.n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::enumerate_front;
    use crate::fixtures::t1;

    fn v(a: i64, b: i64) -> ObjectiveVector {
        ObjectiveVector(vec![a, b])
    }

    #[test]
    fn m_metric_examples() {
        let front = enumerate_front(&t1()).unwrap();
        let r = ReferencePoint::new(vec![4, 6]);
        assert_eq!(m_metric(&[v(8, 6)], &front, &r), 0.5);
        assert_eq!(m_metric(&[v(8, 6), v(4, 9)], &front, &r), 1.0);
        assert_eq!(m_metric(&[v(8, 6), v(4, 9)], &front, &ReferencePoint::inactive(2)), 1.0);
        let ambitious = ReferencePoint::new(vec![5, 7]);
        assert_eq!(m_metric(&[v(8, 6)], &front, &ambitious), 1.0);
        assert_eq!(m_metric(&[v(9, 9)], &front, &ambitious), 0.0);
    }

    #[test]
    fn m_ignores_outside_and_duplicates() {
        let front = enumerate_front(&t1()).unwrap();
        let r = ReferencePoint::new(vec![5, 0]);
        assert_eq!(m_metric(&[v(8, 6), v(8, 6), v(4, 9), v(1, 1)], &front, &r), 1.0);
    }

    fn curve(id: &str, pts: &[(u64, f64)]) -> MCurve {
        MCurve {
            run_id: id.into(),
            reference: ReferencePoint::inactive(2),
            checkpoints: pts.to_vec(),
        }
    }

    #[test]
    fn mean_of_curves() {
        let a = curve("a", &[(0, 0.0), (1000, 1.0)]);
        assert_eq!(mean_curve(&[a.clone(), a.clone()]).unwrap().checkpoints, a.checkpoints);
        let b = curve("b", &[(0, 1.0), (1000, 1.0)]);
        let m = mean_curve(&[a.clone(), b]).unwrap();
        assert_eq!(m.checkpoints, vec![(0, 0.5), (1000, 1.0)]);
        let c = curve("c", &[(0, 1.0), (999, 1.0)]);
        assert!(mean_curve(&[a, c]).is_err());
        assert!(mean_curve(&[]).is_err());
    }

    #[test]
    fn csv_formats() {
        let a = curve("a", &[(0, 0.5), (1000, 1.0)]);
        assert_eq!(a.to_csv(), "evaluations,M\n0,0.500000\n1000,1.000000\n");
        let agg = aggregate(&[a.clone(), curve("b", &[(0, 1.0), (1000, 1.0)])]).unwrap();
        let text = aggregate_csv(&agg);
        assert!(text.starts_with("evaluations,meanM,stddev,n\n0,0.750000,0.353553,2\n"));
    }

    #[test]
    fn curve_push_requires_increasing_evaluations() {
        let mut c = MCurve::new("x", ReferencePoint::inactive(2));
        c.push(0, 0.0).unwrap();
        assert!(c.push(0, 0.1).is_err());
        c.push(10, 0.2).unwrap();
        assert!(c.is_non_decreasing());
    }
}
