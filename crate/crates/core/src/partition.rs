use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::RemovalSchedule;

/// How to lay out the grid points `0 = a_1 < ... < a_{n+1} = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionKind {
    Uniform { n: usize },
    Explicit { points: Vec<f64> },
    /// Every endpoint of the depth-`depth` remaining intervals of the fat Cantor set.
    SvcEndpoints {
        depth: u32,
        #[serde(default)]
        schedule: RemovalSchedule,
    },
}

/// A partition of `[0, 1]` into `n >= 2` cells. The chain lives on the left
/// endpoints `a_1, ..., a_n`; the right end `1` is not a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Partition {
    points: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Partition {
    type Error = Error;
    fn try_from(points: Vec<f64>) -> Result<Self> {
        Self::from_points(points)
    }
}

impl From<Partition> for Vec<f64> {
    fn from(p: Partition) -> Self {
        p.points
    }
}

impl Partition {
    pub fn build(kind: &PartitionKind) -> Result<Self> {
        match kind {
            PartitionKind::Uniform { n } => Self::uniform(*n),
            PartitionKind::Explicit { points } => Self::from_points(points.clone()),
            PartitionKind::SvcEndpoints { depth, schedule } => Self::svc_endpoints(*depth, *schedule),
        }
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Validation(format!(
                "a partition needs at least two cells (got {n})"
            )));
        }
        let points = (0..=n)
            .map(|i| if i == n { 1.0 } else { i as f64 / n as f64 })
            .collect();
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::Validation(format!(
                "a partition needs at least two cells (got {} points)",
                points.len()
            )));
        }
        if points[0] != 0.0 || points[points.len() - 1] != 1.0 {
            return Err(Error::Validation(
                "partition must start at 0 and end at 1".into(),
            ));
        }
        if let Some(i) = points.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(format!(
                "partition points not strictly increasing at index {}",
                i + 1
            )));
        }
        Ok(Self { points })
    }

    pub fn svc_endpoints(depth: u32, schedule: RemovalSchedule) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Validation("svc_endpoints depth must be >= 1".into()));
        }
        schedule.validate()?;
        let points = schedule
            .remaining_intervals(depth)
            .into_iter()
            .flat_map(|(l, r)| [l, r])
            .collect();
        Self::from_points(points)
    }

    /// All `n + 1` points including the right end.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// The chain states `a_1..a_n`.
    pub fn states(&self) -> &[f64] {
        &self.points[..self.points.len() - 1]
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Index of the cell `[a_i, a_{i+1})` containing `x` (the last cell is closed).
    pub fn cell_of(&self, x: f64) -> usize {
        let i = self.points.partition_point(|&p| p <= x);
        i.saturating_sub(1).min(self.cells() - 1)
    }

    /// True when every point of `self` is also a point of `finer`.
    pub fn is_refined_by(&self, finer: &Partition) -> bool {
        self.points
            .iter()
            .all(|p| finer.points.binary_search_by(|q| q.total_cmp(p)).is_ok())
    }
}
