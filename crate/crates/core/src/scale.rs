//! Scale functions on `[0, 1]`.
//!
//! Every representation is certified strictly increasing and continuous and
//! normalised so that `s(0) = 0`. Between consecutive knots (see
//! [`ScaleFunction::knots_between`]) a scale function is affine, which is what
//! lets cell integrals and energies be computed in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// Deepest fat-Cantor construction we evaluate. Classical endpoints stay
/// exactly representable in `f64` well past this.
pub const MAX_FAT_CANTOR_DEPTH: u32 = 24;

/// Sorted `(x, s(x))` knots of a piecewise-linear scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knots {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Knots {
    /// Validates and normalises a knot table: `x` must run from 0 to 1 and both
    /// coordinates must be strictly increasing. The table is shifted so `s(0) = 0`.
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation(
                "a piecewise-linear scale needs at least two knots".into(),
            ));
        }
        let (x0, y0) = points[0];
        let (x1, _) = points[points.len() - 1];
        if x0 != 0.0 || x1 != 1.0 {
            return Err(Error::Validation(format!(
                "scale knots must start at x = 0 and end at x = 1 (got {x0} .. {x1})"
            )));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1].0 > w[0].0) {
                return Err(Error::Validation(format!(
                    "scale knot abscissae not strictly increasing at index {}",
                    i + 1
                )));
            }
            if !(w[1].1 > w[0].1) {
                return Err(Error::Validation(format!(
                    "scale values not strictly increasing at index {}",
                    i + 1
                )));
            }
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::Validation("non-finite scale knot".into()));
        }
        Ok(Self {
            xs: points.iter().map(|p| p.0).collect(),
            ys: points.iter().map(|p| p.1 - y0).collect(),
        })
    }

    /// Uniformly spaced table `s(i / (len - 1)) = values[i]`.
    pub fn tabulated(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Validation(
                "a tabulated scale needs at least two values".into(),
            ));
        }
        let last = (values.len() - 1) as f64;
        let points: Vec<_> = values
            .iter()
            .enumerate()
            .map(|(i, &y)| (if i == values.len() - 1 { 1.0 } else { i as f64 / last }, y))
            .collect();
        Self::new(&points)
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    fn eval(&self, x: f64) -> f64 {
        // index of the first knot strictly greater than x
        let hi = self.xs.partition_point(|&k| k <= x);
        if hi == 0 {
            return self.ys[0];
        }
        if hi >= self.xs.len() {
            return self.ys[self.ys.len() - 1];
        }
        let lo = hi - 1;
        let (xa, xb) = (self.xs[lo], self.xs[hi]);
        let (ya, yb) = (self.ys[lo], self.ys[hi]);
        ya + (yb - ya) * (x - xa) / (xb - xa)
    }

    fn between(&self, a: f64, b: f64, out: &mut Vec<(f64, f64)>) {
        out.push((a, self.eval(a)));
        let start = self.xs.partition_point(|&k| k <= a);
        for i in start..self.xs.len() {
            if self.xs[i] >= b {
                break;
            }
            out.push((self.xs[i], self.ys[i]));
        }
        if b > a {
            out.push((b, self.eval(b)));
        }
    }
}

/// Middle-interval removal schedule of a generalised Smith–Volterra–Cantor set.
///
/// At step `k >= 1` an open middle interval of length `first * ratio^(k-1)` is
/// removed from each of the `2^(k-1)` intervals that remain. The classical
/// schedule removes `4^-k` at step `k`, a total of `1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemovalSchedule {
    pub first: f64,
    pub ratio: f64,
}

impl Default for RemovalSchedule {
    fn default() -> Self {
        Self::CLASSICAL
    }
}

impl RemovalSchedule {
    pub const CLASSICAL: Self = Self {
        first: 0.25,
        ratio: 0.25,
    };

    pub fn new(first: f64, ratio: f64) -> Result<Self> {
        let schedule = Self { first, ratio };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { first, ratio } = *self;
        if !(first > 0.0 && first < 1.0) {
            return Err(Error::Validation(format!(
                "first removal {first} must lie in (0, 1)"
            )));
        }
        // ratio < 1/2 keeps the removed total finite and the Cantor set fat
        if !(ratio > 0.0 && ratio < 0.5) {
            return Err(Error::Validation(format!(
                "removal ratio {ratio} must lie in (0, 1/2)"
            )));
        }
        if self.removed_total() >= 1.0 {
            return Err(Error::Validation(format!(
                "schedule removes {} >= 1; the Cantor set would be null",
                self.removed_total()
            )));
        }
        // every removal must fit strictly inside its interval
        let mut len = 1.0;
        for k in 1..=64 {
            let gap = self.gap(k);
            if gap >= len {
                return Err(Error::Validation(format!(
                    "step {k} removes {gap} from intervals of length {len}"
                )));
            }
            len = (len - gap) / 2.0;
        }
        Ok(())
    }

    /// Length removed from each remaining interval at step `k >= 1`.
    pub fn gap(&self, k: u32) -> f64 {
        self.first * self.ratio.powi(k as i32 - 1)
    }

    pub fn removed_total(&self) -> f64 {
        self.first / (1.0 - 2.0 * self.ratio)
    }

    /// Lebesgue measure of the limiting Cantor set.
    pub fn cantor_mass(&self) -> f64 {
        1.0 - self.removed_total()
    }

    /// Length of each remaining interval after `depth` steps.
    pub fn interval_length(&self, depth: u32) -> f64 {
        (1..=depth).fold(1.0, |len, k| (len - self.gap(k)) / 2.0)
    }

    /// Scale increment `Leb(J \ C)` across one depth-`depth` remaining interval `J`.
    pub fn interval_increment(&self, depth: u32) -> f64 {
        self.interval_length(depth) - self.cantor_mass() / 2f64.powi(depth as i32)
    }

    /// The `2^depth` closed intervals remaining after `depth` removal steps, left to right.
    pub fn remaining_intervals(&self, depth: u32) -> Vec<(f64, f64)> {
        let mut intervals = vec![(0.0, 1.0)];
        for k in 1..=depth {
            let gap = self.gap(k);
            let mut next = Vec::with_capacity(intervals.len() * 2);
            for &(l, r) in &intervals {
                let child = (r - l - gap) / 2.0;
                next.push((l, l + child));
                next.push((r - child, r));
            }
            intervals = next;
        }
        intervals
    }
}

/// The singular scale `s(x) = Leb([0, x] \ C)` of a fat Cantor set `C`.
///
/// `s` has derivative 1 on the removed intervals and 0 on `C`. It is evaluated
/// exactly at every endpoint of a depth-`depth` remaining interval; inside a
/// remaining interval it is filled linearly, which keeps the surrogate strictly
/// increasing and within `2^(-depth-1)` of the limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FatCantorScale {
    depth: u32,
    schedule: RemovalSchedule,
}

impl FatCantorScale {
    pub fn new(depth: u32, schedule: RemovalSchedule) -> Result<Self> {
        if depth == 0 || depth > MAX_FAT_CANTOR_DEPTH {
            return Err(Error::Validation(format!(
                "fat-Cantor depth {depth} outside 1..={MAX_FAT_CANTOR_DEPTH}"
            )));
        }
        schedule.validate()?;
        Ok(Self { depth, schedule })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn schedule(&self) -> RemovalSchedule {
        self.schedule
    }

    /// Documented sup-norm distance to the infinite construction.
    pub fn error_bound(&self) -> f64 {
        2f64.powi(-(self.depth as i32) - 1)
    }

    fn eval(&self, x: f64) -> f64 {
        let mass = self.schedule.cantor_mass();
        let (mut left, mut s_left, mut len) = (0.0, 0.0, 1.0);
        for k in 1..=self.depth {
            let gap = self.schedule.gap(k);
            let child = (len - gap) / 2.0;
            let child_ds = child - mass / 2f64.powi(k as i32);
            let gap_start = left + child;
            if x <= gap_start {
                len = child;
                continue;
            }
            let gap_end = gap_start + gap;
            if x < gap_end {
                return s_left + child_ds + (x - gap_start);
            }
            s_left += child_ds + gap;
            left = gap_end;
            len = child;
        }
        let ds = len - mass / 2f64.powi(self.depth as i32);
        if x == left {
            s_left
        } else if x == left + len {
            s_left + ds
        } else {
            s_left + ds * (x - left) / len
        }
    }

    /// Pushes the knots strictly inside `(a, b)` in increasing order.
    #[allow(clippy::too_many_arguments)]
    fn interior_knots(
        &self,
        a: f64,
        b: f64,
        level: u32,
        left: f64,
        s_left: f64,
        len: f64,
        out: &mut Vec<(f64, f64)>,
    ) {
        let right = left + len;
        if right <= a || left >= b {
            return;
        }
        if level == self.depth {
            return;
        }
        let k = level + 1;
        let gap = self.schedule.gap(k);
        let child = (len - gap) / 2.0;
        let child_ds = child - self.schedule.cantor_mass() / 2f64.powi(k as i32);
        let gap_start = left + child;
        let gap_end = gap_start + gap;
        self.interior_knots(a, b, k, left, s_left, child, out);
        if gap_start > a && gap_start < b {
            out.push((gap_start, s_left + child_ds));
        }
        if gap_end > a && gap_end < b {
            out.push((gap_end, s_left + child_ds + gap));
        }
        self.interior_knots(a, b, k, gap_end, s_left + child_ds + gap, child, out);
    }
}

/// A continuous, strictly increasing scale function on `[0, 1]` with `s(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleFunction {
    Identity,
    PiecewiseLinear(Knots),
    FatCantor(FatCantorScale),
    Tabulated(Knots),
}

impl ScaleFunction {
    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Self> {
        Knots::new(points).map(Self::PiecewiseLinear)
    }

    pub fn tabulated(values: &[f64]) -> Result<Self> {
        Knots::tabulated(values).map(Self::Tabulated)
    }

    /// Classical Smith–Volterra–Cantor scale resolved to `depth` removal steps.
    pub fn fat_cantor(depth: u32) -> Result<Self> {
        Self::fat_cantor_with(depth, RemovalSchedule::CLASSICAL)
    }

    pub fn fat_cantor_with(depth: u32, schedule: RemovalSchedule) -> Result<Self> {
        FatCantorScale::new(depth, schedule).map(Self::FatCantor)
    }

    /// `s(x)`; errors outside `[0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_unit(x, "scale argument")?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        match self {
            Self::Identity => x,
            Self::PiecewiseLinear(k) | Self::Tabulated(k) => k.eval(x),
            Self::FatCantor(fc) => fc.eval(x),
        }
    }

    /// `s(1) - s(0)`.
    pub fn total(&self) -> f64 {
        self.eval_unchecked(1.0)
    }

    /// Knots `a = x_0 < x_1 < ... < x_k = b` with their scale values such that
    /// `s` is affine on every `[x_j, x_{j+1}]`. Returns a single knot when `a == b`.
    pub fn knots_between(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        debug_assert!(a <= b);
        let mut out = Vec::new();
        match self {
            Self::Identity => {
                out.push((a, a));
                if b > a {
                    out.push((b, b));
                }
            }
            Self::PiecewiseLinear(k) | Self::Tabulated(k) => k.between(a, b, &mut out),
            Self::FatCantor(fc) => {
                out.push((a, fc.eval(a)));
                fc.interior_knots(a, b, 0, 0.0, 0.0, 1.0, &mut out);
                if b > a {
                    out.push((b, fc.eval(b)));
                }
            }
        }
        out
    }

    /// True when `s(x) = x`.
    pub fn is_identity(&self) -> bool {
        match self {
            Self::Identity => true,
            Self::PiecewiseLinear(k) | Self::Tabulated(k) => {
                k.points().all(|(x, y)| x == y)
            }
            Self::FatCantor(_) => false,
        }
    }
}
