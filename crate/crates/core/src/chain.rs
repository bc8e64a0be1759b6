//! The trace chain of a diffusion on a partition.
//!
//! Neighbouring states `a_i, a_{i+1}` are joined by the conductance
//! `c_i = 1 / (2 (s(a_{i+1}) - s(a_i)))`, state `a_i` carries the cell mass
//! `m([a_i, a_{i+1}))` and the last state carries `m([a_n, 1])`, so the masses
//! always sum to `m([0, 1])`. The chain holds at `x` for an exponential time
//! of rate `sum_z C(x, z) / m(x)` and then jumps to a neighbour with
//! probability proportional to the conductance.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::linalg::TridiagonalOperator;
use crate::partition::Partition;
use crate::scale::ScaleFunction;
use crate::speed::SpeedMeasure;

/// Values of a function on the chain states, aligned with [`ChainSpec::grid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridFunction(pub Vec<f64>);

impl GridFunction {
    pub fn constant(n: usize, c: f64) -> Self {
        Self(vec![c; n])
    }

    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut v = vec![0.0; n];
        for &i in set {
            v[i] = 1.0;
        }
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| c * v).collect())
    }
}

impl From<Vec<f64>> for GridFunction {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Index<usize> for GridFunction {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// An immutable trace chain on `n` states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    /// All partition points `a_1, ..., a_{n+1}`; the states are the first `n`.
    pub partition: Partition,
    /// `s(a_1), ..., s(a_{n+1})`.
    pub scale_values: Vec<f64>,
    pub masses: Vec<f64>,
    /// `c_i` between states `i` and `i + 1` (length `n - 1`).
    pub conductances: Vec<f64>,
    pub rates: Vec<f64>,
    /// `[left, right]` jump probabilities per state.
    pub jump_probs: Vec<[f64; 2]>,
}

impl ChainSpec {
    /// Builds the trace chain; every cell must carry positive mass.
    pub fn build(partition: &Partition, scale: &ScaleFunction, speed: &SpeedMeasure) -> Result<Self> {
        let pts = partition.points();
        let n = partition.cells();
        let scale_values: Vec<f64> = pts.iter().map(|&x| scale.eval_unchecked(x)).collect();

        let mut masses = Vec::with_capacity(n);
        for i in 0..n {
            let last = i + 1 == n;
            let mass = speed.interval_unchecked(pts[i], pts[i + 1], last);
            if !(mass > 0.0) {
                return Err(Error::DegenerateMeasure {
                    cell: i,
                    left: pts[i],
                    right: pts[i + 1],
                });
            }
            masses.push(mass);
        }

        let mut conductances = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let ds = scale_values[i + 1] - scale_values[i];
            if !(ds > 0.0) {
                return Err(Error::DegenerateScale {
                    cell: i,
                    left: pts[i],
                    right: pts[i + 1],
                });
            }
            conductances.push(0.5 / ds);
        }

        let mut rates = Vec::with_capacity(n);
        let mut jump_probs = Vec::with_capacity(n);
        for i in 0..n {
            let left = if i > 0 { conductances[i - 1] } else { 0.0 };
            let right = if i + 1 < n { conductances[i] } else { 0.0 };
            let total = left + right;
            rates.push(total / masses[i]);
            jump_probs.push([left / total, right / total]);
        }

        Ok(Self {
            partition: partition.clone(),
            scale_values,
            masses,
            conductances,
            rates,
            jump_probs,
        })
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        self.partition.states()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Sum of conductances out of state `i`.
    pub fn conductance_out(&self, i: usize) -> f64 {
        let left = if i > 0 { self.conductances[i - 1] } else { 0.0 };
        let right = self.conductances.get(i).copied().unwrap_or(0.0);
        left + right
    }

    /// `C(i, j)` for arbitrary states; zero unless neighbours.
    pub fn conductance(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            1 => self.conductances[i.min(j)],
            _ => 0.0,
        }
    }

    fn check_len(&self, f: &GridFunction) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// `E^n(phi, phi) = sum_i c_i (phi_{i+1} - phi_i)^2`.
    pub fn dirichlet_energy(&self, phi: &GridFunction) -> Result<f64> {
        self.check_len(phi)?;
        Ok(self.energy_unchecked(phi.values(), phi.values()))
    }

    /// The bilinear form `E^n(phi, psi)`.
    pub fn dirichlet_form(&self, phi: &GridFunction, psi: &GridFunction) -> Result<f64> {
        self.check_len(phi)?;
        self.check_len(psi)?;
        Ok(self.energy_unchecked(phi.values(), psi.values()))
    }

    pub(crate) fn energy_unchecked(&self, phi: &[f64], psi: &[f64]) -> f64 {
        self.conductances
            .iter()
            .enumerate()
            .map(|(i, c)| c * (phi[i + 1] - phi[i]) * (psi[i + 1] - psi[i]))
            .sum()
    }

    /// `<phi, psi>` in `L^2(m_n)`.
    pub fn inner(&self, phi: &GridFunction, psi: &GridFunction) -> Result<f64> {
        self.check_len(phi)?;
        self.check_len(psi)?;
        Ok(self.inner_unchecked(phi.values(), psi.values()))
    }

    pub(crate) fn inner_unchecked(&self, phi: &[f64], psi: &[f64]) -> f64 {
        self.masses
            .iter()
            .zip(phi.iter().zip(psi))
            .map(|(m, (a, b))| m * a * b)
            .sum()
    }

    /// `E^n_1(phi, phi) = E^n(phi, phi) + |phi|^2_{m_n}`.
    pub fn e1_norm_sq(&self, phi: &GridFunction) -> Result<f64> {
        Ok(self.dirichlet_energy(phi)? + self.inner(phi, phi)?)
    }

    /// Harmonic extension of grid values: affine in `s` between neighbouring
    /// states, and constant `phi(a_n)` on `[a_n, 1]`.
    pub fn harmonic_extension(&self, scale: &ScaleFunction, phi: &GridFunction, x: f64) -> Result<f64> {
        self.check_len(phi)?;
        check_unit(x, "extension point")?;
        let n = self.len();
        let i = self.partition.cell_of(x);
        if i + 1 >= n {
            return Ok(phi[n - 1]);
        }
        let (s0, s1) = (self.scale_values[i], self.scale_values[i + 1]);
        let sx = scale.eval_unchecked(x);
        Ok(phi[i] + (phi[i + 1] - phi[i]) / (s1 - s0) * (sx - s0))
    }

    /// Tridiagonal generator `L` with `L(i, i +- 1) = C / m_i` and zero row sums.
    pub fn generator(&self) -> TridiagonalOperator {
        let n = self.len();
        let mut sub = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for i in 0..n {
            if i > 0 {
                sub[i] = self.conductances[i - 1] / self.masses[i];
            }
            if i + 1 < n {
                sup[i] = self.conductances[i] / self.masses[i];
            }
        }
        TridiagonalOperator::generator(sub, sup, self.masses.clone())
    }
}

/// Probability that the diffusion started at `x` reaches `b` before `a`.
pub fn hitting_prob_right(scale: &ScaleFunction, a: f64, b: f64, x: f64) -> Result<f64> {
    check_unit(a, "a")?;
    check_unit(b, "b")?;
    if !(a < x && x < b) {
        return Err(Error::Domain(format!("need a < x < b (got {a}, {x}, {b})")));
    }
    let (sa, sb, sx) = (
        scale.eval_unchecked(a),
        scale.eval_unchecked(b),
        scale.eval_unchecked(x),
    );
    Ok((sx - sa) / (sb - sa))
}
