//! Speed measures: a piecewise-constant density plus finitely many atoms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// `m(dx) = rho(x) dx + sum_j w_j delta_{x_j}` on `[0, 1]`, with `rho` constant on
/// each `[breaks[j], breaks[j+1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedMeasure {
    breaks: Vec<f64>,
    density: Vec<f64>,
    atoms: Vec<Atom>,
}

impl SpeedMeasure {
    pub fn lebesgue() -> Self {
        Self {
            breaks: vec![0.0, 1.0],
            density: vec![1.0],
            atoms: Vec::new(),
        }
    }

    /// `breaks` runs from 0 to 1 strictly increasing; `density[j]` applies on
    /// `[breaks[j], breaks[j+1])`. Atoms are sorted by location.
    pub fn new(breaks: Vec<f64>, density: Vec<f64>, mut atoms: Vec<Atom>) -> Result<Self> {
        if breaks.len() < 2 || breaks.len() != density.len() + 1 {
            return Err(Error::Validation(format!(
                "density needs n + 1 breakpoints for n values (got {} and {})",
                breaks.len(),
                density.len()
            )));
        }
        if breaks[0] != 0.0 || breaks[breaks.len() - 1] != 1.0 {
            return Err(Error::Validation(
                "density breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation(
                "density breakpoints must be strictly increasing".into(),
            ));
        }
        if density.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::Validation(
                "density values must be finite and nonnegative".into(),
            ));
        }
        for a in &atoms {
            if !(0.0..=1.0).contains(&a.location) {
                return Err(Error::Validation(format!(
                    "atom at {} outside [0, 1]",
                    a.location
                )));
            }
            if !(a.weight > 0.0) || !a.weight.is_finite() {
                return Err(Error::Validation(format!(
                    "atom at {} has non-positive weight {}",
                    a.location, a.weight
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        let m = Self {
            breaks,
            density,
            atoms,
        };
        if !(m.total() > 0.0) {
            return Err(Error::Validation("speed measure has zero total mass".into()));
        }
        Ok(m)
    }

    pub fn with_atoms(mut self, atoms: Vec<Atom>) -> Result<Self> {
        self.atoms.extend(atoms);
        Self::new(self.breaks, self.density, self.atoms)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn density_values(&self) -> &[f64] {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Lebesgue measure with no atoms.
    pub fn is_lebesgue(&self) -> bool {
        self.atoms.is_empty() && self.density.iter().all(|&d| d == 1.0)
    }

    pub fn total(&self) -> f64 {
        self.interval_unchecked(0.0, 1.0, true)
    }

    /// `m([a, b))`, or `m([a, b])` when `include_right` is set.
    pub fn measure_interval(&self, a: f64, b: f64, include_right: bool) -> Result<f64> {
        if !(0.0 <= a && a <= b && b <= 1.0) {
            return Err(Error::Domain(format!(
                "interval [{a}, {b}] is not an ordered subinterval of [0, 1]"
            )));
        }
        Ok(self.interval_unchecked(a, b, include_right))
    }

    pub(crate) fn interval_unchecked(&self, a: f64, b: f64, include_right: bool) -> f64 {
        self.integrate(a, b, include_right, |l, r| r - l, |_| 1.0)
    }

    /// `int_{[a,b)} f dm` (or over `[a, b]`), given the Lebesgue integral of `f`
    /// over subintervals and pointwise values for the atoms.
    pub fn integrate<L, P>(&self, a: f64, b: f64, include_right: bool, lebesgue: L, point: P) -> f64
    where
        L: Fn(f64, f64) -> f64,
        P: Fn(f64) -> f64,
    {
        let mut acc = 0.0;
        if b > a {
            // first density piece whose right end lies beyond a
            let start = self.breaks.partition_point(|&x| x <= a).saturating_sub(1);
            for j in start..self.density.len() {
                let (l, r) = (self.breaks[j], self.breaks[j + 1]);
                if l >= b {
                    break;
                }
                let lo = l.max(a);
                let hi = r.min(b);
                if hi > lo && self.density[j] != 0.0 {
                    acc += self.density[j] * lebesgue(lo, hi);
                }
            }
        }
        let first = self.atoms.partition_point(|at| at.location < a);
        for at in &self.atoms[first..] {
            let inside = at.location < b || (include_right && at.location == b);
            if !inside {
                break;
            }
            acc += at.weight * point(at.location);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_level() -> SpeedMeasure {
        SpeedMeasure::new(vec![0.0, 0.5, 1.0], vec![2.0, 0.5], vec![]).unwrap()
    }

    #[test]
    fn interval_masses() {
        let leb = SpeedMeasure::lebesgue();
        assert!((leb.measure_interval(0.2, 0.7, false).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(two_level().measure_interval(0.0, 1.0, true).unwrap(), 1.25);
        let atom = leb
            .clone()
            .with_atoms(vec![Atom { location: 0.5, weight: 0.3 }])
            .unwrap();
        assert!((atom.measure_interval(0.4, 0.6, false).unwrap() - 0.5).abs() < 1e-15);
        // half-open cells exclude an atom at the right end
        assert!((atom.measure_interval(0.4, 0.5, false).unwrap() - 0.1).abs() < 1e-15);
        assert!((atom.measure_interval(0.4, 0.5, true).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(leb.measure_interval(0.7, 0.2, false), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SpeedMeasure::new(vec![0.0, 1.0], vec![-1.0], vec![]).is_err());
        assert!(SpeedMeasure::new(vec![0.0, 0.5], vec![1.0], vec![]).is_err());
        assert!(SpeedMeasure::new(vec![0.0, 1.0], vec![0.0], vec![]).is_err());
        assert!(SpeedMeasure::lebesgue()
            .with_atoms(vec![Atom { location: 0.5, weight: 0.0 }])
            .is_err());
    }

    proptest! {
        #[test]
        fn additive(a in 0.0f64..=1.0, b in 0.0f64..=1.0, c in 0.0f64..=1.0, atom in 0.0f64..=1.0) {
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            let m = SpeedMeasure::new(vec![0.0, 0.3, 0.8, 1.0], vec![1.0, 3.0, 0.25], vec![])
                .unwrap()
                .with_atoms(vec![Atom { location: atom, weight: 0.7 }])
                .unwrap();
            let whole = m.measure_interval(v[0], v[2], false).unwrap();
            let parts = m.measure_interval(v[0], v[1], false).unwrap()
                + m.measure_interval(v[1], v[2], false).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-14);
            prop_assert!(whole >= 0.0);
        }
    }
}
