//! Deterministic solvers on the tridiagonal generator: resolvent, semigroup by
//! uniformization, and the 1-capacity with its equilibrium potential.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, GridFunction};
use crate::error::{Error, Result};

/// Default Poisson-tail tolerance for [`TridiagonalOperator::semigroup_apply`].
pub const DEFAULT_SEMIGROUP_TOL: f64 = 1e-10;

/// A tridiagonal operator symmetric with respect to `weights`:
/// `weights[i] * sup[i] == weights[i + 1] * sub[i + 1]`.
///
/// Row `i` reads `sub[i] f[i-1] + diag[i] f[i] + sup[i] f[i+1]`; `sub[0]` and
/// `sup[n-1]` are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalOperator {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TridiagonalOperator {
    /// A conservative generator: the diagonal is minus the off-diagonal row sum.
    pub fn generator(sub: Vec<f64>, sup: Vec<f64>, weights: Vec<f64>) -> Self {
        let diag = sub.iter().zip(&sup).map(|(a, b)| -(a + b)).collect();
        Self {
            sub,
            diag,
            sup,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Off-diagonal mass plus diagonal; exactly zero for generators.
    pub fn row_sum(&self, i: usize) -> f64 {
        (self.sub[i] + self.sup[i]) + self.diag[i]
    }

    /// `L f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        self.apply_into(f, &mut out);
        out
    }

    fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        let n = self.len();
        for i in 0..n {
            let mut v = self.diag[i] * f[i];
            if i > 0 {
                v += self.sub[i] * f[i - 1];
            }
            if i + 1 < n {
                v += self.sup[i] * f[i + 1];
            }
            out[i] = v;
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

    /// Resolvent `G_lambda f = (lambda - L)^{-1} f` by direct tridiagonal elimination.
    pub fn solve_shifted(&self, lambda: f64, f: &GridFunction) -> Result<GridFunction> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("resolvent parameter {lambda} must be > 0")));
        }
        self.check_len(f)?;
        let sub: Vec<f64> = self.sub.iter().map(|v| -v).collect();
        let sup: Vec<f64> = self.sup.iter().map(|v| -v).collect();
        let diag: Vec<f64> = self.diag.iter().map(|d| lambda - d).collect();
        let shift = f.values().first().copied().unwrap_or(0.0);
        let rhs: Vec<f64> = f.values().iter().map(|v| v - shift).collect();
        let mut x = thomas(&sub, &diag, &sup, &rhs);
        for v in &mut x {
            *v += shift / lambda;
        }
        Ok(GridFunction(x))
    }

    /// `T_t f = e^{tL} f` by uniformization.
    ///
    /// With `Lambda = max_i |diag_i|` and `P = I + L / Lambda` (row-stochastic),
    /// `e^{tL} f = sum_k Pois(k; Lambda t) P^k f`. The Poisson weights are
    /// truncated on both sides so that the neglected mass, after renormalising,
    /// contributes at most `tol * |f|_inf`.
    pub fn semigroup_apply(&self, t: f64, f: &GridFunction, tol: f64) -> Result<GridFunction> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("time {t} must be >= 0")));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tolerance {tol} must be > 0")));
        }
        self.check_len(f)?;
        let rate = self.diag.iter().fold(0.0, |m: f64, d| m.max(d.abs()));
        if t == 0.0 || rate == 0.0 {
            return Ok(f.clone());
        }
        let weights = PoissonWeights::new(rate * t, tol);

        let n = self.len();
        let mut power = f.values().to_vec();
        let mut scratch = vec![0.0; n];
        let mut acc = vec![0.0; n];
        for k in 0..=weights.last() {
            if k > 0 {
                // power <- P power = power + L power / rate
                self.apply_into(&power, &mut scratch);
                for (p, lp) in power.iter_mut().zip(&scratch) {
                    *p += lp / rate;
                }
            }
            let w = weights.get(k);
            if w != 0.0 {
                for (a, p) in acc.iter_mut().zip(&power) {
                    *a += w * p;
                }
            }
        }
        Ok(GridFunction(acc))
    }
}

/// Solves a tridiagonal system; `sub[0]` and `sup[n-1]` are ignored.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = if n > 1 { sup[0] / diag[0] } else { 0.0 };
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        if i + 1 < n {
            c[i] = sup[i] / denom;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}

/// Normalised Poisson weights `P(N = k)` for `k` in a window around the mode.
#[derive(Debug, Clone)]
pub struct PoissonWeights {
    first: usize,
    weights: Vec<f64>,
}

impl PoissonWeights {
    /// Weights for `N ~ Pois(mean)`, dropping at most `tol / 2` of the mass.
    ///
    /// Weights are built outward from the mode by the ratio recurrences
    /// `w_{k+1} = w_k mean / (k + 1)` and `w_{k-1} = w_k k / mean`, so nothing
    /// underflows for large means. Each side stops once a geometric bound on
    /// its remaining tail falls below `tol / 4` of the accumulated mass.
    pub fn new(mean: f64, tol: f64) -> Self {
        let mode = mean.floor() as usize;
        let mut right = vec![1.0];
        let mut total = 1.0;
        let mut k = mode;
        loop {
            let w = right[right.len() - 1] * mean / (k + 1) as f64;
            k += 1;
            right.push(w);
            total += w;
            let q = mean / (k + 1) as f64;
            if q < 1.0 && w * q / (1.0 - q) <= 0.25 * tol * total {
                break;
            }
        }
        let mut left = Vec::new();
        let mut k = mode;
        let mut w = 1.0;
        while k > 0 {
            w *= k as f64 / mean;
            k -= 1;
            left.push(w);
            total += w;
            let r = k as f64 / mean;
            if k == 0 || (r < 1.0 && w * r / (1.0 - r) <= 0.25 * tol * total) {
                break;
            }
        }
        let first = k;
        let mut weights: Vec<f64> = left.into_iter().rev().chain(right).collect();
        for w in &mut weights {
            *w /= total;
        }
        Self { first, weights }
    }

    pub fn first(&self) -> usize {
        self.first
    }

    pub fn last(&self) -> usize {
        self.first + self.weights.len() - 1
    }

    pub fn get(&self, k: usize) -> f64 {
        if k < self.first {
            0.0
        } else {
            self.weights.get(k - self.first).copied().unwrap_or(0.0)
        }
    }
}

/// 1-capacity of a state set and its equilibrium potential.
///
/// `p = 1` on `set` and `(1 - L) p = 0` off it, i.e. `p(x) = E_x[exp(-sigma_D)]`;
/// the capacity is `E_1(p, p) = E(p, p) + |p|^2`.
pub fn capacity(chain: &ChainSpec, set: &[usize]) -> Result<(f64, GridFunction)> {
    if set.is_empty() {
        return Err(Error::EmptySet(
            "capacity of the empty set is 0 but its potential is undetermined".into(),
        ));
    }
    let n = chain.len();
    if let Some(&bad) = set.iter().find(|&&i| i >= n) {
        return Err(Error::Domain(format!("state {bad} outside 0..{n}")));
    }
    let mut in_set = vec![false; n];
    for &i in set {
        in_set[i] = true;
    }
    let l = chain.generator();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for i in 0..n {
        if in_set[i] {
            diag[i] = 1.0;
            rhs[i] = 1.0;
        } else {
            sub[i] = -l.sub[i];
            sup[i] = -l.sup[i];
            diag[i] = 1.0 - l.diag[i];
        }
    }
    let p = GridFunction(thomas(&sub, &diag, &sup, &rhs));
    let cap = chain.e1_norm_sq(&p)?;
    Ok((cap, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::Partition;
    use crate::scale::ScaleFunction;
    use crate::speed::SpeedMeasure;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};

    fn flat(n: usize) -> ChainSpec {
        ChainSpec::build(&Partition::uniform(n).unwrap(), &ScaleFunction::Identity, &SpeedMeasure::lebesgue()).unwrap()
    }

    fn two_state(m1: f64, m2: f64, split: f64) -> ChainSpec {
        let m = SpeedMeasure::new(vec![0.0, split, 1.0], vec![m1 / split, m2 / (1.0 - split)], vec![]).unwrap();
        ChainSpec::build(&Partition::from_points(vec![0.0, split, 1.0]).unwrap(), &ScaleFunction::Identity, &m).unwrap()
    }

    fn dense(l: &TridiagonalOperator) -> DMatrix<f64> {
        let n = l.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                l.diag[i]
            } else if j + 1 == i {
                l.sub[i]
            } else if j == i + 1 {
                l.sup[i]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn resolvent_of_constants() {
        let c = flat(16);
        let g = c.generator().solve_shifted(2.5, &GridFunction::constant(16, 1.0)).unwrap();
        for v in g.values() {
            assert_relative_eq!(2.5 * v, 1.0, max_relative = 1e-14);
        }
        assert!(c.generator().solve_shifted(0.0, &GridFunction::constant(16, 1.0)).is_err());
        assert!(c.generator().solve_shifted(1.0, &GridFunction::constant(3, 1.0)).is_err());
    }

    #[test]
    fn two_state_resolvent_by_hand() {
        let (m1, m2) = (0.3, 0.7);
        let c = two_state(m1, m2, 0.4);
        let cond = c.conductances[0];
        let (a, b) = (cond / m1, cond / m2);
        let lambda = 1.7;
        let f = GridFunction(vec![2.0, -1.0]);
        // [[lambda + a, -a], [-b, lambda + b]]^{-1}
        let det = (lambda + a) * (lambda + b) - a * b;
        let g0 = ((lambda + b) * f[0] + a * f[1]) / det;
        let g1 = (b * f[0] + (lambda + a) * f[1]) / det;
        let g = c.generator().solve_shifted(lambda, &f).unwrap();
        assert_relative_eq!(g[0], g0, max_relative = 1e-14);
        assert_relative_eq!(g[1], g1, max_relative = 1e-14);
    }

    #[test]
    fn cosine_mode_matches_dense_eigensolve() {
        for n in [8usize, 33, 64] {
            let c = flat(n);
            let l = c.generator();
            // symmetrise: M^{1/2} L M^{-1/2}
            let sq: Vec<f64> = c.masses.iter().map(|m| m.sqrt()).collect();
            let a = DMatrix::from_fn(n, n, |i, j| sq[i] * dense(&l)[(i, j)] / sq[j]);
            let a = 0.5 * (&a + a.transpose());
            let eig = a.symmetric_eigen();
            let mut evals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            evals.sort_by(|x, y| y.total_cmp(x));
            // discrete cosine mode k=1 at cell centres
            let h = 1.0 / n as f64;
            let f: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * (i as f64 + 0.5) * h).cos()).collect();
            let lf = l.apply(&f);
            let mu = lf[0] / f[0];
            assert_relative_eq!(mu, evals[1], max_relative = 1e-10);
            let lambda = 0.8;
            let g = l.solve_shifted(lambda, &GridFunction(f.clone())).unwrap();
            for i in 0..n {
                assert_relative_eq!(g[i], f[i] / (lambda - evals[1]), epsilon = 1e-12, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn semigroup_trivial_cases() {
        let c = flat(8);
        let l = c.generator();
        let f = GridFunction((0..8).map(|i| (i as f64).sin()).collect());
        assert_eq!(l.semigroup_apply(0.0, &f, 1e-10).unwrap(), f);
        let one = l.semigroup_apply(3.0, &GridFunction::constant(8, 1.0), 1e-10).unwrap();
        for v in one.values() {
            assert!((v - 1.0).abs() < 1e-10);
        }
        assert!(l.semigroup_apply(-1.0, &f, 1e-10).is_err());
        assert!(l.semigroup_apply(1.0, &f, 0.0).is_err());
    }

    #[test]
    fn semigroup_matches_dense_expm() {
        let tol = 1e-10;
        for (n, t) in [(8usize, 0.1), (8, 1.0), (32, 0.05)] {
            let c = flat(n);
            let l = c.generator();
            let expm = (dense(&l) * t).exp();
            for start in 0..n {
                let f = GridFunction::indicator(n, &[start]);
                let got = l.semigroup_apply(t, &f, tol).unwrap();
                let want = &expm * DVector::from_vec(f.0.clone());
                for i in 0..n {
                    assert!((got[i] - want[i]).abs() <= 10.0 * tol, "n={n} t={t} i={i}");
                }
            }
        }
    }

    #[test]
    fn semigroup_large_rate_does_not_underflow() {
        let c = flat(256);
        let l = c.generator();
        let f = GridFunction((0..256).map(|i| (i as f64 * 0.05).cos()).collect());
        let g = l.semigroup_apply(0.5, &f, 1e-10).unwrap();
        assert!(g.values().iter().all(|v| v.is_finite()));
        assert!(g.sup_norm() <= f.sup_norm() + 1e-10);
    }

    #[test]
    fn poisson_weights_sum_to_one() {
        for mean in [0.01, 0.5, 3.0, 40.0, 1234.5, 2.0e5] {
            let w = PoissonWeights::new(mean, 1e-10);
            let s: f64 = (w.first()..=w.last()).map(|k| w.get(k)).sum();
            assert_relative_eq!(s, 1.0, max_relative = 1e-12);
            // mode weight near Stirling for large means
            if mean > 100.0 {
                let mode = mean.floor() as usize;
                assert_relative_eq!(w.get(mode), 1.0 / (2.0 * std::f64::consts::PI * mean).sqrt(), max_relative = 1e-2);
            }
        }
        let w = PoissonWeights::new(2.0, 1e-12);
        assert_relative_eq!(w.get(0), (-2.0f64).exp(), max_relative = 1e-10);
        assert_relative_eq!(w.get(3), (-2.0f64).exp() * 8.0 / 6.0, max_relative = 1e-10);
    }

    #[test]
    fn capacity_examples() {
        let c = flat(10);
        let all: Vec<usize> = (0..10).collect();
        let (cap, p) = capacity(&c, &all).unwrap();
        assert_relative_eq!(cap, 1.0, max_relative = 1e-14);
        assert!(p.values().iter().all(|&v| v == 1.0));

        let c2 = two_state(0.3, 0.7, 0.4);
        let rate2 = c2.rates[1];
        let (cap, p) = capacity(&c2, &[0]).unwrap();
        let p2 = rate2 / (1.0 + rate2);
        assert_relative_eq!(p[1], p2, max_relative = 1e-14);
        let by_hand = c2.conductances[0] * (1.0 - p2).powi(2) + 0.3 + 0.7 * p2 * p2;
        assert_relative_eq!(cap, by_hand, max_relative = 1e-14);

        assert!(matches!(capacity(&c, &[]), Err(Error::EmptySet(_))));
        assert!(capacity(&c, &[10]).is_err());
    }

    #[test]
    fn capacity_monotone_and_potential_bounded() {
        let s = ScaleFunction::fat_cantor(6).unwrap();
        let c = ChainSpec::build(&Partition::uniform(40).unwrap(), &s, &SpeedMeasure::lebesgue()).unwrap();
        let small = [18usize, 19];
        let large = [17usize, 18, 19, 20, 30];
        let (c_small, p) = capacity(&c, &small).unwrap();
        let (c_large, _) = capacity(&c, &large).unwrap();
        assert!(c_small <= c_large);
        assert!(p.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
