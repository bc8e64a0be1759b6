//! Transfer operators between `L^2(I_n, m_n)` and `L^2([0, 1], m)` and the
//! convergence metrics built on them.
//!
//! * `extend` (`E_n`): grid values to the step function constant on each cell.
//! * `project` (`pi_n`): `m`-weighted cell averages; the adjoint of `E_n` and a
//!   left inverse of it.
//! * `restrict` (`R_n`): pointwise values at the chain states.
//!
//! Convergence of the forms is certified through the resolvents:
//! `|E_n G^n pi_n u - G u|` in `L^2(m)` and `|R_n G u - G^n pi_n u|` in the
//! discrete `E_1` norm should both go to zero as the mesh shrinks.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, GridFunction};
use crate::error::{Error, Result};
use crate::partition::{Partition, PartitionKind};
use crate::reference::{fine_grid_reference, rbm_resolvent, CosineSeries, SquaredSeries, DEFAULT_MODES};
use crate::scale::{RemovalSchedule, ScaleFunction};
use crate::speed::{Atom, SpeedMeasure};
use crate::testfn::{continuous_energy, Integrand, TestFunction};

/// A step function constant on `[breaks[i], breaks[i+1])`, the last cell closed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantFunction {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
}

impl PiecewiseConstantFunction {
    fn cell_of(&self, x: f64) -> usize {
        self.breaks
            .partition_point(|&p| p <= x)
            .saturating_sub(1)
            .min(self.values.len() - 1)
    }

    /// `|f|^2` in `L^2(m)`.
    pub fn l2_norm_sq(&self, m: &SpeedMeasure) -> f64 {
        let last = self.values.len() - 1;
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * v * m.interval_unchecked(self.breaks[i], self.breaks[i + 1], i == last))
            .sum()
    }

    /// `|f - g|` in `L^2(m)` over the common refinement of both partitions.
    pub fn l2_distance(&self, other: &Self, m: &SpeedMeasure) -> f64 {
        let mut cuts: Vec<f64> = self.breaks.iter().chain(&other.breaks).copied().collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let last = cuts.len() - 2;
        let mut acc = 0.0;
        for (j, w) in cuts.windows(2).enumerate() {
            let d = self.values[self.cell_of(w[0])] - other.values[other.cell_of(w[0])];
            acc += d * d * m.interval_unchecked(w[0], w[1], j == last);
        }
        acc.sqrt()
    }

    /// `|f - g|` in `L^2(m)` for a cosine series `g`, cell by cell in closed form.
    pub fn l2_distance_series(&self, g: &CosineSeries, m: &SpeedMeasure) -> f64 {
        let last = self.values.len() - 1;
        let sq = SquaredSeries(g);
        let acc: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let (a, b) = (self.breaks[i], self.breaks[i + 1]);
                let closed = i == last;
                let mass = m.interval_unchecked(a, b, closed);
                v * v * mass - 2.0 * v * g.integral_dm(m, a, b, closed) + sq.integral_dm(m, a, b, closed)
            })
            .sum();
        acc.max(0.0).sqrt()
    }
}

impl Integrand for PiecewiseConstantFunction {
    fn value(&self, x: f64) -> f64 {
        self.values[self.cell_of(x)]
    }

    fn lebesgue_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let (i0, i1) = (self.cell_of(a), self.cell_of(b));
        (i0..=i1)
            .map(|i| {
                let lo = self.breaks[i].max(a);
                let hi = self.breaks[i + 1].min(b);
                if hi > lo {
                    self.values[i] * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn constant_on(&self, a: f64, b: f64) -> Option<f64> {
        let i = self.cell_of(a);
        if self.breaks[i] <= a && b <= self.breaks[i + 1] {
            Some(self.values[i])
        } else {
            None
        }
    }
}

fn check_aligned(p: &Partition, v: &GridFunction) -> Result<()> {
    if v.len() != p.cells() {
        return Err(Error::LengthMismatch {
            expected: p.cells(),
            got: v.len(),
        });
    }
    Ok(())
}

/// `E_n v`: the value at `a_i` held on `[a_i, a_{i+1})`.
pub fn extend(p: &Partition, v: &GridFunction) -> Result<PiecewiseConstantFunction> {
    check_aligned(p, v)?;
    Ok(PiecewiseConstantFunction {
        breaks: p.points().to_vec(),
        values: v.values().to_vec(),
    })
}

/// `pi_n u`: `m`-weighted cell averages `int_{cell} u dm / m(cell)`.
pub fn project<U: Integrand + ?Sized>(p: &Partition, m: &SpeedMeasure, u: &U) -> Result<GridFunction> {
    let pts = p.points();
    let n = p.cells();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[i + 1]);
            let closed = i + 1 == n;
            let mass = m.interval_unchecked(a, b, closed);
            if !(mass > 0.0) {
                return Err(Error::DegenerateMeasure { cell: i, left: a, right: b });
            }
            Ok(match u.constant_on(a, b) {
                Some(c) => c,
                None => u.integral_dm(m, a, b, closed) / mass,
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(GridFunction)
}

/// `R_n u`: values at the chain states.
pub fn restrict<U: Integrand + ?Sized>(p: &Partition, u: &U) -> GridFunction {
    GridFunction(p.states().iter().map(|&x| u.value(x)).collect())
}

/// Largest deviations seen by [`adjoint_identities_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjointReport {
    pub trials: usize,
    /// `max |<pi_n f, v>_n - <f, E_n v>|`.
    pub adjoint: f64,
    /// `max_i |(pi_n E_n v)_i - v_i|`.
    pub left_inverse: f64,
    /// `max | |E_n v|^2 - |v|_n^2 |`.
    pub isometry: f64,
}

impl AdjointReport {
    pub fn max_deviation(&self) -> f64 {
        self.adjoint.max(self.left_inverse).max(self.isometry)
    }
}

fn random_test_function(rng: &mut ChaCha8Rng) -> TestFunction {
    match rng.random_range(0..4) {
        0 => TestFunction::cosine(rng.random_range(0..6)),
        1 => TestFunction::polynomial((0..4).map(|_| rng.random_range(-2.0..2.0)).collect()),
        2 => {
            let lo = rng.random_range(0.0..0.8);
            TestFunction::indicator(lo, lo + rng.random_range(0.0..0.2)).expect("ordered")
        }
        _ => {
            let mut pts = vec![(0.0, rng.random_range(-1.0..1.0))];
            let mut x = 0.0;
            for _ in 0..5 {
                x += rng.random_range(0.05..0.2);
                pts.push((x, rng.random_range(-1.0..1.0)));
            }
            TestFunction::piecewise_linear(&pts).expect("increasing")
        }
    }
}

/// Checks `<pi_n f, v>_n = <f, E_n v>`, `pi_n E_n = id` and `|E_n v| = |v|_n`
/// on `trials` random pairs.
pub fn adjoint_identities_check(p: &Partition, m: &SpeedMeasure, trials: usize, seed: u64) -> Result<AdjointReport> {
    let n = p.cells();
    let pts = p.points();
    let masses: Vec<f64> = (0..n)
        .map(|i| m.interval_unchecked(pts[i], pts[i + 1], i + 1 == n))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AdjointReport {
        trials,
        adjoint: 0.0,
        left_inverse: 0.0,
        isometry: 0.0,
    };
    for _ in 0..trials {
        let f = random_test_function(&mut rng);
        let v = GridFunction((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());

        let pf = project(p, m, &f)?;
        let lhs: f64 = (0..n).map(|i| masses[i] * pf[i] * v[i]).sum();
        let rhs: f64 = (0..n)
            .map(|i| v[i] * f.integral_dm(m, pts[i], pts[i + 1], i + 1 == n))
            .sum();
        report.adjoint = report.adjoint.max((lhs - rhs).abs());

        let ev = extend(p, &v)?;
        let back = project(p, m, &ev)?;
        let li = back.sub(&v).sup_norm();
        report.left_inverse = report.left_inverse.max(li);

        let norm_n: f64 = (0..n).map(|i| masses[i] * v[i] * v[i]).sum();
        report.isometry = report.isometry.max((ev.l2_norm_sq(m) - norm_n).abs());
    }
    Ok(report)
}

/// Grid layouts a convergence sweep can use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFamily {
    /// Resolution `r` means `r` equal cells.
    Uniform,
    /// Resolution `r` means the classical fat-Cantor endpoints at depth `r`.
    SvcEndpoints,
}

impl GridFamily {
    pub fn partition(self, resolution: usize) -> Result<Partition> {
        match self {
            Self::Uniform => Partition::uniform(resolution),
            Self::SvcEndpoints => Partition::build(&PartitionKind::SvcEndpoints {
                depth: resolution as u32,
                schedule: RemovalSchedule::CLASSICAL,
            }),
        }
    }
}

/// Where `G_lambda u` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    /// Cosine expansion; only for `s(x) = x` and Lebesgue `m`.
    ClosedForm {
        #[serde(default = "default_modes")]
        modes: usize,
    },
    /// The same trace construction on a uniform grid of `n_ref` cells.
    FineGrid { n_ref: usize },
}

fn default_modes() -> usize {
    DEFAULT_MODES
}

enum ResolvedReference {
    Series(CosineSeries),
    Grid(crate::reference::FineGridReference),
}

impl ResolvedReference {
    fn build(scale: &ScaleFunction, m: &SpeedMeasure, u: &TestFunction, lambda: f64, reference: Reference) -> Result<Self> {
        match reference {
            Reference::ClosedForm { modes } => {
                if !scale.is_identity() || !m.is_lebesgue() {
                    return Err(Error::ReferenceUnavailable(
                        "closed-form resolvent needs s(x) = x and Lebesgue m".into(),
                    ));
                }
                Ok(Self::Series(rbm_resolvent(lambda, u, modes)?.series))
            }
            Reference::FineGrid { n_ref } => Ok(Self::Grid(fine_grid_reference(scale, m, lambda, u, n_ref)?)),
        }
    }

    fn l2_error(&self, approx: &PiecewiseConstantFunction, m: &SpeedMeasure) -> f64 {
        match self {
            Self::Series(g) => approx.l2_distance_series(g, m),
            Self::Grid(r) => approx.l2_distance(&r.extension, m),
        }
    }

    fn at(&self, scale: &ScaleFunction, x: f64) -> Result<f64> {
        match self {
            Self::Series(g) => Ok(g.value(x)),
            Self::Grid(r) => r.interpolate(scale, x),
        }
    }

    fn energy(&self) -> f64 {
        match self {
            Self::Series(g) => g.energy(),
            Self::Grid(r) => r.energy(),
        }
    }
}

/// One resolution of a convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub n: usize,
    pub mesh: f64,
    /// `|E_n G^n pi_n u - G u|` in `L^2(m)`.
    pub err_l2: f64,
    /// `|R_n G u - G^n pi_n u|` in the `E_1^n` norm.
    pub err_e1: f64,
    /// `E^n(G^n pi_n u, G^n pi_n u)`.
    pub energy_n: f64,
    /// `E(G u, G u)` (closed form, or the fine-grid value).
    pub energy_continuum: f64,
    /// Seconds spent on this record; `None` when timing is disabled.
    pub wall_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub lambda: f64,
    pub records: Vec<ConvergenceRecord>,
}

impl ConvergenceReport {
    pub fn err_l2(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.err_l2).collect()
    }

    pub fn err_e1(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.err_e1).collect()
    }

    /// Writes `n,err_L2,err_E1,energy_n,energy_continuum` with 17 significant digits.
    pub fn write_csv<W: std::io::Write + ?Sized>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "n,err_L2,err_E1,energy_n,energy_continuum")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n, r.err_l2, r.err_e1, r.energy_n, r.energy_continuum
            )?;
        }
        Ok(())
    }
}

/// Options shared by the sweep functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub family: GridFamily,
    pub reference: Reference,
    pub timing: bool,
}

impl SweepOptions {
    pub fn uniform(reference: Reference) -> Self {
        Self {
            family: GridFamily::Uniform,
            reference,
            timing: true,
        }
    }
}

/// Resolvent and `E_1` errors for each resolution; both metrics come from the
/// same discrete solve.
pub fn convergence_sweep(
    scale: &ScaleFunction,
    m: &SpeedMeasure,
    u: &TestFunction,
    lambda: f64,
    resolutions: &[usize],
    opts: SweepOptions,
) -> Result<ConvergenceReport> {
    if resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Validation("resolutions must be strictly increasing".into()));
    }
    let reference = ResolvedReference::build(scale, m, u, lambda, opts.reference)?;
    let records = resolutions
        .par_iter()
        .map(|&res| {
            let start = Instant::now();
            let p = opts.family.partition(res)?;
            let chain = ChainSpec::build(&p, scale, m)?;
            let discrete = chain.generator().solve_shifted(lambda, &project(&p, m, u)?)?;
            let err_l2 = reference.l2_error(&extend(&p, &discrete)?, m);
            let restricted = GridFunction(
                p.states()
                    .iter()
                    .map(|&x| reference.at(scale, x))
                    .collect::<Result<_>>()?,
            );
            let diff = restricted.sub(&discrete);
            let err_e1 = chain.e1_norm_sq(&diff)?.max(0.0).sqrt();
            Ok(ConvergenceRecord {
                n: p.cells(),
                mesh: p.mesh(),
                err_l2,
                err_e1,
                energy_n: chain.dirichlet_energy(&discrete)?,
                energy_continuum: reference.energy(),
                wall_time: opts.timing.then(|| start.elapsed().as_secs_f64()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport { lambda, records })
}

/// `|E_n G^n pi_n u - G u|` in `L^2(m)` across resolutions.
pub fn resolvent_convergence(
    scale: &ScaleFunction,
    m: &SpeedMeasure,
    u: &TestFunction,
    lambda: f64,
    resolutions: &[usize],
    opts: SweepOptions,
) -> Result<ConvergenceReport> {
    convergence_sweep(scale, m, u, lambda, resolutions, opts)
}

/// `|R_n G u - G^n pi_n u|_{E_1^n}` across resolutions (see [`ConvergenceRecord::err_e1`]).
pub fn corollary_energy_convergence(
    scale: &ScaleFunction,
    m: &SpeedMeasure,
    u: &TestFunction,
    lambda: f64,
    resolutions: &[usize],
    opts: SweepOptions,
) -> Result<ConvergenceReport> {
    convergence_sweep(scale, m, u, lambda, resolutions, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBoundRecord {
    pub n: usize,
    /// `E^n(R_n u, R_n u)`.
    pub restricted: f64,
    /// `E^n(pi_n u, pi_n u)`, reported only.
    pub projected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBoundReport {
    pub continuum: f64,
    pub records: Vec<EnergyBoundRecord>,
    /// `E^n(R_n u) <= E(u)` at every resolution (with round-off slack).
    pub bounded: bool,
    /// Nondecreasing along consecutive nested partitions.
    pub monotone: bool,
    /// Whether each partition refines its predecessor.
    pub nested: bool,
}

impl EnergyBoundReport {
    /// `max_n |E^n(R_n u) - E(u)|`.
    pub fn max_gap(&self) -> f64 {
        self.records
            .iter()
            .map(|r| (self.continuum - r.restricted).abs())
            .fold(0.0, f64::max)
    }
}

/// `E^n(R_n u) <= E(u)` for an s-adapted `u`, and monotone along refinements.
pub fn energy_upper_bound_check(
    scale: &ScaleFunction,
    m: &SpeedMeasure,
    u: &TestFunction,
    partitions: &[Partition],
) -> Result<EnergyBoundReport> {
    if !matches!(u, TestFunction::SAdapted { .. }) {
        return Err(Error::Unsupported(
            "energy bound check needs an s-adapted test function".into(),
        ));
    }
    let continuum = continuous_energy(scale, u)?;
    let slack = 1e-12 * (1.0 + continuum.abs());
    let mut records = Vec::with_capacity(partitions.len());
    for p in partitions {
        let chain = ChainSpec::build(p, scale, m)?;
        let restricted = chain.dirichlet_energy(&restrict(p, u))?;
        let projected = chain.dirichlet_energy(&project(p, m, u)?)?;
        records.push(EnergyBoundRecord {
            n: p.cells(),
            restricted,
            projected,
        });
    }
    let bounded = records.iter().all(|r| r.restricted <= continuum + slack);
    let nested = partitions.windows(2).all(|w| w[0].is_refined_by(&w[1]));
    let monotone = records
        .windows(2)
        .all(|w| w[1].restricted + slack >= w[0].restricted);
    Ok(EnergyBoundReport {
        continuum,
        records,
        bounded,
        monotone,
        nested,
    })
}

/// A speed measure with atoms, used by tests and demos of the atom path.
pub fn lebesgue_with_atoms(atoms: &[(f64, f64)]) -> Result<SpeedMeasure> {
    SpeedMeasure::lebesgue().with_atoms(
        atoms
            .iter()
            .map(|&(location, weight)| Atom { location, weight })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn extend_examples() {
        let p = Partition::uniform(4).unwrap();
        let e = extend(&p, &GridFunction::constant(4, 2.0)).unwrap();
        assert!([0.0, 0.3, 0.99, 1.0].iter().all(|&x| e.value(x) == 2.0));
        let ind = extend(&p, &GridFunction::indicator(4, &[1])).unwrap();
        assert_eq!(ind.value(0.25), 1.0);
        assert_eq!(ind.value(0.4999), 1.0);
        assert_eq!(ind.value(0.5), 0.0);
        assert!(extend(&p, &GridFunction::constant(3, 0.0)).is_err());
    }

    #[test]
    fn project_examples() {
        let leb = SpeedMeasure::lebesgue();
        let p2 = Partition::uniform(2).unwrap();
        let v = project(&p2, &leb, &TestFunction::polynomial(vec![0.0, 1.0])).unwrap();
        assert_relative_eq!(v[0], 0.25, max_relative = 1e-15);
        assert_relative_eq!(v[1], 0.75, max_relative = 1e-15);
        let c = project(&Partition::uniform(7).unwrap(), &leb, &TestFunction::constant(3.5)).unwrap();
        assert!(c.values().iter().all(|&x| x == 3.5));
        let zero = SpeedMeasure::new(vec![0.0, 0.5, 1.0], vec![1.0, 0.0], vec![]).unwrap();
        assert!(matches!(
            project(&Partition::uniform(4).unwrap(), &zero, &TestFunction::cosine(1)),
            Err(Error::DegenerateMeasure { cell: 2, .. })
        ));
    }

    #[test]
    fn project_extend_is_exact_identity() {
        let m = lebesgue_with_atoms(&[(0.3, 0.2), (1.0, 0.1)]).unwrap();
        let s = ScaleFunction::fat_cantor(5).unwrap();
        for p in [
            Partition::uniform(8).unwrap(),
            Partition::svc_endpoints(3, RemovalSchedule::CLASSICAL).unwrap(),
        ] {
            let n = p.cells();
            let v = GridFunction((0..n).map(|i| (i as f64 * 1.7).sin() / 3.0).collect());
            let back = project(&p, &m, &extend(&p, &v).unwrap()).unwrap();
            assert_eq!(back, v);
            let _ = &s;
        }
    }

    #[test]
    fn restrict_examples() {
        let p = Partition::uniform(2).unwrap();
        let r = restrict(&p, &TestFunction::cosine(1));
        assert_eq!(r[0], 1.0);
        assert!(r[1].abs() < 1e-15);
        // Lipschitz u: restriction and projection differ by at most L * mesh
        let p = Partition::uniform(50).unwrap();
        let u = TestFunction::cosine(2);
        let diff = restrict(&p, &u).sub(&project(&p, &SpeedMeasure::lebesgue(), &u).unwrap());
        assert!(diff.sup_norm() <= 2.0 * PI * p.mesh());
    }

    #[test]
    fn adjoint_identities_hold() {
        let cases = [
            (Partition::uniform(8).unwrap(), SpeedMeasure::lebesgue()),
            (Partition::uniform(8).unwrap(), lebesgue_with_atoms(&[(0.5, 0.3), (0.125, 0.05)]).unwrap()),
            (
                Partition::svc_endpoints(3, RemovalSchedule::CLASSICAL).unwrap(),
                SpeedMeasure::new(vec![0.0, 0.4, 1.0], vec![2.0, 0.5], vec![]).unwrap(),
            ),
        ];
        for (p, m) in &cases {
            let r = adjoint_identities_check(p, m, 100, 11).unwrap();
            assert!(r.max_deviation() <= 1e-12, "{r:?}");
            assert_eq!(r.left_inverse, 0.0);
        }
    }

    #[test]
    fn projection_is_a_contraction() {
        let m = lebesgue_with_atoms(&[(0.7, 0.4)]).unwrap();
        let p = Partition::uniform(9).unwrap();
        for u in [TestFunction::cosine(3), TestFunction::polynomial(vec![1.0, -3.0, 2.0])] {
            let pu = project(&p, &m, &u).unwrap();
            let chain = ChainSpec::build(&p, &ScaleFunction::Identity, &m).unwrap();
            let lhs = chain.inner(&pu, &pu).unwrap();
            assert!(lhs <= crate::testfn::l2_norm_sq(&u, &m) + 1e-14);
        }
    }

    #[test]
    fn flat_resolvent_convergence() {
        let leb = SpeedMeasure::lebesgue();
        let u = TestFunction::cosine(1);
        let opts = SweepOptions::uniform(Reference::ClosedForm { modes: 4 });
        let r = convergence_sweep(&ScaleFunction::Identity, &leb, &u, 1.0, &[16, 64, 256], opts).unwrap();
        let e = r.err_l2();
        assert!(e[0] > e[1] && e[1] > e[2]);
        let e1 = r.err_e1();
        assert!(e1[0] > e1[1] && e1[1] > e1[2]);
        let want = PI * PI / 4.0 / (1.0 + PI * PI / 2.0).powi(2);
        assert_relative_eq!(r.records[0].energy_continuum, want, max_relative = 1e-12);
    }

    #[test]
    fn constants_converge_exactly() {
        let leb = SpeedMeasure::lebesgue();
        let u = TestFunction::constant(2.0);
        let opts = SweepOptions::uniform(Reference::ClosedForm { modes: 4 });
        let r = convergence_sweep(&ScaleFunction::Identity, &leb, &u, 4.0, &[8, 32], opts).unwrap();
        for rec in &r.records {
            assert!(rec.err_l2 < 1e-14 && rec.err_e1 < 1e-14);
        }
    }

    #[test]
    fn closed_form_unavailable_for_singular_scale() {
        let s = ScaleFunction::fat_cantor(4).unwrap();
        let opts = SweepOptions::uniform(Reference::ClosedForm { modes: 4 });
        let err = convergence_sweep(&s, &SpeedMeasure::lebesgue(), &TestFunction::cosine(1), 1.0, &[8], opts);
        assert!(matches!(err, Err(Error::ReferenceUnavailable(_))));
        let bad = convergence_sweep(
            &ScaleFunction::Identity,
            &SpeedMeasure::lebesgue(),
            &TestFunction::cosine(1),
            1.0,
            &[16, 8],
            SweepOptions::uniform(Reference::FineGrid { n_ref: 64 }),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn energy_bound_two_segment_g() {
        // g has its kink at s = 0.25, whose preimage x = 0.25 is a grid point;
        // g is flat beyond s = 0.75 so the last cell carries no energy either.
        let s = ScaleFunction::Identity;
        let u = TestFunction::s_adapted(s.clone(), &[(0.0, 0.0), (0.25, 1.0), (0.75, 0.0), (1.0, 0.0)]).unwrap();
        let parts: Vec<_> = [4, 8, 16].iter().map(|&n| Partition::uniform(n).unwrap()).collect();
        let r = energy_upper_bound_check(&s, &SpeedMeasure::lebesgue(), &u, &parts).unwrap();
        assert!(r.bounded && r.monotone && r.nested);
        assert!(r.max_gap() <= 1e-12, "{r:?}");
    }

    #[test]
    fn energy_of_scale_itself_misses_the_last_cell() {
        let s = ScaleFunction::fat_cantor(6).unwrap();
        let u = TestFunction::scale_itself(s.clone());
        let parts: Vec<_> = [16, 64].iter().map(|&n| Partition::uniform(n).unwrap()).collect();
        let r = energy_upper_bound_check(&s, &SpeedMeasure::lebesgue(), &u, &parts).unwrap();
        for (rec, p) in r.records.iter().zip(&parts) {
            let a_n = p.states()[p.cells() - 1];
            assert_relative_eq!(rec.restricted, 0.5 * s.eval(a_n).unwrap(), max_relative = 1e-13);
        }
        assert!(r.bounded && r.monotone);
        assert!(energy_upper_bound_check(&s, &SpeedMeasure::lebesgue(), &TestFunction::cosine(1), &parts).is_err());
    }

    #[test]
    fn report_csv_columns() {
        let report = ConvergenceReport {
            lambda: 1.0,
            records: vec![ConvergenceRecord {
                n: 16,
                mesh: 0.0625,
                err_l2: 0.5,
                err_e1: 0.25,
                energy_n: 1.0,
                energy_continuum: 2.0,
                wall_time: None,
            }],
        };
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "n,err_L2,err_E1,energy_n,energy_continuum\n16,5.0000000000000000e-1,2.5000000000000000e-1,1.0000000000000000e0,2.0000000000000000e0\n"
        );
    }
}
