use nalgebra::DMatrix;
use proptest::prelude::*;
use tracechain::linalg::DEFAULT_SEMIGROUP_TOL;
use tracechain::mosco::{extend, project, restrict};
use tracechain::{capacity, Atom, ChainSpec, GridFunction, Partition, ScaleFunction, SpeedMeasure, TestFunction};

fn scale_strategy() -> impl Strategy<Value = ScaleFunction> {
    prop_oneof![
        Just(ScaleFunction::Identity),
        (1u32..9).prop_map(|d| ScaleFunction::fat_cantor(d).unwrap()),
        prop::collection::vec(0.1f64..3.0, 1..6).prop_map(|slopes| {
            let k = slopes.len();
            let mut pts = vec![(0.0, 0.0)];
            let mut y = 0.0;
            for (i, sl) in slopes.iter().enumerate() {
                y += sl / k as f64;
                pts.push(((i + 1) as f64 / k as f64, y));
            }
            ScaleFunction::piecewise_linear(&pts).unwrap()
        }),
    ]
}

fn speed_strategy() -> impl Strategy<Value = SpeedMeasure> {
    (0.2f64..3.0, 0.2f64..3.0, prop::collection::vec((0.0f64..=1.0, 0.01f64..0.5), 0..3)).prop_map(|(a, b, atoms)| {
        SpeedMeasure::new(
            vec![0.0, 0.5, 1.0],
            vec![a, b],
            atoms
                .into_iter()
                .map(|(location, weight)| Atom { location, weight })
                .collect(),
        )
        .unwrap()
    })
}

fn dense_generator(chain: &ChainSpec) -> DMatrix<f64> {
    let l = chain.generator();
    let n = chain.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            l.diag[i]
        } else if j + 1 == i {
            l.sub[i]
        } else if i + 1 == j {
            l.sup[i]
        } else {
            0.0
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generator_is_symmetric_in_mass_weights(s in scale_strategy(), m in speed_strategy(), n in 2usize..40) {
        let chain = ChainSpec::build(&Partition::uniform(n).unwrap(), &s, &m).unwrap();
        let l = chain.generator();
        for i in 0..n {
            prop_assert_eq!(l.row_sum(i), 0.0);
        }
        for i in 0..n - 1 {
            let a = chain.masses[i] * l.sup[i];
            let b = chain.masses[i + 1] * l.sub[i + 1];
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn energy_is_minus_generator_pairing(s in scale_strategy(), m in speed_strategy(), n in 2usize..30, seed in 0u64..1000) {
        let chain = ChainSpec::build(&Partition::uniform(n).unwrap(), &s, &m).unwrap();
        let phi = GridFunction((0..n).map(|i| ((i as u64 * 7919 + seed) % 97) as f64 / 97.0).collect());
        let lphi = GridFunction(chain.generator().apply(phi.values()));
        let lhs = chain.dirichlet_energy(&phi).unwrap();
        let rhs = -chain.inner(&phi, &lphi).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn resolvent_is_a_positive_contraction(s in scale_strategy(), m in speed_strategy(), n in 2usize..40, lambda in 0.1f64..20.0) {
        let chain = ChainSpec::build(&Partition::uniform(n).unwrap(), &s, &m).unwrap();
        let f = GridFunction((0..n).map(|i| (i % 3) as f64).collect());
        let g = chain.generator().solve_shifted(lambda, &f).unwrap();
        prop_assert!(g.values().iter().all(|&v| v >= -1e-14));
        prop_assert!(lambda * g.sup_norm() <= f.sup_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn semigroup_matches_dense_exponential(s in scale_strategy(), n in 2usize..12, t in 0.0f64..0.5) {
        let chain = ChainSpec::build(&Partition::uniform(n).unwrap(), &s, &SpeedMeasure::lebesgue()).unwrap();
        let f = GridFunction((0..n).map(|i| (i as f64 * 1.3).cos()).collect());
        let got = chain.generator().semigroup_apply(t, &f, DEFAULT_SEMIGROUP_TOL).unwrap();
        let want = (dense_generator(&chain) * t).exp() * nalgebra::DVector::from_vec(f.0.clone());
        for i in 0..n {
            prop_assert!((got[i] - want[i]).abs() <= 10.0 * DEFAULT_SEMIGROUP_TOL + 1e-12);
        }
    }

    #[test]
    fn projection_extension_identities(m in speed_strategy(), n in 2usize..40, k in 0u32..5) {
        let p = Partition::uniform(n).unwrap();
        let v = GridFunction((0..n).map(|i| (i as f64).sin()).collect());
        prop_assert_eq!(project(&p, &m, &extend(&p, &v).unwrap()).unwrap(), v);
        let u = TestFunction::cosine(k);
        let pu = project(&p, &m, &u).unwrap();
        prop_assert!(pu.sup_norm() <= 1.0 + 1e-12);
        prop_assert_eq!(restrict(&p, &u).len(), n);
    }

    #[test]
    fn capacity_monotone_in_set(s in scale_strategy(), n in 4usize..40, lo in 0usize..3) {
        let chain = ChainSpec::build(&Partition::uniform(n).unwrap(), &s, &SpeedMeasure::lebesgue()).unwrap();
        let small: Vec<usize> = vec![lo];
        let big: Vec<usize> = (lo..n.min(lo + 3)).collect();
        let (c_small, p_small) = capacity(&chain, &small).unwrap();
        let (c_big, _) = capacity(&chain, &big).unwrap();
        prop_assert!(c_small <= c_big * (1.0 + 1e-12));
        prop_assert!(p_small.values().iter().all(|&v| (-1e-14..=1.0 + 1e-14).contains(&v)));
    }
}
