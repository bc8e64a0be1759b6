use proptest::prelude::*;
use tracechain::{Partition, RemovalSchedule, ScaleFunction};

type Intervals = Vec<(f64, f64)>;

/// Removed gaps up to `depth` and the surviving intervals, built by direct
/// middle removal.
fn ledger(depth: u32, first: f64, ratio: f64) -> (Intervals, Intervals) {
    let mut alive = vec![(0.0, 1.0)];
    let mut gaps = Vec::new();
    for k in 1..=depth {
        let g = first * ratio.powi(k as i32 - 1);
        let mut next = Vec::new();
        for (a, b) in alive {
            let mid = 0.5 * (a + b);
            gaps.push((mid - g / 2.0, mid + g / 2.0));
            next.push((a, mid - g / 2.0));
            next.push((mid + g / 2.0, b));
        }
        alive = next;
    }
    (gaps, alive)
}

fn oracle(x: f64, depth: u32, first: f64, ratio: f64) -> f64 {
    let (gaps, alive) = ledger(depth, first, ratio);
    let cantor = 1.0 - first / (1.0 - 2.0 * ratio);
    let per_interval_cantor = cantor / 2f64.powi(depth as i32);
    let mut s = 0.0;
    for (a, b) in gaps {
        s += (x.min(b) - a).max(0.0);
    }
    for (a, b) in alive {
        let len = b - a;
        let removed_inside = len - per_interval_cantor;
        s += removed_inside * ((x - a) / len).clamp(0.0, 1.0);
    }
    s
}

#[test]
fn classical_endpoints_match_ledger() {
    for depth in 1..=8 {
        let s = ScaleFunction::fat_cantor(depth).unwrap();
        let p = Partition::svc_endpoints(depth, RemovalSchedule::CLASSICAL).unwrap();
        for &x in p.points() {
            let want = oracle(x, depth, 0.25, 0.25);
            assert!((s.eval(x).unwrap() - want).abs() <= 1e-15, "depth {depth} x {x}");
        }
    }
}

#[test]
fn named_values() {
    let s = ScaleFunction::fat_cantor(10).unwrap();
    assert_eq!(s.eval(0.375).unwrap(), 0.125);
    assert_eq!(s.eval(0.5).unwrap(), 0.25);
    assert_eq!(s.eval(0.625).unwrap(), 0.375);
    assert_eq!(s.eval(1.0).unwrap(), 0.5);
}

#[test]
fn generalised_schedule_matches_ledger() {
    let sched = RemovalSchedule::new(0.2, 0.3).unwrap();
    for depth in [1, 3, 6] {
        let s = ScaleFunction::fat_cantor_with(depth, sched).unwrap();
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            let want = oracle(x, depth, 0.2, 0.3);
            assert!((s.eval(x).unwrap() - want).abs() <= 1e-13, "depth {depth} x {x}");
        }
    }
}

proptest! {
    #[test]
    fn interior_values_match_ledger(x in 0.0f64..=1.0, depth in 1u32..10) {
        let s = ScaleFunction::fat_cantor(depth).unwrap();
        prop_assert!((s.eval(x).unwrap() - oracle(x, depth, 0.25, 0.25)).abs() <= 1e-13);
    }

    #[test]
    fn surrogate_within_its_error_bound(x in 0.0f64..=1.0, depth in 1u32..12) {
        let coarse = ScaleFunction::fat_cantor(depth).unwrap();
        let fine = ScaleFunction::fat_cantor(20).unwrap();
        let bound = 0.5f64.powi(depth as i32 + 1);
        prop_assert!((coarse.eval(x).unwrap() - fine.eval(x).unwrap()).abs() <= bound + 1e-15);
    }
}
