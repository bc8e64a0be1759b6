//! Exact event-driven simulation of a trace chain.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`): the generator for replica
//! `r` of a run seeded with `seed` is `ChaCha8Rng::seed_from_u64(seed)` moved
//! to stream `r`. Streams are independent, so replica results do not depend
//! on how replicas are scheduled across threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, GridFunction};
use crate::error::{Error, Result};

/// Starting law of a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialLaw {
    State(usize),
    /// `m_n / m_n(total)`, the reversible law of the chain.
    Stationary,
}

/// The generator for replica `replica` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Cumulative state masses, for sampling the stationary law.
#[derive(Debug, Clone)]
pub struct StationarySampler {
    cumulative: Vec<f64>,
}

impl StationarySampler {
    pub fn new(chain: &ChainSpec) -> Self {
        let mut acc = 0.0;
        let cumulative = chain
            .masses
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.cumulative[self.cumulative.len() - 1];
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

/// Draws the initial state; errors on an out-of-range state.
pub fn initial_state<R: Rng + ?Sized>(chain: &ChainSpec, init: InitialLaw, rng: &mut R) -> Result<usize> {
    match init {
        InitialLaw::State(i) if i < chain.len() => Ok(i),
        InitialLaw::State(i) => Err(Error::Domain(format!(
            "initial state {i} outside 0..{}",
            chain.len()
        ))),
        InitialLaw::Stationary => Ok(StationarySampler::new(chain).sample(rng)),
    }
}

/// Runs the chain from `start` over `[0, horizon]` without storing the path.
///
/// `visit(t, from, to)` is called for every jump at time `t`; returning
/// `false` stops the walk early. Returns the state at the stopping time.
pub fn walk<R, F>(chain: &ChainSpec, start: usize, horizon: f64, rng: &mut R, mut visit: F) -> usize
where
    R: Rng + ?Sized,
    F: FnMut(f64, usize, usize) -> bool,
{
    let mut t = 0.0;
    let mut state = start;
    loop {
        let rate = chain.rates[state];
        let hold: f64 = rng.sample::<f64, _>(Exp1) / rate;
        t += hold;
        if t > horizon {
            return state;
        }
        let [left, _] = chain.jump_probs[state];
        let next = if rng.random::<f64>() < left { state - 1 } else { state + 1 };
        if !visit(t, state, next) {
            return next;
        }
        state = next;
    }
}

/// A simulated step path: right-continuous, constant between events.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub seed: u64,
    pub init: InitialLaw,
    pub initial: usize,
    pub horizon: f64,
    /// `(jump time, new state)`, strictly increasing in time.
    pub events: Vec<(f64, usize)>,
}

/// Simulates one path on `[0, horizon]` from stream 0 of `seed`.
pub fn simulate_path(chain: &ChainSpec, init: InitialLaw, horizon: f64, seed: u64) -> Result<PathSample> {
    simulate_replica(chain, init, horizon, seed, 0)
}

pub fn simulate_replica(
    chain: &ChainSpec,
    init: InitialLaw,
    horizon: f64,
    seed: u64,
    replica: u64,
) -> Result<PathSample> {
    check_horizon(horizon)?;
    let mut rng = replica_rng(seed, replica);
    let initial = initial_state(chain, init, &mut rng)?;
    let mut events = Vec::new();
    walk(chain, initial, horizon, &mut rng, |t, _, to| {
        events.push((t, to));
        true
    });
    Ok(PathSample {
        seed,
        init,
        initial,
        horizon,
        events,
    })
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon {horizon} must be > 0")));
    }
    Ok(())
}

impl PathSample {
    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        let k = self.events.partition_point(|&(s, _)| s <= t);
        Ok(if k == 0 { self.initial } else { self.events[k - 1].1 })
    }

    /// States at each of the sorted `times`.
    pub fn sample_at_times(&self, times: &[f64]) -> Result<Vec<usize>> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("sample times must be sorted".into()));
        }
        times.iter().map(|&t| self.state_at(t)).collect()
    }

    /// `(start time, end time, state)` for each constant stretch.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        let starts = std::iter::once((0.0, self.initial)).chain(self.events.iter().copied());
        let ends = self
            .events
            .iter()
            .map(|e| e.0)
            .chain(std::iter::once(self.horizon));
        starts.zip(ends).map(|((t0, s), t1)| (t0, t1, s))
    }

    /// First time the path is in `target`; 0 when it starts there.
    pub fn first_hitting_time(&self, target: &[usize]) -> Result<Option<f64>> {
        if target.is_empty() {
            return Err(Error::EmptySet("hitting target is empty".into()));
        }
        Ok(self
            .segments()
            .find(|&(_, _, s)| target.contains(&s))
            .map(|(t0, _, _)| t0))
    }

    /// Fraction of `[0, T]` spent in `set`, from the event times.
    pub fn occupation_fraction(&self, set: &[usize]) -> f64 {
        let time: f64 = self
            .segments()
            .filter(|&(_, _, s)| set.contains(&s))
            .map(|(t0, t1, _)| t1 - t0)
            .sum();
        time / self.horizon
    }

    /// Writes `time,state_index,state_position`, one row for the start and one per jump.
    pub fn write_csv<W: Write + ?Sized>(&self, chain: &ChainSpec, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "time,state_index,state_position")?;
        let grid = chain.grid();
        for (t, s) in std::iter::once((0.0, self.initial)).chain(self.events.iter().copied()) {
            writeln!(out, "{:.16e},{},{:.16e}", t, s, grid[s])?;
        }
        Ok(())
    }
}

/// First hitting time of `target` on a fresh path, without storing events.
pub fn first_hitting_time(
    chain: &ChainSpec,
    init: InitialLaw,
    target: &[usize],
    horizon: f64,
    seed: u64,
    replica: u64,
) -> Result<Option<f64>> {
    if target.is_empty() {
        return Err(Error::EmptySet("hitting target is empty".into()));
    }
    check_horizon(horizon)?;
    let mut mask = vec![false; chain.len()];
    for &i in target {
        if i >= chain.len() {
            return Err(Error::Domain(format!("target state {i} outside 0..{}", chain.len())));
        }
        mask[i] = true;
    }
    let mut rng = replica_rng(seed, replica);
    let start = initial_state(chain, init, &mut rng)?;
    if mask[start] {
        return Ok(Some(0.0));
    }
    let mut hit = None;
    walk(chain, start, horizon, &mut rng, |t, _, to| {
        if mask[to] {
            hit = Some(t);
            false
        } else {
            true
        }
    });
    Ok(hit)
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_err: (var / n as f64).sqrt(),
            samples: n,
        }
    }

    /// `|mean - target| <= k * std_err`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_err
    }
}

/// Monte Carlo estimate of `E_{m_n}[f(X_t) - f(X_0) - int_0^t (L f)(X_s) ds]`.
///
/// Each replica starts from the stationary law and integrates `Lf` exactly
/// along its step path. The mean is zero for every `f`.
pub fn dynkin_martingale_residual(
    chain: &ChainSpec,
    f: &GridFunction,
    t: f64,
    replicas: usize,
    seed: u64,
) -> Result<Estimate> {
    if f.len() != chain.len() {
        return Err(Error::LengthMismatch {
            expected: chain.len(),
            got: f.len(),
        });
    }
    if replicas == 0 {
        return Err(Error::Validation("need at least one replica".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("time {t} must be >= 0")));
    }
    if t == 0.0 {
        return Ok(Estimate {
            mean: 0.0,
            std_err: 0.0,
            samples: replicas,
        });
    }
    let lf = chain.generator().apply(f.values());
    let sampler = StationarySampler::new(chain);
    let samples: Vec<f64> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let x0 = sampler.sample(&mut rng);
            let mut integral = 0.0;
            let mut last = 0.0;
            let end = walk(chain, x0, t, &mut rng, |s, from, _| {
                integral += lf[from] * (s - last);
                last = s;
                true
            });
            integral += lf[end] * (t - last);
            f[end] - f[x0] - integral
        })
        .collect();
    Ok(Estimate::from_samples(&samples))
}

/// Empirical law of `X_t` over `replicas` independent paths.
pub fn empirical_law(chain: &ChainSpec, init: InitialLaw, t: f64, replicas: usize, seed: u64) -> Result<Vec<f64>> {
    check_horizon(t)?;
    if let InitialLaw::State(i) = init {
        if i >= chain.len() {
            return Err(Error::Domain(format!("initial state {i} outside 0..{}", chain.len())));
        }
    }
    let sampler = StationarySampler::new(chain);
    let ends: Vec<usize> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replica_rng(seed, r);
            let start = match init {
                InitialLaw::State(i) => i,
                InitialLaw::Stationary => sampler.sample(&mut rng),
            };
            walk(chain, start, t, &mut rng, |_, _, _| true)
        })
        .collect();
    let mut counts = vec![0.0; chain.len()];
    for e in ends {
        counts[e] += 1.0;
    }
    Ok(counts.into_iter().map(|c| c / replicas as f64).collect())
}

/// Holding times and jump directions per state, collected from one long path.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HoldingStats {
    /// Completed holding times per state (the final, censored stay is dropped).
    pub holding: Vec<Vec<f64>>,
    pub left_jumps: Vec<u64>,
    pub right_jumps: Vec<u64>,
}

/// Streams one path until every state has at least `per_state` completed
/// holding times.
pub fn collect_holding_stats(chain: &ChainSpec, per_state: usize, seed: u64) -> HoldingStats {
    let n = chain.len();
    let mut stats = HoldingStats {
        holding: vec![Vec::with_capacity(per_state); n],
        left_jumps: vec![0; n],
        right_jumps: vec![0; n],
    };
    let mut rng = replica_rng(seed, 0);
    let start = StationarySampler::new(chain).sample(&mut rng);
    let mut done = 0usize;
    let mut last = 0.0;
    walk(chain, start, f64::INFINITY, &mut rng, |t, from, to| {
        let h = &mut stats.holding[from];
        h.push(t - last);
        if h.len() == per_state {
            done += 1;
        }
        last = t;
        if to < from {
            stats.left_jumps[from] += 1;
        } else {
            stats.right_jumps[from] += 1;
        }
        done < n
    });
    stats
}

/// Kolmogorov–Smirnov statistic of `samples` against `Exp(rate)` and its
/// asymptotic p-value.
pub fn ks_exponential(samples: &[f64], rate: f64) -> (f64, f64) {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let cdf = 1.0 - (-rate * x).exp();
        d = d.max(cdf - i as f64 / n).max((i + 1) as f64 / n - cdf);
    }
    let sn = n.sqrt();
    (d, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d))
}

/// `P(K > x)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Per-run path statistics, serialised by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub replicas: usize,
    pub horizon: f64,
    pub mean_jumps: f64,
    /// Time-averaged occupation per state, averaged over replicas.
    pub occupation: Vec<f64>,
    /// Law of the state at the horizon.
    pub terminal_law: Vec<f64>,
}

/// Occupation and terminal statistics over `replicas` streamed paths.
pub fn path_stats(chain: &ChainSpec, init: InitialLaw, horizon: f64, replicas: usize, seed: u64) -> Result<PathStats> {
    check_horizon(horizon)?;
    if replicas == 0 {
        return Err(Error::Validation("need at least one replica".into()));
    }
    let n = chain.len();
    let per: Vec<(Vec<f64>, usize, u64)> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let mut rng = replica_rng(seed, r);
            let start = initial_state(chain, init, &mut rng)?;
            let mut occ = vec![0.0; n];
            let mut last = 0.0;
            let mut jumps = 0u64;
            let end = walk(chain, start, horizon, &mut rng, |t, from, _| {
                occ[from] += t - last;
                last = t;
                jumps += 1;
                true
            });
            occ[end] += horizon - last;
            Ok((occ, end, jumps))
        })
        .collect::<Result<_>>()?;
    let mut occupation = vec![0.0; n];
    let mut terminal_law = vec![0.0; n];
    let mut jumps = 0.0;
    for (occ, end, j) in &per {
        for (a, o) in occupation.iter_mut().zip(occ) {
            *a += o / horizon;
        }
        terminal_law[*end] += 1.0;
        jumps += *j as f64;
    }
    let r = replicas as f64;
    occupation.iter_mut().for_each(|v| *v /= r);
    terminal_law.iter_mut().for_each(|v| *v /= r);
    Ok(PathStats {
        replicas,
        horizon,
        mean_jumps: jumps / r,
        occupation,
        terminal_law,
    })
}
