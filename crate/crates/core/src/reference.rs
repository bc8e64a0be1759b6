//! Continuum references for resolvent comparisons.
//!
//! For `s(x) = x` and Lebesgue `m` the diffusion is reflected Brownian motion
//! with generator `(1/2) d^2/dx^2` and Neumann eigenfunctions `cos(k pi x)`, so
//! `G_lambda` acts diagonally on cosine coefficients. For every other `(s, m)`
//! the reference is the trace chain itself on a much finer uniform grid.

use std::f64::consts::PI;

use crate::chain::{ChainSpec, GridFunction};
use crate::error::{Error, Result};
use crate::mosco::{extend, project, PiecewiseConstantFunction};
use crate::partition::Partition;
use crate::scale::ScaleFunction;
use crate::speed::SpeedMeasure;
use crate::testfn::{closed, l2_norm_sq, Integrand, TestFunction};

/// Default number of cosine modes kept by [`rbm_resolvent`].
pub const DEFAULT_MODES: usize = 64;

/// `sum_k a_k cos(k pi x)` on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeries {
    pub coeffs: Vec<f64>,
}

impl CosineSeries {
    /// Cosine coefficients of `u` up to mode `modes` (Lebesgue inner product).
    pub fn of(u: &TestFunction, modes: usize) -> Self {
        let coeffs = (0..=modes as u32)
            .map(|k| {
                let c = u.cosine_integral(k, 0.0, 1.0);
                if k == 0 {
                    c
                } else {
                    2.0 * c
                }
            })
            .collect();
        Self { coeffs }
    }

    fn nonzero(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(k, &c)| (k as u32, c))
    }

    /// `int_a^b g(x)^2 dx`.
    pub fn square_integral(&self, a: f64, b: f64) -> f64 {
        let terms: Vec<_> = self.nonzero().collect();
        let mut acc = 0.0;
        for (i, &(j, cj)) in terms.iter().enumerate() {
            acc += cj * cj * closed::cos_cos_integral(j, j, a, b);
            for &(k, ck) in &terms[i + 1..] {
                acc += 2.0 * cj * ck * closed::cos_cos_integral(j, k, a, b);
            }
        }
        acc
    }

    /// `(1/2) int g'(x)^2 dx`.
    pub fn energy(&self) -> f64 {
        self.nonzero()
            .map(|(k, c)| {
                let w = k as f64 * PI;
                0.25 * w * w * c * c
            })
            .sum()
    }

    /// `|g|^2` in `L^2(dx)` by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.nonzero()
            .map(|(k, c)| if k == 0 { c * c } else { 0.5 * c * c })
            .sum()
    }
}

impl Integrand for CosineSeries {
    fn value(&self, x: f64) -> f64 {
        self.nonzero().map(|(k, c)| c * (k as f64 * PI * x).cos()).sum()
    }

    fn lebesgue_integral(&self, a: f64, b: f64) -> f64 {
        self.nonzero()
            .map(|(k, c)| c * closed::cos_integral(k as f64 * PI, a, b))
            .sum()
    }
}

/// `g^2` for a cosine series, as an integrand.
pub(crate) struct SquaredSeries<'a>(pub &'a CosineSeries);

impl Integrand for SquaredSeries<'_> {
    fn value(&self, x: f64) -> f64 {
        self.0.value(x).powi(2)
    }

    fn lebesgue_integral(&self, a: f64, b: f64) -> f64 {
        self.0.square_integral(a, b)
    }
}

/// `G_lambda u` for reflected Brownian motion, truncated to a cosine series.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmResolvent {
    pub series: CosineSeries,
    /// Bound on the `L^2` norm of the discarded modes of `G_lambda u`.
    pub tail_bound: f64,
}

/// `G_lambda u = sum_k u_k e_k / (lambda + k^2 pi^2 / 2)` over `modes + 1` modes.
pub fn rbm_resolvent(lambda: f64, u: &TestFunction, modes: usize) -> Result<RbmResolvent> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("resolvent parameter {lambda} must be > 0")));
    }
    let input = CosineSeries::of(u, modes);
    let residual = (l2_norm_sq(u, &SpeedMeasure::lebesgue()) - input.norm_sq()).max(0.0);
    let next = (modes + 1) as f64 * PI;
    let tail_bound = residual.sqrt() / (lambda + 0.5 * next * next);
    let coeffs = input
        .coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let w = k as f64 * PI;
            c / (lambda + 0.5 * w * w)
        })
        .collect();
    Ok(RbmResolvent {
        series: CosineSeries { coeffs },
        tail_bound,
    })
}

/// `E_N G^N_lambda pi_N u` on a uniform grid of `N` cells.
#[derive(Debug, Clone)]
pub struct FineGridReference {
    pub chain: ChainSpec,
    pub values: GridFunction,
    pub extension: PiecewiseConstantFunction,
}

impl FineGridReference {
    /// Harmonic (affine-in-`s`) interpolant of the reference values.
    pub fn interpolate(&self, scale: &ScaleFunction, x: f64) -> Result<f64> {
        self.chain.harmonic_extension(scale, &self.values, x)
    }

    /// `E^N(G^N u, G^N u)`, the fine-grid proxy for the continuum energy.
    pub fn energy(&self) -> f64 {
        self.chain.energy_unchecked(self.values.values(), self.values.values())
    }
}

pub fn fine_grid_reference(
    scale: &ScaleFunction,
    speed: &SpeedMeasure,
    lambda: f64,
    u: &TestFunction,
    n_ref: usize,
) -> Result<FineGridReference> {
    let partition = Partition::uniform(n_ref)?;
    let chain = ChainSpec::build(&partition, scale, speed)?;
    let rhs = project(&partition, speed, u)?;
    let values = chain.generator().solve_shifted(lambda, &rhs)?;
    let extension = extend(&partition, &values)?;
    Ok(FineGridReference {
        chain,
        values,
        extension,
    })
}

/// `|E_N G^N pi_N u - E_{2N} G^{2N} pi_{2N} u|` in `L^2(m)`.
pub fn self_consistency_gap(
    scale: &ScaleFunction,
    speed: &SpeedMeasure,
    lambda: f64,
    u: &TestFunction,
    n_ref: usize,
) -> Result<f64> {
    let coarse = fine_grid_reference(scale, speed, lambda, u, n_ref)?;
    let fine = fine_grid_reference(scale, speed, lambda, u, 2 * n_ref)?;
    Ok(coarse.extension.l2_distance(&fine.extension, speed))
}
