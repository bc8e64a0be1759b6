//! Test functions `u` on `[0, 1]` with closed-form integrals.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scale::ScaleFunction;
use crate::speed::SpeedMeasure;

/// Something that can be integrated exactly against a [`SpeedMeasure`].
pub trait Integrand {
    fn value(&self, x: f64) -> f64;

    /// `int_a^b f(x) dx`.
    fn lebesgue_integral(&self, a: f64, b: f64) -> f64;

    /// The value of `f` when it is known to be constant on `[a, b)`.
    fn constant_on(&self, _a: f64, _b: f64) -> Option<f64> {
        None
    }

    /// `int f dm` over `[a, b)` (or `[a, b]`).
    fn integral_dm(&self, m: &SpeedMeasure, a: f64, b: f64, include_right: bool) -> f64 {
        m.integrate(a, b, include_right, |l, r| self.lebesgue_integral(l, r), |x| self.value(x))
    }
}

/// Closed-form building blocks shared with the cosine-series reference.
pub(crate) mod closed {
    /// `int_a^b cos(w x) dx`, written to avoid cancellation on short intervals.
    pub fn cos_integral(w: f64, a: f64, b: f64) -> f64 {
        if w == 0.0 {
            return b - a;
        }
        2.0 * (w * 0.5 * (a + b)).cos() * (w * 0.5 * (b - a)).sin() / w
    }

    /// `int_a^b cos(j pi x) cos(k pi x) dx`.
    pub fn cos_cos_integral(j: u32, k: u32, a: f64, b: f64) -> f64 {
        let pi = std::f64::consts::PI;
        let diff = (j as f64 - k as f64) * pi;
        let sum = (j + k) as f64 * pi;
        0.5 * (cos_integral(diff, a, b) + cos_integral(sum, a, b))
    }

    /// `int_a^b x^p cos(w x) dx` via the repeated integration-by-parts antiderivative.
    pub fn monomial_cos_integral(p: usize, w: f64, a: f64, b: f64) -> f64 {
        if w == 0.0 {
            let q = (p + 1) as f64;
            return (b.powi(q as i32) - a.powi(q as i32)) / q;
        }
        if p == 0 {
            return cos_integral(w, a, b);
        }
        let anti = |x: f64| {
            let mut acc = 0.0;
            let mut falling = 1.0; // p! / (p - j)!
            for j in 0..=p {
                let phase = w * x + j as f64 * std::f64::consts::FRAC_PI_2;
                acc += falling * x.powi((p - j) as i32) * phase.sin() / w.powi(j as i32 + 1);
                falling *= (p - j) as f64;
            }
            acc
        };
        anti(b) - anti(a)
    }

    /// `int_a^b (alpha x + beta) cos(w x) dx`.
    pub fn affine_cos_integral(alpha: f64, beta: f64, w: f64, a: f64, b: f64) -> f64 {
        alpha * monomial_cos_integral(1, w, a, b) + beta * cos_integral(w, a, b)
    }

    /// `int_a^b sin^2(w x) dx`.
    pub fn sin2_integral(w: f64, a: f64, b: f64) -> f64 {
        0.5 * ((b - a) - cos_integral(2.0 * w, a, b))
    }

    /// `int_a^b sum_i c_i x^i dx`.
    pub fn poly_integral(coeffs: &[f64], a: f64, b: f64) -> f64 {
        let anti = |x: f64| {
            coeffs
                .iter()
                .enumerate()
                .rev()
                .fold(0.0, |acc, (i, &c)| acc * x + c / (i + 1) as f64)
                * x
        };
        anti(b) - anti(a)
    }

    pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
        if p.is_empty() || q.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0.0; p.len() + q.len() - 1];
        for (i, &a) in p.iter().enumerate() {
            for (j, &b) in q.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    }

    pub fn poly_derivative(p: &[f64]) -> Vec<f64> {
        p.iter().enumerate().skip(1).map(|(i, &c)| i as f64 * c).collect()
    }
}

/// A sorted table of `(x, value)` knots interpolated linearly, held constant
/// outside its range.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl LinearTable {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("empty piecewise-linear table".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Validation(
                "piecewise-linear table abscissae must be strictly increasing".into(),
            ));
        }
        if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
            return Err(Error::Validation("non-finite table entry".into()));
        }
        Ok(Self {
            xs: points.iter().map(|p| p.0).collect(),
            ys: points.iter().map(|p| p.1).collect(),
        })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let hi = self.xs.partition_point(|&k| k <= x);
        if hi == 0 {
            return self.ys[0];
        }
        if hi >= self.xs.len() {
            return self.ys[self.ys.len() - 1];
        }
        let lo = hi - 1;
        let t = (x - self.xs[lo]) / (self.xs[hi] - self.xs[lo]);
        self.ys[lo] + (self.ys[hi] - self.ys[lo]) * t
    }

    /// Breakpoints strictly inside `(a, b)`.
    pub fn interior_breaks(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        let start = self.xs.partition_point(|&k| k <= a);
        self.xs[start..].iter().copied().take_while(move |&k| k < b)
    }

    /// `int_a^b g'(y)^2 dy`.
    pub fn slope_square_integral(&self, a: f64, b: f64) -> f64 {
        let mut knots = vec![a];
        knots.extend(self.interior_breaks(a, b));
        knots.push(b);
        knots
            .windows(2)
            .map(|w| {
                let h = w[1] - w[0];
                if h <= 0.0 {
                    return 0.0;
                }
                let slope = (self.eval(w[1]) - self.eval(w[0])) / h;
                slope * slope * h
            })
            .sum()
    }
}

/// Test functions used for projections, restrictions and energies.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `cos(k pi x)`.
    Cosine { k: u32 },
    /// `sum_i c_i x^i`.
    Polynomial { coeffs: Vec<f64> },
    /// Indicator of the closed interval `[lo, hi]`.
    Indicator { lo: f64, hi: f64 },
    /// Linear interpolation of a table in `x`.
    PiecewiseLinear(LinearTable),
    /// `g(s(x))` with `g` piecewise linear in scale coordinates.
    SAdapted { g: LinearTable, scale: ScaleFunction },
}

impl TestFunction {
    pub fn cosine(k: u32) -> Self {
        Self::Cosine { k }
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        Self::Polynomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Self::Polynomial { coeffs: vec![c] }
    }

    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::Validation(format!("indicator bounds {lo} > {hi}")));
        }
        Ok(Self::Indicator { lo, hi })
    }

    pub fn piecewise_linear(points: &[(f64, f64)]) -> Result<Self> {
        LinearTable::new(points).map(Self::PiecewiseLinear)
    }

    /// `g(s(x))` where `g` interpolates `points` given in scale coordinates.
    pub fn s_adapted(scale: ScaleFunction, points: &[(f64, f64)]) -> Result<Self> {
        Ok(Self::SAdapted {
            g: LinearTable::new(points)?,
            scale,
        })
    }

    /// `u = s` itself.
    pub fn scale_itself(scale: ScaleFunction) -> Self {
        let top = scale.total();
        Self::SAdapted {
            g: LinearTable::new(&[(0.0, 0.0), (top, top)]).expect("two increasing knots"),
            scale,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Cosine { k } => (*k as f64 * PI * x).cos(),
            Self::Polynomial { coeffs } => closed::poly_eval(coeffs, x),
            Self::Indicator { lo, hi } => {
                if *lo <= x && x <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            Self::PiecewiseLinear(t) => t.eval(x),
            Self::SAdapted { g, scale } => g.eval(scale.eval_unchecked(x)),
        }
    }

    /// Knots on which the function is affine in `x`, for the piecewise-linear kinds.
    fn linear_knots(&self, a: f64, b: f64) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::PiecewiseLinear(t) => {
                let mut out = vec![(a, t.eval(a))];
                out.extend(t.interior_breaks(a, b).map(|x| (x, t.eval(x))));
                if b > a {
                    out.push((b, t.eval(b)));
                }
                Some(out)
            }
            Self::SAdapted { g, scale } => {
                let sk = scale.knots_between(a, b);
                let mut out = vec![(sk[0].0, g.eval(sk[0].1))];
                for w in sk.windows(2) {
                    let ((x0, s0), (x1, s1)) = (w[0], w[1]);
                    for y in g.interior_breaks(s0, s1) {
                        let x = x0 + (y - s0) * (x1 - x0) / (s1 - s0);
                        if x > out[out.len() - 1].0 && x < x1 {
                            out.push((x, g.eval(y)));
                        }
                    }
                    out.push((x1, g.eval(s1)));
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// `int_a^b u(x)^2 dx`.
    pub fn lebesgue_square_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Self::Cosine { k } => {
                let w = *k as f64 * PI;
                0.5 * ((b - a) + closed::cos_integral(2.0 * w, a, b))
            }
            Self::Polynomial { coeffs } => {
                closed::poly_integral(&closed::poly_mul(coeffs, coeffs), a, b)
            }
            Self::Indicator { lo, hi } => (b.min(*hi) - a.max(*lo)).max(0.0),
            _ => {
                let knots = self.linear_knots(a, b).expect("piecewise-linear kind");
                knots
                    .windows(2)
                    .map(|w| {
                        let h = w[1].0 - w[0].0;
                        let (p, q) = (w[0].1, w[1].1);
                        h * (p * p + p * q + q * q) / 3.0
                    })
                    .sum()
            }
        }
    }

    /// `int_a^b u(x) cos(k pi x) dx`.
    pub fn cosine_integral(&self, k: u32, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let w = k as f64 * PI;
        match self {
            Self::Cosine { k: j } => closed::cos_cos_integral(*j, k, a, b),
            Self::Polynomial { coeffs } => coeffs
                .iter()
                .enumerate()
                .map(|(p, &c)| if c == 0.0 { 0.0 } else { c * closed::monomial_cos_integral(p, w, a, b) })
                .sum(),
            Self::Indicator { lo, hi } => {
                let (l, r) = (a.max(*lo), b.min(*hi));
                if r > l {
                    closed::cos_integral(w, l, r)
                } else {
                    0.0
                }
            }
            _ => {
                let knots = self.linear_knots(a, b).expect("piecewise-linear kind");
                knots
                    .windows(2)
                    .map(|seg| {
                        let ((x0, u0), (x1, u1)) = (seg[0], seg[1]);
                        let alpha = (u1 - u0) / (x1 - x0);
                        closed::affine_cos_integral(alpha, u0 - alpha * x0, w, x0, x1)
                    })
                    .sum()
            }
        }
    }

    /// `int_0^1 u'(x)^2 / s'(x) dx` over the affine pieces of `s`, i.e.
    /// `int (du/ds)^2 ds`. Only defined when `s` is piecewise linear.
    fn energy_integral_in_x(&self, scale: &ScaleFunction) -> Result<f64> {
        let pieces = scale.knots_between(0.0, 1.0);
        let mut total = 0.0;
        for w in pieces.windows(2) {
            let ((x0, s0), (x1, s1)) = (w[0], w[1]);
            let slope = (s1 - s0) / (x1 - x0);
            let du2 = match self {
                Self::Cosine { k } => {
                    let w = *k as f64 * PI;
                    w * w * closed::sin2_integral(w, x0, x1)
                }
                Self::Polynomial { coeffs } => {
                    let d = closed::poly_derivative(coeffs);
                    closed::poly_integral(&closed::poly_mul(&d, &d), x0, x1)
                }
                Self::PiecewiseLinear(t) => {
                    let mut knots = vec![x0];
                    knots.extend(t.interior_breaks(x0, x1));
                    knots.push(x1);
                    knots
                        .windows(2)
                        .map(|k| {
                            let h = k[1] - k[0];
                            let d = (t.eval(k[1]) - t.eval(k[0])) / h;
                            d * d * h
                        })
                        .sum()
                }
                _ => unreachable!("filtered by caller"),
            };
            total += du2 / slope;
        }
        Ok(total)
    }
}

impl Integrand for TestFunction {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn lebesgue_integral(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        match self {
            Self::Polynomial { coeffs } => closed::poly_integral(coeffs, a, b),
            _ => self.cosine_integral(0, a, b),
        }
    }

    fn constant_on(&self, a: f64, b: f64) -> Option<f64> {
        match self {
            Self::Polynomial { coeffs } if coeffs.len() <= 1 => {
                Some(coeffs.first().copied().unwrap_or(0.0))
            }
            Self::Cosine { k: 0 } => Some(1.0),
            Self::Indicator { lo, hi } if *lo <= a && b <= *hi => Some(1.0),
            Self::Indicator { lo, hi } if b <= *lo || a > *hi => Some(0.0),
            _ => None,
        }
    }
}

/// The continuum energy `(1/2) int (du/ds)^2 ds`, in closed form.
///
/// Supported classes: `u = g(s)` for the same `s` (any representation), and
/// cosines, polynomials and piecewise-linear tables when `s` is piecewise linear
/// (identity, knot table or tabulated). Anything else is refused rather than
/// approximated.
pub fn continuous_energy(scale: &ScaleFunction, u: &TestFunction) -> Result<f64> {
    match u {
        TestFunction::SAdapted { g, scale: own } => {
            if own != scale {
                return Err(Error::Unsupported(
                    "s-adapted test function built on a different scale".into(),
                ));
            }
            Ok(0.5 * g.slope_square_integral(0.0, scale.total()))
        }
        TestFunction::Indicator { .. } => Err(Error::Unsupported(
            "indicators are not absolutely continuous with respect to s".into(),
        )),
        _ => match scale {
            ScaleFunction::FatCantor(_) => Err(Error::Unsupported(
                "energy under a singular scale needs an s-adapted test function".into(),
            )),
            _ => Ok(0.5 * u.energy_integral_in_x(scale)?),
        },
    }
}

/// `int u^2 dm`.
pub fn l2_norm_sq(u: &TestFunction, m: &SpeedMeasure) -> f64 {
    m.integrate(0.0, 1.0, true, |a, b| u.lebesgue_square_integral(a, b), |x| {
        let v = u.eval(x);
        v * v
    })
}
