//! Nonnegative weights and their extremal quantities.

use super::quadrature::{check_inside, integrate_nodes};
use super::{merge_nodes, Expr, Interval, PiecewiseFunction, QuadratureConfig, Side};
use crate::error::{Error, Result};

/// Dense-grid size for pieces without an analytic extremum search.
pub const GRID_POINTS: usize = 10_000;

/// Nonnegative piecewise weight with an optional a.e. derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    f: PiecewiseFunction,
    derivative: Option<PiecewiseFunction>,
}

impl Weight {
    /// Wraps `f`, deriving the derivative density symbolically when possible.
    pub fn new(f: PiecewiseFunction) -> Result<Self> {
        let d = f.derivative();
        Self::with_derivative(f, d)
    }

    pub fn with_derivative(f: PiecewiseFunction, derivative: Option<PiecewiseFunction>) -> Result<Self> {
        for (k, e) in f.pieces().iter().enumerate() {
            let (a, b) = f.piece_interval(k);
            let (lo, hi) = piece_range(e, a, b);
            let tol = 1e-14 * hi.abs().max(1.0);
            if lo < -tol {
                let x = argmin_grid(e, a, b);
                return Err(Error::NegativeWeight { x, value: lo });
            }
        }
        if let Some(d) = &derivative {
            if d.domain() != f.domain() {
                return Err(Error::InvalidFunction("derivative density on a different domain".into()));
            }
        }
        Ok(Weight { f, derivative })
    }

    pub fn function(&self) -> &PiecewiseFunction {
        &self.f
    }

    pub fn derivative_density(&self) -> Option<&PiecewiseFunction> {
        self.derivative.as_ref()
    }

    pub fn domain(&self) -> Interval {
        self.f.domain()
    }

    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        self.f.eval_side(x, side)
    }

    /// Infimum of `w` over the open interval `i`, one-sided limits included.
    pub fn inf_on(&self, i: Interval) -> f64 {
        self.fold_pieces(i, f64::INFINITY, |acc, e, a, b| acc.min(piece_range(e, a, b).0))
    }

    /// Supremum of `w` over the open interval `i`.
    pub fn sup_on(&self, i: Interval) -> f64 {
        self.fold_pieces(i, f64::NEG_INFINITY, |acc, e, a, b| acc.max(piece_range(e, a, b).1))
    }

    fn fold_pieces<F: Fn(f64, &Expr, f64, f64) -> f64>(&self, i: Interval, init: f64, op: F) -> f64 {
        let mut acc = init;
        for (k, e) in self.f.pieces().iter().enumerate() {
            let (a, b) = self.f.piece_interval(k);
            let (lo, hi) = (a.max(i.lo()), b.min(i.hi()));
            if lo < hi {
                acc = op(acc, e, lo, hi);
            }
        }
        acc
    }
}

/// Infimum and supremum of a piece over the open range `(a, b)`.
pub fn piece_range(e: &Expr, a: f64, b: f64) -> (f64, f64) {
    if let Some(r) = e.range_on(a, b) {
        return r;
    }
    grid_range(e, a, b)
}

fn grid_points(a: f64, b: f64) -> impl Iterator<Item = f64> {
    let n = GRID_POINTS;
    (1..n).map(move |k| a + (b - a) * k as f64 / n as f64)
}

fn grid_range(e: &Expr, a: f64, b: f64) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in [e.limit(a, Side::Right), e.limit(b, Side::Left)] {
        if !v.is_nan() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let n = GRID_POINTS as f64;
    let step = (b - a) / n;
    let (mut best_min, mut best_max) = (a, a);
    let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for x in grid_points(a, b) {
        let v = e.eval(x);
        if v < vmin {
            vmin = v;
            best_min = x;
        }
        if v > vmax {
            vmax = v;
            best_max = x;
        }
    }
    let refine = |x0: f64, sign: f64| golden(|x| sign * e.eval(x), (x0 - step).max(a), (x0 + step).min(b)) * sign;
    lo = lo.min(vmin).min(refine(best_min, 1.0));
    hi = hi.max(vmax).max(refine(best_max, -1.0));
    (lo, hi)
}

fn argmin_grid(e: &Expr, a: f64, b: f64) -> f64 {
    grid_points(a, b).fold((a, f64::INFINITY), |(bx, bv), x| {
        let v = e.eval(x);
        if v < bv {
            (x, v)
        } else {
            (bx, bv)
        }
    }).0
}

/// Golden-section minimum value of `f` on `[a, b]`.
fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.min(fd)
}

/// `ess sup_I 1/w`; `+∞` when the infimum of `w` on `I` vanishes.
pub fn ess_sup_reciprocal(w: &Weight, i: Interval) -> Result<f64> {
    check_inside(w.function(), i)?;
    let m = w.inf_on(i);
    Ok(if m > 0.0 { 1.0 / m } else { f64::INFINITY })
}

/// `|Dw|(I)`: `∫_I |w′|` plus the jumps of `w` inside `I`.
pub fn total_variation_measure(w: &Weight, i: Interval, q: &QuadratureConfig) -> Result<f64> {
    let d = w.derivative_density().ok_or(Error::MissingDerivative)?;
    check_inside(d, i)?;
    let zeros = d.interior_zeros();
    let nodes = merge_nodes(&[d.breakpoints(), &zeros], i.lo(), i.hi());
    let smooth = integrate_nodes(&nodes, &|x, s| d.eval_side(x, s).abs(), q)?;
    let jumps: f64 = w
        .function()
        .jumps()
        .into_iter()
        .filter(|(x, _, _)| i.contains(*x))
        .map(|(_, l, r)| (r - l).abs())
        .sum();
    Ok(smooth.value + jumps)
}
