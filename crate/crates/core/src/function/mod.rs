//! Piecewise closed-form functions on bounded intervals, their quadrature,
//! and nonnegative weights built on top of them.

pub mod expr;
pub mod poly;
pub mod quadrature;
pub mod spec;
pub mod weight;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use expr::{Expr, ZeroScan};
pub use poly::Poly;
pub use quadrature::{integrate, integrate_abs, integrate_nodes, Estimate, QuadratureConfig, Rule};
pub use spec::{FunctionSpec, PieceKind, PieceSpec};
pub use weight::{ess_sup_reciprocal, total_variation_measure, Weight};

/// Open bounded interval `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn contains_closed(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn covers(&self, other: &Interval) -> bool {
        other.lo >= self.lo && other.hi <= self.hi
    }
}

/// Direction of approach for one-sided limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Where a point falls relative to the breakpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Interior(usize),
    Break(usize),
    Outside,
}

/// Function given by closed-form pieces between strictly increasing breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseFunction {
    breaks: Vec<f64>,
    pieces: Vec<Expr>,
}

const FALLBACK_CELLS: usize = 256;

impl PiecewiseFunction {
    pub fn new(breaks: Vec<f64>, pieces: Vec<Expr>) -> Result<Self> {
        if breaks.len() < 2 || pieces.len() + 1 != breaks.len() {
            return Err(Error::InvalidFunction(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                pieces.len()
            )));
        }
        if breaks.iter().any(|b| !b.is_finite()) || breaks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFunction("breakpoints must be finite and strictly increasing".into()));
        }
        Ok(PiecewiseFunction { breaks, pieces })
    }

    pub fn single(domain: Interval, expr: Expr) -> Self {
        PiecewiseFunction { breaks: vec![domain.lo, domain.hi], pieces: vec![expr] }
    }

    pub fn constant(domain: Interval, c: f64) -> Self {
        Self::single(domain, Expr::constant(c))
    }

    /// Polynomial with monomial coefficients in `x`.
    pub fn polynomial(domain: Interval, coeffs: &[f64]) -> Self {
        Self::single(domain, Expr::Poly(Poly::new(0.0, coeffs.to_vec())))
    }

    /// Linear interpolation of equally spaced samples covering `domain`.
    pub fn from_samples(domain: Interval, values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidFunction("at least two samples required".into()));
        }
        let n = values.len() - 1;
        let xs: Vec<f64> = (0..=n)
            .map(|k| if k == n { domain.hi } else { domain.lo + domain.len() * k as f64 / n as f64 })
            .collect();
        let pieces = (0..n)
            .map(|k| Expr::Poly(Poly::linear_through(xs[k], values[k], xs[k + 1], values[k + 1])))
            .collect();
        Self::new(xs, pieces)
    }

    pub fn domain(&self) -> Interval {
        Interval { lo: self.breaks[0], hi: *self.breaks.last().unwrap() }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Expr] {
        &self.pieces
    }

    pub fn piece_interval(&self, k: usize) -> (f64, f64) {
        (self.breaks[k], self.breaks[k + 1])
    }

    pub fn locate(&self, x: f64) -> Location {
        let n = self.breaks.len();
        if !(x >= self.breaks[0] && x <= self.breaks[n - 1]) {
            return Location::Outside;
        }
        match self.breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(k) => Location::Break(k),
            Err(k) => Location::Interior(k - 1),
        }
    }

    /// Value at `x`. At a breakpoint the common one-sided value is returned
    /// when the function is continuous there; at a domain end the inner limit.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        match self.locate(x) {
            Location::Outside => Err(Error::OutOfDomain { x }),
            Location::Interior(k) => Ok(self.pieces[k].eval(x)),
            Location::Break(k) => {
                let (l, r) = self.limits_at_break(k);
                match (l, r) {
                    (None, Some(v)) | (Some(v), None) => Ok(v),
                    (Some(a), Some(b)) if a == b || (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs())) => Ok(0.5 * (a + b)),
                    _ => Err(Error::Discontinuity { x }),
                }
            }
        }
    }

    /// Value for quadrature and sampling: interior values, one-sided limits at
    /// breakpoints, `NaN` outside.
    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        match self.locate(x) {
            Location::Outside => f64::NAN,
            Location::Interior(k) => self.pieces[k].eval(x),
            Location::Break(k) => {
                let (l, r) = self.limits_at_break(k);
                match side {
                    Side::Left => l.or(r),
                    Side::Right => r.or(l),
                }
                .unwrap()
            }
        }
    }

    fn limits_at_break(&self, k: usize) -> (Option<f64>, Option<f64>) {
        let x = self.breaks[k];
        let left = (k > 0).then(|| self.pieces[k - 1].limit(x, Side::Left));
        let right = (k < self.pieces.len()).then(|| self.pieces[k].limit(x, Side::Right));
        (left, right)
    }

    /// Limits from the left and from the right; `None` where that side lies
    /// outside the domain. `NaN` marks a nonexistent limit.
    pub fn one_sided_limits(&self, x: f64) -> Result<(Option<f64>, Option<f64>)> {
        match self.locate(x) {
            Location::Outside => Err(Error::OutOfDomain { x }),
            Location::Interior(k) => {
                let v = self.pieces[k].eval(x);
                Ok((Some(v), Some(v)))
            }
            Location::Break(k) => Ok(self.limits_at_break(k)),
        }
    }

    /// Interior breakpoints where the one-sided limits differ: `(x, left, right)`.
    pub fn jumps(&self) -> Vec<(f64, f64, f64)> {
        (1..self.pieces.len())
            .filter_map(|k| {
                let (l, r) = self.limits_at_break(k);
                let (l, r) = (l.unwrap(), r.unwrap());
                let same = l == r || (l - r).abs() <= 1e-12 * (1.0 + l.abs().max(r.abs()));
                (!same).then_some((self.breaks[k], l, r))
            })
            .collect()
    }

    pub fn map_pieces<F: Fn(&Expr) -> Expr>(&self, f: F) -> Self {
        PiecewiseFunction { breaks: self.breaks.clone(), pieces: self.pieces.iter().map(f).collect() }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_pieces(|e| e.scale(s))
    }

    pub fn derivative(&self) -> Option<Self> {
        let pieces = self.pieces.iter().map(|e| e.derivative()).collect::<Option<Vec<_>>>()?;
        Some(PiecewiseFunction { breaks: self.breaks.clone(), pieces })
    }

    /// Restriction to `[lo, hi]` inside the domain.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Self> {
        let d = self.domain();
        if !(lo >= d.lo && hi <= d.hi && lo < hi) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        let mut breaks = vec![lo];
        let mut pieces = Vec::new();
        for (k, e) in self.pieces.iter().enumerate() {
            let (a, b) = self.piece_interval(k);
            if b <= lo || a >= hi {
                continue;
            }
            let end = b.min(hi);
            breaks.push(end);
            pieces.push(e.clone());
        }
        Self::new(breaks, pieces)
    }

    /// Pointwise combination on the common refinement of both domains'
    /// breakpoints, restricted to the intersection of the domains.
    pub fn combine<F: Fn(&Expr, &Expr) -> Expr>(&self, other: &Self, op: F) -> Result<Self> {
        let (d1, d2) = (self.domain(), other.domain());
        let lo = d1.lo.max(d2.lo);
        let hi = d1.hi.min(d2.hi);
        if lo >= hi {
            return Err(Error::InvalidInterval { lo, hi });
        }
        let nodes = merge_nodes(&[&self.breaks, &other.breaks], lo, hi);
        let mut pieces = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let m = 0.5 * (w[0] + w[1]);
            let a = &self.pieces[self.piece_at(m)];
            let b = &other.pieces[other.piece_at(m)];
            pieces.push(op(a, b));
        }
        Self::new(nodes, pieces)
    }

    fn piece_at(&self, interior: f64) -> usize {
        match self.locate(interior) {
            Location::Interior(k) => k,
            Location::Break(k) => k.min(self.pieces.len() - 1),
            Location::Outside => unreachable!("point {interior} outside"),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, Expr::add)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.combine(other, Expr::mul)
    }

    pub fn add_constant(&self, c: f64) -> Self {
        self.map_pieces(|e| Expr::add(e, &Expr::constant(c)))
    }

    /// `F(x) = value + ∫_anchor^x f`, exact where closed forms exist and a
    /// C¹ cubic Hermite reconstruction elsewhere.
    pub fn primitive(&self, anchor: f64, value: f64) -> Result<Self> {
        if !self.domain().contains_closed(anchor) {
            return Err(Error::OutOfDomain { x: anchor });
        }
        let n = self.pieces.len();
        // Antiderivative pieces, each with its own (breaks, exprs).
        let parts: Vec<(Vec<f64>, Vec<Expr>)> = (0..n)
            .map(|k| {
                let (a, b) = self.piece_interval(k);
                match self.pieces[k].antiderivative() {
                    Some(e) => (vec![a, b], vec![e]),
                    None => hermite_primitive(&self.pieces[k], a, b),
                }
            })
            .collect();
        let k0 = match self.locate(anchor) {
            Location::Interior(k) => k,
            Location::Break(k) => k.min(n - 1),
            Location::Outside => unreachable!(),
        };
        let mut shifts = vec![0.0; n];
        let eval_part = |k: usize, x: f64, side: Side| -> f64 {
            let (bs, es) = &parts[k];
            let j = match side {
                Side::Right => bs.partition_point(|&b| b <= x).saturating_sub(1).min(es.len() - 1),
                Side::Left => bs.partition_point(|&b| b < x).saturating_sub(1).min(es.len() - 1),
            };
            if x == bs[j] || x == bs[j + 1] {
                es[j].limit(x, side)
            } else {
                es[j].eval(x)
            }
        };
        shifts[k0] = value - eval_part(k0, anchor, if anchor == self.breaks[k0 + 1] { Side::Left } else { Side::Right });
        for k in k0 + 1..n {
            let x = self.breaks[k];
            let left = eval_part(k - 1, x, Side::Left) + shifts[k - 1];
            shifts[k] = left - eval_part(k, x, Side::Right);
        }
        for k in (0..k0).rev() {
            let x = self.breaks[k + 1];
            let right = eval_part(k + 1, x, Side::Right) + shifts[k + 1];
            shifts[k] = right - eval_part(k, x, Side::Left);
        }
        let mut breaks = vec![self.breaks[0]];
        let mut pieces = Vec::new();
        for (k, (bs, es)) in parts.into_iter().enumerate() {
            for (j, e) in es.into_iter().enumerate() {
                breaks.push(bs[j + 1]);
                pieces.push(if shifts[k] == 0.0 { e } else { Expr::add(&e, &Expr::constant(shifts[k])) });
            }
        }
        Self::new(breaks, pieces)
    }

    /// Analytic zeros of all pieces strictly inside the domain.
    pub fn interior_zeros(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (k, e) in self.pieces.iter().enumerate() {
            let (a, b) = self.piece_interval(k);
            if let Some(z) = e.zeros(a, b, 1000) {
                if !z.everywhere {
                    out.extend(z.points.into_iter().filter(|&x| x > a && x < b));
                }
            }
        }
        out
    }

    /// Concatenates functions on adjacent domains.
    pub fn concat(parts: &[PiecewiseFunction]) -> Result<Self> {
        let mut breaks = vec![parts.first().ok_or_else(|| Error::InvalidFunction("nothing to join".into()))?.breaks[0]];
        let mut pieces = Vec::new();
        for p in parts {
            if (p.breaks[0] - *breaks.last().unwrap()).abs() > 0.0 {
                return Err(Error::InvalidFunction("parts are not adjacent".into()));
            }
            breaks.extend_from_slice(&p.breaks[1..]);
            pieces.extend(p.pieces.iter().cloned());
        }
        Self::new(breaks, pieces)
    }

    /// Uniform grid samples of `[lo, hi]` including both ends.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let d = self.domain();
        (0..=n)
            .map(|k| {
                let x = if k == n { d.hi } else { d.lo + d.len() * k as f64 / n as f64 };
                let side = if k == n { Side::Left } else { Side::Right };
                (x, self.eval_side(x, side))
            })
            .collect()
    }
}

/// Cubic Hermite reconstruction of an antiderivative on `[a, b]`.
fn hermite_primitive(e: &Expr, a: f64, b: f64) -> (Vec<f64>, Vec<Expr>) {
    let cells = FALLBACK_CELLS;
    let h = (b - a) / cells as f64;
    let xs: Vec<f64> = (0..=cells).map(|k| if k == cells { b } else { a + h * k as f64 }).collect();
    let f = |x: f64, side: Side| if x == a || x == b { e.limit(x, side) } else { e.eval(x) };
    let mut big_f = vec![0.0; cells + 1];
    for k in 0..cells {
        let (l, r) = (xs[k], xs[k + 1]);
        let m = 16;
        let dx = (r - l) / m as f64;
        let mut s = f(l, Side::Right) + f(r, Side::Left);
        for j in 1..m {
            s += if j % 2 == 1 { 4.0 } else { 2.0 } * f(l + dx * j as f64, Side::Right);
        }
        big_f[k + 1] = big_f[k] + s * dx / 3.0;
    }
    let mut pieces = Vec::with_capacity(cells);
    for k in 0..cells {
        let (l, r) = (xs[k], xs[k + 1]);
        let hh = r - l;
        let (f0, f1) = (f(l, Side::Right), f(r, Side::Left));
        let slope = (big_f[k + 1] - big_f[k]) / hh;
        let c2 = (3.0 * slope - 2.0 * f0 - f1) / hh;
        let c3 = (f0 + f1 - 2.0 * slope) / (hh * hh);
        pieces.push(Expr::Poly(Poly::new(l, vec![big_f[k], f0, c2, c3])));
    }
    (xs, pieces)
}

/// Sorted, deduplicated union of node lists clipped to `[lo, hi]`, with both
/// ends included.
pub fn merge_nodes(lists: &[&[f64]], lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = lists.iter().flat_map(|l| l.iter().copied()).filter(|&x| x > lo && x < hi).collect();
    v.push(lo);
    v.push(hi);
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn quartic() -> PiecewiseFunction {
        PiecewiseFunction::polynomial(Interval::new(-2.0, 2.0).unwrap(), &[1.0, 0.0, -2.0, 0.0, 1.0])
    }

    #[test]
    fn evaluate_registered_forms() {
        assert_eq!(quartic().evaluate(0.0).unwrap(), 1.0);
        let s = PiecewiseFunction::single(
            Interval::new(0.0, 1.0).unwrap(),
            Expr::InvSine { offset: 1.0, amplitude: 1.0, phase: 0.0 },
        );
        assert!((s.evaluate(2.0 / PI).unwrap() - 2.0).abs() < 1e-15);
        let ramp = PiecewiseFunction::from_samples(Interval::new(0.0, 1.0).unwrap(), &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(ramp.evaluate(0.25).unwrap(), 0.25);
        assert!(matches!(quartic().evaluate(3.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn limits_of_step_and_singularity() {
        let step = PiecewiseFunction::new(vec![0.0, 0.5, 1.0], vec![Expr::constant(0.0), Expr::constant(1.0)]).unwrap();
        assert_eq!(step.one_sided_limits(0.5).unwrap(), (Some(0.0), Some(1.0)));
        assert!(matches!(step.evaluate(0.5), Err(Error::Discontinuity { .. })));
        let cube = PiecewiseFunction::single(
            Interval::new(0.0, 1.0).unwrap(),
            Expr::Power { scale: 1.0, center: 0.0, orient: 1.0, exponent: -3.0 },
        );
        assert_eq!(cube.one_sided_limits(0.0).unwrap(), (None, Some(f64::INFINITY)));
        let (l, r) = quartic().one_sided_limits(0.3).unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn primitive_exact_and_fallback() {
        let f = quartic();
        let big_f = f.primitive(0.0, 0.0).unwrap();
        let expect = |x: f64| x - 2.0 * x.powi(3) / 3.0 + x.powi(5) / 5.0;
        for x in [-2.0, -0.7, 1.3, 2.0] {
            assert!((big_f.eval_side(x, Side::Left) - expect(x)).abs() < 1e-13);
        }
        let s = PiecewiseFunction::single(
            Interval::new(0.5, 1.0).unwrap(),
            Expr::InvSine { offset: 1.0, amplitude: 1.0, phase: 0.0 },
        );
        let p = s.primitive(1.0, 0.0).unwrap();
        // Reference by dense midpoint sum.
        let n = 200_000;
        let h = 0.5 / n as f64;
        let reference: f64 = (0..n).map(|k| s.pieces()[0].eval(0.5 + h * (k as f64 + 0.5))).sum::<f64>() * h;
        assert!((p.eval_side(0.5, Side::Right) + reference).abs() < 1e-9);
    }

    #[test]
    fn combine_refines_breakpoints() {
        let a = PiecewiseFunction::new(vec![0.0, 0.5, 1.0], vec![Expr::constant(1.0), Expr::constant(2.0)]).unwrap();
        let b = PiecewiseFunction::new(vec![0.0, 0.25, 1.0], vec![Expr::constant(3.0), Expr::constant(5.0)]).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.breakpoints(), &[0.0, 0.25, 0.5, 1.0]);
        assert_eq!(s.evaluate(0.1).unwrap(), 4.0);
        assert_eq!(s.evaluate(0.7).unwrap(), 7.0);
        let m = a.mul(&b).unwrap();
        assert_eq!(m.evaluate(0.3).unwrap(), 5.0);
    }
}
