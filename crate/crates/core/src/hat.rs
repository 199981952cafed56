//! Auxiliary weight built from running infima of `w` taken from each
//! interval midpoint outward.

use rayon::prelude::*;
use serde::Serialize;

use crate::degeneracy::DegeneracyDecomposition;
use crate::error::Result;
use crate::function::{Expr, Interval, PiecewiseFunction, Poly, Side, Weight};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HatConfig {
    /// Envelope samples per outer quarter where no closed form is available.
    pub samples_per_quarter: usize,
}

impl Default for HatConfig {
    fn default() -> Self {
        HatConfig { samples_per_quarter: 2048 }
    }
}

/// Auxiliary weight on one nondegenerate interval.
#[derive(Clone, Debug, PartialEq)]
pub struct HatInterval {
    pub a: f64,
    pub b: f64,
    pub q1: f64,
    pub mid: f64,
    pub q3: f64,
    pub middle_value: f64,
    /// Profile on `[a, q1]`.
    pub left: PiecewiseFunction,
    /// Profile on `[q3, b]`.
    pub right: PiecewiseFunction,
    pub value_a: f64,
    pub value_b: f64,
    /// Both profiles are closed forms (no sampled envelope).
    pub exact: bool,
}

impl HatInterval {
    pub fn interval(&self) -> Interval {
        Interval::new(self.a, self.b).unwrap()
    }

    /// Value at a point of the closed interval.
    pub fn value(&self, x: f64) -> f64 {
        if x == self.a {
            self.value_a
        } else if x == self.b {
            self.value_b
        } else if x >= self.q1 && x <= self.q3 {
            self.middle_value
        } else if x < self.q1 {
            // Inner limit: the infimum runs over (x, mid).
            self.left.eval_side(x, Side::Right)
        } else {
            self.right.eval_side(x, Side::Left)
        }
    }

    /// Supremum of the auxiliary weight on the open interval.
    pub fn sup_bound(&self) -> f64 {
        let l = self.left.eval_side(self.q1, Side::Left);
        let r = self.right.eval_side(self.q3, Side::Right);
        l.max(r).max(self.middle_value)
    }
}

/// The auxiliary weight on the whole domain; zero off the intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct HatWeight {
    domain: Interval,
    intervals: Vec<HatInterval>,
    function: PiecewiseFunction,
}

impl HatWeight {
    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn intervals(&self) -> &[HatInterval] {
        &self.intervals
    }

    /// Piecewise representation over the domain (for quadrature).
    pub fn function(&self) -> &PiecewiseFunction {
        &self.function
    }

    /// Pointwise value with the quarter-point, endpoint and touching-point
    /// conventions applied.
    pub fn value(&self, x: f64) -> f64 {
        let mut found: Option<f64> = None;
        for h in &self.intervals {
            if x >= h.a && x <= h.b {
                let v = h.value(x);
                found = Some(found.map_or(v, |f: f64| f.min(v)));
            }
        }
        found.unwrap_or(0.0)
    }

    pub fn is_exact(&self) -> bool {
        self.intervals.iter().all(|h| h.exact)
    }
}

/// Segment of a profile in walking order.
struct Seg {
    lo: f64,
    hi: f64,
    expr: Expr,
}

/// Running infimum of `w` walking from `from` to `to` (either direction),
/// starting from `carry`.
fn profile(w: &Weight, from: f64, to: f64, mut carry: f64, samples: usize) -> (Vec<Seg>, bool) {
    let f = w.function();
    let outward = if to > from { 1.0 } else { -1.0 };
    let (lo, hi) = if outward > 0.0 { (from, to) } else { (to, from) };
    let quarter = hi - lo;
    let mut pieces: Vec<(f64, f64, usize)> = (0..f.pieces().len())
        .filter_map(|k| {
            let (a, b) = f.piece_interval(k);
            let (s, e) = (a.max(lo), b.min(hi));
            (s < e).then_some((s, e, k))
        })
        .collect();
    if outward < 0.0 {
        pieces.reverse();
    }
    let mut out = Vec::new();
    let mut exact = true;
    for (s, e, k) in pieces {
        let expr = &f.pieces()[k];
        let Some(mut breaks) = expr.monotone_breaks(s, e) else {
            exact = false;
            let n = ((samples as f64 * (e - s) / quarter).ceil() as usize).max(16);
            carry = sampled_segment(expr, s, e, outward, carry, n, &mut out);
            continue;
        };
        breaks.insert(0, s);
        breaks.push(e);
        let mut segs: Vec<(f64, f64)> = breaks.windows(2).map(|p| (p[0], p[1])).collect();
        if outward < 0.0 {
            segs.reverse();
        }
        for (s0, s1) in segs {
            let (near, far, near_side, far_side) =
                if outward > 0.0 { (s0, s1, Side::Right, Side::Left) } else { (s1, s0, Side::Left, Side::Right) };
            let wn = expr.limit(near, near_side);
            let wf = expr.limit(far, far_side);
            if wf >= wn {
                // Increasing away from the midpoint: the infimum is reached at the near end.
                let v = carry.min(wn);
                out.push(Seg { lo: s0, hi: s1, expr: Expr::constant(v) });
                carry = v;
            } else if wn <= carry {
                out.push(Seg { lo: s0, hi: s1, expr: expr.clone() });
                carry = wf;
            } else if wf >= carry {
                out.push(Seg { lo: s0, hi: s1, expr: Expr::constant(carry) });
            } else {
                let t = expr.crossing(s0, s1, carry);
                let (first, second) = if outward > 0.0 {
                    (Seg { lo: s0, hi: t, expr: Expr::constant(carry) }, Seg { lo: t, hi: s1, expr: expr.clone() })
                } else {
                    (Seg { lo: t, hi: s1, expr: Expr::constant(carry) }, Seg { lo: s0, hi: t, expr: expr.clone() })
                };
                for sg in [first, second] {
                    if sg.hi > sg.lo {
                        out.push(sg);
                    }
                }
                carry = wf;
            }
        }
    }
    (out, exact)
}

/// Monotone envelope sampled on `n` cells, linear in between.
fn sampled_segment(expr: &Expr, s: f64, e: f64, outward: f64, mut carry: f64, n: usize, out: &mut Vec<Seg>) -> f64 {
    let xs: Vec<f64> = (0..=n).map(|k| if k == n { e } else { s + (e - s) * k as f64 / n as f64 }).collect();
    let order: Vec<usize> = if outward > 0.0 { (0..=n).collect() } else { (0..=n).rev().collect() };
    let mut vals = vec![0.0; n + 1];
    for &k in &order {
        let v = if k == 0 {
            expr.limit(xs[0], Side::Right)
        } else if k == n {
            expr.limit(xs[n], Side::Left)
        } else {
            expr.eval(xs[k])
        };
        if v.is_finite() {
            carry = carry.min(v);
        }
        vals[k] = carry;
    }
    let cells: Vec<usize> = if outward > 0.0 { (0..n).collect() } else { (0..n).rev().collect() };
    for k in cells {
        out.push(Seg {
            lo: xs[k],
            hi: xs[k + 1],
            expr: Expr::Poly(Poly::linear_through(xs[k], vals[k], xs[k + 1], vals[k + 1])),
        });
    }
    carry
}

fn assemble(mut segs: Vec<Seg>, ascending: bool) -> Result<PiecewiseFunction> {
    if !ascending {
        segs.reverse();
    }
    let mut breaks = vec![segs[0].lo];
    let mut pieces = Vec::with_capacity(segs.len());
    for s in segs {
        breaks.push(s.hi);
        pieces.push(s.expr);
    }
    PiecewiseFunction::new(breaks, pieces)
}

fn build_interval(w: &Weight, i: Interval, cfg: &HatConfig) -> Result<HatInterval> {
    let (a, b) = (i.lo(), i.hi());
    let q1 = 0.25 * (3.0 * a + b);
    let q3 = 0.25 * (a + 3.0 * b);
    let mid = 0.5 * (a + b);
    let middle_value = w.inf_on(Interval::new(q1, q3)?).max(0.0);
    let carry_left = w.inf_on(Interval::new(q1, mid)?);
    let carry_right = w.inf_on(Interval::new(mid, q3)?);
    let (ls, lex) = profile(w, q1, a, carry_left, cfg.samples_per_quarter);
    let (rs, rex) = profile(w, q3, b, carry_right, cfg.samples_per_quarter);
    let left = assemble(ls, false)?;
    let right = assemble(rs, true)?;
    let value_a = w.inf_on(Interval::new(a, mid)?).max(0.0);
    let value_b = w.inf_on(Interval::new(mid, b)?).max(0.0);
    Ok(HatInterval { a, b, q1, mid, q3, middle_value, left, right, value_a, value_b, exact: lex && rex })
}

/// Builds the auxiliary weight of `w` over the decomposition `dec`.
pub fn build_hat(w: &Weight, dec: &DegeneracyDecomposition) -> Result<HatWeight> {
    build_hat_with(w, dec, &HatConfig::default())
}

pub fn build_hat_with(w: &Weight, dec: &DegeneracyDecomposition, cfg: &HatConfig) -> Result<HatWeight> {
    let intervals = dec.intervals.par_iter().map(|&i| build_interval(w, i, cfg)).collect::<Result<Vec<_>>>()?;
    let omega = dec.domain;
    let mut parts = Vec::new();
    let mut cursor = omega.lo();
    for h in &intervals {
        if h.a > cursor {
            parts.push(PiecewiseFunction::constant(Interval::new(cursor, h.a)?, 0.0));
        }
        parts.push(h.left.clone());
        parts.push(PiecewiseFunction::constant(Interval::new(h.q1, h.q3)?, h.middle_value));
        parts.push(h.right.clone());
        cursor = h.b;
    }
    if cursor < omega.hi() {
        parts.push(PiecewiseFunction::constant(Interval::new(cursor, omega.hi())?, 0.0));
    }
    let function = PiecewiseFunction::concat(&parts)?;
    Ok(HatWeight { domain: omega, intervals, function })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Clause {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyReport {
    pub pass: bool,
    pub clauses: Vec<Clause>,
}

const CHECK_SAMPLES: usize = 1024;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 }).collect()
}

/// Grid checks of the structural properties of the auxiliary weight.
pub fn check_hat_properties(hw: &HatWeight, w: &Weight) -> PropertyReport {
    let mut clauses = Vec::new();
    let rel = |a: f64, b: f64| 1e-13 * (1.0 + a.abs().max(b.abs()));

    let mut mono = true;
    let mut mono_detail = String::new();
    for (k, h) in hw.intervals.iter().enumerate() {
        // Half-open quarters: the quarter points carry the middle value.
        let left: Vec<f64> = grid(h.a, h.q1, CHECK_SAMPLES)[..CHECK_SAMPLES].iter().map(|&x| h.value(x)).collect();
        let right: Vec<f64> = grid(h.q3, h.b, CHECK_SAMPLES)[1..].iter().map(|&x| h.value(x)).collect();
        let up = left.windows(2).all(|p| p[1] >= p[0] - rel(p[0], p[1]));
        let down = right.windows(2).all(|p| p[1] <= p[0] + rel(p[0], p[1]));
        if !(up && down) {
            mono = false;
            mono_detail = format!("interval {k}");
        }
    }
    clauses.push(Clause { name: "monotone_outer_quarters", pass: mono, detail: mono_detail });

    let mut constant = true;
    let mut c_detail = String::new();
    for (k, h) in hw.intervals.iter().enumerate() {
        let expect = w.inf_on(Interval::new(h.q1, h.q3).unwrap());
        let all_eq = grid(h.q1, h.q3, CHECK_SAMPLES).iter().all(|&x| hw.value(x) == h.middle_value || x == h.a || x == h.b);
        if !all_eq || (h.middle_value - expect).abs() > rel(expect, h.middle_value) {
            constant = false;
            c_detail = format!("interval {k}: middle {} vs infimum {expect}", h.middle_value);
        }
    }
    clauses.push(Clause { name: "constant_middle_half", pass: constant, detail: c_detail });

    let mut bounds = true;
    let mut b_detail = String::new();
    for (k, h) in hw.intervals.iter().enumerate() {
        let len = h.b - h.a;
        let sup = h.sup_bound();
        let inner = grid(h.a + len / 8.0, h.b - len / 8.0, CHECK_SAMPLES);
        let m_k = inner.iter().map(|&x| h.value(x)).fold(f64::INFINITY, f64::min);
        let interior_ok = grid(h.a, h.b, CHECK_SAMPLES)[1..CHECK_SAMPLES].iter().all(|&x| {
            let v = h.value(x);
            v > 0.0 && v <= sup
        });
        if !(sup.is_finite() && m_k > 0.0 && interior_ok) {
            bounds = false;
            b_detail = format!("interval {k}: sup {sup}, inner infimum {m_k}");
        }
    }
    clauses.push(Clause { name: "positive_and_bounded", pass: bounds, detail: b_detail });

    let mut below = true;
    let mut d_detail = String::new();
    let f = w.function();
    for h in &hw.intervals {
        for x in grid(h.a, h.b, 4 * CHECK_SAMPLES) {
            if f.breakpoints().contains(&x) || x == h.a || x == h.b {
                continue;
            }
            let (wv, hv) = (f.eval_side(x, Side::Right), h.value(x));
            if hv > wv + rel(hv, wv) {
                below = false;
                d_detail = format!("at {x}: {hv} > {wv}");
            }
        }
    }
    clauses.push(Clause { name: "dominated_by_weight", pass: below, detail: d_detail });

    let mut ends = true;
    let mut e_detail = String::new();
    for (k, h) in hw.intervals.iter().enumerate() {
        let half_l = crate::function::ess_sup_reciprocal(w, Interval::new(h.a, h.mid).unwrap()).unwrap_or(f64::INFINITY);
        let half_r = crate::function::ess_sup_reciprocal(w, Interval::new(h.mid, h.b).unwrap()).unwrap_or(f64::INFINITY);
        let la = h.left.eval_side(h.a, Side::Right);
        let rb = h.right.eval_side(h.b, Side::Left);
        let ok_a = (la == 0.0) == half_l.is_infinite() && (h.value_a == 0.0) == half_l.is_infinite();
        let ok_b = (rb == 0.0) == half_r.is_infinite() && (h.value_b == 0.0) == half_r.is_infinite();
        if !(ok_a && ok_b) {
            ends = false;
            e_detail = format!("interval {k}: limits ({la}, {rb}), reciprocal bounds ({half_l}, {half_r})");
        }
    }
    clauses.push(Clause { name: "endpoint_vanishing", pass: ends, detail: e_detail });

    let global = hw.intervals.iter().map(|h| h.sup_bound()).fold(0.0, f64::max);
    clauses.push(Clause { name: "global_bound", pass: global.is_finite(), detail: format!("sup = {global}") });

    PropertyReport { pass: clauses.iter().all(|c| c.pass), clauses }
}

/// Whether the complement of the support has negligible measure in `omega`.
pub fn support_full_measure(hw: &HatWeight, omega: Interval) -> bool {
    let covered: f64 = hw
        .intervals
        .iter()
        .map(|h| (h.b.min(omega.hi()) - h.a.max(omega.lo())).max(0.0))
        .sum();
    omega.len() - covered <= 1e-9 * omega.len()
}
