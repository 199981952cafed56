//! Absolutely continuous approximants converging in `L¹(ŵ)` with converging
//! energies: tapered derivatives, midpoint primitives, bridges and collars.

use rayon::prelude::*;
use serde::Serialize;

use super::functional::relaxed_functional;
use crate::degeneracy::DegeneracyDecomposition;
use crate::error::{Error, Result};
use crate::function::{ess_sup_reciprocal, integrate_abs, Expr, Interval, PiecewiseFunction, Poly, QuadratureConfig, Side, Weight};
use crate::hat::{HatInterval, HatWeight};
use crate::pairing::{pairing_total_variation, precise_representative};

/// Halvings of the taper width tried before giving up on the schedule.
const MAX_HALVINGS: usize = 40;

/// Default schedule of recovery indices.
pub const DEFAULT_SCHEDULE: [usize; 4] = [8, 16, 32, 64];

#[derive(Clone, Debug, PartialEq)]
pub struct Mollified {
    /// Approximate derivative on the whole domain, zero off the intervals.
    pub v: PiecewiseFunction,
    /// Taper (and smoothing window) width used on each interval.
    pub widths: Vec<f64>,
    /// `‖v − u′‖_{L¹(I,w)}`.
    pub error: f64,
    pub target: f64,
}

fn linear(x0: f64, y0: f64, x1: f64, y1: f64) -> Expr {
    Expr::Poly(Poly::linear_through(x0, y0, x1, y1))
}

/// `f` with `[lo, hi]` replaced by the chord between its end values.
fn chord_window(f: &PiecewiseFunction, lo: f64, hi: f64) -> Result<PiecewiseFunction> {
    let d = f.domain();
    let (y0, y1) = (f.eval_side(lo, Side::Left), f.eval_side(hi, Side::Right));
    let mut parts = Vec::new();
    if lo > d.lo() {
        parts.push(f.restrict(d.lo(), lo)?);
    }
    parts.push(PiecewiseFunction::single(Interval::new(lo, hi)?, linear(lo, y0, hi, y1)));
    if hi < d.hi() {
        parts.push(f.restrict(hi, d.hi())?);
    }
    PiecewiseFunction::concat(&parts)
}

/// Continuous approximation of `u′` on one interval: linear smoothing across
/// derivative jumps and linear tapers at degenerate ends.
fn taper_interval(du: &PiecewiseFunction, i: Interval, delta: f64, taper_lo: bool, taper_hi: bool) -> Result<PiecewiseFunction> {
    let (a, b) = (i.lo(), i.hi());
    let mut f = du.restrict(a, b)?;
    let lo_edge = if taper_lo { a + delta } else { a };
    let hi_edge = if taper_hi { b - delta } else { b };
    let kinks: Vec<f64> = f.jumps().into_iter().map(|j| j.0).collect();
    for (k, &x) in kinks.iter().enumerate() {
        let prev = if k == 0 { lo_edge } else { kinks[k - 1] };
        let next = if k + 1 == kinks.len() { hi_edge } else { kinks[k + 1] };
        let half = (0.5 * delta).min((x - prev) / 3.0).min((next - x) / 3.0);
        if half > 0.0 {
            f = chord_window(&f, x - half, x + half)?;
        }
    }
    let mut m_breaks = vec![a];
    let mut m_pieces = Vec::new();
    if taper_lo {
        m_breaks.push(a + delta);
        m_pieces.push(linear(a, 0.0, a + delta, 1.0));
    }
    if hi_edge > *m_breaks.last().unwrap() {
        m_breaks.push(hi_edge);
        m_pieces.push(Expr::constant(1.0));
    }
    if taper_hi {
        m_breaks.push(b);
        m_pieces.push(linear(b - delta, 1.0, b, 0.0));
    }
    let ramp = PiecewiseFunction::new(m_breaks, m_pieces)?;
    f.mul(&ramp)
}

/// Whether the auxiliary weight vanishes at each end of `i`.
fn degenerate_ends(w: &Weight, i: Interval) -> Result<(bool, bool)> {
    let lo = ess_sup_reciprocal(w, Interval::new(i.lo(), i.mid())?)?.is_infinite();
    let hi = ess_sup_reciprocal(w, Interval::new(i.mid(), i.hi())?)?.is_infinite();
    Ok((lo, hi))
}

/// `v_h` with `‖v_h − u′‖_{L¹(I,w)} ≤ 1/h`.
pub fn mollify_derivative(
    w: &Weight,
    u: &PiecewiseFunction,
    dec: &DegeneracyDecomposition,
    h: usize,
    q: &QuadratureConfig,
) -> Result<Mollified> {
    if h == 0 {
        return Err(Error::BadParameters("h must be positive".into()));
    }
    let du = u.derivative().ok_or(Error::MissingDerivative)?;
    let target = 1.0 / h as f64;
    let ends: Vec<(bool, bool)> = dec.intervals.iter().map(|&i| degenerate_ends(w, i)).collect::<Result<_>>()?;
    let mut widths: Vec<f64> = dec.intervals.iter().map(|i| i.len() / (4.0 * h as f64)).collect();
    let mut achieved = f64::INFINITY;
    for _ in 0..=MAX_HALVINGS {
        let mut parts = Vec::with_capacity(dec.len());
        let mut err = 0.0;
        for (k, &i) in dec.intervals.iter().enumerate() {
            let v = taper_interval(&du, i, widths[k], ends[k].0, ends[k].1)?;
            let diff = v.add(&du.scale(-1.0))?;
            err += integrate_abs(&diff, w.function(), i, q)?.value;
            parts.push(v);
        }
        achieved = err;
        if err <= target {
            let v = fill_gaps(dec, parts)?;
            return Ok(Mollified { v, widths, error: err, target });
        }
        widths.iter_mut().for_each(|d| *d *= 0.5);
    }
    Err(Error::ScheduleUnreachable { h, achieved, target })
}

/// Joins per-interval functions, filling gaps with the given bridges.
fn join(dec: &DegeneracyDecomposition, parts: Vec<PiecewiseFunction>, bridge: impl Fn(usize, Interval) -> Expr) -> Result<PiecewiseFunction> {
    let omega = dec.domain;
    let mut all = Vec::new();
    let mut cursor = omega.lo();
    for (k, p) in parts.into_iter().enumerate() {
        let lo = p.domain().lo();
        if lo > cursor {
            let g = Interval::new(cursor, lo)?;
            all.push(PiecewiseFunction::single(g, bridge(k, g)));
        }
        cursor = p.domain().hi();
        all.push(p);
    }
    if cursor < omega.hi() {
        let g = Interval::new(cursor, omega.hi())?;
        all.push(PiecewiseFunction::single(g, bridge(dec.len(), g)));
    }
    PiecewiseFunction::concat(&all)
}

fn fill_gaps(dec: &DegeneracyDecomposition, parts: Vec<PiecewiseFunction>) -> Result<PiecewiseFunction> {
    join(dec, parts, |_, _| Expr::constant(0.0))
}

/// `ũ_h(x) = u(mid) − ∫_x^{mid} v_h` on `i`.
pub fn build_primitive(u: &PiecewiseFunction, v: &PiecewiseFunction, i: Interval) -> Result<PiecewiseFunction> {
    let m = i.mid();
    let um = precise_representative(u, m)?.u_half;
    v.restrict(i.lo(), i.hi())?.primitive(m, um)
}

/// Cumulative integrals of ŵ from the midpoint of one interval.
#[derive(Clone, Debug, PartialEq)]
pub struct BarWeight {
    pub a: f64,
    pub b: f64,
    pub q1: f64,
    pub mid: f64,
    pub q3: f64,
    /// `∫_{mid}^x ŵ` on `[a, b]`.
    primitive: PiecewiseFunction,
}

impl BarWeight {
    /// `∫_{mid}^x ŵ` on the left quarter, `∫_{q1}^{q3} ŵ` on the middle half,
    /// `∫_x^{mid} ŵ` on the right quarter.
    pub fn eval(&self, x: f64) -> f64 {
        let p = |x: f64| self.primitive.eval_side(x, Side::Right);
        if x < self.a || x > self.b {
            0.0
        } else if x <= self.q1 {
            p(x)
        } else if x < self.q3 {
            p(self.q3) - p(self.q1)
        } else {
            -p(x)
        }
    }

    /// `|w̄(b)|`, the mass of ŵ on the right half.
    pub fn right_mass(&self) -> f64 {
        self.primitive.eval_side(self.b, Side::Left).abs()
    }

    pub fn left_mass(&self) -> f64 {
        self.primitive.eval_side(self.a, Side::Right).abs()
    }
}

pub fn bar_weight(hw: &HatWeight, i: usize) -> Result<BarWeight> {
    let h = hw.intervals().get(i).ok_or_else(|| Error::BadParameters(format!("no interval {i}")))?;
    let primitive = hw.function().restrict(h.a, h.b)?.primitive(h.mid, 0.0)?;
    Ok(BarWeight { a: h.a, b: h.b, q1: h.q1, mid: h.mid, q3: h.q3, primitive })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryStep {
    pub h: usize,
    #[serde(skip)]
    pub u_h: PiecewiseFunction,
    pub l1_hat_error: f64,
    pub energy: f64,
    pub relaxed: f64,
    pub energy_gap: f64,
    pub derivative_error: f64,
    pub midpoint_error: f64,
    pub collar_energy: f64,
    pub ramp_term: f64,
}

/// Collar multiplier on `[lo, hi]`: normalized mass of ŵ between `x` and
/// the touching end, rising from 0 there to 1 at the inner edge.
fn collar_ramp(hw: &HatWeight, lo: f64, hi: f64, touching_at_hi: bool) -> Result<(PiecewiseFunction, f64)> {
    let f = hw.function().restrict(lo, hi)?;
    if touching_at_hi {
        let p = f.primitive(hi, 0.0)?;
        let total = -p.eval_side(lo, Side::Right);
        Ok((p.scale(-1.0 / total), total))
    } else {
        let p = f.primitive(lo, 0.0)?;
        let total = p.eval_side(hi, Side::Left);
        Ok((p.scale(1.0 / total), total))
    }
}

struct Collar {
    lo: f64,
    hi: f64,
    total: f64,
}

fn interval_part(
    u: &PiecewiseFunction,
    v: &PiecewiseFunction,
    hw: &HatInterval,
    hat: &HatWeight,
    i: Interval,
    collar: f64,
    touch_lo: bool,
    touch_hi: bool,
    collars: &mut Vec<Collar>,
) -> Result<PiecewiseFunction> {
    let (a, m, b) = (hw.a, hw.mid, hw.b);
    let tilde = build_primitive(u, v, i)?;
    let mut parts = Vec::new();
    if touch_lo {
        let (rho, total) = collar_ramp(hat, a, a + collar, false)?;
        parts.push(u.restrict(a, a + collar)?.mul(&rho)?);
        parts.push(u.restrict(a + collar, m)?);
        collars.push(Collar { lo: a, hi: a + collar, total });
    } else {
        parts.push(tilde.restrict(a, m)?);
    }
    if touch_hi {
        let (rho, total) = collar_ramp(hat, b - collar, b, true)?;
        parts.push(u.restrict(m, b - collar)?);
        parts.push(u.restrict(b - collar, b)?.mul(&rho)?);
        collars.push(Collar { lo: b - collar, hi: b, total });
    } else {
        parts.push(tilde.restrict(m, b)?);
    }
    PiecewiseFunction::concat(&parts)
}

/// One member of the recovery sequence for `u` at index `h`.
pub fn build_recovery(
    w: &Weight,
    hw: &HatWeight,
    dec: &DegeneracyDecomposition,
    u: &PiecewiseFunction,
    h: usize,
    q: &QuadratureConfig,
) -> Result<RecoveryStep> {
    let relaxed = relaxed_functional(w, u, dec, hw, q)?;
    let relaxed = relaxed.value.ok_or(Error::NotInDomain)?;
    let collar = 1.0 / h.max(1) as f64;
    let bound = dec.intervals.iter().map(|i| i.len() / 4.0).fold(f64::INFINITY, f64::min);
    let touching = (0..dec.len()).any(|k| dec.touches_next(k));
    if touching && !(collar < bound) {
        return Err(Error::HNotAdmissible { h, bound });
    }
    let moll = mollify_derivative(w, u, dec, h, q)?;
    let mut collars = Vec::new();
    let mut parts = Vec::with_capacity(dec.len());
    for (k, &i) in dec.intervals.iter().enumerate() {
        let p = interval_part(u, &moll.v, &hw.intervals()[k], hw, i, collar, dec.touches_prev(k), dec.touches_next(k), &mut collars)?;
        parts.push(p);
    }
    let ends: Vec<(f64, f64)> = parts.iter().map(|p| (p.eval_side(p.domain().lo(), Side::Right), p.eval_side(p.domain().hi(), Side::Left))).collect();
    let n = parts.len();
    let u_h = join(dec, parts, |k, g| {
        if k == 0 {
            Expr::constant(ends[0].0)
        } else if k == n {
            Expr::constant(ends[n - 1].1)
        } else {
            linear(g.lo(), ends[k - 1].1, g.hi(), ends[k].0)
        }
    })?;

    let energy = pairing_total_variation(w, &u_h, dec.domain, q)?.value;
    let diff = u_h.add(&u.scale(-1.0))?;
    let l1_hat_error = dec.intervals.iter().map(|&i| integrate_abs(&diff, hw.function(), i, q).map(|e| e.value)).sum::<Result<f64>>()?;
    let midpoint_error = dec
        .intervals
        .iter()
        .map(|i| Ok((u_h.eval_side(i.mid(), Side::Right) - precise_representative(u, i.mid())?.u_half).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut collar_energy = 0.0;
    let mut ramp_term = 0.0;
    let wu = w.function().mul(hw.function())?;
    for c in &collars {
        let ci = Interval::new(c.lo, c.hi)?;
        collar_energy += pairing_total_variation(w, &u_h, ci, q)?.value;
        ramp_term += integrate_abs(u, &wu, ci, q)?.value / c.total;
    }
    Ok(RecoveryStep {
        h,
        u_h,
        l1_hat_error,
        energy,
        relaxed,
        energy_gap: (energy - relaxed).abs(),
        derivative_error: moll.error,
        midpoint_error,
        collar_energy,
        ramp_term,
    })
}

/// Recovery steps over a schedule, computed in parallel.
pub fn recovery_schedule(
    w: &Weight,
    hw: &HatWeight,
    dec: &DegeneracyDecomposition,
    u: &PiecewiseFunction,
    schedule: &[usize],
    q: &QuadratureConfig,
) -> Result<Vec<RecoveryStep>> {
    schedule.par_iter().map(|&h| build_recovery(w, hw, dec, u, h, q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degeneracy::detect_intervals;
    use crate::hat::build_hat;
    use crate::poincare::random_corpus;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn setup(w: Weight) -> (Weight, DegeneracyDecomposition, HatWeight) {
        let dec = detect_intervals(&w, w.domain(), 1e-6, 64).unwrap();
        let hw = build_hat(&w, &dec).unwrap();
        (w, dec, hw)
    }

    fn quartic() -> (Weight, DegeneracyDecomposition, HatWeight) {
        setup(Weight::new(PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[1.0, 0.0, -2.0, 0.0, 1.0])).unwrap())
    }

    #[test]
    fn untouched_derivative_on_positive_weight() {
        let (w, dec, _) = setup(Weight::new(PiecewiseFunction::constant(iv(0.0, 1.0), 1.0)).unwrap());
        let u = PiecewiseFunction::polynomial(iv(0.0, 1.0), &[0.0, 1.0, 1.0]);
        let m = mollify_derivative(&w, &u, &dec, 8, &QuadratureConfig::default()).unwrap();
        assert_eq!(m.error, 0.0);
        let p = build_primitive(&u, &m.v, iv(0.0, 1.0)).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert!((p.eval_side(x, Side::Right) - u.eval_side(x, Side::Right)).abs() < 1e-15);
        }
        let zero = PiecewiseFunction::constant(iv(0.0, 1.0), 0.0);
        let c = build_primitive(&u, &zero, iv(0.0, 1.0)).unwrap();
        assert_eq!(c.eval_side(0.1, Side::Right), 0.75);
    }

    #[test]
    fn taper_on_degenerate_ends() {
        let w = Weight::new(PiecewiseFunction::polynomial(iv(-1.0, 1.0), &[1.0, 0.0, -2.0, 0.0, 1.0])).unwrap();
        let (w, dec, _) = setup(w);
        let u = PiecewiseFunction::polynomial(iv(-1.0, 1.0), &[0.0, 1.0]);
        let q = QuadratureConfig::default();
        let m = mollify_derivative(&w, &u, &dec, 8, &q).unwrap();
        assert!(m.error > 0.0 && m.error <= 1.0 / 8.0);
        let d = m.widths[0];
        assert_eq!(m.v.eval_side(-1.0, Side::Right), 0.0);
        assert!((m.v.eval_side(-1.0 + d / 2.0, Side::Right) - 0.5).abs() < 1e-14);
        assert_eq!(m.v.eval_side(0.0, Side::Right), 1.0);
        // Closed-form taper error: ∫_0^d (1 − t/d)(1 − (1 − t)²)² dt on each side.
        let n = 100_000;
        let oracle: f64 = 2.0
            * (0..n)
                .map(|k| {
                    let t = d * (k as f64 + 0.5) / n as f64;
                    let x = -1.0 + t;
                    (1.0 - t / d) * (1.0 - x * x).powi(2) * d / n as f64
                })
                .sum::<f64>();
        assert!((m.error - oracle).abs() < 1e-12, "{} vs {oracle}", m.error);
        let p = build_primitive(&u, &m.v, iv(-1.0, 1.0)).unwrap();
        assert!((p.eval_side(0.5, Side::Right) - 0.5).abs() < 1e-14);
        assert!((p.eval_side(1.0, Side::Left) - (1.0 - d / 2.0)).abs() < 1e-14);
    }

    #[test]
    fn derivative_jump_is_smoothed() {
        let (w, dec, _) = setup(Weight::new(PiecewiseFunction::constant(iv(0.0, 1.0), 1.0)).unwrap());
        let u = PiecewiseFunction::new(
            vec![0.0, 0.5, 1.0],
            vec![Expr::Poly(Poly::new(0.0, vec![0.0, 1.0])), Expr::Poly(Poly::new(0.5, vec![0.5, -1.0]))],
        )
        .unwrap();
        let m = mollify_derivative(&w, &u, &dec, 8, &QuadratureConfig::default()).unwrap();
        assert!(m.v.jumps().is_empty());
        // Window of half-width δ/2 = 1/64 around ½: error = 2·(½·(1/64)·1) = 1/64.
        assert!((m.error - 1.0 / 64.0).abs() < 1e-14);
    }

    #[test]
    fn bar_weight_values() {
        let (_, _, hw) = setup(Weight::new(PiecewiseFunction::constant(iv(0.0, 1.0), 1.0)).unwrap());
        let bw = bar_weight(&hw, 0).unwrap();
        let h = 16.0;
        assert!((bw.eval(1.0 - 1.0 / h) - (1.0 / h - 0.5)).abs() < 1e-15);
        assert_eq!(bw.eval(0.5), 0.5);
        assert!((bw.eval(0.1) + 0.4).abs() < 1e-15);
        assert!((bw.right_mass() - 0.5).abs() < 1e-15);
        // w̄′ = −ŵ on the right quarter.
        let (_, _, hw) = quartic();
        let bw = bar_weight(&hw, 1).unwrap();
        let e = 1e-6;
        for x in [0.8, 0.9, 0.95] {
            let fd = (bw.eval(x + e) - bw.eval(x - e)) / (2.0 * e);
            assert!((fd + hw.value(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn identity_on_touching_weight() {
        let (w, dec, hw) = quartic();
        let u = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.0, 1.0]);
        let q = QuadratureConfig::default();
        let steps = recovery_schedule(&w, &hw, &dec, &u, &DEFAULT_SCHEDULE, &q).unwrap();
        for s in &steps {
            for (x, l, r) in s.u_h.jumps() {
                assert!((l - r).abs() < 1e-10, "h = {} jump at {x}", s.h);
            }
            assert!(s.midpoint_error < 1e-14);
            assert!((s.relaxed - 92.0 / 15.0).abs() < 1e-10);
        }
        for p in steps.windows(2) {
            assert!(p[1].l1_hat_error < p[0].l1_hat_error);
            assert!(p[1].energy_gap < p[0].energy_gap);
            assert!(p[1].ramp_term < p[0].ramp_term);
        }
        // u_h flattens towards the touching points.
        assert!(steps[0].u_h.eval_side(1.0, Side::Left).abs() < 1e-10);
    }

    #[test]
    fn corpus_functions_converge() {
        let (w, dec, hw) = quartic();
        let q = QuadratureConfig::default();
        for u in random_corpus(&dec, 3, 11).unwrap() {
            let steps = recovery_schedule(&w, &hw, &dec, &u, &DEFAULT_SCHEDULE, &q).unwrap();
            let last = steps.last().unwrap();
            assert!(last.energy_gap <= 1e-2 * (1.0 + last.relaxed), "{last:?}");
            assert!(last.l1_hat_error < steps[0].l1_hat_error);
        }
    }

    #[test]
    fn admissibility_guard() {
        let (w, dec, hw) = quartic();
        let u = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.0, 1.0]);
        assert!(matches!(
            build_recovery(&w, &hw, &dec, &u, 4, &QuadratureConfig::default()),
            Err(Error::HNotAdmissible { .. })
        ));
    }

    #[test]
    fn separated_intervals_are_bridged() {
        let f = PiecewiseFunction::new(
            vec![0.0, 1.0, 2.0, 3.0],
            vec![Expr::constant(1.0), Expr::constant(0.0), Expr::constant(1.0)],
        )
        .unwrap();
        let (w, dec, hw) = setup(Weight::new(f).unwrap());
        assert_eq!(dec.len(), 2);
        let u = PiecewiseFunction::polynomial(iv(0.0, 3.0), &[0.0, 1.0]);
        let s = build_recovery(&w, &hw, &dec, &u, 8, &QuadratureConfig::default()).unwrap();
        assert!(s.u_h.jumps().is_empty());
        assert!((s.u_h.eval_side(1.5, Side::Right) - 1.5).abs() < 1e-14);
        assert!(s.energy_gap < 1e-12 && s.l1_hat_error < 1e-12);
    }
}
