//! A₁ constants, maximal weights, lower semicontinuous envelopes, weighted
//! total variation and growth checks for strictly positive weights.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{integrate, integrate_nodes, merge_nodes, Expr, Interval, PiecewiseFunction, Poly, QuadratureConfig, Side, Weight};

/// Ratio growth tolerated between the coarse and the fine half of a refinement.
const GROWTH_STABILITY: f64 = 1.5;

/// Centers on a uniform grid crossed with log-spaced radii.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallFamily {
    pub centers: usize,
    pub per_decade: usize,
    /// Smallest radius as a fraction of `|Ω0|`.
    pub min_fraction: f64,
    pub max_fraction: f64,
}

impl Default for BallFamily {
    fn default() -> Self {
        BallFamily { centers: 64, per_decade: 20, min_fraction: 1e-3, max_fraction: 0.5 }
    }
}

impl BallFamily {
    pub fn radii(&self, omega: Interval) -> Vec<f64> {
        let (lo, hi) = (self.min_fraction * omega.len(), self.max_fraction * omega.len());
        let decades = (hi / lo).log10();
        let n = (self.per_decade as f64 * decades).ceil().max(1.0) as usize;
        (0..=n).map(|k| if k == n { hi } else { lo * 10f64.powf(decades * k as f64 / n as f64) }).collect()
    }

    pub fn center_grid(&self, omega: Interval) -> Vec<f64> {
        let n = self.centers.max(1);
        (0..n).map(|k| omega.lo() + omega.len() * (k as f64 + 0.5) / n as f64).collect()
    }

    fn check(&self) -> Result<()> {
        if self.centers == 0 || self.per_decade == 0 || !(self.min_fraction > 0.0 && self.min_fraction < self.max_fraction) {
            return Err(Error::BadParameters(format!("{self:?}")));
        }
        Ok(())
    }
}

fn piece_mean(e: &Expr, lo: f64, hi: f64, q: &QuadratureConfig) -> Result<f64> {
    if let Some(c) = e.as_constant() {
        return Ok(c);
    }
    if let Some(f) = e.antiderivative() {
        return Ok((f.limit(hi, Side::Left) - f.limit(lo, Side::Right)) / (hi - lo));
    }
    let g = |x: f64, s: Side| if x == lo || x == hi { e.limit(x, s) } else { e.eval(x) };
    Ok(integrate_nodes(&[lo, hi], &g, q)?.value / (hi - lo))
}

/// `⨍_{(lo, hi)} w`, averaging closed-form piece means by length.
pub fn ball_average(w: &Weight, lo: f64, hi: f64, q: &QuadratureConfig) -> Result<f64> {
    let f = w.function();
    let d = f.domain();
    if !(lo < hi) || lo < d.lo() || hi > d.hi() {
        return Err(Error::InvalidInterval { lo, hi });
    }
    let len = hi - lo;
    let mut total = 0.0;
    for (k, e) in f.pieces().iter().enumerate() {
        let (a, b) = f.piece_interval(k);
        let (a, b) = (a.max(lo), b.min(hi));
        if a < b {
            total += ((b - a) / len) * piece_mean(e, a, b, q)?;
        }
    }
    Ok(total)
}

/// Pointwise value taken as the smaller one-sided limit.
fn lower_value(w: &Weight, x: f64) -> f64 {
    w.eval_side(x, Side::Left).min(w.eval_side(x, Side::Right))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallRatio {
    pub x: f64,
    pub r: f64,
    /// `w(x) / ⨍_{B(x,r)} w`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct A1Report {
    pub best_c: f64,
    pub violating_ball: Option<(f64, f64)>,
    pub resolution: BallFamily,
    pub samples: Vec<BallRatio>,
}

/// Empirical A₁ constant over balls contained in `omega0`.
pub fn a1_constant(w: &Weight, omega0: Interval, family: &BallFamily, q: &QuadratureConfig) -> Result<A1Report> {
    family.check()?;
    if !w.domain().covers(&omega0) {
        return Err(Error::OutOfDomain { x: if omega0.lo() < w.domain().lo() { omega0.lo() } else { omega0.hi() } });
    }
    let floor = w.inf_on(omega0).min(lower_value(w, omega0.lo())).min(lower_value(w, omega0.hi()));
    if !(floor > 0.0) {
        return Err(Error::NotPositive);
    }
    let radii = family.radii(omega0);
    let rows: Vec<Vec<BallRatio>> = family
        .center_grid(omega0)
        .into_par_iter()
        .map(|x| {
            let reach = (x - omega0.lo()).min(omega0.hi() - x);
            let wx = lower_value(w, x);
            radii
                .iter()
                .filter(|&&r| r <= reach)
                .map(|&r| Ok(BallRatio { x, r, ratio: wx / ball_average(w, x - r, x + r, q)? }))
                .collect()
        })
        .collect::<Result<_>>()?;
    let samples: Vec<BallRatio> = rows.into_iter().flatten().collect();
    let worst = samples.iter().min_by(|a, b| a.ratio.total_cmp(&b.ratio));
    let (best_c, violating_ball) = match worst {
        Some(s) if s.ratio < 1.0 => (s.ratio, Some((s.x, s.r))),
        _ => (1.0, None),
    };
    Ok(A1Report { best_c, violating_ball, resolution: *family, samples })
}

/// Best constants as the smallest radius shrinks by a decade per level.
pub fn a1_refinement(w: &Weight, omega0: Interval, family: &BallFamily, levels: usize, q: &QuadratureConfig) -> Result<Vec<f64>> {
    (0..levels)
        .map(|k| {
            let f = BallFamily { min_fraction: family.min_fraction * 10f64.powi(-(k as i32)), centers: family.centers << k, ..*family };
            Ok(a1_constant(w, omega0, &f, q)?.best_c)
        })
        .collect()
}

/// `sup_r ⨍_{B(x,r) ∩ Ω0} w` over the given radii.
pub fn maximal_weight(w: &Weight, omega0: Interval, x: f64, radii: &[f64], q: &QuadratureConfig) -> Result<f64> {
    if !omega0.contains_closed(x) {
        return Err(Error::OutOfDomain { x });
    }
    let mut best = f64::NEG_INFINITY;
    for &r in radii {
        let (lo, hi) = ((x - r).max(omega0.lo()), (x + r).min(omega0.hi()));
        best = best.max(ball_average(w, lo, hi, q)?);
    }
    Ok(best)
}

/// Linear interpolation of the maximal weight (balls clipped to `omega0`) on
/// `n` uniform cells of `grid ⊆ omega0`.
pub fn maximal_weight_function(w: &Weight, omega0: Interval, grid: Interval, n: usize, radii: &[f64], q: &QuadratureConfig) -> Result<Weight> {
    if !omega0.covers(&grid) {
        return Err(Error::BadParameters("grid must lie inside the clipping region".into()));
    }
    let n = n.max(1);
    let values: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|k| {
            let x = if k == n { grid.hi() } else { grid.lo() + grid.len() * k as f64 / n as f64 };
            maximal_weight(w, omega0, x, radii, q)
        })
        .collect::<Result<_>>()?;
    Weight::new(PiecewiseFunction::from_samples(grid, &values)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LscEnvelope {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    /// Grid points where the value lies strictly below both neighbors' limits.
    pub dips: Vec<f64>,
    /// Piecewise-linear realization through `(xs, values)`.
    pub function: PiecewiseFunction,
}

/// Grid envelope from point values and the two one-sided limits at each node.
pub fn envelope_from_samples(xs: &[f64], value: &[f64], left: &[f64], right: &[f64]) -> Result<LscEnvelope> {
    let n = xs.len();
    if n < 2 || value.len() != n || left.len() != n || right.len() != n {
        return Err(Error::BadParameters("sample arrays must share a length of at least 2".into()));
    }
    let mut values = Vec::with_capacity(n);
    let mut dips = Vec::new();
    for k in 0..n {
        let near = left[k].min(right[k]);
        let v = value[k].min(near);
        if value[k] < near - 1e-12 * near.abs().max(1.0) {
            dips.push(xs[k]);
        }
        values.push(v);
    }
    let pieces = (0..n - 1).map(|k| Expr::Poly(Poly::linear_through(xs[k], values[k], xs[k + 1], values[k + 1]))).collect();
    let function = PiecewiseFunction::new(xs.to_vec(), pieces)?;
    Ok(LscEnvelope { xs: xs.to_vec(), values, dips, function })
}

/// Largest lower semicontinuous minorant realized on `n` uniform cells.
pub fn lsc_envelope(w: &Weight, n: usize) -> Result<LscEnvelope> {
    let d = w.domain();
    let n = n.max(1);
    let xs: Vec<f64> = (0..=n).map(|k| if k == n { d.hi() } else { d.lo() + d.len() * k as f64 / n as f64 }).collect();
    let left: Vec<f64> = xs.iter().map(|&x| w.eval_side(x, Side::Left)).collect();
    let right: Vec<f64> = xs.iter().map(|&x| w.eval_side(x, Side::Right)).collect();
    let value: Vec<f64> = xs.iter().map(|&x| w.function().evaluate(x).unwrap_or(f64::INFINITY)).collect();
    envelope_from_samples(&xs, &value, &left, &right)
}

/// `∫ w |u′| + Σ w_*(x_j) |[u](x_j)|` over the open interval `omega`.
pub fn baldi_tv(w: &Weight, u: &PiecewiseFunction, omega: Interval, q: &QuadratureConfig) -> Result<f64> {
    for d in [w.domain(), u.domain()] {
        if !d.covers(&omega) {
            return Err(Error::OutOfDomain { x: if omega.lo() < d.lo() { omega.lo() } else { omega.hi() } });
        }
    }
    let du = u.derivative().ok_or_else(|| Error::InvalidFunction("no derivative".into()))?;
    let wf = w.function();
    let nodes = merge_nodes(&[u.breakpoints(), wf.breakpoints(), &du.interior_zeros()], omega.lo(), omega.hi());
    let mut total = 0.0;
    for (k, seg) in nodes.windows(2).enumerate() {
        let (a, b) = (seg[0], seg[1]);
        let m = 0.5 * (a + b);
        let constant = match wf.locate(m) {
            crate::function::Location::Interior(j) => wf.pieces()[j].as_constant(),
            _ => None,
        };
        total += match constant {
            Some(c) => c * (u.eval_side(b, Side::Left) - u.eval_side(a, Side::Right)).abs(),
            None => integrate(wf, &du, Interval::new(a, b)?, q)?.value.abs(),
        };
        if k + 2 < nodes.len() {
            let jump = (u.eval_side(b, Side::Right) - u.eval_side(b, Side::Left)).abs();
            if jump > 0.0 {
                total += lower_value(w, b) * jump;
            }
        }
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BallPair {
    pub x: f64,
    pub r: f64,
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub exponent: f64,
    pub best_c: f64,
    /// `(r/s threshold, best constant over pairs with r/s at least the threshold)`.
    pub trend: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Concentric pairs inside `omega0` with `r = s·2^{-k}`, `k = 0..=levels`.
pub fn nested_pairs(omega0: Interval, centers: usize, levels: usize) -> Vec<BallPair> {
    let n = centers.max(1);
    let mut out = Vec::new();
    for j in 0..n {
        let x = omega0.lo() + omega0.len() * (j as f64 + 0.5) / n as f64;
        let s = (x - omega0.lo()).min(omega0.hi() - x);
        out.extend((0..=levels).map(|k| BallPair { x, r: s * 0.5f64.powi(k as i32), s }));
    }
    out
}

/// Smallest `c` with `∫_{B_r} w / ∫_{B_s} w ≤ c (r/s)^{q/(q−1)}` over the pairs.
pub fn local_growth_check(w: &Weight, q_exponent: f64, pairs: &[BallPair], q: &QuadratureConfig) -> Result<GrowthReport> {
    if !(q_exponent > 1.0) {
        return Err(Error::BadParameters(format!("growth exponent {q_exponent} must exceed 1")));
    }
    if pairs.is_empty() {
        return Err(Error::BadParameters("no ball pairs".into()));
    }
    let p = q_exponent / (q_exponent - 1.0);
    let d = w.domain();
    let mass = |x: f64, r: f64| -> Result<f64> {
        let (lo, hi) = ((x - r).max(d.lo()), (x + r).min(d.hi()));
        Ok(ball_average(w, lo, hi, q)? * (hi - lo))
    };
    let mut rows: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|b| {
            if !(b.r > 0.0 && b.r <= b.s) {
                return Err(Error::BadParameters(format!("need 0 < r ≤ s, got {b:?}")));
            }
            let (inner, outer) = (mass(b.x, b.r)?, mass(b.x, b.s)?);
            let ratio = if inner == 0.0 { 0.0 } else { inner / outer };
            let t = b.r / b.s;
            Ok((t, ratio / t.powf(p)))
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut trend: Vec<(f64, f64)> = Vec::new();
    let mut best = 0.0f64;
    for (t, c) in rows {
        best = best.max(c);
        match trend.last_mut() {
            Some(last) if last.0 == t => last.1 = best,
            _ => trend.push((t, best)),
        }
    }
    let coarse = trend[(trend.len() - 1) / 2].1;
    let pass = best.is_finite() && best <= GROWTH_STABILITY * coarse;
    Ok(GrowthReport { exponent: p, best_c: best, trend, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BaldiPoincare {
    /// `(⨍_B |u − u_B|^q w)^{1/q}` with the Lebesgue mean `u_B`.
    pub lhs: f64,
    pub tv: f64,
    /// `r · TV(u; w)(B)`.
    pub raw_rhs: f64,
    /// `r · TV(u; w)(B) / |B|`.
    pub rhs_scaled: f64,
    /// `lhs / rhs_scaled`, an empirical estimate of the constant.
    pub ratio: f64,
}

pub fn baldi_poincare_check(
    w: &Weight,
    u: &PiecewiseFunction,
    x: f64,
    r: f64,
    q_exponent: f64,
    q: &QuadratureConfig,
) -> Result<BaldiPoincare> {
    if !(q_exponent > 1.0 && r > 0.0) {
        return Err(Error::BadParameters(format!("q = {q_exponent}, r = {r}")));
    }
    let ball = Interval::new(x - r, x + r)?;
    let one = PiecewiseFunction::constant(u.domain(), 1.0);
    let mean = integrate(u, &one, ball, q)?.value / ball.len();
    let centered = u.add_constant(-mean);
    let wf = w.function();
    let nodes = merge_nodes(&[u.breakpoints(), wf.breakpoints(), &centered.interior_zeros()], ball.lo(), ball.hi());
    let integrand = |y: f64, s: Side| centered.eval_side(y, s).abs().powf(q_exponent) * wf.eval_side(y, s);
    let lhs = (integrate_nodes(&nodes, &integrand, q)?.value / ball.len()).powf(1.0 / q_exponent);
    let tv = baldi_tv(w, u, ball, q)?;
    let raw_rhs = r * tv;
    let rhs_scaled = raw_rhs / ball.len();
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs_scaled };
    Ok(BaldiPoincare { lhs, tv, raw_rhs, rhs_scaled, ratio })
}
