//! Maximal open set on which `1/w` is locally bounded, as ordered intervals.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::{ess_sup_reciprocal, Expr, Interval, Side, Weight};

/// Relative level below which a sampled value counts as a zero.
pub const ZERO_THRESHOLD: f64 = 1e-12;
/// Default cap on the number of reported intervals.
pub const DEFAULT_MAX_INTERVALS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegeneracyDecomposition {
    pub domain: Interval,
    pub intervals: Vec<Interval>,
    /// Exact count, `None` when the decomposition was truncated.
    pub n_w: Option<usize>,
    pub truncated: bool,
    /// Isolated points where the weight vanishes.
    pub zero_set_points: Vec<f64>,
    /// Closed segments on which the weight vanishes.
    pub zero_segments: Vec<(f64, f64)>,
}

impl DegeneracyDecomposition {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Index of the interval containing `x` in its interior.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        self.intervals.iter().position(|i| i.contains(x))
    }

    /// Whether interval `i` shares its right end with interval `i + 1`.
    pub fn touches_next(&self, i: usize) -> bool {
        i + 1 < self.intervals.len() && self.intervals[i].hi() == self.intervals[i + 1].lo()
    }

    /// Whether interval `i` shares its left end with interval `i - 1`.
    pub fn touches_prev(&self, i: usize) -> bool {
        i > 0 && self.touches_next(i - 1)
    }

    /// Total length of the intervals.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|i| i.len()).sum()
    }
}

/// Degenerate set found in one piece.
#[derive(Default)]
struct PieceScan {
    points: Vec<f64>,
    segments: Vec<(f64, f64)>,
    /// Everything at or below this abscissa is unresolved.
    unresolved_below: Option<f64>,
}

fn scan_piece(e: &Expr, a: f64, b: f64, resolution: f64, cap: usize) -> PieceScan {
    let mut out = PieceScan::default();
    if let Some(z) = e.zeros(a, b, cap) {
        if z.everywhere {
            out.segments.push((a, b));
            return out;
        }
        out.points = z.points;
        if z.truncated {
            out.unresolved_below = out.points.first().copied();
        }
        for (x, side) in [(a, Side::Right), (b, Side::Left)] {
            if e.limit(x, side) == 0.0 {
                out.points.push(x);
            }
        }
        return out;
    }
    sampled_scan(e, a, b, resolution, &mut out);
    out
}

/// Threshold scan for pieces without analytic zeros.
fn sampled_scan(e: &Expr, a: f64, b: f64, resolution: f64, out: &mut PieceScan) {
    let n = (((b - a) / resolution).ceil() as usize).clamp(10_000, 2_000_000);
    let xs: Vec<f64> = (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect();
    let vals: Vec<f64> = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| if k == 0 { e.limit(x, Side::Right) } else if k == n { e.limit(x, Side::Left) } else { e.eval(x) })
        .collect();
    let peak = vals.iter().filter(|v| v.is_finite()).fold(0.0f64, |m, v| m.max(v.abs()));
    let theta = ZERO_THRESHOLD * peak;
    let low: Vec<bool> = vals.iter().map(|v| !(v.abs() > theta)).collect();
    let mut k = 0;
    while k <= n {
        if !low[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && low[k + 1] {
            k += 1;
        }
        let end = k;
        let refine = |inside: usize, outside: usize| -> f64 {
            let (mut p, mut q) = (xs[inside], xs[outside]);
            while (q - p).abs() > resolution * 1e-3 {
                let m = 0.5 * (p + q);
                if e.eval(m).abs() <= theta {
                    p = m;
                } else {
                    q = m;
                }
            }
            p
        };
        let lo = if start > 0 { refine(start, start - 1) } else { xs[0] };
        let hi = if end < n { refine(end, end + 1) } else { xs[n] };
        if hi - lo <= resolution {
            out.points.push(0.5 * (lo + hi));
        } else {
            out.segments.push((lo, hi));
        }
        k += 1;
    }
}

/// Locates the nondegenerate intervals of `w` on `omega`.
pub fn detect_intervals(w: &Weight, omega: Interval, resolution: f64, max_intervals: usize) -> Result<DegeneracyDecomposition> {
    if !(resolution > 0.0) || max_intervals == 0 {
        return Err(Error::BadParameters(format!("resolution = {resolution}, max_intervals = {max_intervals}")));
    }
    let f = w.function();
    if !f.domain().covers(&omega) {
        return Err(Error::OutOfDomain { x: omega.lo() });
    }
    let cap = max_intervals + 2;
    let jobs: Vec<(usize, f64, f64)> = (0..f.pieces().len())
        .filter_map(|k| {
            let (a, b) = f.piece_interval(k);
            let (lo, hi) = (a.max(omega.lo()), b.min(omega.hi()));
            (lo < hi).then_some((k, lo, hi))
        })
        .collect();
    let scans: Vec<PieceScan> = jobs.par_iter().map(|&(k, lo, hi)| scan_piece(&f.pieces()[k], lo, hi, resolution, cap)).collect();

    let mut points: Vec<f64> = Vec::new();
    let mut segments: Vec<(f64, f64)> = Vec::new();
    let mut unresolved: Option<f64> = None;
    for s in scans {
        points.extend(s.points);
        segments.extend(s.segments);
        if let Some(u) = s.unresolved_below {
            unresolved = Some(unresolved.map_or(u, |v: f64| v.max(u)));
        }
    }
    if let Some(u) = unresolved {
        segments.push((omega.lo(), u));
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + a.abs()));
    segments.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Merge overlapping segments and absorb points lying on them.
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in segments {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    points.retain(|&p| !merged.iter().any(|&(lo, hi)| p >= lo && p <= hi));

    // Cut points in increasing order.
    let mut cuts: Vec<(f64, f64)> = points.iter().map(|&p| (p, p)).chain(merged.iter().copied()).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut intervals = Vec::new();
    let mut cursor = omega.lo();
    for &(lo, hi) in &cuts {
        if lo > cursor {
            intervals.push(Interval::new(cursor, lo)?);
        }
        cursor = cursor.max(hi);
    }
    if cursor < omega.hi() {
        intervals.push(Interval::new(cursor, omega.hi())?);
    }
    if intervals.is_empty() && unresolved.is_none() {
        return Err(Error::EmptyDecomposition);
    }
    let mut truncated = unresolved.is_some();
    if intervals.len() > max_intervals {
        truncated = true;
        let drop = intervals.len() - max_intervals;
        intervals.drain(..drop);
    }
    if truncated {
        let first = intervals.first().map_or(omega.hi(), |i| i.lo());
        points.retain(|&p| p >= first);
    }
    let n_w = (!truncated).then_some(intervals.len());
    Ok(DegeneracyDecomposition { domain: omega, intervals, n_w, truncated, zero_set_points: points, zero_segments: merged })
}

/// `ess sup_K 1/w` for a compact `K` strictly inside one interval.
pub fn local_bound_constant(w: &Weight, dec: &DegeneracyDecomposition, k: Interval) -> Result<f64> {
    let inside = dec.intervals.iter().any(|i| i.lo() < k.lo() && k.hi() < i.hi());
    if !inside {
        return Err(Error::NotCompactlyContained { lo: k.lo(), hi: k.hi() });
    }
    ess_sup_reciprocal(w, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::PiecewiseFunction;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn quartic() -> Weight {
        Weight::new(PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[1.0, 0.0, -2.0, 0.0, 1.0])).unwrap()
    }

    #[test]
    fn quartic_has_three_intervals() {
        let d = detect_intervals(&quartic(), iv(-2.0, 2.0), 1e-6, 64).unwrap();
        assert_eq!(d.n_w, Some(3));
        assert_eq!(d.intervals, vec![iv(-2.0, -1.0), iv(-1.0, 1.0), iv(1.0, 2.0)]);
        assert!(d.touches_next(0) && d.touches_next(1) && !d.touches_next(2));
    }

    #[test]
    fn positive_weight_is_one_interval() {
        let w = Weight::new(PiecewiseFunction::constant(iv(0.0, 1.0), 1.0)).unwrap();
        let d = detect_intervals(&w, iv(0.0, 1.0), 1e-6, 64).unwrap();
        assert_eq!(d.intervals, vec![iv(0.0, 1.0)]);
        assert_eq!(d.n_w, Some(1));
    }

    #[test]
    fn vanishing_weight_is_empty() {
        let w = Weight::new(PiecewiseFunction::constant(iv(0.0, 1.0), 0.0)).unwrap();
        assert!(matches!(detect_intervals(&w, iv(0.0, 1.0), 1e-6, 64), Err(Error::EmptyDecomposition)));
    }

    #[test]
    fn sampled_zero_segment_is_found() {
        // 2 + sin(3x) - 1 vanishes only at isolated points; use a plateau of zeros instead.
        let f = PiecewiseFunction::new(
            vec![0.0, 0.5, 1.0],
            vec![
                Expr::constant(0.0),
                Expr::Sum(vec![Expr::constant(1.0), Expr::Sine { amplitude: 0.5, frequency: 1.0, phase: 0.0 }]),
            ],
        )
        .unwrap();
        let w = Weight::new(f).unwrap();
        let d = detect_intervals(&w, iv(0.0, 1.0), 1e-6, 64).unwrap();
        assert_eq!(d.intervals, vec![iv(0.5, 1.0)]);
    }

    #[test]
    fn local_constants() {
        let w = quartic();
        let d = detect_intervals(&w, iv(-2.0, 2.0), 1e-6, 64).unwrap();
        let c = local_bound_constant(&w, &d, iv(-0.5, 0.5)).unwrap();
        assert!((c - 16.0 / 9.0).abs() < 1e-14);
        let c = local_bound_constant(&w, &d, iv(-1.5, -1.1)).unwrap();
        assert!((c - 1.0 / (1.0f64 - 1.21).powi(2)).abs() < 1e-9);
        assert!(matches!(local_bound_constant(&w, &d, iv(-1.0, 0.0)), Err(Error::NotCompactlyContained { .. })));
        let two = Weight::new(PiecewiseFunction::constant(iv(0.0, 1.0), 2.0)).unwrap();
        let d2 = detect_intervals(&two, iv(0.0, 1.0), 1e-6, 64).unwrap();
        assert_eq!(local_bound_constant(&two, &d2, iv(0.2, 0.4)).unwrap(), 0.5);
    }
}
