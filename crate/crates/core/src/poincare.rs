//! Pointwise bounds and the two-weight Poincaré inequality on the
//! finiteness domain, with a seeded corpus of test functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::degeneracy::DegeneracyDecomposition;
use crate::error::{Error, Result};
use crate::function::{integrate_abs, Expr, Interval, PiecewiseFunction, Poly, QuadratureConfig, Weight};
use crate::hat::HatWeight;
use crate::pairing::{dom_w_membership, pairing_total_variation, precise_representative};

/// Absolute floor added to the quadrature error in pass/fail verdicts.
pub const ABS_FLOOR: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Bound {
    /// `|u(x)−u(η)|ŵ(η) ≤ ∫_η^x |u′|w`, left half.
    B1,
    /// `|u(η)|ŵ(η) ≤ |u(x)|ŵ(η) + ∫_a^x |u′|w`, left half.
    B2,
    /// Mirror of `B1` on the right half.
    B3,
    /// Mirror of `B2` on the right half.
    B4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundValue {
    pub bound: Bound,
    pub lhs: f64,
    pub rhs: f64,
    pub error: f64,
}

fn value(u: &PiecewiseFunction, x: f64) -> Result<f64> {
    Ok(precise_representative(u, x)?.u_half)
}

fn tv_between(w: &Weight, u: &PiecewiseFunction, lo: f64, hi: f64, q: &QuadratureConfig) -> Result<(f64, f64)> {
    if lo >= hi {
        return Ok((0.0, 0.0));
    }
    let e = pairing_total_variation(w, u, Interval::new(lo, hi)?, q)?;
    Ok((e.value, e.error))
}

/// Both sides of one of the four pointwise bounds on interval `i`.
#[allow(clippy::too_many_arguments)]
pub fn pointwise_bound(
    w: &Weight,
    hw: &HatWeight,
    u: &PiecewiseFunction,
    i: usize,
    eta: f64,
    x: f64,
    bound: Bound,
    q: &QuadratureConfig,
) -> Result<BoundValue> {
    let h = hw.intervals().get(i).ok_or_else(|| Error::BadParameters(format!("no interval {i}")))?;
    let left = matches!(bound, Bound::B1 | Bound::B2);
    let ordered = if left { h.a < eta && eta <= x && x <= h.mid } else { h.mid <= x && x <= eta && eta < h.b };
    if !ordered {
        return Err(Error::OrderingViolation(format!("eta = {eta}, x = {x} on ({}, {})", h.a, h.b)));
    }
    let hat_eta = h.value(eta);
    let (ue, ux) = (value(u, eta)?, value(u, x)?);
    let ((rhs, error), lhs) = match bound {
        Bound::B1 => (tv_between(w, u, eta, x, q)?, (ux - ue).abs() * hat_eta),
        Bound::B3 => (tv_between(w, u, x, eta, q)?, (ux - ue).abs() * hat_eta),
        Bound::B2 => {
            let (t, e) = tv_between(w, u, h.a, x, q)?;
            ((ux.abs() * hat_eta + t, e), ue.abs() * hat_eta)
        }
        Bound::B4 => {
            let (t, e) = tv_between(w, u, x, h.b, q)?;
            ((ux.abs() * hat_eta + t, e), ue.abs() * hat_eta)
        }
    };
    Ok(BoundValue { bound, lhs, rhs, error })
}

/// The two bounds applicable to the ordering of `(η, x)`.
pub fn pointwise_bounds(
    w: &Weight,
    hw: &HatWeight,
    u: &PiecewiseFunction,
    i: usize,
    eta: f64,
    x: f64,
    q: &QuadratureConfig,
) -> Result<Vec<BoundValue>> {
    let h = hw.intervals().get(i).ok_or_else(|| Error::BadParameters(format!("no interval {i}")))?;
    let pair = if x <= h.mid && eta <= x { [Bound::B1, Bound::B2] } else { [Bound::B3, Bound::B4] };
    pair.iter().map(|&b| pointwise_bound(w, hw, u, i, eta, x, b, q)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntervalGap {
    pub i: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincareReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub quadrature_error: f64,
    pub pass: bool,
    pub per_interval: Vec<IntervalGap>,
}

/// `Σᵢ ⨍ |u − u(midᵢ)| ŵ` against `∫_I |u′| w`.
pub fn poincare_gap(
    w: &Weight,
    hw: &HatWeight,
    dec: &DegeneracyDecomposition,
    u: &PiecewiseFunction,
    q: &QuadratureConfig,
) -> Result<PoincareReport> {
    if !dom_w_membership(w, u, dec, hw, q).verdict {
        return Err(Error::NotInDomain);
    }
    let mut per_interval = Vec::with_capacity(dec.len());
    let mut err = 0.0;
    for (i, &iv) in dec.intervals.iter().enumerate() {
        let centred = u.add_constant(-value(u, iv.mid())?);
        let l = integrate_abs(&centred, hw.function(), iv, q)?;
        let r = pairing_total_variation(w, u, iv, q)?;
        err += l.error / iv.len() + r.error;
        per_interval.push(IntervalGap { i, lhs: l.value / iv.len(), rhs: r.value });
    }
    let lhs: f64 = per_interval.iter().map(|g| g.lhs).sum();
    let rhs: f64 = per_interval.iter().map(|g| g.rhs).sum();
    let margin = rhs - lhs;
    Ok(PoincareReport { lhs, rhs, margin, quadrature_error: err, pass: margin >= -(err + ABS_FLOOR), per_interval })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatchReport {
    pub reports: Vec<Option<PoincareReport>>,
    pub failures: Vec<usize>,
    pub not_in_domain: Vec<usize>,
}

pub fn batch_verify(
    w: &Weight,
    hw: &HatWeight,
    dec: &DegeneracyDecomposition,
    corpus: &[PiecewiseFunction],
    q: &QuadratureConfig,
) -> BatchReport {
    let results: Vec<Result<PoincareReport>> = corpus.par_iter().map(|u| poincare_gap(w, hw, dec, u, q)).collect();
    let mut failures = Vec::new();
    let mut not_in_domain = Vec::new();
    let reports = results
        .into_iter()
        .enumerate()
        .map(|(k, r)| match r {
            Ok(rep) => {
                if !rep.pass {
                    failures.push(k);
                }
                Some(rep)
            }
            Err(_) => {
                not_in_domain.push(k);
                None
            }
        })
        .collect();
    BatchReport { reports, failures, not_in_domain }
}

/// C¹ cubic Hermite interpolant through `(x, y, slope)` triples.
pub fn hermite(knots: &[(f64, f64, f64)]) -> Result<PiecewiseFunction> {
    let breaks: Vec<f64> = knots.iter().map(|k| k.0).collect();
    let pieces = knots
        .windows(2)
        .map(|p| {
            let ((x0, y0, m0), (x1, y1, m1)) = (p[0], p[1]);
            let h = x1 - x0;
            let s = (y1 - y0) / h;
            Expr::Poly(Poly::new(x0, vec![y0, m0, (3.0 * s - 2.0 * m0 - m1) / h, (m0 + m1 - 2.0 * s) / (h * h)]))
        })
        .collect();
    PiecewiseFunction::new(breaks, pieces)
}

/// Random C¹ piecewise cubic on `domain` whose interior knots keep a
/// `buffer` distance from every point of `avoid`.
pub fn random_hermite<R: Rng>(rng: &mut R, domain: Interval, avoid: &[f64], buffer: f64) -> Result<PiecewiseFunction> {
    let count = rng.gen_range(2..=6);
    let min_gap = 1e-3 * domain.len();
    let mut xs = vec![domain.lo(), domain.hi()];
    let mut attempts = 0;
    while xs.len() < count + 2 && attempts < 10_000 {
        attempts += 1;
        let x = rng.gen_range(domain.lo()..domain.hi());
        if avoid.iter().any(|&a| (x - a).abs() < buffer) || xs.iter().any(|&k| (x - k).abs() < min_gap) {
            continue;
        }
        xs.push(x);
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let knots: Vec<(f64, f64, f64)> = xs.iter().map(|&x| (x, rng.gen_range(-2.0..2.0), rng.gen_range(-3.0..3.0))).collect();
    hermite(&knots)
}

/// Seeded corpus of random Hermite cubics with knots kept 1% (of the
/// shortest interval) away from every interval endpoint.
pub fn random_corpus(dec: &DegeneracyDecomposition, n: usize, seed: u64) -> Result<Vec<PiecewiseFunction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let avoid: Vec<f64> = dec.intervals.iter().flat_map(|i| [i.lo(), i.hi()]).collect();
    let shortest = dec.intervals.iter().map(|i| i.len()).fold(f64::INFINITY, f64::min);
    (0..n).map(|_| random_hermite(&mut rng, dec.domain, &avoid, 0.01 * shortest)).collect()
}
