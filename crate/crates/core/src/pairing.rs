//! Precise representatives, the pairing distribution between a weight and
//! the derivative of a function, and membership in the finiteness domain.

use serde::Serialize;

use crate::degeneracy::DegeneracyDecomposition;
use crate::error::{Error, Result};
use crate::function::quadrature::check_inside;
use crate::function::{integrate_abs, integrate_nodes, merge_nodes, Estimate, Interval, PiecewiseFunction, QuadratureConfig, Side, Weight};
use crate::hat::HatWeight;

/// Tolerance under which a test function counts as vanishing.
const VANISH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PreciseValue {
    pub x: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    pub u_half: f64,
}

/// One-sided limits of `u` at `x` and their midpoint, zero where the limits
/// are infinite of opposite signs.
pub fn precise_representative(u: &PiecewiseFunction, x: f64) -> Result<PreciseValue> {
    let (l, r) = u.one_sided_limits(x)?;
    let (u_minus, u_plus) = match (l, r) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a, a),
        (None, Some(b)) => (b, b),
        (None, None) => return Err(Error::OutOfDomain { x }),
    };
    let u_half = if u_minus.is_infinite() && u_plus.is_infinite() && u_minus.signum() != u_plus.signum() {
        0.0
    } else {
        0.5 * (u_minus + u_plus)
    };
    Ok(PreciseValue { x, u_minus, u_plus, u_half })
}

fn test_support(phi: &PiecewiseFunction) -> Result<Interval> {
    let s = phi.domain();
    let ends = [phi.eval_side(s.lo(), Side::Right), phi.eval_side(s.hi(), Side::Left)];
    if ends.iter().any(|v| !(v.abs() <= VANISH_TOL)) {
        return Err(Error::BadParameters("test function must vanish at the ends of its support".into()));
    }
    Ok(s)
}

/// Jumps of `w` strictly inside `s` as `(x, w⁺ − w⁻)`.
fn weight_jumps(w: &Weight, s: Interval) -> Vec<(f64, f64)> {
    w.function().jumps().into_iter().filter(|(x, _, _)| s.contains(*x)).map(|(x, l, r)| (x, r - l)).collect()
}

/// `⟨(w,Du),φ⟩ = −∫ u^{1/2} φ dDw − ∫ u φ′ w`; `Dw` is `w′ dx` plus the
/// jumps of `w`.
pub fn pairing_apply(w: &Weight, u: &PiecewiseFunction, phi: &PiecewiseFunction, q: &QuadratureConfig) -> Result<Estimate> {
    let s = test_support(phi)?;
    let dw = w.derivative_density().ok_or(Error::MissingDerivative)?;
    let dphi = phi.derivative().ok_or_else(|| Error::InvalidFunction("test function is not differentiable".into()))?;
    let wf = w.function();
    check_inside(u, s)?;
    check_inside(wf, s)?;
    check_inside(dw, s)?;
    let nodes = merge_nodes(&[u.breakpoints(), phi.breakpoints(), wf.breakpoints(), dw.breakpoints()], s.lo(), s.hi());
    let smooth = integrate_nodes(
        &nodes,
        &|x, sd| {
            let (uv, pv) = (u.eval_side(x, sd), phi.eval_side(x, sd));
            -(uv * pv * dw.eval_side(x, sd)) - uv * dphi.eval_side(x, sd) * wf.eval_side(x, sd)
        },
        q,
    )?;
    let mut atoms = 0.0;
    for (x, jump) in weight_jumps(w, s) {
        let uh = precise_representative(u, x)?.u_half;
        let p = phi.eval_side(x, Side::Right);
        if p != 0.0 {
            atoms -= uh * p * jump;
        }
    }
    if !atoms.is_finite() {
        return Err(Error::NonIntegrable { near: s.lo() });
    }
    Ok(Estimate { value: smooth.value + atoms, error: smooth.error })
}

/// `|(w,Du)|(I) = ∫_I |u′| w`, plus `w^{1/2}·|[u]|` at jumps of `u` inside `I`.
pub fn pairing_total_variation(w: &Weight, u: &PiecewiseFunction, i: Interval, q: &QuadratureConfig) -> Result<Estimate> {
    let du = u.derivative().ok_or(Error::MissingDerivative)?;
    let smooth = integrate_abs(&du, w.function(), i, q)?;
    if !smooth.value.is_finite() {
        return Err(Error::NonIntegrable { near: i.lo() });
    }
    let mut atoms = 0.0;
    for (x, l, r) in u.jumps() {
        if i.contains(x) {
            let wl = w.eval_side(x, Side::Left);
            let wr = w.eval_side(x, Side::Right);
            atoms += 0.5 * (wl + wr) * (r - l).abs();
        }
    }
    if !atoms.is_finite() {
        return Err(Error::NonIntegrable { near: i.lo() });
    }
    Ok(Estimate { value: smooth.value + atoms, error: smooth.error })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairingReport {
    pub test_value: f64,
    pub tv: f64,
    pub quadrature_error: f64,
    /// `u` jumps inside the support, so `u` and `u^{1/2}` differ there.
    pub representative_differs: bool,
}

pub fn pairing_report(w: &Weight, u: &PiecewiseFunction, phi: &PiecewiseFunction, q: &QuadratureConfig) -> Result<PairingReport> {
    let s = test_support(phi)?;
    let p = pairing_apply(w, u, phi, q)?;
    let tv = pairing_total_variation(w, u, s, q)?;
    let representative_differs = u.jumps().iter().any(|(x, _, _)| s.contains(*x));
    Ok(PairingReport { test_value: p.value, tv: tv.value, quadrature_error: p.error + tv.error, representative_differs })
}

/// `|⟨(w,Du),φ⟩ + ∫uφ′w + ∫uφw′|` with the pairing evaluated through its
/// absolutely continuous density `u′wφ`; vanishes in the continuum.
pub fn ibp_defect(w: &Weight, u: &PiecewiseFunction, phi: &PiecewiseFunction, q: &QuadratureConfig) -> Result<f64> {
    let s = test_support(phi)?;
    let dw = w.derivative_density().ok_or(Error::MissingDerivative)?;
    let dphi = phi.derivative().ok_or_else(|| Error::InvalidFunction("test function is not differentiable".into()))?;
    let du = u.derivative().ok_or(Error::MissingDerivative)?;
    let wf = w.function();
    check_inside(u, s)?;
    check_inside(wf, s)?;
    let nodes = merge_nodes(&[u.breakpoints(), phi.breakpoints(), wf.breakpoints(), dw.breakpoints()], s.lo(), s.hi());
    let density = integrate_nodes(&nodes, &|x, sd| du.eval_side(x, sd) * wf.eval_side(x, sd) * phi.eval_side(x, sd), q)?;
    let by_parts = integrate_nodes(
        &nodes,
        &|x, sd| {
            let uv = u.eval_side(x, sd);
            uv * dphi.eval_side(x, sd) * wf.eval_side(x, sd) + uv * phi.eval_side(x, sd) * dw.eval_side(x, sd)
        },
        q,
    )?;
    Ok((density.value + by_parts.value).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DomMembership {
    pub in_w11_loc: bool,
    pub pairing_tv_finite: bool,
    pub verdict: bool,
    pub norm: Option<f64>,
    pub l1_hat: Option<f64>,
    pub tv: Option<f64>,
}

/// `u` is locally `W^{1,1}` on the decomposition when it has no jumps and
/// finite one-sided limits at every breakpoint strictly inside an interval.
fn locally_sobolev(u: &PiecewiseFunction, dec: &DegeneracyDecomposition) -> bool {
    if u.derivative().is_none() {
        return false;
    }
    let d = u.domain();
    if !dec.intervals.iter().all(|i| d.covers(i)) {
        return false;
    }
    let inside = |x: f64| dec.intervals.iter().any(|i| i.contains(x));
    if u.jumps().iter().any(|(x, _, _)| inside(*x)) {
        return false;
    }
    u.breakpoints().iter().filter(|&&x| inside(x)).all(|&x| {
        let (l, r) = u.one_sided_limits(x).unwrap_or((None, None));
        l.is_some_and(f64::is_finite) && r.is_some_and(f64::is_finite)
    })
}

/// Membership of `u` in the finiteness domain and its norm
/// `‖u‖_{L¹(I,ŵ)} + |(w,Du)|(I)`.
pub fn dom_w_membership(
    w: &Weight,
    u: &PiecewiseFunction,
    dec: &DegeneracyDecomposition,
    hw: &HatWeight,
    q: &QuadratureConfig,
) -> DomMembership {
    let in_w11_loc = locally_sobolev(u, dec);
    let tv = if in_w11_loc {
        dec.intervals
            .iter()
            .map(|&i| pairing_total_variation(w, u, i, q).map(|e| e.value))
            .sum::<Result<f64>>()
            .ok()
            .filter(|v| v.is_finite())
    } else {
        None
    };
    let pairing_tv_finite = tv.is_some();
    let verdict = in_w11_loc && pairing_tv_finite;
    let l1_hat = if verdict { weighted_l1(u, hw, dec, q).ok().filter(|v| v.is_finite()) } else { None };
    let norm = match (verdict, l1_hat, tv) {
        (true, Some(a), Some(b)) => Some(a + b),
        _ => None,
    };
    DomMembership { in_w11_loc, pairing_tv_finite, verdict, norm, l1_hat, tv }
}

/// `‖u‖_{L¹(I,ŵ)}` over all intervals of the decomposition.
pub fn weighted_l1(u: &PiecewiseFunction, hw: &HatWeight, dec: &DegeneracyDecomposition, q: &QuadratureConfig) -> Result<f64> {
    dec.intervals.iter().map(|&i| integrate_abs(u, hw.function(), i, q).map(|e| e.value)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degeneracy::detect_intervals;
    use crate::function::Expr;
    use crate::hat::build_hat;
    use proptest::prelude::*;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn quartic(d: Interval) -> Weight {
        Weight::new(PiecewiseFunction::polynomial(d, &[1.0, 0.0, -2.0, 0.0, 1.0])).unwrap()
    }

    fn bump(lo: f64, hi: f64) -> PiecewiseFunction {
        // (1 − s²)² with s mapping (lo, hi) to (−1, 1).
        let c = 0.5 * (lo + hi);
        let k = 2.0 / (hi - lo);
        let s2 = crate::function::Poly::new(c, vec![0.0, 0.0, k * k]);
        let one_minus = crate::function::Poly::constant(1.0).add(&s2.scale(-1.0));
        PiecewiseFunction::single(iv(lo, hi), Expr::Poly(one_minus.mul(&one_minus)))
    }

    #[test]
    fn representative_cases() {
        let u = PiecewiseFunction::polynomial(iv(0.0, 1.0), &[0.0, 1.0]);
        assert_eq!(precise_representative(&u, 0.3).unwrap().u_half, 0.3);
        let step = PiecewiseFunction::new(vec![0.0, 0.5, 1.0], vec![Expr::constant(-1.0), Expr::constant(3.0)]).unwrap();
        assert_eq!(precise_representative(&step, 0.5).unwrap().u_half, 1.0);
        let cube = PiecewiseFunction::new(
            vec![-1.0, 0.0, 1.0],
            vec![
                Expr::Power { scale: -1.0, center: 0.0, orient: -1.0, exponent: -3.0 },
                Expr::Power { scale: 1.0, center: 0.0, orient: 1.0, exponent: -3.0 },
            ],
        )
        .unwrap();
        let p = precise_representative(&cube, 0.0).unwrap();
        assert_eq!((p.u_minus, p.u_plus, p.u_half), (f64::NEG_INFINITY, f64::INFINITY, 0.0));
    }

    #[test]
    fn zero_test_function() {
        let w = quartic(iv(-2.0, 2.0));
        let u = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.0, 1.0]);
        let phi = PiecewiseFunction::constant(iv(-0.5, 0.5), 0.0);
        assert_eq!(pairing_apply(&w, &u, &phi, &QuadratureConfig::default()).unwrap().value, 0.0);
    }

    #[test]
    fn linear_weight_against_bump() {
        let w = Weight::new(PiecewiseFunction::polynomial(iv(0.0, 1.0), &[0.0, 1.0])).unwrap();
        let u = PiecewiseFunction::polynomial(iv(0.0, 1.0), &[0.0, 1.0]);
        let phi = bump(0.25, 0.75);
        let q = QuadratureConfig::default();
        let p = pairing_apply(&w, &u, &phi, &q).unwrap();
        // Independent oracle: midpoint rule on ∫ x φ.
        let n = 200_000;
        let h = 0.5 / n as f64;
        let oracle: f64 = (0..n)
            .map(|k| {
                let x = 0.25 + h * (k as f64 + 0.5);
                let s = 4.0 * x - 2.0;
                x * (1.0 - s * s).powi(2) * h
            })
            .sum();
        assert!((p.value - oracle).abs() <= p.error + 1e-9, "{p:?} vs {oracle}");
    }

    #[test]
    fn weight_jumps_enter_the_pairing() {
        // w = 1 then 2 at ½. Constant u pairs to zero; u = x pairs to ∫ w φ = 2/15 + 4/15.
        let w = Weight::with_derivative(
            PiecewiseFunction::new(vec![0.0, 0.5, 1.0], vec![Expr::constant(1.0), Expr::constant(2.0)]).unwrap(),
            Some(PiecewiseFunction::constant(iv(0.0, 1.0), 0.0)),
        )
        .unwrap();
        let q = QuadratureConfig::default();
        let one = PiecewiseFunction::constant(iv(0.0, 1.0), 1.0);
        assert!(pairing_apply(&w, &one, &bump(0.25, 0.75), &q).unwrap().value.abs() < 1e-12);
        let x = PiecewiseFunction::polynomial(iv(0.0, 1.0), &[0.0, 1.0]);
        let p = pairing_apply(&w, &x, &bump(0.25, 0.75), &q).unwrap();
        assert!((p.value - 0.4).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn total_variation_values() {
        let q = QuadratureConfig::default();
        let w = quartic(iv(-2.0, 2.0));
        let u = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.0, 1.0]);
        let tv = pairing_total_variation(&w, &u, iv(-1.0, 1.0), &q).unwrap();
        assert!((tv.value - 16.0 / 15.0).abs() < 1e-12);
        let c = PiecewiseFunction::constant(iv(-2.0, 2.0), 4.0);
        assert_eq!(pairing_total_variation(&w, &c, iv(-1.0, 1.0), &q).unwrap().value, 0.0);
    }

    #[test]
    fn membership_verdicts() {
        let d = iv(-2.0, 2.0);
        let w = quartic(d);
        let dec = detect_intervals(&w, d, 1e-6, 64).unwrap();
        let hw = build_hat(&w, &dec).unwrap();
        let q = QuadratureConfig::default();
        let u = PiecewiseFunction::polynomial(d, &[0.0, 1.0]);
        let m = dom_w_membership(&w, &u, &dec, &hw, &q);
        assert!(m.verdict);
        assert!((m.tv.unwrap() - 92.0 / 15.0).abs() < 1e-10);
        let l1 = integrate_abs(&u, hw.function(), d, &q).unwrap().value;
        assert!((m.norm.unwrap() - l1 - 92.0 / 15.0).abs() < 1e-10);
        let heav = PiecewiseFunction::new(vec![-2.0, 0.0, 2.0], vec![Expr::constant(0.0), Expr::constant(1.0)]).unwrap();
        let m = dom_w_membership(&w, &heav, &dec, &hw, &q);
        assert!(!m.in_w11_loc && !m.verdict && m.norm.is_none());
    }

    #[test]
    fn missing_derivative_is_reported() {
        let w = Weight::with_derivative(PiecewiseFunction::constant(iv(0.0, 1.0), 1.0), None).unwrap();
        let u = PiecewiseFunction::constant(iv(0.0, 1.0), 1.0);
        assert!(matches!(pairing_apply(&w, &u, &bump(0.2, 0.8), &QuadratureConfig::default()), Err(Error::MissingDerivative)));
    }

    fn cubic_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, 4)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn tv_is_additive(c in cubic_strategy(), split in -0.9f64..0.9) {
            let d = iv(-2.0, 2.0);
            let w = quartic(d);
            let u = PiecewiseFunction::polynomial(d, &c);
            let q = QuadratureConfig::default();
            let whole = pairing_total_variation(&w, &u, iv(-1.0, 1.0), &q).unwrap();
            let parts = pairing_total_variation(&w, &u, iv(-1.0, split), &q).unwrap()
                + pairing_total_variation(&w, &u, iv(split, 1.0), &q).unwrap();
            prop_assert!((whole.value - parts.value).abs() <= whole.error + parts.error + 1e-12 * (1.0 + whole.value));
        }

        #[test]
        fn duality_bound(c in cubic_strategy(), lo in -0.9f64..0.0, len in 0.2f64..0.8) {
            let d = iv(-2.0, 2.0);
            let w = quartic(d);
            let u = PiecewiseFunction::polynomial(d, &c);
            let q = QuadratureConfig::default();
            let phi = bump(lo, lo + len);
            let r = pairing_report(&w, &u, &phi, &q).unwrap();
            prop_assert!(r.test_value.abs() <= r.tv + r.quadrature_error + 1e-12);
        }

        #[test]
        fn norm_axioms(c1 in cubic_strategy(), c2 in cubic_strategy(), t in -3.0f64..3.0) {
            let d = iv(-2.0, 2.0);
            let w = quartic(d);
            let dec = detect_intervals(&w, d, 1e-6, 64).unwrap();
            let hw = build_hat(&w, &dec).unwrap();
            let q = QuadratureConfig::default();
            let u1 = PiecewiseFunction::polynomial(d, &c1);
            let u2 = PiecewiseFunction::polynomial(d, &c2);
            let n = |u: &PiecewiseFunction| dom_w_membership(&w, u, &dec, &hw, &q).norm.unwrap();
            let (a, b) = (n(&u1), n(&u2));
            let sum = n(&u1.add(&u2).unwrap());
            prop_assert!(sum <= a + b + 1e-10 * (1.0 + a + b));
            let scaled = n(&u1.scale(t));
            prop_assert!((scaled - t.abs() * a).abs() <= 1e-10 * (1.0 + t.abs() * a));
        }
    }
}
