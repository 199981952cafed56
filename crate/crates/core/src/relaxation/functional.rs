//! Relaxed energy, lower-semicontinuity probes and compactness evidence.

use rayon::prelude::*;
use serde::Serialize;

use crate::degeneracy::DegeneracyDecomposition;
use crate::error::{Error, Result};
use crate::function::{integrate_abs, integrate_nodes, merge_nodes, Expr, Interval, PiecewiseFunction, Poly, QuadratureConfig, Side, Weight};
use crate::hat::HatWeight;
use crate::pairing::{dom_w_membership, pairing_total_variation, precise_representative};

/// `F̄(u)`: finite exactly on the finiteness domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelaxedValue {
    pub finite: bool,
    pub value: Option<f64>,
}

impl RelaxedValue {
    pub fn infinite() -> Self {
        RelaxedValue { finite: false, value: None }
    }
}

pub fn relaxed_functional(
    w: &Weight,
    u: &PiecewiseFunction,
    dec: &DegeneracyDecomposition,
    hw: &HatWeight,
    q: &QuadratureConfig,
) -> Result<RelaxedValue> {
    if dec.truncated {
        return Err(Error::HypothesisViolated("decomposition has infinitely many intervals".into()));
    }
    if w.derivative_density().is_none() {
        return Err(Error::HypothesisViolated("weight has no derivative density".into()));
    }
    let m = dom_w_membership(w, u, dec, hw, q);
    Ok(match (m.verdict, m.tv) {
        (true, Some(v)) => RelaxedValue { finite: true, value: Some(v) },
        _ => RelaxedValue::infinite(),
    })
}

/// `F(u) = ∫_Ω |u′| w`, with jump atoms when `u` is not continuous.
pub fn energy(w: &Weight, u: &PiecewiseFunction, q: &QuadratureConfig) -> Result<f64> {
    Ok(pairing_total_variation(w, u, w.domain(), q)?.value)
}

/// Smooth bumps on compact pieces of every interval, used as weak-convergence probes.
fn probes(dec: &DegeneracyDecomposition) -> Vec<PiecewiseFunction> {
    let mut out = Vec::new();
    for i in &dec.intervals {
        for (s, e) in [(0.1, 0.4), (0.3, 0.7), (0.6, 0.9)] {
            let (lo, hi) = (i.lo() + s * i.len(), i.lo() + e * i.len());
            let c = 0.5 * (lo + hi);
            let k = 2.0 / (hi - lo);
            let t = Poly::constant(1.0).add(&Poly::new(c, vec![0.0, 0.0, -k * k]));
            out.push(PiecewiseFunction::single(Interval::new(lo, hi).unwrap(), Expr::Poly(t.mul(&t))));
        }
    }
    out
}

/// Largest probe deviation `|∫(u_k − u)φ ŵ| + |∫(u_k − u)φ|w′||`.
fn probe_deviation(
    w: &Weight,
    hw: &HatWeight,
    uk: &PiecewiseFunction,
    u: &PiecewiseFunction,
    probes: &[PiecewiseFunction],
    q: &QuadratureConfig,
) -> Result<f64> {
    let dw = w.derivative_density();
    let mut worst: f64 = 0.0;
    for phi in probes {
        let s = phi.domain();
        let mut lists: Vec<&[f64]> = vec![uk.breakpoints(), u.breakpoints(), phi.breakpoints(), hw.function().breakpoints()];
        if let Some(d) = dw {
            lists.push(d.breakpoints());
        }
        let nodes = merge_nodes(&lists, s.lo(), s.hi());
        let g = |x: f64, sd: Side| (uk.eval_side(x, sd) - u.eval_side(x, sd)) * phi.eval_side(x, sd);
        let a = integrate_nodes(&nodes, &|x, sd| g(x, sd) * hw.function().eval_side(x, sd), q)?.value;
        let b = match dw {
            Some(d) => integrate_nodes(&nodes, &|x, sd| g(x, sd) * d.eval_side(x, sd).abs(), q)?.value,
            None => 0.0,
        };
        worst = worst.max(a.abs() + b.abs());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LscReport {
    pub energies: Vec<f64>,
    pub relaxed: f64,
    pub tail_min: f64,
    pub deviations: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks `F̄(u) ≤ liminf F(u_k)` on the tail (last half) of a family that
/// converges weakly to `u`.
pub fn lsc_probe(
    w: &Weight,
    hw: &HatWeight,
    dec: &DegeneracyDecomposition,
    family: &[PiecewiseFunction],
    u_limit: &PiecewiseFunction,
    tolerance: f64,
    q: &QuadratureConfig,
) -> Result<LscReport> {
    if family.is_empty() {
        return Err(Error::BadParameters("empty family".into()));
    }
    let relaxed = relaxed_functional(w, u_limit, dec, hw, q)?.value.ok_or(Error::NotInDomain)?;
    let ps = probes(dec);
    let rows: Vec<(f64, f64)> = family
        .par_iter()
        .map(|uk| Ok((energy(w, uk, q)?, probe_deviation(w, hw, uk, u_limit, &ps, q)?)))
        .collect::<Result<_>>()?;
    let (energies, deviations): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    let first = deviations[0];
    let last = *deviations.last().unwrap();
    let peak = deviations.iter().copied().fold(0.0, f64::max);
    let converging = last <= 1e-9 || (family.len() > 1 && last <= 0.5 * peak && last <= first);
    if !converging {
        return Err(Error::ConvergenceNotEstablished(format!("probe deviation {last} after {first}")));
    }
    let tail = &energies[energies.len() / 2..];
    let tail_min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LscReport { energies, relaxed, tail_min, deviations, tolerance, pass: tail_min >= relaxed - tolerance })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompactnessReport {
    pub compact: [f64; 2],
    /// `∫_K |u_j − u_k| ŵ` for all pairs.
    pub distances: Vec<Vec<f64>>,
    /// Distances between consecutive members.
    pub successive: Vec<f64>,
    pub cauchy: bool,
    /// `inf_K ŵ`.
    pub hat_floor: f64,
    pub sup_tv: f64,
    pub sup_midpoint: f64,
    /// `sup_k ‖u_k‖_{L¹(K)}` bound obtained from `∫_K |u_k| ŵ / inf_K ŵ`.
    pub l1_bound: f64,
    /// `sup_k ‖u_k′‖_{L¹(K)}` bound obtained from `|(w,Du_k)|(I) / inf_K w`.
    pub derivative_bound: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Numerical evidence for compactness on `k` of a family with bounded
/// energies and bounded midpoint values.
pub fn compactness_demo(
    w: &Weight,
    hw: &HatWeight,
    dec: &DegeneracyDecomposition,
    family: &[PiecewiseFunction],
    k: Interval,
    q: &QuadratureConfig,
) -> Result<CompactnessReport> {
    if family.len() < 3 {
        return Err(Error::BadParameters("compactness needs at least three members".into()));
    }
    if !dec.intervals.iter().any(|i| i.lo() < k.lo() && k.hi() < i.hi()) {
        return Err(Error::NotCompactlyContained { lo: k.lo(), hi: k.hi() });
    }
    let stats: Vec<(f64, f64)> = family
        .par_iter()
        .map(|u| {
            let tv: f64 = dec.intervals.iter().map(|&i| pairing_total_variation(w, u, i, q).map(|e| e.value)).sum::<Result<f64>>()?;
            let mid = dec
                .intervals
                .iter()
                .map(|i| precise_representative(u, i.mid()).map(|p| p.u_half.abs()))
                .collect::<Result<Vec<f64>>>()?;
            Ok((tv, sup(&mid)))
        })
        .collect::<Result<_>>()?;
    let n = family.len();
    let third = n.div_ceil(3);
    let (tvs, mids): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
    for (name, v) in [("energy", &tvs), ("midpoint value", &mids)] {
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::HypothesisViolated(format!("{name} is infinite")));
        }
        let (head, tail) = (sup(&v[..third]), sup(&v[n - third..]));
        if tail > 2.0 * head + 1e-12 {
            return Err(Error::HypothesisViolated(format!("{name} grows from {head} to {tail}")));
        }
    }
    let hat_on_k = hw.function().restrict(k.lo(), k.hi())?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |l| (j, l))).collect();
    let vals: Vec<f64> = pairs
        .par_iter()
        .map(|&(j, l)| integrate_abs(&family[j].add(&family[l].scale(-1.0))?, &hat_on_k, k, q).map(|e| e.value))
        .collect::<Result<_>>()?;
    let mut distances = vec![vec![0.0; n]; n];
    for (&(j, l), v) in pairs.iter().zip(vals) {
        distances[j][l] = v;
        distances[l][j] = v;
    }
    let successive: Vec<f64> = (0..n - 1).map(|j| distances[j][j + 1]).collect();
    let head = sup(&successive[..third.min(successive.len())]);
    let tail_start = successive.len().saturating_sub(third);
    let tail = sup(&successive[tail_start..]);
    let diam_tail = (tail_start..n).flat_map(|j| (tail_start..n).map(move |l| (j, l))).map(|(j, l)| distances[j][l]).fold(0.0, f64::max);
    let cauchy = diam_tail <= 1e-12 || (tail < head && diam_tail <= sup(&distances[0]));
    let hat_floor = w_inf(hw, k);
    let w_floor = w.inf_on(k);
    let l1s = family.iter().map(|u| integrate_abs(u, &hat_on_k, k, q).map(|e| e.value)).collect::<Result<Vec<f64>>>()?;
    Ok(CompactnessReport {
        compact: [k.lo(), k.hi()],
        distances,
        successive,
        cauchy,
        hat_floor,
        sup_tv: sup(&tvs),
        sup_midpoint: sup(&mids),
        l1_bound: sup(&l1s) / hat_floor,
        derivative_bound: sup(&tvs) / w_floor,
    })
}

fn w_inf(hw: &HatWeight, k: Interval) -> f64 {
    let f = hw.function();
    let mut m = f64::INFINITY;
    for x in merge_nodes(&[f.breakpoints()], k.lo(), k.hi()) {
        m = m.min(hw.value(x));
    }
    // Profiles are monotone between nodes, so node values bound the infimum.
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::degeneracy::detect_intervals;
    use crate::hat::build_hat;
    use crate::relaxation::recovery::{recovery_schedule, DEFAULT_SCHEDULE};

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    fn quartic() -> (Weight, DegeneracyDecomposition, HatWeight) {
        let w = Weight::new(PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[1.0, 0.0, -2.0, 0.0, 1.0])).unwrap();
        let dec = detect_intervals(&w, w.domain(), 1e-6, 64).unwrap();
        let hw = build_hat(&w, &dec).unwrap();
        (w, dec, hw)
    }

    #[test]
    fn relaxed_values() {
        let (w, dec, hw) = quartic();
        let q = QuadratureConfig::default();
        let x = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.0, 1.0]);
        let r = relaxed_functional(&w, &x, &dec, &hw, &q).unwrap();
        assert!(r.finite && (r.value.unwrap() - 92.0 / 15.0).abs() < 1e-12);
        let heav = PiecewiseFunction::new(vec![-2.0, 0.0, 2.0], vec![Expr::constant(0.0), Expr::constant(1.0)]).unwrap();
        assert_eq!(relaxed_functional(&w, &heav, &dec, &hw, &q).unwrap(), RelaxedValue::infinite());
        let c = PiecewiseFunction::constant(iv(-2.0, 2.0), 2.0);
        assert_eq!(relaxed_functional(&w, &c, &dec, &hw, &q).unwrap().value, Some(0.0));
    }

    #[test]
    fn ac_energy_equals_relaxed() {
        let (w, dec, hw) = quartic();
        let q = QuadratureConfig::default();
        let u = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.3, -1.0, 0.5, 0.2]);
        let r = relaxed_functional(&w, &u, &dec, &hw, &q).unwrap().value.unwrap();
        let e = pairing_total_variation(&w, &u, w.domain(), &q).unwrap();
        assert_eq!(energy(&w, &u, &q).unwrap(), e.value);
        assert!((e.value - r).abs() < 1e-10 + 10.0 * e.error, "{e:?} vs {r}");
    }

    #[test]
    fn missing_derivative_violates_hypotheses() {
        let w = Weight::with_derivative(PiecewiseFunction::constant(iv(0.0, 1.0), 1.0), None).unwrap();
        let dec = detect_intervals(&w, w.domain(), 1e-6, 64).unwrap();
        let hw = build_hat(&w, &dec).unwrap();
        let u = PiecewiseFunction::constant(iv(0.0, 1.0), 1.0);
        assert!(matches!(relaxed_functional(&w, &u, &dec, &hw, &QuadratureConfig::default()), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn lsc_on_recovery_and_oscillations() {
        let (w, dec, hw) = quartic();
        let q = QuadratureConfig::default();
        let u = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.0, 1.0]);
        let fam: Vec<_> = recovery_schedule(&w, &hw, &dec, &u, &DEFAULT_SCHEDULE, &q).unwrap().into_iter().map(|s| s.u_h).collect();
        let r = lsc_probe(&w, &hw, &dec, &fam, &u, 1e-6, &q).unwrap();
        assert!(r.pass, "{r:?}");
        let same = vec![u.clone(); 4];
        assert!(lsc_probe(&w, &hw, &dec, &same, &u, 1e-6, &q).unwrap().pass);
        let osc: Vec<_> = [10.0, 40.0, 160.0]
            .iter()
            .map(|&h| {
                let s = PiecewiseFunction::single(iv(-2.0, 2.0), Expr::Sine { amplitude: 1.0 / h, frequency: h, phase: 0.0 });
                u.add(&s).unwrap()
            })
            .collect();
        let fine = QuadratureConfig::default().with_panels(2048);
        // boundary and variation terms of ∫cos(hx)w are O((|w(±2)| + ∫|w′|)/h)
        let r = lsc_probe(&w, &hw, &dec, &osc, &u, 38.0 / 40.0, &fine).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.energies[2] - r.relaxed).abs() < (r.energies[0] - r.relaxed).abs());
    }

    #[test]
    fn lsc_rejects_non_converging_family() {
        let (w, dec, hw) = quartic();
        let q = QuadratureConfig::default();
        let u = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.0, 1.0]);
        let fam: Vec<_> = (0..4).map(|_| u.add_constant(1.0)).collect();
        assert!(matches!(lsc_probe(&w, &hw, &dec, &fam, &u, 1e-6, &q), Err(Error::ConvergenceNotEstablished(_))));
    }

    #[test]
    fn compactness_cases() {
        let (w, dec, hw) = quartic();
        let q = QuadratureConfig::default();
        let k = iv(-0.5, 0.5);
        let u = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[0.0, 1.0]);
        let fam: Vec<_> = (1..=6).map(|j| u.add_constant(1.0 / j as f64)).collect();
        let r = compactness_demo(&w, &hw, &dec, &fam, k, &q).unwrap();
        assert!(r.cauchy);
        let mass = integrate_abs(&PiecewiseFunction::constant(iv(-2.0, 2.0), 1.0), hw.function(), k, &q).unwrap().value;
        assert!((r.distances[1][3] - (0.5 - 0.25) * mass).abs() < 1e-12);
        let unbounded: Vec<_> = (1..=6).map(|j| PiecewiseFunction::constant(iv(-2.0, 2.0), (j * j) as f64)).collect();
        assert!(matches!(compactness_demo(&w, &hw, &dec, &unbounded, k, &q), Err(Error::HypothesisViolated(_))));
        assert!(matches!(compactness_demo(&w, &hw, &dec, &fam, iv(-1.5, 0.0), &q), Err(Error::NotCompactlyContained { .. })));
        let fam: Vec<_> = recovery_schedule(&w, &hw, &dec, &u, &DEFAULT_SCHEDULE, &q).unwrap().into_iter().map(|s| s.u_h).collect();
        assert!(compactness_demo(&w, &hw, &dec, &fam, iv(-0.9, 0.9), &q).unwrap().cauchy);
    }
}
