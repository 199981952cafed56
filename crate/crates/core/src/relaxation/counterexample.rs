//! Block weight on (0, 2) for which `1/x³` has infinite weighted mass but
//! finite auxiliary-weighted mass.

use rayon::prelude::*;
use serde::Serialize;

use crate::degeneracy::detect_intervals;
use crate::error::{Error, Result};
use crate::function::{integrate, integrate_abs, Expr, Interval, PiecewiseFunction, QuadratureConfig, Weight};
use crate::hat::build_hat;
use crate::pairing::pairing_total_variation;

fn block_power(h: usize, exponent: f64, mirrored: bool) -> Expr {
    let scale = 1.0 / (h as f64 * h as f64);
    if mirrored {
        Expr::Power { scale, center: 2.0, orient: -1.0, exponent }
    } else {
        Expr::Power { scale, center: 0.0, orient: 1.0, exponent }
    }
}

/// Split point of block `h`: `½(1/(h+1) + 1/h)`.
pub fn block_split(h: usize) -> f64 {
    let h = h as f64;
    0.5 * (1.0 / (h + 1.0) + 1.0 / h)
}

/// Weight equal to `h⁻² x^γ` on `(1/(h+1), c_h]` and `h⁻² x^β` on `(c_h, 1/h]`
/// for `h ≤ blocks`, constant below `1/(blocks+1)`, mirrored about `x = 1`.
pub fn counterexample_weight(beta: f64, gamma: f64, blocks: usize) -> Result<Weight> {
    if !(beta > 1.0) || !(gamma > 0.0 && gamma < 1.0) || blocks < 1 || !beta.is_finite() {
        return Err(Error::BadParameters(format!("beta = {beta}, gamma = {gamma}, blocks = {blocks}")));
    }
    let hh = blocks;
    let first = 1.0 / (hh as f64 + 1.0);
    let floor = first.powf(gamma) / (hh as f64 * hh as f64);
    let mut breaks = vec![0.0, first];
    let mut pieces = vec![Expr::constant(floor)];
    for h in (1..=hh).rev() {
        breaks.push(block_split(h));
        pieces.push(block_power(h, gamma, false));
        breaks.push(1.0 / h as f64);
        pieces.push(block_power(h, beta, false));
    }
    // Mirror: x ↦ 2 − x.
    let left_breaks = breaks.clone();
    let left_pieces = pieces.clone();
    for k in (0..left_breaks.len() - 1).rev() {
        breaks.push(2.0 - left_breaks[k]);
        let e = match &left_pieces[k] {
            Expr::Power { exponent, scale, .. } => {
                let h = (1.0 / scale).sqrt().round() as usize;
                block_power(h, *exponent, true)
            }
            other => other.clone(),
        };
        pieces.push(e);
    }
    // Drop the duplicated centre node.
    let mut b2 = Vec::with_capacity(breaks.len());
    for b in breaks {
        if b2.last() != Some(&b) {
            b2.push(b);
        }
    }
    let f = PiecewiseFunction::new(b2, pieces)?;
    debug_assert_eq!(f.domain(), Interval::new(0.0, 2.0).unwrap());
    Weight::new(f)
}

/// `1/x³` on `(0, 2)`.
pub fn inverse_cube() -> PiecewiseFunction {
    PiecewiseFunction::single(Interval::new(0.0, 2.0).unwrap(), Expr::Power { scale: 1.0, center: 0.0, orient: 1.0, exponent: -3.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CounterexampleDiagnostics {
    pub beta: f64,
    pub gamma: f64,
    pub schedule: Vec<usize>,
    /// `∫_{1/(H+1)}^1 u w` for each block count.
    pub s_uw: Vec<f64>,
    /// `∫_{1/(H+1)}^1 u ŵ` for each block count.
    pub s_uhat: Vec<f64>,
    /// `|(w,Du)|(K)`.
    pub tv_k: Vec<f64>,
    /// `∫_{1/(H+1)}^1 |u′| w`.
    pub tv_blocks: Vec<f64>,
    pub fitted_growth_exponent: f64,
    pub tv_growth_exponent: f64,
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    num / den
}

/// Partial sums over the blocks `h ≤ H` for `u = 1/x³`.
pub fn counterexample_diagnostics(
    beta: f64,
    gamma: f64,
    schedule: &[usize],
    k: Interval,
    q: &QuadratureConfig,
) -> Result<CounterexampleDiagnostics> {
    if schedule.len() < 2 {
        return Err(Error::BadParameters("schedule needs at least two block counts".into()));
    }
    let u = inverse_cube();
    let du = u.derivative().ok_or(Error::MissingDerivative)?;
    let rows: Vec<[f64; 4]> = schedule
        .par_iter()
        .map(|&hh| {
            let w = counterexample_weight(beta, gamma, hh)?;
            let dec = detect_intervals(&w, w.domain(), 1e-9, 64)?;
            let hw = build_hat(&w, &dec)?;
            let blocks = Interval::new(1.0 / (hh as f64 + 1.0), 1.0)?;
            let s_uw = integrate(&u, w.function(), blocks, q)?.value;
            let s_uhat = integrate(&u, hw.function(), blocks, q)?.value;
            let tv_k = pairing_total_variation(&w, &u, k, q)?.value;
            let tv_blocks = integrate_abs(&du, w.function(), blocks, q)?.value;
            Ok([s_uw, s_uhat, tv_k, tv_blocks])
        })
        .collect::<Result<_>>()?;
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let hs: Vec<f64> = schedule.iter().map(|&h| h as f64).collect();
    let (s_uw, s_uhat, tv_k, tv_blocks) = (col(0), col(1), col(2), col(3));
    Ok(CounterexampleDiagnostics {
        beta,
        gamma,
        schedule: schedule.to_vec(),
        fitted_growth_exponent: loglog_slope(&hs, &s_uw),
        tv_growth_exponent: loglog_slope(&hs, &tv_blocks),
        s_uw,
        s_uhat,
        tv_k,
        tv_blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Side;

    #[test]
    fn block_layout_and_values() {
        let w = counterexample_weight(2.0, 0.5, 3).unwrap();
        let f = w.function();
        // Three blocks of two pieces on each side plus two continuation pieces.
        assert_eq!(f.pieces().len(), 14);
        assert!(f.breakpoints().contains(&0.5) && f.breakpoints().contains(&0.75) && f.breakpoints().contains(&1.0));
        let (l, r) = f.one_sided_limits(0.75).unwrap();
        assert!((l.unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
        assert!((r.unwrap() - 0.5625).abs() < 1e-15);
        assert!((w.eval_side(1.25, Side::Right) - w.eval_side(0.75, Side::Left)).abs() < 1e-15);
        assert!(w.sup_on(Interval::new(0.0, 2.0).unwrap()) <= 1.0);
    }

    #[test]
    fn diagnostics_are_finite_and_stable_on_k() {
        let k = Interval::new(0.25, 0.5).unwrap();
        let d = counterexample_diagnostics(2.0, 0.5, &[10, 20, 40], k, &QuadratureConfig::default()).unwrap();
        assert!(d.s_uw.windows(2).all(|p| p[1] > p[0]));
        assert!(d.tv_k.windows(2).all(|p| (p[1] - p[0]).abs() < 1e-12));
        assert!((loglog_slope(&[1.0, 2.0, 4.0], &[3.0, 6.0, 12.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(counterexample_weight(1.0, 0.5, 3).is_err());
        assert!(counterexample_weight(2.0, 1.0, 3).is_err());
        assert!(counterexample_weight(2.0, 0.5, 0).is_err());
    }
}
