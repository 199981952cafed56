//! Composite Newton–Cotes quadrature with padded, log-graded handling of
//! singular endpoints.

use serde::{Deserialize, Serialize};

use super::{merge_nodes, Interval, PiecewiseFunction, Side};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Trapezoid,
    Simpson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rule: Rule,
    /// Panels per smooth segment.
    pub panels: usize,
    /// Smallest distance kept from a singular endpoint.
    pub padding: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { rule: Rule::Simpson, panels: 64, padding: 1e-5 }
    }
}

impl QuadratureConfig {
    pub fn new(rule: Rule, panels: usize, padding: f64) -> Result<Self> {
        if panels < 2 || !(padding > 0.0) {
            return Err(Error::BadParameters(format!("panels = {panels}, padding = {padding}")));
        }
        Ok(QuadratureConfig { rule, panels, padding })
    }

    pub fn with_panels(self, panels: usize) -> Self {
        QuadratureConfig { panels: panels.max(2), ..self }
    }

    fn effective_panels(&self) -> usize {
        match self.rule {
            Rule::Trapezoid => self.panels + self.panels % 2,
            Rule::Simpson => self.panels.div_ceil(4).max(1) * 4,
        }
    }
}

/// Value with an a posteriori error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;
    fn add(self, o: Estimate) -> Estimate {
        Estimate { value: self.value + o.value, error: self.error + o.error }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::default(), |a, b| a + b)
    }
}

/// `∫_I f g dx` over the common refinement of both breakpoint sets.
pub fn integrate(f: &PiecewiseFunction, g: &PiecewiseFunction, i: Interval, q: &QuadratureConfig) -> Result<Estimate> {
    check_inside(f, i)?;
    check_inside(g, i)?;
    let nodes = merge_nodes(&[f.breakpoints(), g.breakpoints()], i.lo(), i.hi());
    integrate_nodes(&nodes, &|x, s| f.eval_side(x, s) * g.eval_side(x, s), q)
}

/// `∫_I |f| g dx`, splitting at the analytic zeros of `f`.
pub fn integrate_abs(f: &PiecewiseFunction, g: &PiecewiseFunction, i: Interval, q: &QuadratureConfig) -> Result<Estimate> {
    check_inside(f, i)?;
    check_inside(g, i)?;
    let zeros = f.interior_zeros();
    let nodes = merge_nodes(&[f.breakpoints(), g.breakpoints(), &zeros], i.lo(), i.hi());
    integrate_nodes(&nodes, &|x, s| f.eval_side(x, s).abs() * g.eval_side(x, s), q)
}

pub(crate) fn check_inside(f: &PiecewiseFunction, i: Interval) -> Result<()> {
    let d = f.domain();
    if !d.covers(&i) {
        let x = if i.lo() < d.lo() { i.lo() } else { i.hi() };
        return Err(Error::OutOfDomain { x });
    }
    Ok(())
}

/// Sum of segment integrals of an integrand smooth between consecutive nodes.
/// The integrand receives one-sided values at the segment ends.
pub fn integrate_nodes<F>(nodes: &[f64], f: &F, q: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64, Side) -> f64,
{
    let mut total = Estimate::default();
    for w in nodes.windows(2) {
        total = total + segment(w[0], w[1], f, q)?;
    }
    Ok(total)
}

fn segment<F: Fn(f64, Side) -> f64>(l: f64, r: f64, f: &F, q: &QuadratureConfig) -> Result<Estimate> {
    let bad_l = !f(l, Side::Right).is_finite();
    let bad_r = !f(r, Side::Left).is_finite();
    match (bad_l, bad_r) {
        (false, false) => Ok(regular(l, r, f, q)),
        (true, false) => improper(l, r, f, q),
        (false, true) => {
            let g = |x: f64, s: Side| f(-x, flip(s));
            improper(-r, -l, &g, q)
        }
        (true, true) => {
            let m = 0.5 * (l + r);
            let g = |x: f64, s: Side| f(-x, flip(s));
            Ok(improper(l, m, f, q)? + improper(-r, -m, &g, q)?)
        }
    }
}

fn flip(s: Side) -> Side {
    match s {
        Side::Left => Side::Right,
        Side::Right => Side::Left,
    }
}

/// Composite rule at `n` and `n/2` panels from one set of evaluations.
fn composite<G: Fn(usize) -> f64>(n: usize, h: f64, g: G, rule: Rule) -> Estimate {
    let vals: Vec<f64> = (0..=n).map(&g).collect();
    let rule_sum = |step: usize| -> f64 {
        let m = n / step;
        let hh = h * step as f64;
        match rule {
            Rule::Trapezoid => {
                let inner: f64 = (1..m).map(|k| vals[k * step]).sum();
                hh * (0.5 * (vals[0] + vals[n]) + inner)
            }
            Rule::Simpson => {
                let mut s = vals[0] + vals[n];
                for k in 1..m {
                    s += if k % 2 == 1 { 4.0 } else { 2.0 } * vals[k * step];
                }
                s * hh / 3.0
            }
        }
    };
    let fine = rule_sum(1);
    let coarse = rule_sum(2);
    let value = match rule {
        Rule::Trapezoid => fine,
        // One Richardson step: exact through degree five.
        Rule::Simpson => fine + (fine - coarse) / 15.0,
    };
    Estimate { value, error: (fine - coarse).abs() }
}

fn regular<F: Fn(f64, Side) -> f64>(l: f64, r: f64, f: &F, q: &QuadratureConfig) -> Estimate {
    let n = q.effective_panels();
    let h = (r - l) / n as f64;
    composite(
        n,
        h,
        |k| {
            if k == 0 {
                f(l, Side::Right)
            } else if k == n {
                f(r, Side::Left)
            } else {
                f(l + h * k as f64, Side::Right)
            }
        },
        q.rule,
    )
}

/// Integral over `(l, r]` with a singular left end: log-graded padded
/// integrals at three paddings followed by Aitken extrapolation.
fn improper<F: Fn(f64, Side) -> f64>(l: f64, r: f64, f: &F, q: &QuadratureConfig) -> Result<Estimate> {
    let len = r - l;
    let split = l + 0.5 * len;
    let outer = if f(r, Side::Left).is_finite() { regular(split, r, f, q) } else { return Err(Error::NonIntegrable { near: r }) };
    let top = (100.0 * q.padding).min(len / 8.0);
    let deltas = [top, top / 10.0, top / 100.0];
    let n = 2 * q.effective_panels();
    let mut vals = [Estimate::default(); 3];
    for (j, &d) in deltas.iter().enumerate() {
        let (t0, t1) = (d.ln(), (split - l).ln());
        let h = (t1 - t0) / n as f64;
        let est = composite(
            n,
            h,
            |k| {
                let t = if k == n { t1 } else { t0 + h * k as f64 };
                let x = if k == n { split } else { l + t.exp() };
                let side = if k == n { Side::Left } else { Side::Right };
                f(x, side) * (x - l)
            },
            q.rule,
        );
        if !est.value.is_finite() {
            return Err(Error::NonIntegrable { near: l });
        }
        vals[j] = est;
    }
    let (j1, j2, j3) = (vals[0].value, vals[1].value, vals[2].value);
    let (d1, d2) = (j2 - j1, j3 - j2);
    let scale = j3.abs().max(1.0);
    let negligible = d2.abs() <= 1e-12 * scale;
    let grows = j2.abs() > 1.5 * j1.abs() && j3.abs() > 1.5 * j2.abs() && j3.abs() > 1e-9 * scale.max(1.0);
    let log_like = !negligible && d1 != 0.0 && d2 / d1 >= 0.95;
    if !negligible && (grows || log_like) {
        return Err(Error::NonIntegrable { near: l });
    }
    let quad_err = vals[2].error;
    let (value, tail_err) = if negligible || d1 == 0.0 {
        (j3, d2.abs())
    } else {
        let rho = d2 / d1;
        if rho.abs() < 1.0 {
            let corr = d2 * rho / (1.0 - rho);
            (j3 + corr, corr.abs())
        } else {
            (j3, d2.abs())
        }
    };
    Ok(Estimate { value: value + outer.value, error: tail_err + quad_err + outer.error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Expr;

    fn iv(a: f64, b: f64) -> Interval {
        Interval::new(a, b).unwrap()
    }

    #[test]
    fn quartic_integral_is_exact() {
        let w = PiecewiseFunction::polynomial(iv(-2.0, 2.0), &[1.0, 0.0, -2.0, 0.0, 1.0]);
        let one = PiecewiseFunction::constant(iv(-2.0, 2.0), 1.0);
        let e = integrate(&one, &w, iv(-1.0, 1.0), &QuadratureConfig::default()).unwrap();
        assert!((e.value - 16.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn cubic_simpson_exact_even_at_two_panels() {
        let c = PiecewiseFunction::polynomial(iv(0.0, 1.0), &[0.3, -1.0, 2.0, 5.0]);
        let one = PiecewiseFunction::constant(iv(0.0, 1.0), 1.0);
        let q = QuadratureConfig { panels: 4, ..Default::default() };
        let e = integrate(&c, &one, iv(0.0, 1.0), &q).unwrap();
        let exact = 0.3 - 0.5 + 2.0 / 3.0 + 1.25;
        assert!((e.value - exact).abs() < 1e-14);
    }

    #[test]
    fn convergent_singularity_is_extrapolated() {
        let f = PiecewiseFunction::single(iv(0.0, 1.0), Expr::Power { scale: 1.0, center: 0.0, orient: 1.0, exponent: -0.5 });
        let one = PiecewiseFunction::constant(iv(0.0, 1.0), 1.0);
        let e = integrate(&f, &one, iv(0.0, 1.0), &QuadratureConfig::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-6, "{e:?}");
        assert!((e.value - 2.0).abs() <= e.error + 1e-9);
    }

    #[test]
    fn divergent_power_and_log_are_rejected() {
        let one = PiecewiseFunction::constant(iv(0.0, 1.0), 1.0);
        for p in [-3.0, -1.0, -1.5] {
            let f = PiecewiseFunction::single(iv(0.0, 1.0), Expr::Power { scale: 1.0, center: 0.0, orient: 1.0, exponent: p });
            assert!(matches!(
                integrate(&f, &one, iv(0.0, 1.0), &QuadratureConfig::default()),
                Err(Error::NonIntegrable { .. })
            ));
        }
    }

    #[test]
    fn right_singularity_mirrors() {
        let f = PiecewiseFunction::single(iv(0.0, 1.0), Expr::Power { scale: 1.0, center: 1.0, orient: -1.0, exponent: -0.5 });
        let one = PiecewiseFunction::constant(iv(0.0, 1.0), 1.0);
        let e = integrate(&f, &one, iv(0.0, 1.0), &QuadratureConfig::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-6);
    }
}
