//! Closed-form piece expressions.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use super::poly::{bisect, Poly};
use super::Side;

/// Upper bound on analytically enumerated oscillation points per piece.
pub const OSCILLATION_CAP: usize = 100_000;

/// Registered closed forms for a single piece.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Poly(Poly),
    /// `scale · (orient · (x − center))^exponent`, `orient ∈ {−1, 1}`.
    Power { scale: f64, center: f64, orient: f64, exponent: f64 },
    /// `scale · ln(orient · (x − center))`.
    Log { scale: f64, center: f64, orient: f64 },
    /// `offset + amplitude · sin(1/x + phase)`.
    InvSine { offset: f64, amplitude: f64, phase: f64 },
    /// `amplitude · sin(frequency · x + phase)`.
    Sine { amplitude: f64, frequency: f64, phase: f64 },
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
}

/// Zeros located on a closed range.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZeroScan {
    pub points: Vec<f64>,
    /// The expression vanishes on the whole range.
    pub everywhere: bool,
    /// More zeros exist beyond the enumeration cap (closest to the lower end).
    pub truncated: bool,
}

fn is_integer(p: f64) -> bool {
    p.fract() == 0.0 && p.abs() <= 64.0
}

fn power_eval(scale: f64, center: f64, orient: f64, exponent: f64, x: f64) -> f64 {
    if exponent == 0.0 {
        return scale;
    }
    let base = orient * (x - center);
    if is_integer(exponent) {
        scale * base.powi(exponent as i32)
    } else if base < 0.0 {
        f64::NAN
    } else {
        scale * base.powf(exponent)
    }
}

/// Infimum and supremum of `sin` over the closed phase range `[lo, hi]`.
fn sin_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(hi - lo < TAU) {
        return (-1.0, 1.0);
    }
    let hits = |target: f64| {
        let n = ((lo - target) / TAU).ceil();
        target + n * TAU <= hi
    };
    let (a, b) = (lo.sin(), hi.sin());
    let min = if hits(-FRAC_PI_2) { -1.0 } else { a.min(b) };
    let max = if hits(FRAC_PI_2) { 1.0 } else { a.max(b) };
    (min, max)
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Poly(Poly::constant(c))
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Poly(p) => p.as_constant(),
            Expr::Power { scale, exponent, .. } if *exponent == 0.0 || *scale == 0.0 => Some(*scale),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Poly(p) => p.eval(x),
            Expr::Power { scale, center, orient, exponent } => power_eval(*scale, *center, *orient, *exponent, x),
            Expr::Log { scale, center, orient } => scale * (orient * (x - center)).ln(),
            Expr::InvSine { offset, amplitude, phase } => offset + amplitude * (1.0 / x + phase).sin(),
            Expr::Sine { amplitude, frequency, phase } => amplitude * (frequency * x + phase).sin(),
            Expr::Sum(ts) => ts.iter().map(|t| t.eval(x)).sum(),
            Expr::Product(fs) => fs.iter().map(|f| f.eval(x)).product(),
        }
    }

    /// One-sided limit at `x` approached from `side` (`Right` means from above).
    /// `NaN` marks a limit that does not exist.
    pub fn limit(&self, x: f64, side: Side) -> f64 {
        match self {
            Expr::Power { scale, center, orient, exponent } if x == *center && *exponent != 0.0 => {
                if *scale == 0.0 {
                    return 0.0;
                }
                if *exponent > 0.0 {
                    return 0.0;
                }
                let approach = match side {
                    Side::Right => *orient,
                    Side::Left => -*orient,
                };
                let sign = if approach > 0.0 {
                    1.0
                } else if is_integer(*exponent) {
                    if (*exponent as i64) % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    return f64::NAN;
                };
                sign * scale.signum() * f64::INFINITY
            }
            Expr::Log { scale, center, .. } if x == *center => {
                if *scale == 0.0 {
                    0.0
                } else {
                    -scale.signum() * f64::INFINITY
                }
            }
            Expr::InvSine { offset, amplitude, .. } if x == 0.0 => {
                if *amplitude == 0.0 {
                    *offset
                } else {
                    f64::NAN
                }
            }
            Expr::Sum(ts) => ts.iter().map(|t| t.limit(x, side)).sum(),
            Expr::Product(fs) => fs.iter().map(|f| f.limit(x, side)).product(),
            _ => self.eval(x),
        }
    }

    pub fn scale(&self, s: f64) -> Expr {
        match self {
            Expr::Poly(p) => Expr::Poly(p.scale(s)),
            Expr::Power { scale, center, orient, exponent } => {
                Expr::Power { scale: scale * s, center: *center, orient: *orient, exponent: *exponent }
            }
            Expr::Log { scale, center, orient } => Expr::Log { scale: scale * s, center: *center, orient: *orient },
            Expr::InvSine { offset, amplitude, phase } => {
                Expr::InvSine { offset: offset * s, amplitude: amplitude * s, phase: *phase }
            }
            Expr::Sine { amplitude, frequency, phase } => {
                Expr::Sine { amplitude: amplitude * s, frequency: *frequency, phase: *phase }
            }
            Expr::Sum(ts) => Expr::Sum(ts.iter().map(|t| t.scale(s)).collect()),
            Expr::Product(fs) => {
                let mut fs = fs.clone();
                fs[0] = fs[0].scale(s);
                Expr::Product(fs)
            }
        }
    }

    /// Sum with light simplification.
    pub fn add(a: &Expr, b: &Expr) -> Expr {
        match (a, b) {
            (Expr::Poly(p), Expr::Poly(q)) => Expr::Poly(p.add(q)),
            (x, y) if x.as_constant() == Some(0.0) => y.clone(),
            (x, y) if y.as_constant() == Some(0.0) => x.clone(),
            _ => {
                let mut terms = Vec::new();
                for e in [a, b] {
                    match e {
                        Expr::Sum(ts) => terms.extend(ts.iter().cloned()),
                        other => terms.push(other.clone()),
                    }
                }
                Expr::Sum(terms)
            }
        }
    }

    /// Product with light simplification (constants, polynomial-by-polynomial,
    /// polynomial-by-power, power-by-power with a common base).
    pub fn mul(a: &Expr, b: &Expr) -> Expr {
        if let Some(c) = a.as_constant() {
            return if c == 0.0 { Expr::constant(0.0) } else { b.scale(c) };
        }
        if let Some(c) = b.as_constant() {
            return if c == 0.0 { Expr::constant(0.0) } else { a.scale(c) };
        }
        match (a, b) {
            (Expr::Poly(p), Expr::Poly(q)) => Expr::Poly(p.mul(q)),
            (Expr::Poly(p), pw @ Expr::Power { .. }) | (pw @ Expr::Power { .. }, Expr::Poly(p)) => {
                poly_times_power(p, pw)
            }
            (
                Expr::Power { scale: s1, center: c1, orient: o1, exponent: e1 },
                Expr::Power { scale: s2, center: c2, orient: o2, exponent: e2 },
            ) if c1 == c2 && o1 == o2 => {
                Expr::Power { scale: s1 * s2, center: *c1, orient: *o1, exponent: e1 + e2 }
            }
            (Expr::Sum(ts), other) | (other, Expr::Sum(ts))
                if ts.len() <= 8 && matches!(other, Expr::Poly(_) | Expr::Power { .. }) =>
            {
                ts.iter().map(|t| Expr::mul(t, other)).reduce(|x, y| Expr::add(&x, &y)).unwrap()
            }
            _ => {
                let mut fs = Vec::new();
                for e in [a, b] {
                    match e {
                        Expr::Product(inner) => fs.extend(inner.iter().cloned()),
                        other => fs.push(other.clone()),
                    }
                }
                Expr::Product(fs)
            }
        }
    }

    pub fn derivative(&self) -> Option<Expr> {
        Some(match self {
            Expr::Poly(p) => Expr::Poly(p.derivative()),
            Expr::Power { scale, center, orient, exponent } => {
                if *exponent == 0.0 || *scale == 0.0 {
                    Expr::constant(0.0)
                } else {
                    Expr::Power { scale: scale * exponent * orient, center: *center, orient: *orient, exponent: exponent - 1.0 }
                }
            }
            Expr::Log { scale, center, orient } => {
                Expr::Power { scale: scale * orient, center: *center, orient: *orient, exponent: -1.0 }
            }
            Expr::InvSine { amplitude, phase, .. } => Expr::mul(
                &Expr::Power { scale: -amplitude, center: 0.0, orient: 1.0, exponent: -2.0 },
                &Expr::InvSine { offset: 0.0, amplitude: 1.0, phase: phase + FRAC_PI_2 },
            ),
            Expr::Sine { amplitude, frequency, phase } => {
                Expr::Sine { amplitude: amplitude * frequency, frequency: *frequency, phase: phase + FRAC_PI_2 }
            }
            Expr::Sum(ts) => {
                let ds = ts.iter().map(|t| t.derivative()).collect::<Option<Vec<_>>>()?;
                ds.into_iter().reduce(|a, b| Expr::add(&a, &b)).unwrap_or(Expr::constant(0.0))
            }
            Expr::Product(fs) => {
                let mut acc = Expr::constant(0.0);
                for k in 0..fs.len() {
                    let mut term = fs[k].derivative()?;
                    for (j, f) in fs.iter().enumerate() {
                        if j != k {
                            term = Expr::mul(&term, f);
                        }
                    }
                    acc = Expr::add(&acc, &term);
                }
                acc
            }
        })
    }

    /// An antiderivative when one is available in closed form.
    pub fn antiderivative(&self) -> Option<Expr> {
        Some(match self {
            Expr::Poly(p) => Expr::Poly(p.antiderivative()),
            Expr::Power { scale, center, orient, exponent } => {
                if *exponent == -1.0 {
                    Expr::Log { scale: scale * orient, center: *center, orient: *orient }
                } else {
                    let e = exponent + 1.0;
                    Expr::Power { scale: scale * orient / e, center: *center, orient: *orient, exponent: e }
                }
            }
            Expr::Log { scale, center, orient } => {
                let so = scale * orient;
                Expr::Sum(vec![
                    Expr::Product(vec![
                        Expr::Power { scale: so, center: *center, orient: *orient, exponent: 1.0 },
                        Expr::Log { scale: 1.0, center: *center, orient: *orient },
                    ]),
                    Expr::Power { scale: -so, center: *center, orient: *orient, exponent: 1.0 },
                ])
            }
            Expr::InvSine { offset, amplitude, .. } if *amplitude == 0.0 => Expr::Poly(Poly::new(0.0, vec![0.0, *offset])),
            Expr::InvSine { .. } => return None,
            Expr::Sine { amplitude, frequency, phase } => {
                if *frequency == 0.0 {
                    Expr::Poly(Poly::new(0.0, vec![0.0, amplitude * phase.sin()]))
                } else {
                    Expr::Sine { amplitude: -amplitude / frequency, frequency: *frequency, phase: phase + FRAC_PI_2 }
                }
            }
            Expr::Sum(ts) => {
                let parts = ts.iter().map(|t| t.antiderivative()).collect::<Option<Vec<_>>>()?;
                Expr::Sum(parts)
            }
            Expr::Product(fs) => {
                let folded = fs.iter().skip(1).fold(fs[0].clone(), |acc, f| Expr::mul(&acc, f));
                match folded {
                    Expr::Product(_) => return None,
                    other => return other.antiderivative(),
                }
            }
        })
    }

    /// Points of `(lo, hi)` splitting it into segments where the expression
    /// is monotone. `None` when no analytic description is available.
    pub fn monotone_breaks(&self, lo: f64, hi: f64) -> Option<Vec<f64>> {
        match self {
            Expr::Poly(p) => Some(p.derivative().roots_in(lo, hi).into_iter().filter(|&r| r > lo && r < hi).collect()),
            Expr::Power { .. } | Expr::Log { .. } => Some(Vec::new()),
            Expr::Sine { frequency, phase, amplitude } => {
                if *frequency == 0.0 || *amplitude == 0.0 {
                    return Some(Vec::new());
                }
                let (t0, t1) = {
                    let a = frequency * lo + phase;
                    let b = frequency * hi + phase;
                    (a.min(b), a.max(b))
                };
                phase_points(t0, t1, FRAC_PI_2, PI)
                    .map(|ts| sorted(ts.into_iter().map(|t| (t - phase) / frequency).filter(|&x| x > lo && x < hi).collect()))
            }
            Expr::InvSine { amplitude, phase, .. } => {
                if *amplitude == 0.0 {
                    return Some(Vec::new());
                }
                if lo <= 0.0 {
                    return None;
                }
                let (t0, t1) = (1.0 / hi + phase, 1.0 / lo + phase);
                phase_points(t0, t1, FRAC_PI_2, PI)
                    .map(|ts| sorted(ts.into_iter().map(|t| 1.0 / (t - phase)).filter(|&x| x > lo && x < hi).collect()))
            }
            Expr::Sum(_) | Expr::Product(_) => None,
        }
    }

    /// Zeros on the closed range `[lo, hi]`, enumerated from `hi` downward
    /// and capped at `cap` points.
    pub fn zeros(&self, lo: f64, hi: f64, cap: usize) -> Option<ZeroScan> {
        let mut scan = ZeroScan::default();
        match self {
            Expr::Poly(p) => {
                if p.is_zero() {
                    scan.everywhere = true;
                } else {
                    scan.points = p.roots_in(lo, hi);
                }
            }
            Expr::Power { scale, center, exponent, .. } => {
                if *scale == 0.0 {
                    scan.everywhere = true;
                } else if *exponent > 0.0 && *center >= lo && *center <= hi {
                    scan.points.push(*center);
                }
            }
            Expr::Log { scale, center, orient } => {
                if *scale == 0.0 {
                    scan.everywhere = true;
                } else {
                    let x = center + orient;
                    if x >= lo && x <= hi {
                        scan.points.push(x);
                    }
                }
            }
            Expr::Sine { amplitude, frequency, phase } => {
                if *amplitude == 0.0 {
                    scan.everywhere = true;
                } else if *frequency == 0.0 {
                    if phase.sin() == 0.0 {
                        scan.everywhere = true;
                    }
                } else {
                    let a = frequency * lo + phase;
                    let b = frequency * hi + phase;
                    let ts = phase_points(a.min(b), a.max(b), 0.0, PI)?;
                    scan.points = sorted(ts.into_iter().map(|t| (t - phase) / frequency).collect());
                }
            }
            Expr::InvSine { offset, amplitude, phase } => {
                if *amplitude == 0.0 {
                    scan.everywhere = *offset == 0.0;
                    return Some(scan);
                }
                let s = -offset / amplitude;
                if s.abs() > 1.0 {
                    return Some(scan);
                }
                if hi <= 0.0 {
                    return None;
                }
                let t0 = 1.0 / hi + phase;
                let t1 = if lo > 0.0 { 1.0 / lo + phase } else { f64::INFINITY };
                let base = s.asin();
                let mut roots = Vec::new();
                let branches = if (s.abs() - 1.0).abs() == 0.0 { vec![base] } else { vec![base, PI - base] };
                // Walk phases upward, i.e. x downward from `hi`.
                let mut n = ((t0 - base.max(PI - base)) / TAU).floor() - 1.0;
                'outer: loop {
                    let mut advanced = false;
                    for &b in &branches {
                        let t = b + n * TAU;
                        if t > t1 {
                            continue;
                        }
                        advanced = true;
                        if t >= t0 {
                            let x = 1.0 / (t - phase);
                            if x >= lo && x <= hi {
                                if roots.len() >= cap {
                                    scan.truncated = true;
                                    break 'outer;
                                }
                                roots.push(x);
                            }
                        }
                    }
                    if !advanced {
                        break;
                    }
                    n += 1.0;
                }
                scan.points = sorted(roots);
            }
            Expr::Product(fs) => {
                for f in fs {
                    let z = f.zeros(lo, hi, cap)?;
                    if z.everywhere {
                        return Some(ZeroScan { points: Vec::new(), everywhere: true, truncated: false });
                    }
                    scan.truncated |= z.truncated;
                    scan.points.extend(z.points);
                }
                scan.points = sorted(std::mem::take(&mut scan.points));
                scan.points.dedup();
            }
            Expr::Sum(_) => return None,
        }
        Some(scan)
    }

    /// Infimum and supremum over the open range `(lo, hi)` when analytically
    /// available.
    pub fn range_on(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        match self {
            Expr::InvSine { offset, amplitude, phase } => {
                if hi <= 0.0 || lo < 0.0 {
                    return None;
                }
                let t0 = 1.0 / hi + phase;
                let t1 = if lo > 0.0 { 1.0 / lo + phase } else { f64::INFINITY };
                let (smin, smax) = sin_range(t0, t1);
                let (a, b) = (offset + amplitude * smin, offset + amplitude * smax);
                Some((a.min(b), a.max(b)))
            }
            Expr::Sine { amplitude, frequency, phase } => {
                let p = frequency * lo + phase;
                let q = frequency * hi + phase;
                let (smin, smax) = sin_range(p.min(q), p.max(q));
                let (a, b) = (amplitude * smin, amplitude * smax);
                Some((a.min(b), a.max(b)))
            }
            Expr::Sum(_) | Expr::Product(_) => None,
            _ => {
                let mut vals = vec![self.limit(lo, Side::Right), self.limit(hi, Side::Left)];
                for c in self.monotone_breaks(lo, hi)? {
                    vals.push(self.eval(c));
                }
                if vals.iter().any(|v| v.is_nan()) {
                    return None;
                }
                let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
                let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                Some((min, max))
            }
        }
    }

    /// Point in `[a, b]` where the expression crosses `level`, assuming it is
    /// monotone there and brackets the level.
    pub fn crossing(&self, a: f64, b: f64, level: f64) -> f64 {
        let fa = self.limit(a, Side::Right) - level;
        bisect(|x| self.eval(x) - level, a, b, fa)
    }
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Phases `base + n·step` inside `[t0, t1]`; `None` when too many.
fn phase_points(t0: f64, t1: f64, base: f64, step: f64) -> Option<Vec<f64>> {
    if !t1.is_finite() || !t0.is_finite() {
        return None;
    }
    let n0 = ((t0 - base) / step).ceil();
    let n1 = ((t1 - base) / step).floor();
    if n1 - n0 > OSCILLATION_CAP as f64 {
        return None;
    }
    let mut out = Vec::new();
    let mut n = n0;
    while n <= n1 {
        out.push(base + n * step);
        n += 1.0;
    }
    Some(out)
}

fn poly_times_power(p: &Poly, pw: &Expr) -> Expr {
    let Expr::Power { scale, center, orient, exponent } = *pw else { unreachable!() };
    let local = p.shifted(center);
    let mut terms = Vec::new();
    for (k, &d) in local.coeffs.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let sign = if k % 2 == 1 { orient } else { 1.0 };
        terms.push(Expr::Power { scale: scale * d * sign, center, orient, exponent: exponent + k as f64 });
    }
    match terms.len() {
        0 => Expr::constant(0.0),
        1 => terms.pop().unwrap(),
        _ => Expr::Sum(terms),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num_deriv(e: &Expr, x: f64) -> f64 {
        let h = 1e-6 * (1.0 + x.abs());
        (e.eval(x + h) - e.eval(x - h)) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = vec![
            Expr::Power { scale: 2.0, center: 0.0, orient: 1.0, exponent: -3.0 },
            Expr::Power { scale: 0.5, center: 2.0, orient: -1.0, exponent: 0.5 },
            Expr::InvSine { offset: 1.0, amplitude: 1.0, phase: 0.0 },
            Expr::Sine { amplitude: 0.3, frequency: 7.0, phase: 0.2 },
            Expr::Log { scale: 1.5, center: -1.0, orient: 1.0 },
            Expr::mul(&Expr::Sine { amplitude: 1.0, frequency: 2.0, phase: 0.0 }, &Expr::Poly(Poly::new(0.0, vec![1.0, 1.0]))),
        ];
        for e in cases {
            let d = e.derivative().unwrap();
            for x in [0.3, 0.7, 1.1] {
                let (a, b) = (d.eval(x), num_deriv(&e, x));
                assert!((a - b).abs() < 1e-5 * (1.0 + b.abs()), "{e:?} at {x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn antiderivatives_differentiate_back() {
        let cases = vec![
            Expr::Power { scale: 2.0, center: 0.0, orient: 1.0, exponent: -3.0 },
            Expr::Power { scale: 1.0, center: 2.0, orient: -1.0, exponent: -1.0 },
            Expr::Power { scale: 0.5, center: 2.0, orient: -1.0, exponent: 0.5 },
            Expr::Log { scale: 1.5, center: -1.0, orient: 1.0 },
            Expr::mul(&Expr::Poly(Poly::new(0.0, vec![1.0, -2.0, 3.0])), &Expr::Power { scale: 1.0, center: 0.0, orient: 1.0, exponent: -3.0 }),
        ];
        for e in cases {
            let a = e.antiderivative().unwrap();
            for x in [0.3, 0.7, 1.1] {
                let (v, d) = (e.eval(x), num_deriv(&a, x));
                assert!((v - d).abs() < 1e-5 * (1.0 + v.abs()), "{e:?} at {x}: {v} vs {d}");
            }
        }
    }

    #[test]
    fn inverse_sine_zeros_follow_closed_form() {
        let e = Expr::InvSine { offset: 1.0, amplitude: 1.0, phase: 0.0 };
        let z = e.zeros(0.0, 1.0, 5).unwrap();
        assert!(z.truncated);
        assert_eq!(z.points.len(), 5);
        for (k, x) in z.points.iter().rev().enumerate() {
            let expect = 1.0 / (PI * (1.5 + 2.0 * k as f64));
            assert!((x - expect).abs() < 1e-14, "{x} vs {expect}");
        }
    }

    #[test]
    fn limits_at_power_singularity() {
        let e = Expr::Power { scale: 1.0, center: 0.0, orient: 1.0, exponent: -3.0 };
        assert_eq!(e.limit(0.0, Side::Right), f64::INFINITY);
        assert_eq!(e.limit(0.0, Side::Left), f64::NEG_INFINITY);
        let m = Expr::Power { scale: 1.0, center: 2.0, orient: -1.0, exponent: 2.0 };
        assert_eq!(m.limit(2.0, Side::Left), 0.0);
    }

    #[test]
    fn sine_range_covers_extremes() {
        let e = Expr::InvSine { offset: 1.0, amplitude: 1.0, phase: 0.0 };
        assert_eq!(e.range_on(0.0, 1.0), Some((0.0, 2.0)));
        let (lo, hi) = e.range_on(0.5, 1.0).unwrap();
        assert!((lo - (1.0 + 1f64.sin())).abs() < 1e-15);
        assert!((hi - 2.0).abs() < 1e-15);
    }
}
