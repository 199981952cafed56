//! Dense univariate polynomials in a shifted monomial basis.

use serde::{Deserialize, Serialize};

/// `Σ coeffs[k] · (x − origin)^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub origin: f64,
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(origin: f64, coeffs: Vec<f64>) -> Self {
        let mut p = Poly { origin, coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Poly::new(0.0, vec![c])
    }

    /// Line through `(x0, y0)` and `(x1, y1)`.
    pub fn linear_through(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Poly::new(x0, vec![y0, (y1 - y0) / (x1 - x0)])
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn as_constant(&self) -> Option<f64> {
        (self.degree() == 0).then(|| self.coeffs[0])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = x - self.origin;
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.degree() == 0 {
            return Poly::new(self.origin, vec![0.0]);
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Poly::new(self.origin, coeffs)
    }

    /// Antiderivative vanishing at `origin`.
    pub fn antiderivative(&self) -> Poly {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(0.0);
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / (k as f64 + 1.0));
        }
        Poly::new(self.origin, coeffs)
    }

    /// Same polynomial re-expanded around `origin`.
    pub fn shifted(&self, origin: f64) -> Poly {
        if origin == self.origin {
            return self.clone();
        }
        // Taylor expansion at the new origin.
        let mut out = Vec::with_capacity(self.coeffs.len());
        let mut p = self.clone();
        let mut fact = 1.0;
        for k in 0..self.coeffs.len() {
            if k > 0 {
                fact *= k as f64;
            }
            out.push(p.eval(origin) / fact);
            p = p.derivative();
        }
        Poly::new(origin, out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.origin, self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let o = other.shifted(self.origin);
        let n = self.coeffs.len().max(o.coeffs.len());
        let coeffs = (0..n)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(0.0) + o.coeffs.get(k).copied().unwrap_or(0.0))
            .collect();
        Poly::new(self.origin, coeffs)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let o = other.shifted(self.origin);
        let mut coeffs = vec![0.0; self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(self.origin, coeffs)
    }

    /// Real roots in the closed interval `[lo, hi]`, sorted and deduplicated.
    ///
    /// Roots are isolated between consecutive critical points; a critical
    /// point whose value is negligible against the local magnitude counts as
    /// a (multiple) root.
    pub fn roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        if self.is_zero() || lo > hi {
            return Vec::new();
        }
        if self.degree() == 0 {
            return Vec::new();
        }
        if self.degree() == 1 {
            let r = self.origin - self.coeffs[0] / self.coeffs[1];
            return if r >= lo && r <= hi { vec![r] } else { Vec::new() };
        }
        let crit = self.derivative().roots_in(lo, hi);
        let mut nodes = Vec::with_capacity(crit.len() + 2);
        nodes.push(lo);
        nodes.extend(crit.iter().copied().filter(|&c| c > lo && c < hi));
        nodes.push(hi);
        let vals: Vec<f64> = nodes.iter().map(|&x| self.eval(x)).collect();
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale;
        let mut roots: Vec<f64> = Vec::new();
        let push = |r: f64, roots: &mut Vec<f64>| {
            if roots.last().is_none_or(|&l| (r - l).abs() > 1e-13 * (1.0 + r.abs())) {
                roots.push(r);
            }
        };
        for k in 0..nodes.len() {
            if vals[k].abs() <= tol {
                push(nodes[k], &mut roots);
            }
            if k + 1 < nodes.len() {
                let (a, b) = (nodes[k], nodes[k + 1]);
                let (fa, fb) = (vals[k], vals[k + 1]);
                if fa.abs() > tol && fb.abs() > tol && (fa < 0.0) != (fb < 0.0) {
                    push(bisect(|x| self.eval(x), a, b, fa), &mut roots);
                }
            }
        }
        roots
    }
}

/// Bisection to machine precision given a sign change on `[a, b]`.
pub(crate) fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let neg = fa < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == neg {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_preserves_values() {
        let p = Poly::new(0.0, vec![1.0, 0.0, -2.0, 0.0, 1.0]);
        let q = p.shifted(0.75);
        for x in [-1.5, -0.3, 0.2, 1.9] {
            assert!((p.eval(x) - q.eval(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn double_roots_are_found() {
        let p = Poly::new(0.0, vec![1.0, 0.0, -2.0, 0.0, 1.0]);
        let r = p.roots_in(-2.0, 2.0);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 1.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simple_roots_of_cubic() {
        // (x-0.1)(x+0.4)(x-1.3)
        let a = Poly::new(0.0, vec![-0.1, 1.0]);
        let b = Poly::new(0.0, vec![0.4, 1.0]);
        let c = Poly::new(0.0, vec![-1.3, 1.0]);
        let p = a.mul(&b).mul(&c);
        let r = p.roots_in(-1.0, 2.0);
        assert_eq!(r.len(), 3);
        for (x, e) in r.iter().zip([-0.4, 0.1, 1.3]) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn antiderivative_inverts_derivative() {
        let p = Poly::new(0.3, vec![2.0, -1.0, 0.5]);
        let q = p.antiderivative().derivative();
        for x in [0.0, 1.0, 2.0] {
            assert!((p.eval(x) - q.eval(x)).abs() < 1e-14);
        }
    }
}
