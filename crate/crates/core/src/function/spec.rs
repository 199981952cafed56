//! JSON documents describing weights and candidate functions.
//!
//! ```json
//! { "domain": [-2, 2],
//!   "pieces": [{ "range": [-2, 2], "kind": "poly", "params": { "coeffs": [1, 0, -2, 0, 1] } }] }
//! ```

use serde::{Deserialize, Serialize};

use super::{Expr, Interval, PiecewiseFunction, Poly, Weight};
use crate::error::{Error, Result};
use crate::relaxation::counterexample::counterexample_weight;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub domain: [f64; 2],
    pub pieces: Vec<PieceSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSpec {
    pub range: [f64; 2],
    #[serde(flatten)]
    pub kind: PieceKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum PieceKind {
    Poly {
        coeffs: Vec<f64>,
        #[serde(default)]
        origin: f64,
    },
    OnePlusSinInv,
    Samples {
        values: Vec<f64>,
    },
    Counterexample {
        beta: f64,
        gamma: f64,
        blocks: usize,
    },
    Power {
        scale: f64,
        center: f64,
        #[serde(default = "one")]
        orient: f64,
        exponent: f64,
    },
    Sine {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl FunctionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn domain(&self) -> Result<Interval> {
        Interval::new(self.domain[0], self.domain[1])
    }

    pub fn to_function(&self) -> Result<PiecewiseFunction> {
        let dom = self.domain()?;
        let mut parts = Vec::new();
        let mut cursor = dom.lo();
        for p in &self.pieces {
            let r = Interval::new(p.range[0], p.range[1])?;
            if r.lo() != cursor {
                return Err(Error::Parse(format!("piece starting at {} leaves a gap or overlap at {cursor}", r.lo())));
            }
            cursor = r.hi();
            parts.push(p.build(r)?);
        }
        if cursor != dom.hi() || parts.is_empty() {
            return Err(Error::Parse(format!("pieces end at {cursor}, domain ends at {}", dom.hi())));
        }
        PiecewiseFunction::concat(&parts)
    }

    pub fn to_weight(&self) -> Result<Weight> {
        Weight::new(self.to_function()?)
    }
}

impl PieceSpec {
    fn build(&self, r: Interval) -> Result<PiecewiseFunction> {
        Ok(match &self.kind {
            PieceKind::Poly { coeffs, origin } => {
                if coeffs.is_empty() {
                    return Err(Error::Parse("empty coefficient list".into()));
                }
                PiecewiseFunction::single(r, Expr::Poly(Poly::new(*origin, coeffs.clone())))
            }
            PieceKind::OnePlusSinInv => {
                if r.lo() < 0.0 && r.hi() > 0.0 {
                    return Err(Error::Parse("1+sin(1/x) piece must not straddle 0".into()));
                }
                PiecewiseFunction::single(r, Expr::InvSine { offset: 1.0, amplitude: 1.0, phase: 0.0 })
            }
            PieceKind::Samples { values } => PiecewiseFunction::from_samples(r, values)?,
            PieceKind::Counterexample { beta, gamma, blocks } => {
                if r.lo() != 0.0 || r.hi() != 2.0 {
                    return Err(Error::Parse("counterexample piece must cover (0, 2)".into()));
                }
                counterexample_weight(*beta, *gamma, *blocks)?.function().clone()
            }
            PieceKind::Power { scale, center, orient, exponent } => {
                if orient.abs() != 1.0 {
                    return Err(Error::Parse("orient must be 1 or -1".into()));
                }
                PiecewiseFunction::single(r, Expr::Power { scale: *scale, center: *center, orient: *orient, exponent: *exponent })
            }
            PieceKind::Sine { amplitude, frequency, phase } => {
                PiecewiseFunction::single(r, Expr::Sine { amplitude: *amplitude, frequency: *frequency, phase: *phase })
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_kinds() {
        let text = r#"{"domain":[0,3],"pieces":[
            {"range":[0,0.5],"kind":"one_plus_sin_inv"},
            {"range":[0.5,1],"kind":"poly","params":{"coeffs":[1,2]}},
            {"range":[1,2],"kind":"samples","params":{"values":[3,4,5]}},
            {"range":[2,3],"kind":"power","params":{"scale":1,"center":0,"exponent":2}}]}"#;
        let f = FunctionSpec::from_json(text).unwrap().to_function().unwrap();
        assert_eq!(f.evaluate(0.75).unwrap(), 2.5);
        assert_eq!(f.evaluate(1.25).unwrap(), 3.5);
        assert_eq!(f.evaluate(2.5).unwrap(), 6.25);
    }

    #[test]
    fn rejects_gaps_and_bad_json() {
        let gap = r#"{"domain":[0,1],"pieces":[{"range":[0,0.4],"kind":"poly","params":{"coeffs":[1]}}]}"#;
        assert!(matches!(FunctionSpec::from_json(gap).unwrap().to_function(), Err(Error::Parse(_))));
        assert!(matches!(FunctionSpec::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn counterexample_kind_expands() {
        let text = r#"{"domain":[0,2],"pieces":[{"range":[0,2],"kind":"counterexample","params":{"beta":2,"gamma":0.5,"blocks":3}}]}"#;
        let w = FunctionSpec::from_json(text).unwrap().to_weight().unwrap();
        assert!((w.eval_side(0.8, crate::function::Side::Right) - 0.64).abs() < 1e-15);
    }
}
