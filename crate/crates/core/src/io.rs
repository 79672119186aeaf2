//! Text and JSON forms of final conditions and solutions.
//!
//! Final conditions are read as
//! `{"strata": [{"face": [0, 1], "poly": "p1 (1 - p1)"}], "unspecified": "zero"}`
//! where faces left out are zero (or induced, if so chosen).

use std::collections::{BTreeMap, BTreeSet};

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::extension::{Piece, PiecewiseSolution};
use crate::hierarchy::{GlobalSolution, StratifiedFinalCondition, Unspecified};
use crate::polyalg::{format_poly, parse_poly, Coeff, MultiPoly};
use crate::simplex::{Chart, Face};

/// Exact form of a coefficient: `"3"`, `"-1/2"`.
pub fn coeff_string(c: &Coeff) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

/// Parses an exact constant such as `"1/2"`, `"-3"` or `"0.125"`.
pub fn parse_coeff(text: &str) -> Result<Coeff> {
    let chart = Chart::new(Face::vertex(0)?);
    parse_poly(text, chart)?
        .as_constant()
        .ok_or_else(|| Error::Parse {
            pos: 0,
            msg: format!("'{text}' is not a constant"),
        })
}

pub fn ser_coeff<S: Serializer>(c: &Coeff, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&coeff_string(c))
}

pub fn ser_poly<S: Serializer>(p: &MultiPoly, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_poly(p))
}

/// A face-keyed map with keys written as `"{0,1}"`, since JSON keys are
/// strings.
pub fn ser_face_map<S: Serializer, V: Serialize>(
    m: &BTreeMap<Face, V>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let mut out = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        out.serialize_entry(&k.to_string(), v)?;
    }
    out.end()
}

/// One stratum of a final condition document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumDoc {
    pub face: Face,
    pub poly: String,
}

/// A final condition as read from JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalConditionDoc {
    pub strata: Vec<StratumDoc>,
    #[serde(default)]
    pub unspecified: Unspecified,
}

impl FinalConditionDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            pos: e.column(),
            msg: format!("final condition: {e}"),
        })
    }

    /// Builds the condition on `alleles` alleles; every face must be a face
    /// of that simplex and appear at most once.
    pub fn to_condition(&self, alleles: usize) -> Result<StratifiedFinalCondition> {
        let mut f = StratifiedFinalCondition::new(alleles, self.unspecified)?;
        let mut seen = BTreeSet::new();
        for s in &self.strata {
            if !seen.insert(s.face) {
                return Err(Error::Argument(format!("face {} is listed twice", s.face)));
            }
            let p = parse_poly(&s.poly, Chart::new(s.face)).map_err(|e| match e {
                Error::Parse { pos, msg } => Error::Parse {
                    pos,
                    msg: format!("stratum {}: {msg}", s.face),
                },
                other => other,
            })?;
            f.set(p)?;
        }
        Ok(f)
    }

    pub fn from_condition(f: &StratifiedFinalCondition) -> Self {
        FinalConditionDoc {
            strata: f
                .components()
                .map(|(face, p)| StratumDoc {
                    face,
                    poly: format_poly(p),
                })
                .collect(),
            unspecified: f.unspecified(),
        }
    }
}

/// Input of the `solve` front end.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveDoc {
    pub final_condition: FinalConditionDoc,
    pub degree: u32,
}

impl SolveDoc {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            pos: e.column(),
            msg: format!("solve document: {e}"),
        })
    }
}

pub fn piece_json(piece: &Piece) -> Value {
    let modes: Vec<Value> = piece
        .modes()
        .iter()
        .map(|m| {
            json!({
                "kappa": coeff_string(&m.kappa),
                "coeff": coeff_string(&m.coeff),
                "expr": m.expr.to_string(),
            })
        })
        .collect();
    json!({ "face": piece.face(), "modes": modes })
}

/// Pieces in face order, with modes of equal eigenvalue merged.
pub fn piecewise_json(u: &PiecewiseSolution) -> Value {
    Value::Array(u.simplified().pieces().map(piece_json).collect())
}

pub fn global_json(u: &GlobalSolution) -> Value {
    json!({
        "alleles": u.alleles(),
        "degree": u.degree(),
        "layers": u.layers().iter().map(piecewise_json).collect::<Vec<_>>(),
        "total": piecewise_json(u.total()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyalg::frac;

    #[test]
    fn coeff_round_trip() {
        for c in [frac(1, 2), frac(-7, 3), frac(4, 1)] {
            assert_eq!(parse_coeff(&coeff_string(&c)).unwrap(), c);
        }
        assert_eq!(parse_coeff("0.125").unwrap(), frac(1, 8));
        assert!(parse_coeff("p0 p1").is_err());
    }

    #[test]
    fn final_condition_document() {
        let doc = FinalConditionDoc::from_json(
            r#"{"strata":[{"face":[1],"poly":"1"},{"face":[0,1],"poly":"p1 (1 - p1)"}]}"#,
        )
        .unwrap();
        assert_eq!(doc.unspecified, Unspecified::Zero);
        let f = doc.to_condition(2).unwrap();
        assert_eq!(f.components().count(), 2);
        let back = FinalConditionDoc::from_condition(&f);
        assert_eq!(back.to_condition(2).unwrap(), f);
    }

    #[test]
    fn document_errors() {
        let dup = r#"{"strata":[{"face":[1],"poly":"1"},{"face":[1],"poly":"2"}]}"#;
        assert!(FinalConditionDoc::from_json(dup).unwrap().to_condition(2).is_err());
        let off = r#"{"strata":[{"face":[3],"poly":"1"}]}"#;
        assert!(FinalConditionDoc::from_json(off).unwrap().to_condition(2).is_err());
        assert!(FinalConditionDoc::from_json(r#"{"strata":[{"face":[1,0],"poly":"1"}]}"#).is_err());
        assert!(FinalConditionDoc::from_json(r#"{"strata":[], "extra": 1}"#).is_err());
    }
}
