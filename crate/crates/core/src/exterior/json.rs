use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{G2Error, Result};
use crate::scalar::Scalar;

use super::{KForm, MultiIndex, DIM};

/// Wire format of a form: `{"degree": k, "entries": [{"idx": [..], "coeff": ..}]}`.
/// Omitted indices are zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KFormJson {
    pub degree: usize,
    pub entries: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub idx: Vec<usize>,
    pub coeff: Value,
}

impl<S: Scalar> KForm<S> {
    pub fn to_wire(&self) -> KFormJson {
        KFormJson {
            degree: self.degree(),
            entries: self
                .nonzero_terms()
                .map(|(idx, c)| TermJson { idx: idx.indices(), coeff: c.to_json() })
                .collect(),
        }
    }

    pub fn from_wire(w: &KFormJson) -> Result<Self> {
        if w.degree > DIM {
            return Err(G2Error::Parse(format!("degree {} out of range", w.degree)));
        }
        let mut coeffs = KForm::<S>::zero(w.degree).coeffs().to_vec();
        for e in &w.entries {
            let mi = MultiIndex::new(&e.idx).map_err(|e| G2Error::Parse(e.to_string()))?;
            if mi.degree() != w.degree {
                return Err(G2Error::Parse(format!(
                    "index {:?} does not match degree {}",
                    e.idx, w.degree
                )));
            }
            let p = mi.position();
            coeffs[p] = coeffs[p].clone() + S::from_json(&e.coeff)?;
        }
        KForm::from_coeffs(w.degree, coeffs)
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self.to_wire()).expect("serializable")
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let w: KFormJson =
            serde_json::from_value(v.clone()).map_err(|e| G2Error::Parse(e.to_string()))?;
        Self::from_wire(&w)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| G2Error::Parse(e.to_string()))?;
        Self::from_json(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use serde_json::json;

    #[test]
    fn exact_round_trip() {
        let v = json!({"degree": 2, "entries": [{"idx": [2, 3], "coeff": "3/5"}, {"idx": [1, 7], "coeff": "-1"}]});
        let f = KForm::<Rational>::from_json(&v).unwrap();
        assert_eq!(f.coeff_at(&[2, 3]), Rational::from_ratio(3, 5));
        assert_eq!(f.coeff_at(&[1, 7]), Rational::from_i64(-1));
        let back = KForm::<Rational>::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(f.to_json()["entries"][0]["coeff"], json!("-1/1"));
    }

    #[test]
    fn exact_rejects_floats() {
        let v = json!({"degree": 1, "entries": [{"idx": [1], "coeff": 0.5}]});
        assert!(KForm::<Rational>::from_json(&v).is_err());
        assert!(KForm::<f64>::from_json(&v).is_ok());
    }

    #[test]
    fn malformed_indices() {
        for v in [
            json!({"degree": 2, "entries": [{"idx": [3, 2], "coeff": "1"}]}),
            json!({"degree": 2, "entries": [{"idx": [1, 2, 3], "coeff": "1"}]}),
            json!({"degree": 8, "entries": []}),
            json!({"entries": []}),
        ] {
            assert!(matches!(KForm::<Rational>::from_json(&v), Err(G2Error::Parse(_))), "{v}");
        }
    }
}
