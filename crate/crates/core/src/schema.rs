//! JSON wire forms for instances: fields over weighted atoms and sign-sum
//! coefficient lists. These are plain `f64` data-transfer shapes; validation
//! happens in the typed constructors they convert into.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rademacher::RademacherSum;
use crate::space::Field;

/// Wire form of a vector-valued field:
/// `{ "weights": [w1,...,wn], "dim": d, "values": [[...],...] }`.
/// `weights` may be omitted for the uniform distribution.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldJson {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub weights: Option<Vec<f64>>,
    pub dim: usize,
    pub values: Vec<Vec<f64>>,
}

impl FieldJson {
    pub fn to_field(&self) -> Result<Field<f64>> {
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != self.dim {
                return Err(Error::InvalidValues(format!(
                    "values[{i}] has {} coordinates, dim says {}",
                    row.len(),
                    self.dim
                )));
            }
        }
        Field::from_parts(self.weights.clone(), self.values.clone())
    }

    pub fn from_field(field: &Field<f64>) -> Self {
        FieldJson {
            weights: Some(field.space().weights().to_vec()),
            dim: field.dim(),
            values: field.rows(),
        }
    }
}

/// Wire form of a sign sum: `{ "dim": d, "xs": [[...],...] }`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SumJson {
    pub dim: usize,
    pub xs: Vec<Vec<f64>>,
}

impl SumJson {
    pub fn to_sum(&self) -> Result<RademacherSum<f64>> {
        for (j, x) in self.xs.iter().enumerate() {
            if x.len() != self.dim {
                return Err(Error::InvalidValues(format!(
                    "xs[{j}] has {} coordinates, dim says {}",
                    x.len(),
                    self.dim
                )));
            }
        }
        RademacherSum::new(self.xs.clone())
    }

    pub fn from_sum(sum: &RademacherSum<f64>) -> Self {
        SumJson { dim: sum.dim(), xs: sum.xs().to_vec() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Exponent;
    use approx::assert_relative_eq;

    #[test]
    fn field_round_trip_with_default_weights() {
        let json = r#"{ "dim": 1, "values": [[1.0], [2.0]] }"#;
        let dto: FieldJson = serde_json::from_str(json).unwrap();
        let field = dto.to_field().unwrap();
        assert_eq!(field.space().len(), 2);
        assert_relative_eq!(field.space().weights()[0], 0.5, epsilon = 1e-15);
        let p4 = Exponent::new(4.0).unwrap();
        assert_relative_eq!(field.p_norm(p4), 8.5f64.powf(0.25), epsilon = 1e-12);

        let back = FieldJson::from_field(&field);
        let again = back.to_field().unwrap();
        assert_eq!(again.rows(), field.rows());
    }

    #[test]
    fn field_rejects_malformed_input() {
        let bad_dim = r#"{ "dim": 2, "values": [[1.0], [2.0]] }"#;
        let dto: FieldJson = serde_json::from_str(bad_dim).unwrap();
        assert!(matches!(dto.to_field(), Err(Error::InvalidValues(_))));

        let unknown = r#"{ "dim": 1, "values": [[1.0]], "wieghts": [1.0] }"#;
        assert!(serde_json::from_str::<FieldJson>(unknown).is_err());

        let mismatched = r#"{ "weights": [0.5, 0.5, 0.0], "dim": 1, "values": [[1.0], [2.0]] }"#;
        let dto: FieldJson = serde_json::from_str(mismatched).unwrap();
        assert!(dto.to_field().is_err());
    }

    #[test]
    fn sum_round_trip_and_diagnostics() {
        let json = r#"{ "dim": 2, "xs": [[1.0, 0.0], [0.0, 1.0]] }"#;
        let dto: SumJson = serde_json::from_str(json).unwrap();
        let sum = dto.to_sum().unwrap();
        assert_eq!(sum.len(), 2);
        assert_eq!(SumJson::from_sum(&sum), dto);

        let ragged = r#"{ "dim": 2, "xs": [[1.0, 0.0], [1.0]] }"#;
        let dto: SumJson = serde_json::from_str(ragged).unwrap();
        assert!(matches!(dto.to_sum(), Err(Error::InvalidValues(_))));
    }
}
