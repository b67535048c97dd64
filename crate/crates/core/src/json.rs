//! JSON encoding of dense matrices.
//!
//! Matrices are written as `{"shape": [rows, cols], "data": [row-major]}` with
//! every entry printed to 17 significant digits, so identical values always
//! produce identical bytes. On input a bare nested array of rows is accepted too.

use nalgebra::DMatrix;
use serde::de::Error as _;
use serde::ser::{Error as _, SerializeSeq, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

/// Current version tag written into top-level JSON documents.
pub const SCHEMA_VERSION: u32 = 1;

/// Fixed 17-significant-digit rendering of a finite float.
pub fn format_f64(x: f64) -> Option<String> {
    if !x.is_finite() {
        return None;
    }
    Some(format!("{x:.16e}"))
}

struct FixedDigits<'a>(&'a [f64]);

impl Serialize for FixedDigits<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.len()))?;
        for &x in self.0 {
            let txt = format_f64(x).ok_or_else(|| S::Error::custom(format!("non-finite value {x}")))?;
            let raw = RawValue::from_string(txt).map_err(S::Error::custom)?;
            seq.serialize_element(&raw)?;
        }
        seq.end()
    }
}

/// A single float with the fixed formatting; non-finite values become `null`.
pub struct Fixed(pub f64);

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match format_f64(self.0) {
            Some(txt) => RawValue::from_string(txt)
                .map_err(S::Error::custom)?
                .serialize(s),
            None => s.serialize_none(),
        }
    }
}

pub(crate) fn serialize_matrix_fields<S: SerializeStruct>(
    st: &mut S,
    m: &DMatrix<f64>,
) -> Result<(), S::Error> {
    st.serialize_field("shape", &[m.nrows(), m.ncols()])?;
    let data = crate::linalg::row_major(m);
    st.serialize_field("data", &FixedDigits(&data))
}

#[derive(Deserialize)]
#[serde(untagged)]
pub(crate) enum DataInput {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl DataInput {
    pub(crate) fn into_matrix(self, shape: Option<[usize; 2]>) -> Result<DMatrix<f64>, String> {
        match (self, shape) {
            (DataInput::Flat(v), Some([r, c])) => {
                if v.len() != r * c {
                    return Err(format!("shape {r}x{c} needs {} values, got {}", r * c, v.len()));
                }
                Ok(DMatrix::from_row_slice(r, c, &v))
            }
            (DataInput::Flat(_), None) => Err("flat data needs a `shape`".into()),
            (DataInput::Nested(rows), shape) => {
                let r = rows.len();
                let c = rows.first().map_or(0, Vec::len);
                if rows.iter().any(|row| row.len() != c) {
                    return Err("ragged nested rows".into());
                }
                if let Some([sr, sc]) = shape {
                    if (sr, sc) != (r, c) {
                        return Err(format!("shape {sr}x{sc} disagrees with data {r}x{c}"));
                    }
                }
                let flat: Vec<f64> = rows.into_iter().flatten().collect();
                Ok(DMatrix::from_row_slice(r, c, &flat))
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MatrixInput {
    Object {
        #[serde(default)]
        shape: Option<[usize; 2]>,
        data: DataInput,
    },
    Nested(Vec<Vec<f64>>),
}

struct MatrixOut<'a>(&'a DMatrix<f64>);

impl Serialize for MatrixOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Matrix", 2)?;
        serialize_matrix_fields(&mut st, self.0)?;
        st.end()
    }
}

fn matrix_from_input(input: MatrixInput) -> Result<DMatrix<f64>, String> {
    match input {
        MatrixInput::Object { shape, data } => data.into_matrix(shape),
        MatrixInput::Nested(rows) => DataInput::Nested(rows).into_matrix(None),
    }
}

/// `#[serde(with = "crate::json::matrix")]` for `DMatrix<f64>` fields.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        MatrixOut(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        matrix_from_input(MatrixInput::deserialize(d)?).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "crate::json::matrix_vec")]` for `Vec<DMatrix<f64>>` fields.
pub mod matrix_vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(ms.len()))?;
        for m in ms {
            seq.serialize_element(&MatrixOut(m))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        Vec::<MatrixInput>::deserialize(d)?
            .into_iter()
            .map(|m| matrix_from_input(m).map_err(D::Error::custom))
            .collect()
    }
}

/// `#[serde(with = "crate::json::fixed")]` for `f64` fields.
pub mod fixed {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        Fixed(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Same as [`fixed`] for `Option<f64>`.
pub mod fixed_opt {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => Fixed(*v).serialize(s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<f64>::deserialize(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Holder {
        #[serde(with = "matrix")]
        m: DMatrix<f64>,
        #[serde(with = "fixed")]
        x: f64,
    }

    #[test]
    fn fixed_digits_round_trip() {
        let h = Holder {
            m: DMatrix::from_row_slice(2, 2, &[0.1, -2.5e-17, 1.0 / 3.0, 7.0]),
            x: -0.124035,
        };
        let txt = serde_json::to_string(&h).unwrap();
        assert!(txt.contains("1.0000000000000001e-1"), "{txt}");
        assert!(txt.contains(r#""shape":[2,2]"#));
        let back: Holder = serde_json::from_str(&txt).unwrap();
        assert_eq!(back.m, h.m);
        assert_eq!(back.x, h.x);
    }

    #[test]
    fn nested_input_accepted() {
        let h: Holder = serde_json::from_str(r#"{"m": [[1, 2], [3, 4]], "x": 1}"#).unwrap();
        assert_eq!(h.m[(1, 0)], 3.0);
        let bad = serde_json::from_str::<Holder>(r#"{"m": {"shape": [2, 2], "data": [1, 2, 3]}, "x": 1}"#);
        assert!(bad.is_err());
    }
}
