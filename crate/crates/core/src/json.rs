//! JSON encodings.
//!
//! Matrices are written as `{"rows": n, "cols": m, "data": [[re, im], ...]}`
//! in row-major order. Readers reject NaN and infinities. Writers emit every
//! float with 17 significant digits so doubles survive a round trip.

use std::io;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::CMatrix;

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl RawMatrix {
    fn from_matrix(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self { rows: m.nrows(), cols: m.ncols(), data }
    }

    fn into_matrix(self) -> std::result::Result<CMatrix, String> {
        if self.data.len() != self.rows * self.cols {
            return Err(format!(
                "matrix data has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            ));
        }
        if self.data.iter().flatten().any(|x| !x.is_finite()) {
            return Err("matrix data contains NaN or Inf".into());
        }
        let entries: Vec<Complex64> = self.data.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        Ok(CMatrix::from_row_slice(self.rows, self.cols, &entries))
    }
}

/// `#[serde(with = "json::cmatrix")]` adapter for a single matrix.
pub mod cmatrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMatrix::from_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        RawMatrix::deserialize(d)?.into_matrix().map_err(D::Error::custom)
    }
}

/// `#[serde(with = "json::cmatrix_vec")]` adapter for a list of matrices.
pub mod cmatrix_vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<RawMatrix> = ms.iter().map(RawMatrix::from_matrix).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        let raw = Vec::<RawMatrix>::deserialize(d)?;
        raw.into_iter().map(|r| r.into_matrix().map_err(D::Error::custom)).collect()
    }
}

/// Complex scalars as `[re, im]`.
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        if !re.is_finite() || !im.is_finite() {
            return Err(D::Error::custom("complex value contains NaN or Inf"));
        }
        Ok(Complex64::new(re, im))
    }
}

/// Lists of complex scalars as `[[re, im], ...]`.
pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(zs: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<[f64; 2]> = zs.iter().map(|z| [z.re, z.im]).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        if raw.iter().flatten().any(|x| !x.is_finite()) {
            return Err(D::Error::custom("complex value contains NaN or Inf"));
        }
        Ok(raw.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

/// Standalone wrapper so a bare matrix can be read or written as a document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixDoc(#[serde(with = "cmatrix")] pub CMatrix);

/// serde_json formatter printing floats with 17 significant digits.
#[derive(Default)]
pub struct FullPrecision {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value == 0.0 {
            // keeps -0.0 and 0.0 distinguishable and readable
            return write!(writer, "{}", if value.is_sign_negative() { "-0.0" } else { "0.0" });
        }
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

/// Serialize any value with [`FullPrecision`] formatting.
pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision::default());
    value.serialize(&mut ser).map_err(|e| Error::Malformed(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn from_str<'a, T: Deserialize<'a>>(s: &'a str) -> Result<T> {
    serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c64;

    #[test]
    fn matrix_roundtrip_is_exact() {
        let m = CMatrix::from_row_slice(2, 1, &[c64(0.1, -1.0 / 3.0), c64(std::f64::consts::PI, 0.0)]);
        let s = to_string(&MatrixDoc(m.clone())).unwrap();
        assert!(s.contains("\"rows\""));
        let back: MatrixDoc = from_str(&s).unwrap();
        assert_eq!(back.0, m);
    }

    #[test]
    fn reader_rejects_bad_shape() {
        let s = r#"{"rows": 2, "cols": 2, "data": [[1.0, 0.0]]}"#;
        assert!(from_str::<MatrixDoc>(s).is_err());
    }

    #[test]
    fn reader_rejects_non_finite() {
        // serde_json cannot parse NaN literals; huge exponents overflow to inf
        let s = r#"{"rows": 1, "cols": 1, "data": [[1e400, 0.0]]}"#;
        assert!(from_str::<MatrixDoc>(s).is_err());
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_string(&vec![0.1f64, 2.0]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("2.0000000000000000e0"), "{s}");
    }
}
