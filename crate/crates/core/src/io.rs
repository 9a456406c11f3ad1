//! JSON file formats.
//!
//! - matrix: `{"rows": d, "cols": d, "data": [[re, im], ...]}`, row-major, `rows·cols` entries
//! - channel: `{"dim": d, "kraus": [matrix, ...]}`
//! - representation: `{"dim": d, "elements": [matrix, ...]}`
//!
//! Loaded density matrices, channels and representations are validated on load.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use crate::channels::KrausChannel;
use crate::error::{Error, Result};
use crate::numerics::{check_finite, ComplexMatrix, TolerancePolicy};
use crate::resource::GroupRepresentation;
use crate::states::DensityMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Format("matrix dimensions must be positive".into()));
        }
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "expected {} entries for a {}x{} matrix, found {}",
                self.rows * self.cols,
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        let entries: Vec<Complex64> = self.data.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        let m = ComplexMatrix::from_row_slice(self.rows, self.cols, &entries);
        check_finite(&m)?;
        Ok(m)
    }
}

impl From<&ComplexMatrix> for MatrixFile {
    fn from(m: &ComplexMatrix) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                data.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelFile {
    pub dim: usize,
    pub kraus: Vec<MatrixFile>,
}

impl ChannelFile {
    pub fn to_channel(&self, tol: &TolerancePolicy) -> Result<KrausChannel> {
        let kraus = load_square_list(self.dim, &self.kraus)?;
        KrausChannel::new(kraus, tol)
    }
}

impl From<&KrausChannel> for ChannelFile {
    fn from(c: &KrausChannel) -> Self {
        Self {
            dim: c.dim(),
            kraus: c.kraus().iter().map(MatrixFile::from).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationFile {
    pub dim: usize,
    pub elements: Vec<MatrixFile>,
}

impl RepresentationFile {
    pub fn to_representation(&self, tol: &TolerancePolicy) -> Result<GroupRepresentation> {
        let elements = load_square_list(self.dim, &self.elements)?;
        GroupRepresentation::new(elements, tol)
    }
}

impl From<&GroupRepresentation> for RepresentationFile {
    fn from(g: &GroupRepresentation) -> Self {
        Self {
            dim: g.dim(),
            elements: g.elements().iter().map(MatrixFile::from).collect(),
        }
    }
}

fn load_square_list(dim: usize, files: &[MatrixFile]) -> Result<Vec<ComplexMatrix>> {
    files
        .iter()
        .map(|f| {
            if f.rows != dim || f.cols != dim {
                return Err(Error::Format(format!(
                    "expected {dim}x{dim} matrix, found {}x{}",
                    f.rows, f.cols
                )));
            }
            f.to_matrix()
        })
        .collect()
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    read_json::<MatrixFile>(path.as_ref())?.to_matrix()
}

pub fn load_density(path: impl AsRef<Path>, tol: &TolerancePolicy) -> Result<DensityMatrix> {
    DensityMatrix::validate(load_matrix(path)?, tol)
}

pub fn load_channel(path: impl AsRef<Path>, tol: &TolerancePolicy) -> Result<KrausChannel> {
    read_json::<ChannelFile>(path.as_ref())?.to_channel(tol)
}

pub fn load_representation(path: impl AsRef<Path>, tol: &TolerancePolicy) -> Result<GroupRepresentation> {
    read_json::<RepresentationFile>(path.as_ref())?.to_representation(tol)
}

/// JSON formatter that prints every float with 17 significant digits (`null` if non-finite),
/// pretty-printed with two-space indentation.
#[derive(Debug, Default)]
pub struct FullPrecisionFormatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl Formatter for FullPrecisionFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(writer)
    }
}

/// Serialize `value` as pretty JSON with full-precision floats.
pub fn to_json_full_precision<T: Serialize + ?Sized, W: Write>(value: &T, writer: W) -> Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(writer, FullPrecisionFormatter::default());
    value.serialize(&mut ser)?;
    Ok(())
}

/// Float with 17 significant digits, as used in CSV output and on the command line.
pub fn format_f64(value: f64) -> String {
    if value.is_finite() {
        format!("{value:.16e}")
    } else if value.is_nan() {
        "nan".into()
    } else if value > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}
