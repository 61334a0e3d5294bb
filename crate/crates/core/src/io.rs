//! File formats: raw field dumps with a JSON sidecar, binary PGM images, CSV series and
//! JSON reports. Every writer is deterministic.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FieldMeta, GridSpec, ScalarField};
use crate::polarization::VectorField;

pub const DUMP_VERSION: u32 = 1;
const BYTES_PER_SAMPLE: u64 = 16;

/// Phase and orientation conventions stamped into every dump and report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convention {
    pub phase_origin: String,
    pub positive_rotation: String,
}

impl Default for Convention {
    fn default() -> Self {
        Self {
            phase_origin: "+x".into(),
            positive_rotation: "+x→+w".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDumpHeader {
    pub version: u32,
    pub n_u: usize,
    pub n_w: usize,
    pub du: f64,
    pub dw: f64,
    pub u_min: f64,
    pub w_min: f64,
    pub u_half: f64,
    pub w_half: f64,
    /// `["scalar"]` or `["S", "P"]`; planes are stored in this order.
    pub components: Vec<String>,
    pub y0: f64,
    pub convention: Convention,
    pub dtype: String,
    pub layout: String,
    pub data_file: String,
    #[serde(default)]
    pub meta: Vec<FieldMeta>,
}

impl FieldDumpHeader {
    pub fn data_len(&self) -> u64 {
        self.n_u as u64 * self.n_w as u64 * self.components.len() as u64 * BYTES_PER_SAMPLE
    }

    fn grid(&self) -> Result<GridSpec> {
        let grid = GridSpec::new(self.n_u, self.n_w, self.u_half, self.w_half)
            .map_err(|e| Error::Header(e.to_string()))?;
        if grid.du() != self.du
            || grid.dw() != self.dw
            || grid.u(0) != self.u_min
            || grid.w(0) != self.w_min
        {
            return Err(Error::Header("sampling fields are inconsistent".into()));
        }
        Ok(grid)
    }
}

/// A scalar or two-component field, as stored in a dump.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl From<ScalarField> for FieldData {
    fn from(f: ScalarField) -> Self {
        FieldData::Scalar(f)
    }
}

impl From<VectorField> for FieldData {
    fn from(f: VectorField) -> Self {
        FieldData::Vector(f)
    }
}

impl FieldData {
    fn planes(&self) -> Vec<&ScalarField> {
        match self {
            FieldData::Scalar(f) => vec![f],
            FieldData::Vector(v) => vec![&v.s_field, &v.p_field],
        }
    }

    fn labels(&self) -> Vec<String> {
        match self {
            FieldData::Scalar(_) => vec!["scalar".into()],
            FieldData::Vector(_) => vec!["S".into(), "P".into()],
        }
    }
}

fn data_path(header_path: &Path) -> PathBuf {
    header_path.with_extension("bin")
}

/// Writes `<path>` (JSON header) and `<path>.bin` (little-endian f64 samples).
pub fn write_field(field: &FieldData, path: &Path) -> Result<FieldDumpHeader> {
    let planes = field.planes();
    let first = planes[0];
    let grid = first.grid;
    let data = data_path(path);
    let header = FieldDumpHeader {
        version: DUMP_VERSION,
        n_u: grid.n_u,
        n_w: grid.n_w,
        du: grid.du(),
        dw: grid.dw(),
        u_min: grid.u(0),
        w_min: grid.w(0),
        u_half: grid.u_half,
        w_half: grid.w_half,
        components: field.labels(),
        y0: first.y0,
        convention: Convention::default(),
        dtype: "f64le".into(),
        layout: "row-major, u outer, w inner, re/im interleaved".into(),
        data_file: data
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::Header(format!("bad dump path {}", path.display())))?
            .to_string(),
        meta: planes.iter().map(|p| p.meta.clone()).collect(),
    };
    let mut bytes = Vec::with_capacity(header.data_len() as usize);
    for plane in &planes {
        for v in plane.values.iter() {
            bytes.extend_from_slice(&v.re.to_le_bytes());
            bytes.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    fs::write(&data, bytes)?;
    write_report(&header, path)?;
    Ok(header)
}

pub fn read_header(path: &Path) -> Result<FieldDumpHeader> {
    let text = fs::read_to_string(path)?;
    let raw: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Header(e.to_string()))?;
    let version = raw
        .get("version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Header("missing version".into()))?;
    if version != u64::from(DUMP_VERSION) {
        return Err(Error::Version {
            found: version.try_into().unwrap_or(u32::MAX),
            expected: DUMP_VERSION,
        });
    }
    let header: FieldDumpHeader =
        serde_json::from_value(raw).map_err(|e| Error::Header(e.to_string()))?;
    if header.dtype != "f64le" {
        return Err(Error::Header(format!(
            "unsupported dtype '{}'",
            header.dtype
        )));
    }
    Ok(header)
}

pub fn read_field(path: &Path) -> Result<(FieldDumpHeader, FieldData)> {
    let header = read_header(path)?;
    let grid = header.grid()?;
    let planes = match header.components.as_slice() {
        [c] if c == "scalar" => 1,
        [s, p] if s == "S" && p == "P" => 2,
        other => return Err(Error::Header(format!("unknown components {other:?}"))),
    };
    let data_file = path
        .parent()
        .map(|d| d.join(&header.data_file))
        .unwrap_or_else(|| PathBuf::from(&header.data_file));
    let bytes = fs::read(&data_file)?;
    if bytes.len() as u64 != header.data_len() {
        return Err(Error::SizeMismatch {
            expected: header.data_len(),
            found: bytes.len() as u64,
        });
    }
    let plane_len = grid.n_u * grid.n_w;
    let decode = |k: usize| {
        let at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8-byte slice"));
        let base = k * BYTES_PER_SAMPLE as usize;
        Complex64::new(at(base), at(base + 8))
    };
    let mut fields = Vec::with_capacity(planes);
    for plane in 0..planes {
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| {
            decode(plane * plane_len + i * grid.n_w + j)
        });
        let meta = header.meta.get(plane).cloned().unwrap_or_default();
        fields.push(
            ScalarField::from_values(grid, values, header.y0, meta)
                .map_err(|e| Error::Header(e.to_string()))?,
        );
    }
    let data = if planes == 1 {
        FieldData::Scalar(fields.pop().expect("one plane"))
    } else {
        let p = fields.pop().expect("two planes");
        let s = fields.pop().expect("two planes");
        FieldData::Vector(VectorField::new(s, p)?)
    };
    Ok((header, data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageDepth {
    Eight,
    Sixteen,
}

impl ImageDepth {
    fn maxval(self) -> u32 {
        match self {
            ImageDepth::Eight => 255,
            ImageDepth::Sixteen => 65535,
        }
    }
}

/// Binary PGM (P5). Row `r` of `image` becomes raster row `r`; values are scaled
/// linearly so the image maximum maps to maxval.
pub fn encode_pgm(image: &Array2<f64>, depth: ImageDepth) -> Result<Vec<u8>> {
    let peak = image.iter().copied().fold(0.0, f64::max);
    encode_pgm_scaled(image, depth, peak)
}

/// [`encode_pgm`] with a fixed full-scale value. Samples above it saturate; a
/// non-positive scale gives an all-zero image.
pub fn encode_pgm_scaled(
    image: &Array2<f64>,
    depth: ImageDepth,
    full_scale: f64,
) -> Result<Vec<u8>> {
    if let Some(bad) = image.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidParam(format!(
            "image samples must be finite and non-negative, found {bad}"
        )));
    }
    let (rows, cols) = image.dim();
    let maxval = depth.maxval();
    let mut out = format!("P5\n{cols} {rows}\n{maxval}\n").into_bytes();
    for v in image.iter() {
        let level = if full_scale > 0.0 {
            (v / full_scale * f64::from(maxval))
                .round()
                .min(f64::from(maxval)) as u32
        } else {
            0
        };
        match depth {
            ImageDepth::Eight => out.push(level as u8),
            ImageDepth::Sixteen => out.extend_from_slice(&(level as u16).to_be_bytes()),
        }
    }
    Ok(out)
}

pub fn write_image(image: &Array2<f64>, path: &Path, depth: ImageDepth) -> Result<()> {
    fs::write(path, encode_pgm(image, depth)?)?;
    Ok(())
}

pub fn write_image_scaled(
    image: &Array2<f64>,
    path: &Path,
    depth: ImageDepth,
    full_scale: f64,
) -> Result<()> {
    fs::write(path, encode_pgm_scaled(image, depth, full_scale)?)?;
    Ok(())
}

/// CSV with a header row and `\n` endings; numbers use the shortest round-trip form.
pub fn encode_csv(columns: &[(&str, &[f64])]) -> Result<String> {
    let (_, first) = columns.first().ok_or(Error::Empty("csv columns"))?;
    let rows = first.len();
    for (name, col) in columns {
        if col.len() != rows {
            return Err(Error::LengthMismatch {
                name: name.to_string(),
                expected: rows,
                found: col.len(),
            });
        }
    }
    let mut out = columns
        .iter()
        .map(|(n, _)| *n)
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|(_, c)| format!("{:?}", c[r])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(columns: &[(&str, &[f64])], path: &Path) -> Result<()> {
    fs::write(path, encode_csv(columns)?)?;
    Ok(())
}

/// Pretty-printed JSON with a trailing newline. Key order follows struct field order.
pub fn write_report<T: Serialize + ?Sized>(record: &T, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path)?;
    let text = serde_json::to_string_pretty(record).map_err(|e| Error::Header(e.to_string()))?;
    file.write_all(text.as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}
