//! Gridded scalar fields: loading, slicing and summary statistics.
//!
//! Raw files follow the SDRBench layout: little-endian IEEE-754 values,
//! row-major, last dimension fastest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// On-disk element type of a raw dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementType {
    F32,
    F64,
}

impl ElementType {
    pub fn width(self) -> usize {
        match self {
            ElementType::F32 => 4,
            ElementType::F64 => 8,
        }
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElementType::F32 => "f32",
            ElementType::F64 => "f64",
        })
    }
}

impl FromStr for ElementType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "float" | "float32" => Ok(ElementType::F32),
            "f64" | "double" | "float64" => Ok(ElementType::F64),
            other => Err(Error::Parse(format!("unknown element type `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Little,
    Big,
}

impl FromStr for ByteOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "le" | "little" => Ok(ByteOrder::Little),
            "be" | "big" => Ok(ByteOrder::Big),
            other => Err(Error::Parse(format!("unknown byte order `{other}`"))),
        }
    }
}

/// A dense n-D array of finite reals. Values are held in double precision;
/// `dtype` remembers the width of the original representation, which is what
/// compression ratios are measured against.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    values: Vec<f64>,
    shape: Vec<usize>,
    dtype: ElementType,
    pub origin_tag: String,
}

pub const MAX_DIMS: usize = 4;

impl ScalarField {
    pub fn new(values: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        Self::with_dtype(values, shape, ElementType::F32)
    }

    pub fn with_dtype(values: Vec<f64>, shape: Vec<usize>, dtype: ElementType) -> Result<Self> {
        if shape.is_empty() || shape.len() > MAX_DIMS {
            return Err(Error::InvalidShape {
                shape,
                reason: format!("dimensionality must be in 1..={MAX_DIMS}"),
            });
        }
        if shape.contains(&0) {
            return Err(Error::InvalidShape {
                shape,
                reason: "extents must be positive".into(),
            });
        }
        let expected: usize = shape.iter().product();
        if expected != values.len() {
            return Err(Error::InvalidShape {
                shape,
                reason: format!("holds {} values, shape needs {expected}", values.len()),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self {
            values,
            shape,
            dtype,
            origin_tag: String::new(),
        })
    }

    pub fn tagged(mut self, tag: impl Into<String>) -> Self {
        self.origin_tag = tag.into();
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn dims(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dtype(&self) -> ElementType {
        self.dtype
    }

    /// Size of the field in its original on-disk representation.
    pub fn original_bytes(&self) -> u64 {
        (self.values.len() * self.dtype.width()) as u64
    }

    /// Row-major strides, last dimension fastest.
    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.shape)
    }

    pub fn stats(&self) -> Result<FieldStats> {
        field_stats(self)
    }
}

pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    strides
}

/// One record of a dataset manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub element_type: ElementType,
    pub shape: Vec<usize>,
    pub byte_order: ByteOrder,
    pub field_name: String,
}

impl ManifestEntry {
    pub fn expected_bytes(&self) -> u64 {
        (self.shape.iter().product::<usize>() * self.element_type.width()) as u64
    }
}

/// A list of raw datasets, one per non-comment line:
///
/// ```text
/// # path            dtype  shape        field       [byte order]
/// miranda/vx.f32    f32    256,384,384  velocityx   le
/// ```
///
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw_line) in text.lines().enumerate() {
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Manifest { line: i + 1, reason };
            let cols: Vec<&str> = line.split_whitespace().collect();
            if !(4..=5).contains(&cols.len()) {
                return Err(bad(format!("expected 4 or 5 columns, found {}", cols.len())));
            }
            let element_type = cols[1].parse().map_err(|e: Error| bad(e.to_string()))?;
            let shape = parse_shape(cols[2]).map_err(|e| bad(e.to_string()))?;
            let byte_order = match cols.get(4) {
                Some(s) => s.parse().map_err(|e: Error| bad(e.to_string()))?,
                None => ByteOrder::Little,
            };
            let path = Path::new(cols[0]);
            let path = if path.is_absolute() {
                path.to_path_buf()
            } else {
                base_dir.join(path)
            };
            entries.push(ManifestEntry {
                path,
                element_type,
                shape,
                byte_order,
                field_name: cols[3].to_string(),
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::UnreadableFile {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# path dtype shape field byte_order\n");
        for e in &self.entries {
            let order = match e.byte_order {
                ByteOrder::Little => "le",
                ByteOrder::Big => "be",
            };
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                e.path.display(),
                e.element_type,
                format_shape(&e.shape),
                e.field_name,
                order
            ));
        }
        out
    }
}

pub fn parse_shape(s: &str) -> Result<Vec<usize>> {
    let shape = s
        .split([',', 'x'])
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad extent `{t}` in shape `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::Parse(format!("shape `{s}` needs positive extents")));
    }
    Ok(shape)
}

pub fn format_shape(shape: &[usize]) -> String {
    shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

/// Reads a raw binary file described by a manifest entry.
pub fn load_raw(entry: &ManifestEntry) -> Result<ScalarField> {
    let bytes = fs::read(&entry.path).map_err(|source| Error::UnreadableFile {
        path: entry.path.clone(),
        source,
    })?;
    let expected = entry.expected_bytes();
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let values = decode_values(&bytes, entry.element_type, entry.byte_order);
    Ok(ScalarField::with_dtype(values, entry.shape.clone(), entry.element_type)?
        .tagged(entry.field_name.clone()))
}

fn decode_values(bytes: &[u8], dtype: ElementType, order: ByteOrder) -> Vec<f64> {
    match dtype {
        ElementType::F32 => bytes
            .chunks_exact(4)
            .map(|c| {
                let b = [c[0], c[1], c[2], c[3]];
                f64::from(match order {
                    ByteOrder::Little => f32::from_le_bytes(b),
                    ByteOrder::Big => f32::from_be_bytes(b),
                })
            })
            .collect(),
        ElementType::F64 => bytes
            .chunks_exact(8)
            .map(|c| {
                let b: [u8; 8] = c.try_into().expect("chunk of 8");
                match order {
                    ByteOrder::Little => f64::from_le_bytes(b),
                    ByteOrder::Big => f64::from_be_bytes(b),
                }
            })
            .collect(),
    }
}

/// Encodes the field in its own element type, little-endian.
pub fn raw_bytes(field: &ScalarField) -> Vec<u8> {
    let mut out = Vec::with_capacity(field.original_bytes() as usize);
    match field.dtype() {
        ElementType::F32 => {
            for &v in field.values() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        ElementType::F64 => {
            for &v in field.values() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

pub fn write_raw(field: &ScalarField, path: &Path) -> Result<()> {
    fs::write(path, raw_bytes(field))?;
    Ok(())
}

/// The 2D (or 3D) samples obtained by cutting a field along one axis.
#[derive(Debug, Clone)]
pub struct SliceStack {
    pub slices: Vec<ScalarField>,
    pub source_field: String,
    pub slice_axis: usize,
}

impl SliceStack {
    /// Stacks the slices back along `slice_axis`.
    pub fn restack(&self) -> Result<ScalarField> {
        let first = self.slices.first().ok_or(Error::EmptyField)?;
        let mut shape = first.shape().to_vec();
        shape.insert(self.slice_axis, self.slices.len());
        let strides = strides_of(&shape);
        let mut values = vec![0.0; shape.iter().product()];
        for (k, slice) in self.slices.iter().enumerate() {
            for (flat, &v) in slice.values().iter().enumerate() {
                values[source_index(flat, slice.shape(), self.slice_axis, k, &strides)] = v;
            }
        }
        Ok(ScalarField::with_dtype(values, shape, first.dtype())?.tagged(self.source_field.clone()))
    }

    pub fn len(&self) -> usize {
        self.slices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slices.is_empty()
    }
}

// Maps a flat index inside a slice to the flat index in the parent field.
fn source_index(
    flat: usize,
    slice_shape: &[usize],
    axis: usize,
    k: usize,
    parent_strides: &[usize],
) -> usize {
    let mut rem = flat;
    let mut idx = k * parent_strides[axis];
    for d in (0..slice_shape.len()).rev() {
        let coord = rem % slice_shape[d];
        rem /= slice_shape[d];
        let parent_dim = if d >= axis { d + 1 } else { d };
        idx += coord * parent_strides[parent_dim];
    }
    idx
}

/// Cuts `field` into `shape[axis]` slices of one dimension less.
pub fn slice_stack(field: &ScalarField, axis: usize) -> Result<SliceStack> {
    let dims = field.dims();
    if dims < 3 {
        return Err(Error::TooFewDims { dims });
    }
    if axis >= dims {
        return Err(Error::AxisOutOfRange { axis, dims });
    }
    let shape = field.shape();
    let strides = field.strides();
    let slice_shape: Vec<usize> = shape
        .iter()
        .enumerate()
        .filter(|&(d, _)| d != axis)
        .map(|(_, &e)| e)
        .collect();
    let per_slice: usize = slice_shape.iter().product();
    let mut slices = Vec::with_capacity(shape[axis]);
    for k in 0..shape[axis] {
        let values: Vec<f64> = if axis == 0 {
            field.values()[k * per_slice..(k + 1) * per_slice].to_vec()
        } else {
            (0..per_slice)
                .map(|flat| field.values()[source_index(flat, &slice_shape, axis, k, &strides)])
                .collect()
        };
        let tag = format!("{}[{axis}={k}]", field.origin_tag);
        slices.push(ScalarField::with_dtype(values, slice_shape.clone(), field.dtype())?.tagged(tag));
    }
    Ok(SliceStack {
        slices,
        source_field: field.origin_tag.clone(),
        slice_axis: axis,
    })
}

/// Summary statistics of a field. `stddev` is the population standard
/// deviation (divisor N).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldStats {
    pub mean: f64,
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
    pub value_range: f64,
}

pub fn field_stats(field: &ScalarField) -> Result<FieldStats> {
    values_stats(field.values())
}

pub(crate) fn values_stats(values: &[f64]) -> Result<FieldStats> {
    if values.is_empty() {
        return Err(Error::EmptyField);
    }
    // Welford keeps the single pass stable for large offsets.
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
        min = min.min(v);
        max = max.max(v);
    }
    let stddev = (m2 / values.len() as f64).max(0.0).sqrt();
    Ok(FieldStats {
        mean,
        stddev,
        min,
        max,
        value_range: max - min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(path: PathBuf, shape: Vec<usize>) -> ManifestEntry {
        ManifestEntry {
            path,
            element_type: ElementType::F32,
            shape,
            byte_order: ByteOrder::Little,
            field_name: "t".into(),
        }
    }

    #[test]
    fn load_two_f32_values() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.f32");
        let mut bytes = 1.5f32.to_le_bytes().to_vec();
        bytes.extend_from_slice(&(-2.0f32).to_le_bytes());
        fs::write(&p, bytes).unwrap();
        let f = load_raw(&entry(p, vec![2])).unwrap();
        assert_eq!(f.values(), &[1.5, -2.0]);
    }

    #[test]
    fn load_rejects_size_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.f32");
        fs::write(&p, [0u8; 9]).unwrap();
        match load_raw(&entry(p, vec![2])) {
            Err(Error::SizeMismatch { expected: 8, actual: 9 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn load_reports_nan_index() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.f32");
        let mut bytes = Vec::new();
        for v in [0.0f32, 1.0, f32::NAN] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&p, bytes).unwrap();
        assert!(matches!(
            load_raw(&entry(p, vec![3])),
            Err(Error::NonFiniteValue { index: 2 })
        ));
    }

    #[test]
    fn missing_file_is_unreadable() {
        let e = entry(PathBuf::from("/nonexistent/x.f32"), vec![2]);
        assert!(matches!(load_raw(&e), Err(Error::UnreadableFile { .. })));
    }

    #[test]
    fn big_endian_f64() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.f64");
        fs::write(&p, 3.25f64.to_be_bytes()).unwrap();
        let mut e = entry(p, vec![1]);
        e.element_type = ElementType::F64;
        e.byte_order = ByteOrder::Big;
        assert_eq!(load_raw(&e).unwrap().values(), &[3.25]);
    }

    #[test]
    fn slice_counts_and_shapes() {
        let f = ScalarField::new(vec![0.0; 48], vec![3, 4, 4]).unwrap();
        let s = slice_stack(&f, 0).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.slices.iter().all(|x| x.shape() == [4, 4]));
    }

    #[test]
    fn slice_needs_three_dims() {
        let f = ScalarField::new(vec![0.0; 16], vec![4, 4]).unwrap();
        assert!(matches!(slice_stack(&f, 0), Err(Error::TooFewDims { dims: 2 })));
        let g = ScalarField::new(vec![0.0; 8], vec![2, 2, 2]).unwrap();
        assert!(matches!(slice_stack(&g, 3), Err(Error::AxisOutOfRange { .. })));
    }

    #[test]
    fn slice_matches_flat_index_arithmetic() {
        let f = ScalarField::new((0..24).map(f64::from).collect(), vec![2, 3, 4]).unwrap();
        let s = slice_stack(&f, 0).unwrap();
        let expected: Vec<f64> = (12..24).map(f64::from).collect();
        assert_eq!(s.slices[1].values(), expected.as_slice());

        // axis 1: element (i, j) of slice k is source (i, k, j) = i*12 + k*4 + j
        let s1 = slice_stack(&f, 1).unwrap();
        for k in 0..3 {
            for i in 0..2 {
                for j in 0..4 {
                    let oracle = (i * 12 + k * 4 + j) as f64;
                    assert_eq!(s1.slices[k].values()[i * 4 + j], oracle);
                }
            }
        }
        // axis 2: element (i, j) of slice k is source (i, j, k)
        let s2 = slice_stack(&f, 2).unwrap();
        assert_eq!(s2.slices[3].values(), &[3.0, 7.0, 11.0, 15.0, 19.0, 23.0]);
    }

    #[test]
    fn stats_constant_and_pair() {
        let c = ScalarField::new(vec![1.0; 4], vec![4]).unwrap().stats().unwrap();
        assert_eq!((c.mean, c.stddev, c.value_range), (1.0, 0.0, 0.0));
        let p = ScalarField::new(vec![0.0, 2.0], vec![2]).unwrap().stats().unwrap();
        assert_eq!((p.mean, p.stddev, p.min, p.max), (1.0, 1.0, 0.0, 2.0));
    }

    #[test]
    fn stats_match_two_pass_reference() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let v: Vec<f64> = (0..1000).map(|_| 1e3 + rng.random::<f64>() * 5.0).collect();
        let s = values_stats(&v).unwrap();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(((s.mean - mean) / mean).abs() < 1e-12);
        assert!(((s.stddev - var.sqrt()) / var.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn stats_of_empty_values() {
        assert!(matches!(values_stats(&[]), Err(Error::EmptyField)));
    }

    #[test]
    fn rejects_nonfinite_and_bad_shape() {
        assert!(matches!(
            ScalarField::new(vec![0.0, f64::INFINITY], vec![2]),
            Err(Error::NonFiniteValue { index: 1 })
        ));
        assert!(ScalarField::new(vec![0.0; 3], vec![2, 2]).is_err());
        assert!(ScalarField::new(vec![0.0; 32], vec![2; 5]).is_err());
    }

    #[test]
    fn manifest_parses_relative_paths() {
        let m = DatasetManifest::parse(
            "# comment\nvx.f32 f32 4,8,8 vx\n/abs/y.f64 f64 2x2 y be\n",
            Path::new("/data"),
        )
        .unwrap();
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].path, PathBuf::from("/data/vx.f32"));
        assert_eq!(m.entries[0].expected_bytes(), 4 * 8 * 8 * 4);
        assert_eq!(m.entries[1].byte_order, ByteOrder::Big);
        assert_eq!(m.entries[1].shape, vec![2, 2]);
        assert!(DatasetManifest::parse("a f32 0,2 x", Path::new(".")).is_err());
        assert!(DatasetManifest::parse("a f16 2 x", Path::new(".")).is_err());
    }
}
