//! Error-bounded reference compressors and compression-ratio measurement.
//!
//! Two native codecs stand for the two families of lossy compressors:
//! `predictive` (Lorenzo prediction + residual quantization + Huffman) and
//! `rounding` (grid rounding + byte-plane Huffman). Any other tool can be
//! hooked in through [`external`].
//!
//! Codestream layout (little-endian):
//!
//! ```text
//! magic "CRPZ" | version u8 | codec u8 | mode u8 | dtype u8 | dims u8
//! | extents u32 x dims | eps f64 | payload
//! ```
//!
//! `mode` 1 stores the values verbatim as f64; it is used for fields with
//! fewer than [`STORED_MODE_MAX_VALUES`] values.

pub mod bits;
pub mod external;
pub mod huffman;
mod lorenzo;
mod rounding;

use std::fmt;
use std::str::FromStr;

pub use external::{external_compress, ExternalConfig, DEFAULT_EXTERNAL_TIMEOUT_SECS};
pub use huffman::StreamStats;

use bits::ByteCursor;

use crate::error::{Error, Result};
use crate::field::{ElementType, ScalarField};

pub const MAGIC: &[u8; 4] = b"CRPZ";
pub const VERSION: u8 = 1;
pub const STORED_MODE_MAX_VALUES: usize = 16;
/// Results above this ratio are excluded from training.
pub const CR_CAP: f64 = 100.0;
/// The canonical error-bound grid.
pub const CANONICAL_EPS: [f64; 4] = [1e-5, 1e-4, 1e-3, 1e-2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Predictive,
    Rounding,
    External,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Predictive => "predictive",
            Family::Rounding => "rounding",
            Family::External => "external",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorMode {
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompressorId {
    pub name: String,
    pub family: Family,
    pub error_mode: ErrorMode,
}

impl CompressorId {
    pub fn predictive() -> Self {
        Self::new("predictive", Family::Predictive)
    }

    pub fn rounding() -> Self {
        Self::new("rounding", Family::Rounding)
    }

    pub fn new(name: impl Into<String>, family: Family) -> Self {
        Self {
            name: name.into(),
            family,
            error_mode: ErrorMode::Absolute,
        }
    }
}

impl fmt::Display for CompressorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Measured outcome of one compression run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionResult {
    pub cr: f64,
    pub original_bytes: u64,
    pub compressed_bytes: u64,
    pub eps_abs: f64,
    pub wall_time: f64,
}

impl CompressionResult {
    pub fn new(original_bytes: u64, compressed_bytes: u64, eps_abs: f64, wall_time: f64) -> Self {
        let compressed_bytes = compressed_bytes.max(1);
        Self {
            cr: original_bytes as f64 / compressed_bytes as f64,
            original_bytes,
            compressed_bytes,
            eps_abs,
            wall_time,
        }
    }

    /// True when the ratio exceeds [`CR_CAP`] and the row must not be used
    /// for training.
    pub fn capped(&self) -> bool {
        self.cr > CR_CAP
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CodecTag {
    Predictive = 1,
    Rounding = 2,
}

fn check_eps(eps_abs: f64) -> Result<()> {
    if eps_abs > 0.0 && eps_abs.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveEps(eps_abs))
    }
}

fn write_header(out: &mut Vec<u8>, codec: CodecTag, stored: bool, field: &ScalarField, eps: f64) {
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(codec as u8);
    out.push(u8::from(stored));
    out.push(match field.dtype() {
        ElementType::F32 => 0,
        ElementType::F64 => 1,
    });
    out.push(field.dims() as u8);
    for &e in field.shape() {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    out.extend_from_slice(&eps.to_le_bytes());
}

/// A codestream plus per-stream Huffman statistics.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub bytes: Vec<u8>,
    pub streams: Vec<StreamStats>,
}

fn encode(field: &ScalarField, eps_abs: f64, codec: CodecTag) -> Result<Encoded> {
    check_eps(eps_abs)?;
    if field.dims() > 3 {
        return Err(Error::InvalidShape {
            shape: field.shape().to_vec(),
            reason: "codecs handle 1 to 3 dimensions".into(),
        });
    }
    let stored = field.len() < STORED_MODE_MAX_VALUES;
    let mut out = Vec::new();
    write_header(&mut out, codec, stored, field, eps_abs);
    if stored {
        for v in field.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        return Ok(Encoded {
            bytes: out,
            streams: Vec::new(),
        });
    }
    let streams = match codec {
        CodecTag::Predictive => lorenzo::encode(field.values(), field.shape(), eps_abs, &mut out)?,
        CodecTag::Rounding => rounding::encode(field.values(), eps_abs, &mut out)?,
    };
    Ok(Encoded { bytes: out, streams })
}

pub fn encode_predictive(field: &ScalarField, eps_abs: f64) -> Result<Encoded> {
    encode(field, eps_abs, CodecTag::Predictive)
}

pub fn encode_rounding(field: &ScalarField, eps_abs: f64) -> Result<Encoded> {
    encode(field, eps_abs, CodecTag::Rounding)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let clock = Stopwatch::start();
    let v = f()?;
    Ok((v, clock.elapsed()))
}

pub fn compress_predictive(field: &ScalarField, eps_abs: f64) -> Result<(Vec<u8>, CompressionResult)> {
    let (enc, t) = timed(|| encode_predictive(field, eps_abs))?;
    let res = CompressionResult::new(field.original_bytes(), enc.bytes.len() as u64, eps_abs, t);
    Ok((enc.bytes, res))
}

pub fn compress_rounding(field: &ScalarField, eps_abs: f64) -> Result<(Vec<u8>, CompressionResult)> {
    let (enc, t) = timed(|| encode_rounding(field, eps_abs))?;
    let res = CompressionResult::new(field.original_bytes(), enc.bytes.len() as u64, eps_abs, t);
    Ok((enc.bytes, res))
}

pub fn decompress(stream: &[u8]) -> Result<ScalarField> {
    let mut cur = ByteCursor::new(stream);
    if cur.take(4).map_err(|_| Error::CorruptStream("missing magic".into()))? != MAGIC {
        return Err(Error::CorruptStream("bad magic".into()));
    }
    let version = cur.u8()?;
    if version != VERSION {
        return Err(Error::CorruptStream(format!("unsupported version {version}")));
    }
    let codec = match cur.u8()? {
        1 => CodecTag::Predictive,
        2 => CodecTag::Rounding,
        c => return Err(Error::CorruptStream(format!("unknown codec {c}"))),
    };
    let stored = match cur.u8()? {
        0 => false,
        1 => true,
        m => return Err(Error::CorruptStream(format!("unknown mode {m}"))),
    };
    let dtype = match cur.u8()? {
        0 => ElementType::F32,
        1 => ElementType::F64,
        d => return Err(Error::CorruptStream(format!("unknown dtype {d}"))),
    };
    let dims = cur.u8()? as usize;
    if dims == 0 || dims > 3 {
        return Err(Error::CorruptStream(format!("{dims} dimensions")));
    }
    let mut shape = Vec::with_capacity(dims);
    for _ in 0..dims {
        shape.push(cur.u32()? as usize);
    }
    let count = shape
        .iter()
        .try_fold(1usize, |acc, &e| acc.checked_mul(e))
        .filter(|&c| c > 0)
        .ok_or_else(|| Error::CorruptStream("bad shape".into()))?;
    let eps = cur.f64()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::CorruptStream("bad error bound".into()));
    }
    let values = if stored {
        let raw = cur.take(count.checked_mul(8).ok_or_else(|| Error::CorruptStream("bad shape".into()))?)?;
        raw.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect()
    } else {
        match codec {
            CodecTag::Predictive => lorenzo::decode(&mut cur, &shape, eps)?,
            CodecTag::Rounding => rounding::decode(&mut cur, count, eps)?,
        }
    };
    if cur.remaining() != 0 {
        return Err(Error::CorruptStream("trailing bytes".into()));
    }
    ScalarField::with_dtype(values, shape, dtype).map_err(|e| Error::CorruptStream(e.to_string()))
}

/// How a registered compressor is run.
#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Predictive,
    Rounding,
    External(ExternalConfig),
}

/// Named compressors available to a run. Names are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    entries: Vec<(CompressorId, Backend)>,
}

impl Default for Registry {
    fn default() -> Self {
        Self::native()
    }
}

impl Registry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    /// The two native codecs.
    pub fn native() -> Self {
        let mut r = Self::empty();
        r.entries.push((CompressorId::predictive(), Backend::Predictive));
        r.entries.push((CompressorId::rounding(), Backend::Rounding));
        r
    }

    pub fn register(&mut self, id: CompressorId, backend: Backend) -> Result<()> {
        if self.get(&id.name).is_some() {
            return Err(Error::InvalidParameter(format!("compressor `{}` already registered", id.name)));
        }
        self.entries.push((id, backend));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&(CompressorId, Backend)> {
        self.entries.iter().find(|(id, _)| id.name == name)
    }

    pub fn ids(&self) -> impl Iterator<Item = &CompressorId> {
        self.entries.iter().map(|(id, _)| id)
    }

    pub fn measure(&self, field: &ScalarField, name: &str, eps_abs: f64) -> Result<CompressionResult> {
        let (_, backend) = self.get(name).ok_or_else(|| Error::UnknownCompressor(name.to_string()))?;
        measure_with(field, backend, eps_abs)
    }
}

pub fn measure_with(field: &ScalarField, backend: &Backend, eps_abs: f64) -> Result<CompressionResult> {
    match backend {
        Backend::Predictive => Ok(compress_predictive(field, eps_abs)?.1),
        Backend::Rounding => Ok(compress_rounding(field, eps_abs)?.1),
        Backend::External(cfg) => external_compress(field, cfg, eps_abs),
    }
}

/// Runs a native compressor and reports its ratio.
pub fn measure_cr(field: &ScalarField, compressor: &CompressorId, eps_abs: f64) -> Result<CompressionResult> {
    match compressor.family {
        Family::Predictive => measure_with(field, &Backend::Predictive, eps_abs),
        Family::Rounding => measure_with(field, &Backend::Rounding, eps_abs),
        Family::External => Err(Error::InvalidParameter(format!(
            "external compressor `{}` needs a registry entry with its command",
            compressor.name
        ))),
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predictive" => Ok(Family::Predictive),
            "rounding" => Ok(Family::Rounding),
            "external" => Ok(Family::External),
            _ => Err(Error::Parse(format!("unknown compressor family `{s}`"))),
        }
    }
}

/// Header of the delimited compression-result table.
pub const RESULT_HEADER: &str = "slice_id,compressor,eps_abs,cr,original_bytes,compressed_bytes,wall_time,capped";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub slice_id: String,
    pub compressor: String,
    pub result: CompressionResult,
}

impl ResultRow {
    pub fn to_line(&self) -> String {
        let r = &self.result;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.slice_id,
            self.compressor,
            r.eps_abs,
            r.cr,
            r.original_bytes,
            r.compressed_bytes,
            r.wall_time,
            u8::from(r.capped())
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let c: Vec<&str> = line.trim().split(',').collect();
        if c.len() != 8 {
            return Err(Error::Parse(format!("result row needs 8 columns: `{line}`")));
        }
        let bad = |i: usize| Error::Parse(format!("bad value `{}` in `{line}`", c[i]));
        let eps_abs: f64 = c[2].parse().map_err(|_| bad(2))?;
        let original: u64 = c[4].parse().map_err(|_| bad(4))?;
        let compressed: u64 = c[5].parse().map_err(|_| bad(5))?;
        let wall: f64 = c[6].parse().map_err(|_| bad(6))?;
        Ok(Self {
            slice_id: c[0].to_string(),
            compressor: c[1].to_string(),
            result: CompressionResult::new(original, compressed, eps_abs, wall),
        })
    }
}

pub fn write_result_table(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

pub fn parse_result_table(text: &str) -> Result<Vec<ResultRow>> {
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("slice_id"))
        .map(ResultRow::parse_line)
        .collect()
}

/// Wall-clock timer; reports zero where no clock is available.
pub struct Stopwatch {
    #[cfg(not(target_arch = "wasm32"))]
    start: std::time::Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            #[cfg(not(target_arch = "wasm32"))]
            start: std::time::Instant::now(),
        }
    }

    pub fn elapsed(&self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}
