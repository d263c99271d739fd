//! Gaussian random fields with squared-exponential correlation, single- and
//! multiscale, used as benchmark inputs with known correlation structure.
//!
//! Sample types:
//! 1. single correlation range
//! 2. three ranges mixed with scalar weights
//! 3. three ranges mixed with spatial Gaussian weights
//! 4. spatial weights with ranges drawn from short/medium/long bands

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Grids up to this many points use the exact factorization under `Auto`.
pub const AUTO_EXACT_MAX_POINTS: usize = 128 * 128;
/// Largest per-axis extent accepted by the exact method.
pub const EXACT_MAX_EXTENT: usize = 2048;

/// Range bands (grid units) for randomly drawn correlation ranges.
pub const SHORT_RANGE: (f64, f64) = (2.0, 8.0);
pub const MEDIUM_RANGE: (f64, f64) = (8.0, 32.0);
pub const LONG_RANGE: (f64, f64) = (32.0, 128.0);

pub const SCALAR_WEIGHT_BOUNDS: (f64, f64) = (0.6, 1.2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMethod {
    #[default]
    Auto,
    /// Covariance factorization. The squared-exponential kernel is separable,
    /// `exp(-(dx^2 + dy^2)/a^2) = exp(-dx^2/a^2) exp(-dy^2/a^2)`, so the 2D
    /// covariance is a Kronecker product and factors through two 1D
    /// eigendecompositions.
    Exact,
    /// Circulant embedding on a padded torus, diagonalized by a 2D FFT.
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianSpec {
    pub grid: (usize, usize),
    pub range_a: f64,
    pub variance: f64,
    pub seed: u64,
}

impl GaussianSpec {
    pub fn new(grid: (usize, usize), range_a: f64, seed: u64) -> Self {
        Self {
            grid,
            range_a,
            variance: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.range_a > 0.0) || !self.range_a.is_finite() {
            return Err(Error::InvalidParameter(format!("range a = {} must be > 0", self.range_a)));
        }
        if !(self.variance > 0.0) {
            return Err(Error::InvalidParameter(format!("variance {} must be > 0", self.variance)));
        }
        if self.grid.0 < 2 || self.grid.1 < 2 {
            return Err(Error::InvalidParameter(format!("grid {:?} needs extents >= 2", self.grid)));
        }
        Ok(())
    }
}

pub fn sample_single_scale(spec: &GaussianSpec) -> Result<ScalarField> {
    sample_single_scale_with(spec, SamplingMethod::Auto)
}

pub fn sample_single_scale_with(spec: &GaussianSpec, method: SamplingMethod) -> Result<ScalarField> {
    spec.validate()?;
    let (m, n) = spec.grid;
    let method = match method {
        SamplingMethod::Auto if m * n <= AUTO_EXACT_MAX_POINTS => SamplingMethod::Exact,
        SamplingMethod::Auto => SamplingMethod::Spectral,
        other => other,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut values = match method {
        SamplingMethod::Exact => {
            if m > EXACT_MAX_EXTENT || n > EXACT_MAX_EXTENT {
                return Err(Error::GridTooLargeForExactMethod { m, n });
            }
            sample_exact(m, n, spec.range_a, &mut rng)
        }
        _ => sample_spectral(m, n, spec.range_a, &mut rng),
    };
    let scale = spec.variance.sqrt();
    values.iter_mut().for_each(|v| *v *= scale);
    Ok(ScalarField::new(values, vec![m, n])?.tagged(format!("gauss(a={})", spec.range_a)))
}

fn kernel(d2: f64, a: f64) -> f64 {
    (-d2 / (a * a)).exp()
}

// Symmetric square root factor F with F F^T = K for the 1D kernel matrix.
fn factor_1d(len: usize, a: f64) -> DMatrix<f64> {
    let k = DMatrix::from_fn(len, len, |i, j| {
        let d = i as f64 - j as f64;
        kernel(d * d, a)
    });
    let eig = SymmetricEigen::new(k);
    let mut q = eig.eigenvectors;
    for (mut col, &l) in q.column_iter_mut().zip(eig.eigenvalues.iter()) {
        col.scale_mut(l.max(0.0).sqrt());
    }
    q
}

fn sample_exact(m: usize, n: usize, a: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let fy = factor_1d(m, a);
    let fx = if m == n { fy.clone() } else { factor_1d(n, a) };
    let z = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(rng));
    // cov(vec X) = (Fy Fy^T) kron (Fx Fx^T)
    let x = &fy * z * fx.transpose();
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            out.push(x[(i, j)]);
        }
    }
    out
}

fn embed_extent(len: usize, a: f64) -> usize {
    // the kernel must decay on the padded torus for a near-PSD embedding
    (2 * len).max(len + (4.0 * a).ceil() as usize)
}

fn sample_spectral(m: usize, n: usize, a: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (pm, pn) = (embed_extent(m, a), embed_extent(n, a));
    let mut planner = FftPlanner::<f64>::new();
    let mut base: Vec<Complex<f64>> = (0..pm * pn)
        .map(|idx| {
            let (i, j) = (idx / pn, idx % pn);
            let di = i.min(pm - i) as f64;
            let dj = j.min(pn - j) as f64;
            Complex::new(kernel(di * di + dj * dj, a), 0.0)
        })
        .collect();
    fft2(&mut planner, &mut base, pm, pn);
    let total = (pm * pn) as f64;
    let mut w: Vec<Complex<f64>> = base
        .iter()
        .map(|lambda| {
            let amp = (lambda.re.max(0.0) / total).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(re * amp, im * amp)
        })
        .collect();
    fft2(&mut planner, &mut w, pm, pn);
    let mut out = Vec::with_capacity(m * n);
    for i in 0..m {
        for j in 0..n {
            out.push(w[i * pn + j].re);
        }
    }
    out
}

fn fft2(planner: &mut FftPlanner<f64>, data: &mut [Complex<f64>], rows: usize, cols: usize) {
    let row_fft = planner.plan_fft_forward(cols);
    for row in data.chunks_exact_mut(cols) {
        row_fft.process(row);
    }
    let col_fft = planner.plan_fft_forward(rows);
    let mut column = vec![Complex::new(0.0, 0.0); rows];
    for j in 0..cols {
        for i in 0..rows {
            column[i] = data[i * cols + j];
        }
        col_fft.process(&mut column);
        for i in 0..rows {
            data[i * cols + j] = column[i];
        }
    }
}

/// Unnormalized Gaussian bump `exp(-0.5 (x-mu)^T Omega^-1 (x-mu))` over the
/// grid, so every weight lies in [0, 1] and the peak value 1 sits at `mu`.
pub fn spatial_weight(grid: (usize, usize), mu: (f64, f64), omega: (f64, f64)) -> Result<Vec<f64>> {
    if !(omega.0 > 0.0) || !(omega.1 > 0.0) {
        return Err(Error::NonPositiveOmega);
    }
    let (m, n) = grid;
    let mut w = Vec::with_capacity(m * n);
    for i in 0..m {
        let di = i as f64 - mu.0;
        for j in 0..n {
            let dj = j as f64 - mu.1;
            w.push((-0.5 * (di * di / omega.0 + dj * dj / omega.1)).exp());
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentWeight {
    Scalar(f64),
    Spatial { mu: (f64, f64), omega: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeMode {
    Fixed,
    Random,
}

/// A weighted sum `X = sum_l w_l U_l` of independent single-scale samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiscaleSpec {
    pub components: Vec<(GaussianSpec, ComponentWeight)>,
    pub range_mode: RangeMode,
    pub seed: u64,
}

pub fn sample_multiscale(spec: &MultiscaleSpec) -> Result<ScalarField> {
    let (first, _) = spec
        .components
        .first()
        .ok_or_else(|| Error::InvalidParameter("multiscale sample needs at least one component".into()))?;
    let (m, n) = first.grid;
    let mut acc = vec![0.0; m * n];
    for (g, weight) in &spec.components {
        if g.grid != (m, n) {
            return Err(Error::InvalidParameter("components must share a grid".into()));
        }
        let u = sample_single_scale(g)?;
        match *weight {
            ComponentWeight::Scalar(w) => {
                for (a, v) in acc.iter_mut().zip(u.values()) {
                    *a += w * v;
                }
            }
            ComponentWeight::Spatial { mu, omega } => {
                let w = spatial_weight((m, n), mu, omega)?;
                for ((a, v), wi) in acc.iter_mut().zip(u.values()).zip(&w) {
                    *a += wi * v;
                }
            }
        }
    }
    Ok(ScalarField::new(acc, vec![m, n])?.tagged("multiscale"))
}

/// The four benchmark sample families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleType {
    SingleScale = 1,
    ScalarFixed = 2,
    SpatialFixed = 3,
    SpatialRandom = 4,
}

impl SampleType {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Self::SingleScale),
            2 => Ok(Self::ScalarFixed),
            3 => Ok(Self::SpatialFixed),
            4 => Ok(Self::SpatialRandom),
            _ => Err(Error::InvalidParameter(format!("sample type {i} not in 1..=4"))),
        }
    }

    pub fn index(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for SampleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl FromStr for SampleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let i: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("sample type `{s}`")))?;
        Self::from_index(i)
    }
}

/// splitmix64 finalizer, used to derive independent stream seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Builds the spec of one sample of the given type. `range_a` is the base
/// correlation range; multiscale types with fixed ranges use
/// `(a/2, a, 2a)`. Type 4 ignores it and draws one range per band.
pub fn type_spec(kind: SampleType, grid: (usize, usize), range_a: f64, seed: u64) -> MultiscaleSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX));
    let comp_seed = |l: u64| if l == 0 { seed } else { derive_seed(seed, l) };
    let (m, n) = grid;
    let omega = ((m as f64 / 4.0).powi(2), (n as f64 / 4.0).powi(2));
    let spatial = |rng: &mut ChaCha8Rng| ComponentWeight::Spatial {
        mu: (rng.random_range(0.0..m as f64), rng.random_range(0.0..n as f64)),
        omega,
    };
    let fixed = [range_a / 2.0, range_a, range_a * 2.0];
    let components = match kind {
        SampleType::SingleScale => {
            vec![(GaussianSpec::new(grid, range_a, seed), ComponentWeight::Scalar(1.0))]
        }
        SampleType::ScalarFixed => (0..3)
            .map(|l| {
                let w = rng.random_range(SCALAR_WEIGHT_BOUNDS.0..=SCALAR_WEIGHT_BOUNDS.1);
                (GaussianSpec::new(grid, fixed[l], comp_seed(l as u64)), ComponentWeight::Scalar(w))
            })
            .collect(),
        SampleType::SpatialFixed => (0..3)
            .map(|l| (GaussianSpec::new(grid, fixed[l], comp_seed(l as u64)), spatial(&mut rng)))
            .collect(),
        SampleType::SpatialRandom => [SHORT_RANGE, MEDIUM_RANGE, LONG_RANGE]
            .iter()
            .enumerate()
            .map(|(l, band)| {
                let a = rng.random_range(band.0..band.1);
                (GaussianSpec::new(grid, a, comp_seed(l as u64)), spatial(&mut rng))
            })
            .collect(),
    };
    MultiscaleSpec {
        components,
        range_mode: if kind == SampleType::SpatialRandom {
            RangeMode::Random
        } else {
            RangeMode::Fixed
        },
        seed,
    }
}

/// `count` base ranges log-spaced over `[lo, hi]`.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (count - 1) as f64).exp())
            .collect(),
    }
}

/// A reproducible corpus: sample `i` uses base range `i` of a log-spaced
/// sweep and a seed derived from `(seed, i)`.
pub fn corpus_specs(
    kind: SampleType,
    count: usize,
    grid: (usize, usize),
    range_bounds: (f64, f64),
    seed: u64,
) -> Vec<MultiscaleSpec> {
    log_spaced(range_bounds.0, range_bounds.1, count)
        .into_iter()
        .enumerate()
        .map(|(i, a)| type_spec(kind, grid, a, derive_seed(seed, i as u64)))
        .collect()
}

/// One-line reproducibility record for a generated sample.
pub fn spec_sidecar(kind: SampleType, spec: &MultiscaleSpec) -> String {
    let mut weights = Vec::new();
    let mut ranges = Vec::new();
    for (g, w) in &spec.components {
        ranges.push(format!("{}", g.range_a));
        weights.push(match w {
            ComponentWeight::Scalar(s) => format!("{s}"),
            ComponentWeight::Spatial { mu, omega } => {
                format!("spatial(mu={};{},omega={};{})", mu.0, mu.1, omega.0, omega.1)
            }
        });
    }
    let grid = spec.components.first().map(|(g, _)| g.grid).unwrap_or((0, 0));
    format!(
        "type={} L={} grid={}x{} ranges={} weights={} range_mode={} seed={}\n",
        kind,
        spec.components.len(),
        grid.0,
        grid.1,
        ranges.join("|"),
        weights.join("|"),
        match spec.range_mode {
            RangeMode::Fixed => "fixed",
            RangeMode::Random => "random",
        },
        spec.seed
    )
}
