//! Seeded random states, channels, and measurements.
//!
//! Determinism contract: an identical seed produces a bit-identical object.
//! Sampling order is therefore fixed and documented per function; changing it
//! is a breaking change for stored reports.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CMatrix, CVector, DensityOperator, HilbertFactorization, LocalChannel, LocalMeasurement, OutcomeKraus, PureState};
use crate::error::{Error, Result};

/// Stateless per-trial seed derivation (splitmix64 over master xor index).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian matrix: entries `x + iy` with independent
/// standard normal `x`, `y`, drawn row-major, real part first.
pub(crate) fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    m
}

/// Tall Haar-random isometry (`rows >= cols`): QR of a complex Gaussian
/// matrix with the phase fix from the R diagonal.
pub(crate) fn haar_isometry(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..cols {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..rows {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Haar-random unitary of the given dimension.
pub fn haar_unitary(dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    haar_isometry(dim, dim, rng)
}

pub(crate) fn sample_state_with_rng(
    dims: &[usize],
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> Result<DensityOperator> {
    let fact = HilbertFactorization::new(dims.to_vec())?;
    let d = fact.total_dim();
    if rank == 0 || rank > d {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} out of range 1..={d}"
        )));
    }
    let g = gaussian_matrix(d, rank, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::new(fact, m / Complex64::new(tr, 0.0))
}

/// Random density operator `G G† / tr(G G†)` with `G` a seeded standard
/// complex Gaussian `d x rank` matrix.
pub fn sample_state(dims: &[usize], rank: usize, seed: u64) -> Result<DensityOperator> {
    sample_state_with_rng(dims, rank, &mut rng_from_seed(seed))
}

pub(crate) fn sample_pure_state_with_rng(dims: &[usize], rng: &mut ChaCha8Rng) -> Result<PureState> {
    let fact = HilbertFactorization::new(dims.to_vec())?;
    let d = fact.total_dim();
    let g = gaussian_matrix(d, 1, rng);
    let v = CVector::from_iterator(d, g.iter().copied());
    let norm = v.norm();
    PureState::new(fact, v / Complex64::new(norm, 0.0))
}

/// Random pure state with Gaussian amplitudes.
pub fn sample_pure_state(dims: &[usize], seed: u64) -> Result<PureState> {
    sample_pure_state_with_rng(dims, &mut rng_from_seed(seed))
}

pub(crate) fn sample_local_channel_with_rng(
    dims: &[usize],
    site: usize,
    out_dim: usize,
    n_kraus: usize,
    rng: &mut ChaCha8Rng,
) -> Result<LocalChannel> {
    let fact = HilbertFactorization::new(dims.to_vec())?;
    let d_site = fact.site_dim(site)?;
    if out_dim == 0 || n_kraus == 0 {
        return Err(Error::InvalidArgument(
            "channel needs out_dim >= 1 and n_kraus >= 1".into(),
        ));
    }
    if n_kraus * out_dim < d_site {
        return Err(Error::InvalidArgument(format!(
            "no complete family: {n_kraus} x {out_dim} rows < input dim {d_site}"
        )));
    }
    let iso = haar_isometry(n_kraus * out_dim, d_site, rng);
    let kraus: Vec<CMatrix> = (0..n_kraus)
        .map(|q| iso.rows(q * out_dim, out_dim).into_owned())
        .collect();
    LocalChannel::new(site, kraus)
}

/// Random local channel: the block rows of a Haar-random isometry, so
/// completeness holds by construction. Requires `n_kraus * out_dim >= d_site`.
pub fn sample_local_channel(
    dims: &[usize],
    site: usize,
    out_dim: usize,
    n_kraus: usize,
    seed: u64,
) -> Result<LocalChannel> {
    sample_local_channel_with_rng(dims, site, out_dim, n_kraus, &mut rng_from_seed(seed))
}

/// Shape of one sampled measurement outcome: output dimension and number of
/// Kraus terms realizing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutcomeShape {
    pub out_dim: usize,
    pub terms: usize,
}

impl OutcomeShape {
    pub fn uniform(out_dim: usize, terms: usize, n_outcomes: usize) -> Vec<Self> {
        vec![Self { out_dim, terms }; n_outcomes]
    }
}

pub(crate) fn sample_local_measurement_with_rng(
    dims: &[usize],
    site: usize,
    shapes: &[OutcomeShape],
    rng: &mut ChaCha8Rng,
) -> Result<LocalMeasurement> {
    let fact = HilbertFactorization::new(dims.to_vec())?;
    let d_site = fact.site_dim(site)?;
    if shapes.is_empty() {
        return Err(Error::InvalidArgument("measurement needs outcomes".into()));
    }
    if shapes.iter().any(|s| s.out_dim == 0 || s.terms == 0) {
        return Err(Error::InvalidArgument(
            "outcome shapes need out_dim >= 1 and terms >= 1".into(),
        ));
    }
    let total_rows: usize = shapes.iter().map(|s| s.out_dim * s.terms).sum();
    if total_rows < d_site {
        return Err(Error::InvalidArgument(format!(
            "no complete family: {total_rows} rows < input dim {d_site}"
        )));
    }
    let iso = haar_isometry(total_rows, d_site, rng);
    let mut row = 0;
    let mut outcomes = Vec::with_capacity(shapes.len());
    for shape in shapes {
        let mut kraus = Vec::with_capacity(shape.terms);
        for _ in 0..shape.terms {
            kraus.push(iso.rows(row, shape.out_dim).into_owned());
            row += shape.out_dim;
        }
        outcomes.push(OutcomeKraus::new(kraus)?);
    }
    LocalMeasurement::new(site, outcomes)
}

/// Random local measurement: block rows of a Haar-random isometry grouped by
/// outcome, so joint completeness holds by construction.
pub fn sample_local_measurement(
    dims: &[usize],
    site: usize,
    shapes: &[OutcomeShape],
    seed: u64,
) -> Result<LocalMeasurement> {
    sample_local_measurement_with_rng(dims, site, shapes, &mut rng_from_seed(seed))
}
