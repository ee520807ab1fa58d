//! Explicit states, channels, and measurements: the block-structured
//! maximally entangled family and its collapse channel, the cyclic filtering
//! measurement, measurement dilation into a flagged channel plus projective
//! readout, the N-partite maximally correlated construction, reduction
//! checks, and relabeling embeddings between local spaces.
//!
//! Everything is realized on computational bases; by local-relabeling
//! invariance no monotone value depends on that choice.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{
    DensityOperator, HilbertFactorization, LocalChannel, LocalMeasurement, MeasurementOutcome,
    PureState,
};
use crate::schmidt::SchmidtVector;
use crate::{index, tol};

type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// Elementary pure states
// ---------------------------------------------------------------------------

/// The pure maximally entangled state `Σ_i |ii⟩/√d` on `[d, d]`.
pub fn maximally_entangled_pure(d: usize) -> Result<PureState> {
    let fact = HilbertFactorization::new(vec![d, d])?;
    let mut v = nalgebra::DVector::zeros(d * d);
    let amp = c(1.0 / (d as f64).sqrt());
    for i in 0..d {
        v[i * d + i] = amp;
    }
    PureState::new(fact, v)
}

/// `(|0..0⟩ + |1..1⟩)/√2` on `n` qubits.
pub fn ghz_state(n: usize) -> Result<PureState> {
    if n < 2 {
        return Err(Error::InvalidArgument("ghz needs at least 2 sites".into()));
    }
    let fact = HilbertFactorization::new(vec![2; n])?;
    let d = fact.total_dim();
    let mut v = nalgebra::DVector::zeros(d);
    let amp = c(std::f64::consts::FRAC_1_SQRT_2);
    v[0] = amp;
    v[d - 1] = amp;
    PureState::new(fact, v)
}

/// Pure bipartite state `Σ_i √λ_i |ii⟩` with the given Schmidt vector, on
///`[r, r]`.
pub fn pure_from_schmidt(lambda: &SchmidtVector) -> Result<PureState> {
    let r = lambda.rank();
    let fact = HilbertFactorization::new(vec![r, r])?;
    let mut v = nalgebra::DVector::zeros(r * r);
    for (i, &l) in lambda.coeffs().iter().enumerate() {
        v[i * r + i] = c(l.sqrt());
    }
    PureState::new(fact, v)
}

// ---------------------------------------------------------------------------
// Block-structured maximally entangled family
// ---------------------------------------------------------------------------

/// Parameters of the maximally entangled family on `[d1, d2]`: a mixture of
/// `blocks` pure states `|q̃⟩ = Σ_i |i⟩ ⊗ |q,i⟩ / √d1`, where `|q,i⟩` is the
/// computational vector `q·d1 + i` of site 2 (contiguous blocks, block-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MpsSpec {
    pub d1: usize,
    pub d2: usize,
    #[serde(rename = "Q")]
    pub blocks: usize,
    #[serde(rename = "p")]
    pub probabilities: Vec<f64>,
}

impl MpsSpec {
    pub fn new(d1: usize, d2: usize, blocks: usize, probabilities: Vec<f64>) -> Result<Self> {
        let spec = Self {
            d1,
            d2,
            blocks,
            probabilities,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 || self.blocks == 0 {
            return Err(Error::InvalidArgument(
                "dimensions and block count must be positive".into(),
            ));
        }
        if self.d1 > self.d2 {
            return Err(Error::InvalidArgument(format!(
                "d1 = {} must not exceed d2 = {}",
                self.d1, self.d2
            )));
        }
        if self.blocks * self.d1 > self.d2 {
            return Err(Error::InvalidArgument(format!(
                "Q*d1 = {} exceeds d2 = {}",
                self.blocks * self.d1,
                self.d2
            )));
        }
        if self.probabilities.len() != self.blocks {
            return Err(Error::InvalidArgument(format!(
                "{} probabilities for {} blocks",
                self.probabilities.len(),
                self.blocks
            )));
        }
        if self
            .probabilities
            .iter()
            .any(|&p| !p.is_finite() || p < 0.0)
        {
            return Err(Error::InvalidArgument(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = self.probabilities.iter().sum();
        if (total - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(())
    }

    /// Amplitude vector of the pure member `|q̃⟩` (0-based block), with the
    /// given per-level coefficients in place of the uniform `1/d1`.
    fn block_vector(&self, q: usize, coeffs: &[f64]) -> nalgebra::DVector<Complex64> {
        let mut v = nalgebra::DVector::zeros(self.d1 * self.d2);
        for (i, &l) in coeffs.iter().enumerate() {
            v[i * self.d2 + q * self.d1 + i] = c(l.sqrt());
        }
        v
    }
}

/// Build the family member `Σ_q p_q |q̃⟩⟨q̃|`. Its site-1 marginal is `I/d1`.
pub fn build_mps(spec: &MpsSpec) -> Result<DensityOperator> {
    let uniform = vec![1.0 / spec.d1 as f64; spec.d1];
    build_mps_block_state(spec, &uniform)
}

/// Same block structure with arbitrary per-level coefficients in place of
/// `1/d1`; the collapse channel turns any such state into a pure one.
pub fn build_mps_with_coeffs(spec: &MpsSpec, lambda: &SchmidtVector) -> Result<DensityOperator> {
    if lambda.rank() > spec.d1 {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients exceed d1 = {}",
            lambda.rank(),
            spec.d1
        )));
    }
    build_mps_block_state(spec, lambda.coeffs())
}

fn build_mps_block_state(spec: &MpsSpec, coeffs: &[f64]) -> Result<DensityOperator> {
    spec.validate()?;
    let fact = HilbertFactorization::new(vec![spec.d1, spec.d2])?;
    let d = fact.total_dim();
    let mut m = CMatrix::zeros(d, d);
    for (q, &p) in spec.probabilities.iter().enumerate() {
        let v = spec.block_vector(q, coeffs);
        m += (&v * v.adjoint()) * c(p);
    }
    DensityOperator::new(fact, m)
}

/// Deterministic channel on site 2 collapsing every block onto the first:
/// one Kraus operator `Σ_i |0,i⟩⟨q,i|` per block, plus the projector onto
/// the unused remainder of site 2 when the blocks do not exhaust it.
pub fn collapse_channel(spec: &MpsSpec) -> Result<LocalChannel> {
    spec.validate()?;
    let d2 = spec.d2;
    let mut kraus = Vec::with_capacity(spec.blocks + 1);
    for q in 0..spec.blocks {
        let mut k = CMatrix::zeros(d2, d2);
        for i in 0..spec.d1 {
            k[(i, q * spec.d1 + i)] = c(1.0);
        }
        kraus.push(k);
    }
    let used = spec.blocks * spec.d1;
    if used < d2 {
        let mut rem = CMatrix::zeros(d2, d2);
        for j in used..d2 {
            rem[(j, j)] = c(1.0);
        }
        kraus.push(rem);
    }
    LocalChannel::new(2, kraus)
}

// ---------------------------------------------------------------------------
// Cyclic filtering measurement
// ---------------------------------------------------------------------------

/// Efficient measurement on site 1 with `d1` outcomes and Kraus operators
/// `K_q = Σ_i √λ_i |i⟩⟨(i+q) mod d1|`. Column norms make completeness exact.
/// Applied to the maximally entangled state of dimension `d1`, every outcome
/// has probability `1/d1` and Schmidt vector `lambda`.
pub fn cyclic_filter(d1: usize, lambda: &SchmidtVector) -> Result<LocalMeasurement> {
    if lambda.rank() != d1 {
        return Err(Error::InvalidArgument(format!(
            "{} coefficients for dimension {d1}",
            lambda.rank()
        )));
    }
    let kraus: Vec<CMatrix> = (1..=d1)
        .map(|q| {
            let mut k = CMatrix::zeros(d1, d1);
            for (i, &l) in lambda.coeffs().iter().enumerate() {
                k[(i, (i + q) % d1)] = c(l.sqrt());
            }
            k
        })
        .collect();
    LocalMeasurement::efficient(1, kraus)
}

// ---------------------------------------------------------------------------
// Measurement dilation
// ---------------------------------------------------------------------------

/// A measurement dilated into a deterministic flagged channel followed by a
/// projective readout of the flag register. The site's space becomes
/// `flag ⊗ padded local space`, the flag being the leading tensor factor.
#[derive(Debug, Clone)]
pub struct MeasurementDilation {
    pub flagged: LocalChannel,
    pub readout: LocalMeasurement,
    pub flag_count: usize,
    pub padded_dim: usize,
    out_dims: Vec<usize>,
}

impl MeasurementDilation {
    /// Per-outcome output dimensions of the original measurement.
    pub fn original_out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    /// Discard the flag and padding of a post-readout state for outcome `q`
    /// (0-based), recovering the state the original measurement would leave.
    pub fn extract_outcome(&self, state: &DensityOperator, q: usize) -> Result<DensityOperator> {
        if q >= self.flag_count {
            return Err(Error::InvalidArgument(format!(
                "outcome {q} out of range 0..{}",
                self.flag_count
            )));
        }
        let d_out = self.out_dims[q];
        let site_dim = self.flag_count * self.padded_dim;
        let mut w = CMatrix::zeros(d_out, site_dim);
        for j in 0..d_out {
            w[(j, q * self.padded_dim + j)] = c(1.0);
        }
        apply_site_map(state, self.flagged.site(), &w)
    }
}

/// Conjugate a state by a single-site operator `W` (embedded as
/// `I ⊗ W ⊗ I`), requiring the result to still be a valid state. Used for
/// support-preserving isometries and flag extraction.
fn apply_site_map(state: &DensityOperator, site: usize, w: &CMatrix) -> Result<DensityOperator> {
    let site0 = state.factorization().site_index(site)?;
    let d_site = state.dims()[site0];
    if w.ncols() != d_site {
        return Err(Error::DimensionMismatch(format!(
            "site map has {} columns for site dim {d_site}",
            w.ncols()
        )));
    }
    let (left, right) = state.factorization().dim_split(site0);
    let embedded = crate::qstate::embed_site_operator(w, left, right);
    let out = &embedded * state.matrix() * embedded.adjoint();
    let fact = state.factorization().replace_dim(site0, w.nrows())?;
    DensityOperator::new(fact, out)
}

/// Dilate a measurement into (deterministic flagged channel, projective flag
/// readout). Composing the two reproduces the measurement outcome by
/// outcome; post-states match after discarding the flag and padding.
pub fn dilate_measurement(m: &LocalMeasurement) -> Result<MeasurementDilation> {
    let flag_count = m.n_outcomes();
    let padded_dim = m
        .outcomes()
        .iter()
        .map(|o| o.output_dim())
        .max()
        .expect("measurement has outcomes");
    let d_in = m.input_dim();
    let site = m.site();

    let mut kraus = Vec::new();
    for (q, outcome) in m.outcomes().iter().enumerate() {
        for k in outcome.kraus() {
            // |q⟩ ⊗ K', with K' the zero-row padding of K to the common dim
            let mut hoisted = CMatrix::zeros(flag_count * padded_dim, d_in);
            for i in 0..k.nrows() {
                for j in 0..d_in {
                    hoisted[(q * padded_dim + i, j)] = k[(i, j)];
                }
            }
            kraus.push(hoisted);
        }
    }
    let flagged = LocalChannel::new(site, kraus)?;

    let readout_kraus: Vec<CMatrix> = (0..flag_count)
        .map(|q| {
            let mut p = CMatrix::zeros(flag_count * padded_dim, flag_count * padded_dim);
            for i in 0..padded_dim {
                p[(q * padded_dim + i, q * padded_dim + i)] = c(1.0);
            }
            p
        })
        .collect();
    let readout = LocalMeasurement::efficient(site, readout_kraus)?;

    Ok(MeasurementDilation {
        flagged,
        readout,
        flag_count,
        padded_dim,
        out_dims: m.outcomes().iter().map(|o| o.output_dim()).collect(),
    })
}

/// Run a dilation end to end: apply the flagged channel, read the flag, and
/// strip flag and padding from each outcome. The result is outcome-aligned
/// with `measure()` on the original measurement.
pub fn dilation_outcomes(
    dilation: &MeasurementDilation,
    rho: &DensityOperator,
) -> Result<Vec<MeasurementOutcome>> {
    let after = rho.apply_channel(&dilation.flagged)?;
    let read = after.measure(&dilation.readout)?;
    read.into_iter()
        .enumerate()
        .map(|(q, o)| {
            let state = match o.state {
                Some(s) => Some(dilation.extract_outcome(&s, q)?),
                None => None,
            };
            Ok(MeasurementOutcome {
                probability: o.probability,
                state,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// N-partite maximally correlated construction
// ---------------------------------------------------------------------------

/// The pure state `Σ ⊗_n |i_n⟩ ⊗ |i_1..i_{N-1}⟩ / √d` on `[d_1..d_N]`,
/// defined when the last dimension is at least `d = Π_{n<N} d_n`. Its joint
/// marginal on the first `N-1` sites is maximally mixed.
pub fn build_npartite_max(dims: &[usize]) -> Result<PureState> {
    if dims.len() < 2 {
        return Err(Error::InvalidArgument(
            "construction needs at least 2 sites".into(),
        ));
    }
    let fact = HilbertFactorization::new(dims.to_vec())?;
    let n = dims.len();
    let front: usize = dims[..n - 1].iter().product();
    if dims[n - 1] < front {
        return Err(Error::InvalidArgument(format!(
            "last dimension {} below front product {front}",
            dims[n - 1]
        )));
    }
    let strides = index::strides(dims);
    let amp = c(1.0 / (front as f64).sqrt());
    let mut v = nalgebra::DVector::zeros(fact.total_dim());
    for flat in 0..front {
        let multi = index::unravel(flat, &dims[..n - 1]);
        let pos: usize = multi
            .iter()
            .zip(&strides[..n - 1])
            .map(|(&i, &s)| i * s)
            .sum::<usize>()
            + flat * strides[n - 1];
        v[pos] = amp;
    }
    PureState::new(fact, v)
}

// ---------------------------------------------------------------------------
// Reduction checks
// ---------------------------------------------------------------------------

/// One subset's reduction test: is the marginal on `sites` maximally mixed?
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub sites: Vec<usize>,
    pub dim_product: usize,
    pub deviation: f64,
    pub pass: bool,
}

/// Report over the family of small-enough subsets: every subset whose
/// dimension product is at most `√d` must reduce to the maximally mixed
/// state for the input to be a maximal-correlation candidate. Also reports
/// whether the dimension pattern forces such a candidate to be pure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionReport {
    pub dims: Vec<usize>,
    pub tolerance: f64,
    pub subsets: Vec<SubsetCheck>,
    pub all_pass: bool,
    pub failing: Option<Vec<usize>>,
    pub purity_forced: bool,
}

/// Test every subset `E` with `(Π_{n∈E} d_n)² ≤ d` against `I/Π d_n` in
/// Frobenius norm. The purity-forcing flag is set when
/// `2·(max_E Π d_n)² > d`.
pub fn check_reductions(rho: &DensityOperator) -> Result<ReductionReport> {
    let dims = rho.dims().to_vec();
    let n = dims.len();
    let d_total = rho.total_dim();
    let tolerance = tol::BLOCK_RECOGNIZER;
    let mut subsets = Vec::new();
    let mut all_pass = true;
    let mut failing = None;
    let mut max_in_family = 0usize;

    for mask in 1u32..(1u32 << n) {
        let sites: Vec<usize> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| i + 1)
            .collect();
        let dim_product: usize = sites.iter().map(|&s| dims[s - 1]).product();
        if dim_product * dim_product > d_total {
            continue;
        }
        max_in_family = max_in_family.max(dim_product);
        let reduced = rho.partial_trace(&sites)?;
        let target = DensityOperator::maximally_mixed(
            &sites.iter().map(|&s| dims[s - 1]).collect::<Vec<_>>(),
        )?;
        let deviation = reduced.distance(&target);
        let pass = deviation <= tolerance;
        if !pass && failing.is_none() {
            failing = Some(sites.clone());
        }
        all_pass &= pass;
        subsets.push(SubsetCheck {
            sites,
            dim_product,
            deviation,
            pass,
        });
    }

    Ok(ReductionReport {
        dims,
        tolerance,
        subsets,
        all_pass,
        failing,
        purity_forced: 2 * max_in_family * max_in_family > d_total,
    })
}

// ---------------------------------------------------------------------------
// Relabeling embeddings
// ---------------------------------------------------------------------------

/// Move a state onto new local spaces site by site. Growing a site embeds
/// the computational basis directly; shrinking one first rotates into the
/// local support basis, which is possible whenever the target dimension is
/// at least the local support rank. Every monotone value is unchanged.
pub fn relabel_embed(rho: &DensityOperator, target_dims: &[usize]) -> Result<DensityOperator> {
    let dims = rho.dims();
    if target_dims.len() != dims.len() {
        return Err(Error::InvalidArgument(format!(
            "{} target dims for {} sites",
            target_dims.len(),
            dims.len()
        )));
    }
    HilbertFactorization::new(target_dims.to_vec())?;
    let mut current = rho.clone();
    for site in 1..=dims.len() {
        let d_old = current.dims()[site - 1];
        let d_new = target_dims[site - 1];
        if d_new == d_old {
            continue;
        }
        let w = if d_new > d_old {
            let mut w = CMatrix::zeros(d_new, d_old);
            for i in 0..d_old {
                w[(i, i)] = c(1.0);
            }
            w
        } else {
            let marginal = current.partial_trace(&[site])?;
            let (vals, vecs) = crate::qstate::hermitian_eigen_desc(marginal.matrix());
            let rank = vals.iter().filter(|&&v| v > tol::EIGENVALUE_CLIP).count();
            if d_new < rank {
                return Err(Error::InvalidArgument(format!(
                    "target dim {d_new} below local support rank {rank} at site {site}"
                )));
            }
            let mut w = CMatrix::zeros(d_new, d_old);
            for k in 0..rank {
                for j in 0..d_old {
                    w[(k, j)] = vecs[(j, k)].conj();
                }
            }
            w
        };
        current = apply_site_map(&current, site, &w)?;
    }
    Ok(current)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{sample_local_measurement, total_probability, OutcomeShape};
    use crate::schmidt::schmidt_decompose;
    use proptest::prelude::*;

    fn pure_top_eigvec(rho: &DensityOperator) -> PureState {
        let (vals, vecs) = crate::qstate::hermitian_eigen_desc(rho.matrix());
        assert!((vals[0] - 1.0).abs() < 1e-9, "state is not pure: {}", vals[0]);
        PureState::new(rho.factorization().clone(), vecs.column(0).into_owned()).unwrap()
    }

    #[test]
    fn single_block_square_spec_is_the_maximally_entangled_state() {
        let spec = MpsSpec::new(2, 2, 1, vec![1.0]).unwrap();
        let rho = build_mps(&spec).unwrap();
        let bell = maximally_entangled_pure(2).unwrap().to_density();
        assert!(rho.distance(&bell) < 1e-14);
    }

    #[test]
    fn two_block_spec_is_mixed_with_maximally_mixed_marginal() {
        let spec = MpsSpec::new(2, 4, 2, vec![0.5, 0.5]).unwrap();
        let rho = build_mps(&spec).unwrap();
        assert_eq!(rho.clipped_rank().unwrap(), 2);
        assert!(!rho.is_pure());
        let marginal = rho.partial_trace(&[1]).unwrap();
        assert!(marginal.distance(&DensityOperator::maximally_mixed(&[2]).unwrap()) < 1e-12);
    }

    #[test]
    fn oversized_block_count_is_rejected() {
        assert!(MpsSpec::new(2, 2, 2, vec![0.5, 0.5]).is_err());
        assert!(MpsSpec::new(2, 4, 2, vec![0.7, 0.2]).is_err());
        assert!(MpsSpec::new(3, 2, 1, vec![1.0]).is_err());
    }

    #[test]
    fn collapse_on_square_single_block_leaves_state_unchanged() {
        let spec = MpsSpec::new(3, 3, 1, vec![1.0]).unwrap();
        let rho = build_mps(&spec).unwrap();
        let ch = collapse_channel(&spec).unwrap();
        let out = rho.apply_channel(&ch).unwrap();
        assert!(out.distance(&rho) < 1e-14);
    }

    #[test]
    fn collapse_produces_pure_first_block() {
        let spec = MpsSpec::new(2, 4, 2, vec![0.5, 0.5]).unwrap();
        let rho = build_mps(&spec).unwrap();
        let out = rho.apply_channel(&collapse_channel(&spec).unwrap()).unwrap();
        let first = build_mps(&MpsSpec::new(2, 4, 1, vec![1.0]).unwrap()).unwrap();
        assert!(out.distance(&first) < 1e-14);
        assert!(out.is_pure());
    }

    #[test]
    fn collapse_purifies_arbitrary_block_coefficients() {
        let spec = MpsSpec::new(2, 5, 2, vec![0.3, 0.7]).unwrap();
        let lambda = SchmidtVector::new(vec![0.8, 0.2]).unwrap();
        let rho = build_mps_with_coeffs(&spec, &lambda).unwrap();
        assert!(!rho.is_pure());
        let out = rho.apply_channel(&collapse_channel(&spec).unwrap()).unwrap();
        assert!(out.is_pure());
        let psi = pure_top_eigvec(&out);
        let dec = schmidt_decompose(&psi, &[1]).unwrap();
        assert!(dec.coeffs.approx_eq(&lambda));
    }

    #[test]
    fn uniform_filter_keeps_every_outcome_maximally_entangled() {
        let rho = maximally_entangled_pure(3).unwrap().to_density();
        let m = cyclic_filter(3, &SchmidtVector::uniform(3).unwrap()).unwrap();
        assert!(m.is_efficient());
        for o in rho.measure(&m).unwrap() {
            assert!((o.probability - 1.0 / 3.0).abs() < 1e-12);
            let psi = pure_top_eigvec(&o.state.unwrap());
            let dec = schmidt_decompose(&psi, &[1]).unwrap();
            assert!(dec.coeffs.approx_eq(&SchmidtVector::uniform(3).unwrap()));
        }
    }

    #[test]
    fn skewed_filter_imprints_its_coefficients() {
        let rho = maximally_entangled_pure(2).unwrap().to_density();
        let lambda = SchmidtVector::new(vec![0.8, 0.2]).unwrap();
        let m = cyclic_filter(2, &lambda).unwrap();
        let outcomes = rho.measure(&m).unwrap();
        assert_eq!(outcomes.len(), 2);
        for o in &outcomes {
            assert!((o.probability - 0.5).abs() < 1e-12);
            let psi = pure_top_eigvec(o.state.as_ref().unwrap());
            let dec = schmidt_decompose(&psi, &[1]).unwrap();
            assert!(dec.coeffs.approx_eq(&lambda));
        }
    }

    #[test]
    fn three_level_filter_outcomes() {
        let rho = maximally_entangled_pure(3).unwrap().to_density();
        let lambda = SchmidtVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let m = cyclic_filter(3, &lambda).unwrap();
        let outcomes = rho.measure(&m).unwrap();
        assert_eq!(outcomes.len(), 3);
        assert!((total_probability(&outcomes) - 1.0).abs() < 1e-12);
        for o in &outcomes {
            let psi = pure_top_eigvec(o.state.as_ref().unwrap());
            let dec = schmidt_decompose(&psi, &[1]).unwrap();
            assert!(dec.coeffs.approx_eq(&lambda));
        }
        assert!(cyclic_filter(4, &lambda).is_err());
    }

    fn assert_dilation_roundtrip(rho: &DensityOperator, m: &LocalMeasurement, tol: f64) {
        let direct = rho.measure(m).unwrap();
        let dilation = dilate_measurement(m).unwrap();
        let via = dilation_outcomes(&dilation, rho).unwrap();
        assert_eq!(direct.len(), via.len());
        for (a, b) in direct.iter().zip(&via) {
            assert!((a.probability - b.probability).abs() < tol);
            match (&a.state, &b.state) {
                (Some(x), Some(y)) => assert!(x.distance(y) < tol),
                (None, None) => {}
                _ => panic!("outcome nullness mismatch"),
            }
        }
    }

    #[test]
    fn dilating_projective_readout_reproduces_it() {
        let rho = crate::qstate::sample_state(&[2, 2], 3, 101).unwrap();
        let m = LocalMeasurement::computational(1, 2).unwrap();
        assert_dilation_roundtrip(&rho, &m, 1e-12);
    }

    #[test]
    fn dilating_the_cyclic_filter_roundtrips() {
        let rho = maximally_entangled_pure(2).unwrap().to_density();
        let lambda = SchmidtVector::new(vec![0.8, 0.2]).unwrap();
        let m = cyclic_filter(2, &lambda).unwrap();
        assert_dilation_roundtrip(&rho, &m, 1e-10);
    }

    #[test]
    fn dilating_inefficient_measurement_roundtrips() {
        let rho = crate::qstate::sample_state(&[3, 2], 4, 102).unwrap();
        let shapes = [
            OutcomeShape { out_dim: 2, terms: 2 },
            OutcomeShape { out_dim: 3, terms: 2 },
        ];
        let m = sample_local_measurement(&[3, 2], 1, &shapes, 103).unwrap();
        assert!(!m.is_efficient());
        assert_dilation_roundtrip(&rho, &m, 1e-10);
    }

    #[test]
    fn npartite_two_site_case_is_the_maximally_entangled_state() {
        let psi = build_npartite_max(&[2, 2]).unwrap();
        let bell = maximally_entangled_pure(2).unwrap();
        assert!((psi.vector() - bell.vector()).norm() < 1e-14);
    }

    #[test]
    fn npartite_marginals_are_maximally_mixed() {
        let psi = build_npartite_max(&[2, 2, 4]).unwrap();
        let rho = psi.to_density();
        for keep in [vec![1], vec![2], vec![1, 2]] {
            let reduced = rho.partial_trace(&keep).unwrap();
            let dims: Vec<usize> = keep.iter().map(|&s| rho.dims()[s - 1]).collect();
            let target = DensityOperator::maximally_mixed(&dims).unwrap();
            assert!(reduced.distance(&target) < 1e-12, "subset {keep:?}");
        }
    }

    #[test]
    fn npartite_dimension_condition_is_enforced() {
        assert!(build_npartite_max(&[2, 2, 3]).is_err());
        assert!(build_npartite_max(&[2, 2, 4]).is_ok());
    }

    #[test]
    fn reductions_pass_on_the_npartite_construction() {
        let rho = build_npartite_max(&[2, 2, 4]).unwrap().to_density();
        let report = check_reductions(&rho).unwrap();
        assert!(report.all_pass);
        assert!(report.purity_forced);
        // the family holds exactly the subsets with squared product <= 16
        let names: Vec<Vec<usize>> = report.subsets.iter().map(|s| s.sites.clone()).collect();
        assert!(names.contains(&vec![1, 2]));
        assert!(names.contains(&vec![3]));
        assert!(!names.contains(&vec![1, 3]));
    }

    #[test]
    fn reductions_fail_on_a_product_state() {
        let rho = PureState::basis_state(&[2, 2, 2, 2], &[0, 0, 0, 0])
            .unwrap()
            .to_density();
        let report = check_reductions(&rho).unwrap();
        assert!(!report.all_pass);
        assert!(report.failing.is_some());
    }

    #[test]
    fn ghz_single_site_reductions_pass() {
        let rho = ghz_state(3).unwrap().to_density();
        let report = check_reductions(&rho).unwrap();
        // family is exactly the singletons: 2^2 <= 8 but 4^2 > 8
        assert_eq!(report.subsets.len(), 3);
        assert!(report.all_pass);
        assert!(!report.purity_forced);
    }

    #[test]
    fn relabel_identity_is_identity() {
        let rho = crate::qstate::sample_state(&[2, 3], 3, 104).unwrap();
        let out = relabel_embed(&rho, &[2, 3]).unwrap();
        assert!(out.distance(&rho) < 1e-14);
    }

    #[test]
    fn relabel_enlarging_preserves_schmidt_vector() {
        let lambda = SchmidtVector::new(vec![0.7, 0.3]).unwrap();
        let rho = pure_from_schmidt(&lambda).unwrap().to_density();
        let out = relabel_embed(&rho, &[2, 7]).unwrap();
        assert_eq!(out.dims(), &[2, 7]);
        let psi = pure_top_eigvec(&out);
        let dec = schmidt_decompose(&psi, &[1]).unwrap();
        assert!(dec.coeffs.approx_eq(&lambda));
    }

    #[test]
    fn relabel_shrinking_needs_support_room() {
        // |0><0| on a qubit fits in a 1-dim site
        let rho = PureState::basis_state(&[2, 2], &[0, 1]).unwrap().to_density();
        let out = relabel_embed(&rho, &[1, 2]).unwrap();
        assert_eq!(out.dims(), &[1, 2]);
        // a full-rank site cannot shrink
        let mixed = DensityOperator::maximally_mixed(&[2, 2]).unwrap();
        assert!(relabel_embed(&mixed, &[1, 2]).is_err());
    }

    #[test]
    fn relabel_roundtrips_through_a_rotated_larger_space() {
        use rand::SeedableRng;
        // grow, scramble the big site by a local unitary, shrink back:
        // the monotone values must survive the trip
        let rho = crate::qstate::sample_state(&[2, 2], 2, 105).unwrap();
        let grown = relabel_embed(&rho, &[2, 5]).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let u = crate::qstate::haar_unitary(5, &mut rng);
        let scrambled = grown
            .apply_channel(&LocalChannel::from_unitary(2, u).unwrap())
            .unwrap();
        let back = relabel_embed(&scrambled, &[2, 2]).unwrap();
        let before = crate::monotones::total_mutual_information(&rho).unwrap();
        let after = crate::monotones::total_mutual_information(&back).unwrap();
        assert!((before - after).abs() < 1e-9, "{before} vs {after}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn family_marginal_is_always_maximally_mixed(seed in 0u64..1 << 48) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d1 = rng.random_range(1..=3usize);
            let max_q = 6 / d1;
            let blocks = rng.random_range(1..=max_q);
            let d2 = rng.random_range(blocks * d1..=6);
            let mut p: Vec<f64> = (0..blocks).map(|_| rng.random::<f64>() + 0.05).collect();
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= total);
            let spec = MpsSpec::new(d1, d2, blocks, p).unwrap();
            let rho = build_mps(&spec).unwrap();
            let marginal = rho.partial_trace(&[1]).unwrap();
            let target = DensityOperator::maximally_mixed(&[d1]).unwrap();
            prop_assert!(marginal.distance(&target) < 1e-12);
            // collapsing always lands on the pure uniform first block
            let out = rho.apply_channel(&collapse_channel(&spec).unwrap()).unwrap();
            let first = build_mps(&MpsSpec::new(d1, d2, 1, vec![1.0]).unwrap()).unwrap();
            prop_assert!(out.distance(&first) < 1e-12);
        }
    }
}
