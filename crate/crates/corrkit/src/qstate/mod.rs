//! Core state model: tensor-factorized density operators, pure states, and
//! the single-site channels and measurements that act on them.
//!
//! A channel on site `n` is a complete Kraus family `{K_q}` embedded as
//! `I_{<n} ⊗ K_q ⊗ I_{>n}`; a measurement groups Kraus terms by outcome, so
//! outcome `q` with terms `K_{q,s}` occurs with probability
//! `p_q = Σ_s tr(ρ K̃†_{q,s} K̃_{q,s})` and leaves `ρ_q = Σ_s K̃_{q,s} ρ K̃†_{q,s} / p_q`.
//! Sites are 1-indexed throughout the public API; computational basis labels
//! are 0-indexed.
//!
//! All values are immutable after construction and every operation returns a
//! fresh, validated value, so everything here is safe to share across threads.

mod json;
pub(crate) mod sample;

pub use json::{load_channel, load_measurement, load_state, save_channel, save_measurement, save_state};
pub use sample::{
    derive_seed, haar_unitary, sample_local_channel, sample_local_measurement, sample_pure_state,
    sample_state, OutcomeShape,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{index, tol, MAX_TOTAL_DIM};

// ---------------------------------------------------------------------------
// Shared dense linear algebra helpers
// ---------------------------------------------------------------------------

pub(crate) type CMatrix = DMatrix<Complex64>;
pub(crate) type CVector = DVector<Complex64>;

/// Eigenvalues of a Hermitian matrix, unsorted.
pub(crate) fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
}

/// Eigenpairs of a Hermitian matrix, sorted by descending eigenvalue.
/// Column `k` of the returned matrix is the eigenvector of eigenvalue `k`.
pub(crate) fn hermitian_eigen_desc(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

pub(crate) fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn frobenius_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    frobenius_norm(&(a - b))
}

/// Max abs deviation from Hermitian symmetry.
fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Clip a Hermitian spectrum per the crate's eigenvalue policy: values below
/// `tol::MIN_EIGENVALUE` are an error, remaining negatives are set to zero,
/// and the result is renormalized to unit sum. Returned descending.
pub(crate) fn clipped_spectrum_desc(m: &CMatrix) -> Result<Vec<f64>> {
    let mut vals = hermitian_eigenvalues(m);
    for &v in &vals {
        if v < tol::MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!(
                "eigenvalue {v:.3e} below {:.0e}",
                tol::MIN_EIGENVALUE
            )));
        }
    }
    for v in vals.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let total: f64 = vals.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidState("spectrum sums to zero".into()));
    }
    for v in vals.iter_mut() {
        *v /= total;
    }
    vals.sort_by(|a, b| b.total_cmp(a));
    Ok(vals)
}

// ---------------------------------------------------------------------------
// HilbertFactorization
// ---------------------------------------------------------------------------

/// Ordered list of local dimensions defining a tensor product structure.
/// Site indices are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertFactorization {
    dims: Vec<usize>,
}

impl HilbertFactorization {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidFactorization("no sites".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidFactorization(format!(
                "zero local dimension in {dims:?}"
            )));
        }
        let total: usize = dims.iter().product();
        if total > MAX_TOTAL_DIM {
            return Err(Error::DimensionCap(total, MAX_TOTAL_DIM));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Local dimension of a 1-based site.
    pub fn site_dim(&self, site: usize) -> Result<usize> {
        Ok(self.dims[self.site_index(site)?])
    }

    /// 0-based position of a 1-based site index.
    pub(crate) fn site_index(&self, site: usize) -> Result<usize> {
        if site == 0 || site > self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "site {site} out of range 1..={}",
                self.dims.len()
            )));
        }
        Ok(site - 1)
    }

    /// Validate a set of 1-based sites: nonempty, in range, no duplicates.
    /// Returns the sorted 0-based positions.
    pub(crate) fn site_set(&self, sites: &[usize]) -> Result<Vec<usize>> {
        if sites.is_empty() {
            return Err(Error::InvalidArgument("empty site set".into()));
        }
        let mut idx: Vec<usize> = sites
            .iter()
            .map(|&s| self.site_index(s))
            .collect::<Result<_>>()?;
        idx.sort_unstable();
        idx.dedup();
        if idx.len() != sites.len() {
            return Err(Error::InvalidArgument(format!(
                "duplicate sites in {sites:?}"
            )));
        }
        Ok(idx)
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::new(dims)
    }

    pub fn append(&self, dim: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.push(dim);
        Self::new(dims)
    }

    pub(crate) fn replace_dim(&self, site_index: usize, new_dim: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims[site_index] = new_dim;
        Self::new(dims)
    }

    /// Product of dimensions strictly before / strictly after a 0-based site.
    pub(crate) fn dim_split(&self, site_index: usize) -> (usize, usize) {
        let left: usize = self.dims[..site_index].iter().product();
        let right: usize = self.dims[site_index + 1..].iter().product();
        (left, right)
    }
}

// ---------------------------------------------------------------------------
// DensityOperator
// ---------------------------------------------------------------------------

/// Hermitian, unit-trace, positive matrix tagged with a factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    fact: HilbertFactorization,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace, and positivity before accepting.
    pub fn new(fact: HilbertFactorization, matrix: CMatrix) -> Result<Self> {
        let d = fact.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, factorization {:?} needs {d}x{d}",
                matrix.nrows(),
                matrix.ncols(),
                fact.dims()
            )));
        }
        let herm = hermiticity_defect(&matrix);
        if herm > tol::HERMITICITY {
            return Err(Error::InvalidState(format!(
                "hermiticity defect {herm:.3e}"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min_eig < tol::MIN_EIGENVALUE {
            return Err(Error::InvalidState(format!(
                "minimum eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { fact, matrix })
    }

    pub fn factorization(&self) -> &HilbertFactorization {
        &self.fact
    }

    pub fn dims(&self) -> &[usize] {
        self.fact.dims()
    }

    pub fn n_sites(&self) -> usize {
        self.fact.n_sites()
    }

    pub fn total_dim(&self) -> usize {
        self.fact.total_dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// The maximally mixed state `I/d` on the given factorization.
    pub fn maximally_mixed(dims: &[usize]) -> Result<Self> {
        let fact = HilbertFactorization::new(dims.to_vec())?;
        let d = fact.total_dim();
        let m = CMatrix::identity(d, d) / Complex64::new(d as f64, 0.0);
        Self::new(fact, m)
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let m = &psi.vector * psi.vector.adjoint();
        // a validated unit vector yields a valid projector
        Self {
            fact: psi.fact.clone(),
            matrix: m,
        }
    }

    /// Kronecker product of two states; the factorization is the
    /// concatenation of the inputs'.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let fact = self.fact.concat(&other.fact)?;
        let m = self.matrix.kronecker(&other.matrix);
        Self::new(fact, m)
    }

    /// Trace out every site not in `keep` (1-based). The result keeps the
    /// retained dimensions in their original order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let keep0 = self.fact.site_set(keep)?;
        let reduced = partial_trace_matrix(&self.matrix, self.fact.dims(), &keep0);
        let kept_dims: Vec<usize> = keep0.iter().map(|&i| self.fact.dims()[i]).collect();
        Self::new(HilbertFactorization::new(kept_dims)?, reduced)
    }

    /// Von Neumann entropy in nats, with the crate's eigenvalue clipping.
    pub fn von_neumann_entropy(&self) -> Result<f64> {
        let spectrum = clipped_spectrum_desc(&self.matrix)?;
        Ok(shannon_entropy(&spectrum))
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_pure(&self) -> bool {
        1.0 - self.purity() <= tol::PURITY
    }

    /// Eigenvalues after clipping and renormalization, descending.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        clipped_spectrum_desc(&self.matrix)
    }

    /// Rank after eigenvalue clipping.
    pub fn clipped_rank(&self) -> Result<usize> {
        Ok(self
            .spectrum()?
            .iter()
            .filter(|&&v| v > tol::SCHMIDT_CUTOFF)
            .count())
    }

    /// Apply a deterministic local channel, per the single-site embedding.
    /// The output factorization replaces the site dimension by the channel's
    /// output dimension.
    pub fn apply_channel(&self, ch: &LocalChannel) -> Result<Self> {
        let site0 = self.fact.site_index(ch.site())?;
        let d_site = self.fact.dims()[site0];
        if ch.input_dim() != d_site {
            return Err(Error::DimensionMismatch(format!(
                "channel input dim {} but site {} has dim {d_site}",
                ch.input_dim(),
                ch.site()
            )));
        }
        let (left, right) = self.fact.dim_split(site0);
        let mut out = CMatrix::zeros(
            left * ch.output_dim() * right,
            left * ch.output_dim() * right,
        );
        for k in ch.kraus() {
            let embedded = embed_site_operator(k, left, right);
            out += &embedded * &self.matrix * embedded.adjoint();
        }
        let fact = self.fact.replace_dim(site0, ch.output_dim())?;
        Self::new(fact, out)
    }

    /// Perform a local measurement. Outcomes below the probability floor are
    /// returned with a null state marker; they stay out of downstream
    /// monotone evaluation because dividing by their probability is undefined.
    pub fn measure(&self, m: &LocalMeasurement) -> Result<Vec<MeasurementOutcome>> {
        let site0 = self.fact.site_index(m.site())?;
        let d_site = self.fact.dims()[site0];
        if m.input_dim() != d_site {
            return Err(Error::DimensionMismatch(format!(
                "measurement input dim {} but site {} has dim {d_site}",
                m.input_dim(),
                m.site()
            )));
        }
        let (left, right) = self.fact.dim_split(site0);
        let mut outcomes = Vec::with_capacity(m.n_outcomes());
        for branch in m.outcomes() {
            let out_dim = branch.output_dim();
            let mut acc = CMatrix::zeros(left * out_dim * right, left * out_dim * right);
            for k in branch.kraus() {
                let embedded = embed_site_operator(k, left, right);
                acc += &embedded * &self.matrix * embedded.adjoint();
            }
            let p = acc.trace().re;
            if p < tol::PROBABILITY_FLOOR {
                outcomes.push(MeasurementOutcome {
                    probability: p.max(0.0),
                    state: None,
                });
            } else {
                let fact = self.fact.replace_dim(site0, out_dim)?;
                let state = Self::new(fact, acc / Complex64::new(p, 0.0))?;
                outcomes.push(MeasurementOutcome {
                    probability: p,
                    state: Some(state),
                });
            }
        }
        Ok(outcomes)
    }

    /// Standard purification `|ψ⟩ = Σ_p √μ_p |p⟩ ⊗ |p⟩'`, with the ancilla
    /// appended as a new last site of dimension equal to the clipped rank.
    pub fn purify(&self) -> Result<PureState> {
        let (vals, vecs) = hermitian_eigen_desc(&self.matrix);
        for &v in &vals {
            if v < tol::MIN_EIGENVALUE {
                return Err(Error::InvalidState(format!(
                    "eigenvalue {v:.3e} below {:.0e}",
                    tol::MIN_EIGENVALUE
                )));
            }
        }
        let kept: Vec<(usize, f64)> = vals
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, v)| v > tol::SCHMIDT_CUTOFF)
            .collect();
        let rank = kept.len().max(1);
        let total: f64 = kept.iter().map(|&(_, v)| v).sum();
        let d = self.total_dim();
        let fact = self.fact.append(rank)?;
        let mut vec = CVector::zeros(d * rank);
        for (p, &(col, v)) in kept.iter().enumerate() {
            let w = (v / total).sqrt();
            for i in 0..d {
                vec[i * rank + p] = vecs[(i, col)] * Complex64::new(w, 0.0);
            }
        }
        PureState::new(fact, vec)
    }

    /// Frobenius distance to another operator's matrix.
    pub fn distance(&self, other: &Self) -> f64 {
        frobenius_distance(&self.matrix, &other.matrix)
    }
}

/// `-Σ λ ln λ` over the strictly positive entries.
pub(crate) fn shannon_entropy(spectrum: &[f64]) -> f64 {
    -spectrum
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.ln())
        .sum::<f64>()
}

/// Embed a single-site operator as `I_left ⊗ K ⊗ I_right`.
pub(crate) fn embed_site_operator(k: &CMatrix, left: usize, right: usize) -> CMatrix {
    let il = CMatrix::identity(left, left);
    let ir = CMatrix::identity(right, right);
    il.kronecker(k).kronecker(&ir)
}

/// Partial trace at matrix level: keep the 0-based site positions `keep0`
/// (sorted) of a square matrix over the factorization `dims`.
pub(crate) fn partial_trace_matrix(m: &CMatrix, dims: &[usize], keep0: &[usize]) -> CMatrix {
    let traced0: Vec<usize> = (0..dims.len()).filter(|i| !keep0.contains(i)).collect();
    let full_strides = index::strides(dims);
    let keep_dims: Vec<usize> = keep0.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced0.iter().map(|&i| dims[i]).collect();
    let keep_offsets = index::group_offsets(&keep_dims, keep0, &full_strides);
    let traced_offsets = index::group_offsets(&traced_dims, &traced0, &full_strides);
    let d_keep = keep_offsets.len();
    let mut out = CMatrix::zeros(d_keep, d_keep);
    for a in 0..d_keep {
        for b in 0..d_keep {
            let mut acc = Complex64::new(0.0, 0.0);
            for &t in &traced_offsets {
                acc += m[(keep_offsets[a] + t, keep_offsets[b] + t)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// PureState
// ---------------------------------------------------------------------------

/// Unit vector tagged with a factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    fact: HilbertFactorization,
    vector: CVector,
}

impl PureState {
    pub fn new(fact: HilbertFactorization, vector: CVector) -> Result<Self> {
        if vector.len() != fact.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} but factorization {:?} needs {}",
                vector.len(),
                fact.dims(),
                fact.total_dim()
            )));
        }
        let norm = vector.norm();
        if (norm - 1.0).abs() > tol::UNIT_NORM {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(Self { fact, vector })
    }

    /// Computational basis state with the given 0-based label per site.
    pub fn basis_state(dims: &[usize], labels: &[usize]) -> Result<Self> {
        let fact = HilbertFactorization::new(dims.to_vec())?;
        if labels.len() != dims.len() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} sites",
                labels.len(),
                dims.len()
            )));
        }
        for (n, (&l, &d)) in labels.iter().zip(dims).enumerate() {
            if l >= d {
                return Err(Error::InvalidArgument(format!(
                    "label {l} out of range for site {} of dim {d}",
                    n + 1
                )));
            }
        }
        let strides = index::strides(dims);
        let pos: usize = labels.iter().zip(&strides).map(|(&l, &s)| l * s).sum();
        let mut vec = CVector::zeros(fact.total_dim());
        vec[pos] = Complex64::new(1.0, 0.0);
        Ok(Self { fact, vector: vec })
    }

    pub fn factorization(&self) -> &HilbertFactorization {
        &self.fact
    }

    pub fn dims(&self) -> &[usize] {
        self.fact.dims()
    }

    pub fn vector(&self) -> &CVector {
        &self.vector
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let fact = self.fact.concat(&other.fact)?;
        let v = self.vector.kronecker(&other.vector);
        Self::new(fact, v)
    }
}

// ---------------------------------------------------------------------------
// LocalChannel
// ---------------------------------------------------------------------------

/// Deterministic local operation: a complete Kraus family acting on one site,
/// all terms sharing the same output dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    site: usize,
    kraus: Vec<CMatrix>,
}

impl LocalChannel {
    pub fn new(site: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        if site == 0 {
            return Err(Error::InvalidArgument("sites are 1-indexed".into()));
        }
        if kraus.is_empty() {
            return Err(Error::InvalidOperation("empty Kraus family".into()));
        }
        let (rows, cols) = (kraus[0].nrows(), kraus[0].ncols());
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidOperation("zero-sized Kraus operator".into()));
        }
        for k in &kraus {
            if k.nrows() != rows || k.ncols() != cols {
                return Err(Error::InvalidOperation(
                    "channel Kraus operators must share a common shape".into(),
                ));
            }
        }
        let defect = completeness_defect(kraus.iter());
        if defect > tol::COMPLETENESS {
            return Err(Error::InvalidOperation(format!(
                "completeness defect {defect:.3e}"
            )));
        }
        Ok(Self { site, kraus })
    }

    /// Identity channel on a site of the given dimension.
    pub fn identity(site: usize, dim: usize) -> Result<Self> {
        Self::new(site, vec![CMatrix::identity(dim, dim)])
    }

    /// Single-Kraus unitary channel; completeness validation enforces that
    /// `u` is actually an isometry.
    pub fn from_unitary(site: usize, u: CMatrix) -> Result<Self> {
        Self::new(site, vec![u])
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].nrows()
    }
}

/// Frobenius norm of `Σ K†K - I`.
pub(crate) fn completeness_defect<'a>(kraus: impl Iterator<Item = &'a CMatrix>) -> f64 {
    let mut sum: Option<CMatrix> = None;
    for k in kraus {
        let term = k.adjoint() * k;
        sum = Some(match sum {
            Some(s) => s + term,
            None => term,
        });
    }
    let sum = sum.expect("nonempty Kraus family");
    let d = sum.nrows();
    frobenius_distance(&sum, &CMatrix::identity(d, d))
}

// ---------------------------------------------------------------------------
// LocalMeasurement
// ---------------------------------------------------------------------------

/// One measurement outcome's Kraus terms. All terms of an outcome share an
/// output dimension; different outcomes may map to different spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeKraus {
    kraus: Vec<CMatrix>,
}

impl OutcomeKraus {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidOperation(
                "measurement outcome needs at least one Kraus term".into(),
            ));
        }
        let (rows, cols) = (kraus[0].nrows(), kraus[0].ncols());
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidOperation("zero-sized Kraus operator".into()));
        }
        for k in &kraus {
            if k.nrows() != rows || k.ncols() != cols {
                return Err(Error::InvalidOperation(
                    "Kraus terms of one outcome must share a common shape".into(),
                ));
            }
        }
        Ok(Self { kraus })
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// Number of Kraus terms realizing this outcome.
    pub fn terms(&self) -> usize {
        self.kraus.len()
    }

    pub fn output_dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.kraus[0].ncols()
    }
}

/// Local measurement: outcomes of grouped Kraus terms on one site, jointly
/// complete. A measurement with one term per outcome is called efficient.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMeasurement {
    site: usize,
    outcomes: Vec<OutcomeKraus>,
}

impl LocalMeasurement {
    pub fn new(site: usize, outcomes: Vec<OutcomeKraus>) -> Result<Self> {
        if site == 0 {
            return Err(Error::InvalidArgument("sites are 1-indexed".into()));
        }
        if outcomes.is_empty() {
            return Err(Error::InvalidOperation("measurement with no outcomes".into()));
        }
        let d_in = outcomes[0].input_dim();
        for o in &outcomes {
            if o.input_dim() != d_in {
                return Err(Error::InvalidOperation(
                    "all outcomes must act on the same input space".into(),
                ));
            }
        }
        let defect = completeness_defect(outcomes.iter().flat_map(|o| o.kraus.iter()));
        if defect > tol::COMPLETENESS {
            return Err(Error::InvalidOperation(format!(
                "joint completeness defect {defect:.3e}"
            )));
        }
        Ok(Self { site, outcomes })
    }

    /// Projective readout in the computational basis of a site.
    pub fn computational(site: usize, dim: usize) -> Result<Self> {
        let outcomes = (0..dim)
            .map(|q| {
                let mut p = CMatrix::zeros(dim, dim);
                p[(q, q)] = Complex64::new(1.0, 0.0);
                OutcomeKraus::new(vec![p])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(site, outcomes)
    }

    /// Measurement from a family of projectors (or any complete family with
    /// one Kraus term per outcome).
    pub fn efficient(site: usize, kraus: Vec<CMatrix>) -> Result<Self> {
        let outcomes = kraus
            .into_iter()
            .map(|k| OutcomeKraus::new(vec![k]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(site, outcomes)
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn outcomes(&self) -> &[OutcomeKraus] {
        &self.outcomes
    }

    pub fn n_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn input_dim(&self) -> usize {
        self.outcomes[0].input_dim()
    }

    /// True iff every outcome has exactly one Kraus term.
    pub fn is_efficient(&self) -> bool {
        self.outcomes.iter().all(|o| o.terms() == 1)
    }

    /// Forget the outcome grouping. Only defined when all outcomes share an
    /// output dimension, in which case the measurement performed without
    /// reading the result is this deterministic channel.
    pub fn as_channel(&self) -> Option<LocalChannel> {
        let out_dim = self.outcomes[0].output_dim();
        if self.outcomes.iter().any(|o| o.output_dim() != out_dim) {
            return None;
        }
        let kraus: Vec<CMatrix> = self
            .outcomes
            .iter()
            .flat_map(|o| o.kraus.iter().cloned())
            .collect();
        LocalChannel::new(self.site, kraus).ok()
    }
}

/// Probability-tagged post-measurement state; `state` is `None` for outcomes
/// below the probability floor.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    pub probability: f64,
    pub state: Option<DensityOperator>,
}

/// Total probability over a measurement's outcome list.
pub fn total_probability(outcomes: &[MeasurementOutcome]) -> f64 {
    outcomes.iter().map(|o| o.probability).sum()
}
