//! Schmidt decomposition across a cut, the majorization preorder, Rényi
//! entropy families on Schmidt vectors, and pure-state ordering
//! classifications.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::PureState;
use crate::{index, tol};

/// Descending probability vector of Schmidt coefficients for a pure
/// bipartite cut. Entries are strictly above the Schmidt cutoff and sum to
/// one; the rank is the entry count. Serializes as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SchmidtVector {
    coeffs: Vec<f64>,
}

impl SchmidtVector {
    /// Sorts descending, drops entries at or below the cutoff, and checks
    /// normalization.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "Schmidt coefficients must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = coeffs.iter().sum();
        if (total - 1.0).abs() > tol::TRACE {
            return Err(Error::InvalidArgument(format!(
                "Schmidt coefficients sum to {total}, not 1"
            )));
        }
        coeffs.sort_by(|a, b| b.total_cmp(a));
        coeffs.retain(|&v| v > tol::SCHMIDT_CUTOFF);
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument(
                "no Schmidt coefficient above the cutoff".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// Uniform vector of the given rank.
    pub fn uniform(rank: usize) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidArgument("rank must be positive".into()));
        }
        Ok(Self {
            coeffs: vec![1.0 / rank as f64; rank],
        })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient-wise equality within the crate tolerance, including rank.
    pub fn approx_eq(&self, other: &Self) -> bool {
        self.rank() == other.rank()
            && self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .all(|(a, b)| (a - b).abs() <= tol::COEFF_EQUALITY)
    }
}

impl TryFrom<Vec<f64>> for SchmidtVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SchmidtVector> for Vec<f64> {
    fn from(v: SchmidtVector) -> Vec<f64> {
        v.coeffs
    }
}

/// Result of a Schmidt decomposition: coefficients plus the two orthonormal
/// families, stored as matrix columns. The state reconstructs as
/// `Σ_k σ_k left_k ⊗ right_k` with `σ_k` the raw singular values.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    pub coeffs: SchmidtVector,
    /// Raw singular values matching `coeffs` before renormalization.
    pub singular_values: Vec<f64>,
    /// `d_left x rank`; column `k` is the k-th left basis vector.
    pub left: DMatrix<Complex64>,
    /// `d_right x rank`; column `k` is the k-th right basis vector.
    pub right: DMatrix<Complex64>,
    /// 0-based positions of the cut sites within the original factorization.
    pub cut_sites: Vec<usize>,
}

/// Schmidt-decompose a pure state across `cut` (1-based sites) versus its
/// complement. The cut must be a nonempty strict subset of the sites.
pub fn schmidt_decompose(psi: &PureState, cut: &[usize]) -> Result<SchmidtDecomposition> {
    let fact = psi.factorization();
    let cut0 = fact.site_set(cut)?;
    if cut0.len() == fact.n_sites() {
        return Err(Error::InvalidArgument(
            "cut must be a strict subset of the sites".into(),
        ));
    }
    let dims = fact.dims();
    let rest0: Vec<usize> = (0..dims.len()).filter(|i| !cut0.contains(i)).collect();
    let cut_dims: Vec<usize> = cut0.iter().map(|&i| dims[i]).collect();
    let rest_dims: Vec<usize> = rest0.iter().map(|&i| dims[i]).collect();
    let full_strides = index::strides(dims);
    let cut_offsets = index::group_offsets(&cut_dims, &cut0, &full_strides);
    let rest_offsets = index::group_offsets(&rest_dims, &rest0, &full_strides);
    let d_left = cut_offsets.len();
    let d_right = rest_offsets.len();
    let amplitudes = DMatrix::from_fn(d_left, d_right, |a, b| {
        psi.vector()[cut_offsets[a] + rest_offsets[b]]
    });

    let svd = amplitudes.svd(true, true);
    let u = svd.u.expect("svd with vectors");
    let v_t = svd.v_t.expect("svd with vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut sigmas = Vec::new();
    let mut lambdas = Vec::new();
    for &k in &order {
        let s = svd.singular_values[k];
        let l = s * s;
        if l > tol::SCHMIDT_CUTOFF {
            sigmas.push(s);
            lambdas.push(l);
        }
    }
    if sigmas.is_empty() {
        return Err(Error::InvalidState("state has no Schmidt weight".into()));
    }
    let rank = sigmas.len();
    let left = DMatrix::from_fn(d_left, rank, |i, k| u[(i, order[k])]);
    // the factorization is A = U Σ V^H, so row k of v_t already holds the
    // k-th right vector's amplitudes
    let right = DMatrix::from_fn(d_right, rank, |j, k| v_t[(order[k], j)]);

    Ok(SchmidtDecomposition {
        coeffs: SchmidtVector::new(lambdas)?,
        singular_values: sigmas,
        left,
        right,
        cut_sites: cut0,
    })
}

/// Majorization: every partial sum of `a` dominates the corresponding
/// partial sum of `b` within tolerance. Vectors are zero-padded to a common
/// length; both sum to one so the last partial sums always agree.
pub fn majorizes(a: &SchmidtVector, b: &SchmidtVector) -> bool {
    let len = a.rank().max(b.rank());
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    for k in 0..len {
        sum_a += a.coeffs.get(k).copied().unwrap_or(0.0);
        sum_b += b.coeffs.get(k).copied().unwrap_or(0.0);
        if sum_a < sum_b - tol::MAJORIZATION {
            return false;
        }
    }
    true
}

/// Rényi entropy of order `q >= 0` in nats: Shannon at `q = 1`,
/// `ln(Σ λ^q)/(1-q)` elsewhere, `ln r` at `q = 0`. Near `q = 1` the value is
/// evaluated by a cumulant series so the family is continuous in `q`.
pub fn entropy_family(v: &SchmidtVector, q: f64) -> Result<f64> {
    if !q.is_finite() || q < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "entropy order must be nonnegative, got {q}"
        )));
    }
    let lambda = v.coeffs();
    if q == 0.0 {
        return Ok((lambda.len() as f64).ln());
    }
    if (q - 1.0).abs() < 1e-4 {
        // ln Σ λ^q is the cumulant generating function of ln λ under the
        // weights λ, evaluated at t = q - 1
        let k1: f64 = lambda.iter().map(|&l| l * l.ln()).sum();
        let m2: f64 = lambda.iter().map(|&l| l * l.ln().powi(2)).sum();
        let m3: f64 = lambda.iter().map(|&l| l * l.ln().powi(3)).sum();
        let k2 = m2 - k1 * k1;
        let k3 = m3 - 3.0 * k1 * m2 + 2.0 * k1.powi(3);
        let t = q - 1.0;
        return Ok(-(k1 + k2 * t / 2.0 + k3 * t * t / 6.0));
    }
    let sum: f64 = lambda.iter().map(|&l| l.powf(q)).sum();
    Ok(sum.ln() / (1.0 - q))
}

/// Deterministic pure-state convertibility by local operations and one-way
/// classical communication: possible exactly when the target's coefficient
/// vector majorizes the source's.
pub fn pure_convertible_locc(source: &SchmidtVector, target: &SchmidtVector) -> bool {
    majorizes(target, source)
}

/// How two pure bipartite states relate under the deterministic-local-
/// operation preorder, judged from their Schmidt vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PureOrderClass {
    /// Same rank, coefficient-wise equal: every correlation monotone agrees.
    EquallyCorrelated,
    /// Same rank, different coefficients: some monotones increase while
    /// others decrease in either direction.
    Incomparable,
    /// Different ranks; no classification is available.
    Undetermined,
}

/// Classify a pair of pure bipartite states under the deterministic-local-
/// operation preorder. Equal-rank pairs are either equally correlated or
/// incomparable; unequal ranks are surfaced as undetermined rather than
/// guessed.
pub fn classify_pure_order(a: &SchmidtVector, b: &SchmidtVector) -> PureOrderClass {
    if a.rank() != b.rank() {
        return PureOrderClass::Undetermined;
    }
    if a.approx_eq(b) {
        PureOrderClass::EquallyCorrelated
    } else {
        PureOrderClass::Incomparable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{
        hermitian_eigenvalues, sample_pure_state, CVector, HilbertFactorization, LocalChannel,
        PureState,
    };
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pure_with_coeffs(eps: f64) -> PureState {
        let fact = HilbertFactorization::new(vec![2, 2]).unwrap();
        let v = CVector::from_vec(vec![
            c((1.0 - eps).sqrt(), 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(eps.sqrt(), 0.0),
        ]);
        PureState::new(fact, v).unwrap()
    }

    #[test]
    fn two_level_coefficients_recovered() {
        let psi = pure_with_coeffs(0.3);
        let dec = schmidt_decompose(&psi, &[1]).unwrap();
        let got = dec.coeffs.coeffs();
        assert!((got[0] - 0.7).abs() < 1e-12);
        assert!((got[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn product_state_has_rank_one() {
        let psi = PureState::basis_state(&[2, 3], &[1, 2]).unwrap();
        let dec = schmidt_decompose(&psi, &[1]).unwrap();
        assert_eq!(dec.coeffs.rank(), 1);
        assert!((dec.coeffs.coeffs()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coefficients_match_reduced_state_spectrum() {
        let psi = sample_pure_state(&[3, 4], 7).unwrap();
        let dec = schmidt_decompose(&psi, &[1]).unwrap();
        // oracle: eigensolve the reduced state across the same cut
        let reduced = psi.to_density().partial_trace(&[1]).unwrap();
        let mut eigs = hermitian_eigenvalues(reduced.matrix());
        eigs.sort_by(|a, b| b.total_cmp(a));
        for (l, e) in dec.coeffs.coeffs().iter().zip(&eigs) {
            assert!((l - e).abs() < 1e-12, "{l} vs {e}");
        }
    }

    #[test]
    fn decomposition_reconstructs_state() {
        let psi = sample_pure_state(&[2, 3, 2], 9).unwrap();
        let dec = schmidt_decompose(&psi, &[2]).unwrap();
        // rebuild amplitudes: cut site 2 is the row index, sites {1,3} columns
        let dims = psi.dims();
        let mut rebuilt = CVector::zeros(psi.vector().len());
        for k in 0..dec.coeffs.rank() {
            let s = c(dec.singular_values[k], 0.0);
            for a in 0..dims[1] {
                for (b, &offset) in crate::index::group_offsets(
                    &[dims[0], dims[2]],
                    &[0, 2],
                    &crate::index::strides(dims),
                )
                .iter()
                .enumerate()
                {
                    let full = offset + a * crate::index::strides(dims)[1];
                    rebuilt[full] += s * dec.left[(a, k)] * dec.right[(b, k)];
                }
            }
        }
        let diff: f64 = (rebuilt - psi.vector()).norm();
        assert!(diff < 1e-9, "reconstruction error {diff}");
    }

    #[test]
    fn trivial_cuts_are_rejected() {
        let psi = sample_pure_state(&[2, 2], 5).unwrap();
        assert!(schmidt_decompose(&psi, &[]).is_err());
        assert!(schmidt_decompose(&psi, &[1, 2]).is_err());
    }

    #[test]
    fn point_mass_majorizes_everything() {
        let point = SchmidtVector::new(vec![1.0]).unwrap();
        let flat = SchmidtVector::uniform(2).unwrap();
        assert!(majorizes(&point, &flat));
        assert!(!majorizes(&flat, &point));
    }

    #[test]
    fn majorization_partial_sums_with_padding() {
        let a = SchmidtVector::new(vec![0.6, 0.4]).unwrap();
        let b = SchmidtVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        assert!(majorizes(&a, &b));
        assert!(!majorizes(&b, &a));
    }

    #[test]
    fn entropy_family_flat_and_point_values() {
        for q in [0.0, 0.5, 1.0, 2.0, 64.0] {
            let flat = SchmidtVector::uniform(5).unwrap();
            assert!((entropy_family(&flat, q).unwrap() - 5.0f64.ln()).abs() < 1e-9);
            let point = SchmidtVector::new(vec![1.0]).unwrap();
            assert!(entropy_family(&point, q).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_family_matches_scalar_formula() {
        let v = SchmidtVector::new(vec![0.7, 0.3]).unwrap();
        let got = entropy_family(&v, 2.0).unwrap();
        let oracle = (1.0f64 / (0.7f64.powi(2) + 0.3f64.powi(2))).ln();
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - (1.0f64 / 0.58).ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_family_continuous_near_one() {
        let v = SchmidtVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        // inside the series band the value must agree with the direct
        // formula, so the family has no jump at the band edge
        for q in [1.0 - 9e-5, 1.0 + 9e-5_f64] {
            let series = entropy_family(&v, q).unwrap();
            let direct: f64 = {
                let sum: f64 = v.coeffs().iter().map(|&l| l.powf(q)).sum();
                sum.ln() / (1.0 - q)
            };
            assert!((series - direct).abs() < 1e-9, "q={q}: {series} vs {direct}");
        }
        let below = entropy_family(&v, 1.0 - 1.001e-4).unwrap();
        let above = entropy_family(&v, 1.0 - 0.999e-4).unwrap();
        assert!((below - above).abs() < 1e-6);
        assert!(entropy_family(&v, -0.5).is_err());
    }

    #[test]
    fn convertibility_follows_target_majorization() {
        let flat = SchmidtVector::uniform(2).unwrap();
        let point = SchmidtVector::new(vec![1.0]).unwrap();
        let skew = SchmidtVector::new(vec![0.7, 0.3]).unwrap();
        assert!(pure_convertible_locc(&flat, &point));
        assert!(!pure_convertible_locc(&point, &flat));
        assert!(pure_convertible_locc(&flat, &skew));
    }

    #[test]
    fn pure_pair_classification() {
        let a = SchmidtVector::uniform(2).unwrap();
        let b = SchmidtVector::uniform(2).unwrap();
        let skew = SchmidtVector::new(vec![0.8, 0.2]).unwrap();
        let other = SchmidtVector::new(vec![0.7, 0.3]).unwrap();
        let point = SchmidtVector::new(vec![1.0]).unwrap();
        assert_eq!(classify_pure_order(&a, &b), PureOrderClass::EquallyCorrelated);
        assert_eq!(classify_pure_order(&skew, &other), PureOrderClass::Incomparable);
        assert_eq!(classify_pure_order(&point, &a), PureOrderClass::Undetermined);
    }

    #[test]
    fn schmidt_vector_serializes_as_bare_array() {
        let v = SchmidtVector::new(vec![0.3, 0.7]).unwrap();
        assert_eq!(serde_json::to_string(&v).unwrap(), "[0.7,0.3]");
        let back: SchmidtVector = serde_json::from_str("[0.5,0.5]").unwrap();
        assert_eq!(back.rank(), 2);
        assert!(serde_json::from_str::<SchmidtVector>("[0.5,0.4]").is_err());
    }

    /// Simplex sampler for property tests.
    fn random_simplex(rng: &mut rand_chacha::ChaCha8Rng, len: usize) -> SchmidtVector {
        use rand::Rng;
        let mut v: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
        SchmidtVector::new(v).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn schur_concavity_on_majorizing_pairs(seed in 0u64..1 << 48) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            use rand::Rng;
            let len = rng.random_range(2..=5usize);
            let mu = random_simplex(&mut rng, len);
            // mixing toward the point mass always majorizes the original
            let t: f64 = rng.random();
            let mut mixed: Vec<f64> = mu.coeffs().iter().map(|&x| (1.0 - t) * x).collect();
            mixed[0] += t;
            let lambda = SchmidtVector::new(mixed).unwrap();
            prop_assert!(majorizes(&lambda, &mu));
            for q in [0.0, 0.5, 1.0, 2.0, 64.0] {
                let s_l = entropy_family(&lambda, q).unwrap();
                let s_m = entropy_family(&mu, q).unwrap();
                prop_assert!(s_l <= s_m + 1e-9, "q={q}: {s_l} > {s_m}");
            }
        }

        #[test]
        fn majorization_is_reflexive_and_transitive(seed in 0u64..1 << 48) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            use rand::Rng;
            let len = rng.random_range(2..=4usize);
            let c_vec = random_simplex(&mut rng, len);
            let t1: f64 = rng.random();
            let t2: f64 = rng.random();
            let mix = |v: &SchmidtVector, t: f64| {
                let mut m: Vec<f64> = v.coeffs().iter().map(|&x| (1.0 - t) * x).collect();
                m[0] += t;
                SchmidtVector::new(m).unwrap()
            };
            let b_vec = mix(&c_vec, t1);
            let a_vec = mix(&b_vec, t2);
            prop_assert!(majorizes(&a_vec, &a_vec));
            prop_assert!(majorizes(&a_vec, &b_vec));
            prop_assert!(majorizes(&b_vec, &c_vec));
            prop_assert!(majorizes(&a_vec, &c_vec));
        }

        #[test]
        fn coefficients_invariant_under_local_unitaries(seed in 0u64..1 << 48) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let psi = crate::qstate::sample::sample_pure_state_with_rng(&[2, 3], &mut rng).unwrap();
            let u1 = crate::qstate::haar_unitary(2, &mut rng);
            let u2 = crate::qstate::haar_unitary(3, &mut rng);
            let rho = psi.to_density();
            let rotated = rho
                .apply_channel(&LocalChannel::from_unitary(1, u1).unwrap()).unwrap()
                .apply_channel(&LocalChannel::from_unitary(2, u2).unwrap()).unwrap();
            let before = schmidt_decompose(&psi, &[1]).unwrap().coeffs;
            // rotated state is still pure: decompose via its top eigenvector
            let (vals, vecs) = crate::qstate::hermitian_eigen_desc(rotated.matrix());
            prop_assert!((vals[0] - 1.0).abs() < 1e-10);
            let top = PureState::new(
                rotated.factorization().clone(),
                vecs.column(0).into_owned(),
            ).unwrap();
            let after = schmidt_decompose(&top, &[1]).unwrap().coeffs;
            prop_assert_eq!(before.rank(), after.rank());
            for (x, y) in before.coeffs().iter().zip(after.coeffs()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
