//! Bell-functional values by see-saw optimization over local POVMs.
//!
//! For a bipartite state and a functional with coefficients `β[s,t,x,y]`,
//! the reported value is `Σ β tr(ρ F_{s|x} ⊗ F_{t|y})` maximized by
//! alternating exact single-party updates: with the other party fixed, each
//! setting's optimal two-outcome POVM assigns projectors onto the positive
//! and negative eigenspaces of the conditional operator. Settings with more
//! than two outcomes are improved by exact pairwise splits, which keeps every
//! step monotone. The result is a certified lower bound on the supremum.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qstate::{derive_seed, haar_unitary, DensityOperator};
use crate::qstate::{hermitian_eigen_desc, partial_trace_matrix};

type CMatrix = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Bell functional: `settings_a x settings_b` measurement choices with
/// `outcomes_a`/`outcomes_b` outcomes each and real coefficients
/// `β[s,t,x,y]`, flattened s-major. The local bound is carried as metadata
/// when known.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "BellFunctionalRep")]
pub struct BellFunctional {
    #[serde(rename = "X")]
    pub settings_a: usize,
    #[serde(rename = "Y")]
    pub settings_b: usize,
    #[serde(rename = "S")]
    pub outcomes_a: usize,
    #[serde(rename = "T")]
    pub outcomes_b: usize,
    /// Flattened as `((s * T + t) * X + x) * Y + y`, all indices 0-based.
    pub beta: Vec<f64>,
    pub local_bound: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BellFunctionalRep {
    #[serde(rename = "X")]
    settings_a: usize,
    #[serde(rename = "Y")]
    settings_b: usize,
    #[serde(rename = "S")]
    outcomes_a: usize,
    #[serde(rename = "T")]
    outcomes_b: usize,
    beta: Vec<f64>,
    #[serde(default)]
    local_bound: Option<f64>,
}

impl TryFrom<BellFunctionalRep> for BellFunctional {
    type Error = Error;
    fn try_from(rep: BellFunctionalRep) -> Result<Self> {
        Self::new(
            rep.settings_a,
            rep.settings_b,
            rep.outcomes_a,
            rep.outcomes_b,
            rep.beta,
            rep.local_bound,
        )
    }
}

impl BellFunctional {
    pub fn new(
        settings_a: usize,
        settings_b: usize,
        outcomes_a: usize,
        outcomes_b: usize,
        beta: Vec<f64>,
        local_bound: Option<f64>,
    ) -> Result<Self> {
        let f = Self {
            settings_a,
            settings_b,
            outcomes_a,
            outcomes_b,
            beta,
            local_bound,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.settings_a * self.settings_b * self.outcomes_a * self.outcomes_b;
        if expected == 0 {
            return Err(Error::InvalidArgument(
                "functional needs positive settings and outcomes".into(),
            ));
        }
        if self.beta.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients, expected {expected}",
                self.beta.len()
            )));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        if self.beta.iter().all(|&b| b == 0.0) {
            return Err(Error::InvalidArgument("all coefficients are zero".into()));
        }
        Ok(())
    }

    pub fn coefficient(&self, s: usize, t: usize, x: usize, y: usize) -> f64 {
        self.beta[((s * self.outcomes_b + t) * self.settings_a + x) * self.settings_b + y]
    }

    pub fn abs_sum(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }

    /// The CHSH functional in correlator form: two settings and two outcomes
    /// per party, `E(1,1) + E(1,2) + E(2,1) - E(2,2)`, local bound 2.
    pub fn chsh() -> Self {
        let (x_n, y_n, s_n, t_n) = (2usize, 2usize, 2usize, 2usize);
        let mut beta = vec![0.0; x_n * y_n * s_n * t_n];
        for s in 0..s_n {
            for t in 0..t_n {
                for x in 0..x_n {
                    for y in 0..y_n {
                        let sign = if x == 1 && y == 1 { -1.0 } else { 1.0 };
                        let parity = if (s + t) % 2 == 0 { 1.0 } else { -1.0 };
                        beta[((s * t_n + t) * x_n + x) * y_n + y] = sign * parity;
                    }
                }
            }
        }
        Self {
            settings_a: x_n,
            settings_b: y_n,
            outcomes_a: s_n,
            outcomes_b: t_n,
            beta,
            local_bound: Some(2.0),
        }
    }
}

/// See-saw controls. Restarts draw independent Haar-random projective
/// initializations from seeds derived per restart index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeesawOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for SeesawOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iters: 500,
            tol: 1e-9,
            seed: 0,
        }
    }
}

/// Outcome of a see-saw run: the best value over restarts, the optimizing
/// POVMs (`[setting][outcome]`), and convergence bookkeeping.
#[derive(Debug, Clone)]
pub struct BellResult {
    pub value: f64,
    pub povms_a: Vec<Vec<CMatrix>>,
    pub povms_b: Vec<Vec<CMatrix>>,
    pub best_restart: usize,
    pub iterations: usize,
    /// Per-iteration values of the winning restart, nondecreasing.
    pub value_trace: Vec<f64>,
    /// Set when the final restart improved the incumbent, meaning more
    /// restarts could plausibly improve the value further.
    pub possibly_not_converged: bool,
}

/// Haar-random projective POVM: the columns of a random unitary grouped by a
/// random split into `k` ranks (possibly zero, so degenerate outcomes such
/// as the constant observable are reachable initial points).
pub(crate) fn random_projective_povm(dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<CMatrix> {
    use rand::Rng;
    let u = haar_unitary(dim, rng);
    let mut cuts: Vec<usize> = (0..k - 1).map(|_| rng.random_range(0..=dim)).collect();
    cuts.push(0);
    cuts.push(dim);
    cuts.sort_unstable();
    let mut povm = Vec::with_capacity(k);
    for w in cuts.windows(2) {
        let mut f = CMatrix::zeros(dim, dim);
        for j in w[0]..w[1] {
            let v = u.column(j);
            f += v * v.adjoint();
        }
        povm.push(f);
    }
    povm
}

struct Seesaw<'a> {
    rho: &'a CMatrix,
    f: &'a BellFunctional,
    dims: [usize; 2],
}

impl<'a> Seesaw<'a> {
    /// Conditional single-party operators `tr_other[ρ (F embedded)]` for
    /// every setting/outcome of the fixed party.
    fn conditionals(&self, fixed_party: usize, povms: &[Vec<CMatrix>]) -> Vec<Vec<CMatrix>> {
        let (d1, d2) = (self.dims[0], self.dims[1]);
        povms
            .iter()
            .map(|setting| {
                setting
                    .iter()
                    .map(|f_op| {
                        let embedded = if fixed_party == 1 {
                            f_op.kronecker(&CMatrix::identity(d2, d2))
                        } else {
                            CMatrix::identity(d1, d1).kronecker(f_op)
                        };
                        let prod = self.rho * embedded;
                        let keep = if fixed_party == 1 { [1usize] } else { [0usize] };
                        let r = partial_trace_matrix(&prod, &[d1, d2], &keep);
                        hermitize(&r)
                    })
                    .collect()
            })
            .collect()
    }

    /// Objective operators for the free party: `M_{s|x} = Σ_{t,y} β R_{t|y}`.
    #[allow(clippy::needless_range_loop)]
    fn objectives(&self, free_party: usize, conditionals: &[Vec<CMatrix>]) -> Vec<Vec<CMatrix>> {
        let d = self.dims[free_party - 1];
        let (own_settings, own_outcomes, other_settings, other_outcomes) = if free_party == 1 {
            (
                self.f.settings_a,
                self.f.outcomes_a,
                self.f.settings_b,
                self.f.outcomes_b,
            )
        } else {
            (
                self.f.settings_b,
                self.f.outcomes_b,
                self.f.settings_a,
                self.f.outcomes_a,
            )
        };
        (0..own_settings)
            .map(|x| {
                (0..own_outcomes)
                    .map(|s| {
                        let mut m = CMatrix::zeros(d, d);
                        for y in 0..other_settings {
                            for t in 0..other_outcomes {
                                let beta = if free_party == 1 {
                                    self.f.coefficient(s, t, x, y)
                                } else {
                                    self.f.coefficient(t, s, y, x)
                                };
                                if beta != 0.0 {
                                    m += &conditionals[y][t] * c(beta);
                                }
                            }
                        }
                        m
                    })
                    .collect()
            })
            .collect()
    }

    fn value_from(&self, povms: &[Vec<CMatrix>], objectives: &[Vec<CMatrix>]) -> f64 {
        povms
            .iter()
            .zip(objectives)
            .map(|(setting, objs)| {
                setting
                    .iter()
                    .zip(objs)
                    .map(|(f_op, m)| (f_op * m).trace().re)
                    .sum::<f64>()
            })
            .sum()
    }
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

/// Projector onto the nonnegative eigenspace of a Hermitian matrix.
fn nonnegative_eigenprojector(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen_desc(m);
    let d = m.nrows();
    let mut p = CMatrix::zeros(d, d);
    for (k, &v) in vals.iter().enumerate() {
        if v >= 0.0 {
            let col = vecs.column(k);
            p += col * col.adjoint();
        }
    }
    p
}

/// Hermitian PSD square root via eigendecomposition, clamping tiny negative
/// eigenvalues to zero.
fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (vals, vecs) = hermitian_eigen_desc(m);
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, d);
    for (k, &v) in vals.iter().enumerate() {
        if v > 0.0 {
            let col = vecs.column(k);
            out += (col * col.adjoint()) * c(v.sqrt());
        }
    }
    out
}

/// Exact optimal POVM for one setting given objective operators, for the
/// two-outcome case: projectors onto the positive and negative eigenspaces
/// of `M_0 - M_1`. With more outcomes, monotone pairwise exact splits.
fn optimize_setting(current: &[CMatrix], objectives: &[CMatrix]) -> Vec<CMatrix> {
    let d = objectives[0].nrows();
    let k = objectives.len();
    if k == 1 {
        return vec![CMatrix::identity(d, d)];
    }
    if k == 2 {
        let diff = hermitize(&(&objectives[0] - &objectives[1]));
        let p = nonnegative_eigenprojector(&diff);
        let q = CMatrix::identity(d, d) - &p;
        return vec![p, q];
    }
    // pairwise improvement sweeps: each split is the exact optimum for the
    // pair's combined operator, so the objective never decreases
    let mut povm: Vec<CMatrix> = current.to_vec();
    for _sweep in 0..2 {
        for i in 0..k {
            for j in i + 1..k {
                let total = hermitize(&(&povm[i] + &povm[j]));
                let root = psd_sqrt(&total);
                let g = hermitize(&(&root * hermitize(&(&objectives[i] - &objectives[j])) * &root));
                let p = nonnegative_eigenprojector(&g);
                let fi = hermitize(&(&root * p * &root));
                let fj = hermitize(&(&total - &fi));
                povm[i] = fi;
                povm[j] = fj;
            }
        }
    }
    povm
}

/// Evaluate the best see-saw lower bound on the functional's supremum for a
/// bipartite state. Restarts are independent and reduced in fixed order, so
/// the result is a deterministic function of the options.
pub fn bell_value(
    rho: &DensityOperator,
    f: &BellFunctional,
    opts: &SeesawOptions,
) -> Result<BellResult> {
    f.validate()?;
    if rho.n_sites() != 2 {
        return Err(Error::InvalidArgument(format!(
            "see-saw needs a bipartite state, got {} sites",
            rho.n_sites()
        )));
    }
    if opts.restarts == 0 || opts.max_iters == 0 {
        return Err(Error::InvalidArgument("restarts and iters must be positive".into()));
    }
    let dims = [rho.dims()[0], rho.dims()[1]];
    let engine = Seesaw {
        rho: rho.matrix(),
        f,
        dims,
    };

    let mut best: Option<BellResult> = None;
    let mut improved_at_last = false;

    for restart in 0..opts.restarts {
        let mut rng = crate::qstate::sample::rng_from_seed(derive_seed(opts.seed, restart as u64));
        let mut povms_a: Vec<Vec<CMatrix>> = (0..f.settings_a)
            .map(|_| random_projective_povm(dims[0], f.outcomes_a, &mut rng))
            .collect();
        let mut povms_b: Vec<Vec<CMatrix>> = (0..f.settings_b)
            .map(|_| random_projective_povm(dims[1], f.outcomes_b, &mut rng))
            .collect();

        let cond_b = engine.conditionals(2, &povms_b);
        let obj_a = engine.objectives(1, &cond_b);
        let mut value = engine.value_from(&povms_a, &obj_a);
        let mut trace = vec![value];
        let mut iterations = 0;

        for _ in 0..opts.max_iters {
            iterations += 1;
            // party 1 exact update against fixed party 2
            let cond_b = engine.conditionals(2, &povms_b);
            let obj_a = engine.objectives(1, &cond_b);
            for (x, objs) in obj_a.iter().enumerate() {
                povms_a[x] = optimize_setting(&povms_a[x], objs);
            }
            // party 2 exact update against fixed party 1
            let cond_a = engine.conditionals(1, &povms_a);
            let obj_b = engine.objectives(2, &cond_a);
            for (y, objs) in obj_b.iter().enumerate() {
                povms_b[y] = optimize_setting(&povms_b[y], objs);
            }
            let new_value = engine.value_from(&povms_b, &obj_b);
            trace.push(new_value);
            let improvement = new_value - value;
            value = new_value;
            if improvement < opts.tol {
                break;
            }
        }

        let is_better = best.as_ref().is_none_or(|b| value > b.value);
        // only improvements beyond the convergence tolerance flag the scan
        // as possibly unconverged
        let significant = best.as_ref().is_none_or(|b| value > b.value + opts.tol);
        if is_better {
            if significant {
                improved_at_last = restart + 1 == opts.restarts;
            }
            best = Some(BellResult {
                value,
                povms_a: povms_a.clone(),
                povms_b: povms_b.clone(),
                best_restart: restart,
                iterations,
                value_trace: trace,
                possibly_not_converged: false,
            });
        }
    }

    let mut result = best.expect("at least one restart");
    result.possibly_not_converged = improved_at_last && opts.restarts > 1;
    Ok(result)
}
