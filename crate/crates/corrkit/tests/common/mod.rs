//! Shared helpers for the integration suites: an independent grid-search
//! oracle for the CHSH value of two-qubit states, and small samplers.

#![allow(clippy::needless_range_loop)]

use corrkit::qstate::DensityOperator;
use nalgebra::DMatrix;
use num_complex::Complex64;

type CMatrix = DMatrix<Complex64>;

fn pauli() -> [CMatrix; 3] {
    let c = Complex64::new;
    [
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]),
        CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
    ]
}

/// One party's candidate observable with spectrum in [-1, 1]: either a unit
/// Bloch direction (traceless, eigenvalues ±1) or one of the constants ±1.
#[derive(Clone, Copy, Debug)]
enum Observable {
    Direction([f64; 3]),
    Constant(f64),
}

/// Correlation data of a two-qubit state: `t[i][j] = <σ_i ⊗ σ_j>` plus the
/// local Bloch vectors.
struct CorrelationData {
    t: [[f64; 3]; 3],
    bloch_a: [f64; 3],
    bloch_b: [f64; 3],
}

fn correlation_data(rho: &DensityOperator) -> CorrelationData {
    assert_eq!(rho.dims(), &[2, 2], "oracle is for two-qubit states");
    let sigma = pauli();
    let id = CMatrix::identity(2, 2);
    let expect = |op: &CMatrix| -> f64 { (op * rho.matrix()).trace().re };
    let mut t = [[0.0; 3]; 3];
    let mut bloch_a = [0.0; 3];
    let mut bloch_b = [0.0; 3];
    for i in 0..3 {
        bloch_a[i] = expect(&sigma[i].kronecker(&id));
        bloch_b[i] = expect(&id.kronecker(&sigma[i]));
        for j in 0..3 {
            t[i][j] = expect(&sigma[i].kronecker(&sigma[j]));
        }
    }
    CorrelationData { t, bloch_a, bloch_b }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &[f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

impl CorrelationData {
    /// Alice observable's constant part and transposed-correlation image,
    /// the two pieces Bob's exact best response needs.
    fn alice_parts(&self, a: Observable) -> (f64, [f64; 3], f64) {
        match a {
            Observable::Constant(c) => (c, [0.0; 3], 0.0),
            Observable::Direction(v) => {
                let mut tt_v = [0.0; 3];
                for j in 0..3 {
                    for i in 0..3 {
                        tt_v[j] += self.t[i][j] * v[i];
                    }
                }
                (0.0, tt_v, dot(&v, &self.bloch_a))
            }
        }
    }

    /// Bob's exact best response to a fixed combination `A1 ± A2`: the
    /// better of the optimal direction and the constants ±1.
    fn bob_best(&self, a1: Observable, a2: Observable, sign: f64) -> f64 {
        let (c1, v1, r1) = self.alice_parts(a1);
        let (c2, v2, r2) = self.alice_parts(a2);
        let c = c1 + sign * c2;
        let v = [
            v1[0] + sign * v2[0],
            v1[1] + sign * v2[1],
            v1[2] + sign * v2[2],
        ];
        let r = r1 + sign * r2;
        // direction response: value = c (b·r_B) + v·b, maximized over unit b
        let u = [
            c * self.bloch_b[0] + v[0],
            c * self.bloch_b[1] + v[1],
            c * self.bloch_b[2] + v[2],
        ];
        let direction_value = norm(&u);
        // constant response ±1: value = ±(c + r·1) where r already includes
        // Alice's Bloch overlap
        let constant_value = (c + r).abs();
        direction_value.max(constant_value)
    }

    /// CHSH objective for fixed Alice observables with Bob responding
    /// exactly per setting.
    fn chsh_given_alice(&self, a1: Observable, a2: Observable) -> f64 {
        self.bob_best(a1, a2, 1.0) + self.bob_best(a1, a2, -1.0)
    }
}

fn direction(theta: f64, phi: f64) -> Observable {
    Observable::Direction([
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ])
}

/// Independent CHSH oracle: a dense grid over Alice's two observable angles
/// (plus the degenerate constant observables), Bob responding exactly, then
/// local grid refinement around the best point.
pub fn chsh_grid_oracle(rho: &DensityOperator) -> f64 {
    let data = correlation_data(rho);
    let (n_theta, n_phi) = (13usize, 16usize);
    let mut candidates: Vec<Observable> = vec![Observable::Constant(1.0), Observable::Constant(-1.0)];
    let mut angles: Vec<(f64, f64)> = Vec::new();
    for i in 0..=n_theta {
        let theta = std::f64::consts::PI * i as f64 / n_theta as f64;
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            angles.push((theta, phi));
            candidates.push(direction(theta, phi));
        }
    }

    // coarse stage over all candidate pairs
    let mut best = f64::NEG_INFINITY;
    let mut best_pair = (candidates[0], candidates[0]);
    for &a1 in &candidates {
        for &a2 in &candidates {
            let value = data.chsh_given_alice(a1, a2);
            if value > best {
                best = value;
                best_pair = (a1, a2);
            }
        }
    }

    // refinement: shrink an angle window around each direction in turn
    let mut best_angles = [
        nearest_angles(best_pair.0, &angles),
        nearest_angles(best_pair.1, &angles),
    ];
    let mut width = std::f64::consts::PI / n_theta as f64;
    for _round in 0..40 {
        for which in 0..2 {
            if best_angles[which].is_none() {
                continue; // a constant observable stays constant
            }
            let (t0, p0) = best_angles[which].unwrap();
            let mut local_best = best;
            let mut local_angles = (t0, p0);
            for dt in -3i32..=3 {
                for dp in -3i32..=3 {
                    let theta = t0 + width * dt as f64 / 3.0;
                    let phi = p0 + width * dp as f64 / 3.0;
                    let cand = direction(theta, phi);
                    let pair = if which == 0 {
                        (cand, best_pair.1)
                    } else {
                        (best_pair.0, cand)
                    };
                    let value = data.chsh_given_alice(pair.0, pair.1);
                    if value > local_best {
                        local_best = value;
                        local_angles = (theta, phi);
                    }
                }
            }
            if local_best > best {
                best = local_best;
                best_angles[which] = Some(local_angles);
                let cand = direction(local_angles.0, local_angles.1);
                if which == 0 {
                    best_pair.0 = cand;
                } else {
                    best_pair.1 = cand;
                }
            }
        }
        width *= 0.7;
    }
    best
}

fn nearest_angles(obs: Observable, _grid: &[(f64, f64)]) -> Option<(f64, f64)> {
    match obs {
        Observable::Constant(_) => None,
        Observable::Direction(v) => {
            let theta = v[2].clamp(-1.0, 1.0).acos();
            let phi = v[1].atan2(v[0]);
            Some((theta, phi))
        }
    }
}

/// Probability vector of the given length, entries bounded away from zero,
/// sorted descending.
pub fn random_simplex_descending(
    rng: &mut rand_chacha::ChaCha8Rng,
    len: usize,
    floor: f64,
) -> Vec<f64> {
    use rand::Rng;
    let mut v: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + floor).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v.sort_by(|a, b| b.total_cmp(a));
    v
}
