//! Two-qubit separability by cyclic projections onto the data-consistent
//! affine set, the PSD cone and the PPT cone. For two qubits PPT is
//! equivalent to separability.

use nalgebra::{DMatrix, DVector, Matrix2, SMatrix, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::moment::{combine_runs, Outcome, Plateau, ProjectionConfig, Run};
use crate::oracle::{maximally_mixed, pauli_coordinates, random_two_qubit_state};
use crate::qubit::{kron2, partial_transpose_b, pauli, seeded_stream, Hermitian4};
use crate::scenarios::BellCorrelation;

/// Local data of a Bell experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlators {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub ab: [[f64; 2]; 2],
}

impl From<&BellCorrelation> for Correlators {
    fn from(c: &BellCorrelation) -> Self {
        let (a, b) = c.marginals();
        Self { a, b, ab: c.correlators() }
    }
}

/// Point measurement parameters of one party with explicit axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMeasurements {
    pub r: [f64; 2],
    pub r_prime: [f64; 2],
    pub axes: [Vector3<f64>; 2],
}

impl LocalMeasurements {
    /// `(r, r' a)` as a Pauli-coordinate covector.
    fn covector(&self, k: usize) -> [f64; 4] {
        let a = self.axes[k] * self.r_prime[k];
        [self.r[k], a.x, a.y, a.z]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeparabilityVerdict {
    SeparableFeasible,
    Entangled,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityResult {
    pub verdict: SeparabilityVerdict,
    /// `max(0, -lambda_min(rho), -lambda_min(rho^T_B))` at the best data-consistent point.
    pub residual: f64,
    /// Row-major `[re, im]` entries of the best data-consistent state.
    pub certificate: Option<Vec<[f64; 2]>>,
    pub iterations: usize,
    pub note: Option<String>,
}

type Coords = DVector<f64>;

fn basis() -> [Hermitian4; 16] {
    let [sx, sy, sz] = pauli();
    let ops = [Matrix2::identity(), sx, sy, sz];
    std::array::from_fn(|k| kron2(&ops[k / 4], &ops[k % 4]))
}

fn to_coords(rho: &Hermitian4) -> Coords {
    let t = pauli_coordinates(rho);
    Coords::from_fn(16, |k, _| t[k / 4][k % 4])
}

fn to_state(t: &Coords, basis: &[Hermitian4; 16]) -> Hermitian4 {
    basis.iter().zip(t.iter()).fold(Hermitian4::zeros(), |acc, (b, &v)| acc + b * Complex64::from(0.25 * v))
}

fn psd_part(m: &Hermitian4) -> Hermitian4 {
    let h = (m + m.adjoint()) * Complex64::from(0.5);
    let eig = h.symmetric_eigen();
    let d = eig.eigenvalues.map(|v| Complex64::from(v.max(0.0)));
    &eig.eigenvectors * SMatrix::<Complex64, 4, 4>::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

fn min_eig(m: &Hermitian4) -> f64 {
    ((m + m.adjoint()) * Complex64::from(0.5)).symmetric_eigenvalues().min()
}

/// `max(0, -lambda_min(rho), -lambda_min(rho^T_B))`.
pub fn ppt_residual(rho: &Hermitian4) -> f64 {
    0.0f64.max(-min_eig(rho)).max(-min_eig(&partial_transpose_b(rho)))
}

struct Affine {
    m: DMatrix<f64>,
    pinv: DMatrix<f64>,
    d: DVector<f64>,
}

impl Affine {
    /// Constraints `tau_00 = 1`, `<A_a> `, `<B_b>` and `<A_a B_b>`; `None` when inconsistent.
    fn new(data: &Correlators, alice: &LocalMeasurements, bob: &LocalMeasurements) -> Option<Self> {
        let e0 = [1.0, 0.0, 0.0, 0.0];
        let mut rows: Vec<([f64; 4], [f64; 4], f64)> = vec![(e0, e0, 1.0)];
        for k in 0..2 {
            rows.push((alice.covector(k), e0, data.a[k]));
            rows.push((e0, bob.covector(k), data.b[k]));
        }
        for k in 0..2 {
            for l in 0..2 {
                rows.push((alice.covector(k), bob.covector(l), data.ab[k][l]));
            }
        }
        let m = DMatrix::from_fn(rows.len(), 16, |r, c| rows[r].0[c / 4] * rows[r].1[c % 4]);
        let d = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.2));
        let pinv = m.clone().pseudo_inverse(1e-10).ok()?;
        let gap = (&m * &pinv * &d - &d).amax();
        (gap < 1e-8).then_some(Self { m, pinv, d })
    }

    fn project(&self, t: &Coords) -> Coords {
        t - &self.pinv * (&self.m * t - &self.d)
    }
}

fn certificate(rho: &Hermitian4) -> Vec<[f64; 2]> {
    (0..16).map(|k| rho[(k / 4, k % 4)]).map(|z| [z.re, z.im]).collect()
}

/// Searches for a PPT state reproducing the data with the given measurements.
pub fn separable_feasibility(
    data: &Correlators,
    alice: &LocalMeasurements,
    bob: &LocalMeasurements,
    cfg: &ProjectionConfig,
) -> SeparabilityResult {
    let Some(affine) = Affine::new(data, alice, bob) else {
        return SeparabilityResult {
            verdict: SeparabilityVerdict::Inconclusive,
            residual: f64::INFINITY,
            certificate: None,
            iterations: 0,
            note: Some("measurements cannot reproduce the data with any operator".into()),
        };
    };
    let basis = basis();
    let runs: Vec<(Run, f64, Hermitian4, usize)> = (0..cfg.restarts.max(1) as u64)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                maximally_mixed()
            } else {
                random_two_qubit_state(&mut seeded_stream(cfg.seed, k), false)
            };
            let mut t = to_coords(&start);
            let mut plateau = Plateau::new(cfg);
            let mut best = (f64::INFINITY, start);
            for it in 1..=cfg.max_iter {
                t = affine.project(&t);
                let rho = to_state(&t, &basis);
                let r = ppt_residual(&rho);
                if r < best.0 {
                    best = (r, rho);
                }
                if r < cfg.tol {
                    return (Run::Converged, r, rho, it);
                }
                if plateau.stalled(r) {
                    return (Run::Stalled, best.0, best.1, it);
                }
                let rho = psd_part(&rho);
                let t2 = affine.project(&to_coords(&rho));
                let pt = partial_transpose_b(&psd_part(&partial_transpose_b(&to_state(&t2, &basis))));
                t = to_coords(&pt);
            }
            (Run::Exhausted, best.0, best.1, cfg.max_iter)
        })
        .collect();
    let verdict = match combine_runs(&runs.iter().map(|r| r.0).collect::<Vec<_>>()) {
        Outcome::Feasible => SeparabilityVerdict::SeparableFeasible,
        Outcome::Infeasible => SeparabilityVerdict::Entangled,
        Outcome::Inconclusive => SeparabilityVerdict::Inconclusive,
    };
    let pick = runs.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("at least one restart");
    SeparabilityResult {
        verdict,
        residual: pick.1,
        certificate: Some(certificate(&pick.2)),
        iterations: pick.3,
        note: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::gauge_axes;
    use crate::oracle::{phi_plus, product_state, realize_bell};
    use crate::qubit::{random_povm, random_state, QubitObservable};
    use std::f64::consts::PI;

    fn projective(c: f64) -> LocalMeasurements {
        let (a0, a1) = gauge_axes(c);
        LocalMeasurements { r: [0.0; 2], r_prime: [1.0; 2], axes: [a0, a1] }
    }

    fn local(o: &[QubitObservable; 2]) -> LocalMeasurements {
        LocalMeasurements { r: [o[0].r(), o[1].r()], r_prime: [o[0].r_prime(), o[1].r_prime()], axes: [*o[0].axis(), *o[1].axis()] }
    }

    #[test]
    fn phi_plus_partial_transpose() {
        let rho = phi_plus();
        assert!((min_eig(&partial_transpose_b(&rho)) + 0.5).abs() < 1e-12);
        assert!((ppt_residual(&rho) - 0.5).abs() < 1e-12);
        assert!(ppt_residual(&maximally_mixed()) == 0.0);
    }

    #[test]
    fn coordinates_round_trip() {
        let rho = random_two_qubit_state(&mut seeded_stream(3, 0), false);
        assert!((to_state(&to_coords(&rho), &basis()) - rho).norm() < 1e-12);
    }

    #[test]
    fn pi12_is_entangled() {
        let k = (PI / 12.0).cos();
        let data = Correlators { a: [0.0; 2], b: [0.0; 2], ab: [[1.0, k], [k, 1.0]] };
        let m = projective(k);
        let res = separable_feasibility(&data, &m, &m, &ProjectionConfig::default());
        assert_eq!(res.verdict, SeparabilityVerdict::Entangled);
        assert!(res.residual > 1e-3);
    }

    #[test]
    fn white_noise_is_separable() {
        let data = Correlators { a: [0.0; 2], b: [0.0; 2], ab: [[0.0; 2]; 2] };
        let res = separable_feasibility(&data, &projective(0.3), &projective(-0.2), &ProjectionConfig::default());
        assert_eq!(res.verdict, SeparabilityVerdict::SeparableFeasible);
        assert_eq!(res.iterations, 1);
    }

    #[test]
    fn product_realizations_are_separable() {
        let mut rng = seeded_stream(8, 0);
        for _ in 0..10 {
            let rho = product_state(&random_state(&mut rng, false), &random_state(&mut rng, false));
            let a = [random_povm(&mut rng, false), random_povm(&mut rng, false)];
            let b = [random_povm(&mut rng, false), random_povm(&mut rng, false)];
            let data = Correlators::from(&realize_bell(&rho, &a, &b).unwrap());
            let res = separable_feasibility(&data, &local(&a), &local(&b), &ProjectionConfig::default());
            assert_eq!(res.verdict, SeparabilityVerdict::SeparableFeasible, "{res:?}");
            assert!(res.residual < 1e-7);
        }
    }

    #[test]
    fn inconsistent_constraints_are_inconclusive() {
        let data = Correlators { a: [0.5, 0.0], b: [0.0; 2], ab: [[0.0; 2]; 2] };
        let m = LocalMeasurements { r: [0.0; 2], r_prime: [1.0; 2], axes: [Vector3::z(), Vector3::z()] };
        let res = separable_feasibility(&data, &m, &projective(0.0), &ProjectionConfig::default());
        assert_eq!(res.verdict, SeparabilityVerdict::Inconclusive);
        assert!(res.note.is_some());
    }
}
