//! Qubit states and binary measurements in Bloch form.
//!
//! A state is `rho = (1 + s.sigma) / 2` with `|s| <= 1`; a binary measurement
//! is encoded by its observable `A = r' a.sigma + r 1`, whose outcome effects
//! are `(1 +- A) / 2`.

use nalgebra::{Matrix2, Matrix4, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::EPS;

pub type Hermitian2 = Matrix2<Complex64>;
pub type Hermitian4 = Matrix4<Complex64>;

/// Radicands down to this value are treated as round-off and clamped to zero.
pub const SQRT_SLACK: f64 = 1e-9;

/// Square root of a quantity that is analytically non-negative.
pub fn clamped_sqrt(x: f64) -> Result<f64> {
    if x >= 0.0 {
        Ok(x.sqrt())
    } else if x >= -SQRT_SLACK {
        Ok(0.0)
    } else {
        Err(Error::NegativeRadicand(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochState {
    s: Vector3<f64>,
}

impl BlochState {
    pub fn new(s: Vector3<f64>) -> Result<Self> {
        let n = s.norm();
        if !n.is_finite() || n > 1.0 + EPS {
            return Err(Error::InvalidBlochVector(n));
        }
        Ok(Self { s })
    }

    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new(Vector3::new(x, y, z))
    }

    /// The maximally mixed state.
    pub fn mixed() -> Self {
        Self { s: Vector3::zeros() }
    }

    pub fn vector(&self) -> &Vector3<f64> {
        &self.s
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.s.norm() - 1.0).abs() <= tol
    }

    pub fn density_matrix(&self) -> Hermitian2 {
        let [sx, sy, sz] = [self.s.x, self.s.y, self.s.z];
        Matrix2::new(
            Complex64::new(0.5 * (1.0 + sz), 0.0),
            Complex64::new(0.5 * sx, -0.5 * sy),
            Complex64::new(0.5 * sx, 0.5 * sy),
            Complex64::new(0.5 * (1.0 - sz), 0.0),
        )
    }
}

/// Binary qubit POVM given by its observable `A = r' a.sigma + r 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitObservable {
    r: f64,
    r_prime: f64,
    axis: Vector3<f64>,
}

impl QubitObservable {
    pub fn new(r: f64, r_prime: f64, axis: Vector3<f64>) -> Result<Self> {
        let n = axis.norm();
        if !((n - 1.0).abs() <= EPS) {
            return Err(Error::InvalidObservable(format!("axis norm {n} is not 1")));
        }
        if !(r_prime >= -EPS) || !(r.abs() <= 1.0 + EPS) || r_prime.max(0.0) + r.abs() > 1.0 + EPS {
            return Err(Error::InvalidObservable(format!(
                "r = {r}, r' = {r_prime} violate r' >= 0, r' + |r| <= 1"
            )));
        }
        Ok(Self { r, r_prime: r_prime.max(0.0), axis })
    }

    /// Sharp measurement `a.sigma`.
    pub fn projective(axis: Vector3<f64>) -> Result<Self> {
        Self::new(0.0, 1.0, axis)
    }

    /// Projective measurement along `cos(theta) z + sin(theta) x`.
    pub fn in_xz_plane(theta: f64) -> Self {
        Self { r: 0.0, r_prime: 1.0, axis: Vector3::new(theta.sin(), 0.0, theta.cos()) }
    }

    /// The trivial observable `A = 1`.
    pub fn identity() -> Self {
        Self { r: 1.0, r_prime: 0.0, axis: Vector3::z() }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn r_prime(&self) -> f64 {
        self.r_prime
    }

    pub fn axis(&self) -> &Vector3<f64> {
        &self.axis
    }

    pub fn is_projective(&self, tol: f64) -> bool {
        (self.r_prime - 1.0).abs() <= tol && self.r.abs() <= tol
    }

    /// Measurement angle `a_i . a_j`.
    pub fn angle_with(&self, other: &QubitObservable) -> f64 {
        self.axis.dot(&other.axis)
    }

    /// Maps an expectation value onto the sharp observable `(A - r) / r'`.
    /// Returns `None` when `r'` is below `tol`, where the observable is a constant.
    pub fn normalize_value(&self, value: f64, tol: f64) -> Option<f64> {
        (self.r_prime >= tol).then(|| (value - self.r) / self.r_prime)
    }

    /// Same observable with outcomes swapped, `A -> -A`.
    pub fn relabeled(&self) -> Self {
        Self { r: -self.r, r_prime: self.r_prime, axis: -self.axis }
    }

    pub fn to_hermitian(&self) -> Hermitian2 {
        let [sx, sy, sz] = pauli();
        let a = &self.axis;
        (sx * Complex64::from(a.x) + sy * Complex64::from(a.y) + sz * Complex64::from(a.z))
            * Complex64::from(self.r_prime)
            + Hermitian2::identity() * Complex64::from(self.r)
    }

    /// Effect operator of outcome `a` (0 or 1): `(1 + (-1)^a A) / 2`.
    pub fn effect(&self, outcome: usize) -> Hermitian2 {
        let sign = if outcome == 0 { 0.5 } else { -0.5 };
        (Hermitian2::identity() * Complex64::from(0.5)) + self.to_hermitian() * Complex64::from(sign)
    }
}

/// Pauli matrices `[sigma_x, sigma_y, sigma_z]`.
pub fn pauli() -> [Hermitian2; 3] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [Matrix2::new(o, l, l, o), Matrix2::new(o, -i, i, o), Matrix2::new(l, o, o, -l)]
}

/// `r + r' (a . s)`.
pub fn expectation(obs: &QubitObservable, st: &BlochState) -> f64 {
    obs.r + obs.r_prime * obs.axis.dot(&st.s)
}

/// `Re Tr(rho A)` evaluated on 2x2 matrices.
pub fn trace_expectation(obs: &QubitObservable, st: &BlochState) -> f64 {
    (st.density_matrix() * obs.to_hermitian()).trace().re
}

/// Independent, reproducible random stream `stream` derived from `seed`.
pub fn seeded_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Uniform on the Bloch sphere (`pure`) or in the Bloch ball.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, pure: bool) -> BlochState {
    let dir = random_unit_vector(rng);
    let radius = if pure { 1.0 } else { rng.gen::<f64>().cbrt() };
    BlochState { s: dir * radius }
}

/// Projective: uniform axis with `r = 0, r' = 1`. Otherwise `(|r|, r')` uniform
/// on the simplex `r' + |r| <= 1` with a uniform sign for `r`.
pub fn random_povm<R: Rng + ?Sized>(rng: &mut R, projective: bool) -> QubitObservable {
    let axis = random_unit_vector(rng);
    if projective {
        return QubitObservable { r: 0.0, r_prime: 1.0, axis };
    }
    let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    let r = if rng.gen::<bool>() { u } else { -u };
    QubitObservable { r, r_prime: v, axis }
}

/// Kronecker product of two 2x2 matrices.
pub fn kron2(a: &Hermitian2, b: &Hermitian2) -> Hermitian4 {
    Hermitian4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
}

/// Partial transpose on the second factor of a two-qubit operator.
pub fn partial_transpose_b(m: &Hermitian4) -> Hermitian4 {
    Hermitian4::from_fn(|i, j| {
        let (ia, ib) = (i / 2, i % 2);
        let (ja, jb) = (j / 2, j % 2);
        m[(2 * ia + jb, 2 * ja + ib)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn expectation_examples() {
        let sz = QubitObservable::projective(Vector3::z()).unwrap();
        let up = BlochState::from_xyz(0.0, 0.0, 1.0).unwrap();
        assert_eq!(expectation(&sz, &up), 1.0);

        let one = QubitObservable::identity();
        let st = BlochState::from_xyz(0.3, -0.2, 0.1).unwrap();
        assert_eq!(expectation(&one, &st), 1.0);

        let tilted = BlochState::from_xyz((PI / 12.0).sin(), 0.0, (PI / 12.0).cos()).unwrap();
        let v = expectation(&sz, &tilted);
        assert!((v - 0.965_925_826_289_068_3).abs() < 1e-15);
        assert!((trace_expectation(&sz, &tilted) - v).abs() < 1e-12);
    }

    #[test]
    fn hermitian_examples() {
        let c = |re: f64| Complex64::new(re, 0.0);
        let sz = QubitObservable::projective(Vector3::z()).unwrap().to_hermitian();
        assert_eq!(sz, Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0)));
        let one = QubitObservable::new(1.0, 0.0, Vector3::z()).unwrap().to_hermitian();
        assert_eq!(one, Hermitian2::identity());
        let sx = QubitObservable::projective(Vector3::x()).unwrap().to_hermitian();
        assert_eq!(sx, Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0)));
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(BlochState::from_xyz(1.0, 0.1, 0.0).is_err());
        assert!(QubitObservable::new(0.5, 0.6, Vector3::z()).is_err());
        assert!(QubitObservable::new(0.0, 1.0, Vector3::new(1.0, 1.0, 0.0)).is_err());
        assert!(QubitObservable::new(0.0, -0.1, Vector3::z()).is_err());
        assert!(clamped_sqrt(-1e-10).unwrap() == 0.0);
        assert!(clamped_sqrt(-1e-6).is_err());
    }

    #[test]
    fn random_generation() {
        let mut rng = seeded_stream(0, 0);
        let s = random_state(&mut rng, true);
        assert!((s.vector().norm() - 1.0).abs() < EPS);
        for _ in 0..1000 {
            assert!(random_state(&mut rng, false).vector().norm() <= 1.0);
            let p = random_povm(&mut rng, false);
            assert!(p.r_prime() >= 0.0 && p.r_prime() + p.r().abs() <= 1.0);
            let q = random_povm(&mut rng, true);
            assert!(q.is_projective(0.0));
            assert!((q.axis().norm() - 1.0).abs() < EPS);
        }
        let a = random_povm(&mut seeded_stream(7, 3), false);
        let b = random_povm(&mut seeded_stream(7, 3), false);
        assert_eq!(a, b);
        let c = random_state(&mut seeded_stream(7, 4), false);
        assert_eq!(c, random_state(&mut seeded_stream(7, 4), false));
        assert_ne!(c, random_state(&mut seeded_stream(7, 5), false));
    }

    #[test]
    fn uncertainty_relation_monte_carlo() {
        let mut rng = seeded_stream(11, 0);
        for _ in 0..20_000 {
            let ai = random_povm(&mut rng, false);
            let aj = random_povm(&mut rng, false);
            let st = random_state(&mut rng, false);
            let (Some(x), Some(y)) = (
                ai.normalize_value(expectation(&ai, &st), 1e-6),
                aj.normalize_value(expectation(&aj, &st), 1e-6),
            ) else {
                continue;
            };
            let c = ai.angle_with(&aj);
            assert!(x * x + y * y + c * c - 2.0 * c * x * y <= 1.0 + EPS);
        }
    }

    #[test]
    fn partial_transpose_is_involution() {
        let mut rng = seeded_stream(1, 1);
        let a = random_povm(&mut rng, false).to_hermitian();
        let b = random_povm(&mut rng, false).to_hermitian();
        let m = kron2(&a, &b);
        assert_eq!(partial_transpose_b(&partial_transpose_b(&m)), m);
        let mt = kron2(&a, &b.transpose());
        assert!((partial_transpose_b(&m) - mt).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn trace_formula_agrees(
            r in -1.0f64..1.0, frac in 0.0f64..1.0,
            th in 0.0f64..PI, ph in 0.0f64..(2.0 * PI),
            sx in -0.57f64..0.57, sy in -0.57f64..0.57, sz in -0.57f64..0.57,
        ) {
            let axis = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
            let obs = QubitObservable::new(r, frac * (1.0 - r.abs()), axis).unwrap();
            let st = BlochState::from_xyz(sx, sy, sz).unwrap();
            let e = expectation(&obs, &st);
            prop_assert!((e - trace_expectation(&obs, &st)).abs() < 1e-12);
            prop_assert!(e >= obs.r() - obs.r_prime() - 1e-12 && e <= obs.r() + obs.r_prime() + 1e-12);
        }

        #[test]
        fn expectation_is_affine_in_state(
            t in 0.0f64..1.0,
            a in prop::array::uniform3(-0.5f64..0.5),
            b in prop::array::uniform3(-0.5f64..0.5),
        ) {
            let obs = QubitObservable::new(0.2, 0.7, Vector3::new(0.6, 0.0, 0.8)).unwrap();
            let sa = BlochState::from_xyz(a[0], a[1], a[2]).unwrap();
            let sb = BlochState::from_xyz(b[0], b[1], b[2]).unwrap();
            let mix = BlochState::new(sa.vector() * t + sb.vector() * (1.0 - t)).unwrap();
            let lhs = expectation(&obs, &mix);
            let rhs = t * expectation(&obs, &sa) + (1.0 - t) * expectation(&obs, &sb);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
