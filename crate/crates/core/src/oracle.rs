//! Ground truth from explicit qubit realizations: evaluation of statistics,
//! randomized search for realizations inside the example families, and an
//! exhaustive search for a realization of small record sets.

use nalgebra::{Matrix2, Matrix4, Vector3, Vector4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::criteria::{PmRecordSet, PmRow};
use crate::error::{Error, Result};
use crate::qubit::{kron2, pauli, random_state, seeded_stream, BlochState, Hermitian4, QubitObservable};
use crate::scenarios::{qbell, qpm, BellCorrelation, BellTable, Family};

/// Prepared states and measurements of a prepare-and-measure device pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub states: Vec<BlochState>,
    pub observables: Vec<QubitObservable>,
}

pub fn realize_pm(real: &Realization) -> PmRecordSet {
    let rows: Vec<Vec<f64>> = real
        .states
        .iter()
        .map(|s| real.observables.iter().map(|o| crate::qubit::expectation(o, s).clamp(-1.0, 1.0)).collect())
        .collect();
    let measurements = (0..real.observables.len()).map(|i| format!("A{i}")).collect();
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(k, e)| PmRow { label: format!("rho{k}"), weight: None, expectations: e })
        .collect();
    PmRecordSet::new(measurements, rows).expect("expectations lie in [-1, 1]")
}

/// Verifies `rho` is Hermitian, unit trace and positive semidefinite within `tol`.
pub fn check_density_matrix(rho: &Hermitian4, tol: f64) -> Result<()> {
    let asym = (rho - rho.adjoint()).norm();
    if asym > tol {
        return Err(Error::InvalidState(format!("not Hermitian (deviation {asym})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::InvalidState(format!("trace {tr}")));
    }
    let herm = (rho + rho.adjoint()) * Complex64::from(0.5);
    let min = herm.symmetric_eigenvalues().min();
    if min < -tol {
        return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
    }
    Ok(())
}

/// `p(ab|alpha beta) = Re Tr(rho E_a^alpha (x) F_b^beta)`.
pub fn realize_bell(rho: &Hermitian4, alice: &[QubitObservable; 2], bob: &[QubitObservable; 2]) -> Result<BellCorrelation> {
    check_density_matrix(rho, 1e-9)?;
    let mut p: BellTable = [[[[0.0; 2]; 2]; 2]; 2];
    for (al, ea) in alice.iter().enumerate() {
        for (be, fb) in bob.iter().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    let v = (rho * kron2(&ea.effect(a), &fb.effect(b))).trace().re;
                    p[al][be][a][b] = v.clamp(0.0, 1.0);
                }
            }
        }
    }
    BellCorrelation::new(p)
}

/// `|psi><psi|` for a two-qubit vector (normalized internally).
pub fn pure_state(psi: &Vector4<Complex64>) -> Hermitian4 {
    let n = psi.norm();
    let v = psi / Complex64::from(n);
    v * v.adjoint()
}

/// `(|00> + |11>) / sqrt(2)`.
pub fn phi_plus() -> Hermitian4 {
    let h = Complex64::from(std::f64::consts::FRAC_1_SQRT_2);
    let z = Complex64::from(0.0);
    pure_state(&Vector4::new(h, z, z, h))
}

pub fn product_state(a: &BlochState, b: &BlochState) -> Hermitian4 {
    kron2(&a.density_matrix(), &b.density_matrix())
}

pub fn maximally_mixed() -> Hermitian4 {
    Matrix4::identity() * Complex64::from(0.25)
}

fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state, or a Hilbert-Schmidt random mixed state.
pub fn random_two_qubit_state<R: Rng + ?Sized>(rng: &mut R, pure: bool) -> Hermitian4 {
    if pure {
        let psi = Vector4::from_fn(|_, _| gaussian_c(rng));
        return pure_state(&psi);
    }
    let g = Matrix4::from_fn(|_, _| gaussian_c(rng));
    let m = g * g.adjoint();
    let tr = m.trace();
    m / tr
}

/// Pauli coordinates `T[i][j] = Re Tr(rho sigma_i (x) sigma_j)` with `sigma_0 = 1`.
pub fn pauli_coordinates(rho: &Hermitian4) -> [[f64; 4]; 4] {
    let [sx, sy, sz] = pauli();
    let ops = [Matrix2::identity(), sx, sy, sz];
    let mut t = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            t[i][j] = (rho * kron2(&ops[i], &ops[j])).trace().re;
        }
    }
    t
}

/// Same table as [`realize_bell`], computed from Pauli coordinates.
pub fn bell_from_coordinates(t: &[[f64; 4]; 4], alice: &[QubitObservable; 2], bob: &[QubitObservable; 2]) -> BellTable {
    let ta = Vector3::new(t[1][0], t[2][0], t[3][0]);
    let tb = Vector3::new(t[0][1], t[0][2], t[0][3]);
    let mut p: BellTable = [[[[0.0; 2]; 2]; 2]; 2];
    for (al, a) in alice.iter().enumerate() {
        for (be, b) in bob.iter().enumerate() {
            let (ax, bx) = (a.axis(), b.axis());
            let mut corr_axes = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    corr_axes += ax[i] * t[i + 1][j + 1] * bx[j];
                }
            }
            let ea = a.r() + a.r_prime() * ax.dot(&ta);
            let eb = b.r() + b.r_prime() * bx.dot(&tb);
            let eab = a.r() * b.r()
                + a.r() * b.r_prime() * bx.dot(&tb)
                + a.r_prime() * b.r() * ax.dot(&ta)
                + a.r_prime() * b.r_prime() * corr_axes;
            for x in 0..2 {
                for y in 0..2 {
                    let (sa, sb) = (1.0 - 2.0 * x as f64, 1.0 - 2.0 * y as f64);
                    p[al][be][x][y] = 0.25 * (1.0 + sa * ea + sb * eb + sa * sb * eab);
                }
            }
        }
    }
    p
}

/// Settings of the randomized family search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub projective: bool,
    /// Hill-climbing steps per sample, split between the biased and the pure-residual phase.
    pub climb_steps: usize,
    /// Largest accepted distance (max-norm) between the realized statistics and the fitted family member.
    pub tol: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self { projective: true, climb_steps: 3000, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub x: f64,
    pub y: f64,
    pub residual: f64,
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn observable_from(params: &[f64], projective: bool) -> QubitObservable {
    let (th, ph) = (params[0], params[1]);
    let axis = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
    if projective {
        return QubitObservable::projective(axis).expect("unit axis");
    }
    let r = params[2].tanh();
    let r_prime = sigmoid(params[3]) * (1.0 - r.abs());
    QubitObservable::new(r, r_prime, axis).expect("r' + |r| <= 1")
}

fn bloch_from(params: &[f64]) -> BlochState {
    let v = Vector3::new(params[0], params[1], params[2]);
    let n = v.norm();
    let s = if n > 1e-15 { v * (n.tanh() / n) } else { v };
    BlochState::new(s).expect("|s| < 1")
}

const OBS_PARAMS: usize = 4;

fn param_count(family: Family) -> usize {
    match family {
        Family::QBell => 8 + 1 + 4 * OBS_PARAMS,
        Family::QPM => 4 * 3 + 2 * OBS_PARAMS,
    }
}

/// Two-qubit state: pure vector mixed with white noise of weight `sigmoid(params[8]) ^ 2`.
fn bell_state_from(params: &[f64]) -> Hermitian4 {
    let psi = Vector4::from_fn(|k, _| Complex64::new(params[2 * k], params[2 * k + 1]));
    let noise = sigmoid(params[8]).powi(2);
    pure_state(&psi) * Complex64::from(1.0 - noise) + maximally_mixed() * Complex64::from(noise)
}

/// Realized statistics as a flat vector, followed by the fitted family member.
fn family_fit(family: Family, params: &[f64], projective: bool) -> (f64, f64, f64) {
    match family {
        Family::QBell => {
            let rho = bell_state_from(params);
            let obs: Vec<QubitObservable> =
                (0..4).map(|k| observable_from(&params[9 + k * OBS_PARAMS..], projective)).collect();
            let t = pauli_coordinates(&rho);
            let p = bell_from_coordinates(&t, &[obs[0], obs[1]], &[obs[2], obs[3]]);
            fit_qbell(&p)
        }
        Family::QPM => {
            let states: Vec<BlochState> = (0..4).map(|k| bloch_from(&params[3 * k..])).collect();
            let obs = (0..2).map(|k| observable_from(&params[12 + k * OBS_PARAMS..], projective)).collect();
            let rec = realize_pm(&Realization { states, observables: obs });
            fit_qpm(&rec)
        }
    }
}

/// Least-squares `(x, y)` of a table against the Bell family and the max-norm residual.
pub fn fit_qbell(p: &BellTable) -> (f64, f64, f64) {
    let w = 0.25;
    let pr = crate::scenarios::pr_box();
    let l = crate::scenarios::deterministic_box();
    let (mut sxx, mut sxy, mut syy, mut bx, mut by) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut cols = Vec::with_capacity(16);
    for k in 0..16 {
        let (al, be, a, b) = (k >> 3 & 1, k >> 2 & 1, k >> 1 & 1, k & 1);
        let u = pr[al][be][a][b] - w;
        let v = l[al][be][a][b] - w;
        let d = p[al][be][a][b] - w;
        sxx += u * u;
        sxy += u * v;
        syy += v * v;
        bx += u * d;
        by += v * d;
        cols.push((u, v, d));
    }
    let det = sxx * syy - sxy * sxy;
    let x = (syy * bx - sxy * by) / det;
    let y = (sxx * by - sxy * bx) / det;
    let res = cols.iter().map(|(u, v, d)| (d - x * u - y * v).abs()).fold(0.0, f64::max);
    (x, y, res)
}

fn qpm_values(x: f64, y: f64) -> Option<[f64; 8]> {
    let rec = qpm(x, y).ok()?;
    let mut out = [0.0; 8];
    for k in 0..4 {
        out[2 * k] = rec.value(k, 0);
        out[2 * k + 1] = rec.value(k, 1);
    }
    Some(out)
}

/// Gauss-Newton fit of four-state records against the prepare-and-measure family.
pub fn fit_qpm(rec: &PmRecordSet) -> (f64, f64, f64) {
    let mut target = [0.0; 8];
    for k in 0..4 {
        target[2 * k] = rec.value(k, 0);
        target[2 * k + 1] = rec.value(k, 1);
    }
    // Rows 0 and 2 share `P` in column 0 and give `R` in column 1.
    let (p, r) = (0.5 * (target[0] + target[1]), target[5]);
    let mut y = ((p + r - 1.0) / (3.0 - p - r)).clamp(-0.9, 0.9);
    let mut x = (p - r) * (1.0 + y);
    let resid = |x: f64, y: f64| qpm_values(x, y).map(|v| std::array::from_fn::<f64, 8, _>(|k| v[k] - target[k]));
    for _ in 0..50 {
        let Some(f) = resid(x, y) else { break };
        let h = 1e-7;
        let (Some(fx), Some(fy)) = (resid(x + h, y), resid(x, y + h)) else { break };
        let (mut a11, mut a12, mut a22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for k in 0..8 {
            let jx = (fx[k] - f[k]) / h;
            let jy = (fy[k] - f[k]) / h;
            a11 += jx * jx;
            a12 += jx * jy;
            a22 += jy * jy;
            g1 += jx * f[k];
            g2 += jy * f[k];
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-300 {
            break;
        }
        let dx = (a22 * g1 - a12 * g2) / det;
        let dy = (a11 * g2 - a12 * g1) / det;
        let (nx, ny) = (x - dx, (y - dy).clamp(-0.999, 0.999));
        if resid(nx, ny).is_none() {
            break;
        }
        x = nx;
        y = ny;
        if dx.abs() + dy.abs() < 1e-15 {
            break;
        }
    }
    let res = resid(x, y).map_or(f64::INFINITY, |f| f.iter().fold(0.0, |m, v| m.max(v.abs())));
    (x, y, res)
}

fn climb<R: Rng>(rng: &mut R, params: &mut [f64], steps: usize, mut cost: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut best = cost(params);
    let mut sigma = 0.3;
    let mut trial = params.to_vec();
    for _ in 0..steps {
        for (t, p) in trial.iter_mut().zip(params.iter()) {
            *t = p + sigma * rng.sample::<f64, _>(StandardNormal);
        }
        let c = cost(&trial);
        if c < best {
            best = c;
            params.copy_from_slice(&trial);
            sigma = (sigma * 1.3).min(1.0);
        } else {
            sigma = (sigma * 0.97).max(1e-9);
        }
    }
    best
}

/// Randomized search for realizations inside the family: each sample climbs
/// toward a random direction of the `(x, y)` plane, then onto the family.
/// Sample `k` uses its own stream of `seed`, so results do not depend on the
/// number of worker threads.
pub fn sample_achievable(family: Family, n: usize, seed: u64, cfg: &SampleConfig) -> Vec<SamplePoint> {
    let dim = param_count(family);
    let out: Vec<Option<SamplePoint>> = (0..n as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_stream(seed, k);
            let mut params: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let phi = rng.gen::<f64>() * PI / 2.0;
            let (dx, dy) = (phi.cos(), phi.sin());
            let half = cfg.climb_steps / 2;
            climb(&mut rng, &mut params, half, |p| {
                let (x, y, res) = family_fit(family, p, cfg.projective);
                if !res.is_finite() {
                    return f64::INFINITY;
                }
                res - 0.05 * (dx * x + dy * y)
            });
            let res = climb(&mut rng, &mut params, cfg.climb_steps - half, |p| family_fit(family, p, cfg.projective).2);
            let (x, y, _) = family_fit(family, &params, cfg.projective);
            (res < cfg.tol && family.is_valid(x, y)).then_some(SamplePoint { x, y, residual: res })
        })
        .collect();
    out.into_iter().flatten().collect()
}

/// Settings of [`brute_force_feasible`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceConfig {
    /// Grid points per parameter on the coarse grid.
    pub resolution: usize,
    /// Residual (max-norm) below which a realization counts as exact.
    pub tol: f64,
    /// Coarse optima refined by pattern search.
    pub candidates: usize,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self { resolution: 11, tol: 1e-6, candidates: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub feasible: bool,
    pub residual: f64,
    pub realization: Realization,
}

/// Measurement parameters `(r_0, f_0, r_1, f_1, phi)` with `r' = f (1 - |r|)`,
/// axes `a_0 = z` and `a_1 = (sin phi, 0, cos phi)`.
type BruteParams = [f64; 5];

const PARAM_LO: BruteParams = [-1.0, 0.0, -1.0, 0.0, 0.0];
const PARAM_HI: BruteParams = [1.0, 1.0, 1.0, 1.0, PI];

/// Smallest max-norm error of one state and the Bloch vector attaining it.
/// The pairs `(a_0 . s, a_1 . s)` with `|s| <= 1` fill the ellipse
/// `u^2 + v^2 - 2 c u v <= 1 - c^2`, whose boundary is `(cos psi, cos(psi - phi))`.
fn state_error(a0v: f64, a1v: f64, p: &BruteParams) -> (f64, Vector3<f64>) {
    let (s0, s1) = (p[1] * (1.0 - p[0].abs()), p[3] * (1.0 - p[2].abs()));
    let (d0, d1) = (a0v - p[0], a1v - p[2]);
    let phi = p[4];
    let (sp, cp) = phi.sin_cos();
    let on_circle = |psi: f64| Vector3::new(psi.sin(), 0.0, psi.cos());
    const TINY: f64 = 1e-15;
    match (s0 > TINY, s1 > TINY) {
        (false, false) => (d0.abs().max(d1.abs()), Vector3::zeros()),
        (false, true) => {
            let v = (d1 / s1).clamp(-1.0, 1.0);
            (d0.abs().max((s1 * v - d1).abs()), on_circle(phi + v.acos()))
        }
        (true, false) => {
            let u = (d0 / s0).clamp(-1.0, 1.0);
            (d1.abs().max((s0 * u - d0).abs()), on_circle(u.acos()))
        }
        (true, true) => {
            let (u, v) = (d0 / s0, d1 / s1);
            if u.abs() <= 1.0 && v.abs() <= 1.0 && u * u + v * v - 2.0 * cp * u * v <= sp * sp + 1e-14 {
                let x = if sp > 1e-12 { (v - u * cp) / sp } else { 0.0 };
                let s = Vector3::new(x, 0.0, u);
                let n = s.norm();
                return (0.0, if n > 1.0 { s / n } else { s });
            }
            let err = |psi: f64| (s0 * psi.cos() - d0).abs().max((s1 * (psi - phi).cos() - d1).abs());
            let n = 96;
            let mut step = 2.0 * PI / n as f64;
            let (mut best_psi, mut best) = (0.0, f64::INFINITY);
            for k in 0..n {
                let psi = k as f64 * step;
                let e = err(psi);
                if e < best {
                    best = e;
                    best_psi = psi;
                }
            }
            for _ in 0..6 {
                let center = best_psi;
                for k in 0..=8 {
                    let psi = center - step + step * k as f64 / 4.0;
                    let e = err(psi);
                    if e < best {
                        best = e;
                        best_psi = psi;
                    }
                }
                step /= 4.0;
            }
            (best, on_circle(best_psi))
        }
    }
}

fn total_error(pairs: &[(f64, f64)], p: &BruteParams) -> f64 {
    pairs.iter().map(|&(a, b)| state_error(a, b, p).0).fold(0.0, f64::max)
}

fn pattern_search(pairs: &[(f64, f64)], mut p: BruteParams, start_step: f64, tol: f64) -> (BruteParams, f64) {
    let mut best = total_error(pairs, &p);
    let mut step = [start_step, start_step, start_step, start_step, start_step * PI / 2.0];
    for _ in 0..4000 {
        if best < tol * 1e-3 || step.iter().all(|s| *s < 1e-10) {
            break;
        }
        let mut improved = false;
        for k in 0..5 {
            for sign in [1.0, -1.0] {
                let mut q = p;
                q[k] = (q[k] + sign * step[k]).clamp(PARAM_LO[k], PARAM_HI[k]);
                let e = total_error(pairs, &q);
                if e < best {
                    best = e;
                    p = q;
                    improved = true;
                }
            }
        }
        if !improved {
            for s in &mut step {
                *s *= 0.5;
            }
        }
    }
    (p, best)
}

/// Exhaustive realization search for two measurements: a coarse grid over the
/// measurement parameters with the states solved exactly, followed by pattern
/// search from the best cells.
pub fn brute_force_feasible(records: &PmRecordSet, cfg: &BruteForceConfig) -> Result<BruteForceResult> {
    if records.n_measurements() != 2 {
        return Err(Error::Arity(format!("need 2 measurements, got {}", records.n_measurements())));
    }
    let pairs = records.pair_values(0, 1)?;
    let n = cfg.resolution.max(2);
    let at = |k: usize, idx: usize| PARAM_LO[k] + (PARAM_HI[k] - PARAM_LO[k]) * idx as f64 / (n - 1) as f64;
    let total = n.pow(5);
    let mut scored: Vec<(f64, usize)> = (0..total)
        .into_par_iter()
        .map(|code| {
            let mut c = code;
            let p: BruteParams = std::array::from_fn(|k| {
                let idx = c % n;
                c /= n;
                at(k, idx)
            });
            (total_error(&pairs, &p), code)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let decode = |mut c: usize| -> BruteParams {
        std::array::from_fn(|k| {
            let idx = c % n;
            c /= n;
            at(k, idx)
        })
    };
    let step = 2.0 / (n - 1) as f64;
    let refined: Vec<(BruteParams, f64)> = scored
        .iter()
        .take(cfg.candidates.max(1))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&(e, code)| {
            let p = decode(code);
            if e < cfg.tol * 1e-3 {
                (p, e)
            } else {
                pattern_search(&pairs, p, step / 2.0, cfg.tol)
            }
        })
        .collect();
    let (p, _) = refined.iter().copied().fold((decode(scored[0].1), f64::INFINITY), |acc, cand| {
        if cand.1 < acc.1 {
            cand
        } else {
            acc
        }
    });
    let realization = brute_realization(&pairs, &p);
    let residual = record_residual(records, &realization);
    Ok(BruteForceResult { feasible: residual < cfg.tol, residual, realization })
}

fn brute_realization(pairs: &[(f64, f64)], p: &BruteParams) -> Realization {
    let r0p = p[1] * (1.0 - p[0].abs());
    let r1p = p[3] * (1.0 - p[2].abs());
    let a1 = Vector3::new(p[4].sin(), 0.0, p[4].cos());
    let observables = vec![
        QubitObservable::new(p[0], r0p, Vector3::z()).expect("grid parameters are valid"),
        QubitObservable::new(p[2], r1p, a1).expect("grid parameters are valid"),
    ];
    let states = pairs
        .iter()
        .map(|&(a, b)| BlochState::new(state_error(a, b, p).1).expect("unit-bounded"))
        .collect();
    Realization { states, observables }
}

/// Max-norm distance between the records and the statistics of a realization.
pub fn record_residual(records: &PmRecordSet, real: &Realization) -> f64 {
    let got = realize_pm(real);
    let mut worst: f64 = 0.0;
    for k in 0..records.n_states() {
        for m in 0..records.n_measurements() {
            worst = worst.max((got.value(k, m) - records.value(k, m)).abs());
        }
    }
    worst
}

/// A record set of the oracle battery.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryCase {
    pub name: String,
    pub records: PmRecordSet,
    /// True when built from an explicit realization, false when built to violate one.
    pub constructed_feasible: bool,
}

/// 25 record sets from random realizations with mixed states (`|s|` in
/// `[0.3, 0.8]`) and 25 built to be unrealizable:
/// sharp extremal rows forcing two different measurement angles, and
/// Bell-family conditionals beyond the Tsirelson point.
pub fn fixture_battery(seed: u64) -> Vec<BatteryCase> {
    let mut rng = seeded_stream(seed, 0);
    let mut cases = Vec::with_capacity(50);
    for k in 0..25 {
        let projective = k % 3 == 0;
        let observables = vec![crate::qubit::random_povm(&mut rng, projective), crate::qubit::random_povm(&mut rng, projective)];
        let n_states = 2 + k % 3;
        let states = (0..n_states)
            .map(|_| {
                let dir = random_state(&mut rng, true);
                let radius = 0.3 + 0.5 * rng.gen::<f64>();
                BlochState::new(dir.vector() * radius).expect("|s| < 1")
            })
            .collect();
        let records = realize_pm(&Realization { states, observables });
        cases.push(BatteryCase { name: format!("realized-{k}"), records, constructed_feasible: true });
    }
    for k in 0..15 {
        // Rows (+-1, +-c1) and (+-c2, +-1) force sharp measurements with angle c1 and c2 at once.
        let c1 = -0.9 + 1.8 * rng.gen::<f64>();
        let mut c2 = -0.9 + 1.8 * rng.gen::<f64>();
        if (c1 - c2).abs() < 0.4 {
            c2 = if c1 > 0.0 { c1 - 0.4 - 0.5 * rng.gen::<f64>() } else { c1 + 0.4 + 0.5 * rng.gen::<f64>() };
        }
        let rows = vec![[1.0, c1], [-1.0, -c1], [c2, 1.0], [-c2, -1.0]];
        let records = PmRecordSet::from_values(&rows).expect("values in range");
        cases.push(BatteryCase { name: format!("two-angles-{k}"), records, constructed_feasible: false });
    }
    for k in 0..10 {
        let x = 0.8 + 0.2 * k as f64 / 9.0;
        let records = crate::scenarios::bell_to_conditional(&qbell(x, 0.0).expect("valid"), crate::scenarios::Party::A)
            .expect("non-signaling")
            .records;
        cases.push(BatteryCase { name: format!("beyond-tsirelson-{k}"), records, constructed_feasible: false });
    }
    cases
}
