//! Product-symmetrized moment matrix over `{1, A_a, B_b, A_a B_b}` and its
//! positive semidefinite completion.
//!
//! Entry `(e f, e' f')` is `< {O_e, O_e'}/2 (x) {O_f, O_f'}/2 >`. For a
//! product state the matrix is the Kronecker product of two real Gram
//! matrices, so every separable state gives a PSD matrix.

use nalgebra::SMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::qubit::seeded_stream;
use crate::scenarios::BellCorrelation;

pub type Mat9 = SMatrix<f64, 9, 9>;

/// Local operator labels; index 0 is the identity.
const LOCAL: [usize; 3] = [0, 1, 2];

/// `(Alice operator, Bob operator)` of each row: `1, A0, A1, B0, B1, A0B0, A0B1, A1B0, A1B1`.
pub const OPERATORS: [(usize, usize); 9] = [(0, 0), (1, 0), (2, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2)];

pub const LABELS: [&str; 9] = ["1", "A0", "A1", "B0", "B1", "A0B0", "A0B1", "A1B0", "A1B1"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryStatus {
    FixedPhysical,
    FixedByIdentity,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub status: EntryStatus,
    /// Admissible values; free entries carry `[-1, 1]`.
    pub bounds: Interval,
}

/// Local expectations `D[a][b] = <O_a (x) O_b>` for `a, b` in `{1, X_0, X_1}`.
pub type LocalData = [[f64; 3]; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentMatrix {
    pub entries: [[Entry; 9]; 9],
    pub data: LocalData,
}

/// Measurement parameters of one party, possibly as intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartyParams {
    pub r: [Interval; 2],
    pub r_prime: [Interval; 2],
    pub c: Interval,
}

impl PartyParams {
    pub fn point(r: [f64; 2], r_prime: [f64; 2], c: f64) -> Self {
        Self { r: r.map(Interval::point), r_prime: r_prime.map(Interval::point), c: Interval::point(c) }
    }

    pub fn projective(c: f64) -> Self {
        Self::point([0.0; 2], [1.0; 2], c)
    }
}

/// `{X_e, X_e'}/2` expanded on `{1, X_0, X_1}`; `None` when it is not fixed.
type Expansion = Option<[Interval; 3]>;

fn plain_expansion(e: usize, e2: usize) -> Expansion {
    let p = |k: usize| {
        let mut v = [Interval::point(0.0); 3];
        v[k] = Interval::point(1.0);
        Some(v)
    };
    match (e, e2) {
        (0, k) | (k, 0) => p(k),
        (a, b) if a == b => p(0),
        _ => None,
    }
}

/// Uses `X_a^2 = (r'_a^2 - r_a^2) + 2 r_a X_a` and
/// `{X_0, X_1}/2 = r_1 X_0 + r_0 X_1 + (r'_0 r'_1 c - r_0 r_1)`.
fn identity_expansion(e: usize, e2: usize, p: &PartyParams) -> Expansion {
    let zero = Interval::point(0.0);
    match (e, e2) {
        (0, _) | (_, 0) => plain_expansion(e, e2),
        (a, b) if a == b => {
            let k = a - 1;
            let mut v = [zero; 3];
            v[0] = p.r_prime[k].sq() - p.r[k].sq();
            v[a] = p.r[k].scale(2.0);
            Some(v)
        }
        _ => Some([p.r_prime[0] * p.r_prime[1] * p.c - p.r[0] * p.r[1], p.r[1], p.r[0]]),
    }
}

fn combine(a: &[Interval; 3], b: &[Interval; 3], data: &LocalData) -> Interval {
    let mut acc = Interval::point(0.0);
    for i in LOCAL {
        for j in LOCAL {
            acc = acc + (a[i] * b[j]).scale(data[i][j]);
        }
    }
    acc
}

fn local_data(corr: &BellCorrelation) -> LocalData {
    let (a, b) = corr.marginals();
    let ab = corr.correlators();
    [[1.0, b[0], b[1]], [a[0], ab[0][0], ab[0][1]], [a[1], ab[1][0], ab[1][1]]]
}

fn free_entry() -> Entry {
    Entry { status: EntryStatus::Free, bounds: Interval { lo: -1.0, hi: 1.0 } }
}

/// Fills every entry fixed by the data under `X^2 = 1`; entries involving
/// `{A_0, A_1}` or `{B_0, B_1}` are free.
pub fn build_moment_matrix(corr: &BellCorrelation) -> MomentMatrix {
    let data = local_data(corr);
    let mut entries = [[free_entry(); 9]; 9];
    for (k, &(e, f)) in OPERATORS.iter().enumerate() {
        for (l, &(e2, f2)) in OPERATORS.iter().enumerate() {
            if let (Some(a), Some(b)) = (plain_expansion(e, e2), plain_expansion(f, f2)) {
                let v = combine(&a, &b, &data);
                entries[k][l] = Entry { status: EntryStatus::FixedPhysical, bounds: v };
            }
        }
    }
    MomentMatrix { entries, data }
}

/// Re-derives all entries from the measurement identities for the given
/// parameters. Entries that were free become fixed by identity; interval
/// parameters give interval entries.
pub fn apply_measurement_identity(m: &MomentMatrix, alice: Option<&PartyParams>, bob: Option<&PartyParams>) -> Result<MomentMatrix> {
    let alice = alice.ok_or(Error::MissingParameters("A"))?;
    let bob = bob.ok_or(Error::MissingParameters("B"))?;
    let mut out = m.clone();
    for (k, &(e, f)) in OPERATORS.iter().enumerate() {
        for (l, &(e2, f2)) in OPERATORS.iter().enumerate() {
            let (Some(a), Some(b)) = (identity_expansion(e, e2, alice), identity_expansion(f, f2, bob)) else {
                continue;
            };
            let v = combine(&a, &b, &m.data);
            let status = match m.entries[k][l].status {
                EntryStatus::Free => EntryStatus::FixedByIdentity,
                s => s,
            };
            out.entries[k][l] = Entry { status, bounds: v };
        }
    }
    Ok(out)
}

impl MomentMatrix {
    pub fn midpoint(&self) -> Mat9 {
        Mat9::from_fn(|i, j| match self.entries[i][j].status {
            EntryStatus::Free => 0.0,
            _ => self.entries[i][j].bounds.mid(),
        })
    }

    pub fn free_count(&self) -> usize {
        self.entries.iter().flatten().filter(|e| e.status == EntryStatus::Free).count() / 2
    }

    fn project_box(&self, x: &Mat9) -> Mat9 {
        Mat9::from_fn(|i, j| {
            let v = 0.5 * (x[(i, j)] + x[(j, i)]);
            self.entries[i][j].bounds.clamp(v)
        })
    }

    /// Matrix with free entries taken from `full`, fixed entries from `self`.
    pub fn fill_free(&self, full: &Mat9) -> Mat9 {
        Mat9::from_fn(|i, j| match self.entries[i][j].status {
            EntryStatus::Free => full[(i, j)],
            _ => self.entries[i][j].bounds.mid(),
        })
    }
}

pub fn min_eigenvalue(x: &Mat9) -> f64 {
    x.symmetric_eigenvalues().min()
}

pub fn project_psd(x: &Mat9) -> Mat9 {
    let eig = x.symmetric_eigen();
    let d = eig.eigenvalues.map(|v| v.max(0.0));
    &eig.eigenvectors * Mat9::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Convergence settings shared by the projection solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Iterations between plateau checks.
    pub window: usize,
    /// Relative decrease over a window below which the residual has stalled.
    pub stall_ratio: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { tol: 1e-7, max_iter: 20_000, restarts: 8, seed: 0x5eed, window: 100, stall_ratio: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Feasible,
    Infeasible,
    Inconclusive,
}

/// Tracks the residual of one restart and applies the plateau rule.
pub(crate) struct Plateau {
    window: usize,
    ratio: f64,
    floor: f64,
    anchor: f64,
    count: usize,
}

impl Plateau {
    pub(crate) fn new(cfg: &ProjectionConfig) -> Self {
        Self { window: cfg.window.max(1), ratio: cfg.stall_ratio, floor: 10.0 * cfg.tol, anchor: f64::INFINITY, count: 0 }
    }

    /// True once the residual has stalled above `10 tol`.
    pub(crate) fn stalled(&mut self, residual: f64) -> bool {
        self.count += 1;
        if self.count % self.window != 0 {
            return false;
        }
        let stalled = residual > self.floor && self.anchor - residual < self.ratio * self.anchor;
        self.anchor = residual;
        stalled
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Run {
    Converged,
    Stalled,
    Exhausted,
}

/// Combines restarts: feasible if any converged, infeasible if all stalled.
pub(crate) fn combine_runs(runs: &[Run]) -> Outcome {
    if runs.iter().any(|r| matches!(r, Run::Converged)) {
        Outcome::Feasible
    } else if !runs.is_empty() && runs.iter().all(|r| matches!(r, Run::Stalled)) {
        Outcome::Infeasible
    } else {
        Outcome::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub outcome: Outcome,
    pub residual: f64,
    pub matrix: Mat9,
    pub min_eigenvalue: f64,
    pub iterations: usize,
}

impl Completion {
    pub fn feasible(&self) -> bool {
        self.outcome == Outcome::Feasible
    }
}

/// Alternating projections between the PSD cone and the entry bounds.
/// The residual is the Frobenius distance from the bounded iterate to the cone.
pub fn psd_completion(m: &MomentMatrix, cfg: &ProjectionConfig) -> Completion {
    let start = m.midpoint();
    let resid = |x: &Mat9| (x - project_psd(x)).norm();
    let r0 = resid(&start);
    if r0 < cfg.tol {
        return Completion { outcome: Outcome::Feasible, residual: r0, min_eigenvalue: min_eigenvalue(&start), matrix: start, iterations: 0 };
    }
    let runs: Vec<(Run, f64, Mat9, usize)> = (0..cfg.restarts.max(1) as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeded_stream(cfg.seed, k);
            let mut x = if k == 0 {
                start
            } else {
                let noise = Mat9::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                m.project_box(&m.fill_free(&noise))
            };
            let mut plateau = Plateau::new(cfg);
            let mut best = (f64::INFINITY, x);
            for it in 1..=cfg.max_iter {
                x = m.project_box(&project_psd(&x));
                let r = resid(&x);
                if r < best.0 {
                    best = (r, x);
                }
                if r < cfg.tol {
                    return (Run::Converged, r, x, it);
                }
                if plateau.stalled(r) {
                    return (Run::Stalled, best.0, best.1, it);
                }
            }
            (Run::Exhausted, best.0, best.1, cfg.max_iter)
        })
        .collect();
    let outcome = combine_runs(&runs.iter().map(|r| r.0).collect::<Vec<_>>());
    let pick = runs
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one restart");
    Completion {
        outcome,
        residual: pick.1,
        matrix: pick.2,
        min_eigenvalue: min_eigenvalue(&pick.2),
        iterations: pick.3,
    }
}
