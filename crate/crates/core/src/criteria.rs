//! Feasibility criteria for statistics produced by independent qubit devices.
//!
//! Every state `rho` in the prepared set constrains the measurement angle
//! `c = a_i . a_j` through the pairwise qubit uncertainty relation
//! `g_-(rho) <= c <= g_+(rho)`. Because `c` does not depend on the state, the
//! statistics are compatible with sharp measurements only if
//! `max_rho g_- <= min_rho g_+`. For unsharp measurements the same holds for
//! some state-independent offsets `(r_i, r_j)`, with `g` rescaled by
//! `1 - |r|`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::qubit::clamped_sqrt;
use crate::EPS;

/// One prepared state: its label, optional preparation weight, and one
/// expectation value per measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmRow {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    pub expectations: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawRecordSet {
    measurements: Vec<String>,
    rows: Vec<PmRow>,
}

/// Statistics `{A_i|rho}` of a prepare-and-measure experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRecordSet")]
pub struct PmRecordSet {
    measurements: Vec<String>,
    rows: Vec<PmRow>,
}

impl TryFrom<RawRecordSet> for PmRecordSet {
    type Error = Error;
    fn try_from(raw: RawRecordSet) -> Result<Self> {
        PmRecordSet::new(raw.measurements, raw.rows)
    }
}

impl PmRecordSet {
    pub fn new(measurements: Vec<String>, rows: Vec<PmRow>) -> Result<Self> {
        let m = measurements.len();
        for (k, row) in rows.iter().enumerate() {
            if row.expectations.len() != m {
                return Err(Error::InvalidRecords(format!(
                    "row {k} ({}) has {} expectations, expected {m}",
                    row.label,
                    row.expectations.len()
                )));
            }
            if let Some(&v) = row.expectations.iter().find(|v| !(v.abs() <= 1.0 + EPS)) {
                return Err(Error::InvalidRecords(format!(
                    "row {k} ({}): expectation {v} outside [-1, 1]",
                    row.label
                )));
            }
        }
        let weights: Vec<f64> = rows.iter().filter_map(|r| r.weight).collect();
        if !weights.is_empty() {
            if weights.len() != rows.len() {
                return Err(Error::InvalidRecords("weights must be given for all rows or none".into()));
            }
            if weights.iter().any(|w| !(*w >= -EPS)) {
                return Err(Error::InvalidRecords("negative weight".into()));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::InvalidRecords(format!("weights sum to {total}, expected 1")));
            }
        }
        Ok(Self { measurements, rows })
    }

    /// Record set with default labels (`A0, A1, ...` and `rho0, rho1, ...`).
    pub fn from_values<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.first().map_or(0, |r| r.as_ref().len());
        let measurements = (0..m).map(|i| format!("A{i}")).collect();
        let rows = rows
            .iter()
            .enumerate()
            .map(|(k, r)| PmRow { label: format!("rho{k}"), weight: None, expectations: r.as_ref().to_vec() })
            .collect();
        Self::new(measurements, rows)
    }

    pub fn measurements(&self) -> &[String] {
        &self.measurements
    }

    pub fn rows(&self) -> &[PmRow] {
        &self.rows
    }

    pub fn n_measurements(&self) -> usize {
        self.measurements.len()
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn value(&self, state: usize, measurement: usize) -> f64 {
        self.rows[state].expectations[measurement]
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.measurements.len() {
            return Err(Error::MeasurementIndex { index: i, count: self.measurements.len() });
        }
        Ok(())
    }

    /// `(A_i|rho, A_j|rho)` for every state.
    pub fn pair_values(&self, i: usize, j: usize) -> Result<Vec<(f64, f64)>> {
        self.check_index(i)?;
        self.check_index(j)?;
        if self.rows.is_empty() {
            return Err(Error::EmptyStateSet);
        }
        Ok(self.rows.iter().map(|r| (r.expectations[i], r.expectations[j])).collect())
    }

    /// Appends a state row.
    pub fn with_row(mut self, label: impl Into<String>, expectations: Vec<f64>) -> Result<Self> {
        self.rows.push(PmRow { label: label.into(), weight: None, expectations });
        for r in &mut self.rows {
            r.weight = None;
        }
        Self::new(self.measurements, self.rows)
    }

    /// Negates every expectation of measurement `i` (outcome relabeling).
    pub fn relabel_measurement(&self, i: usize) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            r.expectations[i] = -r.expectations[i];
        }
        out
    }

    /// Maps every expectation `A` to the outcome-0 probability `(1 + A) / 2`.
    pub fn to_outcome0_probabilities(&self) -> Self {
        let mut out = self.clone();
        for r in &mut out.rows {
            for v in &mut r.expectations {
                *v = 0.5 * (1.0 + *v);
            }
        }
        out
    }

    pub fn row_index(&self, label: &str) -> Option<usize> {
        self.rows.iter().position(|r| r.label == label)
    }
}

/// Lower and upper uncertainty-relation bounds on the (scaled) measurement angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GBounds {
    pub lower: f64,
    pub upper: f64,
}

fn checked_expectation(a: f64) -> Result<f64> {
    if !(a.abs() <= 1.0 + EPS) {
        return Err(Error::ExpectationOutOfRange(a));
    }
    Ok(a.clamp(-1.0, 1.0))
}

/// `A_i A_j -+ sqrt(1 - A_i^2) sqrt(1 - A_j^2)`.
pub fn g_pvm(ai: f64, aj: f64) -> Result<GBounds> {
    let (ai, aj) = (checked_expectation(ai)?, checked_expectation(aj)?);
    let prod = ai * aj;
    let root = clamped_sqrt(1.0 - ai * ai)? * clamped_sqrt(1.0 - aj * aj)?;
    Ok(GBounds { lower: prod - root, upper: prod + root })
}

/// Deviation `A - r` clipped onto `[-reach, reach]`; errors when it lies further out than `EPS`.
fn offset_deviation(a: f64, r: f64, reach: f64) -> Result<f64> {
    let d = a - r;
    if d.abs() > reach + EPS {
        return Err(Error::IncompatibleOffset { deviation: d.abs(), reach });
    }
    Ok(d.clamp(-reach.max(0.0), reach.max(0.0)))
}

/// `(A_i - r_i)(A_j - r_j) -+ prod_l sqrt(rbar_l^2 - (A_l - r_l)^2)` with `rbar = 1 - |r|`.
pub fn g_povm(ai: f64, aj: f64, ri: f64, rj: f64) -> Result<GBounds> {
    g_scaled(ai, aj, ri, rj, 1.0 - ri.abs(), 1.0 - rj.abs())
}

/// Bounds on `c r'_i r'_j` for given offsets and scales.
pub fn g_scaled(ai: f64, aj: f64, ri: f64, rj: f64, si: f64, sj: f64) -> Result<GBounds> {
    let (ai, aj) = (checked_expectation(ai)?, checked_expectation(aj)?);
    if !(ri.abs() <= 1.0 + EPS) || !(rj.abs() <= 1.0 + EPS) {
        return Err(Error::InvalidObservable(format!("offsets ({ri}, {rj}) outside [-1, 1]")));
    }
    let di = offset_deviation(ai, ri, si)?;
    let dj = offset_deviation(aj, rj, sj)?;
    let root = clamped_sqrt(si * si - di * di)? * clamped_sqrt(sj * sj - dj * dj)?;
    Ok(GBounds { lower: di * dj - root, upper: di * dj + root })
}

/// Parameters `(r_i, r_j, r'_i, r'_j, c)` of a pair of measurements realizing the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessParams {
    pub r_i: f64,
    pub r_j: f64,
    pub r_prime_i: f64,
    pub r_prime_j: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Admissible values of `c r'_i r'_j` (just `c` for sharp measurements).
    pub c_interval: Option<Interval>,
    pub witness_params: Option<WitnessParams>,
    /// `min g_+ - max g_-`.
    pub margin: f64,
    pub max_lower: f64,
    pub min_upper: f64,
}

impl FeasibilityReport {
    fn from_envelope(env: Envelope, r_i: f64, r_j: f64, tol: f64) -> Self {
        let c_interval = if env.valid {
            Interval::with_slack(env.max_lower, env.min_upper, tol)
        } else {
            None
        };
        let feasible = env.valid && env.margin() >= -tol;
        let witness_params = c_interval.filter(|_| feasible).map(|iv| {
            let (si, sj) = (1.0 - r_i.abs(), 1.0 - r_j.abs());
            let scale = si * sj;
            let c = if scale > tol { (iv.mid() / scale).clamp(-1.0, 1.0) } else { 0.0 };
            WitnessParams { r_i, r_j, r_prime_i: si, r_prime_j: sj, c }
        });
        FeasibilityReport {
            feasible,
            c_interval,
            witness_params,
            margin: env.score(),
            max_lower: env.max_lower,
            min_upper: env.min_upper,
        }
    }
}

/// Envelope of the per-state bounds at fixed offsets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub max_lower: f64,
    pub min_upper: f64,
    /// False when some state's deviation exceeds `1 - |r|`.
    pub valid: bool,
    /// Largest excess `|A - r| - (1 - |r|)` over states, when invalid.
    pub violation: f64,
}

impl Envelope {
    pub fn margin(&self) -> f64 {
        self.min_upper - self.max_lower
    }

    /// Signed slack used for ranking offsets. Valid offsets always score at
    /// least -2 (the bounds lie in [-1, 1]); invalid ones score below that.
    pub fn score(&self) -> f64 {
        if self.valid {
            self.margin()
        } else {
            -2.0 - self.violation
        }
    }
}

/// Evaluates `max g_-` and `min g_+` over the states at offsets `(ri, rj)`.
pub fn envelope(pairs: &[(f64, f64)], ri: f64, rj: f64) -> Envelope {
    let (si, sj) = (1.0 - ri.abs(), 1.0 - rj.abs());
    let mut env = Envelope { max_lower: f64::NEG_INFINITY, min_upper: f64::INFINITY, valid: true, violation: 0.0 };
    for &(ai, aj) in pairs {
        let excess = ((ai - ri).abs() - si).max((aj - rj).abs() - sj);
        if excess > EPS {
            env.valid = false;
            env.violation = env.violation.max(excess);
            continue;
        }
        match g_scaled(ai, aj, ri, rj, si, sj) {
            Ok(g) => {
                env.max_lower = env.max_lower.max(g.lower);
                env.min_upper = env.min_upper.min(g.upper);
            }
            Err(_) => {
                env.valid = false;
                env.violation = env.violation.max(excess.max(EPS));
            }
        }
    }
    env
}

/// Theorem-1 style check for sharp measurements `i` and `j`.
pub fn pvm_feasible(records: &PmRecordSet, i: usize, j: usize, tol: f64) -> Result<FeasibilityReport> {
    let pairs = records.pair_values(i, j)?;
    let mut env = Envelope { max_lower: f64::NEG_INFINITY, min_upper: f64::INFINITY, valid: true, violation: 0.0 };
    for (ai, aj) in pairs {
        let g = g_pvm(ai, aj)?;
        env.max_lower = env.max_lower.max(g.lower);
        env.min_upper = env.min_upper.min(g.upper);
    }
    Ok(FeasibilityReport::from_envelope(env, 0.0, 0.0, tol))
}

/// Offset search settings: a coarse `coarse x coarse` grid on `[-1, 1]^2`
/// followed by `refine_rounds` rounds of `refine_points x refine_points`
/// grids spanning one coarse step on either side of the incumbent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub coarse: usize,
    pub refine_rounds: usize,
    pub refine_points: usize,
    pub tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { coarse: 101, refine_rounds: 3, refine_points: 11, tol: EPS }
    }
}

impl GridConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_coarse(mut self, coarse: usize) -> Self {
        self.coarse = coarse;
        self
    }

    pub fn step(&self) -> f64 {
        2.0 / (self.coarse.max(2) - 1) as f64
    }

    pub fn coarse_values(&self) -> Vec<f64> {
        let n = self.coarse.max(2);
        (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect()
    }
}

/// A scored offset pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetCell {
    pub r_i: f64,
    pub r_j: f64,
    pub envelope: Envelope,
}

impl OffsetCell {
    pub fn eval(pairs: &[(f64, f64)], r_i: f64, r_j: f64) -> Self {
        Self { r_i, r_j, envelope: envelope(pairs, r_i, r_j) }
    }

    /// True when `self` ranks strictly ahead of `other`: larger score, then
    /// smaller `|r_i| + |r_j|` (most projective explanation).
    fn beats(&self, other: &OffsetCell) -> bool {
        let (a, b) = (self.envelope.score(), other.envelope.score());
        if (a - b).abs() > 1e-12 {
            return a > b;
        }
        let (na, nb) = (self.r_i.abs() + self.r_j.abs(), other.r_i.abs() + other.r_j.abs());
        na < nb - 1e-12
    }
}

fn best_of(cells: &[OffsetCell]) -> OffsetCell {
    let mut best = cells[0];
    for c in &cells[1..] {
        if c.beats(&best) {
            best = *c;
        }
    }
    best
}

/// Evaluates every coarse grid cell. Row-major in `(r_i, r_j)`.
pub fn coarse_cells(pairs: &[(f64, f64)], grid: &GridConfig) -> Vec<OffsetCell> {
    let vals = grid.coarse_values();
    vals.par_iter()
        .flat_map_iter(|&ri| vals.iter().map(move |&rj| OffsetCell::eval(pairs, ri, rj)))
        .collect()
}

/// Best offsets by coarse search plus nested refinement.
pub fn search_offsets(pairs: &[(f64, f64)], grid: &GridConfig) -> OffsetCell {
    let coarse = coarse_cells(pairs, grid);
    refine(pairs, best_of(&coarse), grid)
}

fn refine(pairs: &[(f64, f64)], mut best: OffsetCell, grid: &GridConfig) -> OffsetCell {
    let m = grid.refine_points.max(3);
    let mut half = grid.step();
    for _ in 0..grid.refine_rounds {
        let span = |c: f64| ((c - half).max(-1.0), (c + half).min(1.0));
        let (ilo, ihi) = span(best.r_i);
        let (jlo, jhi) = span(best.r_j);
        let at = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (m - 1) as f64;
        let cells: Vec<OffsetCell> = (0..m * m)
            .into_par_iter()
            .map(|idx| OffsetCell::eval(pairs, at(ilo, ihi, idx / m), at(jlo, jhi, idx % m)))
            .collect();
        let cand = best_of(&cells);
        if cand.beats(&best) {
            best = cand;
        }
        half = 2.0 * half / (m - 1) as f64;
    }
    best
}

/// Theorem-2 style check for general binary measurements `i` and `j`.
pub fn povm_feasible(records: &PmRecordSet, i: usize, j: usize, grid: &GridConfig) -> Result<FeasibilityReport> {
    let pairs = records.pair_values(i, j)?;
    let best = search_offsets(&pairs, grid);
    Ok(FeasibilityReport::from_envelope(best.envelope, best.r_i, best.r_j, grid.tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementClass {
    Pvm,
    Povm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    pub report: FeasibilityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub feasible: bool,
    pub pairs: Vec<PairReport>,
}

impl PairwiseReport {
    pub fn get(&self, i: usize, j: usize) -> Option<&FeasibilityReport> {
        let (i, j) = (i.min(j), i.max(j));
        self.pairs.iter().find(|p| p.i == i && p.j == j).map(|p| &p.report)
    }
}

/// Applies the pair criterion to every unordered measurement pair.
pub fn pairwise_feasible(records: &PmRecordSet, mode: MeasurementClass, grid: &GridConfig) -> Result<PairwiseReport> {
    let m = records.n_measurements();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let report = match mode {
                MeasurementClass::Pvm => pvm_feasible(records, i, j, grid.tol)?,
                MeasurementClass::Povm => povm_feasible(records, i, j, grid)?,
            };
            pairs.push(PairReport { i, j, report });
        }
    }
    Ok(PairwiseReport { feasible: pairs.iter().all(|p| p.report.feasible), pairs })
}

/// Splits each state's `d`-outcome distribution into `d` binary measurements
/// `{M_k, 1 - M_k}`; the expectation of measurement `k` is `2 p(k) - 1`.
pub fn binarize(distributions: &[Vec<f64>], tol: f64) -> Result<PmRecordSet> {
    let d = distributions.first().map_or(0, Vec::len);
    let mut rows = Vec::with_capacity(distributions.len());
    for (k, p) in distributions.iter().enumerate() {
        if p.len() != d {
            return Err(Error::InvalidDistribution(format!("state {k} has {} outcomes, expected {d}", p.len())));
        }
        if p.iter().any(|&v| !(-tol..=1.0 + tol).contains(&v)) {
            return Err(Error::InvalidDistribution(format!("state {k} has a probability outside [0, 1]")));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidDistribution(format!("state {k} sums to {total}")));
        }
        rows.push(p.iter().map(|&v| 2.0 * v - 1.0).collect::<Vec<_>>());
    }
    let measurements = (0..d).map(|k| format!("M{k}")).collect();
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(k, e)| PmRow { label: format!("rho{k}"), weight: None, expectations: e })
        .collect();
    PmRecordSet::new(measurements, rows)
}
