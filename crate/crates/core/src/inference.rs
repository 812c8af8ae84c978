//! Device inference from prepare-and-measure statistics.
//!
//! The admissible offsets `(r_i, r_j)` are the grid cells on which the
//! uncertainty-relation envelope is nonempty. On each cell the scales `r'`
//! must cover every observed deviation, and the envelope bounds the scaled
//! angle `c r'_i r'_j`. Given the measurement axes, each state is then fixed
//! up to one parameter `t` along `a_0 x a_1`.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{
    coarse_cells, envelope, g_scaled, pvm_feasible, search_offsets, GridConfig, MeasurementClass, OffsetCell,
    PmRecordSet, WitnessParams,
};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::qubit::{clamped_sqrt, BlochState};
use crate::scenarios::Family;
use crate::EPS;

/// One admissible offset cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RCell {
    pub r_i: f64,
    pub r_j: f64,
    pub rprime_i: Interval,
    pub rprime_j: Interval,
    /// Admissible `c r'_i r'_j`.
    pub scaled_c: Interval,
    pub margin: f64,
}

impl RCell {
    /// The angle interval at the midpoint scales; `None` when that product vanishes.
    pub fn c_at_mid_scales(&self) -> Option<Interval> {
        let k = self.rprime_i.mid() * self.rprime_j.mid();
        if k <= EPS {
            return None;
        }
        self.scaled_c.scale(1.0 / k).intersect(&Interval { lo: -1.0, hi: 1.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRegion {
    pub i: usize,
    pub j: usize,
    pub cells: Vec<RCell>,
    /// Diagonal of the bounding box of the cells in `(r_i, r_j, c r'_i r'_j)`.
    pub diameter: f64,
    /// Set when `diameter < 10 * grid step`.
    pub unique: bool,
    pub grid_step: f64,
}

impl ParamRegion {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The cell with the largest margin, ties toward smaller `|r_i| + |r_j|`.
    pub fn best(&self) -> Option<&RCell> {
        self.cells.iter().reduce(|a, b| {
            if b.margin > a.margin + 1e-12
                || ((b.margin - a.margin).abs() <= 1e-12 && b.r_i.abs() + b.r_j.abs() < a.r_i.abs() + a.r_j.abs())
            {
                b
            } else {
                a
            }
        })
    }

    /// Hull of the scaled-angle intervals over all cells.
    pub fn scaled_c_hull(&self) -> Option<Interval> {
        self.cells.iter().map(|c| c.scaled_c).reduce(|a, b| a.hull(&b))
    }

    /// Witness parameters of the best cell at its largest scales.
    pub fn witness(&self) -> Option<WitnessParams> {
        let b = self.best()?;
        let (si, sj) = (b.rprime_i.hi, b.rprime_j.hi);
        let c = if si * sj > EPS { (b.scaled_c.mid() / (si * sj)).clamp(-1.0, 1.0) } else { 0.0 };
        Some(WitnessParams { r_i: b.r_i, r_j: b.r_j, r_prime_i: si, r_prime_j: sj, c })
    }
}

/// `[max |A_i - r_i|, 1 - |r_i|]`; `None` when the lower end exceeds the upper.
pub fn infer_rprime_bounds(records: &PmRecordSet, i: usize, r_i: f64) -> Result<Option<Interval>> {
    records.check_index(i)?;
    let dev = records.rows().iter().map(|r| (r.expectations[i] - r_i).abs()).fold(0.0, f64::max);
    Ok(Interval::with_slack(dev, 1.0 - r_i.abs(), EPS))
}

fn make_cell(records: &PmRecordSet, i: usize, j: usize, cell: &OffsetCell) -> Result<Option<RCell>> {
    let (Some(rpi), Some(rpj)) = (infer_rprime_bounds(records, i, cell.r_i)?, infer_rprime_bounds(records, j, cell.r_j)?)
    else {
        return Ok(None);
    };
    let env = &cell.envelope;
    let Some(scaled_c) = Interval::with_slack(env.max_lower, env.min_upper, EPS) else {
        return Ok(None);
    };
    Ok(Some(RCell { r_i: cell.r_i, r_j: cell.r_j, rprime_i: rpi, rprime_j: rpj, scaled_c, margin: env.margin() }))
}

/// All grid cells admitting a realization, plus the refined optimum.
pub fn infer_r_region(records: &PmRecordSet, i: usize, j: usize, grid: &GridConfig) -> Result<ParamRegion> {
    let pairs = records.pair_values(i, j)?;
    let admissible = |c: &OffsetCell| c.envelope.valid && c.envelope.margin() >= -grid.tol;
    let mut raw: Vec<OffsetCell> = coarse_cells(&pairs, grid).into_iter().filter(admissible).collect();
    let best = search_offsets(&pairs, grid);
    if admissible(&best) && !raw.iter().any(|c| c.r_i == best.r_i && c.r_j == best.r_j) {
        raw.push(best);
    }
    let mut cells = Vec::with_capacity(raw.len());
    for c in &raw {
        if let Some(cell) = make_cell(records, i, j, c)? {
            cells.push(cell);
        }
    }
    let diameter = bounding_diagonal(&cells);
    let step = grid.step();
    Ok(ParamRegion { i, j, unique: !cells.is_empty() && diameter < 10.0 * step, diameter, grid_step: step, cells })
}

fn bounding_diagonal(cells: &[RCell]) -> f64 {
    if cells.is_empty() {
        return 0.0;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for c in cells {
        for (k, (a, b)) in [(c.r_i, c.r_i), (c.r_j, c.r_j), (c.scaled_c.lo, c.scaled_c.hi)].into_iter().enumerate() {
            lo[k] = lo[k].min(a);
            hi[k] = hi[k].max(b);
        }
    }
    (0..3).map(|k| (hi[k] - lo[k]).powi(2)).sum::<f64>().sqrt()
}

/// Angle interval for given offsets and scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CInference {
    /// `None` when the records admit no angle at these parameters.
    pub interval: Option<Interval>,
    /// Set when `r'_i r'_j <= EPS`; the angle is then unconstrained.
    pub unconstrained: bool,
}

/// `[max g_- / (r'_i r'_j), min g_+ / (r'_i r'_j)] ∩ [-1, 1]`.
pub fn infer_c_interval(
    records: &PmRecordSet,
    i: usize,
    j: usize,
    r: (f64, f64),
    r_prime: (f64, f64),
) -> Result<CInference> {
    let pairs = records.pair_values(i, j)?;
    let k = r_prime.0 * r_prime.1;
    if k <= EPS {
        return Ok(CInference { interval: Interval::new(-1.0, 1.0), unconstrained: true });
    }
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (ai, aj) in pairs {
        let g = g_scaled(ai, aj, r.0, r.1, r_prime.0, r_prime.1)?;
        lo = lo.max(g.lower / k);
        hi = hi.min(g.upper / k);
    }
    let interval = Interval::with_slack(lo.max(-1.0), hi.min(1.0), EPS / k);
    Ok(CInference { interval, unconstrained: false })
}

/// `sqrt((1 - A0^2)(1 - A1^2) - (c - A0 A1)^2)`.
pub fn t_bound(a0: f64, a1: f64, c: f64) -> Result<f64> {
    clamped_sqrt((1.0 - a0 * a0) * (1.0 - a1 * a1) - (c - a0 * a1).powi(2))
}

/// The states `s(t) = base + t * direction` with `a_0 . s = A0`, `a_1 . s = A1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateSolution {
    pub base: Vector3<f64>,
    pub direction: Vector3<f64>,
    pub t_max: f64,
}

impl StateSolution {
    pub fn at(&self, t: f64) -> Result<BlochState> {
        if t.abs() > self.t_max + EPS {
            return Err(Error::Unphysical { t, bound: self.t_max });
        }
        let s = self.base + self.direction * t;
        // |s| may exceed 1 by rounding at |t| = t_max.
        let n = s.norm();
        BlochState::new(if n > 1.0 { s / n } else { s })
    }

    pub fn is_unique(&self, tol: f64) -> bool {
        self.t_max <= tol
    }
}

fn any_perpendicular(a: &Vector3<f64>) -> Vector3<f64> {
    let trial = if a.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let p = trial - a * a.dot(&trial);
    p / p.norm()
}

/// Solves `a_0 . s = A0`, `a_1 . s = A1` for unit axes.
pub fn solve_state(a0v: f64, a1v: f64, a0: &Vector3<f64>, a1: &Vector3<f64>) -> Result<StateSolution> {
    let n = a0.cross(a1);
    let n2 = n.norm_squared();
    let c = a0.dot(a1);
    if n2.sqrt() <= EPS {
        if (a1v - c.signum() * a0v).abs() > EPS {
            return Err(Error::CollinearAxes);
        }
        return Ok(StateSolution { base: a0 * a0v, direction: any_perpendicular(a0), t_max: clamped_sqrt(1.0 - a0v * a0v)? });
    }
    let base = (a1 * a0v - a0 * a1v).cross(&n) / n2;
    let t_max = t_bound(a0v, a1v, c).map_err(|_| Error::Unphysical { t: 0.0, bound: 0.0 })?;
    Ok(StateSolution { base, direction: n / n2, t_max })
}

/// `s(t) = ((A0 a_1 - A1 a_0) x (a_0 x a_1) + t (a_0 x a_1)) / |a_0 x a_1|^2`.
pub fn reconstruct_state(a0v: f64, a1v: f64, a0: &Vector3<f64>, a1: &Vector3<f64>, t: f64) -> Result<BlochState> {
    solve_state(a0v, a1v, a0, a1)?.at(t)
}

/// Axes in the gauge `a_0 = z`, `a_1 = (sin phi, 0, cos phi)` with `cos phi = c`.
pub fn gauge_axes(c: f64) -> (Vector3<f64>, Vector3<f64>) {
    let c = c.clamp(-1.0, 1.0);
    (Vector3::z(), Vector3::new((1.0 - c * c).max(0.0).sqrt(), 0.0, c))
}

/// Per-state solutions for the given parameters in the gauge of [`gauge_axes`].
/// A measurement with vanishing scale drops out; the state is then fixed only
/// along the other axis.
pub fn reconstruct_states(records: &PmRecordSet, i: usize, j: usize, w: &WitnessParams) -> Result<Vec<StateSolution>> {
    let pairs = records.pair_values(i, j)?;
    let (a0, a1) = gauge_axes(w.c);
    let norm = |v: f64, r: f64, s: f64| ((v - r) / s).clamp(-1.0, 1.0);
    pairs
        .into_iter()
        .map(|(ai, aj)| match (w.r_prime_i > EPS, w.r_prime_j > EPS) {
            (true, true) => solve_state(norm(ai, w.r_i, w.r_prime_i), norm(aj, w.r_j, w.r_prime_j), &a0, &a1),
            (false, true) => solve_state(norm(aj, w.r_j, w.r_prime_j), norm(aj, w.r_j, w.r_prime_j), &a1, &a1),
            (true, false) => solve_state(norm(ai, w.r_i, w.r_prime_i), norm(ai, w.r_i, w.r_prime_i), &a0, &a0),
            (false, false) => Ok(StateSolution { base: Vector3::zeros(), direction: Vector3::x(), t_max: 1.0 }),
        })
        .collect()
}

/// Summary of what the statistics of one measurement pair fix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceReport {
    pub i: usize,
    pub j: usize,
    pub feasible: bool,
    pub unique: bool,
    pub diameter: f64,
    pub cell_count: usize,
    /// Offsets of the best cell.
    pub r: Option<[f64; 2]>,
    pub r_prime: Option<[Interval; 2]>,
    /// Scaled-angle interval divided by the midpoint scales.
    pub c: Option<Interval>,
    pub witness: Option<WitnessParams>,
    /// Per-state solutions at the witness parameters.
    pub states: Vec<StateSolution>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_error: Option<String>,
    /// All admissible cells; only filled on request.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<RCell>>,
}

/// Runs [`infer_r_region`] and reconstructs the states at the best cell.
pub fn infer_report(records: &PmRecordSet, i: usize, j: usize, grid: &GridConfig, with_cells: bool) -> Result<InferenceReport> {
    let region = infer_r_region(records, i, j, grid)?;
    let best = region.best().copied();
    let witness = region.witness();
    let (states, state_error) = match &witness {
        Some(w) => match reconstruct_states(records, i, j, w) {
            Ok(s) => (s, None),
            Err(e) => (Vec::new(), Some(e.to_string())),
        },
        None => (Vec::new(), None),
    };
    Ok(InferenceReport {
        i,
        j,
        feasible: !region.is_empty(),
        unique: region.unique,
        diameter: region.diameter,
        cell_count: region.cells.len(),
        r: best.map(|b| [b.r_i, b.r_j]),
        r_prime: best.map(|b| [b.rprime_i, b.rprime_j]),
        c: best.and_then(|b| b.c_at_mid_scales()),
        witness,
        states,
        state_error,
        cells: with_cells.then(|| region.cells.clone()),
    })
}

/// A point of the closed-form parametric boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmPoint {
    pub theta: f64,
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub r: f64,
}

/// Closed-form boundary at measurement angle `cos theta`:
/// `1/x = 1 + (2 (1+s)(1-c)) / (c (2 + c + sqrt((1+s)(1+3s))))`,
/// `u = (sqrt(1+3s) - sqrt(1-s)) / (2 sqrt(1+s))`, `y = 1 - x/u`,
/// `r = u / sqrt(1-u^2) - u^2 / (1-u^2)` with `s = sin theta`, `c = cos theta`.
pub fn sm_boundary(theta: f64) -> Result<SmPoint> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
        return Err(Error::OutsideValidityBranch(format!("theta = {theta} outside (0, pi/2)")));
    }
    let (s, c) = theta.sin_cos();
    if c <= EPS {
        return Err(Error::OutsideValidityBranch(format!("cos theta = {c} at the limit point (0, 1)")));
    }
    let inv_x = 1.0 + 2.0 * (1.0 + s) * (1.0 - c) / (c * (2.0 + c + ((1.0 + s) * (1.0 + 3.0 * s)).sqrt()));
    let x = 1.0 / inv_x;
    let u = ((1.0 + 3.0 * s).sqrt() - (1.0 - s).sqrt()) / (2.0 * (1.0 + s).sqrt());
    let y = 1.0 - x / u;
    let r = u / (1.0 - u * u).sqrt() - u * u / (1.0 - u * u);
    if !(0.0..=1.0).contains(&y) {
        return Err(Error::OutsideValidityBranch(format!("y = {y} outside [0, 1]")));
    }
    Ok(SmPoint { theta, x, y, u, r })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slice {
    /// Largest feasible `y` for each `x`.
    YOfX,
    /// Largest feasible `x` for each `y`.
    XOfY,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub grid: GridConfig,
    /// Bisection resolution.
    pub tol: f64,
    pub slice: Slice,
    /// Lower end of the scanned coordinate; assumed feasible when a boundary exists.
    pub start: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { grid: GridConfig::default(), tol: 1e-6, slice: Slice::YOfX, start: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub x: f64,
    pub y: f64,
    /// Criterion margin at `(x, y)`.
    pub margin: f64,
}

/// Smallest criterion margin over the family's record sets at `(x, y)`;
/// the Bell family is checked on both parties' conditional records.
pub fn family_margin(family: Family, criterion: MeasurementClass, x: f64, y: f64, grid: &GridConfig) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for rec in family.records(x, y)? {
        let m = match criterion {
            MeasurementClass::Pvm => pvm_feasible(&rec, 0, 1, grid.tol)?.margin,
            MeasurementClass::Povm => {
                let pairs = rec.pair_values(0, 1)?;
                search_offsets(&pairs, grid).envelope.score()
            }
        };
        worst = worst.min(m);
    }
    Ok(worst)
}

fn bisect(mut lo: f64, mut hi: f64, tol: f64, mut good: impl FnMut(f64) -> bool) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if good(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Boundary of the criterion-feasible region along slices of the family.
/// Slices with an infeasible starting point are omitted.
pub fn scan_boundary(
    family: Family,
    criterion: MeasurementClass,
    abscissae: &[f64],
    cfg: &ScanConfig,
) -> Vec<BoundaryPoint> {
    abscissae
        .par_iter()
        .filter_map(|&a| scan_one(family, criterion, a, cfg))
        .collect()
}

fn scan_one(family: Family, criterion: MeasurementClass, a: f64, cfg: &ScanConfig) -> Option<BoundaryPoint> {
    let point = |v: f64| match cfg.slice {
        Slice::YOfX => (a, v),
        Slice::XOfY => (v, a),
    };
    let valid = |v: f64| {
        let (x, y) = point(v);
        family.is_valid(x, y)
    };
    let margin = |v: f64| {
        let (x, y) = point(v);
        family_margin(family, criterion, x, y, &cfg.grid).unwrap_or(f64::NEG_INFINITY)
    };
    let feasible = |v: f64| margin(v) >= -cfg.grid.tol;
    if !valid(cfg.start) || !feasible(cfg.start) {
        return None;
    }
    let mut top = 1.0;
    if !valid(top) {
        top = bisect(cfg.start, top, 1e-12, valid);
    }
    let v = if feasible(top) { top } else { bisect(cfg.start, top, cfg.tol, feasible) };
    let (x, y) = point(v);
    Some(BoundaryPoint { x, y, margin: margin(v) })
}

/// Margin of the criterion at offsets `(r_i, r_j)`, `-2 - violation` when the offsets are invalid.
pub fn margin_at(records: &PmRecordSet, i: usize, j: usize, r_i: f64, r_j: f64) -> Result<f64> {
    Ok(envelope(&records.pair_values(i, j)?, r_i, r_j).score())
}
