//! Entanglement certification from Bell correlations under the assumption
//! that both parties hold qubits.
//!
//! Each party's measurements are inferred from the states the other party's
//! outcomes prepare. With the measurements pinned down, a PPT search decides
//! whether some separable state reproduces the data. Otherwise the moment
//! matrix over all admissible parameters and a handful of sampled parameter
//! cells are tried.

mod moment;
mod separable;

pub use moment::{
    apply_measurement_identity, build_moment_matrix, min_eigenvalue, project_psd, psd_completion, Completion, Entry,
    EntryStatus, LocalData, Mat9, MomentMatrix, Outcome, PartyParams, ProjectionConfig, LABELS, OPERATORS,
};
pub use separable::{
    ppt_residual, separable_feasibility, Correlators, LocalMeasurements, SeparabilityResult, SeparabilityVerdict,
};

use serde::{Deserialize, Serialize};

use crate::criteria::GridConfig;
use crate::error::{Error, Result};
use crate::inference::{gauge_axes, infer_r_region, ParamRegion, RCell};
use crate::interval::Interval;
use crate::scenarios::{bell_to_conditional_tol, nonsignaling_check, BellCorrelation, Party};
use crate::EPS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglementConfig {
    pub grid: GridConfig,
    pub projection: ProjectionConfig,
    /// Parameter cells tried when inference is not unique.
    pub max_cells: usize,
    /// Iteration cap per cell.
    pub cell_iter: usize,
    pub signaling_tol: f64,
}

impl Default for EntanglementConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            projection: ProjectionConfig::default(),
            max_cells: 8,
            cell_iter: 5000,
            signaling_tol: EPS,
        }
    }
}

impl EntanglementConfig {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.projection.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.projection.seed = seed;
        self
    }
}

/// What inference pinned down about one party's measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferredParty {
    pub party: Party,
    pub params: PartyParams,
    pub unique: bool,
    pub cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntanglementReport {
    pub verdict: SeparabilityVerdict,
    pub residual: f64,
    pub inferred_params: Vec<InferredParty>,
    pub certificate_state: Option<Vec<[f64; 2]>>,
    /// PSD status of the fully determined moment matrix, when parameters are unique.
    pub moment_psd: Option<bool>,
    pub notes: Vec<String>,
}

/// `c` values compatible with the cell's scaled angle for some scales in range.
fn cell_angle(cell: &RCell) -> Interval {
    let full = Interval { lo: -1.0, hi: 1.0 };
    let (pl, ph) = (cell.rprime_i.lo * cell.rprime_j.lo, cell.rprime_i.hi * cell.rprime_j.hi);
    if pl <= EPS {
        return full;
    }
    let s = cell.scaled_c;
    let c = Interval { lo: (s.lo / pl).min(s.lo / ph), hi: (s.hi / pl).max(s.hi / ph) };
    c.intersect(&full).unwrap_or(full)
}

fn hull_params(region: &ParamRegion) -> PartyParams {
    let mut cells = region.cells.iter();
    let first = cells.next().expect("nonempty region");
    let init = PartyParams {
        r: [Interval::point(first.r_i), Interval::point(first.r_j)],
        r_prime: [first.rprime_i, first.rprime_j],
        c: cell_angle(first),
    };
    cells.fold(init, |p, c| PartyParams {
        r: [p.r[0].hull(&Interval::point(c.r_i)), p.r[1].hull(&Interval::point(c.r_j))],
        r_prime: [p.r_prime[0].hull(&c.rprime_i), p.r_prime[1].hull(&c.rprime_j)],
        c: p.c.hull(&cell_angle(c)),
    })
}

/// Point parameters of a cell: largest scales, angle from the middle of the scaled range.
fn cell_point(cell: &RCell) -> (PartyParams, LocalMeasurements) {
    let (si, sj) = (cell.rprime_i.hi, cell.rprime_j.hi);
    let c = if si * sj > EPS { (cell.scaled_c.mid() / (si * sj)).clamp(-1.0, 1.0) } else { 0.0 };
    let (a0, a1) = gauge_axes(c);
    let params = PartyParams::point([cell.r_i, cell.r_j], [si, sj], c);
    (params, LocalMeasurements { r: [cell.r_i, cell.r_j], r_prime: [si, sj], axes: [a0, a1] })
}

/// The best cell followed by evenly strided others, `k` in total at most.
fn candidate_cells(region: &ParamRegion, k: usize) -> Vec<RCell> {
    let best = *region.best().expect("nonempty region");
    let mut out = vec![best];
    let n = region.cells.len();
    let stride = (n / k.max(1)).max(1);
    for c in region.cells.iter().step_by(stride) {
        if out.len() >= k {
            break;
        }
        if c != &best {
            out.push(*c);
        }
    }
    out
}

/// Full certification pipeline for a Bell table.
pub fn entanglement_verdict(corr: &BellCorrelation, cfg: &EntanglementConfig) -> Result<EntanglementReport> {
    let drift = nonsignaling_check(corr);
    if drift > cfg.signaling_tol {
        return Err(Error::Signaling(drift));
    }
    let mut regions = Vec::with_capacity(2);
    for party in [Party::A, Party::B] {
        let cond = bell_to_conditional_tol(corr, party, cfg.signaling_tol)?;
        regions.push((party, infer_r_region(&cond.records, 0, 1, &cfg.grid)?));
    }
    let mut notes = Vec::new();
    if let Some((party, _)) = regions.iter().find(|(_, r)| r.is_empty()) {
        notes.push(format!("no qubit measurements of party {party:?} reproduce its conditional statistics"));
        return Ok(EntanglementReport {
            verdict: SeparabilityVerdict::Inconclusive,
            residual: f64::INFINITY,
            inferred_params: vec![],
            certificate_state: None,
            moment_psd: None,
            notes,
        });
    }
    let data = Correlators::from(corr);
    let moments = build_moment_matrix(corr);
    let (ra, rb) = (&regions[0].1, &regions[1].1);

    if ra.unique && rb.unique {
        let (pa, ma) = cell_point(ra.best().expect("nonempty"));
        let (pb, mb) = cell_point(rb.best().expect("nonempty"));
        let full = apply_measurement_identity(&moments, Some(&pa), Some(&pb))?;
        let psd = min_eigenvalue(&full.midpoint()) >= -cfg.projection.tol;
        let res = separable_feasibility(&data, &ma, &mb, &cfg.projection);
        notes.extend(res.note.clone());
        return Ok(EntanglementReport {
            verdict: res.verdict,
            residual: res.residual,
            inferred_params: vec![
                InferredParty { party: Party::A, params: pa, unique: true, cells: ra.cells.len() },
                InferredParty { party: Party::B, params: pb, unique: true, cells: rb.cells.len() },
            ],
            certificate_state: res.certificate,
            moment_psd: Some(psd),
            notes,
        });
    }

    let (ha, hb) = (hull_params(ra), hull_params(rb));
    let inferred = vec![
        InferredParty { party: Party::A, params: ha, unique: ra.unique, cells: ra.cells.len() },
        InferredParty { party: Party::B, params: hb, unique: rb.unique, cells: rb.cells.len() },
    ];
    let hull = apply_measurement_identity(&moments, Some(&ha), Some(&hb))?;
    let completion = psd_completion(&hull, &cfg.projection);
    if completion.outcome == Outcome::Infeasible {
        notes.push("moment matrix has no PSD completion over the admissible parameters".into());
        return Ok(EntanglementReport {
            verdict: SeparabilityVerdict::Entangled,
            residual: completion.residual,
            inferred_params: inferred,
            certificate_state: None,
            moment_psd: Some(false),
            notes,
        });
    }

    let (ca, cb) = (candidate_cells(ra, cfg.max_cells), candidate_cells(rb, cfg.max_cells));
    let per_cell = ProjectionConfig { max_iter: cfg.cell_iter, ..cfg.projection };
    let mut best: Option<SeparabilityResult> = None;
    for k in 0..ca.len().max(cb.len()) {
        let (_, ma) = cell_point(&ca[k % ca.len()]);
        let (_, mb) = cell_point(&cb[k % cb.len()]);
        let res = separable_feasibility(&data, &ma, &mb, &per_cell);
        let found = res.verdict == SeparabilityVerdict::SeparableFeasible;
        if best.as_ref().is_none_or(|b| res.residual < b.residual) || found {
            best = Some(res);
        }
        if found {
            break;
        }
    }
    let best = best.expect("at least one cell");
    let verdict = match best.verdict {
        SeparabilityVerdict::SeparableFeasible => SeparabilityVerdict::SeparableFeasible,
        _ => {
            notes.push(format!("no separable model among {} sampled parameter cells", ca.len().max(cb.len())));
            SeparabilityVerdict::Inconclusive
        }
    };
    Ok(EntanglementReport {
        verdict,
        residual: best.residual,
        inferred_params: inferred,
        certificate_state: best.certificate,
        moment_psd: Some(completion.feasible()),
        notes,
    })
}
