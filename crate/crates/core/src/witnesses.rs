//! Reference witnesses: a dimension witness built from outcome overlaps, the
//! arcsin form of the first NPA level, and a 2x2 determinant dimension witness.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::criteria::PmRecordSet;
use crate::error::{Error, Result};
use crate::scenarios::{qbell, qpm, BellCorrelation, Family, QPM_LABELS};
use crate::EPS;

/// A witness value with its bound. `excluded` is set when `value > threshold + EPS`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessValue {
    pub value: f64,
    pub threshold: f64,
    pub excluded: bool,
}

impl WitnessValue {
    pub fn new(value: f64, threshold: f64) -> Self {
        Self { value, threshold, excluded: value > threshold + EPS }
    }
}

/// Dimension lower bound on Alice's system:
/// `max_{beta, beta'} [ sum_{b, b'} min_alpha ( sum_a sqrt(p(ab|alpha beta) p(ab'|alpha beta')) )^2 ]^-1`.
/// Qubits satisfy `w <= 2`.
pub fn svw_witness(corr: &BellCorrelation) -> WitnessValue {
    let mut worst: f64 = 0.0;
    for be in 0..2 {
        for bp in 0..2 {
            let mut total = 0.0;
            for b in 0..2 {
                for b2 in 0..2 {
                    let overlap = (0..2)
                        .map(|al| {
                            let s: f64 = (0..2).map(|a| (corr.p(al, be, a, b) * corr.p(al, bp, a, b2)).sqrt()).sum();
                            s * s
                        })
                        .fold(f64::INFINITY, f64::min);
                    total += overlap;
                }
            }
            let w = if total > 0.0 { 1.0 / total } else { f64::INFINITY };
            worst = worst.max(w);
        }
    }
    WitnessValue::new(worst, 2.0)
}

fn normalized_covariance(corr: &BellCorrelation, al: usize, be: usize) -> Result<f64> {
    let (a, b) = (corr.marginal_a(al, be), corr.marginal_b(al, be));
    let num = corr.correlator(al, be) - a * b;
    let den = (1.0 - a * a) * (1.0 - b * b);
    if 1.0 - a.abs() <= EPS || 1.0 - b.abs() <= EPS {
        if num.abs() <= EPS {
            return Ok(0.0);
        }
        let m = if 1.0 - a.abs() <= EPS { a } else { b };
        return Err(Error::DegenerateMarginal(m));
    }
    Ok((num / den.sqrt()).clamp(-1.0, 1.0))
}

/// `|sum_{alpha beta} (-1)^{alpha beta} arcsin D_{alpha beta}|` with `D` the
/// normalized covariance; quantum correlations satisfy `value <= pi`.
pub fn npa_arcsin(corr: &BellCorrelation) -> Result<WitnessValue> {
    let mut total = 0.0;
    for al in 0..2 {
        for be in 0..2 {
            let d = normalized_covariance(corr, al, be)?;
            let sign = if al & be == 1 { -1.0 } else { 1.0 };
            total += sign * d.asin();
        }
    }
    Ok(WitnessValue::new(total.abs(), PI))
}

/// The two-parameter closed form of the arcsin value on the Bell family,
/// transcribed as `|3 asin((y+x-x^2)/(1-y^2)) - asin((y-x-x^2)/(1-x^2))|`.
/// Arguments outside `[-1, 1]` are clamped.
pub fn npa_arcsin_qbell_transcribed(x: f64, y: f64) -> f64 {
    let a = ((y + x - x * x) / (1.0 - y * y)).clamp(-1.0, 1.0);
    let b = ((y - x - x * x) / (1.0 - x * x)).clamp(-1.0, 1.0);
    (3.0 * a.asin() - b.asin()).abs()
}

/// Closed form of the arcsin value on the Bell family obtained from its
/// marginals `y` and correlators `(-1)^{alpha beta} x + y`:
/// `|3 asin((x+y-y^2)/(1-y^2)) - asin((y-x-y^2)/(1-y^2))|`.
pub fn npa_arcsin_qbell(x: f64, y: f64) -> f64 {
    let den = 1.0 - y * y;
    let a = ((x + y - y * y) / den).clamp(-1.0, 1.0);
    let b = ((y - x - y * y) / den).clamp(-1.0, 1.0);
    (3.0 * a.asin() - b.asin()).abs()
}

/// `|det W|` with `W[m][n] = A_m(arrangement[2n]) - A_m(arrangement[2n+1])`.
/// Values are taken from the records as given; for expectation records
/// pass `to_outcome0_probabilities` first to compare against the bound 1.
pub fn bqb_det(records: &PmRecordSet, arrangement: [&str; 4]) -> Result<WitnessValue> {
    let mut idx = [0usize; 4];
    for (k, label) in arrangement.iter().enumerate() {
        idx[k] = records
            .row_index(label)
            .ok_or_else(|| Error::InvalidRecords(format!("no state labelled {label}")))?;
    }
    bqb_det_indices(records, idx)
}

pub fn bqb_det_indices(records: &PmRecordSet, idx: [usize; 4]) -> Result<WitnessValue> {
    if records.n_measurements() != 2 {
        return Err(Error::Arity(format!("need 2 measurements, got {}", records.n_measurements())));
    }
    if let Some(&k) = idx.iter().find(|&&k| k >= records.n_states()) {
        return Err(Error::Arity(format!("state index {k} out of range ({} states)", records.n_states())));
    }
    let w = |m: usize, n: usize| records.value(idx[2 * n], m) - records.value(idx[2 * n + 1], m);
    let det = w(0, 0) * w(1, 1) - w(0, 1) * w(1, 0);
    Ok(WitnessValue::new(det.abs(), 1.0))
}

/// The three reference witnesses, each on its natural family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessKind {
    Svw,
    Npa,
    Bqb,
}

impl WitnessKind {
    pub const ALL: [WitnessKind; 3] = [WitnessKind::Svw, WitnessKind::Npa, WitnessKind::Bqb];

    pub fn family(self) -> Family {
        match self {
            WitnessKind::Svw | WitnessKind::Npa => Family::QBell,
            WitnessKind::Bqb => Family::QPM,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WitnessKind::Svw => "svw",
            WitnessKind::Npa => "npa",
            WitnessKind::Bqb => "bqb",
        }
    }

    /// Witness value at the family member `(x, y)`.
    pub fn evaluate(self, x: f64, y: f64) -> Result<WitnessValue> {
        match self {
            WitnessKind::Svw => Ok(svw_witness(&qbell(x, y)?)),
            WitnessKind::Npa => npa_arcsin(&qbell(x, y)?),
            WitnessKind::Bqb => bqb_det(&qpm(x, y)?, QPM_LABELS),
        }
    }
}

impl std::str::FromStr for WitnessKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svw" => Ok(WitnessKind::Svw),
            "npa" => Ok(WitnessKind::Npa),
            "bqb" => Ok(WitnessKind::Bqb),
            other => Err(Error::Io(format!("unknown witness {other}"))),
        }
    }
}

/// Points `(x, y)` where the witness reaches its threshold: for each `x`, the
/// first crossing along increasing `y` on a grid of spacing `step`, refined by
/// bisection. Abscissae without a crossing are omitted.
pub fn witness_curve(kind: WitnessKind, abscissae: &[f64], step: f64) -> Vec<(f64, f64)> {
    let excess = |x: f64, y: f64| kind.evaluate(x, y).ok().map(|w| w.value - w.threshold);
    let n = (2.0 / step).ceil() as usize;
    abscissae
        .iter()
        .filter_map(|&x| {
            let mut prev: Option<(f64, f64)> = None;
            for k in 0..=n {
                let y = (-1.0 + k as f64 * step).min(1.0);
                let Some(e) = excess(x, y) else {
                    prev = None;
                    continue;
                };
                if let Some((py, pe)) = prev {
                    if (pe > 0.0) != (e > 0.0) {
                        let (mut lo, mut hi) = (py, y);
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            match excess(x, mid) {
                                Some(m) if (m > 0.0) == (pe > 0.0) => lo = mid,
                                _ => hi = mid,
                            }
                        }
                        return Some((x, 0.5 * (lo + hi)));
                    }
                }
                prev = Some((y, e));
            }
            None
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn svw_examples() {
        let w = svw_witness(&qbell(0.0, 0.0).unwrap());
        assert!((w.value - 1.0).abs() < 1e-12 && !w.excluded);
        let l = svw_witness(&qbell(0.0, 1.0).unwrap());
        assert!((l.value - 1.0).abs() < 1e-12);
        let pr = svw_witness(&qbell(1.0, 0.0).unwrap());
        assert!(pr.value.is_infinite() && pr.excluded);
    }

    #[test]
    fn svw_grows_with_pr_weight() {
        let v: Vec<f64> = [0.0, 0.3, 0.6, 0.9].iter().map(|&x| svw_witness(&qbell(x, 0.0).unwrap()).value).collect();
        assert!(v.windows(2).all(|p| p[1] > p[0]));
        // Independent evaluation of the defining formula: 1 / (1 - x^2) on y = 0.
        for (x, want) in [(0.5, 1.3333333333333335), (0.9, 5.263157894736844)] {
            assert!((svw_witness(&qbell(x, 0.0).unwrap()).value - want).abs() < 1e-12);
        }
        assert!((svw_witness(&qbell(0.3, 0.2).unwrap()).value - 1.1902582755598903).abs() < 1e-12);
    }

    #[test]
    fn npa_examples() {
        let v = npa_arcsin(&qbell(FRAC_1_SQRT_2, 0.0).unwrap()).unwrap();
        assert!((v.value - PI).abs() < 1e-9 && !v.excluded);
        let v = npa_arcsin(&qbell(1.0, 0.0).unwrap()).unwrap();
        assert!((v.value - 2.0 * PI).abs() < 1e-9 && v.excluded);
        assert_eq!(npa_arcsin(&qbell(0.0, 0.0).unwrap()).unwrap().value, 0.0);
    }

    #[test]
    fn npa_degenerate_marginals() {
        assert_eq!(npa_arcsin(&qbell(0.0, 1.0).unwrap()).unwrap().value, 0.0);
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for al in 0..2 {
            p[al][0][0] = [0.5, 0.5];
            p[al][1][0] = [1.0, 0.0];
        }
        let c = BellCorrelation::new(p).unwrap();
        assert_eq!(npa_arcsin(&c).unwrap().value, 0.0);
    }

    #[test]
    fn npa_symmetries() {
        let q = qbell(0.55, 0.12).unwrap();
        let v = npa_arcsin(&q).unwrap().value;
        assert!((npa_arcsin(&q.swap_parties()).unwrap().value - v).abs() < 1e-12);
        let flipped = q.relabel_a(0).relabel_a(1).relabel_b(0).relabel_b(1);
        assert!((npa_arcsin(&flipped).unwrap().value - v).abs() < 1e-12);
    }

    #[test]
    fn npa_family_closed_form() {
        for &(x, y) in &[(0.3, 0.1), (0.6, -0.1), (0.2, 0.5), (0.7, 0.0)] {
            let generic = npa_arcsin(&qbell(x, y).unwrap()).unwrap().value;
            assert!((npa_arcsin_qbell(x, y) - generic).abs() < 1e-12);
        }
        // The transcribed form agrees on the diagonal x = y only.
        let generic = npa_arcsin(&qbell(0.3, 0.3).unwrap()).unwrap().value;
        assert!((npa_arcsin_qbell_transcribed(0.3, 0.3) - generic).abs() < 1e-12);
    }

    #[test]
    fn bqb_examples() {
        let r = qpm(FRAC_1_SQRT_2, 0.0).unwrap();
        let v = bqb_det(&r, QPM_LABELS).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
        let same = PmRecordSet::from_values(&[[0.2, 0.3]; 4]).unwrap();
        assert_eq!(bqb_det_indices(&same, [0, 1, 2, 3]).unwrap().value, 0.0);
        let three = PmRecordSet::from_values(&[[0.0; 3]; 4]).unwrap();
        assert!(matches!(bqb_det_indices(&three, [0, 1, 2, 3]), Err(Error::Arity(_))));
    }

    #[test]
    fn bqb_family_formula() {
        for &(x, y) in &[(0.3, 0.1), (0.5, -0.2), (0.1, 0.6)] {
            let v = bqb_det(&qpm(x, y).unwrap(), QPM_LABELS).unwrap().value;
            let want = (2.0 * x * (x + y - y * y)).abs() / (1.0 - y * y).powi(2);
            assert!((v - want).abs() < 1e-12);
        }
    }

    #[test]
    fn bqb_pair_swap_keeps_modulus() {
        let r = qpm(0.4, 0.2).unwrap();
        let a = bqb_det(&r, QPM_LABELS).unwrap().value;
        let b = bqb_det(&r, ["1|0", "0|0", "0|1", "1|1"]).unwrap().value;
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn witness_curves() {
        let pts = witness_curve(WitnessKind::Bqb, &[0.2, 0.4, 0.6], 1e-3);
        assert_eq!(pts.len(), 3);
        for (x, y) in pts {
            let lhs = (2.0 * x * y - 2.0 * x * y * y + 2.0 * x * x).abs();
            assert!((lhs - (1.0 - y * y).powi(2)).abs() < 1e-6, "{x} {y}");
        }
        let svw = witness_curve(WitnessKind::Svw, &[FRAC_1_SQRT_2], 1e-3);
        assert!(!svw.is_empty() && svw.iter().all(|&(x, y)| (svw_witness(&qbell(x, y).unwrap()).value - 2.0).abs() < 1e-6));
        let npa = witness_curve(WitnessKind::Npa, &[0.6], 1e-3);
        assert!(!npa.is_empty() && npa.iter().all(|&(x, y)| (npa_arcsin_qbell(x, y) - PI).abs() < 1e-6));
    }
}
