//! Two-party Bell correlations, their reduction to conditional
//! prepare-and-measure records, and the two parametric example families.

use serde::{Deserialize, Serialize};

use crate::criteria::{PmRecordSet, PmRow};
use crate::error::{Error, Result};
use crate::EPS;

/// Probability table `p[alpha][beta][a][b]` for two parties with binary settings and outcomes.
pub type BellTable = [[[[f64; 2]; 2]; 2]; 2];

/// Conditioning probabilities at or below this value drop the row.
pub const CONDITIONING_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize)]
struct RawBell {
    p: BellTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBell")]
pub struct BellCorrelation {
    p: BellTable,
}

impl TryFrom<RawBell> for BellCorrelation {
    type Error = Error;
    fn try_from(raw: RawBell) -> Result<Self> {
        BellCorrelation::new(raw.p)
    }
}

impl BellCorrelation {
    pub fn new(p: BellTable) -> Result<Self> {
        for (al, row) in p.iter().enumerate() {
            for (be, t) in row.iter().enumerate() {
                let mut total = 0.0;
                for (a, tb) in t.iter().enumerate() {
                    for (b, &v) in tb.iter().enumerate() {
                        if !(-EPS..=1.0 + EPS).contains(&v) {
                            return Err(Error::InvalidCorrelation(format!(
                                "p({a}{b}|{al}{be}) = {v} outside [0, 1]"
                            )));
                        }
                        total += v;
                    }
                }
                if (total - 1.0).abs() > 1e-6 {
                    return Err(Error::InvalidCorrelation(format!("setting ({al},{be}) sums to {total}")));
                }
            }
        }
        Ok(Self { p })
    }

    pub fn table(&self) -> &BellTable {
        &self.p
    }

    /// `p(ab|alpha beta)`.
    pub fn p(&self, alpha: usize, beta: usize, a: usize, b: usize) -> f64 {
        self.p[alpha][beta][a][b]
    }

    /// `<A_alpha B_beta>`.
    pub fn correlator(&self, alpha: usize, beta: usize) -> f64 {
        let t = &self.p[alpha][beta];
        t[0][0] - t[0][1] - t[1][0] + t[1][1]
    }

    /// `<A_alpha>` evaluated in the setting pair `(alpha, beta)`.
    pub fn marginal_a(&self, alpha: usize, beta: usize) -> f64 {
        let t = &self.p[alpha][beta];
        t[0][0] + t[0][1] - t[1][0] - t[1][1]
    }

    /// `<B_beta>` evaluated in the setting pair `(alpha, beta)`.
    pub fn marginal_b(&self, alpha: usize, beta: usize) -> f64 {
        let t = &self.p[alpha][beta];
        t[0][0] - t[0][1] + t[1][0] - t[1][1]
    }

    /// Exchanges the roles of the two parties.
    pub fn swap_parties(&self) -> Self {
        let mut q = [[[[0.0; 2]; 2]; 2]; 2];
        for (al, be, a, b) in indices() {
            q[be][al][b][a] = self.p[al][be][a][b];
        }
        Self { p: q }
    }

    /// Flips Alice's outcome for setting `alpha`.
    pub fn relabel_a(&self, alpha: usize) -> Self {
        let mut q = self.p;
        for be in 0..2 {
            q[alpha][be].swap(0, 1);
        }
        Self { p: q }
    }

    /// Flips Bob's outcome for setting `beta`.
    pub fn relabel_b(&self, beta: usize) -> Self {
        self.swap_parties().relabel_a(beta).swap_parties()
    }

    /// Builds the table from the eight expectation values of a non-signaling box:
    /// `p(ab|alpha beta) = (1 + (-1)^a <A_alpha> + (-1)^b <B_beta> + (-1)^(a+b) <A_alpha B_beta>) / 4`.
    pub fn from_correlators(a: [f64; 2], b: [f64; 2], ab: [[f64; 2]; 2]) -> Result<Self> {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for (al, be, x, y) in indices() {
            let sa = if x == 0 { 1.0 } else { -1.0 };
            let sb = if y == 0 { 1.0 } else { -1.0 };
            p[al][be][x][y] = 0.25 * (1.0 + sa * a[al] + sb * b[be] + sa * sb * ab[al][be]);
        }
        Self::new(p)
    }

    /// `(<A_0>, <A_1>, <B_0>, <B_1>)` averaged over the other party's setting.
    pub fn marginals(&self) -> ([f64; 2], [f64; 2]) {
        let a = [0, 1].map(|al| 0.5 * (self.marginal_a(al, 0) + self.marginal_a(al, 1)));
        let b = [0, 1].map(|be| 0.5 * (self.marginal_b(0, be) + self.marginal_b(1, be)));
        (a, b)
    }

    pub fn correlators(&self) -> [[f64; 2]; 2] {
        [[self.correlator(0, 0), self.correlator(0, 1)], [self.correlator(1, 0), self.correlator(1, 1)]]
    }
}

fn indices() -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..16).map(|k| (k >> 3 & 1, k >> 2 & 1, k >> 1 & 1, k & 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

/// The states prepared for `party` by the other party's measurement,
/// one row per surviving `(beta, b)` of the other party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPM {
    pub party: Party,
    pub records: PmRecordSet,
    /// `(beta, b)` of each row.
    pub conditions: Vec<(usize, usize)>,
    /// `p(b|beta)` of each row.
    pub conditioning: Vec<f64>,
}

impl ConditionalPM {
    /// Reconstructs `p(ab|alpha beta)` from the rows; dropped rows contribute 0.
    pub fn joint(&self) -> BellTable {
        let mut p = [[[[0.0; 2]; 2]; 2]; 2];
        for (k, &(be, b)) in self.conditions.iter().enumerate() {
            let w = self.conditioning[k];
            for al in 0..2 {
                let e = self.records.value(k, al);
                for a in 0..2 {
                    let sign = if a == 0 { 1.0 } else { -1.0 };
                    let v = w * (1.0 + sign * e) / 2.0;
                    match self.party {
                        Party::A => p[al][be][a][b] = v,
                        Party::B => p[be][al][b][a] = v,
                    }
                }
            }
        }
        p
    }
}

/// Largest setting dependence of either party's outcome marginals.
pub fn nonsignaling_check(corr: &BellCorrelation) -> f64 {
    let mut worst: f64 = 0.0;
    for x in 0..2 {
        for o in 0..2 {
            let pa = |be: usize| corr.p[x][be][o][0] + corr.p[x][be][o][1];
            let pb = |al: usize| corr.p[al][x][0][o] + corr.p[al][x][1][o];
            worst = worst.max((pa(0) - pa(1)).abs()).max((pb(0) - pb(1)).abs());
        }
    }
    worst
}

/// Conditional records for `party` with the default signaling tolerance.
pub fn bell_to_conditional(corr: &BellCorrelation, party: Party) -> Result<ConditionalPM> {
    bell_to_conditional_tol(corr, party, EPS)
}

pub fn bell_to_conditional_tol(corr: &BellCorrelation, party: Party, tol: f64) -> Result<ConditionalPM> {
    let local = match party {
        Party::A => corr.clone(),
        Party::B => corr.swap_parties(),
    };
    let p = &local.p;
    let mut rows = Vec::new();
    let mut conditions = Vec::new();
    let mut conditioning = Vec::new();
    for be in 0..2 {
        for b in 0..2 {
            let w = [0, 1].map(|al| p[al][be][0][b] + p[al][be][1][b]);
            let drift = (w[0] - w[1]).abs();
            if drift > tol {
                return Err(Error::Signaling(drift));
            }
            let weight = 0.5 * (w[0] + w[1]);
            if weight <= CONDITIONING_THRESHOLD {
                continue;
            }
            let expectations = (0..2)
                .map(|al| ((p[al][be][0][b] - p[al][be][1][b]) / w[al]).clamp(-1.0, 1.0))
                .collect();
            rows.push(PmRow { label: format!("{b}|{be}"), weight: Some(weight / 2.0), expectations });
            conditions.push((be, b));
            conditioning.push(weight);
        }
    }
    let prefix = match party {
        Party::A => "A",
        Party::B => "B",
    };
    let records = PmRecordSet::new(vec![format!("{prefix}0"), format!("{prefix}1")], rows)?;
    Ok(ConditionalPM { party, records, conditions, conditioning })
}

/// The PR box: `p(ab|alpha beta) = 1/2` iff `a xor b = alpha beta`.
pub fn pr_box() -> BellTable {
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for (al, be, a, b) in indices() {
        if a ^ b == al & be {
            p[al][be][a][b] = 0.5;
        }
    }
    p
}

/// The deterministic box with both outcomes always 0.
pub fn deterministic_box() -> BellTable {
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for (al, be, _, _) in indices().filter(|&(_, _, a, b)| a == 0 && b == 0) {
        p[al][be][0][0] = 1.0;
    }
    p
}

pub fn white_noise() -> BellTable {
    [[[[0.25; 2]; 2]; 2]; 2]
}

/// `x P_PR + y P_L + (1 - x - y) P_w`, validated entry-wise.
pub fn qbell(x: f64, y: f64) -> Result<BellCorrelation> {
    let (pr, l, w) = (pr_box(), deterministic_box(), white_noise());
    let mut p = [[[[0.0; 2]; 2]; 2]; 2];
    for (al, be, a, b) in indices() {
        let v = x * pr[al][be][a][b] + y * l[al][be][a][b] + (1.0 - x - y) * w[al][be][a][b];
        if !(-EPS..=1.0 + EPS).contains(&v) || !v.is_finite() {
            return Err(Error::OutOfDomain { x, y });
        }
        p[al][be][a][b] = v.clamp(0.0, 1.0);
    }
    BellCorrelation::new(p)
}

/// The two parametric example families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    QBell,
    QPM,
}

impl Family {
    /// Conditional or direct record sets of the family member `(x, y)`:
    /// one per party for the Bell family, one for the prepare-and-measure family.
    pub fn records(self, x: f64, y: f64) -> Result<Vec<PmRecordSet>> {
        match self {
            Family::QBell => {
                let q = qbell(x, y)?;
                Ok(vec![bell_to_conditional(&q, Party::A)?.records, bell_to_conditional(&q, Party::B)?.records])
            }
            Family::QPM => Ok(vec![qpm(x, y)?]),
        }
    }

    pub fn is_valid(self, x: f64, y: f64) -> bool {
        match self {
            Family::QBell => qbell(x, y).is_ok(),
            Family::QPM => qpm(x, y).is_ok(),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qbell" | "bell" => Ok(Family::QBell),
            "qpm" | "pm" => Ok(Family::QPM),
            other => Err(Error::Io(format!("unknown family {other}"))),
        }
    }
}

/// Labels of the four prepared states of [`qpm`], in row order.
pub const QPM_LABELS: [&str; 4] = ["0|0", "1|0", "0|1", "1|1"];

/// The prepare-and-measure family: four states and two binary measurements.
/// Rows are `(P, P)`, `(Q, Q)`, `(P, R)`, `(Q, S)` with
/// `P = (1+x+3y)/(2+2y)`, `Q = (1-x-y)/(2-2y)`, `R = (1-x+3y)/(2+2y)`,
/// `S = (1+x-y)/(2-2y)`; preparation weights `(1 +- y)/4`.
pub fn qpm(x: f64, y: f64) -> Result<PmRecordSet> {
    if !(y.abs() < 1.0) {
        return Err(Error::OutOfDomain { x, y });
    }
    let p = (1.0 + x + 3.0 * y) / (2.0 + 2.0 * y);
    let q = (1.0 - x - y) / (2.0 - 2.0 * y);
    let r = (1.0 - x + 3.0 * y) / (2.0 + 2.0 * y);
    let s = (1.0 + x - y) / (2.0 - 2.0 * y);
    if [p, q, r, s].iter().any(|v| !(v.abs() <= 1.0 + EPS)) {
        return Err(Error::OutOfDomain { x, y });
    }
    let c = |v: f64| v.clamp(-1.0, 1.0);
    let values = [[p, p], [q, q], [p, r], [q, s]];
    let weights = [1.0 + y, 1.0 - y, 1.0 + y, 1.0 - y];
    let rows = QPM_LABELS
        .iter()
        .zip(values)
        .zip(weights)
        .map(|((label, v), w)| PmRow { label: label.to_string(), weight: Some(w / 4.0), expectations: vec![c(v[0]), c(v[1])] })
        .collect();
    PmRecordSet::new(vec!["A0".into(), "A1".into()], rows)
}
