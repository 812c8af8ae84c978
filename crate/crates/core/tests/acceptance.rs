//! Acceptance checks. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero when any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use nalgebra::Vector3;
use rand::Rng;
use rayon::prelude::*;

use qubit_corr_core::criteria::{envelope, povm_feasible, pvm_feasible, GridConfig, MeasurementClass, PmRecordSet};
use qubit_corr_core::entanglement::{entanglement_verdict, EntanglementConfig, SeparabilityVerdict};
use qubit_corr_core::inference::{
    family_margin, gauge_axes, infer_r_region, infer_report, scan_boundary, sm_boundary, solve_state, t_bound,
    ScanConfig, Slice,
};
use qubit_corr_core::oracle::{
    brute_force_feasible, fixture_battery, phi_plus, product_state, random_two_qubit_state, realize_bell, realize_pm,
    BruteForceConfig, Realization,
};
use qubit_corr_core::qubit::{partial_transpose_b, random_povm, random_state, seeded_stream, QubitObservable};
use qubit_corr_core::scenarios::{bell_to_conditional, nonsignaling_check, qbell, qpm, Family, Party, QPM_LABELS};
use qubit_corr_core::witnesses::{bqb_det, npa_arcsin, npa_arcsin_qbell, npa_arcsin_qbell_transcribed, svw_witness};
use qubit_corr_core::{BellCorrelation, EPS};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed <= limit
}

fn pi12() -> BellCorrelation {
    let k = (PI / 12.0).cos();
    BellCorrelation::from_correlators([0.0; 2], [0.0; 2], [[1.0, k], [k, 1.0]]).unwrap()
}

fn ac1() -> Verdict {
    let start = Instant::now();
    let rec = PmRecordSet::from_values(&[[1.0, 1.0], [1.0, -1.0]]).unwrap();
    let pvm = pvm_feasible(&rec, 0, 1, EPS).unwrap();
    let povm = povm_feasible(&rec, 0, 1, &GridConfig::default()).unwrap();
    let w = povm.witness_params.map(|w| (w.r_i, w.r_j));
    let ok = (pvm.max_lower - 1.0).abs() <= 1e-12
        && (pvm.min_upper + 1.0).abs() <= 1e-12
        && !pvm.feasible
        && povm.feasible
        && w == Some((1.0, 0.0));
    let t = start.elapsed();
    verdict(
        ok && within(t, Duration::from_secs(1)),
        format!("max g- = {}, min g+ = {}, povm r = {w:?}, {t:.2?}", pvm.max_lower, pvm.min_upper),
    )
}

fn ac2() -> Verdict {
    let start = Instant::now();
    let cfg = ScanConfig { slice: Slice::XOfY, ..Default::default() };
    let pts = scan_boundary(Family::QBell, MeasurementClass::Pvm, &[0.0], &cfg);
    let t = start.elapsed();
    let Some(p) = pts.first() else {
        return verdict(false, "no boundary point at y = 0");
    };
    let err = (p.x - FRAC_1_SQRT_2).abs();
    verdict(err <= 1e-4 && within(t, Duration::from_secs(10)), format!("x* = {:.7}, |x* - 1/sqrt2| = {err:.1e}, {t:.2?}", p.x))
}

fn ac3() -> Verdict {
    let tsirelson = npa_arcsin(&qbell(FRAC_1_SQRT_2, 0.0).unwrap()).unwrap().value;
    let pr = npa_arcsin(&qbell(1.0, 0.0).unwrap()).unwrap().value;
    let anchors = (tsirelson - PI).abs() <= 1e-9 && (pr - 2.0 * PI).abs() <= 1e-9;
    let (mut reference, mut corrected, mut points) = (0.0f64, 0.0f64, 0);
    for i in 0..50 {
        for j in 0..50 {
            let (x, y) = (i as f64 / 50.0, j as f64 / 50.0);
            let Ok(q) = qbell(x, y) else { continue };
            let Ok(generic) = npa_arcsin(&q) else { continue };
            points += 1;
            reference = reference.max((npa_arcsin_qbell_transcribed(x, y) - generic.value).abs());
            corrected = corrected.max((npa_arcsin_qbell(x, y) - generic.value).abs());
        }
    }
    verdict(
        anchors && reference <= 1e-9,
        format!(
            "value(1/sqrt2, 0) - pi = {:.1e}, value(1, 0) - 2pi = {:.1e}; reference closed form max deviation {reference:.3e} over {points} points (corrected form {corrected:.1e})",
            tsirelson - PI,
            pr - 2.0 * PI
        ),
    )
}

fn ac4() -> Verdict {
    let mut rng = seeded_stream(4, 0);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let (x, y) = (rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0));
        let Ok(rec) = qpm(x, y) else { continue };
        n += 1;
        let got = bqb_det(&rec, QPM_LABELS).unwrap().value;
        let want = (2.0 * x * (x + y - y * y) / (1.0 - y * y).powi(2)).abs();
        worst = worst.max((got - want).abs());
    }
    let sat = bqb_det(&qpm(FRAC_1_SQRT_2, 0.0).unwrap(), QPM_LABELS).unwrap().value;
    verdict(worst <= 1e-9 && (sat - 1.0).abs() <= 1e-9, format!("max deviation {worst:.1e} over 100 points, det at (1/sqrt2, 0) = {sat:.12}"))
}

/// Endpoints of the angle range on which the closed-form boundary is defined.
fn sm_branch() -> Option<(f64, f64)> {
    let n = 100_000;
    let ok: Vec<f64> = (1..n).map(|k| k as f64 * FRAC_PI_2 / n as f64).filter(|&t| sm_boundary(t).is_ok()).collect();
    Some((*ok.first()?, *ok.last()?))
}

fn ac5() -> Verdict {
    let start = Instant::now();
    let Some((lo, hi)) = sm_branch() else {
        return verdict(false, "empty validity branch");
    };
    let grid = GridConfig::default();
    let step = grid.step();
    let thetas: Vec<f64> = (0..20).map(|k| lo + (hi - lo) * (k as f64 + 0.5) / 20.0).collect();
    let rows: Vec<(bool, bool, bool, f64, f64)> = thetas
        .par_iter()
        .map(|&theta| {
            let p = sm_boundary(theta).unwrap();
            let on = family_margin(Family::QBell, MeasurementClass::Povm, p.x, p.y, &grid).unwrap_or(f64::NEG_INFINITY);
            let above = family_margin(Family::QBell, MeasurementClass::Povm, p.x, p.y + 1e-2, &grid).unwrap_or(f64::NEG_INFINITY);
            let rec = bell_to_conditional(&qbell(p.x, p.y).unwrap(), Party::A).unwrap().records;
            let region = infer_r_region(&rec, 0, 1, &grid).unwrap();
            // One sharp measurement, the other with offset r or 1 - r in either labeling.
            let near = |v: f64| (v - p.r).abs() <= step || (v - (1.0 - p.r)).abs() <= step;
            let inside = region.cells.iter().any(|c| (c.r_i.abs() <= step && near(c.r_j)) || (c.r_j.abs() <= step && near(c.r_i)));
            (on >= -1e-6, above < -1e-6, inside, on, above)
        })
        .collect();
    let t = start.elapsed();
    let feasible = rows.iter().filter(|r| r.0).count();
    let infeasible_above = rows.iter().filter(|r| r.1).count();
    let inside = rows.iter().filter(|r| r.2).count();
    let worst_on = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
    let pass = feasible == 20 && infeasible_above == 20 && inside == 20 && within(t, Duration::from_secs(120));
    verdict(
        pass,
        format!(
            "theta in [{lo:.4}, {hi:.4}]: feasible on curve {feasible}/20 (worst margin {worst_on:.2e}), infeasible 0.01 above {infeasible_above}/20, r(theta) in region {inside}/20, {t:.1?}"
        ),
    )
}

/// Counts of violations in one Monte Carlo trial.
#[derive(Default, Clone, Copy)]
struct Tally {
    criterion: usize,
    signaling: usize,
    witness: usize,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally { criterion: self.criterion + o.criterion, signaling: self.signaling + o.signaling, witness: self.witness + o.witness }
    }
}

fn offsets_ok(rec: &PmRecordSet, a: &QubitObservable, b: &QubitObservable, projective: bool) -> bool {
    let pairs = rec.pair_values(0, 1).unwrap();
    let env = envelope(&pairs, a.r(), b.r());
    let mut ok = env.valid && env.margin() >= -EPS;
    if projective {
        ok &= pvm_feasible(rec, 0, 1, EPS).map(|r| r.feasible).unwrap_or(false);
    }
    ok
}

fn pm_trial(k: u64) -> Tally {
    let mut rng = seeded_stream(6, k);
    let projective = k % 2 == 0;
    let observables = vec![random_povm(&mut rng, projective), random_povm(&mut rng, projective)];
    let states = (0..4).map(|_| random_state(&mut rng, k % 3 == 0)).collect();
    let real = Realization { states, observables };
    let rec = realize_pm(&real);
    let mut t = Tally::default();
    if !offsets_ok(&rec, &real.observables[0], &real.observables[1], projective) {
        t.criterion += 1;
    }
    if bqb_det(&rec.to_outcome0_probabilities(), ["rho0", "rho1", "rho2", "rho3"]).unwrap().value > 1.0 + EPS {
        t.witness += 1;
    }
    t
}

fn bell_trial(k: u64) -> Tally {
    let mut rng = seeded_stream(7, k);
    let projective = k % 2 == 0;
    let rho = random_two_qubit_state(&mut rng, k % 3 == 0);
    let a = [random_povm(&mut rng, projective), random_povm(&mut rng, projective)];
    let b = [random_povm(&mut rng, projective), random_povm(&mut rng, projective)];
    let corr = realize_bell(&rho, &a, &b).unwrap();
    let mut t = Tally::default();
    if nonsignaling_check(&corr) > EPS {
        t.signaling += 1;
        return t;
    }
    if svw_witness(&corr).value > 2.0 + EPS {
        t.witness += 1;
    }
    for (party, obs) in [(Party::A, &a), (Party::B, &b)] {
        let rec = bell_to_conditional(&corr, party).unwrap().records;
        if !offsets_ok(&rec, &obs[0], &obs[1], projective) {
            t.criterion += 1;
        }
    }
    t
}

fn ac6() -> Verdict {
    let start = Instant::now();
    let n = 100_000u64;
    let pm = (0..n).into_par_iter().map(pm_trial).reduce(Tally::default, |a, b| a + b);
    let bell = (0..n).into_par_iter().map(bell_trial).reduce(Tally::default, |a, b| a + b);
    // The grid search itself on a subsample of the prepare-and-measure trials.
    let grid = GridConfig::default();
    let searched = (0..500u64)
        .into_par_iter()
        .filter(|&k| {
            let mut rng = seeded_stream(6, k);
            let projective = k % 2 == 0;
            let observables = vec![random_povm(&mut rng, projective), random_povm(&mut rng, projective)];
            let states = (0..4).map(|_| random_state(&mut rng, k % 3 == 0)).collect();
            let rec = realize_pm(&Realization { states, observables });
            !povm_feasible(&rec, 0, 1, &grid).unwrap().feasible
        })
        .count();
    let t = start.elapsed();
    let total = pm + bell;
    let pass = total.criterion == 0 && total.signaling == 0 && total.witness == 0 && searched == 0 && within(t, Duration::from_secs(120));
    verdict(
        pass,
        format!(
            "{n} PM + {n} Bell trials: criterion {}, signaling {}, witness {}; grid search misses {searched}/500, {t:.1?}",
            total.criterion, total.signaling, total.witness
        ),
    )
}

fn ac7() -> Verdict {
    let start = Instant::now();
    let grid = GridConfig::default();
    let cases = fixture_battery(5);
    let disagreements: Vec<String> = cases
        .par_iter()
        .filter_map(|case| {
            let bf = brute_force_feasible(&case.records, &BruteForceConfig::default()).unwrap().feasible;
            let cr = povm_feasible(&case.records, 0, 1, &grid).unwrap().feasible;
            (bf != cr).then(|| format!("{} (brute force {bf}, criterion {cr})", case.name))
        })
        .collect();
    let n_feasible = cases.iter().filter(|c| c.constructed_feasible).count();
    verdict(
        disagreements.is_empty() && cases.len() == 50,
        format!(
            "{} cases ({n_feasible} constructed feasible), {} disagreements {:?}, {:.1?}",
            cases.len(),
            disagreements.len(),
            disagreements,
            start.elapsed()
        ),
    )
}

fn ac8() -> Verdict {
    let grid = GridConfig::default();
    let k = (PI / 12.0).cos();
    let rec = bell_to_conditional(&pi12(), Party::A).unwrap().records;
    let rep = infer_report(&rec, 0, 1, &grid, false).unwrap();
    let c_ok = rep.unique && rep.c.is_some_and(|c| c.width() < 1e-6 && c.contains(k, 1e-6));
    let minimal = PmRecordSet::from_values(&[[1.0, 1.0], [1.0, -1.0]]).unwrap();
    let m = infer_report(&minimal, 0, 1, &grid, false).unwrap();
    let m_ok = m.unique && m.r == Some([1.0, 0.0]) && m.r_prime.is_some_and(|rp| rp[1].lo == 1.0 && rp[1].hi == 1.0);
    verdict(
        c_ok && m_ok,
        format!("pi/12: unique {} c = {:?}; minimal: unique {} r = {:?} r'_1 = {:?}", rep.unique, rep.c, m.unique, m.r, m.r_prime.map(|r| r[1])),
    )
}

fn ac9() -> Verdict {
    let mut rng = seeded_stream(9, 0);
    let (mut worst_fit, mut worst_norm, mut n) = (0.0f64, 0.0f64, 0);
    while n < 1000 {
        let c: f64 = rng.gen_range(-0.999..0.999);
        let (a0, a1): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if a0 * a0 + a1 * a1 + c * c - 2.0 * c * a0 * a1 > 1.0 {
            continue;
        }
        n += 1;
        let (x0, x1) = gauge_axes(c);
        let sol = solve_state(a0, a1, &x0, &x1).unwrap();
        let tb = t_bound(a0, a1, c).unwrap();
        for t in [-tb, -0.5 * tb, 0.0, 0.3 * tb, tb] {
            let s: Vector3<f64> = sol.base + sol.direction * t;
            worst_fit = worst_fit.max((x0.dot(&s) - a0).abs()).max((x1.dot(&s) - a1).abs());
            if t.abs() == tb {
                worst_norm = worst_norm.max((s.norm() - 1.0).abs());
            }
        }
    }
    verdict(worst_fit <= 1e-12 && worst_norm <= 1e-9, format!("1000 cases: max expectation error {worst_fit:.1e}, max ||s(+-t)| - 1| {worst_norm:.1e}"))
}

fn ac10() -> Verdict {
    let start = Instant::now();
    let cfg = EntanglementConfig::default();
    let rep = entanglement_verdict(&pi12(), &cfg).unwrap();
    let plateau = rep.residual > 10.0 * cfg.projection.tol;
    let entangled = rep.verdict == SeparabilityVerdict::Entangled && plateau;

    let obs = |t: f64| QubitObservable::projective(Vector3::new(t.sin(), 0.0, t.cos())).unwrap();
    let angles = [PI / 4.0, PI / 3.0];
    let local = angles.map(obs);
    let rho = phi_plus();
    let corr = realize_bell(&rho, &local, &local).unwrap();
    let target = pi12();
    let (ma, mb) = corr.marginals();
    let (ta, tb) = target.marginals();
    let (c, tc) = (corr.correlators(), target.correlators());
    let fit = (0..2)
        .flat_map(|i| [(ma[i] - ta[i]).abs(), (mb[i] - tb[i]).abs(), (c[i][0] - tc[i][0]).abs(), (c[i][1] - tc[i][1]).abs()])
        .fold(0.0f64, f64::max);
    let min_pt = partial_transpose_b(&rho).symmetric_eigenvalues().min();

    let mut rng = seeded_stream(10, 0);
    let mut product_ok = 0;
    let n_products = 10;
    for _ in 0..n_products {
        let rho = product_state(&random_state(&mut rng, false), &random_state(&mut rng, false));
        let a = [random_povm(&mut rng, false), random_povm(&mut rng, false)];
        let b = [random_povm(&mut rng, false), random_povm(&mut rng, false)];
        let corr = realize_bell(&rho, &a, &b).unwrap();
        if entanglement_verdict(&corr, &cfg).is_ok_and(|r| r.verdict == SeparabilityVerdict::SeparableFeasible) {
            product_ok += 1;
        }
    }
    let t = start.elapsed();
    verdict(
        entangled && fit <= 1e-9 && min_pt <= -0.49 && product_ok == n_products && within(t, Duration::from_secs(60)),
        format!(
            "pi/12 verdict {:?} residual {:.3e}; phi+ fit {fit:.1e}, min eig rho^TB {min_pt:.3}; product fixtures separable {product_ok}/{n_products}, {t:.1?}",
            rep.verdict, rep.residual
        ),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Verdict); 10] = [
        ("AC1", "sharp/unsharp separation", ac1),
        ("AC2", "Tsirelson threshold", ac2),
        ("AC3", "arcsin witness", ac3),
        ("AC4", "determinant witness", ac4),
        ("AC5", "closed-form boundary", ac5),
        ("AC6", "Monte Carlo soundness", ac6),
        ("AC7", "oracle equivalence", ac7),
        ("AC8", "inference uniqueness", ac8),
        ("AC9", "state reconstruction", ac9),
        ("AC10", "entanglement pipeline", ac10),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!("[{}] {id} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
