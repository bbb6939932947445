//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rdcdyn::ensemble::{assemble, validate, ValidationReport, ValidationThresholds};
use rdcdyn::fit::{rdc_rmsd, rdc_rmsd_raw, svd_fit, svd_fit_with, Weighting};
use rdcdyn::profile::{
    classify_fragment, compute_full_profile, detect_onset, Classification, Direction, FragmentMode, OnsetConfig,
};
use rdcdyn::scenario::{self, arc_media, three_state_media, Scenario, UncorrelatedSpec};
use rdcdyn::sim::{simulate_dynamics, Medium, RdcSet};
use rdcdyn::solver::{
    degeneracy_check, feasible, hz_scale, parsimonious_solve, solve, AnchorSet, DegeneracyThresholds, SolverConfig,
    StateSolution,
};
use rdcdyn::structure::{
    helix40, kabsch_rmsd_points, translation_only_rmsd_points, DomainRange, Point, VectorRecord,
};
use rdcdyn::tensor::{tensor_from_principal, PrincipalFrame};
use rdcdyn::{DmaxTable, Error, EulerAngles, SaupeTensor, VectorType};

/// Half-width of the uniform RDC noise, Hz.
const NOISE: f64 = 1.0;
const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Outcome;

struct Run {
    solution: StateSolution,
    report: ValidationReport,
}

fn run(sc: &Scenario, media: &[Medium], noise: f64, n: usize) -> Run {
    let dmax = DmaxTable::default();
    let rdcs = sc.simulate(media, noise, SEED, &dmax).expect("simulate");
    let (set, _) = sc.anchor_set(&rdcs, &dmax).expect("anchor fits");
    let solution = solve(&set, n, &SolverConfig::default()).expect("solve");
    let report = validated(sc, &set, &solution);
    Run { solution, report }
}

fn validated(sc: &Scenario, set: &AnchorSet, solution: &StateSolution) -> ValidationReport {
    let ens = assemble(&sc.template, &sc.static_domain(), &sc.dynamic_domain(), &set.frame_id, solution).expect("assemble");
    validate(&ens, &sc.model.states, Some(&sc.model.occupancies), &ValidationThresholds::default()).expect("validate")
}

fn rmsd_of(report: &ValidationReport, target: usize) -> f64 {
    report.for_target(target).map_or(f64::INFINITY, |s| s.rmsd_upper_bound)
}

fn occ_err(report: &ValidationReport, target: usize) -> f64 {
    report
        .for_target(target)
        .and_then(|s| s.occupancy_error)
        .unwrap_or(f64::INFINITY)
}

fn fmt_occ(occ: &[f64]) -> String {
    occ.iter().map(|o| format!("{:.0}", o * 100.0)).collect::<Vec<_>>().join("/")
}

fn c1_closed_loop() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut failures = Vec::new();
    for _ in 0..12 {
        let angle: f64 = rng.random_range(30.0..=120.0);
        let rho: f64 = rng.random_range(0.2..=0.8);
        let sc = Scenario::arc(angle, [rho, 1.0 - rho]).unwrap();
        let r = run(&sc, &arc_media(), 0.0, 2);
        let rmsd = rmsd_of(&r.report, 0).max(rmsd_of(&r.report, 1));
        let occ = occ_err(&r.report, 0).max(occ_err(&r.report, 1));
        worst = (worst.0.max(rmsd), worst.1.max(occ), worst.2.max(r.solution.hz_minimum));
        if rmsd > 0.1 || occ > 0.02 || r.solution.hz_minimum > 1e-3 {
            failures.push(format!("{angle:.1}deg rho {rho:.2}"));
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        failures.is_empty() && elapsed <= Duration::from_secs(60),
        format!(
            "12 arcs: worst rmsd {:.2e} A, occupancy error {:.2e}, minimum {:.2e} Hz, {:.1} s{}",
            worst.0,
            worst.1,
            worst.2,
            elapsed.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; failed {failures:?}") }
        ),
    )
}

fn c2_arc_sweep() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for rho in [0.5, 0.6, 0.7, 0.8, 0.9] {
        let sc = Scenario::arc(60.0, [rho, 1.0 - rho]).unwrap();
        let r = run(&sc, &arc_media(), NOISE, 2);
        let (r1, r2) = (rmsd_of(&r.report, 0), rmsd_of(&r.report, 1));
        let d = occ_err(&r.report, 0).max(occ_err(&r.report, 1));
        let cell = if rho < 0.85 {
            r.solution.hz_minimum <= 1.0 && r1 <= 2.0 && r2 <= 2.0 && d <= 0.15
        } else {
            r1 <= 1.0
        };
        ok &= cell;
        parts.push(format!(
            "{} {:.2}Hz {:.2}/{:.2}A d{:.2}{}",
            fmt_occ(&sc.model.occupancies),
            r.solution.hz_minimum,
            r1,
            r2,
            d,
            if cell { "" } else { " !" }
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed <= Duration::from_secs(600);
    Outcome::new(ok, format!("{} ({:.1} s)", parts.join("; "), elapsed.as_secs_f64()))
}

fn c3_small_arc() -> Outcome {
    let dmax = DmaxTable::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for rho in [0.5, 0.6, 0.7, 0.8, 0.9] {
        let sc = Scenario::arc(15.0, [rho, 1.0 - rho]).unwrap();
        let rdcs = sc.simulate(&arc_media(), NOISE, SEED, &dmax).unwrap();
        let onsets: Vec<Option<i32>> = [Direction::Forward, Direction::Backward]
            .iter()
            .map(|&d| {
                let p = compute_full_profile(&sc.template, &rdcs, d, NOISE, &dmax).unwrap();
                detect_onset(&p, &OnsetConfig::default()).unwrap().onset
            })
            .collect();
        let (set, _) = sc.anchor_set(&rdcs, &dmax).unwrap();
        let sol = solve(&set, 2, &SolverConfig::default()).unwrap();
        let rep = validated(&sc, &set, &sol);
        let r1 = rmsd_of(&rep, 0);
        let cell = onsets.iter().all(Option::is_none) && r1 <= 1.0;
        ok &= cell;
        parts.push(format!(
            "{} onsets {:?} state1 {:.2}A state2 {:.2}A{}",
            fmt_occ(&sc.model.occupancies),
            onsets,
            r1,
            rmsd_of(&rep, 1),
            if cell { "" } else { " !" }
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

const THREE_STATE_SETS: [[f64; 3]; 3] = [[0.5, 0.25, 0.25], [0.34, 0.33, 0.33], [0.5, 0.3, 0.2]];

/// Criterion 4 check on one solution: (passed, summary).
fn three_state_quality(sc: &Scenario, sol: &StateSolution, rep: &ValidationReport) -> (bool, String) {
    let rmsd = (0..3).map(|t| rmsd_of(rep, t)).fold(0.0, f64::max);
    let d = (0..3).map(|t| occ_err(rep, t)).fold(0.0, f64::max);
    let ok = sol.n == 3 && sol.hz_minimum <= 0.5 && rmsd <= 2.0 && d <= 0.20;
    (
        ok,
        format!(
            "{} {:.2}Hz worst {:.2}A d{:.2}{}",
            fmt_occ(&sc.model.occupancies),
            sol.hz_minimum,
            rmsd,
            d,
            if ok { "" } else { " !" }
        ),
    )
}

fn c4_three_state() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for occ in THREE_STATE_SETS {
        let sc = Scenario::three_state(occ).unwrap();
        let r = run(&sc, &three_state_media(), NOISE, 3);
        let (cell, text) = three_state_quality(&sc, &r.solution, &r.report);
        ok &= cell;
        parts.push(text);
    }
    Outcome::new(ok, parts.join("; "))
}

fn c5_model_order() -> Outcome {
    let dmax = DmaxTable::default();
    let cfg = SolverConfig::default();
    let mut ok = true;
    let mut parts = Vec::new();
    for occ in [[0.34, 0.33, 0.33], [0.5, 0.25, 0.25], [0.5, 0.3, 0.2]] {
        let sc = Scenario::three_state(occ).unwrap();
        let rdcs = sc.simulate(&three_state_media(), NOISE, SEED, &dmax).unwrap();
        let (set, _) = sc.anchor_set(&rdcs, &dmax).unwrap();
        let two = solve(&set, 2, &cfg).unwrap();
        let pars = parsimonious_solve(&set, 3, NOISE, &cfg).unwrap();
        let tried: Vec<usize> = pars.diagnostics.attempts.iter().map(|a| a.states).collect();
        let escalated = pars.n == 3 && tried.starts_with(&[2, 3]) && pars.diagnostics.satisfied == Some(true);
        let (quality, text) = three_state_quality(&sc, &pars, &validated(&sc, &set, &pars));
        let cell = two.hz_minimum >= 1.5 && escalated && quality;
        ok &= cell;
        parts.push(format!(
            "n=2 {:.2}Hz, escalation {:?} -> n={}{}, then {}",
            two.hz_minimum,
            tried,
            pars.n,
            if escalated { "" } else { " !" },
            text
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

fn c6_phantoms() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for sc in [Scenario::arc(60.0, [0.5, 0.5]).unwrap(), Scenario::complex([0.5, 0.5]).unwrap()] {
        let r = run(&sc, &three_state_media(), NOISE, 3);
        let (r1, r2) = (rmsd_of(&r.report, 0), rmsd_of(&r.report, 1));
        let phantom = r.report.unmatched.first().copied();
        let phantom_rho = phantom.map_or(f64::INFINITY, |i| r.solution.states[i].occupancy);
        let flagged = phantom.is_some_and(|i| r.solution.diagnostics.phantom_states == vec![i]);
        let cell = r1 <= 1.0 && r2 <= 1.0 && phantom_rho <= 0.05 && flagged;
        ok &= cell;
        parts.push(format!(
            "{} {:.2}/{:.2}A phantom rho {:.3} flagged {}{}",
            sc.name,
            r1,
            r2,
            phantom_rho,
            flagged,
            if cell { "" } else { " !" }
        ));
    }
    Outcome::new(ok, parts.join("; "))
}

fn c7_feasibility() -> Outcome {
    let mut mismatches = 0;
    for m in 1..=10usize {
        for n in 1..=10usize {
            if feasible(m, n) != (5 * m as i64 >= 4 * n as i64 - 1) {
                mismatches += 1;
            }
        }
    }
    let t = tensor_from_principal(&PrincipalFrame::new(3e-4, 5e-4, -8e-4, 0.0, 0.0, 0.0)).unwrap();
    let mut refused = 0;
    let combos = [(1usize, 2usize), (2, 3), (3, 5), (4, 6)];
    for (m, n) in combos {
        let set = AnchorSet::new((0..m).map(|j| format!("m{j}")).collect(), vec![t; m], vec![t; m], "f").unwrap();
        if let Err(Error::Infeasible { media, states }) = solve(&set, n, &SolverConfig::default()) {
            refused += usize::from(media == m && states == n);
        }
    }
    Outcome::new(
        mismatches == 0 && refused == combos.len(),
        format!("100 (m, n) pairs, {mismatches} mismatches; {refused}/{} infeasible solves refused", combos.len()),
    )
}

fn c8_hz_scale() -> Outcome {
    // (objective minimum, reported Hz)
    let pairs = [(9.13e-11, 0.23), (1.25e-10, 0.27), (1.31e-10, 0.28), (2.37e-10, 0.37)];
    let errors: Vec<f64> = pairs.iter().map(|(f, hz)| (hz_scale(*f) - hz).abs()).collect();
    let worst = errors.iter().cloned().fold(0.0, f64::max);
    Outcome::new(
        worst <= 0.05,
        format!(
            "{} -> worst deviation {worst:.4} Hz",
            pairs.iter().map(|(f, _)| format!("{:.3}", hz_scale(*f))).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn c9_degeneracy() -> Outcome {
    let dmax = DmaxTable::default();
    let mut verdicts = Vec::new();
    for angle in [90.0, 60.0] {
        let sc = Scenario::arc(angle, [0.5, 0.5]).unwrap();
        let rdcs = sc.simulate(&arc_media(), NOISE, SEED, &dmax).unwrap();
        let (set, _) = sc.anchor_set(&rdcs, &dmax).unwrap();
        let r = degeneracy_check(&set.observed, &DegeneracyThresholds::default()).unwrap();
        verdicts.push((angle, r));
    }
    let ok = verdicts[0].1.flagged && !verdicts[1].1.flagged;
    Outcome::new(
        ok,
        verdicts
            .iter()
            .map(|(a, r)| {
                format!(
                    "{a}deg eta {:?} axes {:.1}deg flagged {}",
                    r.asymmetry.iter().map(|e| (e * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
                    r.max_axis_angle,
                    r.flagged
                )
            })
            .collect::<Vec<_>>()
            .join("; "),
    )
}

fn c10_profiles() -> Outcome {
    let dmax = DmaxTable::default();
    let cfg = OnsetConfig::default();
    let h = helix40();
    let mut ok = true;
    let mut parts = Vec::new();

    let fixed = Scenario::from_states("static", &h, vec![h.clone()], &[1.0], DomainRange::new(1, 26).unwrap(), DomainRange::new(30, 40).unwrap()).unwrap();
    let rdcs = fixed.simulate(&arc_media(), NOISE, SEED, &dmax).unwrap();
    for dir in [Direction::Forward, Direction::Backward] {
        let p = compute_full_profile(&h, &rdcs, dir, NOISE, &dmax).unwrap();
        let tail: Vec<f64> = p.points[p.points.len() / 2..].iter().map(|x| x.rmsd_hz).collect();
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(0.0, f64::max);
        let v = detect_onset(&p, &cfg).unwrap();
        let cell = lo >= 0.3 && hi <= 1.0 && v.classification == Classification::Typical;
        ok &= cell;
        parts.push(format!("static {dir} plateau {lo:.2}-{hi:.2}Hz {:?}", v.classification));
    }

    let arc = Scenario::arc(60.0, [0.5, 0.5]).unwrap();
    let rdcs = arc.simulate(&arc_media(), NOISE, SEED, &dmax).unwrap();
    for dir in [Direction::Forward, Direction::Backward] {
        let p = compute_full_profile(&h, &rdcs, dir, NOISE, &dmax).unwrap();
        let onset = detect_onset(&p, &cfg).unwrap().onset;
        let cell = onset.is_some_and(|o| (o - scenario::ARC_HINGE).abs() <= 3);
        ok &= cell;
        parts.push(format!("arc {dir} onset {onset:?} (hinge {})", scenario::ARC_HINGE));
    }

    let spec = UncorrelatedSpec::default();
    let model = scenario::uncorrelated(&h, &spec).unwrap();
    let rdcs: Vec<RdcSet> = simulate_dynamics(&model, &arc_media(), &VectorType::ALL, NOISE, SEED, &dmax).unwrap();
    let fragment = DomainRange::new(spec.first + 2, 40).unwrap();
    let mode = classify_fragment(&h, &rdcs, &fragment, Direction::Forward, NOISE, &dmax, &cfg).unwrap();
    ok &= mode == FragmentMode::Uncorrelated;
    parts.push(format!("uncorrelated fragment {}-{} {mode:?}", fragment.start, fragment.end));
    Outcome::new(ok, parts.join("; "))
}

fn random_tensor(rng: &mut ChaCha8Rng) -> SaupeTensor {
    let sxx: f64 = rng.random_range(-1e-3..1e-3);
    let syy: f64 = rng.random_range(-1e-3..1e-3);
    let e = EulerAngles::new(rng.random_range(-180.0..180.0), rng.random_range(0.0..180.0), rng.random_range(-180.0..180.0));
    SaupeTensor::diagonal(sxx, syy).rotate(&e)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

fn c11_fit_optimality() -> Outcome {
    let dmax = DmaxTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut beaten = 0;
    let mut worst_recovery = 0.0f64;
    for _ in 0..200 {
        let truth = random_tensor(&mut rng);
        let count = rng.random_range(20..40);
        let vectors: Vec<VectorRecord> = (0..count)
            .map(|i| VectorRecord {
                residue: i,
                vector_type: VectorType::ALL[rng.random_range(0..4)],
                vector: random_unit(&mut rng),
            })
            .collect();
        let mut clean = RdcSet::new("m").unwrap();
        let mut noisy = RdcSet::new("m").unwrap();
        for v in &vectors {
            let d = dmax.get(v.vector_type) * (v.vector.transpose() * truth.matrix() * v.vector)[0];
            clean.insert(v.residue, v.vector_type, d, None).unwrap();
            noisy.insert(v.residue, v.vector_type, d + rng.random_range(-1.0..=1.0), None).unwrap();
        }
        for w in [Weighting::Unweighted, Weighting::NhScaled] {
            let exact = svd_fit_with(&vectors, &clean, &dmax, w).unwrap();
            worst_recovery = worst_recovery.max((exact.tensor.matrix() - truth.matrix()).norm());
        }
        // Each weighting must be optimal for the rmsd it minimizes.
        let fit = svd_fit_with(&vectors, &noisy, &dmax, Weighting::NhScaled).unwrap();
        let raw_fit = svd_fit(&vectors, &noisy, &dmax).unwrap();
        for _ in 0..100 {
            let other = random_tensor(&mut rng);
            let scaled = rdc_rmsd(&other, &vectors, &noisy, &dmax).unwrap();
            let raw = rdc_rmsd_raw(&other, &vectors, &noisy, &dmax).unwrap();
            if scaled < fit.rdc_rmsd || raw < raw_fit.rdc_rmsd_raw {
                beaten += 1;
            }
        }
    }
    Outcome::new(
        beaten == 0 && worst_recovery <= 1e-8,
        format!("20000 competitors, {beaten} beat the fit; worst noiseless recovery {worst_recovery:.2e}"),
    )
}

/// Rotation minimizing the centred RMSD by refined search over unit quaternions.
fn quaternion_grid_rmsd(a: &[Point], b: &[Point]) -> f64 {
    let ca = a.iter().sum::<Point>() / a.len() as f64;
    let cb = b.iter().sum::<Point>() / b.len() as f64;
    let a: Vec<Point> = a.iter().map(|p| p - ca).collect();
    let b: Vec<Point> = b.iter().map(|p| p - cb).collect();
    let cost = |q: &Quaternion<f64>| -> f64 {
        let r: Matrix3<f64> = UnitQuaternion::from_quaternion(*q).to_rotation_matrix().into_inner();
        a.iter().zip(&b).map(|(p, t)| (r * p - t).norm_squared()).sum::<f64>()
    };
    let steps = 8;
    let mut best = (f64::INFINITY, Quaternion::identity());
    for i in 0..=steps {
        for j in 0..=steps {
            for k in 0..=steps {
                for l in 0..=steps {
                    let g = |x: i32| -1.0 + 2.0 * x as f64 / steps as f64;
                    let q = Quaternion::new(g(i), g(j), g(k), g(l));
                    if q.norm() < 1e-9 {
                        continue;
                    }
                    let c = cost(&q);
                    if c < best.0 {
                        best = (c, q);
                    }
                }
            }
        }
    }
    let mut step = 0.25;
    while step > 1e-12 {
        let mut improved = false;
        for axis in 0..4 {
            for sign in [-1.0, 1.0] {
                let mut q = best.1;
                q.coords[axis] += sign * step;
                let c = cost(&q);
                if c < best.0 {
                    best = (c, q);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (best.0 / a.len() as f64).sqrt()
}

fn c12_rmsd_tools() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let h = helix40();
    let base: Vec<Point> = h
        .backbone_coords(&DomainRange::new(1, 12).unwrap())
        .unwrap()
        .into_iter()
        .map(|c| c.2)
        .collect();
    let perturbed = |rng: &mut ChaCha8Rng, jitter: f64| -> Vec<Point> {
        let q = UnitQuaternion::from_quaternion(Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ));
        let shift = Point::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        base.iter()
            .map(|p| {
                q * p + shift + Point::new(rng.random_range(-jitter..jitter), rng.random_range(-jitter..jitter), rng.random_range(-jitter..jitter))
            })
            .collect()
    };
    let mut violations = 0;
    for _ in 0..1000 {
        let jitter = rng.random_range(0.0..2.0);
        let other = perturbed(&mut rng, jitter);
        if translation_only_rmsd_points(&base, &other) + 1e-12 < kabsch_rmsd_points(&base, &other) {
            violations += 1;
        }
    }
    let identity = kabsch_rmsd_points(&base, &base).max(translation_only_rmsd_points(&base, &base));
    let mut worst_oracle = 0.0f64;
    for _ in 0..20 {
        let other = perturbed(&mut rng, 0.5);
        let diff = (kabsch_rmsd_points(&base, &other) - quaternion_grid_rmsd(&base, &other)).abs();
        worst_oracle = worst_oracle.max(diff);
    }
    Outcome::new(
        violations == 0 && identity < 1e-12 && worst_oracle <= 1e-6,
        format!("{violations}/1000 upper-bound violations; identity {identity:.1e}; oracle deviation {worst_oracle:.1e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 12] = [
        ("closed-loop exactness", c1_closed_loop),
        ("60 degree arc sweep", c2_arc_sweep),
        ("15 degree arc negative result", c3_small_arc),
        ("3-state recovery", c4_three_state),
        ("model-order detection", c5_model_order),
        ("phantom states", c6_phantoms),
        ("feasibility gate", c7_feasibility),
        ("Hz calibration", c8_hz_scale),
        ("90 degree degeneracy", c9_degeneracy),
        ("dynamic-profile shape", c10_profiles),
        ("SVD fit optimality", c11_fit_optimality),
        ("RMSD tools", c12_rmsd_tools),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {:>2} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| label.contains(f.as_str())) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if !outcome.passed {
            failed += 1;
        }
        println!("{} {label}: {}", if outcome.passed { "PASS" } else { "FAIL" }, outcome.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
