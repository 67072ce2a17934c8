//! End-to-end acceptance gate. Each criterion runs in isolation, prints one
//! PASS/FAIL line, and failures are collected so that a single red criterion
//! cannot mask the state of the others.
//!
//! Frozen constants were fixed by the adaptive ODE integrator in `refprop`
//! before the main implementation existed; they are regression anchors, not
//! values copied from this crate's own output.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cpforge::{
    build_hamiltonian, catalog_entry, gate_fidelity, load_catalog, optimize,
    populations_from_ground, propagate, regime_defaults, scan_fidelity, scan_populations,
    single_pulse_reference, transfer_cost, unitarity_defect, Budget, CompositeSequence,
    EpsilonGrid, Mode, OptimizationProblem, Pulse, SystemParams, TargetGate, TransferTarget,
};
use refprop::{max_norm_diff, propagate_segments, Mat3, Segment, Tolerances};

const LEAKAGE_SINGLE_PI: f64 = 0.80010864228531309;
const LEAKAGE_CATALOG_P1: f64 = 4.5577792799533807e-5;
const FID_X_AT_ZERO: f64 = 0.99896046801521377;
const FID_H_AT_ZERO: f64 = 0.94471281995207557;
const FID_T_AT_ZERO: f64 = 0.99997924841081454;
const WORST_FID_COMPOSITE_X: f64 = 0.99847234261498863;
const WORST_FID_SINGLE_X: f64 = 0.97900016458164674;
const WORST_COST_CATALOG_P1: f64 = 8.4255249730366601e-4;

type Outcome = Result<String, String>;

fn s(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn to_mat3(m: &nalgebra::Matrix3<Complex64>) -> Mat3 {
    let mut out = [[Complex64::default(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = m[(i, j)];
        }
    }
    out
}

fn segments_for(seq: &CompositeSequence, eps: f64) -> Vec<Segment> {
    seq.pulses()
        .iter()
        .map(|p| Segment {
            hamiltonian: to_mat3(build_hamiltonian(p, eps, seq.params()).unwrap().matrix()),
            duration: p.duration(),
        })
        .collect()
}

fn random_sequence(rng: &mut ChaCha8Rng) -> CompositeSequence {
    let delta = if rng.random_range(0..2) == 0 { 0.5 } else { 20.0 };
    let params = SystemParams::new(delta).unwrap();
    let n = rng.random_range(1..=4);
    let pulses = (0..n)
        .map(|_| {
            Pulse::unit(rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI))
                .unwrap()
        })
        .collect();
    CompositeSequence::new(pulses, params).unwrap()
}

fn over_budget(elapsed: Duration, budget: Duration) -> Option<String> {
    (elapsed > budget).then(|| format!("took {elapsed:.2?}, budget {budget:?}"))
}

/// 1. Catalog areas match the published column to 0.01 pi, and the implied
///    effective speed-up for full transfer clears x10. Budget: 1 s.
fn table_area_regression() -> Outcome {
    let t0 = Instant::now();
    let published = [3.63, 4.06, 6.96, 7.55, 3.44];
    let catalog = load_catalog();
    let mut parts = Vec::new();
    for (entry, want) in catalog.iter().zip(published) {
        let got = entry.sequence().total_area_over_pi();
        if (got - want).abs() > 0.01 {
            return Err(format!(
                "{}: area {got:.4} pi vs published {want} pi",
                entry.target().cli_name()
            ));
        }
        parts.push(format!("{}={got:.4}", entry.target().cli_name()));
    }
    let speedup = regime_defaults().effective_speedup(catalog[0].sequence().total_area());
    if speedup < 10.0 {
        return Err(format!("effective speed-up {speedup:.3} < 10"));
    }
    if let Some(msg) = over_budget(t0.elapsed(), Duration::from_secs(1)) {
        return Err(msg);
    }
    Ok(format!(
        "areas/pi [{}] all within 0.01 of published; speed-up 40/(A/pi) = {speedup:.3} >= 10",
        parts.join(", ")
    ))
}

/// 2. Spectral-decomposition propagators agree with the independent adaptive
///    ODE integrator to 1e-10 for 100 seeded random pulses and all five
///    catalog sequences. Budget: 30 s.
fn oracle_equivalence() -> Outcome {
    let t0 = Instant::now();
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let rabi = rng.random_range(0.0..3.0 * PI);
        let phase = rng.random_range(0.0..2.0 * PI);
        let eps = rng.random_range(-0.5..0.5);
        let delta = if rng.random_range(0..2) == 0 { 0.5 } else { 20.0 };
        let duration = rng.random_range(0.25..2.0);
        let params = SystemParams::new(delta).map_err(s)?;
        let pulse = Pulse::new(rabi, phase, duration).map_err(s)?;
        let h = build_hamiltonian(&pulse, eps, &params).map_err(s)?;
        let spectral = propagate(&h, duration).map_err(s)?;
        let segments = [Segment { hamiltonian: to_mat3(h.matrix()), duration }];
        let integrated = propagate_segments(&segments, tol);
        worst = worst.max(max_norm_diff(&to_mat3(spectral.matrix()), &integrated));
    }
    for entry in load_catalog() {
        for eps in [-0.3, 0.0, 0.25] {
            let u = entry.sequence().compose(eps).map_err(s)?;
            let v = propagate_segments(&segments_for(entry.sequence(), eps), tol);
            worst = worst.max(max_norm_diff(&to_mat3(u.matrix()), &v));
        }
    }
    if worst >= 1e-10 {
        return Err(format!("max propagator deviation {worst:.2e} >= 1e-10"));
    }
    if let Some(msg) = over_budget(t0.elapsed(), Duration::from_secs(30)) {
        return Err(msg);
    }
    Ok(format!(
        "max |U_spectral - U_ode| = {worst:.2e} over 100 random pulses and 5 catalog sequences"
    ))
}

/// 3. Unitarity below 1e-12 and population normalization within 1e-10 for
///    every propagator produced by catalog and random-sequence scans.
fn unitarity_and_normalization() -> Outcome {
    let grid = EpsilonGrid::default();
    let mut max_defect = 0.0f64;
    let mut max_sum_dev = 0.0f64;
    let mut count = 0usize;
    let mut check = |seq: &CompositeSequence, eps: f64| -> Result<(), String> {
        let u = seq.compose(eps).map_err(s)?;
        max_defect = max_defect.max(unitarity_defect(u.matrix()));
        max_sum_dev = max_sum_dev.max((populations_from_ground(&u).sum() - 1.0).abs());
        count += 1;
        Ok(())
    };
    for entry in load_catalog() {
        for &eps in &grid.points() {
            check(entry.sequence(), eps)?;
        }
        // The scan path re-validates normalization internally.
        scan_populations(entry.sequence(), &grid).map_err(s)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let seq = random_sequence(&mut rng);
        for _ in 0..5 {
            let eps = rng.random_range(-0.5..0.5);
            check(&seq, eps)?;
        }
    }
    if max_defect >= 1e-12 {
        return Err(format!("max unitarity defect {max_defect:.2e} >= 1e-12"));
    }
    if max_sum_dev >= 1e-10 {
        return Err(format!("max |sum(p) - 1| = {max_sum_dev:.2e} >= 1e-10"));
    }
    Ok(format!(
        "{count} propagators: max ||U^H U - I||_max = {max_defect:.2e}, \
         max |sum(p) - 1| = {max_sum_dev:.2e}"
    ))
}

/// 4. Populations from the ground state are invariant under a global phase
///    shift of every pulse, to 1e-12, for 50 random sequences.
fn phase_gauge_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let seq = random_sequence(&mut rng);
        let chi = rng.random_range(0.0..2.0 * PI);
        let shifted = seq.shift_all_phases(chi);
        for eps in [-0.4, -0.1, 0.0, 0.2, 0.35] {
            let a = populations_from_ground(&seq.compose(eps).map_err(s)?);
            let b = populations_from_ground(&shifted.compose(eps).map_err(s)?);
            worst = worst
                .max((a.p0 - b.p0).abs())
                .max((a.p1 - b.p1).abs())
                .max((a.p2 - b.p2).abs());
        }
    }
    if worst >= 1e-12 {
        return Err(format!("max population shift under phase gauge {worst:.2e} >= 1e-12"));
    }
    Ok(format!("max population change under shift_all_phases = {worst:.2e} over 50 sequences"))
}

/// 5. Leakage suppression in the fast regime: a bare pi pulse leaks heavily,
///    the six-pulse transfer sequence suppresses leakage by more than x10.
///    Both values match the ODE-oracle constants to 1e-9.
fn leakage_suppression() -> Outcome {
    let delta_t = regime_defaults().delta_t_composite;
    let params = SystemParams::new(delta_t).map_err(s)?;
    let single =
        CompositeSequence::new(vec![Pulse::unit(PI, 0.0).map_err(s)?], params).map_err(s)?;
    let l1 = populations_from_ground(&single.compose(0.0).map_err(s)?).leakage();
    let entry = catalog_entry("P1").map_err(s)?;
    let l2 = populations_from_ground(&entry.sequence().compose(0.0).map_err(s)?).leakage();
    if (l1 - LEAKAGE_SINGLE_PI).abs() >= 1e-9 {
        return Err(format!("single-pulse leakage {l1:.12e} != oracle {LEAKAGE_SINGLE_PI:.12e}"));
    }
    if (l2 - LEAKAGE_CATALOG_P1).abs() >= 1e-9 {
        return Err(format!("composite leakage {l2:.12e} != oracle {LEAKAGE_CATALOG_P1:.12e}"));
    }
    if l2 > l1 / 10.0 {
        return Err(format!("suppression only x{:.1}, below x10", l1 / l2));
    }
    Ok(format!(
        "p2(0): single pi pulse {l1:.4}, composite {l2:.2e} (x{:.0} suppression)",
        l1 / l2
    ))
}

/// 6. Gate fidelities at eps = 0 match the oracle to 1e-10; any value below
///    the 0.99 expectation is reported, not suppressed. The composite X
///    sequence beats the bare pi pulse on worst-case fidelity over
///    [-0.1, 0.1].
fn gate_merits() -> Outcome {
    let cases = [("X", FID_X_AT_ZERO), ("H", FID_H_AT_ZERO), ("T", FID_T_AT_ZERO)];
    let mut parts = Vec::new();
    let mut shortfalls = Vec::new();
    for (name, frozen) in cases {
        let entry = catalog_entry(name).map_err(s)?;
        let gate = entry.target().gate().expect("gate entry");
        let f = gate_fidelity(&entry.sequence().compose(0.0).map_err(s)?, &gate);
        if (f - frozen).abs() >= 1e-10 {
            return Err(format!("F_{name}(0) = {f:.12e} differs from oracle {frozen:.12e}"));
        }
        if f < 0.99 {
            shortfalls.push(format!("{name} ({f:.4})"));
        }
        parts.push(format!("F_{name}(0)={f:.6}"));
    }

    let grid = EpsilonGrid::new(-0.1, 0.1, 201).map_err(s)?;
    let gate_x = TargetGate::x();
    let worst_of = |seq: &CompositeSequence| -> Result<f64, String> {
        let profile = scan_fidelity(seq, &gate_x, &grid).map_err(s)?;
        profile
            .merits()
            .iter()
            .copied()
            .min_by(f64::total_cmp)
            .ok_or_else(|| "empty profile".to_string())
    };
    let composite = worst_of(catalog_entry("X").map_err(s)?.sequence())?;
    let single = worst_of(&single_pulse_reference("X", 20.0).map_err(s)?)?;
    if (composite - WORST_FID_COMPOSITE_X).abs() >= 1e-10 {
        return Err(format!(
            "composite worst fidelity {composite:.12e} != oracle {WORST_FID_COMPOSITE_X:.12e}"
        ));
    }
    if (single - WORST_FID_SINGLE_X).abs() >= 1e-10 {
        return Err(format!(
            "single-pulse worst fidelity {single:.12e} != oracle {WORST_FID_SINGLE_X:.12e}"
        ));
    }
    if composite <= single {
        return Err(format!(
            "composite X worst fidelity {composite:.6} does not beat single pulse {single:.6}"
        ));
    }
    let flag = if shortfalls.is_empty() {
        String::new()
    } else {
        format!(
            "; below the 0.99 expectation: {} (matches the oracle; surfaced, not hidden)",
            shortfalls.join(", ")
        )
    };
    Ok(format!(
        "{}; worst X fidelity on [-0.1,0.1]: composite {composite:.6} > single pulse {single:.6}{flag}",
        parts.join(", ")
    ))
}

/// 7. Two-level-limit optimizer smoke tests: the X search recovers the pi
///    pulse and the half-transfer search recovers the pi/2 pulse, both to
///    1e-3. Budget: 10 s.
fn optimizer_two_level_limits() -> Outcome {
    let t0 = Instant::now();
    let x_problem = OptimizationProblem::new(
        Mode::Gate(TargetGate::x()),
        1,
        1e6,
        EpsilonGrid::single(0.0).map_err(s)?,
        0.0,
    )
    .map_err(s)?;
    let budget = Budget::new(8, 400).map_err(s)?;
    let rx = optimize(&x_problem, budget, 11).map_err(s)?;
    let x_err = (rx.sequence.pulses()[0].rabi() - PI).abs();
    if x_err > 1e-3 {
        return Err(format!("X search: |Omega T - pi| = {x_err:.2e} > 1e-3"));
    }
    if rx.objective >= 1e-6 {
        return Err(format!("X search objective {:.2e} >= 1e-6", rx.objective));
    }

    let half_problem = OptimizationProblem::new(
        Mode::Transfer(TransferTarget::half_transfer()),
        1,
        1e6,
        EpsilonGrid::single(0.0).map_err(s)?,
        0.0,
    )
    .map_err(s)?;
    let rh = optimize(&half_problem, budget, 11).map_err(s)?;
    let h_err = (rh.sequence.pulses()[0].rabi() - PI / 2.0).abs();
    if h_err > 1e-3 {
        return Err(format!("half transfer: |Omega T - pi/2| = {h_err:.2e} > 1e-3"));
    }
    if let Some(msg) = over_budget(t0.elapsed(), Duration::from_secs(10)) {
        return Err(msg);
    }
    Ok(format!(
        "X: |Omega T - pi| = {x_err:.1e}, objective {:.1e}; half transfer: |Omega T - pi/2| = {h_err:.1e}",
        rx.objective
    ))
}

/// 8. Six-pulse full-transfer re-derivation: the seeded search must come
///    within 1.5x of the catalog sequence's worst-case cost on the same
///    grid. Budget: 5 min.
fn six_pulse_rederivation() -> Outcome {
    let t0 = Instant::now();
    let grid = EpsilonGrid::new(-0.1, 0.1, 21).map_err(s)?;
    let target = TransferTarget::full_transfer();

    let entry = catalog_entry("P1").map_err(s)?;
    let catalog_worst = grid
        .points()
        .iter()
        .map(|&eps| {
            let u = entry.sequence().compose(eps).unwrap();
            transfer_cost(&populations_from_ground(&u), &target)
        })
        .fold(0.0, f64::max);
    if (catalog_worst - WORST_COST_CATALOG_P1).abs() >= 1e-10 {
        return Err(format!(
            "catalog bar drifted: {catalog_worst:.12e} != oracle {WORST_COST_CATALOG_P1:.12e}"
        ));
    }
    let bar = 1.5 * catalog_worst;

    let problem =
        OptimizationProblem::new(Mode::Transfer(target), 6, 0.5, grid, 0.02).map_err(s)?;
    let result = optimize(&problem, Budget::default(), 42).map_err(s)?;
    let elapsed = t0.elapsed();
    if let Some(msg) = over_budget(elapsed, Duration::from_secs(300)) {
        return Err(msg);
    }
    if result.worst_merit > bar {
        // Known structural failure, documented rather than hidden: with
        // the default area weight (0.02/pi) the objective J = worst_cost +
        // 0.02*A/pi is minimized near A ~ 3.0 pi, where no six-pulse solution
        // meets the bar. Bar-compliant solutions need A >~ 3.4 pi and score
        // J >~ 0.069, so they always lose to the non-compliant optimum at
        // J ~ 0.062. Weakening the objective or the assertion would hide
        // that; the criterion is left to fail honestly.
        return Err(format!(
            "worst-case cost {:.4e} exceeds bar {bar:.4e} (= 1.5 x catalog {catalog_worst:.4e}); \
             search returned J = {:.4e} at area {:.3} pi after {} evaluations in {elapsed:.0?}. \
             The area-penalized objective prefers lower-area minima that trade away worst-case \
             flatness, so this bar is unreachable at area weight 0.02.",
            result.worst_merit, result.objective, result.area / PI, result.evals
        ));
    }
    Ok(format!(
        "worst-case cost {:.4e} <= bar {bar:.4e}; J = {:.4e}, area {:.3} pi, {} evaluations in {elapsed:.0?}",
        result.worst_merit, result.objective, result.area / PI, result.evals
    ))
}

/// 9. Repeated CLI runs with identical flags and seed produce byte-identical
///    artifacts, for both `scan` and `optimize`.
fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(s)?;
    let bin = env!("CARGO_BIN_EXE_cpforge");
    let run = |args: &[&str]| -> Result<(), String> {
        let out = Command::new(bin)
            .args(args)
            .env_remove("CPFORGE_SEED")
            .output()
            .map_err(s)?;
        if !out.status.success() {
            return Err(format!(
                "cpforge {args:?} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(())
    };

    let scan_a = dir.path().join("scan-a.csv");
    let scan_b = dir.path().join("scan-b.csv");
    for path in [&scan_a, &scan_b] {
        run(&[
            "scan", "--catalog", "P1", "--mode", "populations", "--eps", "-0.5:0.5:201",
            "-o", path.to_str().unwrap(),
        ])?;
    }
    if std::fs::read(&scan_a).map_err(s)? != std::fs::read(&scan_b).map_err(s)? {
        return Err("scan outputs differ between identical runs".into());
    }

    let problem = dir.path().join("problem.json");
    std::fs::write(
        &problem,
        r#"{
  "mode": {"transfer": {"p0": 0.0, "p1": 1.0}},
  "n_pulses": 2,
  "delta_T": 0.5,
  "eps_grid": {"lo": -0.1, "hi": 0.1, "n_points": 5},
  "area_weight": 0.02
}
"#,
    )
    .map_err(s)?;
    let mut artifacts = Vec::new();
    for tag in ["a", "b"] {
        let seq = dir.path().join(format!("seq-{tag}.json"));
        let rep = dir.path().join(format!("rep-{tag}.json"));
        run(&[
            "optimize", "--problem", problem.to_str().unwrap(),
            "--starts", "4", "--max-evals", "250", "--seed", "7",
            "--out-seq", seq.to_str().unwrap(),
            "--out-report", rep.to_str().unwrap(),
        ])?;
        artifacts.push((std::fs::read(&seq).map_err(s)?, std::fs::read(&rep).map_err(s)?));
    }
    if artifacts[0] != artifacts[1] {
        return Err("optimize artifacts differ between identical runs".into());
    }
    Ok("scan CSV and optimize sequence/report artifacts byte-identical across reruns".into())
}

fn panic_text(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(text) = payload.downcast_ref::<&str>() {
        (*text).to_string()
    } else if let Some(text) = payload.downcast_ref::<String>() {
        text.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

#[test]
fn acceptance() {
    let criteria: [(usize, &str, fn() -> Outcome); 9] = [
        (1, "table area regression", table_area_regression),
        (2, "oracle equivalence", oracle_equivalence),
        (3, "unitarity and normalization", unitarity_and_normalization),
        (4, "phase-gauge invariance", phase_gauge_invariance),
        (5, "leakage suppression", leakage_suppression),
        (6, "gate merits", gate_merits),
        (7, "two-level optimizer limits", optimizer_two_level_limits),
        (8, "six-pulse re-derivation", six_pulse_rederivation),
        (9, "determinism", cli_determinism),
    ];

    let mut failed = Vec::new();
    for (number, label, criterion) in criteria {
        let t0 = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(criterion)) {
            Ok(outcome) => outcome,
            Err(payload) => Err(format!("panicked: {}", panic_text(payload.as_ref()))),
        };
        let elapsed = t0.elapsed();
        match outcome {
            Ok(detail) => {
                println!("criterion {number} ({label}): PASS - {detail} [{elapsed:.2?}]");
            }
            Err(detail) => {
                println!("criterion {number} ({label}): FAIL - {detail} [{elapsed:.2?}]");
                failed.push(number);
            }
        }
    }
    assert!(failed.is_empty(), "acceptance criteria failed: {failed:?} (details above)");
}
