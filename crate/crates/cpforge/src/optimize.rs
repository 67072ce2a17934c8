//! Multi-start derivative-free search over pulse amplitudes and phases.
//!
//! The objective is minimax over the error grid — worst per-eps transfer
//! cost or gate infidelity — plus an area penalty rewarding fast sequences.
//! Local descent is a Nelder-Mead simplex with dimension-adapted
//! coefficients, restarted at its own incumbent until the evaluation budget
//! runs out or a restart stops improving. Everything is evaluated serially
//! in a fixed order, so a given (problem, budget, seed) triple reproduces
//! bit-identical results.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    gate_fidelity, populations_from_ground, standard_gate, transfer_cost, TargetGate,
    TransferTarget,
};
use crate::model::{build_hamiltonian, propagate, Propagator3, Pulse, SystemParams};
use crate::scan::EpsilonGrid;
use crate::sequence::CompositeSequence;

/// What the search optimizes for.
#[derive(Clone, Debug)]
pub enum Mode {
    /// Minimize worst |P0 - p0| + |P1 - p1| over the grid.
    Transfer(TransferTarget),
    /// Minimize worst 1 - F over the grid.
    Gate(TargetGate),
}

/// Search space and objective weights for one sequence search. All pulses
/// have unit duration; amplitudes live in [0, omega_max].
#[derive(Clone, Debug)]
pub struct OptimizationProblem {
    mode: Mode,
    n_pulses: usize,
    params: SystemParams,
    eps_grid: EpsilonGrid,
    area_weight: f64,
    omega_max: f64,
}

pub const DEFAULT_AREA_WEIGHT: f64 = 0.02;
pub const DEFAULT_OMEGA_MAX: f64 = 2.0 * PI;

impl OptimizationProblem {
    pub fn new(
        mode: Mode,
        n_pulses: usize,
        delta_t: f64,
        eps_grid: EpsilonGrid,
        area_weight: f64,
    ) -> Result<Self> {
        if n_pulses < 1 {
            return Err(Error::InvalidProblem("need at least one pulse".into()));
        }
        if !eps_grid.has_zero_node() {
            return Err(Error::InvalidProblem(
                "the error grid must contain eps = 0".into(),
            ));
        }
        if !(area_weight >= 0.0) || !area_weight.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "area weight must be a non-negative real, got {area_weight}"
            )));
        }
        Ok(Self {
            mode,
            n_pulses,
            params: SystemParams::new(delta_t)?,
            eps_grid,
            area_weight,
            omega_max: DEFAULT_OMEGA_MAX,
        })
    }

    pub fn with_omega_max(mut self, omega_max: f64) -> Result<Self> {
        if !(omega_max > 0.0) || !omega_max.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "amplitude bound must be positive, got {omega_max}"
            )));
        }
        self.omega_max = omega_max;
        Ok(self)
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn n_pulses(&self) -> usize {
        self.n_pulses
    }

    pub fn delta_t(&self) -> f64 {
        self.params.delta()
    }

    pub fn eps_grid(&self) -> &EpsilonGrid {
        &self.eps_grid
    }

    pub fn area_weight(&self) -> f64 {
        self.area_weight
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    /// Vector length with the first phase gauge-fixed to 0.
    pub fn gauge_fixed_len(&self) -> usize {
        2 * self.n_pulses - 1
    }

    /// Vector length carrying every phase explicitly.
    pub fn full_len(&self) -> usize {
        2 * self.n_pulses
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ProblemFile = serde_json::from_str(text)?;
        let mode = match file.mode {
            ModeSpec::Transfer { p0, p1 } => Mode::Transfer(TransferTarget::new(p0, p1)?),
            ModeSpec::Gate(name) => Mode::Gate(standard_gate(&name)?),
        };
        Self::new(mode, file.n_pulses, file.delta_t, file.eps_grid, file.area_weight)?
            .with_omega_max(file.omega_max_over_pi * PI)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk problem description; amplitudes bound given in units of pi.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    mode: ModeSpec,
    n_pulses: usize,
    #[serde(rename = "delta_T")]
    delta_t: f64,
    eps_grid: EpsilonGrid,
    #[serde(default = "default_area_weight")]
    area_weight: f64,
    #[serde(default = "default_omega_max_over_pi")]
    omega_max_over_pi: f64,
}

fn default_area_weight() -> f64 {
    DEFAULT_AREA_WEIGHT
}

fn default_omega_max_over_pi() -> f64 {
    2.0
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ModeSpec {
    Transfer { p0: f64, p1: f64 },
    Gate(String),
}

/// Search effort: random starts, and objective evaluations allowed per
/// start.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    starts: usize,
    max_evals: usize,
}

impl Budget {
    pub fn new(starts: usize, max_evals: usize) -> Result<Self> {
        if starts == 0 || max_evals == 0 {
            return Err(Error::ZeroBudget);
        }
        Ok(Self { starts, max_evals })
    }

    pub fn starts(&self) -> usize {
        self.starts
    }

    pub fn max_evals(&self) -> usize {
        self.max_evals
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self { starts: 64, max_evals: 6000 }
    }
}

/// One objective evaluation, broken into its parts.
#[derive(Clone, Copy, Debug)]
pub struct ObjectiveReport {
    /// Worst-case penalty plus the area term.
    pub value: f64,
    /// Worst per-eps transfer cost or infidelity alone.
    pub worst_merit: f64,
    /// Total pulse area in radians.
    pub area: f64,
    /// Whether any amplitude had to be clamped into [0, omega_max].
    pub clamped: bool,
}

/// J = max over the grid of the per-eps penalty, plus area_weight*(area/pi).
/// Accepts either vector layout; out-of-range amplitudes are clamped into
/// bounds (and reported via `objective_report`), never silently used.
pub fn objective(x: &[f64], problem: &OptimizationProblem) -> Result<f64> {
    Ok(objective_report(x, problem)?.value)
}

/// As `objective`, but returns the decomposition and the clamp flag.
pub fn objective_report(x: &[f64], problem: &OptimizationProblem) -> Result<ObjectiveReport> {
    let (amps, phases, clamped) = decode(x, problem)?;
    let eps = problem.eps_grid.points();
    Ok(evaluate(&amps, &phases, &eps, problem, clamped))
}

/// Splits a parameter vector into clamped amplitudes and phases.
fn decode(x: &[f64], problem: &OptimizationProblem) -> Result<(Vec<f64>, Vec<f64>, bool)> {
    let n = problem.n_pulses;
    let phases: Vec<f64> = if x.len() == problem.gauge_fixed_len() {
        std::iter::once(0.0).chain(x[n..].iter().copied()).collect()
    } else if x.len() == problem.full_len() {
        x[n..].to_vec()
    } else {
        return Err(Error::DimensionMismatch {
            got: x.len(),
            pulses: n,
            expected_fixed: problem.gauge_fixed_len(),
            expected_full: problem.full_len(),
        });
    };
    let mut clamped = false;
    let amps: Vec<f64> = x[..n]
        .iter()
        .map(|&a| {
            let c = a.clamp(0.0, problem.omega_max);
            clamped |= c != a;
            c
        })
        .collect();
    Ok((amps, phases, clamped))
}

fn compose_at(amps: &[f64], phases: &[f64], eps: f64, params: &SystemParams) -> Propagator3 {
    let mut acc = Matrix3::identity();
    for (&a, &p) in amps.iter().zip(phases) {
        let pulse = Pulse::unit(a, p).expect("clamped amplitudes are valid");
        let h = build_hamiltonian(&pulse, eps, params).expect("grid keeps eps > -1");
        acc = propagate(&h, 1.0).expect("unit duration is positive").matrix() * acc;
    }
    Propagator3::from_matrix(acc).expect("products of unitaries stay unitary")
}

fn evaluate(
    amps: &[f64],
    phases: &[f64],
    eps: &[f64],
    problem: &OptimizationProblem,
    clamped: bool,
) -> ObjectiveReport {
    let mut worst = 0.0_f64;
    for &e in eps {
        let u = compose_at(amps, phases, e, &problem.params);
        let penalty = match &problem.mode {
            Mode::Transfer(target) => transfer_cost(&populations_from_ground(&u), target),
            Mode::Gate(gate) => 1.0 - gate_fidelity(&u, gate),
        };
        worst = worst.max(penalty);
    }
    let area: f64 = amps.iter().sum();
    ObjectiveReport {
        value: worst + problem.area_weight * (area / PI),
        worst_merit: worst,
        area,
        clamped,
    }
}

/// Objective wrapper that owns the evaluation counters.
struct Evaluator<'a> {
    problem: &'a OptimizationProblem,
    eps: Vec<f64>,
    evals: u64,
    clamped_evals: u64,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a OptimizationProblem) -> Self {
        Self { problem, eps: problem.eps_grid.points(), evals: 0, clamped_evals: 0 }
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let (amps, phases, clamped) =
            decode(x, self.problem).expect("search vectors keep their layout");
        if clamped {
            self.clamped_evals += 1;
        }
        evaluate(&amps, &phases, &self.eps, self.problem, clamped).value
    }
}

struct SimplexRun {
    x: Vec<f64>,
    value: f64,
    iterations: u64,
    converged: bool,
}

const FATOL: f64 = 1e-12;
const XATOL: f64 = 1e-10;

/// One Nelder-Mead descent from `x0`, allowed to spend evaluations until
/// the evaluator reaches `stop_at`.
fn nelder_mead(ev: &mut Evaluator, x0: &[f64], step: f64, stop_at: u64) -> SimplexRun {
    let d = x0.len();
    // Dimension-adapted coefficients; the classic values behave better for
    // a one-dimensional simplex.
    let (gamma, beta, sigma) = if d >= 2 {
        let df = d as f64;
        (1.0 + 2.0 / df, 0.75 - 0.5 / df, 1.0 - 1.0 / df)
    } else {
        (2.0, 0.5, 0.5)
    };
    let alpha = 1.0;

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    if ev.evals >= stop_at {
        // Cannot even score the start; report it unevaluated as +inf.
        return SimplexRun { x: x0.to_vec(), value: f64::INFINITY, iterations: 0, converged: false };
    }
    let f0 = ev.eval(x0);
    simplex.push((x0.to_vec(), f0));
    for i in 0..d {
        let mut xi = x0.to_vec();
        xi[i] += step;
        if ev.evals >= stop_at {
            break;
        }
        let fi = ev.eval(&xi);
        simplex.push((xi, fi));
    }
    let mut iterations = 0_u64;
    let mut converged = false;
    if simplex.len() < d + 1 {
        // Budget died during initialization; fall through to the best point
        // seen so far.
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex.swap_remove(0);
        return SimplexRun { x: best.0, value: best.1, iterations, converged };
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_spread = simplex[d].1 - simplex[0].1;
        let x_spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0_f64, f64::max);
        if f_spread <= FATOL && x_spread <= XATOL {
            converged = true;
            break;
        }
        if ev.evals >= stop_at {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(x, _)| x[j]).sum::<f64>() / d as f64)
            .collect();
        let worst = simplex[d].clone();
        let reflected: Vec<f64> =
            centroid.iter().zip(&worst.0).map(|(c, w)| c + alpha * (c - w)).collect();
        let fr = ev.eval(&reflected);

        if fr < simplex[0].1 {
            // Try to expand past the reflection.
            if ev.evals >= stop_at {
                simplex[d] = (reflected, fr);
                break;
            }
            let expanded: Vec<f64> =
                centroid.iter().zip(&worst.0).map(|(c, w)| c + gamma * (c - w)).collect();
            let fe = ev.eval(&expanded);
            simplex[d] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (reflected, fr);
        } else {
            // Contract, outside or inside depending on the reflection.
            let (base, fb): (&[f64], f64) =
                if fr < worst.1 { (&reflected, fr) } else { (&worst.0, worst.1) };
            if ev.evals >= stop_at {
                if fr < worst.1 {
                    simplex[d] = (reflected, fr);
                }
                break;
            }
            let contracted: Vec<f64> =
                centroid.iter().zip(base).map(|(c, b)| c + beta * (b - c)).collect();
            let fc = ev.eval(&contracted);
            if fc < fb {
                simplex[d] = (contracted, fc);
            } else {
                // Shrink everything toward the best vertex.
                let best = simplex[0].0.clone();
                for i in 1..=d {
                    let xi: Vec<f64> = best
                        .iter()
                        .zip(&simplex[i].0)
                        .map(|(b, x)| b + sigma * (x - b))
                        .collect();
                    if ev.evals >= stop_at {
                        break;
                    }
                    let fi = ev.eval(&xi);
                    simplex[i] = (xi, fi);
                }
                if ev.evals >= stop_at {
                    break;
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = simplex.swap_remove(0);
    SimplexRun { x: best.0, value: best.1, iterations, converged }
}

struct ChainRun {
    x: Vec<f64>,
    value: f64,
    iterations: u64,
    converged: bool,
}

/// Runs Nelder-Mead from `x0`, restarting at the incumbent with a tighter
/// simplex until the budget is gone or a restart stops improving.
fn restart_chain(ev: &mut Evaluator, x0: &[f64], step0: f64, max_evals: u64) -> ChainRun {
    let stop_at = ev.evals + max_evals;
    let mut incumbent = ChainRun { x: x0.to_vec(), value: f64::INFINITY, iterations: 0, converged: false };
    let mut step = step0;
    loop {
        let run = nelder_mead(ev, &incumbent.x, step, stop_at);
        incumbent.iterations += run.iterations;
        incumbent.converged = run.converged;
        let improved = run.value < incumbent.value - FATOL;
        if run.value < incumbent.value {
            incumbent.x = run.x;
            incumbent.value = run.value;
        }
        let d = x0.len() as u64;
        if !improved || ev.evals + d + 2 > stop_at {
            break;
        }
        step = (step * 0.5).max(1e-3);
    }
    incumbent
}

/// Result of `optimize` or `polish`. `evals` and `clamped_evals` count every
/// objective call of the run; `iterations` counts simplex steps of the chain
/// that produced the winner.
#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub sequence: CompositeSequence,
    pub objective: f64,
    pub worst_merit: f64,
    pub area: f64,
    pub seed: u64,
    pub iterations: u64,
    pub converged: bool,
    pub evals: u64,
    pub clamped_evals: u64,
}

impl OptimizationResult {
    pub fn report(&self, starts: usize) -> RunReport {
        RunReport {
            objective: self.objective,
            worst_merit: self.worst_merit,
            area: self.area,
            area_over_pi: self.area / PI,
            seed: self.seed,
            starts,
            evals: self.evals,
            clamped_evals: self.clamped_evals,
            converged: self.converged,
        }
    }
}

/// Machine-readable summary written next to an optimized sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub objective: f64,
    pub worst_merit: f64,
    pub area: f64,
    pub area_over_pi: f64,
    pub seed: u64,
    pub starts: usize,
    pub evals: u64,
    pub clamped_evals: u64,
    pub converged: bool,
}

fn candidate_beats(value: f64, area: f64, x: &[f64], best: &(f64, f64, Vec<f64>)) -> bool {
    match value.total_cmp(&best.0) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => match area.total_cmp(&best.1) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => {
                for (a, b) in x.iter().zip(&best.2) {
                    match a.total_cmp(b) {
                        std::cmp::Ordering::Less => return true,
                        std::cmp::Ordering::Greater => return false,
                        std::cmp::Ordering::Equal => {}
                    }
                }
                false
            }
        },
    }
}

fn result_from_vector(
    x: &[f64],
    problem: &OptimizationProblem,
    name: &str,
    seed: u64,
    iterations: u64,
    converged: bool,
    evals: u64,
    clamped_evals: u64,
) -> Result<OptimizationResult> {
    let (amps, phases, _) = decode(x, problem)?;
    let report = evaluate(&amps, &phases, &problem.eps_grid.points(), problem, false);
    let pulses = amps
        .iter()
        .zip(&phases)
        .map(|(&a, &p)| Pulse::unit(a, p))
        .collect::<Result<Vec<_>>>()?;
    let sequence =
        CompositeSequence::new(pulses, problem.params)?.with_name(name);
    Ok(OptimizationResult {
        sequence,
        objective: report.value,
        worst_merit: report.worst_merit,
        area: report.area,
        seed,
        iterations,
        converged,
        evals,
        clamped_evals,
    })
}

/// Multi-start search. Start k draws its initial point from stream k of a
/// counter-based generator seeded with `seed`, so the result is a pure
/// function of (problem, budget, seed). Ties between starts break toward
/// smaller area, then the lexicographically smaller vector.
pub fn optimize(
    problem: &OptimizationProblem,
    budget: Budget,
    seed: u64,
) -> Result<OptimizationResult> {
    let n = problem.n_pulses;
    let mut ev = Evaluator::new(problem);
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut best_iterations = 0_u64;
    let mut best_converged = false;

    for start in 0..budget.starts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(start as u64);
        let mut x0 = Vec::with_capacity(problem.gauge_fixed_len());
        for _ in 0..n {
            x0.push(rng.random_range(0.0..problem.omega_max));
        }
        for _ in 0..n - 1 {
            x0.push(rng.random_range(0.0..2.0 * PI));
        }
        let chain = restart_chain(&mut ev, &x0, 0.25, budget.max_evals as u64);
        let (amps, _, _) = decode(&chain.x, problem)?;
        let area: f64 = amps.iter().sum();
        if best.as_ref().is_none_or(|b| candidate_beats(chain.value, area, &chain.x, b)) {
            best = Some((chain.value, area, chain.x));
            best_iterations = chain.iterations;
            best_converged = chain.converged;
        }
    }

    let (_, _, x) = best.expect("budget guarantees at least one start");
    result_from_vector(
        &x,
        problem,
        "optimized",
        seed,
        best_iterations,
        best_converged,
        ev.evals,
        ev.clamped_evals,
    )
}

/// Local refinement of an existing sequence under the same objective. The
/// sequence's own phases are kept (including the first), and the returned
/// objective is never worse than the sequence's.
pub fn polish(
    seq: &CompositeSequence,
    problem: &OptimizationProblem,
    budget: Budget,
) -> Result<OptimizationResult> {
    if seq.pulses().len() != problem.n_pulses {
        return Err(Error::DimensionMismatch {
            got: 2 * seq.pulses().len(),
            pulses: problem.n_pulses,
            expected_fixed: problem.gauge_fixed_len(),
            expected_full: problem.full_len(),
        });
    }
    if seq.pulses().iter().any(|p| p.duration() != 1.0) {
        return Err(Error::InvalidProblem(
            "polish works on unit-duration pulses".into(),
        ));
    }
    let mut x0: Vec<f64> = seq.pulses().iter().map(Pulse::rabi).collect();
    x0.extend(seq.pulses().iter().map(Pulse::phase));

    let mut ev = Evaluator::new(problem);
    let chain = restart_chain(&mut ev, &x0, 0.05, budget.max_evals as u64);
    let name = match seq.name() {
        Some(n) => format!("{n}-polished"),
        None => "polished".to_string(),
    };
    result_from_vector(
        &chain.x,
        problem,
        &name,
        0,
        chain.iterations,
        chain.converged,
        ev.evals,
        ev.clamped_evals,
    )
}
