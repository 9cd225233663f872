//! Artificial-bee-colony minimization of the membership parameters.
//!
//! One iteration runs three phases: every source is mutated once and
//! greedily replaced (employed), N fitness-proportional selections each
//! mutate their source again (onlooker), and at most one stagnant source —
//! the worst offender past the abandonment limit — is reseeded uniformly
//! (scout). Candidate positions are planned with a sequential RNG and
//! evaluated as a batch, so results are bit-identical for any worker
//! count.
//!
//! The position update is `x_j ← x_j + α (x_j − p_j)` on one random
//! dimension with `α ~ U[−1, 1)`, followed by the problem's repair
//! (clamp to the box, then restore membership-triple ordering for the
//! tuning problem). Selection uses the minimization fitness
//! `fit = 1 / (1 + J)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

use crate::fuzzy::{self, FuzzyEngine, FuzzyParams, RuleBase};
use crate::harness::{windowed_objective, DIVERGED_OBJECTIVE};
use crate::sim::{simulate, SimScenario, SimulatedTrajectory};
use crate::so3::RotationMatrix;
use crate::{Error, Result};

/// A minimization problem over a box-constrained parameter vector.
pub trait Objective: Sync {
    fn dimension(&self) -> usize;

    /// Componentwise (lower, upper) bounds, each of length `dimension()`.
    fn bounds(&self) -> (&[f64], &[f64]);

    /// Pulls a candidate back into the feasible set. Default: clamp.
    fn repair(&self, x: &mut [f64]) {
        let (lower, upper) = self.bounds();
        for i in 0..x.len() {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    }

    fn evaluate(&self, x: &[f64]) -> f64;
}

/// One candidate solution with its objective value and stagnation count.
#[derive(Clone, Debug)]
pub struct FoodSource {
    pub position: Vec<f64>,
    pub objective: f64,
    pub trials: u32,
}

/// Colony-size and scheduling knobs of one optimizer run.
#[derive(Clone, Copy, Debug)]
pub struct ColonySettings {
    pub n_sources: usize,
    pub iterations: usize,
    pub abandonment_limit: u32,
    pub rng_seed: u64,
    /// Worker threads for batch evaluation; `None` uses the process-wide
    /// default.
    pub workers: Option<usize>,
}

impl ColonySettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_sources < 2 {
            return Err(Error::Config(format!(
                "n_sources {} must be >= 2",
                self.n_sources
            )));
        }
        if self.abandonment_limit < 1 {
            return Err(Error::Config("abandonment_limit must be >= 1".into()));
        }
        Ok(())
    }
}

/// Full tuning-run configuration: colony knobs plus the closed-loop
/// objective definition.
#[derive(Clone, Debug)]
pub struct AbcConfig {
    pub colony: ColonySettings,
    pub scenario: SimScenario,
    /// Bias adaptation rate used inside objective evaluations.
    pub gamma: f64,
    pub transient_window: (f64, f64),
    pub steady_window: (f64, f64),
    pub transient_weight: f64,
}

impl AbcConfig {
    /// The reference tuning campaign: 100 sources, 300 iterations, the
    /// windowed objective `0.3·Σ_{[0,1]} e + Σ_{[4,14]} e`.
    pub fn paper(scenario: SimScenario) -> Self {
        Self {
            colony: ColonySettings {
                n_sources: 100,
                iterations: 300,
                abandonment_limit: 100,
                rng_seed: 0,
                workers: None,
            },
            scenario,
            gamma: 1.0,
            transient_window: (0.0, 1.0),
            steady_window: (4.0, 14.0),
            transient_weight: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.colony.validate()?;
        self.scenario.validate()?;
        if self.gamma.is_nan() || self.gamma <= 0.0 {
            return Err(Error::Config(format!("gamma {} must be > 0", self.gamma)));
        }
        for (name, w) in [
            ("transient_window", self.transient_window),
            ("steady_window", self.steady_window),
        ] {
            if w.0.is_nan() || w.1.is_nan() || w.0 > w.1 || w.0 < 0.0 {
                return Err(Error::Config(format!("{name} {w:?} is not a valid window")));
            }
        }
        if self.transient_weight.is_nan() || self.transient_weight < 0.0 {
            return Err(Error::Config("transient_weight must be >= 0".into()));
        }
        Ok(())
    }
}

/// Convergence audit trail: one row per iteration, index 0 holding the
/// initialization state.
#[derive(Clone, Debug, Default)]
pub struct AbcReport {
    pub best_j: Vec<f64>,
    pub mean_j: Vec<f64>,
    pub best_positions: Vec<Vec<f64>>,
    /// Objective values of the freshly initialized colony.
    pub initial_objectives: Vec<f64>,
    pub evaluations: usize,
}

impl AbcReport {
    pub fn final_best_j(&self) -> f64 {
        *self
            .best_j
            .last()
            .expect("report has at least the init row")
    }

    pub fn final_best_position(&self) -> &[f64] {
        self.best_positions
            .last()
            .expect("report has at least the init row")
    }
}

/// Stream used for colony randomness; measurement synthesis uses stream 0.
pub fn colony_stream(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

fn fitness(objective: f64) -> f64 {
    if objective >= 0.0 {
        1.0 / (1.0 + objective)
    } else {
        1.0 + objective.abs()
    }
}

/// Fitness-proportional source selection (`fit = 1/(1+J)` under
/// minimization); degenerate weights fall back to a uniform pick.
pub fn onlooker_select(sources: &[FoodSource], rng: &mut impl Rng) -> usize {
    debug_assert!(!sources.is_empty());
    let total: f64 = sources.iter().map(|s| fitness(s.objective)).sum();
    if !total.is_finite() || total <= 0.0 {
        return rng.random_range(0..sources.len());
    }
    let target = rng.random::<f64>() * total;
    let mut cumulative = 0.0;
    for (i, s) in sources.iter().enumerate() {
        cumulative += fitness(s.objective);
        if cumulative >= target {
            return i;
        }
    }
    sources.len() - 1
}

/// The position update on one dimension with a fixed coefficient.
pub fn mutate_dimension<O: Objective + ?Sized>(
    position: &[f64],
    partner: &[f64],
    dim: usize,
    alpha: f64,
    objective: &O,
) -> Vec<f64> {
    let mut out = position.to_vec();
    out[dim] += alpha * (position[dim] - partner[dim]);
    objective.repair(&mut out);
    out
}

/// Draws the dimension and `α ~ U[−1, 1)`, then applies the update.
///
/// A one-sided coefficient would only ever step away from the partner,
/// which stalls convergence; the symmetric draw explores both directions.
pub fn mutate<O: Objective + ?Sized>(
    position: &[f64],
    partner: &[f64],
    objective: &O,
    rng: &mut impl Rng,
) -> Vec<f64> {
    let dim = rng.random_range(0..objective.dimension());
    let alpha: f64 = rng.random_range(-1.0..1.0);
    mutate_dimension(position, partner, dim, alpha, objective)
}

fn draw_partner(own: usize, n: usize, rng: &mut impl Rng) -> usize {
    let k = rng.random_range(0..n - 1);
    if k >= own {
        k + 1
    } else {
        k
    }
}

fn uniform_position<O: Objective + ?Sized>(objective: &O, rng: &mut impl Rng) -> Vec<f64> {
    let (lower, upper) = objective.bounds();
    let mut x: Vec<f64> = lower
        .iter()
        .zip(upper)
        .map(|(&lo, &hi)| rng.random_range(lo..=hi))
        .collect();
    objective.repair(&mut x);
    x
}

fn evaluate_batch<O: Objective>(objective: &O, candidates: &[Vec<f64>]) -> Vec<f64> {
    use rayon::prelude::*;
    candidates
        .par_iter()
        .map(|x| objective.evaluate(x))
        .collect()
}

fn greedy_replace(source: &mut FoodSource, position: Vec<f64>, objective: f64) {
    if objective < source.objective {
        *source = FoodSource {
            position,
            objective,
            trials: 0,
        };
    } else {
        source.trials += 1;
    }
}

/// Runs the colony against an arbitrary objective.
///
/// `resume_from` injects a known-good position into the initial colony.
/// `after_iteration` fires once per completed iteration (1-based) with the
/// report accumulated so far; errors abort the run.
pub fn minimize<O, F>(
    objective: &O,
    colony: &ColonySettings,
    resume_from: Option<&[f64]>,
    after_iteration: F,
) -> Result<AbcReport>
where
    O: Objective,
    F: FnMut(usize, &AbcReport) -> Result<()> + Send,
{
    colony.validate()?;
    match colony.workers {
        Some(workers) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
            pool.install(|| minimize_inner(objective, colony, resume_from, after_iteration))
        }
        None => minimize_inner(objective, colony, resume_from, after_iteration),
    }
}

fn minimize_inner<O, F>(
    objective: &O,
    colony: &ColonySettings,
    resume_from: Option<&[f64]>,
    mut after_iteration: F,
) -> Result<AbcReport>
where
    O: Objective,
    F: FnMut(usize, &AbcReport) -> Result<()>,
{
    let n = colony.n_sources;
    let mut rng = colony_stream(colony.rng_seed);

    let mut positions: Vec<Vec<f64>> = (0..n)
        .map(|_| uniform_position(objective, &mut rng))
        .collect();
    if let Some(seed_position) = resume_from {
        let mut x = seed_position.to_vec();
        objective.repair(&mut x);
        positions[0] = x;
    }
    let objectives = evaluate_batch(objective, &positions);
    let mut sources: Vec<FoodSource> = positions
        .into_iter()
        .zip(objectives.iter().copied())
        .map(|(position, objective)| FoodSource {
            position,
            objective,
            trials: 0,
        })
        .collect();

    let mut report = AbcReport {
        evaluations: n,
        initial_objectives: objectives,
        ..AbcReport::default()
    };
    // The scout phase may reseed the best source, so track the best-so-far
    // outside the colony.
    let mut best = sources
        .iter()
        .min_by(|a, b| a.objective.total_cmp(&b.objective))
        .expect("colony is non-empty")
        .clone();
    push_row(&mut report, &best, &sources);

    for iteration in 1..=colony.iterations {
        // Employed phase: plan sequentially, evaluate as a batch.
        let planned: Vec<(usize, Vec<f64>)> = (0..n)
            .map(|i| {
                let partner = draw_partner(i, n, &mut rng);
                let candidate = mutate(
                    &sources[i].position,
                    &sources[partner].position,
                    objective,
                    &mut rng,
                );
                (i, candidate)
            })
            .collect();
        commit_phase(objective, &mut sources, planned, &mut report);

        // Onlooker phase: selection probabilities are frozen at phase
        // start; replacements land in plan order.
        let planned: Vec<(usize, Vec<f64>)> = (0..n)
            .map(|_| {
                let i = onlooker_select(&sources, &mut rng);
                let partner = draw_partner(i, n, &mut rng);
                let candidate = mutate(
                    &sources[i].position,
                    &sources[partner].position,
                    objective,
                    &mut rng,
                );
                (i, candidate)
            })
            .collect();
        commit_phase(objective, &mut sources, planned, &mut report);

        // Scout phase: reseed the worst offender past the limit, if any.
        let offender = sources
            .iter()
            .enumerate()
            .filter(|(_, s)| s.trials > colony.abandonment_limit)
            .max_by(|(_, a), (_, b)| {
                a.trials
                    .cmp(&b.trials)
                    .then(a.objective.total_cmp(&b.objective))
            })
            .map(|(i, _)| i);
        if let Some(i) = offender {
            let position = uniform_position(objective, &mut rng);
            let value = objective.evaluate(&position);
            report.evaluations += 1;
            sources[i] = FoodSource {
                position,
                objective: value,
                trials: 0,
            };
        }

        if let Some(challenger) = sources
            .iter()
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
        {
            if challenger.objective < best.objective {
                best = challenger.clone();
            }
        }
        push_row(&mut report, &best, &sources);
        after_iteration(iteration, &report)?;
    }
    Ok(report)
}

fn commit_phase<O: Objective>(
    objective: &O,
    sources: &mut [FoodSource],
    planned: Vec<(usize, Vec<f64>)>,
    report: &mut AbcReport,
) {
    let candidates: Vec<Vec<f64>> = planned.iter().map(|(_, x)| x.clone()).collect();
    let values = evaluate_batch(objective, &candidates);
    report.evaluations += values.len();
    for ((i, candidate), value) in planned.into_iter().zip(values) {
        greedy_replace(&mut sources[i], candidate, value);
    }
}

fn push_row(report: &mut AbcReport, best: &FoodSource, sources: &[FoodSource]) {
    report.best_j.push(best.objective);
    report.best_positions.push(best.position.clone());
    report
        .mean_j
        .push(sources.iter().map(|s| s.objective).sum::<f64>() / sources.len() as f64);
}

// ---------------------------------------------------------------------------
// The membership-tuning objective
// ---------------------------------------------------------------------------

/// The closed-loop tracking objective over the 22 membership parameters.
///
/// The measurement sequence depends only on the scenario and its seed, so
/// it is synthesized once and shared by every evaluation; candidates are
/// then scored by running the scheduled filter over the frozen frames.
pub struct FuzzyObjective {
    trajectory: SimulatedTrajectory,
    initial_estimate: RotationMatrix,
    gamma: f64,
    rules: RuleBase,
    transient_window: (f64, f64),
    steady_window: (f64, f64),
    transient_weight: f64,
}

impl FuzzyObjective {
    pub fn new(config: &AbcConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            trajectory: simulate(&config.scenario)?,
            initial_estimate: config.scenario.initial_estimate,
            gamma: config.gamma,
            rules: RuleBase::default(),
            transient_window: config.transient_window,
            steady_window: config.steady_window,
            transient_weight: config.transient_weight,
        })
    }
}

impl Objective for FuzzyObjective {
    fn dimension(&self) -> usize {
        fuzzy::N_PARAMS
    }

    fn bounds(&self) -> (&[f64], &[f64]) {
        (&fuzzy::PARAM_LOWER, &fuzzy::PARAM_UPPER)
    }

    fn repair(&self, x: &mut [f64]) {
        fuzzy::repair(x);
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let params = match FuzzyParams::from_slice(x) {
            Ok(p) => p,
            Err(_) => return DIVERGED_OBJECTIVE,
        };
        let engine = FuzzyEngine::new(params, self.rules);
        windowed_objective(
            &self.trajectory,
            self.initial_estimate,
            &engine,
            self.gamma,
            self.transient_window,
            self.steady_window,
            self.transient_weight,
        )
    }
}

/// Scores one parameter vector under a configuration's objective.
pub fn evaluate_objective(position: &[f64], config: &AbcConfig) -> Result<f64> {
    let objective = FuzzyObjective::new(config)?;
    let mut x = position.to_vec();
    if x.len() != fuzzy::N_PARAMS {
        return Err(Error::Config(format!(
            "expected {} parameters, got {}",
            fuzzy::N_PARAMS,
            x.len()
        )));
    }
    objective.repair(&mut x);
    Ok(objective.evaluate(&x))
}

/// Runs the tuning campaign without checkpointing.
pub fn run(config: &AbcConfig) -> Result<AbcReport> {
    run_with_checkpoints(config, None, None)
}

/// Runs the tuning campaign, writing a checkpoint every 10 iterations and
/// at the end. `resume` injects a previous checkpoint: its position seeds
/// the colony and its iteration count is subtracted from the budget.
pub fn run_with_checkpoints(
    config: &AbcConfig,
    checkpoint_path: Option<&Path>,
    resume: Option<&Checkpoint>,
) -> Result<AbcReport> {
    config.validate()?;
    let objective = FuzzyObjective::new(config)?;
    let mut colony = config.colony;
    let base_iteration = match resume {
        Some(c) => c.iteration.min(colony.iterations),
        None => 0,
    };
    colony.iterations -= base_iteration;

    let report = minimize(
        &objective,
        &colony,
        resume.map(|c| c.position.as_slice()),
        |iteration, report: &AbcReport| {
            if let Some(path) = checkpoint_path {
                let absolute = base_iteration + iteration;
                if iteration % 10 == 0 || iteration == colony.iterations {
                    write_checkpoint(
                        path,
                        absolute,
                        report.final_best_j(),
                        report.final_best_position(),
                    )?;
                }
            }
            Ok(())
        },
    )?;
    if let (Some(path), 0) = (checkpoint_path, colony.iterations) {
        write_checkpoint(
            path,
            base_iteration,
            report.final_best_j(),
            report.final_best_position(),
        )?;
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Checkpoint files
// ---------------------------------------------------------------------------

/// Optimizer checkpoint: iteration index, best objective, best position.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub iteration: usize,
    pub best_j: f64,
    pub position: Vec<f64>,
}

/// Writes atomically (temp file + rename): a labeled header followed by
/// the flat parameter record.
pub fn write_checkpoint(
    path: &Path,
    iteration: usize,
    best_j: f64,
    position: &[f64],
) -> Result<()> {
    let mut text = String::from("# abc checkpoint\n");
    text.push_str(&format!("iteration {iteration}\nbest_j {best_j}\n"));
    for v in position {
        text.push_str(&format!("{v}\n"));
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut tokens = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let bad = |msg: &str| Error::Config(format!("{}: {msg}", path.display()));
    if tokens.len() < 5 || tokens[0] != "iteration" || tokens[2] != "best_j" {
        return Err(bad("malformed checkpoint header"));
    }
    let iteration: usize = tokens[1]
        .parse()
        .map_err(|_| bad("invalid iteration index"))?;
    let best_j: f64 = tokens[3].parse().map_err(|_| bad("invalid best_j"))?;
    let position = tokens[4..]
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| bad("invalid position value")))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Checkpoint {
        iteration,
        best_j,
        position,
    })
}
