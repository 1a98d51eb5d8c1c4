//! Discrete per-group state optimization.
//!
//! [`greedy_optimize`] sweeps the control groups in index order; for each
//! group it evaluates the received power with every codebook state while all
//! other groups stay fixed and commits the best one (lowest index on ties).
//! Full passes repeat until the pass cap is reached or a pass improves the
//! power by less than `epsilon` relative to the previous pass.
//!
//! Candidate powers come from a [`PairwiseTree`] over the element summands,
//! so every recorded power is bit-identical to [`ChannelModel::power`] on the
//! same configuration.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::channel::{ChannelModel, Configuration, Scenario};
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::geometry::{GroupMap, SurfaceGrid};
use crate::scalar::Real;
use crate::sum::PairwiseTree;

/// Largest search space [`exhaustive_optimize`] will enumerate.
pub const EXHAUSTIVE_LIMIT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// Every group in the codebook's first state.
    FirstState,
    Uniform(String),
    Given(Configuration),
}

/// Multiplicative log-normal error on each power reading, for robustness
/// studies. Decisions use the noisy reading; the trace records model power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementNoise {
    pub sigma_db: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    pub max_iterations: usize,
    /// Relative improvement per pass below which the sweep stops.
    pub epsilon: f64,
    pub start: Start,
    pub noise: Option<MeasurementNoise>,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        OptimizerSettings {
            max_iterations: 5,
            epsilon: 1e-4,
            start: Start::FirstState,
            noise: None,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be ≥ 0, got {}", self.epsilon)));
        }
        if let Some(noise) = self.noise {
            if !(noise.sigma_db >= 0.0 && noise.sigma_db.is_finite()) {
                return Err(Error::invalid(format!("noise sigma must be ≥ 0 dB, got {}", noise.sigma_db)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep<T> {
    /// 1-based pass number.
    pub pass: usize,
    pub group: usize,
    pub code: String,
    pub p_r_after: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace<T> {
    pub steps: Vec<TraceStep<T>>,
    pub iterations_completed: usize,
    pub evaluations: usize,
}

impl<T: Real> OptimizationTrace<T> {
    /// Power after the last commit, if any.
    pub fn final_power(&self) -> Option<T> {
        self.steps.last().map(|s| s.p_r_after)
    }
}

/// Result of an optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimized<T> {
    pub configuration: Configuration,
    pub power: T,
    pub trace: OptimizationTrace<T>,
}

/// Element-sum state for one model, one grouping and one codebook.
struct Evaluator<'a, T> {
    model: &'a ChannelModel<T>,
    groups: &'a GroupMap,
    gammas: Vec<Complex<T>>,
    tree: PairwiseTree<Complex<T>>,
}

impl<'a, T: Real> Evaluator<'a, T> {
    fn new(
        model: &'a ChannelModel<T>,
        groups: &'a GroupMap,
        codebook: &Codebook<T>,
        f: T,
        assignment: &[usize],
    ) -> Result<Self> {
        if groups.element_count() != model.len() {
            return Err(Error::invalid(format!(
                "grouping covers {} elements, model has {}",
                groups.element_count(),
                model.len()
            )));
        }
        let gammas = codebook.gammas_at(f)?;
        let summands: Vec<Complex<T>> = (0..model.len())
            .map(|e| model.summand(e, gammas[assignment[groups.group_of(e)]]))
            .collect();
        Ok(Evaluator {
            model,
            groups,
            gammas,
            tree: PairwiseTree::new(&summands),
        })
    }

    fn assign(&mut self, group: usize, state: usize) {
        let gamma = self.gammas[state];
        for &e in self.groups.members(group) {
            self.tree.set(e, self.model.summand(e, gamma));
        }
    }

    fn power(&self) -> T {
        self.model.power_of_sum(self.tree.total())
    }
}

fn start_indices<T: Real>(start: &Start, groups: &GroupMap, codebook: &Codebook<T>) -> Result<Vec<usize>> {
    match start {
        Start::FirstState => Ok(vec![0; groups.len()]),
        Start::Uniform(code) => {
            let k = codebook
                .index_of(code)
                .ok_or_else(|| Error::NotFound(format!("start state code {code}")))?;
            Ok(vec![k; groups.len()])
        }
        Start::Given(cfg) => {
            if cfg.len() != groups.len() {
                return Err(Error::invalid(format!(
                    "start configuration has {} codes for {} groups",
                    cfg.len(),
                    groups.len()
                )));
            }
            cfg.indices(codebook)
        }
    }
}

/// Greedy optimization on a prepared channel model at frequency `f`.
pub fn greedy_optimize_model<T: Real>(
    model: &ChannelModel<T>,
    groups: &GroupMap,
    codebook: &Codebook<T>,
    f: T,
    settings: &OptimizerSettings,
) -> Result<Optimized<T>> {
    settings.validate()?;
    if codebook.is_empty() {
        return Err(Error::invalid("codebook is empty"));
    }
    let mut assignment = start_indices(&settings.start, groups, codebook)?;
    let mut eval = Evaluator::new(model, groups, codebook, f, &assignment)?;
    let mut noise = match settings.noise {
        Some(n) => Some((
            ChaCha8Rng::seed_from_u64(n.seed),
            Normal::new(0.0, n.sigma_db).map_err(|e| Error::invalid(e.to_string()))?,
        )),
        None => None,
    };

    let mut trace = OptimizationTrace {
        steps: Vec::with_capacity(groups.len() * settings.max_iterations),
        iterations_completed: 0,
        evaluations: 0,
    };
    let mut previous_pass: Option<T> = None;
    let mut candidates = vec![T::zero(); codebook.len()];

    for pass in 1..=settings.max_iterations {
        for group in 0..groups.len() {
            let mut best: Option<(usize, f64)> = None;
            for (k, slot) in candidates.iter_mut().enumerate() {
                eval.assign(group, k);
                let p = eval.power();
                trace.evaluations += 1;
                *slot = p;
                let reading = match noise.as_mut() {
                    Some((rng, dist)) => p.as_f64() * 10f64.powf(dist.sample(rng) / 10.0),
                    None => p.as_f64(),
                };
                if best.is_none_or(|(_, b)| reading > b) {
                    best = Some((k, reading));
                }
            }
            let (chosen, _) = best.expect("non-empty codebook");
            eval.assign(group, chosen);
            assignment[group] = chosen;
            trace.steps.push(TraceStep {
                pass,
                group,
                code: codebook.state(chosen).code().to_string(),
                p_r_after: candidates[chosen],
            });
        }
        trace.iterations_completed = pass;

        let current = eval.power();
        if let Some(prev) = previous_pass {
            let improvement = if prev > T::zero() {
                (current - prev) / prev
            } else if current > T::zero() {
                T::infinity()
            } else {
                T::zero()
            };
            if improvement < T::lit(settings.epsilon) {
                break;
            }
        }
        previous_pass = Some(current);
    }

    Ok(Optimized {
        configuration: Configuration::from_indices(&assignment, codebook),
        power: eval.power(),
        trace,
    })
}

/// Greedy optimization of `scenario` at its carrier frequency.
pub fn greedy_optimize<T: Real>(
    scenario: &Scenario<T>,
    grid: &SurfaceGrid<T>,
    groups: &GroupMap,
    codebook: &Codebook<T>,
    settings: &OptimizerSettings,
) -> Result<Optimized<T>> {
    let model = ChannelModel::new(scenario, grid)?;
    greedy_optimize_model(&model, groups, codebook, scenario.f, settings)
}

/// Global maximizer over all `K^groups` assignments; ties go to the
/// lexicographically smallest vector of codebook indices.
pub fn exhaustive_optimize_model<T: Real>(
    model: &ChannelModel<T>,
    groups: &GroupMap,
    codebook: &Codebook<T>,
    f: T,
) -> Result<(Configuration, T)> {
    let k = codebook.len();
    if k == 0 {
        return Err(Error::invalid("codebook is empty"));
    }
    let size = (k as f64).powi(groups.len() as i32);
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut current = vec![0usize; groups.len()];
    let mut eval = Evaluator::new(model, groups, codebook, f, &current)?;
    let mut best = (current.clone(), eval.power());
    loop {
        // odometer: the last group turns fastest, giving lexicographic order
        let mut g = groups.len();
        loop {
            if g == 0 {
                return Ok((Configuration::from_indices(&best.0, codebook), best.1));
            }
            g -= 1;
            current[g] += 1;
            if current[g] < k {
                eval.assign(g, current[g]);
                break;
            }
            current[g] = 0;
            eval.assign(g, 0);
        }
        let p = eval.power();
        if p > best.1 {
            best = (current.clone(), p);
        }
    }
}

pub fn exhaustive_optimize<T: Real>(
    scenario: &Scenario<T>,
    grid: &SurfaceGrid<T>,
    groups: &GroupMap,
    codebook: &Codebook<T>,
) -> Result<(Configuration, T)> {
    let model = ChannelModel::new(scenario, grid)?;
    exhaustive_optimize_model(&model, groups, codebook, scenario.f)
}

/// Wraps an angle into `(−π, π]` magnitude-wise; only `|·|` is used.
fn circular_distance<T: Real>(a: T, b: T) -> T {
    let d = (a - b) % T::TAU();
    let d = d.abs();
    d.min(T::TAU() - d)
}

/// Projects an ideal per-element phase profile (radians) onto the nearest
/// codebook phase at `f`. Groups of several elements use the circular mean
/// of their members' ideal phases. Magnitudes do not enter the metric.
pub fn quantize_profile<T: Real>(
    ideal: &[T],
    groups: &GroupMap,
    codebook: &Codebook<T>,
    f: T,
) -> Result<Configuration> {
    if codebook.is_empty() {
        return Err(Error::invalid("codebook is empty"));
    }
    if ideal.len() != groups.element_count() {
        return Err(Error::invalid(format!(
            "ideal profile has {} phases for {} elements",
            ideal.len(),
            groups.element_count()
        )));
    }
    let state_phases: Vec<T> = codebook
        .states()
        .iter()
        .map(|s| s.response_at(f).map(|(_, phase)| phase))
        .collect::<Result<_>>()?;
    let indices: Vec<usize> = groups
        .groups()
        .iter()
        .map(|members| {
            let target = if members.len() == 1 {
                ideal[members[0]]
            } else {
                members
                    .iter()
                    .fold(Complex::new(T::zero(), T::zero()), |acc, &e| acc + Complex::from_polar(T::one(), ideal[e]))
                    .arg()
            };
            let mut best = 0;
            let mut best_d = T::infinity();
            for (k, &phase) in state_phases.iter().enumerate() {
                let d = circular_distance(phase, target);
                if d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            best
        })
        .collect();
    Ok(Configuration::from_indices(&indices, codebook))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Baseline {
    Uniform(String),
    Random { seed: u64 },
}

/// Reference configurations: one code everywhere, or a seeded random draw.
pub fn baseline_config<T: Real>(kind: &Baseline, groups: &GroupMap, codebook: &Codebook<T>) -> Result<Configuration> {
    match kind {
        Baseline::Uniform(code) => {
            codebook
                .index_of(code)
                .ok_or_else(|| Error::NotFound(format!("state code {code}")))?;
            Ok(Configuration::uniform(code, groups.len()))
        }
        Baseline::Random { seed } => {
            if codebook.is_empty() {
                return Err(Error::invalid("codebook is empty"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let indices: Vec<usize> = (0..groups.len()).map(|_| rng.gen_range(0..codebook.len())).collect();
            Ok(Configuration::from_indices(&indices, codebook))
        }
    }
}
