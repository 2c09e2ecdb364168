//! Differential Evolution and the counterexample searches built on it.
//!
//! A counterexample to universality is a product input `|a⟩⊗|b⟩` whose image
//! under the gate is again a product state. The search parameterizes the two
//! factors by a real genome and minimizes the separability residual of the
//! output with DE/rand/1/bin. A hit is only reported when both the residual and
//! the output entanglement fall below their tolerances.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::UnitaryGate;
use crate::linalg::{kron_vec, mul_vec_into};
use crate::sampling::StreamKey;
use crate::separability::{column_separability_filter, residual_total, FilterOutcome, TOL_SEPARABLE};
use crate::states::{
    apply_gate, entanglement_entropy, entropy_from_schmidt, schmidt_coefficients, vec_norm, BipartiteShape,
    ProductState, PureState,
};

/// Objective value for genomes that decode to a degenerate factor.
pub const INVALID_PENALTY: f64 = 1e10;
/// Minimum factor norm for a genome to decode.
const MIN_FACTOR_NORM: f64 = 1e-6;
/// Relative improvement that counts as progress for stall detection.
const STALL_REL_IMPROVEMENT: f64 = 1e-6;
/// Stream offset separating restart generators from other uses of the seed.
const RESTART_STREAM_BASE: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    pub weight_f: f64,
    pub crossover_cr: f64,
    /// Evaluation budget of a single DE run (each restart gets its own).
    pub max_evals: u64,
    pub restarts: u32,
    pub seed: u64,
    pub residual_tol: f64,
    pub entropy_tol: f64,
    /// Stop a run as soon as the best value drops below this.
    pub stop_below: Option<f64>,
    /// Run DE even when the column filter already rejects the gate.
    pub skip_filter: bool,
    /// Reseed the population when the best value has not improved by a relative
    /// `STALL_REL_IMPROVEMENT` for this many generations. The best-so-far record is kept.
    pub stall_generations: Option<u32>,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population: 40,
            weight_f: 0.7,
            crossover_cr: 0.9,
            max_evals: 100_000,
            restarts: 1,
            seed: 0,
            residual_tol: 1e-9,
            entropy_tol: 1e-8,
            stop_below: None,
            skip_filter: false,
            stall_generations: Some(200),
        }
    }
}

impl DeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 4 {
            return Err(Error::InvalidConfig(format!(
                "population {} is below 4 (rand/1 needs three partners besides the target)",
                self.population
            )));
        }
        if !(self.weight_f > 0.0 && self.weight_f < 2.0) {
            return Err(Error::InvalidConfig(format!("weight F = {} not in (0, 2)", self.weight_f)));
        }
        if !(0.0..=1.0).contains(&self.crossover_cr) {
            return Err(Error::InvalidConfig(format!("crossover CR = {} not in [0, 1]", self.crossover_cr)));
        }
        if self.max_evals == 0 || self.restarts == 0 {
            return Err(Error::InvalidConfig("budget and restarts must be positive".into()));
        }
        Ok(())
    }
}

/// Real parameter vector in `[−1, 1]^dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genome(pub Vec<f64>);

impl Genome {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Genome of a product state: interleaved (re, im) of factor A then factor B.
    pub fn encode(state: &ProductState) -> Self {
        let values = state
            .factor_a
            .amplitudes()
            .iter()
            .chain(state.factor_b.amplitudes())
            .flat_map(|z| [z.re, z.im])
            .collect();
        Self(values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeOutcome {
    pub best: Genome,
    pub best_value: f64,
    pub evals_used: u64,
    /// Best value after initialization and after every generation.
    pub best_trace: Vec<f64>,
}

/// Minimizes `objective` over `[−1, 1]^dimension` with DE/rand/1/bin.
/// The run is a pure function of `config` (seeded from `config.seed`).
pub fn de_minimize<F>(objective: F, dimension: usize, config: &DeConfig) -> Result<DeOutcome>
where
    F: Fn(&[f64]) -> f64,
{
    config.validate()?;
    Ok(de_run(&objective, dimension, config, StreamKey::new(config.seed, 0)))
}

fn distinct_partners<R: Rng>(rng: &mut R, np: usize, target: usize) -> (usize, usize, usize) {
    let mut pick = |exclude: &[usize]| loop {
        let r = rng.gen_range(0..np);
        if !exclude.contains(&r) {
            return r;
        }
    };
    let r1 = pick(&[target]);
    let r2 = pick(&[target, r1]);
    let r3 = pick(&[target, r1, r2]);
    (r1, r2, r3)
}

fn de_run<F>(objective: &F, dimension: usize, config: &DeConfig, key: StreamKey) -> DeOutcome
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    assert!(dimension >= 1, "DE needs at least one dimension");
    let np = config.population;
    let mut rng = key.rng();
    let sample = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..np)
            .map(|_| (0..dimension).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect()
    };
    let mut pop = sample(&mut rng);
    let mut fitness: Vec<f64> = pop.iter().map(|x| objective(x)).collect();
    let mut evals = np as u64;

    let argmin = |f: &[f64]| {
        f.iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
    };
    let (best_idx, mut best_value) = argmin(&fitness);
    let mut best = pop[best_idx].clone();
    let mut best_trace = vec![best_value];
    let mut generation: u64 = 0;
    // best of the current population, and (value, generation) of its last real improvement
    let mut epoch_best = best_value;
    let mut last_progress = (epoch_best, 0u64);
    let done = |best_value: f64, evals: u64| {
        evals >= config.max_evals || config.stop_below.is_some_and(|t| best_value < t)
    };

    let mut trials: Vec<Vec<f64>> = vec![vec![0.0; dimension]; np];
    while !done(best_value, evals) {
        // build every trial from the current generation before any selection
        for (i, trial) in trials.iter_mut().enumerate() {
            let (r1, r2, r3) = distinct_partners(&mut rng, np, i);
            let forced = rng.gen_range(0..dimension);
            for j in 0..dimension {
                trial[j] = if j == forced || rng.gen::<f64>() < config.crossover_cr {
                    let v = pop[r1][j] + config.weight_f * (pop[r2][j] - pop[r3][j]);
                    v.clamp(-1.0, 1.0)
                } else {
                    pop[i][j]
                };
            }
        }
        for (i, trial) in trials.iter_mut().enumerate() {
            if done(best_value, evals) {
                break;
            }
            let value = objective(trial);
            evals += 1;
            if value <= fitness[i] {
                std::mem::swap(&mut pop[i], trial);
                fitness[i] = value;
                if value < best_value {
                    best_value = value;
                    best.clone_from(&pop[i]);
                }
                epoch_best = epoch_best.min(value);
            }
        }
        best_trace.push(best_value);
        generation += 1;

        if epoch_best < last_progress.0 - STALL_REL_IMPROVEMENT * last_progress.0.abs() {
            last_progress = (epoch_best, generation);
        }
        if let Some(stall) = config.stall_generations {
            if generation - last_progress.1 >= u64::from(stall) && !done(best_value, evals) {
                pop = sample(&mut rng);
                fitness.clear();
                for x in &pop {
                    if evals >= config.max_evals {
                        fitness.push(f64::INFINITY);
                        continue;
                    }
                    let value = objective(x);
                    evals += 1;
                    if value < best_value {
                        best_value = value;
                        best.clone_from(x);
                    }
                    fitness.push(value);
                }
                epoch_best = fitness.iter().copied().fold(f64::INFINITY, f64::min);
                last_progress = (epoch_best, generation);
            }
        }
    }
    DeOutcome {
        best: Genome(best),
        best_value,
        evals_used: evals,
        best_trace,
    }
}

fn genome_len(shape: BipartiteShape) -> usize {
    2 * (shape.m + shape.n)
}

fn decode_factor(values: &[f64]) -> Result<Vec<Complex64>> {
    let mut v: Vec<Complex64> = values.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    let norm = vec_norm(&v);
    if !(norm >= MIN_FACTOR_NORM) {
        return Err(Error::InvalidGenome { norm });
    }
    v.iter_mut().for_each(|z| *z /= norm);
    Ok(v)
}

/// First `2m` values are factor A (interleaved re/im), the remaining `2n` factor B;
/// each factor is normalized.
pub fn decode_product_state(g: &Genome, shape: BipartiteShape) -> Result<ProductState> {
    if g.0.len() != genome_len(shape) {
        return Err(Error::ShapeMismatch(format!(
            "genome length {} does not match shape {shape} (expected {})",
            g.0.len(),
            genome_len(shape)
        )));
    }
    let (a, b) = g.0.split_at(2 * shape.m);
    Ok(ProductState::new(
        PureState::from_raw(decode_factor(a)?),
        PureState::from_raw(decode_factor(b)?),
    ))
}

fn check_gate_shape(gate: &UnitaryGate, shape: BipartiteShape) -> Result<()> {
    if gate.dim() != shape.dim() {
        return Err(Error::ShapeMismatch(format!(
            "gate dimension {} does not match shape {shape}",
            gate.dim()
        )));
    }
    Ok(())
}

/// Genome → separability residual of the gate's output.
pub fn separability_objective(gate: &UnitaryGate, shape: BipartiteShape) -> Result<impl Fn(&[f64]) -> f64 + Sync + '_> {
    check_gate_shape(gate, shape)?;
    let dim = shape.dim();
    Ok(move |values: &[f64]| -> f64 {
        if values.len() != genome_len(shape) {
            return INVALID_PENALTY;
        }
        let (a, b) = values.split_at(2 * shape.m);
        let (Ok(fa), Ok(fb)) = (decode_factor(a), decode_factor(b)) else {
            return INVALID_PENALTY;
        };
        let input = kron_vec(&fa, &fb);
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        mul_vec_into(gate.matrix().as_slice(), dim, &input, &mut out);
        residual_total(&out, shape.m, shape.n)
    })
}

/// Genome → entanglement entropy of the gate's output.
pub fn entanglement_objective(
    gate: &UnitaryGate,
    shape: BipartiteShape,
    log_base: f64,
) -> Result<impl Fn(&[f64]) -> f64 + Sync + '_> {
    check_gate_shape(gate, shape)?;
    Ok(move |values: &[f64]| -> f64 {
        let Ok(input) = decode_product_state(&Genome(values.to_vec()), shape) else {
            return INVALID_PENALTY;
        };
        let out = PureState::from_raw(gate.matrix().mul_vec(input.flatten().amplitudes()));
        match schmidt_coefficients(&out, shape) {
            Ok(sigma) => entropy_from_schmidt(&sigma, log_base),
            Err(_) => INVALID_PENALTY,
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    CounterexampleFound {
        state: ProductState,
        residual: f64,
        entanglement: f64,
        evals_used: u64,
    },
    SurvivedBudget {
        best_residual: f64,
        best_entanglement: f64,
        best_state: ProductState,
        evals_used: u64,
    },
    RejectedByColumnFilter {
        column: usize,
    },
}

impl Verdict {
    pub fn kind(&self) -> &'static str {
        match self {
            Verdict::CounterexampleFound { .. } => "CounterexampleFound",
            Verdict::SurvivedBudget { .. } => "SurvivedBudget",
            Verdict::RejectedByColumnFilter { .. } => "RejectedByColumnFilter",
        }
    }

    /// True when the gate is shown not to be a universal entangler.
    pub fn is_counterexample(&self) -> bool {
        !matches!(self, Verdict::SurvivedBudget { .. })
    }
}

/// Outcome of one DE restart.
#[derive(Clone, Debug, PartialEq)]
pub struct RestartResult {
    pub index: u64,
    pub outcome: DeOutcome,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    pub verdict: Verdict,
    pub restarts: Vec<RestartResult>,
    pub filter: FilterOutcome,
}

/// Runs the given restart indices (concurrently where possible) and returns the
/// results in the order of `indices`. Restart `r` draws from stream `(seed, 2³² + r)`.
pub fn run_restarts<F>(objective: &F, dimension: usize, config: &DeConfig, indices: &[u64]) -> Vec<RestartResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    indices
        .par_iter()
        .map(|&index| RestartResult {
            index,
            outcome: de_run(objective, dimension, config, StreamKey::new(config.seed, RESTART_STREAM_BASE + index)),
        })
        .collect()
}

fn output_of(gate: &UnitaryGate, state: &ProductState) -> Result<PureState> {
    apply_gate(gate, &state.flatten())
}

/// Searches for a product input that the gate maps to a product state.
pub fn counterexample_search(gate: &UnitaryGate, shape: BipartiteShape, config: &DeConfig) -> Result<Verdict> {
    Ok(counterexample_search_detailed(gate, shape, config)?.verdict)
}

pub fn counterexample_search_detailed(
    gate: &UnitaryGate,
    shape: BipartiteShape,
    config: &DeConfig,
) -> Result<SearchReport> {
    config.validate()?;
    check_gate_shape(gate, shape)?;
    let filter = column_separability_filter(gate, shape, TOL_SEPARABLE)?;
    if let FilterOutcome::Fail { column, .. } = filter {
        if !config.skip_filter {
            return Ok(SearchReport {
                verdict: Verdict::RejectedByColumnFilter { column },
                restarts: Vec::new(),
                filter,
            });
        }
    }

    let objective = separability_objective(gate, shape)?;
    let mut run_config = config.clone();
    run_config.stop_below = Some(config.stop_below.unwrap_or(config.residual_tol / 10.0));
    let indices: Vec<u64> = (0..u64::from(config.restarts)).collect();
    let restarts = run_restarts(&objective, genome_len(shape), &run_config, &indices);
    let evals_used: u64 = restarts.iter().map(|r| r.outcome.evals_used).sum();

    let mut best: Option<(f64, f64, ProductState)> = None;
    for r in &restarts {
        let state = decode_product_state(&r.outcome.best, shape)?;
        let output = output_of(gate, &state)?;
        let entanglement = entanglement_entropy(&output, shape, std::f64::consts::E)?;
        let residual = r.outcome.best_value;
        if residual < config.residual_tol && entanglement < config.entropy_tol {
            return Ok(SearchReport {
                verdict: Verdict::CounterexampleFound {
                    state,
                    residual,
                    entanglement,
                    evals_used,
                },
                restarts,
                filter,
            });
        }
        if best.as_ref().map_or(true, |(b, _, _)| residual < *b) {
            best = Some((residual, entanglement, state));
        }
    }
    let (best_residual, best_entanglement, best_state) = best.expect("at least one restart");
    Ok(SearchReport {
        verdict: Verdict::SurvivedBudget {
            best_residual,
            best_entanglement,
            best_state,
            evals_used,
        },
        restarts,
        filter,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinEntanglement {
    pub best_entanglement: f64,
    /// Separability residual of the output at the best state.
    pub best_residual: f64,
    pub best_state: ProductState,
    pub evals_used: u64,
    pub log_base: f64,
    pub restarts: Vec<RestartResult>,
}

/// Minimizes the output entanglement over product inputs. The column filter is
/// not consulted; callers decide whether a rejected gate is worth searching.
pub fn min_entanglement_search(
    gate: &UnitaryGate,
    shape: BipartiteShape,
    config: &DeConfig,
    log_base: f64,
) -> Result<MinEntanglement> {
    config.validate()?;
    let objective = entanglement_objective(gate, shape, log_base)?;
    let indices: Vec<u64> = (0..u64::from(config.restarts)).collect();
    let restarts = run_restarts(&objective, genome_len(shape), config, &indices);
    let evals_used = restarts.iter().map(|r| r.outcome.evals_used).sum();
    let winner = restarts
        .iter()
        .min_by(|a, b| a.outcome.best_value.total_cmp(&b.outcome.best_value))
        .expect("at least one restart");
    let best_state = decode_product_state(&winner.outcome.best, shape)?;
    let output = output_of(gate, &best_state)?;
    let best_residual = residual_total(output.amplitudes(), shape.m, shape.n);
    Ok(MinEntanglement {
        best_entanglement: winner.outcome.best_value,
        best_residual,
        best_state,
        evals_used,
        log_base,
        restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{candidate, hadamard_uh, identity, Candidate};
    use crate::sampling::random_product_state;

    fn shape34() -> BipartiteShape {
        BipartiteShape::new(3, 4).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(DeConfig::default().validate().is_ok());
        let bad = DeConfig { population: 3, ..DeConfig::default() };
        assert!(bad.validate().is_err());
        let bad = DeConfig { weight_f: 2.0, ..DeConfig::default() };
        assert!(bad.validate().is_err());
        let bad = DeConfig { crossover_cr: 1.5, ..DeConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn constant_objective() {
        let cfg = DeConfig { max_evals: 500, ..DeConfig::default() };
        let out = de_minimize(|_| 3.25, 5, &cfg).unwrap();
        assert_eq!(out.best_value, 3.25);
        assert_eq!(out.evals_used, 500);
    }

    #[test]
    fn trace_is_monotone_and_runs_reproduce() {
        let cfg = DeConfig { max_evals: 4_000, seed: 17, ..DeConfig::default() };
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (v - 0.1 * i as f64).powi(2)).sum::<f64>();
        let a = de_minimize(f, 6, &cfg).unwrap();
        assert!(a.best_trace.windows(2).all(|w| w[1] <= w[0]));
        let b = de_minimize(f, 6, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.best.values().iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn decode_basics() {
        let shape = shape34();
        let mut v = vec![0.0; 14];
        v[0] = 1.0;
        v[6] = 1.0;
        let p = decode_product_state(&Genome(v.clone()), shape).unwrap();
        assert_eq!(p.flatten(), PureState::basis(12, 0));

        let g = Genome::encode(&random_product_state(shape, StreamKey::new(2, 2)));
        let half = Genome(g.values().iter().map(|x| 0.5 * x).collect());
        let (p1, p2) = (decode_product_state(&g, shape).unwrap(), decode_product_state(&half, shape).unwrap());
        let d: f64 = p1
            .flatten()
            .amplitudes()
            .iter()
            .zip(p2.flatten().amplitudes())
            .map(|(a, b)| (a - b).norm())
            .sum();
        assert!(d < 1e-12);

        let zeros = Genome(vec![0.0; 14]);
        assert!(matches!(decode_product_state(&zeros, shape), Err(Error::InvalidGenome { .. })));
        assert!(decode_product_state(&Genome(vec![0.5; 13]), shape).is_err());
    }

    #[test]
    fn objective_examples() {
        let shape = shape34();
        let uh = hadamard_uh().unwrap();
        let f = separability_objective(&uh, shape).unwrap();
        let mut e00 = vec![0.0; 14];
        e00[0] = 1.0;
        e00[6] = 1.0;
        assert!(f(&e00) < 1e-12);
        assert_eq!(f(&[0.0; 14]), INVALID_PENALTY);

        let id = identity(12);
        let g = separability_objective(&id, shape).unwrap();
        for i in 0..50 {
            let genome = Genome::encode(&random_product_state(shape, StreamKey::new(9, i)));
            assert!(g(genome.values()) < 1e-10);
        }
    }

    #[test]
    fn candidate_objective_stays_positive_on_random_genomes() {
        let shape = shape34();
        let ue1 = candidate(Candidate::UE1).unwrap();
        let f = separability_objective(&ue1, shape).unwrap();
        let mut rng = StreamKey::new(99, 0).rng();
        for _ in 0..1000 {
            let g: Vec<f64> = (0..14).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            assert!(f(&g) > 1e-6);
        }
    }

    #[test]
    fn uh_is_rejected_by_filter() {
        let v = counterexample_search(&hadamard_uh().unwrap(), shape34(), &DeConfig::default()).unwrap();
        assert_eq!(v, Verdict::RejectedByColumnFilter { column: 0 });
    }

    #[test]
    fn identity_min_entanglement_is_zero() {
        let cfg = DeConfig { max_evals: 400, ..DeConfig::default() };
        let r = min_entanglement_search(&identity(12), shape34(), &cfg, std::f64::consts::E).unwrap();
        assert!(r.best_entanglement < 1e-10);
    }
}
