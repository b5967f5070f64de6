//! Real-coded genetic algorithm over the full weight set of a model.
//!
//! A chromosome is the flat gene vector `v_0 .. v_{M-1}, w_0 .. w_{M-1}`.
//! Each generation keeps the `elitism_count` best members unchanged and fills
//! the rest with tournament selection, BLX-alpha crossover and per-gene
//! Gaussian mutation whose sigma decays geometrically.
//!
//! Random draws come from one seeded generator in a fixed order: the initial
//! population gene by gene, then for every child slot (in population order)
//! the two tournaments, the crossover draws and the mutation draws. Fitness
//! evaluation consumes no randomness, so evaluating in parallel leaves the
//! stream untouched.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::model::{EmotionalUnit, Mode, ModelShape, Output, WtaennModel};
use crate::random::{gaussian, seeded, uniform, WtaRng};

/// Fitness assigned when a chromosome yields a non-finite prediction.
pub const WORST_FITNESS: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chromosome {
    pub genes: Vec<f64>,
}

pub fn encode(model: &WtaennModel) -> Chromosome {
    let units = model.units();
    let genes = units
        .iter()
        .flat_map(|u| u.v.iter())
        .chain(units.iter().flat_map(|u| u.w.iter()))
        .copied()
        .collect();
    Chromosome { genes }
}

pub fn decode(chromosome: &Chromosome, shape: &ModelShape) -> Result<WtaennModel> {
    let expected = shape.gene_count();
    if chromosome.genes.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: chromosome.genes.len(),
        });
    }
    let m = shape.spec.expanded_dim();
    let (v, w) = chromosome.genes.split_at(shape.units * m);
    let units = v
        .chunks_exact(m)
        .zip(w.chunks_exact(m))
        .map(|(v, w)| EmotionalUnit {
            v: v.to_vec(),
            w: w.to_vec(),
        })
        .collect();
    WtaennModel::new(shape.clone(), units)
}

fn default_population() -> usize {
    60
}
fn default_generations() -> usize {
    200
}
fn default_tournament() -> usize {
    3
}
fn default_crossover() -> f64 {
    0.9
}
fn default_alpha() -> f64 {
    0.5
}
fn default_sigma() -> f64 {
    0.3
}
fn default_decay() -> f64 {
    0.995
}
fn default_elitism() -> usize {
    2
}
fn default_init_range() -> (f64, f64) {
    (-1.0, 1.0)
}
fn default_patience() -> usize {
    50
}
fn default_parallel() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_generations")]
    pub generations: usize,
    #[serde(default = "default_tournament")]
    pub tournament_size: usize,
    #[serde(default = "default_crossover")]
    pub crossover_rate: f64,
    #[serde(default = "default_alpha")]
    pub blx_alpha: f64,
    /// Per-gene mutation probability; `1 / gene_count` when absent.
    #[serde(default)]
    pub mutation_rate: Option<f64>,
    #[serde(default = "default_sigma")]
    pub mutation_sigma_initial: f64,
    #[serde(default = "default_decay")]
    pub sigma_decay: f64,
    #[serde(default = "default_elitism")]
    pub elitism_count: usize,
    #[serde(default = "default_init_range")]
    pub init_weight_range: (f64, f64),
    #[serde(default)]
    pub seed: u64,
    /// Stop after this many generations without a strict improvement.
    #[serde(default = "default_patience")]
    pub fitness_stagnation_patience: usize,
    /// Record the best chromosome every this many generations (0 disables).
    #[serde(default)]
    pub snapshot_every: usize,
    /// Evaluate fitness data-parallel. Results do not depend on this flag.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: default_population(),
            generations: default_generations(),
            tournament_size: default_tournament(),
            crossover_rate: default_crossover(),
            blx_alpha: default_alpha(),
            mutation_rate: None,
            mutation_sigma_initial: default_sigma(),
            sigma_decay: default_decay(),
            elitism_count: default_elitism(),
            init_weight_range: default_init_range(),
            seed: 0,
            fitness_stagnation_patience: default_patience(),
            snapshot_every: 0,
            parallel: default_parallel(),
        }
    }
}

impl GaConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.population_size < 2 {
            return bad(format!("population_size {} < 2", self.population_size));
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be below population_size".into());
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be at least 1".into());
        }
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.crossover_rate) || !self.mutation_rate.is_none_or(unit) {
            return bad("rates must lie in [0, 1]".into());
        }
        if !(self.blx_alpha >= 0.0 && self.mutation_sigma_initial >= 0.0 && self.sigma_decay >= 0.0) {
            return bad("blx_alpha, mutation sigma and sigma_decay must be non-negative".into());
        }
        let (lo, hi) = self.init_weight_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad(format!("init_weight_range ({lo}, {hi}) is not a finite interval"));
        }
        Ok(())
    }

    fn mutation_rate_for(&self, genes: usize) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / genes as f64)
    }
}

/// Evaluates chromosomes against a dataset. Inputs are expanded once up front.
pub struct Fitness<'a> {
    shape: &'a ModelShape,
    patterns: Vec<Vec<f64>>,
    targets: &'a Targets,
}

impl<'a> Fitness<'a> {
    pub fn new(shape: &'a ModelShape, dataset: &'a Dataset) -> Result<Self> {
        shape.validate()?;
        if dataset.is_empty() {
            return Err(Error::Empty);
        }
        if dataset.mode() != shape.mode {
            return Err(Error::Config(format!(
                "{:?} model cannot be trained on {:?} data",
                shape.mode,
                dataset.mode()
            )));
        }
        if let Mode::Classification = shape.mode {
            let have = shape.n_classes();
            if dataset.n_classes() > have {
                return Err(Error::Config(format!(
                    "data has {} classes but the units carry only {have}",
                    dataset.n_classes()
                )));
            }
        }
        let patterns = dataset
            .inputs()
            .iter()
            .map(|s| shape.spec.expand(s))
            .collect::<Result<_>>()?;
        Ok(Self {
            shape,
            patterns,
            targets: dataset.targets(),
        })
    }

    /// `-MSE` for regression, `-(error rate)` for classification.
    pub fn evaluate(&self, chromosome: &Chromosome) -> Result<f64> {
        let model = decode(chromosome, self.shape)?;
        let mut excitation = vec![0.0; self.shape.units];
        let n = self.patterns.len() as f64;
        let score = match self.targets {
            Targets::Regression(y) => {
                let mut sse = 0.0;
                for (p, &t) in self.patterns.iter().zip(y) {
                    let (winner, raw) = model.respond(p, &mut excitation);
                    let Output::Value(out) = model.decode_output(winner, raw) else {
                        unreachable!("regression shape decodes to values")
                    };
                    if !out.is_finite() {
                        return Ok(WORST_FITNESS);
                    }
                    sse += (out - t) * (out - t);
                }
                -(sse / n)
            }
            Targets::Classification { labels, .. } => {
                let mut wrong = 0usize;
                for (p, &label) in self.patterns.iter().zip(labels) {
                    let (winner, raw) = model.respond(p, &mut excitation);
                    if !excitation.iter().all(|a| a.is_finite()) {
                        return Ok(WORST_FITNESS);
                    }
                    if model.decode_output(winner, raw) != Output::Class(label) {
                        wrong += 1;
                    }
                }
                -(wrong as f64 / n)
            }
        };
        Ok(if score.is_nan() { WORST_FITNESS } else { score })
    }

    /// Fitness of every member, gathered in population order.
    pub fn evaluate_all(&self, members: &[Chromosome], parallel: bool) -> Result<Vec<f64>> {
        if parallel {
            members.par_iter().map(|c| self.evaluate(c)).collect()
        } else {
            members.iter().map(|c| self.evaluate(c)).collect()
        }
    }
}

pub fn fitness(chromosome: &Chromosome, dataset: &Dataset, shape: &ModelShape) -> Result<f64> {
    Fitness::new(shape, dataset)?.evaluate(chromosome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Chromosome>,
    /// Mutation sigma used to breed the next generation.
    pub sigma: f64,
}

impl Population {
    /// Uniform initial weights in `config.init_weight_range`.
    pub fn random(shape: &ModelShape, config: &GaConfig, rng: &mut WtaRng) -> Self {
        let (lo, hi) = config.init_weight_range;
        let len = shape.gene_count();
        let members = (0..config.population_size)
            .map(|_| Chromosome {
                genes: (0..len).map(|_| lo + (hi - lo) * uniform(rng)).collect(),
            })
            .collect();
        Self {
            members,
            sigma: config.mutation_sigma_initial,
        }
    }
}

/// Indices sorted by fitness, best first; ties keep population order.
fn ranking(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
    order
}

fn tournament(fitness: &[f64], size: usize, rng: &mut WtaRng) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] > fitness[best] {
            best = c;
        }
    }
    best
}

/// BLX-alpha: each child gene is uniform on the parents' interval widened by
/// `alpha` times its length on both sides.
pub fn blx_crossover(a: &[f64], b: &[f64], alpha: f64, rng: &mut WtaRng) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            let spread = alpha * (hi - lo);
            let low = lo - spread;
            low + (hi + spread - low) * uniform(rng)
        })
        .collect()
}

fn mutate(genes: &mut [f64], rate: f64, sigma: f64, rng: &mut WtaRng) {
    for g in genes.iter_mut() {
        if uniform(rng) < rate {
            let step = sigma * gaussian(rng);
            if step != 0.0 {
                *g += step;
            }
        }
    }
}

/// Breed the next generation from already evaluated members.
pub fn breed(population: &Population, fitness: &[f64], config: &GaConfig, rng: &mut WtaRng) -> Population {
    let n = population.members.len();
    let genes = population.members[0].genes.len();
    let rate = config.mutation_rate_for(genes);
    let order = ranking(fitness);
    let mut next: Vec<Chromosome> = order[..config.elitism_count.min(n)]
        .iter()
        .map(|&i| population.members[i].clone())
        .collect();
    while next.len() < n {
        let a = tournament(fitness, config.tournament_size, rng);
        let b = tournament(fitness, config.tournament_size, rng);
        let mut child = if uniform(rng) < config.crossover_rate {
            blx_crossover(
                &population.members[a].genes,
                &population.members[b].genes,
                config.blx_alpha,
                rng,
            )
        } else {
            let better = if fitness[a] >= fitness[b] { a } else { b };
            population.members[better].genes.clone()
        };
        mutate(&mut child, rate, population.sigma, rng);
        next.push(Chromosome { genes: child });
    }
    Population {
        members: next,
        sigma: population.sigma * config.sigma_decay,
    }
}

/// Evaluate `population` on `dataset` and breed its successor.
pub fn evolve_generation(
    population: &Population,
    dataset: &Dataset,
    shape: &ModelShape,
    config: &GaConfig,
    rng: &mut WtaRng,
) -> Result<Population> {
    if population.members.len() != config.population_size {
        return Err(Error::DimensionMismatch {
            expected: config.population_size,
            actual: population.members.len(),
        });
    }
    let fitness = Fitness::new(shape, dataset)?.evaluate_all(&population.members, config.parallel)?;
    Ok(breed(population, &fitness, config, rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

#[derive(Debug, Clone)]
pub struct TrainTrace {
    /// One entry per bred generation; empty when `generations = 0`.
    pub generations: Vec<GenerationStats>,
    /// Best chromosome every `snapshot_every` generations.
    pub snapshots: Vec<(usize, Chromosome)>,
    pub best_fitness: f64,
    pub best: Chromosome,
    pub model: WtaennModel,
    pub seed: u64,
    pub wall_time_secs: f64,
}

impl TrainTrace {
    /// `generation,best,mean` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "generation,best,mean")?;
        for g in &self.generations {
            writeln!(out, "{},{},{}", g.generation, g.best, g.mean)?;
        }
        Ok(())
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn train(shape: &ModelShape, dataset: &Dataset, config: &GaConfig) -> Result<TrainTrace> {
    let started = Instant::now();
    config.validate()?;
    let fitness = Fitness::new(shape, dataset)?;
    let mut rng = seeded(config.seed);

    let mut population = Population::random(shape, config, &mut rng);
    let mut scores = fitness.evaluate_all(&population.members, config.parallel)?;
    let top = ranking(&scores)[0];
    let mut best = population.members[top].clone();
    let mut best_fitness = scores[top];

    let mut generations = Vec::with_capacity(config.generations);
    let mut snapshots = Vec::new();
    let mut stale = 0;
    for generation in 1..=config.generations {
        population = breed(&population, &scores, config, &mut rng);
        scores = fitness.evaluate_all(&population.members, config.parallel)?;
        let top = ranking(&scores)[0];
        generations.push(GenerationStats {
            generation,
            best: scores[top],
            mean: mean(&scores),
        });
        if scores[top] > best_fitness {
            best_fitness = scores[top];
            best = population.members[top].clone();
            stale = 0;
        } else {
            stale += 1;
        }
        if config.snapshot_every > 0 && generation % config.snapshot_every == 0 {
            snapshots.push((generation, best.clone()));
        }
        if stale >= config.fitness_stagnation_patience {
            log::debug!("stopping at generation {generation}: no improvement for {stale}");
            break;
        }
    }

    let model = decode(&best, shape)?;
    Ok(TrainTrace {
        generations,
        snapshots,
        best_fitness,
        best,
        model,
        seed: config.seed,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
