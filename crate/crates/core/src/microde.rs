//! Micro differential evolution over projection-angle subsets.
//!
//! Genomes are continuous vectors in `[0, 180)^n`; each is decoded to a
//! discrete [`AngleSet`] by snapping genes to a grid of `quantization_step`
//! degrees before evaluation. Variation is DE/rand/1 with binomial crossover
//! and one-to-one (parent vs. trial) selection on a synchronous generation.
//!
//! Every random draw comes from a ChaCha stream keyed by
//! `(seed, generation, individual)`, so trials can be evaluated in parallel
//! without affecting the outcome.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{reconstruction_fitness, CorrelationScore};
use crate::image_io::GrayImage;
use crate::radon::AngleSet;
use crate::search::{BestTracker, SearchResult};

const UPPER: f64 = 180.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEConfig {
    /// Np.
    pub population_size: usize,
    /// F.
    pub scale_factor: f64,
    /// Cr.
    pub crossover_rate: f64,
    /// NFC_max: total fitness evaluations, initial population included.
    pub max_evaluations: usize,
    pub seed: u64,
    /// Grid spacing of decoded angles, in degrees.
    pub quantization_step: f64,
    /// Optional early stop once the best score reaches this value.
    #[serde(default)]
    pub value_to_reach: Option<f64>,
}

impl DEConfig {
    /// Np = 6, F = 0.5, Cr = 0.9, NFC_max = 300 on a 10 degree grid.
    pub fn four_of_180(seed: u64) -> Self {
        Self {
            population_size: 6,
            scale_factor: 0.5,
            crossover_rate: 0.9,
            max_evaluations: 300,
            seed,
            quantization_step: 10.0,
            value_to_reach: None,
        }
    }

    /// Np = 10, F = 0.5, Cr = 0.9, NFC_max = 400 on a 10 degree grid.
    pub fn eight_of_180(seed: u64) -> Self {
        Self {
            population_size: 10,
            max_evaluations: 400,
            ..Self::four_of_180(seed)
        }
    }

    /// The 4-angle setting restricted to the 16 equidistant angles (11.25 degree grid).
    pub fn sixteen_grid(seed: u64) -> Self {
        Self {
            quantization_step: 11.25,
            ..Self::four_of_180(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.population_size < 4 {
            return fail(format!("population size {} < 4", self.population_size));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor <= 2.0) {
            return fail(format!("scale factor {} outside (0, 2]", self.scale_factor));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return fail(format!("crossover rate {} outside [0, 1]", self.crossover_rate));
        }
        if self.max_evaluations < self.population_size {
            return fail(format!(
                "max evaluations {} below population size {}",
                self.max_evaluations, self.population_size
            ));
        }
        if !(self.quantization_step > 0.0 && self.quantization_step <= UPPER) {
            return fail(format!("quantization step {} outside (0, 180]", self.quantization_step));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub fitness: Option<CorrelationScore>,
}

/// Number of grid slots in `[0, 180)` for a given step.
pub fn grid_slots(step: f64) -> usize {
    ((UPPER / step) - 1e-9).ceil().max(1.0) as usize
}

/// Snaps genes to multiples of `step` (mod 180). A gene landing on an occupied
/// slot moves to the next free slot upward, wrapping at 180. Output is sorted.
pub fn decode_genome(genes: &[f64], step: f64) -> Result<AngleSet> {
    let slots = grid_slots(step);
    if genes.len() > slots {
        return Err(Error::InvalidConfig(format!(
            "{} angles requested but a {step} degree grid has only {slots} slots",
            genes.len()
        )));
    }
    let mut taken = vec![false; slots];
    let mut angles = Vec::with_capacity(genes.len());
    for &g in genes {
        let mut slot = ((g / step).round() as i64).rem_euclid(slots as i64) as usize;
        while taken[slot] {
            slot = (slot + 1) % slots;
        }
        taken[slot] = true;
        angles.push(slot as f64 * step);
    }
    AngleSet::new(angles)
}

/// Folds a value back into `[0, 180)` by mirroring at the bounds.
pub fn reflect_into_range(v: f64) -> f64 {
    let mut w = v.rem_euclid(2.0 * UPPER);
    if w >= UPPER {
        w = 2.0 * UPPER - w;
    }
    if w >= UPPER {
        // only reachable when w was exactly 180
        w = UPPER.next_down();
    }
    w
}

fn stream(seed: u64, generation: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 32) | index);
    rng
}

fn pick_distinct(rng: &mut ChaCha8Rng, np: usize, exclude: &[usize]) -> usize {
    loop {
        let r = rng.random_range(0..np);
        if !exclude.contains(&r) {
            return r;
        }
    }
}

fn make_trial(pop: &[Individual], target: usize, cfg: &DEConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let np = pop.len();
    let r1 = pick_distinct(rng, np, &[target]);
    let r2 = pick_distinct(rng, np, &[target, r1]);
    let r3 = pick_distinct(rng, np, &[target, r1, r2]);
    let parent = &pop[target].genome;
    let dims = parent.len();
    let forced = rng.random_range(0..dims);
    (0..dims)
        .map(|j| {
            let take_mutant = rng.random::<f64>() < cfg.crossover_rate || j == forced;
            if take_mutant {
                let v = pop[r1].genome[j] + cfg.scale_factor * (pop[r2].genome[j] - pop[r3].genome[j]);
                reflect_into_range(v)
            } else {
                parent[j]
            }
        })
        .collect()
}

/// Runs micro-DE with an arbitrary objective. `observe` sees the population
/// after initialization (generation 0) and after each generation's selection.
pub fn mde_optimize_observed<F, O>(objective: F, n: usize, cfg: &DEConfig, mut observe: O) -> Result<SearchResult>
where
    F: Fn(&AngleSet) -> Result<CorrelationScore> + Sync,
    O: FnMut(usize, &[Individual]),
{
    cfg.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("cannot search for zero angles".into()));
    }
    let step = cfg.quantization_step;
    let np = cfg.population_size;
    let reached = |tracker: &BestTracker| match (cfg.value_to_reach, tracker.best_score()) {
        (Some(target), Some(best)) => best.rank() >= target,
        _ => false,
    };

    let mut tracker = BestTracker::default();
    let genomes: Vec<Vec<f64>> = (0..np)
        .map(|i| {
            let mut rng = stream(cfg.seed, 0, i as u64);
            (0..n).map(|_| rng.random_range(0.0..UPPER)).collect()
        })
        .collect();
    let decoded: Vec<AngleSet> = genomes.iter().map(|g| decode_genome(g, step)).collect::<Result<_>>()?;
    let scores: Vec<CorrelationScore> = decoded.par_iter().map(&objective).collect::<Result<_>>()?;
    let mut pop: Vec<Individual> = genomes
        .into_iter()
        .zip(&scores)
        .map(|(genome, &s)| Individual {
            genome,
            fitness: Some(s),
        })
        .collect();
    for (angles, score) in decoded.iter().zip(scores) {
        tracker.record(angles, score);
    }
    let mut evaluations = np;
    observe(0, &pop);

    let mut generation = 1u64;
    while evaluations < cfg.max_evaluations && !reached(&tracker) {
        let count = np.min(cfg.max_evaluations - evaluations);
        let trials: Vec<(Vec<f64>, AngleSet, CorrelationScore)> = (0..count)
            .into_par_iter()
            .map(|target| {
                let mut rng = stream(cfg.seed, generation, target as u64);
                let genome = make_trial(&pop, target, cfg, &mut rng);
                let angles = decode_genome(&genome, step)?;
                let score = objective(&angles)?;
                Ok((genome, angles, score))
            })
            .collect::<Result<_>>()?;
        for (target, (genome, angles, score)) in trials.into_iter().enumerate() {
            tracker.record(&angles, score);
            let parent = pop[target].fitness.unwrap_or_default();
            if score.rank() >= parent.rank() {
                pop[target] = Individual {
                    genome,
                    fitness: Some(score),
                };
            }
        }
        evaluations += count;
        observe(generation as usize, &pop);
        generation += 1;
    }
    Ok(tracker.finish().expect("population is non-empty"))
}

pub fn mde_optimize_with<F>(objective: F, n: usize, cfg: &DEConfig) -> Result<SearchResult>
where
    F: Fn(&AngleSet) -> Result<CorrelationScore> + Sync,
{
    mde_optimize_observed(objective, n, cfg, |_, _| {})
}

/// Micro-DE with the reconstruction-correlation objective.
pub fn mde_optimize(img: &GrayImage, n: usize, cfg: &DEConfig) -> Result<SearchResult> {
    img.side()?;
    mde_optimize_with(|a| reconstruction_fitness(img, a), n, cfg)
}
