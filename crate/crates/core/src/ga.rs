//! Genetic-algorithm wrapper selection of a fixed number of features.
//!
//! A chromosome is a sorted set of exactly `k_select` column indices. Each
//! generation is scored by cross-validated PLS error (lower is better), the
//! top 20% plus a random 5% drawn from the rest form the parent pool, random
//! couples of that pool each produce 8 children, and a Normal(0.10, 0.01)
//! fraction of the children receives a single-gene swap mutation. With the
//! default population of 400 this gives 80 + 20 parents, 50 couples and
//! 400 children per generation.

use std::collections::HashMap;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{kfold_split, FoldSplit};
use crate::pls::{cv_curve, pls_cv, ComponentRule, GramFolds};
use crate::rng::{self, derive_seed};
use crate::{Error, Result};

/// Widest input for which `CurveMin` fitness uses per-fold cross-product
/// matrices.
const GRAM_MAX_DIM: usize = 1024;

/// A feature subset: sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Individual {
    mask: Vec<usize>,
}

impl Individual {
    pub fn new(mut mask: Vec<usize>, feature_dim: usize) -> Result<Self> {
        mask.sort_unstable();
        let before = mask.len();
        mask.dedup();
        if mask.len() != before {
            return Err(Error::invalid("feature mask contains duplicates"));
        }
        if mask.last().is_some_and(|&m| m >= feature_dim) {
            return Err(Error::invalid(format!("feature index out of range 0..{feature_dim}")));
        }
        if mask.is_empty() {
            return Err(Error::invalid("feature mask is empty"));
        }
        Ok(Individual { mask })
    }

    pub fn random(k: usize, feature_dim: usize, rng: &mut impl Rng) -> Self {
        let mut mask = index::sample(rng, feature_dim, k).into_vec();
        mask.sort_unstable();
        Individual { mask }
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn contains(&self, feature: usize) -> bool {
        self.mask.binary_search(&feature).is_ok()
    }
}

/// Fitness criterion: cross-validated PLS RMSECV of the masked columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaFitness {
    /// Exactly the plain PLS cross-validation used for reporting.
    Pls(ComponentRule),
    /// Minimum of the RMSECV curve over `1..=max` components on the shared
    /// split; one NIPALS fit per fold.
    CurveMin { max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population: usize,
    pub elite_frac: f64,
    pub lucky_frac: f64,
    pub children_per_pair: usize,
    pub mutation_frac_mean: f64,
    pub mutation_frac_std: f64,
    pub generations: usize,
    pub k_select: usize,
    pub inner_cv_folds: usize,
    /// Carry the best parent into the next generation (replacing a random child).
    pub elitism: bool,
    pub fitness: GaFitness,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 400,
            elite_frac: 0.20,
            lucky_frac: 0.05,
            children_per_pair: 8,
            mutation_frac_mean: 0.10,
            mutation_frac_std: 0.01,
            generations: 20,
            k_select: 100,
            inner_cv_folds: 10,
            elitism: true,
            fitness: GaFitness::CurveMin { max: 10 },
            seed: 0,
        }
    }
}

fn ceil_count(frac: f64, population: usize) -> usize {
    (frac * population as f64 - 1e-9).ceil().max(0.0) as usize
}

impl GaConfig {
    pub fn elite_count(&self) -> usize {
        ceil_count(self.elite_frac, self.population)
    }

    pub fn lucky_count(&self) -> usize {
        ceil_count(self.lucky_frac, self.population)
    }

    pub fn pool_size(&self) -> usize {
        self.elite_count() + self.lucky_count()
    }

    pub fn validate(&self) -> Result<()> {
        let fracs = [self.elite_frac, self.lucky_frac, self.mutation_frac_mean];
        if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || !(self.mutation_frac_std >= 0.0) {
            return Err(Error::invalid("GA fractions must lie in [0, 1] and std must be >= 0"));
        }
        let pool = self.pool_size();
        if pool < 2 || !pool.is_multiple_of(2) || pool > self.population {
            return Err(Error::invalid(format!("GA parent pool of {pool} cannot be paired")));
        }
        if pool / 2 * self.children_per_pair != self.population {
            return Err(Error::invalid(format!(
                "{} couples x {} children does not conserve population {}",
                pool / 2,
                self.children_per_pair,
                self.population
            )));
        }
        if self.k_select == 0 || self.generations == 0 || self.inner_cv_folds < 2 {
            return Err(Error::invalid("GA needs k_select >= 1, generations >= 1, inner folds >= 2"));
        }
        if let GaFitness::CurveMin { max: 0 } | GaFitness::Pls(ComponentRule::Fixed(0)) = self.fitness {
            return Err(Error::invalid("GA fitness needs at least one PLS component"));
        }
        Ok(())
    }
}

/// Cross-validated PLS error of the columns in `mask`.
pub fn fitness(
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    mask: &Individual,
    split: &FoldSplit,
    criterion: GaFitness,
    seed: u64,
) -> Result<f64> {
    if mask.mask.last().is_some_and(|&m| m >= x.ncols()) {
        return Err(Error::DimensionMismatch { expected: mask.mask[mask.len() - 1] + 1, found: x.ncols() });
    }
    let sub = x.select(Axis(1), &mask.mask);
    match criterion {
        GaFitness::Pls(rule) => Ok(pls_cv(sub.view(), y, split, rule, seed)?.rmsecv),
        GaFitness::CurveMin { max } => {
            let curve = cv_curve(sub.view(), y, split, max)?;
            Ok(curve.into_iter().fold(f64::INFINITY, f64::min))
        }
    }
}

/// Parent indices into the ranked population.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParentPool {
    pub elites: Vec<usize>,
    pub lucky: Vec<usize>,
}

impl ParentPool {
    pub fn len(&self) -> usize {
        self.elites.len() + self.lucky.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.elites.iter().chain(&self.lucky).copied()
    }
}

/// Individuals sorted by ascending fitness; ties keep population order.
pub fn rank(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]).then(a.cmp(&b)));
    order
}

/// Top `⌈elite_frac·P⌉` by fitness plus `⌈lucky_frac·P⌉` drawn uniformly
/// without replacement from the rest.
pub fn select_parents(fitnesses: &[f64], config: &GaConfig, rng: &mut impl Rng) -> Result<ParentPool> {
    if fitnesses.len() != config.population {
        return Err(Error::DimensionMismatch { expected: config.population, found: fitnesses.len() });
    }
    let order = rank(fitnesses);
    let (elites, rest) = order.split_at(config.elite_count());
    let lucky = index::sample(rng, rest.len(), config.lucky_count()).into_iter().map(|i| rest[i]).collect();
    Ok(ParentPool { elites: elites.to_vec(), lucky })
}

/// `count` children of two parents. Each child inherits every shared gene
/// and fills its remaining slots uniformly from the genes only one parent
/// carries.
pub fn crossover(
    a: &Individual,
    b: &Individual,
    k_select: usize,
    feature_dim: usize,
    count: usize,
    rng: &mut impl Rng,
) -> Vec<Individual> {
    let shared: Vec<usize> = a.mask.iter().copied().filter(|g| b.contains(*g)).collect();
    let mut either: Vec<usize> = a
        .mask
        .iter()
        .chain(&b.mask)
        .copied()
        .filter(|g| !(a.contains(*g) && b.contains(*g)))
        .collect();
    either.sort_unstable();
    (0..count)
        .map(|_| {
            let mut mask = shared.clone();
            mask.truncate(k_select);
            let need = k_select - mask.len();
            let take = need.min(either.len());
            mask.extend(index::sample(rng, either.len(), take).into_iter().map(|i| either[i]));
            if mask.len() < k_select {
                let complement: Vec<usize> = (0..feature_dim).filter(|g| !mask.contains(g)).collect();
                let more = k_select - mask.len();
                mask.extend(index::sample(rng, complement.len(), more).into_iter().map(|i| complement[i]));
            }
            mask.sort_unstable();
            Individual { mask }
        })
        .collect()
}

/// Mutates a Normal(mean, std) fraction of `children` in place: each chosen
/// individual swaps one selected feature for one unselected feature.
/// Returns the indices of the mutated children.
pub fn mutate_generation(
    children: &mut [Individual],
    config: &GaConfig,
    feature_dim: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    let frac = Normal::new(config.mutation_frac_mean, config.mutation_frac_std)
        .expect("validated std")
        .sample(rng)
        .clamp(0.0, 1.0);
    let count = ((frac * children.len() as f64).round() as usize).min(children.len());
    let mut chosen = index::sample(rng, children.len(), count).into_vec();
    chosen.sort_unstable();
    for &c in &chosen {
        let ind = &mut children[c];
        if ind.len() >= feature_dim {
            continue;
        }
        let out = rng.random_range(0..ind.len());
        let unselected: Vec<usize> = (0..feature_dim).filter(|g| !ind.contains(*g)).collect();
        let incoming = unselected[rng.random_range(0..unselected.len())];
        ind.mask.remove(out);
        let pos = ind.mask.binary_search(&incoming).unwrap_err();
        ind.mask.insert(pos, incoming);
    }
    chosen
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_rmsecv: f64,
    pub mean_rmsecv: f64,
    pub best_mask: Vec<usize>,
    pub population: usize,
    /// Parent pool composition and mutation count of the reproduction that
    /// followed this generation (absent after the last one).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lucky: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutated: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaResult {
    pub k_select: usize,
    pub trace: Vec<GenerationRecord>,
    pub best_mask: Vec<usize>,
    pub best_rmsecv: f64,
    /// Distinct masks scored (fitness cache misses).
    pub evaluations: usize,
}

struct FitnessCache<'a> {
    x: ArrayView2<'a, f64>,
    y: ArrayView1<'a, f64>,
    split: FoldSplit,
    criterion: GaFitness,
    seed: u64,
    /// Fold cross-products for `CurveMin` scoring; skipped for very wide
    /// inputs where the per-fold `D×D` matrices would not pay off.
    gram: Option<GramFolds>,
    scores: HashMap<Individual, f64>,
}

impl FitnessCache<'_> {
    fn score(&mut self, population: &[Individual]) -> Result<Vec<f64>> {
        let mut missing: Vec<&Individual> =
            population.iter().filter(|i| !self.scores.contains_key(*i)).collect();
        missing.sort();
        missing.dedup();
        let fresh: Vec<f64> = missing
            .par_iter()
            .map(|ind| match (&self.gram, self.criterion) {
                (Some(gram), GaFitness::CurveMin { max }) => {
                    Ok(gram.curve(&ind.mask, max)?.into_iter().fold(f64::INFINITY, f64::min))
                }
                _ => fitness(self.x, self.y, ind, &self.split, self.criterion, self.seed),
            })
            .collect::<Result<_>>()?;
        for (ind, f) in missing.into_iter().zip(fresh) {
            self.scores.insert(ind.clone(), f);
        }
        Ok(population.iter().map(|i| self.scores[i]).collect())
    }
}

/// Runs the GA for `config.generations` scored generations and returns the
/// per-generation trace and the best subset seen.
pub fn ga_run(x: ArrayView2<f64>, y: ArrayView1<f64>, config: &GaConfig) -> Result<GaResult> {
    config.validate()?;
    let (n, dim) = x.dim();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if config.k_select > dim {
        return Err(Error::invalid(format!("cannot select {} of {dim} features", config.k_select)));
    }
    let mut rng = rng::seeded(config.seed);
    let split = kfold_split(n, config.inner_cv_folds, derive_seed(config.seed, 0x5EED_F01D))?;
    let gram = match config.fitness {
        GaFitness::CurveMin { .. } if dim <= GRAM_MAX_DIM => Some(GramFolds::new(x, y, &split)?),
        _ => None,
    };
    let mut cache = FitnessCache {
        x,
        y,
        split,
        criterion: config.fitness,
        seed: derive_seed(config.seed, 0xF17),
        gram,
        scores: HashMap::new(),
    };

    let mut population: Vec<Individual> =
        (0..config.population).map(|_| Individual::random(config.k_select, dim, &mut rng)).collect();
    let mut trace: Vec<GenerationRecord> = Vec::with_capacity(config.generations);
    let mut best: Option<(f64, Vec<usize>)> = None;

    for generation in 1..=config.generations {
        let scores = cache.score(&population)?;
        let order = rank(&scores);
        let top = order[0];
        let record = GenerationRecord {
            generation,
            best_rmsecv: scores[top],
            mean_rmsecv: scores.iter().sum::<f64>() / scores.len() as f64,
            best_mask: population[top].mask.clone(),
            population: population.len(),
            elites: None,
            lucky: None,
            mutated: None,
        };
        if best.as_ref().is_none_or(|(f, _)| scores[top] < *f) {
            best = Some((scores[top], population[top].mask.clone()));
        }
        trace.push(record);
        if generation == config.generations {
            break;
        }

        let pool = select_parents(&scores, config, &mut rng)?;
        let mut parents: Vec<usize> = pool.members().collect();
        parents.shuffle(&mut rng);
        let mut children = Vec::with_capacity(config.population);
        for couple in parents.chunks_exact(2) {
            children.extend(crossover(
                &population[couple[0]],
                &population[couple[1]],
                config.k_select,
                dim,
                config.children_per_pair,
                &mut rng,
            ));
        }
        let mutated = mutate_generation(&mut children, config, dim, &mut rng);
        if config.elitism {
            let slot = rng.random_range(0..children.len());
            children[slot] = population[top].clone();
        }
        let last = trace.last_mut().expect("pushed above");
        last.elites = Some(pool.elites.len());
        last.lucky = Some(pool.lucky.len());
        last.mutated = Some(mutated.len());
        population = children;
    }

    let (best_rmsecv, best_mask) = best.expect("at least one generation");
    Ok(GaResult { k_select: config.k_select, trace, best_mask, best_rmsecv, evaluations: cache.scores.len() })
}
