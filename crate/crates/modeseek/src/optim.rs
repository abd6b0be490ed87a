//! Population and descent optimizers sharing the sampler's objective
//! callback: a roulette/blend-crossover/elitist genetic algorithm, plain
//! random search, and two hybrids that replace the Metropolis block with an
//! optimization step while keeping the conjugate σ² draw.

use crate::error::{Error, Result};
use crate::mcmc::{block2_draw, log_cond_posterior};
use crate::nn::{cross_entropy_l2, grad_cross_entropy_l2, Dataset, FlatParams};
use crate::par::par_map;
use crate::rng::RngHandle;

/// Genetic algorithm tuning. Elitism is always on.
#[derive(Debug, Clone)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub blend_alpha: f64,
    pub mutation_rate: f64,
    pub mutation_sigma2: f64,
    pub bounds_lo: Vec<f64>,
    pub bounds_hi: Vec<f64>,
}

impl GaConfig {
    /// Defaults: N = 100, M = 1000, blend α = 0.5, mutation rate 0.1 with
    /// variance 0.01, search box [−5, 5]^dim.
    pub fn with_dim(dim: usize) -> Self {
        Self {
            population: 100,
            generations: 1000,
            blend_alpha: 0.5,
            mutation_rate: 0.1,
            mutation_sigma2: 0.01,
            bounds_lo: vec![-5.0; dim],
            bounds_hi: vec![5.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.bounds_lo.len()
    }

    fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidParameter("population must be >= 2".into()));
        }
        if self.generations == 0 {
            return Err(Error::InvalidParameter("generations must be >= 1".into()));
        }
        if self.bounds_lo.len() != self.bounds_hi.len()
            || self
                .bounds_lo
                .iter()
                .zip(&self.bounds_hi)
                .any(|(l, h)| !(l < h))
        {
            return Err(Error::InvalidParameter(
                "bounds must satisfy lo < hi componentwise".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_rate) || !(self.mutation_sigma2 >= 0.0) {
            return Err(Error::InvalidParameter("bad mutation parameters".into()));
        }
        Ok(())
    }
}

/// Selection weights after the nonnegativity adjustment: fitnesses are
/// shifted up only when some are negative (ROI objectives), then floored at
/// 1e-12 so the worst individual keeps a sliver of mass. −∞ entries (NaN
/// objectives) get the floor alone.
pub fn selection_weights(fitness: &[f64]) -> Vec<f64> {
    let finite_min = fitness
        .iter()
        .cloned()
        .filter(|f| f.is_finite())
        .fold(f64::INFINITY, f64::min);
    if finite_min == f64::INFINITY {
        // nothing finite: uniform
        return vec![1.0; fitness.len()];
    }
    let shift = finite_min.min(0.0);
    fitness
        .iter()
        .map(|&f| if f.is_finite() { f - shift + 1e-12 } else { 1e-12 })
        .collect()
}

/// Smallest index with cumulative weight ≥ r·total.
pub fn pick_from_cumulative(cumulative: &[f64], r: f64) -> usize {
    let total = *cumulative.last().unwrap();
    let target = r * total;
    cumulative
        .partition_point(|&c| c < target)
        .min(cumulative.len() - 1)
}

/// Roulette-wheel selection: `n_draws` independent picks, each the smallest
/// index whose cumulative probability covers the uniform draw.
pub fn roulette_select(fitness: &[f64], n_draws: usize, rng: &mut RngHandle) -> Vec<usize> {
    let weights = selection_weights(fitness);
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w;
        cumulative.push(acc);
    }
    (0..n_draws)
        .map(|_| pick_from_cumulative(&cumulative, rng.uniform()))
        .collect()
}

/// One offspring gene: `v·p1 + (1−v)·p2` with blend weight
/// `v = (1+2α)u − α`.
pub fn blend_gene(p1: f64, p2: f64, alpha: f64, u: f64) -> f64 {
    let v = (1.0 + 2.0 * alpha) * u - alpha;
    v * p1 + (1.0 - v) * p2
}

/// Blend-α crossover with a fresh uniform weight per gene.
pub fn blend_crossover(p1: &[f64], p2: &[f64], alpha: f64, rng: &mut RngHandle) -> Vec<f64> {
    debug_assert_eq!(p1.len(), p2.len());
    p1.iter()
        .zip(p2)
        .map(|(&a, &b)| blend_gene(a, b, alpha, rng.uniform()))
        .collect()
}

/// Gaussian mutation: each individual independently included with
/// probability `rate` receives an additive N(0, σ²I) perturbation.
pub fn gaussian_mutate(
    pop: &mut [Vec<f64>],
    rate: f64,
    sigma2: f64,
    rng: &mut RngHandle,
) {
    let sd = sigma2.sqrt();
    for indiv in pop.iter_mut() {
        if rng.uniform() < rate {
            for gene in indiv.iter_mut() {
                *gene += sd * rng.standard_normal();
            }
        }
    }
}

/// Elitist replacement: keep the N highest-fitness individuals of
/// [parents ‖ offspring], ties broken toward the lower index.
pub fn elitist_replace(
    pop: Vec<Vec<f64>>,
    offspring: Vec<Vec<f64>>,
    fitness_2n: &[f64],
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = pop.len();
    debug_assert_eq!(fitness_2n.len(), n + offspring.len());
    let mut order: Vec<usize> = (0..fitness_2n.len()).collect();
    order.sort_by(|&a, &b| {
        fitness_2n[b]
            .partial_cmp(&fitness_2n[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut all: Vec<Option<Vec<f64>>> = pop
        .into_iter()
        .chain(offspring)
        .map(Some)
        .collect();
    let mut next_pop = Vec::with_capacity(n);
    let mut next_fit = Vec::with_capacity(n);
    for &i in order.iter().take(n) {
        next_pop.push(all[i].take().unwrap());
        next_fit.push(fitness_2n[i]);
    }
    (next_pop, next_fit)
}

/// Per-generation record of a GA-style run.
#[derive(Debug, Clone)]
pub struct GenRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub best_objective: f64,
    pub mean_fitness: f64,
    pub best_theta_norm2: f64,
}

/// Result of [`ga_run`].
#[derive(Debug, Clone)]
pub struct GaResult {
    pub best_theta: Vec<f64>,
    pub best_value: f64,
    pub trace: Vec<GenRecord>,
}

fn eval_population<F>(pop: &[Vec<f64>], objective: &F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    let raw = par_map(pop, |t| objective(t));
    raw.into_iter()
        .map(|f| {
            if f.is_nan() {
                eprintln!("warning: objective returned NaN; treating as -inf");
                f64::NEG_INFINITY
            } else {
                f
            }
        })
        .collect()
}

fn init_population(cfg: &GaConfig, rng: &mut RngHandle) -> Vec<Vec<f64>> {
    (0..cfg.population)
        .map(|_| {
            cfg.bounds_lo
                .iter()
                .zip(&cfg.bounds_hi)
                .map(|(&l, &h)| rng.uniform_in(l, h))
                .collect()
        })
        .collect()
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Run the genetic algorithm, returning the individual with the highest
/// objective seen across all generations. `generations` counts evaluated
/// populations, so M = 1 is just the scored random initial population.
/// Fitness evaluations within a generation run concurrently; the objective
/// must be deterministic under the run's seed discipline.
pub fn ga_run<F>(cfg: &GaConfig, objective: &F, rng: &mut RngHandle) -> Result<GaResult>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    cfg.validate()?;
    let n = cfg.population;
    let mut pop = init_population(cfg, rng);
    let mut fitness = eval_population(&pop, objective);
    let mut best_idx = argmax(&fitness);
    let mut best_theta = pop[best_idx].clone();
    let mut best_value = fitness[best_idx];
    let mut trace = Vec::with_capacity(cfg.generations);
    let record =
        |trace: &mut Vec<GenRecord>, g: usize, pop: &[Vec<f64>], fitness: &[f64]| {
            let bi = argmax(fitness);
            trace.push(GenRecord {
                generation: g,
                best_fitness: fitness[bi],
                best_objective: fitness[bi],
                mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
                best_theta_norm2: norm2(&pop[bi]),
            });
        };
    record(&mut trace, 1, &pop, &fitness);

    for g in 2..=cfg.generations {
        let pool_idx = roulette_select(&fitness, n, rng);
        let mut offspring = Vec::with_capacity(n);
        for _ in 0..n {
            let i = pool_idx[rng.below(n)];
            let j = pool_idx[rng.below(n)];
            offspring.push(blend_crossover(&pop[i], &pop[j], cfg.blend_alpha, rng));
        }
        gaussian_mutate(&mut offspring, cfg.mutation_rate, cfg.mutation_sigma2, rng);
        let off_fitness = eval_population(&offspring, objective);
        for (f, t) in off_fitness.iter().zip(&offspring) {
            if *f > best_value {
                best_value = *f;
                best_theta = t.clone();
            }
        }
        let mut fitness_2n = fitness.clone();
        fitness_2n.extend_from_slice(&off_fitness);
        let (next_pop, next_fit) = elitist_replace(pop, offspring, &fitness_2n);
        pop = next_pop;
        fitness = next_fit;
        record(&mut trace, g, &pop, &fitness);
    }
    best_idx = argmax(&fitness);
    if fitness[best_idx] > best_value {
        best_value = fitness[best_idx];
        best_theta = pop[best_idx].clone();
    }
    Ok(GaResult {
        best_theta,
        best_value,
        trace,
    })
}

fn argmax(values: &[f64]) -> usize {
    let mut bi = 0;
    let mut bv = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > bv {
            bv = v;
            bi = i;
        }
    }
    bi
}

/// Random search: the best of `population·generations` uniform draws from
/// the search box, mirroring the GA's evaluation budget.
pub fn random_search<F>(cfg: &GaConfig, objective: &F, rng: &mut RngHandle) -> Result<(Vec<f64>, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    cfg.validate()?;
    let total = cfg.population * cfg.generations;
    let mut best_theta = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    // draw sequentially (one stream), evaluate in parallel batches
    let batch = cfg.population.max(64);
    let mut remaining = total;
    while remaining > 0 {
        let take = batch.min(remaining);
        let thetas: Vec<Vec<f64>> = (0..take)
            .map(|_| {
                cfg.bounds_lo
                    .iter()
                    .zip(&cfg.bounds_hi)
                    .map(|(&l, &h)| rng.uniform_in(l, h))
                    .collect()
            })
            .collect();
        let values = eval_population(&thetas, objective);
        for (v, t) in values.iter().zip(&thetas) {
            if *v > best_value {
                best_value = *v;
                best_theta = t.clone();
            }
        }
        remaining -= take;
    }
    Ok((best_theta, best_value))
}

/// How the hybrid GA population starts.
#[derive(Debug, Clone)]
pub enum HybridInit {
    /// Uniform in the search box.
    Uniform,
    /// Every individual set to the same vector (shared-start comparisons).
    Shared(Vec<f64>),
}

#[derive(Debug, Clone)]
struct HybridIndividual {
    theta: Vec<f64>,
    loglik: f64,
    sigma2: f64,
    fitness: f64,
}

/// Result of [`ga_hybrid_run`].
#[derive(Debug, Clone)]
pub struct GaHybridResult {
    /// Individual with the highest conditional-posterior fitness seen.
    pub best_theta: Vec<f64>,
    pub best_fitness: f64,
    /// Individual with the highest raw log-likelihood seen.
    pub best_by_loglik: Vec<f64>,
    pub best_loglik: f64,
    /// All recorded (θ, σ²) pairs, one row per individual per generation,
    /// treated as draws from the approximate modal region.
    pub theta_draws: Vec<Vec<f64>>,
    pub sigma2_draws: Vec<f64>,
    pub trace: Vec<GenRecord>,
}

/// Genetic-algorithm hybrid: the Metropolis block is replaced by GA
/// refinement of the conditional posterior
/// `loglik(θ) − ||θ||²/(2σ²) − (S/2)log(2πσ²)` with a per-individual σ²
/// that is resampled from its conjugate conditional every generation.
pub fn ga_hybrid_run<F>(
    cfg: &GaConfig,
    loglik: &F,
    a: f64,
    b: f64,
    init: HybridInit,
    rng: &mut RngHandle,
) -> Result<GaHybridResult>
where
    F: Fn(&[f64]) -> f64 + Sync + ?Sized,
{
    cfg.validate()?;
    let n = cfg.population;
    let dim = cfg.dim();
    let thetas: Vec<Vec<f64>> = match init {
        HybridInit::Uniform => init_population(cfg, rng),
        HybridInit::Shared(t) => {
            if t.len() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "shared start has length {}, bounds have {dim}",
                    t.len()
                )));
            }
            vec![t; n]
        }
    };
    let logliks = eval_population(&thetas, loglik);
    let mut pop: Vec<HybridIndividual> = thetas
        .into_iter()
        .zip(logliks)
        .map(|(theta, ll)| {
            let sigma2 = block2_draw(norm2(&theta), dim, a, b, rng)?;
            let fitness = log_cond_posterior(ll, norm2(&theta), sigma2, dim);
            Ok(HybridIndividual {
                theta,
                loglik: ll,
                sigma2,
                fitness,
            })
        })
        .collect::<Result<_>>()?;

    let mut out = GaHybridResult {
        best_theta: pop[0].theta.clone(),
        best_fitness: f64::NEG_INFINITY,
        best_by_loglik: pop[0].theta.clone(),
        best_loglik: f64::NEG_INFINITY,
        theta_draws: Vec::with_capacity(n * cfg.generations),
        sigma2_draws: Vec::with_capacity(n * cfg.generations),
        trace: Vec::with_capacity(cfg.generations),
    };

    let record_generation = |out: &mut GaHybridResult, g: usize, pop: &[HybridIndividual]| {
        let mut best_i = 0;
        let mut mean_fit = 0.0;
        for (i, ind) in pop.iter().enumerate() {
            out.theta_draws.push(ind.theta.clone());
            out.sigma2_draws.push(ind.sigma2);
            mean_fit += ind.fitness;
            if ind.fitness > pop[best_i].fitness {
                best_i = i;
            }
            if ind.fitness > out.best_fitness {
                out.best_fitness = ind.fitness;
                out.best_theta = ind.theta.clone();
            }
            if ind.loglik > out.best_loglik {
                out.best_loglik = ind.loglik;
                out.best_by_loglik = ind.theta.clone();
            }
        }
        out.trace.push(GenRecord {
            generation: g,
            best_fitness: pop[best_i].fitness,
            best_objective: pop[best_i].loglik,
            mean_fitness: mean_fit / pop.len() as f64,
            best_theta_norm2: norm2(&pop[best_i].theta),
        });
    };
    record_generation(&mut out, 1, &pop);

    for g in 2..=cfg.generations {
        let fitness: Vec<f64> = pop.iter().map(|i| i.fitness).collect();
        let pool_idx = roulette_select(&fitness, n, rng);
        let mut off_thetas = Vec::with_capacity(n);
        for _ in 0..n {
            let i = pool_idx[rng.below(n)];
            let j = pool_idx[rng.below(n)];
            off_thetas.push(blend_crossover(
                &pop[i].theta,
                &pop[j].theta,
                cfg.blend_alpha,
                rng,
            ));
        }
        gaussian_mutate(&mut off_thetas, cfg.mutation_rate, cfg.mutation_sigma2, rng);
        let off_logliks = eval_population(&off_thetas, loglik);
        // offspring inherit no σ²: they draw a fresh one from the conditional
        let offspring: Vec<HybridIndividual> = off_thetas
            .into_iter()
            .zip(off_logliks)
            .map(|(theta, ll)| {
                let sigma2 = block2_draw(norm2(&theta), dim, a, b, rng)?;
                let fitness = log_cond_posterior(ll, norm2(&theta), sigma2, dim);
                Ok(HybridIndividual {
                    theta,
                    loglik: ll,
                    sigma2,
                    fitness,
                })
            })
            .collect::<Result<_>>()?;
        let mut combined = pop;
        combined.extend(offspring);
        combined.sort_by(|x, y| {
            y.fitness
                .partial_cmp(&x.fitness)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        combined.truncate(n);
        // Block-2 refresh for the survivors, then fitness under the new σ²
        for ind in combined.iter_mut() {
            ind.sigma2 = block2_draw(norm2(&ind.theta), dim, a, b, rng)?;
            ind.fitness = log_cond_posterior(ind.loglik, norm2(&ind.theta), ind.sigma2, dim);
        }
        pop = combined;
        record_generation(&mut out, g, &pop);
    }
    Ok(out)
}

/// Gradient-descent hybrid configuration.
#[derive(Debug, Clone)]
pub struct GdConfig {
    pub steps: usize,
    pub step_size: f64,
    pub hyper_a: f64,
    pub hyper_b: f64,
    /// Pin σ² (disables the Block-2 resample) for descent-property checks.
    pub fixed_sigma2: Option<f64>,
}

/// Result of [`gd_hybrid_run`].
#[derive(Debug, Clone)]
pub struct GdHybridResult {
    pub theta_trace: Vec<Vec<f64>>,
    pub sigma2_trace: Vec<f64>,
    pub loss_trace: Vec<f64>,
    pub final_theta: FlatParams,
    /// θ with the highest log conditional posterior along the path.
    pub map_theta: Vec<f64>,
    pub map_log_cond_post: f64,
}

const DIVERGENCE_CAP: f64 = 1e10;

/// Gradient-descent hybrid for classification: one gradient step on the
/// penalized cross-entropy, then one conjugate σ² draw, both recorded.
pub fn gd_hybrid_run(
    init: FlatParams,
    data: &Dataset,
    cfg: &GdConfig,
    rng: &mut RngHandle,
) -> Result<GdHybridResult> {
    let dim = init.values.len();
    let mut theta = init;
    let mut sigma2 = match cfg.fixed_sigma2 {
        Some(v) => v,
        None => block2_draw(theta.norm2(), dim, cfg.hyper_a, cfg.hyper_b, rng)?,
    };
    let mut out = GdHybridResult {
        theta_trace: Vec::with_capacity(cfg.steps),
        sigma2_trace: Vec::with_capacity(cfg.steps),
        loss_trace: Vec::with_capacity(cfg.steps),
        final_theta: theta.clone(),
        map_theta: theta.values.clone(),
        map_log_cond_post: f64::NEG_INFINITY,
    };
    for step in 0..cfg.steps {
        let grad = grad_cross_entropy_l2(&theta, data, sigma2)?;
        for (t, g) in theta.values.iter_mut().zip(&grad) {
            *t -= cfg.step_size * g;
        }
        let loss = cross_entropy_l2(&theta, data, sigma2)?;
        if !loss.is_finite() || loss > DIVERGENCE_CAP {
            return Err(Error::Diverged(format!(
                "loss {loss} at step {step} with step size {}",
                cfg.step_size
            )));
        }
        if cfg.fixed_sigma2.is_none() {
            sigma2 = block2_draw(theta.norm2(), dim, cfg.hyper_a, cfg.hyper_b, rng)?;
        }
        // loss is L*, i.e. −log cond posterior without the (S/2)log(2πσ²) term
        let lcp = -loss - dim as f64 / 2.0 * (2.0 * std::f64::consts::PI * sigma2).ln();
        if lcp > out.map_log_cond_post {
            out.map_log_cond_post = lcp;
            out.map_theta = theta.values.clone();
        }
        out.theta_trace.push(theta.values.clone());
        out.sigma2_trace.push(sigma2);
        out.loss_trace.push(loss);
    }
    out.final_theta = theta;
    Ok(out)
}
