//! Generational loop with elitist (parents + offspring) truncation.
//!
//! Each generation the population is shuffled and adjacent pairs are mated,
//! two independent offspring per pair. Parents and offspring are pooled,
//! sorted by penalty and the best `population_size` survive; at equal
//! penalty offspring rank ahead of parents.
//!
//! Every random stream is derived from the run seed and a fixed coordinate
//! (generation, pair, child), so results do not depend on evaluation order
//! or on the number of worker threads.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::crossover::{crossover_chromosome, random_chromosome, CrossoverParams, DrawTally};
use crate::error::{Error, Result};
use crate::genome::{Chromosome, Problem};
use crate::rng::RandomSource;

const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;
const STREAM_OFFSPRING: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover: CrossoverParams,
    pub seed: u64,
    /// Worker threads for fitness evaluation; never changes results.
    pub threads: usize,
}

impl GaConfig {
    pub fn new(population_size: usize, generations: usize, crossover: CrossoverParams, seed: u64) -> Self {
        Self {
            population_size,
            generations,
            crossover,
            seed,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 || !self.population_size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "population size {} must be even and at least 2",
                self.population_size
            )));
        }
        if self.generations < 1 {
            return Err(Error::InvalidParameter("at least one generation is required".into()));
        }
        if self.threads < 1 {
            return Err(Error::InvalidParameter("threads must be >= 1".into()));
        }
        self.crossover.validate()
    }
}

/// Penalty function; lower is better.
pub trait Fitness: Sync {
    fn penalty(&self, chromosome: &Chromosome) -> Result<f64>;
}

impl<F> Fitness for F
where
    F: Fn(&Chromosome) -> Result<f64> + Sync,
{
    fn penalty(&self, chromosome: &Chromosome) -> Result<f64> {
        self(chromosome)
    }
}

/// Per-generation record.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_penalty: f64,
    pub mean_penalty: f64,
    /// Bag draws of this generation's offspring, summed per task.
    pub tallies: Vec<DrawTally>,
    /// For every id of the first task, how many survivors carry it.
    pub sensor_histogram: BTreeMap<u32, usize>,
}

/// Receives statistics as each generation completes.
pub trait StatsSink {
    fn record(&mut self, stats: &GenerationStats) -> Result<()>;
}

impl StatsSink for Vec<GenerationStats> {
    fn record(&mut self, stats: &GenerationStats) -> Result<()> {
        self.push(stats.clone());
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl StatsSink for NullSink {
    fn record(&mut self, _: &GenerationStats) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Final population, best first.
    pub population: Vec<Chromosome>,
    pub history: Vec<GenerationStats>,
}

impl RunOutcome {
    pub fn best(&self) -> &Chromosome {
        &self.population[0]
    }
}

/// `rho` random valid chromosomes.
pub fn init_population(problem: &Problem, rho: usize, rng: &mut RandomSource) -> Vec<Chromosome> {
    (0..rho).map(|_| random_chromosome(problem, rng)).collect()
}

/// Shuffles `pop`, mates adjacent pairs and returns two offspring per pair
/// along with the summed per-task draw tallies.
pub fn pair_and_reproduce(
    pop: &[Chromosome],
    problem: &Problem,
    config: &GaConfig,
    generation: usize,
) -> Result<(Vec<Chromosome>, Vec<DrawTally>)> {
    if !pop.len().is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "cannot pair an odd population of {}",
            pop.len()
        )));
    }
    let mut order: Vec<usize> = (0..pop.len()).collect();
    RandomSource::derive(config.seed, &[STREAM_SHUFFLE, generation as u64]).shuffle(&mut order);

    let mut offspring = Vec::with_capacity(pop.len());
    let mut tallies = vec![DrawTally::default(); problem.len()];
    for (pair, chunk) in order.chunks(2).enumerate() {
        let (a, b) = (&pop[chunk[0]], &pop[chunk[1]]);
        for child in 0..2u64 {
            let mut rng = RandomSource::derive(
                config.seed,
                &[STREAM_OFFSPRING, generation as u64, pair as u64, child],
            );
            let (c, t) = crossover_chromosome(a, b, problem, &config.crossover, &mut rng)?;
            for (acc, x) in tallies.iter_mut().zip(t) {
                *acc += x;
            }
            offspring.push(c);
        }
    }
    Ok((offspring, tallies))
}

/// Elitist truncation: best `rho` of offspring and parents, offspring first
/// among equals.
pub fn select(parents: Vec<Chromosome>, offspring: Vec<Chromosome>, rho: usize) -> Result<Vec<Chromosome>> {
    let mut pool: Vec<Chromosome> = offspring;
    pool.extend(parents);
    if let Some(i) = pool.iter().position(|c| c.penalty().is_none()) {
        return Err(Error::Unevaluated(i));
    }
    pool.sort_by(|a, b| a.penalty().unwrap().total_cmp(&b.penalty().unwrap()));
    pool.truncate(rho);
    Ok(pool)
}

/// Fills in missing penalties. The pool only schedules work; every value
/// depends on its chromosome alone.
pub fn evaluate_all<F: Fitness + ?Sized>(
    pop: &mut [Chromosome],
    fitness: &F,
    pool: &rayon::ThreadPool,
) -> Result<()> {
    let results: Vec<Option<Result<f64>>> = pool.install(|| {
        pop.par_iter()
            .map(|c| match c.penalty() {
                Some(_) => None,
                None => Some(fitness.penalty(c)),
            })
            .collect()
    });
    for (c, r) in pop.iter_mut().zip(results) {
        if let Some(r) = r {
            let p = r?;
            if p.is_nan() {
                return Err(Error::Fitness("penalty is NaN".into()));
            }
            c.set_penalty(p);
        }
    }
    Ok(())
}

fn histogram(pop: &[Chromosome], problem: &Problem) -> BTreeMap<u32, usize> {
    let mut h: BTreeMap<u32, usize> = problem.task(0).universe().map(|id| (id, 0)).collect();
    for c in pop {
        for id in c.sub(0).ids() {
            *h.get_mut(&id).expect("ids validated against the task") += 1;
        }
    }
    h
}

/// Runs `config.generations` generations from a seeded random population.
pub fn run<F: Fitness + ?Sized>(
    config: &GaConfig,
    fitness: &F,
    problem: &Problem,
    sink: &mut dyn StatsSink,
) -> Result<RunOutcome> {
    let mut rng = RandomSource::derive(config.seed, &[STREAM_INIT]);
    let population = init_population(problem, config.population_size, &mut rng);
    run_from(config, fitness, problem, population, sink)
}

/// Like [`run`], starting from a given population.
pub fn run_from<F: Fitness + ?Sized>(
    config: &GaConfig,
    fitness: &F,
    problem: &Problem,
    mut population: Vec<Chromosome>,
    sink: &mut dyn StatsSink,
) -> Result<RunOutcome> {
    config.validate()?;
    if population.len() != config.population_size {
        return Err(Error::InvalidParameter(format!(
            "population has {} members, configured size is {}",
            population.len(),
            config.population_size
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;

    evaluate_all(&mut population, fitness, &pool)?;
    let mut history = Vec::with_capacity(config.generations);
    for generation in 0..config.generations {
        let (mut offspring, tallies) = pair_and_reproduce(&population, problem, config, generation)?;
        evaluate_all(&mut offspring, fitness, &pool)?;
        population = select(population, offspring, config.population_size)?;

        let penalties: Vec<f64> = population.iter().map(|c| c.penalty().unwrap()).collect();
        let stats = GenerationStats {
            generation,
            best_penalty: penalties[0],
            mean_penalty: penalties.iter().sum::<f64>() / penalties.len() as f64,
            tallies,
            sensor_histogram: histogram(&population, problem),
        };
        sink.record(&stats)?;
        history.push(stats);
    }
    Ok(RunOutcome {
        population,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crossover::Mode;
    use crate::genome::{AttributeSchema, AttrKind, LinkedGroups, TaskSpec};

    fn problem() -> Problem {
        let w = AttributeSchema::new(vec![4.0], vec![-4.0], vec![AttrKind::Real]).unwrap();
        Problem::new(
            vec![
                TaskSpec::new(1, 20, 1, 5, w).unwrap(),
                TaskSpec::new(1, 9, 1, 2, AttributeSchema::empty()).unwrap(),
                TaskSpec::new(1, 9, 1, 2, AttributeSchema::empty()).unwrap(),
            ],
            LinkedGroups::new(vec![vec![1, 2]]),
        )
        .unwrap()
    }

    /// Distance of the sensor subset from {3, 7} with weights near 2.
    fn toy_fitness(c: &Chromosome) -> Result<f64> {
        let s = c.sub(0);
        let mut p = 0.0;
        for target in [3u32, 7] {
            match s.get(target) {
                Some(f) => p += (f.attributes[0].as_f64() - 2.0).abs() / 12.0,
                None => p += 0.5,
            }
        }
        p += 0.05 * s.len() as f64;
        Ok(p.min(1.0))
    }

    fn with_penalty(p: f64) -> Chromosome {
        Chromosome::new(vec![]).with_penalty(p)
    }

    #[test]
    fn select_keeps_parents_when_offspring_worse() {
        let parents: Vec<_> = [0.1, 0.2].iter().map(|&p| with_penalty(p)).collect();
        let offspring: Vec<_> = [0.5, 0.6].iter().map(|&p| with_penalty(p)).collect();
        let s = select(parents.clone(), offspring, 2).unwrap();
        assert_eq!(s, parents);
    }

    #[test]
    fn select_replaces_when_offspring_better() {
        let parents: Vec<_> = [0.5, 0.6].iter().map(|&p| with_penalty(p)).collect();
        let offspring: Vec<_> = [0.1, 0.2].iter().map(|&p| with_penalty(p)).collect();
        assert_eq!(select(parents, offspring.clone(), 2).unwrap(), offspring);
    }

    #[test]
    fn select_tie_favours_offspring() {
        let parent = Chromosome::new(vec![crate::genome::SubChromosome::new(0, vec![])]).with_penalty(0.3);
        let child = with_penalty(0.3);
        let s = select(vec![with_penalty(0.1), parent], vec![child.clone(), with_penalty(0.9)], 2).unwrap();
        assert_eq!(s[1], child);
    }

    #[test]
    fn select_rejects_unevaluated() {
        let r = select(vec![with_penalty(0.1)], vec![Chromosome::new(vec![])], 1);
        assert!(matches!(r, Err(Error::Unevaluated(0))));
    }

    #[test]
    fn initial_population_valid_and_linked() {
        let p = problem();
        let mut rng = RandomSource::new(1);
        let pop = init_population(&p, 50, &mut rng);
        assert_eq!(pop.len(), 50);
        for c in &pop {
            assert!(crate::genome::validate_chromosome(c, &p).is_ok());
            assert_eq!(c.sub(1).len(), c.sub(2).len());
        }
    }

    #[test]
    fn reproduction_is_deterministic() {
        let p = problem();
        let cfg = GaConfig::new(10, 1, CrossoverParams::standard(Mode::Explore), 5);
        let pop = init_population(&p, 10, &mut RandomSource::new(2));
        let (a, ta) = pair_and_reproduce(&pop, &p, &cfg, 3).unwrap();
        let (b, tb) = pair_and_reproduce(&pop, &p, &cfg, 3).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        assert!(pair_and_reproduce(&pop[..9], &p, &cfg, 3).is_err());
    }

    #[test]
    fn identical_population_reproduces_itself_under_exploit() {
        let p = problem();
        let params = CrossoverParams {
            alpha: 0.0,
            ..CrossoverParams::standard(Mode::Exploit)
        };
        let cfg = GaConfig::new(8, 1, params, 9);
        let one = init_population(&p, 1, &mut RandomSource::new(3)).remove(0);
        let pop = vec![one.clone(); 8];
        let (off, tallies) = pair_and_reproduce(&pop, &p, &cfg, 0).unwrap();
        assert!(off.iter().all(|c| c.same_genotype(&one)));
        assert!(tallies.iter().all(|t| t.from_absent == 0 && t.from_unique == 0));
    }

    #[test]
    fn run_records_monotone_history() {
        let p = problem();
        for mode in [Mode::Exploit, Mode::Explore] {
            let cfg = GaConfig::new(20, 30, CrossoverParams::standard(mode), 11);
            let mut sink = Vec::new();
            let out = run(&cfg, &toy_fitness, &p, &mut sink).unwrap();
            assert_eq!(out.history.len(), 30);
            assert_eq!(sink, out.history);
            assert_eq!(out.population.len(), 20);
            for w in out.history.windows(2) {
                assert!(w[1].best_penalty <= w[0].best_penalty);
            }
            for s in &out.history {
                assert!(s.best_penalty <= s.mean_penalty);
                assert!(s.sensor_histogram.values().all(|&n| n <= 20));
                assert_eq!(s.sensor_histogram.len(), 20);
            }
        }
    }

    #[test]
    fn single_generation_run() {
        let p = problem();
        let cfg = GaConfig::new(4, 1, CrossoverParams::standard(Mode::Explore), 1);
        let out = run(&cfg, &toy_fitness, &p, &mut NullSink).unwrap();
        assert_eq!(out.history.len(), 1);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let p = problem();
        let mut cfg = GaConfig::new(12, 15, CrossoverParams::standard(Mode::Explore), 21);
        let a = run(&cfg, &toy_fitness, &p, &mut NullSink).unwrap();
        cfg.threads = 3;
        let b = run(&cfg, &toy_fitness, &p, &mut NullSink).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.population, b.population);
    }

    #[test]
    fn fitness_errors_propagate() {
        let p = problem();
        let cfg = GaConfig::new(4, 2, CrossoverParams::standard(Mode::Explore), 1);
        let failing = |_: &Chromosome| -> Result<f64> { Err(Error::Fitness("boom".into())) };
        assert!(run(&cfg, &failing, &p, &mut NullSink).is_err());
    }

    #[test]
    fn config_validation() {
        let params = CrossoverParams::standard(Mode::Explore);
        assert!(GaConfig::new(5, 1, params, 0).validate().is_err());
        assert!(GaConfig::new(4, 0, params, 0).validate().is_err());
        assert!(GaConfig::new(4, 1, params, 0).validate().is_ok());
    }
}
