//! Constrained NSGA-II over integer placement vectors.
//!
//! Constraints are handled by feasibility-first domination: a feasible
//! individual beats any infeasible one, infeasible individuals are ordered by
//! total violation, and feasible ones by Pareto dominance on the objectives.
//!
//! The generational loop ([`evolve`]) is shared with CP-NSGA; only the
//! [`SurvivorSelection`] strategy differs. Every random draw goes through a
//! single ChaCha8 stream seeded from [`EvolutionConfig::seed`], in this order:
//!
//! 1. initial population, individual by individual, gene by gene;
//! 2. per generation, per offspring pair: two binary tournaments (two index
//!    draws each), one crossover decision plus one swap draw per gene when
//!    crossing, then mutation of the first child and of the second child
//!    (one trigger draw per gene plus one PM draw per triggered gene).
//!
//! Evaluation and survivor selection consume no randomness.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use web_time::Instant;

use crate::cpnsga::CprSelectionLog;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::objectives::{evaluate, ObjectiveVector, Placement};
use crate::scp::{ScoreVector, ScpStructure};

pub const TOURNAMENT_SIZE: usize = 2;
pub const DEFAULT_P_CROSSOVER: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub placement: Placement,
    pub objectives: ObjectiveVector,
    pub violation: f64,
    /// 1-based front index; `None` until sorted.
    pub rank: Option<usize>,
    pub crowding: Option<f64>,
}

impl Individual {
    pub fn evaluated(inst: &Instance, placement: Placement) -> Self {
        let e = evaluate(inst, &placement);
        Individual {
            placement,
            objectives: e.objectives,
            violation: e.violation,
            rank: None,
            crowding: None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.violation == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub pop_size: usize,
    pub generations: usize,
    pub p_crossover: f64,
    /// `None` means `1 / n_vms`.
    pub p_mutation_per_gene: Option<f64>,
    pub seed: u64,
}

impl EvolutionConfig {
    pub fn new(pop_size: usize, generations: usize, seed: u64) -> Self {
        EvolutionConfig {
            pop_size,
            generations,
            p_crossover: DEFAULT_P_CROSSOVER,
            p_mutation_per_gene: None,
            seed,
        }
    }

    pub fn mutation_rate(&self, n_vms: usize) -> f64 {
        self.p_mutation_per_gene.unwrap_or(1.0 / n_vms as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 || self.pop_size % 2 != 0 {
            return Err(Error::argument(format!(
                "population size must be a positive even number, got {}",
                self.pop_size
            )));
        }
        if self.generations == 0 {
            return Err(Error::argument("at least one generation is required"));
        }
        if !(0.0..=1.0).contains(&self.p_crossover) {
            return Err(Error::argument(format!("crossover probability {} is outside [0, 1]", self.p_crossover)));
        }
        if let Some(p) = self.p_mutation_per_gene {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::argument(format!("mutation probability {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nsga2,
    Cpnsga,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Cpnsga => "cpnsga",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nsga2" => Ok(Algorithm::Nsga2),
            "cpnsga" => Ok(Algorithm::Cpnsga),
            other => Err(Error::argument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// State of the population after one generation's survivor selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    /// 1-based.
    pub generation: usize,
    pub front: Vec<ObjectiveVector>,
    /// One per individual; empty when the run has no preferences.
    pub scores: Vec<ScoreVector>,
    pub weighted_flips: Vec<u64>,
    pub cpr: Option<CprSelectionLog>,
}

impl GenerationRecord {
    pub fn mean_weighted_flips(&self) -> Option<f64> {
        if self.weighted_flips.is_empty() {
            None
        } else {
            Some(self.weighted_flips.iter().sum::<u64>() as f64 / self.weighted_flips.len() as f64)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub generations: Vec<GenerationRecord>,
    pub final_population: Vec<Individual>,
    /// Wall-clock seconds per generation. Not reproducible, kept apart from the trajectory.
    #[serde(skip)]
    pub wall_times: Vec<f64>,
}

impl RunRecord {
    pub fn total_seconds(&self) -> f64 {
        self.wall_times.iter().sum()
    }

    /// Members of the final first front.
    pub fn final_front(&self) -> impl Iterator<Item = &Individual> {
        self.final_population.iter().filter(|i| i.rank == Some(1))
    }

    /// `true` when both runs followed the same trajectory, ignoring timings.
    pub fn same_trajectory(&self, other: &RunRecord) -> bool {
        self.generations == other.generations && self.final_population == other.final_population
    }
}

pub fn constrained_dominates(a: &Individual, b: &Individual) -> bool {
    match (a.is_feasible(), b.is_feasible()) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => a.objectives.dominates(&b.objectives),
    }
}

/// Deb's fast nondominated sort. Sets `rank` on every member.
pub fn fast_nondominated_sort(pop: &mut [Individual]) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by_me: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if constrained_dominates(&pop[i], &pop[j]) {
                dominated_by_me[i].push(j);
                domination_count[j] += 1;
            } else if constrained_dominates(&pop[j], &pop[i]) {
                dominated_by_me[j].push(i);
                domination_count[i] += 1;
            }
        }
    }

    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            pop[i].rank = Some(fronts.len() + 1);
            for &j in &dominated_by_me[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each point within its front.
///
/// Boundary points of every objective get `+∞`. Objectives with zero range
/// add nothing to interior points. Equal values are ordered by index.
pub fn crowding_distance(front: &[ObjectiveVector]) -> Vec<f64> {
    let len = front.len();
    let mut distance = vec![0.0; len];
    if len <= 2 {
        return vec![f64::INFINITY; len];
    }
    let mut order: Vec<usize> = (0..len).collect();
    for obj in 0..ObjectiveVector::LEN {
        order.sort_by(|&a, &b| {
            front[a]
                .get(obj)
                .total_cmp(&front[b].get(obj))
                .then(a.cmp(&b))
        });
        let lo = front[order[0]].get(obj);
        let hi = front[order[len - 1]].get(obj);
        distance[order[0]] = f64::INFINITY;
        distance[order[len - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in order.windows(3) {
            let gap = front[w[2]].get(obj) - front[w[0]].get(obj);
            distance[w[1]] += gap / range;
        }
    }
    distance
}

/// Better-ranked of two uniformly drawn members; ties go to larger crowding, then lower index.
pub fn binary_tournament<R: Rng + ?Sized>(pop: &[Individual], rng: &mut R) -> usize {
    let a = rng.gen_range(0..pop.len());
    let b = rng.gen_range(0..pop.len());
    tournament_winner(pop, a, b)
}

pub fn tournament_winner(pop: &[Individual], a: usize, b: usize) -> usize {
    match compare_for_mating(&pop[a], &pop[b]).then(a.cmp(&b)) {
        Ordering::Greater => b,
        _ => a,
    }
}

/// `Less` means `a` is preferred.
fn compare_for_mating(a: &Individual, b: &Individual) -> Ordering {
    let rank = |i: &Individual| i.rank.unwrap_or(usize::MAX);
    let crowd = |i: &Individual| i.crowding.unwrap_or(0.0);
    rank(a)
        .cmp(&rank(b))
        .then_with(|| crowd(b).total_cmp(&crowd(a)))
}

pub fn uniform_crossover<R: Rng + ?Sized>(
    a: &Placement,
    b: &Placement,
    p_crossover: f64,
    rng: &mut R,
) -> (Placement, Placement) {
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    if rng.gen_bool(p_crossover) {
        let (x, y) = (c1.assignment_mut(), c2.assignment_mut());
        for (g1, g2) in x.iter_mut().zip(y.iter_mut()) {
            if rng.gen_bool(0.5) {
                std::mem::swap(g1, g2);
            }
        }
    }
    (c1, c2)
}

/// Reassigns each gene with probability `rate` to one of the other `m - 1` PMs.
pub fn mutate<R: Rng + ?Sized>(p: &Placement, rate: f64, m: usize, rng: &mut R) -> Placement {
    let mut out = p.clone();
    if m < 2 {
        return out;
    }
    for gene in out.assignment_mut() {
        if rng.gen_bool(rate) {
            let draw = rng.gen_range(0..m - 1);
            *gene = if draw >= *gene { draw + 1 } else { draw };
        }
    }
    out
}

/// A combined pool sorted into fronts and cut at the survivor count.
#[derive(Debug)]
pub struct SurvivalSplit {
    pub pool: Vec<Individual>,
    /// Members of whole fronts that fit, front by front.
    pub admitted: Vec<usize>,
    /// The front that does not fit; empty when fronts fill the seats exactly.
    pub overflow: Vec<usize>,
    /// Seats left for members of `overflow`.
    pub slots: usize,
}

impl SurvivalSplit {
    /// Sorts `combined`, sets rank everywhere and crowding on every front up to the overflow.
    pub fn new(mut combined: Vec<Individual>, n: usize) -> Self {
        let fronts = fast_nondominated_sort(&mut combined);
        let mut admitted = Vec::with_capacity(n);
        let mut overflow = Vec::new();
        for front in fronts {
            if admitted.len() >= n {
                break;
            }
            let points: Vec<ObjectiveVector> = front.iter().map(|&i| combined[i].objectives).collect();
            for (&i, d) in front.iter().zip(crowding_distance(&points)) {
                combined[i].crowding = Some(d);
            }
            if admitted.len() + front.len() <= n {
                admitted.extend_from_slice(&front);
            } else {
                overflow = front;
                break;
            }
        }
        let slots = n - admitted.len();
        SurvivalSplit {
            pool: combined,
            admitted,
            overflow,
            slots,
        }
    }

    /// The `count` candidates with the largest crowding distance, ties to lower index.
    pub fn most_crowded(&self, candidates: &[usize], count: usize) -> Vec<usize> {
        let mut sorted = candidates.to_vec();
        sorted.sort_by(|&a, &b| {
            let (da, db) = (self.pool[a].crowding.unwrap_or(0.0), self.pool[b].crowding.unwrap_or(0.0));
            db.total_cmp(&da).then(a.cmp(&b))
        });
        sorted.truncate(count);
        sorted
    }

    /// Moves the admitted members plus `extra` out of the pool, in that order.
    pub fn finish(self, extra: &[usize]) -> Vec<Individual> {
        let mut slots: Vec<Option<Individual>> = self.pool.into_iter().map(Some).collect();
        self.admitted
            .iter()
            .chain(extra)
            .map(|&i| slots[i].take().expect("survivor chosen twice"))
            .collect()
    }
}

pub fn nsga2_survivor_selection(combined: Vec<Individual>, n: usize) -> Vec<Individual> {
    let split = SurvivalSplit::new(combined, n);
    let extra = split.most_crowded(&split.overflow, split.slots);
    split.finish(&extra)
}

/// Picks the next population from parents plus offspring.
pub trait SurvivorSelection {
    fn select(&mut self, combined: Vec<Individual>, n: usize, generation: usize) -> (Vec<Individual>, Option<CprSelectionLog>);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct Nsga2Selection;

impl SurvivorSelection for Nsga2Selection {
    fn select(&mut self, combined: Vec<Individual>, n: usize, _generation: usize) -> (Vec<Individual>, Option<CprSelectionLog>) {
        (nsga2_survivor_selection(combined, n), None)
    }
}

pub(crate) fn check_preferences(inst: &Instance, scp: &ScpStructure) -> Result<()> {
    if scp.m_pms() != inst.m_pms() {
        return Err(Error::argument(format!(
            "preferences rank {} pms but instance has {}",
            scp.m_pms(),
            inst.m_pms()
        )));
    }
    if let Some(vm) = scp.max_vm() {
        if vm >= inst.n_vms() {
            return Err(Error::argument(format!(
                "preference for vm {vm} but instance has {} vms",
                inst.n_vms()
            )));
        }
    }
    Ok(())
}

/// The generational loop shared by every algorithm here.
///
/// `scp` is only used to fill the score and weighted-flips logs; whether it
/// also steers the search is up to `selection`.
pub fn evolve(
    inst: &Instance,
    cfg: &EvolutionConfig,
    scp: Option<&ScpStructure>,
    algorithm: Algorithm,
    selection: &mut dyn SurvivorSelection,
) -> Result<RunRecord> {
    cfg.validate()?;
    let report = crate::instance::validate_instance(inst);
    if !report.is_valid() {
        return Err(Error::Validation(report));
    }
    if let Some(scp) = scp {
        check_preferences(inst, scp)?;
    }

    let n = cfg.pop_size;
    let m = inst.m_pms();
    let genes = inst.n_vms();
    let rate = cfg.mutation_rate(genes);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let initial: Vec<Individual> = (0..n)
        .map(|_| {
            let assignment = (0..genes).map(|_| rng.gen_range(0..m)).collect();
            Individual::evaluated(inst, Placement::new(assignment))
        })
        .collect();
    let mut population = nsga2_survivor_selection(initial, n);

    let mut record = RunRecord {
        algorithm,
        generations: Vec::with_capacity(cfg.generations),
        final_population: Vec::new(),
        wall_times: Vec::with_capacity(cfg.generations),
    };

    for generation in 1..=cfg.generations {
        let started = Instant::now();

        let mut offspring = Vec::with_capacity(n);
        while offspring.len() < n {
            let a = binary_tournament(&population, &mut rng);
            let b = binary_tournament(&population, &mut rng);
            let (c1, c2) = uniform_crossover(&population[a].placement, &population[b].placement, cfg.p_crossover, &mut rng);
            let c1 = mutate(&c1, rate, m, &mut rng);
            let c2 = mutate(&c2, rate, m, &mut rng);
            offspring.push(c1);
            offspring.push(c2);
        }

        let mut combined = population;
        combined.extend(offspring.into_iter().map(|p| Individual::evaluated(inst, p)));
        let (next, cpr) = selection.select(combined, n, generation);
        population = next;

        record.wall_times.push(started.elapsed().as_secs_f64());
        record.generations.push(summarize(generation, &population, scp, cpr));
    }

    record.final_population = population;
    Ok(record)
}

fn summarize(
    generation: usize,
    population: &[Individual],
    scp: Option<&ScpStructure>,
    cpr: Option<CprSelectionLog>,
) -> GenerationRecord {
    let front = population
        .iter()
        .filter(|i| i.rank == Some(1))
        .map(|i| i.objectives)
        .collect();
    let scores: Vec<ScoreVector> = match scp {
        Some(scp) => population.iter().map(|i| scp.score(&i.placement)).collect(),
        None => Vec::new(),
    };
    let weighted_flips = scores.iter().map(ScoreVector::weighted_flips).collect();
    GenerationRecord {
        generation,
        front,
        scores,
        weighted_flips,
        cpr,
    }
}

/// Standard NSGA-II. `scp`, when given, is only logged.
pub fn run_nsga2(inst: &Instance, cfg: &EvolutionConfig, scp: Option<&ScpStructure>) -> Result<RunRecord> {
    evolve(inst, cfg, scp, Algorithm::Nsga2, &mut Nsga2Selection)
}
