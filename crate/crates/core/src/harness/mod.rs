//! Experiment driver: paired NSGA-II / CP-NSGA comparisons and their outputs.

mod hypervolume;
pub mod output;

#[cfg(feature = "cli")]
pub mod cli;

use serde::{Deserialize, Serialize};

use crate::cpnsga::{run_cp_nsga, CprSelectionLog};
use crate::error::{Error, Result};
use crate::instance::{generate_instance, generate_preferences, Instance};
use crate::moea::{run_nsga2, Algorithm, EvolutionConfig, RunRecord};
use crate::objectives::ObjectiveVector;
use crate::scp::ScpStructure;

pub use hypervolume::hypervolume;

/// Generation counts swept by the built-in scenarios.
pub const SCENARIO_GENERATION_SETTINGS: [usize; 5] = [8, 16, 24, 32, 40];
pub const DEFAULT_LOAD_FACTOR: f64 = 0.5;
/// Reference point is this multiple of the componentwise worst value.
pub const REFERENCE_SCALE: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub n_vms: usize,
    pub m_pms: usize,
    pub pref_count: usize,
    pub pop_size: usize,
    pub generation_settings: Vec<usize>,
    pub repetitions: usize,
    pub base_seed: u64,
    pub load_factor: f64,
    pub p_crossover: f64,
    pub p_mutation_per_gene: Option<f64>,
}

impl ScenarioSpec {
    fn builtin(name: &str, pref_count: usize, base_seed: u64) -> Self {
        ScenarioSpec {
            name: name.to_string(),
            n_vms: 8,
            m_pms: 6,
            pref_count,
            pop_size: 100,
            generation_settings: SCENARIO_GENERATION_SETTINGS.to_vec(),
            repetitions: 5,
            base_seed,
            load_factor: DEFAULT_LOAD_FACTOR,
            p_crossover: crate::moea::DEFAULT_P_CROSSOVER,
            p_mutation_per_gene: None,
        }
    }

    /// 6 PMs, 8 VMs, three preferences.
    pub fn prf1(base_seed: u64) -> Self {
        Self::builtin("PRF1", 3, base_seed)
    }

    /// 6 PMs, 8 VMs, six preferences.
    pub fn prf2(base_seed: u64) -> Self {
        Self::builtin("PRF2", 6, base_seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pref_count > self.n_vms {
            return Err(Error::argument(format!(
                "{} preferences requested for {} vms",
                self.pref_count, self.n_vms
            )));
        }
        if self.generation_settings.is_empty() || self.generation_settings.contains(&0) {
            return Err(Error::argument("generation settings must be a nonempty list of positive counts"));
        }
        if self.repetitions == 0 {
            return Err(Error::argument("at least one repetition is required"));
        }
        Ok(())
    }

    /// Instance from `base_seed`, preferences on VMs `0..pref_count` from `base_seed + 1`.
    ///
    /// Scenarios that differ only in `pref_count` share the instance and the
    /// preferences of their common VMs.
    pub fn build_problem(&self) -> Result<(Instance, ScpStructure)> {
        self.validate()?;
        let inst = generate_instance(self.n_vms, self.m_pms, self.load_factor, self.base_seed)?;
        let annotated: Vec<usize> = (0..self.pref_count).collect();
        let scp = generate_preferences(&inst, &annotated, self.base_seed.wrapping_add(1))?;
        Ok((inst, scp))
    }

    pub fn config(&self, generations: usize, seed: u64) -> EvolutionConfig {
        EvolutionConfig {
            pop_size: self.pop_size,
            generations,
            p_crossover: self.p_crossover,
            p_mutation_per_gene: self.p_mutation_per_gene,
            seed,
        }
    }
}

/// Metrics of one (scenario, setting, seed, algorithm) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub scenario: String,
    pub generations: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub mean_weighted_flips: f64,
    pub hypervolume: f64,
    pub front_size: usize,
    pub feasible_front_size: usize,
    /// Mean over generations that overflowed, of admitted / slots.
    pub cpr_fraction: Option<f64>,
    /// Same, of admitted / overflowing-front size.
    pub cpr_fraction_of_front: Option<f64>,
    #[serde(skip)]
    pub wall_seconds: f64,
}

/// Per-generation history of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTrace {
    pub scenario: String,
    pub generations: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub mean_weighted_flips: Vec<f64>,
    pub front_sizes: Vec<usize>,
    pub cpr: Vec<CprSelectionLog>,
    pub reference: ObjectiveVector,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cells: Vec<Cell>,
    pub traces: Vec<CellTrace>,
}

impl ComparisonReport {
    pub fn cell(&self, scenario: &str, generations: usize, seed: u64, algorithm: Algorithm) -> Option<&Cell> {
        self.cells.iter().find(|c| {
            c.scenario == scenario && c.generations == generations && c.seed == seed && c.algorithm == algorithm
        })
    }

    pub fn cells_for<'a>(&'a self, scenario: &'a str, generations: usize, algorithm: Algorithm) -> impl Iterator<Item = &'a Cell> + 'a {
        self.cells
            .iter()
            .filter(move |c| c.scenario == scenario && c.generations == generations && c.algorithm == algorithm)
    }

    pub fn extend(&mut self, other: ComparisonReport) {
        self.cells.extend(other.cells);
        self.traces.extend(other.traces);
    }
}

/// Objective vectors of the feasible members of the final first front.
pub fn feasible_front(record: &RunRecord) -> Vec<ObjectiveVector> {
    record
        .final_front()
        .filter(|i| i.is_feasible())
        .map(|i| i.objectives)
        .collect()
}

/// `REFERENCE_SCALE` × componentwise maximum over all points; zero vector when empty.
pub fn reference_point<'a>(points: impl IntoIterator<Item = &'a ObjectiveVector>) -> ObjectiveVector {
    let mut worst = [0.0f64; 3];
    for p in points {
        for (w, v) in worst.iter_mut().zip(p.as_array()) {
            *w = w.max(v);
        }
    }
    ObjectiveVector::from_array(worst.map(|w| w * REFERENCE_SCALE))
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.into_iter().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Runs both algorithms on every (setting, repetition) with paired seed `base_seed + r`.
pub fn run_comparison(spec: &ScenarioSpec, inst: &Instance, scp: &ScpStructure) -> Result<ComparisonReport> {
    spec.validate()?;
    let mut report = ComparisonReport::default();
    for &generations in &spec.generation_settings {
        for r in 0..spec.repetitions {
            let seed = spec.base_seed.wrapping_add(r as u64);
            let cfg = spec.config(generations, seed);
            let tag = |e: Error| {
                Error::argument(format!("{} generations={generations} seed={seed}: {e}", spec.name))
            };
            let nsga = run_nsga2(inst, &cfg, Some(scp)).map_err(tag)?;
            let cp = run_cp_nsga(inst, &cfg, scp).map_err(tag)?;

            let fronts = [feasible_front(&nsga), feasible_front(&cp)];
            let reference = reference_point(fronts.iter().flatten());
            for (record, front) in [&nsga, &cp].into_iter().zip(&fronts) {
                let (cell, trace) = summarize_cell(spec, generations, seed, record, front, &reference);
                report.cells.push(cell);
                report.traces.push(trace);
            }
        }
    }
    Ok(report)
}

fn summarize_cell(
    spec: &ScenarioSpec,
    generations: usize,
    seed: u64,
    record: &RunRecord,
    front: &[ObjectiveVector],
    reference: &ObjectiveVector,
) -> (Cell, CellTrace) {
    let last = record.generations.last().expect("at least one generation");
    let logs: Vec<CprSelectionLog> = record.generations.iter().filter_map(|g| g.cpr.clone()).collect();
    let cell = Cell {
        scenario: spec.name.clone(),
        generations,
        seed,
        algorithm: record.algorithm,
        mean_weighted_flips: last.mean_weighted_flips().unwrap_or(0.0),
        hypervolume: hypervolume(front, reference),
        front_size: record.final_front().count(),
        feasible_front_size: front.len(),
        cpr_fraction: mean(logs.iter().filter_map(|l| l.fraction)),
        cpr_fraction_of_front: mean(logs.iter().filter_map(|l| l.fraction_of_front)),
        wall_seconds: record.total_seconds(),
    };
    let trace = CellTrace {
        scenario: spec.name.clone(),
        generations,
        seed,
        algorithm: record.algorithm,
        mean_weighted_flips: record
            .generations
            .iter()
            .map(|g| g.mean_weighted_flips().unwrap_or(0.0))
            .collect(),
        front_sizes: record.generations.iter().map(|g| g.front.len()).collect(),
        cpr: logs,
        reference: *reference,
    };
    (cell, trace)
}

/// Builds each scenario's problem and runs its comparison.
pub fn run_scenarios(specs: &[ScenarioSpec]) -> Result<ComparisonReport> {
    let mut report = ComparisonReport::default();
    for spec in specs {
        let (inst, scp) = spec.build_problem()?;
        report.extend(run_comparison(spec, &inst, &scp)?);
    }
    Ok(report)
}
