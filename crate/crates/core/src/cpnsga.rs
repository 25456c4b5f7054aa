//! CP-NSGA: NSGA-II with a ceteris paribus filter in survivor selection.
//!
//! Whole fronts are admitted exactly as in NSGA-II. When a front does not
//! fit, its members are first passed through the SCP dominance relation: the
//! members no other member of that front dominates (its CPR-Pareto set) get
//! the remaining seats first. Crowding distance, computed once over the whole
//! overflowing front, then decides among CPR-Pareto members when there are
//! more of them than seats, or fills leftover seats from the rest otherwise.
//!
//! The filter reads placements only, never objective values, and consumes no
//! randomness, so CP-NSGA and NSGA-II share a random stream draw for draw.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::moea::{evolve, Algorithm, EvolutionConfig, Individual, RunRecord, SurvivalSplit, SurvivorSelection};
use crate::scp::{maximal_scores, ScoreVector, ScpStructure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CprSelectionLog {
    pub generation: usize,
    pub last_front_size: usize,
    pub cpr_pareto_size: usize,
    /// Seats left for the overflowing front.
    pub slots: usize,
    pub cpr_admitted: usize,
    /// `cpr_admitted / slots`; `None` when nothing overflowed.
    pub fraction: Option<f64>,
    /// `cpr_admitted / last_front_size`; `None` when nothing overflowed.
    pub fraction_of_front: Option<f64>,
}

/// [`SurvivorSelection`] with the CPR filter on the overflowing front.
#[derive(Debug, Clone)]
pub struct CprSelection<'a> {
    scp: &'a ScpStructure,
}

impl<'a> CprSelection<'a> {
    pub fn new(scp: &'a ScpStructure) -> Self {
        CprSelection { scp }
    }
}

impl SurvivorSelection for CprSelection<'_> {
    fn select(&mut self, combined: Vec<Individual>, n: usize, generation: usize) -> (Vec<Individual>, Option<CprSelectionLog>) {
        let (survivors, log) = cpr_survivor_selection(combined, n, self.scp);
        (survivors, Some(CprSelectionLog { generation, ..log }))
    }
}

/// Survivor selection with the CPR operator in front of crowding truncation.
///
/// The returned log carries generation 0; [`CprSelection`] stamps the real one.
pub fn cpr_survivor_selection(combined: Vec<Individual>, n: usize, scp: &ScpStructure) -> (Vec<Individual>, CprSelectionLog) {
    let split = SurvivalSplit::new(combined, n);
    let slots = split.slots;
    let overflow = split.overflow.clone();

    if overflow.is_empty() {
        let log = CprSelectionLog {
            generation: 0,
            last_front_size: 0,
            cpr_pareto_size: 0,
            slots: 0,
            cpr_admitted: 0,
            fraction: None,
            fraction_of_front: None,
        };
        return (split.finish(&[]), log);
    }

    let scores: Vec<ScoreVector> = overflow.iter().map(|&i| scp.score(&split.pool[i].placement)).collect();
    let mut in_cpr = vec![false; overflow.len()];
    for local in maximal_scores(&scores) {
        in_cpr[local] = true;
    }
    let (mut cpr, mut rest) = (Vec::new(), Vec::new());
    for (&i, &keep) in overflow.iter().zip(&in_cpr) {
        if keep {
            cpr.push(i);
        } else {
            rest.push(i);
        }
    }

    let extra = if cpr.len() <= slots {
        let mut chosen = split.most_crowded(&cpr, cpr.len());
        chosen.extend(split.most_crowded(&rest, slots - cpr.len()));
        chosen
    } else {
        split.most_crowded(&cpr, slots)
    };

    let admitted = cpr.len().min(slots);
    let log = CprSelectionLog {
        generation: 0,
        last_front_size: overflow.len(),
        cpr_pareto_size: cpr.len(),
        slots,
        cpr_admitted: admitted,
        fraction: Some(admitted as f64 / slots as f64),
        fraction_of_front: Some(admitted as f64 / overflow.len() as f64),
    };
    (split.finish(&extra), log)
}

pub fn run_cp_nsga(inst: &Instance, cfg: &EvolutionConfig, scp: &ScpStructure) -> Result<RunRecord> {
    if scp.is_empty() {
        return Err(Error::argument(
            "CP-NSGA needs at least one preference; with none it reduces to NSGA-II",
        ));
    }
    evolve(inst, cfg, Some(scp), Algorithm::Cpnsga, &mut CprSelection::new(scp))
}
