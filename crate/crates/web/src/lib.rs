//! Browser bindings for the placement solver.
//!
//! Every export takes plain numbers or JSON strings and returns a JSON
//! string, so the page needs no generated TypeScript types. The `*_json`
//! functions hold the logic and are usable (and tested) natively.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use cpvmp::cpnsga::run_cp_nsga;
use cpvmp::harness::{feasible_front, hypervolume, reference_point};
use cpvmp::instance::{generate_instance, generate_preferences};
use cpvmp::moea::{run_nsga2, EvolutionConfig, RunRecord};
use cpvmp::objectives::{evaluate, Placement};
use cpvmp::{Instance, ScpStructure};

#[derive(Debug, Clone, Deserialize)]
pub struct DemoRequest {
    pub n_vms: usize,
    pub m_pms: usize,
    pub pref_count: usize,
    pub load_factor: f64,
    pub pop_size: usize,
    pub generations: usize,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct DemoPoint {
    pub comm_cost: f64,
    pub power: f64,
    pub wastage: f64,
    pub feasible: bool,
    pub first_front: bool,
    pub weighted_flips: u64,
    pub placement: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct DemoRun {
    pub algorithm: &'static str,
    pub population: Vec<DemoPoint>,
    /// Mean weighted flips of the population after each generation.
    pub mean_weighted_flips: Vec<f64>,
    /// CPR admitted / seats per generation; null where nothing overflowed.
    pub cpr_fraction: Vec<Option<f64>>,
    pub hypervolume: f64,
}

#[derive(Debug, Serialize)]
pub struct DemoResult {
    pub preferences: Vec<(usize, Vec<usize>)>,
    pub reference: [f64; 3],
    pub runs: Vec<DemoRun>,
}

fn demo_run(record: &RunRecord, scp: &ScpStructure, reference: &cpvmp::ObjectiveVector) -> DemoRun {
    DemoRun {
        algorithm: record.algorithm.name(),
        population: record
            .final_population
            .iter()
            .map(|ind| DemoPoint {
                comm_cost: ind.objectives.comm_cost,
                power: ind.objectives.power,
                wastage: ind.objectives.wastage,
                feasible: ind.is_feasible(),
                first_front: ind.rank == Some(1),
                weighted_flips: scp.weighted_flips(&ind.placement),
                placement: ind.placement.assignment().to_vec(),
            })
            .collect(),
        mean_weighted_flips: record
            .generations
            .iter()
            .map(|g| g.mean_weighted_flips().unwrap_or(0.0))
            .collect(),
        cpr_fraction: record
            .generations
            .iter()
            .map(|g| g.cpr.as_ref().and_then(|c| c.fraction))
            .collect(),
        hypervolume: hypervolume(&feasible_front(record), reference),
    }
}

fn problem(req: &DemoRequest) -> cpvmp::Result<(Instance, ScpStructure)> {
    let inst = generate_instance(req.n_vms, req.m_pms, req.load_factor, req.seed)?;
    let annotated: Vec<usize> = (0..req.pref_count.min(req.n_vms)).collect();
    let scp = generate_preferences(&inst, &annotated, req.seed.wrapping_add(1))?;
    Ok((inst, scp))
}

/// Runs NSGA-II and CP-NSGA on one generated problem with the same seed.
pub fn run_demo_json(request: &str) -> Result<String, String> {
    let req: DemoRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let (inst, scp) = problem(&req).map_err(|e| e.to_string())?;
    let cfg = EvolutionConfig::new(req.pop_size, req.generations, req.seed);
    let nsga = run_nsga2(&inst, &cfg, Some(&scp)).map_err(|e| e.to_string())?;
    let cp = run_cp_nsga(&inst, &cfg, &scp).map_err(|e| e.to_string())?;
    let fronts = [feasible_front(&nsga), feasible_front(&cp)];
    let reference = reference_point(fronts.iter().flatten());
    let result = DemoResult {
        preferences: scp.entries().map(|(vm, order)| (vm, order.to_vec())).collect(),
        reference: reference.as_array(),
        runs: vec![demo_run(&nsga, &scp, &reference), demo_run(&cp, &scp, &reference)],
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct Comparison {
    score_a: Vec<u32>,
    score_b: Vec<u32>,
    weighted_flips_a: u64,
    weighted_flips_b: u64,
    differing_vms: Vec<usize>,
    /// "a", "b", "equal" or "incomparable".
    relation: &'static str,
}

/// SCP relation between two placements.
///
/// `preferences` uses the preference file format: VM id to most-preferred-first PM list.
pub fn compare_placements_json(m_pms: usize, preferences: &str, a: &[usize], b: &[usize]) -> Result<String, String> {
    let orders: BTreeMap<usize, Vec<usize>> = serde_json::from_str(preferences).map_err(|e| e.to_string())?;
    let scp = ScpStructure::new(m_pms, orders).map_err(|e| e.to_string())?;
    if a.len() != b.len() {
        return Err(format!("placements have {} and {} genes", a.len(), b.len()));
    }
    if let Some(vm) = scp.max_vm().filter(|&vm| vm >= a.len()) {
        return Err(format!("preference for vm {vm} but placements have {} genes", a.len()));
    }
    if let Some(&pm) = a.iter().chain(b).find(|&&pm| pm >= m_pms) {
        return Err(format!("pm {pm} is out of range for {m_pms} pms"));
    }
    let (pa, pb) = (Placement::new(a.to_vec()), Placement::new(b.to_vec()));
    let relation = if scp.dominates(&pa, &pb) {
        "a"
    } else if scp.dominates(&pb, &pa) {
        "b"
    } else if scp.diff(&pa, &pb).is_empty() {
        "equal"
    } else {
        "incomparable"
    };
    let cmp = Comparison {
        score_a: scp.score(&pa).0,
        score_b: scp.score(&pb).0,
        weighted_flips_a: scp.weighted_flips(&pa),
        weighted_flips_b: scp.weighted_flips(&pb),
        differing_vms: scp.diff(&pa, &pb),
        relation,
    };
    serde_json::to_string(&cmp).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
struct PlacementReport {
    comm_cost: f64,
    power: f64,
    wastage: f64,
    violation: f64,
}

/// Objectives and constraint violation of one placement on a generated instance.
pub fn evaluate_placement_json(
    n_vms: usize,
    m_pms: usize,
    load_factor: f64,
    seed: u64,
    placement: &[usize],
) -> Result<String, String> {
    let inst = generate_instance(n_vms, m_pms, load_factor, seed).map_err(|e| e.to_string())?;
    let p = Placement::for_instance(&inst, placement.to_vec()).map_err(|e| e.to_string())?;
    let e = evaluate(&inst, &p);
    let report = PlacementReport {
        comm_cost: e.objectives.comm_cost,
        power: e.objectives.power,
        wastage: e.objectives.wastage,
        violation: e.violation,
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn run_demo(request: &str) -> Result<String, JsValue> {
    run_demo_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn compare_placements(m_pms: usize, preferences: &str, a: Vec<usize>, b: Vec<usize>) -> Result<String, JsValue> {
    compare_placements_json(m_pms, preferences, &a, &b).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn evaluate_placement(n_vms: usize, m_pms: usize, load_factor: f64, seed: u64, placement: Vec<usize>) -> Result<String, JsValue> {
    evaluate_placement_json(n_vms, m_pms, load_factor, seed, &placement).map_err(|e| JsValue::from_str(&e))
}
