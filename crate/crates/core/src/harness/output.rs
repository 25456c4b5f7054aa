//! CSV and JSON writers for run and comparison results.
//!
//! Column orders are fixed. Floats go out with 17 significant digits so that
//! every value parses back to the same `f64`. Wall-clock timings are never
//! mixed into these outputs; they go to [`timings_csv`] only, which keeps
//! everything else byte-for-byte reproducible under a fixed seed.

use serde::Serialize;
use serde_json::{json, Value};

use super::{feasible_front, hypervolume, reference_point, ComparisonReport};
use crate::moea::{EvolutionConfig, RunRecord};
use crate::scp::ScpStructure;

pub const FRONT_COLUMNS: [&str; 11] = [
    "run_id",
    "generation",
    "individual_id",
    "comm_cost",
    "power",
    "wastage",
    "violation",
    "rank",
    "crowding",
    "weighted_flips",
    "score",
];

pub const COMPARISON_COLUMNS: [&str; 10] = [
    "scenario",
    "generations",
    "seed",
    "algorithm",
    "mean_weighted_flips",
    "hypervolume",
    "front_size",
    "feasible_front_size",
    "cpr_fraction",
    "cpr_fraction_of_front",
];

/// `%.17g`-style formatting.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..17).contains(&exp) {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (16 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_float(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontRow {
    pub run_id: String,
    pub generation: usize,
    pub individual_id: usize,
    pub comm_cost: f64,
    pub power: f64,
    pub wastage: f64,
    pub violation: f64,
    pub rank: usize,
    pub crowding: Option<f64>,
    pub weighted_flips: Option<u64>,
    pub score: Vec<u32>,
}

/// One row per member of the final population.
pub fn front_rows(run_id: &str, record: &RunRecord, scp: Option<&ScpStructure>) -> Vec<FrontRow> {
    let generation = record.generations.last().map_or(0, |g| g.generation);
    record
        .final_population
        .iter()
        .enumerate()
        .map(|(id, ind)| {
            let score = scp.map(|s| s.score(&ind.placement));
            FrontRow {
                run_id: run_id.to_string(),
                generation,
                individual_id: id,
                comm_cost: ind.objectives.comm_cost,
                power: ind.objectives.power,
                wastage: ind.objectives.wastage,
                violation: ind.violation,
                rank: ind.rank.unwrap_or(0),
                // JSON has no infinity; boundary points become null there.
                crowding: ind.crowding,
                weighted_flips: score.as_ref().map(|s| s.weighted_flips()),
                score: score.map(|s| s.0).unwrap_or_default(),
            }
        })
        .collect()
}

pub fn front_csv(rows: &[FrontRow]) -> String {
    let mut out = FRONT_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let score: Vec<String> = r.score.iter().map(u32::to_string).collect();
        let fields = [
            r.run_id.clone(),
            r.generation.to_string(),
            r.individual_id.to_string(),
            format_float(r.comm_cost),
            format_float(r.power),
            format_float(r.wastage),
            format_float(r.violation),
            r.rank.to_string(),
            opt_float(r.crowding),
            r.weighted_flips.map(|w| w.to_string()).unwrap_or_default(),
            score.join(";"),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn front_json(rows: &[FrontRow]) -> String {
    let values: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "run_id": r.run_id,
                "generation": r.generation,
                "individual_id": r.individual_id,
                "comm_cost": r.comm_cost,
                "power": r.power,
                "wastage": r.wastage,
                "violation": r.violation,
                "rank": r.rank,
                "crowding": r.crowding.filter(|c| c.is_finite()),
                "crowding_infinite": r.crowding.is_some_and(f64::is_infinite),
                "weighted_flips": r.weighted_flips,
                "score": r.score,
            })
        })
        .collect();
    pretty(&Value::Array(values))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Per-generation statistics plus final-front hypervolume of one run.
pub fn run_metrics_json(run_id: &str, cfg: &EvolutionConfig, record: &RunRecord) -> String {
    let generations: Vec<Value> = record
        .generations
        .iter()
        .map(|g| {
            let flips = if g.weighted_flips.is_empty() {
                Value::Null
            } else {
                json!({
                    "mean": g.mean_weighted_flips(),
                    "min": g.weighted_flips.iter().min(),
                    "max": g.weighted_flips.iter().max(),
                })
            };
            json!({
                "generation": g.generation,
                "front_size": g.front.len(),
                "weighted_flips": flips,
                "cpr": g.cpr,
            })
        })
        .collect();
    let front = feasible_front(record);
    let reference = reference_point(&front);
    let doc = json!({
        "run_id": run_id,
        "algorithm": record.algorithm,
        "config": cfg,
        "generations": generations,
        "final": {
            "front_size": record.final_front().count(),
            "feasible_front_size": front.len(),
            "hypervolume": hypervolume(&front, &reference),
            "reference": reference.as_array(),
        },
    });
    pretty(&doc)
}

pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = COMPARISON_COLUMNS.join(",");
    out.push('\n');
    for c in &report.cells {
        let fields = [
            c.scenario.clone(),
            c.generations.to_string(),
            c.seed.to_string(),
            c.algorithm.name().to_string(),
            format_float(c.mean_weighted_flips),
            format_float(c.hypervolume),
            c.front_size.to_string(),
            c.feasible_front_size.to_string(),
            opt_float(c.cpr_fraction),
            opt_float(c.cpr_fraction_of_front),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn comparison_json(report: &ComparisonReport) -> String {
    pretty(&json!(report.cells))
}

/// Per-generation traces of every cell.
pub fn comparison_metrics_json(report: &ComparisonReport) -> String {
    pretty(&json!({ "cells": report.traces }))
}

/// Wall-clock seconds per cell. The only output that varies between identical runs.
pub fn timings_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("scenario,generations,seed,algorithm,wall_seconds\n");
    for c in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            c.scenario,
            c.generations,
            c.seed,
            c.algorithm.name(),
            format_float(c.wall_seconds)
        ));
    }
    out
}

pub fn run_timings_csv(record: &RunRecord) -> String {
    let mut out = String::from("generation,wall_seconds\n");
    for (g, t) in record.generations.iter().zip(&record.wall_times) {
        out.push_str(&format!("{},{}\n", g.generation, format_float(*t)));
    }
    out
}
