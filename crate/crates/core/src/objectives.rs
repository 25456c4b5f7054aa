//! Objective and constraint evaluation for placements.
//!
//! All three objectives are minimized:
//!
//! * communication cost, `Σ_{i<j} traffic[i][j] · distance[p(i)][p(j)]`;
//! * power, a linear idle-to-peak model in CPU utilization, zero for empty PMs;
//! * resource wastage, `Σ_k (|r_cpu − r_mem| + ε) / (u_cpu + u_mem)` over active PMs.
//!
//! Overloaded PMs still get finite objective values (utilization is clamped
//! for power, remaining capacity floored at zero for wastage). Overload is
//! reported separately by [`constraint_violation`].

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;

pub const WASTAGE_EPSILON: f64 = 1e-4;

/// PM index hosting each VM.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Placement(Vec<usize>);

impl Placement {
    pub fn new(assignment: Vec<usize>) -> Self {
        Placement(assignment)
    }

    /// Checks length and PM range against `inst`.
    pub fn for_instance(inst: &Instance, assignment: Vec<usize>) -> Result<Self> {
        let p = Placement(assignment);
        p.check(inst)?;
        Ok(p)
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.0.len() != inst.n_vms() {
            return Err(Error::argument(format!(
                "placement has {} entries but instance has {} vms",
                self.0.len(),
                inst.n_vms()
            )));
        }
        if let Some((vm, &pm)) = self.0.iter().enumerate().find(|(_, &pm)| pm >= inst.m_pms()) {
            return Err(Error::argument(format!(
                "vm {vm} placed on pm {pm} but instance has {} pms",
                inst.m_pms()
            )));
        }
        Ok(())
    }

    pub fn assignment(&self) -> &[usize] {
        &self.0
    }

    pub fn assignment_mut(&mut self) -> &mut [usize] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl Deref for Placement {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for Placement {
    fn from(v: Vec<usize>) -> Self {
        Placement(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub comm_cost: f64,
    pub power: f64,
    pub wastage: f64,
}

impl ObjectiveVector {
    pub const LEN: usize = 3;

    pub fn new(comm_cost: f64, power: f64, wastage: f64) -> Self {
        ObjectiveVector {
            comm_cost,
            power,
            wastage,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.comm_cost, self.power, self.wastage]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        ObjectiveVector::new(a[0], a[1], a[2])
    }

    pub fn get(&self, index: usize) -> f64 {
        self.as_array()[index]
    }

    /// Weak Pareto dominance for minimization: no worse everywhere, better somewhere.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        let (a, b) = (self.as_array(), other.as_array());
        a.iter().zip(&b).all(|(x, y)| x <= y) && a.iter().zip(&b).any(|(x, y)| x < y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub cpu_used: Vec<f64>,
    pub mem_used: Vec<f64>,
    pub active: Vec<bool>,
}

/// Objective values plus capacity violation of one placement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    pub violation: f64,
}

pub fn server_loads(inst: &Instance, p: &Placement) -> LoadProfile {
    let m = inst.m_pms();
    let mut loads = LoadProfile {
        cpu_used: vec![0.0; m],
        mem_used: vec![0.0; m],
        active: vec![false; m],
    };
    for (vm, &pm) in inst.vms.iter().zip(p.iter()) {
        loads.cpu_used[pm] += vm.cpu_demand;
        loads.mem_used[pm] += vm.mem_demand;
        loads.active[pm] = true;
    }
    loads
}

pub fn communication_cost(inst: &Instance, p: &Placement) -> f64 {
    let mut total = 0.0;
    for i in 0..p.len() {
        let row = &inst.traffic[i];
        let hops = &inst.distance[p[i]];
        for j in i + 1..p.len() {
            total += row[j] * hops[p[j]];
        }
    }
    total
}

pub fn power_consumption(inst: &Instance, p: &Placement) -> f64 {
    power_from_loads(inst, &server_loads(inst, p))
}

fn power_from_loads(inst: &Instance, loads: &LoadProfile) -> f64 {
    inst.pms
        .iter()
        .enumerate()
        .filter(|(k, _)| loads.active[*k])
        .map(|(k, pm)| {
            let u = (loads.cpu_used[k] / pm.cpu_capacity).clamp(0.0, 1.0);
            pm.power_idle + (pm.power_max - pm.power_idle) * u
        })
        .sum()
}

pub fn resource_wastage(inst: &Instance, p: &Placement) -> f64 {
    resource_wastage_with_epsilon(inst, p, WASTAGE_EPSILON)
}

pub fn resource_wastage_with_epsilon(inst: &Instance, p: &Placement, epsilon: f64) -> f64 {
    wastage_from_loads(inst, &server_loads(inst, p), epsilon)
}

fn wastage_from_loads(inst: &Instance, loads: &LoadProfile, epsilon: f64) -> f64 {
    inst.pms
        .iter()
        .enumerate()
        .filter(|(k, _)| loads.active[*k])
        .map(|(k, pm)| {
            let u_cpu = loads.cpu_used[k] / pm.cpu_capacity;
            let u_mem = loads.mem_used[k] / pm.mem_capacity;
            let r_cpu = (1.0 - u_cpu).max(0.0);
            let r_mem = (1.0 - u_mem).max(0.0);
            ((r_cpu - r_mem).abs() + epsilon) / (u_cpu + u_mem)
        })
        .sum()
}

pub fn constraint_violation(inst: &Instance, p: &Placement) -> f64 {
    violation_from_loads(inst, &server_loads(inst, p))
}

fn violation_from_loads(inst: &Instance, loads: &LoadProfile) -> f64 {
    inst.pms
        .iter()
        .enumerate()
        .map(|(k, pm)| {
            (loads.cpu_used[k] - pm.cpu_capacity).max(0.0) / pm.cpu_capacity
                + (loads.mem_used[k] - pm.mem_capacity).max(0.0) / pm.mem_capacity
        })
        .sum()
}

pub fn evaluate(inst: &Instance, p: &Placement) -> Evaluation {
    let loads = server_loads(inst, p);
    Evaluation {
        objectives: ObjectiveVector {
            comm_cost: communication_cost(inst, p),
            power: power_from_loads(inst, &loads),
            wastage: wastage_from_loads(inst, &loads, WASTAGE_EPSILON),
        },
        violation: violation_from_loads(inst, &loads),
    }
}
