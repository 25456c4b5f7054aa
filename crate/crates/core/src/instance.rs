//! Data-center instances: machines, traffic and topology.
//!
//! Also holds the seeded generators used by the experiments and the JSON
//! readers and writers for instance and preference files.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scp::ScpStructure;

/// Idle draw used by [`generate_instance`], in watts.
pub const DEFAULT_POWER_IDLE: f64 = 160.0;
/// Full-load draw used by [`generate_instance`], in watts.
pub const DEFAULT_POWER_MAX: f64 = 250.0;
/// Hop distance between two PMs in the same rack.
pub const SAME_RACK_DISTANCE: f64 = 2.0;
/// Hop distance between two PMs in different racks.
pub const CROSS_RACK_DISTANCE: f64 = 4.0;
/// PMs per rack in generated topologies.
pub const RACK_SIZE: usize = 3;

/// Warning recorded in `meta.warnings` when a generated demand had to be clamped.
pub const WARNING_DEMAND_CLAMPED: &str = "demand_clamped";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualMachine {
    pub id: usize,
    /// Fraction of a unit-capacity PM.
    pub cpu_demand: f64,
    pub mem_demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalMachine {
    pub id: usize,
    pub cpu_capacity: f64,
    pub mem_capacity: f64,
    /// Watts drawn when active with zero utilization.
    pub power_idle: f64,
    /// Watts drawn at full CPU utilization.
    pub power_max: f64,
}

/// A placement problem.
///
/// `traffic[i][j]` is the demand between VMs `i` and `j`; `distance[k][l]`
/// the hop count between PMs `k` and `l`. Both matrices are symmetric with
/// a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub pms: Vec<PhysicalMachine>,
    pub vms: Vec<VirtualMachine>,
    pub traffic: Vec<Vec<f64>>,
    pub distance: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<serde_json::Value>,
}

impl Instance {
    pub fn n_vms(&self) -> usize {
        self.vms.len()
    }

    pub fn m_pms(&self) -> usize {
        self.pms.len()
    }

    /// Warnings the generator left in `meta.warnings`.
    pub fn warnings(&self) -> Vec<String> {
        self.meta
            .as_ref()
            .and_then(|m| m.get("warnings"))
            .and_then(|w| w.as_array())
            .map(|w| {
                w.iter()
                    .filter_map(|s| s.as_str().map(str::to_owned))
                    .collect()
            })
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationCode {
    NoVms,
    NoPms,
    VmIdMismatch,
    PmIdMismatch,
    VmDemandOutOfRange,
    PmCapacityNonPositive,
    PmPowerInvalid,
    TrafficShape,
    DistanceShape,
    TrafficNegative,
    DistanceNegative,
    TrafficAsymmetric,
    DistanceAsymmetric,
    TrafficNonzeroDiagonal,
    DistanceNonzeroDiagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

/// Every invariant an [`Instance`] breaks. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, message: String) {
        self.violations.push(Violation { code, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let messages: Vec<&str> = self.violations.iter().map(|v| v.message.as_str()).collect();
        write!(f, "{}", messages.join("; "))
    }
}

pub fn validate_instance(inst: &Instance) -> ValidationReport {
    use ViolationCode::*;

    let mut report = ValidationReport::default();
    let n = inst.vms.len();
    let m = inst.pms.len();

    if n == 0 {
        report.push(NoVms, "instance has no virtual machines".into());
    }
    if m == 0 {
        report.push(NoPms, "instance has no physical machines".into());
    }

    for (idx, vm) in inst.vms.iter().enumerate() {
        if vm.id != idx {
            report.push(VmIdMismatch, format!("vm at position {idx} has id {}", vm.id));
        }
        for (name, value) in [("cpu_demand", vm.cpu_demand), ("mem_demand", vm.mem_demand)] {
            if !(value > 0.0 && value <= 1.0) {
                report.push(
                    VmDemandOutOfRange,
                    format!("vm {idx} {name} = {value} is outside (0, 1]"),
                );
            }
        }
    }

    for (idx, pm) in inst.pms.iter().enumerate() {
        if pm.id != idx {
            report.push(PmIdMismatch, format!("pm at position {idx} has id {}", pm.id));
        }
        for (name, value) in [("cpu_capacity", pm.cpu_capacity), ("mem_capacity", pm.mem_capacity)] {
            if !(value > 0.0 && value.is_finite()) {
                report.push(
                    PmCapacityNonPositive,
                    format!("pm {idx} {name} = {value} must be positive"),
                );
            }
        }
        if !(pm.power_idle >= 0.0 && pm.power_max >= pm.power_idle && pm.power_max.is_finite()) {
            report.push(
                PmPowerInvalid,
                format!(
                    "pm {idx} requires power_max >= power_idle >= 0 (idle {}, max {})",
                    pm.power_idle, pm.power_max
                ),
            );
        }
    }

    check_matrix(
        &mut report,
        "traffic",
        &inst.traffic,
        n,
        [TrafficShape, TrafficNegative, TrafficAsymmetric, TrafficNonzeroDiagonal],
    );
    check_matrix(
        &mut report,
        "distance",
        &inst.distance,
        m,
        [DistanceShape, DistanceNegative, DistanceAsymmetric, DistanceNonzeroDiagonal],
    );

    report
}

/// Codes are `[shape, negative, asymmetric, diagonal]`.
fn check_matrix(
    report: &mut ValidationReport,
    name: &str,
    matrix: &[Vec<f64>],
    size: usize,
    codes: [ViolationCode; 4],
) {
    let [shape, negative, asymmetric, diagonal] = codes;
    if matrix.len() != size || matrix.iter().any(|row| row.len() != size) {
        report.push(shape, format!("{name} matrix must be {size}x{size}"));
        return;
    }
    for i in 0..size {
        if matrix[i][i] != 0.0 {
            report.push(
                diagonal,
                format!("{name}[{i}][{i}] = {} must be zero", matrix[i][i]),
            );
        }
        for j in 0..size {
            let value = matrix[i][j];
            if !(value >= 0.0 && value.is_finite()) {
                report.push(negative, format!("{name}[{i}][{j}] = {value} must be nonnegative"));
            }
            if j > i && value != matrix[j][i] {
                report.push(
                    asymmetric,
                    format!("{name}[{i}][{j}] = {value} differs from {name}[{j}][{i}] = {}", matrix[j][i]),
                );
            }
        }
    }
}

pub fn load_instance<R: Read>(source: R) -> Result<Instance> {
    let inst: Instance = serde_json::from_reader(source)?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(Error::Validation(report));
    }
    Ok(inst)
}

pub fn save_instance<W: Write>(inst: &Instance, mut sink: W) -> Result<()> {
    // serde_json writes the shortest representation that parses back to the same bits.
    serde_json::to_writer_pretty(&mut sink, inst)?;
    writeln!(sink)?;
    Ok(())
}

/// Generates a random instance with `load_factor × m` total demand per resource.
///
/// Raw demands are drawn uniformly from `[0.1, 1)` and rescaled to hit the
/// target total exactly. Any demand pushed above 1.0 by the rescale is
/// clamped and [`WARNING_DEMAND_CLAMPED`] is recorded in `meta.warnings`.
pub fn generate_instance(n_vms: usize, m_pms: usize, load_factor: f64, seed: u64) -> Result<Instance> {
    if n_vms == 0 || m_pms == 0 {
        return Err(Error::argument("instance needs at least one VM and one PM"));
    }
    if !(load_factor > 0.0 && load_factor <= 1.0) {
        return Err(Error::argument(format!("load factor {load_factor} is outside (0, 1]")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = load_factor * m_pms as f64;
    let mut clamped = false;

    let mut cpu: Vec<f64> = (0..n_vms).map(|_| rng.gen_range(0.1..1.0)).collect();
    let mut mem: Vec<f64> = (0..n_vms).map(|_| rng.gen_range(0.1..1.0)).collect();
    for demands in [&mut cpu, &mut mem] {
        let scale = target / demands.iter().sum::<f64>();
        for d in demands.iter_mut() {
            *d *= scale;
            if *d > 1.0 {
                *d = 1.0;
                clamped = true;
            }
        }
    }

    let mut traffic = vec![vec![0.0; n_vms]; n_vms];
    for i in 0..n_vms {
        for j in i + 1..n_vms {
            if rng.gen_bool(0.5) {
                // (0, 10]
                let t = 10.0 - 10.0 * rng.gen::<f64>();
                traffic[i][j] = t;
                traffic[j][i] = t;
            }
        }
    }

    let distance = (0..m_pms)
        .map(|k| (0..m_pms).map(|l| tree_distance(k, l)).collect())
        .collect();

    let vms = (0..n_vms)
        .map(|id| VirtualMachine {
            id,
            cpu_demand: cpu[id],
            mem_demand: mem[id],
        })
        .collect();
    let pms = (0..m_pms)
        .map(|id| PhysicalMachine {
            id,
            cpu_capacity: 1.0,
            mem_capacity: 1.0,
            power_idle: DEFAULT_POWER_IDLE,
            power_max: DEFAULT_POWER_MAX,
        })
        .collect();

    let warnings: Vec<&str> = if clamped {
        log::warn!("generated demand exceeded 1.0 after rescaling and was clamped");
        vec![WARNING_DEMAND_CLAMPED]
    } else {
        Vec::new()
    };
    let meta = serde_json::json!({
        "generator": {
            "n_vms": n_vms,
            "m_pms": m_pms,
            "load_factor": load_factor,
            "seed": seed,
        },
        "warnings": warnings,
    });

    Ok(Instance {
        pms,
        vms,
        traffic,
        distance,
        meta: Some(meta),
    })
}

fn tree_distance(k: usize, l: usize) -> f64 {
    if k == l {
        0.0
    } else if k / RACK_SIZE == l / RACK_SIZE {
        SAME_RACK_DISTANCE
    } else {
        CROSS_RACK_DISTANCE
    }
}

/// Draws an independent uniform permutation of the PMs for each annotated VM.
///
/// Permutations are drawn in ascending VM id order regardless of the order
/// of `annotated_vms`.
pub fn generate_preferences(inst: &Instance, annotated_vms: &[usize], seed: u64) -> Result<ScpStructure> {
    let n = inst.n_vms();
    let m = inst.m_pms();
    let mut ids: Vec<usize> = annotated_vms.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if let Some(&bad) = ids.iter().find(|&&id| id >= n) {
        return Err(Error::argument(format!("annotated vm {bad} is out of range for {n} vms")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = ids
        .into_iter()
        .map(|vm| {
            let mut order: Vec<usize> = (0..m).collect();
            order.shuffle(&mut rng);
            (vm, order)
        })
        .collect();
    ScpStructure::new(m, entries)
}

/// Reads a preference file: `{"<vm id>": [pm ids, most preferred first], ...}`.
pub fn load_preferences<R: Read>(source: R, inst: &Instance) -> Result<ScpStructure> {
    let raw: BTreeMap<String, Vec<usize>> = serde_json::from_reader(source)?;
    let mut entries = BTreeMap::new();
    for (key, order) in raw {
        let vm: usize = key
            .parse()
            .map_err(|_| Error::argument(format!("preference key {key:?} is not a vm id")))?;
        if vm >= inst.n_vms() {
            return Err(Error::argument(format!(
                "preference for vm {vm} but instance has {} vms",
                inst.n_vms()
            )));
        }
        entries.insert(vm, order);
    }
    ScpStructure::new(inst.m_pms(), entries)
}

pub fn save_preferences<W: Write>(scp: &ScpStructure, mut sink: W) -> Result<()> {
    // Written by hand so keys appear in numeric rather than string order.
    let lines: Vec<String> = scp
        .entries()
        .map(|(vm, order)| {
            let pms: Vec<String> = order.iter().map(usize::to_string).collect();
            format!("  \"{vm}\": [{}]", pms.join(", "))
        })
        .collect();
    if lines.is_empty() {
        writeln!(sink, "{{}}")?;
    } else {
        writeln!(sink, "{{\n{}\n}}", lines.join(",\n"))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = include_str!("../../../docs/instance.sample.json");
    const SAMPLE_PREFS: &str = include_str!("../../../docs/preferences.sample.json");

    fn two_by_two() -> Instance {
        Instance {
            pms: (0..2)
                .map(|id| PhysicalMachine {
                    id,
                    cpu_capacity: 1.0,
                    mem_capacity: 1.0,
                    power_idle: 160.0,
                    power_max: 250.0,
                })
                .collect(),
            vms: vec![
                VirtualMachine { id: 0, cpu_demand: 0.3, mem_demand: 0.2 },
                VirtualMachine { id: 1, cpu_demand: 0.4, mem_demand: 0.5 },
            ],
            traffic: vec![vec![0.0, 5.0], vec![5.0, 0.0]],
            distance: vec![vec![0.0, 2.0], vec![2.0, 0.0]],
            meta: None,
        }
    }

    #[test]
    fn well_formed_instance_is_valid() {
        assert!(validate_instance(&two_by_two()).is_valid());
    }

    #[test]
    fn asymmetric_traffic_is_reported() {
        let mut inst = two_by_two();
        inst.traffic[1][0] = 3.0;
        let report = validate_instance(&inst);
        assert!(report.has(ViolationCode::TrafficAsymmetric));
        assert_eq!(report.violations.len(), 1);
    }

    #[test]
    fn nonzero_distance_diagonal_is_reported() {
        let mut inst = generate_instance(4, 3, 0.5, 1).unwrap();
        inst.distance[2][2] = 1.0;
        assert!(validate_instance(&inst).has(ViolationCode::DistanceNonzeroDiagonal));
    }

    #[test]
    fn bad_members_are_reported() {
        let mut inst = two_by_two();
        inst.vms[0].cpu_demand = 0.0;
        inst.vms[1].mem_demand = 1.5;
        inst.pms[0].power_max = 100.0;
        inst.pms[1].cpu_capacity = -1.0;
        inst.pms[1].id = 7;
        inst.distance[0][1] = -2.0;
        inst.distance[1][0] = -2.0;
        let report = validate_instance(&inst);
        for code in [
            ViolationCode::VmDemandOutOfRange,
            ViolationCode::PmPowerInvalid,
            ViolationCode::PmCapacityNonPositive,
            ViolationCode::PmIdMismatch,
            ViolationCode::DistanceNegative,
        ] {
            assert!(report.has(code), "missing {code:?}: {report}");
        }
        assert_eq!(
            report.violations.iter().filter(|v| v.code == ViolationCode::VmDemandOutOfRange).count(),
            2
        );
    }

    #[test]
    fn wrong_matrix_shape_is_reported() {
        let mut inst = two_by_two();
        inst.traffic.pop();
        assert!(validate_instance(&inst).has(ViolationCode::TrafficShape));
    }

    #[test]
    fn sample_file_loads() {
        let inst = load_instance(SAMPLE.as_bytes()).unwrap();
        assert_eq!(inst.m_pms(), 2);
        assert_eq!(inst.n_vms(), 2);
        assert_eq!(inst.vms[1].cpu_demand, 0.4);
        assert_eq!(inst.traffic[0][1], 5.0);
        assert_eq!(inst.distance[1][0], 2.0);
        assert_eq!(inst.pms[0].power_idle, 160.0);
    }

    #[test]
    fn sample_preferences_load() {
        let inst = load_instance(SAMPLE.as_bytes()).unwrap();
        let scp = load_preferences(SAMPLE_PREFS.as_bytes(), &inst).unwrap();
        assert_eq!(scp.k(), 1);
        assert_eq!(scp.order(0).unwrap(), &[1, 0]);
    }

    #[test]
    fn field_order_is_irrelevant() {
        let reordered = r#"{
            "distance": [[0, 2], [2, 0]],
            "traffic": [[0, 5], [5, 0]],
            "vms": [{"mem_demand": 0.2, "cpu_demand": 0.3, "id": 0},
                    {"id": 1, "mem_demand": 0.5, "cpu_demand": 0.4}],
            "pms": [{"power_max": 250, "power_idle": 160, "mem_capacity": 1, "cpu_capacity": 1, "id": 0},
                    {"id": 1, "cpu_capacity": 1, "mem_capacity": 1, "power_idle": 160, "power_max": 250}]
        }"#;
        assert_eq!(load_instance(reordered.as_bytes()).unwrap(), two_by_two());
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let truncated = &SAMPLE[..SAMPLE.len() / 2];
        match load_instance(truncated.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert!(line >= 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn zero_pms_is_a_validation_error() {
        let text = r#"{"pms": [], "vms": [{"id": 0, "cpu_demand": 0.5, "mem_demand": 0.5}],
                       "traffic": [[0]], "distance": []}"#;
        match load_instance(text.as_bytes()) {
            Err(Error::Validation(report)) => assert!(report.has(ViolationCode::NoPms)),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn save_then_load_is_identity() {
        let inst = generate_instance(8, 6, 0.5, 99).unwrap();
        let mut buf = Vec::new();
        save_instance(&inst, &mut buf).unwrap();
        assert_eq!(load_instance(buf.as_slice()).unwrap(), inst);
    }

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(
            generate_instance(8, 6, 0.5, 42).unwrap(),
            generate_instance(8, 6, 0.5, 42).unwrap()
        );
        assert_ne!(
            generate_instance(8, 6, 0.5, 42).unwrap(),
            generate_instance(8, 6, 0.5, 43).unwrap()
        );
    }

    #[test]
    fn generated_demand_hits_the_load_factor() {
        for seed in 0..50 {
            let inst = generate_instance(8, 6, 0.5, seed).unwrap();
            assert!(inst.warnings().is_empty());
            let cpu: f64 = inst.vms.iter().map(|v| v.cpu_demand).sum();
            let mem: f64 = inst.vms.iter().map(|v| v.mem_demand).sum();
            assert!((cpu - 3.0).abs() < 1e-9, "seed {seed}: cpu {cpu}");
            assert!((mem - 3.0).abs() < 1e-9, "seed {seed}: mem {mem}");
        }
    }

    #[test]
    fn two_pms_share_a_rack() {
        let inst = generate_instance(2, 2, 0.3, 5).unwrap();
        assert_eq!(inst.distance, vec![vec![0.0, 2.0], vec![2.0, 0.0]]);
    }

    #[test]
    fn racks_hold_three_pms() {
        let inst = generate_instance(3, 7, 0.5, 5).unwrap();
        assert_eq!(inst.distance[0][2], 2.0);
        assert_eq!(inst.distance[2][3], 4.0);
        assert_eq!(inst.distance[3][5], 2.0);
        assert_eq!(inst.distance[5][6], 4.0);
    }

    #[test]
    fn overfull_rescale_clamps_and_warns() {
        // Two VMs must carry 0.9 × 4 = 3.6 units, so at least one exceeds 1.0.
        let inst = generate_instance(2, 4, 0.9, 3).unwrap();
        assert_eq!(inst.warnings(), vec![WARNING_DEMAND_CLAMPED.to_string()]);
        assert!(inst.vms.iter().any(|v| v.cpu_demand == 1.0));
        assert!(validate_instance(&inst).is_valid());
    }

    #[test]
    fn generator_rejects_bad_arguments() {
        assert!(generate_instance(0, 3, 0.5, 0).is_err());
        assert!(generate_instance(3, 0, 0.5, 0).is_err());
        assert!(generate_instance(3, 3, 0.0, 0).is_err());
        assert!(generate_instance(3, 3, 1.5, 0).is_err());
    }

    #[test]
    fn traffic_is_sparse_and_bounded() {
        let inst = generate_instance(40, 6, 0.5, 11).unwrap();
        let mut zero = 0;
        let mut total = 0;
        for i in 0..40 {
            for j in i + 1..40 {
                let t = inst.traffic[i][j];
                assert!((0.0..=10.0).contains(&t));
                total += 1;
                if t == 0.0 {
                    zero += 1;
                }
            }
        }
        let frac = zero as f64 / total as f64;
        assert!((0.4..0.6).contains(&frac), "zero fraction {frac}");
    }

    #[test]
    fn empty_annotation_gives_empty_structure() {
        let inst = generate_instance(4, 3, 0.5, 0).unwrap();
        assert_eq!(generate_preferences(&inst, &[], 1).unwrap().k(), 0);
    }

    #[test]
    fn preferences_are_permutations() {
        let inst = generate_instance(4, 3, 0.5, 0).unwrap();
        let scp = generate_preferences(&inst, &[0], 9).unwrap();
        let mut order = scp.order(0).unwrap().to_vec();
        order.sort_unstable();
        assert_eq!(order, vec![0, 1, 2]);
        assert!(scp.order(1).is_none());
    }

    #[test]
    fn preferences_are_deterministic() {
        let inst = generate_instance(8, 6, 0.5, 0).unwrap();
        let a = generate_preferences(&inst, &[5, 1, 3], 4).unwrap();
        let b = generate_preferences(&inst, &[1, 3, 5], 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn out_of_range_annotation_is_rejected() {
        let inst = generate_instance(4, 3, 0.5, 0).unwrap();
        assert!(matches!(generate_preferences(&inst, &[4], 0), Err(Error::Argument(_))));
    }

    #[test]
    fn preferences_round_trip() {
        let inst = generate_instance(12, 6, 0.5, 0).unwrap();
        let scp = generate_preferences(&inst, &[0, 2, 10, 11], 8).unwrap();
        let mut buf = Vec::new();
        save_preferences(&scp, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.find("\"2\"").unwrap() < text.find("\"10\"").unwrap());
        assert_eq!(load_preferences(buf.as_slice(), &inst).unwrap(), scp);
    }

    #[test]
    fn preference_file_errors() {
        let inst = generate_instance(2, 3, 0.5, 0).unwrap();
        assert!(load_preferences(r#"{"x": [0, 1, 2]}"#.as_bytes(), &inst).is_err());
        assert!(load_preferences(r#"{"5": [0, 1, 2]}"#.as_bytes(), &inst).is_err());
        assert!(load_preferences(r#"{"0": [0, 1, 1]}"#.as_bytes(), &inst).is_err());
        assert!(load_preferences(r#"{"0": [0, 1]}"#.as_bytes(), &inst).is_err());
    }
}
