//! Multiobjective virtual machine placement.
//!
//! The crate models a small data center (physical machines, virtual
//! machines, a traffic matrix and a hop-distance matrix), scores placements
//! on communication cost, power and resource wastage, and searches for
//! Pareto-optimal placements with NSGA-II.
//!
//! [`cpnsga`] adds a decision maker's per-VM placement preferences to the
//! search. Preferences are read under ceteris paribus semantics (see
//! [`scp`]): one placement beats another only if it is better on *every*
//! preference-carrying VM where the two differ. During survivor selection the
//! overflowing front is first filtered down to the placements that no other
//! member of that front beats, and crowding distance only breaks the
//! remaining ties.
//!
//! ```
//! use cpvmp::{cpnsga, instance, moea::EvolutionConfig};
//!
//! let inst = instance::generate_instance(8, 6, 0.5, 42).unwrap();
//! let prefs = instance::generate_preferences(&inst, &[0, 1, 2], 42).unwrap();
//! let cfg = EvolutionConfig::new(20, 5, 7);
//! let record = cpnsga::run_cp_nsga(&inst, &cfg, &prefs).unwrap();
//! assert_eq!(record.final_population.len(), 20);
//! ```

pub mod cpnsga;
pub mod error;
pub mod harness;
pub mod instance;
pub mod moea;
pub mod objectives;
pub mod scp;

pub use error::{Error, Result};
pub use instance::{Instance, PhysicalMachine, VirtualMachine};
pub use objectives::{ObjectiveVector, Placement};
pub use scp::{ScoreVector, ScpStructure};
