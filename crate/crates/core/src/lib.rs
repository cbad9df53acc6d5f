//! Random transposition walk on `S_n`, its split-merge projection to integer
//! partitions, and a distance-one coupling of the split-merge chain.
//!
//! Small instances are handled exactly (rational arithmetic over every
//! state); large instances by seeded, trial-parallel Monte Carlo.

pub mod bag;
pub mod chain;
pub mod coupling;
pub mod error;
pub mod experiment;
pub mod lemmas;
pub mod partition;
pub mod schramm;
pub mod walk;

pub use bag::PartBag;
pub use chain::{SparseDistribution, TransitionMatrix};
pub use coupling::{CoupledChain, CoupledPair, JointDistribution};
pub use error::{Error, Result};
pub use experiment::{trial_rng, ExperimentRecord, Proportion, SimRng};
pub use lemmas::LemmaReport;
pub use partition::{PairStats, Partition};
pub use schramm::{GrowthSchedule, Pd1Sample};
pub use walk::{CyclePermutation, GraphState};
