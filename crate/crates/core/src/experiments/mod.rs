//! Experiment drivers: the reward sweep, learning runs and the key-door
//! scenario.

pub mod keydoor;
pub mod learning;
pub mod sweep;

pub use keydoor::{run_keydoor, KeyDoorReport, Mode, Perturbation, ScenarioScript, Stage};
pub use learning::{
    run_learning, run_learning_once, run_learning_outcomes, summarize, LearningConfig, LearningRow,
    LearningSummary,
};
pub use sweep::{run_cell, run_sweep, SweepConfig, SweepRow};
