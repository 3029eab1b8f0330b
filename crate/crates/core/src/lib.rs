//! Switch mode configuration and controller remapping when SDN controllers
//! fail.
//!
//! Offline switches either fall back to legacy routing or are adopted by a
//! surviving controller with spare processing ability. The crate builds the
//! resulting assignment problems from a geographic topology and a controller
//! placement, solves them exactly or greedily, and measures the outcome.

pub mod domains;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod flows;
pub mod geo;
pub mod oscm;
pub mod protocol;
pub mod solvers;
pub mod synthetic;
pub mod world;

pub use domains::{enumerate_failure_scenarios, load_placement, residual_capacity, FailureScenario, Placement};
pub use error::{Error, Result};
pub use experiment::{emit_report, run_scenario, QueueModel, ReportFormat, ScenarioReport};
pub use flows::{compute_beta, generate_flows, BetaMatrix, FlowSet};
pub use geo::{load_topology, NodeId, Topology};
pub use oscm::{build_instance, objective, programmable_flows, validate, OscmInstance, Solution};
pub use solvers::{solve_exact, solve_nearest, solve_retroflow, Algorithm, Outcome, SolverBudget};
pub use world::{Config, World};
