//! Bundled fixtures: the AttMpls backbone with its default six-controller
//! placement, the three-domain toy network, and a five-node ring.

use crate::domains::{load_placement, Placement};
use crate::flows::FlowSet;
use crate::geo::{load_topology, Topology};

pub const ATT_TOML: &str = include_str!("../fixtures/att.toml");
pub const ATT_TABLE2_TOML: &str = include_str!("../fixtures/att_table2.toml");
pub const TOY_TOML: &str = include_str!("../fixtures/toy.toml");
pub const TOY_PLACEMENT_TOML: &str = include_str!("../fixtures/toy_placement.toml");
pub const TOY_FLOWS_CSV: &str = include_str!("../fixtures/toy_flows.csv");
pub const RING5_TOML: &str = include_str!("../fixtures/ring5.toml");
pub const FAILOVER_SCRIPT: &str = include_str!("../fixtures/failover_fig2.script");

pub fn att_topology() -> Topology {
    load_topology(ATT_TOML).expect("bundled topology is valid")
}

pub fn att_placement(t: &Topology) -> Placement {
    load_placement(ATT_TABLE2_TOML, t).expect("bundled placement is valid")
}

pub fn toy_topology() -> Topology {
    load_topology(TOY_TOML).expect("bundled topology is valid")
}

pub fn toy_placement(t: &Topology) -> Placement {
    load_placement(TOY_PLACEMENT_TOML, t).expect("bundled placement is valid")
}

pub fn toy_flows() -> FlowSet {
    FlowSet::read_csv(&toy_topology(), TOY_FLOWS_CSV.as_bytes()).expect("bundled flows are valid")
}

pub fn ring5_topology() -> Topology {
    load_topology(RING5_TOML).expect("bundled topology is valid")
}
