//! A topology with its flows, programmability indicators, placement and
//! per-switch loads, plus the knobs used to derive them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domains::Placement;
use crate::error::{Error, Result};
use crate::flows::{compute_beta, generate_flows, BetaMatrix, FlowPairs, FlowSet, SwitchLoads};
use crate::geo::{haversine_km, distance_to_delay_ms, AltPathRule, NodeId, PathMetric, Topology};

/// How D_ij between a switch and a controller host is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlDelay {
    /// Shortest-path propagation delay through the topology.
    #[default]
    Routed,
    /// Great-circle distance between the two sites.
    Geodesic,
}

/// Where g_i comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadSource {
    /// Fixture counts when the placement carries them, computed otherwise.
    #[default]
    Auto,
    Fixture,
    Computed,
}

macro_rules! keyword_enum {
    ($ty:ty { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        "unknown {} '{other}'", stringify!($ty)
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(ControlDelay { "routed" => ControlDelay::Routed, "geodesic" => ControlDelay::Geodesic });
keyword_enum!(LoadSource {
    "auto" => LoadSource::Auto,
    "fixture" => LoadSource::Fixture,
    "computed" => LoadSource::Computed,
});
keyword_enum!(PathMetric { "delay" => PathMetric::Delay, "hops" => PathMetric::Hops });
keyword_enum!(AltPathRule {
    "edge_disjoint" => AltPathRule::EdgeDisjoint,
    "any_two_simple" => AltPathRule::AnyTwoSimple,
});
keyword_enum!(FlowPairs { "ordered" => FlowPairs::Ordered, "unordered" => FlowPairs::Unordered });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Config {
    pub path_metric: PathMetric,
    pub alt_path: AltPathRule,
    pub flow_pairs: FlowPairs,
    pub control_delay: ControlDelay,
    pub loads: LoadSource,
}

#[derive(Debug, Clone)]
pub struct World {
    topology: Topology,
    flows: FlowSet,
    beta: BetaMatrix,
    placement: Placement,
    computed_loads: SwitchLoads,
    loads: SwitchLoads,
    config: Config,
    // controller host -> delay to every node, topology order
    control_delays: BTreeMap<NodeId, Vec<f64>>,
}

impl World {
    /// Generates flows from the topology and derives everything else.
    pub fn new(topology: Topology, placement: Placement, config: Config) -> Result<Self> {
        let flows = generate_flows(&topology, config.flow_pairs, config.path_metric);
        World::with_flows(topology, flows, placement, config)
    }

    pub fn with_flows(topology: Topology, flows: FlowSet, placement: Placement, config: Config) -> Result<Self> {
        let beta = compute_beta(&flows, &topology, config.alt_path);
        let computed_loads = beta.loads();
        let loads = match (config.loads, placement.fixture_loads()) {
            (LoadSource::Computed, _) | (LoadSource::Auto, None) => computed_loads.clone(),
            (LoadSource::Fixture | LoadSource::Auto, Some(f)) => f.clone(),
            (LoadSource::Fixture, None) => {
                return Err(Error::InvalidArgument(
                    "fixture loads requested but the placement carries no flow counts".into(),
                ))
            }
        };
        let mut control_delays = BTreeMap::new();
        for c in placement.controller_ids() {
            let row = match config.control_delay {
                ControlDelay::Routed => topology
                    .shortest_paths_from(c, config.path_metric)?
                    .iter()
                    .map(|p| p.total_delay_ms)
                    .collect(),
                ControlDelay::Geodesic => {
                    let here = topology.coordinate(c)?;
                    topology
                        .nodes()
                        .iter()
                        .map(|n| distance_to_delay_ms(haversine_km(n.coordinate, here)))
                        .collect()
                }
            };
            control_delays.insert(c, row);
        }
        Ok(World {
            topology,
            flows,
            beta,
            placement,
            computed_loads,
            loads,
            config,
            control_delays,
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn flows(&self) -> &FlowSet {
        &self.flows
    }

    pub fn beta(&self) -> &BetaMatrix {
        &self.beta
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    /// Loads in effect (fixture or computed, per the config).
    pub fn loads(&self) -> &SwitchLoads {
        &self.loads
    }

    pub fn computed_loads(&self) -> &SwitchLoads {
        &self.computed_loads
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    /// D_ij in ms between `switch` and the host of `controller`.
    pub fn control_delay_ms(&self, switch: NodeId, controller: NodeId) -> Result<f64> {
        let row = self
            .control_delays
            .get(&controller)
            .ok_or(Error::UnknownController(controller))?;
        Ok(row[self.topology.index_of(switch)?])
    }

    /// Fixture minus computed load per switch, for switches where both exist
    /// and differ.
    pub fn load_deltas(&self) -> Vec<LoadDelta> {
        let Some(fixture) = self.placement.fixture_loads() else {
            return Vec::new();
        };
        fixture
            .0
            .iter()
            .filter_map(|(&s, &f)| {
                let c = self.computed_loads.0.get(&s).copied()?;
                (c != f).then_some(LoadDelta {
                    switch: s,
                    fixture: f,
                    computed: c,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LoadDelta {
    pub switch: NodeId,
    pub fixture: u32,
    pub computed: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn keyword_round_trip() {
        for s in ["routed", "geodesic"] {
            assert_eq!(s.parse::<ControlDelay>().unwrap().to_string(), s);
        }
        for s in ["edge_disjoint", "any_two_simple"] {
            assert_eq!(s.parse::<AltPathRule>().unwrap().to_string(), s);
        }
        assert!("fastest".parse::<PathMetric>().is_err());
    }

    #[test]
    fn att_world_uses_fixture_loads() {
        let t = fixtures::att_topology();
        let p = fixtures::att_placement(&t);
        let w = World::new(t, p, Config::default()).unwrap();
        assert_eq!(w.flows().len(), 600);
        assert_eq!(w.loads().total(), 2055);
        assert_ne!(w.computed_loads().total(), 2055);
        assert!(!w.load_deltas().is_empty());
        assert_eq!(w.control_delay_ms(NodeId(13), NodeId(13)).unwrap(), 0.0);
    }

    #[test]
    fn routed_delay_never_beats_geodesic() {
        let t = fixtures::att_topology();
        let p = fixtures::att_placement(&t);
        let routed = World::new(t.clone(), p.clone(), Config::default()).unwrap();
        let geo = World::new(
            t.clone(),
            p,
            Config {
                control_delay: ControlDelay::Geodesic,
                ..Config::default()
            },
        )
        .unwrap();
        for c in [2, 5, 6, 13, 20, 22].map(NodeId) {
            for s in t.node_ids() {
                let r = routed.control_delay_ms(s, c).unwrap();
                let g = geo.control_delay_ms(s, c).unwrap();
                assert!(g <= r + 1e-9, "{s} -> {c}: {g} > {r}");
            }
        }
    }

    #[test]
    fn toy_routed_delays() {
        let t = fixtures::toy_topology();
        let p = fixtures::toy_placement(&t);
        let w = World::with_flows(t, fixtures::toy_flows(), p, Config::default()).unwrap();
        let to_c3: Vec<f64> = (20..=24).map(|s| w.control_delay_ms(NodeId(s), NodeId(3)).unwrap()).collect();
        let to_c1: Vec<f64> = (20..=24).map(|s| w.control_delay_ms(NodeId(s), NodeId(1)).unwrap()).collect();
        assert_eq!(to_c3, vec![1.0, 6.0, 2.0, 6.0, 1.0]);
        assert_eq!(to_c1, vec![16.0, 12.0, 16.0, 14.0, 15.0]);
        assert!(matches!(
            World::with_flows(
                fixtures::toy_topology(),
                fixtures::toy_flows(),
                fixtures::toy_placement(&fixtures::toy_topology()),
                Config {
                    loads: LoadSource::Fixture,
                    ..Config::default()
                }
            ),
            Err(Error::InvalidArgument(_))
        ));
    }
}
