//! Controller placement, domain membership, residual abilities and failure
//! scenarios.
//!
//! Placement documents are TOML:
//!
//! ```toml
//! capacity = 500                 # default for controllers without their own
//!
//! [[controllers]]
//! id = 2                         # node hosting the controller
//! switches = [2, 3, 9, 16]       # its domain
//! flow_counts = [127, 71, 121, 57]  # optional per-switch loads, same order
//! capacity = 400                 # optional override
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::SwitchLoads;
use crate::geo::{NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Controller {
    pub id: NodeId,
    pub capacity: u32,
    pub domain: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub struct Placement {
    controllers: Vec<Controller>,
    domain_of: BTreeMap<NodeId, NodeId>,
    fixture_loads: Option<SwitchLoads>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementDoc {
    capacity: Option<u32>,
    controllers: Vec<ControllerDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControllerDoc {
    id: u32,
    capacity: Option<u32>,
    switches: Vec<u32>,
    flow_counts: Option<Vec<u32>>,
}

pub fn load_placement(doc: &str, t: &Topology) -> Result<Placement> {
    let doc: PlacementDoc =
        toml::from_str(doc).map_err(|e| Error::parse("placement document", e.to_string()))?;
    let with_counts = doc.controllers.iter().filter(|c| c.flow_counts.is_some()).count();
    if with_counts != 0 && with_counts != doc.controllers.len() {
        return Err(Error::parse(
            "placement document",
            "flow_counts must be given for every controller or for none",
        ));
    }
    let mut counts = BTreeMap::new();
    let mut controllers = Vec::with_capacity(doc.controllers.len());
    for c in doc.controllers {
        let capacity = c.capacity.or(doc.capacity).ok_or_else(|| {
            Error::parse("placement document", format!("controller {} has no capacity", c.id))
        })?;
        if let Some(fc) = &c.flow_counts {
            if fc.len() != c.switches.len() {
                return Err(Error::parse(
                    "placement document",
                    format!("controller {}: {} flow counts for {} switches", c.id, fc.len(), c.switches.len()),
                ));
            }
            counts.extend(c.switches.iter().zip(fc).map(|(&s, &g)| (NodeId(s), g)));
        }
        controllers.push(Controller {
            id: NodeId(c.id),
            capacity,
            domain: c.switches.into_iter().map(NodeId).collect(),
        });
    }
    let fixture_loads = (with_counts > 0).then_some(SwitchLoads(counts));
    Placement::new(t, controllers, fixture_loads)
}

pub fn load_placement_file(path: &FsPath, t: &Topology) -> Result<Placement> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_placement(&text, t)
}

impl Placement {
    pub fn new(t: &Topology, mut controllers: Vec<Controller>, fixture_loads: Option<SwitchLoads>) -> Result<Self> {
        if controllers.is_empty() {
            return Err(Error::parse("placement document", "no controllers"));
        }
        controllers.sort_by_key(|c| c.id);
        let mut domain_of = BTreeMap::new();
        for c in controllers.iter_mut() {
            if !t.contains(c.id) {
                return Err(Error::UnknownNode(c.id));
            }
            c.domain.sort();
            for &s in &c.domain {
                if !t.contains(s) {
                    return Err(Error::UnknownNode(s));
                }
                if domain_of.insert(s, c.id).is_some() {
                    return Err(Error::DuplicateAssignment(s));
                }
            }
        }
        for w in controllers.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::parse("placement document", format!("duplicate controller {}", w[0].id)));
            }
        }
        if let Some(s) = t.node_ids().find(|s| !domain_of.contains_key(s)) {
            return Err(Error::UnassignedSwitch(s));
        }
        Ok(Placement {
            controllers,
            domain_of,
            fixture_loads,
        })
    }

    /// Controllers sorted by id.
    pub fn controllers(&self) -> &[Controller] {
        &self.controllers
    }

    pub fn controller_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.controllers.iter().map(|c| c.id)
    }

    pub fn controller(&self, id: NodeId) -> Result<&Controller> {
        self.controllers
            .binary_search_by_key(&id, |c| c.id)
            .map(|i| &self.controllers[i])
            .map_err(|_| Error::UnknownController(id))
    }

    pub fn domain_of(&self, switch: NodeId) -> Result<NodeId> {
        self.domain_of.get(&switch).copied().ok_or(Error::UnknownNode(switch))
    }

    /// Per-switch flow counts supplied by the placement document, if any.
    pub fn fixture_loads(&self) -> Option<&SwitchLoads> {
        self.fixture_loads.as_ref()
    }
}

/// A non-empty strict subset of the controllers that has failed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FailureScenario {
    failed: BTreeSet<NodeId>,
}

impl FailureScenario {
    pub fn new(p: &Placement, failed: impl IntoIterator<Item = NodeId>) -> Result<Self> {
        let failed: BTreeSet<NodeId> = failed.into_iter().collect();
        if failed.is_empty() {
            return Err(Error::InvalidScenario("no failed controller".into()));
        }
        for &c in &failed {
            p.controller(c)?;
        }
        if failed.len() >= p.controllers().len() {
            return Err(Error::InvalidScenario("no active controller would remain".into()));
        }
        Ok(FailureScenario { failed })
    }

    pub fn failed(&self) -> &BTreeSet<NodeId> {
        &self.failed
    }

    pub fn is_failed(&self, controller: NodeId) -> bool {
        self.failed.contains(&controller)
    }

    /// Active controllers, ascending id.
    pub fn active(&self, p: &Placement) -> Vec<NodeId> {
        p.controller_ids().filter(|c| !self.failed.contains(c)).collect()
    }

    /// Switches of the failed domains, ascending id.
    pub fn offline_switches(&self, p: &Placement) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = p
            .controllers()
            .iter()
            .filter(|c| self.failed.contains(&c.id))
            .flat_map(|c| c.domain.iter().copied())
            .collect();
        out.sort();
        out
    }
}

impl fmt::Display for FailureScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.failed.iter().map(|c| format!("C{c}")).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Remaining ability A_j^rest of each active controller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualCapacities(pub BTreeMap<NodeId, u32>);

impl ResidualCapacities {
    pub fn get(&self, controller: NodeId) -> Option<u32> {
        self.0.get(&controller).copied()
    }
}

/// Own-domain load of a controller.
pub fn domain_load(c: &Controller, loads: &SwitchLoads) -> Result<u64> {
    c.domain
        .iter()
        .map(|&s| loads.get(s).map(u64::from))
        .sum()
}

pub fn residual_capacity(p: &Placement, loads: &SwitchLoads, s: &FailureScenario) -> Result<ResidualCapacities> {
    let mut out = BTreeMap::new();
    for c in p.controllers().iter().filter(|c| !s.is_failed(c.id)) {
        let load = domain_load(c, loads)?;
        if load > c.capacity as u64 {
            return Err(Error::DomainOverloaded {
                controller: c.id,
                load,
                capacity: c.capacity,
            });
        }
        out.insert(c.id, c.capacity - load as u32);
    }
    Ok(ResidualCapacities(out))
}

/// All `k`-subsets of the controllers in lexicographic order of sorted ids.
pub fn enumerate_failure_scenarios(p: &Placement, k: usize) -> Result<Vec<FailureScenario>> {
    let ids: Vec<NodeId> = p.controller_ids().collect();
    if k == 0 || k >= ids.len() {
        return Err(Error::InvalidArgument(format!(
            "failure cardinality {k} outside 1..{}",
            ids.len()
        )));
    }
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        out.push(FailureScenario {
            failed: pick.iter().map(|&i| ids[i]).collect(),
        });
        // advance to the next combination
        let mut i = k;
        while i > 0 && pick[i - 1] == ids.len() - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        pick[i - 1] += 1;
        for j in i..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn table2_fixture() {
        let t = fixtures::att_topology();
        let p = fixtures::att_placement(&t);
        let ids: Vec<u32> = p.controller_ids().map(|c| c.0).collect();
        assert_eq!(ids, vec![2, 5, 6, 13, 20, 22]);
        assert_eq!(p.domain_of(NodeId(9)).unwrap(), NodeId(2));
        assert!(p.controllers().iter().all(|c| c.capacity == 500));
        assert_eq!(p.fixture_loads().unwrap().total(), 2055);
    }

    #[test]
    fn missing_switch_reported() {
        let t = fixtures::att_topology();
        let doc = fixtures::ATT_TABLE2_TOML.replace("[0, 1, 6, 7]", "[0, 1, 6]").replace(
            "flow_counts = [81, 49, 77, 93]",
            "flow_counts = [81, 49, 77]",
        );
        let err = load_placement(&doc, &t).unwrap_err();
        assert_eq!(err.to_string(), "switch 7 unassigned");
    }

    #[test]
    fn bad_placements() {
        let t = fixtures::att_topology();
        let dup = "capacity = 10\n[[controllers]]\nid = 0\nswitches = [0, 1]\n[[controllers]]\nid = 1\nswitches = [1]\n";
        assert!(matches!(load_placement(dup, &t), Err(Error::DuplicateAssignment(NodeId(1)))));
        let unknown = "capacity = 10\n[[controllers]]\nid = 99\nswitches = [0]\n";
        assert!(matches!(load_placement(unknown, &t), Err(Error::UnknownNode(NodeId(99)))));
        let extra = "capacity = 10\nowner = 3\n[[controllers]]\nid = 0\nswitches = [0]\n";
        assert!(matches!(load_placement(extra, &t), Err(Error::Parse { .. })));
    }

    #[test]
    fn single_controller_placement() {
        let t = fixtures::att_topology();
        let all: Vec<String> = (0..25).map(|i| i.to_string()).collect();
        let doc = format!("[[controllers]]\nid = 13\ncapacity = 5000\nswitches = [{}]\n", all.join(", "));
        let p = load_placement(&doc, &t).unwrap();
        assert_eq!(p.controllers().len(), 1);
        assert!(enumerate_failure_scenarios(&p, 1).is_err());
    }

    #[test]
    fn table2_residuals() {
        let t = fixtures::att_topology();
        let p = fixtures::att_placement(&t);
        let loads = p.fixture_loads().unwrap();
        let s = FailureScenario::new(&p, [NodeId(20)]).unwrap();
        let r = residual_capacity(&p, loads, &s).unwrap();
        assert_eq!(r.get(NodeId(2)), Some(124));
        assert_eq!(r.get(NodeId(5)), Some(184));
        assert_eq!(r.get(NodeId(6)), Some(200));
        assert_eq!(r.get(NodeId(13)), Some(13));
        assert_eq!(r.get(NodeId(22)), Some(34));
        assert_eq!(r.get(NodeId(20)), None);
        // surviving-domain accounting
        let used: u64 = r.0.iter().map(|(c, a)| (p.controller(*c).unwrap().capacity - a) as u64).sum();
        let own: u64 = p
            .controllers()
            .iter()
            .filter(|c| c.id != NodeId(20))
            .map(|c| domain_load(c, loads).unwrap())
            .sum();
        assert_eq!(used, own);
    }

    #[test]
    fn empty_domain_keeps_full_capacity() {
        let t = fixtures::toy_topology();
        let p = fixtures::toy_placement(&t);
        let loads = SwitchLoads(t.node_ids().map(|s| (s, 0)).collect());
        let s = FailureScenario::new(&p, [NodeId(22)]).unwrap();
        let r = residual_capacity(&p, &loads, &s).unwrap();
        assert_eq!(r.get(NodeId(1)), Some(10));
        assert_eq!(r.get(NodeId(3)), Some(5));
    }

    #[test]
    fn overloaded_domain_is_an_error() {
        let t = fixtures::toy_topology();
        let p = fixtures::toy_placement(&t);
        let mut loads = SwitchLoads(t.node_ids().map(|s| (s, 0)).collect());
        loads.0.insert(NodeId(3), 6);
        let s = FailureScenario::new(&p, [NodeId(22)]).unwrap();
        assert!(matches!(
            residual_capacity(&p, &loads, &s),
            Err(Error::DomainOverloaded { .. })
        ));
    }

    #[test]
    fn scenario_counts() {
        let t = fixtures::att_topology();
        let p = fixtures::att_placement(&t);
        assert_eq!(enumerate_failure_scenarios(&p, 1).unwrap().len(), 6);
        let two = enumerate_failure_scenarios(&p, 2).unwrap();
        assert_eq!(two.len(), 15);
        assert_eq!(two[0].to_string(), "C2+C5");
        assert_eq!(two[14].to_string(), "C20+C22");
        assert!(enumerate_failure_scenarios(&p, 6).is_err());
        assert!(enumerate_failure_scenarios(&p, 0).is_err());
    }

    #[test]
    fn scenario_counts_are_binomial() {
        let t = fixtures::att_topology();
        for m in 1..=8u32 {
            let controllers = (0..m)
                .map(|c| Controller {
                    id: NodeId(c),
                    capacity: 1,
                    domain: if c == 0 { (0..25).map(NodeId).filter(|s| s.0 >= m || s.0 == 0).collect() } else { vec![NodeId(c)] },
                })
                .collect();
            let p = Placement::new(&t, controllers, None).unwrap();
            for k in 1..m as usize {
                let all = enumerate_failure_scenarios(&p, k).unwrap();
                assert_eq!(all.len() as u64, binomial(m as u64, k as u64));
                let distinct: BTreeSet<_> = all.iter().collect();
                assert_eq!(distinct.len(), all.len());
                assert!(all.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn invalid_scenarios() {
        let t = fixtures::att_topology();
        let p = fixtures::att_placement(&t);
        assert!(FailureScenario::new(&p, []).is_err());
        assert!(FailureScenario::new(&p, [NodeId(3)]).is_err());
        let all: Vec<NodeId> = p.controller_ids().collect();
        assert!(FailureScenario::new(&p, all).is_err());
    }
}
