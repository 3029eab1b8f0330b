//! Flow population, per-switch programmability indicators and flow loads.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{AltPathRule, NodeId, Path, PathMetric, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Which node pairs carry a flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowPairs {
    /// One flow per ordered pair, n(n-1) flows.
    #[default]
    Ordered,
    /// One flow per unordered pair, from the smaller id to the larger.
    Unordered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: FlowId,
    pub src: NodeId,
    pub dst: NodeId,
    pub path: Path,
}

#[derive(Debug, Clone, Default)]
pub struct FlowSet {
    flows: Vec<Flow>,
}

impl FlowSet {
    /// Builds a flow set after checking ids are unique and every path is a
    /// simple path of `t` from `src` to `dst`.
    pub fn new(t: &Topology, flows: Vec<Flow>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for f in &flows {
            if !ids.insert(f.id) {
                return Err(Error::parse("flow set", format!("duplicate flow id {}", f.id)));
            }
            if f.src == f.dst {
                return Err(Error::InvalidPath(format!("flow {} has src = dst = {}", f.id, f.src)));
            }
            if f.path.source() != f.src || f.path.destination() != f.dst {
                return Err(Error::InvalidPath(format!(
                    "flow {} path does not run from {} to {}",
                    f.id, f.src, f.dst
                )));
            }
            let checked = t.path(f.path.node_ids.clone())?;
            if (checked.total_delay_ms - f.path.total_delay_ms).abs() > 1e-9 * checked.total_delay_ms.max(1.0) {
                return Err(Error::InvalidPath(format!("flow {} delay disagrees with topology", f.id)));
            }
        }
        Ok(FlowSet { flows })
    }

    pub fn flows(&self) -> &[Flow] {
        &self.flows
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    /// Drops the flow at `index`; used to check load accounting.
    pub fn without(&self, index: usize) -> FlowSet {
        let mut flows = self.flows.clone();
        flows.remove(index);
        FlowSet { flows }
    }

    /// Writes `flow_id,src,dst,path` rows; the path is space-separated ids.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["flow_id", "src", "dst", "path"]).map_err(csv_err)?;
        for f in &self.flows {
            let path = f
                .path
                .node_ids
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            w.write_record([f.id.to_string(), f.src.to_string(), f.dst.to_string(), path])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::parse("flow csv", e.to_string()))
    }

    pub fn read_csv<R: Read>(t: &Topology, input: R) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Row {
            flow_id: u32,
            src: u32,
            dst: u32,
            path: String,
        }
        let mut r = csv::Reader::from_reader(input);
        let mut flows = Vec::new();
        for row in r.deserialize::<Row>() {
            let row = row.map_err(csv_err)?;
            let nodes = row
                .path
                .split_whitespace()
                .map(|s| s.parse().map(NodeId))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::parse("flow csv", format!("flow {}: {e}", row.flow_id)))?;
            flows.push(Flow {
                id: FlowId(row.flow_id),
                src: NodeId(row.src),
                dst: NodeId(row.dst),
                path: t.path(nodes)?,
            });
        }
        FlowSet::new(t, flows)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::parse("flow csv", e.to_string())
}

/// One flow per node pair, each on its shortest path. Flow ids start at 1 in
/// (src, dst) lexicographic order.
pub fn generate_flows(t: &Topology, pairs: FlowPairs, metric: PathMetric) -> FlowSet {
    let ids: Vec<NodeId> = t.node_ids().collect();
    let mut flows = Vec::new();
    for &src in &ids {
        let tree = t
            .shortest_paths_from(src, metric)
            .expect("node ids come from the topology");
        for (di, &dst) in ids.iter().enumerate() {
            let keep = match pairs {
                FlowPairs::Ordered => src != dst,
                FlowPairs::Unordered => src < dst,
            };
            if keep {
                flows.push(Flow {
                    id: FlowId(flows.len() as u32 + 1),
                    src,
                    dst,
                    path: tree[di].clone(),
                });
            }
        }
    }
    FlowSet { flows }
}

/// Programmability indicators: flow `l` is programmable at switch `i` when
/// it traverses `i`, `i` is not its destination, and `i` has an alternative
/// path to the destination.
#[derive(Debug, Clone)]
pub struct BetaMatrix {
    switches: Vec<NodeId>,
    // per switch (topology order): sorted flow indices into the FlowSet
    rows: Vec<Vec<usize>>,
    // per flow: switches with beta = 1, in path order
    columns: Vec<Vec<NodeId>>,
    position: HashMap<NodeId, usize>,
}

pub fn compute_beta(flows: &FlowSet, t: &Topology, rule: AltPathRule) -> BetaMatrix {
    let switches: Vec<NodeId> = t.node_ids().collect();
    let position: HashMap<NodeId, usize> = switches.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut rows = vec![Vec::new(); switches.len()];
    let mut columns = Vec::with_capacity(flows.len());
    let mut alt_cache: HashMap<(NodeId, NodeId), bool> = HashMap::new();
    for (l, flow) in flows.flows().iter().enumerate() {
        let mut col = Vec::new();
        for &node in &flow.path.node_ids[..flow.path.node_ids.len() - 1] {
            let alt = *alt_cache.entry((node, flow.dst)).or_insert_with(|| {
                t.has_alternative_path(node, flow.dst, rule)
                    .expect("flow paths are validated against the topology")
            });
            if alt {
                rows[position[&node]].push(l);
                col.push(node);
            }
        }
        columns.push(col);
    }
    BetaMatrix {
        switches,
        rows,
        columns,
        position,
    }
}

impl BetaMatrix {
    pub fn switches(&self) -> &[NodeId] {
        &self.switches
    }

    pub fn flow_count(&self) -> usize {
        self.columns.len()
    }

    pub fn get(&self, switch: NodeId, flow_index: usize) -> bool {
        self.position
            .get(&switch)
            .is_some_and(|&i| self.rows[i].binary_search(&flow_index).is_ok())
    }

    /// Indices (into the flow set) of flows programmable at `switch`.
    pub fn flows_at(&self, switch: NodeId) -> Result<&[usize]> {
        let i = self.position.get(&switch).ok_or(Error::UnknownNode(switch))?;
        Ok(&self.rows[*i])
    }

    /// Switches at which the flow at `flow_index` is programmable.
    pub fn switches_for(&self, flow_index: usize) -> &[NodeId] {
        &self.columns[flow_index]
    }

    pub fn total_load(&self) -> u64 {
        self.rows.iter().map(|r| r.len() as u64).sum()
    }

    pub fn loads(&self) -> SwitchLoads {
        SwitchLoads(
            self.switches
                .iter()
                .zip(&self.rows)
                .map(|(&s, r)| (s, r.len() as u32))
                .collect(),
        )
    }

    /// Writes `(switch_id, flow_id)` pairs with beta = 1.
    pub fn write_csv<W: Write>(&self, flows: &FlowSet, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["switch_id", "flow_id"]).map_err(csv_err)?;
        for (s, row) in self.switches.iter().zip(&self.rows) {
            for &l in row {
                w.write_record([s.to_string(), flows.flows()[l].id.to_string()])
                    .map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::parse("beta csv", e.to_string()))
    }
}

/// g_i: number of programmable flows at switch i.
pub fn switch_flow_load(b: &BetaMatrix, switch: NodeId) -> Result<u32> {
    Ok(b.flows_at(switch)?.len() as u32)
}

/// Per-switch flow loads, either computed from beta or supplied by a fixture.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SwitchLoads(pub BTreeMap<NodeId, u32>);

impl SwitchLoads {
    pub fn get(&self, switch: NodeId) -> Result<u32> {
        self.0.get(&switch).copied().ok_or(Error::UnknownNode(switch))
    }

    pub fn total(&self) -> u64 {
        self.0.values().map(|&g| g as u64).sum()
    }
}
