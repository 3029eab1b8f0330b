//! Geographic topology: nodes with coordinates, links with propagation delay,
//! deterministic shortest paths and alternative-path checks.
//!
//! Topology documents are TOML:
//!
//! ```toml
//! name = "example"          # optional
//!
//! [[nodes]]
//! id = 0
//! label = "NY54"            # optional
//! latitude = 40.71
//! longitude = -74.01
//!
//! [[links]]
//! a = 0
//! b = 1
//! distance_km = 250.0       # optional, overrides the great-circle distance
//! ```

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by [`haversine_km`].
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Signal propagation speed, 2e8 m/s expressed in km per millisecond.
pub const PROPAGATION_KM_PER_MS: f64 = 200.0;

/// Identifier of a topology node. Controllers are identified by the id of the
/// node they are co-located with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoCoordinate {
    latitude_deg: f64,
    longitude_deg: f64,
}

impl GeoCoordinate {
    /// Returns `None` when latitude is outside [-90, 90] or longitude outside
    /// [-180, 180] (NaN included).
    pub fn new(latitude_deg: f64, longitude_deg: f64) -> Option<Self> {
        let lat_ok = (-90.0..=90.0).contains(&latitude_deg);
        let lon_ok = (-180.0..=180.0).contains(&longitude_deg);
        (lat_ok && lon_ok).then_some(GeoCoordinate {
            latitude_deg,
            longitude_deg,
        })
    }

    pub fn latitude_deg(&self) -> f64 {
        self.latitude_deg
    }

    pub fn longitude_deg(&self) -> f64 {
        self.longitude_deg
    }
}

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_KM`].
pub fn haversine_km(a: GeoCoordinate, b: GeoCoordinate) -> f64 {
    let (lat1, lon1) = (a.latitude_deg.to_radians(), a.longitude_deg.to_radians());
    let (lat2, lon2) = (b.latitude_deg.to_radians(), b.longitude_deg.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    // rounding can push h marginally above 1 for antipodal points
    2.0 * EARTH_RADIUS_KM * h.clamp(0.0, 1.0).sqrt().asin()
}

pub fn distance_to_delay_ms(distance_km: f64) -> f64 {
    distance_km / PROPAGATION_KM_PER_MS
}

/// Metric minimized by [`Topology::shortest_path`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMetric {
    #[default]
    Delay,
    Hops,
}

/// What "at least two paths to the destination" means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AltPathRule {
    /// Two edge-disjoint paths (unit-capacity max-flow of at least 2).
    #[default]
    EdgeDisjoint,
    /// Any two distinct simple paths.
    AnyTwoSimple,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub label: Option<String>,
    pub coordinate: GeoCoordinate,
}

#[derive(Debug, Clone)]
pub struct Link {
    pub a: NodeId,
    pub b: NodeId,
    pub distance_km: f64,
    pub delay_ms: f64,
}

/// A simple path through the topology.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub node_ids: Vec<NodeId>,
    pub total_delay_ms: f64,
}

impl Path {
    pub fn source(&self) -> NodeId {
        self.node_ids[0]
    }

    pub fn destination(&self) -> NodeId {
        *self.node_ids.last().expect("paths are never empty")
    }

    pub fn hops(&self) -> usize {
        self.node_ids.len().saturating_sub(1)
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.node_ids.contains(&node)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyDoc {
    name: Option<String>,
    nodes: Vec<NodeDoc>,
    #[serde(default)]
    links: Vec<LinkDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: u32,
    label: Option<String>,
    latitude: f64,
    longitude: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkDoc {
    a: u32,
    b: u32,
    distance_km: Option<f64>,
}

/// Input record for [`Topology::new`].
#[derive(Debug, Clone)]
pub struct LinkSpec {
    pub a: NodeId,
    pub b: NodeId,
    pub distance_km: Option<f64>,
}

impl LinkSpec {
    pub fn new(a: u32, b: u32) -> Self {
        LinkSpec {
            a: NodeId(a),
            b: NodeId(b),
            distance_km: None,
        }
    }

    pub fn with_distance(a: u32, b: u32, km: f64) -> Self {
        LinkSpec {
            a: NodeId(a),
            b: NodeId(b),
            distance_km: Some(km),
        }
    }
}

/// Immutable, connected, undirected geographic graph.
#[derive(Debug, Clone)]
pub struct Topology {
    name: Option<String>,
    nodes: Vec<Node>,
    index: HashMap<NodeId, usize>,
    links: Vec<Link>,
    // per node: (neighbour index, link index), sorted by neighbour id
    adjacency: Vec<Vec<(usize, usize)>>,
    bridge: Vec<bool>,
}

pub fn load_topology(doc: &str) -> Result<Topology> {
    let doc: TopologyDoc = toml::from_str(doc).map_err(|e| Error::parse("topology document", e.to_string()))?;
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for n in doc.nodes {
        let coordinate =
            GeoCoordinate::new(n.latitude, n.longitude).ok_or(Error::CoordinateOutOfRange {
                node: NodeId(n.id),
                latitude: n.latitude,
                longitude: n.longitude,
            })?;
        nodes.push(Node {
            id: NodeId(n.id),
            label: n.label,
            coordinate,
        });
    }
    let links = doc
        .links
        .into_iter()
        .map(|l| LinkSpec {
            a: NodeId(l.a),
            b: NodeId(l.b),
            distance_km: l.distance_km,
        })
        .collect();
    Topology::new(doc.name, nodes, links)
}

pub fn load_topology_file(path: &FsPath) -> Result<Topology> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_topology(&text)
}

impl Topology {
    pub fn new(name: Option<String>, mut nodes: Vec<Node>, links: Vec<LinkSpec>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes(nodes.len()));
        }
        nodes.sort_by_key(|n| n.id);
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(Error::DuplicateNode(n.id));
            }
        }

        let mut seen = BTreeSet::new();
        let mut built = Vec::with_capacity(links.len());
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for spec in links {
            let ia = *index.get(&spec.a).ok_or(Error::UnknownNode(spec.a))?;
            let ib = *index.get(&spec.b).ok_or(Error::UnknownNode(spec.b))?;
            if ia == ib {
                return Err(Error::SelfLoop(spec.a));
            }
            let key = (spec.a.min(spec.b), spec.a.max(spec.b));
            if !seen.insert(key) {
                return Err(Error::DuplicateLink(key.0, key.1));
            }
            let distance_km = match spec.distance_km {
                Some(d) if d.is_finite() && d >= 0.0 => d,
                Some(d) => {
                    return Err(Error::parse(
                        "topology document",
                        format!("link {}-{} has invalid distance_km {d}", spec.a, spec.b),
                    ))
                }
                None => haversine_km(nodes[ia].coordinate, nodes[ib].coordinate),
            };
            let li = built.len();
            built.push(Link {
                a: spec.a,
                b: spec.b,
                distance_km,
                delay_ms: distance_to_delay_ms(distance_km),
            });
            adjacency[ia].push((ib, li));
            adjacency[ib].push((ia, li));
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(nb, _)| nodes[nb].id);
        }

        let mut topo = Topology {
            name,
            nodes,
            index,
            links: built,
            adjacency,
            bridge: Vec::new(),
        };
        topo.check_connected()?;
        topo.bridge = topo.find_bridges();
        Ok(topo)
    }

    fn check_connected(&self) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(Error::Disconnected(self.nodes[i].id, self.nodes[0].id)),
            None => Ok(()),
        }
    }

    fn find_bridges(&self) -> Vec<bool> {
        let n = self.nodes.len();
        let mut bridge = vec![false; self.links.len()];
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut timer = 0usize;
        // iterative DFS: (node, parent link, next adjacency position)
        let mut stack: Vec<(usize, usize, usize)> = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, usize::MAX, 0));
            while let Some(&mut (u, parent_link, ref mut pos)) = stack.last_mut() {
                if *pos < self.adjacency[u].len() {
                    let (v, li) = self.adjacency[u][*pos];
                    *pos += 1;
                    if li == parent_link {
                        continue;
                    }
                    if disc[v] == usize::MAX {
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        stack.push((v, li, 0));
                    } else {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if low[u] > disc[p] {
                            bridge[parent_link] = true;
                        }
                    }
                }
            }
        }
        bridge
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Links in document order, one per unordered pair.
    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn index_of(&self, id: NodeId) -> Result<usize> {
        self.index.get(&id).copied().ok_or(Error::UnknownNode(id))
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        Ok(&self.nodes[self.index_of(id)?])
    }

    pub fn coordinate(&self, id: NodeId) -> Result<GeoCoordinate> {
        Ok(self.node(id)?.coordinate)
    }

    pub fn degree(&self, id: NodeId) -> Result<usize> {
        Ok(self.adjacency[self.index_of(id)?].len())
    }

    pub fn neighbors(&self, id: NodeId) -> Result<impl Iterator<Item = NodeId> + '_> {
        let i = self.index_of(id)?;
        Ok(self.adjacency[i].iter().map(|&(v, _)| self.nodes[v].id))
    }

    pub fn link(&self, a: NodeId, b: NodeId) -> Option<&Link> {
        let ia = *self.index.get(&a)?;
        let ib = *self.index.get(&b)?;
        self.adjacency[ia]
            .iter()
            .find(|&&(v, _)| v == ib)
            .map(|&(_, li)| &self.links[li])
    }

    /// Sum of link delays along `nodes`. A single node yields 0 ms.
    pub fn propagation_delay_ms(&self, nodes: &[NodeId]) -> Result<f64> {
        if nodes.is_empty() {
            return Err(Error::InvalidPath("empty node list".into()));
        }
        for &n in nodes {
            self.index_of(n)?;
        }
        nodes.windows(2).try_fold(0.0, |acc, w| {
            self.link(w[0], w[1])
                .map(|l| acc + l.delay_ms)
                .ok_or(Error::MissingLink(w[0], w[1]))
        })
    }

    /// Validates that `nodes` is a simple path and computes its delay.
    pub fn path(&self, nodes: Vec<NodeId>) -> Result<Path> {
        let total_delay_ms = self.propagation_delay_ms(&nodes)?;
        let distinct: BTreeSet<_> = nodes.iter().collect();
        if distinct.len() != nodes.len() {
            return Err(Error::InvalidPath(format!("repeated node in {nodes:?}")));
        }
        Ok(Path {
            node_ids: nodes,
            total_delay_ms,
        })
    }

    /// Deterministic shortest paths from `src` to every node, indexed like
    /// [`Topology::nodes`]. Ties: equal primary metric prefers the other
    /// metric (fewer hops, or lower delay), then the lexicographically
    /// smallest node-id sequence.
    pub fn shortest_paths_from(&self, src: NodeId, metric: PathMetric) -> Result<Vec<Path>> {
        let s = self.index_of(src)?;
        let n = self.nodes.len();
        let mut best: Vec<Option<Label>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        let start = Label {
            delay: 0.0,
            nodes: vec![src],
            metric,
        };
        best[s] = Some(start.clone());
        heap.push(HeapItem(start, s));
        while let Some(HeapItem(label, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            if best[u].as_ref().is_some_and(|b| b.cmp(&label) != Ordering::Equal) {
                continue;
            }
            done[u] = true;
            for &(v, li) in &self.adjacency[u] {
                if done[v] {
                    continue;
                }
                let mut nodes = label.nodes.clone();
                nodes.push(self.nodes[v].id);
                let cand = Label {
                    delay: label.delay + self.links[li].delay_ms,
                    nodes,
                    metric,
                };
                let better = match &best[v] {
                    None => true,
                    Some(cur) => cand.cmp(cur) == Ordering::Less,
                };
                if better {
                    best[v] = Some(cand.clone());
                    heap.push(HeapItem(cand, v));
                }
            }
        }
        Ok(best
            .into_iter()
            .map(|l| {
                let l = l.expect("topology is connected");
                Path {
                    total_delay_ms: l.delay,
                    node_ids: l.nodes,
                }
            })
            .collect())
    }

    pub fn shortest_path(&self, src: NodeId, dst: NodeId, metric: PathMetric) -> Result<Path> {
        let d = self.index_of(dst)?;
        if src == dst {
            self.index_of(src)?;
            return Err(Error::InvalidArgument(format!(
                "shortest path needs distinct endpoints, got {src} twice"
            )));
        }
        Ok(self.shortest_paths_from(src, metric)?.swap_remove(d))
    }

    /// Whether `from` has at least two paths to `dst` under `rule`.
    pub fn has_alternative_path(&self, from: NodeId, dst: NodeId, rule: AltPathRule) -> Result<bool> {
        let f = self.index_of(from)?;
        let d = self.index_of(dst)?;
        if f == d {
            return Err(Error::InvalidArgument(format!(
                "alternative path check needs distinct endpoints, got {from} twice"
            )));
        }
        Ok(match rule {
            AltPathRule::EdgeDisjoint => self.edge_disjoint_paths(f, d, 2) >= 2,
            AltPathRule::AnyTwoSimple => self.has_two_simple_paths(f, d),
        })
    }

    /// Unit-capacity max-flow between node indices, stopping at `cap`.
    fn edge_disjoint_paths(&self, s: usize, t: usize, cap: usize) -> usize {
        // flow[li] is +1 when link li carries flow from links[li].a to .b
        let mut flow = vec![0i8; self.links.len()];
        let mut count = 0;
        while count < cap {
            let mut pred: Vec<Option<(usize, usize)>> = vec![None; self.nodes.len()];
            let mut seen = vec![false; self.nodes.len()];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &(v, li) in &self.adjacency[u] {
                    if seen[v] {
                        continue;
                    }
                    let forward = self.index[&self.links[li].a] == u;
                    let dir: i8 = if forward { 1 } else { -1 };
                    // residual capacity of u->v on an undirected unit edge
                    if flow[li] * dir < 1 {
                        seen[v] = true;
                        pred[v] = Some((u, li));
                        queue.push_back(v);
                    }
                }
            }
            if !seen[t] {
                break;
            }
            let mut v = t;
            while let Some((u, li)) = pred[v] {
                let forward = self.index[&self.links[li].a] == u;
                flow[li] += if forward { 1 } else { -1 };
                v = u;
            }
            count += 1;
        }
        count
    }

    // Two distinct simple paths exist iff some link on any s-t path is not a
    // bridge: every s-t path must use all bridges of every other s-t path.
    fn has_two_simple_paths(&self, s: usize, t: usize) -> bool {
        let mut pred: Vec<Option<(usize, usize)>> = vec![None; self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &(v, li) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    pred[v] = Some((u, li));
                    queue.push_back(v);
                }
            }
        }
        let mut v = t;
        while let Some((u, li)) = pred[v] {
            if !self.bridge[li] {
                return true;
            }
            v = u;
        }
        false
    }

    pub fn is_bridge(&self, a: NodeId, b: NodeId) -> Option<bool> {
        let ia = *self.index.get(&a)?;
        let ib = *self.index.get(&b)?;
        self.adjacency[ia]
            .iter()
            .find(|&&(v, _)| v == ib)
            .map(|&(_, li)| self.bridge[li])
    }
}

/// Relative tolerance under which two path delays count as equal.
const DELAY_TIE_EPS: f64 = 1e-9;

fn cmp_delay(a: f64, b: f64) -> Ordering {
    let scale = 1f64.max(a.abs()).max(b.abs());
    if (a - b).abs() <= DELAY_TIE_EPS * scale {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

#[derive(Debug, Clone)]
struct Label {
    delay: f64,
    nodes: Vec<NodeId>,
    metric: PathMetric,
}

impl Label {
    fn cmp(&self, other: &Label) -> Ordering {
        let hops = self.nodes.len().cmp(&other.nodes.len());
        let delay = cmp_delay(self.delay, other.delay);
        let primary = match self.metric {
            PathMetric::Delay => delay.then(hops),
            PathMetric::Hops => hops.then(delay),
        };
        primary.then_with(|| self.nodes.cmp(&other.nodes))
    }
}

struct HeapItem(Label, usize);

impl PartialEq for HeapItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    // BinaryHeap is a max-heap; smallest label first
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.cmp(&self.0)
    }
}
