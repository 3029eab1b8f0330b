//! Switch configuration and mapping instances: problem data, objective,
//! constraint validation and the programmable-flow set.
//!
//! Indexing follows the model: switch `i` in `0..n()` ranges over the offline
//! switches, controller `j` in `0..m()` over the active controllers, and flow
//! `l` in `0..l()` over the flows that are programmable at some offline
//! switch.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domains::{residual_capacity, FailureScenario};
use crate::error::{Error, Result};
use crate::flows::FlowId;
use crate::geo::NodeId;
use crate::world::World;

/// Relative tolerance for `w_ij = g_i * D_ij`.
const W_REL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct OscmInstance {
    offline_switches: Vec<NodeId>,
    active_controllers: Vec<NodeId>,
    flow_ids: Vec<FlowId>,
    g: Vec<u32>,
    delay_ms: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    beta: Vec<Vec<u32>>,
    a_rest: Vec<u32>,
    q_required: u32,
}

/// Serialized form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub offline_switches: Vec<NodeId>,
    pub active_controllers: Vec<NodeId>,
    pub flow_ids: Vec<FlowId>,
    pub g: Vec<u32>,
    pub delay_ms: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
    /// Per offline switch: indices into `flow_ids` with beta = 1.
    pub beta: Vec<Vec<u32>>,
    pub a_rest: Vec<u32>,
    pub q_required: u32,
}

impl TryFrom<InstanceDoc> for OscmInstance {
    type Error = Error;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        let inst = OscmInstance::new(
            doc.offline_switches,
            doc.active_controllers,
            doc.flow_ids,
            doc.g,
            doc.delay_ms,
            doc.beta,
            doc.a_rest,
            doc.q_required,
        )?;
        if doc.w.len() != inst.n() || doc.w.iter().any(|r| r.len() != inst.m()) {
            return Err(Error::InvalidInstance("w has the wrong shape".into()));
        }
        for (i, row) in doc.w.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                let expect = inst.w[i][j];
                if (w - expect).abs() > W_REL_EPS * expect.abs().max(1.0) {
                    return Err(Error::InvalidInstance(format!(
                        "w[{i}][{j}] = {w} but g * D = {expect}"
                    )));
                }
            }
        }
        Ok(inst)
    }
}

impl From<OscmInstance> for InstanceDoc {
    fn from(i: OscmInstance) -> Self {
        InstanceDoc {
            offline_switches: i.offline_switches,
            active_controllers: i.active_controllers,
            flow_ids: i.flow_ids,
            g: i.g,
            delay_ms: i.delay_ms,
            w: i.w,
            beta: i.beta,
            a_rest: i.a_rest,
            q_required: i.q_required,
        }
    }
}

impl OscmInstance {
    /// Checks shapes and invariants and derives `w = g * D`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        offline_switches: Vec<NodeId>,
        active_controllers: Vec<NodeId>,
        flow_ids: Vec<FlowId>,
        g: Vec<u32>,
        delay_ms: Vec<Vec<f64>>,
        mut beta: Vec<Vec<u32>>,
        a_rest: Vec<u32>,
        q_required: u32,
    ) -> Result<Self> {
        let (n, m, l) = (offline_switches.len(), active_controllers.len(), flow_ids.len());
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if g.len() != n || beta.len() != n || delay_ms.len() != n {
            return bad(format!("per-switch vectors must have length {n}"));
        }
        if a_rest.len() != m || delay_ms.iter().any(|r| r.len() != m) {
            return bad(format!("per-controller vectors must have length {m}"));
        }
        if m == 0 {
            return bad("no active controller".into());
        }
        if q_required as usize > l {
            return bad(format!("quota {q_required} exceeds flow count {l}"));
        }
        if delay_ms.iter().flatten().any(|d| !d.is_finite() || *d < 0.0) {
            return bad("delays must be finite and nonnegative".into());
        }
        let mut covered = vec![false; l];
        for (i, row) in beta.iter_mut().enumerate() {
            row.sort_unstable();
            if row.windows(2).any(|w| w[0] == w[1]) {
                return bad(format!("switch {i} lists a flow twice"));
            }
            for &f in row.iter() {
                match covered.get_mut(f as usize) {
                    Some(c) => *c = true,
                    None => return bad(format!("switch {i} references flow index {f} >= {l}")),
                }
            }
        }
        if let Some(f) = covered.iter().position(|c| !c) {
            return bad(format!("flow {} is not programmable at any offline switch", flow_ids[f]));
        }
        let w = g
            .iter()
            .zip(&delay_ms)
            .map(|(&gi, row)| row.iter().map(|&d| gi as f64 * d).collect())
            .collect();
        Ok(OscmInstance {
            offline_switches,
            active_controllers,
            flow_ids,
            g,
            delay_ms,
            w,
            beta,
            a_rest,
            q_required,
        })
    }

    pub fn n(&self) -> usize {
        self.offline_switches.len()
    }

    pub fn m(&self) -> usize {
        self.active_controllers.len()
    }

    pub fn l(&self) -> usize {
        self.flow_ids.len()
    }

    pub fn q(&self) -> u32 {
        self.q_required
    }

    pub fn offline_switches(&self) -> &[NodeId] {
        &self.offline_switches
    }

    pub fn active_controllers(&self) -> &[NodeId] {
        &self.active_controllers
    }

    pub fn flow_ids(&self) -> &[FlowId] {
        &self.flow_ids
    }

    pub fn g(&self, i: usize) -> u32 {
        self.g[i]
    }

    pub fn loads(&self) -> &[u32] {
        &self.g
    }

    pub fn delay(&self, i: usize, j: usize) -> f64 {
        self.delay_ms[i][j]
    }

    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.w[i][j]
    }

    pub fn a_rest(&self, j: usize) -> u32 {
        self.a_rest[j]
    }

    pub fn residuals(&self) -> &[u32] {
        &self.a_rest
    }

    /// Local flow indices programmable at switch `i`, ascending.
    pub fn flows_at(&self, i: usize) -> &[u32] {
        &self.beta[i]
    }

    pub fn beta(&self, i: usize, l: usize) -> bool {
        self.beta[i].binary_search(&(l as u32)).is_ok()
    }

    /// The same instance with a different quota.
    pub fn with_quota(&self, q_required: u32) -> Result<Self> {
        if q_required as usize > self.l() {
            return Err(Error::InvalidInstance(format!(
                "quota {q_required} exceeds flow count {}",
                self.l()
            )));
        }
        Ok(OscmInstance {
            q_required,
            ..self.clone()
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instances always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("instance json", e.to_string()))
    }
}

/// Required count from a fraction of `l` flows, rounded up.
pub fn quota_from_fraction(q_fraction: f64, l: usize) -> Result<u32> {
    if !(0.0..=1.0).contains(&q_fraction) {
        return Err(Error::InvalidArgument(format!("q_fraction {q_fraction} outside [0, 1]")));
    }
    let exact = q_fraction * l as f64;
    // ceil(0.9 * 10) must stay 9 despite 0.9 * 10 = 9.000000000000002
    let rounded = exact.round();
    let q = if (exact - rounded).abs() <= 1e-9 * exact.max(1.0) {
        rounded
    } else {
        exact.ceil()
    };
    Ok((q as usize).min(l) as u32)
}

/// Instance for a failure scenario: the failed domains' switches, the
/// surviving controllers with their residual ability, and the flows
/// programmable at some offline switch.
pub fn build_instance(world: &World, s: &FailureScenario, q_fraction: f64) -> Result<OscmInstance> {
    let p = world.placement();
    let offline = s.offline_switches(p);
    let active = s.active(p);
    let residual = residual_capacity(p, world.loads(), s)?;

    let mut global: BTreeSet<usize> = BTreeSet::new();
    let mut rows_global = Vec::with_capacity(offline.len());
    for &sw in &offline {
        let row = world.beta().flows_at(sw)?;
        global.extend(row.iter().copied());
        rows_global.push(row);
    }
    let global: Vec<usize> = global.into_iter().collect();
    let local = |l: usize| global.binary_search(&l).expect("collected above") as u32;
    let beta = rows_global.iter().map(|r| r.iter().map(|&l| local(l)).collect()).collect();
    let flow_ids = global.iter().map(|&l| world.flows().flows()[l].id).collect();

    let g = offline.iter().map(|&sw| world.loads().get(sw)).collect::<Result<Vec<_>>>()?;
    let mut delay = Vec::with_capacity(offline.len());
    for &sw in &offline {
        let row = active
            .iter()
            .map(|&c| world.control_delay_ms(sw, c))
            .collect::<Result<Vec<_>>>()?;
        delay.push(row);
    }
    let a_rest = active.iter().map(|c| residual.0[c]).collect();
    let q = quota_from_fraction(q_fraction, global.len())?;
    OscmInstance::new(offline, active, flow_ids, g, delay, beta, a_rest, q)
}

/// Decision variables of a candidate solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Solution {
    /// 1 = SDN mode, 0 = legacy, per offline switch.
    pub x: Vec<bool>,
    /// Switch-to-controller mapping indicators, n x m.
    pub z: Vec<Vec<bool>>,
    /// Programmability indicator per flow.
    pub y: Vec<bool>,
    /// Communication overhead in flow-ms.
    pub objective: f64,
}

impl Solution {
    /// Builds a consistent solution from a per-switch controller choice
    /// (`None` = legacy), with `y` maximal.
    pub fn from_assignment(inst: &OscmInstance, assignment: &[Option<usize>]) -> Self {
        assert_eq!(assignment.len(), inst.n(), "one entry per offline switch");
        let x: Vec<bool> = assignment.iter().map(Option::is_some).collect();
        let z = assignment
            .iter()
            .map(|a| (0..inst.m()).map(|j| *a == Some(j)).collect())
            .collect();
        let programmable = programmable_flows(inst, &x);
        let mut y = vec![false; inst.l()];
        for l in programmable {
            y[l] = true;
        }
        let objective = assignment
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|j| inst.w(i, j)))
            .sum();
        Solution { x, z, y, objective }
    }

    pub fn all_legacy(inst: &OscmInstance) -> Self {
        Solution::from_assignment(inst, &vec![None; inst.n()])
    }

    /// Controller index per switch, or `None` when some switch is mapped to
    /// several controllers.
    pub fn assignment(&self) -> Option<Vec<Option<usize>>> {
        self.z
            .iter()
            .map(|row| {
                let mut it = row.iter().enumerate().filter(|(_, &v)| v).map(|(j, _)| j);
                let first = it.next();
                match it.next() {
                    Some(_) => None,
                    None => Some(first),
                }
            })
            .collect()
    }

    pub fn recovered_switches(&self) -> usize {
        self.x.iter().filter(|&&x| x).count()
    }

    pub fn programmable_count(&self) -> usize {
        self.y.iter().filter(|&&y| y).count()
    }

    /// Load added to each controller: sum of g_i over mapped switches.
    pub fn controller_loads(&self, inst: &OscmInstance) -> Vec<u64> {
        let mut loads = vec![0u64; inst.m()];
        for (i, row) in self.z.iter().enumerate() {
            for (j, &zij) in row.iter().enumerate() {
                if zij {
                    loads[j] += inst.g(i) as u64;
                }
            }
        }
        loads
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solutions always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("solution json", e.to_string()))
    }
}

fn check_shape(inst: &OscmInstance, sol: &Solution) -> Result<()> {
    if sol.x.len() != inst.n() {
        return Err(Error::DimensionMismatch(format!("x has {} entries, expected {}", sol.x.len(), inst.n())));
    }
    if sol.z.len() != inst.n() || sol.z.iter().any(|r| r.len() != inst.m()) {
        return Err(Error::DimensionMismatch(format!("z must be {} x {}", inst.n(), inst.m())));
    }
    if sol.y.len() != inst.l() {
        return Err(Error::DimensionMismatch(format!("y has {} entries, expected {}", sol.y.len(), inst.l())));
    }
    Ok(())
}

/// Total overhead: sum of w_ij over z_ij = 1.
pub fn objective(inst: &OscmInstance, sol: &Solution) -> Result<f64> {
    check_shape(inst, sol)?;
    let mut total = 0.0;
    for j in 0..inst.m() {
        for i in 0..inst.n() {
            if sol.z[i][j] {
                total += inst.w(i, j);
            }
        }
    }
    Ok(total)
}

/// Flows with at least one SDN-mode switch where they are programmable,
/// ascending local index. Each flow counts once.
pub fn programmable_flows(inst: &OscmInstance, x: &[bool]) -> BTreeSet<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .flat_map(|(i, _)| inst.flows_at(i).iter().map(|&l| l as usize))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintFamily {
    Shape,
    /// z_ij <= x_i and sum_j z_ij = x_i
    Mapping,
    /// sum_i g_i z_ij <= A_j^rest
    Capacity,
    /// y^l <= sum_i beta_i^l x_i
    Programmability,
    /// sum_l y^l >= Q
    Quota,
}

impl fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintFamily::Shape => "shape",
            ConstraintFamily::Mapping => "mapping",
            ConstraintFamily::Capacity => "capacity",
            ConstraintFamily::Programmability => "programmability",
            ConstraintFamily::Quota => "quota",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Shape { message: String },
    Mapping { switch: NodeId, x: bool, mapped_to: usize },
    Capacity { controller: NodeId, load: u64, limit: u32 },
    Programmability { flow: FlowId },
    Quota { required: u32, achieved: u32 },
}

impl Violation {
    pub fn family(&self) -> ConstraintFamily {
        match self {
            Violation::Shape { .. } => ConstraintFamily::Shape,
            Violation::Mapping { .. } => ConstraintFamily::Mapping,
            Violation::Capacity { .. } => ConstraintFamily::Capacity,
            Violation::Programmability { .. } => ConstraintFamily::Programmability,
            Violation::Quota { .. } => ConstraintFamily::Quota,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Shape { message } => write!(f, "{message}"),
            Violation::Mapping { switch, x, mapped_to } => {
                write!(f, "switch {switch}: x = {} but mapped to {mapped_to} controllers", *x as u8)
            }
            Violation::Capacity { controller, load, limit } => {
                write!(f, "controller {controller}: load {load} > residual {limit}")
            }
            Violation::Programmability { flow } => {
                write!(f, "flow {flow}: y = 1 without an SDN-mode switch")
            }
            Violation::Quota { required, achieved } => {
                write!(f, "{achieved} programmable flows < required {required}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn passed(&self, family: ConstraintFamily) -> bool {
        !self.violations.iter().any(|v| v.family() == family)
    }

    pub fn of(&self, family: ConstraintFamily) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.family() == family)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ConstraintFamily::*;
        for family in [Shape, Mapping, Capacity, Programmability, Quota] {
            let found: Vec<_> = self.of(family).collect();
            if found.is_empty() {
                writeln!(f, "{family}: pass")?;
            } else {
                writeln!(f, "{family}: FAIL")?;
                for v in found {
                    writeln!(f, "  {v}")?;
                }
            }
        }
        write!(f, "feasible: {}", self.feasible())
    }
}

pub fn validate(inst: &OscmInstance, sol: &Solution) -> ValidationReport {
    if let Err(e) = check_shape(inst, sol) {
        return ValidationReport {
            violations: vec![Violation::Shape { message: e.to_string() }],
        };
    }
    let mut violations = Vec::new();
    for i in 0..inst.n() {
        let mapped_to = sol.z[i].iter().filter(|&&z| z).count();
        if mapped_to != sol.x[i] as usize {
            violations.push(Violation::Mapping {
                switch: inst.offline_switches()[i],
                x: sol.x[i],
                mapped_to,
            });
        }
    }
    for (j, load) in sol.controller_loads(inst).into_iter().enumerate() {
        if load > inst.a_rest(j) as u64 {
            violations.push(Violation::Capacity {
                controller: inst.active_controllers()[j],
                load,
                limit: inst.a_rest(j),
            });
        }
    }
    let support = programmable_flows(inst, &sol.x);
    for (l, &y) in sol.y.iter().enumerate() {
        if y && !support.contains(&l) {
            violations.push(Violation::Programmability { flow: inst.flow_ids()[l] });
        }
    }
    let achieved = sol.programmable_count() as u32;
    if achieved < inst.q() {
        violations.push(Violation::Quota {
            required: inst.q(),
            achieved,
        });
    }
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 3 switches x 2 controllers, 4 flows.
    pub(crate) fn small() -> OscmInstance {
        OscmInstance::new(
            vec![NodeId(10), NodeId(11), NodeId(12)],
            vec![NodeId(1), NodeId(2)],
            (1..=4).map(FlowId).collect(),
            vec![2, 3, 1],
            vec![vec![1.0, 4.0], vec![2.5, 0.5], vec![3.0, 3.0]],
            vec![vec![0, 1], vec![1, 2, 3], vec![3]],
            vec![3, 3],
            2,
        )
        .unwrap()
    }

    #[test]
    fn quota_rounding() {
        assert_eq!(quota_from_fraction(1.0, 347).unwrap(), 347);
        assert_eq!(quota_from_fraction(0.9, 10).unwrap(), 9);
        assert_eq!(quota_from_fraction(0.9, 11).unwrap(), 10);
        assert_eq!(quota_from_fraction(0.5, 5).unwrap(), 3);
        assert_eq!(quota_from_fraction(0.0, 5).unwrap(), 0);
        assert!(quota_from_fraction(1.1, 5).is_err());
        assert!(quota_from_fraction(f64::NAN, 5).is_err());
    }

    #[test]
    fn objective_values() {
        let inst = small();
        assert_eq!(objective(&inst, &Solution::all_legacy(&inst)).unwrap(), 0.0);

        let single = OscmInstance::new(
            vec![NodeId(0)],
            vec![NodeId(1)],
            vec![FlowId(1)],
            vec![3],
            vec![vec![2.5]],
            vec![vec![0]],
            vec![10],
            1,
        )
        .unwrap();
        let sol = Solution::from_assignment(&single, &[Some(0)]);
        assert_eq!(objective(&single, &sol).unwrap(), 7.5);

        // w = [[2, 8], [7.5, 1.5], [3, 3]]; switch 0 -> C1 and 1 -> C2: 2 + 1.5
        let sol = Solution::from_assignment(&inst, &[Some(0), Some(1), None]);
        assert_eq!(objective(&inst, &sol).unwrap(), 3.5);
        assert_eq!(sol.objective, 3.5);
    }

    #[test]
    fn objective_dimension_mismatch() {
        let inst = small();
        let mut sol = Solution::all_legacy(&inst);
        sol.y.pop();
        assert!(matches!(objective(&inst, &sol), Err(Error::DimensionMismatch(_))));
        assert!(!validate(&inst, &sol).passed(ConstraintFamily::Shape));
    }

    #[test]
    fn all_legacy_with_zero_quota_is_feasible() {
        let inst = small().with_quota(0).unwrap();
        assert!(validate(&inst, &Solution::all_legacy(&inst)).feasible());
    }

    #[test]
    fn mapping_without_sdn_mode() {
        let inst = small().with_quota(0).unwrap();
        let mut sol = Solution::all_legacy(&inst);
        sol.z[0][1] = true;
        let report = validate(&inst, &sol);
        assert!(!report.feasible());
        assert!(!report.passed(ConstraintFamily::Mapping));
        assert!(report.passed(ConstraintFamily::Capacity));
    }

    #[test]
    fn capacity_boundary() {
        let inst = small().with_quota(0).unwrap();
        // switches 0 (g=2) and 2 (g=1) on C1 reach exactly A = 3
        let ok = Solution::from_assignment(&inst, &[Some(0), None, Some(0)]);
        assert!(validate(&inst, &ok).feasible());
        // switches 0 and 1 on C1: 5 > 3; switch 1 alone on C2: 3 = 3
        let over = Solution::from_assignment(&inst, &[Some(0), Some(0), None]);
        let report = validate(&inst, &over);
        let caps: Vec<_> = report.of(ConstraintFamily::Capacity).collect();
        assert_eq!(
            caps,
            vec![&Violation::Capacity {
                controller: NodeId(1),
                load: 5,
                limit: 3
            }]
        );
    }

    #[test]
    fn programmability_and_quota() {
        let inst = small();
        let mut sol = Solution::all_legacy(&inst);
        sol.y[0] = true;
        sol.y[1] = true;
        let report = validate(&inst, &sol);
        assert_eq!(report.of(ConstraintFamily::Programmability).count(), 2);
        assert!(report.passed(ConstraintFamily::Quota));

        let sol = Solution::from_assignment(&inst, &[None, None, Some(1)]);
        let report = validate(&inst, &sol);
        assert_eq!(
            report.of(ConstraintFamily::Quota).next(),
            Some(&Violation::Quota { required: 2, achieved: 1 })
        );
    }

    #[test]
    fn programmable_set() {
        let inst = small();
        assert!(programmable_flows(&inst, &[false; 3]).is_empty());
        let all: Vec<_> = programmable_flows(&inst, &[true; 3]).into_iter().collect();
        assert_eq!(all, vec![0, 1, 2, 3]);
        let some: Vec<_> = programmable_flows(&inst, &[true, false, true]).into_iter().collect();
        assert_eq!(some, vec![0, 1, 3]);
    }

    #[test]
    fn invalid_instances() {
        // flow 2 not programmable anywhere
        assert!(OscmInstance::new(
            vec![NodeId(0)],
            vec![NodeId(1)],
            vec![FlowId(1), FlowId(2)],
            vec![1],
            vec![vec![1.0]],
            vec![vec![0]],
            vec![1],
            0,
        )
        .is_err());
        // quota above L
        assert!(small().with_quota(5).is_err());
        // negative delay
        assert!(OscmInstance::new(
            vec![NodeId(0)],
            vec![NodeId(1)],
            vec![FlowId(1)],
            vec![1],
            vec![vec![-1.0]],
            vec![vec![0]],
            vec![1],
            0,
        )
        .is_err());
    }

    fn toy_instance(q: f64) -> OscmInstance {
        use crate::fixtures;
        use crate::world::{Config, World};
        let t = fixtures::toy_topology();
        let p = fixtures::toy_placement(&t);
        let w = World::with_flows(t, fixtures::toy_flows(), p.clone(), Config::default()).unwrap();
        let s = FailureScenario::new(&p, [NodeId(22)]).unwrap();
        build_instance(&w, &s, q).unwrap()
    }

    #[test]
    fn toy_instance_shape() {
        let inst = toy_instance(1.0);
        assert_eq!(inst.offline_switches(), &(20..=24).map(NodeId).collect::<Vec<_>>()[..]);
        assert_eq!(inst.active_controllers(), &[NodeId(1), NodeId(3)]);
        assert_eq!((inst.n(), inst.m(), inst.l(), inst.q()), (5, 2, 3, 3));
        assert_eq!(inst.loads(), &[3, 2, 2, 2, 2]);
        assert_eq!(inst.residuals(), &[10, 5]);
        // s20 is 16 ms from C1 and 1 ms from C3
        assert_eq!((inst.w(0, 0), inst.w(0, 1)), (48.0, 3.0));
        assert_eq!(toy_instance(0.5).q(), 2);
    }

    #[test]
    fn toy_s20_s22_cover_all_flows() {
        let inst = toy_instance(1.0);
        let set: Vec<_> = programmable_flows(&inst, &[true, false, true, false, false]).into_iter().collect();
        let ids: Vec<_> = set.iter().map(|&l| inst.flow_ids()[l]).collect();
        assert_eq!(ids, vec![FlowId(1), FlowId(2), FlowId(3)]);
    }

    #[test]
    fn json_round_trip_and_w_check() {
        let inst = small();
        let text = inst.to_json();
        assert_eq!(OscmInstance::from_json(&text).unwrap(), inst);
        let tampered = text.replacen("7.5", "7.25", 1);
        assert!(OscmInstance::from_json(&tampered).is_err());
        let sol = Solution::from_assignment(&inst, &[Some(0), None, None]);
        assert_eq!(Solution::from_json(&sol.to_json()).unwrap(), sol);
    }
}
