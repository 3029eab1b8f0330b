//! Failure-scenario harness: runs the solvers, measures programmability,
//! recovered switches, controller load and overhead, and writes reports.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domains::{domain_load, FailureScenario};
use crate::error::{Error, Result};
use crate::geo::NodeId;
use crate::oscm::{build_instance, validate, OscmInstance, Solution};
use crate::solvers::{solve, Algorithm, Outcome, SolverBudget};
use crate::world::World;

/// Default queueing penalty in ms per flow beyond a controller's ability.
pub const DEFAULT_PENALTY_MS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    pub penalty_ms_per_excess_flow: f64,
    pub enabled: bool,
}

impl QueueModel {
    pub fn new(penalty_ms_per_excess_flow: f64) -> Result<Self> {
        if !(penalty_ms_per_excess_flow >= 0.0 && penalty_ms_per_excess_flow.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "queue penalty {penalty_ms_per_excess_flow} must be finite and nonnegative"
            )));
        }
        Ok(QueueModel {
            penalty_ms_per_excess_flow,
            enabled: true,
        })
    }

    pub fn disabled() -> Self {
        QueueModel {
            penalty_ms_per_excess_flow: 0.0,
            enabled: false,
        }
    }
}

impl Default for QueueModel {
    fn default() -> Self {
        QueueModel {
            penalty_ms_per_excess_flow: DEFAULT_PENALTY_MS,
            enabled: true,
        }
    }
}

/// Extra per-pull latency at a controller carrying `load` flows.
pub fn queueing_penalty_ms(load: u64, ability: u64, m: QueueModel) -> f64 {
    if !m.enabled || load <= ability {
        return 0.0;
    }
    m.penalty_ms_per_excess_flow * (load - ability) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// Exact search completed.
    Optimal,
    /// Meets every constraint (exact: budget ran out with an incumbent).
    Feasible,
    /// Fewer programmable flows than required.
    QuotaUnmet,
    /// Some controller is loaded past its residual ability.
    CapacityViolated,
    /// Proven that no assignment meets the constraints.
    Infeasible,
    /// Budget ran out before any feasible assignment was found.
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::QuotaUnmet => "quota_unmet",
            Status::CapacityViolated => "capacity_violated",
            Status::Infeasible => "infeasible",
            Status::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerLoad {
    pub controller: NodeId,
    /// Own surviving domain plus adopted switches.
    pub load: u64,
    pub ability: u32,
}

impl ControllerLoad {
    pub fn overloaded(&self) -> bool {
        self.load > self.ability as u64
    }
}

/// Metrics divided by the Nearest baseline's.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Normalized {
    pub programmable_flow_fraction: Option<f64>,
    pub recovered_switch_count: Option<f64>,
    pub raw_overhead: Option<f64>,
    pub adjusted_overhead: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    pub status: Status,
    pub feasible: bool,
    pub proven: Option<bool>,
    pub programmable_flows: Option<usize>,
    pub programmable_flow_fraction: Option<f64>,
    pub recovered_switch_count: Option<usize>,
    pub raw_overhead: Option<f64>,
    pub adjusted_overhead: Option<f64>,
    pub controllers: Vec<ControllerLoad>,
    pub normalized: Normalized,
    #[serde(skip)]
    pub solution: Option<Solution>,
}

impl AlgorithmReport {
    pub fn overloaded(&self) -> Vec<NodeId> {
        self.controllers.iter().filter(|c| c.overloaded()).map(|c| c.controller).collect()
    }

    fn empty(algorithm: Algorithm, status: Status) -> Self {
        AlgorithmReport {
            algorithm,
            status,
            feasible: false,
            proven: None,
            programmable_flows: None,
            programmable_flow_fraction: None,
            recovered_switch_count: None,
            raw_overhead: None,
            adjusted_overhead: None,
            controllers: Vec::new(),
            normalized: Normalized::default(),
            solution: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub failed: Vec<NodeId>,
    pub q_fraction: f64,
    pub offline_switches: usize,
    pub active_controllers: usize,
    pub flows: usize,
    pub quota: u32,
    pub algorithms: Vec<AlgorithmReport>,
}

impl ScenarioReport {
    pub fn get(&self, alg: Algorithm) -> Option<&AlgorithmReport> {
        self.algorithms.iter().find(|a| a.algorithm == alg)
    }
}

/// Metrics of `sol` on `inst`, with queueing applied to overloaded
/// controllers.
fn measure(world: &World, inst: &OscmInstance, sol: &Solution, qm: QueueModel) -> Result<(Vec<ControllerLoad>, f64, f64)> {
    let p = world.placement();
    let adopted = sol.controller_loads(inst);
    let mut controllers = Vec::with_capacity(inst.m());
    for (j, &c) in inst.active_controllers().iter().enumerate() {
        let ctl = p.controller(c)?;
        controllers.push(ControllerLoad {
            controller: c,
            load: domain_load(ctl, world.loads())? + adopted[j],
            ability: ctl.capacity,
        });
    }
    let assign = sol
        .assignment()
        .ok_or_else(|| Error::InvalidArgument("switch mapped to several controllers".into()))?;
    let mut raw = 0.0;
    let mut adjusted = 0.0;
    for (i, a) in assign.iter().enumerate() {
        if let Some(j) = *a {
            let c = &controllers[j];
            let g = inst.g(i) as f64;
            raw += inst.w(i, j);
            adjusted += g * (inst.delay(i, j) + queueing_penalty_ms(c.load, c.ability as u64, qm));
        }
    }
    Ok((controllers, raw, adjusted))
}

/// Builds the scenario instance once and runs every requested algorithm.
pub fn run_scenario(
    world: &World,
    s: &FailureScenario,
    q_fraction: f64,
    algorithms: &[Algorithm],
    qm: QueueModel,
    budget: SolverBudget,
) -> Result<ScenarioReport> {
    if algorithms.is_empty() {
        return Err(Error::InvalidArgument("no algorithm selected".into()));
    }
    let inst = build_instance(world, s, q_fraction)?;
    let mut out = Vec::with_capacity(algorithms.len());
    for &alg in algorithms {
        let outcome = match solve(alg, &inst, budget) {
            Ok(o) => o,
            Err(Error::Inconclusive { .. }) => {
                out.push(AlgorithmReport::empty(alg, Status::Inconclusive));
                continue;
            }
            Err(e) => return Err(e),
        };
        let (sol, proven) = match outcome {
            Outcome::Infeasible => {
                let mut r = AlgorithmReport::empty(alg, Status::Infeasible);
                r.proven = Some(true);
                out.push(r);
                continue;
            }
            Outcome::Solved { solution, proven } => (solution, proven),
        };
        let report = validate(&inst, &sol);
        let (controllers, raw, adjusted) = measure(world, &inst, &sol, qm)?;
        let status = if report.feasible() {
            if alg == Algorithm::Exact && proven {
                Status::Optimal
            } else {
                Status::Feasible
            }
        } else if !report.passed(crate::oscm::ConstraintFamily::Capacity) {
            Status::CapacityViolated
        } else {
            Status::QuotaUnmet
        };
        let y = sol.programmable_count();
        out.push(AlgorithmReport {
            algorithm: alg,
            status,
            feasible: report.feasible(),
            proven: (alg == Algorithm::Exact).then_some(proven),
            programmable_flows: Some(y),
            programmable_flow_fraction: Some(if inst.l() == 0 { 1.0 } else { y as f64 / inst.l() as f64 }),
            recovered_switch_count: Some(sol.recovered_switches()),
            raw_overhead: Some(raw),
            adjusted_overhead: Some(adjusted),
            controllers,
            normalized: Normalized::default(),
            solution: Some(sol),
        });
    }
    normalize(&mut out);
    Ok(ScenarioReport {
        scenario: s.to_string(),
        failed: s.failed().iter().copied().collect(),
        q_fraction,
        offline_switches: inst.n(),
        active_controllers: inst.m(),
        flows: inst.l(),
        quota: inst.q(),
        algorithms: out,
    })
}

fn normalize(reports: &mut [AlgorithmReport]) {
    let Some(base) = reports.iter().find(|r| r.algorithm == Algorithm::Nearest).cloned() else {
        return;
    };
    let ratio = |v: Option<f64>, b: Option<f64>| match (v, b) {
        (Some(v), Some(b)) if b > 0.0 => Some(v / b),
        _ => None,
    };
    for r in reports.iter_mut() {
        r.normalized = Normalized {
            programmable_flow_fraction: ratio(r.programmable_flow_fraction, base.programmable_flow_fraction),
            recovered_switch_count: ratio(
                r.recovered_switch_count.map(|v| v as f64),
                base.recovered_switch_count.map(|v| v as f64),
            ),
            raw_overhead: ratio(r.raw_overhead, base.raw_overhead),
            adjusted_overhead: ratio(r.adjusted_overhead, base.adjusted_overhead),
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// One output record per (scenario, algorithm).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub scenario: String,
    pub q_fraction: f64,
    pub offline_switches: usize,
    pub active_controllers: usize,
    pub flows: usize,
    pub quota: u32,
    pub algorithm: String,
    pub status: String,
    pub feasible: bool,
    pub proven: Option<bool>,
    pub programmable_flows: Option<usize>,
    pub programmable_flow_fraction: Option<f64>,
    pub recovered_switches: Option<usize>,
    pub raw_overhead_ms: Option<f64>,
    pub adjusted_overhead_ms: Option<f64>,
    pub overloaded_controllers: String,
    pub max_load_ratio: Option<f64>,
    pub norm_programmable_flow_fraction: Option<f64>,
    pub norm_recovered_switches: Option<f64>,
    pub norm_raw_overhead: Option<f64>,
    pub norm_adjusted_overhead: Option<f64>,
    pub controller_loads: String,
}

pub fn report_rows(reports: &[ScenarioReport]) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for s in reports {
        for a in &s.algorithms {
            let ids = |it: &mut dyn Iterator<Item = String>| it.collect::<Vec<_>>().join(" ");
            rows.push(ReportRow {
                scenario: s.scenario.clone(),
                q_fraction: s.q_fraction,
                offline_switches: s.offline_switches,
                active_controllers: s.active_controllers,
                flows: s.flows,
                quota: s.quota,
                algorithm: a.algorithm.to_string(),
                status: a.status.to_string(),
                feasible: a.feasible,
                proven: a.proven,
                programmable_flows: a.programmable_flows,
                programmable_flow_fraction: a.programmable_flow_fraction,
                recovered_switches: a.recovered_switch_count,
                raw_overhead_ms: a.raw_overhead,
                adjusted_overhead_ms: a.adjusted_overhead,
                overloaded_controllers: ids(&mut a.overloaded().into_iter().map(|c| format!("C{c}"))),
                max_load_ratio: a
                    .controllers
                    .iter()
                    .map(|c| c.load as f64 / c.ability.max(1) as f64)
                    .max_by(f64::total_cmp),
                norm_programmable_flow_fraction: a.normalized.programmable_flow_fraction,
                norm_recovered_switches: a.normalized.recovered_switch_count,
                norm_raw_overhead: a.normalized.raw_overhead,
                norm_adjusted_overhead: a.normalized.adjusted_overhead,
                controller_loads: ids(
                    &mut a.controllers.iter().map(|c| format!("C{}:{}/{}", c.controller, c.load, c.ability)),
                ),
            });
        }
    }
    rows
}

pub fn emit_report(reports: &[ScenarioReport], format: ReportFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyReport);
    }
    let rows = report_rows(reports);
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).map_err(|e| Error::parse("report", e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(r).map_err(|e| Error::parse("report", e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::parse("report", e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
        }
    }
}

/// Largest overhead reduction of an algorithm relative to Nearest's
/// queue-adjusted overhead, over scenarios where the algorithm is feasible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionStat {
    pub algorithm: Algorithm,
    pub scenario: String,
    pub reduction: f64,
}

pub fn max_reduction(reports: &[ScenarioReport], alg: Algorithm) -> Option<ReductionStat> {
    reports
        .iter()
        .filter_map(|s| {
            let a = s.get(alg).filter(|a| a.feasible)?;
            let base = s.get(Algorithm::Nearest)?.adjusted_overhead.filter(|&b| b > 0.0)?;
            Some(ReductionStat {
                algorithm: alg,
                scenario: s.scenario.clone(),
                reduction: 1.0 - a.raw_overhead? / base,
            })
        })
        .max_by(|a, b| a.reduction.total_cmp(&b.reduction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::world::Config;

    fn att() -> World {
        let t = fixtures::att_topology();
        let p = fixtures::att_placement(&t);
        World::new(t, p, Config::default()).unwrap()
    }

    #[test]
    fn penalty_definition() {
        let m = QueueModel::new(0.1).unwrap();
        assert_eq!(queueing_penalty_ms(400, 500, m), 0.0);
        assert_eq!(queueing_penalty_ms(500, 500, m), 0.0);
        assert!((queueing_penalty_ms(511, 500, m) - 1.1).abs() < 1e-12);
        assert_eq!(queueing_penalty_ms(900, 500, QueueModel::disabled()), 0.0);
        assert!(QueueModel::new(-1.0).is_err());
    }

    #[test]
    fn single_failure_of_c20() {
        let w = att();
        let s = FailureScenario::new(w.placement(), [NodeId(20)]).unwrap();
        let r = run_scenario(&w, &s, 1.0, &Algorithm::ALL, QueueModel::default(), SolverBudget::default()).unwrap();
        for a in &r.algorithms {
            assert_eq!(a.programmable_flow_fraction, Some(1.0), "{}", a.algorithm);
        }
        assert!(!r.get(Algorithm::Nearest).unwrap().overloaded().is_empty());
        let n = r.get(Algorithm::Nearest).unwrap();
        assert_eq!(n.normalized.raw_overhead, Some(1.0));
        assert_eq!(n.normalized.recovered_switch_count, Some(1.0));
    }

    #[test]
    fn zero_quota() {
        let w = att();
        let s = FailureScenario::new(w.placement(), [NodeId(2)]).unwrap();
        let r = run_scenario(&w, &s, 0.0, &Algorithm::ALL, QueueModel::default(), SolverBudget::default()).unwrap();
        let e = r.get(Algorithm::Exact).unwrap();
        assert_eq!((e.status, e.raw_overhead), (Status::Optimal, Some(0.0)));
        assert_eq!(r.get(Algorithm::Retroflow).unwrap().raw_overhead, Some(0.0));
    }

    #[test]
    fn reports() {
        let w = att();
        let s = FailureScenario::new(w.placement(), [NodeId(20)]).unwrap();
        let r = run_scenario(&w, &s, 1.0, &Algorithm::ALL, QueueModel::default(), SolverBudget::default()).unwrap();
        let csv = emit_report(std::slice::from_ref(&r), ReportFormat::Csv).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("scenario,q_fraction,"));
        assert!(matches!(emit_report(&[], ReportFormat::Json), Err(Error::EmptyReport)));
        assert!(matches!("xml".parse::<ReportFormat>(), Err(Error::UnknownFormat(_))));
        assert!(run_scenario(&w, &s, 1.0, &[], QueueModel::default(), SolverBudget::default()).is_err());
    }

    #[test]
    fn infeasible_exact_is_null() {
        let w = att();
        let scenarios = crate::domains::enumerate_failure_scenarios(w.placement(), 2).unwrap();
        let r = run_scenario(&w, &scenarios[0], 1.0, &Algorithm::ALL, QueueModel::default(), SolverBudget::default()).unwrap();
        let e = r.get(Algorithm::Exact).unwrap();
        if e.status == Status::Infeasible {
            assert_eq!(e.raw_overhead, None);
            let json = emit_report(&[r], ReportFormat::Json).unwrap();
            assert!(json.contains("\"raw_overhead_ms\": null"));
        }
    }
}
