//! Solvers for switch configuration and mapping: exact branch-and-bound,
//! the greedy RetroFlow heuristic, the Nearest baseline, and the reduction
//! to the generalized assignment problem used as a test oracle.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::NodeId;
use crate::oscm::{OscmInstance, Solution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverBudget {
    pub max_nodes_explored: u64,
    pub time_limit_ms: u64,
}

impl SolverBudget {
    pub fn new(max_nodes_explored: u64, time_limit_ms: u64) -> Result<Self> {
        if max_nodes_explored == 0 || time_limit_ms == 0 {
            return Err(Error::InvalidArgument("solver budget must be positive".into()));
        }
        Ok(SolverBudget {
            max_nodes_explored,
            time_limit_ms,
        })
    }
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            max_nodes_explored: 200_000_000,
            time_limit_ms: 120_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Exact,
    Retroflow,
    Nearest,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Exact, Algorithm::Retroflow, Algorithm::Nearest];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Exact => "exact",
            Algorithm::Retroflow => "retroflow",
            Algorithm::Nearest => "nearest",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "optimal" => Ok(Algorithm::Exact),
            "retroflow" => Ok(Algorithm::Retroflow),
            "nearest" => Ok(Algorithm::Nearest),
            other => Err(Error::InvalidArgument(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Result of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved { solution: Solution, proven: bool },
    Infeasible,
}

impl Outcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            Outcome::Solved { solution, .. } => Some(solution),
            Outcome::Infeasible => None,
        }
    }
}

/// Runs `alg` on `inst`. Only the exact solver can report `Infeasible` or fail.
pub fn solve(alg: Algorithm, inst: &OscmInstance, budget: SolverBudget) -> Result<Outcome> {
    match alg {
        Algorithm::Exact => solve_exact(inst, budget),
        Algorithm::Retroflow => Ok(Outcome::Solved {
            solution: solve_retroflow(inst),
            proven: false,
        }),
        Algorithm::Nearest => Ok(Outcome::Solved {
            solution: solve_nearest(inst),
            proven: false,
        }),
    }
}

/// Fixed-width flow set.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn from_indices(len: usize, idx: &[u32]) -> Self {
        let mut b = Bits::empty(len);
        for &l in idx {
            b.0[l as usize / 64] |= 1 << (l % 64);
        }
        b
    }

    fn union_with(&mut self, o: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a |= b;
        }
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn count_new(&self, o: &Bits) -> usize {
        self.0.iter().zip(&o.0).map(|(a, b)| (b & !a).count_ones() as usize).sum()
    }
}

struct Search<'a> {
    inst: &'a OscmInstance,
    order: Vec<usize>,
    rows: Vec<Bits>,
    // choices per switch: controllers by ascending w, ties by index
    by_cost: Vec<Vec<usize>>,
    q: usize,
    best_cost: f64,
    best: Option<Vec<Option<usize>>>,
    nodes: u64,
    budget: SolverBudget,
    started: Instant,
    exhausted: bool,
}

impl Search<'_> {
    fn out_of_budget(&mut self) -> bool {
        if self.exhausted {
            return true;
        }
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes_explored
            || (self.nodes.is_multiple_of(4096)
                && self.started.elapsed() > Duration::from_millis(self.budget.time_limit_ms))
        {
            self.exhausted = true;
        }
        self.exhausted
    }

    /// Lower bound on the cost still to pay from depth `k`, or `None` when
    /// the quota cannot be reached from here.
    fn bound(&self, k: usize, covered: &Bits, a_rest: &[u32]) -> Option<f64> {
        let rest = &self.order[k..];
        // how many remaining switches carry each uncovered flow
        let l = self.inst.l();
        let mut carriers = vec![0u32; l];
        let mut reachable = covered.clone();
        for &i in rest {
            reachable.union_with(&self.rows[i]);
            for &f in self.inst.flows_at(i) {
                if covered.0[f as usize / 64] >> (f % 64) & 1 == 0 {
                    carriers[f as usize] += 1;
                }
            }
        }
        let reach = reachable.count();
        if reach < self.q {
            return None;
        }
        let mut lb = 0.0;
        for &i in rest {
            let unique = self
                .inst
                .flows_at(i)
                .iter()
                .filter(|&&f| carriers[f as usize] == 1)
                .count();
            if reach - unique < self.q {
                let cheapest = self.by_cost[i]
                    .iter()
                    .find(|&&j| a_rest[j] >= self.inst.g(i))
                    .map(|&j| self.inst.w(i, j))?;
                lb += cheapest;
            }
        }
        Some(lb)
    }

    fn run(&mut self, k: usize, covered: &Bits, a_rest: &mut [u32], cost: f64, chosen: &mut [Option<usize>]) {
        if self.out_of_budget() {
            return;
        }
        if covered.count() >= self.q {
            // every remaining switch stays legacy; more mappings cost w >= 0
            if cost < self.best_cost {
                self.best_cost = cost;
                self.best = Some(chosen.to_vec());
            }
            return;
        }
        if k == self.order.len() {
            return;
        }
        let Some(lb) = self.bound(k, covered, a_rest) else {
            return;
        };
        if cost + lb >= self.best_cost {
            return;
        }
        let i = self.order[k];
        self.run(k + 1, covered, a_rest, cost, chosen);
        let g = self.inst.g(i);
        for idx in 0..self.by_cost[i].len() {
            let j = self.by_cost[i][idx];
            if a_rest[j] < g {
                continue;
            }
            let c = cost + self.inst.w(i, j);
            if c >= self.best_cost {
                // remaining controllers are no cheaper
                break;
            }
            a_rest[j] -= g;
            chosen[i] = Some(j);
            let mut next = covered.clone();
            next.union_with(&self.rows[i]);
            self.run(k + 1, &next, a_rest, c, chosen);
            chosen[i] = None;
            a_rest[j] += g;
        }
    }
}

fn controllers_by_cost(inst: &OscmInstance, i: usize) -> Vec<usize> {
    let mut js: Vec<usize> = (0..inst.m()).collect();
    js.sort_by(|&a, &b| inst.w(i, a).total_cmp(&inst.w(i, b)).then(a.cmp(&b)));
    js
}

/// Minimum-overhead feasible solution by depth-first branch-and-bound.
///
/// Returns `proven = false` when the budget ran out with an incumbent, and
/// [`Error::Inconclusive`] when it ran out without one.
pub fn solve_exact(inst: &OscmInstance, budget: SolverBudget) -> Result<Outcome> {
    let n = inst.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| inst.g(b).cmp(&inst.g(a)).then(a.cmp(&b)));
    let rows: Vec<Bits> = (0..n).map(|i| Bits::from_indices(inst.l(), inst.flows_at(i))).collect();
    let by_cost = (0..n).map(|i| controllers_by_cost(inst, i)).collect();

    let mut search = Search {
        inst,
        order,
        rows,
        by_cost,
        q: inst.q() as usize,
        best_cost: f64::INFINITY,
        best: None,
        nodes: 0,
        budget,
        started: Instant::now(),
        exhausted: false,
    };
    let greedy = solve_retroflow(inst);
    if greedy.programmable_count() >= search.q {
        search.best_cost = greedy.objective;
        search.best = greedy.assignment();
    }
    let mut a_rest = inst.residuals().to_vec();
    let mut chosen = vec![None; n];
    search.run(0, &Bits::empty(inst.l()), &mut a_rest, 0.0, &mut chosen);

    let proven = !search.exhausted;
    match search.best {
        Some(assign) => Ok(Outcome::Solved {
            solution: Solution::from_assignment(inst, &assign),
            proven,
        }),
        None if proven => Ok(Outcome::Infeasible),
        None => Err(Error::Inconclusive { nodes: search.nodes }),
    }
}

/// One controller tested for the picked switch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerTest {
    pub controller: NodeId,
    pub w: f64,
    pub a_rest: u32,
    pub fits: bool,
}

/// One iteration of the greedy loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetroflowStep {
    pub switch: NodeId,
    pub delta: usize,
    pub g: u32,
    pub tests: Vec<ControllerTest>,
    /// Controller and its residual after the decrement.
    pub assigned: Option<(NodeId, u32)>,
    pub programmable: Vec<crate::flows::FlowId>,
}

/// Step log of a greedy run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetroflowTrace {
    pub q: u32,
    pub steps: Vec<RetroflowStep>,
    pub stop: String,
}

impl fmt::Display for RetroflowTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, s) in self.steps.iter().enumerate() {
            writeln!(f, "iteration {}: pick s{} delta={} g={}", k + 1, s.switch, s.delta, s.g)?;
            for t in &s.tests {
                let verdict = if t.fits { "fits" } else { "too small" };
                writeln!(f, "  test C{} w={} A_rest={} {verdict}", t.controller, t.w, t.a_rest)?;
            }
            match s.assigned {
                Some((c, left)) => writeln!(f, "  map s{} -> C{} A_rest={left}", s.switch, c)?,
                None => writeln!(f, "  s{} stays legacy", s.switch)?,
            }
            let ids: Vec<String> = s.programmable.iter().map(|l| format!("f{l}")).collect();
            writeln!(f, "  Y={{{}}} |Y|={}", ids.join(","), s.programmable.len())?;
        }
        write!(f, "stop: {}", self.stop)
    }
}

/// Greedy heuristic: repeatedly take the switch adding the most new
/// programmable flows and map it to its cheapest controller with room.
pub fn solve_retroflow(inst: &OscmInstance) -> Solution {
    retroflow(inst, None)
}

pub fn solve_retroflow_traced(inst: &OscmInstance) -> (Solution, RetroflowTrace) {
    let mut trace = RetroflowTrace {
        q: inst.q(),
        steps: Vec::new(),
        stop: String::new(),
    };
    let sol = retroflow(inst, Some(&mut trace));
    (sol, trace)
}

fn retroflow(inst: &OscmInstance, mut trace: Option<&mut RetroflowTrace>) -> Solution {
    let n = inst.n();
    let q = inst.q() as usize;
    let rows: Vec<Bits> = (0..n).map(|i| Bits::from_indices(inst.l(), inst.flows_at(i))).collect();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut a_rest = inst.residuals().to_vec();
    let mut assign = vec![None; n];
    let mut y = Bits::empty(inst.l());

    let stop = loop {
        if remaining.is_empty() {
            break "no offline switch left".to_string();
        }
        if y.count() >= q {
            break format!("|Y|={} >= Q={q}", y.count());
        }
        // strict > keeps the smallest index on ties
        let mut delta = 0;
        let mut pick = None;
        for (pos, &i) in remaining.iter().enumerate() {
            let d = y.count_new(&rows[i]);
            if d > delta {
                delta = d;
                pick = Some(pos);
            }
        }
        let Some(pos) = pick else {
            break "no remaining switch adds a flow".to_string();
        };
        let i = remaining.remove(pos);
        let g = inst.g(i);
        let mut tests = Vec::new();
        for j in controllers_by_cost(inst, i) {
            let fits = a_rest[j] >= g;
            tests.push(ControllerTest {
                controller: inst.active_controllers()[j],
                w: inst.w(i, j),
                a_rest: a_rest[j],
                fits,
            });
            if fits {
                a_rest[j] -= g;
                assign[i] = Some(j);
                y.union_with(&rows[i]);
                break;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.steps.push(RetroflowStep {
                switch: inst.offline_switches()[i],
                delta,
                g,
                assigned: assign[i].map(|j| (inst.active_controllers()[j], a_rest[j])),
                tests,
                programmable: (0..inst.l())
                    .filter(|&l| y.0[l / 64] >> (l % 64) & 1 == 1)
                    .map(|l| inst.flow_ids()[l])
                    .collect(),
            });
        }
    };
    if let Some(t) = trace {
        t.stop = stop;
    }
    Solution::from_assignment(inst, &assign)
}

/// Every offline switch goes to the controller with the smallest D_ij,
/// ignoring capacity.
pub fn solve_nearest(inst: &OscmInstance) -> Solution {
    let assign: Vec<Option<usize>> = (0..inst.n())
        .map(|i| {
            (0..inst.m()).min_by(|&a, &b| inst.delay(i, a).total_cmp(&inst.delay(i, b)).then(a.cmp(&b)))
        })
        .collect();
    Solution::from_assignment(inst, &assign)
}

/// Generalized assignment: n tasks, m agents, cost c_ij, usage a_ij,
/// agent capacity b_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapInstance {
    pub cost: Vec<Vec<f64>>,
    pub usage: Vec<Vec<u32>>,
    pub capacity: Vec<u32>,
}

impl GapInstance {
    pub fn new(cost: Vec<Vec<f64>>, usage: Vec<Vec<u32>>, capacity: Vec<u32>) -> Result<Self> {
        let m = capacity.len();
        if cost.len() != usage.len() || cost.iter().any(|r| r.len() != m) || usage.iter().any(|r| r.len() != m) {
            return Err(Error::DimensionMismatch("cost and usage must be n x m".into()));
        }
        if cost.iter().flatten().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidArgument("costs must be finite and nonnegative".into()));
        }
        Ok(GapInstance { cost, usage, capacity })
    }

    pub fn tasks(&self) -> usize {
        self.cost.len()
    }

    pub fn agents(&self) -> usize {
        self.capacity.len()
    }
}

/// GAP view of an instance where every flow must be programmable and each
/// offline switch carries exactly one flow of its own. `None` otherwise.
pub fn reduce_to_gap(inst: &OscmInstance) -> Option<GapInstance> {
    if inst.q() as usize != inst.l() || inst.n() != inst.l() {
        return None;
    }
    let mut seen = vec![false; inst.l()];
    for i in 0..inst.n() {
        let row = inst.flows_at(i);
        if row.len() != 1 || std::mem::replace(&mut seen[row[0] as usize], true) {
            return None;
        }
    }
    let (n, m) = (inst.n(), inst.m());
    Some(GapInstance {
        cost: (0..n).map(|i| (0..m).map(|j| inst.w(i, j)).collect()).collect(),
        usage: (0..n).map(|i| vec![inst.g(i); m]).collect(),
        capacity: inst.residuals().to_vec(),
    })
}

/// Largest m^n accepted by [`gap_bruteforce`].
pub const GAP_SEARCH_LIMIT: f64 = 1e7;

/// Exhaustive minimum over all m^n assignments; `None` when none fits.
pub fn gap_bruteforce(g: &GapInstance) -> Result<Option<f64>> {
    let (n, m) = (g.tasks(), g.agents());
    let size = (m as f64).powi(n as i32);
    if size > GAP_SEARCH_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: GAP_SEARCH_LIMIT,
        });
    }
    if n == 0 {
        return Ok(Some(0.0));
    }
    if m == 0 {
        return Ok(None);
    }
    let mut pick = vec![0usize; n];
    let mut best: Option<f64> = None;
    loop {
        let mut used = vec![0u64; m];
        let mut cost = 0.0;
        for (t, &a) in pick.iter().enumerate() {
            used[a] += g.usage[t][a] as u64;
            cost += g.cost[t][a];
        }
        if used.iter().zip(&g.capacity).all(|(&u, &b)| u <= b as u64) && best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
        // odometer
        let mut t = 0;
        while t < n {
            pick[t] += 1;
            if pick[t] < m {
                break;
            }
            pick[t] = 0;
            t += 1;
        }
        if t == n {
            return Ok(best);
        }
    }
}
