//! Seeded random instances for property tests and oracle comparisons.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::flows::FlowId;
use crate::geo::NodeId;
use crate::oscm::OscmInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub max_switches: usize,
    pub max_controllers: usize,
    pub max_flows: usize,
    pub max_load: u32,
    pub max_delay_ms: u32,
    pub max_residual: u32,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            max_switches: 6,
            max_controllers: 3,
            max_flows: 8,
            max_load: 9,
            max_delay_ms: 20,
            max_residual: 20,
        }
    }
}

/// Quota drawn for a random instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuotaChoice {
    Zero,
    Half,
    All,
}

impl QuotaChoice {
    pub fn resolve(self, l: usize) -> u32 {
        match self {
            QuotaChoice::Zero => 0,
            QuotaChoice::Half => (l / 2) as u32,
            QuotaChoice::All => l as u32,
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with integer loads and integer delays, so objective values
/// are exact in floating point.
pub fn random_instance(seed: u64, params: SyntheticParams, quota: QuotaChoice) -> OscmInstance {
    let mut r = rng(seed);
    let n = r.random_range(1..=params.max_switches);
    let m = r.random_range(1..=params.max_controllers);
    let l = r.random_range(1..=params.max_flows);
    let mut beta = vec![Vec::new(); n];
    for f in 0..l as u32 {
        // each flow sits on a non-empty random subset of switches
        let mut hosts: Vec<usize> = (0..n).filter(|_| r.random_bool(0.35)).collect();
        if hosts.is_empty() {
            hosts.push(r.random_range(0..n));
        }
        for i in hosts {
            beta[i].push(f);
        }
    }
    let g = (0..n).map(|_| r.random_range(0..=params.max_load)).collect();
    let delay = (0..n)
        .map(|_| (0..m).map(|_| r.random_range(0..=params.max_delay_ms) as f64).collect())
        .collect();
    let a_rest = (0..m).map(|_| r.random_range(0..=params.max_residual)).collect();
    OscmInstance::new(
        (0..n as u32).map(NodeId).collect(),
        (100..100 + m as u32).map(NodeId).collect(),
        (1..=l as u32).map(FlowId).collect(),
        g,
        delay,
        beta,
        a_rest,
        quota.resolve(l),
    )
    .expect("generated instances are consistent")
}

/// Instance where every offline switch carries one flow of its own and every
/// flow must be programmable: each flow crosses a single offline switch on its
/// two-hop way between two hubs, so g_i = 1 and N = L = Q.
pub fn gap_special_instance(seed: u64, max_switches: usize, max_controllers: usize) -> OscmInstance {
    let mut r = rng(seed);
    let n = r.random_range(1..=max_switches);
    let m = r.random_range(1..=max_controllers);
    let mut flows: Vec<u32> = (0..n as u32).collect();
    flows.shuffle(&mut r);
    let beta = flows.iter().map(|&f| vec![f]).collect();
    let delay = (0..n)
        .map(|_| (0..m).map(|_| r.random_range(1..=20) as f64).collect())
        .collect();
    let a_rest = (0..m).map(|_| r.random_range(0..=n as u32)).collect();
    OscmInstance::new(
        (0..n as u32).map(NodeId).collect(),
        (100..100 + m as u32).map(NodeId).collect(),
        (1..=n as u32).map(FlowId).collect(),
        vec![1; n],
        delay,
        beta,
        a_rest,
        n as u32,
    )
    .expect("generated instances are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::reduce_to_gap;

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = random_instance(7, SyntheticParams::default(), QuotaChoice::Half);
        let b = random_instance(7, SyntheticParams::default(), QuotaChoice::Half);
        assert_eq!(a, b);
        assert!(a.n() <= 6 && a.m() <= 3);
        assert!(a.loads().iter().all(|&g| g <= 9));
    }

    #[test]
    fn special_instances_reduce() {
        for seed in 0..20 {
            let inst = gap_special_instance(seed, 7, 3);
            let g = reduce_to_gap(&inst).expect("special case");
            assert_eq!((g.tasks(), g.agents()), (inst.n(), inst.m()));
        }
    }
}
