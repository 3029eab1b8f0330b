use failover_core::geo::{haversine_km, GeoCoordinate, EARTH_RADIUS_KM};
use failover_core::oscm::{objective, programmable_flows, validate, OscmInstance, Solution};
use failover_core::protocol::{step, Event, SwitchSession};
use failover_core::solvers::{solve_exact, solve_nearest, solve_retroflow, Outcome, SolverBudget};
use failover_core::synthetic::{random_instance, QuotaChoice, SyntheticParams};
use failover_core::NodeId;
use proptest::prelude::*;

fn instance(seed: u64, q: u8) -> OscmInstance {
    let quota = [QuotaChoice::Zero, QuotaChoice::Half, QuotaChoice::All][q as usize % 3];
    random_instance(seed, SyntheticParams::default(), quota)
}

/// Arbitrary, possibly inconsistent, decision variables for `inst`.
fn raw_solution(inst: &OscmInstance, bits: &[bool]) -> Solution {
    let mut it = bits.iter().copied().cycle();
    let x: Vec<bool> = (0..inst.n()).map(|_| it.next().unwrap()).collect();
    let z = (0..inst.n()).map(|_| (0..inst.m()).map(|_| it.next().unwrap()).collect()).collect();
    let y = (0..inst.l()).map(|_| it.next().unwrap()).collect();
    let mut s = Solution { x, z, y, objective: 0.0 };
    s.objective = objective(inst, &s).unwrap();
    s
}

/// Straight transcription of the constraints, written without the library's
/// helpers.
fn brute_feasible(inst: &OscmInstance, s: &Solution) -> bool {
    for i in 0..inst.n() {
        let mapped: usize = s.z[i].iter().map(|&b| b as usize).sum();
        if mapped != s.x[i] as usize {
            return false;
        }
    }
    for j in 0..inst.m() {
        let load: u64 = (0..inst.n()).filter(|&i| s.z[i][j]).map(|i| inst.g(i) as u64).sum();
        if load > inst.a_rest(j) as u64 {
            return false;
        }
    }
    for l in 0..inst.l() {
        let support: usize = (0..inst.n()).filter(|&i| inst.beta(i, l) && s.x[i]).count();
        if s.y[l] && support == 0 {
            return false;
        }
    }
    s.y.iter().filter(|&&y| y).count() >= inst.q() as usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn validate_agrees_with_brute_force(seed in any::<u64>(), q in 0u8..3, bits in prop::collection::vec(any::<bool>(), 1..64)) {
        let inst = instance(seed, q);
        let s = raw_solution(&inst, &bits);
        prop_assert_eq!(validate(&inst, &s).feasible(), brute_feasible(&inst, &s));
    }

    #[test]
    fn consistent_assignments_validate_like_brute_force(seed in any::<u64>(), q in 0u8..3, picks in prop::collection::vec(0usize..4, 6)) {
        let inst = instance(seed, q);
        let assign: Vec<Option<usize>> = (0..inst.n()).map(|i| {
            let p = picks[i] % (inst.m() + 1);
            (p > 0).then(|| p - 1)
        }).collect();
        let s = Solution::from_assignment(&inst, &assign);
        prop_assert_eq!(validate(&inst, &s).feasible(), brute_feasible(&inst, &s));
    }

    #[test]
    fn objective_is_monotone(seed in any::<u64>(), i in 0usize..6, j in 0usize..3, bits in prop::collection::vec(any::<bool>(), 1..64)) {
        let inst = instance(seed, 0);
        let mut s = raw_solution(&inst, &bits);
        let (i, j) = (i % inst.n(), j % inst.m());
        let before = objective(&inst, &s).unwrap();
        s.z[i][j] = true;
        prop_assert!(objective(&inst, &s).unwrap() >= before);
    }

    #[test]
    fn programmable_flows_monotone(seed in any::<u64>(), a in prop::collection::vec(any::<bool>(), 6), b in prop::collection::vec(any::<bool>(), 6)) {
        let inst = instance(seed, 0);
        let small: Vec<bool> = (0..inst.n()).map(|i| a[i] && b[i]).collect();
        let big: Vec<bool> = (0..inst.n()).map(|i| a[i]).collect();
        prop_assert!(programmable_flows(&inst, &small).is_subset(&programmable_flows(&inst, &big)));
    }

    #[test]
    fn feasible_y_bounded_by_programmable(seed in any::<u64>(), q in 0u8..3, bits in prop::collection::vec(any::<bool>(), 1..64)) {
        let inst = instance(seed, q);
        let s = raw_solution(&inst, &bits);
        if validate(&inst, &s).feasible() {
            prop_assert!(programmable_flows(&inst, &s.x).len() >= s.programmable_count());
        }
    }

    #[test]
    fn solvers_are_sound_and_ordered(seed in any::<u64>(), q in 0u8..3) {
        let inst = instance(seed, q);
        let greedy = solve_retroflow(&inst);
        let report = validate(&inst, &greedy);
        prop_assert!(report.passed(failover_core::oscm::ConstraintFamily::Capacity));
        prop_assert!(report.passed(failover_core::oscm::ConstraintFamily::Mapping));
        match solve_exact(&inst, SolverBudget::default()).unwrap() {
            Outcome::Solved { solution, proven } => {
                prop_assert!(proven);
                prop_assert!(validate(&inst, &solution).feasible());
                if report.feasible() {
                    prop_assert!(solution.objective <= greedy.objective);
                }
            }
            Outcome::Infeasible => prop_assert!(!report.feasible()),
        }
    }

    #[test]
    fn nearest_takes_an_argmin(seed in any::<u64>()) {
        let inst = instance(seed, 2);
        let s = solve_nearest(&inst);
        for (i, a) in s.assignment().unwrap().iter().enumerate() {
            let j = a.expect("every switch mapped");
            let best = (0..inst.m()).map(|k| inst.delay(i, k)).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(inst.delay(i, j), best);
            prop_assert!((0..j).all(|k| inst.delay(i, k) > best));
        }
    }

    #[test]
    fn solvers_are_deterministic(seed in any::<u64>(), q in 0u8..3) {
        let inst = instance(seed, q);
        prop_assert_eq!(solve_retroflow(&inst).to_json(), solve_retroflow(&inst).to_json());
        prop_assert_eq!(solve_nearest(&inst).to_json(), solve_nearest(&inst).to_json());
        let a = solve_exact(&inst, SolverBudget::default()).unwrap();
        let b = solve_exact(&inst, SolverBudget::default()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn instance_json_round_trip(seed in any::<u64>(), q in 0u8..3) {
        let inst = instance(seed, q);
        prop_assert_eq!(OscmInstance::from_json(&inst.to_json()).unwrap(), inst);
    }

    #[test]
    fn haversine_is_a_bounded_symmetric_distance(
        a in (-90.0f64..=90.0, -180.0f64..=180.0),
        b in (-90.0f64..=90.0, -180.0f64..=180.0),
        c in (-90.0f64..=90.0, -180.0f64..=180.0),
    ) {
        let p = GeoCoordinate::new(a.0, a.1).unwrap();
        let q = GeoCoordinate::new(b.0, b.1).unwrap();
        let r = GeoCoordinate::new(c.0, c.1).unwrap();
        let d = haversine_km(p, q);
        prop_assert!((0.0..=std::f64::consts::PI * EARTH_RADIUS_KM + 1e-6).contains(&d));
        prop_assert!((d - haversine_km(q, p)).abs() <= 1e-9 * d.max(1.0));
        prop_assert!(haversine_km(p, r) <= d + haversine_km(q, r) + 1e-6);
    }

    #[test]
    fn protocol_invariants_hold_on_random_runs(events in prop::collection::vec((0u8..4, 1u32..5), 0..40)) {
        let mut s = SwitchSession::new(NodeId(9), NodeId(1), vec![NodeId(2), NodeId(3)]).unwrap();
        for (kind, c) in events {
            let e = match kind {
                0 => Event::MasterConnectionLost,
                1 => Event::RoleReplyRejectLegacy(NodeId(c)),
                2 => Event::RoleReplyAccept(NodeId(c)),
                _ => Event::Adopt(NodeId(c)),
            };
            if let Ok((next, _)) = step(&s, e) {
                prop_assert_eq!(step(&s, e).unwrap().0, next.clone());
                s = next;
            }
            prop_assert!(s.check_invariants().is_ok(), "{:?}", s);
        }
    }
}
