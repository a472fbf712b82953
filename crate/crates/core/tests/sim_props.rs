use fhdos_core::addr::SourceMacStrategy;
use fhdos_core::attack::{AttackSpec, SourceColumn, Target, TrafficType, TIERS_MBPS};
use fhdos_core::codec::MacAddress;
use fhdos_core::rx::detect_drop_and_recovery;
use fhdos_core::sim::*;
use proptest::prelude::*;

const DU: MacAddress = MacAddress([2, 0, 0, 0, 0x0d, 1]);
const RU: MacAddress = MacAddress([2, 0, 0, 0, 0x0e, 1]);
const ATT: MacAddress = MacAddress([2, 0, 0, 0, 0x0a, 1]);
const P_DU: PortId = 0;
const P_RU: PortId = 1;
const P_ATT: PortId = 2;

fn topo(name: &str) -> TopologyConfig {
    TopologyConfig::resolve(name).unwrap()
}

fn spec(cfg: &TopologyConfig, target: Target, traffic: TrafficType, src: SourceColumn, tier: u32) -> AttackSpec {
    AttackSpec {
        target,
        traffic,
        src: src.strategy(cfg.node(target.peer()).mac, 7),
        tier_mbps: tier,
        duration_seconds: 30,
        dst_mac: cfg.node(target).mac,
    }
}

fn node(policy: PlanePolicy, restart: Option<u32>) -> NodeSim {
    let cfg = NodeConfig {
        name: "n".into(),
        mac: DU,
        port: "odu".into(),
        restart_seconds: restart,
        planes: [policy.clone(), policy.clone(), policy],
    };
    NodeSim::new(cfg, RU)
}

fn plane_input(legit: f64, attack: f64, src: Option<AttackSource>) -> [PlaneInput; 3] {
    let i = PlaneInput { legit, misdelivered: 0.0, attack, attack_src: src };
    [i, i, i]
}

#[test]
fn poisoning_redirects_then_aging_restores() {
    let mut sw = SwitchModel::new(3, 300.0);
    // both endpoints known
    sw.forward(P_DU, DU, RU, 0);
    sw.forward(P_RU, RU, DU, 10);
    assert_eq!(sw.forward(P_RU, RU, DU, 20), Forward::Port(P_DU));
    // one spoofed frame steals the O-DU's deliveries
    sw.forward(P_ATT, DU, RU, 30);
    assert_eq!(sw.forward(P_RU, RU, DU, 40), Forward::Port(P_ATT));
    // entry ages out with no refresh; unknown destination floods
    let aged = 30 + 300_000;
    assert!(matches!(sw.forward(P_RU, RU, DU, aged), Forward::Flood(_)));
    // one legit O-DU frame restores delivery
    sw.forward(P_DU, DU, RU, aged + 1);
    assert_eq!(sw.forward(P_RU, RU, DU, aged + 2), Forward::Port(P_DU));
}

#[test]
fn simulation_maps_spoofed_odu_source_to_attacker_port() {
    // the spoofed stream outnumbers the O-DU's own refreshes in the tick
    let cfg = topo("topology1");
    let a = spec(&cfg, Target::Oru, TrafficType::CPlaneDL, SourceColumn::Peer, 1000);
    let mut sim = Simulation::new(&cfg, Some(&a), 0);
    let att_port = cfg.port_index(&cfg.attacker_port).unwrap();
    let odu_port = cfg.port_index(&cfg.odu.port).unwrap();
    let start = cfg.timeline.baseline_seconds * TICKS_PER_SECOND;
    for _ in 0..start {
        sim.step();
    }
    assert_eq!(sim.switch().lookup(cfg.odu.mac, start as u64 * TICK_MS), Some(odu_port));
    let s = sim.step();
    assert!(s.attack_frames > 0);
    assert_eq!(sim.switch().lookup(cfg.odu.mac, (start as u64 + 1) * TICK_MS), Some(att_port));
}

#[test]
fn flow_table_of_4096_exhausts_on_third_tick_at_19532_fps() {
    let pol = PlanePolicy { flow_capacity: Some(4096), budget_per_second: f64::INFINITY, ..Default::default() };
    let mut n = node(pol, Some(1));
    let per_tick = |k: u64| ((k + 1) * 19532) / 10 - (k * 19532) / 10;
    for k in 0..2 {
        let t = n.tick(&plane_input(0.0, per_tick(k) as f64, Some(AttackSource::Random)));
        assert!(t.restart.is_none(), "tick {k}");
    }
    let t = n.tick(&plane_input(0.0, per_tick(2) as f64, Some(AttackSource::Random)));
    assert_eq!(t.restart.map(|r| r.1), Some(Cause::FlowExhaustion));
    assert_eq!(n.state(), NodeState::Restarting);
}

#[test]
fn no_attack_run_is_flat_and_passes() {
    for name in ["topology1", "topology2"] {
        let o = run_scenario(&topo(name), None, 3);
        assert_eq!(o.verdict, Verdict::Pass);
        assert_eq!(o.severity, Severity::None);
        assert_eq!(o.restarts, 0);
        let base = o.dl_bits[0] as f64;
        assert!(o.dl_bits.iter().all(|&b| (b as f64 - base).abs() <= 0.05 * base), "{name}");
    }
}

#[test]
fn scenario_runs_are_deterministic() {
    let cfg = topo("topology1");
    for traffic in TrafficType::ALL {
        let a = spec(&cfg, Target::Odu, traffic, SourceColumn::Random, 100);
        assert_eq!(run_scenario(&cfg, Some(&a), 11), run_scenario(&cfg, Some(&a), 11));
    }
}

fn arb_cell() -> impl Strategy<Value = (Target, TrafficType, SourceColumn, u32, u64)> {
    (
        prop::sample::select(Target::ALL.to_vec()),
        prop::sample::select(TrafficType::ALL.to_vec()),
        prop::sample::select(vec![
            SourceColumn::Peer,
            SourceColumn::Random,
            SourceColumn::SameAsDestination,
            SourceColumn::Broadcast,
        ]),
        prop::sample::select(TIERS_MBPS.to_vec()),
        any::<u64>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn verdict_agrees_with_severity_and_degradation(
        (target, traffic, col, tier, seed) in arb_cell(),
        t2 in any::<bool>(),
    ) {
        let cfg = topo(if t2 { "topology2" } else { "topology1" });
        let o = run_scenario(&cfg, Some(&spec(&cfg, target, traffic, col, tier)), seed);
        prop_assert_eq!(o.verdict == Verdict::Pass, o.severity == Severity::None);
        prop_assert_eq!(o.severity == Severity::None, o.degraded_ticks == 0 && o.restarts == 0);
        if o.restarts > 0 {
            prop_assert_eq!(o.severity, Severity::CrashRestart);
        }
        if let (Some(d), Some(r)) = (o.first_drop_second, o.recovered_second) {
            prop_assert!(r > d);
        }
    }

    #[test]
    fn last_writer_wins_on_unsecured_addresses(
        writes in prop::collection::vec(0usize..3, 1..40),
        now in 0u64..1_000,
    ) {
        let mut sw = SwitchModel::new(4, 300.0);
        for (i, &p) in writes.iter().enumerate() {
            sw.forward(p, DU, ATT, now + i as u64);
        }
        let last = *writes.last().unwrap();
        let t = now + writes.len() as u64;
        prop_assert_eq!(sw.lookup(DU, t), Some(last));
        prop_assert_eq!(sw.forward(3, RU, DU, t), Forward::Port(last));
    }

    #[test]
    fn never_forwards_back_to_ingress(
        frames in prop::collection::vec((0usize..4, 0usize..3, 0usize..3), 1..60),
    ) {
        let macs = [DU, RU, ATT];
        let mut sw = SwitchModel::new(4, 300.0);
        for (i, (ingress, s, d)) in frames.into_iter().enumerate() {
            match sw.forward(ingress, macs[s], macs[d], i as u64) {
                Forward::Port(p) => prop_assert_ne!(p, ingress),
                Forward::Flood(ps) => prop_assert!(!ps.contains(&ingress)),
                _ => {}
            }
        }
    }

    #[test]
    fn processed_never_exceeds_budget(
        legit in 0.0f64..5000.0,
        attack in 0.0f64..50_000.0,
        budget in 1.0f64..100_000.0,
        cost in 0.1f64..4.0,
    ) {
        let pol = PlanePolicy { budget_per_second: budget, cost, restart_ratio: 1e9, ..Default::default() };
        let mut n = node(pol, Some(1));
        let t = n.tick(&plane_input(legit, attack, Some(AttackSource::Fixed(ATT))));
        for p in t.processed {
            prop_assert!(p * cost <= budget / TICKS_PER_SECOND as f64 + 1e-6);
            prop_assert!(p <= legit + 1e-9);
        }
    }

    #[test]
    fn processed_equals_offered_without_attack(legit in 0.0f64..1000.0) {
        let pol = PlanePolicy { budget_per_second: 10_000.0, ..Default::default() };
        let mut n = node(pol, Some(1));
        let t = n.tick(&plane_input(legit, 0.0, None));
        prop_assert_eq!(t.processed, [legit; 3]);
        prop_assert!(t.degraded.is_empty());
    }

    #[test]
    fn flow_state_never_exceeds_capacity(cap in 1u64..500, bursts in prop::collection::vec(0u32..200, 1..30)) {
        let pol = PlanePolicy { flow_capacity: Some(cap), ..Default::default() };
        let mut n = node(pol, Some(0));
        for b in bursts {
            let t = n.tick(&plane_input(1.0, b as f64, Some(AttackSource::Random)));
            if t.restart.is_some() {
                // a restart clears the table
                prop_assert_eq!(n.flows(Plane::UplaneDl), 0);
            }
            prop_assert!(n.flows(Plane::UplaneDl) <= cap);
        }
    }

    #[test]
    fn deeper_drops_are_detected_no_later(
        base in 1_000u64..1_000_000,
        depth in 0.0f64..1.0,
        extra in 0.0f64..1.0,
        at in 5usize..20,
    ) {
        // a strictly deeper drop is detected no later than a shallower one
        let series = |d: f64| -> Vec<u64> {
            (0..30).map(|s| if s >= at { (base as f64 * (1.0 - d)) as u64 } else { base }).collect()
        };
        let shallow = detect_drop_and_recovery(&series(depth), base as f64, 0.5).0;
        let deep = detect_drop_and_recovery(&series((depth + extra).min(1.0)), base as f64, 0.5).0;
        if let Some(s) = shallow {
            prop_assert!(deep.is_some_and(|d| d <= s));
        }
    }
}

#[test]
fn same_as_destination_stays_fixed_source() {
    let cfg = topo("topology1");
    let a = spec(&cfg, Target::Odu, TrafficType::UPlaneDL, SourceColumn::SameAsDestination, 10);
    assert_eq!(a.src, SourceMacStrategy::SameAsDestination);
    assert_eq!(a.src.source_for(a.dst_mac, 5), cfg.odu.mac);
}
