//! One test per acceptance criterion. Each prints a single PASS/FAIL line.
//! Run with `cargo test -p fhdos-core --test acceptance -- --nocapture`.

mod common;

use std::sync::Mutex;
use std::time::Instant;

use common::*;
use fhdos_core::attack::{AttackSpec, SourceColumn, Target, TrafficType, TIERS_MBPS};
use fhdos_core::campaign::*;
use fhdos_core::codec::*;
use fhdos_core::forge::{build_attack_pcap, default_template, EditSet};
use fhdos_core::rx::meter;
use fhdos_core::sim::*;
use fhdos_core::tx::{loopback_unbounded, run_attack, Clock, RateSchedule, TxOptions};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

// timing-sensitive criteria must not share the CPU with each other
static SERIAL: Mutex<()> = Mutex::new(());

fn lock() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, failures: &[String], started: Instant) {
    let secs = started.elapsed().as_secs_f64();
    if failures.is_empty() {
        println!("PASS criterion {n} {name} ({secs:.2}s)");
    } else {
        println!("FAIL criterion {n} {name} ({secs:.2}s): {}", failures.join("; "));
        panic!("criterion {n} failed: {failures:#?}");
    }
}

fn expect(failures: &mut Vec<String>, ok: bool, what: impl Into<String>) {
    if !ok {
        failures.push(what.into());
    }
}

fn round_trip_cases<S: Strategy>(
    strategy: S,
    check: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases: 10_000, failure_persistence: None, ..Config::default() });
    runner.run(&strategy, check).map_err(|e| e.to_string())
}

#[test]
fn criterion_1_codec_conformance() {
    let _g = lock();
    let t0 = Instant::now();
    let mut f = Vec::new();

    let cplane =
        round_trip_cases((arb_mac(), arb_mac(), arb_vlan(), arb_cplane(Direction::Downlink)), |(d, s, v, m)| {
            let bytes = encode_frame(&frame(d, s, v, encode_cplane(&m).unwrap())).unwrap();
            prop_assert_eq!(dissect(&bytes).unwrap().1, FhMessage::CPlane(m));
            Ok(())
        });
    let uplane_dl =
        round_trip_cases((arb_mac(), arb_mac(), arb_vlan(), arb_uplane(Direction::Downlink)), |(d, s, v, m)| {
            let bytes = encode_frame(&frame(d, s, v, encode_uplane(&m).unwrap())).unwrap();
            prop_assert_eq!(classify_bytes(&bytes), FrameClass::UPlaneDL);
            prop_assert_eq!(dissect(&bytes).unwrap().1, FhMessage::UPlane(m));
            Ok(())
        });
    let uplane_ul =
        round_trip_cases((arb_mac(), arb_mac(), arb_vlan(), arb_uplane(Direction::Uplink)), |(d, s, v, m)| {
            let bytes = encode_frame(&frame(d, s, v, encode_uplane(&m).unwrap())).unwrap();
            prop_assert_eq!(classify_bytes(&bytes), FrameClass::UPlaneUL);
            prop_assert_eq!(dissect(&bytes).unwrap().1, FhMessage::UPlane(m));
            Ok(())
        });
    for (name, r) in [("C-Plane", cplane), ("U-Plane DL", uplane_dl), ("U-Plane UL", uplane_ul)] {
        if let Err(e) = r {
            f.push(format!("{name} round trip: {e}"));
        }
    }

    let minimal = default_template(FrameClass::CPlaneDL).unwrap();
    expect(&mut f, minimal.wire_len == 64, format!("minimal C-Plane frame is {} wire bytes", minimal.wire_len));
    let recorded = forge_cplane_frame(
        "00:11:22:33:44:55".parse().unwrap(),
        "00:aa:bb:cc:dd:ee".parse().unwrap(),
        Direction::Downlink,
    );
    expect(
        &mut f,
        encode_frame(&recorded).ok() == Some(golden("cplane_minimal")),
        "minimal frame differs from golden bytes",
    );
    for name in ["cplane_reference", "uplane_reference"] {
        let raw = golden(name);
        let ok = dissect(&raw).ok().and_then(|(fr, m)| {
            let mut fr = fr;
            fr.payload = m.encode().ok()?;
            encode_frame(&fr).ok()
        });
        expect(&mut f, ok.as_deref() == Some(&raw[..]), format!("{name} does not re-encode to golden bytes"));
    }
    expect(&mut f, t0.elapsed().as_secs_f64() < 10.0, "runtime over 10 s");
    verdict(1, "codec conformance", &f, t0);
}

#[test]
fn criterion_2_volume_arithmetic() {
    let _g = lock();
    let t0 = Instant::now();
    let mut f = Vec::new();

    let template = default_template(FrameClass::CPlaneDL).unwrap();
    let n = build_attack_pcap(&template, 10.0, &EditSet::default()).unwrap().len();
    expect(&mut f, n == 19532, format!("10 Mbit volume built {n} packets"));

    let schedule = RateSchedule::constant(10.0, 30).unwrap();
    let (mut port, rx) = loopback_unbounded();
    let stats = run_attack(
        std::slice::from_ref(&template.record.data),
        &schedule,
        &EditSet::default(),
        &mut port,
        &TxOptions::default(),
    )
    .unwrap();
    drop(port);
    let received = meter(&rx, 30, false).total_frames();
    expect(&mut f, stats.total_frames == 585_937, format!("30 s at 10 Mbps sent {}", stats.total_frames));
    expect(&mut f, received == stats.total_frames, format!("received {received} of {}", stats.total_frames));

    // real-time pacing over a 5 s window
    let schedule = RateSchedule::constant(10.0, 5).unwrap();
    let (mut port, rx) = loopback_unbounded();
    let opts = TxOptions { clock: Clock::RealTime, ..Default::default() };
    let stats =
        run_attack(std::slice::from_ref(&template.record.data), &schedule, &EditSet::default(), &mut port, &opts)
            .unwrap();
    drop(port);
    let rep = meter(&rx, 5, false);
    let per_second = 10e6 / 512.0;
    let counts: Vec<u64> = rep.per_second.iter().map(|s| s.total_frames()).collect();
    let worst = counts.iter().map(|&c| (c as f64 - per_second).abs()).fold(0.0, f64::max);
    expect(&mut f, stats.total_frames == 97_656, format!("5 s real-time sent {}", stats.total_frames));
    expect(&mut f, rep.total_frames() == 97_656, format!("5 s real-time received {}", rep.total_frames()));
    expect(&mut f, counts.len() == 5 && worst <= 1.0, format!("per-second counts {counts:?}"));
    expect(&mut f, t0.elapsed().as_secs_f64() < 30.0, "runtime over 30 s");
    verdict(2, "volume arithmetic", &f, t0);
}

#[test]
fn criterion_3_compliance_suite() {
    let _g = lock();
    let t0 = Instant::now();
    let r = verify_tool_compliance(&VerifyOptions::default());
    let mut f: Vec<String> =
        r.failures().map(|c| format!("{} expected {} measured {}", c.name, c.expected, c.measured)).collect();
    let names: Vec<&str> = r.checks.iter().map(|c| c.name.as_str()).collect();
    for want in [
        "mac-strategy/spoofed-peer",
        "mac-strategy/random",
        "mac-strategy/broadcast",
        "tier/10Mbps/30s",
        "tier/100Mbps/30s",
        "tier/1000Mbps/30s",
        "capability/uplane-dl",
        "capability/uplane-ul",
    ] {
        expect(&mut f, names.contains(&want), format!("missing check {want}"));
    }
    let ten = r.checks.iter().find(|c| c.name == "tier/10Mbps/30s");
    expect(&mut f, ten.is_some_and(|c| c.measured.starts_with("585937 frames")), "10 Mbps tier count");
    verdict(3, "compliance suite on loopback", &f, t0);
}

#[test]
fn criterion_4_tifg_table() {
    let t0 = Instant::now();
    let mut f = Vec::new();
    for (cal, want) in [("topology1", Verdict::Pass), ("topology2", Verdict::Fail)] {
        let r = run_tifg_722(&CampaignConfig::sim(cal).unwrap()).unwrap();
        let hits = r.rows.iter().filter(|row| row.verdict == want).count();
        expect(&mut f, r.rows.len() == 6 && hits == 6, format!("{cal}: {hits}/{} {}", r.rows.len(), want.as_str()));
    }
    expect(&mut f, t0.elapsed().as_secs_f64() < 60.0, "runtime over 1 min");
    verdict(4, "six-cell C-Plane table on both topologies", &f, t0);
}

#[test]
fn criterion_5_extended_grid() {
    let t0 = Instant::now();
    let mut f = Vec::new();
    let r = run_extended_matrix(&CampaignConfig::sim("topology1").unwrap()).unwrap();
    expect(&mut f, r.rows.len() == 54, format!("{} rows", r.rows.len()));
    for row in &r.rows {
        let k = row.key;
        let want = reference_verdict(k.target, k.traffic, k.source, k.tier_mbps);
        expect(&mut f, row.verdict == want, format!("{k:?}: {} vs {}", row.verdict.as_str(), want.as_str()));
    }
    // anomaly rows
    let v = |t, tr, s, tier| r.verdict(t, tr, s, tier).unwrap();
    for tier in TIERS_MBPS {
        expect(
            &mut f,
            v(Target::Odu, TrafficType::CPlaneDL, SourceColumn::SameAsDestination, tier) == Verdict::Fail
                && v(Target::Odu, TrafficType::CPlaneDL, SourceColumn::Peer, tier) == Verdict::Pass
                && v(Target::Odu, TrafficType::CPlaneDL, SourceColumn::Random, tier) == Verdict::Pass,
            format!("C-Plane toward O-DU at {tier} Mbps should fail only with the O-DU source"),
        );
        for tr in [TrafficType::UPlaneDL, TrafficType::UPlaneUL] {
            expect(
                &mut f,
                v(Target::Odu, tr, SourceColumn::Random, tier) == Verdict::Fail,
                format!("{tr:?} random at {tier}"),
            );
        }
    }
    let same: Vec<_> =
        TIERS_MBPS.iter().map(|&t| v(Target::Odu, TrafficType::UPlaneDL, SourceColumn::SameAsDestination, t)).collect();
    expect(
        &mut f,
        same == [Verdict::Pass, Verdict::Fail, Verdict::Fail],
        format!("U-Plane DL same-as-destination {same:?}"),
    );
    expect(&mut f, t0.elapsed().as_secs_f64() < 300.0, "runtime over 5 min");
    verdict(5, "54-cell extended grid", &f, t0);
}

fn run(cfg: &TopologyConfig, target: Target, traffic: TrafficType, col: SourceColumn, tier: u32) -> SimOutcome {
    let spec = AttackSpec {
        target,
        traffic,
        src: col.strategy(cfg.node(target.peer()).mac, 0),
        tier_mbps: tier,
        duration_seconds: 30,
        dst_mac: cfg.node(target).mac,
    };
    run_scenario(cfg, Some(&spec), 0)
}

#[test]
fn criterion_6_dynamics() {
    let t0 = Instant::now();
    let mut f = Vec::new();
    let cfg = TopologyConfig::resolve("topology1").unwrap();

    // (a) random C-Plane toward the O-RU recovers at the low tiers only
    for (tier, recovers) in [(10, true), (100, true), (1000, false)] {
        let o = run(&cfg, Target::Oru, TrafficType::CPlaneDL, SourceColumn::Random, tier);
        expect(&mut f, o.first_drop_second.is_some(), format!("(a) no drop at {tier} Mbps"));
        expect(
            &mut f,
            o.recovered_second.is_some() == recovers,
            format!("(a) {tier} Mbps recovered {:?}", o.recovered_second),
        );
    }

    // (b) spoofed O-DU source toward the O-RU at 1 Gbps: neither direction recovers
    let o = run(&cfg, Target::Oru, TrafficType::CPlaneDL, SourceColumn::Peer, 1000);
    expect(&mut f, o.recovered_second.is_none(), format!("(b) recovered at {:?}", o.recovered_second));
    expect(
        &mut f,
        o.downlink.unrecovered() && o.uplink.unrecovered(),
        format!("(b) dl {:?} ul {:?}", o.downlink, o.uplink),
    );

    // (c) random U-Plane toward the O-DU drops later at 10 Mbps
    for tr in [TrafficType::UPlaneDL, TrafficType::UPlaneUL] {
        let d: Vec<Option<u32>> =
            TIERS_MBPS.iter().map(|&t| run(&cfg, Target::Odu, tr, SourceColumn::Random, t).first_drop_second).collect();
        let ok = match (d[0], d[1], d[2]) {
            (Some(a), Some(b), Some(c)) => a > b && a > c,
            _ => false,
        };
        expect(&mut f, ok, format!("(c) {tr:?} first drops {d:?}"));
    }
    verdict(6, "dynamics", &f, t0);
}

#[test]
fn criterion_7_switch_poisoning() {
    let t0 = Instant::now();
    let mut f = Vec::new();
    let (du, ru) = (MacAddress([2, 0, 0, 0, 0x0d, 1]), MacAddress([2, 0, 0, 0, 0x0e, 1]));
    let (p_du, p_ru, p_att) = (0, 1, 2);
    let aging = 300.0;
    let mut sw = SwitchModel::new(3, aging);
    let mut trace = Vec::new();
    let mut send = |sw: &mut SwitchModel, port, src, dst, t| {
        let out = sw.forward(port, src, dst, t);
        trace.push((t, port, src, dst, out.clone()));
        out
    };
    send(&mut sw, p_du, du, ru, 0);
    send(&mut sw, p_ru, ru, du, 1);
    let before = send(&mut sw, p_ru, ru, du, 2);
    send(&mut sw, p_att, du, ru, 3);
    let poisoned = send(&mut sw, p_ru, ru, du, 4);
    let t_aged = 3 + (aging * 1000.0) as u64;
    send(&mut sw, p_du, du, ru, t_aged);
    let restored = send(&mut sw, p_ru, ru, du, t_aged + 1);
    expect(&mut f, before == Forward::Port(p_du), format!("before: {before:?}"));
    expect(&mut f, poisoned == Forward::Port(p_att), format!("after spoof: {poisoned:?}"));
    expect(&mut f, restored == Forward::Port(p_du), format!("after aging: {restored:?}"));
    if !f.is_empty() {
        f.push(format!("trace {trace:?}"));
    }
    verdict(7, "switch poisoning oracle", &f, t0);
}

#[test]
fn criterion_8_determinism() {
    let t0 = Instant::now();
    let mut f = Vec::new();
    for cal in ["topology1", "topology2"] {
        for seed in [0, 42] {
            let cfg = CampaignConfig { seed, include_broadcast: true, ..CampaignConfig::sim(cal).unwrap() };
            let bytes = || {
                let mut out = Vec::new();
                emit_report(&run_extended_matrix(&cfg).unwrap(), ReportFormat::Structured, &mut out).unwrap();
                out
            };
            expect(&mut f, bytes() == bytes(), format!("{cal} seed {seed} reports differ"));
        }
    }
    let cfg = CampaignConfig::sim("topology1").unwrap();
    let key = suite_cells(Suite::Extended, false)[0];
    expect(&mut f, attack_for(&cfg, &key, 5) == attack_for(&cfg, &key, 5), "attack spec not reproducible");
    verdict(8, "determinism", &f, t0);
}
