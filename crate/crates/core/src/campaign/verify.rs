//! Self-checks of the transmit path over the in-process loopback.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::addr::SourceMacStrategy;
use crate::attack::TIERS_MBPS;
use crate::codec::{FrameClass, MacAddress};
use crate::forge::{default_template, EditSet};
use crate::rx::{meter, MeterReport};
use crate::tx::{loopback, run_attack, RateSchedule, ScheduleError, TxOptions, TxStats};

const CHECK_DST: MacAddress = MacAddress([0x02, 0, 0, 0, 0x0d, 0x01]);
const CHECK_PEER: MacAddress = MacAddress([0x02, 0, 0, 0, 0x0e, 0x01]);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub expected: String,
    pub measured: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub checks: Vec<CheckResult>,
}

impl ComplianceReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn write_text(&self, mut w: impl Write) -> io::Result<()> {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(w, "{tag} {:<32} expected {:<28} measured {}", c.name, c.expected, c.measured)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Length of each tier check.
    pub tier_seconds: u32,
    pub tiers: Vec<u32>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { tier_seconds: 30, tiers: TIERS_MBPS.to_vec() }
    }
}

/// Transmit over a bounded loopback while a second thread meters it.
fn send_and_meter(
    class: FrameClass,
    edits: &EditSet,
    mbps: f64,
    seconds: u32,
    track: bool,
) -> Result<(TxStats, MeterReport), ScheduleError> {
    let template = default_template(class).expect("fronthaul class");
    let schedule = RateSchedule::constant(mbps, seconds)?;
    let (mut port, rx) = loopback(crate::tx::port::LOOPBACK_QUEUE_BATCHES);
    let h = std::thread::spawn(move || meter(&rx, seconds, track));
    let stats = run_attack(&[template.record.data], &schedule, edits, &mut port, &TxOptions::default())
        .expect("loopback never rejects");
    drop(port);
    Ok((stats, h.join().expect("meter thread")))
}

fn check(
    name: impl Into<String>,
    passed: bool,
    expected: impl Into<String>,
    measured: impl Into<String>,
) -> CheckResult {
    CheckResult { name: name.into(), passed, expected: expected.into(), measured: measured.into() }
}

fn mac_strategy_checks(out: &mut Vec<CheckResult>) {
    let strategies = [
        ("spoofed-peer", SourceMacStrategy::SpoofedPeer(CHECK_PEER)),
        ("random", SourceMacStrategy::RandomPerPacket(crate::addr::DEFAULT_RANDOM_SEED)),
        ("broadcast", SourceMacStrategy::Broadcast),
        ("same-as-destination", SourceMacStrategy::SameAsDestination),
    ];
    for (name, strat) in strategies {
        let edits = EditSet::default().with_src(strat).with_dst(CHECK_DST);
        let (stats, rep) = send_and_meter(FrameClass::CPlaneDL, &edits, 1.0, 1, true).expect("fixed schedule");
        let sources: BTreeMap<MacAddress, u64> = rep.sources.clone().unwrap_or_default();
        let n = rep.total_frames();
        let (passed, expected, measured) = match strat {
            SourceMacStrategy::RandomPerPacket(_) => {
                let distinct = sources.len() as u64;
                let ok = n == stats.total_frames
                    && distinct * 100 >= n * 99
                    && sources.keys().all(|m| m.is_unicast() && *m != CHECK_DST);
                (ok, format!("≥99% distinct of {}", stats.total_frames), format!("{distinct} distinct of {n}"))
            }
            _ => {
                let want = strat.source_for(CHECK_DST, 0);
                let hits = sources.get(&want).copied().unwrap_or(0);
                (n == stats.total_frames && hits == n, format!("100% src {want}"), format!("{hits}/{n}"))
            }
        };
        out.push(check(format!("mac-strategy/{name}"), passed, expected, measured));
    }
}

fn tier_checks(opts: &VerifyOptions, out: &mut Vec<CheckResult>) {
    let bits = default_template(FrameClass::CPlaneDL).expect("template").wire_len as u64 * 8;
    for &tier in &opts.tiers {
        let name = format!("tier/{}Mbps/{}s", tier, opts.tier_seconds);
        let (stats, rep) =
            match send_and_meter(FrameClass::CPlaneDL, &EditSet::default(), tier as f64, opts.tier_seconds, false) {
                Ok(r) => r,
                Err(e) => {
                    out.push(check(name, false, "a valid schedule", e.to_string()));
                    continue;
                }
            };
        let expected_total = tier as u64 * 1_000_000 * opts.tier_seconds as u64 / bits;
        let per_second = tier as f64 * 1e6 / bits as f64;
        let counts: Vec<u64> = rep.per_second.iter().map(|s| s.get(FrameClass::CPlaneDL).frames).collect();
        let worst = counts.iter().map(|&c| (c as f64 - per_second).abs()).fold(0.0, f64::max);
        let passed = rep.total_frames() == expected_total
            && stats.total_frames == expected_total
            && counts.len() == opts.tier_seconds as usize
            && worst <= 1.0;
        out.push(check(
            name,
            passed,
            format!("{expected_total} frames, ±1/s"),
            format!("{} frames, max dev {worst:.3}/s", rep.total_frames()),
        ));
    }
}

fn uplane_checks(out: &mut Vec<CheckResult>) {
    for class in [FrameClass::UPlaneDL, FrameClass::UPlaneUL] {
        let (stats, rep) = send_and_meter(class, &EditSet::default(), 10.0, 1, false).expect("fixed schedule");
        let got = rep.total(class).frames;
        let passed = got > 0 && got == rep.total_frames() && got == stats.total_frames;
        out.push(check(
            format!("capability/{class}"),
            passed,
            format!("100% {class}"),
            format!("{got}/{}", rep.total_frames()),
        ));
    }
}

pub fn verify_tool_compliance(opts: &VerifyOptions) -> ComplianceReport {
    let mut checks = Vec::new();
    mac_strategy_checks(&mut checks);
    tier_checks(opts, &mut checks);
    uplane_checks(&mut checks);
    ComplianceReport { checks }
}
