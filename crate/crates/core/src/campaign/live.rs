//! Cells executed against a real interface. Guarded: nothing is transmitted
//! without explicit authorization, and group destinations are refused unless
//! asked for.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::CampaignError;
use crate::attack::AttackSpec;
use crate::codec::{FrameClass, MacAddress};
use crate::forge::{default_template, EditSet};
use crate::rx::{meter_raw, DEFAULT_BASELINE_SECONDS, DEFAULT_DROP_FRACTION};
use crate::sim::{Severity, Verdict};
use crate::tx::{run_attack, Clock, RateSchedule, RawLinkPort, TxOptions};

pub const LIVE_POST_SECONDS: u32 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiveTarget {
    pub ifname: String,
    pub odu_mac: MacAddress,
    pub oru_mac: MacAddress,
    pub authorized: bool,
    pub allow_broadcast_dst: bool,
}

impl LiveTarget {
    pub fn new(ifname: &str) -> Self {
        LiveTarget {
            ifname: ifname.to_string(),
            odu_mac: MacAddress::ZERO,
            oru_mac: MacAddress::ZERO,
            authorized: false,
            allow_broadcast_dst: false,
        }
    }

    pub fn authorize(&self) -> Result<(), CampaignError> {
        if !self.authorized {
            return Err(CampaignError::Unauthorized);
        }
        for m in [self.odu_mac, self.oru_mac] {
            if m == MacAddress::ZERO {
                return Err(CampaignError::MissingAddress);
            }
            guard_destination(m, self.allow_broadcast_dst)?;
        }
        Ok(())
    }
}

/// Refuse group destinations on a live port unless explicitly allowed.
pub fn guard_destination(dst: MacAddress, allow_group: bool) -> Result<(), CampaignError> {
    if dst.is_multicast() && !allow_group {
        return Err(CampaignError::BroadcastDestination(dst));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveCellResult {
    pub verdict: Verdict,
    pub severity: Severity,
    pub first_drop_second: Option<u32>,
    pub recovered_second: Option<u32>,
    pub frames_sent: u64,
}

/// Meter the link for baseline + attack + post while transmitting the attack
/// after the baseline. Verdicts come from legit U-Plane throughput seen on the
/// interface; frames this host sends are excluded.
pub fn run_live_cell(live: &LiveTarget, spec: &AttackSpec) -> Result<LiveCellResult, CampaignError> {
    live.authorize()?;
    guard_destination(spec.dst_mac, live.allow_broadcast_dst)?;
    let baseline = DEFAULT_BASELINE_SECONDS as u32;
    let total = baseline + spec.duration_seconds + LIVE_POST_SECONDS;

    let mut rx = RawLinkPort::open(&live.ifname)?.inbound_only();
    let mut tx = RawLinkPort::open(&live.ifname)?;
    let template = default_template(spec.traffic.class())?;
    let edits = EditSet::default().with_src(spec.src).with_dst(spec.dst_mac);
    let schedule = RateSchedule::constant(spec.tier_mbps as f64, spec.duration_seconds)?;

    let metering = std::thread::spawn(move || meter_raw(&mut rx, total, false));
    std::thread::sleep(Duration::from_secs(baseline as u64));
    let opts = TxOptions { clock: Clock::RealTime, progress: None };
    let sent = run_attack(&[template.record.data], &schedule, &edits, &mut tx, &opts);
    let mut report = metering.join().map_err(|_| CampaignError::MeterThread)??;
    let sent = sent?;

    let legit = [FrameClass::UPlaneDL, FrameClass::UPlaneUL];
    if report.bits_series(&legit).iter().take(baseline as usize).all(|&b| b == 0) {
        return Err(CampaignError::NoBaseline);
    }
    report.detect(&legit, baseline as usize, DEFAULT_DROP_FRACTION);
    let severity = match (report.first_drop_second, report.recovered_second) {
        (None, _) => Severity::None,
        (Some(_), Some(_)) => Severity::DegradedRecovered,
        (Some(_), None) => Severity::DegradedUnrecovered,
    };
    Ok(LiveCellResult {
        verdict: if severity == Severity::None { Verdict::Pass } else { Verdict::Fail },
        severity,
        first_drop_second: report.first_drop_second,
        recovered_second: report.recovered_second,
        frames_sent: sent.total_frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refuses_without_flag() {
        let mut t = LiveTarget::new("lo");
        t.odu_mac = "02:00:00:00:00:01".parse().unwrap();
        t.oru_mac = "02:00:00:00:00:02".parse().unwrap();
        assert!(matches!(t.authorize(), Err(CampaignError::Unauthorized)));
        t.authorized = true;
        assert!(t.authorize().is_ok());
    }

    #[test]
    fn refuses_group_destinations() {
        let mut t = LiveTarget::new("lo");
        t.authorized = true;
        t.odu_mac = MacAddress::BROADCAST;
        t.oru_mac = "02:00:00:00:00:02".parse().unwrap();
        assert!(matches!(t.authorize(), Err(CampaignError::BroadcastDestination(_))));
        t.allow_broadcast_dst = true;
        assert!(t.authorize().is_ok());
        assert!(guard_destination("01:00:5e:00:00:01".parse().unwrap(), false).is_err());
    }

    #[test]
    fn needs_addresses() {
        let mut t = LiveTarget::new("lo");
        t.authorized = true;
        assert!(matches!(t.authorize(), Err(CampaignError::MissingAddress)));
    }
}
