//! Campaign suites and their result matrices.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::live::{run_live_cell, LiveTarget};
use super::CampaignError;
use crate::attack::{AttackSpec, SourceColumn, Target, TrafficType, DEFAULT_ATTACK_SECONDS, TIERS_MBPS};
use crate::codec::MacAddress;
use crate::sim::{run_scenario, Severity, SimOutcome, TopologyConfig, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Tifg722,
    Extended,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tifg722" | "tifg-722" => Ok(Suite::Tifg722),
            "extended" => Ok(Suite::Extended),
            _ => Err(format!("unknown suite '{s}' (expected tifg722 or extended)")),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Tifg722 => "tifg722",
            Suite::Extended => "extended",
        })
    }
}

/// Where cells execute.
#[derive(Debug, Clone)]
pub enum Backend {
    Sim { config: Box<TopologyConfig>, calibration: String },
    Port(LiveTarget),
}

impl Backend {
    /// `sim:<calibration>` or `port:<ifname>`. Live targets still need their
    /// node addresses and authorization filled in.
    pub fn parse(s: &str) -> Result<Self, CampaignError> {
        if let Some(cal) = s.strip_prefix("sim:") {
            let config = TopologyConfig::resolve(cal)?;
            Ok(Backend::Sim { config: Box::new(config), calibration: cal.to_string() })
        } else if let Some(ifname) = s.strip_prefix("port:") {
            Ok(Backend::Port(LiveTarget::new(ifname)))
        } else {
            Err(CampaignError::BadBackend(s.to_string()))
        }
    }

    pub fn label(&self) -> String {
        match self {
            Backend::Sim { calibration, .. } => format!("sim:{calibration}"),
            Backend::Port(t) => format!("port:{}", t.ifname),
        }
    }

    fn node_mac(&self, t: Target) -> MacAddress {
        match self {
            Backend::Sim { config, .. } => config.node(t).mac,
            Backend::Port(l) => match t {
                Target::Odu => l.odu_mac,
                Target::Oru => l.oru_mac,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub backend: Backend,
    pub seed: u64,
    /// Sim only: each cell is rerun with seeds `seed..seed + repeats`.
    pub repeats: u32,
    pub include_broadcast: bool,
    pub attack_seconds: u32,
    pub parallel: bool,
}

impl CampaignConfig {
    pub fn new(backend: Backend) -> Self {
        CampaignConfig {
            backend,
            seed: 0,
            repeats: 1,
            include_broadcast: false,
            attack_seconds: DEFAULT_ATTACK_SECONDS,
            parallel: true,
        }
    }

    pub fn sim(calibration: &str) -> Result<Self, CampaignError> {
        Ok(Self::new(Backend::parse(&format!("sim:{calibration}"))?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub target: Target,
    pub traffic: TrafficType,
    pub source: SourceColumn,
    pub tier_mbps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRow {
    #[serde(flatten)]
    pub key: CellKey,
    pub verdict: Verdict,
    pub severity: Severity,
    pub first_drop_second: Option<u32>,
    pub recovered_second: Option<u32>,
    /// Share of repeats agreeing with `verdict`.
    pub stability: f64,
    /// Cells without a reference measurement to compare against.
    pub no_ground_truth: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcome: Option<SimOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub suite: Suite,
    pub backend: String,
    pub seed: u64,
    pub repeats: u32,
    pub attack_seconds: u32,
    pub rows: Vec<MatrixRow>,
}

impl MatrixReport {
    pub fn get(&self, key: &CellKey) -> Option<&MatrixRow> {
        self.rows.iter().find(|r| &r.key == key)
    }

    pub fn verdict(&self, target: Target, traffic: TrafficType, source: SourceColumn, tier: u32) -> Option<Verdict> {
        self.get(&CellKey { target, traffic, source, tier_mbps: tier }).map(|r| r.verdict)
    }
}

/// Cells of a suite in report order.
pub fn suite_cells(suite: Suite, include_broadcast: bool) -> Vec<CellKey> {
    let mut out = Vec::new();
    match suite {
        Suite::Tifg722 => {
            for source in [SourceColumn::Peer, SourceColumn::Random] {
                for tier in TIERS_MBPS {
                    out.push(CellKey { target: Target::Odu, traffic: TrafficType::CPlaneDL, source, tier_mbps: tier });
                }
            }
        }
        Suite::Extended => {
            let mut sources = SourceColumn::MATRIX.to_vec();
            if include_broadcast {
                sources.push(SourceColumn::Broadcast);
            }
            for target in Target::ALL {
                for traffic in TrafficType::ALL {
                    for &source in &sources {
                        for tier in TIERS_MBPS {
                            out.push(CellKey { target, traffic, source, tier_mbps: tier });
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn attack_for(cfg: &CampaignConfig, key: &CellKey, seed: u64) -> AttackSpec {
    let dst = cfg.backend.node_mac(key.target);
    let peer = cfg.backend.node_mac(key.target.peer());
    AttackSpec {
        target: key.target,
        traffic: key.traffic,
        src: key.source.strategy(peer, seed),
        tier_mbps: key.tier_mbps,
        duration_seconds: cfg.attack_seconds,
        dst_mac: dst,
    }
}

fn sim_row(cfg: &CampaignConfig, topo: &TopologyConfig, key: CellKey) -> MatrixRow {
    let repeats = cfg.repeats.max(1);
    let outcomes: Vec<SimOutcome> = (0..repeats as u64)
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r);
            run_scenario(topo, Some(&attack_for(cfg, &key, seed)), seed)
        })
        .collect();
    let rep = &outcomes[0];
    let agree = outcomes.iter().filter(|o| o.verdict == rep.verdict).count();
    MatrixRow {
        key,
        verdict: rep.verdict,
        severity: rep.severity,
        first_drop_second: rep.first_drop_second,
        recovered_second: rep.recovered_second,
        stability: agree as f64 / repeats as f64,
        no_ground_truth: key.source == SourceColumn::Broadcast,
        outcome: Some(rep.clone()),
    }
}

pub fn run_cells(cfg: &CampaignConfig, suite: Suite, cells: &[CellKey]) -> Result<MatrixReport, CampaignError> {
    let rows = match &cfg.backend {
        Backend::Sim { config, .. } => {
            if cfg.parallel {
                cells.par_iter().map(|k| sim_row(cfg, config, *k)).collect()
            } else {
                cells.iter().map(|k| sim_row(cfg, config, *k)).collect()
            }
        }
        Backend::Port(live) => {
            live.authorize()?;
            let mut rows = Vec::with_capacity(cells.len());
            for key in cells {
                let spec = attack_for(cfg, key, cfg.seed);
                let r = run_live_cell(live, &spec)?;
                rows.push(MatrixRow {
                    key: *key,
                    verdict: r.verdict,
                    severity: r.severity,
                    first_drop_second: r.first_drop_second,
                    recovered_second: r.recovered_second,
                    stability: 1.0,
                    no_ground_truth: key.source == SourceColumn::Broadcast,
                    outcome: None,
                });
            }
            rows
        }
    };
    Ok(MatrixReport {
        suite,
        backend: cfg.backend.label(),
        seed: cfg.seed,
        repeats: cfg.repeats.max(1),
        attack_seconds: cfg.attack_seconds,
        rows,
    })
}

/// Six C-Plane DL cells toward the O-DU: {spoofed O-RU, random} × three tiers.
pub fn run_tifg_722(cfg: &CampaignConfig) -> Result<MatrixReport, CampaignError> {
    run_cells(cfg, Suite::Tifg722, &suite_cells(Suite::Tifg722, false))
}

/// 54 cells, plus 18 broadcast-source cells when requested.
pub fn run_extended_matrix(cfg: &CampaignConfig) -> Result<MatrixReport, CampaignError> {
    run_cells(cfg, Suite::Extended, &suite_cells(Suite::Extended, cfg.include_broadcast))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_sizes_and_unique_keys() {
        assert_eq!(suite_cells(Suite::Tifg722, false).len(), 6);
        assert_eq!(suite_cells(Suite::Extended, false).len(), 54);
        let with_b = suite_cells(Suite::Extended, true);
        assert_eq!(with_b.len(), 72);
        let mut sorted = with_b.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 72);
    }

    #[test]
    fn backend_parsing() {
        assert!(matches!(Backend::parse("sim:topology1.cfg"), Ok(Backend::Sim { .. })));
        assert!(matches!(Backend::parse("port:eth9"), Ok(Backend::Port(_))));
        assert!(matches!(Backend::parse("carrier-pigeon"), Err(CampaignError::BadBackend(_))));
        assert!(Backend::parse("sim:nope.cfg").is_err());
    }

    #[test]
    fn live_backend_needs_authorization() {
        let cfg = CampaignConfig::new(Backend::parse("port:lo").unwrap());
        assert!(matches!(run_tifg_722(&cfg), Err(CampaignError::Unauthorized)));
    }

    #[test]
    fn spec_addresses_follow_topology() {
        let cfg = CampaignConfig::sim("topology1.cfg").unwrap();
        let key =
            CellKey { target: Target::Oru, traffic: TrafficType::UPlaneUL, source: SourceColumn::Peer, tier_mbps: 100 };
        let a = attack_for(&cfg, &key, 0);
        let Backend::Sim { config, .. } = &cfg.backend else { unreachable!() };
        assert_eq!(a.dst_mac, config.oru.mac);
        assert_eq!(a.src, crate::addr::SourceMacStrategy::SpoofedPeer(config.odu.mac));
        assert_eq!(a.duration_seconds, 30);
    }
}
