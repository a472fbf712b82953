//! Attack configuration shared by the simulator and the campaign runner.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::addr::SourceMacStrategy;
use crate::codec::{FrameClass, MacAddress};
use crate::forge::min_wire_len;

pub const DEFAULT_ATTACK_SECONDS: u32 = 30;
pub const TIERS_MBPS: [u32; 3] = [10, 100, 1000];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Odu,
    Oru,
}

impl Target {
    pub const ALL: [Target; 2] = [Target::Odu, Target::Oru];

    pub fn peer(self) -> Target {
        match self {
            Target::Odu => Target::Oru,
            Target::Oru => Target::Odu,
        }
    }

    /// Node name used in calibration files.
    pub fn node_name(self) -> &'static str {
        match self {
            Target::Odu => "odu",
            Target::Oru => "oru",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Target::Odu => "O-DU",
            Target::Oru => "O-RU",
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Target {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "odu" => Ok(Target::Odu),
            "oru" => Ok(Target::Oru),
            _ => Err(format!("unknown target '{s}' (expected odu or oru)")),
        }
    }
}

/// The three forged message types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrafficType {
    #[serde(rename = "cplane-dl")]
    CPlaneDL,
    #[serde(rename = "uplane-dl")]
    UPlaneDL,
    #[serde(rename = "uplane-ul")]
    UPlaneUL,
}

impl TrafficType {
    pub const ALL: [TrafficType; 3] = [TrafficType::CPlaneDL, TrafficType::UPlaneDL, TrafficType::UPlaneUL];

    pub fn class(self) -> FrameClass {
        match self {
            TrafficType::CPlaneDL => FrameClass::CPlaneDL,
            TrafficType::UPlaneDL => FrameClass::UPlaneDL,
            TrafficType::UPlaneUL => FrameClass::UPlaneUL,
        }
    }

    /// Wire size of the default attack template.
    pub fn frame_wire_len(self) -> usize {
        min_wire_len(self.class()).expect("fronthaul class")
    }

    pub fn label(self) -> &'static str {
        match self {
            TrafficType::CPlaneDL => "C-Plane DL",
            TrafficType::UPlaneDL => "U-Plane DL",
            TrafficType::UPlaneUL => "U-Plane UL",
        }
    }
}

impl fmt::Display for TrafficType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Source-address column of the result matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceColumn {
    /// The target's fronthaul peer.
    Peer,
    Random,
    SameAsDestination,
    Broadcast,
}

impl SourceColumn {
    pub const MATRIX: [SourceColumn; 3] = [SourceColumn::Peer, SourceColumn::Random, SourceColumn::SameAsDestination];

    pub fn strategy(self, peer_mac: MacAddress, seed: u64) -> SourceMacStrategy {
        match self {
            SourceColumn::Peer => SourceMacStrategy::SpoofedPeer(peer_mac),
            SourceColumn::Random => SourceMacStrategy::RandomPerPacket(seed),
            SourceColumn::SameAsDestination => SourceMacStrategy::SameAsDestination,
            SourceColumn::Broadcast => SourceMacStrategy::Broadcast,
        }
    }

    pub fn label(self, target: Target) -> String {
        match self {
            SourceColumn::Peer => format!("{} MAC", target.peer().label()),
            SourceColumn::Random => "Random MACs".to_string(),
            SourceColumn::SameAsDestination => format!("{} MAC", target.label()),
            SourceColumn::Broadcast => "Broadcast".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub target: Target,
    pub traffic: TrafficType,
    pub src: SourceMacStrategy,
    pub tier_mbps: u32,
    pub duration_seconds: u32,
    pub dst_mac: MacAddress,
}

impl AttackSpec {
    pub fn frame_bits(&self) -> u64 {
        self.traffic.frame_wire_len() as u64 * 8
    }
}
