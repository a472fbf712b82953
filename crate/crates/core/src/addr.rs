//! Source-address strategies for attack traffic.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::MacAddress;

pub const DEFAULT_RANDOM_SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid source strategy '{0}': expected spoof:<mac>, random[:seed], broadcast, same-as-dst or fixed:<mac>")]
pub struct StrategyParseError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum SourceMacStrategy {
    /// Impersonate a fronthaul peer.
    SpoofedPeer(MacAddress),
    /// Fresh locally administered unicast address per packet.
    RandomPerPacket(u64),
    Broadcast,
    SameAsDestination,
    Fixed(MacAddress),
}

impl SourceMacStrategy {
    pub fn is_per_packet(&self) -> bool {
        matches!(self, SourceMacStrategy::RandomPerPacket(_))
    }

    pub fn source_for(&self, dst: MacAddress, packet_index: u64) -> MacAddress {
        self.source_for_excluding(dst, packet_index, &[])
    }

    /// Like [`source_for`](Self::source_for), but random draws also avoid
    /// `exclude` (typically the victim and peer addresses).
    pub fn source_for_excluding(&self, dst: MacAddress, packet_index: u64, exclude: &[MacAddress]) -> MacAddress {
        match *self {
            SourceMacStrategy::SpoofedPeer(m) | SourceMacStrategy::Fixed(m) => m,
            SourceMacStrategy::Broadcast => MacAddress::BROADCAST,
            SourceMacStrategy::SameAsDestination => dst,
            SourceMacStrategy::RandomPerPacket(seed) => random_unicast(seed, packet_index, dst, exclude),
        }
    }
}

/// Counter-based draw: the ChaCha stream is the packet index, so any index can
/// be computed without replaying the ones before it.
pub fn random_unicast(seed: u64, packet_index: u64, dst: MacAddress, exclude: &[MacAddress]) -> MacAddress {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(packet_index);
    loop {
        let v = rng.next_u64().to_be_bytes();
        let mut o = [v[0], v[1], v[2], v[3], v[4], v[5]];
        o[0] = (o[0] & 0xfc) | 0x02;
        let m = MacAddress(o);
        if m != dst && !exclude.contains(&m) {
            return m;
        }
    }
}

impl fmt::Display for SourceMacStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceMacStrategy::SpoofedPeer(m) => write!(f, "spoof:{m}"),
            SourceMacStrategy::RandomPerPacket(seed) => write!(f, "random:{seed}"),
            SourceMacStrategy::Broadcast => f.write_str("broadcast"),
            SourceMacStrategy::SameAsDestination => f.write_str("same-as-dst"),
            SourceMacStrategy::Fixed(m) => write!(f, "fixed:{m}"),
        }
    }
}

impl FromStr for SourceMacStrategy {
    type Err = StrategyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || StrategyParseError(s.to_string());
        let (kind, arg) = match s.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (s, None),
        };
        let mac = |a: Option<&str>| a.ok_or_else(err)?.parse::<MacAddress>().map_err(|_| err());
        Ok(match kind {
            "spoof" => SourceMacStrategy::SpoofedPeer(mac(arg)?),
            "fixed" => SourceMacStrategy::Fixed(mac(arg)?),
            "random" => match arg {
                None => SourceMacStrategy::RandomPerPacket(DEFAULT_RANDOM_SEED),
                Some(a) => SourceMacStrategy::RandomPerPacket(parse_seed(a).ok_or_else(err)?),
            },
            "broadcast" if arg.is_none() => SourceMacStrategy::Broadcast,
            "same-as-dst" if arg.is_none() => SourceMacStrategy::SameAsDestination,
            _ => return Err(err()),
        })
    }
}

fn parse_seed(s: &str) -> Option<u64> {
    match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16).ok(),
        None => s.parse().ok(),
    }
}
