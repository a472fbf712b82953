//! Learning L2 switch: per-frame forwarding plus a per-tick batch model used
//! by the scenario runner.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::codec::MacAddress;

pub type PortId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    port: PortId,
    last_seen_ms: u64,
    secured: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Forward {
    Port(PortId),
    Flood(Vec<PortId>),
    /// Destination resolves to the ingress port.
    DropHairpin,
    /// Source is bound to a different port.
    DropViolation,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchCounters {
    pub violations: u64,
    pub hairpin_drops: u64,
    pub flooded: u64,
    /// Sources learned through the batch model without being stored.
    pub anonymous_learned: u64,
}

/// Result of one tick of contention over a single address.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Contention {
    /// Fraction of frames destined to the address that reach the spoofing
    /// port instead of the owner.
    pub p_attacker: f64,
    /// Frames with src = dst = address from the spoofing port that still get
    /// forwarded to the owner.
    pub self_delivered: f64,
    /// Spoofed frames dropped by port security.
    pub violations: f64,
}

#[derive(Debug, Clone)]
pub struct SwitchModel {
    ports: usize,
    aging_ms: u64,
    table: HashMap<MacAddress, Entry>,
    pub counters: SwitchCounters,
}

impl SwitchModel {
    pub fn new(ports: usize, aging_seconds: f64) -> Self {
        SwitchModel {
            ports,
            aging_ms: (aging_seconds * 1000.0).round() as u64,
            table: HashMap::new(),
            counters: SwitchCounters::default(),
        }
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    /// Bind `mac` to `port` permanently.
    pub fn secure(&mut self, mac: MacAddress, port: PortId) {
        self.table.insert(mac, Entry { port, last_seen_ms: 0, secured: true });
    }

    pub fn lookup(&self, mac: MacAddress, now_ms: u64) -> Option<PortId> {
        self.table
            .get(&mac)
            .filter(|e| e.secured || now_ms.saturating_sub(e.last_seen_ms) < self.aging_ms)
            .map(|e| e.port)
    }

    pub fn entries(&self) -> usize {
        self.table.len()
    }

    fn is_violation(&self, src: MacAddress, ingress: PortId) -> bool {
        self.table.get(&src).is_some_and(|e| e.secured && e.port != ingress)
    }

    fn learn(&mut self, src: MacAddress, port: PortId, now_ms: u64) {
        if !src.is_unicast() {
            return;
        }
        match self.table.get_mut(&src) {
            Some(e) if e.secured => e.last_seen_ms = now_ms,
            _ => {
                self.table.insert(src, Entry { port, last_seen_ms: now_ms, secured: false });
            }
        }
    }

    /// Forward one frame. The destination is looked up before the source is
    /// learned.
    pub fn forward(&mut self, ingress: PortId, src: MacAddress, dst: MacAddress, now_ms: u64) -> Forward {
        if self.is_violation(src, ingress) {
            self.counters.violations += 1;
            return Forward::DropViolation;
        }
        let out = match (dst.is_unicast(), self.lookup(dst, now_ms)) {
            (true, Some(p)) if p == ingress => {
                self.counters.hairpin_drops += 1;
                Forward::DropHairpin
            }
            (true, Some(p)) => Forward::Port(p),
            _ => {
                self.counters.flooded += 1;
                Forward::Flood((0..self.ports).filter(|&p| p != ingress).collect())
            }
        };
        self.learn(src, ingress, now_ms);
        out
    }

    /// One tick in which `spoofs` frames carrying `addr` as source arrive on
    /// `spoof_port` interleaved with `refreshes` frames from the owner on
    /// `owner_port`.
    pub fn contend(
        &mut self,
        addr: MacAddress,
        owner_port: PortId,
        spoof_port: PortId,
        spoofs: f64,
        refreshes: f64,
        now_ms: u64,
    ) -> Contention {
        if spoofs > 0.0 && self.is_violation(addr, spoof_port) {
            self.counters.violations += spoofs.round() as u64;
            if refreshes > 0.0 {
                self.learn(addr, owner_port, now_ms);
            }
            return Contention { violations: spoofs, ..Default::default() };
        }
        let p0 = self.lookup(addr, now_ms);
        let p0_att = (p0 == Some(spoof_port)) as u8 as f64;
        let p0_real = (p0 == Some(owner_port)) as u8 as f64;
        let n = spoofs + refreshes + 1.0;
        let c = Contention {
            p_attacker: (spoofs + p0_att) / n,
            self_delivered: spoofs * (refreshes + p0_real) / n,
            violations: 0.0,
        };
        if spoofs > 0.0 && spoofs >= refreshes {
            self.learn(addr, spoof_port, now_ms);
        } else if refreshes > 0.0 {
            self.learn(addr, owner_port, now_ms);
        }
        c
    }

    /// Count sources that would be learned without storing each one.
    pub fn learn_anonymous(&mut self, n: u64) {
        self.counters.anonymous_learned += n;
    }
}
