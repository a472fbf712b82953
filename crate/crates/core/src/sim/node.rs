//! Victim nodes: per-plane processing budgets, flow state and failure
//! mechanisms.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::config::{Acceptance, NodeConfig, Plane};
use crate::codec::MacAddress;

pub const TICKS_PER_SECOND: u32 = 10;
pub const TICK_MS: u64 = 100;
/// Ticks a restart condition has to persist.
pub const SUSTAIN_TICKS: u32 = 3 * TICKS_PER_SECOND;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NodeState {
    Up,
    Degraded,
    Restarting,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cause {
    /// Misdelivered share of legit frames above threshold.
    Misdelivery,
    Overload,
    FlowExhaustion,
    SelfSource,
    /// Flow lost for good after too many misdelivered frames.
    StuckFlow,
}

/// Source of the attack frames reaching a plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackSource {
    Own,
    Peer,
    Fixed(MacAddress),
    /// A fresh address per frame.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlaneInput {
    /// Legit frames from the peer delivered to this node.
    pub legit: f64,
    /// Legit frames that were addressed here but went elsewhere.
    pub misdelivered: f64,
    pub attack: f64,
    pub attack_src: Option<AttackSource>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeTick {
    /// Legit frames actually processed per plane.
    pub processed: [f64; 3],
    pub degraded: Vec<(Plane, Cause)>,
    pub restart: Option<(Plane, Cause)>,
}

#[derive(Debug, Clone, Default)]
struct PlaneState {
    known_sources: BTreeSet<MacAddress>,
    anonymous_sources: u64,
    overload_streak: u32,
    fault_streak: u32,
    misdelivered_total: f64,
    stuck: bool,
}

impl PlaneState {
    fn flows(&self) -> u64 {
        self.known_sources.len() as u64 + self.anonymous_sources
    }

    fn reset_volatile(&mut self) {
        self.known_sources.clear();
        self.anonymous_sources = 0;
        self.overload_streak = 0;
        self.fault_streak = 0;
    }
}

#[derive(Debug, Clone)]
pub struct NodeSim {
    pub cfg: NodeConfig,
    pub peer_mac: MacAddress,
    state: NodeState,
    restart_left: u32,
    planes: [PlaneState; 3],
    pub restarts: u32,
}

impl NodeSim {
    pub fn new(cfg: NodeConfig, peer_mac: MacAddress) -> Self {
        NodeSim { cfg, peer_mac, state: NodeState::Up, restart_left: 0, planes: Default::default(), restarts: 0 }
    }

    pub fn state(&self) -> NodeState {
        self.state
    }

    /// Up or degraded: the node sends and processes traffic.
    pub fn running(&self) -> bool {
        matches!(self.state, NodeState::Up | NodeState::Degraded)
    }

    pub fn flows(&self, p: Plane) -> u64 {
        self.planes[p.index()].flows()
    }

    pub fn stuck(&self, p: Plane) -> bool {
        self.planes[p.index()].stuck
    }

    /// Advance one tick.
    pub fn tick(&mut self, inputs: &[PlaneInput; 3]) -> NodeTick {
        let mut out = NodeTick::default();
        match self.state {
            NodeState::Down => return out,
            NodeState::Restarting => {
                self.restart_left = self.restart_left.saturating_sub(1);
                if self.restart_left == 0 {
                    self.state = NodeState::Up;
                }
                // misdelivery still accrues while the node is away
                for (st, inp) in self.planes.iter_mut().zip(inputs) {
                    st.misdelivered_total += inp.misdelivered;
                }
                return out;
            }
            _ => {}
        }

        for p in Plane::ALL {
            let pol = &self.cfg.planes[p.index()];
            let st = &mut self.planes[p.index()];
            let inp = &inputs[p.index()];

            // M4: own address arriving from outside
            let fault = pol.self_source_fault && inp.attack_src == Some(AttackSource::Own) && inp.attack > 0.0;
            if fault {
                out.degraded.push((p, Cause::SelfSource));
                st.fault_streak += 1;
                if st.fault_streak >= SUSTAIN_TICKS {
                    out.restart.get_or_insert((p, Cause::SelfSource));
                }
            } else {
                st.fault_streak = 0;
            }

            let accepted_attack = match (pol.accept, inp.attack_src) {
                (_, None) => 0.0,
                (Acceptance::Any, _) | (Acceptance::PeerOnly, Some(AttackSource::Peer)) => inp.attack,
                (Acceptance::PeerOnly, _) => 0.0,
            };
            let rejected = inp.attack - accepted_attack;

            // M3: per-source flow state
            if let Some(cap) = pol.flow_capacity {
                if inp.legit > 0.0 {
                    st.known_sources.insert(self.peer_mac);
                }
                if accepted_attack > 0.0 {
                    match inp.attack_src {
                        Some(AttackSource::Own) => {
                            st.known_sources.insert(self.cfg.mac);
                        }
                        Some(AttackSource::Peer) => {
                            st.known_sources.insert(self.peer_mac);
                        }
                        Some(AttackSource::Fixed(m)) => {
                            st.known_sources.insert(m);
                        }
                        Some(AttackSource::Random) => st.anonymous_sources += accepted_attack.round() as u64,
                        None => {}
                    }
                }
                if st.flows() > cap {
                    out.degraded.push((p, Cause::FlowExhaustion));
                    out.restart.get_or_insert((p, Cause::FlowExhaustion));
                }
            }

            // M2: processing budget
            let budget = pol.budget_per_second / TICKS_PER_SECOND as f64;
            let demand = (inp.legit + accepted_attack) * pol.cost + rejected * pol.reject_cost;
            let share = if demand > budget { budget / demand } else { 1.0 };
            if demand > budget {
                out.degraded.push((p, Cause::Overload));
            }
            if demand >= pol.restart_ratio * budget {
                st.overload_streak += 1;
                if st.overload_streak >= SUSTAIN_TICKS {
                    out.restart.get_or_insert((p, Cause::Overload));
                }
            } else {
                st.overload_streak = 0;
            }

            // M1 and M5: misdelivery of legit frames
            let addressed = inp.legit + inp.misdelivered;
            if addressed > 0.0 && inp.misdelivered / addressed > pol.theta {
                out.degraded.push((p, Cause::Misdelivery));
            }
            st.misdelivered_total += inp.misdelivered;
            if pol.stickiness.is_some_and(|s| st.misdelivered_total > s as f64) {
                st.stuck = true;
            }
            if st.stuck && addressed > 0.0 {
                out.degraded.push((p, Cause::StuckFlow));
            }

            out.processed[p.index()] = if st.stuck { 0.0 } else { inp.legit * share };
        }

        if out.restart.is_some() {
            self.restarts += 1;
            for st in &mut self.planes {
                st.reset_volatile();
            }
            match self.cfg.restart_seconds {
                Some(s) if s > 0 => {
                    self.state = NodeState::Restarting;
                    self.restart_left = s * TICKS_PER_SECOND;
                }
                Some(_) => self.state = NodeState::Up,
                None => self.state = NodeState::Down,
            }
        } else {
            self.state = if out.degraded.is_empty() { NodeState::Up } else { NodeState::Degraded };
        }
        out
    }
}
