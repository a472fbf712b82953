//! Tick-driven scenario: baseline, attack window, post-attack observation.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{Plane, TopologyConfig};
use super::node::{AttackSource, Cause, NodeSim, NodeState, PlaneInput, TICKS_PER_SECOND, TICK_MS};
use super::switch::{PortId, SwitchModel};
use crate::addr::SourceMacStrategy;
use crate::attack::{AttackSpec, Target, TrafficType};
use crate::codec::MacAddress;
use crate::rx::{baseline_of, detect_drop_and_recovery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    None,
    DegradedRecovered,
    DegradedUnrecovered,
    CrashRestart,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionOutcome {
    pub first_drop_second: Option<u32>,
    pub recovered_second: Option<u32>,
}

impl DirectionOutcome {
    pub fn unrecovered(&self) -> bool {
        self.first_drop_second.is_some() && self.recovered_second.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateChange {
    pub tick: u32,
    pub node: Target,
    pub state: NodeState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutcome {
    pub topology: String,
    pub attack: Option<AttackSpec>,
    pub verdict: Verdict,
    pub severity: Severity,
    pub first_drop_second: Option<u32>,
    pub recovered_second: Option<u32>,
    pub downlink: DirectionOutcome,
    pub uplink: DirectionOutcome,
    /// Delivered legit U-Plane bits per second.
    pub dl_bits: Vec<u64>,
    pub ul_bits: Vec<u64>,
    /// Share of nominal U-Plane traffic lost, per second.
    pub block_error_proxy: Vec<f64>,
    pub state_timeline: Vec<StateChange>,
    pub degraded_ticks: u32,
    pub restarts: u32,
    /// Ticks in which each (node, plane, cause) was observed.
    pub causes: BTreeMap<String, u32>,
}

/// One tick's worth of bookkeeping, exposed for stepping through a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TickSample {
    pub tick: u32,
    pub attack_frames: u64,
    pub dl_bits: f64,
    pub ul_bits: f64,
    pub lost_share: f64,
    /// A node plane reported degradation.
    pub degraded: bool,
    /// A node was restarting or down at some point in the tick.
    pub outage: bool,
}

pub struct Simulation {
    cfg: TopologyConfig,
    attack: Option<AttackSpec>,
    switch: SwitchModel,
    odu: NodeSim,
    oru: NodeSim,
    odu_port: PortId,
    oru_port: PortId,
    attacker_port: PortId,
    rng: ChaCha8Rng,
    tick: u32,
    total_ticks: u32,
    attack_start: u32,
    attack_ticks: u32,
    c_health_prev: f64,
    samples: Vec<TickSample>,
    timeline: Vec<StateChange>,
    causes: BTreeMap<String, u32>,
    last_states: [NodeState; 2],
}

impl Simulation {
    pub fn new(cfg: &TopologyConfig, attack: Option<&AttackSpec>, seed: u64) -> Self {
        let port = |n: &str| cfg.port_index(n).expect("validated port");
        let mut switch = SwitchModel::new(cfg.switch.ports.len(), cfg.switch.aging_seconds);
        for name in &cfg.switch.secure {
            let n = if name == "odu" { &cfg.odu } else { &cfg.oru };
            switch.secure(n.mac, port(&n.port));
        }
        let attack_seconds = attack.map_or(cfg.timeline.attack_seconds, |a| a.duration_seconds);
        let total_seconds = cfg.timeline.baseline_seconds + attack_seconds + cfg.timeline.post_seconds;
        Simulation {
            switch,
            odu: NodeSim::new(cfg.odu.clone(), cfg.oru.mac),
            oru: NodeSim::new(cfg.oru.clone(), cfg.odu.mac),
            odu_port: port(&cfg.odu.port),
            oru_port: port(&cfg.oru.port),
            attacker_port: port(&cfg.attacker_port),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ seed.rotate_left(17)),
            tick: 0,
            total_ticks: total_seconds * TICKS_PER_SECOND,
            attack_start: cfg.timeline.baseline_seconds * TICKS_PER_SECOND,
            attack_ticks: if attack.is_some() { attack_seconds * TICKS_PER_SECOND } else { 0 },
            c_health_prev: 1.0,
            samples: Vec::new(),
            timeline: vec![
                StateChange { tick: 0, node: Target::Odu, state: NodeState::Up },
                StateChange { tick: 0, node: Target::Oru, state: NodeState::Up },
            ],
            causes: BTreeMap::new(),
            last_states: [NodeState::Up; 2],
            attack: attack.cloned(),
            cfg: cfg.clone(),
        }
    }

    pub fn finished(&self) -> bool {
        self.tick >= self.total_ticks
    }

    pub fn node_state(&self, t: Target) -> NodeState {
        match t {
            Target::Odu => self.odu.state(),
            Target::Oru => self.oru.state(),
        }
    }

    pub fn switch(&self) -> &SwitchModel {
        &self.switch
    }

    fn attack_frames(&self) -> u64 {
        let Some(a) = &self.attack else { return 0 };
        if self.tick < self.attack_start || self.tick >= self.attack_start + self.attack_ticks {
            return 0;
        }
        let k = (self.tick - self.attack_start) as u64;
        let per_tick = a.tier_mbps as u64 * 1_000_000 / TICKS_PER_SECOND as u64;
        let fb = a.frame_bits();
        ((k + 1) * per_tick) / fb - (k * per_tick) / fb
    }

    /// Advance by one 100 ms tick.
    pub fn step(&mut self) -> TickSample {
        let now = self.tick as u64 * TICK_MS;
        let legit = &self.cfg.legit;
        let tps = TICKS_PER_SECOND as f64;
        let mut jitter = || 1.0 + legit.jitter * self.rng.gen_range(-1.0..=1.0);
        let (j1, j2, j3) = (jitter(), jitter(), jitter());

        let dl_c = if self.odu.running() { legit.dl_cplane_fps / tps * j1 } else { 0.0 };
        let dl_u = if self.odu.running() { legit.dl_uplane_fps / tps * j2 } else { 0.0 };
        let ul_u = if self.oru.running() { legit.ul_uplane_fps / tps * j3 * self.c_health_prev } else { 0.0 };

        let a = self.attack_frames();
        let (odu_mac, oru_mac) = (self.odu.cfg.mac, self.oru.cfg.mac);
        let src: Option<MacAddress> = self.attack.as_ref().and_then(|s| match s.src {
            SourceMacStrategy::SpoofedPeer(m) | SourceMacStrategy::Fixed(m) => Some(m),
            SourceMacStrategy::SameAsDestination => Some(s.dst_mac),
            SourceMacStrategy::Broadcast => Some(MacAddress::BROADCAST),
            SourceMacStrategy::RandomPerPacket(_) => None,
        });
        let af = a as f64;
        let spoofs_of = |m: MacAddress| if src == Some(m) { af } else { 0.0 };
        let c_du =
            self.switch.contend(odu_mac, self.odu_port, self.attacker_port, spoofs_of(odu_mac), dl_c + dl_u, now);
        let c_ru = self.switch.contend(oru_mac, self.oru_port, self.attacker_port, spoofs_of(oru_mac), ul_u, now);
        match src {
            None if a > 0 => self.switch.learn_anonymous(a),
            Some(m) if a > 0 && m != odu_mac && m != oru_mac => {
                let dst = self.attack.as_ref().map_or(m, |s| s.dst_mac);
                self.switch.forward(self.attacker_port, m, dst, now);
            }
            _ => {}
        }

        let mut odu_in = [PlaneInput::default(); 3];
        let mut oru_in = [PlaneInput::default(); 3];
        oru_in[Plane::Cplane.index()].legit = dl_c * (1.0 - c_ru.p_attacker);
        oru_in[Plane::Cplane.index()].misdelivered = dl_c * c_ru.p_attacker;
        oru_in[Plane::UplaneDl.index()].legit = dl_u * (1.0 - c_ru.p_attacker);
        oru_in[Plane::UplaneDl.index()].misdelivered = dl_u * c_ru.p_attacker;
        odu_in[Plane::UplaneUl.index()].legit = ul_u * (1.0 - c_du.p_attacker);
        odu_in[Plane::UplaneUl.index()].misdelivered = ul_u * c_du.p_attacker;

        if let (Some(spec), true) = (&self.attack, a > 0) {
            let (tmac, pmac, c_t, c_p) = match spec.target {
                Target::Odu => (odu_mac, oru_mac, c_du, c_ru),
                Target::Oru => (oru_mac, odu_mac, c_ru, c_du),
            };
            if spec.dst_mac == tmac {
                let (delivered, kind) = match src {
                    Some(m) if m == tmac => (c_t.self_delivered, AttackSource::Own),
                    Some(m) if m == pmac => (af - c_p.violations, AttackSource::Peer),
                    Some(m) => (af, AttackSource::Fixed(m)),
                    None => (af, AttackSource::Random),
                };
                let plane = match spec.traffic {
                    TrafficType::CPlaneDL => Plane::Cplane,
                    TrafficType::UPlaneDL => Plane::UplaneDl,
                    TrafficType::UPlaneUL => Plane::UplaneUl,
                };
                let slot = match spec.target {
                    Target::Odu => &mut odu_in[plane.index()],
                    Target::Oru => &mut oru_in[plane.index()],
                };
                slot.attack = delivered;
                slot.attack_src = Some(kind);
            }
        }

        let was_running = self.odu.running() && self.oru.running();
        let odu_t = self.odu.tick(&odu_in);
        let oru_t = self.oru.tick(&oru_in);
        let outage = !was_running || !self.odu.running() || !self.oru.running();

        let c_offered = dl_c;
        let c_health = if c_offered > 0.0 { oru_t.processed[Plane::Cplane.index()] / c_offered } else { 0.0 };
        let bits = legit.uplane_bytes as f64 * 8.0;
        let dl_frames = oru_t.processed[Plane::UplaneDl.index()] * c_health.min(1.0);
        let ul_frames = odu_t.processed[Plane::UplaneUl.index()];
        let nominal = (legit.dl_uplane_fps + legit.ul_uplane_fps) / tps;
        let lost_share = if nominal > 0.0 { (1.0 - (dl_frames + ul_frames) / nominal).clamp(0.0, 1.0) } else { 0.0 };
        self.c_health_prev = c_health.min(1.0);

        for (node, t) in [(Target::Odu, &odu_t), (Target::Oru, &oru_t)] {
            for (plane, cause) in &t.degraded {
                *self.causes.entry(cause_key(node, *plane, *cause)).or_default() += 1;
            }
            if let Some((plane, cause)) = t.restart {
                *self
                    .causes
                    .entry(format!("{}.{}.restart:{}", node.node_name(), plane, cause_name(cause)))
                    .or_default() += 1;
            }
        }
        let degraded = !odu_t.degraded.is_empty() || !oru_t.degraded.is_empty();
        for (i, (node, st)) in
            [(Target::Odu, self.odu.state()), (Target::Oru, self.oru.state())].into_iter().enumerate()
        {
            if self.last_states[i] != st {
                self.last_states[i] = st;
                self.timeline.push(StateChange { tick: self.tick + 1, node, state: st });
            }
        }

        let sample = TickSample {
            tick: self.tick,
            attack_frames: a,
            dl_bits: dl_frames * bits,
            ul_bits: ul_frames * bits,
            lost_share,
            degraded,
            outage,
        };
        self.samples.push(sample);
        self.tick += 1;
        sample
    }

    pub fn run(mut self) -> SimOutcome {
        while !self.finished() {
            self.step();
        }
        self.finish()
    }

    pub fn finish(self) -> SimOutcome {
        let secs = self.samples.len().div_ceil(TICKS_PER_SECOND as usize);
        let mut dl = vec![0f64; secs];
        let mut ul = vec![0f64; secs];
        let mut bler = vec![0f64; secs];
        for s in &self.samples {
            let i = (s.tick / TICKS_PER_SECOND) as usize;
            dl[i] += s.dl_bits;
            ul[i] += s.ul_bits;
            bler[i] += s.lost_share / TICKS_PER_SECOND as f64;
        }
        let dl_bits: Vec<u64> = dl.iter().map(|v| v.round() as u64).collect();
        let ul_bits: Vec<u64> = ul.iter().map(|v| v.round() as u64).collect();
        let block_error_proxy: Vec<f64> = bler.iter().map(|v| (v * 1e6).round() / 1e6).collect();

        let det = &self.cfg.detect;
        let direction = |series: &[u64]| {
            let base = baseline_of(series, det.baseline_seconds as usize);
            let (d, r) = detect_drop_and_recovery(series, base, det.drop_fraction);
            DirectionOutcome { first_drop_second: d.map(|v| v as u32), recovered_second: r.map(|v| v as u32) }
        };
        let downlink = direction(&dl_bits);
        let uplink = direction(&ul_bits);
        let dirs = [downlink, uplink];
        let first_drop_second = dirs.iter().filter_map(|d| d.first_drop_second).min();
        let any_unrecovered = dirs.iter().any(DirectionOutcome::unrecovered);
        let recovered_second = match first_drop_second {
            Some(_) if !any_unrecovered => dirs.iter().filter_map(|d| d.recovered_second).max(),
            _ => None,
        };

        let below = |d: &DirectionOutcome, sec: usize| {
            d.first_drop_second
                .is_some_and(|f| sec >= f as usize && d.recovered_second.is_none_or(|r| sec < r as usize))
        };
        let degraded_ticks = self
            .samples
            .iter()
            .filter(|s| {
                let sec = (s.tick / TICKS_PER_SECOND) as usize;
                s.degraded || s.outage || below(&downlink, sec) || below(&uplink, sec)
            })
            .count() as u32;
        let restarts = self.odu.restarts + self.oru.restarts;
        let ends_degraded = self.samples.last().is_some_and(|s| s.degraded || s.outage);
        let severity = if restarts > 0 || self.samples.iter().any(|s| s.outage) {
            Severity::CrashRestart
        } else if degraded_ticks > 0 {
            if any_unrecovered || ends_degraded {
                Severity::DegradedUnrecovered
            } else {
                Severity::DegradedRecovered
            }
        } else {
            Severity::None
        };
        let verdict = if severity == Severity::None { Verdict::Pass } else { Verdict::Fail };

        SimOutcome {
            topology: self.cfg.name.clone(),
            attack: self.attack,
            verdict,
            severity,
            first_drop_second,
            recovered_second,
            downlink,
            uplink,
            dl_bits,
            ul_bits,
            block_error_proxy,
            state_timeline: self.timeline,
            degraded_ticks,
            restarts,
            causes: self.causes,
        }
    }
}

fn cause_name(c: Cause) -> &'static str {
    match c {
        Cause::Misdelivery => "misdelivery",
        Cause::Overload => "overload",
        Cause::FlowExhaustion => "flow-exhaustion",
        Cause::SelfSource => "self-source",
        Cause::StuckFlow => "stuck-flow",
    }
}

fn cause_key(node: Target, plane: Plane, cause: Cause) -> String {
    format!("{}.{}.{}", node.node_name(), plane, cause_name(cause))
}

/// Run a full scenario. `attack = None` gives the undisturbed reference.
pub fn run_scenario(cfg: &TopologyConfig, attack: Option<&AttackSpec>, seed: u64) -> SimOutcome {
    Simulation::new(cfg, attack, seed).run()
}
