//! Victim simulator: two fronthaul nodes and an attacker behind a learning
//! switch, advanced in 100 ms ticks.

pub mod config;
pub mod node;
pub mod scenario;
pub mod switch;

pub use config::{Acceptance, ConfigError, NodeConfig, Plane, PlanePolicy, TopologyConfig, CALIBRATION_DIR_ENV};
pub use node::{AttackSource, Cause, NodeSim, NodeState, PlaneInput, SUSTAIN_TICKS, TICKS_PER_SECOND, TICK_MS};
pub use scenario::{
    run_scenario, DirectionOutcome, Severity, SimOutcome, Simulation, StateChange, TickSample, Verdict,
};
pub use switch::{Contention, Forward, PortId, SwitchModel};
