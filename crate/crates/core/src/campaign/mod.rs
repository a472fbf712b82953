//! Test campaigns over the simulator or a live port.

pub mod live;
pub mod matrix;
pub mod report;
pub mod verify;

use thiserror::Error;

use crate::codec::MacAddress;
use crate::forge::ForgeError;
use crate::sim::ConfigError;
use crate::tx::{PortError, ScheduleError, TxError};

pub use live::{guard_destination, run_live_cell, LiveCellResult, LiveTarget};
pub use matrix::{
    attack_for, run_cells, run_extended_matrix, run_tifg_722, suite_cells, Backend, CampaignConfig, CellKey,
    MatrixReport, MatrixRow, Suite,
};
pub use report::{emit_report, read_structured, tier_label, ReportFormat};
pub use verify::{verify_tool_compliance, CheckResult, ComplianceReport, VerifyOptions};

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("unknown backend '{0}' (expected sim:<calibration> or port:<ifname>)")]
    BadBackend(String),
    #[error("live-port campaigns need explicit authorization (--i-am-authorized)")]
    Unauthorized,
    #[error("refusing group destination {0} on a live port")]
    BroadcastDestination(MacAddress),
    #[error("live-port campaigns need the O-DU and O-RU addresses")]
    MissingAddress,
    #[error("no legit U-Plane traffic seen during the baseline window")]
    NoBaseline,
    #[error("meter thread panicked")]
    MeterThread,
    #[error(transparent)]
    Port(#[from] PortError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Tx(#[from] TxError),
    #[error(transparent)]
    Forge(#[from] ForgeError),
}
