//! Paced transmission of forged traffic.

pub mod engine;
pub mod port;
pub mod schedule;

pub use engine::{run_attack, Clock, SecondStats, TxAbort, TxError, TxOptions, TxProgress, TxStats};
pub use port::{
    loopback, loopback_unbounded, open_port, FrameBatch, LoopbackPort, LoopbackReceiver, PortError, PortKind,
    PortStats, RawLinkPort, TxPort, LOOPBACK_BATCH_FRAMES, LOOPBACK_QUEUE_BATCHES,
};
pub use schedule::{RateMode, RateSchedule, ScheduleError, TokenBucket, SLOTS_PER_SECOND};
