//! The pacing loop.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::port::{PortError, TxPort};
use super::schedule::{RateSchedule, TokenBucket, NANOS_PER_SLOT};
use crate::codec::wire_len_of;
use crate::forge::EditSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clock {
    /// Frames are stamped with their scheduled time and emitted as fast as
    /// the port accepts them.
    #[default]
    Simulated,
    /// Each slot waits for its wall-clock start; frames are stamped with the
    /// actual send time.
    RealTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SecondStats {
    pub second: u32,
    pub scheduled_frames: u64,
    pub frames: u64,
    /// Wire bytes (FCS included), the unit the schedule is expressed in.
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TxStats {
    pub per_second: Vec<SecondStats>,
    pub total_frames: u64,
    pub total_bytes: u64,
    pub scheduled_frames: u64,
    /// Frames the schedule called for that were never emitted because the
    /// host fell behind.
    pub shortfall_frames: u64,
}

impl TxStats {
    fn second_mut(&mut self, s: u32) -> &mut SecondStats {
        while self.per_second.len() <= s as usize {
            let second = self.per_second.len() as u32;
            self.per_second.push(SecondStats { second, ..Default::default() });
        }
        &mut self.per_second[s as usize]
    }

    pub fn achieved_mbps(&self, second: u32) -> f64 {
        self.per_second.get(second as usize).map_or(0.0, |s| s.bytes as f64 * 8.0 / 1e6)
    }
}

#[derive(Debug, Error)]
#[error("transmission aborted after {} frames: {error}", partial.total_frames)]
pub struct TxAbort {
    #[source]
    pub error: PortError,
    pub partial: TxStats,
}

#[derive(Debug, Error)]
pub enum TxError {
    #[error("no frames to send")]
    NoFrames,
    #[error(transparent)]
    Schedule(#[from] super::schedule::ScheduleError),
    #[error(transparent)]
    Aborted(#[from] TxAbort),
}

/// Live counters other threads may poll while a run is in progress.
#[derive(Debug, Default)]
pub struct TxProgress {
    pub frames: AtomicU64,
    pub bytes: AtomicU64,
}

impl TxProgress {
    pub fn snapshot(&self) -> (u64, u64) {
        (self.frames.load(Ordering::Relaxed), self.bytes.load(Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, Default)]
pub struct TxOptions {
    pub clock: Clock,
    pub progress: Option<Arc<TxProgress>>,
}

/// Replay `frames` cyclically under `schedule`, applying `edits` per frame.
pub fn run_attack(
    frames: &[Vec<u8>],
    schedule: &RateSchedule,
    edits: &EditSet,
    port: &mut dyn TxPort,
    opts: &TxOptions,
) -> Result<TxStats, TxError> {
    if frames.is_empty() {
        return Err(TxError::NoFrames);
    }
    schedule.validate()?;

    let per_packet = edits.src.is_some_and(|s| s.is_per_packet());
    // Everything but a per-packet source is fixed for the run, so patch once.
    let prepared: Vec<Vec<u8>> =
        frames.iter().map(|f| if per_packet { edits.apply_static(f) } else { edits.apply(f, 0) }).collect();
    let bits: Vec<u64> = prepared.iter().map(|f| wire_len_of(f) as u64 * 8).collect();
    let max_len = prepared.iter().map(Vec::len).max().unwrap_or(0);
    let mut scratch = vec![0u8; max_len];

    let mut stats = TxStats::default();
    let mut bucket = TokenBucket::new(*schedule);
    let mut cursor = 0usize;
    let mut index = 0u64;
    let start = Instant::now();

    while let Some((second, slot)) = bucket.next_slot() {
        let slot_ns = second as u64 * 1_000_000_000 + slot * NANOS_PER_SLOT;
        let mut late = false;
        if opts.clock == Clock::RealTime {
            let due = Duration::from_nanos(slot_ns);
            let now = start.elapsed();
            if now < due {
                std::thread::sleep(due - now);
            } else if now >= due + Duration::from_nanos(NANOS_PER_SLOT) {
                // a whole slot behind: drop its frames and own up to it
                late = true;
            }
        }
        while bucket.try_take(bits[cursor]) {
            let fb = bits[cursor];
            stats.scheduled_frames += 1;
            stats.second_mut(second).scheduled_frames += 1;
            if late {
                stats.shortfall_frames += 1;
            } else {
                let ts = match opts.clock {
                    Clock::Simulated => slot_ns,
                    Clock::RealTime => start.elapsed().as_nanos() as u64,
                };
                let sent = if per_packet {
                    let f = &prepared[cursor];
                    let buf = &mut scratch[..f.len()];
                    buf.copy_from_slice(f);
                    edits.patch_source(buf, index);
                    port.send(ts, buf)
                } else {
                    port.send(ts, &prepared[cursor])
                };
                if let Err(error) = sent {
                    stats.shortfall_frames = stats.scheduled_frames - stats.total_frames;
                    return Err(TxAbort { error, partial: stats }.into());
                }
                let s = stats.second_mut(second);
                s.frames += 1;
                s.bytes += fb / 8;
                stats.total_frames += 1;
                stats.total_bytes += fb / 8;
                if let Some(p) = &opts.progress {
                    p.frames.fetch_add(1, Ordering::Relaxed);
                    p.bytes.fetch_add(fb / 8, Ordering::Relaxed);
                }
            }
            index += 1;
            cursor = (cursor + 1) % prepared.len();
        }
        if opts.clock == Clock::RealTime {
            if let Err(error) = port.flush() {
                stats.shortfall_frames = stats.scheduled_frames - stats.total_frames;
                return Err(TxAbort { error, partial: stats }.into());
            }
        }
    }
    stats.second_mut(schedule.duration_seconds.saturating_sub(1));
    if let Err(error) = port.flush() {
        stats.shortfall_frames = stats.scheduled_frames - stats.total_frames;
        return Err(TxAbort { error, partial: stats }.into());
    }
    Ok(stats)
}
