use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Each second is split into this many equal pacing slots.
pub const SLOTS_PER_SECOND: u64 = 100;
pub const NANOS_PER_SLOT: u64 = 1_000_000_000 / SLOTS_PER_SECOND;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("rate must be positive, got {0} Mbps")]
    Rate(f64),
    #[error("duration must be at least one second")]
    Duration,
    #[error("cannot parse '{0}' as <start>:<step>")]
    Ramp(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateMode {
    Constant {
        mbps: f64,
    },
    /// Rate in second `s` is `start + step × s`.
    Incremental {
        start_mbps: f64,
        step_mbps: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    pub mode: RateMode,
    pub duration_seconds: u32,
}

impl RateSchedule {
    pub fn constant(mbps: f64, duration_seconds: u32) -> Result<Self, ScheduleError> {
        let s = RateSchedule { mode: RateMode::Constant { mbps }, duration_seconds };
        s.validate()?;
        Ok(s)
    }

    pub fn incremental(start_mbps: f64, step_mbps: f64, duration_seconds: u32) -> Result<Self, ScheduleError> {
        let s = RateSchedule { mode: RateMode::Incremental { start_mbps, step_mbps }, duration_seconds };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.duration_seconds < 1 {
            return Err(ScheduleError::Duration);
        }
        let (a, b) = match self.mode {
            RateMode::Constant { mbps } => (mbps, 0.0),
            RateMode::Incremental { start_mbps, step_mbps } => (start_mbps, step_mbps),
        };
        if !a.is_finite() || a <= 0.0 {
            return Err(ScheduleError::Rate(a));
        }
        if !b.is_finite() || b < 0.0 {
            return Err(ScheduleError::Rate(b));
        }
        Ok(())
    }

    pub fn rate_mbps(&self, second: u32) -> f64 {
        match self.mode {
            RateMode::Constant { mbps } => mbps,
            RateMode::Incremental { start_mbps, step_mbps } => start_mbps + step_mbps * second as f64,
        }
    }

    /// Target L2 bits for `second`, rounded to a whole bit.
    pub fn bits_in_second(&self, second: u32) -> u64 {
        (self.rate_mbps(second) * 1e6).round() as u64
    }

    pub fn total_bits(&self) -> u64 {
        (0..self.duration_seconds).map(|s| self.bits_in_second(s)).sum()
    }
}

/// Parse `<start>:<step>` as used by `--ramp`.
pub fn parse_ramp(s: &str) -> Result<(f64, f64), ScheduleError> {
    let err = || ScheduleError::Ramp(s.to_string());
    let (a, b) = s.split_once(':').ok_or_else(err)?;
    Ok((a.trim().parse().map_err(|_| err())?, b.trim().parse().map_err(|_| err())?))
}

impl fmt::Display for RateSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            RateMode::Constant { mbps } => write!(f, "{mbps} Mbps for {} s", self.duration_seconds),
            RateMode::Incremental { start_mbps, step_mbps } => {
                write!(f, "{start_mbps} Mbps +{step_mbps}/s for {} s", self.duration_seconds)
            }
        }
    }
}

impl FromStr for RateMode {
    type Err = ScheduleError;

    /// `10` for constant, `10:5` for incremental.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.contains(':') {
            let (start_mbps, step_mbps) = parse_ramp(s)?;
            Ok(RateMode::Incremental { start_mbps, step_mbps })
        } else {
            let mbps = s.trim().parse().map_err(|_| ScheduleError::Ramp(s.to_string()))?;
            Ok(RateMode::Constant { mbps })
        }
    }
}

/// Integer token bucket. Slot `k` of a second receives
/// `floor(B(k+1)/100) − floor(Bk/100)` bits so a second's slots sum to its
/// budget exactly; unspent bits carry over to the next slot.
#[derive(Debug, Clone)]
pub struct TokenBucket {
    schedule: RateSchedule,
    second: u32,
    slot: u64,
    tokens: u64,
}

impl TokenBucket {
    pub fn new(schedule: RateSchedule) -> Self {
        TokenBucket { schedule, second: 0, slot: 0, tokens: 0 }
    }

    /// Advance to the next slot and return `(second, slot)` or `None` when the
    /// schedule is over. Credits that slot's bits.
    pub fn next_slot(&mut self) -> Option<(u32, u64)> {
        if self.second >= self.schedule.duration_seconds {
            return None;
        }
        let b = self.schedule.bits_in_second(self.second) as u128;
        let k = self.slot as u128;
        let n = SLOTS_PER_SECOND as u128;
        let credit = (b * (k + 1) / n - b * k / n) as u64;
        self.tokens += credit;
        let here = (self.second, self.slot);
        self.slot += 1;
        if self.slot == SLOTS_PER_SECOND {
            self.slot = 0;
            self.second += 1;
        }
        Some(here)
    }

    /// Take `bits` if available.
    pub fn try_take(&mut self, bits: u64) -> bool {
        if self.tokens >= bits {
            self.tokens -= bits;
            true
        } else {
            false
        }
    }

    pub fn tokens(&self) -> u64 {
        self.tokens
    }
}

/// Frames a constant-size stream emits over the whole schedule.
pub fn scheduled_frames(schedule: &RateSchedule, frame_bits: u64) -> u64 {
    schedule.total_bits() / frame_bits
}
