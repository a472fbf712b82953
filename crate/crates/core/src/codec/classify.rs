use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ecpri::{EcpriHeader, ECPRI_HEADER_LEN, MSG_IQ_DATA, MSG_RT_CONTROL};
use super::eth::{view_frame, EthFrame, ETHERTYPE_ECPRI};
use super::Direction;

/// Fronthaul traffic class of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FrameClass {
    CPlaneDL,
    CPlaneUL,
    UPlaneDL,
    UPlaneUL,
    Other,
}

impl FrameClass {
    pub const ALL: [FrameClass; 5] =
        [FrameClass::CPlaneDL, FrameClass::CPlaneUL, FrameClass::UPlaneDL, FrameClass::UPlaneUL, FrameClass::Other];

    pub fn is_cplane(self) -> bool {
        matches!(self, FrameClass::CPlaneDL | FrameClass::CPlaneUL)
    }

    pub fn is_uplane(self) -> bool {
        matches!(self, FrameClass::UPlaneDL | FrameClass::UPlaneUL)
    }

    pub fn direction(self) -> Option<Direction> {
        match self {
            FrameClass::CPlaneDL | FrameClass::UPlaneDL => Some(Direction::Downlink),
            FrameClass::CPlaneUL | FrameClass::UPlaneUL => Some(Direction::Uplink),
            FrameClass::Other => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FrameClass::CPlaneDL => "cplane-dl",
            FrameClass::CPlaneUL => "cplane-ul",
            FrameClass::UPlaneDL => "uplane-dl",
            FrameClass::UPlaneUL => "uplane-ul",
            FrameClass::Other => "other",
        }
    }
}

impl fmt::Display for FrameClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FrameClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FrameClass::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown frame class '{s}'"))
    }
}

/// Classify an ethertype + eCPRI payload. Never fails.
pub fn classify_payload(ethertype: u16, payload: &[u8]) -> FrameClass {
    if ethertype != ETHERTYPE_ECPRI {
        return FrameClass::Other;
    }
    let Ok(h) = EcpriHeader::parse(payload, 0) else {
        return FrameClass::Other;
    };
    let Ok(app_len) = h.app_len() else {
        return FrameClass::Other;
    };
    let min_app = match h.msg_type {
        MSG_RT_CONTROL => 8,
        MSG_IQ_DATA => 4,
        _ => return FrameClass::Other,
    };
    if app_len < min_app || payload.len() < ECPRI_HEADER_LEN + app_len {
        return FrameClass::Other;
    }
    let dl = payload[ECPRI_HEADER_LEN] & 0x80 != 0;
    match (h.msg_type, dl) {
        (MSG_RT_CONTROL, true) => FrameClass::CPlaneDL,
        (MSG_RT_CONTROL, false) => FrameClass::CPlaneUL,
        (_, true) => FrameClass::UPlaneDL,
        (_, false) => FrameClass::UPlaneUL,
    }
}

pub fn classify(frame: &EthFrame) -> FrameClass {
    classify_payload(frame.ethertype, &frame.payload)
}

/// Classify raw frame bytes without copying.
pub fn classify_bytes(bytes: &[u8]) -> FrameClass {
    match view_frame(bytes) {
        Ok(v) => classify_payload(v.ethertype, v.payload),
        Err(_) => FrameClass::Other,
    }
}
