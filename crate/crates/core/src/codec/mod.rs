//! Encoders and decoders for Ethernet/802.1Q, eCPRI and the O-RAN C/U-Plane
//! messages used by the attack tooling.

pub mod bits;
pub mod classify;
pub mod cplane;
pub mod ecpri;
pub mod eth;
pub mod mac;
pub mod uplane;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::{classify, classify_bytes, classify_payload, FrameClass};
pub use cplane::{
    decode_cplane, decode_cplane_at, encode_cplane, BfwExt1, CPlaneDecodeOptions, CPlaneHeader, CPlaneMessage,
    CSection1, CompHdr,
};
pub use ecpri::{EaxcLayout, EaxcParts, EcpriHeader, SeqId, ECPRI_HEADER_LEN, MSG_IQ_DATA, MSG_RT_CONTROL};
pub use eth::{
    decode_frame, encode_frame, view_frame, wire_len_of, EthFrame, L2View, VlanTag, ETHERTYPE_ECPRI, ETHERTYPE_VLAN,
    FCS_LEN, MIN_FRAME_LEN, MTU,
};
pub use mac::MacAddress;
pub use uplane::{decode_uplane, decode_uplane_at, encode_uplane, IqSample, UPlaneHeader, UPlaneMessage, USection};

use bits::{BitReader, BitWriter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("truncated input: have {offset} bytes, need {needed}")]
    Truncated { offset: usize, needed: usize },
    #[error("message too large: {len} bytes (max {max})")]
    Oversize { len: usize, max: usize },
    #[error("invalid MAC address '{0}'")]
    BadAddress(String),
    #[error("field {field} has invalid value {value}")]
    InvalidField { field: &'static str, value: u64 },
    #[error("unsupported section type {0}")]
    UnsupportedSectionType(u8),
    #[error("unsupported section extension {0}")]
    UnsupportedExtension(u8),
    #[error("unsupported compression method {0}")]
    UnsupportedCompression(u8),
    #[error("extension length {ext_len} words does not hold {weights} weights")]
    ExtLenMismatch { ext_len: usize, weights: usize },
    #[error("unexpected eCPRI message type {found} (expected {expected})")]
    MessageType { expected: u8, found: u8 },
    #[error("{count} trailing bytes at offset {offset}")]
    TrailingBytes { offset: usize, count: usize },
    #[error("IQ sample count {actual} does not match numPrbu ({expected} expected)")]
    IqLengthMismatch { expected: usize, actual: usize },
    #[error("not an eCPRI frame (ethertype {0:#06x})")]
    NotEcpri(u16),
}

/// The `dataDirection` bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Uplink = 0,
    Downlink = 1,
}

impl Direction {
    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 1 {
            Direction::Downlink
        } else {
            Direction::Uplink
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Direction::Uplink => "UL",
            Direction::Downlink => "DL",
        }
    }
}

/// frameId / subframeId / slotId / symbol id, common to both planes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct RadioTiming {
    pub frame_id: u8,
    pub subframe_id: u8,
    pub slot_id: u8,
    pub symbol_id: u8,
}

impl RadioTiming {
    pub fn validate(&self) -> Result<(), CodecError> {
        check_width("subframeId", self.subframe_id as u64, 4)?;
        check_width("slotId", self.slot_id as u64, 6)?;
        check_width("symbolId", self.symbol_id as u64, 6)
    }

    pub(crate) fn write(&self, w: &mut BitWriter) {
        w.put(self.frame_id as u64, 8);
        w.put(self.subframe_id as u64, 4);
        w.put(self.slot_id as u64, 6);
        w.put(self.symbol_id as u64, 6);
    }

    pub(crate) fn read(r: &mut BitReader<'_>) -> Result<Self, CodecError> {
        Ok(RadioTiming {
            frame_id: r.get(8)? as u8,
            subframe_id: r.get(4)? as u8,
            slot_id: r.get(6)? as u8,
            symbol_id: r.get(6)? as u8,
        })
    }
}

pub(crate) fn check_width(field: &'static str, value: u64, bits: u32) -> Result<(), CodecError> {
    if bits < 64 && value >> bits != 0 {
        return Err(CodecError::InvalidField { field, value });
    }
    Ok(())
}

/// A decoded fronthaul message of either plane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "plane", rename_all = "lowercase")]
pub enum FhMessage {
    CPlane(CPlaneMessage),
    UPlane(UPlaneMessage),
}

impl FhMessage {
    pub fn eaxc_id(&self) -> u16 {
        match self {
            FhMessage::CPlane(m) => m.eaxc_id,
            FhMessage::UPlane(m) => m.eaxc_id,
        }
    }

    pub fn seq(&self) -> SeqId {
        match self {
            FhMessage::CPlane(m) => m.seq,
            FhMessage::UPlane(m) => m.seq,
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>, CodecError> {
        match self {
            FhMessage::CPlane(m) => encode_cplane(m),
            FhMessage::UPlane(m) => encode_uplane(m),
        }
    }
}

/// Decode the eCPRI payload of a frame, dispatching on the message type.
/// `base` is the payload offset within the frame, used in error offsets.
pub fn decode_ecpri(payload: &[u8], base: usize) -> Result<FhMessage, CodecError> {
    let h = EcpriHeader::parse(payload, base)?;
    match h.msg_type {
        MSG_RT_CONTROL => decode_cplane_at(payload, base, CPlaneDecodeOptions::default()).map(FhMessage::CPlane),
        MSG_IQ_DATA => decode_uplane_at(payload, base).map(FhMessage::UPlane),
        other => Err(CodecError::MessageType { expected: MSG_RT_CONTROL, found: other }),
    }
}

/// Decode a whole frame down to the fronthaul message.
pub fn dissect(bytes: &[u8]) -> Result<(EthFrame, FhMessage), CodecError> {
    let v = view_frame(bytes)?;
    if v.ethertype != ETHERTYPE_ECPRI {
        return Err(CodecError::NotEcpri(v.ethertype));
    }
    let msg = decode_ecpri(v.payload, v.payload_offset)?;
    Ok((decode_frame(bytes)?, msg))
}

/// Smallest valid C-Plane frame: one Section Type-1 section, no extension.
pub fn forge_cplane_frame(dst: MacAddress, src: MacAddress, direction: Direction) -> EthFrame {
    let msg = CPlaneMessage {
        eaxc_id: 0,
        seq: SeqId::default(),
        header: CPlaneHeader::new(direction, RadioTiming::default()),
        sections: vec![CSection1::new(1, 0, 0)],
    };
    EthFrame::ecpri(dst, src, encode_cplane(&msg).expect("static message encodes"))
}

/// U-Plane frame with one section of `num_prbu` zeroed PRBs.
pub fn forge_uplane_frame(dst: MacAddress, src: MacAddress, direction: Direction, num_prbu: u8) -> EthFrame {
    let msg = UPlaneMessage {
        eaxc_id: 0,
        seq: SeqId::default(),
        header: UPlaneHeader::new(direction, RadioTiming::default()),
        sections: vec![USection::zeroed(1, 0, num_prbu.max(1))],
    };
    EthFrame::ecpri(dst, src, encode_uplane(&msg).expect("static message encodes"))
}
