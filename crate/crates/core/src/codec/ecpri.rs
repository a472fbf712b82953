use std::fmt;

use serde::{Deserialize, Serialize};

use super::CodecError;

pub const ECPRI_COMMON_HEADER_LEN: usize = 4;
/// Common header plus the 2-byte stream id and 2-byte sequence id.
pub const ECPRI_HEADER_LEN: usize = 8;
pub const ECPRI_REVISION: u8 = 1;

pub const MSG_IQ_DATA: u8 = 0;
pub const MSG_RT_CONTROL: u8 = 2;

/// `ecpriSeqid`: sequence counter plus fragmentation marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeqId {
    pub sequence_id: u8,
    /// Set on the last (or only) fragment.
    pub e_bit: bool,
    pub sub_sequence_id: u8,
}

impl SeqId {
    pub fn unfragmented(sequence_id: u8) -> Self {
        SeqId { sequence_id, e_bit: true, sub_sequence_id: 0 }
    }

    fn to_u16(self) -> u16 {
        ((self.sequence_id as u16) << 8) | ((self.e_bit as u16) << 7) | (self.sub_sequence_id as u16 & 0x7f)
    }

    fn from_u16(v: u16) -> Self {
        SeqId { sequence_id: (v >> 8) as u8, e_bit: v & 0x80 != 0, sub_sequence_id: (v & 0x7f) as u8 }
    }
}

impl Default for SeqId {
    fn default() -> Self {
        SeqId::unfragmented(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EcpriHeader {
    pub revision: u8,
    pub reserved: u8,
    pub concatenation: bool,
    pub msg_type: u8,
    /// Bytes following the 4-byte common header, i.e. the stream id,
    /// sequence id and the application payload.
    pub payload_size: u16,
    /// `ecpriPcid` for IQ data, `ecpriRtcid` for real-time control.
    pub eaxc_id: u16,
    pub seq: SeqId,
}

impl EcpriHeader {
    pub fn new(msg_type: u8, eaxc_id: u16, seq: SeqId, app_len: usize) -> Self {
        EcpriHeader {
            revision: ECPRI_REVISION,
            reserved: 0,
            concatenation: false,
            msg_type,
            payload_size: (app_len + ECPRI_HEADER_LEN - ECPRI_COMMON_HEADER_LEN) as u16,
            eaxc_id,
            seq,
        }
    }

    /// Length of the application payload the header announces.
    pub fn app_len(&self) -> Result<usize, CodecError> {
        (self.payload_size as usize)
            .checked_sub(ECPRI_HEADER_LEN - ECPRI_COMMON_HEADER_LEN)
            .ok_or(CodecError::InvalidField { field: "payloadSize", value: self.payload_size as u64 })
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        out.push((self.revision << 4) | ((self.reserved & 0x7) << 1) | self.concatenation as u8);
        out.push(self.msg_type);
        out.extend_from_slice(&self.payload_size.to_be_bytes());
        out.extend_from_slice(&self.eaxc_id.to_be_bytes());
        out.extend_from_slice(&self.seq.to_u16().to_be_bytes());
    }

    /// Parse the 8-byte header; `base` is its offset inside the frame.
    pub fn parse(bytes: &[u8], base: usize) -> Result<Self, CodecError> {
        if bytes.len() < ECPRI_HEADER_LEN {
            return Err(CodecError::Truncated { offset: base + bytes.len(), needed: base + ECPRI_HEADER_LEN });
        }
        let revision = bytes[0] >> 4;
        if revision != ECPRI_REVISION {
            return Err(CodecError::InvalidField { field: "ecpriRevision", value: revision as u64 });
        }
        Ok(EcpriHeader {
            revision,
            reserved: (bytes[0] >> 1) & 0x7,
            concatenation: bytes[0] & 1 == 1,
            msg_type: bytes[1],
            payload_size: u16::from_be_bytes([bytes[2], bytes[3]]),
            eaxc_id: u16::from_be_bytes([bytes[4], bytes[5]]),
            seq: SeqId::from_u16(u16::from_be_bytes([bytes[6], bytes[7]])),
        })
    }
}

/// Display-only partition of the 16-bit eAxC id. The codec never interprets
/// the id; this just splits it for reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EaxcLayout {
    pub du_port_bits: u8,
    pub band_sector_bits: u8,
    pub cc_bits: u8,
    pub ru_port_bits: u8,
}

impl Default for EaxcLayout {
    fn default() -> Self {
        EaxcLayout { du_port_bits: 4, band_sector_bits: 4, cc_bits: 4, ru_port_bits: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EaxcParts {
    pub du_port: u16,
    pub band_sector: u16,
    pub cc: u16,
    pub ru_port: u16,
}

impl EaxcLayout {
    pub fn is_valid(&self) -> bool {
        self.du_port_bits as u32 + self.band_sector_bits as u32 + self.cc_bits as u32 + self.ru_port_bits as u32 == 16
    }

    pub fn split(&self, eaxc: u16) -> EaxcParts {
        let take = |shift: u32, bits: u8| -> u16 {
            if bits == 0 {
                0
            } else {
                ((eaxc as u32 >> shift) & ((1u32 << bits) - 1)) as u16
            }
        };
        let ru = 0u32;
        let cc = ru + self.ru_port_bits as u32;
        let bs = cc + self.cc_bits as u32;
        let du = bs + self.band_sector_bits as u32;
        EaxcParts {
            du_port: take(du, self.du_port_bits),
            band_sector: take(bs, self.band_sector_bits),
            cc: take(cc, self.cc_bits),
            ru_port: take(ru, self.ru_port_bits),
        }
    }
}

impl fmt::Display for EaxcParts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "du{}/bs{}/cc{}/ru{}", self.du_port, self.band_sector, self.cc, self.ru_port)
    }
}
