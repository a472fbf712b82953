use serde::{Deserialize, Serialize};

use super::{CodecError, MacAddress};

pub const ETHERTYPE_VLAN: u16 = 0x8100;
pub const ETHERTYPE_ECPRI: u16 = 0xAEFE;

pub const ETH_HEADER_LEN: usize = 14;
pub const VLAN_TAG_LEN: usize = 4;
/// Minimum frame length before the frame check sequence.
pub const MIN_FRAME_LEN: usize = 60;
pub const FCS_LEN: usize = 4;
pub const MTU: usize = 1500;

/// 802.1Q tag control information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VlanTag {
    pub pcp: u8,
    pub dei: bool,
    pub vid: u16,
}

impl VlanTag {
    pub const MAX_VID: u16 = 4094;

    pub fn new(vid: u16) -> Result<Self, CodecError> {
        let tag = VlanTag { pcp: 0, dei: false, vid };
        tag.validate()?;
        Ok(tag)
    }

    pub fn with_pcp(mut self, pcp: u8) -> Self {
        self.pcp = pcp;
        self
    }

    pub fn validate(&self) -> Result<(), CodecError> {
        if self.vid > Self::MAX_VID {
            return Err(CodecError::InvalidField { field: "vid", value: self.vid as u64 });
        }
        if self.pcp > 7 {
            return Err(CodecError::InvalidField { field: "pcp", value: self.pcp as u64 });
        }
        Ok(())
    }

    pub fn tci(&self) -> u16 {
        ((self.pcp as u16) << 13) | ((self.dei as u16) << 12) | self.vid
    }

    pub fn from_tci(tci: u16) -> Self {
        VlanTag { pcp: (tci >> 13) as u8, dei: tci & 0x1000 != 0, vid: tci & 0x0fff }
    }
}

/// An Ethernet II frame, optionally 802.1Q tagged. The payload is opaque.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EthFrame {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub vlan: Option<VlanTag>,
    pub ethertype: u16,
    pub payload: Vec<u8>,
}

impl EthFrame {
    pub fn ecpri(dst: MacAddress, src: MacAddress, payload: Vec<u8>) -> Self {
        EthFrame { dst, src, vlan: None, ethertype: ETHERTYPE_ECPRI, payload }
    }

    pub fn with_vlan(mut self, tag: VlanTag) -> Self {
        self.vlan = Some(tag);
        self
    }

    pub fn header_len(&self) -> usize {
        ETH_HEADER_LEN + if self.vlan.is_some() { VLAN_TAG_LEN } else { 0 }
    }

    /// Encoded length without FCS, including zero padding.
    pub fn encoded_len(&self) -> usize {
        (self.header_len() + self.payload.len()).max(MIN_FRAME_LEN)
    }

    /// Bytes occupied on the link, counting the 4-byte FCS the NIC appends.
    pub fn wire_len(&self) -> usize {
        self.encoded_len() + FCS_LEN
    }

    /// True when both frames carry the same fields and their payloads differ
    /// only by trailing zero padding.
    pub fn eq_ignoring_padding(&self, other: &EthFrame) -> bool {
        if self.dst != other.dst
            || self.src != other.src
            || self.vlan != other.vlan
            || self.ethertype != other.ethertype
        {
            return false;
        }
        let (short, long) = if self.payload.len() <= other.payload.len() {
            (&self.payload, &other.payload)
        } else {
            (&other.payload, &self.payload)
        };
        long.starts_with(short) && long[short.len()..].iter().all(|&b| b == 0)
    }
}

/// Wire length of an encoded frame buffer (FCS added, padding floor applied).
pub fn wire_len_of(encoded: &[u8]) -> usize {
    encoded.len().max(MIN_FRAME_LEN) + FCS_LEN
}

pub fn encode_frame(frame: &EthFrame) -> Result<Vec<u8>, CodecError> {
    if frame.payload.len() > MTU {
        return Err(CodecError::Oversize { len: frame.payload.len(), max: MTU });
    }
    if let Some(tag) = &frame.vlan {
        tag.validate()?;
    }
    let mut out = Vec::with_capacity(frame.encoded_len());
    out.extend_from_slice(&frame.dst.0);
    out.extend_from_slice(&frame.src.0);
    if let Some(tag) = &frame.vlan {
        out.extend_from_slice(&ETHERTYPE_VLAN.to_be_bytes());
        out.extend_from_slice(&tag.tci().to_be_bytes());
    }
    out.extend_from_slice(&frame.ethertype.to_be_bytes());
    out.extend_from_slice(&frame.payload);
    if out.len() < MIN_FRAME_LEN {
        out.resize(MIN_FRAME_LEN, 0);
    }
    Ok(out)
}

pub fn decode_frame(bytes: &[u8]) -> Result<EthFrame, CodecError> {
    if bytes.len() < ETH_HEADER_LEN {
        return Err(CodecError::Truncated { offset: bytes.len(), needed: ETH_HEADER_LEN });
    }
    let dst = MacAddress::from_slice(&bytes[0..6]);
    let src = MacAddress::from_slice(&bytes[6..12]);
    let mut ethertype = u16::from_be_bytes([bytes[12], bytes[13]]);
    let mut off = ETH_HEADER_LEN;
    let mut vlan = None;
    if ethertype == ETHERTYPE_VLAN {
        if bytes.len() < ETH_HEADER_LEN + VLAN_TAG_LEN {
            return Err(CodecError::Truncated { offset: bytes.len(), needed: ETH_HEADER_LEN + VLAN_TAG_LEN });
        }
        vlan = Some(VlanTag::from_tci(u16::from_be_bytes([bytes[14], bytes[15]])));
        ethertype = u16::from_be_bytes([bytes[16], bytes[17]]);
        off += VLAN_TAG_LEN;
    }
    Ok(EthFrame { dst, src, vlan, ethertype, payload: bytes[off..].to_vec() })
}

/// Borrowed view of the L2 header, used on hot paths that must not copy.
#[derive(Debug, Clone, Copy)]
pub struct L2View<'a> {
    pub dst: MacAddress,
    pub src: MacAddress,
    pub vlan: Option<VlanTag>,
    pub ethertype: u16,
    pub payload: &'a [u8],
    pub payload_offset: usize,
}

pub fn view_frame(bytes: &[u8]) -> Result<L2View<'_>, CodecError> {
    if bytes.len() < ETH_HEADER_LEN {
        return Err(CodecError::Truncated { offset: bytes.len(), needed: ETH_HEADER_LEN });
    }
    let mut ethertype = u16::from_be_bytes([bytes[12], bytes[13]]);
    let mut off = ETH_HEADER_LEN;
    let mut vlan = None;
    if ethertype == ETHERTYPE_VLAN {
        if bytes.len() < ETH_HEADER_LEN + VLAN_TAG_LEN {
            return Err(CodecError::Truncated { offset: bytes.len(), needed: ETH_HEADER_LEN + VLAN_TAG_LEN });
        }
        vlan = Some(VlanTag::from_tci(u16::from_be_bytes([bytes[14], bytes[15]])));
        ethertype = u16::from_be_bytes([bytes[16], bytes[17]]);
        off += VLAN_TAG_LEN;
    }
    Ok(L2View {
        dst: MacAddress::from_slice(&bytes[0..6]),
        src: MacAddress::from_slice(&bytes[6..12]),
        vlan,
        ethertype,
        payload: &bytes[off..],
        payload_offset: off,
    })
}
