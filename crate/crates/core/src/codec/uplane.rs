//! U-Plane IQ data messages, uncompressed 16-bit samples.

use serde::{Deserialize, Serialize};

use super::bits::{BitReader, BitWriter};
use super::ecpri::{EcpriHeader, SeqId, ECPRI_HEADER_LEN, MSG_IQ_DATA};
use super::{check_width, CodecError, Direction, RadioTiming};

pub const UPLANE_APP_HEADER_LEN: usize = 4;
pub const USECTION_HEADER_LEN: usize = 4;
pub const RE_PER_PRB: usize = 12;
/// Bytes of one uncompressed IQ sample (16-bit I, 16-bit Q).
pub const IQ_SAMPLE_LEN: usize = 4;
pub const PRB_IQ_LEN: usize = RE_PER_PRB * IQ_SAMPLE_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct IqSample {
    pub i: i16,
    pub q: i16,
}

impl IqSample {
    pub const fn new(i: i16, q: i16) -> Self {
        IqSample { i, q }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UPlaneHeader {
    pub direction: Direction,
    pub payload_version: u8,
    pub filter_index: u8,
    pub timing: RadioTiming,
}

impl UPlaneHeader {
    pub fn new(direction: Direction, timing: RadioTiming) -> Self {
        UPlaneHeader { direction, payload_version: 1, filter_index: 0, timing }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct USection {
    pub section_id: u16,
    pub rb: bool,
    pub sym_inc: bool,
    pub start_prbu: u16,
    /// Never 0 in forged traffic ("all PRBs" needs carrier config to decode).
    pub num_prbu: u8,
    pub iq: Vec<IqSample>,
}

impl USection {
    pub fn zeroed(section_id: u16, start_prbu: u16, num_prbu: u8) -> Self {
        USection {
            section_id,
            rb: false,
            sym_inc: false,
            start_prbu,
            num_prbu,
            iq: vec![IqSample::default(); RE_PER_PRB * num_prbu as usize],
        }
    }

    pub fn byte_len(&self) -> usize {
        USECTION_HEADER_LEN + self.iq.len() * IQ_SAMPLE_LEN
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UPlaneMessage {
    pub eaxc_id: u16,
    pub seq: SeqId,
    pub header: UPlaneHeader,
    pub sections: Vec<USection>,
}

impl UPlaneMessage {
    pub fn app_len(&self) -> usize {
        UPLANE_APP_HEADER_LEN + self.sections.iter().map(USection::byte_len).sum::<usize>()
    }

    pub fn encoded_len(&self) -> usize {
        ECPRI_HEADER_LEN + self.app_len()
    }
}

pub fn encode_uplane(msg: &UPlaneMessage) -> Result<Vec<u8>, CodecError> {
    let h = &msg.header;
    if msg.sections.is_empty() {
        return Err(CodecError::InvalidField { field: "sections", value: 0 });
    }
    check_width("payloadVersion", h.payload_version as u64, 3)?;
    check_width("filterIndex", h.filter_index as u64, 4)?;
    h.timing.validate()?;
    for s in &msg.sections {
        check_width("sectionId", s.section_id as u64, 12)?;
        check_width("startPrbu", s.start_prbu as u64, 10)?;
        if s.num_prbu == 0 {
            return Err(CodecError::InvalidField { field: "numPrbu", value: 0 });
        }
        let expected = RE_PER_PRB * s.num_prbu as usize;
        if s.iq.len() != expected {
            return Err(CodecError::IqLengthMismatch { expected, actual: s.iq.len() });
        }
    }
    let app_len = msg.app_len();
    if app_len + ECPRI_HEADER_LEN > u16::MAX as usize {
        return Err(CodecError::Oversize { len: app_len, max: u16::MAX as usize });
    }

    let mut out = Vec::with_capacity(ECPRI_HEADER_LEN + app_len);
    EcpriHeader::new(MSG_IQ_DATA, msg.eaxc_id, msg.seq, app_len).write(&mut out);
    let mut w = BitWriter::with_capacity(UPLANE_APP_HEADER_LEN + USECTION_HEADER_LEN);
    w.put(h.direction as u64, 1);
    w.put(h.payload_version as u64, 3);
    w.put(h.filter_index as u64, 4);
    h.timing.write(&mut w);
    out.extend_from_slice(&w.into_bytes());
    for s in &msg.sections {
        let mut w = BitWriter::with_capacity(USECTION_HEADER_LEN);
        w.put(s.section_id as u64, 12);
        w.put(s.rb as u64, 1);
        w.put(s.sym_inc as u64, 1);
        w.put(s.start_prbu as u64, 10);
        w.put(s.num_prbu as u64, 8);
        out.extend_from_slice(&w.into_bytes());
        for sample in &s.iq {
            out.extend_from_slice(&sample.i.to_be_bytes());
            out.extend_from_slice(&sample.q.to_be_bytes());
        }
    }
    Ok(out)
}

pub fn decode_uplane(bytes: &[u8]) -> Result<UPlaneMessage, CodecError> {
    decode_uplane_at(bytes, 0)
}

pub fn decode_uplane_at(bytes: &[u8], base: usize) -> Result<UPlaneMessage, CodecError> {
    let ecpri = EcpriHeader::parse(bytes, base)?;
    if ecpri.msg_type != MSG_IQ_DATA {
        return Err(CodecError::MessageType { expected: MSG_IQ_DATA, found: ecpri.msg_type });
    }
    let app_len = ecpri.app_len()?;
    let body = &bytes[ECPRI_HEADER_LEN..];
    if body.len() < app_len {
        return Err(CodecError::Truncated { offset: base + bytes.len(), needed: base + ECPRI_HEADER_LEN + app_len });
    }
    let mut r = BitReader::new(&body[..app_len], base + ECPRI_HEADER_LEN);
    let direction = Direction::from_bit(r.get(1)? as u8);
    let payload_version = r.get(3)? as u8;
    let filter_index = r.get(4)? as u8;
    let timing = RadioTiming::read(&mut r)?;

    let mut sections = Vec::new();
    while !r.is_empty() {
        let section_id = r.get(12)? as u16;
        let rb = r.get(1)? == 1;
        let sym_inc = r.get(1)? == 1;
        let start_prbu = r.get(10)? as u16;
        let num_prbu = r.get(8)? as u8;
        if num_prbu == 0 {
            return Err(CodecError::InvalidField { field: "numPrbu", value: 0 });
        }
        let expected = RE_PER_PRB * num_prbu as usize;
        let have = r.remaining_bytes() / IQ_SAMPLE_LEN;
        if have < expected {
            return Err(CodecError::IqLengthMismatch { expected, actual: have });
        }
        let raw = r.get_bytes(expected * IQ_SAMPLE_LEN)?;
        let iq = raw
            .chunks_exact(IQ_SAMPLE_LEN)
            .map(|c| IqSample::new(i16::from_be_bytes([c[0], c[1]]), i16::from_be_bytes([c[2], c[3]])))
            .collect();
        sections.push(USection { section_id, rb, sym_inc, start_prbu, num_prbu, iq });
    }
    if sections.is_empty() {
        return Err(CodecError::InvalidField { field: "sections", value: 0 });
    }
    Ok(UPlaneMessage {
        eaxc_id: ecpri.eaxc_id,
        seq: ecpri.seq,
        header: UPlaneHeader { direction, payload_version, filter_index, timing },
        sections,
    })
}
