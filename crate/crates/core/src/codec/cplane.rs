//! C-Plane Section Type-1 messages with the beamforming-weight extension
//! (extType 1).

use serde::{Deserialize, Serialize};

use super::bits::{sign_extend, BitReader, BitWriter};
use super::ecpri::{EcpriHeader, SeqId, ECPRI_HEADER_LEN, MSG_RT_CONTROL};
use super::{check_width, CodecError, Direction, RadioTiming};

pub const SECTION_TYPE_1: u8 = 1;
pub const EXT_TYPE_BFW: u8 = 1;
pub const CPLANE_APP_HEADER_LEN: usize = 8;
pub const CSECTION1_LEN: usize = 8;

/// `udCompHdr`: IQ width (0 encodes 16) and compression method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct CompHdr {
    pub iq_width: u8,
    pub comp_meth: u8,
}

impl CompHdr {
    fn to_byte(self) -> u8 {
        (self.iq_width << 4) | (self.comp_meth & 0x0f)
    }

    fn from_byte(b: u8) -> Self {
        CompHdr { iq_width: b >> 4, comp_meth: b & 0x0f }
    }
}

/// Radio application header of a Section Type-1 message (first 8 bytes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CPlaneHeader {
    pub direction: Direction,
    pub payload_version: u8,
    pub filter_index: u8,
    /// `symbol_id` carries `startSymbolId`.
    pub timing: RadioTiming,
    pub section_type: u8,
    pub ud_comp_hdr: CompHdr,
    pub reserved: u8,
}

impl CPlaneHeader {
    pub fn new(direction: Direction, timing: RadioTiming) -> Self {
        CPlaneHeader {
            direction,
            payload_version: 1,
            filter_index: 0,
            timing,
            section_type: SECTION_TYPE_1,
            ud_comp_hdr: CompHdr::default(),
            reserved: 0,
        }
    }
}

/// Beamforming weights extension (extType 1), uncompressed weights only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BfwExt1 {
    /// Bits per weight component, 1..=16.
    pub iq_width: u8,
    pub comp_meth: u8,
    /// (bfwI, bfwQ) pairs.
    pub weights: Vec<(i16, i16)>,
}

impl BfwExt1 {
    pub fn new(iq_width: u8, weights: Vec<(i16, i16)>) -> Self {
        BfwExt1 { iq_width, comp_meth: 0, weights }
    }

    /// Encoded length in bytes including padding to a 4-byte boundary.
    pub fn byte_len(&self) -> usize {
        Self::padded_len(self.iq_width, self.weights.len())
    }

    pub fn ext_len_words(&self) -> usize {
        self.byte_len() / 4
    }

    fn padded_len(iq_width: u8, count: usize) -> usize {
        let bits = 24 + 2 * iq_width as usize * count;
        bits.div_ceil(32) * 4
    }

    /// Number of weight pairs a decoder derives from `extLen` and the width.
    pub fn max_weights(iq_width: u8, ext_len_words: usize) -> usize {
        if ext_len_words == 0 {
            return 0;
        }
        (ext_len_words * 32 - 24) / (2 * iq_width as usize)
    }

    fn validate(&self) -> Result<(), CodecError> {
        if !(1..=16).contains(&self.iq_width) {
            return Err(CodecError::InvalidField { field: "bfwIqWidth", value: self.iq_width as u64 });
        }
        if self.comp_meth != 0 {
            return Err(CodecError::UnsupportedCompression(self.comp_meth));
        }
        let lo = -(1i32 << (self.iq_width - 1));
        let hi = (1i32 << (self.iq_width - 1)) - 1;
        for &(i, q) in &self.weights {
            for v in [i as i32, q as i32] {
                if v < lo || v > hi {
                    return Err(CodecError::InvalidField { field: "bfw", value: v as u64 });
                }
            }
        }
        if self.ext_len_words() > u8::MAX as usize {
            return Err(CodecError::Oversize { len: self.byte_len(), max: u8::MAX as usize * 4 });
        }
        Ok(())
    }

    fn write(&self, w: &mut BitWriter) {
        let start = w.byte_len();
        w.put(0, 1); // ef: last extension
        w.put(EXT_TYPE_BFW as u64, 7);
        w.put(self.ext_len_words() as u64, 8);
        let width_code = if self.iq_width == 16 { 0 } else { self.iq_width };
        w.put(width_code as u64, 4);
        w.put(self.comp_meth as u64, 4);
        let mask = (1u64 << self.iq_width) - 1;
        for &(i, q) in &self.weights {
            w.put(i as i64 as u64 & mask, self.iq_width as u32);
            w.put(q as i64 as u64 & mask, self.iq_width as u32);
        }
        w.pad_to(1);
        let written = w.byte_len() - start;
        for _ in written..self.byte_len() {
            w.put(0, 8);
        }
    }
}

/// One Section Type-1 section. `ef` is implied by `ext`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CSection1 {
    pub section_id: u16,
    pub rb: bool,
    pub sym_inc: bool,
    pub start_prbc: u16,
    pub num_prbc: u8,
    pub re_mask: u16,
    pub num_symbol: u8,
    pub beam_id: u16,
    pub ext: Option<BfwExt1>,
}

impl CSection1 {
    pub fn new(section_id: u16, start_prbc: u16, num_prbc: u8) -> Self {
        CSection1 {
            section_id,
            rb: false,
            sym_inc: false,
            start_prbc,
            num_prbc,
            re_mask: 0xfff,
            num_symbol: 1,
            beam_id: 0,
            ext: None,
        }
    }

    pub fn byte_len(&self) -> usize {
        CSECTION1_LEN + self.ext.as_ref().map_or(0, BfwExt1::byte_len)
    }

    fn validate(&self) -> Result<(), CodecError> {
        check_width("sectionId", self.section_id as u64, 12)?;
        check_width("startPrbc", self.start_prbc as u64, 10)?;
        check_width("reMask", self.re_mask as u64, 12)?;
        check_width("numSymbol", self.num_symbol as u64, 4)?;
        check_width("beamId", self.beam_id as u64, 15)?;
        if self.num_symbol == 0 {
            return Err(CodecError::InvalidField { field: "numSymbol", value: 0 });
        }
        if let Some(ext) = &self.ext {
            ext.validate()?;
        }
        Ok(())
    }
}

/// A decoded C-Plane message: eCPRI stream/sequence ids, application
/// header and sections.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CPlaneMessage {
    pub eaxc_id: u16,
    pub seq: SeqId,
    pub header: CPlaneHeader,
    pub sections: Vec<CSection1>,
}

impl CPlaneMessage {
    pub fn app_len(&self) -> usize {
        CPLANE_APP_HEADER_LEN + self.sections.iter().map(CSection1::byte_len).sum::<usize>()
    }

    /// eCPRI header plus application payload.
    pub fn encoded_len(&self) -> usize {
        ECPRI_HEADER_LEN + self.app_len()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CPlaneDecodeOptions {
    /// Known number of beamforming weight pairs per extension. When absent
    /// the count is derived from `extLen` and `bfwIqWidth`.
    pub bfw_count: Option<usize>,
}

pub fn encode_cplane(msg: &CPlaneMessage) -> Result<Vec<u8>, CodecError> {
    let h = &msg.header;
    if h.section_type != SECTION_TYPE_1 {
        return Err(CodecError::UnsupportedSectionType(h.section_type));
    }
    if msg.sections.is_empty() {
        return Err(CodecError::InvalidField { field: "numberOfSections", value: 0 });
    }
    if msg.sections.len() > u8::MAX as usize {
        return Err(CodecError::InvalidField { field: "numberOfSections", value: msg.sections.len() as u64 });
    }
    check_width("payloadVersion", h.payload_version as u64, 3)?;
    check_width("filterIndex", h.filter_index as u64, 4)?;
    h.timing.validate()?;
    check_width("udIqWidth", h.ud_comp_hdr.iq_width as u64, 4)?;
    check_width("udCompMeth", h.ud_comp_hdr.comp_meth as u64, 4)?;
    for s in &msg.sections {
        s.validate()?;
    }
    let app_len = msg.app_len();
    if app_len + ECPRI_HEADER_LEN > u16::MAX as usize {
        return Err(CodecError::Oversize { len: app_len, max: u16::MAX as usize });
    }

    let mut out = Vec::with_capacity(ECPRI_HEADER_LEN + app_len);
    EcpriHeader::new(MSG_RT_CONTROL, msg.eaxc_id, msg.seq, app_len).write(&mut out);

    let mut w = BitWriter::with_capacity(app_len);
    w.put(h.direction as u64, 1);
    w.put(h.payload_version as u64, 3);
    w.put(h.filter_index as u64, 4);
    h.timing.write(&mut w);
    w.put(msg.sections.len() as u64, 8);
    w.put(h.section_type as u64, 8);
    w.put(h.ud_comp_hdr.to_byte() as u64, 8);
    w.put(h.reserved as u64, 8);
    for s in &msg.sections {
        w.put(s.section_id as u64, 12);
        w.put(s.rb as u64, 1);
        w.put(s.sym_inc as u64, 1);
        w.put(s.start_prbc as u64, 10);
        w.put(s.num_prbc as u64, 8);
        w.put(s.re_mask as u64, 12);
        w.put(s.num_symbol as u64, 4);
        w.put(s.ext.is_some() as u64, 1);
        w.put(s.beam_id as u64, 15);
        if let Some(ext) = &s.ext {
            ext.write(&mut w);
        }
    }
    debug_assert_eq!(w.byte_len(), app_len);
    out.extend_from_slice(&w.into_bytes());
    Ok(out)
}

pub fn decode_cplane(bytes: &[u8]) -> Result<CPlaneMessage, CodecError> {
    decode_cplane_at(bytes, 0, CPlaneDecodeOptions::default())
}

/// Decode an eCPRI real-time control message located at `base` in a frame.
pub fn decode_cplane_at(bytes: &[u8], base: usize, opts: CPlaneDecodeOptions) -> Result<CPlaneMessage, CodecError> {
    let ecpri = EcpriHeader::parse(bytes, base)?;
    if ecpri.msg_type != MSG_RT_CONTROL {
        return Err(CodecError::MessageType { expected: MSG_RT_CONTROL, found: ecpri.msg_type });
    }
    let app_len = ecpri.app_len()?;
    let body = &bytes[ECPRI_HEADER_LEN..];
    if body.len() < app_len {
        return Err(CodecError::Truncated { offset: base + bytes.len(), needed: base + ECPRI_HEADER_LEN + app_len });
    }
    let app = &body[..app_len];
    let mut r = BitReader::new(app, base + ECPRI_HEADER_LEN);

    let direction = Direction::from_bit(r.get(1)? as u8);
    let payload_version = r.get(3)? as u8;
    let filter_index = r.get(4)? as u8;
    let timing = RadioTiming::read(&mut r)?;
    let num_sections = r.get(8)? as usize;
    let section_type = r.get(8)? as u8;
    if section_type != SECTION_TYPE_1 {
        return Err(CodecError::UnsupportedSectionType(section_type));
    }
    let ud_comp_hdr = CompHdr::from_byte(r.get(8)? as u8);
    let reserved = r.get(8)? as u8;

    let mut sections = Vec::with_capacity(num_sections);
    for _ in 0..num_sections {
        let section_id = r.get(12)? as u16;
        let rb = r.get(1)? == 1;
        let sym_inc = r.get(1)? == 1;
        let start_prbc = r.get(10)? as u16;
        let num_prbc = r.get(8)? as u8;
        let re_mask = r.get(12)? as u16;
        let num_symbol = r.get(4)? as u8;
        let ef = r.get(1)? == 1;
        let beam_id = r.get(15)? as u16;
        let ext = if ef { Some(read_bfw_ext(&mut r, opts)?) } else { None };
        sections.push(CSection1 { section_id, rb, sym_inc, start_prbc, num_prbc, re_mask, num_symbol, beam_id, ext });
    }
    if !r.is_empty() {
        return Err(CodecError::TrailingBytes { offset: r.offset(), count: r.remaining_bytes() });
    }

    Ok(CPlaneMessage {
        eaxc_id: ecpri.eaxc_id,
        seq: ecpri.seq,
        header: CPlaneHeader { direction, payload_version, filter_index, timing, section_type, ud_comp_hdr, reserved },
        sections,
    })
}

fn read_bfw_ext(r: &mut BitReader<'_>, opts: CPlaneDecodeOptions) -> Result<BfwExt1, CodecError> {
    let ext_start = r.offset();
    let more = r.get(1)? == 1;
    let ext_type = r.get(7)? as u8;
    if ext_type != EXT_TYPE_BFW {
        return Err(CodecError::UnsupportedExtension(ext_type));
    }
    if more {
        return Err(CodecError::UnsupportedExtension(ext_type | 0x80));
    }
    let ext_len = r.get(8)? as usize;
    if ext_len == 0 {
        return Err(CodecError::ExtLenMismatch { ext_len, weights: 0 });
    }
    let width_code = r.get(4)? as u8;
    let comp_meth = r.get(4)? as u8;
    if comp_meth != 0 {
        return Err(CodecError::UnsupportedCompression(comp_meth));
    }
    let iq_width = if width_code == 0 { 16 } else { width_code };
    let count = match opts.bfw_count {
        Some(n) => {
            if BfwExt1::padded_len(iq_width, n) != ext_len * 4 {
                return Err(CodecError::ExtLenMismatch { ext_len, weights: n });
            }
            n
        }
        None => BfwExt1::max_weights(iq_width, ext_len),
    };
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        let i = sign_extend(r.get(iq_width as u32)?, iq_width as u32) as i16;
        let q = sign_extend(r.get(iq_width as u32)?, iq_width as u32) as i16;
        weights.push((i, q));
    }
    let used_bits = 24 + 2 * iq_width as usize * count;
    let pad_bits = ext_len * 32 - used_bits;
    let mut nonzero = false;
    for _ in 0..pad_bits {
        nonzero |= r.get(1)? != 0;
    }
    if nonzero {
        log::warn!("extType-1 at offset {ext_start}: nonzero padding");
    }
    Ok(BfwExt1 { iq_width, comp_meth, weights })
}
