//! Attack capture generation: templates, address/VLAN edits and volume sizing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addr::SourceMacStrategy;
use crate::codec::eth::{ETH_HEADER_LEN, VLAN_TAG_LEN};
use crate::codec::uplane::{PRB_IQ_LEN, UPLANE_APP_HEADER_LEN, USECTION_HEADER_LEN};
use crate::codec::{
    classify_bytes, encode_frame, forge_cplane_frame, forge_uplane_frame, wire_len_of, CodecError, FrameClass,
    MacAddress, VlanTag, ECPRI_HEADER_LEN, ETHERTYPE_VLAN, FCS_LEN, MIN_FRAME_LEN, MTU,
};
use crate::pcap::PacketRecord;

pub const MIN_CPLANE_WIRE_LEN: usize = 64;
pub const MIN_UPLANE_WIRE_LEN: usize = 82;
pub const MAX_WIRE_LEN: usize = ETH_HEADER_LEN + MTU + FCS_LEN;

pub const TEMPLATE_DST: MacAddress = MacAddress([0x02, 0x00, 0x00, 0x00, 0x00, 0x02]);
pub const TEMPLATE_SRC: MacAddress = MacAddress([0x02, 0x00, 0x00, 0x00, 0x00, 0x01]);

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("template is not a fronthaul C/U-Plane frame")]
    NotFronthaul,
    #[error("{class} frames need at least {min} bytes, {requested} requested")]
    TooSmall { class: FrameClass, min: usize, requested: usize },
    #[error("{requested} bytes exceeds the {max}-byte maximum frame")]
    TooLarge { requested: usize, max: usize },
    #[error("volume must be positive, got {0} Mbit")]
    Volume(f64),
}

/// A captured or synthesized frame used as the unit of attack traffic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTemplate {
    pub record: PacketRecord,
    pub class: FrameClass,
    /// On-link size including FCS.
    pub wire_len: usize,
}

impl FrameTemplate {
    pub fn from_record(record: PacketRecord) -> Result<Self, ForgeError> {
        let class = classify_bytes(&record.data);
        if class == FrameClass::Other {
            return Err(ForgeError::NotFronthaul);
        }
        let wire_len = wire_len_of(&record.data);
        Ok(FrameTemplate { record, class, wire_len })
    }

    pub fn bytes(&self) -> &[u8] {
        &self.record.data
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VlanEdit {
    Set(VlanTag),
    Strip,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EditSet {
    pub src: Option<SourceMacStrategy>,
    pub dst: Option<MacAddress>,
    pub vlan: Option<VlanEdit>,
    /// Addresses random sources must never take (victim, peers).
    pub exclude: Vec<MacAddress>,
}

impl EditSet {
    pub fn with_src(mut self, s: SourceMacStrategy) -> Self {
        self.src = Some(s);
        self
    }

    pub fn with_dst(mut self, d: MacAddress) -> Self {
        self.dst = Some(d);
        self
    }

    pub fn with_vlan(mut self, v: VlanEdit) -> Self {
        self.vlan = Some(v);
        self
    }

    /// Apply the per-run edits (destination and VLAN). Source edits depend on
    /// the packet index and are applied by [`EditSet::patch_source`].
    pub fn apply_static(&self, frame: &[u8]) -> Vec<u8> {
        let mut out = frame.to_vec();
        if let Some(d) = self.dst {
            out[0..6].copy_from_slice(&d.0);
        }
        let tagged = out.len() >= ETH_HEADER_LEN + VLAN_TAG_LEN && out[12..14] == ETHERTYPE_VLAN.to_be_bytes();
        match (self.vlan, tagged) {
            (Some(VlanEdit::Set(tag)), true) => out[14..16].copy_from_slice(&tag.tci().to_be_bytes()),
            (Some(VlanEdit::Set(tag)), false) => {
                let mut ins = ETHERTYPE_VLAN.to_be_bytes().to_vec();
                ins.extend_from_slice(&tag.tci().to_be_bytes());
                out.splice(12..12, ins);
            }
            (Some(VlanEdit::Strip), true) => {
                out.drain(12..16);
                if out.len() < MIN_FRAME_LEN {
                    out.resize(MIN_FRAME_LEN, 0);
                }
            }
            _ => {}
        }
        out
    }

    /// Write the source address for packet `index` into an encoded frame.
    pub fn patch_source(&self, frame: &mut [u8], index: u64) {
        if let Some(s) = &self.src {
            let dst = MacAddress::from_slice(&frame[0..6]);
            let m = s.source_for_excluding(dst, index, &self.exclude);
            frame[6..12].copy_from_slice(&m.0);
        }
    }

    pub fn apply(&self, frame: &[u8], index: u64) -> Vec<u8> {
        let mut out = self.apply_static(frame);
        self.patch_source(&mut out, index);
        out
    }
}

/// Number of frames of `wire_len` bytes needed to reach `volume_mbit`,
/// rounding up so the delivered volume is never short.
pub fn frames_for_volume(volume_mbit: f64, wire_len: usize) -> u64 {
    let bits = volume_mbit * 1e6;
    let fb = (wire_len * 8) as f64;
    let mut n = (bits / fb).ceil().max(1.0) as u64;
    // guard against representation error in the division
    while (n as f64) * fb < bits {
        n += 1;
    }
    while n > 1 && ((n - 1) as f64) * fb >= bits {
        n -= 1;
    }
    n
}

pub fn build_attack_pcap(
    template: &FrameTemplate,
    volume_mbit: f64,
    edits: &EditSet,
) -> Result<Vec<PacketRecord>, ForgeError> {
    if !volume_mbit.is_finite() || volume_mbit <= 0.0 {
        return Err(ForgeError::Volume(volume_mbit));
    }
    if template.class == FrameClass::Other {
        return Err(ForgeError::NotFronthaul);
    }
    let base = edits.apply_static(template.bytes());
    let n = frames_for_volume(volume_mbit, wire_len_of(&base));
    let mut out = Vec::with_capacity(n as usize);
    for k in 0..n {
        let mut data = base.clone();
        edits.patch_source(&mut data, k);
        let usec = (k as u128 * 1_000_000 / n as u128) as u32;
        out.push(PacketRecord::new(0, usec, data));
    }
    Ok(out)
}

pub fn min_wire_len(class: FrameClass) -> Option<usize> {
    match class {
        FrameClass::CPlaneDL | FrameClass::CPlaneUL => Some(MIN_CPLANE_WIRE_LEN),
        FrameClass::UPlaneDL | FrameClass::UPlaneUL => Some(MIN_UPLANE_WIRE_LEN),
        FrameClass::Other => None,
    }
}

/// Build a valid frame of `class` occupying exactly `wire_len` bytes on the
/// link. U-Plane frames carry as many PRBs as fit; the rest is zero padding
/// past the eCPRI payload.
pub fn synthesize_template(class: FrameClass, wire_len: usize) -> Result<FrameTemplate, ForgeError> {
    let min = min_wire_len(class).ok_or(ForgeError::NotFronthaul)?;
    if wire_len < min {
        return Err(ForgeError::TooSmall { class, min, requested: wire_len });
    }
    if wire_len > MAX_WIRE_LEN {
        return Err(ForgeError::TooLarge { requested: wire_len, max: MAX_WIRE_LEN });
    }
    let dir = class.direction().expect("fronthaul class has a direction");
    let mut frame = if class.is_cplane() {
        forge_cplane_frame(TEMPLATE_DST, TEMPLATE_SRC, dir)
    } else {
        let fixed = ETH_HEADER_LEN + ECPRI_HEADER_LEN + UPLANE_APP_HEADER_LEN + USECTION_HEADER_LEN + FCS_LEN;
        let prbs = ((wire_len - fixed) / PRB_IQ_LEN).clamp(1, 255) as u8;
        forge_uplane_frame(TEMPLATE_DST, TEMPLATE_SRC, dir, prbs)
    };
    let target_payload = wire_len - FCS_LEN - ETH_HEADER_LEN;
    frame.payload.resize(target_payload.max(frame.payload.len()), 0);
    let data = encode_frame(&frame)?;
    debug_assert_eq!(wire_len_of(&data), wire_len);
    FrameTemplate::from_record(PacketRecord::new(0, 0, data))
}

/// Convenience for the common minimal templates.
pub fn default_template(class: FrameClass) -> Result<FrameTemplate, ForgeError> {
    synthesize_template(class, min_wire_len(class).ok_or(ForgeError::NotFronthaul)?)
}
