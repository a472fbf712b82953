//! Fixtures shared by the benchmarks.

use fhdos_core::codec::{
    encode_frame, forge_cplane_frame, forge_uplane_frame, BfwExt1, CPlaneHeader, CPlaneMessage, CSection1, Direction,
    MacAddress, RadioTiming, SeqId,
};

pub const DST: MacAddress = MacAddress([0x02, 0, 0, 0, 0x0d, 0x01]);
pub const SRC: MacAddress = MacAddress([0x02, 0, 0, 0, 0x0e, 0x01]);

/// A C-Plane message with several sections, one carrying beamforming weights.
pub fn busy_cplane() -> CPlaneMessage {
    let mut sections: Vec<CSection1> = (0..4).map(|i| CSection1::new(i, i * 50, 50)).collect();
    sections[0].ext = Some(BfwExt1::new(16, (0..32).map(|k| (k, -k)).collect()));
    CPlaneMessage {
        eaxc_id: 0x1234,
        seq: SeqId::unfragmented(7),
        header: CPlaneHeader::new(
            Direction::Downlink,
            RadioTiming { frame_id: 1, subframe_id: 2, slot_id: 3, symbol_id: 4 },
        ),
        sections,
    }
}

pub fn minimal_cplane_bytes() -> Vec<u8> {
    encode_frame(&forge_cplane_frame(DST, SRC, Direction::Downlink)).expect("minimal frame encodes")
}

/// A U-Plane frame carrying `prbs` resource blocks.
pub fn uplane_bytes(prbs: u8) -> Vec<u8> {
    encode_frame(&forge_uplane_frame(DST, SRC, Direction::Downlink, prbs)).expect("U-Plane frame encodes")
}
