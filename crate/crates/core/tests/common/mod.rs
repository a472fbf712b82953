#![allow(dead_code)]

use fhdos_core::attack::{SourceColumn, Target, TrafficType, TIERS_MBPS};
use fhdos_core::codec::{
    BfwExt1, CPlaneHeader, CPlaneMessage, CSection1, CompHdr, Direction, EthFrame, IqSample, MacAddress, RadioTiming,
    SeqId, UPlaneHeader, UPlaneMessage, USection, VlanTag,
};
use fhdos_core::sim::Verdict;
use proptest::prelude::*;

pub const GOLDEN: &str = include_str!("../data/golden.txt");

pub fn golden(name: &str) -> Vec<u8> {
    let line = GOLDEN.lines().find(|l| l.starts_with(&format!("{name} "))).expect("golden vector present");
    let hex = line.split_whitespace().nth(1).unwrap();
    (0..hex.len()).step_by(2).map(|i| u8::from_str_radix(&hex[i..i + 2], 16).unwrap()).collect()
}

/// Reference outcome grid: per target, rows C-Plane DL, U-Plane DL,
/// U-Plane UL; columns peer ×3, random ×3, same-as-destination ×3.
pub const REFERENCE_TOWARD_ODU: [&str; 3] = ["PPP PPP FFF", "PPP FFF PFF", "PPP FFF FFF"];
pub const REFERENCE_TOWARD_ORU: [&str; 3] = ["FFF FFF PPP", "FFF PFF PPP", "FFF PPP PPP"];

pub fn reference_verdict(target: Target, traffic: TrafficType, source: SourceColumn, tier: u32) -> Verdict {
    let grid = match target {
        Target::Odu => REFERENCE_TOWARD_ODU,
        Target::Oru => REFERENCE_TOWARD_ORU,
    };
    let row = TrafficType::ALL.iter().position(|t| *t == traffic).unwrap();
    let col = SourceColumn::MATRIX.iter().position(|s| *s == source).expect("matrix column");
    let tier_idx = TIERS_MBPS.iter().position(|t| *t == tier).unwrap();
    let ch = grid[row].split(' ').nth(col).unwrap().as_bytes()[tier_idx];
    if ch == b'P' {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

pub fn arb_mac() -> impl Strategy<Value = MacAddress> {
    any::<[u8; 6]>().prop_map(MacAddress)
}

pub fn arb_timing() -> impl Strategy<Value = RadioTiming> {
    (any::<u8>(), 0u8..16, 0u8..64, 0u8..64).prop_map(|(frame_id, subframe_id, slot_id, symbol_id)| RadioTiming {
        frame_id,
        subframe_id,
        slot_id,
        symbol_id,
    })
}

pub fn arb_seq() -> impl Strategy<Value = SeqId> {
    (any::<u8>(), any::<bool>(), 0u8..128).prop_map(|(sequence_id, e_bit, sub_sequence_id)| SeqId {
        sequence_id,
        e_bit,
        sub_sequence_id,
    })
}

pub fn arb_vlan() -> impl Strategy<Value = Option<VlanTag>> {
    prop::option::of((0u16..4095, 0u8..8).prop_map(|(vid, pcp)| VlanTag::new(vid).unwrap().with_pcp(pcp)))
}

fn arb_ext() -> impl Strategy<Value = BfwExt1> {
    (1u8..=16, 1usize..12).prop_flat_map(|(w, n)| {
        // fill the extension so the pair count is recoverable from extLen alone
        let words = BfwExt1::new(w, vec![(0, 0); n]).ext_len_words();
        let count = BfwExt1::max_weights(w, words);
        let lo = -(1i32 << (w - 1));
        let hi = (1i32 << (w - 1)) - 1;
        prop::collection::vec((lo..=hi, lo..=hi).prop_map(|(i, q)| (i as i16, q as i16)), count)
            .prop_map(move |weights| BfwExt1::new(w, weights))
    })
}

pub fn arb_csection() -> impl Strategy<Value = CSection1> {
    (
        0u16..4096,
        any::<bool>(),
        any::<bool>(),
        0u16..1024,
        any::<u8>(),
        0u16..4096,
        1u8..16,
        0u16..32768,
        prop::option::weighted(0.3, arb_ext()),
    )
        .prop_map(|(section_id, rb, sym_inc, start_prbc, num_prbc, re_mask, num_symbol, beam_id, ext)| CSection1 {
            section_id,
            rb,
            sym_inc,
            start_prbc,
            num_prbc,
            re_mask,
            num_symbol,
            beam_id,
            ext,
        })
}

pub fn arb_cplane(direction: Direction) -> impl Strategy<Value = CPlaneMessage> {
    (any::<u16>(), arb_seq(), 0u8..8, 0u8..16, arb_timing(), 0u8..16, prop::collection::vec(arb_csection(), 1..5))
        .prop_map(move |(eaxc_id, seq, pv, fi, timing, iq_width, sections)| {
            let mut header = CPlaneHeader::new(direction, timing);
            header.payload_version = pv;
            header.filter_index = fi;
            header.ud_comp_hdr = CompHdr { iq_width, comp_meth: 0 };
            CPlaneMessage { eaxc_id, seq, header, sections }
        })
}

pub fn arb_usection() -> impl Strategy<Value = USection> {
    (0u16..4096, any::<bool>(), any::<bool>(), 0u16..1024, 1u8..5).prop_flat_map(
        |(section_id, rb, sym_inc, start_prbu, num_prbu)| {
            prop::collection::vec(any::<(i16, i16)>().prop_map(|(i, q)| IqSample::new(i, q)), 12 * num_prbu as usize)
                .prop_map(move |iq| USection { section_id, rb, sym_inc, start_prbu, num_prbu, iq })
        },
    )
}

pub fn arb_uplane(direction: Direction) -> impl Strategy<Value = UPlaneMessage> {
    (any::<u16>(), arb_seq(), 0u8..8, 0u8..16, arb_timing(), prop::collection::vec(arb_usection(), 1..4)).prop_map(
        move |(eaxc_id, seq, pv, fi, timing, sections)| {
            let mut header = UPlaneHeader::new(direction, timing);
            header.payload_version = pv;
            header.filter_index = fi;
            UPlaneMessage { eaxc_id, seq, header, sections }
        },
    )
}

pub fn frame(dst: MacAddress, src: MacAddress, vlan: Option<VlanTag>, payload: Vec<u8>) -> EthFrame {
    let f = EthFrame::ecpri(dst, src, payload);
    match vlan {
        Some(t) => f.with_vlan(t),
        None => f,
    }
}
