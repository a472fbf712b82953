mod common;

use common::*;
use fhdos_core::codec::*;
use fhdos_core::pcap::read_pcap;
use proptest::prelude::*;

fn reference_cplane() -> EthFrame {
    let mut s1 = CSection1::new(0xABC, 0x155, 0x33);
    s1.sym_inc = true;
    s1.num_symbol = 14;
    s1.beam_id = 0x1234;
    let mut s2 = CSection1::new(0x001, 0x3FF, 0x10);
    s2.rb = true;
    s2.re_mask = 0x0F0;
    s2.beam_id = 0x7FFF;
    s2.ext = Some(BfwExt1::new(16, vec![(1, -1), (32767, -32768), (0, 256), (-2, 3)]));
    let timing = RadioTiming { frame_id: 0x5A, subframe_id: 3, slot_id: 17, symbol_id: 2 };
    let mut header = CPlaneHeader::new(Direction::Downlink, timing);
    header.ud_comp_hdr = CompHdr { iq_width: 9, comp_meth: 1 };
    let msg = CPlaneMessage { eaxc_id: 0x1234, seq: SeqId::unfragmented(0x2A), header, sections: vec![s1, s2] };
    EthFrame::ecpri(
        "00:11:22:33:44:55".parse().unwrap(),
        "00:aa:bb:cc:dd:ee".parse().unwrap(),
        encode_cplane(&msg).unwrap(),
    )
    .with_vlan(VlanTag::new(2).unwrap().with_pcp(7))
}

fn reference_uplane() -> EthFrame {
    let iq = (0..12).map(|k| IqSample::new(k * 100 - 600, 600 - k * 100)).collect();
    let sec = USection { section_id: 0x123, rb: false, sym_inc: false, start_prbu: 0x2A, num_prbu: 1, iq };
    let timing = RadioTiming { frame_id: 0xFE, subframe_id: 9, slot_id: 63, symbol_id: 13 };
    let mut header = UPlaneHeader::new(Direction::Uplink, timing);
    header.filter_index = 1;
    let msg = UPlaneMessage { eaxc_id: 0x8001, seq: SeqId::unfragmented(0xFF), header, sections: vec![sec] };
    EthFrame::ecpri(
        "00:aa:bb:cc:dd:ee".parse().unwrap(),
        "00:11:22:33:44:55".parse().unwrap(),
        encode_uplane(&msg).unwrap(),
    )
}

#[test]
fn golden_cplane_bytes() {
    assert_eq!(encode_frame(&reference_cplane()).unwrap(), golden("cplane_reference"));
}

#[test]
fn golden_uplane_bytes() {
    assert_eq!(encode_frame(&reference_uplane()).unwrap(), golden("uplane_reference"));
}

#[test]
fn golden_minimal_cplane_bytes() {
    let f = forge_cplane_frame(
        "00:11:22:33:44:55".parse().unwrap(),
        "00:aa:bb:cc:dd:ee".parse().unwrap(),
        Direction::Downlink,
    );
    let bytes = encode_frame(&f).unwrap();
    assert_eq!(bytes, golden("cplane_minimal"));
    assert_eq!(wire_len_of(&bytes), 64);
}

#[test]
fn golden_vectors_dissect_and_reencode() {
    for name in ["cplane_reference", "uplane_reference", "cplane_minimal"] {
        let raw = golden(name);
        let (frame, msg) = dissect(&raw).unwrap();
        let payload = msg.encode().unwrap();
        let mut rebuilt = frame.clone();
        rebuilt.payload = payload;
        assert_eq!(encode_frame(&rebuilt).unwrap(), raw, "{name}");
    }
}

#[test]
fn golden_ext_len_is_five_words() {
    let (_, msg) = dissect(&golden("cplane_reference")).unwrap();
    let FhMessage::CPlane(c) = msg else { panic!("expected C-Plane") };
    assert_eq!(c.sections[1].ext.as_ref().unwrap().ext_len_words(), 5);
}

#[test]
fn interop_capture_reads_and_dissects() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/scapy_interop.pcap");
    let recs = read_pcap(path).unwrap();
    assert_eq!(recs.len(), 3);
    let names = ["cplane_reference", "uplane_reference", "cplane_minimal"];
    for (rec, name) in recs.iter().zip(names) {
        assert_eq!(rec.data, golden(name));
        assert!(dissect(&rec.data).is_ok());
    }
    assert_eq!(classify_bytes(&recs[0].data), FrameClass::CPlaneDL);
    assert_eq!(classify_bytes(&recs[1].data), FrameClass::UPlaneUL);
}

/// Wire-bit position of bit `k` (LSB = 0) of a field starting at `start`.
fn wire_bit(start: usize, width: usize, k: usize) -> usize {
    start + (width - 1 - k)
}

fn single_bit_diff(a: &[u8], b: &[u8]) -> Vec<usize> {
    assert_eq!(a.len(), b.len());
    let mut out = Vec::new();
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        let d = x ^ y;
        for bit in 0..8 {
            if d & (0x80 >> bit) != 0 {
                out.push(i * 8 + bit);
            }
        }
    }
    out
}

#[test]
fn cplane_bit_flips_land_on_documented_bits() {
    let base = CPlaneMessage {
        eaxc_id: 0,
        seq: SeqId::unfragmented(0),
        header: CPlaneHeader::new(Direction::Uplink, RadioTiming::default()),
        sections: vec![CSection1 { re_mask: 0, num_symbol: 1, ..CSection1::new(0, 0, 0) }],
    };
    let enc = encode_cplane(&base).unwrap();
    let app = 8 * ECPRI_HEADER_LEN;
    type Setter = fn(&mut CPlaneMessage, u64);
    let fields: Vec<(&str, usize, usize, Setter)> = vec![
        ("eaxc", 32, 16, |m, v| m.eaxc_id ^= v as u16),
        ("seq", 48, 8, |m, v| m.seq.sequence_id ^= v as u8),
        ("filterIndex", app + 4, 4, |m, v| m.header.filter_index ^= v as u8),
        ("frameId", app + 8, 8, |m, v| m.header.timing.frame_id ^= v as u8),
        ("subframeId", app + 16, 4, |m, v| m.header.timing.subframe_id ^= v as u8),
        ("slotId", app + 20, 6, |m, v| m.header.timing.slot_id ^= v as u8),
        ("startSymbolId", app + 26, 6, |m, v| m.header.timing.symbol_id ^= v as u8),
        ("sectionId", app + 64, 12, |m, v| m.sections[0].section_id ^= v as u16),
        ("startPrbc", app + 78, 10, |m, v| m.sections[0].start_prbc ^= v as u16),
        ("numPrbc", app + 88, 8, |m, v| m.sections[0].num_prbc ^= v as u8),
        ("reMask", app + 96, 12, |m, v| m.sections[0].re_mask ^= v as u16),
        ("beamId", app + 113, 15, |m, v| m.sections[0].beam_id ^= v as u16),
    ];
    for (name, start, width, set) in fields {
        for k in 0..width {
            let mut m = base.clone();
            set(&mut m, 1 << k);
            let got = single_bit_diff(&enc, &encode_cplane(&m).unwrap());
            assert_eq!(got, vec![wire_bit(start, width, k)], "{name} bit {k}");
        }
    }
}

#[test]
fn uplane_bit_flips_land_on_documented_bits() {
    let base = UPlaneMessage {
        eaxc_id: 0,
        seq: SeqId::unfragmented(0),
        header: UPlaneHeader { payload_version: 0, ..UPlaneHeader::new(Direction::Uplink, RadioTiming::default()) },
        sections: vec![USection::zeroed(0, 0, 1)],
    };
    let enc = encode_uplane(&base).unwrap();
    let app = 8 * ECPRI_HEADER_LEN;
    type Setter = fn(&mut UPlaneMessage, u64);
    let fields: Vec<(&str, usize, usize, Setter)> = vec![
        ("payloadVersion", app + 1, 3, |m, v| m.header.payload_version ^= v as u8),
        ("frameId", app + 8, 8, |m, v| m.header.timing.frame_id ^= v as u8),
        ("symbolId", app + 26, 6, |m, v| m.header.timing.symbol_id ^= v as u8),
        ("sectionId", app + 32, 12, |m, v| m.sections[0].section_id ^= v as u16),
        ("startPrbu", app + 46, 10, |m, v| m.sections[0].start_prbu ^= v as u16),
        ("iq0.i", app + 64, 16, |m, v| m.sections[0].iq[0].i ^= v as u16 as i16),
        ("iq0.q", app + 80, 16, |m, v| m.sections[0].iq[0].q ^= v as u16 as i16),
    ];
    for (name, start, width, set) in fields {
        for k in 0..width {
            let mut m = base.clone();
            set(&mut m, 1 << k);
            let got = single_bit_diff(&enc, &encode_uplane(&m).unwrap());
            assert_eq!(got, vec![wire_bit(start, width, k)], "{name} bit {k}");
        }
    }
    let mut dl = base.clone();
    dl.header.direction = Direction::Downlink;
    assert_eq!(single_bit_diff(&enc, &encode_uplane(&dl).unwrap()), vec![app]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn cplane_frames_round_trip(
        dst in arb_mac(), src in arb_mac(), vlan in arb_vlan(),
        dir in prop::sample::select(vec![Direction::Uplink, Direction::Downlink]),
        msg in prop::sample::select(vec![Direction::Uplink, Direction::Downlink]).prop_flat_map(arb_cplane),
    ) {
        let mut msg = msg;
        msg.header.direction = dir;
        let f = frame(dst, src, vlan, encode_cplane(&msg).unwrap());
        let bytes = encode_frame(&f).unwrap();
        let (back, decoded) = dissect(&bytes).unwrap();
        prop_assert!(back.eq_ignoring_padding(&f));
        prop_assert_eq!(decoded, FhMessage::CPlane(msg));
    }

    #[test]
    fn payload_size_matches_encoded_length(msg in arb_cplane(Direction::Downlink), u in arb_uplane(Direction::Uplink)) {
        for enc in [encode_cplane(&msg).unwrap(), encode_uplane(&u).unwrap()] {
            let h = EcpriHeader::parse(&enc, 0).unwrap();
            prop_assert_eq!(h.payload_size as usize, enc.len() - 4);
            prop_assert_eq!(h.app_len().unwrap(), enc.len() - ECPRI_HEADER_LEN);
        }
    }

    #[test]
    fn uplane_frames_round_trip(
        dst in arb_mac(), src in arb_mac(), vlan in arb_vlan(),
        msg in prop::sample::select(vec![Direction::Uplink, Direction::Downlink]).prop_flat_map(arb_uplane),
    ) {
        let f = frame(dst, src, vlan, encode_uplane(&msg).unwrap());
        let bytes = encode_frame(&f).unwrap();
        let (back, decoded) = dissect(&bytes).unwrap();
        prop_assert!(back.eq_ignoring_padding(&f));
        prop_assert_eq!(decoded, FhMessage::UPlane(msg));
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
        let _ = dissect(&bytes);
        let _ = classify_bytes(&bytes);
    }
}
