//! Receive-side classification, per-second throughput and drop detection.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::codec::{classify_payload, view_frame, wire_len_of, EcpriHeader, FrameClass, MacAddress};
use crate::tx::{LoopbackReceiver, PortError, RawLinkPort};

pub const DEFAULT_DROP_FRACTION: f64 = 0.5;
pub const DEFAULT_BASELINE_SECONDS: usize = 5;
/// Consecutive seconds above threshold needed to call a recovery.
pub const RECOVERY_HOLD_SECONDS: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub frames: u64,
    pub bits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondCounts {
    pub second: u32,
    pub classes: BTreeMap<FrameClass, ClassCount>,
}

impl SecondCounts {
    pub fn get(&self, class: FrameClass) -> ClassCount {
        self.classes.get(&class).copied().unwrap_or_default()
    }

    pub fn total_frames(&self) -> u64 {
        self.classes.values().map(|c| c.frames).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MeterReport {
    pub per_second: Vec<SecondCounts>,
    /// sequenceId discontinuities per eAxC id.
    pub seq_gaps: BTreeMap<u16, u64>,
    /// Frames per source address, when tracking was requested.
    pub sources: Option<BTreeMap<MacAddress, u64>>,
    pub first_drop_second: Option<u32>,
    pub recovered_second: Option<u32>,
}

impl MeterReport {
    pub fn total(&self, class: FrameClass) -> ClassCount {
        self.per_second.iter().fold(ClassCount::default(), |acc, s| {
            let c = s.get(class);
            ClassCount { frames: acc.frames + c.frames, bits: acc.bits + c.bits }
        })
    }

    pub fn total_frames(&self) -> u64 {
        self.per_second.iter().map(SecondCounts::total_frames).sum()
    }

    /// Bits per second summed over `classes`.
    pub fn bits_series(&self, classes: &[FrameClass]) -> Vec<u64> {
        self.per_second.iter().map(|s| classes.iter().map(|c| s.get(*c).bits).sum()).collect()
    }

    /// Fill in drop/recovery seconds from the combined series of `classes`,
    /// using the mean of the first `baseline_seconds` as baseline.
    pub fn detect(&mut self, classes: &[FrameClass], baseline_seconds: usize, drop_fraction: f64) {
        let series = self.bits_series(classes);
        let baseline = baseline_of(&series, baseline_seconds);
        let (d, r) = detect_drop_and_recovery(&series, baseline, drop_fraction);
        self.first_drop_second = d.map(|s| s as u32);
        self.recovered_second = r.map(|s| s as u32);
    }

    /// Plain text table, one row per second.
    pub fn write_text(&self, mut w: impl Write) -> io::Result<()> {
        write!(w, "{:>6}", "second")?;
        for c in FrameClass::ALL {
            write!(w, " {:>12} {:>14}", format!("{c}.frames"), format!("{c}.bits"))?;
        }
        writeln!(w)?;
        for s in &self.per_second {
            write!(w, "{:>6}", s.second)?;
            for c in FrameClass::ALL {
                let v = s.get(c);
                write!(w, " {:>12} {:>14}", v.frames, v.bits)?;
            }
            writeln!(w)?;
        }
        for (eaxc, gaps) in &self.seq_gaps {
            writeln!(w, "seq gaps eaxc {eaxc:#06x}: {gaps}")?;
        }
        if let Some(d) = self.first_drop_second {
            writeln!(w, "first drop: second {d}")?;
        }
        if let Some(r) = self.recovered_second {
            writeln!(w, "recovered: second {r}")?;
        }
        Ok(())
    }

    /// JSON lines, one record per second per class that saw traffic.
    pub fn write_structured(&self, mut w: impl Write) -> io::Result<()> {
        for s in &self.per_second {
            for (class, c) in &s.classes {
                let rec = serde_json::json!({
                    "second": s.second,
                    "class": class.as_str(),
                    "frames": c.frames,
                    "bits": c.bits,
                });
                writeln!(w, "{rec}")?;
            }
        }
        Ok(())
    }
}

/// Incremental meter; feed it frames with their timestamps.
#[derive(Debug, Clone)]
pub struct Meter {
    per_second: Vec<SecondCounts>,
    last_seq: BTreeMap<u16, u8>,
    seq_gaps: BTreeMap<u16, u64>,
    sources: Option<BTreeMap<MacAddress, u64>>,
}

impl Meter {
    /// Pre-sizes the series to `duration_seconds`; later frames extend it.
    pub fn new(duration_seconds: u32) -> Self {
        let per_second = (0..duration_seconds).map(|s| SecondCounts { second: s, ..Default::default() }).collect();
        Meter { per_second, last_seq: BTreeMap::new(), seq_gaps: BTreeMap::new(), sources: None }
    }

    pub fn track_sources(mut self) -> Self {
        self.sources = Some(BTreeMap::new());
        self
    }

    pub fn observe(&mut self, ts_ns: u64, frame: &[u8]) {
        let second = (ts_ns / 1_000_000_000) as u32;
        while self.per_second.len() <= second as usize {
            let s = self.per_second.len() as u32;
            self.per_second.push(SecondCounts { second: s, ..Default::default() });
        }
        let (class, src, ecpri) = match view_frame(frame) {
            Ok(v) => {
                let class = classify_payload(v.ethertype, v.payload);
                let hdr = if class == FrameClass::Other { None } else { EcpriHeader::parse(v.payload, 0).ok() };
                (class, Some(v.src), hdr)
            }
            Err(_) => (FrameClass::Other, None, None),
        };
        let c = self.per_second[second as usize].classes.entry(class).or_default();
        c.frames += 1;
        c.bits += wire_len_of(frame) as u64 * 8;

        if let Some(h) = ecpri {
            let seq = h.seq.sequence_id;
            if let Some(prev) = self.last_seq.insert(h.eaxc_id, seq) {
                if seq != prev.wrapping_add(1) {
                    *self.seq_gaps.entry(h.eaxc_id).or_default() += 1;
                }
            }
        }
        if let (Some(map), Some(src)) = (self.sources.as_mut(), src) {
            *map.entry(src).or_default() += 1;
        }
    }

    pub fn finish(self) -> MeterReport {
        MeterReport {
            per_second: self.per_second,
            seq_gaps: self.seq_gaps,
            sources: self.sources,
            first_drop_second: None,
            recovered_second: None,
        }
    }
}

/// Drain a loopback receiver until its port is dropped.
pub fn meter(rx: &LoopbackReceiver, duration_seconds: u32, track_sources: bool) -> MeterReport {
    let mut m = Meter::new(duration_seconds);
    if track_sources {
        m = m.track_sources();
    }
    while let Some(batch) = rx.recv() {
        for (ts, f) in batch.iter() {
            m.observe(ts, f);
        }
    }
    m.finish()
}

/// Capture from a raw link for `duration_seconds` of wall time.
pub fn meter_raw(port: &mut RawLinkPort, duration_seconds: u32, track_sources: bool) -> Result<MeterReport, PortError> {
    let mut m = Meter::new(duration_seconds);
    if track_sources {
        m = m.track_sources();
    }
    let mut buf = vec![0u8; 65536];
    let start = Instant::now();
    let end = Duration::from_secs(duration_seconds as u64);
    loop {
        let now = start.elapsed();
        if now >= end {
            break;
        }
        if let Some(n) = port.recv(&mut buf, (end - now).min(Duration::from_millis(100)))? {
            m.observe(start.elapsed().as_nanos() as u64, &buf[..n]);
        }
    }
    Ok(m.finish())
}

pub fn baseline_of(series: &[u64], seconds: usize) -> f64 {
    let n = seconds.min(series.len());
    if n == 0 {
        return 0.0;
    }
    series[..n].iter().sum::<u64>() as f64 / n as f64
}

/// First second below `drop_fraction × baseline`, and the first later second
/// from which the series stays at or above it for three seconds.
pub fn detect_drop_and_recovery(
    series: &[u64],
    baseline_bits: f64,
    drop_fraction: f64,
) -> (Option<usize>, Option<usize>) {
    let thr = drop_fraction * baseline_bits;
    let below = |v: u64| (v as f64) < thr;
    let Some(drop) = series.iter().position(|&v| below(v)) else {
        return (None, None);
    };
    let recovered = (drop + 1..series.len()).find(|&s| {
        s + RECOVERY_HOLD_SECONDS <= series.len() && series[s..s + RECOVERY_HOLD_SECONDS].iter().all(|&v| !below(v))
    });
    (Some(drop), recovered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{encode_frame, forge_cplane_frame, Direction};

    fn frame_with_seq(seq: u8) -> Vec<u8> {
        let mut f = encode_frame(&forge_cplane_frame(MacAddress::ZERO, MacAddress::ZERO, Direction::Downlink)).unwrap();
        f[14 + 6] = seq;
        f
    }

    #[test]
    fn thousand_cplane_frames_in_second_zero() {
        let mut m = Meter::new(1);
        let f = frame_with_seq(0);
        for k in 0..1000 {
            m.observe(k * 1000, &f);
        }
        let r = m.finish();
        assert_eq!(r.per_second[0].get(FrameClass::CPlaneDL).frames, 1000);
        assert_eq!(r.per_second[0].get(FrameClass::CPlaneDL).bits, 1000 * 512);
    }

    #[test]
    fn one_gap_in_0_1_3() {
        let mut m = Meter::new(1);
        for s in [0, 1, 3] {
            m.observe(0, &frame_with_seq(s));
        }
        assert_eq!(m.finish().seq_gaps.get(&0), Some(&1));
    }

    #[test]
    fn wraparound_is_not_a_gap() {
        let mut m = Meter::new(1);
        for s in [254, 255, 0, 1] {
            m.observe(0, &frame_with_seq(s));
        }
        assert!(m.finish().seq_gaps.is_empty());
    }

    #[test]
    fn garbage_counts_as_other() {
        let mut m = Meter::new(2);
        m.observe(1_500_000_000, &[1, 2, 3]);
        let r = m.finish();
        assert_eq!(r.per_second[1].get(FrameClass::Other).frames, 1);
        assert_eq!(r.total_frames(), 1);
    }

    #[test]
    fn flat_series_has_no_drop() {
        assert_eq!(detect_drop_and_recovery(&[100; 60], 100.0, 0.5), (None, None));
    }

    #[test]
    fn halved_at_five_back_at_forty() {
        let s: Vec<u64> = (0..60).map(|k| if (5..40).contains(&k) { 40 } else { 100 }).collect();
        assert_eq!(detect_drop_and_recovery(&s, 100.0, 0.5), (Some(5), Some(40)));
    }

    #[test]
    fn recovery_needs_three_seconds() {
        let s = [100, 10, 100, 100, 10, 100, 100, 100];
        assert_eq!(detect_drop_and_recovery(&s, 100.0, 0.5), (Some(1), Some(5)));
        let short = [100, 10, 100, 100];
        assert_eq!(detect_drop_and_recovery(&short, 100.0, 0.5), (Some(1), None));
    }

    #[test]
    fn structured_lines() {
        let mut m = Meter::new(1);
        m.observe(0, &frame_with_seq(0));
        let mut out = Vec::new();
        m.finish().write_structured(&mut out).unwrap();
        let line = String::from_utf8(out).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(v["class"], "cplane-dl");
        assert_eq!(v["bits"], 512);
    }
}
