//! Classic (libpcap) capture files, Ethernet link type, microsecond stamps.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

pub const PCAP_MAGIC: u32 = 0xa1b2_c3d4;
pub const LINKTYPE_ETHERNET: u32 = 1;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
const DEFAULT_SNAPLEN: u32 = 65535;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad capture magic {0:#010x}")]
    BadMagic(u32),
    #[error("unsupported link type {0} (only Ethernet is supported)")]
    LinkType(u32),
    #[error("capture truncated in record {index}")]
    Truncated { index: usize },
    #[error("record {index}: captured length {caplen} exceeds original length {origlen}")]
    BadLength { index: usize, caplen: u32, origlen: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketRecord {
    pub ts_sec: u32,
    pub ts_usec: u32,
    pub data: Vec<u8>,
    /// Length of the frame on the wire before capture truncation.
    pub orig_len: u32,
}

impl PacketRecord {
    pub fn new(ts_sec: u32, ts_usec: u32, data: Vec<u8>) -> Self {
        let orig_len = data.len() as u32;
        PacketRecord { ts_sec, ts_usec, data, orig_len }
    }

    pub fn timestamp_micros(&self) -> u64 {
        self.ts_sec as u64 * 1_000_000 + self.ts_usec as u64
    }
}

pub fn read_pcap(path: impl AsRef<Path>) -> Result<Vec<PacketRecord>, PcapError> {
    read_pcap_from(BufReader::new(File::open(path)?))
}

pub fn read_pcap_from(mut r: impl Read) -> Result<Vec<PacketRecord>, PcapError> {
    let mut gh = [0u8; GLOBAL_HEADER_LEN];
    r.read_exact(&mut gh)?;
    let raw = u32::from_le_bytes([gh[0], gh[1], gh[2], gh[3]]);
    let le = match raw {
        PCAP_MAGIC => true,
        m if m.swap_bytes() == PCAP_MAGIC => false,
        m => return Err(PcapError::BadMagic(m)),
    };
    let word = |b: &[u8]| {
        let a = [b[0], b[1], b[2], b[3]];
        if le {
            u32::from_le_bytes(a)
        } else {
            u32::from_be_bytes(a)
        }
    };
    let link = word(&gh[20..24]);
    if link != LINKTYPE_ETHERNET {
        return Err(PcapError::LinkType(link));
    }

    let mut out = Vec::new();
    loop {
        let index = out.len();
        let mut rh = [0u8; RECORD_HEADER_LEN];
        match read_full(&mut r, &mut rh)? {
            0 => break,
            RECORD_HEADER_LEN => {}
            _ => return Err(PcapError::Truncated { index }),
        }
        let (ts_sec, ts_usec, caplen, origlen) =
            (word(&rh[0..4]), word(&rh[4..8]), word(&rh[8..12]), word(&rh[12..16]));
        if caplen > origlen {
            return Err(PcapError::BadLength { index, caplen, origlen });
        }
        let mut data = vec![0u8; caplen as usize];
        if read_full(&mut r, &mut data)? != data.len() {
            return Err(PcapError::Truncated { index });
        }
        out.push(PacketRecord { ts_sec, ts_usec, data, orig_len: origlen });
    }
    Ok(out)
}

// Like read_exact but reports how much was read so clean EOF can be told apart.
fn read_full(r: &mut impl Read, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

pub fn write_pcap(path: impl AsRef<Path>, records: &[PacketRecord]) -> Result<(), PcapError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_pcap_to(&mut w, records)?;
    w.flush()?;
    Ok(())
}

/// Writes in native byte order.
pub fn write_pcap_to(mut w: impl Write, records: &[PacketRecord]) -> Result<(), PcapError> {
    let snaplen = records.iter().map(|r| r.data.len() as u32).max().unwrap_or(0).max(DEFAULT_SNAPLEN);
    let mut gh = Vec::with_capacity(GLOBAL_HEADER_LEN);
    gh.extend_from_slice(&PCAP_MAGIC.to_ne_bytes());
    gh.extend_from_slice(&2u16.to_ne_bytes());
    gh.extend_from_slice(&4u16.to_ne_bytes());
    gh.extend_from_slice(&0i32.to_ne_bytes());
    gh.extend_from_slice(&0u32.to_ne_bytes());
    gh.extend_from_slice(&snaplen.to_ne_bytes());
    gh.extend_from_slice(&LINKTYPE_ETHERNET.to_ne_bytes());
    w.write_all(&gh)?;
    for r in records {
        let caplen = r.data.len() as u32;
        let mut rh = [0u8; RECORD_HEADER_LEN];
        rh[0..4].copy_from_slice(&r.ts_sec.to_ne_bytes());
        rh[4..8].copy_from_slice(&r.ts_usec.to_ne_bytes());
        rh[8..12].copy_from_slice(&caplen.to_ne_bytes());
        rh[12..16].copy_from_slice(&r.orig_len.max(caplen).to_ne_bytes());
        w.write_all(&rh)?;
        w.write_all(&r.data)?;
    }
    Ok(())
}
