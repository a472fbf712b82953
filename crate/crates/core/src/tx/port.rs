//! Transmit ports: an in-process loopback and a raw L2 socket.

use std::io;

use crossbeam_channel::{bounded, unbounded, Receiver, Sender};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::wire_len_of;

#[derive(Debug, Error)]
pub enum PortError {
    #[error("receiver side of the loopback port is gone")]
    Disconnected,
    #[error("no such interface '{0}'")]
    NoSuchInterface(String),
    #[error("permission denied opening raw socket on '{0}' (needs CAP_NET_RAW)")]
    PermissionDenied(String),
    #[error("raw link ports are only available on Linux")]
    Unsupported,
    #[error("frame of {0} bytes rejected by the link")]
    Rejected(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortStats {
    pub frames: u64,
    /// Bytes handed to the port (no FCS).
    pub bytes: u64,
    /// Bytes on the link, padding and FCS included.
    pub wire_bytes: u64,
}

impl PortStats {
    fn add(&mut self, frame: &[u8]) {
        self.frames += 1;
        self.bytes += frame.len() as u64;
        self.wire_bytes += wire_len_of(frame) as u64;
    }
}

/// A frame sink. Frames are emitted in submission order.
pub trait TxPort: Send {
    /// Queue one encoded frame. `ts_ns` is the emission time relative to the
    /// start of the run.
    fn send(&mut self, ts_ns: u64, frame: &[u8]) -> Result<(), PortError>;
    fn flush(&mut self) -> Result<(), PortError>;
    fn stats(&self) -> PortStats;
}

/// Contiguous storage for a run of frames, passed through the loopback
/// channel as one unit.
#[derive(Debug, Clone, Default)]
pub struct FrameBatch {
    data: Vec<u8>,
    index: Vec<(u64, u32, u32)>,
}

impl FrameBatch {
    pub fn with_capacity(frames: usize, bytes: usize) -> Self {
        FrameBatch { data: Vec::with_capacity(bytes), index: Vec::with_capacity(frames) }
    }

    pub fn push(&mut self, ts_ns: u64, frame: &[u8]) {
        self.index.push((ts_ns, self.data.len() as u32, frame.len() as u32));
        self.data.extend_from_slice(frame);
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[u8])> + '_ {
        self.index.iter().map(|&(ts, off, len)| (ts, &self.data[off as usize..(off + len) as usize]))
    }
}

pub const LOOPBACK_BATCH_FRAMES: usize = 4096;
pub const LOOPBACK_QUEUE_BATCHES: usize = 64;

pub struct LoopbackPort {
    tx: Sender<FrameBatch>,
    batch: FrameBatch,
    stats: PortStats,
}

pub struct LoopbackReceiver {
    rx: Receiver<FrameBatch>,
}

/// Bounded loopback pair. The receiver must be drained concurrently once
/// more than `queue_batches` batches are in flight.
pub fn loopback(queue_batches: usize) -> (LoopbackPort, LoopbackReceiver) {
    let (tx, rx) = bounded(queue_batches);
    (LoopbackPort::new(tx), LoopbackReceiver { rx })
}

/// Loopback pair with no back-pressure; suitable when sender and receiver run
/// one after the other on the same thread.
pub fn loopback_unbounded() -> (LoopbackPort, LoopbackReceiver) {
    let (tx, rx) = unbounded();
    (LoopbackPort::new(tx), LoopbackReceiver { rx })
}

impl LoopbackPort {
    fn new(tx: Sender<FrameBatch>) -> Self {
        LoopbackPort { tx, batch: Self::fresh_batch(), stats: PortStats::default() }
    }

    fn fresh_batch() -> FrameBatch {
        FrameBatch::with_capacity(LOOPBACK_BATCH_FRAMES, LOOPBACK_BATCH_FRAMES * 64)
    }

    fn ship(&mut self) -> Result<(), PortError> {
        if self.batch.is_empty() {
            return Ok(());
        }
        let b = std::mem::replace(&mut self.batch, Self::fresh_batch());
        self.tx.send(b).map_err(|_| PortError::Disconnected)
    }
}

impl TxPort for LoopbackPort {
    fn send(&mut self, ts_ns: u64, frame: &[u8]) -> Result<(), PortError> {
        self.batch.push(ts_ns, frame);
        self.stats.add(frame);
        if self.batch.len() >= LOOPBACK_BATCH_FRAMES {
            self.ship()?;
        }
        Ok(())
    }

    fn flush(&mut self) -> Result<(), PortError> {
        self.ship()
    }

    fn stats(&self) -> PortStats {
        self.stats
    }
}

impl Drop for LoopbackPort {
    fn drop(&mut self) {
        let _ = self.ship();
    }
}

impl LoopbackReceiver {
    /// Blocks until a batch arrives; `None` once the port is dropped and drained.
    pub fn recv(&self) -> Option<FrameBatch> {
        self.rx.recv().ok()
    }

    pub fn try_recv(&self) -> Option<FrameBatch> {
        self.rx.try_recv().ok()
    }

    /// Collect every remaining frame. Blocks until the port is dropped.
    pub fn collect_frames(&self) -> Vec<(u64, Vec<u8>)> {
        let mut out = Vec::new();
        while let Some(b) = self.recv() {
            out.extend(b.iter().map(|(ts, f)| (ts, f.to_vec())));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PortKind {
    Loopback,
    RawLink(String),
}

impl std::str::FromStr for PortKind {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "loopback" => PortKind::Loopback,
            name => PortKind::RawLink(name.to_string()),
        })
    }
}

/// Open a transmit port. For loopback the matching receiver is returned too.
pub fn open_port(kind: &PortKind) -> Result<(Box<dyn TxPort>, Option<LoopbackReceiver>), PortError> {
    match kind {
        PortKind::Loopback => {
            let (p, r) = loopback(LOOPBACK_QUEUE_BATCHES);
            Ok((Box::new(p), Some(r)))
        }
        PortKind::RawLink(name) => Ok((Box::new(RawLinkPort::open(name)?), None)),
    }
}

/// AF_PACKET socket bound to one interface.
pub struct RawLinkPort {
    #[cfg_attr(not(target_os = "linux"), allow(dead_code))]
    fd: i32,
    name: String,
    stats: PortStats,
    inbound_only: bool,
}

#[cfg(target_os = "linux")]
mod sys {
    use std::ffi::CString;
    use std::io;

    use super::PortError;

    const ETH_P_ALL: u16 = 0x0003;

    pub fn ifindex(name: &str) -> Result<i32, PortError> {
        let c = CString::new(name).map_err(|_| PortError::NoSuchInterface(name.to_string()))?;
        // SAFETY: c is a valid NUL-terminated string.
        let idx = unsafe { libc::if_nametoindex(c.as_ptr()) };
        if idx == 0 {
            return Err(PortError::NoSuchInterface(name.to_string()));
        }
        Ok(idx as i32)
    }

    fn map_err(name: &str, e: io::Error) -> PortError {
        match e.raw_os_error() {
            Some(libc::EPERM) | Some(libc::EACCES) => PortError::PermissionDenied(name.to_string()),
            Some(libc::ENODEV) | Some(libc::ENXIO) => PortError::NoSuchInterface(name.to_string()),
            _ => PortError::Io(e),
        }
    }

    pub fn open(name: &str) -> Result<i32, PortError> {
        let idx = ifindex(name)?;
        let proto = ETH_P_ALL.to_be();
        // SAFETY: plain socket(2) call.
        let fd = unsafe { libc::socket(libc::AF_PACKET, libc::SOCK_RAW, proto as i32) };
        if fd < 0 {
            return Err(map_err(name, io::Error::last_os_error()));
        }
        // SAFETY: sockaddr_ll is plain old data, zero is a valid bit pattern.
        let mut sa: libc::sockaddr_ll = unsafe { std::mem::zeroed() };
        sa.sll_family = libc::AF_PACKET as u16;
        sa.sll_protocol = proto;
        sa.sll_ifindex = idx;
        // SAFETY: sa outlives the call and the length matches its type.
        let rc = unsafe {
            libc::bind(
                fd,
                &sa as *const libc::sockaddr_ll as *const libc::sockaddr,
                std::mem::size_of::<libc::sockaddr_ll>() as u32,
            )
        };
        if rc < 0 {
            let e = io::Error::last_os_error();
            close(fd);
            return Err(map_err(name, e));
        }
        Ok(fd)
    }

    pub fn send(fd: i32, frame: &[u8]) -> io::Result<usize> {
        // SAFETY: frame is a valid readable buffer for its length.
        let n = unsafe { libc::send(fd, frame.as_ptr() as *const libc::c_void, frame.len(), 0) };
        if n < 0 {
            Err(io::Error::last_os_error())
        } else {
            Ok(n as usize)
        }
    }

    pub fn set_recv_timeout(fd: i32, timeout: std::time::Duration) -> io::Result<()> {
        let tv = libc::timeval {
            tv_sec: timeout.as_secs() as libc::time_t,
            tv_usec: timeout.subsec_micros() as libc::suseconds_t,
        };
        // SAFETY: tv outlives the call and the length matches its type.
        let rc = unsafe {
            libc::setsockopt(
                fd,
                libc::SOL_SOCKET,
                libc::SO_RCVTIMEO,
                &tv as *const libc::timeval as *const libc::c_void,
                std::mem::size_of::<libc::timeval>() as u32,
            )
        };
        if rc < 0 {
            Err(io::Error::last_os_error())
        } else {
            Ok(())
        }
    }

    /// Returns the frame length and whether the kernel marked it outgoing.
    pub fn recv(fd: i32, buf: &mut [u8]) -> io::Result<Option<(usize, bool)>> {
        // SAFETY: sockaddr_ll is plain old data, zero is a valid bit pattern.
        let mut sa: libc::sockaddr_ll = unsafe { std::mem::zeroed() };
        let mut len = std::mem::size_of::<libc::sockaddr_ll>() as libc::socklen_t;
        // SAFETY: buf and sa are valid writable buffers for their lengths.
        let n = unsafe {
            libc::recvfrom(
                fd,
                buf.as_mut_ptr() as *mut libc::c_void,
                buf.len(),
                0,
                &mut sa as *mut libc::sockaddr_ll as *mut libc::sockaddr,
                &mut len,
            )
        };
        if n < 0 {
            let e = io::Error::last_os_error();
            return match e.kind() {
                io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut | io::ErrorKind::Interrupted => Ok(None),
                _ => Err(e),
            };
        }
        Ok(Some((n as usize, sa.sll_pkttype == libc::PACKET_OUTGOING)))
    }

    pub fn close(fd: i32) {
        // SAFETY: fd was returned by socket(2) and is closed once.
        unsafe {
            libc::close(fd);
        }
    }
}

impl RawLinkPort {
    #[cfg(target_os = "linux")]
    pub fn open(name: &str) -> Result<Self, PortError> {
        let fd = sys::open(name)?;
        Ok(RawLinkPort { fd, name: name.to_string(), stats: PortStats::default(), inbound_only: false })
    }

    #[cfg(not(target_os = "linux"))]
    pub fn open(_name: &str) -> Result<Self, PortError> {
        Err(PortError::Unsupported)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Skip frames this host transmitted when receiving.
    pub fn inbound_only(mut self) -> Self {
        self.inbound_only = true;
        self
    }

    /// Receive one frame into `buf`, waiting at most `timeout`.
    #[cfg(target_os = "linux")]
    pub fn recv(&mut self, buf: &mut [u8], timeout: std::time::Duration) -> Result<Option<usize>, PortError> {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(std::time::Instant::now());
            sys::set_recv_timeout(self.fd, left.max(std::time::Duration::from_micros(1)))?;
            match sys::recv(self.fd, buf)? {
                Some((_, true)) if self.inbound_only => {
                    if left.is_zero() {
                        return Ok(None);
                    }
                }
                Some((n, _)) => return Ok(Some(n)),
                None => return Ok(None),
            }
        }
    }

    #[cfg(not(target_os = "linux"))]
    pub fn recv(&mut self, _buf: &mut [u8], _timeout: std::time::Duration) -> Result<Option<usize>, PortError> {
        Err(PortError::Unsupported)
    }
}

impl TxPort for RawLinkPort {
    #[cfg(target_os = "linux")]
    fn send(&mut self, _ts_ns: u64, frame: &[u8]) -> Result<(), PortError> {
        let n = sys::send(self.fd, frame)?;
        if n != frame.len() {
            return Err(PortError::Rejected(frame.len()));
        }
        self.stats.add(frame);
        Ok(())
    }

    #[cfg(not(target_os = "linux"))]
    fn send(&mut self, _ts_ns: u64, _frame: &[u8]) -> Result<(), PortError> {
        Err(PortError::Unsupported)
    }

    fn flush(&mut self) -> Result<(), PortError> {
        Ok(())
    }

    fn stats(&self) -> PortStats {
        self.stats
    }
}

impl Drop for RawLinkPort {
    fn drop(&mut self) {
        #[cfg(target_os = "linux")]
        sys::close(self.fd);
    }
}
