//! MSB-first bit packing over byte buffers.
//!
//! Every multi-bit field is written most-significant bit first, so a field
//! that spans bytes is big-endian on the wire.

use super::CodecError;

#[derive(Debug, Default)]
pub struct BitWriter {
    buf: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bytes: usize) -> Self {
        BitWriter { buf: Vec::with_capacity(bytes), bit_len: 0 }
    }

    /// Append the low `width` bits of `value`.
    pub fn put(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "value {value:#x} wider than {width}");
        for i in (0..width).rev() {
            let bit = (value >> i) & 1;
            let byte = self.bit_len / 8;
            if byte == self.buf.len() {
                self.buf.push(0);
            }
            if bit == 1 {
                self.buf[byte] |= 0x80 >> (self.bit_len % 8);
            }
            self.bit_len += 1;
        }
    }

    pub fn put_bytes(&mut self, bytes: &[u8]) {
        if self.bit_len.is_multiple_of(8) {
            self.buf.extend_from_slice(bytes);
            self.bit_len += bytes.len() * 8;
        } else {
            for &b in bytes {
                self.put(b as u64, 8);
            }
        }
    }

    /// Zero-fill up to the next multiple of `bytes`.
    pub fn pad_to(&mut self, bytes: usize) {
        let rem = self.bit_len % (bytes * 8);
        if rem != 0 {
            let missing = bytes * 8 - rem;
            for _ in 0..missing {
                self.put(0, 1);
            }
        }
    }

    pub fn byte_len(&self) -> usize {
        self.bit_len.div_ceil(8)
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug)]
pub struct BitReader<'a> {
    buf: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> BitReader<'a> {
    /// `base` is the byte offset of `buf` inside the enclosing frame, used
    /// for error reporting.
    pub fn new(buf: &'a [u8], base: usize) -> Self {
        BitReader { buf, pos: 0, base }
    }

    pub fn get(&mut self, width: u32) -> Result<u64, CodecError> {
        if self.pos + width as usize > self.buf.len() * 8 {
            return Err(CodecError::Truncated {
                offset: self.base + self.buf.len(),
                needed: self.base + (self.pos + width as usize).div_ceil(8),
            });
        }
        let mut v = 0u64;
        for _ in 0..width {
            let byte = self.buf[self.pos / 8];
            let bit = (byte >> (7 - self.pos % 8)) & 1;
            v = (v << 1) | bit as u64;
            self.pos += 1;
        }
        Ok(v)
    }

    pub fn get_bytes(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        debug_assert!(self.pos.is_multiple_of(8));
        let start = self.pos / 8;
        if start + n > self.buf.len() {
            return Err(CodecError::Truncated { offset: self.base + self.buf.len(), needed: self.base + start + n });
        }
        self.pos += n * 8;
        Ok(&self.buf[start..start + n])
    }

    pub fn byte_pos(&self) -> usize {
        self.pos.div_ceil(8)
    }

    /// Absolute offset of the reader inside the enclosing frame.
    pub fn offset(&self) -> usize {
        self.base + self.byte_pos()
    }

    pub fn remaining_bytes(&self) -> usize {
        self.buf.len() - self.byte_pos()
    }

    pub fn is_empty(&self) -> bool {
        self.remaining_bytes() == 0
    }
}

/// Sign-extend the low `width` bits of `v`.
pub fn sign_extend(v: u64, width: u32) -> i32 {
    let shift = 64 - width;
    ((v << shift) as i64 >> shift) as i32
}
