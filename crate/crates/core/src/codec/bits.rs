//! MSB-first bit packing and LEB128 varints.

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    filled: u32,
    bits: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `len` bits of `code`, most significant first.
    pub fn write(&mut self, code: u64, len: u32) {
        debug_assert!(len <= 64);
        for i in (0..len).rev() {
            self.acc = (self.acc << 1) | ((code >> i) & 1);
            self.filled += 1;
            if self.filled == 8 {
                self.bytes.push(self.acc as u8);
                self.acc = 0;
                self.filled = 0;
            }
        }
        self.bits += u64::from(len);
    }

    pub fn bit_len(&self) -> u64 {
        self.bits
    }

    pub fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.bytes.push((self.acc << (8 - self.filled)) as u8);
        }
        self.bytes
    }
}

pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
    limit: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], bit_len: u64) -> Result<Self> {
        if bit_len > bytes.len() as u64 * 8 {
            return Err(Error::CorruptStream("bit length exceeds payload".into()));
        }
        Ok(Self {
            bytes,
            pos: 0,
            limit: bit_len,
        })
    }

    pub fn read_bit(&mut self) -> Result<u64> {
        if self.pos >= self.limit {
            return Err(Error::CorruptStream("payload exhausted".into()));
        }
        let byte = self.bytes[(self.pos / 8) as usize];
        let bit = (byte >> (7 - (self.pos % 8))) & 1;
        self.pos += 1;
        Ok(u64::from(bit))
    }
}

pub fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

/// Cursor over a byte slice with bounds-checked reads.
pub struct ByteCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteCursor<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptStream("truncated stream".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn varint(&mut self) -> Result<u64> {
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let b = self.u8()?;
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(Error::CorruptStream("varint too long".into()))
    }

    pub fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

pub fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bits_roundtrip() {
        let mut w = BitWriter::new();
        w.write(0b101, 3);
        w.write(0xABCD, 16);
        w.write(1, 1);
        assert_eq!(w.bit_len(), 20);
        let bytes = w.finish();
        assert_eq!(bytes.len(), 3);
        let mut r = BitReader::new(&bytes, 20).unwrap();
        let mut got = 0u64;
        for _ in 0..20 {
            got = (got << 1) | r.read_bit().unwrap();
        }
        assert_eq!(got, (0b101 << 17) | (0xABCD << 1) | 1);
        assert!(r.read_bit().is_err());
    }

    #[test]
    fn varint_and_zigzag() {
        let mut out = Vec::new();
        for v in [0u64, 127, 128, 300, u64::MAX] {
            put_varint(&mut out, v);
        }
        let mut c = ByteCursor::new(&out);
        for v in [0u64, 127, 128, 300, u64::MAX] {
            assert_eq!(c.varint().unwrap(), v);
        }
        for v in [0i64, -1, 1, i64::MIN, i64::MAX, -12345] {
            assert_eq!(unzigzag(zigzag(v)), v);
        }
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
    }
}
