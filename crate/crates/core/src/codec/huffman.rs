//! Canonical Huffman coding over `u64` symbols.
//!
//! Code lengths come from the classic two-smallest merge, so the mean code
//! length stays within one bit of the empirical entropy. The table is
//! serialized as per-length counts followed by delta-coded symbols in
//! canonical order.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use super::bits::{put_varint, BitReader, BitWriter, ByteCursor};
use crate::error::{Error, Result};

pub const MAX_CODE_LEN: u32 = 63;

/// Symbols in canonical order with their code lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    /// `(length, symbol)` sorted by length then symbol.
    entries: Vec<(u32, u64)>,
}

/// Encoding summary of one symbol stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamStats {
    pub symbols: u64,
    pub payload_bits: u64,
    /// Empirical entropy of the symbol stream, bits/symbol.
    pub entropy: f64,
}

impl StreamStats {
    pub fn bits_per_symbol(&self) -> f64 {
        if self.symbols == 0 {
            0.0
        } else {
            self.payload_bits as f64 / self.symbols as f64
        }
    }
}

pub fn symbol_counts(symbols: &[u64]) -> HashMap<u64, u64> {
    let mut counts = HashMap::new();
    for &s in symbols {
        *counts.entry(s).or_insert(0u64) += 1;
    }
    counts
}

impl HuffmanTable {
    pub fn from_counts(counts: &HashMap<u64, u64>) -> Result<Self> {
        let mut items: Vec<(u64, u64)> = counts.iter().map(|(&s, &c)| (s, c)).filter(|&(_, c)| c > 0).collect();
        items.sort_unstable();
        let lengths = code_lengths(&items);
        if lengths.iter().any(|&l| l > MAX_CODE_LEN) {
            return Err(Error::InvalidParameter("Huffman code longer than 63 bits".into()));
        }
        let mut entries: Vec<(u32, u64)> = lengths.into_iter().zip(items.iter().map(|&(s, _)| s)).collect();
        entries.sort_unstable();
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn max_len(&self) -> u32 {
        self.entries.last().map(|e| e.0).unwrap_or(0)
    }

    fn codes(&self) -> HashMap<u64, (u64, u32)> {
        let mut map = HashMap::with_capacity(self.entries.len());
        let mut code = 0u64;
        let mut prev_len = self.entries.first().map(|e| e.0).unwrap_or(0);
        for (i, &(len, sym)) in self.entries.iter().enumerate() {
            if i > 0 {
                code = (code + 1) << (len - prev_len);
            }
            prev_len = len;
            map.insert(sym, (code, len));
        }
        map
    }

    pub fn write(&self, out: &mut Vec<u8>) {
        let max_len = self.max_len();
        put_varint(out, self.entries.len() as u64);
        if self.entries.is_empty() {
            return;
        }
        out.push(max_len as u8);
        for len in 0..=max_len {
            let count = self.entries.iter().filter(|e| e.0 == len).count();
            put_varint(out, count as u64);
        }
        let mut prev: Option<(u32, u64)> = None;
        for &(len, sym) in &self.entries {
            match prev {
                Some((pl, ps)) if pl == len => put_varint(out, sym - ps),
                _ => put_varint(out, sym),
            }
            prev = Some((len, sym));
        }
    }

    pub fn read(cur: &mut ByteCursor<'_>) -> Result<Self> {
        let n = cur.varint()? as usize;
        if n == 0 {
            return Ok(Self { entries: Vec::new() });
        }
        if n > cur.remaining() {
            return Err(Error::CorruptStream("Huffman table larger than stream".into()));
        }
        let max_len = u32::from(cur.u8()?);
        if max_len > MAX_CODE_LEN {
            return Err(Error::CorruptStream("Huffman code length out of range".into()));
        }
        let mut counts = Vec::with_capacity(max_len as usize + 1);
        for _ in 0..=max_len {
            counts.push(cur.varint()? as usize);
        }
        if counts.iter().sum::<usize>() != n {
            return Err(Error::CorruptStream("Huffman table counts disagree".into()));
        }
        let mut entries = Vec::with_capacity(n);
        for (len, &count) in counts.iter().enumerate() {
            let mut prev = 0u64;
            for i in 0..count {
                let v = cur.varint()?;
                let sym = if i == 0 {
                    v
                } else {
                    prev.checked_add(v).ok_or_else(|| Error::CorruptStream("symbol overflow".into()))?
                };
                entries.push((len as u32, sym));
                prev = sym;
            }
        }
        Ok(Self { entries })
    }

    pub fn encode(&self, symbols: &[u64]) -> Result<(Vec<u8>, u64)> {
        let codes = self.codes();
        let mut w = BitWriter::new();
        for s in symbols {
            let &(code, len) = codes
                .get(s)
                .ok_or_else(|| Error::InvalidParameter(format!("symbol {s} missing from table")))?;
            w.write(code, len);
        }
        let bits = w.bit_len();
        Ok((w.finish(), bits))
    }

    pub fn decode(&self, payload: &[u8], bit_len: u64, count: usize) -> Result<Vec<u64>> {
        if self.entries.is_empty() {
            return if count == 0 {
                Ok(Vec::new())
            } else {
                Err(Error::CorruptStream("empty Huffman table".into()))
            };
        }
        if self.entries.len() == 1 {
            return Ok(vec![self.entries[0].1; count]);
        }
        // first code and index of the first symbol for every length
        let max_len = self.max_len() as usize;
        let mut count_by_len = vec![0u64; max_len + 1];
        for &(l, _) in &self.entries {
            count_by_len[l as usize] += 1;
        }
        let mut first_code = vec![0u64; max_len + 2];
        let mut first_index = vec![0u64; max_len + 2];
        let mut code = 0u64;
        let mut index = 0u64;
        for len in 1..=max_len {
            code = (code + count_by_len[len - 1]) << 1;
            first_code[len] = code;
            first_index[len] = index;
            index += count_by_len[len];
        }
        let mut r = BitReader::new(payload, bit_len)?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let mut code = 0u64;
            let mut len = 0usize;
            loop {
                code = (code << 1) | r.read_bit()?;
                len += 1;
                if len > max_len {
                    return Err(Error::CorruptStream("invalid Huffman code".into()));
                }
                let offset = code.wrapping_sub(first_code[len]);
                if code >= first_code[len] && offset < count_by_len[len] {
                    out.push(self.entries[(first_index[len] + offset) as usize].1);
                    break;
                }
            }
        }
        Ok(out)
    }
}

// Code lengths by repeatedly merging the two lightest subtrees.
fn code_lengths(items: &[(u64, u64)]) -> Vec<u32> {
    let n = items.len();
    if n <= 1 {
        return vec![0; n];
    }
    // nodes 0..n are leaves; parents appended after
    let mut parent = vec![usize::MAX; 2 * n - 1];
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
        items.iter().enumerate().map(|(i, &(_, c))| Reverse((c, i))).collect();
    let mut next = n;
    while heap.len() > 1 {
        let Reverse((c1, a)) = heap.pop().expect("two nodes");
        let Reverse((c2, b)) = heap.pop().expect("two nodes");
        parent[a] = next;
        parent[b] = next;
        heap.push(Reverse((c1 + c2, next)));
        next += 1;
    }
    let root = next - 1;
    let mut depth = vec![0u32; 2 * n - 1];
    for node in (0..root).rev() {
        depth[node] = depth[parent[node]] + 1;
    }
    depth.truncate(n);
    depth
}

/// Builds a table for the stream, writes it and the coded payload, and
/// reports the stream statistics.
pub fn encode_stream(symbols: &[u64], out: &mut Vec<u8>) -> Result<StreamStats> {
    let counts = symbol_counts(symbols);
    let table = HuffmanTable::from_counts(&counts)?;
    table.write(out);
    let (payload, bits) = table.encode(symbols)?;
    put_varint(out, bits);
    out.extend_from_slice(&payload);
    let entropy = crate::predictors::entropy_from_counts(counts.values().map(|&c| c as usize));
    Ok(StreamStats {
        symbols: symbols.len() as u64,
        payload_bits: bits,
        entropy,
    })
}

pub fn decode_stream(cur: &mut ByteCursor<'_>, count: usize) -> Result<Vec<u64>> {
    let table = HuffmanTable::read(cur)?;
    let bits = cur.varint()?;
    let nbytes = bits.div_ceil(8);
    if nbytes > cur.remaining() as u64 {
        return Err(Error::CorruptStream("truncated Huffman payload".into()));
    }
    let payload = cur.take(nbytes as usize)?;
    table.decode(payload, bits, count)
}
