//! Packed bit buffer used as the payload store of every structure.
//!
//! Bits are addressed LSB-first inside little-endian 64-bit words. Multi-bit
//! fields are stored with their least significant bit at the lowest address.

use crate::codec::{ByteReader, ByteWriter};
use crate::error::Result;

/// `⌈log₂ x⌉`, with `ceil_log2(0) = ceil_log2(1) = 0`.
#[inline]
pub fn ceil_log2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// `⌈log₂ x⌉` for 128-bit arguments.
#[inline]
pub fn ceil_log2_u128(x: u128) -> u32 {
    if x <= 1 {
        0
    } else {
        128 - (x - 1).leading_zeros()
    }
}

/// Number of bits needed to write any value in `[0..=max]`.
#[inline]
pub fn width_for(max: u64) -> u32 {
    64 - max.leading_zeros()
}

#[inline]
fn mask(width: u32) -> u64 {
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitBuf {
    words: Vec<u64>,
    len: u64,
}

impl BitBuf {
    pub fn new() -> Self {
        Self::default()
    }

    /// A buffer of `len` zero bits.
    pub fn zeros(len: u64) -> Self {
        Self {
            words: vec![0; len.div_ceil(64) as usize],
            len,
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut buf = Self::new();
        for b in bits {
            buf.push_bit(b);
        }
        buf
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get_bit(&self, pos: u64) -> bool {
        debug_assert!(pos < self.len);
        (self.words[(pos / 64) as usize] >> (pos % 64)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, pos: u64, value: bool) {
        debug_assert!(pos < self.len);
        let w = &mut self.words[(pos / 64) as usize];
        let m = 1u64 << (pos % 64);
        if value {
            *w |= m;
        } else {
            *w &= !m;
        }
    }

    #[inline]
    pub fn push_bit(&mut self, value: bool) {
        if self.len.is_multiple_of(64) {
            self.words.push(0);
        }
        if value {
            let last = self.words.len() - 1;
            self.words[last] |= 1u64 << (self.len % 64);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value` (`width ≤ 64`).
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        if width == 0 {
            return;
        }
        debug_assert!(width == 64 || value >> width == 0);
        let value = value & mask(width);
        let offset = (self.len % 64) as u32;
        if offset == 0 {
            self.words.push(value);
        } else {
            let last = self.words.len() - 1;
            self.words[last] |= value << offset;
            if offset + width > 64 {
                self.words.push(value >> (64 - offset));
            }
        }
        self.len += u64::from(width);
    }

    /// Reads `width ≤ 64` bits starting at `pos`.
    #[inline]
    pub fn get_bits(&self, pos: u64, width: u32) -> u64 {
        if width == 0 {
            return 0;
        }
        debug_assert!(pos + u64::from(width) <= self.len);
        let word = (pos / 64) as usize;
        let offset = (pos % 64) as u32;
        let mut v = self.words[word] >> offset;
        if offset + width > 64 {
            v |= self.words[word + 1] << (64 - offset);
        }
        v & mask(width)
    }

    /// Writes `width ≤ 64` bits at `pos`, which must already exist.
    pub fn set_bits(&mut self, pos: u64, value: u64, width: u32) {
        if width == 0 {
            return;
        }
        debug_assert!(pos + u64::from(width) <= self.len);
        let value = value & mask(width);
        let word = (pos / 64) as usize;
        let offset = (pos % 64) as u32;
        self.words[word] &= !(mask(width) << offset);
        self.words[word] |= value << offset;
        if offset + width > 64 {
            let spill = offset + width - 64;
            self.words[word + 1] &= !mask(spill);
            self.words[word + 1] |= value >> (64 - offset);
        }
    }

    /// Elias-gamma code of `value ≥ 1`: `⌊log₂ v⌋` zeros, then the bits of
    /// `v` from the most significant one down.
    pub fn push_gamma(&mut self, value: u64) {
        assert!(value >= 1, "gamma code needs a positive value");
        let nbits = 64 - value.leading_zeros();
        for _ in 1..nbits {
            self.push_bit(false);
        }
        for k in (0..nbits).rev() {
            self.push_bit((value >> k) & 1 == 1);
        }
    }

    /// Decodes a gamma code at `pos`, returning the value and the position
    /// right after it. `None` when the code runs past the end.
    pub fn read_gamma(&self, mut pos: u64) -> Option<(u64, u64)> {
        let mut zeros = 0u32;
        while pos < self.len && !self.get_bit(pos) {
            zeros += 1;
            pos += 1;
        }
        if pos >= self.len || zeros >= 64 || pos + u64::from(zeros) >= self.len {
            return None;
        }
        let mut v = 0u64;
        for _ in 0..=zeros {
            v = (v << 1) | u64::from(self.get_bit(pos));
            pos += 1;
        }
        Some((v, pos))
    }

    /// Appends all bits of `other`.
    pub fn append(&mut self, other: &BitBuf) {
        let full = other.len / 64;
        for w in 0..full as usize {
            self.push_bits(other.words[w], 64);
        }
        let rest = (other.len % 64) as u32;
        if rest > 0 {
            self.push_bits(other.words[full as usize] & mask(rest), rest);
        }
    }

    /// Copies `len` bits starting at `pos` into a fresh buffer.
    pub fn slice(&self, pos: u64, len: u64) -> BitBuf {
        let mut out = BitBuf::new();
        let mut p = pos;
        let end = pos + len;
        while p + 64 <= end {
            out.push_bits(self.get_bits(p, 64), 64);
            p += 64;
        }
        if p < end {
            let w = (end - p) as u32;
            out.push_bits(self.get_bits(p, w), w);
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get_bit(i))
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// `[len:u64][words]`.
    pub fn write_to(&self, w: &mut ByteWriter) {
        w.put_u64(self.len);
        for &word in &self.words {
            w.put_u64(word);
        }
    }

    pub fn read_from(r: &mut ByteReader<'_>) -> Result<Self> {
        let len = r.get_u64()?;
        let nwords = len.div_ceil(64);
        r.ensure_remaining(nwords.saturating_mul(8), "bit buffer words")?;
        let mut words = Vec::with_capacity(nwords as usize);
        for _ in 0..nwords {
            words.push(r.get_u64()?);
        }
        let rest = len % 64;
        if rest != 0 && words.last().is_some_and(|&w| w >> rest != 0) {
            return Err(crate::Error::Format("nonzero padding bits".into()));
        }
        Ok(Self { words, len })
    }

    /// Exact size in bits of [`BitBuf::write_to`]'s output.
    pub fn serialized_bits(&self) -> u64 {
        64 + 64 * self.words.len() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_log2_small_values() {
        let expect = [(0, 0), (1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3), (9, 4), (33, 6), (65, 7)];
        for (x, l) in expect {
            assert_eq!(ceil_log2(x), l, "x={x}");
        }
        assert_eq!(ceil_log2(u64::MAX), 64);
        assert_eq!(ceil_log2_u128(1u128 << 64), 64);
        assert_eq!(ceil_log2_u128((1u128 << 64) + 1), 65);
    }

    #[test]
    fn push_and_get_across_word_boundaries() {
        let mut b = BitBuf::new();
        let fields: Vec<(u64, u32)> = (0..200u64).map(|i| (i.wrapping_mul(0x9E37_79B9) & ((1 << (i % 37 + 1)) - 1), (i % 37 + 1) as u32)).collect();
        for &(v, w) in &fields {
            b.push_bits(v, w);
        }
        let mut pos = 0;
        for &(v, w) in &fields {
            assert_eq!(b.get_bits(pos, w), v);
            pos += u64::from(w);
        }
        assert_eq!(pos, b.len());
    }

    #[test]
    fn gamma_round_trip() {
        let mut b = BitBuf::new();
        let vals = [1u64, 2, 3, 7, 8, 1000, u64::MAX >> 1];
        for &v in &vals {
            b.push_gamma(v);
        }
        let mut pos = 0;
        for &v in &vals {
            let (got, next) = b.read_gamma(pos).unwrap();
            assert_eq!(got, v);
            pos = next;
        }
        assert_eq!(pos, b.len());
        assert_eq!(BitBuf::new().read_gamma(0), None);
    }

    #[test]
    fn append_and_slice() {
        let mut a = BitBuf::from_bools([true, false, true]);
        let mut b = BitBuf::new();
        b.push_bits(0xDEAD_BEEF_CAFE, 48);
        b.push_bits(0x5, 3);
        a.append(&b);
        assert_eq!(a.len(), 54);
        assert_eq!(a.get_bits(3, 48), 0xDEAD_BEEF_CAFE);
        assert_eq!(a.slice(3, 51), b);
    }

    #[test]
    fn set_bits_overwrites_only_the_field() {
        let mut b = BitBuf::zeros(130);
        b.set_bits(60, 0b1011, 4);
        b.set_bits(126, 0b111, 3);
        assert_eq!(b.get_bits(60, 4), 0b1011);
        assert_eq!(b.get_bits(126, 3), 0b111);
        assert_eq!(b.count_ones(), 6);
        b.set_bits(60, 0, 4);
        assert_eq!(b.count_ones(), 3);
    }
}
