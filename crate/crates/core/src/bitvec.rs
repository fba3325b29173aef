//! Bit vector with constant-time rank and sampled select.
//!
//! The rank index follows the rank9 layout: one absolute counter per
//! 512-bit superblock plus seven 9-bit relative counters packed into a second
//! word. Select keeps, for every 1024th set bit, the superblock holding it and
//! finishes with a short binary search over superblock counters. Index space
//! is `0.25·len + 0.0625·ones` bits plus a constant.
//!
//! Conventions: `rank1(pos)` counts set bits in `[0..pos)`; `select1(i)` is
//! 1-indexed on both sides, returning the 1-indexed position of the `i`th set
//! bit. Hence `rank1(select1(i)) == i`.

use crate::bits::BitBuf;
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const WORDS_PER_SUPERBLOCK: usize = 8;
const SELECT_SAMPLE: u64 = 1024;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankSelectBitVector {
    bits: BitBuf,
    ones: u64,
    /// Set bits before each superblock; one trailing entry holds the total.
    superblocks: Vec<u64>,
    /// Per superblock, counts before words 1..7 relative to the superblock.
    blocks: Vec<u64>,
    /// Superblock index holding set bit number `k·1024` (0-indexed).
    samples: Vec<u64>,
}

struct Index {
    ones: u64,
    superblocks: Vec<u64>,
    blocks: Vec<u64>,
    samples: Vec<u64>,
}

fn build_index(bits: &BitBuf) -> Index {
    let words = bits.words();
    let nsuper = words.len().div_ceil(WORDS_PER_SUPERBLOCK);
    let mut superblocks = Vec::with_capacity(nsuper + 1);
    let mut blocks = Vec::with_capacity(nsuper);
    let mut samples = Vec::new();
    let mut total = 0u64;
    for s in 0..nsuper {
        superblocks.push(total);
        let mut rel = 0u64;
        let mut packed = 0u64;
        for w in 0..WORDS_PER_SUPERBLOCK {
            if w > 0 {
                packed |= rel << (9 * (w - 1));
            }
            let idx = s * WORDS_PER_SUPERBLOCK + w;
            if idx < words.len() {
                let c = u64::from(words[idx].count_ones());
                // Sample every superblock in which a multiple of SELECT_SAMPLE lands.
                let before = total + rel;
                let mut next = before.div_ceil(SELECT_SAMPLE) * SELECT_SAMPLE;
                while next < before + c {
                    samples.push(s as u64);
                    next += SELECT_SAMPLE;
                }
                rel += c;
            }
        }
        blocks.push(packed);
        total += rel;
    }
    superblocks.push(total);
    Index {
        ones: total,
        superblocks,
        blocks,
        samples,
    }
}

/// 0-indexed position of the `r`th (0-indexed) set bit of `word`.
#[inline]
fn select_in_word(mut word: u64, r: u32) -> u32 {
    // Skip whole bytes first, then clear low bits.
    let mut base = 0u32;
    let mut r = r;
    loop {
        let c = (word & 0xFF).count_ones();
        if r < c {
            break;
        }
        r -= c;
        word >>= 8;
        base += 8;
    }
    for _ in 0..r {
        word &= word - 1;
    }
    base + word.trailing_zeros()
}

impl RankSelectBitVector {
    /// Builds the vector and its indices from a sequence of bits.
    pub fn build<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self::from_bitbuf(BitBuf::from_bools(bits))
    }

    pub fn from_bitbuf(bits: BitBuf) -> Self {
        let idx = build_index(&bits);
        Self {
            bits,
            ones: idx.ones,
            superblocks: idx.superblocks,
            blocks: idx.blocks,
            samples: idx.samples,
        }
    }

    /// Parses a string of `0`/`1` characters; other characters are ignored.
    pub fn from_bit_str(s: &str) -> Self {
        Self::build(s.chars().filter_map(|c| match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }))
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.bits.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn count_ones(&self) -> u64 {
        self.ones
    }

    #[inline]
    pub fn get(&self, pos: u64) -> bool {
        self.bits.get_bit(pos)
    }

    pub fn bits(&self) -> &BitBuf {
        &self.bits
    }

    #[inline]
    fn rel(&self, s: usize, w: usize) -> u64 {
        if w == 0 {
            0
        } else {
            (self.blocks[s] >> (9 * (w - 1))) & 0x1FF
        }
    }

    /// Number of set bits in `[0..pos)`.
    pub fn rank1(&self, pos: u64) -> Result<u64> {
        let len = self.len();
        if pos > len {
            return Err(Error::RankOutOfRange { pos, len });
        }
        Ok(self.rank1_unchecked(pos))
    }

    #[inline]
    pub(crate) fn rank1_unchecked(&self, pos: u64) -> u64 {
        if pos == self.len() {
            return self.ones;
        }
        let word = (pos / 64) as usize;
        let s = word / WORDS_PER_SUPERBLOCK;
        let w = word % WORDS_PER_SUPERBLOCK;
        let in_word = pos % 64;
        let partial = if in_word == 0 {
            0
        } else {
            u64::from((self.bits.words()[word] & ((1u64 << in_word) - 1)).count_ones())
        };
        self.superblocks[s] + self.rel(s, w) + partial
    }

    /// 1-indexed position of the `i`th set bit, `i ∈ [1..count_ones]`.
    pub fn select1(&self, i: u64) -> Result<u64> {
        if i == 0 || i > self.ones {
            return Err(Error::SelectOutOfRange {
                index: i,
                ones: self.ones,
            });
        }
        Ok(self.select1_unchecked(i))
    }

    pub(crate) fn select1_unchecked(&self, i: u64) -> u64 {
        let j = i - 1;
        let k = (j / SELECT_SAMPLE) as usize;
        let mut lo = self.samples[k] as usize;
        let mut hi = match self.samples.get(k + 1) {
            Some(&s) => s as usize,
            None => self.blocks.len() - 1,
        };
        // Largest superblock in [lo..=hi] whose prefix count is ≤ j.
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if self.superblocks[mid] <= j {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let s = lo;
        let mut rem = j - self.superblocks[s];
        let mut w = WORDS_PER_SUPERBLOCK - 1;
        for cand in 1..WORDS_PER_SUPERBLOCK {
            if self.rel(s, cand) > rem {
                w = cand - 1;
                break;
            }
        }
        rem -= self.rel(s, w);
        let word = s * WORDS_PER_SUPERBLOCK + w;
        let bit = select_in_word(self.bits.words()[word], rem as u32);
        word as u64 * 64 + u64::from(bit) + 1
    }

    /// Index overhead in bits (everything except length and payload).
    pub fn index_bits(&self) -> u64 {
        self.serialized_bits() - self.bits.serialized_bits()
    }

    /// `[length:u64][payload words][ones:u64][superblock counters]
    /// [relative counters][select samples]`, all little-endian. Section sizes
    /// are implied by `length` and `ones`.
    pub fn write_to(&self, w: &mut ByteWriter) {
        self.bits.write_to(w);
        w.put_u64(self.ones);
        for &x in &self.superblocks {
            w.put_u64(x);
        }
        for &x in &self.blocks {
            w.put_u64(x);
        }
        for &x in &self.samples {
            w.put_u64(x);
        }
    }

    pub fn read_from(r: &mut ByteReader<'_>) -> Result<Self> {
        let bits = BitBuf::read_from(r)?;
        let ones = r.get_u64()?;
        let nsuper = bits.words().len().div_ceil(WORDS_PER_SUPERBLOCK);
        let nsamples = ones.div_ceil(SELECT_SAMPLE);
        r.ensure_remaining((2 * nsuper as u64 + 1 + nsamples) * 8, "rank/select index")?;
        let mut superblocks = Vec::with_capacity(nsuper + 1);
        for _ in 0..=nsuper {
            superblocks.push(r.get_u64()?);
        }
        let mut blocks = Vec::with_capacity(nsuper);
        for _ in 0..nsuper {
            blocks.push(r.get_u64()?);
        }
        let mut samples = Vec::with_capacity(nsamples as usize);
        for _ in 0..nsamples {
            samples.push(r.get_u64()?);
        }
        let v = Self {
            bits,
            ones,
            superblocks,
            blocks,
            samples,
        };
        let idx = build_index(&v.bits);
        if idx.ones != v.ones
            || idx.superblocks != v.superblocks
            || idx.blocks != v.blocks
            || idx.samples != v.samples
        {
            return Err(Error::Format("rank/select index does not match payload".into()));
        }
        Ok(v)
    }

    /// Exact size in bits of [`RankSelectBitVector::write_to`]'s output.
    pub fn serialized_bits(&self) -> u64 {
        self.bits.serialized_bits()
            + 64 * (1 + self.superblocks.len() + self.blocks.len() + self.samples.len()) as u64
    }
}
