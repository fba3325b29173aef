//! Monotone minimal perfect hashing by longest-common-prefix bucketing.
//!
//! Sorted keys are cut into consecutive runs of `b_in = max(1, w)` keys, where
//! `w = ⌈log₂ u⌉` is the key width. Each run is identified by the longest
//! common prefix of its smallest and largest key; these `(length, bits)`
//! descriptors are pairwise distinct. A first hash maps every key to its run's
//! prefix length and its rank inside the run, a second hash maps a descriptor
//! to the run index. Space is `O(n log w)` bits.
//!
//! When all keys fit in one run, only the in-run rank is stored. Structures
//! with at most one key store nothing at all.

use crate::bits::{ceil_log2, ceil_log2_u128, BitBuf};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::mphf::{build_body, derive_seed, MphfView};

const KEY_FN_TAG: u64 = 1;
const PREFIX_FN_TAG: u64 = 2;

/// Width in bits of keys drawn from `[0..universe)`.
pub fn key_width(universe: u128) -> u32 {
    ceil_log2_u128(universe)
}

pub fn default_bucket_size(width: u32) -> u64 {
    u64::from(width).max(1)
}

/// A run's longest common prefix: `len` bits, right-aligned in `bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LcpDescriptor {
    pub len: u32,
    pub bits: u64,
}

impl LcpDescriptor {
    fn key(self) -> u128 {
        (u128::from(self.len) << 64) | u128::from(self.bits)
    }
}

#[inline]
fn prefix(x: u64, width: u32, len: u32) -> u64 {
    if len == 0 {
        0
    } else {
        x >> (width - len)
    }
}

/// Longest common prefix of two `width`-bit keys.
pub fn lcp(a: u64, b: u64, width: u32) -> LcpDescriptor {
    let len = if a == b {
        width
    } else {
        let high = 63 - (a ^ b).leading_zeros();
        width - 1 - high
    };
    LcpDescriptor {
        len,
        bits: prefix(a, width, len),
    }
}

/// Descriptors of the consecutive runs of `bucket_size` sorted keys.
pub fn lcp_buckets(keys: &[u64], width: u32, bucket_size: u64) -> Vec<LcpDescriptor> {
    keys.chunks(bucket_size as usize)
        .map(|run| lcp(run[0], run[run.len() - 1], width))
        .collect()
}

#[derive(Clone, Copy, Debug)]
struct Layout {
    n: u64,
    width: u32,
    bucket_size: u64,
    runs: u64,
    lcp_width: u32,
    rel_width: u32,
}

impl Layout {
    fn new(n: u64, width: u32, bucket_size: u64) -> Self {
        let runs = n.div_ceil(bucket_size);
        let (lcp_width, rel_width) = if runs <= 1 {
            (0, ceil_log2(n))
        } else {
            (ceil_log2(u64::from(width) + 1), ceil_log2(bucket_size))
        };
        Self {
            n,
            width,
            bucket_size,
            runs,
            lcp_width,
            rel_width,
        }
    }
}

/// Appends the body for already validated local `keys`.
pub(crate) fn build_inner_body(keys: &[u64], width: u32, bucket_size: u64, seed: u64, out: &mut BitBuf) -> Result<()> {
    let layout = Layout::new(keys.len() as u64, width, bucket_size);
    if layout.n <= 1 {
        return Ok(());
    }
    if layout.lcp_width + layout.rel_width > 64 {
        return Err(Error::InvalidInput(format!("bucket size {bucket_size} too large")));
    }
    let key_seed = derive_seed(seed, KEY_FN_TAG);
    if layout.runs == 1 {
        let ranks: Vec<u64> = (0..layout.n).collect();
        return build_body(keys, &ranks, layout.rel_width, key_seed, out);
    }

    let descriptors = lcp_buckets(keys, width, bucket_size);
    let mut check: Vec<u128> = descriptors.iter().map(|d| d.key()).collect();
    check.sort_unstable();
    assert!(
        check.windows(2).all(|w| w[0] != w[1]),
        "consecutive sorted runs must have distinct LCP descriptors"
    );

    let payloads: Vec<u64> = keys
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let run = i as u64 / bucket_size;
            let rel = i as u64 % bucket_size;
            (u64::from(descriptors[run as usize].len) << layout.rel_width) | rel
        })
        .collect();
    build_body(keys, &payloads, layout.lcp_width + layout.rel_width, key_seed, out)?;

    let desc_keys: Vec<u128> = descriptors.iter().map(|d| d.key()).collect();
    let run_ids: Vec<u64> = (0..layout.runs).collect();
    build_body(
        &desc_keys,
        &run_ids,
        ceil_log2(layout.runs),
        derive_seed(seed, PREFIX_FN_TAG),
        out,
    )
}

/// Reader over an inner body stored inside a larger bit buffer.
#[derive(Clone, Copy, Debug)]
pub(crate) struct InnerView {
    layout: Layout,
    key_fn: Option<MphfView>,
    prefix_fn: Option<MphfView>,
    end: u64,
}

impl InnerView {
    pub(crate) fn parse(buf: &BitBuf, offset: u64, n: u64, width: u32, bucket_size: u64, seed: u64) -> Result<Self> {
        let layout = Layout::new(n, width, bucket_size);
        if n <= 1 {
            return Ok(Self {
                layout,
                key_fn: None,
                prefix_fn: None,
                end: offset,
            });
        }
        let key_fn = MphfView::parse(
            buf,
            offset,
            n,
            layout.lcp_width + layout.rel_width,
            derive_seed(seed, KEY_FN_TAG),
        )?;
        let mut end = key_fn.end();
        let prefix_fn = if layout.runs > 1 {
            let v = MphfView::parse(
                buf,
                end,
                layout.runs,
                ceil_log2(layout.runs),
                derive_seed(seed, PREFIX_FN_TAG),
            )?;
            end = v.end();
            Some(v)
        } else {
            None
        };
        Ok(Self {
            layout,
            key_fn: Some(key_fn),
            prefix_fn,
            end,
        })
    }

    pub(crate) fn end(&self) -> u64 {
        self.end
    }

    /// Payload bits (prefix lengths, in-run ranks, run ids) inside the body.
    pub(crate) fn payload_bits(&self) -> u64 {
        let l = &self.layout;
        match (self.key_fn, self.prefix_fn) {
            (None, _) => 0,
            (Some(_), None) => l.n * u64::from(l.rel_width),
            (Some(_), Some(_)) => {
                l.n * u64::from(l.lcp_width + l.rel_width) + l.runs * u64::from(ceil_log2(l.runs))
            }
        }
    }

    /// 1-indexed rank; always in `[1..n]` for `n ≥ 1`.
    #[inline]
    pub(crate) fn rank(&self, buf: &BitBuf, x: u64) -> u64 {
        let l = &self.layout;
        let Some(key_fn) = self.key_fn else {
            return 1;
        };
        let packed = key_fn.lookup(buf, x);
        let rel = if l.rel_width >= 64 { packed } else { packed & ((1u64 << l.rel_width) - 1) };
        let run = match self.prefix_fn {
            None => 0,
            Some(pf) => {
                let len = (packed.checked_shr(l.rel_width).unwrap_or(0) as u32).min(l.width);
                let d = LcpDescriptor {
                    len,
                    bits: prefix(x, l.width, len),
                };
                pf.lookup(buf, d.key()).min(l.runs - 1)
            }
        };
        run.saturating_mul(l.bucket_size)
            .saturating_add(rel)
            .saturating_add(1)
            .clamp(1, l.n)
    }
}

/// Validates that `keys` is strictly increasing and bounded by `universe`.
pub(crate) fn validate_keys(keys: &[u64], universe: u128) -> Result<()> {
    for (i, w) in keys.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(Error::Unsorted { index: i + 1 });
        }
    }
    if let Some(&last) = keys.last() {
        if u128::from(last) >= universe {
            return Err(Error::KeyOutOfUniverse { key: last, universe });
        }
    }
    Ok(())
}

/// Standalone LCP-bucket monotone hash over `[0..universe)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LcpBucketMmphf {
    n: u64,
    universe: u128,
    width: u32,
    bucket_size: u64,
    seed: u64,
    body: BitBuf,
}

impl LcpBucketMmphf {
    /// Builds with the default run length `max(1, ⌈log₂ universe⌉)`.
    pub fn build(keys: &[u64], universe: u128, seed: u64) -> Result<Self> {
        Self::build_with_bucket_size(keys, universe, None, seed)
    }

    pub fn build_with_bucket_size(keys: &[u64], universe: u128, bucket_size: Option<u64>, seed: u64) -> Result<Self> {
        if universe == 0 || universe > 1u128 << 64 {
            return Err(Error::InvalidInput(format!("universe {universe} outside [1..2^64]")));
        }
        validate_keys(keys, universe)?;
        let width = key_width(universe);
        let bucket_size = match bucket_size {
            Some(0) => return Err(Error::InvalidInput("bucket size must be positive".into())),
            Some(b) => b,
            None => default_bucket_size(width),
        };
        let mut body = BitBuf::new();
        build_inner_body(keys, width, bucket_size, seed, &mut body)?;
        Ok(Self {
            n: keys.len() as u64,
            universe,
            width,
            bucket_size,
            seed,
            body,
        })
    }

    fn view(&self) -> InnerView {
        InnerView::parse(&self.body, 0, self.n, self.width, self.bucket_size, self.seed)
            .expect("body validated at construction")
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn key_width(&self) -> u32 {
        self.width
    }

    pub fn bucket_size(&self) -> u64 {
        self.bucket_size
    }

    pub fn universe(&self) -> u128 {
        self.universe
    }

    /// 1-indexed rank of a build key; an arbitrary value in `[1..n]` otherwise.
    pub fn rank(&self, x: u64) -> Result<u64> {
        if self.n == 0 {
            return Err(Error::EmptyStructure);
        }
        Ok(self.view().rank(&self.body, x))
    }

    /// Exact serialized size in bits.
    pub fn space_bits(&self) -> u64 {
        4 * 64 + self.body.serialized_bits()
    }

    /// `[n:u64][universe-1:u64][bucket_size:u64][seed:u64][body bits]`.
    pub fn write_to(&self, w: &mut ByteWriter) {
        w.put_u64(self.n);
        w.put_u64((self.universe - 1) as u64);
        w.put_u64(self.bucket_size);
        w.put_u64(self.seed);
        self.body.write_to(w);
    }

    pub fn read_from(r: &mut ByteReader<'_>) -> Result<Self> {
        let n = r.get_u64()?;
        let universe = u128::from(r.get_u64()?) + 1;
        let bucket_size = r.get_u64()?;
        let seed = r.get_u64()?;
        let body = BitBuf::read_from(r)?;
        if bucket_size == 0 || u128::from(n) > universe {
            return Err(Error::Format("invalid inner header".into()));
        }
        let width = key_width(universe);
        let view = InnerView::parse(&body, 0, n, width, bucket_size, seed)?;
        if view.end() != body.len() {
            return Err(Error::Format("inner body length mismatch".into()));
        }
        Ok(Self {
            n,
            universe,
            width,
            bucket_size,
            seed,
            body,
        })
    }
}
