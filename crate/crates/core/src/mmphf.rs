//! Monotone minimal perfect hashing over `[0..u)` in three regimes.
//!
//! * `PlainBitArray`: a rank-indexed bitmap of the whole universe.
//! * `Bucketed`: `n` universe buckets of length `b = ⌈u/n⌉`, a bitvector `B`
//!   holding `1 0^{n_i}` per bucket, and one LCP-bucket structure per bucket
//!   concatenated into a single payload whose starts are marked in `N`.
//! * `BigUniverse`: a single perfect hash storing `rank − 1` per key.
//!
//! `N` writes each bucket's blob as `1 0^{len_i}`, so buckets with empty blobs
//! still own a distinct one and `select1(N, i) − i` is the blob offset.

use std::fmt;

use serde::Serialize;

use crate::bits::{ceil_log2, BitBuf};
use crate::bitvec::RankSelectBitVector;
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::inner::{build_inner_body, default_bucket_size, key_width, validate_keys, InnerView};
use crate::mphf::{derive_seed, PerfectHashWithPayload};

pub const MAGIC: &[u8; 4] = b"MMPH";
pub const FORMAT_VERSION: u16 = 1;

/// Largest universe the plain regime will materialize, in bits.
pub const PLAIN_MAX_UNIVERSE: u128 = 1 << 34;

const SECTION_COUNTS: u8 = b'B';
const SECTION_STARTS: u8 = b'N';
const SECTION_INNERS: u8 = b'I';
const SECTION_HASH: u8 = b'H';
const SECTION_BITMAP: u8 = b'V';

const BIG_UNIVERSE_TAG: u64 = 0xB16;

/// Fixed container prefix: magic, version, regime tag, `u − 1`.
const PREFIX_BITS: u64 = 8 * (4 + 2 + 1 + 8);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    PlainBitArray,
    Bucketed,
    BigUniverse,
}

impl Regime {
    pub fn tag(self) -> u8 {
        match self {
            Regime::PlainBitArray => 1,
            Regime::Bucketed => 2,
            Regime::BigUniverse => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            1 => Some(Regime::PlainBitArray),
            2 => Some(Regime::Bucketed),
            3 => Some(Regime::BigUniverse),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::PlainBitArray => "plain",
            Regime::Bucketed => "bucketed",
            Regime::BigUniverse => "big-universe",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" | "plain-bit-array" => Ok(Regime::PlainBitArray),
            "bucketed" => Ok(Regime::Bucketed),
            "big-universe" | "big" => Ok(Regime::BigUniverse),
            other => Err(Error::InvalidInput(format!("unknown regime '{other}'"))),
        }
    }
}

/// Strictly increasing keys from `[0..universe)`, `universe ≤ 2^64`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortedKeySet {
    universe: u128,
    keys: Vec<u64>,
}

impl SortedKeySet {
    pub fn new(keys: Vec<u64>, universe: u128) -> Result<Self> {
        if universe == 0 || universe > 1u128 << 64 {
            return Err(Error::InvalidInput(format!("universe {universe} outside [1..2^64]")));
        }
        validate_keys(&keys, universe)?;
        Ok(Self { universe, keys })
    }

    pub fn universe(&self) -> u128 {
        self.universe
    }

    pub fn keys(&self) -> &[u64] {
        &self.keys
    }

    pub fn len(&self) -> u64 {
        self.keys.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildConfig {
    /// Plain regime whenever `u < plain_cutoff · n`.
    pub plain_cutoff: u64,
    pub regime: Option<Regime>,
    pub inner_bucket_size: Option<u64>,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            plain_cutoff: 4,
            regime: None,
            inner_bucket_size: None,
            seed: 0x6D6D_7068_6673_6565,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlainBitArray {
    universe: u128,
    n: u64,
    bits: RankSelectBitVector,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bucketed {
    universe: u128,
    n: u64,
    bucket_len: u128,
    width: u32,
    inner_bucket_size: u64,
    seed: u64,
    counts: RankSelectBitVector,
    starts: RankSelectBitVector,
    inners: BitBuf,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigUniverse {
    universe: u128,
    hash: PerfectHashWithPayload,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonotoneHash {
    PlainBitArray(PlainBitArray),
    Bucketed(Bucketed),
    BigUniverse(BigUniverse),
}

/// One line of a space breakdown.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SpaceComponent {
    pub name: &'static str,
    pub bits: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceReport {
    pub regime: Regime,
    pub n: u64,
    pub universe: String,
    pub total_bits: u64,
    pub bits_per_key: f64,
    /// Sums to `total_bits`.
    pub components: Vec<SpaceComponent>,
}

fn check_nonempty(ks: &SortedKeySet) -> Result<()> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("n ≥ 1 required".into()));
    }
    Ok(())
}

/// Regime the builder settles on. Below the plain cutoff no candidate is
/// built; otherwise both sparse candidates are built and measured.
pub fn select_regime(ks: &SortedKeySet, config: &BuildConfig) -> Result<Regime> {
    Ok(MonotoneHash::build(ks, config)?.regime())
}

fn plain_applies(n: u64, universe: u128, cutoff: u64) -> bool {
    universe < u128::from(cutoff) * u128::from(n)
}

impl PlainBitArray {
    fn build(ks: &SortedKeySet) -> Result<Self> {
        if ks.universe > PLAIN_MAX_UNIVERSE {
            return Err(Error::InstanceTooLarge(format!(
                "plain bit array over universe {} exceeds 2^34 bits",
                ks.universe
            )));
        }
        let mut bits = BitBuf::zeros(ks.universe as u64);
        for &k in &ks.keys {
            bits.set_bit(k, true);
        }
        Ok(Self {
            universe: ks.universe,
            n: ks.len(),
            bits: RankSelectBitVector::from_bitbuf(bits),
        })
    }

    fn rank(&self, x: u64) -> u64 {
        (self.bits.rank1_unchecked(x) + 1).min(self.n)
    }

    pub fn bitvector(&self) -> &RankSelectBitVector {
        &self.bits
    }
}

impl Bucketed {
    fn build(ks: &SortedKeySet, inner_bucket_size: Option<u64>, seed: u64) -> Result<Self> {
        let n = ks.len();
        let universe = ks.universe;
        let bucket_len = universe.div_ceil(u128::from(n));
        let width = key_width(bucket_len);
        let inner_bucket_size = match inner_bucket_size {
            Some(0) => return Err(Error::InvalidInput("inner bucket size must be positive".into())),
            Some(b) => b,
            None => default_bucket_size(width),
        };

        let mut counts = BitBuf::new();
        let mut starts = BitBuf::new();
        let mut inners = BitBuf::new();
        let mut local = Vec::new();
        let mut rest = ks.keys.as_slice();
        for i in 0..n {
            let base = u128::from(i) * bucket_len;
            let end = base + bucket_len;
            let take = rest.partition_point(|&k| u128::from(k) < end);
            local.clear();
            local.extend(rest[..take].iter().map(|&k| (u128::from(k) - base) as u64));
            rest = &rest[take..];

            counts.push_bit(true);
            for _ in 0..take {
                counts.push_bit(false);
            }
            let before = inners.len();
            build_inner_body(&local, width, inner_bucket_size, derive_seed(seed, i), &mut inners)?;
            starts.push_bit(true);
            for _ in before..inners.len() {
                starts.push_bit(false);
            }
        }
        debug_assert!(rest.is_empty());
        Ok(Self {
            universe,
            n,
            bucket_len,
            width,
            inner_bucket_size,
            seed,
            counts: RankSelectBitVector::from_bitbuf(counts),
            starts: RankSelectBitVector::from_bitbuf(starts),
            inners,
        })
    }

    /// `(base, n_i)` for 1-indexed bucket `i`; `base = k − i = Σ_{j<i} n_j`.
    fn bucket(&self, i: u64) -> (u64, u64) {
        let k = self.counts.select1_unchecked(i);
        let next = if i < self.n {
            self.counts.select1_unchecked(i + 1)
        } else {
            2 * self.n + 1
        };
        (k - i, next - k - 1)
    }

    fn view(&self, i: u64, n_i: u64) -> Result<InnerView> {
        let offset = self.starts.select1_unchecked(i) - i;
        InnerView::parse(
            &self.inners,
            offset,
            n_i,
            self.width,
            self.inner_bucket_size,
            derive_seed(self.seed, i - 1),
        )
    }

    fn rank(&self, x: u64) -> u64 {
        let i0 = u128::from(x) / self.bucket_len;
        let i = i0 as u64 + 1;
        let (base, n_i) = self.bucket(i);
        if n_i == 0 {
            return base.clamp(1, self.n);
        }
        let view = self.view(i, n_i).expect("inner blobs validated at construction");
        let local = (u128::from(x) - i0 * self.bucket_len) as u64;
        (base + view.rank(&self.inners, local)).clamp(1, self.n)
    }

    /// Structural checks shared by deserialization.
    fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.counts.len() != 2 * n || self.counts.count_ones() != n || (n > 0 && !self.counts.get(0)) {
            return Err(Error::Format("bucket count array malformed".into()));
        }
        if self.starts.count_ones() != n
            || self.starts.len() != n + self.inners.len()
            || (n > 0 && !self.starts.get(0))
        {
            return Err(Error::Format("start array malformed".into()));
        }
        for i in 1..=n {
            let (_, n_i) = self.bucket(i);
            let view = self.view(i, n_i)?;
            let next = if i < n {
                self.starts.select1_unchecked(i + 1) - (i + 1)
            } else {
                self.inners.len()
            };
            if view.end() != next {
                return Err(Error::Format(format!("inner blob {i} length mismatch")));
            }
        }
        Ok(())
    }

    pub fn bucket_len(&self) -> u128 {
        self.bucket_len
    }

    pub fn counts(&self) -> &RankSelectBitVector {
        &self.counts
    }

    pub fn starts(&self) -> &RankSelectBitVector {
        &self.starts
    }

    /// `n_i` for every bucket in order.
    pub fn bucket_sizes(&self) -> Vec<u64> {
        (1..=self.n).map(|i| self.bucket(i).1).collect()
    }

    /// `k − i` where `k = select1(B, i)`.
    pub fn bucket_base(&self, i: u64) -> Result<u64> {
        if i == 0 || i > self.n {
            return Err(Error::SelectOutOfRange { index: i, ones: self.n });
        }
        Ok(self.bucket(i).0)
    }

    fn inner_payload_bits(&self) -> u64 {
        (1..=self.n)
            .map(|i| {
                let (_, n_i) = self.bucket(i);
                self.view(i, n_i).map(|v| v.payload_bits()).unwrap_or(0)
            })
            .sum()
    }
}

impl BigUniverse {
    fn build(ks: &SortedKeySet, seed: u64) -> Result<Self> {
        let n = ks.len();
        let width = ceil_log2(n);
        let payloads: Vec<u64> = (0..n).collect();
        let hash = PerfectHashWithPayload::build(&ks.keys, &payloads, width, derive_seed(seed, BIG_UNIVERSE_TAG))?;
        Ok(Self {
            universe: ks.universe,
            hash,
        })
    }

    fn rank(&self, x: u64) -> u64 {
        (self.hash.lookup(x) + 1).min(self.hash.len())
    }

    pub fn hash(&self) -> &PerfectHashWithPayload {
        &self.hash
    }
}

impl MonotoneHash {
    pub fn build(ks: &SortedKeySet, config: &BuildConfig) -> Result<Self> {
        check_nonempty(ks)?;
        if let Some(regime) = config.regime {
            return Self::build_regime(ks, regime, config);
        }
        if plain_applies(ks.len(), ks.universe, config.plain_cutoff) {
            return Self::build_regime(ks, Regime::PlainBitArray, config);
        }
        let bucketed = Self::build_regime(ks, Regime::Bucketed, config)?;
        let big = Self::build_regime(ks, Regime::BigUniverse, config)?;
        Ok(if big.space_bits() < bucketed.space_bits() {
            big
        } else {
            bucketed
        })
    }

    /// Builds one specific regime, bypassing measurement.
    pub fn build_regime(ks: &SortedKeySet, regime: Regime, config: &BuildConfig) -> Result<Self> {
        check_nonempty(ks)?;
        Ok(match regime {
            Regime::PlainBitArray => MonotoneHash::PlainBitArray(PlainBitArray::build(ks)?),
            Regime::Bucketed => {
                MonotoneHash::Bucketed(Bucketed::build(ks, config.inner_bucket_size, config.seed)?)
            }
            Regime::BigUniverse => MonotoneHash::BigUniverse(BigUniverse::build(ks, config.seed)?),
        })
    }

    pub fn regime(&self) -> Regime {
        match self {
            MonotoneHash::PlainBitArray(_) => Regime::PlainBitArray,
            MonotoneHash::Bucketed(_) => Regime::Bucketed,
            MonotoneHash::BigUniverse(_) => Regime::BigUniverse,
        }
    }

    pub fn len(&self) -> u64 {
        match self {
            MonotoneHash::PlainBitArray(p) => p.n,
            MonotoneHash::Bucketed(b) => b.n,
            MonotoneHash::BigUniverse(g) => g.hash.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn universe(&self) -> u128 {
        match self {
            MonotoneHash::PlainBitArray(p) => p.universe,
            MonotoneHash::Bucketed(b) => b.universe,
            MonotoneHash::BigUniverse(g) => g.universe,
        }
    }

    pub fn as_bucketed(&self) -> Option<&Bucketed> {
        match self {
            MonotoneHash::Bucketed(b) => Some(b),
            _ => None,
        }
    }

    /// True 1-indexed rank for build keys; some value in `[1..n]` for any
    /// other `x < u`.
    pub fn rank(&self, x: u64) -> Result<u64> {
        let universe = self.universe();
        if u128::from(x) >= universe {
            return Err(Error::KeyOutOfUniverse { key: x, universe });
        }
        Ok(match self {
            MonotoneHash::PlainBitArray(p) => p.rank(x),
            MonotoneHash::Bucketed(b) => b.rank(x),
            MonotoneHash::BigUniverse(g) => g.rank(x),
        })
    }

    /// Exact size of [`MonotoneHash::to_bytes`] in bits.
    pub fn space_bits(&self) -> u64 {
        self.space_report().total_bits
    }

    pub fn space_report(&self) -> SpaceReport {
        let mut components = Vec::new();
        let mut push = |name, bits| components.push(SpaceComponent { name, bits });
        match self {
            MonotoneHash::PlainBitArray(p) => {
                push("header", PREFIX_BITS + 8);
                let total = p.bits.serialized_bits();
                push("bitmap", 64 + 64 * p.bits.bits().words().len() as u64);
                push("rank/select index", total - (64 + 64 * p.bits.bits().words().len() as u64));
            }
            MonotoneHash::Bucketed(b) => {
                push("header", PREFIX_BITS + 3 * 64 + 3 * 8);
                push("B", b.counts.serialized_bits());
                push("N", b.starts.serialized_bits());
                let payload = b.inner_payload_bits();
                push("inner payloads", payload);
                push("inner hash overhead", b.inners.serialized_bits() - payload);
            }
            MonotoneHash::BigUniverse(g) => {
                push("header", PREFIX_BITS + 8);
                let payload = g.hash.len() * u64::from(g.hash.payload_width());
                push("rank payloads", payload);
                push("hash overhead", g.hash.space_bits() - payload);
            }
        }
        let total_bits = components.iter().map(|c| c.bits).sum();
        let n = self.len();
        SpaceReport {
            regime: self.regime(),
            n,
            universe: self.universe().to_string(),
            total_bits,
            bits_per_key: total_bits as f64 / n as f64,
            components,
        }
    }

    pub fn write_to(&self, w: &mut ByteWriter) {
        w.put_bytes(MAGIC);
        w.put_u16(FORMAT_VERSION);
        w.put_u8(self.regime().tag());
        w.put_u64((self.universe() - 1) as u64);
        match self {
            MonotoneHash::PlainBitArray(p) => {
                w.put_u8(SECTION_BITMAP);
                p.bits.write_to(w);
            }
            MonotoneHash::Bucketed(b) => {
                w.put_u64(b.n);
                w.put_u64(b.inner_bucket_size);
                w.put_u64(b.seed);
                w.put_u8(SECTION_COUNTS);
                b.counts.write_to(w);
                w.put_u8(SECTION_STARTS);
                b.starts.write_to(w);
                w.put_u8(SECTION_INNERS);
                b.inners.write_to(w);
            }
            MonotoneHash::BigUniverse(g) => {
                w.put_u8(SECTION_HASH);
                g.hash.write_to(w);
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        self.write_to(&mut w);
        w.into_bytes()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(data);
        let h = Self::read_from(&mut r)?;
        if r.remaining() != 0 {
            return Err(Error::Format(format!("{} trailing bytes", r.remaining())));
        }
        Ok(h)
    }

    pub fn read_from(r: &mut ByteReader<'_>) -> Result<Self> {
        if r.get_bytes(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.get_u16()?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}")));
        }
        let tag = r.get_u8()?;
        let regime = Regime::from_tag(tag).ok_or_else(|| Error::Format(format!("unknown regime tag {tag}")))?;
        let universe = u128::from(r.get_u64()?) + 1;
        let section = |r: &mut ByteReader<'_>, want: u8| -> Result<()> {
            let got = r.get_u8()?;
            if got != want {
                return Err(Error::Format(format!("expected section '{}', found {got:#04x}", want as char)));
            }
            Ok(())
        };
        Ok(match regime {
            Regime::PlainBitArray => {
                section(r, SECTION_BITMAP)?;
                let bits = RankSelectBitVector::read_from(r)?;
                let n = bits.count_ones();
                if u128::from(bits.len()) != universe || n == 0 {
                    return Err(Error::Format("bitmap does not cover the universe".into()));
                }
                MonotoneHash::PlainBitArray(PlainBitArray { universe, n, bits })
            }
            Regime::Bucketed => {
                let n = r.get_u64()?;
                let inner_bucket_size = r.get_u64()?;
                let seed = r.get_u64()?;
                if n == 0 || u128::from(n) > universe || inner_bucket_size == 0 {
                    return Err(Error::Format("invalid bucketed header".into()));
                }
                section(r, SECTION_COUNTS)?;
                let counts = RankSelectBitVector::read_from(r)?;
                section(r, SECTION_STARTS)?;
                let starts = RankSelectBitVector::read_from(r)?;
                section(r, SECTION_INNERS)?;
                let inners = BitBuf::read_from(r)?;
                let bucket_len = universe.div_ceil(u128::from(n));
                let b = Bucketed {
                    universe,
                    n,
                    bucket_len,
                    width: key_width(bucket_len),
                    inner_bucket_size,
                    seed,
                    counts,
                    starts,
                    inners,
                };
                b.validate()?;
                MonotoneHash::Bucketed(b)
            }
            Regime::BigUniverse => {
                section(r, SECTION_HASH)?;
                let hash = PerfectHashWithPayload::read_from(r)?;
                if hash.is_empty()
                    || u128::from(hash.len()) > universe
                    || hash.payload_width() != ceil_log2(hash.len())
                {
                    return Err(Error::Format("invalid big-universe hash".into()));
                }
                MonotoneHash::BigUniverse(BigUniverse { universe, hash })
            }
        })
    }
}
