//! Minimal perfect hashing with a packed payload array.
//!
//! Construction is hash-and-displace: keys are hashed into `⌈n/5⌉` buckets,
//! buckets are placed largest first, and each bucket searches for a pilot
//! value that sends all of its keys to free slots of a table of size
//! `n + ⌈n/32⌉`. Keys landing in the slack slots `[n..table)` are remapped to
//! the free slots below `n` through a small explicit array, so the final slot
//! of every key lies in `[0..n)`.
//!
//! The body is a self-delimiting bit string once `n`, the payload width and
//! the master seed are known from context:
//!
//! ```text
//! gamma(restart+1) | pilot_width:5 | pilots: m × pilot_width
//!   | remap: (table-n) × ⌈log₂ n⌉ | payloads: n × payload_width
//! ```
//!
//! This lets the bucketed monotone hash concatenate many small instances
//! without per-instance headers.

use crate::bits::{ceil_log2, width_for, BitBuf};
use crate::codec::{ByteReader, ByteWriter};
use crate::error::{Error, Result};

const KEYS_PER_BUCKET: u64 = 5;
const SLACK_DIVISOR: u64 = 32;
const PILOT_WIDTH_BITS: u32 = 5;
/// Pilots tried per bucket before the whole build restarts with a new salt.
pub const MAX_PILOT: u64 = 1 << 16;
/// Global restarts before construction gives up.
pub const MAX_RESTARTS: u64 = 64;

#[inline]
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[inline]
fn fastrange(h: u64, m: u64) -> u64 {
    ((u128::from(h) * u128::from(m)) >> 64) as u64
}

/// Derives an independent seed for a sub-structure from a master seed.
#[inline]
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag.wrapping_add(0x51AB_C0DE)))
}

/// Keys accepted by the hash builder.
pub trait HashKey: Copy + Ord + std::fmt::Debug {
    fn hash_with(&self, seed: u64) -> u64;
}

impl HashKey for u64 {
    #[inline]
    fn hash_with(&self, seed: u64) -> u64 {
        // A bijection of the key for every seed: distinct keys never collide.
        splitmix64(*self ^ seed)
    }
}

impl HashKey for u128 {
    #[inline]
    fn hash_with(&self, seed: u64) -> u64 {
        splitmix64((*self as u64) ^ splitmix64((*self >> 64) as u64 ^ seed))
    }
}

fn bucket_count(n: u64) -> u64 {
    n.div_ceil(KEYS_PER_BUCKET).max(1)
}

fn table_size(n: u64) -> u64 {
    n + n.div_ceil(SLACK_DIVISOR)
}

#[inline]
fn slot_of(h: u64, pilot: u64, table: u64) -> u64 {
    fastrange(splitmix64(splitmix64(h ^ 0xA076_1D64_78BD_642F) ^ splitmix64(pilot)), table)
}

/// Zero-copy reader over a hash body stored somewhere inside a [`BitBuf`].
#[derive(Clone, Copy, Debug)]
pub struct MphfView {
    n: u64,
    buckets: u64,
    table: u64,
    seed: u64,
    pilot_width: u32,
    pilots_at: u64,
    remap_width: u32,
    remap_at: u64,
    payload_width: u32,
    payload_at: u64,
}

impl MphfView {
    /// Parses the body starting at bit `offset`.
    pub fn parse(buf: &BitBuf, offset: u64, n: u64, payload_width: u32, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyStructure);
        }
        let (restart, pos) = buf
            .read_gamma(offset)
            .ok_or_else(|| Error::Format("truncated hash body".into()))?;
        if pos + u64::from(PILOT_WIDTH_BITS) > buf.len() {
            return Err(Error::Format("truncated hash body".into()));
        }
        let pilot_width = buf.get_bits(pos, PILOT_WIDTH_BITS) as u32;
        let buckets = bucket_count(n);
        let table = table_size(n);
        let pilots_at = pos + u64::from(PILOT_WIDTH_BITS);
        let remap_at = pilots_at + buckets * u64::from(pilot_width);
        let remap_width = ceil_log2(n);
        let payload_at = remap_at + (table - n) * u64::from(remap_width);
        let view = Self {
            n,
            buckets,
            table,
            seed: derive_seed(seed, restart - 1),
            pilot_width,
            pilots_at,
            remap_width,
            remap_at,
            payload_width,
            payload_at,
        };
        if view.end() > buf.len() {
            return Err(Error::Format("truncated hash body".into()));
        }
        Ok(view)
    }

    /// Bit position right after the body.
    #[inline]
    pub fn end(&self) -> u64 {
        self.payload_at + self.n * u64::from(self.payload_width)
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn payload_width(&self) -> u32 {
        self.payload_width
    }

    /// Bits of the body not spent on payloads.
    pub fn structure_bits(&self, offset: u64) -> u64 {
        self.payload_at - offset
    }

    /// The slot in `[0..n)` assigned to `key`; a bijection on build keys.
    #[inline]
    pub fn slot<K: HashKey>(&self, buf: &BitBuf, key: K) -> u64 {
        let h = key.hash_with(self.seed);
        let bucket = fastrange(h, self.buckets);
        let pilot = buf.get_bits(self.pilots_at + bucket * u64::from(self.pilot_width), self.pilot_width);
        let pos = slot_of(h, pilot, self.table);
        if pos < self.n {
            pos
        } else {
            let r = buf.get_bits(self.remap_at + (pos - self.n) * u64::from(self.remap_width), self.remap_width);
            r.min(self.n - 1)
        }
    }

    #[inline]
    pub fn lookup<K: HashKey>(&self, buf: &BitBuf, key: K) -> u64 {
        let slot = self.slot(buf, key);
        buf.get_bits(self.payload_at + slot * u64::from(self.payload_width), self.payload_width)
    }
}

/// Appends a hash body for `keys` → `payloads` to `out`.
///
/// Keys must be distinct and every payload must fit in `payload_width` bits.
pub fn build_body<K: HashKey>(
    keys: &[K],
    payloads: &[u64],
    payload_width: u32,
    seed: u64,
    out: &mut BitBuf,
) -> Result<()> {
    let n = keys.len() as u64;
    if n == 0 {
        return Err(Error::InvalidInput("n ≥ 1 required".into()));
    }
    if payloads.len() != keys.len() {
        return Err(Error::InvalidInput(format!(
            "{} keys but {} payloads",
            keys.len(),
            payloads.len()
        )));
    }
    if payload_width > 64 {
        return Err(Error::InvalidInput("payload width exceeds 64 bits".into()));
    }
    if payload_width < 64 {
        if let Some(&p) = payloads.iter().find(|&&p| p >> payload_width != 0) {
            return Err(Error::PayloadOverflow {
                payload: p,
                width: payload_width,
            });
        }
    }
    let mut sorted = keys.to_vec();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::DuplicateKey(format!("{:?}", w[0])));
    }

    let buckets = bucket_count(n);
    let table = table_size(n);
    for restart in 0..MAX_RESTARTS {
        let s = derive_seed(seed, restart);
        if let Some((pilots, slots)) = try_place(keys, s, buckets, table) {
            write_body(restart, &pilots, &slots, payloads, payload_width, n, table, out);
            return Ok(());
        }
    }
    Err(Error::BuildFailed(format!(
        "no displacement found after {MAX_RESTARTS} restarts (n = {n})"
    )))
}

/// Returns per-bucket pilots and the raw table slot of every key.
fn try_place<K: HashKey>(keys: &[K], seed: u64, buckets: u64, table: u64) -> Option<(Vec<u64>, Vec<u64>)> {
    let hashes: Vec<u64> = keys.iter().map(|k| k.hash_with(seed)).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); buckets as usize];
    for (i, &h) in hashes.iter().enumerate() {
        members[fastrange(h, buckets) as usize].push(i);
    }
    let mut order: Vec<usize> = (0..buckets as usize).collect();
    order.sort_by(|&a, &b| members[b].len().cmp(&members[a].len()).then(a.cmp(&b)));

    let mut taken = vec![false; table as usize];
    let mut pilots = vec![0u64; buckets as usize];
    let mut slots = vec![0u64; keys.len()];
    let mut trial: Vec<u64> = Vec::new();
    for b in order {
        let group = &members[b];
        if group.is_empty() {
            continue;
        }
        let mut placed = false;
        'pilot: for pilot in 0..MAX_PILOT {
            trial.clear();
            for &k in group {
                let p = slot_of(hashes[k], pilot, table);
                if taken[p as usize] || trial.contains(&p) {
                    continue 'pilot;
                }
                trial.push(p);
            }
            for (&k, &p) in group.iter().zip(&trial) {
                taken[p as usize] = true;
                slots[k] = p;
            }
            pilots[b] = pilot;
            placed = true;
            break;
        }
        if !placed {
            return None;
        }
    }
    Some((pilots, slots))
}

#[allow(clippy::too_many_arguments)]
fn write_body(
    restart: u64,
    pilots: &[u64],
    slots: &[u64],
    payloads: &[u64],
    payload_width: u32,
    n: u64,
    table: u64,
    out: &mut BitBuf,
) {
    let pilot_width = width_for(pilots.iter().copied().max().unwrap_or(0));
    out.push_gamma(restart + 1);
    out.push_bits(u64::from(pilot_width), PILOT_WIDTH_BITS);
    for &p in pilots {
        out.push_bits(p, pilot_width);
    }

    // Slack slots that received a key are redirected to free low slots.
    let mut used_low = vec![false; n as usize];
    for &s in slots {
        if s < n {
            used_low[s as usize] = true;
        }
    }
    let mut free_low = (0..n).filter(|&s| !used_low[s as usize]);
    let mut remap = vec![0u64; (table - n) as usize];
    let mut used_high = vec![false; (table - n) as usize];
    for &s in slots {
        if s >= n {
            used_high[(s - n) as usize] = true;
        }
    }
    for (i, used) in used_high.iter().enumerate() {
        if *used {
            remap[i] = free_low.next().expect("as many free low slots as used slack slots");
        }
    }
    let remap_width = ceil_log2(n);
    for &r in &remap {
        out.push_bits(r, remap_width);
    }

    let mut table_payload = vec![0u64; n as usize];
    for (i, &s) in slots.iter().enumerate() {
        let final_slot = if s < n { s } else { remap[(s - n) as usize] };
        table_payload[final_slot as usize] = payloads[i];
    }
    for p in table_payload {
        out.push_bits(p, payload_width);
    }
}

/// A standalone minimal perfect hash with attached payloads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PerfectHashWithPayload {
    n: u64,
    payload_width: u32,
    seed: u64,
    body: BitBuf,
}

impl PerfectHashWithPayload {
    /// Builds the hash; construction is deterministic for a fixed `seed`.
    pub fn build<K: HashKey>(keys: &[K], payloads: &[u64], payload_width: u32, seed: u64) -> Result<Self> {
        let mut body = BitBuf::new();
        build_body(keys, payloads, payload_width, seed, &mut body)?;
        Ok(Self {
            n: keys.len() as u64,
            payload_width,
            seed,
            body,
        })
    }

    fn view(&self) -> MphfView {
        MphfView::parse(&self.body, 0, self.n, self.payload_width, self.seed)
            .expect("body validated at construction")
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn payload_width(&self) -> u32 {
        self.payload_width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Stored payload for build keys; some in-range value otherwise.
    pub fn lookup<K: HashKey>(&self, key: K) -> u64 {
        self.view().lookup(&self.body, key)
    }

    /// The bijective slot `h(key) ∈ [0..n)`.
    pub fn slot<K: HashKey>(&self, key: K) -> u64 {
        self.view().slot(&self.body, key)
    }

    /// Exact serialized size in bits.
    pub fn space_bits(&self) -> u64 {
        64 + 8 + 64 + self.body.serialized_bits()
    }

    /// Bits spent on pilots, remap table and the in-body header.
    pub fn structure_bits(&self) -> u64 {
        self.view().structure_bits(0)
    }

    /// `[n:u64][payload_width:u8][seed:u64][body bits]`.
    pub fn write_to(&self, w: &mut ByteWriter) {
        w.put_u64(self.n);
        w.put_u8(self.payload_width as u8);
        w.put_u64(self.seed);
        self.body.write_to(w);
    }

    pub fn read_from(r: &mut ByteReader<'_>) -> Result<Self> {
        let n = r.get_u64()?;
        let payload_width = u32::from(r.get_u8()?);
        let seed = r.get_u64()?;
        let body = BitBuf::read_from(r)?;
        if payload_width > 64 {
            return Err(Error::Format("payload width exceeds 64".into()));
        }
        let view = MphfView::parse(&body, 0, n, payload_width, seed)?;
        if view.end() != body.len() {
            return Err(Error::Format("hash body length mismatch".into()));
        }
        Ok(Self {
            n,
            payload_width,
            seed,
            body,
        })
    }
}
