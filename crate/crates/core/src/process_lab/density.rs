//! Sparse/dense decomposition of a stage block.
//!
//! Within a block `B` at level `ℓᵢ` and stage interval `H = [ℓᵢ..ℓ'ᵢ)`, a
//! level-`ℓ` block is dense for color `i` when at least a `τ` fraction of it
//! has color `i`. `D_ℓ` is the union of level-`ℓ` blocks of `B` that are dense
//! together with all their ancestors down to `B`; `S_ℓ = B \ D_ℓ`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Zero};
use rand::Rng;
use serde::{Serialize, Serializer};

use super::{level_sequences, monte_carlo, sample_levels, Estimate, LabLimits, Mode, ProcessParams};
use crate::coloring_lab::ColorSource;
use crate::error::{Error, Result};

/// Sorted, disjoint, non-adjacent half-open intervals.
pub type IntervalList = Vec<(u64, u64)>;

fn push_merge(list: &mut IntervalList, lo: u64, hi: u64) {
    if lo >= hi {
        return;
    }
    match list.last_mut() {
        Some(last) if last.1 == lo => last.1 = hi,
        _ => list.push((lo, hi)),
    }
}

pub(crate) fn total_len(list: &[(u64, u64)]) -> u64 {
    list.iter().map(|&(a, b)| b - a).sum()
}

/// `block \ list` for `list ⊆ block`.
pub(crate) fn complement(block: (u64, u64), list: &[(u64, u64)]) -> IntervalList {
    let mut out = Vec::new();
    let mut cur = block.0;
    for &(a, b) in list {
        push_merge(&mut out, cur, a);
        cur = b;
    }
    push_merge(&mut out, cur, block.1);
    out
}

pub(crate) fn contains(list: &[(u64, u64)], x: u64) -> bool {
    let k = list.partition_point(|&(a, _)| a <= x);
    k > 0 && x < list[k - 1].1
}

fn ser_ratios<S: Serializer>(v: &[Ratio<u64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| format!("{}/{}", r.numer(), r.denom())))
}

/// `(S̄ₖ, D̄ₖ)` for a normal candidate level `λₖ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub sparse: IntervalList,
    pub dense: IntervalList,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityProfile {
    pub color: u32,
    pub block: (u64, u64),
    pub levels: (u64, u64),
    /// Positions of `B` with the profile's color.
    pub color_count: u64,
    /// Color fraction of `B` at most `τ + σ`.
    pub almost_sparse: bool,
    /// `S_ℓ` for `ℓ ∈ H`, in order.
    pub sparse: Vec<IntervalList>,
    /// `D_ℓ` for `ℓ ∈ H`, in order.
    pub dense: Vec<IntervalList>,
    /// `λ₀ < ⋯ < λ_f`, splitting `H` into `f` equal parts.
    pub lambda: Vec<u64>,
    /// `q_{λₖ} = |D_{λₖ₊₁−1}| / |D_{λₖ−1}|`, 1 on an empty denominator.
    #[serde(serialize_with = "ser_ratios")]
    pub q: Vec<Ratio<u64>>,
    /// `q_{λₖ} < θ`, only flagged when `B` is not almost sparse.
    pub abnormal: Vec<bool>,
    /// Partitions for normal `λₖ`.
    pub partitions: Vec<Option<Partition>>,
    /// Union of the abnormal level-`λₖ` blocks of `B`, per `k`.
    pub abnormal_blocks: Vec<IntervalList>,
}

impl DensityProfile {
    /// `D_{level}`, with `D_{ℓᵢ−1} = B`.
    pub fn dense_at(&self, level: i64) -> &[(u64, u64)] {
        if level < self.levels.0 as i64 {
            std::slice::from_ref(&self.block)
        } else {
            &self.dense[(level as u64 - self.levels.0) as usize]
        }
    }

    /// The `k` with `λₖ = level`.
    pub fn lambda_index(&self, level: u64) -> Option<usize> {
        self.lambda[..self.lambda.len() - 1].iter().position(|&l| l == level)
    }

    pub fn is_abnormal_block(&self, k: usize, x: u64) -> bool {
        contains(&self.abnormal_blocks[k], x)
    }

    pub fn abnormal_count(&self) -> usize {
        self.abnormal.iter().filter(|&&a| a).count()
    }
}

/// `log₂(1/σ) / (−log₂ θ)`: no block that is not almost sparse can have more
/// abnormal levels than this.
pub fn abnormal_level_cap(p: &ProcessParams) -> f64 {
    (1.0 / p.sigma).log2() / -p.theta.log2()
}

fn dense(p: &ProcessParams, count: u64, len: u64) -> bool {
    u128::from(count) * u128::from(*p.tau.denom()) >= u128::from(*p.tau.numer()) * u128::from(len)
}

fn check_context(p: &ProcessParams, block: (u64, u64), levels: (u64, u64), color: u32) -> Result<()> {
    let bad = |what: &str| Error::InvalidInput(format!("misaligned density context: {what}"));
    let (l0, l1) = levels;
    if l1 <= l0 || l1 > p.levels {
        return Err(bad("empty or out-of-range level interval"));
    }
    let len = l1 - l0;
    let mut stage_len = p.levels;
    while stage_len > len && stage_len.is_multiple_of(p.f) {
        stage_len /= p.f;
    }
    if stage_len != len || l0 % len != 0 {
        return Err(bad("level interval is not a stage interval"));
    }
    if len % p.f != 0 {
        return Err(bad("level interval cannot be split f ways"));
    }
    let blen = p.block_len(l0);
    if block.1 > p.u || block.1 - block.0 != blen || !block.0.is_multiple_of(blen) {
        return Err(bad("block is not a level-ℓᵢ block"));
    }
    if color == 0 || color > p.n {
        return Err(Error::InvalidInput(format!("color {color} outside [1..{}]", p.n)));
    }
    Ok(())
}

/// Decomposes `block` (a level-`levels.0` block) over the stage interval
/// `levels` for `color`.
pub fn density_profile<C: ColorSource + ?Sized>(
    p: &ProcessParams,
    c: &C,
    block: (u64, u64),
    levels: (u64, u64),
    color: u32,
    limits: &LabLimits,
) -> Result<DensityProfile> {
    p.check_coloring(c)?;
    check_context(p, block, levels, color)?;
    let (l0, l1) = levels;
    let mut visited = 0u64;
    let mut tick = |k: u64| -> Result<()> {
        visited += k;
        if visited > limits.max_blocks {
            return Err(Error::BudgetExceeded(format!(
                "density profile exceeded {} blocks",
                limits.max_blocks
            )));
        }
        Ok(())
    };

    let blen = block.1 - block.0;
    let color_count = c.count(color, block.0, block.1);
    let fraction = color_count as f64 / blen as f64;
    let tau = *p.tau.numer() as f64 / *p.tau.denom() as f64;
    let almost_sparse = fraction <= tau + p.sigma;

    let mut dense_levels: Vec<IntervalList> = Vec::with_capacity((l1 - l0) as usize);
    let mut prev: IntervalList = vec![block];
    for level in l0..l1 {
        let bl = p.block_len(level);
        tick(total_len(&prev) / bl)?;
        let mut cur = Vec::new();
        for &(a, b) in &prev {
            let mut s = a;
            while s < b {
                if dense(p, c.count(color, s, s + bl), bl) {
                    push_merge(&mut cur, s, s + bl);
                }
                s += bl;
            }
        }
        dense_levels.push(cur.clone());
        prev = cur;
    }
    let sparse_levels = dense_levels.iter().map(|d| complement(block, d)).collect();

    let step = (l1 - l0) / p.f;
    let lambda: Vec<u64> = (0..=p.f).map(|k| l0 + k * step).collect();
    let mut profile = DensityProfile {
        color,
        block,
        levels,
        color_count,
        almost_sparse,
        sparse: sparse_levels,
        dense: dense_levels,
        lambda,
        q: Vec::new(),
        abnormal: Vec::new(),
        partitions: Vec::new(),
        abnormal_blocks: Vec::new(),
    };

    for k in 0..p.f as usize {
        let before = profile.dense_at(profile.lambda[k] as i64 - 1).to_vec();
        let after = profile.dense_at(profile.lambda[k + 1] as i64 - 1);
        let den = total_len(&before);
        let q = if den == 0 {
            Ratio::one()
        } else {
            Ratio::new(total_len(after), den)
        };
        let abnormal = !almost_sparse && (*q.numer() as f64) < p.theta * (*q.denom() as f64);
        let sub = p.block_len(profile.lambda[k]);

        let partition = if abnormal {
            None
        } else if almost_sparse {
            Some(Partition {
                sparse: vec![block],
                dense: Vec::new(),
            })
        } else if before == [block] {
            Some(Partition {
                sparse: Vec::new(),
                dense: vec![block],
            })
        } else {
            let mut d = Vec::new();
            for &(a, b) in &before {
                push_merge(&mut d, a, b - sub);
            }
            Some(Partition {
                sparse: complement(block, &d),
                dense: d,
            })
        };

        let abnormal_blocks = if almost_sparse {
            Vec::new()
        } else if abnormal {
            vec![block]
        } else {
            tick(total_len(&before) / sub)?;
            let mut flagged = Vec::new();
            for &(a, b) in &before {
                let mut s = a;
                while s < b {
                    if !dense(p, c.count(color, s, s + sub), sub) {
                        push_merge(&mut flagged, s, s + sub);
                    }
                    s += sub;
                }
            }
            flagged
        };

        profile.q.push(q);
        profile.abnormal.push(abnormal);
        profile.partitions.push(partition);
        profile.abnormal_blocks.push(abnormal_blocks);
    }
    Ok(profile)
}

type ProfileCache = HashMap<(usize, u64), DensityProfile>;

/// Whether the stage-`i` transition into the block starting at `next` lands
/// in an abnormal block.
fn flagged<C: ColorSource + ?Sized>(
    p: &ProcessParams,
    c: &C,
    levels: &[(u64, u64)],
    i: usize,
    start: u64,
    next: u64,
    cache: &mut ProfileCache,
    limits: &LabLimits,
) -> Result<bool> {
    let key = (i, start);
    if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(key) {
        let block = (start, start + p.block_len(levels[i].0));
        let prof = density_profile(p, c, block, levels[i], i as u32 + 1, limits)?;
        e.insert(prof);
    }
    let prof = &cache[&key];
    let k = prof.lambda_index(levels[i + 1].0).expect("next level lies on the λ grid");
    Ok(prof.is_abnormal_block(k, next))
}

fn abnormal_paths<C: ColorSource + ?Sized>(
    p: &ProcessParams,
    c: &C,
    levels: &[(u64, u64)],
    i: usize,
    start: u64,
    caches: &mut HashMap<Vec<(u64, u64)>, ProfileCache>,
    visited: &mut u64,
    limits: &LabLimits,
) -> Result<BigRational> {
    if i + 1 == p.n as usize {
        return Ok(BigRational::zero());
    }
    *visited += 1;
    if *visited > limits.max_blocks {
        return Err(Error::BudgetExceeded(format!(
            "abnormal-block evaluation exceeded {} blocks",
            limits.max_blocks
        )));
    }
    let len = p.block_len(levels[i].0);
    let b = p.block_len(levels[i + 1].0);
    let m = len / b;
    let mut total = BigRational::zero();
    for j in 1..m {
        let next = start + j * b;
        let cache = caches.entry(levels[..=i].to_vec()).or_default();
        if flagged(p, c, levels, i, start, next, cache, limits)? {
            total += BigRational::one();
        } else {
            total += abnormal_paths(p, c, levels, i + 1, next, caches, visited, limits)?;
        }
    }
    Ok(total / BigRational::from_integer(BigInt::from(m - 1)))
}

/// Probability that some stage of a run moves into a block flagged abnormal
/// in that stage's density profile; for `n = 2` this is exactly the final
/// block being abnormal.
pub fn abnormal_last_block_probability<C: ColorSource + Sync + ?Sized>(
    p: &ProcessParams,
    c: &C,
    mode: Mode,
    limits: &LabLimits,
) -> Result<Estimate> {
    p.check_coloring(c)?;
    match mode {
        Mode::Exact => {
            let seqs = level_sequences(p);
            let weight = BigRational::new(BigInt::one(), BigInt::from(p.f - 1).pow(p.n - 1));
            let mut visited = 0;
            let mut caches = HashMap::new();
            let mut total = BigRational::zero();
            for levels in &seqs {
                total += abnormal_paths(p, c, levels, 0, 0, &mut caches, &mut visited, limits)? * &weight;
            }
            Ok(Estimate::exact(total))
        }
        Mode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidInput("at least one sample required".into()));
            }
            // Surface budget and context errors before sampling.
            density_profile(p, c, (0, p.u), (0, p.levels), 1, limits)?;
            let caches = std::sync::Mutex::new(HashMap::<Vec<(u64, u64)>, ProfileCache>::new());
            let hits = monte_carlo(samples, seed, |rng| {
                let levels = sample_levels(p, rng);
                let mut block = (0, p.u);
                for i in 0..p.n as usize - 1 {
                    let b = p.block_len(levels[i + 1].0);
                    let x = rng.random_range(block.0..block.1 - b);
                    let next = (x / b + 1) * b;
                    let mut guard = caches.lock().expect("no panics while holding the cache");
                    let cache = guard.entry(levels[..=i].to_vec()).or_default();
                    if flagged(p, c, &levels, i, block.0, next, cache, limits).unwrap_or(false) {
                        return true;
                    }
                    block = (next, next + b);
                }
                false
            });
            Ok(Estimate::from_hits(hits, samples, seed))
        }
    }
}
