//! A hierarchical random process generating increasing sequences.
//!
//! The universe `[0..u)`, `u = f^L · lastlen`, is cut into aligned blocks:
//! level `ℓ` blocks have length `u / f^ℓ`. A run first picks nested level
//! intervals `[ℓᵢ..ℓ'ᵢ)` (each stage splits the previous interval into `f`
//! parts and picks any but the first), then walks down nested blocks: `xᵢ` is
//! uniform on the block minus its last level-`ℓᵢ₊₁` sub-block, and the next
//! block is the level-`ℓᵢ₊₁` block right after the one containing `xᵢ`.

mod census;
mod density;

pub use census::{census_points, reachability_census, Census};
pub use density::{
    abnormal_last_block_probability, abnormal_level_cap, density_profile, DensityProfile, IntervalList, Partition,
};

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::coloring_lab::{encodes_unchecked, ColorSource, Coloring};
use crate::error::{Error, Result};

/// Largest admissible universe.
pub const MAX_UNIVERSE: u64 = 1 << 62;

/// Samples per independent RNG stream in Monte Carlo runs.
const CHUNK: u64 = 4096;

/// z-value of a two-sided 99% normal interval.
pub const Z_99: f64 = 2.575_829_303_548_901;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProcessParams {
    pub n: u32,
    pub f: u64,
    /// `L = f^(n−1)`.
    pub levels: u64,
    pub lastlen: u64,
    /// `u = f^L · lastlen`.
    pub u: u64,
    /// A block is dense for a color when that color's fraction is at least `τ`.
    #[serde(serialize_with = "ser_ratio")]
    pub tau: Ratio<u64>,
    /// Almost-sparse slack.
    pub sigma: f64,
    /// Levels with `q < θ` are abnormal.
    pub theta: f64,
}

fn ser_ratio<S: Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

pub(crate) fn ser_big_ratio<S: Serializer>(r: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&r.to_string()),
        None => s.serialize_none(),
    }
}

/// Process parameters with the default thresholds `τ = 2/n`,
/// `σ = 2^(−n/8)` and `θ = 1 − f^(−1/4)`.
pub fn make_params(n: u32, f: u64, lastlen: u64) -> Result<ProcessParams> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("n = {n} must be at least 2")));
    }
    if f < 2 {
        return Err(Error::InvalidInput(format!("fanout f = {f} must be at least 2")));
    }
    if lastlen == 0 {
        return Err(Error::InvalidInput("lastlen must be positive".into()));
    }
    let too_big = || Error::BudgetExceeded(format!("universe f^(f^(n−1))·lastlen for n={n}, f={f} exceeds 2^62"));
    let levels = f.checked_pow(n - 1).filter(|&l| l < 64).ok_or_else(too_big)?;
    let u = f
        .checked_pow(levels as u32)
        .and_then(|v| v.checked_mul(lastlen))
        .filter(|&v| v <= MAX_UNIVERSE)
        .ok_or_else(too_big)?;
    Ok(ProcessParams {
        n,
        f,
        levels,
        lastlen,
        u,
        tau: Ratio::new(2, u64::from(n)),
        sigma: 2f64.powf(-f64::from(n) / 8.0),
        theta: 1.0 - (f as f64).powf(-0.25),
    })
}

impl ProcessParams {
    pub fn with_thresholds(mut self, tau: Ratio<u64>, sigma: f64, theta: f64) -> Result<Self> {
        if *tau.denom() == 0 || tau > Ratio::from_integer(1) || !(0.0..=1.0).contains(&sigma) || !(0.0..=1.0).contains(&theta)
        {
            return Err(Error::InvalidInput("thresholds must lie in [0, 1]".into()));
        }
        self.tau = tau;
        self.sigma = sigma;
        self.theta = theta;
        Ok(self)
    }

    /// Length of a level-`level` block.
    pub fn block_len(&self, level: u64) -> u64 {
        debug_assert!(level <= self.levels);
        self.f.pow((self.levels - level) as u32) * self.lastlen
    }

    /// Length of the stage-`stage` level interval (stages start at 1).
    pub fn interval_len(&self, stage: u32) -> u64 {
        self.levels / self.f.pow(stage - 1)
    }

    fn check_coloring<C: ColorSource + ?Sized>(&self, c: &C) -> Result<()> {
        if c.universe() != self.u || c.colors() != self.n {
            return Err(Error::InvalidInput(format!(
                "coloring over [0..{}) with {} colors does not match u = {}, n = {}",
                c.universe(),
                c.colors(),
                self.u,
                self.n
            )));
        }
        Ok(())
    }
}

/// One run of the process.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ProcessTrace {
    /// `[ℓᵢ..ℓ'ᵢ)` for each stage.
    pub levels: Vec<(u64, u64)>,
    /// `[bᵢ..b'ᵢ)` for each stage.
    pub blocks: Vec<(u64, u64)>,
    pub xs: Vec<u64>,
    /// Number of equally likely options at every random choice.
    pub choices: Vec<u64>,
}

impl ProcessTrace {
    /// Exact probability of this run.
    pub fn probability(&self) -> BigRational {
        let den = self.choices.iter().fold(BigUint::one(), |acc, &c| acc * BigUint::from(c));
        BigRational::new(BigInt::one(), den.into())
    }
}

/// Stage intervals `[ℓᵢ..ℓ'ᵢ)`, `i = 1..n`.
pub fn sample_levels<R: Rng + ?Sized>(p: &ProcessParams, rng: &mut R) -> Vec<(u64, u64)> {
    let mut out = Vec::with_capacity(p.n as usize);
    let mut cur = (0, p.levels);
    out.push(cur);
    for _ in 1..p.n {
        let step = (cur.1 - cur.0) / p.f;
        let k = rng.random_range(1..p.f);
        cur = (cur.0 + k * step, cur.0 + (k + 1) * step);
        out.push(cur);
    }
    out
}

fn check_levels(p: &ProcessParams, levels: &[(u64, u64)]) -> Result<()> {
    let bad = || Error::InvalidInput("level intervals do not follow the stage splits".into());
    if levels.len() != p.n as usize || levels[0] != (0, p.levels) {
        return Err(bad());
    }
    for w in levels.windows(2) {
        let step = (w[0].1 - w[0].0) / p.f;
        let off = w[1].0.checked_sub(w[0].0).ok_or_else(bad)?;
        if step == 0 || off % step != 0 || off == 0 || off >= w[0].1 - w[0].0 || w[1].1 - w[1].0 != step {
            return Err(bad());
        }
    }
    Ok(())
}

/// Elements and blocks for fixed stage intervals.
pub fn sample_elements<R: Rng + ?Sized>(p: &ProcessParams, levels: &[(u64, u64)], rng: &mut R) -> Result<ProcessTrace> {
    check_levels(p, levels)?;
    let n = p.n as usize;
    let mut trace = ProcessTrace {
        levels: levels.to_vec(),
        blocks: Vec::with_capacity(n),
        xs: Vec::with_capacity(n),
        choices: vec![p.f - 1; n - 1],
    };
    let mut block = (0, p.u);
    for i in 0..n {
        trace.blocks.push(block);
        if i + 1 == n {
            trace.xs.push(rng.random_range(block.0..block.1));
            trace.choices.push(block.1 - block.0);
        } else {
            let b = p.block_len(levels[i + 1].0);
            let x = rng.random_range(block.0..block.1 - b);
            trace.xs.push(x);
            trace.choices.push(block.1 - b - block.0);
            let k = x / b + 1;
            block = (k * b, (k + 1) * b);
        }
    }
    Ok(trace)
}

/// A full run: levels then elements.
pub fn sample_trace<R: Rng + ?Sized>(p: &ProcessParams, rng: &mut R) -> ProcessTrace {
    let levels = sample_levels(p, rng);
    sample_elements(p, &levels, rng).expect("sampled levels are well formed")
}

/// Every stage-interval sequence, in lexicographic order of split choices.
pub fn level_sequences(p: &ProcessParams) -> Vec<Vec<(u64, u64)>> {
    let mut out = Vec::new();
    let mut cur = vec![(0, p.levels)];
    fn rec(p: &ProcessParams, cur: &mut Vec<(u64, u64)>, out: &mut Vec<Vec<(u64, u64)>>) {
        if cur.len() == p.n as usize {
            out.push(cur.clone());
            return;
        }
        let last = *cur.last().unwrap();
        let step = (last.1 - last.0) / p.f;
        for k in 1..p.f {
            cur.push((last.0 + k * step, last.0 + (k + 1) * step));
            rec(p, cur, out);
            cur.pop();
        }
    }
    rec(p, &mut cur, &mut out);
    out
}

/// Number of outcomes with the given stage intervals.
fn outcomes_for(p: &ProcessParams, levels: &[(u64, u64)]) -> BigUint {
    let mut count = BigUint::one();
    for i in 0..p.n as usize {
        let len = p.block_len(levels[i].0);
        let range = if i + 1 == p.n as usize {
            len
        } else {
            len - p.block_len(levels[i + 1].0)
        };
        count *= BigUint::from(range);
    }
    count
}

/// Total number of distinct runs.
pub fn outcome_count(p: &ProcessParams) -> BigUint {
    level_sequences(p).iter().map(|l| outcomes_for(p, l)).sum()
}

/// Budgets for exact computations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LabLimits {
    pub max_outcomes: u64,
    /// Blocks visited by dynamic programs and density scans.
    pub max_blocks: u64,
}

impl Default for LabLimits {
    fn default() -> Self {
        Self {
            max_outcomes: 10_000_000,
            max_blocks: 1 << 22,
        }
    }
}

/// Runs sharing all choices except `xₙ`, which ranges over `last`.
pub struct OutcomeBatch<'a> {
    /// Index of the stage-interval sequence in [`level_sequences`] order.
    pub class: usize,
    /// A trace whose final element is `last.0`.
    pub trace: &'a ProcessTrace,
    pub last: (u64, u64),
    /// Probability of each single run in the batch.
    pub probability: &'a BigRational,
}

/// Visits every run, grouped by all choices but the last element. Batches
/// come in a fixed order. The run count is checked against
/// `limits.max_outcomes` first.
pub fn for_each_outcome_batch<F: FnMut(&OutcomeBatch<'_>)>(p: &ProcessParams, limits: &LabLimits, mut visit: F) -> Result<()> {
    let total = outcome_count(p);
    if total > BigUint::from(limits.max_outcomes) {
        return Err(Error::BudgetExceeded(format!(
            "{total} outcomes exceed the budget of {}; use Monte Carlo",
            limits.max_outcomes
        )));
    }
    for_each_batch_unbounded(p, &mut visit);
    Ok(())
}

fn for_each_batch_unbounded<F: FnMut(&OutcomeBatch<'_>)>(p: &ProcessParams, visit: &mut F) {
    let n = p.n as usize;
    let level_weight = BigUint::from(p.f - 1).pow(p.n - 1);
    for (class, levels) in level_sequences(p).into_iter().enumerate() {
        let probability = BigRational::new(
            BigInt::one(),
            (outcomes_for(p, &levels) * &level_weight).into(),
        );
        let mut trace = ProcessTrace {
            levels: levels.clone(),
            blocks: vec![(0, 0); n],
            xs: vec![0; n],
            choices: vec![p.f - 1; n - 1],
        };
        for i in 0..n {
            let len = p.block_len(levels[i].0);
            trace.choices.push(if i + 1 == n {
                len
            } else {
                len - p.block_len(levels[i + 1].0)
            });
        }
        fn walk<F: FnMut(&OutcomeBatch<'_>)>(
            p: &ProcessParams,
            i: usize,
            block: (u64, u64),
            trace: &mut ProcessTrace,
            class: usize,
            probability: &BigRational,
            visit: &mut F,
        ) {
            let n = p.n as usize;
            trace.blocks[i] = block;
            if i + 1 == n {
                trace.xs[i] = block.0;
                visit(&OutcomeBatch {
                    class,
                    trace,
                    last: block,
                    probability,
                });
                return;
            }
            let b = p.block_len(trace.levels[i + 1].0);
            for x in block.0..block.1 - b {
                trace.xs[i] = x;
                let k = x / b + 1;
                walk(p, i + 1, (k * b, (k + 1) * b), trace, class, probability, visit);
            }
        }
        walk(p, 0, (0, p.u), &mut trace, class, &probability, visit);
    }
}

/// Visits every single run with its exact probability, in a fixed order.
pub fn for_each_outcome<F: FnMut(&ProcessTrace, &BigRational)>(p: &ProcessParams, limits: &LabLimits, mut visit: F) -> Result<()> {
    let n = p.n as usize;
    let mut scratch: Option<ProcessTrace> = None;
    for_each_outcome_batch(p, limits, |batch| {
        let t = scratch.get_or_insert_with(|| batch.trace.clone());
        t.clone_from(batch.trace);
        for x in batch.last.0..batch.last.1 {
            t.xs[n - 1] = x;
            visit(t, batch.probability);
        }
    })
}

/// All runs with their probabilities.
pub fn enumerate_outcomes(p: &ProcessParams, limits: &LabLimits) -> Result<Vec<(ProcessTrace, BigRational)>> {
    let mut out = Vec::new();
    for_each_outcome(p, limits, |t, pr| out.push((t.clone(), pr.clone())))?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    MonteCarlo { samples: u64, seed: u64 },
}

/// A probability, exact or estimated.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    #[serde(serialize_with = "ser_big_ratio")]
    pub exact: Option<BigRational>,
    pub value: f64,
    pub std_error: f64,
    /// Half-width of the 99% normal confidence interval.
    pub half_width_99: f64,
    pub samples: u64,
    pub seed: Option<u64>,
}

impl Estimate {
    pub(crate) fn exact(value: BigRational) -> Self {
        Self {
            value: value.to_f64().unwrap_or(f64::NAN),
            exact: Some(value),
            std_error: 0.0,
            half_width_99: 0.0,
            samples: 0,
            seed: None,
        }
    }

    pub(crate) fn from_hits(hits: u64, samples: u64, seed: u64) -> Self {
        let value = hits as f64 / samples as f64;
        let std_error = (value * (1.0 - value) / samples as f64).sqrt();
        Self {
            exact: None,
            value,
            std_error,
            half_width_99: Z_99 * std_error,
            samples,
            seed: Some(seed),
        }
    }
}

/// Random stream for chunk `chunk` of a seeded experiment.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Counts runs satisfying `hit`; chunks run in parallel on disjoint streams,
/// so the result depends only on `(samples, seed)`.
pub(crate) fn monte_carlo<H>(samples: u64, seed: u64, hit: H) -> u64
where
    H: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let len = CHUNK.min(samples - c * CHUNK);
            (0..len).filter(|_| hit(&mut rng)).count() as u64
        })
        .sum()
}

/// Number of element paths from stage `i` in `block` that `c` encodes.
fn encoding_paths<C: ColorSource + ?Sized>(
    p: &ProcessParams,
    c: &C,
    levels: &[(u64, u64)],
    i: usize,
    start: u64,
    visited: &mut u64,
    limit: u64,
) -> Result<BigUint> {
    *visited += 1;
    if *visited > limit {
        return Err(Error::BudgetExceeded(format!("exact evaluation exceeded {limit} blocks")));
    }
    let n = p.n as usize;
    let len = p.block_len(levels[i].0);
    let color = i as u32 + 1;
    if i + 1 == n {
        return Ok(BigUint::from(c.count(color, start, start + len)));
    }
    let b = p.block_len(levels[i + 1].0);
    let mut total = BigUint::zero();
    for j in 0..len / b - 1 {
        let hits = c.count(color, start + j * b, start + (j + 1) * b);
        if hits > 0 {
            total += encoding_paths(p, c, levels, i + 1, start + (j + 1) * b, visited, limit)? * BigUint::from(hits);
        }
    }
    Ok(total)
}

/// Exact probability that the process output is encoded by `c`.
pub fn encoding_probability_exact<C: ColorSource + ?Sized>(p: &ProcessParams, c: &C, limits: &LabLimits) -> Result<BigRational> {
    p.check_coloring(c)?;
    let level_weight = BigUint::from(p.f - 1).pow(p.n - 1);
    let mut visited = 0;
    let mut total = BigRational::zero();
    for levels in level_sequences(p) {
        let paths = encoding_paths(p, c, &levels, 0, 0, &mut visited, limits.max_blocks)?;
        let den = outcomes_for(p, &levels) * &level_weight;
        total += BigRational::new(paths.into(), den.into());
    }
    Ok(total)
}

/// Samples one run, stopping at the first element with the wrong color.
fn sample_encodes<C: ColorSource + ?Sized, R: Rng + ?Sized>(p: &ProcessParams, c: &C, rng: &mut R) -> bool {
    let levels = sample_levels(p, rng);
    let n = p.n as usize;
    let mut block = (0, p.u);
    for (i, _) in levels.iter().enumerate() {
        let color = i as u32 + 1;
        if i + 1 == n {
            return c.color(rng.random_range(block.0..block.1)) == color;
        }
        let b = p.block_len(levels[i + 1].0);
        let x = rng.random_range(block.0..block.1 - b);
        if c.color(x) != color {
            return false;
        }
        let k = x / b + 1;
        block = (k * b, (k + 1) * b);
    }
    unreachable!("the last stage returns")
}

/// Probability that the generated sequence is encoded by `c`.
pub fn encoding_probability<C: ColorSource + Sync + ?Sized>(
    p: &ProcessParams,
    c: &C,
    mode: Mode,
    limits: &LabLimits,
) -> Result<Estimate> {
    p.check_coloring(c)?;
    match mode {
        Mode::Exact => encoding_probability_exact(p, c, limits).map(Estimate::exact),
        Mode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidInput("at least one sample required".into()));
            }
            let hits = monte_carlo(samples, seed, |rng| sample_encodes(p, c, rng));
            Ok(Estimate::from_hits(hits, samples, seed))
        }
    }
}

fn composed_blocks(u_total: u64, n_total: u32, p: &ProcessParams) -> Result<(u32, u64)> {
    if n_total == 0 || !n_total.is_multiple_of(p.n) {
        return Err(Error::InvalidInput(format!("n_total = {n_total} is not a multiple of n = {}", p.n)));
    }
    let blocks = n_total / p.n;
    let block_len = u_total / u64::from(blocks);
    if block_len < p.u {
        return Err(Error::InvalidInput(format!(
            "u_total = {u_total} leaves blocks of {block_len} < u = {}",
            p.u
        )));
    }
    Ok((blocks, block_len))
}

/// Runs the process independently in each of `n_total / n` equal blocks of
/// `[0..u_total)` and concatenates the shifted outputs.
pub fn composed_process<R: Rng + ?Sized>(u_total: u64, n_total: u32, p: &ProcessParams, rng: &mut R) -> Result<Vec<u64>> {
    let (blocks, block_len) = composed_blocks(u_total, n_total, p)?;
    let mut out = Vec::with_capacity(n_total as usize);
    for j in 0..u64::from(blocks) {
        out.extend(sample_trace(p, rng).xs.iter().map(|&x| j * block_len + x));
    }
    Ok(out)
}

/// Exact encoding probability of the composed process, by enumerating every
/// combination of per-block runs.
pub fn composed_encoding_probability_exact<C: ColorSource + ?Sized>(
    u_total: u64,
    n_total: u32,
    p: &ProcessParams,
    c: &C,
    limits: &LabLimits,
) -> Result<BigRational> {
    let (blocks, block_len) = composed_blocks(u_total, n_total, p)?;
    if c.universe() != u_total || c.colors() != n_total {
        return Err(Error::InvalidInput("coloring does not match the composed universe".into()));
    }
    let inner = enumerate_outcomes(p, limits)?;
    let combos = (inner.len() as u64).checked_pow(blocks);
    if combos.is_none_or(|k| k > limits.max_outcomes) {
        return Err(Error::BudgetExceeded("too many combined outcomes".into()));
    }
    let mut seq = Vec::with_capacity(n_total as usize);
    let mut total = BigRational::zero();
    fn rec<C: ColorSource + ?Sized>(
        j: u64,
        blocks: u64,
        block_len: u64,
        inner: &[(ProcessTrace, BigRational)],
        c: &C,
        seq: &mut Vec<u64>,
        weight: &BigRational,
        total: &mut BigRational,
    ) {
        if j == blocks {
            if encodes_unchecked(c, seq) {
                *total += weight;
            }
            return;
        }
        for (t, pr) in inner {
            let mark = seq.len();
            seq.extend(t.xs.iter().map(|&x| j * block_len + x));
            rec(j + 1, blocks, block_len, inner, c, seq, &(weight * pr), total);
            seq.truncate(mark);
        }
    }
    rec(0, u64::from(blocks), block_len, &inner, c, &mut seq, &BigRational::one(), &mut total);
    Ok(total)
}

/// Block `j`'s part of a block-respecting coloring, as an `n`-coloring of
/// `[0..u)`.
pub fn block_restriction<C: ColorSource + ?Sized>(c: &C, p: &ProcessParams, n_total: u32, j: u32) -> Result<Coloring> {
    let (_, block_len) = composed_blocks(c.universe(), n_total, p)?;
    let base = u64::from(j) * block_len;
    let shift = j * p.n;
    let colors = (base..base + p.u)
        .map(|x| {
            let col = c.color(x);
            if col <= shift || col > shift + p.n {
                Err(Error::InvalidInput(format!("color {col} at {x} does not belong to block {j}")))
            } else {
                Ok(col - shift)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Coloring::new(colors, p.n)
}
