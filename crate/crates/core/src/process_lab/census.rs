//! Exact distribution of the stage-`i` block.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use super::{ser_big_ratio, LabLimits, ProcessParams};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Census {
    pub stage: u32,
    pub level: u64,
    /// The stage intervals forced by `ℓᵢ = level`.
    pub levels: Vec<(u64, u64)>,
    /// Level-`level` blocks of `[0..u)`.
    pub total_blocks: u64,
    pub reachable: u64,
    pub unreachable_fraction: f64,
    /// All reachable blocks have the same probability.
    pub uniform: bool,
    /// The common reach probability when uniform.
    #[serde(serialize_with = "ser_big_ratio")]
    pub reach_probability: Option<BigRational>,
    /// Reach probability of every block, conditioned on `ℓᵢ = level`.
    #[serde(skip)]
    pub probabilities: Vec<BigRational>,
}

/// Stage intervals `[ℓ₁..ℓ'₁), …, [ℓᵢ..ℓ'ᵢ)` with `ℓᵢ = level`; the prefix is
/// unique because each `ℓⱼ` is a multiple of the stage-`j` step.
fn forced_levels(p: &ProcessParams, stage: u32, level: u64) -> Result<Vec<(u64, u64)>> {
    let bad = || Error::InvalidInput(format!("level {level} is not a possible stage-{stage} level"));
    if stage == 0 || stage > p.n {
        return Err(Error::InvalidInput(format!("stage {stage} outside [1..{}]", p.n)));
    }
    let mut out = vec![(0, p.levels)];
    for _ in 1..stage {
        let cur = *out.last().unwrap();
        let step = (cur.1 - cur.0) / p.f;
        let k = level.checked_sub(cur.0).ok_or_else(bad)? / step;
        if k == 0 || k >= p.f {
            return Err(bad());
        }
        out.push((cur.0 + k * step, cur.0 + (k + 1) * step));
    }
    if out.last().unwrap().0 != level {
        return Err(bad());
    }
    Ok(out)
}

/// Every `(stage, level)` pair that some run visits.
pub fn census_points(p: &ProcessParams) -> Vec<(u32, u64)> {
    let mut out = vec![(1, 0)];
    let mut frontier = vec![(0, p.levels)];
    for stage in 2..=p.n {
        let mut next = Vec::new();
        for (a, b) in frontier {
            let step = (b - a) / p.f;
            for k in 1..p.f {
                next.push((a + k * step, a + (k + 1) * step));
                out.push((stage, a + k * step));
            }
        }
        frontier = next;
    }
    out
}

/// Exact probability that the stage-`stage` block is each level-`level`
/// block, given `ℓ_stage = level`.
pub fn reachability_census(p: &ProcessParams, stage: u32, level: u64, limits: &LabLimits) -> Result<Census> {
    let levels = forced_levels(p, stage, level)?;
    let total_blocks = p.u / p.block_len(level);
    if total_blocks > limits.max_blocks {
        return Err(Error::BudgetExceeded(format!(
            "{total_blocks} level-{level} blocks exceed {} (use Monte Carlo)",
            limits.max_blocks
        )));
    }
    // Sparse distribution: (block index at the current level, probability).
    let mut dist: Vec<(u64, BigRational)> = vec![(0, BigRational::one())];
    for w in levels.windows(2) {
        let m = p.block_len(w[0].0) / p.block_len(w[1].0);
        let share = BigRational::new(BigInt::one(), BigInt::from(m - 1));
        let mut next = Vec::with_capacity(dist.len() * (m as usize - 1));
        for (idx, prob) in &dist {
            let child = prob * &share;
            for j in 1..m {
                next.push((idx * m + j, child.clone()));
            }
        }
        dist = next;
    }
    let mut probabilities = vec![BigRational::zero(); total_blocks as usize];
    for (idx, prob) in &dist {
        probabilities[*idx as usize] = prob.clone();
    }
    let reachable = dist.len() as u64;
    let uniform = dist.windows(2).all(|w| w[0].1 == w[1].1);
    Ok(Census {
        stage,
        level,
        levels,
        total_blocks,
        reachable,
        unreachable_fraction: (total_blocks - reachable) as f64 / total_blocks as f64,
        uniform,
        reach_probability: uniform.then(|| dist[0].1.clone()),
        probabilities,
    })
}
