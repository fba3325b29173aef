//! Smallest all-encoding family of colorings for small `(u, n)`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::bounds::binomial;
use super::setcover::{exact_set_cover, CoverLimits};
use super::Coloring;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FamilyLimits {
    pub max_sequences: u64,
    pub max_columns: u64,
    pub max_nodes: u64,
    /// Enumerate all `nᵘ` colorings up to this count.
    pub full_enumeration_limit: u64,
}

impl Default for FamilyLimits {
    fn default() -> Self {
        Self {
            max_sequences: 10_000,
            max_columns: 1 << 21,
            max_nodes: 10_000_000,
            full_enumeration_limit: 1 << 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinFamily {
    pub u: u64,
    pub n: u32,
    /// The minimum family size `C`.
    pub size: usize,
    pub family: Vec<Coloring>,
    /// `binom(u, n)`.
    pub sequences: u64,
    /// `binom(u,n) / (u/n)ⁿ`.
    pub weak_bound: BigRational,
    /// Candidate colorings generated before dominance reduction.
    pub candidates: u64,
    pub nodes: u64,
}

/// Colex rank of a strictly increasing sequence.
fn colex_rank(seq: &[u64], table: &[Vec<u64>]) -> usize {
    seq.iter().enumerate().map(|(i, &x)| table[x as usize][i + 1]).sum::<u64>() as usize
}

fn binomial_table(u: u64, n: u32) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; n as usize + 1]; u as usize + 1];
    for (x, row) in t.iter_mut().enumerate() {
        row[0] = 1;
        for k in 1..=n as usize {
            row[k] = binomial(x as u64, k as u64).to_u64().unwrap_or(u64::MAX);
        }
    }
    t
}

/// Bitset of the sequences encoded by `colors`.
fn coverage(colors: &[u32], n: u32, table: &[Vec<u64>], words: usize) -> Vec<u64> {
    let mut bits = vec![0u64; words];
    let mut seq = Vec::with_capacity(n as usize);
    fn walk(colors: &[u32], n: u32, start: usize, seq: &mut Vec<u64>, table: &[Vec<u64>], bits: &mut [u64]) {
        let want = seq.len() as u32 + 1;
        if want > n {
            let r = colex_rank(seq, table);
            bits[r / 64] |= 1 << (r % 64);
            return;
        }
        for x in start..colors.len() {
            if colors[x] == want {
                seq.push(x as u64);
                walk(colors, n, x + 1, seq, table, bits);
                seq.pop();
            }
        }
    }
    walk(colors, n, 0, &mut seq, table, &mut bits);
    bits
}

/// Whether every position of `colors` lies in some sequence it encodes.
fn all_live(colors: &[u32], n: u32) -> bool {
    // Scanning from the right, color j is live iff j + 1 was seen later.
    let mut min_seen = n + 1;
    for &c in colors.iter().rev() {
        if c != n && c + 1 < min_seen {
            return false;
        }
        min_seen = min_seen.min(c);
    }
    true
}

/// Candidate colorings: all `nᵘ` when that is at most the limit, otherwise
/// only those in which every position is live.
///
/// A dead position can always be recolored to become live without losing an
/// encoded sequence, so the live colorings cover every maximal coverage.
/// Left-liveness is the restricted-growth rule: color `j` may appear only
/// after color `j − 1`.
fn candidates(u: u64, n: u32, limits: &FamilyLimits) -> Result<Vec<Vec<u32>>> {
    let too_many = || {
        Error::InstanceTooLarge(format!(
            "more than {} candidate colorings for u = {u}, n = {n}",
            limits.max_columns
        ))
    };
    let full = u64::from(n).checked_pow(u as u32);
    let mut out = Vec::new();
    if let Some(total) = full.filter(|&c| c <= limits.full_enumeration_limit) {
        if total > limits.max_columns {
            return Err(too_many());
        }
        let mut cur = vec![1u32; u as usize];
        loop {
            out.push(cur.clone());
            // Odometer increment, last position fastest.
            let mut k = cur.len();
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                if cur[k] < n {
                    cur[k] += 1;
                    break;
                }
                cur[k] = 1;
            }
        }
    }
    fn grow(cur: &mut Vec<u32>, u: usize, n: u32, max_seen: u32, out: &mut Vec<Vec<u32>>, cap: u64, visited: &mut u64) -> bool {
        *visited += 1;
        if *visited > cap {
            return false;
        }
        if cur.len() == u {
            if max_seen == n && all_live(cur, n) {
                out.push(cur.clone());
            }
            return true;
        }
        // The remaining positions must still be able to reach color n.
        if n - max_seen > (u - cur.len()) as u32 {
            return true;
        }
        for c in 1..=(max_seen + 1).min(n) {
            cur.push(c);
            let ok = grow(cur, u, n, max_seen.max(c), out, cap, visited);
            cur.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    let mut visited = 0;
    let cap = limits.max_columns.saturating_mul(u.max(1));
    if !grow(&mut Vec::with_capacity(u as usize), u as usize, n, 0, &mut out, cap, &mut visited)
        || out.len() as u64 > limits.max_columns
    {
        return Err(too_many());
    }
    Ok(out)
}

/// Exact minimum number of colorings of `[0..u)` with `n` colors such that
/// every increasing length-`n` sequence is encoded by at least one of them.
pub fn min_family_size(u: u64, n: u32, limits: FamilyLimits) -> Result<MinFamily> {
    if n == 0 || u64::from(n) > u {
        return Err(Error::InvalidInput(format!("need 1 ≤ n ≤ u, got u = {u}, n = {n}")));
    }
    let total = binomial(u, u64::from(n));
    if total > BigUint::from(limits.max_sequences) {
        return Err(Error::InstanceTooLarge(format!(
            "binom({u},{n}) = {total} exceeds {} sequences",
            limits.max_sequences
        )));
    }
    let sequences = total.to_u64().expect("bounded above");
    let weak_bound = BigRational::new(
        (total * BigUint::from(n).pow(n)).into(),
        BigUint::from(u).pow(n).into(),
    );
    let table = binomial_table(u, n);
    let words = (sequences as usize).div_ceil(64);
    let cands = candidates(u, n, &limits)?;
    let sets: Vec<Vec<u64>> = cands.iter().map(|c| coverage(c, n, &table, words)).collect();
    let sol = exact_set_cover(
        sequences as usize,
        &sets,
        CoverLimits {
            max_nodes: limits.max_nodes,
        },
    )?;
    let family = sol
        .chosen
        .iter()
        .map(|&i| Coloring::new(cands[i].clone(), n))
        .collect::<Result<Vec<_>>>()?;
    Ok(MinFamily {
        u,
        n,
        size: family.len(),
        family,
        sequences,
        weak_bound,
        candidates: cands.len() as u64,
        nodes: sol.nodes,
    })
}
