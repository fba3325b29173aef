//! Exact minimum set cover by branch and bound.
//!
//! Sets are bitsets over `[0..elements)`. Duplicate and dominated sets are
//! dropped first, a greedy cover seeds the incumbent, and the search always
//! branches on the uncovered element contained in the fewest sets.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoverLimits {
    pub max_nodes: u64,
}

impl Default for CoverLimits {
    fn default() -> Self {
        Self { max_nodes: 10_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoverSolution {
    /// Indices into the input sets, ascending.
    pub chosen: Vec<usize>,
    pub nodes: u64,
}

type Bits = Vec<u64>;

fn words_for(elements: usize) -> usize {
    elements.div_ceil(64)
}

fn popcount(a: &[u64]) -> u32 {
    a.iter().map(|w| w.count_ones()).sum()
}

fn gain(set: &[u64], covered: &[u64]) -> u32 {
    set.iter().zip(covered).map(|(s, c)| (s & !c).count_ones()).sum()
}

fn is_subset(a: &[u64], b: &[u64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// Indices of sets not strictly dominated by, or equal to an earlier, other set.
fn undominated(sets: &[Bits]) -> Vec<usize> {
    let mut seen = std::collections::HashSet::new();
    let mut order: Vec<usize> = (0..sets.len()).filter(|&i| seen.insert(&sets[i])).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(popcount(&sets[i])), i));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if popcount(&sets[i]) == 0 {
            continue;
        }
        if !kept.iter().any(|&k| is_subset(&sets[i], &sets[k])) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

struct Search<'a> {
    sets: Vec<&'a [u64]>,
    ids: Vec<usize>,
    containing: Vec<Vec<usize>>,
    elements: usize,
    best: Vec<usize>,
    stack: Vec<usize>,
    nodes: u64,
    max_nodes: u64,
}

impl Search<'_> {
    fn greedy(&self) -> Vec<usize> {
        let mut covered = vec![0u64; words_for(self.elements)];
        let mut chosen = Vec::new();
        while (popcount(&covered) as usize) < self.elements {
            let (best, _) = (0..self.sets.len())
                .map(|s| (s, gain(self.sets[s], &covered)))
                .max_by_key(|&(s, g)| (g, std::cmp::Reverse(s)))
                .expect("at least one set");
            for (c, w) in covered.iter_mut().zip(self.sets[best]) {
                *c |= w;
            }
            chosen.push(best);
        }
        chosen
    }

    /// Size of a greedy family of uncovered elements no two of which share a
    /// set; each of them needs its own set.
    fn packing_bound(&self, covered: &[u64]) -> usize {
        let mut used = vec![false; self.sets.len()];
        let mut order: Vec<usize> = (0..self.elements)
            .filter(|&e| covered[e / 64] >> (e % 64) & 1 == 0)
            .collect();
        order.sort_by_key(|&e| (self.containing[e].len(), e));
        let mut count = 0;
        for e in order {
            if self.containing[e].iter().all(|&s| !used[s]) {
                for &s in &self.containing[e] {
                    used[s] = true;
                }
                count += 1;
            }
        }
        count
    }

    fn run(&mut self, covered: &mut Bits, remaining: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            return Err(Error::BudgetExceeded(format!(
                "set cover search exceeded {} nodes",
                self.max_nodes
            )));
        }
        if remaining == 0 {
            if self.stack.len() < self.best.len() {
                self.best = self.stack.clone();
            }
            return Ok(());
        }
        if self.stack.len() + 1 >= self.best.len() {
            return Ok(());
        }
        let max_gain = self.sets.iter().map(|s| gain(s, covered)).max().unwrap_or(0) as usize;
        if max_gain == 0 || self.stack.len() + remaining.div_ceil(max_gain) >= self.best.len() {
            return Ok(());
        }
        if self.stack.len() + self.packing_bound(covered) >= self.best.len() {
            return Ok(());
        }
        let pivot = (0..self.elements)
            .filter(|&e| covered[e / 64] >> (e % 64) & 1 == 0)
            .min_by_key(|&e| (self.containing[e].len(), e))
            .expect("an uncovered element exists");
        let mut branches: Vec<(usize, usize)> = self.containing[pivot]
            .iter()
            .map(|&s| (s, gain(self.sets[s], covered) as usize))
            .collect();
        branches.sort_by_key(|&(s, g)| (std::cmp::Reverse(g), s));
        for (s, g) in branches {
            let saved = covered.clone();
            for (c, w) in covered.iter_mut().zip(self.sets[s]) {
                *c |= w;
            }
            self.stack.push(s);
            self.run(covered, remaining - g)?;
            self.stack.pop();
            *covered = saved;
            if self.stack.len() + 1 >= self.best.len() {
                break;
            }
        }
        Ok(())
    }
}

/// Minimum number of `sets` whose union is `[0..elements)`.
///
/// Each set is a bitset of `⌈elements/64⌉` words. Among optimal covers, the
/// first one found in deterministic search order is returned.
pub fn exact_set_cover(elements: usize, sets: &[Bits], limits: CoverLimits) -> Result<CoverSolution> {
    let words = words_for(elements);
    if let Some(bad) = sets.iter().position(|s| s.len() != words) {
        return Err(Error::InvalidInput(format!("set {bad} has the wrong word count")));
    }
    if elements == 0 {
        return Ok(CoverSolution {
            chosen: Vec::new(),
            nodes: 0,
        });
    }
    let ids = undominated(sets);
    let kept: Vec<&[u64]> = ids.iter().map(|&i| sets[i].as_slice()).collect();
    let mut containing = vec![Vec::new(); elements];
    for (s, bits) in kept.iter().enumerate() {
        for (e, list) in containing.iter_mut().enumerate() {
            if bits[e / 64] >> (e % 64) & 1 == 1 {
                list.push(s);
            }
        }
    }
    if let Some(e) = containing.iter().position(Vec::is_empty) {
        return Err(Error::InvalidInput(format!("element {e} is in no set")));
    }
    let mut search = Search {
        sets: kept,
        ids,
        containing,
        elements,
        best: Vec::new(),
        stack: Vec::new(),
        nodes: 0,
        max_nodes: limits.max_nodes,
    };
    search.best = search.greedy();
    let mut covered = vec![0u64; words];
    search.run(&mut covered, elements)?;
    let mut chosen: Vec<usize> = search.best.iter().map(|&s| search.ids[s]).collect();
    chosen.sort_unstable();
    Ok(CoverSolution {
        chosen,
        nodes: search.nodes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(elements: usize, members: &[usize]) -> Bits {
        let mut b = vec![0u64; words_for(elements)];
        for &m in members {
            b[m / 64] |= 1 << (m % 64);
        }
        b
    }

    /// Smallest cover by trying every subset of sets.
    fn brute_force(elements: usize, sets: &[Bits]) -> usize {
        let full = bits(elements, &(0..elements).collect::<Vec<_>>());
        (0u32..1 << sets.len())
            .filter(|mask| {
                let mut acc = vec![0u64; full.len()];
                for (i, s) in sets.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        for (a, w) in acc.iter_mut().zip(s) {
                            *a |= w;
                        }
                    }
                }
                acc == full
            })
            .map(u32::count_ones)
            .min()
            .unwrap() as usize
    }

    #[test]
    fn greedy_is_not_optimal_here() {
        // Greedy takes the 6-element middle set and then needs two more.
        let sets = vec![
            bits(12, &[0, 1, 2, 3, 4, 5]),
            bits(12, &[6, 7, 8, 9, 10, 11]),
            bits(12, &[2, 3, 4, 5, 6, 7, 8]),
            bits(12, &[0, 1]),
            bits(12, &[9, 10, 11]),
        ];
        let sol = exact_set_cover(12, &sets, CoverLimits::default()).unwrap();
        assert_eq!(sol.chosen, vec![0, 1]);
    }

    #[test]
    fn matches_brute_force_on_small_instances() {
        let mut state = 0x1234_5678_9abc_def0u64;
        for _ in 0..200 {
            let elements = 1 + (state % 20) as usize;
            let mut sets = Vec::new();
            for _ in 0..10 {
                state = crate::mphf::derive_seed(state, 1);
                let members: Vec<usize> = (0..elements).filter(|&e| state >> (e % 64) & 1 == 1).collect();
                sets.push(bits(elements, &members));
            }
            sets.push(bits(elements, &(0..elements).step_by(2).collect::<Vec<_>>()));
            sets.push(bits(elements, &(1..elements).step_by(2).collect::<Vec<_>>()));
            let sol = exact_set_cover(elements, &sets, CoverLimits::default()).unwrap();
            assert_eq!(sol.chosen.len(), brute_force(elements, &sets));
        }
    }

    #[test]
    fn infeasible_and_budget() {
        assert!(exact_set_cover(3, &[bits(3, &[0, 1])], CoverLimits::default()).is_err());
        let sets: Vec<Bits> = (0..30).map(|i| bits(30, &[i, (i + 1) % 30, (i + 7) % 30])).collect();
        assert!(matches!(
            exact_set_cover(30, &sets, CoverLimits { max_nodes: 5 }),
            Err(Error::BudgetExceeded(_))
        ));
    }
}
