//! Colorings of a universe as models of a fixed MMPHF memory content.
//!
//! A coloring maps every `x ∈ [0..u)` to a color in `[1..n]`. It encodes an
//! increasing sequence `x₁ < ⋯ < xₙ` when `xᵢ` has color `i` for every `i`.

mod bounds;
mod family;
mod setcover;

pub use bounds::{binomial, bound_report, BoundMethod, BoundReport, Universe};
pub use family::{min_family_size, FamilyLimits, MinFamily};
pub use setcover::{exact_set_cover, CoverLimits, CoverSolution};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};

/// Read access to a coloring of `[0..universe)` with colors in `[1..colors]`.
pub trait ColorSource {
    fn universe(&self) -> u64;

    fn colors(&self) -> u32;

    fn color(&self, x: u64) -> u32;

    /// Number of `x ∈ [lo..hi)` with color `c`.
    fn count(&self, c: u32, lo: u64, hi: u64) -> u64 {
        (lo..hi).filter(|&x| self.color(x) == c).count() as u64
    }
}

/// A coloring stored as a flat array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coloring {
    n: u32,
    colors: Vec<u32>,
}

impl Coloring {
    pub fn new(colors: Vec<u32>, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("a coloring needs at least one color".into()));
        }
        if let Some((x, &c)) = colors.iter().enumerate().find(|(_, &c)| c == 0 || c > n) {
            return Err(Error::InvalidInput(format!("color {c} at position {x} outside [1..{n}]")));
        }
        Ok(Self { n, colors })
    }

    /// Uses the largest entry as the color count.
    pub fn from_colors(colors: Vec<u32>) -> Result<Self> {
        let n = colors.iter().copied().max().unwrap_or(1);
        Self::new(colors, n)
    }

    /// Every position gets color `c`.
    pub fn constant(u: u64, n: u32, c: u32) -> Result<Self> {
        Self::new(vec![c; u as usize], n)
    }

    pub fn u(&self) -> u64 {
        self.colors.len() as u64
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.colors
    }
}

impl ColorSource for Coloring {
    fn universe(&self) -> u64 {
        self.u()
    }

    fn colors(&self) -> u32 {
        self.n
    }

    #[inline]
    fn color(&self, x: u64) -> u32 {
        self.colors[x as usize]
    }

    fn count(&self, c: u32, lo: u64, hi: u64) -> u64 {
        self.colors[lo as usize..hi as usize].iter().filter(|&&v| v == c).count() as u64
    }
}

/// A coloring given by contiguous `[start..end) → color` segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseColoring {
    n: u32,
    /// Segment starts, strictly increasing, first is 0.
    starts: Vec<u64>,
    colors: Vec<u32>,
    universe: u64,
}

impl PiecewiseColoring {
    /// Segments must tile `[0..universe)` in order.
    pub fn new(segments: &[(u64, u64, u32)], n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("a coloring needs at least one color".into()));
        }
        let mut expected = 0u64;
        let mut starts = Vec::with_capacity(segments.len());
        let mut colors = Vec::with_capacity(segments.len());
        for (k, &(start, end, c)) in segments.iter().enumerate() {
            if start != expected || end <= start {
                return Err(Error::InvalidInput(format!(
                    "segment {k} [{start}..{end}) does not continue at {expected}"
                )));
            }
            if c == 0 || c > n {
                return Err(Error::InvalidInput(format!("segment {k} color {c} outside [1..{n}]")));
            }
            starts.push(start);
            colors.push(c);
            expected = end;
        }
        if starts.is_empty() {
            return Err(Error::InvalidInput("no segments".into()));
        }
        Ok(Self {
            n,
            starts,
            colors,
            universe: expected,
        })
    }

    pub fn segments(&self) -> impl Iterator<Item = (u64, u64, u32)> + '_ {
        (0..self.starts.len()).map(move |k| {
            let end = self.starts.get(k + 1).copied().unwrap_or(self.universe);
            (self.starts[k], end, self.colors[k])
        })
    }

    fn segment_of(&self, x: u64) -> usize {
        self.starts.partition_point(|&s| s <= x) - 1
    }

    /// Materializes the flat array.
    pub fn to_coloring(&self) -> Result<Coloring> {
        let mut colors = Vec::with_capacity(self.universe as usize);
        for (s, e, c) in self.segments() {
            colors.extend(std::iter::repeat_n(c, (e - s) as usize));
        }
        Coloring::new(colors, self.n)
    }
}

impl ColorSource for PiecewiseColoring {
    fn universe(&self) -> u64 {
        self.universe
    }

    fn colors(&self) -> u32 {
        self.n
    }

    fn color(&self, x: u64) -> u32 {
        self.colors[self.segment_of(x)]
    }

    fn count(&self, c: u32, lo: u64, hi: u64) -> u64 {
        if lo >= hi {
            return 0;
        }
        let mut total = 0;
        let mut k = self.segment_of(lo);
        while k < self.starts.len() && self.starts[k] < hi {
            if self.colors[k] == c {
                let end = self.starts.get(k + 1).copied().unwrap_or(self.universe);
                total += end.min(hi) - self.starts[k].max(lo);
            }
            k += 1;
        }
        total
    }
}

fn check_sequence<C: ColorSource + ?Sized>(c: &C, seq: &[u64]) -> Result<()> {
    if seq.len() != c.colors() as usize {
        return Err(Error::InvalidInput(format!(
            "sequence has {} elements, coloring has {} colors",
            seq.len(),
            c.colors()
        )));
    }
    for (i, w) in seq.windows(2).enumerate() {
        if w[0] >= w[1] {
            return Err(Error::Unsorted { index: i + 1 });
        }
    }
    if let Some(&last) = seq.last() {
        if last >= c.universe() {
            return Err(Error::KeyOutOfUniverse {
                key: last,
                universe: u128::from(c.universe()),
            });
        }
    }
    Ok(())
}

/// Whether `seq[i]` has color `i + 1` for every `i`.
pub fn encodes<C: ColorSource + ?Sized>(c: &C, seq: &[u64]) -> Result<bool> {
    check_sequence(c, seq)?;
    Ok(encodes_unchecked(c, seq))
}

#[inline]
pub(crate) fn encodes_unchecked<C: ColorSource + ?Sized>(c: &C, seq: &[u64]) -> bool {
    seq.iter().enumerate().all(|(i, &x)| c.color(x) == i as u32 + 1)
}

/// `(c₁, …, cₙ)`: how many positions carry each color.
pub fn color_class_sizes<C: ColorSource + ?Sized>(c: &C) -> Vec<u64> {
    (1..=c.colors()).map(|k| c.count(k, 0, c.universe())).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxEncodable {
    /// `c₁ ⋯ cₙ`.
    pub product: BigUint,
    /// `(u/n)ⁿ`, attained only by balanced class sizes.
    pub balanced_bound: BigRational,
}

/// Upper bound on how many sequences one coloring can encode.
pub fn max_encodable<C: ColorSource + ?Sized>(c: &C) -> MaxEncodable {
    let product = color_class_sizes(c)
        .into_iter()
        .fold(BigUint::one(), |acc, s| acc * BigUint::from(s));
    let ratio = BigRational::new(c.universe().into(), c.colors().into());
    MaxEncodable {
        product,
        balanced_bound: num_traits::pow(ratio, c.colors() as usize),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> Coloring {
        Coloring::new(vec![1, 1, 2, 1, 3, 3, 2, 3, 1, 4, 4, 3, 5, 2, 5, 4, 5], 5).unwrap()
    }

    #[test]
    fn example_coloring_encodes_listed_sequences() {
        let c = example();
        for seq in [[3, 6, 7, 10, 14], [1, 2, 4, 9, 12], [1, 6, 11, 15, 16]] {
            assert!(encodes(&c, &seq).unwrap(), "{seq:?}");
        }
        assert!(!encodes(&c, &[0, 1, 4, 9, 12]).unwrap());
        assert!(encodes(&c, &[1, 2, 4]).is_err());
        assert!(encodes(&c, &[1, 2, 2, 9, 12]).is_err());
        assert!(encodes(&c, &[1, 2, 4, 9, 17]).is_err());
    }

    #[test]
    fn class_sizes_and_product() {
        let c = example();
        assert_eq!(color_class_sizes(&c), vec![4, 3, 4, 3, 3]);
        assert_eq!(max_encodable(&c).product, BigUint::from(432u32));
        let ones = Coloring::constant(5, 3, 1).unwrap();
        assert_eq!(color_class_sizes(&ones), vec![5, 0, 0]);
        assert_eq!(max_encodable(&ones).product, BigUint::from(0u32));
        let balanced = Coloring::new(vec![1, 1, 2, 2], 2).unwrap();
        let m = max_encodable(&balanced);
        assert_eq!(m.product, BigUint::from(4u32));
        assert_eq!(m.balanced_bound, BigRational::from_integer(4.into()));
        let identity = Coloring::new((1..=6).collect(), 6).unwrap();
        assert_eq!(color_class_sizes(&identity), vec![1; 6]);
    }

    #[test]
    fn rejects_bad_colors() {
        assert!(Coloring::new(vec![1, 0], 2).is_err());
        assert!(Coloring::new(vec![1, 3], 2).is_err());
        assert!(Coloring::new(vec![1], 0).is_err());
    }

    #[test]
    fn piecewise_matches_flat() {
        let p = PiecewiseColoring::new(&[(0, 3, 1), (3, 4, 2), (4, 10, 1), (10, 12, 3)], 3).unwrap();
        let flat = p.to_coloring().unwrap();
        assert_eq!(flat.u(), 12);
        for lo in 0..=12 {
            for hi in lo..=12 {
                for c in 1..=3 {
                    assert_eq!(p.count(c, lo, hi), flat.count(c, lo, hi));
                }
            }
        }
        for x in 0..12 {
            assert_eq!(p.color(x), flat.color(x));
        }
        assert!(PiecewiseColoring::new(&[(0, 3, 1), (4, 5, 1)], 1).is_err());
    }
}
