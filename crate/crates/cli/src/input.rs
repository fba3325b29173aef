//! Key files, universe sizes and coloring specifications.

use std::path::Path;

use anyhow::{bail, Context, Result};
use mmphf_core::coloring_lab::{ColorSource, Coloring, PiecewiseColoring};
use mmphf_core::process_lab::chunk_rng;
use rand::Rng;

use crate::UsageError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum KeyFormat {
    /// One unsigned integer per line.
    Text,
    /// Raw little-endian `u64` words.
    U64le,
}

pub fn read_keys(path: &Path, format: KeyFormat) -> Result<Vec<u64>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading keys from {}", path.display()))?;
    match format {
        KeyFormat::Text => {
            let text = String::from_utf8(bytes).context("key file is not UTF-8 text")?;
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(no, l)| {
                    l.trim()
                        .parse::<u64>()
                        .with_context(|| format!("line {}: '{}' is not an unsigned 64-bit integer", no + 1, l.trim()))
                })
                .collect()
        }
        KeyFormat::U64le => {
            if bytes.len() % 8 != 0 {
                bail!("raw key file length {} is not a multiple of 8", bytes.len());
            }
            Ok(bytes
                .chunks_exact(8)
                .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect())
        }
    }
}

/// Decimal, hexadecimal (`0x…`) or `2^k` with `k ≤ 64`.
pub fn parse_universe(s: &str) -> Result<u128> {
    let s = s.trim();
    let bad = || UsageError(format!("cannot parse universe '{s}'"));
    let u = if let Some(k) = s.strip_prefix("2^") {
        let k: u32 = k.parse().map_err(|_| bad())?;
        if k > 64 {
            bail!(UsageError(format!("universe 2^{k} exceeds 2^64")));
        }
        1u128 << k
    } else if let Some(hex) = s.strip_prefix("0x") {
        u128::from_str_radix(hex, 16).map_err(|_| bad())?
    } else {
        s.parse().map_err(|_| bad())?
    };
    if u == 0 || u > 1 << 64 {
        bail!(UsageError(format!("universe {u} outside [1..2^64]")));
    }
    Ok(u)
}

pub type DynColoring = Box<dyn ColorSource + Sync>;

fn parse_color_list(text: &str) -> Result<Vec<u32>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u32>().with_context(|| format!("'{t}' is not a color")))
        .collect()
}

/// A coloring of `[0..u)` with `n` colors from a file or a pattern.
///
/// Files hold either a raw color array or `start,end,color` segment lines.
/// Patterns: a literal list such as `1,1,2,2`; `const:C`; `ramp` (color
/// `1 + ⌊x·n/u⌋`); `random` (uniform, from `seed`).
pub fn load_coloring(spec: &str, u: u64, n: u32, seed: u64) -> Result<DynColoring> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading coloring {}", path.display()))?;
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        let segmented = !lines.is_empty() && lines.iter().all(|l| l.split(',').count() == 3);
        if segmented {
            let mut segs = Vec::with_capacity(lines.len());
            for l in lines {
                let f: Vec<&str> = l.split(',').map(str::trim).collect();
                let parse = |s: &str| s.parse::<u64>().with_context(|| format!("bad segment line '{l}'"));
                segs.push((parse(f[0])?, parse(f[1])?, parse(f[2])? as u32));
            }
            let p = PiecewiseColoring::new(&segs, n)?;
            if p.universe() != u {
                bail!("segments cover [0..{}), expected [0..{u})", p.universe());
            }
            return Ok(Box::new(p));
        }
        return Ok(Box::new(Coloring::new(parse_color_list(&text)?, n)?));
    }
    if u > 1 << 32 {
        bail!(UsageError(format!("u = {u} is too large for a flat pattern; supply segments")));
    }
    let colors: Vec<u32> = match spec {
        "ramp" => (0..u).map(|x| (u128::from(x) * u128::from(n) / u128::from(u)) as u32 + 1).collect(),
        "random" => {
            let mut rng = chunk_rng(seed, 0);
            (0..u).map(|_| rng.random_range(1..=n)).collect()
        }
        s if s.starts_with("const:") => {
            let c: u32 = s["const:".len()..].parse().map_err(|_| UsageError(format!("bad pattern '{s}'")))?;
            vec![c; u as usize]
        }
        s if s.chars().all(|c| c.is_ascii_digit() || c == ',' || c.is_whitespace()) => parse_color_list(s)?,
        s => bail!(UsageError(format!("'{s}' is neither a file nor a coloring pattern"))),
    };
    if colors.len() as u64 != u {
        bail!("coloring has {} positions, expected u = {u}", colors.len());
    }
    Ok(Box::new(Coloring::new(colors, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn universes() {
        assert_eq!(parse_universe("16").unwrap(), 16);
        assert_eq!(parse_universe("2^64").unwrap(), 1 << 64);
        assert_eq!(parse_universe("0x10").unwrap(), 16);
        assert!(parse_universe("2^65").is_err());
        assert!(parse_universe("0").is_err());
    }

    #[test]
    fn patterns() {
        let c = load_coloring("1,1,2,2", 4, 2, 0).unwrap();
        assert_eq!((0..4).map(|x| c.color(x)).collect::<Vec<_>>(), vec![1, 1, 2, 2]);
        let r = load_coloring("ramp", 6, 3, 0).unwrap();
        assert_eq!((0..6).map(|x| r.color(x)).collect::<Vec<_>>(), vec![1, 1, 2, 2, 3, 3]);
        assert!(load_coloring("1,2", 4, 2, 0).is_err());
        assert!(load_coloring("const:3", 4, 2, 0).is_err());
        let a = load_coloring("random", 50, 3, 9).unwrap();
        let b = load_coloring("random", 50, 3, 9).unwrap();
        assert!((0..50).all(|x| a.color(x) == b.color(x)));
    }

    #[test]
    fn segment_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        std::fs::write(&path, "0,3,1\n3,8,2\n").unwrap();
        let c = load_coloring(path.to_str().unwrap(), 8, 2, 0).unwrap();
        assert_eq!(c.count(2, 0, 8), 5);
        assert!(load_coloring(path.to_str().unwrap(), 9, 2, 0).is_err());
    }
}
