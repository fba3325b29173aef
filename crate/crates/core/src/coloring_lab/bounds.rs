//! Counting bounds relating `binom(u, n)` to colorings.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest universe for which binomials are computed exactly.
pub const EXACT_LIMIT: u64 = 1_000_000;

/// Largest `min(n, u − n)` summed term by term on the approximate path.
const DIRECT_SUM_LIMIT: u64 = 1 << 20;

/// A universe size, either explicit or `2^(2^t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Universe {
    Exact(BigUint),
    DoubleExp { t: u32 },
}

impl Universe {
    pub fn from_u64(u: u64) -> Self {
        Universe::Exact(BigUint::from(u))
    }

    pub fn log2(&self) -> f64 {
        match self {
            Universe::Exact(u) => log2_big(u),
            Universe::DoubleExp { t } => 2f64.powi(*t as i32),
        }
    }

    fn as_u64(&self) -> Option<u64> {
        match self {
            Universe::Exact(u) => u.to_u64(),
            Universe::DoubleExp { t } if *t < 6 => Some(1u64 << (1u32 << t)),
            Universe::DoubleExp { .. } => None,
        }
    }

    /// `u` as an `f64`, when finite and at most `2^1000`.
    fn as_f64(&self) -> Option<f64> {
        let l = self.log2();
        if l > 1000.0 {
            return None;
        }
        match self {
            Universe::Exact(u) => u.to_f64(),
            Universe::DoubleExp { .. } => Some(2f64.powf(l)),
        }
    }

    fn exceeds(&self, n: u64) -> bool {
        match self {
            Universe::Exact(u) => *u > BigUint::from(n),
            Universe::DoubleExp { t } => *t >= 6 || (1u64 << (1u32 << t)) > n,
        }
    }
}

impl fmt::Display for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Universe::Exact(u) => write!(f, "{u}"),
            Universe::DoubleExp { t } => write!(f, "2^(2^{t})"),
        }
    }
}

impl std::str::FromStr for Universe {
    type Err = Error;

    /// Accepts a decimal integer, `2^k`, or `2^(2^t)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse universe '{s}'"));
        if let Some(inner) = s.strip_prefix("2^(2^").and_then(|r| r.strip_suffix(')')) {
            let t = inner.parse().map_err(|_| bad())?;
            return Ok(Universe::DoubleExp { t });
        }
        if let Some(k) = s.strip_prefix("2^") {
            let k: u32 = k.parse().map_err(|_| bad())?;
            return Ok(Universe::Exact(BigUint::one() << k));
        }
        s.parse::<BigUint>().map(Universe::Exact).map_err(|_| bad())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    Exact,
    Stirling,
    LogDomain,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub u: String,
    pub n: u64,
    pub method: BoundMethod,
    pub log2_u: f64,
    /// `log₂ binom(u, n)`.
    pub log_binom: f64,
    /// `n·log₂(u/n) + (u−n)·log₂(u/(u−n))`.
    pub entropy_upper: f64,
    /// `u·H₂(n/u) − log₂(u+1)`.
    pub entropy_lower: f64,
    /// `binom(u,n) / (u/n)ⁿ`; infinite when it overflows `f64`.
    pub weak_family_bound: f64,
    /// `log₂` of `weak_family_bound`.
    pub space_lower_bits: f64,
    /// `α` with `u = (1+α)·n`.
    pub alpha: Option<f64>,
    /// `n·α·log₂(1/α)`.
    pub alpha_bound: Option<f64>,
    /// `n·α·log₂((1+α)/α)`, equal to `(u−n)·log₂(u/(u−n))`.
    pub alpha_identity: Option<f64>,
    #[serde(skip)]
    pub exact_binomial: Option<BigUint>,
    #[serde(skip)]
    pub exact_weak_bound: Option<BigRational>,
}

/// `log₂ x` for a big integer, accurate to about 1 ulp of the leading bits.
pub(crate) fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64().expect("at most 64 bits remain");
    (top as f64).log2() + shift as f64
}

fn log2_ratio(r: &BigRational) -> f64 {
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    log2_big(num) - log2_big(den)
}

fn primes_up_to(m: u64) -> Vec<u64> {
    let m = m as usize;
    let mut composite = vec![false; m + 1];
    let mut primes = Vec::new();
    for p in 2..=m {
        if !composite[p] {
            primes.push(p as u64);
            let mut q = p * p;
            while q <= m {
                composite[q] = true;
                q += p;
            }
        }
    }
    primes
}

fn product(factors: &[BigUint]) -> BigUint {
    match factors.len() {
        0 => BigUint::one(),
        1 => factors[0].clone(),
        len => product(&factors[..len / 2]) * product(&factors[len / 2..]),
    }
}

/// Exact `binom(u, n)`; zero when `n > u`.
///
/// Uses the prime factorization given by Legendre's formula for large
/// arguments and the multiplicative formula when `min(n, u−n)` is small or
/// `u` exceeds `10⁷`.
pub fn binomial(u: u64, n: u64) -> BigUint {
    if n > u {
        return BigUint::zero();
    }
    let k = n.min(u - n);
    if k == 0 {
        return BigUint::one();
    }
    if k <= 64 || u > 10_000_000 {
        let mut acc = BigUint::one();
        for i in 1..=k {
            acc = acc * BigUint::from(u - k + i) / BigUint::from(i);
        }
        return acc;
    }
    let factors: Vec<BigUint> = primes_up_to(u)
        .into_iter()
        .filter_map(|p| {
            let mut e = 0u32;
            let mut q = p;
            loop {
                e += (u / q - k / q - (u - k) / q) as u32;
                match q.checked_mul(p) {
                    Some(next) if next <= u => q = next,
                    _ => break,
                }
            }
            (e > 0).then(|| BigUint::from(p).pow(e))
        })
        .collect();
    product(&factors)
}

/// `ln m!`: summed for small `m`, Stirling series above.
#[cfg(test)]
fn ln_factorial(m: u64) -> f64 {
    if m < 256 {
        return (2..=m).map(|i| (i as f64).ln()).sum();
    }
    let x = m as f64;
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + 1.0 / (12.0 * x) - 1.0 / (360.0 * x.powi(3))
}

/// `(u−n)·log₂(u/(u−n))`, with `u` possibly unrepresentable.
fn tail_term(u: Option<f64>, n: u64) -> f64 {
    match u {
        Some(u) => -(u - n as f64) * (-(n as f64) / u).ln_1p() / LN_2,
        None => n as f64 / LN_2,
    }
}

/// `log₂ binom(u, n)` without exact arithmetic.
fn approx_log_binom(universe: &Universe, n: u64) -> f64 {
    let lu = universe.log2();
    let u = universe.as_f64();
    let k = match universe.as_u64() {
        Some(u) => n.min(u - n),
        None => n,
    };
    if k <= DIRECT_SUM_LIMIT {
        // Σ_{i<k} log₂((u−i)/(i+1)) with log₂(u−i) = log₂ u + log₂(1 − i/u).
        let mut s = 0.0;
        for i in 0..k {
            let shrink = match u {
                Some(u) => (-(i as f64) / u).ln_1p() / LN_2,
                None => 0.0,
            };
            s += lu + shrink - ((i + 1) as f64).log2();
        }
        return s;
    }
    let u = u.expect("k > 2^20 implies a u64 universe");
    let kf = k as f64;
    let rest = u - kf;
    let entropy_e = kf * (u / kf).ln() - rest * (-kf / u).ln_1p();
    let ln = entropy_e + 0.5 * (u / (2.0 * PI * kf * rest)).ln() + 1.0 / (12.0 * u)
        - 1.0 / (12.0 * kf)
        - 1.0 / (12.0 * rest);
    ln / LN_2
}

/// Bounds for `n` keys in a universe of size `u > n`.
pub fn bound_report(universe: &Universe, n: u64) -> Result<BoundReport> {
    if n == 0 {
        return Err(Error::InvalidInput("n ≥ 1 required".into()));
    }
    if !universe.exceeds(n) {
        return Err(Error::InvalidInput(format!("n = {n} must be smaller than u = {universe}")));
    }
    let lu = universe.log2();
    let u_f = universe.as_f64();
    let nf = n as f64;
    let entropy_upper = nf * (lu - nf.log2()) + tail_term(u_f, n);
    let log2_u_plus_1 = match u_f {
        Some(u) => (u + 1.0).log2(),
        None => lu,
    };
    let entropy_lower = entropy_upper - log2_u_plus_1;

    let exact_u = universe.as_u64().filter(|&u| u <= EXACT_LIMIT);
    let (method, log_binom, space_lower_bits, exact_binomial, exact_weak_bound) = match exact_u {
        Some(u) => {
            let b = binomial(u, n);
            let weak = BigRational::new(
                BigInt::from(b.clone()) * BigInt::from(n).pow(n as u32),
                BigInt::from(u).pow(n as u32),
            );
            (BoundMethod::Exact, log2_big(&b), log2_ratio(&weak), Some(b), Some(weak))
        }
        None => {
            let method = if u_f.is_some() {
                BoundMethod::Stirling
            } else {
                BoundMethod::LogDomain
            };
            let lb = approx_log_binom(universe, n);
            (method, lb, lb - nf * (lu - nf.log2()), None, None)
        }
    };
    let weak_family_bound = match &exact_weak_bound {
        Some(w) => w.to_f64().unwrap_or(f64::INFINITY),
        None => 2f64.powf(space_lower_bits),
    };

    let alpha = u_f.map(|u| (u - nf) / nf);
    let finite = |v: f64| v.is_finite().then_some(v);
    Ok(BoundReport {
        u: universe.to_string(),
        n,
        method,
        log2_u: lu,
        log_binom,
        entropy_upper,
        entropy_lower,
        weak_family_bound,
        space_lower_bits,
        alpha: alpha.and_then(finite),
        alpha_bound: alpha.and_then(|a| finite(nf * a * (1.0 / a).log2())),
        alpha_identity: alpha.and_then(|a| finite(nf * a * ((1.0 + a) / a).log2())),
        exact_binomial,
        exact_weak_bound,
    })
}

/// `log₂ m!`.
#[cfg(test)]
fn log2_factorial(m: u64) -> f64 {
    ln_factorial(m) / LN_2
}
