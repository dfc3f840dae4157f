//! Smooth numbers: exact counts `Psi(x, y)`, the lower bound
//! `Psi(x, y) >= x / (log x)^(log x / log y)`, and the certified scan bound `Z`.
//!
//! `Z` is the integer the engine uses as the limit of its final
//! arithmetic-progression scan. It must satisfy `Zt < Z < Zt + 2` where
//!
//! ```text
//! Zt = 2M * (log 2M)^((log 2M) / (log B - 1)),   log Zt = (1 + log log 2M / (log B - 1)) * log 2M
//! ```
//!
//! All logarithms are natural. The exponent is evaluated in MPFR interval
//! arithmetic with outward rounding at every step, so the returned integer is
//! proven to lie inside the bracket.

use std::cmp::Ordering;

use rug::float::Round;
use rug::{Float, Integer};

use crate::error::{Error, Result};

/// Largest-prime-factor sieve for exact smooth-number counts.
#[derive(Clone, Debug)]
pub struct SmoothSieve {
    /// `largest[n]` is the largest prime factor of `n`, with `largest[1] = 1`.
    largest: Vec<u32>,
}

impl SmoothSieve {
    pub fn new(limit: u32) -> Self {
        let len = limit as usize + 1;
        let mut largest = vec![1u32; len.max(2)];
        largest[0] = 0;
        for p in 2..len {
            if largest[p] == 1 {
                // p is prime; primes are visited in increasing order so the last write wins.
                for multiple in (p..len).step_by(p) {
                    largest[multiple] = p as u32;
                }
            }
        }
        largest.truncate(len);
        SmoothSieve { largest }
    }

    pub fn limit(&self) -> u32 {
        (self.largest.len() - 1) as u32
    }

    pub fn largest_prime_factor(&self, n: u32) -> u32 {
        self.largest[n as usize]
    }

    /// `Psi(x, y)` for `x` within the sieve limit.
    pub fn psi(&self, x: u32, y: u64) -> u64 {
        assert!(x <= self.limit(), "x = {x} beyond sieve limit {}", self.limit());
        self.largest[1..=x as usize].iter().filter(|&&q| u64::from(q) <= y).count() as u64
    }

    /// `counts[x] = Psi(x, y)` for every `0 <= x <= limit`.
    pub fn psi_prefix(&self, y: u64) -> Vec<u32> {
        let mut counts = Vec::with_capacity(self.largest.len());
        let mut running = 0u32;
        counts.push(0);
        for &q in &self.largest[1..] {
            if u64::from(q) <= y {
                running += 1;
            }
            counts.push(running);
        }
        counts
    }
}

/// Upper end of the range [`psi_brute`] accepts.
pub const PSI_BRUTE_LIMIT: u64 = 10_000_000;

/// Number of `y`-smooth integers in `[1, x]`, by sieving.
pub fn psi_brute(x: u64, y: u64) -> Result<u64> {
    if x < 1 || y < 1 {
        return Err(Error::Domain(format!("psi needs x, y >= 1, got ({x}, {y})")));
    }
    if x > PSI_BRUTE_LIMIT {
        return Err(Error::Domain(format!("x = {x} exceeds the enumeration limit {PSI_BRUTE_LIMIT}")));
    }
    Ok(SmoothSieve::new(x as u32).psi(x as u32, y))
}

/// `x / (log x)^(log x / log y)` in double precision, for `x >= 4` and `x >= y >= 2`.
pub fn psi_lower_bound(x: f64, y: f64) -> Result<f64> {
    if !(x >= 4.0 && y >= 2.0 && x >= y) || !x.is_finite() {
        return Err(Error::Domain(format!("lower bound needs x >= 4 and x >= y >= 2, got ({x}, {y})")));
    }
    let lx = x.ln();
    Ok(x / lx.powf(lx / y.ln()))
}

/// Current order `M` and smoothness bound `B` at the start of the final scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmoothBoundInput {
    m: Integer,
    b: Integer,
}

impl SmoothBoundInput {
    /// Requires `M >= 2` and `B >= 3` so that `log B - 1 > 0`.
    pub fn new(m: impl Into<Integer>, b: impl Into<Integer>) -> Result<Self> {
        let (m, b) = (m.into(), b.into());
        if m < 2 {
            return Err(Error::Domain(format!("M must be >= 2, got {m}")));
        }
        if b < 3 {
            return Err(Error::Domain(format!("B must be >= 3, got {b}")));
        }
        Ok(SmoothBoundInput { m, b })
    }

    pub fn m(&self) -> &Integer {
        &self.m
    }

    pub fn b(&self) -> &Integer {
        &self.b
    }
}

/// A certified scan bound.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanBound {
    pub z: Integer,
    /// Enclosure `[lower, upper]` of `Zt` at the final precision.
    pub lower: Float,
    pub upper: Float,
    pub precision: u32,
}

/// Outward-rounded enclosure of `Zt` at `prec` bits.
pub fn tilde_z_enclosure(input: &SmoothBoundInput, prec: u32) -> (Float, Float) {
    let two_m = Integer::from(&input.m * 2u32);
    let ln = |x: &Integer, r: Round| {
        let mut f = Float::with_val_round(prec, x, r).0;
        f.ln_round(r);
        f
    };
    // log 2M > 1 because 2M >= 4, so every quantity below is positive and
    // monotone rounding of endpoints is enough.
    let log2m = (ln(&two_m, Round::Down), ln(&two_m, Round::Up));
    let loglog2m = {
        let (mut lo, mut hi) = (log2m.0.clone(), log2m.1.clone());
        lo.ln_round(Round::Down);
        hi.ln_round(Round::Up);
        (lo, hi)
    };
    let denom = {
        let lo = Float::with_val_round(prec, ln(&input.b, Round::Down) - 1u32, Round::Down).0;
        let hi = Float::with_val_round(prec, ln(&input.b, Round::Up) - 1u32, Round::Up).0;
        (lo, hi)
    };
    let ratio_lo = Float::with_val_round(prec, &loglog2m.0 / &denom.1, Round::Down).0;
    let ratio_hi = Float::with_val_round(prec, &loglog2m.1 / &denom.0, Round::Up).0;
    let factor_lo = Float::with_val_round(prec, ratio_lo + 1u32, Round::Down).0;
    let factor_hi = Float::with_val_round(prec, ratio_hi + 1u32, Round::Up).0;
    let mut z_lo = Float::with_val_round(prec, &factor_lo * &log2m.0, Round::Down).0;
    let mut z_hi = Float::with_val_round(prec, &factor_hi * &log2m.1, Round::Up).0;
    z_lo.exp_round(Round::Down);
    z_hi.exp_round(Round::Up);
    (z_lo, z_hi)
}

fn floor_of(x: &Float) -> Integer {
    x.to_integer_round(Round::Down).expect("finite enclosure").0
}

/// The integer `Z = floor(Zt) + 1`, certified to satisfy `Zt < Z < Zt + 2`.
///
/// Starts at `2 * bitlength(M) + 64` bits and doubles the precision until the
/// enclosure pins `floor(Zt)`. If the enclosure straddles an integer, `floor(hi) + 1`
/// is accepted when it is provably below `lo + 2`.
pub fn compute_z(input: &SmoothBoundInput) -> Result<ScanBound> {
    let bits = input.m.significant_bits();
    let cap = 64 * bits + 4096;
    let mut prec = 2 * bits + 64;
    loop {
        let (lower, upper) = tilde_z_enclosure(input, prec);
        let floor_lo = floor_of(&lower);
        let floor_hi = floor_of(&upper);
        if floor_lo == floor_hi {
            return Ok(ScanBound { z: floor_lo + 1u32, lower, upper, precision: prec });
        }
        let candidate = floor_hi + 1u32;
        let limit = Float::with_val_round(prec, &lower + 2u32, Round::Down).0;
        if candidate.partial_cmp(&limit) == Some(Ordering::Less) {
            return Ok(ScanBound { z: candidate, lower, upper, precision: prec });
        }
        prec *= 2;
        if prec > cap {
            return Err(Error::Internal(format!(
                "could not certify the scan bound for M = {}, B = {} within {cap} bits",
                input.m, input.b
            )));
        }
    }
}

/// Limit for the final progression scan given the state `(M, B)` at that point.
///
/// For `B >= 3` this is [`compute_z`]. For `B = 2` the formula is undefined
/// (`log 2 - 1 < 0`); instead the exact count `Psi(p, 2) = floor(log2 p) + 1 <= M`
/// gives `p < 2^M` for every prime `p | N`, so `2^M` is returned.
pub fn scan_bound(m: &Integer, b: &Integer) -> Result<Integer> {
    if *b == 2 {
        let exp = m
            .to_u32()
            .filter(|&e| e >= 1)
            .ok_or_else(|| Error::Domain(format!("M = {m} out of range for B = 2")))?;
        return Ok(Integer::from(1) << exp);
    }
    Ok(compute_z(&SmoothBoundInput::new(m.clone(), b.clone())?)?.z)
}

/// Natural logarithm of a positive integer, without overflowing `f64`.
pub fn ln_integer(x: &Integer) -> f64 {
    assert!(*x > 0);
    let (mantissa, exp) = x.to_f64_exp();
    mantissa.ln() + f64::from(exp) * std::f64::consts::LN_2
}

/// The quantities in `M < Zt / (log Zt)^(log Zt / log B) < 4M`, in log form:
/// `log M < z (1 - log z / log B) < log 4M` with `z = log Zt`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sandwich {
    pub log_m: f64,
    pub middle: f64,
    pub log_4m: f64,
}

impl Sandwich {
    pub fn lower_holds(&self) -> bool {
        self.log_m < self.middle
    }

    pub fn holds(&self) -> bool {
        self.log_m < self.middle && self.middle < self.log_4m
    }
}

/// Evaluates [`Sandwich`] in double precision (diagnostic only).
pub fn tilde_z_sandwich(input: &SmoothBoundInput) -> Sandwich {
    let log_m = ln_integer(&input.m);
    let log2m = log_m + std::f64::consts::LN_2;
    let log_b = ln_integer(&input.b);
    let z = (1.0 + log2m.ln() / (log_b - 1.0)) * log2m;
    Sandwich { log_m, middle: z * (1.0 - z.ln() / log_b), log_4m: log_m + 4f64.ln() }
}
