//! Brute-force references: orders by iterated multiplication, least primitive
//! roots, and a verifier for engine outcomes.
//!
//! Everything here is a deliberately naive linear scan on machine words, kept
//! separate from the big-integer code paths it is used to check.

use std::fmt;

use rug::Integer;

use crate::arith::Residue;
use crate::engine::SearchOutcome;
use crate::error::{Error, Result};

#[inline]
fn mul_mod(a: u64, b: u64, n: u64) -> u64 {
    ((a as u128 * b as u128) % n as u128) as u64
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn to_u64(x: &Integer, what: &str) -> Result<u64> {
    x.to_u64().ok_or_else(|| Error::Domain(format!("{what} {x} is out of oracle range")))
}

/// Smallest `k >= 1` with `a^k = 1 (mod n)`.
pub fn ord_oracle_u64(a: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::Domain(format!("modulus must be >= 2, got {n}")));
    }
    let a = a % n;
    if gcd_u64(a, n) != 1 {
        return Err(Error::Precondition(format!("{a} is not invertible modulo {n}")));
    }
    let mut x = a;
    let mut k = 1;
    while x != 1 {
        x = mul_mod(x, a, n);
        k += 1;
    }
    Ok(k)
}

pub fn ord_oracle(alpha: &Residue) -> Result<u64> {
    ord_oracle_u64(to_u64(alpha.value(), "value")?, to_u64(alpha.modulus(), "modulus")?)
}

/// True when `ord_n(a) > d`, scanning at most `d` powers.
pub fn order_exceeds_u64(a: u64, n: u64, d: u64) -> Result<bool> {
    let a = a % n;
    if n < 2 || gcd_u64(a, n) != 1 {
        return Err(Error::Precondition(format!("{a} is not a unit modulo {n}")));
    }
    let mut x = 1;
    for _ in 0..d {
        x = mul_mod(x, a, n);
        if x == 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn is_prime_u64(n: u64) -> bool {
    smallest_factor_u64(n) == Some(n)
}

/// Least prime factor of `n >= 2` by trial division.
pub fn smallest_factor_u64(n: u64) -> Option<u64> {
    if n < 2 {
        return None;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return Some(d);
        }
        d += 1;
    }
    Some(n)
}

/// Least primitive root modulo the prime `p`.
pub fn primitive_root_oracle(p: u64) -> Result<u64> {
    if !is_prime_u64(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if p == 2 {
        return Ok(1);
    }
    (2..p)
        .find(|&g| ord_oracle_u64(g, p).expect("nonzero residues are units") == p - 1)
        .ok_or_else(|| Error::Internal(format!("no primitive root modulo {p}")))
}

/// Carmichael's function `lambda(n)`, the exponent of `(Z/nZ)^*`.
pub fn carmichael_lambda(n: u64) -> u64 {
    let mut m = n;
    let mut lambda = 1u64;
    let mut p = 2u64;
    while m > 1 {
        if p * p > m {
            p = m;
        }
        if m.is_multiple_of(p) {
            let mut pk = 1;
            while m.is_multiple_of(p) {
                m /= p;
                pk *= p;
            }
            let part = if p == 2 {
                match pk {
                    2 => 1,
                    4 => 2,
                    _ => pk / 4,
                }
            } else {
                pk / p * (p - 1)
            };
            lambda = lambda / gcd_u64(lambda, part) * part;
        }
        p += 1;
    }
    lambda
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub n: Integer,
    pub d: Integer,
    pub outcome: SearchOutcome,
    pub verdict: Verdict,
    pub detail: String,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match self.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        };
        write!(f, "N={} D={}: {} ({})", self.n, self.d, verdict, self.detail)
    }
}

/// Checks an outcome against the contract: a divisor must satisfy `1 < d < N`
/// and `d | N`; an element must be a unit of order greater than `D`.
pub fn verify_outcome(n: &Integer, d: &Integer, outcome: &SearchOutcome) -> VerificationReport {
    let (verdict, detail) = match check(n, d, outcome) {
        Ok(detail) => (Verdict::Pass, detail),
        Err(detail) => (Verdict::Fail, detail),
    };
    VerificationReport { n: n.clone(), d: d.clone(), outcome: outcome.clone(), verdict, detail }
}

fn check(n: &Integer, d: &Integer, outcome: &SearchOutcome) -> std::result::Result<String, String> {
    match outcome {
        SearchOutcome::NontrivialDivisor(div) => {
            if *div <= 1 || div >= n {
                return Err(format!("{div} is not strictly between 1 and N"));
            }
            if !n.is_divisible(div) {
                return Err(format!("{div} does not divide N"));
            }
            Ok(format!("{div} is a nontrivial divisor"))
        }
        SearchOutcome::LargeOrderElement { alpha, known_order } => {
            if alpha.modulus() != n {
                return Err(format!("element is reduced modulo {}, not N", alpha.modulus()));
            }
            let nn = n.to_u64().ok_or("N is too large for the oracle")?;
            let dd = d.to_u64().ok_or("D is too large for the oracle")?;
            let a = alpha.value().to_u64().expect("reduced residue fits when N does");
            if gcd_u64(a, nn) != 1 {
                return Err(format!("{a} is not a unit modulo N"));
            }
            if let Some(k) = known_order {
                let exact = ord_oracle_u64(a, nn).map_err(|e| e.to_string())?;
                if *k != exact {
                    return Err(format!("reported order {k} but the order of {a} is {exact}"));
                }
            }
            match order_exceeds_u64(a, nn, dd) {
                Ok(true) => Ok(format!("order of {a} exceeds {dd}")),
                Ok(false) => Err(format!("order of {a} is at most {dd}")),
                Err(e) => Err(e.to_string()),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn element(a: u64, n: u64) -> SearchOutcome {
        SearchOutcome::LargeOrderElement { alpha: Residue::new(a, n).unwrap(), known_order: None }
    }

    #[test]
    fn order_examples() {
        for n in [3u64, 10, 97, 1001] {
            assert_eq!(ord_oracle_u64(1, n).unwrap(), 1);
            assert_eq!(ord_oracle_u64(n - 1, n).unwrap(), 2);
        }
        assert_eq!(ord_oracle_u64(2, 7).unwrap(), 3);
        assert_eq!(ord_oracle(&Residue::new(2, 7).unwrap()).unwrap(), 3);
        assert!(ord_oracle_u64(3, 9).is_err());
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(primitive_root_oracle(7).unwrap(), 3);
        assert_eq!(primitive_root_oracle(3).unwrap(), 2);
        assert_eq!(primitive_root_oracle(13).unwrap(), 2);
        assert!(primitive_root_oracle(15).is_err());
    }

    #[test]
    fn verify_examples() {
        let i = Integer::from;
        assert!(verify_outcome(&i(10), &i(1), &SearchOutcome::NontrivialDivisor(i(2))).passed());
        assert!(verify_outcome(&i(15), &i(3), &element(2, 15)).passed());
        assert!(!verify_outcome(&i(15), &i(5), &element(2, 15)).passed());
        assert!(!verify_outcome(&i(15), &i(1), &SearchOutcome::NontrivialDivisor(i(15))).passed());
        assert!(!verify_outcome(&i(15), &i(1), &SearchOutcome::NontrivialDivisor(i(4))).passed());
        assert!(!verify_outcome(&i(15), &i(1), &element(3, 15)).passed());
        let wrong_order =
            SearchOutcome::LargeOrderElement { alpha: Residue::new(2, 15).unwrap(), known_order: Some(i(8)) };
        assert!(!verify_outcome(&i(15), &i(3), &wrong_order).passed());
    }

    #[test]
    fn order_divides_carmichael_lambda() {
        for n in 2u64..=500 {
            let lambda = carmichael_lambda(n);
            let mut max_order = 1;
            for a in 1..n {
                if gcd_u64(a, n) == 1 {
                    let k = ord_oracle_u64(a, n).unwrap();
                    assert_eq!(lambda % k, 0, "a={a} n={n}");
                    max_order = max_order.max(k);
                }
            }
            // lambda is attained by some element.
            assert_eq!(max_order, lambda, "n={n}");
        }
    }

    #[test]
    fn primitive_roots_have_full_order() {
        for p in (3u64..5000).filter(|&p| is_prime_u64(p)) {
            let g = primitive_root_oracle(p).unwrap();
            assert_eq!(ord_oracle_u64(g, p).unwrap(), p - 1);
        }
    }
}
