//! Modular arithmetic primitives over arbitrary-precision integers.
//!
//! Residues are always stored in the interval `[0, modulus)`. Powering is
//! left-to-right square-and-multiply with an optional multiplication counter,
//! so callers can audit how many group operations a routine spends.

use std::fmt;

use rug::ops::{Pow, RemRounding};
use rug::{Assign, Integer};

use crate::error::{Error, Result};

/// An element of `Z/NZ`, kept reduced into `[0, N)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Residue {
    value: Integer,
    modulus: Integer,
}

impl Residue {
    /// Reduces `value` modulo `modulus`. The modulus must be at least 2.
    pub fn new(value: impl Into<Integer>, modulus: impl Into<Integer>) -> Result<Self> {
        let modulus = modulus.into();
        if modulus < 2 {
            return Err(Error::Domain(format!("modulus must be >= 2, got {modulus}")));
        }
        let value = value.into().rem_euc(&modulus);
        Ok(Residue { value, modulus })
    }

    pub fn one(modulus: &Integer) -> Result<Self> {
        Residue::new(1, modulus.clone())
    }

    /// Builds a residue from parts that are already reduced.
    pub(crate) fn from_reduced(value: Integer, modulus: &Integer) -> Self {
        debug_assert!(value >= 0 && &value < modulus);
        Residue { value, modulus: modulus.clone() }
    }

    pub fn value(&self) -> &Integer {
        &self.value
    }

    pub fn modulus(&self) -> &Integer {
        &self.modulus
    }

    pub fn is_one(&self) -> bool {
        self.value == 1
    }

    pub fn into_value(self) -> Integer {
        self.value
    }

    /// True when the value is a unit modulo the modulus.
    pub fn is_invertible(&self) -> bool {
        self.value != 0 && Integer::from(self.value.gcd_ref(&self.modulus)) == 1
    }

    pub fn mul(&self, other: &Residue) -> Result<Residue> {
        if self.modulus != other.modulus {
            return Err(Error::Domain(format!(
                "cannot multiply residues modulo {} and {}",
                self.modulus, other.modulus
            )));
        }
        let mut value = Integer::from(&self.value * &other.value);
        value %= &self.modulus;
        Ok(Residue { value, modulus: self.modulus.clone() })
    }

    pub fn pow(&self, exponent: &Integer) -> Residue {
        mod_pow(self, exponent)
    }
}

impl fmt::Display for Residue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

/// `base^exponent` in `Z/NZ`. A zero exponent yields 1, including for base 0.
///
/// Panics if `exponent` is negative.
pub fn mod_pow(base: &Residue, exponent: &Integer) -> Residue {
    let mut mults = 0;
    let value = pow_mod_counted(&base.value, exponent, &base.modulus, &mut mults);
    Residue { value, modulus: base.modulus.clone() }
}

/// Raw square-and-multiply on reduced integers, scanning exponent bits from the
/// most significant end. Every modular squaring or multiplication adds one to
/// `mults`.
pub fn pow_mod_counted(base: &Integer, exponent: &Integer, modulus: &Integer, mults: &mut u64) -> Integer {
    assert!(*exponent >= 0, "negative exponent {exponent}");
    let bits = exponent.significant_bits();
    if bits == 0 {
        return Integer::from(1) % modulus;
    }
    // The top bit is always set, so the accumulator starts at the base itself.
    let mut acc = Integer::from(base % modulus);
    for i in (0..bits - 1).rev() {
        acc.square_mut();
        acc %= modulus;
        *mults += 1;
        if exponent.get_bit(i) {
            acc *= base;
            acc %= modulus;
            *mults += 1;
        }
    }
    acc
}

/// `acc <- acc * factor mod modulus`, counting one multiplication.
#[inline]
pub(crate) fn mul_mod_assign(acc: &mut Integer, factor: &Integer, modulus: &Integer, mults: &mut u64) {
    *acc *= factor;
    *acc %= modulus;
    *mults += 1;
}

/// Greatest common divisor of two nonnegative integers, not both zero.
pub fn gcd(a: &Integer, b: &Integer) -> Result<Integer> {
    check_gcd_args(a, b)?;
    Ok(Integer::from(a.gcd_ref(b)))
}

/// Bezout form of [`gcd`]: returns `(g, s, t)` with `s*a + t*b = g`.
pub fn gcd_cofactors(a: &Integer, b: &Integer) -> Result<(Integer, Integer, Integer)> {
    check_gcd_args(a, b)?;
    let mut g = Integer::new();
    let mut s = Integer::new();
    let mut t = Integer::new();
    (&mut g, &mut s, &mut t).assign(a.extended_gcd_ref(b));
    Ok((g, s, t))
}

fn check_gcd_args(a: &Integer, b: &Integer) -> Result<()> {
    if *a < 0 || *b < 0 {
        return Err(Error::Domain(format!("gcd arguments must be nonnegative, got ({a}, {b})")));
    }
    if *a == 0 && *b == 0 {
        return Err(Error::Domain("gcd(0, 0) is undefined".into()));
    }
    Ok(())
}

/// Exact `floor(n^(1/k))` for `n >= 0`, `k >= 2`, using integer Newton steps
/// from an upper starting point followed by a correction pass.
pub fn integer_root(n: &Integer, k: u32) -> Integer {
    assert!(k >= 2, "root degree must be at least 2");
    assert!(*n >= 0, "integer_root of negative number {n}");
    if *n < 2 {
        return n.clone();
    }
    // 2^ceil(bits/k) >= n^(1/k), so Newton descends monotonically from here.
    let start_bits = n.significant_bits().div_ceil(k);
    let mut x = Integer::from(1) << start_bits;
    let km1 = k - 1;
    loop {
        let denom = Integer::from(Pow::pow(&x, km1));
        let mut y = Integer::from(n / &denom);
        y += Integer::from(&x * km1);
        y /= k;
        if y >= x {
            break;
        }
        x = y;
    }
    while Integer::from(Pow::pow(&x, k)) > *n {
        x -= 1;
    }
    loop {
        let next = Integer::from(&x + 1);
        if Integer::from(Pow::pow(&next, k)) <= *n {
            x = next;
        } else {
            break;
        }
    }
    x
}

/// Exact `ceil(n^(1/k))`.
pub fn integer_root_ceil(n: &Integer, k: u32) -> Integer {
    let r = integer_root(n, k);
    if Integer::from(Pow::pow(&r, k)) == *n {
        r
    } else {
        r + 1
    }
}

/// Number of bits in the binary representation of a nonnegative integer.
pub fn bit_length(n: &Integer) -> u32 {
    n.significant_bits()
}
