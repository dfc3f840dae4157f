//! Prime factorizations as sorted `(prime, exponent)` lists, and trial division.

use std::cmp::Ordering;
use std::fmt;

use rug::integer::IsPrime;
use rug::ops::Pow;
use rug::Integer;

use crate::error::{Error, Result};

/// Prime-power decomposition `q_1^e_1 * ... * q_k^e_k` with strictly increasing
/// primes and positive exponents. The empty list represents 1.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Factorization {
    entries: Vec<(Integer, u32)>,
}

impl Factorization {
    pub fn one() -> Self {
        Factorization::default()
    }

    /// Validates ordering, exponents and (probabilistic) primality of each entry.
    pub fn from_entries(entries: Vec<(Integer, u32)>) -> Result<Self> {
        for (i, (q, e)) in entries.iter().enumerate() {
            if *e == 0 {
                return Err(Error::Domain(format!("zero exponent for prime {q}")));
            }
            if q.is_probably_prime(30) == IsPrime::No {
                return Err(Error::Domain(format!("{q} is not prime")));
            }
            if i > 0 && entries[i - 1].0 >= *q {
                return Err(Error::Domain("primes must be strictly increasing".into()));
            }
        }
        Ok(Factorization { entries })
    }

    pub(crate) fn from_entries_unchecked(entries: Vec<(Integer, u32)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|(_, e)| *e > 0));
        Factorization { entries }
    }

    pub fn entries(&self) -> &[(Integer, u32)] {
        &self.entries
    }

    pub fn primes(&self) -> impl Iterator<Item = &Integer> {
        self.entries.iter().map(|(q, _)| q)
    }

    pub fn is_one(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of prime factors counted with multiplicity.
    pub fn big_omega(&self) -> u32 {
        self.entries.iter().map(|(_, e)| e).sum()
    }

    /// The represented integer.
    pub fn value(&self) -> Integer {
        let mut acc = Integer::from(1);
        for (q, e) in &self.entries {
            acc *= Integer::from(Pow::pow(q, *e));
        }
        acc
    }

    /// Exponent of `q` (zero when absent).
    pub fn exponent_of(&self, q: &Integer) -> u32 {
        self.entries
            .binary_search_by(|(p, _)| p.cmp(q))
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Per-prime maximum of exponents, i.e. the factorization of the lcm.
    pub fn lcm(&self, other: &Factorization) -> Factorization {
        let merged = merge(&self.entries, &other.entries)
            .into_iter()
            .map(|(q, e, f)| (q.clone(), e.max(f)))
            .collect();
        Factorization { entries: merged }
    }

    /// Same factorization with the exponent of `q` lowered by one.
    pub(crate) fn divided_by_prime(&self, q: &Integer) -> Factorization {
        let mut entries = self.entries.clone();
        if let Ok(i) = entries.binary_search_by(|(p, _)| p.cmp(q)) {
            entries[i].1 -= 1;
            if entries[i].1 == 0 {
                entries.remove(i);
            }
        }
        Factorization { entries }
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return write!(f, "1");
        }
        for (i, (q, e)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " * ")?;
            }
            if *e == 1 {
                write!(f, "{q}")?;
            } else {
                write!(f, "{q}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Walks two sorted prime lists together, treating missing primes as exponent 0.
pub(crate) fn merge<'a>(u: &'a [(Integer, u32)], v: &'a [(Integer, u32)]) -> Vec<(&'a Integer, u32, u32)> {
    let mut out = Vec::with_capacity(u.len() + v.len());
    let (mut i, mut j) = (0, 0);
    while i < u.len() || j < v.len() {
        let ord = match (u.get(i), v.get(j)) {
            (Some(a), Some(b)) => a.0.cmp(&b.0),
            (Some(_), None) => Ordering::Less,
            (None, _) => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                out.push((&u[i].0, u[i].1, 0));
                i += 1;
            }
            Ordering::Greater => {
                out.push((&v[j].0, 0, v[j].1));
                j += 1;
            }
            Ordering::Equal => {
                out.push((&u[i].0, u[i].1, v[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Value of a factorization; see [`Factorization::value`].
pub fn value_of(f: &Factorization) -> Integer {
    f.value()
}

pub fn lcm_factorizations(u: &Factorization, v: &Factorization) -> Factorization {
    u.lcm(v)
}

/// Complete factorization of `m >= 1` by trial division.
pub fn trial_division_factor(m: &Integer) -> Factorization {
    let mut divisions = 0;
    trial_division_factor_counted(m, &mut divisions)
}

/// [`trial_division_factor`] that also reports the number of trial divisions.
///
/// Candidates are 2 and then the odd numbers, stopping once the candidate
/// exceeds the square root of the remaining cofactor.
pub fn trial_division_factor_counted(m: &Integer, divisions: &mut u64) -> Factorization {
    assert!(*m >= 1, "cannot factor {m}");
    match m.to_u64() {
        Some(small) => factor_u64(small, divisions),
        None => factor_big(m.clone(), divisions),
    }
}

fn factor_u64(mut n: u64, divisions: &mut u64) -> Factorization {
    let mut entries = Vec::new();
    let mut push = |q: u64, e: u32| entries.push((Integer::from(q), e));
    let mut q = 2u64;
    while q.saturating_mul(q) <= n {
        *divisions += 1;
        if n.is_multiple_of(q) {
            let mut e = 0;
            while n.is_multiple_of(q) {
                n /= q;
                e += 1;
                *divisions += 1;
            }
            push(q, e);
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        push(n, 1);
    }
    Factorization { entries }
}

fn factor_big(mut n: Integer, divisions: &mut u64) -> Factorization {
    let mut entries = Vec::new();
    let mut q = Integer::from(2);
    while Integer::from(q.square_ref()) <= n {
        *divisions += 1;
        if n.is_divisible(&q) {
            let mut e = 0;
            while n.is_divisible(&q) {
                n.div_exact_mut(&q);
                e += 1;
                *divisions += 1;
            }
            entries.push((q.clone(), e));
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        entries.push((n, 1));
    }
    Factorization { entries }
}
