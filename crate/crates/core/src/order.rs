//! Multiplicative orders in `(Z/NZ)^*`.
//!
//! [`OrderSearch::search_up_to`] is a babystep-giantstep search that decides
//! whether `ord(alpha) <= T` in `O(sqrt T)` group multiplications and, if so,
//! recovers the exact order. [`OrderSearch::bounded`] runs it with the doubling
//! schedule `T = 1, 2, 4, ...` so the cost tracks `min(ord, D)` rather than `D`.
//!
//! Every search records its multiplication count in an [`OrderStats`], which
//! checks it against the budget `C * sqrt(T)`.

use std::collections::HashMap;

use rug::ops::Pow;
use rug::Integer;

use crate::arith::{mul_mod_assign, pow_mod_counted, Residue};
use crate::error::{Error, Result};
use crate::factorize::{merge, trial_division_factor, Factorization};

/// Default constant in the per-call budget `C * sqrt(T)`.
pub const DEFAULT_BUDGET_CONSTANT: u64 = 24;

/// A unit together with its exact multiplicative order and that order's factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrderedElement {
    alpha: Residue,
    order: Integer,
    factorization: Factorization,
}

impl OrderedElement {
    /// The element 1, of order 1.
    pub fn identity(modulus: &Integer) -> Result<Self> {
        Ok(OrderedElement {
            alpha: Residue::one(modulus)?,
            order: Integer::from(1),
            factorization: Factorization::one(),
        })
    }

    /// Checks that `factorization` is exactly the order of `alpha`.
    pub fn new(alpha: Residue, factorization: Factorization) -> Result<Self> {
        let element = OrderedElement { order: factorization.value(), alpha, factorization };
        if !element.is_consistent() {
            return Err(Error::Domain(format!(
                "{} is not the order of {}",
                element.order, element.alpha
            )));
        }
        Ok(element)
    }

    pub(crate) fn new_unchecked(alpha: Residue, factorization: Factorization) -> Self {
        let element = OrderedElement { order: factorization.value(), alpha, factorization };
        debug_assert!(element.is_consistent(), "bad order for {}", element.alpha);
        element
    }

    pub fn alpha(&self) -> &Residue {
        &self.alpha
    }

    pub fn order(&self) -> &Integer {
        &self.order
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    /// `alpha^M = 1` and `alpha^(M/q) != 1` for every prime `q | M`.
    pub fn is_consistent(&self) -> bool {
        if !self.alpha.pow(&self.order).is_one() {
            return false;
        }
        self.factorization.primes().all(|q| {
            let e = Integer::from(&self.order / q);
            !self.alpha.pow(&e).is_one()
        })
    }
}

/// Outcome of an order search against a bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundedOrderResult {
    /// The order is at most the bound and equals `order`.
    Exact { order: Integer, factorization: Factorization },
    /// The order exceeds the bound. When the search happened to pin the order
    /// down anyway it is reported in `known`.
    ExceedsBound { known: Option<(Integer, Factorization)> },
}

impl BoundedOrderResult {
    pub fn exact_order(&self) -> Option<&Integer> {
        match self {
            BoundedOrderResult::Exact { order, .. } => Some(order),
            BoundedOrderResult::ExceedsBound { .. } => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, BoundedOrderResult::Exact { .. })
    }

    fn classify(order: Integer, factorization: Factorization, bound: &Integer) -> Self {
        if order <= *bound {
            BoundedOrderResult::Exact { order, factorization }
        } else {
            BoundedOrderResult::ExceedsBound { known: Some((order, factorization)) }
        }
    }
}

/// Multiplication accounting across order searches.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderStats {
    pub budget_constant: u64,
    pub calls: u64,
    pub multiplications: u64,
    /// Largest observed `mults / sqrt(T)`.
    pub worst_ratio: f64,
    /// Calls whose count exceeded `budget_constant * sqrt(T)`.
    pub budget_violations: u64,
}

impl OrderStats {
    pub fn new(budget_constant: u64) -> Self {
        OrderStats { budget_constant, calls: 0, multiplications: 0, worst_ratio: 0.0, budget_violations: 0 }
    }

    fn record(&mut self, bound: &Integer, mults: u64) {
        self.calls += 1;
        self.multiplications += mults;
        let ratio = mults as f64 / bound.to_f64().sqrt();
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
        }
        // mults > C * sqrt(T)  <=>  mults^2 > C^2 * T, decided exactly.
        let lhs = Integer::from(mults) * mults;
        let rhs = Integer::from(self.budget_constant * self.budget_constant) * bound;
        if lhs > rhs {
            log::warn!("order search used {mults} multiplications for T = {bound}");
            self.budget_violations += 1;
        }
    }

    pub fn absorb(&mut self, other: &OrderStats) {
        self.calls += other.calls;
        self.multiplications += other.multiplications;
        self.worst_ratio = self.worst_ratio.max(other.worst_ratio);
        self.budget_violations += other.budget_violations;
    }
}

impl Default for OrderStats {
    fn default() -> Self {
        OrderStats::new(DEFAULT_BUDGET_CONSTANT)
    }
}

/// Order-search strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct OrderSearch {
    /// Restrict baby steps to exponents coprime to a small primorial after
    /// stripping those primes from the order. Same results, fewer multiplications.
    pub primorial_steps: bool,
}

impl OrderSearch {
    pub fn new(primorial_steps: bool) -> Self {
        OrderSearch { primorial_steps }
    }

    /// Decides whether `ord(alpha) <= bound` and returns the exact order if so.
    pub fn search_up_to(&self, alpha: &Residue, bound: &Integer, stats: &mut OrderStats) -> Result<BoundedOrderResult> {
        check_unit(alpha)?;
        if *bound < 1 {
            return Err(Error::Domain(format!("search bound must be positive, got {bound}")));
        }
        let mut mults = 0;
        let result = if alpha.is_one() {
            Ok(BoundedOrderResult::Exact { order: Integer::from(1), factorization: Factorization::one() })
        } else if self.primorial_steps {
            primorial_search(alpha, bound, &mut mults)
        } else {
            plain_search(alpha, bound, &mut mults)
        };
        stats.record(bound, mults);
        result
    }

    /// Searches with bounds `1, 2, 4, ..., 2^ceil(log2 D)`, stopping at the first
    /// hit. `Exact` is returned only for orders `<= D`.
    pub fn bounded(&self, alpha: &Residue, d: &Integer, stats: &mut OrderStats) -> Result<BoundedOrderResult> {
        check_unit(alpha)?;
        if *d < 1 {
            return Err(Error::Domain(format!("order bound must be positive, got {d}")));
        }
        let mut t = Integer::from(1);
        loop {
            match self.search_up_to(alpha, &t, stats)? {
                BoundedOrderResult::Exact { order, factorization }
                | BoundedOrderResult::ExceedsBound { known: Some((order, factorization)) } => {
                    return Ok(BoundedOrderResult::classify(order, factorization, d));
                }
                BoundedOrderResult::ExceedsBound { known: None } => {
                    if t >= *d {
                        return Ok(BoundedOrderResult::ExceedsBound { known: None });
                    }
                    t <<= 1;
                }
            }
        }
    }
}

/// [`OrderSearch::search_up_to`] with the default strategy and throwaway stats.
pub fn order_search_up_to(alpha: &Residue, bound: &Integer) -> Result<BoundedOrderResult> {
    OrderSearch::default().search_up_to(alpha, bound, &mut OrderStats::default())
}

/// [`OrderSearch::bounded`] with the default strategy and throwaway stats.
pub fn order_bounded(alpha: &Residue, d: &Integer) -> Result<BoundedOrderResult> {
    OrderSearch::default().bounded(alpha, d, &mut OrderStats::default())
}

fn check_unit(alpha: &Residue) -> Result<()> {
    if alpha.is_invertible() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("{alpha} is not invertible")))
    }
}

fn ceil_sqrt_u64(t: &Integer) -> Result<u64> {
    let r = crate::arith::integer_root_ceil(t, 2);
    r.to_u64()
        .ok_or_else(|| Error::Domain(format!("search bound {t} is too large for a babystep table")))
}

/// Baby-step table keyed by residue. Moduli below 2^64 use the value itself as key.
enum StepTable {
    Word(HashMap<u64, u64>),
    Wide(HashMap<Integer, u64>),
}

impl StepTable {
    fn new(modulus: &Integer, capacity: u64) -> Self {
        let capacity = capacity.min(1 << 24) as usize;
        if modulus.significant_bits() <= 64 {
            StepTable::Word(HashMap::with_capacity(capacity))
        } else {
            StepTable::Wide(HashMap::with_capacity(capacity))
        }
    }

    fn insert(&mut self, x: &Integer, j: u64) {
        match self {
            StepTable::Word(map) => {
                map.entry(x.to_u64_wrapping()).or_insert(j);
            }
            StepTable::Wide(map) => {
                map.entry(x.clone()).or_insert(j);
            }
        }
    }

    fn get(&self, x: &Integer) -> Option<u64> {
        match self {
            StepTable::Word(map) => map.get(&x.to_u64_wrapping()).copied(),
            StepTable::Wide(map) => map.get(x).copied(),
        }
    }
}

/// Plain babystep-giantstep with `b = ceil(sqrt T)`: baby steps `alpha^j` for
/// `0 <= j < b`, giant steps `alpha^(i b)` for `1 <= i <= ceil(T / b)`.
fn plain_search(alpha: &Residue, bound: &Integer, mults: &mut u64) -> Result<BoundedOrderResult> {
    let n = alpha.modulus();
    let a = alpha.value();
    let b = ceil_sqrt_u64(bound)?;
    let giants = (Integer::from(bound + b) - 1u32) / b;
    let giants = giants.to_u64().expect("giant step count fits when baby step count does");

    let mut table = StepTable::new(n, b);
    let mut x = Integer::from(1);
    table.insert(&x, 0);
    for j in 1..=b {
        mul_mod_assign(&mut x, a, n, mults);
        if x == 1 {
            // First return to 1: j is the order itself.
            let order = Integer::from(j);
            let factorization = trial_division_factor(&order);
            return Ok(BoundedOrderResult::classify(order, factorization, bound));
        }
        if j < b {
            table.insert(&x, j);
        }
    }

    let gamma = x;
    let mut y = gamma.clone();
    for i in 1..=giants {
        if i > 1 {
            mul_mod_assign(&mut y, &gamma, n, mults);
        }
        if let Some(j) = table.get(&y) {
            let e = Integer::from(i) * b - j;
            let f = trial_division_factor(&e);
            let (order, factorization) = refine_unchecked(a, n, e, &f, mults);
            return Ok(BoundedOrderResult::classify(order, factorization, bound));
        }
    }
    Ok(BoundedOrderResult::ExceedsBound { known: None })
}

const SMALL_PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Babystep-giantstep over exponents coprime to a primorial `P`.
///
/// With `E` the product of the largest powers `p^k <= T` of the primes `p | P`,
/// `beta = alpha^E` has order `m'` equal to `ord(alpha)` with those primes
/// removed (provided `ord(alpha) <= T`). Since `m'` is coprime to `P`, only
/// baby steps `beta^j` with `gcd(j, P) = 1` are needed when the giant stride is
/// a multiple of `P`. The order of `alpha^m'` divides `E` and is recovered by
/// refinement.
fn primorial_search(alpha: &Residue, bound: &Integer, mults: &mut u64) -> Result<BoundedOrderResult> {
    let n = alpha.modulus();
    let a = alpha.value();

    let mut primorial = 1u64;
    let mut primes = Vec::new();
    for &p in &SMALL_PRIMES {
        let next = primorial * p;
        if Integer::from(next) * next > *bound {
            break;
        }
        primorial = next;
        primes.push(p);
    }
    if primes.is_empty() {
        return plain_search(alpha, bound, mults);
    }

    // E and its factorization.
    let mut strip_entries = Vec::with_capacity(primes.len());
    for &p in &primes {
        let mut k = 0u32;
        let mut pk = Integer::from(1);
        while Integer::from(&pk * p) <= *bound {
            pk *= p;
            k += 1;
        }
        strip_entries.push((Integer::from(p), k));
    }
    let strip = Factorization::from_entries_unchecked(strip_entries);
    let strip_value = strip.value();
    let beta = pow_mod_counted(a, &strip_value, n, mults);

    let (coprime_order, coprime_fact) = if beta == 1 {
        (Integer::from(1), Factorization::one())
    } else {
        match coprime_part_order(&beta, n, bound, primorial, mults)? {
            Some(found) => found,
            None => return Ok(BoundedOrderResult::ExceedsBound { known: None }),
        }
    };

    // ord(alpha) = m' * ord(alpha^m'), and ord(alpha^m') | E whenever ord(alpha) <= T.
    let delta = pow_mod_counted(a, &coprime_order, n, mults);
    if pow_mod_counted(&delta, &strip_value, n, mults) != 1 {
        return Ok(BoundedOrderResult::ExceedsBound { known: None });
    }
    let (rest_order, rest_fact) = refine_unchecked(&delta, n, strip_value, &strip, mults);
    let order = coprime_order * rest_order;
    let factorization = coprime_fact.lcm(&rest_fact);
    Ok(BoundedOrderResult::classify(order, factorization, bound))
}

/// Order of `beta` (known to be coprime to `primorial`) if it is at most `bound`.
fn coprime_part_order(
    beta: &Integer,
    n: &Integer,
    bound: &Integer,
    primorial: u64,
    mults: &mut u64,
) -> Result<Option<(Integer, Factorization)>> {
    let coprime: Vec<bool> = (0..primorial).map(|j| num_gcd(j, primorial) == 1).collect();
    let phi = coprime.iter().filter(|&&c| c).count() as u64;

    // Stride b (a multiple of P) balancing phi(P)/P * b baby steps against T/b giant steps.
    let target = {
        let scaled = Integer::from(bound * primorial) / phi;
        crate::arith::integer_root_ceil(&scaled, 2)
    };
    let blocks = (Integer::from(&target + primorial) - 1u32) / primorial;
    let b = blocks
        .to_u64()
        .and_then(|k| k.max(1).checked_mul(primorial))
        .ok_or_else(|| Error::Domain(format!("search bound {bound} is too large for a babystep table")))?;
    let giants = ((Integer::from(bound + b) - 1u32) / b).to_u64().expect("giant count fits");

    // beta^g for every gap g between consecutive exponents coprime to P.
    let mut max_gap = 1u64;
    let mut last = 1u64;
    for j in 2..=primorial + 1 {
        if coprime[(j % primorial) as usize] {
            max_gap = max_gap.max(j - last);
            last = j;
        }
    }
    let mut gap_powers = Vec::with_capacity(max_gap as usize + 1);
    gap_powers.push(Integer::from(1));
    gap_powers.push(beta.clone());
    for g in 2..=max_gap as usize {
        let mut next = gap_powers[g - 1].clone();
        mul_mod_assign(&mut next, beta, n, mults);
        gap_powers.push(next);
    }

    let mut table = StepTable::new(n, b * phi / primorial);
    let mut x = beta.clone();
    let mut prev = 1u64;
    for j in 1..b {
        if !coprime[(j % primorial) as usize] {
            continue;
        }
        if j != 1 {
            mul_mod_assign(&mut x, &gap_powers[(j - prev) as usize], n, mults);
        }
        prev = j;
        if x == 1 {
            // The order is coprime to P, so the first coprime exponent hitting 1 is the order.
            let order = Integer::from(j);
            let factorization = trial_division_factor(&order);
            return Ok((order <= *bound).then_some((order, factorization)));
        }
        table.insert(&x, j);
    }

    let gamma = pow_mod_counted(beta, &Integer::from(b), n, mults);
    let mut y = gamma.clone();
    for i in 1..=giants {
        if i > 1 {
            mul_mod_assign(&mut y, &gamma, n, mults);
        }
        if let Some(j) = table.get(&y) {
            let e = Integer::from(i) * b - j;
            let f = trial_division_factor(&e);
            let (order, factorization) = refine_unchecked(beta, n, e, &f, mults);
            return Ok((order <= *bound).then_some((order, factorization)));
        }
    }
    Ok(None)
}

fn num_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Reduces an annihilating exponent `e` (with `alpha^e = 1`) to the exact order
/// of `alpha`, stripping primes in increasing order.
pub fn refine_order(alpha: &Residue, e: &Integer, f: &Factorization) -> Result<(Integer, Factorization)> {
    if f.value() != *e {
        return Err(Error::Domain(format!("factorization {f} does not match exponent {e}")));
    }
    if !alpha.pow(e).is_one() {
        return Err(Error::Internal(format!("{alpha} raised to {e} is not 1")));
    }
    let mut mults = 0;
    Ok(refine_unchecked(alpha.value(), alpha.modulus(), e.clone(), f, &mut mults))
}

fn refine_unchecked(a: &Integer, n: &Integer, e: Integer, f: &Factorization, mults: &mut u64) -> (Integer, Factorization) {
    let mut m = e;
    let mut fact = f.clone();
    for (q, k) in f.entries() {
        for _ in 0..*k {
            let candidate = Integer::from(&m / q);
            if pow_mod_counted(a, &candidate, n, mults) == 1 {
                m = candidate;
                fact = fact.divided_by_prime(q);
            } else {
                break;
            }
        }
    }
    (m, fact)
}

/// The two coprime-order pieces whose product has order `lcm(u, v)`:
/// `alpha^s` of order `prod_{e_i >= f_i} q_i^e_i` and `beta^t` of order
/// `prod_{e_i < f_i} q_i^f_i`, where `u = prod q_i^e_i`, `v = prod q_i^f_i`.
pub fn lcm_parts(a: &OrderedElement, b: &OrderedElement) -> Result<(OrderedElement, OrderedElement)> {
    let n = a.alpha.modulus();
    if n != b.alpha.modulus() {
        return Err(Error::Domain(format!(
            "elements live modulo different numbers ({} and {})",
            n,
            b.alpha.modulus()
        )));
    }
    let mut s = Integer::from(1);
    let mut t = Integer::from(1);
    let mut alpha_part = Vec::new();
    let mut beta_part = Vec::new();
    for (q, e, f) in merge(a.factorization.entries(), b.factorization.entries()) {
        if e < f {
            s *= Integer::from(Pow::pow(q, e));
            beta_part.push((q.clone(), f));
        } else {
            t *= Integer::from(Pow::pow(q, f));
            if e > 0 {
                alpha_part.push((q.clone(), e));
            }
        }
    }
    let mut mults = 0;
    let alpha_tilde = Residue::from_reduced(pow_mod_counted(a.alpha.value(), &s, n, &mut mults), n);
    let beta_tilde = Residue::from_reduced(pow_mod_counted(b.alpha.value(), &t, n, &mut mults), n);
    Ok((
        OrderedElement::new_unchecked(alpha_tilde, Factorization::from_entries_unchecked(alpha_part)),
        OrderedElement::new_unchecked(beta_tilde, Factorization::from_entries_unchecked(beta_part)),
    ))
}

/// An element of order `lcm(ord A, ord B)` together with that order's factorization.
pub fn combine_orders(a: &OrderedElement, b: &OrderedElement) -> Result<OrderedElement> {
    let (alpha_tilde, beta_tilde) = lcm_parts(a, b)?;
    let gamma = alpha_tilde.alpha.mul(&beta_tilde.alpha)?;
    Ok(OrderedElement::new_unchecked(gamma, a.factorization.lcm(&b.factorization)))
}

/// `gcd(beta^(m/r) - 1, N)` for one prime `r | m`.
pub fn split_gcd(beta: &Residue, m: &Integer, r: &Integer) -> Result<Integer> {
    if !m.is_divisible(r) {
        return Err(Error::Domain(format!("{r} does not divide {m}")));
    }
    let n = beta.modulus();
    let e = Integer::from(m / r);
    let mut x = beta.pow(&e).into_value();
    x -= 1;
    if x < 0 {
        x += n;
    }
    Ok(Integer::from(x.gcd_ref(n)))
}

/// Tries each prime `r | m` in increasing order and returns the first
/// `gcd(beta^(m/r) - 1, N) != 1`. Requires `m = ord(beta)` exactly, which
/// guarantees the gcd is never `N`; a gcd of `N` is reported as an internal error.
pub fn try_split_via_order(beta: &Residue, m: &Integer, f: &Factorization) -> Result<Option<Integer>> {
    for r in f.primes() {
        let g = split_gcd(beta, m, r)?;
        if g == *beta.modulus() {
            return Err(Error::Internal(format!(
                "{beta} to the power {m}/{r} is 1, so {m} is not its exact order"
            )));
        }
        if g != 1 {
            debug_assert!(g > 1 && g < *beta.modulus());
            return Ok(Some(g));
        }
    }
    Ok(None)
}
