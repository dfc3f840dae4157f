//! The main search: given `N >= 3` and `1 <= D < N - 1`, find a unit of order
//! greater than `D` or a nontrivial divisor of `N`.
//!
//! Stages, in order:
//!
//! 1. `N` below the configured threshold is answered by direct computation.
//! 2. Even `N` yields the divisor 2.
//! 3. `2^D < N` yields the element 2, whose order is then at least `log2 N > D`.
//! 4. For `beta = 2, ..., B` with `B = ceil(D^(1/3))`, the order `m` of each
//!    `beta` is searched up to `D`. Along the way `beta | N` or a gcd test on
//!    `beta^(m/r) - 1` may reveal a divisor; otherwise `beta` is merged into a
//!    running element `alpha` of order `M = lcm` of the orders seen so far.
//! 5. If `M` never exceeds `D`, every prime `p | N` satisfies `p = 1 (mod M)` and
//!    `p <= Z` for the certified bound `Z`, so candidates `kM + 1` are tested.
//! 6. If that scan finds nothing (possible only for small inputs), a direct
//!    fallback answers and is counted in the trace.

use std::fmt;

use rug::Integer;

use crate::arith::{bit_length, integer_root_ceil, Residue};
use crate::error::{Error, Result};
use crate::oracle::{ord_oracle_u64, smallest_factor_u64};
use crate::order::{combine_orders, try_split_via_order, BoundedOrderResult, OrderSearch, OrderStats, OrderedElement};
use crate::smooth::scan_bound;

pub const DEFAULT_SMALL_N_THRESHOLD: u64 = 1 << 16;

/// Either a unit of order greater than `D` or a nontrivial divisor of `N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    /// `known_order` is the exact order when the engine computed it.
    LargeOrderElement { alpha: Residue, known_order: Option<Integer> },
    NontrivialDivisor(Integer),
}

impl SearchOutcome {
    pub fn is_element(&self) -> bool {
        matches!(self, SearchOutcome::LargeOrderElement { .. })
    }

    pub fn is_divisor(&self) -> bool {
        matches!(self, SearchOutcome::NontrivialDivisor(_))
    }

    /// The returned element or divisor.
    pub fn value(&self) -> &Integer {
        match self {
            SearchOutcome::LargeOrderElement { alpha, .. } => alpha.value(),
            SearchOutcome::NontrivialDivisor(d) => d,
        }
    }

    fn element(beta: u64, n: &Integer, known_order: Option<Integer>) -> Self {
        SearchOutcome::LargeOrderElement {
            alpha: Residue::from_reduced(Integer::from(beta), n),
            known_order,
        }
    }
}

impl fmt::Display for SearchOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchOutcome::LargeOrderElement { alpha, known_order: Some(k) } => {
                write!(f, "element {} of order {k}", alpha.value())
            }
            SearchOutcome::LargeOrderElement { alpha, known_order: None } => write!(f, "element {}", alpha.value()),
            SearchOutcome::NontrivialDivisor(d) => write!(f, "divisor {d}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    /// Inputs `N` below this are answered directly. Must be at least 3.
    pub small_n_threshold: u64,
    /// Budget constant `C` for order searches (`C * sqrt(T)` multiplications).
    pub bsgs_constant: u64,
    pub enable_primorial_optimization: bool,
    /// Record per-iteration details.
    pub trace: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            small_n_threshold: DEFAULT_SMALL_N_THRESHOLD,
            bsgs_constant: crate::order::DEFAULT_BUDGET_CONSTANT,
            enable_primorial_optimization: false,
            trace: false,
        }
    }
}

impl EngineConfig {
    pub fn with_threshold(mut self, threshold: u64) -> Self {
        self.small_n_threshold = threshold;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn with_primorial(mut self, enabled: bool) -> Self {
        self.enable_primorial_optimization = enabled;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.small_n_threshold < 3 {
            return Err(Error::Domain(format!(
                "small_n_threshold must be at least 3, got {}",
                self.small_n_threshold
            )));
        }
        Ok(())
    }
}

/// What happened to one `beta` in the main loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    /// `beta | N`; returned as divisor.
    DividesN,
    /// `beta^M = 1`; nothing to learn from this `beta`.
    BetaToMSkip,
    /// The order of `beta` exceeds `D`; returned as element.
    MExceeds,
    /// A gcd test produced a divisor.
    GcdSplit,
    /// The order `m <= D` was merged into the running element.
    LcmUpdate,
    /// After merging, `M > D`; the running element was returned.
    MExceedsD,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::DividesN => "divides_N",
            Branch::BetaToMSkip => "beta_to_M_skip",
            Branch::MExceeds => "m_exceeds",
            Branch::GcdSplit => "gcd_split",
            Branch::LcmUpdate => "lcm_update",
            Branch::MExceedsD => "M_exceeds",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationRecord {
    pub beta: u64,
    pub branch: Branch,
    /// Exact order of `beta`, when it was found to be at most `D`.
    pub m: Option<Integer>,
    pub alpha_after: Integer,
    pub m_after: Integer,
}

/// Where the engine returned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExitPath {
    SmallN,
    EvenN,
    SmallD,
    BetaDividesN,
    OrderExceedsD,
    GcdSplit,
    LcmExceedsD,
    ProgressionScan,
    DefensiveFallback,
}

impl ExitPath {
    pub fn name(self) -> &'static str {
        match self {
            ExitPath::SmallN => "small_n",
            ExitPath::EvenN => "even_n",
            ExitPath::SmallD => "small_d",
            ExitPath::BetaDividesN => "beta_divides_n",
            ExitPath::OrderExceedsD => "order_exceeds_d",
            ExitPath::GcdSplit => "gcd_split",
            ExitPath::LcmExceedsD => "lcm_exceeds_d",
            ExitPath::ProgressionScan => "progression_scan",
            ExitPath::DefensiveFallback => "defensive_fallback",
        }
    }
}

/// State on reaching the progression scan.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinalStage {
    pub m: Integer,
    pub b: u64,
    pub z: Integer,
    /// `k` such that `kM + 1` divided `N`, if the scan succeeded.
    pub k_hit: Option<Integer>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineTrace {
    /// Per-`beta` records; filled only when tracing is enabled.
    pub iterations: Vec<IterationRecord>,
    pub smoothness_bound: Option<u64>,
    pub final_stage: Option<FinalStage>,
    pub exit: ExitPath,
    pub fallback_count: u32,
    pub order_stats: OrderStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineRun {
    pub outcome: SearchOutcome,
    pub trace: EngineTrace,
}

struct Run<'a> {
    n: &'a Integer,
    d: &'a Integer,
    config: &'a EngineConfig,
    trace: EngineTrace,
}

impl Run<'_> {
    fn finish(mut self, exit: ExitPath, outcome: SearchOutcome) -> EngineRun {
        self.trace.exit = exit;
        EngineRun { outcome, trace: self.trace }
    }

    fn record(&mut self, beta: u64, branch: Branch, m: Option<&Integer>, alpha: &OrderedElement) {
        if self.config.trace {
            self.trace.iterations.push(IterationRecord {
                beta,
                branch,
                m: m.cloned(),
                alpha_after: alpha.alpha().value().clone(),
                m_after: alpha.order().clone(),
            });
        }
    }
}

fn check_inputs(n: &Integer, d: &Integer) -> Result<()> {
    if *n < 3 {
        return Err(Error::Precondition(format!("N must be at least 3, got {n}")));
    }
    if *d < 1 || *d >= Integer::from(n - 1u32) {
        return Err(Error::Precondition(format!("D must satisfy 1 <= D < N - 1, got D = {d}, N = {n}")));
    }
    Ok(())
}

/// `2^D < N`, decided from bit lengths.
fn two_to_d_below(n: &Integer, d: &Integer) -> bool {
    let len = bit_length(n);
    // 2^(len-1) <= N < 2^len
    match d.to_u32() {
        Some(d) if d + 1 < len => true,
        Some(d) if d + 1 == len => !n.is_power_of_two(),
        _ => false,
    }
}

/// Finds a unit modulo `n` of order greater than `d`, or a nontrivial divisor of `n`.
pub fn find_large_order(n: &Integer, d: &Integer, config: &EngineConfig) -> Result<EngineRun> {
    check_inputs(n, d)?;
    config.validate()?;
    let mut run = Run {
        n,
        d,
        config,
        trace: EngineTrace {
            iterations: Vec::new(),
            smoothness_bound: None,
            final_stage: None,
            exit: ExitPath::SmallN,
            fallback_count: 0,
            order_stats: OrderStats::new(config.bsgs_constant),
        },
    };

    if *n < config.small_n_threshold {
        let outcome = small_n_fallback(n, d)?;
        return Ok(run.finish(ExitPath::SmallN, outcome));
    }
    if n.is_even() {
        return Ok(run.finish(ExitPath::EvenN, SearchOutcome::NontrivialDivisor(Integer::from(2))));
    }
    if two_to_d_below(n, d) {
        return Ok(run.finish(ExitPath::SmallD, SearchOutcome::element(2, n, None)));
    }

    // Past the line above, 2^D >= N >= 3, so D >= 2 and B >= 2.
    let b = integer_root_ceil(d, 3)
        .to_u64()
        .ok_or_else(|| Error::Domain(format!("D = {d} is too large to enumerate beta up to D^(1/3)")))?;
    run.trace.smoothness_bound = Some(b);
    main_loop(run, b)
}

fn main_loop(mut run: Run<'_>, b: u64) -> Result<EngineRun> {
    let (n, d) = (run.n, run.d);
    let search = OrderSearch::new(run.config.enable_primorial_optimization);
    let mut alpha = OrderedElement::identity(n)?;

    for beta in 2..=b {
        if n.is_divisible(&Integer::from(beta)) {
            debug_assert!(*n > beta);
            run.record(beta, Branch::DividesN, None, &alpha);
            return Ok(run.finish(ExitPath::BetaDividesN, SearchOutcome::NontrivialDivisor(Integer::from(beta))));
        }
        let beta_res = Residue::from_reduced(Integer::from(beta), n);
        if beta_res.pow(alpha.order()).is_one() {
            run.record(beta, Branch::BetaToMSkip, None, &alpha);
            continue;
        }
        let (m, m_fact) = match search.bounded(&beta_res, d, &mut run.trace.order_stats)? {
            BoundedOrderResult::ExceedsBound { known } => {
                run.record(beta, Branch::MExceeds, None, &alpha);
                let known_order = known.map(|(order, _)| order);
                return Ok(run.finish(ExitPath::OrderExceedsD, SearchOutcome::element(beta, n, known_order)));
            }
            BoundedOrderResult::Exact { order, factorization } => (order, factorization),
        };
        if let Some(divisor) = try_split_via_order(&beta_res, &m, &m_fact)? {
            run.record(beta, Branch::GcdSplit, Some(&m), &alpha);
            return Ok(run.finish(ExitPath::GcdSplit, SearchOutcome::NontrivialDivisor(divisor)));
        }
        let beta_elem = OrderedElement::new_unchecked(beta_res, m_fact);
        alpha = combine_orders(&alpha, &beta_elem)?;
        if alpha.order() > d {
            run.record(beta, Branch::MExceedsD, Some(&m), &alpha);
            let outcome = SearchOutcome::LargeOrderElement {
                alpha: alpha.alpha().clone(),
                known_order: Some(alpha.order().clone()),
            };
            return Ok(run.finish(ExitPath::LcmExceedsD, outcome));
        }
        run.record(beta, Branch::LcmUpdate, Some(&m), &alpha);
    }

    let m = alpha.order().clone();
    let z = scan_bound(&m, &Integer::from(b))?;
    let hit = final_progression_scan(n, &m, &z);
    run.trace.final_stage = Some(FinalStage {
        m,
        b,
        z,
        k_hit: hit.as_ref().map(|(_, k)| k.clone()),
    });
    if let Some((divisor, _)) = hit {
        return Ok(run.finish(ExitPath::ProgressionScan, SearchOutcome::NontrivialDivisor(divisor)));
    }

    run.trace.fallback_count += 1;
    log::warn!("progression scan exhausted for N = {n}, D = {d}; using the direct fallback");
    let outcome = defensive_fallback(n, d, &search, &mut run.trace.order_stats)?;
    Ok(run.finish(ExitPath::DefensiveFallback, outcome))
}

/// Tests `kM + 1` for `k = 1, ..., floor(Z / M)` and returns the first proper
/// divisor of `N` with its `k`. Candidates at or above `N` are not divisors in
/// `(1, N)`, and candidates only grow, so the scan stops there.
pub fn final_progression_scan(n: &Integer, m: &Integer, z: &Integer) -> Option<(Integer, Integer)> {
    assert!(*m >= 1, "progression step must be positive");
    let k_max = Integer::from(z / m);
    let mut k = Integer::from(1);
    let mut candidate = Integer::from(m + 1u32);
    while k <= k_max && candidate < *n {
        if n.is_divisible(&candidate) {
            return Some((candidate, k));
        }
        k += 1;
        candidate += m;
    }
    None
}

/// Direct answer for small `N`: its least prime factor if composite, otherwise
/// the least `beta` whose order exceeds `D` (a primitive root qualifies).
pub fn small_n_fallback(n: &Integer, d: &Integer) -> Result<SearchOutcome> {
    check_inputs(n, d)?;
    let nn = n
        .to_u64()
        .ok_or_else(|| Error::Domain(format!("N = {n} is too large for direct computation")))?;
    let dd = d.to_u64().expect("D < N fits");
    let p = smallest_factor_u64(nn).expect("N >= 3");
    if p < nn {
        return Ok(SearchOutcome::NontrivialDivisor(Integer::from(p)));
    }
    for beta in 2..nn {
        let order = ord_oracle_u64(beta, nn)?;
        if order > dd {
            return Ok(SearchOutcome::element(beta, n, Some(Integer::from(order))));
        }
    }
    Err(Error::Internal(format!("no element of order above {d} modulo the prime {n}")))
}

/// Last-resort answer when the progression scan finds nothing: trial division,
/// then (for prime `N`) a scan of `beta` with bounded order searches.
pub fn defensive_fallback(
    n: &Integer,
    d: &Integer,
    search: &OrderSearch,
    stats: &mut OrderStats,
) -> Result<SearchOutcome> {
    let mut divisions = 0;
    let smallest = smallest_prime_factor(n, &mut divisions);
    if smallest < *n {
        return Ok(SearchOutcome::NontrivialDivisor(smallest));
    }
    let mut beta = Integer::from(2);
    while beta < *n {
        let beta_res = Residue::from_reduced(beta.clone(), n);
        if let BoundedOrderResult::ExceedsBound { known } = search.bounded(&beta_res, d, stats)? {
            return Ok(SearchOutcome::LargeOrderElement {
                alpha: beta_res,
                known_order: known.map(|(order, _)| order),
            });
        }
        beta += 1;
    }
    Err(Error::Internal(format!("no element of order above {d} modulo the prime {n}")))
}

fn smallest_prime_factor(n: &Integer, divisions: &mut u64) -> Integer {
    if n.is_even() {
        return Integer::from(2);
    }
    let mut q = Integer::from(3);
    while Integer::from(q.square_ref()) <= *n {
        *divisions += 1;
        if n.is_divisible(&q) {
            return q;
        }
        q += 2;
    }
    n.clone()
}
