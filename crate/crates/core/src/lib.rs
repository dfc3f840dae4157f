//! Deterministic search for an element of large multiplicative order modulo
//! `N`, or a nontrivial divisor of `N`.
//!
//! Given `N >= 3` and `1 <= D < N - 1`, [`find_large_order`] returns either some
//! `alpha` in `(Z/NZ)^*` with `ord_N(alpha) > D` or some `d` with `1 < d < N` and
//! `d | N`, using `O(sqrt D)` group operations up to logarithmic factors.
//!
//! ```
//! use largeorder_core::{find_large_order, EngineConfig, SearchOutcome};
//! use rug::Integer;
//!
//! let run = find_large_order(&Integer::from(217), &Integer::from(15),
//!                            &EngineConfig::default().with_threshold(3)).unwrap();
//! assert_eq!(run.outcome, SearchOutcome::NontrivialDivisor(Integer::from(31)));
//! ```

pub mod arith;
pub mod engine;
pub mod error;
pub mod factorize;
pub mod oracle;
pub mod order;
pub mod smooth;
pub mod sweep;

pub use arith::{gcd, gcd_cofactors, integer_root, integer_root_ceil, mod_pow, Residue};
pub use engine::{
    defensive_fallback, final_progression_scan, find_large_order, small_n_fallback, Branch, EngineConfig,
    EngineRun, EngineTrace, ExitPath, FinalStage, IterationRecord, SearchOutcome,
};
pub use error::{Error, Result};
pub use factorize::{lcm_factorizations, trial_division_factor, value_of, Factorization};
pub use oracle::{ord_oracle, primitive_root_oracle, verify_outcome, Verdict, VerificationReport};
pub use order::{
    combine_orders, order_bounded, order_search_up_to, refine_order, try_split_via_order, BoundedOrderResult,
    OrderSearch, OrderStats, OrderedElement,
};
pub use smooth::{compute_z, psi_brute, psi_lower_bound, scan_bound, ScanBound, SmoothBoundInput};
