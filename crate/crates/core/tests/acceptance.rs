//! Acceptance suite. Every criterion prints one `PASS` or `FAIL` line; the
//! process exits non-zero if any criterion fails.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use largeorder_core::oracle::{is_prime_u64, ord_oracle_u64};
use largeorder_core::order::lcm_parts;
use largeorder_core::smooth::{tilde_z_sandwich, SmoothSieve};
use largeorder_core::sweep::{map, verify_sweep, Mode, SweepSummary};
use largeorder_core::{
    combine_orders, compute_z, find_large_order, psi_lower_bound, trial_division_factor, BoundedOrderResult,
    EngineConfig, ExitPath, OrderSearch, OrderStats, OrderedElement, Residue, SearchOutcome, SmoothBoundInput,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::{Float, Integer};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// State shared between criteria that report on the same sweeps.
#[derive(Default)]
struct Shared {
    order_stats: OrderStats,
    full_sweep: Option<SweepSummary>,
    /// Runs that reached the final scan: (all, composite N).
    line17_runs: (u64, u64),
    line17_failures: Vec<String>,
}

/// Checks `p = 1 (mod M)` and `Psi(p, B) <= M` for every prime `p | N`.
fn final_scan_violations(n: u64, m: u64, b: u64, sieve: &SmoothSieve) -> Vec<String> {
    prime_factors(n)
        .into_iter()
        .filter(|&p| p % m != 1 || sieve.psi(p as u32, b) > m)
        .map(|p| format!("N={n} p={p} M={m} B={b}"))
        .collect()
}

fn full_sweep_inputs() -> Vec<(Integer, Integer)> {
    (3u64..=10_000)
        .step_by(2)
        .flat_map(|n| (1..=60.min(n - 2)).map(move |d| (Integer::from(n), Integer::from(d))))
        .collect()
}

fn prime_factors(n: u64) -> Vec<u64> {
    trial_division_factor(&Integer::from(n)).primes().map(|p| p.to_u64().unwrap()).collect()
}

fn full_sweep(shared: &mut Shared) -> Outcome {
    let inputs = full_sweep_inputs();
    let config = EngineConfig::default().with_threshold(3).with_trace(true);
    let sieve = SmoothSieve::new(10_000);
    let line17 = Mutex::new(((0u64, 0u64), Vec::new()));
    let start = Instant::now();
    let summary = verify_sweep(&inputs, &config, Mode::Parallel, |n, _d, checked| {
        let (Some(stage), n) = (&checked.run.trace.final_stage, n.to_u64().unwrap()) else { return };
        let bad = final_scan_violations(n, stage.m.to_u64().unwrap(), stage.b, &sieve);
        let mut guard = line17.lock().unwrap();
        guard.0 .0 += 1;
        guard.0 .1 += u64::from(!is_prime_u64(n));
        guard.1.extend(bad);
    });
    let elapsed = start.elapsed();
    let (runs, failures) = line17.into_inner().unwrap();
    shared.line17_runs = runs;
    shared.line17_failures = failures;
    shared.order_stats.absorb(&summary.order_stats);
    let pass = summary.all_passed() && elapsed < Duration::from_secs(600);
    let first = summary.failures.iter().chain(&summary.errors).next().cloned().unwrap_or_default();
    let detail = format!(
        "{}/{} runs verified in {:.1}s; exits {:?} {first}",
        summary.passed,
        summary.runs,
        elapsed.as_secs_f64(),
        summary.exits.iter().map(|(k, v)| (k.name(), *v)).collect::<Vec<_>>()
    );
    shared.full_sweep = Some(summary);
    outcome(pass, detail)
}

fn fallback_counter(shared: &mut Shared) -> Outcome {
    let summary = shared.full_sweep.as_ref().expect("full sweep runs first");
    let inputs = full_sweep_inputs();
    let config = EngineConfig::default().with_threshold(3);
    let hits: Vec<String> = map(&inputs, Mode::Parallel, |(n, d)| {
        let run = find_large_order(n, d, &config).unwrap();
        (run.trace.fallback_count > 0).then(|| format!("({n},{d})"))
    })
    .into_iter()
    .flatten()
    .collect();
    let shown: Vec<_> = hits.iter().take(8).cloned().collect();
    outcome(
        summary.fallback_total == 0,
        format!("defensive fallback taken {} times in the full sweep; first inputs {}", summary.fallback_total, shown.join(" ")),
    )
}

fn prime_guarantee(shared: &mut Shared) -> Outcome {
    let primes: Vec<u64> = (3..100_000).filter(|&n| is_prime_u64(n)).collect();
    let mut inputs = Vec::new();
    for &p in &primes {
        let cube = largeorder_core::integer_root(&Integer::from(p), 3);
        let sqrt = largeorder_core::integer_root(&Integer::from(p), 2);
        let mut ds = vec![Integer::from(1), cube, sqrt, Integer::from(p - 2)];
        ds.dedup();
        inputs.extend(ds.into_iter().map(|d| (Integer::from(p), d)));
    }
    let config = EngineConfig::default();
    let summary = verify_sweep(&inputs, &config, Mode::Parallel, |_, _, _| {});
    shared.order_stats.absorb(&summary.order_stats);
    let divisors = map(&inputs, Mode::Parallel, |(n, d)| {
        find_large_order(n, d, &config).map(|r| r.outcome.is_divisor()).unwrap_or(true)
    })
    .into_iter()
    .filter(|&x| x)
    .count();
    outcome(
        summary.all_passed() && divisors == 0,
        format!("{} primes, {}/{} verified elements, {divisors} divisors returned", primes.len(), summary.passed, summary.runs),
    )
}

fn bounded_equivalence(shared: &mut Shared) -> Outcome {
    const BOUNDS: [u64; 5] = [1, 2, 5, 37, 2000];
    let moduli: Vec<u64> = (2..=2000).collect();
    let search = OrderSearch::default();
    let results = map(&moduli, Mode::Parallel, |&n| {
        let mut stats = OrderStats::default();
        let mut checked = 0u64;
        let mut mismatches = Vec::new();
        let modulus = Integer::from(n);
        for a in 1..n {
            let Ok(exact) = ord_oracle_u64(a, n) else { continue };
            let alpha = Residue::new(a, &modulus).unwrap();
            for t in BOUNDS {
                checked += 1;
                let got = search.bounded(&alpha, &Integer::from(t), &mut stats).unwrap();
                let ok = match &got {
                    BoundedOrderResult::Exact { order, factorization } => {
                        exact <= t && *order == exact && factorization.value() == exact
                    }
                    BoundedOrderResult::ExceedsBound { .. } => exact > t,
                };
                if !ok {
                    mismatches.push(format!("a={a} N={n} T={t} oracle={exact} got {got:?}"));
                }
            }
        }
        (checked, mismatches, stats)
    });
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (c, m, stats) in results {
        checked += c;
        mismatches.extend(m);
        shared.order_stats.absorb(&stats);
    }
    outcome(
        mismatches.is_empty(),
        format!("{checked} (alpha, T) pairs, {} mismatches {}", mismatches.len(), mismatches.first().cloned().unwrap_or_default()),
    )
}

fn lcm_combination(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x2024);
    let mut failures = Vec::new();
    let mut done = 0;
    while done < 1000 {
        let n = rng.gen_range(3u64..=10_000);
        let (a, b) = (rng.gen_range(1..n), rng.gen_range(1..n));
        let (Ok(u), Ok(v)) = (ord_oracle_u64(a, n), ord_oracle_u64(b, n)) else { continue };
        done += 1;
        let element = |x: u64, k: u64| {
            OrderedElement::new(Residue::new(x, n).unwrap(), trial_division_factor(&Integer::from(k))).unwrap()
        };
        let (ea, eb) = (element(a, u), element(b, v));
        let lcm = Integer::from(u).lcm(&Integer::from(v));
        let gamma = combine_orders(&ea, &eb).unwrap();
        let (pa, pb) = lcm_parts(&ea, &eb).unwrap();
        let oracle = |e: &OrderedElement| ord_oracle_u64(e.alpha().value().to_u64().unwrap(), n).unwrap();
        let (ka, kb, kg) = (oracle(&pa), oracle(&pb), oracle(&gamma));
        let coprime = Integer::from(ka).gcd(&Integer::from(kb)) == 1;
        if kg != lcm || *gamma.order() != lcm || !coprime || Integer::from(ka) * kb != lcm {
            failures.push(format!("N={n} a={a} b={b} u={u} v={v} got {kg} parts {ka},{kb}"));
        }
    }
    outcome(failures.is_empty(), format!("{done} instances, {} failures {}", failures.len(), failures.first().cloned().unwrap_or_default()))
}

fn psi_lower_bound_check(_: &mut Shared) -> Outcome {
    const X: u32 = 10_000;
    let sieve = SmoothSieve::new(X);
    let ys: Vec<u64> = (2..=u64::from(X)).collect();
    let violations: Vec<(u64, u64, u32, f64)> = map(&ys, Mode::Parallel, |&y| {
        let counts = sieve.psi_prefix(y);
        (y.max(4)..=u64::from(X))
            .filter_map(|x| {
                let bound = psi_lower_bound(x as f64, y as f64).unwrap();
                let exact = counts[x as usize];
                (bound > f64::from(exact)).then_some((x, y, exact, bound))
            })
            .collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let pairs: u64 = ys.iter().map(|&y| u64::from(X) + 1 - y.max(4)).sum();
    outcome(violations.is_empty(), format!("{pairs} (x, y) pairs, {} violations {:?}", violations.len(), violations.first()))
}

fn tilde_z_direct(m: u64, b: u64, prec: u32) -> Float {
    use rug::ops::Pow;
    let log2m = Float::with_val(prec, Float::with_val(prec, 2 * m as u128).ln_ref());
    let exponent = Float::with_val(prec, &log2m / (Float::with_val(prec, b).ln() - 1u32));
    Float::with_val(prec, 2 * m as u128) * Float::with_val(prec, Pow::pow(&log2m, &exponent))
}

fn z_bracket(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut failures = Vec::new();
    for _ in 0..1000 {
        let m_bits = rng.gen_range(2..=64);
        let m = rng.gen_range(2..=u64::MAX >> (64 - m_bits));
        let b_bits = rng.gen_range(2..=22);
        let b = rng.gen_range(3..=1u64 << b_bits);
        let bound = compute_z(&SmoothBoundInput::new(m, b).unwrap()).unwrap();
        let reference = tilde_z_direct(m, b, 4 * bound.precision);
        let inside = bound.z > reference && bound.z < Float::with_val(4 * bound.precision, &reference + 2u32);
        if !inside {
            failures.push(format!("M={m} B={b} Z={}", bound.z));
        }
    }
    outcome(failures.is_empty(), format!("1000 random (M, B), {} outside (Zt, Zt + 2) {}", failures.len(), failures.first().cloned().unwrap_or_default()))
}

/// Inputs with `D = 2^20` most likely to exhaust the main loop: composites whose
/// unit group has exponent dividing 720720, and a block of primes above `D`.
fn large_d_inputs() -> Vec<Integer> {
    let lambda = 720_720u64;
    let primes: Vec<u64> = (103..=lambda + 1).filter(|&p| lambda.is_multiple_of(p - 1) && is_prime_u64(p)).collect();
    let mut out = Vec::new();
    for (i, &p) in primes.iter().enumerate() {
        for &q in &primes[i + 1..] {
            if p * q > (1 << 20) + 1 {
                out.push(Integer::from(p) * q);
            }
        }
    }
    out.extend(((1u64 << 20) + 3..(1 << 20) + (1 << 17)).filter(|&p| is_prime_u64(p)).map(Integer::from));
    out
}

fn z_sandwich(_: &mut Shared) -> Outcome {
    let d = Integer::from(1u64 << 20);
    let inputs = large_d_inputs();
    let config = EngineConfig::default().with_trace(true);
    let stages: Vec<_> = map(&inputs, Mode::Parallel, |n| find_large_order(n, &d, &config).unwrap().trace.final_stage)
        .into_iter()
        .flatten()
        .collect();
    let violations: Vec<String> = stages
        .iter()
        .filter_map(|stage| {
            let s = tilde_z_sandwich(&SmoothBoundInput::new(stage.m.clone(), stage.b).unwrap());
            (!s.holds()).then(|| format!("M={} B={}: log M={:.2} middle={:.2} log 4M={:.2}", stage.m, stage.b, s.log_m, s.middle, s.log_4m))
        })
        .collect();
    let vacuous = if stages.is_empty() { " (vacuous)" } else { "" };
    outcome(
        violations.is_empty(),
        format!(
            "{} engine runs with D = 2^20, {} reached the final scan{vacuous}, {} sandwich violations {}",
            inputs.len(),
            stages.len(),
            violations.len(),
            violations.first().cloned().unwrap_or_default()
        ),
    )
}

fn op_budget(shared: &mut Shared) -> Outcome {
    let s = &shared.order_stats;
    outcome(
        s.calls > 0 && s.budget_violations == 0,
        format!("{} order searches, worst mults/sqrt(T) = {:.2} (limit {}), {} over budget", s.calls, s.worst_ratio, s.budget_constant, s.budget_violations),
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn scaling(_: &mut Shared) -> Outcome {
    let n = Integer::from(18_446_744_073_709_551_557u64);
    let config = EngineConfig::default();
    let mut medians = Vec::new();
    for shift in [20u32, 22, 24] {
        let d = Integer::from(1u64 << shift);
        let mut samples = Vec::new();
        for _ in 0..9 {
            let start = Instant::now();
            let mut run = None;
            for _ in 0..5 {
                run = Some(find_large_order(&n, &d, &config).unwrap());
            }
            samples.push(start.elapsed().as_secs_f64() / 5.0);
            let run = run.unwrap();
            let expected = SearchOutcome::LargeOrderElement { alpha: Residue::new(2, &n).unwrap(), known_order: None };
            if run.trace.exit != ExitPath::OrderExceedsD || run.outcome != expected {
                return outcome(false, format!("D=2^{shift}: unexpected exit {:?}", run.trace.exit));
            }
        }
        medians.push(median(samples));
    }
    let ratios: Vec<f64> = medians.windows(2).map(|w| w[1] / w[0]).collect();
    let pass = ratios.iter().all(|r| (1.4..=2.9).contains(r));
    outcome(
        pass,
        format!(
            "median times {:?} ms, ratios per 4x D {:?}",
            medians.iter().map(|t| format!("{:.2}", t * 1e3)).collect::<Vec<_>>(),
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn line17(shared: &mut Shared) -> Outcome {
    let (all, composite) = shared.line17_runs;
    let vacuous = if composite == 0 { " (vacuous for composites)" } else { "" };
    outcome(
        shared.line17_failures.is_empty(),
        format!(
            "{all} sweep runs reached the final scan, {composite} with composite N{vacuous}; {} violations {}",
            shared.line17_failures.len(),
            shared.line17_failures.first().cloned().unwrap_or_default()
        ),
    )
}

type Criterion = (&'static str, fn(&mut Shared) -> Outcome);

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 11] = [
        ("full_contract_sweep", full_sweep),
        ("full_sweep_fallback_counter", fallback_counter),
        ("line17_invariants", line17),
        ("prime_guarantee", prime_guarantee),
        ("bounded_order_equivalence", bounded_equivalence),
        ("lcm_combination", lcm_combination),
        ("psi_lower_bound", psi_lower_bound_check),
        ("z_bracket", z_bracket),
        ("z_sandwich_diagnostic", z_sandwich),
        ("operation_budget", op_budget),
        ("scaling", scaling),
    ];
    let mut shared = Shared::default();
    let mut failed = 0;
    for (name, check) in criteria {
        // Criteria after the sweep read its results, so a filter only limits what is printed.
        let started = Instant::now();
        let result = check(&mut shared);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("{tag} {name} [{:.1}s]: {}", started.elapsed().as_secs_f64(), result.detail);
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
