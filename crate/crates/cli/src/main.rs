use std::collections::BTreeMap;
use std::fmt;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use largeorder_core::engine::DEFAULT_SMALL_N_THRESHOLD;
use largeorder_core::{
    find_large_order, gcd, psi_brute, psi_lower_bound, verify_outcome, BoundedOrderResult, EngineConfig, EngineRun,
    EngineTrace, Error, OrderSearch, OrderStats, Residue, SearchOutcome,
};
use rug::Integer;
use serde::{Deserialize, Serialize};

const SCHEMA_VERSION: u32 = 1;
const BENCH_PRIME: &str = "18446744073709551557";

#[derive(Parser)]
#[command(name = "largeorder", version, about = "Find an element of large multiplicative order modulo N, or a factor of N")]
struct Cli {
    /// Emit one JSON object on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct EngineFlags {
    /// Inputs below this use direct computation instead of the main algorithm.
    #[arg(long, env = "LARGEORDER_THRESHOLD", default_value_t = DEFAULT_SMALL_N_THRESHOLD)]
    threshold: u64,
    /// Coprime-residue baby steps in order searches.
    #[arg(long)]
    primorial: bool,
}

impl EngineFlags {
    fn config(&self, trace: bool) -> EngineConfig {
        EngineConfig::default().with_threshold(self.threshold).with_primorial(self.primorial).with_trace(trace)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Return alpha with ord_N(alpha) > D, or a nontrivial divisor of N.
    Find {
        #[arg(long, value_parser = parse_integer)]
        n: Integer,
        #[arg(long, value_parser = parse_integer)]
        d: Integer,
        /// Include the per-step trace.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Decide whether ord_N(alpha) <= bound and report the exact order if so.
    Order {
        #[arg(long, value_parser = parse_integer)]
        n: Integer,
        #[arg(long, value_parser = parse_integer)]
        alpha: Integer,
        #[arg(long, value_parser = parse_integer)]
        bound: Integer,
    },
    /// Count y-smooth integers up to x and evaluate the lower bound x / (log x)^(log x / log y).
    Psi {
        #[arg(long)]
        x: u64,
        #[arg(long)]
        y: u64,
        /// Skip the exact count.
        #[arg(long)]
        bound_only: bool,
    },
    /// Run the engine and check its outcome against brute force.
    Verify {
        #[arg(long, value_parser = parse_integer)]
        n: Integer,
        #[arg(long, value_parser = parse_integer)]
        d: Integer,
        #[command(flatten)]
        engine: EngineFlags,
    },
    /// Time the engine on a list of inputs and fit time against D.
    Bench {
        /// Comma-separated `N:D` pairs. Defaults to a 64-bit prime with D = 2^20, 2^22, 2^24.
        #[arg(long, value_delimiter = ',')]
        pairs: Vec<String>,
        #[arg(long, default_value_t = 5)]
        reps: u32,
        #[command(flatten)]
        engine: EngineFlags,
    },
}

fn parse_integer(s: &str) -> Result<Integer, String> {
    Integer::from_str_radix(s.trim(), 10).map_err(|e| format!("{s:?} is not a decimal integer: {e}"))
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Precondition(_) => Failure::Usage(e.to_string()),
            Error::Internal(_) => Failure::Internal(e.to_string()),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
struct CliResult {
    schema_version: u32,
    command: String,
    inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factorization: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi: Option<PsiSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<TraceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bench: Option<BenchSummary>,
    timing_ms: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
struct PsiSummary {
    count: Option<String>,
    lower_bound: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
struct StepSummary {
    beta: String,
    branch: String,
    m: Option<String>,
    order_after: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
struct TraceSummary {
    exit: String,
    smoothness_bound: Option<String>,
    scan_m: Option<String>,
    scan_z: Option<String>,
    fallback_count: u32,
    order_searches: u64,
    multiplications: u64,
    worst_budget_ratio: f64,
    steps: Vec<StepSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
struct BenchRow {
    n: String,
    d: String,
    exit: String,
    median_ms: f64,
    multiplications: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
struct BenchSummary {
    runs: Vec<BenchRow>,
    /// Least-squares slope of log(time) against log(D).
    fitted_exponent: Option<f64>,
}

fn trace_summary(trace: &EngineTrace) -> TraceSummary {
    TraceSummary {
        exit: trace.exit.name().into(),
        smoothness_bound: trace.smoothness_bound.map(|b| b.to_string()),
        scan_m: trace.final_stage.as_ref().map(|s| s.m.to_string()),
        scan_z: trace.final_stage.as_ref().map(|s| s.z.to_string()),
        fallback_count: trace.fallback_count,
        order_searches: trace.order_stats.calls,
        multiplications: trace.order_stats.multiplications,
        worst_budget_ratio: trace.order_stats.worst_ratio,
        steps: trace
            .iterations
            .iter()
            .map(|r| StepSummary {
                beta: r.beta.to_string(),
                branch: r.branch.name().into(),
                m: r.m.as_ref().map(Integer::to_string),
                order_after: r.m_after.to_string(),
            })
            .collect(),
    }
}

fn result(command: &str, inputs: &[(&str, String)]) -> CliResult {
    CliResult {
        schema_version: SCHEMA_VERSION,
        command: command.into(),
        inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        ..Default::default()
    }
}

fn fill_outcome(out: &mut CliResult, outcome: &SearchOutcome) {
    match outcome {
        SearchOutcome::LargeOrderElement { alpha, known_order } => {
            out.kind = Some("element".into());
            out.value = Some(alpha.value().to_string());
            out.order = known_order.as_ref().map(Integer::to_string);
        }
        SearchOutcome::NontrivialDivisor(d) => {
            out.kind = Some("divisor".into());
            out.value = Some(d.to_string());
        }
    }
}

fn cmd_find(n: &Integer, d: &Integer, trace: bool, engine: &EngineFlags) -> Result<CliResult, Failure> {
    let mut out = result("find", &[("n", n.to_string()), ("d", d.to_string())]);
    let run = find_large_order(n, d, &engine.config(trace))?;
    fill_outcome(&mut out, &run.outcome);
    if trace {
        out.trace = Some(trace_summary(&run.trace));
    }
    Ok(out)
}

fn cmd_order(n: &Integer, alpha: &Integer, bound: &Integer) -> Result<CliResult, Failure> {
    let mut out = result("order", &[("n", n.to_string()), ("alpha", alpha.to_string()), ("bound", bound.to_string())]);
    let residue = Residue::new(alpha.clone(), n.clone())?;
    let g = gcd(residue.value(), n)?;
    if g != 1 {
        if g == *n {
            return Err(Failure::Usage(format!("alpha = {alpha} is 0 modulo N and has no order")));
        }
        out.kind = Some("divisor".into());
        out.value = Some(g.to_string());
        out.detail = Some(format!("alpha is not invertible; gcd(alpha, N) = {g}"));
        return Ok(out);
    }
    let mut stats = OrderStats::default();
    match OrderSearch::default().bounded(&residue, bound, &mut stats)? {
        BoundedOrderResult::Exact { order, factorization } => {
            out.kind = Some("order".into());
            out.value = Some(order.to_string());
            out.order = Some(order.to_string());
            out.factorization = Some(factorization.to_string());
        }
        BoundedOrderResult::ExceedsBound { .. } => {
            out.kind = Some("exceeds".into());
        }
    }
    Ok(out)
}

fn cmd_psi(x: u64, y: u64, bound_only: bool) -> Result<CliResult, Failure> {
    let mut out = result("psi", &[("x", x.to_string()), ("y", y.to_string())]);
    let lower_bound = psi_lower_bound(x as f64, y as f64)?;
    let count = if bound_only { None } else { Some(psi_brute(x, y)?.to_string()) };
    out.kind = Some("psi".into());
    out.psi = Some(PsiSummary { count, lower_bound });
    Ok(out)
}

fn cmd_verify(n: &Integer, d: &Integer, engine: &EngineFlags) -> Result<CliResult, Failure> {
    let mut out = result("verify", &[("n", n.to_string()), ("d", d.to_string())]);
    if n.significant_bits() > 64 {
        return Err(Failure::Usage(format!("N = {n} is beyond the brute-force oracle")));
    }
    let run = find_large_order(n, d, &engine.config(false))?;
    let report = verify_outcome(n, d, &run.outcome);
    fill_outcome(&mut out, &run.outcome);
    out.verdict = Some(if report.passed() { "pass" } else { "fail" }.into());
    out.detail = Some(report.detail);
    Ok(out)
}

fn fitted_exponent(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    if logs.len() < 2 {
        return None;
    }
    let (mx, my) = (logs.iter().map(|p| p.0).sum::<f64>() / k, logs.iter().map(|p| p.1).sum::<f64>() / k);
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn cmd_bench(pairs: &[String], reps: u32, engine: &EngineFlags) -> Result<CliResult, Failure> {
    let inputs: Vec<(Integer, Integer)> = if pairs.is_empty() {
        [20, 22, 24].iter().map(|s| (parse_integer(BENCH_PRIME).unwrap(), Integer::from(1u64 << s))).collect()
    } else {
        pairs
            .iter()
            .map(|p| {
                let (n, d) = p.split_once(':').ok_or_else(|| Failure::Usage(format!("expected N:D, got {p:?}")))?;
                Ok((parse_integer(n).map_err(Failure::Usage)?, parse_integer(d).map_err(Failure::Usage)?))
            })
            .collect::<Result<_, Failure>>()?
    };
    if reps == 0 {
        return Err(Failure::Usage("--reps must be at least 1".into()));
    }
    let config = engine.config(false);
    let mut rows = Vec::new();
    for (n, d) in &inputs {
        let mut times = Vec::new();
        let mut last: Option<EngineRun> = None;
        for _ in 0..reps {
            let start = Instant::now();
            let run = find_large_order(n, d, &config)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
            last = Some(run);
        }
        times.sort_by(f64::total_cmp);
        let run = last.expect("reps >= 1");
        log::info!("N={n} D={d}: {:.3} ms", times[times.len() / 2]);
        rows.push(BenchRow {
            n: n.to_string(),
            d: d.to_string(),
            exit: run.trace.exit.name().into(),
            median_ms: times[times.len() / 2],
            multiplications: run.trace.order_stats.multiplications,
        });
    }
    let points: Vec<(f64, f64)> = inputs.iter().zip(&rows).map(|((_, d), r)| (d.to_f64(), r.median_ms)).collect();
    let mut out = result("bench", &[("reps", reps.to_string()), ("pairs", inputs.len().to_string())]);
    out.kind = Some("bench".into());
    out.bench = Some(BenchSummary { runs: rows, fitted_exponent: fitted_exponent(&points) });
    Ok(out)
}

struct Human<'a>(&'a CliResult);

impl fmt::Display for Human<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.0;
        let value = r.value.as_deref().unwrap_or("");
        match (r.command.as_str(), r.kind.as_deref()) {
            ("psi", _) => {
                let psi = r.psi.as_ref().expect("psi summary");
                if let Some(count) = &psi.count {
                    writeln!(f, "Psi({}, {}) = {count}", r.inputs["x"], r.inputs["y"])?;
                }
                write!(f, "lower bound {:.6}", psi.lower_bound)?;
            }
            ("bench", _) => {
                let bench = r.bench.as_ref().expect("bench summary");
                for row in &bench.runs {
                    writeln!(f, "N={} D={} {} {:.3} ms, {} multiplications", row.n, row.d, row.exit, row.median_ms, row.multiplications)?;
                }
                match bench.fitted_exponent {
                    Some(e) => write!(f, "fitted exponent of time against D: {e:.3}")?,
                    None => write!(f, "fitted exponent of time against D: n/a")?,
                }
            }
            (_, Some("element")) => {
                write!(f, "element {value}")?;
                if let Some(order) = &r.order {
                    write!(f, " of order {order}")?;
                }
            }
            (_, Some("divisor")) => write!(f, "divisor {value}")?,
            (_, Some("order")) => write!(f, "order {value} = {}", r.factorization.as_deref().unwrap_or(""))?,
            (_, Some("exceeds")) => write!(f, "exceeds bound {}", r.inputs["bound"])?,
            _ => {}
        }
        if let Some(verdict) = &r.verdict {
            write!(f, "\n{verdict}")?;
        }
        if let Some(detail) = &r.detail {
            write!(f, " ({detail})")?;
        }
        if let Some(t) = &r.trace {
            for s in &t.steps {
                write!(f, "\n  beta={} {} m={} M={}", s.beta, s.branch, s.m.as_deref().unwrap_or("-"), s.order_after)?;
            }
            write!(
                f,
                "\n  exit {} after {} order searches, {} multiplications",
                t.exit, t.order_searches, t.multiplications
            )?;
            if let (Some(m), Some(z)) = (&t.scan_m, &t.scan_z) {
                write!(f, "; scan with M={m} Z={z}")?;
            }
        }
        Ok(())
    }
}

fn run(cli: &Cli) -> Result<CliResult, Failure> {
    match &cli.command {
        Command::Find { n, d, trace, engine } => cmd_find(n, d, *trace, engine),
        Command::Order { n, alpha, bound } => cmd_order(n, alpha, bound),
        Command::Psi { x, y, bound_only } => cmd_psi(*x, *y, *bound_only),
        Command::Verify { n, d, engine } => cmd_verify(n, d, engine),
        Command::Bench { pairs, reps, engine } => cmd_bench(pairs, *reps, engine),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let start = Instant::now();
    match run(&cli) {
        Ok(mut out) => {
            out.timing_ms = start.elapsed().as_secs_f64() * 1e3;
            if cli.json {
                println!("{}", serde_json::to_string(&out).expect("result serializes"));
            } else {
                println!("{}", Human(&out));
            }
            if out.verdict.as_deref() == Some("fail") {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(3)
        }
    }
}
