//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.
//!
//! Criterion 9 needs daily S&P 500 ETF bars (1993-01-29..2018-10-31) with a
//! dividend column. Point `FOOTPRINT_SPY_CSV` at the file or drop it at
//! `tests/data/spy.csv`; without it the criterion is skipped.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use common::{lognormal_rows, rel_close, series_from};
use footprint::config::{ArbitrageurConfig, StrategyConfig};
use footprint::decompose::{cumulate, decompose, variance_shares};
use footprint::rng::seeded;
use footprint::sim::SimOutput;
use footprint::{breakeven_size, run_sim, ImpactState, LiquidityProfile, SimConfig};
use rand::Rng;
use rand_distr::{Distribution, Normal};

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed < limit
}

fn c1_drift_compounding() -> Verdict {
    let returns = vec![0.0004; 6000];
    let start = Instant::now();
    let g = cumulate(&returns).unwrap();
    let elapsed = start.elapsed();
    let last = *g.last().unwrap();
    check(
        (10.45..=11.57).contains(&last) && within(Duration::from_millis(1), elapsed),
        format!("factor {last:.4}, {elapsed:?}"),
    )
}

fn c2_telescoping() -> Verdict {
    let start = Instant::now();
    let mut rng = seeded(2);
    let step = Normal::new(0.0, 0.015).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.random_range(2..=500);
        let steps: Vec<(f64, f64)> = (1..len)
            .map(|_| (step.sample(&mut rng), step.sample(&mut rng)))
            .collect();
        let rows = lognormal_rows(rng.random_range(5.0..500.0), &steps);
        let d = decompose(&series_from(&rows), false).unwrap();
        for k in 0..d.dates.len() {
            let lhs = d.cumulative_overnight[k] * d.cumulative_intraday[k];
            let rhs = rows[k + 1].1 / rows[0].1;
            worst = worst.max((lhs - rhs).abs() / rhs);
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && within(Duration::from_secs(5), elapsed),
        format!("max relative error {worst:.2e}, {elapsed:?}"),
    )
}

fn c3_dividend_direction() -> Verdict {
    let mut rng = seeded(3);
    let step = Normal::new(0.0, 0.01).unwrap();
    let mut failures = 0;
    for _ in 0..100 {
        let len = rng.random_range(2..=300);
        let steps: Vec<(f64, f64)> = (1..len)
            .map(|_| (step.sample(&mut rng), step.sample(&mut rng)))
            .collect();
        let mut rows = lognormal_rows(100.0, &steps);
        for row in rows.iter_mut() {
            row.2 = rng.random_range(0.01..1.0);
        }
        let s = series_from(&rows);
        let (with, without) = (decompose(&s, true).unwrap(), decompose(&s, false).unwrap());
        let raised = with
            .cumulative_overnight
            .iter()
            .zip(&without.cumulative_overnight)
            .all(|(a, b)| a > b);
        if !raised || with.cumulative_intraday != without.cumulative_intraday {
            failures += 1;
        }
    }
    check(failures == 0, format!("{failures}/100 series violated"))
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn c4_footprint() -> Verdict {
    let start = Instant::now();
    let mut cfg = SimConfig {
        days: 2000,
        ..Default::default()
    };
    cfg.impact.permanent_fraction = 0.5;
    cfg.strategy.jitter = 0.0;
    cfg.fundamental.volatility = 0.0;
    cfg.arbitrageur.enabled = false;
    let out = run_sim(&cfg, 4).unwrap();
    let mut legs = Vec::new();
    let mut signs_ok = true;
    for (i, &target) in cfg.strategy.portfolio_target.iter().enumerate() {
        if target > 0.0 {
            let d = decompose(&out.series[i], false).unwrap();
            signs_ok &= d.final_overnight_pct > 0.0 && d.final_intraday_pct < 0.0;
            legs.push(format!(
                "{} {:+.2}%/{:+.2}%",
                d.symbol, d.final_overnight_pct, d.final_intraday_pct
            ));
        }
    }

    cfg.strategy.enabled = false;
    let gaps: Vec<f64> = (0..20)
        .map(|seed| {
            let out = run_sim(&cfg, 1000 + seed).unwrap();
            decompose(&out.series[0], false).unwrap().final_log_gap()
        })
        .collect();
    let (mean, sd) = mean_sd(&gaps);
    let se = sd / 20f64.sqrt();
    let abs_mean = gaps.iter().map(|g| g.abs()).sum::<f64>() / 20.0;
    let elapsed = start.elapsed();
    check(
        signs_ok && !legs.is_empty() && mean.abs() <= 3.0 * se && within(Duration::from_secs(30), elapsed),
        format!(
            "long legs {}; strategy off: log gap mean {mean:.5} (3 SE {:.5}, mean |gap| {abs_mean:.5}), {elapsed:?}",
            legs.join(", "),
            3.0 * se
        ),
    )
}

fn c5_morning_dominance() -> Verdict {
    let mut rng = seeded(5);
    let mut failures = 0;
    for _ in 0..1000 {
        let depth_open = rng.random_range(1e3..1e7);
        let profile = LiquidityProfile {
            half_spread_open: rng.random_range(0.01..1.0),
            half_spread_close: 0.0,
            depth_open,
            depth_close: depth_open * rng.random_range(1.001..5.0),
            shape: rng.random_range(0.2..4.0),
        };
        let profile = LiquidityProfile {
            half_spread_close: profile.half_spread_open * rng.random_range(0.05..1.0),
            ..profile
        };
        // Keep the opening trade strictly inside the cap.
        let max_q = profile.half_spread_open * depth_open;
        let q = rng.random_range(0.01..0.99) * max_q * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let state = ImpactState::new(rng.random_range(0.0..20.0), rng.random_range(0.0..=1.0)).unwrap();
        let (_, d0) = state.apply_trade(&profile, q, 0.0).unwrap();
        let (_, d1) = state.apply_trade(&profile, q, 1.0).unwrap();
        if d0.abs() <= d1.abs() {
            failures += 1;
        }
    }
    check(failures == 0, format!("{failures}/1000 cases violated"))
}

/// Per-day systematic permanent nudge on the long legs over the window.
fn attributed_nudge(out: &SimOutput, long_legs: &[usize], from: usize) -> f64 {
    let window = &out.records[from..];
    let total: f64 = window
        .iter()
        .flat_map(|r| long_legs.iter().map(move |&i| r.strategy.permanent_nudge[i] + r.arbitrageur.permanent_nudge[i]))
        .sum();
    total / (window.len() * long_legs.len()) as f64
}

fn observed_nudge(out: &SimOutput, long_legs: &[usize], from: usize) -> f64 {
    let window = &out.records[from - 1..];
    let total: f64 = window
        .windows(2)
        .flat_map(|w| long_legs.iter().map(move |&i| w[1].close[i] - w[0].close[i]))
        .sum();
    total / ((window.len() - 1) * long_legs.len()) as f64
}

fn c6_arbitrage_limit() -> Verdict {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    let base = SimConfig {
        days: 3000,
        arbitrageur: ArbitrageurConfig {
            enabled: true,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut aggressive = base.clone();
    aggressive.strategy.round_trip_fraction = 0.05;
    aggressive.profile = LiquidityProfile {
        half_spread_open: 0.02,
        half_spread_close: 0.01,
        depth_open: 1e5,
        depth_close: 3e5,
        shape: 1.0,
    };
    aggressive.arbitrageur.threshold = 0.005;
    for (name, cfg) in [("default", base), ("thin book", aggressive)] {
        let out = run_sim(&cfg, 6).unwrap();
        let long: Vec<usize> = (0..cfg.assets.len())
            .filter(|&i| cfg.strategy.portfolio_target[i] > 0.0)
            .collect();
        let bound = 2.0 * cfg.profile_for(long[0]).half_spread_at(0.0).unwrap() + cfg.arbitrageur.threshold;
        let attributed = attributed_nudge(&out, &long, 2000);
        let observed = observed_nudge(&out, &long, 2000);
        let arb_days = out.records[2000..]
            .iter()
            .filter(|r| r.arbitrageur.bought.iter().any(|&q| q > 0.0))
            .count();
        ok &= attributed.abs() <= bound && observed.abs() <= bound;
        details.push(format!(
            "{name}: nudge {attributed:.5} (observed {observed:.5}) <= {bound:.4}, arbitrageur active {arb_days} days"
        ));
    }
    let elapsed = start.elapsed();
    check(
        ok && within(Duration::from_secs(60), elapsed),
        format!("{}, {elapsed:?}", details.join("; ")),
    )
}

fn sweep_config(gross: f64) -> SimConfig {
    SimConfig {
        days: 1000,
        strategy: StrategyConfig {
            portfolio_target: vec![gross / 2.0, -gross / 2.0],
            ..Default::default()
        },
        financing_rate: 0.0,
        ..Default::default()
    }
}

fn mean_daily_pnl(gross: f64, seeds: std::ops::Range<u64>) -> f64 {
    let runs = seeds.clone().count() as f64;
    seeds
        .map(|seed| {
            let out = run_sim(&sweep_config(gross), seed).unwrap();
            out.ledger.days.iter().map(|d| d.net_pnl()).sum::<f64>() / out.ledger.len() as f64
        })
        .sum::<f64>()
        / runs
}

fn c7_breakeven() -> Verdict {
    // Measure nudge and cost on a reference book with independent seeds.
    let reference = 2e8;
    let (mut gain, mut cost, mut days) = (0.0, 0.0, 0.0);
    for seed in 500..510 {
        let out = run_sim(&sweep_config(reference), seed).unwrap();
        for d in &out.ledger.days {
            gain += d.holding_gain;
            cost += d.total_cost() - d.trading_gain;
            days += 1.0;
        }
    }
    let nudge = gain / days / reference;
    let daily_cost = cost / days;
    let v_star = match breakeven_size(nudge, daily_cost) {
        Ok(v) => v,
        Err(e) => return Verdict::Fail(format!("no threshold: {e}")),
    };

    let factors = [0.5, 0.8, 1.0, 1.25, 2.0];
    let pnl: Vec<f64> = factors.iter().map(|f| mean_daily_pnl(f * v_star, 0..10)).collect();
    let increasing = pnl.windows(2).all(|w| w[0] < w[1]);
    let bracketed = pnl[1] < 0.0 && pnl[3] > 0.0 && pnl[0] < 0.0 && pnl[4] > 0.0;
    let listing = factors
        .iter()
        .zip(&pnl)
        .map(|(f, p)| format!("{f}x:{p:+.0}"))
        .collect::<Vec<_>>()
        .join(" ");
    check(
        increasing && bracketed,
        format!("nudge {nudge:.3e}/day, cost {daily_cost:.0}/day, V* {v_star:.3e}; mean daily P&L {listing}"),
    )
}

fn c8_variance_shares() -> Verdict {
    let s = 0.01f64;
    let steps: Vec<(f64, f64)> = (0..400)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            (sign * s * 2f64.sqrt(), sign * 2.0 * s)
        })
        .collect();
    let shares = variance_shares(&series_from(&lognormal_rows(50.0, &steps))).unwrap();

    let (on, id): (Vec<f64>, Vec<f64>) = steps.iter().copied().unzip();
    let (var_on, var_id) = (mean_sd(&on).1.powi(2), mean_sd(&id).1.powi(2));
    let oracle = var_id / (var_on + var_id);
    check(
        (shares.intraday_share - 2.0 / 3.0).abs() <= 1e-6
            && (shares.overnight_share - 1.0 / 3.0).abs() <= 1e-6
            && rel_close(shares.intraday_share, oracle, 1e-9),
        format!(
            "intraday {:.8}, overnight {:.8}, oracle {oracle:.8}",
            shares.intraday_share, shares.overnight_share
        ),
    )
}

fn spy_path() -> Option<PathBuf> {
    let candidate = std::env::var_os("FOOTPRINT_SPY_CSV")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/spy.csv"));
    candidate.exists().then_some(candidate)
}

fn pct_after(text: &str, label: &str) -> Option<f64> {
    let rest = &text[text.find(label)? + label.len()..];
    rest.trim_start().split('%').next()?.parse().ok()
}

fn c9_spy() -> Verdict {
    let Some(input) = spy_path() else {
        return Verdict::Skip("no SPY data file".into());
    };
    let dir = std::env::temp_dir().join(format!("footprint-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let output = dir.join("spy_decomposition.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_footprint"))
        .args(["decompose", "--dividends", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .output()
        .unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    match (pct_after(&text, "overnight"), pct_after(&text, "intraday")) {
        (Some(on), Some(id)) if out.status.success() => {
            check(on > 0.0 && on - id > 100.0, text.trim().to_string())
        }
        _ => Verdict::Fail(format!(
            "decompose failed: {}",
            String::from_utf8_lossy(&out.stderr).trim()
        )),
    }
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("drift compounding", c1_drift_compounding),
        ("telescoping identity", c2_telescoping),
        ("dividend direction", c3_dividend_direction),
        ("footprint reproduction", c4_footprint),
        ("morning-impact dominance", c5_morning_dominance),
        ("arbitrage limit", c6_arbitrage_limit),
        ("break-even structure", c7_breakeven),
        ("variance shares", c8_variance_shares),
        ("SPY overnight/intraday split", c9_spy),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Verdict::Fail("panicked".into()));
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Skip(d) => ("SKIP", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {name:<28} {tag}  {detail}", i + 1);
    }
    println!("acceptance: {} failed", failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
