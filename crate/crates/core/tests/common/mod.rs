#![allow(dead_code)]

use chrono::{Days, NaiveDate};
use footprint::ingest::Bar;
use footprint::PriceSeries;
use proptest::prelude::*;

pub fn date(i: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(1993, 1, 29).unwrap() + Days::new(i as u64)
}

/// Builds a series from `(open, close, dividend)` triples on consecutive days.
pub fn series_from(rows: &[(f64, f64, f64)]) -> PriceSeries {
    let bars = rows
        .iter()
        .enumerate()
        .map(|(i, &(o, c, d))| Bar::new(date(i), o, c).with_dividend(d))
        .collect();
    PriceSeries::new("T", bars).unwrap()
}

/// Log-normal open/close path starting at `start`.
pub fn lognormal_rows(start: f64, steps: &[(f64, f64)]) -> Vec<(f64, f64, f64)> {
    let mut close = start;
    let mut rows = vec![(start, start, 0.0)];
    for &(night, day) in steps {
        let open = close * night.exp();
        close = open * day.exp();
        rows.push((open, close, 0.0));
    }
    rows
}

pub fn price() -> impl Strategy<Value = f64> {
    (1e-2f64..1e4).prop_map(|p| (p * 1e4).round() / 1e4)
}

pub fn bar_rows(max_len: usize) -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    prop::collection::vec(
        (price(), price(), prop_oneof![Just(0.0), 0.0f64..2.0]),
        1..max_len,
    )
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}
