//! Overnight/intraday split of daily returns.
//!
//! For an `n`-bar series both return series have `n - 1` entries: entry `k`
//! pairs the night from close `k` to open `k + 1` with the session from open
//! `k + 1` to close `k + 1`. Cumulating both therefore telescopes to
//! `close[k + 1] / close[0]` when dividends are left out.

use chrono::NaiveDate;
use thiserror::Error;

use crate::ingest::PriceSeries;

#[derive(Debug, Error, PartialEq)]
pub enum DecomposeError {
    #[error("series has {found} bars, need at least {required}")]
    TooShort { found: usize, required: usize },
    #[error("return {value} at index {index} is <= -100%")]
    TotalLoss { index: usize, value: f64 },
    #[error("overnight and intraday log returns both have zero variance")]
    ZeroVariance,
}

fn require_len(series: &PriceSeries, required: usize) -> Result<(), DecomposeError> {
    if series.len() < required {
        Err(DecomposeError::TooShort {
            found: series.len(),
            required,
        })
    } else {
        Ok(())
    }
}

/// Close-to-next-open simple returns. With `include_dividends` the dividend
/// paid at the next open is added to the open price, i.e. reinvested.
pub fn overnight_returns(
    series: &PriceSeries,
    include_dividends: bool,
) -> Result<Vec<f64>, DecomposeError> {
    require_len(series, 2)?;
    Ok(series
        .bars()
        .windows(2)
        .map(|w| {
            let div = if include_dividends { w[1].dividend } else { 0.0 };
            (w[1].open + div) / w[0].close - 1.0
        })
        .collect())
}

/// Open-to-close simple returns for bars `1..n`. Day 0's session is dropped
/// so the result lines up with [`overnight_returns`].
pub fn intraday_returns(series: &PriceSeries) -> Result<Vec<f64>, DecomposeError> {
    require_len(series, 2)?;
    Ok(series.bars()[1..]
        .iter()
        .map(|b| b.close / b.open - 1.0)
        .collect())
}

/// Running product of gross returns.
pub fn cumulate(returns: &[f64]) -> Result<Vec<f64>, DecomposeError> {
    let mut acc = 1.0;
    returns
        .iter()
        .enumerate()
        .map(|(index, &r)| {
            if r.is_nan() || r <= -1.0 {
                return Err(DecomposeError::TotalLoss { index, value: r });
            }
            acc *= 1.0 + r;
            Ok(acc)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub symbol: String,
    pub dates: Vec<NaiveDate>,
    pub cumulative_overnight: Vec<f64>,
    pub cumulative_intraday: Vec<f64>,
    pub final_overnight_pct: f64,
    pub final_intraday_pct: f64,
}

impl DecompositionResult {
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["date", "cum_overnight", "cum_intraday"])?;
        for ((d, on), id) in self
            .dates
            .iter()
            .zip(&self.cumulative_overnight)
            .zip(&self.cumulative_intraday)
        {
            out.write_record([d.format("%Y-%m-%d").to_string(), on.to_string(), id.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> String {
        format!(
            "{}: overnight {:+.2}%, intraday {:+.2}% over {} days",
            self.symbol,
            self.final_overnight_pct,
            self.final_intraday_pct,
            self.dates.len()
        )
    }

    /// `ln(cum_overnight) - ln(cum_intraday)` at the last date.
    pub fn final_log_gap(&self) -> f64 {
        let on = self.cumulative_overnight.last().copied().unwrap_or(1.0);
        let id = self.cumulative_intraday.last().copied().unwrap_or(1.0);
        on.ln() - id.ln()
    }
}

pub fn decompose(
    series: &PriceSeries,
    include_dividends: bool,
) -> Result<DecompositionResult, DecomposeError> {
    let cumulative_overnight = cumulate(&overnight_returns(series, include_dividends)?)?;
    let cumulative_intraday = cumulate(&intraday_returns(series)?)?;
    let pct = |c: &[f64]| (c.last().copied().unwrap_or(1.0) - 1.0) * 100.0;
    Ok(DecompositionResult {
        symbol: series.symbol().to_string(),
        dates: series.bars()[1..].iter().map(|b| b.date).collect(),
        final_overnight_pct: pct(&cumulative_overnight),
        final_intraday_pct: pct(&cumulative_intraday),
        cumulative_overnight,
        cumulative_intraday,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceShares {
    pub intraday_share: f64,
    pub overnight_share: f64,
}

fn sample_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Shares of the summed overnight and intraday log-return variances.
/// Dividends are not included.
pub fn variance_shares(series: &PriceSeries) -> Result<VarianceShares, DecomposeError> {
    require_len(series, 3)?;
    let log = |r: Vec<f64>| r.into_iter().map(f64::ln_1p).collect::<Vec<_>>();
    let var_on = sample_variance(&log(overnight_returns(series, false)?));
    let var_id = sample_variance(&log(intraday_returns(series)?));
    let total = var_on + var_id;
    if total <= 0.0 {
        return Err(DecomposeError::ZeroVariance);
    }
    let intraday_share = var_id / total;
    Ok(VarianceShares {
        intraday_share,
        overnight_share: 1.0 - intraday_share,
    })
}
