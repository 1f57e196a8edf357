//! Mark-to-market valuation, itemized trading costs and the break-even
//! portfolio size.
//!
//! Trades fill at a mid-based price; crossing the spread is charged
//! separately as `half_spread * |qty|`. Impact therefore shows up in the
//! mark-to-market gain while the spread and fees show up as costs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::impact::{ImpactError, LiquidityProfile};

/// Per-asset prices keyed by symbol.
pub type Marks = BTreeMap<String, f64>;

#[derive(Debug, Error, PartialEq)]
pub enum AccountingError {
    #[error("no price for held asset `{0}`")]
    MissingPrice(String),
    #[error("fill #{index} on `{symbol}`: {reason}")]
    InconsistentFill {
        index: usize,
        symbol: String,
        reason: &'static str,
    },
    #[error("{field} must be {requirement}, got {value}")]
    InvalidParameter {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error(transparent)]
    Impact(#[from] ImpactError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeeSchedule {
    /// Currency per share.
    pub commission: f64,
    /// Currency per share.
    pub exchange_fee: f64,
    /// Fraction of sale proceeds.
    pub regulator_fee: f64,
}

impl Default for FeeSchedule {
    fn default() -> Self {
        Self {
            commission: 0.0005,
            exchange_fee: 0.0003,
            regulator_fee: 2.0e-5,
        }
    }
}

impl FeeSchedule {
    pub fn zero() -> Self {
        Self {
            commission: 0.0,
            exchange_fee: 0.0,
            regulator_fee: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), AccountingError> {
        for (field, value) in [
            ("commission", self.commission),
            ("exchange_fee", self.exchange_fee),
            ("regulator_fee", self.regulator_fee),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(AccountingError::InvalidParameter {
                    field,
                    requirement: "finite and >= 0",
                    value,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Portfolio {
    pub positions: BTreeMap<String, f64>,
    pub cash: f64,
    /// Per-day fraction of gross exposure charged for financing.
    pub financing_rate: f64,
}

impl Portfolio {
    pub fn with_cash(cash: f64) -> Self {
        Self {
            cash,
            ..Default::default()
        }
    }

    pub fn position(&self, symbol: &str) -> f64 {
        self.positions.get(symbol).copied().unwrap_or(0.0)
    }

    fn price_of<'a>(marks: &'a Marks, symbol: &str) -> Result<&'a f64, AccountingError> {
        marks
            .get(symbol)
            .ok_or_else(|| AccountingError::MissingPrice(symbol.to_string()))
    }

    /// Sum of `|position * price|` over held assets.
    pub fn gross_exposure(&self, marks: &Marks) -> Result<f64, AccountingError> {
        self.held().try_fold(0.0, |acc, (s, q)| {
            Ok(acc + (q * Self::price_of(marks, s)?).abs())
        })
    }

    fn held(&self) -> impl Iterator<Item = (&String, f64)> {
        self.positions
            .iter()
            .filter(|(_, q)| **q != 0.0)
            .map(|(s, q)| (s, *q))
    }
}

/// Cash plus positions valued at `marks`.
pub fn mark_to_market(portfolio: &Portfolio, marks: &Marks) -> Result<f64, AccountingError> {
    let mut value = portfolio.cash;
    for (symbol, qty) in portfolio.held() {
        value += qty * Portfolio::price_of(marks, symbol)?;
    }
    Ok(value)
}

/// Spread plus fees for buying `qty` shares at `u_buy` and selling them at
/// `u_sell`. Does not depend on any existing holdings.
pub fn round_trip_cost(
    qty: f64,
    profile: &LiquidityProfile,
    u_buy: f64,
    u_sell: f64,
    fees: &FeeSchedule,
    price: f64,
) -> Result<f64, AccountingError> {
    if !(qty.is_finite() && qty >= 0.0) {
        return Err(AccountingError::InvalidParameter {
            field: "qty",
            requirement: "finite and >= 0",
            value: qty,
        });
    }
    let spread = (profile.half_spread_at(u_buy)? + profile.half_spread_at(u_sell)?) * qty;
    let per_share = 2.0 * (fees.commission + fees.exchange_fee) * qty;
    Ok(spread + per_share + fees.regulator_fee * qty * price)
}

pub fn expected_daily_gain(portfolio_value: f64, daily_nudge: f64) -> f64 {
    portfolio_value * daily_nudge
}

/// Portfolio value at which `expected_daily_gain` equals `daily_cost`.
pub fn breakeven_size(daily_nudge: f64, daily_cost: f64) -> Result<f64, AccountingError> {
    if !(daily_nudge.is_finite() && daily_nudge > 0.0) {
        return Err(AccountingError::InvalidParameter {
            field: "daily_nudge",
            requirement: "finite and > 0",
            value: daily_nudge,
        });
    }
    Ok(daily_cost / daily_nudge)
}

/// An executed trade as seen by the ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct Fill {
    pub symbol: String,
    /// Signed shares, positive for buys.
    pub qty: f64,
    pub price: f64,
    /// Half-spread paid on this fill, per share.
    pub half_spread: f64,
}

impl Fill {
    fn check(&self, index: usize, marks: &Marks) -> Result<(), AccountingError> {
        let bad = |reason| AccountingError::InconsistentFill {
            index,
            symbol: self.symbol.clone(),
            reason,
        };
        if !self.qty.is_finite() {
            return Err(bad("non-finite quantity"));
        }
        if !(self.price.is_finite() && self.price > 0.0) {
            return Err(bad("price must be finite and > 0"));
        }
        if !(self.half_spread.is_finite() && self.half_spread >= 0.0) {
            return Err(bad("half-spread must be finite and >= 0"));
        }
        if !marks.contains_key(&self.symbol) {
            return Err(bad("unknown asset"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DayAccount {
    pub day: usize,
    pub mtm_gain: f64,
    pub spread_cost: f64,
    pub commission_cost: f64,
    pub exchange_cost: f64,
    pub regulator_cost: f64,
    pub financing_cost: f64,
    /// Part of `mtm_gain` earned by the start-of-day positions.
    pub holding_gain: f64,
    /// Part of `mtm_gain` earned by the day's fills, marked to the close.
    pub trading_gain: f64,
}

impl DayAccount {
    pub fn total_cost(&self) -> f64 {
        self.spread_cost
            + self.commission_cost
            + self.exchange_cost
            + self.regulator_cost
            + self.financing_cost
    }

    pub fn net_pnl(&self) -> f64 {
        self.mtm_gain - self.total_cost()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Ledger {
    pub days: Vec<DayAccount>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Books one day's fills against `portfolio` and appends the day's record.
    ///
    /// `prev_marks` values the start-of-day positions, `close_marks` the
    /// end-of-day positions and every fill. Costs are paid out of cash, so the
    /// change in [`mark_to_market`] across the call equals the record's
    /// `net_pnl`.
    pub fn accrue_day(
        &mut self,
        portfolio: &mut Portfolio,
        fills: &[Fill],
        prev_marks: &Marks,
        close_marks: &Marks,
        fees: &FeeSchedule,
    ) -> Result<&DayAccount, AccountingError> {
        for (i, f) in fills.iter().enumerate() {
            f.check(i, close_marks)?;
        }
        let mut acc = DayAccount {
            day: self.days.len(),
            ..Default::default()
        };
        for (symbol, qty) in portfolio.held() {
            let prev = Portfolio::price_of(prev_marks, symbol)?;
            let close = Portfolio::price_of(close_marks, symbol)?;
            acc.holding_gain += qty * (close - prev);
        }
        for f in fills {
            let close = close_marks[&f.symbol];
            let size = f.qty.abs();
            acc.trading_gain += f.qty * (close - f.price);
            acc.spread_cost += size * f.half_spread;
            acc.commission_cost += size * fees.commission;
            acc.exchange_cost += size * fees.exchange_fee;
            if f.qty < 0.0 {
                acc.regulator_cost += size * f.price * fees.regulator_fee;
            }
            *portfolio.positions.entry(f.symbol.clone()).or_insert(0.0) += f.qty;
            portfolio.cash -= f.qty * f.price;
        }
        acc.mtm_gain = acc.holding_gain + acc.trading_gain;
        acc.financing_cost = portfolio.financing_rate * portfolio.gross_exposure(close_marks)?;
        portfolio.cash -= acc.total_cost();
        self.days.push(acc);
        Ok(self.days.last().expect("just pushed"))
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record([
            "day",
            "mtm_gain",
            "spread_cost",
            "commission_cost",
            "exchange_cost",
            "regulator_cost",
            "financing_cost",
            "net_pnl",
        ])?;
        for d in &self.days {
            out.write_record([
                d.day.to_string(),
                d.mtm_gain.to_string(),
                d.spread_cost.to_string(),
                d.commission_cost.to_string(),
                d.exchange_cost.to_string(),
                d.regulator_cost.to_string(),
                d.financing_cost.to_string(),
                d.net_pnl().to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
