//! Simulation configuration, read from a single JSON document.
//!
//! Every field is optional; the defaults below describe a two-asset
//! long/short book traded by the Strategy agent over 250 days with light
//! noise flow and no arbitrageur.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accounting::FeeSchedule;
use crate::impact::{ImpactError, LiquidityProfile};

/// Largest one-way Strategy trade per asset and day, as a fraction of the
/// asset's typical daily volume.
pub const VOLUME_CAP_FRACTION: f64 = 0.05;

#[derive(Debug, Error, PartialEq)]
#[error("invalid config field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }

    fn from_impact(prefix: &str, err: ImpactError) -> Self {
        match err {
            ImpactError::InvalidParameter {
                field,
                requirement,
                value,
            } => Self::new(
                format!("{prefix}.{field}"),
                format!("must be {requirement}, got {value}"),
            ),
            other => Self::new(prefix, other.to_string()),
        }
    }
}

fn check(ok: bool, field: &str, reason: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(field, reason()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub days: usize,
    /// First simulated trading date; later days skip weekends.
    pub start_date: String,
    pub assets: Vec<AssetConfig>,
    /// Liquidity profile for assets that do not set their own.
    pub profile: LiquidityProfile,
    pub impact: ImpactConfig,
    pub fundamental: FundamentalConfig,
    pub strategy: StrategyConfig,
    pub arbitrageur: ArbitrageurConfig,
    pub noise: NoiseConfig,
    pub fees: FeeSchedule,
    /// Per-day financing charge on the Strategy's gross exposure at the close.
    pub financing_rate: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            days: 250,
            start_date: "2000-01-03".into(),
            assets: vec![AssetConfig::named("AAA"), AssetConfig::named("BBB")],
            profile: LiquidityProfile::default(),
            impact: ImpactConfig::default(),
            fundamental: FundamentalConfig::default(),
            strategy: StrategyConfig::default(),
            arbitrageur: ArbitrageurConfig::default(),
            noise: NoiseConfig::default(),
            fees: FeeSchedule::default(),
            financing_rate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssetConfig {
    pub symbol: String,
    pub initial_price: f64,
    /// Shares.
    pub typical_daily_volume: f64,
    pub profile: Option<LiquidityProfile>,
}

impl AssetConfig {
    pub fn named(symbol: &str) -> Self {
        Self {
            symbol: symbol.into(),
            ..Default::default()
        }
    }
}

impl Default for AssetConfig {
    fn default() -> Self {
        Self {
            symbol: "ASSET".into(),
            initial_price: 100.0,
            typical_daily_volume: 1.0e6,
            profile: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactConfig {
    pub permanent_fraction: f64,
    /// Transient decay rate per unit of intraday time.
    pub decay_rate: f64,
    /// Fraction of the closing transient displacement still present at the
    /// next open. 0 means it has fully decayed overnight.
    pub overnight_retention: f64,
}

impl Default for ImpactConfig {
    fn default() -> Self {
        Self {
            permanent_fraction: 0.5,
            decay_rate: 5.0,
            overnight_retention: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FundamentalConfig {
    /// Overnight log-volatility of the exogenous fundamental price.
    pub volatility: f64,
    /// Lower bound on the observed midprice.
    pub tick: f64,
}

impl Default for FundamentalConfig {
    fn default() -> Self {
        Self {
            volatility: 0.0,
            tick: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub enabled: bool,
    /// Currency value per asset, in asset order. Positive entries are long
    /// legs, negative entries short legs, zero means not held.
    pub portfolio_target: Vec<f64>,
    /// One-way round-trip size as a fraction of typical daily volume.
    pub round_trip_fraction: f64,
    pub morning_time: f64,
    pub afternoon_time: f64,
    /// Relative standard deviation applied to trade sizes and times.
    pub jitter: f64,
    pub rotation_period: Option<usize>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            portfolio_target: vec![1.0e8, -1.0e8],
            round_trip_fraction: 0.01,
            morning_time: 0.0,
            afternoon_time: 1.0,
            jitter: 0.0,
            rotation_period: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArbitrageurConfig {
    pub enabled: bool,
    pub lookback: usize,
    /// Extra drift (price units) required beyond the open round-trip cost.
    pub threshold: f64,
    /// Order size as a fraction of typical daily volume.
    pub size_fraction: f64,
}

impl Default for ArbitrageurConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            lookback: 20,
            threshold: 0.0,
            size_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Expected orders per asset per day.
    pub intensity: f64,
    /// Mean order size in shares.
    pub size_scale: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            intensity: 10.0,
            size_scale: 2000.0,
        }
    }
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::new("<document>", e.to_string()))
    }

    pub fn start(&self) -> Result<NaiveDate, ConfigError> {
        NaiveDate::parse_from_str(&self.start_date, "%Y-%m-%d")
            .map_err(|e| ConfigError::new("start_date", format!("expected YYYY-MM-DD: {e}")))
    }

    pub fn profile_for(&self, asset: usize) -> LiquidityProfile {
        self.assets[asset].profile.unwrap_or(self.profile)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check(self.days >= 1, "days", || "must be >= 1".into())?;
        self.start()?;
        check(!self.assets.is_empty(), "assets", || "need at least one asset".into())?;
        self.profile
            .validate()
            .map_err(|e| ConfigError::from_impact("profile", e))?;

        let mut seen = std::collections::HashSet::new();
        for (i, a) in self.assets.iter().enumerate() {
            let f = |name: &str| format!("assets[{i}].{name}");
            check(!a.symbol.trim().is_empty(), &f("symbol"), || "must not be empty".into())?;
            check(seen.insert(a.symbol.as_str()), &f("symbol"), || {
                format!("duplicate symbol `{}`", a.symbol)
            })?;
            check(
                a.initial_price.is_finite() && a.initial_price > 0.0,
                &f("initial_price"),
                || format!("must be finite and > 0, got {}", a.initial_price),
            )?;
            check(
                a.typical_daily_volume.is_finite() && a.typical_daily_volume > 0.0,
                &f("typical_daily_volume"),
                || format!("must be finite and > 0, got {}", a.typical_daily_volume),
            )?;
            if let Some(p) = &a.profile {
                p.validate()
                    .map_err(|e| ConfigError::from_impact(&f("profile"), e))?;
            }
        }

        let imp = &self.impact;
        check(
            (0.0..=1.0).contains(&imp.permanent_fraction),
            "impact.permanent_fraction",
            || format!("must be within [0, 1], got {}", imp.permanent_fraction),
        )?;
        check(
            imp.decay_rate.is_finite() && imp.decay_rate >= 0.0,
            "impact.decay_rate",
            || format!("must be finite and >= 0, got {}", imp.decay_rate),
        )?;
        check(
            (0.0..=1.0).contains(&imp.overnight_retention),
            "impact.overnight_retention",
            || format!("must be within [0, 1], got {}", imp.overnight_retention),
        )?;

        let fund = &self.fundamental;
        check(
            fund.volatility.is_finite() && fund.volatility >= 0.0,
            "fundamental.volatility",
            || format!("must be finite and >= 0, got {}", fund.volatility),
        )?;
        check(fund.tick.is_finite() && fund.tick > 0.0, "fundamental.tick", || {
            format!("must be finite and > 0, got {}", fund.tick)
        })?;

        if self.strategy.enabled {
            self.validate_strategy()?;
        }

        let arb = &self.arbitrageur;
        if arb.enabled {
            check(arb.lookback >= 1, "arbitrageur.lookback", || "must be >= 1".into())?;
            check(
                arb.threshold.is_finite() && arb.threshold >= 0.0,
                "arbitrageur.threshold",
                || format!("must be finite and >= 0, got {}", arb.threshold),
            )?;
            check(
                arb.size_fraction.is_finite() && arb.size_fraction > 0.0,
                "arbitrageur.size_fraction",
                || format!("must be finite and > 0, got {}", arb.size_fraction),
            )?;
        }

        let noise = &self.noise;
        check(
            noise.intensity.is_finite() && noise.intensity >= 0.0,
            "noise.intensity",
            || format!("must be finite and >= 0, got {}", noise.intensity),
        )?;
        check(
            noise.size_scale.is_finite() && noise.size_scale >= 0.0,
            "noise.size_scale",
            || format!("must be finite and >= 0, got {}", noise.size_scale),
        )?;

        self.fees.validate().map_err(|e| match e {
            crate::accounting::AccountingError::InvalidParameter { field, value, .. } => {
                ConfigError::new(format!("fees.{field}"), format!("must be finite and >= 0, got {value}"))
            }
            other => ConfigError::new("fees", other.to_string()),
        })?;
        check(
            self.financing_rate.is_finite() && self.financing_rate >= 0.0,
            "financing_rate",
            || format!("must be finite and >= 0, got {}", self.financing_rate),
        )
    }

    fn validate_strategy(&self) -> Result<(), ConfigError> {
        let s = &self.strategy;
        check(self.assets.len() >= 2, "assets", || {
            "the strategy needs at least two assets".into()
        })?;
        check(
            s.portfolio_target.len() == self.assets.len(),
            "strategy.portfolio_target",
            || {
                format!(
                    "has {} entries, expected one per asset ({})",
                    s.portfolio_target.len(),
                    self.assets.len()
                )
            },
        )?;
        check(
            s.portfolio_target.iter().all(|v| v.is_finite()),
            "strategy.portfolio_target",
            || "entries must be finite".into(),
        )?;
        let legs = s.portfolio_target.iter().filter(|v| **v != 0.0).count();
        check(legs >= 1, "strategy.portfolio_target", || "no legs held".into())?;
        check(
            s.round_trip_fraction > 0.0 && s.round_trip_fraction <= VOLUME_CAP_FRACTION,
            "strategy.round_trip_fraction",
            || {
                format!(
                    "must be within (0, {VOLUME_CAP_FRACTION}], got {}",
                    s.round_trip_fraction
                )
            },
        )?;
        check(
            (0.0..0.5).contains(&s.morning_time),
            "strategy.morning_time",
            || format!("must be within [0, 0.5), got {}", s.morning_time),
        )?;
        check(
            s.afternoon_time > 0.5 && s.afternoon_time <= 1.0,
            "strategy.afternoon_time",
            || format!("must be within (0.5, 1], got {}", s.afternoon_time),
        )?;
        check(s.jitter.is_finite() && s.jitter >= 0.0, "strategy.jitter", || {
            format!("must be finite and >= 0, got {}", s.jitter)
        })?;
        if let Some(period) = s.rotation_period {
            check(period > 0, "strategy.rotation_period", || "must be > 0".into())?;
            check(legs < self.assets.len(), "strategy.rotation_period", || {
                "rotation needs at least one asset outside the book".into()
            })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimConfig::default().validate().unwrap();
        SimConfig::from_json("{}").unwrap().validate().unwrap();
    }

    #[test]
    fn partial_document_keeps_defaults() {
        let c = SimConfig::from_json(r#"{"days": 7, "impact": {"decay_rate": 2.0}}"#).unwrap();
        assert_eq!(c.days, 7);
        assert_eq!(c.impact.decay_rate, 2.0);
        assert_eq!(c.impact.permanent_fraction, 0.5);
        assert_eq!(c.profile.shape, 2.0);
    }

    #[test]
    fn unknown_field_rejected() {
        let err = SimConfig::from_json(r#"{"dayz": 7}"#).unwrap_err();
        assert!(err.reason.contains("dayz"), "{err}");
    }

    fn field_of(c: SimConfig) -> String {
        c.validate().unwrap_err().field
    }

    #[test]
    fn violations_name_the_field() {
        let mut c = SimConfig::default();
        c.strategy.round_trip_fraction = 0.06;
        assert_eq!(field_of(c), "strategy.round_trip_fraction");

        let mut c = SimConfig::default();
        c.strategy.morning_time = 0.5;
        assert_eq!(field_of(c), "strategy.morning_time");

        let mut c = SimConfig::default();
        c.strategy.afternoon_time = 0.5;
        assert_eq!(field_of(c), "strategy.afternoon_time");

        let mut c = SimConfig::default();
        c.profile.half_spread_close = 1.0;
        assert_eq!(field_of(c), "profile.half_spread_close");

        let mut c = SimConfig::default();
        c.assets[1].typical_daily_volume = 0.0;
        assert_eq!(field_of(c), "assets[1].typical_daily_volume");

        let mut c = SimConfig::default();
        c.strategy.rotation_period = Some(20);
        assert_eq!(field_of(c), "strategy.rotation_period");

        let mut c = SimConfig::default();
        c.days = 0;
        assert_eq!(field_of(c), "days");

        let mut c = SimConfig::default();
        c.fees.commission = -1.0;
        assert_eq!(field_of(c), "fees.commission");

        let mut c = SimConfig::default();
        c.assets[1].symbol = "AAA".into();
        assert_eq!(field_of(c), "assets[1].symbol");
    }

    #[test]
    fn strategy_needs_two_assets() {
        let mut c = SimConfig::default();
        c.assets.truncate(1);
        c.strategy.portfolio_target = vec![1e6];
        assert_eq!(field_of(c.clone()), "assets");
        c.strategy.enabled = false;
        c.validate().unwrap();
    }
}
