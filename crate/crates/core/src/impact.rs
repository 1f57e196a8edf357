//! Intraday liquidity profile and midprice response to aggressive orders.
//!
//! Intraday time `u` runs from 0 (open) to 1 (close). Half-spread falls and
//! depth rises between the two endpoints along `u^shape`. A trade of `q`
//! shares displaces the mid by `q / depth(u)`, capped at the contemporaneous
//! half-spread, and the displacement is split into a permanent part and a
//! transient part that decays exponentially.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ImpactError {
    #[error("intraday time {0} outside [0, 1]")]
    TimeOutOfRange(f64),
    #[error("{field} must be {requirement}, got {value}")]
    InvalidParameter {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("non-finite trade quantity {0}")]
    NonFiniteQuantity(f64),
    #[error("negative decay interval {0}")]
    NegativeInterval(f64),
}

fn check_time(u: f64) -> Result<(), ImpactError> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(ImpactError::TimeOutOfRange(u))
    }
}

fn require(
    ok: bool,
    field: &'static str,
    requirement: &'static str,
    value: f64,
) -> Result<(), ImpactError> {
    if ok {
        Ok(())
    } else {
        Err(ImpactError::InvalidParameter {
            field,
            requirement,
            value,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiquidityProfile {
    pub half_spread_open: f64,
    pub half_spread_close: f64,
    /// Shares needed to move the mid by one price unit at the open.
    pub depth_open: f64,
    pub depth_close: f64,
    pub shape: f64,
}

impl Default for LiquidityProfile {
    fn default() -> Self {
        Self {
            half_spread_open: 0.05,
            half_spread_close: 0.02,
            depth_open: 5.0e5,
            depth_close: 7.5e5,
            shape: 2.0,
        }
    }
}

impl LiquidityProfile {
    pub fn new(
        half_spread_open: f64,
        half_spread_close: f64,
        depth_open: f64,
        depth_close: f64,
        shape: f64,
    ) -> Result<Self, ImpactError> {
        let p = Self {
            half_spread_open,
            half_spread_close,
            depth_open,
            depth_close,
            shape,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ImpactError> {
        let Self {
            half_spread_open: hs_o,
            half_spread_close: hs_c,
            depth_open: d_o,
            depth_close: d_c,
            shape,
        } = *self;
        require(hs_o.is_finite() && hs_o > 0.0, "half_spread_open", "finite and > 0", hs_o)?;
        require(
            hs_c.is_finite() && hs_c > 0.0 && hs_c <= hs_o,
            "half_spread_close",
            "finite, > 0 and <= half_spread_open",
            hs_c,
        )?;
        require(d_o.is_finite() && d_o > 0.0, "depth_open", "finite and > 0", d_o)?;
        require(
            d_c.is_finite() && d_c >= d_o,
            "depth_close",
            "finite and >= depth_open",
            d_c,
        )?;
        require(shape.is_finite() && shape > 0.0, "shape", "finite and > 0", shape)
    }

    /// `from + (to - from) * u^shape`, exact at both endpoints and clamped
    /// between them so rounding cannot break monotonicity.
    fn interpolate(&self, from: f64, to: f64, u: f64) -> Result<f64, ImpactError> {
        check_time(u)?;
        if u == 1.0 {
            return Ok(to);
        }
        let v = from + (to - from) * u.powf(self.shape);
        Ok(v.clamp(from.min(to), from.max(to)))
    }

    pub fn half_spread_at(&self, u: f64) -> Result<f64, ImpactError> {
        self.interpolate(self.half_spread_open, self.half_spread_close, u)
    }

    pub fn depth_at(&self, u: f64) -> Result<f64, ImpactError> {
        self.interpolate(self.depth_open, self.depth_close, u)
    }
}

/// Midprice displacement carried by one asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactState {
    pub permanent: f64,
    pub transient: f64,
    /// Exponential decay rate of the transient part, per unit of intraday time.
    pub decay_rate: f64,
    /// Share of each displacement that never decays.
    pub permanent_fraction: f64,
}

impl ImpactState {
    pub fn new(decay_rate: f64, permanent_fraction: f64) -> Result<Self, ImpactError> {
        require(
            decay_rate.is_finite() && decay_rate >= 0.0,
            "decay_rate",
            "finite and >= 0",
            decay_rate,
        )?;
        require(
            (0.0..=1.0).contains(&permanent_fraction),
            "permanent_fraction",
            "within [0, 1]",
            permanent_fraction,
        )?;
        Ok(Self {
            permanent: 0.0,
            transient: 0.0,
            decay_rate,
            permanent_fraction,
        })
    }

    /// Applies an aggressive order and returns the new state together with
    /// the realized (capped) displacement.
    pub fn apply_trade(
        &self,
        profile: &LiquidityProfile,
        signed_qty: f64,
        u: f64,
    ) -> Result<(Self, f64), ImpactError> {
        if !signed_qty.is_finite() {
            return Err(ImpactError::NonFiniteQuantity(signed_qty));
        }
        let cap = profile.half_spread_at(u)?;
        let raw = signed_qty / profile.depth_at(u)?;
        let d = raw.clamp(-cap, cap);
        let phi = self.permanent_fraction;
        let next = Self {
            permanent: self.permanent + phi * d,
            transient: self.transient + (1.0 - phi) * d,
            ..*self
        };
        Ok((next, d))
    }

    pub fn decay(&self, dt: f64) -> Result<Self, ImpactError> {
        if dt.is_nan() || dt < 0.0 {
            return Err(ImpactError::NegativeInterval(dt));
        }
        Ok(self.with_transient_factor((-self.decay_rate * dt).exp()))
    }

    pub(crate) fn with_transient_factor(&self, factor: f64) -> Self {
        Self {
            transient: self.transient * factor,
            ..*self
        }
    }

    pub fn mid_displacement(&self) -> f64 {
        self.permanent + self.transient
    }
}
