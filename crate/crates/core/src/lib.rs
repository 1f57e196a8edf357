//! Simulation and measurement of the overnight/intraday return footprint left
//! by systematic intraday round-trip trading.
//!
//! * [`ingest`]: daily bar series and their CSV format.
//! * [`impact`]: intraday liquidity profile and price impact with decay.
//! * [`sim`]: the agent-based market simulation.
//! * [`accounting`]: mark-to-market ledger, trading costs, break-even size.
//! * [`decompose`]: cumulative overnight and intraday returns, variance split.
//! * [`cli`]: the `footprint` command-line tool.

pub mod accounting;
pub mod cli;
pub mod config;
pub mod decompose;
pub mod impact;
pub mod ingest;
pub mod rng;
pub mod sim;

pub use accounting::{
    breakeven_size, expected_daily_gain, mark_to_market, round_trip_cost, FeeSchedule, Ledger,
    Portfolio,
};
pub use config::SimConfig;
pub use decompose::{decompose, variance_shares, DecompositionResult, VarianceShares};
pub use impact::{ImpactState, LiquidityProfile};
pub use ingest::{parse_ohlc_csv, Bar, PriceSeries};
pub use sim::{run_sim, SimOutput};
