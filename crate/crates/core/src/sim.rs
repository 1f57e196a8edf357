//! Multi-day, multi-asset market simulation.
//!
//! Each asset's observed mid is an exogenous fundamental price plus the
//! displacement carried by its [`ImpactState`]. Every day three kinds of agent
//! submit aggressive orders at intraday times in `[0, 1]`:
//!
//! * noise traders: zero-mean flow at uniformly random times;
//! * the Strategy agent: holds a long/short book, expands every leg in its
//!   held direction at `morning_time` and unwinds the same quantity at
//!   `afternoon_time`;
//! * the arbitrageur: fades a persistent open-to-close drift once it exceeds
//!   the round-trip cost at the open.
//!
//! Orders are executed in time order, ties broken by agent priority
//! (noise, Strategy, arbitrageur). Transient impact decays between events.
//! The open is recorded before any trade and the close after the last trade
//! and the final decay to `u = 1`. Overnight, the transient displacement is
//! scaled by `overnight_retention` and the fundamental takes a log-normal
//! step; permanent displacement carries over.

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use thiserror::Error;

use crate::accounting::{AccountingError, FeeSchedule, Fill, Ledger, Marks, Portfolio};
use crate::config::{ConfigError, SimConfig, StrategyConfig, VOLUME_CAP_FRACTION};
use crate::impact::{ImpactError, ImpactState, LiquidityProfile};
use crate::ingest::{Bar, IngestError, PriceSeries};
use crate::rng::{seeded, SimRng};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Impact(#[from] ImpactError),
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Agents in execution priority order for orders submitted at the same time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AgentKind {
    Noise,
    Strategy,
    Arbitrageur,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order {
    pub agent: AgentKind,
    pub asset: usize,
    /// Signed shares, positive for buys.
    pub qty: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Execution {
    pub agent: AgentKind,
    pub asset: usize,
    pub qty: f64,
    /// Average of the mid before and after the trade.
    pub price: f64,
    pub u: f64,
    pub half_spread: f64,
    /// Realized mid displacement. Zero for block transfers.
    pub displacement: f64,
    /// Off-book position transfer (Strategy rotation); does not move the mid.
    pub block: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssetState {
    pub symbol: String,
    pub fundamental: f64,
    pub impact: ImpactState,
    pub profile: LiquidityProfile,
    pub typical_daily_volume: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub assets: Vec<AssetState>,
    pub tick: f64,
    pub volatility: f64,
    pub overnight_retention: f64,
}

impl MarketState {
    pub fn from_config(cfg: &SimConfig) -> Result<Self, SimError> {
        let assets = cfg
            .assets
            .iter()
            .enumerate()
            .map(|(i, a)| {
                Ok(AssetState {
                    symbol: a.symbol.clone(),
                    fundamental: a.initial_price,
                    impact: ImpactState::new(
                        cfg.impact.decay_rate,
                        cfg.impact.permanent_fraction,
                    )?,
                    profile: cfg.profile_for(i),
                    typical_daily_volume: a.typical_daily_volume,
                })
            })
            .collect::<Result<_, SimError>>()?;
        Ok(Self {
            assets,
            tick: cfg.fundamental.tick,
            volatility: cfg.fundamental.volatility,
            overnight_retention: cfg.impact.overnight_retention,
        })
    }

    /// Observed midprice, floored at the tick.
    pub fn mid(&self, asset: usize) -> f64 {
        let a = &self.assets[asset];
        (a.fundamental + a.impact.mid_displacement()).max(self.tick)
    }

    pub fn mids(&self) -> Vec<f64> {
        (0..self.assets.len()).map(|i| self.mid(i)).collect()
    }

    pub fn marks(&self) -> Marks {
        self.assets
            .iter()
            .enumerate()
            .map(|(i, a)| (a.symbol.clone(), self.mid(i)))
            .collect()
    }

    fn overnight(&mut self, rng: &mut SimRng) {
        let (vol, keep) = (self.volatility, self.overnight_retention);
        for a in &mut self.assets {
            a.impact = a.impact.with_transient_factor(keep);
            if vol > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                a.fundamental *= (vol * z - 0.5 * vol * vol).exp();
            }
        }
    }
}

/// Zero-mean order flow for one asset and day: a Poisson number of orders
/// with exponentially distributed sizes, random signs and uniform times.
/// Returns `(u, signed_qty)` pairs.
pub fn noise_plan(intensity: f64, size_scale: f64, rng: &mut SimRng) -> Vec<(f64, f64)> {
    if intensity <= 0.0 || size_scale <= 0.0 {
        return Vec::new();
    }
    let count = Poisson::new(intensity)
        .expect("intensity is positive and finite")
        .sample(rng) as usize;
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let size: f64 = Exp1.sample(rng);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            (u, sign * size * size_scale)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseTrader {
    pub intensity: f64,
    pub size_scale: f64,
}

impl NoiseTrader {
    pub fn plan(&self, market: &MarketState, rng: &mut SimRng) -> Vec<Order> {
        (0..market.assets.len())
            .flat_map(|asset| {
                noise_plan(self.intensity, self.size_scale, rng)
                    .into_iter()
                    .map(move |(u, qty)| Order {
                        agent: AgentKind::Noise,
                        asset,
                        qty,
                        u,
                    })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arbitrageur {
    pub lookback: usize,
    /// Price units required beyond `2 * half_spread_at(0)`.
    pub threshold: f64,
    pub size_fraction: f64,
}

impl Arbitrageur {
    /// Mean `close - open` over the last `lookback` days, per asset.
    pub fn estimated_drift(&self, history: &[DayRecord], asset: usize) -> Option<f64> {
        if self.lookback == 0 || history.len() < self.lookback {
            return None;
        }
        let window = &history[history.len() - self.lookback..];
        let sum: f64 = window.iter().map(|d| d.close[asset] - d.open[asset]).sum();
        Some(sum / self.lookback as f64)
    }

    /// Trades against the open-to-close drift when it strictly exceeds the
    /// round-trip cost at the open plus the threshold: a falling session is
    /// sold at the open and bought back at the close, a rising one mirrored.
    pub fn plan(
        &self,
        market: &MarketState,
        history: &[DayRecord],
    ) -> Result<Vec<Order>, ImpactError> {
        let mut orders = Vec::new();
        for (asset, state) in market.assets.iter().enumerate() {
            let Some(drift) = self.estimated_drift(history, asset) else {
                continue;
            };
            let trigger = 2.0 * state.profile.half_spread_at(0.0)? + self.threshold;
            if drift.abs() > trigger {
                let qty = drift.signum() * self.size_fraction * state.typical_daily_volume;
                orders.push(Order {
                    agent: AgentKind::Arbitrageur,
                    asset,
                    qty,
                    u: 0.0,
                });
                orders.push(Order {
                    agent: AgentKind::Arbitrageur,
                    asset,
                    qty: -qty,
                    u: 1.0,
                });
            }
        }
        Ok(orders)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrategyPlan {
    pub morning: Vec<Order>,
    pub afternoon: Vec<Order>,
}

impl StrategyPlan {
    pub fn orders(&self) -> impl Iterator<Item = &Order> {
        self.morning.iter().chain(&self.afternoon)
    }
}

/// The round-trip trader. Owns its book, cash and ledger.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyAgent {
    cfg: StrategyConfig,
    legs: Vec<usize>,
    /// Book held outside the daily round trip, shares per asset.
    base_shares: Vec<f64>,
    portfolio: Portfolio,
    ledger: Ledger,
    fees: FeeSchedule,
    last_marks: Marks,
    rotations: usize,
    next_candidate: usize,
}

impl StrategyAgent {
    /// Builds the book at the market's current mids: each leg holds
    /// `target / mid` shares, financed in cash.
    pub fn new(
        cfg: &StrategyConfig,
        market: &MarketState,
        fees: FeeSchedule,
        financing_rate: f64,
    ) -> Result<Self, SimError> {
        if cfg.portfolio_target.len() != market.assets.len() {
            return Err(ConfigError::new(
                "strategy.portfolio_target",
                "needs one entry per asset",
            )
            .into());
        }
        let mut base_shares = vec![0.0; market.assets.len()];
        let mut portfolio = Portfolio {
            financing_rate,
            ..Default::default()
        };
        let mut legs = Vec::new();
        for (i, &target) in cfg.portfolio_target.iter().enumerate() {
            if target == 0.0 {
                continue;
            }
            let mid = market.mid(i);
            let shares = target / mid;
            base_shares[i] = shares;
            portfolio
                .positions
                .insert(market.assets[i].symbol.clone(), shares);
            portfolio.cash -= shares * mid;
            legs.push(i);
        }
        let next_candidate = legs.last().map_or(0, |&l| l + 1);
        Ok(Self {
            cfg: cfg.clone(),
            legs,
            base_shares,
            portfolio,
            ledger: Ledger::new(),
            fees,
            last_marks: market.marks(),
            rotations: 0,
            next_candidate,
        })
    }

    pub fn legs(&self) -> &[usize] {
        &self.legs
    }

    pub fn base_shares(&self) -> &[f64] {
        &self.base_shares
    }

    pub fn portfolio(&self) -> &Portfolio {
        &self.portfolio
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    fn normal(&self, rng: &mut SimRng) -> f64 {
        if self.cfg.jitter > 0.0 {
            StandardNormal.sample(rng)
        } else {
            0.0
        }
    }

    /// Morning expansion and afternoon unwind for every leg.
    ///
    /// Each leg trades `round_trip_fraction * typical_daily_volume` shares in
    /// its held direction, scaled by `1 + jitter * z`. When the book has both
    /// long and short legs, the larger side is scaled down so the morning
    /// orders are value-neutral at current mids. The afternoon unwinds the
    /// morning quantity (again jittered) plus any shares left over from
    /// previous days. Times are jittered relative to their distance from the
    /// nearest session edge. No one-way quantity exceeds the volume cap.
    pub fn plan(&self, market: &MarketState, rng: &mut SimRng) -> StrategyPlan {
        let jitter = self.cfg.jitter;
        let mut sizes: Vec<(usize, f64, f64)> = self
            .legs
            .iter()
            .map(|&i| {
                let v = market.assets[i].typical_daily_volume;
                let size = (self.cfg.round_trip_fraction * v * (1.0 + jitter * self.normal(rng)))
                    .clamp(0.0, VOLUME_CAP_FRACTION * v);
                (i, self.base_shares[i].signum(), size)
            })
            .collect();

        let side_value = |want: f64, sizes: &[(usize, f64, f64)]| -> f64 {
            sizes
                .iter()
                .filter(|(_, s, _)| *s == want)
                .map(|(i, _, q)| q * market.mid(*i))
                .sum()
        };
        let (long_value, short_value) = (side_value(1.0, &sizes), side_value(-1.0, &sizes));
        if long_value > 0.0 && short_value > 0.0 {
            let (long_scale, short_scale) = if long_value > short_value {
                (short_value / long_value, 1.0)
            } else {
                (1.0, long_value / short_value)
            };
            for (_, sign, q) in &mut sizes {
                *q *= if *sign > 0.0 { long_scale } else { short_scale };
            }
        }

        let u_morning =
            (self.cfg.morning_time * (1.0 + jitter * self.normal(rng))).clamp(0.0, 0.5);
        let u_afternoon =
            1.0 - ((1.0 - self.cfg.afternoon_time) * (1.0 + jitter * self.normal(rng))).clamp(0.0, 0.5);

        let mut plan = StrategyPlan::default();
        for (asset, sign, size) in sizes {
            let v = market.assets[asset].typical_daily_volume;
            let held = self.portfolio.position(&market.assets[asset].symbol);
            let excess = (held - self.base_shares[asset]) * sign;
            let unwind = if jitter > 0.0 {
                (size * (1.0 + jitter * self.normal(rng)) + excess)
                    .clamp(0.0, VOLUME_CAP_FRACTION * v)
            } else {
                (size + excess).clamp(0.0, VOLUME_CAP_FRACTION * v)
            };
            plan.morning.push(Order {
                agent: AgentKind::Strategy,
                asset,
                qty: sign * size,
                u: u_morning,
            });
            plan.afternoon.push(Order {
                agent: AgentKind::Strategy,
                asset,
                qty: -sign * unwind,
                u: u_afternoon,
            });
        }
        plan
    }

    /// Rotation happens on the last day of each period (day indices
    /// `period - 1`, `2 * period - 1`, ...).
    pub fn rotation_due(&self, day: usize) -> bool {
        self.cfg
            .rotation_period
            .is_some_and(|p| p > 0 && (day + 1).is_multiple_of(p))
    }

    /// Moves one leg, chosen round-robin, into the next asset outside the
    /// book (also round-robin). The position is transferred value-for-value
    /// at the current mids as a block trade that pays the open half-spread
    /// but does not move either price.
    fn rotate(&mut self, market: &MarketState) -> Result<Vec<Execution>, SimError> {
        let n = market.assets.len();
        let Some(replacement) = (0..n)
            .map(|k| (self.next_candidate + k) % n)
            .find(|c| !self.legs.contains(c))
        else {
            return Ok(Vec::new());
        };
        let slot = self.rotations % self.legs.len();
        let old = self.legs[slot];
        let held = self.portfolio.position(&market.assets[old].symbol);
        let value = held * market.mid(old);
        let new_shares = value / market.mid(replacement);
        let base_value = self.base_shares[old] * market.mid(old);

        let block = |asset: usize, qty: f64| -> Result<Execution, SimError> {
            Ok(Execution {
                agent: AgentKind::Strategy,
                asset,
                qty,
                price: market.mid(asset),
                u: 0.0,
                half_spread: market.assets[asset].profile.half_spread_at(0.0)?,
                displacement: 0.0,
                block: true,
            })
        };
        let fills = vec![block(old, -held)?, block(replacement, new_shares)?];

        self.base_shares[replacement] = base_value / market.mid(replacement);
        self.base_shares[old] = 0.0;
        self.legs[slot] = replacement;
        self.rotations += 1;
        self.next_candidate = (replacement + 1) % n;
        Ok(fills)
    }

    fn book(&mut self, executions: &[Execution], market: &MarketState) -> Result<(), SimError> {
        let fills: Vec<Fill> = executions
            .iter()
            .filter(|e| e.agent == AgentKind::Strategy)
            .map(|e| Fill {
                symbol: market.assets[e.asset].symbol.clone(),
                qty: e.qty,
                price: e.price,
                half_spread: e.half_spread,
            })
            .collect();
        let close = market.marks();
        self.ledger.accrue_day(
            &mut self.portfolio,
            &fills,
            &self.last_marks,
            &close,
            &self.fees,
        )?;
        self.last_marks = close;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Agents {
    pub noise: Option<NoiseTrader>,
    pub strategy: Option<StrategyAgent>,
    pub arbitrageur: Option<Arbitrageur>,
}

impl Agents {
    pub fn from_config(cfg: &SimConfig, market: &MarketState) -> Result<Self, SimError> {
        let noise = (cfg.noise.intensity > 0.0 && cfg.noise.size_scale > 0.0).then_some(
            NoiseTrader {
                intensity: cfg.noise.intensity,
                size_scale: cfg.noise.size_scale,
            },
        );
        let strategy = if cfg.strategy.enabled {
            Some(StrategyAgent::new(
                &cfg.strategy,
                market,
                cfg.fees,
                cfg.financing_rate,
            )?)
        } else {
            None
        };
        let arbitrageur = cfg.arbitrageur.enabled.then_some(Arbitrageur {
            lookback: cfg.arbitrageur.lookback,
            threshold: cfg.arbitrageur.threshold,
            size_fraction: cfg.arbitrageur.size_fraction,
        });
        Ok(Self {
            noise,
            strategy,
            arbitrageur,
        })
    }
}

/// One agent's activity on one day.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentDay {
    /// Net signed shares per asset, including block transfers.
    pub net_qty: Vec<f64>,
    /// Shares bought per asset through the order book.
    pub bought: Vec<f64>,
    /// Shares sold per asset through the order book.
    pub sold: Vec<f64>,
    /// `-sum(qty * price)`, before costs.
    pub cash_flow: f64,
    /// Permanent displacement per asset left by this agent's trades.
    pub permanent_nudge: Vec<f64>,
}

impl AgentDay {
    fn empty(n: usize) -> Self {
        Self {
            net_qty: vec![0.0; n],
            bought: vec![0.0; n],
            sold: vec![0.0; n],
            cash_flow: 0.0,
            permanent_nudge: vec![0.0; n],
        }
    }

    /// Larger of the shares bought and sold through the book.
    pub fn one_way_qty(&self, asset: usize) -> f64 {
        self.bought[asset].max(self.sold[asset])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub day: usize,
    /// Observed mids at `u = 0`, before any trade.
    pub open: Vec<f64>,
    /// Observed mids at `u = 1`, after the last trade and decay.
    pub close: Vec<f64>,
    pub noise: AgentDay,
    pub strategy: AgentDay,
    pub arbitrageur: AgentDay,
    pub executions: Vec<Execution>,
}

impl DayRecord {
    pub fn agent(&self, kind: AgentKind) -> &AgentDay {
        match kind {
            AgentKind::Noise => &self.noise,
            AgentKind::Strategy => &self.strategy,
            AgentKind::Arbitrageur => &self.arbitrageur,
        }
    }

    fn agent_mut(&mut self, kind: AgentKind) -> &mut AgentDay {
        match kind {
            AgentKind::Noise => &mut self.noise,
            AgentKind::Strategy => &mut self.strategy,
            AgentKind::Arbitrageur => &mut self.arbitrageur,
        }
    }
}

/// Simulates one trading day plus the following overnight step.
pub fn run_day(
    market: &mut MarketState,
    agents: &mut Agents,
    history: &[DayRecord],
    day: usize,
    rng: &mut SimRng,
) -> Result<DayRecord, SimError> {
    let n = market.assets.len();
    let open = market.mids();
    let mut executions = Vec::new();

    if let Some(strategy) = agents.strategy.as_mut() {
        if strategy.rotation_due(day) {
            executions.extend(strategy.rotate(market)?);
        }
    }

    let mut orders = Vec::new();
    if let Some(noise) = &agents.noise {
        orders.extend(noise.plan(market, rng));
    }
    if let Some(strategy) = &agents.strategy {
        orders.extend(strategy.plan(market, rng).orders().copied());
    }
    if let Some(arb) = &agents.arbitrageur {
        orders.extend(arb.plan(market, history)?);
    }
    orders.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.agent.cmp(&b.agent)));

    let mut clock = vec![0.0; n];
    for order in &orders {
        let a = order.asset;
        let state = &mut market.assets[a];
        state.impact = state.impact.decay(order.u - clock[a])?;
        clock[a] = order.u;
        let before = market.mid(a);
        let state = &mut market.assets[a];
        let (next, displacement) = state.impact.apply_trade(&state.profile, order.qty, order.u)?;
        state.impact = next;
        let half_spread = state.profile.half_spread_at(order.u)?;
        let after = market.mid(a);
        executions.push(Execution {
            agent: order.agent,
            asset: a,
            qty: order.qty,
            price: 0.5 * (before + after),
            u: order.u,
            half_spread,
            displacement,
            block: false,
        });
    }
    for (state, t) in market.assets.iter_mut().zip(&clock) {
        state.impact = state.impact.decay(1.0 - t)?;
    }
    let close = market.mids();

    let mut record = DayRecord {
        day,
        open,
        close,
        noise: AgentDay::empty(n),
        strategy: AgentDay::empty(n),
        arbitrageur: AgentDay::empty(n),
        executions: Vec::new(),
    };
    for e in &executions {
        let phi = market.assets[e.asset].impact.permanent_fraction;
        let agent = record.agent_mut(e.agent);
        agent.net_qty[e.asset] += e.qty;
        agent.cash_flow -= e.qty * e.price;
        if !e.block {
            if e.qty > 0.0 {
                agent.bought[e.asset] += e.qty;
            } else {
                agent.sold[e.asset] -= e.qty;
            }
            agent.permanent_nudge[e.asset] += phi * e.displacement;
        }
    }

    if let Some(strategy) = agents.strategy.as_mut() {
        strategy.book(&executions, market)?;
    }
    record.executions = executions;
    market.overnight(rng);
    Ok(record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub series: Vec<PriceSeries>,
    pub ledger: Ledger,
    pub records: Vec<DayRecord>,
    /// The Strategy agent's final state, when it was enabled.
    pub strategy: Option<StrategyAgent>,
}

impl SimOutput {
    pub fn series_for(&self, symbol: &str) -> Option<&PriceSeries> {
        self.series.iter().find(|s| s.symbol() == symbol)
    }
}

/// Weekdays starting at `start` (moved forward to a weekday if needed).
pub fn trading_dates(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    let is_weekday = |d: &NaiveDate| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun);
    std::iter::successors(Some(start), |d| d.checked_add_days(Days::new(1)))
        .filter(is_weekday)
        .take(count)
        .collect()
}

/// Runs a full simulation. Deterministic in `(cfg, seed)`; `cfg.seed` is
/// ignored in favour of the explicit argument.
pub fn run_sim(cfg: &SimConfig, seed: u64) -> Result<SimOutput, SimError> {
    cfg.validate()?;
    let mut market = MarketState::from_config(cfg)?;
    let mut agents = Agents::from_config(cfg, &market)?;
    let mut rng = seeded(seed);

    let mut records: Vec<DayRecord> = Vec::with_capacity(cfg.days);
    for day in 0..cfg.days {
        let rec = run_day(&mut market, &mut agents, &records, day, &mut rng)?;
        records.push(rec);
    }

    let dates = trading_dates(cfg.start()?, cfg.days);
    let series = market
        .assets
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let bars = records
                .iter()
                .zip(&dates)
                .map(|(r, &date)| {
                    let volume = r
                        .executions
                        .iter()
                        .filter(|e| e.asset == i)
                        .fold(0.0, |acc, e| acc + e.qty.abs());
                    Bar {
                        volume: Some(volume),
                        ..Bar::new(date, r.open[i], r.close[i])
                    }
                })
                .collect();
            PriceSeries::new(a.symbol.clone(), bars)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let ledger = agents
        .strategy
        .as_ref()
        .map(|s| s.ledger().clone())
        .unwrap_or_default();
    Ok(SimOutput {
        series,
        ledger,
        records,
        strategy: agents.strategy,
    })
}
