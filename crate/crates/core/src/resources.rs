//! Primitive counts for one round of fault-tolerant error correction.
//!
//! Hadamards consume one `|Z>` channel, CZ gates one `|Z'>`, and diagonal
//! gates one primitive each. Memory and X-measurement are free.

use serde::{Deserialize, Serialize};

use crate::channels::{attempt_cost, success_probability, ChannelKind, Strategy};
use crate::error::{Error, Result};

/// Fraction of the operations in a round spent on each gate type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperationMix {
    pub memory: f64,
    pub hadamard: f64,
    pub cz: f64,
    pub diagonal: f64,
    pub x_measure: f64,
}

impl Default for OperationMix {
    fn default() -> Self {
        Self { memory: 0.284, hadamard: 0.098, cz: 0.343, diagonal: 0.164, x_measure: 0.111 }
    }
}

impl OperationMix {
    /// Operations per round.
    pub const ROUND: f64 = 1000.0;

    pub fn total(&self) -> f64 {
        self.memory + self.hadamard + self.cz + self.diagonal + self.x_measure
    }

    /// Integer counts out of [`Self::ROUND`] operations.
    pub fn counts(&self) -> OperationCounts {
        let n = |f: f64| (f * Self::ROUND).round() as u64;
        OperationCounts {
            memory: n(self.memory),
            hadamard: n(self.hadamard),
            cz: n(self.cz),
            diagonal: n(self.diagonal),
            x_measure: n(self.x_measure),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationCounts {
    pub memory: u64,
    pub hadamard: u64,
    pub cz: u64,
    pub diagonal: u64,
    pub x_measure: u64,
}

/// Average primitives spent per heralded channel: attempt cost over success
/// probability.
pub fn cost_per_channel(target: ChannelKind, strategy: Strategy, alpha: f64) -> Result<f64> {
    let p = success_probability(strategy, target, alpha);
    if !(p > 0.0) {
        return Err(Error::Divergent(alpha));
    }
    Ok(attempt_cost(strategy, target).total() as f64 / p)
}

/// Primitives for one round with the default operation mix.
pub fn total_round_cost(strategy: Strategy, alpha: f64) -> Result<f64> {
    round_cost_with(&OperationMix::default(), strategy, alpha)
}

pub fn round_cost_with(mix: &OperationMix, strategy: Strategy, alpha: f64) -> Result<f64> {
    let c = mix.counts();
    let h = cost_per_channel(ChannelKind::Z, strategy, alpha)?;
    let cz = cost_per_channel(ChannelKind::ZPrime, strategy, alpha)?;
    Ok(c.hadamard as f64 * h + c.cz as f64 * cz + c.diagonal as f64)
}

/// `total_round_cost(GAlpha, alpha)` as `alpha -> infinity`.
pub fn g_alpha_limit() -> f64 {
    let c = OperationMix::default().counts();
    let z = attempt_cost(Strategy::GAlpha, ChannelKind::Z).total() as f64 * 2.0;
    let zp = attempt_cost(Strategy::GAlpha, ChannelKind::ZPrime).total() as f64 * 2.0;
    c.hadamard as f64 * z + c.cz as f64 * zp + c.diagonal as f64
}

/// Amplitude at which both strategies cost the same, by bisection.
pub fn crossover_alpha(tolerance: f64) -> Result<f64> {
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tolerance}")));
    }
    let target = total_round_cost(Strategy::GI, 1.0)?;
    let gap = |a: f64| total_round_cost(Strategy::GAlpha, a).map(|c| c - target);
    let (mut lo, mut hi) = (0.05, 5.0);
    if gap(lo)? <= 0.0 || gap(hi)? >= 0.0 {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Cheaper strategy at `alpha`; ties go to `GI`.
pub fn recommended_strategy(alpha: f64) -> Strategy {
    match (total_round_cost(Strategy::GAlpha, alpha), total_round_cost(Strategy::GI, alpha)) {
        (Ok(ga), Ok(gi)) if ga < gi => Strategy::GAlpha,
        _ => Strategy::GI,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub alpha: f64,
    pub strategy: Strategy,
    pub cost: f64,
}

/// One row per `(alpha, strategy)`; divergent points are skipped.
pub fn cost_curve(alphas: &[f64]) -> Vec<CostRow> {
    let mut out = Vec::new();
    for &alpha in alphas {
        for strategy in [Strategy::GI, Strategy::GAlpha] {
            if let Ok(cost) = total_round_cost(strategy, alpha) {
                out.push(CostRow { alpha, strategy, cost });
            }
        }
    }
    out
}
