//! Photon-loss error model for hybrid qubits.
//!
//! A loss rate `eta` on every mode damps the carrier to `alpha' =
//! sqrt(1-eta) alpha` and removes the photon with probability `eta`. Both
//! leave, at worst, a logical Z. The default rates take the worst-case
//! ensemble (all normalizations set to one); [`LossRule::HalfPerLoss`] is
//! the cruder reading in which any lost photon gives Z with probability 1/2.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::ChannelKind;
use crate::error::{Error, Result};
use crate::qubit::{BranchState, HybridQubit, MixedBranch, MixedHybridState};
use crate::teleport::lossy_failure_probability;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossRule {
    /// `p = (1 - (1-eta) e^{-2 eta alpha^2}) / 2`.
    #[default]
    WorstCase,
    /// `p = P(at least one photon lost) / 2`.
    HalfPerLoss,
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("loss rate {eta} outside [0, 1]")));
    }
    Ok(())
}

/// Memory Z-error rate `p = (1 - (1-eta) e^{-2 eta alpha^2}) / 2`.
pub fn memory_error_rate(eta: f64, alpha: f64) -> f64 {
    0.5 * (1.0 - (1.0 - eta) * (-2.0 * eta * alpha * alpha).exp())
}

/// Half the probability that the photon or any carrier quantum is lost.
pub fn half_per_loss_rate(eta: f64, alpha: f64) -> f64 {
    0.5 * (1.0 - (1.0 - eta) * (-eta * alpha * alpha).exp())
}

pub fn error_rate(rule: LossRule, eta: f64, alpha: f64) -> f64 {
    match rule {
        LossRule::WorstCase => memory_error_rate(eta, alpha),
        LossRule::HalfPerLoss => half_per_loss_rate(eta, alpha),
    }
}

/// Worst-case four-branch ensemble of a lossy hybrid qubit. Branches with
/// zero weight are dropped, so `eta = 0` returns the input alone.
pub fn evolve_hybrid_under_loss(q: &HybridQubit, eta: f64) -> Result<MixedHybridState> {
    check_eta(eta)?;
    let damped = (1.0 - eta).sqrt() * q.alpha;
    let keep = HybridQubit::normalized(q.a, q.b, damped);
    let flip = keep.pauli_z();
    let e = (-2.0 * eta * q.alpha * q.alpha).exp();
    let branches = [
        MixedBranch { weight: (1.0 - eta) * (1.0 + e) / 2.0, state: BranchState::Hybrid(keep), z_error: false },
        MixedBranch { weight: eta / 2.0, state: BranchState::PhotonLost(keep), z_error: false },
        MixedBranch { weight: (1.0 - eta) * (1.0 - e) / 2.0, state: BranchState::Hybrid(flip), z_error: true },
        MixedBranch { weight: eta / 2.0, state: BranchState::PhotonLost(flip), z_error: true },
    ];
    Ok(MixedHybridState { branches: branches.into_iter().filter(|b| b.weight > 0.0).collect() })
}

/// Same ensemble with the exact input-dependent weights of the photon-lost
/// branches, `eta/2 * || a|alpha'> +/- b|-alpha'> ||^2`. Diagnostic only.
pub fn evolve_hybrid_under_loss_exact(q: &HybridQubit, eta: f64) -> Result<MixedHybridState> {
    let mut out = evolve_hybrid_under_loss(q, eta)?;
    let damped = (1.0 - eta).sqrt() * q.alpha;
    let overlap = (-2.0 * damped * damped).exp();
    let cross = (q.a.conj() * q.b).re * overlap;
    for b in out.branches.iter_mut() {
        if let BranchState::PhotonLost(_) = b.state {
            let sign = if b.z_error { -1.0 } else { 1.0 };
            b.weight = eta / 2.0 * (1.0 + 2.0 * sign * cross);
        }
    }
    Ok(out)
}

/// Pauli error probabilities on one qubit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PauliRates {
    pub x: f64,
    pub z: f64,
}

/// Per-output-qubit errors from loss on a teleportation channel: for `|Z>`
/// loss on one half shows up as Z, on the other as X after the Hadamard;
/// for `|Z'>` every qubit carries a Z. `Psi_C` behaves like memory.
pub fn channel_error_rates(target: ChannelKind, eta: f64, alpha: f64) -> Vec<PauliRates> {
    channel_error_rates_with(LossRule::WorstCase, target, eta, alpha)
}

pub fn channel_error_rates_with(rule: LossRule, target: ChannelKind, eta: f64, alpha: f64) -> Vec<PauliRates> {
    let p = error_rate(rule, eta, alpha);
    match target {
        ChannelKind::PsiC => vec![PauliRates { x: 0.0, z: p }],
        ChannelKind::Z => vec![PauliRates { x: 0.0, z: p }, PauliRates { x: p, z: 0.0 }],
        ChannelKind::ZPrime => vec![PauliRates { x: 0.0, z: p }; 4],
    }
}

/// All rates that feed the threshold simulation for one `(eta, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossErrorModel {
    pub eta: f64,
    pub alpha: f64,
    pub rule: LossRule,
    pub p_memory: f64,
    pub p_telefail: f64,
    pub p_channel_z: f64,
    pub p_channel_x: f64,
}

impl LossErrorModel {
    pub fn new(eta: f64, alpha: f64) -> Result<Self> {
        Self::with_rule(LossRule::WorstCase, eta, alpha)
    }

    pub fn with_rule(rule: LossRule, eta: f64, alpha: f64) -> Result<Self> {
        check_eta(eta)?;
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be non-negative, got {alpha}")));
        }
        let p = error_rate(rule, eta, alpha);
        Ok(Self {
            eta,
            alpha,
            rule,
            p_memory: p,
            p_telefail: lossy_failure_probability(alpha, eta),
            p_channel_z: p,
            p_channel_x: p,
        })
    }
}

/// Beam-splitter loss oracle on the truncated Fock space.
pub mod oracle {
    use super::*;
    use crate::fock::{min_cutoff, TruncatedFockState};
    use crate::qubit::logical_basis_state;

    /// Mass of the loss Kraus branches that act as identity and as Z on the
    /// logical labels, with labels treated as orthonormal (the worst-case
    /// normalization).
    #[derive(Debug, Clone, Copy, Default, PartialEq)]
    pub struct LossWeights {
        pub photon_kept_no_error: f64,
        pub photon_kept_z: f64,
        pub photon_lost_no_error: f64,
        pub photon_lost_z: f64,
    }

    impl LossWeights {
        pub fn z_error(&self) -> f64 {
            self.photon_kept_z + self.photon_lost_z
        }

        pub fn total(&self) -> f64 {
            self.photon_kept_no_error + self.photon_kept_z + self.photon_lost_no_error + self.photon_lost_z
        }
    }

    /// Runs `|0_L>` and `|1_L>` through loss `eta` on the H rail, V rail and
    /// carrier. Each Kraus branch maps `|x_L>` to `c_x |x'>` where `|x'>` is
    /// the damped basis state (or its photon-less remnant); the sign of
    /// `c_1 / c_0` classifies the branch and `|c_0|^2` is its weight.
    pub fn loss_weights(alpha: f64, eta: f64) -> Result<LossWeights> {
        check_eta(eta)?;
        let cut = min_cutoff(alpha);
        let damped = (1.0 - eta).sqrt() * alpha;
        let branches = |one: bool| -> Result<Vec<(Vec<usize>, TruncatedFockState)>> {
            let mut out = vec![(Vec::new(), logical_basis_state(one, alpha, 1, cut))];
            for mode in 0..3 {
                let mut next = Vec::new();
                for (lost, s) in out {
                    for b in s.loss_channel(mode, eta)? {
                        let mut st = b.state;
                        st.scale(C64::new(b.weight.sqrt(), 0.0));
                        let mut l = lost.clone();
                        l.push(b.photons_lost);
                        next.push((l, st));
                    }
                }
                out = next;
            }
            Ok(out)
        };
        let zero = branches(false)?;
        let one = branches(true)?;
        let reference = |one: bool, photon_lost: bool| -> TruncatedFockState {
            let full = logical_basis_state(one, damped, 1, cut);
            if !photon_lost {
                return full;
            }
            // the carrier of the damped state next to an empty photon
            let sign = if one { -1.0 } else { 1.0 };
            let photon = TruncatedFockState::vacuum(&[full.mode_kind(0), full.mode_kind(1)], &[1, 1]);
            photon.tensor(&crate::qubit::carrier(C64::new(sign * damped, 0.0), cut))
        };
        let mut w = LossWeights::default();
        for (lost, s0) in &zero {
            let Some((_, s1)) = one.iter().find(|(l, _)| l == lost) else {
                continue;
            };
            let photon_lost = lost[0] + lost[1] > 0;
            let c0 = reference(false, photon_lost).inner(s0)?;
            let c1 = reference(true, photon_lost).inner(s1)?;
            let weight = s0.norm_sqr();
            if weight < 1e-16 {
                continue;
            }
            for (c, s) in [(c0, s0), (c1, s1)] {
                let resid = s.norm_sqr() - c.norm_sqr();
                if resid > 1e-8 {
                    return Err(Error::OutsideSubspace { residual: resid });
                }
            }
            let z = (c1 / c0).re < 0.0;
            match (photon_lost, z) {
                (false, false) => w.photon_kept_no_error += weight,
                (false, true) => w.photon_kept_z += weight,
                (true, false) => w.photon_lost_no_error += weight,
                (true, true) => w.photon_lost_z += weight,
            }
        }
        Ok(w)
    }
}
