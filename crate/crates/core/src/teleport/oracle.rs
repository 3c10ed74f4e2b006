//! Fock-space oracle for teleportation.
//!
//! The input qubit and the measured half of the channel are embedded in six
//! truncated modes `[H_in, V_in, C_in, H_1, V_1, C_1]`, optionally sent
//! through photon loss, and measured with the `B_II` and `B_alpha` circuits.
//! Because the channel is `sum C[y1][y2] |y1_L>|y2_L>`, running the circuit
//! on `|x_L>|y1_L>` gives a scalar `K[y1][x]` per fine event (loss pattern,
//! detector occupations), and the unmeasured output carries
//! `sum_{y1} C[y1][y2] K[y1][x]`. Nothing here uses the label register.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::Rng;

use super::{feedforward, BellOutcome};
use crate::bell::optics::{b_alpha_events, b_ii_events};
use crate::channels::ChannelKind;
use crate::error::{Error, Result};
use crate::fock::{min_cutoff, TruncatedFockState};
use crate::qubit::{logical_basis_state, HybridQubit};

/// Loss rates applied before the Bell measurement.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossRates {
    /// On both polarization rails of the input photon.
    pub input_photon: f64,
    pub input_carrier: f64,
    pub channel_carrier: f64,
}

impl LossRates {
    /// Rate `eta` on the input photon and on both carriers.
    pub fn uniform(eta: f64) -> Self {
        Self { input_photon: eta, input_carrier: eta, channel_carrier: eta }
    }
}

/// One fine event and its map from input to output logical amplitudes,
/// `out[y2] = sum_x matrix[y2][x] in[x]` (uncorrected).
#[derive(Debug, Clone)]
pub struct OracleBranch {
    pub outcome: BellOutcome,
    pub photons_lost: Vec<usize>,
    pub matrix: [[C64; 2]; 2],
}

/// Amplitudes `C[y1][y2]` of a single-qubit teleportation channel.
pub fn channel_matrix(kind: ChannelKind) -> Result<[[C64; 2]; 2]> {
    let a = kind.ideal_amplitudes();
    if a.len() != 4 {
        return Err(Error::InvalidParameter(format!("{} is not a single-qubit channel", kind.name())));
    }
    Ok([[a[0], a[1]], [a[2], a[3]]])
}

type Key = (Vec<usize>, Vec<usize>, Vec<usize>);

fn apply_loss(state: TruncatedFockState, losses: &[(usize, f64)]) -> Result<Vec<(Vec<usize>, TruncatedFockState)>> {
    let mut out = vec![(Vec::new(), state)];
    for &(mode, eta) in losses {
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
}

/// Scalar kernels `K[y1][x]` for every fine event.
fn kernels(alpha: f64, loss: LossRates) -> Result<BTreeMap<Key, (BellOutcome, [[C64; 2]; 2])>> {
    let cc = min_cutoff(alpha);
    let losses: Vec<(usize, f64)> = [(0, loss.input_photon), (1, loss.input_photon), (2, loss.input_carrier), (5, loss.channel_carrier)]
        .into_iter()
        .filter(|&(_, eta)| eta > 0.0)
        .collect();
    let mut table: BTreeMap<Key, (BellOutcome, [[C64; 2]; 2])> = BTreeMap::new();
    for x in 0..2 {
        for y in 0..2 {
            let state = logical_basis_state(x == 1, alpha, 1, cc).tensor(&logical_basis_state(y == 1, alpha, 1, cc));
            for (lost, s) in apply_loss(state, &losses)? {
                for ii in b_ii_events(&s, [0, 1, 3, 4])? {
                    // remaining modes: [C_in, C_1]
                    for a in b_alpha_events(&ii.state, 0, 1)? {
                        let amp = a.state.amplitudes()[0];
                        if amp.norm_sqr() < 1e-30 {
                            continue;
                        }
                        let key = (lost.clone(), ii.occupation.clone(), a.occupation.clone());
                        let outcome = BellOutcome { b_alpha: a.outcome, b_ii: ii.outcome };
                        let entry = table.entry(key).or_insert((outcome, [[C64::new(0.0, 0.0); 2]; 2]));
                        entry.1[y][x] = amp;
                    }
                }
            }
        }
    }
    Ok(table)
}

/// Teleportation branches computed from the Fock-space circuits.
#[derive(Debug, Clone)]
pub struct OracleTeleporter {
    pub kind: ChannelKind,
    pub alpha: f64,
    pub branches: Vec<OracleBranch>,
}

impl OracleTeleporter {
    pub fn new(kind: ChannelKind, alpha: f64, loss: LossRates) -> Result<Self> {
        let c = channel_matrix(kind)?;
        let branches = kernels(alpha, loss)?
            .into_iter()
            .map(|((photons_lost, _, _), (outcome, k))| {
                let mut m = [[C64::new(0.0, 0.0); 2]; 2];
                for (y2, row) in m.iter_mut().enumerate() {
                    for (x, slot) in row.iter_mut().enumerate() {
                        *slot = (0..2).map(|y1| c[y1][y2] * k[y1][x]).sum();
                    }
                }
                OracleBranch { outcome, photons_lost, matrix: m }
            })
            .collect();
        Ok(Self { kind, alpha, branches })
    }

    pub fn ideal(kind: ChannelKind, alpha: f64) -> Result<Self> {
        Self::new(kind, alpha, LossRates::default())
    }

    fn output(b: &OracleBranch, v: [C64; 2]) -> [C64; 2] {
        [b.matrix[0][0] * v[0] + b.matrix[0][1] * v[1], b.matrix[1][0] * v[0] + b.matrix[1][1] * v[1]]
    }

    pub fn branch_probabilities(&self, q: &HybridQubit) -> Vec<f64> {
        let v = q.vector();
        self.branches.iter().map(|b| Self::output(b, v).iter().map(|a| a.norm_sqr()).sum()).collect()
    }

    /// Probability that both sub-measurements fail.
    pub fn failure_probability(&self, q: &HybridQubit) -> f64 {
        self.branch_probabilities(q)
            .into_iter()
            .zip(&self.branches)
            .filter(|(_, b)| !b.outcome.is_success())
            .map(|(p, _)| p)
            .sum()
    }

    /// Feed-forward corrected, normalized output of a heralded branch.
    pub fn corrected_output(&self, b: &OracleBranch, q: &HybridQubit) -> Result<HybridQubit> {
        let frame = feedforward(b.outcome.b_alpha, b.outcome.b_ii)?;
        let frame = if self.kind == ChannelKind::Z { frame.through_hadamard() } else { frame };
        let out = Self::output(b, q.vector());
        Ok(frame.apply(&HybridQubit::normalized(out[0], out[1], self.alpha)))
    }

    /// Sample one fine event; `None` output on failure.
    pub fn shot<R: Rng + ?Sized>(&self, q: &HybridQubit, rng: &mut R) -> Result<(BellOutcome, Option<HybridQubit>)> {
        let probs = self.branch_probabilities(q);
        let total: f64 = probs.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = self.branches.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if u < *p {
                pick = i;
                break;
            }
            u -= p;
        }
        let b = &self.branches[pick];
        if !b.outcome.is_success() {
            return Ok((b.outcome, None));
        }
        Ok((b.outcome, Some(self.corrected_output(b, q)?)))
    }
}
