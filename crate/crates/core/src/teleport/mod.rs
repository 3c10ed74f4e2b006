//! Near-deterministic teleportation with the composite hybrid Bell
//! measurement (`B_alpha` on the carriers, `B_II` on the photons) and gate
//! teleportation through `|Z>` and `|Z'>`.
//!
//! A [`Teleporter`] precomputes, from the label register, the exact Kraus
//! operator of every fine measurement branch on the logical input space.
//! Shots then cost a handful of 2x2 (or 4x4) products.

pub mod oracle;

use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{b_alpha_register, b_ii_register, BAlphaOutcome, BIIOutcome};
use crate::channels::{ChannelKind, ResourceChannel};
use crate::error::{Error, Result};
use crate::qubit::HybridQubit;
use crate::register::LabelRegister;

const FILE: &str = "feedforward.tsv";
const SOURCE: &str = include_str!("../../data/feedforward.tsv");

/// Pauli correction `X^j Z^k`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliFrame {
    pub j: bool,
    pub k: bool,
}

impl PauliFrame {
    pub const IDENTITY: PauliFrame = PauliFrame { j: false, k: false };

    pub fn new(j: bool, k: bool) -> Self {
        Self { j, k }
    }

    /// Product up to a global phase.
    pub fn compose(self, other: Self) -> Self {
        Self { j: self.j ^ other.j, k: self.k ^ other.k }
    }

    /// `H X^j Z^k H = X^k Z^j` up to sign.
    pub fn through_hadamard(self) -> Self {
        Self { j: self.k, k: self.j }
    }

    pub fn apply(self, q: &HybridQubit) -> HybridQubit {
        q.apply_pauli(self.j, self.k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardTables {
    pub teleport: BTreeMap<(BAlphaOutcome, BIIOutcome), PauliFrame>,
    pub generation: BTreeMap<BAlphaOutcome, PauliFrame>,
}

fn bad(line: usize, reason: &str) -> Error {
    Error::DataFile { file: FILE, reason: format!("line {line}: {reason}") }
}

fn bit(s: &str, line: usize) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(bad(line, "bit must be 0 or 1")),
    }
}

impl FeedForwardTables {
    pub fn parse(src: &str) -> Result<Self> {
        let mut t = FeedForwardTables { teleport: BTreeMap::new(), generation: BTreeMap::new() };
        for (n, line) in src.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(bad(n, "expected 5 tab-separated columns"));
            }
            let a = BAlphaOutcome::from_name(cols[1]).ok_or_else(|| bad(n, "unknown B_alpha outcome"))?;
            let frame = PauliFrame::new(bit(cols[3], n)?, bit(cols[4], n)?);
            match cols[0] {
                "teleport" => {
                    let ii = BIIOutcome::from_name(cols[2]).ok_or_else(|| bad(n, "unknown B_II outcome"))?;
                    if !a.is_success() && !ii.is_success() {
                        return Err(bad(n, "both-failed row"));
                    }
                    t.teleport.insert((a, ii), frame);
                }
                "generation" => {
                    t.generation.insert(a, frame);
                }
                _ => return Err(bad(n, "unknown table")),
            }
        }
        if t.teleport.len() != 10 {
            return Err(bad(0, "teleport table must cover the 10 heralded outcome pairs"));
        }
        Ok(t)
    }
}

pub fn feedforward_tables() -> &'static FeedForwardTables {
    static TABLES: OnceLock<FeedForwardTables> = OnceLock::new();
    TABLES.get_or_init(|| FeedForwardTables::parse(SOURCE).expect("bundled feed-forward table"))
}

/// Pauli frame heralded by a teleportation outcome pair. Pairs where both
/// succeed with inconsistent parities (`even_zero` with `psi_minus`, ...)
/// never occur and are rejected.
pub fn feedforward(b_alpha: BAlphaOutcome, b_ii: BIIOutcome) -> Result<PauliFrame> {
    if !b_alpha.is_success() && !b_ii.is_success() {
        return Err(Error::BothFailed);
    }
    feedforward_tables()
        .teleport
        .get(&(b_alpha, b_ii))
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("outcome pair ({b_alpha}, {b_ii}) cannot occur")))
}

/// Folds the heralded correction into an existing frame.
pub fn apply_feedforward(frame: PauliFrame, b_alpha: BAlphaOutcome, b_ii: BIIOutcome) -> Result<PauliFrame> {
    Ok(frame.compose(feedforward(b_alpha, b_ii)?))
}

/// Correction after a `B_alpha` merge while building a channel.
pub fn generation_correction(b_alpha: BAlphaOutcome) -> Option<PauliFrame> {
    feedforward_tables().generation.get(&b_alpha).copied()
}

/// Probability that both `B_alpha` and `B_II` fail: `e^{-2 alpha^2} / 2`.
pub fn failure_probability(alpha: f64) -> f64 {
    (-2.0 * alpha * alpha).exp() / 2.0
}

/// Failure probability under photon loss `eta` on every mode,
/// `(1-eta) e^{-2a'^2}/2 + eta 2/(1+e^{2a'^2})`, `a' = sqrt(1-eta) alpha`.
pub fn lossy_failure_probability(alpha: f64, eta: f64) -> f64 {
    let a2 = (1.0 - eta) * alpha * alpha;
    (1.0 - eta) * (-2.0 * a2).exp() / 2.0 + eta * 2.0 / (1.0 + (2.0 * a2).exp())
}

/// Exact failure probability of the same lossy process. With the photon
/// lost `B_II` always fails and `B_alpha` still fails with probability
/// `e^{-2a'^2}`, so the loss term is `eta e^{-2a'^2}`; it never exceeds the
/// corresponding term of [`lossy_failure_probability`].
pub fn lossy_failure_probability_exact(alpha: f64, eta: f64) -> f64 {
    let x = (-2.0 * (1.0 - eta) * alpha * alpha).exp();
    (1.0 - eta) * x / 2.0 + eta * x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TeleportStatus {
    Success,
    Failure,
}

/// Sub-measurement results for one teleported qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BellOutcome {
    pub b_alpha: BAlphaOutcome,
    pub b_ii: BIIOutcome,
}

impl BellOutcome {
    pub fn is_success(self) -> bool {
        self.b_alpha.is_success() || self.b_ii.is_success()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportResult {
    pub status: TeleportStatus,
    pub frame: PauliFrame,
    pub output: HybridQubit,
    pub outcome: BellOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CzTeleportResult {
    pub status: [TeleportStatus; 2],
    pub frames: [PauliFrame; 2],
    /// Logical amplitudes of the output pair, first qubit most significant.
    pub output: [C64; 4],
    pub alpha: f64,
    pub outcomes: [BellOutcome; 2],
}

/// Exact Kraus operator of one fine branch, `out = matrix * in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausBranch {
    pub outcomes: Vec<BellOutcome>,
    pub matrix: Vec<C64>,
}

fn matvec(m: &[C64], v: &[C64]) -> Vec<C64> {
    let d = v.len();
    (0..d).map(|r| (0..d).map(|c| m[r * d + c] * v[c]).sum()).collect()
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// `X^j Z^k` on qubit `q` of an `n`-qubit vector.
pub fn apply_pauli_vec(v: &mut [C64], n: usize, q: usize, frame: PauliFrame) {
    let mask = 1 << (n - 1 - q);
    if frame.k {
        for (i, a) in v.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
    }
    if frame.j {
        for i in 0..v.len() {
            if i & mask == 0 {
                v.swap(i, i | mask);
            }
        }
    }
}

/// The gate a channel teleports, applied to logical amplitudes.
pub fn apply_target_gate(kind: ChannelKind, v: &[C64]) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        ChannelKind::PsiC => v.to_vec(),
        ChannelKind::Z => vec![(v[0] + v[1]) * s, (v[0] - v[1]) * s],
        ChannelKind::ZPrime => vec![v[0], v[1], v[2], -v[3]],
    }
}

/// Output correction from the per-qubit heralded frames, obtained by
/// conjugating the teleportation byproducts through the channel's gate.
pub fn output_correction(kind: ChannelKind, frames: &[PauliFrame]) -> Vec<PauliFrame> {
    match kind {
        ChannelKind::PsiC => frames.to_vec(),
        ChannelKind::Z => vec![frames[0].through_hadamard()],
        ChannelKind::ZPrime => {
            // CZ X_1 CZ = X_1 Z_2
            let (a, b) = (frames[0], frames[1]);
            vec![PauliFrame::new(a.j, a.k ^ b.j), PauliFrame::new(b.j, b.k ^ a.j)]
        }
    }
}

/// Precomputed teleportation through one channel state.
#[derive(Debug, Clone)]
pub struct Teleporter {
    kind: ChannelKind,
    alpha: f64,
    branches: Vec<KrausBranch>,
}

fn basis(n: usize, bits: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); 1 << n];
    v[bits] = C64::new(1.0, 0.0);
    v
}

/// Runs the composite Bell measurement of input qubit `q` against channel
/// qubit `2q` on every branch in `regs`. `alive` maps current register
/// positions to original site ids.
fn measure_qubit(
    regs: Vec<(Vec<BellOutcome>, LabelRegister)>,
    alive: &mut Vec<usize>,
    input: (usize, usize),
    channel: (usize, usize),
) -> Result<Vec<(Vec<BellOutcome>, LabelRegister)>> {
    let pos = |alive: &Vec<usize>, id: usize| alive.iter().position(|&s| s == id).expect("live site");
    let (ci, cc) = (pos(alive, input.1), pos(alive, channel.1));
    let mut after_alpha = Vec::new();
    for (tag, reg) in regs {
        for (o, parts) in b_alpha_register(&reg, ci, cc)? {
            for p in parts {
                after_alpha.push((tag.clone(), o, p));
            }
        }
    }
    alive.retain(|&s| s != input.1 && s != channel.1);
    let (pi, pc) = (pos(alive, input.0), pos(alive, channel.0));
    let mut out = Vec::new();
    for (tag, a, reg) in after_alpha {
        for (ii, parts) in b_ii_register(&reg, pi, pc)? {
            for p in parts {
                let mut t = tag.clone();
                t.push(BellOutcome { b_alpha: a, b_ii: ii });
                out.push((t, p));
            }
        }
    }
    alive.retain(|&s| s != input.0 && s != channel.0);
    Ok(out)
}

impl Teleporter {
    pub fn ideal(kind: ChannelKind, alpha: f64) -> Result<Self> {
        Self::new(&ResourceChannel::ideal(kind, alpha))
    }

    pub fn new(channel: &ResourceChannel) -> Result<Self> {
        let n = channel.kind.inputs();
        let d = 1 << n;
        let mut table: BTreeMap<(Vec<BellOutcome>, usize), Vec<C64>> = BTreeMap::new();
        for x in 0..d {
            let mut reg = LabelRegister::from_logical(&basis(n, x), &vec![channel.alpha; n]);
            reg.push(channel.register.sites(), channel.register.amplitudes());
            let mut alive: Vec<usize> = (0..reg.len()).collect();
            let mut regs = vec![(Vec::new(), reg)];
            for q in 0..n {
                let input = (2 * q, 2 * q + 1);
                let ch = 2 * n + 4 * q;
                regs = measure_qubit(regs, &mut alive, input, (ch, ch + 1))?;
            }
            // B_II failure has two fine sub-events under the same tag
            let mut seen: BTreeMap<Vec<BellOutcome>, usize> = BTreeMap::new();
            let qubits: Vec<(usize, usize)> = (0..n).map(|q| (2 * q, 2 * q + 1)).collect();
            for (tag, r) in regs {
                let (amps, residual) = r.logical_amplitudes(&qubits)?;
                if residual > 1e-9 {
                    return Err(Error::OutsideSubspace { residual });
                }
                let idx = seen.entry(tag.clone()).or_insert(0);
                let m = table.entry((tag, *idx)).or_insert_with(|| vec![C64::new(0.0, 0.0); d * d]);
                *idx += 1;
                for (row, a) in amps.into_iter().enumerate() {
                    m[row * d + x] = a;
                }
            }
        }
        let branches = table
            .into_iter()
            .map(|((outcomes, _), matrix)| KrausBranch { outcomes, matrix })
            .filter(|b| b.matrix.iter().any(|a| a.norm_sqr() > 1e-30))
            .collect();
        Ok(Self { kind: channel.kind, alpha: channel.alpha, branches })
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn branches(&self) -> &[KrausBranch] {
        &self.branches
    }

    /// Branch probabilities for a normalized logical input.
    pub fn branch_probabilities(&self, input: &[C64]) -> Vec<f64> {
        self.branches.iter().map(|b| norm_sqr(&matvec(&b.matrix, input))).collect()
    }

    /// Probability that at least one qubit's Bell measurement fails.
    pub fn failure_probability(&self, input: &[C64]) -> f64 {
        self.branch_probabilities(input)
            .iter()
            .zip(&self.branches)
            .filter(|(_, b)| b.outcomes.iter().any(|o| !o.is_success()))
            .map(|(p, _)| p)
            .sum()
    }

    /// One shot on logical amplitudes. Failed qubits are depolarized by
    /// independent X and Z flips with probability 1/2 each, applied to the
    /// ideal gate output.
    pub fn shot<R: Rng + ?Sized>(&self, input: &[C64], rng: &mut R) -> (Vec<BellOutcome>, Vec<PauliFrame>, Vec<C64>) {
        let n = self.kind.inputs();
        let probs = self.branch_probabilities(input);
        let total: f64 = probs.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if u < *p {
                pick = i;
                break;
            }
            u -= p;
        }
        let branch = &self.branches[pick];
        let failed: Vec<bool> = branch.outcomes.iter().map(|o| !o.is_success()).collect();
        if failed.iter().any(|&f| f) {
            let mut out = apply_target_gate(self.kind, input);
            let mut frames = vec![PauliFrame::IDENTITY; n];
            for q in 0..n {
                if failed[q] {
                    frames[q] = PauliFrame::new(rng.random::<bool>(), rng.random::<bool>());
                    apply_pauli_vec(&mut out, n, q, frames[q]);
                }
            }
            // a failed partner leaves the heralded correction of the other
            // qubit ill-defined through CZ, so the whole output is randomized
            return (branch.outcomes.clone(), frames, out);
        }
        let heralded: Vec<PauliFrame> = branch
            .outcomes
            .iter()
            .map(|o| feedforward(o.b_alpha, o.b_ii).expect("heralded outcome"))
            .collect();
        let corr = output_correction(self.kind, &heralded);
        let mut out = matvec(&branch.matrix, input);
        for (q, f) in corr.iter().enumerate() {
            apply_pauli_vec(&mut out, n, q, *f);
        }
        let norm = norm_sqr(&out).sqrt();
        out.iter_mut().for_each(|a| *a /= norm);
        (branch.outcomes.clone(), heralded, out)
    }

    /// Teleports one hybrid qubit through `Psi_C` or `|Z>`.
    pub fn teleport<R: Rng + ?Sized>(&self, input: &HybridQubit, rng: &mut R) -> Result<TeleportResult> {
        if self.kind.inputs() != 1 {
            return Err(Error::InvalidParameter("single-qubit teleport through a two-qubit channel".into()));
        }
        self.check_alpha(input.alpha)?;
        let (outcomes, frames, out) = self.shot(&input.vector(), rng);
        let status = if outcomes[0].is_success() { TeleportStatus::Success } else { TeleportStatus::Failure };
        Ok(TeleportResult {
            status,
            frame: frames[0],
            output: HybridQubit::normalized(out[0], out[1], self.alpha),
            outcome: outcomes[0],
        })
    }

    /// CZ gate teleportation of a logical pair through `|Z'>`; both qubits
    /// are measured in the same round.
    pub fn teleport_cz<R: Rng + ?Sized>(&self, input: &[C64; 4], alpha: f64, rng: &mut R) -> Result<CzTeleportResult> {
        if self.kind != ChannelKind::ZPrime {
            return Err(Error::InvalidParameter("CZ teleportation needs the Z' channel".into()));
        }
        self.check_alpha(alpha)?;
        let norm = norm_sqr(input).sqrt();
        let v: Vec<C64> = input.iter().map(|a| a / norm).collect();
        let (outcomes, frames, out) = self.shot(&v, rng);
        let st = |o: &BellOutcome| if o.is_success() { TeleportStatus::Success } else { TeleportStatus::Failure };
        Ok(CzTeleportResult {
            status: [st(&outcomes[0]), st(&outcomes[1])],
            frames: [frames[0], frames[1]],
            output: [out[0], out[1], out[2], out[3]],
            alpha: self.alpha,
            outcomes: [outcomes[0], outcomes[1]],
        })
    }

    fn check_alpha(&self, alpha: f64) -> Result<()> {
        if (alpha - self.alpha).abs() > 1e-12 {
            return Err(Error::AlphaMismatch { input: alpha, channel: self.alpha });
        }
        Ok(())
    }
}

/// One-shot teleportation through an ideal channel of the given kind.
pub fn teleport<R: Rng + ?Sized>(input: &HybridQubit, kind: ChannelKind, rng: &mut R) -> Result<TeleportResult> {
    Teleporter::ideal(kind, input.alpha)?.teleport(input, rng)
}
