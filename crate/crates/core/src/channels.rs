//! Entangled resource channels and their generation.
//!
//! Channels are assembled from hybrid pairs `|H>|beta> + |V>|-beta>` and
//! two-photon pairs `|H>|+> + |V>|->`, joined by `B_I` on photons or
//! `B_alpha` on carriers, on the label register. Every heralded success is
//! corrected to the exact target; fidelities are computed, not assumed.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::tables::click_tables;
use crate::bell::{b_alpha_register, b_i_register, sample_branches, BAlphaOutcome, BIOutcome};
use crate::error::{Error, Result};
use crate::par::Exec;
use crate::register::{LabelRegister, Site};
use crate::teleport::generation_correction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelKind {
    /// `|0_L 0_L> + |1_L 1_L>`, identity teleportation.
    PsiC,
    /// `(I (x) H) Psi_C`, Hadamard teleportation.
    Z,
    /// `CZ_{2,4}(Psi_C (x) Psi_C)`, CZ teleportation.
    ZPrime,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [ChannelKind::PsiC, ChannelKind::Z, ChannelKind::ZPrime];

    /// Qubits teleported through one channel.
    pub fn inputs(self) -> usize {
        match self {
            ChannelKind::ZPrime => 2,
            _ => 1,
        }
    }

    /// Logical qubits in the channel.
    pub fn qubits(self) -> usize {
        2 * self.inputs()
    }

    /// Logical amplitudes, qubit 0 most significant.
    pub fn ideal_amplitudes(self) -> Vec<C64> {
        let r = |x: f64| C64::new(x, 0.0);
        let s = FRAC_1_SQRT_2;
        match self {
            ChannelKind::PsiC => vec![r(s), r(0.0), r(0.0), r(s)],
            ChannelKind::Z => vec![r(0.5), r(0.5), r(0.5), r(-0.5)],
            ChannelKind::ZPrime => {
                let mut v = vec![r(0.0); 16];
                v[0b0000] = r(0.5);
                v[0b0011] = r(0.5);
                v[0b1100] = r(0.5);
                v[0b1111] = r(-0.5);
                v
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::PsiC => "psi_c",
            ChannelKind::Z => "z",
            ChannelKind::ZPrime => "z_prime",
        }
    }
}

/// A channel state held in a label register, qubit `q` at sites
/// `(2q, 2q + 1)` = (photon, carrier).
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceChannel {
    pub kind: ChannelKind,
    pub alpha: f64,
    pub register: LabelRegister,
}

impl ResourceChannel {
    pub fn ideal(kind: ChannelKind, alpha: f64) -> Self {
        let alphas = vec![alpha; kind.qubits()];
        Self { kind, alpha, register: LabelRegister::from_logical(&kind.ideal_amplitudes(), &alphas) }
    }

    pub fn new(kind: ChannelKind, alpha: f64, register: LabelRegister) -> Result<Self> {
        let ok = register.len() == 2 * kind.qubits()
            && register.sites().chunks(2).all(|p| match p {
                [Site::Photon, Site::Carrier(a)] => (a - alpha).abs() < 1e-12,
                _ => false,
            });
        if !ok {
            return Err(Error::LayoutMismatch);
        }
        Ok(Self { kind, alpha, register })
    }

    pub fn qubit_sites(&self) -> Vec<(usize, usize)> {
        (0..self.kind.qubits()).map(|q| (2 * q, 2 * q + 1)).collect()
    }

    /// Logical amplitudes and the weight outside the logical subspace.
    pub fn logical_amplitudes(&self) -> Result<(Vec<C64>, f64)> {
        self.register.logical_amplitudes(&self.qubit_sites())
    }

    /// Fidelity with the ideal channel of the same kind.
    pub fn fidelity_to_ideal(&self) -> Result<f64> {
        let (amps, _) = self.logical_amplitudes()?;
        let overlap: C64 = self.kind.ideal_amplitudes().iter().zip(&amps).map(|(t, a)| t.conj() * a).sum();
        Ok(overlap.norm_sqr() / self.register.physical_norm_sqr())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Joins everything with `B_I` (success 1/2 each).
    GI,
    /// Uses `B_alpha` wherever possible (success `1 - e^{-2 alpha^2}`).
    GAlpha,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::GI => "gi",
            Strategy::GAlpha => "galpha",
        }
    }
}

/// Primitives consumed by generation attempts. Hybrid pairs are keyed by
/// `k` for amplitude `sqrt(k) alpha`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceTally {
    pub photon_pairs: u64,
    pub hybrid_pairs: BTreeMap<u32, u64>,
}

impl ResourceTally {
    fn hybrid(&mut self, k: u32) {
        *self.hybrid_pairs.entry(k).or_default() += 1;
    }

    pub fn hybrid_total(&self) -> u64 {
        self.hybrid_pairs.values().sum()
    }

    pub fn total(&self) -> u64 {
        self.photon_pairs + self.hybrid_total()
    }

    pub fn add(&mut self, other: &ResourceTally) {
        self.photon_pairs += other.photon_pairs;
        for (k, n) in &other.hybrid_pairs {
            *self.hybrid_pairs.entry(*k).or_default() += n;
        }
    }
}

impl std::ops::Add for ResourceTally {
    type Output = ResourceTally;
    fn add(mut self, rhs: Self) -> Self {
        ResourceTally::add(&mut self, &rhs);
        self
    }
}

/// Primitives charged to one attempt, success or not.
pub fn attempt_cost(strategy: Strategy, target: ChannelKind) -> ResourceTally {
    let mut t = ResourceTally::default();
    match (strategy, target) {
        (Strategy::GI, ChannelKind::PsiC) => {
            t.photon_pairs = 1;
            t.hybrid(2);
        }
        (Strategy::GAlpha, ChannelKind::PsiC) => {
            t.hybrid(2);
            t.hybrid(2);
        }
        (Strategy::GI, ChannelKind::Z) => {
            t.photon_pairs = 1;
            t.hybrid(1);
            t.hybrid(1);
        }
        (Strategy::GAlpha, ChannelKind::Z) => {
            t.hybrid(2);
            t.hybrid(1);
            t.hybrid(1);
        }
        (Strategy::GI, ChannelKind::ZPrime) => {
            t.photon_pairs = 3;
            t.hybrid(2);
            t.hybrid(2);
        }
        (Strategy::GAlpha, ChannelKind::ZPrime) => {
            t.hybrid(3);
            t.hybrid(2);
            t.hybrid(1);
            t.hybrid(2);
            t.hybrid(2);
        }
    }
    t
}

/// Number of `B_I` and `B_alpha` (at amplitude `alpha`) joins per attempt.
pub fn joins(strategy: Strategy, target: ChannelKind) -> (u32, u32) {
    match (strategy, target) {
        (Strategy::GI, ChannelKind::PsiC) => (1, 0),
        (Strategy::GAlpha, ChannelKind::PsiC) => (0, 1),
        (Strategy::GI, ChannelKind::Z) => (2, 0),
        (Strategy::GAlpha, ChannelKind::Z) => (1, 1),
        (Strategy::GI, ChannelKind::ZPrime) => (4, 0),
        (Strategy::GAlpha, ChannelKind::ZPrime) => (1, 3),
    }
}

pub fn success_probability(strategy: Strategy, target: ChannelKind, alpha: f64) -> f64 {
    let (n_i, n_alpha) = joins(strategy, target);
    let b_alpha = 1.0 - (-2.0 * alpha * alpha).exp();
    0.5f64.powi(n_i as i32) * b_alpha.powi(n_alpha as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenerationStatus {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationAttempt {
    pub strategy: Strategy,
    pub target: ChannelKind,
    pub consumed: ResourceTally,
    pub status: GenerationStatus,
    pub channel: Option<ResourceChannel>,
    /// Join outcomes in circuit order, for inspection.
    pub b_i_outcomes: Vec<BIOutcome>,
    pub b_alpha_outcomes: Vec<BAlphaOutcome>,
}

/// Register with named sites so joins can refer to parts by role.
struct Build {
    reg: LabelRegister,
    names: Vec<&'static str>,
    b_i: Vec<BIOutcome>,
    b_alpha: Vec<BAlphaOutcome>,
}

impl Build {
    fn new() -> Self {
        Self { reg: LabelRegister::new(), names: Vec::new(), b_i: Vec::new(), b_alpha: Vec::new() }
    }

    fn pos(&self, name: &str) -> usize {
        self.names.iter().position(|n| *n == name).unwrap_or_else(|| panic!("no site {name}"))
    }

    fn hybrid_pair(&mut self, photon: &'static str, carrier: &'static str, amp: f64) {
        self.reg.push_hybrid_pair(amp);
        self.names.extend([photon, carrier]);
    }

    /// `(|H>|+> + |V>|->)/sqrt2`.
    fn photon_pair(&mut self, first: &'static str, second: &'static str) -> Result<()> {
        self.reg.push_photon_pair();
        self.names.extend([first, second]);
        self.reg.diagonal_plate(self.pos(second))
    }

    fn plate(&mut self, photon: &str) -> Result<()> {
        self.reg.diagonal_plate(self.pos(photon))
    }

    fn split(&mut self, carrier: &str, new: &'static str, t: f64) -> Result<()> {
        let p = self.pos(carrier);
        self.reg.split_carrier_with(p, t)?;
        self.names.insert(p + 1, new);
        Ok(())
    }

    /// `B_I` on two photons; the survivor keeps the name `keep` and gets a Z
    /// when the click leaves a minus sign.
    fn b_i<R: Rng + ?Sized>(&mut self, keep: &'static str, other: &str, rng: &mut R) -> Result<bool> {
        let (a, b) = (self.pos(keep), self.pos(other));
        let (o, reg, _) = sample_branches(&b_i_register(&self.reg, a, b)?, rng);
        self.b_i.push(o);
        if !o.is_success() {
            return Ok(false);
        }
        self.reg = reg;
        let at = a.min(b);
        self.names.retain(|n| *n != keep && *n != other);
        self.names.insert(at, keep);
        if click_tables().b_i_minus(o) {
            self.reg.logical_z(at)?;
        }
        Ok(true)
    }

    /// `B_alpha` on two carriers, then the generation feed-forward on the
    /// qubit `(photon, carrier)` that carries the second input's label.
    fn b_alpha<R: Rng + ?Sized>(&mut self, c1: &str, c2: &str, fix: (&str, &str), rng: &mut R) -> Result<bool> {
        let (o, reg, _) = sample_branches(&b_alpha_register(&self.reg, self.pos(c1), self.pos(c2))?, rng);
        self.b_alpha.push(o);
        let Some(frame) = generation_correction(o) else {
            return Ok(false);
        };
        self.reg = reg;
        self.names.retain(|n| *n != c1 && *n != c2);
        if frame.k {
            self.reg.logical_z(self.pos(fix.0))?;
        }
        if frame.j {
            self.reg.logical_x(self.pos(fix.0), self.pos(fix.1))?;
        }
        Ok(true)
    }

    fn finish(&self, kind: ChannelKind, alpha: f64, qubits: &[(&str, &str)]) -> Result<ResourceChannel> {
        let order: Vec<usize> = qubits.iter().flat_map(|(p, c)| [self.pos(p), self.pos(c)]).collect();
        if order.len() != self.names.len() {
            return Err(Error::LayoutMismatch);
        }
        ResourceChannel::new(kind, alpha, self.reg.permute(&order)?)
    }
}

/// `|+>|beta>|beta> + |->|-beta>|-beta>` from a hybrid pair of amplitude
/// `sqrt2 beta` (or an unbalanced split with transmissivity `t`).
fn three_mode(b: &mut Build, p: &'static str, c: &'static str, c2: &'static str, amp: f64, t: f64) -> Result<()> {
    b.hybrid_pair(p, c, amp);
    b.plate(p)?;
    b.split(c, c2, t)
}

/// `sum_y |y>_{c} (x) H|y_L>_{(p, q)}`: two hybrid pairs (amplitudes
/// `a_qubit`, `a_label`) joined by `B_I` after a plate on the second photon.
fn hadamard_tail<R: Rng + ?Sized>(b: &mut Build, p: &'static str, q: &'static str, c: &'static str, a_qubit: f64, a_label: f64, rng: &mut R) -> Result<bool> {
    b.hybrid_pair(p, q, a_qubit);
    b.hybrid_pair("tail_photon", c, a_label);
    b.plate("tail_photon")?;
    b.b_i(p, "tail_photon", rng)
}

fn finish_attempt(strategy: Strategy, target: ChannelKind, b: Build, channel: Option<ResourceChannel>) -> GenerationAttempt {
    GenerationAttempt {
        strategy,
        target,
        consumed: attempt_cost(strategy, target),
        status: if channel.is_some() { GenerationStatus::Success } else { GenerationStatus::Failure },
        channel,
        b_i_outcomes: b.b_i,
        b_alpha_outcomes: b.b_alpha,
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    Ok(())
}

pub fn make_psi_c<R: Rng + ?Sized>(strategy: Strategy, alpha: f64, rng: &mut R) -> Result<GenerationAttempt> {
    check_alpha(alpha)?;
    let root2 = std::f64::consts::SQRT_2 * alpha;
    let mut b = Build::new();
    let ok = match strategy {
        Strategy::GI => {
            b.hybrid_pair("p1", "c1", root2);
            b.split("c1", "c2", FRAC_1_SQRT_2)?;
            b.photon_pair("q1", "p2")?;
            b.b_i("p1", "q1", rng)?
        }
        Strategy::GAlpha => {
            three_mode(&mut b, "p1", "c1", "m1", root2, FRAC_1_SQRT_2)?;
            three_mode(&mut b, "p2", "c2", "m2", root2, FRAC_1_SQRT_2)?;
            b.b_alpha("m1", "m2", ("p2", "c2"), rng)?
        }
    };
    let channel = if ok { Some(b.finish(ChannelKind::PsiC, alpha, &[("p1", "c1"), ("p2", "c2")])?) } else { None };
    Ok(finish_attempt(strategy, ChannelKind::PsiC, b, channel))
}

/// `|Z>` on qubits named `(p1, c1)`, `(p2, c2)`, with hybrid pairs scaled
/// so the output carriers have amplitude `amp`.
fn build_z<R: Rng + ?Sized>(b: &mut Build, strategy: Strategy, amp: f64, merge_amp: f64, rng: &mut R) -> Result<bool> {
    match strategy {
        Strategy::GI => {
            // p1 (x) photon pair (x) p2: first B_I copies the label onto the
            // pair, the second maps |+>/|-> to |0_L> +/- |1_L>
            b.hybrid_pair("p1", "c1", amp);
            b.photon_pair("q1", "q2")?;
            b.hybrid_pair("p2", "c2", amp);
            if !b.b_i("p1", "q1", rng)? {
                return Ok(false);
            }
            if !b.b_i("q2", "p2", rng)? {
                return Ok(false);
            }
            let at = b.pos("q2");
            b.names[at] = "p2";
            Ok(true)
        }
        Strategy::GAlpha => {
            let big = (amp * amp + merge_amp * merge_amp).sqrt();
            three_mode(b, "p1", "c1", "m1", big, amp / big)?;
            if !hadamard_tail(b, "p2", "c2", "m2", amp, merge_amp, rng)? {
                return Ok(false);
            }
            b.b_alpha("m2", "m1", ("p1", "c1"), rng)
        }
    }
}

pub fn make_z<R: Rng + ?Sized>(strategy: Strategy, alpha: f64, rng: &mut R) -> Result<GenerationAttempt> {
    check_alpha(alpha)?;
    let mut b = Build::new();
    let ok = build_z(&mut b, strategy, alpha, alpha, rng)?;
    let channel = if ok { Some(b.finish(ChannelKind::Z, alpha, &[("p1", "c1"), ("p2", "c2")])?) } else { None };
    Ok(finish_attempt(strategy, ChannelKind::Z, b, channel))
}

pub fn make_z_prime<R: Rng + ?Sized>(strategy: Strategy, alpha: f64, rng: &mut R) -> Result<GenerationAttempt> {
    check_alpha(alpha)?;
    let root2 = std::f64::consts::SQRT_2 * alpha;
    let mut b = Build::new();
    let mut ok = build_z(&mut b, strategy, root2, alpha, rng)?;
    // copy each |Z> qubit: split its carrier, then join the spare half to a
    // fresh qubit
    let copies = [("p1", "c1", "s1", "r1", "d1", "e1"), ("p2", "c2", "s2", "r2", "d2", "e2")];
    for (p, c, spare, rp, rc, rm) in copies {
        if !ok {
            break;
        }
        b.split(c, spare, FRAC_1_SQRT_2)?;
        ok = match strategy {
            Strategy::GI => {
                b.plate(p)?;
                b.photon_pair(rm, rp)?;
                let ok = b.b_i(p, rm, rng)?;
                if ok {
                    let at = b.pos(spare);
                    b.names[at] = rc;
                }
                ok
            }
            Strategy::GAlpha => {
                three_mode(&mut b, rp, rc, rm, root2, FRAC_1_SQRT_2)?;
                b.b_alpha(spare, rm, (rp, rc), rng)?
            }
        };
    }
    let channel = if ok {
        Some(b.finish(ChannelKind::ZPrime, alpha, &[("p1", "c1"), ("r1", "d1"), ("p2", "c2"), ("r2", "d2")])?)
    } else {
        None
    };
    Ok(finish_attempt(strategy, ChannelKind::ZPrime, b, channel))
}

pub fn generate<R: Rng + ?Sized>(strategy: Strategy, target: ChannelKind, alpha: f64, rng: &mut R) -> Result<GenerationAttempt> {
    match target {
        ChannelKind::PsiC => make_psi_c(strategy, alpha, rng),
        ChannelKind::Z => make_z(strategy, alpha, rng),
        ChannelKind::ZPrime => make_z_prime(strategy, alpha, rng),
    }
}

/// Repeat-until-success statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CostEstimate {
    pub attempts: u64,
    pub successes: u64,
    pub consumed: ResourceTally,
}

impl std::ops::Add for CostEstimate {
    type Output = CostEstimate;
    fn add(self, rhs: Self) -> Self {
        CostEstimate { attempts: self.attempts + rhs.attempts, successes: self.successes + rhs.successes, consumed: self.consumed + rhs.consumed }
    }
}

impl CostEstimate {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.attempts as f64
    }

    /// Mean primitives per success.
    pub fn mean_per_success(&self) -> f64 {
        self.consumed.total() as f64 / self.successes as f64
    }

    pub fn mean_hybrid_per_success(&self) -> f64 {
        self.consumed.hybrid_total() as f64 / self.successes as f64
    }

    /// Standard error of [`Self::mean_per_success`] by the delta method:
    /// the cost per attempt is fixed at `c`, so the mean is `c / p_hat`.
    pub fn mean_std_error(&self) -> f64 {
        let p = self.success_rate();
        let per_attempt = self.consumed.total() as f64 / self.attempts as f64;
        per_attempt * ((1.0 - p) / (p * p * p * self.attempts as f64)).sqrt()
    }
}

/// Independent attempts through the register circuits.
pub fn estimate_cost(strategy: Strategy, target: ChannelKind, alpha: f64, attempts: u64, seed: u64, exec: Exec) -> Result<CostEstimate> {
    let first_error = std::sync::Mutex::new(None);
    let est = exec.sum_shots(attempts, seed, |rng| match generate(strategy, target, alpha, rng) {
        Ok(a) => CostEstimate { attempts: 1, successes: u64::from(a.status == GenerationStatus::Success), consumed: a.consumed },
        Err(e) => {
            first_error.lock().expect("lock").get_or_insert(e);
            CostEstimate::default()
        }
    });
    match first_error.into_inner().expect("lock") {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::optics::{b_alpha_circuit, b_alpha_events, b_i_events};
    use crate::fock::{min_cutoff, ModeKind, TruncatedFockState};
    use crate::par::stream_rng;
    use crate::qubit::{carrier, fock_ops, logical_amplitudes, photon_polarization};

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn successes(strategy: Strategy, target: ChannelKind, alpha: f64, n: usize, seed: u64) -> (usize, Vec<GenerationAttempt>) {
        let mut rng = stream_rng(seed, 0);
        let all: Vec<GenerationAttempt> = (0..n).map(|_| generate(strategy, target, alpha, &mut rng).unwrap()).collect();
        let ok: Vec<GenerationAttempt> = all.into_iter().filter(|a| a.status == GenerationStatus::Success).collect();
        (ok.len(), ok)
    }

    #[test]
    fn ideal_channels_are_exact() {
        for kind in ChannelKind::ALL {
            let c = ResourceChannel::ideal(kind, 0.9);
            assert!((c.fidelity_to_ideal().unwrap() - 1.0).abs() < 1e-12);
            assert!((c.register.physical_norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn every_success_hits_the_target() {
        for strategy in [Strategy::GI, Strategy::GAlpha] {
            for kind in ChannelKind::ALL {
                for alpha in [0.6, 1.0] {
                    let n = 60;
                    let (k, ok) = successes(strategy, kind, alpha, n, 17);
                    assert!(k > 0, "{strategy:?} {kind:?}");
                    for a in ok {
                        let c = a.channel.unwrap();
                        let (_, residual) = c.logical_amplitudes().unwrap();
                        assert!(residual < 1e-10);
                        assert!(c.fidelity_to_ideal().unwrap() >= 1.0 - 1e-8, "{strategy:?} {kind:?} {alpha}");
                    }
                }
            }
        }
    }

    #[test]
    fn success_rates_follow_join_counts() {
        for (strategy, kind, alpha, n) in [
            (Strategy::GI, ChannelKind::PsiC, 1.0, 2000),
            (Strategy::GAlpha, ChannelKind::PsiC, 0.6, 2000),
            (Strategy::GAlpha, ChannelKind::Z, 1.0, 2000),
            (Strategy::GI, ChannelKind::ZPrime, 1.0, 1000),
            (Strategy::GAlpha, ChannelKind::ZPrime, 0.7, 300),
        ] {
            let (k, _) = successes(strategy, kind, alpha, n, 5);
            let p = success_probability(strategy, kind, alpha);
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!((k as f64 / n as f64 - p).abs() < 4.0 * sigma, "{strategy:?} {kind:?}: {k}/{n} vs {p}");
        }
        let galpha = success_probability(Strategy::GAlpha, ChannelKind::Z, 1.0);
        assert!((galpha - 0.4323).abs() < 5e-5);
        assert_eq!(success_probability(Strategy::GI, ChannelKind::ZPrime, 2.0), 1.0 / 16.0);
    }

    #[test]
    fn h_click_branch_before_correction() {
        let alpha = 0.9;
        let mut reg = LabelRegister::new();
        reg.push_hybrid_pair(std::f64::consts::SQRT_2 * alpha);
        reg.split_carrier(1).unwrap();
        reg.push_photon_pair();
        reg.diagonal_plate(4).unwrap();
        // sites: p1 c1 c2 q1 p2
        let branches = b_i_register(&reg, 0, 3).unwrap();
        let (_, parts) = branches.iter().find(|(o, _)| *o == BIOutcome::HClick).unwrap();
        let post = parts[0].permute(&[0, 1, 3, 2]).unwrap();
        let (amps, _) = post.logical_amplitudes(&[(0, 1), (2, 3)]).unwrap();
        let n = amps[0].norm();
        assert!((amps[0] / n - r(1.0)).norm() < 1e-12);
        assert!((amps[3] / n - r(-1.0)).norm() < 1e-12);
        assert!(amps[1].norm() < 1e-12 && amps[2].norm() < 1e-12);
    }

    #[test]
    fn table_one_rows_are_all_exercised() {
        let mut seen = std::collections::BTreeSet::new();
        let mut rng = stream_rng(23, 0);
        for _ in 0..400 {
            let a = make_psi_c(Strategy::GAlpha, 0.5, &mut rng).unwrap();
            seen.insert(a.b_alpha_outcomes[0]);
            if let Some(c) = a.channel {
                assert!(c.fidelity_to_ideal().unwrap() >= 1.0 - 1e-8, "{:?}", a.b_alpha_outcomes);
            }
        }
        assert_eq!(seen.len(), 5, "{seen:?}");
    }

    #[test]
    fn attempt_costs_match_primitive_lists() {
        assert_eq!(attempt_cost(Strategy::GI, ChannelKind::Z).total(), 3);
        assert_eq!(attempt_cost(Strategy::GAlpha, ChannelKind::Z).hybrid_total(), 3);
        let zp = attempt_cost(Strategy::GI, ChannelKind::ZPrime);
        assert_eq!((zp.photon_pairs * 16, zp.hybrid_total() * 16), (48, 32));
        assert_eq!(attempt_cost(Strategy::GAlpha, ChannelKind::ZPrime).hybrid_total(), 5);
    }

    #[test]
    fn estimate_is_thread_independent() {
        let a = estimate_cost(Strategy::GI, ChannelKind::Z, 1.0, 3000, 9, Exec::Sequential).unwrap();
        let b = estimate_cost(Strategy::GI, ChannelKind::Z, 1.0, 3000, 9, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }

    // Fock-space oracle for Psi_C generation.

    fn fock_hybrid_pair(amp: f64, cutoff: usize) -> TruncatedFockState {
        let s = FRAC_1_SQRT_2;
        let h = photon_polarization(r(1.0), r(0.0), 1).tensor(&carrier(r(amp), cutoff));
        let v = photon_polarization(r(0.0), r(1.0), 1).tensor(&carrier(r(-amp), cutoff));
        let mut out = h;
        out.scale(r(s));
        out.add_scaled(r(s), &v).unwrap();
        out
    }

    fn psi_c_fidelity(state: &TruncatedFockState, alpha: f64) -> f64 {
        let (amps, _) = logical_amplitudes(state, 2, alpha).unwrap();
        let ideal = ChannelKind::PsiC.ideal_amplitudes();
        let ov: C64 = ideal.iter().zip(&amps).map(|(a, b)| a.conj() * b).sum();
        ov.norm_sqr() / state.norm_sqr()
    }

    #[test]
    fn fock_g_i_psi_c() {
        let alpha = 0.8;
        let big = std::f64::consts::SQRT_2 * alpha;
        let cut = min_cutoff(big);
        // [H_p, V_p, C1, C2, H_q1, V_q1, H_q2, V_q2]
        let pair = fock_hybrid_pair(big, cut).tensor(&TruncatedFockState::vacuum(&[ModeKind::CoherentCarrier], &[cut]));
        let pair = b_alpha_circuit(&pair, 2, 3).unwrap();
        let s = FRAC_1_SQRT_2;
        let hp = photon_polarization(r(1.0), r(0.0), 1).tensor(&photon_polarization(r(s), r(s), 1));
        let vm = photon_polarization(r(0.0), r(1.0), 1).tensor(&photon_polarization(r(s), r(-s), 1));
        let mut photons = hp;
        photons.scale(r(s));
        photons.add_scaled(r(s), &vm).unwrap();
        let state = pair.tensor(&photons);
        let mut heralded = 0.0;
        for e in b_i_events(&state, [0, 1, 4, 5]).unwrap() {
            let w = e.state.norm_sqr();
            if !e.outcome.is_success() || w < 1e-14 {
                continue;
            }
            heralded += w;
            // remaining [H_p, C1, C2, V_q1, H_q2, V_q2]; kept photon rails H_p / V_q1
            let mut out = e.state.permute_modes(&[0, 3, 1, 4, 5, 2]).unwrap();
            if click_tables().b_i_minus(e.outcome) {
                out = fock_ops::z_rotation(&out, 0, std::f64::consts::PI).unwrap();
            }
            assert!(psi_c_fidelity(&out, alpha) >= 1.0 - 1e-8, "{:?}", e.outcome);
        }
        assert!((heralded - 0.5).abs() < 1e-8);
    }

    #[test]
    fn fock_g_alpha_psi_c() {
        let alpha = 0.6;
        let cut = min_cutoff(alpha);
        let s = FRAC_1_SQRT_2;
        let three = |sign: f64, minus: bool| {
            crate::qubit::photon_pm(minus, 1).tensor(&carrier(r(sign * alpha), cut)).tensor(&carrier(r(sign * alpha), cut))
        };
        let mut t = three(1.0, false);
        t.scale(r(s));
        t.add_scaled(r(s), &three(-1.0, true)).unwrap();
        // [H1, V1, C1, M1, H2, V2, C2, M2]
        let state = t.tensor(&t);
        let mut heralded = 0.0;
        for e in b_alpha_events(&state, 3, 7).unwrap() {
            let w = e.state.norm_sqr();
            let Some(frame) = generation_correction(e.outcome) else {
                continue;
            };
            if w < 1e-14 {
                continue;
            }
            heralded += w;
            let mut out = e.state.clone();
            if frame.k {
                out = fock_ops::z_rotation(&out, 3, std::f64::consts::PI).unwrap();
            }
            if frame.j {
                out = fock_ops::pauli_x(&out, 3).unwrap();
            }
            assert!(psi_c_fidelity(&out, alpha) >= 1.0 - 1e-8, "{} {:?}", e.outcome, e.occupation);
        }
        assert!((heralded - (1.0 - (-2.0 * alpha * alpha).exp())).abs() < 1e-8);
    }
}
