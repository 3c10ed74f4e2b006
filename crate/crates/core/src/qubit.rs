//! The logical hybrid qubit `a |+>|alpha> + b |->|-alpha>` and its
//! single-qubit operations, together with the bridge to the Fock layer.
//!
//! In the Fock embedding every hybrid qubit occupies three consecutive modes
//! `[H rail, V rail, coherent carrier]`; the polarization photon is a dual-rail
//! single photon.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, min_cutoff, ModeKind, TruncatedFockState};

const NORM_TOL: f64 = 1e-12;
/// Largest residual norm outside the logical subspace accepted by extraction.
pub const SUBSPACE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridQubit {
    pub a: C64,
    pub b: C64,
    pub alpha: f64,
}

impl HybridQubit {
    pub fn new(a: C64, b: C64, alpha: f64) -> Result<Self> {
        let n = a.norm_sqr() + b.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!("|a|^2+|b|^2 = {n}, expected 1")));
        }
        Ok(Self { a, b, alpha })
    }

    /// Normalizes `(a, b)`; panics on the zero vector.
    pub fn normalized(a: C64, b: C64, alpha: f64) -> Self {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        assert!(n > 0.0, "zero logical vector");
        Self { a: a / n, b: b / n, alpha }
    }

    pub fn zero(alpha: f64) -> Self {
        Self { a: C64::new(1.0, 0.0), b: C64::new(0.0, 0.0), alpha }
    }

    pub fn one(alpha: f64) -> Self {
        Self { a: C64::new(0.0, 0.0), b: C64::new(1.0, 0.0), alpha }
    }

    pub fn plus(alpha: f64) -> Self {
        Self { a: C64::new(FRAC_1_SQRT_2, 0.0), b: C64::new(FRAC_1_SQRT_2, 0.0), alpha }
    }

    /// Haar-ish random logical state (uniform on the Bloch sphere).
    pub fn random<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Self {
        let cos_t: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let theta = cos_t.acos();
        Self {
            a: C64::new((theta / 2.0).cos(), 0.0),
            b: C64::from_polar((theta / 2.0).sin(), phi),
            alpha,
        }
    }

    pub fn vector(&self) -> [C64; 2] {
        [self.a, self.b]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    /// Bit flip on both modes: `(a, b) -> (b, a)`.
    pub fn pauli_x(&self) -> Self {
        Self { a: self.b, b: self.a, alpha: self.alpha }
    }

    pub fn pauli_z(&self) -> Self {
        Self { a: self.a, b: -self.b, alpha: self.alpha }
    }

    /// Phase on the single-photon mode only: `b -> e^{i theta} b`.
    pub fn z_rotation(&self, theta: f64) -> Self {
        Self { a: self.a, b: self.b * C64::from_polar(1.0, theta), alpha: self.alpha }
    }

    pub fn hadamard(&self) -> Self {
        let s = FRAC_1_SQRT_2;
        Self { a: (self.a + self.b) * s, b: (self.a - self.b) * s, alpha: self.alpha }
    }

    /// `X^j Z^k` applied to the state (Z first).
    pub fn apply_pauli(&self, x: bool, z: bool) -> Self {
        let q = if z { self.pauli_z() } else { *self };
        if x {
            q.pauli_x()
        } else {
            q
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..*self }
    }

    /// Global phase fixed so that `a` is real and non-negative (or `b` when
    /// `a` vanishes).
    pub fn canonical(&self) -> Self {
        let pivot = if self.a.norm() > 1e-14 { self.a } else { self.b };
        let phase = C64::from_polar(1.0, -pivot.arg());
        Self { a: self.a * phase, b: self.b * phase, alpha: self.alpha }
    }

    /// `|<self|other>|^2` of the logical vectors.
    pub fn fidelity(&self, other: &Self) -> f64 {
        (self.a.conj() * other.a + self.b.conj() * other.b).norm_sqr()
    }

    /// Z-basis readout: returns the bit and the probability of that bit.
    pub fn measure_z<R: Rng + ?Sized>(&self, rng: &mut R) -> (u8, f64) {
        let p0 = self.a.norm_sqr() / self.norm_sqr();
        if rng.random::<f64>() < p0 {
            (0, p0)
        } else {
            (1, 1.0 - p0)
        }
    }

    /// Fock embedding with photon rails truncated at one photon and the
    /// carrier at [`min_cutoff`].
    pub fn embed_fock(&self) -> Result<TruncatedFockState> {
        self.embed_fock_with(1, min_cutoff(self.alpha))
    }

    pub fn embed_fock_with(&self, photon_cutoff: usize, coherent_cutoff: usize) -> Result<TruncatedFockState> {
        if coherent_cutoff < min_cutoff(self.alpha) {
            return Err(Error::TruncationLeakage {
                leaked: f64::NAN,
                bound: crate::fock::DEFAULT_LEAK_BOUND,
                context: format!("carrier cutoff {coherent_cutoff} too small for alpha={}", self.alpha),
            });
        }
        let zero = logical_basis_state(false, self.alpha, photon_cutoff, coherent_cutoff);
        let one = logical_basis_state(true, self.alpha, photon_cutoff, coherent_cutoff);
        let mut s = zero.clone();
        s.scale(self.a);
        s.add_scaled(self.b, &one)?;
        Ok(s)
    }

    /// Read the logical amplitudes back out of a three-mode Fock state.
    pub fn extract_logical(state: &TruncatedFockState, alpha: f64) -> Result<Self> {
        let (amps, residual) = logical_amplitudes(state, 1, alpha)?;
        if residual > SUBSPACE_TOL {
            return Err(Error::OutsideSubspace { residual });
        }
        Ok(Self::normalized(amps[0], amps[1], alpha))
    }
}

/// Dual-rail photon in `|+>` (false) or `|->` (true).
pub fn photon_pm(minus: bool, cutoff: usize) -> TruncatedFockState {
    photon_polarization(C64::new(FRAC_1_SQRT_2, 0.0), C64::new(if minus { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 }, 0.0), cutoff)
}

/// Dual-rail photon `h |H> + v |V>`.
pub fn photon_polarization(h: C64, v: C64, cutoff: usize) -> TruncatedFockState {
    let hs = TruncatedFockState::number_state(ModeKind::PolarizationH, 1, cutoff)
        .tensor(&TruncatedFockState::number_state(ModeKind::PolarizationV, 0, cutoff));
    let vs = TruncatedFockState::number_state(ModeKind::PolarizationH, 0, cutoff)
        .tensor(&TruncatedFockState::number_state(ModeKind::PolarizationV, 1, cutoff));
    let mut s = hs;
    s.scale(h);
    s.add_scaled(v, &vs).expect("same layout");
    s
}

/// Coherent carrier `|amp>` with complex amplitude.
pub fn carrier(amp: C64, cutoff: usize) -> TruncatedFockState {
    TruncatedFockState::single_mode(ModeKind::CoherentCarrier, coherent_amplitudes(amp, cutoff + 1))
}

/// `|0_L> = |+>|alpha>` or `|1_L> = |->|-alpha>` as a three-mode state.
pub fn logical_basis_state(one: bool, alpha: f64, photon_cutoff: usize, coherent_cutoff: usize) -> TruncatedFockState {
    let sign = if one { -1.0 } else { 1.0 };
    photon_pm(one, photon_cutoff).tensor(&carrier(C64::new(sign * alpha, 0.0), coherent_cutoff))
}

/// Product of logical basis states, qubit 0 first (most significant bit of
/// the index), matching the cutoffs of `template` (3 modes per qubit).
fn logical_product(bits: usize, n: usize, alpha: f64, dims: &[usize]) -> TruncatedFockState {
    let mut state: Option<TruncatedFockState> = None;
    for q in 0..n {
        let one = (bits >> (n - 1 - q)) & 1 == 1;
        let photon_cutoff = dims[3 * q] - 1;
        assert_eq!(dims[3 * q + 1], dims[3 * q], "H and V rails share a cutoff");
        let factor = logical_basis_state(one, alpha, photon_cutoff, dims[3 * q + 2] - 1);
        state = Some(match state {
            None => factor,
            Some(s) => s.tensor(&factor),
        });
    }
    state.expect("at least one qubit")
}

/// Project a `3n`-mode state onto the logical product basis. Returns the
/// `2^n` amplitudes (qubit 0 most significant) and the squared norm left
/// outside the logical subspace.
pub fn logical_amplitudes(state: &TruncatedFockState, n: usize, alpha: f64) -> Result<(Vec<C64>, f64)> {
    if state.num_modes() != 3 * n {
        return Err(Error::ModeKindMismatch(format!(
            "expected {} modes for {n} hybrid qubits, found {}",
            3 * n,
            state.num_modes()
        )));
    }
    for q in 0..n {
        let kinds = [state.mode_kind(3 * q), state.mode_kind(3 * q + 1), state.mode_kind(3 * q + 2)];
        if kinds != [ModeKind::PolarizationH, ModeKind::PolarizationV, ModeKind::CoherentCarrier] {
            return Err(Error::ModeKindMismatch(format!("qubit {q} modes are {kinds:?}")));
        }
    }
    let dims = state.dims().to_vec();
    let mut amps = Vec::with_capacity(1 << n);
    for bits in 0..(1usize << n) {
        let basis = logical_product(bits, n, alpha, &dims);
        amps.push(basis.inner(state)?);
    }
    let captured: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    Ok((amps, (state.norm_sqr() - captured).max(0.0)))
}

/// Fock-level single-qubit operations on the qubit whose modes start at
/// `offset`.
pub mod fock_ops {
    use super::*;

    /// Polarization rotator `|+> <-> |->` (a pi phase on the V rail) and a
    /// pi phase shifter on the carrier.
    pub fn pauli_x(state: &TruncatedFockState, offset: usize) -> Result<TruncatedFockState> {
        state.phase_shift(offset + 1, PI)?.phase_shift(offset + 2, PI)
    }

    /// `|+><+| + e^{i theta} |-><-|` on the photon rails only.
    pub fn z_rotation(state: &TruncatedFockState, offset: usize, theta: f64) -> Result<TruncatedFockState> {
        let e = C64::from_polar(1.0, theta);
        let p = (C64::new(1.0, 0.0) + e) * 0.5;
        let m = (C64::new(1.0, 0.0) - e) * 0.5;
        state.two_mode_unitary(offset, offset + 1, [[p, m], [m, p]])
    }

    /// Rotates `|+> -> |H>`, `|-> -> |V>` on a dual-rail photon.
    pub fn diagonal_plate(state: &TruncatedFockState, h: usize, v: usize) -> Result<TruncatedFockState> {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        state.two_mode_unitary(h, v, [[s, s], [s, -s]])
    }

    /// Probability that a `{+,-}` polarization measurement on the photon of
    /// the qubit at `offset` reads `-` (logical 1).
    pub fn measure_z_probability(state: &TruncatedFockState, offset: usize) -> Result<f64> {
        let rotated = diagonal_plate(state, offset, offset + 1)?;
        let branches = rotated.branches_by(&[offset, offset + 1], |occ| (occ[0], occ[1]))?;
        let total = rotated.norm_sqr();
        Ok(branches.get(&(0, 1)).map(|s| s.norm_sqr()).unwrap_or(0.0) / total)
    }
}

/// Which physical form a branch of a lossy hybrid qubit takes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchState {
    /// Photon intact, carrier damped: `a|+>|alpha'> + s b|->|-alpha'>`.
    Hybrid(HybridQubit),
    /// Photon lost: `|0>(a|alpha'> + s b|-alpha'>)`, a bare coherent-state qubit.
    PhotonLost(HybridQubit),
}

impl BranchState {
    pub fn logical(&self) -> &HybridQubit {
        match self {
            BranchState::Hybrid(q) | BranchState::PhotonLost(q) => q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedBranch {
    pub weight: f64,
    pub state: BranchState,
    /// The branch differs from the ideal state by a logical Z.
    pub z_error: bool,
}

/// Weighted pure-branch ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedHybridState {
    pub branches: Vec<MixedBranch>,
}

impl MixedHybridState {
    pub fn pure(q: HybridQubit) -> Self {
        Self { branches: vec![MixedBranch { weight: 1.0, state: BranchState::Hybrid(q), z_error: false }] }
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    pub fn z_error_weight(&self) -> f64 {
        self.branches.iter().filter(|b| b.z_error).map(|b| b.weight).sum()
    }
}
