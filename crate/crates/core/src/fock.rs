//! Exact linear optics on a truncated multimode Fock space.
//!
//! States are dense tensors indexed by per-mode photon numbers. Every
//! operation that can push photons past a mode's cutoff reports the shed
//! probability mass and fails once it exceeds the state's leakage bound.
//! This layer is the brute-force reference the analytic models are checked
//! against, so it favours exactness over speed.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};

/// Default bound on probability mass shed by a single operation.
pub const DEFAULT_LEAK_BOUND: f64 = 1e-8;

/// Smallest per-mode cutoff that keeps the Poisson tail of `|alpha>`
/// negligible: `ceil(alpha^2 + 6 |alpha| + 10)`.
pub fn min_cutoff(alpha: f64) -> usize {
    let a = alpha.abs();
    (a * a + 6.0 * a + 10.0).ceil() as usize
}

/// Loss rate after amplitude damping at rate `gamma` for time `t`.
pub fn loss_rate_from_decay(gamma: f64, t: f64) -> f64 {
    1.0 - (-gamma * t).exp()
}

/// Physical role of a mode inside a register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModeKind {
    CoherentCarrier,
    PolarizationH,
    PolarizationV,
    /// Scratch mode introduced by a channel (e.g. the loss environment).
    Ancilla,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeLabel {
    pub index: usize,
    pub kind: ModeKind,
}

/// Three-outcome photon-number parity detector reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParityOutcome {
    Zero,
    EvenNonzero,
    Odd,
}

impl ParityOutcome {
    pub fn of(n: usize) -> Self {
        if n == 0 {
            ParityOutcome::Zero
        } else if n.is_multiple_of(2) {
            ParityOutcome::EvenNonzero
        } else {
            ParityOutcome::Odd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClickOutcome {
    NoClick,
    Click,
}

impl ClickOutcome {
    pub fn of(n: usize) -> Self {
        if n == 0 {
            ClickOutcome::NoClick
        } else {
            ClickOutcome::Click
        }
    }
}

/// One branch of a loss channel: `photons_lost` quanta went to the
/// environment with probability `weight`; `state` is normalized.
#[derive(Debug, Clone)]
pub struct LossBranch {
    pub photons_lost: usize,
    pub weight: f64,
    pub state: TruncatedFockState,
}

/// Pure state of `modes.len()` bosonic modes, mode `i` holding at most
/// `dims[i] - 1` photons. Amplitudes are stored row-major with the last
/// mode varying fastest.
#[derive(Debug, Clone)]
pub struct TruncatedFockState {
    modes: Vec<ModeKind>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    amps: Vec<C64>,
    leakage: f64,
    leak_bound: f64,
}

fn strides_for(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

/// Fock amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)` for `n < dim`.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut amp = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 0..dim {
        out.push(amp);
        amp = amp * alpha / ((n + 1) as f64).sqrt();
    }
    out
}

/// Matrix of a two-mode passive unitary restricted to total photon number
/// `total`. Convention: `a^dag -> u[0][0] a^dag + u[1][0] b^dag`,
/// `b^dag -> u[0][1] a^dag + u[1][1] b^dag`. Entry `[m_out * (total+1) + n_in]`
/// maps `|n_in, total-n_in>` to `|m_out, total-m_out>`.
fn block_matrix(u: &[[C64; 2]; 2], total: usize) -> Vec<C64> {
    let size = total + 1;
    let mut mat = vec![C64::new(0.0, 0.0); size * size];
    for n_in in 0..=total {
        // v[m] = amplitude of |m, k-m> after k creation operators.
        let mut v = vec![C64::new(1.0, 0.0)];
        let apply = |v: &mut Vec<C64>, ca: C64, cb: C64, step: usize| {
            let k = v.len() - 1;
            let scale = 1.0 / (step as f64).sqrt();
            let mut next = vec![C64::new(0.0, 0.0); k + 2];
            for (m, &amp) in v.iter().enumerate() {
                if amp == C64::new(0.0, 0.0) {
                    continue;
                }
                next[m + 1] += ca * amp * (((m + 1) as f64).sqrt() * scale);
                next[m] += cb * amp * (((k - m + 1) as f64).sqrt() * scale);
            }
            *v = next;
        };
        for step in 1..=n_in {
            apply(&mut v, u[0][0], u[1][0], step);
        }
        for step in 1..=(total - n_in) {
            apply(&mut v, u[0][1], u[1][1], step);
        }
        for (m, amp) in v.into_iter().enumerate() {
            mat[m * size + n_in] = amp;
        }
    }
    mat
}

impl TruncatedFockState {
    /// Vacuum on the given modes; `cutoffs[i]` is the maximum photon number
    /// of mode `i`.
    pub fn vacuum(modes: &[ModeKind], cutoffs: &[usize]) -> Self {
        assert_eq!(modes.len(), cutoffs.len(), "one cutoff per mode");
        let dims: Vec<usize> = cutoffs.iter().map(|c| c + 1).collect();
        let len = dims.iter().product();
        let mut amps = vec![C64::new(0.0, 0.0); len];
        amps[0] = C64::new(1.0, 0.0);
        Self {
            strides: strides_for(&dims),
            modes: modes.to_vec(),
            dims,
            amps,
            leakage: 0.0,
            leak_bound: DEFAULT_LEAK_BOUND,
        }
    }

    /// Single-mode state from explicit Fock amplitudes.
    pub fn single_mode(kind: ModeKind, amps: Vec<C64>) -> Self {
        let dims = vec![amps.len()];
        Self {
            strides: vec![1],
            modes: vec![kind],
            dims,
            amps,
            leakage: 0.0,
            leak_bound: DEFAULT_LEAK_BOUND,
        }
    }

    /// Single-mode number state `|n>`.
    pub fn number_state(kind: ModeKind, n: usize, cutoff: usize) -> Self {
        assert!(n <= cutoff);
        let mut amps = vec![C64::new(0.0, 0.0); cutoff + 1];
        amps[n] = C64::new(1.0, 0.0);
        Self::single_mode(kind, amps)
    }

    /// Coherent state `|alpha>` on one carrier mode. The cutoff must be at
    /// least [`min_cutoff`]; use [`Self::coherent_state_truncated`] to accept
    /// a smaller one explicitly.
    pub fn coherent_state(alpha: f64, cutoff: usize) -> Result<Self> {
        let need = min_cutoff(alpha);
        if cutoff < need {
            let tail = coherent_tail(alpha, cutoff);
            return Err(Error::TruncationLeakage {
                leaked: tail,
                bound: DEFAULT_LEAK_BOUND,
                context: format!("coherent state alpha={alpha} needs cutoff >= {need}, got {cutoff}"),
            });
        }
        Ok(Self::single_mode(
            ModeKind::CoherentCarrier,
            coherent_amplitudes(C64::new(alpha, 0.0), cutoff + 1),
        ))
    }

    /// Coherent state with an explicitly accepted truncation tail.
    pub fn coherent_state_truncated(alpha: C64, cutoff: usize, max_tail: f64) -> Result<Self> {
        let tail = coherent_tail(alpha.norm(), cutoff);
        if tail > max_tail {
            return Err(Error::TruncationLeakage {
                leaked: tail,
                bound: max_tail,
                context: format!("coherent state |alpha|={} at cutoff {cutoff}", alpha.norm()),
            });
        }
        let mut s = Self::single_mode(ModeKind::CoherentCarrier, coherent_amplitudes(alpha, cutoff + 1));
        s.leakage = tail;
        Ok(s)
    }

    pub fn with_leak_bound(mut self, bound: f64) -> Self {
        self.leak_bound = bound;
        self
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.dims[mode] - 1
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn mode_kind(&self, mode: usize) -> ModeKind {
        self.modes[mode]
    }

    pub fn labels(&self) -> Vec<ModeLabel> {
        self.modes
            .iter()
            .enumerate()
            .map(|(index, &kind)| ModeLabel { index, kind })
            .collect()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// Total probability mass shed by truncation so far.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    /// Amplitude of the basis state with the given occupations.
    pub fn amplitude(&self, occupation: &[usize]) -> C64 {
        let idx = self.flat_index(occupation);
        self.amps[idx]
    }

    fn flat_index(&self, occupation: &[usize]) -> usize {
        assert_eq!(occupation.len(), self.dims.len());
        occupation
            .iter()
            .zip(&self.strides)
            .zip(&self.dims)
            .map(|((&n, &s), &d)| {
                assert!(n < d, "occupation {n} beyond cutoff");
                n * s
            })
            .sum()
    }

    fn occupation_of(&self, mut flat: usize) -> Vec<usize> {
        let mut occ = vec![0; self.dims.len()];
        for (i, &s) in self.strides.iter().enumerate() {
            occ[i] = flat / s;
            flat %= s;
        }
        occ
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes.len() {
            return Err(Error::InvalidMode { mode, num_modes: self.modes.len() });
        }
        Ok(())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn scale(&mut self, c: C64) {
        self.amps.iter_mut().for_each(|a| *a *= c);
    }

    fn same_layout(&self, other: &Self) -> bool {
        self.modes == other.modes && self.dims == other.dims
    }

    /// `self += c * other`; both states must share the same mode layout.
    pub fn add_scaled(&mut self, c: C64, other: &Self) -> Result<()> {
        if !self.same_layout(other) {
            return Err(Error::LayoutMismatch);
        }
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += c * b;
        }
        self.leakage = self.leakage.max(other.leakage);
        Ok(())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if !self.same_layout(other) {
            return Err(Error::LayoutMismatch);
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<a|b>|^2 / (<a|a><b|b>)`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        let ov = self.inner(other)?;
        Ok(ov.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    /// Tensor product, `self` modes first.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut modes = self.modes.clone();
        modes.extend_from_slice(&other.modes);
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self {
            strides: strides_for(&dims),
            modes,
            dims,
            amps,
            leakage: self.leakage + other.leakage,
            leak_bound: self.leak_bound.min(other.leak_bound),
        }
    }

    /// Raise the cutoff of `mode` (no-op when it is already large enough).
    pub fn extend_cutoff(&self, mode: usize, cutoff: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if cutoff < self.dims[mode] {
            return Ok(self.clone());
        }
        let mut dims = self.dims.clone();
        dims[mode] = cutoff + 1;
        let strides = strides_for(&dims);
        let mut amps = vec![C64::new(0.0, 0.0); dims.iter().product()];
        for (flat, &a) in self.amps.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let occ = self.occupation_of(flat);
            let idx: usize = occ.iter().zip(&strides).map(|(n, s)| n * s).sum();
            amps[idx] = a;
        }
        Ok(Self { modes: self.modes.clone(), dims, strides, amps, leakage: self.leakage, leak_bound: self.leak_bound })
    }

    /// Reorder modes so that new mode `i` is old mode `order[i]`.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self> {
        let n = self.modes.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&o| o >= n || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::InvalidPermutation);
        }
        let modes: Vec<ModeKind> = order.iter().map(|&o| self.modes[o]).collect();
        let dims: Vec<usize> = order.iter().map(|&o| self.dims[o]).collect();
        let strides = strides_for(&dims);
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (flat, &a) in self.amps.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let occ = self.occupation_of(flat);
            let idx: usize = order.iter().zip(&strides).map(|(&o, &s)| occ[o] * s).sum();
            amps[idx] = a;
        }
        Ok(Self { modes, dims, strides, amps, leakage: self.leakage, leak_bound: self.leak_bound })
    }

    /// Multiply the amplitude at occupation `n` of `mode` by `e^{i n theta}`.
    pub fn phase_shift(&self, mode: usize, theta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        let stride = self.strides[mode];
        let dim = self.dims[mode];
        let phases: Vec<C64> = (0..dim).map(|n| C64::from_polar(1.0, n as f64 * theta)).collect();
        for (flat, a) in out.amps.iter_mut().enumerate() {
            *a *= phases[(flat / stride) % dim];
        }
        Ok(out)
    }

    /// Apply a passive two-mode unitary (see [`block_matrix`] for the
    /// convention). Fails if more than the leak bound is pushed past a cutoff.
    pub fn two_mode_unitary(&self, mode_a: usize, mode_b: usize, u: [[C64; 2]; 2]) -> Result<Self> {
        self.check_mode(mode_a)?;
        self.check_mode(mode_b)?;
        if mode_a == mode_b {
            return Err(Error::InvalidMode { mode: mode_b, num_modes: self.modes.len() });
        }
        let (da, db) = (self.dims[mode_a], self.dims[mode_b]);
        let (sa, sb) = (self.strides[mode_a], self.strides[mode_b]);
        let max_total = da + db - 2;
        let blocks: Vec<Vec<C64>> = (0..=max_total).map(|n| block_matrix(&u, n)).collect();

        let mut out = self.clone();
        out.amps.iter_mut().for_each(|a| *a = C64::new(0.0, 0.0));
        let mut leaked = 0.0;
        let mut column = Vec::new();
        for base in 0..self.amps.len() {
            if (base / sa) % da != 0 || (base / sb) % db != 0 {
                continue;
            }
            for total in 0..=max_total {
                let lo = total.saturating_sub(db - 1);
                let hi = total.min(da - 1);
                let size = total + 1;
                column.clear();
                column.resize(size, C64::new(0.0, 0.0));
                let mut any = false;
                for na in lo..=hi {
                    let amp = self.amps[base + na * sa + (total - na) * sb];
                    if amp == C64::new(0.0, 0.0) {
                        continue;
                    }
                    any = true;
                    let block = &blocks[total];
                    for (m, c) in column.iter_mut().enumerate() {
                        *c += block[m * size + na] * amp;
                    }
                }
                if !any {
                    continue;
                }
                for (m, c) in column.iter().enumerate() {
                    if m < da && total - m < db {
                        out.amps[base + m * sa + (total - m) * sb] += c;
                    } else {
                        leaked += c.norm_sqr();
                    }
                }
            }
        }
        if leaked > self.leak_bound {
            return Err(Error::TruncationLeakage {
                leaked,
                bound: self.leak_bound,
                context: format!("two-mode unitary on modes ({mode_a}, {mode_b})"),
            });
        }
        out.leakage += leaked;
        Ok(out)
    }

    /// Symmetric 50:50 beam splitter: `a^dag -> (a^dag + i b^dag)/sqrt2`,
    /// `b^dag -> (i a^dag + b^dag)/sqrt2`.
    pub fn beam_splitter_50_50(&self, mode_a: usize, mode_b: usize) -> Result<Self> {
        let r = C64::new(FRAC_1_SQRT_2, 0.0);
        let i = C64::new(0.0, FRAC_1_SQRT_2);
        self.two_mode_unitary(mode_a, mode_b, [[r, i], [i, r]])
    }

    /// Real beam splitter with amplitude transmissivity `t` and reflectivity
    /// `r = sqrt(1 - t^2)`: `a^dag -> t a^dag + r b^dag`, `b^dag -> -r a^dag + t b^dag`.
    pub fn beam_splitter_real(&self, mode_a: usize, mode_b: usize, t: f64) -> Result<Self> {
        let r = (1.0 - t * t).max(0.0).sqrt();
        self.two_mode_unitary(
            mode_a,
            mode_b,
            [[C64::new(t, 0.0), C64::new(-r, 0.0)], [C64::new(r, 0.0), C64::new(t, 0.0)]],
        )
    }

    /// Split the state by a function of the occupations of `modes`. Each
    /// branch keeps the full mode layout and is left unnormalized, so its
    /// squared norm is the outcome probability.
    pub fn branches_by<K, F>(&self, modes: &[usize], key: F) -> Result<BTreeMap<K, Self>>
    where
        K: Ord,
        F: Fn(&[usize]) -> K,
    {
        for &m in modes {
            self.check_mode(m)?;
        }
        let mut out: BTreeMap<K, Self> = BTreeMap::new();
        let mut occ = vec![0; modes.len()];
        for (flat, &a) in self.amps.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            for (slot, &m) in occ.iter_mut().zip(modes) {
                *slot = (flat / self.strides[m]) % self.dims[m];
            }
            let k = key(&occ);
            let branch = out.entry(k).or_insert_with(|| {
                let mut z = self.clone();
                z.amps.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
                z
            });
            branch.amps[flat] = a;
        }
        Ok(out)
    }

    /// Photon-number-resolved outcomes on `modes`: for each occupation tuple
    /// with nonzero weight, the unnormalized conditional state of the
    /// remaining modes.
    pub fn resolve_modes(&self, modes: &[usize]) -> Result<Vec<(Vec<usize>, Self)>> {
        let branches = self.branches_by(modes, |occ| occ.to_vec())?;
        branches
            .into_iter()
            .map(|(occ, state)| {
                let reduced = state.condition_on(modes, &occ)?;
                Ok((occ, reduced))
            })
            .collect()
    }

    /// Project `modes` onto the given occupations and drop them.
    pub fn condition_on(&self, modes: &[usize], occupation: &[usize]) -> Result<Self> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let keep: Vec<usize> = (0..self.modes.len()).filter(|i| !modes.contains(i)).collect();
        let kept_modes: Vec<ModeKind> = keep.iter().map(|&i| self.modes[i]).collect();
        let kept_dims: Vec<usize> = keep.iter().map(|&i| self.dims[i]).collect();
        let kept_strides = strides_for(&kept_dims);
        let len: usize = kept_dims.iter().product();
        let mut amps = vec![C64::new(0.0, 0.0); len];
        let offset: usize = modes.iter().zip(occupation).map(|(&m, &n)| n * self.strides[m]).sum();
        for (new_flat, slot) in amps.iter_mut().enumerate() {
            let mut rem = new_flat;
            let mut idx = offset;
            for (j, &i) in keep.iter().enumerate() {
                let n = rem / kept_strides[j];
                rem %= kept_strides[j];
                idx += n * self.strides[i];
            }
            *slot = self.amps[idx];
        }
        Ok(Self {
            modes: kept_modes,
            strides: kept_strides,
            dims: kept_dims,
            amps,
            leakage: self.leakage,
            leak_bound: self.leak_bound,
        })
    }

    /// Outcome probabilities of the parity detector on `mode`.
    pub fn pnpd_probabilities(&self, mode: usize) -> Result<BTreeMap<ParityOutcome, f64>> {
        Ok(self
            .branches_by(&[mode], |occ| ParityOutcome::of(occ[0]))?
            .into_iter()
            .map(|(k, s)| (k, s.norm_sqr()))
            .collect())
    }

    /// Sample the three-outcome parity POVM on `mode`.
    pub fn measure_pnpd<R: Rng + ?Sized>(&self, mode: usize, rng: &mut R) -> Result<(ParityOutcome, Self)> {
        let branches = self.branches_by(&[mode], |occ| ParityOutcome::of(occ[0]))?;
        Ok(sample_branch(branches, rng))
    }

    pub fn onoff_probabilities(&self, mode: usize) -> Result<BTreeMap<ClickOutcome, f64>> {
        Ok(self
            .branches_by(&[mode], |occ| ClickOutcome::of(occ[0]))?
            .into_iter()
            .map(|(k, s)| (k, s.norm_sqr()))
            .collect())
    }

    /// Sample the on/off detector POVM on `mode`.
    pub fn measure_onoff<R: Rng + ?Sized>(&self, mode: usize, rng: &mut R) -> Result<(ClickOutcome, Self)> {
        let branches = self.branches_by(&[mode], |occ| ClickOutcome::of(occ[0]))?;
        Ok(sample_branch(branches, rng))
    }

    /// Photon loss with rate `eta` on `mode`: the mode is mixed with a vacuum
    /// environment on a beam splitter of transmissivity `1 - eta` and the
    /// environment is traced out. Branches are keyed by photons lost.
    pub fn loss_channel(&self, mode: usize, eta: f64) -> Result<Vec<LossBranch>> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!("loss rate {eta} outside [0, 1]")));
        }
        let env = TruncatedFockState::vacuum(&[ModeKind::Ancilla], &[self.cutoff(mode)]);
        let joint = self.tensor(&env);
        let env_mode = joint.num_modes() - 1;
        let mixed = joint.beam_splitter_real(mode, env_mode, (1.0 - eta).sqrt())?;
        let mut out = Vec::new();
        for (occ, state) in mixed.resolve_modes(&[env_mode])? {
            let weight = state.norm_sqr();
            if weight <= 0.0 {
                continue;
            }
            out.push(LossBranch { photons_lost: occ[0], weight, state: state.normalized() });
        }
        Ok(out)
    }
}

fn coherent_tail(alpha: f64, cutoff: usize) -> f64 {
    let amps = coherent_amplitudes(C64::new(alpha, 0.0), cutoff + 1);
    (1.0 - amps.iter().map(|a| a.norm_sqr()).sum::<f64>()).max(0.0)
}

fn sample_branch<K: Ord, R: Rng + ?Sized>(
    branches: BTreeMap<K, TruncatedFockState>,
    rng: &mut R,
) -> (K, TruncatedFockState) {
    let total: f64 = branches.values().map(|s| s.norm_sqr()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (k, s) in branches {
        let p = s.norm_sqr();
        if u < p {
            return (k, s.normalized());
        }
        u -= p;
        last = Some((k, s));
    }
    let (k, s) = last.expect("at least one branch");
    (k, s.normalized())
}
