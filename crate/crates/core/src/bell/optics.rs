//! Linear-optics circuits for the three Bell-type measurements on a
//! [`TruncatedFockState`].
//!
//! Conventions:
//! * `B_alpha`: a `-pi/2` phase plate on the second carrier before and after
//!   the symmetric 50:50 beam splitter, so `|a>|a> -> |sqrt2 a>|0>` and
//!   `|a>|-a> -> |0>|sqrt2 a>`, followed by parity detectors (upper, lower).
//! * `B_II`: a polarization flip on input 2, a PBS sending `(H1, V2)` to the
//!   upper port and `(H2, V1)` to the lower port, a 45 degree plate on the
//!   upper port and the mirrored plate on the lower port, four on/off
//!   detectors.
//! * `B_I`: the PBS keeps `(H1, V2)` and sends `(H2, V1)` to number-resolving
//!   detectors behind a mirrored 45 degree plate; the kept photon passes a
//!   45 degree plate so that a photon from `H1` leaves as `|+>` and one from
//!   `V2` as `|->`.
//!
//! A PBS is a relabeling of modes, so it does not appear as an operation.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64 as C64;
use rand::Rng;

use super::tables::{click_tables, Pol};
use super::{BAlphaOutcome, BIIOutcome, BIOutcome};
use crate::error::{Error, Result};
use crate::fock::{ClickOutcome, ModeKind, ParityOutcome, TruncatedFockState};

/// Residual weight tolerated in detector patterns outside the click tables.
const ANOMALY_TOL: f64 = 1e-10;

/// One photon-number-resolved detector event. `state` is the unnormalized
/// conditional state of the unmeasured modes, so its squared norm is the
/// event probability.
#[derive(Debug, Clone)]
pub struct FineEvent<O> {
    pub outcome: O,
    pub occupation: Vec<usize>,
    pub state: TruncatedFockState,
}

pub fn outcome_probability<O: PartialEq>(events: &[FineEvent<O>], outcome: O) -> f64 {
    events.iter().filter(|e| e.outcome == outcome).map(|e| e.state.norm_sqr()).sum()
}

/// Sample one fine event; returns its coarse outcome and the normalized
/// conditional state.
pub fn sample_event<O: Copy, R: Rng + ?Sized>(events: &[FineEvent<O>], rng: &mut R) -> (O, TruncatedFockState) {
    let total: f64 = events.iter().map(|e| e.state.norm_sqr()).sum();
    let mut u = rng.random::<f64>() * total;
    for e in events {
        let w = e.state.norm_sqr();
        if u < w {
            return (e.outcome, e.state.clone().normalized());
        }
        u -= w;
    }
    let e = events.iter().rev().find(|e| e.state.norm_sqr() > 0.0).expect("nonempty events");
    (e.outcome, e.state.clone().normalized())
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn diagonal() -> [[C64; 2]; 2] {
    let s = c(FRAC_1_SQRT_2);
    [[s, s], [s, -s]]
}

fn mirrored_diagonal() -> [[C64; 2]; 2] {
    let s = c(FRAC_1_SQRT_2);
    [[s, -s], [s, s]]
}

fn expect_kind(state: &TruncatedFockState, mode: usize, kind: ModeKind) -> Result<()> {
    if mode >= state.num_modes() {
        return Err(Error::InvalidMode { mode, num_modes: state.num_modes() });
    }
    if state.mode_kind(mode) != kind {
        return Err(Error::ModeKindMismatch(format!(
            "mode {mode} is {:?}, expected {kind:?}",
            state.mode_kind(mode)
        )));
    }
    Ok(())
}

/// The passive part of `B_alpha`.
pub fn b_alpha_circuit(state: &TruncatedFockState, m1: usize, m2: usize) -> Result<TruncatedFockState> {
    expect_kind(state, m1, ModeKind::CoherentCarrier)?;
    expect_kind(state, m2, ModeKind::CoherentCarrier)?;
    state.phase_shift(m2, -FRAC_PI_2)?.beam_splitter_50_50(m1, m2)?.phase_shift(m2, -FRAC_PI_2)
}

pub fn b_alpha_events(state: &TruncatedFockState, m1: usize, m2: usize) -> Result<Vec<FineEvent<BAlphaOutcome>>> {
    let out = b_alpha_circuit(state, m1, m2)?;
    let tables = click_tables();
    let mut events = Vec::new();
    for (occ, reduced) in out.resolve_modes(&[m1, m2])? {
        match tables.b_alpha_outcome(ParityOutcome::of(occ[0]), ParityOutcome::of(occ[1])) {
            Some(outcome) => events.push(FineEvent { outcome, occupation: occ, state: reduced }),
            None => {
                let w = reduced.norm_sqr();
                if w > ANOMALY_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "B_alpha: both detectors fired ({occ:?}) with weight {w:e}; carriers of unequal amplitude?"
                    )));
                }
            }
        }
    }
    Ok(events)
}

/// Sampled `B_alpha` on carrier modes `m1` (upper) and `m2` (lower).
pub fn b_alpha<R: Rng + ?Sized>(
    state: &TruncatedFockState,
    m1: usize,
    m2: usize,
    rng: &mut R,
) -> Result<(BAlphaOutcome, TruncatedFockState)> {
    Ok(sample_event(&b_alpha_events(state, m1, m2)?, rng))
}

/// Photon rails `[H1, V1, H2, V2]` of the two inputs.
pub type PhotonRails = [usize; 4];

fn check_rails(state: &TruncatedFockState, rails: PhotonRails) -> Result<TruncatedFockState> {
    let [h1, v1, h2, v2] = rails;
    expect_kind(state, h1, ModeKind::PolarizationH)?;
    expect_kind(state, v1, ModeKind::PolarizationV)?;
    expect_kind(state, h2, ModeKind::PolarizationH)?;
    expect_kind(state, v2, ModeKind::PolarizationV)?;
    let mut s = state.clone();
    for m in rails {
        s = s.extend_cutoff(m, 2)?;
    }
    Ok(s)
}

/// The passive part of `B_II`. Photon rails are widened to hold two photons.
pub fn b_ii_circuit(state: &TruncatedFockState, rails: PhotonRails) -> Result<TruncatedFockState> {
    let [h1, v1, h2, v2] = rails;
    let s = check_rails(state, rails)?;
    let flip = [[c(0.0), c(1.0)], [c(1.0), c(0.0)]];
    s.two_mode_unitary(h2, v2, flip)?
        .two_mode_unitary(h1, v2, diagonal())?
        .two_mode_unitary(h2, v1, mirrored_diagonal())
}

pub fn b_ii_events(state: &TruncatedFockState, rails: PhotonRails) -> Result<Vec<FineEvent<BIIOutcome>>> {
    let [h1, v1, h2, v2] = rails;
    let out = b_ii_circuit(state, rails)?;
    let tables = click_tables();
    let click = |n: usize| ClickOutcome::of(n) == ClickOutcome::Click;
    // detector order: upper H, upper V, lower H, lower V
    Ok(out
        .resolve_modes(&[h1, v2, h2, v1])?
        .into_iter()
        .map(|(occ, state)| {
            let upper = (click(occ[0]), click(occ[1]));
            let lower = (click(occ[2]), click(occ[3]));
            let single = |p: (bool, bool)| match p {
                (true, false) => Some(Pol::H),
                (false, true) => Some(Pol::V),
                _ => None,
            };
            let outcome = match (single(upper), single(lower)) {
                (Some(u), Some(l)) => tables.b_ii_outcome(u, l),
                _ => BIIOutcome::Failure,
            };
            FineEvent { outcome, occupation: occ, state }
        })
        .collect())
}

pub fn b_ii<R: Rng + ?Sized>(
    state: &TruncatedFockState,
    rails: PhotonRails,
    rng: &mut R,
) -> Result<(BIIOutcome, TruncatedFockState)> {
    Ok(sample_event(&b_ii_events(state, rails)?, rng))
}

/// The passive part of `B_I`. The surviving photon occupies rails `H1` and
/// `V2`, which act as its H and V rails.
pub fn b_i_circuit(state: &TruncatedFockState, rails: PhotonRails) -> Result<TruncatedFockState> {
    let [h1, v1, h2, v2] = rails;
    let s = check_rails(state, rails)?;
    s.two_mode_unitary(h2, v1, mirrored_diagonal())?.two_mode_unitary(h1, v2, diagonal())
}

/// `B_I` events with number-resolving detectors `(H, V) = (H2, V1)`; the
/// occupation is reported in that order.
pub fn b_i_events(state: &TruncatedFockState, rails: PhotonRails) -> Result<Vec<FineEvent<BIOutcome>>> {
    let [_, v1, h2, _] = rails;
    let out = b_i_circuit(state, rails)?;
    let tables = click_tables();
    Ok(out
        .resolve_modes(&[h2, v1])?
        .into_iter()
        .map(|(occ, state)| {
            let outcome = match (occ[0], occ[1]) {
                (1, 0) => tables.b_i_outcome(Pol::H),
                (0, 1) => tables.b_i_outcome(Pol::V),
                _ => BIOutcome::Failure,
            };
            FineEvent { outcome, occupation: occ, state }
        })
        .collect())
}

pub fn b_i<R: Rng + ?Sized>(
    state: &TruncatedFockState,
    rails: PhotonRails,
    rng: &mut R,
) -> Result<(BIOutcome, TruncatedFockState)> {
    Ok(sample_event(&b_i_events(state, rails)?, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::b_alpha_functional;
    use crate::fock::min_cutoff;
    use crate::qubit::{carrier, logical_basis_state, photon_polarization, HybridQubit};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_photons(amps: [f64; 4]) -> TruncatedFockState {
        // amplitudes over |HH>, |HV>, |VH>, |VV>; layout [H1, V1, H2, V2]
        let h = photon_polarization(c(1.0), c(0.0), 1);
        let v = photon_polarization(c(0.0), c(1.0), 1);
        let mut out: Option<TruncatedFockState> = None;
        for (k, (a, b)) in [(&h, &h), (&h, &v), (&v, &h), (&v, &v)].into_iter().enumerate() {
            if amps[k] == 0.0 {
                continue;
            }
            let mut t = a.tensor(b);
            t.scale(c(amps[k]));
            match out.as_mut() {
                None => out = Some(t),
                Some(o) => o.add_scaled(c(1.0), &t).unwrap(),
            }
        }
        out.unwrap()
    }

    #[test]
    fn b_alpha_fock_matches_functional_per_fine_event() {
        for alpha in [0.6, 1.0] {
            let cut = min_cutoff(2f64.sqrt() * alpha);
            for x in 0..2 {
                for y in 0..2 {
                    let sx = if x == 0 { 1.0 } else { -1.0 };
                    let sy = if y == 0 { 1.0 } else { -1.0 };
                    let s = carrier(c(sx * alpha), cut).tensor(&carrier(c(sy * alpha), cut));
                    let events = b_alpha_events(&s, 0, 1).unwrap();
                    for o in BAlphaOutcome::ALL {
                        let p = outcome_probability(&events, o);
                        let f = b_alpha_functional(o, alpha)[x][y];
                        assert!((p - f * f).abs() < 1e-9, "alpha={alpha} x={x} y={y} {o}: {p} vs {}", f * f);
                    }
                }
            }
        }
    }

    #[test]
    fn b_alpha_failure_vacuum_and_large_alpha() {
        let s = carrier(c(0.0), 2).tensor(&carrier(c(0.0), 2));
        let events = b_alpha_events(&s, 0, 1).unwrap();
        assert!((outcome_probability(&events, BAlphaOutcome::Failure) - 1.0).abs() < 1e-12);
        let alpha = 1.4;
        let cut = min_cutoff(2f64.sqrt() * alpha);
        let q = HybridQubit::new(c(0.6), c(0.8), alpha).unwrap();
        let input = q.embed_fock_with(1, cut).unwrap();
        let other = logical_basis_state(false, alpha, 1, cut);
        let events = b_alpha_events(&input.tensor(&other), 2, 5).unwrap();
        let p = outcome_probability(&events, BAlphaOutcome::Failure);
        assert!((p - (-2.0 * alpha * alpha).exp()).abs() < 1e-9);
    }

    #[test]
    fn b_alpha_rejects_photon_modes() {
        let s = HybridQubit::zero(1.0).embed_fock().unwrap();
        let s = s.tensor(&HybridQubit::zero(1.0).embed_fock().unwrap());
        assert!(matches!(b_alpha_events(&s, 0, 5), Err(Error::ModeKindMismatch(_))));
    }

    #[test]
    fn b_ii_click_patterns_follow_table() {
        let s = FRAC_1_SQRT_2;
        let minus = b_ii_events(&two_photons([0.0, s, -s, 0.0]), [0, 1, 2, 3]).unwrap();
        assert!((outcome_probability(&minus, BIIOutcome::PsiMinus) - 1.0).abs() < 1e-12);
        let plus = b_ii_events(&two_photons([0.0, s, s, 0.0]), [0, 1, 2, 3]).unwrap();
        assert!((outcome_probability(&plus, BIIOutcome::PsiPlus) - 1.0).abs() < 1e-12);
        for amps in [[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]] {
            let ev = b_ii_events(&two_photons(amps), [0, 1, 2, 3]).unwrap();
            assert!((outcome_probability(&ev, BIIOutcome::Failure) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn b_ii_sampled_success_rate_is_half() {
        // |H>|+> : half psi components
        let s = FRAC_1_SQRT_2;
        let state = two_photons([s, s, 0.0, 0.0]);
        let events = b_ii_events(&state, [0, 1, 2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let n = 100_000;
        let ok = (0..n).filter(|_| sample_event(&events, &mut rng).0.is_success()).count();
        let sigma = (0.25 / n as f64).sqrt();
        assert!((ok as f64 / n as f64 - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn b_i_maps_match_fusion_operators() {
        // H click: (|+><HH| - |-><VV|)/sqrt2, V click: (|+><HH| + |-><VV|)/sqrt2
        let hh = b_i_events(&two_photons([1.0, 0.0, 0.0, 0.0]), [0, 1, 2, 3]).unwrap();
        let vv = b_i_events(&two_photons([0.0, 0.0, 0.0, 1.0]), [0, 1, 2, 3]).unwrap();
        for (events, is_vv) in [(&hh, false), (&vv, true)] {
            for e in events.iter().filter(|e| e.outcome.is_success()) {
                // the kept photon lives on rails (H1, V2)
                let h = e.state.amplitude(&[1, 0]).re;
                let v = e.state.amplitude(&[0, 1]).re;
                let want = if is_vv {
                    let sign = if e.outcome == BIOutcome::HClick { -1.0 } else { 1.0 };
                    (sign * 0.5, -sign * 0.5)
                } else {
                    (0.5, 0.5)
                };
                assert!((h - want.0).abs() < 1e-12 && (v - want.1).abs() < 1e-12, "{:?} {h} {v}", e.outcome);
            }
            assert!(outcome_probability(events, BIOutcome::Failure).abs() < 1e-12);
        }
        for amps in [[0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]] {
            let ev = b_i_events(&two_photons(amps), [0, 1, 2, 3]).unwrap();
            assert!((outcome_probability(&ev, BIOutcome::Failure) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn b_i_vacuum_fails() {
        let vac = TruncatedFockState::vacuum(
            &[ModeKind::PolarizationH, ModeKind::PolarizationV, ModeKind::PolarizationH, ModeKind::PolarizationV],
            &[1, 1, 1, 1],
        );
        let ev = b_i_events(&vac, [0, 1, 2, 3]).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].outcome, BIOutcome::Failure);
    }

    #[test]
    fn b_i_fuses_photon_pairs_into_ghz() {
        let s = FRAC_1_SQRT_2;
        let pair = two_photons([s, 0.0, 0.0, s]);
        let state = pair.tensor(&pair);
        // fuse photon 2 of the first pair (rails 2,3) with photon 1 of the second (rails 4,5)
        let events = b_i_events(&state, [2, 3, 4, 5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let n = 100_000;
        let ok = (0..n).filter(|_| sample_event(&events, &mut rng).0.is_success()).count();
        assert!((ok as f64 / n as f64 - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt());
        for e in events.iter().filter(|e| e.outcome.is_success()) {
            // remaining rails: H1 V1 | kept H V | H4 V4; expect |H+H> -/+ |V-V>
            let st = e.state.clone().normalized();
            let sign = if e.outcome == BIOutcome::HClick { -1.0 } else { 1.0 };
            let want = [
                ([1, 0, 1, 0, 1, 0], 0.5),
                ([1, 0, 0, 1, 1, 0], 0.5),
                ([0, 1, 1, 0, 0, 1], 0.5 * sign),
                ([0, 1, 0, 1, 0, 1], -0.5 * sign),
            ];
            for (occ, w) in want {
                assert!((st.amplitude(&occ).re - w).abs() < 1e-12, "{occ:?}");
            }
            assert!(st.amplitude(&[1, 0, 1, 0, 1, 0]).im.abs() < 1e-12);
        }
    }
}
