//! The three Bell-type measurements: the coherent-state Bell measurement
//! `B_alpha`, type-I fusion `B_I` and the modified type-II fusion `B_II`.
//!
//! Each measurement exists twice: as an exact map on the label register
//! (fast path, see [`crate::register`]) and as a linear-optics circuit on
//! [`TruncatedFockState`](crate::fock::TruncatedFockState) (see [`optics`]).

pub mod multiphoton;
pub mod optics;
pub mod tables;

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::register::{LabelRegister, Site};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BAlphaOutcome {
    EvenZero,
    OddZero,
    ZeroEven,
    ZeroOdd,
    Failure,
}

impl BAlphaOutcome {
    pub const ALL: [BAlphaOutcome; 5] = [
        BAlphaOutcome::EvenZero,
        BAlphaOutcome::OddZero,
        BAlphaOutcome::ZeroEven,
        BAlphaOutcome::ZeroOdd,
        BAlphaOutcome::Failure,
    ];

    pub fn is_success(self) -> bool {
        self != BAlphaOutcome::Failure
    }

    pub fn name(self) -> &'static str {
        match self {
            BAlphaOutcome::EvenZero => "even_zero",
            BAlphaOutcome::OddZero => "odd_zero",
            BAlphaOutcome::ZeroEven => "zero_even",
            BAlphaOutcome::ZeroOdd => "zero_odd",
            BAlphaOutcome::Failure => "failure",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

impl fmt::Display for BAlphaOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BIIOutcome {
    /// `(|HV> - |VH>)/sqrt2`, clicks (H,H) or (V,V).
    PsiMinus,
    /// `(|HV> + |VH>)/sqrt2`, clicks (H,V) or (V,H).
    PsiPlus,
    Failure,
}

impl BIIOutcome {
    pub const ALL: [BIIOutcome; 3] = [BIIOutcome::PsiMinus, BIIOutcome::PsiPlus, BIIOutcome::Failure];

    pub fn is_success(self) -> bool {
        self != BIIOutcome::Failure
    }

    pub fn name(self) -> &'static str {
        match self {
            BIIOutcome::PsiMinus => "psi_minus",
            BIIOutcome::PsiPlus => "psi_plus",
            BIIOutcome::Failure => "failure",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

impl fmt::Display for BIIOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BIOutcome {
    HClick,
    VClick,
    Failure,
}

impl BIOutcome {
    pub const ALL: [BIOutcome; 3] = [BIOutcome::HClick, BIOutcome::VClick, BIOutcome::Failure];

    pub fn is_success(self) -> bool {
        self != BIOutcome::Failure
    }

    pub fn name(self) -> &'static str {
        match self {
            BIOutcome::HClick => "h_click",
            BIOutcome::VClick => "v_click",
            BIOutcome::Failure => "failure",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|o| o.name() == s)
    }
}

/// Outcome-keyed branches. Each outcome holds one or more mutually
/// orthogonal unnormalized sub-branches (distinct fine detector events whose
/// conditional states differ).
pub type Branches<O> = Vec<(O, Vec<LabelRegister>)>;

pub fn branch_probability(parts: &[LabelRegister]) -> f64 {
    parts.iter().map(|p| p.physical_norm_sqr()).sum()
}

/// Sample an outcome and one of its sub-branches; returns the outcome, the
/// normalized post-measurement register and the outcome probability.
pub fn sample_branches<O: Copy, R: Rng + ?Sized>(branches: &Branches<O>, rng: &mut R) -> (O, LabelRegister, f64) {
    let weights: Vec<Vec<f64>> = branches
        .iter()
        .map(|(_, parts)| parts.iter().map(|p| p.physical_norm_sqr()).collect())
        .collect();
    let total: f64 = weights.iter().flatten().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for ((outcome, parts), ws) in branches.iter().zip(&weights) {
        for (part, &w) in parts.iter().zip(ws) {
            if w <= 0.0 {
                continue;
            }
            last = Some((*outcome, part, ws.iter().sum::<f64>()));
            if u < w {
                let mut state = part.clone();
                state.scale(1.0 / w.sqrt());
                return (*outcome, state, ws.iter().sum::<f64>() / total);
            }
            u -= w;
        }
    }
    let (o, part, p) = last.expect("at least one branch with weight");
    let mut state = part.clone();
    state.scale(1.0 / part.physical_norm_sqr().sqrt());
    (o, state, p / total)
}

/// Coarse-grained `B_alpha` amplitude `c[x][y]` for carrier labels `x`
/// (first input) and `y` (second input). Within each outcome every fine
/// photon-number event is proportional to this functional, so it is an exact
/// Kraus map on the label space.
pub fn b_alpha_functional(outcome: BAlphaOutcome, alpha: f64) -> [[f64; 2]; 2] {
    let x = (-2.0 * alpha * alpha).exp();
    let even = (1.0 - x) * FRAC_1_SQRT_2;
    let odd = ((1.0 - x * x) / 2.0).sqrt();
    match outcome {
        BAlphaOutcome::EvenZero => [[even, 0.0], [0.0, even]],
        BAlphaOutcome::OddZero => [[odd, 0.0], [0.0, -odd]],
        BAlphaOutcome::ZeroEven => [[0.0, even], [even, 0.0]],
        BAlphaOutcome::ZeroOdd => [[0.0, odd], [-odd, 0.0]],
        BAlphaOutcome::Failure => {
            let f = (-alpha * alpha).exp();
            [[f, f], [f, f]]
        }
    }
}

/// Outcome probabilities of `B_alpha` between a logical qubit and one half of
/// a maximally entangled logical channel, in [`BAlphaOutcome::ALL`] order.
pub fn b_alpha_teleport_probabilities(alpha: f64) -> [f64; 5] {
    let x = (-2.0 * alpha * alpha).exp();
    let even = (1.0 - x) * (1.0 - x) / 4.0;
    let odd = (1.0 - x * x) / 4.0;
    [even, odd, even, odd, x]
}

/// `B_alpha` on the carrier sites `s1`, `s2` of a label register.
pub fn b_alpha_register(reg: &LabelRegister, s1: usize, s2: usize) -> Result<Branches<BAlphaOutcome>> {
    let (a1, a2) = match (reg.sites().get(s1), reg.sites().get(s2)) {
        (Some(Site::Carrier(a1)), Some(Site::Carrier(a2))) => (*a1, *a2),
        _ => return Err(Error::ModeKindMismatch(format!("B_alpha needs carriers at sites {s1}, {s2}"))),
    };
    if (a1 - a2).abs() > 1e-12 {
        return Err(Error::AlphaMismatch { input: a1, channel: a2 });
    }
    Ok(BAlphaOutcome::ALL
        .into_iter()
        .map(|o| {
            let c = b_alpha_functional(o, a1);
            let post = reg.contract(&[s1, s2], &[], |b| vec![C64::new(c[b[0]][b[1]], 0.0)]);
            (o, vec![post])
        })
        .collect())
}

fn photon_sites(reg: &LabelRegister, p1: usize, p2: usize, what: &str) -> Result<()> {
    match (reg.sites().get(p1), reg.sites().get(p2)) {
        (Some(Site::Photon), Some(Site::Photon)) if p1 != p2 => Ok(()),
        _ => Err(Error::ModeKindMismatch(format!("{what} needs two photons, got sites {p1}, {p2}"))),
    }
}

/// `B_II` on photon sites: projections onto `psi_-` and `psi_+`, failure as
/// the two orthogonal events `<HH|` and `<VV|`.
pub fn b_ii_register(reg: &LabelRegister, p1: usize, p2: usize) -> Result<Branches<BIIOutcome>> {
    photon_sites(reg, p1, p2, "B_II")?;
    let s = FRAC_1_SQRT_2;
    let bra = |hv: f64, vh: f64, hh: f64, vv: f64| {
        reg.contract(&[p1, p2], &[], move |b| {
            vec![C64::new(
                match (b[0], b[1]) {
                    (0, 0) => hh,
                    (0, 1) => hv,
                    (1, 0) => vh,
                    _ => vv,
                },
                0.0,
            )]
        })
    };
    Ok(vec![
        (BIIOutcome::PsiMinus, vec![bra(s, -s, 0.0, 0.0)]),
        (BIIOutcome::PsiPlus, vec![bra(s, s, 0.0, 0.0)]),
        (BIIOutcome::Failure, vec![bra(0.0, 0.0, 1.0, 0.0), bra(0.0, 0.0, 0.0, 1.0)]),
    ])
}

/// `B_I` on photon sites: on success one photon survives at the position of
/// the first, carrying `(|+><HH| -/+ |-><VV|)/sqrt2`. Failure events drop
/// both photons (the register cannot hold the two-photon remnant).
pub fn b_i_register(reg: &LabelRegister, p1: usize, p2: usize) -> Result<Branches<BIOutcome>> {
    photon_sites(reg, p1, p2, "B_I")?;
    let tables = tables::click_tables();
    let z = C64::new(0.0, 0.0);
    let half = C64::new(0.5, 0.0);
    let success = |outcome: BIOutcome| {
        let sign = if tables.b_i_minus(outcome) { -1.0 } else { 1.0 };
        // |+> = (|H> + |V>)/sqrt2, |-> = (|H> - |V>)/sqrt2, photon basis H/V
        reg.contract(&[p1, p2], &[Site::Photon], move |b| match (b[0], b[1]) {
            (0, 0) => vec![half, half],
            (1, 1) => vec![half * sign, -half * sign],
            _ => vec![z, z],
        })
    };
    let drop_ = |keep: (usize, usize)| {
        reg.contract(&[p1, p2], &[], move |b| {
            vec![if (b[0], b[1]) == keep { C64::new(1.0, 0.0) } else { z }]
        })
    };
    Ok(vec![
        (BIOutcome::HClick, vec![success(BIOutcome::HClick)]),
        (BIOutcome::VClick, vec![success(BIOutcome::VClick)]),
        (BIOutcome::Failure, vec![drop_((0, 1)), drop_((1, 0))]),
    ])
}
