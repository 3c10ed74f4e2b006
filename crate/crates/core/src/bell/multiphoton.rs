//! Bookkeeping for multiphoton contamination of the fusion gates.
//!
//! A contaminated input replaces the first photon `|X>` by `|2X>`. Every case
//! is pushed through the Fock circuit of the gate and the detector events are
//! enumerated exactly; results are first order in the contamination weight.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;

use super::optics::{b_i_events, b_ii_events, outcome_probability, FineEvent};
use super::{BIIOutcome, BIOutcome};
use crate::error::{Error, Result};
use crate::fock::{ModeKind, TruncatedFockState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

/// `|2 first>|second>` on the two gate inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiphotonCase {
    pub doubled: Polarization,
    pub partner: Polarization,
}

impl MultiphotonCase {
    pub const fn new(doubled: Polarization, partner: Polarization) -> Self {
        Self { doubled, partner }
    }

    /// The four cases that cover all contaminated inputs up to symmetry.
    pub const ALL: [MultiphotonCase; 4] = [
        MultiphotonCase::new(Polarization::H, Polarization::V),
        MultiphotonCase::new(Polarization::V, Polarization::V),
        MultiphotonCase::new(Polarization::H, Polarization::H),
        MultiphotonCase::new(Polarization::V, Polarization::H),
    ];
}

impl fmt::Display for MultiphotonCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|2{:?}>|{:?}>", self.doubled, self.partner)
    }
}

/// Contaminated input: equal-amplitude superposition of `terms`, entering
/// with weight `lambda` relative to the clean input.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiphotonInput {
    pub lambda: f64,
    pub terms: Vec<MultiphotonCase>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionGate {
    TypeI,
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchClass {
    /// Always a failure with the photon count of a clean failure.
    IndistinctFailure,
    /// Heralded as success while extra photons travel on.
    ContaminatingSuccess,
    /// Always a failure, and the detectors see more photons than any clean
    /// event produces.
    DetectedDiscard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub case: MultiphotonCase,
    pub class: BranchClass,
    /// Distribution of the total photon number reaching the detectors.
    pub detected_photons: BTreeMap<usize, f64>,
    pub success_probability: f64,
    /// Probability of a detector pattern no clean input can produce
    /// (`B_I`: both number-resolving detectors fire).
    pub anomalous_pattern_probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiphotonReport {
    pub gate: FusionGate,
    pub lambda: f64,
    pub cases: Vec<CaseReport>,
    /// `1 - P(success | contaminated) / P(success | clean)`.
    pub discarded_fraction: f64,
    /// Fraction of contaminated successes that are wrong: extra photons kept
    /// (`B_I`) or a Bell state misidentified, i.e. a silent Z (`B_II`).
    pub incorrect_success_fraction: f64,
}

impl MultiphotonReport {
    /// Weight of contaminated branches removed by the gate, to order lambda.
    pub fn discarded_weight(&self) -> f64 {
        self.lambda * self.discarded_fraction
    }
}

const CUTOFF: usize = 3;

fn rail_state(pol: Polarization, n: usize) -> TruncatedFockState {
    let (h, v) = match pol {
        Polarization::H => (n, 0),
        Polarization::V => (0, n),
    };
    TruncatedFockState::number_state(ModeKind::PolarizationH, h, CUTOFF)
        .tensor(&TruncatedFockState::number_state(ModeKind::PolarizationV, v, CUTOFF))
}

fn superposition(terms: &[(Polarization, usize, Polarization)]) -> Result<TruncatedFockState> {
    let mut out: Option<TruncatedFockState> = None;
    for &(p1, n1, p2) in terms {
        let t = rail_state(p1, n1).tensor(&rail_state(p2, 1));
        match out.as_mut() {
            None => out = Some(t),
            Some(o) => o.add_scaled(C64::new(1.0, 0.0), &t)?,
        }
    }
    Ok(out.ok_or(Error::InvalidParameter("empty multiphoton input".into()))?.normalized())
}

const RAILS: [usize; 4] = [0, 1, 2, 3];

fn success_probability<O: Copy + PartialEq>(events: &[FineEvent<O>], success: impl Fn(O) -> bool) -> f64 {
    events.iter().filter(|e| success(e.outcome)).map(|e| e.state.norm_sqr()).sum()
}

fn b_i_case(case: MultiphotonCase) -> Result<CaseReport> {
    let events = b_i_events(&superposition(&[(case.doubled, 2, case.partner)])?, RAILS)?;
    let mut detected = BTreeMap::new();
    let mut anomalous = 0.0;
    for e in &events {
        let w = e.state.norm_sqr();
        *detected.entry(e.occupation.iter().sum::<usize>()).or_insert(0.0) += w;
        if e.occupation.iter().all(|&n| n > 0) {
            anomalous += w;
        }
    }
    detected.retain(|_, w| *w > 1e-14);
    let success = success_probability(&events, BIOutcome::is_success);
    let class = if success > 1e-14 {
        BranchClass::ContaminatingSuccess
    } else if detected.keys().all(|&n| n == 0 || n == 2) {
        BranchClass::IndistinctFailure
    } else {
        BranchClass::DetectedDiscard
    };
    Ok(CaseReport { case, class, detected_photons: detected, success_probability: success, anomalous_pattern_probability: anomalous })
}

fn b_ii_case(case: MultiphotonCase) -> Result<CaseReport> {
    let events = b_ii_events(&superposition(&[(case.doubled, 2, case.partner)])?, RAILS)?;
    let mut detected = BTreeMap::new();
    for e in &events {
        *detected.entry(e.occupation.iter().sum::<usize>()).or_insert(0.0) += e.state.norm_sqr();
    }
    detected.retain(|_, w| *w > 1e-14);
    let success = success_probability(&events, BIIOutcome::is_success);
    let class = if success > 1e-14 { BranchClass::ContaminatingSuccess } else { BranchClass::IndistinctFailure };
    Ok(CaseReport { case, class, detected_photons: detected, success_probability: success, anomalous_pattern_probability: 0.0 })
}

/// Enumerate the detector events of `gate` on a contaminated input.
pub fn multiphoton_branch_analysis(input: &MultiphotonInput, gate: FusionGate) -> Result<MultiphotonReport> {
    if input.terms.is_empty() {
        return Err(Error::InvalidParameter("no contaminated terms".into()));
    }
    let clean_terms: Vec<_> = input.terms.iter().map(|c| (c.doubled, 1, c.partner)).collect();
    let dirty_terms: Vec<_> = input.terms.iter().map(|c| (c.doubled, 2, c.partner)).collect();
    match gate {
        FusionGate::TypeI => {
            // the cases enter as an incoherent mixture (distinct photon numbers)
            let cases = input.terms.iter().map(|&c| b_i_case(c)).collect::<Result<Vec<_>>>()?;
            let dirty: f64 = cases.iter().map(|c| c.success_probability).sum::<f64>() / cases.len() as f64;
            let mut clean = 0.0;
            let mut kept_extra = 0.0;
            for &term in &clean_terms {
                let ev = b_i_events(&superposition(&[term])?, RAILS)?;
                clean += success_probability(&ev, BIOutcome::is_success);
            }
            for &term in &dirty_terms {
                let ev = b_i_events(&superposition(&[term])?, RAILS)?;
                for e in ev.iter().filter(|e| e.outcome.is_success()) {
                    // photons left on the kept rails
                    let extra: f64 = (0..=CUTOFF)
                        .flat_map(|h| (0..=CUTOFF).map(move |v| (h, v)))
                        .filter(|&(h, v)| h + v > 1)
                        .map(|(h, v)| e.state.amplitude(&[h, v]).norm_sqr())
                        .sum();
                    kept_extra += extra;
                }
            }
            clean /= cases.len() as f64;
            let dirty_total = dirty * cases.len() as f64;
            Ok(MultiphotonReport {
                gate,
                lambda: input.lambda,
                cases,
                discarded_fraction: if clean > 0.0 { 1.0 - dirty / clean } else { 1.0 },
                incorrect_success_fraction: if dirty_total > 0.0 { kept_extra / dirty_total } else { 0.0 },
            })
        }
        FusionGate::TypeII => {
            let cases = input.terms.iter().map(|&c| b_ii_case(c)).collect::<Result<Vec<_>>>()?;
            let clean_events = b_ii_events(&superposition(&clean_terms)?, RAILS)?;
            let clean_success = success_probability(&clean_events, BIIOutcome::is_success);
            let expected = [BIIOutcome::PsiMinus, BIIOutcome::PsiPlus]
                .into_iter()
                .max_by(|a, b| {
                    outcome_probability(&clean_events, *a).total_cmp(&outcome_probability(&clean_events, *b))
                })
                .expect("two candidates");
            let dirty_events = b_ii_events(&superposition(&dirty_terms)?, RAILS)?;
            let dirty_success = success_probability(&dirty_events, BIIOutcome::is_success);
            let wrong = success_probability(&dirty_events, |o: BIIOutcome| o.is_success() && o != expected);
            Ok(MultiphotonReport {
                gate,
                lambda: input.lambda,
                cases,
                discarded_fraction: if clean_success > 0.0 { 1.0 - dirty_success / clean_success } else { 1.0 },
                incorrect_success_fraction: if dirty_success > 0.0 { wrong / dirty_success } else { 0.0 },
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Polarization::{H, V};

    fn report(gate: FusionGate, terms: Vec<MultiphotonCase>) -> MultiphotonReport {
        multiphoton_branch_analysis(&MultiphotonInput { lambda: 0.01, terms }, gate).unwrap()
    }

    #[test]
    fn type_i_case_classification() {
        let r = report(FusionGate::TypeI, MultiphotonCase::ALL.to_vec());
        let class = |d, p| r.cases.iter().find(|c| c.case == MultiphotonCase::new(d, p)).unwrap().class;
        assert_eq!(class(H, V), BranchClass::IndistinctFailure);
        assert_eq!(class(V, V), BranchClass::IndistinctFailure);
        assert_eq!(class(H, H), BranchClass::ContaminatingSuccess);
        assert_eq!(class(V, H), BranchClass::DetectedDiscard);
        assert!((r.discarded_fraction - 0.5).abs() < 1e-12);
        assert!((r.incorrect_success_fraction - 1.0).abs() < 1e-12);
        assert!((r.discarded_weight() - 0.005).abs() < 1e-12);
    }

    #[test]
    fn type_i_photon_routing() {
        let r = report(FusionGate::TypeI, MultiphotonCase::ALL.to_vec());
        let det = |d, p| r.cases.iter().find(|c| c.case == MultiphotonCase::new(d, p)).unwrap().detected_photons.clone();
        assert_eq!(det(H, V).keys().copied().collect::<Vec<_>>(), vec![0]);
        assert_eq!(det(V, V).keys().copied().collect::<Vec<_>>(), vec![2]);
        assert_eq!(det(H, H).keys().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(det(V, H).keys().copied().collect::<Vec<_>>(), vec![3]);
    }

    #[test]
    fn type_ii_contaminated_success_splits_evenly() {
        let r = report(FusionGate::TypeII, vec![MultiphotonCase::new(H, V), MultiphotonCase::new(V, H)]);
        assert!((r.incorrect_success_fraction - 0.5).abs() < 1e-12);
        assert!(r.discarded_fraction > 0.0 && r.discarded_fraction < 1.0);
    }

    #[test]
    fn empty_input_is_rejected() {
        let input = MultiphotonInput { lambda: 0.1, terms: vec![] };
        assert!(multiphoton_branch_analysis(&input, FusionGate::TypeI).is_err());
    }
}
