//! Detector click-pattern tables loaded from `data/click_tables.tsv`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use super::{BAlphaOutcome, BIIOutcome, BIOutcome};
use crate::error::{Error, Result};
use crate::fock::ParityOutcome;

const FILE: &str = "click_tables.tsv";
const SOURCE: &str = include_str!("../../data/click_tables.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "H" => Some(Pol::H),
            "V" => Some(Pol::V),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClickTables {
    pub b_alpha: BTreeMap<(ParityOutcome, ParityOutcome), BAlphaOutcome>,
    pub b_ii: BTreeMap<(Pol, Pol), BIIOutcome>,
    /// `true` when the click leaves a minus sign on the `|-><VV|` term.
    pub b_i: BTreeMap<Pol, (BIOutcome, bool)>,
}

fn parity(s: &str) -> Option<ParityOutcome> {
    match s {
        "zero" => Some(ParityOutcome::Zero),
        "even" => Some(ParityOutcome::EvenNonzero),
        "odd" => Some(ParityOutcome::Odd),
        _ => None,
    }
}

fn bad(line: usize, reason: &str) -> Error {
    Error::DataFile { file: FILE, reason: format!("line {line}: {reason}") }
}

impl ClickTables {
    pub fn parse(src: &str) -> Result<Self> {
        let mut t = ClickTables { b_alpha: BTreeMap::new(), b_ii: BTreeMap::new(), b_i: BTreeMap::new() };
        for (n, line) in src.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(bad(n, "expected 4 tab-separated columns"));
            }
            let pattern: Vec<&str> = cols[1].split(',').collect();
            match cols[0] {
                "b_alpha" => {
                    let (Some(u), Some(l)) = (pattern.first().and_then(|s| parity(s)), pattern.get(1).and_then(|s| parity(s)))
                    else {
                        return Err(bad(n, "bad parity pattern"));
                    };
                    let o = BAlphaOutcome::from_name(cols[2]).ok_or_else(|| bad(n, "unknown B_alpha outcome"))?;
                    t.b_alpha.insert((u, l), o);
                }
                "b_ii" => {
                    let (Some(u), Some(l)) = (pattern.first().and_then(|s| Pol::parse(s)), pattern.get(1).and_then(|s| Pol::parse(s)))
                    else {
                        return Err(bad(n, "bad polarization pattern"));
                    };
                    let o = BIIOutcome::from_name(cols[2]).ok_or_else(|| bad(n, "unknown B_II outcome"))?;
                    t.b_ii.insert((u, l), o);
                }
                "b_i" => {
                    let p = Pol::parse(cols[1]).ok_or_else(|| bad(n, "bad polarization"))?;
                    let o = BIOutcome::from_name(cols[2]).ok_or_else(|| bad(n, "unknown B_I outcome"))?;
                    let minus = match cols[3] {
                        "minus" => true,
                        "plus" => false,
                        _ => return Err(bad(n, "B_I note must be plus or minus")),
                    };
                    t.b_i.insert(p, (o, minus));
                }
                other => return Err(bad(n, &format!("unknown measurement {other}"))),
            }
        }
        if t.b_alpha.len() != 5 || t.b_ii.len() != 4 || t.b_i.len() != 2 {
            return Err(Error::DataFile { file: FILE, reason: "incomplete tables".into() });
        }
        Ok(t)
    }

    /// Outcome of a parity pair; patterns with both detectors firing are
    /// outside the table.
    pub fn b_alpha_outcome(&self, upper: ParityOutcome, lower: ParityOutcome) -> Option<BAlphaOutcome> {
        self.b_alpha.get(&(upper, lower)).copied()
    }

    pub fn b_ii_outcome(&self, upper: Pol, lower: Pol) -> BIIOutcome {
        self.b_ii[&(upper, lower)]
    }

    pub fn b_i_outcome(&self, click: Pol) -> BIOutcome {
        self.b_i[&click].0
    }

    pub fn b_i_minus(&self, outcome: BIOutcome) -> bool {
        self.b_i.values().any(|&(o, minus)| o == outcome && minus)
    }
}

/// Parsed tables; the embedded file is validated by the unit tests.
pub fn click_tables() -> &'static ClickTables {
    static TABLES: OnceLock<ClickTables> = OnceLock::new();
    TABLES.get_or_init(|| ClickTables::parse(SOURCE).expect("embedded click table is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_tables_parse_and_match_documented_patterns() {
        let t = ClickTables::parse(SOURCE).unwrap();
        assert_eq!(t.b_alpha_outcome(ParityOutcome::Odd, ParityOutcome::Zero), Some(BAlphaOutcome::OddZero));
        assert_eq!(t.b_alpha_outcome(ParityOutcome::Zero, ParityOutcome::Zero), Some(BAlphaOutcome::Failure));
        assert_eq!(t.b_alpha_outcome(ParityOutcome::Odd, ParityOutcome::Odd), None);
        assert_eq!(t.b_ii_outcome(Pol::H, Pol::H), BIIOutcome::PsiMinus);
        assert_eq!(t.b_ii_outcome(Pol::V, Pol::V), BIIOutcome::PsiMinus);
        assert_eq!(t.b_ii_outcome(Pol::H, Pol::V), BIIOutcome::PsiPlus);
        assert_eq!(t.b_ii_outcome(Pol::V, Pol::H), BIIOutcome::PsiPlus);
        assert!(t.b_i_minus(BIOutcome::HClick));
        assert!(!t.b_i_minus(BIOutcome::VClick));
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(ClickTables::parse("b_alpha\teven,zero\n").is_err());
        assert!(ClickTables::parse("b_x\tH\th_click\tplus\n").is_err());
        assert!(ClickTables::parse("b_i\tH\th_click\tplus\n").is_err());
    }
}
