//! The [[7,1,3]] Steane code in the Pauli-frame picture.
//!
//! Seven-qubit error vectors are packed into the low bits of a `u8`, qubit
//! `i` at bit `i`. X and Z stabilizers share the Hamming check matrix in
//! `data/steane_checks.tsv`, so one decoder serves both error types.

use std::sync::OnceLock;

use crate::error::{Error, Result};

const FILE: &str = "steane_checks.tsv";
const SOURCE: &str = include_str!("../data/steane_checks.tsv");

pub const N: usize = 7;
pub const BLOCK: u8 = 0x7f;

/// Three check rows as qubit masks.
pub fn parse_checks(src: &str) -> Result<[u8; 3]> {
    let mut rows = Vec::new();
    for (n, line) in src.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != N + 1 {
            return Err(Error::DataFile { file: FILE, reason: format!("line {n}: expected {} columns", N + 1) });
        }
        let mut mask = 0u8;
        for (q, c) in cols[1..].iter().enumerate() {
            match *c {
                "0" => {}
                "1" => mask |= 1 << q,
                _ => return Err(Error::DataFile { file: FILE, reason: format!("line {n}: entry {c:?}") }),
            }
        }
        rows.push(mask);
    }
    rows.try_into().map_err(|r: Vec<u8>| Error::DataFile { file: FILE, reason: format!("{} check rows, want 3", r.len()) })
}

pub fn checks() -> &'static [u8; 3] {
    static CHECKS: OnceLock<[u8; 3]> = OnceLock::new();
    CHECKS.get_or_init(|| parse_checks(SOURCE).expect("bundled check matrix"))
}

/// Three-bit syndrome of an error vector.
pub fn syndrome(errors: u8) -> u8 {
    checks().iter().enumerate().fold(0, |s, (r, m)| s | ((((errors & m).count_ones() & 1) as u8) << r))
}

/// A syndrome-free error vector acts as a logical operator exactly when it
/// has odd weight: the even-weight codewords are the stabilizers.
pub fn is_logical(residual: u8) -> bool {
    debug_assert_eq!(syndrome(residual), 0);
    residual.count_ones() & 1 == 1
}

/// Pauli errors on one code block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PauliFrame7 {
    pub x: u8,
    pub z: u8,
}

impl PauliFrame7 {
    /// `(x_syndrome, z_syndrome)`: X errors are seen by the Z checks and
    /// vice versa.
    pub fn syndromes(&self) -> (u8, u8) {
        (syndrome(self.x), syndrome(self.z))
    }

    /// Logical `(X, Z)` error left after ideal decoding.
    pub fn logical_after_decoding(&self) -> (bool, bool) {
        (decode(self.x, 0).flip, decode(self.z, 0).flip)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoded {
    pub correction: u8,
    /// The corrected vector is a logical operator.
    pub flip: bool,
    /// Equally likely corrections disagree on the logical class.
    pub ambiguous: bool,
}

/// Lookup decoder over (syndrome, erasure mask). The correction minimizes
/// the weight outside the erasures, then the weight inside; the entry is
/// ambiguous when minimizers of the first criterion differ by a logical.
fn table() -> &'static Vec<(u8, bool)> {
    static TABLE: OnceLock<Vec<(u8, bool)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![(0u8, false); 8 * 128];
        for s in 0..8u8 {
            for erased in 0..128u8 {
                let mut best: Option<(u32, u32, u8)> = None;
                let mut classes = [false; 2];
                let mut best_outside = u32::MAX;
                for c in 0..128u8 {
                    if syndrome(c) != s {
                        continue;
                    }
                    let outside = (c & !erased).count_ones();
                    let inside = (c & erased).count_ones();
                    if outside < best_outside {
                        best_outside = outside;
                        classes = [false; 2];
                    }
                    if outside == best_outside {
                        classes[(c.count_ones() & 1) as usize] = true;
                    }
                    if best.is_none_or(|(o, i, _)| (outside, inside) < (o, i)) {
                        best = Some((outside, inside, c));
                    }
                }
                let (_, _, c) = best.expect("every syndrome is reachable");
                t[(s as usize) << 7 | erased as usize] = (c, classes[0] && classes[1]);
            }
        }
        t
    })
}

/// Decode one error type given the erased positions.
pub fn decode(errors: u8, erased: u8) -> Decoded {
    let (correction, ambiguous) = table()[(syndrome(errors) as usize) << 7 | (erased & BLOCK) as usize];
    let residual = errors ^ correction;
    Decoded { correction, flip: is_logical(residual), ambiguous }
}
