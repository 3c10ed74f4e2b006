//! Compact register for hybrid-qubit circuits.
//!
//! Every site is binary: a polarization photon (`0 = H`, `1 = V`) or a
//! coherent carrier whose label `x` stands for `|(-1)^x alpha>`. Carrier labels
//! are not orthogonal, so norms and overlaps go through the Gram matrix
//! `<x alpha|y alpha> = e^{-2 alpha^2}` for `x != y`. All measurement maps
//! used by the protocols (parity detection of merged carriers, fusion on
//! photons) are exact linear maps on this label space.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qubit::HybridQubit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Site {
    Photon,
    Carrier(f64),
}

/// Unnormalized state over binary sites; site 0 is the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRegister {
    sites: Vec<Site>,
    amps: Vec<C64>,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl Default for LabelRegister {
    fn default() -> Self {
        Self::new()
    }
}

impl LabelRegister {
    pub fn new() -> Self {
        Self { sites: Vec::new(), amps: vec![real(1.0)] }
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    fn bit(&self, index: usize, site: usize) -> usize {
        (index >> (self.sites.len() - 1 - site)) & 1
    }

    /// Tensor on a block of new sites at the end.
    pub fn push(&mut self, sites: &[Site], amps: &[C64]) {
        assert_eq!(amps.len(), 1 << sites.len());
        let mut out = Vec::with_capacity(self.amps.len() * amps.len());
        for &a in &self.amps {
            for &b in amps {
                out.push(a * b);
            }
        }
        self.sites.extend_from_slice(sites);
        self.amps = out;
    }

    /// `a|+>|alpha> + b|->|-alpha>` as (photon, carrier).
    pub fn push_hybrid_qubit(&mut self, q: &HybridQubit) {
        let s = FRAC_1_SQRT_2;
        self.push(
            &[Site::Photon, Site::Carrier(q.alpha)],
            &[q.a * s, q.b * s, q.a * s, -q.b * s],
        );
    }

    /// `(|H>|alpha> + |V>|-alpha>)/sqrt2`.
    pub fn push_hybrid_pair(&mut self, alpha: f64) {
        let s = real(FRAC_1_SQRT_2);
        self.push(&[Site::Photon, Site::Carrier(alpha)], &[s, zero(), zero(), s]);
    }

    /// `(|H>|H> + |V>|V>)/sqrt2`.
    pub fn push_photon_pair(&mut self) {
        let s = real(FRAC_1_SQRT_2);
        self.push(&[Site::Photon, Site::Photon], &[s, zero(), zero(), s]);
    }

    /// `sum_bits amps[bits] |L(bits)>` over hybrid qubits laid out as
    /// `(photon, carrier)` pairs, qubit 0 most significant.
    pub fn from_logical(amps: &[C64], alphas: &[f64]) -> Self {
        let n = alphas.len();
        assert_eq!(amps.len(), 1 << n);
        let sites: Vec<Site> = alphas.iter().flat_map(|&a| [Site::Photon, Site::Carrier(a)]).collect();
        let mut out = vec![zero(); 1 << (2 * n)];
        let s = FRAC_1_SQRT_2.powi(n as i32);
        for (bits, &amp) in amps.iter().enumerate() {
            for photons in 0..(1usize << n) {
                let mut idx = 0;
                let mut sign = 1.0;
                for q in 0..n {
                    let x = (bits >> (n - 1 - q)) & 1;
                    let p = (photons >> (n - 1 - q)) & 1;
                    if x == 1 && p == 1 {
                        sign = -sign;
                    }
                    idx = (idx << 2) | (p << 1) | x;
                }
                out[idx] += amp * (s * sign);
            }
        }
        Self { sites, amps: out }
    }

    /// Single-site unitary on a photon, `new[out] = sum_in u[out][in] old[in]`.
    pub fn apply_photon(&mut self, site: usize, u: [[C64; 2]; 2]) -> Result<()> {
        if self.sites.get(site) != Some(&Site::Photon) {
            return Err(Error::ModeKindMismatch(format!("site {site} is not a photon")));
        }
        let shift = self.sites.len() - 1 - site;
        let mut out = vec![zero(); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            if a == zero() {
                continue;
            }
            let b = (i >> shift) & 1;
            let base = i & !(1 << shift);
            out[base] += u[0][b] * a;
            out[base | (1 << shift)] += u[1][b] * a;
        }
        self.amps = out;
        Ok(())
    }

    /// `|+> -> |H>`, `|-> -> |V>` style plate; self-inverse.
    pub fn diagonal_plate(&mut self, site: usize) -> Result<()> {
        let s = real(FRAC_1_SQRT_2);
        self.apply_photon(site, [[s, s], [s, -s]])
    }

    /// pi phase shift on a carrier: `|alpha> <-> |-alpha>`.
    pub fn flip_carrier(&mut self, site: usize) -> Result<()> {
        self.carrier_alpha(site)?;
        let shift = self.sites.len() - 1 - site;
        let mut out = vec![zero(); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            out[i ^ (1 << shift)] = a;
        }
        self.amps = out;
        Ok(())
    }

    /// Logical X on the hybrid qubit `(photon, carrier)`.
    pub fn logical_x(&mut self, photon: usize, carrier: usize) -> Result<()> {
        self.apply_photon(photon, [[real(1.0), zero()], [zero(), real(-1.0)]])?;
        self.flip_carrier(carrier)
    }

    /// Logical Z on the hybrid qubit whose photon is `photon`.
    pub fn logical_z(&mut self, photon: usize) -> Result<()> {
        self.apply_photon(photon, [[zero(), real(1.0)], [real(1.0), zero()]])
    }

    fn carrier_alpha(&self, site: usize) -> Result<f64> {
        match self.sites.get(site) {
            Some(Site::Carrier(a)) => Ok(*a),
            _ => Err(Error::ModeKindMismatch(format!("site {site} is not a carrier"))),
        }
    }

    /// 50:50 split of a carrier `|±sqrt2 alpha>` into two carriers
    /// `|±alpha>|±alpha>`; the new carrier is inserted right after `site`.
    pub fn split_carrier(&mut self, site: usize) -> Result<()> {
        self.split_carrier_with(site, FRAC_1_SQRT_2)
    }

    /// Beam splitter of amplitude transmissivity `t` on a carrier and vacuum:
    /// `|±beta> -> |±t beta>|±sqrt(1-t^2) beta>`, second part after `site`.
    pub fn split_carrier_with(&mut self, site: usize, t: f64) -> Result<()> {
        let big = self.carrier_alpha(site)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("transmissivity {t} outside [0, 1]")));
        }
        let n = self.sites.len();
        let mut sites = self.sites.clone();
        sites[site] = Site::Carrier(big * t);
        sites.insert(site + 1, Site::Carrier(big * (1.0 - t * t).sqrt()));
        let mut out = vec![zero(); self.amps.len() * 2];
        for (i, &a) in self.amps.iter().enumerate() {
            let high = i >> (n - site);
            let b = (i >> (n - 1 - site)) & 1;
            let low = i & ((1 << (n - 1 - site)) - 1);
            let j = (((high << 1 | b) << 1 | b) << (n - 1 - site)) | low;
            out[j] = a;
        }
        self.sites = sites;
        self.amps = out;
        Ok(())
    }

    /// General measurement/contraction map. The sites `inputs` are removed,
    /// `outputs` are inserted at position `min(inputs)`, and
    /// `kernel(input bits)` gives the amplitudes over the output bits.
    pub fn contract<F>(&self, inputs: &[usize], outputs: &[Site], kernel: F) -> Self
    where
        F: Fn(&[usize]) -> Vec<C64>,
    {
        let n = self.sites.len();
        let insert_at = *inputs.iter().min().expect("at least one input site");
        let kept: Vec<usize> = (0..n).filter(|s| !inputs.contains(s)).collect();
        let mut sites: Vec<Site> = kept.iter().map(|&s| self.sites[s]).collect();
        for (k, s) in outputs.iter().enumerate() {
            sites.insert(insert_at + k, *s);
        }
        let m = sites.len();
        let n_out = outputs.len();
        let mut amps = vec![zero(); 1 << m];
        let mut in_bits = vec![0; inputs.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            if a == zero() {
                continue;
            }
            for (slot, &s) in in_bits.iter_mut().zip(inputs) {
                *slot = self.bit(i, s);
            }
            let k = kernel(&in_bits);
            debug_assert_eq!(k.len(), 1 << n_out);
            // kept bits in order, with the output block spliced in
            let mut before = 0usize;
            let mut after = 0usize;
            let mut after_len = 0usize;
            for &s in &kept {
                let b = self.bit(i, s);
                if s < insert_at {
                    before = before << 1 | b;
                } else {
                    after = after << 1 | b;
                    after_len += 1;
                }
            }
            for (o, &ko) in k.iter().enumerate() {
                if ko == zero() {
                    continue;
                }
                let j = ((before << n_out | o) << after_len) | after;
                amps[j] += ko * a;
            }
        }
        Self { sites, amps }
    }

    /// Squared norm of the physical state, including carrier overlaps.
    pub fn physical_norm_sqr(&self) -> f64 {
        let n = self.sites.len();
        let carriers: Vec<(usize, f64)> = self
            .sites
            .iter()
            .enumerate()
            .filter_map(|(s, site)| match site {
                Site::Carrier(a) => Some((1usize << (n - 1 - s), (-2.0 * a * a).exp())),
                Site::Photon => None,
            })
            .collect();
        let mut total = zero();
        for (i, &vi) in self.amps.iter().enumerate() {
            if vi == zero() {
                continue;
            }
            for mask in 0..(1usize << carriers.len()) {
                let mut flip = 0;
                let mut w = 1.0;
                for (c, &(bit, overlap)) in carriers.iter().enumerate() {
                    if mask >> c & 1 == 1 {
                        flip |= bit;
                        w *= overlap;
                    }
                }
                total += vi.conj() * self.amps[i ^ flip] * w;
            }
        }
        total.re
    }

    pub fn scale(&mut self, c: f64) {
        self.amps.iter_mut().for_each(|a| *a *= c);
    }

    /// Overlaps `<L(bits)|state>` with the logical basis of the hybrid qubits
    /// `(photon, carrier)` listed in `qubits` (qubit 0 most significant).
    /// Every site must belong to one of the qubits. Also returns the squared
    /// norm outside the logical subspace.
    pub fn logical_amplitudes(&self, qubits: &[(usize, usize)]) -> Result<(Vec<C64>, f64)> {
        let n = self.sites.len();
        if qubits.len() * 2 != n {
            return Err(Error::LayoutMismatch);
        }
        let mut alphas = Vec::with_capacity(qubits.len());
        for &(p, c) in qubits {
            if self.sites.get(p) != Some(&Site::Photon) {
                return Err(Error::ModeKindMismatch(format!("site {p} is not a photon")));
            }
            alphas.push(self.carrier_alpha(c)?);
        }
        let s = FRAC_1_SQRT_2;
        let mut out = vec![zero(); 1 << qubits.len()];
        for (bits, slot) in out.iter_mut().enumerate() {
            let mut acc = zero();
            for (i, &v) in self.amps.iter().enumerate() {
                if v == zero() {
                    continue;
                }
                let mut w = 1.0;
                for (q, &(p, c)) in qubits.iter().enumerate() {
                    let x = (bits >> (qubits.len() - 1 - q)) & 1;
                    let pb = self.bit(i, p);
                    let cb = self.bit(i, c);
                    // <+|H> = <+|V> = <-|H> = s, <-|V> = -s
                    w *= if x == 1 && pb == 1 { -s } else { s };
                    if cb != x {
                        w *= (-2.0 * alphas[q] * alphas[q]).exp();
                    }
                }
                acc += v * w;
            }
            *slot = acc;
        }
        let captured: f64 = out.iter().map(|a| a.norm_sqr()).sum();
        Ok((out, (self.physical_norm_sqr() - captured).max(0.0)))
    }

    /// Reorder sites: new site `k` is old site `order[k]`.
    pub fn permute(&self, order: &[usize]) -> Result<Self> {
        let n = self.sites.len();
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&o| o >= n || std::mem::replace(&mut seen[o], true)) {
            return Err(Error::InvalidPermutation);
        }
        let sites = order.iter().map(|&o| self.sites[o]).collect();
        let mut amps = vec![zero(); self.amps.len()];
        for (i, &a) in self.amps.iter().enumerate() {
            let mut j = 0;
            for &o in order {
                j = j << 1 | self.bit(i, o);
            }
            amps[j] = a;
        }
        Ok(Self { sites, amps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hybrid_qubit_has_unit_physical_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for alpha in [0.3, 1.0] {
            let q = HybridQubit::random(alpha, &mut rng);
            let mut r = LabelRegister::new();
            r.push_hybrid_qubit(&q);
            assert!((r.physical_norm_sqr() - 1.0).abs() < 1e-12);
            let (amps, res) = r.logical_amplitudes(&[(0, 1)]).unwrap();
            assert!(res < 1e-12);
            assert!((amps[0] - q.a).norm() < 1e-12 && (amps[1] - q.b).norm() < 1e-12);
        }
    }

    #[test]
    fn from_logical_round_trips() {
        let s = FRAC_1_SQRT_2;
        let amps = [real(0.5), real(0.5), real(0.5), real(-0.5)];
        let r = LabelRegister::from_logical(&amps, &[0.8, 0.8]);
        assert!((r.physical_norm_sqr() - 1.0).abs() < 1e-12);
        let (back, res) = r.logical_amplitudes(&[(0, 1), (2, 3)]).unwrap();
        assert!(res < 1e-12);
        for (a, b) in amps.iter().zip(&back) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut q = LabelRegister::new();
        q.push_hybrid_qubit(&HybridQubit::new(real(s), real(-s), 0.8).unwrap());
        let direct = LabelRegister::from_logical(&[real(s), real(-s)], &[0.8]);
        assert_eq!(q, direct);
    }

    #[test]
    fn bare_carrier_superposition_norm_uses_overlap() {
        let mut r = LabelRegister::new();
        let s = real(FRAC_1_SQRT_2);
        r.push(&[Site::Carrier(1.0)], &[s, s]);
        assert!((r.physical_norm_sqr() - (1.0 + (-2.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn logical_ops_match_analytic() {
        let q = HybridQubit::new(real(0.6), C64::new(0.0, 0.8), 1.2).unwrap();
        let mut r = LabelRegister::new();
        r.push_hybrid_qubit(&q);
        r.logical_x(0, 1).unwrap();
        let (amps, _) = r.logical_amplitudes(&[(0, 1)]).unwrap();
        assert!((amps[0] - q.b).norm() < 1e-12 && (amps[1] - q.a).norm() < 1e-12);
        r.logical_z(0).unwrap();
        let (amps, _) = r.logical_amplitudes(&[(0, 1)]).unwrap();
        assert!((amps[0] - q.b).norm() < 1e-12 && (amps[1] + q.a).norm() < 1e-12);
    }

    #[test]
    fn split_then_permute() {
        let mut r = LabelRegister::new();
        r.push_hybrid_pair(2f64.sqrt());
        r.split_carrier(1).unwrap();
        for s in &r.sites()[1..] {
            assert!(matches!(s, Site::Carrier(a) if (a - 1.0).abs() < 1e-12));
        }
        assert!((r.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((r.amplitudes()[7].re - FRAC_1_SQRT_2).abs() < 1e-15);
        let p = r.permute(&[1, 0, 2]).unwrap();
        assert_eq!(p.sites()[1], Site::Photon);
        assert!(r.permute(&[0, 0, 1]).is_err());
    }

    #[test]
    fn contract_inserts_outputs_in_place() {
        // photon pair on sites (0,1), third photon |H> on site 2; replace the
        // pair by one photon carrying their parity.
        let mut r = LabelRegister::new();
        r.push_photon_pair();
        r.push(&[Site::Photon], &[real(1.0), zero()]);
        let out = r.contract(&[0, 1], &[Site::Photon], |b| {
            if b[0] == b[1] {
                vec![real(1.0), zero()]
            } else {
                vec![zero(), real(1.0)]
            }
        });
        assert_eq!(out.len(), 2);
        assert!((out.amplitudes()[0].re - 2f64.sqrt()).abs() < 1e-12);
    }
}
