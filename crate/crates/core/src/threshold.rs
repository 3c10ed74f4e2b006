//! Loss thresholds from Pauli-frame Monte Carlo of a Steane telecorrection
//! round, iterated through concatenation levels.
//!
//! Level-1 locations carry the hybrid-qubit error model; every higher level
//! reuses the same circuit with the previous level's logical rates as its
//! physical rates. The circuit is read from `data/telecorrector.tsv`.
//!
//! The offline part (the encoded Bell pair) is postselected: a preparation
//! with a heralded error anywhere, or with any nonzero stabilizer syndrome on
//! its blocks, is discarded and rebuilt. Heralded errors in the online part
//! become erasures for the decoder.

use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{attempt_cost, ChannelKind, Strategy};
use crate::error::{Error, Result};
use crate::loss::memory_error_rate;
use crate::par::{derive_seed, Exec};
use crate::steane::{decode, syndrome, BLOCK};
use crate::teleport::lossy_failure_probability;

const FILE: &str = "telecorrector.tsv";
const SOURCE: &str = include_str!("../data/telecorrector.tsv");

/// Preparations abandoned after this many rejections count as a heralded
/// failure of the round.
const MAX_PREPARATIONS: u32 = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Prep,
    Hadamard,
    Cz,
    Memory,
    MeasureX,
}

/// Noise at one location. With probability `failure` the qubit is fully
/// depolarized, with probability `herald` it takes Z with probability 1/2;
/// both are flagged. Otherwise it takes X, Y or Z with the given
/// probabilities (conditional on no flag).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationNoise {
    pub failure: f64,
    pub herald: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl LocationNoise {
    pub fn locatable(&self) -> f64 {
        self.failure + self.herald
    }

    pub fn unlocatable(&self) -> f64 {
        (1.0 - self.locatable()) * (self.x + self.y + self.z)
    }

    fn valid(&self) -> bool {
        let p = [self.failure, self.herald, self.x, self.y, self.z];
        p.iter().all(|v| (0.0..=1.0).contains(v)) && self.locatable() <= 1.0 && self.x + self.y + self.z <= 1.0
    }

    /// Independent X and Z flips with the given marginals.
    fn independent(px: f64, pz: f64) -> Self {
        Self { x: px * (1.0 - pz), y: px * pz, z: pz * (1.0 - px), ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateErrorTable {
    pub prep: LocationNoise,
    pub hadamard: LocationNoise,
    pub cz: LocationNoise,
    pub memory: LocationNoise,
    pub measure_x: LocationNoise,
}

impl GateErrorTable {
    pub fn noiseless() -> Self {
        let z = LocationNoise::default();
        Self { prep: z, hadamard: z, cz: z, memory: z, measure_x: z }
    }

    pub fn get(&self, kind: GateKind) -> &LocationNoise {
        match kind {
            GateKind::Prep => &self.prep,
            GateKind::Hadamard => &self.hadamard,
            GateKind::Cz => &self.cz,
            GateKind::Memory => &self.memory,
            GateKind::MeasureX => &self.measure_x,
        }
    }

    pub fn get_mut(&mut self, kind: GateKind) -> &mut LocationNoise {
        match kind {
            GateKind::Prep => &mut self.prep,
            GateKind::Hadamard => &mut self.hadamard,
            GateKind::Cz => &mut self.cz,
            GateKind::Memory => &mut self.memory,
            GateKind::MeasureX => &mut self.measure_x,
        }
    }

    /// Lowest-level table for loss rate `eta` on qubits of amplitude `alpha`.
    ///
    /// Gate teleportation fails with the lossy failure probability; a lost
    /// input photon that B_alpha still compensates is heralded with a Z half
    /// the time. Channel qubits decay like memory at the largest amplitude
    /// used to build them, X-measurements are perfect.
    pub fn from_loss(eta: f64, alpha: f64, strategy: Strategy) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) || !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta={eta}, alpha={alpha}")));
        }
        let p = memory_error_rate(eta, alpha);
        let failure = lossy_failure_probability(alpha, eta);
        let damped = (1.0 - eta) * alpha * alpha;
        let herald = eta * (1.0 - 2.0 / (1.0 + (2.0 * damped).exp()));
        let channel = |kind| memory_error_rate(eta, effective_amplitude(strategy, kind, alpha));
        let pz = channel(ChannelKind::Z);
        let q = channel(ChannelKind::ZPrime);
        Ok(Self {
            prep: LocationNoise { z: p, ..LocationNoise::default() },
            hadamard: LocationNoise { failure, herald, ..LocationNoise::independent(pz, pz) },
            cz: LocationNoise { failure, herald, z: 2.0 * q * (1.0 - q), ..LocationNoise::default() },
            memory: LocationNoise { z: p, ..LocationNoise::default() },
            measure_x: LocationNoise::default(),
        })
    }

    /// Table for the next level: every location but the measurement is a
    /// level-k logical gate.
    pub fn from_level(rates: &LevelErrorRates) -> Self {
        let l = rates.locatable.min(1.0);
        let u = if l < 1.0 { (rates.unlocatable / (1.0 - l)).min(1.0) } else { 0.0 };
        let n = LocationNoise { failure: l, herald: 0.0, x: u / 3.0, y: u / 3.0, z: u / 3.0 };
        Self { prep: n, hadamard: n, cz: n, memory: n, measure_x: LocationNoise::default() }
    }

    pub fn validate(&self) -> Result<()> {
        for k in [GateKind::Prep, GateKind::Hadamard, GateKind::Cz, GateKind::Memory, GateKind::MeasureX] {
            if !self.get(k).valid() {
                return Err(Error::InvalidParameter(format!("{k:?} noise {:?}", self.get(k))));
            }
        }
        Ok(())
    }
}

/// `sqrt(k) alpha` for the largest hybrid pair class used by a channel.
pub fn effective_amplitude(strategy: Strategy, target: ChannelKind, alpha: f64) -> f64 {
    let k = attempt_cost(strategy, target).hybrid_pairs.keys().max().copied().unwrap_or(1);
    (k as f64).sqrt() * alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    Prep,
    Hadamard,
    Cz,
    MeasureX,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Blk {
    D = 0,
    A = 1,
    B = 2,
}

type Site = (Blk, u8);

#[derive(Debug, Clone)]
struct Step {
    offline: bool,
    ops: Vec<(Op, Site, Option<Site>)>,
    idle: Vec<Site>,
}

#[derive(Debug, Clone)]
pub struct Circuit {
    steps: Vec<Step>,
}

fn bad(line: usize, reason: &str) -> Error {
    Error::DataFile { file: FILE, reason: format!("line {line}: {reason}") }
}

fn parse_site(s: &str) -> Option<Site> {
    let (b, q) = s.split_at(1);
    let blk = match b {
        "D" => Blk::D,
        "A" => Blk::A,
        "B" => Blk::B,
        _ => return None,
    };
    let q: u8 = q.parse().ok()?;
    (q < 7).then_some((blk, q))
}

impl Circuit {
    pub fn parse(src: &str) -> Result<Self> {
        let mut raw: Vec<(usize, bool, Vec<(Op, Site, Option<Site>)>)> = Vec::new();
        for (n, line) in src.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(bad(n, "expected 4 tab-separated columns"));
            }
            let step: usize = cols[0].parse().map_err(|_| bad(n, "step"))?;
            let offline = match cols[1] {
                "offline" => true,
                "online" => false,
                _ => return Err(bad(n, "stage")),
            };
            let op = match cols[2] {
                "prep" => Op::Prep,
                "h" => Op::Hadamard,
                "cz" => Op::Cz,
                "measure" => Op::MeasureX,
                _ => return Err(bad(n, "op")),
            };
            let mut ops = Vec::new();
            for t in cols[3].split_whitespace() {
                if op == Op::Cz {
                    let (a, b) = t.split_once('-').ok_or_else(|| bad(n, "cz operand"))?;
                    let (a, b) = (parse_site(a).ok_or_else(|| bad(n, a))?, parse_site(b).ok_or_else(|| bad(n, b))?);
                    ops.push((op, a, Some(b)));
                } else {
                    ops.push((op, parse_site(t).ok_or_else(|| bad(n, t))?, None));
                }
            }
            match raw.last_mut() {
                Some(last) if last.0 == step => {
                    if last.1 != offline {
                        return Err(bad(n, "mixed stages in one step"));
                    }
                    last.2.extend(ops);
                }
                Some(last) if last.0 + 1 != step => return Err(bad(n, "steps must be consecutive")),
                _ => raw.push((step, offline, ops)),
            }
        }
        // liveness: from first use until measured; B stays live to the end
        let mut born = [[usize::MAX; 7]; 3];
        let mut dead = [[usize::MAX; 7]; 3];
        for (i, (_, _, ops)) in raw.iter().enumerate() {
            for &(op, a, b) in ops {
                for s in std::iter::once(a).chain(b) {
                    let (blk, q) = (s.0 as usize, s.1 as usize);
                    if born[blk][q] == usize::MAX {
                        born[blk][q] = i;
                    } else if dead[blk][q] != usize::MAX {
                        return Err(Error::DataFile { file: FILE, reason: format!("qubit {s:?} used after measurement") });
                    }
                    if op == Op::MeasureX {
                        dead[blk][q] = i;
                    }
                }
            }
        }
        let mut steps = Vec::new();
        for (i, (_, offline, ops)) in raw.into_iter().enumerate() {
            let mut idle = Vec::new();
            for blk in [Blk::D, Blk::A, Blk::B] {
                for q in 0..7u8 {
                    let (b0, d0) = (born[blk as usize][q as usize], dead[blk as usize][q as usize]);
                    let used = ops.iter().any(|&(_, a, b)| a == (blk, q) || b == Some((blk, q)));
                    if b0 < i && i <= d0 && !used && (d0 == usize::MAX || i < d0) {
                        idle.push((blk, q));
                    }
                }
            }
            steps.push(Step { offline, ops, idle });
        }
        Ok(Self { steps })
    }

    pub fn bundled() -> &'static Circuit {
        static C: OnceLock<Circuit> = OnceLock::new();
        C.get_or_init(|| Circuit::parse(SOURCE).expect("bundled telecorrector circuit"))
    }

    /// Number of noisy locations of each kind in one pass.
    pub fn location_counts(&self) -> [(GateKind, usize); 4] {
        let mut c = [0usize; 4];
        for s in &self.steps {
            for &(op, _, b) in &s.ops {
                match op {
                    Op::Prep => c[0] += 1,
                    Op::Hadamard => c[1] += 1,
                    Op::Cz => c[2] += 1 + usize::from(b.is_some()),
                    Op::MeasureX => {}
                }
            }
            c[3] += s.idle.len();
        }
        [(GateKind::Prep, c[0]), (GateKind::Hadamard, c[1]), (GateKind::Cz, c[2]), (GateKind::Memory, c[3])]
    }
}

fn swap_bit(a: &mut u8, b: &mut u8, m: u8) {
    let (x, z) = (*a & m, *b & m);
    *a = (*a & !m) | z;
    *b = (*b & !m) | x;
}

#[derive(Debug, Clone, Copy, Default)]
struct Frames {
    x: [u8; 3],
    z: [u8; 3],
    /// Positions whose X (resp. Z) component is unknown after a herald.
    flag_x: [u8; 3],
    flag_z: [u8; 3],
    measured: [u8; 3],
}

impl Frames {
    fn noise<R: Rng + ?Sized>(&mut self, (blk, q): Site, n: &LocationNoise, offline: bool, rng: &mut R) {
        let (b, m) = (blk as usize, 1u8 << q);
        let mut u: f64 = rng.random();
        if !offline {
            if u < n.failure {
                let r: u8 = rng.random();
                self.x[b] ^= if r & 1 == 1 { m } else { 0 };
                self.z[b] ^= if r & 2 == 2 { m } else { 0 };
                self.flag_x[b] |= m;
                self.flag_z[b] |= m;
                return;
            }
            if u < n.locatable() {
                if rng.random::<bool>() {
                    self.z[b] ^= m;
                }
                self.flag_z[b] |= m;
                return;
            }
            u = rng.random();
        }
        if u < n.x {
            self.x[b] ^= m;
        } else if u < n.x + n.y {
            self.x[b] ^= m;
            self.z[b] ^= m;
        } else if u < n.x + n.y + n.z {
            self.z[b] ^= m;
        }
    }

    fn run_step<R: Rng + ?Sized>(&mut self, step: &Step, table: &GateErrorTable, rng: &mut R) {
        let off = step.offline;
        for &(op, a, b) in &step.ops {
            let (ba, ma) = (a.0 as usize, 1u8 << a.1);
            match op {
                Op::Prep => {
                    self.x[ba] &= !ma;
                    self.z[ba] &= !ma;
                    self.noise(a, &table.prep, off, rng);
                }
                Op::Hadamard => {
                    swap_bit(&mut self.x[ba], &mut self.z[ba], ma);
                    swap_bit(&mut self.flag_x[ba], &mut self.flag_z[ba], ma);
                    self.noise(a, &table.hadamard, off, rng);
                }
                Op::Cz => {
                    let b = b.expect("cz has two operands");
                    let (bb, mb) = (b.0 as usize, 1u8 << b.1);
                    let xa = self.x[ba] & ma != 0;
                    let xb = self.x[bb] & mb != 0;
                    if xb {
                        self.z[ba] ^= ma;
                    }
                    if xa {
                        self.z[bb] ^= mb;
                    }
                    if self.flag_x[bb] & mb != 0 {
                        self.flag_z[ba] |= ma;
                    }
                    if self.flag_x[ba] & ma != 0 {
                        self.flag_z[bb] |= mb;
                    }
                    self.noise(a, &table.cz, off, rng);
                    self.noise(b, &table.cz, off, rng);
                }
                Op::MeasureX => {
                    self.noise(a, &table.measure_x, off, rng);
                    self.measured[ba] |= self.z[ba] & ma;
                }
            }
        }
        for &s in &step.idle {
            self.noise(s, &table.memory, off, rng);
        }
    }
}

/// What one round did to the logical qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundOutcome {
    Clean,
    /// Silent logical `(X, Z)` error on the output.
    Unlocatable { x: bool, z: bool },
    /// The measurement decoding could not fix the logical frame.
    Locatable,
}

/// One telecorrection round. Returns the outcome and how many offline
/// preparations were needed.
pub fn simulate_round<R: Rng + ?Sized>(circuit: &Circuit, table: &GateErrorTable, rng: &mut R) -> (RoundOutcome, u32) {
    let split = circuit.steps.iter().position(|s| !s.offline).unwrap_or(circuit.steps.len());
    let mut tries = 0;
    let mut f = loop {
        tries += 1;
        if tries > MAX_PREPARATIONS {
            return (RoundOutcome::Locatable, tries - 1);
        }
        let mut f = Frames::default();
        for s in &circuit.steps[..split] {
            f.run_step(s, table, rng);
        }
        let clean = [Blk::A, Blk::B].iter().all(|&b| syndrome(f.x[b as usize]) == 0 && syndrome(f.z[b as usize]) == 0);
        if clean {
            break f;
        }
    };
    for s in &circuit.steps[split..] {
        f.run_step(s, table, rng);
    }
    let d = decode(f.measured[Blk::D as usize], f.flag_z[Blk::D as usize]);
    let a = decode(f.measured[Blk::A as usize], f.flag_z[Blk::A as usize]);
    let b = Blk::B as usize;
    let bx = decode(f.x[b], f.flag_x[b] & BLOCK);
    let bz = decode(f.z[b], f.flag_z[b] & BLOCK);
    if d.ambiguous || a.ambiguous || bx.ambiguous || bz.ambiguous {
        return (RoundOutcome::Locatable, tries);
    }
    let x = bx.flip ^ a.flip;
    let z = bz.flip ^ d.flip;
    let out = if x || z { RoundOutcome::Unlocatable { x, z } } else { RoundOutcome::Clean };
    (out, tries)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    trials: u64,
    unlocatable: u64,
    locatable: u64,
    preparations: u64,
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            trials: self.trials + o.trials,
            unlocatable: self.unlocatable + o.unlocatable,
            locatable: self.locatable + o.locatable,
            preparations: self.preparations + o.preparations,
        }
    }
}

/// Logical error rates of one concatenation level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelErrorRates {
    pub level: u32,
    pub unlocatable: f64,
    pub locatable: f64,
    pub trials: u64,
    /// Mean offline preparations per accepted telecorrector.
    pub preparations: f64,
}

impl LevelErrorRates {
    pub fn total(&self) -> f64 {
        self.unlocatable + self.locatable
    }

    /// Binomial standard error of a rate.
    pub fn std_error(&self, rate: f64) -> f64 {
        (rate * (1.0 - rate) / self.trials as f64).sqrt()
    }
}

/// Monte Carlo over `trials` rounds with noise `table`.
pub fn run_telecorrection_round(table: &GateErrorTable, trials: u64, seed: u64, exec: Exec) -> Result<LevelErrorRates> {
    table.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let circuit = Circuit::bundled();
    let c = exec.sum_shots(trials, seed, |rng: &mut ChaCha8Rng| {
        let (out, tries) = simulate_round(circuit, table, rng);
        Counts {
            trials: 1,
            unlocatable: u64::from(matches!(out, RoundOutcome::Unlocatable { .. })),
            locatable: u64::from(out == RoundOutcome::Locatable),
            preparations: u64::from(tries),
        }
    });
    Ok(LevelErrorRates {
        level: 1,
        unlocatable: c.unlocatable as f64 / c.trials as f64,
        locatable: c.locatable as f64 / c.trials as f64,
        trials: c.trials,
        preparations: c.preparations as f64 / c.trials as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converges,
    Diverges,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Concatenation {
    pub levels: Vec<LevelErrorRates>,
    pub verdict: Verdict,
}

/// Iterates the level map from level-1 rates. Converges once a level sees no
/// errors or the total rate falls at every level; diverges when it grows
/// twice running or reaches 1/2; otherwise indeterminate.
pub fn concatenate(first: LevelErrorRates, levels: u32, trials: u64, seed: u64, exec: Exec) -> Result<Concatenation> {
    let mut out = vec![first];
    let mut growth = 0;
    let mut shrink = 0;
    let verdict = loop {
        let last = *out.last().expect("non-empty");
        if last.total() == 0.0 {
            break Verdict::Converges;
        }
        if last.total() >= 0.5 {
            break Verdict::Diverges;
        }
        if out.len() as u32 >= levels {
            break if growth == 0 && shrink > 0 { Verdict::Converges } else if growth > 0 && shrink == 0 { Verdict::Diverges } else { Verdict::Indeterminate };
        }
        let table = GateErrorTable::from_level(&last);
        let mut next = run_telecorrection_round(&table, trials, derive_seed(seed, &[u64::from(last.level)]), exec)?;
        next.level = last.level + 1;
        if next.total() > last.total() {
            growth += 1;
            if growth >= 2 {
                out.push(next);
                break Verdict::Diverges;
            }
        } else {
            shrink += 1;
        }
        out.push(next);
    };
    Ok(Concatenation { levels: out, verdict })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    pub trials: u64,
    pub levels: u32,
    /// Absolute bisection tolerance in `eta`.
    pub tolerance: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    pub seed: u64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self { trials: 100_000, levels: 4, tolerance: 1e-4, eta_min: 1e-5, eta_max: 0.05, seed: 0x5eed }
    }
}

/// Fate of `(eta, alpha)` under concatenation.
pub fn verdict_at(eta: f64, alpha: f64, strategy: Strategy, opts: &ThresholdOptions, exec: Exec) -> Result<Concatenation> {
    let table = GateErrorTable::from_loss(eta, alpha, strategy)?;
    let seed = derive_seed(opts.seed, &[alpha.to_bits(), strategy as u64]);
    let first = run_telecorrection_round(&table, opts.trials, seed, exec)?;
    concatenate(first, opts.levels, opts.trials, derive_seed(seed, &[u64::MAX]), exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub alpha: f64,
    pub strategy: Strategy,
    pub eta: f64,
    /// Final bisection bracket.
    pub lo: f64,
    pub hi: f64,
}

/// Bisection in `log(eta)` between a convergent and a divergent loss rate.
/// The random streams depend on `(seed, alpha, strategy)` only, so every
/// `eta` sees the same noise draws.
pub fn threshold_search(alpha: f64, strategy: Strategy, opts: &ThresholdOptions, exec: Exec) -> Result<ThresholdEstimate> {
    if !(opts.tolerance > 0.0) || !(0.0 < opts.eta_min && opts.eta_min < opts.eta_max) {
        return Err(Error::InvalidParameter(format!("bad search options {opts:?}")));
    }
    let ok = |eta: f64| -> Result<bool> { Ok(verdict_at(eta, alpha, strategy, opts, exec)?.verdict == Verdict::Converges) };
    let (mut lo, mut hi) = (opts.eta_min, opts.eta_max);
    if !ok(lo)? || ok(hi)? {
        return Err(Error::Bracket { lo, hi });
    }
    while hi - lo > opts.tolerance {
        let mid = (lo * hi).sqrt();
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdEstimate { alpha, strategy, eta: (lo * hi).sqrt(), lo, hi })
}

/// Threshold with a confidence interval from independent replicas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPoint {
    pub alpha: f64,
    pub strategy: Strategy,
    /// Mean over replicas; zero when no loss rate in range is correctable.
    pub eta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicas: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
}

/// `replicas` searches with derived seeds. The interval is the mean plus or
/// minus two standard errors, widened to cover the bisection brackets. A
/// replica whose lower bracket already diverges scores zero.
pub fn threshold_point(alpha: f64, strategy: Strategy, opts: &ThresholdOptions, replicas: u32, exec: Exec) -> Result<ThresholdPoint> {
    let mut etas = Vec::new();
    let mut lo_b = f64::INFINITY;
    let mut hi_b = 0.0f64;
    for r in 0..replicas.max(1) {
        let o = ThresholdOptions { seed: derive_seed(opts.seed, &[u64::from(r)]), ..*opts };
        match threshold_search(alpha, strategy, &o, exec) {
            Ok(t) => {
                etas.push(t.eta);
                lo_b = lo_b.min(t.lo);
                hi_b = hi_b.max(t.hi);
            }
            Err(Error::Bracket { lo, .. }) if !verdict_at(lo, alpha, strategy, &o, exec)?.verdict.eq(&Verdict::Converges) => {
                etas.push(0.0);
                lo_b = 0.0;
                hi_b = hi_b.max(lo);
            }
            Err(e) => return Err(e),
        }
    }
    let n = etas.len() as f64;
    let mean = etas.iter().sum::<f64>() / n;
    let var = if n > 1.0 { etas.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    let half = 2.0 * (var / n).sqrt();
    Ok(ThresholdPoint {
        alpha,
        strategy,
        eta: mean,
        ci_low: (mean - half).min(lo_b).max(0.0),
        ci_high: (mean + half).max(hi_b),
        replicas: etas,
        trials: opts.trials,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::stream_rng;

    #[test]
    fn circuit_parses() {
        let c = Circuit::bundled();
        assert_eq!(c.steps.len(), 9);
        let counts = c.location_counts();
        assert_eq!(counts[0], (GateKind::Prep, 14));
        assert_eq!(counts[1], (GateKind::Hadamard, 6 + 14));
        assert_eq!(counts[2], (GateKind::Cz, 36 + 14 + 14));
        // one idler per block in each encoder layer, 4 per block in the H
        // layer, then B through the two online steps
        assert_eq!(counts[3], (GateKind::Memory, 6 + 8 + 14));
    }

    #[test]
    fn bad_circuits_are_rejected() {
        assert!(Circuit::parse("0\toffline\tprep\tA9\n").is_err());
        assert!(Circuit::parse("0\toffline\tprep\tA0\n2\toffline\th\tA0\n").is_err());
        assert!(Circuit::parse("0\toffline\tmeasure\tA0\n1\toffline\th\tA0\n").is_err());
    }

    #[test]
    fn noiseless_round_is_clean() {
        let t = GateErrorTable::noiseless();
        let mut rng = stream_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(simulate_round(Circuit::bundled(), &t, &mut rng), (RoundOutcome::Clean, 1));
        }
        let zero_loss = GateErrorTable::from_loss(0.0, 3.0, Strategy::GI).unwrap();
        let r = run_telecorrection_round(&zero_loss, 20_000, 3, Exec::default()).unwrap();
        assert!(r.unlocatable == 0.0, "{r:?}");
    }

    #[test]
    fn level_one_table() {
        let t = GateErrorTable::from_loss(0.01, 1.0, Strategy::GAlpha).unwrap();
        assert_eq!(t.memory.z, memory_error_rate(0.01, 1.0));
        assert_eq!(t.hadamard.failure, lossy_failure_probability(1.0, 0.01));
        let q = memory_error_rate(0.01, 3f64.sqrt());
        assert!((t.cz.z - 2.0 * q * (1.0 - q)).abs() < 1e-15);
        assert!((effective_amplitude(Strategy::GI, ChannelKind::Z, 1.0) - 1.0).abs() < 1e-15);
        assert!((effective_amplitude(Strategy::GAlpha, ChannelKind::Z, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((effective_amplitude(Strategy::GI, ChannelKind::ZPrime, 1.0) - 2f64.sqrt()).abs() < 1e-15);
        assert!(t.validate().is_ok());
    }

    #[test]
    fn single_online_faults_are_corrected() {
        // any one Pauli at any online location leaves the logical qubit intact
        let c = Circuit::bundled();
        let split = c.steps.iter().position(|s| !s.offline).unwrap();
        for (i, step) in c.steps.iter().enumerate().skip(split) {
            let sites: Vec<Site> = step.ops.iter().flat_map(|&(_, a, b)| std::iter::once(a).chain(b)).chain(step.idle.iter().copied()).collect();
            for s in sites {
                for (x, z) in [(1u8, 0u8), (0, 1), (1, 1)] {
                    let mut f = Frames::default();
                    for (j, st) in c.steps.iter().enumerate() {
                        f.run_step(st, &GateErrorTable::noiseless(), &mut stream_rng(0, 0));
                        if j + 1 == i {
                            f.x[s.0 as usize] ^= x << s.1;
                            f.z[s.0 as usize] ^= z << s.1;
                        }
                    }
                    let d = decode(f.measured[0], 0);
                    let a = decode(f.measured[1], 0);
                    assert!(!(decode(f.x[2], 0).flip ^ a.flip) && !(decode(f.z[2], 0).flip ^ d.flip), "step {i} site {s:?}");
                }
            }
        }
    }

    #[test]
    fn level_map_fixed_point() {
        let zero = LevelErrorRates { level: 1, unlocatable: 0.0, locatable: 0.0, trials: 1000, preparations: 1.0 };
        let c = concatenate(zero, 5, 1000, 1, Exec::default()).unwrap();
        assert_eq!(c.verdict, Verdict::Converges);
        assert_eq!(c.levels.len(), 1);
    }

    fn z_only(r: f64) -> GateErrorTable {
        let n = LocationNoise { z: r, ..LocationNoise::default() };
        GateErrorTable { prep: n, hadamard: n, cz: n, memory: n, measure_x: LocationNoise::default() }
    }

    #[test]
    fn unlocatable_noise_is_suppressed_quadratically() {
        let rates = [4e-3, 8e-3, 1.6e-2];
        let logical: Vec<f64> = rates
            .iter()
            .map(|&r| run_telecorrection_round(&z_only(r), 200_000, 11, Exec::default()).unwrap().unlocatable)
            .collect();
        let slope = (logical[2] / logical[0]).ln() / (rates[2] / rates[0]).ln();
        assert!((1.6..=2.4).contains(&slope), "slope {slope}, rates {logical:?}");
    }

    #[test]
    fn locatable_noise_alone_stays_heralded() {
        let n = LocationNoise { failure: 0.05, herald: 0.02, ..LocationNoise::default() };
        let t = GateErrorTable { prep: n, hadamard: n, cz: n, memory: n, measure_x: LocationNoise::default() };
        let r = run_telecorrection_round(&t, 50_000, 5, Exec::default()).unwrap();
        assert_eq!(r.unlocatable, 0.0);
        assert!(r.locatable > 0.0);
    }

    #[test]
    fn logical_rate_grows_with_each_entry() {
        let base = GateErrorTable::from_loss(1e-3, 1.1, Strategy::GI).unwrap();
        let trials = 100_000;
        let r0 = run_telecorrection_round(&base, trials, 21, Exec::default()).unwrap();
        for kind in [GateKind::Prep, GateKind::Hadamard, GateKind::Cz, GateKind::Memory] {
            let mut t = base;
            let n = t.get_mut(kind);
            n.z = (n.z * 4.0).max(4e-3);
            n.failure = (n.failure * 2.0).min(0.5);
            let r1 = run_telecorrection_round(&t, trials, 21, Exec::default()).unwrap();
            let sigma = r0.std_error(r0.total()).hypot(r1.std_error(r1.total()));
            assert!(r1.total() >= r0.total() - 3.0 * sigma, "{kind:?}: {r0:?} -> {r1:?}");
        }
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn thread_count_does_not_change_results() {
        let t = GateErrorTable::from_loss(2e-3, 1.2, Strategy::GAlpha).unwrap();
        let seq = run_telecorrection_round(&t, 20_000, 9, Exec::Sequential).unwrap();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let par = pool.install(|| run_telecorrection_round(&t, 20_000, 9, Exec::Parallel)).unwrap();
            assert_eq!(format!("{seq:?}"), format!("{par:?}"));
        }
    }

    #[test]
    fn concatenation_separates_the_two_sides() {
        let opts = ThresholdOptions { trials: 20_000, ..ThresholdOptions::default() };
        let below = verdict_at(2e-4, 1.2, Strategy::GI, &opts, Exec::default()).unwrap();
        assert_eq!(below.verdict, Verdict::Converges);
        let above = verdict_at(1e-2, 1.2, Strategy::GI, &opts, Exec::default()).unwrap();
        assert_eq!(above.verdict, Verdict::Diverges);
        assert!(above.levels.windows(2).all(|w| w[1].total() >= w[0].total()), "{above:?}");
    }

    #[test]
    fn search_rejects_bad_brackets() {
        let opts = ThresholdOptions { trials: 2_000, eta_min: 0.1, eta_max: 0.2, ..ThresholdOptions::default() };
        assert!(matches!(threshold_search(1.2, Strategy::GI, &opts, Exec::default()), Err(Error::Bracket { .. })));
    }
}
