use anyhow::Context;
use hybrid_teleport::bell::b_alpha_teleport_probabilities;
use hybrid_teleport::bell::multiphoton::{multiphoton_branch_analysis, BranchClass, FusionGate, MultiphotonCase, MultiphotonInput, Polarization};
use hybrid_teleport::channels::{ChannelKind, Strategy};
use hybrid_teleport::loss::{memory_error_rate, oracle::loss_weights};
use hybrid_teleport::par::{derive_seed, stream_rng, Exec};
use hybrid_teleport::qubit::HybridQubit;
use hybrid_teleport::resources::{cost_curve, crossover_alpha, g_alpha_limit, total_round_cost};
use hybrid_teleport::steane::{PauliFrame7, N};
use hybrid_teleport::teleport::oracle::OracleTeleporter;
use hybrid_teleport::teleport::{failure_probability, lossy_failure_probability, TeleportStatus, Teleporter};
use hybrid_teleport::threshold::{threshold_point, ThresholdOptions};
use hybrid_teleport::Error;

use crate::config::RunConfig;
use crate::output::{num, Table};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    VerificationFailed = 1,
    Config = 2,
    Numerical = 3,
}

struct Checks {
    table: Table,
    failed: usize,
}

impl Checks {
    fn new() -> Self {
        let table = Table::new(&[
            ("check", "name"),
            ("parameter", "text"),
            ("observed", "dimensionless"),
            ("expected", "dimensionless"),
            ("deviation", "dimensionless"),
            ("tolerance", "dimensionless"),
            ("status", "pass|fail"),
        ]);
        Self { table, failed: 0 }
    }

    fn record(&mut self, check: &str, parameter: String, observed: f64, expected: f64, tolerance: f64) {
        let deviation = (observed - expected).abs();
        let ok = deviation <= tolerance;
        self.failed += usize::from(!ok);
        self.table.push(vec![
            check.into(),
            parameter,
            num(observed),
            num(expected),
            num(deviation),
            num(tolerance),
            if ok { "pass" } else { "fail" }.into(),
        ]);
    }
}

pub fn verify(cfg: &RunConfig) -> anyhow::Result<(Table, Exit)> {
    let mut c = Checks::new();
    let exec = Exec::default();
    let alphas = cfg.alphas();

    for &alpha in &alphas {
        let p = b_alpha_teleport_probabilities(alpha);
        c.record("b_alpha_normalization", format!("alpha={alpha}"), p.iter().sum(), 1.0, 1e-12);
        c.record("failure_is_b_alpha_times_b_ii", format!("alpha={alpha}"), p[4] / 2.0, failure_probability(alpha), 1e-15);
        c.record("lossless_limit", format!("alpha={alpha}"), lossy_failure_probability(alpha, 0.0), failure_probability(alpha), 0.0);
    }

    for (i, &alpha) in alphas.iter().enumerate() {
        let tp = Teleporter::ideal(ChannelKind::PsiC, alpha)?;
        let fails = exec.count_shots(cfg.trials, derive_seed(cfg.seed, &[1, i as u64]), |rng| {
            let q = HybridQubit::random(alpha, rng);
            tp.teleport(&q, rng).expect("matching amplitude").status == TeleportStatus::Failure
        });
        let f = fails as f64 / cfg.trials as f64;
        let p = failure_probability(alpha);
        let sigma = (p * (1.0 - p) / cfg.trials as f64).sqrt();
        c.record("teleport_failure_rate", format!("alpha={alpha} shots={}", cfg.trials), f, p, 3.0 * sigma);
        if (alpha - 1.4).abs() < 1e-9 {
            c.record("teleport_failure_rate_quoted", format!("alpha={alpha} shots={}", cfg.trials), f, 0.00992, 3.0 * sigma);
        }
    }

    let oracle_shots = cfg.trials.min(10_000);
    for (i, &alpha) in alphas.iter().enumerate() {
        let oracle = OracleTeleporter::ideal(ChannelKind::PsiC, alpha)?;
        let mut rng = stream_rng(derive_seed(cfg.seed, &[2]), i as u64);
        let mut worst = 1.0f64;
        for _ in 0..oracle_shots {
            let q = HybridQubit::random(alpha, &mut rng);
            if let (_, Some(out)) = oracle.shot(&q, &mut rng)? {
                worst = worst.min(out.fidelity(&q));
            }
        }
        c.record("oracle_fidelity", format!("alpha={alpha} shots={oracle_shots}"), worst, 1.0, 1e-7);
    }

    for &alpha in &alphas {
        for &eta in &cfg.etas() {
            let w = loss_weights(alpha, eta)?;
            let e = (-2.0 * eta * alpha * alpha).exp();
            let want = [(1.0 - eta) * (1.0 + e) / 2.0, (1.0 - eta) * (1.0 - e) / 2.0, eta / 2.0, eta / 2.0];
            let got = [w.photon_kept_no_error, w.photon_kept_z, w.photon_lost_no_error, w.photon_lost_z];
            let dev = got.iter().zip(want).map(|(g, x)| (g - x).abs()).fold(0.0, f64::max);
            c.record("loss_branch_weights", format!("alpha={alpha} eta={eta}"), dev, 0.0, 1e-6);
            c.record("loss_z_rate", format!("alpha={alpha} eta={eta}"), w.z_error(), memory_error_rate(eta, alpha), 1e-6);
        }
    }

    let mut corrected = 0;
    for q in 0..N {
        for (x, z) in [(1u8, 0u8), (0, 1), (1, 1)] {
            corrected += u32::from(PauliFrame7 { x: x << q, z: z << q }.logical_after_decoding() == (false, false));
        }
    }
    c.record("steane_weight_one", "21 cases".into(), f64::from(corrected), 21.0, 0.0);

    c.record("round_cost_gi", "any alpha".into(), total_round_cost(Strategy::GI, 1.0)?, 28780.0, 0.0);
    c.record("round_cost_galpha_limit", "alpha=inf".into(), g_alpha_limit(), 4182.0, 0.0);
    let at3 = total_round_cost(Strategy::GAlpha, 3.0)?;
    c.record("round_cost_galpha", "alpha=3".into(), at3, 4182.0, 4182.0 * 1e-3);
    let cross = crossover_alpha(1e-9)?;
    c.record("crossover_alpha", "tolerance=1e-9".into(), cross, 0.59, 0.04);

    use Polarization::{H, V};
    let b_i = multiphoton_branch_analysis(&MultiphotonInput { lambda: 0.01, terms: MultiphotonCase::ALL.to_vec() }, FusionGate::TypeI)?;
    let expected = [
        ((H, V), BranchClass::IndistinctFailure),
        ((V, V), BranchClass::IndistinctFailure),
        ((H, H), BranchClass::ContaminatingSuccess),
        ((V, H), BranchClass::DetectedDiscard),
    ];
    for ((d, p), class) in expected {
        let got = b_i.cases.iter().find(|k| k.case == MultiphotonCase::new(d, p)).map(|k| k.class);
        c.record("b_i_multiphoton_class", format!("2{d:?} {p:?} -> {class:?}"), f64::from(u8::from(got == Some(class))), 1.0, 0.0);
    }
    let b_ii = multiphoton_branch_analysis(
        &MultiphotonInput { lambda: 0.01, terms: vec![MultiphotonCase::new(H, V), MultiphotonCase::new(V, H)] },
        FusionGate::TypeII,
    )?;
    c.record("b_ii_contaminated_split", "lambda=0.01".into(), b_ii.incorrect_success_fraction, 0.5, 1e-12);

    let exit = if c.failed == 0 { Exit::Success } else { Exit::VerificationFailed };
    Ok((c.table, exit))
}

pub fn resources(cfg: &RunConfig) -> anyhow::Result<(Table, Exit)> {
    let mut t = Table::new(&[("kind", "curve|crossover|limit"), ("alpha", "dimensionless"), ("strategy", "gi|galpha"), ("cost", "primitives_per_round")]);
    let wanted = cfg.strategy.strategies();
    for row in cost_curve(&cfg.alphas()).into_iter().filter(|r| wanted.contains(&r.strategy)) {
        t.push(vec!["curve".into(), num(row.alpha), row.strategy.name().into(), num(row.cost)]);
    }
    let cross = match crossover_alpha(1e-9) {
        Ok(a) => a,
        Err(e) => return Err(e).context("crossover search").map_err(numerical),
    };
    t.push(vec!["crossover".into(), num(cross), "both".into(), num(total_round_cost(Strategy::GI, cross)?)]);
    t.push(vec!["limit".into(), "inf".into(), Strategy::GAlpha.name().into(), num(g_alpha_limit())]);
    Ok((t, Exit::Success))
}

pub fn threshold(cfg: &RunConfig) -> anyhow::Result<(Table, Exit)> {
    let mut t = Table::new(&[
        ("alpha", "dimensionless"),
        ("strategy", "gi|galpha"),
        ("eta_threshold", "loss_probability"),
        ("ci_low", "loss_probability"),
        ("ci_high", "loss_probability"),
        ("replicas", "count"),
        ("trials", "rounds_per_level"),
        ("seed", "u64"),
        ("status", "ok|error"),
    ]);
    let opts = ThresholdOptions {
        trials: cfg.trials,
        levels: cfg.levels,
        eta_min: cfg.eta_min,
        eta_max: cfg.eta_max,
        seed: cfg.seed,
        ..ThresholdOptions::default()
    };
    let points: Vec<(f64, Strategy)> = cfg.alphas().into_iter().flat_map(|a| cfg.strategy.strategies().into_iter().map(move |s| (a, s))).collect();
    // grid order is kept regardless of completion order
    let results = Exec::default().map(points.len(), |i| threshold_point(points[i].0, points[i].1, &opts, cfg.replicas, Exec::default()));
    let mut exit = Exit::Success;
    for ((alpha, strategy), r) in points.into_iter().zip(results) {
        match r {
            Ok(p) => t.push(vec![
                num(alpha),
                strategy.name().into(),
                num(p.eta),
                num(p.ci_low),
                num(p.ci_high),
                p.replicas.len().to_string(),
                p.trials.to_string(),
                p.seed.to_string(),
                "ok".into(),
            ]),
            Err(e) => {
                exit = Exit::Numerical;
                let status = format!("error: {e}");
                t.push(vec![num(alpha), strategy.name().into(), String::new(), String::new(), String::new(), cfg.replicas.to_string(), cfg.trials.to_string(), cfg.seed.to_string(), status]);
            }
        }
    }
    Ok((t, exit))
}

/// Marks an error as a numerical-convergence failure.
#[derive(Debug)]
pub struct Numerical(pub anyhow::Error);

impl std::fmt::Display for Numerical {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Numerical {}

fn numerical(e: anyhow::Error) -> anyhow::Error {
    anyhow::Error::new(Numerical(e))
}

/// Exit status for an error escaping a command.
pub fn classify(e: &anyhow::Error) -> Exit {
    if e.downcast_ref::<Numerical>().is_some() {
        return Exit::Numerical;
    }
    match e.downcast_ref::<Error>() {
        Some(Error::Bracket { .. } | Error::Divergent(_) | Error::TruncationLeakage { .. }) => Exit::Numerical,
        _ => Exit::Config,
    }
}
