use hybrid_teleport::channels::Strategy;
use hybrid_teleport::loss::{memory_error_rate, oracle::loss_weights};
use hybrid_teleport::par::Exec;
use hybrid_teleport::steane::{decode, PauliFrame7};
use hybrid_teleport::threshold::{concatenate, run_telecorrection_round, verdict_at, GateErrorTable, ThresholdOptions, Verdict};

#[test]
fn fock_loss_matches_closed_form() {
    for (alpha, eta) in [(0.7, 0.02), (1.3, 0.1)] {
        let w = loss_weights(alpha, eta).unwrap();
        assert!((w.z_error() - memory_error_rate(eta, alpha)).abs() < 1e-9);
        assert!((w.total() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn two_errors_on_one_block_are_not_corrected() {
    let f = PauliFrame7 { x: 0b11, z: 0 };
    assert_eq!(f.logical_after_decoding(), (true, false));
    assert!(!decode(0b11, 0b11).flip);
}

#[test]
fn small_loss_converges_and_large_loss_diverges() {
    let opts = ThresholdOptions { trials: 5_000, levels: 3, ..ThresholdOptions::default() };
    assert_eq!(verdict_at(1e-5, 1.1, Strategy::GI, &opts, Exec::default()).unwrap().verdict, Verdict::Converges);
    assert_eq!(verdict_at(3e-2, 1.1, Strategy::GI, &opts, Exec::default()).unwrap().verdict, Verdict::Diverges);
}

#[test]
fn level_rates_are_reported_per_level() {
    let table = GateErrorTable::from_loss(5e-4, 1.0, Strategy::GAlpha).unwrap();
    let first = run_telecorrection_round(&table, 5_000, 1, Exec::default()).unwrap();
    assert!(first.total() < 0.5);
    let c = concatenate(first, 3, 5_000, 1, Exec::default()).unwrap();
    assert!(!c.levels.is_empty() && c.levels.len() <= 3);
    assert_eq!(c.levels[0], first);
    assert!(c.levels.windows(2).all(|w| w[1].level == w[0].level + 1));
}
