//! The dense circuit engine and the factorized per-eigenvector engine must
//! produce the same output state, residual weight and query counts wherever
//! both are feasible.

use fracpow::blackbox::{BlackBox, Capabilities};
use fracpow::estimation::AncillaConfig;
use fracpow::fixtures::{dyadic_fixture, random_gapped_fixture, third_fixture};
use fracpow::linalg::haar_state_vector;
use fracpow::power::{fractional_apply, inverse_free_apply, EngineChoice, RunOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn opts(engine: EngineChoice) -> RunOptions {
    RunOptions {
        engine,
        ..RunOptions::default()
    }
}

#[test]
fn standard_mode_engines_agree() {
    for (fixture, seed) in [
        (third_fixture(3), 10u64),
        (dyadic_fixture(4, 2, 4).unwrap(), 11),
        (random_gapped_fixture(4, 0.4, 5).unwrap(), 12),
    ] {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let s = haar_state_vector(fixture.dim(), &mut rng);
        for (m, r, t) in [(2usize, 3usize, 0.5f64), (3, 3, 0.3), (2, 1, 0.8)] {
            let cfg = AncillaConfig::new(m, r).unwrap();
            let mut bb_d = BlackBox::new(fixture.clone(), Capabilities::ALL);
            let dense = fractional_apply(&mut bb_d, &s, t, cfg, &opts(EngineChoice::Dense)).unwrap();
            let mut bb_f = BlackBox::new(fixture.clone(), Capabilities::ALL);
            let fact =
                fractional_apply(&mut bb_f, &s, t, cfg, &opts(EngineChoice::Factorized)).unwrap();

            for (a, b) in dense.out_state.amps().iter().zip(fact.out_state.amps()) {
                assert!((a - b).norm() < 1e-11, "m={m} r={r} t={t}: {a} vs {b}");
            }
            assert!(
                (dense.residual_ancilla_weight - fact.residual_ancilla_weight).abs() < 1e-11,
                "residuals {} vs {}",
                dense.residual_ancilla_weight,
                fact.residual_ancilla_weight
            );
            assert!((dense.err_vs_oracle - fact.err_vs_oracle).abs() < 1e-11);
            assert_eq!(dense.ledger, fact.ledger);
        }
    }
}

#[test]
fn inverse_free_engines_agree() {
    let fixture = third_fixture(21);
    let mut rng = ChaCha12Rng::seed_from_u64(22);
    let s = haar_state_vector(2, &mut rng);
    for (m, t_extra) in [(2usize, 0.5f64), (3, 0.25)] {
        let t = (1u64 << m) as f64 + t_extra;
        let cfg = AncillaConfig::new(m, 1).unwrap();
        let mut bb_d = BlackBox::new(fixture.clone(), Capabilities::NO_INVERSE);
        let dense = inverse_free_apply(&mut bb_d, &s, t, cfg, &opts(EngineChoice::Dense)).unwrap();
        let mut bb_f = BlackBox::new(fixture.clone(), Capabilities::NO_INVERSE);
        let fact =
            inverse_free_apply(&mut bb_f, &s, t, cfg, &opts(EngineChoice::Factorized)).unwrap();
        for (a, b) in dense.out_state.amps().iter().zip(fact.out_state.amps()) {
            assert!((a - b).norm() < 1e-11, "m={m} t={t}: {a} vs {b}");
        }
        assert!((dense.residual_ancilla_weight - fact.residual_ancilla_weight).abs() < 1e-11);
        assert_eq!(dense.ledger, fact.ledger);
        assert_eq!(dense.ledger.calls_uinv, 0);
        assert_eq!(dense.ledger.calls_cuinv, 0);
    }
}

#[test]
fn auto_engine_picks_factorized_beyond_width() {
    // m·r + m + n beyond the default 24-qubit guard must still run
    let fixture = third_fixture(30);
    let mut rng = ChaCha12Rng::seed_from_u64(31);
    let s = haar_state_vector(2, &mut rng);
    let cfg = AncillaConfig::with_default_r(8).unwrap(); // width 8*17+8+1 = 145
    let mut bb = BlackBox::new(fixture, Capabilities::ALL);
    let run = fractional_apply(&mut bb, &s, 0.5, cfg, &RunOptions::default()).unwrap();
    assert!(run.err_vs_oracle < 0.02);
    assert_eq!(run.ledger.calls_cu, 17 * 255);
}
