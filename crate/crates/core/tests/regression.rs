//! Values frozen from the first exact run on the divergent lattice
//! reference: Y = Z, alpha = 2, [0, 1), psi(n) = 1/n (J = 4, j = 0).

use delone_approx::construction::{DivergenceSetup, ExperimentConfig};
use delone_approx::delone::DeloneSet;
use delone_approx::estimators::{chung_erdos_ratio, quasi_independence_constant};
use delone_approx::numerics::Scalar;
use delone_approx::psi::PsiSpec;

fn reference() -> (ExperimentConfig, DivergenceSetup) {
    let cfg = ExperimentConfig::with_policy_precision(
        Scalar::from_int(2),
        Scalar::zero(),
        Scalar::one(),
        260,
        DeloneSet::integers(),
        PsiSpec::power(Scalar::one(), Scalar::one()),
    )
    .unwrap();
    let setup = DivergenceSetup::new(&cfg).unwrap();
    (cfg, setup)
}

#[test]
fn chung_erdos_trajectory() {
    let (cfg, setup) = reference();
    assert_eq!((setup.big_j(), setup.j()), (4, 0));
    let ce = chung_erdos_ratio(&cfg, &setup, 50).unwrap();
    let at = |n: usize| ce.trajectory[n - 1].clone().unwrap();
    assert_eq!(at(1), Scalar::ratio(1, 2));
    assert_eq!(at(2), Scalar::ratio(405, 704));
    for (n, pinned) in [(10, 0.678_236_077_600_905_4), (25, 0.708_951_761_749_443_5), (50, 0.729_039_151_889_262_8)] {
        assert!((at(n).to_f64() - pinned).abs() < 1e-12, "N = {n}");
    }
    // The trajectory increases over this range, so the running max is the last value.
    assert_eq!(ce.running_max, at(50));
}

#[test]
fn quasi_independence_constants() {
    let (cfg, setup) = reference();
    let unpruned = setup.clone().without_pruning();
    for n in [16i64, 32, 64] {
        let pruned = quasi_independence_constant(&cfg, &setup, n as u64).unwrap();
        assert_eq!(pruned, Scalar::ratio(13, 4), "pruned, N = {n}");
        // Without pruning the constant grows with N.
        let plain = quasi_independence_constant(&cfg, &unpruned, n as u64).unwrap();
        assert_eq!(plain, Scalar::ratio(n - 1, 2), "unpruned, N = {n}");
    }
}
