use kslab_core::solver::{comparison_check, solve_regularized, ComparisonKind, Problem, SolverConfig};
use kslab_core::{build_mesh, w0_from_density, RadialDensity, SignalProfile, SystemParams};
use proptest::prelude::*;

fn params(f0: f64) -> SystemParams {
    SystemParams { dim: 3, alpha: 2.5, f0, radius: 0.5, rho: 0.1, c0: 1.0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn invariants_and_order(c_lo in 0.2f64..1.0, gap in 0.05f64..1.0, f0 in 1.3f64..4.0) {
        let mesh = build_mesh(4.0, 128, 1.1).unwrap();
        let problem = Problem::new(SignalProfile::new(&params(f0)).unwrap());
        let mut cfg = SolverConfig::new(2e-2, 0.004);
        cfg.output_times = vec![0.001, 0.002, 0.003];
        let lo = w0_from_density(&RadialDensity::unit_plateau(c_lo), 3, &mesh).unwrap();
        let hi = w0_from_density(&RadialDensity::unit_plateau(c_lo + gap), 3, &mesh).unwrap();
        let run_lo = solve_regularized(&problem, &lo, &cfg).unwrap();
        let run_hi = solve_regularized(&problem, &hi, &cfg).unwrap();
        for m in run_lo.snapshots.iter().chain(&run_hi.snapshots) {
            prop_assert!(m.invariants().holds(m.cap(), 1e-8, 1e-8));
        }
        // larger data stay above: compare the low run against the high one snapshot by snapshot
        for (a, b) in run_lo.snapshots.iter().zip(&run_hi.snapshots) {
            for (u, v) in a.values().iter().zip(b.values()) {
                prop_assert!(u <= v);
            }
        }
        let cap = run_hi.cap();
        let rep = comparison_check(&run_hi, |_, _| cap, ComparisonKind::Super, (0.0, 4.0), 1.0);
        prop_assert!(rep.holds(1e-8 * cap));
    }
}
