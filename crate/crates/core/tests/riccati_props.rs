use kslab_core::analysis::{gronwall_compare, rk4, PiecewiseLinear, Riccati};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_matches_rk4(a in 0.01f64..50.0, b in 0.01f64..50.0, y1 in 0.01f64..10.0, t1 in -1.0f64..1.0) {
        let r = Riccati::new(a, b, y1, t1).unwrap();
        let horizon = 0.9 * r.blow_up_time();
        let mut y = y1;
        let mut t = t1;
        let pieces = 200;
        for k in 1..=pieces {
            let next = t1 + horizon * k as f64 / pieces as f64;
            y = rk4(|z| a * z + b * z * z, y, t, next, 200);
            t = next;
            let z = r.eval(t).unwrap();
            prop_assert!((y - z).abs() <= 1e-8 * z, "{} vs {} at step {}", y, z, k);
        }
    }

    #[test]
    fn solution_blows_up_at_the_formula(a in 0.01f64..50.0, b in 0.01f64..50.0, y1 in 0.01f64..10.0) {
        let r = Riccati::new(a, b, y1, 0.0).unwrap();
        let big_t = r.blow_up_time();
        let vals: Vec<f64> = (1..=6).map(|k| r.eval(big_t * (1.0 - 10f64.powi(-k))).unwrap()).collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] > 5.0 * w[0]);
        }
        prop_assert!(r.eval(big_t).is_err());
        prop_assert!(r.eval(-1e-9).is_err());
    }

    #[test]
    fn gronwall_accepts_supersolutions(c in 0.1f64..3.0, bump in 0.0f64..1.0) {
        let phi = PiecewiseLinear::new(vec![0.0, 10.0], vec![0.0, 10.0]).unwrap();
        let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
        let y: Vec<f64> = times.iter().map(|t| (c + bump) * t.exp()).collect();
        let v = gronwall_compare(&times, &y, &phi, c, 1e-9).unwrap();
        prop_assert!(v.passed);
    }
}
