use kslab_core::analysis::{log_grid, verify_integral_bound, verify_ode_inequality, TestFunction};
use kslab_core::{delta_lower_bound, f0_threshold, Breakpoints, BridgeKind, SignalProfile, SystemParams, TestFnParams};
use proptest::prelude::*;

/// A random admissible `(params, ξ, δ, γ)`.
fn tuple() -> impl Strategy<Value = (SystemParams, TestFnParams)> {
    (3u32..=6, 0.02f64..0.98, 0.01f64..10.0, 0.05f64..0.95, 0.05f64..0.95, 0.01f64..1.0, 0.05f64..0.95, 0.01f64..10.0)
        .prop_map(|(n, ua, uf, r, urho, uxi, ud, ug)| {
            let nf = n as f64;
            let alpha = 2.0 + (nf - 2.0) * ua;
            let f0 = f0_threshold(n, alpha).unwrap() * (1.0 + uf);
            let rho = r / 2.0 * urho;
            let p = SystemParams { dim: n, alpha, f0, radius: r, rho, c0: 1.0 };
            let xi = 4.0 - 4.0 / nf + 4.0 / nf * uxi;
            let lb = delta_lower_bound(n, alpha, f0).unwrap();
            let delta = lb + (1.0 - lb) * ud;
            let gamma = 4.0 / (r - rho) * (1.0 + ug);
            (p, TestFnParams { xi, delta, gamma })
        })
}

fn build(p: &SystemParams, t: TestFnParams) -> TestFunction {
    let vp = p.validate().unwrap();
    let sig = SignalProfile::with_options(p, BridgeKind::QuinticSmoothstep, Breakpoints::LiteralS).unwrap();
    TestFunction::new(&vp, t, sig).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn continuous_at_the_kink((p, t) in tuple()) {
        let tf = build(&p, t);
        let k = tf.kink();
        let e = (-t.xi).exp();
        let (v, d, _) = tf.eval(k * (1.0 - 1e-15)).unwrap();
        prop_assert!((v - e).abs() <= 1e-12 * e);
        prop_assert!((d + t.gamma * e).abs() <= 1e-10 * t.gamma * e);
    }

    #[test]
    fn positive_decreasing_convex((p, t) in tuple()) {
        let tf = build(&p, t);
        let mut prev = f64::INFINITY;
        for s in log_grid(1e-8, 10.0, 2000) {
            let (v, d, dd) = tf.eval(s).unwrap();
            prop_assert!(v > 0.0 || s * t.gamma > 700.0);
            prop_assert!(v <= prev);
            prop_assert!(d <= 0.0 && dd >= 0.0);
            prev = v;
        }
    }

    #[test]
    fn differential_inequality((p, t) in tuple()) {
        let tf = build(&p, t);
        let rep = verify_ode_inequality(&tf, &log_grid(1e-8, 10.0, 2000));
        prop_assert!(rep.passed, "{} at {}", rep.min_margin, rep.at_s);
    }

    #[test]
    fn kink_identity((p, t) in tuple()) {
        // just above ξ/γ the operator ratio reduces to c1 γ^(2/n) + nγF - nF_s
        let tf = build(&p, t);
        let n = p.dim as f64;
        let s = tf.kink();
        let sig = tf.signal();
        let f = sig.integral(s).unwrap();
        let fs = sig.integral_derivative(s).unwrap();
        let expect = tf.constants.c1 * t.gamma.powf(2.0 / n) + n * t.gamma * f - n * fs;
        prop_assert!((tf.operator_ratio(s) - expect).abs() <= 1e-9 * expect.abs().max(1.0));
    }

    #[test]
    fn integral_bound((p, t) in tuple()) {
        let tf = build(&p, t);
        let r = verify_integral_bound(&tf).unwrap();
        prop_assert!(r.holds);
        prop_assert!((r.outer_numeric - r.outer_exact).abs() <= 1e-8 * r.outer_exact);
        prop_assert!(r.inner_numeric <= r.inner_bound * (1.0 + 1e-12));
    }
}
