use chainfresh::aoi::{aoi_violation_quadrature, average_aoi, AoiModel, TargetAoi};
use chainfresh::channel::{max_rate, max_rate_bisection, stp, ChannelParams};
use chainfresh::latency::GammaParams;
use chainfresh::numerics::{
    beta_fn, kummer_1f1, ln_gamma, lower_inc_gamma, upper_inc_gamma, SeriesControl,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // gamma(a, x) + Gamma(a, x) = Gamma(a)
    #[test]
    fn incomplete_gamma_complement(a in 0.05f64..50.0, x in 0.0f64..200.0) {
        let lo = lower_inc_gamma(a, x).unwrap();
        let hi = upper_inc_gamma(a, x).unwrap();
        let full = ln_gamma(a).unwrap().exp();
        prop_assert!(((lo + hi) - full).abs() <= 1e-10 * full);
        prop_assert!(lo >= 0.0 && hi >= 0.0);
    }

    // integer shape collapses to the finite exponential sum
    #[test]
    fn integer_lower_gamma_is_finite_sum(m in 1u32..=12, x in 1e-3f64..40.0) {
        let a = m as f64;
        let got = lower_inc_gamma(a, x).unwrap();
        let mut partial = 0.0;
        let mut term = 1.0; // x^n / n!
        for n in 0..m {
            if n > 0 {
                term *= x / n as f64;
            }
            partial += term;
        }
        let fact: f64 = (1..m as u64).map(|k| k as f64).product();
        let want = fact * (1.0 - (-x).exp() * partial);
        // the bracket cancels to roundoff for small x, so the reference
        // carries an absolute error of about fact * ulp
        let tol = 1e-10 * want.abs() + fact * partial * (-x).exp() * 1e-14;
        prop_assert!((got - want).abs() <= tol, "gamma({a}, {x}): {got} vs {want}");
    }

    // 1F1(a; b; z) = e^z 1F1(b-a; b; -z); the two sides take different code
    // paths for either sign of z
    #[test]
    fn kummer_transform_identity(
        a in 0.5f64..8.0,
        extra in 0.5f64..10.0,
        z in -30.0f64..30.0,
    ) {
        let b = a + extra;
        let ctl = SeriesControl::default();
        let lhs = kummer_1f1(a, b, z, ctl).unwrap();
        let rhs = z.exp() * kummer_1f1(b - a, b, -z, ctl).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-12),
            "1F1({a}; {b}; {z}): {lhs} vs {rhs}");
    }

    // B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)
    #[test]
    fn beta_gamma_identity(a in 0.1f64..30.0, b in 0.1f64..30.0) {
        let lhs = beta_fn(a, b).unwrap().ln();
        let rhs = ln_gamma(a).unwrap() + ln_gamma(b).unwrap() - ln_gamma(a + b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    // the closed-form rate inverts the success-probability curve exactly,
    // and the bisection solver agrees with it
    #[test]
    fn channel_rate_round_trip(zeta in 0.05f64..0.999) {
        let params = ChannelParams::defaults();
        let eps = max_rate(&params, zeta).unwrap();
        prop_assert!((stp(eps, &params).unwrap() - zeta).abs() <= 1e-9);
        let eps_b = max_rate_bisection(&params, zeta).unwrap();
        prop_assert!((eps_b - eps).abs() <= 1e-6 * eps);
    }

    // success probability is strictly decreasing in the attempted rate
    #[test]
    fn stp_monotone_in_rate(e1 in 1e4f64..1e7, gap in 1.001f64..10.0) {
        let params = ChannelParams::defaults();
        let p1 = stp(e1, &params).unwrap();
        let p2 = stp(e1 * gap, &params).unwrap();
        prop_assert!(p2 < p1);
        prop_assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
    }

    // the violation probability is a proper tail: in [0, 1] and
    // non-increasing in the target
    #[test]
    fn violation_monotone_in_target(
        alpha in 0.5f64..8.0,
        beta in 0.3f64..4.0,
        rho in 0.5f64..10.0,
        t_tx in 0.0f64..1.0,
        v1 in 0.05f64..10.0,
        dv in 0.01f64..5.0,
    ) {
        let m = AoiModel::new(GammaParams::new(alpha, beta).unwrap(), rho, t_tx).unwrap();
        let p1 = aoi_violation_quadrature(&m, &TargetAoi::new(t_tx + v1).unwrap()).unwrap();
        let p2 = aoi_violation_quadrature(&m, &TargetAoi::new(t_tx + v1 + dv).unwrap()).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&p1));
        prop_assert!(p2 <= p1 + 1e-7, "P({}) = {p1} < P({}) = {p2}", v1, v1 + dv);
    }

    // the mean age always exceeds the transport delay plus the mean wait for
    // the next effective update
    #[test]
    fn average_aoi_lower_bound(
        alpha in 0.5f64..8.0,
        beta in 0.3f64..4.0,
        rho in 0.5f64..10.0,
        t_tx in 0.0f64..1.0,
    ) {
        let m = AoiModel::new(GammaParams::new(alpha, beta).unwrap(), rho, t_tx).unwrap();
        prop_assert!(average_aoi(&m) > t_tx + 0.5 / rho);
    }
}
