use decoupled_walk::asymptotics::{hole_log_prob, RateFunction};
use decoupled_walk::dist::IncrementLaw;
use decoupled_walk::gaussianlimit::{cov_x, stable_cdf, CovarianceSpec, GaussianProcess};
use proptest::prelude::*;

#[test]
fn pareto_hole_bracket_is_tight_and_nested() {
    let law = IncrementLaw::pareto(1.5, 1.0).unwrap();
    let coarse = hole_log_prob(&law, 40.0, 0.01).unwrap();
    assert!(coarse.relative_width() < 0.05, "{coarse:?}");
    let fine = hole_log_prob(&law, 40.0, 0.005).unwrap();
    assert!(coarse.lo <= fine.lo + 1e-9 * fine.lo && fine.hi <= coarse.hi + 1e-9 * fine.hi, "{coarse:?} {fine:?}");
}

fn light_law() -> impl Strategy<Value = IncrementLaw> {
    prop_oneof![
        (0.2f64..5.0).prop_map(|r| IncrementLaw::exponential(r).unwrap()),
        (0.3f64..6.0, 0.2f64..4.0).prop_map(|(k, r)| IncrementLaw::gamma(k, r).unwrap()),
    ]
}

fn grid() -> impl Strategy<Value = Vec<f64>> {
    (-3.0f64..3.0, prop::collection::vec(0.05f64..0.8, 1..12)).prop_map(|(start, gaps)| {
        let mut g = vec![start];
        for d in gaps {
            g.push(g.last().unwrap() + d);
        }
        g
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rate_function_is_convex(law in light_law(), a in 0.05f64..0.95, b in 1.05f64..4.0, w in 0.05f64..0.95) {
        let rf = RateFunction::new(&law);
        let mu = law.mean();
        let (x, y) = (a * mu, b * mu);
        let m = w * x + (1.0 - w) * y;
        let (ix, iy, im) = (rf.legendre(x).unwrap(), rf.legendre(y).unwrap(), rf.legendre(m).unwrap());
        prop_assert!(im <= w * ix + (1.0 - w) * iy + 1e-9 * (1.0 + ix + iy));
        prop_assert!(rf.legendre(mu).unwrap().abs() < 1e-9);
    }

    #[test]
    fn stable_cdf_is_monotone(alpha in prop::sample::select(vec![1.2, 1.5, 1.8, 2.0]), x in -40.0f64..20.0, d in 1e-3f64..5.0) {
        let (a, b) = (stable_cdf(alpha, x).unwrap(), stable_cdf(alpha, x + d).unwrap());
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(a <= b + 1e-12);
    }

    #[test]
    fn covariance_depends_on_lag_only(alpha in prop::sample::select(vec![1.5, 2.0]), u in -2.0f64..2.0, v in -2.0f64..2.0, s in -3.0f64..3.0) {
        let spec = CovarianceSpec::new(alpha, 1.0).unwrap();
        let (c0, c1) = (cov_x(&spec, u, v).unwrap(), cov_x(&spec, u + s, v + s).unwrap());
        prop_assert!((c0 - c1).abs() < 1e-9, "{} vs {}", c0, c1);
        prop_assert!((c0 - cov_x(&spec, v, u).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn covariance_matrix_factorizes(alpha in prop::sample::select(vec![1.5, 2.0]), g in grid()) {
        let spec = CovarianceSpec::new(alpha, 1.0).unwrap();
        let gp = GaussianProcess::new(&spec, &g).unwrap();
        prop_assert!(gp.jitter <= 1e-8, "jitter {}", gp.jitter);
    }
}
