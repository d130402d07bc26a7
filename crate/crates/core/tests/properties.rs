use proptest::prelude::*;
use riskenv::dynamics::check_time_consistency;
use riskenv::envelope::{dual_check, member_eval, member_minimizer, EnvelopeMemberSpec, MemberKind};
use riskenv::gexp::{
    maxmin_dp, relative_entropy, relative_entropy_chain, solve_bsde, ComparisonStatus, Generator, MaxminMode,
};
use riskenv::measures::{RiskMeasureSpec, Utility};
use riskenv::sampling::{random_equivalent_measure, random_payoff, random_profile, random_tree, rng, SeededRng};
use riskenv::space::{cond_ess_extrema, cond_expect, lift, Extremum, RandomVariable, ScenarioTree};

fn setup(seed: u64, depth: usize) -> (SeededRng, ScenarioTree) {
    let mut g = rng(seed);
    let t = random_tree(&mut g, depth, 3);
    (g, t)
}

fn monetary_specs() -> Vec<RiskMeasureSpec> {
    vec![
        RiskMeasureSpec::linear(),
        RiskMeasureSpec::WorstCase,
        RiskMeasureSpec::entropic(1.3),
        RiskMeasureSpec::conditional_var(0.3),
        RiskMeasureSpec::utility_shortfall(Utility::exponential(0.8)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tower_property(seed in any::<u64>(), depth in 1usize..5) {
        let (mut g, t) = setup(seed, depth);
        let q = random_equivalent_measure(&mut g, &t);
        let x = random_payoff(&mut g, &t, 3.0);
        for s in 0..=depth {
            let inner = lift(&t, &cond_expect(&t, &x, s, Some(&q)).unwrap()).unwrap();
            for l in 0..=s {
                let a = cond_expect(&t, &inner, l, Some(&q)).unwrap();
                let b = cond_expect(&t, &x, l, Some(&q)).unwrap();
                prop_assert!(a.max_abs_diff(&b) <= 1e-12);
            }
        }
    }

    #[test]
    fn lift_then_project_is_identity(seed in any::<u64>(), depth in 1usize..5) {
        let (mut g, t) = setup(seed, depth);
        let level = depth / 2;
        let p = random_profile(&mut g, &t, level, -2.0, 2.0);
        let x = lift(&t, &p).unwrap();
        prop_assert!(cond_expect(&t, &x, level, None).unwrap().max_abs_diff(&p) <= 1e-12);
        prop_assert_eq!(cond_ess_extrema(&t, &x, level, Extremum::Sup).unwrap(), p.clone());
        prop_assert_eq!(cond_ess_extrema(&t, &x, level, Extremum::Inf).unwrap(), p);
    }

    #[test]
    fn measures_are_monotone_and_cash_additive(seed in any::<u64>(), depth in 1usize..4) {
        let (mut g, t) = setup(seed, depth);
        let x = random_payoff(&mut g, &t, 2.0);
        let bump = random_payoff(&mut g, &t, 1.0).map(f64::abs);
        let y = x.add(&bump);
        let level = depth - 1;
        let m = random_profile(&mut g, &t, level, -1.0, 1.0);
        for spec in monetary_specs() {
            let slack = spec.numeric_slack() + 1e-9;
            let rx = spec.evaluate(&t, &x, level).unwrap();
            let ry = spec.evaluate(&t, &y, level).unwrap();
            for (a, b) in rx.values().iter().zip(ry.values()) {
                prop_assert!(b <= &(a + slack), "{} not monotone", spec.name());
            }
            let shifted = spec.evaluate(&t, &x.add_profile(&t, &m), level).unwrap();
            let expect = rx.zip_with(&m, |r, c| r - c);
            prop_assert!(shifted.max_abs_diff(&expect) <= 2.0 * slack, "{} not cash additive", spec.name());
        }
    }

    #[test]
    fn star_minimizer_beats_alpha_grid(z in prop::collection::vec(-3.0f64..3.0, 1..10), seed in any::<u64>()) {
        let mut g = rng(seed);
        let x: Vec<f64> = z.iter().map(|_| rand::Rng::random_range(&mut g, -3.0..3.0)).collect();
        let (a, v) = member_minimizer(MemberKind::Star, &z, &x).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let phi = |a: f64| z.iter().zip(&x).map(|(zv, xv)| a * zv - xv).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!((phi(a) - v).abs() <= 1e-12);
        for k in 0..=200 {
            prop_assert!(v <= phi(k as f64 / 200.0) + 1e-12);
        }
    }

    #[test]
    fn monetary_member_matches_vertex_dual(seed in any::<u64>(), depth in 1usize..5) {
        let (mut g, t) = setup(seed, depth);
        let z = random_payoff(&mut g, &t, 2.0);
        let x = random_payoff(&mut g, &t, 2.0);
        let level = depth - 1;
        let primal = member_eval(&EnvelopeMemberSpec::new(MemberKind::Monetary, z.clone(), level), &t, &x, level).unwrap();
        let r = dual_check(&t, &z, &x, level, 5, seed).unwrap();
        prop_assert!(primal.max_abs_diff(&r.dual) <= 1e-12);
        prop_assert!(r.interior_excess <= 1e-12);
    }

    #[test]
    fn bsde_comparison(seed in any::<u64>(), n in 1usize..7, kappa in 0.0f64..0.9) {
        let t = ScenarioTree::binomial(n, 1.0).unwrap();
        let mut g = rng(seed);
        let lo = random_payoff(&mut g, &t, 1.0);
        let hi = lo.add(&random_payoff(&mut g, &t, 1.0).map(f64::abs));
        for gen in [Generator::abs(kappa), Generator::asymmetric(kappa / 2.0, kappa)] {
            let a = solve_bsde(&t, &gen, &lo).unwrap();
            let b = solve_bsde(&t, &gen, &hi).unwrap();
            prop_assert_eq!(a.comparison, ComparisonStatus::Verified);
            for l in 0..=n {
                for (x, y) in a.y_at(l).values().iter().zip(b.y_at(l).values()) {
                    prop_assert!(x <= &(y + 1e-12));
                }
            }
        }
    }

    #[test]
    fn maxmin_modes_are_ordered(seed in any::<u64>(), n in 1usize..7, alpha in 0.0f64..1.0) {
        let t = ScenarioTree::binomial(n, 1.0).unwrap();
        let xi = random_payoff(&mut rng(seed), &t, 2.0);
        for l in 0..=n {
            let inf = maxmin_dp(&t, 0.5, &xi, l, MaxminMode::Inf).unwrap();
            let mid = maxmin_dp(&t, 0.5, &xi, l, MaxminMode::Alpha(alpha)).unwrap();
            let sup = maxmin_dp(&t, 0.5, &xi, l, MaxminMode::Sup).unwrap();
            let e = cond_expect(&t, &xi, l, None).unwrap();
            for i in 0..e.len() {
                let (a, b, c, d) = (inf.values()[i], mid.values()[i], sup.values()[i], e.values()[i]);
                prop_assert!(a <= b + 1e-12 && b <= c + 1e-12);
                prop_assert!(a <= d + 1e-12 && d <= c + 1e-12);
            }
        }
    }

    #[test]
    fn relative_entropy_chain_rule(seed in any::<u64>(), depth in 1usize..5) {
        let (mut g, t) = setup(seed, depth);
        let q = random_equivalent_measure(&mut g, &t);
        let r = random_equivalent_measure(&mut g, &t);
        for l in 0..=depth {
            let direct = relative_entropy(&t, &r, &q, l).unwrap();
            prop_assert!(direct.max_abs_diff(&relative_entropy_chain(&t, &r, &q, l).unwrap()) <= 1e-12);
            prop_assert!(direct.min() >= -1e-15);
        }
    }

    #[test]
    fn g_expectation_is_time_consistent(seed in any::<u64>(), n in 2usize..6) {
        let t = ScenarioTree::binomial(n, 1.0).unwrap();
        let x = random_payoff(&mut rng(seed), &t, 0.5);
        let spec = RiskMeasureSpec::g_expectation(Generator::quartic_quadratic());
        for s in 0..=n {
            for l in 0..=s {
                prop_assert!(check_time_consistency(&spec, &t, &x, l, s).unwrap().gap <= 1e-12);
            }
        }
    }

    #[test]
    fn star_member_is_normalized_for_acceptable_anchor(seed in any::<u64>(), depth in 1usize..4) {
        let (mut g, t) = setup(seed, depth);
        let z = random_payoff(&mut g, &t, 2.0);
        let level = depth - 1;
        let z = z.sub(&lift(&t, &cond_ess_extrema(&t, &z, level, Extremum::Sup).unwrap()).unwrap());
        let v = member_eval(&EnvelopeMemberSpec::new(MemberKind::Star, z, level), &t, &RandomVariable::zeros(&t), level).unwrap();
        prop_assert!(v.values().iter().all(|a| a.abs() <= 1e-12));
    }
}
