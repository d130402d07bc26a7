//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::process::Command as Process;
use std::time::{Duration, Instant};

use rand::Rng;
use riskenv::dynamics::{consistency_report, find_inconsistency};
use riskenv::envelope::{dual_check, member_eval, member_minimizer, verify_attainment, CheckStatus, EnvelopeMemberSpec, MemberKind};
use riskenv::gexp::{
    convergence_study, default_grids, entropic_maximizer, find_star_violation, g_risk, maxmin_dp, solve_bsde, variational_gap, ComparisonStatus,
    Generator, GeneratorSpec, MaxminMode,
};
use riskenv::measures::{check_axioms, Axiom, AxiomStatus, FalsifierConfig, RiskMeasureSpec, Utility};
use riskenv::sampling::{random_equivalent_measure, random_payoff, random_profile, random_tree, rng};
use riskenv::space::{cond_ess_extrema, lift, Extremum, FunctionalParams, PayoffSpec, RandomVariable, ScenarioTree};

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(elapsed <= Duration::from_secs(limit_s), format!("took {elapsed:.1?}, limit {limit_s} s"))
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn envelope_attainment() -> Verdict {
    let start = Instant::now();
    let sources = [
        RiskMeasureSpec::linear(),
        RiskMeasureSpec::WorstCase,
        RiskMeasureSpec::entropic(1.0),
        RiskMeasureSpec::conditional_var(0.3),
        RiskMeasureSpec::utility_shortfall(Utility::exponential(1.0)),
        RiskMeasureSpec::g_expectation(Generator::quartic_quadratic()),
    ];
    let mut g = rng(101);
    let mut runs = 0;
    let mut worst_gap: f64 = 0.0;
    for spec in &sources {
        for trial in 0..4 {
            let depth = 3 + trial % 3;
            let tree = match spec {
                RiskMeasureSpec::GExpectation { .. } => ScenarioTree::binomial(depth, 1.0).map_err(e)?,
                _ => random_tree(&mut g, depth, 2),
            };
            let scale = if matches!(spec, RiskMeasureSpec::GExpectation { .. }) { 0.3 } else { 2.0 };
            let x = random_payoff(&mut g, &tree, scale);
            for t in 0..=2 {
                for kind in [MemberKind::Monetary, MemberKind::Star] {
                    let r = verify_attainment(spec, kind, &tree, &x, t, 50, 7 + trial as u64).map_err(e)?;
                    ensure(r.anchors_tested == 50, format!("{}: only {} anchors tested", spec.name(), r.anchors_tested))?;
                    ensure(
                        r.status == CheckStatus::Pass && r.attainment_gap <= 1e-9,
                        format!("{} {kind:?} t={t}: {:?} gap {:e} witness {:?}", spec.name(), r.status, r.attainment_gap, r.witness),
                    )?;
                    worst_gap = worst_gap.max(r.attainment_gap);
                    runs += 1;
                }
            }
        }
    }
    within(start.elapsed(), 60)?;
    Ok(format!("{runs} runs, max attainment gap {worst_gap:.2e}, {:.1?}", start.elapsed()))
}

fn penalty_duality() -> Verdict {
    let start = Instant::now();
    let mut g = rng(202);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let depth = 1 + i % 6;
        let tree = if i % 2 == 0 { ScenarioTree::binomial(depth, 1.0).map_err(e)? } else { random_tree(&mut g, depth, 2) };
        let z = random_payoff(&mut g, &tree, 2.0);
        let x = random_payoff(&mut g, &tree, 2.0);
        let t = g.random_range(0..depth);
        let primal = member_eval(&EnvelopeMemberSpec::new(MemberKind::Monetary, z.clone(), t), &tree, &x, t).map_err(e)?;
        let r = dual_check(&tree, &z, &x, t, 10, i as u64).map_err(e)?;
        ensure(r.coverage == 1.0, format!("pair {i}: vertex coverage {}", r.coverage))?;
        let gap = primal.max_abs_diff(&r.dual);
        ensure(r.status == CheckStatus::Pass && gap <= 1e-12, format!("pair {i}: gap {gap:e}"))?;
        worst = worst.max(gap);
    }
    within(start.elapsed(), 30)?;
    Ok(format!("100 pairs, max gap {worst:.2e}, {:.1?}", start.elapsed()))
}

fn grid_min(z: &[f64], x: &[f64], hi: f64, step: f64) -> f64 {
    let n = (hi / step).round() as usize;
    (0..=n)
        .map(|k| {
            let a = k as f64 * step;
            z.iter().zip(x).map(|(zv, xv)| a * zv - xv).fold(f64::NEG_INFINITY, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

fn star_cone_members() -> Verdict {
    let mut g = rng(303);
    let mut worst: f64 = 0.0;
    let mut cones = 0;
    for i in 0..200 {
        let k = g.random_range(2..12);
        let z: Vec<f64> = (0..k).map(|_| g.random_range(-2.0..2.0)).collect();
        let x: Vec<f64> = (0..k).map(|_| g.random_range(-2.0..2.0)).collect();
        let (_, star) = member_minimizer(MemberKind::Star, &z, &x).ok_or("star minimizer missing")?;
        let oracle = grid_min(&z, &x, 1.0, 1e-4);
        ensure(star <= oracle + 1e-12 && oracle - star <= 1e-3, format!("star instance {i}: exact {star}, grid {oracle}"))?;
        worst = worst.max(oracle - star);
        if let Some((a, cone)) = member_minimizer(MemberKind::Cone, &z, &x) {
            let hi = (2.0 * a).max(4.0);
            let oracle = grid_min(&z, &x, hi, 2e-4);
            ensure(cone <= oracle + 1e-12 && oracle - cone <= 1e-3, format!("cone instance {i}: exact {cone}, grid {oracle}"))?;
            worst = worst.max(oracle - cone);
            cones += 1;
        } else {
            ensure(z.iter().all(|&v| v < 0.0), format!("cone instance {i}: no minimizer with a non-negative anchor entry"))?;
        }
    }
    let tree = random_tree(&mut g, 3, 3);
    let z = random_payoff(&mut g, &tree, 2.0);
    let z = z.sub(&lift(&tree, &cond_ess_extrema(&tree, &z, 1, Extremum::Sup).map_err(e)?).map_err(e)?);
    let z = z.add(&RandomVariable::constant(&tree, 0.25));
    let member = RiskMeasureSpec::EnvelopeMember(EnvelopeMemberSpec::new(MemberKind::Star, z, 1));
    let rep = check_axioms(&member, &tree, &[Axiom::A3, Axiom::A4, Axiom::A6], &FalsifierConfig::new(1000, 3));
    ensure(rep.all_passed(), format!("star member falsifier: {:?}", rep.outcomes.iter().map(|o| (o.axiom, o.status)).collect::<Vec<_>>()))?;
    Ok(format!("200 instances ({cones} cones), max grid excess {worst:.2e}, star member passes A3/A4/A6"))
}

fn g_expectation_identities() -> Verdict {
    let start = Instant::now();
    let mut g = rng(404);
    // (i)
    let mut worst_i: f64 = 0.0;
    for n in 1..=10 {
        let tree = ScenarioTree::binomial(n, 1.0).map_err(e)?;
        let kappa = 1.0 / (tree.dt().sqrt() * 2.0);
        let xi = random_payoff(&mut g, &tree, 2.0);
        let sol = solve_bsde(&tree, &Generator::abs(kappa), &xi).map_err(e)?;
        for t in 0..=n {
            let mm = maxmin_dp(&tree, kappa, &xi, t, MaxminMode::Sup).map_err(e)?;
            worst_i = worst_i.max(mm.max_abs_diff(&sol.y_at(t)));
        }
    }
    ensure(worst_i <= 1e-12, format!("(i) max gap {worst_i:e}"))?;
    // (ii)
    let mut worst_ii: f64 = 0.0;
    let tree = ScenarioTree::binomial(6, 1.0).map_err(e)?;
    for gen in [Generator::abs(0.5), Generator::asymmetric(0.2, 0.6), Generator::quartic_quadratic()] {
        for _ in 0..20 {
            let t = g.random_range(0..=6);
            let zero = g_risk(&gen, &tree, &RandomVariable::zeros(&tree), t).map_err(e)?;
            worst_ii = zero.values().iter().fold(worst_ii, |m, v| m.max(v.abs()));
            let xi = random_payoff(&mut g, &tree, 0.3);
            let m = random_profile(&mut g, &tree, t, -1.0, 1.0);
            let shifted = g_risk(&gen, &tree, &xi.add_profile(&tree, &m), t).map_err(e)?;
            let base = g_risk(&gen, &tree, &xi, t).map_err(e)?;
            worst_ii = worst_ii.max(shifted.max_abs_diff(&base.zip_with(&m, |b, mv| b - mv)));
        }
    }
    ensure(worst_ii <= 1e-12, format!("(ii) max error {worst_ii:e}"))?;
    // (iii)
    let mut violations = 0;
    let mut unverified = 0;
    for gen in [Generator::quartic_quadratic(), Generator::asymmetric(0.2, 0.6)] {
        let mut sg = rng(505);
        for s in 0..1000 {
            let tree = ScenarioTree::binomial(1 + s % 6, 1.0).map_err(e)?;
            let t = sg.random_range(0..tree.depth());
            let xi = random_payoff(&mut sg, &tree, 0.1);
            let alpha = random_profile(&mut sg, &tree, t, 1.0, 3.0);
            let scaled = solve_bsde(&tree, &gen, &xi.mul_profile(&tree, &alpha).neg()).map_err(e)?;
            let base = solve_bsde(&tree, &gen, &xi.neg()).map_err(e)?;
            if scaled.comparison != ComparisonStatus::Verified || base.comparison != ComparisonStatus::Verified {
                unverified += 1;
            }
            let (lhs, rhs) = (scaled.y_at(t), base.y_at(t));
            for ((l, r), a) in lhs.values().iter().zip(rhs.values()).zip(alpha.values()) {
                if a * r - l > 1e-12 * (1.0 + l.abs()) {
                    violations += 1;
                }
            }
        }
    }
    ensure(unverified == 0, format!("(iii) {unverified} samples outside the verified comparison regime"))?;
    ensure(violations == 0, format!("(iii) {violations} star-shapedness violations"))?;
    // (iv)
    let (_, z, a) = default_grids();
    let sat = Generator::new(GeneratorSpec::Saturating { kappa: 1.0, cap: 0.5 });
    let w = find_star_violation(&sat, &z, &a, 0.01).map_err(e)?.ok_or("(iv) no witness for the saturating driver")?;
    within(start.elapsed(), 120)?;
    Ok(format!(
        "(i) {worst_i:.2e} (ii) {worst_ii:.2e} (iii) 0 of 2000 samples violate (iv) saturating witness z={} alpha={} margin {:.2e}",
        w.z, w.alpha, w.margin
    ))
}

fn entropic_convergence() -> Verdict {
    let start = Instant::now();
    let payoff = PayoffSpec::terminal_sum(FunctionalParams::default());
    let table = convergence_study(&Generator::zero(), &payoff, &[4, 8, 16, 32], 1.0, Some(1.0)).map_err(e)?;
    let errs: Vec<f64> = table.rows.iter().map(|r| r.abs_error).collect();
    let ratio = table.min_ratio().ok_or("no ratios")?;
    ensure(table.strictly_decreasing() && ratio >= 1.3, format!("errors {errs:?}, min ratio {ratio}"))?;
    let mut g = rng(606);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let tree = random_tree(&mut g, 3, 3);
        let q = random_equivalent_measure(&mut g, &tree);
        let xi = random_payoff(&mut g, &tree, 2.0);
        let gamma = g.random_range(0.2..3.0);
        let r = entropic_maximizer(&tree, &q, &xi, gamma).map_err(e)?;
        for t in 0..=3 {
            let gap = variational_gap(&tree, &q, &r, &xi, gamma, t).map_err(e)?;
            worst = worst.max(gap.values().iter().fold(0.0, |m, v| m.max(v.abs())));
        }
    }
    ensure(worst <= 1e-9, format!("maximizer gap {worst:e}"))?;
    within(start.elapsed(), 60)?;
    Ok(format!("errors {:?}, min ratio {ratio:.3}, maximizer gap {worst:.2e}", errs.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()))
}

fn time_consistency() -> Verdict {
    let mut g = rng(707);
    let mut worst: f64 = 0.0;
    for gen in [Generator::abs(0.4), Generator::quartic_quadratic()] {
        for n in [2, 4, 6] {
            let tree = ScenarioTree::binomial(n, 1.0).map_err(e)?;
            let xs: Vec<_> = (0..100).map(|_| random_payoff(&mut g, &tree, 0.5)).collect();
            let r = consistency_report(&RiskMeasureSpec::g_expectation(gen.clone()), &tree, &xs, 1e-12).map_err(e)?;
            ensure(r.consistent, format!("{:?} N={n}: gap {:e}", gen.spec, r.max_gap))?;
            worst = worst.max(r.max_gap);
        }
    }
    let tree = ScenarioTree::binomial(2, 1.0).map_err(e)?;
    let w = find_inconsistency(&RiskMeasureSpec::conditional_var(0.3), &tree, &[-2.0, -1.0, 0.0, 1.0, 2.0], 0, 1, 1e-6)
        .map_err(e)?
        .ok_or("no VaR witness on the 2-period tree")?;
    ensure(w.entry.gap > 1e-6, "VaR witness gap too small")?;
    Ok(format!("g-expectation max gap {worst:.2e}; VaR witness {:?} gap {}", w.leaf_values, w.entry.gap))
}

fn axiom_calibration() -> Verdict {
    let mut g = rng(808);
    let tree = random_tree(&mut g, 3, 3);
    let cfg = FalsifierConfig::new(1000, 42);
    let run = |spec: &RiskMeasureSpec, which: &[Axiom]| check_axioms(spec, &tree, which, &cfg);
    let entropic = run(&RiskMeasureSpec::entropic(1.0), &[Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A4]);
    ensure(entropic.all_passed(), "entropic fails one of A1..A4")?;
    let var_axioms = [Axiom::A1, Axiom::A2, Axiom::A4, Axiom::A5];
    let var = run(&RiskMeasureSpec::conditional_var(0.3), &var_axioms);
    ensure(var.passed(Axiom::A1) && var.passed(Axiom::A2) && var.passed(Axiom::A5), "VaR fails one of A1/A2/A5")?;
    let a4 = var.outcome(Axiom::A4).ok_or("no A4 outcome")?;
    ensure(a4.status == AxiomStatus::Fail && a4.witness.is_some(), "VaR A4 failure without witness")?;
    let inner = RiskMeasureSpec::Envelope { members: vec![RiskMeasureSpec::entropic(1.0), RiskMeasureSpec::entropic(2.0)] };
    let shifted = RiskMeasureSpec::Shifted { inner: Box::new(inner), z: RandomVariable::zeros(&tree) };
    let star = run(&shifted, &[Axiom::A6]);
    ensure(star.passed(Axiom::A6), "shifted envelope fails A6")?;
    let again = [
        run(&RiskMeasureSpec::entropic(1.0), &[Axiom::A1, Axiom::A2, Axiom::A3, Axiom::A4]),
        run(&RiskMeasureSpec::conditional_var(0.3), &var_axioms),
        run(&shifted, &[Axiom::A6]),
    ];
    let json = |r: &_| serde_json::to_string(r).expect("serializable");
    ensure(
        [&entropic, &var, &star].iter().zip(&again).all(|(a, b)| json(*a) == json(b)),
        "reports differ between identical runs",
    )?;
    Ok(format!("entropic A1-A4 pass, VaR A4 witness margin {:.3}, shifted envelope A6 pass, reports reproducible", a4.margin))
}

fn cli_selftest() -> Verdict {
    let bin = env!("CARGO_BIN_EXE_riskenv");
    let dir = tempfile::tempdir().map_err(e)?;
    let mut outputs = Vec::new();
    for (i, flag) in [["--selftest"], ["selftest"]].iter().enumerate() {
        let out = dir.path().join(format!("selftest{i}.json"));
        let status = Process::new(bin).args(flag).args(["--seed", "11", "--out"]).arg(&out).output().map_err(e)?;
        ensure(status.status.code() == Some(0), format!("selftest exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)))?;
        outputs.push(std::fs::read(&out).map_err(e)?);
    }
    ensure(outputs[0] == outputs[1], "selftest reports differ for the same seed")?;
    let report: serde_json::Value = serde_json::from_slice(&outputs[0]).map_err(e)?;
    let cases = report["checks"].as_array().map_or(0, |c| c.len());
    ensure(report["passed"] == true && cases == riskenv::selftest::case_count(), "selftest report incomplete")?;

    let model = dir.path().join("model.json");
    std::fs::write(
        &model,
        r#"{"tree": {"binomial": {"steps": 3, "horizon": 1.0}},
            "payoffs": {"x": {"leaf_values": [-1.0, 0.5, 2.0, -0.25, 1.0, 0.0, -2.0, 0.75]}},
            "measures": {"ent": {"type": "entropic", "gamma": 1.0}, "lin": {"type": "linear"}}}"#,
    )
    .map_err(e)?;
    let mut reports = Vec::new();
    for cmd in ["axioms", "axioms", "envelope", "envelope"] {
        let mut p = Process::new(bin);
        p.args([cmd, "--seed", "5", "--budget", "200", "--model"]).arg(&model);
        if cmd == "axioms" {
            p.args(["--axioms", "A1,A2,A3,A4"]);
        }
        let out = p.output().map_err(e)?;
        ensure(out.status.code() == Some(0), format!("{cmd} exit {:?}", out.status.code()))?;
        reports.push(out.stdout);
    }
    ensure(reports[0] == reports[1] && reports[2] == reports[3], "model reports differ for the same seed")?;
    Ok(format!("{cases} examples pass, byte-identical reports across runs"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("envelope attainment", envelope_attainment),
        ("penalty duality", penalty_duality),
        ("star and cone members", star_cone_members),
        ("g-expectation identities", g_expectation_identities),
        ("entropic convergence", entropic_convergence),
        ("time consistency", time_consistency),
        ("axiom falsifier calibration", axiom_calibration),
        ("cli selftest and reproducibility", cli_selftest),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of 8 criteria pass", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
