//! Acceptance gate: one test per shipped guarantee, each printing a single
//! pass/fail line (run with `--nocapture` to see them all).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use tailprod::lp::{
    certify_uniqueness, dual_info, enumerate_vertices, solve_primal, RationalMatrix, SolveStatus,
    Uniqueness,
};
use tailprod::marginals::MarginalModel;
use tailprod::rational::{rational_to_f64, Value};
use tailprod::tail::{
    analyze, default_positivize_epsilon, positivize, ProblemSpec, TailReport,
};
use tailprod::verify::{
    estimate_ratio, exact_prob, normalizer, slope_fit, SimulationConfig,
};

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn pareto(p: i64, q: i64) -> MarginalModel {
    MarginalModel::pareto(rat(p, q)).unwrap()
}

fn criterion(name: &str, body: impl FnOnce() -> Result<(), String>) {
    match body() {
        Ok(()) => println!("[acceptance] {name}: PASS"),
        Err(msg) => {
            println!("[acceptance] {name}: FAIL — {msg}");
            panic!("{name} failed: {msg}");
        }
    }
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn chain_spec() -> ProblemSpec {
    ProblemSpec {
        a: RationalMatrix::from_i64(&[
            vec![(1, 1), (-1, 2), (0, 1), (0, 1)],
            vec![(0, 1), (1, 1), (-1, 2), (0, 1)],
            vec![(0, 1), (0, 1), (1, 1), (-1, 2)],
        ]),
        c: vec![rat(1, 1); 3],
        marginals: vec![pareto(1, 1), pareto(1, 1), pareto(1, 1), pareto(2, 1)],
    }
}

fn breiman_spec() -> ProblemSpec {
    ProblemSpec {
        a: RationalMatrix::from_i64(&[vec![(1, 1), (1, 2)]]),
        c: vec![rat(1, 1)],
        marginals: vec![pareto(1, 1), pareto(2, 1)],
    }
}

fn pair_spec() -> ProblemSpec {
    ProblemSpec {
        a: RationalMatrix::from_i64(&[vec![(1, 1), (-1, 2)], vec![(0, 1), (1, 1)]]),
        c: vec![rat(1, 1), rat(1, 1)],
        marginals: vec![pareto(1, 1), pareto(1, 1)],
    }
}

#[test]
fn exact_reproduction_of_chain_instance() {
    criterion("exact-reproduction (three variants, zero tolerance)", || {
        // Variant 1: -1/2 chain with Pareto(2) fourth factor.
        let r = analyze(&chain_spec()).map_err(|e| e.to_string())?;
        check(
            r.kappa == vec![rat(7, 4), rat(3, 2), rat(1, 1), rat(0, 1)],
            format!("kappa = {:?}", r.kappa),
        )?;
        check(r.rv_index == rat(-17, 4), "rv_index != -17/4")?;
        check(r.beta[&3] == rat(-7, 8), "beta_4 != -7/8")?;
        check(r.coefficient() == rat(8, 21), "coefficient != 8/21")?;
        check(
            r.constant_at_c == Value::Exact(rat(128, 483)),
            "constant != 128/483",
        )?;

        // Variant 2: -1/4 chain.
        let quarter = ProblemSpec {
            a: RationalMatrix::from_i64(&[
                vec![(1, 1), (-1, 4), (0, 1), (0, 1)],
                vec![(0, 1), (1, 1), (-1, 4), (0, 1)],
                vec![(0, 1), (0, 1), (1, 1), (-1, 4)],
            ]),
            c: vec![rat(1, 1); 3],
            marginals: vec![pareto(1, 1), pareto(1, 1), pareto(1, 1), pareto(2, 1)],
        };
        let r = analyze(&quarter).map_err(|e| e.to_string())?;
        check(
            r.kappa == vec![rat(21, 16), rat(5, 4), rat(1, 1), rat(0, 1)],
            format!("quarter kappa = {:?}", r.kappa),
        )?;
        check(r.rv_index == rat(-57, 16), "quarter rv_index != -57/16")?;

        // Variant 3: last factor reparametrized, fourth column (0,0,1).
        let reparam = ProblemSpec {
            a: RationalMatrix::from_i64(&[
                vec![(1, 1), (-1, 2), (0, 1), (0, 1)],
                vec![(0, 1), (1, 1), (-1, 2), (0, 1)],
                vec![(0, 1), (0, 1), (1, 1), (1, 1)],
            ]),
            c: vec![rat(1, 1); 3],
            marginals: vec![pareto(1, 1), pareto(1, 1), pareto(2, 1), pareto(1, 1)],
        };
        let r = analyze(&reparam).map_err(|e| e.to_string())?;
        check(
            r.kappa == vec![rat(3, 2), rat(1, 1), rat(0, 1), rat(1, 1)],
            format!("reparam kappa = {:?}", r.kappa),
        )?;
        check(r.rv_index == rat(-7, 2), "reparam rv_index != -7/2")?;
        check(r.coefficient() == rat(2, 3), "reparam coefficient != 2/3")?;
        check(
            r.constant_at_c == Value::Exact(rat(16, 21)),
            "reparam constant != 16/21",
        )?;
        Ok(())
    });
}

/// Random matrices with numerators in -2..=2 and denominators in 1..=4,
/// keeping only instances the analyzer certifies (optimal, unique,
/// non-degenerate basic solution).
fn random_certified_instances(count: usize, seed: u64) -> Vec<(RationalMatrix, tailprod::lp::PrimalSolution)> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0u64;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 1_000_000, "certified instances too rare");
        let n = rng.gen_range(1..=3usize);
        let m = rng.gen_range(n..=5usize);
        let entries: Vec<Vec<BigRational>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| rat(rng.gen_range(-2..=2), rng.gen_range(1..=4)))
                    .collect()
            })
            .collect();
        let a = match RationalMatrix::new(entries) {
            Ok(a) => a,
            Err(_) => continue,
        };
        let sol = solve_primal(&a);
        if sol.status != SolveStatus::Optimal || !sol.is_nondegenerate {
            continue;
        }
        match certify_uniqueness(&a, &sol, 100_000) {
            Ok(rep) if matches!(rep.outcome, Uniqueness::Unique) => {}
            _ => continue,
        }
        out.push((a, sol));
    }
    out
}

#[test]
fn duality_suite_and_oracle_equivalence() {
    let instances = random_certified_instances(200, 20260823);
    criterion("duality-suite (200 random certified instances, exact)", || {
        let one = BigRational::one();
        for (a, sol) in &instances {
            let dual = dual_info(a, sol).map_err(|e| e.to_string())?;
            let sk: BigRational = sol.kappa.iter().fold(BigRational::zero(), |s, v| s + v);
            let sh: BigRational = dual.kappa_hat.iter().fold(BigRational::zero(), |s, v| s + v);
            check(sk == sh, "sum kappa != sum kappa_hat")?;
            let priced = a.vec_mul(&dual.kappa_hat);
            check(priced.iter().all(|v| *v <= one), "A^T kappa_hat > 1")?;
            let ax = a.mul_vec(&sol.kappa);
            check(ax.iter().all(|v| *v == one), "A kappa != 1")?;
            for j in 0..a.cols() {
                if sol.kappa[j].is_zero() {
                    check(
                        dual.reduced_costs[j].is_positive(),
                        "non-basic reduced cost not positive",
                    )?;
                    // beta_j = 1 - reduced cost < 1
                    check(
                        &one - &dual.reduced_costs[j] < one,
                        "beta_j >= 1 on a certified instance",
                    )?;
                }
            }
            check(
                dual.kappa_hat.iter().all(|v| v.is_positive()),
                "kappa_hat not strictly positive",
            )?;
        }
        Ok(())
    });
    criterion("oracle-equivalence (simplex vs full enumeration, exact)", || {
        for (a, sol) in &instances {
            let vertices = enumerate_vertices(a, 100_000).map_err(|e| e.to_string())?;
            let min = vertices
                .iter()
                .map(|v| v.objective.clone())
                .min()
                .ok_or("no feasible vertex for an optimal instance")?;
            check(min == sol.objective, "enumeration minimum != simplex objective")?;
        }
        Ok(())
    });
}

#[test]
fn breiman_verification() {
    criterion("breiman-verification (analytic / quadrature / Monte Carlo)", || {
        let spec = breiman_spec();
        let report = analyze(&spec).map_err(|e| e.to_string())?;
        check(
            report.constant_at_c == Value::Exact(rat(4, 3)),
            "constant != 4/3",
        )?;

        let q = exact_prob(&spec, 1e4, 1e-6).map_err(|e| e.to_string())?;
        let ratio_far = q.value / normalizer(&spec, &report, 1e4);
        check(
            (ratio_far - 4.0 / 3.0).abs() <= 0.01 * (4.0 / 3.0),
            format!("quadrature ratio at 1e4 is {ratio_far}, not within 1% of 4/3"),
        )?;

        let oracle_near = exact_prob(&spec, 100.0, 1e-6).map_err(|e| e.to_string())?;
        let oracle_ratio = oracle_near.value / normalizer(&spec, &report, 100.0);
        let cfg = SimulationConfig {
            x_grid: vec![100.0],
            samples_per_x: 10_000_000,
            seed: 42,
            chunks: 64,
        };
        let res = estimate_ratio(&spec, &report, &cfg).map_err(|e| e.to_string())?;
        let row = &res.rows[0];
        check(
            (row.ratio - oracle_ratio).abs() <= 4.0 * row.stderr,
            format!(
                "MC ratio {} vs oracle {} exceeds 4 stderr ({})",
                row.ratio, oracle_ratio, row.stderr
            ),
        )?;
        Ok(())
    });
}

#[test]
fn slope_check() {
    criterion("slope-check (quadrature curves vs -sum kappa)", || {
        let grid = [1e2, 1e3, 1e4, 1e5];
        let spec = breiman_spec();
        let curve: Result<Vec<(f64, f64)>, String> = grid
            .iter()
            .map(|&x| {
                exact_prob(&spec, x, 1e-6)
                    .map(|q| (x, q.value))
                    .map_err(|e| e.to_string())
            })
            .collect();
        let fit = slope_fit(&curve?, 1).map_err(|e| e.to_string())?;
        check(
            (fit.slope + 1.0).abs() <= 0.02,
            format!("breiman slope {} not in -1 +- 0.02", fit.slope),
        )?;

        let spec = pair_spec();
        let report = analyze(&spec).map_err(|e| e.to_string())?;
        let predicted = -rational_to_f64(&report.objective);
        let curve: Result<Vec<(f64, f64)>, String> = grid
            .iter()
            .map(|&x| {
                exact_prob(&spec, x, 1e-6)
                    .map(|q| (x, q.value))
                    .map_err(|e| e.to_string())
            })
            .collect();
        let fit = slope_fit(&curve?, 1).map_err(|e| e.to_string())?;
        check(
            (fit.slope - predicted).abs() <= 0.05,
            format!("pair slope {} not within 0.05 of {predicted}", fit.slope),
        )?;
        Ok(())
    });
}

#[test]
fn homogeneity_of_limit_constant() {
    criterion("homogeneity (limit_constant(lambda c) = lambda^(-sum kappa_hat) * limit_constant(c), exact, 100 draws)", || {
        let report = analyze(&chain_spec()).map_err(|e| e.to_string())?;
        homogeneity_draws(&report, 100, 99)
    });
}

fn homogeneity_draws(report: &TailReport, draws: usize, seed: u64) -> Result<(), String> {
    use num_integer::Integer;
    // lcm of the kappa_hat denominators: raising rationals to this power
    // keeps every c_i^{-kappa_hat_i} rational, so the identity stays exact.
    let lcm: BigInt = report
        .kappa_hat
        .iter()
        .fold(BigInt::one(), |l, k| l.lcm(k.denom()));
    let power = num_traits::ToPrimitive::to_i32(&lcm).ok_or("kappa_hat lcm too large")?;
    let sum_hat: BigRational = report
        .kappa_hat
        .iter()
        .fold(BigRational::zero(), |s, v| s + v);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let draw = |rng: &mut Xoshiro256PlusPlus| {
        let base = rat(rng.gen_range(1..=9), rng.gen_range(1..=5));
        base.pow(power)
    };
    for _ in 0..draws {
        let lambda = draw(&mut rng);
        let c: Vec<BigRational> = (0..report.kappa_hat.len())
            .map(|_| draw(&mut rng))
            .collect();
        let scaled_c: Vec<BigRational> = c.iter().map(|ci| ci * &lambda).collect();
        let base_val = match report.limit_constant(&c) {
            Value::Exact(v) => v,
            other => return Err(format!("base constant not exact: {other:?}")),
        };
        let scaled_val = match report.limit_constant(&scaled_c) {
            Value::Exact(v) => v,
            other => return Err(format!("scaled constant not exact: {other:?}")),
        };
        let factor = tailprod::rational::rational_pow(&lambda, &-sum_hat.clone())
            .ok_or("lambda^(-sum kappa_hat) not rational despite construction")?;
        if scaled_val != factor * base_val {
            return Err(format!("homogeneity violated at lambda = {lambda}"));
        }
    }
    Ok(())
}

#[test]
fn positivize_invariants() {
    criterion("positivize-invariants (exactness, positivity, sampled implication)", || {
        let chain = chain_spec();
        let mut cases: Vec<RationalMatrix> = vec![chain.a.clone()];
        for (a, _) in random_certified_instances(10, 7777) {
            cases.push(a);
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5150);
        for a in &cases {
            let sol = solve_primal(a);
            let dual = dual_info(a, &sol).map_err(|e| e.to_string())?;
            let eps = default_positivize_epsilon(a);
            let tilde =
                positivize(a, &sol.kappa, &dual.kappa_hat, &eps).map_err(|e| e.to_string())?;
            // (i) strict positivity on basic columns
            for j in 0..a.cols() {
                if sol.kappa[j].is_positive() {
                    for i in 0..a.rows() {
                        check(
                            tilde.entry(i, j).is_positive(),
                            format!("tilde entry ({i},{j}) not positive"),
                        )?;
                    }
                }
            }
            // (ii) exact A~ kappa = 1
            let ax = tilde.mul_vec(&sol.kappa);
            check(ax.iter().all(|v| v.is_one()), "A~ kappa != 1 exactly")?;
            // (iii) sampled implication: original exceedance implies
            // transformed exceedance, 10^4 points in (0, 10]^{m+1}.
            let af: Vec<Vec<f64>> = (0..a.rows())
                .map(|i| (0..a.cols()).map(|j| rational_to_f64(a.entry(i, j))).collect())
                .collect();
            let tf: Vec<Vec<f64>> = (0..a.rows())
                .map(|i| (0..a.cols()).map(|j| rational_to_f64(tilde.entry(i, j))).collect())
                .collect();
            for _ in 0..10_000 {
                let x: f64 = rng.gen_range(1e-9..=10.0f64);
                let ln_pts: Vec<f64> = (0..a.cols())
                    .map(|_| rng.gen_range(1e-9..=10.0f64).ln())
                    .collect();
                let lnx = x.ln();
                // Strict float margin keeps rounding at the boundary from
                // manufacturing a counterexample of the exact implication.
                let premise = af.iter().all(|row| {
                    row.iter().zip(&ln_pts).map(|(a, y)| a * y).sum::<f64>() > lnx + 1e-9
                });
                if premise {
                    let conclusion = tf.iter().all(|row| {
                        row.iter().zip(&ln_pts).map(|(a, y)| a * y).sum::<f64>() > lnx - 1e-9
                    });
                    check(conclusion, "implication counterexample found")?;
                }
            }
        }
        Ok(())
    });
}

#[test]
fn marginal_sampling_consistency() {
    criterion("marginal sample/survival consistency (1e-12)", || {
        let models = [
            pareto(1, 1),
            pareto(2, 1),
            pareto(3, 2),
            pareto(1, 3),
        ];
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(31337);
        for _ in 0..10_000 {
            let u: f64 = rng.gen_range(1e-12..1.0);
            for m in &models {
                let x = m.sample(u);
                let s = m.survival(x);
                check(
                    (s - u).abs() <= 1e-12 * u.max(1e-300),
                    format!("survival(sample({u})) = {s}"),
                )?;
            }
        }
        Ok(())
    });
}

#[test]
fn monte_carlo_determinism() {
    criterion("mc-determinism (byte-identical reruns)", || {
        let spec = breiman_spec();
        let report = analyze(&spec).map_err(|e| e.to_string())?;
        let cfg = SimulationConfig {
            x_grid: vec![10.0, 100.0, 1000.0],
            samples_per_x: 100_000,
            seed: 42,
            chunks: 64,
        };
        let a = estimate_ratio(&spec, &report, &cfg).map_err(|e| e.to_string())?;
        let b = estimate_ratio(&spec, &report, &cfg).map_err(|e| e.to_string())?;
        check(a.to_csv() == b.to_csv(), "CSV outputs differ between reruns")?;
        check(
            serde_json::to_string(&a).unwrap() == serde_json::to_string(&b).unwrap(),
            "JSON outputs differ between reruns",
        )?;
        Ok(())
    });
}
