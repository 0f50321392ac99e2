//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p dividend-suite --test acceptance`.

use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use dividend_core::barrier::BarrierSolution;
use dividend_core::model::{ClaimModel, ModelParams, PenaltyModel, PremiumModel};
use dividend_core::pipeline::optimal_barrier;
use dividend_core::scale::{classical_ruin_g, ClassicalScale, LinearKummerScale};
use dividend_core::tables::{table, TABLES};
use dividend_core::{
    barrier_solution_at, compute_g, compute_w, find_barrier, generator_residuals,
    simulate_two_sided, simulate_value, solve_scale, trace_path, verify_optimality, Extension,
    FlowSolver, SimulationConfig,
};

struct Outcome {
    pass: bool,
    detail: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            pass: true,
            detail: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.detail
            .push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn linear(mu: f64, lambda: f64, q: f64, penalty: PenaltyModel) -> ModelParams {
    ModelParams::new(
        PremiumModel::Linear {
            c: 1.0,
            epsilon: 0.02,
        },
        ClaimModel::Exponential { mu },
        penalty,
        lambda,
        q,
    )
    .unwrap()
}

fn solved(p: &ModelParams) -> BarrierSolution {
    optimal_barrier(p, None).expect("pipeline").1
}

fn all_instances() -> Vec<(String, ModelParams, BarrierSolution)> {
    TABLES
        .iter()
        .flat_map(|t| {
            t.cases().map(move |(v, _, p)| {
                let s = solved(&p);
                (format!("T{} {}={v}", t.number, t.sweep.name()), p, s)
            })
        })
        .collect()
}

fn reproduce(numbers: &[usize], out: &mut Outcome) {
    for n in numbers {
        let t = table(*n).unwrap();
        let start = Instant::now();
        for (v, reference, p) in t.cases() {
            let a = solved(&p).a_star;
            let ok = if reference == 0.0 {
                a == 0.0
            } else {
                (a - reference).abs() <= t.tolerance
            };
            out.check(
                ok,
                format!(
                    "T{n} {}={v}: a* = {a:.4}, reference {reference}, tolerance {}",
                    t.sweep.name(),
                    t.tolerance
                ),
            );
        }
        let secs = start.elapsed().as_secs_f64();
        if *n == 1 {
            out.check(
                secs < 60.0,
                format!("T1 wall time {secs:.2} s (limit 60 s)"),
            );
        }
    }
}

fn table_one() -> Outcome {
    let mut o = Outcome::new();
    reproduce(&[1], &mut o);
    o
}

fn table_two() -> Outcome {
    let mut o = Outcome::new();
    reproduce(&[2], &mut o);
    o
}

fn table_three() -> Outcome {
    let mut o = Outcome::new();
    reproduce(&[3], &mut o);
    o
}

fn tables_four_to_six() -> Outcome {
    let mut o = Outcome::new();
    reproduce(&[4, 5, 6], &mut o);
    o
}

fn classical_oracles() -> Outcome {
    let mut o = Outcome::new();
    let dx = 0.005;
    let p = ModelParams::new(
        PremiumModel::Constant { c: 1.0 },
        ClaimModel::Exponential { mu: 0.3 },
        PenaltyModel::Zero,
        0.1,
        0.05,
    )
    .unwrap();
    let w = compute_w(&p, dx, 40.0).unwrap();
    let exact = ClassicalScale::from_params(&p).unwrap();
    let err = w
        .xs()
        .zip(w.values())
        .filter(|(x, _)| *x <= 20.0 + 1e-9)
        .map(|(x, v)| ((v - exact.value(x)) / exact.value(x)).abs())
        .fold(0.0, f64::max);
    o.check(
        err <= 1e-5,
        format!("W constant premium: max rel error {err:.2e} on [0, 20] (limit 1e-5)"),
    );

    let p = ModelParams {
        q: 0.0,
        penalty: PenaltyModel::Constant { k: 1.0 },
        ..p
    };
    let g = compute_g(&p, dx, 200.0).unwrap();
    let err = g
        .xs()
        .zip(g.values())
        .map(|(x, v)| (v - classical_ruin_g(&p, x).unwrap()).abs())
        .fold(0.0, f64::max);
    o.check(
        err <= 1e-6,
        format!("G ruin probability: max abs error {err:.2e} on [0, 200] (limit 1e-6)"),
    );

    let p = linear(0.3, 0.1, 0.05, PenaltyModel::Zero);
    let w = compute_w(&p, dx, 60.0).unwrap();
    let exact = LinearKummerScale::new(&p).unwrap();
    let err = w
        .xs()
        .zip(w.values())
        .filter(|(x, _)| *x <= 30.0 + 1e-9)
        .map(|(x, v)| {
            let e = exact.value(x).unwrap();
            ((v - e) / e).abs()
        })
        .fold(0.0, f64::max);
    o.check(
        err <= 1e-4,
        format!("W linear premium vs Kummer form: max rel error {err:.2e} on [0, 30] (limit 1e-4)"),
    );
    o
}

fn scale_residuals() -> Outcome {
    let mut o = Outcome::new();
    for n in [1, 4] {
        let t = table(n).unwrap();
        for (v, _, p) in t.cases() {
            // the tables use w = 0, so G is also checked with w = -1
            for penalty in [PenaltyModel::Zero, PenaltyModel::Constant { k: 1.0 }] {
                let p = ModelParams {
                    penalty,
                    ..p.clone()
                };
                let s = solved(&p).scale;
                let rw = generator_residuals(&s.w, Extension::Zero, &p).unwrap();
                let rg = generator_residuals(&s.g, Extension::Penalty, &p).unwrap();
                let mw = rw.iter().fold(0.0f64, |m, r| m.max(r.abs()));
                let mg = rg.iter().fold(0.0f64, |m, r| m.max(r.abs()));
                let tw = 1e-6 * s.w.max_abs();
                let tg = 1e-6 * s.g.max_abs();
                let k = if p.penalty.is_zero() { "w=0" } else { "w=-1" };
                o.check(
                    mw <= tw && mg <= tg.max(f64::MIN_POSITIVE),
                    format!(
                        "T{n} {}={v} {k}: |(A-q)W| {mw:.1e} (limit {tw:.1e}), |(A-q)G| {mg:.1e} (limit {tg:.1e})",
                        t.sweep.name()
                    ),
                );
            }
        }
    }
    o
}

fn value_generator(instances: &[(String, ModelParams, BarrierSolution)]) -> Outcome {
    let mut o = Outcome::new();
    for (name, p, s) in instances {
        let r = verify_optimality(s, p).unwrap();
        o.check(
            r.necessary_sufficient_pass,
            format!(
                "{name}: a* = {:.4}, max (A-q)v above a* = {:.2e} (tolerance {:.2e})",
                s.a_star, r.max_residual_above, r.tolerance
            ),
        );
        if s.a_star > 0.0 {
            let low = barrier_solution_at(&s.scale, s.a_star / 2.0).unwrap();
            let r = verify_optimality(&low, p).unwrap();
            let positive = r
                .residual_profile
                .values()
                .iter()
                .filter(|x| **x > r.tolerance)
                .count();
            o.check(
                !r.necessary_sufficient_pass && positive > 0,
                format!(
                    "{name}: barrier a*/2 rejected, max residual {:.2e}, {positive} positive nodes",
                    r.max_residual_above
                ),
            );
        }
    }
    o
}

fn smooth_pasting(instances: &[(String, ModelParams, BarrierSolution)]) -> Outcome {
    let mut o = Outcome::new();
    for (name, _, s) in instances {
        let d = s.v.derivatives().unwrap();
        let min_slope =
            s.v.xs()
                .zip(d)
                .filter(|(x, _)| *x <= s.a_star)
                .map(|(_, d)| *d)
                .fold(f64::INFINITY, f64::min);
        o.check(
            s.smooth_pasting_residual.abs() <= 1e-3 && min_slope >= 1.0 - 1e-6,
            format!(
                "{name}: |v'(a*) - 1| = {:.2e}, min v' on [0, a*] = {min_slope:.8}",
                s.smooth_pasting_residual.abs()
            ),
        );
    }
    o
}

fn streams() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn monte_carlo_value() -> Outcome {
    let mut o = Outcome::new();
    let p = linear(0.3, 0.1, 0.05, PenaltyModel::Zero);
    let s = solved(&p);
    let a = s.a_star;
    let envelope = p.premium.rate(a) / p.q;
    for x in [0.0, a / 2.0, a, a + 5.0] {
        let analytic = s.value(x).unwrap();
        // e^{-qH} envelope <= 1e-6 v(x), so the bound is below 1e-4 v(x)
        let horizon = (1e6 * envelope / analytic).ln() / p.q;
        let cfg = SimulationConfig::new(100_000, horizon, 2024)
            .with_barrier(a)
            .with_streams(streams());
        let start = Instant::now();
        let est = simulate_value(&p, x, &cfg).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let z = (est.mean - analytic) / est.std_error;
        let rel_se = est.std_error / est.mean;
        let rel_bound = est.truncation_bound / est.mean;
        o.check(
            z.abs() <= 3.0 && rel_se < 0.01 && rel_bound < 1e-4 && secs < 60.0,
            format!(
                "x = {x:.4}: v = {analytic:.6}, MC {:.6} +- {:.6} (z = {z:.2}), se/mean {rel_se:.2e}, \
                 bound/mean {rel_bound:.1e}, {secs:.2} s",
                est.mean, est.std_error
            ),
        );
    }
    o
}

fn monte_carlo_two_sided() -> Outcome {
    let mut o = Outcome::new();
    let p = linear(0.3, 0.1, 0.05, PenaltyModel::Zero);
    let w = compute_w(&p, 0.005, 30.0).unwrap();
    for a in [2.0, 5.0, 10.0] {
        let wa = w.value_at(a).unwrap();
        for x in [0.0, a / 3.0, 2.0 * a / 3.0] {
            let wx = w.smooth_value_at(x).unwrap();
            let cfg = SimulationConfig::new(100_000, 300.0, 7).with_streams(streams());
            let est = simulate_two_sided(&p, x, a, &cfg).unwrap();
            let gap = est.mean * wa - wx;
            let band = 3.0 * est.std_error * wa;
            o.check(
                gap.abs() <= band,
                format!("a = {a}, x = {x:.3}: MC * W(a) - W(x) = {gap:.2e}, band {band:.2e}"),
            );
        }
    }
    o
}

fn order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

fn convergence() -> Outcome {
    let mut o = Outcome::new();
    let p = linear(0.3, 0.1, 0.05, PenaltyModel::Constant { k: 1.0 });
    let steps = [0.03, 0.015, 0.0075];
    let sols: Vec<_> = steps
        .iter()
        .map(|dx| solve_scale(&p, *dx, 60.0).unwrap())
        .collect();
    let stars: Vec<f64> = sols
        .iter()
        .map(|s| find_barrier(s).unwrap().a_star)
        .collect();
    // differences on the coarse nodes of [0, 30]
    let diff = |pick: &dyn Fn(usize) -> Vec<f64>, i: usize| -> f64 {
        let a = pick(i);
        let b = pick(i + 1);
        let coarse = sols[0].w.values().len();
        let ratio_a = 1usize << i;
        let ratio_b = ratio_a * 2;
        (0..coarse)
            .filter(|k| *k as f64 * steps[0] <= 30.0 + 1e-9)
            .map(|k| (a[k * ratio_a] - b[k * ratio_b]).abs())
            .fold(0.0, f64::max)
    };
    let w_of = |i: usize| sols[i].w.values().to_vec();
    let g_of = |i: usize| sols[i].g.values().to_vec();
    for (name, pick) in [("W", &w_of as &dyn Fn(usize) -> Vec<f64>), ("G", &g_of)] {
        let (d1, d2) = (diff(pick, 0), diff(pick, 1));
        let k = order(d1, d2);
        o.check(
            k >= 1.8,
            format!("{name}: max differences {d1:.2e}, {d2:.2e}, order {k:.2}"),
        );
    }
    let (d1, d2) = ((stars[0] - stars[1]).abs(), (stars[1] - stars[2]).abs());
    let k = order(d1, d2);
    o.check(
        k >= 1.8,
        format!(
            "a*: {:.8}, {:.8}, {:.8}, differences {d1:.2e}, {d2:.2e}, order {k:.2}",
            stars[0], stars[1], stars[2]
        ),
    );
    o
}

fn premiums() -> impl Strategy<Value = PremiumModel> {
    prop_oneof![
        (0.2f64..3.0).prop_map(|c| PremiumModel::Constant { c }),
        (0.2f64..3.0, 0.0f64..0.1).prop_map(|(c, epsilon)| PremiumModel::Linear { c, epsilon }),
        (0.2f64..3.0).prop_map(|c| PremiumModel::Rational { c }),
    ]
}

fn penalties() -> impl Strategy<Value = PenaltyModel> {
    prop_oneof![
        Just(PenaltyModel::Zero),
        (0.0f64..2.0).prop_map(|k| PenaltyModel::Constant { k }),
        (0.0f64..2.0, 0.0f64..1.0).prop_map(|(k, beta)| PenaltyModel::Linear { k, beta }),
    ]
}

/// Instances meeting the speed condition: a linear premium grows no faster
/// than the discount rate.
fn models() -> impl Strategy<Value = ModelParams> {
    (
        premiums(),
        0.0f64..1.0,
        0.2f64..2.0,
        penalties(),
        0.05f64..1.0,
        0.01f64..0.2,
    )
        .prop_map(|(premium, share, mu, penalty, lambda, q)| {
            let premium = match premium {
                PremiumModel::Linear { c, .. } => PremiumModel::Linear {
                    c,
                    epsilon: share * q,
                },
                other => other,
            };
            ModelParams::new(premium, ClaimModel::Exponential { mu }, penalty, lambda, q).unwrap()
        })
}

fn run_property<S: Strategy>(
    name: &str,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
    o: &mut Outcome,
) {
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    match runner.run(&strategy, test) {
        Ok(()) => o.check(true, format!("{name}: 1000 cases")),
        Err(e) => o.check(false, format!("{name}: {e}")),
    }
}

fn properties() -> Outcome {
    let mut o = Outcome::new();
    run_property(
        "flow semigroup",
        (premiums(), 0.0f64..50.0, 0.0f64..20.0, 0.0f64..20.0),
        |(premium, x, s, t)| {
            let f = FlowSolver::new(premium);
            let two = f.flow_forward(f.flow_forward(x, s).unwrap(), t).unwrap();
            let one = f.flow_forward(x, s + t).unwrap();
            prop_assert!(
                (two - one).abs() <= 1e-8 * one.max(1.0),
                "{} vs {}",
                two,
                one
            );
            Ok(())
        },
        &mut o,
    );
    run_property(
        "hit_time inversion",
        (premiums(), 0.0f64..50.0, 1e-3f64..60.0),
        |(premium, x, gap)| {
            let f = FlowSolver::new(premium);
            let t = f.hit_time(x, x + gap).unwrap();
            let back = f.flow_forward(x, t).unwrap();
            prop_assert!(
                (back - x - gap).abs() <= 1e-8 * (x + gap).max(1.0),
                "{} vs {}",
                back,
                x + gap
            );
            let s = f.hit_time(x, f.flow_forward(x, gap).unwrap()).unwrap();
            prop_assert!((s - gap).abs() <= 1e-8 * gap.max(1.0), "{} vs {}", s, gap);
            Ok(())
        },
        &mut o,
    );
    run_property(
        "simulator reproducibility",
        (
            models(),
            0.0f64..10.0,
            0.0f64..10.0,
            any::<u64>(),
            2u64..300,
            1usize..5,
        ),
        |(p, x, a, seed, paths, workers)| {
            let cfg = SimulationConfig::new(paths, 60.0 / p.q, seed).with_barrier(a);
            let first = simulate_value(&p, x, &cfg);
            let again = simulate_value(&p, x, &cfg.clone().with_streams(workers));
            prop_assert!(first.is_ok(), "{:?}", first);
            let (first, again) = (first.unwrap(), again.unwrap());
            prop_assert_eq!(first.mean.to_bits(), again.mean.to_bits());
            prop_assert_eq!(first.std_error.to_bits(), again.std_error.to_bits());
            prop_assert_eq!(first.to_json(), again.to_json());
            Ok(())
        },
        &mut o,
    );
    run_property(
        "admissibility",
        (
            models(),
            0.0f64..10.0,
            proptest::option::of(0.0f64..10.0),
            any::<u64>(),
            0u64..1000,
        ),
        |(p, x, barrier, seed, index)| {
            let mut cfg = SimulationConfig::new(2, 60.0 / p.q, seed);
            if let Some(a) = barrier {
                cfg = cfg.with_barrier(a);
            }
            let trace = trace_path(&p, x, index, &cfg).unwrap();
            let top = barrier.unwrap_or(f64::INFINITY);
            let n = trace.claims.len();
            for (i, c) in trace.claims.iter().enumerate() {
                prop_assert!(
                    c.before >= 0.0 && c.before <= top,
                    "surplus {} before claim {}",
                    c.before,
                    i
                );
                prop_assert!(c.after <= c.before);
                if i + 1 < n {
                    prop_assert!(c.after >= 0.0, "ruin at claim {} of {}", i, n);
                }
            }
            let ruined_by_claim = trace.claims.last().is_some_and(|c| c.after < 0.0);
            prop_assert_eq!(trace.ruined, ruined_by_claim);
            prop_assert!(trace.claims.windows(2).all(|w| w[1].paid >= w[0].paid));
            Ok(())
        },
        &mut o,
    );
    o
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() -> ExitCode {
    let start = Instant::now();
    let instances = all_instances();
    let criteria: Vec<(&str, Criterion)> = vec![
        (
            "table 1 (linear premium, q sweep) within 0.1, under 60 s",
            Box::new(table_one),
        ),
        (
            "table 2 (linear premium, mu sweep) within 0.15",
            Box::new(table_two),
        ),
        (
            "table 3 (linear premium, lambda sweep) within 0.1",
            Box::new(table_three),
        ),
        (
            "tables 4-6 (rational premium) within 0.15",
            Box::new(tables_four_to_six),
        ),
        (
            "oracle equivalence (classical W, ruin G, Kummer W)",
            Box::new(classical_oracles),
        ),
        (
            "(A-q)W and (A-q)G vanish on tables 1 and 4",
            Box::new(scale_residuals),
        ),
        (
            "(A-q)v <= 0 above a* on tables 1-6, halved barrier rejected",
            Box::new(|| value_generator(&instances)),
        ),
        (
            "smooth pasting and v' >= 1 below a*",
            Box::new(|| smooth_pasting(&instances)),
        ),
        (
            "Monte Carlo value at x in {0, a*/2, a*, a*+5}",
            Box::new(monte_carlo_value),
        ),
        (
            "Monte Carlo two-sided exit on a 3x3 lattice",
            Box::new(monte_carlo_two_sided),
        ),
        (
            "grid refinement order >= 1.8 for W, G, a*",
            Box::new(convergence),
        ),
        ("property suites at 1000 cases", Box::new(properties)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        println!("{} {name}", if o.pass { "PASS" } else { "FAIL" });
        for line in &o.detail {
            println!("       {line}");
        }
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
