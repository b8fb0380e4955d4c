//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and fails
//! if any criterion failed. Run with `--nocapture` to see the report.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use npdc_cli::{speedup_sweep, ExperimentConfig};
use npdc_core::analysis::{
    div_parallel, div_serial, gap_ratio, mean, rank_sum_test_with, simulate_divergence,
    speedup_model, DivergenceParams, RankSumMethod, SpeedupParams, Verdict,
};
use npdc_core::decomposition::differential_grouping_cost;
use npdc_core::npdc::{meta_update, npdc_iteration, Lane, MetaModel, OffspringSide};
use npdc_core::problems::true_interaction_groups;
use npdc_core::rng::{Draws, RngStream, StreamKind};
use npdc_core::search_kernel::update_sigma;
use npdc_core::*;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn problem(class: StructureClass, base: BaseFunction, d: usize, m: Option<usize>) -> ObjectiveProblem {
    make_problem(class, base, d, m, 1).unwrap()
}

fn npdc_errors(p: &ObjectiveProblem, budget: u64, seeds: u64, variant: Variant) -> Vec<f64> {
    (0..seeds)
        .map(|seed| {
            let mut cfg = NpdcConfig::new(budget, seed);
            cfg.options.variant = variant;
            run_npdc(p, &cfg).unwrap().final_error
        })
        .collect()
}

fn cc_errors(p: &ObjectiveProblem, grouping: GroupingStrategy, workflow: Workflow, budget: u64, seeds: u64) -> Vec<f64> {
    (0..seeds)
        .map(|seed| {
            let cfg = CcConfig {
                grouping,
                workflow,
                budget,
                seed,
                workers: 1,
            };
            run_cc(p, &cfg).unwrap().final_error
        })
        .collect()
}

const P_GRID: [f64; 3] = [0.5, 0.9, 0.99];
const M_GRID: [usize; 4] = [2, 3, 5, 10];

fn c1_divergence_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = RngStream::for_kind(2024, StreamKind::Analysis, 0, 0);
    let mut worst = 0.0f64;
    for p in P_GRID {
        for m in M_GRID {
            let params = DivergenceParams::new(p, m).unwrap();
            let (s, q) = simulate_divergence(params, 1_000_000, &mut rng).unwrap();
            worst = worst
                .max((s - div_serial(params)).abs())
                .max((q - div_parallel(params)).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= 0.005 && secs < 30.0,
        format!("max abs error {worst:.5} over 12 grid points, {secs:.1} s"),
    )
}

fn c2_gap_identity() -> Outcome {
    let mut worst = 0.0f64;
    let mut ordered = true;
    for p in P_GRID {
        for m in M_GRID {
            let params = DivergenceParams::new(p, m).unwrap();
            let expect = 1.0 + p.powi((m * (m - 1) / 2) as i32);
            worst = worst.max((gap_ratio(params).unwrap() - expect).abs());
            ordered &= div_parallel(params) >= div_serial(params);
        }
    }
    verdict(
        worst <= 1e-12 && ordered,
        format!("max identity error {worst:.2e}, parallel >= serial everywhere: {ordered}"),
    )
}

fn c3_serial_vs_parallel() -> Outcome {
    let start = Instant::now();
    let p = problem(StructureClass::FullySeparable, BaseFunction::Elliptic, 100, None);
    let serial = cc_errors(&p, GroupingStrategy::Natural, Workflow::Serial, 100_000, 20);
    let parallel = cc_errors(&p, GroupingStrategy::Natural, Workflow::Parallel, 100_000, 20);
    let (ms, mp) = (mean(&serial), mean(&parallel));
    let test = Verdict::classify(&serial, &parallel, 0.05).unwrap().1;
    let secs = start.elapsed().as_secs_f64();
    let non_inferior = ms <= 1.05 * mp;
    verdict(
        ms <= mp && (test.p_value < 0.05 || non_inferior) && secs < 300.0,
        format!(
            "serial mean {ms:.3e}, parallel mean {mp:.3e}, p = {:.3}, {secs:.1} s",
            test.p_value
        ),
    )
}

fn c4_separables() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for base in [BaseFunction::Sphere, BaseFunction::Elliptic] {
        let p = problem(StructureClass::FullySeparable, base, 100, None);
        let m = mean(&npdc_errors(&p, 200_000, 10, Variant::Standard));
        ok &= m < 1e-8;
        details.push(format!("{base} mean {m:.3e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(ok && secs < 120.0, format!("{}, {secs:.1} s", details.join(", ")))
}

fn c5_against_natural_grouping() -> Outcome {
    use BaseFunction::*;
    use StructureClass::*;
    let suite = [
        (FullySeparable, Elliptic, None),
        (FullySeparable, Rastrigin, None),
        (SingleGroup, Elliptic, Some(10)),
        (KGroup, Rosenbrock, Some(10)),
        (FullyNonseparable, Schwefel12, None),
        (FullyNonseparable, Rosenbrock, None),
    ];
    let mut good = 0;
    let mut details = Vec::new();
    for (class, base, m) in suite {
        let p = problem(class, base, 100, m);
        let a = npdc_errors(&p, 100_000, 20, Variant::Standard);
        let b = cc_errors(&p, GroupingStrategy::Natural, Workflow::Serial, 100_000, 20);
        let (v, test) = Verdict::classify(&a, &b, 0.05).unwrap();
        if v != Verdict::Loss {
            good += 1;
        }
        details.push(format!("{class}/{base} {v} (p {:.2e})", test.p_value));
    }
    verdict(good >= 4, format!("{good}/6 win or draw: {}", details.join("; ")))
}

fn c6_against_random_meta() -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for base in [BaseFunction::Sphere, BaseFunction::Elliptic] {
        let p = problem(StructureClass::FullySeparable, base, 100, None);
        let a = npdc_errors(&p, 100_000, 20, Variant::Standard);
        let b = npdc_errors(&p, 100_000, 20, Variant::RandomMeta);
        let (v, test) = Verdict::classify(&a, &b, 0.05).unwrap();
        ok &= v == Verdict::Win;
        details.push(format!(
            "{base} {v} (p {:.2e}, means {:.2e} vs {:.2e})",
            test.p_value,
            mean(&a),
            mean(&b)
        ));
    }
    verdict(ok, details.join("; "))
}

fn c7_determinism() -> Outcome {
    let start = Instant::now();
    let p = problem(StructureClass::KGroup, BaseFunction::Rosenbrock, 60, Some(6));
    let mut same = true;
    let fingerprint = |r: &RunRecord| {
        let mut bits: Vec<u64> = r.trajectory.iter().flat_map(|t| [t.evaluations, t.best_error.to_bits()]).collect();
        bits.extend(r.best_solution.iter().map(|x| x.to_bits()));
        bits.push(r.final_error.to_bits());
        bits
    };
    let npdc = |workers| {
        let cfg = NpdcConfig {
            lambda: 3,
            workers,
            ..NpdcConfig::new(20_000, 7)
        };
        fingerprint(&run_npdc(&p, &cfg).unwrap())
    };
    let cc = |workers, grouping| {
        let cfg = CcConfig {
            grouping,
            workflow: Workflow::Parallel,
            budget: 20_000,
            seed: 7,
            workers,
        };
        fingerprint(&run_cc(&p, &cfg).unwrap())
    };
    let base_npdc = npdc(1);
    let base_ng = cc(1, GroupingStrategy::Natural);
    let base_rg = cc(1, GroupingStrategy::Random { groups: 6 });
    for w in [2, 8] {
        same &= npdc(w) == base_npdc;
        same &= cc(w, GroupingStrategy::Natural) == base_ng;
        same &= cc(w, GroupingStrategy::Random { groups: 6 }) == base_rg;
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        same && secs < 60.0,
        format!("NPDC and parallel CC (NG, RG) bit-identical for 1/2/8 workers: {same}, {secs:.1} s"),
    )
}

fn c8_speedup() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let base = |subproblem_cost_us| ExperimentConfig {
        eval_cost_us: 1_000,
        subproblem_cost_us,
        reps: 2,
        out: dir.path().to_path_buf(),
        ..ExperimentConfig::new("fully-separable:sphere:1000:-:0", "npdc", 40)
    };

    let mut lines = Vec::new();
    let mut ok = true;
    let counts: Vec<usize> = [2, 4, 8].into_iter().filter(|&n| n <= cores).collect();
    let envelope = if counts.is_empty() {
        None
    } else {
        let mut all = vec![1];
        all.extend(&counts);
        let rows = speedup_sweep(&base(20), &all).unwrap();
        let mut pass = true;
        for r in rows.iter().filter(|r| r.workers > 1) {
            pass &= r.measured_speedup >= 0.6 * r.model_speedup;
            lines.push(format!(
                "N={} measured {:.2} model {:.2}",
                r.workers, r.measured_speedup, r.model_speedup
            ));
        }
        ok &= pass;
        Some(format!("fe {:.3}", rows[0].fe_fraction))
    };

    let rows = speedup_sweep(&base(1), &[1, 4]).unwrap();
    let fe = rows[0].fe_fraction;
    let r4 = &rows[1];
    let model4 = speedup_model(SpeedupParams::new(4, fe).unwrap());
    let flat = fe > 0.2 && r4.measured_speedup < 3.2 && model4 < 3.2;
    ok &= flat;
    let flat_line = format!(
        "flattening at fe {fe:.2}: N=4 measured {:.2}, model {model4:.2}",
        r4.measured_speedup
    );

    match envelope {
        None if ok => Outcome::Skip(format!(
            "60% envelope not testable with {cores} core(s); {flat_line} (ok)"
        )),
        None => Outcome::Fail(flat_line),
        Some(fe_small) => verdict(ok, format!("{fe_small}: {}; {flat_line}", lines.join(", "))),
    }
}

fn pairwise_accuracy(found: &Grouping, truth: &Grouping) -> f64 {
    let (a, b) = (found.membership(), truth.membership());
    let d = a.len();
    let mut agree = 0usize;
    let mut pairs = 0usize;
    for i in 0..d {
        for j in i + 1..d {
            pairs += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    agree as f64 / pairs as f64
}

fn c9_grouping_recovery() -> Outcome {
    let start = Instant::now();
    let cases = [
        (StructureClass::FullySeparable, 20, None),
        (StructureClass::SingleGroup, 20, Some(5)),
        (StructureClass::FullyNonseparable, 10, None),
    ];
    let mut instances = 0;
    let mut worst = 1.0f64;
    for (class, d, m) in cases {
        for base in BaseFunction::ALL.into_iter().filter(|b| class.supports(*b)) {
            for seed in 0..5 {
                let p = make_problem(class, base, d, m, seed).unwrap();
                let mut budget = Budget::new(differential_grouping_cost(d));
                let found = differential_grouping(&p, None, &mut budget).unwrap();
                worst = worst.min(pairwise_accuracy(&found, &true_interaction_groups(&p)));
                instances += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst == 1.0 && secs < 10.0,
        format!("minimum pairwise accuracy {worst} over {instances} instances, {secs:.2} s"),
    )
}

/// Permutation p-value by enumerating every split and counting doubled U
/// statistics as integers.
fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (n, m) = (a.len(), b.len());
    let u2 = |xs: &[f64], ys: &[f64]| -> i64 {
        let mut u = 0;
        for x in xs {
            for y in ys {
                u += match x.partial_cmp(y).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
        u
    };
    let center = (n * m) as i64;
    let observed = (u2(a, b) - center).abs();
    let (mut hits, mut all) = (0u64, 0u64);
    for mask in 0u32..(1 << pooled.len()) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, &v) in pooled.iter().enumerate() {
            if mask >> i & 1 == 1 {
                xs.push(v);
            } else {
                ys.push(v);
            }
        }
        all += 1;
        if (u2(&xs, &ys) - center).abs() >= observed {
            hits += 1;
        }
    }
    hits as f64 / all as f64
}

fn c10_statistics_oracle() -> Outcome {
    let mut rng = RngStream::for_kind(10, StreamKind::Analysis, 10, 0);
    let mut mismatches = 0;
    let mut instances = 0;
    // every (n, m) with n + m <= 10 appears; the rest of the 100 instances are random sizes
    let mut sizes: Vec<(usize, usize)> = (1..10).flat_map(|n| (1..=10 - n).map(move |m| (n, m))).collect();
    while sizes.len() < 100 {
        let n = 1 + (rng.uniform() * 9.0) as usize;
        let m = 1 + (rng.uniform() * (10 - n) as f64) as usize;
        sizes.push((n, m));
    }
    for (k, (n, m)) in sizes.into_iter().enumerate() {
        // alternate between tie-heavy and continuous samples
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len)
                .map(|_| {
                    let u = rng.uniform();
                    if k % 2 == 0 {
                        (u * 4.0).floor()
                    } else {
                        u
                    }
                })
                .collect()
        };
        let (a, b) = (draw(n), draw(m));
        let exact = rank_sum_test_with(&a, &b, RankSumMethod::Exact).unwrap().p_value;
        if exact != brute_force_p(&a, &b) {
            mismatches += 1;
        }
        instances += 1;
    }
    verdict(
        mismatches == 0,
        format!("{mismatches} mismatches over {instances} instances (n + m <= 10, exact equality)"),
    )
}

fn runner() -> TestRunner {
    let config = Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn c11_invariants() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, result: std::result::Result<(), String>| {
        if let Err(e) = result {
            failures.push(format!("{name}: {e}"));
        }
    };

    let clamp = runner()
        .run(
            &(2usize..5_000, prop::collection::vec((any::<bool>(), any::<bool>()), 0..200)),
            |(d, steps)| {
                let lo = MetaModel::floor(d);
                let mut model = MetaModel::INITIAL;
                for (smaller, theta) in steps {
                    let side = if smaller { OffspringSide::Smaller } else { OffspringSide::Larger };
                    model = meta_update(model, side, theta, d);
                    prop_assert!(model.ps >= lo && model.ps <= 1.0);
                    prop_assert!(model.pl >= lo && model.pl <= 1.0);
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string());
    check("PS/PL clamp", clamp);

    let fb = runner()
        .run(&(2usize..6, 1usize..8, any::<u64>()), |(d, iters, seed)| {
            let f = FnObjective::new(vec![-5.0; d], vec![5.0; d], |x: &[f64]| {
                x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v * v).sum()
            });
            let mut init = RngStream::new(seed, 0);
            let x0: Vec<f64> = (0..d).map(|_| init.uniform() * 10.0 - 5.0).collect();
            let mut lane = Lane::new(0, &x0, f.evaluate(&x0).unwrap(), Variant::Standard);
            let mut streams: Vec<RngStream> =
                (0..d).map(|j| RngStream::for_kind(seed, StreamKind::LaneVariable, 0, j as u64)).collect();
            let mut budget = Budget::new(iters as u64);
            let exec = Executor::sequential();
            let options = IterationOptions::standard();
            let mut last = lane.fb;
            for _ in 0..iters {
                npdc_iteration(&mut lane, &f, &mut budget, &mut streams, &exec, &options).unwrap();
                prop_assert!(lane.fb <= last);
                prop_assert_eq!(lane.fb, f.evaluate(&lane.bests()).unwrap());
                prop_assert!(lane.vars.iter().all(|v| v.sigma > 0.0 && v.sigma.is_finite()));
                last = lane.fb;
            }
            prop_assert!(budget.is_exhausted());
            Ok(())
        })
        .map_err(|e| e.to_string());
    check("FB monotone", fb);

    let sigma = runner()
        .run(
            &(1e-300f64..1e300, prop::collection::vec((any::<bool>(), any::<bool>()), 0..2_000)),
            |(start, steps)| {
                let mut s = start;
                for (moved, success) in steps {
                    s = update_sigma(s, moved, success);
                    prop_assert!(s > 0.0 && s.is_finite());
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string());
    check("sigma positive", sigma);

    let budget = runner()
        .run(&(0u64..50, prop::collection::vec(0u64..10, 0..30)), |(limit, charges)| {
            let mut b = Budget::new(limit);
            for c in charges {
                let before = b.used();
                match b.try_charge(c) {
                    Ok(()) => prop_assert_eq!(b.used(), before + c),
                    Err(_) => {
                        prop_assert!(before + c > limit);
                        prop_assert_eq!(b.used(), before);
                    }
                }
                prop_assert!(b.used() <= limit);
                prop_assert_eq!(b.used() + b.remaining(), limit);
            }
            Ok(())
        })
        .map_err(|e| e.to_string());
    check("budget charges", budget);

    let runs = runner()
        .run(
            &(1usize..4, 0u64..60, 1usize..4, 0u8..6, any::<u64>()),
            |(half, extra, lambda, algo, seed)| {
                let d = 2 * half;
                let f = FnObjective::new(vec![-3.0; d], vec![3.0; d], |x: &[f64]| {
                    x.windows(2).map(|w| (w[0] - w[1]).powi(2)).sum::<f64>() + x[0].abs()
                });
                let record = if algo < 2 {
                    let cfg = NpdcConfig {
                        lambda,
                        ..NpdcConfig::new(2 * lambda as u64 + extra, seed)
                    };
                    run_npdc(&f, &cfg).unwrap()
                } else {
                    let grouping = match algo {
                        2 => GroupingStrategy::Natural,
                        3 => GroupingStrategy::Random { groups: 2 },
                        _ => GroupingStrategy::Differential { epsilon: None },
                    };
                    let floor = match grouping {
                        GroupingStrategy::Differential { .. } => differential_grouping_cost(d) + d as u64,
                        _ => d as u64,
                    };
                    let workflow = if algo == 5 { Workflow::Parallel } else { Workflow::Serial };
                    let cfg = CcConfig {
                        grouping,
                        workflow,
                        budget: floor + extra,
                        seed,
                        workers: 1,
                    };
                    run_cc(&f, &cfg).unwrap()
                };
                prop_assert_eq!(record.consumed, record.budget);
                prop_assert!(record.trajectory.iter().all(|t| t.evaluations <= record.budget));
                Ok(())
            },
        )
        .map_err(|e| e.to_string());
    check("budget exactness", runs);

    let partition = runner()
        .run(&(1usize..30, 1usize..8, any::<u64>()), |(size, groups, seed)| {
            let d = size * groups;
            let mut rng = RngStream::new(seed, 1);
            let g = random_grouping(d, groups, rng.rng()).unwrap();
            prop_assert_eq!(g.len(), groups);
            prop_assert!(g.sizes().iter().all(|&s| s == size));
            let mut seen = vec![0u32; d];
            for group in g.groups() {
                for &i in group {
                    seen[i] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let membership = g.membership();
            for (k, group) in g.groups().iter().enumerate() {
                prop_assert!(group.iter().all(|&i| membership[i] == k));
            }
            prop_assert_eq!(Grouping::from_lines(&g.to_lines(), d).unwrap(), g.clone());
            prop_assert!(Grouping::new(g.groups().to_vec(), d).is_ok());
            if d > 1 {
                let mut broken = g.groups().to_vec();
                let first = broken[0][0];
                broken.last_mut().unwrap().push(first);
                prop_assert!(Grouping::new(broken, d).is_err());
                let mut missing = g.groups().to_vec();
                missing.iter_mut().find(|grp| grp.len() > 1).map(|grp| grp.pop());
                if missing.iter().map(Vec::len).sum::<usize>() < d {
                    prop_assert!(Grouping::new(missing, d).is_err());
                }
            }
            prop_assert_eq!(natural_grouping(d).len(), d);
            Ok(())
        })
        .map_err(|e| e.to_string());
    check("partition laws", partition);

    if failures.is_empty() {
        Outcome::Pass("6 properties x 10000 cases".into())
    } else {
        Outcome::Fail(failures.join("; "))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance_criteria() {
    let criteria: [Criterion; 11] = [
        ("divergence Monte-Carlo vs closed form", c1_divergence_oracle),
        ("gap ratio identity", c2_gap_identity),
        ("serial CC not worse than parallel CC", c3_serial_vs_parallel),
        ("NPDC solves separable problems", c4_separables),
        ("NPDC vs DC-NG win/draw count", c5_against_natural_grouping),
        ("NPDC vs NPDC-random", c6_against_random_meta),
        ("determinism across worker counts", c7_determinism),
        ("speed-up envelope", c8_speedup),
        ("differential grouping recovery", c9_grouping_recovery),
        ("rank-sum exact vs brute force", c10_statistics_oracle),
        ("invariant property suite", c11_invariants),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Outcome::Fail(format!("panicked: {msg}"))
            });
        let took = started.elapsed();
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Skip(d) => ("SKIP", d),
            Outcome::Fail(d) => {
                failed.push(n);
                ("FAIL", d)
            }
        };
        println!("{tag} {n} {name}: {detail} [{:.1?}]", round(took));
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

fn round(d: Duration) -> Duration {
    Duration::from_millis(d.as_millis() as u64)
}
