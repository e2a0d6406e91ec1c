//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use lifteval::bench::{measure, sample_queries, BenchRow};
use lifteval::model::sequential_min;
use lifteval::pipeline::{CompileOptions, MergeDepth};
use lifteval::{
    compile, evaluate, example_1d, generate, lift_point, overlaps, run_bench, BenchConfig,
    CompiledEvaluator, GeneratorSpec, PartitionIndex, Polyhedron, PwqSolution, QuadraticFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn analytic(x: f64) -> f64 {
    if x.abs() <= 2.0 {
        (x * x + 1.0).min(2.0 * x * x)
    } else {
        2.0 * x * x
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let opts = CompileOptions {
        depth: MergeDepth::Full,
        ..Default::default()
    };
    let (e, _) = compile(&example_1d(), &opts).map_err(|e| e.to_string())?;
    check(e.n_trees() == 1, || format!("n_t = {}", e.n_trees()))?;
    let mut max_err: f64 = 0.0;
    for k in 0..1000 {
        let x = -3.0 + 6.0 * k as f64 / 999.0;
        let r = evaluate(&e, &[x])
            .map_err(|e| e.to_string())?
            .ok_or_else(|| format!("x = {x} not covered"))?;
        max_err = max_err.max((r.value - analytic(x)).abs());
        // 2x² wins inside |x| < 1 and outside |x| > 2, x² + 1 in between.
        let a = x.abs();
        let expected = if a < 1.0 - 1e-6 || a > 2.0 + 1e-6 {
            Some(1)
        } else if a > 1.0 + 1e-6 && a < 2.0 - 1e-6 {
            Some(0)
        } else {
            None
        };
        if let Some(o) = expected {
            check(e.provenance[r.region] == o, || format!("wrong piece at x = {x}"))?;
        }
    }
    let elapsed = start.elapsed();
    check(max_err <= 1e-8, || format!("max error {max_err:e}"))?;
    check(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("n_t = 1, max error {max_err:.1e}, {elapsed:.2?}"))
}

/// Random polytope around a random centre: a box plus a few oblique cuts.
fn random_region(rng: &mut ChaCha8Rng, n: usize) -> Polyhedron {
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let lo: Vec<f64> = c.iter().map(|v| v - rng.gen_range(0.2..1.0)).collect();
    let hi: Vec<f64> = c.iter().map(|v| v + rng.gen_range(0.2..1.0)).collect();
    let mut p = Polyhedron::from_box(&lo, &hi);
    for _ in 0..2 {
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = a.iter().zip(&c).map(|(x, y)| x * y).sum::<f64>() + rng.gen_range(0.1..0.6);
        p.push_row(&a, b);
    }
    p
}

fn random_quadratic(rng: &mut ChaCha8Rng, n: usize) -> QuadraticFunction {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-2.0..2.0);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    let b = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    QuadraticFunction::new(&a, b, rng.gen_range(-2.0..2.0)).expect("square matrix")
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0usize;
    for inst in 0..100 {
        let n = 1 + inst % 5;
        let count = rng.gen_range(3..9);
        let regions: Vec<Polyhedron> = (0..count).map(|_| random_region(&mut rng, n)).collect();
        let functions: Vec<QuadraticFunction> =
            (0..count).map(|_| random_quadratic(&mut rng, n)).collect();
        let s = PwqSolution::new(n, regions, functions, PartitionIndex::single(count), None)
            .map_err(|e| e.to_string())?;
        let lifted = s.lift();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.6..1.6)).collect();
            let y = lift_point(&x);
            for i in 0..count {
                // Index sets agree.
                let inside = s.regions()[i].contains(&x);
                check(inside == lifted.regions[i].contains(&y), || {
                    format!("instance {inst}: membership of region {i} differs at {x:?}")
                })?;
                // Values agree.
                let (v, w) = (s.functions()[i].eval(&x), lifted.functions[i].eval(&y));
                check(close(v, w), || format!("instance {inst}: J_{i} {v} vs {w} at {x:?}"))?;
            }
            // Composite: the sequential minimum is preserved.
            match (s.evaluate_sequential(&x), lifted.evaluate_sequential(&y)) {
                (None, None) => {}
                (Some(a), Some(b)) => check(a.index == b.index && close(a.value, b.value), || {
                    format!("instance {inst}: minimum differs at {x:?}")
                })?,
                _ => return Err(format!("instance {inst}: coverage differs at {x:?}")),
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!("100 instances, {checked} points, {elapsed:.2?}"))
}

/// Sweep over every pairwise depth down to one partition, then full merge.
fn sweep(n_part: usize) -> Vec<MergeDepth> {
    let mut out = vec![MergeDepth::Sweeps(0)];
    let (mut parts, mut k) = (n_part, 0);
    while parts > 1 {
        parts = parts.div_ceil(2);
        k += 1;
        out.push(MergeDepth::Sweeps(k));
    }
    out.push(MergeDepth::Full);
    out
}

struct Compiled {
    label: String,
    depth: MergeDepth,
    evaluator: CompiledEvaluator,
    row: BenchRow,
}

struct Instance {
    label: String,
    spec: GeneratorSpec,
    solution: PwqSolution,
    runs: Vec<Compiled>,
}

fn corpus_spec(n: usize, n_part: usize) -> GeneratorSpec {
    GeneratorSpec {
        n,
        n_part,
        grid: if n == 2 { 3 } else { 2 },
        shift: 0.5,
        seed: 11 + n_part as u64,
        ..Default::default()
    }
}

fn trend_spec(n_part: usize) -> GeneratorSpec {
    GeneratorSpec {
        n: 1,
        n_part,
        grid: 8,
        shift: 0.9,
        seed: 1,
        ..Default::default()
    }
}

/// Compiles `spec` at every depth of its sweep and verifies `queries` points
/// against the sequential oracle (any mismatch beyond 1e-8 is an error).
fn run_instance(label: &str, spec: GeneratorSpec, queries: usize) -> Result<Instance, String> {
    let s = generate(&spec).map_err(|e| e.to_string())?;
    let points = sample_queries(&s, queries, 5).map_err(|e| e.to_string())?;
    let mut runs = Vec::new();
    for depth in sweep(spec.n_part) {
        let opts = CompileOptions {
            depth,
            ..Default::default()
        };
        let (e, _) = compile(&s, &opts).map_err(|e| format!("{label} n_m={depth}: {e}"))?;
        let row = measure(&s, &e, depth, &points).map_err(|e| format!("{label} n_m={depth}: {e}"))?;
        runs.push(Compiled {
            label: label.to_string(),
            depth,
            evaluator: e,
            row,
        });
    }
    Ok(Instance {
        label: label.to_string(),
        spec,
        solution: s,
        runs,
    })
}

fn criterion_3(corpus: &Result<Vec<Instance>, String>, elapsed: Duration) -> Outcome {
    let corpus = corpus.as_ref().map_err(Clone::clone)?;
    let configs: usize = corpus.iter().map(|i| i.runs.len()).sum();
    check(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} instances, {configs} configurations, 10⁴ queries each, {elapsed:.1?}",
        corpus.len()
    ))
}

/// Pairs of regions sharing a label whose interiors intersect.
fn overlapping_pairs(e: &CompiledEvaluator) -> Result<usize, String> {
    let n = e.n;
    let boxes: Vec<Vec<(f64, f64)>> = e
        .regions
        .iter()
        .map(|p| (0..n).map(|c| p.coordinate_bounds(c)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut bad = 0;
    for k in 1..=e.partition.n_parts() {
        let members = e.partition.members(k);
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                let apart = boxes[i]
                    .iter()
                    .zip(&boxes[j])
                    .any(|(p, q)| p.1 <= q.0 + 1e-9 || q.1 <= p.0 + 1e-9);
                if !apart && overlaps(&e.regions[i], &e.regions[j]).map_err(|e| e.to_string())? {
                    bad += 1;
                }
            }
        }
    }
    Ok(bad)
}

fn criterion_4(all: &[&Instance]) -> Outcome {
    let start = Instant::now();
    let mut merged = 0;
    for inst in all {
        let s = &inst.solution;
        let points = {
            let mut rng = ChaCha8Rng::seed_from_u64(77);
            let w = inst.spec.half_width * 1.1;
            (0..1000)
                .map(|_| (0..s.dim()).map(|_| rng.gen_range(-w..w)).collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        };
        for run in inst.runs.iter().filter(|r| r.depth != MergeDepth::Sweeps(0)) {
            let e = &run.evaluator;
            let bad = overlapping_pairs(e)?;
            check(bad == 0, || format!("{} n_m={}: {bad} overlapping pairs", run.label, run.depth))?;
            for x in &points {
                let y = lift_point(x);
                let got = sequential_min(&e.regions, &y, |i| e.functions[i].eval(&y));
                match (got, s.evaluate_sequential(x)) {
                    (None, None) => {}
                    (Some(a), Some(b)) => check((a.value - b.value).abs() <= 1e-8, || {
                        format!("{} n_m={}: value {} vs {} at {x:?}", run.label, run.depth, a.value, b.value)
                    })?,
                    _ => return Err(format!("{} n_m={}: coverage differs at {x:?}", run.label, run.depth)),
                }
            }
            merged += 1;
        }
    }
    Ok(format!("{merged} merged evaluators, 10³ points each, {:.1?}", start.elapsed()))
}

fn criterion_5(trend: &[&Instance], corpus: &[&Instance]) -> Outcome {
    let mut notes = Vec::new();
    let mut best_ratio: f64 = 0.0;
    for inst in trend {
        let rows: Vec<&BenchRow> = inst.runs.iter().map(|r| &r.row).collect();
        let (first, full) = (rows[0], rows[rows.len() - 1]);
        let m = first.n_p as f64 / first.n_t as f64;
        let regime = (full.n_p as f64) < m.powf(inst.spec.n_part as f64);
        check(regime, || format!("{}: |P_m| = {} not below m^n_part", inst.label, full.n_p))?;
        let ops: Vec<u64> = rows.iter().map(|r| r.measured_max_ops).collect();
        check(ops.windows(2).all(|w| w[1] < w[0]), || {
            format!("{}: worst-case ops {ops:?} not strictly decreasing", inst.label)
        })?;
        check(first.n_t == inst.spec.n_part, || {
            format!("{}: n_m = 0 has {} trees", inst.label, first.n_t)
        })?;
        check(full.n_p >= first.n_p, || {
            format!("{}: n_p fell from {} to {} at full merge", inst.label, first.n_p, full.n_p)
        })?;
        let ratio = first.measured_max_ops as f64 / full.measured_max_ops as f64;
        if inst.spec.n_part >= 8 {
            best_ratio = best_ratio.max(ratio);
        }
        notes.push(format!("{}: ops {ops:?}", inst.label));
    }
    // Partition counts halve (ceil) per sweep on every instance.
    for inst in trend.iter().chain(corpus) {
        let n_t: Vec<usize> = inst.runs.iter().map(|r| r.row.n_t).collect();
        let sweeps = &n_t[..n_t.len() - 1];
        check(sweeps.windows(2).all(|w| w[1] == w[0].div_ceil(2)), || {
            format!("{}: n_t sequence {n_t:?}", inst.label)
        })?;
        check(*n_t.last().unwrap() == 1 && *sweeps.last().unwrap() == 1, || {
            format!("{}: does not end in one tree", inst.label)
        })?;
    }
    check(best_ratio >= 2.0, || format!("best reduction {best_ratio:.2}× < 2×"))?;
    Ok(format!("{}; best reduction {best_ratio:.2}×", notes.join("; ")))
}

fn criterion_6(all: &[&Instance]) -> Outcome {
    let mut queries = 0;
    for run in all.iter().flat_map(|i| &i.runs) {
        let r = &run.row;
        check(r.bound_violations == 0, || {
            format!("{} n_m={}: {} queries above the bound", run.label, r.n_m, r.bound_violations)
        })?;
        check(r.trace_mismatches == 0, || {
            format!("{} n_m={}: {} trace mismatches", run.label, r.n_m, r.trace_mismatches)
        })?;
        check(r.measured_max_ops <= r.predicted_worst_ops, || {
            format!("{} n_m={}: max ops above prediction", run.label, r.n_m)
        })?;
        queries += r.queries;
    }
    Ok(format!("{queries} queries within bound, traces recomputed exactly"))
}

fn criterion_7() -> Outcome {
    let s = generate(&corpus_spec(2, 4)).map_err(|e| e.to_string())?;
    let cfg = BenchConfig {
        depths: sweep(4),
        queries: 2000,
        seed: 99,
        ..Default::default()
    };
    let (a, _) = run_bench(&s, &cfg).map_err(|e| e.to_string())?;
    let (b, _) = run_bench(&s, &cfg).map_err(|e| e.to_string())?;
    let csv = a.to_csv().map_err(|e| e.to_string())?;
    check(csv == b.to_csv().map_err(|e| e.to_string())?, || "CSV differs".into())?;
    let json = a.to_json().map_err(|e| e.to_string())?;
    check(json == b.to_json().map_err(|e| e.to_string())?, || "JSON differs".into())?;
    Ok(format!("{} + {} bytes identical", csv.len(), json.len()))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 one-dimensional end-to-end", criterion_1()));
    results.push(("2 lifting identities", criterion_2()));

    let start = Instant::now();
    let corpus: Result<Vec<Instance>, String> = [2, 3]
        .into_iter()
        .flat_map(|n| [2, 4, 8].map(|p| (n, p)))
        .map(|(n, p)| run_instance(&format!("n={n} n_part={p}"), corpus_spec(n, p), 10_000))
        .collect();
    results.push(("3 oracle equivalence", criterion_3(&corpus, start.elapsed())));

    let trend: Result<Vec<Instance>, String> = [8, 16]
        .into_iter()
        .map(|p| run_instance(&format!("trend n=1 n_part={p}"), trend_spec(p), 10_000))
        .collect();
    let corpus_refs: Vec<&Instance> = corpus.iter().flatten().collect();
    let trend_refs: Vec<&Instance> = trend.iter().flatten().collect();
    let all: Vec<&Instance> = corpus_refs.iter().chain(&trend_refs).copied().collect();

    results.push(("4 non-overlap and coverage", criterion_4(&all)));
    results.push((
        "5 ops-reduction trend",
        trend
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|_| criterion_5(&trend_refs, &corpus_refs)),
    ));
    results.push(("6 op-accounting consistency", criterion_6(&all)));
    results.push(("7 determinism", criterion_7()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
