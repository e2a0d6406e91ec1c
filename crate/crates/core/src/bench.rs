//! Oracle-verified benchmark sweeps over the merge depth.
//!
//! Reports contain only deterministic quantities (counts and operation tallies),
//! so reruns with the same seed are byte-identical. Wall-clock timings are
//! returned separately.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PwqSolution;
use crate::pipeline::{compile, CompileOptions, MergeDepth};
use crate::tree::{evaluate, predict_ops, CompiledEvaluator};

/// Bumped whenever the column set or order changes.
pub const REPORT_VERSION: u32 = 1;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 13] = [
    "version",
    "n_m",
    "n_t",
    "n_p",
    "n_store",
    "depths",
    "max_depth",
    "predicted_worst_ops",
    "measured_max_ops",
    "measured_mean_ops",
    "queries",
    "bound_violations",
    "trace_mismatches",
];

/// Absolute value tolerance of the oracle check.
pub const ORACLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub depths: Vec<MergeDepth>,
    pub queries: usize,
    pub seed: u64,
    pub reduce: bool,
    pub greedy_permutations: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            depths: vec![MergeDepth::Sweeps(0), MergeDepth::Full],
            queries: 1000,
            seed: 0,
            reduce: true,
            greedy_permutations: 0,
        }
    }
}

/// One configuration of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n_m: String,
    pub n_t: usize,
    pub n_p: usize,
    /// Stored reals: `(decision nodes + region rows + functions) · (l + 1)`.
    pub n_store: usize,
    pub depths: Vec<usize>,
    pub max_depth: usize,
    pub predicted_worst_ops: u64,
    pub measured_max_ops: u64,
    pub measured_mean_ops: f64,
    pub queries: usize,
    /// Queries whose operation count exceeded the predicted worst case.
    pub bound_violations: usize,
    /// Queries whose count differs from the sum recomputed from the per-tree trace.
    pub trace_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub version: u32,
    pub n: usize,
    pub regions: usize,
    pub partitions: usize,
    pub seed: u64,
    pub queries: usize,
    pub rows: Vec<BenchRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub n_m: String,
    pub reduce_ms: f64,
    pub lift_ms: f64,
    pub merge_ms: f64,
    pub tree_ms: f64,
    pub query_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchTimings {
    pub rows: Vec<TimingRow>,
}

/// Bounding box of every region of `s`.
fn bounding_box(s: &PwqSolution) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = s.dim();
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for p in s.regions() {
        for i in 0..n {
            let (a, b) = p.coordinate_bounds(i)?;
            if a > b {
                break;
            }
            lo[i] = lo[i].min(a);
            hi[i] = hi[i].max(b);
        }
    }
    if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
        return Err(Error::input("benchmark needs bounded regions"));
    }
    Ok((lo, hi))
}

/// Uniform samples from the bounding box of `s`, keeping only covered points.
pub fn sample_queries(s: &PwqSolution, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let (lo, hi) = bounding_box(s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let budget = 1000 * count.max(1);
    let mut tries = 0;
    while out.len() < count {
        if tries == budget {
            return Err(Error::input("covered domain too small to sample queries"));
        }
        tries += 1;
        let x: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| if a < b { rng.gen_range(*a..*b) } else { *a })
            .collect();
        if s.evaluate_sequential(&x).is_some() {
            out.push(x);
        }
    }
    Ok(out)
}

struct QueryStats {
    ops: u64,
    over_bound: bool,
    trace_mismatch: bool,
}

/// Evaluates `x`, checks it against the oracle and the op accounting.
fn check_query(
    s: &PwqSolution,
    e: &CompiledEvaluator,
    worst: u64,
    x: &[f64],
) -> Result<QueryStats> {
    let expected = s.evaluate_sequential(x);
    let got = evaluate(e, x)?;
    let mismatch = |got: String, expected: String| Error::OracleMismatch {
        point: x.to_vec(),
        got,
        expected,
    };
    let r = match (got, expected) {
        (Some(r), Some(o)) if (r.value - o.value).abs() <= ORACLE_TOL => r,
        (Some(r), Some(o)) => return Err(mismatch(r.value.to_string(), o.value.to_string())),
        (None, Some(o)) => return Err(mismatch("not covered".into(), o.value.to_string())),
        (Some(r), None) => return Err(mismatch(r.value.to_string(), "not covered".into())),
        (None, None) => return Err(mismatch("not covered".into(), "not covered".into())),
    };
    let m = &e.op_model;
    let found = r.trace.iter().filter(|t| t.region.is_some()).count() as u64;
    let recomputed =
        m.lift + r.trace.iter().map(|t| t.ops).sum::<u64>() + found * (m.function_eval + m.compare);
    Ok(QueryStats {
        ops: r.ops,
        over_bound: r.ops > worst,
        trace_mismatch: recomputed != r.ops,
    })
}

/// Verifies `e` on `queries` and summarises its operation counts.
pub fn measure(
    s: &PwqSolution,
    e: &CompiledEvaluator,
    n_m: MergeDepth,
    queries: &[Vec<f64>],
) -> Result<BenchRow> {
    let pred = predict_ops(e);
    let stats = queries
        .par_iter()
        .map(|x| check_query(s, e, pred.worst_case, x))
        .collect::<Result<Vec<_>>>()?;
    let total: u64 = stats.iter().map(|q| q.ops).sum();
    let depths: Vec<usize> = e.trees.iter().map(|t| t.depth).collect();
    Ok(BenchRow {
        n_m: n_m.to_string(),
        n_t: e.n_trees(),
        n_p: e.regions.len(),
        n_store: e.n_store(),
        max_depth: depths.iter().copied().max().unwrap_or(0),
        depths,
        predicted_worst_ops: pred.worst_case,
        measured_max_ops: stats.iter().map(|q| q.ops).max().unwrap_or(0),
        measured_mean_ops: if stats.is_empty() {
            0.0
        } else {
            total as f64 / stats.len() as f64
        },
        queries: stats.len(),
        bound_violations: stats.iter().filter(|q| q.over_bound).count(),
        trace_mismatches: stats.iter().filter(|q| q.trace_mismatch).count(),
    })
}

/// Compiles `s` once per merge depth and verifies every query against the oracle.
pub fn run_bench(s: &PwqSolution, cfg: &BenchConfig) -> Result<(BenchReport, BenchTimings)> {
    let queries = sample_queries(s, cfg.queries, cfg.seed)?;
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for &depth in &cfg.depths {
        let opts = CompileOptions {
            depth,
            reduce: cfg.reduce,
            greedy_permutations: cfg.greedy_permutations,
            seed: cfg.seed,
        };
        let (e, log) = compile(s, &opts)?;
        let t = Instant::now();
        rows.push(measure(s, &e, depth, &queries)?);
        timings.push(TimingRow {
            n_m: depth.to_string(),
            reduce_ms: log.reduce_ms,
            lift_ms: log.lift_ms,
            merge_ms: log.merge_ms,
            tree_ms: log.tree_ms,
            query_ms: t.elapsed().as_secs_f64() * 1e3,
        });
    }
    let report = BenchReport {
        version: REPORT_VERSION,
        n: s.dim(),
        regions: s.len(),
        partitions: s.partition().n_parts(),
        seed: cfg.seed,
        queries: cfg.queries,
        rows,
    };
    Ok((report, BenchTimings { rows: timings }))
}

impl BenchReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(CSV_COLUMNS).map_err(io)?;
        for r in &self.rows {
            let depths: Vec<String> = r.depths.iter().map(usize::to_string).collect();
            w.write_record([
                self.version.to_string(),
                r.n_m.clone(),
                r.n_t.to_string(),
                r.n_p.to_string(),
                r.n_store.to_string(),
                depths.join(";"),
                r.max_depth.to_string(),
                r.predicted_worst_ops.to_string(),
                r.measured_max_ops.to_string(),
                format!("{:.6}", r.measured_mean_ops),
                r.queries.to_string(),
                r.bound_violations.to_string(),
                r.trace_mismatches.to_string(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{example_1d, generate, GeneratorSpec};

    #[test]
    fn example_sweep() {
        let cfg = BenchConfig {
            queries: 200,
            seed: 1,
            ..Default::default()
        };
        let (r, t) = run_bench(&example_1d(), &cfg).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert_eq!(r.rows[0].n_t, 2);
        assert_eq!(r.rows[1].n_t, 1);
        assert_eq!(t.rows.len(), 2);
        for row in &r.rows {
            assert_eq!(row.queries, 200);
            assert_eq!(row.bound_violations, 0);
            assert_eq!(row.trace_mismatches, 0);
        }
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with(&CSV_COLUMNS.join(",")));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn same_seed_same_report() {
        let s = generate(&GeneratorSpec {
            n: 2,
            n_part: 2,
            grid: 2,
            seed: 4,
            ..Default::default()
        })
        .unwrap();
        let cfg = BenchConfig {
            queries: 300,
            seed: 9,
            ..Default::default()
        };
        let (a, _) = run_bench(&s, &cfg).unwrap();
        let (b, _) = run_bench(&s, &cfg).unwrap();
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn queries_are_covered_and_seeded() {
        let s = example_1d();
        let q = sample_queries(&s, 50, 3).unwrap();
        assert!(q.iter().all(|x| (-3.0..=3.0).contains(&x[0])));
        assert_eq!(q, sample_queries(&s, 50, 3).unwrap());
    }

    #[test]
    fn unbounded_input_is_rejected() {
        use crate::model::{PartitionIndex, QuadraticFunction};
        use crate::polyhedra::Polyhedron;
        let s = PwqSolution::new(
            1,
            vec![Polyhedron::new(1, &[vec![1.0]], &[0.0]).unwrap()],
            vec![QuadraticFunction::new(&[vec![1.0]], vec![0.0], 0.0).unwrap()],
            PartitionIndex::single(1),
            None,
        )
        .unwrap();
        assert!(sample_queries(&s, 5, 0).is_err());
    }
}
