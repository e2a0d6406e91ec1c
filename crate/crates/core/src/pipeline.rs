//! Offline preparation: reduce, lift, merge, build trees.

use std::time::Instant;

use serde::Serialize;

use crate::error::Result;
use crate::merge::{merge_all, merge_pairwise, merge_pairwise_greedy, MergedSolution};
use crate::model::{reduce, PwqSolution};
use crate::tree::{multi_tree, CompiledEvaluator};

/// How far overlapping partitions are merged before the trees are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MergeDepth {
    /// Pairwise sweeps; zero keeps every partition separate.
    Sweeps(usize),
    /// Merge everything into a single partition.
    Full,
}

impl std::str::FromStr for MergeDepth {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(MergeDepth::Full);
        }
        s.trim()
            .parse()
            .map(MergeDepth::Sweeps)
            .map_err(|_| format!("expected a sweep count or \"full\", got {s:?}"))
    }
}

impl std::fmt::Display for MergeDepth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MergeDepth::Sweeps(k) => write!(f, "{k}"),
            MergeDepth::Full => f.write_str("full"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub depth: MergeDepth,
    pub reduce: bool,
    /// Random partition pairings tried per compile in addition to index order.
    pub greedy_permutations: usize,
    pub seed: u64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            depth: MergeDepth::Sweeps(0),
            reduce: true,
            greedy_permutations: 0,
            seed: 0,
        }
    }
}

/// Region and partition counts after each stage, with wall-clock timings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CompileLog {
    pub regions_in: usize,
    pub partitions_in: usize,
    pub regions_reduced: usize,
    pub regions_merged: usize,
    pub partitions_merged: usize,
    pub trees: usize,
    pub reduce_ms: f64,
    pub lift_ms: f64,
    pub merge_ms: f64,
    pub tree_ms: f64,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Lifts and merges `s` as far as `opts` asks, without building trees.
pub fn prepare_merged(s: &PwqSolution, opts: &CompileOptions, log: &mut CompileLog) -> Result<MergedSolution> {
    s.validate_partitions()?;
    log.regions_in = s.len();
    log.partitions_in = s.partition().n_parts();

    let t = Instant::now();
    let reduced = if opts.reduce { reduce(s)? } else { s.clone() };
    log.regions_reduced = reduced.len();
    log.reduce_ms = ms(t);

    let t = Instant::now();
    let lifted: MergedSolution = reduced.lift().into();
    log.lift_ms = ms(t);

    let t = Instant::now();
    let merged = match opts.depth {
        MergeDepth::Full => merge_all(&lifted)?,
        MergeDepth::Sweeps(k) if opts.greedy_permutations > 0 => {
            merge_pairwise_greedy(&lifted, k, opts.greedy_permutations, opts.seed)?
        }
        MergeDepth::Sweeps(k) => merge_pairwise(&lifted, k)?,
    };
    log.merge_ms = ms(t);
    log.regions_merged = merged.len();
    log.partitions_merged = merged.n_parts();
    Ok(merged)
}

/// Full offline pipeline; control laws of `s` are carried into the evaluator.
pub fn compile(s: &PwqSolution, opts: &CompileOptions) -> Result<(CompiledEvaluator, CompileLog)> {
    let mut log = CompileLog::default();
    let merged = prepare_merged(s, opts, &mut log)?;
    let t = Instant::now();
    let e = multi_tree(&merged)?.with_control_laws(s.control_laws().map(<[_]>::to_vec));
    log.tree_ms = ms(t);
    log.trees = e.n_trees();
    Ok((e, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::example_1d;
    use crate::tree::evaluate;

    #[test]
    fn depth_parsing() {
        assert_eq!("full".parse::<MergeDepth>().unwrap(), MergeDepth::Full);
        assert_eq!("2".parse::<MergeDepth>().unwrap(), MergeDepth::Sweeps(2));
        assert!("two".parse::<MergeDepth>().is_err());
        assert_eq!(MergeDepth::Sweeps(3).to_string(), "3");
    }

    #[test]
    fn example_full_and_none() {
        let s = example_1d();
        let full = CompileOptions {
            depth: MergeDepth::Full,
            ..Default::default()
        };
        let (e, log) = compile(&s, &full).unwrap();
        assert_eq!(e.n_trees(), 1);
        assert_eq!(log.regions_in, 2);
        assert_eq!(log.partitions_merged, 1);
        let (e0, log0) = compile(&s, &CompileOptions::default()).unwrap();
        assert_eq!(e0.n_trees(), 2);
        assert_eq!(log0.trees, 2);
        let r = evaluate(&e, &[1.0]).unwrap().unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }
}
