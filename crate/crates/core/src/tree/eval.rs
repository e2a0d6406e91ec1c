//! Compiled evaluators: one tree per partition plus the lifted functions, and
//! the online operation count model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_tree_over, evaluate_tree, Node, SearchTree};
use crate::error::{Error, Result};
use crate::merge::MergedSolution;
use crate::model::{lift_point, AffineFunction, ControlLaw, PartitionIndex};
use crate::polyhedra::Polyhedron;

/// Scalar operation counts (multiplications, additions and comparisons).
///
/// A hyperplane decision or a containment row with `s` nonzero coefficients
/// costs `s + 1`. Decisions on the original coordinates therefore cost about
/// `n + 1` and decisions through the lifted coordinates up to `l + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCountModel {
    pub n: u64,
    pub l: u64,
    /// Evaluating `Dᵀy + E`.
    pub function_eval: u64,
    /// One value comparison.
    pub compare: u64,
    /// Computing the lifted point.
    pub lift: u64,
}

impl OpCountModel {
    pub fn new(n: usize, l: usize) -> Self {
        let (n, l) = (n as u64, l as u64);
        OpCountModel {
            n,
            l,
            function_eval: l + 1,
            compare: 1,
            lift: n * (n + 1) / 2,
        }
    }

    pub fn node_cost(&self, support: usize) -> u64 {
        support as u64 + 1
    }

    /// Per-node cost of decisions confined to the original coordinates.
    pub fn k1(&self) -> u64 {
        self.n + 1
    }

    /// Per-node cost of fully dense lifted decisions.
    pub fn k2(&self) -> u64 {
        self.l + 1
    }
}

/// Ready-to-query evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledEvaluator {
    pub n: usize,
    pub l: usize,
    pub regions: Vec<Polyhedron>,
    pub functions: Vec<AffineFunction>,
    pub partition: PartitionIndex,
    /// Region index in the loaded solution each evaluator region descends from.
    pub provenance: Vec<usize>,
    /// One tree per partition label, in label order.
    pub trees: Vec<SearchTree>,
    pub op_model: OpCountModel,
    /// Indexed by provenance.
    pub control_laws: Option<Vec<ControlLaw>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeTrace {
    pub region: Option<usize>,
    pub ops: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// One-based partition of the optimal region.
    pub partition: usize,
    /// Index of the optimal region in the evaluator.
    pub region: usize,
    pub value: f64,
    pub ops: u64,
    pub trace: Vec<TreeTrace>,
}

/// Builds one tree per partition label.
pub fn multi_tree(s: &MergedSolution) -> Result<CompiledEvaluator> {
    let parts = s.n_parts();
    let trees = (1..=parts)
        .into_par_iter()
        .map(|k| build_tree_over(&s.regions, &s.partition.members(k), Some(s.n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CompiledEvaluator {
        n: s.n,
        l: s.l,
        regions: s.regions.clone(),
        functions: s.functions.clone(),
        partition: s.partition.clone(),
        provenance: s.provenance.clone(),
        trees,
        op_model: OpCountModel::new(s.n, s.l),
        control_laws: None,
    })
}

/// Evaluates every tree at the lifted point and keeps the smallest value,
/// ties going to the lowest partition. `None` when no tree finds a region.
pub fn evaluate(e: &CompiledEvaluator, x: &[f64]) -> Result<Option<Evaluation>> {
    if x.len() != e.n {
        return Err(Error::dim(e.n, x.len()));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::input("query point has non-finite entries"));
    }
    let m = &e.op_model;
    let y = lift_point(x);
    let mut ops = m.lift;
    let mut best: Option<(usize, usize, f64)> = None;
    let mut trace = Vec::with_capacity(e.trees.len());
    for (k, t) in e.trees.iter().enumerate() {
        let hit = evaluate_tree(t, &y, &e.regions);
        ops += hit.ops;
        trace.push(TreeTrace {
            region: hit.region,
            ops: hit.ops,
        });
        if let Some(r) = hit.region {
            ops += m.function_eval + m.compare;
            let v = e.functions[r].eval(&y);
            if best.is_none_or(|(_, _, bv)| v < bv) {
                best = Some((k + 1, r, v));
            }
        }
    }
    Ok(best.map(|(partition, region, value)| Evaluation {
        partition,
        region,
        value,
        ops,
        trace,
    }))
}

impl CompiledEvaluator {
    pub fn with_control_laws(mut self, laws: Option<Vec<ControlLaw>>) -> Self {
        self.control_laws = laws;
        self
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Control action of the region selected by `eval`, if laws are attached.
    pub fn control_action(&self, eval: &Evaluation, x: &[f64]) -> Option<Vec<f64>> {
        let laws = self.control_laws.as_ref()?;
        laws.get(self.provenance[eval.region]).map(|law| law.apply(x))
    }

    /// Stored reals: dense hyperplanes of the decision nodes, region rows and
    /// function coefficients.
    pub fn n_store(&self) -> usize {
        let nodes: usize = self
            .trees
            .iter()
            .flat_map(|t| &t.nodes)
            .filter(|n| matches!(n, Node::Decision { .. }))
            .count();
        let rows: usize = self.regions.iter().map(Polyhedron::n_rows).sum();
        (nodes + rows + self.regions.len()) * (self.l + 1)
    }

    /// Regions per tree.
    pub fn tree_sizes(&self) -> Vec<usize> {
        (1..=self.trees.len())
            .map(|k| self.partition.members(k).len())
            .collect()
    }
}

/// Worst-case operation counts and the closed-form estimates they refine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpsPrediction {
    pub worst_case: u64,
    /// Worst single descent per tree, leaf containment checks included.
    pub per_tree: Vec<u64>,
    pub k1: u64,
    /// Mean decision cost over all trees (`k1` when there are no decisions).
    pub k2: f64,
    /// `n_t · K₁ · log₂(m)` with `m` the mean number of regions per tree.
    pub estimate_separate: f64,
    /// `K₂ · log₂(|P|)` for a single tree over all regions.
    pub estimate_merged: f64,
    /// `m^(K₁ n_t / K₂)`: merging pays off below this region count.
    pub merge_threshold: f64,
}

fn tree_worst(t: &SearchTree, regions: &[Polyhedron], m: &OpCountModel) -> u64 {
    let mut worst = 0;
    let mut stack = vec![(t.root, 0u64)];
    while let Some((id, acc)) = stack.pop() {
        match &t.nodes[id] {
            Node::Decision {
                hyperplane,
                low,
                high,
            } => {
                let c = acc + m.node_cost(hyperplane.support());
                stack.push((*low, c));
                stack.push((*high, c));
            }
            Node::Leaf { candidates } => {
                let leaf: u64 = candidates
                    .iter()
                    .flat_map(|c| {
                        c.check_rows
                            .iter()
                            .map(move |&r| regions[c.region].row(r))
                    })
                    .map(|a| m.node_cost(a.iter().filter(|v| **v != 0.0).count()))
                    .sum();
                worst = worst.max(acc + leaf);
            }
        }
    }
    worst
}

pub fn predict_ops(e: &CompiledEvaluator) -> OpsPrediction {
    let m = &e.op_model;
    let per_tree: Vec<u64> = e
        .trees
        .iter()
        .map(|t| tree_worst(t, &e.regions, m))
        .collect();
    let n_t = e.trees.len() as u64;
    let worst_case = m.lift + per_tree.iter().sum::<u64>() + n_t * (m.function_eval + m.compare);

    let (mut cost, mut count) = (0u64, 0u64);
    for node in e.trees.iter().flat_map(|t| &t.nodes) {
        if let Node::Decision { hyperplane, .. } = node {
            cost += m.node_cost(hyperplane.support());
            count += 1;
        }
    }
    let k1 = m.k1();
    let k2 = if count == 0 {
        k1 as f64
    } else {
        cost as f64 / count as f64
    };
    let total = e.regions.len().max(1) as f64;
    let mean = total / n_t.max(1) as f64;
    OpsPrediction {
        worst_case,
        per_tree,
        k1,
        k2,
        estimate_separate: n_t as f64 * k1 as f64 * mean.log2(),
        estimate_merged: k2 * total.log2(),
        merge_threshold: mean.powf(k1 as f64 * n_t as f64 / k2),
    }
}
