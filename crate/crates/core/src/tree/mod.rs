//! Binary search trees for point location in polyhedral partitions.
//!
//! Internal nodes test the side of a facet hyperplane, leaves hold a short list
//! of candidate regions. Construction follows the usual balanced heuristic: every
//! region is classified against every hyperplane once (mostly without LPs, using
//! coordinate bounds and facet identity), then each node picks the hyperplane that
//! minimises the larger of its two children.

mod eval;
mod export;

pub use eval::{
    evaluate, multi_tree, predict_ops, CompiledEvaluator, Evaluation, OpCountModel,
    OpsPrediction, TreeTrace,
};
pub use export::{evaluator_from_json, evaluator_to_json, read_evaluator, write_evaluator};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lp::dot;
use crate::polyhedra::{extract_hyperplanes, Hyperplane, HyperplaneIndex, Polyhedron};
use crate::tol;

/// Position of a region relative to a hyperplane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Entirely in `aᵀy ≤ b`.
    Low,
    /// Entirely in `aᵀy ≥ b`.
    High,
    Both,
}

/// `Low`/`High` when certified by the support function of `p`, `Both` otherwise.
pub fn classify(p: &Polyhedron, h: &Hyperplane) -> Result<Side> {
    if p.dim() != h.dim() {
        return Err(Error::dim(p.dim(), h.dim()));
    }
    let t = tol::feas();
    if p.support(&h.a)? <= h.b + t {
        return Ok(Side::Low);
    }
    let neg: Vec<f64> = h.a.iter().map(|v| -v).collect();
    if -p.support(&neg)? >= h.b - t {
        return Ok(Side::High);
    }
    Ok(Side::Both)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafCandidate {
    /// Index into the evaluator's region list.
    pub region: usize,
    /// Rows of the region not already certified by the decisions on the path.
    pub check_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Decision {
        hyperplane: Hyperplane,
        low: usize,
        high: usize,
    },
    Leaf {
        candidates: Vec<LeafCandidate>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    pub nodes: Vec<Node>,
    pub root: usize,
    pub depth: usize,
    /// Distinct hyperplanes of the partition the tree was built over.
    pub n_h: usize,
}

/// Result of descending one tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeHit {
    pub region: Option<usize>,
    pub ops: u64,
}

impl SearchTree {
    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Region indices appearing in any leaf, ascending and deduplicated.
    pub fn covered_regions(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Leaf { candidates } => Some(candidates.iter().map(|c| c.region)),
                _ => None,
            })
            .flatten()
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn support_size(a: &[f64]) -> u64 {
    a.iter().filter(|v| **v != 0.0).count() as u64
}

/// Descends `t` with the lifted point `y`; ties at a node go low.
pub fn evaluate_tree(t: &SearchTree, y: &[f64], regions: &[Polyhedron]) -> TreeHit {
    let feas = tol::feas();
    let mut ops = 0u64;
    let mut node = t.root;
    loop {
        match &t.nodes[node] {
            Node::Decision {
                hyperplane,
                low,
                high,
            } => {
                ops += hyperplane.support() as u64 + 1;
                node = if hyperplane.eval(y) <= 0.0 { *low } else { *high };
            }
            Node::Leaf { candidates } => {
                for cand in candidates {
                    let p = &regions[cand.region];
                    let mut inside = true;
                    for &r in &cand.check_rows {
                        let a = p.row(r);
                        ops += support_size(a) + 1;
                        if dot(a, y) > p.rhs(r) + feas {
                            inside = false;
                            break;
                        }
                    }
                    if inside {
                        return TreeHit {
                            region: Some(cand.region),
                            ops,
                        };
                    }
                }
                return TreeHit { region: None, ops };
            }
        }
    }
}

/// Builds a tree over a whole partition; leaves refer to positions in `partition`.
pub fn build_tree(partition: &[Polyhedron]) -> Result<SearchTree> {
    let members: Vec<usize> = (0..partition.len()).collect();
    build_tree_over(partition, &members, None)
}

/// Per-region facet identity: for each row, the hyperplane index and whether
/// the region lies on its low side, when the row matches that hyperplane exactly.
type FacetMap = Vec<Option<(usize, bool)>>;

struct Prepared {
    hyperplanes: Vec<Hyperplane>,
    /// `table[h * count + r]`.
    table: Vec<Side>,
    facets: Vec<FacetMap>,
}

/// Interval of `y_c` over `p`. With `lifted = Some(n)` the coordinates past `n`
/// are products `x_i x_j` and get their range from the box of `x`; this holds on
/// the lifting surface, the only place lifted queries can come from.
fn region_bounds(p: &Polyhedron, lifted: Option<usize>) -> Result<Vec<(f64, f64)>> {
    let direct = lifted.unwrap_or(p.dim()).min(p.dim());
    let mut out = (0..direct)
        .map(|c| p.coordinate_bounds(c))
        .collect::<Result<Vec<_>>>()?;
    if let Some(n) = lifted {
        for i in 0..n {
            for j in i..n {
                let ((a, b), (c, d)) = (out[i], out[j]);
                let products = [a * c, a * d, b * c, b * d];
                let mut lo = products.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if i == j && a <= 0.0 && b >= 0.0 {
                    lo = 0.0;
                }
                // NaN from 0·∞ means no information.
                out.push((
                    if lo.is_nan() { f64::NEG_INFINITY } else { lo },
                    if hi.is_nan() { f64::INFINITY } else { hi },
                ));
            }
        }
    }
    Ok(out)
}

fn prepare(regions: &[&Polyhedron], lifted: Option<usize>) -> Result<Prepared> {
    let owned: Vec<Polyhedron> = regions.iter().map(|p| (*p).clone()).collect();
    let hyperplanes = extract_hyperplanes(&owned);
    let index = HyperplaneIndex::new(&hyperplanes);
    let t = tol::feas();

    let facets: Vec<FacetMap> = regions
        .iter()
        .map(|p| {
            p.rows()
                .map(|(a, b)| {
                    let (h, low) = Hyperplane::from_row(a, b)?;
                    let k = index.find(&h)?;
                    let exact = (hyperplanes[k].b - h.b).abs() <= t
                        && hyperplanes[k]
                            .a
                            .iter()
                            .zip(&h.a)
                            .all(|(x, y)| (x - y).abs() <= 1e-12);
                    exact.then_some((k, low))
                })
                .collect()
        })
        .collect();

    struct RegionInfo {
        bounds: Vec<(f64, f64)>,
        center: Vec<f64>,
    }
    let infos: Vec<RegionInfo> = regions
        .par_iter()
        .map(|p| -> Result<RegionInfo> {
            let bounds = region_bounds(p, lifted)?;
            let center = match p.interior_certificate()? {
                crate::polyhedra::InteriorCertificate::Interior { center, .. } => center,
                crate::polyhedra::InteriorCertificate::Empty => vec![0.0; p.dim()],
            };
            Ok(RegionInfo { bounds, center })
        })
        .collect::<Result<_>>()?;

    let count = regions.len();
    let rows: Vec<Vec<Side>> = hyperplanes
        .par_iter()
        .enumerate()
        .map(|(hi, h)| -> Result<Vec<Side>> {
            let mut out = Vec::with_capacity(count);
            for (r, p) in regions.iter().enumerate() {
                if let Some(&(_, low)) = facets[r].iter().flatten().find(|(k, _)| *k == hi) {
                    out.push(if low { Side::Low } else { Side::High });
                    continue;
                }
                let info = &infos[r];
                let (mut lo, mut up) = (0.0, 0.0);
                for (a, (bl, bh)) in h.a.iter().zip(&info.bounds) {
                    if *a > 0.0 {
                        lo += a * bl;
                        up += a * bh;
                    } else if *a < 0.0 {
                        lo += a * bh;
                        up += a * bl;
                    }
                }
                if up <= h.b + t {
                    out.push(Side::Low);
                    continue;
                }
                if lo >= h.b - t {
                    out.push(Side::High);
                    continue;
                }
                let s = h.eval(&info.center);
                let side = if s < -t {
                    if p.support(&h.a)? <= h.b + t {
                        Side::Low
                    } else {
                        Side::Both
                    }
                } else if s > t {
                    let neg: Vec<f64> = h.a.iter().map(|v| -v).collect();
                    if -p.support(&neg)? >= h.b - t {
                        Side::High
                    } else {
                        Side::Both
                    }
                } else {
                    classify(p, h)?
                };
                out.push(side);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let table = rows.into_iter().flatten().collect();
    Ok(Prepared {
        hyperplanes,
        table,
        facets,
    })
}

/// Builds a tree over `regions[members]`; leaves refer to indices into `regions`.
/// `lifted = Some(n)` when the regions live in the lifted space of dimension `n`
/// and only lifted points will be queried.
pub(crate) fn build_tree_over(
    regions: &[Polyhedron],
    members: &[usize],
    lifted: Option<usize>,
) -> Result<SearchTree> {
    if members.is_empty() {
        return Err(Error::input("cannot build a search tree over an empty partition"));
    }
    let local: Vec<&Polyhedron> = members.iter().map(|&i| &regions[i]).collect();
    let prep = prepare(&local, lifted)?;
    let mut builder = Builder {
        prep: &prep,
        members,
        regions: &local,
        nodes: Vec::new(),
        path: Vec::new(),
        on_path: vec![false; prep.hyperplanes.len()],
        depth: 0,
    };
    let all: Vec<usize> = (0..members.len()).collect();
    let root = builder.build(all);
    Ok(SearchTree {
        depth: builder.depth,
        nodes: builder.nodes,
        root,
        n_h: prep.hyperplanes.len(),
    })
}

struct Builder<'a> {
    prep: &'a Prepared,
    members: &'a [usize],
    regions: &'a [&'a Polyhedron],
    nodes: Vec<Node>,
    path: Vec<(usize, bool)>,
    on_path: Vec<bool>,
    depth: usize,
}

impl Builder<'_> {
    fn side(&self, h: usize, r: usize) -> Side {
        self.prep.table[h * self.regions.len() + r]
    }

    fn build(&mut self, active: Vec<usize>) -> usize {
        self.depth = self.depth.max(self.path.len());
        let split = if active.len() > 1 {
            self.best_split(&active)
        } else {
            None
        };
        let Some(h) = split else {
            let candidates = active.iter().map(|&r| self.leaf_candidate(r)).collect();
            self.nodes.push(Node::Leaf { candidates });
            return self.nodes.len() - 1;
        };
        let low_set: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&r| self.side(h, r) != Side::High)
            .collect();
        let high_set: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&r| self.side(h, r) != Side::Low)
            .collect();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            candidates: Vec::new(),
        });
        self.on_path[h] = true;
        self.path.push((h, true));
        let low = self.build(low_set);
        self.path.last_mut().expect("path entry").1 = false;
        let high = self.build(high_set);
        self.path.pop();
        self.on_path[h] = false;
        self.nodes[id] = Node::Decision {
            hyperplane: self.prep.hyperplanes[h].clone(),
            low,
            high,
        };
        id
    }

    fn best_split(&self, active: &[usize]) -> Option<usize> {
        let mut best: Option<(usize, usize, usize)> = None;
        for h in 0..self.prep.hyperplanes.len() {
            if self.on_path[h] {
                continue;
            }
            let (mut low, mut high) = (0, 0);
            for &r in active {
                match self.side(h, r) {
                    Side::Low => low += 1,
                    Side::High => high += 1,
                    Side::Both => {
                        low += 1;
                        high += 1;
                    }
                }
            }
            let key = (low.max(high), low + high, h);
            if best.is_none_or(|b| key < b) {
                best = Some(key);
            }
        }
        best.filter(|b| b.0 < active.len()).map(|b| b.2)
    }

    fn leaf_candidate(&self, r: usize) -> LeafCandidate {
        let check_rows = (0..self.regions[r].n_rows())
            .filter(|&row| match self.prep.facets[r][row] {
                Some((h, low)) => !self.path.contains(&(h, low)),
                None => true,
            })
            .collect();
        LeafCandidate {
            region: self.members[r],
            check_rows,
        }
    }
}
