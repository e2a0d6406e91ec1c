//! Overlap elimination for piecewise affine functions.
//!
//! [`merge`] keeps, for every region, exactly the part on which its function is
//! the pointwise minimum among overlapping regions. [`merge_pairwise`] applies the
//! same operation to pairs of partitions, halving the partition count per sweep,
//! which trades offline effort against the number of trees evaluated online.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{relabel, AffineFunction, LiftedSolution, PartitionIndex};
use crate::polyhedra::{region_diff, PolyhedralSet, Polyhedron};
use crate::tol;

/// Coefficient tolerance for the exact-tie rule.
const TIE_TOL: f64 = 1e-12;

/// Lifted piecewise affine solution after (partial) merging.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedSolution {
    /// Dimension of the original parameter space.
    pub n: usize,
    /// Dimension of the lifted space the regions live in.
    pub l: usize,
    pub regions: PolyhedralSet,
    pub functions: Vec<AffineFunction>,
    pub partition: PartitionIndex,
    /// Original region index each output region descends from.
    pub provenance: Vec<usize>,
}

impl From<LiftedSolution> for MergedSolution {
    fn from(s: LiftedSolution) -> Self {
        MergedSolution {
            n: s.n,
            l: s.l,
            regions: s.regions,
            functions: s.functions,
            partition: s.partition,
            provenance: s.origin,
        }
    }
}

impl From<&LiftedSolution> for MergedSolution {
    fn from(s: &LiftedSolution) -> Self {
        s.clone().into()
    }
}

impl MergedSolution {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn n_parts(&self) -> usize {
        self.partition.n_parts()
    }

    pub fn evaluate_sequential(&self, y: &[f64]) -> Option<crate::model::SequentialHit> {
        crate::model::sequential_min(&self.regions, y, |i| self.functions[i].eval(y))
    }
}

/// Inverse of `l = (n² + 3n)/2`.
fn original_dim(l: usize) -> Option<usize> {
    (1..=l).find(|&n| crate::model::lifted_dim(n) == l)
}

/// Merges a lifted region set into a single non-overlapping partition.
pub fn merge(regions: &[Polyhedron], functions: &[AffineFunction]) -> Result<MergedSolution> {
    if regions.len() != functions.len() {
        return Err(Error::input(format!(
            "{} regions but {} functions",
            regions.len(),
            functions.len()
        )));
    }
    let Some(first) = regions.first() else {
        return Ok(MergedSolution {
            n: 0,
            l: 0,
            regions: Vec::new(),
            functions: Vec::new(),
            partition: PartitionIndex::single(0),
            provenance: Vec::new(),
        });
    };
    let l = first.dim();
    let n = original_dim(l)
        .ok_or_else(|| Error::input(format!("dimension {l} is not a lifted dimension")))?;
    let provenance: Vec<usize> = (0..regions.len()).collect();
    let (regions, functions, provenance) = merge_indexed(n, regions, functions, &provenance)?;
    let partition = PartitionIndex::single(regions.len());
    Ok(MergedSolution {
        n,
        l,
        regions,
        functions,
        partition,
        provenance,
    })
}

/// Full merge of every region of `s`, ignoring its partition labels.
pub fn merge_all(s: &MergedSolution) -> Result<MergedSolution> {
    let (regions, functions, provenance) =
        merge_indexed(s.n, &s.regions, &s.functions, &s.provenance)?;
    Ok(MergedSolution {
        n: s.n,
        l: s.l,
        partition: PartitionIndex::single(regions.len()),
        regions,
        functions,
        provenance,
    })
}

type Pieces = (PolyhedralSet, Vec<AffineFunction>, Vec<usize>);

fn merge_indexed(
    n: usize,
    regions: &[Polyhedron],
    functions: &[AffineFunction],
    provenance: &[usize],
) -> Result<Pieces> {
    let base = Base::new(n, regions, functions)?;
    let all: Vec<usize> = (0..regions.len()).collect();
    let items: Vec<Item> = (0..regions.len())
        .map(|i| Item {
            region: regions[i].clone(),
            base: i,
            rivals: &all,
        })
        .collect();
    let per_item = base.carve(&items)?;
    let mut out = (Vec::new(), Vec::new(), Vec::new());
    for (i, pieces) in per_item.into_iter().enumerate() {
        for piece in pieces {
            out.0.push(piece);
            out.1.push(functions[i].clone());
            out.2.push(provenance[i]);
        }
    }
    Ok(out)
}

/// The unmerged regions every merge compares against.
///
/// The lower envelope of a group of base regions is the pointwise minimum of
/// their functions, however often the group has been merged already, so pieces
/// are always carved against base regions rather than earlier fragments.
struct Base<'a> {
    regions: &'a [Polyhedron],
    functions: &'a [AffineFunction],
    /// Bounds on the original coordinates; prune most disjoint pairs without an LP.
    boxes: Vec<Vec<(f64, f64)>>,
}

/// A region to carve, with the base region it descends from and the base
/// regions it competes with.
struct Item<'r> {
    region: Polyhedron,
    base: usize,
    rivals: &'r [usize],
}

fn bounds(n: usize, p: &Polyhedron) -> Result<Vec<(f64, f64)>> {
    (0..n.min(p.dim())).map(|c| p.coordinate_bounds(c)).collect()
}

impl<'a> Base<'a> {
    fn new(n: usize, regions: &'a [Polyhedron], functions: &'a [AffineFunction]) -> Result<Self> {
        for (i, p) in regions.iter().enumerate() {
            if functions[i].d.len() != p.dim() {
                return Err(Error::dim(p.dim(), functions[i].d.len()));
            }
        }
        let boxes = regions
            .par_iter()
            .map(|p| bounds(n, p))
            .collect::<Result<_>>()?;
        Ok(Base {
            regions,
            functions,
            boxes,
        })
    }

    /// For each item, the part of its region where its base function is the
    /// strict minimum among its rivals (exact ties go to the lower base index).
    fn carve(&self, items: &[Item]) -> Result<Vec<PolyhedralSet>> {
        let t = tol::feas();
        items
            .par_iter()
            .map(|item| -> Result<PolyhedralSet> {
                let bx = bounds(self.boxes.first().map_or(0, Vec::len), &item.region)?;
                let fi = &self.functions[item.base];
                let mut cover = Vec::new();
                for &j in item.rivals {
                    if j == item.base {
                        continue;
                    }
                    let disjoint = bx
                        .iter()
                        .zip(&self.boxes[j])
                        .any(|((lo_i, hi_i), (lo_j, hi_j))| *hi_i <= lo_j + t || *hi_j <= lo_i + t);
                    if disjoint {
                        continue;
                    }
                    let fj = &self.functions[j];
                    if fi.coincides(fj, TIE_TOL) && j > item.base {
                        continue;
                    }
                    // {y ∈ P[j] : J_i(y) ≥ J_j(y)}; intersecting with the item is implicit in the difference.
                    let cut: Vec<f64> = fj.d.iter().zip(&fi.d).map(|(a, b)| a - b).collect();
                    let q = self.regions[j].with_row(&cut, fi.e - fj.e);
                    if !q.is_canonical_empty() {
                        cover.push(q);
                    }
                }
                region_diff(&item.region, &cover)
            })
            .collect()
    }
}

/// Runs `sweeps` rounds of pairwise partition merging.
///
/// Each round merges partitions `2k−1` and `2k` into partition `k`; an unpaired
/// last partition is carried through as partition `⌈max/2⌉`.
pub fn merge_pairwise(s: &MergedSolution, sweeps: usize) -> Result<MergedSolution> {
    let base = Base::new(s.n, &s.regions, &s.functions)?;
    // Current pieces: region, base index, label.
    let mut cur: Vec<(Polyhedron, usize)> = s.regions.iter().cloned().zip(0..).collect();
    let mut labels: Vec<usize> = s.partition.labels().to_vec();
    // Base indices making up each current partition.
    let mut groups: Vec<Vec<usize>> = (1..=s.n_parts()).map(|k| s.partition.members(k)).collect();
    for _ in 0..sweeps {
        let parts = groups.len();
        if parts <= 1 {
            break;
        }
        let items: Vec<Item> = cur
            .iter()
            .zip(&labels)
            .map(|((region, b), &k)| {
                // Partition k pairs with its neighbour; an odd last one has no rival.
                let rival = if k % 2 == 1 { k + 1 } else { k - 1 };
                let rivals: &[usize] = if rival <= parts { &groups[rival - 1] } else { &[] };
                Item {
                    region: region.clone(),
                    base: *b,
                    rivals,
                }
            })
            .collect();
        let carved = base.carve(&items)?;
        let mut next = Vec::new();
        let mut next_labels = Vec::new();
        for (((_, b), &k), pieces) in cur.iter().zip(&labels).zip(carved) {
            for piece in pieces {
                next.push((piece, *b, k.div_ceil(2)));
            }
        }
        // Stable grouping by new label keeps the pair's pieces in order.
        next.sort_by_key(|e| e.2);
        cur = next
            .into_iter()
            .map(|(p, b, k)| {
                next_labels.push(k);
                (p, b)
            })
            .collect();
        labels = next_labels;
        groups = groups.chunks(2).map(|c| c.concat()).collect();
    }
    Ok(MergedSolution {
        n: s.n,
        l: s.l,
        partition: relabel(&labels),
        functions: cur.iter().map(|(_, b)| s.functions[*b].clone()).collect(),
        provenance: cur.iter().map(|(_, b)| s.provenance[*b]).collect(),
        regions: cur.into_iter().map(|(p, _)| p).collect(),
    })
}

/// [`merge_pairwise`] over the identity pairing and `tries` random relabelings of
/// the partitions, keeping the result with the fewest regions (earliest on ties).
pub fn merge_pairwise_greedy(
    s: &MergedSolution,
    sweeps: usize,
    tries: usize,
    seed: u64,
) -> Result<MergedSolution> {
    let mut best = merge_pairwise(s, sweeps)?;
    let parts = s.n_parts();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..tries {
        let mut perm: Vec<usize> = (1..=parts).collect();
        perm.shuffle(&mut rng);
        let labels: Vec<usize> = s.partition.labels().iter().map(|&k| perm[k - 1]).collect();
        let relabeled = MergedSolution {
            partition: PartitionIndex::new(labels)?,
            ..s.clone()
        };
        let candidate = merge_pairwise(&relabeled, sweeps)?;
        if candidate.len() < best.len() {
            best = candidate;
        }
    }
    Ok(best)
}
