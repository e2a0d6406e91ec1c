//! Piecewise quadratic value functions over overlapping polyhedral partitions,
//! their lifted piecewise affine form, and the sequential reference evaluator.

pub(crate) mod io;
mod reduce;

pub use io::{read_solution, solution_from_json, solution_to_json, write_solution};
pub use reduce::reduce;

use crate::error::{Error, Result};
use crate::lp::dot;
use crate::polyhedra::{overlaps, PolyhedralSet, Polyhedron};

/// `xᵀAx + Bᵀx + C` with symmetric `A` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFunction {
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl QuadraticFunction {
    /// `A` is symmetrised as `(A + Aᵀ)/2`.
    pub fn new(a: &[Vec<f64>], b: Vec<f64>, c: f64) -> Result<Self> {
        let n = b.len();
        if a.len() != n {
            return Err(Error::dim(n, a.len()));
        }
        let mut flat = vec![0.0; n * n];
        for (i, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::dim(n, row.len()));
            }
            flat[i * n..(i + 1) * n].copy_from_slice(row);
        }
        for i in 0..n {
            for j in i + 1..n {
                let s = 0.5 * (flat[i * n + j] + flat[j * n + i]);
                flat[i * n + j] = s;
                flat[j * n + i] = s;
            }
        }
        if !flat.iter().chain(&b).all(|v| v.is_finite()) || !c.is_finite() {
            return Err(Error::input("non-finite coefficient in quadratic function"));
        }
        Ok(QuadraticFunction { n, a: flat, b, c })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn a_rows(&self) -> Vec<Vec<f64>> {
        self.a.chunks(self.n.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut quad = 0.0;
        for i in 0..n {
            quad += x[i] * dot(&self.a[i * n..(i + 1) * n], x);
        }
        quad + dot(&self.b, x) + self.c
    }

    /// Lifted coefficients: linear part, then `A_ii` and `2A_ij` (j > i) row by row.
    pub fn lift(&self) -> AffineFunction {
        let n = self.n;
        let mut d = Vec::with_capacity(lifted_dim(n));
        d.extend_from_slice(&self.b);
        for i in 0..n {
            d.push(self.a(i, i));
            for j in i + 1..n {
                d.push(2.0 * self.a(i, j));
            }
        }
        AffineFunction { d, e: self.c }
    }
}

/// `Dᵀy + E`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFunction {
    pub d: Vec<f64>,
    pub e: f64,
}

impl AffineFunction {
    pub fn eval(&self, y: &[f64]) -> f64 {
        dot(&self.d, y) + self.e
    }

    /// Coefficient-wise equality within `tol`.
    pub fn coincides(&self, other: &AffineFunction, tol: f64) -> bool {
        (self.e - other.e).abs() <= tol
            && self.d.iter().zip(&other.d).all(|(a, b)| (a - b).abs() <= tol)
    }
}

/// Affine control law `u = Fx + g`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLaw {
    pub f: Vec<Vec<f64>>,
    pub g: Vec<f64>,
}

impl ControlLaw {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.f
            .iter()
            .zip(&self.g)
            .map(|(row, g)| dot(row, x) + g)
            .collect()
    }
}

/// One-based partition label per region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionIndex(Vec<usize>);

impl PartitionIndex {
    /// Every label in `1..=max` must occur.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let max = labels.iter().copied().max().unwrap_or(0);
        let mut seen = vec![false; max + 1];
        for &s in &labels {
            if s == 0 {
                return Err(Error::input("partition labels are one-based"));
            }
            seen[s] = true;
        }
        if let Some(k) = (1..=max).find(|&k| !seen[k]) {
            return Err(Error::input(format!("partition label {k} is unused")));
        }
        Ok(PartitionIndex(labels))
    }

    pub fn single(len: usize) -> Self {
        PartitionIndex(vec![1; len])
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of partitions, `max(I)`.
    pub fn n_parts(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Region indices carrying label `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] == k).collect()
    }
}

/// Dimension of the lifted space, `(n² + 3n)/2`.
pub fn lifted_dim(n: usize) -> usize {
    (n * n + 3 * n) / 2
}

/// `[x, x₁², x₁x₂, …, x₁xₙ, x₂², …, xₙ²]`.
pub fn lift_point(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut y = Vec::with_capacity(lifted_dim(n));
    y.extend_from_slice(x);
    for i in 0..n {
        for j in i..n {
            y.push(x[i] * x[j]);
        }
    }
    y
}

/// Pads each region with zero columns for the bilinear coordinates.
pub fn lift_regions(regions: &[Polyhedron]) -> PolyhedralSet {
    regions
        .iter()
        .map(|p| p.extend_dim(lifted_dim(p.dim())))
        .collect()
}

pub fn lift_functions(functions: &[QuadraticFunction]) -> Vec<AffineFunction> {
    functions.iter().map(QuadraticFunction::lift).collect()
}

/// Result of a sequential scan: zero-based region index and minimum value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequentialHit {
    pub index: usize,
    pub value: f64,
}

/// Minimum of `value(i)` over the regions containing `point`; lowest index wins ties.
pub fn sequential_min(
    regions: &[Polyhedron],
    point: &[f64],
    value: impl Fn(usize) -> f64,
) -> Option<SequentialHit> {
    let mut best: Option<SequentialHit> = None;
    for (i, p) in regions.iter().enumerate() {
        if p.contains(point) {
            let v = value(i);
            if best.is_none_or(|b| v < b.value) {
                best = Some(SequentialHit { index: i, value: v });
            }
        }
    }
    best
}

/// Solution of a parametric MIQP: overlapping regions, one quadratic per region.
#[derive(Debug, Clone, PartialEq)]
pub struct PwqSolution {
    n: usize,
    pub(crate) regions: PolyhedralSet,
    pub(crate) functions: Vec<QuadraticFunction>,
    pub(crate) partition: PartitionIndex,
    pub(crate) control_laws: Option<Vec<ControlLaw>>,
    /// Index of each region in the solution as originally loaded.
    pub(crate) origin: Vec<usize>,
}

impl PwqSolution {
    pub fn new(
        n: usize,
        regions: PolyhedralSet,
        functions: Vec<QuadraticFunction>,
        partition: PartitionIndex,
        control_laws: Option<Vec<ControlLaw>>,
    ) -> Result<Self> {
        let len = regions.len();
        if functions.len() != len {
            return Err(Error::input(format!(
                "{} regions but {} functions",
                len,
                functions.len()
            )));
        }
        if partition.len() != len {
            return Err(Error::input(format!(
                "{} regions but {} partition labels",
                len,
                partition.len()
            )));
        }
        for (i, p) in regions.iter().enumerate() {
            if p.dim() != n {
                return Err(Error::input(format!(
                    "regions[{i}] has dimension {}, expected {n}",
                    p.dim()
                )));
            }
        }
        for (i, f) in functions.iter().enumerate() {
            if f.dim() != n {
                return Err(Error::input(format!(
                    "functions[{i}] has dimension {}, expected {n}",
                    f.dim()
                )));
            }
        }
        if let Some(laws) = &control_laws {
            if laws.len() != len {
                return Err(Error::input(format!(
                    "{} regions but {} control laws",
                    len,
                    laws.len()
                )));
            }
            for (i, law) in laws.iter().enumerate() {
                if law.f.len() != law.g.len() || law.f.iter().any(|r| r.len() != n) {
                    return Err(Error::input(format!("control_laws[{i}] has inconsistent shape")));
                }
            }
        }
        Ok(PwqSolution {
            n,
            regions,
            functions,
            partition,
            control_laws,
            origin: (0..len).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn regions(&self) -> &[Polyhedron] {
        &self.regions
    }

    pub fn functions(&self) -> &[QuadraticFunction] {
        &self.functions
    }

    pub fn partition(&self) -> &PartitionIndex {
        &self.partition
    }

    pub fn control_laws(&self) -> Option<&[ControlLaw]> {
        self.control_laws.as_deref()
    }

    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    /// Checks that regions sharing a label do not overlap.
    pub fn validate_partitions(&self) -> Result<()> {
        for k in 1..=self.partition.n_parts() {
            let members = self.partition.members(k);
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    if overlaps(&self.regions[i], &self.regions[j])? {
                        return Err(Error::input(format!(
                            "regions[{i}] and regions[{j}] overlap inside partition {k}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Reference evaluation by a full scan over all regions.
    pub fn evaluate_sequential(&self, x: &[f64]) -> Option<SequentialHit> {
        sequential_min(&self.regions, x, |i| self.functions[i].eval(x))
    }

    /// Lifted piecewise affine form; a pure rearrangement of the data.
    pub fn lift(&self) -> LiftedSolution {
        LiftedSolution {
            n: self.n,
            l: lifted_dim(self.n),
            regions: lift_regions(&self.regions),
            functions: lift_functions(&self.functions),
            partition: self.partition.clone(),
            origin: self.origin.clone(),
        }
    }

    /// Keeps only the regions listed in `keep` (ascending).
    pub(crate) fn select(&self, keep: &[usize]) -> PwqSolution {
        let labels: Vec<usize> = keep.iter().map(|&i| self.partition.labels()[i]).collect();
        PwqSolution {
            n: self.n,
            regions: keep.iter().map(|&i| self.regions[i].clone()).collect(),
            functions: keep.iter().map(|&i| self.functions[i].clone()).collect(),
            partition: relabel(&labels),
            control_laws: self
                .control_laws
                .as_ref()
                .map(|laws| keep.iter().map(|&i| laws[i].clone()).collect()),
            origin: keep.iter().map(|&i| self.origin[i]).collect(),
        }
    }
}

/// Compacts labels to `1..=k` preserving their order.
pub(crate) fn relabel(labels: &[usize]) -> PartitionIndex {
    let mut used: Vec<usize> = labels.to_vec();
    used.sort_unstable();
    used.dedup();
    PartitionIndex(
        labels
            .iter()
            .map(|s| used.binary_search(s).map(|p| p + 1).unwrap_or(1))
            .collect(),
    )
}

pub fn lift_solution(s: &PwqSolution) -> LiftedSolution {
    s.lift()
}

/// Piecewise affine solution in the lifted space.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSolution {
    pub n: usize,
    pub l: usize,
    pub regions: PolyhedralSet,
    pub functions: Vec<AffineFunction>,
    pub partition: PartitionIndex,
    /// Index of each region in the originally loaded solution.
    pub origin: Vec<usize>,
}

impl LiftedSolution {
    pub fn evaluate_sequential(&self, y: &[f64]) -> Option<SequentialHit> {
        sequential_min(&self.regions, y, |i| self.functions[i].eval(y))
    }
}
