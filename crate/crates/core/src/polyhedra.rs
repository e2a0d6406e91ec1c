//! Half-space polyhedra and the set operations the merge and tree stages need.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lp::{dot, solve_lp, LinearProgram, LpOutcome};
use crate::tol;

/// `{x : Hx ≤ K}` with every row scaled to unit norm.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    dim: usize,
    h: Vec<f64>,
    k: Vec<f64>,
}

/// An ordered collection of polyhedra sharing one dimension.
pub type PolyhedralSet = Vec<Polyhedron>;

/// Unit-normal hyperplane `aᵀy = b`, sign-normalised so the first nonzero entry of `a` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub a: Vec<f64>,
    pub b: f64,
}

/// Outcome of the Chebyshev-type interior LP.
#[derive(Debug, Clone, PartialEq)]
pub enum InteriorCertificate {
    Interior { radius: f64, center: Vec<f64> },
    Empty,
}

impl InteriorCertificate {
    pub fn radius(&self) -> Option<f64> {
        match self {
            InteriorCertificate::Interior { radius, .. } => Some(*radius),
            InteriorCertificate::Empty => None,
        }
    }

    /// True when the certificate proves a nonempty interior.
    pub fn is_full_dim(&self) -> bool {
        self.radius().is_some_and(|r| r > tol::int())
    }
}

const ZERO_ROW: f64 = 1e-14;

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl Polyhedron {
    /// Builds a polyhedron from rows of `H` and entries of `K`.
    ///
    /// Rows are scaled to unit norm. Zero rows with `K ≥ 0` are dropped; a zero
    /// row with `K < 0` yields the canonical empty polyhedron.
    pub fn new(dim: usize, rows: &[Vec<f64>], k: &[f64]) -> Result<Self> {
        if rows.len() != k.len() {
            return Err(Error::input(format!(
                "H has {} rows but K has {} entries",
                rows.len(),
                k.len()
            )));
        }
        let mut p = Polyhedron::whole_space(dim);
        for (row, &rhs) in rows.iter().zip(k) {
            if row.len() != dim {
                return Err(Error::dim(dim, row.len()));
            }
            if !row.iter().all(|v| v.is_finite()) || !rhs.is_finite() {
                return Err(Error::input("non-finite entry in polyhedron"));
            }
            p.push_row(row, rhs);
        }
        Ok(p)
    }

    /// Rebuilds a polyhedron from already-normalised rows, bit for bit.
    pub(crate) fn from_raw(dim: usize, h: Vec<f64>, k: Vec<f64>) -> Result<Self> {
        if h.len() != dim * k.len() {
            return Err(Error::input("polyhedron data has inconsistent length"));
        }
        Ok(Polyhedron { dim, h, k })
    }

    pub fn whole_space(dim: usize) -> Self {
        Polyhedron {
            dim,
            h: Vec::new(),
            k: Vec::new(),
        }
    }

    /// The canonical empty polyhedron `0ᵀx ≤ −1`.
    pub fn empty(dim: usize) -> Self {
        Polyhedron {
            dim,
            h: vec![0.0; dim],
            k: vec![-1.0],
        }
    }

    /// Axis-aligned box `lo ≤ x ≤ hi`.
    pub fn from_box(lo: &[f64], hi: &[f64]) -> Self {
        let dim = lo.len();
        let mut p = Polyhedron::whole_space(dim);
        let mut e = vec![0.0; dim];
        for i in 0..dim {
            e[i] = 1.0;
            p.push_row(&e, hi[i]);
            e[i] = -1.0;
            p.push_row(&e, -lo[i]);
            e[i] = 0.0;
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_rows(&self) -> usize {
        self.k.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.h[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.k[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.n_rows()).map(move |i| (self.row(i), self.k[i]))
    }

    pub fn is_canonical_empty(&self) -> bool {
        self.rows().any(|(a, b)| b < 0.0 && a.iter().all(|v| *v == 0.0))
    }

    /// Appends `aᵀx ≤ b`, normalising the row.
    pub fn push_row(&mut self, a: &[f64], b: f64) {
        debug_assert_eq!(a.len(), self.dim);
        if self.is_canonical_empty() {
            return;
        }
        let nrm = norm(a);
        if nrm <= ZERO_ROW {
            if b < 0.0 {
                *self = Polyhedron::empty(self.dim);
            }
            return;
        }
        self.h.extend(a.iter().map(|v| v / nrm));
        self.k.push(b / nrm);
    }

    /// Returns `self ∩ {aᵀx ≤ b}`.
    pub fn with_row(&self, a: &[f64], b: f64) -> Polyhedron {
        let mut p = self.clone();
        p.push_row(a, b);
        p
    }

    /// Stacks the constraints of both polyhedra.
    pub fn intersect(&self, other: &Polyhedron) -> Result<Polyhedron> {
        if self.dim != other.dim {
            return Err(Error::dim(self.dim, other.dim));
        }
        if other.is_canonical_empty() {
            return Ok(other.clone());
        }
        if self.is_canonical_empty() {
            return Ok(self.clone());
        }
        let mut h = self.h.clone();
        h.extend_from_slice(&other.h);
        let mut k = self.k.clone();
        k.extend_from_slice(&other.k);
        Ok(Polyhedron { dim: self.dim, h, k })
    }

    /// Closed membership test `Hx ≤ K + τ_feas`.
    pub fn contains(&self, x: &[f64]) -> bool {
        let t = tol::feas();
        self.rows().all(|(a, b)| dot(a, x) <= b + t)
    }

    /// Pads every row with zeros up to dimension `dim`.
    pub fn extend_dim(&self, dim: usize) -> Polyhedron {
        assert!(dim >= self.dim);
        let mut h = Vec::with_capacity(dim * self.n_rows());
        for (a, _) in self.rows() {
            h.extend_from_slice(a);
            h.extend(std::iter::repeat_n(0.0, dim - self.dim));
        }
        Polyhedron {
            dim,
            h,
            k: self.k.clone(),
        }
    }

    /// `max aᵀx` over the polyhedron: `+∞` when unbounded, `−∞` when empty.
    pub fn support(&self, a: &[f64]) -> Result<f64> {
        if a.len() != self.dim {
            return Err(Error::dim(self.dim, a.len()));
        }
        let lp = LinearProgram::new(
            a.iter().map(|v| -v).collect(),
            self.h.clone(),
            self.k.clone(),
        )?;
        Ok(match solve_lp(&lp)? {
            LpOutcome::Optimal { value, .. } => -value,
            LpOutcome::Unbounded => f64::INFINITY,
            LpOutcome::Infeasible => f64::NEG_INFINITY,
        })
    }

    /// Interval bounds of coordinate `i`; infinite where unbounded.
    pub fn coordinate_bounds(&self, i: usize) -> Result<(f64, f64)> {
        let mut e = vec![0.0; self.dim];
        e[i] = 1.0;
        let hi = self.support(&e)?;
        e[i] = -1.0;
        let lo = -self.support(&e)?;
        Ok((lo, hi))
    }

    /// Chebyshev-type certificate: `max t s.t. Hx + t‖H_row‖ ≤ K, t ≤ 1`.
    ///
    /// The cap keeps the LP bounded for the unbounded polyhedra produced by lifting.
    pub fn interior_certificate(&self) -> Result<InteriorCertificate> {
        if self.is_canonical_empty() {
            return Ok(InteriorCertificate::Empty);
        }
        let d = self.dim;
        let w = d + 1;
        let m = self.n_rows();
        let mut lhs = Vec::with_capacity(w * (m + 1));
        let mut rhs = Vec::with_capacity(m + 1);
        for (a, b) in self.rows() {
            lhs.extend_from_slice(a);
            lhs.push(norm(a));
            rhs.push(b);
        }
        lhs.extend(std::iter::repeat_n(0.0, d));
        lhs.push(1.0);
        rhs.push(1.0);
        let mut objective = vec![0.0; w];
        objective[d] = -1.0;
        let lp = LinearProgram::new(objective, lhs, rhs)?;
        match solve_lp(&lp)? {
            LpOutcome::Optimal { mut argmin, .. } => {
                let radius = argmin.pop().unwrap_or(0.0);
                if radius < -tol::feas() {
                    Ok(InteriorCertificate::Empty)
                } else {
                    Ok(InteriorCertificate::Interior {
                        radius: radius.max(0.0),
                        center: argmin,
                    })
                }
            }
            LpOutcome::Infeasible => Ok(InteriorCertificate::Empty),
            LpOutcome::Unbounded => Err(Error::Numerical(
                "interior certificate LP reported unbounded".into(),
            )),
        }
    }

    pub fn is_full_dim(&self) -> Result<bool> {
        Ok(self.interior_certificate()?.is_full_dim())
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(matches!(
            self.interior_certificate()?,
            InteriorCertificate::Empty
        ))
    }

    /// True when `self ⊆ other`, certified by one LP per row of `other`.
    pub fn is_subset_of(&self, other: &Polyhedron) -> Result<bool> {
        let t = tol::feas();
        for (a, b) in other.rows() {
            if self.support(a)? > b + t {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Whether two polyhedra share interior points.
pub fn overlaps(p1: &Polyhedron, p2: &Polyhedron) -> Result<bool> {
    p1.intersect(p2)?.is_full_dim()
}

/// Irredundant representation of the same point set.
pub fn remove_redundant(p: &Polyhedron) -> Result<Polyhedron> {
    if p.is_empty()? {
        return Ok(Polyhedron::empty(p.dim));
    }
    let d = p.dim;
    // Parallel duplicates: keep the tightest bound.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(p.n_rows());
    'outer: for (a, b) in p.rows() {
        for (ka, kb) in rows.iter_mut() {
            if ka.iter().zip(a).all(|(x, y)| (x - y).abs() <= 1e-12) {
                *kb = kb.min(b);
                continue 'outer;
            }
        }
        rows.push((a.to_vec(), b));
    }

    let t = tol::feas();
    let mut keep = vec![true; rows.len()];
    for i in 0..rows.len() {
        let mut lhs = Vec::with_capacity(d * rows.len());
        let mut rhs = Vec::with_capacity(rows.len());
        for (j, (a, b)) in rows.iter().enumerate() {
            if j != i && keep[j] {
                lhs.extend_from_slice(a);
                rhs.push(*b);
            }
        }
        let (a, b) = &rows[i];
        lhs.extend_from_slice(a);
        rhs.push(b + 1.0);
        let lp = LinearProgram::new(a.iter().map(|v| -v).collect(), lhs, rhs)?;
        if let LpOutcome::Optimal { value, .. } = solve_lp(&lp)? {
            if -value <= b + t {
                keep[i] = false;
            }
        }
    }
    let mut out = Polyhedron::whole_space(d);
    for ((a, b), kept) in rows.into_iter().zip(keep) {
        if kept {
            out.h.extend_from_slice(&a);
            out.k.push(b);
        }
    }
    Ok(out)
}

/// Closure of `p \ ∪q` as pairwise non-overlapping full-dimensional pieces.
///
/// Works through the elements of `q` in order: the part of the current piece
/// outside each facet of the first overlapping element is split off and
/// recursed on against the remaining elements; the part inside that element
/// is dropped.
pub fn region_diff(p: &Polyhedron, q: &[Polyhedron]) -> Result<PolyhedralSet> {
    for other in q {
        if other.dim != p.dim {
            return Err(Error::dim(p.dim, other.dim));
        }
    }
    if !p.is_full_dim()? {
        return Ok(Vec::new());
    }
    let mut relevant = Vec::with_capacity(q.len());
    for other in q {
        if overlaps(p, other)? {
            relevant.push(other);
        }
    }
    let mut pieces = Vec::new();
    diff_rec(p.clone(), &relevant, &mut pieces)?;
    pieces.iter().map(remove_redundant).collect()
}

fn diff_rec(p: Polyhedron, q: &[&Polyhedron], out: &mut PolyhedralSet) -> Result<()> {
    let mut idx = 0;
    while idx < q.len() && !overlaps(&p, q[idx])? {
        idx += 1;
    }
    if idx == q.len() {
        out.push(p);
        return Ok(());
    }
    let cover = q[idx];
    let rest = &q[idx + 1..];
    let mut cur = p;
    for (a, b) in cover.rows() {
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        let piece = cur.with_row(&neg, -b);
        if piece.is_full_dim()? {
            diff_rec(piece, rest, out)?;
        }
        cur.push_row(a, b);
    }
    Ok(())
}

impl Hyperplane {
    /// Canonical hyperplane through the facet `aᵀx = b` of a constraint row.
    /// Returns the hyperplane and whether the row's feasible side is the low side.
    pub fn from_row(a: &[f64], b: f64) -> Option<(Hyperplane, bool)> {
        let nrm = norm(a);
        if nrm <= ZERO_ROW {
            return None;
        }
        let first = a.iter().copied().find(|v| *v != 0.0)?;
        let s = if first > 0.0 { 1.0 } else { -1.0 };
        let mut h = Hyperplane {
            a: a.iter().map(|v| s * v / nrm).collect(),
            b: s * b / nrm,
        };
        // Normalised rows divide by 1.0 exactly; keep them bitwise.
        if nrm == 1.0 {
            h.a = a.iter().map(|v| s * v).collect();
            h.b = s * b;
        }
        Some((h, s > 0.0))
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// Number of nonzero coefficients.
    pub fn support(&self) -> usize {
        self.a.iter().filter(|v| **v != 0.0).count()
    }

    pub fn same_as(&self, other: &Hyperplane) -> bool {
        (self.b - other.b).abs() <= 1e-8
            && self
                .a
                .iter()
                .zip(&other.a)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt()
                <= 1e-8
    }

    /// `aᵀy − b`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        dot(&self.a, y) - self.b
    }
}

/// Deduplicated canonical facet hyperplanes of all elements, in first-seen order.
pub fn extract_hyperplanes(ps: &[Polyhedron]) -> Vec<Hyperplane> {
    let mut out: Vec<Hyperplane> = Vec::new();
    let mut buckets: HashMap<i64, Vec<usize>> = HashMap::new();
    for p in ps {
        if p.is_canonical_empty() {
            continue;
        }
        for (a, b) in p.rows() {
            let Some((h, _)) = Hyperplane::from_row(a, b) else {
                continue;
            };
            if find_hyperplane(&out, &buckets, &h).is_none() {
                let key = bucket_key(h.b);
                buckets.entry(key).or_default().push(out.len());
                out.push(h);
            }
        }
    }
    out
}

fn bucket_key(b: f64) -> i64 {
    (b * 1e6).round() as i64
}

fn find_hyperplane(
    list: &[Hyperplane],
    buckets: &HashMap<i64, Vec<usize>>,
    h: &Hyperplane,
) -> Option<usize> {
    let key = bucket_key(h.b);
    for k in [key - 1, key, key + 1] {
        if let Some(ids) = buckets.get(&k) {
            if let Some(&i) = ids.iter().find(|&&i| list[i].same_as(h)) {
                return Some(i);
            }
        }
    }
    None
}

/// Lookup structure over a deduplicated hyperplane list.
pub(crate) struct HyperplaneIndex<'a> {
    list: &'a [Hyperplane],
    buckets: HashMap<i64, Vec<usize>>,
}

impl<'a> HyperplaneIndex<'a> {
    pub(crate) fn new(list: &'a [Hyperplane]) -> Self {
        let mut buckets: HashMap<i64, Vec<usize>> = HashMap::new();
        for (i, h) in list.iter().enumerate() {
            buckets.entry(bucket_key(h.b)).or_default().push(i);
        }
        HyperplaneIndex { list, buckets }
    }

    pub(crate) fn find(&self, h: &Hyperplane) -> Option<usize> {
        find_hyperplane(self.list, &self.buckets, h)
    }
}
