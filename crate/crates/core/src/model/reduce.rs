//! Removal of regions whose function is never the strict minimiser.
//!
//! Region `i` is dropped only with a certificate: some kept region `j` contains
//! `P[i]` and `J[i] − J[j]` is nonnegative over a convex relaxation of the lifted
//! image of `P[i]`. The relaxation bounds each bilinear coordinate by interval
//! arithmetic and McCormick envelopes built from the coordinate bounds of `P[i]`.
//! Anything that cannot be certified is kept; merging handles it later.

use super::{AffineFunction, PwqSolution};
use crate::error::Result;
use crate::lp::{solve_lp, LinearProgram, LpOutcome};
use crate::polyhedra::Polyhedron;
use crate::tol;

/// Coefficient tolerance for treating two lifted functions as identical.
const TIE_TOL: f64 = 1e-12;

pub fn reduce(s: &PwqSolution) -> Result<PwqSolution> {
    let n = s.dim();
    let count = s.len();
    if count <= 1 {
        return Ok(s.clone());
    }
    let mut boxes = Vec::with_capacity(count);
    for p in s.regions() {
        let b: Result<Vec<(f64, f64)>> = (0..n).map(|i| p.coordinate_bounds(i)).collect();
        boxes.push(b?);
    }
    let lifted: Vec<AffineFunction> = s.functions().iter().map(|f| f.lift()).collect();

    let t = tol::feas();
    let mut removed = vec![false; count];
    for i in 0..count {
        // Empty input regions contribute nothing.
        if boxes[i].iter().any(|(lo, hi)| lo > hi) {
            removed[i] = true;
            continue;
        }
        for j in 0..count {
            if j == i || removed[j] {
                continue;
            }
            let inside_box = boxes[i]
                .iter()
                .zip(&boxes[j])
                .all(|((lo_i, hi_i), (lo_j, hi_j))| *lo_i >= lo_j - t && *hi_i <= hi_j + t);
            if !inside_box {
                continue;
            }
            let identical = lifted[i].coincides(&lifted[j], TIE_TOL);
            if identical && j > i {
                continue;
            }
            if !s.regions()[i].is_subset_of(&s.regions()[j])? {
                continue;
            }
            if identical || dominated(&s.regions()[i], &boxes[i], &lifted[i], &lifted[j])? {
                removed[i] = true;
                break;
            }
        }
    }
    let keep: Vec<usize> = (0..count).filter(|&i| !removed[i]).collect();
    Ok(s.select(&keep))
}

/// Certifies `J_i ≥ J_j` on `region` by minimising the lifted difference over a relaxation.
fn dominated(
    region: &Polyhedron,
    bounds: &[(f64, f64)],
    fi: &AffineFunction,
    fj: &AffineFunction,
) -> Result<bool> {
    let n = region.dim();
    let l = fi.d.len();
    let objective: Vec<f64> = fi.d.iter().zip(&fj.d).map(|(a, b)| a - b).collect();
    let offset = fi.e - fj.e;

    let mut lhs: Vec<f64> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut push = |coefs: &[(usize, f64)], b: f64| {
        let mut row = vec![0.0; l];
        for &(k, v) in coefs {
            row[k] += v;
        }
        lhs.extend_from_slice(&row);
        rhs.push(b);
    };
    for (a, b) in region.rows() {
        let coefs: Vec<(usize, f64)> = a.iter().copied().enumerate().collect();
        push(&coefs, b);
    }
    let mut col = n;
    for p in 0..n {
        for q in p..n {
            let (lp_, hp) = bounds[p];
            let (lq, hq) = bounds[q];
            let finite = lp_.is_finite() && hp.is_finite() && lq.is_finite() && hq.is_finite();
            if finite {
                let products = [lp_ * lq, lp_ * hq, hp * lq, hp * hq];
                let mut lo = products.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = products.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if p == q && lp_ <= 0.0 && hp >= 0.0 {
                    lo = 0.0;
                }
                push(&[(col, 1.0)], hi);
                push(&[(col, -1.0)], -lo);
                if p == q {
                    // Tangents below, secant above.
                    for a in [lp_, 0.5 * (lp_ + hp), hp] {
                        push(&[(col, -1.0), (p, 2.0 * a)], a * a);
                    }
                    push(&[(col, 1.0), (p, -(lp_ + hp))], -lp_ * hp);
                } else {
                    // McCormick envelope of x_p x_q.
                    push(&[(col, -1.0), (q, lp_), (p, lq)], lp_ * lq);
                    push(&[(col, -1.0), (q, hp), (p, hq)], hp * hq);
                    push(&[(col, 1.0), (q, -hp), (p, -lq)], -hp * lq);
                    push(&[(col, 1.0), (q, -lp_), (p, -hq)], -lp_ * hq);
                }
            } else if p == q {
                push(&[(col, -1.0)], 0.0);
            }
            col += 1;
        }
    }
    let lp = LinearProgram::new(objective, lhs, rhs)?;
    Ok(match solve_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => value + offset >= -tol::obj(),
        LpOutcome::Unbounded | LpOutcome::Infeasible => false,
    })
}
