//! Synthetic instances: overlapping grid partitions of a common box with random
//! quadratic value functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PartitionIndex, PwqSolution, QuadraticFunction};
use crate::polyhedra::Polyhedron;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub n_part: usize,
    /// Cells per axis in every partition.
    pub grid: usize,
    pub seed: u64,
    /// Entries of `A` are drawn from `[−curvature, curvature]`.
    pub curvature: f64,
    /// Entries of `B` are drawn from `[−linear, linear]`.
    pub linear: f64,
    /// `C` is drawn from `[−constant, constant]`.
    pub constant: f64,
    /// Interior grid lines of partition `k` move by `shift·(k−1)/n_part` cells.
    /// Zero gives identical grids.
    pub shift: f64,
    /// The common box is `[−half_width, half_width]ⁿ`.
    pub half_width: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n: 2,
            n_part: 2,
            grid: 2,
            seed: 0,
            curvature: 1.0,
            linear: 1.0,
            constant: 1.0,
            shift: 0.0,
            half_width: 1.0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_part == 0 || self.grid == 0 {
            return Err(Error::input("n, n_part and grid must be positive"));
        }
        let ranges = [self.curvature, self.linear, self.constant];
        if ranges.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::input("coefficient ranges must be finite and nonnegative"));
        }
        if !(0.0..1.0).contains(&self.shift) {
            return Err(Error::input("shift must lie in [0, 1)"));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::input("half_width must be positive"));
        }
        let cells = (self.grid as f64).powi(self.n as i32) * self.n_part as f64;
        if cells > 1e6 {
            return Err(Error::input("instance would exceed 10⁶ regions"));
        }
        Ok(())
    }

    /// Breakpoints along one axis for partition `k` (zero-based).
    fn breakpoints(&self, k: usize) -> Vec<f64> {
        let w = self.half_width;
        let h = 2.0 * w / self.grid as f64;
        let s = self.shift * k as f64 / self.n_part as f64;
        let mut b = vec![-w];
        b.extend((1..self.grid).map(|j| -w + (j as f64 + s) * h));
        b.push(w);
        b
    }
}

fn sample(rng: &mut ChaCha8Rng, r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else {
        rng.gen_range(-r..=r)
    }
}

/// Deterministic in `spec`: the same spec always yields the same instance.
pub fn generate(spec: &GeneratorSpec) -> Result<PwqSolution> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut regions = Vec::new();
    let mut functions = Vec::new();
    let mut labels = Vec::new();
    for k in 0..spec.n_part {
        let bp = spec.breakpoints(k);
        let cells = spec.grid.pow(n as u32);
        for c in 0..cells {
            let (mut lo, mut hi) = (vec![0.0; n], vec![0.0; n]);
            let mut rest = c;
            for d in 0..n {
                let j = rest % spec.grid;
                rest /= spec.grid;
                lo[d] = bp[j];
                hi[d] = bp[j + 1];
            }
            regions.push(Polyhedron::from_box(&lo, &hi));
            let mut a = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i..n {
                    let v = sample(&mut rng, spec.curvature);
                    a[i][j] = v;
                    a[j][i] = v;
                }
            }
            let b = (0..n).map(|_| sample(&mut rng, spec.linear)).collect();
            let c = sample(&mut rng, spec.constant);
            functions.push(QuadraticFunction::new(&a, b, c)?);
            labels.push(k + 1);
        }
    }
    PwqSolution::new(n, regions, functions, PartitionIndex::new(labels)?, None)
}

/// Two overlapping one-region partitions: `x² + 1` on `|x| ≤ 2` and `2x²` on `|x| ≤ 3`.
pub fn example_1d() -> PwqSolution {
    let q = |a: f64, c: f64| QuadraticFunction::new(&[vec![a]], vec![0.0], c).expect("valid quadratic");
    PwqSolution::new(
        1,
        vec![
            Polyhedron::from_box(&[-2.0], &[2.0]),
            Polyhedron::from_box(&[-3.0], &[3.0]),
        ],
        vec![q(1.0, 1.0), q(2.0, 0.0)],
        PartitionIndex::new(vec![1, 2]).expect("valid labels"),
        None,
    )
    .expect("valid example")
}
