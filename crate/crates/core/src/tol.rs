//! Process-wide numerical tolerances.
//!
//! Every region classification in the crate reads from the same ladder, so a
//! polyhedron that is "nonempty" for the merge step is also nonempty for the
//! tree builder. Values can be overridden once at startup (the CLI reads them
//! from the environment) and are read lock-free afterwards.

use std::sync::atomic::{AtomicU64, Ordering};

/// Default feasibility tolerance for constraint residuals.
pub const DEFAULT_FEAS: f64 = 1e-9;
/// Default radius threshold certifying a nonempty interior.
pub const DEFAULT_INT: f64 = 1e-7;
/// Default objective tolerance of the LP solver.
pub const DEFAULT_OBJ: f64 = 1e-8;

static FEAS: AtomicU64 = AtomicU64::new(0x3E11_2E0B_E826_D695); // 1e-9
static INT: AtomicU64 = AtomicU64::new(0x3E7A_D7F2_9ABC_AF48); // 1e-7
static OBJ: AtomicU64 = AtomicU64::new(0x3E45_798E_E230_8C3A); // 1e-8

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feas: f64,
    pub int: f64,
    pub obj: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feas: DEFAULT_FEAS,
            int: DEFAULT_INT,
            obj: DEFAULT_OBJ,
        }
    }
}

impl Tolerances {
    /// Currently active tolerances.
    pub fn current() -> Self {
        Tolerances {
            feas: feas(),
            int: int(),
            obj: obj(),
        }
    }

    /// Install these tolerances globally.
    pub fn install(self) {
        FEAS.store(self.feas.to_bits(), Ordering::Relaxed);
        INT.store(self.int.to_bits(), Ordering::Relaxed);
        OBJ.store(self.obj.to_bits(), Ordering::Relaxed);
    }
}

#[inline]
pub fn feas() -> f64 {
    f64::from_bits(FEAS.load(Ordering::Relaxed))
}

#[inline]
pub fn int() -> f64 {
    f64::from_bits(INT.load(Ordering::Relaxed))
}

#[inline]
pub fn obj() -> f64 {
    f64::from_bits(OBJ.load(Ordering::Relaxed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_patterns_match_defaults() {
        assert_eq!(f64::from_bits(0x3E11_2E0B_E826_D695), DEFAULT_FEAS);
        assert_eq!(f64::from_bits(0x3E7A_D7F2_9ABC_AF48), DEFAULT_INT);
        assert_eq!(f64::from_bits(0x3E45_798E_E230_8C3A), DEFAULT_OBJ);
    }
}
