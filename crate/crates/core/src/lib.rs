//! Fast online evaluation of piecewise quadratic value functions.
//!
//! Parametric mixed-integer QPs yield several overlapping polyhedral partitions,
//! each carrying its own quadratic value function; evaluating the optimum online
//! means locating the point in every partition and comparing values. This crate
//! lifts the quadratics to affine functions in a higher-dimensional space, merges
//! overlapping partitions there so fewer comparisons remain, and compiles one
//! binary search tree per remaining partition.
//!
//! ```
//! use lifteval::{compile, evaluate, example_1d, CompileOptions, MergeDepth};
//!
//! let s = example_1d();
//! let (e, _log) = compile(&s, &CompileOptions { depth: MergeDepth::Full, ..Default::default() }).unwrap();
//! assert_eq!(e.n_trees(), 1);
//! let r = evaluate(&e, &[0.5]).unwrap().unwrap();
//! assert!((r.value - 0.5).abs() < 1e-12);
//! ```

pub mod bench;
pub mod error;
pub mod generate;
pub mod lp;
pub mod merge;
pub mod model;
pub mod pipeline;
pub mod polyhedra;
pub mod tol;
pub mod tree;

pub use bench::{run_bench, BenchConfig, BenchReport, BenchRow, BenchTimings};
pub use error::{Error, Result};
pub use generate::{example_1d, generate, GeneratorSpec};
pub use lp::{solve_lp, LinearProgram, LpBackend, LpOutcome};
pub use merge::{merge, merge_all, merge_pairwise, merge_pairwise_greedy, MergedSolution};
pub use model::{
    lift_point, lift_solution, lifted_dim, read_solution, reduce, write_solution,
    AffineFunction, ControlLaw, LiftedSolution, PartitionIndex, PwqSolution, QuadraticFunction,
};
pub use pipeline::{compile, CompileLog, CompileOptions, MergeDepth};
pub use polyhedra::{overlaps, region_diff, Hyperplane, PolyhedralSet, Polyhedron};
pub use tol::Tolerances;
pub use tree::{
    evaluate, multi_tree, predict_ops, read_evaluator, write_evaluator, CompiledEvaluator,
    Evaluation, OpCountModel, OpsPrediction,
};
