//! Random (modified) permutation matrices under central measures with
//! exponential decay, the scaling limits of their characteristic polynomials,
//! and Monte Carlo experiments probing the convergence.
//!
//! The crate is organized around the pipeline:
//!
//! * [`measures`] samples weight vectors (GEM / Poisson-Dirichlet or explicit
//!   sequences) and uniform points on the associated circles-plus-segment
//!   space;
//! * [`permutations`] grows coherent permutation sequences from those points
//!   and tracks cycle counts;
//! * [`wreath`] attaches unit-modulus entries, projects matrices down in size,
//!   and evaluates characteristic polynomials through the cycle-product
//!   formula;
//! * [`diophantine`] provides exact fractional parts `{alpha l}` for the
//!   shifted ratio;
//! * [`evaluator`] computes the finite-size ratios and their limiting entire
//!   functions;
//! * [`harness`] runs the statistical experiments and writes reports.

pub mod diophantine;
pub mod evaluator;
pub mod harness;
pub mod measures;
pub mod permutations;
pub mod rng;
pub mod stats;
pub mod wreath;

pub use diophantine::{AlphaFixedPoint, ContinuedFraction, NamedIrrational};
pub use measures::{DecayCertificate, PointLocation, SpaceLayout, WeightVector};
pub use permutations::{CycleCounts, GrowingPermutation, Permutation};
pub use rng::SplitMix64;
pub use wreath::{CoupledMatrixChain, CycleMarks, ModifiedPermMatrix};
