//! Strategy learning for parametric convex (mixed-integer) optimization.
//!
//! Given a family of optimization problems whose data depends on a parameter
//! vector `θ`, this crate discovers the map from `θ` to the optimal
//! *strategy* — the set of tight constraints at the optimum together with the
//! optimal values of the integer variables — and learns that map with
//! multiclass classifiers (classification trees with parallel or hyperplane
//! splits, and a feedforward network). Once trained, a predictor recovers an
//! optimal solution for a fresh `θ` by solving a small equality-constrained
//! reduced problem instead of the full program.
//!
//! The pipeline:
//!
//! 1. [`problem`] — model a parametric LP/QP (optionally mixed-integer) with
//!    affine parameter dependence and canonicalize it per `θ`.
//! 2. [`solver`] — reference solvers: dense simplex, primal active-set QP,
//!    branch-and-bound, plus the KKT-based reduced solve.
//! 3. [`strategy`] / [`explorer`] — sample `θ`, encode strategies, and stop
//!    once the Good-Turing estimate of unseen-strategy mass is small.
//! 4. [`learners`] — train tree or network classifiers with grid search.
//! 5. [`evaluate`] — infeasibility / suboptimality / accuracy / timing
//!    metrics on holdout samples.
//! 6. [`bench`] — seeded generators for the built-in problem families.

pub mod bench;
pub mod evaluate;
pub mod explorer;
pub mod learners;
mod linalg;
pub mod persist;
pub mod problem;
pub mod solver;
pub mod strategy;
