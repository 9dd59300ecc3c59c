//! Ternary Analytic Hierarchy Process.
//!
//! Judgments are captured on a three-valued scale (equal, more important,
//! less important) realized numerically as `1`, `θ` and `1/θ`. From those
//! judgments the crate derives local priority vectors with consistency
//! statistics, synthesizes them through a goal / criteria / sub-criteria /
//! alternatives hierarchy, and analyses how the final ranking responds when a
//! single criterion's weight is moved between 0 and 1.
//!
//! The main entry points:
//!
//! - [`model`]: hierarchy, ternary scale and judgment storage.
//! - [`priority`]: principal eigenvector and geometric-mean prioritization, CI/CR.
//! - [`synthesis`]: global weights, alternative scores, hierarchical inconsistency.
//! - [`sensitivity`]: exact score lines, crossover points and rank reversals.
//! - [`document`], [`export`], [`fixture`]: model files, result export and the
//!   bundled information-security case with the search that produced it.
//!
//! With the default `parallel` feature, independent work (per-context
//! prioritization, per-criterion sensitivity, fixture search) runs on rayon.
//! Every such entry point also accepts [`Execution::Sequential`].

pub mod document;
pub mod exec;
pub mod export;
pub mod fixture;
pub mod matrix;
pub mod model;
pub mod priority;
pub mod sensitivity;
pub mod synthesis;

pub use document::{parse, parse_lenient, serialize, DocumentError, ModelDocument};
pub use exec::Execution;
pub use export::{export_results, export_sensitivity, ExportFormat};
pub use fixture::{fit_fixture, FitError, FitOptions, FitOutcome, FitTargets, Provenance};
pub use matrix::{ComparisonMatrix, MatrixError};
pub use model::{
    Context, ContextKind, DecisionModel, Level, ModelBuilder, ModelError, Node, NodeId, TernaryValue, Theta,
    ValidationIssue, ValidationReport,
};
pub use priority::{
    consistency_ratio, geometric_mean_priorities, principal_eigenvector, ConsistencyGate, Method, PowerIteration,
    PriorityError, PriorityVector, RandomIndexTable,
};
pub use sensitivity::{
    crossovers, perturb_weights, reversal_report, score_lines, Crossover, CrossoverSet, RankSegment, Ranking,
    ScoreLine, SensitivityError, SensitivityReport,
};
pub use synthesis::{synthesize, SolveOptions, SynthesisError, SynthesisResult};
