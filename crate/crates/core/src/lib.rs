//! Numerical laboratory for conservative statistical structures on conformal
//! charts.
//!
//! The library is organized as a dependency chain: [`grid`] holds the chart
//! and finite-difference fields, [`tensor`] the conformal-metric calculus,
//! [`higgs`] the matrix realization and the induced connection, [`solver`] the
//! scalar field equation, and [`pipeline`] the jobs that tie them together.

pub mod grid;
pub mod higgs;
pub mod io;
pub mod pipeline;
pub mod solver;
pub mod tensor;

pub use grid::{Chart, ChartError, ChartKind, ComplexField, NodeClass, OneFormField, ScalarField};
pub use pipeline::{DiagnosticsReport, JobConfig, JobStatus, PipelineError, RunOutput};
pub use solver::{newton_solve, SolveReport, SolverConfig};
pub use tensor::{AbelianDifferential, ConformalMetric, CubicDifferential, Sym2Tensor, Sym3Tensor};
