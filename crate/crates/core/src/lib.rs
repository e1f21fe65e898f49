//! Standing waves of the focusing nonlinear Schrödinger equation on metric graphs.
//!
//! The crate covers graph models with Neumann–Kirchhoff, δ, δ′ and weighted
//! Kirchhoff vertex couplings, a finite-difference discretization that keeps
//! the discrete energy variational, closed-form solitons and elliptic
//! profiles, the phase-plane period function, large-mass Dirichlet-to-Neumann
//! asymptotics, Newton continuation, Morse-index stability verdicts,
//! conservative time stepping and a normalized gradient flow for ground states.

pub mod analytic;
pub mod arrow;
pub mod builders;
pub mod discrete;
pub mod dtn;
pub mod elliptic;
pub mod error;
pub mod evolve;
pub mod function;
pub mod functional;
pub mod graph;
pub mod groundstate;
pub mod io;
pub mod operators;
pub mod period;
pub mod quad;
pub mod solver;
pub mod stability;

pub use error::{Error, Result};
pub use function::GraphFunction;
pub use graph::{Edge, MetricGraph, Vertex, VertexCondition};

/// Default truncation length for unbounded edges when no frequency is in play.
pub const DEFAULT_TRUNCATION: f64 = 40.0;

/// Truncation length of unbounded edges for a wave of frequency `omega`.
pub fn truncation_length(omega: Option<f64>) -> f64 {
    match omega {
        Some(w) if w < 0.0 => DEFAULT_TRUNCATION.max(12.0 / (-w).sqrt()),
        _ => DEFAULT_TRUNCATION,
    }
}
