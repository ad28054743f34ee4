//! Safety verification of a small imperative language through constrained
//! Horn clauses.
//!
//! A program is encoded as an interpreter in constrained Horn clauses, the
//! interpreter is specialized away to obtain verification conditions, the
//! conditions are specialized again with polyhedral generalization to
//! propagate constraints, and an interpolating tabled solver decides the
//! result. When the solver gives up, the clauses are reversed and the
//! propagation and solving steps are repeated.
//!
//! ```
//! use specint::driver::{verify_source, PipelineConfig, Source};
//!
//! let src = "int x = 1; int y = 0; while (*) { x = x + y; y = y + 1; } assert(x >= y);";
//! let report = verify_source(Source::Imp(src.into()), &PipelineConfig::default()).unwrap();
//! assert_eq!(report.verdict.name(), "SAFE");
//! ```

pub mod chc;
pub mod driver;
pub mod frontend;
pub mod ihcs;
pub mod polyhedra;
pub mod reversal;
pub mod specializer;
pub mod terms;

// The guide's snippets run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/polyhedra.md")]
    mod polyhedra {}
    #[doc = include_str!("../../../book/src/clauses.md")]
    mod clauses {}
    #[doc = include_str!("../../../book/src/frontend.md")]
    mod frontend {}
    #[doc = include_str!("../../../book/src/specialization.md")]
    mod specialization {}
    #[doc = include_str!("../../../book/src/reversal.md")]
    mod reversal {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
}
