//! Benchmark harness for black-box aerodynamic shape optimization.

pub mod analytics;
pub mod diagnostics;
pub mod optimizers;
pub mod problems;
pub mod rng;
pub mod space;

/// The guide's chapters, so their Rust snippets run under `cargo test`.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/design-spaces.md")]
    struct DesignSpaces;
    #[doc = include_str!("../../../book/src/tasks.md")]
    struct Tasks;
    #[doc = include_str!("../../../book/src/evaluators.md")]
    struct Evaluators;
    #[doc = include_str!("../../../book/src/optimizers.md")]
    struct Optimizers;
    #[doc = include_str!("../../../book/src/comparing.md")]
    struct Comparing;
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    struct Diagnostics;
}
