//! Composable inductive programming engine.
//!
//! The crate compiles example-based specifications (input/output cases with
//! optional intermediate values and `use` references) into programs over a
//! small expression language, and drives a study pipeline that generates
//! random programs, decomposes them into steps, fuzzes each step into test
//! cases, regenerates the program from those cases and records how program
//! size relates to the number of steps and cases.
//!
//! Modules, bottom-up:
//!
//! - [`vm`]: values, instructions, program trees, interpreter, text form.
//! - [`seed`]: the 64-bit seed mixer every randomized component derives from.
//! - [`generator`]: budgeted random programs and the workability filter.
//! - [`decomposer`]: chain decomposition of a program and per-step fuzzing.
//! - [`synth`]: bottom-up enumerative synthesis and spec compilation.
//! - [`study`]: the end-to-end pipeline writing the results CSV.
//! - [`stats`]: summary statistics, transforms and correlation analysis.

pub mod decomposer;
pub mod generator;
pub mod seed;
pub mod stats;
pub mod study;
pub mod synth;
pub mod vm;
