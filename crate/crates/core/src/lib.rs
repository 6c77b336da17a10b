//! Polynomial composition activations (PolyReLU, PolyNorm) for small
//! transformer language models, with the tooling around them: a tape-based
//! autodiff core, a byte-level trainer, representation analysis, cost
//! accounting, and exact constructions of PolyReLU networks.

pub mod activations;
pub mod analysis;
pub mod cli;
pub mod netconstruct;
pub mod tensor;
pub mod trainer;
pub mod transformer;
