//! Numerical toolkit for (p,q)-calculus and the (p,q)-Baskakov-Beta operators.
//!
//! Layers, bottom up:
//!
//! * [`calculus`]: parameter pairs, (p,q)-numbers, factorials, Gamma, Beta,
//!   the power basis and the difference derivative.
//! * [`quadrature`]: finite and improper Jackson-type integrals with explicit
//!   truncation diagnostics.
//! * [`operators`]: the Baskakov basis and operator, the Baskakov-Beta
//!   operator and its closed-form moments.
//! * [`analysis`]: moduli of continuity, error bounds and convergence runs.
//! * [`experiment`]: config-driven runs that write CSV output.

pub mod analysis;
pub mod calculus;
pub mod error;
pub mod experiment;
pub mod function;
pub mod operators;
pub mod quadrature;

pub use calculus::{PQPair, TruncationPolicy};
pub use error::{Error, Result};
pub use function::{FunctionKind, FunctionSpec, NamedFunction};
pub use operators::{InnerIntegration, OperatorResult};
pub use quadrature::QuadratureResult;
