//! Numerical laboratory for a quantum dot coupled to a three-dimensional
//! continuum whose dot energy is swept adiabatically through the threshold.
//!
//! * [`formfactor`]: the coupling, reduced to its spectral measure `μ(λ)`.
//! * [`spectral`]: the Feshbach map, bound states, spectral density and
//!   stationary survival amplitudes.
//! * [`dynamics`]: time evolution through the pulse, by an exact scalar
//!   Volterra reduction and by a finite-mode oracle.
//! * [`harness`]: scenario configuration, sweeps, fits and result files.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` guards deliberately reject NaN

pub mod dynamics;
pub mod exec;
pub mod formfactor;
pub mod harness;
pub mod quadrature;
pub mod roots;
pub mod spectral;
