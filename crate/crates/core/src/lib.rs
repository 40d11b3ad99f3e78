//! Pseudo-spectral solver for the two-dimensional Navier-Stokes equations with
//! horizontal viscosity only, on the channel `T x [0, 1]` with impermeable
//! walls, together with the verification machinery that checks the energy and
//! enstrophy bounds, elliptic estimates and functional inequalities the model
//! satisfies.
//!
//! The prognostic variables are the oscillating streamfunction (sine family in
//! y, no x-mean) and the mean shear profile (cosine family in y). Velocity is
//! derived, so incompressibility and `v = 0` at the walls hold by construction.

pub mod audit;
pub mod diagnostics;
pub mod elliptic;
pub mod flow;
pub mod spectral;
pub mod stepper;
