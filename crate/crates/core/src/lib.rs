//! Wentzell–Laplace eigenvalues on planar domains.
//!
//! The eigenproblem is `Δu = 0` in Ω with `-β Δ_τ u + ∂_n u = λ u` on ∂Ω.
//! The crate provides a boundary Galerkin solver over harmonic polynomials,
//! the isoperimetric-type upper bounds for `λ₁`, first and second order shape
//! derivatives at the disk, and the spherical-harmonic machinery behind the
//! three-dimensional trace formulas.

pub mod bounds;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry2d;
pub mod harmonics3d;
pub mod second_order;
pub mod shape_derivative;
pub mod trig;
pub mod wentzell_solver;

pub use error::{Error, Result};

/// Volume of the unit ball in dimension `d`.
pub fn omega(d: usize) -> f64 {
    // ω_d = 2π/d · ω_{d-2}, ω_0 = 1, ω_1 = 2
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * omega(d - 2),
    }
}
