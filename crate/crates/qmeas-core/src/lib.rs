//! Core numerics for a classical driven Duffing oscillator that continuously
//! measures a quantum oscillator.
//!
//! The crate implements the coupled dynamical system
//!
//! * classical particle: `M Ẍ + B X³ − A X + λ x̄ = Λ cos(Ω t)` (optional
//!   damping `M γ Ẋ`),
//! * packet center / measurement record: `ẍ̄ + ω² x̄ + (λ/m) X = 0`,
//! * packet width: `δ̈ + δ̇/τ + (ω² + 1/4τ²) δ = ħ²/4m²δ³`,
//!
//! together with the Gaussian wave-packet layer built on top of it (density,
//! phase, guidance velocity, quantum potential, trajectory ensembles), the
//! leading-Lyapunov-exponent machinery used to quantify chaos of the coupled
//! system, a split-step grid propagator for the non-Hermitian measurement
//! Schrödinger equation that certifies the Gaussian reduction, and closed-form
//! stationary-resolution analysis.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) only switches float math to the platform intrinsics.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod dynamics;
pub mod integrator;
pub mod lyapunov;
mod math;
pub mod model;
pub mod pde;
pub mod stats;
pub mod wavepacket;

pub use dynamics::{simulate, HybridRhs, TrajectoryInterpolant};
pub use integrator::{OdeError, StepControl};
pub use model::{HybridParams, HybridState, ModelError, Trajectory};
