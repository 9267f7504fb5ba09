//! MGF-softmax: a softmax reformulation without max or division, evaluated
//! under a simulated leveled SIMD homomorphic scheme.
//!
//! The numerical modules are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the common double-precision instantiation.

pub mod baseline;
pub mod bench;
pub mod error;
pub mod error_analysis;
pub mod he_sim;
pub mod he_softmax;
pub mod mgf_core;
pub mod poly_approx;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Engine64 = he_sim::Engine<f64>;
pub type Engine32 = he_sim::Engine<f32>;
pub type Ciphertext64 = he_sim::Ciphertext<f64>;
pub type Ciphertext32 = he_sim::Ciphertext<f32>;
pub type PackedMatrix64 = he_softmax::PackedMatrix<f64>;
pub type AExp64 = poly_approx::AExp<f64>;
pub type ChebPoly64 = poly_approx::ChebPoly<f64>;
pub type DistStats64 = mgf_core::DistStats<f64>;
