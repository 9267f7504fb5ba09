//! Polynomial approximations of `exp` with plaintext and ciphertext
//! evaluators and exact depth reporting.

pub mod aexp;
pub mod arith;
pub mod chebyshev;
pub mod ps;

pub use aexp::{preset, AExp, ExpApproxSpec, PRESET_NAMES};
pub use arith::{PlainArith, SlotArith};
pub use chebyshev::ChebPoly;

use crate::error::Result;
use crate::he_sim::{Ciphertext, Engine};
use crate::scalar::Scalar;

/// Evaluates a Chebyshev polynomial on a ciphertext: one level for the
/// affine map onto `[-1, 1]`, then `⌈log2(d+1)⌉` levels of
/// baby-step/giant-step evaluation. A constant polynomial takes the
/// single-multiplication path.
pub fn eval_poly_ps<T: Scalar>(engine: &Engine<T>, poly: &ChebPoly<T>, x: &Ciphertext<T>) -> Result<Ciphertext<T>> {
    if poly.degree() == 0 {
        let zero = engine.pmult_scalar(x, T::zero())?;
        return engine.add_plain(&zero, crate::he_sim::Plain::Scalar(poly.coeffs()[0]));
    }
    let (a, b) = poly.to_unit();
    let u = engine.pmult_scalar(x, T::lit(a))?;
    let u = engine.add_plain(&u, crate::he_sim::Plain::Scalar(T::lit(b)))?;
    ps::evaluate(engine, ps::Basis::Chebyshev, poly.coeffs(), &u)
}
