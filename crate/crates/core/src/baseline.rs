//! Normalize-and-square softmax baseline with Goldschmidt division.
//!
//! `softmax(x/2^(j−1))_i = softmax(x/2^j)_i² / Σ_l softmax(x/2^j)_l²`, so an
//! approximation computed on the scaled-down input can be pushed back up by
//! `k` rounds of squaring and renormalizing. Every round needs a division,
//! which is what makes this pipeline deep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::he_sim::{Ciphertext, Engine};
use crate::he_softmax::{self, AutoBootGuard, HeSoftmaxOptions, PackedMatrix, SoftmaxReport};
use crate::poly_approx::{AExp, ExpApproxSpec, PlainArith, SlotArith};
use crate::scalar::Scalar;

fn default_exp_spec() -> ExpApproxSpec {
    ExpApproxSpec::chebyshev(15, 0)
}

fn default_inv_range() -> f64 {
    1.0
}

/// Configuration of the baseline pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    /// Number of normalize-and-square rounds.
    pub k: u32,
    /// Approximation of `exp` on the scaled input. Its own `k` should be 0.
    #[serde(default = "default_exp_spec")]
    pub exp_spec: ExpApproxSpec,
    /// Goldschmidt iterations per division. `None` picks
    /// `⌈log2 n⌉ + 3` for row length `n`, enough to converge for
    /// denominators down to `1/n`.
    #[serde(default)]
    pub gs_iters: Option<u32>,
    /// Bound `B` with denominators assumed in `(0, B]`.
    #[serde(default = "default_inv_range")]
    pub inv_range: f64,
}

impl BaselineSpec {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            exp_spec: default_exp_spec(),
            gs_iters: None,
            inv_range: default_inv_range(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParams("baseline needs k >= 1".into()));
        }
        if self.gs_iters == Some(0) {
            return Err(Error::InvalidParams("gs_iters must be >= 1".into()));
        }
        if !(self.inv_range > 0.0 && self.inv_range.is_finite()) {
            return Err(Error::InvalidParams(format!("inv_range {} must be positive", self.inv_range)));
        }
        self.exp_spec.validate()
    }

    pub fn gs_iters_for(&self, n: usize) -> u32 {
        self.gs_iters
            .unwrap_or_else(|| n.next_power_of_two().trailing_zeros() + 3)
    }

    /// `k ≈ ⌈log2 M − log2 ln n⌉`: rounds needed so that inputs in
    /// `[−M, 0]` shrink to a range where the softmax is far from one-hot.
    pub fn k_for_range(m: f64, n: usize) -> u32 {
        let v = (m.log2() - (n as f64).ln().log2()).ceil();
        v.max(1.0) as u32
    }
}

/// `gain / (c·v)` by Goldschmidt iteration, assuming `c·v ∈ (0, B]`.
///
/// With `y = c·v/B`: `a0 = gain·(2 − y)/B`, `b0 = 1 − y`, then
/// `b ← b²`, `a ← a·(1 + b)`. The relative error after `iters` steps is
/// `b0^(2^(iters+1))`. All constants ride on the first plaintext
/// multiplication; depth is `iters + 2`.
pub fn goldschmidt_scaled<T: Scalar, B: SlotArith<T>>(
    backend: &B,
    v: &B::Value,
    c: T,
    gain: T,
    range: T,
    iters: u32,
) -> Result<B::Value> {
    let y_coeff = c / range;
    let a = backend.mul_const(v, -gain * y_coeff / range)?;
    let mut a = backend.add_const(&a, gain * T::lit(2.0) / range)?;
    let b = backend.mul_const(v, -y_coeff)?;
    let mut b = backend.add_const(&b, T::one())?;
    for _ in 0..iters {
        b = backend.mul(&b, &b)?;
        let f = backend.add_const(&b, T::one())?;
        a = backend.mul(&a, &f)?;
    }
    Ok(a)
}

/// Plaintext reciprocal of every entry of `d`, each assumed in `(0, B]`.
pub fn goldschmidt_inverse_plain<T: Scalar>(d: &[T], spec: &BaselineSpec, iters: u32) -> Result<Vec<T>> {
    if let Some(bad) = d.iter().find(|v| !(**v > T::zero())) {
        return Err(Error::Domain(format!("goldschmidt input {bad} is not positive")));
    }
    goldschmidt_scaled(&PlainArith, &d.to_vec(), T::one(), T::one(), T::lit(spec.inv_range), iters)
}

/// Homomorphic reciprocal, slots assumed in `(0, B]`.
pub fn goldschmidt_inverse<T: Scalar>(
    engine: &Engine<T>,
    d: &Ciphertext<T>,
    spec: &BaselineSpec,
    iters: u32,
) -> Result<Ciphertext<T>> {
    goldschmidt_scaled(engine, d, T::one(), T::one(), T::lit(spec.inv_range), iters)
}

/// Plaintext normalize-and-square. `aexp = None` uses the exact `exp`; the
/// divisions are exact either way.
pub fn softmax_ns_plain<T: Scalar>(x: &[T], k: u32, aexp: Option<&AExp<T>>) -> Result<Vec<T>> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let inv = T::lit((-(k as f64)).exp2());
    let scaled: Vec<T> = x.iter().map(|&v| v * inv).collect();
    let mut p = match aexp {
        Some(a) => a.plain(&scaled),
        None => {
            let m = scaled.iter().copied().fold(T::neg_infinity(), T::max);
            scaled.iter().map(|&v| (v - m).exp()).collect()
        }
    };
    normalize(&mut p)?;
    for _ in 0..k {
        p.iter_mut().for_each(|v| *v = *v * *v);
        normalize(&mut p)?;
    }
    Ok(p)
}

fn normalize<T: Scalar>(p: &mut [T]) -> Result<()> {
    let s = p.iter().copied().fold(T::zero(), |a, b| a + b);
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Error::DegenerateInput("softmax denominator vanished".into()));
    }
    p.iter_mut().for_each(|v| *v = *v / s);
    Ok(())
}

/// The baseline as a sequence of slot operations over `streams` ciphertexts
/// (or plain vectors) sharing one row-sum reduction.
fn ns_program<T: Scalar, B: SlotArith<T>>(
    backend: &B,
    streams: &[B::Value],
    reduce: impl Fn(&[B::Value]) -> Result<B::Value>,
    aexp: &AExp<T>,
    spec: &BaselineSpec,
    n: usize,
) -> Result<Vec<B::Value>>
where
    B::Value: Clone,
{
    let iters = spec.gs_iters_for(n);
    let range = T::lit(spec.inv_range);
    let nf = T::from_usize_lossy(n);
    let scale = T::lit((-(spec.k as f64)).exp2());
    let e = streams
        .iter()
        .map(|s| aexp.eval_affine(backend, s, scale, T::zero()))
        .collect::<Result<Vec<_>>>()?;
    // row sum lies in (0, n]; divide by n to land in (0, 1]
    let sum = reduce(&e)?;
    let inv = goldschmidt_scaled(backend, &sum, T::one() / nf, T::one() / nf, range, iters)?;
    let mut p = e.iter().map(|v| backend.mul(v, &inv)).collect::<Result<Vec<_>>>()?;
    for _ in 0..spec.k {
        let sq = p.iter().map(|v| backend.mul(v, v)).collect::<Result<Vec<_>>>()?;
        let sum = reduce(&sq)?;
        let inv = goldschmidt_scaled(backend, &sum, T::one(), T::one(), range, iters)?;
        p = sq.iter().map(|v| backend.mul(v, &inv)).collect::<Result<Vec<_>>>()?;
    }
    Ok(p)
}

/// Plaintext mirror of [`he_softmax_baseline`] for one row, including the
/// Goldschmidt divisions.
pub fn baseline_mirror<T: Scalar>(x: &[T], spec: &BaselineSpec) -> Result<Vec<T>> {
    spec.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let aexp = spec.exp_spec.compile::<T>()?;
    let n = x.len();
    let reduce = |v: &[Vec<T>]| {
        let s = v[0].iter().copied().fold(T::zero(), |a, b| a + b);
        Ok(vec![s; n])
    };
    let out = ns_program(&PlainArith, &[x.to_vec()], reduce, &aexp, spec, n)?;
    Ok(out.into_iter().next().unwrap_or_default())
}

/// Homomorphic normalize-and-square softmax over a packed matrix.
pub fn he_softmax_baseline<T: Scalar>(
    engine: &Engine<T>,
    p: &PackedMatrix<T>,
    spec: &BaselineSpec,
    opts: HeSoftmaxOptions,
) -> Result<(PackedMatrix<T>, SoftmaxReport)> {
    spec.validate()?;
    let layout = *p.layout();
    if p.shape().1 != layout.cols {
        return Err(Error::Dimension(format!(
            "softmax dimension {} must be a power of two; pad rows only",
            p.shape().1
        )));
    }
    let aexp = spec.exp_spec.compile::<T>()?;
    let _guard = AutoBootGuard::new(engine, opts.auto_bootstrap);
    let before = engine.counters();
    let reduce = |v: &[Ciphertext<T>]| he_softmax::reduce_cts(engine, v, &layout);
    let out = ns_program(engine, p.ciphertexts(), reduce, &aexp, spec, layout.cols)?;
    let delta = engine.counters().since(&before);
    let depth = he_softmax::chain_depth(p, &out);
    let report = SoftmaxReport::assemble("baseline", &spec.exp_spec, spec.k, depth, delta, layout.t);
    Ok((p.with_cts(out), report))
}
