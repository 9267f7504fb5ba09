//! Homomorphic MGF-softmax: gap-strided column-major packing, rotate-and-add
//! row reductions and the three-step evaluation (mean, variance term,
//! exponential).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::he_sim::{Ciphertext, Engine, OpCounters};
use crate::mgf_core::{self, Family};
use crate::poly_approx::{AExp, ExpApproxSpec};
use crate::scalar::Scalar;

/// Packing geometry for an `N1 × N2` matrix over `s`-slot ciphertexts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    /// Padded row count `N1`.
    pub rows: usize,
    /// Padded column count `N2`.
    pub cols: usize,
    pub slots: usize,
    /// Ciphertext count `t = ⌈N1·N2 / s⌉`.
    pub t: usize,
    /// Stride between same-row elements, `g = t·s / N2`.
    pub gap: usize,
}

impl Layout {
    pub fn new(rows: usize, cols: usize, slots: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension("matrix must have at least one row and column".into()));
        }
        if !slots.is_power_of_two() {
            return Err(Error::InvalidParams(format!("slot count {slots} is not a power of two")));
        }
        let rows = rows.next_power_of_two();
        let cols = cols.next_power_of_two();
        let t = (rows * cols).div_ceil(slots);
        Ok(Self {
            rows,
            cols,
            slots,
            t,
            gap: t * slots / cols,
        })
    }

    /// `(ciphertext, slot)` holding `A[n1, n2]`: `i = ⌊n2·g / s⌋`,
    /// `j = n1 + (n2·g mod s)`. Read as the linear position `n2·g + n1` over
    /// the concatenated slots, which coincides with the two-part formula
    /// whenever `N1 ≤ s` and stays injective when a single column spans
    /// several ciphertexts.
    pub fn position(&self, n1: usize, n2: usize) -> (usize, usize) {
        let p = n2 * self.gap + n1;
        (p / self.slots, p % self.slots)
    }

    /// Number of column blocks per ciphertext, `s / g = N2 / t`.
    pub fn blocks(&self) -> usize {
        self.slots / self.gap.min(self.slots)
    }

    /// Row reductions need every row to stay inside one slot offset.
    pub fn supports_row_reduction(&self) -> bool {
        self.t <= self.cols
    }
}

/// A matrix encrypted under [`Layout`].
#[derive(Clone, Debug)]
pub struct PackedMatrix<T> {
    layout: Layout,
    orig_rows: usize,
    orig_cols: usize,
    cts: Vec<Ciphertext<T>>,
}

impl<T: Scalar> PackedMatrix<T> {
    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn ciphertexts(&self) -> &[Ciphertext<T>] {
        &self.cts
    }

    /// Unpadded `(rows, cols)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.orig_rows, self.orig_cols)
    }

    pub(crate) fn with_cts(&self, cts: Vec<Ciphertext<T>>) -> Self {
        Self {
            layout: self.layout,
            orig_rows: self.orig_rows,
            orig_cols: self.orig_cols,
            cts,
        }
    }
}

fn matrix_shape<T>(a: &[Vec<T>]) -> Result<(usize, usize)> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("empty matrix".into()));
    }
    if a.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok((rows, cols))
}

/// Encrypts `a` (row-major) with zero padding up to powers of two.
pub fn pack<T: Scalar>(engine: &Engine<T>, a: &[Vec<T>]) -> Result<PackedMatrix<T>> {
    let (rows, cols) = matrix_shape(a)?;
    let layout = Layout::new(rows, cols, engine.slot_count())?;
    let mut buffers = vec![vec![T::zero(); layout.slots]; layout.t];
    for (n1, row) in a.iter().enumerate() {
        for (n2, &v) in row.iter().enumerate() {
            let (i, j) = layout.position(n1, n2);
            buffers[i][j] = v;
        }
    }
    let cts = buffers
        .iter()
        .map(|b| engine.encrypt(b))
        .collect::<Result<Vec<_>>>()?;
    Ok(PackedMatrix {
        layout,
        orig_rows: rows,
        orig_cols: cols,
        cts,
    })
}

/// Decrypts and drops the padding.
pub fn unpack<T: Scalar>(engine: &Engine<T>, p: &PackedMatrix<T>) -> Vec<Vec<T>> {
    let slots: Vec<Vec<T>> = p.cts.iter().map(|c| engine.decrypt(c)).collect();
    (0..p.orig_rows)
        .map(|n1| {
            (0..p.orig_cols)
                .map(|n2| {
                    let (i, j) = p.layout.position(n1, n2);
                    slots[i][j]
                })
                .collect()
        })
        .collect()
}

pub(crate) fn reduce_cts<T: Scalar>(engine: &Engine<T>, cts: &[Ciphertext<T>], layout: &Layout) -> Result<Ciphertext<T>> {
    if !layout.supports_row_reduction() {
        return Err(Error::Dimension(format!(
            "row reduction needs N1 <= s (N1 = {}, s = {})",
            layout.rows, layout.slots
        )));
    }
    let mut acc = cts[0].clone();
    for ct in &cts[1..] {
        acc = engine.add(&acc, ct)?;
    }
    let mut stride = layout.gap;
    while stride < layout.slots {
        let r = engine.rotate(&acc, stride as i64)?;
        acc = engine.add(&acc, &r)?;
        stride *= 2;
    }
    Ok(acc)
}

/// Row sums, replicated: slot `n1 + c·g` holds `Σ_{n2} A[n1, n2]` for every
/// block `c`. Uses `log2(N2/t)` rotations and no levels.
pub fn reduce_rows<T: Scalar>(engine: &Engine<T>, p: &PackedMatrix<T>) -> Result<Ciphertext<T>> {
    reduce_cts(engine, &p.cts, &p.layout)
}

/// Operation tallies of one softmax evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxReport {
    pub method: String,
    pub variant: String,
    pub k: u32,
    /// Longest chain of level-consuming operations from input to output.
    pub depth: u32,
    pub add: u64,
    pub pmult: u64,
    pub cmult: u64,
    pub rot: u64,
    pub boot: u64,
    /// Ciphertext count `t`.
    pub streams: usize,
    /// Totals divided by `streams`.
    pub cmult_per_stream: u64,
    pub boot_per_stream: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub spec: Option<ExpApproxSpec>,
}

impl SoftmaxReport {
    pub(crate) fn assemble(
        method: &str,
        spec: &ExpApproxSpec,
        k: u32,
        depth: u32,
        delta: OpCounters,
        streams: usize,
    ) -> Self {
        let per = |v: u64| v.div_ceil(streams as u64);
        Self {
            method: method.to_string(),
            variant: spec.variant_name().to_string(),
            k,
            depth,
            add: delta.n_add,
            pmult: delta.n_pmult,
            cmult: delta.n_cmult,
            rot: delta.n_rot,
            boot: delta.n_boot,
            streams,
            cmult_per_stream: per(delta.n_cmult),
            boot_per_stream: per(delta.n_boot),
            spec: Some(spec.clone()),
        }
    }

    pub fn counters(&self) -> OpCounters {
        OpCounters {
            n_add: self.add,
            n_pmult: self.pmult,
            n_cmult: self.cmult,
            n_rot: self.rot,
            n_boot: self.boot,
            depth_consumed: self.depth,
        }
    }
}

/// Evaluation switches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeSoftmaxOptions {
    /// Refresh ciphertexts whose level reaches zero.
    pub auto_bootstrap: bool,
}

impl Default for HeSoftmaxOptions {
    fn default() -> Self {
        Self { auto_bootstrap: true }
    }
}

pub(crate) struct AutoBootGuard<'e, T: Scalar> {
    engine: &'e Engine<T>,
    prev: bool,
}

impl<'e, T: Scalar> AutoBootGuard<'e, T> {
    pub(crate) fn new(engine: &'e Engine<T>, on: bool) -> Self {
        let prev = engine.auto_bootstrap();
        engine.set_auto_bootstrap(on);
        Self { engine, prev }
    }
}

impl<T: Scalar> Drop for AutoBootGuard<'_, T> {
    fn drop(&mut self) {
        self.engine.set_auto_bootstrap(self.prev);
    }
}

pub(crate) fn chain_depth<T: Scalar>(input: &PackedMatrix<T>, out: &[Ciphertext<T>]) -> u32 {
    let base = input.cts.iter().map(Ciphertext::depth).min().unwrap_or(0);
    out.iter().map(|c| c.depth() - base).max().unwrap_or(0)
}

/// Row-wise MGF-softmax (Gaussian instantiation) on a packed matrix.
///
/// Scalar schedule, with `S` the replicated row sum and `N = N2`:
///
/// 1. `c = N·x − S = N(x − μ)`: integer multiply, no level.
/// 2. `V = rowsum(c²) = N³σ²`: the only level spent before `exp`.
/// 3. `z = 2N²·c − V`: integer multiply, no level. Then
///    `x − μ − σ²/2 − ln N = z / (2N³) − ln N`, and the factor `1/(2N³)`,
///    the `ln N` offset and the `1/2^k` domain scaling are folded into the
///    first plaintext multiplication inside the exponential.
///
/// Depth is therefore `1 + spec.depth()`.
pub fn he_mgf_softmax<T: Scalar>(
    engine: &Engine<T>,
    p: &PackedMatrix<T>,
    aexp: &AExp<T>,
    family: Family,
    opts: HeSoftmaxOptions,
) -> Result<(PackedMatrix<T>, SoftmaxReport)> {
    if family != Family::Gaussian {
        return Err(Error::NonGaussianFamily(family));
    }
    if p.orig_cols != p.layout.cols {
        return Err(Error::Dimension(format!(
            "softmax dimension {} must be a power of two; pad rows only",
            p.orig_cols
        )));
    }
    let _guard = AutoBootGuard::new(engine, opts.auto_bootstrap);
    let before = engine.counters();
    let n = p.layout.cols;
    let n_i = n as i64;

    let row_sum = reduce_rows(engine, p)?;
    let centered = p
        .cts
        .par_iter()
        .map(|ct| {
            let scaled = engine.pmult_int(ct, n_i)?;
            engine.sub(&scaled, &row_sum)
        })
        .collect::<Result<Vec<_>>>()?;
    let squares = centered
        .par_iter()
        .map(|c| engine.square(c))
        .collect::<Result<Vec<_>>>()?;
    let var_sum = reduce_cts(engine, &squares, &p.layout)?;

    let nf = T::from_usize_lossy(n);
    let scale = T::one() / (T::lit(2.0) * nf * nf * nf);
    let offset = -nf.ln();
    let out = centered
        .par_iter()
        .map(|c| {
            let z = engine.pmult_int(c, 2 * n_i * n_i)?;
            let z = engine.sub(&z, &var_sum)?;
            aexp.eval_affine(engine, &z, scale, offset)
        })
        .collect::<Result<Vec<_>>>()?;

    let delta = engine.counters().since(&before);
    let depth = chain_depth(p, &out);
    let report = SoftmaxReport::assemble("mgf", aexp.spec(), aexp.spec().k(), depth, delta, p.layout.t);
    Ok((p.with_cts(out), report))
}

/// Plaintext mirror of [`he_mgf_softmax`]: per row, Gaussian statistics and
/// `AExp(x − μ − σ²/2 − ln n)` through the same approximation.
pub fn plain_mirror<T: Scalar>(a: &[Vec<T>], aexp: &AExp<T>) -> Result<Vec<Vec<T>>> {
    a.iter()
        .map(|row| {
            let shift = mgf_core::mgf_shift(row, Family::Gaussian)?;
            let y: Vec<T> = row.iter().map(|&v| v - shift).collect();
            Ok(aexp.plain(&y))
        })
        .collect()
}

/// Table-style depth of the full pipeline for a given approximation.
pub fn expected_depth(spec: &ExpApproxSpec) -> u32 {
    spec.depth() + 1
}
