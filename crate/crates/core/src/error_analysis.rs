//! How far MGF-softmax sits from softmax: the relative error `η`, its
//! normal-approximation tail probability and Monte-Carlo checks of both.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{Error, Result};
use crate::mgf_core::{self, Family};
use crate::poly_approx::ExpApproxSpec;
use crate::scalar::Scalar;

/// Generator used by every Monte-Carlo routine here.
pub const RNG_NAME: &str = "ChaCha8Rng";

const CHUNK: usize = 1024;

/// `η = |1 − mean(e^{x_i}) / M_X(1)|`, with `M_X(1)` from the fitted family.
pub fn relative_error<T: Scalar>(x: &[T], family: Family) -> Result<T> {
    let stats = mgf_core::estimate_stats(x, family)?;
    let cgf = mgf_core::cgf_at_one(&stats)?;
    Ok(ratio_error(x, cgf))
}

fn ratio_error<T: Scalar>(x: &[T], log_m: T) -> T {
    let ratio = x.iter().map(|&v| (v - log_m).exp()).fold(T::zero(), |a, b| a + b)
        / T::from_usize_lossy(x.len());
    (T::one() - ratio).abs()
}

/// The same `η` as `‖softmax − softmax_MGF‖∞ / ‖softmax‖∞`.
pub fn relative_error_inf_norm<T: Scalar>(x: &[T], family: Family) -> Result<T> {
    let exact = mgf_core::softmax_exact(x)?;
    let approx = mgf_core::mgf_softmax_plain(x, family)?;
    let num = exact
        .iter()
        .zip(&approx)
        .map(|(a, b)| (*a - *b).abs())
        .fold(T::zero(), T::max);
    let den = exact.iter().copied().fold(T::zero(), T::max);
    Ok(num / den)
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// A tail probability plus a flag for the degenerate `σ_Y ≤ 0` case.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailProbability {
    pub p: f64,
    pub degenerate: bool,
}

/// `P(η ≥ δ) ≈ 2(1 − Φ(δ·μ_Y·√n / σ_Y))` for `Y = e^X`.
pub fn p_eta_analytic(delta: f64, n: usize, mu_y: f64, sigma_y: f64) -> Result<TailProbability> {
    if !(delta >= 0.0) || n == 0 {
        return Err(Error::InvalidParams(format!("need delta >= 0 and n >= 1, got {delta}, {n}")));
    }
    if !(sigma_y > 0.0) {
        let p = if delta > 0.0 { 0.0 } else { 1.0 };
        return Ok(TailProbability { p, degenerate: true });
    }
    let z = delta * mu_y * (n as f64).sqrt() / sigma_y;
    Ok(TailProbability {
        p: erfc(z / std::f64::consts::SQRT_2),
        degenerate: false,
    })
}

/// Log-normal moments `(μ_Y, σ_Y)` of `Y = e^X`, `X ~ N(μ, σ²)`.
pub fn lognormal_moments(mu: f64, sigma: f64) -> (f64, f64) {
    let s2 = sigma * sigma;
    let mean = (mu + 0.5 * s2).exp();
    (mean, mean * s2.exp_m1().sqrt())
}

/// Gaussian inputs: `σ_Y / μ_Y = √(e^{σ²} − 1)`, independent of the mean.
pub fn p_eta_gaussian(delta: f64, n: usize, sigma: f64) -> Result<TailProbability> {
    let (mu_y, sigma_y) = lognormal_moments(0.0, sigma);
    p_eta_analytic(delta, n, mu_y, sigma_y)
}

/// Which `M_X(1)` the Monte-Carlo trials compare against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum McMode {
    /// The generating distribution's `M_X(1)`; isolates sample-mean
    /// fluctuation.
    #[default]
    True,
    /// Per-sample Gaussian estimates, as the softmax pipeline does.
    Estimated,
}

/// `η` for `trials` i.i.d. vectors `x ~ N(0, σ²)^n`. Trials are split into
/// fixed chunks, each with its own ChaCha stream, so the result does not
/// depend on the thread count.
pub fn eta_samples(n: usize, sigma: f64, trials: usize, seed: u64, mode: McMode) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let log_m = 0.5 * sigma * sigma;
    let chunks = trials.div_ceil(CHUNK);
    let per_chunk = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(trials - c * CHUNK);
            let mut x = vec![0.0; n];
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                x.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
                let eta = match mode {
                    McMode::True => ratio_error(&x, log_m),
                    McMode::Estimated => relative_error(&x, Family::Gaussian)?,
                };
                out.push(eta);
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_chunk.concat())
}

/// Monte-Carlo estimate of a probability with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub p: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl McEstimate {
    pub fn from_samples(eta: &[f64], delta: f64) -> Self {
        let trials = eta.len();
        let hits = eta.iter().filter(|&&e| e >= delta).count();
        let p = hits as f64 / trials.max(1) as f64;
        Self {
            p,
            stderr: (p * (1.0 - p) / trials.max(1) as f64).sqrt(),
            trials,
        }
    }
}

/// Fraction of seeded Gaussian trials with `η ≥ δ`.
pub fn p_eta_monte_carlo(
    delta: f64,
    n: usize,
    sigma: f64,
    trials: usize,
    seed: u64,
    mode: McMode,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    let eta = eta_samples(n, sigma, trials, seed, mode)?;
    Ok(McEstimate::from_samples(&eta, delta))
}

/// Mean `η` over seeded Gaussian trials.
pub fn mean_eta(n: usize, sigma: f64, trials: usize, seed: u64, mode: McMode) -> Result<f64> {
    let eta = eta_samples(n, sigma, trials.max(1), seed, mode)?;
    Ok(eta.iter().sum::<f64>() / eta.len() as f64)
}

/// Max `|AExp(x) − e^x|` over a uniform grid on `[lo, hi]`.
pub fn approx_max_error(spec: &ExpApproxSpec, interval: (f64, f64), grid_points: usize) -> Result<f64> {
    if grid_points < 2 {
        return Err(Error::InvalidParams("need at least 2 grid points".into()));
    }
    let (lo, hi) = interval;
    if !(lo <= hi) {
        return Err(Error::Interval { lo, hi });
    }
    let aexp = spec.compile::<f64>()?;
    let step = (hi - lo) / (grid_points - 1) as f64;
    let x: Vec<f64> = (0..grid_points).map(|i| lo + step * i as f64).collect();
    Ok(aexp
        .plain(&x)
        .iter()
        .zip(&x)
        .map(|(a, v)| (a - v.exp()).abs())
        .fold(0.0, f64::max))
}

/// Analytic and Monte-Carlo view of one `(δ, n, σ)` configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// Mean `η` over the trials.
    pub eta: f64,
    pub delta: f64,
    pub p_eta_analytic: f64,
    pub p_eta_mc: f64,
    pub stderr: f64,
    pub n: usize,
    pub sigma: f64,
    pub trials: usize,
    pub mu_y: f64,
    pub sigma_y: f64,
    pub mode: McMode,
    pub rng: String,
    pub seed: u64,
}

pub fn error_report(delta: f64, n: usize, sigma: f64, trials: usize, seed: u64, mode: McMode) -> Result<ErrorReport> {
    let eta = eta_samples(n, sigma, trials.max(1), seed, mode)?;
    let mc = McEstimate::from_samples(&eta, delta);
    let (mu_y, sigma_y) = lognormal_moments(0.0, sigma);
    Ok(ErrorReport {
        eta: eta.iter().sum::<f64>() / eta.len() as f64,
        delta,
        p_eta_analytic: p_eta_analytic(delta, n, mu_y, sigma_y)?.p,
        p_eta_mc: mc.p,
        stderr: mc.stderr,
        n,
        sigma,
        trials: mc.trials,
        mu_y,
        sigma_y,
        mode,
        rng: RNG_NAME.to_string(),
        seed,
    })
}

/// One line of an error sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub n: usize,
    pub sigma: f64,
    pub p_analytic: f64,
    pub p_mc: f64,
    pub stderr: f64,
}

/// Grid over `deltas × ns × sigmas`; every `(n, σ)` cell draws its samples
/// once and reuses them across `δ`.
pub fn sweep(
    deltas: &[f64],
    ns: &[usize],
    sigmas: &[f64],
    trials: usize,
    seed: u64,
    mode: McMode,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &sigma in sigmas {
            let eta = eta_samples(n, sigma, trials.max(1), seed, mode)?;
            for &delta in deltas {
                let mc = McEstimate::from_samples(&eta, delta);
                rows.push(SweepRow {
                    delta,
                    n,
                    sigma,
                    p_analytic: p_eta_gaussian(delta, n, sigma)?.p,
                    p_mc: mc.p,
                    stderr: mc.stderr,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
