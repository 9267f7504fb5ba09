//! Plaintext reference math: exact softmax, the MGF-softmax instantiations
//! and domain scaling. Every homomorphic path is checked against these.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Distribution family assumed for the softmax inputs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Gaussian,
    Uniform,
    Laplace,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Self::Gaussian),
            "uniform" => Ok(Self::Uniform),
            "laplace" => Ok(Self::Laplace),
            other => Err(Error::Config(format!("unknown family {other:?}"))),
        }
    }
}

/// Family-specific parameters fitted to one input vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FamilyParams<T> {
    Gaussian { mean: T, variance: T },
    Uniform { a: T, b: T },
    Laplace { loc: T, scale: T },
}

/// Estimated statistics of one input vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DistStats<T> {
    pub params: FamilyParams<T>,
    /// Sample mean.
    pub mean: T,
    /// Population variance (divide by `n`).
    pub variance: T,
    /// Cumulants `κ_1..κ_4` of the fitted distribution.
    pub cumulants: Vec<T>,
}

impl<T: Scalar> DistStats<T> {
    pub fn family(&self) -> Family {
        match self.params {
            FamilyParams::Gaussian { .. } => Family::Gaussian,
            FamilyParams::Uniform { .. } => Family::Uniform,
            FamilyParams::Laplace { .. } => Family::Laplace,
        }
    }

    pub fn gaussian(mean: T, variance: T) -> Self {
        Self {
            params: FamilyParams::Gaussian { mean, variance },
            mean,
            variance,
            cumulants: vec![mean, variance, T::zero(), T::zero()],
        }
    }
}

fn check_input<T: Scalar>(x: &[T]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("input entry {i} is not finite")));
    }
    Ok(())
}

pub fn mean<T: Scalar>(x: &[T]) -> T {
    x.iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(x.len())
}

pub fn population_variance<T: Scalar>(x: &[T], mean: T) -> T {
    x.iter().fold(T::zero(), |a, &v| a + (v - mean) * (v - mean)) / T::from_usize_lossy(x.len())
}

fn median<T: Scalar>(x: &[T]) -> T {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite inputs"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::lit(2.0)
    }
}

/// Numerically stable softmax via max subtraction.
pub fn softmax_exact<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    check_input(x)?;
    let m = x.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = x.iter().map(|&v| (v - m).exp()).collect();
    let s = e.iter().fold(T::zero(), |a, &b| a + b);
    Ok(e.into_iter().map(|v| v / s).collect())
}

/// Fits the family's parameters: Gaussian by sample mean and population
/// variance, uniform by min/max, Laplace by median and mean absolute
/// deviation from the median.
pub fn estimate_stats<T: Scalar>(x: &[T], family: Family) -> Result<DistStats<T>> {
    check_input(x)?;
    let mu = mean(x);
    let var = population_variance(x, mu);
    let stats = match family {
        Family::Gaussian => DistStats::gaussian(mu, var),
        Family::Uniform => {
            let a = x.iter().copied().fold(T::infinity(), T::min);
            let b = x.iter().copied().fold(T::neg_infinity(), T::max);
            let w = b - a;
            DistStats {
                params: FamilyParams::Uniform { a, b },
                mean: mu,
                variance: var,
                cumulants: vec![
                    (a + b) / T::lit(2.0),
                    w * w / T::lit(12.0),
                    T::zero(),
                    -(w * w * w * w) / T::lit(120.0),
                ],
            }
        }
        Family::Laplace => {
            let loc = median(x);
            let scale = mean(&x.iter().map(|&v| (v - loc).abs()).collect::<Vec<_>>());
            if scale >= T::one() {
                return Err(Error::ScaleTooLarge {
                    scale: scale.to_f64_lossy(),
                });
            }
            let s2 = scale * scale;
            DistStats {
                params: FamilyParams::Laplace { loc, scale },
                mean: mu,
                variance: var,
                cumulants: vec![loc, T::lit(2.0) * s2, T::zero(), T::lit(12.0) * s2 * s2],
            }
        }
    };
    Ok(stats)
}

/// Options for [`cgf_at_one_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CgfOptions {
    /// Use `ln M(1) ≈ b − ln(b − a)` (valid for `b ≫ a`) for the uniform
    /// family instead of the exact expression.
    #[serde(default)]
    pub uniform_simplified: bool,
}

/// `K_X(1) = ln E[exp X]` for the fitted distribution.
pub fn cgf_at_one<T: Scalar>(stats: &DistStats<T>) -> Result<T> {
    cgf_at_one_with(stats, CgfOptions::default())
}

pub fn cgf_at_one_with<T: Scalar>(stats: &DistStats<T>, opts: CgfOptions) -> Result<T> {
    match stats.params {
        FamilyParams::Gaussian { mean, variance } => Ok(mean + variance / T::lit(2.0)),
        FamilyParams::Uniform { a, b } => {
            if a == b {
                return Ok(a);
            }
            let w = b - a;
            if opts.uniform_simplified {
                Ok(b - w.ln())
            } else {
                // ln((e^b − e^a)/(b − a)) = b + ln(1 − e^{a−b}) − ln(b − a)
                Ok(b + (-(a - b).exp_m1()).ln() - w.ln())
            }
        }
        FamilyParams::Laplace { loc, scale } => {
            if scale >= T::one() {
                return Err(Error::ScaleTooLarge {
                    scale: scale.to_f64_lossy(),
                });
            }
            Ok(loc - (T::one() - scale * scale).ln())
        }
    }
}

/// Truncated cumulant series `Σ κ_j / j!`. Not used by the default paths,
/// which go through the per-family closed forms.
pub fn cgf_from_cumulants<T: Scalar>(cumulants: &[T]) -> T {
    let mut fact = T::one();
    let mut acc = T::zero();
    for (j, &k) in cumulants.iter().enumerate() {
        fact = fact * T::from_usize_lossy(j + 1);
        acc = acc + k / fact;
    }
    acc
}

/// Shift `K_X(1) + ln n` subtracted from every input before `exp`.
pub fn mgf_shift<T: Scalar>(x: &[T], family: Family) -> Result<T> {
    let stats = estimate_stats(x, family)?;
    Ok(cgf_at_one(&stats)? + T::from_usize_lossy(x.len()).ln())
}

/// `exp(x_i − K_X(1) − ln n)`. Not normalized.
pub fn mgf_softmax_plain<T: Scalar>(x: &[T], family: Family) -> Result<Vec<T>> {
    let shift = mgf_shift(x, family)?;
    Ok(x.iter().map(|&v| (v - shift).exp()).collect())
}

/// Domain-scaled form `exp((x_i − K_X(1) − ln n)/2^k)^(2^k)`, evaluated by
/// `k` squarings.
pub fn mgf_softmax_scaled<T: Scalar>(x: &[T], family: Family, k: u32) -> Result<Vec<T>> {
    let shift = mgf_shift(x, family)?;
    let inv = T::lit((-(k as f64)).exp2());
    Ok(x.iter()
        .map(|&v| {
            let mut y = ((v - shift) * inv).exp();
            for _ in 0..k {
                y = y * y;
            }
            y
        })
        .collect())
}

/// The scaled exponent arguments `(x_i − K_X(1) − ln n)/2^k`.
pub fn scaled_exponents<T: Scalar>(x: &[T], family: Family, k: u32) -> Result<Vec<T>> {
    let shift = mgf_shift(x, family)?;
    let inv = T::lit((-(k as f64)).exp2());
    Ok(x.iter().map(|&v| (v - shift) * inv).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax_exact(&[0.0, 0.0]).unwrap(), vec![0.5, 0.5]);
        let p = softmax_exact(&[1000.0, 1000.0 + 3f64.ln()]).unwrap();
        assert!(close(p[0], 0.25, 1e-12) && close(p[1], 0.75, 1e-12));
        let q = softmax_exact(&[0.0, 2f64.ln(), 3f64.ln()]).unwrap();
        for (got, want) in q.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
            assert!(close(*got, want, 1e-15));
        }
        assert!(matches!(softmax_exact::<f64>(&[]), Err(Error::EmptyInput)));
        assert!(matches!(softmax_exact(&[f64::NAN]), Err(Error::Domain(_))));
    }

    #[test]
    fn stats_examples() {
        let s = estimate_stats(&[3.5; 7], Family::Gaussian).unwrap();
        assert_eq!((s.mean, s.variance), (3.5, 0.0));
        let s = estimate_stats(&[0.0, 2.0], Family::Gaussian).unwrap();
        assert_eq!((s.mean, s.variance), (1.0, 1.0));
        let u = estimate_stats(&[1.0, 3.0, 5.0], Family::Uniform).unwrap();
        assert_eq!(u.params, FamilyParams::Uniform { a: 1.0, b: 5.0 });
        let l = estimate_stats(&[0.1, 0.2, 0.6, 0.4], Family::Laplace).unwrap();
        match l.params {
            FamilyParams::Laplace { loc, scale } => {
                assert!(close(loc, 0.3, 1e-15));
                assert!(close(scale, 0.175, 1e-15));
            }
            _ => unreachable!(),
        }
        assert!(matches!(
            estimate_stats(&[0.0, 4.0], Family::Laplace),
            Err(Error::ScaleTooLarge { .. })
        ));
    }

    #[test]
    fn cgf_examples() {
        assert_eq!(cgf_at_one(&DistStats::gaussian(0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(cgf_at_one(&DistStats::gaussian(1.0, 2.0)).unwrap(), 2.0);
        let lap = DistStats {
            params: FamilyParams::Laplace { loc: 0.0, scale: 0.5 },
            mean: 0.0,
            variance: 0.5,
            cumulants: vec![],
        };
        // -ln(0.75)
        assert!(close(cgf_at_one(&lap).unwrap(), 0.287_682_072_451_780_9, 1e-15));
        let bad = DistStats {
            params: FamilyParams::Laplace { loc: 0.0, scale: 1.0 },
            ..lap
        };
        assert!(cgf_at_one(&bad).is_err());
    }

    #[test]
    fn uniform_cgf_exact_and_simplified() {
        let u = estimate_stats(&[-3.0, 2.0], Family::Uniform).unwrap();
        let exact = ((2f64.exp() - (-3f64).exp()) / 5.0).ln();
        assert!(close(cgf_at_one(&u).unwrap(), exact, 1e-14));
        let simple = cgf_at_one_with(&u, CgfOptions { uniform_simplified: true }).unwrap();
        assert!(close(simple, 2.0 - 5f64.ln(), 1e-15));
        let deg = estimate_stats(&[1.25, 1.25], Family::Uniform).unwrap();
        assert_eq!(cgf_at_one(&deg).unwrap(), 1.25);
    }

    #[test]
    fn cumulant_series_matches_gaussian_closed_form() {
        let s = DistStats::gaussian(0.3, 1.7);
        assert!(close(cgf_from_cumulants(&s.cumulants), cgf_at_one(&s).unwrap(), 1e-15));
        // uniform: truncated series approaches the closed form for narrow support
        let u = estimate_stats(&[-0.1, 0.1], Family::Uniform).unwrap();
        assert!(close(cgf_from_cumulants(&u.cumulants), cgf_at_one(&u).unwrap(), 1e-9));
    }

    #[test]
    fn mgf_softmax_examples() {
        let v = mgf_softmax_plain(&[2.0; 5], Family::Gaussian).unwrap();
        assert!(v.iter().all(|&p| close(p, 0.2, 1e-15)));
        let v = mgf_softmax_plain(&[0.0, 2.0], Family::Gaussian).unwrap();
        assert!(close(v[0], 0.111_565_080_074_214_9, 1e-15));
        assert!(close(v[1], 0.824_360_635_350_064_1, 1e-15));
        let shifted = mgf_softmax_plain(&[-7.3, 2.0 - 7.3], Family::Gaussian).unwrap();
        assert!(close(v[0], shifted[0], 1e-12) && close(v[1], shifted[1], 1e-12));
    }

    #[test]
    fn constant_vectors_reproduce_softmax_for_all_families() {
        for family in [Family::Gaussian, Family::Uniform, Family::Laplace] {
            let x = [-4.25; 16];
            let got = mgf_softmax_plain(&x, family).unwrap();
            assert!(got.iter().all(|&p| close(p, 1.0 / 16.0, 1e-15)), "{family:?}");
        }
    }

    #[test]
    fn scaled_examples() {
        let x = [0.3, -1.2, 0.8, 2.0];
        assert_eq!(
            mgf_softmax_scaled(&x, Family::Gaussian, 0).unwrap(),
            mgf_softmax_plain(&x, Family::Gaussian).unwrap()
        );
        let plain_args = scaled_exponents(&x, Family::Gaussian, 0).unwrap();
        let k4 = scaled_exponents(&x, Family::Gaussian, 4).unwrap();
        for (a, b) in plain_args.iter().zip(&k4) {
            assert!(close(a / 16.0, *b, 1e-16));
        }
    }

    #[test]
    fn single_precision() {
        let v = mgf_softmax_plain(&[0.0f32, 2.0], Family::Gaussian).unwrap();
        assert!((v[1] - 0.824_360_6).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn shift_invariance(
            x in prop::collection::vec(-5.0f64..5.0, 1..64),
            c in -100.0f64..100.0,
            fam in prop::sample::select(vec![Family::Gaussian, Family::Uniform]),
        ) {
            let a = mgf_softmax_plain(&x, fam).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v - c).collect();
            let b = mgf_softmax_plain(&xs, fam).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() <= 1e-10 * p.max(1.0));
            }
        }

        #[test]
        fn laplace_shift_invariance(
            x in prop::collection::vec(-0.4f64..0.4, 1..64),
            c in -100.0f64..100.0,
        ) {
            let a = mgf_softmax_plain(&x, Family::Laplace).unwrap();
            let xs: Vec<f64> = x.iter().map(|v| v - c).collect();
            let b = mgf_softmax_plain(&xs, Family::Laplace).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() <= 1e-10);
            }
        }

        #[test]
        fn positivity(x in prop::collection::vec(-30.0f64..30.0, 1..64)) {
            for fam in [Family::Gaussian, Family::Uniform] {
                prop_assert!(mgf_softmax_plain(&x, fam).unwrap().iter().all(|&p| p > 0.0));
            }
        }

        #[test]
        fn scaling_identity(x in prop::collection::vec(-6.0f64..6.0, 2..64), k in 0u32..=8) {
            let a = mgf_softmax_plain(&x, Family::Gaussian).unwrap();
            let b = mgf_softmax_scaled(&x, Family::Gaussian, k).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - q).abs() <= 1e-9 * p.max(1.0));
            }
        }
    }
}
