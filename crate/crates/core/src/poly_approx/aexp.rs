//! Polynomial stand-ins for `exp`, the only non-polynomial step of
//! MGF-softmax.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::he_sim::{Ciphertext, Engine};
use crate::poly_approx::arith::{PlainArith, SlotArith};
use crate::poly_approx::chebyshev::ChebPoly;
use crate::poly_approx::ps::{self, Basis};
use crate::scalar::Scalar;

fn default_interval() -> [f64; 2] {
    [-8.0, 0.0]
}

/// Serializable description of an exponential approximation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase", deny_unknown_fields)]
pub enum ExpApproxSpec {
    /// Chebyshev interpolant on `interval`, evaluated on `x / 2^k` and
    /// squared `k` times.
    Chebyshev {
        degree: usize,
        #[serde(default = "default_interval")]
        interval: [f64; 2],
        #[serde(default)]
        k: u32,
    },
    /// `(1 + x/2^k)^(2^k)`.
    Limit { k: u32 },
    /// Degree-`degree` Taylor expansion around `x0`.
    Taylor {
        degree: usize,
        #[serde(default)]
        x0: f64,
    },
}

impl ExpApproxSpec {
    pub fn chebyshev(degree: usize, k: u32) -> Self {
        Self::Chebyshev {
            degree,
            interval: default_interval(),
            k,
        }
    }

    /// Multiplicative depth of one evaluation.
    pub fn depth(&self) -> u32 {
        match *self {
            Self::Chebyshev { degree, k, .. } => ps::poly_depth(degree) + k + 1,
            Self::Limit { k } => k + 1,
            Self::Taylor { degree, .. } => ps::poly_depth(degree),
        }
    }

    /// Domain-scaling exponent (`0` for Taylor).
    pub fn k(&self) -> u32 {
        match *self {
            Self::Chebyshev { k, .. } | Self::Limit { k } => k,
            Self::Taylor { .. } => 0,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            Self::Chebyshev { .. } => "chebyshev",
            Self::Limit { .. } => "limit",
            Self::Taylor { .. } => "taylor",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Chebyshev { interval: [lo, hi], .. } if !(lo < hi) => Err(Error::Interval { lo, hi }),
            Self::Limit { k: 0 } => Err(Error::InvalidParams("limit approximation needs k >= 1".into())),
            Self::Taylor { x0, .. } if !x0.is_finite() => {
                Err(Error::InvalidParams("taylor expansion point must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Fits coefficients and returns an evaluator.
    pub fn compile<T: Scalar>(&self) -> Result<AExp<T>> {
        self.validate()?;
        let kind = match *self {
            Self::Chebyshev {
                degree,
                interval: [lo, hi],
                ..
            } => Kind::Chebyshev(ChebPoly::fit_exp(lo, hi, degree)?),
            Self::Limit { .. } => Kind::Limit,
            Self::Taylor { .. } => Kind::Taylor,
        };
        Ok(AExp {
            spec: self.clone(),
            kind,
        })
    }
}

/// Named `k` presets used for the fine-tuned transformer checkpoints.
pub fn preset(name: &str) -> Option<ExpApproxSpec> {
    let (cheb, limit) = match name.trim_end_matches("-chebyshev").trim_end_matches("-limit") {
        "llama-clinc150" => (3, 6),
        "llama-banking77" => (3, 6),
        "llama-sst2" => (4, 7),
        "vit-base" => (6, 8),
        "deit-base" => (3, 6),
        "vit-tiny" => (1, 8),
        "deit-tiny" => (1, 7),
        _ => return None,
    };
    if name.ends_with("-limit") {
        Some(ExpApproxSpec::Limit { k: limit })
    } else if name.ends_with("-chebyshev") {
        Some(ExpApproxSpec::chebyshev(15, cheb))
    } else {
        None
    }
}

pub const PRESET_NAMES: [&str; 7] = [
    "llama-clinc150",
    "llama-banking77",
    "llama-sst2",
    "vit-base",
    "deit-base",
    "vit-tiny",
    "deit-tiny",
];

#[derive(Clone, Debug)]
enum Kind<T> {
    Chebyshev(ChebPoly<T>),
    Limit,
    Taylor,
}

/// Compiled exponential approximation.
#[derive(Clone, Debug)]
pub struct AExp<T> {
    spec: ExpApproxSpec,
    kind: Kind<T>,
}

impl<T: Scalar> AExp<T> {
    pub fn spec(&self) -> &ExpApproxSpec {
        &self.spec
    }

    pub fn depth(&self) -> u32 {
        self.spec.depth()
    }

    pub fn cheb_poly(&self) -> Option<&ChebPoly<T>> {
        match &self.kind {
            Kind::Chebyshev(p) => Some(p),
            _ => None,
        }
    }

    /// Recorded max grid error of the underlying fit on its interval
    /// (before squaring). `None` for non-Chebyshev variants.
    pub fn fit_error(&self) -> Option<f64> {
        self.cheb_poly().map(ChebPoly::fit_error)
    }

    /// `AExp(scale·z + offset)`. The affine pre-map is folded into the
    /// first plaintext multiplication, so it costs no extra level.
    pub fn eval_affine<B: SlotArith<T>>(&self, backend: &B, z: &B::Value, scale: T, offset: T) -> Result<B::Value> {
        let k = self.spec.k();
        let inv_pow = T::lit((-(k as f64)).exp2());
        let out = match (&self.kind, &self.spec) {
            (Kind::Chebyshev(poly), _) => {
                let (a, b) = poly.to_unit();
                let (a, b) = (T::lit(a), T::lit(b));
                let u = backend.mul_const(z, a * scale * inv_pow)?;
                let u = backend.add_const(&u, a * offset * inv_pow + b)?;
                let y = ps::evaluate(backend, Basis::Chebyshev, poly.coeffs(), &u)?;
                square_k(backend, y, k)?
            }
            (Kind::Limit, _) => {
                let w = backend.mul_const(z, scale * inv_pow)?;
                let w = backend.add_const(&w, T::one() + offset * inv_pow)?;
                square_k(backend, w, k)?
            }
            (Kind::Taylor, &ExpApproxSpec::Taylor { degree, x0 }) => {
                // Σ e^{x0}/i! (y − x0)^i with y − x0 = scale·(z − z0)
                let z0 = (T::lit(x0) - offset) / scale;
                let v = backend.add_const(z, -z0)?;
                let mut coeffs = Vec::with_capacity(degree + 1);
                let mut c = T::lit(x0.exp());
                for i in 0..=degree {
                    if i > 0 {
                        c = c * scale / T::from_usize_lossy(i);
                    }
                    coeffs.push(c);
                }
                ps::evaluate(backend, Basis::Monomial, &coeffs, &v)?
            }
            (Kind::Taylor, _) => unreachable!("taylor kind always carries a taylor spec"),
        };
        backend.align_depth(z, out, self.depth())
    }

    /// Plaintext mirror of [`AExp::cipher`]; runs the identical operation
    /// sequence on plain vectors.
    pub fn plain(&self, x: &[T]) -> Vec<T> {
        self.eval_affine(&PlainArith, &x.to_vec(), T::one(), T::zero())
            .expect("plaintext evaluation is infallible")
    }

    pub fn plain_scalar(&self, x: T) -> T {
        self.plain(&[x])[0]
    }

    /// Homomorphic evaluation; consumes exactly [`AExp::depth`] levels.
    pub fn cipher(&self, engine: &Engine<T>, x: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        self.eval_affine(engine, x, T::one(), T::zero())
    }
}

fn square_k<T: Scalar, B: SlotArith<T>>(backend: &B, mut y: B::Value, k: u32) -> Result<B::Value> {
    for _ in 0..k {
        y = backend.mul(&y, &y)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::he_sim::HeParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn engine(l: u32) -> Engine<f64> {
        Engine::new(HeParams::new(64, l).unwrap()).unwrap()
    }

    #[test]
    fn depth_formulas() {
        assert_eq!(ExpApproxSpec::chebyshev(15, 3).depth(), 8);
        assert_eq!(ExpApproxSpec::chebyshev(0, 2).depth(), 3);
        assert_eq!(ExpApproxSpec::Limit { k: 6 }.depth(), 7);
        assert_eq!(ExpApproxSpec::Taylor { degree: 7, x0: 0.0 }.depth(), 3);
        assert_eq!(ExpApproxSpec::Taylor { degree: 0, x0: 0.0 }.depth(), 0);
    }

    #[test]
    fn limit_examples() {
        let a = ExpApproxSpec::Limit { k: 2 }.compile::<f64>().unwrap();
        assert_eq!(a.plain_scalar(0.0), 1.0);
        assert_eq!(a.plain_scalar(-4.0), 0.0);
        let a6 = ExpApproxSpec::Limit { k: 6 }.compile::<f64>().unwrap();
        // (1 - 1/64)^64, evaluated with mpmath
        assert!((a6.plain_scalar(-1.0) - 0.364_986_524_243_907_4).abs() < 1e-12);
    }

    #[test]
    fn taylor_at_expansion_point() {
        let a = ExpApproxSpec::Taylor { degree: 1, x0: -3.0 }.compile::<f64>().unwrap();
        assert!((a.plain_scalar(-3.0) - 0.049_787_068_367_863_94).abs() < 1e-15);
        let big = ExpApproxSpec::Taylor { degree: 20, x0: 0.0 }.compile::<f64>().unwrap();
        assert!((big.plain_scalar(0.3) - 0.3f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_reduced_domain_matches_exp() {
        let a = ExpApproxSpec::chebyshev(15, 0).compile::<f64>().unwrap();
        let fit = a.fit_error().unwrap();
        let e = engine(10);
        let xs: Vec<f64> = (0..64).map(|i| -8.0 * i as f64 / 63.0).collect();
        let ct = a.cipher(&e, &e.encrypt(&xs).unwrap()).unwrap();
        for (x, y) in xs.iter().zip(e.decrypt(&ct)) {
            assert!((y - x.exp()).abs() <= fit + 1e-9);
        }
    }

    #[test]
    fn level_drop_equals_depth_for_every_spec() {
        let specs = [
            ExpApproxSpec::chebyshev(15, 0),
            ExpApproxSpec::chebyshev(15, 3),
            ExpApproxSpec::chebyshev(7, 2),
            ExpApproxSpec::chebyshev(0, 1),
            ExpApproxSpec::chebyshev(1, 0),
            ExpApproxSpec::Limit { k: 1 },
            ExpApproxSpec::Limit { k: 6 },
            ExpApproxSpec::Taylor { degree: 0, x0: -1.0 },
            ExpApproxSpec::Taylor { degree: 1, x0: -1.0 },
            ExpApproxSpec::Taylor { degree: 6, x0: -2.0 },
            ExpApproxSpec::Taylor { degree: 15, x0: -4.0 },
        ];
        for spec in specs {
            let a = spec.compile::<f64>().unwrap();
            let e = engine(12);
            let x = e.encrypt(&[-1.0, -2.0]).unwrap();
            let y = a.cipher(&e, &x).unwrap();
            assert_eq!(12 - y.level(), spec.depth(), "{spec:?}");
            assert_eq!(y.depth(), spec.depth(), "{spec:?}");
        }
    }

    #[test]
    fn plain_and_cipher_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let specs = [
            ExpApproxSpec::chebyshev(15, 4),
            ExpApproxSpec::Limit { k: 6 },
            ExpApproxSpec::Taylor { degree: 9, x0: -2.0 },
        ];
        for spec in specs {
            let a = spec.compile::<f64>().unwrap();
            let lo = -8.0 * (spec.k() as f64).exp2();
            let xs: Vec<f64> = (0..64).map(|_| rng.random_range(lo..0.0)).collect();
            let e = engine(12);
            let ct = a.cipher(&e, &e.encrypt(&xs).unwrap()).unwrap();
            let plain = a.plain(&xs);
            for (p, c) in plain.iter().zip(e.decrypt(&ct)) {
                assert!((p - c).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn insufficient_level() {
        let a = ExpApproxSpec::chebyshev(15, 3).compile::<f64>().unwrap();
        let e = engine(7);
        let x = e.encrypt(&[-1.0]).unwrap();
        assert!(matches!(a.cipher(&e, &x), Err(Error::LevelExhausted { .. })));
    }

    #[test]
    fn limit_error_shrinks_with_k() {
        let grid: Vec<f64> = (0..=4000).map(|i| -8.0 * i as f64 / 4000.0).collect();
        let err = |k| {
            let a = ExpApproxSpec::Limit { k }.compile::<f64>().unwrap();
            a.plain(&grid)
                .iter()
                .zip(&grid)
                .map(|(y, x)| (y - x.exp()).abs())
                .fold(0.0, f64::max)
        };
        let errs: Vec<f64> = (3..=8).map(err).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn serde_shape() {
        let s: ExpApproxSpec =
            serde_json::from_str(r#"{"variant":"chebyshev","degree":15,"interval":[-8,0],"k":3}"#).unwrap();
        assert_eq!(s, ExpApproxSpec::chebyshev(15, 3));
        let l: ExpApproxSpec = serde_json::from_str(r#"{"variant":"limit","k":6}"#).unwrap();
        assert_eq!(l, ExpApproxSpec::Limit { k: 6 });
        let t: ExpApproxSpec = serde_json::from_str(r#"{"variant":"taylor","degree":4,"x0":-2}"#).unwrap();
        assert_eq!(t.depth(), 3);
        assert!(serde_json::from_str::<ExpApproxSpec>(r#"{"variant":"remez","degree":4}"#).is_err());
    }

    #[test]
    fn presets() {
        assert_eq!(preset("llama-clinc150-chebyshev"), Some(ExpApproxSpec::chebyshev(15, 3)));
        assert_eq!(preset("llama-clinc150-limit"), Some(ExpApproxSpec::Limit { k: 6 }));
        assert_eq!(preset("vit-base-limit"), Some(ExpApproxSpec::Limit { k: 8 }));
        assert_eq!(preset("vit-tiny-chebyshev"), Some(ExpApproxSpec::chebyshev(15, 1)));
        assert_eq!(preset("llama-sst2"), None);
        for name in PRESET_NAMES {
            assert!(preset(&format!("{name}-chebyshev")).is_some());
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(ExpApproxSpec::Limit { k: 0 }.compile::<f64>().is_err());
        let bad = ExpApproxSpec::Chebyshev {
            degree: 3,
            interval: [0.0, -1.0],
            k: 0,
        };
        assert!(matches!(bad.compile::<f64>(), Err(Error::Interval { .. })));
    }
}
