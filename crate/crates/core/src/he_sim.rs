//! Plaintext-backed simulator of a leveled SIMD homomorphic scheme.
//!
//! Slot arithmetic is exact floating point. What the simulator tracks is the
//! part of a CKKS backend that governs cost: the level budget of every
//! ciphertext, the multiplicative depth of its dependency chain, and
//! per-engine operation counters. Counters are atomics, so one engine can be
//! driven from several threads and the tallies still equal the sequential
//! totals.

use std::sync::atomic::{AtomicBool, AtomicU32, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

static NEXT_ENGINE_ID: AtomicU64 = AtomicU64::new(1);

/// Scheme parameters: slot count `s`, level budget `L` and optional noise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeParams {
    pub slot_count: usize,
    pub max_level: u32,
    /// Relative stddev of the multiplicative perturbation applied by every
    /// level-consuming operation. Zero disables noise.
    #[serde(default)]
    pub noise_stddev: f64,
    /// Level at which fresh ciphertexts are created. Defaults to `max_level`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_level: Option<u32>,
}

impl Default for HeParams {
    fn default() -> Self {
        Self {
            slot_count: 1 << 15,
            max_level: 10,
            noise_stddev: 0.0,
            initial_level: None,
        }
    }
}

impl HeParams {
    pub fn new(slot_count: usize, max_level: u32) -> Result<Self> {
        let p = Self {
            slot_count,
            max_level,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.slot_count == 0 || !self.slot_count.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "slot count {} is not a power of two",
                self.slot_count
            )));
        }
        if self.max_level == 0 {
            return Err(Error::InvalidParams("max level must be at least 1".into()));
        }
        if !(self.noise_stddev >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "noise stddev {} must be nonnegative",
                self.noise_stddev
            )));
        }
        if let Some(l) = self.initial_level {
            if l > self.max_level {
                return Err(Error::InvalidParams(format!(
                    "initial level {l} exceeds max level {}",
                    self.max_level
                )));
            }
        }
        Ok(())
    }

    pub fn fresh_level(&self) -> u32 {
        self.initial_level.unwrap_or(self.max_level)
    }
}

/// Snapshot of an engine's operation tallies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub n_add: u64,
    pub n_pmult: u64,
    pub n_cmult: u64,
    pub n_rot: u64,
    pub n_boot: u64,
    /// Longest chain of level-consuming operations seen so far, counted
    /// across bootstraps.
    pub depth_consumed: u32,
}

impl OpCounters {
    /// Operation counts accumulated since `earlier`. `depth_consumed` is
    /// carried over from `self` since it is a running maximum, not a sum.
    pub fn since(&self, earlier: &OpCounters) -> OpCounters {
        OpCounters {
            n_add: self.n_add - earlier.n_add,
            n_pmult: self.n_pmult - earlier.n_pmult,
            n_cmult: self.n_cmult - earlier.n_cmult,
            n_rot: self.n_rot - earlier.n_rot,
            n_boot: self.n_boot - earlier.n_boot,
            depth_consumed: self.depth_consumed,
        }
    }
}

#[derive(Default)]
struct Counters {
    add: AtomicU64,
    pmult: AtomicU64,
    cmult: AtomicU64,
    rot: AtomicU64,
    boot: AtomicU64,
    depth: AtomicU32,
}

struct Inner {
    id: u64,
    params: HeParams,
    counters: Counters,
    auto_bootstrap: AtomicBool,
    noise: Option<Mutex<ChaCha8Rng>>,
}

/// A simulated ciphertext. Immutable once produced.
#[derive(Clone, Debug, PartialEq)]
pub struct Ciphertext<T> {
    slots: Vec<T>,
    level: u32,
    depth: u32,
    engine_id: u64,
}

impl<T: Scalar> Ciphertext<T> {
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of level-consuming operations on the longest chain that
    /// produced this ciphertext.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn engine_id(&self) -> u64 {
        self.engine_id
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Plain JSON dump `{"slots": [...], "level": l}` for debugging.
    pub fn debug_json(&self) -> serde_json::Value {
        let slots: Vec<f64> = self.slots.iter().map(|v| v.to_f64_lossy()).collect();
        serde_json::json!({ "slots": slots, "level": self.level })
    }
}

/// Plaintext operand of [`Engine::pmult`] and [`Engine::add_plain`].
#[derive(Clone, Copy, Debug)]
pub enum Plain<'a, T> {
    Scalar(T),
    Vector(&'a [T]),
}

impl<T: Scalar> Plain<'_, T> {
    fn at(&self, i: usize) -> T {
        match self {
            Plain::Scalar(c) => *c,
            Plain::Vector(v) => v.get(i).copied().unwrap_or_else(T::zero),
        }
    }
}

/// Engine context: parameters plus the counters shared by every ciphertext
/// it creates. Cloning yields another handle to the same context.
pub struct Engine<T> {
    inner: Arc<Inner>,
    _scalar: std::marker::PhantomData<fn() -> T>,
}

impl<T> Clone for Engine<T> {
    fn clone(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
            _scalar: std::marker::PhantomData,
        }
    }
}

impl<T> std::fmt::Debug for Engine<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine")
            .field("id", &self.inner.id)
            .field("params", &self.inner.params)
            .finish()
    }
}

impl<T: Scalar> Engine<T> {
    pub fn new(params: HeParams) -> Result<Self> {
        Self::build(params, 0)
    }

    /// Engine whose noise stream (if `noise_stddev > 0`) is seeded by `seed`.
    pub fn with_seed(params: HeParams, seed: u64) -> Result<Self> {
        Self::build(params, seed)
    }

    fn build(params: HeParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let noise = (params.noise_stddev > 0.0).then(|| Mutex::new(ChaCha8Rng::seed_from_u64(seed)));
        Ok(Self {
            inner: Arc::new(Inner {
                id: NEXT_ENGINE_ID.fetch_add(1, Ordering::Relaxed),
                params,
                counters: Counters::default(),
                auto_bootstrap: AtomicBool::new(false),
                noise,
            }),
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn params(&self) -> &HeParams {
        &self.inner.params
    }

    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn slot_count(&self) -> usize {
        self.inner.params.slot_count
    }

    pub fn max_level(&self) -> u32 {
        self.inner.params.max_level
    }

    /// When enabled, any ciphertext whose level reaches zero is refreshed
    /// immediately, so level-consuming operations never fail.
    pub fn set_auto_bootstrap(&self, on: bool) {
        self.inner.auto_bootstrap.store(on, Ordering::SeqCst);
    }

    pub fn auto_bootstrap(&self) -> bool {
        self.inner.auto_bootstrap.load(Ordering::SeqCst)
    }

    pub fn counters(&self) -> OpCounters {
        let c = &self.inner.counters;
        OpCounters {
            n_add: c.add.load(Ordering::SeqCst),
            n_pmult: c.pmult.load(Ordering::SeqCst),
            n_cmult: c.cmult.load(Ordering::SeqCst),
            n_rot: c.rot.load(Ordering::SeqCst),
            n_boot: c.boot.load(Ordering::SeqCst),
            depth_consumed: c.depth.load(Ordering::SeqCst),
        }
    }

    pub fn encrypt(&self, values: &[T]) -> Result<Ciphertext<T>> {
        self.encrypt_at_level(values, self.inner.params.fresh_level())
    }

    pub fn encrypt_at_level(&self, values: &[T], level: u32) -> Result<Ciphertext<T>> {
        let s = self.slot_count();
        if values.len() > s {
            return Err(Error::Capacity {
                len: values.len(),
                slots: s,
            });
        }
        if level > self.max_level() {
            return Err(Error::InvalidParams(format!(
                "level {level} exceeds max level {}",
                self.max_level()
            )));
        }
        let mut slots = vec![T::zero(); s];
        slots[..values.len()].copy_from_slice(values);
        Ok(Ciphertext {
            slots,
            level,
            depth: 0,
            engine_id: self.inner.id,
        })
    }

    pub fn decrypt(&self, a: &Ciphertext<T>) -> Vec<T> {
        a.slots.clone()
    }

    fn check(&self, a: &Ciphertext<T>) -> Result<()> {
        if a.engine_id != self.inner.id {
            return Err(Error::EngineMismatch);
        }
        Ok(())
    }

    pub fn add(&self, a: &Ciphertext<T>, b: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        self.zip(a, b, |x, y| x + y)
    }

    pub fn sub(&self, a: &Ciphertext<T>, b: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        self.zip(a, b, |x, y| x - y)
    }

    fn zip(&self, a: &Ciphertext<T>, b: &Ciphertext<T>, f: impl Fn(T, T) -> T) -> Result<Ciphertext<T>> {
        self.check(a)?;
        self.check(b)?;
        self.inner.counters.add.fetch_add(1, Ordering::Relaxed);
        Ok(Ciphertext {
            slots: a.slots.iter().zip(&b.slots).map(|(&x, &y)| f(x, y)).collect(),
            level: a.level.min(b.level),
            depth: a.depth.max(b.depth),
            engine_id: self.inner.id,
        })
    }

    /// Adds a plaintext (scalar broadcast or vector). Counted as an Add.
    pub fn add_plain(&self, a: &Ciphertext<T>, plain: Plain<'_, T>) -> Result<Ciphertext<T>> {
        self.check(a)?;
        self.inner.counters.add.fetch_add(1, Ordering::Relaxed);
        Ok(Ciphertext {
            slots: a.slots.iter().enumerate().map(|(i, &x)| x + plain.at(i)).collect(),
            level: a.level,
            depth: a.depth,
            engine_id: self.inner.id,
        })
    }

    /// Plaintext multiplication. Non-integer multiplications consume one
    /// level; with `integer_hint` the caller asserts the plaintext is
    /// integral and no level is consumed.
    pub fn pmult(&self, a: &Ciphertext<T>, plain: Plain<'_, T>, integer_hint: bool) -> Result<Ciphertext<T>> {
        self.check(a)?;
        if integer_hint {
            self.inner.counters.pmult.fetch_add(1, Ordering::Relaxed);
            return Ok(Ciphertext {
                slots: a.slots.iter().enumerate().map(|(i, &x)| x * plain.at(i)).collect(),
                level: a.level,
                depth: a.depth,
                engine_id: self.inner.id,
            });
        }
        let a = self.ensure_level(a, "pmult")?;
        self.inner.counters.pmult.fetch_add(1, Ordering::Relaxed);
        let slots = a.slots.iter().enumerate().map(|(i, &x)| x * plain.at(i)).collect();
        self.consumed(slots, a.level - 1, a.depth + 1)
    }

    pub fn pmult_scalar(&self, a: &Ciphertext<T>, c: T) -> Result<Ciphertext<T>> {
        self.pmult(a, Plain::Scalar(c), false)
    }

    pub fn pmult_int(&self, a: &Ciphertext<T>, c: i64) -> Result<Ciphertext<T>> {
        self.pmult(a, Plain::Scalar(T::from_i64(c).expect("integer constant")), true)
    }

    pub fn cmult(&self, a: &Ciphertext<T>, b: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        self.check(a)?;
        self.check(b)?;
        let a = self.ensure_level(a, "cmult")?;
        let b = self.ensure_level(b, "cmult")?;
        self.inner.counters.cmult.fetch_add(1, Ordering::Relaxed);
        let slots = a.slots.iter().zip(&b.slots).map(|(&x, &y)| x * y).collect();
        self.consumed(slots, a.level.min(b.level) - 1, a.depth.max(b.depth) + 1)
    }

    pub fn square(&self, a: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        self.cmult(a, a)
    }

    /// Cyclic left shift by `steps` (taken mod `s`, negative allowed). A
    /// shift by a multiple of `s` is the identity and is not counted.
    pub fn rotate(&self, a: &Ciphertext<T>, steps: i64) -> Result<Ciphertext<T>> {
        self.check(a)?;
        let s = a.slots.len();
        let r = steps.rem_euclid(s as i64) as usize;
        if r == 0 {
            return Ok(a.clone());
        }
        self.inner.counters.rot.fetch_add(1, Ordering::Relaxed);
        let mut slots = a.slots.clone();
        slots.rotate_left(r);
        Ok(Ciphertext { slots, ..a.clone_meta() })
    }

    pub fn bootstrap(&self, a: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        self.check(a)?;
        self.inner.counters.boot.fetch_add(1, Ordering::Relaxed);
        Ok(Ciphertext {
            slots: a.slots.clone(),
            level: self.max_level(),
            depth: a.depth,
            engine_id: self.inner.id,
        })
    }

    /// Discards `n` levels without arithmetic (a modulus drop). Counted in
    /// the ciphertext's depth but not as an operation.
    pub fn drop_levels(&self, a: &Ciphertext<T>, n: u32) -> Result<Ciphertext<T>> {
        self.check(a)?;
        let mut out = a.clone();
        for _ in 0..n {
            out = self.ensure_level(&out, "drop_levels")?.into_owned();
            out.level -= 1;
            out.depth += 1;
            self.note_depth(out.depth);
            out = self.refresh_if_exhausted(out);
        }
        Ok(out)
    }

    fn ensure_level<'c>(&self, a: &'c Ciphertext<T>, op: &'static str) -> Result<std::borrow::Cow<'c, Ciphertext<T>>> {
        if a.level > 0 {
            return Ok(std::borrow::Cow::Borrowed(a));
        }
        if self.auto_bootstrap() {
            return Ok(std::borrow::Cow::Owned(self.bootstrap(a)?));
        }
        Err(Error::LevelExhausted { op })
    }

    fn consumed(&self, mut slots: Vec<T>, level: u32, depth: u32) -> Result<Ciphertext<T>> {
        if let Some(rng) = &self.inner.noise {
            let normal = Normal::new(0.0, self.inner.params.noise_stddev)
                .map_err(|e| Error::InvalidParams(e.to_string()))?;
            let mut rng = rng.lock().expect("noise rng poisoned");
            for v in slots.iter_mut() {
                *v = *v * T::lit(1.0 + normal.sample(&mut *rng));
            }
        }
        self.note_depth(depth);
        Ok(self.refresh_if_exhausted(Ciphertext {
            slots,
            level,
            depth,
            engine_id: self.inner.id,
        }))
    }

    fn note_depth(&self, depth: u32) {
        self.inner.counters.depth.fetch_max(depth, Ordering::Relaxed);
    }

    fn refresh_if_exhausted(&self, ct: Ciphertext<T>) -> Ciphertext<T> {
        if ct.level == 0 && self.auto_bootstrap() {
            self.inner.counters.boot.fetch_add(1, Ordering::Relaxed);
            return Ciphertext {
                level: self.max_level(),
                ..ct
            };
        }
        ct
    }
}

impl<T: Clone> Ciphertext<T> {
    fn clone_meta(&self) -> Ciphertext<T> {
        Ciphertext {
            slots: Vec::new(),
            level: self.level,
            depth: self.depth,
            engine_id: self.engine_id,
        }
    }
}
