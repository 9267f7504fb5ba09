//! Slot-wise arithmetic backends shared by the plaintext and ciphertext
//! evaluators, so both run the exact same operation sequence.

use crate::error::Result;
use crate::he_sim::{Ciphertext, Engine, Plain};
use crate::scalar::Scalar;

pub trait SlotArith<T: Scalar> {
    type Value: Clone;

    fn mul(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    /// Multiplication by a real constant (consumes a level on ciphertexts).
    fn mul_const(&self, a: &Self::Value, c: T) -> Result<Self::Value>;
    /// Multiplication by an integer constant (level-free).
    fn mul_int(&self, a: &Self::Value, c: i64) -> Result<Self::Value>;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn sub(&self, a: &Self::Value, b: &Self::Value) -> Result<Self::Value>;
    fn add_const(&self, a: &Self::Value, c: T) -> Result<Self::Value>;

    /// Pads the chain depth of `out` up to `depth(input) + target`. Plaintext
    /// backends have no depth and return `out` unchanged.
    fn align_depth(&self, _input: &Self::Value, out: Self::Value, _target: u32) -> Result<Self::Value> {
        Ok(out)
    }
}

/// Plaintext vectors.
#[derive(Clone, Copy, Debug, Default)]
pub struct PlainArith;

fn zip<T: Scalar>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

impl<T: Scalar> SlotArith<T> for PlainArith {
    type Value = Vec<T>;

    fn mul(&self, a: &Vec<T>, b: &Vec<T>) -> Result<Vec<T>> {
        Ok(zip(a, b, |x, y| x * y))
    }
    fn mul_const(&self, a: &Vec<T>, c: T) -> Result<Vec<T>> {
        Ok(a.iter().map(|&x| x * c).collect())
    }
    fn mul_int(&self, a: &Vec<T>, c: i64) -> Result<Vec<T>> {
        let c = T::from_i64(c).expect("integer constant");
        Ok(a.iter().map(|&x| x * c).collect())
    }
    fn add(&self, a: &Vec<T>, b: &Vec<T>) -> Result<Vec<T>> {
        Ok(zip(a, b, |x, y| x + y))
    }
    fn sub(&self, a: &Vec<T>, b: &Vec<T>) -> Result<Vec<T>> {
        Ok(zip(a, b, |x, y| x - y))
    }
    fn add_const(&self, a: &Vec<T>, c: T) -> Result<Vec<T>> {
        Ok(a.iter().map(|&x| x + c).collect())
    }
}

impl<T: Scalar> SlotArith<T> for Engine<T> {
    type Value = Ciphertext<T>;

    fn mul(&self, a: &Ciphertext<T>, b: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        self.cmult(a, b)
    }
    fn mul_const(&self, a: &Ciphertext<T>, c: T) -> Result<Ciphertext<T>> {
        self.pmult(a, Plain::Scalar(c), false)
    }
    fn mul_int(&self, a: &Ciphertext<T>, c: i64) -> Result<Ciphertext<T>> {
        self.pmult_int(a, c)
    }
    fn add(&self, a: &Ciphertext<T>, b: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        Engine::add(self, a, b)
    }
    fn sub(&self, a: &Ciphertext<T>, b: &Ciphertext<T>) -> Result<Ciphertext<T>> {
        Engine::sub(self, a, b)
    }
    fn add_const(&self, a: &Ciphertext<T>, c: T) -> Result<Ciphertext<T>> {
        self.add_plain(a, Plain::Scalar(c))
    }
    fn align_depth(&self, input: &Ciphertext<T>, out: Ciphertext<T>, target: u32) -> Result<Ciphertext<T>> {
        let used = out.depth().saturating_sub(input.depth());
        if used < target {
            self.drop_levels(&out, target - used)
        } else {
            Ok(out)
        }
    }
}
