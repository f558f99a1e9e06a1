//! Real and complex scalars used for graph functions and solves.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

/// Field element that can be stored on the extended grid and passed to the
/// factorizations. Implemented for `f64` and `Complex64`.
pub trait Scalar:
    faer::traits::ComplexField
    + Copy
    + Debug
    + Default
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Mul<f64, Output = Self>
{
    const IS_REAL: bool;

    fn from_f64(x: f64) -> Self;
    /// Drops the imaginary part for real scalars.
    fn from_c64(z: Complex64) -> Self;
    fn to_c64(self) -> Complex64;
    fn re(self) -> f64;
    fn modulus(self) -> f64;
    fn modulus_sq(self) -> f64;
    fn conjugate(self) -> Self;
    fn is_finite_value(self) -> bool;

    fn zero_value() -> Self {
        Self::from_f64(0.0)
    }
}

impl Scalar for f64 {
    const IS_REAL: bool = true;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_c64(z: Complex64) -> Self {
        z.re
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    fn re(self) -> f64 {
        self
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn modulus_sq(self) -> f64 {
        self * self
    }
    fn conjugate(self) -> Self {
        self
    }
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    const IS_REAL: bool = false;

    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn to_c64(self) -> Complex64 {
        self
    }
    fn re(self) -> f64 {
        self.re
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn modulus_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn conjugate(self) -> Self {
        self.conj()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Maximum modulus of a slice, zero when empty.
pub fn max_abs<S: Scalar>(v: &[S]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.modulus()))
}
