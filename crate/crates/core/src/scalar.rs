//! Floating-point abstraction shared by the model, loss and optimizer code.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar the encoder can be instantiated with.
///
/// Training runs at `f32`; gradient checks run at `f64` where central
/// differences are accurate enough to compare against backpropagation.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossless for `f64` inputs representable in `Self`, rounding otherwise.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to every Scalar")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    fn as_f32(self) -> f32 {
        self.to_f32().expect("Scalar converts to f32")
    }

    fn from_f32(value: f32) -> Self {
        Self::of(value as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))`
#[inline]
pub fn gelu<T: Scalar>(x: T) -> T {
    let c = T::of(0.797_884_560_802_865_4);
    let a = T::of(0.044_715);
    let half = T::of(0.5);
    let inner = c * (x + a * x * x * x);
    half * x * (T::one() + inner.tanh())
}

/// Derivative of [`gelu`].
#[inline]
pub fn gelu_grad<T: Scalar>(x: T) -> T {
    let c = T::of(0.797_884_560_802_865_4);
    let a = T::of(0.044_715);
    let half = T::of(0.5);
    let inner = c * (x + a * x * x * x);
    let t = inner.tanh();
    let dinner = c * (T::one() + T::of(3.0) * a * x * x);
    half * (T::one() + t) + half * x * (T::one() - t * t) * dinner
}
