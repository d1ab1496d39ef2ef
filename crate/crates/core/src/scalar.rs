use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Coefficients of cylinder functions and NT elements: a commutative ring
/// with conjugation.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn conj(&self) -> Self;
    fn from_i64(v: i64) -> Self;
    fn to_c64(&self) -> Complex<f64>;
}

impl<T> Scalar for Complex<T>
where
    T: Clone + Debug + PartialEq + num_traits::Num + Neg<Output = T> + ToPrimitive + FromPrimitive + Send + Sync + 'static,
{
    fn conj(&self) -> Self {
        Complex::conj(self)
    }

    fn from_i64(v: i64) -> Self {
        Complex::new(T::from_i64(v).expect("integer fits scalar"), T::zero())
    }

    fn to_c64(&self) -> Complex<f64> {
        Complex::new(self.re.to_f64().unwrap_or(f64::NAN), self.im.to_f64().unwrap_or(f64::NAN))
    }
}

// Most weights are 0 or 1; these skip the arithmetic (and, for exact
// scalars, the gcd normalization) in those cases.
pub(crate) fn mul_s<S: Scalar>(a: &S, b: &S) -> S {
    if a.is_zero() || b.is_zero() {
        S::zero()
    } else if a.is_one() {
        b.clone()
    } else if b.is_one() {
        a.clone()
    } else {
        a.clone() * b.clone()
    }
}

pub(crate) fn add_s<S: Scalar>(a: &S, b: &S) -> S {
    if a.is_zero() {
        b.clone()
    } else if b.is_zero() {
        a.clone()
    } else {
        a.clone() + b.clone()
    }
}

pub(crate) fn sub_s<S: Scalar>(a: &S, b: &S) -> S {
    if b.is_zero() {
        a.clone()
    } else {
        a.clone() - b.clone()
    }
}

/// Non-negative measure weights: an ordered field.
pub trait Weight:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn of_f64(x: f64) -> Self;
    fn as_f64(&self) -> f64;
    fn abs_val(&self) -> Self;
    /// The count as a weight, used for uniform splits.
    fn of_usize(n: usize) -> Self;
}

macro_rules! impl_weight_float {
    ($t:ty) => {
        impl Weight for $t {
            fn of_f64(x: f64) -> Self {
                x as $t
            }
            fn as_f64(&self) -> f64 {
                *self as f64
            }
            fn abs_val(&self) -> Self {
                self.abs()
            }
            fn of_usize(n: usize) -> Self {
                n as $t
            }
        }
    };
}

impl_weight_float!(f32);
impl_weight_float!(f64);

impl Weight for BigRational {
    fn of_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite weight")
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn of_usize(n: usize) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}

/// Real arithmetic for the thermodynamic layer.
pub trait Real: nalgebra::RealField + Copy + Weight + FromPrimitive + ToPrimitive {}

impl<T: nalgebra::RealField + Copy + Weight + FromPrimitive + ToPrimitive> Real for T {}
