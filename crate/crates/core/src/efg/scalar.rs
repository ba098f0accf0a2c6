use core::fmt::Debug;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number used for the counterexample assertions.
pub type Q = BigRational;

/// Largest denominator [`rationalize`] will look for before falling back to the
/// exact binary value of the float.
pub const MAX_DENOMINATOR: i64 = 1_000_000_000;

/// Number type the generic evaluators run on: `f64` for everything large and [`Q`]
/// for exact checks on the small counterexample games.
pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    /// Strictly better than `best` for argmax purposes. Floats need a margin so that
    /// rounding noise does not break the lowest-index tie rule.
    fn exceeds(&self, best: &Self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn zero() -> Self {
        0.0
    }
    #[inline]
    fn one() -> Self {
        1.0
    }
    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(&self) -> f64 {
        *self
    }
    #[inline]
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    #[inline]
    fn exceeds(&self, best: &Self) -> bool {
        *self > *best + 1e-12 * best.abs().max(1.0)
    }
}

impl Scalar for Q {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(x: f64) -> Self {
        rationalize(x)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn exceeds(&self, best: &Self) -> bool {
        self > best
    }
}

/// Recovers the simple fraction a float was written as.
///
/// Game definitions use decimals and small fractions (`3.500001`, `1/30`, `2/3`).
/// The continued-fraction expansion of the float's exact binary value has a
/// convergent equal to that fraction whenever its denominator is at most
/// [`MAX_DENOMINATOR`]; the first convergent that rounds back to the same float is
/// returned. Values without such a convergent are returned as their exact binary
/// value.
pub fn rationalize(x: f64) -> Q {
    assert!(x.is_finite(), "cannot rationalize {x}");
    let exact = BigRational::from_float(x).expect("finite float");
    if exact.is_integer() {
        return exact;
    }
    let max_den = BigInt::from(MAX_DENOMINATOR);

    let mut rest = exact.clone();
    let (mut h0, mut h1) = (BigInt::one(), BigInt::zero());
    let (mut k0, mut k1) = (BigInt::zero(), BigInt::one());
    loop {
        let a = rest.floor().to_integer();
        let h2 = &a * &h0 + &h1;
        let k2 = &a * &k0 + &k1;
        if k2 > max_den {
            break;
        }
        let candidate = BigRational::new(h2.clone(), k2.clone());
        if ToPrimitive::to_f64(&candidate) == Some(x) {
            return candidate;
        }
        h1 = core::mem::replace(&mut h0, h2);
        k1 = core::mem::replace(&mut k0, k2);
        let frac = &rest - BigRational::from_integer(a);
        if Zero::is_zero(&frac) {
            break;
        }
        rest = frac.recip();
    }
    exact
}

/// Absolute value helper that works for both scalar kinds.
pub fn abs<S: Scalar>(x: S) -> S {
    if x < S::zero() {
        -x
    } else {
        x
    }
}

/// `Q` from a small fraction; convenience for tests and game tables.
pub fn q(num: i64, den: i64) -> Q {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_is_negative(x: &Q) -> bool {
    x.is_negative()
}
