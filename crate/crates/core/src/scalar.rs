//! Element types for the hot loops.
//!
//! Sign and trit sequences are processed as `i8` with exact `i64`
//! accumulation; everything else as `Complex64`.

use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

use crate::averaging::AvgKind;
use crate::correlations::fixed_weight;
use crate::sum::ComplexSum;

pub trait Scalar: Copy + Send + Sync + PartialEq + 'static {
    /// Accumulator type: `i64` for integers, `Complex64` otherwise.
    type Wide: Copy
        + Send
        + Sync
        + Default
        + Add<Output = Self::Wide>
        + Sub<Output = Self::Wide>
        + Mul<Output = Self::Wide>;

    fn one() -> Self;
    fn mul(self, other: Self) -> Self;
    fn conj(self) -> Self;
    fn widen(self) -> Self::Wide;
    fn wide_conj(w: Self::Wide) -> Self::Wide;
    fn wide_to_c64(w: Self::Wide) -> Complex64;
    fn to_c64(self) -> Complex64;

    #[inline]
    fn conj_if(self, c: bool) -> Self {
        if c {
            self.conj()
        } else {
            self
        }
    }
}

impl Scalar for i8 {
    type Wide = i64;

    #[inline]
    fn one() -> Self {
        1
    }
    #[inline]
    fn mul(self, other: Self) -> Self {
        self * other
    }
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn widen(self) -> i64 {
        self as i64
    }
    #[inline]
    fn wide_conj(w: i64) -> i64 {
        w
    }
    #[inline]
    fn wide_to_c64(w: i64) -> Complex64 {
        Complex64::new(w as f64, 0.0)
    }
    #[inline]
    fn to_c64(self) -> Complex64 {
        Complex64::new(self as f64, 0.0)
    }
}

impl Scalar for Complex64 {
    type Wide = Complex64;

    #[inline]
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    #[inline]
    fn mul(self, other: Self) -> Self {
        self * other
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn widen(self) -> Complex64 {
        self
    }
    #[inline]
    fn wide_conj(w: Complex64) -> Complex64 {
        w.conj()
    }
    #[inline]
    fn wide_to_c64(w: Complex64) -> Complex64 {
        w
    }
    #[inline]
    fn to_c64(self) -> Complex64 {
        self
    }
}

/// Weighted accumulation that is exact for integer data.
pub(crate) trait Accumulate: Scalar {
    type Acc: Copy + Default + Send + Sync;
    fn acc_add(acc: &mut Self::Acc, kind: AvgKind, n: u64, x: Self::Wide);
    fn acc_merge(acc: &mut Self::Acc, other: &Self::Acc);
    fn acc_value(acc: &Self::Acc) -> Complex64;
    /// `num / (k * den)`, exact to one rounding for integer accumulators.
    fn acc_ratio(num: &Self::Acc, den: &Self::Acc, k: u64) -> Complex64;
}

const FIXED_ONE: f64 = 18_446_744_073_709_551_616.0; // 2^64

impl Accumulate for i8 {
    type Acc = i128;
    #[inline]
    fn acc_add(acc: &mut i128, kind: AvgKind, n: u64, x: i64) {
        *acc += fixed_weight(kind, n) as i128 * x as i128;
    }
    fn acc_merge(acc: &mut i128, other: &i128) {
        *acc += other;
    }
    fn acc_value(acc: &i128) -> Complex64 {
        Complex64::new(*acc as f64 / FIXED_ONE, 0.0)
    }
    fn acc_ratio(num: &i128, den: &i128, k: u64) -> Complex64 {
        Complex64::new(*num as f64 / (*den * k as i128) as f64, 0.0)
    }
}

impl Accumulate for Complex64 {
    type Acc = ComplexSum;
    #[inline]
    fn acc_add(acc: &mut ComplexSum, kind: AvgKind, n: u64, x: Complex64) {
        acc.add(x * kind.weight(n));
    }
    fn acc_merge(acc: &mut ComplexSum, other: &ComplexSum) {
        acc.merge(other);
    }
    fn acc_value(acc: &ComplexSum) -> Complex64 {
        acc.value()
    }
    fn acc_ratio(num: &ComplexSum, den: &ComplexSum, k: u64) -> Complex64 {
        num.value() / (den.value() * k as f64)
    }
}

/// A dense, unpacked copy of part of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Dense {
    Int(Vec<i8>),
    Complex(Vec<Complex64>),
}

impl Dense {
    pub fn len(&self) -> usize {
        match self {
            Dense::Int(v) => v.len(),
            Dense::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        match self {
            Dense::Int(v) => v.iter().map(|&x| x.to_c64()).collect(),
            Dense::Complex(v) => v.clone(),
        }
    }
}

/// Run a generic kernel on whichever element type a [`Dense`] holds.
#[macro_export]
macro_rules! with_dense {
    ($dense:expr, $v:ident => $body:expr) => {
        match $dense {
            $crate::scalar::Dense::Int($v) => $body,
            $crate::scalar::Dense::Complex($v) => $body,
        }
    };
}
