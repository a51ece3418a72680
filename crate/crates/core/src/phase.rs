//! Phases measured in turns (fractions of a full circle) and `e(t) = exp(2πit)`.
//!
//! Long polynomial phases are reduced mod 1 in double-double arithmetic so
//! that `e(P(n))` stays accurate to ~1e-15 for n up to 2^53.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// `e(t) = exp(2πit)`. Exact at multiples of a quarter turn.
pub fn unit(turns: f64) -> Complex64 {
    let t = turns - turns.floor();
    let q = t * 4.0;
    if q == q.floor() {
        return match q as u8 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

/// A phase in [0, 1) carried as an unevaluated sum `hi + lo`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Turns {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

impl Turns {
    pub fn new(t: f64) -> Self {
        Self { hi: t - t.floor(), lo: 0.0 }.normalized()
    }

    fn normalized(self) -> Self {
        let (s, e) = two_sum(self.hi, self.lo);
        let f = s.floor();
        let (s, e) = two_sum(s - f, e);
        if s < 0.0 {
            Self { hi: s + 1.0, lo: e }
        } else if s >= 1.0 {
            Self { hi: s - 1.0, lo: e }
        } else {
            Self { hi: s, lo: e }
        }
    }

    /// `(self * n) mod 1`, exact up to the rounding of the low word.
    pub fn mul_int(self, n: u64) -> Self {
        self.mul_f64(n as f64)
    }

    /// `(self * n) mod 1` for a signed integer.
    pub fn mul_i64(self, n: i64) -> Self {
        let m = self.mul_int(n.unsigned_abs());
        if n < 0 {
            m.neg()
        } else {
            m
        }
    }

    /// `(self * a) mod 1` for a real `a`; exact for integral `a < 2^53`.
    pub fn mul_f64(self, a: f64) -> Self {
        let p = self.hi * a;
        let e = self.hi.mul_add(a, -p);
        let q = self.lo * a;
        let fp = p - p.floor();
        let (s, err) = two_sum(fp, e + q);
        Self { hi: s, lo: err }.normalized()
    }

    pub fn add_f64(self, c: f64) -> Self {
        let c = c - c.floor();
        let (s, err) = two_sum(self.hi, c);
        Self { hi: s, lo: err + self.lo }.normalized()
    }

    pub fn add(self, other: Turns) -> Self {
        let (s, err) = two_sum(self.hi, other.hi);
        Self { hi: s, lo: err + self.lo + other.lo }.normalized()
    }

    pub fn neg(self) -> Self {
        Self { hi: -self.hi, lo: -self.lo }.normalized()
    }

    pub fn value(self) -> f64 {
        let v = self.hi + self.lo;
        if v >= 1.0 {
            v - 1.0
        } else {
            v
        }
    }

    pub fn unit(self) -> Complex64 {
        unit(self.value())
    }
}

/// `P(n) mod 1` for `P(n) = Σ coeffs[j] n^j`, by Horner's rule with a
/// reduction mod 1 after every step.
pub fn poly_turns(coeffs: &[f64], n: u64) -> Turns {
    let mut acc = Turns::default();
    for &c in coeffs.iter().rev() {
        acc = acc.mul_int(n).add_f64(c);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turns_are_exact() {
        assert_eq!(unit(0.5), Complex64::new(-1.0, 0.0));
        assert_eq!(unit(0.25), Complex64::new(0.0, 1.0));
        assert_eq!(unit(-0.25), Complex64::new(0.0, -1.0));
        assert_eq!(unit(3.0), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn mul_int_matches_exact_rational() {
        // t = k / 2^40 is exact, so (t * n) mod 1 can be computed in integers
        let k = 0x9e37_79b9_7fu64;
        let t = Turns::new(k as f64 / (1u64 << 40) as f64);
        for n in [3u64, 1_000_000_000_001, (1 << 53) - 1] {
            let exact = ((k as u128 * n as u128) % (1u128 << 40)) as f64 / (1u64 << 40) as f64;
            assert!((t.mul_int(n).value() - exact).abs() < 1e-15, "{n}");
        }
    }

    #[test]
    fn quadratic_phase_is_accurate_at_large_n() {
        // n^2 * 0.5 mod 1 = 0 for even n, 1/2 for odd n
        for n in [999_999u64, 1_000_000, 123_456_789] {
            let v = poly_turns(&[0.0, 0.0, 0.5], n).value();
            let expect = if n % 2 == 0 { 0.0 } else { 0.5 };
            assert_eq!(v, expect);
        }
        // alpha = 2^-20 is exact in binary, so n^2 alpha mod 1 has a closed form
        let alpha = 1.0 / (1u64 << 20) as f64;
        let n = 3_000_001u64;
        let exact = ((n as u128 * n as u128) % (1u128 << 20)) as f64 / (1u64 << 20) as f64;
        assert_eq!(poly_turns(&[0.0, 0.0, alpha], n).value(), exact);
    }
}
