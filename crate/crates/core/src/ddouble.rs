//! Double-double arithmetic (an unevaluated sum `hi + lo` of two `f64`),
//! giving roughly 106 bits of significand. Used where moment-based
//! determinants would otherwise drown in cancellation.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Unit roundoff of double-double arithmetic.
pub const DD_EPS: f64 = 4.93038065763132e-32; // 2^-104

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DDouble {
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

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl DDouble {
    pub const ZERO: DDouble = DDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DDouble = DDouble { hi: 1.0, lo: 0.0 };

    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        DDouble { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DDouble::from(self.hi.max(0.0).sqrt());
        }
        // One Newton step on the f64 estimate doubles the precision.
        let x = self.hi.sqrt();
        let xx = DDouble::from(x) * DDouble::from(x);
        let correction = (self - xx).hi / (2.0 * x);
        DDouble::from(x) + DDouble::from(correction)
    }

    pub fn powi(self, n: u32) -> Self {
        let mut base = self;
        let mut acc = DDouble::ONE;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }
}

impl From<f64> for DDouble {
    fn from(x: f64) -> Self {
        DDouble { hi: x, lo: 0.0 }
    }
}

impl Neg for DDouble {
    type Output = DDouble;
    fn neg(self) -> DDouble {
        DDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DDouble {
    type Output = DDouble;
    fn add(self, rhs: DDouble) -> DDouble {
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        DDouble { hi, lo }
    }
}

impl Sub for DDouble {
    type Output = DDouble;
    fn sub(self, rhs: DDouble) -> DDouble {
        self + (-rhs)
    }
}

impl Mul for DDouble {
    type Output = DDouble;
    fn mul(self, rhs: DDouble) -> DDouble {
        let (p, e) = two_prod(self.hi, rhs.hi);
        let e = e + (self.hi * rhs.lo + self.lo * rhs.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DDouble { hi, lo }
    }
}

impl Div for DDouble {
    type Output = DDouble;
    fn div(self, rhs: DDouble) -> DDouble {
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * DDouble::from(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * DDouble::from(q2);
        let q3 = r.hi / rhs.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DDouble { hi, lo } + DDouble::from(q3)
    }
}

impl PartialOrd for DDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl std::iter::Sum for DDouble {
    fn sum<I: Iterator<Item = DDouble>>(iter: I) -> DDouble {
        iter.fold(DDouble::ZERO, |a, b| a + b)
    }
}
