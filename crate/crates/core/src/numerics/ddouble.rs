//! Double-double arithmetic (~106-bit significand) built from error-free
//! transformations of `f64` operations.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl DDouble {
    pub const ZERO: DDouble = DDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DDouble = DDouble { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        DDouble { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return DDouble::ZERO;
        }
        // One Newton step on the f64 estimate doubles the precision.
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = ((self.hi - p) - e + self.lo) / (2.0 * x);
        let (hi, lo) = quick_two_sum(x, r);
        DDouble { hi, lo }
    }

    /// `self * b` for an `f64` scalar, cheaper than the full product.
    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        DDouble { hi, lo }
    }
}

impl From<f64> for DDouble {
    fn from(x: f64) -> Self {
        DDouble::from_f64(x)
    }
}

impl Neg for DDouble {
    type Output = DDouble;
    #[inline]
    fn neg(self) -> DDouble {
        DDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for DDouble {
    type Output = DDouble;
    #[inline]
    fn add(self, b: DDouble) -> DDouble {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
        DDouble { hi, lo }
    }
}

impl Sub for DDouble {
    type Output = DDouble;
    #[inline]
    fn sub(self, b: DDouble) -> DDouble {
        self + (-b)
    }
}

impl Mul for DDouble {
    type Output = DDouble;
    #[inline]
    fn mul(self, b: DDouble) -> DDouble {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DDouble { hi, lo }
    }
}

impl Div for DDouble {
    type Output = DDouble;
    fn div(self, b: DDouble) -> DDouble {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        DDouble { hi, lo } + DDouble::from_f64(q3)
    }
}

impl PartialOrd for DDouble {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(std::cmp::Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}
