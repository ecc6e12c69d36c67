//! Extended-precision scalars built on MPFR.
//!
//! Only real MPFR floats are used from `rug`; the complex type here is a thin
//! pair with the handful of operations the polynomial code needs.

use num_complex::Complex64;
use rug::float::Constant;
use rug::Float;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Default mantissa width for polynomial work.
pub const DEFAULT_PREC: u32 = 256;

pub fn f(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

pub fn zero(prec: u32) -> Float {
    Float::new(prec)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn two_pi(prec: u32) -> Float {
    pi(prec) * 2u32
}

/// Unit roundoff of a given precision, as a float of that precision.
pub fn eps(prec: u32) -> Float {
    Float::with_val(prec, Float::u_exp(1, 1 - prec as i32))
}

#[derive(Clone, PartialEq)]
pub struct MpComplex {
    pub re: Float,
    pub im: Float,
}

impl fmt::Debug for MpComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:e} {:+e}j)", self.re.to_f64(), self.im.to_f64())
    }
}

impl MpComplex {
    pub fn new(re: Float, im: Float) -> Self {
        MpComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        MpComplex { re: Float::new(prec), im: Float::new(prec) }
    }

    pub fn from_real(x: Float) -> Self {
        let prec = x.prec();
        MpComplex { re: x, im: Float::new(prec) }
    }

    pub fn from_c64(prec: u32, z: Complex64) -> Self {
        MpComplex { re: f(prec, z.re), im: f(prec, z.im) }
    }

    pub fn j(prec: u32, omega: &Float) -> Self {
        MpComplex { re: Float::new(prec), im: Float::with_val(prec, omega) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn conj(&self) -> Self {
        MpComplex { re: self.re.clone(), im: Float::with_val(self.prec(), -&self.im) }
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn scale(&self, k: &Float) -> Self {
        let p = self.prec();
        MpComplex { re: Float::with_val(p, &self.re * k), im: Float::with_val(p, &self.im * k) }
    }

    pub fn recip(&self) -> Self {
        let p = self.prec();
        let n = self.norm_sqr();
        MpComplex {
            re: Float::with_val(p, &self.re / &n),
            im: Float::with_val(p, -Float::with_val(p, &self.im / &n)),
        }
    }

    pub fn sqrt(&self) -> Self {
        let p = self.prec();
        let r = self.abs();
        let half = f(p, 0.5);
        let mut re = Float::with_val(p, &r + &self.re) * &half;
        re = re.sqrt();
        let mut im = Float::with_val(p, &r - &self.re) * &half;
        im = im.sqrt();
        if self.im.is_sign_negative() {
            im = -im;
        }
        MpComplex { re, im }
    }
}

impl Add for &MpComplex {
    type Output = MpComplex;
    fn add(self, o: &MpComplex) -> MpComplex {
        let p = self.prec();
        MpComplex { re: Float::with_val(p, &self.re + &o.re), im: Float::with_val(p, &self.im + &o.im) }
    }
}

impl Sub for &MpComplex {
    type Output = MpComplex;
    fn sub(self, o: &MpComplex) -> MpComplex {
        let p = self.prec();
        MpComplex { re: Float::with_val(p, &self.re - &o.re), im: Float::with_val(p, &self.im - &o.im) }
    }
}

impl Mul for &MpComplex {
    type Output = MpComplex;
    fn mul(self, o: &MpComplex) -> MpComplex {
        let p = self.prec();
        let ac = Float::with_val(p, &self.re * &o.re);
        let bd = Float::with_val(p, &self.im * &o.im);
        let ad = Float::with_val(p, &self.re * &o.im);
        let bc = Float::with_val(p, &self.im * &o.re);
        MpComplex { re: ac - bd, im: ad + bc }
    }
}

impl Div for &MpComplex {
    type Output = MpComplex;
    fn div(self, o: &MpComplex) -> MpComplex {
        self * &o.recip()
    }
}

impl Neg for &MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        let p = self.prec();
        MpComplex { re: Float::with_val(p, -&self.re), im: Float::with_val(p, -&self.im) }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for MpComplex {
            type Output = MpComplex;
            fn $m(self, o: MpComplex) -> MpComplex {
                (&self).$m(&o)
            }
        }
        impl $tr<&MpComplex> for MpComplex {
            type Output = MpComplex;
            fn $m(self, o: &MpComplex) -> MpComplex {
                (&self).$m(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);
