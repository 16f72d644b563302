//! High-precision floating point support: MPFR floats via `rug`, plus a
//! minimal complex number type built on them.
//!
//! The system MPFR has no MPC bindings available, so complex arithmetic
//! is hand-rolled here; only the operations actually used by the crate
//! are provided.

use rug::float::Constant;
use rug::{Float, Integer, Rational};

/// π at the given precision.
pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// 2π at the given precision.
pub fn two_pi(prec: u32) -> Float {
    pi(prec) * 2u32
}

/// Float from a rational, at the given precision.
pub fn float_rat(prec: u32, r: &Rational) -> Float {
    Float::with_val(prec, r)
}

/// Float from an integer, at the given precision.
pub fn float_int(prec: u32, n: &Integer) -> Float {
    Float::with_val(prec, n)
}

/// √n for a machine integer n ≥ 0.
pub fn sqrt_u(prec: u32, n: u64) -> Float {
    Float::with_val(prec, n).sqrt()
}

/// x^e for a (possibly negative) machine exponent.
pub fn pow_i(x: &Float, e: i64) -> Float {
    let prec = x.prec();
    let mut acc = Float::with_val(prec, 1);
    let mut base = x.clone();
    let mut n = e.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            acc *= &base;
        }
        base = base.clone().square();
        n >>= 1;
    }
    if e < 0 {
        acc.recip_mut();
    }
    acc
}

/// A complex number with `rug::Float` components.
#[derive(Clone, Debug)]
pub struct Cx {
    pub re: Float,
    pub im: Float,
}

impl Cx {
    pub fn new(re: Float, im: Float) -> Self {
        assert_eq!(re.prec(), im.prec());
        Cx { re, im }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    pub fn zero(prec: u32) -> Self {
        Cx::new(Float::with_val(prec, 0), Float::with_val(prec, 0))
    }

    pub fn one(prec: u32) -> Self {
        Cx::new(Float::with_val(prec, 1), Float::with_val(prec, 0))
    }

    pub fn i(prec: u32) -> Self {
        Cx::new(Float::with_val(prec, 0), Float::with_val(prec, 1))
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Cx::new(Float::with_val(prec, re), Float::with_val(prec, im))
    }

    pub fn from_rat(prec: u32, r: &Rational) -> Self {
        Cx::new(Float::with_val(prec, r), Float::with_val(prec, 0))
    }

    pub fn from_float(re: Float) -> Self {
        let prec = re.prec();
        Cx::new(re, Float::with_val(prec, 0))
    }

    pub fn add(&self, o: &Cx) -> Cx {
        Cx::new(
            Float::with_val(self.prec(), &self.re + &o.re),
            Float::with_val(self.prec(), &self.im + &o.im),
        )
    }

    pub fn sub(&self, o: &Cx) -> Cx {
        Cx::new(
            Float::with_val(self.prec(), &self.re - &o.re),
            Float::with_val(self.prec(), &self.im - &o.im),
        )
    }

    pub fn neg(&self) -> Cx {
        Cx::new(-self.re.clone(), -self.im.clone())
    }

    pub fn mul(&self, o: &Cx) -> Cx {
        let prec = self.prec();
        let re = Float::with_val(prec, &self.re * &o.re) - Float::with_val(prec, &self.im * &o.im);
        let im = Float::with_val(prec, &self.re * &o.im) + Float::with_val(prec, &self.im * &o.re);
        Cx::new(re, im)
    }

    pub fn div(&self, o: &Cx) -> Cx {
        let prec = self.prec();
        let d = o.norm_sq();
        assert!(!d.is_zero(), "complex division by zero");
        let num = self.mul(&o.conj());
        Cx::new(
            Float::with_val(prec, &num.re / &d),
            Float::with_val(prec, &num.im / &d),
        )
    }

    pub fn conj(&self) -> Cx {
        Cx::new(self.re.clone(), -self.im.clone())
    }

    /// |z|².
    pub fn norm_sq(&self) -> Float {
        let prec = self.prec();
        Float::with_val(prec, self.re.clone().square() + self.im.clone().square())
    }

    /// |z|.
    pub fn abs(&self) -> Float {
        self.norm_sq().sqrt()
    }

    /// Scale by a real float.
    pub fn scale_f(&self, f: &Float) -> Cx {
        Cx::new(
            Float::with_val(self.prec(), &self.re * f),
            Float::with_val(self.prec(), &self.im * f),
        )
    }

    /// Scale by a rational.
    pub fn scale_q(&self, q: &Rational) -> Cx {
        let f = Float::with_val(self.prec(), q);
        self.scale_f(&f)
    }

    /// z^n for a machine-integer exponent.
    pub fn pow_i(&self, e: i64) -> Cx {
        let prec = self.prec();
        let mut acc = Cx::one(prec);
        let mut base = self.clone();
        let mut n = e.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base.clone());
            n >>= 1;
        }
        if e < 0 {
            acc = Cx::one(prec).div(&acc);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
}

impl std::fmt::Display for Cx {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} + {}i", self.re.to_f64(), self.im.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Float, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() < tol
    }

    #[test]
    fn complex_field_ops() {
        let prec = 96;
        let a = Cx::from_f64(prec, 3.0, 4.0);
        let b = Cx::from_f64(prec, -1.0, 2.0);
        let s = a.add(&b);
        assert!(close(&s.re, 2.0, 1e-25) && close(&s.im, 6.0, 1e-25));
        let p = a.mul(&b);
        // (3+4i)(−1+2i) = −3 + 6i − 4i − 8 = −11 + 2i
        assert!(close(&p.re, -11.0, 1e-25) && close(&p.im, 2.0, 1e-25));
        let q = p.div(&b);
        assert!(close(&q.re, 3.0, 1e-20) && close(&q.im, 4.0, 1e-20));
        assert!(close(&a.norm_sq(), 25.0, 1e-25));
        assert!(close(&a.abs(), 5.0, 1e-25));
    }

    #[test]
    fn integer_powers() {
        let prec = 96;
        let z = Cx::from_f64(prec, 0.0, 1.0);
        let z4 = z.pow_i(4);
        assert!(close(&z4.re, 1.0, 1e-25) && close(&z4.im, 0.0, 1e-25));
        let zm1 = z.pow_i(-1);
        assert!(close(&zm1.im, -1.0, 1e-25));
        let x = Float::with_val(prec, 2);
        assert!(close(&pow_i(&x, 10), 1024.0, 1e-20));
        assert!(close(&pow_i(&x, -2), 0.25, 1e-25));
    }
}
