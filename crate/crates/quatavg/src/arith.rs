//! Exact integer, rational, and cyclotomic arithmetic.
//!
//! Everything in this module is exact: `rug::Integer` / `rug::Rational`
//! throughout, plus a tiny model of the cyclotomic field Q(ζ12) used to
//! keep archimedean orbit coefficients exact until the final numeric
//! conversion.

use rug::{Float, Integer, Rational};

/// Integer from a machine integer.
pub fn int(n: i64) -> Integer {
    Integer::from(n)
}

/// Rational from a machine integer.
pub fn rat(n: i64) -> Rational {
    Rational::from(n)
}

/// Rational `num/den`.
pub fn ratq(num: i64, den: i64) -> Rational {
    assert!(den != 0, "zero denominator");
    Rational::from((num, den))
}

/// Binomial coefficient C(n, k), exact.
pub fn binom(n: u64, k: u64) -> Integer {
    if k > n {
        return Integer::new();
    }
    let k = k.min(n - k);
    let mut acc = Integer::from(1);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1; // exact at every step: product of j consecutive integers is divisible by j!
    }
    acc
}

/// Factorial n!, exact.
pub fn factorial(n: u64) -> Integer {
    let mut acc = Integer::from(1);
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// Gamma function at a positive integer: Γ(n) = (n−1)!.
pub fn gamma_int(n: u64) -> Integer {
    assert!(n >= 1, "gamma_int needs n >= 1");
    factorial(n - 1)
}

/// Kronecker symbol (a|b), fully general (GMP semantics).
pub fn kronecker(a: i64, b: i64) -> i32 {
    Integer::from(a).kronecker(&Integer::from(b))
}

/// The quadratic character attached to Q(i): χ₋₄(n) = (−4|n).
pub fn chi_m4(n: u64) -> i32 {
    kronecker(-4, n as i64)
}

/// The quadratic character attached to Q(√−3): χ₋₃(n) = (−3|n).
pub fn chi_m3(n: u64) -> i32 {
    kronecker(-3, n as i64)
}

/// Trial-division factorization of `n ≥ 1` into (prime, exponent) pairs.
pub fn factorize(n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize needs n >= 1");
    let mut n = n;
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// The distinct prime divisors of `n`.
pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

/// Is `n` square-free?
pub fn is_squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

/// Number of distinct prime factors ω(n).
pub fn omega(n: u64) -> u32 {
    factorize(n).len() as u32
}

/// Euler totient φ(n).
pub fn euler_phi(n: u64) -> u64 {
    let mut phi = n;
    for (p, _) in factorize(n) {
        phi = phi / p * (p - 1);
    }
    phi
}

/// Primality by trial division (adequate for the desk-scale levels here).
pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n).len() == 1 && factorize(n)[0].1 == 1
}

/// All primes ≤ `n`, by sieve.
pub fn primes_upto(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut p = 2usize;
    while p * p <= n {
        if sieve[p] {
            let mut q = p * p;
            while q <= n {
                sieve[q] = false;
                q += p;
            }
        }
        p += 1;
    }
    (2..=n).filter(|&i| sieve[i]).map(|i| i as u64).collect()
}

/// gcd of two rationals: the positive generator of the fractional ideal
/// they generate over Z (gcd of numerators over lcm of denominators).
pub fn rational_gcd(a: &Rational, b: &Rational) -> Rational {
    if a.cmp0() == std::cmp::Ordering::Equal {
        return Rational::from(b.clone().abs());
    }
    if b.cmp0() == std::cmp::Ordering::Equal {
        return Rational::from(a.clone().abs());
    }
    // gcd(p/q, r/s) = gcd(p*s, r*q) / (q*s), reduced.
    let (p, q) = (a.numer(), a.denom());
    let (r, s) = (b.numer(), b.denom());
    let num = Integer::from(p * s).gcd(&Integer::from(r * q));
    Rational::from((num, Integer::from(q * s)))
}

/// Best rational approximation to `x` by continued fractions, with
/// denominator bound and absolute tolerance. Returns `None` if no
/// convergent with denominator ≤ `max_den` lands within `tol`.
pub fn reconstruct_rational(x: &Float, max_den: u64, tol: &Float) -> Option<Rational> {
    let prec = x.prec();
    let mut v = x.clone();
    // Convergent recurrences.
    let mut h_prev = Integer::from(1);
    let mut h_prev2 = Integer::from(0);
    let mut k_prev = Integer::from(0);
    let mut k_prev2 = Integer::from(1);
    let max_den = Integer::from(max_den);
    for _ in 0..64 {
        let a = v.clone().floor();
        let a_int = a.to_integer()?;
        let h = Integer::from(&a_int * &h_prev) + &h_prev2;
        let k = Integer::from(&a_int * &k_prev) + &k_prev2;
        if k > max_den {
            return None;
        }
        let cand = Rational::from((h.clone(), k.clone()));
        let mut err = Float::with_val(prec, &cand);
        err -= x;
        err.abs_mut();
        if err <= *tol {
            return Some(cand);
        }
        let frac = Float::with_val(prec, &v - &a);
        if frac.is_zero() {
            return None;
        }
        v = Float::with_val(prec, frac.recip());
        h_prev2 = std::mem::replace(&mut h_prev, h);
        k_prev2 = std::mem::replace(&mut k_prev, k);
    }
    None
}

/// An element of Q(ζ12), ζ12 = e^{iπ/6}, on the power basis 1, ζ, ζ², ζ³
/// with the reduction ζ⁴ = ζ² − 1 (the 12th cyclotomic polynomial is
/// x⁴ − x² + 1).
///
/// This tiny exact layer is enough to carry every root of unity of order
/// dividing 12 — in particular i = ζ³, the primitive 6th root ζ² and
/// √3 = 2ζ − ζ³ — so orbit coefficients stay exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cyclo12 {
    pub c: [Rational; 4],
}

impl Cyclo12 {
    pub fn zero() -> Self {
        Cyclo12 {
            c: [rat(0), rat(0), rat(0), rat(0)],
        }
    }

    pub fn one() -> Self {
        Cyclo12 {
            c: [rat(1), rat(0), rat(0), rat(0)],
        }
    }

    pub fn from_rational(r: Rational) -> Self {
        Cyclo12 {
            c: [r, rat(0), rat(0), rat(0)],
        }
    }

    /// ζ12^e for any integer exponent.
    pub fn zeta_pow(e: i64) -> Self {
        let e = e.rem_euclid(12);
        let (half, sign) = if e >= 6 { (e - 6, -1i64) } else { (e, 1) };
        let mut out = Self::zero();
        match half {
            0 => out.c[0] = rat(sign),
            1 => out.c[1] = rat(sign),
            2 => out.c[2] = rat(sign),
            3 => out.c[3] = rat(sign),
            4 => {
                // ζ⁴ = ζ² − 1
                out.c[0] = rat(-sign);
                out.c[2] = rat(sign);
            }
            5 => {
                // ζ⁵ = ζ³ − ζ
                out.c[1] = rat(-sign);
                out.c[3] = rat(sign);
            }
            _ => unreachable!(),
        }
        out
    }

    /// √3 = ζ + ζ^{−1} = 2ζ − ζ³.
    pub fn sqrt3() -> Self {
        let mut out = Self::zero();
        out.c[1] = rat(2);
        out.c[3] = rat(-1);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| x.cmp0() == std::cmp::Ordering::Equal)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for i in 0..4 {
            out.c[i] += &other.c[i];
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for i in 0..4 {
            out.c[i] -= &other.c[i];
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = self.clone();
        for i in 0..4 {
            out.c[i] = -out.c[i].clone();
        }
        out
    }

    pub fn scale(&self, r: &Rational) -> Self {
        let mut out = self.clone();
        for i in 0..4 {
            out.c[i] *= r;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        // Schoolbook product, degree ≤ 6, then reduce by
        // ζ⁶ = −1, ζ⁵ = ζ³ − ζ, ζ⁴ = ζ² − 1.
        let mut full = [
            rat(0),
            rat(0),
            rat(0),
            rat(0),
            rat(0),
            rat(0),
            rat(0),
        ];
        for i in 0..4 {
            if self.c[i].cmp0() == std::cmp::Ordering::Equal {
                continue;
            }
            for j in 0..4 {
                full[i + j] += Rational::from(&self.c[i] * &other.c[j]);
            }
        }
        let c6 = full[6].clone();
        full[0] -= c6; // ζ⁶ = −1
        let c5 = full[5].clone();
        full[3] += c5.clone(); // ζ⁵ = ζ³ − ζ
        full[1] -= c5;
        let c4 = full[4].clone();
        full[2] += c4.clone(); // ζ⁴ = ζ² − 1
        full[0] -= c4;
        Cyclo12 {
            c: [
                full[0].clone(),
                full[1].clone(),
                full[2].clone(),
                full[3].clone(),
            ],
        }
    }

    /// Complex conjugation (ζ ↦ ζ^{−1}).
    pub fn conj(&self) -> Self {
        // conj(1, ζ, ζ², ζ³) = (1, ζ − ζ³, 1 − ζ², −ζ³).
        let a = &self.c;
        Cyclo12 {
            c: [
                Rational::from(&a[0] + &a[2]),
                a[1].clone(),
                -a[2].clone(),
                -Rational::from(&a[1] + &a[3]),
            ],
        }
    }

    /// Is this element fixed by complex conjugation?
    pub fn is_real(&self) -> bool {
        *self == self.conj()
    }

    /// Extract a rational value if the element lies in Q.
    pub fn as_rational(&self) -> Option<Rational> {
        if self.c[1].cmp0() == std::cmp::Ordering::Equal
            && self.c[2].cmp0() == std::cmp::Ordering::Equal
            && self.c[3].cmp0() == std::cmp::Ordering::Equal
        {
            Some(self.c[0].clone())
        } else {
            None
        }
    }

    /// Numeric evaluation at ζ = e^{iπ/6} = (√3 + i)/2.
    pub fn to_cx(&self, prec: u32) -> crate::hp::Cx {
        use crate::hp::Cx;
        let half_sqrt3 = Float::with_val(prec, 3u32).sqrt() / 2u32;
        let half = Float::with_val(prec, Rational::from((1, 2)));
        // Powers of ζ on the basis: 1, ζ, ζ², ζ³.
        let pows = [
            Cx::new(Float::with_val(prec, 1), Float::with_val(prec, 0)),
            Cx::new(half_sqrt3.clone(), half.clone()),
            Cx::new(half, half_sqrt3),
            Cx::new(Float::with_val(prec, 0), Float::with_val(prec, 1)),
        ];
        let mut acc = Cx::zero(prec);
        for i in 0..4 {
            let coeff = Float::with_val(prec, &self.c[i]);
            acc = acc.add(&pows[i].scale_f(&coeff));
        }
        acc
    }
}

impl std::fmt::Display for Cyclo12 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} + {}*z + {}*z^2 + {}*z^3",
            self.c[0], self.c[1], self.c[2], self.c[3]
        )
    }
}
