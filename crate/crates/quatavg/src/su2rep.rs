//! Symmetric-power representations of the unit quaternions.
//!
//! The weight-2k fiber is the space of homogeneous polynomials of degree
//! 2k−2 in two variables, carrying an invariant inner product in which the
//! monomials are orthogonal with ⟨X^{2k−2−i}Y^i, X^{2k−2−i}Y^i⟩ =
//! 1/binom(2k−2, i).  The triple tensor product of three copies of this
//! representation contains a one-dimensional invariant line spanned by
//!
//! ```text
//! P_{2k} = (X1·Y2 − X2·Y1)^{k−1} (X2·Y3 − X3·Y2)^{k−1} (X3·Y1 − X1·Y3)^{k−1}
//! ```
//!
//! whose monomial coefficients, exact norm, and associated archimedean
//! orbit constants are computed here, together with the bookkeeping for
//! the unramified CM characters that enter the geometric side of the
//! average formulas.

use crate::arith::{binom, chi_m3, chi_m4, gamma_int, Cyclo12};
use crate::{Error, Result};
use rug::{Integer, Rational};

/// Homogeneous polynomial of degree 2k−2 in X, Y with coefficients in
/// Q(ζ12); index `i` holds the coefficient of X^{2k−2−i} Y^i.
#[derive(Debug, Clone, PartialEq)]
pub struct SymPoly {
    pub k: u32,
    pub coeffs: Vec<Cyclo12>,
}

impl SymPoly {
    pub fn new(k: u32, coeffs: Vec<Cyclo12>) -> Result<Self> {
        if k == 0 {
            return Err(Error::Weight(0, "weight parameter must be ≥ 1".into()));
        }
        if coeffs.len() != (2 * k - 1) as usize {
            return Err(Error::Weight(
                2 * k,
                format!("coefficient vector must have length {}", 2 * k - 1),
            ));
        }
        Ok(SymPoly { k, coeffs })
    }

    pub fn zero(k: u32) -> Self {
        SymPoly {
            k,
            coeffs: vec![Cyclo12::zero(); (2 * k - 1) as usize],
        }
    }

    /// The monomial X^{2k−2−i} Y^i.
    pub fn monomial(k: u32, i: u32) -> Self {
        let mut p = SymPoly::zero(k);
        p.coeffs[i as usize] = Cyclo12::one();
        p
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }
}

/// The invariant inner product Σ_i u_i conj(v_i) / binom(2k−2, i),
/// conjugate-linear in the second argument.
pub fn inner_product(u: &SymPoly, v: &SymPoly) -> Result<Cyclo12> {
    if u.k != v.k {
        return Err(Error::Domain(format!(
            "inner product between weight {} and weight {}",
            2 * u.k,
            2 * v.k
        )));
    }
    let n = 2 * u.k as u64 - 2;
    let mut acc = Cyclo12::zero();
    for i in 0..u.coeffs.len() {
        let term = u.coeffs[i].mul(&v.coeffs[i].conj());
        let w = Rational::from((Integer::from(1), binom(n, i as u64)));
        acc = acc.add(&term.scale(&w));
    }
    Ok(acc)
}

/// Monomial coefficients of the trilinear invariant P_{2k}.
///
/// `coeff(i, j, r)` is the coefficient of
/// X1^{2k−2−i}Y1^i ⊗ X2^{2k−2−j}Y2^j ⊗ X3^{2k−2−r}Y3^r; it vanishes
/// unless i + j + r = 3(k−1).
#[derive(Debug, Clone)]
pub struct TriTensor {
    pub k: u32,
    dim: usize,
    c: Vec<Integer>,
}

impl TriTensor {
    /// Expands the product of the three binomial powers directly.
    pub fn expand(k: u32) -> TriTensor {
        assert!(k >= 1, "weight parameter must be ≥ 1");
        let dim = (2 * k - 1) as usize;
        let mut c = vec![Integer::new(); dim * dim * dim];
        let e = (k - 1) as i64;
        for s1 in 0..=e {
            let b1 = binom(e as u64, s1 as u64);
            for s2 in 0..=e {
                let b2 = binom(e as u64, s2 as u64);
                for s3 in 0..=e {
                    let i = s1 + e - s3;
                    let j = e - s1 + s2;
                    let r = e - s2 + s3;
                    let mut term = Integer::from(&b1 * &b2);
                    term *= binom(e as u64, s3 as u64);
                    if (s1 + s2 + s3) % 2 == 1 {
                        term = -term;
                    }
                    let idx = (i as usize * dim + j as usize) * dim + r as usize;
                    c[idx] += term;
                }
            }
        }
        TriTensor { k, dim, c }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coeff(&self, i: u32, j: u32, r: u32) -> &Integer {
        &self.c[(i as usize * self.dim + j as usize) * self.dim + r as usize]
    }

    /// All nonzero entries as ((i, j, r), coefficient).
    pub fn entries(&self) -> Vec<((u32, u32, u32), &Integer)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in 0..self.dim {
                for r in 0..self.dim {
                    let v = &self.c[(i * self.dim + j) * self.dim + r];
                    if *v != 0 {
                        out.push(((i as u32, j as u32, r as u32), v));
                    }
                }
            }
        }
        out
    }
}

/// ‖P_{2k}‖² summed directly from the expansion:
/// Σ C_{i,j,r}² / (binom(2k−2,i) binom(2k−2,j) binom(2k−2,r)).
pub fn norm_sq_p_direct(t: &TriTensor) -> Rational {
    let n = 2 * t.k as u64 - 2;
    let mut acc = Rational::new();
    for ((i, j, r), c) in t.entries() {
        let mut den = binom(n, i as u64);
        den *= binom(n, j as u64);
        den *= binom(n, r as u64);
        let num = Integer::from(c * c);
        acc += Rational::from((num, den));
    }
    acc
}

/// ‖P_{2k}‖² in closed form: Γ(k)³ Γ(3k−1) / Γ(2k−1)³.
pub fn norm_sq_p_closed(k: u32) -> Rational {
    let g = gamma_int(k as u64);
    let mut num = Integer::from(&g * &g);
    num *= &g;
    num *= gamma_int(3 * k as u64 - 1);
    let h = gamma_int(2 * k as u64 - 1);
    let mut den = Integer::from(&h * &h);
    den *= &h;
    Rational::from((num, den))
}

/// Squared norm of the normalized companion vector: ‖P_{2k}‖²/(2k−1).
pub fn norm_sq_w(k: u32) -> Rational {
    norm_sq_p_closed(k) / Rational::from(2 * k - 1)
}

/// The binomial identity Σ_{r=0}^{m} binom(n+r, n) binom(m+n−r, n)
/// = binom(2n+m+1, m), returned as (lhs, rhs).  The summation runs to m.
pub fn sum_binom(n: u64, m: u64) -> (Integer, Integer) {
    let mut lhs = Integer::new();
    for r in 0..=m {
        lhs += binom(n + r, n) * binom(m + n - r, n);
    }
    let rhs = binom(2 * n + m + 1, m);
    (lhs, rhs)
}

/// The two imaginary quadratic fields with extra units: E0 = Q(√−1) and
/// E1 = Q(√−3).  Each carries the data for its unramified characters and
/// the distinguished torus point γ of its CM orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmField {
    E0,
    E1,
}

impl CmField {
    /// Archimedean exponents m must be divisible by this (half the number
    /// of roots of unity in the field).
    pub fn step(self) -> i64 {
        match self {
            CmField::E0 => 2,
            CmField::E1 => 3,
        }
    }

    /// Modulus of the congruence that nonzero exponents must satisfy when
    /// the ramified prime divides the level (number of roots of unity).
    pub fn full_period(self) -> i64 {
        match self {
            CmField::E0 => 4,
            CmField::E1 => 6,
        }
    }

    /// The rational prime ramified in the field.
    pub fn ram_prime(self) -> u64 {
        match self {
            CmField::E0 => 2,
            CmField::E1 => 3,
        }
    }

    /// The associated quadratic Dirichlet character at n.
    pub fn chi(self, n: u64) -> i32 {
        match self {
            CmField::E0 => chi_m4(n),
            CmField::E1 => chi_m3(n),
        }
    }

    /// Exponent t with γ = ζ12^t: γ0 = √−1 = ζ12³ for E0 and
    /// γ1 = (1+√−3)/2 = ζ12² for E1.
    pub fn gamma_zeta_exp(self) -> i64 {
        match self {
            CmField::E0 => 3,
            CmField::E1 => 2,
        }
    }

    pub fn gamma(self) -> Cyclo12 {
        Cyclo12::zeta_pow(self.gamma_zeta_exp())
    }
}

/// An unramified Hecke character of a CM field with archimedean part
/// sgn^{2m}, recorded by its field and exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CharSpec {
    pub field: CmField,
    pub m: i64,
}

/// The archimedean orbit constant
///
/// ```text
/// I^{(m)}_{2k}(γ) = binom(2k−2, r)^{−1} Σ_{i+j = 3(k−1)−r}
///                   γ^{2(k−1−i)} binom(2k−2,i)^{−1} binom(2k−2,j)^{−1} C_{i,j,r}²
/// ```
///
/// with r = m + k − 1, evaluated exactly in Q(ζ12) at γ = ζ12^zeta_exp.
pub fn archimedean_i_zeta(k: u32, m: i64, zeta_exp: i64) -> Result<Cyclo12> {
    let e = k as i64 - 1;
    if m.abs() > e {
        return Err(Error::Domain(format!(
            "archimedean exponent m = {m} out of range for weight {} (|m| ≤ {e})",
            2 * k
        )));
    }
    let t = TriTensor::expand(k);
    let n = 2 * k as u64 - 2;
    let r = m + e;
    let mut acc = Cyclo12::zero();
    let target = 3 * e - r;
    for i in 0..=(2 * e) {
        let j = target - i;
        if !(0..=2 * e).contains(&j) {
            continue;
        }
        let c = t.coeff(i as u32, j as u32, r as u32);
        if *c == 0 {
            continue;
        }
        let mut den = binom(n, i as u64);
        den *= binom(n, j as u64);
        let w = Rational::from((Integer::from(c * c), den));
        let phase = Cyclo12::zeta_pow(zeta_exp * 2 * (e - i));
        acc = acc.add(&phase.scale(&w));
    }
    let pref = Rational::from((Integer::from(1), binom(n, r as u64)));
    Ok(acc.scale(&pref))
}

/// [`archimedean_i_zeta`] at the distinguished torus point of a CM field.
pub fn archimedean_i(k: u32, m: i64, field: CmField) -> Result<Cyclo12> {
    archimedean_i_zeta(k, m, field.gamma_zeta_exp())
}

fn require_delta(field: CmField, delta_sign: Option<i32>) -> Result<i32> {
    match delta_sign {
        Some(d) if d == 1 || d == -1 => Ok(d),
        Some(d) => Err(Error::Domain(format!("delta sign must be ±1, got {d}"))),
        None => Err(Error::Domain(format!(
            "delta sign at the ramified prime {} is required when it divides the level",
            field.ram_prime()
        ))),
    }
}

/// Whether a nonzero exponent survives the local condition at the ramified
/// prime: m ≡ 0 mod 4 (E0) / mod 6 (E1) pairs with δ_p = +1, and
/// m ≡ 2 mod 4 / 3 mod 6 pairs with δ_p = −1.
fn congruence_sign(field: CmField, m: i64) -> i32 {
    if m.rem_euclid(field.full_period()) == 0 {
        1
    } else {
        -1
    }
}

/// All admissible character exponents for weight 2k at level N, in
/// ascending order.  `delta_sign` is the normalized Hecke eigenvalue
/// δ_p(p) = a_p/p^{k−1} ∈ {±1} of the target form at the ramified prime,
/// required exactly when that prime divides N.  The exponent m = 0 is
/// always listed; its sign condition is carried by [`orbit_coefficient`].
pub fn admissible_characters(
    k: u32,
    field: CmField,
    n_level: u64,
    delta_sign: Option<i32>,
) -> Result<Vec<CharSpec>> {
    let ramified_in_level = n_level % field.ram_prime() == 0;
    let delta = if ramified_in_level {
        Some(require_delta(field, delta_sign)?)
    } else {
        None
    };
    let e = k as i64 - 1;
    let mut out = Vec::new();
    let mut m = -e;
    while m <= e {
        if m % field.step() == 0 {
            let keep = if m == 0 {
                true
            } else {
                match delta {
                    Some(d) => congruence_sign(field, m) == d,
                    None => true,
                }
            };
            if keep {
                out.push(CharSpec { field, m });
            }
        }
        m += 1;
    }
    Ok(out)
}

/// The orbit coefficient I_0(Ω) (field E0) or I_1(Ω) (field E1) of the
/// geometric side: the archimedean constant, corrected at the ramified
/// prime when it divides the level.  For Ω trivial the correction is the
/// factor (1 + δ_p)/2 ∈ {0, 1}; for nonzero exponents the congruence must
/// match δ_p (this is exactly the admissibility filter) and the constant
/// is then unchanged.
pub fn orbit_coefficient(
    k: u32,
    spec: &CharSpec,
    n_level: u64,
    delta_sign: Option<i32>,
) -> Result<Cyclo12> {
    let e = k as i64 - 1;
    if spec.m % spec.field.step() != 0 || spec.m.abs() > e {
        return Err(Error::Domain(format!(
            "inadmissible character exponent m = {} for weight {} over {:?}",
            spec.m,
            2 * k,
            spec.field
        )));
    }
    let base = archimedean_i(k, spec.m, spec.field)?;
    if n_level % spec.field.ram_prime() != 0 {
        return Ok(base);
    }
    let delta = require_delta(spec.field, delta_sign)?;
    if spec.m == 0 {
        if delta == 1 {
            Ok(base)
        } else {
            Ok(Cyclo12::zero())
        }
    } else if congruence_sign(spec.field, spec.m) == delta {
        Ok(base)
    } else {
        Err(Error::Domain(format!(
            "character exponent m = {} fails the local condition at p = {} (δ = {delta:+})",
            spec.m,
            spec.field.ram_prime()
        )))
    }
}
