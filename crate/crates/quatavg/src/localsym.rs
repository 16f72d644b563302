//! Local symbols for rational quaternion algebras.
//!
//! Hilbert symbols over R and Q_p computed by the closed tame/wild
//! formulas, ramification sets and discriminants of (a,b)-algebras,
//! search for a definite presentation of prescribed discriminant, and
//! local solvability criteria (square classes in Q_p, ternary forms,
//! embedding of quadratic orders).

use crate::arith::{factorize, is_prime, is_squarefree, kronecker, prime_divisors};
use crate::{Error, Result};

/// A definite rational quaternion algebra presented as (a, b | Q):
/// i² = a, j² = b, ij = −ji = k.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuatPresentation {
    pub a: i64,
    pub b: i64,
    /// Product of the finite ramified primes.
    pub discriminant: u64,
}

/// Hilbert symbol (a, b)_R: −1 exactly when both arguments are negative.
pub fn hilbert_inf(a: i64, b: i64) -> i32 {
    assert!(a != 0 && b != 0);
    if a < 0 && b < 0 {
        -1
    } else {
        1
    }
}

fn split_valuation(mut n: i64, p: u64) -> (u32, i64) {
    let mut v = 0;
    let p = p as i64;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    (v, n)
}

/// (z−1)/2 mod 2 for odd z.
fn eps2(z: i64) -> u32 {
    debug_assert!(z % 2 != 0);
    (((z - 1) / 2).rem_euclid(2)) as u32
}

/// (z²−1)/8 mod 2 for odd z.
fn omega2(z: i64) -> u32 {
    debug_assert!(z % 2 != 0);
    (((z * z - 1) / 8).rem_euclid(2)) as u32
}

/// Hilbert symbol (a, b)_p over Q_p for a prime p.
pub fn hilbert_p(a: i64, b: i64, p: u64) -> i32 {
    assert!(a != 0 && b != 0, "hilbert symbol needs nonzero arguments");
    debug_assert!(is_prime(p), "p must be prime");
    let (alpha, u) = split_valuation(a, p);
    let (beta, v) = split_valuation(b, p);
    if p == 2 {
        let e = eps2(u) * eps2(v) + alpha * omega2(v) + beta * omega2(u);
        return if e % 2 == 0 { 1 } else { -1 };
    }
    // Tame case: (−1)^{αβ·ε(p)} (u|p)^β (v|p)^α.
    let mut sign = 1i32;
    if alpha % 2 == 1 && beta % 2 == 1 && eps2(p as i64) == 1 {
        sign = -sign;
    }
    if beta % 2 == 1 {
        sign *= kronecker(u, p as i64);
    }
    if alpha % 2 == 1 {
        sign *= kronecker(v, p as i64);
    }
    sign
}

/// The finite primes at which (a,b|Q) ramifies, ascending.
pub fn ramified_primes(a: i64, b: i64) -> Vec<u64> {
    assert!(a != 0 && b != 0);
    let mut candidates = vec![2u64];
    let prod = (a.unsigned_abs()) * (b.unsigned_abs());
    for (p, _) in factorize(prod) {
        if p != 2 {
            candidates.push(p);
        }
    }
    candidates.sort_unstable();
    candidates.dedup();
    candidates
        .into_iter()
        .filter(|&p| hilbert_p(a, b, p) == -1)
        .collect()
}

/// Reduced discriminant of (a,b|Q): the product of the finite ramified
/// primes. Panics if the parity obstruction is violated (it cannot be,
/// by the product formula — kept as a cheap internal check).
pub fn discriminant(a: i64, b: i64) -> u64 {
    let ram = ramified_primes(a, b);
    let total = ram.len() + usize::from(hilbert_inf(a, b) == -1);
    assert!(total % 2 == 0, "odd ramification set violates the product formula");
    ram.iter().product()
}

/// Is x a square in Q_p^×?
pub fn is_square_qp(x: i64, p: u64) -> bool {
    assert!(x != 0);
    let (v, u) = split_valuation(x, p);
    if v % 2 != 0 {
        return false;
    }
    if p == 2 {
        u.rem_euclid(8) == 1
    } else {
        kronecker(u, p as i64) == 1
    }
}

/// Does the ternary form a1x² + a2y² + a3z² represent `a` over Q_p^×?
///
/// The form represents every class except possibly the class of
/// −a1·a2·a3, where the Hilbert-symbol condition decides.
pub fn ternary_represents_qp(a1: i64, a2: i64, a3: i64, a: i64, p: u64) -> bool {
    assert!(a1 != 0 && a2 != 0 && a3 != 0 && a != 0);
    let d = -a1 * a2 * a3;
    if !is_square_qp(a * d, p) {
        // a is not in the exceptional square class.
        return true;
    }
    let lhs = hilbert_p(-1, a, p);
    let rhs = hilbert_p(a1, a2, p) * hilbert_p(a2, a3, p) * hilbert_p(a1, a3, p);
    lhs == rhs
}

fn check_level(n: u64) -> Result<Vec<u64>> {
    if n < 2 {
        return Err(Error::Level(n, "level must be ≥ 2".into()));
    }
    if !is_squarefree(n) {
        return Err(Error::Level(n, "level must be square-free".into()));
    }
    let ps = prime_divisors(n);
    if ps.len() % 2 == 0 {
        return Err(Error::Level(
            n,
            "level must have an odd number of prime factors".into(),
        ));
    }
    Ok(ps)
}

/// Find a definite presentation (a, b) with discriminant exactly `n`.
///
/// Search order: (−1, −n), (−3, −n), then (−q, −n) and (−q, −qn) for
/// primes q ≡ 3 mod 4 ascending below 200. The returned presentation is
/// the first hit, so the choice is deterministic.
pub fn presentation_for_level(n: u64) -> Result<QuatPresentation> {
    check_level(n)?;
    let n_i = n as i64;
    let mut candidates: Vec<(i64, i64)> = vec![(-1, -n_i), (-3, -n_i)];
    let mut q = 3i64;
    while q < 200 {
        if q % 4 == 3 && is_prime(q as u64) {
            candidates.push((-q, -n_i));
            candidates.push((-q, -q * n_i));
        }
        q += 2;
    }
    for (a, b) in candidates {
        if discriminant(a, b) == n {
            return Ok(QuatPresentation {
                a,
                b,
                discriminant: n,
            });
        }
    }
    Err(Error::Level(
        n,
        "no definite presentation found within search bounds".into(),
    ))
}

/// Does the quaternion algebra of discriminant `n` (definite, square-free
/// `n` with an odd number of prime factors) contain an element of reduced
/// trace `t` and reduced norm `m` generating an imaginary quadratic field?
///
/// Equivalent to: the field Q[x]/(x² − tx + m) embeds, i.e. no p | n
/// splits in it: kronecker(t² − 4m, p) ≠ +1 for every p | n.
pub fn exists_trace_norm(n: u64, t: i64, m: i64) -> Result<bool> {
    let ps = check_level(n)?;
    let disc = t * t - 4 * m;
    if disc >= 0 {
        return Ok(false); // not an imaginary quadratic order: cannot embed in a definite algebra
    }
    Ok(ps.iter().all(|&p| kronecker(disc, p as i64) != 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::primes_upto;
    use proptest::prelude::*;

    /// Brute-force oracle for p ∈ {2, 3}: mark every value of
    /// a1x² + a2y² + a3z² mod p^e over primitive (x,y,z), then look for
    /// a·w² among them with w running over p-power scalings. The modulus
    /// is generous enough for Hensel lifting at the small inputs used in
    /// the tests (coefficient and target valuations ≤ 1).
    fn ternary_oracle(a1: i64, a2: i64, a3: i64, a: i64, p: u64) -> bool {
        let e = if p == 2 { 7 } else { 5 };
        let pe = (p as i64).pow(e);
        let mut seen = vec![false; pe as usize];
        for x in 0..pe {
            for y in 0..pe {
                for z in 0..pe {
                    if x % p as i64 == 0 && y % p as i64 == 0 && z % p as i64 == 0 {
                        continue;
                    }
                    let q = (a1 * x % pe * x + a2 * y % pe * y + a3 * z % pe * z).rem_euclid(pe);
                    seen[q as usize] = true;
                }
            }
        }
        // Representing a is the same as representing a·p^{2t}; scan the
        // scalings that stay distinguishable at this modulus.
        for t in 0..=(e - 3) / 2 {
            let scaled = (p as i64).pow(2 * t).checked_mul(a).unwrap().rem_euclid(pe);
            for w in 1..pe {
                if w % p as i64 == 0 {
                    continue;
                }
                let target = (scaled * w % pe * w).rem_euclid(pe);
                if seen[target as usize] {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn infinite_symbol() {
        assert_eq!(hilbert_inf(-1, -1), -1);
        assert_eq!(hilbert_inf(-1, 2), 1);
        assert_eq!(hilbert_inf(3, 5), 1);
    }

    #[test]
    fn known_symbols() {
        // (−1,−1) ramifies exactly at 2 and ∞.
        assert_eq!(hilbert_p(-1, -1, 2), -1);
        assert_eq!(hilbert_p(-1, -1, 3), 1);
        assert_eq!(hilbert_p(-1, -1, 5), 1);
        // (−1,−11): ramified at 11 (11 ≡ 3 mod 4), split at 2.
        assert_eq!(hilbert_p(-1, -11, 11), -1);
        assert_eq!(hilbert_p(-1, -11, 2), 1);
        // (−1,−37): 37 ≡ 1 mod 4 so the symbol at 37 is +1.
        assert_eq!(hilbert_p(-1, -37, 37), 1);
        // (p, q) for odd primes: quadratic reciprocity in symbol form.
        assert_eq!(hilbert_p(3, 5, 5), kronecker(3, 5));
        assert_eq!(hilbert_p(3, 5, 3), kronecker(5, 3));
    }

    #[test]
    fn symmetry_and_bilinearity() {
        let vals = [-15, -11, -7, -5, -3, -2, -1, 1, 2, 3, 5, 7, 11, 15];
        let primes = [2u64, 3, 5, 7, 11, 13];
        for &a in &vals {
            for &b in &vals {
                for &p in &primes {
                    assert_eq!(hilbert_p(a, b, p), hilbert_p(b, a, p), "symmetry ({a},{b})_{p}");
                    // (a, −a) = 1 always.
                    assert_eq!(hilbert_p(a, -a, p), 1, "(a,−a) at {p}, a={a}");
                    // (a, b²·c) = (a, c) with c = 1 here: (a, b²) = 1.
                    assert_eq!(hilbert_p(a, b * b, p), 1, "(a,b²) at {p}");
                }
            }
        }
    }

    #[test]
    fn product_formula_exhaustive_small() {
        let vals = [-30, -17, -12, -11, -5, -3, -2, -1, 1, 2, 3, 5, 10, 21];
        for &a in &vals {
            for &b in &vals {
                let mut prod = hilbert_inf(a, b);
                let mut ps = vec![2u64];
                ps.extend(prime_divisors((a.unsigned_abs()) * (b.unsigned_abs())));
                ps.sort_unstable();
                ps.dedup();
                for p in ps {
                    prod *= hilbert_p(a, b, p);
                }
                assert_eq!(prod, 1, "product formula fails for ({a},{b})");
            }
        }
    }

    #[test]
    fn discriminants_of_standard_presentations() {
        assert_eq!(discriminant(-1, -1), 2);
        assert_eq!(discriminant(-1, -3), 3);
        assert_eq!(discriminant(-1, -11), 11);
        assert_eq!(discriminant(-3, -5), 5);
        assert_eq!(discriminant(-1, -2), 2);
        assert_eq!(discriminant(-7, -13), 13);
        assert_eq!(discriminant(-19, -37), 37);
    }

    #[test]
    fn presentation_search_known_levels() {
        for (n, a, b) in [
            (2u64, -1i64, -2i64),
            (3, -1, -3),
            (5, -3, -5),
            (7, -1, -7),
            (11, -1, -11),
            (13, -7, -13),
            (37, -19, -37),
        ] {
            let pres = presentation_for_level(n).unwrap();
            assert_eq!((pres.a, pres.b), (a, b), "presentation for {n}");
            assert_eq!(pres.discriminant, n);
        }
        assert!(presentation_for_level(15).is_err()); // two prime factors
        assert!(presentation_for_level(12).is_err()); // not square-free
    }

    #[test]
    fn trace_norm_embeddings() {
        // Z[i] (t,n) = (0,1): embeds iff no p|N is ≡ 1 mod 4.
        assert!(exists_trace_norm(11, 0, 1).unwrap());
        assert!(exists_trace_norm(7, 0, 1).unwrap());
        assert!(!exists_trace_norm(5, 0, 1).unwrap());
        assert!(!exists_trace_norm(13, 0, 1).unwrap());
        assert!(!exists_trace_norm(37, 0, 1).unwrap());
        // Z[ζ6] (t,n) = (1,1): embeds iff no p|N is ≡ 1 mod 3.
        assert!(exists_trace_norm(11, 1, 1).unwrap());
        assert!(exists_trace_norm(5, 1, 1).unwrap());
        assert!(!exists_trace_norm(7, 1, 1).unwrap());
        assert!(!exists_trace_norm(13, 1, 1).unwrap());
        // Real quadratic (t² ≥ 4n) never embeds definitely.
        assert!(!exists_trace_norm(11, 3, 1).unwrap());
    }

    #[test]
    fn ternary_versus_oracle_small() {
        // Definite diagonal forms from the presentations in play; modest
        // coefficients keep the oracle affordable.
        let cases = [
            (1i64, 1i64, 1i64),
            (1, 1, 3),
            (1, 3, 3),
            (1, 1, 11),
            (3, 5, 15),
            (1, 2, 2),
        ];
        for &(a1, a2, a3) in &cases {
            for p in [2u64, 3] {
                for a in [1i64, 2, 3, 5, 6, 7, 10] {
                    let fast = ternary_represents_qp(a1, a2, a3, a, p);
                    let slow = ternary_oracle(a1, a2, a3, a, p);
                    assert_eq!(
                        fast, slow,
                        "diag({a1},{a2},{a3}) repr {a} over Q_{p}: fast={fast} oracle={slow}"
                    );
                }
            }
        }
        // Odd-p spot checks worked out by hand. diag(1,1,1) and diag(1,1,5)
        // are isotropic over Q_5 and represent everything; diag(1,2,5) misses
        // exactly the square class of 10 (= -det up to squares, and the symbol
        // condition fails there).
        for a in [1i64, 2, 3, 5, 6, 7] {
            assert!(ternary_represents_qp(1, 1, 1, a, 5));
            assert!(ternary_represents_qp(1, 1, 5, a, 5));
        }
        assert!(!ternary_represents_qp(1, 2, 5, 10, 5));
        assert!(ternary_represents_qp(1, 2, 5, 1, 5));
        assert!(ternary_represents_qp(1, 2, 5, 2, 5));
    }

    #[test]
    fn square_classes() {
        assert!(is_square_qp(4, 2));
        assert!(is_square_qp(9, 2));
        assert!(!is_square_qp(2, 2));
        assert!(!is_square_qp(3, 2));
        assert!(is_square_qp(17, 2)); // 17 ≡ 1 mod 8
        assert!(is_square_qp(4, 7));
        assert!(is_square_qp(2, 7)); // 2 is a QR mod 7
        assert!(!is_square_qp(3, 7));
        assert!(!is_square_qp(7, 7));
        assert!(is_square_qp(49, 7));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(512))]
        #[test]
        fn product_formula_random(a in -300i64..300, b in -300i64..300) {
            prop_assume!(a != 0 && b != 0);
            let mut prod = hilbert_inf(a, b);
            let mut ps = vec![2u64];
            ps.extend(prime_divisors((a.unsigned_abs()) * (b.unsigned_abs())));
            ps.sort_unstable();
            ps.dedup();
            for p in ps {
                prod *= hilbert_p(a, b, p);
            }
            prop_assert_eq!(prod, 1);
        }

        #[test]
        fn symbol_unaffected_by_squares(a in -50i64..50, b in -50i64..50, c in 1i64..20) {
            prop_assume!(a != 0 && b != 0);
            for p in primes_upto(23) {
                prop_assert_eq!(hilbert_p(a, b, p), hilbert_p(a, b * c * c, p));
            }
        }
    }
}
