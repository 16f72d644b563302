//! Period functionals on quaternionic eigenforms: the Petersson pairing,
//! trilinear periods against the invariant tensor, central L-value
//! ratios in Ichino's normalization, and toric periods attached to the
//! two imaginary quadratic fields with extra units, with their
//! Waldspurger ratios.
//!
//! Class vectors are always *function values*: for an eigenform these
//! are the fibers `Eigenform::class_vectors`, related to the orthonormal
//! coordinates by a factor √|Γ_j| per class.  All pairing weights and
//! volume factors are explicit here, so period values are meaningful
//! numbers rather than basis-dependent coordinates.

use crate::arith::{euler_phi, prime_divisors, ratq};
use crate::brandt::{embed_c2, inner_invariant, sym2x2, Eigenform, WeightSpace};
use crate::hp::{float_int, float_rat, pi, pow_i, sqrt_u, two_pi, Cx};
use crate::quatlat::Quat;
use crate::su2rep::{norm_sq_p_closed, CmField, TriTensor};
use crate::{Error, Result};
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::collections::BTreeMap;

/// Shared context for period computations on a fixed weight space:
/// the compact-group volume, the expanded invariant tensor and its norm.
#[derive(Debug, Clone)]
pub struct PeriodCtx<'a> {
    pub ws: &'a WeightSpace,
    /// vol(K′) = 24/φ(N); satisfies vol(K′) · mass = 2 exactly.
    pub vol_kprime: Rational,
    tri: TriTensor,
    /// ‖P_{2k}‖ for the invariant tensor of the ambient weight.
    p_norm: Float,
}

impl<'a> PeriodCtx<'a> {
    pub fn new(ws: &'a WeightSpace) -> PeriodCtx<'a> {
        let n = ws.class_set.level;
        let vol_kprime = ratq(24, euler_phi(n) as i64);
        let total = Rational::from(&vol_kprime * &ws.class_set.mass());
        assert_eq!(total, ratq(2, 1), "volume–mass identity failed");
        let tri = TriTensor::expand(ws.k);
        let p_norm = float_rat(ws.prec, &norm_sq_p_closed(ws.k)).sqrt();
        PeriodCtx {
            ws,
            vol_kprime,
            tri,
            p_norm,
        }
    }

    pub fn level(&self) -> u64 {
        self.ws.class_set.level
    }

    pub fn k(&self) -> u32 {
        self.ws.k
    }

    pub fn prec(&self) -> u32 {
        self.ws.prec
    }
}

/// Which L-value ratio a [`LRatio`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioKind {
    /// Central triple-product ratio L(1/2, f×g×h) / ∏ L(1, Ad).
    Triple,
    /// Central twisted base-change ratio L(1/2, π_E ⊗ Ω) / L(1, Ad).
    Toric,
}

/// A nonnegative ratio of a central L-value to adjoint L-values at 1,
/// together with the local root-number (or admissibility) verdict that
/// gates it.
#[derive(Debug, Clone)]
pub struct LRatio {
    pub value: Float,
    pub kind: RatioKind,
    pub epsilon_ok: bool,
}

pub(crate) fn fact(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}

/// Γ(n) = (n−1)! for integer n ≥ 1.
pub(crate) fn gamma_int(n: u32) -> Integer {
    fact(n - 1)
}

/// The Petersson pairing vol(K′) · Σ_j ⟨u_j, v_j⟩ / |Γ_j| of two
/// families of class vectors (function values).
pub fn petersson_pair(u: &[Vec<Cx>], v: &[Vec<Cx>], ctx: &PeriodCtx) -> Cx {
    let cs = &ctx.ws.class_set;
    let k = ctx.k();
    let mut acc = Cx::zero(ctx.prec());
    for j in 0..cs.h() {
        let gamma = cs.left_orders[j].unit_order;
        let term = inner_invariant(k, &u[j], &v[j]).scale_q(&Rational::from((1u64, gamma)));
        acc = acc.add(&term);
    }
    acc.scale_q(&ctx.vol_kprime)
}

/// ‖φ‖² in the Petersson normalization.  Eigenforms as produced by the
/// spectral decomposition have unit coordinates, so this is 24/φ(N) for
/// every one of them; the constant function at k = 1 has norm² = 2.
pub fn petersson_norm_sq(u: &[Vec<Cx>], ctx: &PeriodCtx) -> Float {
    petersson_pair(u, u, ctx).re
}

/// The trilinear period
///
/// ```text
/// T(φ1, φ2, φ3) = vol(K′) Σ_j ⟨φ1_j ⊗ φ2_j ⊗ φ3_j, P_{2k}⟩ / (‖P_{2k}‖ · |Γ_j|)
/// ```
///
/// with the tensor-product inner product contracting each slot through
/// the invariant pairing.  Linear in each argument and symmetric under
/// permutations of the three slots.
pub fn trilinear_period(u: &[Vec<Cx>], v: &[Vec<Cx>], w: &[Vec<Cx>], ctx: &PeriodCtx) -> Cx {
    let cs = &ctx.ws.class_set;
    let prec = ctx.prec();
    let e = 2 * ctx.k() as u64 - 2;
    let entries = ctx.tri.entries();
    let mut acc = Cx::zero(prec);
    for j in 0..cs.h() {
        let mut fiber = Cx::zero(prec);
        for ((n1, n2, n3), c) in &entries {
            if **c == 0 {
                continue;
            }
            let den = binom3(e, *n1 as u64, *n2 as u64, *n3 as u64);
            let weight = Rational::from((Integer::from(*c), den));
            let prod = u[j][*n1 as usize]
                .mul(&v[j][*n2 as usize])
                .mul(&w[j][*n3 as usize]);
            fiber = fiber.add(&prod.scale_q(&weight));
        }
        let gamma = cs.left_orders[j].unit_order;
        acc = acc.add(&fiber.scale_q(&Rational::from((1u64, gamma))));
    }
    let inv_norm = Float::with_val(prec, ctx.p_norm.clone().recip_ref());
    acc.scale_q(&ctx.vol_kprime).scale_f(&inv_norm)
}

fn binom3(e: u64, n1: u64, n2: u64, n3: u64) -> Integer {
    let mut b = crate::arith::binom(e, n1);
    b *= crate::arith::binom(e, n2);
    b *= crate::arith::binom(e, n3);
    b
}

/// Whether the triple of local signs at every prime dividing the level
/// multiplies to +1, i.e. whether all local root numbers of f × g × h
/// allow a nonzero central value.  Errors if any form is missing its
/// sign at some p | N.
pub fn epsilon_condition(f: &Eigenform, g: &Eigenform, h: &Eigenform, level: u64) -> Result<bool> {
    for p in prime_divisors(level) {
        let mut prod = 1i32;
        for form in [f, g, h] {
            let d = form.delta.get(&p).copied().ok_or_else(|| {
                Error::Domain(format!("missing local sign at p = {p} on an eigenform"))
            })?;
            prod *= d;
        }
        if prod != 1 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The central triple-product ratio
///
/// ```text
/// L(1/2, f×g×h) / (L(1,Ad f) L(1,Ad g) L(1,Ad h))
///   = |T(f,g,h)|² / (‖f‖²‖g‖²‖h‖²) · Γ(k)³Γ(3k−1)/Γ(2k−1)³
///     · 48 N² / (2^{ω(N)} φ(N))
/// ```
///
/// when the local sign condition holds, and 0 otherwise.  The constant
/// Γ(k)³Γ(3k−1)/Γ(2k−1)³ is ‖P_{2k}‖², which undoes the unit-tensor
/// normalization inside [`trilinear_period`]: the ratio depends only on
/// the raw contraction of the three fibers against P_{2k}.  Invariant
/// under rescaling any of the three forms.
pub fn ichino_ratio(f: &Eigenform, g: &Eigenform, h: &Eigenform, ctx: &PeriodCtx) -> Result<LRatio> {
    let prec = ctx.prec();
    if !epsilon_condition(f, g, h, ctx.level())? {
        return Ok(LRatio {
            value: Float::with_val(prec, 0),
            kind: RatioKind::Triple,
            epsilon_ok: false,
        });
    }
    let t = trilinear_period(&f.class_vectors, &g.class_vectors, &h.class_vectors, ctx);
    let mut norms = Float::with_val(prec, 1);
    for form in [f, g, h] {
        norms *= petersson_norm_sq(&form.class_vectors, ctx);
    }
    let k = ctx.k();
    let n = ctx.level();
    let omega = prime_divisors(n).len() as u32;
    let mut num = gamma_int(k).pow(3u32);
    num *= gamma_int(3 * k - 1);
    num *= Integer::from(48u32) * Integer::from(n) * Integer::from(n);
    let mut den = gamma_int(2 * k - 1).pow(3u32);
    den *= Integer::from(1) << omega;
    den *= Integer::from(euler_phi(n));
    let pref = float_rat(prec, &Rational::from((num, den)));
    let mut value = t.norm_sq();
    value /= norms;
    value *= pref;
    Ok(LRatio {
        value,
        kind: RatioKind::Triple,
        epsilon_ok: true,
    })
}

/// The algebraic normalization of the central triple-product value:
/// the Ichino ratio rescaled by 2^{ω(N)+4k−2}/N², which lands in Q for
/// eigenforms with rational Hecke eigenvalues.
pub fn l_algebraic(f: &Eigenform, g: &Eigenform, h: &Eigenform, ctx: &PeriodCtx) -> Result<Float> {
    let r = ichino_ratio(f, g, h, ctx)?;
    let n = ctx.level();
    let omega = prime_divisors(n).len() as u32;
    let shift = omega + 4 * ctx.k() - 2;
    let scale = Rational::from((Integer::from(1) << shift, Integer::from(n) * Integer::from(n)));
    let mut v = r.value;
    v *= float_rat(ctx.prec(), &scale);
    Ok(v)
}

/// All optimal embeddings of the ring of integers of the CM field into
/// the left orders of the class set, listed as (class index, image of
/// the distinguished generator).  The generator is a norm-one integer
/// (i for E0, a primitive sixth root of unity for E1), so its images
/// are exactly the order-4 units (reduced trace 0) resp. the order-6
/// units (reduced trace 1).
pub fn optimal_embeddings(ctx: &PeriodCtx, field: CmField) -> Vec<(usize, Quat)> {
    let cs = &ctx.ws.class_set;
    let mut out = Vec::new();
    for (j, o) in cs.left_orders.iter().enumerate() {
        for u in &o.units {
            let tr = u.trd();
            match field {
                CmField::E0 => {
                    if tr == 0 {
                        out.push((j, u.clone()));
                        out.push((j, u.neg()));
                    }
                }
                CmField::E1 => {
                    if tr == 1 {
                        out.push((j, u.clone()));
                    } else if tr == -1 {
                        out.push((j, u.neg()));
                    }
                }
            }
        }
    }
    out
}

/// 2 L(1, η) for the quadratic character η of the field, in the
/// π-free normalization used throughout the geometric side:
/// 2·(1/4) for E0 and 2·(1/(3√3)) for E1.
fn two_l_eta(field: CmField, prec: u32) -> Float {
    match field {
        CmField::E0 => Float::with_val(prec, 0.5f64),
        CmField::E1 => {
            let mut v = Float::with_val(prec, 2);
            v /= 3u32 * sqrt_u(prec, 3);
            v
        }
    }
}

/// Norm of the projection of a fiber vector onto the torus weight line
/// of index n* = k−1+m, for the torus through the unit u.  The line is
/// cut out by a Lagrange projector built from a synthetic torus element
/// (3 + 4u₀)/5 with u₀ the normalized imaginary part of u; its
/// eigenvalues ((3+4i)/5)^{2(k−1−n)} are pairwise distinct, so every
/// weight line is separated even though ρ(u) itself may have repeated
/// eigenvalues.
fn weight_projection(fiber: &[Cx], u: &Quat, k: u32, m: i64, prec: u32) -> Float {
    let d = (2 * k - 1) as usize;
    let nstar = k as i64 - 1 + m;
    assert!((0..d as i64).contains(&nstar));
    let (alpha, beta) = embed_c2(u, prec);
    // Normalized imaginary part: subtract the real part of α and divide
    // by the norm s of what remains; then form t = 3/5 + (4/5)·u₀.
    let mut s2 = Float::with_val(prec, alpha.im.clone().square_ref());
    s2 += beta.norm_sq();
    let s = s2.sqrt();
    let c45 = Float::with_val(prec, 0.8f64);
    let scale = Float::with_val(prec, &c45 / &s);
    let alpha_t = Cx::new(
        Float::with_val(prec, 0.6f64),
        Float::with_val(prec, &alpha.im * &scale),
    );
    let beta_t = beta.scale_f(&scale);
    let r = sym2x2(&alpha_t, &beta_t, k);
    // Eigenvalue ladder of the synthetic element: w^{k−1−n} with
    // w = ((3+4i)/5)².
    let z5 = Cx::from_f64(prec, 0.6, 0.8);
    let w = z5.mul(&z5);
    let lam: Vec<Cx> = (0..d).map(|n| w.pow_i(k as i64 - 1 - n as i64)).collect();
    let mut v: Vec<Cx> = fiber.to_vec();
    for n in 0..d {
        if n as i64 == nstar {
            continue;
        }
        let rv = r.apply(&v);
        let den = lam[nstar as usize].sub(&lam[n]);
        v = (0..d)
            .map(|t| rv[t].sub(&lam[n].mul(&v[t])).div(&den))
            .collect();
    }
    inner_invariant(k, &v, &v).re.sqrt()
}

/// The toric period of a form along an unramified character of the CM
/// field with archimedean exponent m: project the fiber at an optimal
/// embedding class onto the torus weight line n* = k−1+m and scale by
/// the torus volume 2L(1, η).  Returns the magnitude, which does not
/// depend on the embedding chosen (up to the m ↔ −m relabeling for the
/// opposite orientation).  Exponents outside |m| ≤ k−1 give 0; exponents
/// violating a local congruence give 0 through genuine vanishing of the
/// projection, not by fiat.
pub fn toric_period(phi: &[Vec<Cx>], field: CmField, m: i64, ctx: &PeriodCtx) -> Result<Float> {
    let k = ctx.k();
    let prec = ctx.prec();
    if m.abs() > k as i64 - 1 {
        return Ok(Float::with_val(prec, 0));
    }
    let embeddings = optimal_embeddings(ctx, field);
    let e = embeddings.first().ok_or_else(|| {
        Error::Domain(format!(
            "no optimal embedding of {field:?} into level-{} orders (a level prime splits)",
            ctx.level()
        ))
    })?;
    toric_period_at(phi, field, m, ctx, e)
}

/// Same as [`toric_period`], but evaluated at one chosen embedding from
/// [`optimal_embeddings`]; the magnitude does not depend on the choice.
pub fn toric_period_at(
    phi: &[Vec<Cx>],
    field: CmField,
    m: i64,
    ctx: &PeriodCtx,
    embedding: &(usize, Quat),
) -> Result<Float> {
    let k = ctx.k();
    let prec = ctx.prec();
    if m.abs() > k as i64 - 1 {
        return Ok(Float::with_val(prec, 0));
    }
    let (j, u) = embedding;
    let c = weight_projection(&phi[*j], u, k, m, prec);
    let mut v = two_l_eta(field, prec);
    v *= c;
    Ok(v)
}

/// Product of the nonarchimedean local factors α_p of the Waldspurger
/// ratio: (1−1/p) times a ramification volume at p | N, and the
/// discriminant volume at the field's ramified prime when it is away
/// from the level.  Errors if some level prime splits in the field.
fn alpha_product(field: CmField, level: u64, prec: u32) -> Result<Float> {
    let mut acc = Float::with_val(prec, 1);
    for p in prime_divisors(level) {
        match field.chi(p) {
            1 => {
                return Err(Error::Domain(format!(
                    "prime {p} splits in {field:?}: the torus does not embed"
                )))
            }
            -1 => {
                let mut f = Float::with_val(prec, 1);
                f -= Float::with_val(prec, Float::with_val(prec, p).recip_ref());
                acc *= f;
            }
            _ => match field {
                // (1 − 1/2) · 1
                CmField::E0 => acc *= Float::with_val(prec, 0.5f64),
                // (1 − 1/3) · 2/√3
                CmField::E1 => {
                    let mut f = Float::with_val(prec, 4);
                    f /= 3u32 * sqrt_u(prec, 3);
                    acc *= f;
                }
            },
        }
    }
    if level % field.ram_prime() != 0 {
        match field {
            CmField::E0 => acc *= Float::with_val(prec, 0.5f64),
            CmField::E1 => acc *= Float::with_val(prec, sqrt_u(prec, 3).recip_ref()),
        }
    }
    Ok(acc)
}

/// Whether the exponent m labels an unramified character that exists
/// for this form: divisibility by the field's step, the archimedean
/// range, and — when the field's ramified prime divides the level — the
/// congruence matching the form's local sign there.
fn admissible(
    field: CmField,
    m: i64,
    k: u32,
    level: u64,
    delta: &BTreeMap<u64, i32>,
) -> Result<bool> {
    if m % field.step() != 0 || m.abs() > k as i64 - 1 {
        return Ok(false);
    }
    let p0 = field.ram_prime();
    if level % p0 != 0 {
        return Ok(true);
    }
    let d = delta.get(&p0).copied().ok_or_else(|| {
        Error::Domain(format!("missing local sign at the ramified prime {p0}"))
    })?;
    let sign = if m.rem_euclid(field.full_period()) == 0 {
        1
    } else {
        -1
    };
    Ok(if m == 0 { d == 1 } else { sign == d })
}

/// The Waldspurger ratio L(1/2, π_E ⊗ Ω) / L(1, π, Ad) recovered from
/// the toric period:
///
/// ```text
/// W(Ω) = |P_Ω|² (2k−1) / ‖φ‖² · 2 / (ζ*(2) · 8(2π)^{−1−2k}Γ(2k) · ∏_p α_p)
/// ```
///
/// with ζ*(2) = π/6.  `epsilon_ok` reports whether the character is
/// admissible for this form (the value is then meaningful; otherwise
/// the period, and hence the ratio, vanishes).
pub fn waldspurger_ratio(
    phi: &Eigenform,
    field: CmField,
    m: i64,
    ctx: &PeriodCtx,
) -> Result<LRatio> {
    let prec = ctx.prec();
    let k = ctx.k();
    let p_om = toric_period(&phi.class_vectors, field, m, ctx)?;
    let norm2 = petersson_norm_sq(&phi.class_vectors, ctx);
    let alpha = alpha_product(field, ctx.level(), prec)?;
    let zeta_star = Float::with_val(prec, pi(prec) / 6u32);
    let mut arch = Float::with_val(prec, 8);
    arch *= pow_i(&two_pi(prec), -1 - 2 * k as i64);
    arch *= float_int(prec, &gamma_int(2 * k));
    let mut value = Float::with_val(prec, p_om.square_ref());
    value *= 2 * k - 1;
    value /= norm2;
    value *= 2u32;
    value /= Float::with_val(prec, &zeta_star * &arch) * alpha;
    Ok(LRatio {
        value,
        kind: RatioKind::Toric,
        epsilon_ok: admissible(field, m, k, ctx.level(), &phi.delta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brandt::{eigenforms_on, weight_space};
    use crate::quatlat::class_set;
    use crate::DEFAULT_PREC;

    fn setup(level: u64, k: u32) -> WeightSpace {
        let cs = class_set(level).unwrap();
        weight_space(&cs, k, DEFAULT_PREC)
    }

    fn approx(x: &Float, target: f64, tol: f64) {
        let v = x.to_f64();
        assert!(
            (v - target).abs() <= tol * target.abs().max(1.0),
            "expected {target}, got {v}"
        );
    }

    #[test]
    fn volume_mass_identity_and_petersson_constant() {
        for n in [2u64, 3, 5, 7, 11, 13, 30, 37] {
            let ws = setup(n, 1);
            let ctx = PeriodCtx::new(&ws);
            assert_eq!(
                ctx.vol_kprime,
                ratq(24, euler_phi(n) as i64),
                "volume at level {n}"
            );
            // The constant function 1: Petersson norm² = vol(K′)·mass = 2.
            let ones: Vec<Vec<Cx>> = (0..ws.class_set.h())
                .map(|_| vec![Cx::one(DEFAULT_PREC)])
                .collect();
            let p = petersson_norm_sq(&ones, &ctx);
            approx(&p, 2.0, 1e-25);
        }
    }

    #[test]
    fn eigenforms_have_uniform_norm_and_are_orthogonal() {
        let ws = setup(11, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        assert_eq!(ef.forms.len(), 2);
        for f in &ef.forms {
            let p = petersson_norm_sq(&f.class_vectors, &ctx);
            approx(&p, 2.4, 1e-25);
        }
        let cross = petersson_pair(
            &ef.forms[0].class_vectors,
            &ef.forms[1].class_vectors,
            &ctx,
        );
        assert!(cross.abs().to_f64() < 1e-25);
    }

    #[test]
    fn trilinear_residual_against_orthogonal_cusp_pair_vanishes() {
        let ws = setup(37, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 3).unwrap();
        let residual: Vec<_> = ef.forms.iter().filter(|f| f.is_residual).collect();
        let cusp: Vec<_> = ef.forms.iter().filter(|f| !f.is_residual).collect();
        assert_eq!(residual.len(), 1);
        assert_eq!(cusp.len(), 2);
        let t = trilinear_period(
            &residual[0].class_vectors,
            &cusp[0].class_vectors,
            &cusp[1].class_vectors,
            &ctx,
        );
        assert!(t.abs().to_f64() < 1e-9, "got {}", t.abs().to_f64());
    }

    #[test]
    fn trilinear_is_symmetric_in_its_slots() {
        let ws = setup(13, 2);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        assert_eq!(ef.forms.len(), 3);
        let v: Vec<&Vec<Vec<Cx>>> = ef.forms.iter().map(|f| &f.class_vectors).collect();
        let base = trilinear_period(v[0], v[1], v[2], &ctx).abs().to_f64();
        for perm in [
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let t = trilinear_period(v[perm[0]], v[perm[1]], v[perm[2]], &ctx)
                .abs()
                .to_f64();
            assert!((t - base).abs() < 1e-9, "permutation {perm:?}: {t} vs {base}");
        }
    }

    #[test]
    fn self_triple_vanishes_at_levels_five_and_seven_weight_four() {
        for n in [5u64, 7] {
            let ws = setup(n, 2);
            let ctx = PeriodCtx::new(&ws);
            let ef = eigenforms_on(&ws, 2).unwrap();
            assert_eq!(ef.forms.len(), 1);
            let f = &ef.forms[0].class_vectors;
            let t = trilinear_period(f, f, f, &ctx);
            assert!(
                t.abs().to_f64() < 1e-10,
                "self-triple at level {n}: {}",
                t.abs().to_f64()
            );
        }
    }

    #[test]
    fn ichino_ratio_level_eleven_weight_two() {
        let ws = setup(11, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        let f = ef.forms.iter().find(|f| !f.is_residual).unwrap();
        let r = ichino_ratio(f, f, f, &ctx).unwrap();
        assert!(r.epsilon_ok);
        // Exact value 121/5 for the unique newform.
        approx(&r.value, 24.2, 1e-8);
        let la = l_algebraic(f, f, f, &ctx).unwrap();
        approx(&la, 1.6, 1e-8);
    }

    #[test]
    fn ichino_ratio_is_scaling_invariant() {
        let ws = setup(11, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        let f = ef.forms.iter().find(|f| !f.is_residual).unwrap();
        let base = ichino_ratio(f, f, f, &ctx).unwrap().value.to_f64();
        let mut scaled = f.clone();
        let factor = Cx::from_f64(DEFAULT_PREC, -0.7, 1.9);
        for fiber in scaled.class_vectors.iter_mut() {
            for v in fiber.iter_mut() {
                *v = v.mul(&factor);
            }
        }
        let r = ichino_ratio(&scaled, f, f, &ctx).unwrap().value.to_f64();
        assert!((r - base).abs() < 1e-9 * base.abs());
    }

    #[test]
    fn epsilon_condition_splits_the_level_37_pairs() {
        let ws = setup(37, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 3).unwrap();
        let cusp: Vec<_> = ef.forms.iter().filter(|f| !f.is_residual).collect();
        assert_eq!(cusp.len(), 2);
        let d0 = cusp[0].delta[&37];
        let d1 = cusp[1].delta[&37];
        assert_eq!(d0 * d1, -1, "the two newforms have opposite signs");
        let (plus, minus) = if d0 == 1 {
            (cusp[0], cusp[1])
        } else {
            (cusp[1], cusp[0])
        };
        // An odd number of minus signs kills the triple.
        let mixed = ichino_ratio(plus, plus, minus, &ctx).unwrap();
        assert!(!mixed.epsilon_ok);
        assert_eq!(mixed.value.to_f64(), 0.0);
        let same = ichino_ratio(plus, minus, minus, &ctx).unwrap();
        assert!(same.epsilon_ok);
    }

    #[test]
    fn triple_sum_at_level_13_weight_4_is_one_half() {
        let ws = setup(13, 2);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        assert_eq!(ef.forms.len(), 3);
        let n2 = 2.0 * 13.0 * 13.0;
        for h in &ef.forms {
            let mut sum = 0.0;
            for f in &ef.forms {
                for g in &ef.forms {
                    sum += ichino_ratio(f, g, h, &ctx).unwrap().value.to_f64();
                }
            }
            let lhs = sum / n2;
            assert!((lhs - 0.5).abs() < 1e-8, "level-13 sum for one form: {lhs}");
        }
    }

    #[test]
    fn toric_periods_level_eleven() {
        let ws = setup(11, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        let f = ef.forms.iter().find(|f| !f.is_residual).unwrap();
        let t0 = toric_period(&f.class_vectors, CmField::E0, 0, &ctx).unwrap();
        approx(&t0, 1.0 / 5f64.sqrt(), 1e-8);
        let t1 = toric_period(&f.class_vectors, CmField::E1, 0, &ctx).unwrap();
        approx(&t1, 2.0 / 15f64.sqrt(), 1e-8);
    }

    #[test]
    fn toric_period_is_embedding_independent() {
        // Level 30 has two classes, both of whose orders contain sixth
        // roots of unity, so the same period can be read off at either
        // class and from several units.
        let ws = setup(30, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        let f = ef.forms.iter().find(|f| !f.is_residual).unwrap();
        let embeddings = optimal_embeddings(&ctx, CmField::E1);
        let classes: std::collections::BTreeSet<usize> =
            embeddings.iter().map(|(j, _)| *j).collect();
        assert_eq!(classes.len(), 2, "embeddings in both classes");
        let mut values = Vec::new();
        for (j, u) in &embeddings {
            values.push(weight_projection(&f.class_vectors[*j], u, 1, 0, DEFAULT_PREC).to_f64());
        }
        for v in &values {
            assert!(
                (v - values[0]).abs() < 1e-8,
                "projection magnitudes differ: {values:?}"
            );
        }
        assert!(values[0] > 1e-3);
    }

    #[test]
    fn toric_symmetry_and_local_vanishing_level_two_weight_eight() {
        let ws = setup(2, 4);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        assert_eq!(ef.forms.len(), 1);
        let f = &ef.forms[0];
        assert_eq!(f.delta[&2], -1);
        // m = 0 fails the congruence at the ramified prime 2 when the
        // sign there is −1: the projection vanishes on its own.
        let t0 = toric_period(&f.class_vectors, CmField::E0, 0, &ctx).unwrap();
        assert!(t0.to_f64() < 1e-10, "m = 0 projection: {}", t0.to_f64());
        assert!(!waldspurger_ratio(f, CmField::E0, 0, &ctx).unwrap().epsilon_ok);
        // Odd exponents never carry an unramified character.
        let t_odd = toric_period(&f.class_vectors, CmField::E0, 1, &ctx).unwrap();
        assert!(t_odd.to_f64() < 1e-10);
        // Out-of-range exponents give exactly zero.
        let t_far = toric_period(&f.class_vectors, CmField::E0, 4, &ctx).unwrap();
        assert_eq!(t_far.to_f64(), 0.0);
        // m = ±2 is admissible and the two magnitudes agree.
        let tp = toric_period(&f.class_vectors, CmField::E0, 2, &ctx).unwrap();
        let tm = toric_period(&f.class_vectors, CmField::E0, -2, &ctx).unwrap();
        assert!(tp.to_f64() > 1e-3);
        assert!((tp.to_f64() - tm.to_f64()).abs() < 1e-8);
        let w = waldspurger_ratio(f, CmField::E0, 2, &ctx).unwrap();
        assert!(w.epsilon_ok);
        assert!(w.value.to_f64() > 0.0);
    }

    #[test]
    fn waldspurger_ratios_level_eleven_match_closed_forms() {
        let ws = setup(11, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        let f = ef.forms.iter().find(|f| !f.is_residual).unwrap();
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let w0 = waldspurger_ratio(f, CmField::E0, 0, &ctx).unwrap();
        assert!(w0.epsilon_ok);
        approx(&w0.value, 11.0 * pi2 / 5.0, 1e-8);
        let w1 = waldspurger_ratio(f, CmField::E1, 0, &ctx).unwrap();
        assert!(w1.epsilon_ok);
        approx(&w1.value, 22.0 * 3f64.sqrt() * pi2 / 15.0, 1e-8);
    }
}
