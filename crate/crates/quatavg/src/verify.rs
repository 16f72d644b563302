//! Verification orchestration for the average formulas: per-form
//! spectral sums of triple-product ratios, closed geometric targets at
//! Type-1 levels, the full geometric side through toric periods, the
//! three-form averages in their classical table normalizations, and
//! near-rational reconstruction of algebraic L-values.
//!
//! Reports are pure data; rendering and exit codes belong to the CLI.

use crate::arith::{euler_phi, omega, prime_divisors, ratq, Cyclo12};
use crate::brandt::{dim_newforms, eigenforms_on, weight_space, Eigenform};
use crate::hp::{float_int, float_rat};
#[cfg(feature = "extended")]
use crate::hp::{pow_i, sqrt_u, two_pi};
use crate::periods::{gamma_int, ichino_ratio, PeriodCtx};
#[cfg(feature = "extended")]
use crate::periods::waldspurger_ratio;
use crate::quatlat::class_set;
use crate::su2rep::{admissible_characters, orbit_coefficient, CmField};
use crate::{Error, Result};
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use std::fmt;
use std::time::Instant;

/// Hecke primes consumed when separating simultaneous eigenspaces.
pub const DEFAULT_PRIME_BUDGET: usize = 8;
/// Default relative tolerance for pass/fail verdicts; the absolute
/// tolerance used for near-zero targets is one hundredth of it.
pub const DEFAULT_TOL_REL: f64 = 1e-8;

/// Residue classification of a level, following the character products
/// ∏(1−χ₋₄(p))/2 and ∏(1−χ₋₃(p))/2 over p | N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelType {
    /// Some p ≡ 1 mod 4 and some p ≡ 1 mod 3: both orbit products vanish.
    Type1,
    /// All p ≡ 5, 11 mod 12 with at least one ≡ 5 mod 12.
    Type5,
    /// All p ≡ 7, 11 mod 12 with at least one ≡ 7 mod 12.
    Type7,
    /// All p ≡ 11 mod 12: both orbit products survive.
    Type11,
    /// 2 | N or 3 | N: a CM field of extra units ramifies in the level.
    RamifiedAt2Or3,
    /// Not a square-free level with an odd number of prime factors.
    Other,
}

impl fmt::Display for LevelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelType::Type1 => write!(f, "Type 1"),
            LevelType::Type5 => write!(f, "Type 5"),
            LevelType::Type7 => write!(f, "Type 7"),
            LevelType::Type11 => write!(f, "Type 11"),
            LevelType::RamifiedAt2Or3 => write!(f, "ramified at 2 or 3"),
            LevelType::Other => write!(f, "other"),
        }
    }
}

/// Classify a level by the residues of its prime factors mod 12.
pub fn classify_level(n: u64) -> LevelType {
    let ps = prime_divisors(n);
    if n < 2 || ps.len() % 2 == 0 || ps.iter().product::<u64>() != n {
        return LevelType::Other;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return LevelType::RamifiedAt2Or3;
    }
    let dead4 = ps.iter().any(|&p| p % 4 == 1);
    let dead3 = ps.iter().any(|&p| p % 3 == 1);
    match (dead4, dead3) {
        (true, true) => LevelType::Type1,
        (true, false) => LevelType::Type5,
        (false, true) => LevelType::Type7,
        (false, false) => LevelType::Type11,
    }
}

/// Comparison record for a single fixed eigenform.
#[derive(Debug, Clone)]
pub struct HRecord {
    pub h_index: usize,
    pub lhs: Float,
    pub rhs: Float,
    /// Exact target when the geometric side has a closed rational form.
    pub rhs_exact: Option<Rational>,
    pub abs_err: Float,
    pub rel_err: Float,
    pub pass: bool,
    /// Failure isolated to this record, if any.
    pub error: Option<String>,
}

/// Three-form average, in the classical table normalization for weights
/// 2, 4, 6 and in the general Γ-normalization for higher weights.
#[derive(Debug, Clone)]
pub struct Sum3Report {
    pub level: u64,
    pub weight: u32,
    pub level_type: LevelType,
    pub lhs: Float,
    pub rhs: Float,
    pub rhs_exact: Option<Rational>,
    pub abs_err: Float,
    pub rel_err: Float,
    pub pass: bool,
}

/// Full verification run at a fixed level and weight: one record per
/// cuspidal eigenform plus the aggregate three-form average when the
/// level is coprime to 6.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub level: u64,
    pub weight: u32,
    pub level_type: LevelType,
    pub records: Vec<HRecord>,
    pub aggregate: Option<Sum3Report>,
    pub precision: u32,
    pub tol_rel: f64,
    pub tol_abs: f64,
    pub class_number: usize,
    /// Number of cuspidal eigenforms (one record each).
    pub eigenform_count: usize,
    pub runtime_ms: u64,
}

impl VerificationReport {
    /// True when every record, and the aggregate if present, passed.
    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
            && self.aggregate.as_ref().map_or(true, |a| a.pass)
    }
}

fn half_weight(weight: u32) -> Result<u32> {
    if weight < 2 || weight % 2 != 0 {
        return Err(Error::Weight(
            weight,
            "weight must be a positive even integer".into(),
        ));
    }
    Ok(weight / 2)
}

/// Γ(k)³Γ(3k−1) / (2^ω Γ(2k)Γ(2k−1)²) as an exact rational.
fn closed_gamma_fraction(k: u32, om: u32) -> Rational {
    let num = gamma_int(k).pow(3u32) * gamma_int(3 * k - 1);
    let den = (Integer::from(1) << om) * gamma_int(2 * k) * gamma_int(2 * k - 1).pow(2u32);
    Rational::from((num, den))
}

/// ∏_{p | n} (1 − χ(p))/2 for the quadratic character attached to the
/// CM field.
fn chi_prefactor(field: CmField, n: u64) -> Rational {
    let mut out = Rational::from(1);
    for p in prime_divisors(n) {
        out *= Rational::from((1 - field.chi(p) as i64, 2));
    }
    out
}

/// Closed geometric target for a Type-1 level:
/// (1 − 24δ(k)/φ(N)) · Γ(k)³Γ(3k−1)/(2^{ω(N)} Γ(2k)Γ(2k−1)²).
pub fn geometric_rhs_type1(n: u64, weight: u32) -> Result<Rational> {
    let k = half_weight(weight)?;
    match classify_level(n) {
        LevelType::Type1 => {}
        t => {
            return Err(Error::Domain(format!(
                "level {n} is of type \"{t}\": the closed target needs \
                 a prime factor ≡ 1 mod 4 and one ≡ 1 mod 3"
            )))
        }
    }
    let mut v = closed_gamma_fraction(k, omega(n));
    if k == 1 {
        let phi = euler_phi(n) as i64;
        v *= Rational::from((phi - 24, phi));
    }
    Ok(v)
}

/// Un-normalized spectral pair sum Σ_{f,g} ratio(f, g, h) over ordered
/// cuspidal pairs.  Pairs are evaluated in parallel and folded in a
/// fixed order, so the result is deterministic.
fn pair_sum(h: &Eigenform, cuspidal: &[&Eigenform], ctx: &PeriodCtx) -> Result<Float> {
    let prec = ctx.prec();
    let pairs: Vec<(usize, usize)> = (0..cuspidal.len())
        .flat_map(|i| (0..cuspidal.len()).map(move |j| (i, j)))
        .collect();
    let vals = pairs
        .par_iter()
        .map(|&(i, j)| ichino_ratio(cuspidal[i], cuspidal[j], h, ctx).map(|r| r.value))
        .collect::<Result<Vec<Float>>>()?;
    let mut s = Float::with_val(prec, 0);
    for v in vals {
        s += v;
    }
    Ok(s)
}

/// Spectral side of the per-form identity:
/// (1/2N²) Σ over ordered cuspidal pairs (f, g) of ratio(f, g, h).
pub fn spectral_lhs_on(h: &Eigenform, cuspidal: &[&Eigenform], ctx: &PeriodCtx) -> Result<Float> {
    let mut s = pair_sum(h, cuspidal, ctx)?;
    s /= Float::with_val(ctx.prec(), 2 * ctx.level() * ctx.level());
    Ok(s)
}

/// Build the class set and eigenforms at (N, 2k) and evaluate the
/// spectral side for the cuspidal eigenform with the given index.
/// An empty newform space gives 0 regardless of the index.
pub fn spectral_lhs(n: u64, weight: u32, h_index: usize, prec: u32) -> Result<Float> {
    let k = half_weight(weight)?;
    let cs = class_set(n)?;
    let ws = weight_space(&cs, k, prec);
    let ef = eigenforms_on(&ws, DEFAULT_PRIME_BUDGET)?;
    let cuspidal: Vec<&Eigenform> = ef.forms.iter().filter(|f| !f.is_residual).collect();
    if cuspidal.is_empty() {
        return Ok(Float::with_val(prec, 0));
    }
    let h = *cuspidal.get(h_index).ok_or_else(|| {
        Error::Domain(format!(
            "form index {h_index} out of range: {} cuspidal eigenforms at level {n}",
            cuspidal.len()
        ))
    })?;
    let ctx = PeriodCtx::new(&ws);
    spectral_lhs_on(h, &cuspidal, &ctx)
}

/// Full geometric side for one eigenform: the closed trivial-orbit term
/// plus the two toric orbits, each summing orbit coefficients against
/// Waldspurger ratios over the admissible unramified characters.
#[cfg(feature = "extended")]
pub fn geometric_rhs_full_on(h: &Eigenform, ctx: &PeriodCtx) -> Result<Float> {
    let prec = ctx.prec();
    let n = ctx.level();
    let k = ctx.k();
    let mut t1 = closed_gamma_fraction(k, omega(n));
    if k == 1 {
        let phi = euler_phi(n) as i64;
        t1 *= Rational::from((phi - 24, phi));
    }
    let mut total = float_rat(prec, &t1);

    let mut orbital = Float::with_val(prec, 0);
    for field in [CmField::E0, CmField::E1] {
        let pref = chi_prefactor(field, n);
        if pref == 0 {
            // The quadratic field does not embed: the orbit is absent.
            continue;
        }
        let ram = field.ram_prime();
        let delta = if n % ram == 0 {
            Some(*h.delta.get(&ram).ok_or_else(|| {
                Error::Numerical(format!("missing sign at p = {ram} for level {n}"))
            })?)
        } else {
            None
        };
        let mut s = Float::with_val(prec, 0);
        for spec in admissible_characters(k, field, n, delta)? {
            let coeff = orbit_coefficient(k, &spec, n, delta)?;
            if coeff.is_zero() {
                continue;
            }
            let w = waldspurger_ratio(h, field, spec.m, ctx)?;
            s += coeff.to_cx(prec).re * &w.value;
        }
        let mut fac = match field {
            CmField::E0 => Float::with_val(prec, 4),
            CmField::E1 => Float::with_val(prec, 6) * sqrt_u(prec, 3),
        };
        if n % ram == 0 {
            fac *= 2u32;
        }
        fac *= float_rat(prec, &pref);
        orbital += fac * s;
    }

    let mut pre = pow_i(&two_pi(prec), -2 * k as i64);
    pre *= float_int(prec, &gamma_int(2 * k - 1));
    pre /= Float::with_val(prec, n);
    total += pre * orbital;
    Ok(total)
}

/// Standalone entry point for the full geometric side.
#[cfg(feature = "extended")]
pub fn geometric_rhs_full(n: u64, weight: u32, h_index: usize, prec: u32) -> Result<Float> {
    let k = half_weight(weight)?;
    let cs = class_set(n)?;
    let ws = weight_space(&cs, k, prec);
    let ef = eigenforms_on(&ws, DEFAULT_PRIME_BUDGET)?;
    let cuspidal: Vec<&Eigenform> = ef.forms.iter().filter(|f| !f.is_residual).collect();
    let h = *cuspidal.get(h_index).ok_or_else(|| {
        Error::Domain(format!(
            "form index {h_index} out of range: {} cuspidal eigenforms at level {n}",
            cuspidal.len()
        ))
    })?;
    let ctx = PeriodCtx::new(&ws);
    geometric_rhs_full_on(h, &ctx)
}

fn compare(lhs: &Float, rhs: &Float, tol_rel: f64, tol_abs: f64) -> (Float, Float, bool) {
    let prec = lhs.prec();
    let abs_err = Float::with_val(prec, lhs - rhs).abs();
    let rhs_mag = rhs.clone().abs();
    if rhs_mag.to_f64() < tol_abs {
        let pass = abs_err.to_f64() < tol_abs;
        (abs_err, Float::with_val(prec, f64::INFINITY), pass)
    } else {
        let rel = Float::with_val(prec, &abs_err / &rhs_mag);
        let pass = rel.to_f64() < tol_rel;
        (abs_err, rel, pass)
    }
}

fn rhs_for(h: &Eigenform, lt: LevelType, ctx: &PeriodCtx) -> Result<(Float, Option<Rational>)> {
    let n = ctx.level();
    if lt == LevelType::Type1 {
        let q = geometric_rhs_type1(n, 2 * ctx.k())?;
        return Ok((float_rat(ctx.prec(), &q), Some(q)));
    }
    #[cfg(feature = "extended")]
    {
        geometric_rhs_full_on(h, ctx).map(|v| (v, None))
    }
    #[cfg(not(feature = "extended"))]
    {
        let _ = h;
        Err(Error::Domain(format!(
            "level {n} is not of Type 1; the toric geometric side needs \
             the `extended` feature"
        )))
    }
}

fn h_record(
    h_index: usize,
    h: &Eigenform,
    cuspidal: &[&Eigenform],
    ctx: &PeriodCtx,
    lt: LevelType,
    tol_rel: f64,
    tol_abs: f64,
) -> HRecord {
    let prec = ctx.prec();
    let outcome = (|| -> Result<(Float, Float, Option<Rational>)> {
        let lhs = spectral_lhs_on(h, cuspidal, ctx)?;
        let (rhs, rhs_exact) = rhs_for(h, lt, ctx)?;
        Ok((lhs, rhs, rhs_exact))
    })();
    match outcome {
        Ok((lhs, rhs, rhs_exact)) => {
            let (abs_err, rel_err, pass) = compare(&lhs, &rhs, tol_rel, tol_abs);
            HRecord {
                h_index,
                lhs,
                rhs,
                rhs_exact,
                abs_err,
                rel_err,
                pass,
                error: None,
            }
        }
        Err(e) => {
            let zero = || Float::with_val(prec, 0);
            HRecord {
                h_index,
                lhs: zero(),
                rhs: zero(),
                rhs_exact: None,
                abs_err: zero(),
                rel_err: zero(),
                pass: false,
                error: Some(e.to_string()),
            }
        }
    }
}

/// Run the per-form verification at (N, 2k) for every cuspidal
/// eigenform, with errors isolated per record, and attach the aggregate
/// three-form average when the level is coprime to 6.  `tol_rel` is the
/// relative tolerance; near-zero targets use `tol_rel/100` absolutely.
pub fn verify_main(n: u64, weight: u32, tol_rel: f64, prec: u32) -> Result<VerificationReport> {
    let start = Instant::now();
    let k = half_weight(weight)?;
    let tol_abs = tol_rel * 1e-2;
    let cs = class_set(n)?;
    let ws = weight_space(&cs, k, prec);
    let ef = eigenforms_on(&ws, DEFAULT_PRIME_BUDGET)?;
    let ctx = PeriodCtx::new(&ws);
    let cuspidal: Vec<&Eigenform> = ef.forms.iter().filter(|f| !f.is_residual).collect();
    let lt = classify_level(n);
    let records: Vec<HRecord> = cuspidal
        .iter()
        .enumerate()
        .map(|(idx, h)| h_record(idx, h, &cuspidal, &ctx, lt, tol_rel, tol_abs))
        .collect();
    let aggregate = if n % 2 != 0 && n % 3 != 0 {
        sum_over_three_on(&cuspidal, &ctx, tol_rel, tol_abs).ok()
    } else {
        None
    };
    Ok(VerificationReport {
        level: n,
        weight,
        level_type: lt,
        records,
        aggregate,
        precision: prec,
        tol_rel,
        tol_abs,
        class_number: ws.class_set.h(),
        eigenform_count: cuspidal.len(),
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}

/// The constant correction c in the weight-4 table (RHS = φ/2^ω − c)
/// and the weight-6 table (RHS = φ/2^ω + c), by level type.
pub fn table_correction(weight: u32, lt: LevelType) -> Result<Rational> {
    let c = match (weight, lt) {
        (4, LevelType::Type1) => ratq(0, 1),
        (4, LevelType::Type7) => ratq(3, 1),
        (4, LevelType::Type5) => ratq(2, 1),
        (4, LevelType::Type11) => ratq(5, 1),
        (6, LevelType::Type1) => ratq(0, 1),
        (6, LevelType::Type7) => ratq(9, 5),
        (6, LevelType::Type5) => ratq(-34, 35),
        (6, LevelType::Type11) => ratq(29, 35),
        (w, LevelType::Type1 | LevelType::Type5 | LevelType::Type7 | LevelType::Type11) => {
            return Err(Error::Weight(
                w,
                "constant table corrections cover weights 4 and 6".into(),
            ))
        }
        (_, t) => {
            return Err(Error::Domain(format!(
                "no table correction for a level of type \"{t}\""
            )))
        }
    };
    Ok(c)
}

/// Exact table RHS of the three-form average for weights 2, 4, 6 at
/// levels coprime to 6.
fn table_rhs(n: u64, weight: u32, lt: LevelType) -> Result<Rational> {
    let phi = euler_phi(n) as i64;
    let om = omega(n);
    let base = Rational::from((Integer::from(phi), Integer::from(1) << om));
    match weight {
        2 => {
            let mut v = Rational::from((
                Integer::from(phi - 12) * Integer::from(phi - 24),
                Integer::from(12 * phi) << om,
            ));
            v += match lt {
                LevelType::Type1 => Rational::new(),
                LevelType::Type7 => Rational::from((3 * (phi - 12), 4 * phi)),
                LevelType::Type5 => Rational::from((4 * (phi - 9), 3 * phi)),
                LevelType::Type11 => Rational::from((25 * phi - 252, 12 * phi)),
                _ => {
                    return Err(Error::Level(
                        n,
                        "table targets need a level coprime to 6".into(),
                    ))
                }
            };
            Ok(v)
        }
        4 => Ok(base - table_correction(weight, lt)?),
        6 => Ok(base + table_correction(weight, lt)?),
        _ => Err(Error::Weight(
            weight,
            "closed tables cover weights 2, 4, 6".into(),
        )),
    }
}

/// RHS of the general three-form average in the Γ-normalized units:
/// #F/(2^ω Γ(2k)Γ(2k−1)²) + (½ S₀ ∏₄ + S₁ ∏₃)/(Γ(k)³Γ(3k−1)), where
/// S_i sums the orbit coefficients over unramified characters.  For
/// weight 2 the closed residual-corrected form is used.  The exact
/// rational is returned whenever the orbit sums are rational.
fn general_rhs(n: u64, weight: u32, prec: u32) -> Result<(Float, Option<Rational>)> {
    let k = weight / 2;
    let om = omega(n);
    let nf = dim_newforms(n, weight)?;
    let p4 = chi_prefactor(CmField::E0, n);
    let p3 = chi_prefactor(CmField::E1, n);
    if k == 1 {
        let phi = euler_phi(n) as i64;
        let mut v = Rational::from((
            Integer::from(phi - 24) * Integer::from(nf),
            Integer::from(phi) << om,
        ));
        v += Rational::from((phi - 6, 2 * phi)) * &p4;
        v += Rational::from((phi - 4, phi)) * &p3;
        return Ok((float_rat(prec, &v), Some(v)));
    }
    let first = Rational::from((
        Integer::from(nf),
        (Integer::from(1) << om) * gamma_int(2 * k) * gamma_int(2 * k - 1).pow(2u32),
    ));
    let gk = Rational::from((
        Integer::from(1),
        gamma_int(k).pow(3u32) * gamma_int(3 * k - 1),
    ));
    let mut total_f = float_rat(prec, &first);
    let mut total_q = Some(first);
    for (field, pref) in [(CmField::E0, p4 / 2u32), (CmField::E1, p3)] {
        if pref == 0 {
            continue;
        }
        let mut s = Cyclo12::zero();
        for spec in admissible_characters(k, field, n, None)? {
            s = s.add(&orbit_coefficient(k, &spec, n, None)?);
        }
        let scale = Rational::from(&pref * &gk);
        total_f += s.to_cx(prec).re * float_rat(prec, &scale);
        total_q = match (total_q, s.as_rational()) {
            (Some(acc), Some(sq)) => Some(acc + sq * scale),
            _ => None,
        };
    }
    Ok((total_f, total_q))
}

/// Three-form average on an already-built system; see [`sum_over_three`].
pub(crate) fn sum_over_three_on(
    cuspidal: &[&Eigenform],
    ctx: &PeriodCtx,
    tol_rel: f64,
    tol_abs: f64,
) -> Result<Sum3Report> {
    let n = ctx.level();
    let k = ctx.k();
    let weight = 2 * k;
    let prec = ctx.prec();
    if n % 2 == 0 || n % 3 == 0 {
        return Err(Error::Level(
            n,
            "the three-form average is stated for levels coprime to 6".into(),
        ));
    }
    let lt = classify_level(n);
    let mut raw = Float::with_val(prec, 0);
    for h in cuspidal {
        raw += pair_sum(h, cuspidal, ctx)?;
    }
    let nsq = Float::with_val(prec, n * n);
    // Classical display units per weight; Γ-normalized above weight 6.
    let lhs = match k {
        1 => raw / (2u32 * nsq),
        2 => raw * 2u32 / nsq,
        3 => raw * 72u32 / (35u32 * nsq),
        _ => {
            let g = float_int(prec, &(gamma_int(k).pow(3u32) * gamma_int(3 * k - 1)));
            raw / (2u32 * nsq * g)
        }
    };
    let (rhs, rhs_exact) = if weight <= 6 {
        let q = table_rhs(n, weight, lt)?;
        (float_rat(prec, &q), Some(q))
    } else {
        general_rhs(n, weight, prec)?
    };
    let (abs_err, rel_err, pass) = compare(&lhs, &rhs, tol_rel, tol_abs);
    Ok(Sum3Report {
        level: n,
        weight,
        level_type: lt,
        lhs,
        rhs,
        rhs_exact,
        abs_err,
        rel_err,
        pass,
    })
}

/// Average over all ordered cuspidal triples (f, g, h), compared with
/// the closed table targets (weights 2, 4, 6) or the general expression
/// (higher weights).  Requires a level coprime to 6.
pub fn sum_over_three(n: u64, weight: u32, prec: u32) -> Result<Sum3Report> {
    sum_over_three_with(n, weight, DEFAULT_TOL_REL, prec)
}

/// [`sum_over_three`] with an explicit relative tolerance; the absolute
/// tolerance is pinned two orders tighter, as in [`verify_main`].
pub fn sum_over_three_with(n: u64, weight: u32, tol_rel: f64, prec: u32) -> Result<Sum3Report> {
    let k = half_weight(weight)?;
    let cs = class_set(n)?;
    let ws = weight_space(&cs, k, prec);
    let ef = eigenforms_on(&ws, DEFAULT_PRIME_BUDGET)?;
    let cuspidal: Vec<&Eigenform> = ef.forms.iter().filter(|f| !f.is_residual).collect();
    let ctx = PeriodCtx::new(&ws);
    sum_over_three_on(&cuspidal, &ctx, tol_rel, tol_rel * 1e-2)
}

/// The last continued-fraction convergent of `x` with denominator at
/// most `max_den` — the best rational approximation of the second kind
/// within that bound.
pub fn nearest_rational(x: &Float, max_den: u64) -> Rational {
    let prec = x.prec();
    let a0 = x.clone().floor();
    let mut p_prev = Integer::from(1);
    let mut q_prev = Integer::from(0);
    let mut p_cur = a0.to_integer().unwrap_or_default();
    let mut q_cur = Integer::from(1);
    let mut rem = Float::with_val(prec, x - &a0);
    for _ in 0..128 {
        if rem.is_zero() {
            break;
        }
        let inv = Float::with_val(prec, rem.recip_ref());
        let floor = inv.clone().floor();
        let a = match floor.to_integer() {
            Some(v) => v,
            None => break,
        };
        rem = Float::with_val(prec, &inv - &floor);
        let p_next = Integer::from(&a * &p_cur) + &p_prev;
        let q_next = Integer::from(&a * &q_cur) + &q_prev;
        if q_next > max_den {
            break;
        }
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
    }
    Rational::from((p_cur, q_cur))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brandt::WeightSpace;
    use crate::hp::pi;
    use crate::periods::{fact, l_algebraic};
    use crate::DEFAULT_PREC;
    use proptest::prelude::*;

    fn setup(level: u64, k: u32) -> WeightSpace {
        let cs = class_set(level).unwrap();
        weight_space(&cs, k, DEFAULT_PREC)
    }

    fn binom_int(n: u32, r: u32) -> Integer {
        fact(n) / (fact(r) * fact(n - r))
    }

    #[test]
    fn level_classification_follows_the_residues() {
        use LevelType::*;
        for (n, t) in [
            (13, Type1),
            (37, Type1),
            (61, Type1),
            (455, Type1), // 5 · 7 · 13
            (5, Type5),
            (17, Type5),
            (7, Type7),
            (19, Type7),
            (11, Type11),
            (23, Type11),
            (2, RamifiedAt2Or3),
            (3, RamifiedAt2Or3),
            (30, RamifiedAt2Or3),
            (105, RamifiedAt2Or3),
            (1, Other),
            (4, Other),
            (15, Other),
            (49, Other),
        ] {
            assert_eq!(classify_level(n), t, "level {n}");
        }
    }

    #[test]
    fn closed_type_one_targets() {
        assert_eq!(geometric_rhs_type1(37, 2).unwrap(), ratq(1, 6));
        assert_eq!(geometric_rhs_type1(13, 4).unwrap(), ratq(1, 2));
        assert_eq!(geometric_rhs_type1(13, 6).unwrap(), ratq(7, 24));
        assert!(geometric_rhs_type1(11, 2).is_err());
        assert!(geometric_rhs_type1(30, 2).is_err());
        for weight in [4u32, 6, 8, 10, 12] {
            let k = weight / 2;
            // Equivalent binomial form, and independence of the level.
            let binom = Rational::from((
                binom_int(3 * k - 2, k - 1),
                binom_int(2 * k - 2, k - 1).pow(2u32),
            ));
            let v13 = geometric_rhs_type1(13, weight).unwrap();
            assert_eq!(Rational::from(&v13 * &Rational::from(2)), binom);
            assert_eq!(v13, geometric_rhs_type1(37, weight).unwrap());
            assert_eq!(v13, geometric_rhs_type1(61, weight).unwrap());
        }
    }

    #[test]
    fn table_corrections_are_the_printed_constants() {
        use LevelType::*;
        assert_eq!(table_correction(4, Type1).unwrap(), ratq(0, 1));
        assert_eq!(table_correction(4, Type7).unwrap(), ratq(3, 1));
        assert_eq!(table_correction(4, Type5).unwrap(), ratq(2, 1));
        assert_eq!(table_correction(4, Type11).unwrap(), ratq(5, 1));
        assert_eq!(table_correction(6, Type1).unwrap(), ratq(0, 1));
        assert_eq!(table_correction(6, Type7).unwrap(), ratq(9, 5));
        assert_eq!(table_correction(6, Type5).unwrap(), ratq(-34, 35));
        assert_eq!(table_correction(6, Type11).unwrap(), ratq(29, 35));
        assert!(table_correction(2, Type1).is_err());
        assert!(table_correction(4, RamifiedAt2Or3).is_err());
    }

    #[test]
    fn tables_agree_with_the_general_expression() {
        // Unit conversion between the classical displays and the
        // Γ-normalized expression: 1, 3·2⁵, 3⁴·2¹¹.
        for n in [5u64, 7, 11, 13, 23, 37] {
            let lt = classify_level(n);
            for (weight, conv) in [(2u32, 1i64), (4, 96), (6, 165888)] {
                let table = table_rhs(n, weight, lt).unwrap();
                let (_, exact) = general_rhs(n, weight, DEFAULT_PREC).unwrap();
                let exact = exact.expect("orbit sums at low weight are rational");
                assert_eq!(
                    table,
                    exact * Rational::from(conv),
                    "level {n} weight {weight}"
                );
            }
        }
    }

    #[test]
    fn verify_main_at_the_type_one_anchors() {
        let rep = verify_main(37, 2, DEFAULT_TOL_REL, DEFAULT_PREC).unwrap();
        assert_eq!(rep.level_type, LevelType::Type1);
        assert_eq!(rep.records.len(), 2);
        for r in &rep.records {
            assert_eq!(r.rhs_exact.as_ref().unwrap(), &ratq(1, 6));
            assert!(r.pass, "record {}: {:?}", r.h_index, r.error);
        }
        let agg = rep.aggregate.as_ref().unwrap();
        assert_eq!(agg.rhs_exact.as_ref().unwrap(), &ratq(1, 3));
        assert!(agg.pass);
        assert!(rep.all_pass());

        let rep = verify_main(13, 4, DEFAULT_TOL_REL, DEFAULT_PREC).unwrap();
        assert_eq!(rep.records.len(), 3);
        assert_eq!(rep.class_number, 1);
        for r in &rep.records {
            assert_eq!(r.rhs_exact.as_ref().unwrap(), &ratq(1, 2));
            assert!(r.pass, "record {}: {:?}", r.h_index, r.error);
        }
        // The spectral side is independent of the fixed form here.
        for r in &rep.records[1..] {
            let d = Float::with_val(DEFAULT_PREC, &r.lhs - &rep.records[0].lhs);
            assert!(d.abs().to_f64() < 1e-12);
        }
        // Summing the per-form identities reproduces the aggregate.
        let agg = rep.aggregate.as_ref().unwrap();
        assert_eq!(agg.rhs_exact.as_ref().unwrap(), &ratq(6, 1));
        assert!(agg.pass);
        let mut s = Float::with_val(DEFAULT_PREC, 0);
        for r in &rep.records {
            s += &r.lhs;
        }
        s *= 4u32;
        let d = Float::with_val(DEFAULT_PREC, &s - &agg.lhs);
        assert!(d.abs().to_f64() < 1e-20);
    }

    #[test]
    fn verify_main_level_thirteen_weight_six() {
        let rep = verify_main(13, 6, DEFAULT_TOL_REL, DEFAULT_PREC).unwrap();
        assert_eq!(rep.records.len(), 5);
        for r in &rep.records {
            assert_eq!(r.rhs_exact.as_ref().unwrap(), &ratq(7, 24));
            assert!(r.pass, "record {}: {:?}", r.h_index, r.error);
        }
        let agg = rep.aggregate.as_ref().unwrap();
        assert_eq!(agg.rhs_exact.as_ref().unwrap(), &ratq(6, 1));
        assert!(agg.pass);
    }

    #[test]
    fn empty_spaces_verify_vacuously() {
        assert_eq!(dim_newforms(2, 6).unwrap(), 0);
        let lhs = spectral_lhs(2, 6, 0, DEFAULT_PREC).unwrap();
        assert_eq!(lhs.to_f64(), 0.0);
        let rep = verify_main(2, 6, DEFAULT_TOL_REL, DEFAULT_PREC).unwrap();
        assert!(rep.records.is_empty());
        assert!(rep.aggregate.is_none());
        assert!(rep.all_pass());
    }

    #[test]
    fn three_form_averages_match_the_tables() {
        let s = sum_over_three(13, 4, DEFAULT_PREC).unwrap();
        assert_eq!(s.rhs_exact.as_ref().unwrap(), &ratq(6, 1));
        assert!(s.pass, "abs err {}", s.abs_err);
        let s = sum_over_three(37, 2, DEFAULT_PREC).unwrap();
        assert_eq!(s.rhs_exact.as_ref().unwrap(), &ratq(1, 3));
        assert!(s.pass, "abs err {}", s.abs_err);
        let s = sum_over_three(11, 2, DEFAULT_PREC).unwrap();
        assert_eq!(s.rhs_exact.as_ref().unwrap(), &ratq(1, 10));
        assert!(s.pass, "abs err {}", s.abs_err);
        assert!(sum_over_three(30, 2, DEFAULT_PREC).is_err());
        assert!(sum_over_three(2, 8, DEFAULT_PREC).is_err());
    }

    #[test]
    fn weight_eight_general_branch_at_level_five() {
        assert_eq!(dim_newforms(5, 8).unwrap(), 3);
        let s = sum_over_three(5, 8, DEFAULT_PREC).unwrap();
        assert!(s.rhs_exact.is_none() || s.rhs.is_finite());
        assert!(
            s.pass,
            "lhs {} rhs {} abs {}",
            s.lhs, s.rhs, s.abs_err
        );
    }

    #[test]
    fn algebraic_values_reconstruct_as_rationals() {
        assert_eq!(
            nearest_rational(&Float::with_val(64, 0.6), 10),
            ratq(3, 5)
        );
        assert_eq!(nearest_rational(&pi(DEFAULT_PREC), 1000), ratq(355, 113));

        let ws = setup(11, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 2).unwrap();
        let f = ef.forms.iter().find(|f| !f.is_residual).unwrap();
        let v = l_algebraic(f, f, f, &ctx).unwrap();
        assert_eq!(nearest_rational(&v, 10_000), ratq(8, 5));
        assert!((v.to_f64() - 1.6).abs() < 1e-8);

        // Level 37: each pair value is near a small rational, and the
        // pair sum collapses to the closed value 8/3.
        let ws = setup(37, 1);
        let ctx = PeriodCtx::new(&ws);
        let ef = eigenforms_on(&ws, 3).unwrap();
        let cuspidal: Vec<_> = ef.forms.iter().filter(|f| !f.is_residual).collect();
        let mut total = Float::with_val(DEFAULT_PREC, 0);
        for f in &cuspidal {
            for g in &cuspidal {
                let v = l_algebraic(f, g, cuspidal[0], &ctx).unwrap();
                let q = nearest_rational(&v, 10_000);
                let err = Float::with_val(DEFAULT_PREC, &v - &float_rat(DEFAULT_PREC, &q));
                assert!(err.abs().to_f64() < 1e-8);
                total += v;
            }
        }
        assert!((total.to_f64() - 8.0 / 3.0).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn classification_matches_the_character_products(n in 1u64..400) {
            let ps = prime_divisors(n);
            let valid = n >= 2 && ps.iter().product::<u64>() == n && ps.len() % 2 == 1;
            let lt = classify_level(n);
            if !valid {
                prop_assert_eq!(lt, LevelType::Other);
            } else if n % 2 == 0 || n % 3 == 0 {
                prop_assert_eq!(lt, LevelType::RamifiedAt2Or3);
            } else {
                let alive4 = ps.iter().all(|&p| CmField::E0.chi(p) == -1);
                let alive3 = ps.iter().all(|&p| CmField::E1.chi(p) == -1);
                let expected = match (alive4, alive3) {
                    (false, false) => LevelType::Type1,
                    (false, true) => LevelType::Type5,
                    (true, false) => LevelType::Type7,
                    (true, true) => LevelType::Type11,
                };
                prop_assert_eq!(lt, expected);
            }
        }

        #[test]
        fn continued_fractions_recover_small_rationals(p in -400i64..400, q in 1i64..400) {
            let target = ratq(p, q);
            let x = float_rat(DEFAULT_PREC, &target);
            prop_assert_eq!(nearest_rational(&x, 10_000), target);
        }
    }

    #[cfg(feature = "extended")]
    mod extended {
        use super::*;

        #[test]
        fn full_geometric_side_reproduces_the_level_eleven_average() {
            let rep = verify_main(11, 2, 1e-6, DEFAULT_PREC).unwrap();
            assert_eq!(rep.level_type, LevelType::Type11);
            assert_eq!(rep.records.len(), 1);
            let r = &rep.records[0];
            assert!(r.error.is_none(), "{:?}", r.error);
            assert!(r.rhs_exact.is_none());
            assert!((r.rhs.to_f64() - 0.1).abs() < 1e-10, "rhs {}", r.rhs);
            assert!((r.lhs.to_f64() - 0.1).abs() < 1e-10, "lhs {}", r.lhs);
            assert!(r.pass);
            let agg = rep.aggregate.as_ref().unwrap();
            assert_eq!(agg.rhs_exact.as_ref().unwrap(), &ratq(1, 10));
            assert!(agg.pass);
        }

        #[test]
        fn full_geometric_side_vanishes_for_the_symmetric_cube_levels() {
            for n in [5u64, 7] {
                let rep = verify_main(n, 4, DEFAULT_TOL_REL, DEFAULT_PREC).unwrap();
                assert_eq!(rep.records.len(), 1);
                let r = &rep.records[0];
                assert!(r.error.is_none(), "level {n}: {:?}", r.error);
                assert!(
                    r.lhs.clone().abs().to_f64() < 1e-10,
                    "level {n} lhs {}",
                    r.lhs
                );
                assert!(
                    r.rhs.clone().abs().to_f64() < 1e-10,
                    "level {n} rhs {}",
                    r.rhs
                );
                assert!(r.pass);
            }
        }

        #[test]
        fn full_geometric_side_with_level_ramified_in_the_cm_field() {
            let rep = verify_main(30, 2, DEFAULT_TOL_REL, DEFAULT_PREC).unwrap();
            assert_eq!(rep.level_type, LevelType::RamifiedAt2Or3);
            assert_eq!(rep.records.len(), 1);
            let r = &rep.records[0];
            assert!(r.error.is_none(), "{:?}", r.error);
            assert!(r.pass, "lhs {} rhs {} rel {}", r.lhs, r.rhs, r.rel_err);
            assert!(rep.aggregate.is_none());
        }
    }
}
