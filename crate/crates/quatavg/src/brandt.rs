//! Weight-2k quaternionic modular forms: the unit-invariant subspace
//! attached to each ideal class, Brandt/Hecke matrices, the Atkin–Lehner
//! action at ramified primes, eigenform extraction by joint
//! diagonalization, and a dimension cross-check against the newform
//! dimension formula.
//!
//! Spectral data is high-precision complex; the underlying lattice
//! counts are exact.  Coordinates on the total space are taken with
//! respect to bases that are orthonormal for the mass-weighted pairing
//! ⟨u, v⟩ = Σ_j ⟨u_j, v_j⟩ / |Γ_j|, so self-adjointness of a Hecke
//! operator is plain Hermitian symmetry of its matrix.

use crate::arith::{binom, chi_m3, chi_m4, euler_phi, factorize, is_prime, prime_divisors, ratq};
use crate::hp::{float_rat, pow_i, sqrt_u, Cx};
use crate::linalg::{hermitian_eigen, CMat};
use crate::quatlat::{short_vectors, Lattice4, Quat};
pub use crate::quatlat::{class_set, right_ideal_classes, ClassSet};
use crate::{Error, Result};
use rug::{Float, Integer, Rational};
use std::collections::BTreeMap;

/// Numeric image of a quaternion under the 2×2 embedding
/// x ↦ [[α, −β], [β̄, ᾱ]] with α = x0 + x1√|a|·i and
/// β = x2√|b| + x3√|ab|·i, returned as (α, β).
pub(crate) fn embed_c2(x: &Quat, prec: u32) -> (Cx, Cx) {
    assert!(
        x.pres.a < 0 && x.pres.b < 0,
        "embedding needs a definite presentation"
    );
    let qa = (-x.pres.a) as u64;
    let nb = (-x.pres.b) as u64;
    let sq = sqrt_u(prec, qa);
    let sn = sqrt_u(prec, nb);
    let sqn = Float::with_val(prec, &sq * &sn);
    let f: [Float; 4] = std::array::from_fn(|t| float_rat(prec, &x.c[t]));
    let alpha = Cx::new(f[0].clone(), Float::with_val(prec, &sq * &f[1]));
    let beta = Cx::new(
        Float::with_val(prec, &sn * &f[2]),
        Float::with_val(prec, &sqn * &f[3]),
    );
    (alpha, beta)
}

/// Action of the matrix [[α, −β], [β̄, ᾱ]] on binary forms of degree
/// 2k−2 in the monomial basis e_n = X^{2k−2−n} Y^n, without any
/// determinant normalization.
pub(crate) fn sym2x2(alpha: &Cx, beta: &Cx, k: u32) -> CMat {
    assert!(k >= 1);
    let prec = alpha.prec();
    let e = (2 * k - 2) as usize;
    let d = e + 1;
    // Power tables for α, ᾱ, β̄ and −β.
    let pows = |z: &Cx| -> Vec<Cx> {
        let mut v = Vec::with_capacity(d);
        v.push(Cx::one(prec));
        for t in 1..d {
            let next = v[t - 1].mul(z);
            v.push(next);
        }
        v
    };
    let apow = pows(alpha);
    let abpow = pows(&alpha.conj());
    let bbpow = pows(&beta.conj());
    let nbpow = pows(&beta.neg());
    let mut m = CMat::zeros(prec, d, d);
    for n in 0..d {
        let a_deg = e - n;
        let mut col = vec![Cx::zero(prec); d];
        for s in 0..=a_deg {
            let c1 = apow[a_deg - s]
                .mul(&bbpow[s])
                .scale_q(&Rational::from(binom(a_deg as u64, s as u64)));
            for t in 0..=n {
                let c2 = nbpow[n - t]
                    .mul(&abpow[t])
                    .scale_q(&Rational::from(binom(n as u64, t as u64)));
                col[s + t] = col[s + t].add(&c1.mul(&c2));
            }
        }
        for (row, v) in col.into_iter().enumerate() {
            *m.at_mut(row, n) = v;
        }
    }
    m
}

/// The representation of a nonzero quaternion on binary forms of degree
/// 2k−2: embed into 2×2 complex matrices and act by
/// P(X, Y) ↦ P((X, Y)g) · det(g)^{1−k}.  Norm-one elements act
/// unitarily for the invariant inner product.
pub fn rho(x: &Quat, k: u32, prec: u32) -> CMat {
    assert!(!x.is_zero(), "rho of the zero quaternion");
    let (alpha, beta) = embed_c2(x, prec);
    let det = float_rat(prec, &x.nrd());
    let detfac = pow_i(&det, 1 - k as i64);
    let mut m = sym2x2(&alpha, &beta, k);
    for v in m.a.iter_mut() {
        *v = v.scale_f(&detfac);
    }
    m
}

/// Invariant inner product on coefficient vectors:
/// ⟨u, v⟩ = Σ_n u_n · conj(v_n) / C(2k−2, n).
pub fn inner_invariant(k: u32, u: &[Cx], v: &[Cx]) -> Cx {
    let prec = u[0].prec();
    let e = (2 * k - 2) as u64;
    let mut acc = Cx::zero(prec);
    for n in 0..u.len() {
        let w = Rational::from((Integer::from(1), binom(e, n as u64)));
        acc = acc.add(&u[n].mul(&v[n].conj()).scale_q(&w));
    }
    acc
}

/// Per-class orthonormal bases of the unit-invariant subspaces, plus
/// offsets into the concatenated coordinate space.
#[derive(Debug, Clone)]
pub struct WeightSpace {
    pub k: u32,
    pub prec: u32,
    pub class_set: ClassSet,
    /// For each class, an orthonormal basis (invariant inner product) of
    /// the subspace fixed by the unit group.
    pub class_bases: Vec<Vec<Vec<Cx>>>,
    pub offsets: Vec<usize>,
    pub total_dim: usize,
}

/// Build the weight-2k space over a class set: average rho over each
/// unit group to get the invariant projector, then orthonormalize its
/// columns.
pub fn weight_space(cs: &ClassSet, k: u32, prec: u32) -> WeightSpace {
    let d = (2 * k - 1) as usize;
    let mut class_bases = Vec::with_capacity(cs.h());
    for od in &cs.left_orders {
        let mut proj = CMat::zeros(prec, d, d);
        for u in &od.units {
            let r = rho(u, k, prec);
            for idx in 0..d * d {
                proj.a[idx] = proj.a[idx].add(&r.a[idx]);
            }
        }
        let inv = Float::with_val(prec, od.unit_order).recip();
        for idx in 0..d * d {
            proj.a[idx] = proj.a[idx].scale_f(&inv);
        }
        // Gram–Schmidt on the projector columns in the invariant metric.
        let mut basis: Vec<Vec<Cx>> = Vec::new();
        for j in 0..d {
            let mut v = proj.column(j);
            for b in &basis {
                let c = inner_invariant(k, &v, b);
                for t in 0..d {
                    v[t] = v[t].sub(&b[t].mul(&c));
                }
            }
            let n2 = inner_invariant(k, &v, &v).re;
            if n2 > 1e-12 {
                let inv_norm = n2.sqrt().recip();
                for t in 0..d {
                    v[t] = v[t].scale_f(&inv_norm);
                }
                basis.push(v);
            }
        }
        class_bases.push(basis);
    }
    let mut offsets = Vec::with_capacity(class_bases.len());
    let mut total_dim = 0usize;
    for b in &class_bases {
        offsets.push(total_dim);
        total_dim += b.len();
    }
    WeightSpace {
        k,
        prec,
        class_set: cs.clone(),
        class_bases,
        offsets,
        total_dim,
    }
}

/// A Hecke or Atkin–Lehner operator on the total space, in coordinates
/// orthonormal for the mass-weighted pairing (so the matrix is
/// Hermitian).
#[derive(Debug, Clone)]
pub struct HeckeMatrix {
    pub p: u64,
    pub entries: CMat,
}

/// Shared block assembly: block (i, j) sums rho over the vectors of
/// A_i·conj(I_j) of reduced norm `target_scale`·n_i·n_j, compresses to
/// the invariant bases, and scales by op_scale/(2 √(Γ_i Γ_j)).  The
/// composition order matters: right ideals are equivalent through left
/// multiplication, so witnesses for J = x·I_j ⊆ A_i live in
/// A_i·conj(I_j), where reduced norms are multiplicative.
fn assemble(ws: &WeightSpace, translated: &[Lattice4], target_scale: u64, op_scale: &Float) -> CMat {
    let cs = &ws.class_set;
    let h = cs.h();
    let prec = ws.prec;
    let d = (2 * ws.k - 1) as usize;
    let mut m = CMat::zeros(prec, ws.total_dim, ws.total_dim);
    for i in 0..h {
        for j in 0..h {
            if ws.class_bases[i].is_empty() || ws.class_bases[j].is_empty() {
                continue;
            }
            let lat = translated[i].mul_lat(&cs.ideal_reps[j].conj_lat());
            let target =
                Rational::from(target_scale) * &cs.ideal_norms[i] * &cs.ideal_norms[j];
            let xs = short_vectors(&lat, &target);
            if xs.is_empty() {
                continue;
            }
            let mut rsum = CMat::zeros(prec, d, d);
            for x in &xs {
                let r = rho(x, ws.k, prec);
                for idx in 0..d * d {
                    rsum.a[idx] = rsum.a[idx].add(&r.a[idx]);
                }
            }
            let gi = Float::with_val(prec, cs.left_orders[i].unit_order);
            let gj = Float::with_val(prec, cs.left_orders[j].unit_order);
            let denom = Float::with_val(prec, &gi * &gj).sqrt() * 2u32;
            let w = Float::with_val(prec, op_scale / &denom);
            for (t, bt) in ws.class_bases[j].iter().enumerate() {
                let rbt = rsum.apply(bt);
                for (s, bs) in ws.class_bases[i].iter().enumerate() {
                    let val = inner_invariant(ws.k, &rbt, bs).scale_f(&w);
                    *m.at_mut(ws.offsets[i] + s, ws.offsets[j] + t) = val;
                }
            }
        }
    }
    m
}

/// Brandt/Hecke matrix at p ∤ N, normalized so that its eigenvalues are
/// the classical a_p with |a_p| ≤ 2 p^{(2k−1)/2}.
pub fn brandt_matrix(p: u64, ws: &WeightSpace) -> Result<HeckeMatrix> {
    let n = ws.class_set.level;
    if !is_prime(p) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if n % p == 0 {
        return Err(Error::Domain(format!(
            "p = {p} divides the level {n}: use the Atkin-Lehner operator"
        )));
    }
    let prec = ws.prec;
    let scale = pow_i(&Float::with_val(prec, p), ws.k as i64 - 1);
    let entries = assemble(ws, &ws.class_set.ideal_reps, p, &scale);
    Ok(HeckeMatrix { p, entries })
}

/// Classical (weight-2) Brandt matrix with integer entries: entry (i, j)
/// counts lattice vectors of I_i·conj(I_j) with reduced norm p·n_i·n_j,
/// divided by the full unit count 2|Γ_j|.  Rows sum to p+1.
pub fn brandt_matrix_classical(p: u64, cs: &ClassSet) -> Result<Vec<Vec<u64>>> {
    if !is_prime(p) || cs.level % p == 0 {
        return Err(Error::Domain(format!(
            "classical Brandt matrix needs a prime p not dividing {}",
            cs.level
        )));
    }
    let h = cs.h();
    let mut m = vec![vec![0u64; h]; h];
    for i in 0..h {
        for j in 0..h {
            let lat = cs.ideal_reps[i].mul_lat(&cs.ideal_reps[j].conj_lat());
            let target = Rational::from(p) * &cs.ideal_norms[i] * &cs.ideal_norms[j];
            let count = short_vectors(&lat, &target).len() as u64;
            let div = 2 * cs.left_orders[j].unit_order;
            assert_eq!(count % div, 0, "Brandt count not divisible by unit order");
            m[i][j] = count / div;
        }
    }
    Ok(m)
}

/// The two-sided ideal of reduced norm p of a maximal order at a
/// ramified prime: pO plus any element whose norm is divisible by p.
pub fn two_sided_prime(order: &Lattice4, p: u64) -> Lattice4 {
    let b = order.basis();
    let pi = p as i64;
    for c0 in 0..pi {
        for c1 in 0..pi {
            for c2 in 0..pi {
                for c3 in 0..pi {
                    let c = [c0, c1, c2, c3];
                    if c.iter().all(|&t| t == 0) {
                        continue;
                    }
                    let mut x = Quat::zero(order.pres);
                    for t in 0..4 {
                        if c[t] != 0 {
                            x = x.add(&b[t].scale(&Rational::from(c[t])));
                        }
                    }
                    let nn = x.nrd();
                    debug_assert!(nn.is_integer());
                    if !nn.numer().is_divisible_u(p as u32) {
                        continue;
                    }
                    let mut gens: Vec<Quat> = b.iter().map(|o| x.mul(o)).collect();
                    gens.extend(b.iter().map(|o| o.scale(&Rational::from(p))));
                    let ts = Lattice4::from_generators(order.pres, &gens);
                    assert_eq!(
                        order.index_of(&ts),
                        Rational::from((p * p, 1u64)),
                        "two-sided ideal has wrong index"
                    );
                    return ts;
                }
            }
        }
    }
    panic!("no two-sided ideal of norm {p}: prime not ramified in this order");
}

/// Atkin–Lehner operator at p | N: the action of the two-sided ideal of
/// reduced norm p.  An involution with eigenvalues ±1; a_p is recovered
/// as δ_p(p)·p^{k−1}.
pub fn al_operator(p: u64, ws: &WeightSpace) -> Result<HeckeMatrix> {
    let n = ws.class_set.level;
    if n % p != 0 {
        return Err(Error::Domain(format!(
            "p = {p} does not divide the level {n}: use the Brandt matrix"
        )));
    }
    let two_sided = two_sided_prime(&ws.class_set.order.lattice, p);
    let translated: Vec<Lattice4> = ws
        .class_set
        .ideal_reps
        .iter()
        .map(|i| i.mul_lat(&two_sided))
        .collect();
    let one = Float::with_val(ws.prec, 1);
    let entries = assemble(ws, &translated, p, &one);
    Ok(HeckeMatrix { p, entries })
}

/// One eigenform: coordinates on the total space, the per-class
/// polynomial vectors (actual function values, with the mass weights
/// reinstated), Hecke eigenvalues at the computed primes, Atkin–Lehner
/// signs at p | N, and the residual flag (k = 1 only).
#[derive(Debug, Clone)]
pub struct Eigenform {
    pub coords: Vec<Cx>,
    pub class_vectors: Vec<Vec<Cx>>,
    pub a_p: BTreeMap<u64, Float>,
    pub delta: BTreeMap<u64, i32>,
    pub is_residual: bool,
}

#[derive(Debug, Clone)]
pub struct EigenformSet {
    pub level: u64,
    pub k: u32,
    pub forms: Vec<Eigenform>,
    pub hecke_primes: Vec<u64>,
}

fn rayleigh(op: &CMat, v: &[Cx]) -> Float {
    let prec = op.prec();
    let av = op.apply(v);
    let mut num = Cx::zero(prec);
    let mut den = Float::with_val(prec, 0);
    for t in 0..v.len() {
        num = num.add(&av[t].mul(&v[t].conj()));
        den += v[t].norm_sq();
    }
    Float::with_val(prec, &num.re / &den)
}

/// Split a cluster basis along the eigenvalue gaps of the restriction of
/// `op` to the cluster.
fn refine(clusters: Vec<CMat>, op: &CMat, prec: u32) -> Vec<CMat> {
    let mut out = Vec::new();
    for v in clusters {
        if v.cols <= 1 {
            out.push(v);
            continue;
        }
        let restricted = v.adjoint().mul(op).mul(&v);
        let (vals, vecs) = hermitian_eigen(&restricted, prec);
        let rotated = v.mul(&vecs);
        let mut scale = 1f64;
        for val in &vals {
            scale = scale.max(val.to_f64().abs());
        }
        let sep = 1e-6 * scale.max(1.0);
        let mut start = 0usize;
        for idx in 1..=vals.len() {
            let boundary = idx == vals.len()
                || (vals[idx].to_f64() - vals[idx - 1].to_f64()) > sep;
            if boundary {
                let mut sub = CMat::zeros(prec, rotated.rows, idx - start);
                for col in start..idx {
                    for row in 0..rotated.rows {
                        *sub.at_mut(row, col - start) = rotated.at(row, col).clone();
                    }
                }
                out.push(sub);
                start = idx;
            }
        }
    }
    out
}

/// Joint eigenbasis of the Brandt matrices and Atkin–Lehner operators.
/// Hecke primes are consumed in ascending order until every simultaneous
/// eigenspace is one-dimensional or the budget runs out.
pub fn eigenforms(cs: &ClassSet, k: u32, prime_budget: usize, prec: u32) -> Result<EigenformSet> {
    let ws = weight_space(cs, k, prec);
    eigenforms_on(&ws, prime_budget)
}

pub fn eigenforms_on(ws: &WeightSpace, prime_budget: usize) -> Result<EigenformSet> {
    let prec = ws.prec;
    let n = ws.class_set.level;
    if ws.total_dim == 0 {
        return Ok(EigenformSet {
            level: n,
            k: ws.k,
            forms: Vec::new(),
            hecke_primes: Vec::new(),
        });
    }
    let mut hecke_primes = Vec::new();
    let mut p = 2u64;
    while hecke_primes.len() < prime_budget.max(1) {
        if is_prime(p) && n % p != 0 {
            hecke_primes.push(p);
        }
        p += 1;
    }
    let al_ops: Vec<HeckeMatrix> = prime_divisors(n)
        .into_iter()
        .map(|q| al_operator(q, ws))
        .collect::<Result<_>>()?;
    let mut hecke_ops: Vec<HeckeMatrix> = Vec::new();
    let mut clusters = vec![CMat::identity(prec, ws.total_dim)];
    for &q in &hecke_primes {
        let b = brandt_matrix(q, ws)?;
        clusters = refine(clusters, &b.entries, prec);
        hecke_ops.push(b);
    }
    for al in &al_ops {
        if clusters.iter().all(|c| c.cols == 1) {
            break;
        }
        clusters = refine(clusters, &al.entries, prec);
    }
    if let Some(bad) = clusters.iter().find(|c| c.cols > 1) {
        return Err(Error::Separation(format!(
            "a {}-dimensional simultaneous eigenspace remains at level {n} after {} Hecke primes; raise the prime budget",
            bad.cols,
            hecke_ops.len()
        )));
    }
    let mut forms = Vec::new();
    for cl in &clusters {
        let mut v = cl.column(0);
        let mut n2 = Float::with_val(prec, 0);
        for t in &v {
            n2 += t.norm_sq();
        }
        let inv = n2.sqrt().recip();
        for t in &mut v {
            *t = t.scale_f(&inv);
        }
        let mut a_p = BTreeMap::new();
        for op in &hecke_ops {
            a_p.insert(op.p, rayleigh(&op.entries, &v));
        }
        let mut delta = BTreeMap::new();
        for op in &al_ops {
            let val = rayleigh(&op.entries, &v);
            let sign = if val > 0 { 1i32 } else { -1i32 };
            let dev = (val.to_f64() - sign as f64).abs();
            assert!(
                dev < 1e-6,
                "Atkin-Lehner eigenvalue {} not within 1e-6 of ±1",
                val.to_f64()
            );
            delta.insert(op.p, sign);
        }
        let is_residual = ws.k == 1 && {
            let p1 = hecke_primes[0];
            let a1 = a_p
                .get(&p1)
                .map(|f| f.to_f64())
                .unwrap_or(f64::NAN);
            (a1 - (p1 as f64 + 1.0)).abs() < 1e-6
        };
        // Per-class function values: undo the mass normalization.
        let d = (2 * ws.k - 1) as usize;
        let mut class_vectors = Vec::with_capacity(ws.class_set.h());
        for j in 0..ws.class_set.h() {
            let g = Float::with_val(prec, ws.class_set.left_orders[j].unit_order).sqrt();
            let mut vecj = vec![Cx::zero(prec); d];
            for (s, bs) in ws.class_bases[j].iter().enumerate() {
                let c = &v[ws.offsets[j] + s];
                for t in 0..d {
                    vecj[t] = vecj[t].add(&bs[t].mul(c));
                }
            }
            for t in 0..d {
                vecj[t] = vecj[t].scale_f(&g);
            }
            class_vectors.push(vecj);
        }
        forms.push(Eigenform {
            coords: v,
            class_vectors,
            a_p,
            delta,
            is_residual,
        });
    }
    // Deterministic order: residual first, then ascending Hecke data.
    forms.sort_by(|x, y| {
        y.is_residual.cmp(&x.is_residual).then_with(|| {
            for q in &hecke_primes {
                match (x.a_p.get(q), y.a_p.get(q)) {
                    (Some(a), Some(b)) => {
                        if let Some(ord) = a.partial_cmp(b) {
                            if ord != std::cmp::Ordering::Equal {
                                return ord;
                            }
                        }
                    }
                    _ => {}
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    let used: Vec<u64> = hecke_ops.iter().map(|op| op.p).collect();
    Ok(EigenformSet {
        level: n,
        k: ws.k,
        forms,
        hecke_primes: used,
    })
}

/// Dimension of the space of weight-2k newforms at a valid level:
/// (2k−1)φ(N)/12 − c₂(2k)·∏(1−χ₋₄(p)) − c₃(2k)·∏(1−χ₋₃(p)) − [k = 1].
pub fn dim_newforms(n: u64, weight: u32) -> Result<u64> {
    if weight < 2 || weight % 2 != 0 {
        return Err(Error::Weight(
            weight,
            "weight must be a positive even integer".into(),
        ));
    }
    let fac = factorize(n);
    if n < 2 || fac.iter().any(|(_, e)| *e > 1) || fac.len() % 2 == 0 {
        return Err(Error::Level(
            n,
            "level must be square-free with an odd number of prime factors".into(),
        ));
    }
    let k = weight / 2;
    let mut dim = Rational::from(((2 * k - 1) as u64 * euler_phi(n), 12u64));
    let c2 = if weight % 4 == 0 { ratq(1, 4) } else { ratq(-1, 4) };
    let c3 = match weight % 3 {
        0 => ratq(1, 3),
        1 => Rational::new(),
        _ => ratq(-1, 3),
    };
    let mut p4 = 1i64;
    let mut p3 = 1i64;
    for (p, _) in &fac {
        p4 *= 1 - chi_m4(*p) as i64;
        p3 *= 1 - chi_m3(*p) as i64;
    }
    dim -= c2 * Rational::from(p4);
    dim -= c3 * Rational::from(p3);
    if k == 1 {
        dim -= 1;
    }
    assert!(dim.is_integer(), "dimension formula gave a non-integer");
    assert!(dim >= 0, "dimension formula gave a negative value");
    Ok(dim.numer().to_u64().expect("dimension overflow"))
}
