//! Exact lattice arithmetic inside a definite quaternion algebra.
//!
//! Everything here is rational and exact: quaternions have `Rational`
//! coordinates in the basis 1, i, j, k of a presentation (a, b | Q);
//! lattices are rank-4 Z-modules stored as an integer Hermite normal form
//! over a common denominator, so lattice equality is structural equality.
//! On top of that sit maximal orders (built by prime-by-prime saturation
//! of the standard order), short-vector enumeration in the positive
//! definite norm form, unit groups, and the right-ideal class set of a
//! maximal order, enumerated breadth-first through p-neighbors until the
//! exact mass identity Σ 1/|Γ_j| = φ(N)/12 is reached.

use crate::arith::{euler_phi, is_prime, rational_gcd};
use crate::localsym::{presentation_for_level, QuatPresentation};
use crate::{Error, Result};
use rug::{Integer, Rational};

/// A quaternion with rational coordinates in the basis 1, i, j, k.
#[derive(Debug, Clone, PartialEq)]
pub struct Quat {
    pub pres: QuatPresentation,
    pub c: [Rational; 4],
}

impl Quat {
    pub fn new(pres: QuatPresentation, c: [Rational; 4]) -> Self {
        Quat { pres, c }
    }

    pub fn from_ints(pres: QuatPresentation, c: [i64; 4]) -> Self {
        Quat {
            pres,
            c: [
                Rational::from(c[0]),
                Rational::from(c[1]),
                Rational::from(c[2]),
                Rational::from(c[3]),
            ],
        }
    }

    pub fn zero(pres: QuatPresentation) -> Self {
        Quat::from_ints(pres, [0, 0, 0, 0])
    }

    pub fn one(pres: QuatPresentation) -> Self {
        Quat::from_ints(pres, [1, 0, 0, 0])
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|x| *x == 0)
    }

    fn check(&self, other: &Quat, what: &str) {
        assert_eq!(
            self.pres, other.pres,
            "{what} between different presentations"
        );
    }

    pub fn add(&self, other: &Quat) -> Quat {
        self.check(other, "addition");
        let mut c = self.c.clone();
        for t in 0..4 {
            c[t] += &other.c[t];
        }
        Quat { pres: self.pres, c }
    }

    pub fn sub(&self, other: &Quat) -> Quat {
        self.check(other, "subtraction");
        let mut c = self.c.clone();
        for t in 0..4 {
            c[t] -= &other.c[t];
        }
        Quat { pres: self.pres, c }
    }

    pub fn neg(&self) -> Quat {
        let mut c = self.c.clone();
        for x in &mut c {
            *x = Rational::from(-&*x);
        }
        Quat { pres: self.pres, c }
    }

    pub fn scale(&self, q: &Rational) -> Quat {
        let mut c = self.c.clone();
        for x in &mut c {
            *x *= q;
        }
        Quat { pres: self.pres, c }
    }

    /// Quaternion product with i² = a, j² = b, ij = −ji = k.
    pub fn mul(&self, other: &Quat) -> Quat {
        self.check(other, "multiplication");
        let a = Rational::from(self.pres.a);
        let b = Rational::from(self.pres.b);
        let ab = Rational::from(&a * &b);
        let x = &self.c;
        let y = &other.c;
        let p = |s: usize, t: usize| Rational::from(&x[s] * &y[t]);
        let z0 = p(0, 0) + p(1, 1) * &a + p(2, 2) * &b - p(3, 3) * &ab;
        let z1 = p(0, 1) + p(1, 0) - p(2, 3) * &b + p(3, 2) * &b;
        let z2 = p(0, 2) + p(2, 0) + p(1, 3) * &a - p(3, 1) * &a;
        let z3 = p(0, 3) + p(3, 0) + p(1, 2) - p(2, 1);
        Quat {
            pres: self.pres,
            c: [z0, z1, z2, z3],
        }
    }

    pub fn conj(&self) -> Quat {
        Quat {
            pres: self.pres,
            c: [
                self.c[0].clone(),
                Rational::from(-&self.c[1]),
                Rational::from(-&self.c[2]),
                Rational::from(-&self.c[3]),
            ],
        }
    }

    /// Reduced trace 2·x0.
    pub fn trd(&self) -> Rational {
        Rational::from(&self.c[0] * &Rational::from(2))
    }

    /// Reduced norm x0² − a·x1² − b·x2² + ab·x3².
    pub fn nrd(&self) -> Rational {
        let a = Rational::from(self.pres.a);
        let b = Rational::from(self.pres.b);
        let sq = |t: usize| Rational::from(&self.c[t] * &self.c[t]);
        sq(0) - sq(1) * &a - sq(2) * &b + sq(3) * Rational::from(&a * &b)
    }
}

/// Reduced trace of a product, 2(u0v0 + a u1v1 + b u2v2 − ab u3v3),
/// without building the product.
fn trd_prod(u: &Quat, v: &Quat) -> Rational {
    let a = Rational::from(u.pres.a);
    let b = Rational::from(u.pres.b);
    let p = |s: usize| Rational::from(&u.c[s] * &v.c[s]);
    let mut acc = p(0) + p(1) * &a + p(2) * &b - p(3) * Rational::from(&a * &b);
    acc *= 2;
    acc
}

/// A full-rank Z-lattice in the algebra: rowspan of `mat` divided by
/// `den`, with `mat` in canonical Hermite normal form (upper triangular,
/// positive pivots, above-pivot entries reduced) and gcd(den, content) = 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice4 {
    pub pres: QuatPresentation,
    pub den: Integer,
    pub mat: [[Integer; 4]; 4],
}

/// Hermite normal form of the row span of an integer matrix; panics if
/// the rank is below 4 (never the case for lattices built here).
fn hnf4(mut rows: Vec<[Integer; 4]>) -> [[Integer; 4]; 4] {
    let mut pivots: Vec<[Integer; 4]> = Vec::new();
    for col in 0..4 {
        loop {
            let mut best: Option<usize> = None;
            for idx in 0..rows.len() {
                if rows[idx][col] != 0 {
                    best = Some(match best {
                        None => idx,
                        Some(b) => {
                            if rows[idx][col].cmp_abs(&rows[b][col]) == std::cmp::Ordering::Less {
                                idx
                            } else {
                                b
                            }
                        }
                    });
                }
            }
            let bi = best.unwrap_or_else(|| panic!("rank-deficient lattice at column {col}"));
            let mut done = true;
            for idx in 0..rows.len() {
                if idx != bi && rows[idx][col] != 0 {
                    let q = Integer::from(&rows[idx][col] / &rows[bi][col]);
                    for t in col..4 {
                        let s = Integer::from(&rows[bi][t] * &q);
                        rows[idx][t] -= s;
                    }
                    if rows[idx][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                let mut piv = rows.swap_remove(bi);
                if piv[col] < 0 {
                    for t in 0..4 {
                        piv[t] = Integer::from(-&piv[t]);
                    }
                }
                pivots.push(piv);
                break;
            }
        }
    }
    let mut m: [[Integer; 4]; 4] = pivots.try_into().expect("exactly four pivot rows");
    // Reduce entries above each pivot into [0, pivot).
    for i in 1..4 {
        for k in 0..i {
            let (q, _) = <(Integer, Integer)>::from(m[k][i].div_rem_euc_ref(&m[i][i]));
            if q != 0 {
                for t in i..4 {
                    let s = Integer::from(&m[i][t] * &q);
                    m[k][t] -= s;
                }
            }
        }
    }
    m
}

impl Lattice4 {
    /// The lattice generated by a finite set of quaternions.
    pub fn from_generators(pres: QuatPresentation, gens: &[Quat]) -> Lattice4 {
        assert!(!gens.is_empty(), "empty generating set");
        let mut den = Integer::from(1);
        for g in gens {
            assert_eq!(g.pres, pres, "generator from a different presentation");
            for t in 0..4 {
                den = den.lcm(g.c[t].denom());
            }
        }
        let mut rows = Vec::with_capacity(gens.len());
        for g in gens {
            let mut row: [Integer; 4] = Default::default();
            for t in 0..4 {
                let v = Rational::from(&g.c[t] * &Rational::from(&den));
                let (num, d) = v.into_numer_denom();
                debug_assert_eq!(d, 1);
                row[t] = num;
            }
            rows.push(row);
        }
        let mat = hnf4(rows);
        Lattice4 { pres, den, mat }.normalized()
    }

    fn normalized(mut self) -> Lattice4 {
        let mut g = self.den.clone();
        for i in 0..4 {
            for j in 0..4 {
                g = g.gcd(&self.mat[i][j]);
            }
        }
        if g > 1 {
            self.den = Integer::from(&self.den / &g);
            for i in 0..4 {
                for j in 0..4 {
                    self.mat[i][j] = Integer::from(&self.mat[i][j] / &g);
                }
            }
        }
        self
    }

    /// The standard order Z + Zi + Zj + Zk.
    pub fn standard(pres: QuatPresentation) -> Lattice4 {
        let gens = [
            Quat::from_ints(pres, [1, 0, 0, 0]),
            Quat::from_ints(pres, [0, 1, 0, 0]),
            Quat::from_ints(pres, [0, 0, 1, 0]),
            Quat::from_ints(pres, [0, 0, 0, 1]),
        ];
        Lattice4::from_generators(pres, &gens)
    }

    pub fn basis(&self) -> [Quat; 4] {
        let d = Rational::from(&self.den);
        std::array::from_fn(|i| {
            let c = std::array::from_fn(|t| Rational::from(&self.mat[i][t]) / d.clone());
            Quat::new(self.pres, c)
        })
    }

    /// Membership test by exact triangular solve.
    pub fn contains(&self, x: &Quat) -> bool {
        assert_eq!(x.pres, self.pres);
        let mut c = [
            Rational::new(),
            Rational::new(),
            Rational::new(),
            Rational::new(),
        ];
        for j in 0..4 {
            let mut v = Rational::from(&x.c[j] * &Rational::from(&self.den));
            for i in 0..j {
                v -= Rational::from(&c[i] * &Rational::from(&self.mat[i][j]));
            }
            let q = v / Rational::from(&self.mat[j][j]);
            if !q.is_integer() {
                return false;
            }
            c[j] = q;
        }
        true
    }

    /// Lattice product: the Z-span of all pairwise products of bases.
    pub fn mul_lat(&self, other: &Lattice4) -> Lattice4 {
        assert_eq!(self.pres, other.pres);
        let a = self.basis();
        let b = other.basis();
        let mut gens = Vec::with_capacity(16);
        for x in &a {
            for y in &b {
                gens.push(x.mul(y));
            }
        }
        Lattice4::from_generators(self.pres, &gens)
    }

    pub fn conj_lat(&self) -> Lattice4 {
        let gens: Vec<Quat> = self.basis().iter().map(|x| x.conj()).collect();
        Lattice4::from_generators(self.pres, &gens)
    }

    pub fn add_lat(&self, other: &Lattice4) -> Lattice4 {
        assert_eq!(self.pres, other.pres);
        let mut gens: Vec<Quat> = self.basis().to_vec();
        gens.extend(other.basis());
        Lattice4::from_generators(self.pres, &gens)
    }

    pub fn scale_lat(&self, q: &Rational) -> Lattice4 {
        assert!(*q != 0);
        let gens: Vec<Quat> = self.basis().iter().map(|x| x.scale(q)).collect();
        Lattice4::from_generators(self.pres, &gens)
    }

    /// det of the rational basis matrix, up to sign: index bookkeeping.
    fn abs_det(&self) -> Rational {
        let mut d = Integer::from(1);
        for i in 0..4 {
            d *= &self.mat[i][i];
        }
        let den2 = Integer::from(&self.den * &self.den);
        let den4 = Integer::from(&den2 * &den2);
        Rational::from((d, den4)).abs()
    }

    /// Index [self : sub] for a finite-index sublattice.
    pub fn index_of(&self, sub: &Lattice4) -> Rational {
        sub.abs_det() / self.abs_det()
    }

    /// Content of the norm form: the positive rational generating the
    /// fractional ideal spanned by nrd on the lattice (the reduced norm
    /// of an ideal).
    pub fn norm_content(&self) -> Rational {
        let b = self.basis();
        let mut g = b[0].nrd();
        for i in 1..4 {
            g = rational_gcd(&g, &b[i].nrd());
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                g = rational_gcd(&g, &trd_prod(&b[i], &b[j].conj()));
            }
        }
        g
    }

    /// Gram matrix of the norm form: Q(c) = cᵀ A c for x = Σ c_i b_i.
    pub fn gram(&self) -> [[Rational; 4]; 4] {
        let b = self.basis();
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let t = trd_prod(&b[i], &b[j].conj());
                t / Rational::from(2)
            })
        })
    }
}

fn floor_x_plus_sqrt(x: &Rational, s: &Rational) -> Integer {
    debug_assert!(*s >= 0);
    let est = x.to_f64() + s.to_f64().max(0.0).sqrt();
    let mut n = Integer::from(est.floor() as i64);
    let le = |n: &Integer| -> bool {
        let d = Rational::from(n) - x;
        if d <= 0 {
            true
        } else {
            Rational::from(&d * &d) <= *s
        }
    };
    while le(&Integer::from(&n + 1i32)) {
        n += 1;
    }
    while !le(&n) {
        n -= 1;
    }
    n
}

/// All nonzero lattice vectors with nrd exactly `target`, by exact
/// Fincke–Pohst enumeration on the rational Gram matrix.  The output
/// contains both v and −v.
pub fn short_vectors(lat: &Lattice4, target: &Rational) -> Vec<Quat> {
    if *target < 0 {
        return Vec::new();
    }
    let a = lat.gram();
    // Exact LDLᵀ: A = L D Lᵀ with unit lower-triangular L.
    let mut dvec: Vec<Rational> = Vec::with_capacity(4);
    let mut l: [[Rational; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| Rational::new()));
    for i in 0..4 {
        let mut di = a[i][i].clone();
        for t in 0..i {
            di -= Rational::from(&l[i][t] * &l[i][t]) * &dvec[t];
        }
        assert!(di > 0, "norm form is not positive definite");
        for j in (i + 1)..4 {
            let mut v = a[j][i].clone();
            for t in 0..i {
                v -= Rational::from(&l[j][t] * &l[i][t]) * &dvec[t];
            }
            l[j][i] = v / di.clone();
        }
        l[i][i] = Rational::from(1);
        dvec.push(di);
    }
    let basis = lat.basis();
    let mut out = Vec::new();
    let mut coords = [0i64; 4];
    // Recursive descent from coordinate 3 down to 0.
    fn descend(
        level: isize,
        budget: Rational,
        coords: &mut [i64; 4],
        dvec: &[Rational],
        l: &[[Rational; 4]; 4],
        basis: &[Quat; 4],
        target: &Rational,
        out: &mut Vec<Quat>,
    ) {
        if level < 0 {
            if budget == 0 && coords.iter().any(|&c| c != 0) {
                let mut v = Quat::zero(basis[0].pres);
                for t in 0..4 {
                    if coords[t] != 0 {
                        v = v.add(&basis[t].scale(&Rational::from(coords[t])));
                    }
                }
                debug_assert_eq!(v.nrd(), *target);
                out.push(v);
            }
            return;
        }
        let i = level as usize;
        let mut u = Rational::new();
        for j in (i + 1)..4 {
            u += Rational::from(&l[j][i] * &Rational::from(coords[j]));
        }
        let s = budget.clone() / dvec[i].clone();
        let hi = floor_x_plus_sqrt(&Rational::from(-&u), &s);
        let lo = -floor_x_plus_sqrt(&u, &s);
        let mut ci = lo.clone();
        while ci <= hi {
            let c = ci.to_i64().expect("short-vector coordinate overflow");
            coords[i] = c;
            let step = Rational::from(c) + &u;
            let spent = Rational::from(&step * &step) * &dvec[i];
            let rem = budget.clone() - spent;
            debug_assert!(rem >= 0);
            descend(level - 1, rem, coords, dvec, l, basis, target, out);
            ci += 1;
        }
        coords[i] = 0;
    }
    descend(3, target.clone(), &mut coords, &dvec, &l, &basis, target, &mut out);
    out
}

/// An order together with its reduced discriminant and unit group
/// (modulo ±1).
#[derive(Debug, Clone)]
pub struct OrderData {
    pub lattice: Lattice4,
    pub reduced_discriminant: u64,
    pub unit_order: u64,
    /// Units modulo ±1, first nonzero coordinate positive.
    pub units: Vec<Quat>,
}

fn det4(m: &[[Rational; 4]; 4]) -> Rational {
    // Cofactor expansion along the first row; 4×4 only.
    fn det3(m: &[[Rational; 4]; 4], rows: [usize; 3], cols: [usize; 3]) -> Rational {
        let a = |r: usize, c: usize| &m[rows[r]][cols[c]];
        let mut acc = Rational::from(a(0, 0) * a(1, 1));
        acc *= a(2, 2);
        let mut t = Rational::from(a(0, 1) * a(1, 2));
        t *= a(2, 0);
        acc += t;
        let mut t = Rational::from(a(0, 2) * a(1, 0));
        t *= a(2, 1);
        acc += t;
        let mut t = Rational::from(a(0, 2) * a(1, 1));
        t *= a(2, 0);
        acc -= t;
        let mut t = Rational::from(a(0, 0) * a(1, 2));
        t *= a(2, 1);
        acc -= t;
        let mut t = Rational::from(a(0, 1) * a(1, 0));
        t *= a(2, 2);
        acc -= t;
        acc
    }
    let cols = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];
    let mut acc = Rational::new();
    for (j, c) in cols.iter().enumerate() {
        let minor = det3(m, [1, 2, 3], *c);
        let term = Rational::from(&m[0][j] * &minor);
        if j % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    acc
}

/// Reduced discriminant of an order: √|det(trd(b_i b_j))|.
pub fn reduced_discriminant(lat: &Lattice4) -> u64 {
    let b = lat.basis();
    let t: [[Rational; 4]; 4] =
        std::array::from_fn(|i| std::array::from_fn(|j| trd_prod(&b[i], &b[j])));
    let d = det4(&t).abs();
    let (num, den) = d.into_numer_denom();
    let ns = num.clone().sqrt();
    let ds = den.clone().sqrt();
    assert_eq!(Integer::from(&ns * &ns), num, "discriminant is not a square");
    assert_eq!(Integer::from(&ds * &ds), den, "discriminant is not a square");
    let r = Rational::from((ns, ds));
    assert!(r.is_integer(), "reduced discriminant is not integral");
    r.numer().to_u64().expect("reduced discriminant overflow")
}

/// Canonical sign: first nonzero coordinate positive.
fn sign_canonical(x: &Quat) -> bool {
    for t in 0..4 {
        match x.c[t].cmp0() {
            std::cmp::Ordering::Greater => return true,
            std::cmp::Ordering::Less => return false,
            std::cmp::Ordering::Equal => continue,
        }
    }
    false
}

/// Norm-one elements of the order modulo ±1.
pub fn unit_group(lat: &Lattice4) -> Vec<Quat> {
    let one = Rational::from(1);
    short_vectors(lat, &one)
        .into_iter()
        .filter(sign_canonical)
        .collect()
}

impl OrderData {
    pub fn new(lattice: Lattice4) -> OrderData {
        let one = Quat::one(lattice.pres);
        assert!(lattice.contains(&one), "order does not contain 1");
        let b = lattice.basis();
        for x in &b {
            for y in &b {
                assert!(
                    lattice.contains(&x.mul(y)),
                    "order is not closed under multiplication"
                );
            }
        }
        let reduced_discriminant = reduced_discriminant(&lattice);
        let units = unit_group(&lattice);
        OrderData {
            lattice,
            reduced_discriminant,
            unit_order: units.len() as u64,
            units,
        }
    }
}

/// Ring closure of a lattice containing 1: repeatedly adjoin pairwise
/// products until stable.  Returns None if it fails to stabilize quickly
/// (candidate element was not integral).
fn ring_closure(start: &Lattice4) -> Option<Lattice4> {
    let mut cur = start.clone();
    for _ in 0..8 {
        let prod = cur.mul_lat(&cur);
        let next = cur.add_lat(&prod);
        if next == cur {
            return Some(cur);
        }
        cur = next;
    }
    None
}

fn is_integral_order(lat: &Lattice4) -> bool {
    let b = lat.basis();
    b.iter().all(|x| x.trd().is_integer() && x.nrd().is_integer())
}

/// The maximal order of the presented algebra, constructed by saturating
/// the standard order at every prime with excess discriminant valuation.
pub fn maximal_order(pres: QuatPresentation) -> Result<OrderData> {
    let n = pres.discriminant;
    let mut lat = Lattice4::standard(pres);
    let mut guard = 0;
    loop {
        let d = reduced_discriminant(&lat);
        if d == n {
            break;
        }
        guard += 1;
        if guard > 64 {
            return Err(Error::Level(
                n,
                "maximal-order saturation did not terminate".into(),
            ));
        }
        let mut excess = d / n;
        assert_eq!(d % n, 0, "reduced discriminant not a multiple of the target");
        let mut improved = false;
        let mut p = 2u64;
        while excess > 1 {
            if excess % p == 0 {
                while excess % p == 0 {
                    excess /= p;
                }
                if let Some(next) = saturate_at(&lat, p) {
                    lat = next;
                    improved = true;
                    break;
                }
            }
            p += 1;
        }
        if !improved {
            return Err(Error::Level(
                n,
                "saturation found no integral element at any excess prime".into(),
            ));
        }
    }
    Ok(OrderData::new(lat))
}

/// Try to enlarge the order at p: look for x = y/p with y in the lattice,
/// trd(x) and nrd(x) integral, whose ring closure is an integral order
/// with strictly smaller discriminant.
fn saturate_at(lat: &Lattice4, p: u64) -> Option<Lattice4> {
    let b = lat.basis();
    let d0 = reduced_discriminant(lat);
    // Fast exact filters on integer data: traces of basis vectors and the
    // doubled Gram numerators 2 den² nrd.
    let tau: [i128; 4] = std::array::from_fn(|t| {
        let tr = b[t].trd();
        debug_assert!(tr.is_integer());
        tr.numer().to_i128().expect("trace overflow")
    });
    let mut gnum = [[0i128; 4]; 4];
    for s in 0..4 {
        for t in 0..4 {
            let mut v = trd_prod(&b[s], &b[t].conj());
            v *= Rational::from(&lat.den * &lat.den);
            debug_assert!(v.is_integer());
            gnum[s][t] = v.numer().to_i128().expect("gram overflow");
        }
    }
    let den2 = Integer::from(&lat.den * &lat.den)
        .to_i128()
        .expect("denominator overflow");
    let pp = p as i128;
    let norm_mod = 2 * den2 * pp * pp;
    let pi = p as i64;
    for c0 in 0..pi {
        for c1 in 0..pi {
            for c2 in 0..pi {
                for c3 in 0..pi {
                    if c0 == 0 && c1 == 0 && c2 == 0 && c3 == 0 {
                        continue;
                    }
                    let c = [c0 as i128, c1 as i128, c2 as i128, c3 as i128];
                    let tr: i128 = (0..4).map(|t| c[t] * tau[t]).sum();
                    if tr % pp != 0 {
                        continue;
                    }
                    let mut q = 0i128;
                    for s in 0..4 {
                        for t in 0..4 {
                            q += c[s] * gnum[s][t] % norm_mod * c[t];
                        }
                    }
                    if q % norm_mod != 0 {
                        continue;
                    }
                    // Exact confirmation and closure.
                    let mut y = Quat::zero(lat.pres);
                    for t in 0..4 {
                        if c[t] != 0 {
                            y = y.add(&b[t].scale(&Rational::from(c[t] as i64)));
                        }
                    }
                    let x = y.scale(&Rational::from((Integer::from(1), Integer::from(p))));
                    if !x.trd().is_integer() || !x.nrd().is_integer() {
                        continue;
                    }
                    let mut gens: Vec<Quat> = b.to_vec();
                    gens.push(x);
                    let bigger = Lattice4::from_generators(lat.pres, &gens);
                    if bigger == *lat {
                        continue;
                    }
                    if let Some(closed) = ring_closure(&bigger) {
                        if is_integral_order(&closed) {
                            let d1 = reduced_discriminant(&closed);
                            if d1 < d0 && d0 % d1 == 0 {
                                return Some(closed);
                            }
                        }
                    }
                }
            }
        }
    }
    None
}

/// Left order {x : xI ⊆ I} of a right ideal of a maximal order, via
/// O_l(I) = I · conj(I) / nrd(I).
pub fn left_order(ideal: &Lattice4) -> Lattice4 {
    let n = ideal.norm_content();
    let prod = ideal.mul_lat(&ideal.conj_lat());
    let inv = Rational::from(1) / n;
    prod.scale_lat(&inv)
}

/// Rescale an ideal so its coordinates in the order's basis are integral
/// with content one.
fn primitive_in(ideal: &Lattice4, order: &Lattice4) -> Lattice4 {
    // Coordinates of the ideal basis in the order basis: triangular solve.
    let ob = order.basis();
    let mut g: Option<Rational> = None;
    for x in ideal.basis() {
        let mut rem = x.clone();
        for (j, obj) in ob.iter().enumerate() {
            // order basis is triangular: coefficient of basis j is fixed by
            // coordinate j once earlier ones are subtracted.
            let denj = Rational::from(&order.mat[j][j]) / Rational::from(&order.den);
            let cj = rem.c[j].clone() / denj;
            g = Some(match g {
                None => cj.clone().abs(),
                Some(prev) => rational_gcd(&prev, &cj),
            });
            rem = rem.sub(&obj.scale(&cj));
        }
        debug_assert!(rem.is_zero());
    }
    let g = g.expect("nonempty basis");
    if g == 1 {
        ideal.clone()
    } else {
        let inv = Rational::from(1) / g;
        ideal.scale_lat(&inv)
    }
}

/// The p+1 neighbors of a right ideal I at a prime p not dividing the
/// discriminant: right submodules J = xO + pI of index p² in I, with
/// nrd(J) = p·nrd(I).
pub fn neighbors(ideal: &Lattice4, order: &Lattice4, p: u64) -> Vec<Lattice4> {
    let ib = ideal.basis();
    let ob = order.basis();
    let pq = Rational::from(p);
    let mut found: Vec<Lattice4> = Vec::new();
    let pi = p as i64;
    // Projective normalization: first nonzero coefficient equals 1.
    let mut cvecs: Vec<[i64; 4]> = Vec::new();
    for lead in 0..4 {
        let mut c = [0i64; 4];
        c[lead] = 1;
        let free = 4 - lead - 1;
        let count = (pi as u64).pow(free as u32);
        for mut idx in 0..count {
            for t in 0..free {
                c[lead + 1 + t] = (idx % p as u64) as i64;
                idx /= p as u64;
            }
            cvecs.push(c);
        }
    }
    for c in cvecs {
        let mut x = Quat::zero(ideal.pres);
        for t in 0..4 {
            if c[t] != 0 {
                x = x.add(&ib[t].scale(&Rational::from(c[t])));
            }
        }
        let mut gens: Vec<Quat> = ob.iter().map(|o| x.mul(o)).collect();
        gens.extend(ib.iter().map(|v| v.scale(&pq)));
        let j = Lattice4::from_generators(ideal.pres, &gens);
        if ideal.index_of(&j) == Rational::from((p * p, 1u64)) && !found.contains(&j) {
            found.push(j);
        }
    }
    assert_eq!(
        found.len(),
        p as usize + 1,
        "expected p+1 neighbors at p = {p}"
    );
    found
}

/// Right-ideal equivalence for ideals of one maximal order: I ~ J iff
/// I·conj(J) represents nrd(I)·nrd(J).
pub fn equivalent(a: &Lattice4, b: &Lattice4) -> bool {
    let prod = a.mul_lat(&b.conj_lat());
    let target = a.norm_content() * b.norm_content();
    !short_vectors(&prod, &target).is_empty()
}

/// The right ideal class set of the maximal order at level N, with left
/// orders and unit groups of every representative.
#[derive(Debug, Clone)]
pub struct ClassSet {
    pub level: u64,
    pub order: OrderData,
    pub ideal_reps: Vec<Lattice4>,
    pub left_orders: Vec<OrderData>,
    pub ideal_norms: Vec<Rational>,
}

impl ClassSet {
    pub fn h(&self) -> usize {
        self.ideal_reps.len()
    }

    pub fn unit_orders(&self) -> Vec<u64> {
        self.left_orders.iter().map(|o| o.unit_order).collect()
    }

    pub fn mass(&self) -> Rational {
        let mut m = Rational::new();
        for o in &self.left_orders {
            m += Rational::from((1u64, o.unit_order));
        }
        m
    }
}

/// Breadth-first enumeration of the right ideal classes through
/// p-neighbors at the smallest prime not dividing N, terminating on the
/// exact mass identity Σ 1/|Γ_j| = φ(N)/12.
pub fn right_ideal_classes(order: OrderData, level: u64) -> Result<ClassSet> {
    let target_mass = Rational::from((euler_phi(level), 12u64));
    let mut p = 2u64;
    while level % p == 0 || !is_prime(p) {
        p += 1;
    }
    let mut reps: Vec<Lattice4> = vec![order.lattice.clone()];
    let mut left_orders: Vec<OrderData> = vec![order.clone()];
    let mut mass = Rational::from((1u64, left_orders[0].unit_order));
    let mut queue: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    queue.push_back(0);
    let mut visited = 0usize;
    while mass != target_mass {
        let Some(i) = queue.pop_front() else {
            return Err(Error::Level(
                level,
                format!(
                    "class-set enumeration exhausted at mass {mass} (target {target_mass})"
                ),
            ));
        };
        visited += 1;
        if visited > 4096 {
            return Err(Error::Level(level, "class-set enumeration cap exceeded".into()));
        }
        let current = reps[i].clone();
        for j in neighbors(&current, &order.lattice, p) {
            let j = primitive_in(&j, &order.lattice);
            if reps.iter().any(|r| equivalent(r, &j)) {
                continue;
            }
            let lo = OrderData::new(left_order(&j));
            mass += Rational::from((1u64, lo.unit_order));
            reps.push(j);
            left_orders.push(lo);
            queue.push_back(reps.len() - 1);
            if mass == target_mass {
                break;
            }
        }
        assert!(
            mass <= target_mass,
            "mass overshot the target: {mass} > {target_mass}"
        );
    }
    let ideal_norms: Vec<Rational> = reps.iter().map(|r| r.norm_content()).collect();
    Ok(ClassSet {
        level,
        order,
        ideal_reps: reps,
        left_orders,
        ideal_norms,
    })
}

/// Presentation search, maximal order, and class set for a level in one
/// call.
pub fn class_set(level: u64) -> Result<ClassSet> {
    let pres = presentation_for_level(level)?;
    let order = maximal_order(pres)?;
    right_ideal_classes(order, level)
}
