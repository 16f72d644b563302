//! Dense complex matrices at high precision and a cyclic Jacobi
//! eigensolver for Hermitian matrices.
//!
//! The matrices appearing here are small (dimension ≤ a few dozen) but
//! need far more accuracy than f64, so a simple deterministic Jacobi
//! iteration on `Cx` entries is the right tool: fixed sweep order, no
//! pivot randomness, accuracy limited only by the working precision.

use crate::hp::Cx;
use rug::Float;

/// Dense row-major complex matrix.
#[derive(Clone, Debug)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<Cx>,
}

impl CMat {
    pub fn zeros(prec: u32, rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            a: vec![Cx::zero(prec); rows * cols],
        }
    }

    pub fn identity(prec: u32, n: usize) -> Self {
        let mut m = CMat::zeros(prec, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Cx::one(prec);
        }
        m
    }

    pub fn prec(&self) -> u32 {
        self.a[0].prec()
    }

    pub fn at(&self, i: usize, j: usize) -> &Cx {
        &self.a[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Cx {
        &mut self.a[i * self.cols + j]
    }

    pub fn mul(&self, o: &CMat) -> CMat {
        assert_eq!(self.cols, o.rows);
        let prec = self.prec();
        let mut out = CMat::zeros(prec, self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let x = self.at(i, k);
                if x.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let t = x.mul(o.at(k, j));
                    *out.at_mut(i, j) = out.at(i, j).add(&t);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        let mut out = CMat::zeros(self.prec(), self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).conj();
            }
        }
        out
    }

    pub fn sub(&self, o: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(&o.a) {
            *x = x.sub(y);
        }
        out
    }

    pub fn scale_f(&self, f: &Float) -> CMat {
        let mut out = self.clone();
        for x in out.a.iter_mut() {
            *x = x.scale_f(f);
        }
        out
    }

    pub fn apply(&self, v: &[Cx]) -> Vec<Cx> {
        assert_eq!(self.cols, v.len());
        let prec = self.prec();
        (0..self.rows)
            .map(|i| {
                let mut acc = Cx::zero(prec);
                for j in 0..self.cols {
                    acc = acc.add(&self.at(i, j).mul(&v[j]));
                }
                acc
            })
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Cx> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    /// Largest |entry| off the diagonal.
    pub fn max_offdiag(&self) -> Float {
        let prec = self.prec();
        let mut m = Float::with_val(prec, 0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    let v = self.at(i, j).abs();
                    if v > m {
                        m = v;
                    }
                }
            }
        }
        m
    }

    /// Largest |entry| anywhere.
    pub fn max_abs(&self) -> Float {
        let prec = self.prec();
        let mut m = Float::with_val(prec, 0);
        for x in &self.a {
            let v = x.abs();
            if v > m {
                m = v;
            }
        }
        m
    }

    /// ‖A − A†‖_max, a cheap Hermitian-deviation measure.
    pub fn hermitian_defect(&self) -> Float {
        self.sub(&self.adjoint()).max_abs()
    }
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the unitary matrix whose
/// columns are the matching eigenvectors. Deterministic: fixed sweep
/// order, no data-dependent pivot selection beyond a skip threshold.
pub fn hermitian_eigen(h: &CMat, prec: u32) -> (Vec<Float>, CMat) {
    assert_eq!(h.rows, h.cols, "hermitian_eigen needs a square matrix");
    let n = h.rows;
    let mut a = h.clone();
    let mut v = CMat::identity(prec, n);
    if n == 0 {
        return (Vec::new(), v);
    }
    let scale = {
        let m = a.max_abs();
        if m < 1 {
            Float::with_val(prec, 1)
        } else {
            m
        }
    };
    // Convergence threshold: a handful of bits above the working epsilon.
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32 - 8))) * &scale;
    let mut sweeps = 0usize;
    loop {
        if a.max_offdiag() <= eps {
            break;
        }
        sweeps += 1;
        assert!(sweeps <= 256, "Jacobi failed to converge");
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.at(p, q).clone();
                let r = apq.abs();
                if r <= eps {
                    continue;
                }
                let app = a.at(p, p).re.clone();
                let aqq = a.at(q, q).re.clone();
                // Phase of the pivot and rotation parameters annihilating it.
                let w = Cx::new(
                    Float::with_val(prec, &apq.re / &r),
                    Float::with_val(prec, &apq.im / &r),
                );
                let tau = Float::with_val(prec, Float::with_val(prec, &aqq - &app) / (r.clone() * 2u32));
                let t = if tau.is_zero() {
                    Float::with_val(prec, 1)
                } else {
                    let abs_tau = tau.clone().abs();
                    let root = Float::with_val(prec, tau.clone().square() + 1u32).sqrt();
                    let mag = Float::with_val(prec, 1) / (abs_tau + root);
                    if tau.is_sign_negative() {
                        mag
                    } else {
                        -mag
                    }
                };
                let c = (Float::with_val(prec, t.clone().square() + 1u32))
                    .sqrt()
                    .recip();
                let s = Float::with_val(prec, &t * &c);
                let sw = w.scale_f(&s); // s·e^{iφ}
                let swc = w.conj().scale_f(&s); // s·e^{−iφ}

                // Column update: col_p ← c·col_p + s·conj(w)·col_q,
                //                col_q ← −s·w·col_p + c·col_q.
                for i in 0..n {
                    let aip = a.at(i, p).clone();
                    let aiq = a.at(i, q).clone();
                    *a.at_mut(i, p) = aip.scale_f(&c).add(&aiq.mul(&swc));
                    *a.at_mut(i, q) = aiq.scale_f(&c).sub(&aip.mul(&sw));
                }
                // Row update with the adjoint factor.
                for j in 0..n {
                    let apj = a.at(p, j).clone();
                    let aqj = a.at(q, j).clone();
                    *a.at_mut(p, j) = apj.scale_f(&c).add(&aqj.mul(&sw));
                    *a.at_mut(q, j) = aqj.scale_f(&c).sub(&apj.mul(&swc));
                }
                // Accumulate the eigenvector basis like the columns.
                for i in 0..n {
                    let vip = v.at(i, p).clone();
                    let viq = v.at(i, q).clone();
                    *v.at_mut(i, p) = vip.scale_f(&c).add(&viq.mul(&swc));
                    *v.at_mut(i, q) = viq.scale_f(&c).sub(&vip.mul(&sw));
                }
            }
        }
    }
    let mut pairs: Vec<(usize, Float)> = (0..n).map(|i| (i, a.at(i, i).re.clone())).collect();
    pairs.sort_by(|x, y| x.1.partial_cmp(&y.1).unwrap());
    let vals: Vec<Float> = pairs.iter().map(|(_, v)| v.clone()).collect();
    let mut vecs = CMat::zeros(prec, n, n);
    for (new_j, (old_j, _)) in pairs.iter().enumerate() {
        for i in 0..n {
            *vecs.at_mut(i, new_j) = v.at(i, *old_j).clone();
        }
    }
    (vals, vecs)
}
