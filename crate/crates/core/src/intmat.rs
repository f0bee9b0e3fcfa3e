//! Square integer matrices (n = 2, 3) with exact determinants, unimodular
//! completion of primitive rows, and matrices over `Q[theta]` for symbolic
//! coset reductions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{DomainError, Result};
use crate::exact::{QTheta, TorusElem};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    e: Vec<BigInt>,
    det: BigInt,
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j).to_string()).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

fn det_general(n: usize, e: &[BigInt]) -> BigInt {
    match n {
        1 => e[0].clone(),
        2 => &e[0] * &e[3] - &e[1] * &e[2],
        3 => {
            let m = |i: usize, j: usize| &e[3 * i + j];
            m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1))
                - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
                + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
        }
        _ => panic!("unsupported size {n}"),
    }
}

impl IntMatrix {
    pub fn new(n: usize, entries: Vec<BigInt>) -> Result<Self> {
        if !(1..=3).contains(&n) || entries.len() != n * n {
            return Err(DomainError::InvalidInput(format!(
                "expected {n}x{n} entries"
            )));
        }
        let det = det_general(n, &entries);
        Ok(IntMatrix { n, e: entries, det })
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let n = rows.len();
        let mut e = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n);
            for &x in *r {
                e.push(BigInt::from(x));
            }
        }
        IntMatrix::new(n, e).unwrap()
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![BigInt::zero(); n * n];
        for i in 0..n {
            e[n * i + i] = BigInt::one();
        }
        IntMatrix::new(n, e).unwrap()
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> &BigInt {
        &self.e[self.n * i + j]
    }

    pub fn det(&self) -> &BigInt {
        &self.det
    }

    pub fn row(&self, i: usize) -> Vec<BigInt> {
        (0..self.n).map(|j| self.at(i, j).clone()).collect()
    }

    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut e = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    e[n * i + j] += a * rhs.at(k, j);
                }
            }
        }
        IntMatrix::new(n, e).unwrap()
    }

    pub fn transpose(&self) -> IntMatrix {
        let n = self.n;
        let mut e = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                e[n * j + i] = self.at(i, j).clone();
            }
        }
        IntMatrix::new(n, e).unwrap()
    }

    /// Inverse of a determinant-one matrix (the adjugate).
    pub fn inverse_unimodular(&self) -> Result<IntMatrix> {
        if !self.det.is_one() {
            return Err(DomainError::NotUnimodular(self.det.to_string()));
        }
        let n = self.n;
        let adj = match n {
            1 => vec![BigInt::one()],
            2 => vec![
                self.at(1, 1).clone(),
                -self.at(0, 1),
                -self.at(1, 0),
                self.at(0, 0).clone(),
            ],
            3 => {
                let m = |i: usize, j: usize| self.at(i, j);
                let cof = |i: usize, j: usize| {
                    let (r1, r2) = match i {
                        0 => (1, 2),
                        1 => (0, 2),
                        _ => (0, 1),
                    };
                    let (c1, c2) = match j {
                        0 => (1, 2),
                        1 => (0, 2),
                        _ => (0, 1),
                    };
                    let minor = m(r1, c1) * m(r2, c2) - m(r1, c2) * m(r2, c1);
                    if (i + j) % 2 == 0 {
                        minor
                    } else {
                        -minor
                    }
                };
                // adjugate = transpose of cofactor matrix
                let mut a = vec![BigInt::zero(); 9];
                for i in 0..3 {
                    for j in 0..3 {
                        a[3 * j + i] = cof(i, j);
                    }
                }
                a
            }
            _ => unreachable!(),
        };
        IntMatrix::new(n, adj)
    }

    pub fn neg_row(&self, i: usize) -> IntMatrix {
        let mut e = self.e.clone();
        for j in 0..self.n {
            e[self.n * i + j] = -&e[self.n * i + j];
        }
        IntMatrix::new(self.n, e).unwrap()
    }

    /// Apply to a vector of torus elements (left action, mod 1 per entry).
    pub fn act_torus(&self, v: &[TorusElem]) -> Vec<TorusElem> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = TorusElem::zero();
                for j in 0..self.n {
                    acc = acc.add(&v[j].mul_int(self.at(i, j)));
                }
                acc
            })
            .collect()
    }

    pub fn act_qtheta(&self, v: &[QTheta]) -> Vec<QTheta> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| {
                let mut acc = QTheta::zero();
                for j in 0..self.n {
                    let c = QTheta::from_rational(BigRational::from_integer(self.at(i, j).clone()));
                    acc = &acc + &(&c * &v[j]);
                }
                acc
            })
            .collect()
    }

    pub fn to_qmat(&self) -> QMat {
        QMat::new(
            self.n,
            self.e
                .iter()
                .map(|x| QTheta::from_rational(BigRational::from_integer(x.clone())))
                .collect(),
        )
    }
}

impl Serialize for IntMatrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use num_traits::ToPrimitive;
        // row-major integer arrays; entries beyond i64 fall back to strings
        let rows: Vec<Vec<serde_json::Value>> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let e = self.at(i, j);
                        match e.to_i64() {
                            Some(x) => serde_json::Value::from(x),
                            None => serde_json::Value::from(e.to_string()),
                        }
                    })
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<serde_json::Value>> = Vec::deserialize(deserializer)?;
        let n = rows.len();
        let mut e = Vec::with_capacity(n * n);
        for r in &rows {
            if r.len() != n {
                return Err(serde::de::Error::custom("matrix is not square"));
            }
            for v in r {
                let x: BigInt = match v {
                    serde_json::Value::Number(num) => BigInt::from(
                        num.as_i64()
                            .ok_or_else(|| serde::de::Error::custom("non-integer entry"))?,
                    ),
                    serde_json::Value::String(s) => s
                        .parse()
                        .map_err(|_| serde::de::Error::custom("bad integer string"))?,
                    _ => return Err(serde::de::Error::custom("bad matrix entry")),
                };
                e.push(x);
            }
        }
        IntMatrix::new(n, e).map_err(serde::de::Error::custom)
    }
}

/// Extend a primitive integer vector to a matrix in SL_n(Z) whose row
/// `slot` is that vector. Column operations with determinant-one shears
/// reduce the row to a unit vector; their inverses accumulate the result.
pub fn extend_to_unimodular(row: &[BigInt], slot: usize) -> Result<IntMatrix> {
    let n = row.len();
    if !(2..=3).contains(&n) || slot >= n {
        return Err(DomainError::InvalidInput("need a 2- or 3-vector and a valid slot".into()));
    }
    let mut g = BigInt::zero();
    for x in row {
        g = num_integer::Integer::gcd(&g, x);
    }
    if !g.is_one() {
        return Err(DomainError::NotPrimitive(format!("gcd is {g}")));
    }
    // Fast path: already a unit vector with +1 in the slot.
    let is_unit = row
        .iter()
        .enumerate()
        .all(|(j, x)| if j == slot { x.is_one() } else { x.is_zero() });
    if is_unit {
        return Ok(IntMatrix::identity(n));
    }

    let mut a: Vec<BigInt> = row.to_vec();
    // minv accumulates the inverse of the applied column operations, so that
    // at the end the original row equals e_0^T * minv.
    let mut minv = IntMatrix::identity(n);

    // a <- a * shear(i, j, c) adds c * a_i to a_j. The inverse operation is
    // shear(i, j, -c) applied on the left of minv.
    let shear = |m: &IntMatrix, i: usize, j: usize, c: &BigInt| -> IntMatrix {
        let mut s = IntMatrix::identity(n);
        s.e[n * i + j] = c.clone();
        s.det = BigInt::one();
        s.mul(m)
    };

    // Reduce all entries beyond index 0 to zero with a Euclidean loop.
    loop {
        // Pick the pivot: smallest nonzero absolute value.
        let mut pivot: Option<usize> = None;
        for (idx, x) in a.iter().enumerate() {
            if !x.is_zero() && pivot.map_or(true, |p| x.magnitude() < a[p].magnitude()) {
                pivot = Some(idx);
            }
        }
        let p = pivot.expect("primitive vector cannot vanish");
        let mut done = true;
        for j in 0..n {
            if j == p || a[j].is_zero() {
                continue;
            }
            done = false;
            let q = num_integer::Integer::div_floor(&a[j], &a[p]);
            // a_j <- a_j - q a_p, i.e. column op adding -q * col_j to ... in
            // row form: a * (I - q E_{p j}).
            a[j] = &a[j] - &q * &a[p];
            minv = shear(&minv, p, j, &q);
        }
        if done {
            break;
        }
    }
    // Single nonzero entry +-1 at position p; move it to index 0.
    let p = a.iter().position(|x| !x.is_zero()).unwrap();
    if p != 0 {
        // Swap columns 0 and p with determinant +1: c0 <- cp, cp <- -c0.
        let mut s = IntMatrix::identity(n);
        s.e[0] = BigInt::zero();
        s.e[n * p + p] = BigInt::zero();
        s.e[n * p] = BigInt::one();
        s.e[p] = -BigInt::one();
        // a * s : new a_0 = a_p, new a_p = -a_0 = 0.
        let new0 = a[p].clone();
        a[p] = -&a[0];
        a[0] = new0;
        // s has det 1; its inverse is its transpose sign pattern.
        let sinv = IntMatrix::new(
            n,
            s.inverse_unimodular().unwrap().e.clone(),
        )
        .unwrap();
        minv = sinv.mul(&minv);
    }
    if a[0].is_negative() {
        // a * diag(-1, -1, 1...) to flip sign keeping det 1: negate col 0
        // and col 1.
        let mut d = IntMatrix::identity(n);
        d.e[0] = -BigInt::one();
        d.e[n + 1] = -BigInt::one();
        let dinv = d.clone();
        a[0] = -&a[0];
        minv = dinv.mul(&minv);
    }
    debug_assert!(a[0].is_one() && a[1..].iter().all(|x| x.is_zero()));
    debug_assert!(minv.det().is_one());
    debug_assert_eq!(&minv.row(0), row);

    // minv has the target row at index 0; rotate it into `slot` with a
    // determinant-one row permutation.
    let out = match (n, slot) {
        (_, 0) => minv,
        (2, 1) => IntMatrix::from_i64(&[&[0, -1], &[1, 0]]).mul(&minv),
        (3, 1) => IntMatrix::from_i64(&[&[0, 0, 1], &[1, 0, 0], &[0, 1, 0]]).mul(&minv),
        (3, 2) => IntMatrix::from_i64(&[&[0, 1, 0], &[0, 0, 1], &[1, 0, 0]]).mul(&minv),
        _ => unreachable!(),
    };
    debug_assert!(out.det().is_one());
    debug_assert_eq!(&out.row(slot), row);
    Ok(out)
}

/// Matrix with entries in `Q[theta]`. Coset reductions multiply these by
/// integer matrices on the left and read the result exactly.
#[derive(Clone, PartialEq, Eq)]
pub struct QMat {
    n: usize,
    e: Vec<QTheta>,
}

impl fmt::Debug for QMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| format!("{}", self.at(i, j))).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

impl QMat {
    pub fn new(n: usize, e: Vec<QTheta>) -> Self {
        assert_eq!(e.len(), n * n);
        QMat { n, e }
    }

    pub fn identity(n: usize) -> Self {
        let mut e = vec![QTheta::zero(); n * n];
        for i in 0..n {
            e[n * i + i] = QTheta::one();
        }
        QMat::new(n, e)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn at(&self, i: usize, j: usize) -> &QTheta {
        &self.e[self.n * i + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: QTheta) {
        self.e[self.n * i + j] = v;
    }

    pub fn mul(&self, rhs: &QMat) -> QMat {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut e = vec![QTheta::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    e[n * i + j] = &e[n * i + j] + &(a * rhs.at(k, j));
                }
            }
        }
        QMat::new(n, e)
    }

    pub fn det(&self) -> QTheta {
        let m = |i: usize, j: usize| self.at(i, j);
        match self.n {
            1 => m(0, 0).clone(),
            2 => &(m(0, 0) * m(1, 1)) - &(m(0, 1) * m(1, 0)),
            3 => {
                let t1 = m(0, 0) * &(&(m(1, 1) * m(2, 2)) - &(m(1, 2) * m(2, 1)));
                let t2 = m(0, 1) * &(&(m(1, 0) * m(2, 2)) - &(m(1, 2) * m(2, 0)));
                let t3 = m(0, 2) * &(&(m(1, 0) * m(2, 1)) - &(m(1, 1) * m(2, 0)));
                &(&t1 - &t2) + &t3
            }
            _ => panic!("unsupported size"),
        }
    }

    /// Inverse assuming det = 1 exactly (the adjugate).
    pub fn inverse_det_one(&self) -> Result<QMat> {
        if self.det() != QTheta::one() {
            return Err(DomainError::NotUnimodular(format!("{}", self.det())));
        }
        let n = self.n;
        let m = |i: usize, j: usize| self.at(i, j);
        let e = match n {
            2 => vec![
                m(1, 1).clone(),
                -m(0, 1),
                -m(1, 0),
                m(0, 0).clone(),
            ],
            3 => {
                let cof = |i: usize, j: usize| {
                    let (r1, r2) = match i {
                        0 => (1, 2),
                        1 => (0, 2),
                        _ => (0, 1),
                    };
                    let (c1, c2) = match j {
                        0 => (1, 2),
                        1 => (0, 2),
                        _ => (0, 1),
                    };
                    let minor = &(m(r1, c1) * m(r2, c2)) - &(m(r1, c2) * m(r2, c1));
                    if (i + j) % 2 == 0 {
                        minor
                    } else {
                        -&minor
                    }
                };
                let mut a = vec![QTheta::zero(); 9];
                for i in 0..3 {
                    for j in 0..3 {
                        a[3 * j + i] = cof(i, j);
                    }
                }
                a
            }
            _ => return Err(DomainError::InvalidInput("unsupported size".into())),
        };
        Ok(QMat::new(n, e))
    }

    pub fn row_qtheta(&self, i: usize) -> Vec<QTheta> {
        (0..self.n).map(|j| self.at(i, j).clone()).collect()
    }

    pub fn col_qtheta(&self, j: usize) -> Vec<QTheta> {
        (0..self.n).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn is_upper_unitriangular(&self) -> bool {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let v = self.at(i, j);
                if i == j && v != &QTheta::one() {
                    return false;
                }
                if i > j && !v.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    pub fn eval_f64(&self, theta: f64) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j).eval_f64(theta)).collect())
            .collect()
    }
}

impl Serialize for QMat {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<&QTheta>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.at(i, j)).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for QMat {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<QTheta>> = Vec::deserialize(deserializer)?;
        let n = rows.len();
        let mut e = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(serde::de::Error::custom("matrix is not square"));
            }
            e.extend(r);
        }
        Ok(QMat::new(n, e))
    }
}
