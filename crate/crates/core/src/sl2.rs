//! The diagonal action of SL2(Z) on R^2 x T^2 in `Q[theta]` coordinates:
//! quasi-orbit classification, canonical quasi-orbit equality, the
//! sequence-limit oracles for the supported profile grammar, the odd-m
//! unitriangular witness identity, and brute-force cross-check oracles.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{DomainError, Result};
use crate::exact::{
    rational_direction, sign, QRatio, QTheta, ThetaEnclosure, TorusElem,
};
use crate::intmat::{extend_to_unimodular, IntMatrix};

/// Point of R^2 x T^2 with `Q[theta]` coordinates of degree <= 1.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SL2Point {
    pub v: [QTheta; 2],
    pub w: [TorusElem; 2],
}

impl SL2Point {
    pub fn new(v: [QTheta; 2], w: [TorusElem; 2]) -> Self {
        SL2Point { v, w }
    }

    pub fn apply(&self, g: &IntMatrix) -> SL2Point {
        assert_eq!(g.size(), 2);
        let v = g.act_qtheta(&self.v);
        let w = g.act_torus(&self.w);
        SL2Point {
            v: [v[0].clone(), v[1].clone()],
            w: [w[0].clone(), w[1].clone()],
        }
    }
}

/// Canonical quasi-orbit of a point with nonzero v.
///
/// Torsion(m, t): v has irrational direction and the fiber decomposes as
/// a torsion element of order m times p(t v); in the `Q[theta]` coordinate
/// model the shift t is forced to be rational (see `torsion_solve`).
///
/// RationalDir(s, b, a_class): v = s * d for a primitive integer vector d
/// and s > 0; the fiber data is reduced to the e_1 frame, where the
/// residual stabilizer acts by (a, b) -> (a + k b, b), and a is then
/// canonicalized modulo the closure of the subgroup generated by b.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SL2QuasiOrbit {
    Dense,
    Torsion {
        #[serde(with = "crate::sl2::bigint_string")]
        m: BigInt,
        #[serde(with = "crate::sl2::rational_string")]
        t: BigRational,
    },
    RationalDir {
        s: QTheta,
        b: TorusElem,
        #[serde(rename = "aClass")]
        a_class: TorusElem,
    },
}

pub(crate) mod bigint_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            S(String),
            I(i64),
        }
        match Raw::deserialize(d)? {
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::I(i) => Ok(BigInt::from(i)),
        }
    }
}

pub(crate) mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::exact::format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        crate::exact::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Solve u - t v in Q^2 for the unique shift t, for v of irrational
/// direction. Writing v_i = p_i + q_i theta and lifting w to
/// u_i = a_i + b_i theta, a real solution t exists iff the theta parts
/// match proportionally, and then t = b_i / q_i is rational: any real t
/// with u - t v rational forces t to be a ratio of two `Q[theta]` elements
/// whose cross products vanish by transcendence of theta.
/// Returns (order of the torsion remainder, t).
pub fn torsion_solve(v: &[QTheta; 2], w: &[TorusElem; 2]) -> Option<(BigInt, BigRational)> {
    let q1 = v[0].theta_part();
    let q2 = v[1].theta_part();
    let b1 = w[0].theta_part().clone();
    let b2 = w[1].theta_part().clone();
    let t = if !q1.is_zero() {
        let t = &b1 / &q1;
        if b2 != &t * &q2 {
            return None;
        }
        t
    } else {
        // Irrational direction rules out q1 = q2 = 0.
        if !b1.is_zero() {
            return None;
        }
        &b2 / &q2
    };
    let r1 = w[0].rational_part() - &t * v[0].constant_part();
    let r2 = w[1].rational_part() - &t * v[1].constant_part();
    let ord = TorusElem::from_angle(r1)
        .order()
        .unwrap()
        .lcm(&TorusElem::from_angle(r2).order().unwrap());
    Some((ord, t))
}

/// 2x2 unimodular matrix mapping the primitive integer column d to e_1.
fn reduce_direction_to_e1(d: &[BigInt]) -> Result<IntMatrix> {
    // A matrix with first row d has transpose with first column d; its
    // inverse sends d to e_1.
    let with_col = extend_to_unimodular(d, 0)?.transpose();
    with_col.inverse_unimodular()
}

fn mod_fraction(a: &BigRational, modulus: &BigRational) -> BigRational {
    let q = (a / modulus).floor();
    a - q * modulus
}

/// Canonical fiber data over the e_1 frame: reduce a modulo the closure
/// of the subgroup generated by b. For b of finite order m that subgroup
/// is (1/m)Z; for irrational b its closure is the whole circle and a
/// carries no information.
fn canonicalize_fiber(a: &TorusElem, b: &TorusElem) -> TorusElem {
    match b.order() {
        Some(m) => {
            let step = BigRational::new(BigInt::one(), m);
            TorusElem::new(mod_fraction(a.rational_part(), &step), a.theta_part().clone())
        }
        None => TorusElem::zero(),
    }
}

/// Classify a point into its canonical quasi-orbit.
pub fn sl2_classify(p: &SL2Point, enc: &ThetaEnclosure) -> Result<SL2QuasiOrbit> {
    if p.v[0].is_zero() && p.v[1].is_zero() {
        return Err(DomainError::ZeroVector);
    }
    match rational_direction(&p.v)? {
        None => match torsion_solve(&p.v, &p.w) {
            Some((m, t)) => Ok(SL2QuasiOrbit::Torsion { m, t }),
            None => Ok(SL2QuasiOrbit::Dense),
        },
        Some(mut d) => {
            // v = s * d with s > 0 after possibly flipping d.
            let i = if !d[0].is_zero() { 0 } else { 1 };
            let mut s = p.v[i]
                .scale(&BigRational::new(BigInt::one(), d[i].clone()));
            if sign(&s, enc) < 0 {
                d = d.iter().map(|x| -x).collect();
                s = -&s;
            }
            let g = reduce_direction_to_e1(&d)?;
            let w = g.act_torus(&p.w);
            let b = w[1].clone();
            let a_class = canonicalize_fiber(&w[0], &b);
            Ok(SL2QuasiOrbit::RationalDir { s, b, a_class })
        }
    }
}

/// Equality of quasi-orbits as canonical values.
pub fn sl2_quasiorbit_eq(p1: &SL2Point, p2: &SL2Point, enc: &ThetaEnclosure) -> Result<bool> {
    Ok(sl2_classify(p1, enc)? == sl2_classify(p2, enc)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OrderProfile {
    Const {
        #[serde(with = "crate::sl2::bigint_string")]
        m: BigInt,
    },
    ToInfinity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ShiftProfile {
    To {
        #[serde(with = "crate::sl2::rational_string")]
        t: BigRational,
    },
    AbsToInfinity,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ScaleLimit {
    ToZero,
    ToPositive { s: QTheta },
    ToInfinity,
}

/// Limit data for the fiber first coordinate of a ScaledE1 sequence
/// (s_n e_1, (a_n, b_n)): a_n -> a together with the behaviour of the
/// ratio (a_n - a) / s_n.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AProfile {
    /// a has finite order and (a_n - a)/s_n converges to `ratio`.
    RatioFinite { a: TorusElem, ratio: QRatio },
    /// a has finite order and |a_n - a|/s_n escapes to infinity.
    RatioToInfinity { a: TorusElem },
    /// the limit a itself has infinite order.
    LimitInfiniteOrder { a: TorusElem },
}

/// Symbolic sequence profiles matching the two supported hypothesis shapes,
/// plus the constant sequence at a point with dense orbit.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SL2SeqProfile {
    /// (v, z_n p(t_n v)) for a fixed v of irrational direction.
    FixedIrrationalV {
        v: [QTheta; 2],
        order: OrderProfile,
        shift: ShiftProfile,
    },
    /// (s_n e_1, (a_n, b_n)).
    ScaledE1 {
        scale: ScaleLimit,
        #[serde(rename = "orderB")]
        order_b: OrderProfile,
        #[serde(rename = "aProfile", default, skip_serializing_if = "Option::is_none")]
        a_profile: Option<AProfile>,
    },
    /// Constant sequence at a point with dense orbit.
    ConstDense { v: [QTheta; 2] },
}

/// Decide membership of a target quasi-orbit in the closure
/// {(v', z' p(shift v')) : ord z' = m, v' in R^2}. Torsion classes must
/// match (m, shift) exactly. A RationalDir class (sigma, b, a) is attained
/// iff b has finite order d dividing the available torsion, the offset
/// a - shift*sigma is a rational angle c, and some coset representative
/// c + j/d has lcm(ord, d) = m.
fn torsion_closure_accepts(m: &BigInt, shift: &QRatio, target: &SL2QuasiOrbit) -> bool {
    match target {
        SL2QuasiOrbit::Dense => false,
        SL2QuasiOrbit::Torsion { m: m2, t } => {
            m2 == m && shift.eq(&QRatio::from_rational(t.clone()))
        }
        SL2QuasiOrbit::RationalDir { s, b, a_class } => {
            let d2 = match b.order() {
                Some(d) => d,
                None => return false,
            };
            let sigma = QRatio::from_qtheta(s.clone());
            let offset = QRatio::from_qtheta(a_class.angle()).sub(&shift.mul(&sigma));
            let c = match offset.as_rational() {
                Some(c) => c,
                None => return false,
            };
            let mut j = BigInt::zero();
            while j < d2 {
                let cand =
                    mod_fraction(&(&c + BigRational::new(j.clone(), d2.clone())), &BigRational::one());
                if cand.denom().lcm(&d2) == *m {
                    return true;
                }
                j += 1;
            }
            false
        }
    }
}

/// Sequence-limit oracle. Returns whether the target quasi-orbit is among
/// the limit points of the profiled sequence.
pub fn sl2_limit(profile: &SL2SeqProfile, target: &SL2QuasiOrbit) -> Result<bool> {
    match profile {
        SL2SeqProfile::ConstDense { v } => {
            if rational_direction(v)?.is_some() {
                return Err(DomainError::UnsupportedProfile(
                    "ConstDense requires an irrational-direction v".into(),
                ));
            }
            // The closure of a dense orbit is everything.
            Ok(true)
        }
        SL2SeqProfile::FixedIrrationalV { v, order, shift } => {
            if rational_direction(v)?.is_some() {
                return Err(DomainError::UnsupportedProfile(
                    "FixedIrrationalV requires an irrational-direction v".into(),
                ));
            }
            match (order, shift) {
                (OrderProfile::ToInfinity, _) | (_, ShiftProfile::AbsToInfinity) => Ok(true),
                (OrderProfile::Const { m }, ShiftProfile::To { t }) => {
                    if m < &BigInt::one() {
                        return Err(DomainError::UnsupportedProfile("order must be >= 1".into()));
                    }
                    Ok(torsion_closure_accepts(
                        m,
                        &QRatio::from_rational(t.clone()),
                        target,
                    ))
                }
            }
        }
        SL2SeqProfile::ScaledE1 {
            scale,
            order_b,
            a_profile,
        } => match scale {
            ScaleLimit::ToInfinity => Ok(false),
            ScaleLimit::ToPositive { .. } => Err(DomainError::PartialKnowledge(
                "cluster sets for s_n -> s > 0 are not described".into(),
            )),
            ScaleLimit::ToZero => match order_b {
                OrderProfile::ToInfinity => Ok(true),
                OrderProfile::Const { m } => {
                    let ap = a_profile.as_ref().ok_or_else(|| {
                        DomainError::UnsupportedProfile(
                            "constant orderB needs aProfile data".into(),
                        )
                    })?;
                    match ap {
                        AProfile::LimitInfiniteOrder { a } => {
                            if a.order().is_some() {
                                return Err(DomainError::UnsupportedProfile(
                                    "LimitInfiniteOrder needs an infinite-order a".into(),
                                ));
                            }
                            Ok(true)
                        }
                        AProfile::RatioToInfinity { a } => {
                            if a.order().is_none() {
                                return Err(DomainError::UnsupportedProfile(
                                    "RatioToInfinity needs a finite-order a".into(),
                                ));
                            }
                            Ok(true)
                        }
                        AProfile::RatioFinite { a, ratio } => {
                            let k = a.order().ok_or_else(|| {
                                DomainError::UnsupportedProfile(
                                    "RatioFinite needs a finite-order a".into(),
                                )
                            })?;
                            Ok(torsion_closure_accepts(&k.lcm(m), ratio, target))
                        }
                    }
                }
            },
        },
    }
}

/// Witness for the odd-m diagonal identity: with m = 2n+1,
/// gamma = [[m, n], [2, 1]] and u = [[1, -n t/(m s)], [0, 1]] satisfy
/// gamma diag(s,t) u = [[m s, 0], [2 s, t/m]]. All four matrices of the
/// identity are computed and compared symbolically over Frac(`Q[theta]`).
#[derive(Clone, Debug, Serialize)]
pub struct ModdWitness {
    pub gamma: IntMatrix,
    /// row-major 2x2 over Frac(`Q[theta]`)
    pub u: Vec<QRatio>,
    pub product: Vec<QRatio>,
}

pub fn modd_witness(s: &QTheta, t: &QTheta, m: &BigInt) -> Result<ModdWitness> {
    if m.is_even() {
        return Err(DomainError::EvenM);
    }
    if s.is_zero() || t.is_zero() {
        return Err(DomainError::InvalidInput("s and t must be nonzero".into()));
    }
    let n: BigInt = (m - BigInt::one()) / BigInt::from(2);
    let gamma = IntMatrix::new(
        2,
        vec![m.clone(), n.clone(), BigInt::from(2), BigInt::one()],
    )?;
    let qs = QRatio::from_qtheta(s.clone());
    let qt = QRatio::from_qtheta(t.clone());
    let mq = QRatio::from_rational(BigRational::from_integer(m.clone()));
    let nq = QRatio::from_rational(BigRational::from_integer(n.clone()));
    let corner = nq.mul(&qt).div(&mq.mul(&qs))?.neg();
    let one = QRatio::from_rational(BigRational::one());
    let zero = QRatio::zero();
    let u = vec![one.clone(), corner, zero.clone(), one.clone()];

    // gamma * diag(s, t) * u
    let g = |i: usize, j: usize| {
        QRatio::from_rational(BigRational::from_integer(gamma.at(i, j).clone()))
    };
    let diag = [qs.clone(), qt.clone()];
    let mut prod = vec![zero.clone(); 4];
    for i in 0..2 {
        for j in 0..2 {
            let mut acc = QRatio::zero();
            for k in 0..2 {
                acc = acc.add(&g(i, k).mul(&diag[k]).mul(&u[2 * k + j]));
            }
            prod[2 * i + j] = acc;
        }
    }
    let expected = [
        mq.mul(&qs),
        QRatio::zero(),
        QRatio::from_rational(BigRational::from_integer(BigInt::from(2))).mul(&qs),
        qt.div(&mq)?,
    ];
    for (got, want) in prod.iter().zip(expected.iter()) {
        if !got.eq(want) {
            return Err(DomainError::NumericalFailure(
                "witness identity failed symbolic verification".into(),
            ));
        }
    }
    Ok(ModdWitness {
        gamma,
        u,
        product: prod,
    })
}

/// Brute-force transitivity of SL2(Z) on the order-n elements of T^2:
/// close the set {(i, j) mod n : gcd(i, j, n) = 1} under the standard
/// generators and their inverses starting from (1, 0) and compare counts.
pub fn sl2_torsion_transitivity(n: u32, bound: u32) -> Result<bool> {
    if n == 0 {
        return Err(DomainError::InvalidInput("n must be positive".into()));
    }
    if n > bound {
        return Err(DomainError::BoundExceeded(format!("n = {n} exceeds bound {bound}")));
    }
    let n = n as i64;
    let total = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|(i, j)| i.gcd(j).gcd(&n) == 1)
        .count();
    let gens: [[i64; 4]; 4] = [
        [0, -1, 1, 0],  // S
        [0, 1, -1, 0],  // S^-1
        [1, 1, 0, 1],   // T
        [1, -1, 0, 1],  // T^-1
    ];
    let start = ((1 % n + n) % n, 0);
    let mut seen = HashSet::new();
    seen.insert(start);
    let mut stack = vec![start];
    while let Some((i, j)) = stack.pop() {
        for g in &gens {
            let ni = ((g[0] * i + g[1] * j) % n + n) % n;
            let nj = ((g[2] * i + g[3] * j) % n + n) % n;
            if seen.insert((ni, nj)) {
                stack.push((ni, nj));
            }
        }
    }
    Ok(seen.len() == total)
}

/// All distinct group elements of word length <= len in S, T, S^-1, T^-1.
fn ball(len: u32) -> Vec<IntMatrix> {
    let gens = [
        IntMatrix::from_i64(&[&[0, -1], &[1, 0]]),
        IntMatrix::from_i64(&[&[0, 1], &[-1, 0]]),
        IntMatrix::from_i64(&[&[1, 1], &[0, 1]]),
        IntMatrix::from_i64(&[&[1, -1], &[0, 1]]),
    ];
    let key = |m: &IntMatrix| {
        [
            m.at(0, 0).clone(),
            m.at(0, 1).clone(),
            m.at(1, 0).clone(),
            m.at(1, 1).clone(),
        ]
    };
    let mut seen = HashSet::new();
    let mut frontier = vec![IntMatrix::identity(2)];
    let mut all = vec![IntMatrix::identity(2)];
    seen.insert(key(&all[0]));
    for _ in 0..len {
        let mut next = Vec::new();
        for m in &frontier {
            for g in &gens {
                let p = g.mul(m);
                if seen.insert(key(&p)) {
                    next.push(p.clone());
                    all.push(p);
                }
            }
        }
        frontier = next;
    }
    all
}

/// Float images of the point under all words of length <= word_len in the
/// standard generators, evaluated at the enclosure midpoint.
pub fn sl2_orbit_sample(
    p: &SL2Point,
    word_len: u32,
    enc: &ThetaEnclosure,
) -> Result<Vec<([f64; 2], [f64; 2])>> {
    if word_len > 12 {
        return Err(DomainError::BoundExceeded("word length capped at 12".into()));
    }
    let theta = enc.midpoint_f64();
    let mut out = Vec::new();
    for g in ball(word_len) {
        let q = p.apply(&g);
        out.push((
            [q.v[0].eval_f64(theta), q.v[1].eval_f64(theta)],
            [q.w[0].eval_f64(theta), q.w[1].eval_f64(theta)],
        ));
    }
    Ok(out)
}

/// Random elements of SL2(Z) with entries bounded by `max_entry`, built as
/// words in the generators with rejection on the bound.
pub fn random_sl2(rng: &mut impl rand::Rng, max_entry: i64) -> IntMatrix {
    let gens = [
        IntMatrix::from_i64(&[&[0, -1], &[1, 0]]),
        IntMatrix::from_i64(&[&[1, 1], &[0, 1]]),
        IntMatrix::from_i64(&[&[1, -1], &[0, 1]]),
    ];
    let mut m = IntMatrix::identity(2);
    for _ in 0..12 {
        let g = &gens[rng.gen_range(0..gens.len())];
        let cand = g.mul(&m);
        let bound = BigInt::from(max_entry);
        let ok = (0..2).all(|i| {
            (0..2).all(|j| cand.at(i, j).magnitude() <= bound.magnitude())
        });
        if ok {
            m = cand;
        }
    }
    m
}
