//! The discrete Heisenberg group H3(Z): normal-form group law, the (z,a,b)
//! parameterization of its primitive ideal space, finite-dimensional
//! irreducible representations on clock-and-shift generators, restriction
//! hulls to the two Z^2 subgroups, and the sequence-convergence criterion.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DomainError, Result};
use crate::exact::{format_rational, rat_int, TorusElem};
use crate::intmat::IntMatrix;

/// Group element in normal form X^x Y^y Z^z. As an upper unitriangular
/// integer matrix this is [[1, y, z], [0, 1, x], [0, 0, 1]].
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct HeisElem {
    pub x: i64,
    pub y: i64,
    pub z: i64,
}

impl HeisElem {
    pub const fn new(x: i64, y: i64, z: i64) -> Self {
        HeisElem { x, y, z }
    }

    pub const fn identity() -> Self {
        HeisElem { x: 0, y: 0, z: 0 }
    }

    pub const X: HeisElem = HeisElem { x: 1, y: 0, z: 0 };
    pub const Y: HeisElem = HeisElem { x: 0, y: 1, z: 0 };
    pub const Z: HeisElem = HeisElem { x: 0, y: 0, z: 1 };

    pub fn to_matrix(self) -> IntMatrix {
        IntMatrix::from_i64(&[&[1, self.y, self.z], &[0, 1, self.x], &[0, 0, 1]])
    }

    /// Inverse: (x,y,z)^-1 = (-x, -y, xy - z).
    pub fn inverse(self) -> HeisElem {
        HeisElem {
            x: -self.x,
            y: -self.y,
            z: self.x * self.y - self.z,
        }
    }
}

/// Normal-form product: (x,y,e)(x',y',e') = (x+x', y+y', e+e'+y x').
pub fn heis_mul(g: HeisElem, h: HeisElem) -> HeisElem {
    HeisElem {
        x: g.x + h.x,
        y: g.y + h.y,
        z: g.z + h.z + g.y * h.x,
    }
}

/// Try to read an integer matrix as an element of H3(Z).
pub fn heis_from_matrix(m: &IntMatrix) -> Option<HeisElem> {
    if m.size() != 3 {
        return None;
    }
    let one = BigInt::one();
    let zero = BigInt::zero();
    let ok = m.at(0, 0) == &one
        && m.at(1, 1) == &one
        && m.at(2, 2) == &one
        && m.at(1, 0) == &zero
        && m.at(2, 0) == &zero
        && m.at(2, 1) == &zero;
    if !ok {
        return None;
    }
    Some(HeisElem {
        x: m.at(1, 2).to_i64()?,
        y: m.at(0, 1).to_i64()?,
        z: m.at(0, 2).to_i64()?,
    })
}

/// Named subgroups of H3(Z). Gamma1 = <X, Z> (y-exponent zero) and
/// Gamma2 = <Y, Z> (x-exponent zero).
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum NamedSubgroup {
    Gamma1,
    Gamma2,
    Center,
    Full,
    Trivial,
}

impl NamedSubgroup {
    pub fn contains(self, g: HeisElem) -> bool {
        match self {
            NamedSubgroup::Gamma1 => g.y == 0,
            NamedSubgroup::Gamma2 => g.x == 0,
            NamedSubgroup::Center => g.x == 0 && g.y == 0,
            NamedSubgroup::Full => true,
            NamedSubgroup::Trivial => g == HeisElem::identity(),
        }
    }
}

/// Point of Prim C*(H3(Z)): z is the central character value, a and b are
/// the scalar values of X^n and Y^n when n = ord z is finite. For infinite
/// order z the constraint a = b = 0 (trivial angle) is enforced.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HeisPrim {
    z: TorusElem,
    a: TorusElem,
    b: TorusElem,
}

impl HeisPrim {
    pub fn new(z: TorusElem, a: TorusElem, b: TorusElem) -> Result<Self> {
        if !a.is_rational_angle() || !b.is_rational_angle() {
            return Err(DomainError::InvalidInput(
                "a and b must be rational angles".into(),
            ));
        }
        if z.order().is_none() && (a != TorusElem::zero() || b != TorusElem::zero()) {
            return Err(DomainError::InvalidInput(
                "a = b = 1 is forced when ord z is infinite".into(),
            ));
        }
        Ok(HeisPrim { z, a, b })
    }

    pub fn from_angles(z: BigRational, a: BigRational, b: BigRational) -> Result<Self> {
        HeisPrim::new(
            TorusElem::from_angle(z),
            TorusElem::from_angle(a),
            TorusElem::from_angle(b),
        )
    }

    pub fn z(&self) -> &TorusElem {
        &self.z
    }

    pub fn a(&self) -> &TorusElem {
        &self.a
    }

    pub fn b(&self) -> &TorusElem {
        &self.b
    }

    pub fn order_z(&self) -> Option<BigInt> {
        self.z.order()
    }
}

impl Serialize for HeisPrim {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("HeisPrim", 3)?;
        if self.z.is_rational_angle() {
            s.serialize_field("z", &format_rational(self.z.rational_part()))?;
        } else {
            s.serialize_field("z", &self.z)?;
        }
        s.serialize_field("a", &format_rational(self.a.rational_part()))?;
        s.serialize_field("b", &format_rational(self.b.rational_part()))?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for HeisPrim {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum ZRaw {
            Angle(String),
            Full(TorusElem),
        }
        #[derive(Deserialize)]
        struct Raw {
            z: ZRaw,
            a: String,
            b: String,
        }
        let raw = Raw::deserialize(deserializer)?;
        let z = match raw.z {
            ZRaw::Angle(s) => TorusElem::from_angle(
                crate::exact::parse_rational(&s).map_err(serde::de::Error::custom)?,
            ),
            ZRaw::Full(t) => t,
        };
        let a = TorusElem::from_angle(
            crate::exact::parse_rational(&raw.a).map_err(serde::de::Error::custom)?,
        );
        let b = TorusElem::from_angle(
            crate::exact::parse_rational(&raw.b).map_err(serde::de::Error::custom)?,
        );
        HeisPrim::new(z, a, b).map_err(serde::de::Error::custom)
    }
}

/// Finite-dimensional irreducible representation. matZ is the scalar z,
/// matX^n and matY^n are the scalars a and b; the chosen n-th roots are
/// recorded exactly as rational angles.
#[derive(Clone, Debug)]
pub struct HeisIrrep {
    pub n: usize,
    pub mat_x: DMatrix<Complex64>,
    pub mat_y: DMatrix<Complex64>,
    pub mat_z: DMatrix<Complex64>,
    pub root_a: BigRational,
    pub root_b: BigRational,
}

fn unit(angle: &BigRational) -> Complex64 {
    let t = crate::exact::rational_to_f64(angle);
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t)
}

/// Cyclic shift u (u e_j = e_{j+1 mod n}) and clock v = diag(1, z, ..., z^{n-1}).
pub fn clock_and_shift(n: usize, z_angle: &BigRational) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        u[((j + 1) % n, j)] = Complex64::new(1.0, 0.0);
    }
    let mut v = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let ang = z_angle * rat_int(j as i64);
        v[(j, j)] = unit(&ang);
    }
    (u, v)
}

/// Build the irreducible representation for a finite-order parameter point.
/// matX = (principal n-th root of a, offset by the rootChoice-th root of
/// unity) * u, and similarly for matY.
pub fn heis_irrep(p: &HeisPrim, root_choice_a: u32, root_choice_b: u32) -> Result<HeisIrrep> {
    let ord = p.order_z().ok_or(DomainError::InfiniteOrder)?;
    let n = ord
        .to_usize()
        .ok_or_else(|| DomainError::BoundExceeded("order does not fit usize".into()))?;
    if (root_choice_a as usize) >= n || (root_choice_b as usize) >= n {
        return Err(DomainError::InvalidInput(format!(
            "root choices must lie in [0, {n})"
        )));
    }
    let n_rat = rat_int(n as i64);
    let root_a = (p.a.rational_part() + rat_int(root_choice_a as i64)) / &n_rat;
    let root_b = (p.b.rational_part() + rat_int(root_choice_b as i64)) / &n_rat;
    let (u, v) = clock_and_shift(n, p.z.rational_part());
    let mat_x = u.clone() * unit(&root_a);
    let mat_y = v.clone() * unit(&root_b);
    let mat_z = DMatrix::<Complex64>::identity(n, n) * unit(p.z.rational_part());
    Ok(HeisIrrep {
        n,
        mat_x,
        mat_y,
        mat_z,
        root_a,
        root_b,
    })
}

/// Unitary matrix power by squaring; negative exponents go through the
/// adjoint.
pub fn unitary_power(m: &DMatrix<Complex64>, k: i64) -> DMatrix<Complex64> {
    let n = m.nrows();
    if k == 0 {
        return DMatrix::identity(n, n);
    }
    let mut base = if k >= 0 { m.clone() } else { m.adjoint() };
    let mut e = k.unsigned_abs();
    let mut acc: Option<DMatrix<Complex64>> = None;
    while e > 0 {
        if e & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a * &base,
            });
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    acc.unwrap()
}

/// Evaluate the representation on a group element in normal form.
pub fn irrep_apply(r: &HeisIrrep, g: HeisElem) -> DMatrix<Complex64> {
    let mut acc: Option<DMatrix<Complex64>> = None;
    for (m, k) in [(&r.mat_x, g.x), (&r.mat_y, g.y), (&r.mat_z, g.z)] {
        if k == 0 {
            continue;
        }
        let p = unitary_power(m, k);
        acc = Some(match acc {
            None => p,
            Some(a) => a * p,
        });
    }
    acc.unwrap_or_else(|| DMatrix::identity(r.n, r.n))
}

fn max_scalar_deviation(m: &DMatrix<Complex64>) -> (Complex64, f64) {
    let n = m.nrows();
    let mut trace = Complex64::zero();
    for i in 0..n {
        trace += m[(i, i)];
    }
    let s = trace / (n as f64);
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { s } else { Complex64::zero() };
            dev = dev.max((m[(i, j)] - want).norm());
        }
    }
    (s, dev)
}

/// Nearest rational p/q to x in [0,1) with q <= maxden, by Stern-Brocot
/// descent. Used to snap float phases back to exact angles.
pub fn snap_angle(x: f64, maxden: u64) -> BigRational {
    let x = x - x.floor();
    // Walk the Stern-Brocot tree between 0/1 and 1/1.
    let (mut pl, mut ql, mut pr, mut qr) = (0u64, 1u64, 1u64, 1u64);
    let mut best = (0u64, 1u64);
    let mut best_err = x.abs();
    let consider = |p: u64, q: u64, best: &mut (u64, u64), best_err: &mut f64| {
        let err = (x - p as f64 / q as f64).abs();
        if err < *best_err {
            *best_err = err;
            *best = (p, q);
        }
    };
    consider(1, 1, &mut best, &mut best_err);
    loop {
        let pm = pl + pr;
        let qm = ql + qr;
        if qm > maxden {
            break;
        }
        consider(pm, qm, &mut best, &mut best_err);
        if (pm as f64 / qm as f64) < x {
            pl = pm;
            ql = qm;
        } else {
            pr = pm;
            qr = qm;
        }
    }
    let r = BigRational::new(BigInt::from(best.0), BigInt::from(best.1));
    if r == BigRational::one() {
        BigRational::zero()
    } else {
        r
    }
}

/// Recover the (z,a,b) parameters from a representation: read the scalars
/// of matZ, matX^n and matY^n and snap them to rational angles with
/// denominator at most n * ord(z).
pub fn heis_prim_of_irrep(r: &HeisIrrep) -> Result<HeisPrim> {
    let n = r.n;
    let tol = 1e-6;
    let (sz, dz) = max_scalar_deviation(&r.mat_z);
    if dz > tol {
        return Err(DomainError::NotScalar(format!("{dz:.3e}")));
    }
    let xn = irrep_apply(r, HeisElem::new(n as i64, 0, 0));
    let (sa, da) = max_scalar_deviation(&xn);
    if da > tol {
        return Err(DomainError::NotScalar(format!("{da:.3e}")));
    }
    let yn = irrep_apply(r, HeisElem::new(0, n as i64, 0));
    let (sb, db) = max_scalar_deviation(&yn);
    if db > tol {
        return Err(DomainError::NotScalar(format!("{db:.3e}")));
    }
    let phase = |c: Complex64| {
        let t = c.arg() / (2.0 * std::f64::consts::PI);
        t - t.floor()
    };
    let z_angle = snap_angle(phase(sz), n as u64);
    let ord_z = z_angle.denom().to_u64().unwrap_or(u64::MAX);
    let maxden = (n as u64).saturating_mul(ord_z);
    let a_angle = snap_angle(phase(sa), maxden);
    let b_angle = snap_angle(phase(sb), maxden);
    HeisPrim::from_angles(z_angle, a_angle, b_angle)
}

/// Restriction hull of the ideal (z,a,b) to Gamma1 or Gamma2. For finite
/// ord z = n this is the set of character pairs (c, z) with c^n = a
/// (resp. c^n = b); for infinite ord z every (c, z) with c in T occurs.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub enum RestrictionHull {
    /// Exact rational character pairs (c, z).
    Finite(Vec<(TorusElem, TorusElem)>),
    /// All pairs (c, z) with c ranging over the full circle.
    FullCircle { z: TorusElem },
}

pub fn res_hull(p: &HeisPrim, s: NamedSubgroup) -> Result<RestrictionHull> {
    let target = match s {
        NamedSubgroup::Gamma1 => p.a.clone(),
        NamedSubgroup::Gamma2 => p.b.clone(),
        _ => {
            return Err(DomainError::InvalidInput(
                "restriction hull is defined for Gamma1 and Gamma2".into(),
            ))
        }
    };
    match p.order_z() {
        None => Ok(RestrictionHull::FullCircle { z: p.z.clone() }),
        Some(ord) => {
            let n = ord.to_i64().ok_or_else(|| {
                DomainError::BoundExceeded("order does not fit i64".into())
            })?;
            let n_rat = rat_int(n);
            let mut pairs = Vec::with_capacity(n as usize);
            for j in 0..n {
                let c = (target.rational_part() + rat_int(j)) / &n_rat;
                pairs.push((TorusElem::from_angle(c), p.z.clone()));
            }
            pairs.sort_by(|l, r| {
                l.0.rational_part()
                    .cmp(r.0.rational_part())
            });
            Ok(RestrictionHull::Finite(pairs))
        }
    }
}

/// Symbolic limit profile for a sequence (z_n, a_n, b_n) of parameter
/// points. The three supported shapes mirror the convergence criterion:
/// a constant central character with converging a_n, b_n; central orders
/// escaping to infinity; and a constant order different from the order of
/// the limit.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum HeisPrimProfile {
    /// z_n = z constant; a_n -> a, b_n -> b.
    ConstZ {
        z: TorusElem,
        a: TorusElem,
        b: TorusElem,
    },
    /// ord z_n -> infinity while z_n -> z.
    OrderToInfinity { z: TorusElem },
    /// ord z_n = order constant while z_n -> z with ord z != order.
    ConstOrderMismatch { z: TorusElem, order: u64 },
}

/// Convergence in Prim C*(H3(Z)): z_n must converge to the target z, and
/// when ord z = m is finite, every subsequence with ord z_n = m must carry
/// a_n -> a and b_n -> b. Profiles whose orders never equal ord z satisfy
/// that condition vacuously.
pub fn heis_prim_converges(profile: &HeisPrimProfile, target: &HeisPrim) -> Result<bool> {
    match profile {
        HeisPrimProfile::ConstZ { z, a, b } => {
            if z != target.z() {
                return Ok(false);
            }
            match target.order_z() {
                // Infinite-order target: only z_n -> z is required.
                None => Ok(true),
                // The constant z equals the target, so every index has
                // matching order and the a, b limits must agree.
                Some(_) => Ok(a == target.a() && b == target.b()),
            }
        }
        HeisPrimProfile::OrderToInfinity { z } => Ok(z == target.z()),
        HeisPrimProfile::ConstOrderMismatch { z, order } => {
            if z != target.z() {
                return Ok(false);
            }
            match target.order_z() {
                None => Ok(true),
                Some(m) => {
                    if m == BigInt::from(*order) {
                        Err(DomainError::UnsupportedProfile(
                            "constant order equals the target order; use ConstZ with a,b limits"
                                .into(),
                        ))
                    } else {
                        Ok(true)
                    }
                }
            }
        }
    }
}

/// All elements of exact order n on the circle, as angles c/n with
/// gcd(c, n) = 1.
pub fn primitive_angles(n: u64) -> Vec<BigRational> {
    (0..n)
        .filter(|c| num_integer::Integer::gcd(&(*c as i64), &(n as i64)) == 1 || n == 1)
        .map(|c| BigRational::new(BigInt::from(c), BigInt::from(n)))
        .collect()
}
