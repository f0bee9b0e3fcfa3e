//! The primitive spectrum of SL3(Z) x| C0(SL3(R)/U3(R)): point coordinates
//! over the four strata, the induction map from stabilizer characters and
//! ideals, the compact-closed topology on (N x R) u {inf}, the fiber
//! invariant mapping torus points to that space, and the full
//! sequence-convergence oracle with its T0 sanity check.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{DomainError, Result};
use crate::exact::{sign, QRatio, QTheta, ThetaEnclosure, TorusElem};
use crate::heis::{heis_prim_converges, HeisPrim, HeisPrimProfile};
use crate::sl2::{
    sl2_classify, sl2_limit, torsion_solve, AProfile, OrderProfile, SL2Point, SL2QuasiOrbit,
    SL2SeqProfile, ScaleLimit, ShiftProfile,
};
use crate::sl3::{classify_with_reduction, SL3Point, SL3QuasiOrbit};

/// Point of (N x R) u {inf}. The closed sets of the space are the empty
/// set, everything, and the compact subsets of N x R, which makes inf a
/// generic point.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum NRBarPoint {
    Pt {
        #[serde(with = "crate::sl2::bigint_string")]
        m: BigInt,
        #[serde(with = "crate::sl2::rational_string")]
        t: BigRational,
    },
    Infinity,
}

impl NRBarPoint {
    pub fn pt(m: i64, t: BigRational) -> Self {
        NRBarPoint::Pt {
            m: BigInt::from(m),
            t,
        }
    }
}

/// Fiber invariant of a torus pair against the reference vector (1, theta):
/// if z = z0 * p(t * v_theta) for a torsion z0 and a real t, return
/// (ord z0, t); in `Q[theta]` coordinates this forces the theta part of the
/// first coordinate to vanish and reads t off the theta part of the
/// second. Anything else maps to the point at infinity.
pub fn q_theta(z: &[TorusElem; 2]) -> NRBarPoint {
    use num_traits::Zero;
    if !z[0].theta_part().is_zero() {
        return NRBarPoint::Infinity;
    }
    let t = z[1].theta_part().clone();
    let r1 = TorusElem::from_angle(z[0].rational_part() - &t);
    let r2 = TorusElem::from_angle(z[1].rational_part().clone());
    let m = num_integer::Integer::lcm(&r1.order().unwrap(), &r2.order().unwrap());
    NRBarPoint::Pt { m, t }
}

/// Limit profiles for sequences in (N x R) u {inf}.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum NRBarProfile {
    /// constant (m, t)
    Const {
        #[serde(with = "crate::sl2::bigint_string")]
        m: BigInt,
        #[serde(with = "crate::sl2::rational_string")]
        t: BigRational,
    },
    /// constant point at infinity
    ConstInfinity,
    /// constant m with t_n -> t
    TDrift {
        #[serde(with = "crate::sl2::bigint_string")]
        m: BigInt,
        #[serde(with = "crate::sl2::rational_string")]
        t: BigRational,
    },
    /// leaves every compact subset of N x R (m_n -> inf or |t_n| -> inf)
    Escaping,
}

/// Convergence in the compact-closed topology: a sequence staying in a
/// compact set converges exactly to its euclidean limit, while a sequence
/// escaping every compact is eventually inside every nonempty open set and
/// so converges to every point, including infinity. The constant sequence
/// at infinity does the same since no compact contains it.
pub fn nrbar_limit(profile: &NRBarProfile, target: &NRBarPoint) -> Result<bool> {
    match profile {
        NRBarProfile::Const { m, t } | NRBarProfile::TDrift { m, t } => Ok(match target {
            NRBarPoint::Pt { m: m0, t: t0 } => m == m0 && t == t0,
            NRBarPoint::Infinity => false,
        }),
        NRBarProfile::ConstInfinity | NRBarProfile::Escaping => Ok(true),
    }
}

/// Point of the primitive spectrum in stratum coordinates.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "stratum")]
pub enum PrimPoint {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "s1")]
    Strat1 { r: QTheta, x: NRBarPoint },
    #[serde(rename = "s2")]
    Strat2 { r: QTheta, x: NRBarPoint },
    #[serde(rename = "s0")]
    Strat0 { s: QTheta, t: QTheta, j: HeisPrim },
}

impl PrimPoint {
    /// Validate positivity of the stratum parameters.
    pub fn validate(&self, enc: &ThetaEnclosure) -> Result<()> {
        let pos = |x: &QTheta, name: &str| -> Result<()> {
            if sign(x, enc) <= 0 {
                Err(DomainError::InvalidInput(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        match self {
            PrimPoint::Zero => Ok(()),
            PrimPoint::Strat1 { r, .. } | PrimPoint::Strat2 { r, .. } => pos(r, "r"),
            PrimPoint::Strat0 { s, t, .. } => {
                pos(s, "s")?;
                pos(t, "t")
            }
        }
    }

    pub fn quasi_orbit(&self) -> SL3QuasiOrbit {
        match self {
            PrimPoint::Zero => SL3QuasiOrbit::Zero,
            PrimPoint::Strat1 { r, .. } => SL3QuasiOrbit::Q1 { r: r.clone() },
            PrimPoint::Strat2 { r, .. } => SL3QuasiOrbit::Q2 { r: r.clone() },
            PrimPoint::Strat0 { s, t, .. } => SL3QuasiOrbit::Q0 {
                s: s.clone(),
                t: t.clone(),
            },
        }
    }
}

/// Primitive ideal data of the stabilizer, expressed in the named frame
/// reached through the point's reduction conjugator: characters of the
/// Gamma_i stabilizers as value pairs on (X, Z) resp. (Y, Z), or a
/// parameter point of Prim C*(H3(Z)).
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum StabIdeal {
    TrivialChar,
    Gamma1Char { a: TorusElem, b: TorusElem },
    Gamma2Char { a: TorusElem, b: TorusElem },
    HeisIdeal { j: HeisPrim },
}

fn fiber_invariant(v: [QTheta; 2], w: [TorusElem; 2]) -> NRBarPoint {
    match torsion_solve(&v, &w) {
        Some((m, t)) => NRBarPoint::Pt { m, t },
        None => NRBarPoint::Infinity,
    }
}

/// The induction map: pair the point's canonical quasi-orbit with the
/// stabilizer ideal. For the corner strata the character pair is solved
/// against the reduced point's own fiber vector, with the second
/// coordinate conjugated on stratum 1; on the diagonal stratum the
/// Heisenberg parameters pass through unchanged, being invariant under
/// the inner ambiguity of the reduction.
pub fn induce(p: &SL3Point, ideal: &StabIdeal, enc: &ThetaEnclosure) -> Result<PrimPoint> {
    let red = classify_with_reduction(p, enc)?;
    match (&red.orbit, ideal) {
        (SL3QuasiOrbit::Zero, StabIdeal::TrivialChar) => Ok(PrimPoint::Zero),
        (SL3QuasiOrbit::Q1 { r }, StabIdeal::Gamma1Char { a, b }) => {
            let h = &red.reduced;
            let v = [h.at(0, 0).clone(), h.at(1, 0).clone()];
            let x = fiber_invariant(v, [a.clone(), b.neg()]);
            Ok(PrimPoint::Strat1 { r: r.clone(), x })
        }
        (SL3QuasiOrbit::Q2 { r }, StabIdeal::Gamma2Char { a, b }) => {
            let h = &red.reduced;
            let v = [h.at(1, 1).clone(), h.at(2, 1).clone()];
            let x = fiber_invariant(v, [a.clone(), b.clone()]);
            Ok(PrimPoint::Strat2 { r: r.clone(), x })
        }
        (SL3QuasiOrbit::Q0 { s, t }, StabIdeal::HeisIdeal { j }) => Ok(PrimPoint::Strat0 {
            s: s.clone(),
            t: t.clone(),
            j: j.clone(),
        }),
        (orbit, _) => Err(DomainError::StabilizerMismatch(format!(
            "ideal kind does not match the {orbit:?} stratum"
        ))),
    }
}

/// Transport a stabilizer ideal along a group translation p -> gamma p:
/// if the two reductions are gamma0 and gamma0', the element
/// q = gamma0' gamma gamma0^-1 normalizes the named subgroup and the
/// character data picks up the conjugation action, read off by
/// decomposing q^-1 X q etc. in the named generators. Heisenberg ideal
/// parameters are invariant (the ambiguity is inner).
pub fn transport_stab_ideal(q: &crate::intmat::IntMatrix, ideal: &StabIdeal) -> Result<StabIdeal> {
    use crate::heis::heis_from_matrix;
    let q_inv = q.inverse_unimodular()?;
    let conj = |named: &crate::intmat::IntMatrix| q_inv.mul(named).mul(q);
    match ideal {
        StabIdeal::TrivialChar => Ok(StabIdeal::TrivialChar),
        StabIdeal::HeisIdeal { j } => Ok(StabIdeal::HeisIdeal { j: j.clone() }),
        StabIdeal::Gamma1Char { a, b } => {
            // characters of <X, Z>: value on X^x Z^c is x*a + c*b
            let value = |m: &crate::intmat::IntMatrix| -> Result<TorusElem> {
                let h = heis_from_matrix(m).ok_or_else(|| {
                    DomainError::StabilizerMismatch("conjugate left the Heisenberg group".into())
                })?;
                if h.y != 0 {
                    return Err(DomainError::StabilizerMismatch(
                        "conjugate left the first corner subgroup".into(),
                    ));
                }
                Ok(a.mul_int(&h.x.into()).add(&b.mul_int(&h.z.into())))
            };
            Ok(StabIdeal::Gamma1Char {
                a: value(&conj(&crate::sl3::heis_gen_x()))?,
                b: value(&conj(&crate::sl3::heis_gen_z()))?,
            })
        }
        StabIdeal::Gamma2Char { a, b } => {
            let value = |m: &crate::intmat::IntMatrix| -> Result<TorusElem> {
                let h = heis_from_matrix(m).ok_or_else(|| {
                    DomainError::StabilizerMismatch("conjugate left the Heisenberg group".into())
                })?;
                if h.x != 0 {
                    return Err(DomainError::StabilizerMismatch(
                        "conjugate left the second corner subgroup".into(),
                    ));
                }
                Ok(a.mul_int(&h.y.into()).add(&b.mul_int(&h.z.into())))
            };
            Ok(StabIdeal::Gamma2Char {
                a: value(&conj(&crate::sl3::heis_gen_y()))?,
                b: value(&conj(&crate::sl3::heis_gen_z()))?,
            })
        }
    }
}

/// Sequence profiles for the convergence oracle, one bundle per stratum.
/// The diagonal-stratum bundle carries the two induced fiber profiles
/// needed by the cross-stratum clauses: `a_side` describes
/// (s_n e_1, (a_n^{1/ord z_n}, conj z_n)) and `b_side` describes
/// (s_n^{-1} t_n e_1, (b_n^{1/ord z_n}, z_n)).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PrimSeqProfile {
    ZeroSeq,
    Strat1Seq {
        r: crate::sl3::LimitValue,
        x: NRBarProfile,
    },
    Strat2Seq {
        r: crate::sl3::LimitValue,
        x: NRBarProfile,
    },
    Strat0Seq {
        s: crate::sl3::LimitValue,
        t: crate::sl3::LimitValue,
        heis: HeisPrimProfile,
        #[serde(rename = "aSide", default, skip_serializing_if = "Option::is_none")]
        a_side: Option<SL2SeqProfile>,
        #[serde(rename = "bSide", default, skip_serializing_if = "Option::is_none")]
        b_side: Option<SL2SeqProfile>,
    },
}

fn fixed_v_profile_from_nrbar(x: &NRBarProfile) -> SL2SeqProfile {
    let v_theta = [QTheta::one(), QTheta::theta()];
    match x {
        NRBarProfile::Const { m, t } | NRBarProfile::TDrift { m, t } => {
            SL2SeqProfile::FixedIrrationalV {
                v: v_theta,
                order: OrderProfile::Const { m: m.clone() },
                shift: ShiftProfile::To { t: t.clone() },
            }
        }
        NRBarProfile::ConstInfinity => SL2SeqProfile::ConstDense { v: v_theta },
        NRBarProfile::Escaping => SL2SeqProfile::FixedIrrationalV {
            v: v_theta,
            order: OrderProfile::ToInfinity,
            shift: ShiftProfile::To {
                t: BigRational::from_integer(BigInt::from(0)),
            },
        },
    }
}

/// (ord z)-th principal root of the angle a, or the trivial angle when
/// ord z is infinite (the resulting class is independent of that choice).
fn principal_root(a: &TorusElem, z: &TorusElem) -> TorusElem {
    match z.order() {
        Some(n) => TorusElem::from_angle(a.rational_part() / BigRational::from_integer(n)),
        None => TorusElem::zero(),
    }
}

/// Canonical quasi-orbit of (scale * e_1, w).
fn scaled_e1_class(
    scale: &QTheta,
    w: [TorusElem; 2],
    enc: &ThetaEnclosure,
) -> Result<SL2QuasiOrbit> {
    let p = SL2Point::new([scale.clone(), QTheta::zero()], w);
    sl2_classify(&p, enc)
}

/// Target class Q(v_theta, z) for a point z with the given fiber
/// invariant.
fn v_theta_class(x: &NRBarPoint) -> SL2QuasiOrbit {
    match x {
        NRBarPoint::Pt { m, t } => SL2QuasiOrbit::Torsion {
            m: m.clone(),
            t: t.clone(),
        },
        NRBarPoint::Infinity => SL2QuasiOrbit::Dense,
    }
}

/// Rescale a ScaledE1 profile from scale u_n to u_n * lambda_n with
/// lambda_n -> lambda > 0: the ratio data divides by lambda.
fn rescale_scaled_e1(p: &SL2SeqProfile, lambda: &QTheta) -> Result<SL2SeqProfile> {
    match p {
        SL2SeqProfile::ScaledE1 {
            scale,
            order_b,
            a_profile,
        } => {
            let scale = match scale {
                ScaleLimit::ToZero => ScaleLimit::ToZero,
                ScaleLimit::ToInfinity => ScaleLimit::ToInfinity,
                ScaleLimit::ToPositive { s } => ScaleLimit::ToPositive { s: s * lambda },
            };
            let a_profile = match a_profile {
                Some(AProfile::RatioFinite { a, ratio }) => Some(AProfile::RatioFinite {
                    a: a.clone(),
                    ratio: ratio.div(&QRatio::from_qtheta(lambda.clone()))?,
                }),
                other => other.clone(),
            };
            Ok(SL2SeqProfile::ScaledE1 {
                scale,
                order_b: order_b.clone(),
                a_profile,
            })
        }
        _ => Err(DomainError::UnsupportedProfile(
            "only ScaledE1 profiles can be rescaled".into(),
        )),
    }
}

fn require_side<'a>(
    side: &'a Option<SL2SeqProfile>,
    which: &str,
) -> Result<&'a SL2SeqProfile> {
    side.as_ref().ok_or_else(|| {
        DomainError::UnsupportedProfile(format!(
            "this clause needs the induced {which} fiber profile"
        ))
    })
}

/// Full convergence oracle on the primitive spectrum. The zero ideal is a
/// generic point, so any sequence converging to it converges to every
/// point; that happens exactly when the stratum parameters vanish in the
/// limit. Cross-stratum clauses delegate to the fiber-space oracle, the
/// compact-closed topology, and the Heisenberg convergence criterion.
pub fn prim_converges(
    profile: &PrimSeqProfile,
    target: &PrimPoint,
    enc: &ThetaEnclosure,
) -> Result<bool> {
    target.validate(enc)?;
    match profile {
        // The constant sequence at the dense point converges to everything.
        PrimSeqProfile::ZeroSeq => Ok(true),
        PrimSeqProfile::Strat1Seq { r, x } => {
            if r.is_zero() {
                return Ok(true);
            }
            match target {
                PrimPoint::Zero => Ok(false),
                PrimPoint::Strat2 { .. } => Ok(false),
                PrimPoint::Strat1 { r: r0, x: x0 } => {
                    Ok(r.equals(r0) && nrbar_limit(x, x0)?)
                }
                PrimPoint::Strat0 { s, t, j } => {
                    if !r.equals(t) {
                        return Ok(false);
                    }
                    let w = [principal_root(j.a(), j.z()), j.z().neg()];
                    let cls = scaled_e1_class(s, w, enc)?;
                    sl2_limit(&fixed_v_profile_from_nrbar(x), &cls)
                }
            }
        }
        PrimSeqProfile::Strat2Seq { r, x } => {
            if r.is_zero() {
                return Ok(true);
            }
            match target {
                PrimPoint::Zero => Ok(false),
                PrimPoint::Strat1 { .. } => Ok(false),
                PrimPoint::Strat2 { r: r0, x: x0 } => {
                    Ok(r.equals(r0) && nrbar_limit(x, x0)?)
                }
                PrimPoint::Strat0 { s, t, j } => {
                    if !r.equals(s) {
                        return Ok(false);
                    }
                    let w = [principal_root(j.b(), j.z()), j.z().clone()];
                    let scale = QRatio::from_qtheta(t.clone())
                        .div(&QRatio::from_qtheta(s.clone()))?;
                    let scale = scale.as_rational().map(QTheta::from_rational).ok_or_else(|| {
                        DomainError::UnsupportedProfile(
                            "target scale t/s leaves the Q[theta] model".into(),
                        )
                    })?;
                    let cls = scaled_e1_class(&scale, w, enc)?;
                    sl2_limit(&fixed_v_profile_from_nrbar(x), &cls)
                }
            }
        }
        PrimSeqProfile::Strat0Seq {
            s,
            t,
            heis,
            a_side,
            b_side,
        } => {
            if s.is_zero() && t.is_zero() {
                return Ok(true);
            }
            match target {
                PrimPoint::Zero => Ok(false),
                PrimPoint::Strat1 { r: r0, x: x0 } => {
                    if !(s.is_zero() && t.equals(r0)) {
                        return Ok(false);
                    }
                    sl2_limit(require_side(a_side, "a-side")?, &v_theta_class(x0))
                }
                PrimPoint::Strat2 { r: r0, x: x0 } => {
                    if !(s.equals(r0) && t.is_zero()) {
                        return Ok(false);
                    }
                    sl2_limit(require_side(b_side, "b-side")?, &v_theta_class(x0))
                }
                PrimPoint::Strat0 { s: s0, t: t0, j } => {
                    // (i) approach through the first corner stratum
                    if s.is_zero() && t.equals(t0) {
                        let w = [principal_root(j.a(), j.z()), j.z().neg()];
                        let cls = scaled_e1_class(s0, w, enc)?;
                        return sl2_limit(require_side(a_side, "a-side")?, &cls);
                    }
                    // (ii) approach through the second corner stratum
                    if s.equals(s0) && t.is_zero() {
                        let w = [principal_root(j.b(), j.z()), j.z().clone()];
                        let cls = scaled_e1_class(t0, w, enc)?;
                        let rescaled = rescale_scaled_e1(require_side(b_side, "b-side")?, s0)?;
                        return sl2_limit(&rescaled, &cls);
                    }
                    // (iii) interior approach
                    if s.equals(s0) && t.equals(t0) {
                        return heis_prim_converges(heis, j);
                    }
                    Ok(false)
                }
            }
        }
    }
}

/// Constant-sequence profile at a point.
pub fn const_profile(p: &PrimPoint) -> PrimSeqProfile {
    match p {
        PrimPoint::Zero => PrimSeqProfile::ZeroSeq,
        PrimPoint::Strat1 { r, x } => PrimSeqProfile::Strat1Seq {
            r: crate::sl3::LimitValue::finite(r.clone()),
            x: const_nrbar(x),
        },
        PrimPoint::Strat2 { r, x } => PrimSeqProfile::Strat2Seq {
            r: crate::sl3::LimitValue::finite(r.clone()),
            x: const_nrbar(x),
        },
        PrimPoint::Strat0 { s, t, j } => PrimSeqProfile::Strat0Seq {
            s: crate::sl3::LimitValue::finite(s.clone()),
            t: crate::sl3::LimitValue::finite(t.clone()),
            heis: HeisPrimProfile::ConstZ {
                z: j.z().clone(),
                a: j.a().clone(),
                b: j.b().clone(),
            },
            a_side: None,
            b_side: None,
        },
    }
}

fn const_nrbar(x: &NRBarPoint) -> NRBarProfile {
    match x {
        NRBarPoint::Pt { m, t } => NRBarProfile::Const {
            m: m.clone(),
            t: t.clone(),
        },
        NRBarPoint::Infinity => NRBarProfile::ConstInfinity,
    }
}

/// T0 sanity: two distinct points cannot both be limits of each other's
/// constant sequences.
pub fn prim_t0_check(p: &PrimPoint, q: &PrimPoint, enc: &ThetaEnclosure) -> Result<bool> {
    let pq = prim_converges(&const_profile(p), q, enc)?;
    let qp = prim_converges(&const_profile(q), p, enc)?;
    Ok(!(pq && qp && p != q))
}
