//! Round-trip checks for every published wire format: serialize, re-parse,
//! and compare (or re-serialize byte-identically where the type is
//! output-only).

use num_bigint::BigInt;
use primatlas::exact::{rat, rat_int, QTheta, TorusElem};
use primatlas::heis::{HeisElem, HeisPrim, HeisPrimProfile};
use primatlas::intmat::IntMatrix;
use primatlas::prim::{NRBarPoint, NRBarProfile, PrimPoint, PrimSeqProfile, StabIdeal};
use primatlas::sl2::{
    AProfile, OrderProfile, SL2Point, SL2QuasiOrbit, SL2SeqProfile, ScaleLimit, ShiftProfile,
};
use primatlas::sl3::{LimitValue, SL3Point, SL3QuasiOrbit, SL3SeqProfile};

fn roundtrip<T>(x: &T)
where
    T: serde::Serialize + serde::de::DeserializeOwned + PartialEq + std::fmt::Debug,
{
    let js = serde_json::to_string(x).expect("serializes");
    let back: T = serde_json::from_str(&js).unwrap_or_else(|e| panic!("resparse {js}: {e}"));
    assert_eq!(&back, x, "roundtrip changed the value through {js}");
}

fn restable<T>(x: &T)
where
    T: serde::Serialize + serde::de::DeserializeOwned,
{
    // parse-then-serialize is stable even when the type lacks PartialEq
    let js = serde_json::to_string(x).expect("serializes");
    let back: T = serde_json::from_str(&js).expect("reparses");
    assert_eq!(js, serde_json::to_string(&back).unwrap());
}

#[test]
fn scalar_and_matrix_documents() {
    roundtrip(&QTheta::linear(rat(-3, 4), rat(7, 2)));
    roundtrip(&QTheta::zero());
    roundtrip(&TorusElem::new(rat(9, 4), rat(-1, 3)));
    roundtrip(&IntMatrix::from_i64(&[&[3, 1], &[2, 1]]));
    roundtrip(&IntMatrix::from_i64(&[&[1, 0, 5], &[0, 1, -7], &[0, 0, 1]]));
    roundtrip(&HeisElem::new(-2, 5, 9));
    roundtrip(&HeisPrim::from_angles(rat(1, 4), rat(1, 3), rat(0, 1)).unwrap());
    roundtrip(
        &HeisPrim::new(
            TorusElem::new(rat(0, 1), rat(2, 5)),
            TorusElem::zero(),
            TorusElem::zero(),
        )
        .unwrap(),
    );
}

#[test]
fn point_and_orbit_documents() {
    let v_theta = [QTheta::one(), QTheta::theta()];
    roundtrip(&SL2Point::new(
        v_theta.clone(),
        [
            TorusElem::from_angle(rat(1, 2)),
            TorusElem::new(rat(1, 3), rat_int(2)),
        ],
    ));
    roundtrip(&SL2QuasiOrbit::Dense);
    roundtrip(&SL2QuasiOrbit::Torsion {
        m: BigInt::from(6),
        t: rat(-2, 3),
    });
    roundtrip(&SL2QuasiOrbit::RationalDir {
        s: QTheta::from_int(2),
        b: TorusElem::from_angle(rat(1, 2)),
        a_class: TorusElem::new(rat(1, 4), rat(5, 1)),
    });
    roundtrip(&primatlas::sl3::a1_matrix(&rat(7, 3)).unwrap());
    roundtrip(&SL3QuasiOrbit::Q0 {
        s: QTheta::from_int(2),
        t: QTheta::from_int(3),
    });
    roundtrip(&SL3QuasiOrbit::Zero);
    // a coset document parsed from literal JSON must classify
    let js = r#"[[{"coeffs":[["2","1"]]},{"coeffs":[]},{"coeffs":[]}],
                 [{"coeffs":[]},{"coeffs":[["3","2"]]},{"coeffs":[]}],
                 [{"coeffs":[]},{"coeffs":[]},{"coeffs":[["1","3"]]}]]"#;
    let p: SL3Point = serde_json::from_str(js).unwrap();
    roundtrip(&p);
    // a non-unimodular document is rejected at parse time
    let bad = r#"[[{"coeffs":[["2","1"]]},{"coeffs":[]},{"coeffs":[]}],
                  [{"coeffs":[]},{"coeffs":[["1","1"]]},{"coeffs":[]}],
                  [{"coeffs":[]},{"coeffs":[]},{"coeffs":[["1","1"]]}]]"#;
    assert!(serde_json::from_str::<SL3Point>(bad).is_err());
}

#[test]
fn profile_documents() {
    restable(&SL2SeqProfile::FixedIrrationalV {
        v: [QTheta::one(), QTheta::theta()],
        order: OrderProfile::Const { m: BigInt::from(5) },
        shift: ShiftProfile::To { t: rat(2, 1) },
    });
    restable(&SL2SeqProfile::ScaledE1 {
        scale: ScaleLimit::ToZero,
        order_b: OrderProfile::Const { m: BigInt::from(4) },
        a_profile: Some(AProfile::RatioFinite {
            a: TorusElem::from_angle(rat(1, 6)),
            ratio: primatlas::exact::QRatio::from_rational(rat(1, 2)),
        }),
    });
    restable(&SL2SeqProfile::ConstDense {
        v: [QTheta::one(), QTheta::theta()],
    });
    restable(&SL3SeqProfile::Q0Seq {
        s: LimitValue::Zero,
        t: LimitValue::Infinity,
    });
    restable(&SL3SeqProfile::Q1Seq {
        r: LimitValue::Finite(QTheta::linear(rat(1, 2), rat(1, 3))),
        bounded_away: true,
    });
    restable(&HeisPrimProfile::ConstZ {
        z: TorusElem::from_angle(rat(1, 4)),
        a: TorusElem::from_angle(rat(1, 3)),
        b: TorusElem::zero(),
    });
    restable(&NRBarProfile::Escaping);
    restable(&NRBarProfile::TDrift {
        m: BigInt::from(3),
        t: rat(1, 2),
    });
    restable(&PrimSeqProfile::Strat0Seq {
        s: LimitValue::Zero,
        t: LimitValue::Finite(QTheta::from_int(2)),
        heis: HeisPrimProfile::OrderToInfinity {
            z: TorusElem::zero(),
        },
        a_side: Some(SL2SeqProfile::ScaledE1 {
            scale: ScaleLimit::ToZero,
            order_b: OrderProfile::ToInfinity,
            a_profile: None,
        }),
        b_side: None,
    });
    restable(&PrimSeqProfile::ZeroSeq);
}

#[test]
fn spectrum_documents() {
    roundtrip(&PrimPoint::Zero);
    roundtrip(&PrimPoint::Strat1 {
        r: QTheta::from_int(2),
        x: NRBarPoint::pt(3, rat(1, 2)),
    });
    roundtrip(&PrimPoint::Strat2 {
        r: QTheta::linear(rat(0, 1), rat(1, 1)),
        x: NRBarPoint::Infinity,
    });
    roundtrip(&PrimPoint::Strat0 {
        s: QTheta::from_int(1),
        t: QTheta::from_int(1),
        j: HeisPrim::from_angles(rat(1, 2), rat(1, 3), rat(1, 5)).unwrap(),
    });
    roundtrip(&StabIdeal::TrivialChar);
    roundtrip(&StabIdeal::Gamma1Char {
        a: TorusElem::from_angle(rat(1, 2)),
        b: TorusElem::new(rat(1, 7), rat_int(3)),
    });
    roundtrip(&StabIdeal::HeisIdeal {
        j: HeisPrim::from_angles(rat(1, 6), rat(0, 1), rat(5, 6)).unwrap(),
    });
}
