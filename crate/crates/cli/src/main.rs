//! JSON-in / JSON-out command line front end for the classification
//! oracles and witnesses. Success prints {"ok":true,"result":...} and
//! exits 0; domain errors print {"ok":false,"error":{...}} and exit 2;
//! malformed input exits 1. Output keys are sorted and floats are rounded
//! to 15 significant digits, so identical invocations are byte-identical.

use clap::{Parser, Subcommand};
use num_rational::BigRational;
use serde_json::{json, Value};

use primatlas::error::DomainError;
use primatlas::exact::{parse_rational, QTheta, ThetaEnclosure, TorusElem};
use primatlas::heis::{
    heis_irrep, heis_prim_converges, res_hull, HeisPrim, HeisPrimProfile, NamedSubgroup,
    RestrictionHull,
};
use primatlas::prim::{
    induce, nrbar_limit, prim_converges, prim_t0_check, NRBarPoint, NRBarProfile, PrimPoint,
    PrimSeqProfile, StabIdeal,
};
use primatlas::sl2::{
    modd_witness, sl2_classify, sl2_limit, sl2_orbit_sample, sl2_torsion_transitivity, SL2Point,
    SL2QuasiOrbit, SL2SeqProfile,
};
use primatlas::sl3::{
    sl3_classify, sl3_stabilizer, sl3_witness, SL3Point, SL3QuasiOrbit, SL3SeqProfile,
    WitnessCase,
};
use primatlas::weak::{
    amenability_witness, approx_intertwiner_from_states, exact_intertwiner, folner_ratio,
    greenleaf_vector, hs_defect, CosetSpace, FinRep, FolnerSet, GroupElem, HSOperator,
};

#[derive(Parser)]
#[command(
    name = "primatlas",
    about = "Exact quasi-orbit classification and primitive-spectrum oracles for SL3(Z) acting on SL3(R)/U3(R)",
    long_about = None,
    version
)]
struct Cli {
    /// Rational enclosure "lo/hi,lo2/hi2" ... format "p/q:r/s" bracketing
    /// the transcendental evaluation point (default brackets pi). Also
    /// read from PRIMATLAS_THETA.
    #[arg(long, global = true)]
    theta: Option<String>,

    /// Numeric tolerance for float-layer checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tolerance: f64,

    /// Parse and validate all JSON inputs without computing.
    #[arg(long, global = true)]
    validate: bool,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a point of R^2 x T^2 into its canonical quasi-orbit.
    ClassifySl2 {
        /// {"v":[qtheta,qtheta],"w":[{"a":"p/q","b":"r/s"},...]}
        #[arg(long)]
        point: String,
    },
    /// Classify a coset of SL3(R)/U3(R) into its canonical quasi-orbit.
    ClassifySl3 {
        /// 3x3 array of {"coeffs":[["num","den"],...]}
        #[arg(long)]
        point: String,
    },
    /// Stabilizer of a coset, with conjugator and verified generators.
    Stabilizer {
        #[arg(long)]
        point: String,
    },
    /// Sequence-limit oracles. Profiles and targets are JSON documents
    /// with a "kind" (or "stratum") discriminator; see docs/schemas/.
    #[command(long_about = "Sequence-limit oracles over five spaces.\n\
        \n\
        --space sl3   profile {\"kind\":\"Q0Seq\",\"s\":\"0\",\"t\":\"0\"} | {\"kind\":\"Q1Seq\",\"r\":\"3\",\"boundedAwayFromZero\":true} | Q2Seq\n\
        \u{20}             target  {\"kind\":\"Zero\"} | {\"kind\":\"Q0\",\"s\":qtheta,\"t\":qtheta} | Q1 | Q2\n\
        --space sl2   profile {\"kind\":\"FixedIrrationalV\",\"v\":[qtheta,qtheta],\"order\":{\"kind\":\"Const\",\"m\":\"5\"},\"shift\":{\"kind\":\"To\",\"t\":\"2\"}}\n\
        \u{20}                     | {\"kind\":\"ScaledE1\",\"scale\":{\"kind\":\"ToZero\"},\"orderB\":{\"kind\":\"Const\",\"m\":\"4\"},\"aProfile\":{\"kind\":\"RatioFinite\",\"a\":torus,\"ratio\":\"1/2\"}}\n\
        \u{20}                     | {\"kind\":\"ConstDense\",\"v\":[...]}\n\
        \u{20}             target  {\"kind\":\"Dense\"} | {\"kind\":\"Torsion\",\"m\":\"6\",\"t\":\"0\"} | {\"kind\":\"RationalDir\",...}\n\
        --space prim  profile {\"kind\":\"ZeroSeq\"} | {\"kind\":\"Strat1Seq\",\"r\":\"2\",\"x\":{\"kind\":\"Const\",\"m\":\"3\",\"t\":\"1/2\"}}\n\
        \u{20}                     | {\"kind\":\"Strat0Seq\",\"s\":\"0\",\"t\":\"2\",\"heis\":{...},\"aSide\":{...},\"bSide\":{...}}\n\
        \u{20}             target  {\"stratum\":\"zero\"|\"s1\"|\"s2\"|\"s0\",...}\n\
        --space heis  profile {\"kind\":\"ConstZ\",\"z\":torus,\"a\":torus,\"b\":torus} | {\"kind\":\"OrderToInfinity\",\"z\":torus} | ConstOrderMismatch\n\
        \u{20}             target  {\"z\":\"p/q\",\"a\":\"p/q\",\"b\":\"p/q\"}\n\
        --space nrbar profile {\"kind\":\"Const\"|\"TDrift\",\"m\":\"2\",\"t\":\"3/2\"} | {\"kind\":\"ConstInfinity\"|\"Escaping\"}\n\
        \u{20}             target  {\"kind\":\"Pt\",\"m\":\"2\",\"t\":\"3/2\"} | {\"kind\":\"Infinity\"}")]
    Limit {
        /// one of: sl2, sl3, prim, heis, nrbar
        #[arg(long)]
        space: String,
        #[arg(long)]
        profile: String,
        #[arg(long)]
        target: String,
    },
    /// Induce a primitive-spectrum point from a coset and a stabilizer ideal.
    Induce {
        #[arg(long)]
        point: String,
        /// {"kind":"HeisIdeal","j":{...}} | {"kind":"Gamma1Char","a":...,"b":...} | ...
        #[arg(long)]
        ideal: String,
    },
    /// T0 separation check between two primitive-spectrum points.
    T0Check {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
    },
    /// Explicit witnesses: the odd-m diagonal identity (case "modd") or
    /// the two-step diagonal approach (cases "i" / "ii").
    Witness {
        /// modd | i | ii
        #[arg(long)]
        case: String,
        /// s parameter (modd), rational or qtheta JSON
        #[arg(long)]
        s: Option<String>,
        /// t parameter (modd)
        #[arg(long)]
        t: Option<String>,
        /// odd integer (modd)
        #[arg(long)]
        m: Option<i64>,
        /// source diagonal parameters (cases i/ii)
        #[arg(long)]
        sn: Option<String>,
        #[arg(long)]
        tn: Option<String>,
        /// target diagonal parameters (cases i/ii)
        #[arg(long = "target-s")]
        target_s: Option<String>,
        #[arg(long = "target-t")]
        target_t: Option<String>,
    },
    /// Build a finite-dimensional irreducible Heisenberg representation.
    HeisRep {
        #[arg(long)]
        z: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "root-a", default_value_t = 0)]
        root_a: u32,
        #[arg(long = "root-b", default_value_t = 0)]
        root_b: u32,
    },
    /// Restriction hull of a Heisenberg primitive ideal to Gamma1/Gamma2.
    ResHull {
        #[arg(long)]
        z: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        /// gamma1 | gamma2
        #[arg(long)]
        subgroup: String,
    },
    /// Exact boundary ratio |gF delta F| / |F| of a Folner set.
    Folner {
        /// h3 | zd
        #[arg(long)]
        group: String,
        /// box radius (h3 box [-n,n]^2 x [-n^2,n^2]; zd box [-n,n]^d)
        #[arg(long)]
        n: Option<u32>,
        /// lattice rank for zd
        #[arg(long)]
        d: Option<usize>,
        /// half-open interval [lo,hi) for 1-d lattices
        #[arg(long)]
        lo: Option<i64>,
        #[arg(long)]
        hi: Option<i64>,
        /// group element: {"x":..,"y":..,"z":..} for h3, [..] for zd
        #[arg(long)]
        g: String,
    },
    /// Folner-averaged almost-invariant operator with the averaging bound.
    Amenability {
        #[arg(long)]
        z: String,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "root-a", default_value_t = 0)]
        root_a: u32,
        #[arg(long = "root-b", default_value_t = 0)]
        root_b: u32,
        /// box radius
        #[arg(long)]
        n: u32,
    },
    /// Square-root-averaged almost-invariant vector on a coset space.
    Greenleaf {
        /// h3-gamma1 | h3-gamma2 | zd
        #[arg(long)]
        space: String,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        lo: Option<i64>,
        #[arg(long)]
        hi: Option<i64>,
        /// basepoint coordinate, JSON array of integers
        #[arg(long, default_value = "[0]")]
        basepoint: String,
    },
    /// Intertwiners between same-parameter Heisenberg representations.
    Intertwine {
        /// exact | approx
        #[arg(long)]
        mode: String,
        /// {"z":"p/q","a":"p/q","b":"p/q","rootA":k,"rootB":l}
        #[arg(long)]
        pi: String,
        #[arg(long)]
        rho: String,
        /// frame words for approx mode, JSON array of {"x":..,"y":..,"z":..}
        #[arg(long)]
        words: Option<String>,
    },
    /// Brute-force transitivity on order-n torus points.
    Transitivity {
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 30)]
        bound: u32,
    },
    /// Float point cloud of a short-word orbit (numeric cross-check aid).
    OrbitSample {
        #[arg(long)]
        point: String,
        #[arg(long = "word-len", default_value_t = 6)]
        word_len: u32,
    },
    /// Corner-convergence necessary conditions for a sampled sequence
    /// gamma_n g_n U -> g U inside a corner stratum.
    CornerConv {
        /// JSON array of [gamma, point] pairs
        #[arg(long)]
        samples: String,
        #[arg(long)]
        target: String,
        #[arg(long)]
        stratum: u8,
        /// lower bound on the corner entries
        #[arg(long, default_value = "1/100")]
        delta: String,
    },
}

enum CliError {
    Usage(String),
    Domain(DomainError),
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        CliError::Domain(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T, CliError> {
    serde_json::from_str(s).map_err(|e| usage(format!("bad {what} JSON: {e}")))
}

fn parse_qtheta_arg(what: &str, s: &str) -> Result<QTheta, CliError> {
    if let Ok(r) = parse_rational(s) {
        return Ok(QTheta::from_rational(r));
    }
    parse_json::<QTheta>(what, s)
}

fn parse_rational_arg(what: &str, s: &str) -> Result<BigRational, CliError> {
    parse_rational(s).map_err(|_| usage(format!("bad rational for {what}: {s:?}")))
}

fn enclosure_from(theta: &Option<String>) -> Result<ThetaEnclosure, CliError> {
    let spec = theta
        .clone()
        .or_else(|| std::env::var("PRIMATLAS_THETA").ok());
    match spec {
        None => Ok(ThetaEnclosure::default()),
        Some(s) => {
            let (lo, hi) = s
                .split_once(':')
                .ok_or_else(|| usage("theta enclosure must look like \"p/q:r/s\""))?;
            let lo = parse_rational_arg("theta lo", lo)?;
            let hi = parse_rational_arg("theta hi", hi)?;
            ThetaEnclosure::with_interval(lo, hi).map_err(CliError::Domain)
        }
    }
}

/// Round every float in the tree to 15 significant digits so output is
/// reproducible across runs.
fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    return Value::from(round_sig(f, 15));
                }
            }
            Value::Number(n)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, x)| (k, round_floats(x))).collect())
        }
        other => other,
    }
}

fn round_sig(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let factor = 10f64.powi(digits - 1 - mag);
    (x * factor).round() / factor
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| usage(format!("serialization failed: {e}")))
}

fn complex_matrix_value(m: &nalgebra::DMatrix<num_complex::Complex64>) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            Value::Array(
                (0..m.ncols())
                    .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

fn heis_prim_from_args(z: &str, a: &str, b: &str) -> Result<HeisPrim, CliError> {
    let zt = if let Ok(zr) = parse_rational(z) {
        TorusElem::from_angle(zr)
    } else {
        parse_json::<TorusElem>("z", z)?
    };
    let p = HeisPrim::new(
        zt,
        TorusElem::from_angle(parse_rational_arg("a", a)?),
        TorusElem::from_angle(parse_rational_arg("b", b)?),
    )?;
    Ok(p)
}

fn folner_from_args(
    group: &str,
    n: Option<u32>,
    d: Option<usize>,
    lo: Option<i64>,
    hi: Option<i64>,
) -> Result<FolnerSet, CliError> {
    match group {
        "h3" => {
            let n = n.ok_or_else(|| usage("h3 Folner boxes need --n"))?;
            Ok(FolnerSet::h3_box(n))
        }
        "zd" => {
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if d.unwrap_or(1) != 1 {
                    return Err(usage("interval Folner sets are 1-dimensional"));
                }
                Ok(FolnerSet::z_interval(lo, hi))
            } else {
                let d = d.ok_or_else(|| usage("zd Folner boxes need --d"))?;
                let n = n.ok_or_else(|| usage("zd Folner boxes need --n"))?;
                Ok(FolnerSet::zd_box(d, n as i64))
            }
        }
        other => Err(usage(format!("unknown group {other:?}"))),
    }
}

fn elem_from_json(group: &str, s: &str) -> Result<GroupElem, CliError> {
    match group {
        "h3" => Ok(GroupElem::Heis(parse_json("element", s)?)),
        "zd" => Ok(GroupElem::Lattice(parse_json("element", s)?)),
        other => Err(usage(format!("unknown group {other:?}"))),
    }
}

fn irrep_from_json(what: &str, s: &str) -> Result<primatlas::heis::HeisIrrep, CliError> {
    #[derive(serde::Deserialize)]
    struct Raw {
        z: String,
        a: String,
        b: String,
        #[serde(rename = "rootA", default)]
        root_a: u32,
        #[serde(rename = "rootB", default)]
        root_b: u32,
    }
    let raw: Raw = parse_json(what, s)?;
    let p = heis_prim_from_args(&raw.z, &raw.a, &raw.b)?;
    Ok(heis_irrep(&p, raw.root_a, raw.root_b)?)
}

fn run(cli: &Cli) -> Result<Value, CliError> {
    let enc = enclosure_from(&cli.theta)?;
    let validate = cli.validate;
    let valid = || Ok(Value::String("valid".into()));

    match &cli.cmd {
        Cmd::ClassifySl2 { point } => {
            let p: SL2Point = parse_json("point", point)?;
            if validate {
                return valid();
            }
            to_value(&sl2_classify(&p, &enc)?)
        }
        Cmd::ClassifySl3 { point } => {
            let p: SL3Point = parse_json("point", point)?;
            if validate {
                return valid();
            }
            to_value(&sl3_classify(&p, &enc)?)
        }
        Cmd::Stabilizer { point } => {
            let p: SL3Point = parse_json("point", point)?;
            if validate {
                return valid();
            }
            to_value(&sl3_stabilizer(&p, &enc)?)
        }
        Cmd::Limit {
            space,
            profile,
            target,
        } => match space.as_str() {
            "sl2" => {
                let prof: SL2SeqProfile = parse_json("profile", profile)?;
                let tgt: SL2QuasiOrbit = parse_json("target", target)?;
                if validate {
                    return valid();
                }
                to_value(&sl2_limit(&prof, &tgt)?)
            }
            "sl3" => {
                let prof: SL3SeqProfile = parse_json("profile", profile)?;
                let tgt: SL3QuasiOrbit = parse_json("target", target)?;
                if validate {
                    return valid();
                }
                to_value(&primatlas::sl3::sl3_quasiorbit_limit(&prof, &tgt)?)
            }
            "prim" => {
                let prof: PrimSeqProfile = parse_json("profile", profile)?;
                let tgt: PrimPoint = parse_json("target", target)?;
                if validate {
                    return valid();
                }
                to_value(&prim_converges(&prof, &tgt, &enc)?)
            }
            "heis" => {
                let prof: HeisPrimProfile = parse_json("profile", profile)?;
                let tgt: HeisPrim = parse_json("target", target)?;
                if validate {
                    return valid();
                }
                to_value(&heis_prim_converges(&prof, &tgt)?)
            }
            "nrbar" => {
                let prof: NRBarProfile = parse_json("profile", profile)?;
                let tgt: NRBarPoint = parse_json("target", target)?;
                if validate {
                    return valid();
                }
                to_value(&nrbar_limit(&prof, &tgt)?)
            }
            other => Err(usage(format!("unknown limit space {other:?}"))),
        },
        Cmd::Induce { point, ideal } => {
            let p: SL3Point = parse_json("point", point)?;
            let ideal: StabIdeal = parse_json("ideal", ideal)?;
            if validate {
                return valid();
            }
            to_value(&induce(&p, &ideal, &enc)?)
        }
        Cmd::T0Check { p, q } => {
            let p: PrimPoint = parse_json("p", p)?;
            let q: PrimPoint = parse_json("q", q)?;
            if validate {
                return valid();
            }
            to_value(&prim_t0_check(&p, &q, &enc)?)
        }
        Cmd::Witness {
            case,
            s,
            t,
            m,
            sn,
            tn,
            target_s,
            target_t,
        } => match case.as_str() {
            "modd" => {
                let s = parse_qtheta_arg(
                    "s",
                    s.as_deref().ok_or_else(|| usage("modd needs --s"))?,
                )?;
                let t = parse_qtheta_arg(
                    "t",
                    t.as_deref().ok_or_else(|| usage("modd needs --t"))?,
                )?;
                let m = m.ok_or_else(|| usage("modd needs --m"))?;
                if validate {
                    return valid();
                }
                to_value(&modd_witness(&s, &t, &m.into())?)
            }
            "i" | "ii" => {
                let case = if case == "i" {
                    WitnessCase::I
                } else {
                    WitnessCase::II
                };
                let need = |x: &Option<String>, name: &str| {
                    x.clone()
                        .ok_or_else(|| usage(format!("cases i/ii need --{name}")))
                };
                let sn = parse_rational_arg("sn", &need(sn, "sn")?)?;
                let tn = parse_rational_arg("tn", &need(tn, "tn")?)?;
                let ts = parse_rational_arg("target-s", &need(target_s, "target-s")?)?;
                let tt = parse_rational_arg("target-t", &need(target_t, "target-t")?)?;
                if validate {
                    return valid();
                }
                to_value(&sl3_witness(case, &sn, &tn, &ts, &tt)?)
            }
            other => Err(usage(format!("unknown witness case {other:?}"))),
        },
        Cmd::HeisRep {
            z,
            a,
            b,
            root_a,
            root_b,
        } => {
            let p = heis_prim_from_args(z, a, b)?;
            if validate {
                return valid();
            }
            let r = heis_irrep(&p, *root_a, *root_b)?;
            Ok(json!({
                "n": r.n,
                "matX": complex_matrix_value(&r.mat_x),
                "matY": complex_matrix_value(&r.mat_y),
                "matZ": complex_matrix_value(&r.mat_z),
                "rootA": primatlas::exact::format_rational(&r.root_a),
                "rootB": primatlas::exact::format_rational(&r.root_b),
            }))
        }
        Cmd::ResHull { z, a, b, subgroup } => {
            let p = heis_prim_from_args(z, a, b)?;
            let sub = match subgroup.as_str() {
                "gamma1" => NamedSubgroup::Gamma1,
                "gamma2" => NamedSubgroup::Gamma2,
                other => return Err(usage(format!("unknown subgroup {other:?}"))),
            };
            if validate {
                return valid();
            }
            match res_hull(&p, sub)? {
                RestrictionHull::Finite(pairs) => {
                    let rows: Vec<Value> = pairs
                        .iter()
                        .map(|(c, zz)| {
                            json!({
                                "c": primatlas::exact::format_rational(c.rational_part()),
                                "z": primatlas::exact::format_rational(zz.rational_part()),
                            })
                        })
                        .collect();
                    Ok(json!({"kind": "Finite", "pairs": rows}))
                }
                RestrictionHull::FullCircle { z } => {
                    Ok(json!({"kind": "FullCircle", "z": to_value(&z)?}))
                }
            }
        }
        Cmd::Folner {
            group,
            n,
            d,
            lo,
            hi,
            g,
        } => {
            let f = folner_from_args(group, *n, *d, *lo, *hi)?;
            let g = elem_from_json(group, g)?;
            if validate {
                return valid();
            }
            let ratio = folner_ratio(&f, &g)?;
            Ok(json!({
                "ratio": primatlas::exact::format_rational(&ratio),
                "size": f.len(),
            }))
        }
        Cmd::Amenability {
            z,
            a,
            b,
            root_a,
            root_b,
            n,
        } => {
            let p = heis_prim_from_args(z, a, b)?;
            if validate {
                return valid();
            }
            let r = heis_irrep(&p, *root_a, *root_b)?;
            let rep = FinRep::from_irrep(&r)?;
            let f = FolnerSet::h3_box(*n);
            let (t, reports) = amenability_witness(&rep, &f)?;
            Ok(json!({
                "operator": complex_matrix_value(&t.mat),
                "reports": to_value(&reports)?,
            }))
        }
        Cmd::Greenleaf {
            space,
            n,
            d,
            lo,
            hi,
            basepoint,
        } => {
            let (cs, group) = match space.as_str() {
                "h3-gamma1" => (CosetSpace::H3ModGamma1, "h3"),
                "h3-gamma2" => (CosetSpace::H3ModGamma2, "h3"),
                "zd" => (CosetSpace::Zd(d.unwrap_or(1)), "zd"),
                other => return Err(usage(format!("unknown coset space {other:?}"))),
            };
            let f = folner_from_args(group, *n, *d, *lo, *hi)?;
            let base: Vec<i64> = parse_json("basepoint", basepoint)?;
            if validate {
                return valid();
            }
            let (vector, reports) = greenleaf_vector(cs, &f, &base)?;
            let vec_rows: Vec<Value> = vector
                .iter()
                .map(|(pt, w)| json!({"point": pt, "weight": w}))
                .collect();
            Ok(json!({
                "vector": vec_rows,
                "reports": to_value(&reports)?,
            }))
        }
        Cmd::Intertwine {
            mode,
            pi,
            rho,
            words,
        } => {
            let pi_rep = irrep_from_json("pi", pi)?;
            let rho_rep = irrep_from_json("rho", rho)?;
            match mode.as_str() {
                "exact" => {
                    if validate {
                        return valid();
                    }
                    match exact_intertwiner(&pi_rep, &rho_rep)? {
                        Some(w) => {
                            let fp = FinRep::from_irrep(&pi_rep)?;
                            let fr = FinRep::from_irrep(&rho_rep)?;
                            let defect = hs_defect(&w, &fp, &fr, &fp.generator_elems())?;
                            Ok(json!({
                                "found": true,
                                "operator": complex_matrix_value(&w.mat),
                                "defect": defect,
                            }))
                        }
                        None => Ok(json!({"found": false})),
                    }
                }
                "approx" => {
                    let words: Vec<primatlas::heis::HeisElem> = match words {
                        Some(w) => parse_json("words", w)?,
                        None => vec![
                            primatlas::heis::HeisElem::identity(),
                            primatlas::heis::HeisElem::X,
                            primatlas::heis::HeisElem::Y,
                            primatlas::heis::HeisElem::Z,
                            primatlas::heis::HeisElem::new(1, 1, 0),
                        ],
                    };
                    if validate {
                        return valid();
                    }
                    let fp = FinRep::from_irrep(&pi_rep)?;
                    let fr = FinRep::from_irrep(&rho_rep)?;
                    // Cyclic frames seeded at the first basis vector; the
                    // rho frame is matched through the exact intertwiner.
                    let w = exact_intertwiner(&pi_rep, &rho_rep)?.ok_or_else(|| {
                        DomainError::PrimMismatch("no exact intertwiner to match frames".into())
                    })?;
                    let dim = fp.dim;
                    let mut xi0 = nalgebra::DVector::<num_complex::Complex64>::zeros(dim);
                    xi0[0] = num_complex::Complex64::new(1.0, 0.0);
                    let xi0_rho = {
                        let v = &w.mat * &xi0;
                        let nrm = v.norm();
                        v / num_complex::Complex64::new(nrm, 0.0)
                    };
                    let frame_pi: Vec<_> = words
                        .iter()
                        .map(|h| fp.apply(&GroupElem::Heis(*h)).map(|m| m * &xi0))
                        .collect::<Result<_, _>>()?;
                    let frame_rho: Vec<_> = words
                        .iter()
                        .map(|h| fr.apply(&GroupElem::Heis(*h)).map(|m| m * &xi0_rho))
                        .collect::<Result<_, _>>()?;
                    let q = HSOperator::new(nalgebra::DMatrix::identity(dim, dim))
                        .normalized()?;
                    let (t, report) = approx_intertwiner_from_states(
                        &fp,
                        &fr,
                        &q,
                        &frame_pi,
                        &frame_pi,
                        &frame_rho,
                        &fp.generator_elems(),
                    )?;
                    let rows: Vec<Value> = report
                        .iter()
                        .map(|(g, dct)| json!({"generator": g, "defect": dct}))
                        .collect();
                    Ok(json!({
                        "operator": complex_matrix_value(&t.mat),
                        "defects": rows,
                    }))
                }
                other => Err(usage(format!("unknown intertwine mode {other:?}"))),
            }
        }
        Cmd::Transitivity { n, bound } => {
            if validate {
                return valid();
            }
            to_value(&sl2_torsion_transitivity(*n, *bound)?)
        }
        Cmd::OrbitSample { point, word_len } => {
            let p: SL2Point = parse_json("point", point)?;
            if validate {
                return valid();
            }
            let cloud = sl2_orbit_sample(&p, *word_len, &enc)?;
            let rows: Vec<Value> = cloud
                .iter()
                .map(|(v, w)| json!({"v": v, "w": w}))
                .collect();
            Ok(Value::Array(rows))
        }
        Cmd::CornerConv {
            samples,
            target,
            stratum,
            delta,
        } => {
            let raw: Vec<(primatlas::intmat::IntMatrix, SL3Point)> =
                parse_json("samples", samples)?;
            let g: SL3Point = parse_json("target", target)?;
            let delta = parse_rational_arg("delta", delta)?;
            if validate {
                return valid();
            }
            to_value(&primatlas::sl3::cornerconv_check(
                &raw,
                &g,
                *stratum,
                &delta,
                &enc,
                cli.tolerance,
            )?)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(result) => {
            let out = json!({"ok": true, "result": round_floats(result)});
            println!("{}", serde_json::to_string(&out).expect("serialize"));
        }
        Err(CliError::Domain(e)) => {
            let out = json!({
                "ok": false,
                "error": {"kind": e.kind(), "detail": e.to_string()},
            });
            println!("{}", serde_json::to_string(&out).expect("serialize"));
            std::process::exit(2);
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}
