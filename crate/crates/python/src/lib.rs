//! Python bindings: the classification oracles and witnesses with a
//! JSON-document calling convention, plus a typed Heisenberg element.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use primatlas::error::DomainError;
use primatlas::exact::{parse_rational, ThetaEnclosure, TorusElem};
use primatlas::heis;
use primatlas::prim;
use primatlas::sl2;
use primatlas::sl3;

fn perr(e: DomainError) -> PyErr {
    PyValueError::new_err(format!("{}: {}", e.kind(), e))
}

fn jerr(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(format!("InvalidJson: {e}"))
}

fn to_json<T: serde::Serialize>(x: &T) -> PyResult<String> {
    serde_json::to_string(&serde_json::to_value(x).map_err(jerr)?).map_err(jerr)
}

/// Discrete Heisenberg group element in normal form X^x Y^y Z^z.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct HeisElem {
    inner: heis::HeisElem,
}

#[pymethods]
impl HeisElem {
    #[new]
    fn new(x: i64, y: i64, z: i64) -> Self {
        HeisElem {
            inner: heis::HeisElem::new(x, y, z),
        }
    }

    #[getter]
    fn x(&self) -> i64 {
        self.inner.x
    }

    #[getter]
    fn y(&self) -> i64 {
        self.inner.y
    }

    #[getter]
    fn z(&self) -> i64 {
        self.inner.z
    }

    fn mul(&self, other: &HeisElem) -> HeisElem {
        HeisElem {
            inner: heis::heis_mul(self.inner, other.inner),
        }
    }

    fn inverse(&self) -> HeisElem {
        HeisElem {
            inner: self.inner.inverse(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "HeisElem(x={}, y={}, z={})",
            self.inner.x, self.inner.y, self.inner.z
        )
    }

    fn __eq__(&self, other: &HeisElem) -> bool {
        self.inner == other.inner
    }
}

#[pyfunction]
fn classify_sl2(point_json: &str) -> PyResult<String> {
    let p: sl2::SL2Point = serde_json::from_str(point_json).map_err(jerr)?;
    let enc = ThetaEnclosure::default();
    to_json(&sl2::sl2_classify(&p, &enc).map_err(perr)?)
}

#[pyfunction]
fn classify_sl3(point_json: &str) -> PyResult<String> {
    let p: sl3::SL3Point = serde_json::from_str(point_json).map_err(jerr)?;
    let enc = ThetaEnclosure::default();
    to_json(&sl3::sl3_classify(&p, &enc).map_err(perr)?)
}

#[pyfunction]
fn stabilizer(point_json: &str) -> PyResult<String> {
    let p: sl3::SL3Point = serde_json::from_str(point_json).map_err(jerr)?;
    let enc = ThetaEnclosure::default();
    to_json(&sl3::sl3_stabilizer(&p, &enc).map_err(perr)?)
}

/// Sequence-limit oracle; `space` is one of sl2, sl3, prim, heis, nrbar.
#[pyfunction]
fn limit(space: &str, profile_json: &str, target_json: &str) -> PyResult<bool> {
    let enc = ThetaEnclosure::default();
    let out = match space {
        "sl2" => {
            let p: sl2::SL2SeqProfile = serde_json::from_str(profile_json).map_err(jerr)?;
            let t: sl2::SL2QuasiOrbit = serde_json::from_str(target_json).map_err(jerr)?;
            sl2::sl2_limit(&p, &t)
        }
        "sl3" => {
            let p: sl3::SL3SeqProfile = serde_json::from_str(profile_json).map_err(jerr)?;
            let t: sl3::SL3QuasiOrbit = serde_json::from_str(target_json).map_err(jerr)?;
            sl3::sl3_quasiorbit_limit(&p, &t)
        }
        "prim" => {
            let p: prim::PrimSeqProfile = serde_json::from_str(profile_json).map_err(jerr)?;
            let t: prim::PrimPoint = serde_json::from_str(target_json).map_err(jerr)?;
            prim::prim_converges(&p, &t, &enc)
        }
        "heis" => {
            let p: heis::HeisPrimProfile = serde_json::from_str(profile_json).map_err(jerr)?;
            let t: heis::HeisPrim = serde_json::from_str(target_json).map_err(jerr)?;
            heis::heis_prim_converges(&p, &t)
        }
        "nrbar" => {
            let p: prim::NRBarProfile = serde_json::from_str(profile_json).map_err(jerr)?;
            let t: prim::NRBarPoint = serde_json::from_str(target_json).map_err(jerr)?;
            prim::nrbar_limit(&p, &t)
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown limit space {other:?}"
            )))
        }
    };
    out.map_err(perr)
}

#[pyfunction]
fn induce(point_json: &str, ideal_json: &str) -> PyResult<String> {
    let p: sl3::SL3Point = serde_json::from_str(point_json).map_err(jerr)?;
    let ideal: prim::StabIdeal = serde_json::from_str(ideal_json).map_err(jerr)?;
    let enc = ThetaEnclosure::default();
    to_json(&prim::induce(&p, &ideal, &enc).map_err(perr)?)
}

#[pyfunction]
fn t0_check(p_json: &str, q_json: &str) -> PyResult<bool> {
    let p: prim::PrimPoint = serde_json::from_str(p_json).map_err(jerr)?;
    let q: prim::PrimPoint = serde_json::from_str(q_json).map_err(jerr)?;
    let enc = ThetaEnclosure::default();
    prim::prim_t0_check(&p, &q, &enc).map_err(perr)
}

#[pyfunction]
fn modd_witness(s: &str, t: &str, m: i64) -> PyResult<String> {
    let s = parse_rational(s).map_err(perr)?;
    let t = parse_rational(t).map_err(perr)?;
    let w = sl2::modd_witness(
        &primatlas::exact::QTheta::from_rational(s),
        &primatlas::exact::QTheta::from_rational(t),
        &m.into(),
    )
    .map_err(perr)?;
    to_json(&w)
}

#[pyfunction]
fn diag_witness(case: &str, s_n: &str, t_n: &str, s: &str, t: &str) -> PyResult<String> {
    let case = match case {
        "i" => sl3::WitnessCase::I,
        "ii" => sl3::WitnessCase::II,
        other => return Err(PyValueError::new_err(format!("unknown case {other:?}"))),
    };
    let w = sl3::sl3_witness(
        case,
        &parse_rational(s_n).map_err(perr)?,
        &parse_rational(t_n).map_err(perr)?,
        &parse_rational(s).map_err(perr)?,
        &parse_rational(t).map_err(perr)?,
    )
    .map_err(perr)?;
    to_json(&w)
}

/// Residual of the diagonal-approach witness, for quick numeric scans.
#[pyfunction]
fn diag_witness_residual(case: &str, s_n: &str, t_n: &str, s: &str, t: &str) -> PyResult<f64> {
    let case = match case {
        "i" => sl3::WitnessCase::I,
        "ii" => sl3::WitnessCase::II,
        other => return Err(PyValueError::new_err(format!("unknown case {other:?}"))),
    };
    let w = sl3::sl3_witness(
        case,
        &parse_rational(s_n).map_err(perr)?,
        &parse_rational(t_n).map_err(perr)?,
        &parse_rational(s).map_err(perr)?,
        &parse_rational(t).map_err(perr)?,
    )
    .map_err(perr)?;
    Ok(w.residual)
}

#[pyfunction]
#[pyo3(signature = (z, a, b, root_a = 0, root_b = 0))]
fn heis_rep(z: &str, a: &str, b: &str, root_a: u32, root_b: u32) -> PyResult<Vec<Vec<Vec<(f64, f64)>>>> {
    let p = heis::HeisPrim::from_angles(
        parse_rational(z).map_err(perr)?,
        parse_rational(a).map_err(perr)?,
        parse_rational(b).map_err(perr)?,
    )
    .map_err(perr)?;
    let r = heis::heis_irrep(&p, root_a, root_b).map_err(perr)?;
    let dump = |m: &nalgebra::DMatrix<num_complex::Complex64>| {
        (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| (m[(i, j)].re, m[(i, j)].im))
                    .collect()
            })
            .collect()
    };
    Ok(vec![dump(&r.mat_x), dump(&r.mat_y), dump(&r.mat_z)])
}

#[pyfunction]
fn res_hull(z: &str, a: &str, b: &str, subgroup: &str) -> PyResult<String> {
    let p = heis::HeisPrim::new(
        TorusElem::from_angle(parse_rational(z).map_err(perr)?),
        TorusElem::from_angle(parse_rational(a).map_err(perr)?),
        TorusElem::from_angle(parse_rational(b).map_err(perr)?),
    )
    .map_err(perr)?;
    let sub = match subgroup {
        "gamma1" => heis::NamedSubgroup::Gamma1,
        "gamma2" => heis::NamedSubgroup::Gamma2,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown subgroup {other:?}"
            )))
        }
    };
    to_json(&heis::res_hull(&p, sub).map_err(perr)?)
}

#[pyfunction]
#[pyo3(signature = (n, bound = 30))]
fn transitivity(n: u32, bound: u32) -> PyResult<bool> {
    sl2::sl2_torsion_transitivity(n, bound).map_err(perr)
}

#[pyfunction]
fn folner_ratio_h3(n: u32, x: i64, y: i64, z: i64) -> PyResult<String> {
    let f = primatlas::weak::FolnerSet::h3_box(n);
    let g = primatlas::weak::GroupElem::Heis(heis::HeisElem::new(x, y, z));
    let r = primatlas::weak::folner_ratio(&f, &g).map_err(perr)?;
    Ok(primatlas::exact::format_rational(&r))
}

#[pymodule]
fn primatlas_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<HeisElem>()?;
    m.add_function(wrap_pyfunction!(classify_sl2, m)?)?;
    m.add_function(wrap_pyfunction!(classify_sl3, m)?)?;
    m.add_function(wrap_pyfunction!(stabilizer, m)?)?;
    m.add_function(wrap_pyfunction!(limit, m)?)?;
    m.add_function(wrap_pyfunction!(induce, m)?)?;
    m.add_function(wrap_pyfunction!(t0_check, m)?)?;
    m.add_function(wrap_pyfunction!(modd_witness, m)?)?;
    m.add_function(wrap_pyfunction!(diag_witness, m)?)?;
    m.add_function(wrap_pyfunction!(diag_witness_residual, m)?)?;
    m.add_function(wrap_pyfunction!(heis_rep, m)?)?;
    m.add_function(wrap_pyfunction!(res_hull, m)?)?;
    m.add_function(wrap_pyfunction!(transitivity, m)?)?;
    m.add_function(wrap_pyfunction!(folner_ratio_h3, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
