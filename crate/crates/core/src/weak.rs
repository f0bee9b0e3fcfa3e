//! Finite-scale numerical weak-containment witnesses: Hilbert-Schmidt
//! commutation defects, Folner-averaged almost-invariant operators with
//! the Powers-Stormer bound, square-root-averaged almost-invariant vectors
//! on coset spaces, exact intertwiners between same-parameter Heisenberg
//! representations, and the frame-based approximate intertwiner
//! constructor.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::collections::{HashMap, HashSet};

use crate::error::{DomainError, Result};
use crate::exact::format_rational;
use crate::heis::{clock_and_shift, heis_mul, heis_prim_of_irrep, HeisElem, HeisIrrep};

/// Group element fed to a finite-dimensional representation.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum GroupElem {
    Heis(HeisElem),
    Lattice(Vec<i64>),
}

impl GroupElem {
    pub fn label(&self) -> String {
        match self {
            GroupElem::Heis(h) => format!("X^{} Y^{} Z^{}", h.x, h.y, h.z),
            GroupElem::Lattice(v) => format!("{v:?}"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum GroupTag {
    H3,
    Zd(usize),
}

/// Finite-dimensional unitary representation given by generator images:
/// (X, Y, Z) for H3(Z), the basis shifts for Z^d.
#[derive(Clone, Debug)]
pub struct FinRep {
    pub group: GroupTag,
    pub dim: usize,
    pub gens: Vec<DMatrix<Complex64>>,
}

use crate::heis::unitary_power as mat_power;

pub fn hs_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl FinRep {
    pub fn new(group: GroupTag, gens: Vec<DMatrix<Complex64>>) -> Result<Self> {
        let expected = match group {
            GroupTag::H3 => 3,
            GroupTag::Zd(d) => d,
        };
        if gens.len() != expected {
            return Err(DomainError::DimMismatch(format!(
                "expected {expected} generator images"
            )));
        }
        if gens.is_empty() {
            return Err(DomainError::DimMismatch("need at least one generator".into()));
        }
        let dim = gens[0].nrows();
        let tol = 1e-9;
        let id = DMatrix::<Complex64>::identity(dim, dim);
        for g in &gens {
            if g.nrows() != dim || g.ncols() != dim {
                return Err(DomainError::DimMismatch("generator sizes differ".into()));
            }
            if hs_norm(&(g * g.adjoint() - &id)) > tol {
                return Err(DomainError::InvalidInput("generator is not unitary".into()));
            }
        }
        match group {
            GroupTag::H3 => {
                let (x, y, z) = (&gens[0], &gens[1], &gens[2]);
                // Z central, Y X = Z X Y
                if hs_norm(&(z * x - x * z)) > tol
                    || hs_norm(&(z * y - y * z)) > tol
                    || hs_norm(&(y * x - z * (x * y))) > tol
                {
                    return Err(DomainError::InvalidInput(
                        "generator images do not satisfy the Heisenberg relations".into(),
                    ));
                }
            }
            GroupTag::Zd(_) => {
                for i in 0..gens.len() {
                    for j in (i + 1)..gens.len() {
                        if hs_norm(&(&gens[i] * &gens[j] - &gens[j] * &gens[i])) > tol {
                            return Err(DomainError::InvalidInput(
                                "lattice generator images must commute".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(FinRep { group, dim, gens })
    }

    pub fn from_irrep(r: &HeisIrrep) -> Result<FinRep> {
        FinRep::new(
            GroupTag::H3,
            vec![r.mat_x.clone(), r.mat_y.clone(), r.mat_z.clone()],
        )
    }

    pub fn apply(&self, g: &GroupElem) -> Result<DMatrix<Complex64>> {
        let exps: Vec<i64> = match (self.group, g) {
            (GroupTag::H3, GroupElem::Heis(h)) => vec![h.x, h.y, h.z],
            (GroupTag::Zd(d), GroupElem::Lattice(v)) => {
                if v.len() != d {
                    return Err(DomainError::DimMismatch("lattice rank mismatch".into()));
                }
                v.clone()
            }
            _ => {
                return Err(DomainError::GroupMismatch(
                    "element does not belong to the representation's group".into(),
                ))
            }
        };
        let mut acc: Option<DMatrix<Complex64>> = None;
        for (m, &k) in self.gens.iter().zip(&exps) {
            if k == 0 {
                continue;
            }
            let p = mat_power(m, k);
            acc = Some(match acc {
                None => p,
                Some(a) => a * p,
            });
        }
        Ok(acc.unwrap_or_else(|| DMatrix::identity(self.dim, self.dim)))
    }

    pub fn generator_elems(&self) -> Vec<GroupElem> {
        match self.group {
            GroupTag::H3 => vec![
                GroupElem::Heis(HeisElem::X),
                GroupElem::Heis(HeisElem::Y),
                GroupElem::Heis(HeisElem::Z),
            ],
            GroupTag::Zd(d) => (0..d)
                .map(|i| {
                    let mut v = vec![0i64; d];
                    v[i] = 1;
                    GroupElem::Lattice(v)
                })
                .collect(),
        }
    }
}

/// Hilbert-Schmidt operator with its norm cached at construction.
#[derive(Clone, Debug)]
pub struct HSOperator {
    pub mat: DMatrix<Complex64>,
    norm: f64,
}

impl HSOperator {
    pub fn new(mat: DMatrix<Complex64>) -> Self {
        let norm = hs_norm(&mat);
        HSOperator { mat, norm }
    }

    pub fn norm2(&self) -> f64 {
        self.norm
    }

    pub fn normalized(&self) -> Result<HSOperator> {
        if self.norm < 1e-12 {
            return Err(DomainError::NumericalFailure(
                "cannot normalize a null operator".into(),
            ));
        }
        Ok(HSOperator::new(self.mat.map(|c| c / self.norm)))
    }
}

/// max over gens of the commutation defect ||T pi(g) - rho(g) T||_2, for
/// T: H_pi -> H_rho.
pub fn hs_defect(t: &HSOperator, pi: &FinRep, rho: &FinRep, gens: &[GroupElem]) -> Result<f64> {
    if t.mat.ncols() != pi.dim || t.mat.nrows() != rho.dim {
        return Err(DomainError::DimMismatch(format!(
            "operator is {}x{} but pi has dim {} and rho dim {}",
            t.mat.nrows(),
            t.mat.ncols(),
            pi.dim,
            rho.dim
        )));
    }
    let mut worst: f64 = 0.0;
    for g in gens {
        let d = hs_norm(&(&t.mat * pi.apply(g)? - rho.apply(g)? * &t.mat));
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Finite Folner set: a box in H3(Z) with |x|,|y| <= N and |z| <= N^2
/// (the central range must grow quadratically for the shear of the
/// Y-translate to stay proportionally small), or a box or interval in Z^d.
#[derive(Clone, Debug)]
pub enum FolnerSet {
    H3 { radius: u32, elements: Vec<HeisElem> },
    Zd { d: usize, points: Vec<Vec<i64>> },
}

impl FolnerSet {
    pub fn h3_box(n: u32) -> FolnerSet {
        let n_i = n as i64;
        let mut elements = Vec::new();
        for x in -n_i..=n_i {
            for y in -n_i..=n_i {
                for z in -(n_i * n_i)..=(n_i * n_i) {
                    elements.push(HeisElem::new(x, y, z));
                }
            }
        }
        FolnerSet::H3 {
            radius: n,
            elements,
        }
    }

    pub fn zd_box(d: usize, n: i64) -> FolnerSet {
        let mut points = vec![vec![]];
        for _ in 0..d {
            let mut next = Vec::new();
            for p in &points {
                for k in -n..=n {
                    let mut q = p.clone();
                    q.push(k);
                    next.push(q);
                }
            }
            points = next;
        }
        FolnerSet::Zd { d, points }
    }

    /// Half-open integer interval [lo, hi) in Z.
    pub fn z_interval(lo: i64, hi: i64) -> FolnerSet {
        FolnerSet::Zd {
            d: 1,
            points: (lo..hi).map(|k| vec![k]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FolnerSet::H3 { elements, .. } => elements.len(),
            FolnerSet::Zd { points, .. } => points.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// |gF delta F| / |F| as an exact rational, by set enumeration.
pub fn folner_ratio(f: &FolnerSet, g: &GroupElem) -> Result<BigRational> {
    let (sym_diff, total) = match (f, g) {
        (FolnerSet::H3 { elements, .. }, GroupElem::Heis(h)) => {
            let base: HashSet<HeisElem> = elements.iter().copied().collect();
            let shifted: HashSet<HeisElem> =
                elements.iter().map(|e| heis_mul(*h, *e)).collect();
            let d = base.symmetric_difference(&shifted).count();
            (d, elements.len())
        }
        (FolnerSet::Zd { d, points }, GroupElem::Lattice(v)) => {
            if v.len() != *d {
                return Err(DomainError::DimMismatch("lattice rank mismatch".into()));
            }
            let base: HashSet<Vec<i64>> = points.iter().cloned().collect();
            let shifted: HashSet<Vec<i64>> = points
                .iter()
                .map(|p| p.iter().zip(v).map(|(a, b)| a + b).collect())
                .collect();
            let diff = base.symmetric_difference(&shifted).count();
            (diff, points.len())
        }
        _ => {
            return Err(DomainError::GroupMismatch(
                "element does not act on this Folner set".into(),
            ))
        }
    };
    if total == 0 {
        return Err(DomainError::InvalidInput("empty Folner set".into()));
    }
    Ok(BigRational::new(
        BigInt::from(sym_diff),
        BigInt::from(total),
    ))
}

/// Square root of a positive semidefinite Hermitian matrix by
/// eigendecomposition, eigenvalues clamped at zero to absorb float noise.
fn sqrt_psd(m: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let se = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let lam = se.eigenvalues[k].max(0.0).sqrt();
        if !lam.is_finite() {
            return Err(DomainError::NumericalFailure(
                "eigendecomposition produced a non-finite value".into(),
            ));
        }
        let col = se.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += col[i] * col[j].conj() * Complex64::new(lam, 0.0);
            }
        }
    }
    Ok(out)
}

/// Per-generator report row for the averaging witnesses.
#[derive(Clone, Debug, Serialize)]
pub struct GenReport {
    pub generator: String,
    pub defect_sq: f64,
    pub folner_ratio: String,
    pub bound_ok: bool,
}

/// Folner-averaged almost-invariant Hilbert-Schmidt operator:
/// T = ((1/|F|) sum_{h in F} pi(h) p pi(h)^*)^(1/2) for the rank-one
/// projection p onto the first basis vector. The Powers-Stormer inequality
/// bounds each conjugation defect by the boundary ratio:
/// ||pi(g) T pi(g)^* - T||_2^2 <= |gF delta F| / |F|.
pub fn amenability_witness(pi: &FinRep, f: &FolnerSet) -> Result<(HSOperator, Vec<GenReport>)> {
    if pi.dim < 1 {
        return Err(DomainError::DimMismatch("representation must be nonzero".into()));
    }
    let elems: Vec<GroupElem> = match (pi.group, f) {
        (GroupTag::H3, FolnerSet::H3 { elements, .. }) => {
            elements.iter().map(|e| GroupElem::Heis(*e)).collect()
        }
        (GroupTag::Zd(d), FolnerSet::Zd { d: d2, points }) if d == *d2 => {
            points.iter().map(|p| GroupElem::Lattice(p.clone())).collect()
        }
        _ => {
            return Err(DomainError::GroupMismatch(
                "representation and Folner set belong to different groups".into(),
            ))
        }
    };
    let n = pi.dim;
    let mut avg = DMatrix::<Complex64>::zeros(n, n);
    match (pi.group, f) {
        // The rank-one term (pi(h) e_1)(pi(h) e_1)^H only depends on h
        // through X^x Y^y e_1: the central factor is a scalar phase that
        // cancels in the outer product, so the z-range of the box enters
        // as a multiplicity.
        (GroupTag::H3, FolnerSet::H3 { radius, .. }) => {
            let r = *radius as i64;
            let mut xpow: HashMap<i64, DMatrix<Complex64>> = HashMap::new();
            xpow.insert(0, DMatrix::identity(n, n));
            for x in 1..=r {
                let prev = xpow[&(x - 1)].clone();
                xpow.insert(x, &pi.gens[0] * prev);
                let prev = xpow[&(1 - x)].clone();
                xpow.insert(-x, pi.gens[0].adjoint() * prev);
            }
            let mut e1 = DVector::<Complex64>::zeros(n);
            e1[0] = Complex64::new(1.0, 0.0);
            let mut ycol: HashMap<i64, DVector<Complex64>> = HashMap::new();
            ycol.insert(0, e1);
            for y in 1..=r {
                let prev = ycol[&(y - 1)].clone();
                ycol.insert(y, &pi.gens[1] * prev);
                let prev = ycol[&(1 - y)].clone();
                ycol.insert(-y, pi.gens[1].adjoint() * prev);
            }
            for x in -r..=r {
                for y in -r..=r {
                    let col = &xpow[&x] * &ycol[&y];
                    for i in 0..n {
                        for j in 0..n {
                            avg[(i, j)] += col[i] * col[j].conj();
                        }
                    }
                }
            }
            // each (x, y) cell carries the full central range
            avg /= Complex64::new(((2 * r + 1) * (2 * r + 1)) as f64, 0.0);
        }
        _ => {
            for e in &elems {
                let m = pi.apply(e)?;
                let col = m.column(0);
                for i in 0..n {
                    for j in 0..n {
                        avg[(i, j)] += col[i] * col[j].conj();
                    }
                }
            }
            avg /= Complex64::new(elems.len() as f64, 0.0);
        }
    }
    let t = sqrt_psd(&avg)?;

    let mut reports = Vec::new();
    for g in pi.generator_elems() {
        let pg = pi.apply(&g)?;
        let defect = hs_norm(&(&pg * &t * pg.adjoint() - &t));
        let ratio = folner_ratio(f, &g)?;
        let ratio_f = crate::exact::rational_to_f64(&ratio);
        let ok = defect * defect <= ratio_f + 1e-9;
        if !ok {
            return Err(DomainError::NumericalFailure(format!(
                "averaging bound violated at {}: {} > {}",
                g.label(),
                defect * defect,
                ratio_f
            )));
        }
        reports.push(GenReport {
            generator: g.label(),
            defect_sq: defect * defect,
            folner_ratio: format_rational(&ratio),
            bound_ok: ok,
        });
    }
    Ok((HSOperator::new(t).normalized()?, reports))
}

/// Coset spaces supported by the almost-invariant vector construction.
/// H3(Z)/Gamma1 is coordinatized by the Y-exponent, H3(Z)/Gamma2 by the
/// X-exponent, both with translation actions through the quotient.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CosetSpace {
    H3ModGamma1,
    H3ModGamma2,
    Zd(usize),
}

fn coset_coordinate(space: CosetSpace, g: &GroupElem) -> Result<Vec<i64>> {
    match (space, g) {
        (CosetSpace::H3ModGamma1, GroupElem::Heis(h)) => Ok(vec![h.y]),
        (CosetSpace::H3ModGamma2, GroupElem::Heis(h)) => Ok(vec![h.x]),
        (CosetSpace::Zd(d), GroupElem::Lattice(v)) if v.len() == d => Ok(v.clone()),
        _ => Err(DomainError::UnsupportedCosetSpace(
            "element does not act on this coset space".into(),
        )),
    }
}

/// Square-root-averaged indicator vector f = ((1/|F|) sum_{h in F}
/// delta_{h x})^(1/2) on the orbit of the basepoint, with per-generator
/// defects ||pi_X(g) f - f||^2 checked against the boundary ratio via
/// |r^(1/2) - s^(1/2)|^2 <= |r - s|.
pub fn greenleaf_vector(
    space: CosetSpace,
    f: &FolnerSet,
    basepoint: &[i64],
) -> Result<(Vec<(Vec<i64>, f64)>, Vec<GenReport>)> {
    let elems: Vec<GroupElem> = match (space, f) {
        (CosetSpace::H3ModGamma1 | CosetSpace::H3ModGamma2, FolnerSet::H3 { elements, .. }) => {
            elements.iter().map(|e| GroupElem::Heis(*e)).collect()
        }
        (CosetSpace::Zd(d), FolnerSet::Zd { d: d2, .. }) if d == *d2 => match f {
            FolnerSet::Zd { points, .. } => {
                points.iter().map(|p| GroupElem::Lattice(p.clone())).collect()
            }
            _ => unreachable!(),
        },
        _ => {
            return Err(DomainError::UnsupportedCosetSpace(
                "Folner set does not match the coset space".into(),
            ))
        }
    };
    let dim = match space {
        CosetSpace::Zd(d) => d,
        _ => 1,
    };
    if basepoint.len() != dim {
        return Err(DomainError::UnsupportedCosetSpace(
            "basepoint has the wrong coordinate rank".into(),
        ));
    }
    let total = elems.len() as f64;
    let mut counts: HashMap<Vec<i64>, u64> = HashMap::new();
    for e in &elems {
        let mut c = coset_coordinate(space, e)?;
        for (ci, bi) in c.iter_mut().zip(basepoint) {
            *ci += bi;
        }
        *counts.entry(c).or_insert(0) += 1;
    }
    let vec_f: HashMap<Vec<i64>, f64> = counts
        .iter()
        .map(|(k, &c)| (k.clone(), (c as f64 / total).sqrt()))
        .collect();

    let gens: Vec<GroupElem> = match space {
        CosetSpace::Zd(d) => (0..d)
            .map(|i| {
                let mut v = vec![0i64; d];
                v[i] = 1;
                GroupElem::Lattice(v)
            })
            .collect(),
        _ => vec![
            GroupElem::Heis(HeisElem::X),
            GroupElem::Heis(HeisElem::Y),
            GroupElem::Heis(HeisElem::Z),
        ],
    };
    let mut reports = Vec::new();
    for g in gens {
        let shift = coset_coordinate(space, &g)?;
        // (pi(g) f)(pt) = f(g^-1 pt) = f(pt - shift)
        let mut support: HashSet<Vec<i64>> = vec_f.keys().cloned().collect();
        for k in vec_f.keys() {
            let moved: Vec<i64> = k.iter().zip(&shift).map(|(a, b)| a + b).collect();
            support.insert(moved);
        }
        let mut defect_sq = 0.0;
        for pt in &support {
            let back: Vec<i64> = pt.iter().zip(&shift).map(|(a, b)| a - b).collect();
            let moved = vec_f.get(&back).copied().unwrap_or(0.0);
            let here = vec_f.get(pt).copied().unwrap_or(0.0);
            defect_sq += (moved - here) * (moved - here);
        }
        let ratio = folner_ratio(f, &g)?;
        let ratio_f = crate::exact::rational_to_f64(&ratio);
        let ok = defect_sq <= ratio_f + 1e-9;
        if !ok {
            return Err(DomainError::NumericalFailure(format!(
                "almost-invariance bound violated at {}",
                g.label()
            )));
        }
        reports.push(GenReport {
            generator: g.label(),
            defect_sq,
            folner_ratio: format_rational(&ratio),
            bound_ok: ok,
        });
    }
    let mut out: Vec<(Vec<i64>, f64)> = vec_f.into_iter().collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((out, reports))
}

/// Exact unitary intertwiner between two representations with the same
/// parameter point: W = v^k u^l, where the exponents solve z^k = ratio of
/// the chosen X-roots and z^-l = ratio of the Y-roots. The congruence
/// solution is tried first and a full scan is the fallback; the result is
/// certified by its commutation defect.
pub fn exact_intertwiner(pi: &HeisIrrep, rho: &HeisIrrep) -> Result<Option<HSOperator>> {
    let p1 = heis_prim_of_irrep(pi)?;
    let p2 = heis_prim_of_irrep(rho)?;
    if p1 != p2 {
        return Err(DomainError::PrimMismatch(format!("{p1:?} vs {p2:?}")));
    }
    let n = pi.n as i64;
    let z_angle = p1.z().rational_part().clone();
    let (u, v) = clock_and_shift(pi.n, &z_angle);
    // the generator relations hold by construction of HeisIrrep, so the
    // validating constructor is skipped here
    let rep_pi = FinRep {
        group: GroupTag::H3,
        dim: pi.n,
        gens: vec![pi.mat_x.clone(), pi.mat_y.clone(), pi.mat_z.clone()],
    };
    let rep_rho = FinRep {
        group: GroupTag::H3,
        dim: rho.n,
        gens: vec![rho.mat_x.clone(), rho.mat_y.clone(), rho.mat_z.clone()],
    };
    let gens = rep_pi.generator_elems();

    let try_pair = |k: i64, l: i64| -> Result<Option<HSOperator>> {
        let w = mat_power(&v, k) * mat_power(&u, l);
        let cand = HSOperator::new(w).normalized()?;
        if hs_defect(&cand, &rep_pi, &rep_rho, &gens)? <= 1e-9 {
            Ok(Some(cand))
        } else {
            Ok(None)
        }
    };

    // Congruence solution: z = c/n primitive, so c is invertible mod n.
    let c = (z_angle * crate::exact::rat_int(n))
        .to_integer()
        .to_i64()
        .unwrap_or(0);
    let delta_a = ((&rho.root_a - &pi.root_a) * crate::exact::rat_int(n)).to_integer();
    let delta_b = ((&rho.root_b - &pi.root_b) * crate::exact::rat_int(n)).to_integer();
    if let (Some(da), Some(db)) = (delta_a.to_i64(), delta_b.to_i64()) {
        if let Some(c_inv) = mod_inverse(c.rem_euclid(n.max(1)), n) {
            let k = (c_inv * da.rem_euclid(n)).rem_euclid(n);
            let l = (-c_inv * db.rem_euclid(n)).rem_euclid(n);
            if let Some(w) = try_pair(k, l)? {
                return Ok(Some(w));
            }
        }
    }
    // Fallback scan.
    for k in 0..n {
        for l in 0..n {
            if let Some(w) = try_pair(k, l)? {
                return Ok(Some(w));
            }
        }
    }
    Ok(None)
}

fn mod_inverse(a: i64, n: i64) -> Option<i64> {
    if n <= 1 {
        return Some(0);
    }
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (n, a.rem_euclid(n));
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r > 1 {
        None
    } else {
        Some(t.rem_euclid(n))
    }
}

/// Approximate intertwiner from frame data: given a reference frame
/// (eta_h), an operator Q compressed to its span, and frames (xi_h) in
/// H_pi and (xi'_h) in H_rho indexed by the same set, build
/// T = sum q_{k'k} a_{k',h'} conj(a_{k,h}) theta_{xi'_{h'}, xi_h}
/// where e_k = sum_h a_{k,h} eta_h is an orthonormal basis of the span.
/// No a-priori defect bound is asserted; the measured defects are
/// returned, and exactly matching inputs reproduce Q itself.
pub fn approx_intertwiner_from_states(
    pi: &FinRep,
    rho: &FinRep,
    q_ref: &HSOperator,
    ref_frame: &[DVector<Complex64>],
    pi_frame: &[DVector<Complex64>],
    rho_frame: &[DVector<Complex64>],
    test_elems: &[GroupElem],
) -> Result<(HSOperator, Vec<(String, f64)>)> {
    let e = ref_frame.len();
    if e == 0 || pi_frame.len() != e || rho_frame.len() != e {
        return Err(DomainError::FrameMismatch(format!(
            "frame sizes {} / {} / {} must agree and be nonzero",
            e,
            pi_frame.len(),
            rho_frame.len()
        )));
    }
    for xi in pi_frame {
        if xi.len() != pi.dim {
            return Err(DomainError::FrameMismatch("pi frame dimension mismatch".into()));
        }
    }
    for xi in rho_frame {
        if xi.len() != rho.dim {
            return Err(DomainError::FrameMismatch("rho frame dimension mismatch".into()));
        }
    }
    let ref_dim = ref_frame[0].len();
    if q_ref.mat.nrows() != ref_dim || q_ref.mat.ncols() != ref_dim {
        return Err(DomainError::FrameMismatch(
            "reference operator must act on the reference space".into(),
        ));
    }

    // Gram-Schmidt with coefficient tracking: e_k = sum_h a[k][h] eta_h.
    let mut basis: Vec<DVector<Complex64>> = Vec::new();
    let mut coeffs: Vec<Vec<Complex64>> = Vec::new();
    for (h, eta) in ref_frame.iter().enumerate() {
        let mut w = eta.clone();
        let mut a_row = vec![Complex64::zero(); e];
        a_row[h] = Complex64::new(1.0, 0.0);
        for (k, ek) in basis.iter().enumerate() {
            let inner = ek.dotc(eta);
            w -= ek * inner;
            for x in 0..e {
                a_row[x] -= inner * coeffs[k][x];
            }
        }
        let nrm = w.norm();
        if nrm > 1e-9 {
            basis.push(w / Complex64::new(nrm, 0.0));
            for x in a_row.iter_mut() {
                *x /= Complex64::new(nrm, 0.0);
            }
            coeffs.push(a_row);
        }
    }
    let kdim = basis.len();
    if kdim == 0 {
        return Err(DomainError::FrameMismatch("reference frame spans nothing".into()));
    }
    // Compress Q to the orthonormal basis.
    let mut q = DMatrix::<Complex64>::zeros(kdim, kdim);
    for kk in 0..kdim {
        for ll in 0..kdim {
            q[(kk, ll)] = basis[kk].dotc(&(&q_ref.mat * &basis[ll]));
        }
    }
    // C_{h'h} = sum_{k',k} a_{k',h'} q_{k'k} conj(a_{k,h}).
    let mut c = DMatrix::<Complex64>::zeros(e, e);
    for hp in 0..e {
        for h in 0..e {
            let mut acc = Complex64::zero();
            for kp in 0..kdim {
                for k in 0..kdim {
                    acc += coeffs[kp][hp] * q[(kp, k)] * coeffs[k][h].conj();
                }
            }
            c[(hp, h)] = acc;
        }
    }
    // T = Xi' C Xi^H
    let mut t = DMatrix::<Complex64>::zeros(rho.dim, pi.dim);
    for hp in 0..e {
        for h in 0..e {
            let w = c[(hp, h)];
            if w.norm() < 1e-15 {
                continue;
            }
            for i in 0..rho.dim {
                for j in 0..pi.dim {
                    t[(i, j)] += w * rho_frame[hp][i] * pi_frame[h][j].conj();
                }
            }
        }
    }
    let t = HSOperator::new(t).normalized()?;
    let mut report = Vec::new();
    for g in test_elems {
        let d = hs_defect(&t, pi, rho, std::slice::from_ref(g))?;
        report.push((g.label(), d));
    }
    Ok((t, report))
}
