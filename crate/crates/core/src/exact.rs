//! Exact arithmetic over the ring `Q[theta]`, where theta is a formal
//! transcendental symbol, plus torus elements with decidable torsion order
//! and rational interval enclosures for numeric sign decisions.
//!
//! Classification logic never evaluates theta numerically. The enclosure is
//! only consulted to decide signs of nonzero elements and to produce float
//! witnesses.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{DomainError, Result};

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parse "p/q" or "p" into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let mk_err = || DomainError::InvalidInput(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let num: BigInt = p.trim().parse().map_err(|_| mk_err())?;
        let den: BigInt = q.trim().parse().map_err(|_| mk_err())?;
        if den.is_zero() {
            return Err(DomainError::InvalidInput("zero denominator".into()));
        }
        Ok(BigRational::new(num, den))
    } else {
        let num: BigInt = s.parse().map_err(|_| mk_err())?;
        Ok(BigRational::from_integer(num))
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let approx = BigRational::new(
            r.numer() * BigInt::from(1_000_000i64) / r.denom(),
            BigInt::from(1_000_000i64),
        );
        approx.to_f64().unwrap_or(f64::NAN)
    })
}

/// Element of `Q[theta]`: `coeffs[i]` is the coefficient of `theta^i`.
/// Canonical form strips trailing zeros; the zero element has empty coeffs.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct QTheta {
    coeffs: Vec<BigRational>,
}

impl QTheta {
    pub fn zero() -> Self {
        QTheta { coeffs: vec![] }
    }

    pub fn one() -> Self {
        QTheta::from_rational(BigRational::one())
    }

    pub fn from_rational(c: BigRational) -> Self {
        QTheta { coeffs: vec![c] }.normalized()
    }

    pub fn from_int(n: i64) -> Self {
        QTheta::from_rational(rat_int(n))
    }

    pub fn theta() -> Self {
        QTheta {
            coeffs: vec![BigRational::zero(), BigRational::one()],
        }
    }

    /// a + b*theta
    pub fn linear(a: BigRational, b: BigRational) -> Self {
        QTheta { coeffs: vec![a, b] }.normalized()
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        QTheta { coeffs }.normalized()
    }

    fn normalized(mut self) -> Self {
        while let Some(last) = self.coeffs.last() {
            if last.is_zero() {
                self.coeffs.pop();
            } else {
                break;
            }
        }
        self
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// True iff every coefficient of degree >= 1 vanishes.
    pub fn is_rational(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        if self.is_rational() {
            Some(self.coeff(0))
        } else {
            None
        }
    }

    pub fn constant_part(&self) -> BigRational {
        self.coeff(0)
    }

    pub fn theta_part(&self) -> BigRational {
        self.coeff(1)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        QTheta {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
        .normalized()
    }

    /// Multiplicative inverse, defined only for nonzero rationals. Units of
    /// `Q[theta]` are exactly the nonzero constants.
    pub fn recip(&self) -> Option<QTheta> {
        let r = self.as_rational()?;
        if r.is_zero() {
            None
        } else {
            Some(QTheta::from_rational(r.recip()))
        }
    }

    /// Evaluate on a rational interval [lo, hi] by interval arithmetic.
    pub fn eval_interval(&self, lo: &BigRational, hi: &BigRational) -> (BigRational, BigRational) {
        let mut acc_lo = BigRational::zero();
        let mut acc_hi = BigRational::zero();
        // Horner from the top coefficient down.
        for c in self.coeffs.iter().rev() {
            // acc <- acc * [lo,hi] + c
            let products = [&acc_lo * lo, &acc_lo * hi, &acc_hi * lo, &acc_hi * hi];
            let mut new_lo = products[0].clone();
            let mut new_hi = products[0].clone();
            for p in &products[1..] {
                if *p < new_lo {
                    new_lo = p.clone();
                }
                if *p > new_hi {
                    new_hi = p.clone();
                }
            }
            acc_lo = new_lo + c;
            acc_hi = new_hi + c;
        }
        (acc_lo, acc_hi)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + rational_to_f64(c);
        }
        acc
    }
}

impl fmt::Debug for QTheta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for QTheta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", format_rational(c))?,
                1 => write!(f, "{}*theta", format_rational(c))?,
                _ => write!(f, "{}*theta^{}", format_rational(c), i)?,
            }
        }
        Ok(())
    }
}

impl Add for &QTheta {
    type Output = QTheta;
    fn add(self, rhs: &QTheta) -> QTheta {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect();
        QTheta { coeffs }.normalized()
    }
}

impl Sub for &QTheta {
    type Output = QTheta;
    fn sub(self, rhs: &QTheta) -> QTheta {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect();
        QTheta { coeffs }.normalized()
    }
}

impl Mul for &QTheta {
    type Output = QTheta;
    fn mul(self, rhs: &QTheta) -> QTheta {
        if self.is_zero() || rhs.is_zero() {
            return QTheta::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] = &coeffs[i + j] + &(a * b);
            }
        }
        QTheta { coeffs }.normalized()
    }
}

impl Neg for &QTheta {
    type Output = QTheta;
    fn neg(self) -> QTheta {
        QTheta {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

/// Serialized as {"coeffs":[["num","den"],...]}.
impl Serialize for QTheta {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let pairs: Vec<[String; 2]> = self
            .coeffs
            .iter()
            .map(|c| [c.numer().to_string(), c.denom().to_string()])
            .collect();
        let mut s = serializer.serialize_struct("QTheta", 1)?;
        s.serialize_field("coeffs", &pairs)?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for QTheta {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            coeffs: Vec<[String; 2]>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let mut coeffs = Vec::with_capacity(raw.coeffs.len());
        for [n, d] in raw.coeffs {
            let num: BigInt = n.parse().map_err(serde::de::Error::custom)?;
            let den: BigInt = d.parse().map_err(serde::de::Error::custom)?;
            if den.is_zero() {
                return Err(serde::de::Error::custom("zero denominator"));
            }
            coeffs.push(BigRational::new(num, den));
        }
        Ok(QTheta::from_coeffs(coeffs))
    }
}

/// Fraction of two `Q[theta]` elements. Used where the algebra genuinely
/// divides by theta-linear quantities (unitriangular witnesses, rescaled
/// ratio limits). Equality is by cross-multiplication.
#[derive(Clone, Debug)]
pub struct QRatio {
    num: QTheta,
    den: QTheta,
}

impl QRatio {
    pub fn new(num: QTheta, den: QTheta) -> Result<Self> {
        if den.is_zero() {
            return Err(DomainError::InvalidInput("division by zero in Q(theta)".into()));
        }
        Ok(QRatio { num, den })
    }

    pub fn from_qtheta(x: QTheta) -> Self {
        QRatio {
            num: x,
            den: QTheta::one(),
        }
    }

    pub fn from_rational(r: BigRational) -> Self {
        QRatio::from_qtheta(QTheta::from_rational(r))
    }

    pub fn zero() -> Self {
        QRatio::from_qtheta(QTheta::zero())
    }

    pub fn num(&self) -> &QTheta {
        &self.num
    }

    pub fn den(&self) -> &QTheta {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, rhs: &QRatio) -> QRatio {
        QRatio {
            num: &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            den: &self.den * &rhs.den,
        }
    }

    pub fn sub(&self, rhs: &QRatio) -> QRatio {
        QRatio {
            num: &(&self.num * &rhs.den) - &(&rhs.num * &self.den),
            den: &self.den * &rhs.den,
        }
    }

    pub fn mul(&self, rhs: &QRatio) -> QRatio {
        QRatio {
            num: &self.num * &rhs.num,
            den: &self.den * &rhs.den,
        }
    }

    pub fn div(&self, rhs: &QRatio) -> Result<QRatio> {
        if rhs.is_zero() {
            return Err(DomainError::InvalidInput("division by zero in Q(theta)".into()));
        }
        Ok(QRatio {
            num: &self.num * &rhs.den,
            den: &self.den * &rhs.num,
        })
    }

    pub fn neg(&self) -> QRatio {
        QRatio {
            num: -&self.num,
            den: self.den.clone(),
        }
    }

    pub fn eq(&self, rhs: &QRatio) -> bool {
        &self.num * &rhs.den == &rhs.num * &self.den
    }

    /// Some(r) iff the fraction reduces to a rational constant.
    pub fn as_rational(&self) -> Option<BigRational> {
        // num = c * den componentwise; cross products must vanish.
        let n = self.num.coeffs().len().max(self.den.coeffs().len());
        for i in 0..n {
            for j in (i + 1)..n {
                if self.num.coeff(i) * self.den.coeff(j) != self.num.coeff(j) * self.den.coeff(i) {
                    return None;
                }
            }
        }
        if self.num.is_zero() {
            return Some(BigRational::zero());
        }
        for i in 0..n {
            let d = self.den.coeff(i);
            if !d.is_zero() {
                return Some(self.num.coeff(i) / d);
            }
        }
        None
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.num.eval_f64(x) / self.den.eval_f64(x)
    }
}

/// Rational interval bracketing theta. The default instantiation is
/// theta = pi; refinement tightens the bracket with Machin's series
/// 16*arctan(1/5) - 4*arctan(1/239), whose alternating tails give exact
/// rational error bounds. A custom starting interval is intersected with
/// the series bounds as refinement proceeds, so it must bracket pi.
#[derive(Clone, Debug)]
pub struct ThetaEnclosure {
    lo: BigRational,
    hi: BigRational,
    terms: usize,
}

fn arctan_inv_bounds(x: i64, terms: usize) -> (BigRational, BigRational) {
    // arctan(1/x) = sum_{k>=0} (-1)^k / ((2k+1) x^(2k+1)), alternating:
    // the partial sum brackets the limit together with the next partial sum.
    let xbig = BigInt::from(x);
    let mut sum = BigRational::zero();
    let mut power = xbig.clone(); // x^(2k+1)
    let xsq = &xbig * &xbig;
    let mut partials = Vec::with_capacity(terms + 1);
    for k in 0..=terms {
        let term = BigRational::new(BigInt::one(), BigInt::from(2 * k as i64 + 1) * &power);
        if k % 2 == 0 {
            sum = sum + term;
        } else {
            sum = sum - term;
        }
        partials.push(sum.clone());
        power = &power * &xsq;
    }
    let last = partials[terms].clone();
    let prev = if terms == 0 {
        BigRational::zero()
    } else {
        partials[terms - 1].clone()
    };
    if last <= prev {
        (last, prev)
    } else {
        (prev, last)
    }
}

fn pi_bounds(terms: usize) -> (BigRational, BigRational) {
    let (lo5, hi5) = arctan_inv_bounds(5, terms);
    let (lo239, hi239) = arctan_inv_bounds(239, terms);
    let sixteen = rat_int(16);
    let four = rat_int(4);
    (&sixteen * &lo5 - &four * &hi239, &sixteen * &hi5 - &four * &lo239)
}

impl Default for ThetaEnclosure {
    fn default() -> Self {
        let (lo, hi) = pi_bounds(2);
        ThetaEnclosure { lo, hi, terms: 2 }
    }
}

impl ThetaEnclosure {
    /// Start from a user-supplied interval. It must bracket pi, because
    /// refinement intersects with Machin bounds for pi.
    pub fn with_interval(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo >= hi {
            return Err(DomainError::InvalidInput("empty enclosure".into()));
        }
        Ok(ThetaEnclosure { lo, hi, terms: 1 })
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        rational_to_f64(&(&(&self.lo + &self.hi) / rat_int(2)))
    }

    /// Strictly shrinks the interval.
    pub fn refine(&mut self) {
        self.terms += 1;
        let (lo, hi) = pi_bounds(self.terms);
        if lo > self.lo {
            self.lo = lo;
        }
        if hi < self.hi {
            self.hi = hi;
        }
    }
}

/// Sign of x at theta. Zero is decided symbolically; otherwise the enclosure
/// is refined until the interval image of x excludes zero. Terminates for
/// every nonzero polynomial since theta = pi is transcendental.
pub fn sign(x: &QTheta, enc: &ThetaEnclosure) -> i32 {
    if x.is_zero() {
        return 0;
    }
    if let Some(r) = x.as_rational() {
        return if r.is_positive() { 1 } else { -1 };
    }
    let mut enc = enc.clone();
    for _ in 0..512 {
        let (lo, hi) = x.eval_interval(&enc.lo, &enc.hi);
        if lo.is_positive() {
            return 1;
        }
        if hi.is_negative() {
            return -1;
        }
        enc.refine();
    }
    unreachable!("sign decision did not terminate; polynomial vanishes on the enclosure")
}

/// Element of the circle R/Z in the `Q[theta]` model: angle = a + b*theta
/// with a, b rational and a normalized to [0,1). Two angles are equal mod 1
/// iff the theta parts agree and the constant parts differ by an integer.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TorusElem {
    a: BigRational,
    b: BigRational,
}

fn mod1(r: &BigRational) -> BigRational {
    r - r.floor()
}

impl TorusElem {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        TorusElem { a: mod1(&a), b }
    }

    pub fn zero() -> Self {
        TorusElem::new(BigRational::zero(), BigRational::zero())
    }

    pub fn from_angle(a: BigRational) -> Self {
        TorusElem::new(a, BigRational::zero())
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn theta_part(&self) -> &BigRational {
        &self.b
    }

    pub fn is_rational_angle(&self) -> bool {
        self.b.is_zero()
    }

    /// Torsion order: the denominator of a when b = 0, infinite otherwise.
    pub fn order(&self) -> Option<BigInt> {
        if self.b.is_zero() {
            Some(self.a.denom().clone())
        } else {
            None
        }
    }

    pub fn add(&self, rhs: &TorusElem) -> TorusElem {
        TorusElem::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }

    pub fn sub(&self, rhs: &TorusElem) -> TorusElem {
        TorusElem::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }

    pub fn neg(&self) -> TorusElem {
        TorusElem::new(-&self.a, -&self.b)
    }

    pub fn mul_int(&self, k: &BigInt) -> TorusElem {
        let kr = BigRational::from_integer(k.clone());
        TorusElem::new(&self.a * &kr, &self.b * &kr)
    }

    /// Angle as an exact element of `Q[theta]` (the representative in [0,1)+Q*theta).
    pub fn angle(&self) -> QTheta {
        QTheta::linear(self.a.clone(), self.b.clone())
    }

    pub fn eval_f64(&self, theta: f64) -> f64 {
        let x = rational_to_f64(&self.a) + rational_to_f64(&self.b) * theta;
        x - x.floor()
    }
}

impl fmt::Debug for TorusElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "[{}]", format_rational(&self.a))
        } else {
            write!(f, "[{} + {}*theta]", format_rational(&self.a), format_rational(&self.b))
        }
    }
}

/// Serialized as {"a":"p/q","b":"r/s"}.
impl Serialize for TorusElem {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("TorusElem", 2)?;
        s.serialize_field("a", &format_rational(&self.a))?;
        s.serialize_field("b", &format_rational(&self.b))?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for TorusElem {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            a: String,
            #[serde(default)]
            b: Option<String>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let a = parse_rational(&raw.a).map_err(serde::de::Error::custom)?;
        let b = match raw.b {
            Some(b) => parse_rational(&b).map_err(serde::de::Error::custom)?,
            None => BigRational::zero(),
        };
        Ok(TorusElem::new(a, b))
    }
}

fn bigint_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    num_integer::Integer::gcd(a, b)
}

/// If the vector of `Q[theta]` entries lies on a rational line R*(m1..mn),
/// return the primitive integer direction, sign-normalized so that the
/// first nonzero entry is positive. Membership in R*Q^n means the matrix
/// of polynomial coefficients has rank one, so a candidate direction can
/// be read off any nonzero coefficient column; the full cross products
/// v_i * dir_j = v_j * dir_i then verify it exactly.
pub fn rational_direction(v: &[QTheta]) -> Result<Option<Vec<BigInt>>> {
    if v.iter().all(|x| x.is_zero()) {
        return Err(DomainError::ZeroVector);
    }
    let n = v.len();
    let max_deg = v.iter().filter_map(|x| x.degree()).max().unwrap();
    let mut dir: Option<Vec<BigRational>> = None;
    for k in 0..=max_deg {
        if v.iter().any(|x| !x.coeff(k).is_zero()) {
            dir = Some(v.iter().map(|x| x.coeff(k)).collect());
            break;
        }
    }
    let dir = dir.expect("nonzero vector has a nonzero coefficient column");
    for i in 0..n {
        for j in (i + 1)..n {
            let lhs = v[i].scale(&dir[j]);
            let rhs = v[j].scale(&dir[i]);
            if lhs != rhs {
                return Ok(None);
            }
        }
    }
    // Scale to a primitive integer vector.
    let mut lcm_den = BigInt::one();
    for d in &dir {
        lcm_den = num_integer::Integer::lcm(&lcm_den, d.denom());
    }
    let mut ints: Vec<BigInt> = dir
        .iter()
        .map(|d| d.numer() * (&lcm_den / d.denom()))
        .collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = bigint_gcd(&g, x);
    }
    if g.is_zero() {
        return Err(DomainError::ZeroVector);
    }
    for x in ints.iter_mut() {
        *x = &*x / &g;
    }
    if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
        if first.sign() == Sign::Minus {
            for x in ints.iter_mut() {
                *x = -&*x;
            }
        }
    }
    Ok(Some(ints))
}

impl Div for &QRatio {
    type Output = QRatio;
    fn div(self, rhs: &QRatio) -> QRatio {
        self.div(rhs).expect("division by zero")
    }
}

/// Rational values print as "p/q"; proper fractions of `Q[theta]` as
/// {"num":...,"den":...}.
impl Serialize for QRatio {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        if let Some(r) = self.as_rational() {
            format_rational(&r).serialize(serializer)
        } else {
            let mut s = serializer.serialize_struct("QRatio", 2)?;
            s.serialize_field("den", &self.den)?;
            s.serialize_field("num", &self.num)?;
            s.end()
        }
    }
}

impl<'de> Deserialize<'de> for QRatio {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Rational(String),
            Fraction { num: QTheta, den: QTheta },
        }
        match Raw::deserialize(deserializer)? {
            Raw::Rational(s) => {
                let r = parse_rational(&s).map_err(serde::de::Error::custom)?;
                Ok(QRatio::from_rational(r))
            }
            Raw::Fraction { num, den } => QRatio::new(num, den).map_err(serde::de::Error::custom),
        }
    }
}
