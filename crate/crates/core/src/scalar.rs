//! Exact ordered-field arithmetic over ℚ and real quadratic fields ℚ(√d).
//!
//! A [`Scalar`] is `a + b·√d` with `a, b` rational. Rational scalars carry
//! `d = 0` and `b = 0`, so a rational value is interoperable with any
//! quadratic field. Signs are decided with the conjugate-norm test; no
//! floating point is ever consulted for a decision.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScalarError {
    #[error("field mismatch: sqrt({0}) vs sqrt({1})")]
    FieldMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("syntax error in scalar `{0}`")]
    Syntax(String),
    #[error("scalar `{text}` is not in field {field}")]
    NotInField { text: String, field: FieldSpec },
    #[error("invalid field: {0}")]
    InvalidField(String),
}

/// The ambient field of a system's coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSpec {
    Rational,
    Quadratic { d: u32 },
}

impl FieldSpec {
    pub fn quadratic(d: u32) -> Result<Self, ScalarError> {
        if d < 2 || !is_square_free(d) {
            return Err(ScalarError::InvalidField(format!(
                "d = {d} must be square-free and at least 2"
            )));
        }
        Ok(FieldSpec::Quadratic { d })
    }

    pub fn validate(&self) -> Result<(), ScalarError> {
        match *self {
            FieldSpec::Rational => Ok(()),
            FieldSpec::Quadratic { d } => FieldSpec::quadratic(d).map(|_| ()),
        }
    }

    pub fn contains(&self, x: &Scalar) -> bool {
        match *self {
            FieldSpec::Rational => x.is_rational(),
            FieldSpec::Quadratic { d } => x.is_rational() || x.d == d,
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rational => write!(f, "Q"),
            FieldSpec::Quadratic { d } => write!(f, "Q(sqrt({d}))"),
        }
    }
}

/// Sign of `x + y√d` for integers, by comparing `x²` with `y²d` when the
/// signs differ.
fn sign_of(x: &BigInt, y: &BigInt, d: u32) -> Ordering {
    let (sx, sy) = (x.sign(), y.sign());
    let to_ord = |s: Sign| match s {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    };
    if sy == Sign::NoSign {
        return to_ord(sx);
    }
    if sx == Sign::NoSign || sx == sy {
        return to_ord(sy);
    }
    match (x * x).cmp(&(y * y * BigInt::from(d))) {
        Ordering::Greater => to_ord(sx),
        Ordering::Less => to_ord(sy),
        Ordering::Equal => unreachable!("d is not a perfect square"),
    }
}

fn is_square_free(d: u32) -> bool {
    let mut k = 2u32;
    while k.saturating_mul(k) <= d {
        if d.is_multiple_of(k * k) {
            return false;
        }
        k += 1;
    }
    true
}

/// `rat + irr·√d`, canonical: `irr == 0` iff `d == 0`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    rat: BigRational,
    irr: BigRational,
    d: u32,
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar { rat: BigRational::zero(), irr: BigRational::zero(), d: 0 }
    }

    pub fn one() -> Self {
        Scalar::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        Scalar::from_rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Scalar::from_rational(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar { rat: r, irr: BigRational::zero(), d: 0 }
    }

    /// `rat + irr·√d`. Panics if `d` is not a valid quadratic field parameter.
    pub fn quadratic(rat: BigRational, irr: BigRational, d: u32) -> Self {
        if irr.is_zero() {
            return Scalar::from_rational(rat);
        }
        assert!(d >= 2 && is_square_free(d), "invalid quadratic field d = {d}");
        Scalar { rat, irr, d }
    }

    /// `√d` itself.
    pub fn sqrt(d: u32) -> Self {
        Scalar::quadratic(BigRational::zero(), BigRational::one(), d)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.rat
    }

    pub fn irrational_part(&self) -> &BigRational {
        &self.irr
    }

    /// `0` for rational scalars.
    pub fn radicand(&self) -> u32 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.irr.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.rat.is_zero() && self.irr.is_zero()
    }

    fn common_d(&self, other: &Scalar) -> Result<u32, ScalarError> {
        match (self.d, other.d) {
            (0, d) | (d, 0) => Ok(d),
            (a, b) if a == b => Ok(a),
            (a, b) => Err(ScalarError::FieldMismatch(a, b)),
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        let d = self.common_d(other)?;
        Ok(Scalar::quadratic(&self.rat + &other.rat, &self.irr + &other.irr, d))
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        let d = self.common_d(other)?;
        Ok(Scalar::quadratic(&self.rat - &other.rat, &self.irr - &other.irr, d))
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        let d = self.common_d(other)?;
        let dd = BigRational::from_integer(BigInt::from(d));
        let rat = &self.rat * &other.rat + &self.irr * &other.irr * dd;
        let irr = &self.rat * &other.irr + &self.irr * &other.rat;
        Ok(Scalar::quadratic(rat, irr, d))
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        let d = self.common_d(other)?;
        if other.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        if other.is_rational() {
            return Ok(Scalar::quadratic(&self.rat / &other.rat, &self.irr / &other.rat, d));
        }
        // x / y = x·ȳ / N(y), N(y) = a² − b²d is a nonzero rational.
        let norm = other.norm();
        let conj = other.conjugate();
        let num = self.checked_mul(&conj)?;
        Ok(Scalar::quadratic(&num.rat / &norm, &num.irr / &norm, d))
    }

    pub fn conjugate(&self) -> Scalar {
        Scalar::quadratic(self.rat.clone(), -self.irr.clone(), self.d)
    }

    /// Field norm `a² − b²d`.
    pub fn norm(&self) -> BigRational {
        let dd = BigRational::from_integer(BigInt::from(self.d));
        &self.rat * &self.rat - &self.irr * &self.irr * dd
    }

    /// Exact sign in the real embedding with `√d > 0`.
    pub fn signum(&self) -> Ordering {
        let (p, q) = (self.rat.numer(), self.rat.denom());
        let (r, t) = (self.irr.numer(), self.irr.denom());
        sign_of(&(p * t), &(r * q), self.d)
    }

    pub fn checked_cmp(&self, other: &Scalar) -> Result<Ordering, ScalarError> {
        let d = self.common_d(other)?;
        // Numerators of the differences over the positive denominators
        // `q1 q2` and `t1 t2`, scaled to a common one.
        let (p1, q1, p2, q2) = (self.rat.numer(), self.rat.denom(), other.rat.numer(), other.rat.denom());
        let (r1, t1, r2, t2) = (self.irr.numer(), self.irr.denom(), other.irr.numer(), other.irr.denom());
        let x = (p1 * q2 - p2 * q1) * (t1 * t2);
        let y = (r1 * t2 - r2 * t1) * (q1 * q2);
        Ok(sign_of(&x, &y, d))
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Scalar {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn half(&self) -> Scalar {
        let two = BigRational::from_integer(BigInt::from(2));
        Scalar::quadratic(&self.rat / &two, &self.irr / &two, self.d)
    }

    pub fn min(self, other: Scalar) -> Scalar {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Scalar) -> Scalar {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn to_f64(&self) -> f64 {
        let a = ratio_to_f64(&self.rat);
        if self.is_rational() {
            return a;
        }
        a + ratio_to_f64(&self.irr) * f64::from(self.d).sqrt()
    }

    pub fn field(&self) -> FieldSpec {
        if self.d == 0 {
            FieldSpec::Rational
        } else {
            FieldSpec::Quadratic { d: self.d }
        }
    }
}

pub(crate) fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(x) = r.to_f64() {
        return x;
    }
    // Huge numerators/denominators: shift both down to a common scale.
    let n = r.numer();
    let m = r.denom();
    let shift = n.bits().max(m.bits()).saturating_sub(1000);
    let n = n >> shift;
    let m = m >> shift;
    n.to_f64().unwrap_or(f64::NAN) / m.to_f64().unwrap_or(f64::NAN)
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order of the real embedding. Panics on mixed quadratic fields;
/// values inside one validated system always share a field.
impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.checked_cmp(other).expect("comparison across quadratic fields")
    }
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                self.$checked(rhs).expect(concat!("Scalar::", stringify!($method)))
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar::quadratic(-self.rat.clone(), -self.irr.clone(), self.d)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::from_int(n)
    }
}

fn fmt_ratio(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Text grammar: `a/b`, `a`, `a/b ± c/e*sqrt(d)`, `c/e*sqrt(d)`; a unit
/// coefficient is omitted.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            return write!(f, "{}", fmt_ratio(&self.rat));
        }
        let coef = |c: &BigRational| if c.is_one() { String::new() } else { format!("{}*", fmt_ratio(c)) };
        if self.rat.is_zero() {
            let sign = if self.irr.is_negative() { "-" } else { "" };
            write!(f, "{sign}{}sqrt({})", coef(&self.irr.abs()), self.d)
        } else {
            let sign = if self.irr.is_negative() { '-' } else { '+' };
            write!(f, "{} {sign} {}sqrt({})", fmt_ratio(&self.rat), coef(&self.irr.abs()), self.d)
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

fn parse_ratio(text: &str, whole: &str) -> Result<BigRational, ScalarError> {
    let syntax = || ScalarError::Syntax(whole.to_string());
    let (p, q) = match text.split_once('/') {
        Some((p, q)) => (p, q),
        None => (text, "1"),
    };
    let p: BigInt = p.parse().map_err(|_| syntax())?;
    let q: BigInt = q.parse().map_err(|_| syntax())?;
    if q.is_zero() {
        return Err(ScalarError::DivisionByZero);
    }
    Ok(BigRational::new(p, q))
}

/// Parses without a field constraint; the field is inferred from `sqrt(d)`.
pub fn parse_scalar_any(text: &str) -> Result<Scalar, ScalarError> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let syntax = || ScalarError::Syntax(text.to_string());
    if s.is_empty() {
        return Err(syntax());
    }
    let Some(idx) = s.find("sqrt(") else {
        return Ok(Scalar::from_rational(parse_ratio(&s, text)?));
    };
    let inner = s[idx + 5..].strip_suffix(')').ok_or_else(syntax)?;
    let d: u32 = inner.parse().map_err(|_| syntax())?;
    if d < 2 || !is_square_free(d) {
        return Err(ScalarError::InvalidField(format!("sqrt({d})")));
    }
    let before = &s[..idx];
    // Split `before` into the rational part and the coefficient of √d at the
    // first sign that follows a digit.
    let bytes = before.as_bytes();
    let split = (1..bytes.len())
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1].is_ascii_digit());
    let (rat, coef, negate) = match split {
        Some(i) => (&before[..i], &before[i + 1..], bytes[i] == b'-'),
        None => ("0", before, false),
    };
    let rat = parse_ratio(rat, text)?;
    let coef = coef.strip_suffix('*').unwrap_or(coef);
    let mut irr = match coef {
        "" | "+" => BigRational::one(),
        "-" => -BigRational::one(),
        c => parse_ratio(c.strip_prefix('+').unwrap_or(c), text)?,
    };
    if negate {
        irr = -irr;
    }
    Ok(Scalar::quadratic(rat, irr, d))
}

/// Parses and checks membership in `field`.
pub fn parse_scalar(text: &str, field: FieldSpec) -> Result<Scalar, ScalarError> {
    let x = parse_scalar_any(text)?;
    if !field.contains(&x) {
        return Err(ScalarError::NotInField { text: text.to_string(), field });
    }
    Ok(x)
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_scalar_any(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn phi() -> Scalar {
        parse_scalar("-1/2 + 1/2*sqrt(5)", FieldSpec::Quadratic { d: 5 }).unwrap()
    }

    #[test]
    fn compare_examples() {
        let half = Scalar::from_ratio(1, 2);
        assert_eq!(half.cmp(&Scalar::from_ratio(1, 2)), Ordering::Equal);
        assert_eq!(Scalar::from_ratio(2, 3).cmp(&Scalar::from_ratio(3, 4)), Ordering::Less);
        // √5·½ − 1 ≈ 0.118 > 0
        let x = Scalar::sqrt(5) * Scalar::from_ratio(1, 2) - Scalar::one();
        assert_eq!(x.cmp(&Scalar::zero()), Ordering::Greater);
        assert!(phi() > Scalar::from_ratio(61, 100) && phi() < Scalar::from_ratio(62, 100));
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(Scalar::from_ratio(1, 3) + Scalar::from_ratio(1, 6), Scalar::from_ratio(1, 2));
        // φ² = 1 − φ = (3 − √5)/2
        let p = phi();
        let expected = parse_scalar_any("3/2 - 1/2*sqrt(5)").unwrap();
        assert_eq!(&p * &p, expected);
        assert_eq!(&p * &p, Scalar::one() - &p);
        assert!((&p - &p).is_zero());
        assert_eq!(&p / &p, Scalar::one());
    }

    #[test]
    fn errors() {
        assert_eq!(parse_scalar_any("1/0"), Err(ScalarError::DivisionByZero));
        assert!(matches!(parse_scalar_any("abc"), Err(ScalarError::Syntax(_))));
        assert!(matches!(
            parse_scalar("sqrt(5)", FieldSpec::Quadratic { d: 2 }),
            Err(ScalarError::NotInField { .. })
        ));
        assert!(matches!(parse_scalar("sqrt(5)", FieldSpec::Rational), Err(ScalarError::NotInField { .. })));
        assert_eq!(
            Scalar::sqrt(2).checked_add(&Scalar::sqrt(3)),
            Err(ScalarError::FieldMismatch(2, 3))
        );
        assert_eq!(Scalar::one().checked_div(&Scalar::zero()), Err(ScalarError::DivisionByZero));
        assert!(FieldSpec::quadratic(4).is_err());
        assert!(FieldSpec::quadratic(1).is_err());
        assert!(FieldSpec::quadratic(6).is_ok());
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_scalar_any("3/2").unwrap(), Scalar::from_ratio(3, 2));
        assert_eq!(parse_scalar_any("7").unwrap(), Scalar::from_int(7));
        assert_eq!(parse_scalar_any("sqrt(5)").unwrap(), Scalar::sqrt(5));
        assert_eq!(parse_scalar_any("-sqrt(5)").unwrap(), -Scalar::sqrt(5));
        assert_eq!(parse_scalar_any("1 - sqrt(5)").unwrap(), Scalar::one() - Scalar::sqrt(5));
        assert_eq!(
            parse_scalar_any("1/2 + -1/2*sqrt(5)").unwrap(),
            parse_scalar_any("1/2 - 1/2*sqrt(5)").unwrap()
        );
        assert_eq!(parse_scalar_any("-3/4*sqrt(2)").unwrap().to_string(), "-3/4*sqrt(2)");
    }

    fn arb_scalar() -> impl Strategy<Value = Scalar> {
        (-50i64..50, 1i64..20, -50i64..50, 1i64..20, prop::sample::select(vec![0u32, 5]))
            .prop_map(|(a, b, c, e, d)| {
                let rat = BigRational::new(a.into(), b.into());
                if d == 0 {
                    Scalar::from_rational(rat)
                } else {
                    Scalar::quadratic(rat, BigRational::new(c.into(), e.into()), d)
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn total_order(x in arb_scalar(), y in arb_scalar(), z in arb_scalar()) {
            let lt = x < y;
            let eq = x == y;
            let gt = x > y;
            prop_assert_eq!(u8::from(lt) + u8::from(eq) + u8::from(gt), 1);
            if x <= y && y <= z {
                prop_assert!(x <= z);
            }
        }

        #[test]
        fn field_axioms(x in arb_scalar(), y in arb_scalar(), z in arb_scalar()) {
            prop_assert_eq!((&x + &y) + &z, &x + (&y + &z));
            prop_assert_eq!((&x * &y) * &z, &x * (&y * &z));
            prop_assert_eq!(&x * (&y + &z), &x * &y + &x * &z);
            prop_assert!((&x + &(-&x)).is_zero());
            if !x.is_zero() {
                prop_assert_eq!(&x * &(Scalar::one() / &x), Scalar::one());
            }
        }

        #[test]
        fn text_round_trip(x in arb_scalar()) {
            prop_assert_eq!(parse_scalar_any(&x.to_string()).unwrap(), x);
        }

        #[test]
        fn sign_agrees_with_float(x in arb_scalar(), y in arb_scalar()) {
            let approx = x.to_f64() - y.to_f64();
            if approx.abs() > 1e-9 {
                prop_assert_eq!(x.cmp(&y), if approx > 0.0 { Ordering::Greater } else { Ordering::Less });
            }
        }
    }
}
