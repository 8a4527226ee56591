//! Exact Gaussian-rational scalars `a + b·i` with `a, b ∈ ℚ`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use rug::Rational;
use serde::de::{self, Deserializer};
use serde::ser::{SerializeStruct, Serializer};
use serde::{Deserialize, Serialize};

/// Formats a rational as `p/q`, or `p` when the denominator is one.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

/// Parses `p`, `-p` or `p/q` into a reduced rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let r = Rational::from_str(s).ok()?;
    Some(r)
}

/// Least common multiple of the denominators of `values`.
pub fn lcm_denominators<'a>(values: impl IntoIterator<Item = &'a Rational>) -> rug::Integer {
    let mut acc = rug::Integer::from(1);
    for v in values {
        acc.lcm_mut(v.denom());
    }
    acc
}

/// Exact complex number with rational real and imaginary parts.
///
/// `rug::Rational` keeps both parts in lowest terms with a positive
/// denominator, so derived equality is structural equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GaussianRational {
    re: Rational,
    im: Rational,
}

impl GaussianRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        GaussianRational { re, im }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::from_int(1)
    }

    pub fn i() -> Self {
        GaussianRational::new(Rational::new(), Rational::from(1))
    }

    pub fn from_int(n: i64) -> Self {
        GaussianRational::new(Rational::from(n), Rational::new())
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        GaussianRational::new(Rational::from(re), Rational::from(im))
    }

    /// `re_num/re_den + (im_num/im_den)·i`.
    pub fn from_fracs(re: (i64, i64), im: (i64, i64)) -> Self {
        GaussianRational::new(Rational::from(re), Rational::from(im))
    }

    pub fn real(re: Rational) -> Self {
        GaussianRational::new(re, Rational::new())
    }

    pub fn re(&self) -> &Rational {
        &self.re
    }

    pub fn im(&self) -> &Rational {
        &self.im
    }

    pub fn into_parts(self) -> (Rational, Rational) {
        (self.re, self.im)
    }

    pub fn is_zero(&self) -> bool {
        self.re.cmp0().is_eq() && self.im.cmp0().is_eq()
    }

    pub fn is_one(&self) -> bool {
        self.re == 1 && self.im.cmp0().is_eq()
    }

    pub fn is_real(&self) -> bool {
        self.im.cmp0().is_eq()
    }

    pub fn conj(&self) -> Self {
        GaussianRational::new(self.re.clone(), Rational::from(-&self.im))
    }

    /// `|x|² = re² + im²`, exact.
    pub fn norm_sqr(&self) -> Rational {
        Rational::from(&self.re * &self.re) + Rational::from(&self.im * &self.im)
    }

    pub fn checked_div(&self, rhs: &Self) -> Option<Self> {
        if rhs.is_zero() {
            return None;
        }
        let d = rhs.norm_sqr();
        let num = self * &rhs.conj();
        Some(GaussianRational::new(
            Rational::from(&num.re / &d),
            Rational::from(&num.im / &d),
        ))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = GaussianRational::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    pub fn scale(&self, r: &Rational) -> Self {
        GaussianRational::new(Rational::from(&self.re * r), Rational::from(&self.im * r))
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl From<i64> for GaussianRational {
    fn from(n: i64) -> Self {
        GaussianRational::from_int(n)
    }
}

impl From<Rational> for GaussianRational {
    fn from(r: Rational) -> Self {
        GaussianRational::real(r)
    }
}

impl<'a> Add<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            Rational::from(&self.re + &rhs.re),
            Rational::from(&self.im + &rhs.im),
        )
    }
}

impl<'a> Sub<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: &GaussianRational) -> GaussianRational {
        GaussianRational::new(
            Rational::from(&self.re - &rhs.re),
            Rational::from(&self.im - &rhs.im),
        )
    }
}

impl<'a> Mul<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: &GaussianRational) -> GaussianRational {
        let re = Rational::from(&self.re * &rhs.re) - Rational::from(&self.im * &rhs.im);
        let im = Rational::from(&self.re * &rhs.im) + Rational::from(&self.im * &rhs.re);
        GaussianRational::new(re, im)
    }
}

impl<'a> Div<&'a GaussianRational> for &'a GaussianRational {
    type Output = GaussianRational;
    fn div(self, rhs: &GaussianRational) -> GaussianRational {
        self.checked_div(rhs).expect("division by zero Gaussian rational")
    }
}

impl Neg for &GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        GaussianRational::new(Rational::from(-&self.re), Rational::from(-&self.im))
    }
}

impl Add for GaussianRational {
    type Output = GaussianRational;
    fn add(self, rhs: GaussianRational) -> GaussianRational {
        &self + &rhs
    }
}

impl Sub for GaussianRational {
    type Output = GaussianRational;
    fn sub(self, rhs: GaussianRational) -> GaussianRational {
        &self - &rhs
    }
}

impl Mul for GaussianRational {
    type Output = GaussianRational;
    fn mul(self, rhs: GaussianRational) -> GaussianRational {
        &self * &rhs
    }
}

impl Neg for GaussianRational {
    type Output = GaussianRational;
    fn neg(self) -> GaussianRational {
        -&self
    }
}

impl fmt::Display for GaussianRational {
    /// `3`, `-1/2`, `i`, `1+2i`, `1/2-3/4i`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let im_zero = self.im.cmp0().is_eq();
        let re_zero = self.re.cmp0().is_eq();
        if im_zero {
            return write!(f, "{}", self.re);
        }
        let im_abs = Rational::from(self.im.abs_ref());
        let im_txt = if im_abs == 1 {
            "i".to_string()
        } else {
            format!("{}i", im_abs)
        };
        let neg = self.im.cmp0().is_lt();
        if re_zero {
            if neg {
                write!(f, "-{}", im_txt)
            } else {
                write!(f, "{}", im_txt)
            }
        } else {
            write!(f, "{}{}{}", self.re, if neg { "-" } else { "+" }, im_txt)
        }
    }
}

impl Serialize for GaussianRational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("GaussianRational", 2)?;
        st.serialize_field("re", &format_rational(&self.re))?;
        st.serialize_field("im", &format_rational(&self.im))?;
        st.end()
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RationalField {
    Text(String),
    Int(i64),
}

impl RationalField {
    fn into_rational<E: de::Error>(self) -> Result<Rational, E> {
        match self {
            RationalField::Int(n) => Ok(Rational::from(n)),
            RationalField::Text(s) => parse_rational(&s)
                .ok_or_else(|| E::custom(format!("invalid rational literal {:?}", s))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGaussian {
    re: RationalField,
    #[serde(default)]
    im: Option<RationalField>,
}

impl<'de> Deserialize<'de> for GaussianRational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawGaussian::deserialize(deserializer)?;
        let re = raw.re.into_rational::<D::Error>()?;
        let im = match raw.im {
            Some(v) => v.into_rational::<D::Error>()?,
            None => Rational::new(),
        };
        Ok(GaussianRational::new(re, im))
    }
}

/// Serde adapter for a bare rational encoded as `"p/q"`.
pub mod rational_string {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        RationalField::deserialize(d)?.into_rational::<D::Error>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_on_construction() {
        let x = GaussianRational::from_fracs((6, -4), (2, 8));
        assert_eq!(x.re(), &Rational::from((-3, 2)));
        assert_eq!(x.im(), &Rational::from((1, 4)));
        assert_eq!(x, GaussianRational::from_fracs((-3, 2), (1, 4)));
    }

    #[test]
    fn field_operations() {
        let a = GaussianRational::from_ints(1, 1);
        let b = GaussianRational::from_ints(1, -1);
        assert_eq!(&a * &b, GaussianRational::from_int(2));
        assert_eq!(a.checked_div(&b).unwrap(), GaussianRational::i());
        assert!(a.checked_div(&GaussianRational::zero()).is_none());
        assert_eq!(a.pow(4), GaussianRational::from_int(-4));
    }

    #[test]
    fn display_forms() {
        assert_eq!(GaussianRational::from_int(3).to_string(), "3");
        assert_eq!(GaussianRational::i().to_string(), "i");
        assert_eq!(GaussianRational::from_ints(1, 2).to_string(), "1+2i");
        assert_eq!(GaussianRational::from_fracs((1, 2), (-3, 4)).to_string(), "1/2-3/4i");
        assert_eq!(GaussianRational::from_ints(0, -1).to_string(), "-i");
    }

    #[test]
    fn json_shape() {
        let x = GaussianRational::from_fracs((-1, 2), (3, 1));
        let v = serde_json::to_value(&x).unwrap();
        assert_eq!(v, serde_json::json!({"re": "-1/2", "im": "3"}));
        let back: GaussianRational = serde_json::from_value(v).unwrap();
        assert_eq!(back, x);
        let short: GaussianRational = serde_json::from_str(r#"{"re": 2}"#).unwrap();
        assert_eq!(short, GaussianRational::from_int(2));
        assert!(serde_json::from_str::<GaussianRational>(r#"{"re": "1/0"}"#).is_err());
    }
}
