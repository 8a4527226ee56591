use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use rug::Rational;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use super::coeff::Coefficient;
use super::scalar::{format_rational, parse_rational, GaussianRational};
use crate::error::SeriesError;

/// A complex exponent `s` of `z^s`, totally ordered by `(Re s, Im s)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Exponent(GaussianRational);

impl Exponent {
    pub fn new(value: GaussianRational) -> Self {
        Exponent(value)
    }

    pub fn zero() -> Self {
        Exponent::default()
    }

    pub fn from_int(n: i64) -> Self {
        Exponent(GaussianRational::from_int(n))
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Exponent(GaussianRational::from_ints(re, im))
    }

    pub fn real(r: Rational) -> Self {
        Exponent(GaussianRational::real(r))
    }

    pub fn value(&self) -> &GaussianRational {
        &self.0
    }

    pub fn re(&self) -> &Rational {
        self.0.re()
    }

    pub fn im(&self) -> &Rational {
        self.0.im()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl std::ops::Add for &Exponent {
    type Output = Exponent;
    fn add(self, rhs: &Exponent) -> Exponent {
        Exponent(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &Exponent {
    type Output = Exponent;
    fn sub(self, rhs: &Exponent) -> Exponent {
        Exponent(&self.0 - &rhs.0)
    }
}

impl From<GaussianRational> for Exponent {
    fn from(g: GaussianRational) -> Self {
        Exponent(g)
    }
}

/// Lexicographic `(Re, Im)` comparison.
pub fn exp_cmp(s: &Exponent, t: &Exponent) -> Ordering {
    s.re().cmp(t.re()).then_with(|| s.im().cmp(t.im()))
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        exp_cmp(self, other)
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        GaussianRational::deserialize(d).map(Exponent)
    }
}

/// Certified truncation bound on the real part of exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Horizon {
    Finite(Rational),
    Infinite,
}

impl Horizon {
    pub fn finite(r: impl Into<Rational>) -> Self {
        Horizon::Finite(r.into())
    }

    pub fn shifted(&self, by: &Rational) -> Horizon {
        match self {
            Horizon::Finite(h) => Horizon::Finite(Rational::from(h + by)),
            Horizon::Infinite => Horizon::Infinite,
        }
    }

    pub fn min(self, other: Horizon) -> Horizon {
        std::cmp::min(self, other)
    }

    /// Whether `re` lies within the certified range.
    pub fn covers(&self, re: &Rational) -> bool {
        match self {
            Horizon::Finite(h) => re <= h,
            Horizon::Infinite => true,
        }
    }

    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            Horizon::Finite(h) => Some(h),
            Horizon::Infinite => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Horizon::Finite(h) => Value::String(format_rational(h)),
            Horizon::Infinite => Value::String("inf".into()),
        }
    }

    pub fn parse(s: &str) -> Option<Horizon> {
        let t = s.trim();
        if t == "inf" {
            return Some(Horizon::Infinite);
        }
        parse_rational(t).map(Horizon::Finite)
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(h) => write!(f, "{}", h),
            Horizon::Infinite => write!(f, "inf"),
        }
    }
}

/// Truncated generalized power series `Σ c_s z^s`.
///
/// Every term with `Re s ≤ horizon` is present and correct; nothing beyond
/// the horizon is stored. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct GPSeries<C: Coefficient> {
    terms: BTreeMap<Exponent, C>,
    horizon: Horizon,
    ctx: C::Context,
}

impl<C: Coefficient> GPSeries<C> {
    pub fn zero(horizon: Horizon, ctx: C::Context) -> Self {
        GPSeries {
            terms: BTreeMap::new(),
            horizon,
            ctx,
        }
    }

    /// Builds a series from terms; zero coefficients and terms beyond the
    /// horizon are dropped, repeated exponents are summed.
    pub fn from_terms(
        terms: impl IntoIterator<Item = (Exponent, C)>,
        horizon: Horizon,
        ctx: C::Context,
    ) -> Self {
        let mut map: BTreeMap<Exponent, C> = BTreeMap::new();
        for (e, c) in terms {
            if !horizon.covers(e.re()) {
                continue;
            }
            match map.get_mut(&e) {
                Some(acc) => *acc = acc.add(&c),
                None => {
                    map.insert(e, c);
                }
            }
        }
        map.retain(|_, c| !c.is_zero());
        GPSeries {
            terms: map,
            horizon,
            ctx,
        }
    }

    /// Single exact term `c·z^s` with infinite horizon.
    pub fn monomial(s: Exponent, c: C) -> Self {
        let ctx = c.context();
        GPSeries::from_terms([(s, c)], Horizon::Infinite, ctx)
    }

    pub fn constant(c: C) -> Self {
        Self::monomial(Exponent::zero(), c)
    }

    pub fn horizon(&self) -> &Horizon {
        &self.horizon
    }

    pub fn context(&self) -> &C::Context {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &C)> + '_ {
        self.terms.iter()
    }

    pub fn coeff(&self, s: &Exponent) -> Option<&C> {
        self.terms.get(s)
    }

    pub fn exponents(&self) -> impl Iterator<Item = &Exponent> + '_ {
        self.terms.keys()
    }

    pub fn leading(&self) -> Option<(&Exponent, &C)> {
        self.terms.iter().next()
    }

    pub fn last(&self) -> Option<(&Exponent, &C)> {
        self.terms.iter().next_back()
    }

    /// Least exponent in `(Re, Im)` order.
    pub fn valuation(&self) -> Result<Exponent, SeriesError> {
        self.terms
            .keys()
            .next()
            .cloned()
            .ok_or(SeriesError::EmptySeries)
    }

    /// `Re val` for nonempty series, the horizon for empty ones: a lower
    /// bound on the real part of every exponent that may occur.
    fn low(&self) -> Horizon {
        match self.terms.keys().next() {
            Some(e) => Horizon::Finite(e.re().clone()),
            None => self.horizon.clone(),
        }
    }

    pub fn with_horizon(mut self, horizon: Horizon) -> Self {
        self.terms.retain(|e, _| horizon.covers(e.re()));
        self.horizon = horizon;
        self
    }

    /// Drops every term with `Re s > limit`; the horizon becomes `limit`.
    pub fn truncate(&self, limit: &Rational) -> Result<Self, SeriesError> {
        let target = Horizon::Finite(limit.clone());
        if target > self.horizon {
            return Err(SeriesError::HorizonExceeded {
                requested: format_rational(limit),
                horizon: self.horizon.to_string(),
            });
        }
        Ok(self.clone().with_horizon(target))
    }

    pub fn add(&self, other: &Self) -> Self {
        let horizon = self.horizon.clone().min(other.horizon.clone());
        let mut terms = BTreeMap::new();
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            if !horizon.covers(e.re()) {
                continue;
            }
            accumulate(&mut terms, e.clone(), c.clone());
        }
        terms.retain(|_, c: &mut C| !c.is_zero());
        GPSeries {
            terms,
            horizon,
            ctx: self.ctx.clone(),
        }
    }

    pub fn neg(&self) -> Self {
        GPSeries {
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
            horizon: self.horizon.clone(),
            ctx: self.ctx.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return GPSeries::zero(self.horizon.clone(), self.ctx.clone());
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, x)| (e.clone(), x.mul(c)))
            .filter(|(_, x)| !x.is_zero())
            .collect();
        GPSeries {
            terms,
            horizon: self.horizon.clone(),
            ctx: self.ctx.clone(),
        }
    }

    /// Multiplication by `z^s`; the horizon moves by `Re s`.
    pub fn shift(&self, s: &Exponent) -> Self {
        GPSeries {
            terms: self.terms.iter().map(|(e, c)| (e + s, c.clone())).collect(),
            horizon: self.horizon.shifted(s.re()),
            ctx: self.ctx.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_capped(other, &Horizon::Infinite)
    }

    /// Cauchy product, computing only exponents with `Re ≤ cap`.
    ///
    /// The certified horizon is `min(Θ_a + low(b), Θ_b + low(a), cap)` where
    /// `low` is `Re val` (or the horizon of an empty factor).
    pub fn mul_capped(&self, other: &Self, cap: &Horizon) -> Self {
        let horizon = match (self.low(), other.low()) {
            (Horizon::Finite(la), Horizon::Finite(lb)) => {
                self.horizon.shifted(&lb).min(other.horizon.shifted(&la))
            }
            // both factors infinite-horizon and empty
            _ => Horizon::Infinite,
        }
        .min(cap.clone());
        let mut terms: BTreeMap<Exponent, C> = BTreeMap::new();
        let other_low = other.terms.keys().next().map(|e| e.re().clone());
        for (ea, ca) in &self.terms {
            if let (Horizon::Finite(h), Some(lb)) = (&horizon, &other_low) {
                if Rational::from(ea.re() + lb) > *h {
                    break;
                }
            }
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if !horizon.covers(e.re()) {
                    // `other` is sorted by real part first
                    break;
                }
                accumulate(&mut terms, e, ca.mul(cb));
            }
        }
        terms.retain(|_, c| !c.is_zero());
        GPSeries {
            terms,
            horizon,
            ctx: self.ctx.clone(),
        }
    }

    /// `a^n` by repeated squaring, with the same cap semantics as `mul_capped`.
    pub fn pow_capped(&self, n: u32, cap: &Horizon) -> Self {
        let mut acc = GPSeries::constant(C::one(&self.ctx));
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul_capped(&base, cap);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_capped(&base, cap);
            }
        }
        acc
    }

    /// The Euler derivation `δ = z·d/dz`: `c·z^s ↦ (c·s)·z^s`.
    pub fn delta(&self) -> Self {
        self.map_by_exponent(|e, c| c.mul_exact(e.value()))
    }

    /// `(δ + shift)^power`: `c·z^s ↦ c·(s + shift)^power·z^s`.
    pub fn shifted_delta_pow(&self, shift: &Exponent, power: u32) -> Self {
        if power == 0 {
            return self.clone();
        }
        self.map_by_exponent(|e, c| c.mul_exact(&(e + shift).value().pow(power)))
    }

    /// Termwise map `c·z^s ↦ f(s, c)·z^s`, dropping zeros.
    pub fn map_by_exponent(&self, f: impl Fn(&Exponent, &C) -> C) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), f(e, c)))
            .filter(|(_, c)| !c.is_zero())
            .collect();
        GPSeries {
            terms,
            horizon: self.horizon.clone(),
            ctx: self.ctx.clone(),
        }
    }

    /// Converts coefficients to another backend.
    pub fn convert<D: Coefficient>(&self, ctx: D::Context, f: impl Fn(&C) -> D) -> GPSeries<D> {
        GPSeries::from_terms(
            self.terms.iter().map(|(e, c)| (e.clone(), f(c))),
            self.horizon.clone(),
            ctx,
        )
    }

    /// Whether both series agree on every exponent up to the smaller horizon.
    pub fn agrees_with(&self, other: &Self) -> bool {
        let h = self.horizon.clone().min(other.horizon.clone());
        let a: Vec<_> = self.terms.iter().filter(|(e, _)| h.covers(e.re())).collect();
        let b: Vec<_> = other.terms.iter().filter(|(e, _)| h.covers(e.re())).collect();
        a.len() == b.len()
            && a.iter()
                .zip(b.iter())
                .all(|((ea, ca), (eb, cb))| ea == eb && ca.approx_eq(cb))
    }

    /// `{"terms": [{"s": .., "c": ..}, ...], "horizon": ..}` in support order.
    pub fn to_json(&self) -> Value {
        let terms: Vec<Value> = self
            .terms
            .iter()
            .map(|(e, c)| json!({"s": e, "c": c.to_json()}))
            .collect();
        json!({"terms": terms, "horizon": self.horizon.to_json()})
    }
}

impl GPSeries<GaussianRational> {
    /// Reads the `{"terms": [...]}` schema; a missing horizon means the terms
    /// form an exact finite sum.
    pub fn from_json(v: &Value) -> Result<Self, SeriesError> {
        #[derive(Deserialize)]
        struct Term {
            s: Exponent,
            c: GaussianRational,
        }
        #[derive(Deserialize)]
        struct Doc {
            terms: Vec<Term>,
            #[serde(default)]
            horizon: Option<String>,
        }
        let doc: Doc = serde_json::from_value(v.clone())
            .map_err(|e| SeriesError::Malformed(e.to_string()))?;
        let horizon = match doc.horizon {
            Some(h) => Horizon::parse(&h)
                .ok_or_else(|| SeriesError::Malformed(format!("bad horizon {:?}", h)))?,
            None => Horizon::Infinite,
        };
        Ok(GPSeries::from_terms(
            doc.terms.into_iter().map(|t| (t.s, t.c)),
            horizon,
            (),
        ))
    }
}

fn accumulate<C: Coefficient>(terms: &mut BTreeMap<Exponent, C>, e: Exponent, c: C) {
    match terms.get_mut(&e) {
        Some(acc) => *acc = acc.add(&c),
        None => {
            terms.insert(e, c);
        }
    }
}

/// `(φ, δφ, …, δ^m φ)` over a shared horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<C: Coefficient> {
    components: Vec<GPSeries<C>>,
}

impl<C: Coefficient> Jet<C> {
    pub fn new(phi: &GPSeries<C>, order: usize) -> Self {
        let mut components = Vec::with_capacity(order + 1);
        components.push(phi.clone());
        for j in 1..=order {
            let next = components[j - 1].delta();
            components.push(next);
        }
        Jet { components }
    }

    pub fn order(&self) -> usize {
        self.components.len() - 1
    }

    pub fn component(&self, i: usize) -> &GPSeries<C> {
        &self.components[i]
    }

    pub fn components(&self) -> &[GPSeries<C>] {
        &self.components
    }

    pub fn horizon(&self) -> &Horizon {
        self.components[0].horizon()
    }

    pub fn context(&self) -> &C::Context {
        self.components[0].context()
    }
}
