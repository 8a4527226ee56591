//! Polynomial differential equations `F(z, u, δu, …, δ^m u) = 0`.

mod parser;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rug::Rational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ParseError;
use crate::gps::{format_rational, Coefficient, Exponent, GPSeries, GaussianRational, Horizon, Jet};

pub use parser::parse_equation;

/// `coeff · z^beta · u_0^q_0 ⋯ u_m^q_m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: GaussianRational,
    #[serde(with = "crate::gps::scalar::rational_string")]
    pub beta: Rational,
    pub q: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.q.iter().sum()
    }

    fn key(&self) -> (Vec<u32>, Rational) {
        (self.q.clone(), self.beta.clone())
    }
}

/// The polynomial `F(z, u_0, …, u_m)` as a canonical monomial list.
///
/// Monomials are sorted by `(q, beta)`, merged, and never zero. Results of
/// differentiation may be the zero polynomial; parsed equations never are.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct PolyOde {
    order: usize,
    monomials: Vec<Monomial>,
}

impl PolyOde {
    /// Validated constructor: nonzero, and the highest derivative used is `order`.
    pub fn new(order: usize, monomials: Vec<Monomial>) -> Result<Self, ParseError> {
        let f = PolyOde::canonical(order, monomials);
        if f.monomials.is_empty() {
            return Err(ParseError::ZeroEquation);
        }
        let used = f.used_order().unwrap_or(0);
        if used > order {
            return Err(ParseError::IndexOutOfRange { index: used, order });
        }
        if used < order {
            return Err(ParseError::OrderNotAttained { order, used });
        }
        Ok(f)
    }

    /// Merges like monomials and sorts, without checking the equation invariants.
    pub fn canonical(order: usize, monomials: Vec<Monomial>) -> Self {
        let mut merged: BTreeMap<(Vec<u32>, Rational), GaussianRational> = BTreeMap::new();
        for mut mono in monomials {
            mono.q.resize(order + 1, 0);
            let key = mono.key();
            let entry = merged.entry(key).or_default();
            *entry = &*entry + &mono.coeff;
        }
        let monomials = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((q, beta), coeff)| Monomial { coeff, beta, q })
            .collect();
        PolyOde { order, monomials }
    }

    pub fn zero(order: usize) -> Self {
        PolyOde {
            order,
            monomials: Vec::new(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Highest `i` with some `q_i > 0`.
    pub fn used_order(&self) -> Option<usize> {
        self.monomials
            .iter()
            .filter_map(|m| m.q.iter().rposition(|&e| e > 0))
            .max()
    }

    /// Whether some `z`-exponent is not an integer.
    pub fn has_fractional_powers(&self) -> bool {
        self.monomials.iter().any(|m| !m.beta.is_integer())
    }

    /// Formal `∂F/∂u_i` by the power rule.
    pub fn partial_derivative(&self, i: usize) -> PolyOde {
        assert!(i <= self.order, "derivative index {} exceeds order {}", i, self.order);
        let monomials = self
            .monomials
            .iter()
            .filter(|m| m.q[i] > 0)
            .map(|m| {
                let mut q = m.q.clone();
                let k = q[i];
                q[i] -= 1;
                Monomial {
                    coeff: m.coeff.scale(&Rational::from(k)),
                    beta: m.beta.clone(),
                    q,
                }
            })
            .collect();
        PolyOde::canonical(self.order, monomials)
    }

    pub fn add(&self, other: &PolyOde) -> PolyOde {
        let order = self.order.max(other.order);
        PolyOde::canonical(
            order,
            self.monomials.iter().chain(other.monomials.iter()).cloned().collect(),
        )
    }

    pub fn mul(&self, other: &PolyOde) -> PolyOde {
        let order = self.order.max(other.order);
        let mut out = Vec::with_capacity(self.monomials.len() * other.monomials.len());
        for a in &self.monomials {
            for b in &other.monomials {
                let mut q = vec![0u32; order + 1];
                for (k, e) in a.q.iter().enumerate() {
                    q[k] += e;
                }
                for (k, e) in b.q.iter().enumerate() {
                    q[k] += e;
                }
                out.push(Monomial {
                    coeff: &a.coeff * &b.coeff,
                    beta: Rational::from(&a.beta + &b.beta),
                    q,
                });
            }
        }
        PolyOde::canonical(order, out)
    }

    /// `F(z, Φ)` with the conservative horizon `Θ_Φ + min Re β`.
    pub fn substitute<C: Coefficient>(&self, jet: &Jet<C>) -> GPSeries<C> {
        self.substitute_capped(jet, &Horizon::Infinite)
    }

    /// As [`PolyOde::substitute`], computing only exponents with `Re ≤ cap`.
    pub fn substitute_capped<C: Coefficient>(&self, jet: &Jet<C>, cap: &Horizon) -> GPSeries<C> {
        assert_eq!(jet.order(), self.order, "jet order must match the equation order");
        let ctx = jet.context().clone();
        let min_beta = match self.monomials.iter().map(|m| &m.beta).min() {
            Some(b) => b.clone(),
            None => return GPSeries::zero(cap.clone(), ctx),
        };
        let rule = jet.horizon().shifted(&min_beta);
        let out = rule.clone().min(cap.clone());
        let power_cap = out.shifted(&Rational::from(-&min_beta));

        let mut powers: HashMap<(usize, u32), GPSeries<C>> = HashMap::new();
        let mut total = GPSeries::zero(Horizon::Infinite, ctx.clone());
        for mono in &self.monomials {
            let mut prod = GPSeries::constant(C::from_exact(&mono.coeff, &ctx));
            let mono_cap = out.shifted(&Rational::from(-&mono.beta));
            for (i, &qi) in mono.q.iter().enumerate() {
                if qi == 0 {
                    continue;
                }
                let p = powers
                    .entry((i, qi))
                    .or_insert_with(|| jet.component(i).pow_capped(qi, &power_cap));
                prod = prod.mul_capped(p, &mono_cap);
            }
            let term = prod.shift(&Exponent::real(mono.beta.clone()));
            total = total.add(&term);
        }
        let h = total.horizon().clone().min(out);
        total.with_horizon(h)
    }

    /// Coefficients of `F(z, Φ + z^s·Ψ)` as a polynomial in the symbols
    /// `Ψ = (ψ_0, …, ψ_m)`: maps each power vector `j` to the series
    /// `(1/j!) ∂^j F(z, Φ) · z^{|j| s}`.
    pub fn taylor_expand<C: Coefficient>(
        &self,
        jet: &Jet<C>,
        s: &Exponent,
    ) -> BTreeMap<Vec<u32>, GPSeries<C>> {
        let ctx = jet.context().clone();
        let mut out: BTreeMap<Vec<u32>, GPSeries<C>> = BTreeMap::new();
        let mut powers: HashMap<(usize, u32), GPSeries<C>> = HashMap::new();
        for mono in &self.monomials {
            for j in sub_vectors(&mono.q) {
                let mut coeff = mono.coeff.clone();
                let mut prod = GPSeries::constant(C::one(&ctx));
                let mut degree = 0i64;
                for (i, (&qi, &ji)) in mono.q.iter().zip(j.iter()).enumerate() {
                    coeff = coeff.scale(&Rational::from(binomial(qi, ji)));
                    degree += ji as i64;
                    let rest = qi - ji;
                    if rest > 0 {
                        let p = powers
                            .entry((i, rest))
                            .or_insert_with(|| jet.component(i).pow_capped(rest, &Horizon::Infinite));
                        prod = prod.mul(p);
                    }
                }
                let shift = &Exponent::real(mono.beta.clone())
                    + &Exponent::new(s.value().scale(&Rational::from(degree)));
                let term = prod.shift(&shift).scale(&C::from_exact(&coeff, &ctx));
                let slot = out
                    .entry(j)
                    .or_insert_with(|| GPSeries::zero(Horizon::Infinite, ctx.clone()));
                *slot = slot.add(&term);
            }
        }
        out.retain(|_, s| !s.is_empty());
        out
    }

    /// Canonical text form accepted by [`parse_equation`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if self.used_order().unwrap_or(0) != self.order {
            out.push_str(&format!("order {}; ", self.order));
        }
        if self.monomials.is_empty() {
            out.push('0');
            return out;
        }
        for (n, mono) in self.monomials.iter().enumerate() {
            let (negative, body) = monomial_text(mono);
            match (n, negative) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            out.push_str(&body);
        }
        out
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("equation serializes")
    }

    pub fn from_json(v: &Value) -> Result<Self, ParseError> {
        #[derive(Deserialize)]
        struct Doc {
            order: usize,
            monomials: Vec<Monomial>,
        }
        let doc: Doc = serde_json::from_value(v.clone()).map_err(|e| ParseError::Syntax {
            pos: 0,
            expected: vec!["equation JSON".into()],
            found: e.to_string(),
        })?;
        for m in &doc.monomials {
            if m.q.len() > doc.order + 1 {
                return Err(ParseError::IndexOutOfRange {
                    index: m.q.len() - 1,
                    order: doc.order,
                });
            }
            if m.beta.cmp0().is_lt() {
                return Err(ParseError::NonPolynomial {
                    pos: 0,
                    detail: format!("negative z-exponent {}", m.beta),
                });
            }
        }
        let f = PolyOde::canonical(doc.order, doc.monomials);
        if f.is_zero() {
            return Err(ParseError::ZeroEquation);
        }
        Ok(f)
    }
}

impl fmt::Display for PolyOde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `(φ, δφ, …, δ^m φ)`.
pub fn jet<C: Coefficient>(phi: &GPSeries<C>, m: usize) -> Jet<C> {
    Jet::new(phi, m)
}

fn binomial(n: u32, k: u32) -> rug::Integer {
    rug::Integer::from(n).binomial(k)
}

/// All vectors `j` with `0 ≤ j_i ≤ q_i`.
fn sub_vectors(q: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(q.len())];
    for &qi in q {
        let mut next = Vec::with_capacity(out.len() * (qi as usize + 1));
        for prefix in &out {
            for ji in 0..=qi {
                let mut v = prefix.clone();
                v.push(ji);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn scalar_text(c: &GaussianRational) -> String {
    if c.is_real() {
        return format_rational(c.re());
    }
    let im = c.im();
    let im_abs = Rational::from(im.abs_ref());
    let im_part = if im_abs == 1 {
        "i".to_string()
    } else {
        format!("{}*i", format_rational(&im_abs))
    };
    if c.re().cmp0().is_eq() {
        if im.cmp0().is_lt() {
            format!("(-{})", im_part)
        } else {
            format!("({})", im_part)
        }
    } else {
        let sign = if im.cmp0().is_lt() { "-" } else { "+" };
        format!("({}{}{})", format_rational(c.re()), sign, im_part)
    }
}

/// Sign and magnitude text of a monomial.
fn monomial_text(m: &Monomial) -> (bool, String) {
    let mut factors = Vec::new();
    if m.beta.cmp0().is_gt() {
        if m.beta == 1 {
            factors.push("z".to_string());
        } else if m.beta.is_integer() {
            factors.push(format!("z^{}", m.beta));
        } else {
            factors.push(format!("z^({})", m.beta));
        }
    }
    for (i, &e) in m.q.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let base = if i == 0 { "u".to_string() } else { format!("D(u,{})", i) };
        if e == 1 {
            factors.push(base);
        } else {
            factors.push(format!("{}^{}", base, e));
        }
    }
    let (negative, mag) = if m.coeff.is_real() && m.coeff.re().cmp0().is_lt() {
        (true, -&m.coeff)
    } else {
        (false, m.coeff.clone())
    };
    if factors.is_empty() {
        return (negative, scalar_text(&mag));
    }
    let body = factors.join("*");
    if mag.is_one() {
        (negative, body)
    } else {
        (negative, format!("{}*{}", scalar_text(&mag), body))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type S = GPSeries<GaussianRational>;

    fn g(n: i64) -> GaussianRational {
        GaussianRational::from_int(n)
    }

    fn poly(terms: &[(i64, GaussianRational)]) -> S {
        S::from_terms(
            terms.iter().map(|(e, c)| (Exponent::from_int(*e), c.clone())),
            Horizon::Infinite,
            (),
        )
    }

    fn euler() -> PolyOde {
        parse_equation("z*D(u,1) + u - z").unwrap()
    }

    #[test]
    fn partial_derivative_examples() {
        let f = euler();
        let d1 = f.partial_derivative(1);
        assert_eq!(d1.monomials().len(), 1);
        assert_eq!(d1.monomials()[0].beta, 1);
        assert_eq!(d1.monomials()[0].q, vec![0, 0]);

        let sq = parse_equation("u^2").unwrap();
        let d0 = sq.partial_derivative(0);
        assert_eq!(d0.monomials()[0].coeff, g(2));
        assert_eq!(d0.monomials()[0].q, vec![1]);

        let h = parse_equation("order 2; z*D(u,1) + D(u,2)").unwrap();
        let only = parse_equation("z*D(u,1)").unwrap();
        let lifted = PolyOde::canonical(2, only.monomials().to_vec());
        assert!(lifted.partial_derivative(2).is_zero());
        assert!(!h.partial_derivative(2).is_zero());
    }

    #[test]
    fn jet_examples() {
        let zz = poly(&[(1, g(1))]);
        let j = jet(&zz, 1);
        assert_eq!(j.component(0), &zz);
        assert_eq!(j.component(1), &zz);

        let w = S::monomial(Exponent::from_ints(1, 1), g(1));
        let j = jet(&w, 1);
        assert_eq!(j.component(1).coeff(&Exponent::from_ints(1, 1)), Some(&GaussianRational::from_ints(1, 1)));

        let c = poly(&[(0, g(5))]);
        let j = jet(&c, 3);
        assert_eq!(j.order(), 3);
        assert!(j.components()[1..].iter().all(|s| s.is_empty()));
    }

    #[test]
    fn substitute_euler_partial_sum() {
        let phi = poly(&[(1, g(1)), (2, g(-1)), (3, g(2))]);
        let r = euler().substitute(&jet(&phi, 1));
        assert_eq!(r, poly(&[(4, g(6))]));
    }

    #[test]
    fn substitute_exponential_prefix_vanishes() {
        // terms z^n/n! for n <= 10, certified to 10
        let mut terms = Vec::new();
        let mut fact = rug::Integer::from(1);
        for n in 0..=10i64 {
            if n > 0 {
                fact *= n;
            }
            terms.push((
                Exponent::from_int(n),
                GaussianRational::real(Rational::from((rug::Integer::from(1), fact.clone()))),
            ));
        }
        let phi = S::from_terms(terms, Horizon::finite(10), ());
        let f = parse_equation("D(u,1) - z*u").unwrap();
        let r = f.substitute(&jet(&phi, 1));
        assert!(r.is_empty());
        assert_eq!(r.horizon(), &Horizon::finite(10));
    }

    #[test]
    fn substitute_identity() {
        let zz = poly(&[(1, g(1))]);
        let f = parse_equation("u").unwrap();
        assert_eq!(f.substitute(&jet(&zz, 0)), zz);
    }

    #[test]
    fn taylor_expansion_matches_substitution() {
        let f = parse_equation("u^2*D(u,1) + z*u - 3").unwrap();
        let phi = poly(&[(0, g(1)), (1, g(2))]);
        let psi = poly(&[(1, g(1)), (2, g(-1))]);
        let s = Exponent::from_int(1);
        let expansion = f.taylor_expand(&jet(&phi, 1), &s);
        // evaluate Σ_j S_j Ψ^j with Ψ_i = (δ + s)^i ψ
        let comps: Vec<S> = (0..=1).map(|i| psi.shifted_delta_pow(&s, i)).collect();
        let mut total = S::zero(Horizon::Infinite, ());
        for (j, series) in &expansion {
            let mut t = series.clone();
            for (i, &ji) in j.iter().enumerate() {
                t = t.mul(&comps[i].pow_capped(ji, &Horizon::Infinite));
            }
            total = total.add(&t);
        }
        let full = phi.add(&psi.shift(&s));
        assert_eq!(total, f.substitute(&jet(&full, 1)));
    }

    #[test]
    fn text_round_trip_examples() {
        for src in [
            "z*D(u,1) + u - z",
            "(1+i)*u^2",
            "z^(3/2)*D(u,2)",
            "-1/2*z^3*u*D(u,1)^2 + (2-3*i) - i*z",
        ] {
            let f = parse_equation(src).unwrap();
            let printed = f.to_text();
            let again = parse_equation(&printed).unwrap();
            assert_eq!(again, f, "{} -> {}", src, printed);
            assert_eq!(again.to_text(), printed);
        }
    }

    #[test]
    fn json_round_trip() {
        let f = parse_equation("z*D(u,1) + u - z").unwrap();
        let v = f.to_json();
        assert_eq!(v["order"], 1);
        assert_eq!(PolyOde::from_json(&v).unwrap(), f);
    }

    fn arb_poly() -> impl Strategy<Value = PolyOde> {
        let mono = (-3i64..4, -2i64..3, 0i64..3, 1i64..3, 0u32..3, 0u32..2);
        prop::collection::vec(mono, 1..4).prop_map(|ms| {
            let monomials = ms
                .into_iter()
                .map(|(re, im, bn, bd, q0, q1)| Monomial {
                    coeff: GaussianRational::from_ints(re, im),
                    beta: Rational::from((bn, bd)),
                    q: vec![q0, q1],
                })
                .collect();
            PolyOde::canonical(1, monomials)
        })
    }

    fn arb_phi() -> impl Strategy<Value = S> {
        prop::collection::vec((0i64..4, 1i64..3, -2i64..3, -2i64..3), 0..4).prop_map(|ts| {
            S::from_terms(
                ts.into_iter().map(|(a, b, cr, ci)| {
                    (Exponent::real(Rational::from((a, b))), GaussianRational::from_ints(cr, ci))
                }),
                Horizon::finite(3),
                (),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn print_parse_fixed_point(f in arb_poly()) {
            prop_assume!(!f.is_zero());
            let printed = f.to_text();
            let again = parse_equation(&printed).unwrap();
            prop_assert_eq!(again.to_text(), printed);
            prop_assert_eq!(again.monomials(), f.monomials());
        }

        #[test]
        fn substitution_is_multiplicative(f in arb_poly(), g2 in arb_poly(), phi in arb_phi()) {
            let j = jet(&phi, 1);
            let lhs = f.mul(&g2).substitute(&j);
            let rhs = f.substitute(&j).mul(&g2.substitute(&j));
            prop_assert!(lhs.agrees_with(&rhs));
        }

        #[test]
        fn derivative_is_linear_part(f in arb_poly(), phi in arb_phi(), i in 0usize..2) {
            // F(Φ + ε e_i) = F(Φ) + ε ∂F/∂u_i(Φ) + O(ε²), read off from the
            // Taylor expansion with ψ_i treated as a formal symbol
            let j = jet(&phi, 1);
            let expansion = f.taylor_expand(&j, &Exponent::zero());
            let mut key = vec![0u32, 0];
            key[i] = 1;
            let linear = expansion.get(&key).cloned().unwrap_or_else(|| S::zero(Horizon::Infinite, ()));
            let direct = f.partial_derivative(i).substitute(&j);
            prop_assert!(linear.agrees_with(&direct));
            let constant = expansion.get(&vec![0u32, 0]).cloned().unwrap_or_else(|| S::zero(Horizon::Infinite, ()));
            prop_assert!(constant.agrees_with(&f.substitute(&j)));
        }
    }
}
