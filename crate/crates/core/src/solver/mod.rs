//! Term-by-term continuation of a seed into the formal solution, the choice
//! of the splitting index `μ`, and the reduced equation for the tail.

mod reduce;
mod roots;

pub use reduce::{recombine, reduce_equation, reduced_extend, NTerm, OperatorTerm, ReducedEquation};
pub use roots::polynomial_roots;

use rug::{Complex, Rational};
use serde_json::{json, Value};

use crate::analysis::{linearize, LinearizationReport, Slope};
use crate::error::SolverError;
use crate::gps::{format_rational, Coefficient, Exponent, GPSeries, Horizon};
use crate::ode::{jet, PolyOde};

/// Default lower bound on the distance of the roots of `L` from the
/// closed right half-plane.
pub const ROOT_MARGIN: f64 = 1e-6;

/// Guard against runaway continuation.
const MAX_TERMS: usize = 100_000;

/// An equation whose formal solution is computed one term at a time.
pub(crate) trait Continuation<C: Coefficient> {
    /// Exponent shift between a new solution term and the residual term it
    /// cancels.
    fn lambda(&self) -> &Exponent;
    /// Residual of the current approximation up to `Re ≤ cap`.
    fn residual(&self, approx: &GPSeries<C>, cap: &Horizon) -> GPSeries<C>;
    /// Factor multiplying a new term `c·z^s` in the leading residual.
    fn characteristic(&self, s: &Exponent) -> C;
    fn vanishing(&self, s: &Exponent) -> SolverError;
}

/// Extends `start` (read as an exact polynomial) until the next exponent
/// has `Re > target`. Returns the series with horizon `target`.
pub(crate) fn continue_solution<C: Coefficient, E: Continuation<C>>(
    eq: &E,
    start: &GPSeries<C>,
    target: &Rational,
) -> Result<GPSeries<C>, SolverError> {
    let ctx = start.context().clone();
    let mut approx = start.clone().with_horizon(Horizon::Infinite);
    let cap = Horizon::Finite(Rational::from(target + eq.lambda().re()));
    let mut last_residual: Option<Exponent> = None;
    for _ in 0..MAX_TERMS {
        let r = eq.residual(&approx, &cap);
        let (e, lead) = match r.leading() {
            None => {
                return Ok(approx.with_horizon(Horizon::Finite(target.clone())));
            }
            Some((e, c)) => (e.clone(), c.clone()),
        };
        if let Some(prev) = &last_residual {
            if e <= *prev {
                return Err(SolverError::NotASolutionPrefix {
                    residual: e.to_string(),
                    last: prev.to_string(),
                });
            }
        }
        let s = &e - eq.lambda();
        if Horizon::Finite(s.re().clone()) > Horizon::Finite(target.clone()) {
            return Ok(approx.with_horizon(Horizon::Finite(target.clone())));
        }
        if let Some((tail, _)) = approx.last() {
            if s <= *tail {
                return Err(SolverError::NotASolutionPrefix {
                    residual: e.to_string(),
                    last: tail.to_string(),
                });
            }
        }
        let d = eq.characteristic(&s);
        let c = lead.neg().div(&d).ok_or_else(|| eq.vanishing(&s))?;
        approx = approx.add(&GPSeries::from_terms([(s, c)], Horizon::Infinite, ctx.clone()));
        last_residual = Some(e);
    }
    Err(SolverError::NotApplicable(format!(
        "more than {} terms below the target",
        MAX_TERMS
    )))
}

struct Linearized<'a, C: Coefficient> {
    f: &'a PolyOde,
    lambda: Exponent,
    a: Vec<C>,
}

impl<C: Coefficient> Continuation<C> for Linearized<'_, C> {
    fn lambda(&self) -> &Exponent {
        &self.lambda
    }

    fn residual(&self, approx: &GPSeries<C>, cap: &Horizon) -> GPSeries<C> {
        self.f.substitute_capped(&jet(approx, self.f.order()), cap)
    }

    fn characteristic(&self, s: &Exponent) -> C {
        let mut acc = self.a.last().expect("m >= 0").clone();
        for a in self.a.iter().rev().skip(1) {
            acc = acc.mul_exact(s.value()).add(a);
        }
        acc
    }

    fn vanishing(&self, s: &Exponent) -> SolverError {
        SolverError::Resonance {
            exponent: s.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedReport<C: Coefficient> {
    pub linearization: LinearizationReport<C>,
    /// Valuation of `F(z, seed)`, `None` when it vanishes identically.
    pub residual_valuation: Option<Exponent>,
    /// Exponent of the next solution term.
    pub next_exponent: Option<Exponent>,
}

fn check_exponents<C: Coefficient>(seed: &GPSeries<C>) -> Result<(), SolverError> {
    if let Some(e) = seed.exponents().find(|e| e.re().cmp0().is_lt()) {
        return Err(SolverError::NegativeLeadingExponent {
            exponent: e.to_string(),
        });
    }
    Ok(())
}

/// Certified horizon of a seed: everything up to its last real part.
fn seed_horizon<C: Coefficient>(seed: &GPSeries<C>) -> Horizon {
    Horizon::Finite(seed.last().map(|(e, _)| e.re().clone()).unwrap_or_default())
}

/// Checks that `seed` is a prefix of a formal solution: the leading term of
/// the residual must be cancellable by a term beyond the seed.
pub fn validate_seed<C: Coefficient>(
    f: &PolyOde,
    seed: &GPSeries<C>,
) -> Result<SeedReport<C>, SolverError> {
    check_exponents(seed)?;
    let poly = seed.clone().with_horizon(Horizon::Infinite);
    let residual = f.substitute(&jet(&poly, f.order()));
    let linearization = linearize(f, &poly.clone().with_horizon(seed_horizon(seed)))?;
    let residual_valuation = residual.valuation().ok();
    let next_exponent = match &residual_valuation {
        None => None,
        Some(v) => {
            let next = v - &linearization.lambda;
            let fits = match seed.last() {
                Some((last, _)) => next > *last,
                None => next.re().cmp0().is_ge(),
            };
            if !fits {
                return Err(SolverError::NotASolutionPrefix {
                    residual: v.to_string(),
                    last: seed
                        .last()
                        .map(|(e, _)| e.to_string())
                        .unwrap_or_else(|| "none".into()),
                });
            }
            Some(next)
        }
    };
    Ok(SeedReport {
        linearization,
        residual_valuation,
        next_exponent,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution<C: Coefficient> {
    pub series: GPSeries<C>,
    pub linearization: LinearizationReport<C>,
    /// Valuation of the residual of the computed partial sum.
    pub residual_valuation: Option<Exponent>,
}

/// Continues `seed` through every exponent with `Re ≤ target`.
pub fn extend_solution<C: Coefficient>(
    f: &PolyOde,
    seed: &GPSeries<C>,
    target: &Rational,
) -> Result<Solution<C>, SolverError> {
    let initial = validate_seed(f, seed)?.linearization;
    let eq = Linearized {
        f,
        lambda: initial.lambda.clone(),
        a: initial.leading_coefficients(seed.context()),
    };
    let series = continue_solution(&eq, seed, target)?;
    let poly = series.clone().with_horizon(Horizon::Infinite);
    let residual_valuation = f.substitute(&jet(&poly, f.order())).valuation().ok();
    let linearization = linearize(f, &series)?;
    linearization.require_stable()?;
    if !linearization.same_leading_data(&initial) {
        return Err(crate::error::AnalysisError::Unstable(
            "leading data along the seed differs from the extended series; supply a longer seed".into(),
        )
        .into());
    }
    Ok(Solution {
        series,
        linearization,
        residual_valuation,
    })
}

/// Outcome of the three conditions for one candidate `μ`.
#[derive(Clone, Debug, PartialEq)]
pub struct MuCheck {
    pub mu: usize,
    pub s_mu: Exponent,
    /// Roots `w` of `Σ A_i w^i`; the roots of `L` are `w − s_μ`.
    pub roots: Vec<(f64, f64)>,
    /// `max Re(w − s_μ)`, `-inf` when `L` is constant.
    pub max_root_re: f64,
    pub roots_left: bool,
    pub gap: Option<bool>,
    pub above_bound: bool,
}

impl MuCheck {
    pub fn passes(&self) -> bool {
        self.roots_left && self.gap == Some(true) && self.above_bound
    }

    pub fn to_json(&self) -> Value {
        json!({
            "mu": self.mu,
            "s_mu": serde_json::to_value(&self.s_mu).expect("exponent"),
            "roots": self.roots.iter().map(|(re, im)| json!([round12(*re), round12(*im)])).collect::<Vec<_>>(),
            "max_root_re": if self.max_root_re.is_finite() { json!(round12(self.max_root_re)) } else { json!("-inf") },
            "condition_i": self.roots_left,
            "condition_ii": self.gap,
            "condition_iii": self.above_bound,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuChoice {
    pub mu: usize,
    pub checks: Vec<MuCheck>,
}

fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

/// Roots of `Σ A_i w^i` at the given precision.
pub fn characteristic_roots<C: Coefficient>(
    rep: &LinearizationReport<C>,
    ctx: &C::Context,
    prec: u32,
) -> Result<Vec<Complex>, SolverError> {
    let coeffs: Vec<Complex> = rep
        .leading_coefficients(ctx)
        .iter()
        .take(rep.p + 1)
        .map(|a| a.to_complex(prec))
        .collect();
    polynomial_roots(&coeffs, prec)
}

/// Evaluates conditions i–iii at `μ`.
pub fn check_mu<C: Coefficient>(
    rep: &LinearizationReport<C>,
    phi: &GPSeries<C>,
    mu: usize,
    k: &Rational,
    roots: &[Complex],
    margin: f64,
) -> Result<MuCheck, SolverError> {
    let exps: Vec<&Exponent> = phi.exponents().collect();
    let s_mu = exps
        .get(mu)
        .map(|e| (*e).clone())
        .ok_or_else(|| SolverError::InsufficientTerms(format!("the series has no term of index {}", mu)))?;
    let prec = roots.first().map(|r| r.prec().0).unwrap_or(64);
    let shift = rug::Float::with_val(prec, s_mu.re());
    let shifted: Vec<f64> = roots
        .iter()
        .map(|w| (rug::Float::with_val(prec, w.real()) - &shift).to_f64())
        .collect();
    let max_root_re = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let roots_left = max_root_re <= -margin;
    let gap = match exps.get(mu + 1) {
        Some(next) => Some(next.re() > s_mu.re()),
        None if !phi.horizon().covers(s_mu.re()) => None,
        None => match phi.horizon() {
            Horizon::Infinite => Some(true),
            Horizon::Finite(h) => (h > s_mu.re()).then_some(true),
        },
    };
    let m_minus_p = Rational::from((rep.order - rep.p) as i64);
    let bound = rep.lambda.re() + (2 * m_minus_p * k);
    let above_bound = *s_mu.re() > bound;
    Ok(MuCheck {
        mu,
        s_mu,
        roots: roots.iter().map(|w| (w.real().to_f64(), w.imag().to_f64())).collect(),
        max_root_re,
        roots_left,
        gap,
        above_bound,
    })
}

/// The least `μ` satisfying conditions i–iii, with the report of every
/// candidate tried.
pub fn choose_mu<C: Coefficient>(
    rep: &LinearizationReport<C>,
    phi: &GPSeries<C>,
    k: &Slope,
    margin: f64,
    prec: u32,
) -> Result<MuChoice, SolverError> {
    let k = match k {
        Slope::Infinite => {
            return Err(SolverError::NotApplicable(
                "k is infinite: the solution converges and needs no reduction".into(),
            ))
        }
        Slope::Finite(k) => k,
    };
    let roots = characteristic_roots(rep, phi.context(), prec)?;
    let mut checks = Vec::new();
    for mu in 0..phi.len() {
        let check = check_mu(rep, phi, mu, k, &roots, margin)?;
        let ok = check.passes();
        checks.push(check);
        if ok {
            return Ok(MuChoice { mu, checks });
        }
    }
    Err(SolverError::InsufficientTerms(format!(
        "no index among {} terms satisfies conditions i-iii (need Re s_mu > {})",
        phi.len(),
        format_rational(&(rep.lambda.re() + (2 * Rational::from((rep.order - rep.p) as i64) * k)))
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{min_positive_slope, DerivativeLeading};
    use crate::gps::{BigComplex, FloatContext, GaussianRational};
    use crate::ode::parse_equation;
    use rug::Integer;

    type G = GaussianRational;

    fn seed(terms: &[((i64, i64), G)]) -> GPSeries<G> {
        GPSeries::from_terms(
            terms.iter().map(|((re, im), c)| (Exponent::from_ints(*re, *im), c.clone())),
            Horizon::Infinite,
            (),
        )
    }

    fn euler() -> PolyOde {
        parse_equation("z*D(u,1) + u - z").unwrap()
    }

    #[test]
    fn euler_seed_is_valid() {
        let rep = validate_seed(&euler(), &seed(&[((1, 0), G::one())])).unwrap();
        assert_eq!(rep.residual_valuation, Some(Exponent::from_int(2)));
        assert_eq!(rep.next_exponent, Some(Exponent::from_int(2)));
    }

    #[test]
    fn constant_seed_is_rejected() {
        assert!(matches!(
            validate_seed(&euler(), &seed(&[((0, 0), G::one())])),
            Err(SolverError::NotASolutionPrefix { .. })
        ));
    }

    #[test]
    fn negative_exponent_is_rejected() {
        assert!(matches!(
            validate_seed(&euler(), &seed(&[((-1, 0), G::one())])),
            Err(SolverError::NegativeLeadingExponent { .. })
        ));
    }

    /// `c_{n+1} = −(n+1) c_n`, `c_0 = 1`.
    #[test]
    fn euler_coefficients() {
        let sol = extend_solution(&euler(), &seed(&[((1, 0), G::one())]), &Rational::from(10)).unwrap();
        let mut c = Integer::from(1);
        let mut n = 0i64;
        for (e, x) in sol.series.terms() {
            assert_eq!(*e, Exponent::from_int(n + 1));
            assert_eq!(*x, G::real(Rational::from(c.clone())));
            n += 1;
            c *= -n;
        }
        assert_eq!(n, 10);
        assert_eq!(sol.series.horizon(), &Horizon::finite(10));
        assert_eq!(sol.residual_valuation, Some(Exponent::from_int(11)));
    }

    /// `n c_n = c_{n−1}`.
    #[test]
    fn exponential_coefficients() {
        let f = parse_equation("D(u,1) - z*u").unwrap();
        let sol = extend_solution(&f, &seed(&[((0, 0), G::one())]), &Rational::from(10)).unwrap();
        let mut c = Rational::from(1);
        for n in 0..=10i64 {
            if n > 0 {
                c /= n;
            }
            assert_eq!(sol.series.coeff(&Exponent::from_int(n)), Some(&G::real(c.clone())));
        }
        assert_eq!(sol.series.len(), 11);
    }

    /// `(n−1) c_n = Σ_{j=1}^{n−1} c_j c_{n−j}` holds with every `c_n = 1`.
    #[test]
    fn complex_exponent_coefficients() {
        let f = parse_equation("D(u,1) - (1+i)*u - (1+i)*u^2").unwrap();
        let sol = extend_solution(&f, &seed(&[((1, 1), G::one())]), &Rational::from(12)).unwrap();
        assert_eq!(sol.series.len(), 12);
        for (n, (e, c)) in sol.series.terms().enumerate() {
            let n = n as i64 + 1;
            assert_eq!(*e, Exponent::from_ints(n, n));
            assert!(c.is_one());
        }
    }

    #[test]
    fn resonance_is_reported() {
        // characteristic s - 2 vanishes at s = 2
        let f = parse_equation("D(u,1) - 2*u - z^2").unwrap();
        assert!(matches!(
            extend_solution(&f, &seed(&[]), &Rational::from(5)),
            Err(SolverError::Resonance { .. })
        ));
    }

    #[test]
    fn residual_decreases_and_prefix_vanishes() {
        let f = euler();
        let mut phi = seed(&[((1, 0), G::one())]);
        let mut prev = Exponent::zero();
        for t in 2..8 {
            let sol = extend_solution(&f, &phi, &Rational::from(t)).unwrap();
            let r = f.substitute(&jet(&sol.series.clone().with_horizon(Horizon::Infinite), 1));
            let v = r.valuation().unwrap();
            assert!(v > prev);
            assert_eq!(Some(v.clone()), sol.residual_valuation);
            prev = v;
            phi = sol.series;
        }
    }

    #[test]
    fn float_backend_matches_exact() {
        let ctx = FloatContext::new(256);
        let s = seed(&[((1, 0), G::one())]).convert(ctx, |c| BigComplex::from_exact(c, &ctx));
        let sol = extend_solution(&euler(), &s, &Rational::from(40)).unwrap();
        let exact = extend_solution(&euler(), &seed(&[((1, 0), G::one())]), &Rational::from(40)).unwrap();
        let conv = exact.series.convert(ctx, |c| BigComplex::from_exact(c, &ctx));
        assert!(sol.series.agrees_with(&conv));
        assert_eq!(sol.series.len(), 40);
    }

    #[test]
    fn euler_mu_is_two() {
        let f = euler();
        let sol = extend_solution(&f, &seed(&[((1, 0), G::one())]), &Rational::from(10)).unwrap();
        let k = min_positive_slope(&sol.linearization).unwrap();
        let choice = choose_mu(&sol.linearization, &sol.series, &k, ROOT_MARGIN, 128).unwrap();
        assert_eq!(choice.mu, 2);
        assert_eq!(choice.checks.len(), 3);
        assert!(!choice.checks[1].passes());
        assert!(!choice.checks[1].above_bound);
    }

    #[test]
    fn exponential_mu_not_applicable() {
        let f = parse_equation("D(u,1) - z*u").unwrap();
        let sol = extend_solution(&f, &seed(&[((0, 0), G::one())]), &Rational::from(10)).unwrap();
        let k = min_positive_slope(&sol.linearization).unwrap();
        assert!(matches!(
            choose_mu(&sol.linearization, &sol.series, &k, ROOT_MARGIN, 128),
            Err(SolverError::NotApplicable(_))
        ));
    }

    #[test]
    fn synthetic_mu_scan() {
        let d = |i: usize, a: Option<G>, v: i64| DerivativeLeading {
            i,
            valuation: Some(Exponent::from_int(v)),
            a,
            sub: None,
            horizon: Horizon::Infinite,
        };
        let rep = LinearizationReport {
            order: 2,
            lambda: Exponent::zero(),
            derivatives: vec![d(0, Some(G::one()), 0), d(1, Some(G::one()), 0), d(2, None, 2)],
            p: 1,
            stable: true,
            warnings: vec![],
        };
        let phi = seed(&(0..8).map(|n| ((n, 0), G::one())).collect::<Vec<_>>());
        let choice = choose_mu(&rep, &phi, &Slope::Finite(Rational::from(1)), ROOT_MARGIN, 128).unwrap();
        assert_eq!(choice.mu, 3);
        assert!(choice.checks.iter().take(3).all(|c| c.roots_left && c.gap == Some(true)));
        assert!(choice.checks[3].max_root_re <= -4.0 + 1e-9);
    }

    #[test]
    fn root_condition_can_force_larger_mu() {
        let d = |i: usize, a: G| DerivativeLeading {
            i,
            valuation: Some(Exponent::zero()),
            a: Some(a),
            sub: None,
            horizon: Horizon::Infinite,
        };
        // Σ A_i w^i = w - 5 has its root at 5
        let rep = LinearizationReport {
            order: 2,
            lambda: Exponent::zero(),
            derivatives: vec![
                d(0, G::from_int(-5)),
                d(1, G::one()),
                DerivativeLeading { i: 2, valuation: Some(Exponent::from_int(1)), a: None, sub: None, horizon: Horizon::Infinite },
            ],
            p: 1,
            stable: true,
            warnings: vec![],
        };
        let phi = seed(&(0..8).map(|n| ((n, 0), G::one())).collect::<Vec<_>>());
        let choice = choose_mu(&rep, &phi, &Slope::Finite(Rational::from(1)), ROOT_MARGIN, 128).unwrap();
        assert_eq!(choice.mu, 6);
        assert!(!choice.checks[5].roots_left);
    }
}
