use rug::Rational;
use serde_json::{json, Value};

use super::{check_mu, characteristic_roots, continue_solution, Continuation};
use crate::analysis::{LinearizationReport, Slope};
use crate::error::SolverError;
use crate::gps::{Coefficient, Exponent, GPSeries, Horizon};
use crate::ode::{jet, PolyOde};

/// `coeff · z^α (δ + shift)^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorTerm<C: Coefficient> {
    pub coeff: C,
    pub alpha: Exponent,
    pub i: usize,
    pub shift: Exponent,
}

/// `coeff · z^β Π (z^ν ψ_i)^{q_i}` with `ψ_i = (δ + s_μ)^i ψ`.
#[derive(Clone, Debug, PartialEq)]
pub struct NTerm<C: Coefficient> {
    pub coeff: C,
    pub beta: Exponent,
    pub q: Vec<u32>,
}

/// `L(δ)ψ + L′(z,δ)ψ + N(z, z^ν ψ_0, …, z^ν ψ_m) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedEquation<C: Coefficient> {
    /// Coefficients of `L(ξ) = Σ_i A_i (ξ + s_μ)^i`, lowest degree first.
    pub l: Vec<C>,
    pub lprime: Vec<OperatorTerm<C>>,
    pub nterms: Vec<NTerm<C>>,
    pub nu: Exponent,
    pub mu: usize,
    pub s_mu: Exponent,
    pub p: usize,
    pub k: Rational,
    pub lambda: Exponent,
    pub order: usize,
    pub ctx: C::Context,
}

impl<C: Coefficient> ReducedEquation<C> {
    /// `L(γ)`.
    pub fn l_at(&self, gamma: &Exponent) -> C {
        let mut acc = C::zero(&self.ctx);
        for c in self.l.iter().rev() {
            acc = acc.mul_exact(gamma.value()).add(c);
        }
        acc
    }

    /// Left-hand side evaluated at `ψ`, computing exponents with `Re ≤ cap`.
    pub fn evaluate(&self, psi: &GPSeries<C>, cap: &Horizon) -> GPSeries<C> {
        let mut total = psi.map_by_exponent(|g, c| c.mul(&self.l_at(g)));
        for t in &self.lprime {
            let term = psi.shifted_delta_pow(&t.shift, t.i as u32).shift(&t.alpha).scale(&t.coeff);
            total = total.add(&term);
        }
        let slots: Vec<GPSeries<C>> = (0..=self.order)
            .map(|i| psi.shifted_delta_pow(&self.s_mu, i as u32).shift(&self.nu))
            .collect();
        for t in &self.nterms {
            let local_cap = cap.shifted(&Rational::from(-t.beta.re()));
            let mut prod = GPSeries::constant(t.coeff.clone());
            for (i, &qi) in t.q.iter().enumerate() {
                if qi > 0 {
                    prod = prod.mul_capped(&slots[i].pow_capped(qi, &local_cap), &local_cap);
                }
            }
            total = total.add(&prod.shift(&t.beta));
        }
        let h = total.horizon().clone().min(cap.clone());
        total.with_horizon(h)
    }

    /// Checks the structural invariants of the reduction.
    pub fn check_invariants(&self) -> Result<(), SolverError> {
        for t in &self.lprime {
            if t.alpha.re().cmp0().is_le() {
                return Err(SolverError::NonPositiveAlpha {
                    alpha: t.alpha.to_string(),
                    i: t.i,
                });
            }
            let bound = Rational::from((t.i as i64 - self.p as i64) * &self.k);
            if *t.alpha.re() < bound {
                return Err(SolverError::AlphaBelowSlopeBound {
                    alpha: t.alpha.to_string(),
                    i: t.i,
                });
            }
        }
        if let Some(t) = self.nterms.iter().find(|t| t.beta.re().cmp0().is_le()) {
            return Err(SolverError::NonPositiveBeta {
                beta: t.beta.to_string(),
            });
        }
        if self.l.len() != self.p + 1 || self.l.last().map(|c| c.is_zero()).unwrap_or(true) {
            return Err(SolverError::LeadingMismatch { i: self.p });
        }
        let nu = Rational::from((self.order - self.p) as i64 * &self.k);
        if self.nu != Exponent::real(nu) {
            return Err(SolverError::NotApplicable("nu differs from (m-p)k".into()));
        }
        Ok(())
    }

    /// Exponents generating the semigroup of the tail: `ν`, every `α` and
    /// every `β`, deduplicated and sorted.
    pub fn exponents(&self) -> Vec<Exponent> {
        let mut out: Vec<Exponent> = std::iter::once(self.nu.clone())
            .chain(self.lprime.iter().map(|t| t.alpha.clone()))
            .chain(self.nterms.iter().map(|t| t.beta.clone()))
            .collect();
        out.sort();
        out.dedup();
        out
    }

    pub fn to_json(&self) -> Value {
        let e = |x: &Exponent| serde_json::to_value(x).expect("exponent");
        json!({
            "L": self.l.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
            "Lprime": self.lprime.iter().map(|t| json!({
                "coeff": t.coeff.to_json(),
                "alpha": e(&t.alpha),
                "i": t.i,
                "shift": e(&t.shift),
            })).collect::<Vec<_>>(),
            "Nterms": self.nterms.iter().map(|t| json!({
                "coeff": t.coeff.to_json(),
                "beta": e(&t.beta),
                "q": t.q,
            })).collect::<Vec<_>>(),
            "nu": e(&self.nu),
            "mu": self.mu,
            "s_mu": e(&self.s_mu),
            "p": self.p,
            "k": crate::gps::format_rational(&self.k),
            "lambda": e(&self.lambda),
            "m": self.order,
        })
    }
}

/// `Σ_i a_i (ξ + s)^i` expanded in powers of `ξ`.
fn shifted_polynomial<C: Coefficient>(a: &[C], s: &Exponent, ctx: &C::Context) -> Vec<C> {
    let mut out = vec![C::zero(ctx); a.len()];
    for (i, ai) in a.iter().enumerate() {
        for (j, slot) in out.iter_mut().enumerate().take(i + 1) {
            let binom = rug::Integer::from(i as u32).binomial((j) as u32);
            let factor = s.value().pow((i - j) as u32).scale(&Rational::from(binom));
            *slot = slot.add(&ai.mul_exact(&factor));
        }
    }
    out
}

/// Substitutes `u = φ_μ + z^{s_μ} v` and divides by `z^{s_μ + λ}`.
///
/// Conditions i–iii are re-checked at `μ`; every structural invariant of
/// the result is verified before it is returned.
pub fn reduce_equation<C: Coefficient>(
    f: &PolyOde,
    phi: &GPSeries<C>,
    rep: &LinearizationReport<C>,
    k: &Slope,
    mu: usize,
    margin: f64,
    prec: u32,
) -> Result<ReducedEquation<C>, SolverError> {
    let k = k.as_finite().cloned().ok_or_else(|| {
        SolverError::NotApplicable("k is infinite: the solution converges and needs no reduction".into())
    })?;
    let ctx = phi.context().clone();
    let roots = characteristic_roots(rep, &ctx, prec)?;
    let check = check_mu(rep, phi, mu, &k, &roots, margin)?;
    let failing = [
        (1u8, check.roots_left, format!("max Re of the roots of L is {}", check.max_root_re)),
        (2, check.gap == Some(true), "Re(s_{mu+1} - s_mu) > 0 is not established".to_string()),
        (3, check.above_bound, format!("Re s_mu = {} is not above Re lambda + 2(m-p)k", check.s_mu)),
    ];
    if let Some((condition, _, detail)) = failing.into_iter().find(|(_, ok, _)| !ok) {
        return Err(SolverError::ConditionViolated { condition, mu, detail });
    }

    let m = f.order();
    let p = rep.p;
    let s_mu = check.s_mu.clone();
    let head = GPSeries::from_terms(
        phi.terms().take(mu + 1).map(|(e, c)| (e.clone(), c.clone())),
        Horizon::Infinite,
        ctx.clone(),
    );
    let nu = Exponent::real(Rational::from((m - p) as i64 * &k));
    let divisor = &s_mu + &rep.lambda;
    let a = rep.leading_coefficients(&ctx);

    let mut lprime = Vec::new();
    let mut nterms = Vec::new();
    let mut seen = vec![false; m + 1];
    for (j, series) in f.taylor_expand(&jet(&head, m), &s_mu) {
        let degree: u32 = j.iter().sum();
        for (e, c) in series.terms() {
            let exp = e - &divisor;
            match degree {
                1 => {
                    let i = j.iter().position(|&x| x == 1).expect("unit vector");
                    if exp.is_zero() {
                        if !c.approx_eq(&a[i]) {
                            return Err(SolverError::LeadingMismatch { i });
                        }
                        seen[i] = true;
                    } else {
                        lprime.push(OperatorTerm {
                            coeff: c.clone(),
                            alpha: exp,
                            i,
                            shift: s_mu.clone(),
                        });
                    }
                }
                _ => {
                    let shift = Exponent::new(nu.value().scale(&Rational::from(degree)));
                    nterms.push(NTerm {
                        coeff: c.clone(),
                        beta: &exp - &shift,
                        q: j.clone(),
                    });
                }
            }
        }
    }
    if let Some(i) = (0..=m).find(|&i| seen[i] == a[i].is_zero()) {
        return Err(SolverError::LeadingMismatch { i });
    }

    let red = ReducedEquation {
        l: shifted_polynomial(&a[..=p], &s_mu, &ctx),
        lprime,
        nterms,
        nu,
        mu,
        s_mu,
        p,
        k,
        lambda: rep.lambda.clone(),
        order: m,
        ctx,
    };
    red.check_invariants()?;
    Ok(red)
}

struct Reduced<'a, C: Coefficient>(&'a ReducedEquation<C>, Exponent);

impl<C: Coefficient> Continuation<C> for Reduced<'_, C> {
    fn lambda(&self) -> &Exponent {
        &self.1
    }

    fn residual(&self, approx: &GPSeries<C>, cap: &Horizon) -> GPSeries<C> {
        self.0.evaluate(approx, cap)
    }

    fn characteristic(&self, s: &Exponent) -> C {
        self.0.l_at(s)
    }

    fn vanishing(&self, s: &Exponent) -> SolverError {
        SolverError::ZeroDivisor {
            exponent: s.to_string(),
        }
    }
}

/// Solves the reduced equation for `ψ` up to `Re γ ≤ target`; each
/// coefficient is `c_γ = −(earlier contributions)/L(γ)`.
pub fn reduced_extend<C: Coefficient>(
    red: &ReducedEquation<C>,
    target: &Rational,
) -> Result<GPSeries<C>, SolverError> {
    let start = GPSeries::zero(Horizon::Infinite, red.ctx.clone());
    continue_solution(&Reduced(red, Exponent::zero()), &start, target)
}

/// `φ_μ + z^{s_μ} ψ` as a series.
pub fn recombine<C: Coefficient>(
    phi: &GPSeries<C>,
    red: &ReducedEquation<C>,
    psi: &GPSeries<C>,
) -> GPSeries<C> {
    let head = GPSeries::from_terms(
        phi.terms().take(red.mu + 1).map(|(e, c)| (e.clone(), c.clone())),
        Horizon::Infinite,
        red.ctx.clone(),
    );
    head.add(&psi.shift(&red.s_mu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::min_positive_slope;
    use crate::solver::{extend_solution, ROOT_MARGIN};
    use crate::ode::parse_equation;
    use crate::gps::GaussianRational;
    use rug::Integer;

    type G = GaussianRational;

    fn euler_setup(target: i64) -> (PolyOde, crate::solver::Solution<G>, Slope) {
        let f = parse_equation("z*D(u,1) + u - z").unwrap();
        let seed = GPSeries::monomial(Exponent::from_int(1), G::one());
        let sol = extend_solution(&f, &seed, &Rational::from(target)).unwrap();
        let k = min_positive_slope(&sol.linearization).unwrap();
        (f, sol, k)
    }

    /// By hand: `F(z, φ_2) = 6z⁴`, `∂F/∂u_1 = z`, so after dividing by
    /// `z³` the equation is `ψ + z(δ+3)ψ + 6z = 0`.
    #[test]
    fn euler_reduction_at_two() {
        let (f, sol, k) = euler_setup(12);
        let red = reduce_equation(&f, &sol.series, &sol.linearization, &k, 2, ROOT_MARGIN, 128).unwrap();
        assert_eq!(red.l, vec![G::one()]);
        assert_eq!(
            red.lprime,
            vec![OperatorTerm {
                coeff: G::one(),
                alpha: Exponent::from_int(1),
                i: 1,
                shift: Exponent::from_int(3)
            }]
        );
        assert_eq!(
            red.nterms,
            vec![NTerm {
                coeff: G::from_int(6),
                beta: Exponent::from_int(1),
                q: vec![0, 0]
            }]
        );
        assert_eq!(red.nu, Exponent::from_int(1));
        assert_eq!(red.s_mu, Exponent::from_int(3));
        assert_eq!(red.exponents(), vec![Exponent::from_int(1)]);
    }

    /// With `s_μ = 4`: `F(z, φ_3) = −24z⁵`, so `N = −24z`, `L′ = z(δ+4)`.
    #[test]
    fn euler_reduction_at_three() {
        let (f, sol, k) = euler_setup(12);
        let red = reduce_equation(&f, &sol.series, &sol.linearization, &k, 3, ROOT_MARGIN, 128).unwrap();
        assert_eq!(red.l, vec![G::one()]);
        assert_eq!(red.lprime[0].shift, Exponent::from_int(4));
        assert_eq!(red.nterms[0].coeff, G::from_int(-24));
        assert_eq!(red.nu, Exponent::from_int(1));
        red.check_invariants().unwrap();
    }

    #[test]
    fn condition_three_is_enforced() {
        let (f, sol, k) = euler_setup(12);
        match reduce_equation(&f, &sol.series, &sol.linearization, &k, 1, ROOT_MARGIN, 128) {
            Err(SolverError::ConditionViolated { condition: 3, mu: 1, .. }) => {}
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn convergent_case_not_applicable() {
        let f = parse_equation("D(u,1) - z*u").unwrap();
        let seed = GPSeries::constant(G::one());
        let sol = extend_solution(&f, &seed, &Rational::from(8)).unwrap();
        let k = min_positive_slope(&sol.linearization).unwrap();
        assert!(matches!(
            reduce_equation(&f, &sol.series, &sol.linearization, &k, 2, ROOT_MARGIN, 128),
            Err(SolverError::NotApplicable(_))
        ));
    }

    /// `ψ = Σ_{n≥1} (−1)^n (n+2)! / 2 · z^n` is the Euler tail shifted by `z³`.
    #[test]
    fn reduced_solution_is_the_shifted_tail() {
        let (f, sol, k) = euler_setup(20);
        let red = reduce_equation(&f, &sol.series, &sol.linearization, &k, 2, ROOT_MARGIN, 128).unwrap();
        let psi = reduced_extend(&red, &Rational::from(17)).unwrap();
        assert_eq!(psi.coeff(&Exponent::from_int(1)), Some(&G::from_int(-6)));
        assert_eq!(psi.coeff(&Exponent::from_int(2)), Some(&G::from_int(24)));
        for (e, c) in psi.terms() {
            let n = e.re().numer().to_u32().unwrap();
            let mut fact = Integer::from(Integer::factorial(n + 2));
            if n % 2 == 1 {
                fact = -fact;
            }
            assert_eq!(*c, G::real(Rational::from(fact)));
        }
        let back = recombine(&sol.series, &red, &psi);
        assert!(back.agrees_with(&sol.series));
        assert_eq!(back.len(), sol.series.len());
    }

    #[test]
    fn dual_engines_agree_on_a_nonlinear_equation() {
        // u_0 = z + z u_1 + z u_0^2 style equation with k = 1
        let f = parse_equation("z*D(u,1) - u + z + z*u^2").unwrap();
        let seed = GPSeries::monomial(Exponent::from_int(1), G::one());
        let sol = extend_solution(&f, &seed, &Rational::from(14)).unwrap();
        let k = min_positive_slope(&sol.linearization).unwrap();
        assert_eq!(k, Slope::Finite(Rational::from(1)));
        let choice = crate::solver::choose_mu(&sol.linearization, &sol.series, &k, ROOT_MARGIN, 128).unwrap();
        let red = reduce_equation(&f, &sol.series, &sol.linearization, &k, choice.mu, ROOT_MARGIN, 128).unwrap();
        let target = Rational::from(14 - red.s_mu.re());
        let psi = reduced_extend(&red, &target).unwrap();
        let back = recombine(&sol.series, &red, &psi);
        assert!(back.agrees_with(&sol.series));
        assert_eq!(back.len(), sol.series.len());
    }

    #[test]
    fn shifted_polynomial_expands() {
        // (ξ + 2)^2 + 3(ξ + 2) + 1 = ξ^2 + 7ξ + 11
        let a = vec![G::one(), G::from_int(3), G::one()];
        let l = shifted_polynomial(&a, &Exponent::from_int(2), &());
        assert_eq!(l, vec![G::from_int(11), G::from_int(7), G::one()]);
    }
}
