//! Linearization of an equation along a truncated solution and the Newton
//! polygon of the linearized operator.

mod polygon;

pub use polygon::{newton_polygon, NewtonPolygon, Slope};

use rug::Rational;
use serde_json::{json, Value};

use crate::error::AnalysisError;
use crate::gps::{format_rational, Coefficient, Exponent, GPSeries, Horizon};
use crate::ode::{jet, PolyOde};

/// Leading data of `∂F/∂u_i(z, Φ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeLeading<C: Coefficient> {
    pub i: usize,
    /// `None` when the series vanishes up to its horizon.
    pub valuation: Option<Exponent>,
    /// `A_i`, present only when the valuation equals `λ`.
    pub a: Option<C>,
    /// `(λ_i, B_i)`: the first term after `A_i z^λ`, or the leading term
    /// when `A_i = 0`.
    pub sub: Option<(Exponent, C)>,
    pub horizon: Horizon,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearizationReport<C: Coefficient> {
    pub order: usize,
    pub lambda: Exponent,
    pub derivatives: Vec<DerivativeLeading<C>>,
    pub p: usize,
    /// Leading data agreed with a recomputation at half the horizon.
    pub stable: bool,
    pub warnings: Vec<String>,
}

impl<C: Coefficient> LinearizationReport<C> {
    /// `A_0, …, A_m` with zeros filled in.
    pub fn leading_coefficients(&self, ctx: &C::Context) -> Vec<C> {
        self.derivatives
            .iter()
            .map(|d| d.a.clone().unwrap_or_else(|| C::zero(ctx)))
            .collect()
    }

    /// `(i, Re val ∂F/∂u_i)` for the derivatives that do not vanish.
    pub fn points(&self) -> Vec<(usize, Rational)> {
        self.derivatives
            .iter()
            .filter_map(|d| d.valuation.as_ref().map(|v| (d.i, v.re().clone())))
            .collect()
    }

    pub fn require_stable(&self) -> Result<(), AnalysisError> {
        if self.stable {
            Ok(())
        } else {
            Err(AnalysisError::Unstable(
                "leading data changed between horizons; extend the series".into(),
            ))
        }
    }

    pub(crate) fn same_leading_data(&self, other: &Self) -> bool {
        self.lambda == other.lambda
            && self.p == other.p
            && self.derivatives.iter().zip(&other.derivatives).all(|(a, b)| match (&a.a, &b.a) {
                (None, None) => true,
                (Some(x), Some(y)) => x.approx_eq(y),
                _ => false,
            })
    }

    pub fn to_json(&self) -> Value {
        let derivs: Vec<Value> = self
            .derivatives
            .iter()
            .map(|d| {
                json!({
                    "i": d.i,
                    "valuation": d.valuation.as_ref().map(|v| serde_json::to_value(v).expect("exponent")),
                    "A": d.a.as_ref().map(|a| a.to_json()),
                    "sub": d.sub.as_ref().map(|(s, b)| json!({
                        "lambda_i": serde_json::to_value(s).expect("exponent"),
                        "B": b.to_json(),
                    })),
                    "horizon": d.horizon.to_json(),
                })
            })
            .collect();
        json!({
            "order": self.order,
            "lambda": serde_json::to_value(&self.lambda).expect("exponent"),
            "p": self.p,
            "derivatives": derivs,
            "stable": self.stable,
            "warnings": self.warnings,
        })
    }
}

fn leading_data<C: Coefficient>(
    f: &PolyOde,
    phi: &GPSeries<C>,
) -> Result<LinearizationReport<C>, AnalysisError> {
    let m = f.order();
    let jet = jet(phi, m);
    let series: Vec<GPSeries<C>> = (0..=m)
        .map(|i| f.partial_derivative(i).substitute(&jet))
        .collect();

    if series.iter().all(|s| s.is_empty()) {
        if series.iter().any(|s| s.horizon().as_finite().is_some()) {
            return Err(AnalysisError::Unstable(
                "every derivative vanishes up to its horizon".into(),
            ));
        }
        return Err(AnalysisError::AllLeadingZero);
    }
    if series[m].is_empty() && series[m].horizon().as_finite().is_none() {
        return Err(AnalysisError::DerivativeIdenticallyZero(m));
    }

    let lambda = series
        .iter()
        .filter_map(|s| s.valuation().ok())
        .min()
        .expect("some derivative is nonzero");

    let mut warnings = Vec::new();
    let mut derivatives = Vec::with_capacity(m + 1);
    for (i, s) in series.iter().enumerate() {
        if s.is_empty() {
            if !s.horizon().covers(lambda.re()) {
                return Err(AnalysisError::Unstable(format!(
                    "dF/du_{} is not certified up to Re lambda = {}",
                    i,
                    format_rational(lambda.re())
                )));
            }
            if i == m {
                return Err(AnalysisError::DerivativeIdenticallyZero(m));
            }
            warnings.push(format!(
                "dF/du_{} vanishes up to {}; omitted from the polygon",
                i,
                s.horizon()
            ));
            derivatives.push(DerivativeLeading {
                i,
                valuation: None,
                a: None,
                sub: None,
                horizon: s.horizon().clone(),
            });
            continue;
        }
        let val = s.valuation().expect("nonempty");
        if val != lambda && val.re() == lambda.re() {
            return Err(AnalysisError::MixedLeadingExponents {
                i,
                exponent: val.to_string(),
                lambda: lambda.to_string(),
            });
        }
        let mut terms = s.terms();
        let (a, sub) = if val == lambda {
            let (_, c) = terms.next().expect("nonempty");
            (Some(c.clone()), terms.next())
        } else {
            (None, terms.next())
        };
        derivatives.push(DerivativeLeading {
            i,
            valuation: Some(val),
            a,
            sub: sub.map(|(e, c)| (e.clone(), c.clone())),
            horizon: s.horizon().clone(),
        });
    }
    let p = derivatives
        .iter()
        .rposition(|d| d.a.is_some())
        .ok_or(AnalysisError::AllLeadingZero)?;
    Ok(LinearizationReport {
        order: m,
        lambda,
        derivatives,
        p,
        stable: true,
        warnings,
    })
}

/// Leading data of `∂F/∂u_i(z, Φ)` for `i = 0..m` along `φ`.
///
/// With a finite horizon `Θ` the data is recomputed from `φ` truncated at
/// `Θ/2`; `stable` records whether `(A_i, λ, p)` agree.
pub fn linearize<C: Coefficient>(
    f: &PolyOde,
    phi: &GPSeries<C>,
) -> Result<LinearizationReport<C>, AnalysisError> {
    let mut report = leading_data(f, phi)?;
    if let Some(theta) = phi.horizon().as_finite() {
        let half = Rational::from(theta / 2u32);
        let coarse = phi
            .truncate(&half)
            .map_err(|e| AnalysisError::Unstable(e.to_string()))
            .and_then(|short| leading_data(f, &short));
        report.stable = match coarse {
            Ok(c) => report.same_leading_data(&c),
            Err(_) => false,
        };
    }
    Ok(report)
}

/// `k = min_{i>p} (Re λ_i − Re λ)/(i − p)`, or `∞` when `p = m`,
/// cross-checked against the Newton polygon.
pub fn min_positive_slope<C: Coefficient>(
    rep: &LinearizationReport<C>,
) -> Result<Slope, AnalysisError> {
    let formula = if rep.p == rep.order {
        Slope::Infinite
    } else {
        rep.derivatives
            .iter()
            .filter(|d| d.i > rep.p)
            .filter_map(|d| {
                let lam = d.sub.as_ref().map(|(e, _)| e.re()).or(d.valuation.as_ref().map(|v| v.re()))?;
                Some(Rational::from(lam - rep.lambda.re()) / Rational::from((d.i - rep.p) as i64))
            })
            .min()
            .map(Slope::Finite)
            .unwrap_or(Slope::Infinite)
    };
    let mut points = rep.points();
    if points.iter().all(|(i, _)| *i != rep.p) {
        points.push((rep.p, rep.lambda.re().clone()));
    }
    let hull = newton_polygon(&points)?;
    if hull.k != formula {
        return Err(AnalysisError::Inconsistent {
            formula: formula.to_string(),
            hull: hull.k.to_string(),
        });
    }
    Ok(formula)
}
