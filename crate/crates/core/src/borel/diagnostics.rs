//! Coefficient-level Gevrey diagnostics: `Γ`-normalization, a
//! Cauchy–Hadamard radius regression, the `A·B^{Re s}·|Γ(1+s/k)|` growth
//! fit and the weighted grid norms.

use rug::{Complex, Float, Rational};
use serde_json::{json, Value};

use super::gamma::LogGamma;
use super::grid::{index_weight, TaylorGrid};
use super::SemigroupBasis;
use crate::analysis::Slope;
use crate::error::BorelError;
use crate::gps::{Coefficient, Exponent, GPSeries, GaussianRational};

/// Fewest nonzero terms accepted by the regressions.
pub const MIN_TERMS: usize = 30;

/// Increase of the fitted slope between the third and last quarter of the
/// terms beyond which a sequence counts as super-geometric.
pub const CURVATURE_TOLERANCE: f64 = 0.05;

/// Round to 12 significant digits so that printed values are stable.
pub fn fixed(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.11e}", x).parse().unwrap_or(x)
}

fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        json!(fixed(x))
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

/// One term of `d_γ = c_γ / Γ(1 + γ/k)`.
#[derive(Clone, Debug)]
pub struct NormalizedTerm {
    pub exponent: Exponent,
    pub c: Complex,
    pub ln_abs_c: f64,
    /// `Re log Γ(1 + γ/k)`, zero for `k = ∞`.
    pub ln_gamma: f64,
    pub d: Complex,
}

impl NormalizedTerm {
    pub fn ln_abs_d(&self) -> f64 {
        self.ln_abs_c - self.ln_gamma
    }

    pub fn x(&self) -> f64 {
        self.exponent.re().to_f64()
    }
}

#[derive(Clone, Debug)]
pub struct BorelTable {
    pub k: Slope,
    pub terms: Vec<NormalizedTerm>,
}

fn exponent_complex(g: &GaussianRational, prec: u32) -> Complex {
    Complex::with_val(prec, (Float::with_val(prec, g.re()), Float::with_val(prec, g.im())))
}

fn ln_abs(c: &Complex) -> f64 {
    let a = Float::with_val(c.prec().0.max(64), c.abs_ref());
    a.ln().to_f64()
}

/// Termwise `c_γ ↦ c_γ / Γ(1 + γ/k)`; the identity when `k = ∞`.
pub fn borel_normalize<C: Coefficient>(
    series: &GPSeries<C>,
    k: &Slope,
    lg: &LogGamma,
) -> Result<BorelTable, BorelError> {
    let prec = lg.precision();
    let mut terms = Vec::with_capacity(series.len());
    for (e, c) in series.terms() {
        let c = c.to_complex(prec);
        if c.is_zero() {
            continue;
        }
        let (ln_gamma, d) = match k {
            Slope::Infinite => (0.0, c.clone()),
            Slope::Finite(k) => {
                let w = exponent_complex(&e.value().scale(&Rational::from(k.recip_ref())), prec) + 1u32;
                let lgw = lg.eval(&w)?;
                let d = Complex::with_val(prec, &c * Complex::with_val(prec, -lgw.clone()).exp());
                (lgw.real().to_f64(), d)
            }
        };
        terms.push(NormalizedTerm {
            exponent: e.clone(),
            ln_abs_c: ln_abs(&c),
            c,
            ln_gamma,
            d,
        });
    }
    Ok(BorelTable { k: k.clone(), terms })
}

/// Least-squares line `y ≈ slope·x + intercept` with its `r²`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

struct Quarters {
    tail: f64,
    tail_r2: f64,
    third: f64,
    last: f64,
}

fn quarter_slopes(xs: &[f64], ys: &[f64]) -> Quarters {
    let n = xs.len();
    let (h, q) = (n / 2, 3 * n / 4);
    let (tail, _, tail_r2) = linear_fit(&xs[h..], &ys[h..]);
    let (third, _, _) = linear_fit(&xs[h..q], &ys[h..q]);
    let (last, _, _) = linear_fit(&xs[q..], &ys[q..]);
    Quarters {
        tail,
        tail_r2,
        third,
        last,
    }
}

fn require_terms(table: &BorelTable) -> Result<(), BorelError> {
    if table.terms.len() < MIN_TERMS {
        return Err(BorelError::TooFewTerms {
            have: table.terms.len(),
            need: MIN_TERMS,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadiusEstimate {
    pub estimate: f64,
    pub confidence: f64,
    /// The decay is faster than geometric; `estimate` is only a lower bound.
    pub lower_bound: bool,
    pub terms: usize,
}

impl RadiusEstimate {
    pub fn to_json(&self) -> Value {
        json!({
            "estimate": json_f64(self.estimate),
            "confidence": json_f64(self.confidence),
            "lower_bound": self.lower_bound,
            "terms": self.terms,
        })
    }
}

/// Fit of `−log|d_γ|` against `Re γ` over the tail half; the radius is
/// `exp(slope)`.
pub fn radius_estimate(table: &BorelTable) -> Result<RadiusEstimate, BorelError> {
    require_terms(table)?;
    let xs: Vec<f64> = table.terms.iter().map(NormalizedTerm::x).collect();
    let ys: Vec<f64> = table.terms.iter().map(|t| -t.ln_abs_d()).collect();
    let underflow = ys.iter().any(|y| !y.is_finite());
    let q = quarter_slopes(&xs, &ys);
    let accelerating = q.last - q.third > CURVATURE_TOLERANCE;
    let (estimate, lower_bound) = if underflow || accelerating {
        (q.last.max(q.tail).exp(), true)
    } else {
        (q.tail.exp(), false)
    };
    Ok(RadiusEstimate {
        estimate,
        confidence: q.tail_r2,
        lower_bound,
        terms: table.terms.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthFit {
    pub ln_a: f64,
    pub ln_b: f64,
    /// `log|d_n| − log A − Re s_n · log B`, never positive.
    pub margins: Vec<f64>,
    /// The normalized sequence grows faster than geometrically.
    pub failure: bool,
}

impl GrowthFit {
    pub fn a(&self) -> f64 {
        self.ln_a.exp()
    }

    pub fn b(&self) -> f64 {
        self.ln_b.exp()
    }

    pub fn max_margin(&self) -> f64 {
        self.margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "A": json_f64(self.a()),
            "B": json_f64(self.b()),
            "max_margin": json_f64(self.max_margin()),
            "failure": self.failure,
        })
    }
}

/// `B` from the tail-half slope of `log|d_n|` against `Re s_n`, then the
/// least `A` with `|c_n| ≤ A·B^{Re s_n}·|Γ(1+s_n/k)|` on every term.
pub fn growth_fit(table: &BorelTable) -> Result<GrowthFit, BorelError> {
    require_terms(table)?;
    let xs: Vec<f64> = table.terms.iter().map(NormalizedTerm::x).collect();
    let ys: Vec<f64> = table.terms.iter().map(NormalizedTerm::ln_abs_d).collect();
    let q = quarter_slopes(&xs, &ys);
    let ln_b = q.tail;
    let ln_a = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y - ln_b * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let margins = xs.iter().zip(&ys).map(|(x, y)| (y - ln_b * x) - ln_a).collect();
    let failure = q.last - q.third > CURVATURE_TOLERANCE && q.last > 0.0;
    Ok(GrowthFit {
        ln_a,
        ln_b,
        margins,
        failure,
    })
}

/// `|c|^{1/Re s}` of the last term, the root test on raw coefficients.
pub fn root_decay(table: &BorelTable) -> Option<f64> {
    let t = table.terms.last()?;
    Some((t.ln_abs_c / t.x()).exp())
}

/// Partial sum of `Σ |γ|^j / |Γ(γ/k)| · |a_γ| · scale^{m_1+…+m_τ}`.
pub fn weighted_norm<C: Coefficient>(
    grid: &TaylorGrid<C>,
    j: u32,
    k: &Rational,
    scale: f64,
    lg: &LogGamma,
) -> Result<f64, BorelError> {
    let prec = lg.precision();
    let kinv = Rational::from(k.recip_ref());
    let mut sum = 0.0;
    for (m, a) in &grid.coeffs {
        let gamma = grid.exponent(m);
        let g = exponent_complex(gamma.value(), prec);
        let ln_gamma = lg.ln_abs(&exponent_complex(&gamma.value().scale(&kinv), prec))?.to_f64();
        let ln_term = j as f64 * ln_abs(&g) + ln_abs(&a.to_complex(prec)) + index_weight(m) as f64 * scale.ln()
            - ln_gamma;
        sum += ln_term.exp();
    }
    Ok(sum)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormValue {
    pub j: u32,
    pub scale: f64,
    pub value: f64,
}

/// Everything the `borel` command reports.
#[derive(Clone, Debug)]
pub struct GevreyDiagnostics {
    pub k: Slope,
    pub basis: Option<SemigroupBasis>,
    pub table: BorelTable,
    pub radius: Result<RadiusEstimate, BorelError>,
    pub growth: Option<Result<GrowthFit, BorelError>>,
    pub norms: Vec<NormValue>,
}

impl GevreyDiagnostics {
    pub fn to_json(&self) -> Value {
        let err = |e: &BorelError| json!({"error": e.to_string()});
        json!({
            "k": self.k.to_string(),
            "basis": self.basis.as_ref().map(|b| b.basis.iter().map(|r| serde_json::to_value(r).expect("exponent")).collect::<Vec<_>>()),
            "grid_dims": self.basis.as_ref().map(|b| b.dims()),
            "terms": self.table.terms.len(),
            "radius": match &self.radius {
                Ok(r) => r.to_json(),
                Err(e) => err(e),
            },
            "growth": match &self.growth {
                Some(Ok(g)) => g.to_json(),
                Some(Err(e)) => err(e),
                None => Value::Null,
            },
            "norms": self.norms.iter().map(|n| json!({"j": n.j, "scale": json_f64(n.scale), "value": json_f64(n.value)})).collect::<Vec<_>>(),
        })
    }

    /// Log plot of `log|c_n|` and `log|Γ(1+s_n/k)|` against `Re s_n`.
    pub fn to_svg(&self) -> String {
        let pts: Vec<(f64, f64, f64)> = self.table.terms.iter().map(|t| (t.x(), t.ln_abs_c, t.ln_gamma)).collect();
        let (w, h, pad) = (640.0, 400.0, 40.0);
        let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let ymin = pts.iter().flat_map(|p| [p.1, p.2]).fold(f64::INFINITY, f64::min);
        let ymax = pts.iter().flat_map(|p| [p.1, p.2]).fold(f64::NEG_INFINITY, f64::max);
        let sx = |x: f64| pad + (x - xmin) / (xmax - xmin).max(1e-9) * (w - 2.0 * pad);
        let sy = |y: f64| h - pad - (y - ymin) / (ymax - ymin).max(1e-9) * (h - 2.0 * pad);
        let path = |sel: fn(&(f64, f64, f64)) -> f64| {
            pts.iter()
                .enumerate()
                .map(|(i, p)| format!("{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, sx(p.0), sy(sel(p))))
                .collect::<String>()
        };
        let mut out = String::new();
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
        ));
        out.push_str(&format!(
            "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\" stroke-width=\"1\"/>\n",
            w - 2.0 * pad,
            h - 2.0 * pad
        ));
        if !pts.is_empty() {
            out.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\"/>\n",
                path(|p| p.1)
            ));
            out.push_str(&format!(
                "<path d=\"{}\" fill=\"none\" stroke=\"#b3411b\" stroke-width=\"1\"/>\n",
                path(|p| p.2)
            ));
        }
        out.push_str(&format!(
            "<text x=\"{pad}\" y=\"{:.0}\" font-size=\"12\">log|c_n| (blue), log|Gamma(1+s_n/k)| (red), k = {}</text>\n",
            pad - 12.0,
            self.k
        ));
        out.push_str(&format!(
            "<text x=\"{pad}\" y=\"{:.0}\" font-size=\"12\">Re s from {:.3} to {:.3}</text>\n",
            h - 12.0,
            fixed(xmin),
            fixed(xmax)
        ));
        out.push_str("</svg>\n");
        out
    }
}
