//! Roots of a complex polynomial: companion-matrix eigenvalues in double
//! precision, polished by Newton steps at the requested precision.

use nalgebra::{Complex as C64, DMatrix};
use rug::{Complex, Float};

use crate::error::SolverError;

fn eval(coeffs: &[Complex], w: &Complex, prec: u32) -> (Complex, Complex) {
    let mut p = Complex::new(prec);
    let mut dp = Complex::new(prec);
    for c in coeffs.iter().rev() {
        dp = Complex::with_val(prec, &dp * w) + &p;
        p = Complex::with_val(prec, &p * w) + c;
    }
    (p, dp)
}

/// Roots of `Σ coeffs[i] w^i`; the leading coefficient must be nonzero.
pub fn polynomial_roots(coeffs: &[Complex], prec: u32) -> Result<Vec<Complex>, SolverError> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = &coeffs[deg];
    if lead.is_zero() {
        return Err(SolverError::RootFinding("leading coefficient vanishes".into()));
    }
    let monic: Vec<Complex> = coeffs
        .iter()
        .map(|c| Complex::with_val(prec, c / lead))
        .collect();
    if deg == 1 {
        return Ok(vec![-monic[0].clone()]);
    }

    let to64 = |c: &Complex| C64::new(c.real().to_f64(), c.imag().to_f64());
    let mut companion = DMatrix::<C64<f64>>::zeros(deg, deg);
    for r in 1..deg {
        companion[(r, r - 1)] = C64::new(1.0, 0.0);
    }
    for r in 0..deg {
        companion[(r, deg - 1)] = -to64(&monic[r]);
    }
    let eig = companion
        .clone()
        .try_schur(1e-14, 10_000)
        .ok_or_else(|| SolverError::RootFinding("Schur iteration did not converge".into()))?
        .eigenvalues()
        .ok_or_else(|| SolverError::RootFinding("no eigenvalues".into()))?;

    let tol = Float::with_val(prec, Float::i_exp(1, -(prec as i32) + 8));
    let mut roots = Vec::with_capacity(deg);
    for z in eig.iter() {
        let mut w = Complex::with_val(prec, (z.re, z.im));
        for _ in 0..200 {
            let (p, dp) = eval(&monic, &w, prec);
            if dp.is_zero() {
                break;
            }
            let step = Complex::with_val(prec, &p / &dp);
            w -= &step;
            let size = Float::with_val(prec, step.abs_ref());
            let scale = Float::with_val(prec, w.abs_ref()).max(&Float::with_val(prec, 1));
            if size <= Float::with_val(prec, &tol * &scale) {
                break;
            }
        }
        roots.push(w);
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::with_val(128, (re, im))
    }

    #[test]
    fn quadratic_roots_are_polished() {
        // (w - 1)(w + 2) = w^2 + w - 2
        let mut roots = polynomial_roots(&[c(-2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)], 128).unwrap();
        roots.sort_by(|a, b| a.real().partial_cmp(b.real()).unwrap());
        let err0 = Complex::with_val(128, &roots[0] + 2).abs().real().to_f64();
        let err1 = Complex::with_val(128, &roots[1] - 1).abs().real().to_f64();
        assert!(err0 < 1e-30 && err1 < 1e-30);
    }

    #[test]
    fn complex_coefficients() {
        // (w - i)(w - 1 - i) = w^2 - (1+2i) w + (i - 1)
        let roots = polynomial_roots(&[c(-1.0, 1.0), c(-1.0, -2.0), c(1.0, 0.0)], 128).unwrap();
        for r in &roots {
            let (p, _) = eval(&[c(-1.0, 1.0), c(-1.0, -2.0), c(1.0, 0.0)], r, 128);
            assert!(p.abs().real().to_f64() < 1e-30);
        }
    }

    #[test]
    fn degenerate_degrees() {
        assert!(polynomial_roots(&[c(3.0, 0.0)], 64).unwrap().is_empty());
        let r = polynomial_roots(&[c(2.0, 0.0), c(4.0, 0.0)], 64).unwrap();
        assert_eq!(r[0].real().to_f64(), -0.5);
    }
}
