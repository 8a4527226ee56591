//! Principal branch of `log Γ` at arbitrary precision.
//!
//! The default evaluator shifts the argument to the right with
//! `log Γ(w) = log Γ(w + n) − Σ log(w + j)` and sums the Stirling series
//! with exact Bernoulli numbers. Spouge's formula is kept as an
//! independent second evaluator.

use nalgebra::Complex as C64;
use rug::float::Constant;
use rug::{Complex, Float, Integer, Rational};

use crate::error::BorelError;

#[derive(Clone, Debug)]
pub struct LogGamma {
    prec: u32,
    work: u32,
    radius: f64,
    /// `B_2, B_4, …`
    bernoulli: Vec<Rational>,
    spouge_a: u32,
    spouge_prec: u32,
    /// `c_0, …, c_{a−1}`
    spouge: Vec<Float>,
}

fn bernoulli_even(count: usize) -> Vec<Rational> {
    let m_max = 2 * count;
    let mut b: Vec<Rational> = Vec::with_capacity(m_max + 1);
    b.push(Rational::from(1));
    for m in 1..=m_max {
        if m > 1 && m % 2 == 1 {
            b.push(Rational::new());
            continue;
        }
        let mut acc = Rational::new();
        let mut binom = Integer::from(1);
        for (k, bk) in b.iter().enumerate() {
            // binom = C(m + 1, k)
            if bk.cmp0().is_ne() {
                acc += Rational::from(bk * &binom);
            }
            binom *= (m + 1 - k) as u64;
            binom /= (k + 1) as u64;
        }
        b.push(-acc / Rational::from(m + 1));
    }
    (1..=count).map(|n| b[2 * n].clone()).collect()
}

impl LogGamma {
    pub fn new(prec: u32) -> Self {
        let prec = prec.max(16);
        let work = prec + 32;
        let radius = 0.16 * work as f64 + 10.0;

        // Stirling terms at |z| ≥ radius/√2 until below 2^{-work}
        let eff = radius / std::f64::consts::SQRT_2;
        let mut count = 1usize;
        loop {
            let n = count as f64;
            // log2 |B_2n| ≈ log2(2 (2n)! / (2π)^{2n})
            let lb = 1.0 + ln_factorial(2.0 * n) / std::f64::consts::LN_2
                - 2.0 * n * (2.0 * std::f64::consts::PI).log2();
            let term = lb - (2.0 * n * (2.0 * n - 1.0)).log2() - (2.0 * n - 1.0) * eff.log2();
            if term < -(work as f64) - 8.0 || count >= 4000 {
                break;
            }
            count += 1;
        }
        let bernoulli = bernoulli_even(count);

        let spouge_a = (work as f64 / (2.0 * std::f64::consts::PI).log2()).ceil() as u32 + 1;
        let spouge_prec = work + 2 * spouge_a + 16;
        let spouge = spouge_coefficients(spouge_a, spouge_prec);

        LogGamma {
            prec,
            work,
            radius,
            bernoulli,
            spouge_a,
            spouge_prec,
            spouge,
        }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    fn check_pole(w: &Complex) -> Result<(), BorelError> {
        if w.imag().is_zero() && w.real().is_integer() && *w.real() <= 0 {
            return Err(BorelError::PoleOfGamma(w.real().to_string_radix(10, Some(8))));
        }
        Ok(())
    }

    /// `log Γ(w)`, principal branch, rounded to the working precision.
    pub fn eval(&self, w: &Complex) -> Result<Complex, BorelError> {
        Self::check_pole(w)?;
        let p = self.work;
        let mut z = Complex::with_val(p, w);
        let mut shift = Complex::new(p);
        while *z.real() < self.radius {
            shift += Complex::with_val(p, z.ln_ref());
            z += 1;
        }
        let half = Float::with_val(p, 0.5);
        let ln_z = Complex::with_val(p, z.ln_ref());
        let mut out = Complex::with_val(p, &z - &half) * &ln_z - &z;
        let ln_2pi = Float::with_val(p, Float::with_val(p, Constant::Pi) * 2u32).ln();
        out += Float::with_val(p, &ln_2pi * &half);

        let zinv = Complex::with_val(p, z.recip_ref());
        let zinv2 = Complex::with_val(p, zinv.square_ref());
        let mut pow = zinv;
        let tol = Float::with_val(p, Float::i_exp(1, -(p as i32)));
        for (idx, b) in self.bernoulli.iter().enumerate() {
            let n = (idx + 1) as u64;
            let factor = Float::with_val(p, b) / Float::with_val(p, 2 * n * (2 * n - 1));
            let term = Complex::with_val(p, &pow * &factor);
            out += &term;
            if Float::with_val(p, term.abs_ref()) < tol {
                break;
            }
            pow *= &zinv2;
        }
        out -= shift;
        Ok(Complex::with_val(self.prec, out))
    }

    /// `Re log Γ(w) = log |Γ(w)|`.
    pub fn ln_abs(&self, w: &Complex) -> Result<Float, BorelError> {
        Ok(self.eval(w)?.real().clone())
    }

    /// `log Γ(w)` by Spouge's formula, with the branch of the imaginary
    /// part matched to the principal one.
    pub fn spouge(&self, w: &Complex) -> Result<Complex, BorelError> {
        Self::check_pole(w)?;
        let p = self.spouge_prec;
        let mut v = Complex::with_val(p, w);
        let mut shift = Complex::new(p);
        while *v.real() < 1 {
            shift += Complex::with_val(p, v.ln_ref());
            v += 1;
        }
        let z = Complex::with_val(p, &v - 1u32);
        let mut s = Complex::with_val(p, &self.spouge[0]);
        for (k, c) in self.spouge.iter().enumerate().skip(1) {
            let d = Complex::with_val(p, &z + k as u32);
            s += Complex::with_val(p, c / &d);
        }
        let za = Complex::with_val(p, &z + self.spouge_a);
        let half = Float::with_val(p, 0.5);
        let mut out = Complex::with_val(p, &z + &half) * Complex::with_val(p, za.ln_ref()) - &za;
        out += s.ln();
        out -= shift;

        let approx = ln_gamma_f64(C64::new(w.real().to_f64(), w.imag().to_f64()));
        let two_pi = Float::with_val(p, Float::with_val(p, Constant::Pi) * 2u32);
        let turns = ((out.imag().to_f64() - approx.im) / (2.0 * std::f64::consts::PI)).round();
        if turns != 0.0 {
            let fix = Float::with_val(p, &two_pi * turns);
            out -= Complex::with_val(p, (Float::new(p), fix));
        }
        Ok(Complex::with_val(self.prec, out))
    }
}

fn ln_factorial(n: f64) -> f64 {
    (1..=n as u64).map(|k| (k as f64).ln()).sum()
}

fn spouge_coefficients(a: u32, p: u32) -> Vec<Float> {
    let pi = Float::with_val(p, Constant::Pi);
    let mut out = vec![Float::with_val(p, pi * 2u32).sqrt()];
    let mut fact = Float::with_val(p, 1);
    for k in 1..a {
        if k > 1 {
            fact *= k - 1;
        }
        let base = Float::with_val(p, a - k);
        let e = Float::with_val(p, k) - 0.5;
        let mut c = Float::with_val(p, rug::ops::Pow::pow(&base, &e)) * Float::with_val(p, base.exp_ref());
        c /= &fact;
        if k % 2 == 0 {
            c = -c;
        }
        out.push(c);
    }
    out
}

/// Double precision `log Γ`, accurate to about `1e-13` away from poles.
pub fn ln_gamma_f64(w: C64<f64>) -> C64<f64> {
    const B: [f64; 7] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
    ];
    let mut z = w;
    let mut shift = C64::new(0.0, 0.0);
    while z.re < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let mut out = (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln();
    let zinv = 1.0 / z;
    let zinv2 = zinv * zinv;
    let mut pow = zinv;
    for (i, b) in B.iter().enumerate() {
        let n = (i + 1) as f64;
        out += pow * (b / (2.0 * n * (2.0 * n - 1.0)));
        pow *= zinv2;
    }
    out - shift
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(p: u32, re: f64, im: f64) -> Complex {
        Complex::with_val(p, (re, im))
    }

    fn dist(a: &Complex, b: &Complex) -> f64 {
        Complex::with_val(a.prec().0 + 64, a - b).abs().real().to_f64()
    }

    #[test]
    fn bernoulli_numbers() {
        let b = bernoulli_even(7);
        let expect = [(1, 6), (-1, 30), (1, 42), (-1, 30), (5, 66), (-691, 2730), (7, 6)];
        for (x, (n, d)) in b.iter().zip(expect) {
            assert_eq!(*x, Rational::from((n, d)));
        }
    }

    #[test]
    fn integer_and_half_integer_values() {
        let lg = LogGamma::new(256);
        let zero = Complex::new(256);
        assert!(dist(&lg.eval(&c(256, 1.0, 0.0)).unwrap(), &zero) < 1e-70);
        assert!(dist(&lg.eval(&c(256, 2.0, 0.0)).unwrap(), &zero) < 1e-70);
        let ln24 = Complex::with_val(256, Float::with_val(256, 24).ln());
        assert!(dist(&lg.eval(&c(256, 5.0, 0.0)).unwrap(), &ln24) < 1e-70);
        let half_ln_pi = Complex::with_val(256, Float::with_val(256, Constant::Pi).ln() / 2u32);
        assert!(dist(&lg.eval(&c(256, 0.5, 0.0)).unwrap(), &half_ln_pi) < 1e-70);
    }

    #[test]
    fn modulus_on_the_line_one_plus_i() {
        // |Γ(1+i)|² = π / sinh π
        let p = 200;
        let lg = LogGamma::new(p);
        let pi = Float::with_val(p, Constant::Pi);
        let want = Float::with_val(p, &pi / Float::with_val(p, pi.sinh_ref())).ln();
        let got = Float::with_val(p, lg.ln_abs(&c(p, 1.0, 1.0)).unwrap() * 2u32);
        assert!(Float::with_val(p, got - &want).abs().to_f64() < 1e-55);
        let modulus = Float::with_val(p, want / 2u32).exp().to_f64();
        assert!((modulus - 0.521_564_046_864_939_8).abs() < 1e-15);
    }

    #[test]
    fn recurrence_holds_on_a_grid() {
        let p = 192;
        let lg = LogGamma::new(p);
        for re in [-7.3, -2.5, -0.4, 0.1, 0.9, 3.7, 12.0, 41.5] {
            for im in [-30.0, -3.2, -0.5, 0.0, 0.25, 2.0, 17.0] {
                let w = c(p, re, im);
                let lhs = lg.eval(&Complex::with_val(p, &w + 1u32)).unwrap();
                let rhs = lg.eval(&w).unwrap() + Complex::with_val(p, w.ln_ref());
                let scale = Complex::with_val(p, lhs.abs_ref()).real().to_f64().max(1.0);
                assert!(dist(&lhs, &rhs) < 1e-50 * scale, "w = {re} + {im}i");
            }
        }
    }

    #[test]
    fn spouge_agrees_with_stirling() {
        let p = 160;
        let lg = LogGamma::new(p);
        for (re, im) in [(0.3, 0.0), (1.0, 1.0), (-2.5, 0.0), (-3.7, 8.0), (7.0, -40.0), (0.05, 0.7), (100.0, 3.0)] {
            let w = c(p, re, im);
            let a = lg.eval(&w).unwrap();
            let b = lg.spouge(&w).unwrap();
            let scale = Complex::with_val(p, a.abs_ref()).real().to_f64().max(1.0);
            assert!(dist(&a, &b) < 1e-40 * scale, "w = {re} + {im}i: {a} vs {b}");
        }
    }

    #[test]
    fn reflection_formula_on_the_real_segment() {
        let p = 128;
        let lg = LogGamma::new(p);
        for x in [0.1, 0.3, 0.5, 0.77] {
            let w = c(p, x, 0.0);
            let one_minus = Complex::with_val(p, 1u32 - &w);
            let sum = lg.eval(&w).unwrap() + lg.eval(&one_minus).unwrap();
            let pi = Float::with_val(p, Constant::Pi);
            let s = Float::with_val(p, Float::with_val(p, &pi * w.real()).sin());
            let want = Complex::with_val(p, Float::with_val(p, pi / s).ln());
            assert!(dist(&sum, &want) < 1e-30);
        }
    }

    #[test]
    fn poles_are_rejected() {
        let lg = LogGamma::new(64);
        for n in [0.0, -1.0, -3.0] {
            assert!(matches!(lg.eval(&c(64, n, 0.0)), Err(BorelError::PoleOfGamma(_))));
            assert!(matches!(lg.spouge(&c(64, n, 0.0)), Err(BorelError::PoleOfGamma(_))));
        }
        // Γ(−5/2) = −8√π/15
        let v = lg.ln_abs(&c(64, -2.5, 0.0)).unwrap().to_f64();
        assert!((v - (8.0 * std::f64::consts::PI.sqrt() / 15.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn precision_is_honoured() {
        let lo = LogGamma::new(128);
        let hi = LogGamma::new(512);
        for (re, im) in [(0.5, 2.0), (3.3, -1.0), (-6.5, 0.1)] {
            let a = lo.eval(&c(512, re, im)).unwrap();
            let b = hi.eval(&c(512, re, im)).unwrap();
            let scale = Complex::with_val(512, b.abs_ref()).real().to_f64().max(1.0);
            assert!(dist(&a, &b) < 2f64.powi(-120) * scale);
        }
    }

    #[test]
    fn double_precision_estimate() {
        let lg = LogGamma::new(128);
        for (re, im) in [(0.5, 0.0), (2.0, 30.0), (-4.5, -2.0)] {
            let a = ln_gamma_f64(C64::new(re, im));
            let b = lg.eval(&c(128, re, im)).unwrap();
            assert!((a.re - b.real().to_f64()).abs() < 1e-11);
            assert!((a.im - b.imag().to_f64()).abs() < 1e-11);
        }
    }
}
