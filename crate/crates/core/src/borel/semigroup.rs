use std::cmp::Ordering;

use rug::{Integer, Rational};
use serde_json::{json, Value};

use crate::error::BorelError;
use crate::gps::{Coefficient, Exponent, GPSeries, GaussianRational};
use crate::solver::ReducedEquation;

/// Largest scaling denominator accepted for a basis element.
pub const SCALING_LIMIT: u64 = 1 << 40;

/// `{ν} ∪ {α} ∪ {β}` of a reduced equation, deduplicated.
pub fn semigroup_generators<C: Coefficient>(red: &ReducedEquation<C>) -> Vec<Exponent> {
    red.exponents()
}

/// Distinct nonzero exponents of a series, usable as generators when no
/// reduction is available.
pub fn support_generators<C: Coefficient>(series: &GPSeries<C>) -> Vec<Exponent> {
    let mut out: Vec<Exponent> = series.exponents().filter(|e| !e.is_zero()).cloned().collect();
    out.dedup();
    out
}

/// Generators `r_i`, an independent basis `ρ_j` and the table
/// `r_i = Σ_j n_ij ρ_j` with `n_ij ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemigroupBasis {
    pub generators: Vec<Exponent>,
    pub basis: Vec<Exponent>,
    pub expansion: Vec<Vec<Integer>>,
}

impl SemigroupBasis {
    pub fn dims(&self) -> usize {
        self.basis.len()
    }

    /// `Σ m_j ρ_j`.
    pub fn exponent_at(&self, index: &[u64]) -> Exponent {
        let mut acc = GaussianRational::zero();
        for (m, rho) in index.iter().zip(&self.basis) {
            acc = &acc + &rho.value().scale(&Rational::from(*m));
        }
        Exponent::new(acc)
    }

    /// Nonnegative integer coordinates of `γ` in the basis.
    pub fn coordinates(&self, gamma: &Exponent) -> Result<Vec<u64>, BorelError> {
        let fail = || BorelError::NotInSemigroup(gamma.to_string());
        let coords = rational_coordinates(&self.basis, gamma.value()).ok_or_else(fail)?;
        coords
            .iter()
            .map(|c| {
                if c.is_integer() && c.cmp0().is_ge() {
                    c.numer().to_u64().ok_or_else(fail)
                } else {
                    Err(fail())
                }
            })
            .collect()
    }

    /// Re-expands every generator from the table and checks independence.
    pub fn verify(&self) -> bool {
        let independent = match self.basis.len() {
            1 => !self.basis[0].is_zero(),
            2 => det(self.basis[0].value(), self.basis[1].value()).cmp0() != Ordering::Equal,
            _ => false,
        };
        independent
            && self.basis.iter().all(|r| r.re().cmp0().is_gt())
            && self.generators.iter().zip(&self.expansion).all(|(g, row)| {
                row.iter().all(|n| n.cmp0().is_ge())
                    && row.iter().any(|n| n.cmp0().is_gt())
                    && row.iter().all(|n| n.to_u64().is_some())
                    && self.exponent_at(&row.iter().map(|n| n.to_u64().unwrap_or(0)).collect::<Vec<_>>()) == *g
            })
    }

    pub fn to_json(&self) -> Value {
        let e = |x: &Exponent| serde_json::to_value(x).expect("exponent");
        json!({
            "generators": self.generators.iter().map(e).collect::<Vec<_>>(),
            "basis": self.basis.iter().map(e).collect::<Vec<_>>(),
            "expansion": self.generators.iter().zip(&self.expansion).map(|(g, row)| json!({
                "generator": e(g),
                "coefficients": row.iter().map(|n| n.to_string()).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

fn det(a: &GaussianRational, b: &GaussianRational) -> Rational {
    Rational::from(a.re() * b.im()) - Rational::from(a.im() * b.re())
}

/// Real coordinates of `g` in the basis, if it lies in its real span.
fn rational_coordinates(basis: &[Exponent], g: &GaussianRational) -> Option<Vec<Rational>> {
    match basis {
        [r] => {
            let t = g.checked_div(r.value())?;
            t.is_real().then(|| vec![t.re().clone()])
        }
        [r1, r2] => {
            let d = det(r1.value(), r2.value());
            if d.cmp0() == Ordering::Equal {
                return None;
            }
            let a = det(g, r2.value()) / d.clone();
            let b = det(r1.value(), g) / d;
            Some(vec![a, b])
        }
        _ => None,
    }
}

fn rational_gcd(values: &[Rational]) -> Rational {
    let mut num = Integer::new();
    let mut den = Integer::from(1);
    for v in values {
        num = num.gcd(v.numer());
        den = den.lcm(v.denom());
    }
    Rational::from((num, den))
}

/// Argument of `(re, im)` measured in `[0, 2π)`, compared exactly.
fn argument_cmp(a: &GaussianRational, b: &GaussianRational) -> Ordering {
    // with Re > 0 the argument lies in [0, π/2) for Im ≥ 0 and in
    // (3π/2, 2π) for Im < 0
    let half = |g: &GaussianRational| u8::from(g.im().cmp0().is_lt());
    half(a)
        .cmp(&half(b))
        .then_with(|| Rational::from(a.im() * b.re()).cmp(&Rational::from(b.im() * a.re())))
}

/// A basis of at most two `ℤ`-independent exponents with positive real
/// parts such that every generator is a nonnegative integer combination.
///
/// Collinear generators give one element, the rational gcd of the
/// generators along their common direction. Otherwise the two extreme rays
/// of the cone are each divided by the least common denominator of the
/// generator coordinates along them. The basis is ordered by argument in
/// `[0, 2π)`.
pub fn independent_basis(gens: &[Exponent]) -> Result<SemigroupBasis, BorelError> {
    let mut generators: Vec<Exponent> = gens.to_vec();
    generators.sort();
    generators.dedup();
    if generators.is_empty() {
        return Err(BorelError::NoGenerators);
    }
    if let Some(g) = generators.iter().find(|g| g.re().cmp0().is_le()) {
        return Err(BorelError::NonPositiveRealPart(g.to_string()));
    }

    let first = generators[0].value().clone();
    let collinear = generators.iter().all(|g| det(&first, g.value()).cmp0() == Ordering::Equal);
    let basis: Vec<Exponent> = if collinear {
        let ratios: Vec<Rational> = generators
            .iter()
            .map(|g| g.value().checked_div(&first).expect("nonzero").re().clone())
            .collect();
        let gcd = rational_gcd(&ratios);
        if gcd.denom() > &Integer::from(SCALING_LIMIT) {
            return Err(BorelError::UnboundedDenominator(gcd.to_string()));
        }
        vec![Exponent::new(first.scale(&gcd))]
    } else {
        let lo = generators
            .iter()
            .min_by(|a, b| slope_cmp(a.value(), b.value()))
            .expect("nonempty")
            .clone();
        let hi = generators
            .iter()
            .max_by(|a, b| slope_cmp(a.value(), b.value()))
            .expect("nonempty")
            .clone();
        let rays = [lo, hi];
        let coords: Vec<Vec<Rational>> = generators
            .iter()
            .map(|g| rational_coordinates(&rays, g.value()).expect("independent rays"))
            .collect();
        let mut basis = Vec::new();
        for (j, ray) in rays.iter().enumerate() {
            let mut n = Integer::from(1);
            for c in &coords {
                n = n.lcm(c[j].denom());
            }
            if n > SCALING_LIMIT {
                return Err(BorelError::UnboundedDenominator(n.to_string()));
            }
            basis.push(Exponent::new(ray.value().scale(&Rational::from((1, n)))));
        }
        basis.sort_by(|a, b| argument_cmp(a.value(), b.value()));
        basis
    };

    let expansion = generators
        .iter()
        .map(|g| {
            rational_coordinates(&basis, g.value())
                .expect("generator in the span")
                .into_iter()
                .map(|c| {
                    debug_assert!(c.is_integer());
                    c.numer().clone()
                })
                .collect()
        })
        .collect();
    let out = SemigroupBasis {
        generators,
        basis,
        expansion,
    };
    debug_assert!(out.verify());
    Ok(out)
}

/// Order by `Im/Re`, i.e. by argument within the right half-plane.
fn slope_cmp(a: &GaussianRational, b: &GaussianRational) -> Ordering {
    Rational::from(a.im() * b.re()).cmp(&Rational::from(b.im() * a.re()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(re: (i64, i64), im: (i64, i64)) -> Exponent {
        Exponent::new(GaussianRational::from_fracs(re, im))
    }

    #[test]
    fn three_generators_two_rays() {
        let b = independent_basis(&[Exponent::from_int(1), Exponent::from_ints(1, 1), Exponent::from_ints(1, -1)])
            .unwrap();
        assert_eq!(b.basis, vec![e((1, 2), (1, 2)), e((1, 2), (-1, 2))]);
        assert!(b.verify());
        let row = |g: Exponent| {
            let i = b.generators.iter().position(|x| *x == g).unwrap();
            b.expansion[i].iter().map(|n| n.to_i64().unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(row(Exponent::from_int(1)), vec![1, 1]);
        assert_eq!(row(Exponent::from_ints(1, 1)), vec![2, 0]);
        assert_eq!(row(Exponent::from_ints(1, -1)), vec![0, 2]);
    }

    #[test]
    fn collinear_gcd() {
        let b = independent_basis(&[Exponent::from_int(2), Exponent::from_int(3)]).unwrap();
        assert_eq!(b.basis, vec![Exponent::from_int(1)]);
        let b = independent_basis(&[e((1, 2), (0, 1)), e((2, 3), (0, 1))]).unwrap();
        assert_eq!(b.basis, vec![e((1, 6), (0, 1))]);
    }

    #[test]
    fn single_generator() {
        let b = independent_basis(&[Exponent::from_ints(1, 1)]).unwrap();
        assert_eq!(b.basis, vec![Exponent::from_ints(1, 1)]);
        assert_eq!(b.coordinates(&Exponent::from_ints(3, 3)).unwrap(), vec![3]);
        assert!(b.coordinates(&Exponent::from_ints(3, 2)).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(independent_basis(&[]), Err(BorelError::NoGenerators));
        assert!(matches!(
            independent_basis(&[Exponent::from_ints(0, 1)]),
            Err(BorelError::NonPositiveRealPart(_))
        ));
    }

    #[test]
    fn huge_denominators_are_reported() {
        let big = 1i64 << 45;
        let r = independent_basis(&[Exponent::from_int(1), e((1, big), (1, big)), Exponent::from_ints(1, 1)]);
        assert!(matches!(r, Err(BorelError::UnboundedDenominator(_))));
    }

    fn arb_gen() -> impl Strategy<Value = Exponent> {
        (1i64..9, 1i64..9, -8i64..9, 1i64..9).prop_map(|(a, b, c, d)| e((a, b), (c, d)))
    }

    proptest! {
        #[test]
        fn expansions_verify(gens in proptest::collection::vec(arb_gen(), 1..6)) {
            let b = independent_basis(&gens).unwrap();
            prop_assert!(b.verify());
            for g in &gens {
                let idx = b.coordinates(g).unwrap();
                prop_assert_eq!(&b.exponent_at(&idx), g);
            }
        }

        #[test]
        fn grid_indexing_is_injective(gens in proptest::collection::vec(arb_gen(), 1..5),
                                      a in proptest::collection::vec(0u64..20, 2),
                                      c in proptest::collection::vec(0u64..20, 2)) {
            let b = independent_basis(&gens).unwrap();
            let (a, c) = (&a[..b.dims()], &c[..b.dims()]);
            prop_assert_eq!(a == c, b.exponent_at(a) == b.exponent_at(c));
        }
    }
}
