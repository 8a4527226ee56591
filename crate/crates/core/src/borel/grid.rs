use std::collections::BTreeMap;

use serde_json::{json, Value};

use super::SemigroupBasis;
use crate::error::BorelError;
use crate::gps::{Coefficient, Exponent, GPSeries, Horizon};

/// Coefficients of a series relocated to `ℤ_+^τ` along a basis:
/// index `(m_1, …, m_τ)` carries the coefficient of `z^{Σ m_j ρ_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorGrid<C: Coefficient> {
    pub dims: usize,
    pub coeffs: BTreeMap<Vec<u64>, C>,
    pub basis: SemigroupBasis,
    pub horizon: Horizon,
    pub ctx: C::Context,
}

impl<C: Coefficient> TaylorGrid<C> {
    pub fn empty(basis: &SemigroupBasis, horizon: Horizon, ctx: C::Context) -> Self {
        TaylorGrid {
            dims: basis.dims(),
            coeffs: BTreeMap::new(),
            basis: basis.clone(),
            horizon,
            ctx,
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn exponent(&self, index: &[u64]) -> Exponent {
        self.basis.exponent_at(index)
    }

    /// Least `Re γ` over the support, or the horizon when empty.
    fn low(&self) -> Horizon {
        self.coeffs
            .keys()
            .map(|m| self.exponent(m).re().clone())
            .min()
            .map(Horizon::Finite)
            .unwrap_or_else(|| self.horizon.clone())
    }

    fn retain_certified(mut self) -> Self {
        let basis = self.basis.clone();
        let h = self.horizon.clone();
        self.coeffs.retain(|m, c| !c.is_zero() && h.covers(basis.exponent_at(m).re()));
        self
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.horizon = self.horizon.clone().min(other.horizon.clone());
        for (m, c) in &other.coeffs {
            match out.coeffs.get_mut(m) {
                Some(x) => *x = x.add(c),
                None => {
                    out.coeffs.insert(m.clone(), c.clone());
                }
            }
        }
        out.retain_certified()
    }

    /// Product of grid series: indices add.
    pub fn mul(&self, other: &Self) -> Self {
        let horizon = match (self.low(), other.low()) {
            (Horizon::Finite(la), Horizon::Finite(lb)) => {
                self.horizon.shifted(&lb).min(other.horizon.shifted(&la))
            }
            _ => Horizon::Infinite,
        };
        let mut coeffs: BTreeMap<Vec<u64>, C> = BTreeMap::new();
        for (ma, ca) in &self.coeffs {
            for (mb, cb) in &other.coeffs {
                let m: Vec<u64> = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                let x = ca.mul(cb);
                match coeffs.get_mut(&m) {
                    Some(acc) => *acc = acc.add(&x),
                    None => {
                        coeffs.insert(m, x);
                    }
                }
            }
        }
        TaylorGrid {
            dims: self.dims,
            coeffs,
            basis: self.basis.clone(),
            horizon,
            ctx: self.ctx.clone(),
        }
        .retain_certified()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dims": self.dims,
            "basis": self.basis.basis.iter().map(|e| serde_json::to_value(e).expect("exponent")).collect::<Vec<_>>(),
            "coeffs": self.coeffs.iter().map(|(m, c)| json!({"m": m, "c": c.to_json()})).collect::<Vec<_>>(),
            "horizon": self.horizon.to_json(),
        })
    }
}

/// `σ: Σ a_γ z^γ ↦ Σ a_γ z_1^{m_1} ⋯ z_τ^{m_τ}` with `γ = Σ m_j ρ_j`.
pub fn sigma_map<C: Coefficient>(
    psi: &GPSeries<C>,
    basis: &SemigroupBasis,
) -> Result<TaylorGrid<C>, BorelError> {
    let mut grid = TaylorGrid::empty(basis, psi.horizon().clone(), psi.context().clone());
    for (e, c) in psi.terms() {
        let m = basis.coordinates(e)?;
        if m.iter().all(|&x| x == 0) {
            return Err(BorelError::NotInSemigroup(format!("{} (constant term)", e)));
        }
        grid.coeffs.insert(m, c.clone());
    }
    Ok(grid)
}

/// `σ⁻¹`.
pub fn sigma_inverse<C: Coefficient>(grid: &TaylorGrid<C>) -> GPSeries<C> {
    GPSeries::from_terms(
        grid.coeffs.iter().map(|(m, c)| (grid.exponent(m), c.clone())),
        grid.horizon.clone(),
        grid.ctx.clone(),
    )
}

/// `Δ: a_m ↦ γ(m)·a_m`, the image of `δ` under `σ`.
pub fn delta_on_grid<C: Coefficient>(grid: &TaylorGrid<C>) -> TaylorGrid<C> {
    let mut out = grid.clone();
    for (m, c) in out.coeffs.iter_mut() {
        *c = c.mul_exact(grid.basis.exponent_at(m).value());
    }
    out.coeffs.retain(|_, c| !c.is_zero());
    out
}

/// Sum of the grid index, `m_1 + … + m_τ`.
pub fn index_weight(m: &[u64]) -> u64 {
    m.iter().sum()
}
