//! Exact scalars and truncated generalized power series with complex
//! exponents, ordered by `(Re, Im)`.

pub mod coeff;
pub mod scalar;
pub mod series;

pub use coeff::{BigComplex, Coefficient, FloatContext};
pub use scalar::{format_rational, parse_rational, GaussianRational};
pub use series::{exp_cmp, Exponent, GPSeries, Horizon, Jet};
