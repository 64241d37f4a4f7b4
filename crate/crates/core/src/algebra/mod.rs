//! Exact arithmetic: rationals, polynomials, rational functions, truncated Laurent series.

pub mod newton;
pub mod point;
pub mod poly;
pub mod ratfun;
pub mod rational;
pub mod series;

pub use newton::{newton_local_inverse, reversion, sqrt_series};
pub use point::Point;
pub use poly::Polynomial;
pub use ratfun::{PartialFractions, RationalFunction};
pub use rational::Rational;
pub use series::{residue_of_product, LaurentSeries};
