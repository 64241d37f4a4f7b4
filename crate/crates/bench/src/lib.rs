//! Fixture curves for the benchmarks in `benches/`.

use spectral_core::algebra::{Polynomial, RationalFunction};
use spectral_core::curve::{Mode, SpectralCurve};

fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
    RationalFunction::new(Polynomial::from_ints(num), Polynomial::from_ints(den))
        .expect("nonzero denominator")
}

/// `x = z^2`, `y = z`.
pub fn airy(mode: Mode) -> SpectralCurve {
    SpectralCurve::build(rf(&[0, 0, 1], &[1]), rf(&[0, 1], &[1]), mode, 16).expect("fixture builds")
}

/// `x = 1/(1 - z^2)`, `y = z/(1 - z^2)`.
pub fn curve_b(mode: Mode) -> SpectralCurve {
    SpectralCurve::build(rf(&[1], &[1, 0, -1]), rf(&[0, 1], &[1, 0, -1]), mode, 16)
        .expect("fixture builds")
}
