#![allow(dead_code)]

use spectral_core::algebra::{Polynomial, RationalFunction};
use spectral_core::curve::{Mode, SpectralCurve};

pub fn poly(c: &[i64]) -> Polynomial {
    Polynomial::from_ints(c)
}

pub fn rf(num: &[i64], den: &[i64]) -> RationalFunction {
    RationalFunction::new(poly(num), poly(den)).unwrap()
}

/// x = z^2, y = z
pub fn airy(mode: Mode) -> SpectralCurve {
    SpectralCurve::build(rf(&[0, 0, 1], &[1]), rf(&[0, 1], &[1]), mode, 16).unwrap()
}

/// x = z^2, y = z/2, so that eta = z^2 dz
pub fn h_model() -> SpectralCurve {
    SpectralCurve::build(rf(&[0, 0, 1], &[1]), rf(&[0, 1], &[2]), Mode::Exact, 16).unwrap()
}

/// x = 1/(1-z^2), y = z/(1-z^2)
pub fn curve_b(mode: Mode) -> SpectralCurve {
    SpectralCurve::build(rf(&[1], &[1, 0, -1]), rf(&[0, 1], &[1, 0, -1]), mode, 16).unwrap()
}
