//! Newton iterations on series: the local deck involution at a simple critical point,
//! series reversion, and square roots.

use num_traits::Zero;

use super::point::Point;
use super::ratfun::RationalFunction;
use super::rational::{rat, Rational};
use super::series::LaurentSeries;
use crate::error::{Error, Result};

/// Nontrivial solution `s(t) = -t + O(t^2)` of `X(s(t)) = X(t)`, where `X` is `x` pulled
/// back to the local parameter at `p`. The result is known modulo `t^order`.
pub fn newton_local_inverse(
    x: &RationalFunction,
    p: &Point,
    order: usize,
) -> Result<LaurentSeries> {
    let big_x = p.pull_function(x);
    let order = order.max(2) as i64;
    let head = big_x.series_expand(&Rational::zero(), 3);
    if head.val() < 0 {
        return Err(Error::UnsupportedRamification(format!("{p}: x has a pole")));
    }
    if !head.coeff(1)?.is_zero() {
        return Err(Error::MalformedInput(format!(
            "{p} is not a critical point of x"
        )));
    }
    if head.coeff(2)?.is_zero() {
        return Err(Error::UnsupportedRamification(p.to_string()));
    }
    let dx = big_x.derivative();
    let mut s = LaurentSeries::new(1, vec![-Rational::from_integer(1.into())], 2);
    while s.order() < order {
        let target = (2 * s.order() - 1).min(order);
        let ext = LaurentSeries::new(1, s.coeffs().to_vec(), target + 1);
        let t = LaurentSeries::t(target + 1);
        let residual = big_x.eval_series(&ext)?.sub(&big_x.eval_series(&t)?);
        let slope = dx.eval_series(&ext)?;
        let correction = residual.div(&slope)?;
        s = ext.sub(&correction).truncate(target);
    }
    let check = big_x
        .eval_series(&s)?
        .sub(&big_x.eval_series(&LaurentSeries::t(order))?);
    if !check.is_zero() {
        return Err(Error::InternalConsistency(format!(
            "local involution at {p} fails resubstitution"
        )));
    }
    Ok(s)
}

/// Solves `f(z0 + t) = f(z0) + xi` for `t` as a series in `xi`, known modulo `xi^order`.
/// Requires `f'(z0) != 0`.
pub fn reversion(f: &RationalFunction, z0: &Rational, order: usize) -> Result<LaurentSeries> {
    let order = order.max(1) as i64;
    let shifted = f.compose(&Point::Finite(z0.clone()).chart())?;
    let f0 = shifted.eval(&Rational::zero())?;
    let df = shifted.derivative();
    let slope0 = df.eval(&Rational::zero())?;
    if slope0.is_zero() {
        return Err(Error::BadSample(format!("{z0} is a critical point")));
    }
    let mut t = LaurentSeries::new(1, vec![slope0.recip()], 2);
    while t.order() < order {
        let target = (2 * t.order()).min(order);
        let ext = LaurentSeries::new(1, t.coeffs().to_vec(), target + 1);
        let value = shifted
            .eval_series(&ext)?
            .sub(&LaurentSeries::monomial(f0.clone(), 0, target + 1))
            .sub(&LaurentSeries::t(target + 1));
        let correction = value.div(&df.eval_series(&ext)?)?;
        t = ext.sub(&correction).truncate(target);
    }
    Ok(t.truncate(order))
}

/// Square root of `u` with constant term `seed`, by Newton's `w <- (w + u/w)/2`.
pub fn sqrt_series(u: &LaurentSeries, seed: &Rational) -> Result<LaurentSeries> {
    if seed.is_zero() || u.val() != 0 || u.coeff(0)? != seed * seed {
        return Err(Error::BadSheet);
    }
    let order = u.order();
    let half = rat(1, 2);
    let mut w = LaurentSeries::monomial(seed.clone(), 0, 1);
    while w.order() < order {
        let target = (2 * w.order()).min(order);
        let ext = LaurentSeries::new(0, w.coeffs().to_vec(), target);
        w = ext
            .add(&u.truncate(target).div(&ext)?)
            .scale(&half)
            .truncate(target);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::poly::Polynomial;
    use crate::algebra::rational::int;

    fn poly(c: &[i64]) -> RationalFunction {
        RationalFunction::from_poly(Polynomial::from_ints(c))
    }

    #[test]
    fn involution_of_z_squared_is_exact() {
        let s = newton_local_inverse(&poly(&[0, 0, 1]), &Point::Finite(int(0)), 5).unwrap();
        assert_eq!(s, LaurentSeries::new(1, vec![int(-1)], 5));
    }

    #[test]
    fn involution_of_cubic_perturbation() {
        let s = newton_local_inverse(&poly(&[0, 0, 1, 1]), &Point::Finite(int(0)), 3).unwrap();
        assert_eq!(s, LaurentSeries::new(1, vec![int(-1), int(-1)], 3));
    }

    #[test]
    fn involution_leading_term_and_rejections() {
        let x = poly(&[0, -3, 0, 1]);
        let s = newton_local_inverse(&x, &Point::Finite(int(1)), 2).unwrap();
        assert_eq!(s.coeff(1).unwrap(), int(-1));
        assert!(matches!(
            newton_local_inverse(&poly(&[0, 0, 0, 1]), &Point::Finite(int(0)), 4),
            Err(Error::UnsupportedRamification(_))
        ));
    }

    #[test]
    fn reversion_of_square() {
        // (1 + t)^2 = 1 + xi  =>  t = xi/2 - xi^2/8 + xi^3/16 - ...
        let t = reversion(&poly(&[0, 0, 1]), &int(1), 4).unwrap();
        assert_eq!(t.coeff(1).unwrap(), rat(1, 2));
        assert_eq!(t.coeff(2).unwrap(), rat(-1, 8));
        assert_eq!(t.coeff(3).unwrap(), rat(1, 16));
    }

    #[test]
    fn square_root_of_one_plus_t() {
        let u = LaurentSeries::new(0, vec![int(1), int(1)], 4);
        let w = sqrt_series(&u, &int(1)).unwrap();
        assert_eq!(w.coeff(1).unwrap(), rat(1, 2));
        assert_eq!(w.coeff(2).unwrap(), rat(-1, 8));
        assert_eq!(w.coeff(3).unwrap(), rat(1, 16));
        assert!(matches!(sqrt_series(&u, &int(2)), Err(Error::BadSheet)));
    }
}
