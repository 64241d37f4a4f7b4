//! Points of the projective line and their standard local parameters.

use std::fmt;

use super::poly::Polynomial;
use super::ratfun::RationalFunction;
use num_traits::{One, Zero};

use super::rational::{parse_rational, Rational};

/// A point of `P^1`. Finite points sort by value, infinity sorts last.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Point {
    Finite(Rational),
    Infinity,
}

impl Point {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Point::Finite(q) => Some(q),
            Point::Infinity => None,
        }
    }

    /// `z` as a function of the local parameter `t`: `p + t`, or `1/t` at infinity.
    pub fn chart(&self) -> RationalFunction {
        match self {
            Point::Finite(p) => {
                RationalFunction::from_poly(Polynomial::new(vec![p.clone(), Rational::one()]))
            }
            Point::Infinity => RationalFunction::z().inv().unwrap(),
        }
    }

    /// The local parameter at this point, evaluated at a finite `z`.
    pub fn local_coordinate(&self, z: &Rational) -> Option<Rational> {
        match self {
            Point::Finite(p) => Some(z - p),
            Point::Infinity => (!z.is_zero()).then(|| z.recip()),
        }
    }

    /// The local parameter as a rational function of `z`.
    pub fn local_parameter(&self) -> RationalFunction {
        match self {
            Point::Finite(p) => RationalFunction::from_poly(Polynomial::linear_root(p)),
            Point::Infinity => RationalFunction::z().inv().unwrap(),
        }
    }

    /// Pulls a function of `z` back to the local parameter.
    pub fn pull_function(&self, f: &RationalFunction) -> RationalFunction {
        f.compose(&self.chart()).expect("chart composition")
    }

    /// Pulls the coefficient `h` of `h(z) dz` back to the coefficient of `dt`.
    pub fn pull_form(&self, h: &RationalFunction) -> RationalFunction {
        let chart = self.chart();
        &self.pull_function(h) * &chart.derivative()
    }

    pub fn parse(text: &str) -> Option<Point> {
        match text.trim() {
            "inf" | "infinity" => Some(Point::Infinity),
            t => parse_rational(t).map(Point::Finite),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Finite(q) => write!(f, "{q}"),
            Point::Infinity => write!(f, "inf"),
        }
    }
}
