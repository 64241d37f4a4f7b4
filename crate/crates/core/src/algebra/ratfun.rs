//! Rational functions in one variable with canonical (reduced, monic-denominator) form.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::point::Point;
use super::poly::Polynomial;
use super::rational::{int, Rational};
use super::series::LaurentSeries;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

/// `polynomial + sum c[(p, k)] / (z - p)^k`
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PartialFractions {
    pub polynomial: Polynomial,
    pub terms: BTreeMap<(Rational, usize), Rational>,
}

impl PartialFractions {
    pub fn to_rational_function(&self) -> RationalFunction {
        let mut acc = RationalFunction::from_poly(self.polynomial.clone());
        for ((p, k), c) in &self.terms {
            let den = Polynomial::linear_root(p).pow(*k as u32);
            acc = &acc + &RationalFunction::from_parts(Polynomial::constant(c.clone()), den);
        }
        acc
    }
}

impl RationalFunction {
    /// Normalizes `num/den`; a zero denominator is a malformed-input error.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::MalformedInput("zero denominator".into()));
        }
        Ok(Self::from_parts(num, den))
    }

    fn from_parts(num: Polynomial, den: Polynomial) -> Self {
        if num.is_zero() {
            return Self::zero();
        }
        let g = Polynomial::gcd(&num, &den);
        let (mut num, mut den) = if g.deg0() > 0 {
            (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
        } else {
            (num, den)
        };
        let lead = den.leading().unwrap().clone();
        if !lead.is_one() {
            let inv = lead.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        RationalFunction { num, den }
    }

    pub fn from_poly(p: Polynomial) -> Self {
        RationalFunction {
            num: p,
            den: Polynomial::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Self::from_poly(Polynomial::constant(c))
    }

    pub fn zero() -> Self {
        Self::from_poly(Polynomial::zero())
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn z() -> Self {
        Self::from_poly(Polynomial::z())
    }

    /// `c / (z - p)^k` for finite `p`, `c * z^k` for infinity.
    pub fn pole_monomial(c: Rational, p: &Point, k: usize) -> Self {
        match p {
            Point::Finite(p) => Self::from_parts(
                Polynomial::constant(c),
                Polynomial::linear_root(p).pow(k as u32),
            ),
            Point::Infinity => Self::from_poly(Polynomial::monomial(c, k)),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        (self.den.is_one() && self.num.deg0() == 0).then(|| self.num.coeff(0))
    }

    /// Degree of the map `P^1 -> P^1`.
    pub fn map_degree(&self) -> usize {
        self.num.deg0().max(self.den.deg0())
    }

    pub fn eval(&self, z: &Rational) -> Result<Rational> {
        let d = self.den.eval(z);
        if d.is_zero() {
            return Err(Error::PoleEvaluation(z.to_string()));
        }
        Ok(self.num.eval(z) / d)
    }

    /// Value at a point of the projective line; `None` at a pole.
    pub fn eval_at(&self, p: &Point) -> Option<Rational> {
        match p {
            Point::Finite(z) => self.eval(z).ok(),
            Point::Infinity => match self.num.deg0().cmp(&self.den.deg0()) {
                std::cmp::Ordering::Greater => None,
                std::cmp::Ordering::Equal => Some(self.num.leading().unwrap().clone()),
                std::cmp::Ordering::Less => Some(Rational::zero()),
            },
        }
    }

    pub fn derivative(&self) -> Self {
        let n = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        Self::from_parts(n, &self.den * &self.den)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::MalformedInput("inverse of zero".into()));
        }
        Ok(Self::from_parts(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self * &other.inv()?)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        RationalFunction {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn pow(&self, e: i32) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        Ok(Self::from_parts(
            base.num.pow(e.unsigned_abs()),
            base.den.pow(e.unsigned_abs()),
        ))
    }

    /// `self(inner(z))`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let m = self.map_degree();
        let (p, q) = (&inner.num, &inner.den);
        let homog = |poly: &Polynomial| {
            let mut acc = Polynomial::zero();
            for (i, c) in poly.coeffs().iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let term = &p.pow(i as u32) * &q.pow((m - i) as u32);
                acc = &acc + &term.scale(c);
            }
            acc
        };
        let den = homog(&self.den);
        if den.is_zero() {
            return Err(Error::PoleEvaluation("composition lands on a pole".into()));
        }
        Ok(Self::from_parts(homog(&self.num), den))
    }

    /// Laurent expansion in `t = z - p` through degree `order - 1`.
    pub fn series_expand(&self, p: &Rational, order: i64) -> LaurentSeries {
        let num = self.num.taylor_shift(p);
        let den = self.den.taylor_shift(p);
        series_of_ratio(&num, &den, 0, order)
    }

    /// Laurent expansion in the standard local parameter at `p` (`z - p`, or `1/z` at infinity).
    pub fn expand_at(&self, p: &Point, order: i64) -> LaurentSeries {
        match p {
            Point::Finite(q) => self.series_expand(q, order),
            Point::Infinity => {
                let dn = self.num.deg0();
                let dd = self.den.deg0();
                let num = self.num.reversed(dn);
                let den = self.den.reversed(dd);
                series_of_ratio(&num, &den, dd as i64 - dn as i64, order)
            }
        }
    }

    /// Order of vanishing at `p` (negative for a pole). The zero function reports `i64::MAX`.
    pub fn valuation_at(&self, p: &Point) -> i64 {
        if self.is_zero() {
            return i64::MAX;
        }
        match p {
            Point::Finite(q) => {
                self.num.root_multiplicity(q) as i64 - self.den.root_multiplicity(q) as i64
            }
            Point::Infinity => self.den.deg0() as i64 - self.num.deg0() as i64,
        }
    }

    pub fn pole_order_at(&self, p: &Point) -> usize {
        (-self.valuation_at(p)).max(0) as usize
    }

    /// Coefficient of `1/(z - p)` in the expansion at `p`.
    pub fn residue_at(&self, p: &Rational) -> Rational {
        let v = self.valuation_at(&Point::Finite(p.clone()));
        if v >= 0 {
            return Rational::zero();
        }
        self.series_expand(p, 0).coeff(-1).unwrap()
    }

    /// Splits into polynomial part plus principal parts at the given poles.
    pub fn partial_fractions(&self, poles: &[Rational]) -> Result<PartialFractions> {
        let mut rest = self.den.clone();
        let mut mult = BTreeMap::new();
        for p in poles {
            if mult.contains_key(p) {
                continue;
            }
            let m = rest.root_multiplicity(p);
            if m > 0 {
                rest = rest
                    .div_exact(&Polynomial::linear_root(p).pow(m as u32))
                    .unwrap();
                mult.insert(p.clone(), m);
            }
        }
        if rest.deg0() > 0 {
            return Err(Error::UnexpectedPole(format!("root of {rest}")));
        }
        let (polynomial, _) = self.num.div_rem(&self.den);
        let mut terms = BTreeMap::new();
        for p in mult.keys() {
            let s = self.series_expand(p, 0);
            for (d, c) in s.terms() {
                terms.insert((p.clone(), (-d) as usize), c.clone());
            }
        }
        Ok(PartialFractions { polynomial, terms })
    }

    /// Distinct finite poles, if they are all rational.
    pub fn rational_poles(&self) -> Result<Vec<Rational>> {
        let roots = self.den.rational_roots()?;
        let rest = self.den.irrational_part()?;
        if rest.deg0() > 0 {
            return Err(Error::UnexpectedPole(format!(
                "irrational pole, root of {rest}"
            )));
        }
        Ok(roots)
    }

    /// Antiderivative with no constant term; simple poles are rejected.
    pub fn antiderivative(&self) -> Result<Self> {
        if self.is_zero() {
            return Ok(Self::zero());
        }
        let poles = self.rational_poles()?;
        let pf = self.partial_fractions(&poles)?;
        let mut poly = Vec::with_capacity(pf.polynomial.coeffs().len() + 1);
        poly.push(Rational::zero());
        for (i, c) in pf.polynomial.coeffs().iter().enumerate() {
            poly.push(c / int(i as i64 + 1));
        }
        let mut acc = Self::from_poly(Polynomial::new(poly));
        for ((p, k), c) in &pf.terms {
            if *k == 1 {
                return Err(Error::LogarithmicTerm(p.to_string()));
            }
            let coeff = -c / int(*k as i64 - 1);
            acc = &acc + &Self::pole_monomial(coeff, &Point::Finite(p.clone()), k - 1);
        }
        Ok(acc)
    }

    /// Evaluates at a series argument.
    pub fn eval_series(&self, s: &LaurentSeries) -> Result<LaurentSeries> {
        let n = LaurentSeries::eval_poly(&self.num, s);
        let d = LaurentSeries::eval_poly(&self.den, s);
        n.div(&d)
    }
}

fn series_of_ratio(num: &Polynomial, den: &Polynomial, shift: i64, order: i64) -> LaurentSeries {
    if num.is_zero() {
        return LaurentSeries::zero(order);
    }
    let vn = num.valuation();
    let vd = den.valuation();
    let val = vn as i64 - vd as i64 + shift;
    if order <= val {
        return LaurentSeries::zero(order);
    }
    let len = (order - val) as usize;
    let a = &num.coeffs()[vn..];
    let b = &den.coeffs()[vd..];
    let b0inv = b[0].recip();
    let mut q: Vec<Rational> = Vec::with_capacity(len);
    for k in 0..len {
        let mut acc = a.get(k).cloned().unwrap_or_else(Rational::zero);
        for i in 1..=k.min(b.len() - 1) {
            if !b[i].is_zero() {
                acc -= &b[i] * &q[k - i];
            }
        }
        q.push(acc * &b0inv);
    }
    LaurentSeries::new(val, q, order)
}

impl Add for &RationalFunction {
    type Output = RationalFunction;
    fn add(self, rhs: &RationalFunction) -> RationalFunction {
        if self.den == rhs.den {
            return RationalFunction::from_parts(&self.num + &rhs.num, self.den.clone());
        }
        RationalFunction::from_parts(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &RationalFunction {
    type Output = RationalFunction;
    fn sub(self, rhs: &RationalFunction) -> RationalFunction {
        self + &(-rhs)
    }
}

impl Mul for &RationalFunction {
    type Output = RationalFunction;
    fn mul(self, rhs: &RationalFunction) -> RationalFunction {
        RationalFunction::from_parts(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &RationalFunction {
    type Output = RationalFunction;
    fn neg(self) -> RationalFunction {
        RationalFunction {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl From<Polynomial> for RationalFunction {
    fn from(p: Polynomial) -> Self {
        Self::from_poly(p)
    }
}

/// `(num)/(den)`, or just the numerator when the denominator is 1.
impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::rational::rat;

    fn rf(n: &[i64], d: &[i64]) -> RationalFunction {
        RationalFunction::new(Polynomial::from_ints(n), Polynomial::from_ints(d)).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(rf(&[2, 0, 2], &[0, 2]), rf(&[1, 0, 1], &[0, 1]));
        assert_eq!(rf(&[-1, 0, 1], &[-1, 1]), rf(&[1, 1], &[1]));
        let z = rf(&[0], &[0, 0, 0, 1]);
        assert!(z.is_zero());
        assert!(z.den().is_one());
        assert!(RationalFunction::new(Polynomial::one(), Polynomial::zero()).is_err());
    }

    #[test]
    fn residues() {
        assert_eq!(rf(&[1], &[0, 1]).residue_at(&int(0)), int(1));
        let cube = RationalFunction::pole_monomial(int(1), &Point::Finite(int(2)), 3);
        assert_eq!(cube.residue_at(&int(2)), int(0));
        // (z^2+1)/(z(z-1)) at 1
        assert_eq!(rf(&[1, 0, 1], &[0, -1, 1]).residue_at(&int(1)), int(2));
    }

    #[test]
    fn partial_fraction_examples() {
        let f = rf(&[1], &[-1, 0, 1]);
        let pf = f.partial_fractions(&[int(1), int(-1)]).unwrap();
        assert!(pf.polynomial.is_zero());
        assert_eq!(pf.terms[&(int(1), 1)], rat(1, 2));
        assert_eq!(pf.terms[&(int(-1), 1)], rat(-1, 2));

        let g = rf(&[0, 0, 0, 1], &[-1, 1]);
        let pg = g.partial_fractions(&[int(1)]).unwrap();
        assert_eq!(pg.polynomial, Polynomial::from_ints(&[1, 1, 1]));
        assert_eq!(pg.terms[&(int(1), 1)], int(1));
        assert_eq!(pg.to_rational_function(), g);

        assert!(matches!(
            f.partial_fractions(&[int(1)]),
            Err(Error::UnexpectedPole(_))
        ));
    }

    #[test]
    fn antiderivative_examples() {
        let w = RationalFunction::pole_monomial(rat(-1, 16), &Point::Finite(int(0)), 4);
        let f = w.antiderivative().unwrap();
        assert_eq!(
            f,
            RationalFunction::pole_monomial(rat(1, 48), &Point::Finite(int(0)), 3)
        );
        assert_eq!(f.derivative(), w);
        assert!(RationalFunction::zero().antiderivative().unwrap().is_zero());
        assert!(matches!(
            rf(&[1], &[0, 1]).antiderivative(),
            Err(Error::LogarithmicTerm(_))
        ));
    }

    #[test]
    fn expansion_examples() {
        let s = rf(&[1], &[1, -1]).series_expand(&int(0), 3);
        assert_eq!(s, LaurentSeries::new(0, vec![int(1), int(1), int(1)], 3));
        let s = rf(&[1], &[0, 0, 1]).series_expand(&int(0), 1);
        assert_eq!(s.val(), -2);
        assert_eq!(s.coeff(-2).unwrap(), int(1));
        assert_eq!(s.coeff(0).unwrap(), int(0));
        let s = rf(&[1], &[0, -1, 1]).series_expand(&int(0), 2);
        assert_eq!(
            s,
            LaurentSeries::new(-1, vec![int(-1), int(-1), int(-1)], 2)
        );
        // z^2/(z+1) at infinity: 1/t - 1 + t - ...
        let s = rf(&[0, 0, 1], &[1, 1]).expand_at(&Point::Infinity, 2);
        assert_eq!(s, LaurentSeries::new(-1, vec![int(1), int(-1), int(1)], 2));
    }

    #[test]
    fn evaluation_and_composition() {
        assert_eq!(rf(&[1, 0, 1], &[0, 1]).eval(&int(2)).unwrap(), rat(5, 2));
        assert!(matches!(
            rf(&[0, 1], &[-1, 1]).eval(&int(1)),
            Err(Error::PoleEvaluation(_))
        ));
        assert_eq!(rf(&[0, -3, 0, 1], &[1]).eval(&int(2)).unwrap(), int(2));
        // 1/(1 - z^2) composed with 1/z = z^2/(z^2 - 1)
        let x = rf(&[1], &[1, 0, -1]);
        let inv = rf(&[1], &[0, 1]);
        assert_eq!(x.compose(&inv).unwrap(), rf(&[0, 0, 1], &[-1, 0, 1]));
    }
}
