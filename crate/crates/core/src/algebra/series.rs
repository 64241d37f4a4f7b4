//! Truncated Laurent series in a local parameter `t`.
//!
//! A series knows its coefficients for degrees `val..order`; everything at or above
//! `order` is unknown. Arithmetic propagates the known range, so a coefficient that
//! was never determined can't be read by accident.

use std::fmt;

use num_traits::{One, Zero};

use super::poly::Polynomial;
use super::rational::{int, Rational};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LaurentSeries {
    val: i64,
    coeffs: Vec<Rational>,
    order: i64,
}

impl LaurentSeries {
    /// Builds a series whose first coefficient sits at degree `val`. Coefficients at
    /// or beyond `order` are dropped; leading zeros are absorbed into `val`,
    /// trailing zeros are implicit.
    pub fn new(val: i64, mut coeffs: Vec<Rational>, order: i64) -> Self {
        let keep = (order - val).max(0) as usize;
        coeffs.truncate(keep);
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        let lead = coeffs.iter().position(|c| !c.is_zero());
        match lead {
            None => Self::zero(order),
            Some(i) => {
                coeffs.drain(..i);
                LaurentSeries {
                    val: val + i as i64,
                    coeffs,
                    order,
                }
            }
        }
    }

    /// Zero, known up to (not including) degree `order`.
    pub fn zero(order: i64) -> Self {
        LaurentSeries {
            val: order,
            coeffs: Vec::new(),
            order,
        }
    }

    pub fn monomial(c: Rational, k: i64, order: i64) -> Self {
        Self::new(k, vec![c], order)
    }

    pub fn one(order: i64) -> Self {
        Self::monomial(Rational::one(), 0, order)
    }

    /// The parameter `t` itself.
    pub fn t(order: i64) -> Self {
        Self::monomial(Rational::one(), 1, order)
    }

    pub fn from_poly(p: &Polynomial, order: i64) -> Self {
        Self::new(0, p.coeffs().to_vec(), order)
    }

    /// Lowest degree with a nonzero coefficient (equals `order` for a zero series).
    pub fn val(&self) -> i64 {
        self.val
    }

    /// First degree whose coefficient is unknown.
    pub fn order(&self) -> i64 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Coefficient of `t^d`, or an insufficient-order error if it is unknown.
    pub fn coeff(&self, d: i64) -> Result<Rational> {
        if d >= self.order {
            return Err(Error::InsufficientOrder {
                tried: self.order.max(0) as usize,
            });
        }
        Ok(self.coeff_or_zero(d))
    }

    fn coeff_or_zero(&self, d: i64) -> Rational {
        if d < self.val || d >= self.order {
            return Rational::zero();
        }
        self.coeffs
            .get((d - self.val) as usize)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Known coefficients as `(degree, value)` pairs, zeros skipped.
    pub fn terms(&self) -> impl Iterator<Item = (i64, &Rational)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(move |(i, c)| (self.val + i as i64, c))
    }

    pub fn truncate(&self, order: i64) -> Self {
        if order >= self.order {
            return self.clone();
        }
        Self::new(self.val, self.coeffs.clone(), order)
    }

    /// Principal part: the known coefficients of negative degree.
    pub fn principal_part(&self) -> Vec<(i64, Rational)> {
        self.terms()
            .filter(|(d, _)| *d < 0)
            .map(|(d, c)| (d, c.clone()))
            .collect()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.order);
        }
        LaurentSeries {
            val: self.val,
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
            order: self.order,
        }
    }

    /// Multiplies by `t^k`.
    pub fn shift(&self, k: i64) -> Self {
        LaurentSeries {
            val: self.val + k,
            coeffs: self.coeffs.clone(),
            order: self.order + k,
        }
    }

    /// One past the highest stored degree.
    fn top(&self) -> i64 {
        if self.coeffs.is_empty() {
            return i64::MIN;
        }
        self.val + self.coeffs.len() as i64
    }

    pub fn add(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let val = self.val.min(other.val).min(order);
        let hi = order.min(self.top().max(other.top())).max(val);
        let coeffs = (val..hi)
            .map(|d| self.coeff_or_zero(d) + other.coeff_or_zero(d))
            .collect();
        Self::new(val, coeffs, order)
    }

    /// In-place `self += c * other`; the accumulator pattern used by the residue code.
    pub fn add_scaled(&mut self, c: &Rational, other: &Self) {
        if c.is_zero() {
            *self = self.truncate(other.order);
            return;
        }
        let order = self.order.min(other.order);
        let val = self.val.min(other.val).min(order);
        let hi = order.min(self.top().max(other.top())).max(val);
        let mut coeffs: Vec<Rational> = (val..hi).map(|d| self.coeff_or_zero(d)).collect();
        for (d, a) in other.terms() {
            if d < hi {
                coeffs[(d - val) as usize] += c * a;
            }
        }
        *self = Self::new(val, coeffs, order);
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        LaurentSeries {
            val: self.val,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
            order: self.order,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_to(other, i64::MAX)
    }

    /// Product computed only below degree `cap`.
    pub fn mul_to(&self, other: &Self, cap: i64) -> Self {
        let val = self.val.saturating_add(other.val);
        let order = self
            .val
            .saturating_add(other.order)
            .min(other.val.saturating_add(self.order))
            .min(cap);
        if self.is_zero() || other.is_zero() || order <= val {
            return Self::zero(order);
        }
        let len = (order - val).min(self.coeffs.len() as i64 + other.coeffs.len() as i64) as usize;
        let mut out = vec![Rational::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= len || a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        Self::new(val, out, order)
    }

    /// Multiplicative inverse. Needs a known nonzero leading coefficient.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::InsufficientOrder {
                tried: self.order.max(0) as usize,
            });
        }
        let prec = self.order - self.val;
        if prec > 1 << 24 {
            return Err(Error::InternalConsistency(
                "inverse of an untruncated series".into(),
            ));
        }
        let prec = prec as usize;
        let a = &self.coeffs;
        let a0inv = a[0].recip();
        let mut b: Vec<Rational> = Vec::with_capacity(prec);
        b.push(a0inv.clone());
        for k in 1..prec {
            let mut acc = Rational::zero();
            for i in 1..=k.min(a.len() - 1) {
                if !a[i].is_zero() {
                    acc += &a[i] * &b[k - i];
                }
            }
            b.push(-acc * &a0inv);
        }
        Ok(Self::new(-self.val, b, -self.val + prec as i64))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::one(base.order - base.val);
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&b);
            }
            e >>= 1;
            if e > 0 {
                b = b.mul(&b);
            }
        }
        Ok(acc)
    }

    /// Term-by-term derivative in `t`.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c * int(self.val + i as i64))
            .collect();
        Self::new(self.val - 1, coeffs, self.order - 1)
    }

    /// Evaluates a polynomial at this series by Horner's rule.
    pub fn eval_poly(p: &Polynomial, s: &Self) -> Self {
        let cap = if s.val >= 0 { s.order } else { i64::MAX };
        let mut acc = Self::zero(i64::MAX);
        for c in p.coeffs().iter().rev() {
            acc = acc
                .mul_to(s, cap)
                .add(&Self::monomial(c.clone(), 0, i64::MAX));
        }
        if acc.order == i64::MAX {
            // `p` constant: the result is exact; pin it to the input's precision.
            acc = acc.truncate(s.order.max(0));
        }
        acc
    }
}

/// `sum_i a[i] * b[-1-i]`: the residue of the product of two series.
pub fn residue_of_product(a: &LaurentSeries, b: &LaurentSeries) -> Result<Rational> {
    if a.is_zero() && a.order > -1 - b.val || b.is_zero() && b.order > -1 - a.val {
        return Ok(Rational::zero());
    }
    let hi = -1 - b.val;
    if a.order <= hi || b.order <= -1 - a.val {
        return Err(Error::InsufficientOrder {
            tried: a.order.min(b.order).max(0) as usize,
        });
    }
    let mut acc = Rational::zero();
    for i in a.val..=hi {
        let ai = a.coeff_or_zero(i);
        if ai.is_zero() {
            continue;
        }
        let bj = b.coeff_or_zero(-1 - i);
        if !bj.is_zero() {
            acc += ai * bj;
        }
    }
    Ok(acc)
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (d, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match d {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*t")?,
                _ => write!(f, "{c}*t^{d}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(t^{})", self.order)
    }
}
