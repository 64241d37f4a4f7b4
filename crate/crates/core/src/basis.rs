//! Pole bases and the symmetric tensors built on them.
//!
//! Forms: `e_{p,k} = dt/t^k` where `t` is the local parameter at `p`, i.e. `dz/(z-p)^k`
//! for finite `p` and `-z^(k-2) dz` at infinity.
//! Functions: `f_{p,k} = 1/t^k`, i.e. `1/(z-p)^k` or `z^k`; order 0 is the constant 1.
//! They satisfy `d f_{p,k} = -k e_{p,k+1}`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::algebra::rational::{int, pow};
use crate::algebra::{Point, Rational, RationalFunction};
use crate::curve::Pullback;
use crate::error::{Error, Result};

/// One tensor factor: basis element of order `order` at active point number `point`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Slot {
    pub point: u16,
    pub order: u16,
}

impl Slot {
    pub fn new(point: u16, order: u16) -> Self {
        Slot { point, order }
    }

    /// The constant function (function basis only).
    pub const CONST: Slot = Slot { point: 0, order: 0 };
}

pub type Key = Vec<Slot>;

/// Coefficient of `dz` in `e_{p,k}` at `z`; `None` when `z` is the pole.
pub fn form_value(p: &Point, k: u16, z: &Rational) -> Option<Rational> {
    match p {
        Point::Finite(q) => {
            let d = z - q;
            (!d.is_zero()).then(|| pow(&d, -(k as i32)))
        }
        Point::Infinity => {
            if k < 2 && z.is_zero() {
                return None;
            }
            Some(-pow(z, k as i32 - 2))
        }
    }
}

/// Value of `f_{p,k}` at `z`.
pub fn function_value(p: &Point, k: u16, z: &Rational) -> Option<Rational> {
    if k == 0 {
        return Some(Rational::one());
    }
    match p {
        Point::Finite(q) => {
            let d = z - q;
            (!d.is_zero()).then(|| pow(&d, -(k as i32)))
        }
        Point::Infinity => Some(pow(z, k as i32)),
    }
}

/// Value of `d f_{p,k} / dz` at `z`.
pub fn function_derivative(p: &Point, k: u16, z: &Rational) -> Option<Rational> {
    if k == 0 {
        return Some(Rational::zero());
    }
    form_value(p, k + 1, z).map(|v| v * int(-(k as i64)))
}

/// `e_{p,k}` as the rational coefficient of `dz`.
pub fn form_function(p: &Point, k: u16) -> RationalFunction {
    match p {
        Point::Finite(_) => RationalFunction::pole_monomial(Rational::one(), p, k as usize),
        Point::Infinity => RationalFunction::z()
            .pow(k as i32 - 2)
            .unwrap()
            .scale(&int(-1)),
    }
}

/// `f_{p,k}` as a rational function of `z`.
pub fn function_function(p: &Point, k: u16) -> RationalFunction {
    if k == 0 {
        return RationalFunction::one();
    }
    RationalFunction::pole_monomial(Rational::one(), p, k as usize)
}

/// A tensor in a pole basis, stored with every slot ordering present (not just sorted
/// representatives) so that symmetry is something we check rather than assume.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Tensor {
    terms: BTreeMap<Key, Rational>,
}

impl Tensor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_terms(terms: BTreeMap<Key, Rational>) -> Self {
        let mut t = Tensor { terms };
        t.terms.retain(|_, c| !c.is_zero());
        t
    }

    pub fn terms(&self) -> &BTreeMap<Key, Rational> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn get(&self, key: &[Slot]) -> Rational {
        self.terms.get(key).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, key: Key, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn set(&mut self, key: Key, c: Rational) {
        if c.is_zero() {
            self.terms.remove(&key);
        } else {
            self.terms.insert(key, c);
        }
    }

    pub fn add(&self, other: &Tensor) -> Tensor {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Tensor {
        Tensor::from_terms(self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect())
    }

    /// First adjacent transposition under which the tensor is not invariant.
    pub fn symmetry_defect(&self) -> Option<usize> {
        for (key, c) in &self.terms {
            for i in 0..key.len().saturating_sub(1) {
                let mut swapped = key.clone();
                swapped.swap(i, i + 1);
                if self.get(&swapped) != *c {
                    return Some(i);
                }
            }
        }
        None
    }

    /// Largest order appearing in each slot.
    pub fn max_orders(&self, arity: usize) -> Vec<u16> {
        let mut out = vec![0; arity];
        for key in self.terms.keys() {
            for (i, s) in key.iter().enumerate() {
                out[i] = out[i].max(s.order);
            }
        }
        out
    }

    /// Replaces slot `i` by a linear image given per basis element.
    pub fn map_slot<F>(&self, i: usize, mut image: F) -> Result<Tensor>
    where
        F: FnMut(Slot) -> Result<Vec<(Slot, Rational)>>,
    {
        let mut cache: BTreeMap<Slot, Vec<(Slot, Rational)>> = BTreeMap::new();
        let mut out = Tensor::new();
        for (key, c) in &self.terms {
            let s = key[i];
            if let std::collections::btree_map::Entry::Vacant(v) = cache.entry(s) {
                v.insert(image(s)?);
            }
            for (t, a) in &cache[&s] {
                let mut k = key.clone();
                k[i] = *t;
                out.add_term(k, c * a);
            }
        }
        Ok(out)
    }

    /// Applies a per-point pullback table to slot `i`.
    pub fn pullback_slot<F>(&self, i: usize, mut table: F) -> Result<Tensor>
    where
        F: FnMut(u16, u16) -> Result<Pullback>,
    {
        self.map_slot(i, |s| {
            Ok(table(s.point, s.order)?
                .into_iter()
                .map(|(k, c)| {
                    let point = if k == 0 { 0 } else { s.point };
                    (Slot::new(point, k), c)
                })
                .collect())
        })
    }

    /// Evaluates `sum c prod value(i, slot_i)`, caching per `(i, slot)`.
    pub fn eval_with<F>(&self, mut value: F) -> Result<Rational>
    where
        F: FnMut(usize, Slot) -> Result<Rational>,
    {
        let mut cache: BTreeMap<(usize, Slot), Rational> = BTreeMap::new();
        let mut acc = Rational::zero();
        for (key, c) in &self.terms {
            let mut term = c.clone();
            for (i, s) in key.iter().enumerate() {
                let v = match cache.get(&(i, *s)) {
                    Some(v) => v.clone(),
                    None => {
                        let v = value(i, *s)?;
                        cache.insert((i, *s), v.clone());
                        v
                    }
                };
                if v.is_zero() {
                    term = Rational::zero();
                    break;
                }
                term *= v;
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Keeps slot 0 symbolic and evaluates the rest; returns the coefficient of slot 0
    /// on each basis element.
    pub fn contract_tail<F>(&self, mut value: F) -> Result<BTreeMap<Slot, Rational>>
    where
        F: FnMut(usize, Slot) -> Result<Rational>,
    {
        let mut cache: BTreeMap<(usize, Slot), Rational> = BTreeMap::new();
        let mut out: BTreeMap<Slot, Rational> = BTreeMap::new();
        for (key, c) in &self.terms {
            let mut term = c.clone();
            for (i, s) in key.iter().enumerate().skip(1) {
                let v = match cache.get(&(i, *s)) {
                    Some(v) => v.clone(),
                    None => {
                        let v = value(i, *s)?;
                        cache.insert((i, *s), v.clone());
                        v
                    }
                };
                term *= v;
            }
            *out.entry(key[0]).or_insert_with(Rational::zero) += term;
        }
        out.retain(|_, c| !c.is_zero());
        Ok(out)
    }
}

/// Forms to functions, slot by slot: `e_{p,k} -> -f_{p,k-1}/(k-1)`.
pub fn integrate_slots(t: &Tensor, arity: usize) -> Result<Tensor> {
    let mut out = t.clone();
    for i in 0..arity {
        out = out.map_slot(i, |s| {
            if s.order < 2 {
                return Err(Error::LogarithmicTerm(format!(
                    "slot {i} has a simple pole"
                )));
            }
            let k = s.order - 1;
            Ok(vec![(
                Slot::new(s.point, k),
                -Rational::one() / int(k as i64),
            )])
        })?;
    }
    Ok(out)
}

/// Functions to forms, slot by slot: `f_{p,k} -> -k e_{p,k+1}`, constants vanish.
pub fn differentiate_slots(t: &Tensor, arity: usize) -> Result<Tensor> {
    let mut out = t.clone();
    for i in 0..arity {
        out = out.map_slot(i, |s| {
            if s.order == 0 {
                return Ok(Vec::new());
            }
            Ok(vec![(
                Slot::new(s.point, s.order + 1),
                int(-(s.order as i64)),
            )])
        })?;
    }
    Ok(out)
}
