//! Free energies `F_{g,n}`: primitives of the correlators normalized by vanishing fiber
//! sums, the differential recursion they satisfy, and their diagonal specializations.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::rational::{int, rat};
use crate::algebra::{Point, Polynomial, Rational, RationalFunction};
use crate::basis::{
    differentiate_slots, function_derivative, function_value, integrate_slots, Tensor,
};
use crate::curve::{cauchy_kernel, Mode, SpectralCurve};
use crate::error::{Error, Result};
use crate::recursion::{is_stable, level, sample_ok, Correlator, CorrelatorTable};

/// `F_{g,n}` in the function pole basis; order-0 slots are the constant function.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FreeEnergy {
    pub g: usize,
    pub n: usize,
    pub tensor: Tensor,
}

impl FreeEnergy {
    /// `F` at a point, with the slots in `derivs` differentiated once.
    pub fn eval_partial(
        &self,
        points: &[Point],
        zs: &[Rational],
        derivs: &[usize],
    ) -> Result<Rational> {
        self.tensor.eval_with(|i, s| {
            let p = &points[s.point as usize];
            let v = if derivs.contains(&i) {
                function_derivative(p, s.order, &zs[i])
            } else {
                function_value(p, s.order, &zs[i])
            };
            v.ok_or_else(|| Error::BadSample(format!("{} is a pole", zs[i])))
        })
    }

    pub fn eval(&self, points: &[Point], zs: &[Rational]) -> Result<Rational> {
        self.eval_partial(points, zs, &[])
    }
}

/// Slot-wise primitive of `W`, normalized so that each slot is odd under the involution.
///
/// In EXACT mode the zero-constant primitive is projected with `prod_i (1 - sigma_i^*)/2`
/// (which fixes `d F` because `sigma^* W = -W`) and the normalization is then checked
/// slot by slot. SERIES mode keeps zero constants.
pub fn integrate_correlator(curve: &SpectralCurve, w: &Correlator) -> Result<FreeEnergy> {
    let mut t = integrate_slots(&w.tensor, w.n)?;
    if curve.mode == Mode::Exact {
        let half = rat(1, 2);
        for i in 0..w.n {
            let pulled = t.pullback_slot(i, |p, k| curve.function_pullback(p as usize, k))?;
            t = t.add(&pulled.scale(&-Rational::one())).scale(&half);
        }
        for i in 0..w.n {
            let pulled = t.pullback_slot(i, |p, k| curve.function_pullback(p as usize, k))?;
            if !pulled.add(&t).is_empty() {
                return Err(Error::Normalization {
                    g: w.g,
                    n: w.n,
                    slot: i,
                });
            }
        }
    }
    if differentiate_slots(&t, w.n)? != w.tensor {
        return Err(Error::InternalConsistency(format!(
            "F({},{}): differentiating every slot does not give back W",
            w.g, w.n
        )));
    }
    Ok(FreeEnergy {
        g: w.g,
        n: w.n,
        tensor: t,
    })
}

#[derive(Clone, Debug, Default)]
pub struct FreeEnergyTable {
    entries: BTreeMap<(usize, usize), FreeEnergy>,
}

impl FreeEnergyTable {
    pub fn from_correlators(curve: &SpectralCurve, table: &CorrelatorTable) -> Result<Self> {
        let ws: Vec<&Correlator> = table.entries().collect();
        let entries = ws
            .par_iter()
            .map(|w| Ok(((w.g, w.n), integrate_correlator(curve, w)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(FreeEnergyTable { entries })
    }

    pub fn get(&self, g: usize, n: usize) -> Option<&FreeEnergy> {
        self.entries.get(&(g, n))
    }

    /// `F_{0,1}` and `F_{0,2}` are never built.
    pub fn require(&self, g: usize, n: usize) -> Result<&FreeEnergy> {
        if !is_stable(g, n) {
            return Err(Error::Unsupported(format!(
                "F({g},{n}) is outside the stable range"
            )));
        }
        self.get(g, n).ok_or(Error::IncompleteTable { g, n })
    }

    pub fn entries(&self) -> impl Iterator<Item = &FreeEnergy> {
        self.entries.values()
    }

    pub fn insert(&mut self, f: FreeEnergy) {
        self.entries.insert((f.g, f.n), f);
    }
}

/// Coefficient of `dz1` in `d_1 F_{g,n}` at `zs`, from the differential recursion over
/// the lower free energies (EXACT mode).
///
/// For `(1,1)` the `F_{0,2}` term is replaced by its second derivative, the
/// `B(u1, sigma(u2))` part of the Bergman kernel. `(0,3)` would need `F_{0,2}` itself
/// and is unsupported.
pub fn df_differential_recursion(
    curve: &SpectralCurve,
    table: &FreeEnergyTable,
    g: usize,
    n: usize,
    zs: &[Rational],
) -> Result<Rational> {
    let sigma = curve.require_exact()?;
    if zs.len() != n {
        return Err(Error::MalformedInput(format!(
            "expected {n} sample coordinates"
        )));
    }
    if (g, n) == (0, 3) || !is_stable(g, n) {
        return Err(Error::Unsupported(format!(
            "differential recursion for F({g},{n})"
        )));
    }
    if !sample_ok(curve, zs) {
        return Err(Error::BadSample(format!("{zs:?} meets an excluded locus")));
    }
    let points = curve.active_points();
    let h = curve.h();
    let z1 = &zs[0];
    let two_h1 = h.eval(z1)? * int(2);

    if (g, n) == (1, 1) {
        let s = sigma.eval(z1)?;
        let d = z1 - &s;
        let b = sigma.derivative().eval(z1)? / (&d * &d);
        return Ok(b / two_h1);
    }

    let mut total = Rational::zero();
    if n >= 2 {
        let f = table.require(g, n - 1)?;
        for j in 1..n {
            let sj = sigma.eval(&zs[j])?;
            let omega =
                cauchy_kernel(&Point::Finite(zs[j].clone()), &Point::Finite(sj)).eval(z1)?;
            let without_j: Vec<Rational> =
                (0..n).filter(|&i| i != j).map(|i| zs[i].clone()).collect();
            let without_1: Vec<Rational> = zs[1..].to_vec();
            let a = f.eval_partial(&points, &without_j, &[0])? / &two_h1;
            let b = f.eval_partial(&points, &without_1, &[j - 1])? / (h.eval(&zs[j])? * int(2));
            total -= omega * (a - b);
        }
    }

    let mut bracket = Rational::zero();
    if g >= 1 {
        let f = table.require(g - 1, n + 1)?;
        let mut args = vec![z1.clone(), z1.clone()];
        args.extend_from_slice(&zs[1..]);
        bracket += f.eval_partial(&points, &args, &[0, 1])?;
    }
    let m = n - 1;
    for g1 in 0..=g {
        for mask in 0u32..(1 << m) {
            let n1 = mask.count_ones() as usize + 1;
            let n2 = m + 2 - n1;
            if !is_stable(g1, n1) || !is_stable(g - g1, n2) {
                continue;
            }
            let mut left = vec![z1.clone()];
            let mut right = vec![z1.clone()];
            for (pos, z) in zs[1..].iter().enumerate() {
                if mask & (1 << pos) != 0 {
                    left.push(z.clone());
                } else {
                    right.push(z.clone());
                }
            }
            let a = table.require(g1, n1)?.eval_partial(&points, &left, &[0])?;
            let b = table
                .require(g - g1, n2)?
                .eval_partial(&points, &right, &[0])?;
            bracket += a * b;
        }
    }
    total -= bracket / two_h1;
    Ok(total)
}

/// Seeded rational sample tuples avoiding the excluded loci.
pub fn sample_tuples(
    curve: &SpectralCurve,
    n: usize,
    count: usize,
    seed: u64,
) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 1000 * count {
        attempts += 1;
        let zs: Vec<Rational> = (0..n)
            .map(|_| rat(rng.gen_range(-40..=40), rng.gen_range(1..=12)))
            .collect();
        if sample_ok(curve, &zs) {
            out.push(zs);
        }
    }
    out
}

/// Compares the differential recursion with `d_1` of the integrated `F_{g,n}` at seeded
/// samples. Returns the number of samples checked.
pub fn check_differential_recursion(
    curve: &SpectralCurve,
    table: &FreeEnergyTable,
    g: usize,
    n: usize,
    samples: usize,
    seed: u64,
) -> Result<usize> {
    let f = table.require(g, n)?;
    let points = curve.active_points();
    let tuples = sample_tuples(curve, n, samples, seed ^ ((g as u64) << 32 | n as u64));
    if tuples.len() < samples {
        return Err(Error::BadSample(format!(
            "could only draw {} samples",
            tuples.len()
        )));
    }
    tuples.par_iter().try_for_each(|zs| {
        let lhs = f.eval_partial(&points, zs, &[0])?;
        let rhs = df_differential_recursion(curve, table, g, n, zs)?;
        if lhs != rhs {
            return Err(Error::InternalConsistency(format!(
                "F({g},{n}): differential recursion gives {rhs}, integration gives {lhs} at {zs:?}"
            )));
        }
        Ok(())
    })?;
    Ok(tuples.len())
}

/// `F(z, ..., z)`, or `n d/du F(u, z, ...)` at `u = z`, or
/// `n (n-1) d^2/du1 du2 F(u1, u2, z, ...)` at `u1 = u2 = z`.
pub fn diagonal_specialize(
    curve: &SpectralCurve,
    f: &FreeEnergy,
    derivative_slots: usize,
) -> Result<RationalFunction> {
    if derivative_slots > 2 || derivative_slots > f.n {
        return Err(Error::MalformedInput(format!(
            "cannot differentiate {derivative_slots} slots of F({},{})",
            f.g, f.n
        )));
    }
    let points = curve.active_points();
    let np = points.len();
    // Each basis factor is `c * t_p^e` with `t_p = z - p` or `t_p = z` at infinity.
    let mut grouped: BTreeMap<Vec<i64>, Rational> = BTreeMap::new();
    for (key, c) in f.tensor.terms() {
        let mut exps = vec![0i64; np];
        let mut coeff = c.clone();
        for (i, s) in key.iter().enumerate() {
            if s.order == 0 {
                if i < derivative_slots {
                    coeff = Rational::zero();
                }
                continue;
            }
            let k = s.order as i64;
            let p = s.point as usize;
            let inf = points[p] == Point::Infinity;
            if i < derivative_slots {
                // d/dz (z-p)^{-k} = -k (z-p)^{-k-1};  d/dz z^k = k z^{k-1}
                coeff *= if inf { int(k) } else { int(-k) };
                exps[p] += if inf { k - 1 } else { -k - 1 };
            } else {
                exps[p] += if inf { k } else { -k };
            }
        }
        if !coeff.is_zero() {
            *grouped.entry(exps).or_insert_with(Rational::zero) += coeff;
        }
    }
    let factor = match derivative_slots {
        0 => int(1),
        1 => int(f.n as i64),
        _ => int((f.n * (f.n - 1)) as i64),
    };
    let base = |p: &Point| match p {
        Point::Finite(q) => Polynomial::linear_root(q),
        Point::Infinity => Polynomial::z(),
    };
    let mut shift = vec![0i64; np];
    for exps in grouped.keys() {
        for (s, e) in shift.iter_mut().zip(exps) {
            *s = (*s).max(-e);
        }
    }
    let mut num = Polynomial::zero();
    for (exps, c) in &grouped {
        if c.is_zero() {
            continue;
        }
        let mut term = Polynomial::constant(c.clone());
        for (p, (e, s)) in exps.iter().zip(&shift).enumerate() {
            term = &term * &base(&points[p]).pow((e + s) as u32);
        }
        num = &num + &term;
    }
    let mut den = Polynomial::one();
    for (p, s) in shift.iter().enumerate() {
        den = &den * &base(&points[p]).pow(*s as u32);
    }
    RationalFunction::new(num.scale(&factor), den)
}

/// Pole order of `F(z, ..., z)` at every active point, expected to be `6g - 6 + 3n`.
pub fn check_diagonal_pole_orders(curve: &SpectralCurve, f: &FreeEnergy) -> Result<()> {
    let diag = diagonal_specialize(curve, f, 0)?;
    let expected = (3 * level(f.g, f.n)) as usize;
    for p in curve.active_points() {
        let got = diag.pole_order_at(&p);
        if got != expected {
            return Err(Error::InternalConsistency(format!(
                "F({},{})(z,...,z) has a pole of order {got} at {p}, expected {expected}",
                f.g, f.n
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_reproducible() {
        let x =
            RationalFunction::new(Polynomial::from_ints(&[0, 0, 1]), Polynomial::one()).unwrap();
        let y = RationalFunction::z();
        let c = SpectralCurve::build(x, y, Mode::Exact, 8).unwrap();
        let a = sample_tuples(&c, 3, 5, 7);
        assert_eq!(a, sample_tuples(&c, 3, 5, 7));
        assert_eq!(a.len(), 5);
        assert!(a.iter().all(|zs| sample_ok(&c, zs)));
    }
}
