//! Residue recursion for the correlators `W_{g,n}`.
//!
//! Every residue is taken in the local parameter `t` at an active point `p`. With
//! `s(t)` the involution there, the kernel numerator expands as
//! `omega^{s-t}(z1) = sum_{k>=1} (s^k - t^k) e_{p,k+1}(z1)`, so the output's first slot
//! is read off directly in the pole basis. The bracket only has to be known through
//! `t^0` because the kernel coefficients have valuation at least `-1`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::algebra::rational::{int, rat};
use crate::algebra::{residue_of_product, LaurentSeries, Point, Rational, RationalFunction};
use crate::basis::{form_function, form_value, Key, Slot, Tensor};
use crate::curve::{bergman, Mode, OneForm, SpectralCurve};
use crate::error::{Error, Result};

/// Orders beyond this are treated as exact.
const EXACT: i64 = 1 << 40;
/// Bracket coefficients are needed below this degree.
const CAP: i64 = 1;

pub fn level(g: usize, n: usize) -> i64 {
    2 * g as i64 - 2 + n as i64
}

pub fn is_stable(g: usize, n: usize) -> bool {
    n >= 1 && level(g, n) > 0
}

/// Per-slot pole order bound `2(3g - 2 + n)`.
pub fn pole_bound(g: usize, n: usize) -> u16 {
    (2 * (3 * g as i64 - 2 + n as i64)).max(0) as u16
}

/// All stable `(g, n)` with `g <= g_max` and level at most `2 g_max - 2 + n_max`.
/// Sets of this shape are closed under the recursion's dependencies.
pub fn schedule(g_max: usize, n_max: usize) -> BTreeSet<(usize, usize)> {
    let top = level(g_max, n_max);
    let mut out = BTreeSet::new();
    for g in 0..=g_max {
        for n in 1.. {
            if level(g, n) > top {
                break;
            }
            if is_stable(g, n) {
                out.insert((g, n));
            }
        }
    }
    out
}

/// Every stable `(g, n)` with level at most `max_level`.
pub fn full_levels(max_level: i64) -> BTreeSet<(usize, usize)> {
    let g_top = ((max_level + 1) / 2).max(0) as usize;
    schedule(g_top, 0)
        .into_iter()
        .chain((0..=g_top).flat_map(|g| (1..=(max_level + 2) as usize).map(move |n| (g, n))))
        .filter(|&(g, n)| is_stable(g, n) && level(g, n) <= max_level)
        .collect()
}

/// `W_{g,n}` in the form pole basis; slot points index the curve's active list.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Correlator {
    pub g: usize,
    pub n: usize,
    pub tensor: Tensor,
}

impl Correlator {
    pub fn level(&self) -> i64 {
        level(self.g, self.n)
    }

    /// Coefficient of `dz1 ... dzn` at a point.
    pub fn eval(&self, points: &[Point], zs: &[Rational]) -> Result<Rational> {
        self.tensor.eval_with(|i, s| {
            form_value(&points[s.point as usize], s.order, &zs[i])
                .ok_or_else(|| Error::BadSample(format!("{} is a pole", zs[i])))
        })
    }

    /// The first slot as a rational function of `z1`, with the others fixed at `tail`.
    pub fn univariate(&self, points: &[Point], tail: &[Rational]) -> Result<RationalFunction> {
        let coeffs = self.tensor.contract_tail(|i, s| {
            form_value(&points[s.point as usize], s.order, &tail[i - 1])
                .ok_or_else(|| Error::BadSample(format!("{} is a pole", tail[i - 1])))
        })?;
        let mut acc = RationalFunction::zero();
        for (s, c) in coeffs {
            acc = &acc + &form_function(&points[s.point as usize], s.order).scale(&c);
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug)]
pub struct RecursionOptions {
    /// Starting series order; defaults to `4 * level + 8`.
    pub initial_order: Option<usize>,
    /// How many times the order may double before giving up.
    pub max_doublings: usize,
    /// Recompute each level at twice the order and require identical output.
    pub stability_check: bool,
}

impl RecursionOptions {
    pub fn for_curve(curve: &SpectralCurve) -> Self {
        match curve.mode {
            Mode::Exact => RecursionOptions {
                initial_order: None,
                max_doublings: 8,
                stability_check: false,
            },
            Mode::Series => RecursionOptions {
                initial_order: Some(curve.series_order),
                max_doublings: 3,
                stability_check: true,
            },
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CorrelatorTable {
    entries: BTreeMap<(usize, usize), Correlator>,
    /// Series order that sufficed for the highest level.
    pub working_order: usize,
}

impl CorrelatorTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, g: usize, n: usize) -> Option<&Correlator> {
        self.entries.get(&(g, n))
    }

    pub fn require(&self, g: usize, n: usize) -> Result<&Correlator> {
        self.get(g, n).ok_or(Error::IncompleteTable { g, n })
    }

    pub fn entries(&self) -> impl Iterator<Item = &Correlator> {
        self.entries.values()
    }

    pub fn keys(&self) -> BTreeSet<(usize, usize)> {
        self.entries.keys().copied().collect()
    }

    pub fn insert(&mut self, w: Correlator) {
        self.entries.insert((w.g, w.n), w);
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Whether every stable `(g, n)` at this level is present.
    pub fn has_level(&self, l: i64) -> bool {
        full_levels(l)
            .into_iter()
            .filter(|&(g, n)| level(g, n) == l)
            .all(|(g, n)| self.entries.contains_key(&(g, n)))
    }

    /// Computes every target level by level. Targets must be closed under the
    /// recursion's dependencies (see [`schedule`]).
    pub fn compute(
        curve: &SpectralCurve,
        targets: &BTreeSet<(usize, usize)>,
        opts: &RecursionOptions,
    ) -> Result<Self> {
        let mut table = CorrelatorTable::new();
        table.extend(curve, targets, opts)?;
        Ok(table)
    }

    /// Adds the missing targets to an existing table.
    pub fn extend(
        &mut self,
        curve: &SpectralCurve,
        targets: &BTreeSet<(usize, usize)>,
        opts: &RecursionOptions,
    ) -> Result<()> {
        let mut by_level: BTreeMap<i64, Vec<(usize, usize)>> = BTreeMap::new();
        for &(g, n) in targets {
            if !is_stable(g, n) {
                return Err(Error::Unsupported(format!(
                    "W({g},{n}) is not in the stable range"
                )));
            }
            if !self.entries.contains_key(&(g, n)) {
                by_level.entry(level(g, n)).or_default().push((g, n));
            }
        }
        for (l, items) in by_level {
            for &(g, n) in &items {
                for dep in dependencies(g, n) {
                    if !self.entries.contains_key(&dep) && !targets.contains(&dep) {
                        return Err(Error::IncompleteTable { g: dep.0, n: dep.1 });
                    }
                }
            }
            let (out, order) = self.compute_level(curve, l, &items, opts)?;
            for w in out {
                if l == 1 {
                    check_closed_form(curve, &w, order)?;
                }
                self.insert(w);
            }
            self.working_order = self.working_order.max(order);
        }
        Ok(())
    }

    fn compute_level(
        &self,
        curve: &SpectralCurve,
        l: i64,
        items: &[(usize, usize)],
        opts: &RecursionOptions,
    ) -> Result<(Vec<Correlator>, usize)> {
        let mut order = opts.initial_order.unwrap_or(4 * l as usize + 8).max(8);
        let mut doublings = 0;
        loop {
            match self.compute_level_at(curve, items, order) {
                Ok(out) => {
                    if opts.stability_check {
                        let again = self.compute_level_at(curve, items, 2 * order);
                        if again.as_ref().ok() != Some(&out) {
                            return Err(Error::InsufficientOrder { tried: order });
                        }
                    }
                    return Ok((out, order));
                }
                Err(Error::InsufficientOrder { .. }) if doublings < opts.max_doublings => {
                    order *= 2;
                    doublings += 1;
                }
                Err(Error::InsufficientOrder { .. }) => {
                    return Err(Error::InsufficientOrder { tried: order })
                }
                Err(e) => return Err(e),
            }
        }
    }

    fn compute_level_at(
        &self,
        curve: &SpectralCurve,
        items: &[(usize, usize)],
        order: usize,
    ) -> Result<Vec<Correlator>> {
        let max_order = self
            .entries
            .values()
            .flat_map(|w| w.tensor.max_orders(w.n))
            .max()
            .unwrap_or(2)
            .max(2);
        let locals: Vec<Local> = (0..curve.active().len())
            .into_par_iter()
            .map(|i| Local::build(curve, i, order as i64, max_order))
            .collect::<Result<_>>()?;
        let keys: Vec<(usize, usize)> = self.entries.keys().copied().collect();
        let grouped: Vec<BTreeMap<(usize, usize), Grouped>> = locals
            .par_iter()
            .map(|loc| {
                keys.par_iter()
                    .map(|&k| Ok((k, Grouped::build(&self.entries[&k].tensor, loc))))
                    .collect::<Result<BTreeMap<_, _>>>()
            })
            .collect::<Result<_>>()?;
        items
            .par_iter()
            .map(|&(g, n)| {
                let mut total = Tensor::new();
                for (loc, grp) in locals.iter().zip(&grouped) {
                    let part = self.residue_at(loc, grp, g, n)?;
                    total = total.add(&part);
                }
                Ok(Correlator {
                    g,
                    n,
                    tensor: total,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::InsufficientOrder { .. } => Error::InsufficientOrder { tried: order },
                e => e,
            })
    }

    /// Contribution of one active point to `W_{g,n}`.
    fn residue_at(
        &self,
        loc: &Local,
        grouped: &BTreeMap<(usize, usize), Grouped>,
        g: usize,
        n: usize,
    ) -> Result<Tensor> {
        let bracket = self.bracket(loc, grouped, g, n)?;
        let half = rat(1, 2);
        let mut out = Tensor::new();
        let mut extra: BTreeMap<i64, LaurentSeries> = BTreeMap::new();
        for (key, b) in &bracket {
            if b.is_zero() {
                if b.order() < CAP {
                    return Err(Error::InsufficientOrder { tried: 0 });
                }
                continue;
            }
            for k in 1..=(1 - b.val()) {
                let c = match loc.kernel.get(k as usize - 1) {
                    Some(c) => c,
                    None => {
                        if let std::collections::btree_map::Entry::Vacant(v) = extra.entry(k) {
                            v.insert(loc.kernel_coefficient(k)?);
                        }
                        &extra[&k]
                    }
                };
                let r = residue_of_product(c, b)?;
                if !r.is_zero() {
                    let mut full = Vec::with_capacity(n);
                    full.push(Slot::new(loc.idx, k as u16 + 1));
                    full.extend_from_slice(key);
                    out.add_term(full, r * &half);
                }
            }
        }
        Ok(out)
    }

    /// The bracketed integrand (everything but the kernel) as series in `t`, keyed by
    /// the basis elements carried by `z2..zn`.
    fn bracket(
        &self,
        loc: &Local,
        grouped: &BTreeMap<(usize, usize), Grouped>,
        g: usize,
        n: usize,
    ) -> Result<BTreeMap<Key, LaurentSeries>> {
        let p = loc.idx;
        let m = n - 1;
        let mut acc: BTreeMap<Key, LaurentSeries> = BTreeMap::new();
        let mut add = |key: Key, s: LaurentSeries| match acc.get_mut(&key) {
            Some(a) => a.add_scaled(&Rational::one(), &s),
            None => {
                acc.insert(key, s);
            }
        };

        // Terms with an explicit W_{0,2} factor.
        if (g, n) == (1, 1) {
            add(Vec::new(), loc.bergman_diagonal.truncate(CAP));
        } else if (g, n) == (0, 3) {
            // B(z,z2) B(s,z3) + B(z,z3) B(s,z2); only the leading terms survive below CAP.
            add(
                vec![Slot::new(p, 2), Slot::new(p, 2)],
                loc.pulled_bergman[0].truncate(CAP).scale(&int(2)),
            );
        } else if n >= 2 && is_stable(g, n - 1) {
            let grp = &grouped[&(g, n - 1)];
            for (rk, plain) in &grp.plain {
                let pulled = &grp.pulled[rk];
                for s in [plain, pulled] {
                    if s.is_zero() && s.order() < CAP {
                        return Err(Error::InsufficientOrder { tried: 0 });
                    }
                }
                for j in 0..m {
                    if !pulled.is_zero() {
                        for a in 0..=(-pulled.val()).max(0) {
                            let term = pulled.shift(a).scale(&int(a + 1)).truncate(CAP);
                            add(insert_at(rk, j, Slot::new(p, a as u16 + 2)), term);
                        }
                    }
                    if !plain.is_zero() {
                        for a in 0..=(-plain.val()).max(0) {
                            let term = plain.mul_to(loc.pulled_bergman_at(a)?, CAP);
                            add(insert_at(rk, j, Slot::new(p, a as u16 + 2)), term);
                        }
                    }
                }
            }
        }

        // W_{g-1,n+1}(z, s(z), ...).
        if g >= 1 && is_stable(g - 1, n + 1) {
            let w = &self.entries[&(g - 1, n + 1)];
            let mut products: BTreeMap<(Slot, Slot), LaurentSeries> = BTreeMap::new();
            for (key, c) in w.tensor.terms() {
                let pair = (key[0], key[1]);
                let prod = products
                    .entry(pair)
                    .or_insert_with(|| loc.plain(pair.0).mul_to(loc.pulled(pair.1), CAP));
                add(key[2..].to_vec(), prod.scale(c));
            }
        }

        // Stable splits W_{g1}(z, z_I) W_{g2}(s(z), z_J).
        for g1 in 0..=g {
            let g2 = g - g1;
            for mask in 0u32..(1 << m) {
                let n1 = mask.count_ones() as usize + 1;
                let n2 = m + 2 - n1;
                if !is_stable(g1, n1) || !is_stable(g2, n2) {
                    continue;
                }
                let left = &grouped[&(g1, n1)].plain;
                let right = &grouped[&(g2, n2)].pulled;
                for (k1, a) in left {
                    if a.is_zero() {
                        continue;
                    }
                    for (k2, b) in right {
                        if b.is_zero() {
                            continue;
                        }
                        add(merge(mask, m, k1, k2), a.mul_to(b, CAP));
                    }
                }
            }
        }
        Ok(acc)
    }
}

/// Lower entries that `W_{g,n}` reads.
pub fn dependencies(g: usize, n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    if n >= 2 && is_stable(g, n - 1) {
        out.push((g, n - 1));
    }
    if g >= 1 && is_stable(g - 1, n + 1) {
        out.push((g - 1, n + 1));
    }
    for g1 in 0..=g {
        for n1 in 1..=n {
            let (g2, n2) = (g - g1, n + 1 - n1);
            if is_stable(g1, n1) && is_stable(g2, n2) {
                out.push((g1, n1));
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

fn insert_at(rk: &[Slot], j: usize, s: Slot) -> Key {
    let mut k = Vec::with_capacity(rk.len() + 1);
    k.extend_from_slice(&rk[..j]);
    k.push(s);
    k.extend_from_slice(&rk[j..]);
    k
}

fn merge(mask: u32, m: usize, left: &[Slot], right: &[Slot]) -> Key {
    let (mut i, mut j) = (0, 0);
    (0..m)
        .map(|pos| {
            if mask & (1 << pos) != 0 {
                i += 1;
                left[i - 1]
            } else {
                j += 1;
                right[j - 1]
            }
        })
        .collect()
}

/// Everything about one active point that the residue needs, at a fixed series order.
struct Local {
    idx: u16,
    s: LaurentSeries,
    /// `1 / (H(s) s' - H(t))`
    kernel_den_inv: LaurentSeries,
    /// `c_k = (s^k - t^k) / (H(s) s' - H(t))` for `k = 1, 2, ...`
    kernel: Vec<LaurentSeries>,
    /// `s' / (t - s)^2`
    bergman_diagonal: LaurentSeries,
    /// `(a + 1) s^a s'`
    pulled_bergman: Vec<LaurentSeries>,
    /// `e_{q,k}` in the local parameter: plain and pulled back along `s`.
    plain: BTreeMap<Slot, LaurentSeries>,
    pulled: BTreeMap<Slot, LaurentSeries>,
}

impl Local {
    fn build(curve: &SpectralCurve, idx: usize, order: i64, max_order: u16) -> Result<Self> {
        let active = curve.active();
        let here = &active[idx].point;
        let s = curve.local_involution(idx, order as usize)?;
        let ds = s.derivative();
        let t = LaurentSeries::t(EXACT);
        let h = &active[idx].eta_local;
        let h_pulled = h.eval_series(&s)?.mul(&ds);
        let h_plain = h.series_expand(&Rational::zero(), order);
        let kernel_den_inv = h_pulled.sub(&h_plain).inv()?;
        let diff = t.sub(&s);
        let bergman_diagonal = ds.mul(&diff.pow(-2)?);

        let mut plain = BTreeMap::new();
        let mut pulled = BTreeMap::new();
        let kmax = 2 * max_order as usize + 4;
        for (qi, q) in active.iter().enumerate() {
            let qi = qi as u16;
            // e_{q,k} pulled to this chart is T^{-k} T' with T the local parameter at q.
            let big_t = q.point.local_parameter().compose(&here.chart())?;
            let alpha = big_t.inv()?;
            let beta = big_t.derivative();
            let (alpha_plain, beta_plain) = if qi == idx as u16 {
                (
                    LaurentSeries::monomial(Rational::one(), -1, EXACT),
                    LaurentSeries::one(EXACT),
                )
            } else {
                (
                    alpha.series_expand(&Rational::zero(), order),
                    beta.series_expand(&Rational::zero(), order),
                )
            };
            let alpha_pulled = alpha.eval_series(&s)?;
            let beta_pulled = beta.eval_series(&s)?.mul(&ds);
            let (mut a, mut b) = (beta_plain, beta_pulled);
            for k in 1..=kmax as u16 {
                a = a.mul(&alpha_plain);
                b = b.mul(&alpha_pulled);
                plain.insert(Slot::new(qi, k), a.clone());
                pulled.insert(Slot::new(qi, k), b.clone());
            }
        }

        let mut pulled_bergman = Vec::new();
        let mut pw = ds.clone();
        for a in 0..=kmax as i64 {
            pulled_bergman.push(pw.scale(&int(a + 1)));
            pw = pw.mul(&s);
        }

        let mut local = Local {
            idx: idx as u16,
            s,
            kernel_den_inv,
            kernel: Vec::new(),
            bergman_diagonal,
            pulled_bergman,
            plain,
            pulled,
        };
        for k in 1..=(2 * kmax as i64 + 4) {
            let c = local.kernel_coefficient(k)?;
            local.kernel.push(c);
        }
        Ok(local)
    }

    fn kernel_coefficient(&self, k: i64) -> Result<LaurentSeries> {
        let num = self
            .s
            .pow(k)?
            .sub(&LaurentSeries::monomial(Rational::one(), k, EXACT));
        Ok(num.mul(&self.kernel_den_inv))
    }

    fn pulled_bergman_at(&self, a: i64) -> Result<&LaurentSeries> {
        self.pulled_bergman
            .get(a as usize)
            .ok_or(Error::InsufficientOrder { tried: 0 })
    }

    fn plain(&self, s: Slot) -> &LaurentSeries {
        &self.plain[&s]
    }

    fn pulled(&self, s: Slot) -> &LaurentSeries {
        &self.pulled[&s]
    }
}

/// A correlator's first slot expanded at one point, summed per remaining key.
struct Grouped {
    plain: BTreeMap<Key, LaurentSeries>,
    pulled: BTreeMap<Key, LaurentSeries>,
}

impl Grouped {
    fn build(t: &Tensor, loc: &Local) -> Self {
        let mut plain: BTreeMap<Key, LaurentSeries> = BTreeMap::new();
        let mut pulled: BTreeMap<Key, LaurentSeries> = BTreeMap::new();
        for (key, c) in t.terms() {
            let rest = key[1..].to_vec();
            plain
                .entry(rest.clone())
                .or_insert_with(|| LaurentSeries::zero(EXACT))
                .add_scaled(c, loc.plain(key[0]));
            pulled
                .entry(rest)
                .or_insert_with(|| LaurentSeries::zero(EXACT))
                .add_scaled(c, loc.pulled(key[0]));
        }
        Grouped { plain, pulled }
    }
}

/// `W_{1,1}` from the closed form `B(z, sigma z) / (2 eta(z))` (EXACT mode), as the
/// coefficient of `dz`.
pub fn w11_closed_form(curve: &SpectralCurve) -> Result<RationalFunction> {
    let sigma = curve.require_exact()?;
    let diff = &RationalFunction::z() - sigma;
    let den = &(&diff * &diff) * &curve.h().scale(&int(2));
    sigma.derivative().div(&den)
}

/// `W_{1,1}` as the sum over active points of the principal part of
/// `B(z, s(z)) / (eta - s^* eta)`; works in either mode.
pub fn w11_local_principal_parts(curve: &SpectralCurve, order: usize) -> Result<Tensor> {
    let mut out = Tensor::new();
    for (i, r) in curve.active().iter().enumerate() {
        let s = curve.local_involution(i, order)?;
        let ds = s.derivative();
        let h = &r.eta_local;
        let den = h
            .series_expand(&Rational::zero(), order as i64)
            .sub(&h.eval_series(&s)?.mul(&ds));
        let f = ds
            .mul(&LaurentSeries::t(EXACT).sub(&s).pow(-2)?)
            .div(&den)?;
        f.coeff(-1)?;
        for (d, c) in f.principal_part() {
            out.add_term(vec![Slot::new(i as u16, (-d) as u16)], c);
        }
    }
    Ok(out)
}

/// Right side of the closed form for `W_{0,3}` with `z2, z3` fixed: a rational function
/// of `z1` (coefficient of `dz1 dz2 dz3`). EXACT mode.
pub fn w03_closed_form(
    curve: &SpectralCurve,
    z2: &Rational,
    z3: &Rational,
) -> Result<RationalFunction> {
    let sigma = curve.require_exact()?;
    let dsigma = sigma.derivative();
    let h = curve.h();
    let z = RationalFunction::z();
    let c = |q: Rational| RationalFunction::constant(q);
    let s2 = sigma.eval(z2)?;
    let s3 = sigma.eval(z3)?;
    let sd2 = dsigma.eval(z2)?;
    let sd3 = dsigma.eval(z3)?;
    let two_h = h.scale(&int(2));
    let sq = |f: &RationalFunction| f * f;

    // B(z1,z2) B(z1,s3) + B(z1,z3) B(z1,s2), over 2 eta(z1).
    let inv_sq = |a: &Rational| sq(&(&z - &c(a.clone()))).inv();
    let first =
        &(&inv_sq(z2)? * &inv_sq(&s3)?).scale(&sd3) + &(&inv_sq(z3)? * &inv_sq(&s2)?).scale(&sd2);
    let mut total = first.div(&two_h)?;

    // d_w [ omega^{sigma(w) - w}(z1) G(w) ] at w = wv.
    let mut derivative_term = |wv: &Rational, g: RationalFunction| -> Result<()> {
        let sw = sigma.eval(wv)?;
        let omega = &(&z - &c(sw.clone())).inv()? - &(&z - &c(wv.clone())).inv()?;
        let d_omega = &sq(&(&z - &c(sw))).inv()?.scale(&dsigma.eval(wv)?) - &inv_sq(wv)?;
        let gv = g.eval(wv)?;
        let dgv = g.derivative().eval(wv)?;
        total = &total + &(&d_omega.scale(&gv) + &omega.scale(&dgv));
        Ok(())
    };
    // G(w) = sigma'(z3) / (2 h(w) (w - s3)^2)
    let g2 = RationalFunction::constant(sd3).div(&(&two_h * &sq(&(&z - &c(s3)))))?;
    derivative_term(z2, g2)?;
    // G(w) = sigma'(w) / (2 h(w) (z2 - sigma(w))^2)
    let g3 = dsigma.div(&(&two_h * &sq(&(&c(z2.clone()) - sigma))))?;
    derivative_term(z3, g3)?;
    Ok(total)
}

/// Sample pairs for the `W_{0,3}` closed-form comparison.
fn w03_samples(curve: &SpectralCurve) -> Vec<(Rational, Rational)> {
    let cands = [
        (int(3), int(5)),
        (rat(-2, 3), rat(7, 2)),
        (rat(5, 2), int(-4)),
        (int(7), rat(11, 3)),
        (rat(13, 5), rat(-9, 7)),
    ];
    cands
        .into_iter()
        .filter(|(a, b)| sample_ok(curve, &[a.clone(), b.clone()]))
        .take(2)
        .collect()
}

/// A sample tuple avoids ramification points, poles, the zeros of `h`, and coincidences
/// `z_i = z_j`, `z_i = sigma(z_j)`.
pub fn sample_ok(curve: &SpectralCurve, zs: &[Rational]) -> bool {
    let Some(sigma) = curve.sigma.as_ref() else {
        return false;
    };
    let mut images = Vec::new();
    for z in zs {
        if curve
            .ram_points
            .iter()
            .any(|r| r.point == Point::Finite(z.clone()))
        {
            return false;
        }
        let ok = |f: &RationalFunction| f.eval(z).is_ok_and(|v| !v.is_zero());
        if !ok(curve.h()) || curve.x.eval(z).is_err() || curve.y.eval(z).is_err() {
            return false;
        }
        let Ok(sz) = sigma.eval(z) else { return false };
        if !ok(&sigma.derivative()) || curve.h().eval(&sz).is_err() || sz == *z {
            return false;
        }
        images.push(sz);
    }
    for i in 0..zs.len() {
        for j in 0..zs.len() {
            if i != j && (zs[i] == zs[j] || zs[i] == images[j]) {
                return false;
            }
        }
    }
    true
}

fn check_closed_form(curve: &SpectralCurve, w: &Correlator, order: usize) -> Result<()> {
    let points = curve.active_points();
    match (w.g, w.n, curve.mode) {
        (1, 1, Mode::Exact) => {
            let closed = w11_closed_form(curve)?;
            if w.univariate(&points, &[])? != closed {
                return Err(Error::InternalConsistency(
                    "W(1,1): residue computation disagrees with the closed form".into(),
                ));
            }
        }
        (1, 1, Mode::Series) => {
            if w11_local_principal_parts(curve, 2 * order)? != w.tensor {
                return Err(Error::InternalConsistency(
                    "W(1,1): residue computation disagrees with the local closed form".into(),
                ));
            }
        }
        (0, 3, Mode::Exact) => {
            let finite: Vec<Rational> = points.iter().filter_map(|p| p.finite().cloned()).collect();
            for (z2, z3) in w03_samples(curve) {
                let closed = w03_closed_form(curve, &z2, &z3)?;
                closed.partial_fractions(&finite).map_err(|_| {
                    Error::InternalConsistency("W(0,3): closed form keeps a diagonal pole".into())
                })?;
                if w.univariate(&points, &[z2.clone(), z3.clone()])? != closed {
                    return Err(Error::InternalConsistency(format!(
                        "W(0,3): residue computation disagrees with the closed form at z2={z2}, z3={z3}"
                    )));
                }
            }
        }
        _ => {}
    }
    Ok(())
}

/// Pointwise coefficient of a bidifferential.
pub type Bidifferential = fn(&Rational, &Rational) -> Result<Rational>;

/// `W_{0,1} = eta` and the coefficient of `W_{0,2}`; neither is stored in a table.
pub fn unstable_w(curve: &SpectralCurve) -> (OneForm, Bidifferential) {
    (curve.eta.clone(), bergman)
}

/// `W_{1,1}`, checked against its closed form.
pub fn compute_w11(curve: &SpectralCurve) -> Result<Correlator> {
    let t = CorrelatorTable::compute(curve, &[(1, 1)].into(), &RecursionOptions::for_curve(curve))?;
    Ok(t.require(1, 1)?.clone())
}

/// `W_{0,3}`, checked against its closed form (EXACT mode).
pub fn compute_w03(curve: &SpectralCurve) -> Result<Correlator> {
    let t = CorrelatorTable::compute(curve, &[(0, 3)].into(), &RecursionOptions::for_curve(curve))?;
    Ok(t.require(0, 3)?.clone())
}

#[derive(Clone, Debug, Default)]
pub struct VerificationReport {
    pub checked: Vec<(usize, usize)>,
    /// Largest relative fiber sum seen (SERIES mode).
    pub max_fiber_residual: Option<f64>,
}

/// Relative tolerance for numerically solved fiber sums.
pub const FIBER_TOLERANCE: f64 = 1e-8;

/// Symmetry, the per-slot pole bound, and the balanced average for every entry.
pub fn verify_correlators(
    curve: &SpectralCurve,
    table: &CorrelatorTable,
) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    for w in table.entries() {
        let fiber = verify_correlator(curve, w)?;
        if let Some(r) = fiber {
            let m = report.max_fiber_residual.get_or_insert(0.0);
            *m = m.max(r);
        }
        report.checked.push((w.g, w.n));
    }
    Ok(report)
}

/// Checks one correlator; returns the worst fiber residual in SERIES mode.
pub fn verify_correlator(curve: &SpectralCurve, w: &Correlator) -> Result<Option<f64>> {
    let violation = |slot: usize, what: &str| Error::InvariantViolation {
        g: w.g,
        n: w.n,
        slot,
        what: what.into(),
    };
    if let Some(slot) = w.tensor.symmetry_defect() {
        return Err(violation(
            slot,
            "not symmetric under exchange with the next slot",
        ));
    }
    let active = curve.active().len() as u16;
    let bound = pole_bound(w.g, w.n);
    for key in w.tensor.terms().keys() {
        if key.len() != w.n {
            return Err(violation(0, "wrong arity"));
        }
        for (i, s) in key.iter().enumerate() {
            if s.point >= active || s.order == 0 {
                return Err(violation(i, "pole outside the active ramification points"));
            }
            if s.order > bound {
                return Err(violation(
                    i,
                    &format!("pole order {} exceeds {bound}", s.order),
                ));
            }
        }
    }
    match curve.mode {
        Mode::Exact => {
            for i in 0..w.n {
                let pulled = w
                    .tensor
                    .pullback_slot(i, |p, k| curve.form_pullback(p as usize, k))?;
                if !pulled.add(&w.tensor).is_empty() {
                    return Err(violation(i, "balanced average fails: W + sigma^* W != 0"));
                }
            }
            Ok(None)
        }
        Mode::Series => fiber::worst_residual(curve, w)
            .map(Some)
            .and_then(|r| match r {
                Some(r) if r > FIBER_TOLERANCE => {
                    Err(violation(0, &format!("fiber sum {r:e} exceeds tolerance")))
                }
                r => Ok(r),
            }),
    }
}

/// Floating-point fiber sums for curves without a global involution.
mod fiber {
    use num_complex::Complex64;

    use super::*;
    use crate::algebra::rational::to_f64;
    use crate::algebra::Polynomial;

    fn poly_c(p: &Polynomial, z: Complex64) -> Complex64 {
        p.coeffs()
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + to_f64(c))
    }

    fn ratfun_c(f: &RationalFunction, z: Complex64) -> Complex64 {
        poly_c(f.num(), z) / poly_c(f.den(), z)
    }

    fn form_c(p: &Point, k: u16, z: Complex64) -> Complex64 {
        match p {
            Point::Finite(q) => (z - to_f64(q)).powi(-(k as i32)),
            Point::Infinity => -z.powi(k as i32 - 2),
        }
    }

    /// All complex roots of `p` by Durand-Kerner.
    pub(super) fn roots(p: &Polynomial) -> Vec<Complex64> {
        let d = p.deg0();
        let Some(lead) = p.leading().map(to_f64) else {
            return Vec::new();
        };
        let monic: Vec<f64> = p.coeffs().iter().map(|c| to_f64(c) / lead).collect();
        let eval = |z: Complex64| {
            monic
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |a, c| a * z + c)
        };
        let seed = Complex64::new(0.4, 0.9);
        let mut r: Vec<Complex64> = (0..d).map(|k| seed.powi(k as i32)).collect();
        for _ in 0..2000 {
            let mut delta = 0.0f64;
            for i in 0..d {
                let mut den = Complex64::new(1.0, 0.0);
                for j in 0..d {
                    if i != j {
                        den *= r[i] - r[j];
                    }
                }
                let step = eval(r[i]) / den;
                r[i] -= step;
                delta = delta.max(step.norm());
            }
            if delta < 1e-15 {
                break;
            }
        }
        r
    }

    /// `sum over z' in x^{-1}(x(z0)) of W(z', rest) / x'(z')`, relative to the sum of
    /// absolute values, at a few fixed base points.
    pub(super) fn worst_residual(curve: &SpectralCurve, w: &Correlator) -> Result<f64> {
        let points = curve.active_points();
        let dx = curve.x.derivative();
        let bases = [rat(7, 3), rat(-5, 2), rat(11, 4)];
        let tails = [
            rat(13, 7),
            rat(-17, 5),
            rat(19, 6),
            rat(-23, 9),
            rat(29, 8),
            rat(-31, 10),
        ];
        let mut worst = 0.0f64;
        for (b, z0) in bases.iter().enumerate() {
            let x0 = curve.x.eval(z0)?;
            let fiber = &curve.x.num().clone() - &curve.x.den().scale(&x0);
            let tail: Vec<Rational> = (0..w.n.saturating_sub(1))
                .map(|i| tails[(i + b) % tails.len()].clone())
                .collect();
            let coeffs = w.tensor.contract_tail(|i, s| {
                form_value(&points[s.point as usize], s.order, &tail[i - 1])
                    .ok_or_else(|| Error::BadSample("tail sample is a pole".into()))
            })?;
            let (mut sum, mut scale) = (Complex64::new(0.0, 0.0), 0.0f64);
            for r in roots(&fiber) {
                let v: Complex64 = coeffs
                    .iter()
                    .map(|(s, c)| form_c(&points[s.point as usize], s.order, r) * to_f64(c))
                    .sum::<Complex64>()
                    / ratfun_c(&dx, r);
                sum += v;
                scale += v.norm();
            }
            if scale > 0.0 {
                worst = worst.max(sum.norm() / scale);
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules_are_closed() {
        let s = schedule(2, 3);
        assert!(s.contains(&(0, 7)));
        assert!(s.contains(&(2, 3)));
        assert!(!s.contains(&(3, 1)));
        for &(g, n) in &s {
            for d in dependencies(g, n) {
                assert!(s.contains(&d), "({g},{n}) needs {d:?}");
            }
        }
        let f = full_levels(3);
        assert_eq!(
            f.into_iter().collect::<Vec<_>>(),
            vec![(0, 3), (0, 4), (0, 5), (1, 1), (1, 2), (1, 3), (2, 1)]
        );
    }

    #[test]
    fn merge_places_slots_by_mask() {
        let a = [Slot::new(0, 2)];
        let b = [Slot::new(0, 4), Slot::new(0, 6)];
        let k = merge(0b010, 3, &a, &b);
        assert_eq!(k, vec![Slot::new(0, 4), Slot::new(0, 2), Slot::new(0, 6)]);
    }
}
