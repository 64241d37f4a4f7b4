//! WKB terms from principal specialization, their recursion, and order-by-order checks of
//! the Schrödinger equation `(hbar^2 d^2/dx^2 + s2(x)) Psi = 0` with
//! `Psi = exp(sum_m hbar^(m-1) S_m)`.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::algebra::rational::{factorial, int, rat};
use crate::algebra::{
    reversion, sqrt_series, LaurentSeries, Point, Polynomial, Rational, RationalFunction,
};
use crate::curve::{OneForm, SpectralCurve};
use crate::error::{Error, Result};
use crate::free_energy::{diagonal_specialize, FreeEnergyTable};
use crate::recursion::{full_levels, level};

/// Where an `S_m` came from.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Source {
    /// Diagonal sum of free energies at level `m - 1`.
    FreeEnergy,
    /// The recursion step from lower `S`.
    Recursion,
}

#[derive(Clone, Debug)]
pub struct WkbExpansion {
    /// `dS0 = eta`
    pub ds0: OneForm,
    /// `dS1 = -dy / (2y)`
    pub ds1: OneForm,
    /// `S_m` for `m = 2..=order`, as functions of `z`.
    pub s: BTreeMap<usize, RationalFunction>,
    pub sources: BTreeMap<usize, Source>,
    pub order: usize,
}

#[derive(Clone, Debug)]
pub struct QuantumCurveReport {
    /// `s2(x)` with `y^2 + s2(x) = 0`.
    pub s2: RationalFunction,
    /// Coefficient of `hbar^k` in `Psi^{-1} (hbar^2 d^2/dx^2 + s2) Psi`, as a function of `z`.
    pub residuals: BTreeMap<usize, RationalFunction>,
    pub verified_through: usize,
}

/// `s2` as a rational function of `x`, from the smallest relation `P(x) + y^2 Q(x) = 0`.
pub fn s2_of_curve(curve: &SpectralCurve) -> Result<RationalFunction> {
    let y2 = &curve.y * &curve.y;
    let (xn, xd) = (curve.x.num(), curve.x.den());
    let (a, b) = (y2.num(), y2.den());
    for d in 0..=12usize {
        // Columns: p_0..p_d then q_0..q_d; each column is a polynomial in z.
        let mut columns: Vec<Polynomial> = Vec::with_capacity(2 * d + 2);
        for i in 0..=d {
            let basis = &xn.pow(i as u32) * &xd.pow((d - i) as u32);
            columns.push(&basis * b);
        }
        for i in 0..=d {
            let basis = &xn.pow(i as u32) * &xd.pow((d - i) as u32);
            columns.push(&basis * a);
        }
        let Some(v) = nullspace_vector(&columns, d + 1) else {
            continue;
        };
        let p = Polynomial::new(v[..=d].to_vec());
        let q = Polynomial::new(v[d + 1..].to_vec());
        let s2 = RationalFunction::new(p, q)?;
        if &s2.compose(&curve.x)? + &y2 == RationalFunction::zero() {
            return Ok(s2);
        }
    }
    Err(Error::NotASpectralCurve(
        "y^2 is not a rational function of x".into(),
    ))
}

/// A nonzero rational vector `v` with `sum v_j columns_j = 0` whose entries from
/// `q_start` on are not all zero.
fn nullspace_vector(columns: &[Polynomial], q_start: usize) -> Option<Vec<Rational>> {
    let rows = columns.iter().map(|c| c.coeffs().len()).max().unwrap_or(0);
    let ncols = columns.len();
    let mut m: Vec<Vec<Rational>> = (0..rows)
        .map(|r| columns.iter().map(|c| c.coeff(r)).collect())
        .collect();
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        let Some(pr) = (row..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, pr);
        let inv = m[row][col].recip();
        for v in &mut m[row][col..] {
            *v *= &inv;
        }
        for r in 0..rows {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[row][col..].to_vec();
                for (v, p) in m[r][col..].iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    // Try free columns, preferring ones that give a nonzero Q part.
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Rational::zero(); ncols];
        v[free] = Rational::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -m[r][free].clone();
        }
        if v[q_start..].iter().any(|c| !c.is_zero()) {
            return Some(v);
        }
    }
    None
}

/// `dS0 = eta` and `dS1 = -dy/(2y)`, after checking `S0'' + 2 S0' S1' = 0` in the x-chart.
pub fn build_s0_s1(curve: &SpectralCurve) -> Result<(OneForm, OneForm)> {
    let ds0 = curve.eta.clone();
    let ds1 = OneForm::new(curve.y.derivative().div(&curve.y)?.scale(&rat(-1, 2)));
    let xz = curve.x.derivative();
    let s0p = curve.y.clone();
    let s1p = ds1.coeff.div(&xz)?;
    let combo = &s0p.derivative().div(&xz)? + &(&s0p * &s1p).scale(&int(2));
    if !combo.is_zero() {
        return Err(Error::Consistency(format!("S0'' + 2 S0' S1' = {combo}")));
    }
    Ok((ds0, ds1))
}

/// `S_m = sum over 2g-2+n = m-1 of F_{g,n}(z, ..., z) / n!`.
pub fn sm_from_free_energies(
    curve: &SpectralCurve,
    table: &FreeEnergyTable,
    m: usize,
) -> Result<RationalFunction> {
    if m < 2 {
        return Err(Error::Unsupported(format!(
            "S_{m} is not a free-energy sum"
        )));
    }
    let l = m as i64 - 1;
    let mut acc = RationalFunction::zero();
    for (g, n) in full_levels(l)
        .into_iter()
        .filter(|&(g, n)| level(g, n) == l)
    {
        let f = table.require(g, n)?;
        let diag = diagonal_specialize(curve, f, 0)?;
        acc = &acc + &diag.scale(&factorial(n).recip());
    }
    Ok(acc)
}

/// `S_{m+1}` from `S_2..S_m` by
/// `S_{m+1}' = -(S_m'' + sum_{a+b=m+1, a,b>=2} S_a' S_b') / (2h) - (1/(2h))' S_m'`,
/// integrated with zero constant.
pub fn sm_recursion_step(
    curve: &SpectralCurve,
    s: &BTreeMap<usize, RationalFunction>,
    m: usize,
) -> Result<RationalFunction> {
    if m < 2 {
        return Err(Error::Unsupported(
            "the recursion step starts at m = 2".into(),
        ));
    }
    let get = |k: usize| {
        s.get(&k)
            .ok_or_else(|| Error::Unsupported(format!("S_{k} missing")))
    };
    let inv_2h = curve.h().scale(&int(2)).inv()?;
    let sm_p = get(m)?.derivative();
    let mut inner = sm_p.derivative();
    for a in 2..=(m - 1) {
        let b = m + 1 - a;
        if b < 2 {
            continue;
        }
        inner = &inner + &(&get(a)?.derivative() * &get(b)?.derivative());
    }
    let derivative = &(&inner * &inv_2h) + &(&inv_2h.derivative() * &sm_p);
    derivative.scale(&int(-1)).antiderivative()
}

/// Whether every stable `(g, n)` at this level is in the table.
fn has_level(table: &FreeEnergyTable, l: i64) -> bool {
    full_levels(l)
        .into_iter()
        .filter(|&(g, n)| level(g, n) == l)
        .all(|(g, n)| table.get(g, n).is_some())
}

/// Builds `S_2..S_order`, taking free-energy sums where the table has the level and the
/// recursion step beyond. Where both are available for `m >= 3`, their derivatives must
/// agree.
pub fn build_expansion(
    curve: &SpectralCurve,
    table: &FreeEnergyTable,
    order: usize,
) -> Result<WkbExpansion> {
    if order < 2 {
        return Err(Error::MalformedInput("WKB order must be at least 2".into()));
    }
    let (ds0, ds1) = build_s0_s1(curve)?;
    let mut s = BTreeMap::new();
    let mut sources = BTreeMap::new();
    for m in 2..=order {
        let from_table = has_level(table, m as i64 - 1);
        if m == 2 && !from_table {
            return Err(Error::IncompleteTable { g: 1, n: 1 });
        }
        let stepped = if m >= 3 {
            Some(sm_recursion_step(curve, &s, m - 1)?)
        } else {
            None
        };
        let value = if from_table {
            let fe = sm_from_free_energies(curve, table, m)?;
            if let Some(st) = &stepped {
                if st.derivative() != fe.derivative() {
                    return Err(Error::InternalConsistency(format!(
                        "S_{m}: recursion step and free-energy sum disagree"
                    )));
                }
            }
            sources.insert(m, Source::FreeEnergy);
            fe
        } else {
            sources.insert(m, Source::Recursion);
            stepped.expect("m >= 3 here")
        };
        s.insert(m, value);
    }
    Ok(WkbExpansion {
        ds0,
        ds1,
        s,
        sources,
        order,
    })
}

impl WkbExpansion {
    /// `dS_m/dx` as a function of `z`.
    pub fn x_derivative(&self, curve: &SpectralCurve, m: usize) -> Result<RationalFunction> {
        let xz = curve.x.derivative();
        match m {
            0 => self.ds0.coeff.div(&xz),
            1 => self.ds1.coeff.div(&xz),
            _ => self
                .s
                .get(&m)
                .ok_or_else(|| Error::Unsupported(format!("S_{m} missing")))?
                .derivative()
                .div(&xz),
        }
    }

    /// Pole order of `S_m` at every active point; expected `3m - 3`.
    pub fn check_pole_orders(&self, curve: &SpectralCurve) -> Result<()> {
        for (m, sm) in &self.s {
            for p in curve.active_points() {
                let got = sm.pole_order_at(&p);
                if got != 3 * m - 3 {
                    return Err(Error::InternalConsistency(format!(
                        "S_{m} has a pole of order {got} at {p}, expected {}",
                        3 * m - 3
                    )));
                }
            }
            let finite: Vec<Rational> = curve
                .active_points()
                .iter()
                .filter_map(|p| p.finite().cloned())
                .collect();
            let pf = sm.partial_fractions(&finite).map_err(|_| {
                Error::InternalConsistency(format!(
                    "S_{m} has a pole away from the ramification points"
                ))
            })?;
            if !curve.active_points().contains(&Point::Infinity) && pf.polynomial.deg0() > 0 {
                return Err(Error::InternalConsistency(format!(
                    "S_{m} has a pole at infinity"
                )));
            }
        }
        Ok(())
    }

    /// `S_m(sigma(z)) = (-1)^(m-1) S_m(z)` (EXACT mode), up to the constant term.
    pub fn check_parity(&self, curve: &SpectralCurve) -> Result<()> {
        let sigma = curve.require_exact()?;
        for (m, sm) in &self.s {
            let sign = if (m - 1) % 2 == 0 { int(1) } else { int(-1) };
            let pulled = sm.compose(sigma)?;
            if pulled.derivative() != sm.scale(&sign).derivative() {
                return Err(Error::InternalConsistency(format!(
                    "S_{m} has the wrong parity"
                )));
            }
        }
        Ok(())
    }
}

/// Checks every hbar-coefficient of the conjugated Schrödinger equation through `hbar^M`,
/// where `M` is the expansion order.
pub fn verify_schrodinger(curve: &SpectralCurve, wkb: &WkbExpansion) -> Result<QuantumCurveReport> {
    let s2 = s2_of_curve(curve)?;
    let xz = curve.x.derivative();
    let top = wkb.order;
    let d1: Vec<RationalFunction> = (0..=top)
        .map(|m| wkb.x_derivative(curve, m))
        .collect::<Result<_>>()?;
    let mut residuals = BTreeMap::new();
    for k in 0..=top {
        let mut r = if k == 0 {
            s2.compose(&curve.x)?
        } else {
            d1[k - 1].derivative().div(&xz)?
        };
        for a in 0..=k {
            r = &r + &(&d1[a] * &d1[k - a]);
        }
        if !r.is_zero() {
            return Err(Error::QuantizationFailure {
                order: k,
                residual: r.to_string(),
            });
        }
        residuals.insert(k, r);
    }
    Ok(QuantumCurveReport {
        s2,
        residuals,
        verified_through: top,
    })
}

/// Brute-force WKB in the x-chart: `S_m'(x0 + xi)` for `m = 0..=max_m` as power series
/// known modulo `xi^depth`, on the sheet through `y0`.
pub fn ode_series_oracle(
    s2: &RationalFunction,
    x0: &Rational,
    y0: &Rational,
    depth: usize,
    max_m: usize,
) -> Result<BTreeMap<usize, LaurentSeries>> {
    let work = (depth + max_m + 2) as i64;
    let shifted = s2.compose(&Point::Finite(x0.clone()).chart())?;
    let u = shifted.series_expand(&Rational::zero(), work).neg();
    let s0 = sqrt_series(&u, y0)?;
    let two_s0_inv = s0.scale(&int(2)).inv()?;
    let mut out: BTreeMap<usize, LaurentSeries> = BTreeMap::new();
    out.insert(0, s0.clone());
    out.insert(1, s0.derivative().mul(&two_s0_inv).neg());
    for m in 1..max_m {
        let mut acc = out[&m].derivative();
        for a in 1..=m {
            let b = m + 1 - a;
            if b >= 1 && b <= m {
                acc = acc.add(&out[&a].mul(&out[&b]));
            }
        }
        out.insert(m + 1, acc.mul(&two_s0_inv).neg());
    }
    Ok(out
        .into_iter()
        .map(|(m, s)| (m, s.truncate(depth as i64)))
        .collect())
}

/// The parameter value `z0` with `x(z0) = x0` and `y(z0) = y0`.
pub fn sheet_point(curve: &SpectralCurve, x0: &Rational, y0: &Rational) -> Result<Rational> {
    let fiber = curve.x.num() - &curve.x.den().scale(x0);
    for z in fiber.rational_roots()? {
        if curve.y.eval(&z).ok().as_ref() == Some(y0) && curve.x.eval(&z).ok().as_ref() == Some(x0)
        {
            return Ok(z);
        }
    }
    Err(Error::BadSheet)
}

/// Compares the oracle with the engine's `S_m'` for `m = 2..=max_m`, expanded in the
/// x-chart at `x0` through `xi^depth`. Returns the number of coefficients compared.
pub fn compare_with_oracle(
    curve: &SpectralCurve,
    wkb: &WkbExpansion,
    x0: &Rational,
    y0: &Rational,
    depth: usize,
    max_m: usize,
) -> Result<usize> {
    let s2 = s2_of_curve(curve)?;
    let z0 = sheet_point(curve, x0, y0)?;
    let order = depth + 1;
    let oracle = ode_series_oracle(&s2, x0, y0, order, max_m)?;
    let t = reversion(&curve.x, &z0, order)?;
    let chart = Point::Finite(z0).chart();
    let mut compared = 0;
    for m in 2..=max_m {
        let engine = wkb
            .x_derivative(curve, m)?
            .compose(&chart)?
            .eval_series(&t)?;
        for d in 0..order as i64 {
            let a = engine.coeff(d)?;
            let b = oracle[&m].coeff(d)?;
            if a != b {
                return Err(Error::InternalConsistency(format!(
                    "S_{m}': coefficient of xi^{d} is {a} from the engine, {b} from the oracle"
                )));
            }
            compared += 1;
        }
    }
    Ok(compared)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_finds_relation() {
        let cols = vec![
            Polynomial::from_ints(&[0, 1]),
            Polynomial::from_ints(&[0, -2]),
        ];
        let v = nullspace_vector(&cols, 1).unwrap();
        assert_eq!(v, vec![int(2), int(1)]);
        assert!(
            nullspace_vector(&[Polynomial::one(), Polynomial::from_ints(&[0, 1])], 1).is_none()
        );
    }
}
