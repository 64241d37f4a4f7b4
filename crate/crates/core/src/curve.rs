//! Rational spectral curves: ramification data, deck involutions and the kernels built
//! from them.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::algebra::{
    newton_local_inverse, LaurentSeries, Point, Polynomial, Rational, RationalFunction,
};
use crate::error::{Error, Result};

/// How the deck involution is represented.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Mode {
    /// Degree-2 curves with a global Möbius involution; every identity is checked exactly.
    Exact,
    /// Local involutions as truncated series from Newton iteration.
    Series,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Series => "series",
        })
    }
}

/// A meromorphic 1-form `coeff(z) dz`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct OneForm {
    pub coeff: RationalFunction,
}

impl OneForm {
    pub fn new(coeff: RationalFunction) -> Self {
        OneForm { coeff }
    }

    pub fn zero() -> Self {
        OneForm::new(RationalFunction::zero())
    }

    pub fn eval(&self, z: &Rational) -> Result<Rational> {
        self.coeff.eval(z)
    }

    /// Pullback along a map `z -> f(z)`.
    pub fn pullback(&self, f: &RationalFunction) -> Result<OneForm> {
        Ok(OneForm::new(&self.coeff.compose(f)? * &f.derivative()))
    }

    /// Residue at a point of the projective line.
    pub fn residue(&self, p: &Point) -> Rational {
        let local = p.pull_form(&self.coeff);
        local.series_expand(&Rational::zero(), 0).coeff(-1).unwrap()
    }
}

/// Deck involution near a ramification point, written in the local parameter there.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Involution {
    /// Restriction of the global Möbius involution: a rational function of `t`.
    Global(RationalFunction),
    /// Newton-iterated series `-t + O(t^2)`.
    Local(LaurentSeries),
}

#[derive(Clone, Debug)]
pub struct RamPoint {
    pub point: Point,
    /// Order of vanishing of `eta` in the local parameter.
    pub eta_order: i64,
    pub active: bool,
    /// Present for active points.
    pub involution: Option<Involution>,
    /// `eta = h_local(t) dt` in the local parameter.
    pub eta_local: RationalFunction,
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub x: RationalFunction,
    pub y: RationalFunction,
    pub eta: OneForm,
    pub mode: Mode,
    pub ram_points: Vec<RamPoint>,
    /// The global involution (EXACT mode only).
    pub sigma: Option<RationalFunction>,
    pub series_order: usize,
}

/// `sum_j c_j e_{k_j}` or `sum_j c_j f_{k_j}` in one point's basis.
pub type Pullback = Vec<(u16, Rational)>;

impl SpectralCurve {
    pub fn build(
        x: RationalFunction,
        y: RationalFunction,
        mode: Mode,
        series_order: usize,
    ) -> Result<Self> {
        if x.as_constant().is_some() {
            return Err(Error::MalformedInput("x is constant".into()));
        }
        if y.is_zero() {
            return Err(Error::MalformedInput("y is zero".into()));
        }
        let dx = x.derivative();
        let h = &y * &dx;
        let sigma = match mode {
            Mode::Exact => Some(global_involution(&x, &y)?),
            Mode::Series => None,
        };
        let mut ram_points = Vec::new();
        for point in critical_points(&x)? {
            let eta_local = point.pull_form(&h);
            let eta_order = eta_local.valuation_at(&Point::Finite(Rational::zero()));
            let active = eta_order == 2;
            let involution = if !active {
                None
            } else if let Some(sigma) = &sigma {
                let local = point
                    .local_parameter()
                    .compose(&sigma.compose(&point.chart())?)?;
                Some(Involution::Global(local))
            } else {
                Some(Involution::Local(newton_local_inverse(
                    &x,
                    &point,
                    series_order,
                )?))
            };
            ram_points.push(RamPoint {
                point,
                eta_order,
                active,
                involution,
                eta_local,
            });
        }
        Ok(SpectralCurve {
            x,
            y,
            eta: OneForm::new(h),
            mode,
            ram_points,
            sigma,
            series_order,
        })
    }

    /// Active ramification points in canonical order. Basis indices refer to this list.
    pub fn active(&self) -> Vec<&RamPoint> {
        self.ram_points.iter().filter(|r| r.active).collect()
    }

    pub fn active_points(&self) -> Vec<Point> {
        self.active().into_iter().map(|r| r.point.clone()).collect()
    }

    pub fn h(&self) -> &RationalFunction {
        &self.eta.coeff
    }

    pub fn require_exact(&self) -> Result<&RationalFunction> {
        self.sigma
            .as_ref()
            .ok_or_else(|| Error::Mode("operation needs the global involution (exact mode)".into()))
    }

    /// Local involution at active point `idx`, as a series known modulo `t^order`.
    pub fn local_involution(&self, idx: usize, order: usize) -> Result<LaurentSeries> {
        let r = self.active()[idx];
        match r
            .involution
            .as_ref()
            .expect("active point has an involution")
        {
            Involution::Global(m) => Ok(m.series_expand(&Rational::zero(), order as i64)),
            Involution::Local(s) if s.order() >= order as i64 => Ok(s.truncate(order as i64)),
            Involution::Local(_) => newton_local_inverse(&self.x, &r.point, order),
        }
    }

    /// `sigma^* e_{p,k}` for active point `idx`, in the same point's form basis (EXACT mode).
    pub fn form_pullback(&self, idx: usize, k: u16) -> Result<Pullback> {
        let m = self.local_mobius(idx)?;
        if k < 2 {
            return Err(Error::Unsupported(
                "pullback of a form with a simple pole".into(),
            ));
        }
        let f = &m.pow(-(k as i32))? * &m.derivative();
        let pf = f.partial_fractions(&[Rational::zero()])?;
        if !pf.polynomial.is_zero() {
            return Err(Error::InternalConsistency(
                "form pullback leaves the pole basis".into(),
            ));
        }
        Ok(pf
            .terms
            .iter()
            .map(|((_, j), c)| (*j as u16, c.clone()))
            .collect())
    }

    /// `sigma^* f_{p,k}` for active point `idx`; order 0 is the constant function.
    pub fn function_pullback(&self, idx: usize, k: u16) -> Result<Pullback> {
        if k == 0 {
            return Ok(vec![(0, Rational::one())]);
        }
        let m = self.local_mobius(idx)?;
        let f = m.pow(-(k as i32))?;
        let pf = f.partial_fractions(&[Rational::zero()])?;
        if pf.polynomial.deg0() > 0 {
            return Err(Error::InternalConsistency(
                "function pullback leaves the pole basis".into(),
            ));
        }
        let mut out: Pullback = Vec::new();
        let c0 = pf.polynomial.coeff(0);
        if !c0.is_zero() {
            out.push((0, c0));
        }
        out.extend(pf.terms.iter().map(|((_, j), c)| (*j as u16, c.clone())));
        Ok(out)
    }

    fn local_mobius(&self, idx: usize) -> Result<&RationalFunction> {
        self.require_exact()?;
        match self.active()[idx].involution.as_ref() {
            Some(Involution::Global(m)) => Ok(m),
            _ => Err(Error::Mode("no global involution".into())),
        }
    }

    /// Checks `sigma^* eta = -eta` and `sigma o sigma = id` (EXACT mode).
    pub fn check_involution(&self) -> Result<()> {
        let sigma = self.require_exact()?;
        if sigma.compose(sigma)? != RationalFunction::z() {
            return Err(Error::InternalConsistency(
                "sigma is not an involution".into(),
            ));
        }
        let pulled = self.eta.pullback(sigma)?;
        if pulled.coeff != -&self.eta.coeff {
            return Err(Error::InternalConsistency("sigma^* eta != -eta".into()));
        }
        Ok(())
    }
}

/// Finite and infinite simple zeros of `dx`. Irrational or degenerate ones are rejected.
fn critical_points(x: &RationalFunction) -> Result<Vec<Point>> {
    let dx = x.derivative();
    let num = dx.num();
    let rest = num.irrational_part()?;
    if rest.deg0() > 0 {
        return Err(Error::UnsupportedCurve(format!(
            "irrational ramification point (root of {rest})"
        )));
    }
    let mut points = Vec::new();
    for r in num.rational_roots()? {
        if num.root_multiplicity(&r) > 1 {
            return Err(Error::UnsupportedRamification(r.to_string()));
        }
        points.push(Point::Finite(r));
    }
    let at_inf = Point::Infinity
        .pull_function(x)
        .series_expand(&Rational::zero(), 3);
    if at_inf.val() >= 0 && at_inf.coeff(1)?.is_zero() {
        if at_inf.coeff(2)?.is_zero() {
            return Err(Error::UnsupportedRamification("inf".into()));
        }
        points.push(Point::Infinity);
    }
    Ok(points)
}

/// The nontrivial solution of `x(sigma(z)) = x(z)` for a degree-2 map.
fn global_involution(x: &RationalFunction, y: &RationalFunction) -> Result<RationalFunction> {
    if x.map_degree() != 2 {
        return Err(Error::Mode(format!(
            "exact mode needs x of degree 2, got degree {}",
            x.map_degree()
        )));
    }
    let (n, d) = (x.num(), x.den());
    let lin = |i: usize| -> Polynomial { &d.scale(&n.coeff(i)) - &n.scale(&d.coeff(i)) };
    let a2 = lin(2);
    let a1 = lin(1);
    let sum_of_roots = RationalFunction::new(-&a1, a2)?;
    let sigma = &sum_of_roots - &RationalFunction::z();
    if sigma == RationalFunction::z() || x.compose(&sigma)? != *x {
        return Err(Error::Mode("no global involution".into()));
    }
    if y.compose(&sigma)? != -y {
        return Err(Error::UnsupportedCurve(
            "y is not odd under the deck involution".into(),
        ));
    }
    Ok(sigma)
}

/// `omega^{a-b}`: simple poles with residue `+1` at `a` and `-1` at `b`.
pub fn cauchy_kernel(a: &Point, b: &Point) -> OneForm {
    if a == b {
        return OneForm::zero();
    }
    // At infinity the term drops out: `-dz/(z - b)` already has residue +1 there.
    let part = |p: &Point| match p {
        Point::Finite(_) => RationalFunction::pole_monomial(Rational::one(), p, 1),
        Point::Infinity => RationalFunction::zero(),
    };
    OneForm::new(&part(a) - &part(b))
}

/// Coefficient of `dz1 dz2` in the Bergman kernel `dz1 dz2 / (z1 - z2)^2`.
pub fn bergman(z1: &Rational, z2: &Rational) -> Result<Rational> {
    let d = z1 - z2;
    if d.is_zero() {
        return Err(Error::PoleEvaluation(
            "Bergman kernel on the diagonal".into(),
        ));
    }
    Ok((&d * &d).recip())
}

/// Coefficient of `dz1/dz` in the recursion kernel at `(z, z1)` (EXACT mode).
pub fn recursion_kernel(curve: &SpectralCurve, z: &Rational, z1: &Rational) -> Result<Rational> {
    let sigma = curve.require_exact()?;
    let sz = sigma.eval(z)?;
    let omega = cauchy_kernel(&Point::Finite(sz.clone()), &Point::Finite(z.clone())).eval(z1)?;
    let pulled = curve.h().eval(&sz)? * sigma.derivative().eval(z)?;
    let den = pulled - curve.h().eval(z)?;
    if den.is_zero() {
        return Err(Error::DegenerateCurve(format!(
            "sigma^* eta - eta vanishes at {z}"
        )));
    }
    Ok(omega / den)
}

/// Active-point index lookup by location.
pub fn index_of(curve: &SpectralCurve) -> BTreeMap<Point, u16> {
    curve
        .active_points()
        .into_iter()
        .enumerate()
        .map(|(i, p)| (p, i as u16))
        .collect()
}
