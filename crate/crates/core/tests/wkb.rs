mod common;

use std::collections::BTreeMap;

use common::*;
use spectral_core::algebra::rational::{int, rat};
use spectral_core::algebra::RationalFunction;
use spectral_core::curve::{Mode, SpectralCurve};
use spectral_core::free_energy::FreeEnergyTable;
use spectral_core::recursion::{full_levels, CorrelatorTable, RecursionOptions};
use spectral_core::wkb::*;
use spectral_core::Error;

fn free_energies(c: &SpectralCurve, max_level: i64) -> FreeEnergyTable {
    let w = CorrelatorTable::compute(c, &full_levels(max_level), &RecursionOptions::for_curve(c))
        .unwrap();
    FreeEnergyTable::from_correlators(c, &w).unwrap()
}

#[test]
fn s2_examples() {
    assert_eq!(s2_of_curve(&airy(Mode::Exact)).unwrap(), rf(&[0, -1], &[1]));
    assert_eq!(
        s2_of_curve(&curve_b(Mode::Exact)).unwrap(),
        rf(&[0, 1, -1], &[1])
    );
    let cubic = SpectralCurve::build(
        rf(&[0, 0, 1], &[1]),
        rf(&[0, 0, 0, 1], &[1]),
        Mode::Exact,
        8,
    )
    .unwrap();
    assert_eq!(s2_of_curve(&cubic).unwrap(), rf(&[0, 0, 0, -1], &[1]));
}

#[test]
fn s0_s1_consistency() {
    let (ds0, ds1) = build_s0_s1(&airy(Mode::Exact)).unwrap();
    assert_eq!(ds0.coeff, rf(&[0, 0, 2], &[1]));
    assert_eq!(ds1.coeff, rf(&[-1], &[0, 2]));
    build_s0_s1(&curve_b(Mode::Exact)).unwrap();
}

#[test]
fn airy_wkb_values_two_ways() {
    let c = airy(Mode::Exact);
    let f = free_energies(&c, 4);
    let s2 = sm_from_free_energies(&c, &f, 2).unwrap();
    assert_eq!(s2, rf(&[5], &[0, 0, 0, 48]));
    let s3 = sm_from_free_energies(&c, &f, 3).unwrap();
    assert_eq!(s3, rf(&[5], &[0, 0, 0, 0, 0, 0, 64]));
    let lower: BTreeMap<usize, RationalFunction> = [(2, s2)].into();
    let stepped = sm_recursion_step(&c, &lower, 2).unwrap();
    assert_eq!(stepped, s3);
    assert_eq!(stepped.derivative(), rf(&[-15], &[0, 0, 0, 0, 0, 0, 0, 32]));

    let wkb = build_expansion(&c, &f, 5).unwrap();
    assert!(wkb.sources.values().all(|s| *s == Source::FreeEnergy));
    wkb.check_pole_orders(&c).unwrap();
    wkb.check_parity(&c).unwrap();
    let wkb6 = build_expansion(&c, &f, 6).unwrap();
    assert_eq!(wkb6.sources[&6], Source::Recursion);
    assert_eq!(wkb6.s[&6].pole_order_at(&c.active_points()[0]), 15);
}

#[test]
fn zero_input_stays_zero() {
    let c = airy(Mode::Exact);
    let mut s: BTreeMap<usize, RationalFunction> = [(2, RationalFunction::zero())].into();
    for m in 2..5 {
        let next = sm_recursion_step(&c, &s, m).unwrap();
        assert!(next.is_zero());
        s.insert(m + 1, next);
    }
}

#[test]
fn schrodinger_residuals_vanish() {
    for c in [airy(Mode::Exact), curve_b(Mode::Exact)] {
        let f = free_energies(&c, 5);
        let wkb = build_expansion(&c, &f, 6).unwrap();
        wkb.check_pole_orders(&c).unwrap();
        wkb.check_parity(&c).unwrap();
        let report = verify_schrodinger(&c, &wkb).unwrap();
        assert_eq!(report.verified_through, 6);
        assert!(report.residuals.values().all(|r| r.is_zero()));
    }
}

#[test]
fn perturbed_s2_is_caught() {
    let c = airy(Mode::Exact);
    let f = free_energies(&c, 3);
    let mut wkb = build_expansion(&c, &f, 4).unwrap();
    let bump = rf(&[1], &[0, 0, 0, 1000]);
    let s2 = &wkb.s[&2] + &bump;
    wkb.s.insert(2, s2);
    assert!(matches!(
        verify_schrodinger(&c, &wkb),
        Err(Error::QuantizationFailure { order: 2, .. })
    ));
}

#[test]
fn oracle_examples() {
    let s2 = rf(&[0, -1], &[1]);
    let o = ode_series_oracle(&s2, &int(1), &int(1), 6, 3).unwrap();
    assert_eq!(o[&1].coeff(0).unwrap(), rat(-1, 4));
    assert_eq!(o[&1].coeff(1).unwrap(), rat(1, 4));
    assert_eq!(o[&2].coeff(0).unwrap(), rat(-5, 32));
    assert_eq!(o[&2].coeff(1).unwrap(), rat(25, 64));
    assert!(matches!(
        ode_series_oracle(&s2, &int(1), &int(2), 6, 3),
        Err(Error::BadSheet)
    ));
}

#[test]
fn oracle_matches_engine() {
    let c = airy(Mode::Exact);
    let f = free_energies(&c, 3);
    let wkb = build_expansion(&c, &f, 4).unwrap();
    assert_eq!(
        compare_with_oracle(&c, &wkb, &int(1), &int(1), 12, 4).unwrap(),
        3 * 13
    );
    let c = curve_b(Mode::Exact);
    let f = free_energies(&c, 3);
    let wkb = build_expansion(&c, &f, 4).unwrap();
    compare_with_oracle(&c, &wkb, &rat(-1, 3), &rat(-2, 3), 12, 4).unwrap();
}
