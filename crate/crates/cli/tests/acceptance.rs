//! Acceptance run: one PASS/FAIL line per criterion, with its time against the limit.
//! Exits nonzero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use spectral_core::algebra::rational::{int, rat};
use spectral_core::algebra::{Point, Rational, RationalFunction};
use spectral_core::basis::Slot;
use spectral_core::curve::{Mode, SpectralCurve};
use spectral_core::free_energy::{
    check_differential_recursion, integrate_correlator, FreeEnergyTable,
};
use spectral_core::recursion::{
    compute_w03, compute_w11, full_levels, verify_correlators, w03_closed_form, w11_closed_form,
    CorrelatorTable,
};
use spectral_core::wkb::{
    build_expansion, compare_with_oracle, s2_of_curve, sm_from_free_energies, sm_recursion_step,
    verify_schrodinger,
};
use spectral_rec::expr::parse_expression;
use spectral_rec::run::compute_table;

type Outcome = Result<String, String>;

/// Id, title, time limit in seconds, check.
type Criterion = (&'static str, &'static str, u64, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn rf(text: &str) -> RationalFunction {
    parse_expression(text, 'z').expect("test expression parses")
}

fn curve(x: &str, y: &str, mode: Mode, series_order: usize) -> SpectralCurve {
    SpectralCurve::build(rf(x), rf(y), mode, series_order).expect("test curve builds")
}

fn airy(mode: Mode) -> SpectralCurve {
    curve("z^2", "z", mode, 16)
}

fn h_model() -> SpectralCurve {
    curve("z^2", "z/2", Mode::Exact, 16)
}

fn curve_b() -> SpectralCurve {
    curve("1/(1 - z^2)", "z/(1 - z^2)", Mode::Exact, 16)
}

fn table(c: &SpectralCurve, max_level: i64) -> Result<CorrelatorTable, String> {
    ok(compute_table(c, &full_levels(max_level)))
}

fn free_energies(c: &SpectralCurve, t: &CorrelatorTable) -> Result<FreeEnergyTable, String> {
    let mut fe = FreeEnergyTable::default();
    for w in t.entries() {
        fe.insert(ok(integrate_correlator(c, w))?);
    }
    Ok(fe)
}

fn w11_dual_path() -> Outcome {
    for (name, c) in [
        ("Airy", airy(Mode::Exact)),
        ("curve B", curve_b()),
        ("h-model", h_model()),
    ] {
        let w = ok(compute_w11(&c))?;
        let residue = ok(w.univariate(&c.active_points(), &[]))?;
        ensure!(
            residue == ok(w11_closed_form(&c))?,
            "{name}: residues differ from B(z, sigma z)/(2 eta)"
        );
    }
    let w = ok(compute_w11(&airy(Mode::Exact)))?;
    let expected = BTreeMap::from([(vec![Slot::new(0, 4)], rat(-1, 16))]);
    ensure!(
        w.tensor.terms() == &expected,
        "Airy W(1,1) = {:?}",
        w.tensor.terms()
    );
    let h = ok(compute_w11(&h_model()))?;
    ensure!(
        h.tensor.get(&[Slot::new(0, 4)]) == rat(-1, 8),
        "h-model W(1,1) coefficient"
    );
    Ok("Airy -1/16 e(0,4); curve B and h-model equal the closed form".into())
}

fn w03_closed_form_check() -> Outcome {
    let pairs = [
        (int(3), int(5)),
        (rat(-2, 3), rat(7, 2)),
        (rat(5, 2), int(-4)),
    ];
    for (name, c) in [
        ("Airy", airy(Mode::Exact)),
        ("curve B", curve_b()),
        ("h-model", h_model()),
    ] {
        let w = ok(compute_w03(&c))?;
        let points = c.active_points();
        let finite: Vec<Rational> = points.iter().filter_map(|p| p.finite().cloned()).collect();
        for (z2, z3) in &pairs {
            let closed = ok(w03_closed_form(&c, z2, z3))?;
            ensure!(
                closed.partial_fractions(&finite).is_ok(),
                "{name}: diagonal pole survives at ({z2},{z3})"
            );
            ensure!(
                ok(w.univariate(&points, &[z2.clone(), z3.clone()]))? == closed,
                "{name}: residues differ from the closed form at ({z2},{z3})"
            );
        }
    }
    let w = ok(compute_w03(&h_model()))?;
    let expected = BTreeMap::from([(vec![Slot::new(0, 2); 3], int(-1))]);
    ensure!(
        w.tensor.terms() == &expected,
        "h-model W(0,3) = {:?}",
        w.tensor.terms()
    );
    Ok("h-model W(0,3) = -dz1 dz2 dz3/(z1^2 z2^2 z3^2); no diagonal poles".into())
}

fn structural_suite() -> Outcome {
    let mut count = 0;
    for c in [airy(Mode::Exact), curve_b()] {
        let t = table(&c, 4)?;
        let report = ok(verify_correlators(&c, &t))?;
        ensure!(
            report.checked.len() == full_levels(4).len(),
            "not every (g,n) was checked"
        );
        count += report.checked.len();
    }
    Ok(format!("{count} correlators: symmetric, poles at active points within 2(3g-2+n), sigma-odd per slot"))
}

fn free_energy_round_trip() -> Outcome {
    let mut count = 0;
    for c in [airy(Mode::Exact), curve_b()] {
        let t = table(&c, 4)?;
        count += free_energies(&c, &t)?.entries().count();
    }
    let c = airy(Mode::Exact);
    let fe = free_energies(&c, &table(&c, 1)?)?;
    let points = c.active_points();
    let f11 = ok(fe.require(1, 1))?;
    let f03 = ok(fe.require(0, 3))?;
    for z in [int(2), rat(-3, 5), rat(7, 4)] {
        let v = ok(f11.eval(&points, std::slice::from_ref(&z)))?;
        ensure!(v == (int(48) * &z * &z * &z).recip(), "F(1,1)({z}) = {v}");
    }
    let zs = [int(2), rat(-1, 3), int(5)];
    let v = ok(f03.eval(&points, &zs))?;
    ensure!(
        v == (int(2) * &zs[0] * &zs[1] * &zs[2]).recip(),
        "F(0,3) = {v}"
    );
    Ok(format!(
        "{count} free energies; Airy F(1,1) = 1/(48 z^3), F(0,3) = 1/(2 z1 z2 z3)"
    ))
}

fn differential_recursion() -> Outcome {
    let mut checked = 0;
    for c in [airy(Mode::Exact), curve_b()] {
        let t = table(&c, 4)?;
        let fe = free_energies(&c, &t)?;
        for (g, n) in full_levels(4) {
            if (g, n) == (0, 3) {
                continue;
            }
            let k = ok(check_differential_recursion(&c, &fe, g, n, 20, 2024))?;
            ensure!(k >= 20, "({g},{n}): only {k} samples");
            checked += k;
        }
    }
    Ok(format!(
        "{checked} sample tuples agree; (0,3) excluded, it needs F(0,2)"
    ))
}

fn wkb_values() -> Outcome {
    let c = airy(Mode::Exact);
    let fe = free_energies(&c, &table(&c, 4)?)?;
    let s2 = ok(sm_from_free_energies(&c, &fe, 2))?;
    let s3 = ok(sm_from_free_energies(&c, &fe, 3))?;
    ensure!(s2 == rf("5/48*z^-3"), "S_2 = {s2}");
    ensure!(s3 == rf("5/64*z^-6"), "S_3 = {s3}");
    let stepped = ok(sm_recursion_step(&c, &BTreeMap::from([(2, s2)]), 2))?;
    ensure!(stepped == s3, "S_3 from the recursion step = {stepped}");
    let wkb = ok(build_expansion(&c, &fe, 5))?;
    ok(wkb.check_pole_orders(&c))?;
    for m in 2..=5 {
        ensure!(
            wkb.s[&m].pole_order_at(&Point::Finite(int(0))) == 3 * m - 3,
            "S_{m} pole order"
        );
    }
    Ok("S_2 = 5/(48 z^3), S_3 = 5/(64 z^6) on both paths; poles 3m-3 for m = 2..5".into())
}

fn schrodinger() -> Outcome {
    let mut lines = Vec::new();
    for (name, c) in [("Airy", airy(Mode::Exact)), ("curve B", curve_b())] {
        let fe = free_energies(&c, &table(&c, 5)?)?;
        for order in [4, 6] {
            let wkb = ok(build_expansion(&c, &fe, order))?;
            let report = ok(verify_schrodinger(&c, &wkb))?;
            ensure!(
                report.verified_through == order,
                "{name}: stopped at {}",
                report.verified_through
            );
            // hbar^0 and hbar^1 by hand: (S0')^2 + s2 = 0 and S0'' + 2 S0' S1' = 0 in x.
            let s2 = ok(s2_of_curve(&c))?
                .compose(&c.x)
                .map_err(|e| e.to_string())?;
            let d0 = ok(wkb.x_derivative(&c, 0))?;
            let d1 = ok(wkb.x_derivative(&c, 1))?;
            ensure!(
                (&(&d0 * &d0) + &s2).is_zero(),
                "{name}: semi-classical limit"
            );
            let d0x = ok(d0.derivative().div(&c.x.derivative()))?;
            ensure!(
                (&d0x + &(&d0 * &d1).scale(&int(2))).is_zero(),
                "{name}: hbar^1 relation"
            );
        }
        lines.push(format!("{name} M = 4, 6"));
    }
    Ok(format!("all residuals vanish: {}", lines.join("; ")))
}

fn ode_oracle() -> Outcome {
    let mut total = 0;
    for (c, x0, y0) in [
        (airy(Mode::Exact), int(1), int(1)),
        (curve_b(), rat(-1, 3), rat(-2, 3)),
    ] {
        let fe = free_energies(&c, &table(&c, 3)?)?;
        let wkb = ok(build_expansion(&c, &fe, 4))?;
        total += ok(compare_with_oracle(&c, &wkb, &x0, &y0, 12, 4))?;
    }
    Ok(format!(
        "{total} coefficients (m = 2..4, xi^0..xi^12) agree at Airy (1,1) and curve B (-1/3,-2/3)"
    ))
}

fn series_consistency() -> Outcome {
    let exact = table(&airy(Mode::Exact), 3)?;
    let series = table(&curve("z^2", "z", Mode::Series, 16), 3)?;
    let doubled = table(&curve("z^2", "z", Mode::Series, 32), 3)?;
    for (g, n) in full_levels(3) {
        let e = exact.get(g, n).map(|w| &w.tensor);
        ensure!(
            series.get(g, n).map(|w| &w.tensor) == e,
            "W({g},{n}) differs in SERIES mode"
        );
        ensure!(
            doubled.get(g, n).map(|w| &w.tensor) == e,
            "W({g},{n}) changes when the order doubles"
        );
    }
    Ok(format!(
        "{} correlators identical at series order 16 and 32",
        full_levels(3).len()
    ))
}

fn determinism() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let config = dir.path().join("b.toml");
    ok(std::fs::write(
        &config,
        "[curve]\nname = \"curve-b\"\nx = \"1/(1 - z^2)\"\ny = \"z/(1 - z^2)\"\nmode = \"exact\"\n\n\
         [compute]\ng_max = 2\nn_max = 2\nwkb_order = 5\nseed = 3\n",
    ))?;
    let run = |out: &Path, threads: Option<&str>| -> Result<Vec<Vec<u8>>, String> {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_spectral-rec"));
        cmd.arg("compute").arg(&config).arg("--out").arg(out);
        match threads {
            Some(t) => cmd.env("SPECTRAL_REC_THREADS", t),
            None => cmd.env_remove("SPECTRAL_REC_THREADS"),
        };
        let status = ok(cmd.output())?.status;
        ensure!(status.success(), "compute exited with {status}");
        ["w.json", "f.json", "wkb.json"]
            .iter()
            .map(|f| ok(std::fs::read(out.join(f))))
            .collect()
    };
    let first = run(&dir.path().join("a"), None)?;
    for (i, threads) in [Some("1"), Some("2"), Some("8"), None]
        .into_iter()
        .enumerate()
    {
        let again = run(&dir.path().join(format!("r{i}")), threads)?;
        ensure!(
            again == first,
            "output differs with SPECTRAL_REC_THREADS={threads:?}"
        );
    }
    let cached = run(&dir.path().join("a"), Some("3"))?;
    ensure!(cached == first, "rerun over a cached table differs");
    Ok(
        "w.json, f.json, wkb.json byte-identical over 6 runs with 1, 2, 3, 8 and default threads"
            .into(),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "1",
            "W(1,1) residues equal the closed form",
            1,
            w11_dual_path,
        ),
        (
            "2",
            "W(0,3) residues equal the closed form",
            1,
            w03_closed_form_check,
        ),
        ("3", "structural suite, levels 1..4", 60, structural_suite),
        (
            "4",
            "free-energy round trip and normalization",
            10,
            free_energy_round_trip,
        ),
        (
            "5",
            "differential recursion cross-path",
            120,
            differential_recursion,
        ),
        ("6", "WKB values and pole orders", 60, wkb_values),
        ("7", "Schrödinger residuals", 120, schrodinger),
        ("8", "ODE oracle", 60, ode_oracle),
        (
            "9",
            "SERIES mode matches EXACT mode",
            120,
            series_consistency,
        ),
        (
            "10",
            "determinism across runs and thread caps",
            60,
            determinism,
        ),
    ];
    let only: BTreeSet<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (id, title, limit, f) in criteria {
        if !only.is_empty() && !only.contains(&format!("AC{id}")) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let limit = Duration::from_secs(limit);
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= limit => (true, d),
            Ok(d) => (false, format!("{d}; over the time limit")),
            Err(e) => (false, e),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} AC{id} {title}: {detail} [{:.3}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
