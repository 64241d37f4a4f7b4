//! The `compute`, `wkb` and `verify` commands.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use spectral_core::algebra::rational::{int, rat};
use spectral_core::algebra::{Point, Rational};
use spectral_core::curve::{Mode, SpectralCurve};
use spectral_core::free_energy::{
    check_diagonal_pole_orders, check_differential_recursion, integrate_correlator, FreeEnergyTable,
};
use spectral_core::recursion::{
    full_levels, level, schedule, verify_correlator, w03_closed_form, w11_closed_form,
    w11_local_principal_parts, CorrelatorTable, RecursionOptions,
};
use spectral_core::wkb::{
    build_expansion, compare_with_oracle, s2_of_curve, verify_schrodinger, WkbExpansion,
};
use spectral_core::Error;

use crate::config::CurveConfig;
use crate::output::{
    correlator_json, curve_json, free_energy_json, sha256_hex, table_from_json, wkb_json, Document,
    TensorJson, WkbJson,
};
use crate::CliError;

/// Sample tuples per `(g, n)` for the differential-recursion check.
pub const DIFFERENTIAL_SAMPLES: usize = 20;
/// Highest level checked against the differential recursion.
pub const DIFFERENTIAL_MAX_LEVEL: i64 = 5;
/// Coefficients `xi^0..xi^ORACLE_DEPTH` are compared with the ODE oracle.
pub const ORACLE_DEPTH: usize = 12;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub h_model: bool,
    pub out: Option<PathBuf>,
}

pub fn output_dir(config: &CurveConfig, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(&config.name))
}

/// Where a correlator table came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSource {
    Cache,
    Computed,
}

/// `schedule(g_max, n_max)` plus level 1, which the WKB expansion always needs.
pub fn targets(config: &CurveConfig) -> BTreeSet<(usize, usize)> {
    let mut t = schedule(config.g_max, config.n_max);
    t.extend(full_levels(1));
    t
}

fn input_hash(config: &CurveConfig, curve: &SpectralCurve, extra: &str) -> String {
    let series = match curve.mode {
        Mode::Exact => "-".to_string(),
        Mode::Series => config.series_order().to_string(),
    };
    let text = format!(
        "x={}\ny={}\nmode={}\nseries_order={series}\ng_max={}\nn_max={}\n{extra}",
        curve.x, curve.y, curve.mode, config.g_max, config.n_max
    );
    sha256_hex(text.as_bytes())
}

fn table_hash(config: &CurveConfig, curve: &SpectralCurve) -> String {
    input_hash(config, curve, "")
}

fn wkb_hash(config: &CurveConfig, curve: &SpectralCurve, order: usize) -> String {
    input_hash(config, curve, &format!("wkb_order={order}\n"))
}

fn names(items: &BTreeSet<(usize, usize)>) -> String {
    items
        .iter()
        .map(|(g, n)| format!("W({g},{n})"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Fills the table level by level; errors name the level's entries.
pub fn compute_table(
    curve: &SpectralCurve,
    targets: &BTreeSet<(usize, usize)>,
) -> Result<CorrelatorTable, CliError> {
    let opts = RecursionOptions::for_curve(curve);
    let mut by_level: BTreeMap<i64, BTreeSet<(usize, usize)>> = BTreeMap::new();
    for &(g, n) in targets {
        by_level.entry(level(g, n)).or_default().insert((g, n));
    }
    let mut table = CorrelatorTable::new();
    for (l, items) in by_level {
        table.extend(curve, &items, &opts).map_err(|e| {
            CliError::from_core(e).context(&format!("level {l} [{}]", names(&items)))
        })?;
    }
    Ok(table)
}

/// A cached `w.json` is used only when both its input and content hashes check out.
fn cached_table(path: &Path, curve: &SpectralCurve, hash: &str) -> Option<CorrelatorTable> {
    let doc: Document<Vec<TensorJson>> = Document::read(path).ok()?;
    if doc.input_hash != hash || !doc.content_hash_ok() {
        return None;
    }
    table_from_json(curve, &doc.content).ok()
}

fn load_or_compute(
    config: &CurveConfig,
    curve: &SpectralCurve,
    dir: &Path,
) -> Result<(CorrelatorTable, TableSource), CliError> {
    if let Some(t) = cached_table(&dir.join("w.json"), curve, &table_hash(config, curve)) {
        return Ok((t, TableSource::Cache));
    }
    Ok((
        compute_table(curve, &targets(config))?,
        TableSource::Computed,
    ))
}

pub fn integrate(
    curve: &SpectralCurve,
    table: &CorrelatorTable,
) -> Result<FreeEnergyTable, CliError> {
    let ws: Vec<_> = table.entries().collect();
    let fs = ws
        .par_iter()
        .map(|w| {
            integrate_correlator(curve, w)
                .map_err(|e| CliError::from_core(e).context(&format!("F({},{})", w.g, w.n)))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = FreeEnergyTable::default();
    for f in fs {
        out.insert(f);
    }
    Ok(out)
}

fn expansion(
    curve: &SpectralCurve,
    fe: &FreeEnergyTable,
    order: usize,
) -> Result<WkbExpansion, CliError> {
    build_expansion(curve, fe, order)
        .map_err(|e| CliError::from_core(e).context(&format!("WKB through S_{order}")))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))
}

#[derive(Clone, Debug)]
pub struct ComputeOutput {
    pub dir: PathBuf,
    pub table: TableSource,
}

/// Builds the curve, the correlator table, the free energies and the WKB expansion, and
/// writes `w.json`, `f.json` and `wkb.json`.
pub fn run_compute(config: &CurveConfig, opts: &RunOptions) -> Result<ComputeOutput, CliError> {
    let curve = config.build_curve(opts.h_model)?;
    let dir = output_dir(config, opts);
    let (table, source) = load_or_compute(config, &curve, &dir)?;
    let fe = integrate(&curve, &table)?;
    let wkb = expansion(&curve, &fe, config.wkb_order)?;
    let points = curve.active_points();
    let cj = curve_json(&config.name, &curve);
    let hash = table_hash(config, &curve);
    create_dir(&dir)?;
    let ws: Vec<TensorJson> = table
        .entries()
        .map(|w| correlator_json(w, &points))
        .collect();
    Document::new(cj.clone(), hash.clone(), ws).write(&dir.join("w.json"))?;
    let fs: Vec<TensorJson> = fe.entries().map(|f| free_energy_json(f, &points)).collect();
    Document::new(cj.clone(), hash, fs).write(&dir.join("f.json"))?;
    let doc = Document::new(
        cj,
        wkb_hash(config, &curve, config.wkb_order),
        wkb_json(&curve, &wkb),
    );
    doc.write(&dir.join("wkb.json"))?;
    Ok(ComputeOutput { dir, table: source })
}

/// WKB expansion through `S_order`, written to `wkb.json` and returned.
pub fn run_wkb(
    config: &CurveConfig,
    order: usize,
    opts: &RunOptions,
) -> Result<Document<WkbJson>, CliError> {
    if order < 2 {
        return Err(CliError::Input(format!(
            "WKB order must be at least 2, got {order}"
        )));
    }
    let curve = config.build_curve(opts.h_model)?;
    let dir = output_dir(config, opts);
    let (table, _) = load_or_compute(config, &curve, &dir)?;
    let fe = integrate(&curve, &table)?;
    let wkb = expansion(&curve, &fe, order)?;
    let doc = Document::new(
        curve_json(&config.name, &curve),
        wkb_hash(config, &curve, order),
        wkb_json(&curve, &wkb),
    );
    create_dir(&dir)?;
    doc.write(&dir.join("wkb.json"))?;
    Ok(doc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Correlators,
    FreeEnergies,
    Wkb,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub curve: String,
    pub suite: Suite,
    pub table: TableSource,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn record<T, E: std::fmt::Display>(
        &mut self,
        name: impl Into<String>,
        r: Result<T, E>,
        detail: impl FnOnce(&T) -> Option<String>,
    ) -> Option<T> {
        match r {
            Ok(v) => {
                self.0.push(Check {
                    name: name.into(),
                    status: Status::Pass,
                    detail: detail(&v),
                });
                Some(v)
            }
            Err(e) => {
                self.fail(name, e.to_string());
                None
            }
        }
    }

    fn pass_or_fail(&mut self, name: impl Into<String>, r: Result<(), Error>) -> bool {
        self.record(name, r, |_| None).is_some()
    }

    fn fail(&mut self, name: impl Into<String>, detail: String) {
        self.0.push(Check {
            name: name.into(),
            status: Status::Fail,
            detail: Some(detail),
        });
    }

    fn skip(&mut self, name: impl Into<String>, why: &str) {
        self.0.push(Check {
            name: name.into(),
            status: Status::Skip,
            detail: Some(why.to_string()),
        });
    }
}

/// Runs the requested suites. Verification failures land in the report; only invalid
/// input is returned as an error.
pub fn run_verify(
    config: &CurveConfig,
    suite: Suite,
    opts: &RunOptions,
) -> Result<VerifyReport, CliError> {
    let curve = config.build_curve(opts.h_model)?;
    let dir = output_dir(config, opts);
    let mut checks = Checks::default();
    let with_correlators = matches!(suite, Suite::Correlators | Suite::All);
    let hash = table_hash(config, &curve);
    let w_path = dir.join("w.json");

    let (table, source) = if with_correlators {
        stored_or_computed(config, &curve, &w_path, &hash, &mut checks)
    } else {
        match load_or_compute(config, &curve, &dir) {
            Ok((t, s)) => (Some(t), s),
            Err(e) => {
                checks.fail("correlator table", e.to_string());
                (None, TableSource::Computed)
            }
        }
    };

    if let Some(table) = &table {
        if with_correlators {
            correlator_checks(&curve, table, &mut checks);
        }
        if suite != Suite::Correlators {
            let fe = checks.record("free energies", integrate(&curve, table), |_| None);
            if let Some(fe) = fe {
                if matches!(suite, Suite::FreeEnergies | Suite::All) {
                    free_energy_checks(&curve, &fe, config.seed, &mut checks);
                }
                if matches!(suite, Suite::Wkb | Suite::All) {
                    wkb_checks(&curve, &fe, config.wkb_order, &mut checks);
                }
            }
        }
    }
    let passed = checks.0.iter().all(|c| c.status != Status::Fail);
    Ok(VerifyReport {
        curve: config.name.clone(),
        suite,
        table: source,
        checks: checks.0,
        passed,
    })
}

/// For the correlator suite a stored table with matching inputs is checked as found
/// (a content-hash mismatch is a failure) and compared with a fresh computation.
fn stored_or_computed(
    config: &CurveConfig,
    curve: &SpectralCurve,
    w_path: &Path,
    hash: &str,
    checks: &mut Checks,
) -> (Option<CorrelatorTable>, TableSource) {
    let fresh = compute_table(curve, &targets(config));
    let stored = match Document::<Vec<TensorJson>>::read(w_path) {
        Ok(doc) if doc.input_hash == hash => Some(doc),
        _ => None,
    };
    let Some(doc) = stored else {
        return match fresh {
            Ok(t) => (Some(t), TableSource::Computed),
            Err(e) => {
                checks.fail("correlator table", e.to_string());
                (None, TableSource::Computed)
            }
        };
    };
    if doc.content_hash_ok() {
        checks.0.push(Check {
            name: "table file content hash".into(),
            status: Status::Pass,
            detail: None,
        });
    } else {
        checks.fail(
            "table file content hash",
            format!("{} does not match its content", w_path.display()),
        );
    }
    let stored = match table_from_json(curve, &doc.content) {
        Ok(t) => t,
        Err(e) => {
            checks.fail("table file readable", e.to_string());
            return (None, TableSource::Cache);
        }
    };
    match &fresh {
        Ok(t) => {
            let differing: Vec<String> = t
                .keys()
                .union(&stored.keys())
                .filter(|(g, n)| t.get(*g, *n) != stored.get(*g, *n))
                .map(|(g, n)| format!("W({g},{n})"))
                .collect();
            if differing.is_empty() {
                checks.0.push(Check {
                    name: "table file matches recomputation".into(),
                    status: Status::Pass,
                    detail: None,
                });
            } else {
                checks.fail(
                    "table file matches recomputation",
                    format!("differs in {}", differing.join(", ")),
                );
            }
        }
        Err(e) => checks.fail("correlator table", e.to_string()),
    }
    (Some(stored), TableSource::Cache)
}

fn correlator_checks(curve: &SpectralCurve, table: &CorrelatorTable, checks: &mut Checks) {
    let points = curve.active_points();
    match table.require(1, 1) {
        Ok(w) => {
            let r = match curve.mode {
                Mode::Exact => w11_closed_form(curve).and_then(|closed| {
                    (w.univariate(&points, &[])? == closed)
                        .then_some(())
                        .ok_or_else(|| {
                            Error::InternalConsistency(
                                "W(1,1) differs from B(z, sigma z)/(2 eta)".into(),
                            )
                        })
                }),
                Mode::Series => w11_local_principal_parts(curve, 2 * table.working_order.max(16))
                    .and_then(|t| {
                        (t == w.tensor).then_some(()).ok_or_else(|| {
                            Error::InternalConsistency(
                                "W(1,1) differs from its local closed form".into(),
                            )
                        })
                    }),
            };
            checks.pass_or_fail("W(1,1) closed form", r);
        }
        Err(e) => checks.fail("W(1,1) closed form", e.to_string()),
    }
    match (curve.mode, table.require(0, 3)) {
        (Mode::Exact, Ok(w)) => {
            let finite: Vec<Rational> = points.iter().filter_map(|p| p.finite().cloned()).collect();
            let r = w03_pairs(curve).into_iter().try_for_each(|(z2, z3)| {
                let closed = w03_closed_form(curve, &z2, &z3)?;
                closed.partial_fractions(&finite).map_err(|_| {
                    Error::InternalConsistency("W(0,3) closed form keeps a diagonal pole".into())
                })?;
                if w.univariate(&points, &[z2.clone(), z3.clone()])? != closed {
                    return Err(Error::InternalConsistency(format!(
                        "W(0,3) differs from its closed form at z2={z2}, z3={z3}"
                    )));
                }
                Ok(())
            });
            checks.pass_or_fail("W(0,3) closed form", r);
        }
        (Mode::Exact, Err(e)) => checks.fail("W(0,3) closed form", e.to_string()),
        (Mode::Series, _) => checks.skip("W(0,3) closed form", "needs the global involution"),
    }
    let ws: Vec<_> = table.entries().collect();
    let results: Vec<_> = ws.par_iter().map(|w| verify_correlator(curve, w)).collect();
    for (w, r) in ws.iter().zip(results) {
        let name = format!("W({},{}) symmetry, poles and balanced average", w.g, w.n);
        checks.record(name, r, |fiber| {
            fiber.map(|x| format!("worst relative fiber sum {x:.3e}"))
        });
    }
}

fn w03_pairs(curve: &SpectralCurve) -> Vec<(Rational, Rational)> {
    [
        (int(3), int(5)),
        (rat(-2, 3), rat(7, 2)),
        (rat(5, 2), int(-4)),
        (int(7), rat(11, 3)),
        (rat(13, 5), rat(-9, 7)),
    ]
    .into_iter()
    .filter(|(a, b)| spectral_core::recursion::sample_ok(curve, &[a.clone(), b.clone()]))
    .take(2)
    .collect()
}

fn free_energy_checks(curve: &SpectralCurve, fe: &FreeEnergyTable, seed: u64, checks: &mut Checks) {
    for f in fe.entries() {
        checks.0.push(Check {
            name: format!("F({},{}) round trip and fiber normalization", f.g, f.n),
            status: Status::Pass,
            detail: None,
        });
    }
    let fs: Vec<_> = fe.entries().collect();
    let diagonal: Vec<_> = fs
        .par_iter()
        .map(|f| check_diagonal_pole_orders(curve, f))
        .collect();
    for (f, r) in fs.iter().zip(diagonal) {
        checks.pass_or_fail(format!("F({},{}) diagonal pole order", f.g, f.n), r);
    }
    if curve.mode != Mode::Exact {
        checks.skip("differential recursion", "needs the global involution");
        return;
    }
    for f in fe.entries() {
        let name = format!("F({},{}) differential recursion", f.g, f.n);
        if (f.g, f.n) == (0, 3) {
            checks.skip(name, "needs F(0,2)");
        } else if level(f.g, f.n) > DIFFERENTIAL_MAX_LEVEL {
            checks.skip(name, "above the checked level");
        } else {
            let r = check_differential_recursion(curve, fe, f.g, f.n, DIFFERENTIAL_SAMPLES, seed);
            checks.record(name, r, |k| Some(format!("{k} samples")));
        }
    }
}

fn wkb_checks(curve: &SpectralCurve, fe: &FreeEnergyTable, order: usize, checks: &mut Checks) {
    let describe = |w: &WkbExpansion| {
        let parts: Vec<String> = w
            .sources
            .iter()
            .map(|(m, s)| format!("S_{m}: {s:?}"))
            .collect();
        Some(parts.join(", "))
    };
    let Some(wkb) = checks.record(
        format!("S_2..S_{order}, free energies against the recursion step"),
        build_expansion(curve, fe, order),
        describe,
    ) else {
        return;
    };
    checks.pass_or_fail("S_m pole orders 3m-3", wkb.check_pole_orders(curve));
    match curve.mode {
        Mode::Exact => {
            checks.pass_or_fail("S_m parity under the involution", wkb.check_parity(curve));
        }
        Mode::Series => checks.skip(
            "S_m parity under the involution",
            "needs the global involution",
        ),
    }
    if let Err(Error::NotASpectralCurve(why)) = s2_of_curve(curve) {
        checks.skip(
            format!("quantum curve residuals through hbar^{order}"),
            &why,
        );
        checks.skip("ODE oracle", &why);
        return;
    }
    checks.record(
        format!("quantum curve residuals through hbar^{order}"),
        verify_schrodinger(curve, &wkb),
        |r| Some(format!("s2(x) = {}", r.s2)),
    );
    match oracle_point(curve) {
        Some((x0, y0)) => {
            let r = compare_with_oracle(curve, &wkb, &x0, &y0, ORACLE_DEPTH, order);
            checks.record(format!("ODE oracle at x0 = {x0}, y0 = {y0}"), r, |k| {
                Some(format!("{k} coefficients"))
            });
        }
        None => checks.fail("ODE oracle", "no rational regular point found".into()),
    }
}

/// A rational regular point `(x0, y0)` on the curve, away from ramification and poles.
pub fn oracle_point(curve: &SpectralCurve) -> Option<(Rational, Rational)> {
    let s2 = s2_of_curve(curve).ok()?;
    let dx = curve.x.derivative();
    let candidates = [
        int(1),
        int(2),
        int(3),
        int(-2),
        int(-3),
        rat(1, 2),
        rat(3, 2),
        rat(5, 2),
        int(5),
        int(7),
    ];
    candidates.into_iter().find_map(|z| {
        if curve
            .ram_points
            .iter()
            .any(|r| r.point == Point::Finite(z.clone()))
        {
            return None;
        }
        let x0 = curve.x.eval(&z).ok()?;
        let y0 = curve.y.eval(&z).ok()?;
        let regular =
            dx.eval(&z).is_ok_and(|d| d != int(0)) && y0 != int(0) && s2.eval(&x0).is_ok();
        let unique = spectral_core::wkb::sheet_point(curve, &x0, &y0).ok() == Some(z);
        (regular && unique).then_some((x0, y0))
    })
}
