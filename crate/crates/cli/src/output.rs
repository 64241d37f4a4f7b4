//! JSON documents for correlators, free energies and WKB expansions.
//!
//! Rationals are strings, term lists follow the tensors' key order, and every document
//! carries a hash of the inputs it was computed from and a hash of its own content.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spectral_core::algebra::rational::parse_rational;
use spectral_core::algebra::{Point, Rational};
use spectral_core::basis::{Slot, Tensor};
use spectral_core::curve::{index_of, SpectralCurve};
use spectral_core::free_energy::FreeEnergy;
use spectral_core::recursion::{Correlator, CorrelatorTable};
use spectral_core::wkb::{Source, WkbExpansion};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotJson {
    pub point: String,
    pub order: u16,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub slots: Vec<SlotJson>,
    pub coeff: String,
}

/// One `W_{g,n}` or `F_{g,n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorJson {
    pub g: usize,
    pub n: usize,
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoleJson {
    pub point: String,
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WkbTermJson {
    pub m: usize,
    pub poles: Vec<PoleJson>,
    pub rational: String,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WkbJson {
    pub order: usize,
    #[serde(rename = "dS0")]
    pub ds0: String,
    #[serde(rename = "dS1")]
    pub ds1: String,
    pub terms: Vec<WkbTermJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveJson {
    pub name: String,
    pub x: String,
    pub y: String,
    pub mode: String,
    pub active_points: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document<T> {
    pub curve: CurveJson,
    pub input_hash: String,
    pub content_hash: String,
    pub content: T,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn curve_json(name: &str, curve: &SpectralCurve) -> CurveJson {
    CurveJson {
        name: name.to_string(),
        x: curve.x.to_string(),
        y: curve.y.to_string(),
        mode: curve.mode.to_string(),
        active_points: curve
            .active_points()
            .iter()
            .map(|p| p.to_string())
            .collect(),
    }
}

impl<T: Serialize> Document<T> {
    pub fn new(curve: CurveJson, input_hash: String, content: T) -> Self {
        let content_hash = content_hash(&content);
        Document {
            curve,
            input_hash,
            content_hash,
            content,
        }
    }

    /// Pretty-printed with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
    }

    pub fn content_hash_ok(&self) -> bool {
        content_hash(&self.content) == self.content_hash
    }
}

fn content_hash<T: Serialize>(content: &T) -> String {
    sha256_hex(
        serde_json::to_string(content)
            .expect("documents serialize")
            .as_bytes(),
    )
}

impl<T: for<'de> Deserialize<'de>> Document<T> {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }
}

fn tensor_json(g: usize, n: usize, t: &Tensor, points: &[Point]) -> TensorJson {
    let terms = t
        .terms()
        .iter()
        .map(|(key, c)| TermJson {
            slots: key
                .iter()
                .map(|s| SlotJson {
                    point: points[s.point as usize].to_string(),
                    order: s.order,
                })
                .collect(),
            coeff: c.to_string(),
        })
        .collect();
    TensorJson { g, n, terms }
}

pub fn correlator_json(w: &Correlator, points: &[Point]) -> TensorJson {
    tensor_json(w.g, w.n, &w.tensor, points)
}

pub fn free_energy_json(f: &FreeEnergy, points: &[Point]) -> TensorJson {
    tensor_json(f.g, f.n, &f.tensor, points)
}

fn source_name(s: Source) -> &'static str {
    match s {
        Source::FreeEnergy => "free-energy",
        Source::Recursion => "recursion",
    }
}

pub fn wkb_json(curve: &SpectralCurve, wkb: &WkbExpansion) -> WkbJson {
    let terms = wkb
        .s
        .iter()
        .map(|(&m, sm)| WkbTermJson {
            m,
            poles: curve
                .active_points()
                .iter()
                .map(|p| PoleJson {
                    point: p.to_string(),
                    order: sm.pole_order_at(p),
                })
                .filter(|p| p.order > 0)
                .collect(),
            rational: sm.to_string(),
            source: source_name(wkb.sources[&m]).to_string(),
        })
        .collect();
    WkbJson {
        order: wkb.order,
        ds0: wkb.ds0.coeff.to_string(),
        ds1: wkb.ds1.coeff.to_string(),
        terms,
    }
}

/// Rebuilds a table from its JSON terms; slot points must be active points of `curve`.
pub fn table_from_json(
    curve: &SpectralCurve,
    entries: &[TensorJson],
) -> Result<CorrelatorTable, CliError> {
    let index = index_of(curve);
    let bad = |what: String| CliError::Input(format!("table file: {what}"));
    let mut table = CorrelatorTable::new();
    for e in entries {
        let mut terms: BTreeMap<Vec<Slot>, Rational> = BTreeMap::new();
        for term in &e.terms {
            if term.slots.len() != e.n {
                return Err(bad(format!(
                    "W({},{}) has a term with {} slots",
                    e.g,
                    e.n,
                    term.slots.len()
                )));
            }
            let key = term
                .slots
                .iter()
                .map(|s| {
                    let p = Point::parse(&s.point)
                        .ok_or_else(|| bad(format!("bad point {:?}", s.point)))?;
                    let i = index.get(&p).ok_or_else(|| {
                        bad(format!(
                            "W({},{}) has a pole at {p}, not an active point",
                            e.g, e.n
                        ))
                    })?;
                    Ok(Slot::new(*i, s.order))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let c = parse_rational(&term.coeff)
                .ok_or_else(|| bad(format!("bad coefficient {:?}", term.coeff)))?;
            if terms.insert(key, c).is_some() {
                return Err(bad(format!("W({},{}) repeats a term", e.g, e.n)));
            }
        }
        table.insert(Correlator {
            g: e.g,
            n: e.n,
            tensor: Tensor::from_terms(terms),
        });
    }
    Ok(table)
}
