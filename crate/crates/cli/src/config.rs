//! TOML curve configurations.

use std::path::Path;

use serde::Deserialize;
use spectral_core::algebra::rational::rat;
use spectral_core::algebra::RationalFunction;
use spectral_core::curve::{Mode, SpectralCurve};

use crate::expr::parse_expression;
use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    curve: CurveSection,
    compute: ComputeSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveSection {
    name: String,
    x: String,
    y: String,
    mode: ModeName,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeName {
    Exact,
    Series,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComputeSection {
    g_max: i64,
    n_max: i64,
    wkb_order: i64,
    series_order: Option<i64>,
    #[serde(default)]
    seed: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveConfig {
    pub name: String,
    pub x_expr: String,
    pub y_expr: String,
    pub mode: Mode,
    pub g_max: usize,
    pub n_max: usize,
    pub wkb_order: usize,
    pub series_order: Option<usize>,
    pub seed: u64,
}

impl CurveConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let file: File =
            toml::from_str(text).map_err(|e| CliError::Input(format!("config: {e}")))?;
        let c = file.compute;
        let nonneg = |v: i64, what: &str, min: i64| -> Result<usize, CliError> {
            if v < min {
                return Err(CliError::Input(format!(
                    "config: {what} must be at least {min}, got {v}"
                )));
            }
            Ok(v as usize)
        };
        let config = CurveConfig {
            name: file.curve.name,
            x_expr: file.curve.x,
            y_expr: file.curve.y,
            mode: match file.curve.mode {
                ModeName::Exact => Mode::Exact,
                ModeName::Series => Mode::Series,
            },
            g_max: nonneg(c.g_max, "g_max", 0)?,
            n_max: nonneg(c.n_max, "n_max", 1)?,
            wkb_order: nonneg(c.wkb_order, "wkb_order", 2)?,
            series_order: c
                .series_order
                .map(|o| nonneg(o, "series_order", 4))
                .transpose()?,
            seed: c.seed,
        };
        if config.name.is_empty()
            || !config
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
        {
            return Err(CliError::Input(format!(
                "config: curve name {:?} is not a plain file name",
                config.name
            )));
        }
        config.functions(false)?;
        Ok(config)
    }

    /// `x(z)` and `y(z)`; `h_model` halves `y`.
    pub fn functions(
        &self,
        h_model: bool,
    ) -> Result<(RationalFunction, RationalFunction), CliError> {
        let parse = |what: &str, text: &str| {
            parse_expression(text, 'z')
                .map_err(|e| CliError::Input(format!("{what} = {text:?}: {e}")))
        };
        let x = parse("x", &self.x_expr)?;
        let mut y = parse("y", &self.y_expr)?;
        if h_model {
            y = y.scale(&rat(1, 2));
        }
        Ok((x, y))
    }

    /// Configured series order, else `4 g_max + 2 n_max + 8`.
    pub fn series_order(&self) -> usize {
        self.series_order
            .unwrap_or(4 * self.g_max + 2 * self.n_max + 8)
    }

    pub fn build_curve(&self, h_model: bool) -> Result<SpectralCurve, CliError> {
        let (x, y) = self.functions(h_model)?;
        SpectralCurve::build(x, y, self.mode, self.series_order()).map_err(CliError::from_core)
    }

    /// Highest correlator level computed: `2 g_max - 2 + n_max`.
    pub fn top_level(&self) -> i64 {
        2 * self.g_max as i64 - 2 + self.n_max as i64
    }
}
