//! JSON spec files.

use std::path::Path;

use entire_approx::expr::{parse, Expr};
use entire_approx::hoischen::{
    complex_target, ApproximationSpec, Mode, MAX_DEGREE_CAP, MAX_ORDER, MAX_STAGES, MIN_GRID_PER_UNIT,
};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum FunctionField {
    Text(String),
    Parts { re: String, im: String },
}

#[derive(Debug, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModeField {
    #[default]
    Line,
    Compact { a: f64, b: f64, eps: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub function: FunctionField,
    pub m: i64,
    #[serde(default)]
    pub epsilon: Option<String>,
    #[serde(rename = "K", default)]
    pub k: Option<i64>,
    #[serde(default = "default_cap")]
    pub degree_cap: i64,
    #[serde(default)]
    pub mode: ModeField,
    #[serde(default = "default_grid")]
    pub grid_per_unit: i64,
}

fn default_cap() -> i64 {
    96
}

fn default_grid() -> i64 {
    100
}

/// A validated spec plus its certification density.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub spec: ApproximationSpec,
    pub grid_per_unit: usize,
}

fn in_range(name: &str, v: i64, lo: i64, hi: i64) -> Result<usize, String> {
    if v < lo || v > hi {
        return Err(format!("{name} = {v} outside {lo}..={hi}"));
    }
    Ok(v as usize)
}

fn expression(field: &str, text: &str) -> Result<Expr, String> {
    parse(text).map_err(|e| format!("{field}: {e}"))
}

impl SpecFile {
    pub fn read(path: &Path) -> Result<SpecFile, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("parsing {}: {e}", path.display()))
    }

    pub fn load(self) -> Result<Loaded, String> {
        let m = in_range("m", self.m, 0, MAX_ORDER as i64)?;
        let degree_cap = in_range("degree_cap", self.degree_cap, 0, MAX_DEGREE_CAP as i64)?;
        let grid_per_unit = in_range("grid_per_unit", self.grid_per_unit, MIN_GRID_PER_UNIT as i64, i64::MAX)?;
        let f = match &self.function {
            FunctionField::Text(t) => expression("function", t)?,
            FunctionField::Parts { re, im } => {
                complex_target(expression("function.re", re)?, expression("function.im", im)?)
            }
        };
        let mode = match self.mode {
            ModeField::Line => {
                let k = self.k.ok_or("line mode requires \"K\"")?;
                let k = in_range("K", k, 1, MAX_STAGES as i64)?;
                let text = self.epsilon.ok_or("line mode requires \"epsilon\"")?;
                Mode::Line {
                    eps: expression("epsilon", &text)?,
                    k,
                }
            }
            ModeField::Compact { a, b, eps } => {
                if let Some(k) = self.k {
                    in_range("K", k, 1, MAX_STAGES as i64)?;
                }
                Mode::Compact { a, b, eps }
            }
        };
        let spec = ApproximationSpec {
            f,
            m,
            degree_cap,
            mode,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(Loaded { spec, grid_per_unit })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(json: &str) -> Result<Loaded, String> {
        serde_json::from_str::<SpecFile>(json).map_err(|e| e.to_string())?.load()
    }

    #[test]
    fn defaults() {
        let l = load(r#"{"function": "sin(x)", "m": 1, "epsilon": "0.2", "K": 2}"#).unwrap();
        assert_eq!(l.spec.degree_cap, 96);
        assert_eq!(l.grid_per_unit, 100);
        assert!(matches!(l.spec.mode, Mode::Line { k: 2, .. }));
    }

    #[test]
    fn compact_and_complex() {
        let l = load(
            r#"{"function": {"re": "cos(x)", "im": "sin(x)"}, "m": 2,
                "mode": {"compact": {"a": -1, "b": 1, "eps": 1e-3}}}"#,
        )
        .unwrap();
        assert_eq!(l.spec.window(), (-1.0, 1.0));
    }

    #[test]
    fn rejections() {
        for bad in [
            r#"{"function": "sin(x)", "m": -1, "epsilon": "1", "K": 2}"#,
            r#"{"function": "sin(x)", "m": 9, "epsilon": "1", "K": 2}"#,
            r#"{"function": "sin(x)", "m": 1, "epsilon": "1", "K": 0}"#,
            r#"{"function": "sin(x)", "m": 1, "epsilon": "1"}"#,
            r#"{"function": "sin(x)", "m": 1, "K": 2}"#,
            r#"{"function": "sin(x)", "m": 1, "epsilon": "1", "K": 2, "degree_cap": 200}"#,
            r#"{"function": "sin(x)", "m": 1, "epsilon": "1", "K": 2, "grid_per_unit": 10}"#,
            r#"{"function": "sin(x)", "m": 1, "epsilon": "1", "K": 2, "extra": 0}"#,
            r#"{"function": "sin(", "m": 1, "epsilon": "1", "K": 2}"#,
            r#"{"function": "sin(x)", "m": 1, "mode": {"compact": {"a": 1, "b": 0, "eps": 1}}}"#,
            r#"{"function": "sin(x)", "m": 1, "epsilon": "1", "K": 2, "mode": "ring"}"#,
        ] {
            assert!(load(bad).is_err(), "{bad}");
        }
    }
}
