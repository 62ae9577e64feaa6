//! JSON scenario files.
//!
//! ```json
//! {
//!   "plant": {"A": [[0, 1], [0.1, 0]], "B": [[0], [1]], "D": 1},
//!   "gains": {"K": [[-20, -30]], "L": [[2, 0.5], [3, 0]], "T": 5},
//!   "sim":   {"h": 1e-4, "t_end": 40, "x0": [-1, 1]},
//!   "mode":  "modified"
//! }
//! ```
//!
//! `mode` is optional. Every error names the offending field by path,
//! e.g. `plant.A[1][0]` or `gains.T`.

use std::fmt;
use std::path::Path;

use predictorlab_core::sim::aligned_steps;
use predictorlab_core::{Matrix, Plant, PredictorGains, SimConfig, SimMode, Vector};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: Plant,
    pub gains: PredictorGains,
    pub sim: SimConfig,
    pub mode: SimMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ScenarioError {}

fn err(path: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError {
        path: path.to_string(),
        message: message.into(),
    }
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, ScenarioError> {
    v.as_object().ok_or_else(|| err(path, "expected an object"))
}

fn field<'a>(obj: &'a Map<String, Value>, parent: &str, key: &str) -> Result<&'a Value, ScenarioError> {
    obj.get(key)
        .ok_or_else(|| err(&join(parent, key), "missing required key"))
}

fn join(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn number(v: &Value, path: &str) -> Result<f64, ScenarioError> {
    let x = v
        .as_f64()
        .ok_or_else(|| err(path, format!("expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(err(path, "number is not finite"));
    }
    Ok(x)
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>, ScenarioError> {
    let arr = v
        .as_array()
        .ok_or_else(|| err(path, "expected an array of numbers"))?;
    if arr.is_empty() {
        return Err(err(path, "array is empty"));
    }
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn matrix(v: &Value, path: &str) -> Result<Matrix, ScenarioError> {
    let rows = v
        .as_array()
        .ok_or_else(|| err(path, "expected a matrix given as an array of rows"))?;
    if rows.is_empty() {
        return Err(err(path, "matrix has no rows"));
    }
    let mut data = Vec::new();
    let mut width = None;
    for (i, row) in rows.iter().enumerate() {
        let row_path = format!("{path}[{i}]");
        let r = numbers(row, &row_path)?;
        match width {
            None => width = Some(r.len()),
            Some(w) if w != r.len() => {
                return Err(err(&row_path, format!("row has {} entries, expected {w}", r.len())))
            }
            _ => {}
        }
        data.extend(r);
    }
    Matrix::new(rows.len(), width.unwrap_or(0), data).map_err(|e| err(path, e.to_string()))
}

/// Parses and validates a scenario from JSON text.
pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioError> {
    let root: Value = serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))?;
    let top = object(&root, "")?;

    let plant_v = field(top, "", "plant")?;
    let plant_o = object(plant_v, "plant")?;
    let a = matrix(field(plant_o, "plant", "A")?, "plant.A")?;
    let b = matrix(field(plant_o, "plant", "B")?, "plant.B")?;
    let delay = number(field(plant_o, "plant", "D")?, "plant.D")?;
    if !a.is_square() {
        return Err(err("plant.A", format!("must be square, got {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    if b.rows() != n {
        return Err(err("plant.B", format!("must have {n} rows to match plant.A, got {}", b.rows())));
    }
    if delay < 0.0 {
        return Err(err("plant.D", format!("must be >= 0, got {delay}")));
    }
    let plant = Plant::new(a, b, delay).map_err(|e| err("plant", e.to_string()))?;
    let m = plant.inputs();

    let gains_v = field(top, "", "gains")?;
    let gains_o = object(gains_v, "gains")?;
    let k = matrix(field(gains_o, "gains", "K")?, "gains.K")?;
    let l = matrix(field(gains_o, "gains", "L")?, "gains.L")?;
    let period = number(field(gains_o, "gains", "T")?, "gains.T")?;
    if k.rows() != m || k.cols() != n {
        return Err(err("gains.K", format!("must be {m}x{n}, got {}x{}", k.rows(), k.cols())));
    }
    if l.rows() != n || l.cols() != n {
        return Err(err("gains.L", format!("must be {n}x{n}, got {}x{}", l.rows(), l.cols())));
    }
    if period <= 0.0 {
        return Err(err("gains.T", format!("must be > 0, got {period}")));
    }
    let gains = PredictorGains::new(k, l, period).map_err(|e| err("gains", e.to_string()))?;

    let sim_v = field(top, "", "sim")?;
    let sim_o = object(sim_v, "sim")?;
    let h = number(field(sim_o, "sim", "h")?, "sim.h")?;
    let t_end = number(field(sim_o, "sim", "t_end")?, "sim.t_end")?;
    let x0 = numbers(field(sim_o, "sim", "x0")?, "sim.x0")?;
    if h <= 0.0 {
        return Err(err("sim.h", format!("must be > 0, got {h}")));
    }
    if t_end < 0.0 {
        return Err(err("sim.t_end", format!("must be >= 0, got {t_end}")));
    }
    if x0.len() != n {
        return Err(err("sim.x0", format!("must have {n} entries, got {}", x0.len())));
    }
    aligned_steps(delay, h, "plant.D").map_err(|e| err("plant.D", e))?;
    aligned_steps(period, h, "gains.T").map_err(|e| err("gains.T", e))?;
    let x0 = Vector::new(x0).map_err(|e| err("sim.x0", e.to_string()))?;
    let sim = SimConfig::new(h, t_end, x0).map_err(|e| err("sim", e.to_string()))?;

    let mode = match top.get("mode") {
        None => SimMode::default(),
        Some(v) => v
            .as_str()
            .ok_or_else(|| err("mode", "expected a string"))?
            .parse()
            .map_err(|e: String| err("mode", e))?,
    };

    for key in top.keys() {
        if !["plant", "gains", "sim", "mode"].contains(&key.as_str()) {
            return Err(err(key, "unknown key"));
        }
    }

    Ok(Scenario {
        plant,
        gains,
        sim,
        mode,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Invalid { path: String, source: ScenarioError },
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: shown.clone(),
        source,
    })?;
    parse_scenario_str(&text).map_err(|source| LoadError::Invalid { path: shown, source })
}

fn matrix_json(m: &Matrix) -> Value {
    Value::from(m.to_rows())
}

/// Serializes a scenario; `parse_scenario_str` reads it back field-exact.
pub fn write_scenario(s: &Scenario) -> String {
    let v = json!({
        "plant": {
            "A": matrix_json(s.plant.a()),
            "B": matrix_json(s.plant.b()),
            "D": s.plant.delay(),
        },
        "gains": {
            "K": matrix_json(s.gains.k()),
            "L": matrix_json(s.gains.l()),
            "T": s.gains.period(),
        },
        "sim": {
            "h": s.sim.h,
            "t_end": s.sim.t_end,
            "x0": s.sim.x0.as_slice(),
        },
        "mode": s.mode.as_str(),
    });
    let mut text = serde_json::to_string_pretty(&v).expect("scenario values are finite");
    text.push('\n');
    text
}
