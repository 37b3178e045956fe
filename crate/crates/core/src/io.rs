//! JSON data files and flat `j,k,value` exports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::lattice::{BoundaryTerms, Grid, InstantonData, LatticeShape, MatrixLatticeField};
use crate::solver::{SolveOutcome, SolverConfig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub max_abs: f64,
    pub scaled_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualSummary>,
    #[serde(default)]
    pub version: String,
}

/// On-disk instanton data: `F` is `n2 x (n1 - 1)`, `G` is `(n2 - 1) x n1`,
/// rows indexed by `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub n1: usize,
    pub n2: usize,
    pub p: usize,
    pub f: Grid<f64>,
    pub g: Grid<f64>,
    pub a0: Option<f64>,
    pub b0: Option<f64>,
    pub metadata: Metadata,
}

impl DataFile {
    pub fn from_data(data: &InstantonData, metadata: Metadata) -> Self {
        Self {
            n1: data.n1(),
            n2: data.n2(),
            p: 1,
            f: data.f().clone(),
            g: data.g().clone(),
            a0: Some(data.a0()),
            b0: Some(data.b0()),
            metadata,
        }
    }

    pub fn from_outcome(outcome: &SolveOutcome, config: &SolverConfig) -> Self {
        Self::from_data(
            &outcome.data,
            Metadata {
                solver: Some(config.clone()),
                iterations: Some(outcome.iterations),
                residual: Some(ResidualSummary {
                    max_abs: outcome.report.max_abs,
                    scaled_max: outcome.report.scaled_max,
                }),
                version: VERSION.to_string(),
            },
        )
    }

    /// Strictly positive instanton data; fails if any value is not positive.
    pub fn to_instanton(&self) -> Result<InstantonData> {
        let a0 = self
            .a0
            .ok_or_else(|| Error::Schema("$.a0: missing".into()))?;
        let b0 = self
            .b0
            .ok_or_else(|| Error::Schema("$.b0: missing".into()))?;
        InstantonData::new(self.n1, self.n2, self.f.clone(), self.g.clone(), a0, b0)
    }

    /// Scalar zero-padded field, without any positivity requirement.
    pub fn to_field(&self) -> Result<MatrixLatticeField> {
        MatrixLatticeField::from_real(
            LatticeShape::zero_padded(self.n1, self.n2, 1)?,
            &self.f,
            &self.g,
        )
    }

    /// Boundary terms, with a missing value read as zero.
    pub fn boundary_terms(&self) -> BoundaryTerms {
        BoundaryTerms::scalar(self.a0.unwrap_or(0.0), self.b0.unwrap_or(0.0), 1)
    }

    /// Entries that are not strictly positive, as `(name, j, k, value)` with
    /// 1-based indices.
    pub fn non_positive(&self) -> Vec<(&'static str, usize, usize, f64)> {
        let mut out = Vec::new();
        for (name, grid) in [("F", &self.f), ("G", &self.g)] {
            for ((j, k), &v) in grid.indexed_iter() {
                if !(v > 0.0) {
                    out.push((name, j + 1, k + 1, v));
                }
            }
        }
        for (name, v) in [("a0", self.a0), ("b0", self.b0)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    out.push((name, 1, 1, v));
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let grid = |g: &Grid<f64>| Value::from(g.to_rows());
        let mut m = Map::new();
        m.insert("n1".into(), self.n1.into());
        m.insert("n2".into(), self.n2.into());
        m.insert("p".into(), self.p.into());
        m.insert("F".into(), grid(&self.f));
        m.insert("G".into(), grid(&self.g));
        if let Some(a0) = self.a0 {
            m.insert("a0".into(), a0.into());
        }
        if let Some(b0) = self.b0 {
            m.insert("b0".into(), b0.into());
        }
        m.insert(
            "metadata".into(),
            serde_json::to_value(&self.metadata).expect("metadata serializes"),
        );
        Value::Object(m)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Schema("$: expected an object".into()))?;
        let get = |key: &str| {
            obj.get(key)
                .ok_or_else(|| Error::Schema(format!("$.{key}: missing")))
        };
        let n1 = positive_int(get("n1")?, "$.n1")?;
        let n2 = positive_int(get("n2")?, "$.n2")?;
        let p = positive_int(get("p")?, "$.p")?;
        if p != 1 {
            return Err(Error::Schema(format!(
                "$.p: only p = 1 data files are supported, got {p}"
            )));
        }
        let f = grid(get("F")?, "$.F", n2, n1 - 1)?;
        let g = grid(get("G")?, "$.G", n2 - 1, n1)?;
        let boundary = |key: &str| -> Result<Option<f64>> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(v) => {
                    let x = finite(v, &format!("$.{key}"))?;
                    if !(x > 0.0) {
                        return Err(Error::Schema(format!("$.{key}: must be positive, got {x}")));
                    }
                    Ok(Some(x))
                }
            }
        };
        let a0 = boundary("a0")?;
        let b0 = boundary("b0")?;
        let metadata = match obj.get("metadata") {
            None | Some(Value::Null) => Metadata::default(),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| Error::Schema(format!("$.metadata: {e}")))?,
        };
        Ok(Self {
            n1,
            n2,
            p,
            f,
            g,
            a0,
            b0,
            metadata,
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("$: invalid JSON: {e}")))?;
        Self::from_json(&value)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json_string())
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

fn positive_int(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .filter(|&n| n >= 1)
        .map(|n| n as usize)
        .ok_or_else(|| Error::Schema(format!("{path}: expected a positive integer, got {v}")))
}

fn finite(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Schema(format!("{path}: expected a finite number, got {v}")))
}

fn grid(v: &Value, path: &str, rows: usize, cols: usize) -> Result<Grid<f64>> {
    let outer = v
        .as_array()
        .ok_or_else(|| Error::Schema(format!("{path}: expected an array of {rows} rows")))?;
    if outer.len() != rows {
        return Err(Error::Schema(format!(
            "{path}: expected {rows} rows, got {}",
            outer.len()
        )));
    }
    let mut data = Vec::with_capacity(rows);
    for (j, row) in outer.iter().enumerate() {
        let rp = format!("{path}[{j}]");
        let inner = row
            .as_array()
            .ok_or_else(|| Error::Schema(format!("{rp}: expected an array of {cols} numbers")))?;
        if inner.len() != cols {
            return Err(Error::Schema(format!(
                "{rp}: expected {cols} entries, got {}",
                inner.len()
            )));
        }
        data.push(
            inner
                .iter()
                .enumerate()
                .map(|(k, x)| finite(x, &format!("{rp}[{k}]")))
                .collect::<Result<Vec<f64>>>()?,
        );
    }
    Ok(Grid::from_rows(data).expect("row lengths checked"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportField {
    F,
    G,
}

impl std::str::FromStr for ExportField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "F" | "f" => Ok(ExportField::F),
            "G" | "g" => Ok(ExportField::G),
            other => Err(Error::InvalidConfig(format!(
                "unknown field {other:?}; expected F or G"
            ))),
        }
    }
}

/// `(j, k, value)` rows with 1-based indices in `j`-major order.
pub fn export_rows(file: &DataFile, field: ExportField) -> Vec<(usize, usize, f64)> {
    let grid = match field {
        ExportField::F => &file.f,
        ExportField::G => &file.g,
    };
    grid.indexed_iter()
        .map(|((j, k), &v)| (j + 1, k + 1, v))
        .collect()
}

/// CSV with header `j,k,value`. Values use the shortest representation
/// that parses back to the same float.
pub fn export_csv(file: &DataFile, field: ExportField) -> String {
    let mut out = String::from("j,k,value\n");
    for (j, k, v) in export_rows(file, field) {
        writeln!(out, "{j},{k},{v:?}").expect("writing to a string");
    }
    out
}

pub fn export_json(file: &DataFile, field: ExportField) -> String {
    let rows: Vec<Value> = export_rows(file, field)
        .into_iter()
        .map(|(j, k, v)| serde_json::json!({ "j": j, "k": k, "value": v }))
        .collect();
    let mut s = serde_json::to_string_pretty(&Value::Array(rows)).expect("serializable");
    s.push('\n');
    s
}

/// Parses a `j,k,value` table back into rows.
pub fn parse_csv(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("j,k,value") => {}
        other => {
            return Err(Error::Schema(format!(
                "csv header: expected \"j,k,value\", got {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let bad = || Error::Schema(format!("csv line {}: cannot parse {line:?}", i + 2));
            let mut parts = line.split(',');
            let j = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let k = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            let v = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() {
                return Err(bad());
            }
            Ok((j, k, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::closed_form;

    fn sample() -> DataFile {
        let data = closed_form(2, 4, 1.0 / 6f64.sqrt()).unwrap();
        DataFile::from_data(&data, Metadata::default())
    }

    #[test]
    fn json_round_trip_is_exact() {
        let file = sample();
        let back = DataFile::from_json_str(&file.to_json_string()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_instanton().unwrap().b0(), file.b0.unwrap());
    }

    #[test]
    fn awkward_floats_survive_json() {
        let vals = [
            1.0000000000000007,
            123.456_789_012_345_68,
            f64::MIN_POSITIVE,
            1e300,
            std::f64::consts::PI,
            0.1 + 0.2,
        ];
        let mut i = 0;
        let mut next = || {
            i += 1;
            vals[i % vals.len()] * (1.0 + i as f64 * f64::EPSILON)
        };
        let data = InstantonData::new(
            3,
            3,
            Grid::from_fn(3, 2, |_, _| next()),
            Grid::from_fn(2, 3, |_, _| next()),
            next(),
            next(),
        )
        .unwrap();
        let file = DataFile::from_data(&data, Metadata::default());
        let back = DataFile::from_json_str(&file.to_json_string()).unwrap();
        for (x, y) in file
            .f
            .iter()
            .chain(file.g.iter())
            .zip(back.f.iter().chain(back.g.iter()))
        {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(back.a0.unwrap().to_bits(), file.a0.unwrap().to_bits());
    }

    #[test]
    fn schema_errors_carry_paths() {
        let mut v = sample().to_json();
        v["F"][2][0] = Value::String("x".into());
        let err = DataFile::from_json(&v).unwrap_err().to_string();
        assert!(err.contains("$.F[2][0]"), "{err}");

        let mut v = sample().to_json();
        v["G"].as_array_mut().unwrap().pop();
        let err = DataFile::from_json(&v).unwrap_err().to_string();
        assert!(err.contains("$.G") && err.contains("3 rows"), "{err}");

        let mut v = sample().to_json();
        v.as_object_mut().unwrap().remove("n1");
        assert!(DataFile::from_json(&v)
            .unwrap_err()
            .to_string()
            .contains("$.n1"));

        let mut v = sample().to_json();
        v["b0"] = Value::from(-1.0);
        assert!(DataFile::from_json(&v)
            .unwrap_err()
            .to_string()
            .contains("$.b0"));

        assert!(DataFile::from_json_str("[1, 2]")
            .unwrap_err()
            .to_string()
            .contains("$:"));
    }

    #[test]
    fn zero_entry_loads_and_is_flagged() {
        let mut v = sample().to_json();
        v["F"][1][0] = Value::from(0.0);
        let file = DataFile::from_json(&v).unwrap();
        assert_eq!(file.non_positive(), vec![("F", 2, 1, 0.0)]);
        assert!(file.to_instanton().is_err());
        assert!(file.to_field().is_ok());
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let file = sample();
        let csv = export_csv(&file, ExportField::G);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("j,k,value"));
        assert!(lines.next().unwrap().starts_with("1,1,"));
        assert!(lines.next().unwrap().starts_with("1,2,"));
        let rows = parse_csv(&csv).unwrap();
        assert_eq!(rows, export_rows(&file, ExportField::G));
        assert_eq!(rows.len(), 6);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!("H".parse::<ExportField>().is_err());
        assert_eq!("F".parse::<ExportField>().unwrap(), ExportField::F);
    }
}
