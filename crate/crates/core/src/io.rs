//! JSON file formats.
//!
//! Measures: `{"dim": d, "atoms": [{"p": [..], "w": ..}, ...]}`.
//! Couplings: `{"source": [...points], "target": [...points], "mass": [[...], ...]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{DiscreteMeasure, Point};
use crate::transport::Coupling;

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    p: Vec<f64>,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct MeasureRecord {
    dim: usize,
    atoms: Vec<AtomRecord>,
}

pub fn measure_to_json(mu: &DiscreteMeasure) -> String {
    let rec = MeasureRecord {
        dim: mu.dim(),
        atoms: mu
            .atoms()
            .iter()
            .map(|a| AtomRecord {
                p: a.point.coords().to_vec(),
                w: a.weight,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&rec).expect("serializable")
}

pub fn measure_from_json(text: &str) -> Result<DiscreteMeasure> {
    let rec: MeasureRecord =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    let mut points = Vec::with_capacity(rec.atoms.len());
    let mut weights = Vec::with_capacity(rec.atoms.len());
    for a in rec.atoms {
        if a.p.len() != rec.dim {
            return Err(Error::DimensionMismatch {
                expected: rec.dim,
                found: a.p.len(),
            });
        }
        points.push(Point::new(a.p)?);
        weights.push(a.w);
    }
    DiscreteMeasure::new(points, weights)
}

pub fn read_measure(path: impl AsRef<Path>) -> Result<DiscreteMeasure> {
    let path = path.as_ref();
    let text =
        fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    measure_from_json(&text)
}

pub fn coupling_to_json(plan: &Coupling) -> String {
    serde_json::to_string_pretty(plan).expect("serializable")
}

pub fn coupling_from_json(text: &str) -> Result<Coupling> {
    let plan: Coupling = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    plan.validate()?;
    Ok(plan)
}
