//! Flat-file serialization: raw little-endian f64 field dumps (row-major,
//! y-outer) with a JSON sidecar carrying chart metadata and component names,
//! plus the JSON diagnostics report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::grid::{Chart, ChartKind, ScalarField};
use crate::pipeline::{DiagnosticsReport, PipelineError};

pub const SCHEMA: &str = "conserv-stat/1";
pub const SIDECAR_FILE: &str = "fields.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChartMeta {
    pub kind: String,
    pub nx: usize,
    pub ny: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    pub hx: f64,
    pub hy: f64,
}

impl ChartMeta {
    pub fn of(chart: &Chart) -> Self {
        match chart.kind {
            ChartKind::Torus { rho } => ChartMeta {
                kind: "torus".into(),
                nx: chart.nx,
                ny: chart.ny,
                rho: Some(rho),
                half_width: None,
                hx: chart.hx,
                hy: chart.hy,
            },
            ChartKind::Disk { half_width } => ChartMeta {
                kind: "disk".into(),
                nx: chart.nx,
                ny: chart.ny,
                rho: None,
                half_width: Some(half_width),
                hx: chart.hx,
                hy: chart.hy,
            },
        }
    }

    pub fn build(&self) -> Result<Arc<Chart>, PipelineError> {
        match self.kind.as_str() {
            "torus" => Chart::torus(self.nx, self.ny, self.rho.unwrap_or(1.0))
                .map_err(|e| PipelineError::Parse(e.to_string())),
            "disk" => Chart::disk(self.nx, self.ny, self.half_width.unwrap_or(1.0))
                .map_err(|e| PipelineError::Parse(e.to_string())),
            other => Err(PipelineError::Parse(format!(
                "unknown chart kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ComponentMeta {
    name: String,
    file: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    schema: String,
    chart: ChartMeta,
    components: Vec<ComponentMeta>,
}

fn write_raw(path: &Path, field: &ScalarField) -> std::io::Result<()> {
    let mut bytes = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)
}

fn read_raw(path: &Path, chart: &Arc<Chart>) -> Result<ScalarField, PipelineError> {
    let bytes = fs::read(path)?;
    let expected = chart.len() * 8;
    if bytes.len() != expected {
        return Err(PipelineError::Parse(format!(
            "field dump {} has {} bytes, expected {expected}",
            path.display(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ScalarField::from_values(chart, values))
}

/// Dump named real fields (complex components are passed pre-split with
/// `.re` / `.im` suffixes) alongside the sidecar.
pub fn dump_fields(
    dir: &Path,
    chart: &Arc<Chart>,
    fields: &[(&str, &ScalarField)],
) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    let mut components = Vec::new();
    for (name, field) in fields {
        let file = format!("{name}.f64");
        write_raw(&dir.join(&file), field)?;
        components.push(ComponentMeta {
            name: (*name).into(),
            file,
        });
    }
    let sidecar = Sidecar {
        schema: SCHEMA.into(),
        chart: ChartMeta::of(chart),
        components,
    };
    fs::write(
        dir.join(SIDECAR_FILE),
        serde_json::to_string_pretty(&sidecar).expect("sidecar serialization"),
    )?;
    Ok(())
}

/// Load a dump directory: rebuilds the chart from the sidecar and returns
/// all components by name.
pub fn load_fields(
    dir: &Path,
) -> Result<(Arc<Chart>, BTreeMap<String, ScalarField>), PipelineError> {
    let sidecar_path = dir.join(SIDECAR_FILE);
    let text = fs::read_to_string(&sidecar_path)?;
    let sidecar: Sidecar = serde_json::from_str(&text)
        .map_err(|e| PipelineError::Parse(format!("sidecar {}: {e}", sidecar_path.display())))?;
    if sidecar.schema != SCHEMA {
        return Err(PipelineError::Parse(format!(
            "unsupported dump schema {:?}",
            sidecar.schema
        )));
    }
    let chart = sidecar.chart.build()?;
    let mut fields = BTreeMap::new();
    for comp in &sidecar.components {
        let field = read_raw(&dir.join(&comp.file), &chart)?;
        fields.insert(comp.name.clone(), field);
    }
    Ok((chart, fields))
}

pub fn write_report(report: &DiagnosticsReport, dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(report).expect("report serialization");
    text.push('\n');
    fs::write(dir.join(REPORT_FILE), text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<DiagnosticsReport, PipelineError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Parse(e.to_string()))
}
