//! Mesh output: OBJ through a 3D chart, CSV with the full 4D data.

use std::io::{Read, Write};

use cpc_core::ambient::{quadric_residual, PseudoVec, SpaceForm};
use cpc_core::geometry::{sample_grid, Grid, NodeSample, NodeStatus};
use cpc_core::tubes::SurfacePatch;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Chart {
    /// First three coordinates.
    None,
    /// `x ↦ (x₂, x₃, x₄)/(1 + x₁)` on `H³`.
    Poincare,
    /// `x ↦ (x₂, x₃, x₄)/(1 + x₁)` on `S³`, from the pole `-e₁`.
    Stereographic,
}

impl Chart {
    pub fn parse(name: &str) -> Result<Chart, CliError> {
        match name {
            "none" => Ok(Chart::None),
            "poincare" => Ok(Chart::Poincare),
            "stereographic" => Ok(Chart::Stereographic),
            _ => Err(CliError::InvalidScene(format!(
                "unknown chart {name:?}; expected none, poincare or stereographic"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Chart::None => "none",
            Chart::Poincare => "poincare",
            Chart::Stereographic => "stereographic",
        }
    }

    /// The natural chart of a space.
    pub fn default_for(space: SpaceForm) -> Chart {
        if space == SpaceForm::H3 {
            Chart::Poincare
        } else if space == SpaceForm::S3 {
            Chart::Stereographic
        } else {
            Chart::None
        }
    }

    /// Checks the chart applies to `space`; returns a warning when it is not isometric.
    pub fn check(&self, space: SpaceForm) -> Result<Option<String>, CliError> {
        let unsupported = || CliError::UnsupportedChart {
            chart: self.name().to_string(),
            space: space.name().to_string(),
        };
        match self {
            Chart::Poincare if space != SpaceForm::H3 => Err(unsupported()),
            Chart::Stereographic if space != SpaceForm::S3 => Err(unsupported()),
            Chart::None if space == SpaceForm::E3 => Ok(None),
            Chart::None => Ok(Some(format!(
                "chart none on {} keeps the first three coordinates and is not isometric",
                space.name()
            ))),
            _ => Ok(None),
        }
    }

    pub fn apply(&self, x: &PseudoVec) -> [f64; 3] {
        match self {
            Chart::None => [x[0], x[1], x[2]],
            Chart::Poincare | Chart::Stereographic => {
                let d = 1.0 + x[0];
                [x[1] / d, x[2] / d, x[3] / d]
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Obj,
    Csv,
}

impl Format {
    pub fn parse(name: &str) -> Result<Format, CliError> {
        match name {
            "obj" => Ok(Format::Obj),
            "csv" => Ok(Format::Csv),
            _ => Err(CliError::InvalidScene(format!("unknown format {name:?}; expected obj or csv"))),
        }
    }
}

/// Grid vertices with quad connectivity and per-vertex scalars.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshOutput {
    pub nu: usize,
    pub nv: usize,
    pub vertices: Vec<PseudoVec>,
    pub chart: Option<(Chart, Vec<[f64; 3]>)>,
    /// Zero-based vertex indices.
    pub quads: Vec<[usize; 4]>,
    pub k1: Vec<Option<f64>>,
    pub k2: Vec<Option<f64>>,
    pub umbilic: Vec<bool>,
    pub nodes: Vec<NodeSample>,
}

impl MeshOutput {
    pub fn from_patch(sp: &SurfacePatch, grid: Grid, chart: Option<Chart>) -> MeshOutput {
        let nodes = sample_grid(sp, grid);
        let vertices: Vec<PseudoVec> = nodes
            .iter()
            .map(|n| n.point.unwrap_or(PseudoVec::splat(f64::NAN)))
            .collect();
        let periodic = sp.domain().v_periodic;
        let (nu, nv) = (grid.nu, grid.nv);
        let at = |i: usize, j: usize| i * nv + j;
        let jmax = if periodic { nv } else { nv - 1 };
        let mut quads = Vec::new();
        for i in 0..nu - 1 {
            for j in 0..jmax {
                let jn = (j + 1) % nv;
                let q = [at(i, j), at(i + 1, j), at(i + 1, jn), at(i, jn)];
                if q.iter().all(|&k| vertices[k].is_finite()) {
                    quads.push(q);
                }
            }
        }
        let chart = chart.map(|c| (c, vertices.iter().map(|x| c.apply(x)).collect()));
        MeshOutput {
            nu,
            nv,
            k1: nodes.iter().map(|n| n.k1).collect(),
            k2: nodes.iter().map(|n| n.k2).collect(),
            umbilic: nodes.iter().map(|n| n.status == NodeStatus::Umbilic).collect(),
            vertices,
            chart,
            quads,
            nodes,
        }
    }

    pub fn write_obj(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "# {} x {} grid", self.nu, self.nv)?;
        match &self.chart {
            Some((c, pts)) => {
                writeln!(out, "# chart {}", c.name())?;
                for p in pts {
                    writeln!(out, "v {:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
                }
            }
            None => {
                for x in &self.vertices {
                    writeln!(out, "v {:.16e} {:.16e} {:.16e}", x[0], x[1], x[2])?;
                }
            }
        }
        for q in &self.quads {
            writeln!(out, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1)?;
        }
        Ok(())
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        for n in &self.nodes {
            w.serialize(CsvRow::from_node(n)).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::Parse {
            path: Default::default(),
            message: e.to_string(),
        })?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Parse {
        path: Default::default(),
        message: e.to_string(),
    }
}

/// Scientific notation with 17 significant digits; empty when absent.
mod sig17 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_str(&format!("{x:.16e}")),
            None => s.serialize_str(""),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Ok(None);
        }
        s.parse().map(Some).map_err(serde::de::Error::custom)
    }
}

/// One grid node of the CSV export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub i: usize,
    pub j: usize,
    #[serde(with = "sig17")]
    pub u: Option<f64>,
    #[serde(with = "sig17")]
    pub v: Option<f64>,
    #[serde(with = "sig17")]
    pub x1: Option<f64>,
    #[serde(with = "sig17")]
    pub x2: Option<f64>,
    #[serde(with = "sig17")]
    pub x3: Option<f64>,
    #[serde(with = "sig17")]
    pub x4: Option<f64>,
    #[serde(with = "sig17")]
    pub k1: Option<f64>,
    #[serde(with = "sig17")]
    pub k2: Option<f64>,
    pub umbilic: u8,
    pub status: String,
}

impl CsvRow {
    pub fn from_node(n: &NodeSample) -> CsvRow {
        let x = |k: usize| n.point.map(|p| p[k]);
        CsvRow {
            i: n.i,
            j: n.j,
            u: Some(n.u),
            v: Some(n.v),
            x1: x(0),
            x2: x(1),
            x3: x(2),
            x4: x(3),
            k1: n.k1,
            k2: n.k2,
            umbilic: u8::from(n.status == NodeStatus::Umbilic),
            status: serde_plain_status(n.status),
        }
    }

    pub fn point(&self) -> Option<PseudoVec> {
        Some(PseudoVec::new(self.x1?, self.x2?, self.x3?, self.x4?))
    }
}

fn serde_plain_status(s: NodeStatus) -> String {
    match s {
        NodeStatus::Regular => "regular",
        NodeStatus::Umbilic => "umbilic",
        NodeStatus::NonImmersion => "non_immersion",
        NodeStatus::NullNormal => "null_normal",
        NodeStatus::NonDiagonalizable => "non_diagonalizable",
        NodeStatus::Breakdown => "breakdown",
    }
    .to_string()
}

pub fn read_csv(input: &mut dyn Read) -> Result<Vec<CsvRow>, CliError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// `(max |κ₂ - 1/r|, max quadric residual)` over evaluated rows.
pub fn csv_residuals(rows: &[CsvRow], r: f64, space: SpaceForm) -> (f64, f64) {
    let mut k2 = 0.0f64;
    let mut quad = 0.0f64;
    for row in rows {
        if let Some(p) = row.point() {
            quad = quad.max(quadric_residual(&p, space).abs());
        }
        if row.status == "regular" || row.status == "umbilic" {
            if let Some(k) = row.k2 {
                k2 = k2.max((k - 1.0 / r).abs());
            }
        }
    }
    (k2, quad)
}
