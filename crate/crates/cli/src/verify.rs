//! The full verification run behind `cpc verify`.

use cpc_core::geometry::{
    constant_pc_verify, geodesic_foliation_check, polar_spectral_check, reconstruct_generating_curve,
    CurvatureReport, FoliationReport, Grid, Reconstruction,
};
use cpc_core::tubes::{polar_surface, SurfacePatch};
use cpc_core::GeomError;
use serde::Serialize;

use crate::scene::Built;

/// Points off the quadric beyond this fail verification.
pub const QUADRIC_TOL: f64 = 1e-10;
/// Relative reciprocal-curvature tolerance for the polar.
pub const POLAR_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct ReconstructionSummary {
    pub home: String,
    pub c: f64,
    pub v_spread: f64,
    pub norm_residual: f64,
    pub home_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PolarSummary {
    pub space: String,
    pub max_reciprocal_residual: f64,
    /// Residual relative to `1 + |1/κ|`; this is what passes or fails.
    pub max_relative_residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub scene: String,
    pub space: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<String>,
    pub passed: bool,
    /// Some step hit a numerical breakdown rather than a failed check.
    pub breakdown: bool,
    pub tol: f64,
    pub curvature: CurvatureReport,
    /// Distinct `u` values of umbilic nodes.
    pub umbilic_u: Vec<f64>,
    pub foliation: FoliationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polar: Option<PolarSummary>,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub reconstructed: Option<Reconstruction>,
}

impl VerifyReport {
    /// 0 pass, 1 failed check, 3 numerical breakdown.
    pub fn exit_code(&self) -> u8 {
        if self.passed {
            0
        } else if self.breakdown {
            3
        } else {
            1
        }
    }
}

fn is_breakdown(e: &GeomError) -> bool {
    !matches!(
        e,
        GeomError::ImmersionViolation | GeomError::VanishingPrincipalCurvature { .. }
    )
}

pub fn summarize(rec: &Reconstruction, tol: f64) -> ReconstructionSummary {
    ReconstructionSummary {
        home: rec.home_label.clone(),
        c: rec.c,
        v_spread: rec.v_spread,
        norm_residual: rec.norm_residual,
        home_residual: rec.home_residual,
        passed: rec.v_spread < tol && rec.norm_residual < tol && rec.home_residual < tol,
    }
}

pub fn polar_check(sp: &SurfacePatch, grid: Grid) -> Result<PolarSummary, GeomError> {
    let polar = polar_surface(sp)?;
    let worst = polar_spectral_check(sp, &polar, grid);
    Ok(PolarSummary {
        space: polar.space().name().to_string(),
        max_reciprocal_residual: worst.absolute,
        max_relative_residual: worst.relative,
        passed: worst.evaluated > 0 && worst.relative < POLAR_TOL,
    })
}

pub fn verify(built: &Built) -> VerifyReport {
    let sp = &built.patch;
    let scene = &built.scene;
    let grid = Grid::new(scene.grid[0], scene.grid[1]);
    let tol = scene.tol;
    let curvature = constant_pc_verify(sp, grid, tol);
    let foliation = geodesic_foliation_check(sp, grid);
    let mut notes = Vec::new();
    let mut passed = curvature.passed && foliation.passed && curvature.max_quadric_residual < QUADRIC_TOL;
    let mut breakdown = !curvature.breakdown.is_empty();
    if curvature.evaluated == 0 {
        notes.push("no immersed diagonalizable node to evaluate".into());
    }
    if !curvature.non_diagonalizable.is_empty() {
        notes.push(format!(
            "shape operator not real-diagonalizable at {} nodes",
            curvature.non_diagonalizable.len()
        ));
    }

    let mut umbilic_u: Vec<f64> = curvature.umbilic.iter().map(|&(i, j)| curvature.node(i, j).u).collect();
    umbilic_u.dedup();

    let mut reconstructed = None;
    let reconstruction = if sp.declared_r().is_none() {
        notes.push("no declared radius: reconstruction and polar checks skipped".into());
        None
    } else {
        match reconstruct_generating_curve(sp, grid) {
            Ok(rec) => {
                let s = summarize(&rec, tol);
                passed &= s.passed;
                reconstructed = Some(rec);
                Some(s)
            }
            Err(e) => {
                notes.push(format!("reconstruction failed: {e}"));
                breakdown |= is_breakdown(&e);
                passed = false;
                None
            }
        }
    };

    let polar = if sp.declared_r().is_none() {
        None
    } else if sp.space().is_flat() {
        notes.push("flat space: polar check skipped".into());
        None
    } else {
        match polar_check(sp, grid) {
            Ok(p) => {
                passed &= p.passed;
                Some(p)
            }
            Err(GeomError::VanishingPrincipalCurvature { u, v }) => {
                notes.push(format!("principal curvature vanishes near ({u}, {v}): polar check skipped"));
                None
            }
            Err(e) => {
                notes.push(format!("polar failed: {e}"));
                breakdown |= is_breakdown(&e);
                passed = false;
                None
            }
        }
    };

    VerifyReport {
        scene: scene.name.clone(),
        space: sp.space().name().to_string(),
        classification: built.classification.as_ref().map(|c| c.to_string()),
        passed,
        breakdown,
        tol,
        curvature,
        umbilic_u,
        foliation,
        reconstruction,
        polar,
        notes,
        reconstructed,
    }
}
