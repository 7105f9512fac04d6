//! Example families with closed-form curvature: tubes over `∫ h e₀` in `E³`
//! and `L³`, and two surfaces of `H³` built from moving frames.

use serde::{Deserialize, Serialize};

use crate::ambient::{PseudoVec, SpaceForm};
use crate::curves::{
    solve_frame_system, Basis, Curve, CurveExpr, CurveTerm, FrameMatrix, FramedCurve, MatrixEntry,
};
use crate::error::{GeomError, Result};
use crate::geometry::{principal_curvatures, Grid};
use crate::profile::Profile;
use crate::tubes::{elliptic_tube, hyperbolic_tube, parabolic_tube, SurfacePatch};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExampleFamily {
    /// Tube of radius `r` around `∫₀ᵘ h e₀` in `E³ = R × C`.
    E3Tube { h: Profile, r: f64 },
    /// The same curve in `L³`, with the first coordinate timelike.
    L3Tube { h: Profile, r: f64 },
    /// Parabolic tube of `H³` whose `δ₊` has `⟨δ₊″, e₁⟩ = a`, `⟨δ₊″, δ₋⟩ = b`.
    H3Parabolic {
        a: Profile,
        b: Profile,
        /// RK4 steps for the frame; default is the flow's.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        steps: Option<usize>,
    },
    /// Hyperbolic tube of `H³` with `γ′ = h̃ e₀`, `r > 1`.
    H3Hyperbolic {
        h: Profile,
        r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        steps: Option<usize>,
    },
}

impl ExampleFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ExampleFamily::E3Tube { .. } => "e3_tube",
            ExampleFamily::L3Tube { .. } => "l3_tube",
            ExampleFamily::H3Parabolic { .. } => "h3_parabolic",
            ExampleFamily::H3Hyperbolic { .. } => "h3_hyperbolic",
        }
    }

    pub fn r(&self) -> f64 {
        match self {
            ExampleFamily::E3Tube { r, .. } | ExampleFamily::L3Tube { r, .. } | ExampleFamily::H3Hyperbolic { r, .. } => *r,
            ExampleFamily::H3Parabolic { .. } => 1.0,
        }
    }

    /// `inf |h| > r` for `E³`, `inf h > -r` for `L³`, checked at `u`.
    pub fn immersion_condition(&self, u: f64) -> bool {
        match self {
            ExampleFamily::E3Tube { h, r } => h.value(u).abs() > *r,
            ExampleFamily::L3Tube { h, r } => h.value(u) > -*r,
            _ => true,
        }
    }

    /// Parameters where the closed forms predict umbilic points.
    pub fn is_umbilic_parameter(&self, u: f64) -> bool {
        match self {
            ExampleFamily::E3Tube { h, .. } | ExampleFamily::L3Tube { h, .. } | ExampleFamily::H3Hyperbolic { h, .. } => {
                h.value(u) == 0.0
            }
            ExampleFamily::H3Parabolic { b, .. } => b.value(u) == 1.0,
        }
    }
}

fn circle_frame() -> (CurveExpr, CurveExpr) {
    let e1 = CurveExpr::new(vec![
        CurveTerm::new(Basis::Cos, 1.0, [0.0, 1.0, 0.0, 0.0]),
        CurveTerm::new(Basis::Sin, 1.0, [0.0, 0.0, 1.0, 0.0]),
    ]);
    (e1, CurveExpr::constant([1.0, 0.0, 0.0, 0.0]))
}

fn basis_rows() -> [PseudoVec; 4] {
    [PseudoVec::basis(0), PseudoVec::basis(1), PseudoVec::basis(2), PseudoVec::basis(3)]
}

fn zero_matrix() -> [[MatrixEntry; 4]; 4] {
    std::array::from_fn(|_| std::array::from_fn(|_| MatrixEntry::Const(0.0)))
}

/// Rows `(δ₊, T, δ₋, e₁)` of `R⁴₁` with `T = δ₊′`, `T′ = δ₊ + bδ₋ + a e₁`.
pub fn parabolic_frame_matrix(a: &Profile, b: &Profile) -> FrameMatrix {
    let mut m = zero_matrix();
    m[0][1] = MatrixEntry::Const(1.0);
    m[1][0] = MatrixEntry::Const(1.0);
    m[1][2] = MatrixEntry::profile(1.0, b.clone());
    m[1][3] = MatrixEntry::profile(1.0, a.clone());
    m[2][1] = MatrixEntry::profile(-1.0, b.clone());
    m[3][1] = MatrixEntry::profile(-1.0, a.clone());
    FrameMatrix { entries: m }
}

/// Rows `(γ, e₀, e₁, e₂)` with `γ′ = h̃ e₀`, `e₀′ = -h̃γ - e₁ + e₂`, `e₁′ = e₂′ = e₀`.
pub fn hyperbolic_frame_matrix(h: &Profile) -> FrameMatrix {
    let mut m = zero_matrix();
    m[0][1] = MatrixEntry::profile(1.0, h.clone());
    m[1][0] = MatrixEntry::profile(-1.0, h.clone());
    m[1][2] = MatrixEntry::Const(-1.0);
    m[1][3] = MatrixEntry::Const(1.0);
    m[2][1] = MatrixEntry::Const(1.0);
    m[3][1] = MatrixEntry::Const(1.0);
    FrameMatrix { entries: m }
}

fn start_parameter(domain: (f64, f64)) -> f64 {
    0.0f64.clamp(domain.0, domain.1)
}

/// Builds the family over `u ∈ domain`, with the default `v` range of its tube kind.
pub fn build_example(fam: &ExampleFamily, domain: (f64, f64)) -> Result<SurfacePatch> {
    let patch = match fam {
        ExampleFamily::E3Tube { h, r } => {
            let (e1, e2) = circle_frame();
            let curve = Curve::ProfileIntegral { h: h.clone() };
            let fc = FramedCurve::closed(SpaceForm::E3, curve, e1, e2, (1, 1), domain)?;
            elliptic_tube(fc, *r, 1, 1)?
        }
        ExampleFamily::L3Tube { h, r } => {
            let (e1, e2) = circle_frame();
            let curve = Curve::ProfileIntegral { h: h.clone() };
            let fc = FramedCurve::closed(SpaceForm::L3, curve, e1, e2, (1, -1), domain)?;
            hyperbolic_tube(fc, *r, 1, -1)?
        }
        ExampleFamily::H3Parabolic { a, b, steps } => {
            let m = parabolic_frame_matrix(a, b);
            let frame = solve_frame_system(&m, basis_rows(), 1, start_parameter(domain), domain, *steps)?;
            parabolic_tube(frame.parabolic_data(0, 2, 3)?)?
        }
        ExampleFamily::H3Hyperbolic { h, r, steps } => {
            let m = hyperbolic_frame_matrix(h);
            let rows = [
                PseudoVec::basis(1),
                PseudoVec::basis(2),
                PseudoVec::basis(3),
                PseudoVec::basis(0),
            ];
            let frame = solve_frame_system(&m, rows, 1, start_parameter(domain), domain, *steps)?;
            // the timelike e₂ plays the role of the theorem's e₁
            hyperbolic_tube(frame.framed_curve(0, 3, 2)?, *r, 1, 1)?
        }
    };
    let patch = patch.with_family(fam.name());
    check_immersion(&patch)?;
    Ok(patch)
}

fn check_immersion(sp: &SurfacePatch) -> Result<()> {
    let grid = Grid::new(16, 16);
    for (_, _, u, v) in grid.points(&sp.domain()) {
        match principal_curvatures(sp, u, v) {
            Ok(_) => return Ok(()),
            Err(GeomError::DegenerateTangentPlane { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Err(GeomError::ImmersionViolation)
}

/// `None` where the formula's denominator vanishes.
fn ratio(num: f64, den: f64) -> Option<f64> {
    (den.abs() > 1e-12).then(|| num / den)
}

/// The closed-form non-constant principal curvature.
pub fn closed_form_kappa1(fam: &ExampleFamily, u: f64, v: f64) -> Option<f64> {
    match fam {
        ExampleFamily::E3Tube { h, r } => ratio(v.cos(), h.value(u) + r * v.cos()),
        ExampleFamily::L3Tube { h, r } => ratio(v.cosh(), h.value(u) + r * v.cosh()),
        ExampleFamily::H3Parabolic { a, b, .. } => {
            let (a, b) = (a.value(u), b.value(u));
            ratio(1.0 - b, 1.0 - a * v + (1.0 - b) * v * v / 2.0).map(|q| 1.0 - q)
        }
        ExampleFamily::H3Hyperbolic { h, r, .. } => {
            let h = h.value(u);
            ratio(r * h + v.exp(), h + r * v.exp())
        }
    }
}

/// The hyperbolic family's `κ₁` with `h̃` given directly.
pub fn kappa1_frame_form(h_tilde: f64, r: f64, v: f64) -> f64 {
    (r * h_tilde + v.exp()) / (h_tilde + r * v.exp())
}

/// The other principal curvature of the second surface of Aledo and Gálvez, radius `R < 1`.
pub fn kappa1_aledo_galvez(hx: f64, hy: f64, big_r: f64, y: f64) -> f64 {
    let k = 1.0 - big_r * big_r;
    let ex = (k.sqrt() * y).exp();
    (hy + big_r * k * ex) / (big_r * hx + k * ex)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosscheckReport {
    pub big_r: f64,
    pub grid: (usize, usize),
    /// `h̃ = h / (1 - R²)`: the substitution under which the two formulas agree.
    pub max_discrepancy: f64,
    /// `h̃ = (1 - R²) h`, read literally.
    pub max_discrepancy_literal: f64,
    /// `h(x)` and `h(y)` are evaluated at the same parameter.
    pub same_variable_reading: bool,
}

/// Compares the two expressions of `κ₁` under `v = √(1-R²) y`, `r = 1/R`
/// over `(x, y) ∈ [-1, 1]²`, once with each reading of the `h̃` substitution.
pub fn aledo_galvez_crosscheck(big_r: f64, h: &Profile, n: usize) -> CrosscheckReport {
    assert!(big_r > 0.0 && big_r < 1.0, "R must lie in (0, 1)");
    let k = 1.0 - big_r * big_r;
    let r = 1.0 / big_r;
    let mut best = 0.0f64;
    let mut literal = 0.0f64;
    let step = if n > 1 { 2.0 / (n - 1) as f64 } else { 0.0 };
    for i in 0..n {
        let x = -1.0 + step * i as f64;
        let hx = h.value(x);
        for j in 0..n {
            let y = -1.0 + step * j as f64;
            let v = k.sqrt() * y;
            let gal = kappa1_aledo_galvez(hx, hx, big_r, y);
            best = best.max((kappa1_frame_form(hx / k, r, v) - gal).abs());
            literal = literal.max((kappa1_frame_form(hx * k, r, v) - gal).abs());
        }
    }
    CrosscheckReport {
        big_r,
        grid: (n, n),
        max_discrepancy: best,
        max_discrepancy_literal: literal,
        same_variable_reading: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_examples() {
        let torus = ExampleFamily::E3Tube {
            h: Profile::constant(3.0),
            r: 1.0,
        };
        assert!(closed_form_kappa1(&torus, 0.2, std::f64::consts::FRAC_PI_2).unwrap().abs() < 1e-16);
        assert_eq!(closed_form_kappa1(&torus, 0.2, 0.0), Some(0.25));
        let umb = ExampleFamily::H3Parabolic {
            a: Profile::constant(0.0),
            b: Profile::constant(1.0),
            steps: None,
        };
        assert_eq!(closed_form_kappa1(&umb, 0.3, 1.7), Some(1.0));
        let vertex = ExampleFamily::H3Hyperbolic {
            h: Profile::constant(0.0),
            r: 2.0,
            steps: None,
        };
        assert!((closed_form_kappa1(&vertex, 0.0, 0.8).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn crosscheck_readings() {
        let rep = aledo_galvez_crosscheck(0.5, &Profile::constant(1.0), 16);
        assert!(rep.max_discrepancy < 1e-10);
        assert!(rep.max_discrepancy_literal > 1e-2);
        let zero = aledo_galvez_crosscheck(0.5, &Profile::constant(0.0), 16);
        assert!(zero.max_discrepancy < 1e-15);
        assert!((kappa1_aledo_galvez(0.0, 0.0, 0.5, 0.3) - 0.5).abs() < 1e-15);
        let rep = aledo_galvez_crosscheck(0.9, &Profile::constant(2.0), 16);
        assert!(rep.max_discrepancy < 1e-10);
    }

    #[test]
    fn immersion_conditions() {
        let e3 = ExampleFamily::E3Tube {
            h: Profile::Poly { coeffs: vec![0.0, 0.0, 1.0] },
            r: 1.0,
        };
        assert!(!e3.immersion_condition(0.5));
        assert!(e3.immersion_condition(1.5));
        let l3 = ExampleFamily::L3Tube {
            h: Profile::constant(0.0),
            r: 1.0,
        };
        assert!(l3.immersion_condition(0.0));
    }
}
