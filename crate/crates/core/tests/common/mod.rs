#![allow(dead_code)]

use cpc_core::ambient::{PseudoVec, SpaceForm};
use cpc_core::curves::{transport_normal_frame, Basis, Curve, CurveExpr, CurveTerm, FramedCurve, ParabolicData};
use cpc_core::examples::{build_example, ExampleFamily};
use cpc_core::profile::Profile;
use cpc_core::tubes::{elliptic_tube, hyperbolic_tube, parabolic_tube, SurfacePatch};

/// `u = 0` is node 32 of 64.
pub const U_DOMAIN: (f64, f64) = (-1.0, 0.968_75);

pub fn term(b: Basis, v: [f64; 4]) -> CurveTerm {
    CurveTerm::new(b, 1.0, v)
}

pub fn konst(v: [f64; 4]) -> CurveExpr {
    CurveExpr::constant(v)
}

pub fn e(i: usize) -> [f64; 4] {
    PseudoVec::basis(i).0
}

/// `cos u eᵢ + sin u eⱼ`
pub fn circle(i: usize, j: usize) -> CurveExpr {
    CurveExpr::new(vec![term(Basis::Cos, e(i)), term(Basis::Sin, e(j))])
}

/// `cosh u eᵢ + sinh u eⱼ`
pub fn hyperbola(i: usize, j: usize) -> CurveExpr {
    CurveExpr::new(vec![term(Basis::Cosh, e(i)), term(Basis::Sinh, e(j))])
}

/// Geodesic of `H³` with constant frame `(e₃, e₄)`; elliptic for `r < 1`.
pub fn h3_geodesic_elliptic(r: f64) -> SurfacePatch {
    let fc = FramedCurve::closed(SpaceForm::H3, Curve::Expr(hyperbola(0, 1)), konst(e(2)), konst(e(3)), (1, 1), (-1.0, 1.0))
        .unwrap();
    elliptic_tube(fc, r, 1, 1).unwrap()
}

/// Clifford-type tube around the great circle in the `e₁e₂` plane.
pub fn s3_great_circle(r: f64) -> SurfacePatch {
    let fc = FramedCurve::closed(SpaceForm::S3, Curve::Expr(circle(0, 1)), konst(e(2)), konst(e(3)), (1, 1), (-1.0, 1.0))
        .unwrap();
    elliptic_tube(fc, r, 1, 1).unwrap()
}

/// Spacelike geodesic of `dS³` with frame `(e₁, e₄)`; hyperbolic tube in `H³` for `r > 1`.
pub fn h3_geodesic_hyperbolic(r: f64) -> SurfacePatch {
    let fc = FramedCurve::closed(SpaceForm::DS3, Curve::Expr(circle(1, 2)), konst(e(0)), konst(e(3)), (-1, 1), (-1.0, 1.0))
        .unwrap();
    hyperbolic_tube(fc, r, 1, 1).unwrap()
}

/// Parabolic tube in `H³` around `δ₊ = cosh u e₁ + sinh u e₂`, `δ₋ = e₄`, `e₁ = e₃`.
pub fn h3_parabolic() -> SurfacePatch {
    let pd = ParabolicData::closed(SpaceForm::H3, hyperbola(0, 1), konst(e(3)), konst(e(2)), 1, (-1.0, 1.0)).unwrap();
    parabolic_tube(pd).unwrap()
}

/// `H³` tube of radius `r` in whichever regime `r` selects.
pub fn h3_scene(r: f64) -> SurfacePatch {
    if r < 1.0 {
        h3_geodesic_elliptic(r)
    } else if r > 1.0 {
        h3_geodesic_hyperbolic(r)
    } else {
        h3_parabolic()
    }
}

/// Helix `(cos u, sin u, k u)` in `E³` with a transported frame.
pub fn e3_helix(k: f64, r: f64, steps: Option<usize>) -> SurfacePatch {
    let curve = Curve::Expr(CurveExpr::new(vec![
        term(Basis::Cos, e(0)),
        term(Basis::Sin, e(1)),
        term(Basis::Lin, [0.0, 0.0, k, 0.0]),
    ]));
    let n = (1.0 + k * k).sqrt();
    let fc = transport_normal_frame(
        curve,
        SpaceForm::E3,
        (PseudoVec::basis(0), PseudoVec::new(0.0, k / n, -1.0 / n, 0.0)),
        0.0,
        (-1.0, 1.0),
        steps,
    )
    .unwrap();
    elliptic_tube(fc, r, 1, 1).unwrap()
}

/// `(1,2)` torus knot on the Clifford torus of `S³` with a transported frame.
pub fn s3_torus_knot(r: f64) -> SurfacePatch {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let curve = Curve::Expr(CurveExpr::new(vec![
        CurveTerm::new(Basis::Cos, 1.0, [s, 0.0, 0.0, 0.0]),
        CurveTerm::new(Basis::Sin, 1.0, [0.0, s, 0.0, 0.0]),
        CurveTerm::new(Basis::Cos, 2.0, [0.0, 0.0, s, 0.0]),
        CurveTerm::new(Basis::Sin, 2.0, [0.0, 0.0, 0.0, s]),
    ]));
    let q = 5f64.sqrt();
    let fc = transport_normal_frame(
        curve,
        SpaceForm::S3,
        (PseudoVec::new(s, 0.0, -s, 0.0), PseudoVec::new(0.0, 2.0 / q, 0.0, -1.0 / q)),
        0.0,
        (-1.0, 1.0),
        None,
    )
    .unwrap();
    elliptic_tube(fc, r, 1, 1).unwrap()
}

pub fn example(fam: &ExampleFamily) -> SurfacePatch {
    build_example(fam, U_DOMAIN).unwrap()
}

pub fn e3_family(h: Profile) -> ExampleFamily {
    ExampleFamily::E3Tube { h, r: 1.0 }
}

pub fn u_squared() -> Profile {
    Profile::Poly { coeffs: vec![0.0, 0.0, 1.0] }
}

/// Profile equal to `base` outside `|u| < 1/2`, dipping to `base - depth` at 0.
pub fn dip(base: f64, depth: f64) -> Profile {
    Profile::Dip { base, depth, center: 0.0, width: 0.5 }
}
