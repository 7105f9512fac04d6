//! Polar surfaces, tube distances, generating-curve reconstruction and jet integrity.

mod common;

use common::*;
use cpc_core::ambient::{inner, SpaceForm};
use cpc_core::examples::ExampleFamily;
use cpc_core::geometry::{
    fd_crosscheck, geodesic_distance, normal_consistency, pointwise_distance, polar_spectral_check,
    reconstruct_generating_curve, unit_normal, Grid, HomeSpace,
};
use cpc_core::profile::Profile;
use cpc_core::tubes::{classify_tube, parabolic_polar, polar_surface, SurfacePatch, TubeKind};
use cpc_core::curves::ParabolicData;
use cpc_core::GeomError;
use proptest::prelude::*;

const GRID: Grid = Grid { nu: 64, nv: 64 };

fn polar_roundtrip(sp: &SurfacePatch) -> (f64, f64) {
    let polar = polar_surface(sp).unwrap();
    let back = polar_surface(&polar).unwrap();
    assert_eq!(back.space(), sp.space());
    (
        pointwise_distance(sp, &back, GRID).unwrap(),
        polar_spectral_check(sp, &polar, GRID).absolute,
    )
}

#[test]
fn polar_of_polar_h3_r2() {
    let sp = h3_scene(2.0);
    let polar = polar_surface(&sp).unwrap();
    assert_eq!(polar.space(), SpaceForm::DS3);
    assert_eq!(polar.declared_r(), Some(0.5));
    let (back, spectral) = polar_roundtrip(&sp);
    assert!(back < 1e-9, "{back}");
    assert!(spectral < 1e-7, "{spectral}");

    let sp = example(&ExampleFamily::H3Hyperbolic { h: Profile::constant(1.0), r: 2.0, steps: None });
    let (back, spectral) = polar_roundtrip(&sp);
    assert!(back < 1e-9, "{back}");
    assert!(spectral < 1e-7, "{spectral}");
}

#[test]
fn polar_of_polar_other_spaces() {
    for sp in [h3_scene(0.5), s3_great_circle(0.5), s3_great_circle(2.0)] {
        let (back, spectral) = polar_roundtrip(&sp);
        assert!(back < 1e-9, "{}: {back}", sp.space());
        assert!(spectral < 1e-7, "{}: {spectral}", sp.space());
    }
}

#[test]
fn polar_refused_where_a_curvature_crosses_zero() {
    // k1 changes sign on this patch, so the polar is not immersed there
    let err = polar_surface(&s3_torus_knot(0.3)).unwrap_err();
    assert!(matches!(err, GeomError::VanishingPrincipalCurvature { .. }), "{err:?}");
}

#[test]
fn polar_curvatures_invert() {
    let sp = h3_scene(0.5);
    let polar = polar_surface(&sp).unwrap();
    let n = cpc_core::geometry::principal_curvatures(&polar, 0.1, 0.2).unwrap();
    assert!((n.k2.unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn flat_spaces_have_no_polar() {
    assert!(polar_surface(&e3_helix(1.0, 0.5, None)).is_err());
}

#[test]
fn parabolic_polar_is_the_swapped_tube() {
    let sp = h3_scene(1.0);
    let pd = ParabolicData::closed(
        SpaceForm::H3,
        hyperbola(0, 1),
        konst(e(3)),
        konst(e(2)),
        1,
        (-1.0, 1.0),
    )
    .unwrap();
    let swapped = parabolic_polar(&pd).unwrap();
    assert_eq!(swapped.space(), SpaceForm::DS3);
    // k1 vanishes along v = 0, where the swapped tube folds the u-lines to points;
    // compare the normal map itself instead
    assert!(polar_surface(&sp).is_err());
    let mut plus = 0.0f64;
    let mut minus = 0.0f64;
    for (_, _, u, v) in GRID.points(&sp.domain()) {
        let (n, _) = unit_normal(&sp, u, v).unwrap();
        let q = swapped.point(u, v).unwrap();
        plus = plus.max((n - q).max_abs());
        minus = minus.max((n + q).max_abs());
    }
    assert!(plus.min(minus) < 1e-12, "{plus} {minus}");
    for u in [-0.7, 0.0, 0.4] {
        let g = pd.null_curve(u).unwrap();
        let h = pd.swapped().unwrap().null_curve(u).unwrap();
        // εε″ = -1 in H³ with ε″ = 1
        assert!((h + g).max_abs() < 1e-14);
    }
}

#[test]
fn distance_to_generating_curve() {
    // elliptic tubes with eps' = eps'' in Riemannian spaces
    let cases: [(SurfacePatch, f64); 3] = [
        (e3_helix(1.0, 0.5, None), 0.5),
        (s3_torus_knot(0.3), 0.3f64.atan()),
        (h3_scene(0.5), 0.5f64.atanh()),
    ];
    for (sp, want) in cases {
        let rec = reconstruct_generating_curve(&sp, GRID).unwrap();
        let vs = GRID.v_values(&sp.domain());
        let mut worst = 0.0f64;
        for s in &rec.samples {
            for &v in &vs {
                let x = sp.point(s.u, v).unwrap();
                let d = geodesic_distance(&x, &s.gamma, sp.space()).unwrap();
                worst = worst.max((d - want).abs());
            }
        }
        assert!(worst < 1e-8, "{}: {worst}", sp.space());
    }
}

#[test]
fn trichotomy_homes() {
    let want = [
        (0.5, TubeKind::Elliptic, HomeSpace::Quadric { space: SpaceForm::H3 }),
        (1.0, TubeKind::Parabolic, HomeSpace::NullCone { p: 1 }),
        (2.0, TubeKind::Hyperbolic, HomeSpace::Quadric { space: SpaceForm::DS3 }),
    ];
    for (r, kind, home) in want {
        let sp = h3_scene(r);
        let rec = reconstruct_generating_curve(&sp, GRID).unwrap();
        assert_eq!(classify_tube(rec.c), kind);
        assert_eq!(rec.home, home);
        assert!(rec.v_spread < 1e-8 && rec.norm_residual < 1e-8 && rec.home_residual < 1e-8, "{r}: {rec:?}");
    }
    let rec = reconstruct_generating_curve(&h3_scene(2.0), GRID).unwrap();
    assert_eq!(rec.home_label, "dS3, spacelike");
}

#[test]
fn parabolic_reconstruction_is_the_null_curve() {
    let sp = h3_scene(1.0);
    let pd = sp.parabolic_data().unwrap();
    let rec = reconstruct_generating_curve(&sp, GRID).unwrap();
    for s in &rec.samples {
        let g = pd.null_curve(s.u).unwrap();
        assert!((s.gamma - g).max_abs() < 1e-12, "{:?}", (s.gamma, g));
        assert!(inner(&g, &g, 1).abs() < 1e-12);
    }
}

fn scenes() -> Vec<SurfacePatch> {
    vec![
        e3_helix(1.0, 0.5, None),
        s3_torus_knot(0.3),
        h3_scene(0.5),
        h3_scene(1.0),
        h3_scene(2.0),
        example(&ExampleFamily::E3Tube { h: u_squared(), r: 1.0 }),
        example(&ExampleFamily::H3Parabolic { a: Profile::constant(0.3), b: dip(1.0, 1.0), steps: None }),
        example(&ExampleFamily::H3Hyperbolic { h: Profile::constant(1.0), r: 2.0, steps: None }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn jets_agree_with_finite_differences(k in 0usize..8, s in 0.05f64..0.95, t in 0.05f64..0.95) {
        let sp = &scenes()[k];
        let d = sp.domain();
        let u = d.u.0 + s * (d.u.1 - d.u.0);
        let v = d.v.0 + t * (d.v.1 - d.v.0);
        let gap = fd_crosscheck(sp, u, v).unwrap();
        prop_assert!(gap < 1e-7, "{gap} at {:?}", (u, v));
    }

    #[test]
    fn second_form_matches_normal_derivative(k in 0usize..8, s in 0.05f64..0.95, t in 0.05f64..0.95) {
        let sp = &scenes()[k];
        let d = sp.domain();
        let (u, v) = (d.u.0 + s * (d.u.1 - d.u.0), d.v.0 + t * (d.v.1 - d.v.0));
        if let Ok(gap) = normal_consistency(sp, u, v) {
            prop_assert!(gap < 1e-9, "{gap}");
        }
    }
}
