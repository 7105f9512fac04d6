//! End-to-end runs of the `cpc` commands on the fixture scenes.

use std::path::{Path, PathBuf};

use cpc_cli::export::{csv_residuals, read_csv, CsvRow, MeshOutput};
use cpc_cli::scene::{self, SceneSpec};
use cpc_cli::{run_args, Outcome};
use cpc_core::ambient::SpaceForm;
use cpc_core::geometry::Grid;
use cpc_core::tubes::table_row;
use proptest::prelude::*;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

fn cpc(args: &[&str]) -> Outcome {
    run_args(std::iter::once("cpc").chain(args.iter().copied()))
}

fn cpc_on(cmd: &str, scene: &Path, extra: &[&str]) -> Outcome {
    let s = scene.to_str().unwrap();
    let mut args = vec![cmd, "--scene", s];
    args.extend_from_slice(extra);
    cpc(&args)
}

const SPACES: [&str; 6] = ["E3", "L3", "S3", "H3", "dS3", "AdS3"];

proptest! {
    #[test]
    fn validation_admits_exactly_the_table_rows(
        space in 0usize..6,
        eps_p in prop::sample::select(vec![-1i8, 1]),
        eps_pp in prop::sample::select(vec![-1i8, 1]),
        r in prop::sample::select(vec![0.5, 1.0, 2.0, 3.7]),
    ) {
        let text = format!(
            "space = \"{}\"\n[tube]\neps_p = {eps_p}\neps_pp = {eps_pp}\nr = {r:?}\n",
            SPACES[space]
        );
        let spec = scene::parse(&text).unwrap();
        let sf = SpaceForm::from_name(SPACES[space]).unwrap();
        let admissible = table_row(sf, eps_p, eps_pp, r).is_ok();
        // the curve data is missing either way; only the row check may mention admissibility
        let msg = spec.validate().unwrap_err().to_string();
        prop_assert_eq!(!msg.contains("not an admissible row"), admissible, "{}", msg);
    }
}

#[test]
fn every_table_fixture_is_admissible() {
    let dir = fixture("table");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let spec = scene::load(&path).unwrap();
        spec.validate().unwrap();
        n += 1;
    }
    assert_eq!(n, 17);
}

#[test]
fn build_prints_the_classification() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("d.toml");
    let o = cpc_on("build", &fixture("table/h3_geodesic_r2.toml"), &["--out", out.to_str().unwrap()]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert!(o.stdout.starts_with("h3_geodesic_r2: hyperbolic, c=-3/4, d=arcoth(2)\n"), "{}", o.stdout);

    let o = cpc_on("build", &fixture("table/h3_parabolic_r1.toml"), &["--out", out.to_str().unwrap()]);
    assert!(o.stdout.starts_with("h3_parabolic_r1: parabolic, c=0, d undefined\n"), "{}", o.stdout);

    let o = cpc_on("classify", &fixture("table/h3_equidistant_r05.toml"), &[]);
    assert_eq!(o.stdout, "H3 [-1, 1, 1] r=0.5: elliptic, c=3, d=artanh(1/2); curve in H3\n");
}

#[test]
fn exit_codes() {
    let cases = [
        ("extra/torus.toml", 0),
        ("extra/paraboloid.toml", 1),
        ("extra/l3_saddle.toml", 1),
        ("extra/invalid_signs.toml", 2),
        ("extra/stationary_curve.toml", 3),
        ("extra/no_such_scene.toml", 2),
    ];
    for (rel, want) in cases {
        let o = cpc_on("verify", &fixture(rel), &[]);
        assert_eq!(o.code, want, "{rel}: {}{}", o.stdout, o.stderr);
    }
    assert_eq!(cpc(&["verify"]).code, 2);
    assert_eq!(cpc(&["verify", "--scene", "x.toml", "--grid", "8by8"]).code, 2);
    assert_eq!(cpc(&["explode", "--scene", "x.toml"]).code, 2);
}

#[test]
fn invalid_signs_lists_the_rows() {
    let o = cpc_on("verify", &fixture("extra/invalid_signs.toml"), &[]);
    assert!(o.stderr.contains("not an admissible row"), "{}", o.stderr);
    assert!(o.stderr.contains("(0, -1, 1)"), "{}", o.stderr);
}

#[test]
fn verify_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    for rel in ["extra/paraboloid.toml", "table/h3_geodesic_r2.toml"] {
        let runs: Vec<(u8, String, String)> = (0..2)
            .map(|k| {
                let rep = tmp.path().join(format!("r{k}.toml"));
                let o = cpc_on("verify", &fixture(rel), &["--grid", "24x24", "--out", rep.to_str().unwrap()]);
                (o.code, o.stdout, std::fs::read_to_string(rep).unwrap())
            })
            .collect();
        assert_eq!(runs[0], runs[1], "{rel}");
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("torus.csv");
    let o = cpc_on(
        "export",
        &fixture("extra/torus.toml"),
        &["--format", "csv", "--grid", "16x16", "--out", out.to_str().unwrap()],
    );
    assert_eq!(o.code, 0, "{}", o.stderr);
    let rows = read_csv(&mut std::fs::File::open(&out).unwrap()).unwrap();

    let spec = scene::load(&fixture("extra/torus.toml")).unwrap();
    let built = scene::build(&spec).unwrap();
    let mesh = MeshOutput::from_patch(&built.patch, Grid::new(16, 16), None);
    let direct: Vec<CsvRow> = mesh.nodes.iter().map(CsvRow::from_node).collect();
    assert_eq!(rows.len(), 256);
    let bits = |r: &CsvRow| {
        [r.u, r.v, r.x1, r.x2, r.x3, r.x4, r.k1, r.k2].map(|x| x.map(f64::to_bits))
    };
    for (a, b) in rows.iter().zip(&direct) {
        assert_eq!(bits(a), bits(b));
        assert_eq!((a.i, a.j, a.umbilic, &a.status), (b.i, b.j, b.umbilic, &b.status));
    }
    let r = built.patch.declared_r().unwrap();
    let from_file = csv_residuals(&rows, r, SpaceForm::E3);
    let from_mesh = csv_residuals(&direct, r, SpaceForm::E3);
    assert_eq!(from_file.0.to_bits(), from_mesh.0.to_bits());
    assert_eq!(from_file.1.to_bits(), from_mesh.1.to_bits());
}

fn obj(rel: &str, extra: &[&str]) -> (Vec<[f64; 3]>, Vec<[usize; 4]>) {
    let o = cpc_on("export", &fixture(rel), extra);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let mut vs = Vec::new();
    let mut fs = Vec::new();
    for line in o.stdout.lines() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|t| t.parse().unwrap()).collect();
                vs.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let c: Vec<usize> = it.map(|t| t.parse().unwrap()).collect();
                fs.push([c[0], c[1], c[2], c[3]]);
            }
            _ => {}
        }
    }
    (vs, fs)
}

#[test]
fn obj_torus_is_a_closed_band() {
    let (nu, nv) = (12, 20);
    let (vs, fs) = obj("extra/torus.toml", &["--grid", "12x20"]);
    assert_eq!(vs.len(), nu * nv);
    assert_eq!(fs.len(), (nu - 1) * nv);
    // every interior v-edge is shared by two faces, including the seam j = nv-1 → 0
    let mut edges = std::collections::HashMap::new();
    for f in &fs {
        for k in 0..4 {
            let (a, b) = (f[k].min(f[(k + 1) % 4]), f[k].max(f[(k + 1) % 4]));
            *edges.entry((a, b)).or_insert(0) += 1;
        }
    }
    for i in 1..nu - 1 {
        let a = i * nv + nv - 1 + 1;
        let b = i * nv + 1;
        assert_eq!(edges.get(&(b.min(a), b.max(a))), Some(&2), "seam at row {i}");
    }
    let boundary = edges.values().filter(|&&c| c == 1).count();
    assert_eq!(boundary, 2 * nv);
}

#[test]
fn poincare_vertices_lie_in_the_ball() {
    for rel in ["table/h3_equidistant_r05.toml", "table/h3_geodesic_r2.toml", "table/h3_parabolic_r1.toml"] {
        let (vs, _) = obj(rel, &["--grid", "32x32"]);
        assert_eq!(vs.len(), 1024);
        for v in vs {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            assert!(n < 1.0, "{rel}: {n}");
        }
    }
}

#[test]
fn charts_are_checked_against_the_space() {
    let o = cpc_on("export", &fixture("extra/torus.toml"), &["--chart", "poincare"]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("chart poincare is not available for E3"), "{}", o.stderr);
    let o = cpc_on("export", &fixture("table/h3_geodesic_r2.toml"), &["--chart", "stereographic"]);
    assert_eq!(o.code, 2);
    let o = cpc_on("export", &fixture("table/ds3_r2.toml"), &["--grid", "4x4"]);
    assert_eq!(o.code, 0);
    assert!(o.stderr.contains("not isometric"), "{}", o.stderr);
}

#[test]
fn reconstructed_curves_land_in_their_homes() {
    for (rel, home) in [
        ("extra/torus.toml", "E3"),
        ("table/h3_geodesic_r2.toml", "dS3, spacelike"),
        ("table/h3_equidistant_r05.toml", "H3"),
        ("table/h3_parabolic_r1.toml", "null cone"),
        ("table/ads3_tilde_r2.toml", "AdS3~"),
    ] {
        let o = cpc_on("reconstruct", &fixture(rel), &["--grid", "16x16"]);
        assert_eq!(o.code, 0, "{}", o.stderr);
        let header = format!("# home = {home}\n");
        assert!(o.stdout.contains(&header), "{rel}: {}", o.stdout);
        let rows = o.stdout.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 16);
    }
}

#[test]
fn descriptor_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let desc = tmp.path().join("h3.descriptor.toml");
    let src = fixture("table/h3_geodesic_r2.toml");
    let o = cpc_on("build", &src, &["--out", desc.to_str().unwrap()]);
    assert_eq!(o.code, 0);
    let original: SceneSpec = scene::load(&src).unwrap();
    let reread: SceneSpec = scene::load(&desc).unwrap();
    assert_eq!(original, reread);
    let a = cpc_on("verify", &src, &["--grid", "16x16"]);
    let b = cpc_on("verify", &desc, &["--grid", "16x16"]);
    assert_eq!((a.code, a.stdout), (b.code, b.stdout));
}

#[test]
fn sampled_curve_scene_verifies() {
    let o = cpc_on("verify", &fixture("extra/e3_sampled_helix.toml"), &["--grid", "24x24"]);
    assert_eq!(o.code, 0, "{}{}", o.stdout, o.stderr);
}
