//! Scene files: TOML documents describing one surface and how to sample it.
//!
//! ```toml
//! name = "h3_geodesic_r2"
//! space = "H3"
//! grid = [64, 64]
//! u = [-1.0, 1.0]
//!
//! [tube]
//! eps_p = 1
//! eps_pp = 1
//! r = 2.0
//! curve.expr = [{ basis = "cos", vec = [0.0, 1.0, 0.0, 0.0] },
//!               { basis = "sin", vec = [0.0, 0.0, 1.0, 0.0] }]
//! frame = { kind = "closed", e1 = [{ basis = "one", vec = [1.0, 0.0, 0.0, 0.0] }],
//!                            e2 = [{ basis = "one", vec = [0.0, 0.0, 0.0, 1.0] }] }
//! ```
//!
//! Exactly one of `[tube]`, `[example]` or `[external]` describes the surface.

use std::fmt;
use std::path::{Path, PathBuf};

use cpc_core::ambient::{PseudoVec, SpaceForm, Vec4};
use cpc_core::curves::{transport_normal_frame, Curve, CurveExpr, FramedCurve, ParabolicData, SampledCurve};
use cpc_core::examples::{build_example, ExampleFamily};
use cpc_core::tubes::{
    critical_constant, elliptic_tube, external_patch, hyperbolic_tube, parabolic_tube, table_row, tube_distance,
    PatchDomain, SurfaceExpr, SurfacePatch, TubeKind, TubeSpec, TABLE,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_GRID: [usize; 2] = [64, 64];
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_U: [f64; 2] = [-1.0, 1.0];

fn default_grid() -> [usize; 2] {
    DEFAULT_GRID
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub name: String,
    pub space: String,
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tube: Option<TubeScene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalScene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputScene>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TubeScene {
    pub eps_p: i8,
    pub eps_pp: i8,
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveScene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameScene>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parabolic: Option<ParabolicScene>,
}

/// A closed-form curve, or a sample table with rows `u x1 x2 x3 x4`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveScene {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<CurveExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<PathBuf>,
    /// Renormalize spline values onto the curve's quadric.
    #[serde(default = "yes")]
    pub project: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FrameScene {
    Closed {
        e1: CurveExpr,
        e2: CurveExpr,
    },
    /// Parallel transport of `(e1, e2)` given at `u0`.
    Transport {
        e1: [f64; 4],
        e2: [f64; 4],
        #[serde(default)]
        u0: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        steps: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicScene {
    pub plus: CurveExpr,
    pub minus: CurveExpr,
    pub e1: CurveExpr,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalScene {
    pub name: String,
    pub terms: SurfaceExpr,
    /// Radius to test the constant curvature against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default)]
    pub v_periodic: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputScene {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<PathBuf>,
}

/// A built scene remembered on disk: the resolved scene plus what the build printed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Descriptor {
    pub descriptor: DescriptorHeader,
    pub scene: SceneSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescriptorHeader {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<String>,
}

pub const DESCRIPTOR_VERSION: u32 = 1;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::InvalidScene(msg.into())
}

/// Reads a scene or a descriptor. Relative sample paths are resolved against the file's directory.
pub fn load(path: &Path) -> Result<SceneSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut scene = parse(&text).map_err(|e| match e {
        CliError::Parse { message, .. } => CliError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(samples) = scene
        .tube
        .as_mut()
        .and_then(|t| t.curve.as_mut())
        .and_then(|c| c.samples.as_mut())
    {
        if samples.is_relative() {
            *samples = base.join(&*samples);
        }
    }
    if scene.name.is_empty() {
        scene.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(scene)
}

/// Parses either document kind from TOML text.
pub fn parse(text: &str) -> Result<SceneSpec, CliError> {
    let parse_err = |e: toml::de::Error| CliError::Parse {
        path: PathBuf::new(),
        message: e.to_string(),
    };
    let value: toml::Table = toml::from_str(text).map_err(parse_err)?;
    if value.contains_key("descriptor") {
        let d: Descriptor = toml::from_str(text).map_err(parse_err)?;
        if d.descriptor.version != DESCRIPTOR_VERSION {
            return Err(invalid(format!("unsupported descriptor version {}", d.descriptor.version)));
        }
        Ok(d.scene)
    } else {
        toml::from_str(text).map_err(parse_err)
    }
}

/// The table rows admissible in `space`, one per line.
pub fn admissible_rows(space: SpaceForm) -> String {
    TABLE
        .iter()
        .filter(|row| row.space == space)
        .map(|row| {
            let radius = match row.radius {
                cpc_core::tubes::RadiusRange::Any => "any r",
                cpc_core::tubes::RadiusRange::Below1 => "r < 1",
                cpc_core::tubes::RadiusRange::Above1 => "r > 1",
                cpc_core::tubes::RadiusRange::One => "r = 1",
            };
            format!(
                "  {} {:?} {}: {}, curve in {}",
                row.space.name(),
                row.signs,
                radius,
                row.kind,
                row.curve_home
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn check_domain(name: &str, d: [f64; 2]) -> Result<(), CliError> {
    if !(d[0].is_finite() && d[1].is_finite() && d[0] < d[1]) {
        return Err(invalid(format!("{name} range {d:?} is not an increasing interval")));
    }
    Ok(())
}

fn example_space(fam: &ExampleFamily) -> SpaceForm {
    match fam {
        ExampleFamily::E3Tube { .. } => SpaceForm::E3,
        ExampleFamily::L3Tube { .. } => SpaceForm::L3,
        ExampleFamily::H3Parabolic { .. } | ExampleFamily::H3Hyperbolic { .. } => SpaceForm::H3,
    }
}

impl SceneSpec {
    pub fn space_form(&self) -> Result<SpaceForm, CliError> {
        SpaceForm::from_name(&self.space).ok_or_else(|| {
            invalid(format!(
                "unknown space {:?}; expected one of E3, L3, S3, H3, dS3, AdS3",
                self.space
            ))
        })
    }

    pub fn u_domain(&self) -> [f64; 2] {
        self.u.unwrap_or(DEFAULT_U)
    }

    /// Structural and admissibility checks, run before anything is computed.
    pub fn validate(&self) -> Result<(), CliError> {
        let space = self.space_form()?;
        let count = [self.tube.is_some(), self.example.is_some(), self.external.is_some()]
            .iter()
            .filter(|x| **x)
            .count();
        if count != 1 {
            return Err(invalid("exactly one of [tube], [example], [external] is required"));
        }
        if self.grid[0] < 2 || self.grid[1] < 2 {
            return Err(invalid(format!("grid {:?} needs at least 2 nodes per direction", self.grid)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(invalid(format!("tolerance {} must be positive", self.tol)));
        }
        check_domain("u", self.u_domain())?;
        if let Some(v) = self.v {
            check_domain("v", v)?;
        }
        if let Some(t) = &self.tube {
            let row = table_row(space, t.eps_p, t.eps_pp, t.r).map_err(|_| {
                invalid(format!(
                    "(eps, eps', eps'') = ({}, {}, {}) with r = {} is not an admissible row; rows for {}:\n{}",
                    space.eps(),
                    t.eps_p,
                    t.eps_pp,
                    t.r,
                    space.name(),
                    admissible_rows(space)
                ))
            })?;
            if row.kind == TubeKind::Parabolic {
                if t.parabolic.is_none() || t.curve.is_some() || t.frame.is_some() {
                    return Err(invalid("a parabolic row takes [tube.parabolic] data and no curve or frame"));
                }
            } else {
                if t.parabolic.is_some() {
                    return Err(invalid(format!("row is {}, parabolic data does not apply", row.kind)));
                }
                let curve = t.curve.as_ref().ok_or_else(|| invalid("[tube.curve] is required"))?;
                if curve.expr.is_some() == curve.samples.is_some() {
                    return Err(invalid("[tube.curve] takes exactly one of expr or samples"));
                }
                match &t.frame {
                    None => return Err(invalid("[tube.frame] is required")),
                    Some(FrameScene::Closed { .. }) if curve.samples.is_some() => {
                        return Err(invalid("sampled curves take a transported frame"))
                    }
                    _ => {}
                }
            }
        }
        if let Some(fam) = &self.example {
            if example_space(fam) != space {
                return Err(invalid(format!(
                    "example {} lives in {}, scene says {}",
                    fam.name(),
                    example_space(fam).name(),
                    space.name()
                )));
            }
        }
        Ok(())
    }

    /// The scene with the surface-independent overrides of the command line applied.
    pub fn with_overrides(mut self, grid: Option<[usize; 2]>, tol: Option<f64>) -> Self {
        if let Some(g) = grid {
            self.grid = g;
        }
        if let Some(t) = tol {
            self.tol = t;
        }
        self
    }

    pub fn classification(&self) -> Result<Option<Classification>, CliError> {
        let space = self.space_form()?;
        if let Some(t) = &self.tube {
            return Ok(Some(Classification::new(space, t.eps_p, t.eps_pp, t.r)?));
        }
        Ok(None)
    }
}

/// What the table says about a tube scene.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub space: String,
    pub signs: [i8; 3],
    pub r: f64,
    pub kind: TubeKind,
    pub c: f64,
    pub distance: Option<f64>,
    pub curve_home: String,
}

impl Classification {
    pub fn new(space: SpaceForm, eps_p: i8, eps_pp: i8, r: f64) -> Result<Self, CliError> {
        let spec = TubeSpec::new(space, eps_p, eps_pp, r)?;
        Ok(Self::from_spec(&spec))
    }

    pub fn from_spec(spec: &TubeSpec) -> Self {
        Classification {
            space: spec.space.name().to_string(),
            signs: [spec.eps, spec.eps_p, spec.eps_pp],
            r: spec.r,
            kind: spec.kind,
            c: critical_constant(spec.eps, spec.eps_p, spec.eps_pp, spec.r),
            distance: tube_distance(spec.eps, spec.eps_p, spec.r).ok(),
            curve_home: spec.row().curve_home.to_string(),
        }
    }

    /// `d` as a closed expression in `r`.
    pub fn distance_text(&self) -> Option<String> {
        let r = fraction(self.r);
        match self.signs[0] * self.signs[1] {
            0 => Some(r),
            1 => Some(format!("arctan({r})")),
            _ if self.r < 1.0 => Some(format!("artanh({r})")),
            _ if self.r > 1.0 => Some(format!("arcoth({r})")),
            _ => None,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}, c={}, ", self.kind, fraction(self.c))?;
        match self.distance_text() {
            Some(d) => write!(f, "d={d}"),
            None => write!(f, "d undefined"),
        }
    }
}

/// `x` as `n/q` for a small denominator when exact enough, else the shortest decimal.
pub fn fraction(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    for q in 1..=64u32 {
        let n = x * q as f64;
        if (n - n.round()).abs() < 1e-12 * q as f64 {
            let n = n.round() as i64;
            return if q == 1 { n.to_string() } else { format!("{n}/{q}") };
        }
    }
    x.to_string()
}

/// Reads a curve sample table: whitespace or comma separated `u x1 x2 x3 x4`, `#` comments.
pub fn read_samples(path: &Path) -> Result<Vec<(f64, PseudoVec)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Result<Vec<f64>, _> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(str::parse::<f64>)
            .collect();
        match fields {
            Ok(f) if f.len() == 5 => out.push((f[0], PseudoVec::new(f[1], f[2], f[3], f[4]))),
            _ => {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    message: format!("line {}: expected five numbers `u x1 x2 x3 x4`", lineno + 1),
                })
            }
        }
    }
    Ok(out)
}

fn build_curve(c: &CurveScene, space: SpaceForm) -> Result<Curve, CliError> {
    if let Some(e) = &c.expr {
        return Ok(Curve::Expr(e.clone()));
    }
    let path = c.samples.as_ref().expect("validated");
    let samples = read_samples(path)?;
    let project = (c.project && !space.is_flat()).then_some(space);
    Ok(Curve::Sampled(SampledCurve::new(&samples, project)?))
}

/// The curve space of a non-parabolic tube: `Q_{p, ±εε′ε″}`.
fn curve_space(space: SpaceForm, kind: TubeKind, eps_p: i8, eps_pp: i8) -> Result<SpaceForm, CliError> {
    let sigma = if kind == TubeKind::Elliptic { 1 } else { -1 };
    Ok(SpaceForm::new(space.p() as i8, sigma * space.eps() * eps_p * eps_pp)?)
}

/// A scene turned into an evaluable patch.
#[derive(Clone, Debug)]
pub struct Built {
    pub scene: SceneSpec,
    pub patch: SurfacePatch,
    pub classification: Option<Classification>,
}

impl Built {
    pub fn descriptor(&self, source: Option<&Path>) -> Descriptor {
        Descriptor {
            descriptor: DescriptorHeader {
                version: DESCRIPTOR_VERSION,
                source: source.map(Path::to_path_buf),
                classification: self.classification.as_ref().map(|c| c.to_string()),
            },
            scene: self.scene.clone(),
        }
    }
}

/// Validates and constructs the scene's surface.
pub fn build(scene: &SceneSpec) -> Result<Built, CliError> {
    scene.validate()?;
    let space = scene.space_form()?;
    let [u0, u1] = scene.u_domain();
    let udom = (u0, u1);
    let mut patch = if let Some(t) = &scene.tube {
        let row = table_row(space, t.eps_p, t.eps_pp, t.r)?;
        if row.kind == TubeKind::Parabolic {
            let pd = t.parabolic.as_ref().expect("validated");
            let data = ParabolicData::closed(
                space,
                pd.plus.clone(),
                pd.minus.clone(),
                pd.e1.clone(),
                t.eps_pp,
                udom,
            )?;
            parabolic_tube(data)?
        } else {
            let cspace = curve_space(space, row.kind, t.eps_p, t.eps_pp)?;
            let curve = build_curve(t.curve.as_ref().expect("validated"), cspace)?;
            let signature = if row.kind == TubeKind::Elliptic {
                (t.eps_pp, t.eps_pp)
            } else {
                (-t.eps_pp, t.eps_pp)
            };
            let fc = match t.frame.as_ref().expect("validated") {
                FrameScene::Closed { e1, e2 } => {
                    FramedCurve::closed(cspace, curve, e1.clone(), e2.clone(), signature, udom)?
                }
                FrameScene::Transport { e1, e2, u0, steps } => transport_normal_frame(
                    curve,
                    cspace,
                    (Vec4(*e1), Vec4(*e2)),
                    *u0,
                    udom,
                    *steps,
                )?,
            };
            match row.kind {
                TubeKind::Elliptic => elliptic_tube(fc, t.r, t.eps_p, t.eps_pp)?,
                _ => hyperbolic_tube(fc, t.r, t.eps_p, t.eps_pp)?,
            }
        }
    } else if let Some(fam) = &scene.example {
        build_example(fam, udom)?
    } else {
        let ext = scene.external.as_ref().expect("validated");
        let v = scene.v.unwrap_or([-1.0, 1.0]);
        let domain = PatchDomain {
            u: udom,
            v: (v[0], v[1]),
            v_periodic: ext.v_periodic,
        };
        let p = external_patch(space, ext.terms.clone(), domain, &ext.name);
        match ext.r {
            Some(r) => p.with_declared_r(r),
            None => p,
        }
    };
    if let Some([v0, v1]) = scene.v {
        let d = patch.domain();
        patch = patch.with_domain(PatchDomain {
            u: d.u,
            v: (v0, v1),
            v_periodic: false,
        });
    }
    if scene.tube.is_some() && !scene.name.is_empty() {
        patch = patch.with_family(&scene.name);
    }
    let classification = match patch.tube_spec() {
        Some(spec) => Some(Classification::from_spec(spec)),
        None => None,
    };
    Ok(Built {
        scene: scene.clone(),
        patch,
        classification,
    })
}
