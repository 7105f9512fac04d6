//! Tubes with one constant principal curvature and their polar surfaces.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ambient::{metric_orthocomplement, norm2, PseudoVec, SpaceForm, Vec4};
use crate::curves::{Basis, FramedCurve, ParabolicData};
use crate::error::{GeomError, Result};
use crate::jet::{Jet, JetShape};

/// `|c|` below this counts as zero when only `c` is known.
pub const PARABOLIC_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TubeKind {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

impl TubeKind {
    pub fn name(&self) -> &'static str {
        match self {
            TubeKind::Elliptic => "elliptic",
            TubeKind::Hyperbolic => "hyperbolic",
            TubeKind::Parabolic => "parabolic",
        }
    }
}

impl fmt::Display for TubeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `c = ε″(ε + ε′ r⁻²)`
pub fn critical_constant(eps: i8, eps_p: i8, eps_pp: i8, r: f64) -> f64 {
    eps_pp as f64 * (eps as f64 + eps_p as f64 / (r * r))
}

pub fn classify_tube(c: f64) -> TubeKind {
    if c.abs() < PARABOLIC_TOL {
        TubeKind::Parabolic
    } else if c > 0.0 {
        TubeKind::Elliptic
    } else {
        TubeKind::Hyperbolic
    }
}

/// Classification from the signs directly: `c` has the sign of `ε″(ε r² + ε′)`,
/// which is exactly zero for `ε = -ε′` and `r = 1`.
pub fn classify_signs(eps: i8, eps_p: i8, eps_pp: i8, r: f64) -> TubeKind {
    let s = eps_pp as f64 * (eps as f64 * r * r + eps_p as f64);
    if s == 0.0 {
        TubeKind::Parabolic
    } else {
        classify_tube(s)
    }
}

/// Distance from a tube to its generating curve.
pub fn tube_distance(eps: i8, eps_p: i8, r: f64) -> Result<f64> {
    match eps * eps_p {
        0 => Ok(r),
        1 => Ok(r.atan()),
        _ if r < 1.0 => Ok(r.atanh()),
        _ if r > 1.0 => Ok((1.0 / r).atanh()),
        _ => Err(GeomError::ParabolicHasNoDistance),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RadiusRange {
    Any,
    Below1,
    Above1,
    One,
}

impl RadiusRange {
    pub fn contains(&self, r: f64) -> bool {
        match self {
            RadiusRange::Any => r > 0.0,
            RadiusRange::Below1 => r > 0.0 && r < 1.0,
            RadiusRange::Above1 => r > 1.0,
            RadiusRange::One => r == 1.0,
        }
    }
}

/// One row of the classification table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableRow {
    pub space: SpaceForm,
    pub signs: (i8, i8, i8),
    pub radius: RadiusRange,
    pub kind: TubeKind,
    /// Where the generating curve lives, with its causal character when the space is Lorentzian.
    pub curve_home: &'static str,
}

const fn row(
    space: SpaceForm,
    signs: (i8, i8, i8),
    radius: RadiusRange,
    kind: TubeKind,
    curve_home: &'static str,
) -> TableRow {
    TableRow {
        space,
        signs,
        radius,
        kind,
        curve_home,
    }
}

use RadiusRange::{Above1, Any, Below1, One};
use TubeKind::{Elliptic, Hyperbolic, Parabolic};

pub const TABLE: [TableRow; 17] = [
    row(SpaceForm::E3, (0, 1, 1), Any, Elliptic, "E3"),
    row(SpaceForm::S3, (1, 1, 1), Any, Elliptic, "S3"),
    row(SpaceForm::H3, (-1, 1, 1), Below1, Elliptic, "H3"),
    row(SpaceForm::H3, (-1, 1, 1), Above1, Hyperbolic, "dS3, spacelike"),
    row(SpaceForm::H3, (-1, 1, 1), One, Parabolic, "null cone"),
    row(SpaceForm::L3, (0, -1, 1), Any, Hyperbolic, "L3, spacelike"),
    row(SpaceForm::L3, (0, 1, 1), Any, Elliptic, "L3, timelike"),
    row(SpaceForm::L3, (0, 1, -1), Any, Hyperbolic, "L3, spacelike"),
    row(SpaceForm::DS3, (1, -1, 1), Below1, Hyperbolic, "dS3, spacelike"),
    row(SpaceForm::DS3, (1, -1, 1), Above1, Elliptic, "H3"),
    row(SpaceForm::DS3, (1, -1, 1), One, Parabolic, "null cone"),
    row(SpaceForm::DS3, (1, 1, 1), Any, Elliptic, "dS3, timelike"),
    row(SpaceForm::DS3, (1, 1, -1), Any, Hyperbolic, "dS3, spacelike"),
    row(SpaceForm::ADS3, (-1, -1, 1), Any, Hyperbolic, "AdS3, spacelike"),
    row(SpaceForm::ADS3, (-1, 1, 1), Below1, Elliptic, "AdS3, timelike"),
    row(SpaceForm::ADS3, (-1, 1, -1), Above1, Elliptic, "AdS3~"),
    row(SpaceForm::ADS3, (-1, 1, -1), One, Parabolic, "null cone"),
];

/// The table row for `(space, ε′, ε″, r)`.
pub fn table_row(space: SpaceForm, eps_p: i8, eps_pp: i8, r: f64) -> Result<&'static TableRow> {
    let signs = (space.eps(), eps_p, eps_pp);
    TABLE
        .iter()
        .find(|row| row.space == space && row.signs == signs && row.radius.contains(r))
        .ok_or(GeomError::NotATableRow { triple: signs, r })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TubeSpec {
    pub space: SpaceForm,
    pub r: f64,
    pub eps: i8,
    pub eps_p: i8,
    pub eps_pp: i8,
    pub kind: TubeKind,
}

impl TubeSpec {
    pub fn new(space: SpaceForm, eps_p: i8, eps_pp: i8, r: f64) -> Result<TubeSpec> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(GeomError::NotATableRow {
                triple: (space.eps(), eps_p, eps_pp),
                r,
            });
        }
        let row = table_row(space, eps_p, eps_pp, r)?;
        Ok(TubeSpec {
            space,
            r,
            eps: space.eps(),
            eps_p,
            eps_pp,
            kind: row.kind,
        })
    }

    pub fn critical_constant(&self) -> f64 {
        critical_constant(self.eps, self.eps_p, self.eps_pp, self.r)
    }

    pub fn distance(&self) -> Result<f64> {
        tube_distance(self.eps, self.eps_p, self.r)
    }

    pub fn row(&self) -> &'static TableRow {
        table_row(self.space, self.eps_p, self.eps_pp, self.r).expect("validated on construction")
    }

    /// `|1 + εε′r²|^{-1/2}`
    pub fn scale(&self) -> f64 {
        (1.0 + (self.eps * self.eps_p) as f64 * self.r * self.r).abs().powf(-0.5)
    }
}

/// A closed-form surface `Σ f_k(ω u) g_k(ω' v) w_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTerm {
    pub u: Basis,
    #[serde(default = "one")]
    pub u_freq: f64,
    pub v: Basis,
    #[serde(default = "one")]
    pub v_freq: f64,
    pub vec: [f64; 4],
}

fn one() -> f64 {
    1.0
}

impl SurfaceTerm {
    pub fn new(u: Basis, v: Basis, vec: [f64; 4]) -> Self {
        SurfaceTerm {
            u,
            u_freq: 1.0,
            v,
            v_freq: 1.0,
            vec,
        }
    }
}

fn basis_jet(b: Basis, x: Jet) -> Jet {
    match b {
        Basis::One => Jet::constant(1.0, x.shape()),
        Basis::Lin => x,
        Basis::HalfSquare => x * x * 0.5,
        Basis::Cos => x.cos(),
        Basis::Sin => x.sin(),
        Basis::Cosh => x.cosh(),
        Basis::Sinh => x.sinh(),
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SurfaceExpr {
    pub terms: Vec<SurfaceTerm>,
}

impl SurfaceExpr {
    pub fn eval(&self, u: Jet, v: Jet) -> Vec4<Jet> {
        let mut out = Vec4([Jet::constant(0.0, u.shape()); 4]);
        for t in &self.terms {
            let f = basis_jet(t.u, u * t.u_freq) * basis_jet(t.v, v * t.v_freq);
            for i in 0..4 {
                if t.vec[i] != 0.0 {
                    out.0[i] += f * t.vec[i];
                }
            }
        }
        out
    }

    /// `(u, v, u² + v², 0)`
    pub fn paraboloid() -> Self {
        SurfaceExpr {
            terms: vec![
                SurfaceTerm::new(Basis::Lin, Basis::One, [1.0, 0.0, 0.0, 0.0]),
                SurfaceTerm::new(Basis::One, Basis::Lin, [0.0, 1.0, 0.0, 0.0]),
                SurfaceTerm::new(Basis::HalfSquare, Basis::One, [0.0, 0.0, 2.0, 0.0]),
                SurfaceTerm::new(Basis::One, Basis::HalfSquare, [0.0, 0.0, 2.0, 0.0]),
            ],
        }
    }

    /// `(u, v, uv, 0)`: timelike near the origin of `L³` with a rotation-type shape operator.
    pub fn lorentz_saddle() -> Self {
        SurfaceExpr {
            terms: vec![
                SurfaceTerm::new(Basis::Lin, Basis::One, [1.0, 0.0, 0.0, 0.0]),
                SurfaceTerm::new(Basis::One, Basis::Lin, [0.0, 1.0, 0.0, 0.0]),
                SurfaceTerm::new(Basis::Lin, Basis::Lin, [0.0, 0.0, 1.0, 0.0]),
            ],
        }
    }

    /// Round sphere of radius `r` in `E³`, latitude `u`, longitude `v`.
    pub fn sphere(r: f64) -> Self {
        SurfaceExpr {
            terms: vec![
                SurfaceTerm::new(Basis::Cos, Basis::Cos, [r, 0.0, 0.0, 0.0]),
                SurfaceTerm::new(Basis::Cos, Basis::Sin, [0.0, r, 0.0, 0.0]),
                SurfaceTerm::new(Basis::Sin, Basis::One, [0.0, 0.0, r, 0.0]),
            ],
        }
    }

    /// `(u, r cos v, r sin v, 0)`
    pub fn cylinder(r: f64) -> Self {
        SurfaceExpr {
            terms: vec![
                SurfaceTerm::new(Basis::Lin, Basis::One, [1.0, 0.0, 0.0, 0.0]),
                SurfaceTerm::new(Basis::One, Basis::Cos, [0.0, r, 0.0, 0.0]),
                SurfaceTerm::new(Basis::One, Basis::Sin, [0.0, 0.0, r, 0.0]),
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PatchDomain {
    pub u: (f64, f64),
    pub v: (f64, f64),
    pub v_periodic: bool,
}

impl PatchDomain {
    pub fn new(u: (f64, f64), v: (f64, f64)) -> Self {
        PatchDomain {
            u,
            v,
            v_periodic: false,
        }
    }

    pub fn periodic_v(u: (f64, f64)) -> Self {
        PatchDomain {
            u,
            v: (0.0, 2.0 * PI),
            v_periodic: true,
        }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        let inside = |x: f64, (a, b): (f64, f64)| {
            let slack = 1e-9 * (1.0 + (b - a).abs());
            x >= a - slack && x <= b + slack
        };
        u.is_finite() && v.is_finite() && inside(u, self.u) && (self.v_periodic || inside(v, self.v))
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.u.0 + self.u.1), 0.5 * (self.v.0 + self.v.1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Tube {
        spec: TubeSpec,
        #[serde(skip_serializing_if = "Option::is_none")]
        family: Option<String>,
    },
    Polar {
        of: Box<Provenance>,
    },
    External {
        name: String,
    },
}

#[derive(Clone, Debug)]
enum PatchKind {
    Elliptic { curve: Arc<FramedCurve>, r: f64, scale: f64 },
    Hyperbolic { curve: Arc<FramedCurve>, r: f64, scale: f64 },
    Parabolic { data: Arc<ParabolicData> },
    Polar { inner: Arc<SurfacePatch>, sign: f64 },
    Expr(SurfaceExpr),
}

/// An evaluable immersion `(u, v) ↦ φ(u, v)` into a space form.
#[derive(Clone, Debug)]
pub struct SurfacePatch {
    space: SpaceForm,
    domain: PatchDomain,
    declared_r: Option<f64>,
    declared_eps_p: Option<i8>,
    declared_eps_pp: Option<i8>,
    provenance: Provenance,
    kind: PatchKind,
}

fn check_signature(fc: &FramedCurve, required: (i8, i8)) -> Result<()> {
    if fc.signature() != required {
        return Err(GeomError::FrameSignatureMismatch {
            found: fc.signature(),
            required,
        });
    }
    Ok(())
}

/// Curvature `ε` of the tube's space given the generating curve's space `Q_{p,σ}` and `σ = ±εε′ε″`.
fn tube_space(curve_space: SpaceForm, eps_p: i8, eps_pp: i8, flip: i8) -> Result<SpaceForm> {
    let eps = curve_space.eps() * eps_p * eps_pp * flip;
    SpaceForm::new(curve_space.p() as i8, eps)
}

/// The elliptic tube `|1 + εε′r²|^{-1/2}(γ + r(cos v e₁ + sin v e₂))` around `fc`.
pub fn elliptic_tube(fc: FramedCurve, r: f64, eps_p: i8, eps_pp: i8) -> Result<SurfacePatch> {
    let space = tube_space(fc.space(), eps_p, eps_pp, 1)?;
    let c = critical_constant(space.eps(), eps_p, eps_pp, r);
    if classify_signs(space.eps(), eps_p, eps_pp, r) != TubeKind::Elliptic {
        return Err(GeomError::WrongClassification { c, expected: "elliptic" });
    }
    let spec = TubeSpec::new(space, eps_p, eps_pp, r)?;
    check_signature(&fc, (eps_pp, eps_pp))?;
    Ok(SurfacePatch {
        space,
        domain: PatchDomain::periodic_v(fc.domain()),
        declared_r: Some(r),
        declared_eps_p: Some(eps_p),
        declared_eps_pp: Some(eps_pp),
        provenance: Provenance::Tube { spec, family: None },
        kind: PatchKind::Elliptic {
            curve: Arc::new(fc),
            r,
            scale: spec.scale(),
        },
    })
}

/// The hyperbolic tube `|1 + εε′r²|^{-1/2}(γ + r(cosh v e₁ + sinh v e₂))` around `fc`.
pub fn hyperbolic_tube(fc: FramedCurve, r: f64, eps_p: i8, eps_pp: i8) -> Result<SurfacePatch> {
    let space = tube_space(fc.space(), eps_p, eps_pp, -1)?;
    let c = critical_constant(space.eps(), eps_p, eps_pp, r);
    if classify_signs(space.eps(), eps_p, eps_pp, r) != TubeKind::Hyperbolic {
        return Err(GeomError::WrongClassification { c, expected: "hyperbolic" });
    }
    let spec = TubeSpec::new(space, eps_p, eps_pp, r)?;
    check_signature(&fc, (-eps_pp, eps_pp))?;
    Ok(SurfacePatch {
        space,
        domain: PatchDomain::new(fc.domain(), (-2.0, 2.0)),
        declared_r: Some(r),
        declared_eps_p: Some(eps_p),
        declared_eps_pp: Some(eps_pp),
        provenance: Provenance::Tube { spec, family: None },
        kind: PatchKind::Hyperbolic {
            curve: Arc::new(fc),
            r,
            scale: spec.scale(),
        },
    })
}

/// The parabolic tube `(1 - εε″v²/2)δ₊ + v e₁ + (v²/2)δ₋`.
pub fn parabolic_tube(pd: ParabolicData) -> Result<SurfacePatch> {
    let space = pd.space();
    let spec = TubeSpec::new(space, -space.eps(), pd.eps_pp(), 1.0)?;
    Ok(parabolic_patch(pd, Provenance::Tube { spec, family: None }))
}

/// The tube of the swapped data `(δ₋, δ₊, e₁)`, which is the polar of [`parabolic_tube`].
pub fn parabolic_polar(pd: &ParabolicData) -> Result<SurfacePatch> {
    let spec = TubeSpec {
        space: pd.space(),
        r: 1.0,
        eps: pd.space().eps(),
        eps_p: -pd.space().eps(),
        eps_pp: pd.eps_pp(),
        kind: TubeKind::Parabolic,
    };
    let swapped = pd.swapped()?;
    Ok(parabolic_patch(
        swapped,
        Provenance::Polar {
            of: Box::new(Provenance::Tube { spec, family: None }),
        },
    ))
}

fn parabolic_patch(pd: ParabolicData, provenance: Provenance) -> SurfacePatch {
    SurfacePatch {
        space: pd.space(),
        domain: PatchDomain::new(pd.domain(), (-2.0, 2.0)),
        declared_r: Some(1.0),
        declared_eps_p: Some(-pd.space().eps()),
        declared_eps_pp: Some(pd.eps_pp()),
        provenance,
        kind: PatchKind::Parabolic { data: Arc::new(pd) },
    }
}

/// A closed-form surface outside the tube constructors.
pub fn external_patch(space: SpaceForm, expr: SurfaceExpr, domain: PatchDomain, name: &str) -> SurfacePatch {
    SurfacePatch {
        space,
        domain,
        declared_r: None,
        declared_eps_p: None,
        declared_eps_pp: None,
        provenance: Provenance::External { name: name.to_string() },
        kind: PatchKind::Expr(expr),
    }
}

/// Samples used to check that no principal curvature vanishes before taking a polar.
const POLAR_SAMPLES: usize = 16;

/// The unit normal field of `sp`, oriented so that its constant principal curvature is `+1/r`.
pub fn polar_surface(sp: &SurfacePatch) -> Result<SurfacePatch> {
    crate::ambient::polar_space(sp.space)?;
    let r = sp.declared_r.ok_or(GeomError::InvalidCurve(
        "polar surface needs a declared constant curvature".into(),
    ))?;
    let (uc, vc) = sp.domain.center();
    let center = crate::geometry::principal_curvatures(sp, uc, vc)?;
    let sign = center.orientation;
    let eps_p = center.eps_p;
    let gauss_sign = match (center.k1, center.k2) {
        (Some(a), Some(b)) => (a * b).signum(),
        _ => return Err(GeomError::VanishingPrincipalCurvature { u: uc, v: vc }),
    };
    let grid = crate::geometry::Grid::new(POLAR_SAMPLES, POLAR_SAMPLES);
    for (_, _, u, v) in grid.points(&sp.domain) {
        match crate::geometry::principal_curvatures(sp, u, v) {
            Ok(pd) => {
                if let (Some(k1), Some(k2)) = (pd.k1, pd.k2) {
                    // a sign change of k1*k2 means a zero between samples
                    if k1.abs() < 1e-8 || k2.abs() < 1e-8 || (k1 * k2).signum() != gauss_sign {
                        return Err(GeomError::VanishingPrincipalCurvature { u, v });
                    }
                }
            }
            Err(GeomError::DegenerateTangentPlane { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let space = SpaceForm::new(sp.space.p() as i8, eps_p)?;
    Ok(SurfacePatch {
        space,
        domain: sp.domain,
        declared_r: Some(1.0 / r),
        declared_eps_p: Some(sp.space.eps()),
        declared_eps_pp: sp.declared_eps_pp,
        provenance: Provenance::Polar {
            of: Box::new(sp.provenance.clone()),
        },
        kind: PatchKind::Polar {
            inner: Arc::new(sp.clone()),
            sign,
        },
    })
}

impl SurfacePatch {
    pub fn space(&self) -> SpaceForm {
        self.space
    }

    pub fn domain(&self) -> PatchDomain {
        self.domain
    }

    pub fn declared_r(&self) -> Option<f64> {
        self.declared_r
    }

    pub fn declared_eps_p(&self) -> Option<i8> {
        self.declared_eps_p
    }

    pub fn declared_eps_pp(&self) -> Option<i8> {
        self.declared_eps_pp
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn tube_spec(&self) -> Option<&TubeSpec> {
        match &self.provenance {
            Provenance::Tube { spec, .. } => Some(spec),
            _ => None,
        }
    }

    /// Restricts or extends the parameter rectangle.
    pub fn with_domain(mut self, domain: PatchDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn with_declared_r(mut self, r: f64) -> Self {
        self.declared_r = Some(r);
        self
    }

    pub fn with_family(mut self, name: &str) -> Self {
        if let Provenance::Tube { family, .. } = &mut self.provenance {
            *family = Some(name.to_string());
        }
        self
    }

    /// The parabolic data this patch was built from, if any.
    pub fn parabolic_data(&self) -> Option<&ParabolicData> {
        match &self.kind {
            PatchKind::Parabolic { data } => Some(data),
            _ => None,
        }
    }

    /// `φ` expanded to `order` around `(u, v)`.
    pub fn jet(&self, u: f64, v: f64, order: usize) -> Result<Vec4<Jet>> {
        if !self.domain.contains(u, v) {
            return Err(GeomError::OutOfDomain { u, v });
        }
        self.jet_unchecked(u, v, order)
    }

    fn jet_unchecked(&self, u: f64, v: f64, order: usize) -> Result<Vec4<Jet>> {
        let shape = JetShape::bivariate(order);
        let vj = Jet::variable(v, shape, 1);
        let lift = |x: Vec4<Jet>| x.map(|c| c.embed(0));
        match &self.kind {
            PatchKind::Elliptic { curve, r, scale } => {
                let j = curve.jets(u, order)?;
                let (g, e1, e2) = (lift(j.gamma), lift(j.e1), lift(j.e2));
                let fiber = e1.scale(vj.cos()) + e2.scale(vj.sin());
                Ok((g + fiber.scale_f(*r)).scale_f(*scale))
            }
            PatchKind::Hyperbolic { curve, r, scale } => {
                let j = curve.jets(u, order)?;
                let (g, e1, e2) = (lift(j.gamma), lift(j.e1), lift(j.e2));
                let fiber = e1.scale(vj.cosh()) + e2.scale(vj.sinh());
                Ok((g + fiber.scale_f(*r)).scale_f(*scale))
            }
            PatchKind::Parabolic { data } => {
                let j = data.jets(u, order)?;
                let (dp, dm, e1) = (lift(j.plus), lift(j.minus), lift(j.e1));
                let k = (data.space().eps() * data.eps_pp()) as f64;
                let half = vj * vj * 0.5;
                let a = -(half * k) + 1.0;
                Ok(dp.scale(a) + e1.scale(vj) + dm.scale(half))
            }
            PatchKind::Polar { inner, sign } => {
                let n = unit_normal_jet(inner, u, v, order)?;
                Ok(n.scale_f(*sign))
            }
            PatchKind::Expr(e) => Ok(e.eval(Jet::variable(u, shape, 0), vj)),
        }
    }

    pub fn point(&self, u: f64, v: f64) -> Result<PseudoVec> {
        Ok(self.jet(u, v, 0)?.value())
    }
}

/// The unit normal of `sp` (orthocomplement orientation) expanded to `order`.
pub fn unit_normal_jet(sp: &SurfacePatch, u: f64, v: f64, order: usize) -> Result<Vec4<Jet>> {
    let phi = sp.jet(u, v, order + 1)?;
    let pu = phi.map(|c| c.partial(0));
    let pv = phi.map(|c| c.partial(1));
    let x = phi.map(|c| c.truncate(order));
    let n = metric_orthocomplement(&x, &pu, &pv, sp.space())?;
    let n2 = norm2(&n, sp.space().p());
    let scale = n.value().euclid_norm().powi(2);
    if n2.value().abs() <= 1e-12 * scale {
        return Err(GeomError::NullNormal);
    }
    let inv = if n2.value() > 0.0 { n2.sqrt().recip() } else { (-n2).sqrt().recip() };
    Ok(n.scale(inv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_constant_examples() {
        assert_eq!(critical_constant(0, 1, 1, 2.0), 0.25);
        assert_eq!(critical_constant(-1, 1, 1, 1.0), 0.0);
        assert_eq!(critical_constant(-1, 1, 1, 2.0), -0.75);
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_tube(0.25), TubeKind::Elliptic);
        assert_eq!(classify_tube(-0.75), TubeKind::Hyperbolic);
        assert_eq!(classify_tube(0.0), TubeKind::Parabolic);
    }

    #[test]
    fn distance_examples() {
        assert_eq!(tube_distance(0, 1, 0.5).unwrap(), 0.5);
        assert_eq!(tube_distance(0, -1, 0.5).unwrap(), 0.5);
        assert!((tube_distance(1, 1, 1.0).unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((tube_distance(-1, 1, 0.5).unwrap() - 0.549_306_144_334_054_8).abs() < 1e-15);
        assert!((tube_distance(-1, 1, 2.0).unwrap() - 0.549_306_144_334_054_8).abs() < 1e-15);
        assert_eq!(tube_distance(-1, 1, 1.0), Err(GeomError::ParabolicHasNoDistance));
    }

    #[test]
    fn table_rows_agree_with_sign_classification() {
        for row in TABLE.iter() {
            let r = match row.radius {
                Any | Below1 => 0.5,
                Above1 => 2.0,
                One => 1.0,
            };
            let (e, ep, epp) = row.signs;
            assert_eq!(classify_signs(e, ep, epp, r), row.kind, "{row:?}");
            assert_eq!(classify_tube(critical_constant(e, ep, epp, r)), row.kind);
        }
    }

    #[test]
    fn rejects_rows_outside_table() {
        assert!(matches!(
            TubeSpec::new(SpaceForm::L3, -1, -1, 1.0),
            Err(GeomError::NotATableRow { triple: (0, -1, -1), .. })
        ));
        assert!(TubeSpec::new(SpaceForm::ADS3, 1, 1, 2.0).is_err());
        assert!(TubeSpec::new(SpaceForm::H3, 1, 1, 2.0).is_ok());
    }
}
