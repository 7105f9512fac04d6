//! Curvature verification: fundamental forms, principal curvatures, the
//! pregeodesic check on `v`-lines and reconstruction of the generating curve.

use rayon::prelude::*;
use serde::Serialize;

use crate::ambient::{inner, norm2, quadric_residual, Causal, NullCone, PseudoVec, SpaceForm};
use crate::error::{GeomError, Result};
use crate::tubes::{classify_tube, critical_constant, unit_normal_jet, PatchDomain, SurfacePatch, TubeKind};

/// Relative tolerance of the umbilic test `|κ₁ - κ₂| < tol (1 + |κ₁| + |κ₂|)`.
pub const UMBILIC_TOL: f64 = 1e-6;

/// Tolerance on the `v`-line geodesic residuals.
pub const FOLIATION_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub nu: usize,
    pub nv: usize,
}

impl Grid {
    pub fn new(nu: usize, nv: usize) -> Self {
        Grid { nu, nv }
    }

    /// `u` nodes include both ends; `v` nodes omit the right end on periodic domains.
    pub fn u_values(&self, d: &PatchDomain) -> Vec<f64> {
        nodes(d.u, self.nu, true)
    }

    pub fn v_values(&self, d: &PatchDomain) -> Vec<f64> {
        nodes(d.v, self.nv, !d.v_periodic)
    }

    /// `(i, j, u_i, v_j)` in row-major order.
    pub fn points(&self, d: &PatchDomain) -> Vec<(usize, usize, f64, f64)> {
        let us = self.u_values(d);
        let vs = self.v_values(d);
        let mut out = Vec::with_capacity(us.len() * vs.len());
        for (i, &u) in us.iter().enumerate() {
            for (j, &v) in vs.iter().enumerate() {
                out.push((i, j, u, v));
            }
        }
        out
    }
}

fn nodes((a, b): (f64, f64), n: usize, closed: bool) -> Vec<f64> {
    if n <= 1 {
        return vec![0.5 * (a + b)];
    }
    let div = if closed { n - 1 } else { n } as f64;
    (0..n).map(|k| a + (b - a) * k as f64 / div).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceJet2 {
    pub phi: PseudoVec,
    pub phi_u: PseudoVec,
    pub phi_v: PseudoVec,
    pub phi_uu: PseudoVec,
    pub phi_uv: PseudoVec,
    pub phi_vv: PseudoVec,
}

pub fn surface_jet(sp: &SurfacePatch, u: f64, v: f64) -> Result<SurfaceJet2> {
    let j = sp.jet(u, v, 2)?;
    let d = |i, k| j.map(|c| c.derivative(i, k));
    Ok(SurfaceJet2 {
        phi: j.value(),
        phi_u: d(1, 0),
        phi_v: d(0, 1),
        phi_uu: d(2, 0),
        phi_uv: d(1, 1),
        phi_vv: d(0, 2),
    })
}

/// Unit normal in the orientation of the metric orthocomplement, with `ε′ = ‖N‖²`.
pub fn unit_normal(sp: &SurfacePatch, u: f64, v: f64) -> Result<(PseudoVec, i8)> {
    let n = unit_normal_jet(sp, u, v, 0)?.value();
    let eps_p = norm2(&n, sp.space().p()).signum() as i8;
    Ok((n, eps_p))
}

#[allow(non_snake_case)]
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FundamentalForms {
    pub E: f64,
    pub F: f64,
    pub G: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub eps_p: i8,
}

fn forms_from(jet: &SurfaceJet2, n: &PseudoVec, p: u8) -> FundamentalForms {
    FundamentalForms {
        E: inner(&jet.phi_u, &jet.phi_u, p),
        F: inner(&jet.phi_u, &jet.phi_v, p),
        G: inner(&jet.phi_v, &jet.phi_v, p),
        e: inner(&jet.phi_uu, n, p),
        f: inner(&jet.phi_uv, n, p),
        g: inner(&jet.phi_vv, n, p),
        eps_p: norm2(n, p).signum() as i8,
    }
}

/// First and second fundamental forms with respect to [`unit_normal`].
pub fn fundamental_forms(sp: &SurfacePatch, u: f64, v: f64) -> Result<FundamentalForms> {
    let jet = surface_jet(sp, u, v)?;
    let (n, _) = unit_normal(sp, u, v)?;
    Ok(forms_from(&jet, &n, sp.space().p()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrincipalData {
    /// `None` when the shape operator has complex eigenvalues.
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub dir1: Option<[f64; 2]>,
    pub dir2: Option<[f64; 2]>,
    pub diagonalizable: bool,
    pub umbilic: bool,
    /// `±1`: the normal used is `orientation · N` with `N` from [`unit_normal`].
    pub orientation: f64,
    pub eps_p: i8,
    /// Causal character of `dir2` under the first fundamental form.
    pub eps_pp: Option<i8>,
    /// `‖S w - κ w‖ / (1 + |κ|‖w‖)` over both eigenpairs.
    pub shape_residual: f64,
}

/// `S = I⁻¹ II` as `[[s11, s12], [s21, s22]]`.
fn shape_matrix(ff: &FundamentalForms) -> [[f64; 2]; 2] {
    let det = ff.E * ff.G - ff.F * ff.F;
    [
        [(ff.G * ff.e - ff.F * ff.f) / det, (ff.G * ff.f - ff.F * ff.g) / det],
        [(ff.E * ff.f - ff.F * ff.e) / det, (ff.E * ff.g - ff.F * ff.f) / det],
    ]
}

fn eigenvector(s: &[[f64; 2]; 2], k: f64) -> Option<[f64; 2]> {
    let w1 = [s[0][1], k - s[0][0]];
    let w2 = [k - s[1][1], s[1][0]];
    let n1 = w1[0].hypot(w1[1]);
    let n2 = w2[0].hypot(w2[1]);
    let (w, n) = if n1 >= n2 { (w1, n1) } else { (w2, n2) };
    if n == 0.0 {
        None
    } else {
        Some([w[0] / n, w[1] / n])
    }
}

fn shape_apply(ff: &FundamentalForms, w: [f64; 2]) -> [f64; 2] {
    // S = I⁻¹ II
    let det = ff.E * ff.G - ff.F * ff.F;
    let iw = [ff.e * w[0] + ff.f * w[1], ff.f * w[0] + ff.g * w[1]];
    [
        (ff.G * iw[0] - ff.F * iw[1]) / det,
        (-ff.F * iw[0] + ff.E * iw[1]) / det,
    ]
}

fn eigen_residual(ff: &FundamentalForms, k: f64, w: [f64; 2]) -> f64 {
    let s = shape_apply(ff, w);
    let d = [s[0] - k * w[0], s[1] - k * w[1]];
    d[0].hypot(d[1]) / (1.0 + k.abs())
}

/// Solves `II w = κ I w` and labels the eigenvalue nearest `1/declared_r` as `κ₂`.
pub fn principal_from_forms(ff: &FundamentalForms, declared_r: Option<f64>) -> PrincipalData {
    let s = shape_matrix(ff);
    let mean = 0.5 * (s[0][0] + s[1][1]);
    let skew = 0.5 * (s[0][0] - s[1][1]);
    let q = skew * skew + s[0][1] * s[1][0];
    let gap = 2.0 * q.abs().sqrt();
    let umbilic = if q >= 0.0 {
        gap < UMBILIC_TOL * (1.0 + (mean - 0.5 * gap).abs() + (mean + 0.5 * gap).abs())
    } else {
        gap < UMBILIC_TOL * (1.0 + 2.0 * mean.abs())
    };
    let mut out = PrincipalData {
        k1: None,
        k2: None,
        dir1: None,
        dir2: None,
        diagonalizable: true,
        umbilic,
        orientation: 1.0,
        eps_p: ff.eps_p,
        eps_pp: None,
        shape_residual: 0.0,
    };
    if !(q >= 0.0) && !umbilic {
        out.diagonalizable = false;
        return out;
    }
    let half = if umbilic { 0.0 } else { 0.5 * gap };
    let ks = [mean - half, mean + half];
    let ws = [eigenvector(&s, ks[0]), eigenvector(&s, ks[1])];

    let v_alignment = |w: Option<[f64; 2]>| w.map_or(0.0, |w| w[1].abs());
    let pick = match declared_r {
        Some(r) => {
            let target = 1.0 / r;
            let d0 = (ks[0].abs() - target).abs();
            let d1 = (ks[1].abs() - target).abs();
            if (d0 - d1).abs() <= 1e-12 * (1.0 + target) {
                usize::from(v_alignment(ws[1]) > v_alignment(ws[0]))
            } else {
                usize::from(d1 < d0)
            }
        }
        None => usize::from(v_alignment(ws[1]) > v_alignment(ws[0])),
    };
    let orientation = if declared_r.is_some() && ks[pick] < 0.0 { -1.0 } else { 1.0 };
    let (k2, w2) = (ks[pick] * orientation, ws[pick]);
    let (k1, w1) = (ks[1 - pick] * orientation, ws[1 - pick]);

    let mut residual = 0.0f64;
    if !umbilic {
        for (k, w) in [(ks[pick], w2), (ks[1 - pick], w1)] {
            if let Some(w) = w {
                residual = residual.max(eigen_residual(ff, k, w));
            }
        }
    }
    out.k1 = Some(k1);
    out.k2 = Some(k2);
    if !umbilic {
        out.dir1 = w1;
        out.dir2 = w2;
        out.eps_pp = w2.and_then(|w| {
            let q = ff.E * w[0] * w[0] + 2.0 * ff.F * w[0] * w[1] + ff.G * w[1] * w[1];
            Causal::of_norm2(q, ff.E.abs() + ff.G.abs()).sign_opt()
        });
    }
    out.orientation = orientation;
    out.shape_residual = residual;
    out
}

pub fn principal_curvatures(sp: &SurfacePatch, u: f64, v: f64) -> Result<PrincipalData> {
    let ff = fundamental_forms(sp, u, v)?;
    Ok(principal_from_forms(&ff, sp.declared_r()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Regular,
    Umbilic,
    NonImmersion,
    NullNormal,
    NonDiagonalizable,
    Breakdown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeSample {
    pub i: usize,
    pub j: usize,
    pub u: f64,
    pub v: f64,
    pub status: NodeStatus,
    pub point: Option<PseudoVec>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub quadric_residual: Option<f64>,
    pub shape_residual: f64,
    pub message: Option<String>,
}

fn sample_node(sp: &SurfacePatch, i: usize, j: usize, u: f64, v: f64) -> NodeSample {
    let mut node = NodeSample {
        i,
        j,
        u,
        v,
        status: NodeStatus::Regular,
        point: None,
        k1: None,
        k2: None,
        quadric_residual: None,
        shape_residual: 0.0,
        message: None,
    };
    match sp.point(u, v) {
        Ok(x) => {
            node.point = Some(x);
            node.quadric_residual = Some(quadric_residual(&x, sp.space()).abs());
        }
        Err(e) => {
            node.status = NodeStatus::Breakdown;
            node.message = Some(e.to_string());
            return node;
        }
    }
    match principal_curvatures(sp, u, v) {
        Ok(pd) => {
            node.k1 = pd.k1;
            node.k2 = pd.k2;
            node.shape_residual = pd.shape_residual;
            node.status = if !pd.diagonalizable {
                NodeStatus::NonDiagonalizable
            } else if pd.umbilic {
                NodeStatus::Umbilic
            } else {
                NodeStatus::Regular
            };
        }
        Err(GeomError::DegenerateTangentPlane { .. }) => node.status = NodeStatus::NonImmersion,
        Err(GeomError::NullNormal) => node.status = NodeStatus::NullNormal,
        Err(e) => {
            node.status = NodeStatus::Breakdown;
            node.message = Some(e.to_string());
        }
    }
    node
}

/// Samples every grid node in parallel; the result is in row-major order.
pub fn sample_grid(sp: &SurfacePatch, grid: Grid) -> Vec<NodeSample> {
    grid.points(&sp.domain())
        .into_par_iter()
        .map(|(i, j, u, v)| sample_node(sp, i, j, u, v))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub nu: usize,
    pub nv: usize,
    pub u: (f64, f64),
    pub v: (f64, f64),
    pub v_periodic: bool,
}

impl GridSpec {
    pub fn new(grid: Grid, d: &PatchDomain) -> Self {
        GridSpec {
            nu: grid.nu,
            nv: grid.nv,
            u: d.u,
            v: d.v,
            v_periodic: d.v_periodic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub grid: GridSpec,
    pub declared_r: f64,
    pub tol: f64,
    pub evaluated: usize,
    pub max_k2_residual: f64,
    pub argmax: Option<(usize, usize)>,
    pub max_quadric_residual: f64,
    pub max_shape_residual: f64,
    pub umbilic: Vec<(usize, usize)>,
    pub non_immersion: Vec<(usize, usize)>,
    pub null_normal: Vec<(usize, usize)>,
    pub non_diagonalizable: Vec<(usize, usize)>,
    pub breakdown: Vec<(usize, usize)>,
    pub passed: bool,
    #[serde(skip)]
    pub nodes: Vec<NodeSample>,
}

impl CurvatureReport {
    pub fn node(&self, i: usize, j: usize) -> &NodeSample {
        &self.nodes[i * self.grid.nv + j]
    }
}

/// Checks `κ₂ = 1/r` on every immersed, diagonalizable grid node.
pub fn constant_pc_verify(sp: &SurfacePatch, grid: Grid, tol: f64) -> CurvatureReport {
    let declared_r = sp.declared_r().unwrap_or(f64::NAN);
    let nodes = sample_grid(sp, grid);
    let mut report = CurvatureReport {
        grid: GridSpec::new(grid, &sp.domain()),
        declared_r,
        tol,
        evaluated: 0,
        max_k2_residual: 0.0,
        argmax: None,
        max_quadric_residual: 0.0,
        max_shape_residual: 0.0,
        umbilic: Vec::new(),
        non_immersion: Vec::new(),
        null_normal: Vec::new(),
        non_diagonalizable: Vec::new(),
        breakdown: Vec::new(),
        passed: false,
        nodes: Vec::new(),
    };
    for n in &nodes {
        let at = (n.i, n.j);
        if let Some(q) = n.quadric_residual {
            report.max_quadric_residual = report.max_quadric_residual.max(q);
        }
        match n.status {
            NodeStatus::NonImmersion => report.non_immersion.push(at),
            NodeStatus::NullNormal => report.null_normal.push(at),
            NodeStatus::NonDiagonalizable => report.non_diagonalizable.push(at),
            NodeStatus::Breakdown => report.breakdown.push(at),
            NodeStatus::Regular | NodeStatus::Umbilic => {
                if n.status == NodeStatus::Umbilic {
                    report.umbilic.push(at);
                }
                report.evaluated += 1;
                let res = (n.k2.unwrap() - 1.0 / declared_r).abs();
                if !(res <= report.max_k2_residual) {
                    report.max_k2_residual = res;
                    report.argmax = Some(at);
                }
                report.max_shape_residual = report.max_shape_residual.max(n.shape_residual);
            }
        }
    }
    report.passed = report.evaluated > 0 && report.max_k2_residual < tol && report.breakdown.is_empty();
    report.nodes = nodes;
    report
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FoliationReport {
    pub max_g_u: f64,
    /// Component of `φ_vv` along the tangent direction orthogonal to `φ_v`.
    pub max_tangential: f64,
    /// `max |φ_vv - γ|` for parabolic tubes, `γ` the null generating curve.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_parabolic: Option<f64>,
    pub evaluated: usize,
    pub argmax: Option<(usize, usize)>,
    pub passed: bool,
}

/// Checks that the `v`-lines are pregeodesics: `G_u = 0` and `φ_vv` has no
/// tangential component orthogonal to `φ_v`.
pub fn geodesic_foliation_check(sp: &SurfacePatch, grid: Grid) -> FoliationReport {
    let p = sp.space().p();
    let pd = sp.parabolic_data();
    let eval = |(i, j, u, v): (usize, usize, f64, f64)| -> Option<(usize, usize, f64, f64, Option<f64>)> {
        let jet = surface_jet(sp, u, v).ok()?;
        let e = inner(&jet.phi_u, &jet.phi_u, p);
        let f = inner(&jet.phi_u, &jet.phi_v, p);
        let g = inner(&jet.phi_v, &jet.phi_v, p);
        let (det, scale) = crate::ambient::gram_det(&jet.phi_u, &jet.phi_v, p);
        if !(det.abs() > crate::ambient::DEGENERACY_TOL * scale) {
            return None;
        }
        let g_u = 2.0 * inner(&jet.phi_uv, &jet.phi_v, p);
        let w = jet.phi_u.scale_f(g) - jet.phi_v.scale_f(f);
        let ww = inner(&w, &w, p);
        let tangential = if ww.abs() > 1e-300 {
            inner(&jet.phi_vv, &w, p) / ww.abs().sqrt()
        } else {
            0.0
        };
        let _ = e;
        let parabolic = pd.and_then(|d| d.null_curve(u).ok()).map(|gamma| (jet.phi_vv - gamma).max_abs());
        Some((i, j, g_u.abs(), tangential.abs(), parabolic))
    };
    let samples: Vec<_> = grid.points(&sp.domain()).into_par_iter().map(eval).collect();
    let mut report = FoliationReport {
        max_g_u: 0.0,
        max_tangential: 0.0,
        max_parabolic: pd.map(|_| 0.0),
        evaluated: 0,
        argmax: None,
        passed: false,
    };
    let mut worst = 0.0f64;
    for (i, j, g_u, t, par) in samples.into_iter().flatten() {
        report.evaluated += 1;
        report.max_g_u = report.max_g_u.max(g_u);
        report.max_tangential = report.max_tangential.max(t);
        if let (Some(m), Some(x)) = (report.max_parabolic.as_mut(), par) {
            *m = m.max(x);
        }
        let here = g_u.max(t).max(par.unwrap_or(0.0));
        if here > worst {
            worst = here;
            report.argmax = Some((i, j));
        }
    }
    report.passed = report.evaluated > 0
        && report.max_g_u < FOLIATION_TOL
        && report.max_tangential < FOLIATION_TOL
        && report.max_parabolic.map_or(true, |m| m < FOLIATION_TOL);
    report
}

/// Where a normalized generating curve lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HomeSpace {
    Quadric { space: SpaceForm },
    NullCone { p: u8 },
}

impl HomeSpace {
    pub fn residual(&self, x: &PseudoVec) -> f64 {
        match self {
            HomeSpace::Quadric { space } => quadric_residual(x, *space),
            HomeSpace::NullCone { p } => NullCone { p: *p }.residual(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            HomeSpace::Quadric { space } => space.name(),
            HomeSpace::NullCone { .. } => "null cone",
        }
    }

    /// The name, followed by the causal character of the curve in Lorentzian spaces.
    pub fn label(&self, causal: Option<Causal>) -> String {
        match (self, causal) {
            (HomeSpace::Quadric { space }, Some(c)) if space.signature() == (1, 2) => {
                format!("{}, {}", space.name(), c)
            }
            _ => self.name().to_string(),
        }
    }
}

/// The home space of a normalized generating curve.
pub fn home_space(p: u8, eps: i8, eps_p: i8, eps_pp: i8, c: f64) -> Result<HomeSpace> {
    if eps == 0 {
        return Ok(HomeSpace::Quadric {
            space: SpaceForm::new(p as i8, 0)?,
        });
    }
    match classify_tube(c) {
        TubeKind::Parabolic => Ok(HomeSpace::NullCone { p }),
        kind => {
            let sign = if kind == TubeKind::Elliptic { 1 } else { -1 };
            Ok(HomeSpace::Quadric {
                space: SpaceForm::new(p as i8, eps * eps_p * eps_pp * sign)?,
            })
        }
    }
}

/// Scales `γ̃` into its home space: by `ε′ε″ sgn(c) r⁻¹|c|^{-1/2}`, or by `ε″ε′` when `c = 0`.
pub fn normalize_generating_curve(
    samples: &[PseudoVec],
    c: f64,
    r: f64,
    space: SpaceForm,
    eps_p: i8,
    eps_pp: i8,
) -> Result<(Vec<PseudoVec>, HomeSpace)> {
    let home = home_space(space.p(), space.eps(), eps_p, eps_pp, c)?;
    let sign = (eps_p * eps_pp) as f64;
    let factor = match home {
        HomeSpace::NullCone { .. } => sign,
        _ => sign * c.signum() / (r * c.abs().sqrt()),
    };
    Ok((samples.iter().map(|x| x.scale_f(factor)).collect(), home))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveSample {
    pub u: f64,
    /// `v`-average of `φ + rN`.
    pub gamma_tilde: PseudoVec,
    pub gamma: PseudoVec,
    /// `d/du (φ + rN)` at the first immersed `v` node.
    pub velocity: PseudoVec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Reconstruction {
    pub c: f64,
    pub eps_p: i8,
    pub eps_pp: i8,
    pub home: HomeSpace,
    pub causal: Option<Causal>,
    pub home_label: String,
    /// `max_u max_v |γ̃(u, v) - mean_v γ̃(u, ·)|`
    pub v_spread: f64,
    /// `εε′ε″r²c`, or `None` on flat spaces.
    pub expected_norm: Option<f64>,
    /// `max |‖γ̃‖² - εε′ε″r²c|`, or `max |γ̃₄|` on flat spaces.
    pub norm_residual: f64,
    pub home_residual: f64,
    pub samples: Vec<CurveSample>,
}

/// `γ̃ = φ + rN` on the grid with `N` oriented so that `κ₂ = +1/r`.
pub fn reconstruct_generating_curve(sp: &SurfacePatch, grid: Grid) -> Result<Reconstruction> {
    let r = sp
        .declared_r()
        .ok_or(GeomError::InvalidCurve("reconstruction needs a declared constant curvature".into()))?;
    let space = sp.space();
    let p = space.p();
    let domain = sp.domain();
    let us = grid.u_values(&domain);
    let vs = grid.v_values(&domain);

    type Row = Vec<(PseudoVec, PseudoVec, i8, Option<i8>)>;
    let rows: Vec<Result<Row>> = us
        .par_iter()
        .map(|&u| {
            let mut row = Vec::new();
            for &v in &vs {
                let ff = match fundamental_forms(sp, u, v) {
                    Ok(ff) => ff,
                    Err(GeomError::DegenerateTangentPlane { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let pd = principal_from_forms(&ff, Some(r));
                let phi = sp.jet(u, v, 2)?;
                let n = unit_normal_jet(sp, u, v, 1)?;
                let gt = phi.map(|c| c.truncate(1)) + n.scale_f(r * pd.orientation);
                let vel = gt.map(|c| c.derivative(1, 0));
                row.push((gt.value(), vel, pd.eps_p, pd.eps_pp));
            }
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<Row>>>()?;

    let eps_p = match sp.declared_eps_p() {
        Some(e) => e,
        None => rows.iter().flatten().next().map(|x| x.2).ok_or(GeomError::ImmersionViolation)?,
    };
    let eps_pp = match sp.declared_eps_pp() {
        Some(e) => e,
        None => rows
            .iter()
            .flatten()
            .find_map(|x| x.3)
            .ok_or(GeomError::ImmersionViolation)?,
    };
    let eps = space.eps();
    let c = critical_constant(eps, eps_p, eps_pp, r);
    let expected = (eps != 0).then(|| (eps * eps_p * eps_pp) as f64 * r * r * c);

    let mut v_spread = 0.0f64;
    let mut norm_residual = 0.0f64;
    let mut means = Vec::new();
    let mut velocities = Vec::new();
    let mut sample_us = Vec::new();
    for (row, &u) in rows.iter().zip(&us) {
        if row.is_empty() {
            continue;
        }
        let mut mean = PseudoVec::ZERO;
        for (g, ..) in row {
            mean = mean + *g;
            norm_residual = norm_residual.max(match expected {
                Some(x) => (norm2(g, p) - x).abs(),
                None => g[3].abs(),
            });
        }
        mean = mean.scale_f(1.0 / row.len() as f64);
        for (g, ..) in row {
            v_spread = v_spread.max((*g - mean).max_abs());
        }
        means.push(mean);
        velocities.push(row[0].1);
        sample_us.push(u);
    }
    if means.is_empty() {
        return Err(GeomError::ImmersionViolation);
    }
    let (gammas, home) = normalize_generating_curve(&means, c, r, space, eps_p, eps_pp)?;
    let home_residual = gammas.iter().fold(0.0f64, |m, g| m.max(home.residual(g).abs()));

    // the causal character with the clearest signal along the curve
    let causal = velocities
        .iter()
        .map(|w| norm2(w, p))
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .map(|q| Causal::of_norm2(q, 1.0));
    let home_label = home.label(causal);
    let samples = sample_us
        .into_iter()
        .zip(means.iter().zip(&gammas))
        .zip(&velocities)
        .map(|((u, (gt, g)), vel)| CurveSample {
            u,
            gamma_tilde: *gt,
            gamma: *g,
            velocity: *vel,
        })
        .collect();
    Ok(Reconstruction {
        c,
        eps_p,
        eps_pp,
        home,
        causal,
        home_label,
        v_spread,
        expected_norm: expected,
        norm_residual,
        home_residual,
        samples,
    })
}

/// `max |e + ⟨N_u, φ_u⟩|`-type discrepancy between the second form computed
/// from `φ_uu` and from differentiating the normal.
pub fn normal_consistency(sp: &SurfacePatch, u: f64, v: f64) -> Result<f64> {
    let p = sp.space().p();
    let jet = surface_jet(sp, u, v)?;
    let n = unit_normal_jet(sp, u, v, 1)?;
    let nv = n.value();
    let nu = n.map(|c| c.derivative(1, 0));
    let nvv = n.map(|c| c.derivative(0, 1));
    let pairs = [
        (inner(&jet.phi_uu, &nv, p), -inner(&nu, &jet.phi_u, p)),
        (inner(&jet.phi_uv, &nv, p), -inner(&nu, &jet.phi_v, p)),
        (inner(&jet.phi_uv, &nv, p), -inner(&nvv, &jet.phi_u, p)),
        (inner(&jet.phi_vv, &nv, p), -inner(&nvv, &jet.phi_v, p)),
    ];
    Ok(pairs.iter().fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Steps for the finite-difference oracle: first and second derivatives.
pub const FD_STEP_FIRST: f64 = 1e-4;
pub const FD_STEP_SECOND: f64 = 1e-3;

/// Largest discrepancy between the jet partials and Richardson-extrapolated central differences.
pub fn fd_crosscheck(sp: &SurfacePatch, u: f64, v: f64) -> Result<f64> {
    let jet = surface_jet(sp, u, v)?;
    let f = |du: f64, dv: f64| sp.jet(u + du, v + dv, 0).map(|j| j.value());

    let first = |h: f64, along_u: bool| -> Result<PseudoVec> {
        let (a, b) = if along_u { (h, 0.0) } else { (0.0, h) };
        Ok((f(a, b)? - f(-a, -b)?).scale_f(0.5 / h))
    };
    let second = |h: f64, kind: u8| -> Result<PseudoVec> {
        let c = f(0.0, 0.0)?;
        Ok(match kind {
            0 => (f(h, 0.0)? - c.scale_f(2.0) + f(-h, 0.0)?).scale_f(1.0 / (h * h)),
            1 => (f(0.0, h)? - c.scale_f(2.0) + f(0.0, -h)?).scale_f(1.0 / (h * h)),
            _ => (f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?).scale_f(0.25 / (h * h)),
        })
    };
    let richardson = |coarse: PseudoVec, fine: PseudoVec| (fine.scale_f(4.0) - coarse).scale_f(1.0 / 3.0);

    let h1 = FD_STEP_FIRST;
    let h2 = FD_STEP_SECOND;
    let checks = [
        (jet.phi_u, richardson(first(h1, true)?, first(h1 / 2.0, true)?)),
        (jet.phi_v, richardson(first(h1, false)?, first(h1 / 2.0, false)?)),
        (jet.phi_uu, richardson(second(h2, 0)?, second(h2 / 2.0, 0)?)),
        (jet.phi_vv, richardson(second(h2, 1)?, second(h2 / 2.0, 1)?)),
        (jet.phi_uv, richardson(second(h2, 2)?, second(h2 / 2.0, 2)?)),
    ];
    Ok(checks.iter().fold(0.0f64, |m, (a, b)| m.max((*a - *b).max_abs())))
}

/// Worst disagreement between a patch's curvatures and the reciprocals of its polar's.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PolarSpectral {
    /// `max |κ̂ - 1/κ|`
    pub absolute: f64,
    /// `max |κ̂ - 1/κ| / (1 + |1/κ|)`
    pub relative: f64,
    pub evaluated: usize,
}

/// Compares both eigenvalues over the grid, matching them in whichever order fits better.
pub fn polar_spectral_check(sp: &SurfacePatch, polar: &SurfacePatch, grid: Grid) -> PolarSpectral {
    let pts = grid.points(&sp.domain());
    pts.par_iter()
        .map(|&(_, _, u, v)| {
            let (Ok(a), Ok(b)) = (principal_curvatures(sp, u, v), principal_curvatures(polar, u, v)) else {
                return PolarSpectral::default();
            };
            let (Some(a1), Some(a2), Some(b1), Some(b2)) = (a.k1, a.k2, b.k1, b.k2) else {
                return PolarSpectral::default();
            };
            let pair = |x: f64, k: f64| {
                let d = (x - 1.0 / k).abs();
                (d, d / (1.0 + (1.0 / k).abs()))
            };
            let direct = [pair(b1, a1), pair(b2, a2)];
            let crossed = [pair(b1, a2), pair(b2, a1)];
            let worst = |p: [(f64, f64); 2]| (p[0].0.max(p[1].0), p[0].1.max(p[1].1));
            let (d, c) = (worst(direct), worst(crossed));
            let (absolute, relative) = if d.0 <= c.0 { d } else { c };
            PolarSpectral { absolute, relative, evaluated: 1 }
        })
        .reduce(PolarSpectral::default, |x, y| PolarSpectral {
            absolute: x.absolute.max(y.absolute),
            relative: x.relative.max(y.relative),
            evaluated: x.evaluated + y.evaluated,
        })
}

/// `max |ψ(u, v) - φ(u, v)|` over the grid.
pub fn pointwise_distance(a: &SurfacePatch, b: &SurfacePatch, grid: Grid) -> Result<f64> {
    let pts = grid.points(&a.domain());
    let ds: Vec<Result<f64>> = pts
        .par_iter()
        .map(|&(_, _, u, v)| Ok((a.point(u, v)? - b.point(u, v)?).max_abs()))
        .collect();
    ds.into_iter().try_fold(0.0f64, |m, d| Ok(m.max(d?)))
}

/// Geodesic distance in a Riemannian space form, from the ambient inner product.
pub fn geodesic_distance(x: &PseudoVec, y: &PseudoVec, space: SpaceForm) -> Option<f64> {
    match (space.p(), space.eps()) {
        (0, 0) => Some((*x - *y).euclid_norm()),
        (0, 1) => Some(inner(x, y, 0).clamp(-1.0, 1.0).acos()),
        (1, -1) => Some((-inner(x, y, 1)).max(1.0).acosh()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tubes::{external_patch, SurfaceExpr};

    fn cylinder() -> SurfacePatch {
        external_patch(
            SpaceForm::E3,
            SurfaceExpr::cylinder(1.0),
            PatchDomain::periodic_v((-1.0, 1.0)),
            "cylinder",
        )
        .with_declared_r(1.0)
    }

    #[test]
    fn cylinder_jet_and_normal() {
        let sp = cylinder();
        let j = surface_jet(&sp, 0.0, 0.0).unwrap();
        assert_eq!(j.phi_vv, PseudoVec::new(0.0, -1.0, 0.0, 0.0));
        for v in [0.0, 0.7, 2.0] {
            let (n, eps_p) = unit_normal(&sp, 0.3, v).unwrap();
            assert_eq!(eps_p, 1);
            let want = PseudoVec::new(0.0, v.cos(), v.sin(), 0.0);
            assert!((n - want).max_abs() < 1e-15 || (n + want).max_abs() < 1e-15);
        }
    }

    #[test]
    fn cylinder_forms_and_curvatures() {
        let sp = cylinder();
        let ff = fundamental_forms(&sp, 0.2, 1.0).unwrap();
        assert_eq!((ff.E, ff.F, ff.G), (1.0, 0.0, 1.0));
        assert_eq!((ff.e, ff.f), (0.0, 0.0));
        assert!((ff.g.abs() - 1.0).abs() < 1e-15);
        let pd = principal_curvatures(&sp, 0.2, 1.0).unwrap();
        assert!((pd.k2.unwrap() - 1.0).abs() < 1e-15);
        assert!(pd.k1.unwrap().abs() < 1e-15);
        assert_eq!(pd.dir2.map(|d| d[1].abs()), Some(1.0));
    }

    #[test]
    fn constant_point_has_zero_derivatives() {
        let expr = SurfaceExpr {
            terms: vec![crate::tubes::SurfaceTerm::new(
                crate::curves::Basis::One,
                crate::curves::Basis::One,
                [0.0, 0.0, 0.0, 1.0],
            )],
        };
        let sp = external_patch(SpaceForm::S3, expr, PatchDomain::new((0.0, 1.0), (0.0, 1.0)), "point");
        let j = surface_jet(&sp, 0.5, 0.5).unwrap();
        assert_eq!(j.phi, PseudoVec::basis(3));
        for d in [j.phi_u, j.phi_v, j.phi_uu, j.phi_uv, j.phi_vv] {
            assert_eq!(d, PseudoVec::ZERO);
        }
        assert!(matches!(
            unit_normal(&sp, 0.5, 0.5),
            Err(GeomError::DegenerateTangentPlane { .. })
        ));
    }

    #[test]
    fn spacelike_plane_in_l3_has_timelike_normal() {
        use crate::curves::Basis;
        use crate::tubes::SurfaceTerm;
        let expr = SurfaceExpr {
            terms: vec![
                SurfaceTerm::new(Basis::One, Basis::One, [2.0, 0.0, 0.0, 0.0]),
                SurfaceTerm::new(Basis::Lin, Basis::One, [0.0, 1.0, 0.0, 0.0]),
                SurfaceTerm::new(Basis::One, Basis::Lin, [0.0, 0.0, 1.0, 0.0]),
            ],
        };
        let sp = external_patch(SpaceForm::L3, expr, PatchDomain::new((-1.0, 1.0), (-1.0, 1.0)), "plane");
        let (n, eps_p) = unit_normal(&sp, 0.1, 0.2).unwrap();
        assert_eq!(eps_p, -1);
        assert_eq!(n[0].abs(), 1.0);
        assert_eq!((n[1], n[2], n[3]), (0.0, 0.0, 0.0));
    }

    #[test]
    fn sphere_is_umbilic() {
        let sp = external_patch(
            SpaceForm::E3,
            SurfaceExpr::sphere(2.0),
            PatchDomain::new((-1.2, 1.2), (0.0, 6.0)),
            "sphere",
        )
        .with_declared_r(2.0);
        let report = constant_pc_verify(&sp, Grid::new(9, 9), 1e-8);
        assert!(report.passed, "{report:?}");
        assert_eq!(report.umbilic.len(), 81);
    }

    #[test]
    fn saddle_is_not_diagonalizable() {
        let sp = external_patch(
            SpaceForm::L3,
            SurfaceExpr::lorentz_saddle(),
            PatchDomain::new((-0.3, 0.3), (-0.3, 0.3)),
            "saddle",
        );
        let pd = principal_curvatures(&sp, 0.0, 0.0).unwrap();
        assert!(!pd.diagonalizable);
        assert!(pd.k1.is_none());
    }

    #[test]
    fn paraboloid_fails_foliation() {
        let sp = external_patch(
            SpaceForm::E3,
            SurfaceExpr::paraboloid(),
            PatchDomain::new((-1.0, 1.0), (-1.0, 1.0)),
            "paraboloid",
        );
        let rep = geodesic_foliation_check(&sp, Grid::new(11, 11));
        assert_eq!(rep.max_g_u, 0.0);
        assert!(rep.max_tangential > 1.0);
        assert!(!rep.passed);
    }

    #[test]
    fn grid_layout() {
        let d = PatchDomain::periodic_v((-1.0, 0.968_75));
        let g = Grid::new(64, 8);
        let us = g.u_values(&d);
        assert_eq!(us[32], 0.0);
        let vs = g.v_values(&d);
        assert_eq!(vs.len(), 8);
        assert!((vs[4] - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn normalization_examples() {
        let x = [PseudoVec::new(0.0, 3.0, 0.0, 0.0)];
        let (g, home) = normalize_generating_curve(&x, 0.25, 2.0, SpaceForm::E3, 1, 1).unwrap();
        assert_eq!(g[0], x[0]);
        assert_eq!(home, HomeSpace::Quadric { space: SpaceForm::E3 });
        // ‖γ̃‖² = 3 on the H³ tube with r = 2
        let x = [PseudoVec::new(0.0, 0.0, 3f64.sqrt(), 0.0)];
        let (g, home) = normalize_generating_curve(&x, -0.75, 2.0, SpaceForm::H3, 1, 1).unwrap();
        assert_eq!(home, HomeSpace::Quadric { space: SpaceForm::DS3 });
        assert!((norm2(&g[0], 1) - 1.0).abs() < 1e-15);
        let x = [PseudoVec::new(1.0, 1.0, 0.0, 0.0)];
        let (g, home) = normalize_generating_curve(&x, 0.0, 1.0, SpaceForm::H3, 1, 1).unwrap();
        assert_eq!(home, HomeSpace::NullCone { p: 1 });
        assert_eq!(g[0], x[0]);
    }
}
