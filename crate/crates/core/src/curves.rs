//! Framed generating curves.
//!
//! A [`FramedCurve`] is `u ↦ (γ(u), e₁(u), e₂(u))` with `(e₁, e₂)` an
//! orthonormal frame of the normal plane of `γ` inside its space form. A
//! [`ParabolicData`] is the triple `(δ₊, δ₋, e₁)` generating a parabolic tube.
//! Both are evaluated as univariate jets, either from closed forms, cubic
//! splines, or integrated frame ODEs.

use serde::{Deserialize, Serialize};

use crate::ambient::{gram_schmidt, inner, norm2, quadric_residual, PseudoVec, SpaceForm, Vec4};
use crate::error::{GeomError, Result};
use crate::flow::{FlowGenerator, LinearFlow, DEFAULT_STEPS};
use crate::jet::{Jet, JetShape};
use crate::profile::Profile;

/// Tolerance on frame invariants for accepted curves.
pub const FRAME_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    One,
    Lin,
    HalfSquare,
    Cos,
    Sin,
    Cosh,
    Sinh,
}

fn one() -> f64 {
    1.0
}

/// `basis(freq · u) · vec`
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTerm {
    pub basis: Basis,
    #[serde(default = "one")]
    pub freq: f64,
    pub vec: [f64; 4],
}

impl CurveTerm {
    pub fn new(basis: Basis, freq: f64, vec: [f64; 4]) -> Self {
        CurveTerm { basis, freq, vec }
    }
}

/// A closed-form curve `Σ basis_k(ω_k u) v_k`.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurveExpr {
    pub terms: Vec<CurveTerm>,
}

impl CurveExpr {
    pub fn new(terms: Vec<CurveTerm>) -> Self {
        CurveExpr { terms }
    }

    pub fn constant(v: [f64; 4]) -> Self {
        CurveExpr::new(vec![CurveTerm::new(Basis::One, 1.0, v)])
    }

    pub fn eval(&self, u: Jet) -> Vec4<Jet> {
        let zero = Jet::constant(0.0, u.shape());
        let mut out = Vec4([zero; 4]);
        for t in &self.terms {
            let x = u * t.freq;
            let f = match t.basis {
                Basis::One => Jet::constant(1.0, u.shape()),
                Basis::Lin => x,
                Basis::HalfSquare => x * x * 0.5,
                Basis::Cos => x.cos(),
                Basis::Sin => x.sin(),
                Basis::Cosh => x.cosh(),
                Basis::Sinh => x.sinh(),
            };
            for i in 0..4 {
                if t.vec[i] != 0.0 {
                    out.0[i] += f * t.vec[i];
                }
            }
        }
        out
    }

    pub fn jet(&self, u: f64, order: usize) -> Vec4<Jet> {
        self.eval(Jet::variable(u, JetShape::univariate(order), 0))
    }
}

// 6-point Gauss–Legendre on [-1, 1].
const GL6: [(f64, f64); 6] = [
    (-0.932_469_514_203_152_1, 0.171_324_492_379_170_35),
    (-0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (-0.238_619_186_083_196_9, 0.467_913_934_572_691),
    (0.238_619_186_083_196_9, 0.467_913_934_572_691),
    (0.661_209_386_466_264_5, 0.360_761_573_048_138_6),
    (0.932_469_514_203_152_1, 0.171_324_492_379_170_35),
];

const PANEL: f64 = 0.025;

/// `e₀(s) = (0, -sin s, cos s, 0)`, the unit tangent of the unit circle in `R × C`.
fn rc_tangent(s: Jet) -> Vec4<Jet> {
    let z = Jet::constant(0.0, s.shape());
    Vec4([z, -s.sin(), s.cos(), z])
}

fn gl_panel(f: &dyn Fn(f64) -> PseudoVec, a: f64, b: f64) -> PseudoVec {
    let h = b - a;
    let mid = a + 0.5 * h;
    GL6.iter()
        .fold(PseudoVec::ZERO, |acc, (x, w)| acc + f(mid + 0.5 * h * x).scale_f(0.5 * h * w))
}

/// Panels sit on the fixed lattice `k·PANEL`, so moving an endpoint only
/// changes the partial panels next to it and the result is smooth in `a`, `b`.
fn gl_integrate(f: &dyn Fn(f64) -> PseudoVec, a: f64, b: f64, panel: f64) -> PseudoVec {
    let mut total = PseudoVec::ZERO;
    if a == b {
        return total;
    }
    let mut lo = a;
    let mut k = (a / panel).floor() + 1.0;
    while lo < b {
        let hi = (k * panel).min(b);
        if hi > lo {
            total = total + gl_panel(f, lo, hi);
        }
        lo = hi;
        k += 1.0;
    }
    total
}

/// Natural cubic spline through `(u, x)` samples, optionally renormalized onto a quadric.
#[derive(Clone, Debug)]
pub struct SampledCurve {
    knots: Vec<f64>,
    // per coordinate, per interval: (a, b, c, d) of a + b s + c s² + d s³
    pieces: [Vec<[f64; 4]>; 4],
    project: Option<SpaceForm>,
}

impl SampledCurve {
    pub fn new(samples: &[(f64, PseudoVec)], project: Option<SpaceForm>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(GeomError::InvalidCurve("at least four samples are required".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(GeomError::InvalidCurve("sample parameters must increase".into()));
        }
        let knots: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let pieces = std::array::from_fn(|i| {
            let ys: Vec<f64> = samples.iter().map(|s| s.1[i]).collect();
            natural_spline(&knots, &ys)
        });
        Ok(SampledCurve { knots, pieces, project })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    fn jet(&self, u: f64, order: usize) -> Vec4<Jet> {
        let shape = JetShape::univariate(order);
        let n = self.knots.len();
        let k = self.knots.partition_point(|&x| x <= u).clamp(1, n - 1) - 1;
        let s = u - self.knots[k];
        let raw = Vec4(std::array::from_fn(|i| {
            let [a, b, c, d] = self.pieces[i][k];
            let coeffs = [
                a + s * (b + s * (c + s * d)),
                b + s * (2.0 * c + 3.0 * s * d),
                c + 3.0 * d * s,
                d,
            ];
            let mut full = vec![0.0; order + 1];
            for (slot, c) in full.iter_mut().zip(coeffs) {
                *slot = c;
            }
            Jet::from_coeffs(shape, &full)
        }));
        match self.project {
            Some(space) if !space.is_flat() => {
                let n2 = norm2(&raw, space.p());
                let scale = (n2 * space.eps() as f64).sqrt().recip();
                raw.scale(scale)
            }
            _ => raw,
        }
    }
}

fn natural_spline(x: &[f64], y: &[f64]) -> Vec<[f64; 4]> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    // second derivatives m, with m[0] = m[n-1] = 0
    let mut m = vec![0.0; n];
    if n > 2 {
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        let mut sub = vec![0.0; k];
        for i in 0..k {
            diag[i] = 2.0 * (h[i] + h[i + 1]);
            rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
            sub[i] = h[i];
        }
        // Thomas algorithm; super-diagonal entry i is h[i+1]
        for i in 1..k {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * h[i];
            rhs[i] -= w * rhs[i - 1];
        }
        m[k] = rhs[k - 1] / diag[k - 1];
        for i in (0..k - 1).rev() {
            m[i + 1] = (rhs[i] - h[i + 1] * m[i + 2]) / diag[i];
        }
    }
    (0..n - 1)
        .map(|i| {
            let a = y[i];
            let b = (y[i + 1] - y[i]) / h[i] - h[i] * (2.0 * m[i] + m[i + 1]) / 6.0;
            let c = m[i] / 2.0;
            let d = (m[i + 1] - m[i]) / (6.0 * h[i]);
            [a, b, c, d]
        })
        .collect()
}

/// A curve in `R⁴`.
#[derive(Clone, Debug)]
pub enum Curve {
    Expr(CurveExpr),
    /// `∫₀ᵘ h(s) e₀(s) ds` in the `R × C` decomposition of the first three coordinates.
    ProfileIntegral { h: Profile },
    Sampled(SampledCurve),
}

impl Curve {
    /// Position and derivatives at `u` as univariate jets.
    pub fn jet(&self, u: f64, order: usize) -> Vec4<Jet> {
        match self {
            Curve::Expr(e) => e.jet(u, order),
            Curve::ProfileIntegral { h } => {
                let shape = JetShape::univariate(order.saturating_sub(1));
                let s = Jet::variable(u, shape, 0);
                let speed = h.eval(s);
                let integrand = rc_tangent(s).scale(speed);
                let base = profile_integral_value(h, u);
                let full = JetShape::univariate(order);
                Vec4(std::array::from_fn(|i| {
                    if order == 0 {
                        return Jet::constant(base[i], full);
                    }
                    let mut j = integrand.0[i].integrate_univariate();
                    if j.shape().order() != order {
                        j = j.truncate(order);
                    }
                    j + base[i]
                }))
            }
            Curve::Sampled(s) => s.jet(u, order),
        }
    }

    pub fn point(&self, u: f64) -> PseudoVec {
        self.jet(u, 0).value()
    }

    pub fn curve_jet(&self, u: f64) -> CurveJet {
        let j = self.jet(u, 3);
        CurveJet {
            point: j.value(),
            d1: j.map(|c| c.derivative(1, 0)),
            d2: j.map(|c| c.derivative(2, 0)),
            d3: Some(j.map(|c| c.derivative(3, 0))),
        }
    }
}

/// Bumps are flat but not analytic at their support edges; coarse panels next
/// to an edge miss the quadrature target and the error wobbles with `u`.
fn panel_for(h: &Profile) -> f64 {
    match h {
        Profile::Bump { width, .. } | Profile::Dip { width, .. } => (width / 40.0).min(PANEL),
        _ => PANEL,
    }
}

fn profile_integral_value(h: &Profile, u: f64) -> PseudoVec {
    let f = |s: f64| -> PseudoVec {
        let hv = h.value(s);
        PseudoVec::new(0.0, -hv * s.sin(), hv * s.cos(), 0.0)
    };
    let (a, b, sign) = if u >= 0.0 { (0.0, u, 1.0) } else { (u, 0.0, -1.0) };
    let mut cuts: Vec<f64> = h.breakpoints().into_iter().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);
    let total = edges
        .windows(2)
        .fold(PseudoVec::ZERO, |acc, w| acc + gl_integrate(&f, w[0], w[1], panel_for(h)));
    total.scale_f(sign)
}

/// Point and first derivatives of a curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveJet {
    pub point: PseudoVec,
    pub d1: PseudoVec,
    pub d2: PseudoVec,
    pub d3: Option<PseudoVec>,
}

/// `(γ, e₁, e₂)` as univariate jets.
#[derive(Clone, Copy, Debug)]
pub struct FrameJets {
    pub gamma: Vec4<Jet>,
    pub e1: Vec4<Jet>,
    pub e2: Vec4<Jet>,
}

#[derive(Clone, Debug)]
enum FrameRepr {
    Closed { curve: Curve, e1: CurveExpr, e2: CurveExpr },
    Transported { curve: Curve, flow: LinearFlow },
    System { flow: LinearFlow, rows: [usize; 3] },
}

/// Frame signature `(‖e₁‖², ‖e₂‖²)`.
pub type FrameSignature = (i8, i8);

#[derive(Clone, Debug)]
pub struct FramedCurve {
    space: SpaceForm,
    signature: FrameSignature,
    domain: (f64, f64),
    repr: FrameRepr,
}

/// Deviation of every frame invariant at one parameter.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FrameResiduals {
    pub entries: Vec<(String, f64)>,
}

impl FrameResiduals {
    fn push(&mut self, name: &str, value: f64) {
        self.entries.push((name.to_string(), value.abs()));
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().fold(0.0f64, |m, (_, v)| m.max(*v))
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

fn check_signature(sig: FrameSignature) -> Result<()> {
    if [sig.0, sig.1].iter().all(|s| *s == 1 || *s == -1) {
        Ok(())
    } else {
        Err(GeomError::InvalidFrame(format!("signature {sig:?} must have entries ±1")))
    }
}

/// Number of timelike directions in the normal plane of a curve with tangent causal sign `tangent_sign`.
fn normal_negatives(space: SpaceForm, tangent_sign: f64) -> i32 {
    let (neg, _) = space.signature();
    neg as i32 - i32::from(tangent_sign < 0.0)
}

fn validation_samples(domain: (f64, f64)) -> impl Iterator<Item = f64> {
    let n = 64;
    (0..=n).map(move |k| domain.0 + (domain.1 - domain.0) * k as f64 / n as f64)
}

impl FramedCurve {
    /// A curve with a closed-form frame. Invariants are checked on a sample grid.
    pub fn closed(
        space: SpaceForm,
        curve: Curve,
        e1: CurveExpr,
        e2: CurveExpr,
        signature: FrameSignature,
        domain: (f64, f64),
    ) -> Result<Self> {
        check_signature(signature)?;
        let fc = FramedCurve {
            space,
            signature,
            domain,
            repr: FrameRepr::Closed { curve, e1, e2 },
        };
        fc.validate()?;
        Ok(fc)
    }

    pub fn space(&self) -> SpaceForm {
        self.space
    }

    pub fn signature(&self) -> FrameSignature {
        self.signature
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn jets(&self, u: f64, order: usize) -> Result<FrameJets> {
        match &self.repr {
            FrameRepr::Closed { curve, e1, e2 } => Ok(FrameJets {
                gamma: curve.jet(u, order),
                e1: e1.jet(u, order),
                e2: e2.jet(u, order),
            }),
            FrameRepr::Transported { curve, flow } => {
                let s = flow.state_jets(u, order)?;
                Ok(FrameJets {
                    gamma: curve.jet(u, order),
                    e1: Vec4([s[0], s[1], s[2], s[3]]),
                    e2: Vec4([s[4], s[5], s[6], s[7]]),
                })
            }
            FrameRepr::System { flow, rows } => {
                let s = flow.state_jets(u, order)?;
                let row = |r: usize| Vec4([s[4 * r], s[4 * r + 1], s[4 * r + 2], s[4 * r + 3]]);
                Ok(FrameJets {
                    gamma: row(rows[0]),
                    e1: row(rows[1]),
                    e2: row(rows[2]),
                })
            }
        }
    }

    /// `γ'(u) = 0`: a vertex of the generating curve.
    pub fn is_vertex(&self, u: f64) -> Result<bool> {
        let j = self.jets(u, 1)?;
        let d1 = j.gamma.map(|c| c.derivative(1, 0));
        Ok(d1.euclid_norm() < 1e-12)
    }

    pub fn frame_residuals(&self, u: f64) -> Result<FrameResiduals> {
        let j = self.jets(u, 1)?;
        let p = self.space.p();
        let g = j.gamma.value();
        let gp = j.gamma.map(|c| c.derivative(1, 0));
        let e1 = j.e1.value();
        let e2 = j.e2.value();
        let mut r = FrameResiduals::default();
        r.push("quadric", quadric_residual(&g, self.space));
        if !self.space.is_flat() {
            r.push("<e1,gamma>", inner(&e1, &g, p));
            r.push("<e2,gamma>", inner(&e2, &g, p));
            r.push("<gamma,gamma'>", inner(&g, &gp, p));
        } else {
            r.push("e1.x4", e1[3]);
            r.push("e2.x4", e2[3]);
        }
        r.push("<e1,gamma'>", inner(&e1, &gp, p));
        r.push("<e2,gamma'>", inner(&e2, &gp, p));
        r.push("<e1,e2>", inner(&e1, &e2, p));
        r.push("|e1|^2", norm2(&e1, p) - self.signature.0 as f64);
        r.push("|e2|^2", norm2(&e2, p) - self.signature.1 as f64);
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        for u in validation_samples(self.domain) {
            let r = self.frame_residuals(u)?;
            let j = self.jets(u, 1)?;
            let scale = 1.0 + j.gamma.map(|c| c.derivative(1, 0)).euclid_norm() + j.gamma.value().euclid_norm();
            if r.max() > FRAME_TOL * scale {
                let (name, value) = r
                    .entries
                    .iter()
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .cloned()
                    .unwrap();
                return Err(GeomError::InvalidFrame(format!(
                    "{name} residual {value:e} at u = {u} in {}",
                    self.space
                )));
            }
        }
        Ok(())
    }
}

/// Parallel transport in the normal bundle: `e' = -(⟨e, γ''⟩/‖γ'‖²) γ'`.
struct NormalTransport<'a> {
    curve: &'a Curve,
    p: u8,
}

impl FlowGenerator for NormalTransport<'_> {
    fn dim(&self) -> usize {
        8
    }

    fn series(&self, u: f64, degree: usize) -> Result<Vec<Vec<f64>>> {
        let order = degree + 2;
        let g = self.curve.jet(u, order);
        let d1 = g.map(|c| c.partial(0));
        let d2 = d1.map(|c| c.partial(0));
        let d1 = d1.map(|c| c.truncate(degree));
        let d2 = d2.map(|c| c.truncate(degree));
        let speed2 = norm2(&d1, self.p);
        if speed2.value().abs() < 1e-12 * (1.0 + d1.value().euclid_norm().powi(2)) {
            return Err(GeomError::RegularityLoss { u });
        }
        let inv = speed2.recip();
        let mut out = vec![vec![0.0; 64]; degree + 1];
        for i in 0..4 {
            for j in 0..4 {
                let sj = crate::ambient::metric_sign(j, self.p);
                let entry = -(d1.0[i] * d2.0[j] * inv) * sj;
                for (k, m) in out.iter_mut().enumerate() {
                    let c = entry.coeff(k, 0);
                    m[i * 8 + j] = c;
                    m[(i + 4) * 8 + (j + 4)] = c;
                }
            }
        }
        Ok(out)
    }
}

/// Order in which frame vectors are orthonormalized: timelike first, otherwise as given.
fn gs_order(signs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..signs.len()).collect();
    idx.sort_by_key(|&i| if signs[i] < 0.0 { 0 } else { 1 });
    idx
}

fn orthonormalize(vectors: &mut [PseudoVec], signs: &[f64], fixed: &[PseudoVec], p: u8) -> Result<()> {
    let order = gs_order(signs);
    let mut vs: Vec<PseudoVec> = order.iter().map(|&i| vectors[i]).collect();
    let ss: Vec<f64> = order.iter().map(|&i| signs[i]).collect();
    gram_schmidt(&mut vs, &ss, fixed, p)?;
    for (slot, &i) in order.iter().enumerate() {
        vectors[i] = vs[slot];
    }
    Ok(())
}

/// Transports an orthonormal normal frame `(e₁⁰, e₂⁰)` given at `u0` along `curve`.
pub fn transport_normal_frame(
    curve: Curve,
    space: SpaceForm,
    initial: (PseudoVec, PseudoVec),
    u0: f64,
    domain: (f64, f64),
    steps: Option<usize>,
) -> Result<FramedCurve> {
    let p = space.p();
    let signature: FrameSignature = (
        norm2(&initial.0, p).signum() as i8,
        norm2(&initial.1, p).signum() as i8,
    );
    let jet0 = curve.curve_jet(u0);
    let speed2 = norm2(&jet0.d1, p);
    if speed2.abs() < 1e-12 * (1.0 + jet0.d1.euclid_norm().powi(2)) {
        return Err(GeomError::RegularityLoss { u: u0 });
    }
    let negatives = i32::from(signature.0 < 0) + i32::from(signature.1 < 0);
    if negatives != normal_negatives(space, speed2) {
        return Err(GeomError::FrameSignatureUnavailable { requested: signature });
    }

    let generator = NormalTransport { curve: &curve, p };
    let signs = [signature.0 as f64, signature.1 as f64];
    let mut project = |u: f64, s: &mut [f64]| -> Result<()> {
        let j = curve.curve_jet(u);
        let mut fixed = vec![j.d1];
        if !space.is_flat() {
            fixed.insert(0, j.point);
        }
        let mut vs = [
            PseudoVec::new(s[0], s[1], s[2], s[3]),
            PseudoVec::new(s[4], s[5], s[6], s[7]),
        ];
        if space.is_flat() {
            vs[0][3] = 0.0;
            vs[1][3] = 0.0;
        }
        orthonormalize(&mut vs, &signs, &fixed, p)?;
        s[..4].copy_from_slice(&vs[0].0);
        s[4..].copy_from_slice(&vs[1].0);
        Ok(())
    };
    let init: Vec<f64> = initial.0 .0.iter().chain(initial.1 .0.iter()).copied().collect();
    let flow = LinearFlow::integrate(
        &generator,
        &init,
        u0,
        domain,
        steps.unwrap_or(DEFAULT_STEPS),
        &mut project,
    )?;
    let fc = FramedCurve {
        space,
        signature,
        domain,
        repr: FrameRepr::Transported { curve, flow },
    };
    fc.validate()?;
    Ok(fc)
}

/// One entry of a frame-system matrix: a constant or `scale · profile(u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntry {
    Const(f64),
    Scaled {
        #[serde(default = "one")]
        scale: f64,
        profile: Profile,
    },
}

impl MatrixEntry {
    fn eval(&self, u: Jet) -> Jet {
        match self {
            MatrixEntry::Const(c) => Jet::constant(*c, u.shape()),
            MatrixEntry::Scaled { scale, profile } => profile.eval(u) * *scale,
        }
    }

    pub fn profile(scale: f64, profile: Profile) -> Self {
        MatrixEntry::Scaled { scale, profile }
    }
}

/// `Φ' = M(u) Φ` where the rows of `Φ` are the frame vectors: row `r` of `M`
/// expresses the derivative of frame vector `r` in the frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrameMatrix {
    pub entries: [[MatrixEntry; 4]; 4],
}

impl FrameMatrix {
    pub fn eval(&self, u: Jet) -> [[Jet; 4]; 4] {
        std::array::from_fn(|r| std::array::from_fn(|c| self.entries[r][c].eval(u)))
    }

    /// Largest `|M_rk η_k + M_kr η_r|` at `u`: zero when `M` preserves the frame metric.
    pub fn lie_residual(&self, u: f64, signs: &[f64; 4]) -> f64 {
        let m = self.eval(Jet::constant(u, JetShape::univariate(0)));
        let mut worst = 0.0f64;
        for r in 0..4 {
            for k in 0..4 {
                worst = worst.max((m[r][k].value() * signs[k] + m[k][r].value() * signs[r]).abs());
            }
        }
        worst
    }
}

struct SystemGenerator<'a> {
    matrix: &'a FrameMatrix,
}

impl FlowGenerator for SystemGenerator<'_> {
    fn dim(&self) -> usize {
        16
    }

    fn series(&self, u: f64, degree: usize) -> Result<Vec<Vec<f64>>> {
        let m = self.matrix.eval(Jet::variable(u, JetShape::univariate(degree), 0));
        let mut out = vec![vec![0.0; 256]; degree + 1];
        for r in 0..4 {
            for k in 0..4 {
                for (d, a) in out.iter_mut().enumerate() {
                    let c = m[r][k].coeff(d, 0);
                    if c != 0.0 {
                        for col in 0..4 {
                            a[(r * 4 + col) * 16 + (k * 4 + col)] = c;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Solution of a moving-frame system in a curved space form.
#[derive(Clone, Debug)]
pub struct MovingFrame {
    p: u8,
    signs: [f64; 4],
    flow: LinearFlow,
    domain: (f64, f64),
}

/// Integrates `Φ' = M(u)Φ` from the orthonormal rows `initial` at `u0`.
pub fn solve_frame_system(
    matrix: &FrameMatrix,
    initial: [PseudoVec; 4],
    p: u8,
    u0: f64,
    domain: (f64, f64),
    steps: Option<usize>,
) -> Result<MovingFrame> {
    let signs: [f64; 4] = std::array::from_fn(|i| norm2(&initial[i], p).signum());
    for i in 0..4 {
        for k in 0..4 {
            let want = if i == k { signs[i] } else { 0.0 };
            let got = inner(&initial[i], &initial[k], p);
            if (got - want).abs() > FRAME_TOL {
                return Err(GeomError::InvalidFrame(format!(
                    "initial rows {i},{k}: inner product {got} expected {want}"
                )));
            }
        }
    }
    let steps = steps.unwrap_or(DEFAULT_STEPS);
    for k in 0..=steps {
        let u = domain.0 + (domain.1 - domain.0) * k as f64 / steps as f64;
        let residual = matrix.lie_residual(u, &signs);
        if residual > 1e-12 {
            return Err(GeomError::NotInLieAlgebra { u, residual });
        }
    }
    let generator = SystemGenerator { matrix };
    let mut project = |_u: f64, s: &mut [f64]| -> Result<()> {
        let mut rows: Vec<PseudoVec> = (0..4)
            .map(|r| PseudoVec::new(s[4 * r], s[4 * r + 1], s[4 * r + 2], s[4 * r + 3]))
            .collect();
        orthonormalize(&mut rows, &signs, &[], p)?;
        for (r, v) in rows.iter().enumerate() {
            s[4 * r..4 * r + 4].copy_from_slice(&v.0);
        }
        Ok(())
    };
    let init: Vec<f64> = initial.iter().flat_map(|v| v.0).collect();
    let flow = LinearFlow::integrate(&generator, &init, u0, domain, steps, &mut project)?;
    Ok(MovingFrame {
        p,
        signs,
        flow,
        domain,
    })
}

impl MovingFrame {
    pub fn rows(&self, u: f64, order: usize) -> Result<[Vec4<Jet>; 4]> {
        let s = self.flow.state_jets(u, order)?;
        Ok(std::array::from_fn(|r| Vec4([s[4 * r], s[4 * r + 1], s[4 * r + 2], s[4 * r + 3]])))
    }

    /// Largest deviation of the row Gram matrix from its initial value.
    pub fn orthonormality_residual(&self, u: f64) -> Result<f64> {
        let rows = self.rows(u, 0)?;
        let mut worst = 0.0f64;
        for i in 0..4 {
            for k in 0..4 {
                let want = if i == k { self.signs[i] } else { 0.0 };
                worst = worst.max((inner(&rows[i].value(), &rows[k].value(), self.p) - want).abs());
            }
        }
        Ok(worst)
    }

    pub fn signs(&self) -> [f64; 4] {
        self.signs
    }

    /// Reads rows as `(γ, e₁, e₂)`; `γ` lives on `Q³_{p, ‖γ‖²}`.
    pub fn framed_curve(&self, gamma: usize, e1: usize, e2: usize) -> Result<FramedCurve> {
        let space = SpaceForm::new(self.p as i8, self.signs[gamma] as i8)?;
        let fc = FramedCurve {
            space,
            signature: (self.signs[e1] as i8, self.signs[e2] as i8),
            domain: self.domain,
            repr: FrameRepr::System {
                flow: self.flow.clone(),
                rows: [gamma, e1, e2],
            },
        };
        fc.validate()?;
        Ok(fc)
    }

    /// Reads rows as `(δ₊, δ₋, e₁)`.
    pub fn parabolic_data(&self, plus: usize, minus: usize, e1: usize) -> Result<ParabolicData> {
        let space = SpaceForm::new(self.p as i8, self.signs[plus] as i8)?;
        let pd = ParabolicData {
            space,
            eps_pp: self.signs[e1] as i8,
            domain: self.domain,
            repr: ParabolicRepr::System {
                flow: self.flow.clone(),
                rows: [plus, minus, e1],
            },
            signs: [1.0; 3],
        };
        pd.validate()?;
        Ok(pd)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ParabolicJets {
    pub plus: Vec4<Jet>,
    pub minus: Vec4<Jet>,
    pub e1: Vec4<Jet>,
}

#[derive(Clone, Debug)]
enum ParabolicRepr {
    Closed { plus: CurveExpr, minus: CurveExpr, e1: CurveExpr },
    System { flow: LinearFlow, rows: [usize; 3] },
}

/// `u ↦ (δ₊, δ₋, e₁)` with `δ₊ ∈ Q³_{p,ε}`, `δ₋ ∈ Q³_{p,-ε}`, `‖e₁‖² = ε″`.
#[derive(Clone, Debug)]
pub struct ParabolicData {
    space: SpaceForm,
    eps_pp: i8,
    domain: (f64, f64),
    repr: ParabolicRepr,
    /// Applied to `(δ₊, δ₋, e₁)` after evaluation.
    signs: [f64; 3],
}

impl ParabolicData {
    pub fn closed(
        space: SpaceForm,
        plus: CurveExpr,
        minus: CurveExpr,
        e1: CurveExpr,
        eps_pp: i8,
        domain: (f64, f64),
    ) -> Result<Self> {
        if space.is_flat() {
            return Err(GeomError::InvalidParabolicData { u: domain.0, residual: f64::INFINITY });
        }
        let pd = ParabolicData {
            space,
            eps_pp,
            domain,
            repr: ParabolicRepr::Closed { plus, minus, e1 },
            signs: [1.0; 3],
        };
        pd.validate()?;
        Ok(pd)
    }

    /// The space of `δ₊`, which is also the space of the tube.
    pub fn space(&self) -> SpaceForm {
        self.space
    }

    pub fn eps_pp(&self) -> i8 {
        self.eps_pp
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn jets(&self, u: f64, order: usize) -> Result<ParabolicJets> {
        let [a, b, c] = self.signs;
        let j = match &self.repr {
            ParabolicRepr::Closed { plus, minus, e1 } => ParabolicJets {
                plus: plus.jet(u, order),
                minus: minus.jet(u, order),
                e1: e1.jet(u, order),
            },
            ParabolicRepr::System { flow, rows } => {
                let s = flow.state_jets(u, order)?;
                let row = |r: usize| Vec4([s[4 * r], s[4 * r + 1], s[4 * r + 2], s[4 * r + 3]]);
                ParabolicJets {
                    plus: row(rows[0]),
                    minus: row(rows[1]),
                    e1: row(rows[2]),
                }
            }
        };
        Ok(ParabolicJets {
            plus: j.plus.scale_f(a),
            minus: j.minus.scale_f(b),
            e1: j.e1.scale_f(c),
        })
    }

    /// Data of the polar tube: `(δ₋, -δ₊, εε″e₁)` in the polar space.
    /// Its null curve is `εε″γ`.
    pub fn swapped(&self) -> Result<ParabolicData> {
        let space = crate::ambient::polar_space(self.space)?;
        let repr = match &self.repr {
            ParabolicRepr::Closed { plus, minus, e1 } => ParabolicRepr::Closed {
                plus: minus.clone(),
                minus: plus.clone(),
                e1: e1.clone(),
            },
            ParabolicRepr::System { flow, rows } => ParabolicRepr::System {
                flow: flow.clone(),
                rows: [rows[1], rows[0], rows[2]],
            },
        };
        let ee = (self.space.eps() * self.eps_pp) as f64;
        let [a, b, c] = self.signs;
        Ok(ParabolicData {
            space,
            eps_pp: self.eps_pp,
            domain: self.domain,
            repr,
            signs: [b, -a, ee * c],
        })
    }

    /// `γ = -εε″δ₊ + δ₋`, which lies on the null cone.
    pub fn null_curve(&self, u: f64) -> Result<PseudoVec> {
        let j = self.jets(u, 0)?;
        let k = -(self.space.eps() as f64) * self.eps_pp as f64;
        Ok(j.plus.value().scale_f(k) + j.minus.value())
    }

    pub fn frame_residuals(&self, u: f64) -> Result<FrameResiduals> {
        let j = self.jets(u, 1)?;
        let p = self.space.p();
        let eps = self.space.eps() as f64;
        let dp = j.plus.value();
        let dm = j.minus.value();
        let e1 = j.e1.value();
        let dpp = j.plus.map(|c| c.derivative(1, 0));
        let dmp = j.minus.map(|c| c.derivative(1, 0));
        let mut r = FrameResiduals::default();
        r.push("|d+|^2", norm2(&dp, p) - eps);
        r.push("|d-|^2", norm2(&dm, p) + eps);
        r.push("<d+,d->", inner(&dp, &dm, p));
        r.push("<d+',d->", inner(&dpp, &dm, p));
        r.push("<d-',d+>", inner(&dmp, &dp, p));
        r.push("|e1|^2", norm2(&e1, p) - self.eps_pp as f64);
        r.push("<e1,d+>", inner(&e1, &dp, p));
        r.push("<e1,d->", inner(&e1, &dm, p));
        r.push("<e1,d+'>", inner(&e1, &dpp, p));
        r.push("<e1,d-'>", inner(&e1, &dmp, p));
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        for u in validation_samples(self.domain) {
            let r = self.frame_residuals(u)?;
            let j = self.jets(u, 1)?;
            let dpp = j.plus.map(|c| c.derivative(1, 0));
            let dmp = j.minus.map(|c| c.derivative(1, 0));
            if r.max() > FRAME_TOL * (1.0 + dpp.euclid_norm() + dmp.euclid_norm()) {
                return Err(GeomError::InvalidParabolicData { u, residual: r.max() });
            }
            if dpp.euclid_norm() < 1e-12 && dmp.euclid_norm() < 1e-12 {
                return Err(GeomError::RegularityLoss { u });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::PseudoVec;

    fn line_e3() -> Curve {
        Curve::Expr(CurveExpr::new(vec![CurveTerm::new(Basis::Lin, 1.0, [0.0, 0.0, 1.0, 0.0])]))
    }

    #[test]
    fn transport_along_line_is_constant() {
        let fc = transport_normal_frame(
            line_e3(),
            SpaceForm::E3,
            (PseudoVec::basis(0), PseudoVec::basis(1)),
            0.0,
            (-1.0, 1.0),
            Some(128),
        )
        .unwrap();
        for u in [-1.0, 0.1, 0.9] {
            let j = fc.jets(u, 2).unwrap();
            assert_eq!(j.e1.value(), PseudoVec::basis(0));
            assert_eq!(j.e2.value(), PseudoVec::basis(1));
            assert_eq!(j.e1.map(|c| c.derivative(1, 0)), PseudoVec::ZERO);
        }
    }

    #[test]
    fn closed_circle_frame_in_e3() {
        let circle = Curve::Expr(CurveExpr::new(vec![
            CurveTerm::new(Basis::Cos, 1.0, [0.0, 1.0, 0.0, 0.0]),
            CurveTerm::new(Basis::Sin, 1.0, [0.0, 0.0, 1.0, 0.0]),
        ]));
        let e1 = CurveExpr::new(vec![
            CurveTerm::new(Basis::Cos, 1.0, [0.0, 1.0, 0.0, 0.0]),
            CurveTerm::new(Basis::Sin, 1.0, [0.0, 0.0, 1.0, 0.0]),
        ]);
        let e2 = CurveExpr::constant([1.0, 0.0, 0.0, 0.0]);
        let fc = FramedCurve::closed(SpaceForm::E3, circle, e1, e2, (1, 1), (0.0, 6.0)).unwrap();
        assert_eq!(fc.frame_residuals(0.0).unwrap().max(), 0.0);
    }

    #[test]
    fn perturbed_frame_residual_scales_with_speed() {
        // circle of radius 3: |γ'| = 3; tilt e1 by 1e-3 toward the tangent
        let circle = Curve::Expr(CurveExpr::new(vec![
            CurveTerm::new(Basis::Cos, 1.0, [0.0, 3.0, 0.0, 0.0]),
            CurveTerm::new(Basis::Sin, 1.0, [0.0, 0.0, 3.0, 0.0]),
        ]));
        let e1 = CurveExpr::new(vec![
            CurveTerm::new(Basis::Cos, 1.0, [0.0, 1.0, 1e-3, 0.0]),
            CurveTerm::new(Basis::Sin, 1.0, [0.0, -1e-3, 1.0, 0.0]),
        ]);
        let fc = FramedCurve {
            space: SpaceForm::E3,
            signature: (1, 1),
            domain: (0.0, 1.0),
            repr: FrameRepr::Closed {
                curve: circle,
                e1,
                e2: CurveExpr::constant([1.0, 0.0, 0.0, 0.0]),
            },
        };
        let r = fc.frame_residuals(0.0).unwrap();
        assert!((r.get("<e1,gamma'>").unwrap() - 3e-3).abs() < 1e-15);
    }

    #[test]
    fn transport_along_h3_geodesic_stays_parallel() {
        let geo = Curve::Expr(CurveExpr::new(vec![
            CurveTerm::new(Basis::Cosh, 1.0, [1.0, 0.0, 0.0, 0.0]),
            CurveTerm::new(Basis::Sinh, 1.0, [0.0, 1.0, 0.0, 0.0]),
        ]));
        let fc = transport_normal_frame(
            geo,
            SpaceForm::H3,
            (PseudoVec::basis(2), PseudoVec::basis(3)),
            0.0,
            (-2.0, 2.0),
            None,
        )
        .unwrap();
        for k in 0..=40 {
            let u = -2.0 + 0.1 * k as f64;
            let j = fc.jets(u, 0).unwrap();
            assert!((j.e1.value() - PseudoVec::basis(2)).max_abs() < 1e-9);
            assert!((j.e2.value() - PseudoVec::basis(3)).max_abs() < 1e-9);
            assert!(fc.frame_residuals(u).unwrap().max() < 1e-9);
        }
    }

    #[test]
    fn definite_normal_bundle_rejects_lorentzian_frame() {
        let geo = Curve::Expr(CurveExpr::new(vec![
            CurveTerm::new(Basis::Cosh, 1.0, [1.0, 0.0, 0.0, 0.0]),
            CurveTerm::new(Basis::Sinh, 1.0, [0.0, 1.0, 0.0, 0.0]),
        ]));
        let err = transport_normal_frame(
            geo,
            SpaceForm::H3,
            (PseudoVec::new(1.0, 0.0, 0.0, 0.0), PseudoVec::basis(3)),
            0.0,
            (-1.0, 1.0),
            Some(64),
        )
        .unwrap_err();
        assert!(matches!(err, GeomError::FrameSignatureUnavailable { .. }));
    }

    #[test]
    fn transport_through_null_tangent_fails() {
        let null_line = Curve::Expr(CurveExpr::new(vec![CurveTerm::new(
            Basis::Lin,
            1.0,
            [1.0, 1.0, 0.0, 0.0],
        )]));
        let err = transport_normal_frame(
            null_line,
            SpaceForm::L3,
            (PseudoVec::basis(2), PseudoVec::basis(1)),
            0.0,
            (-1.0, 1.0),
            Some(64),
        )
        .unwrap_err();
        assert!(matches!(err, GeomError::RegularityLoss { .. }));
    }

    #[test]
    fn profile_integral_matches_circle() {
        let c = Curve::ProfileIntegral { h: Profile::constant(3.0) };
        for u in [-2.0, 0.0, 0.4, 3.0] {
            let j = c.jet(u, 3);
            let want = PseudoVec::new(0.0, 3.0 * (u.cos() - 1.0), 3.0 * u.sin(), 0.0);
            assert!((j.value() - want).max_abs() < 1e-13, "{u}");
            let d2 = j.map(|x| x.derivative(2, 0));
            let want2 = PseudoVec::new(0.0, -3.0 * u.cos(), -3.0 * u.sin(), 0.0);
            assert!((d2 - want2).max_abs() < 1e-13);
        }
    }

    #[test]
    fn spline_reproduces_cubic_interior() {
        let samples: Vec<(f64, PseudoVec)> = (0..=40)
            .map(|k| {
                let u = -1.0 + 0.05 * k as f64;
                (u, PseudoVec::new(u, u.sin(), 0.0, 0.0))
            })
            .collect();
        let s = SampledCurve::new(&samples, None).unwrap();
        let j = s.jet(0.123, 2);
        assert!((j.0[1].value() - 0.123f64.sin()).abs() < 1e-6);
        assert!((j.0[0].derivative(1, 0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_lie_matrix() {
        let mut entries: [[MatrixEntry; 4]; 4] = std::array::from_fn(|_| std::array::from_fn(|_| MatrixEntry::Const(0.0)));
        entries[0][1] = MatrixEntry::Const(1.0);
        let m = FrameMatrix { entries };
        let init = [PseudoVec::basis(1), PseudoVec::basis(2), PseudoVec::basis(3), PseudoVec::basis(0)];
        let err = solve_frame_system(&m, init, 1, 0.0, (0.0, 1.0), Some(64)).unwrap_err();
        assert!(matches!(err, GeomError::NotInLieAlgebra { .. }));
    }
}
