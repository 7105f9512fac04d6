use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("(p, eps) = ({p}, {eps}) is not an admissible space form")]
    InadmissibleSpaceForm { p: i8, eps: i8 },
    #[error("the flat space has no polar space")]
    FlatSpaceHasNoPolar,
    #[error("tangent plane is degenerate (|det| = {det:e})")]
    DegenerateTangentPlane { det: f64 },
    #[error("normal vector is lightlike")]
    NullNormal,
    #[error("normal bundle does not admit frame signature {requested:?}")]
    FrameSignatureUnavailable { requested: (i8, i8) },
    #[error("curve loses regularity at u = {u}")]
    RegularityLoss { u: f64 },
    #[error("matrix is not in the isometry Lie algebra (residual {residual:e} at u = {u})")]
    NotInLieAlgebra { u: f64, residual: f64 },
    #[error("parabolic tubes have no tube distance")]
    ParabolicHasNoDistance,
    #[error("critical constant {c} does not match a {expected} tube")]
    WrongClassification { c: f64, expected: &'static str },
    #[error("frame signature {found:?} does not match the required {required:?}")]
    FrameSignatureMismatch { found: (i8, i8), required: (i8, i8) },
    #[error("parabolic data violates its invariants (residual {residual:e} at u = {u})")]
    InvalidParabolicData { u: f64, residual: f64 },
    #[error("principal curvature vanishes at (u, v) = ({u}, {v})")]
    VanishingPrincipalCurvature { u: f64, v: f64 },
    #[error("({u}, {v}) lies outside the patch domain")]
    OutOfDomain { u: f64, v: f64 },
    #[error("requested domain contains no immersion points")]
    ImmersionViolation,
    #[error("point is off the quadric (residual {residual:e})")]
    NotOnQuadric { residual: f64 },
    #[error("sign triple (eps, eps', eps'') = {triple:?} with r = {r} is not a row of the classification table")]
    NotATableRow { triple: (i8, i8, i8), r: f64 },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
