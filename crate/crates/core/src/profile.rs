//! Scalar profile functions of the curve parameter (speeds, curvatures).

use serde::{Deserialize, Serialize};

use crate::jet::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `Σ coeffs[k] u^k`
    Poly {
        coeffs: Vec<f64>,
    },
    /// `scale · max(0, u - shift)³`, a C² ramp.
    Ramp3 {
        scale: f64,
        #[serde(default)]
        shift: f64,
    },
    /// `scale · max(0, |u| - half_width)³`: vanishes on `[-w, w]`, C² everywhere.
    Plateau3 {
        scale: f64,
        half_width: f64,
    },
    /// `scale · exp(1 - 1/(1 - x²))` with `x = (u - center)/width`, zero for `|x| ≥ 1`.
    Bump {
        scale: f64,
        #[serde(default)]
        center: f64,
        width: f64,
    },
    /// `base - bump`, handy for profiles dipping to zero on a compact set.
    Dip {
        base: f64,
        depth: f64,
        #[serde(default)]
        center: f64,
        width: f64,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn eval<T: Scalar>(&self, u: T) -> T {
        match self {
            Profile::Constant { value } => u.lift(*value),
            Profile::Poly { coeffs } => {
                let mut acc = u.lift(0.0);
                for c in coeffs.iter().rev() {
                    acc = acc * u + *c;
                }
                acc
            }
            Profile::Ramp3 { scale, shift } => {
                let x = u - *shift;
                if x.value() > 0.0 {
                    x * x * x * *scale
                } else {
                    u.lift(0.0)
                }
            }
            Profile::Plateau3 { scale, half_width } => {
                let uv = u.value();
                if uv > *half_width {
                    let x = u - *half_width;
                    x * x * x * *scale
                } else if uv < -*half_width {
                    let x = -u - *half_width;
                    x * x * x * *scale
                } else {
                    u.lift(0.0)
                }
            }
            Profile::Bump { scale, center, width } => bump(u, *center, *width) * *scale,
            Profile::Dip {
                base,
                depth,
                center,
                width,
            } => -(bump(u, *center, *width) * *depth) + *base,
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        self.eval(u)
    }

    /// Parameters where the profile is not analytic; quadrature panels break there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Profile::Constant { .. } | Profile::Poly { .. } => Vec::new(),
            Profile::Ramp3 { shift, .. } => vec![*shift],
            Profile::Plateau3 { half_width, .. } => vec![-*half_width, *half_width],
            Profile::Bump { center, width, .. } | Profile::Dip { center, width, .. } => {
                vec![center - width, *center, center + width]
            }
        }
    }
}

fn bump<T: Scalar>(u: T, center: f64, width: f64) -> T {
    let x = (u - center) / width;
    let xv = x.value();
    if xv.abs() < 1.0 {
        let one_minus = -(x * x) + 1.0;
        (-(one_minus.recip()) + 1.0).exp()
    } else {
        u.lift(0.0)
    }
}
