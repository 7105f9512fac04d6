//! Linear ODEs `s' = A(u) s` integrated with classical RK4 and re-projected
//! after every step. Each node also keeps the Taylor series of the exact
//! solution through its state, so evaluation between nodes returns jets whose
//! derivatives satisfy the ODE to roundoff.

use crate::error::{GeomError, Result};
use crate::jet::{Jet, JetShape, MAX_ORDER};

/// Degree of the per-node state series.
pub const SERIES_DEGREE: usize = MAX_ORDER - 1;

/// Default number of RK4 steps across a domain.
pub const DEFAULT_STEPS: usize = 2048;

pub trait FlowGenerator {
    fn dim(&self) -> usize;

    /// Taylor coefficients `A_0 .. A_degree` of the coefficient matrix at `u`,
    /// each row-major `dim × dim`.
    fn series(&self, u: f64, degree: usize) -> Result<Vec<Vec<f64>>>;

    fn matrix(&self, u: f64) -> Result<Vec<f64>> {
        Ok(self.series(u, 0)?.swap_remove(0))
    }
}

#[derive(Clone, Debug)]
pub struct LinearFlow {
    dim: usize,
    nodes: Vec<f64>,
    /// Per node: `(SERIES_DEGREE + 1) × dim` coefficients, degree-major.
    series: Vec<Vec<f64>>,
}

fn mat_vec(a: &[f64], s: &[f64], out: &mut [f64]) {
    let n = s.len();
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        out[i] = row.iter().zip(s).map(|(x, y)| x * y).sum();
    }
}

fn node_series(generator: &dyn FlowGenerator, u: f64, state: &[f64]) -> Result<Vec<f64>> {
    let n = state.len();
    let a = generator.series(u, SERIES_DEGREE - 1)?;
    let mut s = vec![0.0; (SERIES_DEGREE + 1) * n];
    s[..n].copy_from_slice(state);
    let mut tmp = vec![0.0; n];
    for m in 0..SERIES_DEGREE {
        let mut next = vec![0.0; n];
        for (i, ai) in a.iter().enumerate().take(m + 1) {
            mat_vec(ai, &s[(m - i) * n..(m - i + 1) * n], &mut tmp);
            for (x, t) in next.iter_mut().zip(&tmp) {
                *x += t;
            }
        }
        let inv = 1.0 / (m + 1) as f64;
        for (k, x) in next.into_iter().enumerate() {
            s[(m + 1) * n + k] = x * inv;
        }
    }
    Ok(s)
}

fn rk4_step(generator: &dyn FlowGenerator, u: f64, h: f64, s: &[f64]) -> Result<Vec<f64>> {
    let n = s.len();
    let a0 = generator.matrix(u)?;
    let am = generator.matrix(u + 0.5 * h)?;
    let a1 = generator.matrix(u + h)?;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    mat_vec(&a0, s, &mut k1);
    let t: Vec<f64> = s.iter().zip(&k1).map(|(x, k)| x + 0.5 * h * k).collect();
    mat_vec(&am, &t, &mut k2);
    let t: Vec<f64> = s.iter().zip(&k2).map(|(x, k)| x + 0.5 * h * k).collect();
    mat_vec(&am, &t, &mut k3);
    let t: Vec<f64> = s.iter().zip(&k3).map(|(x, k)| x + h * k).collect();
    mat_vec(&a1, &t, &mut k4);
    Ok((0..n)
        .map(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

impl LinearFlow {
    /// Integrates from `(u_init, init)` across `domain` with about `steps`
    /// steps in total, calling `project` on every accepted state.
    pub fn integrate(
        generator: &dyn FlowGenerator,
        init: &[f64],
        u_init: f64,
        domain: (f64, f64),
        steps: usize,
        project: &mut dyn FnMut(f64, &mut [f64]) -> Result<()>,
    ) -> Result<LinearFlow> {
        let (lo, hi) = domain;
        if !(lo < hi) || u_init < lo || u_init > hi {
            return Err(GeomError::InvalidCurve(format!(
                "initial parameter {u_init} outside domain [{lo}, {hi}]"
            )));
        }
        let dim = generator.dim();
        assert_eq!(init.len(), dim);
        let h_target = (hi - lo) / steps.max(1) as f64;
        let mut start = init.to_vec();
        project(u_init, &mut start)?;

        let walk = |end: f64, project: &mut dyn FnMut(f64, &mut [f64]) -> Result<()>| -> Result<Vec<(f64, Vec<f64>)>> {
            let len = end - u_init;
            let count = (len.abs() / h_target).ceil() as usize;
            let mut out = Vec::with_capacity(count);
            if count == 0 {
                return Ok(out);
            }
            let h = len / count as f64;
            let mut s = start.clone();
            for k in 0..count {
                let u = u_init + k as f64 * h;
                s = rk4_step(generator, u, h, &s)?;
                let u_next = if k + 1 == count { end } else { u_init + (k + 1) as f64 * h };
                project(u_next, &mut s)?;
                out.push((u_next, s.clone()));
            }
            Ok(out)
        };

        let backward = walk(lo, project)?;
        let forward = walk(hi, project)?;
        let mut states: Vec<(f64, Vec<f64>)> = backward.into_iter().rev().collect();
        states.push((u_init, start.clone()));
        states.extend(forward);

        let mut nodes = Vec::with_capacity(states.len());
        let mut series = Vec::with_capacity(states.len());
        for (u, s) in states {
            series.push(node_series(generator, u, &s)?);
            nodes.push(u);
        }
        Ok(LinearFlow { dim, nodes, series })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0], *self.nodes.last().unwrap())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn nearest(&self, u: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        let slack = (hi - lo) / (self.nodes.len().max(2) - 1) as f64;
        if u < lo - slack || u > hi + slack || !u.is_finite() {
            return Err(GeomError::InvalidCurve(format!(
                "parameter {u} outside integrated range [{lo}, {hi}]"
            )));
        }
        let k = self.nodes.partition_point(|&x| x < u);
        Ok(if k == 0 {
            0
        } else if k == self.nodes.len() {
            k - 1
        } else if (self.nodes[k] - u).abs() < (u - self.nodes[k - 1]).abs() {
            k
        } else {
            k - 1
        })
    }

    /// State components at `u` as univariate jets of the given order.
    pub fn state_jets(&self, u: f64, order: usize) -> Result<Vec<Jet>> {
        let k = self.nearest(u)?;
        let shape = JetShape::univariate(order);
        let delta = Jet::variable(u - self.nodes[k], shape, 0);
        let s = &self.series[k];
        let n = self.dim;
        Ok((0..n)
            .map(|i| {
                let mut acc = Jet::constant(s[SERIES_DEGREE * n + i], shape);
                for m in (0..SERIES_DEGREE).rev() {
                    acc = acc * delta + s[m * n + i];
                }
                acc
            })
            .collect())
    }

    pub fn state(&self, u: f64) -> Result<Vec<f64>> {
        Ok(self.state_jets(u, 0)?.iter().map(|j| j.value()).collect())
    }

    /// States at the integration nodes.
    pub fn node_states(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.nodes.iter().zip(&self.series).map(move |(u, s)| (*u, &s[..self.dim]))
    }
}
