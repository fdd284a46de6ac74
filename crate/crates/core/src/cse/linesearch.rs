use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::exponential::exp_action_into;
use super::residual::{energy_and_shifted, residual_of_slice, ResidualNorm};
use crate::fockspace::{Flavor, GeneratorMatrix, SectorBasis, StateVector};
use crate::{Error, Result};

/// Function of the transformed state that a line search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Objective {
    /// `E(theta)`.
    Energy,
    /// `E(theta) + lambda ||R(theta)||`, the negated step reward before penalties.
    Reward { lambda: f64, norm: ResidualNorm },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LineSearchConfig {
    /// Search interval is `[-theta_max, theta_max]`.
    pub theta_max: f64,
    /// Coarse bracketing grid size; forced odd so `theta = 0` is a node.
    pub grid_points: usize,
    /// Golden-section termination width in theta.
    pub tolerance: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        LineSearchConfig { theta_max: 0.5, grid_points: 41, tolerance: 1e-6 }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_max > 0.0 && self.theta_max.is_finite()) {
            return Err(Error::config("theta_max", "must be positive and finite"));
        }
        if self.grid_points < 3 {
            return Err(Error::config("grid_points", "must be at least 3"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("tolerance", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchResult {
    pub theta: f64,
    /// Objective at `theta`.
    pub value: f64,
    pub state: StateVector,
    pub energy: f64,
    /// Frobenius residual norm of `state` under the objective's norm, when the
    /// objective needed it.
    pub residual_norm: Option<f64>,
}

/// Objective evaluator along one generator direction with reusable scratch.
pub(crate) struct Ray<'a> {
    m: &'a GeneratorMatrix,
    psi: &'a [f64],
    h: &'a DMatrix<f64>,
    basis: &'a SectorBasis,
    objective: Objective,
    scratch: Vec<f64>,
}

impl<'a> Ray<'a> {
    pub(crate) fn new(
        m: &'a GeneratorMatrix,
        psi: &'a [f64],
        h: &'a DMatrix<f64>,
        basis: &'a SectorBasis,
        objective: Objective,
    ) -> Self {
        Ray { m, psi, h, basis, objective, scratch: vec![0.0; psi.len()] }
    }

    fn transformed(&mut self, theta: f64) {
        let norm = exp_action_into(self.m, self.psi, theta, &mut self.scratch);
        if self.m.generator.flavor() != Flavor::AntiHermitian {
            self.scratch.iter_mut().for_each(|x| *x /= norm);
        }
    }

    /// Objective value, energy and residual norm at `theta`.
    pub(crate) fn eval_full(&mut self, theta: f64) -> (f64, f64, Option<f64>) {
        self.transformed(theta);
        match self.objective {
            Objective::Energy => {
                let (e, _) = energy_and_shifted(&self.scratch, self.h);
                (e, e, None)
            }
            Objective::Reward { lambda, norm } => {
                let r = residual_of_slice(&self.scratch, self.h, self.basis);
                let rn = r.norm(norm);
                (r.energy() + lambda * rn, r.energy(), Some(rn))
            }
        }
    }

    pub(crate) fn eval(&mut self, theta: f64) -> f64 {
        self.eval_full(theta).0
    }
}

/// Minimizes the objective on `[-theta_max, theta_max]` by a coarse grid scan
/// followed by golden-section refinement around the best node. The result is
/// never worse than `theta = 0`.
pub(crate) fn minimize_along(ray: &mut Ray<'_>, cfg: &LineSearchConfig) -> (f64, f64) {
    let value0 = ray.eval(0.0);
    if ray.m.is_zero() {
        return (0.0, value0);
    }
    let n = cfg.grid_points | 1;
    let half = (n / 2) as f64;
    let node = |g: usize| cfg.theta_max * (g as f64 - half) / half;
    let mut best = (n / 2, value0);
    for g in 0..n {
        if g == n / 2 {
            continue;
        }
        let v = ray.eval(node(g));
        if v < best.1 {
            best = (g, v);
        }
    }
    let (g, grid_value) = best;
    let mut lo = node(g.saturating_sub(1));
    let mut hi = node((g + 1).min(n - 1));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = ray.eval(x1);
    let mut f2 = ray.eval(x2);
    while hi - lo > cfg.tolerance {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = ray.eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = ray.eval(x2);
        }
    }
    let mut candidates = [(node(g), grid_value), (x1, f1), (x2, f2)];
    candidates.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (theta, value) = candidates[0];
    if value < value0 {
        (theta, value)
    } else {
        (0.0, value0)
    }
}

/// One-parameter minimization of the objective over `exp(theta A) |psi>`.
pub fn line_search_theta(
    psi: &StateVector,
    m: &GeneratorMatrix,
    h: &DMatrix<f64>,
    basis: &SectorBasis,
    objective: Objective,
    cfg: &LineSearchConfig,
) -> Result<LineSearchResult> {
    cfg.validate()?;
    if psi.dim() != basis.dim() || m.dim != basis.dim() || h.nrows() != basis.dim() {
        return Err(Error::Dimension("state, generator and Hamiltonian disagree on dimension".into()));
    }
    let mut ray = Ray::new(m, psi.as_slice(), h, basis, objective);
    let (theta, _) = minimize_along(&mut ray, cfg);
    let (value, energy, residual_norm) = ray.eval_full(theta);
    let state = if theta == 0.0 {
        psi.clone()
    } else {
        StateVector::from_unnormalized(DVector::from_column_slice(&ray.scratch))?
    };
    Ok(LineSearchResult { theta, value, state, energy, residual_norm })
}
