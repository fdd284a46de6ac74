use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::exponential::apply_exponential_matrix;
use super::linesearch::{line_search_theta, LineSearchConfig, Objective};
use super::residual::{residual_tensor, ResidualNorm, ResidualTensor};
use crate::fockspace::{canonical_generators, Flavor, Generator, GeneratorMatrix, SectorBasis, StateVector};
use crate::{Error, Result};

/// Ordered generators with their sector matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorPool {
    generators: Vec<Generator>,
    matrices: Vec<GeneratorMatrix>,
}

impl GeneratorPool {
    pub fn from_generators(generators: Vec<Generator>, basis: &SectorBasis) -> Result<Self> {
        let matrices = generators.iter().map(|g| GeneratorMatrix::new(*g, basis)).collect::<Result<Vec<_>>>()?;
        Ok(GeneratorPool { generators, matrices })
    }

    /// All canonical generators of one flavor.
    pub fn canonical(basis: &SectorBasis, flavor: Flavor) -> Result<Self> {
        Self::from_generators(canonical_generators(basis.n_spatial(), flavor), basis)
    }

    /// Drops generators that vanish on the sector.
    pub fn without_inert(self) -> Self {
        let (generators, matrices) =
            self.generators.into_iter().zip(self.matrices).filter(|(_, m)| !m.is_zero()).unzip();
        GeneratorPool { generators, matrices }
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator(&self, index: usize) -> &Generator {
        &self.generators[index]
    }

    pub fn matrix(&self, index: usize) -> &GeneratorMatrix {
        &self.matrices[index]
    }

    pub fn position(&self, g: &Generator) -> Option<usize> {
        self.generators.iter().position(|x| x == g)
    }

    /// Residual coefficient of every pool generator, in pool order.
    pub fn coefficients(&self, r: &ResidualTensor) -> Vec<f64> {
        self.generators.iter().map(|g| r.coefficient(g)).collect()
    }
}

/// How each filtered generator's angle is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum StepRule {
    /// Line search per generator on the configured objective.
    LineSearch,
    /// Steepest-descent angle `-rate * dE/dtheta` from the residual at the
    /// start of the iteration.
    FixedRate { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CqeConfig {
    /// Generators applied per iteration.
    pub k: usize,
    pub max_iterations: usize,
    /// Stop once the residual norm falls below this.
    pub residual_tol: f64,
    /// Coefficients at or below this magnitude are never selected.
    pub coefficient_threshold: f64,
    /// Optional cap on total applied generators.
    pub max_actions: Option<usize>,
    pub step_rule: StepRule,
    pub line_search: LineSearchConfig,
    /// Objective minimized by each line search.
    pub objective: Objective,
    pub norm: ResidualNorm,
}

impl Default for CqeConfig {
    fn default() -> Self {
        CqeConfig {
            k: 5,
            max_iterations: 100,
            residual_tol: 1e-6,
            coefficient_threshold: 1e-10,
            max_actions: None,
            step_rule: StepRule::LineSearch,
            line_search: LineSearchConfig::default(),
            objective: Objective::Energy,
            norm: ResidualNorm::Full,
        }
    }
}

impl CqeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k", "must be at least 1"));
        }
        if let StepRule::FixedRate { rate } = self.step_rule {
            if !rate.is_finite() {
                return Err(Error::config("step_rule.rate", "must be finite"));
            }
        }
        self.line_search.validate().map_err(|e| e.within("line_search"))
    }
}

/// One applied factor `exp(theta A)` and the state it produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzStep {
    pub generator: Generator,
    pub theta: f64,
    pub energy: f64,
    pub residual_norm: f64,
}

/// Ordered product of exponentials applied to a known initial state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnsatzRecord {
    pub initial_energy: f64,
    pub initial_residual_norm: f64,
    pub steps: Vec<AnsatzStep>,
}

impl AnsatzRecord {
    pub fn new(initial_energy: f64, initial_residual_norm: f64) -> Self {
        AnsatzRecord { initial_energy, initial_residual_norm, steps: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_energy(&self) -> f64 {
        self.steps.last().map_or(self.initial_energy, |s| s.energy)
    }

    pub fn final_residual_norm(&self) -> f64 {
        self.steps.last().map_or(self.initial_residual_norm, |s| s.residual_norm)
    }

    /// Reapplies every factor to `initial`.
    pub fn replay(&self, initial: &StateVector, basis: &SectorBasis) -> Result<StateVector> {
        let mut psi = initial.clone();
        for step in &self.steps {
            let m = GeneratorMatrix::new(step.generator, basis)?;
            psi = apply_exponential_matrix(&m, &psi, step.theta)?.state;
        }
        Ok(psi)
    }

    /// Largest deviation between recorded and replayed energies.
    pub fn replay_defect(&self, initial: &StateVector, h: &DMatrix<f64>, basis: &SectorBasis) -> Result<f64> {
        let mut psi = initial.clone();
        let mut worst = (psi.expectation(h) - self.initial_energy).abs();
        for step in &self.steps {
            let m = GeneratorMatrix::new(step.generator, basis)?;
            psi = apply_exponential_matrix(&m, &psi, step.theta)?.state;
            worst = worst.max((psi.expectation(h) - step.energy).abs());
        }
        Ok(worst)
    }

    /// One `i j k l flavor theta energy residual_norm` row per step after a
    /// commented header.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# initial_energy {}", self.initial_energy);
        let _ = writeln!(out, "# initial_residual_norm {}", self.initial_residual_norm);
        let _ = writeln!(out, "# i j k l flavor theta energy residual_norm");
        for s in &self.steps {
            let [i, j, k, l] = s.generator.indices();
            let _ =
                writeln!(out, "{i} {j} {k} {l} {} {} {} {}", s.generator.flavor(), s.theta, s.energy, s.residual_norm);
        }
        out
    }

    pub fn from_text(text: &str, n_spatial: usize) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Parse { path: "<ansatz>".into(), line, message };
        let mut rec = AnsatzRecord::default();
        for (no, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                match (it.next(), it.next()) {
                    (Some("initial_energy"), Some(v)) => {
                        rec.initial_energy = v.parse().map_err(|_| bad(no, format!("bad energy `{v}`")))?
                    }
                    (Some("initial_residual_norm"), Some(v)) => {
                        rec.initial_residual_norm = v.parse().map_err(|_| bad(no, format!("bad norm `{v}`")))?
                    }
                    _ => {}
                }
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 8 {
                return Err(bad(no, format!("expected 8 fields, found {}", t.len())));
            }
            let mut idx = [0usize; 4];
            for (slot, tok) in idx.iter_mut().zip(&t[..4]) {
                *slot = tok.parse().map_err(|_| bad(no, format!("bad index `{tok}`")))?;
            }
            let flavor = Flavor::parse(t[4]).ok_or_else(|| bad(no, format!("unknown flavor `{}`", t[4])))?;
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(no, format!("bad number `{s}`")));
            let generator = Generator::new(n_spatial, idx, flavor).map_err(|e| bad(no, e.to_string()))?;
            rec.steps.push(AnsatzStep { generator, theta: num(t[5])?, energy: num(t[6])?, residual_norm: num(t[7])? });
        }
        Ok(rec)
    }
}

/// Outcome of one filtered iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredStep {
    pub state: StateVector,
    pub applied: Vec<AnsatzStep>,
}

/// Pool indices ordered by descending residual magnitude, above threshold.
pub fn rank_by_residual(r: &ResidualTensor, pool: &GeneratorPool, threshold: f64) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = pool
        .coefficients(r)
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i, c.abs()))
        .filter(|&(i, c)| c > threshold && !pool.matrix(i).is_zero())
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().map(|(i, _)| i).collect()
}

/// Applies the `k` pool generators with the largest residual coefficients in
/// order of magnitude.
pub fn filtered_cqe_step(
    psi: &StateVector,
    h: &DMatrix<f64>,
    basis: &SectorBasis,
    pool: &GeneratorPool,
    cfg: &CqeConfig,
) -> Result<FilteredStep> {
    cfg.validate()?;
    let r0 = residual_tensor(psi, h, basis)?;
    let chosen: Vec<usize> = rank_by_residual(&r0, pool, cfg.coefficient_threshold).into_iter().take(cfg.k).collect();
    let mut state = psi.clone();
    let mut applied = Vec::with_capacity(chosen.len());
    for idx in chosen {
        let m = pool.matrix(idx);
        let g = *pool.generator(idx);
        let theta = match cfg.step_rule {
            StepRule::LineSearch => line_search_theta(&state, m, h, basis, cfg.objective, &cfg.line_search)?.theta,
            StepRule::FixedRate { rate } => -rate * r0.energy_gradient(&g),
        };
        if theta == 0.0 {
            continue;
        }
        state = apply_exponential_matrix(m, &state, theta)?.state;
        let r = residual_tensor(&state, h, basis)?;
        applied.push(AnsatzStep { generator: g, theta, energy: r.energy(), residual_norm: r.norm(cfg.norm) });
    }
    Ok(FilteredStep { state, applied })
}

/// Iterates filtered steps until the residual is small, nothing improves, or a cap is hit.
pub fn run_cqe(
    psi0: &StateVector,
    h: &DMatrix<f64>,
    basis: &SectorBasis,
    pool: &GeneratorPool,
    cfg: &CqeConfig,
) -> Result<AnsatzRecord> {
    cfg.validate()?;
    let r0 = residual_tensor(psi0, h, basis)?;
    let mut record = AnsatzRecord::new(r0.energy(), r0.norm(cfg.norm));
    let mut psi = psi0.clone();
    for _ in 0..cfg.max_iterations {
        if record.final_residual_norm() < cfg.residual_tol {
            break;
        }
        let remaining = cfg.max_actions.map(|m| m.saturating_sub(record.len()));
        if remaining == Some(0) {
            break;
        }
        let mut step_cfg = *cfg;
        if let Some(rem) = remaining {
            step_cfg.k = step_cfg.k.min(rem);
        }
        let step = filtered_cqe_step(&psi, h, basis, pool, &step_cfg)?;
        if step.applied.is_empty() {
            break;
        }
        psi = step.state;
        record.steps.extend(step.applied);
    }
    Ok(record)
}
