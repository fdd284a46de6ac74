use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cse::CqeConfig;
use crate::dqn::TrainerConfig;
use crate::integrals::OrbitalBasis;
use crate::rlenv::EnvConfig;
use crate::{Error, Result};

/// Where the Hamiltonians of an experiment come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum GeometrySpec {
    /// One chain with the given bond lengths in bohr.
    Fixed { distances: Vec<f64> },
    /// All (r1, r2) with `min <= r1 <= r2 <= max` on a uniform lattice; three atoms only.
    Grid { min: f64, max: f64, step: f64 },
    /// One chain whose bond lengths are drawn uniformly from `[min, max]`
    /// using the experiment seed. Resolved to `Fixed` before running.
    Random { min: f64, max: f64 },
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec::Fixed { distances: vec![1.5, 2.5] }
    }
}

/// Electron counts of the simulated sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SectorSpec {
    pub n_alpha: usize,
    pub n_beta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoleculeConfig {
    /// Hydrogen atoms in the linear chain.
    pub atoms: usize,
    /// Defaults to one electron per atom with the lowest `|Sz|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector: Option<SectorSpec>,
    pub geometry: GeometrySpec,
    pub orbitals: OrbitalBasis,
    /// Replaces the generated chain integrals when set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fcidump: Option<PathBuf>,
}

impl Default for MoleculeConfig {
    fn default() -> Self {
        MoleculeConfig {
            atoms: 3,
            sector: None,
            geometry: GeometrySpec::default(),
            orbitals: OrbitalBasis::CoreHamiltonian,
            fcidump: None,
        }
    }
}

impl MoleculeConfig {
    pub fn sector(&self) -> SectorSpec {
        self.sector.unwrap_or(SectorSpec { n_alpha: self.atoms.div_ceil(2), n_beta: self.atoms / 2 })
    }
}

/// Early stop when the mean per-episode reward of the last `window` episodes
/// moves by less than `tolerance` relative to the window before it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateauConfig {
    pub window: usize,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// Actions per episode of each RL arm, also the cumulative action counts
    /// at which the filtered arm is read.
    pub budgets: Vec<usize>,
    pub cqe: CqeConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig { budgets: vec![3, 5, 10, 20], cqe: CqeConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossvalConfig {
    pub folds: usize,
}

impl Default for CrossvalConfig {
    fn default() -> Self {
        CrossvalConfig { folds: 5 }
    }
}

/// Complete description of a run. Every field has a default, so an empty
/// file is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Training episodes per run.
    pub episodes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plateau: Option<PlateauConfig>,
    /// Fraction of the final episodes averaged for tail statistics.
    pub tail_fraction: f64,
    /// Actions per episode for each arm of the budget study.
    pub budgets: Vec<usize>,
    pub output: PathBuf,
    pub molecule: MoleculeConfig,
    /// `env.seed` is overwritten by a stream derived from `seed`.
    pub env: EnvConfig,
    pub trainer: TrainerConfig,
    pub baseline: BaselineConfig,
    pub crossval: CrossvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            seed: 0,
            episodes: 2000,
            plateau: None,
            tail_fraction: 0.1,
            budgets: vec![3, 5, 10],
            output: PathBuf::from("runs/experiment"),
            molecule: MoleculeConfig::default(),
            env: EnvConfig::default(),
            trainer: TrainerConfig::default(),
            baseline: BaselineConfig::default(),
            crossval: CrossvalConfig::default(),
        }
    }
}

/// Independent random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedStream {
    Environment,
    Network,
    Geometry,
    Folds,
    Evaluation,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive_seed(master: u64, stream: SeedStream) -> u64 {
    splitmix64(splitmix64(master) ^ (stream as u64 + 1))
}

fn finite_positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(field, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<toml>", e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<toml>", e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<json>", e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::config("<json>", e.to_string()))
    }

    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            Self::from_json_str(&text)?
        } else {
            Self::from_toml_str(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.molecule;
        if m.fcidump.is_none() {
            if m.atoms < 2 {
                return Err(Error::config("molecule.atoms", "need at least two atoms"));
            }
            if m.atoms > 8 {
                return Err(Error::config("molecule.atoms", "chains longer than 8 atoms are not supported"));
            }
            let s = m.sector();
            if s.n_alpha > m.atoms || s.n_beta > m.atoms || s.n_alpha + s.n_beta == 0 {
                return Err(Error::config(
                    "molecule.sector",
                    format!("({}, {}) does not fit {} orbitals", s.n_alpha, s.n_beta, m.atoms),
                ));
            }
            match &m.geometry {
                GeometrySpec::Fixed { distances } => {
                    if distances.len() + 1 != m.atoms {
                        return Err(Error::config(
                            "molecule.geometry.distances",
                            format!("{} atoms need {} distances, got {}", m.atoms, m.atoms - 1, distances.len()),
                        ));
                    }
                    for d in distances {
                        finite_positive("molecule.geometry.distances", *d)?;
                    }
                }
                GeometrySpec::Grid { min, max, step } => {
                    if m.atoms != 3 {
                        return Err(Error::config("molecule.geometry", "grids are defined for three atoms"));
                    }
                    finite_positive("molecule.geometry.min", *min)?;
                    finite_positive("molecule.geometry.step", *step)?;
                    if !(max >= min) {
                        return Err(Error::config("molecule.geometry.max", "must be at least min"));
                    }
                }
                GeometrySpec::Random { min, max } => {
                    finite_positive("molecule.geometry.min", *min)?;
                    if !(max >= min && max.is_finite()) {
                        return Err(Error::config("molecule.geometry.max", "must be finite and at least min"));
                    }
                }
            }
            if m.orbitals == OrbitalBasis::External {
                return Err(Error::config("molecule.orbitals", "`external` requires `molecule.fcidump`"));
            }
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(Error::config("tail_fraction", "must lie in (0, 1]"));
        }
        if let Some(p) = self.plateau {
            if p.window == 0 {
                return Err(Error::config("plateau.window", "must be at least 1"));
            }
            if !(p.tolerance >= 0.0) {
                return Err(Error::config("plateau.tolerance", "must be nonnegative"));
            }
        }
        if self.budgets.is_empty() {
            return Err(Error::config("budgets", "need at least one budget"));
        }
        if self.budgets.contains(&0) {
            return Err(Error::config("budgets", "budgets must be positive"));
        }
        if self.baseline.budgets.is_empty() || self.baseline.budgets.contains(&0) {
            return Err(Error::config("baseline.budgets", "need at least one positive budget"));
        }
        if self.crossval.folds == 0 {
            return Err(Error::config("crossval.folds", "must be at least 1"));
        }
        self.baseline.cqe.validate().map_err(|e| e.within("baseline.cqe"))?;
        self.env.validate().map_err(|e| e.within("env"))?;
        self.trainer.validate().map_err(|e| e.within("trainer"))?;
        Ok(())
    }

    pub fn seed_for(&self, stream: SeedStream) -> u64 {
        derive_seed(self.seed, stream)
    }

    /// Validated copy with random geometries drawn and the environment seed set.
    pub fn resolve(&self) -> Result<Self> {
        self.validate()?;
        let mut out = self.clone();
        if let GeometrySpec::Random { min, max } = self.molecule.geometry {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed_for(SeedStream::Geometry));
            let distances =
                (1..self.molecule.atoms).map(|_| if max > min { rng.random_range(min..=max) } else { min }).collect();
            out.molecule.geometry = GeometrySpec::Fixed { distances };
        }
        out.env.seed = self.seed_for(SeedStream::Environment);
        Ok(out)
    }
}
