use std::fs;
use std::io::{Cursor, Read};
use std::path::Path;

use super::network::{NetworkConfig, Param, QNetwork};
use super::optim::{AdamW, AdamWConfig};
use super::trainer::Trainer;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"RLCQECKP";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume or replay a trained agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub online: QNetwork,
    pub target: QNetwork,
    pub adam_m: Vec<Vec<f64>>,
    pub adam_v: Vec<Vec<f64>>,
    pub adam_step: u64,
    pub episode: u64,
    pub epsilon: f64,
}

impl Checkpoint {
    pub fn from_trainer(t: &Trainer) -> Self {
        Checkpoint {
            online: t.online.clone(),
            target: t.target.clone(),
            adam_m: t.optimizer.m.clone(),
            adam_v: t.optimizer.v.clone(),
            adam_step: t.optimizer.step,
            episode: t.episode,
            epsilon: t.epsilon(),
        }
    }

    pub fn optimizer(&self, cfg: AdamWConfig) -> AdamW {
        AdamW { cfg, m: self.adam_m.clone(), v: self.adam_v.clone(), step: self.adam_step }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let net = &self.online;
        let cfg = net.config();
        for v in [net.input_dim(), net.n_actions(), cfg.trunk[0], cfg.trunk[1], cfg.stream] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&cfg.layer_norm_eps.to_le_bytes());
        out.extend_from_slice(&self.episode.to_le_bytes());
        out.extend_from_slice(&self.adam_step.to_le_bytes());
        out.extend_from_slice(&self.epsilon.to_le_bytes());
        let names: Vec<&Param> = net.params().iter().collect();
        let mut arrays: Vec<(String, &[usize], &[f64])> = Vec::new();
        for (prefix, params) in [("online", self.online.params()), ("target", self.target.params())] {
            for p in params {
                arrays.push((format!("{prefix}/{}", p.name), &p.shape, &p.data));
            }
        }
        for (prefix, moments) in [("adam.m", &self.adam_m), ("adam.v", &self.adam_v)] {
            for (p, m) in names.iter().zip(moments) {
                arrays.push((format!("{prefix}/{}", p.name), &p.shape, m));
            }
        }
        out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
        for (name, shape, data) in arrays {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for d in shape {
                out.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            out.extend_from_slice(&(data.len() as u64).to_le_bytes());
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor::new(bytes);
        let corrupt = |what: &str| Error::Checkpoint(format!("truncated or corrupt checkpoint ({what})"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| corrupt("magic"))?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("not a checkpoint file".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        let mut u32_ = |r: &mut Cursor<&[u8]>, what: &str| -> Result<u32> {
            r.read_exact(&mut b4).map_err(|_| corrupt(what))?;
            Ok(u32::from_le_bytes(b4))
        };
        let version = u32_(&mut r, "version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
        }
        let mut u64_ = |r: &mut Cursor<&[u8]>, what: &str| -> Result<u64> {
            r.read_exact(&mut b8).map_err(|_| corrupt(what))?;
            Ok(u64::from_le_bytes(b8))
        };
        let input_dim = u64_(&mut r, "input")? as usize;
        let n_actions = u64_(&mut r, "actions")? as usize;
        let t0 = u64_(&mut r, "trunk")? as usize;
        let t1 = u64_(&mut r, "trunk")? as usize;
        let stream = u64_(&mut r, "stream")? as usize;
        let eps = f64::from_bits(u64_(&mut r, "eps")?);
        let episode = u64_(&mut r, "episode")?;
        let adam_step = u64_(&mut r, "step")?;
        let epsilon = f64::from_bits(u64_(&mut r, "epsilon")?);
        let n_arrays = u32_(&mut r, "count")? as usize;
        let mut arrays = Vec::with_capacity(n_arrays);
        for _ in 0..n_arrays {
            let len = u32_(&mut r, "name")? as usize;
            let mut name = vec![0u8; len];
            r.read_exact(&mut name).map_err(|_| corrupt("name"))?;
            let name = String::from_utf8(name).map_err(|_| corrupt("name"))?;
            let nd = u32_(&mut r, "rank")? as usize;
            let shape = (0..nd).map(|_| u64_(&mut r, "shape").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n = u64_(&mut r, "length")? as usize;
            if n > bytes.len() / 8 {
                return Err(corrupt("length"));
            }
            let data = (0..n).map(|_| u64_(&mut r, "data").map(f64::from_bits)).collect::<Result<Vec<_>>>()?;
            arrays.push((name, shape, data));
        }
        let cfg = NetworkConfig { trunk: [t0, t1], stream, layer_norm_eps: eps };
        let reference = QNetwork::new(input_dim, n_actions, cfg, 0)?;
        let count = reference.params().len();
        if arrays.len() != 4 * count {
            return Err(Error::Checkpoint(format!("expected {} arrays, found {}", 4 * count, arrays.len())));
        }
        let mut it = arrays.into_iter();
        let mut take_params = |prefix: &str| -> Result<Vec<Param>> {
            reference
                .params()
                .iter()
                .map(|p| {
                    let (name, shape, data) = it.next().expect("counted");
                    if name != format!("{prefix}/{}", p.name) || shape != p.shape || data.len() != p.data.len() {
                        return Err(Error::Checkpoint(format!("unexpected array `{name}`")));
                    }
                    Ok(Param { name: p.name.clone(), shape, data, decay: p.decay })
                })
                .collect()
        };
        let online = QNetwork::from_params(input_dim, n_actions, cfg, take_params("online")?)?;
        let target = QNetwork::from_params(input_dim, n_actions, cfg, take_params("target")?)?;
        let adam_m = take_params("adam.m")?.into_iter().map(|p| p.data).collect();
        let adam_v = take_params("adam.v")?.into_iter().map(|p| p.data).collect();
        Ok(Checkpoint { online, target, adam_m, adam_v, adam_step, episode, epsilon })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
