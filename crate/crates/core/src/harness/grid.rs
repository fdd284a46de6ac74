use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Three-atom geometries `(r1, r2)` with `r1 <= r2` and a fold label per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryGrid {
    entries: Vec<(f64, f64)>,
    folds: Vec<usize>,
    n_folds: usize,
}

impl GeometryGrid {
    /// Lattice `min + i * step` up to `max`, all in one fold.
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min > 0.0 && step > 0.0 && max >= min && max.is_finite()) {
            return Err(Error::config("molecule.geometry", format!("bad grid min={min} max={max} step={step}")));
        }
        let n = ((max - min) / step + 1e-9).floor() as usize;
        let values: Vec<f64> = (0..=n).map(|i| min + i as f64 * step).collect();
        let mut entries = Vec::with_capacity(values.len() * (values.len() + 1) / 2);
        for (a, &r1) in values.iter().enumerate() {
            for &r2 in &values[a..] {
                entries.push((r1, r2));
            }
        }
        Ok(GeometryGrid { folds: vec![0; entries.len()], entries, n_folds: 1 })
    }

    pub fn from_entries(entries: Vec<(f64, f64)>) -> Result<Self> {
        if let Some(&(r1, r2)) = entries.iter().find(|(r1, r2)| !(*r1 > 0.0 && r2 >= r1)) {
            return Err(Error::config("molecule.geometry", format!("entry ({r1}, {r2}) violates 0 < r1 <= r2")));
        }
        Ok(GeometryGrid { folds: vec![0; entries.len()], entries, n_folds: 1 })
    }

    /// Shuffles with `seed` and deals entries round-robin into `k` folds.
    pub fn with_folds(mut self, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > self.entries.len() {
            return Err(Error::config(
                "crossval.folds",
                format!("{k} folds over {} geometries leaves a fold empty", self.entries.len()),
            ));
        }
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        for (pos, &i) in order.iter().enumerate() {
            self.folds[i] = pos % k;
        }
        self.n_folds = k;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn fold_of(&self, index: usize) -> usize {
        self.folds[index]
    }

    /// Entry indices assigned to `fold`.
    pub fn fold(&self, fold: usize) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    /// Entry indices outside `fold`.
    pub fn complement(&self, fold: usize) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.folds[i] != fold).collect()
    }
}
