use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::toyscenes::Scene;

/// Source of i.i.d. batches, one sample per row.
pub trait Sampler {
    fn dim(&self) -> usize;
    fn sample(&mut self, n: usize) -> Result<Array2<f64>>;
}

/// Fresh draws from a toy scene.
#[derive(Debug, Clone)]
pub struct SceneSampler {
    scene: Scene,
    rng: ChaCha8Rng,
}

impl SceneSampler {
    pub fn new(scene: Scene, seed: u64) -> Result<Self> {
        scene.validate()?;
        Ok(SceneSampler { scene, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }
}

impl Sampler for SceneSampler {
    fn dim(&self) -> usize {
        2
    }

    fn sample(&mut self, n: usize) -> Result<Array2<f64>> {
        self.scene.sample_array(&mut self.rng, n)
    }
}

/// Draws with replacement from the atoms of a discrete measure.
#[derive(Debug, Clone)]
pub struct EmpiricalSampler {
    support: Array2<f64>,
    index: WeightedIndex<f64>,
    rng: ChaCha8Rng,
}

impl EmpiricalSampler {
    pub fn new(measure: &DiscreteMeasure, seed: u64) -> Result<Self> {
        let index = WeightedIndex::new(measure.weights())
            .map_err(|e| Error::BadParams(format!("cannot sample from measure: {e}")))?;
        Ok(EmpiricalSampler { support: measure.support_array(), index, rng: ChaCha8Rng::seed_from_u64(seed) })
    }
}

impl Sampler for EmpiricalSampler {
    fn dim(&self) -> usize {
        self.support.ncols()
    }

    fn sample(&mut self, n: usize) -> Result<Array2<f64>> {
        if n == 0 {
            return Err(Error::BadParams("sample size must be at least 1".into()));
        }
        let mut out = Array2::zeros((n, self.dim()));
        for mut row in out.rows_mut() {
            row.assign(&self.support.row(self.index.sample(&mut self.rng)));
        }
        Ok(out)
    }
}
