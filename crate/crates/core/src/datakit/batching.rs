use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::AttributeValues;
use crate::error::{Error, Result};

/// Index batches for one epoch.
///
/// Discrete attributes yield batches with exactly `batch_size / C` samples of
/// each of the `C` classes; samples that cannot complete a balanced batch are
/// dropped. Continuous attributes yield shuffled full batches.
pub fn balanced_batches(attribute: &AttributeValues, batch_size: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match attribute {
        AttributeValues::Discrete(labels) => {
            let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut pools: Vec<Vec<usize>> = vec![Vec::new(); classes];
            for (i, &l) in labels.iter().enumerate() {
                pools[l].push(i);
            }
            pools.retain(|p| !p.is_empty());
            if pools.len() < 2 {
                return Err(Error::Data("balanced batching needs at least two classes".into()));
            }
            let per = batch_size / pools.len();
            if per == 0 {
                return Err(Error::Config(format!(
                    "batch size {batch_size} is smaller than the number of classes {}",
                    pools.len()
                )));
            }
            for p in &mut pools {
                p.shuffle(&mut rng);
            }
            let n_batches = pools.iter().map(|p| p.len() / per).min().unwrap_or(0);
            let dropped: usize = pools.iter().map(|p| p.len() - n_batches * per).sum();
            if dropped > 0 {
                log::debug!("balanced batching drops {dropped} samples this epoch");
            }
            let mut batches = Vec::with_capacity(n_batches);
            for b in 0..n_batches {
                let mut batch = Vec::with_capacity(per * pools.len());
                for p in &pools {
                    batch.extend_from_slice(&p[b * per..(b + 1) * per]);
                }
                batch.shuffle(&mut rng);
                batches.push(batch);
            }
            Ok(batches)
        }
        AttributeValues::Continuous(values) => {
            if batch_size == 0 {
                return Err(Error::Config("batch size must be positive".into()));
            }
            let mut idx: Vec<usize> = (0..values.len()).collect();
            idx.shuffle(&mut rng);
            Ok(idx.chunks_exact(batch_size).map(<[usize]>::to_vec).collect())
        }
    }
}
