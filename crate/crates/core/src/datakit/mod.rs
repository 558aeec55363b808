//! Embedding files, synthetic data, speaker-disjoint partitions, balanced
//! batching and conditioning priors.

mod batching;
mod conditioning;
mod partition;
mod records;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

pub use batching::balanced_batches;
pub use conditioning::{fit_logit_prior, sample_conditioning, ConditioningStrategy, LogitPrior};
pub use partition::{make_partitions, read_trials, write_trials_to, PartitionRatios, PartitionSpec, Role, TrialPair};
pub use records::{read_embeddings, validate_records, write_embeddings, write_embeddings_to, EmbeddingRecord, Sex};
pub use synth::{generate_synthetic, speaker_name, GroundTruth, SynthConfig};

/// Binary sex label or continuous age.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeKind {
    #[default]
    Discrete,
    Continuous,
}

impl AttributeKind {
    /// Width of the conditioning logits: two classes or one regressed value.
    pub fn logit_dim(self) -> usize {
        match self {
            AttributeKind::Discrete => 2,
            AttributeKind::Continuous => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AttributeValues {
    Discrete(Vec<usize>),
    Continuous(Vec<f64>),
}

impl AttributeValues {
    pub fn len(&self) -> usize {
        match self {
            AttributeValues::Discrete(v) => v.len(),
            AttributeValues::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> AttributeKind {
        match self {
            AttributeValues::Discrete(_) => AttributeKind::Discrete,
            AttributeValues::Continuous(_) => AttributeKind::Continuous,
        }
    }

    pub fn select(&self, idx: &[usize]) -> AttributeValues {
        match self {
            AttributeValues::Discrete(v) => AttributeValues::Discrete(idx.iter().map(|&i| v[i]).collect()),
            AttributeValues::Continuous(v) => AttributeValues::Continuous(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Records laid out as a matrix with integer speaker indices and attribute values.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Tensor<f64>,
    /// Index into `speaker_ids` per row.
    pub speakers: Vec<usize>,
    pub speaker_ids: Vec<String>,
    pub utterance_ids: Vec<String>,
    pub attribute: AttributeValues,
}

impl Dataset {
    pub fn from_records<'a, I>(records: I, kind: AttributeKind) -> Result<Self>
    where
        I: IntoIterator<Item = &'a EmbeddingRecord>,
    {
        let records: Vec<&EmbeddingRecord> = records.into_iter().collect();
        let Some(first) = records.first() else {
            return Err(Error::Data("empty dataset".into()));
        };
        let dim = first.vector.len();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        for r in &records {
            let next = index.len();
            index.entry(r.speaker_id.as_str()).or_insert(next);
        }
        let mut data = Vec::with_capacity(records.len() * dim);
        let mut speakers = Vec::with_capacity(records.len());
        let mut utts = Vec::with_capacity(records.len());
        let mut disc = Vec::new();
        let mut cont = Vec::new();
        for r in &records {
            if r.vector.len() != dim {
                return Err(Error::Data(format!("{} has dimension {}, expected {dim}", r.utterance_id, r.vector.len())));
            }
            data.extend_from_slice(&r.vector);
            speakers.push(index[r.speaker_id.as_str()]);
            utts.push(r.utterance_id.clone());
            match kind {
                AttributeKind::Discrete => match r.sex {
                    Some(s) => disc.push(s.index()),
                    None => return Err(Error::Data(format!("{} has no sex label", r.utterance_id))),
                },
                AttributeKind::Continuous => match r.age {
                    Some(a) => cont.push(a),
                    None => return Err(Error::Data(format!("{} has no age label", r.utterance_id))),
                },
            }
        }
        let mut speaker_ids = vec![String::new(); index.len()];
        for (name, i) in index {
            speaker_ids[i] = name.to_string();
        }
        Ok(Dataset {
            x: Tensor::new(&[records.len(), dim], data)?,
            speakers,
            speaker_ids,
            utterance_ids: utts,
            attribute: match kind {
                AttributeKind::Discrete => AttributeValues::Discrete(disc),
                AttributeKind::Continuous => AttributeValues::Continuous(cont),
            },
        })
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn num_speakers(&self) -> usize {
        self.speaker_ids.len()
    }

    /// Rows of `x` at `idx`.
    pub fn gather(&self, idx: &[usize]) -> Tensor<f64> {
        gather_rows(&self.x, idx)
    }
}

pub fn gather_rows(x: &Tensor<f64>, idx: &[usize]) -> Tensor<f64> {
    let c = x.cols();
    let mut data = Vec::with_capacity(idx.len() * c);
    for &i in idx {
        data.extend_from_slice(x.row(i));
    }
    Tensor::new(&[idx.len(), c], data).expect("gathered rows match shape")
}
