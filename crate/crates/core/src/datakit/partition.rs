use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::records::EmbeddingRecord;
use crate::error::{Error, Result};

/// Enrollment/test utterance pair for verification scoring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPair {
    pub target: bool,
    pub enroll: String,
    pub test: String,
}

/// Speaker-disjoint roles: filter training, attacker training, evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub train_vq: Vec<String>,
    pub train_att: Vec<String>,
    pub test_att: Vec<String>,
    pub trials: Vec<TrialPair>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    TrainVq,
    TrainAtt,
    TestAtt,
}

impl PartitionSpec {
    pub fn speakers(&self, role: Role) -> &[String] {
        match role {
            Role::TrainVq => &self.train_vq,
            Role::TrainAtt => &self.train_att,
            Role::TestAtt => &self.test_att,
        }
    }

    /// Speaker sets are pairwise disjoint and trials use only test speakers.
    pub fn validate(&self, records: Option<&[EmbeddingRecord]>) -> Result<()> {
        let sets = [
            ("train_vq", &self.train_vq),
            ("train_att", &self.train_att),
            ("test_att", &self.test_att),
        ];
        for (i, (na, a)) in sets.iter().enumerate() {
            let a: BTreeSet<&String> = a.iter().collect();
            for (nb, b) in &sets[i + 1..] {
                if let Some(s) = b.iter().find(|s| a.contains(s)) {
                    return Err(Error::Data(format!("speaker {s} is in both {na} and {nb}")));
                }
            }
        }
        if let Some(records) = records {
            let test: BTreeSet<&String> = self.test_att.iter().collect();
            let owner: HashMap<&str, &str> = records
                .iter()
                .map(|r| (r.utterance_id.as_str(), r.speaker_id.as_str()))
                .collect();
            for t in &self.trials {
                for u in [&t.enroll, &t.test] {
                    match owner.get(u.as_str()) {
                        None => return Err(Error::Data(format!("trial utterance {u} not in data"))),
                        Some(s) if !test.contains(&s.to_string()) => {
                            return Err(Error::Data(format!("trial utterance {u} is not from a test speaker")))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }

    /// Records of one role, in file order.
    pub fn select<'a>(&self, records: &'a [EmbeddingRecord], role: Role) -> Vec<&'a EmbeddingRecord> {
        let set: BTreeSet<&str> = self.speakers(role).iter().map(String::as_str).collect();
        records.iter().filter(|r| set.contains(r.speaker_id.as_str())).collect()
    }
}

/// Partition sizes, either as speaker counts or as fractions of all speakers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionRatios {
    pub train_vq: f64,
    pub train_att: f64,
    pub test_att: f64,
}

impl Default for PartitionRatios {
    fn default() -> Self {
        PartitionRatios {
            train_vq: 200.0,
            train_att: 100.0,
            test_att: 50.0,
        }
    }
}

/// Splits speakers by a seeded shuffle, then draws `trials_per_class` target
/// and non-target pairs among test speakers.
///
/// Ratios that sum to at most 1 are fractions; otherwise they are speaker counts.
pub fn make_partitions(
    records: &[EmbeddingRecord],
    ratios: PartitionRatios,
    trials_per_class: usize,
    seed: u64,
) -> Result<PartitionSpec> {
    let speakers: Vec<String> = records
        .iter()
        .map(|r| r.speaker_id.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let total = speakers.len();
    let parts = [ratios.train_vq, ratios.train_att, ratios.test_att];
    if parts.iter().any(|&p| !(p > 0.0)) {
        return Err(Error::Config("partition ratios must be positive".into()));
    }
    let sum: f64 = parts.iter().sum();
    let counts: Vec<usize> = if sum <= 1.0 + 1e-12 {
        parts.iter().map(|p| (p * total as f64).round() as usize).collect()
    } else {
        parts.iter().map(|p| p.round() as usize).collect()
    };
    if counts.iter().any(|&c| c == 0) || counts.iter().sum::<usize>() > total {
        return Err(Error::Data(format!(
            "{total} speakers cannot fill partitions of {counts:?} speakers"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shuffled = speakers;
    shuffled.shuffle(&mut rng);
    let mut it = shuffled.into_iter();
    let mut take = |n: usize| -> Vec<String> {
        let mut v: Vec<String> = it.by_ref().take(n).collect();
        v.sort();
        v
    };
    let train_vq = take(counts[0]);
    let train_att = take(counts[1]);
    let test_att = take(counts[2]);
    let trials = make_trials(records, &test_att, trials_per_class, &mut rng)?;
    let spec = PartitionSpec {
        train_vq,
        train_att,
        test_att,
        trials,
    };
    spec.validate(Some(records))?;
    Ok(spec)
}

fn make_trials<R: Rng>(
    records: &[EmbeddingRecord],
    speakers: &[String],
    per_class: usize,
    rng: &mut R,
) -> Result<Vec<TrialPair>> {
    let mut by_spk: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for r in records {
        if speakers.binary_search(&r.speaker_id).is_ok() {
            by_spk.entry(&r.speaker_id).or_default().push(&r.utterance_id);
        }
    }
    let multi: Vec<&Vec<&str>> = by_spk.values().filter(|u| u.len() >= 2).collect();
    let all: Vec<&Vec<&str>> = by_spk.values().collect();
    if per_class > 0 && (multi.is_empty() || all.len() < 2) {
        return Err(Error::Data("test speakers cannot form both target and non-target trials".into()));
    }
    let mut trials = Vec::with_capacity(2 * per_class);
    for _ in 0..per_class {
        let utts = multi[rng.gen_range(0..multi.len())];
        let a = rng.gen_range(0..utts.len());
        let mut b = rng.gen_range(0..utts.len() - 1);
        if b >= a {
            b += 1;
        }
        trials.push(TrialPair {
            target: true,
            enroll: utts[a].to_string(),
            test: utts[b].to_string(),
        });

        let s = rng.gen_range(0..all.len());
        let mut t = rng.gen_range(0..all.len() - 1);
        if t >= s {
            t += 1;
        }
        trials.push(TrialPair {
            target: false,
            enroll: all[s][rng.gen_range(0..all[s].len())].to_string(),
            test: all[t][rng.gen_range(0..all[t].len())].to_string(),
        });
    }
    Ok(trials)
}

/// Lines of `<label 0|1> <enroll_utt_id> <test_utt_id>`.
pub fn read_trials(path: &Path) -> Result<Vec<TrialPair>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let err = |msg: &str| Error::Parse {
            line: i + 1,
            msg: msg.to_string(),
        };
        if fields.len() != 3 {
            return Err(err("expected three fields"));
        }
        let target = match fields[0] {
            "1" => true,
            "0" => false,
            _ => return Err(err("label must be 0 or 1")),
        };
        out.push(TrialPair {
            target,
            enroll: fields[1].to_string(),
            test: fields[2].to_string(),
        });
    }
    Ok(out)
}

pub fn write_trials_to<W: Write>(trials: &[TrialPair], w: &mut W) -> Result<()> {
    for t in trials {
        writeln!(w, "{} {} {}", u8::from(t.target), t.enroll, t.test)?;
    }
    Ok(())
}
