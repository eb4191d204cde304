//! Signature generation: groups raw lines by their masked token sequence and
//! keeps a seeded reservoir sample of representatives per group.

mod mask;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mask::{classify, mask, mask_token, variable_span, VarClass};

use crate::exec::Exec;
use crate::model::{fnv1a, RawLogRecord};

pub const DEFAULT_SAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SignatureError {
    #[error("no input records")]
    EmptyInput,
    #[error("samples per group must be at least 1")]
    InvalidSampleSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignatureKey(pub u64);

impl std::fmt::Display for SignatureKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for SignatureKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&format_args!("{:016x}", self.0))
    }
}

impl<'de> Deserialize<'de> for SignatureKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(SignatureKey)
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub key: SignatureKey,
    pub masked_form: String,
    pub token_count: usize,
}

impl Signature {
    pub fn of_masked(masked_form: String) -> Self {
        Signature {
            key: SignatureKey(fnv1a(masked_form.as_bytes())),
            token_count: masked_form.split_whitespace().count(),
            masked_form,
        }
    }

    pub fn of_message(message: &str) -> Self {
        Self::of_masked(mask(message))
    }
}

/// One signature cluster. Serialized as one JSON line per group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureGroup {
    pub signature: SignatureKey,
    pub masked_form: String,
    pub token_count: usize,
    pub member_count: u64,
    pub representatives: Vec<RawLogRecord>,
    pub reservoir_seed: u64,
}

impl SignatureGroup {
    pub fn signature(&self) -> Signature {
        Signature {
            key: self.signature,
            masked_form: self.masked_form.clone(),
            token_count: self.token_count,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of a group's reservoir, derived from the run seed and signature key
/// so each group's sample is independent of the other groups.
pub fn reservoir_seed(seed: u64, key: SignatureKey) -> u64 {
    splitmix64(seed ^ splitmix64(key.0))
}

struct GroupState {
    signature: Signature,
    count: u64,
    reservoir: Vec<RawLogRecord>,
    rng: ChaCha8Rng,
    seed: u64,
}

/// Streaming grouper. Feed records in input order; the result depends only on
/// that order, the sample size and the seed.
pub struct Grouper {
    n_samples: usize,
    seed: u64,
    exec: Exec,
    index: HashMap<String, usize>,
    groups: Vec<GroupState>,
    total: u64,
}

/// Records masked per parallel batch.
const BATCH: usize = 16_384;

impl Grouper {
    pub fn new(n_samples: usize, seed: u64, exec: Exec) -> Result<Self, SignatureError> {
        if n_samples == 0 {
            return Err(SignatureError::InvalidSampleSize);
        }
        Ok(Grouper {
            n_samples,
            seed,
            exec,
            index: HashMap::new(),
            groups: Vec::new(),
            total: 0,
        })
    }

    /// Adds a batch of records. Masking runs under the configured [`Exec`];
    /// assignment and reservoir updates run in input order.
    pub fn push_batch(&mut self, records: Vec<RawLogRecord>) {
        let masked = self.exec.map(&records, |r| mask(&r.message));
        for (record, masked) in records.into_iter().zip(masked) {
            self.assign(record, masked);
        }
    }

    fn assign(&mut self, record: RawLogRecord, masked: String) {
        self.total += 1;
        let idx = match self.index.get(&masked) {
            Some(&i) => i,
            None => {
                let signature = Signature::of_masked(masked.clone());
                let seed = reservoir_seed(self.seed, signature.key);
                self.groups.push(GroupState {
                    signature,
                    count: 0,
                    reservoir: Vec::with_capacity(self.n_samples),
                    rng: ChaCha8Rng::seed_from_u64(seed),
                    seed,
                });
                self.index.insert(masked, self.groups.len() - 1);
                self.groups.len() - 1
            }
        };
        let g = &mut self.groups[idx];
        // Algorithm R
        if g.reservoir.len() < self.n_samples {
            g.reservoir.push(record);
        } else {
            let j = g.rng.random_range(0..=g.count);
            if (j as usize) < self.n_samples {
                g.reservoir[j as usize] = record;
            }
        }
        g.count += 1;
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Groups sorted by descending member count, ties by masked form.
    pub fn finish(self) -> Result<Vec<SignatureGroup>, SignatureError> {
        if self.total == 0 {
            return Err(SignatureError::EmptyInput);
        }
        let mut out: Vec<SignatureGroup> = self
            .groups
            .into_iter()
            .map(|g| SignatureGroup {
                signature: g.signature.key,
                masked_form: g.signature.masked_form,
                token_count: g.signature.token_count,
                member_count: g.count,
                representatives: g.reservoir,
                reservoir_seed: g.seed,
            })
            .collect();
        out.sort_by(|a, b| {
            b.member_count
                .cmp(&a.member_count)
                .then_with(|| a.masked_form.cmp(&b.masked_form))
        });
        Ok(out)
    }
}

/// Groups a record stream in one pass.
pub fn group<I>(
    records: I,
    n_samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<SignatureGroup>, SignatureError>
where
    I: IntoIterator<Item = RawLogRecord>,
{
    let mut grouper = Grouper::new(n_samples, seed, exec)?;
    let mut batch = Vec::with_capacity(BATCH);
    for r in records {
        batch.push(r);
        if batch.len() == BATCH {
            grouper.push_batch(std::mem::replace(&mut batch, Vec::with_capacity(BATCH)));
        }
    }
    if !batch.is_empty() {
        grouper.push_batch(batch);
    }
    grouper.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recs(lines: &[&str]) -> Vec<RawLogRecord> {
        lines
            .iter()
            .enumerate()
            .map(|(i, l)| RawLogRecord::new(i as u64 + 1, *l))
            .collect()
    }

    #[test]
    fn two_forms_partition() {
        let input = recs(&[
            "killed process 1",
            "link up on port 3",
            "killed process 2",
            "killed process 3",
            "link up on port 9",
            "killed process 4",
        ]);
        let groups = group(input, 2, 42, Exec::Sequential).unwrap();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups.iter().map(|g| g.member_count).sum::<u64>(), 6);
        assert_eq!(groups[0].masked_form, "killed process §NUM");
        assert_eq!(groups[0].member_count, 4);
        for g in &groups {
            assert_eq!(g.representatives.len(), 2);
            for r in &g.representatives {
                assert_eq!(mask(&r.message), g.masked_form);
            }
        }
    }

    #[test]
    fn repeated_line_single_group() {
        let input = vec![RawLogRecord::new(1, "same line"); 1000];
        let groups = group(input, 3, 7, Exec::Sequential).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].member_count, 1000);
        assert_eq!(groups[0].representatives.len(), 3);
        assert!(groups[0].representatives.iter().all(|r| r.message == "same line"));
    }

    #[test]
    fn errors() {
        assert_eq!(
            group(Vec::new(), 5, 0, Exec::Sequential),
            Err(SignatureError::EmptyInput)
        );
        assert_eq!(
            group(recs(&["x"]), 0, 0, Exec::Sequential).unwrap_err(),
            SignatureError::InvalidSampleSize
        );
    }

    #[test]
    fn reservoir_is_reproducible_and_mode_independent() {
        let lines: Vec<String> = (0..50_000).map(|i| format!("req {i} took {} ms", i % 97)).collect();
        let input: Vec<RawLogRecord> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| RawLogRecord::new(i as u64 + 1, l.as_str()))
            .collect();
        let a = group(input.clone(), 5, 11, Exec::Sequential).unwrap();
        let b = group(input.clone(), 5, 11, Exec::Parallel).unwrap();
        let c = group(input, 5, 12, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0].representatives, c[0].representatives);
    }

    #[test]
    fn signature_key_follows_masked_form() {
        let a = Signature::of_message("x 1 y");
        let b = Signature::of_message("x   2   y");
        assert_eq!(a, b);
        assert_eq!(a.token_count, 3);
    }
}
