//! Labelled reaction datasets, reproducible splits and synthetic tasks.

pub mod synthetic;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::{parse_reaction, Reaction, ReactionError};

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub smirks: String,
    pub reaction: Reaction,
    pub label: Option<usize>,
    pub target: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {source}")]
    Reaction { line: usize, source: ReactionError },
    #[error("line {line}: bad label {text:?}")]
    Label { line: usize, text: String },
    #[error("dataset is empty")]
    Empty,
    #[error("invalid split: {0}")]
    Split(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<Record>,
}

impl Dataset {
    /// Reads `smirks[<TAB>label]` lines. Blank lines and lines starting with
    /// `#` are skipped. Integer labels also set `target`; other numbers set
    /// only `target`.
    pub fn from_tsv(text: &str) -> Result<Dataset, DataError> {
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = trimmed.split('\t');
            let smirks = cols.next().unwrap_or_default().trim().to_string();
            let reaction = parse_reaction(&smirks).map_err(|source| DataError::Reaction {
                line: line_no,
                source,
            })?;
            let (label, target) = match cols.next().map(str::trim) {
                None | Some("") => (None, None),
                Some(text) => parse_label(text).ok_or_else(|| DataError::Label {
                    line: line_no,
                    text: text.to_string(),
                })?,
            };
            records.push(Record {
                smirks,
                reaction,
                label,
                target,
            });
        }
        if records.is_empty() {
            return Err(DataError::Empty);
        }
        Ok(Dataset { records })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&r.smirks);
            if let Some(l) = r.label {
                out.push('\t');
                out.push_str(&l.to_string());
            } else if let Some(t) = r.target {
                out.push('\t');
                out.push_str(&t.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Labels of every record, or `None` if any is missing.
    pub fn labels(&self) -> Option<Vec<usize>> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn targets(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.target).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

fn parse_label(text: &str) -> Option<(Option<usize>, Option<f64>)> {
    if let Ok(l) = text.parse::<usize>() {
        return Some((Some(l), Some(l as f64)));
    }
    let v = text.parse::<f64>().ok().filter(|v| v.is_finite())?;
    Some((None, Some(v)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffles `0..n` with `seed` and cuts it into train/valid/test by the given
/// fractions; test takes the remainder.
pub fn split(n: usize, train: f64, valid: f64, seed: u64) -> Result<Splits, DataError> {
    if !(0.0..=1.0).contains(&train) || !(0.0..=1.0).contains(&valid) || train + valid > 1.0 {
        return Err(DataError::Split(format!(
            "fractions train={train} valid={valid} must be in [0, 1] and sum to at most 1"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train * n as f64).round() as usize;
    let n_valid = ((valid * n as f64).round() as usize).min(n - n_train);
    let test = order.split_off(n_train + n_valid);
    let valid = order.split_off(n_train);
    Ok(Splits {
        train: order,
        valid,
        test,
    })
}

/// Draws `train_per_class` and `test_per_class` disjoint examples of every
/// class present in `labels`.
pub fn balanced_subsample(
    labels: &[usize],
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<Splits, DataError> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Splits {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
    };
    for (class, mut members) in by_class {
        if members.len() < train_per_class + test_per_class {
            return Err(DataError::Split(format!(
                "class {class} has {} examples, need {}",
                members.len(),
                train_per_class + test_per_class
            )));
        }
        members.shuffle(&mut rng);
        out.train.extend_from_slice(&members[..train_per_class]);
        out.test
            .extend_from_slice(&members[train_per_class..train_per_class + test_per_class]);
    }
    out.train.sort_unstable();
    out.test.sort_unstable();
    Ok(out)
}
