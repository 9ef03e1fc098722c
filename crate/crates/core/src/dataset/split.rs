use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, DatasetManifest, Split};

const RATIO_SUM_TOLERANCE: f64 = 1e-9;

/// Train/val/test fractions. Must be non-negative and sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, val: f64, test: f64) -> Result<Self, DatasetError> {
        let ratios = Self { train, val, test };
        ratios.validate()?;
        Ok(ratios)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let parts = self.as_array();
        if parts.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(DatasetError::InvalidRatios(format!(
                "{self} has a negative or non-finite entry"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > RATIO_SUM_TOLERANCE {
            return Err(DatasetError::InvalidRatios(format!(
                "{self} sums to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.train, self.val, self.test]
    }
}

impl fmt::Display for SplitRatios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.train, self.val, self.test)
    }
}

impl FromStr for SplitRatios {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| DatasetError::InvalidRatios(format!("`{s}`: {e}")))?;
        match parts.as_slice() {
            [train, val, test] => SplitRatios::new(*train, *val, *test),
            _ => Err(DatasetError::InvalidRatios(format!(
                "`{s}`: expected three comma-separated fractions"
            ))),
        }
    }
}

/// Largest-remainder apportionment of `n` items over the three ratios, ties
/// going to the earlier split. Each count is within 1 of `ratio * n`.
fn apportion(n: usize, ratios: &SplitRatios) -> [usize; 3] {
    let exact = ratios.as_array().map(|r| r * n as f64);
    let mut counts = exact.map(|x| (x + 1e-9).floor() as usize);
    let assigned: usize = counts.iter().sum();
    let mut leftover = n.saturating_sub(assigned);
    let mut order: Vec<usize> = (0..3).filter(|&i| exact[i] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - counts[a] as f64;
        let rb = exact[b] - counts[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if leftover == 0 {
            break;
        }
        counts[i] += 1;
        leftover -= 1;
    }
    counts
}

/// Stratified, seeded split assignment. Overwrites any existing split.
///
/// Within each label (in label-set order) sample ids are sorted
/// lexicographically and shuffled with a ChaCha8 stream seeded from `seed`,
/// so the result depends only on the manifest, the ratios and the seed.
pub fn assign_splits(
    manifest: &DatasetManifest,
    ratios: SplitRatios,
    seed: u64,
) -> Result<DatasetManifest, DatasetError> {
    ratios.validate()?;
    let needed = ratios.as_array().iter().filter(|r| **r > 0.0).count();

    let mut by_label: Vec<Vec<&str>> = vec![Vec::new(); manifest.label_set.len()];
    for sample in &manifest.samples {
        let idx = manifest
            .label_set
            .index_of(&sample.ground_truth)
            .ok_or_else(|| DatasetError::LabelNotInSet {
                sample_id: sample.sample_id.clone(),
                label: sample.ground_truth.clone(),
            })?;
        by_label[idx].push(&sample.sample_id);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment: HashMap<&str, Split> = HashMap::with_capacity(manifest.samples.len());
    for (label_idx, ids) in by_label.iter_mut().enumerate() {
        if ids.is_empty() {
            continue;
        }
        if ids.len() < needed {
            return Err(DatasetError::ClassTooSmall {
                label: manifest
                    .label_set
                    .get(label_idx)
                    .unwrap_or_default()
                    .to_string(),
                count: ids.len(),
                needed,
            });
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let [n_train, n_val, _] = apportion(ids.len(), &ratios);
        for (pos, id) in ids.iter().enumerate() {
            let split = if pos < n_train {
                Split::Train
            } else if pos < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            };
            assignment.insert(id, split);
        }
    }

    let mut out = manifest.clone();
    for sample in &mut out.samples {
        sample.split = assignment.get(sample.sample_id.as_str()).copied();
    }
    Ok(out)
}
