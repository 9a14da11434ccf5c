use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::TweetRecord;
use crate::error::{Error, Result};

/// Subset name for the stratified sample drawn from non-held-out disasters.
pub const MULTIPLE_DISASTERS: &str = "multiple_disasters";

pub trait DisasterLabeled {
    fn id(&self) -> &str;
    fn disaster(&self) -> &str;
}

impl DisasterLabeled for TweetRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn disaster(&self) -> &str {
        &self.disaster
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub heldout_test_disasters: BTreeSet<String>,
    pub heldout_validation_disasters: BTreeSet<String>,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            heldout_test_disasters: BTreeSet::new(),
            heldout_validation_disasters: BTreeSet::new(),
            test_fraction: 0.07,
            validation_fraction: 0.15,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |f: f64| (0.0..=1.0).contains(&f);
        if !in_unit(self.test_fraction) || !in_unit(self.validation_fraction) {
            return Err(Error::Config("split fractions must lie in [0, 1]".into()));
        }
        if self.test_fraction + self.validation_fraction >= 1.0 {
            return Err(Error::Config("test_fraction + validation_fraction must be < 1".into()));
        }
        if let Some(d) = self
            .heldout_test_disasters
            .intersection(&self.heldout_validation_disasters)
            .next()
        {
            return Err(Error::Config(format!("disaster {d:?} is held out for both test and validation")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSplit<R> {
    pub train: Vec<R>,
    pub validation: BTreeMap<String, Vec<R>>,
    pub test: BTreeMap<String, Vec<R>>,
    pub warnings: Vec<String>,
}

/// Routes held-out disasters to their own subsets and samples the stated
/// fractions of every other disaster into `multiple_disasters`. Each output
/// keeps input order.
pub fn split_benchmark<R: DisasterLabeled + Clone>(records: &[R], spec: &SplitSpec) -> Result<BenchmarkSplit<R>> {
    spec.validate()?;
    if let Some(r) = records.iter().find(|r| r.disaster().is_empty()) {
        return Err(Error::Data(format!("record {} has no disaster label", r.id())));
    }

    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        groups.entry(r.disaster()).or_default().push(i);
    }

    let mut warnings = Vec::new();
    let mut test: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    let mut validation: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (heldout, out) in [
        (&spec.heldout_test_disasters, &mut test),
        (&spec.heldout_validation_disasters, &mut validation),
    ] {
        for d in heldout {
            let idx = groups.remove(d.as_str()).unwrap_or_default();
            if idx.is_empty() {
                let msg = format!("held-out disaster {d:?} does not occur in the corpus");
                log::warn!("{msg}");
                warnings.push(msg);
            }
            out.insert(d.clone(), idx);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = Vec::new();
    let mut sampled_test = Vec::new();
    let mut sampled_val = Vec::new();
    for idx in groups.values() {
        let n = idx.len();
        let n_test = (n as f64 * spec.test_fraction).round() as usize;
        let n_val = ((n as f64 * spec.validation_fraction).round() as usize).min(n - n_test);
        let mut shuffled = idx.clone();
        shuffled.shuffle(&mut rng);
        sampled_test.extend_from_slice(&shuffled[..n_test]);
        sampled_val.extend_from_slice(&shuffled[n_test..n_test + n_val]);
        train.extend_from_slice(&shuffled[n_test + n_val..]);
    }
    if !groups.is_empty() {
        test.insert(MULTIPLE_DISASTERS.to_string(), sampled_test);
        validation.insert(MULTIPLE_DISASTERS.to_string(), sampled_val);
    }

    let take = |mut idx: Vec<usize>| -> Vec<R> {
        idx.sort_unstable();
        idx.into_iter().map(|i| records[i].clone()).collect()
    };
    Ok(BenchmarkSplit {
        train: take(train),
        validation: validation.into_iter().map(|(k, v)| (k, take(v))).collect(),
        test: test.into_iter().map(|(k, v)| (k, take(v))).collect(),
        warnings,
    })
}
