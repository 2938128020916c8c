//! Per-label multinomial Naive Bayes over context-wide unigrams.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::LabelKey;
use crate::switches::SwitchInstance;
use crate::text::is_punctuation;

/// Lowercased unigram counts.
pub type Bag = BTreeMap<String, u32>;

/// Unigram counts over every token of every context line. Punctuation is
/// skipped; speaker codes are not tokens and never appear.
pub fn featurize(instance: &SwitchInstance) -> Bag {
    let mut bag = Bag::new();
    for utt in &instance.context {
        for t in &utt.tokens {
            if is_punctuation(&t.text) {
                continue;
            }
            *bag.entry(t.text.to_lowercase()).or_default() += 1;
        }
    }
    bag
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub label: LabelKey,
    pub decision: bool,
    /// Posterior probability of the positive class.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NbError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training set for `{0}` contains only one class")]
    SingleClassTrainingSet(LabelKey),
    #[error("smoothing constant must be finite and > 0, got {0}")]
    BadAlpha(f64),
    #[error("instance `{0}` has no gold labels")]
    MissingGold(String),
}

pub const NEG: usize = 0;
pub const POS: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub label: LabelKey,
    pub vocab: BTreeMap<String, usize>,
    /// Indexed by [`NEG`] and [`POS`].
    pub class_log_priors: [f64; 2],
    pub token_log_likelihoods: [Vec<f64>; 2],
    pub alpha: f64,
}

/// Trains on (features, gold) pairs.
pub fn nb_train(train: &[(Bag, bool)], label: LabelKey, alpha: f64) -> Result<NbModel, NbError> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(NbError::BadAlpha(alpha));
    }
    if train.is_empty() {
        return Err(NbError::EmptyTrainingSet);
    }
    let positives = train.iter().filter(|(_, y)| *y).count();
    if positives == 0 || positives == train.len() {
        return Err(NbError::SingleClassTrainingSet(label));
    }

    let mut vocab = BTreeMap::new();
    for (bag, _) in train {
        for word in bag.keys() {
            let next = vocab.len();
            vocab.entry(word.clone()).or_insert(next);
        }
    }
    // re-number in sorted order so the model does not depend on document order
    for (i, idx) in vocab.values_mut().enumerate() {
        *idx = i;
    }

    let v = vocab.len();
    let mut counts = [alloc::vec![0u64; v], alloc::vec![0u64; v]];
    for (bag, y) in train {
        let class = usize::from(*y);
        for (word, &c) in bag {
            counts[class][vocab[word]] += u64::from(c);
        }
    }
    let n = train.len() as f64;
    let class_log_priors = [libm::log((train.len() - positives) as f64 / n), libm::log(positives as f64 / n)];
    let token_log_likelihoods = counts.map(|row| {
        let total: u64 = row.iter().sum();
        let denom = total as f64 + alpha * v as f64;
        row.iter().map(|&c| libm::log((c as f64 + alpha) / denom)).collect()
    });
    Ok(NbModel { label, vocab, class_log_priors, token_log_likelihoods, alpha })
}

/// Trains from instances carrying gold labels.
pub fn nb_train_instances(train: &[SwitchInstance], label: LabelKey, alpha: f64) -> Result<NbModel, NbError> {
    let data = train
        .iter()
        .map(|inst| {
            let gold = inst.labels.ok_or_else(|| NbError::MissingGold(inst.id.clone()))?;
            Ok((featurize(inst), gold.get(label)))
        })
        .collect::<Result<Vec<_>, NbError>>()?;
    nb_train(&data, label, alpha)
}

impl NbModel {
    /// Unnormalized log joint of each class. Tokens outside the vocabulary
    /// are skipped: their smoothed mass would be the same for both classes.
    pub fn log_joint(&self, bag: &Bag) -> [f64; 2] {
        let mut out = self.class_log_priors;
        for (word, &count) in bag {
            if let Some(&i) = self.vocab.get(word) {
                for (class, slot) in out.iter_mut().enumerate() {
                    *slot += f64::from(count) * self.token_log_likelihoods[class][i];
                }
            }
        }
        out
    }

    /// (P(neg | bag), P(pos | bag)).
    pub fn posterior(&self, bag: &Bag) -> (f64, f64) {
        let [neg, pos] = self.log_joint(bag);
        let p_pos = 1.0 / (1.0 + libm::exp(neg - pos));
        let p_neg = 1.0 / (1.0 + libm::exp(pos - neg));
        (p_neg, p_pos)
    }

    pub fn predict_bag(&self, instance_id: &str, bag: &Bag) -> Prediction {
        let (_, score) = self.posterior(bag);
        Prediction { instance_id: instance_id.into(), label: self.label, decision: score >= 0.5, score }
    }
}

pub fn nb_predict(model: &NbModel, instance: &SwitchInstance) -> Prediction {
    model.predict_bag(&instance.id, &featurize(instance))
}
