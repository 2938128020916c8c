//! Annotation records and the statistics computed over them.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::schema::{LabelKey, LabelSet, LABEL_COUNT, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub instance_id: String,
    pub annotator_id: String,
    pub labels: LabelSet,
    /// RFC 3339 timestamp.
    pub created_at: String,
    /// Schema version the labels were written under; absent means current.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
}

impl AnnotationRecord {
    pub fn check_schema(&self) -> Result<(), AnnotationError> {
        match self.schema_version {
            Some(v) if v != SCHEMA_VERSION => Err(AnnotationError::SchemaVersion { expected: SCHEMA_VERSION, found: v }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnnotationError {
    #[error("no annotation records")]
    EmptyStore,
    #[error("instance subset is empty")]
    EmptySubset,
    #[error("no record for instance `{instance}` by annotator `{annotator}`")]
    MissingRecord { instance: String, annotator: String },
    #[error("record written under schema version {found}, expected {expected}")]
    SchemaVersion { expected: u32, found: u32 },
}

/// Compacted view of an append-only record log: the last record per
/// (instance, annotator) wins.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AnnotationIndex {
    records: BTreeMap<(String, String), AnnotationRecord>,
}

impl AnnotationIndex {
    pub fn new() -> Self {
        AnnotationIndex::default()
    }

    /// Builds the index from records in log order.
    pub fn compact(records: impl IntoIterator<Item = AnnotationRecord>) -> Self {
        let mut index = AnnotationIndex::new();
        for r in records {
            index.insert(r);
        }
        index
    }

    /// Inserts or replaces the record for its (instance, annotator) pair.
    pub fn insert(&mut self, record: AnnotationRecord) -> Option<AnnotationRecord> {
        self.records.insert((record.instance_id.clone(), record.annotator_id.clone()), record)
    }

    pub fn get(&self, instance: &str, annotator: &str) -> Option<&AnnotationRecord> {
        self.records.get(&(String::from(instance), String::from(annotator)))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &AnnotationRecord> {
        self.records.values()
    }

    /// Records of one annotator, ordered by instance id.
    pub fn by_annotator<'a>(&'a self, annotator: &'a str) -> impl Iterator<Item = &'a AnnotationRecord> + 'a {
        self.records.values().filter(move |r| r.annotator_id == annotator)
    }

    /// Records for one instance, ordered by annotator id.
    pub fn for_instance<'a>(&'a self, instance: &'a str) -> impl Iterator<Item = &'a AnnotationRecord> + 'a {
        self.records.values().filter(move |r| r.instance_id == instance)
    }

    fn labels(&self, instance: &str, annotator: &str) -> Result<LabelSet, AnnotationError> {
        self.get(instance, annotator).map(|r| r.labels).ok_or_else(|| AnnotationError::MissingRecord {
            instance: instance.into(),
            annotator: annotator.into(),
        })
    }

    /// The two annotators' booleans for `label` over the subset.
    fn paired(&self, a: &str, b: &str, label: LabelKey, instances: &[String]) -> Result<Vec<(bool, bool)>, AnnotationError> {
        if instances.is_empty() {
            return Err(AnnotationError::EmptySubset);
        }
        instances
            .iter()
            .map(|id| Ok((self.labels(id, a)?.get(label), self.labels(id, b)?.get(label))))
            .collect()
    }

    /// Fraction of subset instances on which `a` and `b` agree about `label`.
    pub fn agreement_accuracy(&self, a: &str, b: &str, label: LabelKey, instances: &[String]) -> Result<f64, AnnotationError> {
        let pairs = self.paired(a, b, label, instances)?;
        let agree = pairs.iter().filter(|(x, y)| x == y).count();
        Ok(agree as f64 / pairs.len() as f64)
    }

    /// Cohen's kappa for `label`. `Ok(None)` is the undefined case where
    /// chance agreement is 1 (both annotators constant and equal).
    pub fn agreement_kappa(&self, a: &str, b: &str, label: LabelKey, instances: &[String]) -> Result<Option<f64>, AnnotationError> {
        let pairs = self.paired(a, b, label, instances)?;
        Ok(cohen_kappa(&pairs))
    }

    /// Accuracy and kappa for every label.
    pub fn agreement_table(&self, a: &str, b: &str, instances: &[String]) -> Result<Vec<AgreementRow>, AnnotationError> {
        LabelKey::ALL
            .iter()
            .map(|&label| {
                Ok(AgreementRow {
                    label,
                    accuracy: self.agreement_accuracy(a, b, label, instances)?,
                    kappa: self.agreement_kappa(a, b, label, instances)?,
                })
            })
            .collect()
    }
}

/// Kappa over paired binary judgements, `None` when p_e = 1.
pub fn cohen_kappa(pairs: &[(bool, bool)]) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let n = pairs.len() as f64;
    let observed = pairs.iter().filter(|(x, y)| x == y).count() as f64 / n;
    let pa = pairs.iter().filter(|(x, _)| *x).count() as f64 / n;
    let pb = pairs.iter().filter(|(_, y)| *y).count() as f64 / n;
    let expected = pa * pb + (1.0 - pa) * (1.0 - pb);
    if expected >= 1.0 {
        return None;
    }
    Some((observed - expected) / (1.0 - expected))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub label: LabelKey,
    pub accuracy: f64,
    /// `null` when undefined.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution {
    pub instances: usize,
    /// Per-label (count, fraction of instances), schema order.
    pub labels: Vec<LabelFrequency>,
    /// Fraction of instances with two or more labels.
    pub multilabel_rate: f64,
    /// Instances whose LabelSet is all-false.
    pub no_label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelFrequency {
    pub label: LabelKey,
    pub count: usize,
    pub frequency: f64,
}

impl LabelDistribution {
    pub fn frequency(&self, label: LabelKey) -> f64 {
        self.labels[label.index()].frequency
    }
}

/// Label frequencies over one annotator's records. Duplicate instance ids
/// are resolved last-write-wins.
pub fn label_distribution<'a>(records: impl IntoIterator<Item = &'a AnnotationRecord>) -> Result<LabelDistribution, AnnotationError> {
    let mut latest: BTreeMap<&str, LabelSet> = BTreeMap::new();
    for r in records {
        latest.insert(&r.instance_id, r.labels);
    }
    if latest.is_empty() {
        return Err(AnnotationError::EmptyStore);
    }
    let n = latest.len();
    let mut counts = [0usize; LABEL_COUNT];
    let mut multi = 0;
    let mut no_label = 0;
    for set in latest.values() {
        for k in set.keys() {
            counts[k.index()] += 1;
        }
        match set.count() {
            0 => no_label += 1,
            1 => {}
            _ => multi += 1,
        }
    }
    Ok(LabelDistribution {
        instances: n,
        labels: LabelKey::ALL
            .iter()
            .map(|&label| LabelFrequency {
                label,
                count: counts[label.index()],
                frequency: counts[label.index()] as f64 / n as f64,
            })
            .collect(),
        multilabel_rate: multi as f64 / n as f64,
        no_label,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn rec(instance: &str, annotator: &str, labels: LabelSet) -> AnnotationRecord {
        AnnotationRecord {
            instance_id: instance.into(),
            annotator_id: annotator.into(),
            labels,
            created_at: "2024-01-01T00:00:00Z".into(),
            schema_version: None,
        }
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("i{i:03}")).collect()
    }

    #[test]
    fn single_instance_distribution() {
        let r = rec("x", "p", LabelSet::from_keys(&[LabelKey::Borrowing, LabelKey::Command]));
        let d = label_distribution([&r]).unwrap();
        assert_eq!(d.frequency(LabelKey::Borrowing), 1.0);
        assert_eq!(d.frequency(LabelKey::Command), 1.0);
        assert_eq!(d.frequency(LabelKey::Joke), 0.0);
        assert_eq!(d.multilabel_rate, 1.0);
    }

    #[test]
    fn empty_store_is_an_error() {
        assert_eq!(label_distribution([]), Err(AnnotationError::EmptyStore));
    }

    #[test]
    fn no_label_entries_are_counted() {
        let rs = [rec("a", "p", LabelSet::none()), rec("b", "p", LabelSet::single(LabelKey::Joke))];
        let d = label_distribution(&rs).unwrap();
        assert_eq!(d.no_label, 1);
        assert_eq!(d.multilabel_rate, 0.0);
        let total: usize = d.labels.iter().map(|l| l.count).sum();
        assert_eq!(total, d.instances - d.no_label);
    }

    #[test]
    fn last_write_wins() {
        let idx = AnnotationIndex::compact([
            rec("a", "p", LabelSet::single(LabelKey::Joke)),
            rec("a", "q", LabelSet::single(LabelKey::Quote)),
            rec("a", "p", LabelSet::single(LabelKey::Filler)),
        ]);
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.get("a", "p").unwrap().labels, LabelSet::single(LabelKey::Filler));
    }

    #[test]
    fn identical_and_complementary_annotators() {
        let subset = ids(20);
        let mut records = Vec::new();
        for (i, id) in subset.iter().enumerate() {
            let mut s = LabelSet::none();
            s.set(LabelKey::ChangeTopic, i % 3 == 0);
            records.push(rec(id, "a", s));
            records.push(rec(id, "same", s));
            let mut c = s;
            c.set(LabelKey::ChangeTopic, i % 3 != 0);
            records.push(rec(id, "flip", c));
        }
        let idx = AnnotationIndex::compact(records);
        for label in LabelKey::ALL {
            assert_eq!(idx.agreement_accuracy("a", "a", label, &subset).unwrap(), 1.0);
            assert_eq!(idx.agreement_accuracy("a", "same", label, &subset).unwrap(), 1.0);
        }
        assert_eq!(idx.agreement_accuracy("a", "flip", LabelKey::ChangeTopic, &subset).unwrap(), 0.0);
        assert_eq!(idx.agreement_kappa("a", "same", LabelKey::ChangeTopic, &subset).unwrap(), Some(1.0));
    }

    #[test]
    fn missing_record_is_reported() {
        let idx = AnnotationIndex::compact([rec("a", "p", LabelSet::none())]);
        let err = idx.agreement_accuracy("p", "q", LabelKey::Joke, &["a".to_string()]).unwrap_err();
        assert_eq!(err, AnnotationError::MissingRecord { instance: "a".into(), annotator: "q".into() });
    }

    #[test]
    fn kappa_zero_for_independent_marginals() {
        // a: TTFF repeated, b: TFTF repeated -> p_o = 0.5, p_e = 0.5
        let pairs: Vec<(bool, bool)> = (0..100).map(|i| (i % 4 < 2, i % 2 == 0)).collect();
        assert_eq!(pairs.iter().filter(|p| p.0).count(), 50);
        assert_eq!(pairs.iter().filter(|p| p.1).count(), 50);
        assert_eq!(pairs.iter().filter(|p| p.0 == p.1).count(), 50);
        assert_eq!(cohen_kappa(&pairs), Some(0.0));
    }

    #[test]
    fn kappa_undefined_when_both_constant() {
        let pairs = vec![(true, true); 10];
        assert_eq!(cohen_kappa(&pairs), None);
        let pairs = vec![(false, false); 10];
        assert_eq!(cohen_kappa(&pairs), None);
    }

    #[test]
    fn schema_version_check() {
        let mut r = rec("a", "p", LabelSet::none());
        assert!(r.check_schema().is_ok());
        r.schema_version = Some(SCHEMA_VERSION + 1);
        assert!(matches!(r.check_schema(), Err(AnnotationError::SchemaVersion { .. })));
    }
}
