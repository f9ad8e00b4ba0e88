//! Disagreement datasets: instances carrying every annotator's binary vote, the
//! soft label derived from those votes, and the hard (majority) label.

mod featurize;
mod synth;

pub use featurize::{featurize, tokenize, FeaturizerConfig};
pub use synth::{synthesize_dataset, SynthSpec};

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evaluation::soft_to_hard;

/// Tolerance for checking a stated soft label against its annotations.
pub const SOFT_LABEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Split {
    Train,
    #[cfg_attr(feature = "serde", serde(alias = "dev", alias = "val"))]
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    /// Accepts `train`, `dev`/`val`/`validation` and `test`, case-insensitively.
    pub fn parse(s: &str) -> Option<Split> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Some(Split::Train),
            "dev" | "val" | "valid" | "validation" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl core::fmt::Display for Split {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub text: String,
    /// One 0/1 vote per annotator; empty when only the soft label is known.
    pub annotations: Vec<u8>,
    /// Probability of the positive class.
    pub soft_label: f64,
    pub hard_label: u8,
}

impl Instance {
    /// Validates an instance, deriving whichever labels are missing.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        annotations: Vec<u8>,
        soft_label: Option<f64>,
        hard_label: Option<u8>,
    ) -> Result<Self> {
        let id = id.into();
        let bad = |reason: String| Error::InvalidInstance { id: id.clone(), reason };
        if let Some(v) = annotations.iter().find(|&&v| v > 1) {
            return Err(bad(format!("annotation {v} is not 0 or 1")));
        }
        let derived = if annotations.is_empty() {
            None
        } else {
            Some(derive_soft_label(&annotations)?)
        };
        let soft = match (soft_label, derived) {
            (Some(s), _) if !s.is_finite() || !(0.0..=1.0).contains(&s) => {
                return Err(bad(format!("soft label {s} outside [0, 1]")));
            }
            (Some(s), Some(d)) if libm::fabs(s - d) > SOFT_LABEL_TOLERANCE => {
                return Err(bad(format!(
                    "soft label {s} disagrees with annotations (positive fraction {d})"
                )));
            }
            (Some(s), _) => s,
            (None, Some(d)) => d,
            (None, None) => return Err(bad("neither annotations nor soft label given".to_string())),
        };
        let hard = match hard_label {
            Some(h) if h > 1 => return Err(bad(format!("hard label {h} is not 0 or 1"))),
            Some(h) => h,
            None => soft_to_hard(soft),
        };
        Ok(Instance {
            id,
            text: text.into(),
            annotations,
            soft_label: soft,
            hard_label: hard,
        })
    }

    pub fn annotator_count(&self) -> Option<u32> {
        (!self.annotations.is_empty()).then_some(self.annotations.len() as u32)
    }
}

/// Fraction of positive votes.
pub fn derive_soft_label(annotations: &[u8]) -> Result<f64> {
    if annotations.is_empty() {
        return Err(Error::invalid("cannot derive a soft label from zero annotations"));
    }
    let positive = annotations.iter().filter(|&&v| v != 0).count();
    Ok(positive as f64 / annotations.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisagreementDataset {
    train: Vec<Instance>,
    validation: Vec<Instance>,
    test: Vec<Instance>,
    annotator_count: Option<u32>,
}

impl DisagreementDataset {
    /// Checks that ids are unique across all splits and detects a constant annotator count.
    pub fn new(train: Vec<Instance>, validation: Vec<Instance>, test: Vec<Instance>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for inst in train.iter().chain(&validation).chain(&test) {
            if !seen.insert(inst.id.as_str()) {
                return Err(Error::DuplicateId(inst.id.clone()));
            }
        }
        let mut counts = train
            .iter()
            .chain(&validation)
            .chain(&test)
            .filter_map(Instance::annotator_count);
        let annotator_count = match counts.next() {
            Some(first) if counts.all(|c| c == first) => Some(first),
            _ => None,
        };
        Ok(DisagreementDataset {
            train,
            validation,
            test,
            annotator_count,
        })
    }

    /// Groups `(split, instance)` pairs into a dataset.
    pub fn from_tagged(items: impl IntoIterator<Item = (Split, Instance)>) -> Result<Self> {
        let (mut train, mut validation, mut test) = (Vec::new(), Vec::new(), Vec::new());
        for (split, inst) in items {
            match split {
                Split::Train => train.push(inst),
                Split::Validation => validation.push(inst),
                Split::Test => test.push(inst),
            }
        }
        Self::new(train, validation, test)
    }

    pub fn split(&self, split: Split) -> &[Instance] {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn train(&self) -> &[Instance] {
        &self.train
    }

    pub fn validation(&self) -> &[Instance] {
        &self.validation
    }

    pub fn test(&self) -> &[Instance] {
        &self.test
    }

    /// The annotator count shared by every annotated instance, if it is constant.
    pub fn annotator_count(&self) -> Option<u32> {
        self.annotator_count
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All instances tagged with their split, in train/validation/test order.
    pub fn iter_tagged(&self) -> impl Iterator<Item = (Split, &Instance)> {
        Split::ALL
            .into_iter()
            .flat_map(move |s| self.split(s).iter().map(move |i| (s, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn inst(id: &str, ann: Vec<u8>) -> Instance {
        Instance::new(id, "t", ann, None, None).unwrap()
    }

    #[test]
    fn soft_labels_from_votes() {
        assert_eq!(derive_soft_label(&[1, 1, 1]).unwrap(), 1.0);
        assert!((derive_soft_label(&[1, 0, 0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(derive_soft_label(&[1, 1, 0, 0]).unwrap(), 0.5);
        assert!(derive_soft_label(&[]).is_err());
    }

    #[test]
    fn instance_validation() {
        let i = inst("a", vec![1, 0, 0]);
        assert!((i.soft_label - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(i.hard_label, 0);

        let explicit = Instance::new("b", "t", vec![], Some(0.75), None).unwrap();
        assert_eq!(explicit.soft_label, 0.75);
        assert_eq!(explicit.hard_label, 1);

        let err = Instance::new("c", "t", vec![], Some(1.5), None).unwrap_err();
        assert!(matches!(err, Error::InvalidInstance { ref id, .. } if id == "c"));
        let err = Instance::new("d", "t", vec![1, 0], Some(0.9), None).unwrap_err();
        assert!(matches!(err, Error::InvalidInstance { ref id, .. } if id == "d"));
        assert!(Instance::new("e", "t", vec![2], None, None).is_err());
        assert!(Instance::new("f", "t", vec![], None, None).is_err());
        // a tied vote is not a majority
        assert_eq!(inst("g", vec![1, 0]).hard_label, 0);
    }

    #[test]
    fn annotator_count_detection() {
        let ds = DisagreementDataset::new(
            vec![inst("a", vec![1, 0, 0]), inst("b", vec![1, 1, 0])],
            vec![inst("c", vec![0, 0, 0])],
            vec![],
        )
        .unwrap();
        assert_eq!(ds.annotator_count(), Some(3));

        let mixed = DisagreementDataset::new(
            vec![inst("a", vec![1, 0, 0]), inst("b", vec![1, 1, 0, 0])],
            vec![],
            vec![],
        )
        .unwrap();
        assert_eq!(mixed.annotator_count(), None);

        // soft-only instances do not break constancy
        let soft_only = Instance::new("s", "t", vec![], Some(0.2), None).unwrap();
        let ds = DisagreementDataset::new(vec![inst("a", vec![0, 1]), soft_only], vec![], vec![]).unwrap();
        assert_eq!(ds.annotator_count(), Some(2));
    }

    #[test]
    fn duplicate_ids_across_splits() {
        let err = DisagreementDataset::new(vec![inst("a", vec![1])], vec![inst("a", vec![0])], vec![]).unwrap_err();
        assert_eq!(err, Error::DuplicateId("a".into()));
    }

    #[test]
    fn split_names() {
        assert_eq!(Split::parse("dev"), Some(Split::Validation));
        assert_eq!(Split::parse("TEST"), Some(Split::Test));
        assert_eq!(Split::parse("holdout"), None);
    }
}
