//! Soft and hard evaluation of a trained head under the three inference approaches.

use alloc::string::String;
use alloc::vec::Vec;

use crate::activations::StepGrid;
use crate::data::{featurize, DisagreementDataset, FeaturizerConfig, Instance};
use crate::error::{Error, Result};
use crate::network::{HeadNetwork, OutputActivation};
use crate::sparse::SparseVector;
use crate::training::{soft_cross_entropy, DEFAULT_CLAMP_EPS};

/// How a soft label is read off a trained network.
#[derive(Debug, Clone, PartialEq)]
pub enum ApproachSpec {
    /// Widened-sigmoid head, output used as is.
    Sigmoid,
    /// SSF head, output used as is.
    Ssf,
    /// Widened-sigmoid head with its output snapped to the grid after training.
    StepOverSigmoid(StepGrid),
}

impl ApproachSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ApproachSpec::Sigmoid => "sigmoid",
            ApproachSpec::Ssf => "ssf",
            ApproachSpec::StepOverSigmoid(_) => "step",
        }
    }

    /// Rejects pairings such as a step quantizer over an SSF head.
    pub fn check_network(&self, net: &HeadNetwork) -> Result<()> {
        let activation = &net.config().output_activation;
        let ok = matches!(
            (self, activation),
            (
                ApproachSpec::Sigmoid | ApproachSpec::StepOverSigmoid(_),
                OutputActivation::WidenedSigmoid(_)
            ) | (ApproachSpec::Ssf, OutputActivation::Ssf(_))
        );
        if ok {
            Ok(())
        } else {
            Err(Error::ApproachMismatch {
                approach: self.name(),
                activation: activation.name(),
            })
        }
    }

    /// The grid-based approaches need a dataset whose annotator count is constant and
    /// equal to the grid's.
    pub fn check_dataset(&self, net: &HeadNetwork, data: &DisagreementDataset) -> Result<()> {
        let expected = match (self, &net.config().output_activation) {
            (ApproachSpec::Ssf, OutputActivation::Ssf(p)) => p.a,
            (ApproachSpec::StepOverSigmoid(grid), _) => grid.a(),
            _ => return Ok(()),
        };
        if data.annotator_count() == Some(expected) {
            Ok(())
        } else {
            Err(Error::AnnotatorMismatch {
                expected,
                found: data.annotator_count(),
            })
        }
    }
}

/// `0` when `soft <= 0.5`, else `1`.
pub fn soft_to_hard(soft: f64) -> u8 {
    u8::from(soft > 0.5)
}

pub fn predict_soft(net: &HeadNetwork, approach: &ApproachSpec, features: &SparseVector) -> Result<f64> {
    approach.check_network(net)?;
    let raw = net.predict(features)?;
    Ok(match approach {
        ApproachSpec::Sigmoid | ApproachSpec::Ssf => raw,
        ApproachSpec::StepOverSigmoid(grid) => grid.quantize(raw),
    })
}

/// Binary confusion counts, with class 1 as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: u64,
}

impl Confusion {
    pub fn from_labels(gold: &[u8], predicted: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (&g, &p) in gold.iter().zip(predicted) {
            c.record(g, p);
        }
        c
    }

    pub fn record(&mut self, gold: u8, predicted: u8) {
        match (gold, predicted) {
            (1, 1) => self.tp += 1,
            (0, 1) => self.fp += 1,
            (0, _) => self.tn += 1,
            _ => self.fn_ += 1,
        }
    }

    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.n())
    }

    /// F1 of the positive class.
    pub fn f1_positive(&self) -> f64 {
        f1(self.tp, self.fp, self.fn_)
    }

    /// F1 of the negative class (class 0 treated as positive).
    pub fn f1_negative(&self) -> f64 {
        f1(self.tn, self.fn_, self.fp)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(tp: u64, fp: u64, fn_: u64) -> f64 {
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Micro-averaged F1 over both classes: true positives, false positives and false
/// negatives pooled across class 0 and class 1 before computing F1.
pub fn micro_f1(c: &Confusion) -> f64 {
    let tp = c.tp + c.tn;
    let fp = c.fp + c.fn_;
    let fn_ = c.fn_ + c.fp;
    ratio(2 * tp, 2 * tp + fp + fn_)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    pub approach: String,
    pub n: usize,
    /// Mean cross-entropy against the soft labels.
    pub soft_loss: f64,
    pub micro_f1: f64,
    pub confusion: Confusion,
    pub f1_positive: f64,
    pub f1_negative: f64,
    pub macro_f1: f64,
}

impl EvaluationReport {
    pub fn summary_line(&self) -> String {
        alloc::format!(
            "approach={} n={} soft_loss={:.6} micro_f1={:.4} tp={} fp={} tn={} fn={}",
            self.approach,
            self.n,
            self.soft_loss,
            self.micro_f1,
            self.confusion.tp,
            self.confusion.fp,
            self.confusion.tn,
            self.confusion.fn_
        )
    }
}

/// One instance's prediction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prediction {
    pub id: String,
    pub soft: f64,
    pub hard: u8,
}

/// Builds a report from predicted soft labels paired with gold instances.
pub fn report_from_predictions(
    approach: &str,
    split: &[Instance],
    soft: &[f64],
    clamp_eps: f64,
) -> Result<EvaluationReport> {
    if split.is_empty() {
        return Err(Error::EmptySplit("evaluation"));
    }
    let mut loss = 0.0;
    let mut confusion = Confusion::default();
    for (inst, &p) in split.iter().zip(soft) {
        loss += soft_cross_entropy(p, inst.soft_label, clamp_eps)?;
        confusion.record(inst.hard_label, soft_to_hard(p));
    }
    let f1_positive = confusion.f1_positive();
    let f1_negative = confusion.f1_negative();
    Ok(EvaluationReport {
        approach: approach.into(),
        n: split.len(),
        soft_loss: loss / split.len() as f64,
        micro_f1: micro_f1(&confusion),
        confusion,
        f1_positive,
        f1_negative,
        macro_f1: (f1_positive + f1_negative) / 2.0,
    })
}

/// Evaluates with the default loss clamp, returning per-instance predictions too.
pub fn evaluate_detailed(
    net: &HeadNetwork,
    approach: &ApproachSpec,
    split: &[Instance],
    featurizer: &FeaturizerConfig,
) -> Result<(EvaluationReport, Vec<Prediction>)> {
    if split.is_empty() {
        return Err(Error::EmptySplit("evaluation"));
    }
    approach.check_network(net)?;
    let soft = split
        .iter()
        .map(|inst| predict_soft(net, approach, &featurize(featurizer, &inst.text)?))
        .collect::<Result<Vec<f64>>>()?;
    let report = report_from_predictions(approach.name(), split, &soft, DEFAULT_CLAMP_EPS)?;
    let predictions = split
        .iter()
        .zip(&soft)
        .map(|(inst, &s)| Prediction {
            id: inst.id.clone(),
            soft: s,
            hard: soft_to_hard(s),
        })
        .collect();
    Ok((report, predictions))
}

pub fn evaluate(
    net: &HeadNetwork,
    approach: &ApproachSpec,
    split: &[Instance],
    featurizer: &FeaturizerConfig,
) -> Result<EvaluationReport> {
    evaluate_detailed(net, approach, split, featurizer).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activations::{SigmoidParams, SsfParams};
    use crate::network::HeadConfig;
    use alloc::vec;

    #[test]
    fn hard_rule() {
        assert_eq!(soft_to_hard(0.5), 0);
        assert_eq!(soft_to_hard(0.500_000_1), 1);
        assert_eq!(soft_to_hard(1.0 / 3.0), 0);
        assert_eq!(soft_to_hard(2.0 / 3.0), 1);
    }

    #[test]
    fn hand_counted_confusion() {
        let c = Confusion::from_labels(&[1, 1, 0, 0], &[1, 0, 0, 0]);
        assert_eq!(
            c,
            Confusion {
                tp: 1,
                fp: 0,
                tn: 2,
                fn_: 1
            }
        );
        assert_eq!(micro_f1(&c), 0.75);
        assert!((c.f1_positive() - 2.0 / 3.0).abs() < 1e-12);
        assert!((c.f1_negative() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn degenerate_confusions() {
        let all_right = Confusion {
            tp: 3,
            fp: 0,
            tn: 2,
            fn_: 0,
        };
        assert_eq!(micro_f1(&all_right), 1.0);
        let all_wrong = Confusion {
            tp: 0,
            fp: 2,
            tn: 0,
            fn_: 3,
        };
        assert_eq!(micro_f1(&all_wrong), 0.0);
        assert_eq!(all_wrong.f1_positive(), 0.0);
        let only_negatives = Confusion {
            tp: 0,
            fp: 0,
            tn: 4,
            fn_: 0,
        };
        assert_eq!(only_negatives.f1_positive(), 0.0);
        assert_eq!(only_negatives.f1_negative(), 1.0);
    }

    fn zero_net(act: OutputActivation) -> HeadNetwork {
        let cfg = HeadConfig::new(4, act);
        HeadNetwork::from_parts(cfg, vec![0.0; 80], vec![0.0; 20], vec![0.0; 20], 0.0).unwrap()
    }

    #[test]
    fn approach_pairing() {
        let sig = zero_net(OutputActivation::WidenedSigmoid(SigmoidParams::default()));
        let ssf = zero_net(OutputActivation::Ssf(SsfParams::new(3, 0.05).unwrap()));
        let x = SparseVector::zeros(4);
        let grid = StepGrid::new(3).unwrap();
        assert_eq!(predict_soft(&ssf, &ApproachSpec::Ssf, &x).unwrap(), 0.0);
        assert_eq!(predict_soft(&sig, &ApproachSpec::Sigmoid, &x).unwrap(), 0.5);
        assert_eq!(
            predict_soft(&sig, &ApproachSpec::StepOverSigmoid(grid.clone()), &x).unwrap(),
            2.0 / 3.0
        );
        assert!(matches!(
            predict_soft(&ssf, &ApproachSpec::StepOverSigmoid(grid), &x),
            Err(Error::ApproachMismatch {
                approach: "step",
                activation: "ssf"
            })
        ));
        assert!(predict_soft(&sig, &ApproachSpec::Ssf, &x).is_err());
    }

    #[test]
    fn step_over_sigmoid_output_of_point_four() {
        // b2 chosen so that the sigmoid output is 0.4: 5 * logit(0.4)
        let b2 = 5.0 * libm::log(0.4 / 0.6);
        let cfg = HeadConfig::new(4, OutputActivation::WidenedSigmoid(SigmoidParams::default()));
        let net = HeadNetwork::from_parts(cfg, vec![0.0; 80], vec![0.0; 20], vec![0.0; 20], b2).unwrap();
        let x = SparseVector::zeros(4);
        assert!((predict_soft(&net, &ApproachSpec::Sigmoid, &x).unwrap() - 0.4).abs() < 1e-12);
        let step = ApproachSpec::StepOverSigmoid(StepGrid::new(3).unwrap());
        assert_eq!(predict_soft(&net, &step, &x).unwrap(), 1.0 / 3.0);
    }

    fn inst(id: &str, soft: f64) -> Instance {
        Instance::new(id, "", vec![], Some(soft), None).unwrap()
    }

    #[test]
    fn report_examples() {
        let split = [inst("a", 1.0), inst("b", 0.0), inst("c", 1.0)];
        let r = report_from_predictions("x", &split, &[1.0, 0.0, 1.0], DEFAULT_CLAMP_EPS).unwrap();
        assert!(r.soft_loss < 1e-6);
        assert_eq!(r.micro_f1, 1.0);

        let halves = [inst("a", 0.5), inst("b", 0.5)];
        let r = report_from_predictions("x", &halves, &[0.5, 0.5], DEFAULT_CLAMP_EPS).unwrap();
        assert!((r.soft_loss - core::f64::consts::LN_2).abs() < 1e-12);

        let four = [inst("a", 1.0), inst("b", 1.0), inst("c", 0.0), inst("d", 0.0)];
        let r = report_from_predictions("x", &four, &[0.9, 0.2, 0.1, 0.3], DEFAULT_CLAMP_EPS).unwrap();
        assert_eq!(
            r.confusion,
            Confusion {
                tp: 1,
                fp: 0,
                tn: 2,
                fn_: 1
            }
        );
        assert_eq!(r.micro_f1, 0.75);
        assert_eq!(r.confusion.n() as usize, r.n);

        assert!(matches!(
            report_from_predictions("x", &[], &[], DEFAULT_CLAMP_EPS),
            Err(Error::EmptySplit(_))
        ));
    }
}
