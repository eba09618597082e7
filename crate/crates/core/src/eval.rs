//! Temporal train/test split, classification report, ROC curve and AUC.

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Calendar boundary of the temporal split: rows strictly before it train,
/// rows at or after it test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub boundary: NaiveDateTime,
}

impl Default for SplitSpec {
    /// 2024-07-01T00:00.
    fn default() -> Self {
        SplitSpec {
            boundary: NaiveDate::from_ymd_opt(2024, 7, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
        }
    }
}

/// Split a dataset at the calendar boundary, preserving row order.
pub fn time_split(matrix: &FeatureMatrix, spec: &SplitSpec) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let cut = matrix.window().offset_minutes(spec.boundary);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (row, stamp) in matrix.row_stamps().iter().enumerate() {
        if i64::from(stamp.0) < cut {
            train.push(row);
        } else {
            test.push(row);
        }
    }
    if train.is_empty() {
        return Err(Error::validation(format!("train side is empty at boundary {}", spec.boundary)));
    }
    if test.is_empty() {
        return Err(Error::validation(format!("test side is empty at boundary {}", spec.boundary)));
    }
    Ok((matrix.subset(&train), matrix.subset(&test)))
}

/// Precision/recall/F1 for one class, with the 0-convention when a
/// denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Confusion counts at the decision threshold (class 1 is positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Threshold metrics of a score vector against binary labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub class0: ClassMetrics,
    pub class1: ClassMetrics,
    pub confusion: ConfusionCounts,
}

fn ratio_or_zero(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_or_zero(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Accuracy, confusion counts and per-class metrics with prediction
/// `score >= threshold`.
pub fn classification_report(labels: &[u8], scores: &[f64], threshold: f64) -> Result<ClassificationReport> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: scores.len() });
    }
    if labels.is_empty() {
        return Err(Error::validation("cannot score an empty label list"));
    }
    let mut confusion = ConfusionCounts { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&label, &score) in labels.iter().zip(scores) {
        let predicted = score >= threshold;
        match (label == 1, predicted) {
            (true, true) => confusion.tp += 1,
            (false, true) => confusion.fp += 1,
            (false, false) => confusion.tn += 1,
            (true, false) => confusion.fn_ += 1,
        }
    }
    let ConfusionCounts { tp, fp, tn, fn_ } = confusion;
    let precision1 = ratio_or_zero(tp, tp + fp);
    let recall1 = ratio_or_zero(tp, tp + fn_);
    let precision0 = ratio_or_zero(tn, tn + fn_);
    let recall0 = ratio_or_zero(tn, tn + fp);
    Ok(ClassificationReport {
        accuracy: (tp + tn) as f64 / labels.len() as f64,
        class0: ClassMetrics {
            precision: precision0,
            recall: recall0,
            f1: f1_or_zero(precision0, recall0),
            support: tn + fp,
        },
        class1: ClassMetrics {
            precision: precision1,
            recall: recall1,
            f1: f1_or_zero(precision1, recall1),
            support: tp + fn_,
        },
        confusion,
    })
}

/// ROC points `(fpr, tpr)` swept over the distinct score values in
/// descending order, tied scores grouped, starting at `(0,0)` and ending at
/// `(1,1)`.
pub fn roc_curve(labels: &[u8], scores: &[f64]) -> Result<Vec<(f64, f64)>> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: scores.len() });
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass("roc curve needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }
    Ok(points)
}

/// Trapezoidal area under an ROC point list.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|pair| {
            let (x0, y0) = pair[0];
            let (x1, y1) = pair[1];
            (x1 - x0) * (y0 + y1) / 2.0
        })
        .sum()
}

/// Full evaluation artifact: threshold metrics plus the ROC curve and AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub class0: ClassMetrics,
    pub class1: ClassMetrics,
    pub confusion: ConfusionCounts,
    pub roc: Vec<(f64, f64)>,
    pub auc: f64,
}

impl EvalReport {
    pub fn compute(labels: &[u8], scores: &[f64], threshold: f64) -> Result<EvalReport> {
        let metrics = classification_report(labels, scores, threshold)?;
        let roc = roc_curve(labels, scores)?;
        let area = auc(&roc);
        Ok(EvalReport {
            accuracy: metrics.accuracy,
            class0: metrics.class0,
            class1: metrics.class1,
            confusion: metrics.confusion,
            roc,
            auc: area,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{MinuteStamp, StudyWindow};

    fn matrix_with_stamps(stamps: &[u32]) -> FeatureMatrix {
        let w = StudyWindow::default();
        let n = stamps.len();
        FeatureMatrix::new(
            w,
            vec!["f0".into()],
            vec![(0..n).map(|i| i as f64).collect()],
            vec![0; n].iter().enumerate().map(|(i, _)| u8::from(i % 2 == 0)).collect(),
            stamps.iter().map(|&s| MinuteStamp(s)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn split_boundary_convention() {
        let w = StudyWindow::default();
        let boundary_minute = 100u32;
        let boundary = w.datetime(MinuteStamp(boundary_minute));
        let m = matrix_with_stamps(&[98, 99, 100, 101]);
        let (train, test) = time_split(&m, &SplitSpec { boundary }).unwrap();
        assert_eq!(train.row_stamps().iter().map(|s| s.0).collect::<Vec<_>>(), [98, 99]);
        assert_eq!(test.row_stamps().iter().map(|s| s.0).collect::<Vec<_>>(), [100, 101]);
    }

    #[test]
    fn split_with_empty_side_errors() {
        let w = StudyWindow::default();
        let m = matrix_with_stamps(&[10, 20]);
        let before_all = SplitSpec { boundary: w.datetime(MinuteStamp(0)) };
        let err = time_split(&m, &before_all).unwrap_err();
        assert!(err.to_string().contains("train side is empty"), "{err}");
        let after_all = SplitSpec { boundary: w.datetime(MinuteStamp(50)) };
        let err = time_split(&m, &after_all).unwrap_err();
        assert!(err.to_string().contains("test side is empty"), "{err}");
    }

    #[test]
    fn perfect_predictions_report() {
        let labels = [1, 0, 1, 0];
        let scores = [0.9, 0.1, 0.8, 0.2];
        let report = classification_report(&labels, &scores, 0.5).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.class0.f1, 1.0);
        assert_eq!(report.class1.f1, 1.0);
        assert_eq!(report.confusion, ConfusionCounts { tp: 2, fp: 0, tn: 2, fn_: 0 });
    }

    #[test]
    fn all_positive_predictions_report() {
        let labels = [1, 1, 0, 0];
        let scores = [0.9, 0.9, 0.9, 0.9];
        let report = classification_report(&labels, &scores, 0.5).unwrap();
        assert_eq!(report.accuracy, 0.5);
        assert_eq!(report.class1.precision, 0.5);
        assert_eq!(report.class1.recall, 1.0);
        // nothing predicted 0: precision(0) falls back to 0
        assert_eq!(report.class0.precision, 0.0);
        assert_eq!(report.class0.recall, 0.0);
    }

    #[test]
    fn roc_perfect_ranking() {
        let points = roc_curve(&[1, 1, 0], &[0.9, 0.8, 0.1]).unwrap();
        assert_eq!(points, [(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(auc(&points), 1.0);
    }

    #[test]
    fn roc_all_scores_tied() {
        let points = roc_curve(&[1, 0, 1, 0], &[0.4, 0.4, 0.4, 0.4]).unwrap();
        assert_eq!(points, [(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&points), 0.5);
    }

    #[test]
    fn roc_requires_both_classes() {
        assert!(roc_curve(&[1, 1], &[0.2, 0.3]).is_err());
    }

    #[test]
    fn report_serializes_fn_key() {
        let report = EvalReport::compute(&[1, 0], &[0.9, 0.1], 0.5).unwrap();
        let json = report.to_json();
        assert!(json.contains("\"fn\""), "{json}");
        let parsed: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, report);
    }

    /// Tie-corrected pairwise Mann-Whitney statistic:
    /// P(score+ > score-) + 0.5 P(score+ = score-).
    fn mann_whitney_auc(labels: &[u8], scores: &[f64]) -> f64 {
        let mut wins = 0.0f64;
        let mut pairs = 0.0f64;
        for (i, &li) in labels.iter().enumerate() {
            if li != 1 {
                continue;
            }
            for (j, &lj) in labels.iter().enumerate() {
                if lj != 0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn labeled_scores() -> impl Strategy<Value = (Vec<u8>, Vec<f64>)> {
            proptest::collection::vec((any::<bool>(), 0u8..20), 4..200).prop_map(|pairs| {
                // quantized scores produce plenty of ties
                let labels: Vec<u8> = pairs.iter().map(|&(l, _)| u8::from(l)).collect();
                let scores: Vec<f64> = pairs.iter().map(|&(_, s)| f64::from(s) / 20.0).collect();
                (labels, scores)
            })
        }

        proptest! {
            #[test]
            fn auc_matches_mann_whitney((labels, scores) in labeled_scores()) {
                prop_assume!(labels.contains(&1) && labels.contains(&0));
                let points = roc_curve(&labels, &scores).unwrap();
                let trapezoid = auc(&points);
                let pairwise = mann_whitney_auc(&labels, &scores);
                prop_assert!((trapezoid - pairwise).abs() < 1e-12, "{trapezoid} vs {pairwise}");
                prop_assert!((0.0..=1.0 + 1e-12).contains(&trapezoid));
            }

            #[test]
            fn roc_monotone_and_anchored((labels, scores) in labeled_scores()) {
                prop_assume!(labels.contains(&1) && labels.contains(&0));
                let points = roc_curve(&labels, &scores).unwrap();
                prop_assert_eq!(points[0], (0.0, 0.0));
                prop_assert_eq!(*points.last().unwrap(), (1.0, 1.0));
                for pair in points.windows(2) {
                    prop_assert!(pair[1].0 >= pair[0].0 && pair[1].1 >= pair[0].1);
                }
            }

            #[test]
            fn roc_invariant_under_monotone_transform((labels, scores) in labeled_scores()) {
                prop_assume!(labels.contains(&1) && labels.contains(&0));
                let transformed: Vec<f64> = scores.iter().map(|&s| (3.0 * s + 1.0).exp()).collect();
                prop_assert_eq!(roc_curve(&labels, &scores).unwrap(), roc_curve(&labels, &transformed).unwrap());
            }

            #[test]
            fn auc_antisymmetric_for_tie_free_scores(labels in proptest::collection::vec(any::<bool>(), 4..100)) {
                prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
                let labels: Vec<u8> = labels.iter().map(|&l| u8::from(l)).collect();
                // distinct scores by construction
                let scores: Vec<f64> = (0..labels.len()).map(|i| (i as f64 * 37.0) % 101.0).collect();
                let forward = auc(&roc_curve(&labels, &scores).unwrap());
                let negated: Vec<f64> = scores.iter().map(|&s| -s).collect();
                let backward = auc(&roc_curve(&labels, &negated).unwrap());
                prop_assert!((forward + backward - 1.0).abs() < 1e-12);
            }

            #[test]
            fn report_matches_counting_oracle((labels, scores) in labeled_scores(), threshold in 0.0f64..1.0) {
                let report = classification_report(&labels, &scores, threshold).unwrap();
                let n = labels.len();
                let mut counts = [0usize; 4]; // tp fp tn fn
                for (&l, &s) in labels.iter().zip(&scores) {
                    let p = s >= threshold;
                    match (l == 1, p) {
                        (true, true) => counts[0] += 1,
                        (false, true) => counts[1] += 1,
                        (false, false) => counts[2] += 1,
                        (true, false) => counts[3] += 1,
                    }
                }
                let [tp, fp, tn, fn_] = counts;
                prop_assert_eq!(report.confusion, ConfusionCounts { tp, fp, tn, fn_ });
                prop_assert_eq!(tp + fp + tn + fn_, n);
                prop_assert_eq!(report.accuracy, (tp + tn) as f64 / n as f64);
                prop_assert_eq!(report.class1.support, tp + fn_);
                prop_assert_eq!(report.class0.support, tn + fp);
            }

            #[test]
            fn time_split_matches_comparison_oracle(stamps in proptest::collection::vec(0u32..5000, 2..60), cut in 1u32..4999) {
                let m = matrix_with_stamps(&stamps);
                let w = m.window().clone();
                let spec = SplitSpec { boundary: w.datetime(MinuteStamp(cut)) };
                match time_split(&m, &spec) {
                    Ok((train, test)) => {
                        prop_assert!(train.row_stamps().iter().all(|s| s.0 < cut));
                        prop_assert!(test.row_stamps().iter().all(|s| s.0 >= cut));
                        prop_assert_eq!(train.n_rows() + test.n_rows(), m.n_rows());
                    }
                    Err(_) => {
                        let n_before = stamps.iter().filter(|&&s| s < cut).count();
                        prop_assert!(n_before == 0 || n_before == stamps.len());
                    }
                }
            }
        }
    }
}
