//! Imbalance-aware evaluation: confusion matrix, balanced accuracy, macro
//! F-score, macro G-mean, plain accuracy, and the one-line report formatter.
//!
//! A class that never occurs in `y_true` makes per-class recall undefined;
//! that is reported as a hard [`Error::AbsentTrueClass`] instead of a silent
//! zero, because silent zeros mask exactly the class-distribution bugs this
//! toolkit exists to surface.

use crate::error::{Error, Result};

/// K×K tally of (true class, predicted class) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<usize>,
    n_classes: usize,
}

impl ConfusionMatrix {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Count of samples with true class `i` predicted as `j`.
    pub fn get(&self, i: usize, j: usize) -> usize {
        self.counts[i * self.n_classes + j]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Samples whose true class is `i`.
    pub fn support(&self, i: usize) -> usize {
        (0..self.n_classes).map(|j| self.get(i, j)).sum()
    }

    /// Samples predicted as class `j`.
    pub fn predicted(&self, j: usize) -> usize {
        (0..self.n_classes).map(|i| self.get(i, j)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<usize>> {
        (0..self.n_classes)
            .map(|i| (0..self.n_classes).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Build directly from counts (row-major, truth × predicted).
    pub fn from_counts(rows: &[Vec<usize>]) -> Result<Self> {
        let n_classes = rows.len();
        if n_classes == 0 || rows.iter().any(|r| r.len() != n_classes) {
            return Err(Error::ShapeMismatch {
                expected: "a square counts matrix".into(),
                got: format!("{} rows", n_classes),
            });
        }
        Ok(ConfusionMatrix {
            counts: rows.iter().flatten().copied().collect(),
            n_classes,
        })
    }

    fn recalls(&self) -> Result<Vec<f64>> {
        (0..self.n_classes)
            .map(|i| {
                let support = self.support(i);
                if support == 0 {
                    return Err(Error::AbsentTrueClass { class: i });
                }
                Ok(self.get(i, i) as f64 / support as f64)
            })
            .collect()
    }
}

/// Tally predictions into a `n_classes` × `n_classes` confusion matrix.
pub fn confusion_matrix(
    y_true: &[usize],
    y_pred: &[usize],
    n_classes: usize,
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::LengthMismatch {
            true_len: y_true.len(),
            pred_len: y_pred.len(),
        });
    }
    for &label in y_true.iter().chain(y_pred) {
        if label >= n_classes {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
    }
    let mut counts = vec![0usize; n_classes * n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        counts[t * n_classes + p] += 1;
    }
    Ok(ConfusionMatrix { counts, n_classes })
}

/// Arithmetic mean of per-class recalls.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let recalls = cm.recalls()?;
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

/// Mean over classes of `F1_c = 2·P_c·R_c / (P_c + R_c)`, with a never-
/// predicted class contributing precision 0 and `F1_c = 0` when both terms
/// vanish.
pub fn macro_fscore(cm: &ConfusionMatrix) -> Result<f64> {
    let recalls = cm.recalls()?;
    let f1_sum: f64 = (0..cm.n_classes())
        .map(|c| {
            let predicted = cm.predicted(c);
            let precision = if predicted == 0 {
                0.0
            } else {
                cm.get(c, c) as f64 / predicted as f64
            };
            let recall = recalls[c];
            if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            }
        })
        .sum();
    Ok(f1_sum / cm.n_classes() as f64)
}

/// Geometric mean of per-class recalls: `(∏ recall_c)^(1/K)`. For binary
/// problems this is the classic `√(sensitivity · specificity)`.
pub fn macro_gmean(cm: &ConfusionMatrix) -> Result<f64> {
    let recalls = cm.recalls()?;
    let product: f64 = recalls.iter().product();
    Ok(product.powf(1.0 / recalls.len() as f64))
}

/// Plain accuracy — deliberately included so comparisons can show how it
/// overstates performance on skewed data.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let correct: usize = (0..cm.n_classes()).map(|i| cm.get(i, i)).sum();
    Ok(correct as f64 / cm.total() as f64)
}

pub type MetricFn = fn(&ConfusionMatrix) -> Result<f64>;

/// Registered metrics, in registry order.
pub const METRIC_REGISTRY: [(&str, MetricFn); 4] = [
    ("balanced_acc", balanced_accuracy),
    ("macro_f1", macro_fscore),
    ("macro_gmean", macro_gmean),
    ("accuracy", accuracy),
];

pub fn metric_names() -> Vec<&'static str> {
    METRIC_REGISTRY.iter().map(|(name, _)| *name).collect()
}

pub fn metric_by_name(name: &str) -> Result<MetricFn> {
    METRIC_REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| *f)
        .ok_or_else(|| Error::UnknownMetric { name: name.to_string() })
}

/// Round half-up to three decimals; `{:.3}` is banker's-ish on ties, which
/// would break the printed-line contract.
fn format3(v: f64) -> String {
    let scaled = ((v * 1000.0) + 0.5).floor() as i64;
    format!("{}.{:03}", scaled / 1000, scaled % 1000)
}

/// One-line evaluation report:
/// `"<name> balanced Acc: <v> | macro Fscore: <v> | macro Gmean: <v>"`,
/// values rounded half-up to three decimals.
pub fn evaluate_print(name: &str, y_true: &[usize], y_pred: &[usize]) -> Result<String> {
    let n_classes = y_true
        .iter()
        .chain(y_pred)
        .copied()
        .max()
        .map_or(0, |m| m + 1);
    let cm = confusion_matrix(y_true, y_pred, n_classes)?;
    Ok(format!(
        "{} balanced Acc: {} | macro Fscore: {} | macro Gmean: {}",
        name,
        format3(balanced_accuracy(&cm)?),
        format3(macro_fscore(&cm)?),
        format3(macro_gmean(&cm)?),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm_2x2() -> ConfusionMatrix {
        // y_true=[0,0,1,1], y_pred=[0,1,1,1]
        confusion_matrix(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap()
    }

    #[test]
    fn tallies_match_hand_counts() {
        let cm = confusion_matrix(&[0, 1], &[0, 1], 2).unwrap();
        assert_eq!(cm.rows(), vec![vec![1, 0], vec![0, 1]]);
        let cm = cm_2x2();
        assert_eq!(cm.rows(), vec![vec![1, 1], vec![0, 2]]);
        assert_eq!(cm.total(), 4);
    }

    #[test]
    fn rejects_malformed_label_pairs() {
        assert!(matches!(
            confusion_matrix(&[0, 1], &[0], 2),
            Err(Error::LengthMismatch { true_len: 2, pred_len: 1 })
        ));
        assert!(matches!(
            confusion_matrix(&[], &[], 2),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion_matrix(&[0, 3], &[0, 1], 2),
            Err(Error::LabelOutOfRange { label: 3, n_classes: 2 })
        ));
    }

    #[test]
    fn hand_computed_two_class_values() {
        let cm = cm_2x2();
        // recalls 1/2 and 1 → balanced accuracy 0.75.
        assert!((balanced_accuracy(&cm).unwrap() - 0.75).abs() < 1e-15);
        // F1 = 2/3 (class 0) and 4/5 (class 1) → macro 11/15.
        assert!((macro_fscore(&cm).unwrap() - 11.0 / 15.0).abs() < 1e-15);
        // G-mean = sqrt(0.5).
        assert!((macro_gmean(&cm).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((accuracy(&cm).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn identity_matrix_scores_one() {
        let cm = confusion_matrix(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(balanced_accuracy(&cm).unwrap(), 1.0);
        assert_eq!(macro_fscore(&cm).unwrap(), 1.0);
        assert_eq!(macro_gmean(&cm).unwrap(), 1.0);
    }

    #[test]
    fn constant_predictor_on_balanced_binary_truth() {
        // All predictions class 1 on balanced truth: F1 = (0 + 2/3)/2 = 1/3,
        // recall product is 0.
        let cm = confusion_matrix(&[0, 0, 1, 1], &[1, 1, 1, 1], 2).unwrap();
        assert!((macro_fscore(&cm).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(macro_gmean(&cm).unwrap(), 0.0);
        assert_eq!(balanced_accuracy(&cm).unwrap(), 0.5);
    }

    #[test]
    fn absent_true_class_is_a_hard_error() {
        let cm = confusion_matrix(&[0, 0], &[0, 1], 2).unwrap();
        assert!(matches!(
            balanced_accuracy(&cm),
            Err(Error::AbsentTrueClass { class: 1 })
        ));
        assert!(matches!(macro_fscore(&cm), Err(Error::AbsentTrueClass { class: 1 })));
        assert!(matches!(macro_gmean(&cm), Err(Error::AbsentTrueClass { class: 1 })));
    }

    #[test]
    fn balanced_accuracy_dominates_gmean() {
        // AM ≥ GM over recalls, spot-checked on an assortment of matrices.
        for rows in [
            vec![vec![5, 2, 1], vec![1, 7, 3], vec![2, 2, 9]],
            vec![vec![1, 9], vec![3, 7]],
            vec![vec![10, 0], vec![0, 1]],
        ] {
            let cm = ConfusionMatrix::from_counts(&rows).unwrap();
            assert!(balanced_accuracy(&cm).unwrap() >= macro_gmean(&cm).unwrap() - 1e-15);
        }
    }

    #[test]
    fn class_permutation_leaves_metrics_unchanged() {
        let y_true = [0, 1, 2, 0, 1, 2, 2, 0, 1, 2];
        let y_pred = [0, 2, 2, 1, 1, 0, 2, 0, 1, 1];
        let perm = [2usize, 0, 1];
        let pt: Vec<usize> = y_true.iter().map(|&y| perm[y]).collect();
        let pp: Vec<usize> = y_pred.iter().map(|&y| perm[y]).collect();
        let a = confusion_matrix(&y_true, &y_pred, 3).unwrap();
        let b = confusion_matrix(&pt, &pp, 3).unwrap();
        assert!((balanced_accuracy(&a).unwrap() - balanced_accuracy(&b).unwrap()).abs() < 1e-15);
        assert!((macro_fscore(&a).unwrap() - macro_fscore(&b).unwrap()).abs() < 1e-15);
        assert!((macro_gmean(&a).unwrap() - macro_gmean(&b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn registry_resolves_names_and_rejects_unknown() {
        for name in metric_names() {
            assert!(metric_by_name(name).is_ok());
        }
        assert!(matches!(
            metric_by_name("auroc"),
            Err(Error::UnknownMetric { .. })
        ));
    }

    #[test]
    fn evaluate_print_formats_exactly() {
        assert_eq!(
            evaluate_print("M", &[0, 1, 2], &[0, 1, 2]).unwrap(),
            "M balanced Acc: 1.000 | macro Fscore: 1.000 | macro Gmean: 1.000"
        );
        assert_eq!(
            evaluate_print("T", &[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(),
            "T balanced Acc: 0.750 | macro Fscore: 0.733 | macro Gmean: 0.707"
        );
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(format3(0.9715), "0.972");
        assert_eq!(format3(0.0005), "0.001");
        assert_eq!(format3(0.8864999), "0.886");
        assert_eq!(format3(1.0), "1.000");
        assert_eq!(format3(0.25), "0.250");
    }
}
