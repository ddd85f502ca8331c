//! Multinomial logistic regression trained from scratch by full-batch
//! gradient descent: cross-entropy plus L2 on the weights, learning-rate
//! backoff when the loss increases, best epoch selected on validation
//! accuracy. Zero initialization makes the initial loss exactly ln(#classes).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("class `{0}` has {1} training samples, need at least {2}")]
    ClassTooSmall(String, usize, usize),
    #[error("feature dimension mismatch: model {0}, input {1}")]
    DimensionMismatch(usize, usize),
    #[error("training set is empty")]
    Empty,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    /// Minimum training samples per class (the corpus contract).
    pub min_per_class: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { lr: 2.0, epochs: 400, l2: 1e-4, seed: 0, min_per_class: 50 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub lr_backoffs: usize,
    pub l2: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierModel {
    pub classes: Vec<String>,
    /// classes x features, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub feat_mean: Vec<f64>,
    pub feat_std: Vec<f64>,
    pub meta: TrainMeta,
}

impl ClassifierModel {
    pub fn n_features(&self) -> usize {
        self.feat_mean.len()
    }

    fn standardize(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .enumerate()
            .map(|(k, &v)| (v - self.feat_mean[k]) / self.feat_std[k])
            .collect()
    }

    /// Softmax probabilities over classes.
    pub fn probabilities(&self, features: &[f64]) -> Result<Vec<f64>, TrainError> {
        if features.len() != self.n_features() {
            return Err(TrainError::DimensionMismatch(self.n_features(), features.len()));
        }
        let x = self.standardize(features);
        let d = x.len();
        let logits: Vec<f64> = (0..self.classes.len())
            .map(|c| {
                self.bias[c]
                    + self.weights[c * d..(c + 1) * d]
                        .iter()
                        .zip(&x)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect();
        Ok(softmax(&logits))
    }

    /// Argmax class; probability ties break toward the lower class index.
    pub fn predict(&self, features: &[f64]) -> Result<(String, Vec<f64>), TrainError> {
        let probs = self.probabilities(features)?;
        let mut best = 0;
        for (c, p) in probs.iter().enumerate() {
            if *p > probs[best] {
                best = c;
            }
        }
        Ok((self.classes[best].clone(), probs))
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Cross-entropy + L2 loss and its analytic gradient at (weights, bias),
/// over standardized features. Exposed so tests can check the gradient
/// against central finite differences.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_gradient(
    x: &[Vec<f64>],
    y: &[usize],
    weights: &[f64],
    bias: &[f64],
    n_classes: usize,
    l2: f64,
) -> (f64, Vec<f64>, Vec<f64>) {
    let n = x.len() as f64;
    let d = x[0].len();
    let mut grad_w = vec![0.0; n_classes * d];
    let mut grad_b = vec![0.0; n_classes];
    let mut loss = 0.0;
    for (xi, &yi) in x.iter().zip(y) {
        let logits: Vec<f64> = (0..n_classes)
            .map(|c| {
                bias[c]
                    + weights[c * d..(c + 1) * d].iter().zip(xi).map(|(w, v)| w * v).sum::<f64>()
            })
            .collect();
        let probs = softmax(&logits);
        loss -= (probs[yi].max(1e-300)).ln();
        for c in 0..n_classes {
            let delta = probs[c] - f64::from(u8::from(c == yi));
            grad_b[c] += delta;
            for (k, v) in xi.iter().enumerate() {
                grad_w[c * d + k] += delta * v;
            }
        }
    }
    loss /= n;
    for g in grad_w.iter_mut() {
        *g /= n;
    }
    for g in grad_b.iter_mut() {
        *g /= n;
    }
    for (g, w) in grad_w.iter_mut().zip(weights) {
        *g += 2.0 * l2 * w;
    }
    loss += l2 * weights.iter().map(|w| w * w).sum::<f64>();
    (loss, grad_w, grad_b)
}

/// Train on (features, labels); the best epoch by validation accuracy wins.
pub fn train(
    train_features: &[Vec<f64>],
    train_labels: &[usize],
    val_features: &[Vec<f64>],
    val_labels: &[usize],
    classes: Vec<String>,
    cfg: &TrainConfig,
) -> Result<ClassifierModel, TrainError> {
    if train_features.is_empty() {
        return Err(TrainError::Empty);
    }
    let n_classes = classes.len();
    for (c, name) in classes.iter().enumerate() {
        let count = train_labels.iter().filter(|&&l| l == c).count();
        if count < cfg.min_per_class {
            return Err(TrainError::ClassTooSmall(name.clone(), count, cfg.min_per_class));
        }
    }
    let d = train_features[0].len();

    // standardization parameters from the training split
    let n = train_features.len() as f64;
    let mut feat_mean = vec![0.0; d];
    for xi in train_features {
        for (k, v) in xi.iter().enumerate() {
            feat_mean[k] += v;
        }
    }
    for m in feat_mean.iter_mut() {
        *m /= n;
    }
    let mut feat_std = vec![0.0; d];
    for xi in train_features {
        for (k, v) in xi.iter().enumerate() {
            feat_std[k] += (v - feat_mean[k]).powi(2);
        }
    }
    for s in feat_std.iter_mut() {
        *s = (*s / n).sqrt();
        if *s < 1e-9 {
            *s = 1.0;
        }
    }
    let standardize = |xs: &[Vec<f64>]| -> Vec<Vec<f64>> {
        xs.iter()
            .map(|xi| {
                xi.iter().enumerate().map(|(k, v)| (v - feat_mean[k]) / feat_std[k]).collect()
            })
            .collect()
    };
    let x_train = standardize(train_features);
    let x_val = standardize(val_features);

    let mut weights = vec![0.0; n_classes * d];
    let mut bias = vec![0.0; n_classes];
    let mut lr = cfg.lr;
    let mut backoffs = 0usize;
    let (mut loss, mut grad_w, mut grad_b) =
        loss_and_gradient(&x_train, train_labels, &weights, &bias, n_classes, cfg.l2);

    let accuracy = |w: &[f64], b: &[f64], xs: &[Vec<f64>], ys: &[usize]| -> f64 {
        if xs.is_empty() {
            return 0.0;
        }
        let mut hits = 0;
        for (xi, &yi) in xs.iter().zip(ys) {
            let mut best = 0;
            let mut best_logit = f64::NEG_INFINITY;
            for c in 0..n_classes {
                let logit = b[c]
                    + w[c * d..(c + 1) * d].iter().zip(xi).map(|(wk, v)| wk * v).sum::<f64>();
                if logit > best_logit {
                    best_logit = logit;
                    best = c;
                }
            }
            hits += usize::from(best == yi);
        }
        hits as f64 / xs.len() as f64
    };

    let mut best = (weights.clone(), bias.clone());
    let mut best_val = accuracy(&weights, &bias, &x_val, val_labels);
    let mut best_epoch = 0usize;
    let mut epoch = 0usize;
    while epoch < cfg.epochs {
        let cand_w: Vec<f64> =
            weights.iter().zip(&grad_w).map(|(w, g)| w - lr * g).collect();
        let cand_b: Vec<f64> = bias.iter().zip(&grad_b).map(|(b, g)| b - lr * g).collect();
        let (cand_loss, cand_gw, cand_gb) =
            loss_and_gradient(&x_train, train_labels, &cand_w, &cand_b, n_classes, cfg.l2);
        if cand_loss > loss && lr > 1e-6 {
            lr /= 2.0;
            backoffs += 1;
            continue; // retry the epoch at the smaller rate
        }
        weights = cand_w;
        bias = cand_b;
        loss = cand_loss;
        grad_w = cand_gw;
        grad_b = cand_gb;
        epoch += 1;
        let val_acc = accuracy(&weights, &bias, &x_val, val_labels);
        if val_acc > best_val {
            best_val = val_acc;
            best = (weights.clone(), bias.clone());
            best_epoch = epoch;
        }
    }
    // with no validation set, keep the final weights
    if val_features.is_empty() {
        best = (weights, bias);
        best_epoch = epoch;
    }

    Ok(ClassifierModel {
        classes,
        weights: best.0,
        bias: best.1,
        feat_mean,
        feat_std,
        meta: TrainMeta {
            seed: cfg.seed,
            epochs_run: epoch,
            best_epoch,
            best_val_accuracy: best_val,
            lr_backoffs: backoffs,
            l2: cfg.l2,
            final_train_loss: loss,
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<String>,
    pub accuracy: f64,
    pub per_class_recall: Vec<f64>,
    pub per_class_f1: Vec<f64>,
    pub macro_f1: f64,
    /// confusion[truth][predicted]
    pub confusion: Vec<Vec<usize>>,
}

pub fn evaluate(
    model: &ClassifierModel,
    features: &[Vec<f64>],
    labels: &[usize],
) -> Result<EvalReport, TrainError> {
    let c = model.classes.len();
    let mut confusion = vec![vec![0usize; c]; c];
    for (xi, &yi) in features.iter().zip(labels) {
        let (label, _) = model.predict(xi)?;
        let pred = model.classes.iter().position(|cl| cl == &label).expect("own class");
        confusion[yi][pred] += 1;
    }
    Ok(report_from_confusion(model.classes.clone(), confusion))
}

pub fn report_from_confusion(classes: Vec<String>, confusion: Vec<Vec<usize>>) -> EvalReport {
    let c = classes.len();
    let total: usize = confusion.iter().map(|row| row.iter().sum::<usize>()).sum();
    let correct: usize = (0..c).map(|k| confusion[k][k]).sum();
    let mut recall = vec![0.0; c];
    let mut f1 = vec![0.0; c];
    for k in 0..c {
        let truth: usize = confusion[k].iter().sum();
        let predicted: usize = (0..c).map(|t| confusion[t][k]).sum();
        let tp = confusion[k][k];
        recall[k] = if truth > 0 { tp as f64 / truth as f64 } else { 0.0 };
        let precision = if predicted > 0 { tp as f64 / predicted as f64 } else { 0.0 };
        f1[k] = if precision + recall[k] > 0.0 {
            2.0 * precision * recall[k] / (precision + recall[k])
        } else {
            0.0
        };
    }
    EvalReport {
        classes,
        accuracy: if total > 0 { correct as f64 / total as f64 } else { 0.0 },
        macro_f1: f1.iter().sum::<f64>() / c as f64,
        per_class_recall: recall,
        per_class_f1: f1,
        confusion,
    }
}

/// The confusion-structure gate: any confusion between two multi-bit codecs
/// (which occupy disjoint coefficient subspaces) above `max_rate` fails.
pub fn multibit_confusion_gate(report: &EvalReport, max_rate: f64) -> Result<(), String> {
    let multibit: Vec<usize> = report
        .classes
        .iter()
        .enumerate()
        .filter(|(_, name)| {
            crate::codecs::descriptor(name)
                .map(|d| d.kind == crate::codecs::CodecKind::MultiBit)
                .unwrap_or(false)
        })
        .map(|(k, _)| k)
        .collect();
    for &truth in &multibit {
        let n: usize = report.confusion[truth].iter().sum();
        if n == 0 {
            continue;
        }
        for &pred in &multibit {
            if truth == pred {
                continue;
            }
            let rate = report.confusion[truth][pred] as f64 / n as f64;
            if rate > max_rate {
                return Err(format!(
                    "confusion {} -> {} is {:.1}% (> {:.0}%)",
                    report.classes[truth],
                    report.classes[pred],
                    rate * 100.0,
                    max_rate * 100.0
                ));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_classes() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    /// Margin-1 linearly separable set in 2D.
    fn toy_set(n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let t = i as f64 / n as f64;
            x.push(vec![1.0 + t, t]);
            y.push(0);
            x.push(vec![-1.0 - t, -t]);
            y.push(1);
        }
        (x, y)
    }

    #[test]
    fn initial_loss_is_log_classes() {
        let (x, y) = toy_set(60);
        let weights = vec![0.0; 4];
        let bias = vec![0.0; 2];
        let (loss, _, _) = loss_and_gradient(&x, &y, &weights, &bias, 2, 0.0);
        assert!((loss - (2.0f64).ln()).abs() < 1e-9, "loss {loss}");
    }

    #[test]
    fn separable_toy_set_reaches_full_accuracy() {
        let (x, y) = toy_set(60);
        let cfg = TrainConfig { epochs: 500, min_per_class: 10, ..Default::default() };
        let model = train(&x, &y, &x, &y, toy_classes(), &cfg).unwrap();
        let report = evaluate(&model, &x, &y).unwrap();
        assert_eq!(report.accuracy, 1.0);
        assert_eq!(report.macro_f1, 1.0);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let x = vec![
            vec![0.3, -1.2, 0.7],
            vec![-0.4, 0.5, 1.3],
            vec![1.1, 0.2, -0.8],
            vec![-1.0, -0.3, 0.4],
            vec![0.6, 0.9, -0.2],
        ];
        let y = vec![0usize, 1, 2, 1, 0];
        let weights: Vec<f64> =
            (0..9).map(|k| ((k * 37 + 11) % 17) as f64 / 17.0 - 0.5).collect();
        let bias = vec![0.1, -0.2, 0.05];
        let l2 = 0.01;
        let (_, grad_w, grad_b) = loss_and_gradient(&x, &y, &weights, &bias, 3, l2);
        let eps = 1e-5;
        let mut max_rel = 0.0f64;
        for k in 0..weights.len() {
            let mut wp = weights.clone();
            wp[k] += eps;
            let mut wm = weights.clone();
            wm[k] -= eps;
            let (lp, _, _) = loss_and_gradient(&x, &y, &wp, &bias, 3, l2);
            let (lm, _, _) = loss_and_gradient(&x, &y, &wm, &bias, 3, l2);
            let fd = (lp - lm) / (2.0 * eps);
            let rel = (grad_w[k] - fd).abs() / fd.abs().max(1e-8);
            max_rel = max_rel.max(rel);
        }
        for k in 0..bias.len() {
            let mut bp = bias.clone();
            bp[k] += eps;
            let mut bm = bias.clone();
            bm[k] -= eps;
            let (lp, _, _) = loss_and_gradient(&x, &y, &weights, &bp, 3, l2);
            let (lm, _, _) = loss_and_gradient(&x, &y, &weights, &bm, 3, l2);
            let fd = (lp - lm) / (2.0 * eps);
            max_rel = max_rel.max((grad_b[k] - fd).abs() / fd.abs().max(1e-8));
        }
        assert!(max_rel < 1e-4, "max relative gradient error {max_rel}");
    }

    #[test]
    fn zero_model_predicts_uniform_and_first_class() {
        let model = ClassifierModel {
            classes: vec!["a".into(), "b".into(), "c".into()],
            weights: vec![0.0; 6],
            bias: vec![0.0; 3],
            feat_mean: vec![0.0; 2],
            feat_std: vec![1.0; 2],
            meta: TrainMeta {
                seed: 0,
                epochs_run: 0,
                best_epoch: 0,
                best_val_accuracy: 0.0,
                lr_backoffs: 0,
                l2: 0.0,
                final_train_loss: 0.0,
            },
        };
        let (label, probs) = model.predict(&[0.4, -0.7]).unwrap();
        assert_eq!(label, "a");
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(probs.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-12));
        assert!(model.predict(&[1.0]).is_err());
    }

    #[test]
    fn class_minimum_is_enforced() {
        let (x, y) = toy_set(10);
        let cfg = TrainConfig { min_per_class: 50, ..Default::default() };
        assert!(matches!(
            train(&x, &y, &x, &y, toy_classes(), &cfg),
            Err(TrainError::ClassTooSmall(..))
        ));
    }

    #[test]
    fn all_one_class_predictions_score_chance() {
        let confusion = vec![vec![3, 0, 0], vec![3, 0, 0], vec![3, 0, 0]];
        let report =
            report_from_confusion(vec!["a".into(), "b".into(), "c".into()], confusion);
        assert!((report.accuracy - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hand_built_confusion_recall_and_f1() {
        // truth a: 8 right, 2 -> b; truth b: 10 right; truth c: 5 right, 5 -> a
        let confusion = vec![vec![8, 2, 0], vec![0, 10, 0], vec![5, 0, 5]];
        let report =
            report_from_confusion(vec!["a".into(), "b".into(), "c".into()], confusion);
        assert!((report.per_class_recall[0] - 0.8).abs() < 1e-12);
        assert!((report.per_class_recall[1] - 1.0).abs() < 1e-12);
        assert!((report.per_class_recall[2] - 0.5).abs() < 1e-12);
        // precision a = 8/13, f1_a = 2*(8/13)*0.8/((8/13)+0.8)
        let pa: f64 = 8.0 / 13.0;
        let f1a = 2.0 * pa * 0.8 / (pa + 0.8);
        assert!((report.per_class_f1[0] - f1a).abs() < 1e-12);
    }
}
