use serde::{Deserialize, Serialize};

/// Floor applied to predicted probabilities inside the cross-entropy log.
pub const CCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Squared Euclidean distance.
    L2,
    /// `−Σ y·ln ŷ`.
    CategoricalCrossEntropy,
}

impl Loss {
    /// Loss of one sample.
    pub fn sample(self, pred: &[f64], label: &[f64]) -> f64 {
        debug_assert_eq!(pred.len(), label.len());
        match self {
            Loss::L2 => pred.iter().zip(label).map(|(p, y)| (p - y) * (p - y)).sum(),
            Loss::CategoricalCrossEntropy => pred
                .iter()
                .zip(label)
                .filter(|(_, &y)| y != 0.0)
                .map(|(p, y)| -y * p.max(CCE_FLOOR).ln())
                .sum(),
        }
    }

    /// Mean of [`Loss::sample`] over a batch.
    pub fn batch_mean(self, preds: &[Vec<f64>], labels: &[Vec<f64>]) -> f64 {
        debug_assert_eq!(preds.len(), labels.len());
        if preds.is_empty() {
            return 0.0;
        }
        let total: f64 = preds.iter().zip(labels).map(|(p, y)| self.sample(p, y)).sum();
        total / preds.len() as f64
    }
}

/// Batch-mean squared Euclidean distance.
pub fn loss_l2(preds: &[Vec<f64>], labels: &[Vec<f64>]) -> f64 {
    Loss::L2.batch_mean(preds, labels)
}

/// Batch-mean categorical cross-entropy with the probability floor.
pub fn loss_cce(preds: &[Vec<f64>], labels: &[Vec<f64>]) -> f64 {
    Loss::CategoricalCrossEntropy.batch_mean(preds, labels)
}
