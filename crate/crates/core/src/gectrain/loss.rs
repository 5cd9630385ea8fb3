use serde::{Deserialize, Serialize};

use super::vocab::PAD;
use crate::judge::ColaScore;

pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CeOutput {
    pub loss: f64,
    /// Gradient of the loss with respect to each step's pre-softmax logits.
    pub grad_logits: Vec<Vec<f64>>,
    /// Steps whose gold probability was below the floor.
    pub clamped: usize,
}

/// Summed negative log-likelihood of the gold tokens, skipping PAD targets.
pub fn ce_loss(predictions: &[Vec<f64>], targets: &[u32]) -> CeOutput {
    assert_eq!(predictions.len(), targets.len(), "one distribution per target step");
    let mut loss = 0.0;
    let mut clamped = 0;
    let mut grad_logits = Vec::with_capacity(targets.len());
    for (p, &y) in predictions.iter().zip(targets) {
        if y == PAD {
            grad_logits.push(vec![0.0; p.len()]);
            continue;
        }
        let py = p[y as usize];
        if py < PROB_FLOOR {
            clamped += 1;
        }
        loss -= py.max(PROB_FLOOR).ln();
        let mut g = p.clone();
        g[y as usize] -= 1.0;
        grad_logits.push(g);
    }
    CeOutput {
        loss,
        grad_logits,
        clamped,
    }
}

/// `sqrt(acc * score)`.
pub fn loss_weight(acc: f64, score: ColaScore) -> f64 {
    (acc * score.value()).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub ce: f64,
    pub weight: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn weighted(ce: f64, weight: f64) -> Self {
        LossBreakdown {
            ce,
            weight,
            total: ce * weight,
        }
    }
}

/// Cross-entropy scaled by a detached judge weight; gradients scale alike.
pub fn dynamic_loss(predictions: &[Vec<f64>], targets: &[u32], acc: f64, score: ColaScore) -> (LossBreakdown, CeOutput) {
    let mut ce = ce_loss(predictions, targets);
    let w = loss_weight(acc, score);
    for g in ce.grad_logits.iter_mut().flatten() {
        *g *= w;
    }
    (LossBreakdown::weighted(ce.loss, w), ce)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::judge::{cola_score, Logits};

    #[test]
    fn ce_examples() {
        let one_hot = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(ce_loss(&one_hot, &[1, 2]).loss, 0.0);

        let p = vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.25, 0.25, 0.25, 0.25]];
        let out = ce_loss(&p, &[1, 3]);
        assert!((out.loss - 2.079_441_541_679_836).abs() < 1e-12);

        let v = 7;
        let uniform = vec![vec![1.0 / v as f64; v]; 5];
        let out = ce_loss(&uniform, &[4, 4, 5, 6, 3]);
        assert!((out.loss - 5.0 * (v as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn ce_skips_pad_and_clamps() {
        let p = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let out = ce_loss(&p, &[PAD, 1]);
        assert_eq!(out.clamped, 1);
        assert!((out.loss + PROB_FLOOR.ln()).abs() < 1e-9);
        assert!(out.grad_logits[0].iter().all(|g| *g == 0.0));
    }

    #[test]
    fn weight_examples() {
        let half = cola_score(Logits::new(0.0, 0.0)).unwrap();
        assert!((loss_weight(0.85, half) - 0.651_920_240_520_265).abs() < 1e-12);
        assert_eq!(loss_weight(0.0, half), 0.0);
        let near_one = cola_score(Logits::new(40.0, 0.0)).unwrap();
        assert!((loss_weight(1.0, near_one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dynamic_example() {
        let p = vec![vec![0.5, 0.5, 0.0, 0.0], vec![0.25, 0.25, 0.25, 0.25]];
        let half = cola_score(Logits::new(0.0, 0.0)).unwrap();
        let (b, _) = dynamic_loss(&p, &[1, 3], 0.85, half);
        assert!((b.total - 1.355_630).abs() < 5e-7);
        assert_eq!(b.total, b.ce * b.weight);
    }
}
