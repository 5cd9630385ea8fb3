use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary confusion counts. For edit-level GEC scoring `tn` stays zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Counts with the positive and negative classes exchanged.
    pub fn swapped(&self) -> Self {
        ConfusionCounts {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }

    /// Tallies predictions against gold labels, with `true` as the positive class.
    pub fn from_predictions(gold: &[bool], predicted: &[bool]) -> Self {
        let mut c = ConfusionCounts::default();
        for (&g, &p) in gold.iter().zip(predicted) {
            match (g, p) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }
}

impl std::ops::AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
        self.tn += rhs.tn;
    }
}

pub fn acc(c: &ConfusionCounts) -> Result<f64> {
    let total = c.total();
    if total == 0 {
        return Err(Error::EmptyEvaluation("confusion counts are all zero".into()));
    }
    Ok((c.tp + c.tn) as f64 / total as f64)
}

/// Matthews correlation coefficient; 0 when any marginal is empty.
pub fn mcc(c: &ConfusionCounts) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::EmptyEvaluation("confusion counts are all zero".into()));
    }
    let (tp, fp, fn_, tn) = (c.tp as i128, c.fp as i128, c.fn_ as i128, c.tn as i128);
    let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if factors.contains(&0) {
        return Ok(0.0);
    }
    let numerator = (tp * tn - fp * fn_) as f64;
    let denominator = factors.iter().map(|&f| f as f64).product::<f64>().sqrt();
    Ok((numerator / denominator).clamp(-1.0, 1.0))
}
