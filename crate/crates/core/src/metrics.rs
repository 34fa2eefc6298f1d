//! Structure-recovery metrics and the relative error of log normalising constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Agreement counts over the `p(p−1)/2` vertex pairs; positives are edges of the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

pub fn confusion(est: &Graph, truth: &Graph) -> Result<ConfusionCounts> {
    if est.p() != truth.p() {
        return Err(Error::DimensionMismatch(format!(
            "estimate has {} vertices, truth has {}",
            est.p(),
            truth.p()
        )));
    }
    let mut c = ConfusionCounts::default();
    let p = est.p();
    for i in 0..p {
        for j in (i + 1)..p {
            match (est.has_edge(i, j), truth.has_edge(i, j)) {
                (true, true) => c.tp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScores {
    pub sp: f64,
    pub se: f64,
    pub mcc: f64,
}

/// Specificity, sensitivity and Matthews correlation. An empty class gives
/// SP or SE of 1; a zero factor under the MCC root gives MCC 0.
pub fn sp_se_mcc(c: &ConfusionCounts) -> RecoveryScores {
    let (tp, tn, fp, fn_) = (c.tp as f64, c.tn as f64, c.fp as f64, c.fn_ as f64);
    let ratio = |num: f64, den: f64| if den == 0.0 { 1.0 } else { num / den };
    let den = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    let mcc = if den == 0.0 {
        0.0
    } else {
        (tp * tn - fp * fn_) / den.sqrt()
    };
    RecoveryScores {
        sp: ratio(tn, tn + fp),
        se: ratio(tp, tp + fn_),
        mcc,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelError {
    pub re: f64,
    pub abs_diff: f64,
    /// `|log I| < 1`: only `abs_diff` is meaningful.
    pub unreliable: bool,
}

/// `|log I − log Î| / |log I|`.
pub fn rel_error_lognorm(log_i_true: f64, log_i_hat: f64) -> RelError {
    let abs_diff = (log_i_true - log_i_hat).abs();
    RelError {
        re: if abs_diff == 0.0 {
            0.0
        } else {
            abs_diff / log_i_true.abs()
        },
        abs_diff,
        unreliable: log_i_true.abs() < 1.0,
    }
}

/// Mean and standard error of the mean; the error is `None` for fewer than two values.
pub fn mean_se(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}
