//! Sum-of-squared-errors loss and one-hot target encoding.
//!
//! SSE is reported in 64 bits for bookkeeping only; parameter updates
//! flow through the elementwise delta `ŷ − y`, which stays within the
//! 32-bit matrix arithmetic.

use crate::error::{Error, Result};
use crate::matrix::IntMatrix;

/// One-hot label encoding. The hot value defaults to 127 — the
/// saturation value of the pocket activations — so targets are reachable
/// by the network output.
#[derive(Clone, Copy, Debug)]
pub struct TargetEncoding {
    pub num_classes: usize,
    pub hot_value: i32,
    pub cold_value: i32,
}

impl TargetEncoding {
    pub fn new(num_classes: usize) -> TargetEncoding {
        TargetEncoding {
            num_classes,
            hot_value: 127,
            cold_value: 0,
        }
    }

    pub fn with_values(num_classes: usize, hot_value: i32, cold_value: i32) -> Result<TargetEncoding> {
        let eight_bit = -127..=127;
        if hot_value == cold_value || !eight_bit.contains(&hot_value) || !eight_bit.contains(&cold_value)
        {
            return Err(Error::InvalidArgument(format!(
                "target encoding hot {hot_value} / cold {cold_value} must be distinct values in [-127, 127]"
            )));
        }
        Ok(TargetEncoding {
            num_classes,
            hot_value,
            cold_value,
        })
    }

    /// 1×num_classes row with the hot value at `label`.
    pub fn one_hot(&self, label: usize) -> Result<IntMatrix> {
        if label >= self.num_classes {
            return Err(Error::LabelOutOfRange {
                label,
                num_classes: self.num_classes,
            });
        }
        let mut m = IntMatrix::zeros(1, self.num_classes)?;
        m.fill(self.cold_value);
        m.set(0, label, self.hot_value);
        Ok(m)
    }

    /// batch×num_classes matrix, one encoded row per label.
    pub fn one_hot_batch(&self, labels: &[usize]) -> Result<IntMatrix> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut m = IntMatrix::zeros(labels.len(), self.num_classes)?;
        m.fill(self.cold_value);
        for (i, &label) in labels.iter().enumerate() {
            if label >= self.num_classes {
                return Err(Error::LabelOutOfRange {
                    label,
                    num_classes: self.num_classes,
                });
            }
            m.set(i, label, self.hot_value);
        }
        Ok(m)
    }
}

/// Elementwise `ŷ − y`: the loss delta that seeds both backward passes.
pub fn l2_loss_delta(yhat: &IntMatrix, y: &IntMatrix) -> Result<IntMatrix> {
    yhat.sub(y)
}

/// `Σ(ŷᵢ − yᵢ)² / 2` accumulated in 64 bits; division truncates.
pub fn sse_loss(yhat: &IntMatrix, y: &IntMatrix) -> Result<i64> {
    if yhat.shape() != y.shape() {
        return Err(Error::ShapeMismatch(format!(
            "sse_loss {}x{} vs {}x{}",
            yhat.rows(),
            yhat.cols(),
            y.rows(),
            y.cols()
        )));
    }
    let sum: i64 = yhat
        .as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(&a, &b)| {
            let d = a as i64 - b as i64;
            d * d
        })
        .sum();
    Ok(sum / 2)
}
