//! Evaluation metrics: sentence error rate and word error rate, defined by
//! exact match against the reference.

use crate::error::{Error, Result};

/// Sentence error rate: fraction of predicted sentences that do not exactly
/// match their reference string.
pub fn ser(pred: &[impl AsRef<str>], reference: &[impl AsRef<str>]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::LengthMismatch(pred.len(), reference.len()));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let wrong = pred
        .iter()
        .zip(reference)
        .filter(|(p, r)| p.as_ref() != r.as_ref())
        .count();
    Ok(wrong as f64 / pred.len() as f64)
}

/// Word error rate over aligned per-word items: fraction of items where the
/// prediction is not exactly the reference.
pub fn wer<T: PartialEq>(pred: &[T], reference: &[T]) -> Result<f64> {
    if pred.len() != reference.len() {
        return Err(Error::LengthMismatch(pred.len(), reference.len()));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let wrong = pred
        .iter()
        .zip(reference)
        .filter(|(p, r)| p != r)
        .count();
    Ok(wrong as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ser_definition() {
        let same = ["a b", "c"];
        assert_eq!(ser(&same, &same).unwrap(), 0.0);
        assert_eq!(ser(&["x", "y"], &["a", "b"]).unwrap(), 1.0);
        assert_eq!(ser(&["a b", "c"], &["a b", "d"]).unwrap(), 0.5);
        assert_eq!(ser(&["a", "b", "c", "d"], &["a", "b", "c", "x"]).unwrap(), 0.25);
        assert!(ser(&["a"], &["a", "b"]).is_err());
    }

    #[test]
    fn wer_definition() {
        let gold = vec![vec![1, 2], vec![3]];
        assert_eq!(wer(&gold, &gold).unwrap(), 0.0);
        let pred = vec![vec![1, 2], vec![4]];
        assert_eq!(wer(&pred, &gold).unwrap(), 0.5);
        let ten: Vec<i32> = (0..10).collect();
        let mut two_wrong = ten.clone();
        two_wrong[3] = 99;
        two_wrong[7] = 99;
        assert_eq!(wer(&two_wrong, &ten).unwrap(), 0.2);
    }
}
