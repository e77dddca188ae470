use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::maskcore::BinaryMask;

/// Cohen's kappa between two paired label sequences. When chance agreement
/// is 1 (a single category throughout) the result is defined as 1.
pub fn cohen_kappa<T: Ord>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "kappa needs paired labels, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("kappa of an empty label sequence".into()));
    }
    let n = a.len() as f64;
    let mut marginals: BTreeMap<&T, (u64, u64)> = BTreeMap::new();
    let mut agree = 0u64;
    for (x, y) in a.iter().zip(b) {
        marginals.entry(x).or_default().0 += 1;
        marginals.entry(y).or_default().1 += 1;
        if x == y {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = marginals
        .values()
        .map(|&(ca, cb)| (ca as f64 / n) * (cb as f64 / n))
        .sum();
    if p_e >= 1.0 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

/// Kappa over per-pixel labels of two masks of the same frame.
pub fn pixel_kappa(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    a.geometry().ensure_same(&b.geometry())?;
    cohen_kappa(a.bits(), b.bits())
}

/// Kappa over per-frame presence flags.
pub fn frame_kappa(a: &[bool], b: &[bool]) -> Result<f64> {
    cohen_kappa(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_sequences() {
        assert_eq!(cohen_kappa(&[1, 2, 3, 1], &[1, 2, 3, 1]).unwrap(), 1.0);
    }

    #[test]
    fn chance_level_agreement() {
        assert_eq!(cohen_kappa(&[1, 1, 0, 0], &[1, 0, 1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn single_category_is_one() {
        assert_eq!(frame_kappa(&[true; 4], &[true; 4]).unwrap(), 1.0);
    }

    #[test]
    fn empty_and_unpaired_are_errors() {
        assert!(cohen_kappa::<u8>(&[], &[]).is_err());
        assert!(cohen_kappa(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn perfect_disagreement() {
        assert_eq!(cohen_kappa(&[0, 1, 0, 1], &[1, 0, 1, 0]).unwrap(), -1.0);
    }

    proptest! {
        #[test]
        fn relabeling_invariant(pairs in prop::collection::vec((0u8..4, 0u8..4), 1..40), shift in 1u8..4) {
            let (a, b): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
            let relabel = |v: &[u8]| v.iter().map(|x| (x + shift) % 4).collect::<Vec<_>>();
            let k1 = cohen_kappa(&a, &b).unwrap();
            let k2 = cohen_kappa(&relabel(&a), &relabel(&b)).unwrap();
            prop_assert!((k1 - k2).abs() < 1e-12);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k1));
        }
    }
}
