use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{opt_rational_str, rational_str, Rational};

/// Rank of `φ(p)` for a diagonal map built from `ρ_j` copies of partial maps
/// out of blocks of size `k_j` into a block of size `l`.
pub fn rank_propagate(
    multiplicities: &[u64],
    source_sizes: &[u64],
    target_size: u64,
    ranks: &[u64],
) -> Result<u64> {
    if multiplicities.len() != source_sizes.len() || ranks.len() != source_sizes.len() {
        return Err(Error::Contract(format!(
            "got {} multiplicities, {} sizes and {} ranks",
            multiplicities.len(),
            source_sizes.len(),
            ranks.len()
        )));
    }
    if let Some(j) = (0..ranks.len()).find(|&j| ranks[j] > source_sizes[j]) {
        return Err(Error::Contract(format!(
            "rank {} exceeds block size {} at index {j}",
            ranks[j], source_sizes[j]
        )));
    }
    let total: u128 = multiplicities
        .iter()
        .zip(source_sizes)
        .map(|(&r, &k)| r as u128 * k as u128)
        .sum();
    if total != target_size as u128 {
        return Err(Error::Contract(format!(
            "Σ k_j·ρ_j = {total} does not equal the target size {target_size}"
        )));
    }
    Ok(multiplicities.iter().zip(ranks).map(|(&r, &x)| r * x).sum())
}

/// The open window `(α·size, β·size)`; `beta = None` means `β = ∞`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankWindow {
    #[serde(with = "rational_str")]
    pub alpha: Rational,
    #[serde(with = "opt_rational_str", default)]
    pub beta: Option<Rational>,
}

impl RankWindow {
    pub fn contains(&self, rank: u64, size: u64) -> bool {
        let rank = Rational::from_integer(rank.into());
        let size = Rational::from_integer(size.into());
        &self.alpha * &size < rank && self.beta.as_ref().map_or(true, |b| rank < b * &size)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ratio;

    #[test]
    fn single_summand() {
        assert_eq!(rank_propagate(&[3], &[2], 6, &[1]).unwrap(), 3);
    }

    #[test]
    fn zero_ranks() {
        assert_eq!(rank_propagate(&[1, 2], &[2, 1], 4, &[0, 0]).unwrap(), 0);
    }

    #[test]
    fn window_example() {
        let out = rank_propagate(&[1, 1], &[2, 2], 4, &[1, 1]).unwrap();
        assert_eq!(out, 2);
        let w = RankWindow {
            alpha: ratio(3, 10),
            beta: Some(ratio(6, 10)),
        };
        assert!(w.contains(1, 2) && w.contains(out, 4));
    }

    #[test]
    fn size_mismatch() {
        assert!(matches!(
            rank_propagate(&[1, 1], &[2, 2], 5, &[1, 1]),
            Err(Error::Contract(_))
        ));
    }
}
