use rand::seq::SliceRandom;

use super::StatsError;
use crate::rng::SimRng;

/// Shuffles `0..n` into `k` folds whose sizes differ by at most one; the
/// first `n % k` folds get the extra item. Each fold is sorted.
pub fn kfold_split(n: usize, k: usize, rng: &mut SimRng) -> Result<Vec<Vec<usize>>, StatsError> {
    if k <= 1 {
        return Err(StatsError::Invalid(format!("k-fold needs k ≥ 2, got {k}")));
    }
    if n < k {
        return Err(StatsError::TooFewPoints { needed: k, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut out = Vec::with_capacity(k);
    let mut rest = idx.as_slice();
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        let (head, tail) = rest.split_at(size);
        let mut fold = head.to_vec();
        fold.sort_unstable();
        out.push(fold);
        rest = tail;
    }
    Ok(out)
}
