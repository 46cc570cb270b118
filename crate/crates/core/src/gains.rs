//! Discriminant gains and importance-aware feature selection.
//!
//! The pairwise gain of a dimension is the symmetric KL divergence between
//! the two class-conditional marginals, `(mu_a(n) - mu_b(n))^2 / C_nn`. Gains
//! add over dimensions, so the importance of a subset is the sum of its
//! per-dimension average gains and the best subset of a given size is always
//! a top-k set.

use serde::{Deserialize, Serialize};

use crate::statmodel::GmModel;

/// `sum_{n in subset} (mu_a(n) - mu_b(n))^2 / C_nn`.
pub fn pairwise_gain(model: &GmModel, a: usize, b: usize, subset: &[usize]) -> f64 {
    let (ma, mb, var) = (model.centroid(a), model.centroid(b), model.variances());
    subset.iter().map(|&n| (ma[n] - mb[n]).powi(2) / var[n]).sum()
}

/// Mean of [`pairwise_gain`] over all `L(L-1)/2` class pairs.
pub fn average_gain(model: &GmModel, subset: &[usize]) -> f64 {
    let l = model.classes();
    let mut total = 0.0;
    for a in 0..l {
        for b in a + 1..l {
            total += pairwise_gain(model, a, b, subset);
        }
    }
    total * 2.0 / (l * (l - 1)) as f64
}

/// Per-dimension average gains and the dimensions sorted by importance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainTable {
    per_dim: Vec<f64>,
    order: Vec<usize>,
}

impl GainTable {
    pub fn new(model: &GmModel) -> Self {
        let per_dim = (0..model.dim()).map(|n| average_gain(model, &[n])).collect();
        Self::from_gains(per_dim)
    }

    /// Table over explicit gains. Order is descending gain, lowest index
    /// first among equal gains.
    pub fn from_gains(per_dim: Vec<f64>) -> Self {
        assert!(
            per_dim.iter().all(|g| *g >= 0.0),
            "discriminant gains must be non-negative"
        );
        let mut order: Vec<usize> = (0..per_dim.len()).collect();
        order.sort_by(|&i, &j| per_dim[j].total_cmp(&per_dim[i]).then(i.cmp(&j)));
        GainTable { per_dim, order }
    }

    pub fn dim(&self) -> usize {
        self.per_dim.len()
    }

    pub fn gain(&self, n: usize) -> f64 {
        self.per_dim[n]
    }

    pub fn per_dim(&self) -> &[f64] {
        &self.per_dim
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Unreceived dimensions, most important first.
    pub fn unreceived<'a>(&'a self, received: &'a [bool]) -> impl Iterator<Item = usize> + 'a {
        self.order.iter().copied().filter(move |&n| !received[n])
    }

    pub fn subset_gain(&self, subset: &[usize]) -> f64 {
        subset.iter().map(|&n| self.per_dim[n]).sum()
    }
}

/// Per-slot feature subsets chosen by [`select`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub subsets: Vec<Vec<usize>>,
}

impl SelectionPlan {
    pub fn flattened(&self) -> Vec<usize> {
        self.subsets.iter().flatten().copied().collect()
    }
}

/// Greedy importance-aware selection over a sequence of per-slot rates.
///
/// Slot `k` takes the `min(remaining, rates[k])` most important dimensions
/// that are neither received nor already planned for an earlier slot.
pub fn select(table: &GainTable, received: &[bool], rates: &[usize]) -> SelectionPlan {
    assert_eq!(received.len(), table.dim(), "received mask length mismatch");
    let mut admissible = table.unreceived(received);
    let subsets = rates
        .iter()
        .map(|&rate| admissible.by_ref().take(rate).collect())
        .collect();
    SelectionPlan { subsets }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(dim: usize, on: &[usize]) -> Vec<bool> {
        let mut m = vec![false; dim];
        for &n in on {
            m[n] = true;
        }
        m
    }

    #[test]
    fn pairwise_hand_sum() {
        let m = GmModel::new(vec![vec![2.0, 1.0, 7.0], vec![0.0, 0.0, 7.0]], vec![1.0; 3]).unwrap();
        assert_eq!(pairwise_gain(&m, 0, 1, &[]), 0.0);
        assert_eq!(pairwise_gain(&m, 0, 1, &[0, 1]), 5.0);
        assert_eq!(pairwise_gain(&m, 1, 0, &[0, 1]), 5.0);
        assert_eq!(pairwise_gain(&m, 0, 1, &[2]), 0.0);
        assert_eq!(average_gain(&m, &[0, 1]), 5.0);
    }

    #[test]
    fn equilateral_three_class_average() {
        // triangle with side sqrt(2) in dims {0, 1}: every pair has gain 2 there
        let (r2, r6) = (2f64.sqrt(), 6f64.sqrt());
        let m = GmModel::new(
            vec![vec![0.0, 0.0], vec![r2, 0.0], vec![r2 / 2.0, r6 / 2.0]],
            vec![1.0; 2],
        )
        .unwrap();
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert!((pairwise_gain(&m, a, b, &[0, 1]) - 2.0).abs() < 1e-12);
        }
        assert!((average_gain(&m, &[0, 1]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn select_top_two_per_slot() {
        let t = GainTable::from_gains(vec![5.0, 3.0, 9.0, 1.0]);
        let plan = select(&t, &mask(4, &[]), &[2, 2]);
        assert_eq!(plan.subsets, vec![vec![2, 0], vec![1, 3]]);
    }

    #[test]
    fn select_exhausted() {
        let t = GainTable::from_gains(vec![5.0, 3.0, 9.0, 1.0]);
        let plan = select(&t, &mask(4, &[0, 1, 2, 3]), &[2, 2]);
        assert!(plan.subsets.iter().all(Vec::is_empty));
    }

    #[test]
    fn select_ties_lowest_index_first() {
        let t = GainTable::from_gains(vec![1.0; 6]);
        let plan = select(&t, &mask(6, &[]), &[2, 2, 2]);
        assert_eq!(plan.subsets, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
    }

    #[test]
    fn select_skips_received_and_truncates() {
        let t = GainTable::from_gains(vec![5.0, 3.0, 9.0, 1.0]);
        let plan = select(&t, &mask(4, &[2]), &[2, 5, 1]);
        assert_eq!(plan.subsets, vec![vec![0, 1], vec![3], vec![]]);
    }
}
