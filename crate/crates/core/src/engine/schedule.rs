use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::ConvexSet;

/// Where a block's sets come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Hatted,
    Truncated,
}

/// `count` consecutive steps projecting onto `b` then `a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub a: Arc<ConvexSet>,
    pub b: Arc<ConvexSet>,
    pub count: usize,
    /// Declared Hausdorff-type bounds of `a` and `b` against the limit pair.
    pub delta_a: f64,
    pub delta_b: f64,
    pub tag: Provenance,
    /// Truncation radius the `a` bound refers to, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl Block {
    pub fn original(a: Arc<ConvexSet>, b: Arc<ConvexSet>, count: usize) -> Self {
        Block {
            a,
            b,
            count,
            delta_a: 0.0,
            delta_b: 0.0,
            tag: Provenance::Original,
            radius: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSchedule {
    pub blocks: Vec<Block>,
}

impl PerturbationSchedule {
    pub fn new() -> Self {
        Self::default()
    }

    /// A single block repeating `(a, b)`.
    pub fn constant(a: Arc<ConvexSet>, b: Arc<ConvexSet>, count: usize) -> Self {
        PerturbationSchedule {
            blocks: vec![Block::original(a, b, count)],
        }
    }

    pub fn push(&mut self, block: Block) {
        if block.count > 0 {
            self.blocks.push(block);
        }
    }

    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|b| b.count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total_len() == 0
    }

    /// Per-step `(block id, A_n, B_n)` for `n = 1, 2, …`.
    pub fn expand(&self) -> impl Iterator<Item = (usize, &ConvexSet, &ConvexSet)> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(i, b)| std::iter::repeat((i, &*b.a, &*b.b)).take(b.count))
    }

    /// One-based index of the last step of each block.
    pub fn boundaries(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                *acc += b.count;
                Some(*acc)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::Vector;

    #[test]
    fn expansion_matches_counts() {
        let a = Arc::new(ConvexSet::singleton(Vector::zeros(2)));
        let b = Arc::new(ConvexSet::ball(Vector::zeros(2), 1.0).unwrap());
        let mut s = PerturbationSchedule::constant(a.clone(), b.clone(), 3);
        s.push(Block::original(b.clone(), a.clone(), 0));
        s.push(Block::original(b, a, 2));
        assert_eq!(s.blocks.len(), 2);
        assert_eq!(s.total_len(), 5);
        let ids: Vec<usize> = s.expand().map(|(i, _, _)| i).collect();
        assert_eq!(ids, vec![0, 0, 0, 1, 1]);
        assert_eq!(s.boundaries(), vec![3, 5]);
    }
}
