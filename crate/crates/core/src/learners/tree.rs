use serde::{Deserialize, Serialize};

use crate::types::Dataset;

/// One node of a flat regression tree. A node is a leaf when both child
/// indices are zero (the root can never be a child). Internal nodes send
/// `x[feature] <= threshold` to `left`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
    pub leaf_weight: f64,
}

impl Node {
    pub fn leaf(weight: f64) -> Node {
        Node { feature: 0, threshold: 0.0, left: 0, right: 0, leaf_weight: weight }
    }

    pub fn split(feature: usize, threshold: f64, left: usize, right: usize) -> Node {
        Node { feature, threshold, left, right, leaf_weight: 0.0 }
    }

    pub fn is_leaf(&self) -> bool {
        self.left == 0 && self.right == 0
    }
}

/// Regression tree over one class's boosting scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
    /// Rows used to grow the tree.
    pub n_samples: usize,
}

impl Tree {
    pub fn single_leaf(weight: f64, n_samples: usize) -> Tree {
        Tree { nodes: vec![Node::leaf(weight)], n_samples }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        loop {
            let node = &self.nodes[id];
            if node.is_leaf() {
                return node.leaf_weight;
            }
            id = if x[node.feature] <= node.threshold { node.left } else { node.right };
        }
    }

    /// Index of the leaf `x` lands in.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut id = 0;
        while !self.nodes[id].is_leaf() {
            let node = &self.nodes[id];
            id = if x[node.feature] <= node.threshold { node.left } else { node.right };
        }
        id
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        for n in self.nodes.iter_mut().filter(|n| n.is_leaf()) {
            n.leaf_weight *= factor;
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Node ids grouped by depth, root first.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let mut levels = vec![vec![0]];
        loop {
            let next: Vec<usize> = levels
                .last()
                .unwrap()
                .iter()
                .filter(|&&id| !self.nodes[id].is_leaf())
                .flat_map(|&id| [self.nodes[id].left, self.nodes[id].right])
                .collect();
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.levels().len() - 1
    }

    /// Whether every internal node at a given depth uses the same split.
    pub fn shares_splits_per_level(&self) -> bool {
        self.levels().iter().all(|level| {
            let mut splits = level
                .iter()
                .map(|&id| &self.nodes[id])
                .filter(|n| !n.is_leaf())
                .map(|n| (n.feature, n.threshold.to_bits()));
            match splits.next() {
                None => true,
                Some(first) => splits.all(|s| s == first),
            }
        })
    }

    /// Checks child links: every non-root node reachable exactly once.
    pub fn is_well_formed(&self, n_features: usize) -> bool {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if id >= self.nodes.len() || seen[id] {
                return false;
            }
            seen[id] = true;
            let n = &self.nodes[id];
            if !n.is_leaf() {
                if n.left == 0 || n.right == 0 || n.feature >= n_features || !n.threshold.is_finite() {
                    return false;
                }
                stack.push(n.left);
                stack.push(n.right);
            } else if !n.leaf_weight.is_finite() {
                return false;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Column-major copy of a feature matrix with per-feature row orderings.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    n_rows: usize,
    columns: Vec<Vec<f64>>,
    sorted: Vec<Vec<u32>>,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>], n_features: usize) -> FeatureMatrix {
        let n_rows = rows.len();
        let columns: Vec<Vec<f64>> = (0..n_features).map(|f| rows.iter().map(|r| r[f]).collect()).collect();
        let sorted = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n_rows as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                idx
            })
            .collect();
        FeatureMatrix { n_rows, columns, sorted }
    }

    pub fn from_dataset(d: &Dataset) -> FeatureMatrix {
        FeatureMatrix::from_rows(&d.features, d.n_features())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.columns[feature][row]
    }

    pub(crate) fn column(&self, feature: usize) -> &[f64] {
        &self.columns[feature]
    }

    /// Row ids ordered by the value of `feature` (ties by row id).
    pub(crate) fn sorted_rows(&self, feature: usize) -> &[u32] {
        &self.sorted[feature]
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[row]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> Tree {
        Tree { nodes: vec![Node::split(1, 0.5, 1, 2), Node::leaf(-1.0), Node::leaf(2.0)], n_samples: 4 }
    }

    #[test]
    fn routing_uses_less_or_equal() {
        let t = stump();
        assert_eq!(t.predict(&[9.0, 0.5]), -1.0);
        assert_eq!(t.predict(&[9.0, 0.6]), 2.0);
        assert_eq!(t.leaf_index(&[0.0, 1.0]), 2);
    }

    #[test]
    fn shape_queries() {
        let t = stump();
        assert_eq!((t.depth(), t.n_leaves()), (1, 2));
        assert!(t.shares_splits_per_level());
        assert!(t.is_well_formed(2));
        assert!(!t.is_well_formed(1));
        assert_eq!(Tree::single_leaf(0.0, 3).depth(), 0);
    }

    #[test]
    fn detects_unshared_level() {
        let t = Tree {
            nodes: vec![
                Node::split(0, 0.0, 1, 2),
                Node::split(1, 1.0, 3, 4),
                Node::split(1, 2.0, 5, 6),
                Node::leaf(0.0),
                Node::leaf(0.0),
                Node::leaf(0.0),
                Node::leaf(0.0),
            ],
            n_samples: 0,
        };
        assert!(!t.shares_splits_per_level());
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn sorted_rows_break_ties_by_id() {
        let m = FeatureMatrix::from_rows(&[vec![2.0], vec![1.0], vec![2.0], vec![0.0]], 1);
        assert_eq!(m.sorted_rows(0), &[3, 1, 0, 2]);
    }
}
