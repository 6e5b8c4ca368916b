//! Tree growth strategies: level-wise, best-first leaf-wise, and oblivious.
//!
//! All growers return unscaled leaf weights `-G / (H + λ)`; the booster
//! applies the learning rate afterwards.

use std::collections::VecDeque;

use super::split::{leaf_weight, scan_sorted, split_gain, GradientPair, SplitCandidate};
use super::tree::{FeatureMatrix, Node, Tree};

/// Limits for the greedy growers.
#[derive(Debug, Clone, Copy)]
pub struct GrowParams {
    pub max_depth: usize,
    /// Upper bound on the number of leaves; `usize::MAX` for level-wise growth.
    pub max_leaves: usize,
    pub lambda: f64,
    pub min_child_hessian: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrowthPolicy {
    /// Expand every splittable node, one depth level at a time.
    LevelWise,
    /// Always expand the leaf with the largest gain.
    BestFirst,
}

struct Frontier {
    node: usize,
    depth: usize,
    sum: GradientPair,
    // rows of this node ordered by each feature
    sorted: Vec<Vec<u32>>,
    best: Option<(usize, SplitCandidate)>,
}

fn best_split(
    matrix: &FeatureMatrix,
    pairs: &[GradientPair],
    sorted: &[Vec<u32>],
    sum: GradientPair,
    params: &GrowParams,
) -> Option<(usize, SplitCandidate)> {
    let mut best: Option<(usize, SplitCandidate)> = None;
    for (f, rows) in sorted.iter().enumerate() {
        let col = matrix.column(f);
        let items = rows.iter().map(|&i| (col[i as usize], pairs[i as usize]));
        if let Some(c) = scan_sorted(items, sum, params.lambda, params.min_child_hessian) {
            if best.is_none_or(|(_, b)| c.gain > b.gain) {
                best = Some((f, c));
            }
        }
    }
    best
}

fn make_frontier(
    matrix: &FeatureMatrix,
    pairs: &[GradientPair],
    node: usize,
    depth: usize,
    sorted: Vec<Vec<u32>>,
    params: &GrowParams,
) -> Frontier {
    let sum: GradientPair =
        sorted.first().map(|rows| rows.iter().map(|&i| pairs[i as usize]).sum()).unwrap_or_default();
    let best = if depth < params.max_depth && sorted.first().map_or(0, Vec::len) >= 2 {
        best_split(matrix, pairs, &sorted, sum, params)
    } else {
        None
    };
    Frontier { node, depth, sum, sorted, best }
}

/// Grows one tree over `rows` with exact greedy split search.
///
/// `pairs` is indexed by row id and must already carry any sample weights.
pub fn grow_greedy_tree(
    matrix: &FeatureMatrix,
    rows: &[usize],
    pairs: &[GradientPair],
    params: &GrowParams,
    policy: GrowthPolicy,
) -> Tree {
    let mut member = vec![false; matrix.n_rows()];
    for &r in rows {
        member[r] = true;
    }
    let root_sorted: Vec<Vec<u32>> = (0..matrix.n_features())
        .map(|f| matrix.sorted_rows(f).iter().copied().filter(|&i| member[i as usize]).collect())
        .collect();

    let mut nodes = vec![Node::leaf(0.0)];
    let mut pending: VecDeque<Frontier> = VecDeque::new();
    pending.push_back(make_frontier(matrix, pairs, 0, 0, root_sorted, params));
    let mut finished: Vec<Frontier> = Vec::new();
    let mut n_leaves = 1usize;

    loop {
        let pick = match policy {
            GrowthPolicy::LevelWise => pending.pop_front(),
            GrowthPolicy::BestFirst => {
                // largest gain, earliest node on ties
                let mut best_pos: Option<usize> = None;
                for (pos, fr) in pending.iter().enumerate() {
                    if let Some((_, c)) = fr.best {
                        let better = match best_pos {
                            None => true,
                            Some(bp) => {
                                let (_, bc) = pending[bp].best.unwrap();
                                c.gain > bc.gain || (c.gain == bc.gain && fr.node < pending[bp].node)
                            }
                        };
                        if better {
                            best_pos = Some(pos);
                        }
                    }
                }
                match best_pos {
                    Some(pos) if n_leaves < params.max_leaves => pending.remove(pos),
                    _ => None,
                }
            }
        };
        let Some(fr) = pick else { break };
        let Some((feature, split)) = fr.best.filter(|_| n_leaves < params.max_leaves) else {
            finished.push(fr);
            continue;
        };

        let col = matrix.column(feature);
        let (left_sorted, right_sorted): (Vec<Vec<u32>>, Vec<Vec<u32>>) = fr
            .sorted
            .into_iter()
            .map(|rows| rows.into_iter().partition(|&i| col[i as usize] <= split.threshold))
            .unzip();

        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(Node::leaf(0.0));
        nodes.push(Node::leaf(0.0));
        nodes[fr.node] = Node::split(feature, split.threshold, left_id, right_id);
        n_leaves += 1;

        pending.push_back(make_frontier(matrix, pairs, left_id, fr.depth + 1, left_sorted, params));
        pending.push_back(make_frontier(matrix, pairs, right_id, fr.depth + 1, right_sorted, params));
    }

    for fr in finished.into_iter().chain(pending) {
        nodes[fr.node] = Node::leaf(leaf_weight(fr.sum, params.lambda));
    }
    Tree { nodes, n_samples: rows.len() }
}

/// Grows a symmetric tree: each depth level applies one (feature, threshold)
/// to every current leaf, chosen to maximise the summed gain over the leaves.
/// Stops early when no shared split has positive total gain.
pub fn grow_oblivious_tree(matrix: &FeatureMatrix, pairs: &[GradientPair], max_depth: usize, lambda: f64) -> Tree {
    let n = matrix.n_rows();
    let mut leaf_of = vec![0usize; n];
    let mut levels: Vec<(usize, f64)> = Vec::new();

    for depth in 0..max_depth {
        let n_leaves = 1usize << depth;
        let mut totals = vec![GradientPair::default(); n_leaves];
        for (i, &l) in leaf_of.iter().enumerate() {
            totals[l] += pairs[i];
        }

        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..matrix.n_features() {
            let col = matrix.column(f);
            let mut left = vec![GradientPair::default(); n_leaves];
            let mut terms = vec![0.0f64; n_leaves];
            let mut total_gain = 0.0f64;
            let mut prev: Option<f64> = None;
            for &i in matrix.sorted_rows(f) {
                let i = i as usize;
                let v = col[i];
                if let Some(p) = prev {
                    if v > p && total_gain > best.map_or(0.0, |b| b.2) {
                        best = Some((f, super::split::midpoint(p, v), total_gain));
                    }
                }
                let l = leaf_of[i];
                left[l] += pairs[i];
                let term = split_gain(left[l], totals[l] - left[l], lambda);
                total_gain += term - terms[l];
                terms[l] = term;
                prev = Some(v);
            }
        }

        let Some((feature, threshold, _)) = best else { break };
        let col = matrix.column(feature);
        for (i, l) in leaf_of.iter_mut().enumerate() {
            *l = 2 * *l + usize::from(col[i] > threshold);
        }
        levels.push((feature, threshold));
    }

    let depth = levels.len();
    let mut sums = vec![GradientPair::default(); 1 << depth];
    for (i, &l) in leaf_of.iter().enumerate() {
        sums[l] += pairs[i];
    }
    // heap layout: children of k are 2k+1, 2k+2; leaves occupy the last level
    let mut nodes = Vec::with_capacity((1 << (depth + 1)) - 1);
    for (d, &(feature, threshold)) in levels.iter().enumerate() {
        for k in (1 << d) - 1..(1 << (d + 1)) - 1 {
            nodes.push(Node::split(feature, threshold, 2 * k + 1, 2 * k + 2));
        }
    }
    nodes.extend(sums.iter().map(|&s| Node::leaf(leaf_weight(s, lambda))));
    Tree { nodes, n_samples: n }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(max_depth: usize, max_leaves: usize) -> GrowParams {
        GrowParams { max_depth, max_leaves, lambda: 1.0, min_child_hessian: 0.0 }
    }

    fn softmax_pairs(labels: &[bool]) -> Vec<GradientPair> {
        labels.iter().map(|&y| GradientPair::softmax(0.5, y)).collect()
    }

    #[test]
    fn one_split_tree_has_newton_leaf_weights() {
        let m = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], 1);
        let pairs = softmax_pairs(&[true, true, false, false]);
        let t = grow_greedy_tree(&m, &[0, 1, 2, 3], &pairs, &params(1, 8), GrowthPolicy::LevelWise);
        assert_eq!(t.nodes[0], Node::split(0, 1.5, 1, 2));
        // left: G = -1, H = 0.5  ->  w = 1 / 1.5
        assert!((t.nodes[1].leaf_weight - 1.0 / 1.5).abs() < 1e-12);
        assert!((t.nodes[2].leaf_weight + 1.0 / 1.5).abs() < 1e-12);
    }

    #[test]
    fn level_wise_respects_depth() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let labels: Vec<bool> = (0..64).map(|i| (i / 3) % 2 == 0).collect();
        let m = FeatureMatrix::from_rows(&rows, 2);
        let all: Vec<usize> = (0..64).collect();
        let t = grow_greedy_tree(&m, &all, &softmax_pairs(&labels), &params(3, usize::MAX), GrowthPolicy::LevelWise);
        assert!(t.depth() <= 3);
        assert!(t.n_leaves() > 2);
        assert!(t.is_well_formed(2));
    }

    #[test]
    fn best_first_respects_leaf_budget() {
        let rows: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let labels: Vec<bool> = (0..64).map(|i| (i / 2) % 2 == 0).collect();
        let m = FeatureMatrix::from_rows(&rows, 1);
        let all: Vec<usize> = (0..64).collect();
        for budget in 1..8 {
            let t = grow_greedy_tree(&m, &all, &softmax_pairs(&labels), &params(20, budget), GrowthPolicy::BestFirst);
            assert!(t.n_leaves() <= budget, "{} > {budget}", t.n_leaves());
            assert!(t.is_well_formed(1));
        }
    }

    #[test]
    fn subset_rows_only() {
        let m = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]], 1);
        let pairs = softmax_pairs(&[true, false, true, false]);
        let t = grow_greedy_tree(&m, &[0, 3], &pairs, &params(2, 8), GrowthPolicy::LevelWise);
        assert_eq!(t.n_samples, 2);
        assert_eq!(t.nodes[0].threshold, 1.5);
    }

    #[test]
    fn oblivious_levels_share_split() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 10) as f64, (i / 10) as f64]).collect();
        let labels: Vec<bool> = (0..40).map(|i| (i % 10 < 5) ^ (i / 10 < 2)).collect();
        let m = FeatureMatrix::from_rows(&rows, 2);
        let t = grow_oblivious_tree(&m, &softmax_pairs(&labels), 2, 1.0);
        assert_eq!(t.depth(), 2);
        assert!(t.shares_splits_per_level());
        assert_eq!(t.n_leaves(), 4);
        assert_eq!((t.nodes[1].feature, t.nodes[1].threshold), (t.nodes[2].feature, t.nodes[2].threshold));
    }

    #[test]
    fn oblivious_threshold_falls_in_gap() {
        let m = FeatureMatrix::from_rows(&[vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]], 1);
        let pairs = softmax_pairs(&[true, true, false, false]);
        let t = grow_oblivious_tree(&m, &pairs, 1, 1.0);
        // exhaustive scan of the three candidate thresholds
        let candidates = [-1.5, 0.0, 1.5];
        let gain = |thr: f64| {
            let (l, r): (Vec<_>, Vec<_>) = (0..4).partition(|&i| m.value(i, 0) <= thr);
            let s = |ix: &Vec<usize>| ix.iter().map(|&i| pairs[i]).sum::<GradientPair>();
            split_gain(s(&l), s(&r), 1.0)
        };
        let best =
            candidates.iter().copied().fold(f64::NAN, |b, c| if b.is_nan() || gain(c) > gain(b) { c } else { b });
        assert_eq!(best, 0.0);
        assert!(t.nodes[0].threshold > -1.0 && t.nodes[0].threshold < 1.0);
        assert_eq!(t.nodes[0].threshold, best);
    }

    #[test]
    fn zero_gradient_gives_single_zero_leaf() {
        let m = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], 1);
        let pairs = vec![GradientPair::new(0.0, 0.25); 3];
        let t = grow_oblivious_tree(&m, &pairs, 4, 1.0);
        assert_eq!(t.nodes, vec![Node::leaf(0.0)]);
    }
}
