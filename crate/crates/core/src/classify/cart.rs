//! CART classification tree grown best-first on Gini impurity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Impurity decreases at or below this are treated as no improvement.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartParams {
    pub max_splits: usize,
    pub min_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            max_splits: 100,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartModel {
    /// `nodes[0]` is the root.
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub n_classes: usize,
    pub split_count: usize,
}

impl CartModel {
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { class, .. } => return Ok(*class),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes.first()? {
            Node::Split {
                feature, threshold, ..
            } => Some((*feature, *threshold)),
            Node::Leaf { .. } => None,
        }
    }
}

/// `1 - sum p_k^2`.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Size-weighted impurity `n * gini`.
fn weighted_gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    n as f64 * gini(counts)
}

/// Majority class; ties go to the lower class index.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Decrease of size-weighted Gini impurity.
    pub decrease: f64,
}

/// Best split of the rows in `idx`: thresholds are midpoints between
/// consecutive distinct values; ties go to the lowest feature, then the lowest
/// threshold.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[usize],
    idx: &[usize],
    n_classes: usize,
    min_leaf: usize,
) -> Option<SplitCandidate> {
    let n_features = x.first().map_or(0, Vec::len);
    let mut total = vec![0; n_classes];
    for &i in idx {
        total[y[i]] += 1;
    }
    let parent = weighted_gini(&total);
    let mut best: Option<SplitCandidate> = None;
    let mut order = idx.to_vec();
    for feature in 0..n_features {
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
        let mut left = vec![0; n_classes];
        let mut right = total.clone();
        for pos in 0..order.len() - 1 {
            let row = order[pos];
            left[y[row]] += 1;
            right[y[row]] -= 1;
            let v = x[row][feature];
            let next = x[order[pos + 1]][feature];
            if next <= v {
                continue;
            }
            let n_left = pos + 1;
            if n_left < min_leaf || order.len() - n_left < min_leaf {
                continue;
            }
            let decrease = parent - weighted_gini(&left) - weighted_gini(&right);
            if decrease <= MIN_DECREASE {
                continue;
            }
            if best.is_none_or(|b| decrease > b.decrease + MIN_DECREASE) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: 0.5 * (v + next),
                    decrease,
                });
            }
        }
    }
    best
}

struct Pending {
    node: usize,
    rows: Vec<usize>,
    split: SplitCandidate,
}

pub fn train_cart(x: &[Vec<f64>], y: &[usize], params: &CartParams) -> Result<CartModel> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if y.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let n_features = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != n_features) {
        return Err(Error::DimensionMismatch {
            expected: n_features,
            found: r.len(),
        });
    }
    let n_classes = y.iter().max().map_or(1, |m| m + 1).max(2);
    let min_leaf = params.min_leaf.max(1);

    let leaf = |rows: &[usize]| {
        let mut counts = vec![0; n_classes];
        for &i in rows {
            counts[y[i]] += 1;
        }
        Node::Leaf {
            class: majority(&counts),
            counts,
        }
    };

    let all: Vec<usize> = (0..x.len()).collect();
    let mut nodes = vec![leaf(&all)];
    let mut pending: Vec<Pending> = Vec::new();
    if let Some(split) = best_split(x, y, &all, n_classes, min_leaf) {
        pending.push(Pending {
            node: 0,
            rows: all,
            split,
        });
    }

    let mut split_count = 0;
    while split_count < params.max_splits && !pending.is_empty() {
        // Largest decrease wins; on ties the earliest-created leaf.
        let mut pick = 0;
        for (k, p) in pending.iter().enumerate() {
            let b = &pending[pick];
            if p.split.decrease > b.split.decrease + MIN_DECREASE
                || ((p.split.decrease - b.split.decrease).abs() <= MIN_DECREASE && p.node < b.node)
            {
                pick = k;
            }
        }
        let Pending { node, rows, split } = pending.swap_remove(pick);
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| x[i][split.feature] <= split.threshold);
        let left = nodes.len();
        nodes.push(leaf(&l_rows));
        let right = nodes.len();
        nodes.push(leaf(&r_rows));
        nodes[node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        split_count += 1;
        for (child, child_rows) in [(left, l_rows), (right, r_rows)] {
            if let Some(s) = best_split(x, y, &child_rows, n_classes, min_leaf) {
                pending.push(Pending {
                    node: child,
                    rows: child_rows,
                    split: s,
                });
            }
        }
    }

    Ok(CartModel {
        nodes,
        n_features,
        n_classes,
        split_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&a| vec![a]).collect()
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[2, 2]), 0.5);
        assert_eq!(gini(&[4, 0]), 0.0);
    }

    #[test]
    fn one_split_at_midpoint() {
        let x = col(&[0.0, 1.0, 10.0, 11.0]);
        let m = train_cart(&x, &[0, 0, 1, 1], &CartParams::default()).unwrap();
        assert_eq!(m.split_count, 1);
        assert_eq!(m.root_split(), Some((0, 5.5)));
        assert_eq!(m.predict(&[0.0]).unwrap(), 0);
        assert_eq!(m.predict(&[12.0]).unwrap(), 1);
        // at the threshold goes left
        assert_eq!(m.predict(&[5.5]).unwrap(), 0);
        assert!(matches!(m.predict(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn identical_rows_give_majority_leaf() {
        let x = vec![vec![1.0, 2.0]; 5];
        let m = train_cart(&x, &[1, 0, 1, 0, 1], &CartParams::default()).unwrap();
        assert_eq!(m.split_count, 0);
        assert_eq!(m.predict(&[9.0, 9.0]).unwrap(), 1);
        let m = train_cart(&x[..4], &[1, 0, 1, 0], &CartParams::default()).unwrap();
        assert_eq!(m.predict(&[0.0, 0.0]).unwrap(), 0);
    }

    #[test]
    fn split_cap_is_respected() {
        let x = col(&(0..64).map(|i| i as f64).collect::<Vec<_>>());
        let y: Vec<usize> = (0..64).map(|i| i % 2).collect();
        for cap in [0, 1, 5, 20] {
            let m = train_cart(&x, &y, &CartParams { max_splits: cap, min_leaf: 1 }).unwrap();
            assert!(m.split_count <= cap);
        }
    }

    #[test]
    fn training_error_non_increasing_in_cap() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![((i * 37) % 17) as f64, ((i * 11) % 7) as f64])
            .collect();
        let y: Vec<usize> = (0..40).map(|i| ((i * 13) % 5 > 1) as usize).collect();
        let mut prev = usize::MAX;
        for cap in 0..30 {
            let m = train_cart(&x, &y, &CartParams { max_splits: cap, min_leaf: 1 }).unwrap();
            let errors = x
                .iter()
                .zip(&y)
                .filter(|(xi, &yi)| m.predict(xi).unwrap() != yi)
                .count();
            assert!(errors <= prev);
            prev = errors;
        }
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let x = col(&[0.0, 1.0, 2.0, 3.0]);
        let m = train_cart(&x, &[0, 1, 1, 1], &CartParams { max_splits: 100, min_leaf: 3 }).unwrap();
        assert_eq!(m.split_count, 0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            train_cart(&[], &[], &CartParams::default()),
            Err(Error::EmptyInput)
        ));
    }
}
