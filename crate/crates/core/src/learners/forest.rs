//! Probability forest for binary labels.
//!
//! Each tree is grown on a subsample drawn without replacement, splitting on
//! the Gini impurity over `mtry` randomly chosen features per node; leaves
//! store the label frequency and the forest averages them.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;

use crate::features::Features;

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Nodes smaller than this are not split.
    pub min_node: usize,
    /// Features tried per split; `None` means `ceil(sqrt(q))`.
    pub mtry: Option<usize>,
    pub subsample: f64,
    pub max_depth: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 500,
            min_node: 10,
            mtry: None,
            subsample: 0.632,
            max_depth: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(p) => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityForest {
    trees: Vec<Tree>,
}

struct Grower<'a> {
    x: &'a Features,
    y: &'a [f64],
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
    order: Vec<(f64, f64)>,
}

impl Grower<'_> {
    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let n = idx.len();
        let pos: f64 = idx.iter().map(|&i| self.y[i]).sum();
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf(pos / n as f64));
        if n < self.params.min_node
            || depth >= self.params.max_depth
            || pos == 0.0
            || pos == n as f64
        {
            return at;
        }
        let q = self.x.cols();
        let mut best: Option<(f64, usize, f64)> = None;
        // impurity proxy: sum over children of pos^2 / size, maximised
        let parent = pos * pos / n as f64;
        for feature in sample(rng, q, self.mtry.min(q)).into_iter() {
            self.order.clear();
            self.order
                .extend(idx.iter().map(|&i| (self.x.get(i, feature), self.y[i])));
            self.order.sort_unstable_by(|a, b| {
                a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal)
            });
            let mut left_pos = 0.0;
            for k in 0..n - 1 {
                left_pos += self.order[k].1;
                if self.order[k].0 == self.order[k + 1].0 {
                    continue;
                }
                let nl = (k + 1) as f64;
                let nr = (n - k - 1) as f64;
                let right_pos = pos - left_pos;
                let score = left_pos * left_pos / nl + right_pos * right_pos / nr;
                if score > parent + 1e-12 && best.is_none_or(|b| score > b.0) {
                    let threshold = 0.5 * (self.order[k].0 + self.order[k + 1].0);
                    best = Some((score, feature, threshold));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return at;
        };
        let mut split = 0;
        for k in 0..n {
            if self.x.get(idx[k], feature) <= threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }
}

impl ProbabilityForest {
    pub fn fit(x: &Features, y: &[f64], params: &ForestParams, rng: &mut ChaCha8Rng) -> Self {
        let n = x.rows();
        let q = x.cols().max(1);
        let mtry = params
            .mtry
            .unwrap_or_else(|| (q as f64).sqrt().ceil() as usize)
            .clamp(1, q);
        let m = ((n as f64) * params.subsample).round().clamp(1.0, n as f64) as usize;
        let mut trees = Vec::with_capacity(params.n_trees);
        let mut grower = Grower {
            x,
            y,
            params,
            mtry,
            nodes: Vec::new(),
            order: Vec::with_capacity(m),
        };
        for _ in 0..params.n_trees {
            let mut idx: Vec<usize> = sample(rng, n, m).into_vec();
            grower.nodes = Vec::new();
            grower.grow(&mut idx, 0, rng);
            trees.push(Tree {
                nodes: std::mem::take(&mut grower.nodes),
            });
        }
        Self { trees }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}
