//! Single-pass BIRCH clustering-feature tree. Leaf entries are used directly
//! as coarse clusters; there is no global refinement phase.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LabelSequence, ReducedEmbedding};

const THRESHOLD_SUBSAMPLE: usize = 200;

/// Clustering feature: point count, linear sum and sum of squared norms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringFeature {
    pub n: usize,
    pub linear_sum: Vec<f64>,
    pub squared_sum: f64,
}

impl ClusteringFeature {
    fn from_point(x: &[f64]) -> Self {
        ClusteringFeature {
            n: 1,
            linear_sum: x.to_vec(),
            squared_sum: x.iter().map(|v| v * v).sum(),
        }
    }

    fn empty(dim: usize) -> Self {
        ClusteringFeature {
            n: 0,
            linear_sum: vec![0.0; dim],
            squared_sum: 0.0,
        }
    }

    fn add_point(&mut self, x: &[f64]) {
        self.n += 1;
        self.linear_sum.iter_mut().zip(x).for_each(|(s, v)| *s += v);
        self.squared_sum += x.iter().map(|v| v * v).sum::<f64>();
    }

    fn merge(&mut self, other: &ClusteringFeature) {
        self.n += other.n;
        self.linear_sum
            .iter_mut()
            .zip(&other.linear_sum)
            .for_each(|(s, v)| *s += v);
        self.squared_sum += other.squared_sum;
    }

    pub fn centroid(&self) -> Vec<f64> {
        self.linear_sum.iter().map(|s| s / self.n as f64).collect()
    }

    /// Squared radius: mean squared distance of members to the centroid.
    pub fn radius_sq(&self) -> f64 {
        let c = self.centroid();
        self.squared_sum / self.n as f64 - c.iter().map(|v| v * v).sum::<f64>()
    }

    fn dist_sq_to(&self, x: &[f64]) -> f64 {
        let inv = 1.0 / self.n as f64;
        self.linear_sum
            .iter()
            .zip(x)
            .map(|(s, v)| {
                let d = s * inv - v;
                d * d
            })
            .sum()
    }
}

#[derive(Debug, Clone)]
struct Child {
    cf: ClusteringFeature,
    /// Leaf-entry id in a leaf node, child node id otherwise.
    target: usize,
}

#[derive(Debug, Clone)]
struct Node {
    leaf: bool,
    children: Vec<Child>,
}

/// CF-tree over points inserted one by one.
#[derive(Debug, Clone)]
pub struct CfTree {
    dim: usize,
    branching: usize,
    threshold: f64,
    nodes: Vec<Node>,
    root: usize,
    entries: usize,
}

impl CfTree {
    pub fn new(dim: usize, branching: usize, threshold: f64) -> Result<Self> {
        if branching < 2 {
            return Err(Error::config("birch_branching", "branching factor must be >= 2"));
        }
        Ok(CfTree {
            dim,
            branching,
            threshold,
            nodes: vec![Node {
                leaf: true,
                children: Vec::new(),
            }],
            root: 0,
            entries: 0,
        })
    }

    pub fn num_entries(&self) -> usize {
        self.entries
    }

    /// Inserts `x` and returns the id of the leaf entry that absorbed it.
    pub fn insert(&mut self, x: &[f64]) -> usize {
        debug_assert_eq!(x.len(), self.dim);
        let (entry, split) = self.insert_at(self.root, x);
        if let Some((a, b)) = split {
            self.nodes.push(Node {
                leaf: false,
                children: vec![a, b],
            });
            self.root = self.nodes.len() - 1;
        }
        entry
    }

    fn closest_child(&self, node: usize, x: &[f64]) -> Option<(usize, f64)> {
        self.nodes[node]
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.cf.dist_sq_to(x)))
            .fold(None, |best, cur| match best {
                Some(b) if b.1 <= cur.1 => Some(b),
                _ => Some(cur),
            })
    }

    fn insert_at(&mut self, node: usize, x: &[f64]) -> (usize, Option<(Child, Child)>) {
        let closest = self.closest_child(node, x);
        let entry = if self.nodes[node].leaf {
            match closest {
                Some((i, d2)) if d2.sqrt() <= self.threshold => {
                    let child = &mut self.nodes[node].children[i];
                    child.cf.add_point(x);
                    child.target
                }
                _ => {
                    let id = self.entries;
                    self.entries += 1;
                    self.nodes[node].children.push(Child {
                        cf: ClusteringFeature::from_point(x),
                        target: id,
                    });
                    id
                }
            }
        } else {
            let (i, _) = closest.expect("internal nodes are never empty");
            let target = self.nodes[node].children[i].target;
            let (entry, split) = self.insert_at(target, x);
            match split {
                Some((a, b)) => {
                    self.nodes[node].children.splice(i..=i, [a, b]);
                }
                None => self.nodes[node].children[i].cf.add_point(x),
            }
            entry
        };

        let split = (self.nodes[node].children.len() > self.branching).then(|| self.split(node));
        (entry, split)
    }

    /// Splits an overfull node around its two farthest-apart children.
    fn split(&mut self, node: usize) -> (Child, Child) {
        let children = std::mem::take(&mut self.nodes[node].children);
        let leaf = self.nodes[node].leaf;
        let centroids: Vec<Vec<f64>> = children.iter().map(|c| c.cf.centroid()).collect();
        let d2 = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum() };

        let (mut sa, mut sb, mut far) = (0, 1, -1.0);
        for i in 0..children.len() {
            for j in i + 1..children.len() {
                let d = d2(&centroids[i], &centroids[j]);
                if d > far {
                    (sa, sb, far) = (i, j, d);
                }
            }
        }

        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (i, child) in children.into_iter().enumerate() {
            let to_a = d2(&centroids[i], &centroids[sa]);
            let to_b = d2(&centroids[i], &centroids[sb]);
            if i == sa || (i != sb && to_a <= to_b) {
                left.push(child);
            } else {
                right.push(child);
            }
        }

        let summarize = |group: &[Child], dim: usize| {
            let mut cf = ClusteringFeature::empty(dim);
            group.iter().for_each(|c| cf.merge(&c.cf));
            cf
        };
        let left_cf = summarize(&left, self.dim);
        let right_cf = summarize(&right, self.dim);
        self.nodes[node].children = left;
        self.nodes.push(Node { leaf, children: right });
        let right_id = self.nodes.len() - 1;
        (
            Child { cf: left_cf, target: node },
            Child { cf: right_cf, target: right_id },
        )
    }

    /// Leaf entries indexed by entry id.
    pub fn leaf_entries(&self) -> Vec<ClusteringFeature> {
        let mut out = vec![None; self.entries];
        for node in self.nodes.iter().filter(|n| n.leaf) {
            for c in &node.children {
                out[c.target] = Some(c.cf.clone());
            }
        }
        out.into_iter().map(|c| c.expect("every entry lives in a leaf")).collect()
    }

    /// Verifies fan-out, non-negative radii and that every internal CF is the
    /// sum of its subtree.
    pub fn check(&self) -> Result<()> {
        self.check_node(self.root).map(|_| ())
    }

    fn check_node(&self, node: usize) -> Result<ClusteringFeature> {
        let n = &self.nodes[node];
        if n.children.len() > self.branching {
            return Err(Error::invariant("CfTree", "node exceeds branching factor"));
        }
        let mut total = ClusteringFeature::empty(self.dim);
        for c in &n.children {
            if c.cf.radius_sq() < -1e-9 * (1.0 + c.cf.squared_sum / c.cf.n as f64) {
                return Err(Error::invariant("CfTree", "negative squared radius"));
            }
            if !n.leaf {
                let sub = self.check_node(c.target)?;
                let tol = 1e-9 * (1.0 + sub.squared_sum.abs());
                if sub.n != c.cf.n || (sub.squared_sum - c.cf.squared_sum).abs() > tol {
                    return Err(Error::invariant("CfTree", "internal CF does not match subtree"));
                }
            }
            total.merge(&c.cf);
        }
        Ok(total)
    }
}

fn rows(data: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..data.nrows()).map(|i| data.row(i).iter().copied().collect()).collect()
}

/// `factor` times the median pairwise distance over a seeded subsample of at
/// most 200 rows.
pub fn absorption_threshold(data: &DMatrix<f64>, factor: f64, seed: u64) -> f64 {
    let n = data.nrows();
    if n < 2 {
        return 0.0;
    }
    let mut picked: Vec<usize> = if n <= THRESHOLD_SUBSAMPLE {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, n, THRESHOLD_SUBSAMPLE).into_vec()
    };
    picked.sort_unstable();
    let mut dists = Vec::with_capacity(picked.len() * (picked.len() - 1) / 2);
    for (a, &i) in picked.iter().enumerate() {
        for &j in &picked[a + 1..] {
            dists.push((data.row(i) - data.row(j)).norm());
        }
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    factor * median
}

/// Coarse clusters: one per leaf entry, assigned in sample order.
///
/// A sample joins the nearest leaf entry when it lies within the absorption
/// threshold of that entry's centroid, otherwise it opens a new entry.
pub fn birch_coarse(
    reduced: &ReducedEmbedding,
    branching: usize,
    threshold_factor: f64,
    seed: u64,
) -> Result<LabelSequence> {
    let n = reduced.num_samples();
    if n == 0 {
        return Err(Error::Degenerate("no samples to cluster".into()));
    }
    let threshold = absorption_threshold(&reduced.data, threshold_factor, seed);
    if threshold <= 0.0 {
        return Ok(LabelSequence {
            labels: vec![0; n],
            num_clusters: 1,
        });
    }
    let mut tree = CfTree::new(reduced.dim(), branching, threshold)?;
    let labels = rows(&reduced.data).iter().map(|x| tree.insert(x)).collect();
    Ok(LabelSequence {
        labels,
        num_clusters: tree.num_entries(),
    })
}
