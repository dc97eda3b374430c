//! Exact neighbor statistics in the joint (X, Y) space.
//!
//! Distances: Euclidean on X, absolute difference on the scalar Y, and the
//! maximum of the two on Z = (X, Y). Every route computes distances through
//! [`x_distance`] / [`y_distance`] with the same operation order, and every
//! pruning bound is built from the same monotone floating-point operations,
//! so the kd-tree and the brute-force scan agree bit for bit.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::par;

/// Row-major point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
}

impl PointSet {
    pub fn new(coords: Vec<f64>, dim: usize) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0, "coordinate buffer is not n x dim");
        PointSet { coords, dim }
    }

    /// Interleaves columns (each of length n) into row-major points.
    pub fn from_columns(columns: &[&[f64]]) -> Self {
        let dim = columns.len();
        let n = columns.first().map_or(0, |c| c.len());
        let mut coords = Vec::with_capacity(n * dim);
        for i in 0..n {
            for c in columns {
                coords.push(c[i]);
            }
        }
        PointSet::new(coords, dim)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Per-sample quantities entering the estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NeighborhoodStats {
    /// Max-norm distance from z_i to its k-th nearest neighbor.
    pub eps: f64,
    /// X-part of the distance to that neighbor.
    pub eps_x: f64,
    /// Y-part of the distance to that neighbor.
    pub eps_y: f64,
    /// Number of j != i with `|x_j - x_i| < eps`.
    pub n_x: usize,
    /// Number of j != i with `|y_j - y_i| < eps`.
    pub n_y: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum NeighborStrategy {
    /// Pick by problem size.
    #[default]
    Auto,
    BruteForce,
    KdTree,
}

impl NeighborStrategy {
    fn use_tree(self, n: usize, dim: usize) -> bool {
        match self {
            NeighborStrategy::Auto => n > 400 && dim <= 6,
            NeighborStrategy::BruteForce => false,
            NeighborStrategy::KdTree => true,
        }
    }
}

#[inline]
pub fn x_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (u, v) in a.iter().zip(b) {
        let d = u - v;
        sum += d * d;
    }
    libm::sqrt(sum)
}

#[inline]
pub fn y_distance(a: f64, b: f64) -> f64 {
    libm::fabs(a - b)
}

/// k-th neighbor of z_i ordered by (distance, index); z_i itself excluded.
#[derive(Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    index: usize,
}

impl Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist.total_cmp(&other.dist).then(self.index.cmp(&other.index))
    }
}

/// Statistics of one sample by a direct O(N) scan.
///
/// Panics if `k == 0` or `k >= N`.
pub fn knn_stats(x: &PointSet, y: &[f64], i: usize, k: usize) -> NeighborhoodStats {
    let n = x.len();
    assert!(k >= 1 && k < n, "k must satisfy 1 <= k < N");
    let xi = x.point(i);
    let mut cands: Vec<Candidate> = (0..n)
        .filter(|&j| j != i)
        .map(|j| Candidate { dist: f64::max(x_distance(x.point(j), xi), y_distance(y[j], y[i])), index: j })
        .collect();
    let (_, kth, _) = cands.select_nth_unstable_by(k - 1, Candidate::cmp);
    let kth = kth.index;
    let eps_x = x_distance(x.point(kth), xi);
    let eps_y = y_distance(y[kth], y[i]);
    let eps = f64::max(eps_x, eps_y);
    let n_x = (0..n).filter(|&j| j != i && x_distance(x.point(j), xi) < eps).count();
    let n_y = (0..n).filter(|&j| j != i && y_distance(y[j], y[i]) < eps).count();
    NeighborhoodStats { eps, eps_x, eps_y, n_x, n_y }
}

/// Statistics of every sample.
pub fn all_stats(x: &PointSet, y: &[f64], k: usize, strategy: NeighborStrategy) -> Vec<NeighborhoodStats> {
    let n = x.len();
    assert_eq!(n, y.len());
    assert!(k >= 1 && k < n, "k must satisfy 1 <= k < N");
    if strategy.use_tree(n, x.dim()) {
        tree_stats(x, y, k)
    } else {
        matrix_stats(x, y, k)
    }
}

/// Brute force sharing one pairwise X-distance matrix across samples.
fn matrix_stats(x: &PointSet, y: &[f64], k: usize) -> Vec<NeighborhoodStats> {
    let n = x.len();
    let mut dx = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = x_distance(x.point(j), x.point(i));
            dx[i * n + j] = d;
            dx[j * n + i] = d;
        }
    }
    let mut cands = Vec::with_capacity(n - 1);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let row = &dx[i * n..(i + 1) * n];
        cands.clear();
        cands.extend(
            (0..n).filter(|&j| j != i).map(|j| Candidate { dist: f64::max(row[j], y_distance(y[j], y[i])), index: j }),
        );
        let (_, kth, _) = cands.select_nth_unstable_by(k - 1, Candidate::cmp);
        let kth = kth.index;
        let eps_x = row[kth];
        let eps_y = y_distance(y[kth], y[i]);
        let eps = f64::max(eps_x, eps_y);
        let mut n_x = 0;
        let mut n_y = 0;
        for j in 0..n {
            if j == i {
                continue;
            }
            n_x += usize::from(row[j] < eps);
            n_y += usize::from(y_distance(y[j], y[i]) < eps);
        }
        out.push(NeighborhoodStats { eps, eps_x, eps_y, n_x, n_y });
    }
    out
}

fn tree_stats(x: &PointSet, y: &[f64], k: usize) -> Vec<NeighborhoodStats> {
    let joint = {
        let d = x.dim();
        let mut coords = Vec::with_capacity(x.len() * (d + 1));
        for i in 0..x.len() {
            coords.extend_from_slice(x.point(i));
            coords.push(y[i]);
        }
        KdTree::build(PointSet::new(coords, d + 1))
    };
    let marginal = KdTree::build(x.clone());
    let sorted_y = {
        let mut s = y.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let x_dim = x.dim();
    par::map_indexed(x.len(), |i| {
        let kth = joint.kth_nearest_joint(i, k, x_dim);
        let xi = x.point(i);
        let eps_x = x_distance(x.point(kth), xi);
        let eps_y = y_distance(y[kth], y[i]);
        let eps = f64::max(eps_x, eps_y);
        // The query point itself is at distance 0 and is inside iff eps > 0.
        let self_hit = usize::from(eps > 0.0);
        let n_x = marginal.count_within(xi, eps) - self_hit;
        let n_y = count_sorted_within(&sorted_y, y[i], eps) - self_hit;
        NeighborhoodStats { eps, eps_x, eps_y, n_x, n_y }
    })
}

/// `#{j : |s_j - c| < eps}` on ascending `s`. The predicate holds on one
/// contiguous run because rounded subtraction is monotone.
fn count_sorted_within(sorted: &[f64], c: f64, eps: f64) -> usize {
    let lo = sorted.partition_point(|&v| v < c && !(y_distance(v, c) < eps));
    let hi = sorted.partition_point(|&v| v < c || y_distance(v, c) < eps);
    hi - lo
}

const LEAF_SIZE: usize = 12;

struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Static kd-tree over a point set, split at the median of the widest axis.
struct KdTree {
    points: PointSet,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    fn build(points: PointSet) -> Self {
        let mut tree = KdTree { order: (0..points.len()).collect(), points, nodes: Vec::new() };
        let n = tree.points.len();
        tree.build_node(0, n);
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let dim = self.points.dim();
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &p in &self.order[start..end] {
            for (d, &v) in self.points.point(p).iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node { lo, hi, start, end, children: None });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let node = &self.nodes[id];
        let axis =
            (0..dim).max_by(|&a, &b| (node.hi[a] - node.lo[a]).total_cmp(&(node.hi[b] - node.lo[b]))).unwrap_or(0);
        if node.hi[axis] == node.lo[axis] {
            return id;
        }
        let mid = start + (end - start) / 2;
        let points = &self.points;
        self.order[start..end]
            .select_nth_unstable_by(mid - start, |&a, &b| points.point(a)[axis].total_cmp(&points.point(b)[axis]));
        let left = self.build_node(start, mid);
        let right = self.build_node(mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    /// Lower bound of the X-part distance (first `dims` axes) from `q` to the box.
    fn box_gap_x(node: &Node, q: &[f64], dims: usize) -> f64 {
        let mut sum = 0.0;
        for d in 0..dims {
            let g = axis_gap(node.lo[d], node.hi[d], q[d]);
            sum += g * g;
        }
        libm::sqrt(sum)
    }

    /// Upper bound of the Euclidean distance from `q` to any point of the box.
    fn box_far(node: &Node, q: &[f64]) -> f64 {
        let mut sum = 0.0;
        for d in 0..q.len() {
            let g = f64::max(libm::fabs(node.lo[d] - q[d]), libm::fabs(node.hi[d] - q[d]));
            sum += g * g;
        }
        libm::sqrt(sum)
    }

    /// Index of the k-th nearest neighbor of stored point `i` under
    /// `max(|x|_2, |y|)` where the last axis is y.
    fn kth_nearest_joint(&self, i: usize, k: usize, x_dim: usize) -> usize {
        let q = self.points.point(i);
        let mut best: Vec<Candidate> = Vec::with_capacity(k + 1);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let bound = f64::max(Self::box_gap_x(node, q, x_dim), axis_gap(node.lo[x_dim], node.hi[x_dim], q[x_dim]));
            if best.len() == k && bound > best[k - 1].dist {
                continue;
            }
            match node.children {
                Some((l, r)) => {
                    // Visit the nearer child first (pushed last).
                    let gl = self.joint_gap(l, q, x_dim);
                    let gr = self.joint_gap(r, q, x_dim);
                    if gl <= gr {
                        stack.push(r);
                        stack.push(l);
                    } else {
                        stack.push(l);
                        stack.push(r);
                    }
                }
                None => {
                    for &j in &self.order[node.start..node.end] {
                        if j == i {
                            continue;
                        }
                        let p = self.points.point(j);
                        let c = Candidate {
                            dist: f64::max(x_distance(&p[..x_dim], &q[..x_dim]), y_distance(p[x_dim], q[x_dim])),
                            index: j,
                        };
                        insert_bounded(&mut best, c, k);
                    }
                }
            }
        }
        best[k - 1].index
    }

    fn joint_gap(&self, id: usize, q: &[f64], x_dim: usize) -> f64 {
        let node = &self.nodes[id];
        f64::max(Self::box_gap_x(node, q, x_dim), axis_gap(node.lo[x_dim], node.hi[x_dim], q[x_dim]))
    }

    /// Number of stored points with Euclidean distance to `q` strictly below `r`.
    fn count_within(&self, q: &[f64], r: f64) -> usize {
        let dim = q.len();
        let mut count = 0;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !(Self::box_gap_x(node, q, dim) < r) {
                continue;
            }
            if Self::box_far(node, q) < r {
                count += node.end - node.start;
                continue;
            }
            match node.children {
                Some((l, rgt)) => {
                    stack.push(l);
                    stack.push(rgt);
                }
                None => {
                    count += self.order[node.start..node.end]
                        .iter()
                        .filter(|&&j| x_distance(self.points.point(j), q) < r)
                        .count();
                }
            }
        }
        count
    }
}

#[inline]
fn axis_gap(lo: f64, hi: f64, q: f64) -> f64 {
    if q < lo {
        lo - q
    } else if q > hi {
        q - hi
    } else {
        0.0
    }
}

/// Keeps the `k` smallest candidates in ascending order.
fn insert_bounded(best: &mut Vec<Candidate>, c: Candidate, k: usize) {
    if best.len() == k && c.cmp(&best[k - 1]) != Ordering::Less {
        return;
    }
    let pos = best.partition_point(|b| b.cmp(&c) == Ordering::Less);
    best.insert(pos, c);
    best.truncate(k);
}
