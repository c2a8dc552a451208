//! kd-tree under the max-norm (ℓ∞).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::matrix::RowMatrix;

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Static kd-tree over the rows of a matrix. Immutable after construction.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    /// Points in tree order.
    points: Vec<f64>,
    /// Tree order → original row index.
    index: Vec<usize>,
    nodes: Vec<Node>,
}

#[inline]
pub fn max_norm_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Heap entry ordered by `(distance, index)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist: f64,
    idx: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn new(points: &RowMatrix) -> Result<Self> {
        let dim = points.cols();
        if dim == 0 {
            return Err(Error::InvalidConfig("kd-tree needs at least one coordinate".into()));
        }
        if points.rows() == 0 {
            return Err(Error::Empty("kd-tree points"));
        }
        if !points.is_finite() {
            return Err(Error::NonFinite("kd-tree points".into()));
        }
        let mut index: Vec<usize> = (0..points.rows()).collect();
        let mut nodes = Vec::new();
        build(points, &mut index, 0, points.rows(), &mut nodes);
        let mut ordered = Vec::with_capacity(points.rows() * dim);
        for &i in &index {
            ordered.extend_from_slice(points.row(i));
        }
        Ok(Self {
            dim,
            points: ordered,
            index,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn point(&self, slot: usize) -> &[f64] {
        &self.points[slot * self.dim..(slot + 1) * self.dim]
    }

    fn check_query(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: q.len(),
            });
        }
        Ok(())
    }

    /// The `k` nearest stored points to `q`, sorted by ascending distance with
    /// ties broken by lower original index.
    pub fn knn_query(&self, q: &[f64], k: usize) -> Result<(Vec<usize>, Vec<f64>)> {
        self.knn_query_excluding(q, k, None)
    }

    /// As [`knn_query`](Self::knn_query), skipping the stored point with
    /// original index `exclude` (the query point itself, typically).
    pub fn knn_query_excluding(
        &self,
        q: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Result<(Vec<usize>, Vec<f64>)> {
        self.check_query(q)?;
        let available = self.len() - usize::from(exclude.is_some_and(|e| e < self.len()));
        if k == 0 || k > available {
            return Err(Error::InvalidConfig(format!(
                "k = {k} out of range 1..={available}"
            )));
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.knn_recurse(0, q, k, exclude, 0.0, &mut heap);
        let mut found = heap.into_sorted_vec();
        found.truncate(k);
        Ok(found.into_iter().map(|c| (c.idx, c.dist)).unzip())
    }

    fn knn_recurse(
        &self,
        node: usize,
        q: &[f64],
        k: usize,
        exclude: Option<usize>,
        bound: f64,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start..end {
                    let idx = self.index[slot];
                    if Some(idx) == exclude {
                        continue;
                    }
                    let c = Candidate {
                        dist: max_norm_distance(q, self.point(slot)),
                        idx,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap holds k items") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.knn_recurse(near, q, k, exclude, bound, heap);
                let far_bound = bound.max(diff.abs());
                // `<=` keeps equal-distance candidates with lower indices reachable
                if heap.len() < k || far_bound <= heap.peek().expect("non-empty").dist {
                    self.knn_recurse(far, q, k, exclude, far_bound, heap);
                }
            }
        }
    }

    /// Number of stored points at ℓ∞ distance strictly less than `radius`.
    pub fn count_within(&self, q: &[f64], radius: f64) -> Result<usize> {
        self.check_query(q)?;
        Ok(self.count_recurse(0, q, radius, 0.0))
    }

    fn count_recurse(&self, node: usize, q: &[f64], radius: f64, bound: f64) -> usize {
        match self.nodes[node] {
            Node::Leaf { start, end } => (start..end)
                .filter(|&s| max_norm_distance(q, self.point(s)) < radius)
                .count(),
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                let mut c = self.count_recurse(near, q, radius, bound);
                let far_bound = bound.max(diff.abs());
                if far_bound < radius {
                    c += self.count_recurse(far, q, radius, far_bound);
                }
                c
            }
        }
    }
}

fn build(points: &RowMatrix, index: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let d = points.cols();
    let slice = &mut index[start..end];
    let axis = (0..d)
        .map(|a| {
            let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                let v = points.get(i, a);
                (lo.min(v), hi.max(v))
            });
            (a, hi - lo)
        })
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(a, _)| a)
        .unwrap_or(0);
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |&i, &j| {
        points.get(i, axis).total_cmp(&points.get(j, axis)).then(i.cmp(&j))
    });
    let value = points.get(slice[mid], axis);
    nodes.push(Node::Leaf { start, end }); // placeholder, replaced below
    let left = build(points, index, start, start + mid, nodes);
    let right = build(points, index, start + mid, end, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}
