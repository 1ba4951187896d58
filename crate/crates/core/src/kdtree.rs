//! Exact k-nearest-neighbour search over a static point set.
//!
//! Results are identical to a full distance sort: candidates are ordered by
//! `(squared distance, point index)` and a subtree is skipped only when the
//! splitting plane is strictly farther than the current k-th candidate.

use std::cmp::Ordering;

use crate::features::squared_distance;

const LEAF_SIZE: usize = 12;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dims: usize,
    points: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// A neighbour found by a query: index into the original point list and
/// its squared distance to the query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub index: usize,
    pub dist_sq: f64,
}

fn hit_cmp(a: &Hit, b: &Hit) -> Ordering {
    a.dist_sq.total_cmp(&b.dist_sq).then(a.index.cmp(&b.index))
}

impl KdTree {
    /// `points` is row-major with `dims` components per point.
    pub fn new(dims: usize, points: Vec<f64>) -> Self {
        assert!(dims > 0 && points.len().is_multiple_of(dims));
        let n = points.len() / dims;
        let mut tree = Self {
            dims,
            points,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dims..(i + 1) * self.dims]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mut dim = 0;
        let mut spread = f64::NEG_INFINITY;
        for d in 0..self.dims {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let v = self.points[i * self.dims + d];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > spread {
                spread = hi - lo;
                dim = d;
            }
        }
        let mid = (end - start) / 2;
        let (points, dims) = (&self.points, self.dims);
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            points[a * dims + dim]
                .total_cmp(&points[b * dims + dim])
                .then(a.cmp(&b))
        });
        let value = self.points[self.order[start + mid] * self.dims + dim];
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, start + mid);
        let right = self.build(start + mid, end);
        self.nodes[id] = Node::Split {
            dim,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest points, sorted by distance then index.
    pub fn nearest(&self, query: &[f64], k: usize) -> Vec<Hit> {
        debug_assert_eq!(query.len(), self.dims);
        let mut best = Vec::with_capacity(k + 1);
        if k > 0 && !self.is_empty() {
            self.search(0, query, k, &mut best);
        }
        best
    }

    fn search(&self, node: usize, query: &[f64], k: usize, best: &mut Vec<Hit>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let hit = Hit {
                        index: i,
                        dist_sq: squared_distance(query, self.point(i)),
                    };
                    if best.len() == k {
                        if hit_cmp(&hit, &best[k - 1]) != Ordering::Less {
                            continue;
                        }
                        best.pop();
                    }
                    let pos = best
                        .binary_search_by(|h| hit_cmp(h, &hit))
                        .unwrap_or_else(|p| p);
                    best.insert(pos, hit);
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = query[dim] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, k, best);
                if best.len() < k || diff * diff <= best[k - 1].dist_sq {
                    self.search(far, query, k, best);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[f64], dims: usize, q: &[f64], k: usize) -> Vec<Hit> {
        let mut all: Vec<Hit> = points
            .chunks_exact(dims)
            .enumerate()
            .map(|(index, p)| Hit {
                index,
                dist_sq: p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(),
            })
            .collect();
        all.sort_by(hit_cmp);
        all.truncate(k);
        all
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(dims, n) in &[(2, 300), (9, 500), (11, 200), (3, 5)] {
            let pts: Vec<f64> = (0..n * dims)
                .map(|_| rng.random_range(-50.0..50.0))
                .collect();
            let tree = KdTree::new(dims, pts.clone());
            for _ in 0..100 {
                let q: Vec<f64> = (0..dims).map(|_| rng.random_range(-60.0..60.0)).collect();
                for k in [1, 3, 7, 15] {
                    assert_eq!(tree.nearest(&q, k), brute(&pts, dims, &q, k));
                }
            }
        }
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        // Integer grid with many equal distances.
        let pts: Vec<f64> = (0..400)
            .flat_map(|i| [(i % 20) as f64, (i / 20) as f64])
            .collect();
        let tree = KdTree::new(2, pts.clone());
        for q in [[5.5, 5.5], [0.0, 0.0], [10.0, 3.5], [19.5, 19.5]] {
            for k in [1, 4, 9] {
                assert_eq!(tree.nearest(&q, k), brute(&pts, 2, &q, k));
            }
        }
    }

    #[test]
    fn duplicate_points() {
        let pts = vec![1.0; 2 * 40];
        let tree = KdTree::new(2, pts);
        let hits = tree.nearest(&[1.0, 1.0], 5);
        assert_eq!(
            hits.iter().map(|h| h.index).collect::<Vec<_>>(),
            vec![0, 1, 2, 3, 4]
        );
    }

    #[test]
    fn k_larger_than_set() {
        let tree = KdTree::new(1, vec![3.0, 1.0, 2.0]);
        let hits = tree.nearest(&[0.0], 10);
        assert_eq!(
            hits.iter().map(|h| h.index).collect::<Vec<_>>(),
            vec![1, 2, 0]
        );
        assert!(KdTree::new(1, vec![]).nearest(&[0.0], 3).is_empty());
    }
}
