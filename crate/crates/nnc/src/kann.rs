//! Dynamic epsilon-approximate k-nearest-neighbor index over points.
//!
//! A bucketed space-partitioning tree with lazy deletion: deleted points
//! are tombstoned in place, inserted points descend to a leaf (splitting it
//! when full), and the whole tree is rebuilt from the alive set when the
//! dead fraction exceeds one half or the tree has doubled since the last
//! rebuild. The approximation slack `epsilon` is fixed at construction; a
//! `query(q, k)` returns `k` distinct alive points where the rank-i answer
//! is within `(1+epsilon)` of the true rank-i distance.
//!
//! With `epsilon = 0` the pruning rule is exact and query output equals a
//! linear scan ordered by `(distance, id)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::{LpMetric, Point, TieBreaker};

pub type PointId = usize;

const LEAF_CAP: usize = 12;

#[derive(Debug)]
enum NodeKind {
    Leaf(Vec<u32>),
    Split { children: Box<[Node; 2]> },
}

#[derive(Debug)]
struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    kind: NodeKind,
}

#[derive(Debug)]
pub struct KannIndex {
    metric: LpMetric,
    epsilon: f64,
    coords: Vec<f64>,
    alive: Vec<bool>,
    in_tree: Vec<bool>,
    root: Option<Node>,
    /// Ids currently filed in the tree (alive or tombstoned); rebuilds touch
    /// only these, not the whole id history.
    members: Vec<u32>,
    tree_dead: usize,
    built_size: usize,
    alive_count: usize,
    tie: TieBreaker,
}

/// Max-heap entry: the greatest `(distance, id)` is the current worst
/// candidate, so ties resolve toward smaller ids.
struct Worst(f64, u32);

impl PartialEq for Worst {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Worst {}
impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| self.1.cmp(&other.1))
    }
}

impl KannIndex {
    /// Build an index over `points`; ids are assigned in input order.
    pub fn build(points: &[Point], metric: LpMetric, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be >= 0, got {epsilon}"
            )));
        }
        let dim = metric.dim();
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            metric.check_dim(p)?;
            coords.extend_from_slice(p.coords());
        }
        let n = points.len();
        let mut idx = KannIndex {
            metric,
            epsilon,
            coords,
            alive: vec![true; n],
            in_tree: vec![false; n],
            root: None,
            members: (0..n as u32).collect(),
            tree_dead: 0,
            built_size: n,
            alive_count: n,
            tie: TieBreaker::ByIndex,
        };
        idx.rebuild();
        Ok(idx)
    }

    pub fn metric(&self) -> LpMetric {
        self.metric
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.alive_count
    }

    pub fn is_empty(&self) -> bool {
        self.alive_count == 0
    }

    pub fn is_alive(&self, id: PointId) -> bool {
        id < self.alive.len() && self.alive[id]
    }

    pub fn point(&self, id: PointId) -> &[f64] {
        let d = self.metric.dim();
        &self.coords[id * d..(id + 1) * d]
    }

    /// Insert a point, returning its id.
    pub fn insert(&mut self, p: &Point) -> Result<PointId> {
        self.metric.check_dim(p)?;
        let id = self.alive.len();
        self.coords.extend_from_slice(p.coords());
        self.alive.push(true);
        self.in_tree.push(false);
        self.alive_count += 1;
        self.file_into_tree(id);
        self.maybe_rebuild();
        Ok(id)
    }

    /// Tombstone an alive point.
    pub fn delete(&mut self, id: PointId) -> Result<()> {
        if id >= self.alive.len() || !self.alive[id] {
            return Err(Error::BadId(id));
        }
        self.alive[id] = false;
        self.alive_count -= 1;
        self.tree_dead += 1;
        self.maybe_rebuild();
        Ok(())
    }

    /// Bring a tombstoned point back. Supports the remove/query/re-add
    /// pattern of the chain drivers without churning the tree.
    pub fn restore(&mut self, id: PointId) -> Result<()> {
        if id >= self.alive.len() || self.alive[id] {
            return Err(Error::BadId(id));
        }
        self.alive[id] = true;
        self.alive_count += 1;
        if self.in_tree[id] {
            self.tree_dead -= 1;
        } else {
            // A rebuild dropped it while dead; file it again.
            self.file_into_tree(id);
        }
        Ok(())
    }

    /// Descend to the leaf whose box needs the least expansion, growing the
    /// boxes along the way, and split the leaf when it overflows.
    fn file_into_tree(&mut self, id: PointId) {
        let dim = self.metric.dim();
        self.in_tree[id] = true;
        self.members.push(id as u32);
        let p: Vec<f64> = self.point(id).to_vec();
        let metric = self.metric;
        match &mut self.root {
            None => {
                self.root = Some(Node {
                    lo: p.clone(),
                    hi: p,
                    kind: NodeKind::Leaf(vec![id as u32]),
                });
            }
            Some(root) => {
                let mut node = root;
                loop {
                    for a in 0..dim {
                        node.lo[a] = node.lo[a].min(p[a]);
                        node.hi[a] = node.hi[a].max(p[a]);
                    }
                    if matches!(node.kind, NodeKind::Leaf(_)) {
                        let NodeKind::Leaf(ids) = &mut node.kind else {
                            unreachable!()
                        };
                        ids.push(id as u32);
                        if ids.len() > 2 * LEAF_CAP {
                            let mut taken = std::mem::take(ids);
                            *node = build_node(&self.coords, dim, &mut taken);
                        }
                        break;
                    }
                    let NodeKind::Split { children } = &mut node.kind else {
                        unreachable!()
                    };
                    let d0 = metric.box_dist(&p, &children[0].lo, &children[0].hi);
                    let d1 = metric.box_dist(&p, &children[1].lo, &children[1].hi);
                    let pick = if d0 <= d1 { 0 } else { 1 };
                    node = &mut children[pick];
                }
            }
        }
    }

    fn maybe_rebuild(&mut self) {
        let total = self.members.len();
        if self.tree_dead * 2 > total.max(1) || total > (2 * self.built_size).max(32) {
            self.rebuild();
        }
    }

    fn rebuild(&mut self) {
        let dim = self.metric.dim();
        let mut ids: Vec<u32> = Vec::with_capacity(self.alive_count);
        for &i in &self.members {
            self.in_tree[i as usize] = false;
            if self.alive[i as usize] {
                ids.push(i);
            }
        }
        ids.sort_unstable();
        ids.dedup();
        for &i in &ids {
            self.in_tree[i as usize] = true;
        }
        self.members = ids.clone();
        self.tree_dead = 0;
        self.built_size = ids.len();
        self.root = if ids.is_empty() {
            None
        } else {
            Some(build_node(&self.coords, dim, &mut ids))
        };
    }

    /// The k approximate nearest neighbors of `q`, sorted by
    /// `(distance, id)`. Returns all alive points when fewer than `k` exist.
    pub fn query(&self, q: &Point, k: usize) -> Result<Vec<(PointId, f64)>> {
        self.metric.check_dim(q)?;
        if k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        let qc = q.coords();
        let mut heap: BinaryHeap<Worst> = BinaryHeap::with_capacity(k + 1);
        if let Some(root) = &self.root {
            self.descend(qc, root, k, &mut heap);
        }
        let mut out: Vec<(PointId, f64)> = heap
            .into_iter()
            .map(|Worst(d, id)| (id as usize, d))
            .collect();
        out.sort_by(|a, b| self.tie.cmp_single((a.1, a.0), (b.1, b.0)));
        Ok(out)
    }

    fn consider(&self, q: &[f64], id: u32, k: usize, heap: &mut BinaryHeap<Worst>) {
        if !self.alive[id as usize] {
            return;
        }
        let d = self.metric.dist(q, self.point(id as usize));
        if heap.len() < k {
            heap.push(Worst(d, id));
        } else if let Some(w) = heap.peek() {
            if self.tie.cmp_single((d, id as usize), (w.0, w.1 as usize)) == Ordering::Less {
                heap.pop();
                heap.push(Worst(d, id));
            }
        }
    }

    fn descend(&self, q: &[f64], node: &Node, k: usize, heap: &mut BinaryHeap<Worst>) {
        if heap.len() == k {
            let worst = heap.peek().unwrap().0;
            // Skip the subtree when its box distance exceeds the current
            // k-th candidate distance shrunk by (1+epsilon); this is what
            // yields the per-rank guarantee.
            if self.metric.box_dist(q, &node.lo, &node.hi) > worst / (1.0 + self.epsilon) {
                return;
            }
        }
        match &node.kind {
            NodeKind::Leaf(ids) => {
                for &id in ids {
                    self.consider(q, id, k, heap);
                }
            }
            NodeKind::Split { children } => {
                let d0 = self.metric.box_dist(q, &children[0].lo, &children[0].hi);
                let d1 = self.metric.box_dist(q, &children[1].lo, &children[1].hi);
                if d0 <= d1 {
                    self.descend(q, &children[0], k, heap);
                    self.descend(q, &children[1], k, heap);
                } else {
                    self.descend(q, &children[1], k, heap);
                    self.descend(q, &children[0], k, heap);
                }
            }
        }
    }
}

fn bounds(coords: &[f64], dim: usize, ids: &[u32]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &id in ids {
        let p = &coords[id as usize * dim..(id as usize + 1) * dim];
        for a in 0..dim {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    (lo, hi)
}

fn build_node(coords: &[f64], dim: usize, ids: &mut [u32]) -> Node {
    let (lo, hi) = bounds(coords, dim, ids);
    if ids.len() <= LEAF_CAP {
        return Node {
            lo,
            hi,
            kind: NodeKind::Leaf(ids.to_vec()),
        };
    }
    // Split on the widest axis at the median.
    let axis = (0..dim)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
        .unwrap();
    if hi[axis] - lo[axis] == 0.0 {
        // All points coincide; a bigger leaf is fine.
        return Node {
            lo,
            hi,
            kind: NodeKind::Leaf(ids.to_vec()),
        };
    }
    let mid = ids.len() / 2;
    let coord = |id: u32| coords[id as usize * dim + axis];
    ids.select_nth_unstable_by(mid, |&a, &b| {
        coord(a).total_cmp(&coord(b)).then_with(|| a.cmp(&b))
    });
    let (left, right) = ids.split_at_mut(mid);
    let l = build_node(coords, dim, left);
    let r = build_node(coords, dim, right);
    Node {
        lo,
        hi,
        kind: NodeKind::Split {
            children: Box::new([l, r]),
        },
    }
}

/// Linear-scan oracle: the exact k nearest alive points under the
/// `(distance, id)` order. Kept trivially simple; used by tests to check
/// the index and by callers that want a reference answer.
pub fn scan_k_nearest(
    points: &[(PointId, &[f64])],
    metric: &LpMetric,
    q: &[f64],
    k: usize,
) -> Vec<(PointId, f64)> {
    let mut all: Vec<(PointId, f64)> = points
        .iter()
        .map(|&(id, p)| (id, metric.dist(q, p)))
        .collect();
    all.sort_by(|a, b| TieBreaker::ByIndex.cmp_single((a.1, a.0), (b.1, b.0)));
    all.truncate(k);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rand_points(n: usize, dim: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Point((0..dim).map(|_| rng.random_range(0.0..100.0)).collect()))
            .collect()
    }

    fn oracle(idx: &KannIndex, q: &Point, k: usize) -> Vec<(usize, f64)> {
        let pts: Vec<(usize, &[f64])> = (0..idx.alive.len())
            .filter(|&i| idx.alive[i])
            .map(|i| (i, idx.point(i)))
            .collect();
        scan_k_nearest(&pts, &idx.metric, q.coords(), k)
    }

    #[test]
    fn empty_index_empty_query() {
        let idx = KannIndex::build(&[], LpMetric::l2(2), 0.0).unwrap();
        assert!(idx.query(&Point(vec![1.0, 2.0]), 3).unwrap().is_empty());
    }

    #[test]
    fn two_point_exact() {
        let pts = vec![Point(vec![0.0, 0.0]), Point(vec![10.0, 0.0])];
        let idx = KannIndex::build(&pts, LpMetric::l2(2), 0.0).unwrap();
        let r = idx.query(&Point(vec![1.0, 0.0]), 1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].0, 0);
        assert_eq!(r[0].1, 1.0);
    }

    #[test]
    fn eps_one_bound_arithmetic() {
        // With eps = 1, returning the point at distance 1.0 instead of the
        // true NN at 0.5 is legal: 1.0 <= 2 * 0.5.
        let pts = vec![Point(vec![0.0, 0.0]), Point(vec![1.5, 0.0])];
        let idx = KannIndex::build(&pts, LpMetric::l2(2), 1.0).unwrap();
        let r = idx.query(&Point(vec![1.0, 0.0]), 1).unwrap();
        let true_nn = 0.5;
        assert!(r[0].1 <= 2.0 * true_nn);
    }

    #[test]
    fn exact_matches_oracle_random() {
        for (dim, p) in [(2, 2.0), (3, 1.0), (4, f64::INFINITY), (2, 3.0)] {
            let metric = LpMetric::new(p, dim).unwrap();
            let pts = rand_points(1000, dim, 42 + dim as u64);
            let idx = KannIndex::build(&pts, metric, 0.0).unwrap();
            let queries = rand_points(50, dim, 7);
            for q in &queries {
                let got = idx.query(q, 5).unwrap();
                let want = oracle(&idx, q, 5);
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn epsilon_per_rank_guarantee() {
        let metric = LpMetric::l2(3);
        let pts = rand_points(600, 3, 11);
        for eps in [0.1, 0.5, 1.0] {
            let idx = KannIndex::build(&pts, metric, eps).unwrap();
            let queries = rand_points(100, 3, 13);
            for q in &queries {
                let got = idx.query(q, 8).unwrap();
                let want = oracle(&idx, q, 8);
                assert_eq!(got.len(), want.len());
                for (i, (_, d)) in got.iter().enumerate() {
                    assert!(
                        *d <= (1.0 + eps) * want[i].1 * (1.0 + 1e-12),
                        "rank {i}: {d} > (1+{eps}) * {}",
                        want[i].1
                    );
                }
            }
        }
    }

    #[test]
    fn insert_then_delete_is_identity() {
        let pts = rand_points(200, 2, 3);
        let metric = LpMetric::l2(2);
        let idx0 = KannIndex::build(&pts, metric, 0.0).unwrap();
        let mut idx = KannIndex::build(&pts, metric, 0.0).unwrap();
        let q = Point(vec![50.0, 50.0]);
        let before = idx0.query(&q, 7).unwrap();
        let id = idx.insert(&Point(vec![49.0, 50.0])).unwrap();
        idx.delete(id).unwrap();
        assert_eq!(idx.query(&q, 7).unwrap(), before);
    }

    #[test]
    fn delete_nn_promotes_second() {
        let pts = rand_points(300, 2, 5);
        let metric = LpMetric::l2(2);
        let mut idx = KannIndex::build(&pts, metric, 0.0).unwrap();
        let q = Point(vec![30.0, 70.0]);
        let two = idx.query(&q, 2).unwrap();
        idx.delete(two[0].0).unwrap();
        let one = idx.query(&q, 1).unwrap();
        assert_eq!(one[0].0, two[1].0);
    }

    #[test]
    fn delete_dead_id_errors() {
        let pts = rand_points(10, 2, 5);
        let mut idx = KannIndex::build(&pts, LpMetric::l2(2), 0.0).unwrap();
        idx.delete(3).unwrap();
        assert!(idx.delete(3).is_err());
        assert!(idx.delete(999).is_err());
        idx.restore(3).unwrap();
        assert!(idx.restore(3).is_err());
    }

    // Interleaved inserts/deletes against a reference set model, exact
    // agreement on nearest ids under the tie-break order.
    #[test]
    fn interleaved_ops_match_oracle() {
        let metric = LpMetric::l2(2);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut idx = KannIndex::build(&[], metric, 0.0).unwrap();
        let mut model: Vec<(usize, Vec<f64>, bool)> = Vec::new();
        for step in 0..10_000 {
            let roll: f64 = rng.random();
            let alive_ids: Vec<usize> = model
                .iter()
                .filter(|(_, _, a)| *a)
                .map(|(i, _, _)| *i)
                .collect();
            if roll < 0.5 || alive_ids.len() < 5 {
                let p: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..100.0)).collect();
                let id = idx.insert(&Point(p.clone())).unwrap();
                model.push((id, p, true));
            } else if roll < 0.75 {
                let pick = alive_ids[rng.random_range(0..alive_ids.len())];
                idx.delete(pick).unwrap();
                model[pick].2 = false;
            } else {
                let q = Point(vec![
                    rng.random_range(0.0..100.0),
                    rng.random_range(0.0..100.0),
                ]);
                let got = idx.query(&q, 3).unwrap();
                let pts: Vec<(usize, &[f64])> = model
                    .iter()
                    .filter(|(_, _, a)| *a)
                    .map(|(i, p, _)| (*i, p.as_slice()))
                    .collect();
                let want = scan_k_nearest(&pts, &metric, q.coords(), 3);
                assert_eq!(got, want, "step {step}");
            }
        }
        // Alive-set membership equals the model.
        for (id, _, a) in &model {
            assert_eq!(idx.is_alive(*id), *a);
        }
    }

    #[test]
    fn restore_after_rebuild_refiles_point() {
        let metric = LpMetric::l2(2);
        let pts = rand_points(64, 2, 21);
        let mut idx = KannIndex::build(&pts, metric, 0.0).unwrap();
        let q = Point(vec![1.0, 1.0]);
        let before = idx.query(&q, 64).unwrap();
        // Delete enough to force a rebuild while some ids are dead.
        for id in 0..40 {
            idx.delete(id).unwrap();
        }
        for id in 0..40 {
            idx.restore(id).unwrap();
        }
        assert_eq!(idx.query(&q, 64).unwrap(), before);
    }
}
