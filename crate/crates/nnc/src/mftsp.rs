//! Multi-fragment TSP: the soft nearest-neighbor chain construction, the
//! definitional sorted-edge oracle, and a randomized mutually-nearest-
//! neighbor strategy used to test global-local equivalence.
//!
//! The multi-fragment tour repeatedly connects the two closest paths (path
//! distance = minimum endpoint distance, connection at the closest
//! endpoints) and finally closes the remaining path. Connecting *any*
//! mutually-nearest pair instead yields the same tour as long as distances
//! are unique, which is what lets the chain drive the construction; the
//! oracle and the seeded random-MNN walker exist to check exactly that,
//! including over arbitrary symmetric distance matrices.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{LpMetric, Point, TieBreaker};
use crate::snn::{path_distance, PathAnswer, PathFragment, PathSnnIndex, SnnConfig};

/// A closed tour over point ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub length: f64,
}

impl Tour {
    /// Undirected edge set of the tour, including the closing edge.
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        let n = self.order.len();
        let mut out = BTreeSet::new();
        if n < 2 {
            return out;
        }
        for i in 0..n {
            let a = self.order[i];
            let b = self.order[(i + 1) % n];
            out.insert(TieBreaker::norm_pair((a, b)));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SnncStats {
    pub iterations: usize,
    pub connections: usize,
    pub pushes: usize,
    pub pops: usize,
    pub snn_queries: usize,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SnncOptions {
    /// Cross-check every connection against a brute-force mutual-nearest-
    /// neighbor test. Quadratic; for tests.
    pub verify_mnn: bool,
}

/// The soft nearest-neighbor chain construction of the multi-fragment tour.
pub fn mftsp_snnc(points: &[Point], metric: LpMetric, config: &SnnConfig) -> Result<(Tour, SnncStats)> {
    mftsp_snnc_with(points, metric, config, SnncOptions::default())
}

/// A multi-fragment connection plan over initial fragments: the connection
/// edges between endpoint slots (two slots per fragment, `2i` and `2i+1`),
/// the closing edge, and the total added length.
#[derive(Clone, Debug, PartialEq)]
pub struct FragmentPlan {
    pub edges: Vec<(usize, usize)>,
    pub closing: (usize, usize),
    pub length: f64,
}

impl FragmentPlan {
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        let mut out: BTreeSet<(usize, usize)> = self
            .edges
            .iter()
            .map(|&e| TieBreaker::norm_pair(e))
            .collect();
        out.insert(TieBreaker::norm_pair(self.closing));
        out
    }
}

/// Multi-fragment plan for a set of open fragments via the soft chain.
pub fn mftsp_snnc_paths(
    segs: &[(Point, Point)],
    metric: LpMetric,
    config: &SnnConfig,
) -> Result<(FragmentPlan, SnncStats)> {
    if segs.is_empty() {
        return Err(Error::InvalidParameter("no fragments".into()));
    }
    let init: Vec<((Point, Point), (usize, usize))> = segs
        .iter()
        .enumerate()
        .map(|(i, (a, b))| ((a.clone(), b.clone()), (2 * i, 2 * i + 1)))
        .collect();
    let out = snnc_drive(&init, metric, config, SnncOptions::default())?;
    Ok((plan_from_drive(segs, metric, out.0, out.1), out.2))
}

fn slot_coords<'a>(segs: &'a [(Point, Point)], slot: usize) -> &'a Point {
    let (a, b) = &segs[slot / 2];
    if slot % 2 == 0 {
        a
    } else {
        b
    }
}

fn plan_from_drive(
    segs: &[(Point, Point)],
    metric: LpMetric,
    edges: Vec<(usize, usize)>,
    final_ends: (usize, usize),
    ) -> FragmentPlan {
    let mut length = 0.0;
    for &(a, b) in edges.iter().chain(std::iter::once(&final_ends)) {
        length += metric.dist(
            slot_coords(segs, a).coords(),
            slot_coords(segs, b).coords(),
        );
    }
    FragmentPlan {
        edges,
        closing: final_ends,
        length,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Node {
    Single(usize),
    Pair { a: usize, b: usize, witness: f64 },
}

struct PathRec {
    /// Original point ids at the two ends (equal for singletons).
    ends: (usize, usize),
    alive: bool,
}

pub fn mftsp_snnc_with(
    points: &[Point],
    metric: LpMetric,
    config: &SnnConfig,
    options: SnncOptions,
) -> Result<(Tour, SnncStats)> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no points".into()));
    }
    if n == 1 {
        return Ok((
            Tour {
                order: vec![0],
                length: 0.0,
            },
            SnncStats::default(),
        ));
    }
    let init: Vec<((Point, Point), (usize, usize))> = points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.clone(), p.clone()), (i, i)))
        .collect();
    let (mut edges, final_ends, stats) = snnc_drive(&init, metric, config, options)?;
    edges.push(final_ends);
    Ok((tour_from_edges(points, metric, &edges), stats))
}

/// The chain loop over an arbitrary initial fragment set; returns the
/// connection edges over the caller's endpoint ids, the endpoints of the
/// final path, and the counters.
fn snnc_drive(
    init: &[((Point, Point), (usize, usize))],
    metric: LpMetric,
    config: &SnnConfig,
    options: SnncOptions,
) -> Result<(Vec<(usize, usize)>, (usize, usize), SnncStats)> {
    let n = init.len();
    let mut stats = SnncStats::default();
    if n == 1 {
        return Ok((Vec::new(), init[0].1, stats));
    }

    let fragments: Vec<PathFragment> = init
        .iter()
        .enumerate()
        .map(|(i, ((a, b), _))| PathFragment::new(i, a.clone(), b.clone()))
        .collect();
    let mut idx = PathSnnIndex::with_config(&fragments, metric, config)?;
    let mut recs: Vec<PathRec> = init
        .iter()
        .map(|&(_, ends)| PathRec { ends, alive: true })
        .collect();
    let mut alive: BTreeSet<usize> = (0..n).collect();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n);
    let mut chain: Vec<Node> = Vec::new();
    let tie = TieBreaker::ByIndex;

    // Remove the path, query with it, re-add it; the answer becomes a
    // candidate chain node of two paths plus its witness distance.
    let answer_node = |idx: &mut PathSnnIndex, stats: &mut SnncStats, pid: usize| -> Result<Node> {
        let (a, b) = {
            let (pa, pb) = idx.endpoints(pid).ok_or(Error::BadId(pid))?;
            (pa.clone(), pb.clone())
        };
        let q = PathFragment::new(pid, a, b);
        idx.delete_path(pid)?;
        let ans = idx.query(&q);
        idx.restore_path(pid)?;
        stats.snn_queries += 1;
        match ans? {
            PathAnswer::HardPath(w) => {
                let (wa, wb) = idx.endpoints(w).unwrap();
                let d = path_distance(&metric, (&q.a, &q.b), (wa, wb));
                Ok(Node::Pair {
                    a: pid,
                    b: w,
                    witness: d,
                })
            }
            PathAnswer::SoftPaths(p, p2) => Ok(Node::Pair {
                a: p,
                b: p2,
                witness: idx.distance(p, p2)?,
            }),
        }
    };

    while alive.len() > 1 {
        stats.iterations += 1;
        let top = chain.last().copied();
        match top {
            None => {
                // Restart at the alive path with smallest id.
                let u = *alive.iter().next().unwrap();
                chain.push(Node::Single(u));
                stats.pushes += 1;
            }
            Some(Node::Single(u)) => {
                let a = answer_node(&mut idx, &mut stats, u)?;
                chain.push(a);
                stats.pushes += 1;
            }
            Some(Node::Pair { a, b, .. }) => {
                let n1 = answer_node(&mut idx, &mut stats, a)?;
                let n2 = answer_node(&mut idx, &mut stats, b)?;
                let best = best_node(tie, n1, n2);
                if node_paths(best) == TieBreaker::norm_pair((a, b)) {
                    if options.verify_mnn {
                        verify_mnn_connection(&idx, &alive, metric, a, b)?;
                    }
                    connect(&mut idx, &mut recs, &mut alive, &mut edges, metric, a, b)?;
                    stats.connections += 1;
                    chain.pop();
                    let pred = chain.pop();
                    debug_assert!(pred.is_some(), "pair node without predecessor");
                    stats.pops += 2;
                } else {
                    chain.push(best);
                    stats.pushes += 1;
                }
            }
        }
        #[cfg(debug_assertions)]
        {
            if n <= 1024 {
                check_chain_invariants(&chain, &recs, tie);
            } else {
                check_chain_top(&chain, &recs, tie);
            }
        }
    }

    debug_assert!(chain.is_empty(), "chain must drain when one path remains");
    debug_assert_eq!(stats.connections, n - 1);
    debug_assert_eq!(stats.pushes, 2 * n - 2);
    debug_assert!(stats.iterations <= 3 * n - 3);

    // The caller connects the two endpoints of the remaining path.
    let last = *alive.iter().next().unwrap();
    Ok((edges, recs[last].ends, stats))
}

fn node_paths(n: Node) -> (usize, usize) {
    match n {
        Node::Single(u) => (u, u),
        Node::Pair { a, b, .. } => TieBreaker::norm_pair((a, b)),
    }
}

fn best_node(tie: TieBreaker, x: Node, y: Node) -> Node {
    let (wx, px) = match x {
        Node::Pair { a, b, witness } => (witness, (a, b)),
        Node::Single(_) => unreachable!(),
    };
    let (wy, py) = match y {
        Node::Pair { a, b, witness } => (witness, (a, b)),
        Node::Single(_) => unreachable!(),
    };
    if tie.cmp_pair((wx, px), (wy, py)) == std::cmp::Ordering::Greater {
        y
    } else {
        x
    }
}

fn connect(
    idx: &mut PathSnnIndex,
    recs: &mut Vec<PathRec>,
    alive: &mut BTreeSet<usize>,
    edges: &mut Vec<(usize, usize)>,
    metric: LpMetric,
    a: usize,
    b: usize,
) -> Result<()> {
    let tie = TieBreaker::ByIndex;
    let (aa, ab) = {
        let (x, y) = idx.endpoints(a).ok_or(Error::BadId(a))?;
        (x.clone(), y.clone())
    };
    let (ba, bb) = {
        let (x, y) = idx.endpoints(b).ok_or(Error::BadId(b))?;
        (x.clone(), y.clone())
    };
    let (ea0, ea1) = recs[a].ends;
    let (eb0, eb1) = recs[b].ends;
    // Closest endpoint pair under the tie-break order; duplicates from
    // singletons are harmless.
    let cands = [
        (&aa, ea0, &ba, eb0),
        (&aa, ea0, &bb, eb1),
        (&ab, ea1, &ba, eb0),
        (&ab, ea1, &bb, eb1),
    ];
    let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
    for (pa, ia, pb, ib) in cands {
        let d = metric.dist(pa.coords(), pb.coords());
        let key = (d, TieBreaker::norm_pair((ia, ib)));
        if best.is_none()
            || tie.cmp_pair(key, (best.unwrap().0, best.unwrap().1)) == std::cmp::Ordering::Less
        {
            best = Some((key.0, key.1, ia, ib));
        }
    }
    let (_, _, ia, ib) = best.unwrap();
    edges.push((ia, ib));

    // Reducibility in structure: the new endpoints are a subset of the old.
    let other = |ends: (usize, usize), used: usize| if ends.0 == used { ends.1 } else { ends.0 };
    let na = other((ea0, ea1), ia);
    let nb = other((eb0, eb1), ib);
    debug_assert!(
        [ea0, ea1, eb0, eb1].contains(&na) && [ea0, ea1, eb0, eb1].contains(&nb),
        "merged endpoints must come from the constituents"
    );
    let pa_new = if na == ea0 { aa.clone() } else { ab.clone() };
    let pb_new = if nb == eb0 { ba.clone() } else { bb.clone() };

    let new_id = recs.len();
    idx.delete_path(a)?;
    idx.delete_path(b)?;
    idx.insert_path(&PathFragment::new(new_id, pa_new, pb_new))?;
    recs[a].alive = false;
    recs[b].alive = false;
    recs.push(PathRec {
        ends: (na, nb),
        alive: true,
    });
    alive.remove(&a);
    alive.remove(&b);
    alive.insert(new_id);
    Ok(())
}

fn verify_mnn_connection(
    idx: &PathSnnIndex,
    alive: &BTreeSet<usize>,
    metric: LpMetric,
    a: usize,
    b: usize,
) -> Result<()> {
    let tie = TieBreaker::ByIndex;
    let d_ab = idx.distance(a, b)?;
    for &x in alive {
        if x == a || x == b {
            continue;
        }
        for (u, v) in [(a, x), (b, x)] {
            let d = idx.distance(u, v)?;
            if tie.cmp_pair((d, (u, v)), (d_ab, (a, b))) == std::cmp::Ordering::Less {
                return Err(Error::Degenerate(format!(
                    "connection ({a},{b}) at {d_ab} is not mutually nearest: d({u},{v}) = {d}"
                )));
            }
        }
        let _ = metric;
    }
    Ok(())
}

/// O(1) slice of the chain invariants: the top references alive paths and
/// improves on its predecessor.
#[cfg(debug_assertions)]
fn check_chain_top(chain: &[Node], recs: &[PathRec], tie: TieBreaker) {
    let Some(top) = chain.last() else { return };
    match top {
        Node::Single(u) => assert!(recs[*u].alive),
        Node::Pair { a, b, witness } => {
            assert!(recs[*a].alive && recs[*b].alive);
            if chain.len() >= 2 {
                if let Node::Pair {
                    a: pa,
                    b: pb,
                    witness: pw,
                } = &chain[chain.len() - 2]
                {
                    assert!(
                        tie.cmp_pair((*witness, (*a, *b)), (*pw, (*pa, *pb)))
                            == std::cmp::Ordering::Less,
                        "chain witnesses must decrease"
                    );
                }
            }
        }
    }
}

#[cfg(debug_assertions)]
fn check_chain_invariants(chain: &[Node], recs: &[PathRec], tie: TieBreaker) {
    use std::collections::HashMap;
    // (2) witness distances strictly decrease toward the top.
    let mut prev: Option<(f64, (usize, usize))> = None;
    for node in chain {
        if let Node::Pair { a, b, witness } = node {
            let key = (*witness, TieBreaker::norm_pair((*a, *b)));
            if let Some(p) = prev {
                assert!(
                    tie.cmp_pair(key, p) == std::cmp::Ordering::Less,
                    "chain witnesses must decrease"
                );
            }
            prev = Some(key);
        }
    }
    // (3) every path appears in at most two nodes, consecutive when two;
    // (4) the chain references alive paths only.
    let mut seen: HashMap<usize, Vec<usize>> = HashMap::new();
    for (i, node) in chain.iter().enumerate() {
        let (a, b) = match node {
            Node::Single(u) => (*u, None),
            Node::Pair { a, b, .. } => {
                debug_assert_ne!(a, b);
                (*a, Some(*b))
            }
        };
        for p in std::iter::once(a).chain(b) {
            assert!(recs[p].alive, "chain references dead path {p}");
            seen.entry(p).or_default().push(i);
        }
    }
    for (p, occ) in seen {
        assert!(occ.len() <= 2, "path {p} in more than two nodes");
        if occ.len() == 2 {
            assert!(occ[1] == occ[0] + 1, "occurrences of {p} not consecutive");
        }
    }
}

fn tour_from_edges(points: &[Point], metric: LpMetric, edges: &[(usize, usize)]) -> Tour {
    let n = points.len();
    order_and_length(n, edges, |a, b| {
        metric.dist(points[a].coords(), points[b].coords())
    })
}

fn order_and_length<F: Fn(usize, usize) -> f64>(n: usize, edges: &[(usize, usize)], dist: F) -> Tour {
    if n == 1 {
        return Tour {
            order: vec![0],
            length: 0.0,
        };
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(2); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut order = Vec::with_capacity(n);
    order.push(0);
    let mut prev = usize::MAX;
    let mut cur = 0;
    while order.len() < n {
        let next = if adj[cur][0] != prev {
            adj[cur][0]
        } else {
            adj[cur][1]
        };
        order.push(next);
        prev = cur;
        cur = next;
    }
    let mut length = 0.0;
    for i in 0..n {
        length += dist(order[i], order[(i + 1) % n]);
    }
    Tour { order, length }
}

// ---------------------------------------------------------------------------
// Oracle: the definitional sorted-edge greedy (Kruskal-like).

/// Multi-fragment tour by sorting all point pairs by increasing distance
/// and connecting endpoints of separate paths in order.
pub fn mftsp_oracle(points: &[Point], metric: LpMetric) -> Result<Tour> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no points".into()));
    }
    sorted_edge_greedy(n, |a, b| metric.dist(points[a].coords(), points[b].coords()))
}

/// A symmetric distance matrix with zero diagonal, the abstract stand-in
/// for "any set of objects with pairwise distances".
#[derive(Clone, Debug)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        for r in &rows {
            if r.len() != n {
                return Err(Error::SizeMismatch {
                    left: n,
                    right: r.len(),
                });
            }
        }
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            if rows[i][i] != 0.0 {
                return Err(Error::InvalidParameter("nonzero diagonal".into()));
            }
            for j in 0..n {
                if (rows[i][j] - rows[j][i]).abs() > 0.0 {
                    return Err(Error::InvalidParameter("matrix not symmetric".into()));
                }
                if i != j && !(rows[i][j] > 0.0) {
                    return Err(Error::InvalidParameter(
                        "off-diagonal distances must be positive".into(),
                    ));
                }
                d[i * n + j] = rows[i][j];
            }
        }
        Ok(DistanceMatrix { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

pub fn mftsp_oracle_matrix(m: &DistanceMatrix) -> Result<Tour> {
    if m.len() == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    sorted_edge_greedy(m.len(), |a, b| m.get(a, b))
}

fn sorted_edge_greedy<F: Fn(usize, usize) -> f64>(n: usize, dist: F) -> Result<Tour> {
    if n == 1 {
        return Ok(Tour {
            order: vec![0],
            length: 0.0,
        });
    }
    let init: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    let (mut edges, closing) = sorted_edge_core(n, &init, &dist);
    edges.push(closing);
    Ok(order_and_length(n, &edges, dist))
}

/// Multi-fragment plan for open fragments by the definitional sorted-edge
/// greedy over endpoint slots.
pub fn mftsp_oracle_paths(segs: &[(Point, Point)], metric: LpMetric) -> Result<FragmentPlan> {
    if segs.is_empty() {
        return Err(Error::InvalidParameter("no fragments".into()));
    }
    let init: Vec<(usize, usize)> = (0..segs.len()).map(|i| (2 * i, 2 * i + 1)).collect();
    let dist = |a: usize, b: usize| {
        metric.dist(slot_coords(segs, a).coords(), slot_coords(segs, b).coords())
    };
    let (edges, closing) = sorted_edge_core(2 * segs.len(), &init, &dist);
    Ok(plan_from_drive(segs, metric, edges, closing))
}

/// Sorted-pair greedy over endpoint slots with initial fragments: each
/// proper fragment end takes one connection, a singleton slot takes two.
fn sorted_edge_core<F: Fn(usize, usize) -> f64>(
    n_slots: usize,
    init: &[(usize, usize)],
    dist: &F,
) -> (Vec<(usize, usize)>, (usize, usize)) {
    let tie = TieBreaker::ByIndex;
    let mut parent: Vec<usize> = (0..n_slots).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut cap = vec![0u8; n_slots];
    let mut active = vec![false; n_slots];
    for &(a, b) in init {
        if a == b {
            cap[a] = 2;
            active[a] = true;
        } else {
            cap[a] = 1;
            cap[b] = 1;
            active[a] = true;
            active[b] = true;
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n_slots {
        if !active[i] {
            continue;
        }
        for j in i + 1..n_slots {
            if active[j] {
                pairs.push((dist(i, j), i, j));
            }
        }
    }
    pairs.sort_by(|a, b| tie.cmp_pair((a.0, (a.1, a.2)), (b.0, (b.1, b.2))));

    let mut degree = vec![0u8; n_slots];
    let mut edges = Vec::with_capacity(init.len());
    for &(_, i, j) in &pairs {
        if edges.len() == init.len() - 1 {
            break;
        }
        if degree[i] >= cap[i] || degree[j] >= cap[j] {
            continue;
        }
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri == rj {
            continue;
        }
        parent[ri] = rj;
        degree[i] += 1;
        degree[j] += 1;
        edges.push((i, j));
    }
    // Close the tour at the two remaining free slots.
    let mut open = Vec::with_capacity(2);
    for i in 0..n_slots {
        for _ in degree[i]..cap[i] {
            open.push(i);
        }
    }
    debug_assert_eq!(open.len(), 2);
    (edges, (open[0], open[1]))
}

// ---------------------------------------------------------------------------
// Randomized MNN strategy (global-local equivalence witness).

/// Repeatedly connect a seeded-random mutually-nearest pair of paths.
pub fn mnn_strategy_random(points: &[Point], metric: LpMetric, seed: u64) -> Result<Tour> {
    let n = points.len();
    if n == 0 {
        return Err(Error::InvalidParameter("no points".into()));
    }
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rows[i][j] = metric.dist(points[i].coords(), points[j].coords());
            }
        }
    }
    let m = DistanceMatrix::new(rows)?;
    mnn_strategy_random_matrix(&m, seed)
}

pub fn mnn_strategy_random_matrix(m: &DistanceMatrix, seed: u64) -> Result<Tour> {
    let n = m.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    if n == 1 {
        return Ok(Tour {
            order: vec![0],
            length: 0.0,
        });
    }
    let init: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    let (mut edges, closing) = mnn_drive(&init, |a, b| m.get(a, b), seed);
    edges.push(closing);
    Ok(order_and_length(n, &edges, |a, b| m.get(a, b)))
}

/// Multi-fragment plan for open fragments by seeded random MNN choices.
pub fn mnn_strategy_random_paths(
    segs: &[(Point, Point)],
    metric: LpMetric,
    seed: u64,
) -> Result<FragmentPlan> {
    if segs.is_empty() {
        return Err(Error::InvalidParameter("no fragments".into()));
    }
    let init: Vec<(usize, usize)> = (0..segs.len()).map(|i| (2 * i, 2 * i + 1)).collect();
    let dist = |a: usize, b: usize| {
        metric.dist(slot_coords(segs, a).coords(), slot_coords(segs, b).coords())
    };
    let (edges, closing) = mnn_drive(&init, dist, seed);
    Ok(plan_from_drive(segs, metric, edges, closing))
}

fn mnn_drive<F: Fn(usize, usize) -> f64>(
    init: &[(usize, usize)],
    item_dist: F,
    seed: u64,
) -> (Vec<(usize, usize)>, (usize, usize)) {
    let n = init.len();
    if n == 1 {
        return (Vec::new(), init[0]);
    }
    let tie = TieBreaker::ByIndex;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Paths keyed by id; merged paths get fresh ids.
    #[derive(Clone, Copy)]
    struct P {
        ends: (usize, usize),
    }
    let mut paths: Vec<Option<P>> = init.iter().map(|&ends| Some(P { ends })).collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let dist = |paths: &Vec<Option<P>>, a: usize, b: usize| -> f64 {
        let pa = paths[a].unwrap().ends;
        let pb = paths[b].unwrap().ends;
        let mut best = f64::INFINITY;
        for x in [pa.0, pa.1] {
            for y in [pb.0, pb.1] {
                best = best.min(item_dist(x, y));
            }
        }
        best
    };
    let nn_of = |paths: &Vec<Option<P>>, alive: &Vec<usize>, p: usize| -> (f64, usize) {
        let mut best: Option<(f64, usize)> = None;
        for &q in alive {
            if q == p {
                continue;
            }
            let d = dist(paths, p, q);
            if best.is_none() || tie.cmp_single((d, q), best.unwrap()) == std::cmp::Ordering::Less
            {
                best = Some((d, q));
            }
        }
        best.unwrap()
    };

    let mut edges = Vec::with_capacity(n);
    let mut nn: Vec<Option<(f64, usize)>> = vec![None; n];
    for &p in &alive {
        nn[p] = Some(nn_of(&paths, &alive, p));
    }
    while alive.len() > 1 {
        // All mutually-nearest pairs, then a seeded-random choice.
        let mut mnn: Vec<(usize, usize)> = Vec::new();
        for &p in &alive {
            let (_, q) = nn[p].unwrap();
            if q > p {
                let (_, back) = nn[q].unwrap();
                if back == p {
                    mnn.push((p, q));
                }
            }
        }
        debug_assert!(!mnn.is_empty(), "an MNN pair always exists");
        let &(a, b) = &mnn[rng.random_range(0..mnn.len())];

        // Connect at the closest endpoint pair.
        let ea = paths[a].unwrap().ends;
        let eb = paths[b].unwrap().ends;
        let mut best: Option<(f64, (usize, usize))> = None;
        for x in [ea.0, ea.1] {
            for y in [eb.0, eb.1] {
                let key = (item_dist(x, y), TieBreaker::norm_pair((x, y)));
                if best.is_none() || tie.cmp_pair(key, best.unwrap()) == std::cmp::Ordering::Less {
                    best = Some(key);
                }
            }
        }
        let (ia, ib) = best.unwrap().1;
        // norm_pair may have swapped sides; recover which end belongs where.
        let (ia, ib) = if ia == ea.0 || ia == ea.1 {
            (ia, ib)
        } else {
            (ib, ia)
        };
        edges.push((ia, ib));
        let other = |e: (usize, usize), used: usize| if e.0 == used { e.1 } else { e.0 };
        let merged = P {
            ends: (other(ea, ia), other(eb, ib)),
        };
        let new_id = paths.len();
        paths.push(Some(merged));
        paths[a] = None;
        paths[b] = None;
        alive.retain(|&x| x != a && x != b);
        alive.push(new_id);
        nn.push(None);

        // Reducibility keeps other NN pointers valid unless they referenced
        // the merged paths.
        nn[new_id] = if alive.len() > 1 {
            Some(nn_of(&paths, &alive, new_id))
        } else {
            None
        };
        for &p in &alive {
            if p == new_id {
                continue;
            }
            let (_, q) = nn[p].unwrap();
            if q == a || q == b {
                nn[p] = Some(nn_of(&paths, &alive, p));
            }
        }
    }
    let last = paths[alive[0]].unwrap().ends;
    (edges, last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::params::Arity;
    use crate::testutil::cached_params;

    fn three_way_2d() -> crate::params::ValidParams {
        cached_params(2, 2.0, Arity::ThreeWay)
    }

    #[test]
    fn single_point_tour() {
        let pts = vec![Point(vec![3.0, 4.0])];
        let (t, s) = mftsp_snnc(&pts, LpMetric::l2(2), &SnnConfig::Exact).unwrap();
        assert_eq!(t.order, vec![0]);
        assert_eq!(t.length, 0.0);
        assert_eq!(s.iterations, 0);
        assert_eq!(mftsp_oracle(&pts, LpMetric::l2(2)).unwrap().order, vec![0]);
    }

    #[test]
    fn two_points_degenerate_cycle() {
        let pts = vec![Point(vec![0.0, 0.0]), Point(vec![3.0, 0.0])];
        let t = mftsp_oracle(&pts, LpMetric::l2(2)).unwrap();
        assert_eq!(t.length, 6.0);
        let (t2, _) = mftsp_snnc(&pts, LpMetric::l2(2), &SnnConfig::Exact).unwrap();
        assert_eq!(t2.length, 6.0);
    }

    #[test]
    fn three_points_triangle() {
        let metric = LpMetric::l2(2);
        let pts = vec![
            Point(vec![0.0, 0.0]),
            Point(vec![4.0, 0.0]),
            Point(vec![1.0, 3.0]),
        ];
        let per = 4.0
            + metric.dist(pts[1].coords(), pts[2].coords())
            + metric.dist(pts[2].coords(), pts[0].coords());
        let (t, s) = mftsp_snnc(&pts, metric, &SnnConfig::Exact).unwrap();
        assert!((t.length - per).abs() < 1e-12);
        assert_eq!(s.connections, 2);
        assert!(s.iterations <= 6);
        let o = mftsp_oracle(&pts, metric).unwrap();
        assert_eq!(t.edge_set(), o.edge_set());
    }

    #[test]
    fn oracle_collinear_hand_run() {
        let metric = LpMetric::l2(1);
        let pts = vec![
            Point(vec![0.0]),
            Point(vec![1.0]),
            Point(vec![3.0]),
            Point(vec![7.0]),
        ];
        let t = mftsp_oracle(&pts, metric).unwrap();
        assert_eq!(t.length, 14.0);
        let want: BTreeSet<(usize, usize)> =
            [(0, 1), (1, 2), (2, 3), (0, 3)].into_iter().collect();
        assert_eq!(t.edge_set(), want);
    }

    #[test]
    fn snnc_matches_oracle_exact_config() {
        for seed in 0..30u64 {
            let dim = 2 + (seed % 3) as usize;
            let p = [1.0, 2.0, f64::INFINITY][(seed % 3) as usize];
            let metric = LpMetric::new(p, dim).unwrap();
            let n = 5 + (seed as usize * 13) % 80;
            let pts = gen::gen_points(n, metric, 1000 + seed).unwrap();
            let (t, stats) = mftsp_snnc_with(
                &pts,
                metric,
                &SnnConfig::Exact,
                SnncOptions { verify_mnn: true },
            )
            .unwrap();
            let o = mftsp_oracle(&pts, metric).unwrap();
            assert_eq!(t.edge_set(), o.edge_set(), "seed {seed}");
            assert_eq!(stats.connections, n - 1);
            assert!(stats.iterations <= 3 * n - 3);
            assert_eq!(stats.pushes, stats.pops);
        }
    }

    #[test]
    fn snnc_matches_oracle_certified_config() {
        let metric = LpMetric::l2(2);
        let params = three_way_2d();
        for seed in 0..10u64 {
            let n = 10 + (seed as usize * 17) % 60;
            let pts = gen::gen_points(n, metric, 9000 + seed).unwrap();
            let (t, stats) = mftsp_snnc_with(
                &pts,
                metric,
                &SnnConfig::Certified(params.clone()),
                SnncOptions { verify_mnn: true },
            )
            .unwrap();
            let o = mftsp_oracle(&pts, metric).unwrap();
            assert_eq!(t.edge_set(), o.edge_set(), "seed {seed}");
            assert_eq!(stats.connections, n - 1);
            assert!(stats.iterations <= 3 * n - 3);
        }
    }

    #[test]
    fn mnn_random_equals_oracle_geometric() {
        let metric = LpMetric::l2(2);
        for seed in 0..20u64 {
            let n = 5 + (seed as usize * 7) % 40;
            let pts = gen::gen_points(n, metric, 333 + seed).unwrap();
            let o = mftsp_oracle(&pts, metric).unwrap();
            for s2 in 0..5 {
                let t = mnn_strategy_random(&pts, metric, seed * 100 + s2).unwrap();
                assert_eq!(t.edge_set(), o.edge_set());
            }
        }
    }

    #[test]
    fn fragment_plans_agree_across_strategies() {
        let metric = LpMetric::l2(2);
        for seed in 0..15u64 {
            let n = 2 + (seed as usize) % 15;
            let pts = gen::gen_points(2 * n, metric, 5000 + seed).unwrap();
            let segs: Vec<(Point, Point)> = pts
                .chunks_exact(2)
                .map(|c| (c[0].clone(), c[1].clone()))
                .collect();
            let (plan, stats) = mftsp_snnc_paths(&segs, metric, &SnnConfig::Exact).unwrap();
            let oracle = mftsp_oracle_paths(&segs, metric).unwrap();
            assert_eq!(plan.edge_set(), oracle.edge_set(), "seed {seed}");
            assert!((plan.length - oracle.length).abs() < 1e-9);
            assert_eq!(stats.connections, n - 1);
            for s2 in 0..3 {
                let mnn = mnn_strategy_random_paths(&segs, metric, seed * 7 + s2).unwrap();
                assert_eq!(mnn.edge_set(), oracle.edge_set(), "seed {seed}/{s2}");
            }
        }
    }

    #[test]
    fn mnn_random_equals_oracle_matrices() {
        for seed in 0..20u64 {
            let n = 4 + (seed as usize) % 30;
            let m = gen::gen_symmetric_matrix(n, 777 + seed).unwrap();
            let o = mftsp_oracle_matrix(&m).unwrap();
            for s2 in 0..5 {
                let t = mnn_strategy_random_matrix(&m, seed * 31 + s2).unwrap();
                assert_eq!(t.edge_set(), o.edge_set());
            }
        }
    }
}
