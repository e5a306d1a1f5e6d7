//! Multi-fragment tours for Steiner TSP on weighted undirected graphs.
//!
//! Sites are a subset of nodes; the tour distance between two site paths is
//! the shortest-path distance between their endpoint sites. Nearest
//! neighbors are found by Dijkstra from a path's endpoints, so the chain is
//! the classic one with hard answers only. The expanded walk concatenates
//! shortest paths and may repeat vertices and edges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::TieBreaker;

#[derive(Clone, Debug)]
pub struct WeightedGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    pub sites: Vec<usize>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: &[(usize, usize, f64)], sites: Vec<usize>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            if u >= n || v >= n {
                return Err(Error::BadId(u.max(v)));
            }
            if !(w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "edge weight must be positive, got {w}"
                )));
            }
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return Err(Error::InvalidParameter("duplicate sites".into()));
        }
        for &s in &sites {
            if s >= n {
                return Err(Error::BadId(s));
            }
        }
        Ok(WeightedGraph { n, adj, sites })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, u: usize) -> &[(usize, f64)] {
        &self.adj[u]
    }

    /// Shortest-path distances from `source` to every node.
    pub fn distances_from(&self, source: usize) -> Vec<f64> {
        self.dijkstra(&[source], None)
    }

    /// Dijkstra distances from `sources`; `parents` reconstructs one
    /// shortest-path tree when requested.
    fn dijkstra(&self, sources: &[usize], parents: Option<&mut Vec<usize>>) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Item(f64, usize);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Item {
            fn cmp(&self, other: &Self) -> Ordering {
                // Reverse for a min-heap; ties toward the smaller node id.
                other
                    .0
                    .total_cmp(&self.0)
                    .then_with(|| other.1.cmp(&self.1))
            }
        }
        let mut dist = vec![f64::INFINITY; self.n];
        let mut par = vec![usize::MAX; self.n];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(Item(0.0, s));
        }
        while let Some(Item(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    par[v] = u;
                    heap.push(Item(nd, v));
                }
            }
        }
        if let Some(p) = parents {
            *p = par;
        }
        dist
    }

    fn shortest_path(&self, from: usize, to: usize) -> Result<(Vec<usize>, f64)> {
        let mut par = Vec::new();
        let dist = self.dijkstra(&[from], Some(&mut par));
        if !dist[to].is_finite() {
            return Err(Error::Infeasible(format!(
                "site {to} unreachable from {from}"
            )));
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = par[cur];
            path.push(cur);
        }
        path.reverse();
        Ok((path, dist[to]))
    }
}

/// Nearest alive site to `site` under the shortest-path metric, excluding
/// the site itself; `None` when no other alive site is reachable.
pub fn site_nearest(g: &WeightedGraph, site: usize, alive: &[usize]) -> Option<(usize, f64)> {
    let dist = g.dijkstra(&[site], None);
    let tie = TieBreaker::ByIndex;
    let mut best: Option<(f64, usize)> = None;
    for &s in alive {
        if s == site || !dist[s].is_finite() {
            continue;
        }
        if best.is_none()
            || tie.cmp_single((dist[s], s), best.unwrap()) == Ordering::Less
        {
            best = Some((dist[s], s));
        }
    }
    best.map(|(d, s)| (s, d))
}

/// A tour over the sites: visiting order, total shortest-path length, and
/// the expanded walk through the graph.
#[derive(Clone, Debug)]
pub struct SiteTour {
    pub site_order: Vec<usize>,
    pub length: f64,
    pub walk: Vec<usize>,
}

/// Multi-fragment tour over the graph sites via a nearest-neighbor chain
/// with hard answers (Dijkstra from the endpoints of the top path).
pub fn steiner_mftsp(g: &WeightedGraph) -> Result<SiteTour> {
    let k = g.sites.len();
    if k == 0 {
        return Err(Error::InvalidParameter("no sites".into()));
    }
    if k == 1 {
        return Ok(SiteTour {
            site_order: vec![g.sites[0]],
            length: 0.0,
            walk: vec![g.sites[0]],
        });
    }
    // Connectivity of the site set.
    let d0 = g.dijkstra(&[g.sites[0]], None);
    for &s in &g.sites {
        if !d0[s].is_finite() {
            return Err(Error::Infeasible(format!("site {s} disconnected")));
        }
    }

    let tie = TieBreaker::ByIndex;
    // Paths over sites; path id -> endpoint sites.
    struct P {
        ends: (usize, usize),
    }
    let mut paths: Vec<Option<P>> = g.sites.iter().map(|&s| Some(P { ends: (s, s) })).collect();
    let mut alive: Vec<usize> = (0..k).collect();
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(k);

    // Nearest alive path to path `p` (excluding itself), by multi-source
    // Dijkstra from its endpoints; ties by (distance, path id).
    let nn_of = |g: &WeightedGraph, paths: &Vec<Option<P>>, alive: &Vec<usize>, p: usize| {
        let ends = paths[p].as_ref().unwrap().ends;
        let sources = if ends.0 == ends.1 {
            vec![ends.0]
        } else {
            vec![ends.0, ends.1]
        };
        let dist = g.dijkstra(&sources, None);
        let mut best: Option<(f64, usize)> = None;
        for &q in alive {
            if q == p {
                continue;
            }
            let qe = paths[q].as_ref().unwrap().ends;
            let d = dist[qe.0].min(dist[qe.1]);
            if best.is_none() || tie.cmp_single((d, q), best.unwrap()) == Ordering::Less {
                best = Some((d, q));
            }
        }
        best.expect("alive set has another path")
    };

    // Classic chain: extend with the nearest neighbor; on a mutual pair,
    // connect and pop two.
    let mut chain: Vec<usize> = Vec::new();
    while alive.len() > 1 {
        if chain.is_empty() {
            chain.push(*alive.iter().min().unwrap());
            continue;
        }
        let top = *chain.last().unwrap();
        let (w, d_tw) = {
            let (d, w) = nn_of(g, &paths, &alive, top);
            (w, d)
        };
        let prev = chain.len().checked_sub(2).map(|i| chain[i]);
        if prev == Some(w) {
            // Mutually nearest: connect at the closest endpoint sites.
            let ea = paths[top].as_ref().unwrap().ends;
            let eb = paths[w].as_ref().unwrap().ends;
            let _ = d_tw;
            let mut best: Option<(f64, (usize, usize))> = None;
            for y in [eb.0, eb.1] {
                // Which endpoint of `top` realizes dist_top[y]: re-run a
                // single-source check for determinism.
                for x in [ea.0, ea.1] {
                    let dx = g.dijkstra(&[x], None)[y];
                    let key = (dx, TieBreaker::norm_pair((x, y)));
                    if best.is_none() || tie.cmp_pair(key, best.unwrap()) == Ordering::Less {
                        best = Some(key);
                    }
                }
            }
            let (bx, by) = best.unwrap().1;
            let (bx, by) = if bx == ea.0 || bx == ea.1 {
                (bx, by)
            } else {
                (by, bx)
            };
            edges.push((bx, by));
            let other = |e: (usize, usize), used: usize| if e.0 == used { e.1 } else { e.0 };
            let merged = P {
                ends: (other(ea, bx), other(eb, by)),
            };
            let id = paths.len();
            paths.push(Some(merged));
            paths[top] = None;
            paths[w] = None;
            alive.retain(|&x| x != top && x != w);
            alive.push(id);
            chain.pop();
            chain.pop();
        } else {
            chain.push(w);
        }
    }

    let last = paths[alive[0]].as_ref().unwrap().ends;
    edges.push((last.0, last.1));

    // Site visiting order from the connection edges.
    let site_index: std::collections::HashMap<usize, usize> = g
        .sites
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, i))
        .collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::with_capacity(2); k];
    for &(a, b) in &edges {
        let (ia, ib) = (site_index[&a], site_index[&b]);
        adj[ia].push(ib);
        adj[ib].push(ia);
    }
    let mut order_idx = Vec::with_capacity(k);
    order_idx.push(0);
    let (mut prev, mut cur) = (usize::MAX, 0usize);
    while order_idx.len() < k {
        let next = if adj[cur][0] != prev { adj[cur][0] } else { adj[cur][1] };
        order_idx.push(next);
        prev = cur;
        cur = next;
    }
    let site_order: Vec<usize> = order_idx.iter().map(|&i| g.sites[i]).collect();

    // Expanded walk and total length by per-leg shortest paths.
    let mut walk = vec![site_order[0]];
    let mut length = 0.0;
    for i in 0..k {
        let from = site_order[i];
        let to = site_order[(i + 1) % k];
        let (leg, d) = g.shortest_path(from, to)?;
        length += d;
        walk.extend_from_slice(&leg[1..]);
    }
    Ok(SiteTour {
        site_order,
        length,
        walk,
    })
}
