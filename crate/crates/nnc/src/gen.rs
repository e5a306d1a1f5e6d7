//! Seeded, deterministic instance generators.
//!
//! Every generator takes an explicit seed and enforces the preconditions of
//! its consumer: generic position for points (pairwise distances separated
//! by at least 1e-9, so the distance order is robust), strictly positive
//! attribute vectors, sorted cover positions, distinct motorcycle starts.
//! Enforcement is by resampling, which terminates fast because collisions
//! are rare for continuous draws.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cover::CoverInstance;
use crate::error::{Error, Result};
use crate::geom::{LpMetric, Point};
use crate::matching::MatchInstance;
use crate::mftsp::DistanceMatrix;
use crate::motorcycle::Motorcycle;
use crate::steiner::WeightedGraph;

pub const MIN_GAP: f64 = 1e-9;

/// Uniform points in `[0, 100)^dim`. Up to 512 points the pairwise
/// distances are checked to be separated by at least `MIN_GAP` (resampling
/// otherwise). Beyond that the check is skipped: the guarantee exists for
/// the exact-order cross-checks, which run at desk scale, and at larger n
/// the birthday bound makes full separation undrawable anyway.
pub fn gen_points(n: usize, metric: LpMetric, seed: u64) -> Result<Vec<Point>> {
    let dim = metric.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..100 {
        let pts: Vec<Point> = (0..n)
            .map(|_| Point((0..dim).map(|_| rng.random_range(0.0..100.0)).collect()))
            .collect();
        if n > 512 || distances_separated(&pts, metric) {
            return Ok(pts);
        }
    }
    Err(Error::Degenerate(
        "could not draw points with separated distances".into(),
    ))
}

fn distances_separated(pts: &[Point], metric: LpMetric) -> bool {
    let n = pts.len();
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(metric.dist(pts[i].coords(), pts[j].coords()));
        }
    }
    d.sort_by(f64::total_cmp);
    d.windows(2).all(|w| w[1] - w[0] >= MIN_GAP)
}

/// Symmetric positive matrix with zero diagonal and all off-diagonal
/// entries separated by at least `MIN_GAP`.
pub fn gen_symmetric_matrix(n: usize, seed: u64) -> Result<DistanceMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'outer: for _attempt in 0..100 {
        let mut rows = vec![vec![0.0; n]; n];
        let mut vals = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let v = rng.random_range(1.0..100.0);
                rows[i][j] = v;
                rows[j][i] = v;
                vals.push(v);
            }
        }
        vals.sort_by(f64::total_cmp);
        if !vals.windows(2).all(|w| w[1] - w[0] >= MIN_GAP) {
            continue 'outer;
        }
        return DistanceMatrix::new(rows);
    }
    Err(Error::Degenerate(
        "could not draw a matrix with separated entries".into(),
    ))
}

/// Sorted clients and servers in `[0, 1000)`, all positions (merged across
/// both lists) separated by at least `MIN_GAP`.
pub fn gen_cover(n_clients: usize, m_servers: usize, seed: u64) -> Result<CoverInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..100 {
        let mut clients: Vec<f64> = (0..n_clients)
            .map(|_| rng.random_range(0.0..1000.0))
            .collect();
        let mut servers: Vec<f64> = (0..m_servers)
            .map(|_| rng.random_range(0.0..1000.0))
            .collect();
        clients.sort_by(f64::total_cmp);
        servers.sort_by(f64::total_cmp);
        let mut merged: Vec<f64> = clients.iter().chain(servers.iter()).copied().collect();
        merged.sort_by(f64::total_cmp);
        if merged.windows(2).all(|w| w[1] - w[0] >= MIN_GAP) {
            return CoverInstance::new(clients, servers);
        }
    }
    Err(Error::Degenerate(
        "could not draw separated cover positions".into(),
    ))
}

/// Motorcycles with distinct starts in `[0, 100)^2`, random directions, and
/// speeds in `[0.5, 2)`.
pub fn gen_motorcycles(n: usize, seed: u64) -> Result<Vec<Motorcycle>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _attempt in 0..100 {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let start = [rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)];
            let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let speed = rng.random_range(0.5..2.0);
            out.push(Motorcycle::new(start, [angle.cos(), angle.sin()], speed)?);
        }
        let mut ok = true;
        'pairs: for i in 0..n {
            for j in i + 1..n {
                let dx = out[i].start[0] - out[j].start[0];
                let dy = out[i].start[1] - out[j].start[1];
                if (dx * dx + dy * dy).sqrt() < 1e-6 {
                    ok = false;
                    break 'pairs;
                }
            }
        }
        if ok {
            return Ok(out);
        }
    }
    Err(Error::Degenerate("could not draw distinct starts".into()))
}

/// A deterministic three-motorcycle nearest-neighbor cycle: a pinwheel
/// around an equilateral triangle where each motorcycle aims just ahead of
/// the next one's start, so each crashes into the next one's trace.
/// Distinct speeds keep the crash times apart.
pub fn gen_rps_cycle() -> Vec<Motorcycle> {
    let v = [[0.0, 0.0], [4.0, 0.0], [2.0, 2.0 * 3.0f64.sqrt()]];
    let delta = [0.5, 0.55, 0.6];
    let speeds = [1.0, 1.03, 0.97];
    // Fixed point of "aim at the next start plus delta along its direction".
    let mut dirs = [[0.0f64; 2]; 3];
    for i in 0..3 {
        let j = (i + 1) % 3;
        let dx = v[j][0] - v[i][0];
        let dy = v[j][1] - v[i][1];
        let n = (dx * dx + dy * dy).sqrt();
        dirs[i] = [dx / n, dy / n];
    }
    for _ in 0..64 {
        let mut next = dirs;
        for i in 0..3 {
            let j = (i + 1) % 3;
            let tx = v[j][0] + delta[j] * dirs[j][0] - v[i][0];
            let ty = v[j][1] + delta[j] * dirs[j][1] - v[i][1];
            let n = (tx * tx + ty * ty).sqrt();
            next[i] = [tx / n, ty / n];
        }
        dirs = next;
    }
    (0..3)
        .map(|i| Motorcycle::new(v[i], dirs[i], speeds[i]).unwrap())
        .collect()
}

/// Strictly positive attribute vectors in `[0.5, 10)^k` for both sides.
pub fn gen_matching(n: usize, k: usize, seed: u64) -> Result<MatchInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(0.5..10.0)).collect())
            .collect()
    };
    let left = side(&mut rng);
    let right = side(&mut rng);
    MatchInstance::new(k, left, right)
}

/// A connected grid graph (rows x cols) with random weights in `[0.5, 1.5)`
/// plus `extra` random chords, and `n_sites` distinct random sites.
pub fn gen_graph(rows: usize, cols: usize, n_sites: usize, seed: u64) -> Result<WeightedGraph> {
    if rows * cols == 0 {
        return Err(Error::InvalidParameter("empty grid".into()));
    }
    let n = rows * cols;
    if n_sites > n {
        return Err(Error::InvalidParameter("more sites than nodes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1), rng.random_range(0.5..1.5)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c), rng.random_range(0.5..1.5)));
            }
        }
    }
    let extra = (rows + cols) / 2;
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            edges.push((a, b, rng.random_range(1.0..3.0)));
        }
    }
    let mut sites: Vec<usize> = (0..n).collect();
    for i in 0..n_sites {
        let j = rng.random_range(i..n);
        sites.swap(i, j);
    }
    sites.truncate(n_sites);
    sites.sort_unstable();
    WeightedGraph::new(n, &edges, sites)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_points() {
        let m = LpMetric::l2(3);
        let a = gen_points(50, m, 9).unwrap();
        let b = gen_points(50, m, 9).unwrap();
        assert_eq!(a, b);
        let c = gen_points(50, m, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cover_generator_sorted_and_separated() {
        for seed in 0..50 {
            let inst = gen_cover(30, 10, seed).unwrap();
            assert!(inst.clients.windows(2).all(|w| w[0] < w[1]));
            assert!(inst.servers.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn matching_generator_strictly_positive() {
        // Validator pass over many draws.
        for seed in 0..100 {
            let inst = gen_matching(20, 5, seed).unwrap();
            for v in inst.left.iter().chain(inst.right.iter()) {
                assert!(v.iter().all(|x| *x > 0.0));
            }
        }
    }

    #[test]
    fn point_distances_separated() {
        let m = LpMetric::l2(2);
        let pts = gen_points(100, m, 3).unwrap();
        assert!(distances_separated(&pts, m));
    }
}
