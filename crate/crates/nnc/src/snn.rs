//! Soft nearest-neighbor structures for points and paths.
//!
//! A soft nearest-neighbor (SNN) query from `q` returns either the true
//! nearest neighbor of `q` among the alive points (a *hard* answer) or two
//! points that are strictly closer to each other than `q` is to its nearest
//! neighbor (a *soft* answer). The three-way variant strengthens soft
//! answers to three pairwise-closer points, which is what makes the path
//! structure work when two returned endpoints belong to the same path.
//!
//! Implementation: one k-ANN query with validated parameters `(eps, k)`.
//! Writing `r1` for the closest returned distance, `r1/(1+eps)` is a lower
//! bound on the true nearest-neighbor distance, so any returned pair closer
//! than that threshold is a certified soft answer. If no such pair exists,
//! validity of `(eps, k)` over the strengthened shell (outer radius
//! `(1+eps)^(k+1)`, see [`crate::params`]) forces the true nearest neighbor
//! to be among the returned points, so the closest returned point is a hard
//! answer.

use crate::error::{Error, Result};
use crate::geom::{LpMetric, Point, TieBreaker};
use crate::kann::KannIndex;
use crate::params::{Arity, ValidParams};

pub type PathId = usize;

/// Answer to a soft nearest-neighbor query, in terms of point ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SnnAnswer {
    /// The true nearest neighbor of the query among alive points.
    Hard(usize),
    /// Two alive points strictly closer to each other than the query is to
    /// its true nearest neighbor.
    Soft(usize, usize),
    /// Three alive points pairwise strictly closer (three-way structures).
    SoftTriple(usize, usize, usize),
}

/// How to parameterize a soft index.
#[derive(Clone, Debug)]
pub enum SnnConfig {
    /// Degenerate exact mode: epsilon = 0 and k = 1, so the inner index is
    /// an exact nearest-neighbor structure and every answer is hard. Useful
    /// as a baseline and for benchmarking the chain drivers.
    Exact,
    /// Validated `(eps, k)` from the parameter finder.
    Certified(ValidParams),
}

pub struct SnnIndex {
    inner: KannIndex,
    epsilon: f64,
    k: usize,
    arity: Arity,
}

impl SnnIndex {
    /// Build from certified parameters. The certificate must cover the
    /// strengthened shell; the analytic plane constant does not (a scaled
    /// decagon defeats it) and is rejected here.
    pub fn new(points: &[Point], metric: LpMetric, params: &ValidParams) -> Result<Self> {
        if !params.covers_strengthened_shell() {
            return Err(Error::InvalidParameter(
                "soft queries need parameters certified for the strengthened shell; \
                 use find_params output rather than the analytic constant"
                    .into(),
            ));
        }
        if params.k < 2 {
            return Err(Error::InvalidParameter("k must be at least 2".into()));
        }
        Ok(SnnIndex {
            inner: KannIndex::build(points, metric, params.epsilon)?,
            epsilon: params.epsilon,
            k: params.k,
            arity: params.arity,
        })
    }

    /// Exact mode: epsilon = 0, k = 1; every answer is hard.
    pub fn exact(points: &[Point], metric: LpMetric, arity: Arity) -> Result<Self> {
        Ok(SnnIndex {
            inner: KannIndex::build(points, metric, 0.0)?,
            epsilon: 0.0,
            k: 1,
            arity,
        })
    }

    pub fn with_config(points: &[Point], metric: LpMetric, config: &SnnConfig) -> Result<Self> {
        match config {
            SnnConfig::Exact => Self::exact(points, metric, Arity::ThreeWay),
            SnnConfig::Certified(p) => Self::new(points, metric, p),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }

    pub fn metric(&self) -> LpMetric {
        self.inner.metric()
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn point(&self, id: usize) -> &[f64] {
        self.inner.point(id)
    }

    pub fn insert(&mut self, p: &Point) -> Result<usize> {
        self.inner.insert(p)
    }

    pub fn delete(&mut self, id: usize) -> Result<()> {
        self.inner.delete(id)
    }

    pub fn restore(&mut self, id: usize) -> Result<()> {
        self.inner.restore(id)
    }

    /// Soft nearest-neighbor query. The caller must remove `q` first when
    /// querying from a member point (remove, query, re-add).
    pub fn query(&self, q: &Point) -> Result<SnnAnswer> {
        if self.inner.is_empty() {
            return Err(Error::Empty);
        }
        let cands = self.inner.query(q, self.k)?;
        let r1 = cands[0].1;
        let threshold = r1 / (1.0 + self.epsilon);
        let tie = TieBreaker::ByIndex;
        let m = self.inner.metric();
        match self.arity {
            Arity::TwoWay => {
                let mut best: Option<(f64, (usize, usize))> = None;
                for i in 0..cands.len() {
                    for j in i + 1..cands.len() {
                        let d = m.dist(self.inner.point(cands[i].0), self.inner.point(cands[j].0));
                        let cand = (d, (cands[i].0, cands[j].0));
                        if best.is_none()
                            || tie.cmp_pair(cand, best.unwrap()) == std::cmp::Ordering::Less
                        {
                            best = Some(cand);
                        }
                    }
                }
                match best {
                    Some((d, pair)) if d < threshold => {
                        let (a, b) = TieBreaker::norm_pair(pair);
                        Ok(SnnAnswer::Soft(a, b))
                    }
                    _ => Ok(SnnAnswer::Hard(cands[0].0)),
                }
            }
            Arity::ThreeWay => {
                let n = cands.len();
                let mut d = vec![0.0; n * n];
                for i in 0..n {
                    for j in i + 1..n {
                        let v =
                            m.dist(self.inner.point(cands[i].0), self.inner.point(cands[j].0));
                        d[i * n + j] = v;
                        d[j * n + i] = v;
                    }
                }
                // First pairwise-close triple in candidate order; candidates
                // are already sorted by (distance, id), so this is
                // deterministic.
                for i in 0..n {
                    for j in i + 1..n {
                        if d[i * n + j] >= threshold {
                            continue;
                        }
                        for l in j + 1..n {
                            if d[i * n + l] < threshold && d[j * n + l] < threshold {
                                return Ok(SnnAnswer::SoftTriple(
                                    cands[i].0, cands[j].0, cands[l].0,
                                ));
                            }
                        }
                    }
                }
                Ok(SnnAnswer::Hard(cands[0].0))
            }
        }
    }
}

/// Closest pair by n soft queries (remove, query, re-add), keeping the best
/// hard or soft pair seen. Exact-mode index inside.
pub fn closest_pair(points: &[Point], metric: LpMetric) -> Result<(usize, usize)> {
    let idx = SnnIndex::exact(points, metric, Arity::TwoWay)?;
    closest_pair_driver(points, idx)
}

/// Closest pair through a certified soft index; exercises soft answers.
pub fn closest_pair_with_params(
    points: &[Point],
    metric: LpMetric,
    params: &ValidParams,
) -> Result<(usize, usize)> {
    let idx = SnnIndex::new(points, metric, params)?;
    closest_pair_driver(points, idx)
}

fn closest_pair_driver(points: &[Point], mut idx: SnnIndex) -> Result<(usize, usize)> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "closest pair needs at least two points".into(),
        ));
    }
    let tie = TieBreaker::ByIndex;
    let m = idx.metric();
    let mut best: Option<(f64, (usize, usize))> = None;
    let push = |best: &mut Option<(f64, (usize, usize))>, d: f64, pair: (usize, usize)| {
        let cand = (d, pair);
        if best.is_none() || tie.cmp_pair(cand, best.unwrap()) == std::cmp::Ordering::Less {
            *best = Some(cand);
        }
    };
    for i in 0..points.len() {
        idx.delete(i)?;
        let ans = idx.query(&points[i])?;
        match ans {
            SnnAnswer::Hard(j) => {
                let d = m.dist(points[i].coords(), idx.point(j));
                push(&mut best, d, (i, j));
            }
            SnnAnswer::Soft(a, b) => {
                let d = m.dist(idx.point(a), idx.point(b));
                push(&mut best, d, (a, b));
            }
            SnnAnswer::SoftTriple(a, b, c) => {
                for (x, y) in [(a, b), (a, c), (b, c)] {
                    let d = m.dist(idx.point(x), idx.point(y));
                    push(&mut best, d, (x, y));
                }
            }
        }
        idx.restore(i)?;
    }
    Ok(TieBreaker::norm_pair(best.unwrap().1))
}

// ---------------------------------------------------------------------------
// Paths.

/// An open chain identified by its two endpoints (equal for a singleton).
#[derive(Clone, Debug)]
pub struct PathFragment {
    pub id: PathId,
    pub a: Point,
    pub b: Point,
}

impl PathFragment {
    pub fn new(id: PathId, a: Point, b: Point) -> Self {
        PathFragment { id, a, b }
    }

    pub fn singleton(id: PathId, p: Point) -> Self {
        PathFragment {
            id,
            a: p.clone(),
            b: p,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.a == self.b
    }
}

/// Distance between two paths: minimum over their endpoint pairs.
pub fn path_distance(metric: &LpMetric, a: (&Point, &Point), b: (&Point, &Point)) -> f64 {
    let mut d = f64::INFINITY;
    for x in [a.0, a.1] {
        for y in [b.0, b.1] {
            d = d.min(metric.dist(x.coords(), y.coords()));
        }
    }
    d
}

/// Answer to a soft nearest-neighbor query over paths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PathAnswer {
    /// The true nearest path of the query.
    HardPath(PathId),
    /// Two distinct paths strictly closer to each other than the query is
    /// to its nearest path.
    SoftPaths(PathId, PathId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum PathBranch {
    AllHard,
    HardSoft,
    AllSoft,
}

struct PathEntry {
    pts: (Point, Point),
    eids: (usize, Option<usize>),
    alive: bool,
}

/// Soft nearest-neighbor structure over paths: a three-way point structure
/// over all path endpoints plus the endpoint-to-path map. Singleton paths
/// contribute one endpoint, others two.
pub struct PathSnnIndex {
    inner: SnnIndex,
    owner: Vec<PathId>,
    paths: Vec<Option<PathEntry>>,
    alive_paths: usize,
}

impl PathSnnIndex {
    pub fn with_config(
        fragments: &[PathFragment],
        metric: LpMetric,
        config: &SnnConfig,
    ) -> Result<Self> {
        if let SnnConfig::Certified(p) = config {
            if p.arity != Arity::ThreeWay {
                return Err(Error::InvalidParameter(
                    "path structure needs three-way parameters".into(),
                ));
            }
        }
        let inner = SnnIndex::with_config(&[], metric, config)?;
        let mut idx = PathSnnIndex {
            inner,
            owner: Vec::new(),
            paths: Vec::new(),
            alive_paths: 0,
        };
        for f in fragments {
            idx.insert_path(f)?;
        }
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.alive_paths
    }

    pub fn is_empty(&self) -> bool {
        self.alive_paths == 0
    }

    pub fn is_alive(&self, id: PathId) -> bool {
        matches!(self.paths.get(id), Some(Some(e)) if e.alive)
    }

    pub fn endpoints(&self, id: PathId) -> Option<(&Point, &Point)> {
        self.paths
            .get(id)
            .and_then(|e| e.as_ref())
            .map(|e| (&e.pts.0, &e.pts.1))
    }

    /// Distance between two stored paths.
    pub fn distance(&self, a: PathId, b: PathId) -> Result<f64> {
        let ea = self.entry(a)?;
        let eb = self.entry(b)?;
        Ok(path_distance(
            &self.inner.metric(),
            (&ea.pts.0, &ea.pts.1),
            (&eb.pts.0, &eb.pts.1),
        ))
    }

    fn entry(&self, id: PathId) -> Result<&PathEntry> {
        self.paths
            .get(id)
            .and_then(|e| e.as_ref())
            .filter(|e| e.alive)
            .ok_or(Error::BadId(id))
    }

    pub fn insert_path(&mut self, f: &PathFragment) -> Result<()> {
        if self.is_alive(f.id) {
            return Err(Error::BadId(f.id));
        }
        let e0 = self.inner.insert(&f.a)?;
        self.owner.resize(self.owner.len().max(e0 + 1), usize::MAX);
        self.owner[e0] = f.id;
        let e1 = if f.is_singleton() {
            None
        } else {
            let e = self.inner.insert(&f.b)?;
            self.owner.resize(self.owner.len().max(e + 1), usize::MAX);
            self.owner[e] = f.id;
            Some(e)
        };
        if self.paths.len() <= f.id {
            self.paths.resize_with(f.id + 1, || None);
        }
        self.paths[f.id] = Some(PathEntry {
            pts: (f.a.clone(), f.b.clone()),
            eids: (e0, e1),
            alive: true,
        });
        self.alive_paths += 1;
        Ok(())
    }

    pub fn delete_path(&mut self, id: PathId) -> Result<()> {
        let (e0, e1) = {
            let e = self.entry(id)?;
            e.eids
        };
        self.inner.delete(e0)?;
        if let Some(e1) = e1 {
            self.inner.delete(e1)?;
        }
        self.paths[id].as_mut().unwrap().alive = false;
        self.alive_paths -= 1;
        Ok(())
    }

    /// Undo a `delete_path` (the remove/query/re-add pattern).
    pub fn restore_path(&mut self, id: PathId) -> Result<()> {
        let entry = self
            .paths
            .get(id)
            .and_then(|e| e.as_ref())
            .filter(|e| !e.alive)
            .ok_or(Error::BadId(id))?;
        let (e0, e1) = entry.eids;
        self.inner.restore(e0)?;
        if let Some(e1) = e1 {
            self.inner.restore(e1)?;
        }
        self.paths[id].as_mut().unwrap().alive = true;
        self.alive_paths += 1;
        Ok(())
    }

    /// Soft nearest-neighbor query for a path. The query path's endpoints
    /// must not be in the structure (the chain driver removes, queries, and
    /// re-adds).
    pub fn query(&self, q: &PathFragment) -> Result<PathAnswer> {
        Ok(self.query_with_branch(q)?.0)
    }

    pub(crate) fn query_with_branch(&self, q: &PathFragment) -> Result<(PathAnswer, PathBranch)> {
        if self.is_empty() {
            return Err(Error::Empty);
        }
        let metric = self.inner.metric();
        let qpts = (&q.a, &q.b);
        let answers: Vec<SnnAnswer> = if q.is_singleton() {
            vec![self.inner.query(&q.a)?]
        } else {
            vec![self.inner.query(&q.a)?, self.inner.query(&q.b)?]
        };

        let hard_of = |ans: &SnnAnswer| -> Option<usize> {
            match ans {
                SnnAnswer::Hard(p) => Some(*p),
                _ => None,
            }
        };
        let soft_of = |ans: &SnnAnswer| -> Option<[usize; 3]> {
            match ans {
                SnnAnswer::SoftTriple(a, b, c) => Some([*a, *b, *c]),
                // A two-way soft never happens here (the inner structure is
                // three-way), but treat it as a degenerate triple.
                SnnAnswer::Soft(a, b) => Some([*a, *b, *b]),
                SnnAnswer::Hard(_) => None,
            }
        };

        let hards: Vec<usize> = answers.iter().filter_map(hard_of).collect();
        let softs: Vec<[usize; 3]> = answers.iter().filter_map(soft_of).collect();

        if softs.is_empty() {
            // Every answer hard: the closer of the candidate paths is the
            // true nearest path.
            let best = self.best_path_for(&hards, qpts)?;
            return Ok((PathAnswer::HardPath(best), PathBranch::AllHard));
        }
        if hards.len() == 1 && softs.len() == 1 {
            // One hard answer p, one soft triple: compare the hard side
            // against the closest pair of paths induced by the triple.
            let p = hards[0];
            let (pa, pb, dpair) = self.closest_path_pair(&softs[0])?;
            let pc = self.inner.point(p);
            let dpq = metric
                .dist(q.a.coords(), pc)
                .min(metric.dist(q.b.coords(), pc));
            if dpq < dpair {
                return Ok((PathAnswer::HardPath(self.owner[p]), PathBranch::HardSoft));
            }
            return Ok((PathAnswer::SoftPaths(pa, pb), PathBranch::HardSoft));
        }
        // All answers soft: closest pair of paths among all endpoints.
        let mut pool: Vec<usize> = Vec::new();
        for t in &softs {
            pool.extend_from_slice(t);
        }
        let (pa, pb, _) = self.closest_path_pair(&pool)?;
        Ok((PathAnswer::SoftPaths(pa, pb), PathBranch::AllSoft))
    }

    /// Closest path to the query among the owners of `endpoint_ids`.
    fn best_path_for(&self, endpoint_ids: &[usize], q: (&Point, &Point)) -> Result<PathId> {
        let metric = self.inner.metric();
        let tie = TieBreaker::ByIndex;
        let mut best: Option<(f64, usize)> = None;
        for &e in endpoint_ids {
            let pid = self.owner[e];
            let entry = self.entry(pid)?;
            let d = path_distance(&metric, q, (&entry.pts.0, &entry.pts.1));
            let cand = (d, pid);
            if best.is_none() || tie.cmp_single(cand, best.unwrap()) == std::cmp::Ordering::Less {
                best = Some(cand);
            }
        }
        Ok(best.unwrap().1)
    }

    /// Closest pair of distinct paths among the owners of `endpoint_ids`.
    /// At least two distinct paths are always involved: the ids come from a
    /// pairwise-closer triple and a path has at most two endpoints.
    fn closest_path_pair(&self, endpoint_ids: &[usize]) -> Result<(PathId, PathId, f64)> {
        let tie = TieBreaker::ByIndex;
        let mut pids: Vec<PathId> = endpoint_ids.iter().map(|&e| self.owner[e]).collect();
        pids.sort_unstable();
        pids.dedup();
        debug_assert!(pids.len() >= 2, "a soft triple must span two paths");
        let mut best: Option<(f64, (usize, usize))> = None;
        for i in 0..pids.len() {
            for j in i + 1..pids.len() {
                let d = self.distance(pids[i], pids[j])?;
                let cand = (d, (pids[i], pids[j]));
                if best.is_none() || tie.cmp_pair(cand, best.unwrap()) == std::cmp::Ordering::Less
                {
                    best = Some(cand);
                }
            }
        }
        let (d, pair) = best.ok_or(Error::Empty)?;
        let (a, b) = TieBreaker::norm_pair(pair);
        Ok((a, b, d))
    }
}
