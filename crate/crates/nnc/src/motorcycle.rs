//! Motorcycle graphs via a nearest-neighbor chain over a dynamic curtain
//! store, plus a chronological brute-force oracle.
//!
//! Each motorcycle is a 2D ray with a speed; its space-time trace is a
//! vertical curtain. Undetermined motorcycles keep infinite wedge curtains
//! (as if they were to escape); a determined crash clips the curtain to a
//! slab ending at the crash point. The nearest neighbor of an undetermined
//! motorcycle is the motorcycle whose curtain it would hit first; the chain
//! walks nearest neighbors and resolves escapes, crashes into determined
//! traces, and nearest-neighbor cycles. In a cycle, the member with the
//! earliest crash time is always determined correctly; the others may be
//! invalidated by that clip (their predicted blocker can die before laying
//! the wall), so they are re-queried rather than clipped wholesale.
//!
//! Simultaneous arrivals are genuinely ambiguous, so any time comparison
//! closer than 1e-9 rejects the input as degenerate instead of tie-breaking
//! silently.

use crate::error::{Error, Result};
use crate::geom::TieBreaker;

pub const TIME_GUARD: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Motorcycle {
    pub start: [f64; 2],
    /// Direction; normalized on input.
    pub dir: [f64; 2],
    pub speed: f64,
}

impl Motorcycle {
    pub fn new(start: [f64; 2], dir: [f64; 2], speed: f64) -> Result<Self> {
        let n = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter("zero or invalid direction".into()));
        }
        if !(speed > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "speed must be positive, got {speed}"
            )));
        }
        Ok(Motorcycle {
            start,
            dir: [dir[0] / n, dir[1] / n],
            speed,
        })
    }

    /// Position after riding a geometric length `tau`.
    fn at(&self, tau: f64) -> [f64; 2] {
        [
            self.start[0] + tau * self.dir[0],
            self.start[1] + tau * self.dir[1],
        ]
    }
}

/// Final status of a motorcycle.
#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Escaped,
    Crashed {
        into: usize,
        point: [f64; 2],
        time: f64,
    },
}

/// A candidate crash: `m` hits the curtain of `into` at `point`, arriving
/// at `time` after riding geometric length `tau`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub into: usize,
    pub point: [f64; 2],
    pub tau: f64,
    pub time: f64,
}

fn cross(ax: f64, ay: f64, bx: f64, by: f64) -> f64 {
    ax * by - ay * bx
}

/// The per-motorcycle trace records: an infinite wedge while the trace is
/// unbounded, or a slab clipped at the crash length.
#[derive(Clone, Debug)]
pub struct CurtainStore {
    bikes: Vec<Motorcycle>,
    /// Geometric trace lengths; infinite for wedges.
    tau_end: Vec<f64>,
}

impl CurtainStore {
    pub fn new(bikes: &[Motorcycle]) -> Result<Self> {
        for i in 0..bikes.len() {
            for j in i + 1..bikes.len() {
                if bikes[i].start == bikes[j].start {
                    return Err(Error::Degenerate(format!(
                        "motorcycles {i} and {j} share a start"
                    )));
                }
            }
        }
        Ok(CurtainStore {
            bikes: bikes.to_vec(),
            tau_end: vec![f64::INFINITY; bikes.len()],
        })
    }

    pub fn len(&self) -> usize {
        self.bikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bikes.is_empty()
    }

    /// Clip the curtain of `id` into a slab ending at trace length `tau`.
    pub fn clip(&mut self, id: usize, tau: f64) {
        self.tau_end[id] = tau;
    }

    /// Nearest neighbor of motorcycle `m` against the current curtains: the
    /// first curtain whose wall exists strictly before `m` arrives. Linear
    /// scan over the store (the naive ray-shooting structure).
    pub fn nearest(&self, m: usize) -> Result<Option<Hit>> {
        let rider = &self.bikes[m];
        let mut best: Option<Hit> = None;
        let mut second: Option<f64> = None;
        for (j, other) in self.bikes.iter().enumerate() {
            if j == m {
                continue;
            }
            let den = cross(rider.dir[0], rider.dir[1], other.dir[0], other.dir[1]);
            if den.abs() < 1e-12 {
                // Parallel traces never interact (collinear overlaps are
                // excluded by the distinct-start, general-position input).
                continue;
            }
            let ex = other.start[0] - rider.start[0];
            let ey = other.start[1] - rider.start[1];
            let tau_m = cross(ex, ey, other.dir[0], other.dir[1]) / den;
            let tau_j = cross(ex, ey, rider.dir[0], rider.dir[1]) / den;
            if tau_m <= 0.0 || tau_j < 0.0 || tau_j > self.tau_end[j] {
                continue;
            }
            let t_m = tau_m / rider.speed;
            let t_j = tau_j / other.speed;
            if (t_m - t_j).abs() < TIME_GUARD {
                return Err(Error::Degenerate(format!(
                    "motorcycles {m} and {j} reach ({:.6}, {:.6}) simultaneously",
                    rider.at(tau_m)[0],
                    rider.at(tau_m)[1]
                )));
            }
            if t_j > t_m {
                continue; // wall not built yet when the rider passes
            }
            let hit = Hit {
                into: j,
                point: rider.at(tau_m),
                tau: tau_m,
                time: t_m,
            };
            match best {
                None => best = Some(hit),
                Some(b) => {
                    if TieBreaker::ByIndex.cmp_single((hit.time, hit.into), (b.time, b.into))
                        == std::cmp::Ordering::Less
                    {
                        second = Some(b.time);
                        best = Some(hit);
                    } else if second.is_none_or(|s| hit.time < s) {
                        second = Some(hit.time);
                    }
                }
            }
        }
        if let (Some(b), Some(s)) = (&best, second) {
            if (s - b.time).abs() < TIME_GUARD {
                return Err(Error::Degenerate(format!(
                    "motorcycle {m} has two nearest neighbors within the time guard at t = {}",
                    b.time
                )));
            }
        }
        Ok(best)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct McStats {
    pub queries: usize,
    pub clips: usize,
    /// Nearest-neighbor cycles resolved (case c).
    pub cycles: usize,
}

/// Nearest-neighbor chain computation of the motorcycle graph.
pub fn motorcycle_graph(bikes: &[Motorcycle]) -> Result<(Vec<Status>, McStats)> {
    let n = bikes.len();
    let mut store = CurtainStore::new(bikes)?;
    let mut status: Vec<Option<Status>> = vec![None; n];
    let mut stats = McStats::default();

    // Chain entries carry the stored nearest-neighbor answer of each member
    // (pointing at its successor); the invariant that pops remove every
    // entry whose answer might have gone stale keeps stored answers valid.
    let mut chain: Vec<(usize, Option<Hit>)> = Vec::new();
    let mut pos_in_chain: Vec<Option<usize>> = vec![None; n];
    let mut undetermined = n;
    let mut next_seed = 0usize;

    let pop = |chain: &mut Vec<(usize, Option<Hit>)>, pos: &mut Vec<Option<usize>>| {
        if let Some((id, _)) = chain.pop() {
            pos[id] = None;
        }
    };

    while undetermined > 0 {
        if chain.is_empty() {
            while status[next_seed].is_some() {
                next_seed += 1;
            }
            chain.push((next_seed, None));
            pos_in_chain[next_seed] = Some(chain.len() - 1);
        }
        let m = chain.last().unwrap().0;
        stats.queries += 1;
        match store.nearest(m)? {
            None => {
                // (a) no nearest neighbor: m escapes; its curtain stays.
                status[m] = Some(Status::Escaped);
                undetermined -= 1;
                pop(&mut chain, &mut pos_in_chain);
            }
            Some(hit) => {
                let m2 = hit.into;
                if status[m2].is_some() {
                    // (b) determined curtain: m crashes into it. The
                    // predecessor had m as its nearest neighbor, and m's
                    // curtain just changed, so it goes too.
                    status[m] = Some(Status::Crashed {
                        into: m2,
                        point: hit.point,
                        time: hit.time,
                    });
                    undetermined -= 1;
                    store.clip(m, hit.tau);
                    stats.clips += 1;
                    pop(&mut chain, &mut pos_in_chain);
                    pop(&mut chain, &mut pos_in_chain);
                } else if let Some(start) = pos_in_chain[m2] {
                    // (c) nearest-neighbor cycle from m2 up to m. The
                    // stored answers around the cycle are all current, and
                    // the member with the earliest crash time is safe to
                    // determine: any real crash of its blocker happens no
                    // earlier than the blocker's own store answer, which is
                    // no earlier than the minimum, so the wall is laid
                    // before the crash. Determining more members at once is
                    // not sound in general: a cycle member can die before
                    // laying the wall a predecessor was predicted to hit,
                    // in which case that predecessor needs a fresh query
                    // against the clipped store.
                    stats.cycles += 1;
                    let mut best: Option<(usize, usize, Hit)> = None;
                    for i in start..chain.len() {
                        let (id, stored) = chain[i];
                        let h = if i + 1 == chain.len() {
                            hit
                        } else {
                            let s = stored.expect("chain member has a stored answer");
                            debug_assert_eq!(s.into, chain[i + 1].0);
                            s
                        };
                        let better = match &best {
                            None => true,
                            Some((_, bid, bh)) => {
                                TieBreaker::ByIndex.cmp_single((h.time, id), (bh.time, *bid))
                                    == std::cmp::Ordering::Less
                            }
                        };
                        if better {
                            best = Some((i, id, h));
                        }
                    }
                    let (pos, id, h) = best.unwrap();
                    status[id] = Some(Status::Crashed {
                        into: h.into,
                        point: h.point,
                        time: h.time,
                    });
                    undetermined -= 1;
                    store.clip(id, h.tau);
                    stats.clips += 1;
                    // Pop the determined member and everything above it; the
                    // entry below it is re-queried when it surfaces.
                    while chain.len() > pos {
                        pop(&mut chain, &mut pos_in_chain);
                    }
                } else {
                    // (d) undetermined and not in the chain: extend.
                    chain.last_mut().unwrap().1 = Some(hit);
                    chain.push((m2, None));
                    pos_in_chain[m2] = Some(chain.len() - 1);
                }
            }
        }
    }
    debug_assert!(stats.queries <= 3 * n);
    debug_assert!(stats.clips <= n);
    let out: Vec<Status> = status.into_iter().map(|s| s.unwrap()).collect();
    debug_assert!(final_config_consistent(bikes, &out));
    Ok((out, stats))
}

/// Chronological brute-force oracle: repeatedly find the globally earliest
/// pending crash among the current traces, commit it, recompute.
pub fn mc_oracle(bikes: &[Motorcycle]) -> Result<Vec<Status>> {
    let n = bikes.len();
    let mut store = CurtainStore::new(bikes)?;
    let mut status: Vec<Option<Status>> = vec![None; n];
    loop {
        // Earliest pending crash over all undetermined motorcycles, against
        // live traces (undetermined traces are unbounded: they are still
        // riding at any time before their own commit).
        let mut best: Option<(usize, Hit)> = None;
        for m in 0..n {
            if status[m].is_some() {
                continue;
            }
            if let Some(hit) = store.nearest(m)? {
                let better = match &best {
                    None => true,
                    Some((bm, bh)) => {
                        TieBreaker::ByIndex.cmp_single((hit.time, m), (bh.time, *bm))
                            == std::cmp::Ordering::Less
                    }
                };
                if better {
                    best = Some((m, hit));
                }
            }
        }
        match best {
            None => break,
            Some((m, hit)) => {
                status[m] = Some(Status::Crashed {
                    into: hit.into,
                    point: hit.point,
                    time: hit.time,
                });
                store.clip(m, hit.tau);
            }
        }
    }
    Ok(status
        .into_iter()
        .map(|s| s.unwrap_or(Status::Escaped))
        .collect())
}

/// Output invariant: every crash point is covered strictly earlier by the
/// final trace of the crashed-into motorcycle, and no final trace blocks an
/// escaped ray.
pub fn final_config_consistent(bikes: &[Motorcycle], statuses: &[Status]) -> bool {
    let n = bikes.len();
    let trace_end = |i: usize| -> f64 {
        match &statuses[i] {
            Status::Escaped => f64::INFINITY,
            Status::Crashed { point, .. } => {
                let dx = point[0] - bikes[i].start[0];
                let dy = point[1] - bikes[i].start[1];
                (dx * dx + dy * dy).sqrt()
            }
        }
    };
    for m in 0..n {
        match &statuses[m] {
            Status::Crashed { into, point, time } => {
                let j = *into;
                // The blocker passed the point strictly earlier and its
                // final trace reaches it.
                let dxj = point[0] - bikes[j].start[0];
                let dyj = point[1] - bikes[j].start[1];
                let tau_j = (dxj * dxj + dyj * dyj).sqrt();
                let t_j = tau_j / bikes[j].speed;
                if !(t_j < *time) || tau_j > trace_end(j) + 1e-9 {
                    return false;
                }
            }
            Status::Escaped => {
                // No final trace blocks the ray.
                let rider = &bikes[m];
                for (j, other) in bikes.iter().enumerate() {
                    if j == m {
                        continue;
                    }
                    let den = cross(rider.dir[0], rider.dir[1], other.dir[0], other.dir[1]);
                    if den.abs() < 1e-12 {
                        continue;
                    }
                    let ex = other.start[0] - rider.start[0];
                    let ey = other.start[1] - rider.start[1];
                    let tau_m = cross(ex, ey, other.dir[0], other.dir[1]) / den;
                    let tau_j = cross(ex, ey, rider.dir[0], rider.dir[1]) / den;
                    if tau_m <= 0.0 || tau_j < 0.0 || tau_j > trace_end(j) {
                        continue;
                    }
                    if tau_j / other.speed < tau_m / rider.speed - TIME_GUARD {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Statuses match within the positional and time tolerances.
pub fn statuses_agree(a: &[Status], b: &[Status], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    a.iter().zip(b).all(|(x, y)| match (x, y) {
        (Status::Escaped, Status::Escaped) => true,
        (
            Status::Crashed {
                into: i1,
                point: p1,
                time: t1,
            },
            Status::Crashed {
                into: i2,
                point: p2,
                time: t2,
            },
        ) => {
            i1 == i2
                && (t1 - t2).abs() <= tol
                && (p1[0] - p2[0]).abs() <= tol
                && (p1[1] - p2[1]).abs() <= tol
        }
        _ => false,
    })
}
