//! 1D server cover with cost = sum of radii: the nearest-neighbor-chain
//! 2-approximation, an exact dynamic-programming oracle, greedy baselines,
//! adversarial instance searches, and the 1.5D greedy lower-bound
//! experiment.
//!
//! Clients and servers live on a line. The chain algorithm groups them into
//! clusters: client clusters of still-uncovered clients (an interval) and
//! server clusters (an interval plus the two servers whose disks reach
//! furthest left and right). Merging a client cluster into a server cluster
//! grows the cheaper extremal server's disk over the whole client interval;
//! because a disk grows on both sides of its server, a merge can cascade
//! into clusters on the opposite side.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sorted clients and servers. Within each list positions strictly
/// increase; a client may coincide with a server (it is then covered by a
/// zero-radius disk).
#[derive(Clone, Debug)]
pub struct CoverInstance {
    pub clients: Vec<f64>,
    pub servers: Vec<f64>,
}

impl CoverInstance {
    pub fn new(clients: Vec<f64>, servers: Vec<f64>) -> Result<Self> {
        for list in [&clients, &servers] {
            for w in list.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::InvalidParameter(
                        "positions must be strictly increasing".into(),
                    ));
                }
            }
            if list.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter("positions must be finite".into()));
            }
        }
        Ok(CoverInstance { clients, servers })
    }
}

#[derive(Clone, Debug)]
pub struct CoverSolution {
    pub radii: Vec<f64>,
}

impl CoverSolution {
    pub fn cost(&self) -> f64 {
        self.radii.iter().sum()
    }

    /// Every client inside some closed disk. Radii produced by the cover
    /// algorithms put clients exactly on disk boundaries, so the check
    /// allows one-ulp-scale slack (well below the 1e-9 position gaps the
    /// generators guarantee).
    pub fn covers(&self, inst: &CoverInstance) -> bool {
        const TOL: f64 = 1e-10;
        if inst.clients.is_empty() {
            return true;
        }
        // Sweep the union of the disks against the sorted clients.
        let mut disks: Vec<(f64, f64)> = inst
            .servers
            .iter()
            .zip(&self.radii)
            .map(|(&s, &r)| (s - r - TOL, s + r + TOL))
            .collect();
        disks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut di = 0;
        let mut reach = f64::NEG_INFINITY;
        for &c in &inst.clients {
            while di < disks.len() && disks[di].0 <= c {
                reach = reach.max(disks[di].1);
                di += 1;
            }
            if c > reach {
                return false;
            }
        }
        true
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct CoverStats {
    pub merges: usize,
}

/// Per-client charging intervals recorded during audited runs; open
/// intervals, pairwise disjoint, summing to the solution cost.
#[derive(Clone, Debug, Default)]
pub struct CoverageAudit {
    pub intervals: Vec<(f64, f64)>,
}

pub fn cover_nnc(inst: &CoverInstance) -> Result<(CoverSolution, CoverStats)> {
    let (sol, stats, _) = cover_nnc_impl(inst, false)?;
    Ok((sol, stats))
}

/// As `cover_nnc`, but records coverage intervals and checks the loop-head
/// invariants (cluster disjointness, chain prefix, decreasing gaps).
pub fn cover_nnc_audited(inst: &CoverInstance) -> Result<(CoverSolution, CoverStats, CoverageAudit)> {
    cover_nnc_impl(inst, true)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SideOf {
    Left,
    Right,
}

#[derive(Clone, Debug)]
enum Kind {
    /// Still-uncovered clients `clients[lo..=hi]`.
    Client { lo: usize, hi: usize },
    /// Interval reached by the cluster's disks plus its extremal servers.
    Server { l: f64, r: f64, sl: usize, sr: usize },
}

#[derive(Clone, Debug)]
struct Cl {
    kind: Kind,
    prev: Option<usize>,
    next: Option<usize>,
    alive: bool,
}

struct State<'a> {
    inst: &'a CoverInstance,
    nodes: Vec<Cl>,
    radii: Vec<f64>,
    count: usize,
    merges: usize,
    audit: Option<CoverageAudit>,
}

impl<'a> State<'a> {
    fn interval(&self, i: usize) -> (f64, f64) {
        match &self.nodes[i].kind {
            Kind::Client { lo, hi } => (self.inst.clients[*lo], self.inst.clients[*hi]),
            Kind::Server { l, r, .. } => (*l, *r),
        }
    }

    fn unlink_right_neighbor(&mut self, of: usize) -> usize {
        let e = self.nodes[of].next.unwrap();
        let after = self.nodes[e].next;
        self.nodes[of].next = after;
        if let Some(a) = after {
            self.nodes[a].prev = Some(of);
        }
        self.nodes[e].alive = false;
        e
    }

    fn unlink_left_neighbor(&mut self, of: usize) -> usize {
        let e = self.nodes[of].prev.unwrap();
        let before = self.nodes[e].prev;
        self.nodes[of].prev = before;
        if let Some(b) = before {
            self.nodes[b].next = Some(of);
        }
        self.nodes[e].alive = false;
        e
    }

    /// Rewrite `at` in place with the merged kind; links are untouched, so
    /// the list keeps its memory layout.
    fn replace(&mut self, at: usize, kind: Kind) -> usize {
        self.nodes[at].kind = kind;
        at
    }

    /// Cover the client range from the cheaper extremal server of the
    /// server kind; returns the merged kind, whether a disk grew, and the
    /// side of the clients relative to the grown server.
    fn cover_clients(
        &mut self,
        server: &Kind,
        lo: usize,
        hi: usize,
    ) -> (Kind, bool, SideOf) {
        let (l, r, sl, sr) = match server {
            Kind::Server { l, r, sl, sr } => (*l, *r, *sl, *sr),
            _ => unreachable!(),
        };
        let (p, q) = (self.inst.clients[lo], self.inst.clients[hi]);
        let required = |s: usize| -> f64 {
            let sp = self.inst.servers[s];
            (sp - p).abs().max((sp - q).abs())
        };
        let inc = |s: usize, req: f64| -> f64 { (req - self.radii[s]).max(0.0) };
        let (req_l, req_r) = (required(sl), required(sr));
        let (inc_l, inc_r) = (inc(sl, req_l), inc(sr, req_r));
        // Cheaper increment; ties toward the smaller server id.
        let (s, req) = if inc_l < inc_r || (inc_l == inc_r && sl <= sr) {
            (sl, req_l)
        } else {
            (sr, req_r)
        };
        let sp = self.inst.servers[s];
        let side = if p > sp { SideOf::Right } else { SideOf::Left };
        let grew = req > self.radii[s];
        if grew {
            if let Some(audit) = &mut self.audit {
                // Clients newly covered by this expansion, charged from the
                // old boundary outward.
                let r_old = self.radii[s];
                match side {
                    SideOf::Right => {
                        let b_old = sp + r_old;
                        let mut prev = b_old;
                        for i in lo..=hi {
                            let c = self.inst.clients[i];
                            if c > b_old {
                                audit.intervals.push((prev, c));
                                prev = c;
                            }
                        }
                    }
                    SideOf::Left => {
                        let b_old = sp - r_old;
                        let mut prev = b_old;
                        for i in (lo..=hi).rev() {
                            let c = self.inst.clients[i];
                            if c < b_old {
                                audit.intervals.push((c, prev));
                                prev = c;
                            }
                        }
                    }
                }
            }
            self.radii[s] = req;
        }
        let reach_l = sp - self.radii[s];
        let reach_r = sp + self.radii[s];
        let (nl, nsl) = if reach_l < l || (reach_l == l && s < sl) {
            (reach_l, s)
        } else {
            (l, sl)
        };
        let (nr, nsr) = if reach_r > r || (reach_r == r && s < sr) {
            (reach_r, s)
        } else {
            (r, sr)
        };
        (
            Kind::Server {
                l: nl,
                r: nr,
                sl: nsl,
                sr: nsr,
            },
            grew,
            side,
        )
    }

    /// Merge the clusters `a` (in the list) and its neighbor on `side`;
    /// returns (merged node id, disk grew, side of covered clients).
    fn merge_with_neighbor(&mut self, a: usize, side: SideOf) -> (usize, bool, Option<SideOf>) {
        let e = match side {
            SideOf::Left => self.unlink_left_neighbor(a),
            SideOf::Right => self.unlink_right_neighbor(a),
        };
        self.merges += 1;
        let (left_id, right_id) = match side {
            SideOf::Left => (e, a),
            SideOf::Right => (a, e),
        };
        let lk = self.nodes[left_id].kind.clone();
        let rk = self.nodes[right_id].kind.clone();
        let (kind, grew, client_side) = match (&lk, &rk) {
            (Kind::Client { lo, hi }, Kind::Client { lo: lo2, hi: hi2 }) => {
                debug_assert_eq!(hi + 1, *lo2, "client ranges must be adjacent");
                (
                    Kind::Client {
                        lo: *lo,
                        hi: *hi2,
                    },
                    false,
                    None,
                )
            }
            (
                Kind::Server { l, r, sl, sr },
                Kind::Server {
                    l: l2,
                    r: r2,
                    sl: sl2,
                    sr: sr2,
                },
            ) => {
                let (nl, nsl) = if l < l2 || (l == l2 && sl <= sl2) {
                    (*l, *sl)
                } else {
                    (*l2, *sl2)
                };
                let (nr, nsr) = if r > r2 || (r == r2 && sr <= sr2) {
                    (*r, *sr)
                } else {
                    (*r2, *sr2)
                };
                (
                    Kind::Server {
                        l: nl,
                        r: nr,
                        sl: nsl,
                        sr: nsr,
                    },
                    false,
                    None,
                )
            }
            (Kind::Client { lo, hi }, Kind::Server { .. }) => {
                let (k, grew, cs) = self.cover_clients(&rk, *lo, *hi);
                (k, grew, Some(cs))
            }
            (Kind::Server { .. }, Kind::Client { lo, hi }) => {
                let (k, grew, cs) = self.cover_clients(&lk, *lo, *hi);
                (k, grew, Some(cs))
            }
        };
        let merged = self.replace(a, kind);
        self.count -= 1;
        (merged, grew, client_side)
    }
}

fn cover_nnc_impl(
    inst: &CoverInstance,
    audited: bool,
) -> Result<(CoverSolution, CoverStats, CoverageAudit)> {
    let n = inst.clients.len();
    let m = inst.servers.len();
    if m == 0 {
        if n == 0 {
            return Ok((
                CoverSolution { radii: Vec::new() },
                CoverStats::default(),
                CoverageAudit::default(),
            ));
        }
        return Err(Error::Infeasible("clients present but no servers".into()));
    }

    // Base clusters in left-to-right order; a client coinciding with a
    // server sorts after it (it is covered by the zero-radius disk at merge
    // time either way).
    let mut nodes: Vec<Cl> = Vec::with_capacity(n + m);
    {
        let mut ci = 0;
        let mut si = 0;
        while ci < n || si < m {
            let take_server = si < m && (ci >= n || inst.servers[si] <= inst.clients[ci]);
            let kind = if take_server {
                let s = si;
                si += 1;
                Kind::Server {
                    l: inst.servers[s],
                    r: inst.servers[s],
                    sl: s,
                    sr: s,
                }
            } else {
                let c = ci;
                ci += 1;
                Kind::Client { lo: c, hi: c }
            };
            nodes.push(Cl {
                kind,
                prev: None,
                next: None,
                alive: true,
            });
        }
        for i in 0..nodes.len() {
            nodes[i].prev = i.checked_sub(1);
            nodes[i].next = if i + 1 < nodes.len() { Some(i + 1) } else { None };
        }
    }

    let mut st = State {
        inst,
        nodes,
        radii: vec![0.0; m],
        count: n + m,
        merges: 0,
        audit: if audited {
            Some(CoverageAudit::default())
        } else {
            None
        },
    };

    let mut chain: Vec<usize> = vec![0];
    while st.count > 1 {
        if audited {
            check_loop_invariants(&st, &chain);
        }
        let a = *chain.last().unwrap();
        let (al, ar) = st.interval(a);
        let gap_left = st.nodes[a].prev.map(|p| {
            let (_, pr) = st.interval(p);
            al - pr
        });
        let gap_right = st.nodes[a].next.map(|nx| {
            let (nl, _) = st.interval(nx);
            nl - ar
        });
        let go_left = match (gap_left, gap_right) {
            (Some(gl), Some(gr)) => gl <= gr,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => unreachable!("count > 1"),
        };
        if !go_left {
            chain.push(st.nodes[a].next.unwrap());
            continue;
        }

        // Merge with the left neighbor, which is the chain entry below the
        // top, then cascade while the merged cluster overlaps others.
        debug_assert!(chain.len() >= 2 && chain[chain.len() - 2] == st.nodes[a].prev.unwrap());
        chain.pop();
        chain.pop();
        let (mut merged, grew, client_side) = st.merge_with_neighbor(a, SideOf::Left);
        chain.push(merged);

        if grew {
            // The disk grew on both sides of its server; scan away from the
            // covered clients, flipping direction after each merge with a
            // partially-overlapping client cluster (whose coverage grows
            // the disk again).
            let mut dir = match client_side.unwrap() {
                SideOf::Left => SideOf::Right,
                SideOf::Right => SideOf::Left,
            };
            loop {
                let mut flip: Option<SideOf> = None;
                loop {
                    let e = match dir {
                        SideOf::Left => st.nodes[merged].prev,
                        SideOf::Right => st.nodes[merged].next,
                    };
                    let Some(e) = e else { break };
                    let (ml, mr) = st.interval(merged);
                    let (el, er) = st.interval(e);
                    if er < ml || el > mr {
                        break; // disjoint
                    }
                    if dir == SideOf::Left {
                        debug_assert!(
                            chain.len() >= 2 && chain[chain.len() - 2] == e,
                            "left cascade partner must sit below the top of the chain"
                        );
                        chain.pop();
                        chain.pop();
                    } else {
                        chain.pop();
                    }
                    let (new_merged, grew2, side2) = st.merge_with_neighbor(merged, dir);
                    merged = new_merged;
                    chain.push(merged);
                    flip = if grew2 {
                        side2.map(|s| match s {
                            SideOf::Left => SideOf::Right,
                            SideOf::Right => SideOf::Left,
                        })
                    } else {
                        None
                    };
                }
                match flip {
                    Some(d) => dir = d,
                    None => break,
                }
            }
        }
        if chain.is_empty() {
            chain.push(merged);
        }
    }

    debug_assert_eq!(st.merges, n + m - 1);
    let audit = st.audit.take().unwrap_or_default();
    let sol = CoverSolution { radii: st.radii };
    debug_assert!(sol.covers(inst), "solution leaves a client uncovered");
    Ok((sol, CoverStats { merges: st.merges }, audit))
}

fn check_loop_invariants(st: &State<'_>, chain: &[usize]) {
    // Walk the list from the leftmost cluster.
    let mut head = chain[0];
    while let Some(p) = st.nodes[head].prev {
        head = p;
    }
    let mut order = Vec::new();
    let mut cur = Some(head);
    while let Some(c) = cur {
        assert!(st.nodes[c].alive);
        order.push(c);
        cur = st.nodes[c].next;
    }
    assert_eq!(order.len(), st.count, "list length mismatch");
    for w in order.windows(2) {
        let (_, r) = st.interval(w[0]);
        let (l2, _) = st.interval(w[1]);
        assert!(r <= l2, "clusters overlap at a loop head");
    }
    // The chain is a prefix of the list with decreasing gaps.
    assert!(!chain.is_empty());
    assert_eq!(&order[..chain.len()], chain, "chain is not a list prefix");
    let mut prev_gap = f64::INFINITY;
    for w in chain.windows(2) {
        let (_, r) = st.interval(w[0]);
        let (l2, _) = st.interval(w[1]);
        let gap = l2 - r;
        assert!(gap <= prev_gap, "chain gaps must decrease");
        prev_gap = gap;
    }
}

// ---------------------------------------------------------------------------
// Exact oracle.

/// Optimal cost by dynamic programming over (clients prefix, servers
/// prefix): server j either covers no one or a contiguous block ending at
/// the current client. Validated against exhaustive assignment on tiny
/// instances before being trusted at size.
pub fn cover_exact(inst: &CoverInstance) -> Result<CoverSolution> {
    let n = inst.clients.len();
    let m = inst.servers.len();
    if m == 0 {
        if n == 0 {
            return Ok(CoverSolution { radii: Vec::new() });
        }
        return Err(Error::Infeasible("clients present but no servers".into()));
    }
    let inf = f64::INFINITY;
    let mut prev = vec![inf; n + 1];
    prev[0] = 0.0;
    let mut choice: Vec<Vec<usize>> = Vec::with_capacity(m);
    for j in 0..m {
        let s = inst.servers[j];
        let mut cur = vec![inf; n + 1];
        let mut pick = vec![usize::MAX; n + 1];
        cur[0] = 0.0;
        for i in 1..=n {
            cur[i] = prev[i];
            pick[i] = usize::MAX;
            for i0 in 0..i {
                if prev[i0] == inf {
                    continue;
                }
                let a = inst.clients[i0];
                let b = inst.clients[i - 1];
                let radius = (s - a).abs().max((s - b).abs());
                let cost = prev[i0] + radius;
                if cost < cur[i] {
                    cur[i] = cost;
                    pick[i] = i0;
                }
            }
        }
        choice.push(pick);
        prev = cur;
    }
    if prev[n] == inf {
        return Err(Error::Infeasible("no feasible cover".into()));
    }
    // Reconstruct radii.
    let mut radii = vec![0.0; m];
    let mut i = n;
    let mut j = m;
    // Recompute the DP tables on the way back would be costly; instead redo
    // the forward pass storing one table per server (kept above in
    // `choice`), and walk it: for each j from m down, if `choice[j-1][i]`
    // is set the block (choice..i) went to server j-1.
    while j > 0 {
        j -= 1;
        let pick = &choice[j];
        if i > 0 && pick[i] != usize::MAX {
            let i0 = pick[i];
            let s = inst.servers[j];
            let a = inst.clients[i0];
            let b = inst.clients[i - 1];
            radii[j] = (s - a).abs().max((s - b).abs());
            i = i0;
        }
    }
    debug_assert_eq!(i, 0);
    let sol = CoverSolution { radii };
    debug_assert!(sol.covers(inst));
    Ok(sol)
}

/// Exhaustive assignment oracle for tiny instances: every client assigned
/// to some server, each server's radius the max distance among its
/// assignees.
pub fn exhaustive_assignment_cost(inst: &CoverInstance) -> Result<f64> {
    let n = inst.clients.len();
    let m = inst.servers.len();
    if m == 0 {
        if n == 0 {
            return Ok(0.0);
        }
        return Err(Error::Infeasible("clients present but no servers".into()));
    }
    if m.pow(n as u32) > 50_000_000 {
        return Err(Error::InvalidParameter("instance too large".into()));
    }
    let mut best = f64::INFINITY;
    let mut assign = vec![0usize; n];
    loop {
        let mut radii = vec![0.0f64; m];
        for (c, &a) in assign.iter().enumerate() {
            radii[a] = radii[a].max((inst.clients[c] - inst.servers[a]).abs());
        }
        best = best.min(radii.iter().sum());
        // Next assignment.
        let mut k = 0;
        loop {
            if k == n {
                return Ok(best);
            }
            assign[k] += 1;
            if assign[k] < m {
                break;
            }
            assign[k] = 0;
            k += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Greedy baselines.

/// Smallest-disk-growth greedy: repeatedly make the smallest growth that
/// covers a new client.
pub fn cover_greedy_alt(inst: &CoverInstance) -> Result<CoverSolution> {
    let n = inst.clients.len();
    let m = inst.servers.len();
    if m == 0 && n > 0 {
        return Err(Error::Infeasible("clients present but no servers".into()));
    }
    let mut radii = vec![0.0; m];
    let mut covered = vec![false; n];
    let mut remaining: usize = n;
    // A zero-radius disk covers a coincident client.
    for (c, &pos) in inst.clients.iter().enumerate() {
        if inst.servers.iter().any(|&s| s == pos) {
            covered[c] = true;
            remaining -= 1;
        }
    }
    while remaining > 0 {
        let mut best: Option<(f64, usize, usize)> = None;
        for c in 0..n {
            if covered[c] {
                continue;
            }
            for s in 0..m {
                let inc = ((inst.clients[c] - inst.servers[s]).abs() - radii[s]).max(0.0);
                let cand = (inc, c, s);
                if best.is_none() || cand.0 < best.unwrap().0 {
                    best = Some(cand);
                }
            }
        }
        let (_, c, s) = best.unwrap();
        radii[s] = radii[s].max((inst.clients[c] - inst.servers[s]).abs());
        for c2 in 0..n {
            if !covered[c2] && (inst.clients[c2] - inst.servers[s]).abs() <= radii[s] {
                covered[c2] = true;
                remaining -= 1;
            }
        }
    }
    Ok(CoverSolution { radii })
}

/// The naive chain-free variant: repeatedly grow a *random* mutually-
/// nearest (uncovered client, server) pair. Loses the 2-approximation; used
/// to reproduce the divergence between matching MNNs and matching closest
/// pairs.
pub fn naive_mnn_cover(inst: &CoverInstance, seed: u64) -> Result<CoverSolution> {
    let n = inst.clients.len();
    let m = inst.servers.len();
    if m == 0 && n > 0 {
        return Err(Error::Infeasible("clients present but no servers".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut radii = vec![0.0; m];
    let mut covered = vec![false; n];
    let mut remaining = n;
    for (c, &pos) in inst.clients.iter().enumerate() {
        if inst.servers.iter().any(|&s| s == pos) {
            covered[c] = true;
            remaining -= 1;
        }
    }
    while remaining > 0 {
        let d = |c: usize, s: usize| ((inst.clients[c] - inst.servers[s]).abs() - radii[s]).max(0.0);
        // Nearest server of each uncovered client and nearest uncovered
        // client of each server.
        let mut mnn: Vec<(usize, usize)> = Vec::new();
        for c in 0..n {
            if covered[c] {
                continue;
            }
            let mut bs = 0;
            for s in 1..m {
                if d(c, s) < d(c, bs) {
                    bs = s;
                }
            }
            let mut bc = None;
            for c2 in 0..n {
                if covered[c2] {
                    continue;
                }
                if bc.is_none_or(|b| d(c2, bs) < d(b, bs)) {
                    bc = Some(c2);
                }
            }
            if bc == Some(c) {
                mnn.push((c, bs));
            }
        }
        debug_assert!(!mnn.is_empty());
        let (c, s) = mnn[rng.random_range(0..mnn.len())];
        radii[s] = radii[s].max((inst.clients[c] - inst.servers[s]).abs());
        for c2 in 0..n {
            if !covered[c2] && (inst.clients[c2] - inst.servers[s]).abs() <= radii[s] {
                covered[c2] = true;
                remaining -= 1;
            }
        }
    }
    Ok(CoverSolution { radii })
}

// ---------------------------------------------------------------------------
// Adversarial searches.

/// Search over parametric and random instances for the worst chain-vs-exact
/// ratio. The parametric family (two clients flanked by far servers with a
/// central server the optimum uses) approaches ratio 2 as its epsilon goes
/// to zero.
pub fn tightness_search(seed: u64, trials: u64) -> Result<(CoverInstance, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(CoverInstance, f64)> = None;
    for t in 0..trials {
        let inst = if t % 4 != 0 {
            // Tight family: servers at +-(2 - eps) and 0, clients at +-1.
            let eps = 10f64.powf(rng.random_range(-6.0..-0.7));
            let jit = |rng: &mut ChaCha8Rng| rng.random_range(-1e-9..1e-9);
            let scale = rng.random_range(0.5..2.0);
            let servers = vec![
                (-2.0 + eps + jit(&mut rng)) * scale,
                jit(&mut rng) * scale,
                (2.0 - eps + jit(&mut rng)) * scale,
            ];
            let clients = vec![(-1.0 + jit(&mut rng)) * scale, (1.0 + jit(&mut rng)) * scale];
            CoverInstance::new(clients, servers)?
        } else {
            let n = rng.random_range(2..8);
            let m = rng.random_range(1..5);
            let mut clients: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..10.0)).collect();
            let mut servers: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
            clients.sort_by(f64::total_cmp);
            servers.sort_by(f64::total_cmp);
            clients.dedup();
            servers.dedup();
            CoverInstance::new(clients, servers)?
        };
        let (nnc, _) = cover_nnc(&inst)?;
        let opt = cover_exact(&inst)?;
        let ratio = if opt.cost() > 0.0 {
            nnc.cost() / opt.cost()
        } else {
            1.0
        };
        debug_assert!(
            ratio <= 2.0 + 1e-9,
            "approximation bound violated: {ratio} on {inst:?}"
        );
        if best.as_ref().is_none_or(|(_, b)| ratio > *b) {
            best = Some((inst, ratio));
        }
    }
    Ok(best.unwrap())
}

/// Search for an instance where random-MNN matching exceeds twice the
/// optimum while the chain algorithm does not. Template: side servers each
/// grabbing one flank client, a middle server the optimum uses for
/// everything, and middle clients that bait the middle server's nearest-
/// neighbor relation.
pub fn nogle_search(seed: u64, trials: u64) -> Result<Option<(CoverInstance, f64, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let g = rng.random_range(0.9..0.99);
        let mid = rng.random_range(0.1..0.3);
        let jit = |rng: &mut ChaCha8Rng| rng.random_range(-1e-6..1e-6);
        let servers = vec![-1.0 - g + jit(&mut rng), jit(&mut rng), 1.0 + g + jit(&mut rng)];
        let clients = vec![
            -1.0 + jit(&mut rng),
            -mid + 0.01 + jit(&mut rng),
            mid + jit(&mut rng),
            1.0 + jit(&mut rng),
        ];
        let inst = CoverInstance::new(clients, servers)?;
        let opt = cover_exact(&inst)?.cost();
        if opt <= 0.0 {
            continue;
        }
        for s2 in 0..24u64 {
            let naive = naive_mnn_cover(&inst, seed ^ (s2 << 32) ^ 0xabcd)?.cost();
            if naive > 2.0 * opt + 1e-9 {
                let (nnc, _) = cover_nnc(&inst)?;
                if nnc.cost() <= 2.0 * opt + 1e-9 {
                    return Ok(Some((inst, naive / opt, nnc.cost() / opt)));
                }
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// 1.5D greedy lower bound.

#[derive(Clone, Debug)]
pub struct Greedy15d {
    pub greedy_cost: f64,
    pub opt_bound: f64,
    pub ratio: f64,
    /// Every growth event covered a client directly above its server.
    pub column_locked: bool,
}

/// The planar instance where smallest-growth greedy pays a factor
/// 2m/sqrt(5): m unit-spaced servers on a line, a column of clients above
/// each stretching to height m. Greedy covers each column from its own
/// server (cost m^2) while one near-central server could cover everything
/// with radius sqrt(5)m/2.
pub fn greedy_15d(m: usize) -> Result<Greedy15d> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::InvalidParameter(
            "m must be even and at least 2".into(),
        ));
    }
    let mf = m as f64;
    // Column spacing; shrunk by 1e-9 so the cross-column tie at the top
    // layer resolves toward the column's own server.
    let d_exact = (mf * mf + 1.0).sqrt() - mf;
    let d = d_exact * (1.0 - 1e-9);
    let per_column = (mf / d).floor() as usize + 1;
    // Heights anchored at the top so the last layer sits exactly at m.
    let mut heights = Vec::with_capacity(per_column);
    for j in 0..per_column {
        let h = mf - j as f64 * d;
        if h > 0.0 {
            heights.push(h);
        }
    }
    let servers: Vec<[f64; 2]> = (1..=m).map(|i| [i as f64, 0.0]).collect();
    let mut clients: Vec<[f64; 2]> = Vec::with_capacity(m * heights.len());
    for i in 1..=m {
        for &h in &heights {
            clients.push([i as f64, h]);
        }
    }

    let mut radii = vec![0.0f64; m];
    let mut covered = vec![false; clients.len()];
    let mut remaining = clients.len();
    let mut column_locked = true;
    let dist = |c: &[f64; 2], s: &[f64; 2]| ((c[0] - s[0]).powi(2) + (c[1] - s[1]).powi(2)).sqrt();
    while remaining > 0 {
        // Smallest growth covering a new client; ties toward lower clients,
        // then toward the smaller resulting radius. Growths are compared on
        // a 1e-9 grid so that the proper tie rule, and not float dust in
        // otherwise-equal layer steps, decides the order.
        let mut best: Option<(i64, f64, f64, usize, usize)> = None;
        for (ci, c) in clients.iter().enumerate() {
            if covered[ci] {
                continue;
            }
            for (si, s) in servers.iter().enumerate() {
                let req = dist(c, s);
                let inc = (req - radii[si]).max(0.0);
                let qinc = (inc / 1e-9).round() as i64;
                let cand = (qinc, c[1], req, ci, si);
                let better = match best {
                    None => true,
                    Some(b) => {
                        (cand.0, cand.1, cand.2, cand.3, cand.4)
                            < (b.0, b.1, b.2, b.3, b.4)
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (_, _, req, ci, si) = best.unwrap();
        if clients[ci][0] != servers[si][0] {
            column_locked = false;
        }
        radii[si] = radii[si].max(req);
        for (c2, c) in clients.iter().enumerate() {
            if !covered[c2] && dist(c, &servers[si]) <= radii[si] {
                covered[c2] = true;
                remaining -= 1;
            }
        }
    }
    let greedy_cost: f64 = radii.iter().sum();
    let opt_bound = 5f64.sqrt() * mf / 2.0;
    Ok(Greedy15d {
        greedy_cost,
        opt_bound,
        ratio: greedy_cost / opt_bound,
        column_locked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;

    #[test]
    fn single_client_single_server() {
        let inst = CoverInstance::new(vec![3.0], vec![0.0]).unwrap();
        let (sol, stats) = cover_nnc(&inst).unwrap();
        assert_eq!(sol.radii, vec![3.0]);
        assert_eq!(sol.cost(), 3.0);
        assert_eq!(stats.merges, 1);
    }

    #[test]
    fn client_at_server_position_costs_nothing() {
        let inst = CoverInstance::new(vec![5.0, 7.0], vec![5.0, 7.0]).unwrap();
        let (sol, stats) = cover_nnc(&inst).unwrap();
        assert_eq!(sol.cost(), 0.0);
        assert_eq!(stats.merges, 3);
    }

    #[test]
    fn no_servers_with_clients_is_infeasible() {
        let inst = CoverInstance::new(vec![1.0], vec![]).unwrap();
        assert!(matches!(cover_nnc(&inst), Err(Error::Infeasible(_))));
        assert!(matches!(cover_exact(&inst), Err(Error::Infeasible(_))));
    }

    #[test]
    fn no_clients_all_zero() {
        let inst = CoverInstance::new(vec![], vec![1.0, 2.0, 3.0]).unwrap();
        let (sol, stats) = cover_nnc(&inst).unwrap();
        assert_eq!(sol.cost(), 0.0);
        assert_eq!(stats.merges, 2);
    }

    #[test]
    fn unsorted_rejected() {
        assert!(CoverInstance::new(vec![2.0, 1.0], vec![0.0]).is_err());
        assert!(CoverInstance::new(vec![1.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn exact_single_server_max_distance() {
        let inst = CoverInstance::new(vec![-4.0, 1.0, 7.0], vec![2.0]).unwrap();
        let sol = cover_exact(&inst).unwrap();
        assert_eq!(sol.cost(), 6.0);
        assert!(sol.covers(&inst));
    }

    #[test]
    fn exact_matches_exhaustive_tiny() {
        for seed in 0..400u64 {
            let inst = gen::gen_cover(seed as usize % 7, 1 + seed as usize % 4, 50 + seed)
                .unwrap();
            if inst.clients.len() + inst.servers.len() > 8 {
                continue;
            }
            let dp = cover_exact(&inst).unwrap().cost();
            let ex = exhaustive_assignment_cost(&inst).unwrap();
            assert!(
                (dp - ex).abs() < 1e-9,
                "seed {seed}: dp {dp} vs exhaustive {ex} on {inst:?}"
            );
        }
    }

    #[test]
    fn nnc_within_twice_exact_random() {
        for seed in 0..200u64 {
            let n = 1 + (seed as usize) % 40;
            let m = 1 + (seed as usize) % 12;
            let inst = gen::gen_cover(n, m, 900 + seed).unwrap();
            let (nnc, stats) = cover_nnc(&inst).unwrap();
            let opt = cover_exact(&inst).unwrap();
            assert!(nnc.covers(&inst));
            assert_eq!(stats.merges, n + m - 1);
            assert!(
                nnc.cost() <= 2.0 * opt.cost() + 1e-9,
                "seed {seed}: {} > 2 * {}",
                nnc.cost(),
                opt.cost()
            );
            assert!(opt.cost() <= nnc.cost() + 1e-9);
            let greedy = cover_greedy_alt(&inst).unwrap();
            assert!(greedy.covers(&inst));
            assert!(greedy.cost() <= 2.0 * opt.cost() + 1e-9);
        }
    }

    #[test]
    fn audit_intervals_disjoint_and_sum_to_cost() {
        for seed in 0..100u64 {
            let n = 1 + (seed as usize) % 30;
            let m = 1 + (seed as usize) % 10;
            let inst = gen::gen_cover(n, m, 70_000 + seed).unwrap();
            let (sol, _, audit) = cover_nnc_audited(&inst).unwrap();
            let mut iv = audit.intervals.clone();
            iv.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut sum = 0.0;
            for w in iv.windows(2) {
                assert!(
                    w[0].1 <= w[1].0 + 1e-12,
                    "seed {seed}: intervals overlap: {w:?}"
                );
            }
            for (a, b) in &iv {
                assert!(b >= a);
                sum += b - a;
            }
            assert!(
                (sum - sol.cost()).abs() <= 1e-9 * (1.0 + sol.cost()),
                "seed {seed}: interval sum {sum} vs cost {}",
                sol.cost()
            );
        }
    }

    #[test]
    fn cascade_covers_opposite_side() {
        // One far client pulls the server's disk over a near client cluster
        // on the opposite side.
        let inst = CoverInstance::new(vec![-3.0, 2.0, 2.5], vec![0.0, 10.0]).unwrap();
        let (sol, _) = cover_nnc(&inst).unwrap();
        assert!(sol.covers(&inst));
        let opt = cover_exact(&inst).unwrap();
        assert!(sol.cost() <= 2.0 * opt.cost() + 1e-9);
    }

    #[test]
    fn tightness_family_reaches_nineteen_tenths() {
        let (inst, ratio) = tightness_search(42, 20_000).unwrap();
        assert!(ratio >= 1.9, "best ratio {ratio} on {inst:?}");
        assert!(ratio <= 2.0 + 1e-9);
    }

    #[test]
    fn nogle_phenomenon_found() {
        let found = nogle_search(7, 4000).unwrap();
        let (inst, naive_ratio, nnc_ratio) = found.expect("divergence instance exists");
        assert!(naive_ratio > 2.0, "naive ratio {naive_ratio} on {inst:?}");
        assert!(nnc_ratio <= 2.0 + 1e-9);
    }

    #[test]
    fn greedy_15d_reference_values() {
        let g4 = greedy_15d(4).unwrap();
        assert_eq!(g4.greedy_cost, 16.0);
        assert!((g4.opt_bound - 5f64.sqrt() * 2.0).abs() < 1e-12);
        assert!((g4.ratio - 8.0 / 5f64.sqrt()).abs() < 1e-9);
        assert!(g4.column_locked);

        let g2 = greedy_15d(2).unwrap();
        assert_eq!(g2.greedy_cost, 4.0);
        assert!((g2.opt_bound - 5f64.sqrt()).abs() < 1e-12);
        assert!(g2.column_locked);

        assert!(greedy_15d(3).is_err());
        assert!(greedy_15d(0).is_err());
    }
}
