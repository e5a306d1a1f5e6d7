//! Narcissistic k-attribute stable matching via the soul-mates chain.
//!
//! Agents are vectors of k positive attributes; an agent prefers the
//! opposite-side agent with the larger dot product against its own vector.
//! Because both sides score a cross pair with the same dot product, the
//! preferences are symmetric: there is a unique stable matching and it is
//! found by repeatedly matching mutual first choices (soul mates). The
//! bichromatic chain alternates sides, following first choices until a
//! mutual pair appears.
//!
//! First-choice structures: for k = 2, a deletion-only convex hull with
//! binary search over its top-right section (all vectors are restricted to
//! the strictly positive orthant); for other k, a linear scan. A deferred-
//! acceptance (Gale-Shapley) oracle and a blocking-pair verifier round out
//! the module.

use std::cmp::Ordering;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A validated instance: equal side sizes, equal dimensions, all
/// coordinates strictly positive.
#[derive(Clone, Debug)]
pub struct MatchInstance {
    pub k: usize,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
}

impl MatchInstance {
    pub fn new(k: usize, left: Vec<Vec<f64>>, right: Vec<Vec<f64>>) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::SizeMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        for v in left.iter().chain(right.iter()) {
            if v.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !(*x > 0.0)) {
                return Err(Error::InvalidParameter(
                    "attributes must be strictly positive".into(),
                ));
            }
        }
        Ok(MatchInstance { k, left, right })
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }
}

/// The shared objective: one accumulation order, so `score(a, b)` and
/// `score(b, a)` are bitwise equal.
pub fn score(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// Preference order: larger dot product first, smaller id on ties.
fn prefers(q: &[f64], cand: (f64, usize), incumbent: (f64, usize)) -> bool {
    let _ = q;
    match cand.0.total_cmp(&incumbent.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => cand.1 < incumbent.1,
    }
}

/// Linear-scan first choice: the alive agent maximizing the dot product.
pub fn first_choice_scan(agents: &[Vec<f64>], alive: &[bool], q: &[f64]) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (i, v) in agents.iter().enumerate() {
        if !alive[i] {
            continue;
        }
        let s = score(q, v);
        if best.is_none() || prefers(q, (s, i), best.unwrap()) {
            best = Some((s, i));
        }
    }
    best.map(|(_, i)| i).ok_or(Error::Empty)
}

/// Deletion-only first-choice structure for k = 2: the convex hull of the
/// alive points, queried by binary search over the top-right section. The
/// hull is rebuilt from a presorted list on deletion, so deletions are
/// amortized linear.
#[derive(Clone, Debug)]
pub struct FirstChoiceHull2D {
    points: Vec<[f64; 2]>,
    alive: Vec<bool>,
    alive_count: usize,
    /// Indices sorted by (x, y); hull rebuilds are a linear scan over this.
    sorted: Vec<usize>,
    /// Top-right section of the alive hull: from the highest point to the
    /// rightmost point, ordered by decreasing y.
    section: Vec<usize>,
}

impl FirstChoiceHull2D {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let mut pts = Vec::with_capacity(points.len());
        for p in points {
            if p.len() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: 2,
                    got: p.len(),
                });
            }
            if !(p[0] > 0.0 && p[1] > 0.0) {
                return Err(Error::InvalidParameter(
                    "hull points must be strictly positive".into(),
                ));
            }
            pts.push([p[0], p[1]]);
        }
        let mut sorted: Vec<usize> = (0..pts.len()).collect();
        sorted.sort_by(|&a, &b| {
            pts[a][0]
                .total_cmp(&pts[b][0])
                .then(pts[a][1].total_cmp(&pts[b][1]))
                .then(a.cmp(&b))
        });
        let mut h = FirstChoiceHull2D {
            alive: vec![true; pts.len()],
            alive_count: pts.len(),
            points: pts,
            sorted,
            section: Vec::new(),
        };
        h.rebuild();
        Ok(h)
    }

    pub fn len(&self) -> usize {
        self.alive_count
    }

    pub fn is_empty(&self) -> bool {
        self.alive_count == 0
    }

    pub fn delete(&mut self, id: usize) -> Result<()> {
        if id >= self.alive.len() || !self.alive[id] {
            return Err(Error::BadId(id));
        }
        self.alive[id] = false;
        self.alive_count -= 1;
        self.rebuild();
        Ok(())
    }

    fn rebuild(&mut self) {
        self.section.clear();
        if self.alive_count == 0 {
            return;
        }
        // Upper hull over the alive points in (x, y) order (Andrew scan),
        // strict turns only.
        let pts = &self.points;
        let mut upper: Vec<usize> = Vec::new();
        for &i in self.sorted.iter().filter(|&&i| self.alive[i]) {
            while upper.len() >= 2 {
                let a = pts[upper[upper.len() - 2]];
                let b = pts[upper[upper.len() - 1]];
                let c = pts[i];
                let crossv = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
                if crossv >= 0.0 {
                    upper.pop();
                } else {
                    break;
                }
            }
            upper.push(i);
        }
        // The top-right section runs from the highest point to the
        // rightmost; on the upper hull that is the suffix starting at the
        // maximum-y vertex.
        let top = upper
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| {
                pts[a][1]
                    .total_cmp(&pts[b][1])
                    .then(pts[a][0].total_cmp(&pts[b][0]))
            })
            .map(|(i, _)| i)
            .unwrap();
        self.section = upper[top..].to_vec();
    }

    /// The alive agent maximizing the dot product with `q`, by binary
    /// search: the dot products along the section are unimodal, so compare
    /// neighbors to decide the direction.
    pub fn first_choice(&self, q: &[f64]) -> Result<usize> {
        if q.len() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: q.len(),
            });
        }
        if !(q[0] > 0.0 && q[1] > 0.0) {
            return Err(Error::InvalidParameter(
                "query must be strictly positive".into(),
            ));
        }
        if self.section.is_empty() {
            return Err(Error::Empty);
        }
        let f = |i: usize| -> f64 {
            let p = self.points[self.section[i]];
            q[0] * p[0] + q[1] * p[1]
        };
        let (mut lo, mut hi) = (0usize, self.section.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if f(mid + 1) > f(mid) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        Ok(self.section[lo])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    /// Pairs of (left id, right id).
    pub pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn normalized(mut self) -> Self {
        self.pairs.sort_unstable();
        self
    }
}

enum FirstChoice {
    Hull(FirstChoiceHull2D),
    Scan { agents: Vec<Vec<f64>>, alive: Vec<bool> },
}

impl FirstChoice {
    fn build(agents: &[Vec<f64>], k: usize) -> Result<Self> {
        if k == 2 {
            Ok(FirstChoice::Hull(FirstChoiceHull2D::new(agents)?))
        } else {
            Ok(FirstChoice::Scan {
                agents: agents.to_vec(),
                alive: vec![true; agents.len()],
            })
        }
    }

    fn first_choice(&self, q: &[f64]) -> Result<usize> {
        match self {
            FirstChoice::Hull(h) => h.first_choice(q),
            FirstChoice::Scan { agents, alive } => first_choice_scan(agents, alive, q),
        }
    }

    fn delete(&mut self, id: usize) -> Result<()> {
        match self {
            FirstChoice::Hull(h) => h.delete(id),
            FirstChoice::Scan { alive, .. } => {
                if !alive[id] {
                    return Err(Error::BadId(id));
                }
                alive[id] = false;
                Ok(())
            }
        }
    }
}

/// The unique stable matching by the bichromatic nearest-neighbor chain:
/// each chain element is followed by its first choice among the unmatched
/// agents of the other side; mutual first choices (soul mates) are matched
/// and removed.
pub fn narcissistic_match(inst: &MatchInstance) -> Result<Matching> {
    let n = inst.len();
    if n == 0 {
        return Ok(Matching { pairs: Vec::new() });
    }
    let mut left_fc = FirstChoice::build(&inst.left, inst.k)?;
    let mut right_fc = FirstChoice::build(&inst.right, inst.k)?;
    let mut left_matched = vec![false; n];
    let mut pairs = Vec::with_capacity(n);
    let mut chain: Vec<(Side, usize)> = Vec::new();
    // Objective value between consecutive chain entries; by symmetry it
    // strictly increases toward the soul mates, which is what rules out
    // cycles.
    let mut objectives: Vec<f64> = Vec::new();
    let mut seed = 0usize;

    while pairs.len() < n {
        if chain.is_empty() {
            while left_matched[seed] {
                seed += 1;
            }
            chain.push((Side::Left, seed));
            objectives.push(f64::NEG_INFINITY);
        }
        let (side, x) = *chain.last().unwrap();
        let (vec_x, opposite_fc) = match side {
            Side::Left => (&inst.left[x], &right_fc),
            Side::Right => (&inst.right[x], &left_fc),
        };
        let fc = opposite_fc.first_choice(vec_x)?;
        let opp = match side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        debug_assert!(
            {
                let s = match side {
                    Side::Left => score(&inst.left[x], &inst.right[fc]),
                    Side::Right => score(&inst.right[x], &inst.left[fc]),
                };
                s >= *objectives.last().unwrap()
            },
            "chain objective must not decrease"
        );
        if chain.len() >= 2 && chain[chain.len() - 2] == (opp, fc) {
            // Soul mates: each is the other's first choice.
            #[cfg(debug_assertions)]
            {
                // By symmetry the chain objective strictly increases, so a
                // mutual pair really is mutual under a scan.
                let (l, r) = match side {
                    Side::Left => (x, fc),
                    Side::Right => (fc, x),
                };
                debug_assert_eq!(
                    FirstChoice::first_choice(&right_fc, &inst.left[l]).unwrap(),
                    r
                );
                debug_assert_eq!(
                    FirstChoice::first_choice(&left_fc, &inst.right[r]).unwrap(),
                    l
                );
            }
            let (l, r) = match side {
                Side::Left => (x, fc),
                Side::Right => (fc, x),
            };
            pairs.push((l, r));
            left_matched[l] = true;
            left_fc.delete(l)?;
            right_fc.delete(r)?;
            chain.pop();
            chain.pop();
            objectives.pop();
            objectives.pop();
        } else {
            let s = match side {
                Side::Left => score(&inst.left[x], &inst.right[fc]),
                Side::Right => score(&inst.right[x], &inst.left[fc]),
            };
            chain.push((opp, fc));
            objectives.push(s);
        }
    }
    Ok(Matching { pairs }.normalized())
}

/// Deferred acceptance from either proposing side over the materialized
/// dot-product preferences.
pub fn gale_shapley_oracle(inst: &MatchInstance, proposing: Side) -> Result<Matching> {
    let n = inst.len();
    if n == 0 {
        return Ok(Matching { pairs: Vec::new() });
    }
    let (props, holders) = match proposing {
        Side::Left => (&inst.left, &inst.right),
        Side::Right => (&inst.right, &inst.left),
    };
    // Preference lists for proposers, best first.
    let mut prefs: Vec<Vec<usize>> = Vec::with_capacity(n);
    for p in props {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            score(p, &holders[b])
                .total_cmp(&score(p, &holders[a]))
                .then(a.cmp(&b))
        });
        prefs.push(order);
    }
    let mut next = vec![0usize; n];
    let mut held: Vec<Option<usize>> = vec![None; n];
    let mut free: Vec<usize> = (0..n).rev().collect();
    while let Some(p) = free.pop() {
        let target = prefs[p][next[p]];
        next[p] += 1;
        match held[target] {
            None => held[target] = Some(p),
            Some(q) => {
                let s_new = (score(&holders[target], &props[p]), p);
                let s_old = (score(&holders[target], &props[q]), q);
                if prefers(&holders[target], s_new, s_old) {
                    held[target] = Some(p);
                    free.push(q);
                } else {
                    free.push(p);
                }
            }
        }
    }
    let mut pairs = Vec::with_capacity(n);
    for (h, p) in held.iter().enumerate() {
        let p = p.unwrap();
        match proposing {
            Side::Left => pairs.push((p, h)),
            Side::Right => pairs.push((h, p)),
        }
    }
    Ok(Matching { pairs }.normalized())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stability {
    Stable,
    BlockingPair(usize, usize),
}

/// Quadratic scan for a blocking pair: a cross pair preferring each other
/// over their assigned partners.
pub fn verify_stability(m: &Matching, inst: &MatchInstance) -> Result<Stability> {
    let n = inst.len();
    if m.pairs.len() != n {
        return Err(Error::SizeMismatch {
            left: m.pairs.len(),
            right: n,
        });
    }
    let mut partner_of_left = vec![usize::MAX; n];
    let mut partner_of_right = vec![usize::MAX; n];
    for &(l, r) in &m.pairs {
        if l >= n || r >= n || partner_of_left[l] != usize::MAX || partner_of_right[r] != usize::MAX
        {
            return Err(Error::InvalidParameter("not a perfect matching".into()));
        }
        partner_of_left[l] = r;
        partner_of_right[r] = l;
    }
    for l in 0..n {
        for r in 0..n {
            if partner_of_left[l] == r {
                continue;
            }
            let s_lr = score(&inst.left[l], &inst.right[r]);
            let cur_l = (
                score(&inst.left[l], &inst.right[partner_of_left[l]]),
                partner_of_left[l],
            );
            let cur_r = (
                score(&inst.right[r], &inst.left[partner_of_right[r]]),
                partner_of_right[r],
            );
            if prefers(&inst.left[l], (s_lr, r), cur_l)
                && prefers(&inst.right[r], (s_lr, l), cur_r)
            {
                return Ok(Stability::BlockingPair(l, r));
            }
        }
    }
    Ok(Stability::Stable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn score_is_bitwise_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let k = rng.random_range(1..6);
            let a: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..10.0)).collect();
            let b: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..10.0)).collect();
            assert_eq!(score(&a, &b).to_bits(), score(&b, &a).to_bits());
        }
    }

    #[test]
    fn single_pair() {
        let inst = MatchInstance::new(2, vec![vec![1.0, 2.0]], vec![vec![3.0, 1.0]]).unwrap();
        let m = narcissistic_match(&inst).unwrap();
        assert_eq!(m.pairs, vec![(0, 0)]);
        assert_eq!(verify_stability(&m, &inst).unwrap(), Stability::Stable);
    }

    #[test]
    fn two_by_two_hand_example() {
        // Mutual first choices: (3,1)-(4,1) score 13 > 7, and symmetrically.
        let inst = MatchInstance::new(
            2,
            vec![vec![3.0, 1.0], vec![1.0, 3.0]],
            vec![vec![4.0, 1.0], vec![1.0, 4.0]],
        )
        .unwrap();
        let m = narcissistic_match(&inst).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        for side in [Side::Left, Side::Right] {
            assert_eq!(gale_shapley_oracle(&inst, side).unwrap(), m);
        }
    }

    #[test]
    fn positivity_enforced() {
        assert!(MatchInstance::new(2, vec![vec![1.0, 0.0]], vec![vec![1.0, 1.0]]).is_err());
        assert!(MatchInstance::new(2, vec![vec![1.0, -1.0]], vec![vec![1.0, 1.0]]).is_err());
    }

    #[test]
    fn first_choice_hull_single_and_axis() {
        let h = FirstChoiceHull2D::new(&[vec![2.0, 3.0]]).unwrap();
        assert_eq!(h.first_choice(&[1.0, 1.0]).unwrap(), 0);

        let pts = vec![
            vec![1.0, 9.0],
            vec![8.0, 2.0],
            vec![5.0, 5.0],
            vec![9.0, 1.0],
        ];
        let h = FirstChoiceHull2D::new(&pts).unwrap();
        // Nearly horizontal query picks the maximum-x point.
        assert_eq!(h.first_choice(&[1.0, 1e-9]).unwrap(), 3);
        assert_eq!(h.first_choice(&[1e-9, 1.0]).unwrap(), 0);
    }

    #[test]
    fn hull_matches_scan_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<Vec<f64>> = (0..500)
            .map(|_| vec![rng.random_range(0.01..10.0), rng.random_range(0.01..10.0)])
            .collect();
        let mut hull = FirstChoiceHull2D::new(&pts).unwrap();
        let mut alive = vec![true; pts.len()];
        for step in 0..500 {
            let q = vec![rng.random_range(0.01..10.0), rng.random_range(0.01..10.0)];
            let got = hull.first_choice(&q).unwrap();
            let want = first_choice_scan(&pts, &alive, &q).unwrap();
            assert_eq!(got, want, "step {step}");
            if step % 2 == 0 {
                // Delete a random alive point to exercise rebuilds.
                let alive_ids: Vec<usize> =
                    (0..pts.len()).filter(|&i| alive[i]).collect();
                if alive_ids.len() > 1 {
                    let id = alive_ids[rng.random_range(0..alive_ids.len())];
                    hull.delete(id).unwrap();
                    alive[id] = false;
                }
            }
        }
    }

    #[test]
    fn scan_k1_is_max_attribute() {
        let agents = vec![vec![3.0], vec![7.0], vec![5.0]];
        let alive = vec![true; 3];
        assert_eq!(first_choice_scan(&agents, &alive, &[2.0]).unwrap(), 1);
    }

    #[test]
    fn matches_gale_shapley_both_sides() {
        for seed in 0..40u64 {
            let k = [2usize, 3, 5][(seed % 3) as usize];
            let n = 1 + (seed as usize * 7) % 60;
            let inst = gen::gen_matching(n, k, 400 + seed).unwrap();
            let m = narcissistic_match(&inst).unwrap();
            let gl = gale_shapley_oracle(&inst, Side::Left).unwrap();
            let gr = gale_shapley_oracle(&inst, Side::Right).unwrap();
            assert_eq!(m, gl, "seed {seed}");
            assert_eq!(m, gr, "seed {seed}");
            assert_eq!(verify_stability(&m, &inst).unwrap(), Stability::Stable);
        }
    }

    #[test]
    fn matches_global_greedy() {
        // Repeatedly matching the globally best cross pair is the same
        // matching (global-local equivalence for symmetric preferences).
        for seed in 0..10u64 {
            let inst = gen::gen_matching(30, 3, 70 + seed).unwrap();
            let n = inst.len();
            let mut used_l = vec![false; n];
            let mut used_r = vec![false; n];
            let mut pairs = Vec::new();
            while pairs.len() < n {
                let mut best: Option<(f64, (usize, usize))> = None;
                for l in 0..n {
                    if used_l[l] {
                        continue;
                    }
                    for r in 0..n {
                        if used_r[r] {
                            continue;
                        }
                        let s = score(&inst.left[l], &inst.right[r]);
                        if best.is_none() || s > best.unwrap().0 {
                            best = Some((s, (l, r)));
                        }
                    }
                }
                let (_, (l, r)) = best.unwrap();
                used_l[l] = true;
                used_r[r] = true;
                pairs.push((l, r));
            }
            pairs.sort_unstable();
            let m = narcissistic_match(&inst).unwrap();
            assert_eq!(m.pairs, pairs, "seed {seed}");
        }
    }

    #[test]
    fn swapped_pairs_get_caught() {
        for seed in 0..20u64 {
            let inst = gen::gen_matching(12, 2, 900 + seed).unwrap();
            let m = narcissistic_match(&inst).unwrap();
            let mut bad = m.clone();
            let (a, b) = (bad.pairs[0], bad.pairs[1]);
            bad.pairs[0] = (a.0, b.1);
            bad.pairs[1] = (b.0, a.1);
            match verify_stability(&bad, &inst).unwrap() {
                Stability::BlockingPair(..) => {}
                Stability::Stable => {
                    panic!("seed {seed}: swapping a stable matching stayed stable")
                }
            }
        }
    }
}
