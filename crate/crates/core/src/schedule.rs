//! The demon's exact decision procedure.
//!
//! State `(i, j)` means token R sits on `R(i)` and token S on `S(j)`
//! (1-indexed). A state is legal when `R(i) != S(j)`; since only one token
//! moves per step, tokens can never swap along an edge, so legality of
//! states is the whole collision rule. `(i, j)` is reachable when it is
//! legal and `(i-1, j)` or `(i, j-1)` is reachable; `(1, 1)` is reachable
//! when legal.
//!
//! The grid is swept row by row (one row per position of R) with the row
//! held as a bitset over positions of S. Within a row, reachability spreads
//! rightward along runs of legal cells, which [`BitRow::fill_runs`] does with
//! one carry-propagating addition per word.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bits::BitRow;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::walk::Walk;

/// Words of stored grid rows allowed for witness recovery (256 MiB).
const MAX_STORED_WORDS: usize = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    /// Advance the token on the first walk (R).
    #[serde(rename = "R")]
    First,
    /// Advance the token on the second walk (S).
    #[serde(rename = "S")]
    Second,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub moves: Vec<Move>,
}

impl Schedule {
    /// Replays from `(1, 1)`, returning every visited state (1-indexed),
    /// or the first illegal move.
    pub fn replay(&self, first: &[usize], second: &[usize]) -> Result<Vec<(usize, usize)>> {
        if first.is_empty() || second.is_empty() {
            return Err(Error::EmptyWalk);
        }
        let (mut i, mut j) = (1, 1);
        if first[0] == second[0] {
            return Err(Error::IllegalSchedule {
                index: 0,
                reason: "tokens start on the same vertex".into(),
            });
        }
        let mut states = Vec::with_capacity(self.moves.len() + 1);
        states.push((i, j));
        for (k, mv) in self.moves.iter().enumerate() {
            match mv {
                Move::First => i += 1,
                Move::Second => j += 1,
            }
            if i > first.len() || j > second.len() {
                return Err(Error::IllegalSchedule {
                    index: k,
                    reason: "moved past the end of a walk".into(),
                });
            }
            if first[i - 1] == second[j - 1] {
                return Err(Error::IllegalSchedule {
                    index: k,
                    reason: format!("collision at state ({i}, {j})"),
                });
            }
            states.push((i, j));
        }
        Ok(states)
    }

    pub fn advances(&self) -> (usize, usize) {
        let r = self.moves.iter().filter(|&&m| m == Move::First).count();
        (r, self.moves.len() - r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// Both tokens reach the last vertex of their walks.
    BothToEnd,
    /// Each token makes at least `N` moves: some reachable state has
    /// `i >= N + 1` and `j >= N + 1`.
    MinAdvance(usize),
    /// The first token reaches its end; the second may stop anywhere.
    FirstToEnd,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchedulingResult {
    pub success: bool,
    /// Largest `min(i, j)` over reachable states, 0 if none.
    pub best_frontier: usize,
    /// State the witness ends in.
    pub target_state: Option<(usize, usize)>,
    pub witness: Option<Schedule>,
    /// On failure: least `L` such that no reachable state inside the
    /// `L x L` prefix box can ever leave it.
    pub blocking_prefix_length: Option<usize>,
}

/// Vertex-occurrence bitsets of a walk, one per vertex.
struct Occurrences {
    rows: Vec<BitRow>,
    ones: BitRow,
}

impl Occurrences {
    fn new(walk: &[usize]) -> Self {
        let n = walk.iter().max().map_or(0, |&v| v + 1);
        let mut rows = vec![BitRow::zeros(walk.len()); n];
        for (j, &v) in walk.iter().enumerate() {
            rows[v].set(j);
        }
        Self {
            rows,
            ones: BitRow::ones(walk.len()),
        }
    }

    fn legal_into(&self, v: usize, out: &mut BitRow) {
        out.copy_from(&self.ones);
        if let Some(occ) = self.rows.get(v) {
            out.and_not_assign(occ);
        }
    }
}

struct Sweep {
    success: bool,
    target_state: Option<(usize, usize)>,
    best_frontier: usize,
    blocking: Option<usize>,
    rows: Vec<BitRow>,
}

fn hits_target(target: Target, i: usize, r_len: usize, row: &BitRow) -> Option<usize> {
    let m = row.len();
    match target {
        Target::BothToEnd => (i == r_len && row.get(m - 1)).then_some(m),
        Target::FirstToEnd => {
            if i == r_len {
                row.first_one().map(|j| j + 1)
            } else {
                None
            }
        }
        Target::MinAdvance(n) => {
            if i > n {
                row.next_one(n).map(|j| j + 1)
            } else {
                None
            }
        }
    }
}

/// Core sweep. `keep_rows` stores every row for backtracking; `stop_early`
/// ends as soon as the target is hit (blocking info is then not computed).
fn sweep(r: &[usize], s: &[usize], target: Target, keep_rows: bool, stop_early: bool) -> Sweep {
    let m = s.len();
    let occ = Occurrences::new(s);
    let mut legal = BitRow::zeros(m);
    let mut prev = BitRow::zeros(m);
    let mut cur = BitRow::zeros(m);
    let mut seen = BitRow::zeros(m);
    let mut fresh = BitRow::zeros(m);
    let mut seeds = BitRow::zeros(m);
    seeds.set(0);

    let mut rowmin = vec![usize::MAX; r.len() + 1];
    let mut colmin = vec![usize::MAX; m + 1];
    let mut out = Sweep {
        success: false,
        target_state: None,
        best_frontier: 0,
        blocking: None,
        rows: Vec::new(),
    };

    for i in 1..=r.len() {
        occ.legal_into(r[i - 1], &mut legal);
        if i == 1 {
            BitRow::fill_runs(&seeds, &legal, &mut cur);
        } else {
            BitRow::fill_runs(&prev, &legal, &mut cur);
        }
        let Some(first) = cur.first_one() else {
            break;
        };
        let last = cur.last_one().unwrap();
        rowmin[i] = first + 1;
        out.best_frontier = out.best_frontier.max(i.min(last + 1));
        if !stop_early {
            fresh.copy_from(&cur);
            fresh.and_not_assign(&seen);
            for j in fresh.ones_iter() {
                colmin[j + 1] = i;
            }
            seen.or_assign(&cur);
        }
        if keep_rows {
            out.rows.push(cur.clone());
        }
        if !out.success {
            if let Some(j) = hits_target(target, i, r.len(), &cur) {
                out.success = true;
                out.target_state = Some((i, j));
                if stop_early {
                    return out;
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    if !out.success {
        let longest = r.len().max(m);
        out.blocking = (1..=longest).find(|&l| {
            (l >= r.len() || rowmin[l] > l) && (l >= m || colmin[l] > l)
        });
    }
    out
}

fn backtrack(rows: &[BitRow], (ti, tj): (usize, usize)) -> Schedule {
    let reach = |i: usize, j: usize| rows[i - 1].get(j - 1);
    let (mut i, mut j) = (ti, tj);
    let mut moves = Vec::with_capacity(ti + tj - 2);
    while (i, j) != (1, 1) {
        if i > 1 && reach(i - 1, j) {
            moves.push(Move::First);
            i -= 1;
        } else {
            debug_assert!(j > 1 && reach(i, j - 1));
            moves.push(Move::Second);
            j -= 1;
        }
    }
    moves.reverse();
    Schedule { moves }
}

/// Full analysis of a pair of index sequences: success, frontier, witness
/// and (on failure) the blocking prefix length.
pub fn max_advance_steps(r: &[usize], s: &[usize], target: Target) -> Result<SchedulingResult> {
    if r.is_empty() || s.is_empty() {
        return Err(Error::EmptyWalk);
    }
    let words = s.len().div_ceil(64);
    if r.len().saturating_mul(words) > MAX_STORED_WORDS {
        return Err(Error::Guard(format!(
            "witness grid of {} x {} cells is too large; use can_advance",
            r.len(),
            s.len()
        )));
    }
    let sw = sweep(r, s, target, true, false);
    let witness = sw.target_state.map(|t| backtrack(&sw.rows, t));
    Ok(SchedulingResult {
        success: sw.success,
        best_frontier: sw.best_frontier,
        target_state: sw.target_state,
        witness,
        blocking_prefix_length: sw.blocking,
    })
}

pub fn max_advance(r: &Walk, s: &Walk, target: Target) -> Result<SchedulingResult> {
    if !r.same_graph(s) {
        return Err(Error::GraphMismatch);
    }
    max_advance_steps(r.steps(), s.steps(), target)
}

/// Success only; stops at the first hit and stores nothing. This is the
/// Monte Carlo workhorse.
pub fn can_advance(r: &[usize], s: &[usize], target: Target) -> bool {
    if r.is_empty() || s.is_empty() {
        return false;
    }
    sweep(r, s, target, false, true).success
}

/// Every reachable state of the grid.
#[derive(Debug, Clone)]
pub struct ReachSet {
    rows: Vec<BitRow>,
    cols: usize,
}

impl ReachSet {
    pub fn compute(r: &[usize], s: &[usize]) -> Result<Self> {
        if r.is_empty() || s.is_empty() {
            return Err(Error::EmptyWalk);
        }
        let sw = sweep(r, s, Target::BothToEnd, true, false);
        Ok(Self {
            rows: sw.rows,
            cols: s.len(),
        })
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i >= 1 && j >= 1 && j <= self.cols && self.rows.get(i - 1).is_some_and(|r| r.get(j - 1))
    }

    /// Reachable states in row-major order, 1-indexed.
    pub fn states(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.ones_iter().map(move |j| (i + 1, j + 1)))
    }

    pub fn len(&self) -> usize {
        self.states().count()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Both walks to their ends; returns the witness schedule when allowed.
pub fn is_allowed_pair(r: &Walk, s: &Walk) -> Result<Option<Schedule>> {
    Ok(max_advance(r, s, Target::BothToEnd)?.witness)
}

/// Largest `|R| + |S|` the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 22;

/// Exhaustive oracle: explores every interleaving of moves (pruning only at
/// collisions) and reports whether one reaches both ends.
pub fn brute_force_schedule(r: &[usize], s: &[usize]) -> Result<bool> {
    if r.is_empty() || s.is_empty() {
        return Err(Error::EmptyWalk);
    }
    if r.len() + s.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::Guard(format!(
            "brute force limited to |R| + |S| <= {BRUTE_FORCE_LIMIT}"
        )));
    }
    fn go(r: &[usize], s: &[usize], i: usize, j: usize) -> bool {
        if r[i] == s[j] {
            return false;
        }
        if i + 1 == r.len() && j + 1 == s.len() {
            return true;
        }
        (i + 1 < r.len() && go(r, s, i + 1, j)) || (j + 1 < s.len() && go(r, s, i, j + 1))
    }
    Ok(go(r, s, 0, 0))
}

/// Shortest walk inside a subgraph that is allowed for `r`, found by 0-1 BFS
/// over `(position in r, vertex of the partner)`. Advancing R costs nothing,
/// advancing the partner costs one vertex. `adj[v]` lists the subgraph
/// neighbors of ambient vertex `v`; `verts` are the subgraph's vertices in
/// tie-break order.
pub(crate) fn allowed_walk_in(r: &[usize], adj: &[Vec<usize>], verts: &[usize]) -> Option<Vec<usize>> {
    let n = adj.len();
    let len = r.len();
    let idx = |i: usize, x: usize| (i - 1) * n + x;
    const NONE: usize = usize::MAX;
    let mut dist = vec![NONE; len * n];
    let mut parent = vec![NONE; len * n];
    let mut deque = VecDeque::new();
    for &x in verts {
        if x != r[0] {
            dist[idx(1, x)] = 1;
            deque.push_back((1usize, x));
        }
    }
    while let Some((i, x)) = deque.pop_front() {
        let d = dist[idx(i, x)];
        if i == len {
            // Goal popped with minimal cost; rebuild the partner's walk.
            let mut walk = vec![x];
            let mut cur = idx(i, x);
            while parent[cur] != NONE {
                let p = parent[cur];
                let (pi, px) = (p / n + 1, p % n);
                if cur / n + 1 == pi {
                    walk.push(px);
                }
                cur = p;
            }
            walk.reverse();
            return Some(walk);
        }
        if r[i] != x {
            let k = idx(i + 1, x);
            if dist[k] == NONE || dist[k] > d {
                dist[k] = d;
                parent[k] = idx(i, x);
                deque.push_front((i + 1, x));
            }
        }
        for &y in &adj[x] {
            if y == r[i - 1] {
                continue;
            }
            let k = idx(i, y);
            if dist[k] == NONE || dist[k] > d + 1 {
                dist[k] = d + 1;
                parent[k] = idx(i, x);
                deque.push_back((i, y));
            }
        }
    }
    None
}

/// Subgraph adjacency over ambient indices, built from `h` by name.
pub(crate) fn embed_subgraph(ambient: &Graph, h: &Graph) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    let map = h
        .names()
        .iter()
        .map(|n| ambient.vertex(n))
        .collect::<Result<Vec<_>>>()?;
    let mut adj = vec![Vec::new(); ambient.len()];
    for (u, v) in h.edges() {
        let (a, b) = (map[u], map[v]);
        if !ambient.has_edge(a, b) {
            return Err(Error::Precondition(format!(
                "{}-{} is not an edge of the ambient graph",
                h.name(u),
                h.name(v)
            )));
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mut verts = map;
    verts.sort_unstable();
    Ok((adj, verts))
}

fn is_path_graph(h: &Graph) -> bool {
    let max_deg = (0..h.len()).map(|v| h.degree(v)).max().unwrap_or(0);
    h.edge_count() + 1 == h.len() && max_deg <= 2
}

/// An allowed walk for `r` living on the subgraph `h` (matched to `r`'s
/// graph by vertex name). The result is a walk on `r`'s graph.
pub fn find_allowed_walk(r: &Walk, h: &Graph) -> Result<Walk> {
    h.require_connected()?;
    if is_path_graph(h) {
        return Err(Error::Precondition(
            "subgraph is a path; allowed walks need not exist".into(),
        ));
    }
    let (adj, verts) = embed_subgraph(r.graph(), h)?;
    let steps = allowed_walk_in(r.steps(), &adj, &verts)
        .ok_or_else(|| Error::Precondition("no allowed walk found".into()))?;
    Ok(Walk::new_unchecked(Arc::clone(r.graph()), steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::walk::{random_steps, validate_walk, RandomSource};
    use proptest::prelude::*;
    use rand::Rng;

    fn k4() -> Arc<Graph> {
        Arc::new(families::complete(4))
    }

    fn walk(g: &Arc<Graph>, s: &str) -> Walk {
        validate_walk(g, &s.split_whitespace().collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn no_first_move() {
        let g = k4();
        let res = max_advance(&walk(&g, "A B"), &walk(&g, "B A"), Target::BothToEnd).unwrap();
        assert!(!res.success);
        assert_eq!(res.blocking_prefix_length, Some(2));
        assert_eq!(res.witness, None);
    }

    #[test]
    fn disjoint_alternation_succeeds() {
        let g = k4();
        let (r, s) = (walk(&g, "A B A B A B"), walk(&g, "C D C D C D"));
        let res = max_advance(&r, &s, Target::BothToEnd).unwrap();
        assert!(res.success);
        assert_eq!(res.best_frontier, 6);
        let w = res.witness.unwrap();
        assert_eq!(w.replay(r.steps(), s.steps()).unwrap().last(), Some(&(6, 6)));
    }

    #[test]
    fn start_collision() {
        let g = k4();
        let res = max_advance(&walk(&g, "A B"), &walk(&g, "A C"), Target::BothToEnd).unwrap();
        assert!(!res.success);
        assert_eq!(res.best_frontier, 0);
        assert_eq!(res.blocking_prefix_length, Some(1));
    }

    #[test]
    fn different_graphs_rejected() {
        let a = walk(&k4(), "A B");
        let c = walk(&Arc::new(families::cycle(4)), "A B");
        assert_eq!(max_advance(&a, &c, Target::BothToEnd).unwrap_err(), Error::GraphMismatch);
    }

    #[test]
    fn allowed_examples() {
        let g = k4();
        assert!(is_allowed_pair(&walk(&g, "A B"), &walk(&g, "C D")).unwrap().is_some());

        let p = Arc::new(families::path(4));
        let traverse = walk(&p, "A B C D");
        for start in 0..4 {
            for len in 1..6 {
                for t in 0..5 {
                    let mut rng = RandomSource::new(t).rng();
                    let s = random_steps(&p, start, len, &mut rng);
                    let s = Walk::new(p.clone(), s).unwrap();
                    assert!(is_allowed_pair(&traverse, &s).unwrap().is_none());
                }
            }
        }
    }

    #[test]
    fn brute_force_examples() {
        assert!(!brute_force_schedule(&[0, 1], &[1, 0]).unwrap());
        assert!(brute_force_schedule(&[0], &[1]).unwrap());
        assert!(matches!(
            brute_force_schedule(&[0; 12], &[1; 12]),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn min_advance_needs_both_tokens_to_move() {
        let g = k4();
        let r = walk(&g, "A B A");
        let s = walk(&g, "C D C");
        assert!(max_advance(&r, &s, Target::MinAdvance(2)).unwrap().success);
        assert!(!max_advance(&r, &s, Target::MinAdvance(3)).unwrap().success);
        let res = max_advance(&r, &s, Target::MinAdvance(1)).unwrap();
        let (a, b) = res.witness.unwrap().advances();
        assert!(a >= 1 && b >= 1);
    }

    #[test]
    fn allowed_walk_examples() {
        let g = k4();
        let tri = families::complete(4).induced(&[1, 2, 3]).0;
        let r = walk(&g, "A B A B");
        let s = find_allowed_walk(&r, &tri).unwrap();
        assert!(s.steps().iter().all(|&v| v != 0));
        assert!(is_allowed_pair(&r, &s).unwrap().is_some());

        let single = find_allowed_walk(&walk(&g, "A"), &tri).unwrap();
        assert_eq!(single.steps(), &[1]);

        let p3 = families::complete(4).induced(&[0, 1]).0;
        assert!(matches!(find_allowed_walk(&r, &p3), Err(Error::Precondition(_))));
    }

    #[test]
    fn every_short_walk_on_k4_has_an_allowed_walk_on_the_triangle() {
        let g = k4();
        let tri = families::complete(4).induced(&[1, 2, 3]).0;
        for r in crate::covering::enumerate_walks(&g, 6) {
            let r = Walk::new(g.clone(), r).unwrap();
            let s = find_allowed_walk(&r, &tri).unwrap();
            assert!(is_allowed_pair(&r, &s).unwrap().is_some());
        }
    }

    #[test]
    fn failure_certificates_hold_on_prefixes() {
        let g = Arc::new(families::cycle(4));
        let mut rng = RandomSource::new(11).rng();
        for _ in 0..500 {
            let (lr, ls) = (rng.random_range(1..30), rng.random_range(1..30));
            let r = random_steps(&g, rng.random_range(0..4), lr, &mut rng);
            let s = random_steps(&g, rng.random_range(0..4), ls, &mut rng);
            let res = max_advance_steps(&r, &s, Target::BothToEnd).unwrap();
            if let Some(l) = res.blocking_prefix_length {
                let (rp, sp) = (&r[..l.min(lr)], &s[..l.min(ls)]);
                assert!(!max_advance_steps(rp, sp, Target::BothToEnd).unwrap().success);
                // And for every longer prefix too.
                for l2 in l..=lr.max(ls) {
                    let (rp, sp) = (&r[..l2.min(lr)], &s[..l2.min(ls)]);
                    assert!(!can_advance(rp, sp, Target::BothToEnd));
                }
            } else {
                assert!(res.success);
            }
        }
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
        (any::<u64>(), 1usize..9, 1usize..9).prop_map(|(seed, a, b)| {
            let g = families::complete(4);
            let mut rng = RandomSource::new(seed).rng();
            let r = random_steps(&g, rng.random_range(0..4), a, &mut rng);
            let s = random_steps(&g, rng.random_range(0..4), b, &mut rng);
            (r, s)
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force((r, s) in arb_pair()) {
            let res = max_advance_steps(&r, &s, Target::BothToEnd).unwrap();
            prop_assert_eq!(res.success, brute_force_schedule(&r, &s).unwrap());
            prop_assert_eq!(res.success, can_advance(&r, &s, Target::BothToEnd));
        }

        #[test]
        fn transpose_symmetry((r, s) in arb_pair()) {
            let a = ReachSet::compute(&r, &s).unwrap();
            let b = ReachSet::compute(&s, &r).unwrap();
            let mut t: Vec<_> = b.states().map(|(i, j)| (j, i)).collect();
            t.sort_unstable();
            prop_assert_eq!(a.states().collect::<Vec<_>>(), t);
        }

        #[test]
        fn witnesses_replay((r, s) in arb_pair(), n in 0usize..8) {
            for target in [Target::BothToEnd, Target::MinAdvance(n), Target::FirstToEnd] {
                let res = max_advance_steps(&r, &s, target).unwrap();
                if let Some(w) = &res.witness {
                    let states = w.replay(&r, &s).unwrap();
                    prop_assert_eq!(states.last().copied(), res.target_state);
                }
                prop_assert_eq!(res.success, res.witness.is_some());
            }
        }

        #[test]
        fn min_advance_is_monotone((r, s) in arb_pair(), n in 0usize..8) {
            if can_advance(&r, &s, Target::MinAdvance(n)) {
                for m in 0..n {
                    prop_assert!(can_advance(&r, &s, Target::MinAdvance(m)));
                }
            }
        }
    }
}
