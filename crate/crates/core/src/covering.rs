//! Covering walks `<G'>_l`: walks on a subgraph `G'` that contain, as a
//! contiguous segment, an allowed walk for every walk of length at most `l`
//! on the ambient graph.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::fill_runs_word;
use crate::classify::induced_is_path;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::schedule::allowed_walk_in;
use crate::walk::Walk;

/// Cap on the number of enumerated target walks.
pub const DEFAULT_WALK_CAP: u128 = 1_000_000;

#[derive(Debug, Clone)]
pub struct CoveringSpec {
    pub ambient: Arc<Graph>,
    /// Vertices of `G'`, sorted.
    pub sub: Vec<usize>,
    /// Longest covered walk, in vertices.
    pub l: usize,
    /// When set to `w`, the walk starts and ends at a neighbor of `w` in `G'`.
    pub anchor: Option<usize>,
    pub walk_cap: u128,
}

impl CoveringSpec {
    pub fn new(ambient: Arc<Graph>, mut sub: Vec<usize>, l: usize) -> Result<Self> {
        sub.sort_unstable();
        sub.dedup();
        let spec = Self {
            ambient,
            sub,
            l,
            anchor: None,
            walk_cap: DEFAULT_WALK_CAP,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_anchor(mut self, w: usize) -> Result<Self> {
        self.anchor = Some(w);
        self.validate()?;
        Ok(self)
    }

    pub fn with_walk_cap(mut self, cap: u128) -> Self {
        self.walk_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.ambient;
        if self.l == 0 {
            return Err(Error::Precondition("l must be at least 1".into()));
        }
        if self.sub.is_empty() || self.sub.iter().any(|&v| v >= g.len()) {
            return Err(Error::Precondition("subgraph vertex set is invalid".into()));
        }
        let mask = self.mask();
        if g.components_within(&mask).len() != 1 {
            return Err(Error::Precondition("subgraph is not connected".into()));
        }
        if induced_is_path(g, &self.sub) {
            return Err(Error::Precondition("subgraph is a path".into()));
        }
        if let Some(w) = self.anchor {
            if !mask[w] {
                return Err(Error::Precondition("anchor must lie in the subgraph".into()));
            }
        }
        Ok(())
    }

    pub fn mask(&self) -> Vec<bool> {
        self.ambient.mask_of(&self.sub)
    }

    fn sub_adjacency(&self) -> Vec<Vec<usize>> {
        let mask = self.mask();
        (0..self.ambient.len())
            .map(|v| {
                if mask[v] {
                    self.ambient
                        .neighbors(v)
                        .iter()
                        .copied()
                        .filter(|&u| mask[u])
                        .collect()
                } else {
                    Vec::new()
                }
            })
            .collect()
    }
}

/// Number of walks of length `1..=l` on `g`, saturating.
pub fn count_walks(g: &Graph, l: usize) -> u128 {
    let mut per_vertex = vec![1u128; g.len()];
    let mut total: u128 = per_vertex.iter().sum();
    for _ in 1..l {
        per_vertex = (0..g.len())
            .map(|v| {
                g.neighbors(v)
                    .iter()
                    .fold(0u128, |acc, &u| acc.saturating_add(per_vertex[u]))
            })
            .collect();
        total = per_vertex.iter().fold(total, |acc, &c| acc.saturating_add(c));
    }
    total
}

/// All walks of length `1..=l`, shortest first, lexicographic within a length.
pub fn enumerate_walks(g: &Graph, l: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<usize>> = (0..g.len()).map(|v| vec![v]).collect();
    for len in 1..=l {
        if len > 1 {
            layer = layer
                .iter()
                .flat_map(|w| {
                    let last = *w.last().unwrap();
                    g.neighbors(last).iter().map(move |&u| {
                        let mut next = w.clone();
                        next.push(u);
                        next
                    })
                })
                .collect();
        }
        out.extend(layer.iter().cloned());
    }
    out
}

/// Appends `piece` to `walk`, joining by a shortest path inside `mask`
/// (or overlapping when the endpoints coincide). The piece stays a
/// contiguous segment of the result.
pub(crate) fn append_joined(g: &Graph, mask: &[bool], walk: &mut Vec<usize>, piece: &[usize]) {
    let Some(&last) = walk.last() else {
        walk.extend_from_slice(piece);
        return;
    };
    let path = g
        .shortest_path_within(last, piece[0], mask)
        .expect("join inside a connected subgraph");
    walk.extend_from_slice(&path[1..]);
    walk.extend_from_slice(&piece[1..]);
}

pub fn build_covering_walk(spec: &CoveringSpec) -> Result<Walk> {
    spec.validate()?;
    let g = &spec.ambient;
    let count = count_walks(g, spec.l);
    if count > spec.walk_cap {
        return Err(Error::Guard(format!(
            "{count} walks of length <= {} exceed the cap of {}",
            spec.l, spec.walk_cap
        )));
    }
    let mask = spec.mask();
    let adj = spec.sub_adjacency();
    let targets = enumerate_walks(g, spec.l);
    let pieces: Vec<Vec<usize>> = targets
        .par_iter()
        .map(|r| allowed_walk_in(r, &adj, &spec.sub))
        .collect::<Option<_>>()
        .ok_or_else(|| Error::Precondition("some walk has no allowed walk on G'".into()))?;

    let mut walk = Vec::new();
    for piece in &pieces {
        append_joined(g, &mask, &mut walk, piece);
    }
    // Make sure every vertex of G' is visited; extension keeps coverage.
    for &v in &spec.sub {
        if !walk.contains(&v) {
            append_joined(g, &mask, &mut walk, &[v]);
        }
    }
    if let Some(w) = spec.anchor {
        anchor_ends(g, &mask, w, &mut walk)?;
    }
    Ok(Walk::new_unchecked(g.clone(), walk))
}

/// Extends both ends so the walk starts and ends at a neighbor of `w`
/// inside the mask (nearest such neighbor, least index on ties).
pub(crate) fn anchor_ends(g: &Graph, mask: &[bool], w: usize, walk: &mut Vec<usize>) -> Result<()> {
    let targets: Vec<usize> = g.neighbors(w).iter().copied().filter(|&u| mask[u]).collect();
    if targets.is_empty() {
        return Err(Error::Precondition(
            "anchor has no neighbor inside the subgraph".into(),
        ));
    }
    let nearest = |from: usize| -> Vec<usize> {
        let dist = g.distances_within(from, mask);
        let best = *targets.iter().min_by_key(|&&t| (dist[t], t)).unwrap();
        g.shortest_path_within(from, best, mask).unwrap()
    };
    let first = walk[0];
    if !targets.contains(&first) {
        let mut lead = nearest(first);
        lead.reverse();
        lead.pop();
        lead.extend_from_slice(walk);
        *walk = lead;
    }
    let last = *walk.last().unwrap();
    if !targets.contains(&last) {
        let tail = nearest(last);
        walk.extend_from_slice(&tail[1..]);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub covered: bool,
    /// Number of target walks checked.
    pub targets: usize,
    /// First target walk (enumeration order) with no allowed subwalk.
    pub uncovered: Option<Vec<usize>>,
}

/// Whether some contiguous window of `s` is allowed for `r`.
///
/// For each window start the grid is swept column by column along `s`,
/// with a column held as one machine word over positions of `r`.
pub(crate) fn has_allowed_window(r: &[usize], s: &[usize], r_legal: &[u64]) -> bool {
    debug_assert!(r.len() <= 64);
    let goal = 1u64 << (r.len() - 1);
    for a in 0..s.len() {
        let mut col = fill_runs_word(1, r_legal[s[a]]);
        let mut j = a;
        while col != 0 {
            if col & goal != 0 {
                return true;
            }
            j += 1;
            if j == s.len() {
                break;
            }
            col = fill_runs_word(col, r_legal[s[j]]);
        }
    }
    false
}

/// Bit `i` set when `r[i] != v`, one word per vertex.
pub(crate) fn legal_words(r: &[usize], n: usize) -> Vec<u64> {
    (0..n)
        .map(|v| {
            r.iter()
                .enumerate()
                .filter(|&(_, &x)| x != v)
                .fold(0u64, |acc, (i, _)| acc | 1 << i)
        })
        .collect()
}

pub fn verify_covering_walk(s: &Walk, spec: &CoveringSpec) -> Result<CoverageReport> {
    spec.validate()?;
    if !Arc::ptr_eq(s.graph(), &spec.ambient) && **s.graph() != *spec.ambient {
        return Err(Error::GraphMismatch);
    }
    let mask = spec.mask();
    if let Some(&v) = s.steps().iter().find(|&&v| !mask[v]) {
        return Err(Error::Precondition(format!(
            "walk leaves the subgraph at {}",
            spec.ambient.name(v)
        )));
    }
    if spec.l > 64 {
        return Err(Error::Guard("verification supports l <= 64".into()));
    }
    let g = &spec.ambient;
    let count = count_walks(g, spec.l);
    if count > spec.walk_cap {
        return Err(Error::Guard(format!(
            "{count} walks of length <= {} exceed the cap of {}",
            spec.l, spec.walk_cap
        )));
    }
    let targets = enumerate_walks(g, spec.l);
    let n = g.len();
    let first_bad = targets.par_iter().position_first(|r| {
        let legal = legal_words(r, n);
        !has_allowed_window(r, s.steps(), &legal)
    });
    Ok(CoverageReport {
        covered: first_bad.is_none(),
        targets: targets.len(),
        uncovered: first_bad.map(|i| targets[i].clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::schedule::is_allowed_pair;
    use crate::walk::{random_steps, validate_walk, RandomSource};
    use proptest::prelude::*;

    fn k4() -> Arc<Graph> {
        Arc::new(families::complete(4))
    }

    fn abc_spec(l: usize) -> CoveringSpec {
        CoveringSpec::new(k4(), vec![0, 1, 2], l).unwrap()
    }

    #[test]
    fn enumeration_counts() {
        let g = families::complete(4);
        assert_eq!(enumerate_walks(&g, 3).len(), 4 + 12 + 36);
        assert_eq!(count_walks(&g, 4), 4 + 12 + 36 + 108);
        assert_eq!(enumerate_walks(&g, 3).iter().filter(|w| w.len() == 3).count(), 36);
    }

    #[test]
    fn paper_walk_covers_length_three() {
        let g = k4();
        let s = validate_walk(&g, &["A", "B", "C", "A", "C", "B", "A"]).unwrap();
        let report = verify_covering_walk(&s, &abc_spec(3)).unwrap();
        assert!(report.covered);
        assert_eq!(report.targets, 52);
    }

    #[test]
    fn single_vertex_does_not_cover() {
        let g = k4();
        let s = validate_walk(&g, &["A"]).unwrap();
        let report = verify_covering_walk(&s, &abc_spec(1)).unwrap();
        assert!(!report.covered);
        assert_eq!(report.uncovered, Some(vec![0]));
    }

    #[test]
    fn trimming_a_minimal_walk_breaks_coverage() {
        let g = k4();
        let spec = abc_spec(3);
        let mut s = vec![0, 1, 2, 0, 2, 1, 0];
        // Trim from the end while coverage survives.
        while s.len() > 1
            && verify_covering_walk(&Walk::new(g.clone(), s[..s.len() - 1].to_vec()).unwrap(), &spec)
                .unwrap()
                .covered
        {
            s.pop();
        }
        let minimal = Walk::new(g.clone(), s.clone()).unwrap();
        assert!(verify_covering_walk(&minimal, &spec).unwrap().covered);
        let trimmed = Walk::new(g.clone(), s[..s.len() - 1].to_vec()).unwrap();
        let report = verify_covering_walk(&trimmed, &spec).unwrap();
        assert!(!report.covered);
        assert!(report.uncovered.is_some());
    }

    #[test]
    fn rejects_walks_off_the_subgraph() {
        let g = k4();
        let s = validate_walk(&g, &["A", "D"]).unwrap();
        assert!(matches!(
            verify_covering_walk(&s, &abc_spec(2)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn rejects_path_subgraphs() {
        let g = k4();
        assert!(CoveringSpec::new(g.clone(), vec![0, 1], 2).is_err());
        let c4 = Arc::new(families::cycle(4));
        assert!(CoveringSpec::new(c4, vec![0, 1, 2], 2).is_err());
    }

    #[test]
    fn builds_covering_for_k4_triangle() {
        let spec = abc_spec(3);
        let s = build_covering_walk(&spec).unwrap();
        assert!(verify_covering_walk(&s, &spec).unwrap().covered);
        let l1 = build_covering_walk(&abc_spec(1)).unwrap();
        assert!(verify_covering_walk(&l1, &abc_spec(1)).unwrap().covered);
        let distinct: std::collections::BTreeSet<_> = l1.steps().iter().collect();
        assert!(distinct.len() >= 2);
    }

    #[test]
    fn anchored_build_starts_and_ends_next_to_anchor() {
        let g = k4();
        let spec = CoveringSpec::new(g.clone(), vec![1, 2, 3], 3)
            .unwrap()
            .with_anchor(1)
            .unwrap();
        let s = build_covering_walk(&spec).unwrap();
        assert!(verify_covering_walk(&s, &spec).unwrap().covered);
        let (first, last) = (s.steps()[0], *s.steps().last().unwrap());
        assert!(g.has_edge(first, 1) && g.has_edge(last, 1));
    }

    #[test]
    fn round_trip_on_small_graphs() {
        // Every connected non-path induced subgraph of every connected graph
        // on <= 5 vertices from a fixed sample, l <= 3.
        let graphs = [
            families::complete(4),
            families::complete(5),
            families::cycle(5),
            families::yabc(1, 1, 0),
            families::complete_bipartite(2, 3),
            families::star(4),
        ];
        for g in graphs {
            let g = Arc::new(g);
            let n = g.len();
            for bits in 1u32..(1 << n) {
                let sub: Vec<usize> = (0..n).filter(|&v| bits >> v & 1 == 1).collect();
                for l in 1..=3 {
                    let Ok(spec) = CoveringSpec::new(g.clone(), sub.clone(), l) else {
                        continue;
                    };
                    let s = build_covering_walk(&spec).unwrap();
                    assert!(verify_covering_walk(&s, &spec).unwrap().covered);
                }
            }
        }
    }

    #[test]
    fn window_scan_agrees_with_scheduler() {
        let g = k4();
        let s = validate_walk(&g, &["A", "B", "C", "A", "C", "B", "A"]).unwrap();
        for r in enumerate_walks(&g, 3) {
            let rw = Walk::new(g.clone(), r.clone()).unwrap();
            let mut any = false;
            for a in 1..=s.len() {
                for b in a..=s.len() {
                    any |= is_allowed_pair(&rw, &s.subwalk(a, b)).unwrap().is_some();
                }
            }
            assert_eq!(any, has_allowed_window(&r, s.steps(), &legal_words(&r, 4)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn covering_is_monotone_in_l_and_survives_extension(seed in any::<u64>(), extra in 0usize..12) {
            let g = k4();
            let spec3 = abc_spec(3);
            let s = build_covering_walk(&spec3).unwrap();
            for l in 1..=3 {
                prop_assert!(verify_covering_walk(&s, &abc_spec(l)).unwrap().covered);
            }
            let tri = families::complete(3);
            let mut rng = RandomSource::new(seed).rng();
            let last = *s.steps().last().unwrap();
            let tail = random_steps(&tri, last, extra + 1, &mut rng);
            let mut longer = s.steps().to_vec();
            longer.extend_from_slice(&tail[1..]);
            let longer = Walk::new(g.clone(), longer).unwrap();
            prop_assert!(verify_covering_walk(&longer, &spec3).unwrap().covered);
        }
    }
}
