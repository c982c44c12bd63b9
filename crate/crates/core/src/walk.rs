//! Walks, seeded random walk generation and visit-density profiles.
//!
//! Length follows the vertex-count convention: a walk of length `L` visits
//! `L` vertices (with multiplicity) and crosses `L - 1` edges.

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone)]
pub struct Walk {
    graph: Arc<Graph>,
    steps: Vec<usize>,
}

impl Walk {
    /// Validates an index sequence against `graph`.
    pub fn new(graph: Arc<Graph>, steps: Vec<usize>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::EmptyWalk);
        }
        if let Some(&bad) = steps.iter().find(|&&v| v >= graph.len()) {
            return Err(Error::UnknownVertex(format!("#{bad}")));
        }
        if let Some(i) = first_gap(&graph, &steps) {
            return Err(Error::NotAdjacent {
                index: i,
                from: graph.name(steps[i - 1]).to_string(),
                to: graph.name(steps[i]).to_string(),
            });
        }
        Ok(Self { graph, steps })
    }

    pub(crate) fn new_unchecked(graph: Arc<Graph>, steps: Vec<usize>) -> Self {
        debug_assert!(!steps.is_empty() && first_gap(&graph, &steps).is_none());
        Self { graph, steps }
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn into_steps(self) -> Vec<usize> {
        self.steps
    }

    /// Number of vertices visited.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    /// 1-indexed vertex access, matching the `R(i)` convention.
    pub fn at(&self, i: usize) -> usize {
        self.steps[i - 1]
    }

    pub fn names(&self) -> Vec<&str> {
        self.steps.iter().map(|&v| self.graph.name(v)).collect()
    }

    /// Prefix of the first `len` vertices (clamped to the walk).
    pub fn prefix(&self, len: usize) -> Walk {
        let len = len.clamp(1, self.len());
        Self::new_unchecked(self.graph.clone(), self.steps[..len].to_vec())
    }

    /// Subwalk `R(from) .. R(to)` inclusive, 1-indexed.
    pub fn subwalk(&self, from: usize, to: usize) -> Walk {
        Self::new_unchecked(self.graph.clone(), self.steps[from - 1..to].to_vec())
    }

    pub fn same_graph(&self, other: &Walk) -> bool {
        Arc::ptr_eq(&self.graph, &other.graph) || *self.graph == *other.graph
    }
}

impl PartialEq for Walk {
    fn eq(&self, other: &Self) -> bool {
        self.steps == other.steps && self.same_graph(other)
    }
}

impl fmt::Display for Walk {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.names().join(" "))
    }
}

fn first_gap(g: &Graph, steps: &[usize]) -> Option<usize> {
    steps
        .windows(2)
        .position(|p| !g.has_edge(p[0], p[1]))
        .map(|i| i + 1)
}

/// Parses and validates a sequence of vertex names. Error indices are
/// 0-based positions in `names`.
pub fn validate_walk<S: AsRef<str>>(graph: &Arc<Graph>, names: &[S]) -> Result<Walk> {
    if names.is_empty() {
        return Err(Error::EmptyWalk);
    }
    let steps = names
        .iter()
        .map(|n| graph.vertex(n.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Walk::new(graph.clone(), steps)
}

/// Walk text format: vertex names separated by whitespace or newlines.
/// Lines starting with `#` are comments.
pub fn parse_walk(graph: &Arc<Graph>, text: &str) -> Result<Walk> {
    let names: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .flat_map(str::split_whitespace)
        .collect();
    validate_walk(graph, &names)
}

/// Seed plus per-trial substream. Draws depend only on `(seed, stream)`,
/// never on the order in which trials execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn substream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Uniform random walk of `length` vertices on index level.
pub fn random_steps<R: Rng + ?Sized>(g: &Graph, start: usize, length: usize, rng: &mut R) -> Vec<usize> {
    let mut steps = Vec::with_capacity(length);
    let mut cur = start;
    steps.push(cur);
    for _ in 1..length {
        let ns = g.neighbors(cur);
        cur = ns[rng.random_range(0..ns.len())];
        steps.push(cur);
    }
    steps
}

pub fn random_walk(g: &Arc<Graph>, start: usize, length: usize, src: RandomSource) -> Result<Walk> {
    if length == 0 {
        return Err(Error::Precondition("walk length must be positive".into()));
    }
    if start >= g.len() {
        return Err(Error::UnknownVertex(format!("#{start}")));
    }
    if length > 1 && g.degree(start) == 0 {
        return Err(Error::Precondition(format!(
            "start vertex {} is isolated",
            g.name(start)
        )));
    }
    let mut rng = src.rng();
    Ok(Walk::new_unchecked(g.clone(), random_steps(g, start, length, &mut rng)))
}

/// Element `k-1` is the fraction of the first `k` positions that visit `v`.
pub fn density_profile(w: &Walk, v: usize) -> Result<Vec<Ratio<usize>>> {
    if v >= w.graph.len() {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    let mut hits = 0;
    Ok(w.steps
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            hits += usize::from(x == v);
            Ratio::new(hits, i + 1)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use proptest::prelude::*;

    fn k4() -> Arc<Graph> {
        Arc::new(families::complete(4))
    }

    #[test]
    fn validation_examples() {
        let g = k4();
        assert!(validate_walk(&g, &["A", "B", "A", "B"]).is_ok());

        let p = Arc::new(families::path(3));
        assert_eq!(
            validate_walk(&p, &["A", "C"]),
            Err(Error::NotAdjacent {
                index: 1,
                from: "A".into(),
                to: "C".into()
            })
        );
        assert_eq!(
            validate_walk(&g, &["A", "B", "X"]),
            Err(Error::UnknownVertex("X".into()))
        );
        assert_eq!(validate_walk::<&str>(&g, &[]), Err(Error::EmptyWalk));
        assert_eq!(validate_walk(&g, &["A", "A"]).unwrap_err(), Error::NotAdjacent {
            index: 1,
            from: "A".into(),
            to: "A".into()
        });
    }

    #[test]
    fn parses_text_format() {
        let g = k4();
        let w = parse_walk(&g, "# comment\nA B\n  C\tD\n").unwrap();
        assert_eq!(w.to_string(), "A B C D");
    }

    #[test]
    fn single_vertex_walk() {
        let w = random_walk(&k4(), 2, 1, RandomSource::new(1)).unwrap();
        assert_eq!(w.steps(), &[2]);
    }

    #[test]
    fn density_examples() {
        let g = k4();
        let w = validate_walk(&g, &["A", "B", "A", "B"]).unwrap();
        let p = density_profile(&w, 0).unwrap();
        assert_eq!(
            p,
            vec![Ratio::new(1, 1), Ratio::new(1, 2), Ratio::new(2, 3), Ratio::new(1, 2)]
        );
        let none = density_profile(&w, 3).unwrap();
        assert!(none.iter().all(|r| *r == Ratio::new(0, 1)));
        assert!(density_profile(&w, 9).is_err());
    }

    #[test]
    fn second_vertex_is_uniform_over_neighbors() {
        // Chi-square with 2 degrees of freedom; 13.816 is the 0.001 critical value.
        let g = k4();
        let mut counts = [0usize; 4];
        for t in 0..10_000 {
            let w = random_walk(&g, 0, 2, RandomSource::new(7).substream(t)).unwrap();
            counts[w.at(2)] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = 10_000.0 / 3.0;
        let chi2: f64 = counts[1..]
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 13.816, "chi2 = {chi2}, counts = {counts:?}");
    }

    proptest! {
        #[test]
        fn random_walks_are_valid_and_reproducible(seed in any::<u64>(), stream in 0u64..1000, len in 1usize..60) {
            let g = Arc::new(families::yabc(1, 2, 0));
            let src = RandomSource { seed, stream };
            let a = random_walk(&g, 0, len, src).unwrap();
            let b = random_walk(&g, 0, len, src).unwrap();
            prop_assert_eq!(a.len(), len);
            prop_assert!(Walk::new(g.clone(), a.steps().to_vec()).is_ok());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn density_moves_by_at_most_one_over_k(seed in any::<u64>(), len in 2usize..80) {
            let g = k4();
            let w = random_walk(&g, 0, len, RandomSource::new(seed)).unwrap();
            let p = density_profile(&w, 1).unwrap();
            for k in 1..p.len() {
                let diff = if p[k] > p[k - 1] { p[k] - p[k - 1] } else { p[k - 1] - p[k] };
                prop_assert!(diff <= Ratio::new(1, k + 1));
                prop_assert!(p[k] <= Ratio::new(1, 1));
            }
        }
    }
}
