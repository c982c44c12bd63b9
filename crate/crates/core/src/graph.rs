//! Finite simple undirected graphs over named vertices.
//!
//! Vertices are opaque strings externally and dense `usize` indices
//! internally; the index of a vertex is its position in declaration order,
//! which doubles as the deterministic tie-break order used everywhere.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    names: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from vertex names and name pairs. Rejects self-loops,
    /// duplicate edges, duplicate vertices and undeclared endpoints.
    pub fn new<S: AsRef<str>>(vertices: &[S], edges: &[(S, S)]) -> Result<Self> {
        let mut names = Vec::with_capacity(vertices.len());
        let mut index = HashMap::with_capacity(vertices.len());
        for v in vertices {
            let v = v.as_ref().to_string();
            if index.insert(v.clone(), names.len()).is_some() {
                return Err(Error::DuplicateVertex(v));
            }
            names.push(v);
        }
        let mut pairs = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let u = *index
                .get(a.as_ref())
                .ok_or_else(|| Error::UnknownVertex(a.as_ref().to_string()))?;
            let v = *index
                .get(b.as_ref())
                .ok_or_else(|| Error::UnknownVertex(b.as_ref().to_string()))?;
            pairs.push((u, v));
        }
        Self::build(names, index, &pairs)
    }

    /// Builds a graph from names and index pairs.
    pub fn from_indexed(names: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, v) in names.iter().enumerate() {
            if index.insert(v.clone(), i).is_some() {
                return Err(Error::DuplicateVertex(v.clone()));
            }
        }
        for &(u, v) in edges {
            if u >= names.len() || v >= names.len() {
                return Err(Error::UnknownVertex(format!("#{}", u.max(v))));
            }
        }
        Self::build(names, index, edges)
    }

    fn build(
        names: Vec<String>,
        index: HashMap<String, usize>,
        edges: &[(usize, usize)],
    ) -> Result<Self> {
        let mut adj = vec![Vec::new(); names.len()];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::SelfLoop(names[u].clone()));
            }
            if adj[u].contains(&v) {
                return Err(Error::DuplicateEdge(names[u].clone(), names[v].clone()));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self { names, index, adj })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    /// Resolves a vertex name to its index.
    pub fn vertex(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// Neighbors of `v` in increasing index order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn is_connected(&self) -> bool {
        !self.is_empty() && self.components_within(&vec![true; self.len()]).len() == 1
    }

    pub fn require_connected(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyGraph)
        } else if !self.is_connected() {
            Err(Error::Disconnected)
        } else {
            Ok(())
        }
    }

    /// Connected components of the subgraph induced by `mask`, each sorted,
    /// listed by least vertex.
    pub fn components_within(&self, mask: &[bool]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for s in 0..self.len() {
            if !mask[s] || seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if mask[v] && !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// Induced subgraph on `vertices` (kept in the given order). The returned
    /// map sends each subgraph index to its index in `self`.
    pub fn induced(&self, vertices: &[usize]) -> (Graph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.len()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let names = vertices.iter().map(|&v| self.names[v].clone()).collect();
        let mut edges = Vec::new();
        for (i, &v) in vertices.iter().enumerate() {
            for &u in &self.adj[v] {
                let j = local[u];
                if j != usize::MAX && j > i {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::from_indexed(names, &edges).expect("induced subgraph of a simple graph");
        (g, vertices.to_vec())
    }

    /// Same graph with vertex `i` renamed/reindexed to position `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        let mut names = vec![String::new(); self.len()];
        for (i, &p) in perm.iter().enumerate() {
            names[p] = self.names[i].clone();
        }
        let edges: Vec<_> = self.edges().map(|(u, v)| (perm[u], perm[v])).collect();
        Graph::from_indexed(names, &edges).expect("relabeling preserves simplicity")
    }

    /// Breadth-first shortest path from `from` to `to` using only vertices in
    /// `mask`. Ties go to the smaller neighbor index. Includes both ends.
    pub fn shortest_path_within(&self, from: usize, to: usize, mask: &[bool]) -> Option<Vec<usize>> {
        if !mask[from] || !mask[to] {
            return None;
        }
        let mut prev = vec![usize::MAX; self.len()];
        prev[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == to {
                break;
            }
            for &v in &self.adj[u] {
                if mask[v] && prev[v] == usize::MAX {
                    prev[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if prev[to] == usize::MAX {
            return None;
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }

    /// Distances from `from` restricted to `mask` (`usize::MAX` if unreachable).
    pub fn distances_within(&self, from: usize, mask: &[bool]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.len()];
        if !mask[from] {
            return dist;
        }
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if mask[v] && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn mask_of(&self, vertices: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.len()];
        for &v in vertices {
            mask[v] = true;
        }
        mask
    }
}

/// Standard graph families with the vertex names used throughout the tests
/// and the CLI (`A`, `B`, ... up to 26 vertices, `v1`, `v2`, ... beyond).
pub mod families {
    use super::Graph;

    pub fn letter_names(n: usize) -> Vec<String> {
        if n <= 26 {
            (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect()
        } else {
            numbered_names(n)
        }
    }

    pub fn numbered_names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("v{i}")).collect()
    }

    pub fn complete(n: usize) -> Graph {
        complete_with_names(letter_names(n))
    }

    /// `K_n` on `v1..vn`.
    pub fn complete_numbered(n: usize) -> Graph {
        complete_with_names(numbered_names(n))
    }

    fn complete_with_names(names: Vec<String>) -> Graph {
        let n = names.len();
        let edges: Vec<_> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .collect();
        Graph::from_indexed(names, &edges).unwrap()
    }

    /// Cycle whose vertex order is the cyclic order.
    pub fn cycle(n: usize) -> Graph {
        assert!(n >= 3, "cycle needs at least 3 vertices");
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_indexed(letter_names(n), &edges).unwrap()
    }

    pub fn path(n: usize) -> Graph {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Graph::from_indexed(letter_names(n), &edges).unwrap()
    }

    /// `K_{1,k}` with the center first.
    pub fn star(k: usize) -> Graph {
        let edges: Vec<_> = (1..=k).map(|i| (0, i)).collect();
        Graph::from_indexed(letter_names(k + 1), &edges).unwrap()
    }

    pub fn complete_bipartite(p: usize, q: usize) -> Graph {
        let edges: Vec<_> = (0..p)
            .flat_map(|u| (p..p + q).map(move |v| (u, v)))
            .collect();
        Graph::from_indexed(letter_names(p + q), &edges).unwrap()
    }

    /// Triangle on the first three vertices with pendant paths of `a`, `b`,
    /// `c` edges hanging off them.
    pub fn yabc(a: usize, b: usize, c: usize) -> Graph {
        let mut edges = vec![(0, 1), (1, 2), (0, 2)];
        let mut next = 3;
        for (root, len) in [(0, a), (1, b), (2, c)] {
            let mut prev = root;
            for _ in 0..len {
                edges.push((prev, next));
                prev = next;
                next += 1;
            }
        }
        Graph::from_indexed(letter_names(next), &edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_malformed_input() {
        assert_eq!(
            Graph::new(&["A", "B"], &[("A", "A")]),
            Err(Error::SelfLoop("A".into()))
        );
        assert!(matches!(
            Graph::new(&["A", "B"], &[("A", "B"), ("B", "A")]),
            Err(Error::DuplicateEdge(..))
        ));
        assert!(matches!(
            Graph::new(&["A", "B"], &[("A", "X")]),
            Err(Error::UnknownVertex(_))
        ));
        assert!(matches!(
            Graph::new(&["A", "A"], &[]),
            Err(Error::DuplicateVertex(_))
        ));
    }

    #[test]
    fn connectivity_is_per_operation() {
        let g = Graph::new(&["A", "B", "C"], &[("A", "B")]).unwrap();
        assert!(!g.is_connected());
        assert_eq!(g.require_connected(), Err(Error::Disconnected));
        assert_eq!(g.components_within(&[true; 3]), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn families_have_expected_shape() {
        assert_eq!(families::complete(4).edge_count(), 6);
        assert_eq!(families::cycle(5).edge_count(), 5);
        assert_eq!(families::star(3).degree(0), 3);
        let y = families::yabc(1, 2, 0);
        assert_eq!(y.len(), 6);
        assert_eq!(y.edge_count(), 6);
        assert_eq!(families::complete_bipartite(2, 3).edge_count(), 6);
    }

    #[test]
    fn shortest_path_respects_mask() {
        let g = families::cycle(5);
        let mut mask = vec![true; 5];
        assert_eq!(g.shortest_path_within(0, 2, &mask), Some(vec![0, 1, 2]));
        mask[1] = false;
        assert_eq!(g.shortest_path_within(0, 2, &mask), Some(vec![0, 4, 3, 2]));
    }
}
