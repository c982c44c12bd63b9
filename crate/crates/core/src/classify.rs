//! Graph-family predicates and the pivot-vertex characterizations.
//!
//! A graph carries an evasive walk exactly when it is not a path, a cycle or
//! the claw `K_{1,3}`; equivalently some vertex `v` leaves a non-path
//! component after deletion. The stronger constructions (walks visiting
//! every vertex infinitely often) need a pivot joined to such a component by
//! at least two edges, which fails exactly for trees, cycles and the
//! triangle-with-tails graphs `Y_abc`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphClass {
    pub is_path: bool,
    pub is_cycle: bool,
    pub is_k13: bool,
    pub is_tree: bool,
    /// Pendant path lengths (in edges) at the triangle vertices, in vertex
    /// order. The bare triangle is `(0, 0, 0)`.
    pub yabc_params: Option<(usize, usize, usize)>,
    pub evasive_exists: bool,
    pub strong_evasive_exists: bool,
}

/// A vertex whose deletion leaves a non-path component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PivotWitness {
    pub pivot: usize,
    pub component: Vec<usize>,
    /// Least neighbor of the pivot inside `component`; only set by
    /// [`find_pivot_double_edge`].
    pub anchor: Option<usize>,
}

pub fn classify(g: &Graph) -> Result<GraphClass> {
    g.require_connected()?;
    let n = g.len();
    let m = g.edge_count();
    let max_deg = (0..n).map(|v| g.degree(v)).max().unwrap_or(0);
    let is_tree = m + 1 == n;
    let is_path = is_tree && max_deg <= 2;
    let is_cycle = n >= 3 && m == n && (0..n).all(|v| g.degree(v) == 2);
    let is_k13 = n == 4 && is_tree && max_deg == 3;
    let yabc_params = yabc_params(g);
    Ok(GraphClass {
        is_path,
        is_cycle,
        is_k13,
        is_tree,
        evasive_exists: !(is_path || is_cycle || is_k13),
        strong_evasive_exists: !(is_tree || is_cycle || yabc_params.is_some()),
        yabc_params,
    })
}

/// Detects a triangle with three (possibly empty) pendant paths.
fn yabc_params(g: &Graph) -> Option<(usize, usize, usize)> {
    let n = g.len();
    if g.edge_count() != n || !g.is_connected() {
        return None;
    }
    // Peel leaves; a connected unicyclic graph leaves exactly its cycle.
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut alive = vec![true; n];
    let mut stack: Vec<usize> = (0..n).filter(|&v| deg[v] == 1).collect();
    while let Some(v) = stack.pop() {
        if !alive[v] {
            continue;
        }
        alive[v] = false;
        for &u in g.neighbors(v) {
            if alive[u] {
                deg[u] -= 1;
                if deg[u] == 1 {
                    stack.push(u);
                }
            }
        }
    }
    let core: Vec<usize> = (0..n).filter(|&v| alive[v]).collect();
    if core.len() != 3 {
        return None;
    }
    for v in 0..n {
        let limit = if alive[v] { 3 } else { 2 };
        if g.degree(v) > limit {
            return None;
        }
    }
    let tail = |root: usize| -> usize {
        let mut prev = root;
        let mut cur = match g.neighbors(root).iter().find(|&&u| !alive[u]) {
            Some(&u) => u,
            None => return 0,
        };
        let mut len = 1;
        while let Some(&next) = g.neighbors(cur).iter().find(|&&u| u != prev) {
            prev = cur;
            cur = next;
            len += 1;
        }
        len
    };
    Some((tail(core[0]), tail(core[1]), tail(core[2])))
}

/// Whether the subgraph induced by `vertices` is a path (a single vertex
/// counts). Assumes nothing about connectivity.
pub fn induced_is_path(g: &Graph, vertices: &[usize]) -> bool {
    let mask = g.mask_of(vertices);
    let mut edges = 0;
    for &v in vertices {
        let d = g.neighbors(v).iter().filter(|&&u| mask[u]).count();
        if d > 2 {
            return false;
        }
        edges += d;
    }
    edges / 2 + 1 == vertices.len() && g.components_within(&mask).len() == 1
}

/// Components of `G - v` as vertex lists of `g`, ordered by least vertex.
pub fn components_without(g: &Graph, v: usize) -> Vec<Vec<usize>> {
    let mut mask = vec![true; g.len()];
    mask[v] = false;
    g.components_within(&mask)
}

/// Components of `G - v` as standalone graphs, ordered by least vertex.
pub fn delete_vertex(g: &Graph, name: &str) -> Result<Vec<Graph>> {
    let v = g.vertex(name)?;
    Ok(components_without(g, v)
        .into_iter()
        .map(|c| g.induced(&c).0)
        .collect())
}

pub fn find_pivot_nonpath(g: &Graph) -> Result<Option<PivotWitness>> {
    g.require_connected()?;
    for v in 0..g.len() {
        if let Some(component) = components_without(g, v)
            .into_iter()
            .find(|c| !induced_is_path(g, c))
        {
            return Ok(Some(PivotWitness {
                pivot: v,
                component,
                anchor: None,
            }));
        }
    }
    Ok(None)
}

pub fn find_pivot_double_edge(g: &Graph) -> Result<Option<PivotWitness>> {
    g.require_connected()?;
    for v in 0..g.len() {
        for component in components_without(g, v) {
            let mask = g.mask_of(&component);
            let inside: Vec<usize> = g
                .neighbors(v)
                .iter()
                .copied()
                .filter(|&u| mask[u])
                .collect();
            if inside.len() >= 2 && !induced_is_path(g, &component) {
                return Ok(Some(PivotWitness {
                    pivot: v,
                    component,
                    anchor: Some(inside[0]),
                }));
            }
        }
    }
    Ok(None)
}

impl PivotWitness {
    /// Checks the structural invariants against `g`.
    pub fn validate(&self, g: &Graph) -> Result<()> {
        let mask = g.mask_of(&self.component);
        if mask[self.pivot] {
            return Err(Error::Precondition("pivot inside its component".into()));
        }
        if g.components_within(&mask).len() != 1 || induced_is_path(g, &self.component) {
            return Err(Error::Precondition(
                "component must be connected and not a path".into(),
            ));
        }
        if let Some(w) = self.anchor {
            let inside = g.neighbors(self.pivot).iter().filter(|&&u| mask[u]).count();
            if inside < 2 || !mask[w] || !g.has_edge(self.pivot, w) {
                return Err(Error::Precondition("bad double-edge anchor".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;

    #[test]
    fn classifies_small_families() {
        let p3 = classify(&families::path(3)).unwrap();
        assert!(p3.is_path && p3.is_tree && !p3.evasive_exists);

        let k4 = classify(&families::complete(4)).unwrap();
        assert!(k4.evasive_exists && k4.strong_evasive_exists);

        let y = classify(&families::yabc(1, 1, 1)).unwrap();
        assert_eq!(y.yabc_params, Some((1, 1, 1)));
        assert!(y.evasive_exists && !y.strong_evasive_exists);

        let claw = classify(&families::star(3)).unwrap();
        assert!(claw.is_k13 && claw.is_tree && !claw.evasive_exists);

        let c5 = classify(&families::cycle(5)).unwrap();
        assert!(c5.is_cycle && !c5.evasive_exists && !c5.strong_evasive_exists);

        let tri = classify(&families::cycle(3)).unwrap();
        assert!(tri.is_cycle);
        assert_eq!(tri.yabc_params, Some((0, 0, 0)));

        let single = classify(&families::path(1)).unwrap();
        assert!(single.is_path && single.is_tree);
    }

    #[test]
    fn yabc_lengths_follow_vertex_order() {
        assert_eq!(
            classify(&families::yabc(2, 0, 3)).unwrap().yabc_params,
            Some((2, 0, 3))
        );
        // A triangle vertex carrying two pendant edges is not Y_abc.
        let g = Graph::new(
            &["A", "B", "C", "D", "E"],
            &[("A", "B"), ("B", "C"), ("A", "C"), ("A", "D"), ("A", "E")],
        )
        .unwrap();
        assert_eq!(classify(&g).unwrap().yabc_params, None);
        // Neither is a 4-cycle with a tail.
        let g = Graph::new(
            &["A", "B", "C", "D", "E"],
            &[("A", "B"), ("B", "C"), ("C", "D"), ("D", "A"), ("A", "E")],
        )
        .unwrap();
        assert_eq!(classify(&g).unwrap().yabc_params, None);
    }

    #[test]
    fn rejects_disconnected_and_empty() {
        let g = Graph::new(&["A", "B"], &[]).unwrap();
        assert_eq!(classify(&g), Err(Error::Disconnected));
        let empty = Graph::new::<&str>(&[], &[]).unwrap();
        assert_eq!(classify(&empty), Err(Error::EmptyGraph));
    }

    #[test]
    fn nonpath_pivot_examples() {
        let w = find_pivot_nonpath(&families::complete(4)).unwrap().unwrap();
        assert_eq!((w.pivot, w.component.as_slice()), (0, &[1, 2, 3][..]));
        assert_eq!(find_pivot_nonpath(&families::star(3)).unwrap(), None);
        assert_eq!(find_pivot_nonpath(&families::cycle(5)).unwrap(), None);
    }

    #[test]
    fn double_edge_pivot_examples() {
        let k4 = families::complete(4);
        let w = find_pivot_double_edge(&k4).unwrap().unwrap();
        assert_eq!(w.pivot, 0);
        assert_eq!(w.component, vec![1, 2, 3]);
        assert_eq!(w.anchor, Some(1));
        w.validate(&k4).unwrap();

        assert_eq!(find_pivot_double_edge(&families::yabc(1, 1, 1)).unwrap(), None);

        let k23 = families::complete_bipartite(2, 3);
        let w = find_pivot_double_edge(&k23).unwrap().unwrap();
        w.validate(&k23).unwrap();
    }

    #[test]
    fn k23_has_degree_two_pivots_too() {
        // Brute force: every vertex deletion, check components directly.
        let g = families::complete_bipartite(2, 3);
        let deg2_pivots: Vec<usize> = (2..5)
            .filter(|&v| {
                components_without(&g, v).iter().any(|c| {
                    let inside = g.neighbors(v).iter().filter(|u| c.contains(u)).count();
                    inside >= 2 && !induced_is_path(&g, c)
                })
            })
            .collect();
        assert_eq!(deg2_pivots, vec![2, 3, 4]);
    }

    #[test]
    fn delete_vertex_examples() {
        let k4 = families::complete(4);
        let parts = delete_vertex(&k4, "A").unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].names(), &["B", "C", "D"]);
        assert_eq!(parts[0].edge_count(), 3);

        let claw = delete_vertex(&families::star(3), "A").unwrap();
        assert_eq!(claw.len(), 3);
        assert!(claw.iter().all(|c| c.len() == 1));

        let p = delete_vertex(&families::path(3), "B").unwrap();
        let names: Vec<_> = p.iter().map(|c| c.names()[0].clone()).collect();
        assert_eq!(names, vec!["A", "C"]);

        assert!(matches!(
            delete_vertex(&k4, "Z"),
            Err(Error::UnknownVertex(_))
        ));
    }
}
