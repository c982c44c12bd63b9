//! Explicit evasive walks.
//!
//! Three generators, each emitting exactly `prefix_length` vertices plus
//! block metadata:
//!
//! * `t26`: a walk confined to a non-path component `G'` of `G - v` that
//!   runs through every finite walk on `G'`, lengths `1..=m` in round `m`.
//! * `t29`: `w B_1 w v w B_2 w v w ...` where row `B_i` is the chain of
//!   anchored covering walks with parameters `l_i1..l_ii`; every vertex is
//!   visited infinitely often.
//! * `k5`: on `K_n`, `n >= 5`, covering walks of the rotating triangle
//!   `v_j v_(j+1) v_(j+2)` with `l_j = ceil(j / n)`.

use std::collections::HashMap;
use std::ops::ControlFlow;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::classify::{components_without, find_pivot_double_edge, find_pivot_nonpath, PivotWitness};
use crate::covering::{append_joined, build_covering_walk, CoveringSpec};
use crate::error::{Error, Result};
use crate::excursion::{excursion_stats, ExcursionStats};
use crate::graph::{families, Graph};
use crate::walk::Walk;

/// Largest excursion length considered when searching for `l_ij`.
const MAX_EXCURSION_L: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    T26,
    T29,
    K5,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvasiveRecipe {
    pub theorem: Theorem,
    pub pivot: Option<PivotWitness>,
    /// `l_ij` row by row for `t29`, `l_j` for `k5`, round sizes for `t26`.
    pub block_params: Vec<usize>,
    pub prefix_length: usize,
    pub rule: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    /// All walks on `G'` of lengths `1..=m`.
    Round { m: usize },
    /// Anchored covering walk `<G'>_l` at position `(row, col)`.
    Covering { row: usize, col: usize, l: usize },
    /// The `w v w` segment closing a row, with `v` possibly replaced by a
    /// closed tour of `G - G'`.
    Return { row: usize },
    /// A whole macro-block: the row's covering walks and its return.
    Row { row: usize },
    /// Rotated triangle covering walk `j` (1-based).
    Rotated { index: usize, level: usize, rotation: usize },
    /// `n` consecutive rotated blocks at the same level.
    SuperBlock { level: usize },
}

/// Half-open span `start..end` of 0-based walk positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockSpan {
    #[serde(flatten)]
    pub kind: BlockKind,
    pub start: usize,
    pub end: usize,
    /// False when the prefix cut the block short.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub walk: Walk,
    pub recipe: EvasiveRecipe,
    pub blocks: Vec<BlockSpan>,
    /// Factors of the analytic success bound, keyed by the walk position
    /// where the corresponding unit (row or block) begins.
    pub factors: Vec<(usize, f64)>,
    pub q: Option<f64>,
}

impl Construction {
    /// Product of all recorded factors; `None` for constructions without an
    /// analytic bound.
    pub fn analytic_bound(&self) -> Option<f64> {
        if self.factors.is_empty() {
            return None;
        }
        Some(self.factors.iter().map(|f| f.1).product())
    }

    /// Product over units that begin within the first `horizon + 1`
    /// vertices.
    pub fn analytic_bound_at(&self, horizon: usize) -> Option<f64> {
        if self.factors.is_empty() {
            return None;
        }
        Some(
            self.factors
                .iter()
                .filter(|f| f.0 <= horizon)
                .map(|f| f.1)
                .product(),
        )
    }

    pub fn spans<'a>(&'a self, pred: impl Fn(&BlockKind) -> bool + 'a) -> impl Iterator<Item = &'a BlockSpan> {
        self.blocks.iter().filter(move |b| pred(&b.kind))
    }
}

fn finish(
    g: &Arc<Graph>,
    mut walk: Vec<usize>,
    recipe: EvasiveRecipe,
    mut blocks: Vec<BlockSpan>,
    factors: Vec<(usize, f64)>,
    q: Option<f64>,
) -> Construction {
    let n = recipe.prefix_length;
    walk.truncate(n);
    blocks.retain(|b| b.start < n);
    for b in &mut blocks {
        if b.end > n {
            b.end = n;
            b.complete = false;
        }
    }
    blocks.sort_by_key(|b| (b.start, std::cmp::Reverse(b.end)));
    let factors = factors.into_iter().filter(|f| f.0 < n).collect();
    Construction {
        walk: Walk::new_unchecked(g.clone(), walk),
        recipe,
        blocks,
        factors,
        q,
    }
}

fn check_prefix(prefix_length: usize) -> Result<()> {
    if prefix_length == 0 {
        return Err(Error::Precondition("prefix length must be positive".into()));
    }
    Ok(())
}

/// Calls `f` on every walk of exactly `len` vertices inside `mask`, in
/// lexicographic order.
fn for_each_walk(
    g: &Graph,
    mask: &[bool],
    len: usize,
    f: &mut impl FnMut(&[usize]) -> ControlFlow<()>,
) -> ControlFlow<()> {
    fn extend(
        g: &Graph,
        mask: &[bool],
        len: usize,
        cur: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if cur.len() == len {
            return f(cur);
        }
        let last = *cur.last().unwrap();
        for &u in g.neighbors(last) {
            if mask[u] {
                cur.push(u);
                extend(g, mask, len, cur, f)?;
                cur.pop();
            }
        }
        ControlFlow::Continue(())
    }
    let mut cur = Vec::with_capacity(len);
    for v in (0..g.len()).filter(|&v| mask[v]) {
        cur.clear();
        cur.push(v);
        extend(g, mask, len, &mut cur, f)?;
    }
    ControlFlow::Continue(())
}

/// Rounds `m = 1, 2, ...`, each running through every walk inside `mask` of
/// lengths `1..=m` (lexicographic within a length), joined by shortest paths
/// inside `mask`; stops once `prefix_length` vertices exist.
fn enumeration_rounds(g: &Graph, mask: &[bool], prefix_length: usize) -> (Vec<usize>, Vec<BlockSpan>) {
    let mut walk = Vec::new();
    let mut blocks = Vec::new();
    let mut m = 0;
    while walk.len() < prefix_length {
        m += 1;
        let start = walk.len();
        let mut complete = true;
        for len in 1..=m {
            let flow = for_each_walk(g, mask, len, &mut |piece| {
                append_joined(g, mask, &mut walk, piece);
                if walk.len() >= prefix_length {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            if flow.is_break() {
                complete = false;
                break;
            }
        }
        blocks.push(BlockSpan {
            kind: BlockKind::Round { m },
            start,
            end: walk.len(),
            complete,
        });
    }
    walk.truncate(prefix_length);
    (walk, blocks)
}

/// A walk on the subgraph induced by `vertices` in which every finite walk
/// on that subgraph recurs, truncated to `prefix_length` vertices.
pub fn enumeration_walk(g: &Arc<Graph>, vertices: &[usize], prefix_length: usize) -> Result<Walk> {
    check_prefix(prefix_length)?;
    if vertices.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if let Some(&v) = vertices.iter().find(|&&v| v >= g.len()) {
        return Err(Error::UnknownVertex(format!("#{v}")));
    }
    let mask = g.mask_of(vertices);
    if g.components_within(&mask).len() != 1 {
        return Err(Error::Disconnected);
    }
    let (walk, _) = enumeration_rounds(g, &mask, prefix_length);
    Ok(Walk::new_unchecked(g.clone(), walk))
}

pub fn build_evasive_t26(g: &Arc<Graph>, prefix_length: usize) -> Result<Construction> {
    check_prefix(prefix_length)?;
    let pivot = find_pivot_nonpath(g)?
        .ok_or_else(|| Error::NoPivot("graph is a path, a cycle or the claw".into()))?;
    let mask = g.mask_of(&pivot.component);
    let (walk, blocks) = enumeration_rounds(g, &mask, prefix_length);
    let rounds = (1..=blocks.len()).collect();
    let recipe = EvasiveRecipe {
        theorem: Theorem::T26,
        pivot: Some(pivot),
        block_params: rounds,
        prefix_length,
        rule: "round m enumerates all walks on G' of lengths 1..=m".into(),
    };
    Ok(finish(g, walk, recipe, blocks, Vec::new(), None))
}

/// Closed walk from `v` touring every vertex of `G - G'` (the other
/// components of `G - v` via depth-first tours).
fn replacement_tour(g: &Graph, v: usize, component: &[usize]) -> Vec<usize> {
    fn dfs(g: &Graph, mask: &[bool], seen: &mut [bool], x: usize, out: &mut Vec<usize>) {
        out.push(x);
        for &y in g.neighbors(x) {
            if mask[y] && !seen[y] {
                seen[y] = true;
                dfs(g, mask, seen, y, out);
                out.push(x);
            }
        }
    }
    let mut tour = vec![v];
    let mut seen = vec![false; g.len()];
    for other in components_without(g, v) {
        if other == component {
            continue;
        }
        let mask = g.mask_of(&other);
        let u = *g.neighbors(v).iter().find(|&&u| mask[u]).unwrap();
        seen[u] = true;
        dfs(g, &mask, &mut seen, u, &mut tour);
        tour.push(v);
    }
    tour
}

/// `1 - 2^(-e)` as an exact rational.
fn threshold(e: usize) -> BigRational {
    BigRational::one() - BigRational::new(BigInt::one(), BigInt::one() << e)
}

struct ParamSearch<'a> {
    g: &'a Graph,
    v: usize,
    w: usize,
    stats: ExcursionStats,
}

impl<'a> ParamSearch<'a> {
    fn new(g: &'a Graph, v: usize, w: usize) -> Result<Self> {
        let stats = excursion_stats(g, v, w, 64)?;
        Ok(Self { g, v, w, stats })
    }

    /// Least `l` with `p[l] >= 1 - 2^(-e)`.
    fn least_l(&mut self, e: usize) -> Result<usize> {
        let t = threshold(e);
        loop {
            if let Some(l) = self.stats.least_l_reaching(&t) {
                return Ok(l);
            }
            let next = (self.stats.p.len() - 1) * 2;
            if next > MAX_EXCURSION_L {
                return Err(Error::Guard(format!(
                    "no excursion length up to {MAX_EXCURSION_L} reaches 1 - 2^-{e}"
                )));
            }
            self.stats = excursion_stats(self.g, self.v, self.w, next)?;
        }
    }
}

pub fn build_evasive_t29(g: &Arc<Graph>, prefix_length: usize) -> Result<Construction> {
    check_prefix(prefix_length)?;
    let pivot = find_pivot_double_edge(g)?.ok_or_else(|| {
        Error::NoPivot("graph is a tree, a cycle or a triangle with pendant paths".into())
    })?;
    let v = pivot.pivot;
    let w = pivot.anchor.expect("double-edge pivot has an anchor");
    let mask = g.mask_of(&pivot.component);

    let mut search = ParamSearch::new(g, v, w)?;
    let q = search.stats.q.clone();
    if q.is_zero() {
        return Err(Error::Precondition(
            "excursions always touch the anchor (q = 0)".into(),
        ));
    }
    let ret: Vec<usize> = if components_without(g, v).len() > 1 {
        replacement_tour(g, v, &pivot.component)
    } else {
        vec![v]
    };

    let mut cache: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut walk = vec![w];
    let mut blocks = Vec::new();
    let mut params = Vec::new();
    let mut factors = Vec::new();
    let mut row = 0;
    'rows: while walk.len() < prefix_length {
        row += 1;
        let row_start = walk.len();
        let mut row_p = Vec::new();
        let mut ls = Vec::new();
        for col in 1..=row {
            let l = search.least_l(row + col)?;
            ls.push(l);
            row_p.push(search.stats.p[l].clone());
        }
        params.extend_from_slice(&ls);
        factors.push((row_start, row_factor(&q, &row_p)));
        for (col, &l) in (1..).zip(&ls) {
            if walk.len() >= prefix_length {
                break;
            }
            let piece = match cache.get(&l) {
                Some(p) => p,
                None => {
                    let spec = CoveringSpec::new(g.clone(), pivot.component.clone(), l)?.with_anchor(w)?;
                    let built = build_covering_walk(&spec)?.into_steps();
                    cache.entry(l).or_insert(built)
                }
            };
            append_joined(g, &mask, &mut walk, piece);
            blocks.push(BlockSpan {
                kind: BlockKind::Covering { row, col, l },
                start: walk.len() - piece.len(),
                end: walk.len(),
                complete: true,
            });
        }
        if walk.len() >= prefix_length {
            blocks.push(BlockSpan {
                kind: BlockKind::Row { row },
                start: row_start,
                end: walk.len(),
                complete: false,
            });
            break 'rows;
        }
        let ret_start = walk.len();
        walk.push(w);
        walk.extend_from_slice(&ret);
        walk.push(w);
        blocks.push(BlockSpan {
            kind: BlockKind::Return { row },
            start: ret_start,
            end: walk.len(),
            complete: true,
        });
        blocks.push(BlockSpan {
            kind: BlockKind::Row { row },
            start: row_start,
            end: walk.len(),
            complete: true,
        });
    }
    let recipe = EvasiveRecipe {
        theorem: Theorem::T29,
        pivot: Some(pivot),
        block_params: params,
        prefix_length,
        rule: "l_ij = least l with Pr(d <= l) >= 1 - 2^-(i+j)".into(),
    };
    Ok(finish(g, walk, recipe, blocks, factors, q.to_f64()))
}

/// Row factor `q + sum_(m=1..i) (1-q)^m q prod_(t<=m) p_(l_it)`.
fn row_factor(q: &BigRational, p: &[BigRational]) -> f64 {
    let one_minus = BigRational::one() - q;
    let mut total = q.clone();
    let mut weight = q.clone();
    for pt in p {
        weight = weight * &one_minus * pt;
        total += &weight;
    }
    total.to_f64().unwrap_or(f64::NAN)
}

/// `Pr(d_j <= l)` for one rotated block: `1 - ((n-2)/(n-1))^l`.
pub fn k5_block_probability(n: usize, l: usize) -> f64 {
    1.0 - ((n - 2) as f64 / (n - 1) as f64).powi(l as i32)
}

/// `prod_(j=1..blocks) (1 - ((n-2)/(n-1))^ceil(j/n))`.
pub fn k5_product_bound(n: usize, blocks: usize) -> f64 {
    (1..=blocks).map(|j| k5_block_probability(n, j.div_ceil(n))).product()
}

pub fn build_evasive_k5(n: usize, prefix_length: usize) -> Result<Construction> {
    check_prefix(prefix_length)?;
    if n < 5 {
        return Err(Error::Precondition(format!("needs n >= 5, got {n}")));
    }
    let g = Arc::new(families::complete_numbered(n));
    let sigma = |x: usize, t: usize| (x + t) % n;
    let triangle = [0usize, 1, 2];

    let mut walk: Vec<usize> = Vec::new();
    let mut blocks = Vec::new();
    let mut params = Vec::new();
    let mut factors = Vec::new();
    let mut level = 0;
    while walk.len() < prefix_length {
        level += 1;
        let mut template = build_covering_walk(&CoveringSpec::new(g.clone(), triangle.to_vec(), level)?)?
            .into_steps();
        // The previous super-block ends with rotation n - 1.
        if let Some(&prev) = walk.last() {
            if template[0] == prev {
                let x = *triangle.iter().find(|&&x| x != prev).unwrap();
                template.insert(0, x);
            }
        }
        // Rotation t ends at sigma^t(end) and rotation t + 1 starts at
        // sigma^(t+1)(start); they must differ.
        let end = *template.last().unwrap();
        if end == sigma(template[0], 1) {
            let y = *triangle.iter().find(|&&y| y != end).unwrap();
            template.push(y);
        }
        let super_start = walk.len();
        for t in 0..n {
            if walk.len() >= prefix_length {
                break;
            }
            let index = (level - 1) * n + t + 1;
            params.push(level);
            factors.push((walk.len(), k5_block_probability(n, level)));
            let start = walk.len();
            walk.extend(template.iter().map(|&x| sigma(x, t)));
            blocks.push(BlockSpan {
                kind: BlockKind::Rotated { index, level, rotation: t },
                start,
                end: walk.len(),
                complete: true,
            });
        }
        blocks.push(BlockSpan {
            kind: BlockKind::SuperBlock { level },
            start: super_start,
            end: walk.len(),
            complete: params.len() == level * n,
        });
    }
    let recipe = EvasiveRecipe {
        theorem: Theorem::K5,
        pivot: None,
        block_params: params,
        prefix_length,
        rule: "l_j = ceil(j / n)".into(),
    };
    Ok(finish(&g, walk, recipe, blocks, factors, None))
}
