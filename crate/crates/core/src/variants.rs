//! One-way edges and colored edges.
//!
//! Directed graphs: tokens cross one-way edges only along their orientation.
//! `Gamma` is the spanning subgraph on the two-way edges. Colored graphs:
//! token S moves on red edges, token T on blue edges; purple edges are both.
//!
//! The demon strategies here are deterministic given the two walks; every
//! run is checked afterwards by replaying its trace.

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::schedule::{max_advance_steps, Move, Schedule, Target};
use crate::walk::Walk;

/// Resampling attempts allowed for a single component visit.
const MAX_SEGMENT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Token {
    S,
    T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyOutcome {
    pub steps_advanced_s: usize,
    pub steps_advanced_t: usize,
    pub horizon: usize,
    pub reached_horizon: bool,
    /// Set when the trace fails to replay; never expected.
    pub collided: bool,
    /// The run stopped early because a token could not make progress.
    pub stalled: bool,
    /// Times both tokens stood at a boundary and were moved one step each.
    pub boundary_resolutions: usize,
    pub diagnostics: Vec<String>,
    /// `R` moves token S, `S` moves token T.
    #[serde(skip)]
    pub trace: Schedule,
}

impl StrategyOutcome {
    fn new(horizon: usize, moves: Vec<Move>, s: &[usize], t: &[usize]) -> Self {
        let trace = Schedule { moves };
        let (a, b) = trace.advances();
        let collided = trace.replay(s, t).is_err();
        Self {
            steps_advanced_s: a,
            steps_advanced_t: b,
            horizon,
            reached_horizon: a >= horizon && b >= horizon,
            collided,
            stalled: false,
            boundary_resolutions: 0,
            diagnostics: Vec::new(),
            trace,
        }
    }
}

/// Walk of `len` vertices from `start`, uniform over `moves` at each step,
/// conditioned so that no run of consecutive vertices with the same `comp`
/// label is longer than `window`. An over-long run is resampled from its
/// entry vertex. `window = usize::MAX` gives the plain walk.
pub fn sample_conditioned<R: Rng + ?Sized>(
    moves: &[Vec<usize>],
    comp: &[usize],
    start: usize,
    len: usize,
    window: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if window == 0 {
        return Err(Error::Precondition("window must be at least 1".into()));
    }
    let mut walk = Vec::with_capacity(len);
    walk.push(start);
    let mut entry = 0;
    let mut attempts = 0;
    while walk.len() < len {
        let cur = *walk.last().unwrap();
        let opts = &moves[cur];
        if opts.is_empty() {
            return Err(Error::Precondition(format!("vertex #{cur} has no legal move")));
        }
        let next = opts[rng.random_range(0..opts.len())];
        walk.push(next);
        if comp[next] != comp[cur] {
            entry = walk.len() - 1;
            attempts = 0;
        } else if walk.len() - entry > window {
            walk.truncate(entry + 1);
            attempts += 1;
            if attempts > MAX_SEGMENT_ATTEMPTS {
                return Err(Error::Guard(format!(
                    "cannot leave the component of #{} within {window} steps",
                    walk[entry]
                )));
            }
        }
    }
    Ok(walk)
}

/// Uniform vertex of `pool` whose label differs from `avoid`.
fn pick_outside<R: Rng + ?Sized>(pool: &[usize], comp: &[usize], avoid: usize, rng: &mut R) -> Result<usize> {
    let ok: Vec<usize> = pool.iter().copied().filter(|&v| comp[v] != avoid).collect();
    if ok.is_empty() {
        return Err(Error::Precondition("no vertex in another component".into()));
    }
    Ok(ok[rng.random_range(0..ok.len())])
}

fn labels(comps: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut comp = vec![0; n];
    for (c, vs) in comps.iter().enumerate() {
        for &v in vs {
            comp[v] = c;
        }
    }
    comp
}

/// The alternating chunked strategy. Tokens start in different components;
/// each phase moves one token up to `chunk` steps, stopping before it would
/// enter the other token's component. When both are stuck at such a
/// boundary they swap components with one step each. Tokens keep moving
/// past `horizon` while their walks last, so neither parks in front of the
/// other.
fn chunked_strategy(
    comp: &[usize],
    s: &[usize],
    t: &[usize],
    chunk: usize,
    horizon: usize,
) -> Result<StrategyOutcome> {
    if chunk == 0 {
        return Err(Error::Precondition("chunk must be positive".into()));
    }
    if comp[s[0]] == comp[t[0]] {
        return Err(Error::Precondition("tokens start in the same component".into()));
    }
    let (mut i, mut j) = (0, 0);
    let mut moves = Vec::new();
    let mut resolutions = 0;
    let mut stalled = None;
    while i < horizon || j < horizon {
        let mut progressed = false;
        for _ in 0..chunk {
            if i + 1 >= s.len() || comp[s[i + 1]] == comp[t[j]] {
                break;
            }
            i += 1;
            moves.push(Move::First);
            progressed = true;
        }
        for _ in 0..chunk {
            if j + 1 >= t.len() || comp[t[j + 1]] == comp[s[i]] {
                break;
            }
            j += 1;
            moves.push(Move::Second);
            progressed = true;
        }
        if progressed {
            continue;
        }
        if i + 1 >= s.len() || j + 1 >= t.len() {
            stalled = Some(format!(
                "walk exhausted with S at step {i} and T at step {j}, the other waiting at a boundary"
            ));
            break;
        }
        // Both are about to enter the other's component.
        let (x, y, a, b) = (s[i], t[j], s[i + 1], t[j + 1]);
        if a == y && b == x {
            return Err(Error::Precondition(format!(
                "tokens about to swap along #{x} - #{y}; the components are not those of the hypothesis"
            )));
        }
        if a != y {
            moves.extend([Move::First, Move::Second]);
        } else {
            moves.extend([Move::Second, Move::First]);
        }
        i += 1;
        j += 1;
        resolutions += 1;
    }
    let mut out = StrategyOutcome::new(horizon, moves, s, t);
    out.boundary_resolutions = resolutions;
    if let Some(d) = stalled {
        out.stalled = true;
        out.diagnostics.push(d);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    base: Arc<Graph>,
    one_way: Vec<(usize, usize)>,
    two_way: Vec<(usize, usize)>,
    moves: Vec<Vec<usize>>,
    gamma: Vec<Vec<usize>>,
    comp: Vec<usize>,
}

impl DirectedGraph {
    /// `one_way` pairs are `(tail, head)`; together with `two_way` they must
    /// list every edge of `base` exactly once.
    pub fn new(base: Arc<Graph>, one_way: &[(usize, usize)], two_way: &[(usize, usize)]) -> Result<Self> {
        base.require_connected()?;
        let n = base.len();
        let mut seen = BTreeSet::new();
        for &(u, v) in one_way.iter().chain(two_way) {
            if u >= n || v >= n {
                return Err(Error::UnknownVertex(format!("#{}", u.max(v))));
            }
            if !base.has_edge(u, v) {
                return Err(Error::Precondition(format!(
                    "{}-{} is not an edge",
                    base.name(u),
                    base.name(v)
                )));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge(base.name(u).into(), base.name(v).into()));
            }
        }
        if seen.len() != base.edge_count() {
            return Err(Error::Precondition("some edge is neither one-way nor two-way".into()));
        }
        let mut moves = vec![Vec::new(); n];
        for &(u, v) in one_way {
            moves[u].push(v);
        }
        for &(u, v) in two_way {
            moves[u].push(v);
            moves[v].push(u);
        }
        moves.iter_mut().for_each(|m| m.sort_unstable());
        let mut two: Vec<(usize, usize)> = two_way.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        two.sort_unstable();
        let mut one = one_way.to_vec();
        one.sort_unstable();
        let gamma_graph = Graph::from_indexed(base.names().to_vec(), &two)?;
        let gamma = gamma_graph.components_within(&vec![true; n]);
        let comp = labels(&gamma, n);
        Ok(Self {
            base,
            one_way: one,
            two_way: two,
            moves,
            gamma,
            comp,
        })
    }

    pub fn base(&self) -> &Arc<Graph> {
        &self.base
    }

    pub fn one_way(&self) -> &[(usize, usize)] {
        &self.one_way
    }

    pub fn two_way(&self) -> &[(usize, usize)] {
        &self.two_way
    }

    /// Legal next vertices from `v`.
    pub fn moves(&self, v: usize) -> &[usize] {
        &self.moves[v]
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.comp[v]
    }

    pub fn validate_walk(&self, w: &Walk) -> Result<()> {
        if !Arc::ptr_eq(w.graph(), &self.base) && **w.graph() != *self.base {
            return Err(Error::GraphMismatch);
        }
        for (k, p) in w.steps().windows(2).enumerate() {
            if self.moves[p[0]].binary_search(&p[1]).is_err() {
                return Err(Error::WrongWay {
                    index: k + 1,
                    from: self.base.name(p[0]).into(),
                    to: self.base.name(p[1]).into(),
                });
            }
        }
        Ok(())
    }

    /// Random walk, uniform over legal moves, with every stay in a `Gamma`
    /// component at most `window` vertices long.
    pub fn sample_walk<R: Rng + ?Sized>(&self, start: usize, len: usize, window: usize, rng: &mut R) -> Result<Walk> {
        let steps = sample_conditioned(&self.moves, &self.comp, start, len, window, rng)?;
        Ok(Walk::new_unchecked(self.base.clone(), steps))
    }

    /// Two conditioned walks starting in different `Gamma` components.
    pub fn sample_pair<R: Rng + ?Sized>(&self, len: usize, window: usize, rng: &mut R) -> Result<(Walk, Walk)> {
        let all: Vec<usize> = (0..self.base.len()).collect();
        let s0 = rng.random_range(0..self.base.len());
        let t0 = pick_outside(&all, &self.comp, self.comp[s0], rng)?;
        Ok((
            self.sample_walk(s0, len, window, rng)?,
            self.sample_walk(t0, len, window, rng)?,
        ))
    }
}

/// Components of `Gamma`, ordered by least vertex.
pub fn gamma_components(dg: &DirectedGraph) -> Vec<Vec<usize>> {
    dg.gamma.clone()
}

/// Every `Gamma` component has a one-way edge leaving it.
pub fn check_directed_hypothesis(dg: &DirectedGraph) -> bool {
    let mut exits = vec![false; dg.gamma.len()];
    for &(u, v) in &dg.one_way {
        if dg.comp[u] != dg.comp[v] {
            exits[dg.comp[u]] = true;
        }
    }
    exits.iter().all(|&e| e) && dg.gamma.len() > 1
}

pub fn run_directed_demon(dg: &DirectedGraph, s: &Walk, t: &Walk, chunk: usize, horizon: usize) -> Result<StrategyOutcome> {
    if !check_directed_hypothesis(dg) {
        return Err(Error::Precondition(
            "some component of Gamma has no one-way edge to another component".into(),
        ));
    }
    dg.validate_walk(s)?;
    dg.validate_walk(t)?;
    chunked_strategy(&dg.comp, s.steps(), t.steps(), chunk, horizon)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum PurpleCase {
    NotApplicable,
    Case1,
    /// `token` can only ever be inside `component` of the purple subgraph.
    Case2 { token: Token, component: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoredGraph {
    base: Arc<Graph>,
    red: Arc<Graph>,
    blue: Arc<Graph>,
    purple: Graph,
    red_vertices: Vec<usize>,
    blue_vertices: Vec<usize>,
    purple_comps: Vec<Vec<usize>>,
    comp: Vec<usize>,
}

/// Vertices touched by some edge, and whether those edges connect them.
fn touched(g: &Graph) -> (Vec<usize>, bool) {
    let vs: Vec<usize> = (0..g.len()).filter(|&v| g.degree(v) > 0).collect();
    let connected = !vs.is_empty() && g.components_within(&g.mask_of(&vs)).len() == 1;
    (vs, connected)
}

impl ColoredGraph {
    pub fn new(base: Arc<Graph>, red: &[(usize, usize)], blue: &[(usize, usize)]) -> Result<Self> {
        base.require_connected()?;
        let n = base.len();
        let norm = |edges: &[(usize, usize)]| -> Result<BTreeSet<(usize, usize)>> {
            let mut set = BTreeSet::new();
            for &(u, v) in edges {
                if u >= n || v >= n {
                    return Err(Error::UnknownVertex(format!("#{}", u.max(v))));
                }
                if !base.has_edge(u, v) {
                    return Err(Error::Precondition(format!(
                        "{}-{} is not an edge",
                        base.name(u),
                        base.name(v)
                    )));
                }
                if !set.insert((u.min(v), u.max(v))) {
                    return Err(Error::DuplicateEdge(base.name(u).into(), base.name(v).into()));
                }
            }
            Ok(set)
        };
        let r = norm(red)?;
        let b = norm(blue)?;
        if r.union(&b).count() != base.edge_count() {
            return Err(Error::Precondition("some edge is neither red nor blue".into()));
        }
        let names = base.names().to_vec();
        let collect = |s: &BTreeSet<(usize, usize)>| s.iter().copied().collect::<Vec<_>>();
        let red_g = Graph::from_indexed(names.clone(), &collect(&r))?;
        let blue_g = Graph::from_indexed(names.clone(), &collect(&b))?;
        let purple = Graph::from_indexed(names, &r.intersection(&b).copied().collect::<Vec<_>>())?;
        let (red_vertices, red_ok) = touched(&red_g);
        let (blue_vertices, blue_ok) = touched(&blue_g);
        if !red_ok || !blue_ok {
            return Err(Error::Precondition(format!(
                "the {} subgraph is not connected",
                if red_ok { "blue" } else { "red" }
            )));
        }
        let purple_comps = purple.components_within(&vec![true; n]);
        let comp = labels(&purple_comps, n);
        Ok(Self {
            base,
            red: Arc::new(red_g),
            blue: Arc::new(blue_g),
            purple,
            red_vertices,
            blue_vertices,
            purple_comps,
            comp,
        })
    }

    pub fn base(&self) -> &Arc<Graph> {
        &self.base
    }

    /// All vertices with the red edges only; token S walks here.
    pub fn red(&self) -> &Arc<Graph> {
        &self.red
    }

    pub fn blue(&self) -> &Arc<Graph> {
        &self.blue
    }

    pub fn purple(&self) -> &Graph {
        &self.purple
    }

    pub fn purple_components(&self) -> &[Vec<usize>] {
        &self.purple_comps
    }

    fn color(&self, token: Token) -> (&Arc<Graph>, &[usize], &'static str) {
        match token {
            Token::S => (&self.red, &self.red_vertices, "red"),
            Token::T => (&self.blue, &self.blue_vertices, "blue"),
        }
    }

    /// Edge-induced color subgraph is a path.
    fn color_is_path(&self, token: Token) -> bool {
        let (g, vs, _) = self.color(token);
        crate::classify::induced_is_path(g, vs)
    }

    /// Checks that `w` only uses edges of `token`'s color.
    pub fn validate_walk(&self, w: &Walk, token: Token) -> Result<()> {
        let (g, _, color) = self.color(token);
        if w.graph().names() != self.base.names() {
            return Err(Error::GraphMismatch);
        }
        for (k, p) in w.steps().windows(2).enumerate() {
            if !g.has_edge(p[0], p[1]) {
                return Err(Error::WrongColor {
                    index: k + 1,
                    from: self.base.name(p[0]).into(),
                    to: self.base.name(p[1]).into(),
                    color: color.into(),
                });
            }
        }
        Ok(())
    }

    fn reach(&self, token: Token) -> BTreeSet<usize> {
        self.color(token).1.iter().map(|&v| self.comp[v]).collect()
    }

    /// Which proof case applies. Unless `relax`, both color subgraphs must
    /// fail to be paths; `relax` only admits Case 1, which does not need it.
    pub fn purple_case(&self, relax: bool) -> Result<PurpleCase> {
        let paths = self.color_is_path(Token::S) || self.color_is_path(Token::T);
        if paths && !relax {
            return Err(Error::Precondition("a color subgraph is a path".into()));
        }
        if self.purple_comps.len() == 1 {
            return Ok(PurpleCase::NotApplicable);
        }
        let (rs, rt) = (self.reach(Token::S), self.reach(Token::T));
        if rs.len() > 1 && rt.len() > 1 {
            return Ok(PurpleCase::Case1);
        }
        if paths {
            return Err(Error::Precondition("Case 2 needs color subgraphs that are not paths".into()));
        }
        let (token, c) = if rs.len() == 1 {
            (Token::S, *rs.first().unwrap())
        } else {
            (Token::T, *rt.first().unwrap())
        };
        Ok(PurpleCase::Case2 {
            token,
            component: self.purple_comps[c].clone(),
        })
    }

    /// Conditioned walk for `token`: stays in one purple component at most
    /// `window` vertices at a time.
    pub fn sample_walk<R: Rng + ?Sized>(
        &self,
        token: Token,
        start: usize,
        len: usize,
        window: usize,
        rng: &mut R,
    ) -> Result<Walk> {
        let g = self.color(token).0;
        let moves: Vec<Vec<usize>> = (0..g.len()).map(|v| g.neighbors(v).to_vec()).collect();
        let steps = sample_conditioned(&moves, &self.comp, start, len, window, rng)?;
        Ok(Walk::new_unchecked(self.base.clone(), steps))
    }

    /// Case 1: both walks conditioned, started in different purple
    /// components.
    pub fn sample_pair<R: Rng + ?Sized>(&self, len: usize, window: usize, rng: &mut R) -> Result<(Walk, Walk)> {
        let s0 = self.red_vertices[rng.random_range(0..self.red_vertices.len())];
        let t0 = pick_outside(&self.blue_vertices, &self.comp, self.comp[s0], rng)?;
        Ok((
            self.sample_walk(Token::S, s0, len, window, rng)?,
            self.sample_walk(Token::T, t0, len, window, rng)?,
        ))
    }

    /// Case 2: a conditioned walk for the free token, started outside `C`.
    pub fn sample_free_walk<R: Rng + ?Sized>(
        &self,
        free: Token,
        component: &[usize],
        len: usize,
        window: usize,
        rng: &mut R,
    ) -> Result<Walk> {
        let c = self.comp[component[0]];
        let start = pick_outside(self.color(free).1, &self.comp, c, rng)?;
        self.sample_walk(free, start, len, window, rng)
    }
}

pub fn purple_case(cg: &ColoredGraph) -> Result<PurpleCase> {
    cg.purple_case(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ColoredOptions {
    pub chunk: usize,
    /// Largest stretch of the restricted walk searched per visit in Case 2
    /// is `2 * visit + window_slack`.
    pub window_slack: usize,
    pub relax: bool,
}

impl Default for ColoredOptions {
    fn default() -> Self {
        Self {
            chunk: 100,
            window_slack: 8,
            relax: false,
        }
    }
}

pub fn run_colored_demon(cg: &ColoredGraph, s: &Walk, t: &Walk, horizon: usize, opts: ColoredOptions) -> Result<StrategyOutcome> {
    cg.validate_walk(s, Token::S)?;
    cg.validate_walk(t, Token::T)?;
    match cg.purple_case(opts.relax)? {
        PurpleCase::NotApplicable => Err(Error::Precondition("the purple subgraph is connected".into())),
        PurpleCase::Case1 => chunked_strategy(&cg.comp, s.steps(), t.steps(), opts.chunk, horizon),
        PurpleCase::Case2 { token, component } => {
            let in_c = cg.base.mask_of(&component);
            let (x, y) = match token {
                Token::S => (s.steps(), t.steps()),
                Token::T => (t.steps(), s.steps()),
            };
            let (x_moves, mut out_diag, stalled) = visit_strategy(&in_c, x, y, horizon, opts.window_slack)?;
            // Map restricted/free moves back to S/T.
            let moves = x_moves
                .into_iter()
                .map(|m| match (token, m) {
                    (Token::S, m) => m,
                    (Token::T, Move::First) => Move::Second,
                    (Token::T, Move::Second) => Move::First,
                })
                .collect();
            let mut out = StrategyOutcome::new(horizon, moves, s.steps(), t.steps());
            out.stalled = stalled;
            out.diagnostics.append(&mut out_diag);
            Ok(out)
        }
    }
}

/// Case 2 strategy. `x` never leaves `C`; `y` alternates between stretches
/// outside `C` (where both tokens move freely) and visits to `C`. Before
/// each visit, `x` is moved to the start of a stretch that lets `y` cross
/// the whole visit. Returns moves with `First` = x, `Second` = y.
fn visit_strategy(
    in_c: &[bool],
    x: &[usize],
    y: &[usize],
    horizon: usize,
    slack: usize,
) -> Result<(Vec<Move>, Vec<String>, bool)> {
    if in_c[y[0]] {
        return Err(Error::Precondition("the free token starts inside C".into()));
    }
    if let Some(k) = x.iter().position(|&v| !in_c[v]) {
        return Err(Error::Precondition(format!("restricted walk leaves C at step {k}")));
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut moves = Vec::new();
    let mut diag = Vec::new();
    let step = |moves: &mut Vec<Move>, m: Move, k: usize| moves.extend(std::iter::repeat_n(m, k));
    loop {
        // Here y sits outside C.
        if j >= horizon {
            break;
        }
        let Some(a) = (j + 1..y.len()).find(|&k| in_c[y[k]]) else {
            step(&mut moves, Move::Second, y.len() - 1 - j);
            j = y.len() - 1;
            break;
        };
        step(&mut moves, Move::Second, a - 1 - j);
        let b = (a..y.len()).take_while(|&k| in_c[y[k]]).last().unwrap();
        let visit = &y[a..=b];
        let cap = 2 * visit.len() + slack;
        let found = (i..x.len()).find_map(|p| {
            if x[p] == y[a] {
                return None;
            }
            let win = &x[p..x.len().min(p + cap)];
            let res = max_advance_steps(visit, win, Target::FirstToEnd).ok()?;
            res.witness.map(|w| (p, w))
        });
        let Some((p, witness)) = found else {
            diag.push(format!(
                "no stretch of the restricted walk after step {i} lets the visit at steps {a}..={b} through"
            ));
            return Ok((moves, diag, true));
        };
        step(&mut moves, Move::First, p - i);
        i = p;
        // Enter C at state (a, p), which the scheduler found legal.
        j = a;
        moves.push(Move::Second);
        for m in witness.moves {
            // Inside the witness, First is the visiting token y.
            match m {
                Move::First => {
                    j += 1;
                    moves.push(Move::Second);
                }
                Move::Second => {
                    i += 1;
                    moves.push(Move::First);
                }
            }
        }
        if b + 1 >= y.len() {
            break;
        }
        j += 1;
        moves.push(Move::Second);
    }
    let mut stalled = false;
    if !in_c[y[j]] && i < horizon {
        let k = horizon.min(x.len() - 1) - i;
        step(&mut moves, Move::First, k);
        i += k;
    }
    if i < horizon || j < horizon {
        stalled = true;
        diag.push(format!("walks ran out at restricted step {i}, free step {j}"));
    }
    Ok((moves, diag, stalled))
}
