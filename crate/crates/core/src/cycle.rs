//! Winding numbers on cycles and the collision experiments built on them.
//!
//! Positions are tracked in units of `1/n` turns: `f[i]` holds `n * f(i)`,
//! so `w(i) = floor(f(i)) = f[i].div_euclid(n)`.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::graph::{families, Graph};
use crate::schedule::{can_advance, Schedule, Target};
use crate::walk::{random_steps, RandomSource, Walk};

/// A cyclic order of the vertices of a cycle graph, read as clockwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CycleOrientation {
    order: Vec<usize>,
    pos: Vec<usize>,
}

impl CycleOrientation {
    /// Canonical orientation: from vertex 0 towards its smaller neighbor.
    pub fn of(g: &Graph) -> Result<Self> {
        require_cycle(g)?;
        let mut order = vec![0, g.neighbors(0)[0]];
        while order.len() < g.len() {
            let (prev, cur) = (order[order.len() - 2], order[order.len() - 1]);
            let next = *g.neighbors(cur).iter().find(|&&x| x != prev).unwrap();
            order.push(next);
        }
        Self::with_order(g, order)
    }

    pub fn with_order(g: &Graph, order: Vec<usize>) -> Result<Self> {
        require_cycle(g)?;
        let n = g.len();
        let mut pos = vec![usize::MAX; n];
        for (k, &v) in order.iter().enumerate() {
            if v >= n || pos[v] != usize::MAX {
                return Err(Error::Precondition("order is not a permutation".into()));
            }
            pos[v] = k;
        }
        if order.len() != n || (0..n).any(|k| !g.has_edge(order[k], order[(k + 1) % n])) {
            return Err(Error::Precondition("order does not follow the cycle".into()));
        }
        Ok(Self { order, pos })
    }

    pub fn reversed(&self) -> Self {
        let mut order = self.order.clone();
        order[1..].reverse();
        let mut pos = vec![0; order.len()];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        Self { order, pos }
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// `+1` for a clockwise step, `-1` otherwise.
    pub fn direction(&self, from: usize, to: usize) -> i64 {
        if self.pos[to] == (self.pos[from] + 1) % self.n() {
            1
        } else {
            -1
        }
    }

    /// Clockwise steps from `a` to `b`, in `0..n`.
    pub fn offset(&self, a: usize, b: usize) -> usize {
        (self.pos[b] + self.n() - self.pos[a]) % self.n()
    }

    /// Vertex `k` clockwise steps after `v`.
    pub fn advance(&self, v: usize, k: i64) -> usize {
        let n = self.n() as i64;
        self.order[(self.pos[v] as i64 + k).rem_euclid(n) as usize]
    }
}

fn require_cycle(g: &Graph) -> Result<()> {
    let n = g.len();
    if n < 3 || !g.is_connected() || (0..n).any(|v| g.degree(v) != 2) {
        return Err(Error::Precondition("graph is not a cycle".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindingTrace {
    pub n: usize,
    /// `n * f(i)`.
    pub f: Vec<i64>,
    pub w: Vec<i64>,
    /// `w` with consecutive repeats removed.
    #[serde(rename = "W")]
    pub big_w: Vec<i64>,
}

pub fn winding_trace(walk: &Walk, orient: &CycleOrientation, start_offset: usize) -> Result<WindingTrace> {
    require_cycle(walk.graph())?;
    if orient.n() != walk.graph().len() {
        return Err(Error::Precondition("orientation is for another cycle".into()));
    }
    Ok(winding_trace_steps(walk.steps(), orient, start_offset))
}

pub(crate) fn winding_trace_steps(steps: &[usize], orient: &CycleOrientation, start_offset: usize) -> WindingTrace {
    let n = orient.n();
    let mut f = Vec::with_capacity(steps.len());
    let mut cur = (start_offset % n) as i64;
    f.push(cur);
    for pair in steps.windows(2) {
        cur += orient.direction(pair[0], pair[1]);
        f.push(cur);
    }
    let w: Vec<i64> = f.iter().map(|x| x.div_euclid(n as i64)).collect();
    let mut big_w = w.clone();
    big_w.dedup();
    WindingTrace { n, f, w, big_w }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct EventReport {
    pub decreases_at: Vec<i64>,
    pub strong_increases_at: Vec<i64>,
}

fn check_steps(big_w: &[i64]) -> Result<()> {
    if big_w.windows(2).any(|p| (p[1] - p[0]).abs() != 1) {
        return Err(Error::Precondition("winding sequence must move by +-1".into()));
    }
    Ok(())
}

/// Both event sets in one linear pass over `W` plus one reverse pass.
pub fn winding_events(big_w: &[i64]) -> Result<EventReport> {
    check_steps(big_w)?;
    let Some(&lo) = big_w.iter().min() else {
        return Ok(EventReport::default());
    };
    let hi = *big_w.iter().max().unwrap();
    let slot = |x: i64| (x - lo) as usize;
    let span = (hi - lo + 1) as usize;

    let mut first = vec![usize::MAX; span];
    for (i, &x) in big_w.iter().enumerate() {
        if first[slot(x)] == usize::MAX {
            first[slot(x)] = i;
        }
    }
    let first_of = |x: i64| (lo..=hi).contains(&x).then(|| first[slot(x)]);

    // next_after_first[x]: next index holding x - 2 after the first x.
    let mut next_lower = vec![usize::MAX; span];
    let mut seen = vec![usize::MAX; span];
    for i in (0..big_w.len()).rev() {
        let x = big_w[i];
        if first[slot(x)] == i && x - 2 >= lo {
            next_lower[slot(x)] = seen[slot(x - 2)];
        }
        seen[slot(x)] = i;
    }

    let mut report = EventReport::default();
    for k in lo - 1..=hi {
        if let Some(a) = first_of(k + 1) {
            let b = if k > lo { next_lower[slot(k + 1)] } else { usize::MAX };
            if b != usize::MAX && first_of(k + 2).is_none_or(|c| b < c) {
                debug_assert!(b > a);
                report.decreases_at.push(k);
            }
        }
        if let Some(a) = first_of(k) {
            if big_w.get(a + 1) == Some(&(k + 1)) && big_w.get(a + 2) == Some(&(k + 2)) {
                report.strong_increases_at.push(k);
            }
        }
    }
    Ok(report)
}

/// Integers `k` where `W_R` increases strongly and `W_S` decreases.
pub fn blocking_events(r: &EventReport, s: &EventReport) -> Vec<i64> {
    r.strong_increases_at
        .iter()
        .copied()
        .filter(|k| s.decreases_at.binary_search(k).is_ok())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindingCheck {
    pub holds: bool,
    pub violation: Option<(usize, usize)>,
}

/// `w_R(i) <= w_S(j) <= w_R(i) + 1` on every listed state (1-indexed).
pub fn check_states(
    tr: &WindingTrace,
    ts: &WindingTrace,
    states: impl IntoIterator<Item = (usize, usize)>,
) -> WindingCheck {
    for (i, j) in states {
        let (wr, ws) = (tr.w[i - 1], ts.w[j - 1]);
        if ws < wr || ws > wr + 1 {
            return WindingCheck {
                holds: false,
                violation: Some((i, j)),
            };
        }
    }
    WindingCheck {
        holds: true,
        violation: None,
    }
}

/// Replays `sched` and checks the winding relation on every visited state,
/// using the canonical orientation and the offset of `S(1)` from `R(1)`.
pub fn check_winding_relation(r: &Walk, s: &Walk, sched: &Schedule) -> Result<WindingCheck> {
    if !r.same_graph(s) {
        return Err(Error::GraphMismatch);
    }
    let orient = CycleOrientation::of(r.graph())?;
    let states = sched.replay(r.steps(), s.steps())?;
    let tr = winding_trace(r, &orient, 0)?;
    let ts = winding_trace(s, &orient, orient.offset(r.at(1), s.at(1)))?;
    Ok(check_states(&tr, &ts, states))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonEstimate {
    pub horizon: usize,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalReport {
    pub n: usize,
    pub horizons: Vec<usize>,
    pub estimates: Vec<HorizonEstimate>,
    /// Slope of `-ln p` against `N^(1/3)`.
    pub fitted_c: Option<f64>,
    pub fit_intercept: Option<f64>,
    pub fit_r2: Option<f64>,
    /// Horizons whose zero count was replaced by `0.5 / trials` in the fit.
    pub zero_corrected: Vec<usize>,
}

impl SurvivalReport {
    /// Each estimate is at most the previous one plus `sigmas` combined
    /// standard errors.
    pub fn nonincreasing_within(&self, sigmas: f64) -> bool {
        self.estimates.windows(2).all(|p| {
            let (a, b) = (&p[0].estimate, &p[1].estimate);
            let (pa, pb) = (a.fraction.unwrap(), b.fraction.unwrap());
            let se = (a.std_error.unwrap().powi(2) + b.std_error.unwrap().powi(2)).sqrt();
            pb <= pa + sigmas * se
        })
    }
}

/// Stream for trial `t` at horizon index `h`.
fn survival_stream(h: usize, t: u64) -> u64 {
    ((h as u64) << 32) | t
}

pub fn survival_experiment(n: usize, horizons: &[usize], trials: u64, src: RandomSource) -> Result<SurvivalReport> {
    if trials == 0 {
        return Err(Error::Precondition("need at least one trial".into()));
    }
    if n < 3 {
        return Err(Error::Precondition("cycle needs n >= 3".into()));
    }
    if horizons.windows(2).any(|p| p[0] >= p[1]) {
        return Err(Error::Precondition("horizons must be strictly increasing".into()));
    }
    if horizons.last().is_some_and(|&h| h > 100_000) || trials > u32::MAX as u64 {
        return Err(Error::Guard("horizon above 1e5 or too many trials".into()));
    }
    let g = families::cycle(n);
    let mut estimates = Vec::new();
    for (h, &big_n) in horizons.iter().enumerate() {
        let successes = (0..trials)
            .into_par_iter()
            .filter(|&t| {
                let mut rng = src.substream(survival_stream(h, t)).rng();
                let r0 = rng.random_range(0..n);
                let s0 = rng.random_range(0..n);
                let r = random_steps(&g, r0, big_n + 1, &mut rng);
                let s = random_steps(&g, s0, big_n + 1, &mut rng);
                can_advance(&r, &s, Target::MinAdvance(big_n))
            })
            .count() as u64;
        estimates.push(HorizonEstimate {
            horizon: big_n,
            estimate: Estimate::from_counts(successes, trials),
        });
    }

    let mut zero_corrected = Vec::new();
    let points: Vec<(f64, f64)> = estimates
        .iter()
        .map(|e| {
            let mut p = e.estimate.fraction.unwrap();
            if p == 0.0 {
                zero_corrected.push(e.horizon);
                p = 0.5 / trials as f64;
            }
            ((e.horizon as f64).cbrt(), -p.ln())
        })
        .collect();
    let fit = least_squares(&points);
    Ok(SurvivalReport {
        n,
        horizons: horizons.to_vec(),
        estimates,
        fitted_c: fit.map(|f| f.0),
        fit_intercept: fit.map(|f| f.1),
        fit_r2: fit.map(|f| f.2),
        zero_corrected,
    })
}

/// `(slope, intercept, r^2)` of the ordinary least-squares line, or `None`
/// with fewer than two distinct abscissae.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let m = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some((slope, my - slope * mx, r2))
}

/// Monte Carlo estimate of `Pr(E_k)`: `W_R` increases strongly at `k` while
/// `W_S` decreases at `k`, for walks of `length` vertices with uniform
/// independent starts.
pub fn event_probability(n: usize, k: i64, length: usize, trials: u64, src: RandomSource) -> Result<Estimate> {
    let g = families::cycle(n);
    let orient = CycleOrientation::of(&g)?;
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = src.substream(t).rng();
            let r0 = rng.random_range(0..n);
            let s0 = rng.random_range(0..n);
            let r = random_steps(&g, r0, length, &mut rng);
            let s = random_steps(&g, s0, length, &mut rng);
            let er = winding_events(&winding_trace_steps(&r, &orient, 0).big_w).unwrap();
            let es = winding_events(&winding_trace_steps(&s, &orient, orient.offset(r0, s0)).big_w).unwrap();
            er.strong_increases_at.contains(&k) && es.decreases_at.contains(&k)
        })
        .count() as u64;
    Ok(Estimate::from_counts(hits, trials))
}

/// Largest step count accepted by [`count_confined_walks`].
pub const CONFINED_MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfinedCount {
    pub steps: usize,
    pub radius: usize,
    /// `2r + 1`, the number of allowed positions.
    pub l: usize,
    /// Decimal digits of the exact count.
    pub count: String,
    pub probability: f64,
    pub ln_probability: f64,
    /// `ln(sqrt(l) * cos(pi / (l + 1))^N)`.
    pub ln_bound: f64,
    pub within_bound: bool,
    #[serde(skip)]
    pub exact: BigUint,
}

fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_u64().unwrap() as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Exact number of `+-1` walks of `steps` steps on the integers that never
/// leave `[-r, r]`, by iterating the path adjacency on the middle basis
/// vector, compared against `sqrt(l) cos(pi/(l+1))^N` in log space.
pub fn count_confined_walks(steps: usize, radius: usize) -> Result<ConfinedCount> {
    if steps > CONFINED_MAX_STEPS {
        return Err(Error::Guard(format!("{steps} steps exceed {CONFINED_MAX_STEPS}")));
    }
    if radius == 0 {
        return Err(Error::Precondition("radius must be at least 1".into()));
    }
    let l = 2 * radius + 1;
    let mut v = vec![BigUint::zero(); l];
    v[radius] = BigUint::one();
    for _ in 0..steps {
        let next: Vec<BigUint> = (0..l)
            .map(|i| {
                let mut x = BigUint::zero();
                if i > 0 {
                    x += &v[i - 1];
                }
                if i + 1 < l {
                    x += &v[i + 1];
                }
                x
            })
            .collect();
        v = next;
    }
    let exact: BigUint = v.iter().sum();
    let ln_probability = ln_big(&exact) - steps as f64 * std::f64::consts::LN_2;
    let ln_bound = 0.5 * (l as f64).ln() + steps as f64 * (std::f64::consts::PI / (l + 1) as f64).cos().ln();
    Ok(ConfinedCount {
        steps,
        radius,
        l,
        count: exact.to_string(),
        probability: ln_probability.exp(),
        ln_probability,
        ln_bound,
        within_bound: ln_probability <= ln_bound + 1e-12,
        exact,
    })
}
