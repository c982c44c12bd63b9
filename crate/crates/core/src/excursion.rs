//! Exact excursion statistics of the uniform random walk around a vertex.
//!
//! An excursion from `v` is the stretch strictly between two consecutive
//! visits to `v`; its length `d` counts those interior vertices. The law of
//! `d` comes from the chain killed on hitting `v`: if `mu_1` is the law of
//! the first step out of `v` and `Q` the transition matrix restricted to
//! `V - v`, then `Pr(d = m) = mu_1 Q^(m-1) k` with `k(x) = P(x, v)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionStats {
    pub vertex: usize,
    pub anchor: usize,
    /// `pmf[m] = Pr(d = m)`; `pmf[0] = 0` since a simple graph has no loops.
    pub pmf: Vec<BigRational>,
    /// `p[l] = Pr(d <= l)` for `l = 0..=l_max`.
    pub p: Vec<BigRational>,
    /// Probability that the excursion neither starts nor ends next to the
    /// anchor: first step `!= w` and last interior vertex `!= w`.
    pub q: BigRational,
}

/// Float view for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionSummary {
    pub vertex: String,
    pub anchor: String,
    pub p: Vec<f64>,
    pub q: f64,
}

fn ratio(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn excursion_stats(g: &Graph, v: usize, w: usize, l_max: usize) -> Result<ExcursionStats> {
    g.require_connected()?;
    if v >= g.len() || w >= g.len() {
        return Err(Error::UnknownVertex(format!("#{}", v.max(w))));
    }
    if !g.has_edge(v, w) {
        return Err(Error::Precondition(format!(
            "{} is not adjacent to {}",
            g.name(w),
            g.name(v)
        )));
    }
    let n = g.len();
    let step = |x: usize| ratio(1, g.degree(x));

    let mut mu = vec![BigRational::zero(); n];
    for &x in g.neighbors(v) {
        mu[x] = step(v);
    }
    let mut pmf = vec![BigRational::zero()];
    let mut p = vec![BigRational::zero()];
    for _ in 1..=l_max {
        let back: BigRational = g
            .neighbors(v)
            .iter()
            .map(|&x| &mu[x] * step(x))
            .sum();
        p.push(p.last().unwrap() + &back);
        pmf.push(back);
        let mut next = vec![BigRational::zero(); n];
        for x in (0..n).filter(|&x| x != v && !mu[x].is_zero()) {
            let share = &mu[x] * step(x);
            for &y in g.neighbors(x) {
                if y != v {
                    next[y] += &share;
                }
            }
        }
        mu = next;
    }

    let q = no_anchor_probability(g, v, w);
    Ok(ExcursionStats {
        vertex: v,
        anchor: w,
        pmf,
        p,
        q,
    })
}

/// Solves `h(x) = sum_y P(x,y) [y = v ? x != w : h(y)]` on `V - v` by exact
/// Gaussian elimination; `h(x)` is the chance that the vertex just before
/// hitting `v` is not `w`.
fn no_anchor_probability(g: &Graph, v: usize, w: usize) -> BigRational {
    let others: Vec<usize> = (0..g.len()).filter(|&x| x != v).collect();
    let k = others.len();
    let pos = |x: usize| others.iter().position(|&o| o == x).unwrap();
    // Augmented system (I - Q) h = b.
    let mut a = vec![vec![BigRational::zero(); k + 1]; k];
    for (row, &x) in others.iter().enumerate() {
        a[row][row] = BigRational::one();
        let px = ratio(1, g.degree(x));
        for &y in g.neighbors(x) {
            if y == v {
                if x != w {
                    a[row][k] += &px;
                }
            } else {
                a[row][pos(y)] -= &px;
            }
        }
    }
    for col in 0..k {
        let pivot = (col..k).find(|&r| !a[r][col].is_zero()).expect("I - Q is invertible");
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for c in col..=k {
            a[col][c] = &a[col][c] * &inv;
        }
        for r in 0..k {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..=k {
                    let t = &f * &a[col][c];
                    a[r][c] -= t;
                }
            }
        }
    }
    g.neighbors(v)
        .iter()
        .filter(|&&x| x != w)
        .map(|&x| &a[pos(x)][k] * ratio(1, g.degree(v)))
        .sum()
}

impl ExcursionStats {
    /// Least `l` with `p[l] >= threshold`, if within the computed range.
    pub fn least_l_reaching(&self, threshold: &BigRational) -> Option<usize> {
        self.p.iter().position(|pl| pl >= threshold)
    }

    pub fn p_f64(&self, l: usize) -> f64 {
        self.p[l].to_f64().unwrap_or(f64::NAN)
    }

    pub fn q_f64(&self) -> f64 {
        self.q.to_f64().unwrap_or(f64::NAN)
    }

    pub fn summary(&self, g: &Graph) -> ExcursionSummary {
        ExcursionSummary {
            vertex: g.name(self.vertex).to_string(),
            anchor: g.name(self.anchor).to_string(),
            p: (0..self.p.len()).map(|l| self.p_f64(l)).collect(),
            q: self.q_f64(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::families;
    use crate::walk::RandomSource;
    use rand::Rng;

    #[test]
    fn k4_first_return_is_geometric() {
        let g = families::complete(4);
        let st = excursion_stats(&g, 0, 1, 12).unwrap();
        assert_eq!(st.p[1], ratio(1, 3));
        assert_eq!(st.p[2], ratio(5, 9));
        for m in 1..=12 {
            let expect = BigRational::new(BigInt::from(2).pow(m as u32 - 1), BigInt::from(3).pow(m as u32));
            assert_eq!(st.pmf[m], expect);
        }
    }

    #[test]
    fn distribution_is_normalized_and_monotone() {
        let g = families::yabc(1, 2, 0);
        let st = excursion_stats(&g, 1, 0, 400).unwrap();
        assert!(st.p.windows(2).all(|w| w[0] <= w[1]));
        assert!(st.p.iter().all(|x| *x >= BigRational::zero() && *x <= BigRational::one()));
        assert!(1.0 - st.p_f64(400) < 1e-9);
        let q = st.q_f64();
        assert!(q > 0.0 && q <= 1.0);
    }

    #[test]
    fn rejects_non_neighbor_anchor() {
        let g = families::path(3);
        assert!(matches!(excursion_stats(&g, 0, 2, 4), Err(Error::Precondition(_))));
    }

    #[test]
    fn k4_q_by_hand() {
        // v = A, w = B. With h(x) = Pr(last interior vertex != B | first = x):
        // h(B) = (h(C) + h(D)) / 3 and h(C) = 1/3 + (h(B) + h(D)) / 3, so
        // h(C) = h(D) = 3/4, h(B) = 1/2 and q = (h(C) + h(D)) / 3 = 1/2.
        let g = families::complete(4);
        let st = excursion_stats(&g, 0, 1, 1).unwrap();
        assert_eq!(st.q, ratio(1, 2));
    }

    /// Samples excursions from `v`; returns counts of `d <= l` for
    /// `l = 0..=cap` and of excursions avoiding `w` at both ends.
    fn sample_excursions(g: &Graph, v: usize, w: usize, trials: usize, cap: usize, seed: u64) -> (Vec<usize>, usize) {
        let mut rng = RandomSource::new(seed).rng();
        let mut within = vec![0usize; cap + 1];
        let mut clean = 0usize;
        let mut walk = Vec::new();
        for _ in 0..trials {
            walk.clear();
            let mut cur = v;
            loop {
                let ns = g.neighbors(cur);
                cur = ns[rng.random_range(0..ns.len())];
                if cur == v {
                    break;
                }
                walk.push(cur);
            }
            for slot in within.iter_mut().skip(walk.len()) {
                *slot += 1;
            }
            if walk[0] != w && *walk.last().unwrap() != w {
                clean += 1;
            }
        }
        (within, clean)
    }

    #[test]
    fn monte_carlo_cross_check() {
        let g = families::complete_bipartite(2, 3);
        let (v, w) = (2, 0);
        let st = excursion_stats(&g, v, w, 30).unwrap();
        let trials = 200_000;
        let (within, clean) = sample_excursions(&g, v, w, trials, 30, 99);
        for l in [2, 4, 8] {
            let est = within[l] as f64 / trials as f64;
            assert!((est - st.p_f64(l)).abs() < 0.005, "l = {l}: {est} vs {}", st.p_f64(l));
        }
        let est_q = clean as f64 / trials as f64;
        assert!((est_q - st.q_f64()).abs() < 0.005);
    }

    #[test]
    fn k4_million_samples() {
        let g = families::complete(4);
        let st = excursion_stats(&g, 0, 1, 6).unwrap();
        let trials = 1_000_000;
        let (within, clean) = sample_excursions(&g, 0, 1, trials, 6, 7);
        // Standard errors are below 5e-4; allow five of them.
        for l in 1..=6 {
            let est = within[l] as f64 / trials as f64;
            assert!((est - st.p_f64(l)).abs() < 2.5e-3, "l = {l}: {est} vs {}", st.p_f64(l));
        }
        assert!((clean as f64 / trials as f64 - 0.5).abs() < 2.5e-3);
    }
}
