//! Fixed-width bit rows used by the scheduling grid.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitRow {
    words: Vec<u64>,
    len: usize,
}

impl BitRow {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut row = Self {
            words: vec![u64::MAX; len.div_ceil(64)],
            len,
        };
        row.trim();
        row
    }

    fn trim(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn first_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    pub fn last_one(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    /// First set bit at index `>= from`.
    pub fn next_one(&self, from: usize) -> Option<usize> {
        if from >= self.len {
            return None;
        }
        let mut wi = from / 64;
        let mut w = self.words[wi] & (u64::MAX << (from % 64));
        loop {
            if w != 0 {
                return Some(wi * 64 + w.trailing_zeros() as usize);
            }
            wi += 1;
            if wi == self.words.len() {
                return None;
            }
            w = self.words[wi];
        }
    }

    pub fn ones_iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(i * 64 + b)
                }
            })
        })
    }

    /// Rightward flood fill: every position of `mask` that lies in the same
    /// run of ones as, and at or after, some seed. Seeds outside `mask` are
    /// ignored.
    ///
    /// Uses `mask & !(mask + seeds) | seeds` with carries propagated across
    /// words; a carry never escapes a run because it stops at the first zero
    /// of `mask`.
    pub fn fill_runs(seeds: &BitRow, mask: &BitRow, out: &mut BitRow) {
        debug_assert_eq!(seeds.len, mask.len);
        let mut carry = 0u64;
        for k in 0..mask.words.len() {
            let m = mask.words[k];
            let x = seeds.words[k] & m;
            let (s1, c1) = m.overflowing_add(x);
            let (s2, c2) = s1.overflowing_add(carry);
            carry = (c1 | c2) as u64;
            out.words[k] = (m & !s2) | x;
        }
    }

    pub fn and_not_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
    }

    pub fn or_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn copy_from(&mut self, other: &BitRow) {
        self.words.copy_from_slice(&other.words);
    }
}

/// Single-word variant of [`BitRow::fill_runs`].
pub(crate) fn fill_runs_word(seeds: u64, mask: u64) -> u64 {
    let x = seeds & mask;
    (mask & !mask.wrapping_add(x)) | x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_fill(seeds: &[bool], mask: &[bool]) -> Vec<bool> {
        let mut out = vec![false; mask.len()];
        let mut live = false;
        for i in 0..mask.len() {
            live = mask[i] && (live || seeds[i]);
            out[i] = live;
        }
        out
    }

    fn row(bits: &[bool]) -> BitRow {
        let mut r = BitRow::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                r.set(i);
            }
        }
        r
    }

    proptest! {
        #[test]
        fn fill_runs_matches_naive(
            pairs in proptest::collection::vec((any::<bool>(), prop::bool::weighted(0.8)), 1..300)
        ) {
            let seeds: Vec<bool> = pairs.iter().map(|p| p.0).collect();
            let mask: Vec<bool> = pairs.iter().map(|p| p.1).collect();
            let mut out = BitRow::zeros(mask.len());
            BitRow::fill_runs(&row(&seeds), &row(&mask), &mut out);
            let expect = naive_fill(&seeds, &mask);
            for i in 0..mask.len() {
                prop_assert_eq!(out.get(i), expect[i]);
            }
        }

        #[test]
        fn fill_runs_word_matches_naive(seeds in any::<u64>(), mask in any::<u64>()) {
            let s: Vec<bool> = (0..64).map(|i| seeds >> i & 1 == 1).collect();
            let m: Vec<bool> = (0..64).map(|i| mask >> i & 1 == 1).collect();
            let got = fill_runs_word(seeds, mask);
            let expect = naive_fill(&s, &m);
            for i in 0..64 {
                prop_assert_eq!(got >> i & 1 == 1, expect[i]);
            }
        }
    }

    #[test]
    fn scanning_helpers() {
        let r = row(&[false, true, false, false, true]);
        assert_eq!(r.first_one(), Some(1));
        assert_eq!(r.last_one(), Some(4));
        assert_eq!(r.next_one(2), Some(4));
        assert_eq!(r.ones_iter().collect::<Vec<_>>(), vec![1, 4]);
        assert_eq!(BitRow::ones(70).ones_iter().count(), 70);
    }
}
