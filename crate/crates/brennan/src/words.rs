//! Reduced words over the rank-2 free group ⟨a, b⟩.
//!
//! Words are sequences of the four letters a, a⁻¹, b, b⁻¹ in which no letter
//! is followed by its inverse. There are `4·3^(n-1)` reduced words of length
//! `n ≥ 1` and `2(3^ℓ − 1)` nonempty reduced words of length at most `ℓ`.
//! A bijective index ↦ word decoding lets us sample uniformly without
//! materializing the population.

use crate::moebius::MoebiusMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One of the four generators; `Ainv` is a⁻¹, `Binv` is b⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    A = 0,
    Ainv = 1,
    B = 2,
    Binv = 3,
}

pub const LETTERS: [Letter; 4] = [Letter::A, Letter::Ainv, Letter::B, Letter::Binv];

impl Letter {
    pub fn inverse(self) -> Letter {
        // inverse pairs sit at adjacent indices, so xor 1 flips them
        LETTERS[(self as usize) ^ 1]
    }

    pub fn symbol(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::Ainv => 'A',
            Letter::B => 'b',
            Letter::Binv => 'B',
        }
    }

    pub fn from_symbol(ch: char) -> Option<Letter> {
        match ch {
            'a' => Some(Letter::A),
            'A' => Some(Letter::Ainv),
            'b' => Some(Letter::B),
            'B' => Some(Letter::Binv),
            _ => None,
        }
    }
}

/// A reduced word, possibly empty (the identity).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_string(&self) -> String {
        self.0.iter().map(|l| l.symbol()).collect()
    }

    pub fn parse(s: &str) -> Option<Word> {
        let letters: Option<Vec<Letter>> = s.chars().map(Letter::from_symbol).collect();
        let letters = letters?;
        for pair in letters.windows(2) {
            if pair[1] == pair[0].inverse() {
                return None; // not reduced
            }
        }
        Some(Word(letters))
    }

    /// Substitutes matrices for the generators and multiplies left to right.
    pub fn evaluate(&self, gen_a: &MoebiusMap, gen_b: &MoebiusMap) -> MoebiusMap {
        let gens = generator_table(gen_a, gen_b);
        let mut m = MoebiusMap::identity();
        for &l in &self.0 {
            m = m * gens[l as usize];
        }
        m
    }
}

/// The four matrices [a, a⁻¹, b, b⁻¹] indexed like [`Letter`].
pub fn generator_table(gen_a: &MoebiusMap, gen_b: &MoebiusMap) -> [MoebiusMap; 4] {
    [*gen_a, gen_a.inverse(), *gen_b, gen_b.inverse()]
}

/// Number of reduced words of length exactly `n`: 1 for n = 0, else 4·3^(n−1).
pub fn count_exact(n: u32) -> u64 {
    if n == 0 {
        1
    } else {
        4 * 3u64.pow(n - 1)
    }
}

/// Number of nonempty reduced words of length at most `max_len`: 2(3^ℓ − 1).
pub fn population(max_len: u32) -> u64 {
    2 * (3u64.pow(max_len) - 1)
}

/// Decodes an index in `0 .. population(max_len)` into a reduced word.
///
/// Indices enumerate words by increasing length; within a length, the first
/// letter ranges over [a, a⁻¹, b, b⁻¹] and every subsequent position over
/// the three non-cancelling letters in the same fixed order.
pub fn word_from_index(mut idx: u64, max_len: u32) -> Word {
    assert!(idx < population(max_len), "index out of range");
    let mut len = 1u32;
    let mut count = 4u64;
    while idx >= count {
        idx -= count;
        len += 1;
        count *= 3;
    }
    let mut base = count / 4; // 3^(len-1)
    let mut letters = Vec::with_capacity(len as usize);
    letters.push(LETTERS[(idx / base) as usize]);
    idx %= base;
    for _ in 1..len {
        base /= 3;
        let choice = (idx / base) as usize;
        idx %= base;
        let last = *letters.last().unwrap();
        let mut seen = 0;
        for cand in LETTERS {
            if cand == last.inverse() {
                continue;
            }
            if seen == choice {
                letters.push(cand);
                break;
            }
            seen += 1;
        }
    }
    Word(letters)
}

/// Inverse of [`word_from_index`]; used to cross-check the bijection.
pub fn index_from_word(word: &Word) -> u64 {
    assert!(!word.is_empty());
    let len = word.len() as u32;
    let mut idx: u64 = if len == 1 { 0 } else { population(len - 1) };
    let mut base = 3u64.pow(len - 1);
    idx += word.0[0] as u64 * base;
    for k in 1..word.len() {
        base /= 3;
        let last = word.0[k - 1];
        let mut choice = 0u64;
        for cand in LETTERS {
            if cand == last.inverse() {
                continue;
            }
            if cand == word.0[k] {
                break;
            }
            choice += 1;
        }
        idx += choice * base;
    }
    idx
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("requested {requested} words but only {population} exist at max length {max_len}")]
    TooManyRequested {
        requested: u64,
        population: u64,
        max_len: u32,
    },
}

/// Draws `n` distinct reduced words uniformly without replacement from all
/// nonempty reduced words of length ≤ `max_len`. Deterministic given `seed`.
pub fn sample_words(n: usize, max_len: u32, seed: u64) -> Result<Vec<Word>, SampleError> {
    let pop = population(max_len);
    if n as u64 > pop {
        return Err(SampleError::TooManyRequested {
            requested: n as u64,
            population: pop,
            max_len,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let idxs = sample_indices(&mut rng, pop, n);
    Ok(idxs.into_iter().map(|i| word_from_index(i, max_len)).collect())
}

/// Floyd's algorithm for a uniform sample of `n` distinct indices in
/// `0..pop`, returned in the (deterministic) insertion order.
fn sample_indices(rng: &mut ChaCha8Rng, pop: u64, n: usize) -> Vec<u64> {
    use rand::Rng;
    use std::collections::HashSet;
    let mut chosen: HashSet<u64> = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    for j in (pop - n as u64)..pop {
        let t = rng.random_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
    out
}

/// Depth-first traversal of all reduced words of length 1..=max_len.
///
/// The visitor receives the depth and the word's last letter index along
/// with the running matrix products in two generator pairs; products are
/// renormalized to determinant 1 at every step.
pub struct PairDfs {
    pub gens_first: [MoebiusMap; 4],
    pub gens_second: [MoebiusMap; 4],
}

impl PairDfs {
    pub fn new(a1: &MoebiusMap, b1: &MoebiusMap, a2: &MoebiusMap, b2: &MoebiusMap) -> Self {
        Self {
            gens_first: generator_table(a1, b1),
            gens_second: generator_table(a2, b2),
        }
    }

    /// Visits every reduced word with prefix `prefix_m` at depth `depth`,
    /// extending to `max_len`. `visit(depth, m_first, m_second)` is called
    /// in canonical letter order, so traversal order is deterministic.
    pub fn walk<F: FnMut(u32, &MoebiusMap, &MoebiusMap)>(
        &self,
        max_len: u32,
        visit: &mut F,
    ) {
        self.walk_from(MoebiusMap::identity(), MoebiusMap::identity(), None, 0, max_len, visit)
    }

    pub fn walk_from<F: FnMut(u32, &MoebiusMap, &MoebiusMap)>(
        &self,
        m1: MoebiusMap,
        m2: MoebiusMap,
        last: Option<Letter>,
        depth: u32,
        max_len: u32,
        visit: &mut F,
    ) {
        if depth == max_len {
            return;
        }
        for l in LETTERS {
            if let Some(prev) = last {
                if l == prev.inverse() {
                    continue;
                }
            }
            let n1 = m1 * self.gens_first[l as usize];
            let n2 = m2 * self.gens_second[l as usize];
            visit(depth + 1, &n1, &n2);
            self.walk_from(n1, n2, Some(l), depth + 1, max_len, visit);
        }
    }

    /// All reduced words of length exactly `len` paired with their running
    /// products, in canonical order. Used to split the traversal into
    /// independent subtrees.
    pub fn prefixes(&self, len: u32) -> Vec<(Word, MoebiusMap, MoebiusMap)> {
        let mut out = Vec::new();
        let mut stack = vec![(Word::default(), MoebiusMap::identity(), MoebiusMap::identity())];
        // breadth-by-depth expansion in canonical order
        for _ in 0..len {
            let mut next = Vec::with_capacity(stack.len() * 3);
            for (w, m1, m2) in stack {
                for l in LETTERS {
                    if let Some(&prev) = w.0.last() {
                        if l == prev.inverse() {
                            continue;
                        }
                    }
                    let mut w2 = w.clone();
                    w2.0.push(l);
                    next.push((
                        w2,
                        m1 * self.gens_first[l as usize],
                        m2 * self.gens_second[l as usize],
                    ));
                }
            }
            stack = next;
        }
        out.extend(stack);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        assert_eq!(count_exact(0), 1);
        assert_eq!(count_exact(1), 4);
        assert_eq!(count_exact(3), 36);
        for l in 1..=8 {
            let total: u64 = (1..=l).map(count_exact).sum();
            assert_eq!(total, population(l));
        }
    }

    #[test]
    fn index_bijection_round_trip() {
        let max_len = 5;
        for idx in 0..population(max_len) {
            let w = word_from_index(idx, max_len);
            assert!(w.len() as u32 <= max_len);
            for pair in w.0.windows(2) {
                assert_ne!(pair[1], pair[0].inverse(), "unreduced word at {idx}");
            }
            assert_eq!(index_from_word(&w), idx);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_distinct() {
        let s1 = sample_words(50, 6, 99).unwrap();
        let s2 = sample_words(50, 6, 99).unwrap();
        assert_eq!(s1, s2);
        let set: std::collections::HashSet<_> = s1.iter().map(|w| w.to_string()).collect();
        assert_eq!(set.len(), 50);
    }

    #[test]
    fn sampling_length_one_exhausts_letters() {
        let s = sample_words(4, 1, 3).unwrap();
        let mut syms: Vec<String> = s.iter().map(|w| w.to_string()).collect();
        syms.sort();
        assert_eq!(syms, vec!["A", "B", "a", "b"]);
    }

    #[test]
    fn sampling_rejects_oversize_requests() {
        assert!(matches!(
            sample_words(5, 1, 0),
            Err(SampleError::TooManyRequested { .. })
        ));
    }

    #[test]
    fn word_parse_and_print() {
        let w = Word::parse("aBab").unwrap();
        assert_eq!(w.to_string(), "aBab");
        assert!(Word::parse("aA").is_none());
        assert!(Word::parse("xy").is_none());
    }

    #[test]
    fn dfs_visits_each_word_once() {
        let a = MoebiusMap::from_real(1.5, 2.5, 0.5, 1.5).unwrap();
        let b = MoebiusMap::from_real(2.5, -0.5, -0.5, 0.5).unwrap();
        let dfs = PairDfs::new(&a, &b, &a, &b);
        let mut per_depth = [0u64; 6];
        dfs.walk(5, &mut |d, _, _| per_depth[d as usize] += 1);
        for n in 1..=5u32 {
            assert_eq!(per_depth[n as usize], count_exact(n));
        }
    }

    #[test]
    fn prefixes_match_dfs_order_count() {
        let a = MoebiusMap::from_real(1.5, 2.5, 0.5, 1.5).unwrap();
        let b = MoebiusMap::from_real(2.5, -0.5, -0.5, 0.5).unwrap();
        let dfs = PairDfs::new(&a, &b, &a, &b);
        let pre = dfs.prefixes(3);
        assert_eq!(pre.len() as u64, count_exact(3));
        // spot-check one product against direct evaluation
        let (w, m1, _) = &pre[7];
        let direct = w.evaluate(&a, &b);
        assert!(crate::moebius::proj_dist(m1, &direct) <= 1e-12);
    }
}
