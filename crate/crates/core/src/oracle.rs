//! Ground truth that does not go through bifix indicators: exhaustive
//! enumeration of all `L^k` words, a DP over the pattern-matching automaton,
//! and a seeded Monte Carlo stream simulator.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::markov::{transition_matrix, ChainSpec};
use crate::numerics::{Alphabet, ExactProb, ProbScalar};
use crate::patterns::{
    bifix_indicator, enumeration_chunks, failure_function, for_each_word, BifixIndicator,
    EnumBudget, PatternError, Word,
};
use crate::recursions::{Method, ProbTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("Monte Carlo needs at least one trial")]
    NoTrials,
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Deterministic automaton whose state is the length of the longest prefix
/// of the pattern that is a suffix of the input read so far. State `n` is
/// absorbing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternAutomaton {
    pattern: Word,
    delta: Vec<Vec<usize>>,
}

impl PatternAutomaton {
    pub fn new(pattern: &Word) -> Self {
        let b = pattern.symbols();
        let n = b.len();
        let l = pattern.alphabet().size() as usize;
        let fail = failure_function(b);
        let mut delta = vec![vec![0usize; l]; n + 1];
        for q in 0..n {
            let row: Vec<usize> = (0..l)
                .map(|c| {
                    if b[q] as usize == c {
                        q + 1
                    } else if q == 0 {
                        0
                    } else {
                        delta[fail[q]][c]
                    }
                })
                .collect();
            delta[q] = row;
        }
        delta[n] = vec![n; l];
        PatternAutomaton {
            pattern: pattern.clone(),
            delta,
        }
    }

    pub fn pattern(&self) -> &Word {
        &self.pattern
    }

    pub fn states(&self) -> usize {
        self.delta.len()
    }

    pub fn step(&self, state: usize, symbol: u32) -> usize {
        self.delta[state][symbol as usize]
    }

    /// Transition matrix of the automaton driven by uniform random symbols.
    pub fn transition_matrix(&self) -> Vec<Vec<ExactProb>> {
        let alphabet = self.pattern.alphabet();
        self.delta
            .iter()
            .map(|row| {
                let mut counts = vec![0u32; self.states()];
                for &to in row {
                    counts[to] += 1;
                }
                counts
                    .into_iter()
                    .map(|c| ExactProb::new(BigUint::from(c), 1, alphabet))
                    .collect()
            })
            .collect()
    }
}

/// Whether the automaton chain of `b` coincides with the chain attached to
/// its bifix class.
pub fn automaton_matches_class_chain(b: &Word) -> Result<bool, PatternError> {
    let h = bifix_indicator(b)?;
    let spec = ChainSpec::for_indicator(&h, b.alphabet());
    Ok(PatternAutomaton::new(b).transition_matrix() == transition_matrix::<ExactProb>(&spec))
}

/// Exact occurrence counts over all `L^k` words of length `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccurrenceCounts {
    pub pattern: Word,
    pub k: usize,
    pub method: Method,
    /// Words containing the pattern at least once.
    pub contains: BigUint,
    /// `first_at[j-1]`: words whose first occurrence ends at position `j`.
    pub first_at: Vec<BigUint>,
}

impl OccurrenceCounts {
    /// `p_j` and `P_j` for `0 <= j <= k`. A word's prefix of length `j`
    /// decides whether the first occurrence ends by `j`, so the counts
    /// divide by `L^k` directly.
    pub fn table(&self) -> ProbTable<ExactProb> {
        let alphabet = self.pattern.alphabet();
        let h = bifix_indicator(&self.pattern).expect("pattern length checked on construction");
        let first = std::iter::once(ExactProb::zero(alphabet))
            .chain(
                self.first_at
                    .iter()
                    .map(|c| ExactProb::from_count(c.clone(), alphabet, self.k as u32)),
            )
            .collect();
        ProbTable::from_first(h, alphabet, self.method, first)
    }

    /// `contains / L^k`.
    pub fn probability(&self) -> ExactProb {
        ExactProb::from_count(
            self.contains.clone(),
            self.pattern.alphabet(),
            self.k as u32,
        )
    }
}

impl Serialize for OccurrenceCounts {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let first_at: Vec<String> = self.first_at.iter().map(|c| c.to_str_radix(10)).collect();
        let mut st = serializer.serialize_struct("OccurrenceCounts", 6)?;
        st.serialize_field("b", &self.pattern)?;
        st.serialize_field("L", &self.pattern.alphabet())?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("method", &self.method)?;
        st.serialize_field("contains", &self.contains.to_str_radix(10))?;
        st.serialize_field("first_at", &first_at)?;
        st.end()
    }
}

/// End position (1-based) of the first occurrence of `b` in `word`, by
/// direct window comparison.
fn first_occurrence_end(word: &[u32], b: &[u32]) -> Option<usize> {
    (b.len()..=word.len()).find(|&end| &word[end - b.len()..end] == b)
}

/// Counts by visiting every word of length `k`.
pub fn enum_counts(
    b: &Word,
    k: usize,
    budget: EnumBudget,
) -> Result<OccurrenceCounts, PatternError> {
    if b.len() < 2 {
        return Err(PatternError::ShortPattern(b.len()));
    }
    let total = budget.admit(b.alphabet(), k)?;
    let pattern = b.symbols();
    let first_at = enumeration_chunks(total)
        .into_par_iter()
        .map(|(start, count)| {
            let mut local = vec![0u64; k];
            for_each_word(k, b.alphabet(), start, count, |w| {
                if let Some(end) = first_occurrence_end(w, pattern) {
                    local[end - 1] += 1;
                }
            });
            local
        })
        .reduce(
            || vec![0u64; k],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let first_at: Vec<BigUint> = first_at.into_iter().map(BigUint::from).collect();
    Ok(OccurrenceCounts {
        pattern: b.clone(),
        k,
        method: Method::Enumeration,
        contains: first_at.iter().sum(),
        first_at,
    })
}

/// Counts by pushing word counts through the automaton `k` times, O(k n L).
pub fn automaton_counts(b: &Word, k: usize) -> Result<OccurrenceCounts, PatternError> {
    if b.len() < 2 {
        return Err(PatternError::ShortPattern(b.len()));
    }
    let automaton = PatternAutomaton::new(b);
    let n = b.len();
    let l = b.alphabet().size();
    let mut counts = vec![BigUint::zero(); n + 1];
    counts[0] = BigUint::from(1u32);
    let mut first_at = Vec::with_capacity(k);
    for _ in 0..k {
        let mut next = vec![BigUint::zero(); n + 1];
        next[n] = &counts[n] * l;
        for (q, c) in counts.iter().enumerate().take(n) {
            if c.is_zero() {
                continue;
            }
            for symbol in 0..l {
                next[automaton.step(q, symbol)] += c;
            }
        }
        first_at.push(&next[n] - &counts[n] * l);
        counts = next;
    }
    // scale entries to words of the full length k
    let first_at: Vec<BigUint> = first_at
        .into_iter()
        .enumerate()
        .map(|(j, c)| c * b.alphabet().pow((k - j - 1) as u32))
        .collect();
    Ok(OccurrenceCounts {
        pattern: b.clone(),
        k,
        method: Method::Automaton,
        contains: counts.swap_remove(n),
        first_at,
    })
}

/// Length of the words in the non-affine counterexample.
pub const COUNTEREXAMPLE_K: usize = 12;

/// The four binary patterns of the counterexample and their indicators.
pub const COUNTEREXAMPLE_WORDS: [&str; 4] = ["10000", "10001", "10010", "11011"];
pub const COUNTEREXAMPLE_INDICATORS: [&str; 4] = ["0000", "1000", "0100", "1100"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CounterexampleReport {
    pub k: usize,
    pub words: Vec<Word>,
    pub indicators: Vec<BifixIndicator>,
    /// Indicators equal the expected `0000, 1000, 0100, 1100`.
    pub indicators_as_expected: bool,
    /// `h1 + h4 = h2 + h3` componentwise.
    pub indicators_additive: bool,
    /// `P_12` for each word.
    pub probabilities: Vec<ExactProb>,
    /// `P1 + P4`.
    pub lhs: ExactProb,
    /// `P2 + P3`.
    pub rhs: ExactProb,
    pub probabilities_differ: bool,
}

impl CounterexampleReport {
    pub fn holds(&self) -> bool {
        self.indicators_as_expected && self.indicators_additive && self.probabilities_differ
    }
}

/// Shows that `P_k` is not affine in `h`: the indicators of the four words
/// satisfy `h1 + h4 = h2 + h3`, but `P1 + P4 != P2 + P3` at `k = 12`.
pub fn counterexample_check() -> CounterexampleReport {
    let words: Vec<Word> = COUNTEREXAMPLE_WORDS
        .iter()
        .map(|w| Word::parse(w, Alphabet::BINARY).expect("valid literal"))
        .collect();
    let indicators: Vec<BifixIndicator> = words
        .iter()
        .map(|w| bifix_indicator(w).expect("length 5"))
        .collect();
    let indicators_as_expected = indicators
        .iter()
        .zip(COUNTEREXAMPLE_INDICATORS)
        .all(|(h, e)| h.to_string() == e);
    let sum = |a: &BifixIndicator, b: &BifixIndicator| -> Vec<u8> {
        a.bits()
            .iter()
            .zip(b.bits())
            .map(|(&x, &y)| u8::from(x) + u8::from(y))
            .collect()
    };
    let indicators_additive =
        sum(&indicators[0], &indicators[3]) == sum(&indicators[1], &indicators[2]);
    let probabilities: Vec<ExactProb> = words
        .iter()
        .map(|w| {
            automaton_counts(w, COUNTEREXAMPLE_K)
                .expect("length 5")
                .probability()
        })
        .collect();
    let lhs = probabilities[0].plus(&probabilities[3]);
    let rhs = probabilities[1].plus(&probabilities[2]);
    CounterexampleReport {
        k: COUNTEREXAMPLE_K,
        probabilities_differ: lhs != rhs,
        words,
        indicators,
        indicators_as_expected,
        indicators_additive,
        probabilities,
        lhs,
        rhs,
    }
}

/// Name recorded in Monte Carlo output.
pub const GENERATOR_NAME: &str = "ChaCha8Rng (rand_chacha), stream = trial index";

/// Seed used when the caller does not pick one.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub trials: u64,
    pub k: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(trials: u64, k: usize, seed: u64) -> Result<Self, OracleError> {
        if trials == 0 {
            return Err(OracleError::NoTrials);
        }
        Ok(McConfig { trials, k, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub b: Word,
    #[serde(rename = "L")]
    pub alphabet: Alphabet,
    pub generator: &'static str,
    pub seed: u64,
    pub trials: u64,
    pub k: usize,
    /// `p_hat[j]`: fraction of trials whose first occurrence ends by `j`.
    pub p_hat: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `waits[j]`: trials whose first occurrence ends exactly at `j`.
    pub waits: Vec<u64>,
    /// Trials with no occurrence within `k` symbols.
    pub censored: u64,
    /// Mean of `min(wait, k)`.
    pub mean_censored_wait: f64,
}

impl McReport {
    /// `|p_hat(j) - exact| < sigmas * stderr(j)`. A zero standard error
    /// (all trials agree) passes only on exact agreement.
    pub fn within_band(&self, j: usize, exact: f64, sigmas: f64) -> bool {
        let diff = (self.p_hat[j] - exact).abs();
        if self.stderr[j] == 0.0 {
            diff == 0.0
        } else {
            diff < sigmas * self.stderr[j]
        }
    }
}

/// Simulates `trials` independent uniform streams of length `k` and records
/// the first-occurrence time of `b` in each.
///
/// Trial `t` draws from stream `t` of a ChaCha8 generator seeded with
/// `seed`, so the result does not depend on how trials are scheduled.
pub fn monte_carlo(b: &Word, cfg: McConfig) -> McReport {
    let n = b.len();
    let l = b.alphabet().size();
    let pattern = b.symbols();
    let (waits, censored) = (0..cfg.trials)
        .into_par_iter()
        .fold(
            || (vec![0u64; cfg.k + 1], 0u64),
            |(mut waits, mut censored), trial| {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(trial);
                let mut window: Vec<u32> = Vec::with_capacity(n);
                let mut hit = None;
                for j in 1..=cfg.k {
                    if window.len() == n {
                        window.remove(0);
                    }
                    window.push(rng.gen_range(0..l));
                    if window.as_slice() == pattern {
                        hit = Some(j);
                        break;
                    }
                }
                match hit {
                    Some(j) => waits[j] += 1,
                    None => censored += 1,
                }
                (waits, censored)
            },
        )
        .reduce(
            || (vec![0u64; cfg.k + 1], 0u64),
            |(mut a, ca), (b, cb)| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                (a, ca + cb)
            },
        );

    let trials = cfg.trials as f64;
    let mut hits = 0u64;
    let mut p_hat = Vec::with_capacity(cfg.k + 1);
    let mut stderr = Vec::with_capacity(cfg.k + 1);
    for w in &waits {
        hits += w;
        let p = hits as f64 / trials;
        p_hat.push(p);
        stderr.push((p * (1.0 - p) / trials).sqrt());
    }
    let total_wait: f64 = waits
        .iter()
        .enumerate()
        .map(|(j, &c)| j as f64 * c as f64)
        .sum::<f64>()
        + censored as f64 * cfg.k as f64;
    McReport {
        b: b.clone(),
        alphabet: b.alphabet(),
        generator: GENERATOR_NAME,
        seed: cfg.seed,
        trials: cfg.trials,
        k: cfg.k,
        p_hat,
        stderr,
        waits,
        censored,
        mean_censored_wait: total_wait / trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn word(text: &str, l: u32) -> Word {
        Word::parse(text, Alphabet::new(l).unwrap()).unwrap()
    }

    /// Longest prefix of `b` that is a suffix of `b[..state] + c`.
    fn naive_step(b: &[u32], state: usize, c: u32) -> usize {
        if state == b.len() {
            return state;
        }
        let mut read: Vec<u32> = b[..state].to_vec();
        read.push(c);
        (0..=b.len().min(read.len()))
            .rev()
            .find(|&len| b[..len] == read[read.len() - len..])
            .unwrap()
    }

    #[test]
    fn automaton_matches_naive_step_function() {
        for n in 2..=8 {
            let l = if n <= 5 { 3 } else { 2 };
            let alphabet = Alphabet::new(l).unwrap();
            let total = u64::from(l).pow(n as u32);
            for_each_word(n, alphabet, 0, total, |symbols| {
                let w = Word::new(symbols.to_vec(), alphabet).unwrap();
                let a = PatternAutomaton::new(&w);
                for q in 0..=n {
                    for c in 0..l {
                        assert_eq!(a.step(q, c), naive_step(symbols, q, c), "{w} q={q} c={c}");
                    }
                }
                for (q, &c) in symbols.iter().enumerate() {
                    assert_eq!(a.step(q, c), q + 1);
                }
            });
        }
    }

    #[test]
    fn enumeration_examples() {
        let budget = EnumBudget::default();
        assert_eq!(
            enum_counts(&word("11", 2), 3, budget).unwrap().contains,
            BigUint::from(3u32)
        );
        assert_eq!(
            enum_counts(&word("10", 2), 3, budget).unwrap().contains,
            BigUint::from(4u32)
        );
        assert!(enum_counts(&word("101", 2), 2, budget)
            .unwrap()
            .contains
            .is_zero());
        assert_eq!(
            enum_counts(&word("10", 2), 30, EnumBudget(1 << 20)),
            Err(PatternError::BudgetExceeded {
                alphabet: 2,
                len: 30,
                budget: 1 << 20
            })
        );
    }

    #[test]
    fn automaton_examples() {
        let c = automaton_counts(&word("11", 2), 3).unwrap();
        assert_eq!(c.contains, BigUint::from(3u32));
        assert_eq!(
            c.first_at,
            vec![0u32, 2, 1]
                .into_iter()
                .map(BigUint::from)
                .collect::<Vec<_>>()
        );
        for w in ["10", "1101", "2012"] {
            let b = word(w, 3);
            assert_eq!(
                automaton_counts(&b, b.len()).unwrap().contains,
                BigUint::from(1u32)
            );
        }
        let c = automaton_counts(&word("10000", 2), 12).unwrap();
        assert_eq!(c.contains, BigUint::from(1000u32));
    }

    #[test]
    fn oracles_agree_on_counts() {
        let budget = EnumBudget::default();
        for w in ["11", "10", "101", "1001", "11011", "0110"] {
            let b = word(w, 2);
            for k in 0..=12 {
                assert_eq!(
                    enum_counts(&b, k, budget).unwrap().first_at,
                    automaton_counts(&b, k).unwrap().first_at
                );
            }
        }
    }

    #[test]
    fn counterexample_goldens() {
        let report = counterexample_check();
        assert!(report.holds());
        let counts: Vec<BigUint> = report
            .probabilities
            .iter()
            .map(|p| p.numerator() << (12 - p.den_exp()))
            .collect();
        assert_eq!(counts, [1000u32, 968, 924, 894].map(BigUint::from).to_vec());
        assert_eq!(
            report.lhs,
            ExactProb::new(BigUint::from(1894u32), 12, Alphabet::BINARY)
        );
        assert_eq!(
            report.rhs,
            ExactProb::new(BigUint::from(1892u32), 12, Alphabet::BINARY)
        );
    }

    #[test]
    fn automaton_chain_vs_class_chain() {
        // 10000: from state i >= 1, a 1 restarts at state 1, as in s = (0,1,1,1,1)
        assert!(automaton_matches_class_chain(&word("10000", 2)).unwrap());
        // 00000: a 1 anywhere resets to 0, but the class chain keeps s = (0,0,0,0,0)
        assert!(automaton_matches_class_chain(&word("00000", 2)).unwrap());
        // 11011: reading 0 in state 1 drops to 0, the class chain (0,1,1,0,0) stays at 1
        assert!(!automaton_matches_class_chain(&word("11011", 2)).unwrap());
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let b = word("11", 2);
        let cfg = McConfig::new(2000, 20, 7).unwrap();
        let a = monte_carlo(&b, cfg);
        assert_eq!(a, monte_carlo(&b, cfg));
        assert_ne!(
            a.waits,
            monte_carlo(&b, McConfig::new(2000, 20, 8).unwrap()).waits
        );
        assert_eq!(a.waits.iter().sum::<u64>() + a.censored, 2000);
        assert_eq!(McConfig::new(0, 5, 1), Err(OracleError::NoTrials));
    }

    #[test]
    fn single_trial_is_zero_one_and_monotone() {
        for seed in 0..20 {
            let r = monte_carlo(&word("101", 2), McConfig::new(1, 15, seed).unwrap());
            assert!(r.p_hat.iter().all(|&p| p == 0.0 || p == 1.0));
            assert!(r.p_hat.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn monte_carlo_estimate_near_exact() {
        let r = monte_carlo(
            &word("11", 2),
            McConfig::new(100_000, 20, DEFAULT_SEED).unwrap(),
        );
        assert!(r.within_band(3, 0.375, 4.0), "{} vs 0.375", r.p_hat[3]);
        assert!(r.within_band(1, 0.0, 4.0));
    }

    #[test]
    fn counts_json_shape() {
        let c = automaton_counts(&word("11", 2), 3).unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["b"], "11");
        assert_eq!(v["L"], 2);
        assert_eq!(v["k"], 3);
        assert_eq!(v["contains"], "3");
        assert_eq!(v["first_at"], serde_json::json!(["0", "2", "1"]));
    }
}
