//! The chains `X(s)` on states `0..=n` with absorbing state `n`.
//!
//! From a transient state `i` the chain moves to `i+1` with probability
//! `1/L`, to `s_i` with probability `1/L`, and to `0` with the remaining
//! `(L-2)/L` (the last two merge when `s_i = 0`). `P_k(i)` is the
//! probability of reaching `n` within `k` steps from `i`.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::numerics::{Alphabet, ExactProb, ProbScalar};
use crate::patterns::{s_from_h, BifixIndicator, Comparison, PatternError, SWord};
use crate::recursions::{Method, ProbTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarkovError {
    #[error("chains must share the same alphabet ({0} vs {1})")]
    AlphabetMismatch(u32, u32),
    #[error("jump-target words are not strictly ordered (verdict: {0})")]
    NotStrictlyOrdered(Comparison),
    #[error("horizon K={upto} must be at least n={n}")]
    HorizonTooShort { upto: usize, n: usize },
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ChainSpec {
    s: SWord,
    #[serde(rename = "L")]
    alphabet: Alphabet,
}

impl ChainSpec {
    pub fn new(s: SWord, alphabet: Alphabet) -> Self {
        ChainSpec { s, alphabet }
    }

    /// The chain attached to a bifix class, via `s_from_h`.
    pub fn for_indicator(h: &BifixIndicator, alphabet: Alphabet) -> Self {
        ChainSpec::new(s_from_h(h), alphabet)
    }

    pub fn s(&self) -> &SWord {
        &self.s
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Index of the absorbing state.
    pub fn n(&self) -> usize {
        self.s.len()
    }
}

/// `(n+1) x (n+1)` transition matrix, written out from the case split.
pub fn transition_matrix<S: ProbScalar>(spec: &ChainSpec) -> Vec<Vec<S>> {
    let n = spec.n();
    let l = spec.alphabet;
    let zero = S::zero(l);
    let step = S::ratio_pow(1, l, 1);
    let reset = S::ratio_pow(l.size() - 2, l, 1);
    let reset_merged = S::ratio_pow(l.size() - 1, l, 1);
    (0..=n)
        .map(|i| {
            (0..=n)
                .map(|j| {
                    if i == n {
                        return if j == n { S::one(l) } else { zero.clone() };
                    }
                    let s_i = spec.s.get(i);
                    let mut w = zero.clone();
                    if j == i + 1 {
                        w = w.plus(&step);
                    }
                    if s_i == j && j > 0 {
                        w = w.plus(&step);
                    }
                    if s_i > 0 && j == 0 {
                        w = w.plus(&reset);
                    }
                    if s_i == 0 && j == 0 {
                        w = w.plus(&reset_merged);
                    }
                    w
                })
                .collect()
        })
        .collect()
}

/// `P_k(i)` for `0 <= k <= K`, `0 <= i <= n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachTable<S> {
    spec: ChainSpec,
    rows: Vec<Vec<S>>,
}

impl<S: ProbScalar> ReachTable<S> {
    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn upto(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn get(&self, k: usize, i: usize) -> &S {
        &self.rows[k][i]
    }

    pub fn row(&self, k: usize) -> &[S] {
        &self.rows[k]
    }

    /// `P_k = P_k(0)`.
    pub fn hitting(&self, k: usize) -> &S {
        &self.rows[k][0]
    }

    /// Compares `P_k(0)` against forward evolution of the state distribution
    /// at up to ten evenly spaced `k`. Returns the first `k` that disagrees.
    pub fn cross_check_forward(&self) -> Result<(), usize> {
        let forward = forward_absorption::<S>(&self.spec, self.upto());
        let upto = self.upto();
        let samples: Vec<usize> = if upto < 10 {
            (0..=upto).collect()
        } else {
            (0..10).map(|j| j * upto / 9).collect()
        };
        match samples.into_iter().find(|&k| forward[k] != self.rows[k][0]) {
            Some(k) => Err(k),
            None => Ok(()),
        }
    }

    /// Checks the three structural properties of `P_k(i)` on the whole table:
    /// nondecreasing in `k`; positive iff `k + i >= n`; nondecreasing in `i`,
    /// strictly when `k + i + 1 >= n` and with both sides zero otherwise.
    pub fn lemma_violations(&self) -> Vec<LemmaViolation> {
        let n = self.spec.n();
        let mut out = Vec::new();
        let mut flag = |lemma, k, i, detail: String| {
            out.push(LemmaViolation {
                lemma,
                k,
                i,
                detail,
            })
        };
        for (k, row) in self.rows.iter().enumerate() {
            if row[n] != S::one(self.spec.alphabet) {
                flag(
                    Lemma::MonotoneInK,
                    k,
                    n,
                    format!("absorbing entry is {:?}", row[n]),
                );
            }
            for i in 0..=n {
                if k > 0 && self.rows[k - 1][i] > row[i] {
                    flag(
                        Lemma::MonotoneInK,
                        k,
                        i,
                        format!("{:?} > {:?}", self.rows[k - 1][i], row[i]),
                    );
                }
                let positive = !row[i].is_zero();
                if positive != (k + i >= n) {
                    flag(
                        Lemma::PositiveIffReachable,
                        k,
                        i,
                        format!("value {:?}", row[i]),
                    );
                }
                if i < n {
                    let (lo, hi) = (&row[i], &row[i + 1]);
                    let ok = if k + i + 1 >= n {
                        lo < hi
                    } else {
                        lo.is_zero() && hi.is_zero()
                    };
                    if !ok {
                        flag(
                            Lemma::MonotoneInState,
                            k,
                            i,
                            format!("P(i)={lo:?}, P(i+1)={hi:?}"),
                        );
                    }
                }
            }
        }
        out
    }
}

impl<S: ProbScalar + Serialize> Serialize for ReachTable<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let mut st = serializer.serialize_struct("ReachTable", 3)?;
        st.serialize_field("spec", &self.spec)?;
        st.serialize_field("K", &self.upto())?;
        st.serialize_field("rows", &self.rows)?;
        st.end()
    }
}

/// Backward DP: `P_0(i) = [i = n]` and
/// `P_k(i) = P_{k-1}(i+1)/L + P_{k-1}(s_i)/L + (L-2)/L * P_{k-1}(0)` for `i < n`.
pub fn reach_table<S: ProbScalar>(spec: &ChainSpec, upto: usize) -> ReachTable<S> {
    let n = spec.n();
    let l = spec.alphabet;
    let step = S::ratio_pow(1, l, 1);
    let reset = S::ratio_pow(l.size() - 2, l, 1);
    let mut first = vec![S::zero(l); n + 1];
    first[n] = S::one(l);
    let mut rows = Vec::with_capacity(upto + 1);
    rows.push(first);
    for k in 1..=upto {
        let prev: &Vec<S> = &rows[k - 1];
        let mut row: Vec<S> = (0..n)
            .map(|i| {
                step.times(&prev[i + 1])
                    .plus(&step.times(&prev[spec.s.get(i)]))
                    .plus(&reset.times(&prev[0]))
            })
            .collect();
        row.push(S::one(l));
        rows.push(row);
    }
    ReachTable {
        spec: spec.clone(),
        rows,
    }
}

/// `Pr(X_k = n)` for `0 <= k <= K` by evolving the state distribution from `X_0 = 0`.
pub fn forward_absorption<S: ProbScalar>(spec: &ChainSpec, upto: usize) -> Vec<S> {
    let n = spec.n();
    let l = spec.alphabet;
    let matrix = transition_matrix::<S>(spec);
    let mut dist = vec![S::zero(l); n + 1];
    dist[0] = S::one(l);
    let mut out = Vec::with_capacity(upto + 1);
    out.push(dist[n].clone());
    for _ in 0..upto {
        dist = (0..=n)
            .map(|j| {
                dist.iter()
                    .zip(&matrix)
                    .fold(S::zero(l), |acc, (d, row)| acc.plus(&d.times(&row[j])))
            })
            .collect();
        out.push(dist[n].clone());
    }
    out
}

/// `P_k` of the chain attached to `h`, as a [`ProbTable`] tagged `markov`.
///
/// # Panics
/// If the backward DP and forward evolution disagree at a sampled `k`.
pub fn chain_prob_table<S: ProbScalar>(
    h: &BifixIndicator,
    alphabet: Alphabet,
    upto: usize,
) -> ProbTable<S> {
    let spec = ChainSpec::for_indicator(h, alphabet);
    let table = reach_table::<S>(&spec, upto);
    if let Err(k) = table.cross_check_forward() {
        panic!(
            "forward evolution disagrees with reach table at k={k} for s={}",
            spec.s
        );
    }
    let cumulative = (0..=upto).map(|k| table.hitting(k).clone()).collect();
    ProbTable::from_cumulative(h.clone(), alphabet, Method::Markov, cumulative)
}

/// `n + 1 + min{ i - s_i : s_i > s'_i }` for `s > s'`.
pub fn chain_k0(s: &SWord, s2: &SWord) -> Result<usize, MarkovError> {
    match s.compare(s2)? {
        Comparison::Greater => {}
        other => return Err(MarkovError::NotStrictlyOrdered(other)),
    }
    let gap = (0..s.len())
        .filter(|&i| s.get(i) > s2.get(i))
        .map(|i| i - s.get(i))
        .min()
        .expect("strict order has a differing index");
    Ok(s.len() + 1 + gap)
}

/// Observed vs expected relation of `P_k` and `P'_k` at one `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub k: usize,
    #[serde(rename = "P")]
    pub value: ExactProb,
    #[serde(rename = "P2")]
    pub other: ExactProb,
    pub observed: Comparison,
    pub expected: Comparison,
}

impl Verdict {
    pub fn conforms(&self) -> bool {
        self.observed == self.expected
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainComparison {
    pub k0: usize,
    pub violations: Vec<Verdict>,
    pub verdicts: Vec<Verdict>,
}

impl ChainComparison {
    pub fn conforms(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact comparison of `X(s)` and `X(s')` for `s > s'`: equality of `P_k`
/// below [`chain_k0`], strict `P_k > P'_k` from it on, checked for `k <= K`.
pub fn compare_chains(
    s: &SWord,
    s2: &SWord,
    alphabet: Alphabet,
    upto: usize,
) -> Result<ChainComparison, MarkovError> {
    let k0 = chain_k0(s, s2)?;
    compare_with_threshold(
        &ChainSpec::new(s.clone(), alphabet),
        &ChainSpec::new(s2.clone(), alphabet),
        k0,
        upto,
    )
}

/// Exact comparison of `P_k(0)` for two chains against an arbitrary
/// threshold: equality expected for `k < k0`, `P_k > P'_k` for `k >= k0`.
pub fn compare_with_threshold(
    spec: &ChainSpec,
    spec2: &ChainSpec,
    k0: usize,
    upto: usize,
) -> Result<ChainComparison, MarkovError> {
    if spec.alphabet != spec2.alphabet {
        return Err(MarkovError::AlphabetMismatch(
            spec.alphabet.size(),
            spec2.alphabet.size(),
        ));
    }
    let a = reach_table::<ExactProb>(spec, upto);
    let b = reach_table::<ExactProb>(spec2, upto);
    let verdicts: Vec<Verdict> = (0..=upto)
        .map(|k| {
            let (x, y) = (a.hitting(k), b.hitting(k));
            let observed = match x.try_cmp(y).expect("same alphabet") {
                std::cmp::Ordering::Less => Comparison::Less,
                std::cmp::Ordering::Equal => Comparison::Equal,
                std::cmp::Ordering::Greater => Comparison::Greater,
            };
            Verdict {
                k,
                value: x.clone(),
                other: y.clone(),
                observed,
                expected: if k < k0 {
                    Comparison::Equal
                } else {
                    Comparison::Greater
                },
            }
        })
        .collect();
    let violations = verdicts.iter().filter(|v| !v.conforms()).cloned().collect();
    Ok(ChainComparison {
        k0,
        violations,
        verdicts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    MonotoneInK,
    PositiveIffReachable,
    MonotoneInState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LemmaViolation {
    pub lemma: Lemma,
    pub k: usize,
    pub i: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub spec: ChainSpec,
    #[serde(rename = "K")]
    pub upto: usize,
    pub violations: Vec<LemmaViolation>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Builds the exact reach table up to `K >= n` and checks the structural
/// properties listed on [`ReachTable::lemma_violations`].
pub fn check_lemmas(spec: &ChainSpec, upto: usize) -> Result<LemmaReport, MarkovError> {
    if upto < spec.n() {
        return Err(MarkovError::HorizonTooShort { upto, n: spec.n() });
    }
    let table = reach_table::<ExactProb>(spec, upto);
    Ok(LemmaReport {
        spec: spec.clone(),
        upto,
        violations: table.lemma_violations(),
    })
}
