//! Words, bifix indicators, jump-target words and bifix-class census.
//!
//! Storage is 0-based. Everything that faces the user (text formats, JSON,
//! the `get` accessors on [`BifixIndicator`]) uses 1-based bifix lengths
//! `h_1 .. h_{n-1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::numerics::{Alphabet, NumericsError};

/// Default cap on the number of words an exhaustive enumeration may visit.
pub const DEFAULT_ENUM_BUDGET: u64 = 1 << 24;

/// Environment variable overriding [`DEFAULT_ENUM_BUDGET`].
pub const ENUM_BUDGET_ENV: &str = "PATPROB_ENUM_BUDGET";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("search patterns need length at least 2, got {0}")]
    ShortPattern(usize),
    #[error("symbol {symbol} is outside the alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u32, alphabet: u32 },
    #[error("alphabet sizes differ: {0} vs {1}")]
    AlphabetMismatch(u32, u32),
    #[error("cannot parse {what} from {text:?}")]
    Parse { what: &'static str, text: String },
    #[error("lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("pair is not strictly ordered (verdict: {0})")]
    NotStrictlyOrdered(Comparison),
    #[error("jump target s_{index} = {value} exceeds {index}")]
    InvalidSWord { index: usize, value: usize },
    #[error("jump-target word must be nonempty")]
    EmptySWord,
    #[error("enumerating {alphabet}^{len} words exceeds the budget of {budget} words")]
    BudgetExceeded {
        alphabet: u32,
        len: usize,
        budget: u64,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Upper bound on the number of words an exhaustive enumeration may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumBudget(pub u64);

impl Default for EnumBudget {
    fn default() -> Self {
        EnumBudget(DEFAULT_ENUM_BUDGET)
    }
}

impl EnumBudget {
    /// Reads `PATPROB_ENUM_BUDGET`, falling back to the default when unset or unparsable.
    pub fn from_env() -> Self {
        std::env::var(ENUM_BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .map(EnumBudget)
            .unwrap_or_default()
    }

    /// Number of words of length `len`, if it fits in the budget.
    pub fn admit(self, alphabet: Alphabet, len: usize) -> Result<u64, PatternError> {
        let exceeded = PatternError::BudgetExceeded {
            alphabet: alphabet.size(),
            len,
            budget: self.0,
        };
        let total = u32::try_from(len)
            .ok()
            .and_then(|len| u64::from(alphabet.size()).checked_pow(len))
            .ok_or_else(|| exceeded.clone())?;
        if total > self.0 {
            return Err(exceeded);
        }
        Ok(total)
    }
}

/// A finite word over `{0, .., L-1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<u32>,
    alphabet: Alphabet,
}

impl Word {
    pub fn new(symbols: Vec<u32>, alphabet: Alphabet) -> Result<Self, PatternError> {
        if let Some(&symbol) = symbols.iter().find(|&&c| c >= alphabet.size()) {
            return Err(PatternError::SymbolOutOfRange {
                symbol,
                alphabet: alphabet.size(),
            });
        }
        Ok(Word { symbols, alphabet })
    }

    /// A search pattern: a word of length at least 2.
    pub fn pattern(symbols: Vec<u32>, alphabet: Alphabet) -> Result<Self, PatternError> {
        if symbols.len() < 2 {
            return Err(PatternError::ShortPattern(symbols.len()));
        }
        Word::new(symbols, alphabet)
    }

    /// Parses the text format: a digit string such as `10011` when `L <= 10`,
    /// or comma-separated integers such as `0,1,12,3`.
    pub fn parse(text: &str, alphabet: Alphabet) -> Result<Self, PatternError> {
        let text = text.trim();
        let err = || PatternError::Parse {
            what: "word",
            text: text.to_string(),
        };
        let symbols: Vec<u32> = if text.contains(',') || alphabet.size() > 10 {
            text.split(',')
                .map(|t| t.trim().parse::<u32>().map_err(|_| err()))
                .collect::<Result<_, _>>()?
        } else {
            text.chars()
                .map(|c| c.to_digit(10).ok_or_else(err))
                .collect::<Result<_, _>>()?
        };
        if symbols.is_empty() {
            return Err(err());
        }
        Word::new(symbols, alphabet)
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alphabet.size() <= 10 {
            for c in &self.symbols {
                write!(f, "{c}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.symbols.iter().map(u32::to_string).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Verdict of the componentwise partial order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Comparison {
    Equal,
    Less,
    Greater,
    Incomparable,
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparison::Equal => "equal",
            Comparison::Less => "less",
            Comparison::Greater => "greater",
            Comparison::Incomparable => "incomparable",
        })
    }
}

fn componentwise<T: Ord>(a: &[T], b: &[T]) -> Result<Comparison, PatternError> {
    if a.len() != b.len() {
        return Err(PatternError::LengthMismatch(a.len(), b.len()));
    }
    let some_less = a.iter().zip(b).any(|(x, y)| x < y);
    let some_greater = a.iter().zip(b).any(|(x, y)| x > y);
    Ok(match (some_less, some_greater) {
        (false, false) => Comparison::Equal,
        (true, false) => Comparison::Less,
        (false, true) => Comparison::Greater,
        (true, true) => Comparison::Incomparable,
    })
}

/// Binary word `h = (h_1, .., h_{n-1})` with `h_i = 1` iff the length-`i`
/// prefix of the pattern equals its length-`i` suffix.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BifixIndicator {
    bits: Vec<bool>,
}

impl BifixIndicator {
    pub fn new(bits: Vec<bool>) -> Result<Self, PatternError> {
        if bits.is_empty() {
            return Err(PatternError::ShortPattern(1));
        }
        Ok(BifixIndicator { bits })
    }

    /// Length `n` of the patterns this indicator describes.
    pub fn pattern_length(&self) -> usize {
        self.bits.len() + 1
    }

    /// `h_i` for `1 <= i <= n-1`.
    pub fn get(&self, i: usize) -> bool {
        self.bits[i - 1]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// 1-based indices `i` with `h_i = 1`.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i + 1)
    }

    /// Every binary word of length `n-1`, realizable or not.
    pub fn all(n: usize) -> impl Iterator<Item = BifixIndicator> {
        assert!(n >= 2);
        (0u64..1 << (n - 1)).map(move |mask| BifixIndicator {
            bits: (0..n - 1).map(|i| mask >> (n - 2 - i) & 1 == 1).collect(),
        })
    }
}

impl FromStr for BifixIndicator {
    type Err = PatternError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        let bits = text
            .chars()
            .filter(|&c| c != ',')
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(PatternError::Parse {
                    what: "bifix indicator",
                    text: text.to_string(),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        BifixIndicator::new(bits)
    }
}

impl fmt::Display for BifixIndicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl Serialize for BifixIndicator {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Jump-target word `s = (s_0, .., s_{n-1})` with `0 <= s_i <= i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct SWord {
    targets: Vec<usize>,
}

impl SWord {
    pub fn new(targets: Vec<usize>) -> Result<Self, PatternError> {
        if targets.is_empty() {
            return Err(PatternError::EmptySWord);
        }
        if let Some((index, &value)) = targets.iter().enumerate().find(|(i, &s)| s > *i) {
            return Err(PatternError::InvalidSWord { index, value });
        }
        Ok(SWord { targets })
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// Number of transient states `n`.
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.targets[i]
    }

    pub fn compare(&self, other: &SWord) -> Result<Comparison, PatternError> {
        componentwise(&self.targets, &other.targets)
    }

    /// All `n!` valid jump-target words of length `n`, in lexicographic order.
    pub fn all(n: usize) -> Vec<SWord> {
        let mut out = vec![Vec::with_capacity(n)];
        for i in 0..n {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<usize>| {
                    (0..=i).map(move |s| {
                        let mut next = prefix.clone();
                        next.push(s);
                        next
                    })
                })
                .collect();
        }
        out.into_iter().map(|targets| SWord { targets }).collect()
    }
}

impl FromStr for SWord {
    type Err = PatternError;

    /// Accepts `0,1,1`, `(0,1,1)` or, for single-digit entries, `011`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let inner = text.trim().trim_start_matches('(').trim_end_matches(')');
        let err = || PatternError::Parse {
            what: "jump-target word",
            text: text.to_string(),
        };
        let targets: Vec<usize> = if inner.contains(',') {
            inner
                .split(',')
                .map(|t| t.trim().parse().map_err(|_| err()))
                .collect::<Result<_, _>>()?
        } else {
            inner
                .chars()
                .map(|c| c.to_digit(10).map(|d| d as usize).ok_or_else(err))
                .collect::<Result<_, _>>()?
        };
        SWord::new(targets)
    }
}

impl fmt::Display for SWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.targets.iter().map(usize::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// KMP failure function: `fail[q]` is the length of the longest proper
/// border of `pattern[..q]`, for `0 <= q <= len`.
pub fn failure_function(pattern: &[u32]) -> Vec<usize> {
    let mut fail = vec![0; pattern.len() + 1];
    let mut q = 0;
    for i in 1..pattern.len() {
        while q > 0 && pattern[q] != pattern[i] {
            q = fail[q];
        }
        if pattern[q] == pattern[i] {
            q += 1;
        }
        fail[i + 1] = q;
    }
    fail
}

/// Bifix indicator of a pattern, read off the border chain of the whole word.
pub fn bifix_indicator(b: &Word) -> Result<BifixIndicator, PatternError> {
    let n = b.len();
    if n < 2 {
        return Err(PatternError::ShortPattern(n));
    }
    let fail = failure_function(b.symbols());
    let mut bits = vec![false; n - 1];
    let mut border = fail[n];
    while border > 0 {
        bits[border - 1] = true;
        border = fail[border];
    }
    Ok(BifixIndicator { bits })
}

pub fn compare_indicators(
    h: &BifixIndicator,
    h2: &BifixIndicator,
) -> Result<Comparison, PatternError> {
    componentwise(&h.bits, &h2.bits)
}

fn new_bifix_indices<'a>(
    h: &'a BifixIndicator,
    h2: &'a BifixIndicator,
) -> Result<impl Iterator<Item = usize> + 'a, PatternError> {
    match compare_indicators(h, h2)? {
        Comparison::Less => Ok((1..h.pattern_length()).filter(|&i| !h.get(i) && h2.get(i))),
        other => Err(PatternError::NotStrictlyOrdered(other)),
    }
}

/// `n + min{ i : h_i = 0, h'_i = 1 }` for `h < h'`.
///
/// The tables themselves first separate later than this whenever the
/// smallest new bifix is not also the largest one; see [`separation_index`].
pub fn k0_of_pair(h: &BifixIndicator, h2: &BifixIndicator) -> Result<usize, PatternError> {
    let first = new_bifix_indices(h, h2)?
        .min()
        .expect("strict order has a differing index");
    Ok(h.pattern_length() + first)
}

/// First `k` at which `P_k(h) > P_k(h')` for `h < h'`:
/// `2n - max{ i : h_i = 0, h'_i = 1 }`.
///
/// A new bifix of length `i` is a self-overlap at shift `n - i`, which first
/// fits in words of length `2n - i`. This equals the chain threshold
/// `n + 1 + min{ j - s_j : s_j > s'_j }` for `s = s_from_h(h)`, `s' = s_from_h(h')`.
pub fn separation_index(h: &BifixIndicator, h2: &BifixIndicator) -> Result<usize, PatternError> {
    let last = new_bifix_indices(h, h2)?
        .max()
        .expect("strict order has a differing index");
    Ok(2 * h.pattern_length() - last)
}

/// `s = (0, 1 - h_{n-1}, 1 - h_{n-2}, .., 1 - h_1)`.
pub fn s_from_h(h: &BifixIndicator) -> SWord {
    let n = h.pattern_length();
    let targets = std::iter::once(0)
        .chain((1..n).map(|i| usize::from(!h.get(n - i))))
        .collect();
    SWord { targets }
}

/// Calls `f` on every word of length `len` with lexicographic index in
/// `start..start + count`, treating words as base-`L` counters.
pub(crate) fn for_each_word(
    len: usize,
    alphabet: Alphabet,
    start: u64,
    count: u64,
    mut f: impl FnMut(&[u32]),
) {
    let l = alphabet.size();
    let mut digits = vec![0u32; len];
    let mut rest = start;
    for d in digits.iter_mut().rev() {
        *d = (rest % u64::from(l)) as u32;
        rest /= u64::from(l);
    }
    for _ in 0..count {
        f(&digits);
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < l {
                break;
            }
            *d = 0;
        }
    }
}

/// Splits `0..total` into contiguous chunks for parallel enumeration.
pub(crate) fn enumeration_chunks(total: u64) -> Vec<(u64, u64)> {
    const CHUNK: u64 = 1 << 14;
    (0..total.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, CHUNK.min(total - c * CHUNK)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CensusClass {
    pub h: BifixIndicator,
    /// Exact number of words in the class.
    pub count: u64,
    /// The lexicographically first words of the class, at most `cap` of them.
    pub representatives: Vec<Word>,
}

/// Partition of all words of length `n` by bifix indicator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Census {
    pub n: usize,
    #[serde(rename = "L")]
    pub alphabet: Alphabet,
    pub classes: Vec<CensusClass>,
}

impl Census {
    pub fn class(&self, h: &BifixIndicator) -> Option<&CensusClass> {
        self.classes.iter().find(|c| &c.h == h)
    }

    pub fn indicators(&self) -> impl Iterator<Item = &BifixIndicator> {
        self.classes.iter().map(|c| &c.h)
    }

    /// All pairs `(h, h')` of realizable indicators with `h < h'`.
    pub fn strict_pairs(&self) -> Vec<(&BifixIndicator, &BifixIndicator)> {
        let mut pairs = Vec::new();
        for a in self.indicators() {
            for b in self.indicators() {
                if compare_indicators(a, b) == Ok(Comparison::Less) {
                    pairs.push((a, b));
                }
            }
        }
        pairs
    }
}

/// Default number of representatives kept per census class.
pub const DEFAULT_CENSUS_CAP: usize = 4;

/// Enumerates every word of length `n` over `L` symbols and groups them by
/// bifix indicator. Classes come out sorted by indicator.
pub fn census(
    n: usize,
    alphabet: Alphabet,
    budget: EnumBudget,
    cap: usize,
) -> Result<Census, PatternError> {
    if n < 2 {
        return Err(PatternError::ShortPattern(n));
    }
    let total = budget.admit(alphabet, n)?;
    type Partial = BTreeMap<BifixIndicator, (u64, Vec<Word>)>;
    let partials: Vec<Partial> = enumeration_chunks(total)
        .into_par_iter()
        .map(|(start, count)| {
            let mut local = Partial::new();
            for_each_word(n, alphabet, start, count, |symbols| {
                let word = Word {
                    symbols: symbols.to_vec(),
                    alphabet,
                };
                let h = bifix_indicator(&word).expect("n >= 2");
                let entry = local.entry(h).or_default();
                entry.0 += 1;
                if entry.1.len() < cap {
                    entry.1.push(word);
                }
            });
            local
        })
        .collect();

    let mut merged = Partial::new();
    for partial in partials {
        for (h, (count, reps)) in partial {
            let entry = merged.entry(h).or_default();
            entry.0 += count;
            let room = cap - entry.1.len();
            entry.1.extend(reps.into_iter().take(room));
        }
    }
    Ok(Census {
        n,
        alphabet,
        classes: merged
            .into_iter()
            .map(|(h, (count, representatives))| CensusClass {
                h,
                count,
                representatives,
            })
            .collect(),
    })
}
