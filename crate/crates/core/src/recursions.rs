//! First-occurrence probabilities `p_k` and occurrence probabilities `P_k`
//! computed from the bifix indicator alone.
//!
//! Three routes are provided: the long recursion on `p_k` (one term per
//! earlier occurrence), the `n+1`-term short recursion obtained from it by
//! differencing, and the recursion on `P_k` obtained by summing that.

use std::collections::VecDeque;

use num_bigint::BigUint;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::numerics::{Alphabet, ProbScalar};
use crate::patterns::BifixIndicator;

/// Which computation produced a [`ProbTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LongRecursion,
    ShortRecursion,
    PRecursion,
    Markov,
    Enumeration,
    Automaton,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::LongRecursion => "long-recursion",
            Method::ShortRecursion => "short-recursion",
            Method::PRecursion => "p-recursion",
            Method::Markov => "markov",
            Method::Enumeration => "enumeration",
            Method::Automaton => "automaton",
        }
    }
}

/// `p_k` and `P_k` for `0 <= k <= K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable<S> {
    h: BifixIndicator,
    alphabet: Alphabet,
    method: Method,
    first: Vec<S>,
    cumulative: Vec<S>,
}

impl<S: ProbScalar> ProbTable<S> {
    /// Builds the table from `p_0..=p_K`; `P` is filled by prefix sums.
    pub fn from_first(
        h: BifixIndicator,
        alphabet: Alphabet,
        method: Method,
        first: Vec<S>,
    ) -> Self {
        let mut acc = S::zero(alphabet);
        let cumulative = first
            .iter()
            .map(|p| {
                acc = acc.plus(p);
                acc.clone()
            })
            .collect();
        ProbTable {
            h,
            alphabet,
            method,
            first,
            cumulative,
        }
    }

    /// Builds the table from `P_0..=P_K`; `p` is recovered as first differences.
    ///
    /// # Panics
    /// If the exact sequence decreases somewhere.
    pub fn from_cumulative(
        h: BifixIndicator,
        alphabet: Alphabet,
        method: Method,
        cumulative: Vec<S>,
    ) -> Self {
        let first = cumulative
            .iter()
            .enumerate()
            .map(|(k, pk)| match k {
                0 => pk.clone(),
                _ => pk
                    .minus(&cumulative[k - 1])
                    .unwrap_or_else(|| panic!("{}: P_{k} < P_{} for h={h}", method.name(), k - 1)),
            })
            .collect();
        ProbTable {
            h,
            alphabet,
            method,
            first,
            cumulative,
        }
    }

    pub fn h(&self) -> &BifixIndicator {
        &self.h
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Largest `k` in the table.
    pub fn upto(&self) -> usize {
        self.first.len() - 1
    }

    /// `p_k`: probability that the first occurrence ends at position `k`.
    pub fn p(&self, k: usize) -> &S {
        &self.first[k]
    }

    /// `P_k`: probability of at least one occurrence in a word of length `k`.
    pub fn cum(&self, k: usize) -> &S {
        &self.cumulative[k]
    }

    pub fn first_values(&self) -> &[S] {
        &self.first
    }

    pub fn cumulative_values(&self) -> &[S] {
        &self.cumulative
    }

    /// Entrywise equality of the numbers, ignoring the method tag.
    pub fn same_values(&self, other: &Self) -> bool {
        self.h == other.h
            && self.alphabet == other.alphabet
            && self.first == other.first
            && self.cumulative == other.cumulative
    }
}

#[derive(Serialize)]
struct Row<'a, S> {
    k: usize,
    p: &'a S,
    #[serde(rename = "P")]
    cum: &'a S,
}

impl<S: ProbScalar + Serialize> Serialize for ProbTable<S> {
    fn serialize<Ser: Serializer>(&self, serializer: Ser) -> Result<Ser::Ok, Ser::Error> {
        let rows: Vec<Row<'_, S>> = (0..=self.upto())
            .map(|k| Row {
                k,
                p: &self.first[k],
                cum: &self.cumulative[k],
            })
            .collect();
        let mut st = serializer.serialize_struct("ProbTable", 5)?;
        st.serialize_field("h", &self.h)?;
        st.serialize_field("L", &self.alphabet)?;
        st.serialize_field("n", &self.h.pattern_length())?;
        st.serialize_field("method", &self.method)?;
        st.serialize_field("rows", &rows)?;
        st.end()
    }
}

/// Shared constants: `1/L^n` and the weights `1/L^{n-i}` for each `h_i = 1`.
struct Coefficients<S> {
    n: usize,
    inv_ln: S,
    weights: Vec<(usize, S)>,
}

impl<S: ProbScalar> Coefficients<S> {
    fn new(h: &BifixIndicator, alphabet: Alphabet) -> Self {
        let n = h.pattern_length();
        Coefficients {
            n,
            inv_ln: S::ratio_pow(1, alphabet, n as u32),
            weights: h
                .ones()
                .map(|i| (i, S::ratio_pow(1, alphabet, (n - i) as u32)))
                .collect(),
        }
    }
}

fn subtract_or_abort<S: ProbScalar>(
    plus: &S,
    minus: &S,
    what: &str,
    k: usize,
    h: &BifixIndicator,
) -> S {
    plus.minus(minus)
        .unwrap_or_else(|| panic!("{what}: negative value at k={k} for h={h}"))
}

/// `p_k` by the long recursion
/// `p_k = 1/L^n - 1/L^n * sum_{i=n}^{k-n} p_i - sum_{i} h_i p_{k-n+i} / L^{n-i}`.
/// The middle sum is empty while `k < 2n`.
pub fn p_table_long<S: ProbScalar>(
    h: &BifixIndicator,
    alphabet: Alphabet,
    upto: usize,
) -> ProbTable<S> {
    let c = Coefficients::<S>::new(h, alphabet);
    let n = c.n;
    let mut p = vec![S::zero(alphabet); upto + 1];
    let mut earlier = S::zero(alphabet);
    for k in n..=upto {
        if k >= 2 * n {
            earlier = earlier.plus(&p[k - n]);
        }
        let mut sub = c.inv_ln.times(&earlier);
        for (i, w) in &c.weights {
            sub = sub.plus(&w.times(&p[k - n + i]));
        }
        p[k] = subtract_or_abort(&c.inv_ln, &sub, "long recursion", k, h);
    }
    ProbTable::from_first(h.clone(), alphabet, Method::LongRecursion, p)
}

/// `p_k` by the short recursion
/// `p_{k+1} = p_k - p_{k+1-n}/L^n - sum_i h_i (p_{k-n+i+1} - p_{k-n+i}) / L^{n-i}`
/// from `p_n = 1/L^n`.
pub fn p_table_short<S: ProbScalar>(
    h: &BifixIndicator,
    alphabet: Alphabet,
    upto: usize,
) -> ProbTable<S> {
    let c = Coefficients::<S>::new(h, alphabet);
    let n = c.n;
    let mut p = vec![S::zero(alphabet); upto + 1];
    if upto >= n {
        p[n] = c.inv_ln.clone();
    }
    for k in n..upto {
        // the differences may be negative; split into positive and negative parts
        let mut plus = p[k].clone();
        let mut minus = c.inv_ln.times(&p[k + 1 - n]);
        for (i, w) in &c.weights {
            plus = plus.plus(&w.times(&p[k - n + i]));
            minus = minus.plus(&w.times(&p[k - n + i + 1]));
        }
        p[k + 1] = subtract_or_abort(&plus, &minus, "short recursion", k + 1, h);
    }
    ProbTable::from_first(h.clone(), alphabet, Method::ShortRecursion, p)
}

/// The sequence `P_0, P_1, ..` generated by the recursion on `P_k`, holding
/// only the last `n` values.
pub struct CumulativeSeq<S> {
    coeffs: Coefficients<S>,
    h: BifixIndicator,
    zero: S,
    k: usize,
    window: VecDeque<S>,
}

impl<S: ProbScalar> CumulativeSeq<S> {
    pub fn new(h: &BifixIndicator, alphabet: Alphabet) -> Self {
        let coeffs = Coefficients::new(h, alphabet);
        CumulativeSeq {
            window: VecDeque::with_capacity(coeffs.n + 1),
            coeffs,
            h: h.clone(),
            zero: S::zero(alphabet),
            k: 0,
        }
    }
}

impl<S: ProbScalar> Iterator for CumulativeSeq<S> {
    type Item = S;

    fn next(&mut self) -> Option<S> {
        let n = self.coeffs.n;
        let k = self.k;
        let value = if k < n {
            self.zero.clone()
        } else if k == n {
            self.coeffs.inv_ln.clone()
        } else {
            // window holds P_{k-n} ..= P_{k-1}; this is the step from k-1 to k
            let w = &self.window;
            let mut plus = self.coeffs.inv_ln.plus(&w[n - 1]);
            let mut minus = self.coeffs.inv_ln.times(&w[0]);
            for (i, weight) in &self.coeffs.weights {
                plus = plus.plus(&weight.times(&w[i - 1]));
                minus = minus.plus(&weight.times(&w[*i]));
            }
            subtract_or_abort(&plus, &minus, "P recursion", k, &self.h)
        };
        self.window.push_back(value.clone());
        if self.window.len() > n {
            self.window.pop_front();
        }
        self.k += 1;
        Some(value)
    }
}

/// Full table from the recursion on `P_k`; `p_k` recovered as differences.
pub fn cumulative_table<S: ProbScalar>(
    h: &BifixIndicator,
    alphabet: Alphabet,
    upto: usize,
) -> ProbTable<S> {
    let cumulative = CumulativeSeq::new(h, alphabet).take(upto + 1).collect();
    ProbTable::from_cumulative(h.clone(), alphabet, Method::PRecursion, cumulative)
}

/// `P_K` alone, in memory proportional to `n`.
pub fn cumulative_at<S: ProbScalar>(h: &BifixIndicator, alphabet: Alphabet, k: usize) -> S {
    CumulativeSeq::new(h, alphabet)
        .nth(k)
        .expect("sequence is infinite")
}

/// Expected waiting time for the first occurrence: `L^n + sum_i h_i L^i`.
pub fn expected_wait_closed(h: &BifixIndicator, alphabet: Alphabet) -> BigUint {
    h.ones()
        .map(|i| alphabet.pow(i as u32))
        .fold(alphabet.pow(h.pattern_length() as u32), |acc, x| acc + x)
}

/// Partial sum of `sum_k (1 - P_k)` together with its tail estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEstimate {
    /// `sum_{k=0}^{K} (1 - P_k)` rendered as a float.
    pub value: f64,
    /// Geometric estimate of the omitted tail.
    pub tail_bound: f64,
    /// Last index `K` included in the sum.
    pub last_k: usize,
    pub converged: bool,
}

/// Number of consecutive stable ratios required before the geometric tail
/// model is trusted.
pub const STABLE_RATIOS: usize = 5;

/// Evaluates the expected waiting time as `sum_{k>=0} (1 - P_k)`.
///
/// Terms are summed exactly in `S`. Once the ratio `r = (1-P_K)/(1-P_{K-1})`
/// is below 1 and has been stable for [`STABLE_RATIOS`] steps, the tail is
/// estimated as `(1-P_K) r / (1-r)`. The sum stops at the first `K` where
/// that estimate drops below `tol`. If `k_max` comes first, the result is
/// flagged as unconverged. In floating point `1 - P_K` loses precision as
/// `P_K -> 1`, so a small `tol` may only be reachable with an exact `S`.
pub fn expected_wait_series<S: ProbScalar>(
    h: &BifixIndicator,
    alphabet: Alphabet,
    tol: f64,
    k_max: usize,
) -> SeriesEstimate {
    assert!(tol > 0.0, "tolerance must be positive");
    let one = S::one(alphabet);
    let mut sum = S::zero(alphabet);
    let mut prev_term: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut stable = 0usize;
    let mut tail_bound = f64::INFINITY;
    let mut last_k = 0;
    for (k, cum) in CumulativeSeq::<S>::new(h, alphabet)
        .take(k_max + 1)
        .enumerate()
    {
        let term = subtract_or_abort(&one, &cum, "series", k, h);
        sum = sum.plus(&term);
        last_k = k;
        let t = term.approx();
        if let Some(prev) = prev_term.filter(|&p| p > 0.0) {
            let r = t / prev;
            let steady = prev_ratio.is_some_and(|pr| (r - pr).abs() <= 1e-6 * (1.0 - r));
            stable = if r < 1.0 && steady { stable + 1 } else { 0 };
            prev_ratio = Some(r);
            if stable >= STABLE_RATIOS {
                tail_bound = t * r / (1.0 - r);
                if tail_bound < tol {
                    return SeriesEstimate {
                        value: sum.approx(),
                        tail_bound,
                        last_k,
                        converged: true,
                    };
                }
            }
        }
        prev_term = Some(t);
    }
    SeriesEstimate {
        value: sum.approx(),
        tail_bound,
        last_k,
        converged: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ExactProb;

    fn ind(text: &str) -> BifixIndicator {
        text.parse().unwrap()
    }

    fn ep(num: u64, e: u32) -> ExactProb {
        ExactProb::new(BigUint::from(num), e, Alphabet::BINARY)
    }

    type Exact = ProbTable<ExactProb>;

    #[test]
    fn long_recursion_small_values() {
        let t: Exact = p_table_long(&ind("1"), Alphabet::BINARY, 3);
        assert_eq!(t.p(2), &ep(1, 2));
        assert_eq!(t.p(3), &ep(1, 3));
        assert_eq!(t.cum(3), &ep(3, 3));
        let t: Exact = p_table_long(&ind("0"), Alphabet::BINARY, 3);
        assert_eq!(t.cum(3), &ep(1, 1));
    }

    #[test]
    fn p_n_is_inverse_power() {
        for (h, l) in [("1", 2), ("0000", 2), ("101", 3), ("00", 5)] {
            let alphabet = Alphabet::new(l).unwrap();
            let h = ind(h);
            let n = h.pattern_length();
            let expected = ExactProb::unit_fraction(alphabet, n as u32);
            let long: Exact = p_table_long(&h, alphabet, n + 2);
            let short: Exact = p_table_short(&h, alphabet, n + 2);
            assert_eq!(long.p(n), &expected);
            assert_eq!(short.p(n), &expected);
            for k in 0..n {
                assert!(long.p(k).is_zero() && long.cum(k).is_zero());
            }
        }
    }

    #[test]
    fn enumeration_goldens_at_twelve() {
        // brute-force counts over all 4096 binary words of length 12
        let t: Exact = p_table_short(&ind("0000"), Alphabet::BINARY, 12);
        assert_eq!(t.cum(12), &ep(1000, 12));
        let t: Exact = p_table_short(&ind("1100"), Alphabet::BINARY, 12);
        assert_eq!(t.cum(12), &ep(894, 12));
    }

    #[test]
    fn cumulative_recursion_values() {
        let t: Exact = cumulative_table(&ind("1"), Alphabet::BINARY, 3);
        assert_eq!(t.cum(2), &ep(1, 2));
        assert_eq!(t.cum(3), &ep(3, 3));
        let t: Exact = cumulative_table(&ind("1"), Alphabet::BINARY, 1);
        assert!(t.cumulative_values().iter().all(|v| v.is_zero()));
        assert_eq!(t.method(), Method::PRecursion);
    }

    #[test]
    fn routes_agree_and_windowed_value_matches() {
        for h in [
            "1", "0", "10", "11", "000", "1000", "0100", "1100", "10010", "11111",
        ] {
            let h = ind(h);
            for l in [2, 3, 4] {
                let alphabet = Alphabet::new(l).unwrap();
                let k = 4 * h.pattern_length();
                let long: Exact = p_table_long(&h, alphabet, k);
                let short: Exact = p_table_short(&h, alphabet, k);
                let cum: Exact = cumulative_table(&h, alphabet, k);
                assert!(long.same_values(&short), "{h} L={l}");
                assert!(long.same_values(&cum), "{h} L={l}");
                let single: ExactProb = cumulative_at(&h, alphabet, k);
                assert_eq!(&single, cum.cum(k));
            }
        }
    }

    #[test]
    fn float_tables_track_exact() {
        let h = ind("1001");
        let alphabet = Alphabet::new(3).unwrap();
        let exact: Exact = p_table_short(&h, alphabet, 60);
        let float: ProbTable<f64> = p_table_short(&h, alphabet, 60);
        for k in 0..=60 {
            assert!((exact.cum(k).to_f64() - float.cum(k)).abs() < 1e-13);
        }
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(
            expected_wait_closed(&ind("0000"), Alphabet::BINARY),
            BigUint::from(32u32)
        );
        assert_eq!(
            expected_wait_closed(&ind("1100"), Alphabet::BINARY),
            BigUint::from(38u32)
        );
        assert_eq!(
            expected_wait_closed(&ind("1"), Alphabet::BINARY),
            BigUint::from(6u32)
        );
        assert_eq!(
            expected_wait_closed(&ind("1000"), Alphabet::BINARY),
            BigUint::from(34u32)
        );
        assert_eq!(
            expected_wait_closed(&ind("00"), Alphabet::new(3).unwrap()),
            BigUint::from(27u32)
        );
    }

    #[test]
    fn series_matches_closed_form() {
        for (h, expected) in [("1", 6.0), ("0", 4.0), ("1100", 38.0)] {
            let est = expected_wait_series::<ExactProb>(&ind(h), Alphabet::BINARY, 1e-9, 100_000);
            assert!(est.converged, "{h}: {est:?}");
            assert!((est.value - expected).abs() < 1e-9, "{h}: {est:?}");
            assert!(est.tail_bound < 1e-9);
        }
    }

    #[test]
    fn series_reports_unconverged_when_capped() {
        let est = expected_wait_series::<ExactProb>(&ind("0000"), Alphabet::BINARY, 1e-9, 20);
        assert!(!est.converged);
        assert_eq!(est.last_k, 20);
        assert!(est.value < 32.0);
    }

    #[test]
    fn table_json_schema() {
        let t: Exact = p_table_short(&ind("1"), Alphabet::BINARY, 3);
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["h"], "1");
        assert_eq!(v["L"], 2);
        assert_eq!(v["n"], 2);
        assert_eq!(v["method"], "short-recursion");
        assert_eq!(v["rows"].as_array().unwrap().len(), 4);
        assert_eq!(v["rows"][3]["k"], 3);
        assert_eq!(v["rows"][3]["P"]["num"], "3");
        assert_eq!(v["rows"][3]["P"]["den_exp"], 3);
        assert_eq!(v["rows"][3]["p"]["num"], "1");
    }
}
