//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use num_bigint::BigUint;
use patprob::markov::{chain_prob_table, check_lemmas, compare_chains, ChainSpec};
use patprob::oracle::{
    automaton_counts, counterexample_check, enum_counts, monte_carlo, McConfig, DEFAULT_SEED,
};
use patprob::patterns::{
    bifix_indicator, census, k0_of_pair, separation_index, DEFAULT_CENSUS_CAP,
};
use patprob::recursions::{
    cumulative_table, expected_wait_closed, expected_wait_series, p_table_long, p_table_short,
};
use patprob::{Alphabet, BifixIndicator, EnumBudget, ExactProb, ExactTable, SWord, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SERIES_TOL: f64 = 1e-10;
const SERIES_AGREEMENT: f64 = 1e-9;
const MC_TRIALS: u64 = 100_000;
const MC_SIGMAS: f64 = 4.0;
const MC_MEAN_TOL: f64 = 0.1;
const CHAIN_HORIZON: usize = 30;
const RANDOM_STRICT_PAIRS: usize = 240;
const LEMMA_K: usize = 30;

type Outcome = Result<String, String>;

/// Chains built anywhere in the run, for the lemma criterion.
#[derive(Default)]
struct Chains(BTreeSet<(Vec<usize>, u32)>);

impl Chains {
    fn record(&mut self, spec: &ChainSpec) {
        self.0
            .insert((spec.s().targets().to_vec(), spec.alphabet().size()));
    }
}

fn alphabet(l: u32) -> Alphabet {
    Alphabet::new(l).unwrap()
}

fn all_words(n: usize, l: u32) -> Vec<Word> {
    let total = (l as usize).pow(n as u32);
    (0..total)
        .map(|mut idx| {
            let mut symbols = vec![0u32; n];
            for d in symbols.iter_mut().rev() {
                *d = (idx % l as usize) as u32;
                idx /= l as usize;
            }
            Word::new(symbols, alphabet(l)).unwrap()
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let cases = [
        ("10000", "0000"),
        ("10001", "1000"),
        ("10010", "0100"),
        ("11011", "1100"),
    ];
    for (w, expected) in cases {
        let h = bifix_indicator(&Word::parse(w, Alphabet::BINARY).unwrap()).unwrap();
        if h.to_string() != expected {
            return Err(format!("{w} -> {h}, expected {expected}"));
        }
    }
    Ok("4/4 indicators reproduce".into())
}

fn all_routes_agree(b: &Word, upto: usize, chains: &mut Chains) -> Result<(), String> {
    let l = b.alphabet();
    let h = bifix_indicator(b).unwrap();
    let long: ExactTable = p_table_long(&h, l, upto);
    let tables: Vec<ExactTable> = vec![
        p_table_short(&h, l, upto),
        cumulative_table(&h, l, upto),
        chain_prob_table(&h, l, upto),
        enum_counts(b, upto, EnumBudget::default()).unwrap().table(),
        automaton_counts(b, upto).unwrap().table(),
    ];
    chains.record(&ChainSpec::for_indicator(&h, l));
    for t in &tables {
        if !long.same_values(t) {
            let k = (0..=upto).find(|&k| long.cum(k) != t.cum(k)).unwrap_or(0);
            return Err(format!(
                "b={b} L={l}: {} differs from long recursion at k={k} ({} vs {})",
                t.method().name(),
                t.cum(k),
                long.cum(k)
            ));
        }
    }
    Ok(())
}

fn criterion_2(chains: &mut Chains) -> Outcome {
    let mut checked = 0;
    for n in 2..=5 {
        for b in all_words(n, 2) {
            all_routes_agree(&b, 14, chains)?;
            checked += 1;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..50 {
        let n = rng.gen_range(2..=4);
        let symbols = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let b = Word::new(symbols, alphabet(3)).unwrap();
        all_routes_agree(&b, 9, chains)?;
        checked += 1;
    }
    Ok(format!(
        "{checked} patterns, 6 routes each, exact equality (binary k<=14, ternary k<=9)"
    ))
}

/// Violations of "equal below k0, strictly greater from k0 to 3n" over all
/// strictly ordered census pairs at `n <= 6`, `L = 2`.
fn indicator_threshold_sweep(
    threshold: impl Fn(&BifixIndicator, &BifixIndicator) -> usize,
) -> (usize, Vec<String>) {
    let mut pairs = 0;
    let mut violations = Vec::new();
    for n in 2..=6 {
        let c = census(
            n,
            Alphabet::BINARY,
            EnumBudget::default(),
            DEFAULT_CENSUS_CAP,
        )
        .unwrap();
        let upto = 3 * n;
        for (h, h2) in c.strict_pairs() {
            pairs += 1;
            let k0 = threshold(h, h2);
            let a: ExactTable = cumulative_table(h, Alphabet::BINARY, upto);
            let b: ExactTable = cumulative_table(h2, Alphabet::BINARY, upto);
            for k in 0..=upto {
                let ok = if k < k0 {
                    a.cum(k) == b.cum(k)
                } else {
                    a.cum(k) > b.cum(k)
                };
                if !ok {
                    violations.push(format!(
                        "h={h} h'={h2} k0={k0} k={k}: {} vs {}",
                        a.cum(k),
                        b.cum(k)
                    ));
                }
            }
        }
    }
    (pairs, violations)
}

fn criterion_3() -> Outcome {
    let (pairs, violations) = indicator_threshold_sweep(|h, h2| k0_of_pair(h, h2).unwrap());
    if violations.is_empty() {
        Ok(format!("{pairs} ordered class pairs, zero violations"))
    } else {
        Err(format!(
            "{pairs} ordered class pairs, {} violations with k0 = n + min{{i: h_i=0, h'_i=1}}; first: {}",
            violations.len(),
            violations[0]
        ))
    }
}

fn criterion_3_separation_index() -> Outcome {
    let (pairs, violations) = indicator_threshold_sweep(|h, h2| separation_index(h, h2).unwrap());
    if violations.is_empty() {
        Ok(format!(
            "{pairs} ordered class pairs, zero violations with k0 = 2n - max{{i: h_i=0, h'_i=1}}"
        ))
    } else {
        Err(format!(
            "{} violations; first: {}",
            violations.len(),
            violations[0]
        ))
    }
}

fn random_strict_pair(rng: &mut ChaCha8Rng, n: usize) -> (SWord, SWord) {
    loop {
        let s: Vec<usize> = (0..n).map(|i| rng.gen_range(0..=i)).collect();
        let s2: Vec<usize> = s.iter().map(|&x| rng.gen_range(0..=x)).collect();
        if s != s2 {
            return (SWord::new(s).unwrap(), SWord::new(s2).unwrap());
        }
    }
}

fn criterion_4(chains: &mut Chains) -> Outcome {
    let mut check = |s: &SWord, s2: &SWord, l: u32| -> Result<(), String> {
        let report =
            compare_chains(s, s2, alphabet(l), CHAIN_HORIZON).map_err(|e| e.to_string())?;
        chains.record(&ChainSpec::new(s.clone(), alphabet(l)));
        chains.record(&ChainSpec::new(s2.clone(), alphabet(l)));
        match report.violations.first() {
            None => Ok(()),
            Some(v) => Err(format!(
                "s={s} s'={s2} L={l} k0={} first violation at k={}",
                report.k0, v.k
            )),
        }
    };
    let mut exhaustive = 0;
    for n in 1..=4 {
        let all = SWord::all(n);
        for s in &all {
            for s2 in &all {
                if s.compare(s2).unwrap() == patprob::Comparison::Greater {
                    for l in [2, 3] {
                        check(s, s2, l)?;
                        exhaustive += 1;
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for j in 0..RANDOM_STRICT_PAIRS {
        let n = 5 + j % 3;
        let l = 2 + (j / 3 % 2) as u32;
        let (s, s2) = random_strict_pair(&mut rng, n);
        check(&s, &s2, l)?;
    }
    Ok(format!(
        "{exhaustive} exhaustive pairs (n<=4) + {RANDOM_STRICT_PAIRS} random pairs (n=5..7), L in {{2,3}}, K={CHAIN_HORIZON}, zero violations"
    ))
}

fn criterion_5(chains: &Chains) -> Outcome {
    for (s, l) in &chains.0 {
        let spec = ChainSpec::new(SWord::new(s.clone()).unwrap(), alphabet(*l));
        let report = check_lemmas(&spec, LEMMA_K.max(spec.n())).map_err(|e| e.to_string())?;
        if let Some(v) = report.violations.first() {
            return Err(format!(
                "s={} L={l}: {:?} at k={} i={} ({})",
                spec.s(),
                v.lemma,
                v.k,
                v.i,
                v.detail
            ));
        }
    }
    Ok(format!(
        "{} distinct chains, K={LEMMA_K}, all three properties hold",
        chains.0.len()
    ))
}

fn criterion_6() -> Outcome {
    let mut classes = 0;
    let mut worst: f64 = 0.0;
    for l in [2, 3] {
        for n in 2..=5 {
            let c = census(n, alphabet(l), EnumBudget::default(), 1).unwrap();
            for h in c.indicators() {
                let est = expected_wait_series::<ExactProb>(h, alphabet(l), SERIES_TOL, 1_000_000);
                let closed = expected_wait_closed(h, alphabet(l));
                let closed_f = closed.to_string().parse::<f64>().unwrap();
                let err = (est.value - closed_f).abs();
                if !est.converged || err >= SERIES_AGREEMENT {
                    return Err(format!("h={h} L={l}: series {est:?} vs closed {closed}"));
                }
                worst = worst.max(err);
                classes += 1;
            }
        }
    }
    for (h, l, expected) in [("1", 2, 6u32), ("0", 2, 4), ("1100", 2, 38)] {
        let h: BifixIndicator = h.parse().unwrap();
        if expected_wait_closed(&h, alphabet(l)) != BigUint::from(expected) {
            return Err(format!("closed form for h={h} is not {expected}"));
        }
        let est = expected_wait_series::<ExactProb>(&h, alphabet(l), SERIES_TOL, 1_000_000);
        if (est.value - f64::from(expected)).abs() >= SERIES_AGREEMENT {
            return Err(format!("series for h={h} gave {}", est.value));
        }
    }
    Ok(format!(
        "{classes} classes, max |series - closed| = {worst:.2e}; spot values 6, 4, 38"
    ))
}

fn criterion_7() -> Outcome {
    let report = counterexample_check();
    let counts: Vec<BigUint> = report
        .probabilities
        .iter()
        .map(|p| p.numerator() << (12 - p.den_exp()))
        .collect();
    let golden = [1000u32, 968, 924, 894].map(BigUint::from).to_vec();
    if counts != golden {
        return Err(format!(
            "P_12 counts {counts:?} differ from goldens {golden:?}"
        ));
    }
    for (w, p) in report.words.iter().zip(&report.probabilities) {
        if &enum_counts(w, 12, EnumBudget::default())
            .unwrap()
            .probability()
            != p
        {
            return Err(format!("enumeration disagrees for {w}"));
        }
    }
    if !report.holds() {
        return Err(format!("{report:?}"));
    }
    Ok(format!(
        "h1+h4 = h2+h3, P1+P4 = {} != {} = P2+P3",
        report.lhs, report.rhs
    ))
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut mean = f64::NAN;
    for w in ["11", "10"] {
        let b = Word::parse(w, Alphabet::BINARY).unwrap();
        let h = bifix_indicator(&b).unwrap();
        let exact: ExactTable = cumulative_table(&h, Alphabet::BINARY, 20);
        let report = monte_carlo(&b, McConfig::new(MC_TRIALS, 200, DEFAULT_SEED).unwrap());
        for k in 0..=20 {
            let p = exact.cum(k).to_f64();
            if !report.within_band(k, p, MC_SIGMAS) {
                return Err(format!(
                    "b={w} k={k}: p_hat={} exact={p} stderr={}",
                    report.p_hat[k], report.stderr[k]
                ));
            }
            if report.stderr[k] > 0.0 {
                worst = worst.max((report.p_hat[k] - p).abs() / report.stderr[k]);
            }
        }
        if w == "11" {
            mean = report.mean_censored_wait;
            if (mean - 6.0).abs() >= MC_MEAN_TOL {
                return Err(format!("mean wait {mean} not within {MC_MEAN_TOL} of 6"));
            }
        }
    }
    Ok(format!(
        "seed {DEFAULT_SEED}, {MC_TRIALS} trials, max deviation {worst:.2} stderr, mean wait(11) = {mean:.4}"
    ))
}

fn main() -> ExitCode {
    let mut chains = Chains::default();
    let mut failed = 0;
    let mut report = |id: &str, title: &str, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {id} {title}: {detail} ({secs:.2}s)"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {id} {title}: {detail} ({secs:.2}s)");
            }
        }
    };
    report(
        "1",
        "bifix indicators of the example words",
        &mut criterion_1,
    );
    report(
        "2",
        "recursions, chain and oracles agree exactly",
        &mut || criterion_2(&mut chains),
    );
    report(
        "3",
        "ordered classes separate at k0 (n + min index formula)",
        &mut criterion_3,
    );
    report(
        "3*",
        "ordered classes separate at k0 (2n - max index), supplementary",
        &mut criterion_3_separation_index,
    );
    report(
        "4",
        "chain comparison over general jump-target words",
        &mut || criterion_4(&mut chains),
    );
    report("5", "reach-table lemmas on every chain built", &mut || {
        criterion_5(&chains)
    });
    report(
        "6",
        "expected waiting time, series vs closed form",
        &mut criterion_6,
    );
    report("7", "non-affine counterexample at k = 12", &mut criterion_7);
    report("8", "Monte Carlo calibration", &mut criterion_8);
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criterion line(s) failed");
        ExitCode::FAILURE
    }
}
