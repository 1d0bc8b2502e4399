use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use patprob::markov::{self, ChainSpec};
use patprob::oracle::{self, McConfig, DEFAULT_SEED};
use patprob::patterns::{self, DEFAULT_CENSUS_CAP};
use patprob::recursions::{self, expected_wait_closed, ProbTable};
use patprob::{
    Alphabet, BifixIndicator, Comparison, EnumBudget, ExactProb, ExactTable, SWord, Word,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::render::Rendered;
use crate::Command;

const DEFAULT_DIGITS: usize = 12;

#[derive(Args, Debug, Serialize)]
pub struct BifixArgs {
    /// Pattern, as digits (L <= 10) or comma-separated symbols.
    #[arg(long)]
    pub word: String,
    /// Alphabet size.
    #[arg(long = "L", default_value_t = 2)]
    #[serde(rename = "L")]
    pub l: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum MethodArg {
    #[value(name = "long")]
    #[serde(rename = "long")]
    Long,
    #[value(name = "short")]
    #[serde(rename = "short")]
    Short,
    #[value(name = "P")]
    #[serde(rename = "P")]
    P,
    #[value(name = "markov")]
    #[serde(rename = "markov")]
    Markov,
    #[value(name = "automaton")]
    #[serde(rename = "automaton")]
    Automaton,
    #[value(name = "enumeration")]
    #[serde(rename = "enumeration")]
    Enumeration,
}

#[derive(Args, Debug, Serialize)]
pub struct ProbArgs {
    /// Bifix indicator h_1..h_{n-1} as a bit string.
    #[arg(long, conflicts_with = "word", required_unless_present = "word")]
    pub h: Option<String>,
    /// Pattern word; required for the automaton and enumeration methods.
    #[arg(long)]
    pub word: Option<String>,
    #[arg(long = "L", default_value_t = 2)]
    #[serde(rename = "L")]
    pub l: u32,
    /// Largest word length; defaults to 3n.
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k_max: Option<usize>,
    #[arg(long, value_enum, default_value = "P")]
    pub method: MethodArg,
    /// Run every applicable method and require exact agreement.
    #[arg(long)]
    pub check_all: bool,
    /// Decimal digits in the rendered approximations.
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    pub digits: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CompareArgs {
    #[arg(long, requires = "h2", conflicts_with_all = ["s", "s2"])]
    pub h: Option<String>,
    #[arg(long, requires = "h")]
    pub h2: Option<String>,
    /// Jump-target word, e.g. `0,1,1`.
    #[arg(long, requires = "s2", required_unless_present = "h")]
    pub s: Option<String>,
    #[arg(long, requires = "s")]
    pub s2: Option<String>,
    #[arg(long = "L", default_value_t = 2)]
    #[serde(rename = "L")]
    pub l: u32,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k_max: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_DIGITS)]
    pub digits: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct CensusArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "L", default_value_t = 2)]
    #[serde(rename = "L")]
    pub l: u32,
    /// Representatives kept per class.
    #[arg(long, default_value_t = DEFAULT_CENSUS_CAP)]
    pub cap: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub word: String,
    #[arg(long = "L", default_value_t = 2)]
    #[serde(rename = "L")]
    pub l: u32,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Length of each random stream.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Args, Debug, Serialize)]
pub struct LemmasArgs {
    #[arg(long, conflicts_with = "s", required_unless_present = "s")]
    pub h: Option<String>,
    #[arg(long)]
    pub s: Option<String>,
    #[arg(long = "L", default_value_t = 2)]
    #[serde(rename = "L")]
    pub l: u32,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k_max: Option<usize>,
}

pub fn run(command: &Command) -> Result<Rendered> {
    match command {
        Command::Bifix(a) => bifix(a),
        Command::Prob(a) => prob(a),
        Command::Compare(a) => compare(a),
        Command::Census(a) => census(a),
        Command::Counterexample => counterexample(),
        Command::Simulate(a) => simulate(a),
        Command::Lemmas(a) => lemmas(a),
    }
}

fn alphabet(l: u32) -> Result<Alphabet> {
    Alphabet::new(l).map_err(|e| anyhow!("--L {l}: {e}"))
}

fn parse_word(text: &str, l: Alphabet) -> Result<Word> {
    Word::pattern(Word::parse(text, l)?.symbols().to_vec(), l)
        .with_context(|| format!("--word {text}"))
}

fn parse_h(text: &str) -> Result<BifixIndicator> {
    text.parse()
        .with_context(|| format!("bifix indicator {text:?}"))
}

fn parse_s(text: &str) -> Result<SWord> {
    text.parse()
        .with_context(|| format!("jump-target word {text:?}"))
}

fn bifix(a: &BifixArgs) -> Result<Rendered> {
    let l = alphabet(a.l)?;
    let word = parse_word(&a.word, l)?;
    let h = patterns::bifix_indicator(&word)?;
    let s = patterns::s_from_h(&h);
    let wait = expected_wait_closed(&h, l);
    Ok(Rendered {
        result: json!({
            "word": word,
            "L": l,
            "n": word.len(),
            "h": h,
            "s": s,
            "expected_wait": wait.to_string(),
        }),
        header: vec!["word", "L", "n", "h", "s", "expected_wait"],
        rows: vec![vec![
            word.to_string(),
            l.to_string(),
            word.len().to_string(),
            h.to_string(),
            s.to_string(),
            wait.to_string(),
        ]],
        holds: true,
    })
}

fn table_by(
    method: MethodArg,
    h: &BifixIndicator,
    word: Option<&Word>,
    l: Alphabet,
    upto: usize,
) -> Result<ExactTable> {
    let need_word = || word.ok_or_else(|| anyhow!("this method needs --word"));
    Ok(match method {
        MethodArg::Long => recursions::p_table_long(h, l, upto),
        MethodArg::Short => recursions::p_table_short(h, l, upto),
        MethodArg::P => recursions::cumulative_table(h, l, upto),
        MethodArg::Markov => markov::chain_prob_table(h, l, upto),
        MethodArg::Automaton => oracle::automaton_counts(need_word()?, upto)?.table(),
        MethodArg::Enumeration => {
            oracle::enum_counts(need_word()?, upto, EnumBudget::from_env())?.table()
        }
    })
}

fn table_json(t: &ExactTable) -> Value {
    serde_json::to_value(t).expect("tables serialize")
}

fn prob(a: &ProbArgs) -> Result<Rendered> {
    let l = alphabet(a.l)?;
    let word = a.word.as_deref().map(|w| parse_word(w, l)).transpose()?;
    let h = match (&word, &a.h) {
        (Some(w), _) => patterns::bifix_indicator(w)?,
        (None, Some(h)) => parse_h(h)?,
        (None, None) => bail!("one of --h or --word is required"),
    };
    let upto = a.k_max.unwrap_or(3 * h.pattern_length());
    let table = table_by(a.method, &h, word.as_ref(), l, upto)?;

    let mut result = json!({ "table": table_json(&table) });
    let mut holds = true;
    if a.check_all {
        let mut methods = vec![
            MethodArg::Long,
            MethodArg::Short,
            MethodArg::P,
            MethodArg::Markov,
        ];
        if let Some(w) = &word {
            methods.push(MethodArg::Automaton);
            if EnumBudget::from_env().admit(l, upto.max(w.len())).is_ok() {
                methods.push(MethodArg::Enumeration);
            }
        }
        let mut checks = Vec::new();
        for m in methods {
            let other = table_by(m, &h, word.as_ref(), l, upto)?;
            let agree = other.same_values(&table);
            holds &= agree;
            checks.push(json!({ "method": other.method().name(), "agrees": agree }));
        }
        result["check_all"] = json!({ "agree": holds, "methods": checks });
    }

    let rows = (0..=upto)
        .map(|k| {
            let (p, c) = (table.p(k), table.cum(k));
            vec![
                k.to_string(),
                p.numerator().to_string(),
                p.den_exp().to_string(),
                c.numerator().to_string(),
                c.den_exp().to_string(),
                p.to_decimal(a.digits),
                c.to_decimal(a.digits),
            ]
        })
        .collect();
    Ok(Rendered {
        result,
        header: vec!["k", "p_num", "p_den_exp", "P_num", "P_den_exp", "p", "P"],
        rows,
        holds,
    })
}

fn ordered<T>(a: T, b: T, relation: Comparison, want: Comparison, what: &str) -> Result<(T, T)> {
    match relation {
        r if r == want => Ok((a, b)),
        Comparison::Equal => bail!("the two {what} are equal"),
        Comparison::Incomparable => bail!("the two {what} are incomparable"),
        _ => Ok((b, a)),
    }
}

fn compare(a: &CompareArgs) -> Result<Rendered> {
    let l = alphabet(a.l)?;
    let mut result = serde_json::Map::new();
    let (s, s2) = match (&a.h, &a.h2, &a.s, &a.s2) {
        (Some(h), Some(h2), _, _) => {
            let (h, h2) = (parse_h(h)?, parse_h(h2)?);
            let rel = patterns::compare_indicators(&h, &h2)?;
            let (h, h2) = ordered(h, h2, rel, Comparison::Less, "indicators")?;
            result.insert("h".into(), json!(h));
            result.insert("h2".into(), json!(h2));
            result.insert("k0_min_index".into(), json!(patterns::k0_of_pair(&h, &h2)?));
            (patterns::s_from_h(&h), patterns::s_from_h(&h2))
        }
        (_, _, Some(s), Some(s2)) => {
            let (s, s2) = (parse_s(s)?, parse_s(s2)?);
            let rel = s.compare(&s2)?;
            ordered(s, s2, rel, Comparison::Greater, "jump-target words")?
        }
        _ => bail!("give either --h and --h2 or --s and --s2"),
    };
    let upto = a.k_max.unwrap_or(3 * s.len());
    let cmp = markov::compare_chains(&s, &s2, l, upto)?;
    result.insert("s".into(), json!(s));
    result.insert("s2".into(), json!(s2));
    result.insert("L".into(), json!(l));
    result.insert("K".into(), json!(upto));
    result.insert("k0".into(), json!(cmp.k0));
    result.insert("conforms".into(), json!(cmp.conforms()));
    result.insert("violations".into(), json!(cmp.violations));
    result.insert("verdicts".into(), json!(cmp.verdicts));

    let rows = cmp
        .verdicts
        .iter()
        .map(|v| {
            vec![
                v.k.to_string(),
                v.value.to_string(),
                v.other.to_string(),
                v.value.to_decimal(a.digits),
                v.other.to_decimal(a.digits),
                v.observed.to_string(),
                v.expected.to_string(),
            ]
        })
        .collect();
    Ok(Rendered {
        result: Value::Object(result),
        header: vec![
            "k",
            "P",
            "P2",
            "P_decimal",
            "P2_decimal",
            "observed",
            "expected",
        ],
        rows,
        holds: cmp.conforms(),
    })
}

fn census(a: &CensusArgs) -> Result<Rendered> {
    let l = alphabet(a.l)?;
    let census = patterns::census(a.n, l, EnumBudget::from_env(), a.cap)?;
    let mut classes = Vec::new();
    let mut rows = Vec::new();
    for class in &census.classes {
        let mut matches = true;
        for w in &class.representatives {
            matches &= oracle::automaton_matches_class_chain(w)?;
        }
        let reps: Vec<String> = class.representatives.iter().map(Word::to_string).collect();
        rows.push(vec![
            class.h.to_string(),
            class.count.to_string(),
            reps.join(" "),
            matches.to_string(),
        ]);
        let mut entry = serde_json::to_value(class)?;
        entry["automaton_chain_match"] = json!(matches);
        classes.push(entry);
    }
    Ok(Rendered {
        result: json!({ "n": census.n, "L": census.alphabet, "classes": classes }),
        header: vec!["h", "count", "representatives", "automaton_chain_match"],
        rows,
        holds: true,
    })
}

fn counterexample() -> Result<Rendered> {
    let report = oracle::counterexample_check();
    let mut rows: Vec<Vec<String>> = report
        .words
        .iter()
        .zip(&report.indicators)
        .zip(&report.probabilities)
        .map(|((w, h), p)| {
            vec![
                w.to_string(),
                h.to_string(),
                p.to_string(),
                p.to_decimal(DEFAULT_DIGITS),
            ]
        })
        .collect();
    rows.push(vec![
        "P1+P4".into(),
        String::new(),
        report.lhs.to_string(),
        report.lhs.to_decimal(DEFAULT_DIGITS),
    ]);
    rows.push(vec![
        "P2+P3".into(),
        String::new(),
        report.rhs.to_string(),
        report.rhs.to_decimal(DEFAULT_DIGITS),
    ]);
    let mut result = serde_json::to_value(&report)?;
    result["holds"] = json!(report.holds());
    Ok(Rendered {
        result,
        header: vec!["word", "h", "P", "P_decimal"],
        rows,
        holds: report.holds(),
    })
}

fn simulate(a: &SimulateArgs) -> Result<Rendered> {
    let l = alphabet(a.l)?;
    let word = parse_word(&a.word, l)?;
    let cfg = McConfig::new(a.trials, a.k, a.seed)?;
    let report = oracle::monte_carlo(&word, cfg);
    let h = patterns::bifix_indicator(&word)?;
    let exact: ProbTable<ExactProb> = recursions::cumulative_table(&h, l, a.k);
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for j in 0..=a.k {
        let e = exact.cum(j).to_f64();
        let in_band = report.within_band(j, e, 3.0);
        rows.push(vec![
            j.to_string(),
            report.p_hat[j].to_string(),
            report.stderr[j].to_string(),
            e.to_string(),
            in_band.to_string(),
        ]);
        cells.push(json!({ "k": j, "exact": e, "within_3_stderr": in_band }));
    }
    let mut result = serde_json::to_value(&report)?;
    result["exact"] = json!(cells);
    Ok(Rendered {
        result,
        header: vec!["k", "p_hat", "stderr", "exact", "within_3_stderr"],
        rows,
        holds: true,
    })
}

fn lemmas(a: &LemmasArgs) -> Result<Rendered> {
    let l = alphabet(a.l)?;
    let spec = match (&a.h, &a.s) {
        (Some(h), _) => ChainSpec::for_indicator(&parse_h(h)?, l),
        (None, Some(s)) => ChainSpec::new(parse_s(s)?, l),
        (None, None) => bail!("one of --h or --s is required"),
    };
    let upto = a.k_max.unwrap_or(3 * spec.n());
    let report = markov::check_lemmas(&spec, upto)?;
    let rows = report
        .violations
        .iter()
        .map(|v| {
            vec![
                serde_json::to_value(v.lemma)
                    .map(|x| x.as_str().unwrap_or_default().to_string())
                    .unwrap_or_default(),
                v.k.to_string(),
                v.i.to_string(),
                v.detail.clone(),
            ]
        })
        .collect();
    let mut result = serde_json::to_value(&report)?;
    result["passed"] = json!(report.passed());
    Ok(Rendered {
        result,
        header: vec!["lemma", "k", "i", "detail"],
        rows,
        holds: report.passed(),
    })
}
