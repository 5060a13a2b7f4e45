//! Word-similarity benchmarks over the sense space.
//!
//! In-isolation datasets are scored with MaxSim (best sense pair) or AvgSim
//! (mean over sense pairs); contextual datasets additionally with AvgSimC,
//! where every sense is weighted by its relevance to the surrounding text.
//! Word-to-sense datasets compare a sense against a word's senses (MaxSim,
//! AvgSim), its original vector (S2W) or the centroid of its senses (S2A).

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rayon::prelude::*;

use crate::deconf::{synset_vector, SenseKey, SenseSpace};
use crate::vectors::{cosine, to_f64, LookupPolicy, VectorStore};
use crate::wordnet::WordNet;
use crate::{Error, Result};

/// Context words ignored when building a context vector.
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "for", "from", "had", "has",
    "have", "he", "her", "his", "i", "in", "is", "it", "its", "of", "on", "or", "she", "that",
    "the", "their", "they", "this", "to", "was", "were", "which", "with", "you",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    MaxSim,
    AvgSim,
    AvgSimC,
    S2W,
    S2A,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::MaxSim => "MaxSim",
            Strategy::AvgSim => "AvgSim",
            Strategy::AvgSimC => "AvgSimC",
            Strategy::S2W => "S2W",
            Strategy::S2A => "S2A",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maxsim" => Ok(Strategy::MaxSim),
            "avgsim" => Ok(Strategy::AvgSim),
            "avgsimc" => Ok(Strategy::AvgSimC),
            "s2w" => Ok(Strategy::S2W),
            "s2a" => Ok(Strategy::S2A),
            _ => Err(Error::InvalidParameter(format!("unknown strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// `word1 word2 score`, separated by tabs, semicolons, commas or spaces.
    Pairs,
    Rg65,
    Yp130,
    /// MEN-3K; `-n`/`-v`/`-j` part-of-speech suffixes are stripped.
    Men,
    /// SimLex-999 tab-separated file with header; score in column 4.
    SimLex,
    /// SCWS: `id w1 pos1 w2 pos2 context1 context2 mean ...`, tab-separated,
    /// targets marked `<b> … </b>` inside the contexts.
    Scws,
    /// Word-to-sense: `sense_key<TAB>word<TAB>score`.
    Clss,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "pairs" => Ok(DatasetFormat::Pairs),
            "rg65" | "rg" => Ok(DatasetFormat::Rg65),
            "yp130" | "yp" => Ok(DatasetFormat::Yp130),
            "men" | "men3k" => Ok(DatasetFormat::Men),
            "simlex" | "simlex999" | "sl999" => Ok(DatasetFormat::SimLex),
            "scws" => Ok(DatasetFormat::Scws),
            "clss" => Ok(DatasetFormat::Clss),
            _ => Err(Error::InvalidParameter(format!(
                "unknown dataset format {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPair {
    pub left: String,
    pub right: String,
    pub gold: f64,
    pub left_context: Option<Vec<String>>,
    pub right_context: Option<Vec<String>>,
}

impl SimilarityPair {
    pub fn new(left: &str, right: &str, gold: f64) -> Self {
        SimilarityPair {
            left: left.to_string(),
            right: right.to_string(),
            gold,
            left_context: None,
            right_context: None,
        }
    }
}

/// Parses a benchmark file. `label` names the source in errors.
pub fn parse_dataset<R: BufRead>(
    input: R,
    format: DatasetFormat,
    label: &str,
) -> Result<Vec<SimilarityPair>> {
    let mut pairs = Vec::new();
    let mut offset = 0u64;
    let mut first = true;
    for line in input.split(b'\n') {
        let raw = line?;
        let start = offset;
        offset += raw.len() as u64 + 1;
        let err = |msg: String| Error::parse(label, start, msg);
        let line = String::from_utf8_lossy(&raw);
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let was_first = std::mem::replace(&mut first, false);
        let parsed = match format {
            DatasetFormat::Scws => parse_scws(line),
            DatasetFormat::SimLex => {
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() < 4 {
                    Err(format!(
                        "expected at least 4 tab-separated fields, found {}",
                        f.len()
                    ))
                } else {
                    score(f[3]).map(|g| SimilarityPair::new(f[0].trim(), f[1].trim(), g))
                }
            }
            DatasetFormat::Clss => {
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() < 3 {
                    Err(format!(
                        "expected 3 tab-separated fields, found {}",
                        f.len()
                    ))
                } else {
                    score(f[2]).map(|g| SimilarityPair::new(f[0].trim(), f[1].trim(), g))
                }
            }
            DatasetFormat::Pairs
            | DatasetFormat::Rg65
            | DatasetFormat::Yp130
            | DatasetFormat::Men => {
                let f = split_fields(line);
                if f.len() < 3 {
                    Err(format!("expected 3 fields, found {}", f.len()))
                } else {
                    score(f[2]).map(|g| {
                        if format == DatasetFormat::Men {
                            SimilarityPair::new(strip_pos_suffix(f[0]), strip_pos_suffix(f[1]), g)
                        } else {
                            SimilarityPair::new(f[0], f[1], g)
                        }
                    })
                }
            }
        };
        match parsed {
            Ok(p) => pairs.push(p),
            // A first line whose score does not parse is a header.
            Err(_) if was_first => continue,
            Err(msg) => return Err(err(msg)),
        }
    }
    Ok(pairs)
}

fn score(s: &str) -> std::result::Result<f64, String> {
    match s.trim().parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("bad score {s:?}")),
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    let sep = ['\t', ';', ','].into_iter().find(|&c| line.contains(c));
    match sep {
        Some(c) => line
            .split(c)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect(),
        None => line.split_whitespace().collect(),
    }
}

fn strip_pos_suffix(w: &str) -> &str {
    match w.rsplit_once('-') {
        Some((base, "n" | "v" | "j" | "a" | "r")) if !base.is_empty() => base,
        _ => w,
    }
}

fn parse_scws(line: &str) -> std::result::Result<SimilarityPair, String> {
    let f: Vec<&str> = line.split('\t').collect();
    if f.len() < 8 {
        return Err(format!(
            "expected at least 8 tab-separated fields, found {}",
            f.len()
        ));
    }
    let gold = score(f[7])?;
    Ok(SimilarityPair {
        left: f[1].trim().to_string(),
        right: f[3].trim().to_string(),
        gold,
        left_context: Some(context_tokens(f[5])),
        right_context: Some(context_tokens(f[6])),
    })
}

/// Context tokens with the `<b> … </b>` target span removed.
fn context_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut inside = false;
    for tok in text.split_whitespace() {
        match tok {
            "<b>" => inside = true,
            "</b>" => inside = false,
            _ if !inside => out.push(tok.to_string()),
            _ => {}
        }
    }
    out
}

/// Sense vectors indexed by key and by lemma.
#[derive(Debug, Clone, Default)]
pub struct SenseInventory {
    keys: Vec<SenseKey>,
    vectors: Vec<Vec<f64>>,
    by_key: HashMap<String, usize>,
    by_lemma: HashMap<String, Vec<usize>>,
    by_lower: HashMap<String, Vec<usize>>,
}

impl SenseInventory {
    pub fn from_space(space: &SenseSpace) -> Self {
        let mut inv = SenseInventory::default();
        for (k, v) in &space.senses {
            inv.insert(k.clone(), v.clone());
        }
        inv
    }

    /// Reads a sense export loaded as a vector store; every key must parse
    /// as `lemma#pos#offset`.
    pub fn from_store(store: &VectorStore) -> Result<Self> {
        let mut inv = SenseInventory::default();
        for i in 0..store.len() {
            let key: SenseKey = store.word(i).parse()?;
            inv.insert(key, to_f64(store.vector(i)));
        }
        Ok(inv)
    }

    fn insert(&mut self, key: SenseKey, vector: Vec<f64>) {
        let i = self.keys.len();
        self.by_key.insert(key.to_string(), i);
        self.by_lemma.entry(key.lemma.clone()).or_default().push(i);
        self.by_lower
            .entry(key.lemma.to_lowercase())
            .or_default()
            .push(i);
        self.keys.push(key);
        self.vectors.push(vector);
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[SenseKey] {
        &self.keys
    }

    pub fn vector(&self, key: &str) -> Option<&[f64]> {
        self.by_key.get(key).map(|&i| self.vectors[i].as_slice())
    }

    /// Sense vectors of `word`: exact lemma match, then the policy's
    /// candidates, then (with case fallback) a case-insensitive match.
    pub fn senses_of(&self, word: &str, policy: &LookupPolicy) -> Vec<&[f64]> {
        let hits = self
            .by_lemma
            .get(word)
            .or_else(|| {
                policy
                    .candidates(word)
                    .iter()
                    .find_map(|c| self.by_lemma.get(c))
            })
            .or_else(|| {
                policy
                    .case_fallback
                    .then(|| {
                        self.by_lower
                            .get(&policy.candidates(word)[0].to_lowercase())
                    })
                    .flatten()
            });
        hits.map(|h| h.iter().map(|&i| self.vectors[i].as_slice()).collect())
            .unwrap_or_default()
    }
}

/// Everything a benchmark run reads.
pub struct Resources<'a> {
    pub senses: &'a SenseInventory,
    pub words: &'a VectorStore,
    pub wordnet: Option<&'a WordNet>,
    pub policy: LookupPolicy,
}

impl Resources<'_> {
    fn word_vector(&self, word: &str) -> Option<Vec<f64>> {
        self.words.lookup(word, &self.policy).map(to_f64)
    }

    fn word_backoff(&self, w1: &str, w2: &str) -> Option<f64> {
        Some(cosine(&self.word_vector(w1)?, &self.word_vector(w2)?))
    }
}

/// A pair score and whether it came from the word-vector backoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub backoff: bool,
    /// AvgSimC fell back to uniform sense weights on at least one side.
    pub uniform: bool,
}

impl Scored {
    fn senses(value: f64) -> Self {
        Scored {
            value,
            backoff: false,
            uniform: false,
        }
    }

    fn backoff(value: f64) -> Self {
        Scored {
            value,
            backoff: true,
            uniform: false,
        }
    }
}

pub fn max_sim_vectors(a: &[&[f64]], b: &[&[f64]]) -> Option<f64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| cosine(x, y)))
        .fold(None, |m, c| Some(m.map_or(c, |m: f64| m.max(c))))
}

pub fn avg_sim_vectors(a: &[&[f64]], b: &[&[f64]]) -> Option<f64> {
    if a.is_empty() || b.is_empty() {
        return None;
    }
    let total: f64 = a
        .iter()
        .flat_map(|x| b.iter().map(move |y| cosine(x, y)))
        .sum();
    Some(total / (a.len() * b.len()) as f64)
}

/// Σᵢ Σⱼ wa[i]·wb[j]·cos(a[i], b[j]).
pub fn weighted_sim_vectors(a: &[&[f64]], wa: &[f64], b: &[&[f64]], wb: &[f64]) -> f64 {
    let mut total = 0.0;
    for (x, p) in a.iter().zip(wa) {
        for (y, q) in b.iter().zip(wb) {
            total += p * q * cosine(x, y);
        }
    }
    total
}

/// Best-matching sense pair, backing off to the word vectors when either
/// word has no senses. `None` when nothing applies.
pub fn max_sim(w1: &str, w2: &str, res: &Resources<'_>) -> Option<Scored> {
    let a = res.senses.senses_of(w1, &res.policy);
    let b = res.senses.senses_of(w2, &res.policy);
    match max_sim_vectors(&a, &b) {
        Some(v) => Some(Scored::senses(v)),
        None => res.word_backoff(w1, w2).map(Scored::backoff),
    }
}

/// Mean over all sense pairs, with the same backoff as [`max_sim`].
pub fn avg_sim(w1: &str, w2: &str, res: &Resources<'_>) -> Option<Scored> {
    let a = res.senses.senses_of(w1, &res.policy);
    let b = res.senses.senses_of(w2, &res.policy);
    match avg_sim_vectors(&a, &b) {
        Some(v) => Some(Scored::senses(v)),
        None => res.word_backoff(w1, w2).map(Scored::backoff),
    }
}

/// Mean of the in-vocabulary, non-stopword context vectors.
pub fn context_vector(tokens: &[String], res: &Resources<'_>) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; res.words.dim()];
    let mut found = 0usize;
    for tok in tokens {
        if STOPWORDS.contains(&tok.to_lowercase().as_str()) {
            continue;
        }
        if let Some(v) = res.words.lookup(tok, &res.policy) {
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += f64::from(x);
            }
            found += 1;
        }
    }
    (found > 0).then(|| sum.into_iter().map(|s| s / found as f64).collect())
}

/// Relevance weights `∝ exp(cos(sense, context))`, summing to one. Uniform
/// when there is no context vector; the flag reports that case.
pub fn sense_weights(senses: &[&[f64]], context: Option<&[f64]>) -> (Vec<f64>, bool) {
    let n = senses.len();
    match context {
        Some(c) if n > 0 => {
            let raw: Vec<f64> = senses.iter().map(|s| cosine(s, c).exp()).collect();
            let total: f64 = raw.iter().sum();
            (raw.into_iter().map(|w| w / total).collect(), false)
        }
        _ => (vec![1.0 / n.max(1) as f64; n], true),
    }
}

/// Context-weighted mean over sense pairs.
pub fn avg_sim_c(pair: &SimilarityPair, res: &Resources<'_>) -> Option<Scored> {
    let a = res.senses.senses_of(&pair.left, &res.policy);
    let b = res.senses.senses_of(&pair.right, &res.policy);
    if a.is_empty() || b.is_empty() {
        return res
            .word_backoff(&pair.left, &pair.right)
            .map(Scored::backoff);
    }
    let ca = pair
        .left_context
        .as_deref()
        .and_then(|t| context_vector(t, res));
    let cb = pair
        .right_context
        .as_deref()
        .and_then(|t| context_vector(t, res));
    let (wa, ua) = sense_weights(&a, ca.as_deref());
    let (wb, ub) = sense_weights(&b, cb.as_deref());
    Some(Scored {
        value: weighted_sim_vectors(&a, &wa, &b, &wb),
        backoff: false,
        uniform: ua || ub,
    })
}

/// Cosine of a sense against a word's original vector.
pub fn s2w(sense_key: &str, word: &str, res: &Resources<'_>) -> Option<f64> {
    let s = res.senses.vector(sense_key)?;
    Some(cosine(s, &res.word_vector(word)?))
}

/// Cosine of a sense against the normalized centroid of a word's senses.
pub fn s2a(sense_key: &str, word: &str, res: &Resources<'_>) -> Option<f64> {
    let s = res.senses.vector(sense_key)?;
    let senses = res.senses.senses_of(word, &res.policy);
    let centroid = synset_vector(&senses).ok()?;
    Some(cosine(s, &centroid))
}

fn sense_to_word(
    strategy: Strategy,
    key: &str,
    word: &str,
    res: &Resources<'_>,
) -> Result<Option<Scored>> {
    let Some(s) = res.senses.vector(key) else {
        return Ok(None);
    };
    let senses = res.senses.senses_of(word, &res.policy);
    let one = [s];
    let from_senses = match strategy {
        Strategy::MaxSim => max_sim_vectors(&one, &senses),
        Strategy::AvgSim => avg_sim_vectors(&one, &senses),
        Strategy::S2W => return Ok(s2w(key, word, res).map(Scored::senses)),
        Strategy::S2A => return Ok(s2a(key, word, res).map(Scored::senses)),
        Strategy::AvgSimC => {
            return Err(Error::InvalidParameter(
                "AvgSimC needs contexts; word-to-sense data has none".into(),
            ))
        }
    };
    Ok(match from_senses {
        Some(v) => Some(Scored::senses(v)),
        None => s2w(key, word, res).map(Scored::backoff),
    })
}

/// Divides `score` by five when any synset of `w1` is antonym-linked to any
/// synset of `w2`.
pub fn antonym_adjust(
    score: f64,
    w1: &str,
    w2: &str,
    wordnet: &WordNet,
    policy: &LookupPolicy,
) -> f64 {
    if antonymous(w1, w2, wordnet, policy) {
        score / 5.0
    } else {
        score
    }
}

pub fn antonymous(w1: &str, w2: &str, wordnet: &WordNet, policy: &LookupPolicy) -> bool {
    let key = |w: &str| w.replace(' ', "_");
    let a = wordnet.synsets_of_word(&key(w1), policy.case_fallback);
    let b = wordnet.synsets_of_word(&key(w2), policy.case_fallback);
    a.iter().any(|&x| {
        b.iter()
            .any(|&y| wordnet.antonym_linked(x, y).unwrap_or(false))
    })
}

/// Product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidParameter(format!(
            "correlation inputs differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::UndefinedCorrelation(
            "fewer than two observations".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("constant input".into()));
    }
    // sqrt of the product keeps perfectly correlated inputs at exactly ±1.
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return pearson(xs, ys);
    }
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EvalOptions {
    pub antonym_adjust: bool,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub strategy: Strategy,
    pub pearson: f64,
    pub spearman: f64,
    pub covered: usize,
    pub total: usize,
    /// Covered pairs scored from word vectors because a word had no senses.
    pub backoff: usize,
    /// Pairs whose AvgSimC weights fell back to uniform.
    pub uniform_weights: usize,
    /// Pairs whose score was divided for antonymy.
    pub antonym_adjusted: usize,
    /// Per-pair system score, `None` for uncovered pairs.
    pub scores: Vec<Option<f64>>,
}

impl EvalReport {
    pub fn uncovered(&self) -> usize {
        self.total - self.covered
    }

    /// `dataset strategy pearson spearman covered total`
    pub fn machine_line(&self) -> String {
        format!(
            "{} {} {:.6} {:.6} {} {}",
            self.dataset, self.strategy, self.pearson, self.spearman, self.covered, self.total
        )
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dataset    {}", self.dataset)?;
        writeln!(f, "strategy   {}", self.strategy)?;
        writeln!(f, "pearson    {:.1}", self.pearson * 100.0)?;
        writeln!(f, "spearman   {:.1}", self.spearman * 100.0)?;
        writeln!(f, "covered    {}/{}", self.covered, self.total)?;
        writeln!(f, "backoff    {}", self.backoff)?;
        if self.strategy == Strategy::AvgSimC {
            writeln!(f, "uniform    {}", self.uniform_weights)?;
        }
        if self.antonym_adjusted > 0 {
            writeln!(f, "antonyms   {}", self.antonym_adjusted)?;
        }
        Ok(())
    }
}

/// Scores one pair. Word-to-sense datasets carry the sense key in `left`.
pub fn score_pair(
    pair: &SimilarityPair,
    format: DatasetFormat,
    strategy: Strategy,
    res: &Resources<'_>,
) -> Result<Option<Scored>> {
    if format == DatasetFormat::Clss {
        return sense_to_word(strategy, &pair.left, &pair.right, res);
    }
    Ok(match strategy {
        Strategy::MaxSim => max_sim(&pair.left, &pair.right, res),
        Strategy::AvgSim => avg_sim(&pair.left, &pair.right, res),
        Strategy::AvgSimC => avg_sim_c(pair, res),
        Strategy::S2W | Strategy::S2A => {
            return Err(Error::InvalidParameter(format!(
                "{strategy} applies to word-to-sense data only"
            )))
        }
    })
}

/// Scores every pair and correlates covered system scores with gold.
pub fn run_benchmark(
    dataset: &str,
    pairs: &[SimilarityPair],
    format: DatasetFormat,
    strategy: Strategy,
    res: &Resources<'_>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    if options.antonym_adjust && res.wordnet.is_none() {
        return Err(Error::InvalidParameter(
            "antonym adjustment needs the WordNet graph".into(),
        ));
    }
    let scored: Vec<Result<Option<(Scored, bool)>>> = crate::with_threads(options.threads, || {
        pairs
            .par_iter()
            .map(|p| {
                let s = score_pair(p, format, strategy, res)?;
                Ok(s.map(|mut s| {
                    let mut adjusted = false;
                    if let (true, Some(wn)) = (options.antonym_adjust, res.wordnet) {
                        let left = match format {
                            DatasetFormat::Clss => p
                                .left
                                .parse::<SenseKey>()
                                .map(|k| k.lemma)
                                .unwrap_or_default(),
                            _ => p.left.clone(),
                        };
                        let v = antonym_adjust(s.value, &left, &p.right, wn, &res.policy);
                        adjusted = v != s.value;
                        s.value = v;
                    }
                    (s, adjusted)
                }))
            })
            .collect()
    });

    let mut report = EvalReport {
        dataset: dataset.to_string(),
        strategy,
        pearson: f64::NAN,
        spearman: f64::NAN,
        covered: 0,
        total: pairs.len(),
        backoff: 0,
        uniform_weights: 0,
        antonym_adjusted: 0,
        scores: Vec::with_capacity(pairs.len()),
    };
    let mut gold = Vec::new();
    let mut system = Vec::new();
    for (pair, s) in pairs.iter().zip(scored) {
        match s? {
            Some((s, adjusted)) => {
                report.covered += 1;
                report.backoff += usize::from(s.backoff);
                report.uniform_weights += usize::from(s.uniform);
                report.antonym_adjusted += usize::from(adjusted);
                gold.push(pair.gold);
                system.push(s.value);
                report.scores.push(Some(s.value));
            }
            None => report.scores.push(None),
        }
    }
    report.pearson = pearson(&gold, &system)?;
    report.spearman = spearman(&gold, &system)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use crate::wordnet::{Pos, Synset, SynsetId};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn key(lemma: &str, offset: u32) -> SenseKey {
        SenseKey {
            lemma: lemma.into(),
            synset: SynsetId::new(Pos::Noun, offset),
        }
    }

    /// `x` has senses (1,0) and (0,1); `y` has (1,0); `z` has (0.6,0.8).
    fn toy() -> (SenseInventory, VectorStore) {
        let space = SenseSpace {
            dim: 2,
            senses: vec![
                (key("x", 1), vec![1.0, 0.0]),
                (key("x", 2), vec![0.0, 1.0]),
                (key("y", 3), vec![1.0, 0.0]),
                (key("z", 4), vec![0.6, 0.8]),
            ],
            synsets: Vec::new(),
        };
        let mut words = VectorStore::new(2);
        words.push("x", &[1.0, 1.0]).unwrap();
        words.push("y", &[1.0, 0.0]).unwrap();
        words.push("w", &[0.0, 1.0]).unwrap();
        words.push("ctxa", &[1.0, 0.0]).unwrap();
        words.push("ctxb", &[0.0, 1.0]).unwrap();
        (SenseInventory::from_space(&space), words)
    }

    fn res<'a>(inv: &'a SenseInventory, words: &'a VectorStore) -> Resources<'a> {
        Resources {
            senses: inv,
            words,
            wordnet: None,
            policy: LookupPolicy::default(),
        }
    }

    #[test]
    fn toy_strategies() {
        let (inv, words) = toy();
        let r = res(&inv, &words);
        assert_eq!(max_sim("x", "y", &r).unwrap().value, 1.0);
        assert_eq!(avg_sim("x", "y", &r).unwrap().value, 0.5);
        assert_abs_diff_eq!(max_sim("x", "x", &r).unwrap().value, 1.0, epsilon = 1e-12);
        // monosemous pair: plain cosine, avg equals max
        assert_abs_diff_eq!(max_sim("y", "z", &r).unwrap().value, 0.6, epsilon = 1e-12);
        assert_eq!(avg_sim("y", "z", &r), max_sim("y", "z", &r));
        // backoff to word vectors, then uncovered
        let b = max_sim("y", "w", &r).unwrap();
        assert!(b.backoff);
        assert_abs_diff_eq!(b.value, 0.0, epsilon = 1e-12);
        assert!(max_sim("y", "nothing", &r).is_none());
        assert_eq!(inv.senses_of("X", &LookupPolicy::default()).len(), 2);
        assert!(inv.senses_of("qqq", &LookupPolicy::default()).is_empty());
    }

    #[test]
    fn avg_sim_c_weights() {
        let (inv, words) = toy();
        let r = res(&inv, &words);
        let senses = inv.senses_of("x", &r.policy);
        let ctx = context_vector(&["the".into(), "ctxa".into()], &r).unwrap();
        let (w, uniform) = sense_weights(&senses, Some(&ctx));
        assert!(!uniform);
        assert!(w[0] > w[1]);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);

        let mut pair = SimilarityPair::new("x", "y", 1.0);
        pair.left_context = Some(vec!["ctxa".into()]);
        pair.right_context = Some(vec!["ctxb".into()]);
        let c = avg_sim_c(&pair, &r).unwrap();
        assert!(c.value > avg_sim("x", "y", &r).unwrap().value);

        // single-sense words ignore context
        let mut mono = SimilarityPair::new("y", "z", 1.0);
        mono.left_context = Some(vec!["ctxb".into()]);
        mono.right_context = Some(vec!["ctxa".into()]);
        assert_abs_diff_eq!(avg_sim_c(&mono, &r).unwrap().value, 0.6, epsilon = 1e-12);

        // no usable context: uniform weights, equal to AvgSim
        let mut empty = SimilarityPair::new("x", "z", 1.0);
        empty.left_context = Some(vec!["the".into(), "unknown".into()]);
        empty.right_context = Some(Vec::new());
        let c = avg_sim_c(&empty, &r).unwrap();
        assert!(c.uniform);
        assert_abs_diff_eq!(
            c.value,
            avg_sim("x", "z", &r).unwrap().value,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sense_to_word_scores() {
        let (inv, words) = toy();
        let r = res(&inv, &words);
        let k = key("z", 4).to_string();
        // (0.6,0.8)·(1,1)/√2
        assert_abs_diff_eq!(
            s2w(&k, "x", &r).unwrap(),
            1.4 / 2f64.sqrt(),
            epsilon = 1e-12
        );
        // centroid of x's senses is (1,1)/√2
        assert_abs_diff_eq!(
            s2a(&k, "x", &r).unwrap(),
            1.4 / 2f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(s2a(&k, "y", &r).unwrap(), 0.6, epsilon = 1e-12);
        assert!(s2w(&k, "nothing", &r).is_none());
        assert!(s2w("nope#n#00000001", "x", &r).is_none());

        let mut antipodal = SenseSpace {
            dim: 2,
            senses: Vec::new(),
            synsets: Vec::new(),
        };
        antipodal.senses.push((key("p", 1), vec![1.0, 0.0]));
        antipodal.senses.push((key("p", 2), vec![-1.0, 0.0]));
        antipodal.senses.push((key("q", 3), vec![1.0, 0.0]));
        let inv2 = SenseInventory::from_space(&antipodal);
        let r2 = res(&inv2, &words);
        assert!(s2a(&key("q", 3).to_string(), "p", &r2).is_none());
    }

    #[test]
    fn correlations() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert_eq!(pearson(&xs, &xs).unwrap(), 1.0);
        assert_eq!(spearman(&xs, &xs).unwrap(), 1.0);
        assert_eq!(pearson(&xs, &neg).unwrap(), -1.0);
        assert_eq!(spearman(&xs, &neg).unwrap(), -1.0);
        // scipy.stats.spearmanr gives 0.8 (ranks differ by 1 in four places).
        assert_abs_diff_eq!(
            spearman(&xs, &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap(),
            0.8,
            epsilon = 1e-12
        );
        assert!(matches!(
            pearson(&xs, &[1.0; 5]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&xs, &[1.0]).is_err());
        assert_eq!(
            fractional_ranks(&[3.0, 1.0, 3.0, 2.0]),
            vec![3.5, 1.0, 3.5, 2.0]
        );
    }

    #[test]
    fn antonyms() {
        let n = |i| SynsetId::new(Pos::Noun, i);
        let mut sunrise = Synset::new(n(1), ["sunrise", "dawn"]);
        sunrise = sunrise.with_relation("!", n(2));
        let wn = WordNet::from_synsets(vec![
            sunrise,
            Synset::new(n(2), ["sunset"]),
            Synset::new(n(3), ["tree"]),
        ])
        .unwrap();
        let p = LookupPolicy::default();
        assert_abs_diff_eq!(
            antonym_adjust(0.8, "sunset", "dawn", &wn, &p),
            0.16,
            epsilon = 1e-15
        );
        assert_eq!(antonym_adjust(0.8, "tree", "dawn", &wn, &p), 0.8);
        assert_eq!(antonym_adjust(0.8, "Sunset", "sunrise", &wn, &p), 0.16);
    }

    #[test]
    fn dataset_parsing() {
        let rg = "cord;smile;0.02\nrooster\tvoyage\t0.04\nnoon string 0.04\n";
        let pairs = parse_dataset(rg.as_bytes(), DatasetFormat::Rg65, "rg").unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[1].right, "voyage");

        let simlex = "word1\tword2\tPOS\tSimLex999\tconc(w1)\nold\tnew\tA\t1.58\t2.72\n";
        let pairs = parse_dataset(simlex.as_bytes(), DatasetFormat::SimLex, "sl").unwrap();
        assert_eq!(pairs, vec![SimilarityPair::new("old", "new", 1.58)]);

        let men = "sun-n sunlight-n 50.000000\n";
        let pairs = parse_dataset(men.as_bytes(), DatasetFormat::Men, "men").unwrap();
        assert_eq!(pairs[0].left, "sun");

        let scws = "1\tBrazil\tn\tnut\tn\tfrom <b> Brazil </b> to here\tthe <b> nut </b> cracked\t3.8\t5\t4\n";
        let pairs = parse_dataset(scws.as_bytes(), DatasetFormat::Scws, "scws").unwrap();
        assert_eq!(
            pairs[0].left_context.as_deref().unwrap(),
            ["from", "to", "here"]
        );
        assert_eq!(pairs[0].gold, 3.8);

        let clss = "bass#n#00001109\tguitar\t3.5\n";
        let pairs = parse_dataset(clss.as_bytes(), DatasetFormat::Clss, "clss").unwrap();
        assert_eq!(pairs[0].left, "bass#n#00001109");

        let bad = "a b 1\nc d x\n";
        match parse_dataset(bad.as_bytes(), DatasetFormat::Pairs, "bad") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!("nope".parse::<DatasetFormat>().is_err());
    }

    #[test]
    fn three_pair_benchmark() {
        let (inv, words) = toy();
        let r = res(&inv, &words);
        let pairs = vec![
            SimilarityPair::new("x", "y", 3.0), // MaxSim 1.0
            SimilarityPair::new("y", "z", 2.0), // 0.6
            SimilarityPair::new("y", "w", 1.0), // backoff 0.0
            SimilarityPair::new("y", "nothing", 5.0),
        ];
        let rep = run_benchmark(
            "toy",
            &pairs,
            DatasetFormat::Pairs,
            Strategy::MaxSim,
            &r,
            &EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(rep.total, 4);
        assert_eq!(rep.covered, 3);
        assert_eq!(rep.backoff, 1);
        assert_abs_diff_eq!(rep.spearman, 1.0, epsilon = 1e-12);
        // gold (3,2,1), system (1,0.6,0)
        assert_abs_diff_eq!(rep.pearson, 0.993_399_267_798_782_8, epsilon = 1e-12);
        assert_eq!(rep.machine_line(), "toy MaxSim 0.993399 1.000000 3 4");
        assert!(run_benchmark(
            "toy",
            &pairs,
            DatasetFormat::Pairs,
            Strategy::S2W,
            &r,
            &EvalOptions::default()
        )
        .is_err());
        for threads in [1, 3, 8] {
            let opts = EvalOptions {
                antonym_adjust: false,
                threads,
            };
            let again = run_benchmark(
                "toy",
                &pairs,
                DatasetFormat::Pairs,
                Strategy::MaxSim,
                &r,
                &opts,
            )
            .unwrap();
            assert_eq!(again, rep);
        }
    }

    proptest! {
        #[test]
        fn spearman_is_scale_invariant(xs in prop::collection::vec(-50i32..50, 3..30), scale in 0.001f64..1000.0) {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x + (i % 3) as f64).collect();
            let scaled: Vec<f64> = ys.iter().map(|y| y * scale).collect();
            prop_assert_eq!(fractional_ranks(&ys), fractional_ranks(&scaled));
            if let Ok(r) = spearman(&xs, &ys) {
                prop_assert_eq!(r, spearman(&xs, &scaled).unwrap());
            }
        }

        #[test]
        fn avg_never_exceeds_max(a in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..5),
                                 b in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..5)) {
            let a: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
            let b: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
            prop_assert!(avg_sim_vectors(&a, &b).unwrap() <= max_sim_vectors(&a, &b).unwrap() + 1e-12);
        }
    }
}
