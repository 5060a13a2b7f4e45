//! Sense vectors from word vectors and bias lists.
//!
//! A sense `s` with lemma vector `v_s` and biasing words `b_j` at ranks `r_j`
//! minimizes
//!
//! ```text
//! α ‖v − v_s‖² + Σ_j δ_j ‖v − v_{b_j}‖²,    δ_j = exp(−λ r_j) / |B|
//! ```
//!
//! whose unique minimizer is the weighted mean
//! `(α v_s + Σ δ_j v_{b_j}) / (α + Σ δ_j)`. A synset vector is the normalized
//! sum of its normalized sense vectors.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bias::BiasList;
use crate::numfmt::format_sig;
use crate::vectors::{norm, LookupPolicy, VectorStore};
use crate::wordnet::{SynsetId, WordNet};
use crate::{Error, Result};

/// Significant digits used when exporting vectors as text.
pub const EXPORT_DIGITS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeconfConfig {
    /// Pull toward the sense's own lemma vector.
    pub alpha: f64,
    /// Decay rate over bias-list ranks.
    pub lambda: f64,
    /// Bias lists are truncated to this many entries.
    pub k: usize,
}

impl Default for DeconfConfig {
    fn default() -> Self {
        DeconfConfig {
            alpha: 1.0,
            lambda: 0.2,
            k: 25,
        }
    }
}

impl DeconfConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// `exp(−λ·rank) / list_len`.
pub fn decay_weight(rank: usize, list_len: usize, lambda: f64) -> f64 {
    debug_assert!(rank < list_len);
    (-lambda * rank as f64).exp() / list_len as f64
}

/// The weighted-mean minimizer. `lemma` contributes with weight `alpha`.
pub fn closed_form(lemma: Option<&[f64]>, bias: &[(&[f64], f64)], alpha: f64) -> Result<Vec<f64>> {
    let dim = lemma
        .map(<[f64]>::len)
        .or_else(|| bias.first().map(|(v, _)| v.len()))
        .ok_or_else(|| Error::Uncomputable("no lemma vector and no biasing words".into()))?;
    let mut sum = vec![0.0; dim];
    let mut total = 0.0;
    if let Some(v) = lemma {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += alpha * x;
        }
        total += alpha;
    }
    for (v, w) in bias {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v.iter()) {
            *s += w * x;
        }
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::Uncomputable("all weights are zero".into()));
    }
    for s in &mut sum {
        *s /= total;
    }
    Ok(sum)
}

/// `α‖c − v_s‖² + Σ δ ‖c − v_b‖²`. The lemma term is dropped when absent.
pub fn objective_value(
    candidate: &[f64],
    lemma: Option<&[f64]>,
    bias: &[(&[f64], f64)],
    alpha: f64,
) -> Result<f64> {
    let sq = |v: &[f64]| -> Result<f64> {
        if v.len() != candidate.len() {
            return Err(Error::DimensionMismatch {
                expected: candidate.len(),
                found: v.len(),
            });
        }
        Ok(candidate
            .iter()
            .zip(v)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    };
    let mut total = match lemma {
        Some(v) => alpha * sq(v)?,
        None => 0.0,
    };
    for (v, w) in bias {
        total += w * sq(v)?;
    }
    Ok(total)
}

/// Resolves the biasing words of `list` (truncated to `config.k`) against
/// `store`, dropping `own_lemma` and words without a vector. Ranks and the
/// list length are those of the truncated list.
pub fn weighted_bias(
    list: &BiasList,
    own_lemma: Option<&str>,
    store: &VectorStore,
    policy: &LookupPolicy,
    config: &DeconfConfig,
) -> Vec<(Vec<f64>, f64)> {
    let len = list.len().min(config.k);
    list.entries[..len]
        .iter()
        .filter(|e| Some(e.word.as_str()) != own_lemma)
        .filter_map(|e| {
            store.lookup(&e.word, policy).map(|v| {
                (
                    crate::vectors::to_f64(v),
                    decay_weight(e.rank, len, config.lambda),
                )
            })
        })
        .collect()
}

/// Sense vector for the lemma `own_lemma` of the synset whose bias list is
/// `list`. An absent lemma vector drops the α term.
pub fn deconflate_sense(
    lemma_vector: Option<&[f32]>,
    list: &BiasList,
    own_lemma: Option<&str>,
    store: &VectorStore,
    policy: &LookupPolicy,
    config: &DeconfConfig,
) -> Result<Vec<f64>> {
    let weighted = weighted_bias(list, own_lemma, store, policy, config);
    let lemma = lemma_vector.map(crate::vectors::to_f64);
    if lemma.is_none() && weighted.is_empty() {
        return Err(Error::Uncomputable(
            "lemma has no vector and no biasing word was found".into(),
        ));
    }
    let refs: Vec<(&[f64], f64)> = weighted.iter().map(|(v, w)| (v.as_slice(), *w)).collect();
    closed_form(lemma.as_deref(), &refs, config.alpha)
}

/// Normalized sum of the normalized inputs.
pub fn synset_vector<V: AsRef<[f64]>>(senses: &[V]) -> Result<Vec<f64>> {
    let first = senses
        .first()
        .ok_or_else(|| Error::InvalidParameter("synset has no sense vectors".into()))?;
    let mut sum = vec![0.0; first.as_ref().len()];
    for v in senses {
        let v = v.as_ref();
        if v.len() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                found: v.len(),
            });
        }
        let n = norm(v);
        if n == 0.0 {
            return Err(Error::ZeroVector("sense vector".into()));
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x / n;
        }
    }
    let n = norm(&sum);
    // Cancellation leaves rounding noise rather than an exact zero.
    if n <= 1e-12 * senses.len() as f64 {
        return Err(Error::ZeroVector("sense vectors cancel out".into()));
    }
    for s in &mut sum {
        *s /= n;
    }
    Ok(sum)
}

/// A word sense: a lemma within a synset, written `lemma#pos#offset`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SenseKey {
    pub lemma: String,
    pub synset: SynsetId,
}

impl fmt::Display for SenseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.lemma, self.synset)
    }
}

impl FromStr for SenseKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.rsplitn(3, '#');
        let (offset, pos, lemma) = match (parts.next(), parts.next(), parts.next()) {
            (Some(o), Some(p), Some(l)) if !l.is_empty() => (o, p, l),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "malformed sense key {s:?}"
                )))
            }
        };
        Ok(SenseKey {
            lemma: lemma.to_string(),
            synset: format!("{pos}#{offset}").parse()?,
        })
    }
}

/// Sense and synset vectors in the word space.
#[derive(Debug, Clone, PartialEq)]
pub struct SenseSpace {
    pub dim: usize,
    pub senses: Vec<(SenseKey, Vec<f64>)>,
    pub synsets: Vec<(SynsetId, Vec<f64>)>,
}

impl SenseSpace {
    pub fn sense_index(&self) -> HashMap<&SenseKey, usize> {
        self.senses
            .iter()
            .enumerate()
            .map(|(i, (k, _))| (k, i))
            .collect()
    }

    /// `lemma#pos#offset v1 … vd` per sense after a `count dim` header.
    pub fn write_senses<W: Write>(&self, out: W) -> Result<()> {
        write_rows(
            self.dim,
            self.senses.iter().map(|(k, v)| (k.to_string(), v)),
            out,
        )
    }

    /// `pos#offset v1 … vd` per synset after a `count dim` header.
    pub fn write_synsets<W: Write>(&self, out: W) -> Result<()> {
        write_rows(
            self.dim,
            self.synsets.iter().map(|(k, v)| (k.to_string(), v)),
            out,
        )
    }
}

fn write_rows<'a, W: Write>(
    dim: usize,
    rows: impl ExactSizeIterator<Item = (String, &'a Vec<f64>)>,
    mut out: W,
) -> Result<()> {
    writeln!(out, "{} {}", rows.len(), dim)?;
    let mut line = String::new();
    for (key, v) in rows {
        line.clear();
        line.push_str(&key);
        for &x in v {
            line.push(' ');
            line.push_str(&format_sig(x, EXPORT_DIGITS));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoverageReport {
    pub total_senses: usize,
    pub computed_senses: usize,
    pub total_synsets: usize,
    pub computed_synsets: usize,
    /// Keys (sense or synset) without a vector, with the reason.
    pub missing: Vec<(String, String)>,
}

impl CoverageReport {
    pub fn sense_coverage(&self) -> f64 {
        if self.total_senses == 0 {
            0.0
        } else {
            self.computed_senses as f64 / self.total_senses as f64
        }
    }

    /// Tab-separated `key<TAB>reason` lines.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (key, reason) in &self.missing {
            writeln!(out, "{key}\t{reason}")?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Trained {
    pub space: SenseSpace,
    pub coverage: CoverageReport,
}

struct SynsetResult {
    senses: Vec<(SenseKey, Vec<f64>)>,
    synset: Option<Vec<f64>>,
    missing: Vec<(String, String)>,
}

/// Computes every sense and synset vector of `wordnet`. A synset without a
/// bias list (isolated in the graph) uses a list of its own lemmas. Work runs
/// on `threads` workers (0 = rayon default); output order is the inventory
/// order regardless.
pub fn train_all(
    wordnet: &WordNet,
    bias_lists: &[BiasList],
    store: &VectorStore,
    policy: &LookupPolicy,
    config: &DeconfConfig,
    threads: usize,
) -> Result<Trained> {
    config.validate()?;
    let mut by_target: HashMap<SynsetId, &BiasList> = HashMap::with_capacity(bias_lists.len());
    for list in bias_lists {
        wordnet.get(list.target).map_err(|_| {
            Error::Integrity(format!("bias list for unknown synset {}", list.target))
        })?;
        by_target.insert(list.target, list);
    }

    let results: Vec<SynsetResult> = crate::with_threads(threads, || {
        wordnet
            .synsets()
            .par_iter()
            .map(|synset| {
                let fallback;
                let list = match by_target.get(&synset.id) {
                    Some(l) => *l,
                    None => {
                        fallback = BiasList::from_lemmas(synset.id, &synset.lemmas, config.k);
                        &fallback
                    }
                };
                let mut out = SynsetResult {
                    senses: Vec::new(),
                    synset: None,
                    missing: Vec::new(),
                };
                for lemma in &synset.lemmas {
                    let key = SenseKey {
                        lemma: lemma.clone(),
                        synset: synset.id,
                    };
                    let lemma_vector = store.lookup(lemma, policy);
                    match deconflate_sense(lemma_vector, list, Some(lemma), store, policy, config) {
                        Ok(v) => out.senses.push((key, v)),
                        Err(e) => out.missing.push((key.to_string(), e.to_string())),
                    }
                }
                if out.senses.is_empty() {
                    out.missing
                        .push((synset.id.to_string(), "no computable senses".into()));
                } else {
                    let vectors: Vec<&Vec<f64>> = out.senses.iter().map(|(_, v)| v).collect();
                    match synset_vector(&vectors) {
                        Ok(v) => out.synset = Some(v),
                        Err(e) => out.missing.push((synset.id.to_string(), e.to_string())),
                    }
                }
                out
            })
            .collect()
    });

    let mut space = SenseSpace {
        dim: store.dim(),
        senses: Vec::new(),
        synsets: Vec::new(),
    };
    let mut coverage = CoverageReport {
        total_senses: wordnet.sense_count(),
        total_synsets: wordnet.len(),
        ..CoverageReport::default()
    };
    for (synset, r) in wordnet.synsets().iter().zip(results) {
        coverage.computed_senses += r.senses.len();
        space.senses.extend(r.senses);
        if let Some(v) = r.synset {
            coverage.computed_synsets += 1;
            space.synsets.push((synset.id, v));
        }
        coverage.missing.extend(r.missing);
    }
    if coverage.computed_senses == 0 {
        return Err(Error::Uncomputable(
            "no sense vector could be computed".into(),
        ));
    }
    Ok(Trained { space, coverage })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::BiasEntry;
    use crate::wordnet::{Pos, Synset};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn list(words: &[&str]) -> BiasList {
        BiasList {
            target: SynsetId::new(Pos::Noun, 1),
            entries: words
                .iter()
                .enumerate()
                .map(|(rank, w)| BiasEntry {
                    word: w.to_string(),
                    rank,
                    origin: None,
                })
                .collect(),
        }
    }

    /// Plain gradient descent on the objective; independent of the closed form.
    fn gradient_descent(lemma: &[f64], bias: &[(&[f64], f64)], alpha: f64) -> Vec<f64> {
        let mut v = lemma.to_vec();
        let total: f64 = alpha + bias.iter().map(|b| b.1).sum::<f64>();
        let step = 0.2 / total;
        for _ in 0..20_000 {
            let mut grad: Vec<f64> = v
                .iter()
                .zip(lemma)
                .map(|(a, b)| 2.0 * alpha * (a - b))
                .collect();
            for (b, w) in bias {
                for (g, (a, x)) in grad.iter_mut().zip(v.iter().zip(b.iter())) {
                    *g += 2.0 * w * (a - x);
                }
            }
            for (a, g) in v.iter_mut().zip(&grad) {
                *a -= step * g;
            }
        }
        v
    }

    #[test]
    fn decay_values() {
        assert_eq!(decay_weight(0, 25, 0.2), 0.04);
        // exp(-1)/25 from a 30-digit evaluation.
        assert_abs_diff_eq!(
            decay_weight(5, 25, 0.2),
            0.014_715_177_646_857_693,
            epsilon = 1e-15
        );
        for r in 0..10 {
            let ratio = decay_weight(r + 1, 20, 0.3) / decay_weight(r, 20, 0.3);
            assert_abs_diff_eq!(ratio, (-0.3f64).exp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn weight_ratio_grows_with_lambda() {
        let mut prev = 0.0;
        for lambda in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0] {
            let ratio = decay_weight(0, 2, lambda) / decay_weight(1, 2, lambda);
            assert!(ratio > prev);
            prev = ratio;
        }
    }

    #[test]
    fn toy_instance_matches_gradient_descent() {
        let vs = [1.0, 0.0];
        let b0 = [0.0, 1.0];
        let b1 = [1.0, 1.0];
        let bias = [
            (&b0[..], decay_weight(0, 2, 0.2)),
            (&b1[..], decay_weight(1, 2, 0.2)),
        ];
        let v = closed_form(Some(&vs), &bias, 1.0).unwrap();
        // Frozen from a 30-digit evaluation of the weighted mean.
        assert_abs_diff_eq!(v[0], 0.738_132_886_380_120_5, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 0.476_265_772_760_240_9, epsilon = 1e-12);
        let gd = gradient_descent(&vs, &bias, 1.0);
        for (a, b) in v.iter().zip(&gd) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        let at = objective_value(&v, Some(&vs), &bias, 1.0).unwrap();
        let moved = [v[0] + 0.01, v[1]];
        assert!(objective_value(&moved, Some(&vs), &bias, 1.0).unwrap() > at);
    }

    #[test]
    fn degenerate_cases() {
        let mut store = VectorStore::new(2);
        store.push("s", &[1.0, 2.0]).unwrap();
        store.push("b", &[3.0, -2.0]).unwrap();
        let policy = LookupPolicy::default();
        let cfg = DeconfConfig::default();
        let vs = store.get("s");

        let v = deconflate_sense(vs, &list(&[]), Some("s"), &store, &policy, &cfg).unwrap();
        assert_eq!(v, vec![1.0, 2.0]);
        let v = deconflate_sense(vs, &list(&["b"]), Some("s"), &store, &policy, &cfg).unwrap();
        assert_eq!(v, vec![2.0, 0.0]);
        // the sense's own lemma is the α term, not a biasing word
        let v = deconflate_sense(vs, &list(&["s", "b"]), Some("s"), &store, &policy, &cfg).unwrap();
        let w1 = decay_weight(1, 2, 0.2);
        assert_abs_diff_eq!(v[0], (1.0 + 3.0 * w1) / (1.0 + w1), epsilon = 1e-12);
        // lemma out of vocabulary: biasing words alone
        let v =
            deconflate_sense(None, &list(&["zz", "b"]), Some("zz"), &store, &policy, &cfg).unwrap();
        assert_eq!(v, vec![3.0, -2.0]);
        assert!(matches!(
            deconflate_sense(
                None,
                &list(&["zz", "qq"]),
                Some("zz"),
                &store,
                &policy,
                &cfg
            ),
            Err(Error::Uncomputable(_))
        ));
    }

    #[test]
    fn objective_zero_cases() {
        let vs = [0.5, -1.0, 2.0];
        assert_eq!(objective_value(&vs, Some(&vs), &[], 1.0).unwrap(), 0.0);
        assert_eq!(
            objective_value(&vs, Some(&vs), &[(&vs, 0.3), (&vs, 7.0)], 1.0).unwrap(),
            0.0
        );
        assert!(objective_value(&vs, Some(&[1.0]), &[], 1.0).is_err());
    }

    #[test]
    fn synset_vector_cases() {
        let v = synset_vector(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(v, vec![0.6, 0.8]);
        let v = synset_vector(&[vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(v[0], h, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], h, epsilon = 1e-15);
        assert!(synset_vector(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).is_err());
        assert!(synset_vector(&[vec![0.0, 0.0]]).is_err());
        assert!(synset_vector::<Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn sense_key_round_trip() {
        let k: SenseKey = "cardinal_number#n#13741022".parse().unwrap();
        assert_eq!(k.lemma, "cardinal_number");
        assert_eq!(k.synset, SynsetId::new(Pos::Noun, 13741022));
        assert_eq!(k.to_string(), "cardinal_number#n#13741022");
        assert!("n#1".parse::<SenseKey>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DeconfConfig {
            alpha: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DeconfConfig {
            lambda: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(DeconfConfig {
            k: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn train_three_synsets_full_coverage() {
        let n = |i| SynsetId::new(Pos::Noun, i);
        let wn = WordNet::from_synsets(vec![
            Synset::new(n(1), ["a", "b"]).with_relation("@", n(2)),
            Synset::new(n(2), ["c"]).with_relation("@", n(3)),
            Synset::new(n(3), ["d"]),
        ])
        .unwrap();
        let mut store = VectorStore::new(2);
        for (w, v) in [
            ("a", [1.0, 0.0]),
            ("b", [0.0, 1.0]),
            ("c", [1.0, 1.0]),
            ("d", [-1.0, 0.5]),
        ] {
            store.push(w, &v).unwrap();
        }
        let t = train_all(
            &wn,
            &[],
            &store,
            &LookupPolicy::default(),
            &DeconfConfig::default(),
            1,
        )
        .unwrap();
        assert_eq!(t.coverage.computed_senses, 4);
        assert_eq!(t.coverage.computed_synsets, 3);
        assert!(t.coverage.missing.is_empty());
        for (_, v) in &t.space.synsets {
            assert_abs_diff_eq!(norm(v), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn export_layout() {
        let space = SenseSpace {
            dim: 2,
            senses: vec![(
                SenseKey {
                    lemma: "a".into(),
                    synset: SynsetId::new(Pos::Verb, 5),
                },
                vec![0.123456789, -2.0],
            )],
            synsets: vec![(SynsetId::new(Pos::Verb, 5), vec![1.0, 0.0])],
        };
        let mut buf = Vec::new();
        space.write_senses(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "1 2\na#v#00000005 0.123457 -2\n"
        );
        let mut buf = Vec::new();
        space.write_synsets(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1 2\nv#00000005 1 0\n");
    }

    proptest! {
        #[test]
        fn output_is_within_input_hull(
            lemma in prop::collection::vec(-5.0f64..5.0, 3),
            anchors in prop::collection::vec((prop::collection::vec(-5.0f64..5.0, 3), 0.0f64..1.0), 0..8),
            alpha in 0.01f64..3.0,
        ) {
            let bias: Vec<(&[f64], f64)> = anchors.iter().map(|(v, w)| (v.as_slice(), *w)).collect();
            let v = closed_form(Some(&lemma), &bias, alpha).unwrap();
            for d in 0..3 {
                let lo = anchors.iter().map(|a| a.0[d]).fold(lemma[d], f64::min);
                let hi = anchors.iter().map(|a| a.0[d]).fold(lemma[d], f64::max);
                prop_assert!(v[d] >= lo - 1e-12 && v[d] <= hi + 1e-12);
            }
        }
    }
}
